//! Knowledge-graph data model: triplet store, TSV ingestion, entity adjacency
//! index, and the neighbor/negative sampling primitives the dataset builder
//! relies on.

use std::collections::{HashMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::RngState;

/// Dense 0-based triplet id, assigned in load order.
pub type TripletId = u32;

/// One (head, relation, tail) fact. Fields are non-empty strings; `id` equals
/// the triplet's position in its graph.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Triplet {
    pub id: TripletId,
    pub head: String,
    pub relation: String,
    pub tail: String,
}

impl Triplet {
    /// Entity-set overlap test. Relations are names of edges, not entities,
    /// and never participate.
    pub fn shares_entity(&self, other: &Triplet) -> bool {
        self.head == other.head
            || self.head == other.tail
            || self.tail == other.head
            || self.tail == other.tail
    }
}

/// Immutable triplet store with an exact entity -> triplet-ids index.
///
/// Duplicate (head, relation, tail) tuples in the input are dropped and
/// counted; ids are assigned after deduplication.
#[derive(Debug, Clone, PartialEq)]
pub struct KnowledgeGraph {
    triplets: Vec<Triplet>,
    entity_index: HashMap<String, Vec<TripletId>>,
    entity_count: usize,
    relation_count: usize,
    duplicates_dropped: usize,
}

impl KnowledgeGraph {
    /// Builds a graph from (head, relation, tail) strings, dropping exact
    /// duplicates. Errors if any field is empty or nothing survives.
    pub fn from_triples<I, S>(triples: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, S, S)>,
        S: Into<String>,
    {
        let mut seen: HashSet<(String, String, String)> = HashSet::new();
        let mut triplets: Vec<Triplet> = Vec::new();
        let mut duplicates_dropped = 0usize;
        for (head, relation, tail) in triples {
            let (head, relation, tail) = (head.into(), relation.into(), tail.into());
            if head.is_empty() || relation.is_empty() || tail.is_empty() {
                return Err(Error::InvalidConfig(
                    "triplet fields must be non-empty".into(),
                ));
            }
            let key = (head.clone(), relation.clone(), tail.clone());
            if !seen.insert(key) {
                duplicates_dropped += 1;
                continue;
            }
            let id = triplets.len() as TripletId;
            triplets.push(Triplet {
                id,
                head,
                relation,
                tail,
            });
        }
        if triplets.is_empty() {
            return Err(Error::EmptyGraph);
        }
        Ok(Self::index_triplets(triplets, duplicates_dropped))
    }

    fn index_triplets(triplets: Vec<Triplet>, duplicates_dropped: usize) -> Self {
        let mut entity_index: HashMap<String, Vec<TripletId>> = HashMap::new();
        let mut relations: HashSet<&str> = HashSet::new();
        for t in &triplets {
            entity_index.entry(t.head.clone()).or_default().push(t.id);
            if t.tail != t.head {
                entity_index.entry(t.tail.clone()).or_default().push(t.id);
            }
            relations.insert(&t.relation);
        }
        let entity_count = entity_index.len();
        let relation_count = relations.len();
        KnowledgeGraph {
            triplets,
            entity_index,
            entity_count,
            relation_count,
            duplicates_dropped,
        }
    }

    /// Loads a UTF-8 TSV file: one `head<TAB>relation<TAB>tail` per line, no
    /// header. Empty lines are skipped; any other arity is an error carrying
    /// the 1-based line number.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let display = path.display().to_string();
        let file = File::open(path).map_err(|e| Error::io(&display, e))?;
        let reader = BufReader::new(file);
        let mut rows: Vec<(String, String, String)> = Vec::new();
        for (idx, line) in reader.lines().enumerate() {
            let line = line.map_err(|e| Error::io(&display, e))?;
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != 3 {
                return Err(Error::MalformedLine {
                    path: display,
                    line: idx + 1,
                    message: format!("expected 3 tab-separated fields, found {}", fields.len()),
                });
            }
            if fields.iter().any(|f| f.is_empty()) {
                return Err(Error::MalformedLine {
                    path: display,
                    line: idx + 1,
                    message: "empty field".into(),
                });
            }
            rows.push((
                fields[0].to_string(),
                fields[1].to_string(),
                fields[2].to_string(),
            ));
        }
        Self::from_triples(rows)
    }

    /// Writes the graph back out in the TSV input format.
    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let display = path.display().to_string();
        let file = File::create(path).map_err(|e| Error::io(&display, e))?;
        let mut w = BufWriter::new(file);
        for t in &self.triplets {
            writeln!(w, "{}\t{}\t{}", t.head, t.relation, t.tail)
                .map_err(|e| Error::io(&display, e))?;
        }
        w.flush().map_err(|e| Error::io(&display, e))
    }

    pub fn len(&self) -> usize {
        self.triplets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triplets.is_empty()
    }

    pub fn triplets(&self) -> &[Triplet] {
        &self.triplets
    }

    pub fn triplet(&self, id: TripletId) -> Option<&Triplet> {
        self.triplets.get(id as usize)
    }

    pub fn entity_count(&self) -> usize {
        self.entity_count
    }

    pub fn relation_count(&self) -> usize {
        self.relation_count
    }

    pub fn duplicates_dropped(&self) -> usize {
        self.duplicates_dropped
    }

    fn require_member(&self, t: &Triplet) -> Result<()> {
        match self.triplet(t.id) {
            Some(stored) if stored == t => Ok(()),
            _ => Err(Error::UnknownTriplet { id: t.id }),
        }
    }

    /// Ids of triplets sharing at least one entity with `t`, excluding `t`
    /// itself, in ascending order.
    pub fn neighbors(&self, t: &Triplet) -> Result<Vec<TripletId>> {
        self.require_member(t)?;
        let mut ids: Vec<TripletId> = Vec::new();
        for entity in [&t.head, &t.tail] {
            if let Some(postings) = self.entity_index.get(entity) {
                ids.extend_from_slice(postings);
            }
        }
        ids.sort_unstable();
        ids.dedup();
        ids.retain(|&i| i != t.id);
        Ok(ids)
    }

    /// Uniformly samples triplet ids, rejecting any that share an entity with
    /// `t`. Returns the first acceptance, or `None` once 100 draws have been
    /// rejected (pathological graphs where disjoint triplets are rare or
    /// absent).
    pub fn sample_negative(&self, t: &Triplet, rng: &mut RngState) -> Result<Option<&Triplet>> {
        self.require_member(t)?;
        for _ in 0..100 {
            let candidate = &self.triplets[rng.next_below(self.len() as u64) as usize];
            if !candidate.shares_entity(t) {
                return Ok(Some(candidate));
            }
        }
        Ok(None)
    }
}

/// Uniformly sampled synthetic graph: `triplet_count` distinct (h, r, t)
/// combinations with `h != t`, over entities `e0..e{entities-1}` and relations
/// `r0..r{relations-1}`. Deterministic under the seed.
pub fn generate_synthetic_graph(
    entities: usize,
    relations: usize,
    triplet_count: usize,
    rng: &mut RngState,
) -> Result<KnowledgeGraph> {
    if entities < 1 || relations < 1 || triplet_count < 1 {
        return Err(Error::InvalidConfig(
            "entities, relations, and triplets must all be >= 1".into(),
        ));
    }
    let max = entities as u64 * (entities as u64 - 1) * relations as u64;
    if triplet_count as u64 > max {
        return Err(Error::InfeasibleGraph {
            requested: triplet_count as u64,
            max,
        });
    }

    let mut combos: Vec<(u32, u32, u32)> = Vec::with_capacity(triplet_count);
    if (triplet_count as u64) * 2 <= max {
        // Sparse regime: rejection sampling succeeds in <= 2 expected draws.
        let mut seen: HashSet<(u32, u32, u32)> = HashSet::with_capacity(triplet_count);
        while combos.len() < triplet_count {
            let h = rng.next_below(entities as u64) as u32;
            // Draw the tail from the remaining entities so self-loops never occur.
            let mut t = rng.next_below(entities as u64 - 1) as u32;
            if t >= h {
                t += 1;
            }
            let r = rng.next_below(relations as u64) as u32;
            if seen.insert((h, r, t)) {
                combos.push((h, r, t));
            }
        }
    } else {
        // Dense regime: enumerate every combination and take a random prefix.
        let mut all: Vec<(u32, u32, u32)> = Vec::with_capacity(max as usize);
        for h in 0..entities as u32 {
            for r in 0..relations as u32 {
                for t in 0..entities as u32 {
                    if t != h {
                        all.push((h, r, t));
                    }
                }
            }
        }
        for i in 0..triplet_count {
            let j = i + rng.next_below((all.len() - i) as u64) as usize;
            all.swap(i, j);
        }
        all.truncate(triplet_count);
        combos = all;
    }

    KnowledgeGraph::from_triples(
        combos
            .into_iter()
            .map(|(h, r, t)| (format!("e{h}"), format!("r{r}"), format!("e{t}"))),
    )
}
