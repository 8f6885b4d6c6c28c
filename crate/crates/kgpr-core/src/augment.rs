//! Question/triplet alignment construction.
//!
//! For each triplet we mask one entity, phrase the masked fact as a natural
//! language question (template or external LLM), then pair the question with
//! the exact triplet, a 1-hop neighbor (weak positive), and an entity-disjoint
//! negative. The resulting quadruples are the pretraining dataset.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kg::{KnowledgeGraph, Triplet, TripletId};
use crate::llm::LlmGenerator;
use crate::rng::RngState;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MaskSlot {
    Head,
    Tail,
}

/// A triplet with one entity replaced by `[MASK]`.
#[derive(Debug, Clone, PartialEq)]
pub struct MaskedTriplet {
    pub source: Triplet,
    pub masked_slot: MaskSlot,
}

impl MaskedTriplet {
    /// Text rendering in the canonical triplet form:
    /// `[MASK] | r | t` or `h | r | [MASK]`.
    pub fn render(&self) -> String {
        match self.masked_slot {
            MaskSlot::Head => format!("[MASK] | {} | {}", self.source.relation, self.source.tail),
            MaskSlot::Tail => format!("{} | {} | [MASK]", self.source.head, self.source.relation),
        }
    }
}

pub fn mask_triplet(t: &Triplet, slot: MaskSlot) -> MaskedTriplet {
    MaskedTriplet {
        source: t.clone(),
        masked_slot: slot,
    }
}

/// A generated question tied to the triplet it was derived from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticQuestion {
    pub text: String,
    pub source_triplet_id: TripletId,
    pub masked_slot: MaskSlot,
    pub generator: String,
}

/// One pretraining quadruple: question, exact triplet, neighbor, negative.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingExample {
    pub question: SyntheticQuestion,
    pub positive_id: TripletId,
    pub neighbor_id: TripletId,
    pub negative_id: TripletId,
}

/// Question source. The template is fully deterministic; the external LLM
/// fails cleanly rather than silently substituting.
pub enum QuestionGenerator {
    Template,
    ExternalLlm(LlmGenerator),
}

impl QuestionGenerator {
    pub fn name(&self) -> &'static str {
        match self {
            QuestionGenerator::Template => "template",
            QuestionGenerator::ExternalLlm(_) => "external-llm",
        }
    }

    pub fn generate(&self, masked: &MaskedTriplet) -> Result<SyntheticQuestion> {
        match self {
            QuestionGenerator::Template => Ok(template_question(masked)),
            QuestionGenerator::ExternalLlm(client) => client.generate(masked),
        }
    }
}

/// Relation name with every non-alphanumeric character replaced by a single
/// space, runs collapsed: `countries_spoken_in` -> `countries spoken in`.
fn relation_words(relation: &str) -> String {
    relation
        .split(|c: char| !c.is_alphanumeric())
        .filter(|s| !s.is_empty())
        .collect::<Vec<_>>()
        .join(" ")
}

fn template_question(masked: &MaskedTriplet) -> SyntheticQuestion {
    let words = relation_words(&masked.source.relation);
    let text = match masked.masked_slot {
        MaskSlot::Tail => format!("What is the {} of {}?", words, masked.source.head),
        MaskSlot::Head => format!("What has {} {}?", words, masked.source.tail),
    };
    SyntheticQuestion {
        text,
        source_triplet_id: masked.source.id,
        masked_slot: masked.masked_slot,
        generator: "template".into(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetConfig {
    /// Neighbor draws per question (without replacement).
    pub neighbors_per_question: usize,
    /// Negative draws per drawn neighbor.
    pub negatives_per_question: usize,
    /// Mask slots generated per triplet, in order.
    pub mask_slots: Vec<MaskSlot>,
    /// Optional cap on how many triplets (by id order) are processed.
    pub triplet_cap: Option<usize>,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        DatasetConfig {
            neighbors_per_question: 1,
            negatives_per_question: 1,
            mask_slots: vec![MaskSlot::Head, MaskSlot::Tail],
            triplet_cap: None,
        }
    }
}

impl DatasetConfig {
    pub fn validate(&self) -> Result<()> {
        if self.neighbors_per_question < 1 || self.negatives_per_question < 1 {
            return Err(Error::InvalidConfig(
                "neighbors_per_question and negatives_per_question must be >= 1".into(),
            ));
        }
        if self.mask_slots.is_empty() {
            return Err(Error::InvalidConfig("mask_slots must be non-empty".into()));
        }
        let mut sorted = self.mask_slots.clone();
        sorted.sort_by_key(|s| *s as u8);
        sorted.dedup();
        if sorted.len() != self.mask_slots.len() {
            return Err(Error::InvalidConfig("mask_slots contains duplicates".into()));
        }
        Ok(())
    }
}

/// Why triplets produced no examples.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkipReport {
    /// Triplets with an empty 1-hop neighborhood.
    pub no_neighbor: usize,
    /// Triplets that had neighbors but for which every negative draw failed.
    pub no_negative: usize,
    /// Individual quadruples dropped because one negative draw failed.
    pub dropped_quadruples: usize,
}

/// Builds the quadruple dataset over the whole graph (or the capped prefix).
///
/// Per triplet and per configured mask slot: one question, then
/// `neighbors_per_question` neighbor draws times `negatives_per_question`
/// negative draws. Deterministic under the seed for the template generator.
pub fn build_dataset(
    graph: &KnowledgeGraph,
    generator: &QuestionGenerator,
    cfg: &DatasetConfig,
    rng: &mut RngState,
) -> Result<(Vec<TrainingExample>, SkipReport)> {
    cfg.validate()?;
    if graph.is_empty() {
        return Err(Error::EmptyGraph);
    }
    let cap = cfg.triplet_cap.unwrap_or(graph.len()).min(graph.len());
    let mut examples = Vec::new();
    let mut skips = SkipReport::default();

    for t in &graph.triplets()[..cap] {
        let nbrs = graph.neighbors(t)?;
        if nbrs.is_empty() {
            skips.no_neighbor += 1;
            continue;
        }
        let produced_before = examples.len();
        for &slot in &cfg.mask_slots {
            let question = generator.generate(&mask_triplet(t, slot))?;
            let draw_count = cfg.neighbors_per_question.min(nbrs.len());
            let picks = rng.sample_distinct(nbrs.len(), draw_count);
            for pick in picks {
                let neighbor_id = nbrs[pick];
                for _ in 0..cfg.negatives_per_question {
                    match graph.sample_negative(t, rng)? {
                        Some(neg) => examples.push(TrainingExample {
                            question: question.clone(),
                            positive_id: t.id,
                            neighbor_id,
                            negative_id: neg.id,
                        }),
                        None => skips.dropped_quadruples += 1,
                    }
                }
            }
        }
        if examples.len() == produced_before {
            skips.no_negative += 1;
        }
    }

    if examples.is_empty() {
        return Err(Error::EmptyDataset(format!(
            "all {} triplets were skipped ({} without neighbors, {} without negatives)",
            cap, skips.no_neighbor, skips.no_negative
        )));
    }
    Ok((examples, skips))
}

/// Flat JSONL record; the on-disk schema.
#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DatasetRecord {
    question: String,
    source_triplet_id: TripletId,
    masked_slot: MaskSlot,
    generator: String,
    positive_id: TripletId,
    neighbor_id: TripletId,
    negative_id: TripletId,
}

impl From<&TrainingExample> for DatasetRecord {
    fn from(ex: &TrainingExample) -> Self {
        DatasetRecord {
            question: ex.question.text.clone(),
            source_triplet_id: ex.question.source_triplet_id,
            masked_slot: ex.question.masked_slot,
            generator: ex.question.generator.clone(),
            positive_id: ex.positive_id,
            neighbor_id: ex.neighbor_id,
            negative_id: ex.negative_id,
        }
    }
}

impl From<DatasetRecord> for TrainingExample {
    fn from(rec: DatasetRecord) -> Self {
        TrainingExample {
            question: SyntheticQuestion {
                text: rec.question,
                source_triplet_id: rec.source_triplet_id,
                masked_slot: rec.masked_slot,
                generator: rec.generator,
            },
            positive_id: rec.positive_id,
            neighbor_id: rec.neighbor_id,
            negative_id: rec.negative_id,
        }
    }
}

/// One JSON object per line.
pub fn write_dataset(examples: &[TrainingExample], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let display = path.display().to_string();
    let file = File::create(path).map_err(|e| Error::io(&display, e))?;
    let mut w = BufWriter::new(file);
    for ex in examples {
        let line = serde_json::to_string(&DatasetRecord::from(ex))
            .map_err(|e| Error::InvalidConfig(format!("cannot serialize example: {e}")))?;
        writeln!(w, "{line}").map_err(|e| Error::io(&display, e))?;
    }
    w.flush().map_err(|e| Error::io(&display, e))
}

/// Reads a JSONL dataset, reporting schema violations with their line number.
pub fn read_dataset(path: impl AsRef<Path>) -> Result<Vec<TrainingExample>> {
    let path = path.as_ref();
    let display = path.display().to_string();
    let file = File::open(path).map_err(|e| Error::io(&display, e))?;
    let reader = BufReader::new(file);
    let mut examples = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io(&display, e))?;
        if line.is_empty() {
            continue;
        }
        let rec: DatasetRecord =
            serde_json::from_str(&line).map_err(|e| Error::Schema {
                path: display.clone(),
                line: idx + 1,
                message: e.to_string(),
            })?;
        if rec.question.is_empty() {
            return Err(Error::Schema {
                path: display,
                line: idx + 1,
                message: "question text is empty".into(),
            });
        }
        examples.push(rec.into());
    }
    Ok(examples)
}
