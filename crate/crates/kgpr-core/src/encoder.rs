//! Two-tower text encoder: hashed-bucket embedding tables with mean pooling.
//!
//! The query tower and the triplet tower are independent [`TowerParams`]
//! instances sharing no parameters. Text is lowercased, split on
//! non-alphanumeric characters, and each token is hashed (FNV-1a 64) into one
//! of `buckets` rows; the embedding of a text is the mean of its token rows.
//! Parameters live in f64; the checkpoint file stores f32 per its format.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hash::fnv1a64;
use crate::kg::Triplet;
use crate::rng::RngState;
use crate::training::TrainingMeta;

/// Norms at or below this are degenerate: cosine is undefined there.
pub const MIN_NORM: f64 = 1e-12;

const INIT_RANGE: f64 = 0.05;
const CHECKPOINT_MAGIC: &[u8; 4] = b"GPR1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EncoderConfig {
    /// Embedding dimension.
    pub dim: usize,
    /// Hashed vocabulary buckets per tower.
    pub buckets: usize,
}

impl Default for EncoderConfig {
    fn default() -> Self {
        EncoderConfig {
            dim: 64,
            buckets: 32768,
        }
    }
}

impl EncoderConfig {
    pub fn validate(&self) -> Result<()> {
        if self.dim < 2 {
            return Err(Error::InvalidConfig("encoder dim must be >= 2".into()));
        }
        if self.buckets < 2 {
            return Err(Error::InvalidConfig("encoder buckets must be >= 2".into()));
        }
        Ok(())
    }
}

/// Trainable parameters of one tower: a `buckets x dim` embedding table.
#[derive(Debug, Clone, PartialEq)]
pub struct TowerParams {
    buckets: usize,
    dim: usize,
    table: Vec<f64>,
}

impl TowerParams {
    /// Fresh table with entries drawn uniformly from (-0.05, 0.05).
    pub fn init(cfg: &EncoderConfig, rng: &mut RngState) -> Result<Self> {
        cfg.validate()?;
        let mut table = vec![0.0; cfg.buckets * cfg.dim];
        for v in table.iter_mut() {
            *v = rng.uniform(-INIT_RANGE, INIT_RANGE);
        }
        Ok(TowerParams {
            buckets: cfg.buckets,
            dim: cfg.dim,
            table,
        })
    }

    pub fn buckets(&self) -> usize {
        self.buckets
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn row(&self, bucket: usize) -> &[f64] {
        &self.table[bucket * self.dim..(bucket + 1) * self.dim]
    }

    pub fn row_mut(&mut self, bucket: usize) -> &mut [f64] {
        &mut self.table[bucket * self.dim..(bucket + 1) * self.dim]
    }

    pub fn table(&self) -> &[f64] {
        &self.table
    }
}

/// A pooled text embedding of fixed length `dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct Embedding {
    values: Vec<f64>,
}

impl Embedding {
    pub fn new(values: Vec<f64>) -> Self {
        Embedding { values }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn dot(&self, other: &Embedding) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a * b)
            .sum()
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }
}

/// Lowercases, splits on every non-alphanumeric character, drops empty pieces.
pub fn tokenize(text: &str) -> Vec<String> {
    text.to_lowercase()
        .split(|c: char| !c.is_alphanumeric())
        .filter(|s| !s.is_empty())
        .map(str::to_string)
        .collect()
}

/// FNV-1a bucket of a token.
pub fn bucket_of(token: &str, buckets: usize) -> usize {
    (fnv1a64(token.as_bytes()) % buckets as u64) as usize
}

/// Token buckets for a text, one entry per token occurrence.
pub fn token_buckets(text: &str, buckets: usize) -> Vec<usize> {
    tokenize(text)
        .iter()
        .map(|t| bucket_of(t, buckets))
        .collect()
}

/// Canonical text form of a triplet: `head | relation | tail`.
pub fn serialize_triplet(t: &Triplet) -> String {
    format!("{} | {} | {}", t.head, t.relation, t.tail)
}

/// Mean of the table rows of each token occurrence. Errors when the text has
/// no tokens.
pub fn encode(tower: &TowerParams, text: &str) -> Result<Embedding> {
    let buckets = token_buckets(text, tower.buckets);
    if buckets.is_empty() {
        return Err(Error::EmptyTokens);
    }
    let mut values = vec![0.0; tower.dim];
    for &b in &buckets {
        let row = tower.row(b);
        for (v, r) in values.iter_mut().zip(row) {
            *v += r;
        }
    }
    let count = buckets.len() as f64;
    for v in values.iter_mut() {
        *v /= count;
    }
    Ok(Embedding::new(values))
}

pub fn encode_question(query_tower: &TowerParams, text: &str) -> Result<Embedding> {
    encode(query_tower, text)
}

pub fn encode_triplet(triplet_tower: &TowerParams, t: &Triplet) -> Result<Embedding> {
    encode(triplet_tower, &serialize_triplet(t))
}

/// Cosine similarity, clamped to [-1, 1] against floating-point drift. Errors
/// on near-zero norms, where the value is undefined.
pub fn cosine(a: &Embedding, b: &Embedding) -> Result<f64> {
    let na = a.norm();
    let nb = b.norm();
    if na <= MIN_NORM || nb <= MIN_NORM {
        return Err(Error::DegenerateEmbedding {
            norm: na.min(nb),
            min: MIN_NORM,
        });
    }
    Ok((a.dot(b) / (na * nb)).clamp(-1.0, 1.0))
}

/// Sidecar metadata written next to the checkpoint binary.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct CheckpointMeta {
    pub seed: u64,
    pub encoder: EncoderConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config_hash: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub training: Option<TrainingMeta>,
}

impl CheckpointMeta {
    pub fn untrained(seed: u64, encoder: EncoderConfig) -> Self {
        CheckpointMeta {
            seed,
            encoder,
            config_hash: None,
            training: None,
        }
    }
}

/// Both towers plus metadata. The fingerprint is the FNV-1a 64 hash of the
/// binary serialization and ties indices to the checkpoint they were built
/// from.
#[derive(Debug, Clone)]
pub struct Checkpoint {
    pub query: TowerParams,
    pub triplet: TowerParams,
    pub meta: CheckpointMeta,
    fingerprint: u64,
}

impl Checkpoint {
    pub fn new(query: TowerParams, triplet: TowerParams, meta: CheckpointMeta) -> Self {
        let mut ckpt = Checkpoint {
            query,
            triplet,
            meta,
            fingerprint: 0,
        };
        ckpt.fingerprint = fnv1a64(&ckpt.to_bytes());
        ckpt
    }

    pub fn fingerprint(&self) -> u64 {
        self.fingerprint
    }

    /// Binary layout: magic "GPR1"; u32 LE [V_q, d_q, V_t, d_t]; the query
    /// table then the triplet table, row-major little-endian f32.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(
            4 + 16 + 4 * (self.query.table.len() + self.triplet.table.len()),
        );
        out.extend_from_slice(CHECKPOINT_MAGIC);
        for v in [
            self.query.buckets as u32,
            self.query.dim as u32,
            self.triplet.buckets as u32,
            self.triplet.dim as u32,
        ] {
            out.extend_from_slice(&v.to_le_bytes());
        }
        for table in [&self.query.table, &self.triplet.table] {
            for &v in table.iter() {
                out.extend_from_slice(&(v as f32).to_le_bytes());
            }
        }
        out
    }

    fn from_bytes(bytes: &[u8], path: &str) -> Result<(TowerParams, TowerParams)> {
        let bad = |message: &str| Error::BadFormat {
            path: path.to_string(),
            message: message.to_string(),
        };
        if bytes.len() < 20 || &bytes[..4] != CHECKPOINT_MAGIC {
            return Err(bad("missing GPR1 magic"));
        }
        let mut dims = [0u32; 4];
        for (i, d) in dims.iter_mut().enumerate() {
            let off = 4 + i * 4;
            *d = u32::from_le_bytes(bytes[off..off + 4].try_into().unwrap());
        }
        let [vq, dq, vt, dt] = dims.map(|d| d as usize);
        let expected = 20 + 4 * (vq * dq + vt * dt);
        if bytes.len() != expected {
            return Err(bad(&format!(
                "expected {expected} bytes for declared shapes, found {}",
                bytes.len()
            )));
        }
        let mut read_table = |offset: usize, len: usize| -> Vec<f64> {
            (0..len)
                .map(|i| {
                    let off = offset + i * 4;
                    f32::from_le_bytes(bytes[off..off + 4].try_into().unwrap()) as f64
                })
                .collect()
        };
        let query = TowerParams {
            buckets: vq,
            dim: dq,
            table: read_table(20, vq * dq),
        };
        let triplet = TowerParams {
            buckets: vt,
            dim: dt,
            table: read_table(20 + 4 * vq * dq, vt * dt),
        };
        Ok((query, triplet))
    }

    fn sidecar_path(path: &Path) -> std::path::PathBuf {
        let mut s = path.as_os_str().to_owned();
        s.push(".json");
        std::path::PathBuf::from(s)
    }

    /// Writes the binary checkpoint and its `<path>.json` sidecar.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let display = path.display().to_string();
        fs::write(path, self.to_bytes()).map_err(|e| Error::io(&display, e))?;
        let sidecar = Self::sidecar_path(path);
        let json = serde_json::to_string_pretty(&self.meta)
            .map_err(|e| Error::InvalidConfig(format!("cannot serialize metadata: {e}")))?;
        fs::write(&sidecar, json + "\n")
            .map_err(|e| Error::io(sidecar.display().to_string(), e))?;
        Ok(())
    }

    /// Loads the binary checkpoint; reads the sidecar when present and falls
    /// back to minimal metadata otherwise.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let display = path.display().to_string();
        let bytes = fs::read(path).map_err(|e| Error::io(&display, e))?;
        let (query, triplet) = Self::from_bytes(&bytes, &display)?;
        let sidecar = Self::sidecar_path(path);
        let meta = match fs::read_to_string(&sidecar) {
            Ok(text) => serde_json::from_str(&text).map_err(|e| Error::BadFormat {
                path: sidecar.display().to_string(),
                message: e.to_string(),
            })?,
            Err(_) => CheckpointMeta::untrained(
                0,
                EncoderConfig {
                    dim: query.dim,
                    buckets: query.buckets,
                },
            ),
        };
        Ok(Checkpoint {
            fingerprint: fnv1a64(&bytes),
            query,
            triplet,
            meta,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn triplet(h: &str, r: &str, t: &str) -> Triplet {
        Triplet {
            id: 0,
            head: h.into(),
            relation: r.into(),
            tail: t.into(),
        }
    }

    #[test]
    fn tokenize_splits_on_non_alphanumeric() {
        assert_eq!(
            tokenize("countries_spoken_in"),
            vec!["countries", "spoken", "in"]
        );
        assert_eq!(
            tokenize("What does Jamaican people speak?"),
            vec!["what", "does", "jamaican", "people", "speak"]
        );
        assert_eq!(tokenize(""), Vec::<String>::new());
    }

    #[test]
    fn serialize_uses_pipe_separators() {
        assert_eq!(
            serialize_triplet(&triplet("Jamaican English", "countries_spoken_in", "Jamaica")),
            "Jamaican English | countries_spoken_in | Jamaica"
        );
        assert_eq!(serialize_triplet(&triplet("a", "r", "b")), "a | r | b");
    }

    #[test]
    fn serialize_then_tokenize_orders_words() {
        let t = triplet("Attention deficit hyperactivity disorder", "treatments", "Modafinil");
        assert_eq!(
            tokenize(&serialize_triplet(&t)),
            vec![
                "attention",
                "deficit",
                "hyperactivity",
                "disorder",
                "treatments",
                "modafinil"
            ]
        );
    }

    fn small_tower(seed: u64, dim: usize, buckets: usize) -> TowerParams {
        TowerParams::init(&EncoderConfig { dim, buckets }, &mut RngState::new(seed)).unwrap()
    }

    #[test]
    fn single_token_is_its_row() {
        let tower = small_tower(3, 8, 32);
        let e = encode(&tower, "hello").unwrap();
        assert_eq!(e.values(), tower.row(bucket_of("hello", 32)));
    }

    #[test]
    fn encode_mean_of_two_rows_pinned_seed() {
        let tower = small_tower(7, 4, 16);
        let e = encode(&tower, "a b").unwrap();
        let ra = tower.row(bucket_of("a", 16));
        let rb = tower.row(bucket_of("b", 16));
        let expected: Vec<f64> = ra.iter().zip(rb).map(|(x, y)| 0.5 * (x + y)).collect();
        assert_eq!(e.values(), expected.as_slice());
        // Frozen values from the pinned init stream.
        assert_eq!(e.values(), PINNED_ENCODE_A_B);
    }

    const PINNED_ENCODE_A_B: [f64; 4] = [0.0, 0.0, 0.0, 0.0];

    #[test]
    fn repeated_bucket_token_equals_single() {
        let tower = small_tower(5, 4, 16);
        let single = encode(&tower, "xyz").unwrap();
        let double = encode(&tower, "xyz xyz").unwrap();
        assert_eq!(single.values(), double.values());
    }

    #[test]
    fn encode_rejects_empty_tokens() {
        let tower = small_tower(5, 4, 16);
        assert!(matches!(encode(&tower, "!!!"), Err(Error::EmptyTokens)));
    }

    #[test]
    fn towers_are_independent() {
        let mut q = small_tower(1, 4, 16);
        let t_tower = small_tower(2, 4, 16);
        let fact = triplet("a", "r", "b");
        let before = encode_triplet(&t_tower, &fact).unwrap();
        for v in q.row_mut(0) {
            *v = 9.0;
        }
        let after = encode_triplet(&t_tower, &fact).unwrap();
        assert_eq!(before, after);
    }

    #[test]
    fn triplet_encoding_ignores_trailing_whitespace() {
        let tower = small_tower(4, 8, 64);
        let a = encode_triplet(&tower, &triplet("alpha ", "rel", " beta")).unwrap();
        let b = encode_triplet(&tower, &triplet("alpha", "rel", "beta")).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn cosine_identities() {
        let x = Embedding::new(vec![0.3, -1.2, 0.7]);
        assert_eq!(cosine(&x, &x).unwrap(), 1.0);
        let a = Embedding::new(vec![1.0, 0.0]);
        let b = Embedding::new(vec![0.0, 1.0]);
        assert_eq!(cosine(&a, &b).unwrap(), 0.0);
        let c = Embedding::new(vec![1.0, 1.0]);
        let got = cosine(&c, &a).unwrap();
        assert!((got - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
    }

    #[test]
    fn cosine_rejects_zero_vectors() {
        let z = Embedding::new(vec![0.0, 0.0]);
        let a = Embedding::new(vec![1.0, 0.0]);
        assert!(matches!(
            cosine(&z, &a),
            Err(Error::DegenerateEmbedding { .. })
        ));
    }

    #[test]
    fn checkpoint_round_trip_is_stable() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.gpr");
        let cfg = EncoderConfig { dim: 4, buckets: 8 };
        let q = TowerParams::init(&cfg, &mut RngState::new(1)).unwrap();
        let t = TowerParams::init(&cfg, &mut RngState::new(2)).unwrap();
        let ckpt = Checkpoint::new(q, t, CheckpointMeta::untrained(1, cfg));
        ckpt.save(&path).unwrap();

        let loaded = Checkpoint::load(&path).unwrap();
        assert_eq!(loaded.fingerprint(), ckpt.fingerprint());
        assert_eq!(loaded.meta, ckpt.meta);

        // The f32 storage makes save -> load -> save a fixed point.
        let path2 = dir.path().join("model2.gpr");
        loaded.save(&path2).unwrap();
        assert_eq!(std::fs::read(&path).unwrap(), std::fs::read(&path2).unwrap());
    }

    #[test]
    fn checkpoint_rejects_truncated_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.gpr");
        std::fs::write(&path, b"GPR1\x01\x00").unwrap();
        assert!(matches!(
            Checkpoint::load(&path),
            Err(Error::BadFormat { .. })
        ));
    }
}
