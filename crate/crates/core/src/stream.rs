//! Counter-based random substreams.
//!
//! Every random stream in the crate is keyed by `(master_seed, rep_index, tag)`.
//! The key is hashed with SHA-256 into a ChaCha8 seed, so streams are
//! independent of execution order and stable across releases.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

/// The generator used for all simulation randomness.
pub type SimRng = ChaCha8Rng;

/// Seed of a single replication. All of a replication's substreams are
/// derived from it by tag.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(transparent)]
pub struct Seed(pub u64);

impl Seed {
    /// Replication seed for replication `rep_index` of a batch.
    pub fn replication(master_seed: u64, rep_index: u64) -> Seed {
        let mut hasher = Sha256::new();
        hasher.update(b"cabsim/replication");
        hasher.update(master_seed.to_le_bytes());
        hasher.update(rep_index.to_le_bytes());
        let digest = hasher.finalize();
        let mut word = [0u8; 8];
        word.copy_from_slice(&digest[..8]);
        Seed(u64::from_le_bytes(word))
    }

    /// Substream named `tag`.
    pub fn stream(self, tag: &str) -> SimRng {
        let mut hasher = Sha256::new();
        hasher.update(b"cabsim/stream");
        hasher.update(self.0.to_le_bytes());
        hasher.update((tag.len() as u64).to_le_bytes());
        hasher.update(tag.as_bytes());
        let digest = hasher.finalize();
        let mut key = [0u8; 32];
        key.copy_from_slice(&digest);
        ChaCha8Rng::from_seed(key)
    }

    /// Substream named `tag` followed by a numeric index, e.g. per-arm streams.
    pub fn indexed_stream(self, tag: &str, index: u64) -> SimRng {
        self.stream(&format!("{tag}/{index}"))
    }
}

/// Substream `stream_tag` of replication `rep_index` under `master_seed`.
pub fn derive_stream(master_seed: u64, rep_index: u64, stream_tag: &str) -> SimRng {
    Seed::replication(master_seed, rep_index).stream(stream_tag)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn first_draws(mut rng: SimRng, count: usize) -> Vec<u64> {
        (0..count).map(|_| rng.random::<u64>()).collect()
    }

    #[test]
    fn same_key_same_stream() {
        let a = first_draws(derive_stream(7, 3, "arm"), 1000);
        let b = first_draws(derive_stream(7, 3, "arm"), 1000);
        assert_eq!(a, b);
    }

    #[test]
    fn distinct_reps_and_tags_differ() {
        let base = first_draws(derive_stream(7, 0, "arm"), 1000);
        assert_ne!(base, first_draws(derive_stream(7, 1, "arm"), 1000));
        assert_ne!(base, first_draws(derive_stream(7, 0, "policy"), 1000));
        assert_ne!(base, first_draws(derive_stream(8, 0, "arm"), 1000));
    }

    #[test]
    fn tag_framing_is_unambiguous() {
        let seed = Seed(11);
        let a = first_draws(seed.indexed_stream("arm", 12), 8);
        let b = first_draws(seed.indexed_stream("arm/1", 2), 8);
        // "arm/12" vs "arm/1/2"
        assert_ne!(a, b);
    }

    #[test]
    fn substreams_are_uncorrelated() {
        // Pair the first uniform of streams (rep, "x") and (rep, "y") over 10^4 reps.
        let reps = 10_000;
        let (mut sx, mut sy, mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for rep in 0..reps {
            let x: f64 = derive_stream(42, rep, "x").random();
            let y: f64 = derive_stream(42, rep, "y").random();
            sx += x;
            sy += y;
            sxx += x * x;
            syy += y * y;
            sxy += x * y;
        }
        let n = reps as f64;
        let cov = sxy / n - (sx / n) * (sy / n);
        let vx = sxx / n - (sx / n).powi(2);
        let vy = syy / n - (sy / n).powi(2);
        let corr = cov / (vx * vy).sqrt();
        assert!(corr.abs() < 0.05, "corr = {corr}");
    }

    #[test]
    fn frozen_replication_seed() {
        // Stability across versions: changing the derivation changes this value.
        assert_eq!(Seed::replication(0, 0), Seed(4_537_633_516_781_074_813));
        assert_eq!(Seed::replication(0, 1), Seed(4_095_247_843_481_871_561));
    }
}
