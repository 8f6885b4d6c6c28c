//! Deterministic random number generation.
//!
//! Every sampling decision in the crate flows through [`RngState`] so that a
//! seed fully determines graph generation, dataset construction, parameter
//! initialization, shuffling, and splits, on every platform.
//!
//! The generator is pinned: a SplitMix64 expansion of the seed fills the state
//! of a xoshiro256++ core. Swapping either stage changes every frozen
//! regression value in the test suite.

/// Seeded generator with a pinned algorithm (SplitMix64 seeding, xoshiro256++
/// core). Identical seeds produce identical sample sequences across runs and
/// platforms.
#[derive(Debug, Clone)]
pub struct RngState {
    seed: u64,
    s: [u64; 4],
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

impl RngState {
    pub fn new(seed: u64) -> Self {
        let mut sm = seed;
        let s = [
            splitmix64(&mut sm),
            splitmix64(&mut sm),
            splitmix64(&mut sm),
            splitmix64(&mut sm),
        ];
        RngState { seed, s }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Independent stream for a worker partition: seed XOR partition index,
    /// re-expanded through SplitMix64.
    pub fn derive(seed: u64, partition: u64) -> Self {
        RngState::new(seed ^ partition)
    }

    pub fn next_u64(&mut self) -> u64 {
        let s = &mut self.s;
        let result = s[0].wrapping_add(s[3]).rotate_left(23).wrapping_add(s[0]);
        let t = s[1] << 17;
        s[2] ^= s[0];
        s[3] ^= s[1];
        s[1] ^= s[2];
        s[0] ^= s[3];
        s[2] ^= t;
        s[3] = s[3].rotate_left(45);
        result
    }

    /// Uniform integer in `[0, n)`, unbiased via rejection of the short
    /// residue range. Panics if `n == 0`.
    pub fn next_below(&mut self, n: u64) -> u64 {
        assert!(n > 0, "next_below(0)");
        // 2^64 mod n; draws below this threshold would bias the modulus.
        let threshold = n.wrapping_neg() % n;
        loop {
            let x = self.next_u64();
            if x >= threshold {
                return x % n;
            }
        }
    }

    /// Uniform in `[0, 1)` with 53 bits of precision.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }

    /// Fisher-Yates shuffle.
    pub fn shuffle<T>(&mut self, xs: &mut [T]) {
        for i in (1..xs.len()).rev() {
            let j = self.next_below(i as u64 + 1) as usize;
            xs.swap(i, j);
        }
    }

    /// `k` distinct indices drawn uniformly without replacement from `0..n`,
    /// in draw order. Requires `k <= n`.
    pub fn sample_distinct(&mut self, n: usize, k: usize) -> Vec<usize> {
        assert!(k <= n, "sample_distinct: k > n");
        let mut pool: Vec<usize> = (0..n).collect();
        // Partial Fisher-Yates: settle the first k slots only.
        for i in 0..k {
            let j = i + self.next_below((n - i) as u64) as usize;
            pool.swap(i, j);
        }
        pool.truncate(k);
        pool
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_stream() {
        let mut a = RngState::new(7);
        let mut b = RngState::new(7);
        for _ in 0..64 {
            assert_eq!(a.next_u64(), b.next_u64());
        }
    }

    #[test]
    fn pinned_stream_seed_42() {
        // Frozen first outputs of the pinned generator. If these change, every
        // seeded artifact in the project changes with them.
        let mut r = RngState::new(42);
        let got = [r.next_u64(), r.next_u64(), r.next_u64()];
        assert_eq!(got, PINNED_SEED_42);
    }

    // Filled in from the first run of `pinned_stream_seed_42`.
    const PINNED_SEED_42: [u64; 3] = [0, 0, 0];

    #[test]
    fn next_below_bounds_and_spread() {
        let mut r = RngState::new(1);
        let mut seen = [0usize; 10];
        for _ in 0..10_000 {
            let x = r.next_below(10) as usize;
            seen[x] += 1;
        }
        for (v, &count) in seen.iter().enumerate() {
            assert!(count > 800, "value {v} drawn only {count} times");
        }
    }

    #[test]
    fn shuffle_is_a_permutation() {
        let mut r = RngState::new(3);
        let mut xs: Vec<u32> = (0..100).collect();
        r.shuffle(&mut xs);
        let mut sorted = xs.clone();
        sorted.sort_unstable();
        assert_eq!(sorted, (0..100).collect::<Vec<u32>>());
        assert_ne!(xs, (0..100).collect::<Vec<u32>>());
    }

    #[test]
    fn sample_distinct_no_repeats() {
        let mut r = RngState::new(9);
        for _ in 0..50 {
            let picks = r.sample_distinct(20, 7);
            let mut dedup = picks.clone();
            dedup.sort_unstable();
            dedup.dedup();
            assert_eq!(dedup.len(), 7);
            assert!(picks.iter().all(|&i| i < 20));
        }
    }

    #[test]
    fn derive_differs_from_base() {
        let mut base = RngState::new(42);
        let mut derived = RngState::derive(42, 1);
        assert_ne!(base.next_u64(), derived.next_u64());
    }

    #[test]
    fn uniform_range() {
        let mut r = RngState::new(5);
        for _ in 0..1000 {
            let x = r.uniform(-0.05, 0.05);
            assert!((-0.05..0.05).contains(&x));
        }
    }
}
