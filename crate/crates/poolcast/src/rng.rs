//! Counter-based pseudo-random generator.
//!
//! Every output is a pure function of (stream key, counter), so datasets are
//! reproducible bit-for-bit from a seed regardless of evaluation order, and
//! independent substreams can be derived for concurrent row blocks.
//!
//! The construction is the SplitMix64 finalizer applied to
//! `key + counter · GAMMA`:
//!
//! ```text
//! out(key, j) = mix64(key wrapping_add j wrapping_mul 0x9E3779B97F4A7C15)
//! mix64(z): z ^= z >> 30; z *= 0xBF58476D1CE4E5B9;
//!           z ^= z >> 27; z *= 0x94D049BB133111EB; z ^= z >> 31
//! ```
//!
//! Substreams are derived by hashing a label (FNV-1a) or an index into the
//! key and re-mixing.

const GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;
const FNV_OFFSET: u64 = 0xCBF2_9CE4_8422_2325;
const FNV_PRIME: u64 = 0x1000_0000_01B3;

fn mix64(mut z: u64) -> u64 {
    z ^= z >> 30;
    z = z.wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z ^= z >> 27;
    z = z.wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h = FNV_OFFSET;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(FNV_PRIME);
    }
    h
}

/// Seeded counter-based generator; cheap to clone and to fork into labeled
/// substreams.
#[derive(Debug, Clone)]
pub struct CounterRng {
    key: u64,
    counter: u64,
}

impl CounterRng {
    pub fn new(seed: u64) -> Self {
        CounterRng { key: mix64(seed ^ GAMMA), counter: 0 }
    }

    /// Independent substream identified by a label; the counter restarts.
    pub fn derive(&self, label: &str) -> CounterRng {
        CounterRng { key: mix64(self.key ^ fnv1a(label.as_bytes())), counter: 0 }
    }

    /// Independent substream identified by an index (e.g. a row number).
    pub fn derive_index(&self, index: u64) -> CounterRng {
        CounterRng {
            key: mix64(self.key ^ mix64(index.wrapping_mul(GAMMA) ^ 0xA5A5_A5A5_A5A5_A5A5)),
            counter: 0,
        }
    }

    pub fn next_u64(&mut self) -> u64 {
        let v = mix64(self.key.wrapping_add(self.counter.wrapping_mul(GAMMA)));
        self.counter += 1;
        v
    }

    /// Uniform draw strictly inside (0, 1): cell centers of a 2^53 grid.
    pub fn next_f64(&mut self) -> f64 {
        (((self.next_u64() >> 11) as f64) + 0.5) * (1.0 / 9_007_199_254_740_992.0)
    }

    /// Uniform integer in `[0, n)` by rejection (unbiased).
    pub fn next_below(&mut self, n: u64) -> u64 {
        assert!(n > 0);
        let zone = u64::MAX - u64::MAX % n;
        loop {
            let v = self.next_u64();
            if v < zone {
                return v % n;
            }
        }
    }

    /// Standard normal draw via the quantile transform.
    pub fn next_normal(&mut self) -> f64 {
        crate::distributions::normal_quantile(self.next_f64())
            .expect("uniform draw is strictly inside (0,1)")
    }

    /// Fisher–Yates shuffle.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.next_below(i as u64 + 1) as usize;
            items.swap(i, j);
        }
    }
}
