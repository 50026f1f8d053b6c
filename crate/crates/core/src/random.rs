//! The user's private randomness.
//!
//! Schemes draw every random choice through [`Randomness::below`], so the same
//! construction can run from a seeded generator, from a fixed all-zero source
//! (used to render the reference answer tables), or under exhaustive
//! enumeration of its whole randomness space.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub trait Randomness {
    /// Uniform choice in `0..n`; `n >= 1`.
    fn below(&mut self, n: usize) -> usize;
}

/// Seeded ChaCha source; identical seeds reproduce identical transcripts.
#[derive(Debug, Clone)]
pub struct SeededSource(ChaCha8Rng);

impl SeededSource {
    pub fn new(seed: u64) -> Self {
        SeededSource(ChaCha8Rng::seed_from_u64(seed))
    }

    /// Independent stream for trial `index` of a run seeded by `seed`.
    pub fn for_trial(seed: u64, stream: u64, index: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        rng.set_word_pos(u128::from(index) << 20);
        SeededSource(rng)
    }
}

impl Randomness for SeededSource {
    fn below(&mut self, n: usize) -> usize {
        debug_assert!(n >= 1);
        if n == 1 {
            0
        } else {
            self.0.gen_range(0..n)
        }
    }
}

/// Always picks the first option: identity permutations, lowest free indices.
#[derive(Debug, Clone, Copy, Default)]
pub struct FixedSource;

impl Randomness for FixedSource {
    fn below(&mut self, _n: usize) -> usize {
        0
    }
}

/// Replays a recorded prefix of choices, extends with zeros, and records the
/// arity of every choice made. Drives [`enumerate_outcomes`].
#[derive(Debug, Default)]
pub struct ReplaySource {
    prefix: Vec<usize>,
    choices: Vec<(usize, usize)>,
}

impl ReplaySource {
    fn new(prefix: Vec<usize>) -> Self {
        ReplaySource { prefix, choices: Vec::new() }
    }
}

impl Randomness for ReplaySource {
    fn below(&mut self, n: usize) -> usize {
        let k = self.choices.len();
        let v = self.prefix.get(k).copied().unwrap_or(0);
        debug_assert!(v < n, "replayed choice out of range");
        self.choices.push((v, n));
        v
    }
}

/// Runs `run` once for every point of the randomness space and hands each
/// outcome to `sink` together with its weight, the product of the choice
/// arities along its path (the point has probability `1 / weight`). Fails once
/// more than `budget` points would be visited.
pub fn enumerate_outcomes<T, R, S>(budget: u64, mut run: R, mut sink: S) -> crate::Result<u64>
where
    R: FnMut(&mut dyn Randomness) -> T,
    S: FnMut(T, u128),
{
    let mut prefix = Vec::new();
    let mut visited = 0u64;
    loop {
        if visited >= budget {
            return Err(crate::Error::BudgetExceeded(budget));
        }
        let mut src = ReplaySource::new(prefix);
        let outcome = run(&mut src);
        visited += 1;
        let weight = src.choices.iter().fold(1u128, |w, &(_, n)| w.saturating_mul(n as u128));
        sink(outcome, weight);
        // odometer step: bump the deepest choice that still has room
        let mut choices = src.choices;
        loop {
            match choices.pop() {
                None => return Ok(visited),
                Some((v, n)) if v + 1 < n => {
                    prefix = choices.iter().map(|&(v, _)| v).collect();
                    prefix.push(v + 1);
                    break;
                }
                Some(_) => {}
            }
        }
    }
}

/// Product of the choice arities along the all-zero path; equals the size of
/// the randomness space for constructions with a fixed choice structure.
pub fn randomness_space_estimate<F>(run: F) -> u128
where
    F: FnOnce(&mut dyn Randomness),
{
    let mut src = ReplaySource::new(Vec::new());
    run(&mut src);
    src.choices
        .iter()
        .fold(1u128, |acc, &(_, n)| acc.saturating_mul(n as u128))
}

/// A bijection on `[1..len]`, mapping a permuted position to a storage position:
/// `w(t) = W(perm.apply(t))`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Permutation(Vec<u32>);

impl Permutation {
    pub fn identity(len: usize) -> Self {
        Permutation((1..=len as u32).collect())
    }

    /// Uniform permutation; the all-zero source yields the identity.
    pub fn random(len: usize, rng: &mut dyn Randomness) -> Self {
        let mut images: Vec<u32> = (1..=len as u32).collect();
        for i in 0..len {
            let j = i + rng.below(len - i);
            images.swap(i, j);
        }
        Permutation(images)
    }

    /// From 1-based images; `None` unless they form a bijection on `[1..len]`.
    pub fn from_images(images: Vec<u32>) -> Option<Self> {
        let mut seen = vec![false; images.len()];
        for &v in &images {
            let idx = (v as usize).checked_sub(1)?;
            if idx >= seen.len() || std::mem::replace(&mut seen[idx], true) {
                return None;
            }
        }
        Some(Permutation(images))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn apply(&self, t: u32) -> u32 {
        self.0[t as usize - 1]
    }

    pub fn inverse(&self) -> Permutation {
        let mut inv = vec![0u32; self.0.len()];
        for (i, &v) in self.0.iter().enumerate() {
            inv[v as usize - 1] = i as u32 + 1;
        }
        Permutation(inv)
    }

    pub fn images(&self) -> &[u32] {
        &self.0
    }
}

/// Uniformly random bijection from `domain` (distinct items) onto `range`,
/// returned as `(item, image)` pairs in domain order.
pub fn random_matching(domain: &[u32], range: &[u32], rng: &mut dyn Randomness) -> Vec<(u32, u32)> {
    assert_eq!(domain.len(), range.len());
    let mut pool = range.to_vec();
    domain
        .iter()
        .map(|&d| {
            let k = rng.below(pool.len());
            (d, pool.remove(k))
        })
        .collect()
}
