use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::graph::{FileId, GraphSpec};
use crate::protocol::{Coordinate, LinearForm, RequestRef, Transcript, TranscriptBuilder};
use crate::random::Randomness;
use crate::schemes::{check_theta, draw_permutations, Scheme, SchemeDescriptor};

/// Vertex set as a bitmask, vertex `v` at bit `v - 1`.
type Set = u32;

fn members(s: Set) -> Vec<usize> {
    elements(s).collect()
}

fn elements(mut s: Set) -> impl Iterator<Item = usize> {
    std::iter::from_fn(move || {
        (s != 0).then(|| {
            let b = s.trailing_zeros() as usize;
            s &= s - 1;
            b + 1
        })
    })
}

fn bit(v: usize) -> Set {
    1 << (v - 1)
}

/// Nonempty subsets of `within`, in increasing mask order.
fn nonempty_subsets(within: Set) -> impl Iterator<Item = Set> {
    let mut sub: Set = 0;
    std::iter::from_fn(move || {
        sub = sub.wrapping_sub(within) & within;
        (sub != 0).then_some(sub)
    })
}

/// The two fixed rankings used by the complete-graph scheme for a desired
/// edge `(i, i')`.
///
/// `phi` ranks `F = {P : |P ∩ {i,i'}| = 1}` lexicographically (sorted vertex
/// sequences, a prefix before its extensions) onto `1..=2^(N-1)`. `varphi`
/// ranks the unordered splits `{P1, P2}` of `R = [N] \ {i,i'}` onto
/// `2^(N-1)+1 ..= 2^(N-1)+2^(N-3)` by the lexicographic rank of the
/// representative `P1`: the smaller part, or on a size tie the part holding
/// `min(R)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubsetBijections {
    n: usize,
    i: usize,
    i_prime: usize,
    phi: Vec<u32>,
    phi_inv: Vec<Set>,
    varphi: Vec<u32>,
    pairs: Vec<(Set, Set)>,
}

impl SubsetBijections {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn endpoints(&self) -> (usize, usize) {
        (self.i, self.i_prime)
    }

    fn full(&self) -> Set {
        (1 << self.n) - 1
    }

    /// `R = [N] \ {i, i'}`.
    pub fn rest(&self) -> Set {
        self.full() & !bit(self.i) & !bit(self.i_prime)
    }

    pub fn family(&self) -> Vec<Vec<usize>> {
        self.phi_inv.iter().map(|&s| members(s)).collect()
    }

    pub fn pair_family(&self) -> Vec<(Vec<usize>, Vec<usize>)> {
        self.pairs.iter().map(|&(a, b)| (members(a), members(b))).collect()
    }

    pub fn phi(&self, p: &[usize]) -> Option<u32> {
        let s = p.iter().fold(0, |m, &v| m | bit(v));
        self.phi.get(s as usize).copied().filter(|&x| x != 0)
    }

    pub fn phi_inverse(&self, t: u32) -> Option<Vec<usize>> {
        self.phi_inv.get((t as usize).checked_sub(1)?).map(|&s| members(s))
    }

    /// `varphi` of the split containing `part` (either side).
    pub fn varphi(&self, part: &[usize]) -> Option<u32> {
        let s = part.iter().fold(0, |m, &v| m | bit(v));
        (s & !self.rest() == 0).then(|| self.varphi_of(s))
    }

    fn phi_of(&self, s: Set) -> u32 {
        self.phi[s as usize]
    }

    fn varphi_of(&self, part: Set) -> u32 {
        let v = self.varphi[part as usize];
        if v != 0 {
            v
        } else {
            self.varphi[(self.rest() & !part) as usize]
        }
    }

    fn half(&self) -> u32 {
        1 << (self.n - 1)
    }

    fn quarter(&self) -> u32 {
        1 << (self.n - 3)
    }
}

pub fn build_families(n: usize, i: usize, i_prime: usize) -> Result<SubsetBijections> {
    if !(3..=20).contains(&n) || i == i_prime || i == 0 || i_prime == 0 || i > n || i_prime > n {
        return Err(Error::FamilyParams {
            family: "complete".into(),
            reason: format!("need 3 <= N <= 20 and distinct endpoints, got N={n}, ({i},{i_prime})"),
        });
    }
    let full: Set = (1 << n) - 1;
    let ends = bit(i) | bit(i_prime);
    let rest = full & !ends;

    let mut fam: Vec<Set> = (1..=full).filter(|s| (s & ends).count_ones() == 1).collect();
    fam.sort_by_key(|&s| members(s));
    let mut phi = vec![0u32; 1 << n];
    for (k, &s) in fam.iter().enumerate() {
        phi[s as usize] = k as u32 + 1;
    }

    let r = rest.count_ones() as usize;
    let min_r = rest & rest.wrapping_neg();
    let mut reps: Vec<Set> = std::iter::once(0)
        .chain(nonempty_subsets(rest))
        .filter(|&p| {
            let k = p.count_ones() as usize;
            2 * k < r || (2 * k == r && p & min_r != 0)
        })
        .collect();
    reps.sort_by_key(|&s| members(s));
    let mut varphi = vec![0u32; 1 << n];
    let half = 1u32 << (n - 1);
    for (k, &p) in reps.iter().enumerate() {
        varphi[p as usize] = half + k as u32 + 1;
    }
    let pairs = reps.iter().map(|&p| (p, rest & !p)).collect();
    Ok(SubsetBijections { n, i, i_prime, phi, phi_inv: fam, varphi, pairs })
}

/// `sigma[j - 1][P]`: the bit index server `j` uses for the sum over the
/// nonempty neighbour set `P` (a vertex mask). Two sets may share an index
/// only when they are disjoint.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SigmaMap {
    n: usize,
    sigma: Vec<Vec<u32>>,
}

impl SigmaMap {
    /// `σ_j(P)` for a nonempty `P ⊆ [N] \ {j}`.
    pub fn get(&self, j: usize, p: &[usize]) -> Option<u32> {
        let s = p.iter().fold(0, |m, &v| m | bit(v));
        self.sigma.get(j.checked_sub(1)?)?.get(s as usize).copied().filter(|&x| x != 0)
    }

    fn at(&self, j: usize, s: Set) -> u32 {
        self.sigma[j - 1][s as usize]
    }

    pub fn n(&self) -> usize {
        self.n
    }
}

/// Builds every `σ_j`. Subsets at a third server `j` that avoid both `i` and
/// `i'` get distinct unused indices of `1..=2^(N-1)`, uniformly at random,
/// drawn for `j` in increasing order and subsets in increasing mask order.
pub fn build_sigma(bij: &SubsetBijections, rng: &mut dyn Randomness) -> SigmaMap {
    let n = bij.n;
    let (i, ip) = (bij.i, bij.i_prime);
    let full = bij.full();
    let rest = bij.rest();
    let q = bij.quarter();
    let mut sigma = vec![vec![0u32; 1 << n]; n];

    for p in nonempty_subsets(full & !bit(i)) {
        sigma[i - 1][p as usize] = if p & bit(ip) != 0 {
            bij.phi_of(bit(i) | (p & !bit(ip)))
        } else {
            bij.varphi_of(p) + q
        };
    }
    for p in nonempty_subsets(full & !bit(ip)) {
        sigma[ip - 1][p as usize] = if p & bit(i) != 0 {
            bij.phi_of(bit(ip) | (p & !bit(i)))
        } else {
            bij.varphi_of(p)
        };
    }
    let ends = bit(i) | bit(ip);
    for j in (1..=n).filter(|&j| j != i && j != ip) {
        let mut pool = Vec::new();
        for p in nonempty_subsets(full & !bit(j)) {
            let v = match (p & ends).count_ones() {
                1 => bij.phi_of(p | bit(j)),
                2 => bij.varphi_of(bit(j) | (p & rest)),
                _ => {
                    pool.push(p);
                    0
                }
            };
            sigma[j - 1][p as usize] = v;
        }
        let mut used = vec![false; bij.half() as usize + 1];
        for &v in &sigma[j - 1] {
            if v != 0 && v <= bij.half() {
                used[v as usize] = true;
            }
        }
        let mut free: Vec<u32> = (1..=bij.half()).filter(|&v| !used[v as usize]).collect();
        for p in pool {
            sigma[j - 1][p as usize] = free.remove(rng.below(free.len()));
        }
    }
    let map = SigmaMap { n, sigma };
    // a subset and its complement in R may share an index (their files are
    // disjoint), so coverage is checked per (neighbour, index) pair
    let width = bij.half() as usize + 2 * q as usize + 1;
    for j in 1..=n {
        let mut seen = vec![false; (n + 1) * width];
        for p in nonempty_subsets(full & !bit(j)) {
            let v = map.at(j, p);
            assert!(v != 0, "server {j}: subset {:?} unassigned", members(p));
            for k in elements(p) {
                let cell = &mut seen[k * width + v as usize];
                assert!(!*cell, "server {j}: bit {v} of file ({j},{k}) used twice");
                *cell = true;
            }
        }
    }
    map
}

/// Scheme on the complete graph `K_N` with `L = 3·2^(N-2)` and
/// `2^(N-1) + 2^(N-3) - 1` downloaded bits per server.
#[derive(Debug, Clone)]
pub struct CompleteScheme {
    n: usize,
    desc: SchemeDescriptor,
    // subset bijections per edge, built on first use
    families: Vec<OnceLock<SubsetBijections>>,
}

impl CompleteScheme {
    pub fn new(n: usize) -> Result<Self> {
        if !(3..=20).contains(&n) {
            return Err(Error::FamilyParams { family: "complete".into(), reason: "needs 3 <= N <= 20".into() });
        }
        let graph = GraphSpec::from_family_name("complete", &[n], 1)?;
        let families = (0..graph.base_edge_count()).map(|_| OnceLock::new()).collect();
        Ok(CompleteScheme {
            n,
            desc: SchemeDescriptor { graph, file_length: 3 << (n - 2), srp: true, orientation_support: true },
            families,
        })
    }

    pub fn bits_per_server(&self) -> usize {
        (1 << (self.n - 1)) + (1 << (self.n - 3)) - 1
    }
}

impl Scheme for CompleteScheme {
    fn name(&self) -> String {
        "complete".into()
    }

    fn descriptor(&self) -> &SchemeDescriptor {
        &self.desc
    }

    fn run(&self, theta: FileId, rng: &mut dyn Randomness) -> Result<Transcript> {
        let g = &self.desc.graph;
        check_theta(g, theta)?;
        let n = self.n;
        let l = self.desc.file_length;
        let (i, ip) = g.endpoints(theta.edge);
        let perms = draw_permutations(g, l, rng);
        let slot = &self.families[theta.edge as usize - 1];
        let bij = match slot.get() {
            Some(b) => b,
            None => {
                let _ = slot.set(build_families(n, i, ip)?);
                slot.get().expect("just set")
            }
        };
        let sigma = build_sigma(bij, rng);
        let half = bij.half();
        let q = bij.quarter();
        let full = bij.full();
        let rest = bij.rest();

        let w = |j: usize, k: usize, x: u32| {
            let f = FileId::simple(g.edge_index(j, k).expect("complete graph"));
            Coordinate::new(f, perms[&f].apply(x))
        };
        let mut tb = TranscriptBuilder::new(n, l);
        // d[j-1][P]: request D_P^j; pair[j-1][k]: the k-th split's request at j
        let mut d: Vec<Vec<Option<RequestRef>>> = vec![vec![None; 1 << n]; n];
        let mut pair: Vec<Vec<RequestRef>> = vec![Vec::new(); n];
        for j in 1..=n {
            let nbrs = full & !bit(j);
            for p in nonempty_subsets(nbrs) {
                let x = sigma.at(j, p);
                let form: LinearForm = elements(p).map(|k| w(j, k, x)).collect();
                d[j - 1][p as usize] = Some(tb.push(j, form));
            }
            for k in 0..bij.pairs.len() as u32 {
                let x = half + k + 1 + if j == i { 0 } else { q };
                let form: LinearForm = elements(nbrs).map(|m| w(j, m, x)).collect();
                pair[j - 1].push(tb.push(j, form));
            }
        }
        let dref = |j: usize, p: Set| d[j - 1][p as usize].expect("nonempty neighbour subset");

        for t in 1..=half {
            let p = bij.phi_inv[t as usize - 1];
            let (me, other) = if p & bit(i) != 0 { (i, ip) } else { (ip, i) };
            tb.plan(t as usize, dref(me, bit(other) | (p & !bit(me))));
            for j in elements(p & !bit(me)) {
                tb.plan(t as usize, dref(j, p & !bit(j)));
            }
        }
        for (k, &(p1, p2)) in bij.pairs.iter().enumerate() {
            let t = (half + k as u32 + 1) as usize;
            tb.plan(t, pair[i - 1][k]);
            for part in [p1, p2].into_iter().filter(|&s| s != 0) {
                tb.plan(t, dref(ip, part));
                for j in elements(part) {
                    tb.plan(t, dref(j, (bit(i) | bit(ip) | part) & !bit(j)));
                }
            }
            let t = t + q as usize;
            tb.plan(t, pair[ip - 1][k]);
            for part in [p1, p2].into_iter().filter(|&s| s != 0) {
                tb.plan(t, dref(i, part));
            }
            for j in elements(rest) {
                tb.plan(t, pair[j - 1][k]);
            }
        }
        tb.finish(g, theta, perms, Vec::new())
    }
}
