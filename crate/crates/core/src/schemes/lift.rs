use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::graph::FileId;
use crate::protocol::{Coordinate, LinearForm, RequestRef, Transcript, TranscriptBuilder};
use crate::random::{Permutation, Randomness};
use crate::schemes::{check_theta, steer_unsorted, Orientation, Scheme, SchemeDescriptor};
use crate::Rational;

/// Copy set as a bitmask, copy `t` at bit `t - 1`.
type Copies = u32;

fn members(s: Copies) -> Vec<usize> {
    (0..32).filter(|b| s >> b & 1 == 1).map(|b| b + 1).collect()
}

fn mask(set: &[usize]) -> Copies {
    set.iter().fold(0, |m, &t| m | 1 << (t - 1))
}

/// Subsets of `within` ordered by size, then lexicographically.
fn graded(within: Copies) -> Vec<Copies> {
    let mut all: Vec<Copies> = (0..=within).filter(|s| s & !within == 0).collect();
    all.sort_by_cached_key(|&s| (s.count_ones(), members(s)));
    all
}

/// Window bookkeeping of the lift for desired copy `j`.
///
/// The lifted file of length `L = 2^(r-1)·L'` is split into `2^(r-1)` blocks of
/// `L'` bits. `u(B)` numbers the subsets `B` of the other copies by size, then
/// lexicographically, starting with `u(∅) = 1`. `beta(A)` is the block a
/// non-desired edge uses in the instance for copy set `A`; `A` and its
/// complement share a block, classes numbered by their smaller member
/// (size, then lexicographic), with the class of the full set last.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockPlan {
    r: usize,
    j: usize,
    base_length: usize,
    u: Vec<u32>,
    beta: Vec<u32>,
}

pub fn build_block_plan(r: usize, j: usize, base_length: usize) -> Result<BlockPlan> {
    if r == 0 || r > 16 || j == 0 || j > r {
        return Err(Error::NotLiftable(format!("copy {j} of multiplicity {r}")));
    }
    let full: Copies = (1 << r) - 1;
    let mut u = vec![0u32; 1 << r];
    for (k, b) in graded(full & !(1 << (j - 1))).into_iter().enumerate() {
        u[b as usize] = k as u32 + 1;
    }
    let mut beta = vec![0u32; 1 << r];
    let mut next = 1;
    for a in graded(full).into_iter().filter(|&a| a != 0 && a != full) {
        let c = full & !a;
        if beta[c as usize] != 0 {
            beta[a as usize] = beta[c as usize];
        } else {
            beta[a as usize] = next;
            next += 1;
        }
    }
    beta[full as usize] = next;
    Ok(BlockPlan { r, j, base_length, u, beta })
}

impl BlockPlan {
    pub fn multiplicity(&self) -> usize {
        self.r
    }

    pub fn desired_copy(&self) -> usize {
        self.j
    }

    pub fn base_length(&self) -> usize {
        self.base_length
    }

    pub fn lifted_length(&self) -> usize {
        self.base_length << (self.r - 1)
    }

    pub fn blocks(&self) -> usize {
        1 << (self.r - 1)
    }

    /// Block of `w_θ` recovered from the instances for `B ∪ {j}` and `B`.
    pub fn u(&self, b: &[usize]) -> Option<u32> {
        self.u.get(mask(b) as usize).copied().filter(|&x| x != 0)
    }

    /// Block of every non-desired edge in the instance for `A`.
    pub fn beta(&self, a: &[usize]) -> Option<u32> {
        self.beta.get(mask(a) as usize).copied().filter(|&x| x != 0)
    }

    fn u_of(&self, b: Copies) -> u32 {
        self.u[b as usize]
    }

    fn beta_of(&self, a: Copies) -> u32 {
        self.beta[a as usize]
    }

    /// Lifted bits that base position `p` of edge `desired`'s virtual file
    /// stands for in the instance for `a`, as `(copy, block)` pairs.
    fn expand(&self, a: Copies, desired: bool) -> Vec<(usize, u32)> {
        let jb = 1 << (self.j - 1);
        if !desired {
            let b = self.beta_of(a);
            return members(a).into_iter().map(|t| (t, b)).collect();
        }
        if a & jb != 0 {
            let rest = a & !jb;
            std::iter::once((self.j, self.u_of(rest)))
                .chain(members(rest).into_iter().map(|t| (t, self.u_of(rest & !(1 << (t - 1))))))
                .collect()
        } else {
            members(a).into_iter().map(|t| (t, self.u_of(a & !(1 << (t - 1))))).collect()
        }
    }
}

/// `R / (2 - 2^(1-r))`.
pub fn lifted_rate(base_rate: Rational, r: usize) -> Rational {
    assert!((1..62).contains(&r));
    base_rate * Rational::new(1 << (r - 1), (1 << r) - 1)
}

/// Scheme for the `r`-fold multigraph of a base graph, built from a base
/// scheme that delivers half of the desired file from each hosting server
/// and can choose which half.
///
/// Every copy of every file is privately permuted. One base run is made per
/// nonempty copy set `A`, on virtual files that are sums of windows of the
/// copies in `A`; the runs for `B ∪ {j}` and `B` together yield block `u(B)`.
pub struct LiftScheme {
    base: Box<dyn Scheme>,
    r: usize,
    desc: SchemeDescriptor,
    // per desired copy j: its block plan and the copy sets B not holding j
    plans: Vec<(BlockPlan, Vec<Copies>)>,
    instances: Vec<Copies>,
}

impl std::fmt::Debug for LiftScheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("LiftScheme").field("base", &self.base.name()).field("r", &self.r).finish()
    }
}

impl LiftScheme {
    pub fn new(base: Box<dyn Scheme>, r: usize) -> Result<Self> {
        let bd = base.descriptor();
        if !bd.srp || !bd.orientation_support || !bd.file_length.is_multiple_of(2) {
            return Err(Error::NotLiftable(base.name()));
        }
        if bd.graph.multiplicity() != 1 {
            return Err(Error::NotLiftable(format!("{} already runs on a multigraph", base.name())));
        }
        if r == 0 || r > 16 {
            return Err(Error::NotLiftable(format!("multiplicity {r} outside 1..=16")));
        }
        let graph = bd.graph.clone().with_multiplicity(r)?;
        let file_length = bd.file_length << (r - 1);
        let full: Copies = (1 << r) - 1;
        let plans = (1..=r)
            .map(|j| Ok((build_block_plan(r, j, bd.file_length)?, graded(full & !(1 << (j - 1))))))
            .collect::<Result<_>>()?;
        Ok(LiftScheme {
            base,
            r,
            desc: SchemeDescriptor { graph, file_length, srp: false, orientation_support: false },
            plans,
            instances: graded(full).into_iter().skip(1).collect(),
        })
    }

    pub fn base(&self) -> &dyn Scheme {
        self.base.as_ref()
    }

    pub fn multiplicity(&self) -> usize {
        self.r
    }

    /// Base runs in execution order: copy sets by size, then lexicographically.
    pub fn instances(&self) -> Vec<Vec<usize>> {
        self.instances.iter().map(|&a| members(a)).collect()
    }
}

impl Scheme for LiftScheme {
    fn name(&self) -> String {
        format!("lift:{}", self.base.name())
    }

    fn descriptor(&self) -> &SchemeDescriptor {
        &self.desc
    }

    fn run(&self, theta: FileId, rng: &mut dyn Randomness) -> Result<Transcript> {
        let g = &self.desc.graph;
        check_theta(g, theta)?;
        let l = self.desc.file_length;
        let lb = self.base.file_length();
        let e = theta.edge;
        let j = theta.copy as usize;
        let (plan, others) = &self.plans[j - 1];
        let sigma: BTreeMap<FileId, Permutation> =
            g.files().into_iter().map(|f| (f, Permutation::random(l, rng))).collect();

        let sig = &sigma;
        let mut tb = TranscriptBuilder::new(g.n_vertices(), l);
        // per instance: base transcript and request map
        let mut runs: BTreeMap<Copies, (Transcript, Vec<Vec<RequestRef>>)> = BTreeMap::new();
        let jb: Copies = 1 << (j - 1);
        for &a in &self.instances {
            let orientation = if a & jb == 0 || a == jb { Orientation::Forward } else { Orientation::Reverse };
            // wire order of the instance is irrelevant, the lifted transcript is sorted at the end
            let t = steer_unsorted(self.base.run(FileId::simple(e), rng)?, orientation, rng)?;
            let expand_d = plan.expand(a, true);
            let expand_o = plan.expand(a, false);
            let mut refmap = Vec::with_capacity(t.n_servers());
            for s in 1..=t.n_servers() {
                let refs = t
                    .server_requests(s)
                    .iter()
                    .map(|form| {
                        let lifted: LinearForm = form
                            .coords()
                            .iter()
                            .flat_map(|c| {
                                let pieces = if c.file.edge == e { &expand_d } else { &expand_o };
                                pieces.iter().map(move |&(copy, block)| {
                                    let f = FileId::new(c.file.edge, copy as u32);
                                    let x = (block - 1) * lb as u32 + c.bit;
                                    Coordinate::new(f, sig[&f].apply(x))
                                })
                            })
                            .collect();
                        tb.push(s, lifted)
                    })
                    .collect();
                refmap.push(refs);
            }
            runs.insert(a, (t, refmap));
        }

        // refs of instance `a` that retrieve its virtual bit at base position p
        let retrieve = |a: Copies, p: u32| -> Vec<RequestRef> {
            let (t, refmap) = &runs[&a];
            let k = t.theta_permutation().inverse().apply(p);
            t.plan()[k as usize - 1].iter().map(|r| refmap[r.server - 1][r.position - 1]).collect()
        };
        for &b in others {
            let block = plan.u_of(b);
            for p in 1..=lb as u32 {
                let x = ((block - 1) * lb as u32 + p) as usize;
                tb.plan_all(x, retrieve(b | jb, p));
                if b != 0 {
                    tb.plan_all(x, retrieve(b, p));
                }
            }
        }
        tb.finish(g, theta, sigma, Vec::new())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocol::{measured_rate, symbolic_check};
    use crate::random::SeededSource;
    use crate::schemes::{CompleteScheme, PathScheme, StarScheme};

    #[test]
    fn block_plan_examples() {
        let p = build_block_plan(2, 1, 2).unwrap();
        assert_eq!((p.u(&[]), p.u(&[2])), (Some(1), Some(2)));
        assert_eq!((p.beta(&[1]), p.beta(&[2]), p.beta(&[1, 2])), (Some(1), Some(1), Some(2)));
        let p = build_block_plan(3, 1, 2).unwrap();
        let us: Vec<_> = [&[][..], &[2], &[3], &[2, 3]].iter().map(|b| p.u(b).unwrap()).collect();
        assert_eq!(us, [1, 2, 3, 4]);
        let betas: Vec<_> = [&[1][..], &[2, 3], &[2], &[1, 3], &[3], &[1, 2], &[1, 2, 3]]
            .iter()
            .map(|a| p.beta(a).unwrap())
            .collect();
        assert_eq!(betas, [1, 1, 2, 2, 3, 3, 4]);
        assert!(build_block_plan(3, 4, 2).is_err());
    }

    #[test]
    fn block_plan_invariants() {
        for r in 1..=6 {
            for j in 1..=r {
                let p = build_block_plan(r, j, 2).unwrap();
                let full: Copies = (1 << r) - 1;
                let mut us: Vec<u32> = graded(full & !(1 << (j - 1))).into_iter().map(|b| p.u_of(b)).collect();
                us.sort_unstable();
                assert_eq!(us, (1..=p.blocks() as u32).collect::<Vec<_>>());
                for t in 1..=r {
                    let mut seen: Vec<u32> = (1..=full)
                        .filter(|a| a >> (t - 1) & 1 == 1)
                        .map(|a| p.beta_of(a))
                        .collect();
                    let n = seen.len();
                    seen.sort_unstable();
                    seen.dedup();
                    assert_eq!(seen.len(), n);
                    assert!(seen.iter().all(|&b| b >= 1 && b as usize <= p.blocks()));
                }
            }
        }
    }

    #[test]
    fn lifted_rates() {
        assert_eq!(lifted_rate(Rational::new(2, 3), 2), Rational::new(4, 9));
        assert_eq!(lifted_rate(Rational::new(3, 7), 1), Rational::new(3, 7));
        assert_eq!(lifted_rate(Rational::new(1, 2), 3), Rational::new(2, 7));
    }

    fn check(base: Box<dyn Scheme>, r: usize, seeds: u64) {
        let base_rate = Rational::new(base.file_length() as i64, {
            let t = base.run(base.thetas()[0], &mut SeededSource::new(0)).unwrap();
            t.download_count() as i64
        });
        let d_base = (base.file_length() as i64 / *base_rate.numer()) * *base_rate.denom();
        let s = LiftScheme::new(base, r).unwrap();
        let mut rng = SeededSource::new(seeds);
        for theta in s.thetas() {
            let t = s.run(theta, &mut rng).unwrap();
            if let Err(e) = symbolic_check(&t) {
                panic!("{} r={r} θ={theta}: bit {} residual {}", s.name(), e.bit, e.residual);
            }
            assert_eq!(measured_rate(&t).unwrap(), lifted_rate(base_rate, r));
            assert_eq!(t.download_count() as i64, ((1 << r) - 1) * d_base);
        }
    }

    #[test]
    fn lifts_are_reliable() {
        for n in 3..=5 {
            for r in 2..=3 {
                check(Box::new(PathScheme::new(n).unwrap()), r, 7);
            }
        }
        check(Box::new(StarScheme::new(4).unwrap()), 2, 3);
        check(Box::new(CompleteScheme::new(3).unwrap()), 2, 5);
        check(Box::new(PathScheme::new(3).unwrap()), 1, 5);
    }

    #[test]
    fn example_rate() {
        let s = LiftScheme::new(Box::new(PathScheme::new(3).unwrap()), 2).unwrap();
        let t = s.run(FileId::new(1, 1), &mut SeededSource::new(1)).unwrap();
        assert_eq!(measured_rate(&t).unwrap(), Rational::new(4, 9));
        let star = LiftScheme::new(Box::new(StarScheme::new(4).unwrap()), 2).unwrap();
        let t = star.run(FileId::new(2, 2), &mut SeededSource::new(1)).unwrap();
        assert_eq!(measured_rate(&t).unwrap(), Rational::new(1, 3));
    }
}
