//! Retrieval schemes: each turns a desired file index and the user's
//! randomness into a [`Transcript`].

mod complete;
mod compose;
mod lift;
mod path;
mod star;

use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{Family, FileId, GraphSpec};
use crate::protocol::{attribution_map, Coordinate, Transcript};
use crate::random::{random_matching, Permutation, Randomness};

pub use complete::{build_families, build_sigma, CompleteScheme, SigmaMap, SubsetBijections};
pub use compose::{ComposeMode, ComposeScheme, Part};
pub use lift::{build_block_plan, lifted_rate, BlockPlan, LiftScheme};
pub use path::PathScheme;
pub use star::StarScheme;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SchemeDescriptor {
    pub graph: GraphSpec,
    pub file_length: usize,
    /// Each hosting server of the desired file delivers exactly half of it.
    pub srp: bool,
    /// The scheme can choose which hosting server delivers the first half.
    pub orientation_support: bool,
}

/// Which half of the desired file the lower-indexed hosting server delivers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Orientation {
    /// Positions `1..=L/2` come from the lower-indexed server.
    Forward,
    /// Positions `L/2+1..=L` come from the lower-indexed server.
    Reverse,
}

impl Orientation {
    pub fn sign(self) -> i32 {
        match self {
            Orientation::Forward => 1,
            Orientation::Reverse => -1,
        }
    }
}

pub trait Scheme: Send + Sync {
    fn name(&self) -> String;

    fn descriptor(&self) -> &SchemeDescriptor;

    fn graph(&self) -> &GraphSpec {
        &self.descriptor().graph
    }

    fn file_length(&self) -> usize {
        self.descriptor().file_length
    }

    /// Every admissible desired-file index.
    fn thetas(&self) -> Vec<FileId> {
        self.graph().files()
    }

    fn run(&self, theta: FileId, rng: &mut dyn Randomness) -> Result<Transcript>;

    /// Runs and then steers the desired file's halves; see [`steer`].
    fn run_oriented(
        &self,
        theta: FileId,
        orientation: Orientation,
        rng: &mut dyn Randomness,
    ) -> Result<Transcript> {
        if !self.descriptor().orientation_support {
            return Err(Error::NotLiftable(self.name()));
        }
        let t = self.run(theta, rng)?;
        steer(t, orientation, rng)
    }
}

impl fmt::Debug for dyn Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Scheme({} on {})", self.name(), self.graph())
    }
}

/// Re-draws the desired file's permutation so that the bits credited to the
/// lower-indexed hosting server land on the chosen half of storage, uniformly
/// within that constraint, and rewrites every request accordingly. The plan is
/// untouched since it addresses permuted positions.
pub fn steer(t: Transcript, orientation: Orientation, rng: &mut dyn Randomness) -> Result<Transcript> {
    let mut t = steer_unsorted(t, orientation, rng)?;
    t.canonicalize();
    Ok(t)
}

/// [`steer`] without restoring canonical wire order, for callers that only
/// consume the requests and plan.
pub(crate) fn steer_unsorted(mut t: Transcript, orientation: Orientation, rng: &mut dyn Randomness) -> Result<Transcript> {
    let l = t.file_length();
    let owners = attribution_map(&t)?;
    let (lo, _) = t.theta_servers();
    let mine: Vec<u32> = (1..=l as u32).filter(|&k| owners[k as usize - 1] == lo).collect();
    let theirs: Vec<u32> = (1..=l as u32).filter(|&k| owners[k as usize - 1] != lo).collect();
    if mine.len() * 2 != l {
        return Err(Error::NotLiftable(format!(
            "attribution {}/{} is not balanced",
            mine.len(),
            l
        )));
    }
    let first: Vec<u32> = (1..=(l / 2) as u32).collect();
    let second: Vec<u32> = ((l / 2) as u32 + 1..=l as u32).collect();
    let (to_mine, to_theirs) = match orientation {
        Orientation::Forward => (first, second),
        Orientation::Reverse => (second, first),
    };
    let mut images = vec![0u32; l];
    for (k, v) in random_matching(&mine, &to_mine, rng)
        .into_iter()
        .chain(random_matching(&theirs, &to_theirs, rng))
    {
        images[k as usize - 1] = v;
    }
    let new_perm = Permutation::from_images(images).expect("steering yields a bijection");
    let old_inv = t.theta_permutation().inverse();
    let theta = t.theta();
    for list in &mut t.requests {
        for form in list.iter_mut() {
            if form.coords().iter().any(|c| c.file == theta) {
                *form = form.map(|c| {
                    if c.file == theta {
                        Coordinate::new(theta, new_perm.apply(old_inv.apply(c.bit)))
                    } else {
                        c
                    }
                });
            }
        }
    }
    t.permutations.insert(theta, new_perm);
    Ok(t)
}

/// Scheme names accepted by [`build_scheme`].
pub const SCHEME_NAMES: &[&str] = &["auto", "path", "star", "complete", "compose-stars", "lift:<base>"];

/// Builds a scheme by name for `graph`. `auto` picks the family's scheme and
/// lifts it when the graph has parallel copies; `lift:<base>` lifts `<base>`.
pub fn build_scheme(name: &str, graph: &GraphSpec) -> Result<Box<dyn Scheme>> {
    if let Some(base) = name.strip_prefix("lift:") {
        let inner = build_scheme(base, &graph.base())?;
        return Ok(Box::new(LiftScheme::new(inner, graph.multiplicity())?));
    }
    if name == "lift" {
        return build_scheme("lift:auto", graph);
    }
    if graph.multiplicity() > 1 {
        if name == "auto" {
            return build_scheme("lift:auto", graph);
        }
        return Err(Error::Incompatible {
            scheme: name.into(),
            reason: format!(
                "graph has multiplicity {}; use lift:{name}",
                graph.multiplicity()
            ),
        });
    }
    let incompatible = |what: &str| Error::Incompatible {
        scheme: name.into(),
        reason: format!("graph is not a labelled {what}"),
    };
    match name {
        "path" => match graph.is_family(|f| matches!(f, Family::Path { .. })) {
            Some(Family::Path { n }) => Ok(Box::new(PathScheme::new(n)?)),
            _ => Err(incompatible("path 1-2-...-N")),
        },
        "star" => match graph.is_family(|f| matches!(f, Family::Star { .. })) {
            Some(Family::Star { n }) => Ok(Box::new(StarScheme::new(n)?)),
            _ => Err(incompatible("star centered at vertex N")),
        },
        "complete" => match graph.is_family(|f| matches!(f, Family::Complete { .. })) {
            Some(Family::Complete { n }) if n >= 3 => Ok(Box::new(CompleteScheme::new(n)?)),
            _ => Err(incompatible("complete graph on at least 3 vertices")),
        },
        "compose-stars" => Ok(Box::new(ComposeScheme::stars(graph, ComposeMode::Standard)?)),
        "auto" => {
            let fams = graph.families();
            let pick = |want: fn(&Family) -> bool| fams.iter().find(|f| want(f)).is_some();
            if pick(|f| matches!(f, Family::Path { .. })) {
                build_scheme("path", graph)
            } else if pick(|f| matches!(f, Family::Complete { n } if *n >= 3)) {
                build_scheme("complete", graph)
            } else if pick(|f| matches!(f, Family::Star { .. })) {
                build_scheme("star", graph)
            } else if pick(|f| matches!(f, Family::CompleteBipartite { .. })) {
                build_scheme("compose-stars", graph)
            } else {
                Err(Error::Incompatible {
                    scheme: "auto".into(),
                    reason: format!("no scheme implemented for {graph}"),
                })
            }
        }
        other => Err(Error::Incompatible {
            scheme: other.into(),
            reason: format!("unknown scheme; expected one of {}", SCHEME_NAMES.join(", ")),
        }),
    }
}

/// Checks that `theta` is a file of `graph`.
pub(crate) fn check_theta(graph: &GraphSpec, theta: FileId) -> Result<()> {
    if graph.contains_file(theta) {
        Ok(())
    } else {
        Err(Error::ThetaOutOfRange(theta.to_string()))
    }
}

/// Independent uniform permutations of `[1..len]`, one per file of `graph`,
/// drawn in file order.
pub(crate) fn draw_permutations(
    graph: &GraphSpec,
    len: usize,
    rng: &mut dyn Randomness,
) -> std::collections::BTreeMap<FileId, Permutation> {
    graph
        .files()
        .into_iter()
        .map(|f| (f, Permutation::random(len, rng)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocol::{measured_rate, srp_attribution, symbolic_decode_check};
    use crate::random::SeededSource;

    #[test]
    fn steering_places_halves() {
        let s = build_scheme("complete", &GraphSpec::parse("complete:4").unwrap()).unwrap();
        let mut rng = SeededSource::new(4);
        for theta in s.thetas() {
            for o in [Orientation::Forward, Orientation::Reverse] {
                let t = s.run_oriented(theta, o, &mut rng).unwrap();
                assert!(symbolic_decode_check(&t));
                assert_eq!(srp_attribution(&t).unwrap(), (6, 6));
                let owners = attribution_map(&t).unwrap();
                let (lo, _) = t.theta_servers();
                for k in 1..=12u32 {
                    let first = t.theta_permutation().apply(k) <= 6;
                    let want = (o == Orientation::Forward) == first;
                    assert_eq!(owners[k as usize - 1] == lo, want);
                }
            }
        }
    }

    #[test]
    fn builder_dispatch() {
        let g = GraphSpec::parse("path:5").unwrap();
        assert_eq!(build_scheme("auto", &g).unwrap().name(), "path");
        let g2 = GraphSpec::parse("path:3^2").unwrap();
        let lifted = build_scheme("auto", &g2).unwrap();
        assert_eq!(lifted.name(), "lift:path");
        let t = lifted.run(FileId::new(2, 2), &mut SeededSource::new(1)).unwrap();
        assert_eq!(measured_rate(&t).unwrap(), crate::Rational::new(4, 9));
        assert!(build_scheme("path", &g2).is_err());
        assert!(build_scheme("star", &g).is_err());
        assert!(build_scheme("bogus", &g).is_err());
        assert!(build_scheme("auto", &GraphSpec::parse("cycle:5").unwrap()).is_err());
    }
}
