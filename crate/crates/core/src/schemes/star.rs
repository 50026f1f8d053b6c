use crate::error::{Error, Result};
use crate::graph::{FileId, GraphSpec};
use crate::protocol::{Coordinate, LinearForm, Transcript, TranscriptBuilder};
use crate::random::Randomness;
use crate::schemes::{check_theta, draw_permutations, Scheme, SchemeDescriptor};

/// Rate-`2/N` scheme on `star:N`: center `N`, file `i` is edge `(i, N)`.
///
/// The center returns the sum of all first bits, every other leaf its own
/// first bit, and leaf `θ` its second bit.
#[derive(Debug, Clone)]
pub struct StarScheme {
    n: usize,
    desc: SchemeDescriptor,
}

impl StarScheme {
    pub fn new(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::FamilyParams { family: "star".into(), reason: "needs N >= 2".into() });
        }
        let graph = GraphSpec::from_family_name("star", &[n], 1)?;
        Ok(StarScheme {
            n,
            desc: SchemeDescriptor { graph, file_length: 2, srp: true, orientation_support: true },
        })
    }
}

impl Scheme for StarScheme {
    fn name(&self) -> String {
        "star".into()
    }

    fn descriptor(&self) -> &SchemeDescriptor {
        &self.desc
    }

    fn run(&self, theta: FileId, rng: &mut dyn Randomness) -> Result<Transcript> {
        let g = &self.desc.graph;
        check_theta(g, theta)?;
        let n = self.n;
        let perms = draw_permutations(g, 2, rng);
        let w = |i: usize, x: u32| {
            let f = FileId::simple(i as u32);
            Coordinate::new(f, perms[&f].apply(x))
        };
        let mut tb = TranscriptBuilder::new(n, 2);
        let center = tb.push(n, (1..n).map(|i| w(i, 1)).collect::<LinearForm>());
        tb.plan(1, center);
        for leaf in 1..n {
            if leaf == theta.edge as usize {
                let r = tb.push(leaf, LinearForm::single(w(leaf, 2)));
                tb.plan(2, r);
            } else {
                let r = tb.push(leaf, LinearForm::single(w(leaf, 1)));
                tb.plan(1, r);
            }
        }
        tb.finish(g, theta, perms, Vec::new())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocol::{measured_rate, srp_attribution, symbolic_decode_check};
    use crate::random::{FixedSource, SeededSource};
    use crate::Rational;

    #[test]
    fn star4_theta1() {
        let s = StarScheme::new(4).unwrap();
        let t = s.run(FileId::simple(1), &mut FixedSource).unwrap();
        let shown: Vec<String> = (1..=4).map(|v| t.server_requests(v)[0].to_string()).collect();
        assert_eq!(shown, ["1.1@2", "2.1@1", "3.1@1", "1.1@1 2.1@1 3.1@1"]);
        assert_eq!(measured_rate(&t).unwrap(), Rational::new(1, 2));
    }

    #[test]
    fn star2_single_file() {
        let t = StarScheme::new(2).unwrap().run(FileId::simple(1), &mut FixedSource).unwrap();
        assert_eq!(t.server_requests(2)[0].to_string(), "1.1@1");
        assert_eq!(t.server_requests(1)[0].to_string(), "1.1@2");
    }

    #[test]
    fn reliable_and_srp() {
        let mut rng = SeededSource::new(5);
        for n in 2..=8 {
            let s = StarScheme::new(n).unwrap();
            for theta in s.thetas() {
                let t = s.run(theta, &mut rng).unwrap();
                assert!(symbolic_decode_check(&t));
                assert_eq!(srp_attribution(&t).unwrap(), (1, 1));
                assert_eq!(measured_rate(&t).unwrap(), Rational::new(2, n as i64));
            }
        }
    }
}
