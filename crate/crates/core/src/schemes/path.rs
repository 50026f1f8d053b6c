use crate::error::{Error, Result};
use crate::graph::{FileId, GraphSpec};
use crate::protocol::{Coordinate, LinearForm, Transcript, TranscriptBuilder};
use crate::random::Randomness;
use crate::schemes::{check_theta, draw_permutations, Scheme, SchemeDescriptor};

/// Rate-`2/N` scheme on the path `1 - 2 - ... - N`; file `i` is edge `(i, i+1)`.
///
/// Every file is privately permuted. Servers up to `θ` chain first bits toward
/// `θ` from the left, the remaining servers chain second bits from the right.
#[derive(Debug, Clone)]
pub struct PathScheme {
    n: usize,
    desc: SchemeDescriptor,
}

impl PathScheme {
    pub fn new(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::FamilyParams { family: "path".into(), reason: "needs N >= 2".into() });
        }
        let graph = GraphSpec::from_family_name("path", &[n], 1)?;
        Ok(PathScheme {
            n,
            desc: SchemeDescriptor { graph, file_length: 2, srp: true, orientation_support: true },
        })
    }
}

impl Scheme for PathScheme {
    fn name(&self) -> String {
        "path".into()
    }

    fn descriptor(&self) -> &SchemeDescriptor {
        &self.desc
    }

    fn run(&self, theta: FileId, rng: &mut dyn Randomness) -> Result<Transcript> {
        let g = &self.desc.graph;
        check_theta(g, theta)?;
        let n = self.n;
        let th = theta.edge as usize;
        let perms = draw_permutations(g, 2, rng);
        let w = |i: usize, x: u32| {
            let f = FileId::simple(i as u32);
            Coordinate::new(f, perms[&f].apply(x))
        };
        let mut tb = TranscriptBuilder::new(n, 2);
        for s in 1..=n {
            let x = if s <= th { 1 } else { 2 };
            let form = match s {
                1 => LinearForm::single(w(1, x)),
                s if s == n => LinearForm::single(w(n - 1, x)),
                s => LinearForm::from_coords([w(s - 1, x), w(s, x)]),
            };
            let r = tb.push(s, form);
            tb.plan(x as usize, r);
        }
        tb.finish(g, theta, perms, Vec::new())
    }
}
