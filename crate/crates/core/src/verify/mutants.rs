//! Deliberately broken schemes. Each must be caught by one of the checks.

use crate::error::Result;
use crate::graph::{FileId, GraphSpec};
use crate::protocol::Transcript;
use crate::random::Randomness;
use crate::schemes::{ComposeMode, ComposeScheme, Scheme, SchemeDescriptor};

/// Forgets one request in the decoding plan of the first target bit;
/// decoding must fail.
pub struct DroppedPlanRef {
    inner: Box<dyn Scheme>,
}

impl DroppedPlanRef {
    pub fn new(inner: Box<dyn Scheme>) -> Self {
        DroppedPlanRef { inner }
    }
}

impl Scheme for DroppedPlanRef {
    fn name(&self) -> String {
        format!("dropped-ref({})", self.inner.name())
    }

    fn descriptor(&self) -> &SchemeDescriptor {
        self.inner.descriptor()
    }

    fn thetas(&self) -> Vec<FileId> {
        self.inner.thetas()
    }

    fn run(&self, theta: FileId, rng: &mut dyn Randomness) -> Result<Transcript> {
        Ok(self.inner.run(theta, rng)?.without_plan_term(1, 0))
    }
}

/// Star composition that puts the part holding `θ` first on the wire.
pub fn leaky_order(host: &GraphSpec) -> Result<ComposeScheme> {
    ComposeScheme::stars(host, ComposeMode::LeakyOrder)
}

/// Star composition that skips the decoy retrievals.
pub fn skip_decoys(host: &GraphSpec) -> Result<ComposeScheme> {
    ComposeScheme::stars(host, ComposeMode::SkipDecoys)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schemes::build_scheme;
    use crate::verify::{privacy, verify_reliability, VerifyConfig};

    fn k(m: usize, n: usize) -> GraphSpec {
        GraphSpec::parse(&format!("complete_bipartite:{m},{n}")).unwrap()
    }

    #[test]
    fn dropped_ref_fails_reliability() {
        let g = GraphSpec::parse("complete:3").unwrap();
        let s = DroppedPlanRef::new(build_scheme("complete", &g).unwrap());
        assert!(!verify_reliability(&s, &VerifyConfig::default()).passed);
    }

    #[test]
    fn leaky_order_fails_exact() {
        let s = leaky_order(&k(2, 2)).unwrap();
        let cfg = VerifyConfig::default();
        assert!(verify_reliability(&s, &cfg).passed);
        let r = privacy::try_privacy_exact(&s, &cfg).unwrap();
        assert!(!r.passed);
        assert!(r.witness.unwrap().server.is_some());
    }

    #[test]
    fn skip_decoys_fails_statistical() {
        let s = skip_decoys(&k(2, 2)).unwrap();
        let cfg = VerifyConfig { samples: 10_000, ..Default::default() };
        let r = privacy::verify_privacy_statistical(&s, &cfg);
        assert!(!r.passed);
        assert!(r.statistic > 0.5);
    }
}
