//! Checks a scheme's transcripts for zero-error decoding, privacy against each
//! single server, symmetric retrieval and rate.
//!
//! Every randomized check draws its trials from
//! [`SeededSource::for_trial`]`(seed, stream, trial)`, and a failure records
//! those three numbers so the offending transcript can be rebuilt.

pub mod mutants;
pub mod pattern;
pub mod privacy;

use std::fmt::{self, Write as _};
use std::str::FromStr;

use serde::Serialize;

use crate::bounds::{self, BoundKind, Tightness};
use crate::error::{Error, Result};
use crate::graph::FileId;
use crate::protocol::{answer_all, decode, measured_rate, srp_attribution, symbolic_check, FileStore};
use crate::random::SeededSource;
use crate::schemes::Scheme;
use crate::Rational;

pub use pattern::{canonical_pattern, joint_pattern, CanonicalPattern};

/// Trial streams; a witness names the stream its trial came from.
pub mod streams {
    pub const RELIABILITY: u64 = 1;
    pub const STORE: u64 = 2;
    pub const STRUCTURAL: u64 = 3;
    /// Statistical sampling for the `k`-th θ uses stream `STATISTICAL + k`.
    pub const STATISTICAL: u64 = 1 << 16;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum PrivacyMode {
    /// Exact when the randomness space fits the budget, otherwise structural
    /// and statistical side by side.
    Auto,
    Exact,
    Structural,
    Statistical,
    Off,
}

impl FromStr for PrivacyMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "auto" => PrivacyMode::Auto,
            "exact" => PrivacyMode::Exact,
            "structural" => PrivacyMode::Structural,
            "statistical" => PrivacyMode::Statistical,
            "off" | "none" => PrivacyMode::Off,
            other => return Err(Error::Parse(format!("unknown privacy mode '{other}'"))),
        })
    }
}

impl fmt::Display for PrivacyMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PrivacyMode::Auto => "auto",
            PrivacyMode::Exact => "exact",
            PrivacyMode::Structural => "structural",
            PrivacyMode::Statistical => "statistical",
            PrivacyMode::Off => "off",
        })
    }
}

#[derive(Debug, Clone)]
pub struct VerifyConfig {
    pub seed: u64,
    /// Seeded runs per θ for reliability, SRP and structural privacy.
    pub seeds: u64,
    /// Random file stores decoded end to end per run.
    pub decode_trials: u64,
    pub privacy: PrivacyMode,
    /// Samples per θ for statistical privacy.
    pub samples: u64,
    pub tolerance: f64,
    /// Largest randomness space exact privacy will enumerate per θ.
    pub budget: u64,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig {
            seed: 0,
            seeds: 10,
            decode_trials: 1,
            privacy: PrivacyMode::Auto,
            samples: 200_000,
            tolerance: 0.02,
            budget: 1 << 20,
        }
    }
}

/// Where a failed check can be reproduced.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Witness {
    pub seed: u64,
    pub stream: u64,
    pub trial: u64,
    pub theta: FileId,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub other_theta: Option<FileId>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub server: Option<usize>,
    pub detail: String,
}

impl Witness {
    /// The randomness source of the offending trial.
    pub fn source(&self) -> SeededSource {
        SeededSource::for_trial(self.seed, self.stream, self.trial)
    }
}

impl fmt::Display for Witness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "seed={} stream={} trial={} theta={}", self.seed, self.stream, self.trial, self.theta)?;
        if let Some(o) = self.other_theta {
            write!(f, " vs theta={o}")?;
        }
        if let Some(s) = self.server {
            write!(f, " server=S{s}")?;
        }
        write!(f, ": {}", self.detail)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ReliabilityReport {
    pub runs: u64,
    pub decodes: u64,
    pub passed: bool,
    pub witness: Option<Witness>,
}

#[derive(Debug, Clone, Serialize)]
pub struct PrivacyReport {
    pub mode: PrivacyMode,
    /// Largest total-variation distance over servers and θ pairs.
    pub statistic: f64,
    pub threshold: f64,
    pub passed: bool,
    pub witness: Option<Witness>,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct SrpRow {
    pub theta: FileId,
    pub counts: (usize, usize),
}

#[derive(Debug, Clone, Serialize)]
pub struct SrpReport {
    /// False when the scheme does not claim symmetric retrieval.
    pub applicable: bool,
    pub rows: Vec<SrpRow>,
    pub passed: bool,
    pub witness: Option<Witness>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RateReport {
    #[serde(serialize_with = "bounds::ser_opt_ratio")]
    pub measured: Option<Rational>,
    /// Same rate on every run.
    pub constant: bool,
    #[serde(serialize_with = "bounds::ser_opt_ratio")]
    pub best_lower: Option<Rational>,
    #[serde(serialize_with = "bounds::ser_opt_ratio")]
    pub best_upper: Option<Rational>,
    /// Measured rate under every applicable upper bound.
    pub within_bounds: bool,
    pub tightness: Tightness,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub scheme: String,
    pub graph: String,
    pub file_length: usize,
    pub reliability: ReliabilityReport,
    pub privacy: Vec<PrivacyReport>,
    pub srp: SrpReport,
    pub rate: RateReport,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.reliability.passed
            && self.privacy.iter().all(|p| p.passed)
            && (!self.srp.applicable || self.srp.passed)
            && self.rate.constant
            && self.rate.within_bounds
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn to_markdown(&self) -> String {
        let mark = |ok: bool| if ok { "pass" } else { "FAIL" };
        let mut s = String::new();
        let _ = writeln!(s, "# verify {} on {}", self.scheme, self.graph);
        let _ = writeln!(s);
        let _ = writeln!(s, "| check | result | detail |");
        let _ = writeln!(s, "|---|---|---|");
        let r = &self.reliability;
        let _ = writeln!(
            s,
            "| reliability | {} | {} runs, {} decodes{} |",
            mark(r.passed),
            r.runs,
            r.decodes,
            r.witness.as_ref().map(|w| format!("; {w}")).unwrap_or_default()
        );
        for p in &self.privacy {
            let _ = writeln!(
                s,
                "| privacy ({}) | {} | max TV {:.6} (threshold {}); {}{} |",
                p.mode,
                mark(p.passed),
                p.statistic,
                p.threshold,
                p.detail,
                p.witness.as_ref().map(|w| format!("; {w}")).unwrap_or_default()
            );
        }
        if self.srp.applicable {
            let rows: Vec<String> = self
                .srp
                .rows
                .iter()
                .map(|r| format!("{}:({},{})", r.theta, r.counts.0, r.counts.1))
                .collect();
            let _ = writeln!(
                s,
                "| srp | {} | {}{} |",
                mark(self.srp.passed),
                rows.join(" "),
                self.srp.witness.as_ref().map(|w| format!("; {w}")).unwrap_or_default()
            );
        } else {
            let _ = writeln!(s, "| srp | n/a | not claimed by this scheme |");
        }
        let show = |v: &Option<Rational>| v.map(|r| r.to_string()).unwrap_or_else(|| "-".into());
        let rt = &self.rate;
        let _ = writeln!(
            s,
            "| rate | {} | measured {} (L={}), best LB {}, best UB {}, {} |",
            mark(rt.constant && rt.within_bounds),
            show(&rt.measured),
            self.file_length,
            show(&rt.best_lower),
            show(&rt.best_upper),
            rt.tightness
        );
        let _ = writeln!(s);
        let _ = writeln!(s, "overall: {}", if self.passed() { "PASS" } else { "FAIL" });
        s
    }
}

/// Symbolic plan check for every θ and seed, plus decoding of random stores.
pub fn verify_reliability(scheme: &dyn Scheme, cfg: &VerifyConfig) -> ReliabilityReport {
    let mut runs = 0;
    let mut decodes = 0;
    let fail = |runs, decodes, w| ReliabilityReport { runs, decodes, passed: false, witness: Some(w) };
    for theta in scheme.thetas() {
        for trial in 0..cfg.seeds {
            let witness = |detail: String, stream, server| Witness {
                seed: cfg.seed,
                stream,
                trial,
                theta,
                other_theta: None,
                server,
                detail,
            };
            let mut rng = SeededSource::for_trial(cfg.seed, streams::RELIABILITY, trial);
            let t = match scheme.run(theta, &mut rng) {
                Ok(t) => t,
                Err(e) => return fail(runs, decodes, witness(format!("run failed: {e}"), streams::RELIABILITY, None)),
            };
            runs += 1;
            if let Err(m) = symbolic_check(&t) {
                let detail = format!("bit {} misses by {}", m.bit, m.residual);
                return fail(runs, decodes, witness(detail, streams::RELIABILITY, None));
            }
            for d in 0..cfg.decode_trials {
                let mut srng = SeededSource::for_trial(cfg.seed, streams::STORE, trial * cfg.decode_trials + d);
                let store = FileStore::random(scheme.graph(), t.file_length(), &mut srng);
                let got = answer_all(&store, &t).and_then(|a| decode(&t, &a));
                decodes += 1;
                match got {
                    Ok(bits) if store.file(theta) == Some(&bits[..]) => {}
                    Ok(_) => {
                        return fail(runs, decodes, witness("decoded file differs".into(), streams::RELIABILITY, None))
                    }
                    Err(e) => return fail(runs, decodes, witness(format!("decode failed: {e}"), streams::RELIABILITY, None)),
                }
            }
        }
    }
    ReliabilityReport { runs, decodes, passed: true, witness: None }
}

/// Attribution of the desired bits between its two hosting servers, which
/// must be even on every run.
pub fn verify_srp(scheme: &dyn Scheme, cfg: &VerifyConfig) -> SrpReport {
    let applicable = scheme.descriptor().srp;
    let mut rows = Vec::new();
    let mut witness = None;
    for theta in scheme.thetas() {
        for trial in 0..cfg.seeds.max(1) {
            let w = |detail: String| Witness {
                seed: cfg.seed,
                stream: streams::RELIABILITY,
                trial,
                theta,
                other_theta: None,
                server: None,
                detail,
            };
            let mut rng = SeededSource::for_trial(cfg.seed, streams::RELIABILITY, trial);
            let counts = scheme.run(theta, &mut rng).and_then(|t| {
                let c = srp_attribution(&t)?;
                Ok((c, t.file_length()))
            });
            match counts {
                Ok((c, l)) => {
                    if trial == 0 {
                        rows.push(SrpRow { theta, counts: c });
                    }
                    if witness.is_none() && (l % 2 != 0 || c != (l / 2, l / 2)) {
                        witness = Some(w(format!("attribution ({},{}) for L={l}", c.0, c.1)));
                    }
                }
                Err(e) => {
                    if witness.is_none() {
                        witness = Some(w(e.to_string()));
                    }
                }
            }
        }
    }
    SrpReport { applicable, rows, passed: witness.is_none(), witness }
}

/// Measured rate against the bound calculator for the scheme's graph.
pub fn verify_rate(scheme: &dyn Scheme, cfg: &VerifyConfig) -> RateReport {
    let mut measured = None;
    let mut constant = true;
    for theta in scheme.thetas() {
        for trial in 0..cfg.seeds.max(1) {
            let mut rng = SeededSource::for_trial(cfg.seed, streams::RELIABILITY, trial);
            match scheme.run(theta, &mut rng).and_then(|t| measured_rate(&t)) {
                Ok(r) => match measured {
                    None => measured = Some(r),
                    Some(m) if m != r => constant = false,
                    _ => {}
                },
                Err(_) => constant = false,
            }
        }
    }
    let entries = bounds::bound_report(scheme.graph());
    let (best_lower, best_upper) = bounds::best_exact(&entries);
    let within_bounds = measured.is_some_and(|m| {
        entries.iter().filter(|e| e.kind == BoundKind::Upper && e.applicable).all(|e| match (e.exact(), &e.value) {
            (Some(u), _) => m <= u,
            (None, Some(v)) => (*m.numer() as f64 / *m.denom() as f64) <= v.as_f64() + 1e-12,
            (None, None) => true,
        })
    });
    RateReport { measured, constant, best_lower, best_upper, within_bounds, tightness: bounds::tightness_of(&entries) }
}

/// Privacy tiers selected by `cfg.privacy`.
pub fn verify_privacy(scheme: &dyn Scheme, cfg: &VerifyConfig) -> Vec<PrivacyReport> {
    match cfg.privacy {
        PrivacyMode::Off => Vec::new(),
        PrivacyMode::Exact => vec![privacy::verify_privacy_exact(scheme, cfg)],
        PrivacyMode::Structural => vec![privacy::verify_privacy_structural(scheme, cfg)],
        PrivacyMode::Statistical => vec![privacy::verify_privacy_statistical(scheme, cfg)],
        PrivacyMode::Auto => match privacy::try_privacy_exact(scheme, cfg) {
            Ok(r) => vec![r],
            Err(e) => {
                let mut s = privacy::verify_privacy_structural(scheme, cfg);
                s.detail = format!("{}; exact skipped: {e}", s.detail);
                vec![s, privacy::verify_privacy_statistical(scheme, cfg)]
            }
        },
    }
}

pub fn verify_scheme(scheme: &dyn Scheme, cfg: &VerifyConfig) -> VerifyReport {
    let reliability = verify_reliability(scheme, cfg);
    let privacy = verify_privacy(scheme, cfg);
    let srp = verify_srp(scheme, cfg);
    let rate = verify_rate(scheme, cfg);
    VerifyReport {
        scheme: scheme.name(),
        graph: scheme.graph().to_string(),
        file_length: scheme.file_length(),
        reliability,
        privacy,
        srp,
        rate,
    }
}
