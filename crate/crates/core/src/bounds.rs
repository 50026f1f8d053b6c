//! Capacity bounds: closed-form lower and upper bounds for a storage graph,
//! with exact rationals wherever the formula allows it.

use std::fmt;

use serde::Serialize;

use crate::graph::{Family, GraphFlag, GraphSpec};
use crate::Rational;

/// Slack applied when comparing square-root bounds.
pub const FLOAT_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundKind {
    Lower,
    Upper,
}

impl fmt::Display for BoundKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BoundKind::Lower => "lower",
            BoundKind::Upper => "upper",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "type", content = "value", rename_all = "lowercase")]
pub enum BoundValue {
    Exact(#[serde(serialize_with = "ser_ratio")] Rational),
    Float(f64),
}

pub(crate) fn ser_ratio<S: serde::Serializer>(r: &Rational, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&r.to_string())
}

pub(crate) fn ser_opt_ratio<S: serde::Serializer>(r: &Option<Rational>, s: S) -> Result<S::Ok, S::Error> {
    match r {
        Some(r) => s.serialize_str(&r.to_string()),
        None => s.serialize_none(),
    }
}

impl BoundValue {
    pub fn as_f64(&self) -> f64 {
        match self {
            BoundValue::Exact(r) => *r.numer() as f64 / *r.denom() as f64,
            BoundValue::Float(x) => *x,
        }
    }

    pub fn exact(&self) -> Option<Rational> {
        match self {
            BoundValue::Exact(r) => Some(*r),
            BoundValue::Float(_) => None,
        }
    }
}

impl fmt::Display for BoundValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BoundValue::Exact(r) => write!(f, "{r}"),
            BoundValue::Float(x) => write!(f, "~{x:.6}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundEntry {
    pub kind: BoundKind,
    /// `None` when the formula does not apply or cannot be evaluated.
    pub value: Option<BoundValue>,
    /// Short token naming the result the value comes from.
    pub source: String,
    pub formula: String,
    pub applicable: bool,
    pub reason: Option<String>,
    /// Bounds the `r -> ∞` limit only; never used for finite tightness.
    pub asymptotic: bool,
}

impl BoundEntry {
    fn new(kind: BoundKind, value: BoundValue, source: &str, formula: impl Into<String>) -> Self {
        BoundEntry {
            kind,
            value: Some(value),
            source: source.into(),
            formula: formula.into(),
            applicable: true,
            reason: None,
            asymptotic: false,
        }
    }

    fn lower(value: Rational, source: &str, formula: impl Into<String>) -> Self {
        Self::new(BoundKind::Lower, BoundValue::Exact(value), source, formula)
    }

    fn upper(value: Rational, source: &str, formula: impl Into<String>) -> Self {
        Self::new(BoundKind::Upper, BoundValue::Exact(value), source, formula)
    }

    fn inapplicable(kind: BoundKind, source: &str, formula: &str, reason: impl Into<String>) -> Self {
        BoundEntry {
            kind,
            value: None,
            source: source.into(),
            formula: formula.into(),
            applicable: false,
            reason: Some(reason.into()),
            asymptotic: false,
        }
    }

    pub fn exact(&self) -> Option<Rational> {
        self.value.and_then(|v| v.exact())
    }

    /// Counts toward exact tightness.
    pub fn is_exact_finite(&self) -> bool {
        self.applicable && !self.asymptotic && self.exact().is_some()
    }
}

/// `2 - 2^(1-r)` as an exact rational.
pub fn lift_factor(r: usize) -> Rational {
    assert!((1..62).contains(&r));
    Rational::new((1 << r) - 1, 1 << (r - 1))
}

fn q(n: i64, d: i64) -> Rational {
    Rational::new(n, d)
}

/// Rate of the complete-graph scheme, `6 / ((5 - 2^(3-N)) N)`.
pub fn complete_scheme_rate(n: usize) -> Rational {
    assert!((3..62).contains(&n));
    let p = 1i64 << (n - 3);
    q(6 * p, (5 * p - 1) * n as i64)
}

/// `1 / (2M√N + M)`.
pub fn bipartite_lower(m: usize, n: usize) -> f64 {
    let (m, n) = (m as f64, n as f64);
    1.0 / (2.0 * m * n.sqrt() + m)
}

/// `1 / (√(2MN) - M/2)`.
pub fn bipartite_upper(m: usize, n: usize) -> f64 {
    let (m, n) = (m as f64, n as f64);
    1.0 / ((2.0 * m * n).sqrt() - m / 2.0)
}

/// Earlier bounds on `K_{M,N}`: lower `1/((1 - 2^(1-(M+N)))(M+N))` and upper `1/M`.
pub fn bipartite_previous(m: usize, n: usize) -> (f64, f64) {
    let s = (m + n) as f64;
    (1.0 / ((1.0 - 2f64.powf(1.0 - s)) * s), 1.0 / m as f64)
}

/// Conditions under which the `K_{M,N}` bounds improve on the earlier ones:
/// `(N >= 9M/8 implies upper <= 1/M, N >= 25M^2 implies lower >= earlier lower)`,
/// each evaluated with [`FLOAT_SLACK`]. A condition whose premise fails holds vacuously.
pub fn bipartite_improvement_holds(m: usize, n: usize) -> (bool, bool) {
    let (old_lb, old_ub) = bipartite_previous(m, n);
    let ub_ok = 8 * n < 9 * m || bipartite_upper(m, n) <= old_ub + FLOAT_SLACK;
    let lb_ok = n < 25 * m * m || bipartite_lower(m, n) + FLOAT_SLACK >= old_lb;
    (ub_ok, lb_ok)
}

/// Every bound formula for `g`, including the inapplicable ones with a reason.
pub fn bound_report(g: &GraphSpec) -> Vec<BoundEntry> {
    let r = g.multiplicity();
    let big_n = g.n_vertices();
    let edges = g.base_edge_count();
    let f = lift_factor(r);
    let mut out = Vec::new();

    // family-specific rows (base graph + lift)
    let mut base_lbs: Vec<(Rational, &str)> = Vec::new();
    let base = g.base();
    for fam in base.families() {
        match fam {
            Family::Path { n } => {
                let c = q(2, n as i64);
                base_lbs.push((c, "path-scheme"));
                if r == 1 {
                    out.push(BoundEntry::lower(c, "path-scheme", format!("2/N, N={n}")));
                    out.push(BoundEntry::upper(c, "path-converse", format!("2/N, N={n}")));
                } else {
                    let ub = if n % 2 == 0 { c } else { q(2, n as i64 - 1) } / f;
                    let rule = if n % 2 == 0 { "2/N" } else { "2/(N-1)" };
                    out.push(BoundEntry::upper(ub, "multi-path-converse", format!("{rule} / (2-2^(1-r)), N={n}, r={r}")));
                }
            }
            Family::Cycle { n } => {
                let c = q(2, n as i64 + 1);
                base_lbs.push((c, "cycle-scheme"));
                if r == 1 {
                    out.push(BoundEntry::lower(c, "cycle-scheme", format!("2/(N+1), N={n}")));
                    out.push(BoundEntry::upper(c, "cycle-converse", format!("2/(N+1), N={n}")));
                } else {
                    out.push(BoundEntry::upper(
                        q(2, n as i64) / f,
                        "multigraph-converse",
                        format!("2/N / (2-2^(1-r)), N={n}, r={r}"),
                    ));
                }
            }
            Family::Star { n } => {
                let leaves = n - 1;
                let c = q(2, n as i64);
                base_lbs.push((c, "star-trivial-scheme"));
                if r == 1 {
                    out.push(BoundEntry::lower(c, "star-trivial-scheme", format!("2/N, N={n} vertices, {leaves} leaves")));
                    out.push(BoundEntry::new(
                        BoundKind::Lower,
                        BoundValue::Float(bipartite_lower(1, leaves)),
                        "star-scheme",
                        format!("1/(2*sqrt(l)+1), l={leaves} leaves"),
                    ));
                    out.push(BoundEntry::new(
                        BoundKind::Upper,
                        BoundValue::Float(bipartite_upper(1, leaves)),
                        "bipartite-converse",
                        format!("1/(sqrt(2l)-1/2), l={leaves} leaves"),
                    ));
                } else {
                    out.push(BoundEntry::upper(
                        Rational::from_integer(1) / f,
                        "multigraph-converse",
                        format!("1/(2-2^(1-r)), {leaves} leaves, r={r}"),
                    ));
                }
            }
            Family::CompleteBipartite { m, n } => {
                let c = q(2, (m * (n + 1)) as i64);
                base_lbs.push((c, "compose-stars"));
                if r == 1 {
                    out.push(BoundEntry::lower(c, "compose-stars", format!("2/(M(N+1)), M={m}, N={n}")));
                    out.push(BoundEntry::new(
                        BoundKind::Lower,
                        BoundValue::Float(bipartite_lower(m, n)),
                        "bipartite-scheme",
                        format!("1/(2M*sqrt(N)+M), M={m}, N={n}"),
                    ));
                    out.push(BoundEntry::new(
                        BoundKind::Upper,
                        BoundValue::Float(bipartite_upper(m, n)),
                        "bipartite-converse",
                        format!("1/(sqrt(2MN)-M/2), M={m}, N={n}"),
                    ));
                }
            }
            Family::Complete { n } if n >= 3 => {
                let c = complete_scheme_rate(n);
                base_lbs.push((c, "complete-scheme"));
                if r == 1 {
                    out.push(BoundEntry::lower(c, "complete-scheme", format!("6/((5-2^(3-N))N), N={n}")));
                    out.push(BoundEntry::upper(q(2, n as i64 + 1), "complete-converse", format!("2/(N+1), N={n}")));
                }
            }
            Family::Complete { .. } => {}
        }
    }

    if r >= 2 {
        for &(c, src) in &base_lbs {
            out.push(BoundEntry::lower(c / f, "lift", format!("{src} rate {c} / (2-2^(1-r)), r={r}")));
        }
        if let Some(&(best, src)) = base_lbs.iter().max_by(|a, b| a.0.cmp(&b.0)) {
            out.push(BoundEntry::lower(
                best / Rational::from_integer(r as i64),
                "multigraph-trivial",
                format!("{src} rate {best} / r, r={r}"),
            ));
        }
    }

    // general converse, with the multigraph factor (which is 1 at r = 1)
    let general = "min(D/|E|, 1/nu) / (2-2^(1-r))";
    if edges == 0 {
        out.push(BoundEntry::inapplicable(BoundKind::Upper, "general-converse", general, "graph has no edges"));
    } else {
        match base.matching_number() {
            Ok(nu) => {
                let v = q(base.max_degree() as i64, edges as i64).min(q(1, nu as i64)) / f;
                let mut e = BoundEntry::upper(
                    v,
                    "general-converse",
                    format!("min({}/{}, 1/{}) / {}", base.max_degree(), edges, nu, f),
                );
                e.formula = format!("{general} = {}", e.formula);
                out.push(e);
            }
            Err(err) => out.push(BoundEntry::inapplicable(BoundKind::Upper, "general-converse", general, err.to_string())),
        }
    }

    let hvt = "1/(N-(N-1)2^(-r))";
    if g.has_flag(GraphFlag::HamiltonianVertexTransitive) {
        let p = 1i64 << r;
        let n = big_n as i64;
        out.push(BoundEntry::upper(q(p, n * p - (n - 1)), "hvt-converse", format!("{hvt}, N={big_n}, r={r}")));
    } else {
        out.push(BoundEntry::inapplicable(
            BoundKind::Upper,
            "hvt-converse",
            hvt,
            "graph is not flagged hamiltonian and vertex_transitive",
        ));
    }

    let mut asym = BoundEntry::lower(q(1, big_n as i64), "asymptotic", format!("1/N as r -> inf, N={big_n}"));
    asym.asymptotic = true;
    out.push(asym);
    out
}

/// Outcome of comparing the best exact finite lower and upper bounds.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "status", rename_all = "lowercase")]
pub enum Tightness {
    Tight {
        #[serde(serialize_with = "ser_ratio")]
        value: Rational,
    },
    Gap {
        #[serde(serialize_with = "ser_ratio")]
        lower: Rational,
        #[serde(serialize_with = "ser_ratio")]
        upper: Rational,
        #[serde(serialize_with = "ser_ratio")]
        gap: Rational,
    },
    Unknown,
}

impl fmt::Display for Tightness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tightness::Tight { value } => write!(f, "tight at {value}"),
            Tightness::Gap { lower, upper, gap } => write!(f, "gap {gap} (lower {lower}, upper {upper})"),
            Tightness::Unknown => f.write_str("unknown"),
        }
    }
}

/// Largest exact finite lower bound and smallest exact upper bound.
pub fn best_exact(entries: &[BoundEntry]) -> (Option<Rational>, Option<Rational>) {
    let pick = |kind: BoundKind| {
        entries
            .iter()
            .filter(move |e| e.kind == kind && e.is_exact_finite())
            .filter_map(BoundEntry::exact)
    };
    (pick(BoundKind::Lower).max(), pick(BoundKind::Upper).min())
}

pub fn tightness_of(entries: &[BoundEntry]) -> Tightness {
    match best_exact(entries) {
        (Some(lower), Some(upper)) if lower == upper => Tightness::Tight { value: lower },
        (Some(lower), Some(upper)) => Tightness::Gap { lower, upper, gap: upper - lower },
        _ => Tightness::Unknown,
    }
}

pub fn tightness_check(g: &GraphSpec) -> Tightness {
    tightness_of(&bound_report(g))
}

/// Pairs of exact entries with lower > upper; empty for a consistent report.
pub fn inconsistencies(entries: &[BoundEntry]) -> Vec<(BoundEntry, BoundEntry)> {
    let mut bad = Vec::new();
    for lo in entries.iter().filter(|e| e.kind == BoundKind::Lower && e.is_exact_finite()) {
        for hi in entries.iter().filter(|e| e.kind == BoundKind::Upper && e.is_exact_finite()) {
            if lo.exact() > hi.exact() {
                bad.push((lo.clone(), hi.clone()));
            }
        }
    }
    bad
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g(s: &str) -> GraphSpec {
        GraphSpec::parse(s).unwrap()
    }

    #[test]
    fn path_is_tight() {
        assert_eq!(tightness_check(&g("path:6")), Tightness::Tight { value: q(1, 3) });
        assert_eq!(tightness_check(&g("path:4^2")), Tightness::Tight { value: q(1, 3) });
        assert_eq!(tightness_check(&g("path:6^3")), Tightness::Tight { value: q(4, 21) });
        assert_eq!(
            tightness_check(&g("path:5^2")),
            Tightness::Gap { lower: q(4, 15), upper: q(1, 3), gap: q(1, 15) }
        );
    }

    #[test]
    fn complete_graph() {
        assert_eq!(tightness_check(&g("complete:3")), Tightness::Tight { value: q(1, 2) });
        assert_eq!(complete_scheme_rate(4), q(1, 3));
        assert_eq!(complete_scheme_rate(5), q(24, 95));
        let rep = bound_report(&g("complete:4^2"));
        let hvt = rep.iter().find(|e| e.source == "hvt-converse").unwrap();
        assert_eq!(hvt.exact(), Some(q(4, 13)));
        assert!(inconsistencies(&rep).is_empty());
    }

    #[test]
    fn star_with_four_leaves() {
        let rep = bound_report(&g("complete_bipartite:1,4"));
        let ub = rep.iter().find(|e| e.source == "bipartite-converse").unwrap();
        assert!((ub.value.unwrap().as_f64() - 1.0 / (8f64.sqrt() - 0.5)).abs() < 1e-12);
        let lb = rep.iter().find(|e| e.source == "bipartite-scheme").unwrap();
        assert!((lb.value.unwrap().as_f64() - 0.2).abs() < 1e-12);
        let ex = rep.iter().find(|e| e.source == "compose-stars").unwrap();
        assert_eq!(ex.exact(), Some(q(2, 5)));
    }

    #[test]
    fn bipartite_improvement_conditions() {
        for (m, n) in [(2, 3), (2, 8), (3, 27), (1, 25), (2, 100)] {
            assert_eq!(bipartite_improvement_holds(m, n), (true, true));
        }
    }

    #[test]
    fn lift_factor_values() {
        assert_eq!(lift_factor(1), q(1, 1));
        assert_eq!(lift_factor(2), q(3, 2));
        assert_eq!(lift_factor(3), q(7, 4));
    }

    #[test]
    fn asymptotic_excluded() {
        let rep = bound_report(&g("cycle:5"));
        let (lb, ub) = best_exact(&rep);
        assert_eq!(lb, Some(q(1, 3)));
        assert_eq!(ub, Some(q(1, 3)));
        assert!(rep.iter().any(|e| e.asymptotic && e.exact() == Some(q(1, 5))));
    }
}
