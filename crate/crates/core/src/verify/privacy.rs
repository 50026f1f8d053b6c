//! Privacy against a single server, in three strengths: exact enumeration of
//! the query distribution, θ-invariance of canonical patterns, and sampled
//! total-variation distance of query features.

use std::collections::{BTreeMap, HashMap};
use std::hash::{Hash, Hasher};

use num_rational::Ratio;
use num_traits::{Signed, Zero};
use rayon::prelude::*;
use rustc_hash::{FxHashMap, FxHasher};

use crate::error::{Error, Result};
use crate::graph::FileId;
use crate::protocol::{LinearForm, Transcript};
use crate::random::{enumerate_outcomes, randomness_space_estimate, SeededSource};
use crate::schemes::Scheme;

use super::pattern::{canonical_pattern, CanonicalPattern};
use super::{streams, PrivacyMode, PrivacyReport, VerifyConfig, Witness};

type Prob = Ratio<i128>;

/// Features with more distinct pooled values than this are left out of the
/// statistical comparison; their sampling noise would swamp the threshold.
pub const MAX_FEATURE_SUPPORT: usize = 64;

pub const MIN_SAMPLES: u64 = 10_000;

/// Trials per parallel work unit; fixed so reports do not depend on threading.
const CHUNK: u64 = 4096;

fn witness(cfg: &VerifyConfig, stream: u64, trial: u64, theta: FileId, other: Option<FileId>, server: Option<usize>, detail: String) -> Witness {
    Witness { seed: cfg.seed, stream, trial, theta, other_theta: other, server, detail }
}

fn fingerprint<T: Hash>(v: &T) -> u64 {
    let mut h = FxHasher::default();
    v.hash(&mut h);
    h.finish()
}

/// Exact per-server query distribution of one θ.
fn exact_distribution(scheme: &dyn Scheme, theta: FileId, budget: u64) -> Result<Vec<HashMap<Vec<LinearForm>, Prob>>> {
    let n = scheme.graph().n_vertices();
    let mut weights: Vec<HashMap<Vec<LinearForm>, BTreeMap<u128, u64>>> = vec![HashMap::new(); n];
    let mut failure = None;
    enumerate_outcomes(
        budget,
        |rng| scheme.run(theta, rng),
        |t, w| match t {
            Ok(t) => {
                for (s, map) in weights.iter_mut().enumerate() {
                    *map.entry(t.server_requests(s + 1).to_vec()).or_default().entry(w).or_default() += 1;
                }
            }
            Err(e) => {
                failure.get_or_insert(e);
            }
        },
    )?;
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(weights
        .into_iter()
        .map(|m| {
            m.into_iter()
                .map(|(q, ws)| {
                    let p = ws
                        .into_iter()
                        .fold(Prob::zero(), |acc, (w, c)| acc + Prob::new(c as i128, w as i128));
                    (q, p)
                })
                .collect()
        })
        .collect())
}

fn exact_tv(a: &HashMap<Vec<LinearForm>, Prob>, b: &HashMap<Vec<LinearForm>, Prob>) -> Prob {
    let mut sum = Prob::zero();
    for (q, p) in a {
        sum += (p - b.get(q).copied().unwrap_or_else(Prob::zero)).abs();
    }
    for (q, p) in b {
        if !a.contains_key(q) {
            sum += *p;
        }
    }
    sum / Prob::from_integer(2)
}

/// Exact privacy, or an error when the randomness space exceeds the budget.
pub fn try_privacy_exact(scheme: &dyn Scheme, cfg: &VerifyConfig) -> Result<PrivacyReport> {
    let thetas = scheme.thetas();
    for &theta in &thetas {
        let size = randomness_space_estimate(|rng| {
            let _ = scheme.run(theta, rng);
        });
        if size > u128::from(cfg.budget) {
            return Err(Error::BudgetExceeded(cfg.budget));
        }
    }
    let mut dists = Vec::with_capacity(thetas.len());
    let mut points = 0usize;
    for &theta in &thetas {
        let d = exact_distribution(scheme, theta, cfg.budget)?;
        points = points.max(d.iter().map(HashMap::len).max().unwrap_or(0));
        dists.push(d);
    }
    let mut worst = (Prob::zero(), None);
    for (k, d) in dists.iter().enumerate().skip(1) {
        for (s, (ref_map, map)) in dists[0].iter().zip(d).enumerate() {
            let tv = exact_tv(ref_map, map);
            if tv > worst.0 {
                worst = (tv, Some((k, s + 1)));
            }
        }
    }
    let statistic = *worst.0.numer() as f64 / *worst.0.denom() as f64;
    let w = worst.1.map(|(k, s)| {
        witness(
            cfg,
            0,
            0,
            thetas[0],
            Some(thetas[k]),
            Some(s),
            format!("query distributions differ, exact TV {}", worst.0),
        )
    });
    Ok(PrivacyReport {
        mode: PrivacyMode::Exact,
        statistic,
        threshold: 0.0,
        passed: w.is_none(),
        witness: w,
        detail: format!("{} θ enumerated, up to {points} distinct queries per server", thetas.len()),
    })
}

/// Exact privacy; falls back to sampling when the budget is exceeded.
pub fn verify_privacy_exact(scheme: &dyn Scheme, cfg: &VerifyConfig) -> PrivacyReport {
    match try_privacy_exact(scheme, cfg) {
        Ok(r) => r,
        Err(e) => {
            let mut r = verify_privacy_statistical(scheme, cfg);
            r.detail = format!("{}; exact skipped: {e}", r.detail);
            r
        }
    }
}

/// Canonical patterns per server must occur for every θ alike.
pub fn verify_privacy_structural(scheme: &dyn Scheme, cfg: &VerifyConfig) -> PrivacyReport {
    let thetas = scheme.thetas();
    let n = scheme.graph().n_vertices();
    // per θ, per server: pattern -> (count, first trial)
    let mut seen: Vec<Vec<BTreeMap<CanonicalPattern, (u64, u64)>>> = Vec::new();
    let trials = cfg.seeds.max(1);
    for &theta in &thetas {
        let mut per_server = vec![BTreeMap::new(); n];
        for trial in 0..trials {
            let mut rng = SeededSource::for_trial(cfg.seed, streams::STRUCTURAL, trial);
            match scheme.run(theta, &mut rng) {
                Ok(t) => {
                    for (s, m) in per_server.iter_mut().enumerate() {
                        let e = m.entry(canonical_pattern(t.server_requests(s + 1))).or_insert((0, trial));
                        e.0 += 1;
                    }
                }
                Err(e) => {
                    return PrivacyReport {
                        mode: PrivacyMode::Structural,
                        statistic: 1.0,
                        threshold: 0.0,
                        passed: false,
                        witness: Some(witness(cfg, streams::STRUCTURAL, trial, theta, None, None, format!("run failed: {e}"))),
                        detail: String::new(),
                    }
                }
            }
        }
        seen.push(per_server);
    }
    let mut statistic = 0.0f64;
    let mut w = None;
    let mut random_patterns = false;
    for s in 0..n {
        let base = &seen[0][s];
        random_patterns |= seen.iter().any(|per| per[s].len() > 1);
        for (k, per) in seen.iter().enumerate().skip(1) {
            let other = &per[s];
            let mut tv = 0.0;
            for p in base.keys().chain(other.keys().filter(|p| !base.contains_key(*p))) {
                let a = base.get(p).map_or(0, |e| e.0) as f64 / trials as f64;
                let b = other.get(p).map_or(0, |e| e.0) as f64 / trials as f64;
                tv += (a - b).abs() / 2.0;
            }
            statistic = statistic.max(tv);
            if w.is_none() {
                let missing = other
                    .iter()
                    .find(|(p, _)| !base.contains_key(*p))
                    .map(|(p, e)| (thetas[k], thetas[0], p, e.1))
                    .or_else(|| base.iter().find(|(p, _)| !other.contains_key(*p)).map(|(p, e)| (thetas[0], thetas[k], p, e.1)));
                if let Some((th, other_th, p, trial)) = missing {
                    w = Some(witness(
                        cfg,
                        streams::STRUCTURAL,
                        trial,
                        th,
                        Some(other_th),
                        Some(s + 1),
                        format!("pattern [{p}] never seen for the other θ"),
                    ));
                }
            }
        }
    }
    PrivacyReport {
        mode: PrivacyMode::Structural,
        statistic,
        threshold: 0.0,
        passed: w.is_none(),
        witness: w,
        detail: format!(
            "{} θ x {trials} runs, {} patterns",
            thetas.len(),
            if random_patterns { "random" } else { "deterministic" }
        ),
    }
}

/// Feature of one server's query: (kind, slot) picks a distribution, the
/// `u64` is the observed value.
type FeatureKey = (u8, u32);

const PATTERN: u8 = 0;
const WIRE_SHAPE: u8 = 1;
const FULL_QUERY: u8 = 2;
const SLOT_FILE: u8 = 3;
const SLOT_BIT: u8 = 4;

fn feature_name(key: FeatureKey) -> String {
    let (req, pos) = (key.1 / 1024 + 1, key.1 % 1024 + 1);
    match key.0 {
        PATTERN => "canonical pattern".into(),
        WIRE_SHAPE => "renamed query in wire order".into(),
        FULL_QUERY => "full query".into(),
        SLOT_FILE => format!("file of term {pos} in request {req}"),
        _ => format!("bit of term {pos} in request {req}"),
    }
}

fn features(q: &[LinearForm], mut emit: impl FnMut(FeatureKey, u64)) {
    emit((PATTERN, 0), canonical_pattern(q).fingerprint());
    emit((FULL_QUERY, 0), fingerprint(&q));
    // the query with indices renamed by first appearance in wire order
    let mut names: FxHashMap<(FileId, u32), u32> = FxHashMap::default();
    let mut next: Vec<(FileId, u32)> = Vec::new();
    let mut shape = FxHasher::default();
    for (i, form) in q.iter().enumerate() {
        form.len().hash(&mut shape);
        for (m, c) in form.coords().iter().enumerate() {
            let slot = (i as u32) * 1024 + m as u32;
            emit((SLOT_FILE, slot), u64::from(c.file.edge) << 32 | u64::from(c.file.copy));
            emit((SLOT_BIT, slot), u64::from(c.bit));
            let name = *names.entry((c.file, c.bit)).or_insert_with(|| match next.iter_mut().find(|(f, _)| *f == c.file) {
                Some((_, n)) => {
                    *n += 1;
                    *n
                }
                None => {
                    next.push((c.file, 1));
                    1
                }
            });
            (c.file, name).hash(&mut shape);
        }
    }
    emit((WIRE_SHAPE, 0), shape.finish());
}

/// Counts per server of (feature, value).
type Counts = Vec<FxHashMap<(FeatureKey, u64), u64>>;

fn merge(mut a: Counts, b: Counts) -> Counts {
    for (x, y) in a.iter_mut().zip(b) {
        for (k, c) in y {
            *x.entry(k).or_default() += c;
        }
    }
    a
}

/// Regroups one server's counts by feature.
fn by_feature(c: &FxHashMap<(FeatureKey, u64), u64>) -> BTreeMap<FeatureKey, HashMap<u64, u64>> {
    let mut out: BTreeMap<FeatureKey, HashMap<u64, u64>> = BTreeMap::new();
    for (&(key, v), &n) in c {
        out.entry(key).or_default().insert(v, n);
    }
    out
}

fn sample_theta(scheme: &dyn Scheme, cfg: &VerifyConfig, k: usize, theta: FileId) -> std::result::Result<Counts, Witness> {
    let n = scheme.graph().n_vertices();
    let stream = streams::STATISTICAL + k as u64;
    let chunks = cfg.samples.div_ceil(CHUNK);
    let results: Vec<std::result::Result<Counts, Witness>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut counts: Counts = vec![FxHashMap::default(); n];
            for trial in c * CHUNK..((c + 1) * CHUNK).min(cfg.samples) {
                let mut rng = SeededSource::for_trial(cfg.seed, stream, trial);
                let t: Transcript = scheme
                    .run(theta, &mut rng)
                    .map_err(|e| witness(cfg, stream, trial, theta, None, None, format!("run failed: {e}")))?;
                for (s, map) in counts.iter_mut().enumerate() {
                    features(t.server_requests(s + 1), |key, v| {
                        *map.entry((key, v)).or_default() += 1;
                    });
                }
            }
            Ok(counts)
        })
        .collect();
    let mut total: Counts = vec![FxHashMap::default(); n];
    for r in results {
        total = merge(total, r?);
    }
    Ok(total)
}

/// Empirical total-variation distance between the query features of every θ
/// pair, per server. Values never observed for a feature (a request slot
/// that a run did not have) count as one extra "absent" value.
pub fn verify_privacy_statistical(scheme: &dyn Scheme, cfg: &VerifyConfig) -> PrivacyReport {
    let report = |statistic, passed, witness, detail| PrivacyReport {
        mode: PrivacyMode::Statistical,
        statistic,
        threshold: cfg.tolerance,
        passed,
        witness,
        detail,
    };
    if cfg.samples < MIN_SAMPLES {
        return report(f64::NAN, false, None, format!("needs at least {MIN_SAMPLES} samples, got {}", cfg.samples));
    }
    let thetas = scheme.thetas();
    let mut all = Vec::with_capacity(thetas.len());
    for (k, &theta) in thetas.iter().enumerate() {
        match sample_theta(scheme, cfg, k, theta) {
            Ok(c) => all.push(c.iter().map(by_feature).collect::<Vec<_>>()),
            Err(w) => return report(1.0, false, Some(w), "run failed while sampling".into()),
        }
    }
    let n = cfg.samples as f64;
    let servers = scheme.graph().n_vertices();
    let mut worst: (f64, Option<(usize, usize, usize, FeatureKey)>) = (0.0, None);
    let mut compared = 0usize;
    let mut skipped = 0usize;
    for s in 0..servers {
        let mut keys: Vec<FeatureKey> = all.iter().flat_map(|c| c[s].keys().copied()).collect();
        keys.sort_unstable();
        keys.dedup();
        for key in keys {
            let empty = HashMap::new();
            let dists: Vec<&HashMap<u64, u64>> = all.iter().map(|c| c[s].get(&key).unwrap_or(&empty)).collect();
            let mut support: Vec<u64> = dists.iter().flat_map(|d| d.keys().copied()).collect();
            support.sort_unstable();
            support.dedup();
            let absent: Vec<u64> = dists.iter().map(|d| cfg.samples - d.values().sum::<u64>()).collect();
            let width = support.len() + usize::from(absent.iter().any(|&a| a > 0));
            if width > MAX_FEATURE_SUPPORT {
                skipped += 1;
                continue;
            }
            compared += 1;
            for a in 0..dists.len() {
                for b in a + 1..dists.len() {
                    let mut tv = (absent[a] as f64 - absent[b] as f64).abs();
                    for v in &support {
                        let x = dists[a].get(v).copied().unwrap_or(0) as f64;
                        let y = dists[b].get(v).copied().unwrap_or(0) as f64;
                        tv += (x - y).abs();
                    }
                    let tv = tv / (2.0 * n);
                    if tv > worst.0 {
                        worst = (tv, Some((a, b, s + 1, key)));
                    }
                }
            }
        }
    }
    let passed = worst.0 <= cfg.tolerance;
    let w = if passed {
        None
    } else {
        worst.1.map(|(a, b, s, key)| {
            witness(
                cfg,
                streams::STATISTICAL + a as u64,
                0,
                thetas[a],
                Some(thetas[b]),
                Some(s),
                format!("{} differs, TV {:.4}", feature_name(key), worst.0),
            )
        })
    };
    report(
        worst.0,
        passed,
        w,
        format!(
            "{} θ x {} samples, {compared} features compared, {skipped} with support over {MAX_FEATURE_SUPPORT} left out",
            thetas.len(),
            cfg.samples
        ),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::GraphSpec;
    use crate::schemes::build_scheme;

    fn scheme(name: &str, graph: &str) -> Box<dyn Scheme> {
        build_scheme(name, &GraphSpec::parse(graph).unwrap()).unwrap()
    }

    #[test]
    fn exact_path_and_star() {
        for (name, g) in [("path", "path:5"), ("star", "star:4")] {
            let r = try_privacy_exact(&*scheme(name, g), &VerifyConfig::default()).unwrap();
            assert!(r.passed, "{g}: {:?}", r.witness);
            assert_eq!(r.statistic, 0.0);
        }
    }

    #[test]
    fn exact_path3_server2_uniform() {
        // the middle server sees one bit of each file, uniform over [2] x [2]
        let s = scheme("path", "path:3");
        let d = exact_distribution(&*s, FileId::simple(1), 1 << 20).unwrap();
        assert_eq!(d[1].len(), 4);
        assert!(d[1].values().all(|p| *p == Prob::new(1, 4)));
    }

    #[test]
    fn exact_budget() {
        let s = scheme("path", "path:5");
        let cfg = VerifyConfig { budget: 4, ..Default::default() };
        assert!(matches!(try_privacy_exact(&*s, &cfg), Err(Error::BudgetExceeded(4))));
    }

    #[test]
    fn structural_complete3() {
        let s = scheme("complete", "complete:3");
        let r = verify_privacy_structural(&*s, &VerifyConfig { seeds: 5, ..Default::default() });
        assert!(r.passed, "{:?}", r.witness);
        assert!(r.detail.contains("deterministic"));
    }

    #[test]
    fn statistical_path3() {
        let s = scheme("path", "path:3");
        let cfg = VerifyConfig { samples: 100_000, ..Default::default() };
        let r = verify_privacy_statistical(&*s, &cfg);
        assert!(r.passed, "{} {:?}", r.statistic, r.witness);
    }

    #[test]
    fn statistical_needs_samples() {
        let s = scheme("path", "path:3");
        let r = verify_privacy_statistical(&*s, &VerifyConfig { samples: 10, ..Default::default() });
        assert!(!r.passed);
    }

    #[test]
    fn sampling_is_deterministic() {
        let s = scheme("star", "star:4");
        let cfg = VerifyConfig { samples: 10_000, ..Default::default() };
        let a = verify_privacy_statistical(&*s, &cfg);
        let b = verify_privacy_statistical(&*s, &cfg);
        assert_eq!(a.statistic, b.statistic);
    }
}
