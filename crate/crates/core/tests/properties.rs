use std::collections::{BTreeMap, BTreeSet};

use proptest::prelude::*;
use proptest::sample::subsequence;

use graph_pir::protocol::{measured_rate, symbolic_check, FileStore};
use graph_pir::random::randomness_space_estimate;
use graph_pir::verify::privacy::{try_privacy_exact, verify_privacy_statistical};
use graph_pir::verify::{canonical_pattern, joint_pattern};
use graph_pir::{
    build_scheme, Coordinate, FileId, GraphSpec, LinearForm, Rational, Scheme, SeededSource, Transcript, VerifyConfig,
};

fn all_pairs(n: usize) -> Vec<(usize, usize)> {
    (1..=n).flat_map(|a| (a + 1..=n).map(move |b| (a, b))).collect()
}

fn small_graph() -> impl Strategy<Value = GraphSpec> {
    (2usize..=7)
        .prop_flat_map(|n| {
            let pairs = all_pairs(n);
            let k = pairs.len().min(12);
            (Just(n), subsequence(pairs, 1..=k), 1usize..=3)
        })
        .prop_map(|(n, edges, r)| GraphSpec::new(n, edges, r, BTreeSet::new()).unwrap())
}

/// Largest set of pairwise disjoint edges, by trying every subset.
fn brute_matching(edges: &[(usize, usize)]) -> usize {
    let mut best = 0;
    for mask in 0u32..(1 << edges.len()) {
        let mut used = BTreeSet::new();
        let mut ok = true;
        for (i, &(a, b)) in edges.iter().enumerate() {
            if mask >> i & 1 == 1 {
                ok &= used.insert(a) && used.insert(b);
            }
        }
        if ok {
            best = best.max(mask.count_ones() as usize);
        }
    }
    best
}

proptest! {
    #[test]
    fn degree_sum_is_twice_edge_count(g in small_graph()) {
        prop_assert_eq!(g.degrees().iter().sum::<usize>(), 2 * g.base_edge_count());
    }

    #[test]
    fn matching_number_matches_brute_force(g in small_graph()) {
        let nu = g.matching_number().unwrap();
        prop_assert!(nu <= g.n_vertices() / 2);
        prop_assert_eq!(nu, brute_matching(g.edges()));
    }

    #[test]
    fn star_decomposition_partitions_edges(m in 1usize..=3, extra in 0usize..=3) {
        let n = m + extra;
        let g = GraphSpec::parse(&format!("complete_bipartite:{m},{n}")).unwrap();
        let parts = g.star_decomposition().unwrap();
        prop_assert_eq!(parts.len(), m);
        let mut seen = BTreeSet::new();
        for p in &parts {
            for e in p.edges() {
                prop_assert!(seen.insert(*e), "edge {:?} in two stars", e);
            }
        }
        prop_assert_eq!(seen.into_iter().collect::<Vec<_>>(), g.edges().to_vec());
    }
}

fn forms_strategy() -> impl Strategy<Value = Vec<LinearForm>> {
    let coord = (1u32..=3, 1u32..=2, 1u32..=6).prop_map(|(e, c, b)| Coordinate::new(FileId::new(e, c), b));
    prop::collection::vec(prop::collection::vec(coord, 1..=4), 1..=7)
        .prop_map(|reqs| reqs.into_iter().map(LinearForm::from_coords).filter(|f| !f.is_empty()).collect())
}

/// Renames every file's bit indices by its own permutation of `1..=6`.
fn recode(forms: &[LinearForm], perms: &BTreeMap<FileId, Vec<u32>>) -> Vec<LinearForm> {
    forms
        .iter()
        .map(|f| f.map(|c| Coordinate::new(c.file, perms[&c.file][c.bit as usize - 1])))
        .collect()
}

fn perms_strategy() -> impl Strategy<Value = BTreeMap<FileId, Vec<u32>>> {
    let files: Vec<FileId> = (1..=3).flat_map(|e| (1..=2).map(move |c| FileId::new(e, c))).collect();
    let perm = Just((1u32..=6).collect::<Vec<_>>()).prop_shuffle();
    prop::collection::vec(perm, files.len()).prop_map(move |ps| files.iter().copied().zip(ps).collect())
}

proptest! {
    #[test]
    fn pattern_invariant_under_recoding(
        forms in forms_strategy(),
        perms in perms_strategy(),
        order in Just((0usize..7).collect::<Vec<_>>()).prop_shuffle(),
    ) {
        let recoded = recode(&forms, &perms);
        let shuffled: Vec<LinearForm> = order.iter().filter(|&&k| k < recoded.len()).map(|&k| recoded[k].clone()).collect();
        prop_assert_eq!(canonical_pattern(&forms), canonical_pattern(&shuffled));
        let half = forms.len() / 2;
        prop_assert_eq!(
            joint_pattern(&[&forms[..half], &forms[half..]]),
            joint_pattern(&[&recoded[..half], &recoded[half..]])
        );
    }
}

/// Schemes small enough to run many times per case.
const MATRIX: &[(&str, &str)] = &[
    ("path", "path:2"),
    ("path", "path:5"),
    ("star", "star:5"),
    ("complete", "complete:3"),
    ("complete", "complete:4"),
    ("compose-stars", "complete_bipartite:2,3"),
    ("lift:path", "path:3^2"),
    ("lift:path", "path:4^3"),
    ("lift:star", "star:4^2"),
    ("lift:complete", "complete:3^2"),
];

/// Evaluates every request and XORs each planned bit directly from the store.
fn decode_by_hand(t: &Transcript, store: &FileStore) -> Vec<bool> {
    let answers: Vec<Vec<bool>> = (1..=t.n_servers())
        .map(|s| {
            t.server_requests(s)
                .iter()
                .map(|f| f.coords().iter().fold(false, |acc, &c| acc ^ store.bit(c).unwrap()))
                .collect()
        })
        .collect();
    let mut out = vec![false; t.file_length()];
    for (k, refs) in t.plan().iter().enumerate() {
        let bit = refs.iter().fold(false, |acc, r| acc ^ answers[r.server - 1][r.position - 1]);
        out[t.theta_permutation().apply(k as u32 + 1) as usize - 1] = bit;
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn random_runs_decode(pick in 0..MATRIX.len(), theta_pick in any::<prop::sample::Index>(), seed in any::<u64>()) {
        let (name, spec) = MATRIX[pick];
        let g = GraphSpec::parse(spec).unwrap();
        let s = build_scheme(name, &g).unwrap();
        let theta = *theta_pick.get(&s.thetas());
        let t = s.run(theta, &mut SeededSource::new(seed)).unwrap();
        prop_assert!(symbolic_check(&t).is_ok());
        // the desired file is recovered bit by bit, each position once
        let mut hit: Vec<u32> = (1..=t.file_length() as u32).map(|k| t.theta_permutation().apply(k)).collect();
        hit.sort_unstable();
        prop_assert_eq!(hit, (1..=t.file_length() as u32).collect::<Vec<_>>());
        for req in t.requests() {
            for c in req.form.coords() {
                prop_assert!(g.stores(req.server, c.file), "S{} asked for {}", req.server, c);
            }
        }
        let mut srng = SeededSource::new(seed ^ 0x5eed);
        for _ in 0..8 {
            let store = FileStore::random(&g, t.file_length(), &mut srng);
            prop_assert_eq!(&decode_by_hand(&t, &store)[..], store.file(theta).unwrap());
        }
    }
}

#[test]
fn hundred_stores_per_run() {
    for &(name, spec) in MATRIX {
        let g = GraphSpec::parse(spec).unwrap();
        let s = build_scheme(name, &g).unwrap();
        for theta in s.thetas() {
            for seed in 0..2 {
                let t = s.run(theta, &mut SeededSource::new(seed)).unwrap();
                let mut srng = SeededSource::for_trial(seed, 9, u64::from(theta.edge));
                for _ in 0..100 {
                    let store = FileStore::random(&g, t.file_length(), &mut srng);
                    assert_eq!(&decode_by_hand(&t, &store)[..], store.file(theta).unwrap(), "{spec} θ={theta}");
                }
            }
        }
    }
}

#[test]
fn rate_independent_of_theta_and_seed() {
    for &(name, spec) in MATRIX {
        let s = build_scheme(name, &GraphSpec::parse(spec).unwrap()).unwrap();
        let mut rates = BTreeSet::new();
        for theta in s.thetas() {
            for seed in 0..5 {
                rates.insert(measured_rate(&s.run(theta, &mut SeededSource::new(seed)).unwrap()).unwrap());
            }
        }
        assert_eq!(rates.len(), 1, "{spec}: {rates:?}");
    }
}

#[test]
fn path_rate_up_to_ten() {
    for n in 2..=10 {
        let s = build_scheme("path", &GraphSpec::parse(&format!("path:{n}")).unwrap()).unwrap();
        for theta in s.thetas() {
            let t = s.run(theta, &mut SeededSource::new(n as u64)).unwrap();
            assert_eq!(measured_rate(&t).unwrap(), Rational::new(2, n));
            assert!(symbolic_check(&t).is_ok());
        }
    }
}

#[test]
fn compose_rate_is_harmonic() {
    for (m, n) in [(1i64, 2i64), (1, 4), (2, 2), (2, 3), (3, 3), (2, 5)] {
        let g = GraphSpec::parse(&format!("complete_bipartite:{m},{n}")).unwrap();
        let s = build_scheme("compose-stars", &g).unwrap();
        // m stars with n leaves, each at rate 2/(n+1)
        let inverse_sum: Rational = (0..m).map(|_| Rational::new(n + 1, 2)).sum();
        let t = s.run(s.thetas()[0], &mut SeededSource::new(1)).unwrap();
        assert_eq!(measured_rate(&t).unwrap(), inverse_sum.recip(), "K_{m},{n}");
    }
}

#[test]
fn lift_matrix_twenty_seeds() {
    let mut matrix: Vec<(&str, usize, usize)> = Vec::new();
    for n in 3..=5 {
        for r in 2..=3 {
            matrix.push(("path", n, r));
        }
    }
    matrix.extend([("star", 4, 2), ("star", 5, 2), ("complete", 3, 2), ("complete", 4, 2)]);
    for (base, n, r) in matrix {
        let base_scheme = build_scheme(base, &GraphSpec::parse(&format!("{base}:{n}")).unwrap()).unwrap();
        let bt = base_scheme.run(base_scheme.thetas()[0], &mut SeededSource::new(0)).unwrap();
        let gain = Rational::new(1 << (r - 1), (1 << r) - 1);
        let s = build_scheme(&format!("lift:{base}"), &GraphSpec::parse(&format!("{base}:{n}^{r}")).unwrap()).unwrap();
        for theta in s.thetas() {
            for seed in 0..20 {
                let t = s.run(theta, &mut SeededSource::new(seed)).unwrap();
                assert!(symbolic_check(&t).is_ok(), "{base}:{n}^{r} θ={theta} seed={seed}");
                assert_eq!(measured_rate(&t).unwrap(), measured_rate(&bt).unwrap() * gain);
                assert_eq!(t.download_count(), ((1 << r) - 1) * bt.download_count());
            }
        }
    }
}

#[test]
fn exact_and_statistical_agree() {
    for spec in ["path:3", "path:4", "star:4"] {
        let s: Box<dyn Scheme> = build_scheme("auto", &GraphSpec::parse(spec).unwrap()).unwrap();
        let size = randomness_space_estimate(|rng| {
            let _ = s.run(s.thetas()[0], rng);
        });
        assert!(size <= 1 << 20);
        let cfg = VerifyConfig { samples: 20_000, tolerance: 0.03, ..Default::default() };
        let exact = try_privacy_exact(&*s, &cfg).unwrap();
        let stat = verify_privacy_statistical(&*s, &cfg);
        assert!(exact.passed && exact.statistic == 0.0, "{spec}");
        assert!(stat.passed, "{spec}: TV {}", stat.statistic);
    }
}
