//! Graph and multigraph models of 2-replication storage systems.
//!
//! Vertices are servers `S_1..S_N`, each base edge is a file stored on its two
//! endpoints, and the multiplicity `r` replaces every base edge by `r`
//! parallel copies. Files are addressed as [`FileId`]`{ edge, copy }` where
//! `edge` is the position of the base edge in canonical (lexicographic) order.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest base edge count accepted by [`GraphSpec::matching_number`].
pub const MATCHING_EDGE_LIMIT: usize = 24;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GraphFlag {
    HamiltonianVertexTransitive,
    VertexTransitive,
}

impl fmt::Display for GraphFlag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GraphFlag::HamiltonianVertexTransitive => f.write_str("hamiltonian_vertex_transitive"),
            GraphFlag::VertexTransitive => f.write_str("vertex_transitive"),
        }
    }
}

/// A file of the (multi)graph system: base edge index and copy index, both
/// 1-based. Serialized as its `e.j` text so it can key JSON maps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, )]
pub struct FileId {
    pub edge: u32,
    pub copy: u32,
}

impl FileId {
    pub const fn new(edge: u32, copy: u32) -> Self {
        FileId { edge, copy }
    }

    /// File of a simple graph (copy 1).
    pub const fn simple(edge: u32) -> Self {
        FileId { edge, copy: 1 }
    }
}

impl fmt::Display for FileId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}", self.edge, self.copy)
    }
}

impl Serialize for FileId {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for FileId {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        text.parse().map_err(serde::de::Error::custom)
    }
}

impl FromStr for FileId {
    type Err = Error;

    /// Accepts `e.j` or a bare edge index (copy 1).
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Parse(format!("invalid file index `{s}`, expected `e` or `e.j`"));
        let (edge, copy) = match s.split_once('.') {
            Some((e, j)) => (e.trim().parse().map_err(|_| bad())?, j.trim().parse().map_err(|_| bad())?),
            None => (s.trim().parse().map_err(|_| bad())?, 1),
        };
        if edge == 0 || copy == 0 {
            return Err(bad());
        }
        Ok(FileId { edge, copy })
    }
}

/// Named graph families with their canonical labelling.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "family")]
pub enum Family {
    /// `S_1 - S_2 - ... - S_N`.
    Path { n: usize },
    Cycle { n: usize },
    /// `n` vertices; vertex `n` is the center and stores all `n - 1` files.
    Star { n: usize },
    Complete { n: usize },
    /// Left part `1..=m`, right part `m+1..=m+n`, `m <= n`.
    CompleteBipartite { m: usize, n: usize },
}

impl Family {
    pub fn vertex_count(&self) -> usize {
        match *self {
            Family::Path { n } | Family::Cycle { n } | Family::Star { n } | Family::Complete { n } => n,
            Family::CompleteBipartite { m, n } => m + n,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Family::Path { .. } => "path",
            Family::Cycle { .. } => "cycle",
            Family::Star { .. } => "star",
            Family::Complete { .. } => "complete",
            Family::CompleteBipartite { .. } => "complete_bipartite",
        }
    }

    pub fn from_name(name: &str, params: &[usize]) -> Result<Self> {
        let bad = |reason: &str| Error::FamilyParams {
            family: name.to_string(),
            reason: reason.to_string(),
        };
        let single = || match params {
            [n] => Ok(*n),
            _ => Err(bad("expected exactly one parameter N")),
        };
        let family = match name {
            "path" => {
                let n = single()?;
                if n < 2 {
                    return Err(bad("path needs N >= 2"));
                }
                Family::Path { n }
            }
            "cycle" => {
                let n = single()?;
                if n < 3 {
                    return Err(bad("cycle needs N >= 3"));
                }
                Family::Cycle { n }
            }
            "star" => {
                let n = single()?;
                if n < 2 {
                    return Err(bad("star needs N >= 2"));
                }
                Family::Star { n }
            }
            "complete" => {
                let n = single()?;
                if n < 2 {
                    return Err(bad("complete graph needs N >= 2"));
                }
                Family::Complete { n }
            }
            "complete_bipartite" => match params {
                [m, n] => {
                    if *m == 0 || *n == 0 {
                        return Err(bad("both parts must be nonempty"));
                    }
                    if m > n {
                        return Err(bad("expected M <= N"));
                    }
                    Family::CompleteBipartite { m: *m, n: *n }
                }
                _ => return Err(bad("expected two parameters M,N")),
            },
            other => return Err(Error::UnknownFamily(other.to_string())),
        };
        Ok(family)
    }

    /// Canonical (lexicographically sorted) edge list.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut edges = match *self {
            Family::Path { n } => (1..n).map(|v| (v, v + 1)).collect(),
            Family::Cycle { n } => {
                let mut e: Vec<_> = (1..n).map(|v| (v, v + 1)).collect();
                e.push((1, n));
                e
            }
            Family::Star { n } => (1..n).map(|v| (v, n)).collect(),
            Family::Complete { n } => (1..=n)
                .flat_map(|a| (a + 1..=n).map(move |b| (a, b)))
                .collect(),
            Family::CompleteBipartite { m, n } => (1..=m)
                .flat_map(|a| (m + 1..=m + n).map(move |b| (a, b)))
                .collect::<Vec<_>>(),
        };
        edges.sort_unstable();
        edges
    }

    fn default_flags(&self) -> BTreeSet<GraphFlag> {
        match self {
            Family::Cycle { .. } | Family::Complete { .. } => {
                [GraphFlag::VertexTransitive, GraphFlag::HamiltonianVertexTransitive].into()
            }
            _ => BTreeSet::new(),
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Family::CompleteBipartite { m, n } => write!(f, "complete_bipartite:{m},{n}"),
            Family::Path { n } | Family::Cycle { n } | Family::Star { n } | Family::Complete { n } => {
                write!(f, "{}:{n}", self.name())
            }
        }
    }
}

/// Vertex/edge description of a (multi)graph storage system with uniform
/// edge multiplicity.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawGraphSpec", into = "RawGraphSpec")]
pub struct GraphSpec {
    n: usize,
    edges: Vec<(usize, usize)>,
    multiplicity: usize,
    flags: BTreeSet<GraphFlag>,
}

#[derive(Serialize, Deserialize)]
struct RawGraphSpec {
    n: usize,
    edges: Vec<[usize; 2]>,
    #[serde(default = "one")]
    multiplicity: usize,
    #[serde(default)]
    flags: Vec<GraphFlag>,
}

fn one() -> usize {
    1
}

impl TryFrom<RawGraphSpec> for GraphSpec {
    type Error = Error;

    fn try_from(raw: RawGraphSpec) -> Result<Self> {
        GraphSpec::new(
            raw.n,
            raw.edges.into_iter().map(|[a, b]| (a, b)).collect(),
            raw.multiplicity,
            raw.flags.into_iter().collect(),
        )
    }
}

impl From<GraphSpec> for RawGraphSpec {
    fn from(g: GraphSpec) -> Self {
        RawGraphSpec {
            n: g.n,
            edges: g.edges.iter().map(|&(a, b)| [a, b]).collect(),
            multiplicity: g.multiplicity,
            flags: g.flags.into_iter().collect(),
        }
    }
}

impl GraphSpec {
    /// Validates and canonicalizes: endpoints are ordered within each pair and
    /// the edge list is sorted lexicographically.
    pub fn new(
        n: usize,
        edges: Vec<(usize, usize)>,
        multiplicity: usize,
        flags: BTreeSet<GraphFlag>,
    ) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidGraph("graph needs at least one vertex".into()));
        }
        if multiplicity == 0 {
            return Err(Error::InvalidGraph("multiplicity must be positive".into()));
        }
        let mut canon = Vec::with_capacity(edges.len());
        for (a, b) in edges {
            if a == b {
                return Err(Error::InvalidGraph(format!("self-loop at vertex {a}")));
            }
            if a == 0 || b == 0 || a > n || b > n {
                return Err(Error::InvalidGraph(format!("edge ({a},{b}) outside vertices 1..={n}")));
            }
            canon.push((a.min(b), a.max(b)));
        }
        canon.sort_unstable();
        if let Some(w) = canon.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::InvalidGraph(format!(
                "duplicate edge {:?}; use multiplicity for parallel copies",
                w[0]
            )));
        }
        Ok(GraphSpec { n, edges: canon, multiplicity, flags })
    }

    pub fn build_family(family: Family, multiplicity: usize) -> Result<Self> {
        GraphSpec::new(family.vertex_count(), family.edges(), multiplicity, family.default_flags())
    }

    /// `build_family` by family token and parameter list.
    pub fn from_family_name(name: &str, params: &[usize], multiplicity: usize) -> Result<Self> {
        GraphSpec::build_family(Family::from_name(name, params)?, multiplicity)
    }

    /// Parses either a family shorthand (`path:4`, `cycle:5^2`,
    /// `complete_bipartite:2,3`) or a JSON graph object.
    pub fn parse(text: &str) -> Result<Self> {
        let text = text.trim();
        if text.starts_with('{') {
            return Ok(serde_json::from_str(text)?);
        }
        let (body, multiplicity) = match text.split_once('^') {
            Some((b, r)) => (
                b,
                r.trim()
                    .parse()
                    .map_err(|_| Error::Parse(format!("invalid multiplicity in `{text}`")))?,
            ),
            None => (text, 1),
        };
        let (name, params) = body
            .split_once(':')
            .ok_or_else(|| Error::Parse(format!("expected `family:params`, got `{text}`")))?;
        let params = params
            .split(',')
            .map(|p| p.trim().parse::<usize>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|_| Error::Parse(format!("invalid parameters in `{text}`")))?;
        GraphSpec::from_family_name(name.trim(), &params, multiplicity)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("graph specs always serialize")
    }

    pub fn n_vertices(&self) -> usize {
        self.n
    }

    /// Base (simple graph) edges in canonical order; edge `k` (1-based) is `edges()[k - 1]`.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn base_edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn multiplicity(&self) -> usize {
        self.multiplicity
    }

    pub fn file_count(&self) -> usize {
        self.edges.len() * self.multiplicity
    }

    pub fn flags(&self) -> &BTreeSet<GraphFlag> {
        &self.flags
    }

    pub fn has_flag(&self, flag: GraphFlag) -> bool {
        self.flags.contains(&flag)
    }

    pub fn with_flags(mut self, flags: BTreeSet<GraphFlag>) -> Self {
        self.flags = flags;
        self
    }

    pub fn with_multiplicity(mut self, multiplicity: usize) -> Result<Self> {
        if multiplicity == 0 {
            return Err(Error::InvalidGraph("multiplicity must be positive".into()));
        }
        self.multiplicity = multiplicity;
        Ok(self)
    }

    /// The underlying simple graph (multiplicity 1, same flags).
    pub fn base(&self) -> GraphSpec {
        GraphSpec { multiplicity: 1, ..self.clone() }
    }

    /// All files in `(edge, copy)` lexicographic order.
    pub fn files(&self) -> Vec<FileId> {
        (1..=self.edges.len() as u32)
            .flat_map(|e| (1..=self.multiplicity as u32).map(move |c| FileId::new(e, c)))
            .collect()
    }

    pub fn contains_file(&self, file: FileId) -> bool {
        file.edge >= 1
            && file.edge as usize <= self.edges.len()
            && file.copy >= 1
            && file.copy as usize <= self.multiplicity
    }

    /// Endpoints of a base edge (1-based index).
    pub fn endpoints(&self, edge: u32) -> (usize, usize) {
        self.edges[edge as usize - 1]
    }

    pub fn edge_index(&self, a: usize, b: usize) -> Option<u32> {
        let key = (a.min(b), a.max(b));
        self.edges.binary_search(&key).ok().map(|i| i as u32 + 1)
    }

    /// Whether `server` stores `file`.
    pub fn stores(&self, server: usize, file: FileId) -> bool {
        if !self.contains_file(file) {
            return false;
        }
        let (a, b) = self.endpoints(file.edge);
        server == a || server == b
    }

    /// Base degree of every vertex (index 0 is vertex 1).
    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.n];
        for &(a, b) in &self.edges {
            deg[a - 1] += 1;
            deg[b - 1] += 1;
        }
        deg
    }

    /// Δ(G) of the base simple graph.
    pub fn max_degree(&self) -> usize {
        self.degrees().into_iter().max().unwrap_or(0)
    }

    /// ν(G): size of a maximum matching of the base simple graph.
    ///
    /// Exact branch-and-bound over edges with a memo keyed by the remaining
    /// edge set; limited to [`MATCHING_EDGE_LIMIT`] edges.
    pub fn matching_number(&self) -> Result<usize> {
        let k = self.edges.len();
        if k > MATCHING_EDGE_LIMIT {
            return Err(Error::InstanceTooLarge { edges: k, limit: MATCHING_EDGE_LIMIT });
        }
        // conflict[i]: edges sharing an endpoint with edge i (including i)
        let conflict: Vec<u32> = self
            .edges
            .iter()
            .map(|&(a, b)| {
                self.edges
                    .iter()
                    .enumerate()
                    .filter(|(_, &(c, d))| c == a || c == b || d == a || d == b)
                    .fold(0u32, |m, (j, _)| m | (1 << j))
            })
            .collect();
        let full = if k == 32 { u32::MAX } else { (1u32 << k) - 1 };
        let mut memo = HashMap::new();
        Ok(best_matching(full, &conflict, &mut memo))
    }

    /// Base-graph families this labelled graph is identical to.
    pub fn families(&self) -> Vec<Family> {
        let n = self.n;
        let mut candidates = Vec::new();
        if n >= 2 {
            candidates.push(Family::Path { n });
            candidates.push(Family::Star { n });
            candidates.push(Family::Complete { n });
        }
        if n >= 3 {
            candidates.push(Family::Cycle { n });
        }
        for m in 1..=n / 2 {
            candidates.push(Family::CompleteBipartite { m, n: n - m });
        }
        candidates.into_iter().filter(|f| f.edges() == self.edges).collect()
    }

    pub fn is_family(&self, pred: impl Fn(&Family) -> bool) -> Option<Family> {
        self.families().into_iter().find(|f| pred(f))
    }

    /// Splits `K_{M,N}` into `M` edge-disjoint stars, one centered at each left
    /// vertex with the right part as leaves, on the shared vertex set.
    pub fn star_decomposition(&self) -> Result<Vec<GraphSpec>> {
        Ok(self
            .star_parts()?
            .into_iter()
            .map(|(_, g)| g)
            .collect())
    }

    /// Like [`star_decomposition`](Self::star_decomposition) but also returns each star's center.
    pub fn star_parts(&self) -> Result<Vec<(usize, GraphSpec)>> {
        let Some(Family::CompleteBipartite { m, n }) =
            self.is_family(|f| matches!(f, Family::CompleteBipartite { .. }))
        else {
            return Err(Error::NotCompleteBipartite);
        };
        (1..=m)
            .map(|center| {
                let edges = (m + 1..=m + n).map(|leaf| (center, leaf)).collect();
                GraphSpec::new(self.n, edges, self.multiplicity, BTreeSet::new()).map(|g| (center, g))
            })
            .collect()
    }
}

fn best_matching(remaining: u32, conflict: &[u32], memo: &mut HashMap<u32, usize>) -> usize {
    if remaining == 0 {
        return 0;
    }
    if let Some(&v) = memo.get(&remaining) {
        return v;
    }
    let e = remaining.trailing_zeros() as usize;
    let take = 1 + best_matching(remaining & !conflict[e], conflict, memo);
    let skip = best_matching(remaining & !(1 << e), conflict, memo);
    let best = take.max(skip);
    memo.insert(remaining, best);
    best
}

impl fmt::Display for GraphSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.families().first() {
            Some(fam) if self.flags == fam.default_flags() => {
                write!(f, "{fam}")?;
                if self.multiplicity > 1 {
                    write!(f, "^{}", self.multiplicity)?;
                }
                Ok(())
            }
            _ => f.write_str(&self.to_json()),
        }
    }
}

impl FromStr for GraphSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        GraphSpec::parse(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g(s: &str) -> GraphSpec {
        GraphSpec::parse(s).unwrap()
    }

    #[test]
    fn path_families() {
        let p = GraphSpec::from_family_name("path", &[3], 1).unwrap();
        assert_eq!(p.n_vertices(), 3);
        assert_eq!(p.edges(), &[(1, 2), (2, 3)]);
        assert_eq!(p.multiplicity(), 1);

        let p2 = GraphSpec::from_family_name("path", &[3], 2).unwrap();
        assert_eq!(p2.edges(), p.edges());
        assert_eq!(p2.file_count(), 4);
    }

    #[test]
    fn complete_three_is_a_flagged_triangle() {
        let k3 = GraphSpec::from_family_name("complete", &[3], 1).unwrap();
        assert_eq!(k3.edges(), &[(1, 2), (1, 3), (2, 3)]);
        assert!(k3.has_flag(GraphFlag::HamiltonianVertexTransitive));
        assert!(k3.has_flag(GraphFlag::VertexTransitive));
        assert!(g("path:4").flags().is_empty());
    }

    #[test]
    fn family_errors() {
        assert!(matches!(GraphSpec::parse("wheel:5"), Err(Error::UnknownFamily(_))));
        assert!(GraphSpec::parse("path:1").is_err());
        assert!(GraphSpec::parse("cycle:2").is_err());
        assert!(GraphSpec::parse("complete_bipartite:3,2").is_err());
        assert!(GraphSpec::parse("path:x").is_err());
    }

    #[test]
    fn star_center_is_last_vertex() {
        let s = g("star:5");
        assert_eq!(s.edges(), &[(1, 5), (2, 5), (3, 5), (4, 5)]);
        assert_eq!(s.max_degree(), 4);
    }

    #[test]
    fn shorthand_multiplicity() {
        let c = g("cycle:5^2");
        assert_eq!(c.multiplicity(), 2);
        assert_eq!(c.edges(), &[(1, 2), (1, 5), (2, 3), (3, 4), (4, 5)]);
        let k = g("complete_bipartite:2,3");
        assert_eq!(k.n_vertices(), 5);
        assert_eq!(k.base_edge_count(), 6);
        assert_eq!(g("complete:4^3").file_count(), 18);
    }

    #[test]
    fn json_round_trip_and_canonical_order() {
        let parsed = g(r#"{"n": 3, "edges": [[3, 2], [1, 2]], "flags": ["vertex_transitive"]}"#);
        assert_eq!(parsed.edges(), &[(1, 2), (2, 3)]);
        assert_eq!(parsed.multiplicity(), 1);
        let again = g(&parsed.to_json());
        assert_eq!(parsed, again);
    }

    #[test]
    fn invalid_graphs_rejected() {
        assert!(GraphSpec::new(3, vec![(1, 1)], 1, BTreeSet::new()).is_err());
        assert!(GraphSpec::new(3, vec![(1, 4)], 1, BTreeSet::new()).is_err());
        assert!(GraphSpec::new(3, vec![(1, 2), (2, 1)], 1, BTreeSet::new()).is_err());
        assert!(GraphSpec::new(3, vec![(1, 2)], 0, BTreeSet::new()).is_err());
    }

    #[test]
    fn degrees_and_matchings() {
        assert_eq!(g("path:4").max_degree(), 2);
        assert_eq!(g("complete_bipartite:2,3").max_degree(), 3);
        assert_eq!(g("path:4").matching_number().unwrap(), 2);
        assert_eq!(g("complete:4").matching_number().unwrap(), 2);
        assert_eq!(g("star:6").matching_number().unwrap(), 1);
        assert_eq!(g("cycle:7").matching_number().unwrap(), 3);
    }

    #[test]
    fn matching_limit() {
        // K_8 has 28 edges
        assert!(matches!(
            g("complete:8").matching_number(),
            Err(Error::InstanceTooLarge { edges: 28, .. })
        ));
        assert_eq!(g("complete:7").matching_number().unwrap(), 3);
    }

    #[test]
    fn star_decompositions() {
        let one = g("complete_bipartite:1,4").star_decomposition().unwrap();
        assert_eq!(one.len(), 1);
        assert_eq!(one[0].base_edge_count(), 4);

        let two = g("complete_bipartite:2,2").star_decomposition().unwrap();
        assert_eq!(two[0].edges(), &[(1, 3), (1, 4)]);
        assert_eq!(two[1].edges(), &[(2, 3), (2, 4)]);

        let host = g("complete_bipartite:2,3");
        let parts = host.star_decomposition().unwrap();
        assert_eq!(parts.len(), 2);
        let mut union: Vec<_> = parts.iter().flat_map(|p| p.edges().to_vec()).collect();
        union.sort_unstable();
        assert_eq!(union, host.edges());
        assert!(matches!(g("path:4").star_decomposition(), Err(Error::NotCompleteBipartite)));
    }

    #[test]
    fn family_recognition() {
        assert_eq!(g("complete:3").families(), vec![Family::Complete { n: 3 }, Family::Cycle { n: 3 }]);
        assert!(g("path:5").families().contains(&Family::Path { n: 5 }));
        assert_eq!(
            g("complete_bipartite:2,3").families(),
            vec![Family::CompleteBipartite { m: 2, n: 3 }]
        );
    }

    #[test]
    fn file_id_parsing() {
        assert_eq!("3".parse::<FileId>().unwrap(), FileId::new(3, 1));
        assert_eq!("2.4".parse::<FileId>().unwrap(), FileId::new(2, 4));
        assert!("0.1".parse::<FileId>().is_err());
        assert!("a.b".parse::<FileId>().is_err());
    }
}
