//! Canonical form of one server's request list up to renaming bit indices
//! within each file.

use std::collections::HashMap;
use std::fmt;
use std::hash::{Hash, Hasher};

use rustc_hash::FxHashMap;
use serde::Serialize;

use crate::graph::FileId;
use crate::protocol::{Coordinate, LinearForm};

/// Leaves explored by the individualization search before it settles for
/// the first branch.
const SEARCH_BUDGET: usize = 4096;

/// Requests as `(file, renamed index)` lists, each file's indices renamed
/// `1, 2, ...` by first appearance, requests in canonical order.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct CanonicalPattern(Vec<Vec<(FileId, u32)>>);

impl CanonicalPattern {
    pub fn requests(&self) -> &[Vec<(FileId, u32)>] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn fingerprint(&self) -> u64 {
        let mut h = rustc_hash::FxHasher::default();
        self.hash(&mut h);
        h.finish()
    }
}

impl fmt::Display for CanonicalPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, req) in self.0.iter().enumerate() {
            if k > 0 {
                f.write_str(" | ")?;
            }
            for (m, (file, idx)) in req.iter().enumerate() {
                if m > 0 {
                    f.write_str("+")?;
                }
                write!(f, "{file}#{idx}")?;
            }
        }
        Ok(())
    }
}

/// Incidence structure between requests and the coordinates they touch.
struct Structure {
    files: Vec<FileId>,
    /// coordinate ids of each request
    req: Vec<Vec<usize>>,
    /// request ids containing each coordinate
    occ: Vec<Vec<usize>>,
}

impl Structure {
    fn new(forms: &[LinearForm]) -> Self {
        let mut ids = HashMap::new();
        let mut files = Vec::new();
        let mut occ: Vec<Vec<usize>> = Vec::new();
        let req = forms
            .iter()
            .enumerate()
            .map(|(q, form)| {
                form.coords()
                    .iter()
                    .map(|c| {
                        let id = *ids.entry(*c).or_insert_with(|| {
                            files.push(c.file);
                            occ.push(Vec::new());
                            files.len() - 1
                        });
                        occ[id].push(q);
                        id
                    })
                    .collect()
            })
            .collect();
        Structure { files, req, occ }
    }
}

/// Colour classes of requests and coordinates; equal colours are
/// indistinguishable so far.
#[derive(Clone)]
struct Colouring {
    req: Vec<u32>,
    coord: Vec<u32>,
}

fn rerank<K: Ord + Clone>(keys: Vec<K>) -> Vec<u32> {
    let mut sorted = keys.clone();
    sorted.sort();
    sorted.dedup();
    keys.iter().map(|k| sorted.binary_search(k).unwrap() as u32).collect()
}

fn classes(c: &[u32]) -> usize {
    let mut v = c.to_vec();
    v.sort_unstable();
    v.dedup();
    v.len()
}

/// Colour refinement to a stable partition.
fn refine(s: &Structure, col: &mut Colouring) {
    loop {
        let before = classes(&col.req) + classes(&col.coord);
        let req_keys: Vec<(u32, Vec<u32>)> = s
            .req
            .iter()
            .enumerate()
            .map(|(q, cs)| {
                let mut v: Vec<u32> = cs.iter().map(|&c| col.coord[c]).collect();
                v.sort_unstable();
                (col.req[q], v)
            })
            .collect();
        col.req = rerank(req_keys);
        let coord_keys: Vec<(u32, Vec<u32>)> = s
            .occ
            .iter()
            .enumerate()
            .map(|(c, qs)| {
                let mut v: Vec<u32> = qs.iter().map(|&q| col.req[q]).collect();
                v.sort_unstable();
                (col.coord[c], v)
            })
            .collect();
        col.coord = rerank(coord_keys);
        if classes(&col.req) + classes(&col.coord) == before {
            return;
        }
    }
}

fn encode(s: &Structure, col: &Colouring) -> CanonicalPattern {
    let mut order: Vec<usize> = (0..s.req.len()).collect();
    order.sort_by_key(|&q| col.req[q]);
    let mut names: HashMap<usize, u32> = HashMap::new();
    let mut next: HashMap<FileId, u32> = HashMap::new();
    let reqs = order
        .into_iter()
        .map(|q| {
            let mut cs = s.req[q].clone();
            cs.sort_by_key(|&c| (s.files[c], col.coord[c]));
            let mut out: Vec<(FileId, u32)> = cs
                .into_iter()
                .map(|c| {
                    let f = s.files[c];
                    let name = *names.entry(c).or_insert_with(|| {
                        let n = next.entry(f).or_insert(0);
                        *n += 1;
                        *n
                    });
                    (f, name)
                })
                .collect();
            out.sort_unstable();
            out
        })
        .collect();
    CanonicalPattern(reqs)
}

/// Smallest request cell with more than one member, if any.
fn first_open_cell(col: &Colouring) -> Option<Vec<usize>> {
    let mut by: HashMap<u32, Vec<usize>> = HashMap::new();
    for (q, &c) in col.req.iter().enumerate() {
        by.entry(c).or_default().push(q);
    }
    by.into_iter().filter(|(_, v)| v.len() > 1).min_by_key(|(c, _)| *c).map(|(_, v)| v)
}

fn individualize(col: &Colouring, q: usize) -> Colouring {
    let keys: Vec<(u32, u8)> = col
        .req
        .iter()
        .enumerate()
        .map(|(k, &c)| (c, u8::from(k != q)))
        .collect();
    Colouring { req: rerank(keys), coord: col.coord.clone() }
}

fn search(s: &Structure, col: Colouring, leaves: &mut usize, best: &mut Option<CanonicalPattern>) {
    let Some(cell) = first_open_cell(&col) else {
        *leaves += 1;
        let enc = encode(s, &col);
        if best.as_ref().is_none_or(|b| enc < *b) {
            *best = Some(enc);
        }
        return;
    };
    // requests whose coordinates occur nowhere else are interchangeable
    // within their cell, so one branch covers them all
    let twins = cell.iter().all(|&q| s.req[q].iter().all(|&c| s.occ[c].len() == 1));
    let branches = if twins || *leaves >= SEARCH_BUDGET { &cell[..1] } else { &cell[..] };
    for &q in branches {
        let mut next = individualize(&col, q);
        refine(s, &mut next);
        search(s, next, leaves, best);
    }
}

/// Canonical pattern of a server's requests. Equal for two request lists
/// exactly when one is obtained from the other by reordering requests and
/// renaming indices within each file (up to the search budget, which the
/// request lists produced by this crate's schemes never approach).
pub fn canonical_pattern(forms: &[LinearForm]) -> CanonicalPattern {
    if let Some(p) = fast_pattern(forms) {
        return p;
    }
    let s = Structure::new(forms);
    let mut col = Colouring {
        req: vec![0; s.req.len()],
        coord: rerank(s.files.clone()),
    };
    refine(&s, &mut col);
    let mut best = None;
    let mut leaves = 0;
    search(&s, col, &mut leaves, &mut best);
    best.unwrap_or(CanonicalPattern(Vec::new()))
}

/// When no coordinate repeats, the pattern is just the sorted list of the
/// requests' file lists.
fn fast_pattern(forms: &[LinearForm]) -> Option<CanonicalPattern> {
    let mut all: Vec<_> = forms.iter().flat_map(|f| f.coords().iter().copied()).collect();
    let n = all.len();
    all.sort_unstable();
    all.dedup();
    if all.len() != n {
        return None;
    }
    let mut shapes: Vec<Vec<FileId>> = forms.iter().map(|f| f.coords().iter().map(|c| c.file).collect()).collect();
    shapes.sort();
    let mut next: FxHashMap<FileId, u32> = FxHashMap::default();
    let reqs = shapes
        .into_iter()
        .map(|files| {
            files
                .into_iter()
                .map(|f| {
                    let n = next.entry(f).or_insert(0);
                    *n += 1;
                    (f, *n)
                })
                .collect()
        })
        .collect();
    Some(CanonicalPattern(reqs))
}

/// Pattern of all servers' requests together, each request tagged with its
/// server: equal for two transcripts exactly when one index renaming per
/// file maps every server's request set onto the other's.
pub fn joint_pattern(servers: &[&[LinearForm]]) -> CanonicalPattern {
    let tagged: Vec<LinearForm> = servers
        .iter()
        .enumerate()
        .flat_map(|(s, forms)| {
            let tag = Coordinate::new(FileId::new(u32::MAX - s as u32, 1), 1);
            forms.iter().map(move |f| {
                let mut f = f.clone();
                f.toggle(tag);
                f
            })
        })
        .collect();
    canonical_pattern_slow(&tagged)
}

/// Full pattern search even when the fast path would apply; for testing the
/// two against each other.
#[doc(hidden)]
pub fn canonical_pattern_slow(forms: &[LinearForm]) -> CanonicalPattern {
    let s = Structure::new(forms);
    let mut col = Colouring { req: vec![0; s.req.len()], coord: rerank(s.files.clone()) };
    refine(&s, &mut col);
    let mut best = None;
    let mut leaves = 0;
    search(&s, col, &mut leaves, &mut best);
    best.unwrap_or(CanonicalPattern(Vec::new()))
}
