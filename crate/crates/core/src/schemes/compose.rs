use std::collections::BTreeMap;

use num_integer::Integer;

use crate::error::{Error, Result};
use crate::graph::{FileId, GraphSpec};
use crate::protocol::{Coordinate, RequestRef, Transcript, TranscriptBuilder};
use crate::random::{Permutation, Randomness};
use crate::schemes::{check_theta, Scheme, SchemeDescriptor, StarScheme};

/// How a composition assembles its parts; everything but `Standard` exists to
/// build negative controls for the verifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ComposeMode {
    #[default]
    Standard,
    /// The part holding `θ` goes first on the wire and no canonical sort is applied.
    LeakyOrder,
    /// Parts not holding `θ` are not run at all.
    SkipDecoys,
}

/// A scheme on its own graph plus the embedding of that graph's vertices
/// into the host (`vertex_map[v - 1]` is the host vertex of local vertex `v`).
pub struct Part {
    pub scheme: Box<dyn Scheme>,
    pub vertex_map: Vec<usize>,
}

/// Runs one scheme per part of an edge partition of the host graph. The part
/// holding `θ` retrieves it; every other part retrieves a uniformly random
/// decoy file of its own. Parts are repeated to a common file length.
pub struct ComposeScheme {
    name: String,
    parts: Vec<Part>,
    edge_maps: Vec<Vec<u32>>,
    owner: Vec<(usize, u32)>,
    mode: ComposeMode,
    desc: SchemeDescriptor,
}

impl std::fmt::Debug for ComposeScheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ComposeScheme")
            .field("name", &self.name)
            .field("parts", &self.parts.len())
            .field("mode", &self.mode)
            .field("desc", &self.desc)
            .finish()
    }
}

impl ComposeScheme {
    pub fn new(name: &str, host: &GraphSpec, parts: Vec<Part>, mode: ComposeMode) -> Result<Self> {
        if parts.is_empty() {
            return Err(Error::InvalidComposition("no parts".into()));
        }
        let mut owner = vec![None; host.base_edge_count()];
        let mut edge_maps = Vec::with_capacity(parts.len());
        for (pi, part) in parts.iter().enumerate() {
            let g = part.scheme.graph();
            if g.base_edge_count() == 0 {
                return Err(Error::InvalidComposition(format!("part {} has no edges", pi + 1)));
            }
            if g.multiplicity() != host.multiplicity() {
                return Err(Error::InvalidComposition("part multiplicity differs from host".into()));
            }
            let vm = &part.vertex_map;
            let mut seen = vm.clone();
            seen.sort_unstable();
            seen.dedup();
            if vm.len() != g.n_vertices()
                || seen.len() != vm.len()
                || vm.iter().any(|&v| v == 0 || v > host.n_vertices())
            {
                return Err(Error::InvalidComposition(format!(
                    "part {} vertex map is not an injection into the host",
                    pi + 1
                )));
            }
            let mut map = Vec::with_capacity(g.base_edge_count());
            for (le, &(a, b)) in g.edges().iter().enumerate() {
                let ge = host.edge_index(vm[a - 1], vm[b - 1]).ok_or_else(|| {
                    Error::InvalidComposition(format!("part {} edge ({a},{b}) is not a host edge", pi + 1))
                })?;
                let slot = &mut owner[ge as usize - 1];
                if slot.is_some() {
                    return Err(Error::InvalidComposition(format!("host edge {ge} covered twice")));
                }
                *slot = Some((pi, le as u32 + 1));
                map.push(ge);
            }
            edge_maps.push(map);
        }
        let owner = owner
            .into_iter()
            .enumerate()
            .map(|(e, o)| o.ok_or_else(|| Error::InvalidComposition(format!("host edge {} uncovered", e + 1))))
            .collect::<Result<Vec<_>>>()?;
        let file_length = parts.iter().fold(1usize, |acc, p| acc.lcm(&p.scheme.file_length()));
        let srp = parts.iter().all(|p| p.scheme.descriptor().srp);
        Ok(ComposeScheme {
            name: name.into(),
            parts,
            edge_maps,
            owner,
            mode,
            desc: SchemeDescriptor { graph: host.clone(), file_length, srp, orientation_support: srp },
        })
    }

    /// `K_{M,N}` as `M` stars, one per left vertex `a`, each running the
    /// trivial scheme on a local `star:(N+1)` whose center `N+1` maps to `a`.
    pub fn stars(host: &GraphSpec, mode: ComposeMode) -> Result<Self> {
        if host.multiplicity() != 1 {
            return Err(Error::Incompatible {
                scheme: "compose-stars".into(),
                reason: "composition runs on simple graphs; lift the result instead".into(),
            });
        }
        let star_parts = host.star_parts()?;
        let parts = star_parts
            .into_iter()
            .map(|(center, g)| {
                let mut leaves: Vec<usize> = g.edges().iter().map(|&(a, b)| if a == center { b } else { a }).collect();
                leaves.sort_unstable();
                let local = StarScheme::new(leaves.len() + 1)?;
                leaves.push(center);
                Ok(Part { scheme: Box::new(local), vertex_map: leaves })
            })
            .collect::<Result<Vec<_>>>()?;
        ComposeScheme::new("compose-stars", host, parts, mode)
    }

    pub fn mode(&self) -> ComposeMode {
        self.mode
    }

    pub fn parts(&self) -> &[Part] {
        &self.parts
    }
}

impl Scheme for ComposeScheme {
    fn name(&self) -> String {
        self.name.clone()
    }

    fn descriptor(&self) -> &SchemeDescriptor {
        &self.desc
    }

    fn run(&self, theta: FileId, rng: &mut dyn Randomness) -> Result<Transcript> {
        let host = &self.desc.graph;
        check_theta(host, theta)?;
        let l = self.desc.file_length;
        let (home, local_edge) = self.owner[theta.edge as usize - 1];

        // one target per part: θ itself or a decoy
        let mut targets = Vec::with_capacity(self.parts.len());
        for (pi, part) in self.parts.iter().enumerate() {
            if pi == home {
                targets.push(Some(FileId::new(local_edge, theta.copy)));
            } else if self.mode == ComposeMode::SkipDecoys {
                targets.push(None);
            } else {
                let options = part.scheme.thetas();
                targets.push(Some(options[rng.below(options.len())]));
            }
        }
        let mut order: Vec<usize> = (0..self.parts.len()).collect();
        if self.mode == ComposeMode::LeakyOrder {
            order.sort_by_key(|&pi| pi != home);
        }

        let mut tb = TranscriptBuilder::new(host.n_vertices(), l);
        let mut perms: BTreeMap<FileId, Vec<u32>> = BTreeMap::new();
        let mut decoys = Vec::new();
        for &pi in &order {
            let Some(target) = targets[pi] else { continue };
            let part = &self.parts[pi];
            let emap = &self.edge_maps[pi];
            let lift_file = |f: FileId| FileId::new(emap[f.edge as usize - 1], f.copy);
            if pi != home {
                decoys.push(lift_file(target));
            }
            let lp = part.scheme.file_length();
            for rep in 0..l / lp {
                let off = (rep * lp) as u32;
                let t = part.scheme.run(target, rng)?;
                let mut refmap: Vec<Vec<RequestRef>> = Vec::with_capacity(t.n_servers());
                for s in 1..=t.n_servers() {
                    let server = part.vertex_map[s - 1];
                    refmap.push(
                        t.server_requests(s)
                            .iter()
                            .map(|form| {
                                tb.push(
                                    server,
                                    form.map(|c| Coordinate::new(lift_file(c.file), c.bit + off)),
                                )
                            })
                            .collect(),
                    );
                }
                for (f, p) in t.permutations() {
                    let images = perms.entry(lift_file(*f)).or_insert_with(|| vec![0; l]);
                    for x in 1..=lp as u32 {
                        images[(off + x) as usize - 1] = off + p.apply(x);
                    }
                }
                if pi == home {
                    for (k, refs) in t.plan().iter().enumerate() {
                        tb.plan_all(
                            off as usize + k + 1,
                            refs.iter().map(|r| refmap[r.server - 1][r.position - 1]),
                        );
                    }
                }
            }
        }
        let perms = perms
            .into_iter()
            .map(|(f, images)| {
                Permutation::from_images(images)
                    .map(|p| (f, p))
                    .ok_or_else(|| Error::InvalidComposition(format!("part did not permute file {f}")))
            })
            .collect::<Result<BTreeMap<_, _>>>()?;
        match self.mode {
            ComposeMode::LeakyOrder => tb.finish_unordered(host, theta, perms, decoys),
            _ => tb.finish(host, theta, perms, decoys),
        }
    }
}
