use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{FileId, GraphSpec};
use crate::protocol::form::{Coordinate, LinearForm};
use crate::random::Permutation;

/// Position of a request in a server's list; both fields 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct RequestRef {
    pub server: usize,
    pub position: usize,
}

/// What one server is asked: the XOR of the listed stored bits.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Request {
    pub server: usize,
    pub form: LinearForm,
}

/// A complete protocol run.
///
/// `plan[t - 1]` lists the requests whose answers XOR to `w_θ(t)`, the `t`-th
/// bit of the desired file in permuted order; its storage position is
/// `permutations[θ].apply(t)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transcript {
    pub(crate) requests: Vec<Vec<LinearForm>>,
    pub(crate) plan: Vec<Vec<RequestRef>>,
    pub(crate) theta: FileId,
    pub(crate) theta_servers: (usize, usize),
    pub(crate) permutations: BTreeMap<FileId, Permutation>,
    pub(crate) file_length: usize,
    pub(crate) decoys: Vec<FileId>,
}

impl Transcript {
    pub fn n_servers(&self) -> usize {
        self.requests.len()
    }

    /// Requests of `server` (1-based) in wire order.
    pub fn server_requests(&self, server: usize) -> &[LinearForm] {
        &self.requests[server - 1]
    }

    pub fn requests(&self) -> impl Iterator<Item = Request> + '_ {
        self.requests.iter().enumerate().flat_map(|(s, list)| {
            list.iter().map(move |form| Request { server: s + 1, form: form.clone() })
        })
    }

    pub fn request(&self, r: RequestRef) -> Option<&LinearForm> {
        self.requests.get(r.server.checked_sub(1)?)?.get(r.position.checked_sub(1)?)
    }

    pub fn plan(&self) -> &[Vec<RequestRef>] {
        &self.plan
    }

    pub fn theta(&self) -> FileId {
        self.theta
    }

    /// The two servers storing `W_θ`, lower index first.
    pub fn theta_servers(&self) -> (usize, usize) {
        self.theta_servers
    }

    pub fn permutations(&self) -> &BTreeMap<FileId, Permutation> {
        &self.permutations
    }

    pub fn theta_permutation(&self) -> &Permutation {
        &self.permutations[&self.theta]
    }

    pub fn file_length(&self) -> usize {
        self.file_length
    }

    /// Decoy file indices drawn for parts that do not hold `θ` (composition only).
    pub fn decoys(&self) -> &[FileId] {
        &self.decoys
    }

    pub fn download_count(&self) -> usize {
        self.requests.iter().map(Vec::len).sum()
    }

    pub fn per_server_counts(&self) -> Vec<usize> {
        self.requests.iter().map(Vec::len).collect()
    }

    /// Text dump: per-server request lists as `edge.copy@index` tokens, then
    /// one `t <- (server,pos) ...` line per recovered bit.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "# theta={} L={} downloads={}",
            self.theta,
            self.file_length,
            self.download_count()
        );
        for (s, list) in self.requests.iter().enumerate() {
            let _ = writeln!(out, "S{}", s + 1);
            for (p, form) in list.iter().enumerate() {
                let _ = writeln!(out, "  {}: {}", p + 1, form);
            }
        }
        let _ = writeln!(out, "plan");
        for (t, refs) in self.plan.iter().enumerate() {
            let _ = write!(out, "  {} <-", t + 1);
            for r in refs {
                let _ = write!(out, " ({},{})", r.server, r.position);
            }
            out.push('\n');
        }
        out
    }

    /// Drops the request at `at` from the plan of target bit `t` (1-based);
    /// used to build broken transcripts for negative controls.
    pub fn without_plan_term(mut self, t: usize, at: usize) -> Self {
        if let Some(refs) = self.plan.get_mut(t - 1) {
            if at < refs.len() {
                refs.remove(at);
            }
        }
        self
    }

    /// Sorts every server's requests into canonical wire order, remapping the plan.
    pub fn canonicalize(&mut self) {
        for server in 1..=self.n_servers() {
            let list = &self.requests[server - 1];
            let mut order: Vec<usize> = (0..list.len()).collect();
            order.sort_by_cached_key(|&a| wire_key(&list[a]));
            if order.iter().enumerate().any(|(k, &o)| k != o) {
                self.reorder_server(server, &order);
            }
        }
    }

    /// Replaces a server's wire order without touching the plan's meaning.
    pub(crate) fn reorder_server(&mut self, server: usize, order: &[usize]) {
        let list = std::mem::take(&mut self.requests[server - 1]);
        let mut new_pos = vec![0; list.len()];
        for (new, &old) in order.iter().enumerate() {
            new_pos[old] = new + 1;
        }
        self.requests[server - 1] = order.iter().map(|&old| list[old].clone()).collect();
        for refs in &mut self.plan {
            for r in refs.iter_mut().filter(|r| r.server == server) {
                r.position = new_pos[r.position - 1];
            }
        }
    }
}

/// Sort key of the canonical wire order: the request's own index pattern
/// (length first), ties broken by the raw coordinates.
pub fn wire_key(form: &LinearForm) -> (usize, Vec<(FileId, u32)>, &[Coordinate]) {
    (form.len(), form.local_pattern(), form.coords())
}

/// Collects requests and a plan in construction order, then validates them
/// against the graph and sorts every server's list into canonical wire order.
#[derive(Debug)]
pub struct TranscriptBuilder {
    requests: Vec<Vec<LinearForm>>,
    plan: Vec<Vec<RequestRef>>,
}

impl TranscriptBuilder {
    pub fn new(n_servers: usize, file_length: usize) -> Self {
        TranscriptBuilder {
            requests: vec![Vec::new(); n_servers],
            plan: vec![Vec::new(); file_length],
        }
    }

    pub fn push(&mut self, server: usize, form: LinearForm) -> RequestRef {
        let list = &mut self.requests[server - 1];
        list.push(form);
        RequestRef { server, position: list.len() }
    }

    /// Adds `r` to the plan of permuted target bit `t` (1-based).
    pub fn plan(&mut self, t: usize, r: RequestRef) {
        self.plan[t - 1].push(r);
    }

    pub fn plan_all(&mut self, t: usize, refs: impl IntoIterator<Item = RequestRef>) {
        self.plan[t - 1].extend(refs);
    }

    /// Finalizes with canonical wire order.
    pub fn finish(
        self,
        graph: &GraphSpec,
        theta: FileId,
        permutations: BTreeMap<FileId, Permutation>,
        decoys: Vec<FileId>,
    ) -> Result<Transcript> {
        let mut t = self.finish_unordered(graph, theta, permutations, decoys)?;
        t.canonicalize();
        Ok(t)
    }

    /// Finalizes keeping construction order on the wire.
    pub fn finish_unordered(
        self,
        graph: &GraphSpec,
        theta: FileId,
        permutations: BTreeMap<FileId, Permutation>,
        decoys: Vec<FileId>,
    ) -> Result<Transcript> {
        if !graph.contains_file(theta) {
            return Err(Error::ThetaOutOfRange(theta.to_string()));
        }
        let file_length = self.plan.len();
        for (s, list) in self.requests.iter().enumerate() {
            for form in list {
                for c in form.coords() {
                    if !graph.stores(s + 1, c.file) {
                        return Err(Error::FileNotOnServer { server: s + 1, file: c.file.to_string() });
                    }
                    if c.bit == 0 || c.bit as usize > file_length {
                        return Err(Error::CoordinateOutOfRange(c.to_string()));
                    }
                }
            }
        }
        for refs in &self.plan {
            for r in refs {
                let ok = r.server >= 1
                    && r.server <= self.requests.len()
                    && r.position >= 1
                    && r.position <= self.requests[r.server - 1].len();
                if !ok {
                    return Err(Error::PlanOutOfRange { server: r.server, position: r.position });
                }
            }
        }
        Ok(Transcript {
            requests: self.requests,
            plan: self.plan,
            theta,
            theta_servers: graph.endpoints(theta.edge),
            permutations,
            file_length,
            decoys,
        })
    }
}
