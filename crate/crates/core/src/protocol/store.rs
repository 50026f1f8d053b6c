use std::collections::BTreeMap;

use num_rational::Ratio;

use crate::error::{Error, Result};
use crate::graph::{FileId, GraphSpec};
use crate::protocol::form::{Coordinate, LinearForm};
use crate::protocol::transcript::{Request, Transcript};
use crate::random::Randomness;
use crate::Rational;

/// Contents of every file, each a bit vector of the common length `L`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FileStore {
    length: usize,
    files: BTreeMap<FileId, Vec<bool>>,
}

impl FileStore {
    pub fn new(length: usize, files: BTreeMap<FileId, Vec<bool>>) -> Result<Self> {
        if let Some((f, _)) = files.iter().find(|(_, v)| v.len() != length) {
            return Err(Error::CoordinateOutOfRange(format!("file {f} does not have length {length}")));
        }
        Ok(FileStore { length, files })
    }

    /// Independent uniform bits for every file of `graph`.
    pub fn random(graph: &GraphSpec, length: usize, rng: &mut dyn Randomness) -> Self {
        let files = graph
            .files()
            .into_iter()
            .map(|f| (f, (0..length).map(|_| rng.below(2) == 1).collect()))
            .collect();
        FileStore { length, files }
    }

    pub fn length(&self) -> usize {
        self.length
    }

    pub fn file(&self, f: FileId) -> Option<&[bool]> {
        self.files.get(&f).map(Vec::as_slice)
    }

    pub fn bit(&self, c: Coordinate) -> Result<bool> {
        let v = self.files.get(&c.file).ok_or_else(|| Error::CoordinateOutOfRange(c.to_string()))?;
        (c.bit as usize)
            .checked_sub(1)
            .and_then(|i| v.get(i).copied())
            .ok_or_else(|| Error::CoordinateOutOfRange(c.to_string()))
    }

    pub fn eval(&self, form: &LinearForm) -> Result<bool> {
        form.coords().iter().try_fold(false, |acc, &c| Ok(acc ^ self.bit(c)?))
    }
}

/// The answer a server returns to `req`: XOR of the referenced stored bits.
pub fn answer_bit(store: &FileStore, req: &Request) -> Result<bool> {
    store.eval(&req.form)
}

/// All answers of a transcript, indexed like its request lists.
pub fn answer_all(store: &FileStore, t: &Transcript) -> Result<Vec<Vec<bool>>> {
    (1..=t.n_servers())
        .map(|s| t.server_requests(s).iter().map(|f| store.eval(f)).collect())
        .collect()
}

/// Recovers `W_θ` in storage order from the answers.
pub fn decode(t: &Transcript, answers: &[Vec<bool>]) -> Result<Vec<bool>> {
    if answers.len() != t.n_servers()
        || (1..=t.n_servers()).any(|s| answers[s - 1].len() != t.server_requests(s).len())
    {
        return Err(Error::AnswerShape);
    }
    let l = t.file_length();
    let mut out = vec![false; l];
    if l == 0 {
        return Ok(out);
    }
    let perm = t.theta_permutation();
    for (k, refs) in t.plan().iter().enumerate() {
        let mut bit = false;
        for r in refs {
            let a = r
                .server
                .checked_sub(1)
                .and_then(|s| answers.get(s))
                .and_then(|v| r.position.checked_sub(1).and_then(|p| v.get(p)))
                .ok_or(Error::PlanOutOfRange { server: r.server, position: r.position })?;
            bit ^= *a;
        }
        out[perm.apply(k as u32 + 1) as usize - 1] = bit;
    }
    Ok(out)
}

/// A target bit whose planned requests do not XOR to its fresh coordinate.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlanMismatch {
    pub bit: usize,
    pub residual: LinearForm,
}

/// XOR of the requests planned for permuted bit `k` (1-based).
pub fn planned_form(t: &Transcript, k: usize) -> LinearForm {
    let mut acc = LinearForm::new();
    for r in &t.plan()[k - 1] {
        if let Some(f) = t.request(*r) {
            acc.xor_assign(f);
        }
    }
    acc
}

/// Checks every plan entry as GF(2) linear algebra; `Err` carries the first
/// failing bit and the difference between what the plan yields and `W_θ(π(t))`.
pub fn symbolic_check(t: &Transcript) -> std::result::Result<(), PlanMismatch> {
    let theta = t.theta();
    let perm = t.theta_permutation();
    for k in 1..=t.file_length() {
        let want = LinearForm::single(Coordinate::new(theta, perm.apply(k as u32)));
        let residual = planned_form(t, k).xor(&want);
        if !residual.is_empty() {
            return Err(PlanMismatch { bit: k, residual });
        }
    }
    Ok(())
}

pub fn symbolic_decode_check(t: &Transcript) -> bool {
    symbolic_check(t).is_ok()
}

/// `L` over the number of downloaded bits.
pub fn measured_rate(t: &Transcript) -> Result<Rational> {
    let d = t.download_count();
    if d == 0 {
        return Err(Error::NoRequests);
    }
    Ok(Ratio::new(t.file_length() as i64, d as i64))
}

/// Hosting server credited with each permuted target bit (index 0 is bit 1):
/// the server of the unique planned request containing the bit's fresh
/// coordinate. Requests referenced twice cancel and are ignored.
pub fn attribution_map(t: &Transcript) -> Result<Vec<usize>> {
    let perm = t.theta_permutation();
    (1..=t.file_length())
        .map(|k| {
            let fresh = Coordinate::new(t.theta(), perm.apply(k as u32));
            let mut refs = t.plan()[k - 1].clone();
            refs.sort_unstable();
            let mut live = Vec::with_capacity(refs.len());
            for r in refs {
                if live.last() == Some(&r) {
                    live.pop();
                } else {
                    live.push(r);
                }
            }
            let mut holders = live
                .iter()
                .filter(|r| t.request(**r).is_some_and(|f| f.contains(&fresh)));
            match (holders.next(), holders.next()) {
                (Some(r), None) => Ok(r.server),
                _ => Err(Error::AttributionUndefined(k)),
            }
        })
        .collect()
}

/// Number of target bits attributed to each of the two servers hosting `θ`,
/// lower-indexed server first.
pub fn srp_attribution(t: &Transcript) -> Result<(usize, usize)> {
    let (a, b) = t.theta_servers();
    let mut counts = (0, 0);
    for (k, s) in attribution_map(t)?.into_iter().enumerate() {
        if s == a {
            counts.0 += 1;
        } else if s == b {
            counts.1 += 1;
        } else {
            return Err(Error::AttributionUndefined(k + 1));
        }
    }
    Ok(counts)
}
