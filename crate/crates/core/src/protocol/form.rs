use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::graph::FileId;

/// One stored bit: `W_file(bit)`, `bit` 1-based in storage order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Coordinate {
    pub file: FileId,
    pub bit: u32,
}

impl Coordinate {
    pub const fn new(file: FileId, bit: u32) -> Self {
        Coordinate { file, bit }
    }
}

impl fmt::Display for Coordinate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}@{}", self.file, self.bit)
    }
}

/// XOR of a set of stored bits. Adding a coordinate twice cancels it.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LinearForm(Vec<Coordinate>);

impl LinearForm {
    pub fn new() -> Self {
        LinearForm(Vec::new())
    }

    pub fn single(c: Coordinate) -> Self {
        LinearForm(vec![c])
    }

    pub fn from_coords<I: IntoIterator<Item = Coordinate>>(coords: I) -> Self {
        let mut v: Vec<Coordinate> = coords.into_iter().collect();
        v.sort_unstable();
        // pairs cancel
        let mut out: Vec<Coordinate> = Vec::with_capacity(v.len());
        for c in v {
            if out.last() == Some(&c) {
                out.pop();
            } else {
                out.push(c);
            }
        }
        LinearForm(out)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn coords(&self) -> &[Coordinate] {
        &self.0
    }

    pub fn contains(&self, c: &Coordinate) -> bool {
        self.0.binary_search(c).is_ok()
    }

    pub fn toggle(&mut self, c: Coordinate) {
        match self.0.binary_search(&c) {
            Ok(i) => {
                self.0.remove(i);
            }
            Err(i) => self.0.insert(i, c),
        }
    }

    /// Symmetric difference.
    pub fn xor(&self, other: &LinearForm) -> LinearForm {
        let (a, b) = (&self.0, &other.0);
        let mut out = Vec::with_capacity(a.len() + b.len());
        let (mut i, mut j) = (0, 0);
        while i < a.len() && j < b.len() {
            match a[i].cmp(&b[j]) {
                Ordering::Less => {
                    out.push(a[i]);
                    i += 1;
                }
                Ordering::Greater => {
                    out.push(b[j]);
                    j += 1;
                }
                Ordering::Equal => {
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&a[i..]);
        out.extend_from_slice(&b[j..]);
        LinearForm(out)
    }

    pub fn xor_assign(&mut self, other: &LinearForm) {
        *self = self.xor(other);
    }

    /// Rewrites every coordinate; colliding images cancel.
    pub fn map(&self, f: impl Fn(Coordinate) -> Coordinate) -> LinearForm {
        LinearForm::from_coords(self.0.iter().map(|&c| f(c)))
    }

    /// Index pattern of this single request: each file's bits renamed
    /// `1, 2, ...` in increasing order.
    pub fn local_pattern(&self) -> Vec<(FileId, u32)> {
        let mut out = Vec::with_capacity(self.0.len());
        let mut prev: Option<FileId> = None;
        let mut k = 0;
        for c in &self.0 {
            if prev == Some(c.file) {
                k += 1;
            } else {
                k = 1;
                prev = Some(c.file);
            }
            out.push((c.file, k));
        }
        out
    }
}

impl fmt::Display for LinearForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("0");
        }
        for (k, c) in self.0.iter().enumerate() {
            if k > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{c}")?;
        }
        Ok(())
    }
}

impl FromIterator<Coordinate> for LinearForm {
    fn from_iter<I: IntoIterator<Item = Coordinate>>(iter: I) -> Self {
        LinearForm::from_coords(iter)
    }
}
