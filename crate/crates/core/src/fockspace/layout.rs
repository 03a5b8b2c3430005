use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SubsystemKind {
    Bosonic,
    SpinHalf,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Subsystem {
    pub label: String,
    pub dim: usize,
    pub kind: SubsystemKind,
}

impl Subsystem {
    pub fn bosonic(label: impl Into<String>, dim: usize) -> Self {
        Subsystem { label: label.into(), dim, kind: SubsystemKind::Bosonic }
    }

    pub fn spin(label: impl Into<String>) -> Self {
        Subsystem { label: label.into(), dim: 2, kind: SubsystemKind::SpinHalf }
    }
}

/// Ordered list of subsystems making up a composite Hilbert space.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<Subsystem>", into = "Vec<Subsystem>")]
pub struct SpaceLayout {
    subsystems: Vec<Subsystem>,
}

impl TryFrom<Vec<Subsystem>> for SpaceLayout {
    type Error = Error;

    fn try_from(subsystems: Vec<Subsystem>) -> Result<Self> {
        SpaceLayout::new(subsystems)
    }
}

impl From<SpaceLayout> for Vec<Subsystem> {
    fn from(layout: SpaceLayout) -> Self {
        layout.subsystems
    }
}

impl SpaceLayout {
    pub fn new(subsystems: Vec<Subsystem>) -> Result<Self> {
        if subsystems.is_empty() {
            return Err(Error::InvalidDimension { dim: 0, reason: "layout needs at least one subsystem" });
        }
        for (i, s) in subsystems.iter().enumerate() {
            if s.dim == 0 {
                return Err(Error::InvalidDimension { dim: 0, reason: "subsystem dimension must be positive" });
            }
            if s.kind == SubsystemKind::SpinHalf && s.dim != 2 {
                return Err(Error::InvalidDimension { dim: s.dim, reason: "spin-half subsystems have dimension 2" });
            }
            if subsystems[..i].iter().any(|o| o.label == s.label) {
                return Err(Error::DuplicateLabel(s.label.clone()));
            }
        }
        Ok(SpaceLayout { subsystems })
    }

    /// Shorthand for a layout of bosonic modes given as `(label, dim)` pairs.
    pub fn modes(modes: &[(&str, usize)]) -> Result<Self> {
        SpaceLayout::new(modes.iter().map(|&(l, d)| Subsystem::bosonic(l, d)).collect())
    }

    pub fn single(subsystem: Subsystem) -> Result<Self> {
        SpaceLayout::new(vec![subsystem])
    }

    pub fn subsystems(&self) -> &[Subsystem] {
        &self.subsystems
    }

    pub fn len(&self) -> usize {
        self.subsystems.len()
    }

    pub fn is_empty(&self) -> bool {
        self.subsystems.is_empty()
    }

    pub fn total_dim(&self) -> usize {
        self.subsystems.iter().map(|s| s.dim).product()
    }

    pub fn dims(&self) -> Vec<usize> {
        self.subsystems.iter().map(|s| s.dim).collect()
    }

    pub fn labels(&self) -> impl Iterator<Item = &str> {
        self.subsystems.iter().map(|s| s.label.as_str())
    }

    pub fn position(&self, label: &str) -> Result<usize> {
        self.subsystems.iter().position(|s| s.label == label).ok_or_else(|| Error::UnknownLabel(label.to_string()))
    }

    pub fn get(&self, label: &str) -> Result<&Subsystem> {
        Ok(&self.subsystems[self.position(label)?])
    }

    pub fn contains(&self, label: &str) -> bool {
        self.subsystems.iter().any(|s| s.label == label)
    }

    /// Row-major strides: the last subsystem varies fastest.
    pub fn strides(&self) -> Vec<usize> {
        let mut strides = vec![1; self.len()];
        for k in (0..self.len().saturating_sub(1)).rev() {
            strides[k] = strides[k + 1] * self.subsystems[k + 1].dim;
        }
        strides
    }

    pub fn multi_index(&self, mut flat: usize) -> Vec<usize> {
        let mut idx = vec![0; self.len()];
        for k in (0..self.len()).rev() {
            let d = self.subsystems[k].dim;
            idx[k] = flat % d;
            flat /= d;
        }
        idx
    }

    pub fn flat_index(&self, multi: &[usize]) -> usize {
        multi.iter().zip(&self.subsystems).fold(0, |acc, (&i, s)| acc * s.dim + i)
    }

    /// Sub-layout with the given labels, kept in declaration order.
    pub fn select(&self, labels: &[&str]) -> Result<SpaceLayout> {
        for l in labels {
            self.position(l)?;
        }
        let kept = self.subsystems.iter().filter(|s| labels.contains(&s.label.as_str())).cloned().collect();
        SpaceLayout::new(kept)
    }

    /// Concatenation `self ⊗ other`.
    pub fn tensor(&self, other: &SpaceLayout) -> Result<SpaceLayout> {
        let mut subs = self.subsystems.clone();
        subs.extend(other.subsystems.iter().cloned());
        SpaceLayout::new(subs)
    }
}
