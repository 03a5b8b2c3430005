//! JSON form of states and operators.
//!
//! ```json
//! {
//!   "format": "electromech/state-v1",
//!   "kind": "density_matrix",
//!   "layout": [{"label": "a", "dim": 2, "kind": "bosonic"}],
//!   "dim": 2,
//!   "entries": [[1.0, 0.0], [0.0, 0.0], [0.0, 0.0], [0.0, 0.0]]
//! }
//! ```
//!
//! `entries` is row-major, one `[re, im]` pair per element (`dim` pairs for a
//! state vector, `dim²` otherwise).

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::{c, DensityMatrix, FockOperator, SpaceLayout, StateVector, C64};
use crate::error::{Error, Result};

pub const FORMAT_TAG: &str = "electromech/state-v1";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatrixKind {
    DensityMatrix,
    StateVector,
    Operator,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SerializedMatrix {
    pub format: String,
    pub kind: MatrixKind,
    pub layout: SpaceLayout,
    pub dim: usize,
    pub entries: Vec<[f64; 2]>,
}

impl SerializedMatrix {
    fn from_matrix(kind: MatrixKind, layout: &SpaceLayout, m: &DMatrix<C64>) -> Self {
        let n = m.nrows();
        let entries =
            (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).map(|(i, j)| [m[(i, j)].re, m[(i, j)].im]).collect();
        SerializedMatrix { format: FORMAT_TAG.into(), kind, layout: layout.clone(), dim: n, entries }
    }

    fn check(&self, kind: MatrixKind, expected_len: usize) -> Result<()> {
        if self.format != FORMAT_TAG {
            return Err(Error::InvalidState(format!("unsupported format tag `{}`", self.format)));
        }
        if self.kind != kind {
            return Err(Error::InvalidState(format!("expected {kind:?}, found {:?}", self.kind)));
        }
        if self.dim != self.layout.total_dim() || self.entries.len() != expected_len {
            return Err(Error::DimensionMismatch { expected: expected_len, actual: self.entries.len() });
        }
        Ok(())
    }

    fn to_matrix(&self) -> DMatrix<C64> {
        DMatrix::from_row_iterator(self.dim, self.dim, self.entries.iter().map(|[re, im]| c(*re, *im)))
    }
}

impl Serialize for DensityMatrix {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        SerializedMatrix::from_matrix(MatrixKind::DensityMatrix, self.layout(), self.matrix()).serialize(s)
    }
}

impl<'de> Deserialize<'de> for DensityMatrix {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = SerializedMatrix::deserialize(d)?;
        raw.check(MatrixKind::DensityMatrix, raw.dim * raw.dim).map_err(serde::de::Error::custom)?;
        DensityMatrix::new(raw.layout.clone(), raw.to_matrix()).map_err(serde::de::Error::custom)
    }
}

impl Serialize for FockOperator {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        SerializedMatrix::from_matrix(MatrixKind::Operator, self.layout(), self.matrix()).serialize(s)
    }
}

impl<'de> Deserialize<'de> for FockOperator {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = SerializedMatrix::deserialize(d)?;
        raw.check(MatrixKind::Operator, raw.dim * raw.dim).map_err(serde::de::Error::custom)?;
        FockOperator::new(raw.layout.clone(), raw.to_matrix()).map_err(serde::de::Error::custom)
    }
}

impl Serialize for StateVector {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let entries = self.amplitudes().iter().map(|z| [z.re, z.im]).collect();
        SerializedMatrix {
            format: FORMAT_TAG.into(),
            kind: MatrixKind::StateVector,
            layout: self.layout().clone(),
            dim: self.dim(),
            entries,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for StateVector {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = SerializedMatrix::deserialize(d)?;
        raw.check(MatrixKind::StateVector, raw.dim).map_err(serde::de::Error::custom)?;
        let amps = DVector::from_iterator(raw.dim, raw.entries.iter().map(|[re, im]| c(*re, *im)));
        StateVector::new(raw.layout.clone(), amps).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fockspace::random::{haar_state, random_density};
    use crate::fockspace::Subsystem;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn field_names_are_stable() {
        let l = SpaceLayout::modes(&[("a", 2)]).unwrap();
        let rho = DensityMatrix::maximally_mixed(&l);
        let v: serde_json::Value = serde_json::to_value(&rho).unwrap();
        assert_eq!(v["format"], FORMAT_TAG);
        assert_eq!(v["kind"], "density_matrix");
        assert_eq!(v["layout"][0]["label"], "a");
        assert_eq!(v["layout"][0]["kind"], "bosonic");
        assert_eq!(v["entries"][0][0], 0.5);
        assert_eq!(v["entries"].as_array().unwrap().len(), 4);
    }

    #[test]
    fn invalid_payloads_rejected() {
        let bad = r#"{"format":"electromech/state-v1","kind":"state_vector","layout":[{"label":"a","dim":2,"kind":"bosonic"}],"dim":2,"entries":[[1,0],[1,0]]}"#;
        assert!(serde_json::from_str::<StateVector>(bad).is_err());
        let wrong_kind = r#"{"format":"electromech/state-v1","kind":"operator","layout":[{"label":"a","dim":1,"kind":"bosonic"}],"dim":1,"entries":[[1,0]]}"#;
        assert!(serde_json::from_str::<DensityMatrix>(wrong_kind).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn json_roundtrip(seed in 0u64..1000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let l = SpaceLayout::new(vec![Subsystem::bosonic("m", 3), Subsystem::spin("s")]).unwrap();
            let rho = random_density(&l, &mut rng);
            let back: DensityMatrix = serde_json::from_str(&serde_json::to_string(&rho).unwrap()).unwrap();
            prop_assert_eq!(&back, &rho);
            let psi = haar_state(&l, &mut rng);
            let back: StateVector = serde_json::from_str(&serde_json::to_string(&psi).unwrap()).unwrap();
            prop_assert_eq!(back, psi);
        }
    }
}
