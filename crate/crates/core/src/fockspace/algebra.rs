use nalgebra::DMatrix;

use super::{c, DensityMatrix, FockOperator, SpaceLayout, C64};
use crate::error::{Error, Result};

/// Splits flat indices of a layout into (rest, target) coordinates, where the
/// target coordinates follow the order of `targets`.
struct Split {
    target_dim: usize,
    rest_dim: usize,
    /// rest * target_dim + target -> flat index
    flat: Vec<usize>,
}

impl Split {
    fn new(layout: &SpaceLayout, targets: &[usize]) -> Self {
        let dims = layout.dims();
        let rest: Vec<usize> = (0..dims.len()).filter(|k| !targets.contains(k)).collect();
        let target_dim: usize = targets.iter().map(|&k| dims[k]).product();
        let rest_dim: usize = rest.iter().map(|&k| dims[k]).product();
        let n = layout.total_dim();
        let mut flat = vec![0; n];
        for i in 0..n {
            let multi = layout.multi_index(i);
            let t = targets.iter().fold(0, |acc, &k| acc * dims[k] + multi[k]);
            let r = rest.iter().fold(0, |acc, &k| acc * dims[k] + multi[k]);
            flat[r * target_dim + t] = i;
        }
        Split { target_dim, rest_dim, flat }
    }

    fn index(&self, rest: usize, target: usize) -> usize {
        self.flat[rest * self.target_dim + target]
    }
}

fn positions(layout: &SpaceLayout, labels: &[&str]) -> Result<Vec<usize>> {
    let pos: Vec<usize> = labels.iter().map(|l| layout.position(l)).collect::<Result<_>>()?;
    for (i, p) in pos.iter().enumerate() {
        if pos[..i].contains(p) {
            return Err(Error::DuplicateLabel(labels[i].to_string()));
        }
    }
    Ok(pos)
}

fn embed_matrix(m: &DMatrix<C64>, layout: &SpaceLayout, targets: &[usize]) -> DMatrix<C64> {
    let split = Split::new(layout, targets);
    let n = layout.total_dim();
    let mut out = DMatrix::zeros(n, n);
    let nonzero: Vec<(usize, usize, C64)> = (0..m.nrows())
        .flat_map(|p| (0..m.ncols()).map(move |q| (p, q)))
        .filter_map(|(p, q)| {
            let z = m[(p, q)];
            (z != C64::new(0.0, 0.0)).then_some((p, q, z))
        })
        .collect();
    for r in 0..split.rest_dim {
        for &(p, q, z) in &nonzero {
            out[(split.index(r, p), split.index(r, q))] = z;
        }
    }
    out
}

/// Lifts a single-subsystem operator to `layout`, acting as identity on all
/// other subsystems.
pub fn embed(op: &FockOperator, layout: &SpaceLayout, target: &str) -> Result<FockOperator> {
    let k = layout.position(target)?;
    let d = layout.subsystems()[k].dim;
    if op.dim() != d {
        return Err(Error::DimensionMismatch { expected: d, actual: op.dim() });
    }
    let m = embed_matrix(op.matrix(), layout, &[k]);
    if op.is_tagged_hermitian() {
        FockOperator::new_hermitian(layout.clone(), m)
    } else {
        FockOperator::new(layout.clone(), m)
    }
}

/// Lifts an operator on `first ⊗ second` (in that order) to `layout`.
pub fn embed_two(op: &FockOperator, layout: &SpaceLayout, first: &str, second: &str) -> Result<FockOperator> {
    let pos = positions(layout, &[first, second])?;
    let d = layout.subsystems()[pos[0]].dim * layout.subsystems()[pos[1]].dim;
    if op.dim() != d {
        return Err(Error::DimensionMismatch { expected: d, actual: op.dim() });
    }
    FockOperator::new(layout.clone(), embed_matrix(op.matrix(), layout, &pos))
}

/// Reduced state on the `keep` subsystems (result in declaration order).
pub fn partial_trace(rho: &DensityMatrix, keep: &[&str]) -> Result<DensityMatrix> {
    if keep.is_empty() {
        return Err(Error::InvalidState("partial trace needs a nonempty keep set".into()));
    }
    let layout = rho.layout();
    let mut kept = positions(layout, keep)?;
    kept.sort_unstable();
    let split = Split::new(layout, &kept);
    let dk = split.target_dim;
    let m = rho.matrix();
    let mut out = DMatrix::zeros(dk, dk);
    for r in 0..split.rest_dim {
        for i in 0..dk {
            let fi = split.index(r, i);
            for j in 0..dk {
                out[(i, j)] += m[(fi, split.index(r, j))];
            }
        }
    }
    let labels: Vec<&str> = kept.iter().map(|&k| layout.subsystems()[k].label.as_str()).collect();
    DensityMatrix::from_matrix_unchecked(layout.select(&labels)?, out)
}

/// `(I ⊗ u ⊗ I) · m`, with `u` acting on `labels` in the given order.
pub fn apply_local(m: &DMatrix<C64>, layout: &SpaceLayout, labels: &[&str], u: &DMatrix<C64>) -> Result<DMatrix<C64>> {
    let pos = positions(layout, labels)?;
    let split = Split::new(layout, &pos);
    let dt = split.target_dim;
    if u.nrows() != dt || u.ncols() != dt {
        return Err(Error::DimensionMismatch { expected: dt, actual: u.nrows() });
    }
    if m.nrows() != layout.total_dim() {
        return Err(Error::DimensionMismatch { expected: layout.total_dim(), actual: m.nrows() });
    }
    let mut out = DMatrix::zeros(m.nrows(), m.ncols());
    let mut buf = vec![c(0.0, 0.0); dt];
    for col in 0..m.ncols() {
        for r in 0..split.rest_dim {
            for (t, b) in buf.iter_mut().enumerate() {
                *b = m[(split.index(r, t), col)];
            }
            for t in 0..dt {
                let mut acc = c(0.0, 0.0);
                for (tp, b) in buf.iter().enumerate() {
                    acc += u[(t, tp)] * b;
                }
                out[(split.index(r, t), col)] = acc;
            }
        }
    }
    Ok(out)
}

/// `U ρ U†` for a unitary acting on `labels`.
pub fn conjugate_local(rho: &DensityMatrix, labels: &[&str], u: &DMatrix<C64>) -> Result<DensityMatrix> {
    let left = apply_local(rho.matrix(), rho.layout(), labels, u)?;
    let both = apply_local(&left.adjoint(), rho.layout(), labels, u)?.adjoint();
    DensityMatrix::from_matrix_unchecked(rho.layout().clone(), both)
}

/// Population of subsystem `label` outside the `{|0⟩, |1⟩}` subspace.
pub fn qubit_leakage(rho: &DensityMatrix, label: &str) -> Result<f64> {
    Ok(rho.populations(label)?.iter().skip(2).sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fockspace::random::{haar_state, random_density};
    use crate::fockspace::{annihilation, pauli, PauliAxis, StateVector, Subsystem};
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn embed_sigma_z_block_pattern() {
        let layout = SpaceLayout::new(vec![Subsystem::bosonic("mech", 3), Subsystem::spin("spin")]).unwrap();
        let z = embed(&pauli(PauliAxis::Z), &layout, "spin").unwrap();
        let diag: Vec<f64> = (0..6).map(|i| z.matrix()[(i, i)].re).collect();
        assert_eq!(diag, vec![1.0, -1.0, 1.0, -1.0, 1.0, -1.0]);
        assert_eq!(z.matrix().iter().filter(|v| v.norm() > 0.0).count(), 6);
        assert!(z.is_tagged_hermitian());
    }

    #[test]
    fn embed_identity_is_identity() {
        let layout = SpaceLayout::modes(&[("a", 3), ("b", 4)]).unwrap();
        let id = crate::fockspace::identity(4).unwrap();
        let e = embed(&id, &layout, "b").unwrap();
        assert_eq!(e, FockOperator::identity(&layout));
    }

    #[test]
    fn embed_errors() {
        let layout = SpaceLayout::modes(&[("a", 3), ("b", 4)]).unwrap();
        let a = annihilation(3).unwrap();
        assert!(matches!(embed(&a, &layout, "c"), Err(Error::UnknownLabel(_))));
        assert!(matches!(embed(&a, &layout, "b"), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn hopping_terms_commute_on_two_modes() {
        // a·b† and a†·b built from separately embedded ladders; their sum is
        // hermitian and commutes with the total number operator.
        let layout = SpaceLayout::modes(&[("a", 3), ("b", 3)]).unwrap();
        let a = annihilation(3).unwrap();
        let la = embed(&a, &layout, "a").unwrap();
        let lb = embed(&a, &layout, "b").unwrap();
        let hop = &(&la * &lb.adjoint()) + &(&la.adjoint() * &lb);
        assert!(hop.is_hermitian(1e-14));
        let total = &(&la.adjoint() * &la) + &(&lb.adjoint() * &lb);
        let comm = hop.commutator(&total).unwrap();
        assert!(comm.matrix().norm() < 1e-13);
        // embeddings on different subsystems commute
        assert!(la.commutator(&lb.adjoint()).unwrap().matrix().norm() < 1e-14);
    }

    #[test]
    fn embed_preserves_spectrum_with_multiplicity() {
        let layout =
            SpaceLayout::new(vec![Subsystem::bosonic("a", 3), Subsystem::spin("s"), Subsystem::bosonic("b", 2)])
                .unwrap();
        let a = annihilation(3).unwrap();
        let x = (&a + &a.adjoint()).into_hermitian().unwrap();
        let base = x.hermitian_eigenvalues();
        let lifted = embed(&x, &layout, "a").unwrap().hermitian_eigenvalues();
        let mut expected: Vec<f64> = base.iter().flat_map(|&e| std::iter::repeat_n(e, 4)).collect();
        expected.sort_by(|a, b| a.total_cmp(b));
        for (l, e) in lifted.iter().zip(&expected) {
            assert!((l - e).abs() < 1e-12);
        }
    }

    #[test]
    fn partial_trace_of_product_state() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let la = SpaceLayout::modes(&[("A", 3)]).unwrap();
        let lb = SpaceLayout::modes(&[("B", 2)]).unwrap();
        let ra = random_density(&la, &mut rng);
        let rb = random_density(&lb, &mut rng);
        let joint = ra.tensor(&rb).unwrap();
        let back = partial_trace(&joint, &["A"]).unwrap();
        assert!((back.matrix() - ra.matrix()).norm() < 1e-14);
        let back_b = partial_trace(&joint, &["B"]).unwrap();
        assert!((back_b.matrix() - rb.matrix()).norm() < 1e-14);
    }

    #[test]
    fn partial_trace_of_bell_state_is_maximally_mixed() {
        let layout = SpaceLayout::modes(&[("A", 2), ("B", 2)]).unwrap();
        let s = 1.0 / 2f64.sqrt();
        let amps = nalgebra::DVector::from_vec(vec![c(0.0, 0.0), c(s, 0.0), c(s, 0.0), c(0.0, 0.0)]);
        let bell = StateVector::new(layout, amps).unwrap().to_density();
        let red = partial_trace(&bell, &["A"]).unwrap();
        let half = DMatrix::identity(2, 2) * c(0.5, 0.0);
        assert!((red.matrix() - half).norm() < 1e-15);
    }

    #[test]
    fn partial_trace_rejects_empty_keep() {
        let layout = SpaceLayout::modes(&[("A", 2)]).unwrap();
        let rho = DensityMatrix::maximally_mixed(&layout);
        assert!(partial_trace(&rho, &[]).is_err());
    }

    #[test]
    fn partial_trace_trace_preserving_and_positive() {
        let layout = SpaceLayout::modes(&[("A", 3), ("B", 2), ("C", 2)]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for i in 0..120 {
            let rho = random_density(&layout, &mut rng);
            let keep: &[&str] = match i % 3 {
                0 => &["A"],
                1 => &["B", "C"],
                _ => &["C", "A"],
            };
            let red = partial_trace(&rho, keep).unwrap();
            let stats = red.invariant_stats();
            assert!(stats.trace_error < 1e-12);
            assert!(stats.min_eigenvalue > -1e-12);
        }
    }

    #[test]
    fn apply_local_matches_embedding() {
        let layout = SpaceLayout::modes(&[("x", 2), ("y", 3), ("z", 2)]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let rho = random_density(&layout, &mut rng);
        let a = annihilation(3).unwrap();
        let u = a.matrix() + a.matrix().adjoint() * c(0.0, 1.0);
        let direct = embed(&FockOperator::new(a.layout().clone(), u.clone()).unwrap(), &layout, "y").unwrap();
        let expected = direct.matrix() * rho.matrix();
        let got = apply_local(rho.matrix(), &layout, &["y"], &u).unwrap();
        assert!((expected - got).norm() < 1e-13);
    }

    #[test]
    fn two_site_apply_respects_label_order() {
        let layout = SpaceLayout::modes(&[("x", 2), ("y", 3), ("z", 2)]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let psi = haar_state(&layout, &mut rng);
        // u acts on (z, x): swapping the label order must be equivalent to
        // conjugating u by the swap of the two factors.
        let l2 = SpaceLayout::modes(&[("z", 2), ("x", 2)]).unwrap();
        let mut rng2 = ChaCha8Rng::seed_from_u64(3);
        let u = random_density(&l2, &mut rng2).into_matrix();
        let op = FockOperator::new(l2, u.clone()).unwrap();
        let lifted = embed_two(&op, &layout, "z", "x").unwrap();
        let col = nalgebra::DMatrix::from_column_slice(12, 1, psi.amplitudes().as_slice());
        let a = lifted.matrix() * &col;
        let b = apply_local(&col, &layout, &["z", "x"], &u).unwrap();
        assert!((a - b).norm() < 1e-13);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn conjugation_by_unitary_preserves_trace(seed in 0u64..10_000) {
            let layout = SpaceLayout::modes(&[("p", 2), ("q", 3)]).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let rho = random_density(&layout, &mut rng);
            let u = crate::fockspace::random::haar_unitary(3, &mut rng);
            let out = conjugate_local(&rho, &["q"], &u).unwrap();
            prop_assert!((out.trace().re - 1.0).abs() < 1e-12);
            prop_assert!((out.purity() - rho.purity()).abs() < 1e-12);
        }
    }
}
