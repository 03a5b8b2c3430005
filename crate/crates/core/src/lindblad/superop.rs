//! Sparse vectorized Liouvillian (column stacking, `vec(ρ)[i + n·j] = ρ_ij`)
//! and the steady-state solve.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};

use super::LindbladModel;
use crate::error::{Error, Result};
use crate::fockspace::{c, DensityMatrix, C64};

/// Largest connected block handed to the dense solver.
const BLOCK_CAP: usize = 4096;

#[derive(Clone, Debug)]
pub struct SparseLiouvillian {
    n: usize,
    /// Merged `(row, col, value)` entries, sorted by row.
    entries: Vec<(usize, usize, C64)>,
}

fn nonzeros(m: &DMatrix<C64>) -> Vec<(usize, usize, C64)> {
    let mut out = Vec::new();
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            let z = m[(i, j)];
            if z.norm() != 0.0 {
                out.push((i, j, z));
            }
        }
    }
    out
}

impl SparseLiouvillian {
    pub fn from_model(model: &LindbladModel) -> Self {
        let n = model.dim();
        let mut acc: HashMap<(usize, usize), C64> = HashMap::new();
        let mut add = |r: usize, col: usize, z: C64| *acc.entry((r, col)).or_insert(c(0.0, 0.0)) += z;
        let h = nonzeros(model.h_eff());
        let minus_i = c(0.0, -1.0);
        for &(i, k, z) in &h {
            for j in 0..n {
                add(i + n * j, k + n * j, minus_i * z);
            }
        }
        for &(j, l, z) in &h {
            for i in 0..n {
                add(i + n * j, i + n * l, -minus_i * z.conj());
            }
        }
        for jump in model.jumps() {
            let nz = nonzeros(jump);
            for &(j, l, zl) in &nz {
                for &(i, k, zr) in &nz {
                    add(i + n * j, k + n * l, zl.conj() * zr);
                }
            }
        }
        let mut entries: Vec<(usize, usize, C64)> =
            acc.into_iter().filter(|(_, z)| z.norm() != 0.0).map(|((r, col), z)| (r, col, z)).collect();
        entries.sort_by_key(|&(r, col, _)| (r, col));
        SparseLiouvillian { n, entries }
    }

    /// Hilbert-space dimension `n`; the superoperator acts on `n²` entries.
    pub fn hilbert_dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn apply(&self, v: &DVector<C64>) -> DVector<C64> {
        let mut out = DVector::zeros(self.n * self.n);
        for &(r, col, z) in &self.entries {
            out[r] += z * v[col];
        }
        out
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.entries.iter().map(|(_, _, z)| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn to_dense(&self) -> DMatrix<C64> {
        let nn = self.n * self.n;
        let mut m = DMatrix::zeros(nn, nn);
        for &(r, col, z) in &self.entries {
            m[(r, col)] = z;
        }
        m
    }

    /// Connected components of the coupling graph, as sorted index lists.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let nn = self.n * self.n;
        let mut parent: Vec<usize> = (0..nn).collect();
        fn find(parent: &mut [usize], mut x: usize) -> usize {
            while parent[x] != x {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            x
        }
        for &(r, col, _) in &self.entries {
            let (a, b) = (find(&mut parent, r), find(&mut parent, col));
            if a != b {
                parent[a.max(b)] = a.min(b);
            }
        }
        let mut groups: HashMap<usize, Vec<usize>> = HashMap::new();
        for x in 0..nn {
            let root = find(&mut parent, x);
            groups.entry(root).or_default().push(x);
        }
        let mut out: Vec<Vec<usize>> = groups.into_values().collect();
        out.sort_by_key(|g| g[0]);
        out
    }
}

/// Unique steady state from the null space of the Liouvillian block that
/// contains the populations.
pub fn steady_state(model: &LindbladModel) -> Result<DensityMatrix> {
    let lv = SparseLiouvillian::from_model(model);
    let n = lv.hilbert_dim();
    let diag: Vec<usize> = (0..n).map(|i| i + n * i).collect();
    let comps = lv.components();
    let holding: Vec<&Vec<usize>> = comps.iter().filter(|g| g.iter().any(|x| diag.binary_search(x).is_ok())).collect();
    if holding.len() != 1 {
        return Err(Error::DegenerateSteadyState(format!("populations split over {} decoupled blocks", holding.len())));
    }
    let block = holding[0];
    let m = block.len();
    if m > BLOCK_CAP {
        return Err(Error::DimensionCap { dim: m, cap: BLOCK_CAP });
    }
    let mut local = vec![usize::MAX; n * n];
    for (k, &x) in block.iter().enumerate() {
        local[x] = k;
    }
    let mut dense = DMatrix::<C64>::zeros(m, m);
    for &(r, col, z) in &lv.entries {
        if local[r] != usize::MAX {
            dense[(local[r], local[col])] = z;
        }
    }
    // populations' equations sum to zero, so one of them is replaced by the
    // trace condition; a second null direction leaves the system singular
    let r0 = local[diag[0]];
    for k in 0..m {
        dense[(r0, k)] = c(0.0, 0.0);
    }
    for &d in &diag {
        dense[(r0, local[d])] = c(1.0, 0.0);
    }
    let mut rhs = DVector::<C64>::zeros(m);
    rhs[r0] = c(1.0, 0.0);
    let lu = dense.lu();
    let pivots: Vec<f64> = lu.u().diagonal().iter().map(|z| z.norm()).collect();
    let (pmin, pmax) = pivots.iter().fold((f64::MAX, 0.0f64), |(lo, hi), &p| (lo.min(p), hi.max(p)));
    if m > 1 && !(pmin > 1e-12 * pmax) {
        return Err(Error::DegenerateSteadyState(format!("pivot ratio {:.3e} after fixing the trace", pmin / pmax)));
    }
    let sol = lu.solve(&rhs).ok_or_else(|| Error::DegenerateSteadyState("singular steady-state system".into()))?;
    let mut vec = DVector::<C64>::zeros(n * n);
    for (k, &x) in block.iter().enumerate() {
        vec[x] = sol[k];
    }
    let trace: C64 = diag.iter().map(|&d| vec[d]).sum();
    if trace.norm() < 1e-14 {
        return Err(Error::DegenerateSteadyState("null vector is traceless".into()));
    }
    vec /= trace;
    let residual = lv.apply(&vec).norm() / (lv.frobenius_norm().max(f64::MIN_POSITIVE) * vec.norm());
    if residual > 1e-10 {
        return Err(Error::DegenerateSteadyState(format!("null-vector residual {residual:.3e} exceeds 1e-10")));
    }
    let mut rho = DMatrix::from_fn(n, n, |i, j| vec[i + n * j]);
    rho = (&rho + rho.adjoint()) * c(0.5, 0.0);
    let tr = rho.trace();
    rho /= tr;
    DensityMatrix::new(model.layout().clone(), rho)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fockspace::{annihilation, random::random_density, FockOperator, SpaceLayout};
    use crate::lindblad::{lindblad_rhs, Dissipator};
    use crate::model::build_beamsplitter;
    use rand::SeedableRng;

    #[test]
    fn sparse_matches_direct_rhs() {
        let l = SpaceLayout::modes(&[("a", 3), ("m", 3)]).unwrap();
        let h = build_beamsplitter(0.4, &l, "a", "m").unwrap();
        let a = crate::model::lowering(&l, "a").unwrap();
        let b = crate::model::lowering(&l, "m").unwrap();
        let model = LindbladModel::new(
            h,
            vec![
                Dissipator::new(a, 0.3).unwrap(),
                Dissipator::new(b.clone(), 0.1).unwrap(),
                Dissipator::new(b.adjoint(), 0.05).unwrap(),
            ],
        )
        .unwrap();
        let lv = SparseLiouvillian::from_model(&model);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let rho = random_density(&l, &mut rng);
        let n = 9;
        let v = DVector::from_fn(n * n, |k, _| rho.matrix()[(k % n, k / n)]);
        let out = lv.apply(&v);
        let direct = lindblad_rhs(&model, &rho).unwrap();
        let diff = (0..n * n).map(|k| (out[k] - direct[(k % n, k / n)]).norm()).fold(0.0, f64::max);
        assert!(diff < 1e-14);
    }

    #[test]
    fn thermal_mode_reaches_bose_einstein() {
        let a = annihilation(25).unwrap();
        let (nb, g) = (0.8, 0.3);
        let model = LindbladModel::new(
            FockOperator::zeros(a.layout()),
            vec![Dissipator::new(a.clone(), (1.0 + nb) * g).unwrap(), Dissipator::new(a.adjoint(), nb * g).unwrap()],
        )
        .unwrap();
        let rho = steady_state(&model).unwrap();
        let pops = rho.populations("a").unwrap();
        let r = nb / (1.0 + nb);
        let norm: f64 = (0..25).map(|k| r.powi(k)).sum();
        for (k, p) in pops.iter().enumerate() {
            assert!((p - r.powi(k as i32) / norm).abs() < 1e-10);
        }
    }

    #[test]
    fn closed_systems_are_degenerate() {
        let a = annihilation(3).unwrap();
        let model = LindbladModel::closed(FockOperator::zeros(a.layout())).unwrap();
        assert!(matches!(steady_state(&model), Err(Error::DegenerateSteadyState(_))));
        let h = &a + &a.adjoint();
        let model = LindbladModel::closed(h.into_hermitian().unwrap()).unwrap();
        assert!(matches!(steady_state(&model), Err(Error::DegenerateSteadyState(_))));
    }
}
