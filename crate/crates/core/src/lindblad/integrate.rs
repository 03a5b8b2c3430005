//! Adaptive Dormand–Prince 5(4) integration of the master equation.
//!
//! The trace is never renormalized; its drift is reported through the
//! per-sample invariant statistics.

use nalgebra::DMatrix;

use super::{EvolutionResult, LindbladModel};
use crate::error::{Error, Result};
use crate::fockspace::{DensityMatrix, FockOperator, C64};

#[derive(Clone, Debug, PartialEq)]
pub enum Sampling {
    /// `n ≥ 2` equally spaced samples including both endpoints.
    Uniform(usize),
    /// Explicit ascending sample times in `[0, duration]`.
    Times(Vec<f64>),
    /// Initial and final state only.
    Endpoints,
}

#[derive(Clone, Debug)]
pub struct EvolveOptions {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
    pub observables: Vec<(String, FockOperator)>,
    pub keep_states: bool,
    /// Fail when a bosonic mode's top two levels exceed this population.
    pub truncation_threshold: Option<f64>,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        EvolveOptions {
            rtol: 1e-9,
            atol: 1e-11,
            max_steps: 10_000_000,
            observables: Vec::new(),
            keep_states: true,
            truncation_threshold: None,
        }
    }
}

impl EvolveOptions {
    pub fn observe(mut self, name: &str, op: FockOperator) -> Self {
        self.observables.push((name.to_string(), op));
        self
    }
}

const A: [&[f64]; 6] = [
    &[1.0 / 5.0],
    &[3.0 / 40.0, 9.0 / 40.0],
    &[44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0],
    &[19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0],
    &[9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0],
    &[35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
/// Fifth- minus fourth-order weights. The generator is time independent, so
/// the stage nodes are not needed.
const E: [f64; 7] =
    [71.0 / 57600.0, 0.0, -71.0 / 16695.0, 71.0 / 1920.0, -17253.0 / 339200.0, 22.0 / 525.0, -1.0 / 40.0];

fn sample_times(sampling: &Sampling, duration: f64) -> Result<Vec<f64>> {
    let times = match sampling {
        Sampling::Uniform(n) if *n >= 2 => (0..*n).map(|k| duration * k as f64 / (*n - 1) as f64).collect(),
        Sampling::Uniform(_) => return Err(Error::param("sampling", "uniform sampling needs at least two samples")),
        Sampling::Times(ts) => {
            if ts.is_empty() || ts.windows(2).any(|w| w[1] < w[0]) || ts[0] < 0.0 || *ts.last().unwrap() > duration {
                return Err(Error::param("sampling", "sample times must be ascending and within [0, duration]"));
            }
            ts.clone()
        }
        Sampling::Endpoints => vec![0.0, duration],
    };
    Ok(times)
}

fn expectation(op: &FockOperator, rho: &DMatrix<C64>) -> f64 {
    let o = op.matrix();
    let n = o.nrows();
    let mut acc = C64::new(0.0, 0.0);
    for j in 0..n {
        for i in 0..n {
            acc += o[(i, j)] * rho[(j, i)];
        }
    }
    acc.re
}

fn add_scaled(y: &mut DMatrix<C64>, k: &DMatrix<C64>, s: f64) {
    y.zip_apply(k, |a, b| *a += b * s);
}

fn max_abs(m: &DMatrix<C64>) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Integrates the master equation from `rho0` over `[0, duration]`.
pub fn evolve(
    model: &LindbladModel,
    rho0: &DensityMatrix,
    duration: f64,
    sampling: &Sampling,
    options: &EvolveOptions,
) -> Result<EvolutionResult> {
    if !(duration > 0.0) || !duration.is_finite() {
        return Err(Error::param("duration", format!("must be positive and finite, got {duration}")));
    }
    if rho0.layout() != model.layout() {
        return Err(Error::LayoutMismatch("initial state and model layouts differ".into()));
    }
    for (name, op) in &options.observables {
        if op.layout() != model.layout() {
            return Err(Error::LayoutMismatch(format!("observable `{name}` has a different layout")));
        }
    }
    let targets = sample_times(sampling, duration)?;
    let layout = model.layout().clone();
    let mut result = EvolutionResult {
        times: Vec::with_capacity(targets.len()),
        states: Vec::new(),
        observables: options.observables.iter().map(|(n, _)| (n.clone(), Vec::new())).collect(),
        invariants: Vec::new(),
        accepted_steps: 0,
        rejected_steps: 0,
    };
    let record = |t: f64, y: &DMatrix<C64>, result: &mut EvolutionResult| -> Result<()> {
        let rho = DensityMatrix::from_matrix_unchecked(layout.clone(), y.clone())?;
        if let Some(threshold) = options.truncation_threshold {
            rho.check_truncation(threshold)?;
        }
        result.times.push(t);
        for ((_, op), (_, series)) in options.observables.iter().zip(result.observables.iter_mut()) {
            series.push(expectation(op, y));
        }
        result.invariants.push(rho.invariant_stats());
        if options.keep_states || result.states.is_empty() {
            result.states.push(rho);
        } else {
            result.states[0] = rho;
        }
        Ok(())
    };

    let mut y = rho0.matrix().clone();
    let mut t = 0.0;
    let mut k1 = model.rhs_matrix(&y);
    let scale = max_abs(&k1);
    let mut h = if scale > 0.0 { (0.01 * max_abs(&y).max(1e-3) / scale).min(duration) } else { duration };
    let mut steps = 0usize;

    for &target in &targets {
        while t < target {
            if steps >= options.max_steps {
                return Err(Error::StepSize { time: t, reason: format!("exceeded {} steps", options.max_steps) });
            }
            steps += 1;
            let remaining = target - t;
            let last = h >= remaining;
            let step = if last { remaining } else { h };

            let mut ks: Vec<DMatrix<C64>> = Vec::with_capacity(7);
            ks.push(k1.clone());
            for row in A.iter().take(5) {
                let mut yi = y.clone();
                for (kj, &aij) in ks.iter().zip(row.iter()) {
                    if aij != 0.0 {
                        add_scaled(&mut yi, kj, step * aij);
                    }
                }
                ks.push(model.rhs_matrix(&yi));
            }
            let mut y_new = y.clone();
            for (kj, &bj) in ks.iter().zip(A[5].iter()) {
                if bj != 0.0 {
                    add_scaled(&mut y_new, kj, step * bj);
                }
            }
            let k7 = model.rhs_matrix(&y_new);
            ks.push(k7);

            let mut err = 0.0f64;
            let n = y.len();
            for idx in 0..n {
                let mut e = C64::new(0.0, 0.0);
                for (kj, &ej) in ks.iter().zip(E.iter()) {
                    if ej != 0.0 {
                        e += kj[idx] * ej;
                    }
                }
                let tol = options.atol + options.rtol * y[idx].norm().max(y_new[idx].norm());
                err = err.max(step * e.norm() / tol);
            }
            if !err.is_finite() {
                return Err(Error::StepSize { time: t, reason: "non-finite error estimate".into() });
            }

            if err <= 1.0 {
                t = if last { target } else { t + step };
                y = y_new;
                k1 = ks.pop().expect("seven stages");
                result.accepted_steps += 1;
                let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
                // a step shortened to land on a sample time says little about
                // the stable step size
                h = if last { h.max(step * factor) } else { step * factor };
            } else {
                result.rejected_steps += 1;
                h = step * (0.9 * err.powf(-0.2)).clamp(0.1, 0.9);
            }
            if h < 1e-14 * duration.max(t) {
                return Err(Error::StepSize { time: t, reason: format!("step size collapsed to {h:.3e} s") });
            }
        }
        record(target, &y, &mut result)?;
    }
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fockspace::{annihilation, number, SpaceLayout, StateVector};
    use crate::lindblad::Dissipator;
    use crate::model::build_beamsplitter;

    #[test]
    fn damped_cavity_decays_at_twice_kappa() {
        let a = annihilation(4).unwrap();
        let n = number(4).unwrap();
        let kappa = 1.3;
        let m = LindbladModel::new(FockOperator::zeros(a.layout()), vec![Dissipator::new(a.clone(), kappa).unwrap()])
            .unwrap();
        let rho = StateVector::fock(a.layout(), &[1]).unwrap().to_density();
        let opts = EvolveOptions::default().observe("n", n);
        let r = evolve(&m, &rho, 2.0, &Sampling::Uniform(21), &opts).unwrap();
        for (t, v) in r.times.iter().zip(r.observable("n").unwrap()) {
            assert!((v - (-2.0 * kappa * t).exp()).abs() < 1e-8, "t={t}");
        }
        assert!(r.invariants_hold());
    }

    #[test]
    fn closed_evolution_keeps_purity() {
        let l = SpaceLayout::modes(&[("a", 4), ("m", 4)]).unwrap();
        let h = build_beamsplitter(1.0, &l, "a", "m").unwrap();
        let m = LindbladModel::closed(h).unwrap();
        let psi = StateVector::fock(&l, &[2, 1]).unwrap();
        let r = evolve(&m, &psi.to_density(), 5.0, &Sampling::Uniform(11), &EvolveOptions::default()).unwrap();
        for s in &r.states {
            assert!((s.purity() - 1.0).abs() < 1e-8);
        }
    }

    #[test]
    fn truncation_overflow_is_reported() {
        let a = annihilation(4).unwrap();
        let m = LindbladModel::new(FockOperator::zeros(a.layout()), vec![Dissipator::new(a.adjoint(), 1.0).unwrap()])
            .unwrap();
        let rho = StateVector::fock(a.layout(), &[0]).unwrap().to_density();
        let opts = EvolveOptions { truncation_threshold: Some(1e-6), ..Default::default() };
        let err = evolve(&m, &rho, 1.0, &Sampling::Uniform(5), &opts).unwrap_err();
        assert!(matches!(err, Error::TruncationOverflow { .. }));
    }

    #[test]
    fn step_budget_failure_is_an_error() {
        let a = annihilation(3).unwrap();
        let m = LindbladModel::new(FockOperator::zeros(a.layout()), vec![Dissipator::new(a.clone(), 1e6).unwrap()])
            .unwrap();
        let rho = StateVector::fock(a.layout(), &[2]).unwrap().to_density();
        let opts = EvolveOptions { max_steps: 3, ..Default::default() };
        assert!(matches!(evolve(&m, &rho, 1.0, &Sampling::Endpoints, &opts), Err(Error::StepSize { .. })));
        assert!(evolve(&m, &rho, 0.0, &Sampling::Endpoints, &opts).is_err());
    }
}
