//! Numerical oracles for the lower bounds: seeded brute-force searches over
//! orthonormal sets, plus direct checks of the inequalities the bounds rest on.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::geodesic::lemma1_bound;
use crate::qcore::linalg::{self, CMatrix, CVector};
use crate::qcore::{
    is_bare_measurement, unread_channel, von_neumann_entropy, DensityMatrix, MeasurementOperatorSet,
    StateVector,
};
use crate::random;

/// Tolerance on sum q_k |chi_k><chi_k| = I/N.
pub const MIXED_PRECONDITION_TOL: f64 = 1e-8;
const HISTOGRAM_BINS: usize = 20;
/// Refinement step shrinks by this overall factor across `refine_steps`.
const STEP_DECAY_SPAN: f64 = 1e-4;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    pub trials: usize,
    pub seed: u64,
    pub refine_steps: usize,
    pub step_size: f64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            trials: 2000,
            seed: 42,
            refine_steps: 1000,
            step_size: 0.2,
        }
    }
}

impl SearchConfig {
    fn validate(&self) -> Result<()> {
        if self.trials < 1 {
            return invalid("trials must be at least 1");
        }
        if !(self.step_size > 0.0 && self.step_size.is_finite()) {
            return invalid(format!("step_size {} must be positive", self.step_size));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchReport {
    pub best_value: f64,
    /// Raw search parameters; feed back to the matching `*_objective` to re-evaluate.
    pub best_witness: Vec<f64>,
    /// (left bin edge, count) over the per-trial optima.
    pub histogram: Vec<(f64, usize)>,
    pub config_echo: SearchConfig,
}

/// Reads consecutive (re, im) pairs as a column-major matrix.
fn complex_block(params: &[f64], rows: usize, cols: usize) -> CMatrix {
    CMatrix::from_fn(rows, cols, |r, c| {
        let i = 2 * (c * rows + r);
        Complex64::new(params[i], params[i + 1])
    })
}

fn unit_vector(params: &[f64], dim: usize) -> CVector {
    let v = complex_block(params, dim, 1).column(0).into_owned();
    let n = v.norm();
    if n > 0.0 {
        v.unscale(n)
    } else {
        let mut e = CVector::zeros(dim);
        e[0] = linalg::ONE;
        e
    }
}

/// Orthonormal columns of a d x k parameter block.
fn orthonormal_columns(params: &[f64], rows: usize, cols: usize) -> CMatrix {
    random::orthonormalize(complex_block(params, rows, cols))
}

/// Largest angle from `psi` to the N orthonormalized columns encoded in `params`.
pub fn lemma1_objective(psi: &StateVector, n: usize, params: &[f64]) -> f64 {
    let d = psi.dim();
    let cols = orthonormal_columns(params, d, n);
    let v = psi.amplitudes();
    (0..n)
        .map(|k| {
            let overlap = v.dotc(&cols.column(k)).norm();
            overlap.min(1.0).acos()
        })
        .fold(0.0, f64::max)
}

/// Largest angle between |n>|phi> and |psi>|phi_n> over the encoded system
/// basis, aux set, psi and phi (all of dimension N).
pub fn transfer_objective(n: usize, params: &[f64]) -> f64 {
    let (sys, rest) = params.split_at(2 * n * n);
    let (psi, rest) = rest.split_at(2 * n);
    let (aux, phi) = rest.split_at(2 * n * n);
    let basis = orthonormal_columns(sys, n, n);
    let pointers = orthonormal_columns(aux, n, n);
    let psi = unit_vector(psi, n);
    let phi = unit_vector(phi, n);
    (0..n)
        .map(|k| {
            // <n|psi> <phi|phi_n> is the joint overlap
            let u = basis.column(k).dotc(&psi).norm();
            let v = phi.dotc(&pointers.column(k)).norm();
            (u * v).min(1.0).acos()
        })
        .fold(0.0, f64::max)
}

fn gaussian_params(rng: &mut ChaCha8Rng, len: usize) -> Vec<f64> {
    (0..len).map(|_| rng.sample::<f64, _>(StandardNormal)).collect()
}

/// Random restart plus coordinate perturbation: each step nudges one
/// coordinate by a gaussian multiple of the (geometrically decaying) step
/// and keeps the move if it lowers the objective.
fn run_trial(objective: &(dyn Fn(&[f64]) -> f64 + Sync), len: usize, cfg: &SearchConfig, trial: usize) -> (f64, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(trial as u64);
    let mut params = gaussian_params(&mut rng, len);
    let mut best = objective(&params);
    let decay = if cfg.refine_steps > 0 {
        STEP_DECAY_SPAN.powf(1.0 / cfg.refine_steps as f64)
    } else {
        1.0
    };
    let mut step = cfg.step_size;
    for _ in 0..cfg.refine_steps {
        let i = rng.random_range(0..len);
        let delta = step * rng.sample::<f64, _>(StandardNormal);
        let old = params[i];
        params[i] = old + delta;
        let value = objective(&params);
        if value < best {
            best = value;
        } else {
            params[i] = old;
        }
        step *= decay;
    }
    (best, params)
}

fn histogram(values: &[f64]) -> Vec<(f64, usize)> {
    let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !(hi > lo) {
        return vec![(lo, values.len())];
    }
    let width = (hi - lo) / HISTOGRAM_BINS as f64;
    let mut counts = vec![0usize; HISTOGRAM_BINS];
    for &v in values {
        let b = (((v - lo) / width) as usize).min(HISTOGRAM_BINS - 1);
        counts[b] += 1;
    }
    counts
        .into_iter()
        .enumerate()
        .map(|(b, c)| (lo + b as f64 * width, c))
        .collect()
}

fn search(objective: &(dyn Fn(&[f64]) -> f64 + Sync), len: usize, cfg: &SearchConfig) -> Result<SearchReport> {
    cfg.validate()?;
    let trials: Vec<(f64, Vec<f64>)> = (0..cfg.trials)
        .into_par_iter()
        .map(|t| run_trial(objective, len, cfg, t))
        .collect();
    let values: Vec<f64> = trials.iter().map(|t| t.0).collect();
    let (_, best_index) = values
        .iter()
        .enumerate()
        .map(|(i, &v)| (v, i))
        .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))
        .expect("trials >= 1");
    let (best_value, best_witness) = trials[best_index].clone();
    Ok(SearchReport {
        best_value,
        best_witness,
        histogram: histogram(&values),
        config_echo: *cfg,
    })
}

/// Minimizes the largest angle from `psi` to N orthonormal states.
pub fn brute_force_lemma1(psi: &StateVector, n: usize, cfg: &SearchConfig) -> Result<SearchReport> {
    if n < 1 || psi.dim() < n {
        return invalid(format!("cannot fit {n} orthonormal states in dim {}", psi.dim()));
    }
    let len = 2 * psi.dim() * n;
    search(&|p: &[f64]| lemma1_objective(psi, n, p), len, cfg)
}

/// Minimizes the largest angle each input |n>|phi> must rotate through to
/// reach |psi>|phi_n>.
pub fn brute_force_transfer_angle(n: usize, cfg: &SearchConfig) -> Result<SearchReport> {
    lemma1_bound(n)?;
    let len = 4 * n * n + 4 * n;
    search(&|p: &[f64]| transfer_objective(n, p), len, cfg)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CauchySchwarz {
    pub z: f64,
    pub bound_holds: bool,
    pub equality: bool,
}

/// Z = u . v for unit real vectors, which can reach 1 only at u = v.
pub fn cauchy_schwarz_bound(u: &[f64], v: &[f64]) -> Result<CauchySchwarz> {
    if u.len() != v.len() || u.is_empty() {
        return invalid("amplitude lists must be non-empty and of equal length");
    }
    for (name, w) in [("u", u), ("v", v)] {
        let norm: f64 = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > 1e-12 {
            return invalid(format!("{name} has norm {norm}, expected 1"));
        }
    }
    let z: f64 = u.iter().zip(v).map(|(a, b)| a * b).sum();
    let equality = u.iter().zip(v).all(|(a, b)| (a - b).abs() <= 1e-12);
    Ok(CauchySchwarz {
        z,
        bound_holds: z <= 1.0 + 1e-12,
        equality,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct OverlapCheck {
    pub holds: bool,
    pub min_overlap: f64,
}

/// For an ensemble averaging to I/N, some member has overlap at most 1/sqrt(N) with psi0.
pub fn extended_lemma_check(chis: &[StateVector], weights: &[f64], psi0: &StateVector) -> Result<OverlapCheck> {
    let n = psi0.dim();
    if chis.is_empty() || chis.len() != weights.len() {
        return invalid("need one weight per ensemble state");
    }
    if chis.iter().any(|c| c.dim() != n) {
        return invalid("ensemble states must match psi0's dimension");
    }
    if weights.iter().any(|&q| !(q >= 0.0)) {
        return invalid("weights must be non-negative");
    }
    let avg = chis
        .iter()
        .zip(weights)
        .fold(CMatrix::zeros(n, n), |acc, (c, &q)| acc + c.projector().scale(q));
    let dev = linalg::max_abs_diff(&avg, &linalg::identity(n).unscale(n as f64));
    if dev > MIXED_PRECONDITION_TOL {
        return invalid(format!("ensemble average deviates from I/N by {dev:e}"));
    }
    let min_overlap = chis
        .iter()
        .map(|c| psi0.inner(c).norm())
        .fold(f64::INFINITY, f64::min);
    Ok(OverlapCheck {
        holds: min_overlap <= 1.0 / (n as f64).sqrt() + 1e-9,
        min_overlap,
    })
}

/// K rank-one terms q_k |chi_k><chi_k| summing to I/N, read off the rows of a
/// random K x N isometry.
pub fn random_mixed_decomposition<R: Rng + ?Sized>(rng: &mut R, n: usize, k: usize) -> (Vec<StateVector>, Vec<f64>) {
    let u = random::haar_unitary(rng, k.max(n));
    let mut chis = Vec::with_capacity(k);
    let mut weights = Vec::with_capacity(k);
    for row in 0..k {
        let x = CVector::from_fn(n, |i, _| u.matrix()[(row, i)].conj());
        let w = x.norm_squared();
        weights.push(w / n as f64);
        chis.push(StateVector::normalized(x).expect("isometry rows are nonzero almost surely"));
    }
    (chis, weights)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EntropyCheck {
    pub holds: bool,
    pub s_w: f64,
    pub s_rho: f64,
}

/// An unread bare measurement never lowers the von Neumann entropy.
pub fn ando_entropy_check(m: &MeasurementOperatorSet, rho: &DensityMatrix) -> Result<EntropyCheck> {
    if !is_bare_measurement(m) {
        return invalid("measurement operators are not all Hermitian positive semidefinite");
    }
    let w = unread_channel(rho, m)?;
    let s_w = von_neumann_entropy(&w);
    let s_rho = von_neumann_entropy(rho);
    Ok(EntropyCheck {
        holds: s_w >= s_rho - 1e-9,
        s_w,
        s_rho,
    })
}
