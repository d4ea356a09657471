use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{check_dim, tau_opt, ConditionalUnitary, Protocol, ProtocolKind, ProtocolStep};
use crate::error::{invalid, Error, Result};
use crate::geodesic::{geodesic_hamiltonian, lemma1_bound, min_unitary_time, unbiased_orthogonal_set, SpeedBound, SynthesisResult};
use crate::qcore::linalg::{self, CMatrix};
use crate::qcore::{HermitianOperator, MeasurementOperatorSet, StateVector, UnitaryOperator};

/// Slack on the optimal-time assertion.
pub const OPTIMAL_TIME_TOL: f64 = 1e-6;
const SWEEPS_PER_STEP: usize = 40;

fn check_target(n: usize, target: &StateVector) -> Result<()> {
    check_dim(n)?;
    if target.dim() != n {
        return invalid(format!("target has dim {} but N = {n}", target.dim()));
    }
    Ok(())
}

fn aux_ground(n: usize) -> StateVector {
    StateVector::basis(n, 0).expect("n >= 2")
}

/// Unitary whose first column is `target`.
fn rotation_to(target: &StateVector) -> CMatrix {
    linalg::complete_orthonormal_basis(std::slice::from_ref(target.amplitudes()), target.dim())
}

/// Measure in a basis unbiased to the target, decohere the auxiliary, then
/// rotate each branch onto the target. Both timed stages take arccos(1/sqrt N)/mu.
pub fn build_mf_protocol(n: usize, bound: SpeedBound, target: StateVector) -> Result<Protocol> {
    check_target(n, &target)?;
    let phi = aux_ground(n);
    let chis = unbiased_orthogonal_set(&target, n)?;
    let pointers = unbiased_orthogonal_set(&phi, n)?;
    let stage = lemma1_bound(n)? / bound.mu();
    let joint = n * n;

    let mut h_meas = CMatrix::zeros(joint, joint);
    let mut h_fb = CMatrix::zeros(joint, joint);
    let mut branches = Vec::with_capacity(n);
    for (chi, pointer) in chis.iter().zip(&pointers) {
        let h_k = geodesic_hamiltonian(&phi, pointer, bound)?;
        h_meas += linalg::kron(&chi.projector(), h_k.hamiltonian.matrix());
        let fb_k = geodesic_hamiltonian(chi, &target, bound)?;
        h_fb += linalg::kron(fb_k.hamiltonian.matrix(), &pointer.projector());
        branches.push(fb_k.propagator());
    }
    let readout = MeasurementOperatorSet::projective(&pointers)?;
    let feedback = ConditionalUnitary::new(branches, readout.clone())?;

    let steps = vec![
        ProtocolStep::CoherentSegment {
            hamiltonian: HermitianOperator::from_computed(h_meas)?,
            duration: stage,
            label: "measure",
        },
        ProtocolStep::Decoherence { projectors: readout },
        ProtocolStep::CoherentSegment {
            hamiltonian: HermitianOperator::from_computed(h_fb)?,
            duration: stage,
            label: "feedback",
        },
    ];
    let protocol = Protocol {
        kind: ProtocolKind::Mf,
        steps,
        system_dim: n,
        aux_dim: n,
        bound,
        target,
        aux_initial: phi,
        declared_duration: 2.0 * stage,
        feedback: Some(feedback),
    };
    protocol.validate()?;
    Ok(protocol)
}

/// Operators A_k = <k| U_meas |phi> that the MF measurement stage applies to
/// the system when the auxiliary reads out outcome k.
pub fn mf_induced_measurement(p: &Protocol) -> Result<MeasurementOperatorSet> {
    let (Some(ProtocolStep::CoherentSegment { hamiltonian, duration, .. }), Some(ProtocolStep::Decoherence { projectors })) =
        (p.steps.first(), p.steps.get(1))
    else {
        return invalid("protocol does not start with a measurement and a readout");
    };
    let (n, k) = (p.system_dim, p.aux_dim);
    let u = hamiltonian.propagator(*duration);
    let phi = p.aux_initial.amplitudes();
    let ops = projectors
        .operators()
        .iter()
        .map(|proj| {
            let (vals, vecs) = linalg::eigh(proj);
            let pointer = vecs.column(vals.len() - 1).into_owned();
            CMatrix::from_fn(n, n, |i, j| {
                let mut acc = Complex64::new(0.0, 0.0);
                for a in 0..k {
                    for b in 0..k {
                        acc += pointer[a].conj() * u.matrix()[(i * k + a, j * k + b)] * phi[b];
                    }
                }
                acc
            })
        })
        .collect();
    MeasurementOperatorSet::new(ops)
}

/// Single coherent segment realising `(R (x) I) v (R^H (x) I)`, R taking |0> to the target.
fn conjugated_segment_protocol(
    kind: ProtocolKind,
    n: usize,
    bound: SpeedBound,
    target: StateVector,
    v: &CMatrix,
    label: &'static str,
) -> Result<(Protocol, SynthesisResult)> {
    let r = linalg::kron(&rotation_to(&target), &linalg::identity(n));
    let joint = UnitaryOperator::new(&r * v * r.adjoint())?;
    let synth = min_unitary_time(&joint, bound);
    let protocol = Protocol {
        kind,
        steps: vec![ProtocolStep::CoherentSegment {
            hamiltonian: synth.hamiltonian.clone(),
            duration: synth.duration,
            label,
        }],
        system_dim: n,
        aux_dim: n,
        bound,
        target,
        aux_initial: aux_ground(n),
        declared_duration: synth.duration,
        feedback: None,
    };
    protocol.validate()?;
    Ok((protocol, synth))
}

/// Swap the system with the pure auxiliary, then rotate |0> onto the target.
pub fn build_swap_protocol(n: usize, bound: SpeedBound, target: StateVector) -> Result<Protocol> {
    check_target(n, &target)?;
    let swap = linalg::swap_matrix(n, n);
    conjugated_segment_protocol(ProtocolKind::Swap, n, bound, target, &swap, "swap").map(|(p, _)| p)
}

/// Phase search settings for the unbiased-swap construction.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OptimalSearch {
    pub restarts: usize,
    pub seed: u64,
    pub tolerance: f64,
}

impl Default for OptimalSearch {
    fn default() -> Self {
        Self {
            restarts: 10,
            seed: 42,
            tolerance: 1e-9,
        }
    }
}

/// `(F diag(e^{i alpha}) (x) F diag(e^{i beta})) SWAP`: sends |n>|0> to |psi>|phi_n>
/// with psi = F|0> and every overlap of magnitude 1/sqrt(N).
pub fn unbiased_swap_unitary(n: usize, alpha: &[f64], beta: &[f64]) -> CMatrix {
    let f = linalg::fourier_matrix(n);
    let phased = |phases: &[f64]| {
        let d = phases.iter().map(|&p| Complex64::from_polar(1.0, p));
        &f * CMatrix::from_diagonal(&linalg::CVector::from_iterator(n, d))
    };
    linalg::kron(&phased(alpha), &phased(beta)) * linalg::swap_matrix(n, n)
}

fn phase_duration(n: usize, params: &[f64], bound: SpeedBound) -> f64 {
    let v = unbiased_swap_unitary(n, &params[..n], &params[n..]);
    min_unitary_time(&UnitaryOperator::new(v).expect("product of unitaries"), bound).duration
}

fn coordinate_descent(n: usize, mut params: Vec<f64>, bound: SpeedBound, tolerance: f64) -> (f64, Vec<f64>) {
    let mut best = phase_duration(n, &params, bound);
    let mut step = 0.5;
    let mut sweeps = 0;
    while step > tolerance {
        let mut improved = false;
        sweeps += 1;
        for i in 0..params.len() {
            for dir in [1.0, -1.0] {
                let old = params[i];
                params[i] = old + dir * step;
                let d = phase_duration(n, &params, bound);
                if d < best - tolerance {
                    best = d;
                    improved = true;
                    break;
                }
                params[i] = old;
            }
        }
        if !improved || sweeps >= SWEEPS_PER_STEP {
            step *= 0.5;
            sweeps = 0;
        }
    }
    (best, params)
}

/// Best phases found by seeded restarts (restart 0 starts from zero phases).
/// Returns (duration, alpha ++ beta).
pub fn optimize_branch_phases(n: usize, bound: SpeedBound, search: &OptimalSearch) -> Result<(f64, Vec<f64>)> {
    check_dim(n)?;
    if search.restarts == 0 {
        return invalid("phase search needs at least one restart");
    }
    let results: Vec<(f64, usize, Vec<f64>)> = (0..search.restarts)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(search.seed);
            rng.set_stream(r as u64);
            let start = if r == 0 {
                vec![0.0; 2 * n]
            } else {
                (0..2 * n).map(|_| rng.random_range(0.0..std::f64::consts::TAU)).collect()
            };
            let (d, p) = coordinate_descent(n, start, bound, search.tolerance);
            (d, r, p)
        })
        .collect();
    let (d, _, p) = results
        .into_iter()
        .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))
        .expect("restarts >= 1");
    Ok((d, p))
}

/// The phase-optimised unbiased swap at whatever duration the search reaches.
pub fn build_unbiased_swap_protocol(
    n: usize,
    bound: SpeedBound,
    target: StateVector,
    search: &OptimalSearch,
) -> Result<Protocol> {
    check_target(n, &target)?;
    let (_, params) = optimize_branch_phases(n, bound, search)?;
    let v = unbiased_swap_unitary(n, &params[..n], &params[n..]);
    // move psi = F|0> to |0> first so the shared conjugation lands it on the target
    let f = linalg::fourier_matrix(n);
    let to_ground = linalg::kron(&f.adjoint(), &linalg::identity(n));
    let v = &to_ground * v * to_ground.adjoint();
    conjugated_segment_protocol(ProtocolKind::Optimal, n, bound, target, &v, "unbiased-swap").map(|(p, _)| p)
}

/// Unbiased swap asserted to run in arccos(1/N)/mu.
pub fn build_optimal_protocol(n: usize, bound: SpeedBound, target: StateVector) -> Result<Protocol> {
    build_optimal_protocol_with(n, bound, target, &OptimalSearch::default())
}

pub fn build_optimal_protocol_with(
    n: usize,
    bound: SpeedBound,
    target: StateVector,
    search: &OptimalSearch,
) -> Result<Protocol> {
    let goal = tau_opt(n, bound)?;
    let p = build_unbiased_swap_protocol(n, bound, target, search)?;
    if p.declared_duration > goal + OPTIMAL_TIME_TOL {
        return Err(Error::SynthesisFailure {
            achieved: p.declared_duration,
            target: goal,
        });
    }
    Ok(p)
}
