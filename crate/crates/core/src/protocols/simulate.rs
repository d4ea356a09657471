use serde::Serialize;
use serde_json::Value;

use super::{Protocol, ProtocolStep};
use crate::error::{invalid, Result};
use crate::format;
use crate::qcore::linalg::{self, CMatrix};
use crate::qcore::{decohere, partial_trace, von_neumann_entropy, DensityMatrix, Subsystem};

pub const CSV_HEADER: &str = "t,system_entropy,aux_entropy,target_fidelity,system_purity";

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrajectorySample {
    pub t: f64,
    pub joint_state: DensityMatrix,
    pub system_entropy: f64,
    pub aux_entropy: f64,
    pub target_fidelity: f64,
    pub system_purity: f64,
}

/// Samples in time order. `t` is non-decreasing: instantaneous steps add a
/// second sample at the same time as the one before them.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Trajectory {
    pub samples: Vec<TrajectorySample>,
}

impl Trajectory {
    pub fn last(&self) -> &TrajectorySample {
        self.samples.last().expect("trajectories are never empty")
    }
}

struct Sampler<'a> {
    p: &'a Protocol,
    samples: Vec<TrajectorySample>,
}

impl Sampler<'_> {
    fn record(&mut self, t: f64, joint: &DensityMatrix) -> Result<()> {
        let dims = (self.p.system_dim, self.p.aux_dim);
        let sys = partial_trace(joint, dims, Subsystem::First)?;
        let aux = partial_trace(joint, dims, Subsystem::Second)?;
        self.samples.push(TrajectorySample {
            t,
            joint_state: joint.clone(),
            system_entropy: von_neumann_entropy(&sys),
            aux_entropy: von_neumann_entropy(&aux),
            target_fidelity: sys.fidelity_with(&self.p.target),
            system_purity: sys.purity().clamp(0.0, 1.0),
        });
        Ok(())
    }
}

fn conjugate(u: &CMatrix, rho: &DensityMatrix) -> Result<DensityMatrix> {
    DensityMatrix::from_computed(u * rho.matrix() * u.adjoint())
}

/// Runs `p` from `rho_system (x) |phi><phi|`, sampling on a uniform grid of
/// `sample_count` times over [0, declared_duration] plus every segment end.
pub fn simulate(p: &Protocol, rho_system: &DensityMatrix, sample_count: usize) -> Result<Trajectory> {
    if sample_count < 2 {
        return invalid("sample_count must be at least 2");
    }
    if rho_system.dim() != p.system_dim {
        return invalid(format!("initial state dim {} != N = {}", rho_system.dim(), p.system_dim));
    }
    p.validate()?;

    let total = p.declared_duration;
    let grid: Vec<f64> = (0..sample_count)
        .map(|i| total * i as f64 / (sample_count - 1) as f64)
        .collect();
    let mut joint = rho_system.kron(&p.aux_initial.to_density());
    let mut sampler = Sampler { p, samples: vec![] };
    sampler.record(0.0, &joint)?;

    let mut t0 = 0.0;
    for step in &p.steps {
        match step {
            ProtocolStep::CoherentSegment {
                hamiltonian, duration, ..
            } => {
                if *duration <= 0.0 {
                    continue;
                }
                let t1 = t0 + duration;
                let (energies, basis) = hamiltonian.eigen();
                let start = joint.clone();
                let interior = grid.iter().copied().filter(|&t| t > t0 && t < t1 - 1e-12 * total);
                for t in interior.chain(std::iter::once(t1)) {
                    let dt = t - t0;
                    let u = linalg::from_eigen(&basis, energies.iter().map(|&e| linalg::c(0.0, -e * dt).exp()));
                    joint = conjugate(&u, &start)?;
                    sampler.record(t.min(total), &joint)?;
                }
                t0 = t1;
            }
            ProtocolStep::Decoherence { projectors } => {
                joint = decohere(&joint, &projectors.lifted_to_second(p.system_dim))?;
                sampler.record(t0.min(total), &joint)?;
            }
            ProtocolStep::ConditionalUnitary(cu) => {
                joint = conjugate(cu.joint_unitary().matrix(), &joint)?;
                sampler.record(t0.min(total), &joint)?;
            }
        }
    }
    Ok(Trajectory {
        samples: sampler.samples,
    })
}

impl Trajectory {
    /// Scalar columns only; joint states are left to [`Trajectory::to_json`].
    pub fn to_csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for s in &self.samples {
            let row = [s.t, s.system_entropy, s.aux_entropy, s.target_fidelity, s.system_purity];
            out.push_str(&row.map(format::num).join(","));
            out.push('\n');
        }
        out
    }

    /// Full record including joint states, at full precision.
    pub fn to_json(&self) -> Value {
        serde_json::to_value(self).expect("trajectory is plain data")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geodesic::SpeedBound;
    use crate::protocols::{build_mf_protocol, build_swap_protocol, ProtocolKind};
    use crate::qcore::{shannon_entropy, StateVector};
    use crate::random;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn mu() -> SpeedBound {
        SpeedBound::new(1.0).unwrap()
    }

    fn joint_entropy(s: &TrajectorySample) -> f64 {
        von_neumann_entropy(&s.joint_state)
    }

    fn empty(n: usize) -> Protocol {
        Protocol {
            kind: ProtocolKind::Swap,
            steps: vec![],
            system_dim: n,
            aux_dim: n,
            bound: mu(),
            target: StateVector::basis(n, 0).unwrap(),
            aux_initial: StateVector::basis(n, 0).unwrap(),
            declared_duration: 0.0,
            feedback: None,
        }
    }

    #[test]
    fn empty_protocol_gives_one_sample() {
        let t = simulate(&empty(2), &DensityMatrix::maximally_mixed(2), 2).unwrap();
        assert_eq!(t.samples.len(), 1);
        assert_eq!(t.samples[0].t, 0.0);
        assert!((t.samples[0].system_entropy - 2f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn argument_errors() {
        let p = empty(2);
        assert!(simulate(&p, &DensityMatrix::maximally_mixed(3), 5).is_err());
        assert!(simulate(&p, &DensityMatrix::maximally_mixed(2), 1).is_err());
    }

    #[test]
    fn times_run_over_the_declared_duration() {
        let p = build_mf_protocol(3, mu(), StateVector::basis(3, 1).unwrap()).unwrap();
        let t = simulate(&p, &DensityMatrix::maximally_mixed(3), 50).unwrap();
        assert_eq!(t.samples[0].t, 0.0);
        assert!((t.last().t - p.declared_duration).abs() < 1e-12);
        for w in t.samples.windows(2) {
            assert!(w[1].t >= w[0].t);
        }
        // 50 grid points, the off-grid end of the first segment and the decoherence post-sample
        assert_eq!(t.samples.len(), 52);
        // with an odd count the midpoint is on the grid and is not repeated
        assert_eq!(simulate(&p, &DensityMatrix::maximally_mixed(3), 51).unwrap().samples.len(), 52);
    }

    #[test]
    fn joint_entropy_constant_under_unitaries_and_rising_under_decoherence() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for n in 2..=3 {
            let target = random::random_state(&mut rng, n);
            let mf = build_mf_protocol(n, mu(), target.clone()).unwrap();
            let sw = build_swap_protocol(n, mu(), target).unwrap();
            for rho in [random::random_density(&mut rng, n), random::random_state(&mut rng, n).to_density()] {
                let s0 = von_neumann_entropy(&rho);
                let t = simulate(&sw, &rho, 20).unwrap();
                for s in &t.samples {
                    assert!((joint_entropy(s) - s0).abs() < 1e-9);
                }
                let t = simulate(&mf, &rho, 20).unwrap();
                let jump = t.samples.windows(2).position(|w| w[1].t == w[0].t).unwrap();
                for (i, w) in t.samples.windows(2).enumerate() {
                    let (a, b) = (joint_entropy(&w[0]), joint_entropy(&w[1]));
                    if i == jump {
                        assert!(b >= a - 1e-9);
                    } else {
                        assert!((a - b).abs() < 1e-9);
                    }
                }
            }
        }
    }

    #[test]
    fn mf_measurement_end_matches_readout_statistics() {
        let target = StateVector::basis(2, 0).unwrap();
        let p = build_mf_protocol(2, mu(), target).unwrap();
        let t = simulate(&p, &DensityMatrix::maximally_mixed(2), 11).unwrap();
        let ProtocolStep::Decoherence { projectors } = &p.steps[1] else {
            panic!()
        };
        let jump = t.samples.windows(2).position(|w| w[1].t == w[0].t).unwrap();
        let before = &t.samples[jump];
        let aux = partial_trace(&before.joint_state, (2, 2), Subsystem::Second).unwrap();
        let diag: Vec<f64> = projectors
            .operators()
            .iter()
            .map(|pr| linalg::trace(&(pr * aux.matrix())).re)
            .collect();
        assert!((before.system_entropy - shannon_entropy(&diag)).abs() < 1e-9);
        assert!(t.last().system_entropy < 1e-9);
    }

    #[test]
    fn swap_n2_moves_entropy_to_the_auxiliary() {
        let p = build_swap_protocol(2, mu(), StateVector::basis(2, 1).unwrap()).unwrap();
        let t = simulate(&p, &DensityMatrix::maximally_mixed(2), 3).unwrap();
        assert!(t.last().system_entropy < 1e-9);
        assert!((t.last().aux_entropy - 2f64.ln()).abs() < 1e-9);
    }

    #[test]
    fn csv_layout() {
        let p = build_swap_protocol(2, mu(), StateVector::basis(2, 0).unwrap()).unwrap();
        let csv = simulate(&p, &DensityMatrix::maximally_mixed(2), 3).unwrap().to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], CSV_HEADER);
        assert_eq!(lines.len(), 4);
        assert!(lines[1].starts_with("0,0.693147181,0,0.5,0.5"));
        assert!(lines[3].starts_with("1.57079633,"));
    }
}
