//! Entropy-extraction protocols: a timed sequence of joint Hamiltonian
//! segments, auxiliary decoherence and conditional feedback.
//!
//! Joint space is system (x) auxiliary, dimension N * K with K = N. Only
//! Hamiltonian segments cost time.

mod builders;
mod simulate;

pub use builders::*;
pub use simulate::*;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::geodesic::{lemma1_bound, SpeedBound};
use crate::qcore::linalg::{self, CMatrix};
use crate::qcore::{HermitianOperator, MeasurementOperatorSet, StateVector, UnitaryOperator};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProtocolKind {
    /// Strict-sense measurement-based feedback.
    Mf,
    Swap,
    Optimal,
}

/// U_fb = sum_m U_m (x) Pi_m with U_m on the system and Pi_m on the auxiliary.
#[derive(Clone, Debug, PartialEq)]
pub struct ConditionalUnitary {
    branch_unitaries: Vec<UnitaryOperator>,
    projectors: MeasurementOperatorSet,
}

impl ConditionalUnitary {
    pub fn new(branch_unitaries: Vec<UnitaryOperator>, projectors: MeasurementOperatorSet) -> Result<Self> {
        if branch_unitaries.len() != projectors.len() {
            return invalid(format!(
                "{} branch unitaries for {} projectors",
                branch_unitaries.len(),
                projectors.len()
            ));
        }
        if let Some(first) = branch_unitaries.first() {
            if branch_unitaries.iter().any(|u| u.dim() != first.dim()) {
                return invalid("branch unitaries differ in dimension");
            }
        }
        let out = Self {
            branch_unitaries,
            projectors,
        };
        // orthogonal complete projectors make U_fb unitary; check it
        UnitaryOperator::new(out.joint_matrix())?;
        Ok(out)
    }

    pub fn branch_unitaries(&self) -> &[UnitaryOperator] {
        &self.branch_unitaries
    }

    pub fn projectors(&self) -> &MeasurementOperatorSet {
        &self.projectors
    }

    fn joint_matrix(&self) -> CMatrix {
        let sys = self.branch_unitaries[0].dim();
        let aux = self.projectors.dim();
        self.branch_unitaries
            .iter()
            .zip(self.projectors.operators())
            .fold(CMatrix::zeros(sys * aux, sys * aux), |acc, (u, p)| {
                acc + linalg::kron(u.matrix(), p)
            })
    }

    pub fn joint_unitary(&self) -> UnitaryOperator {
        UnitaryOperator::new(self.joint_matrix()).expect("validated at construction")
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum ProtocolStep {
    CoherentSegment {
        hamiltonian: HermitianOperator,
        duration: f64,
        label: &'static str,
    },
    /// Decoherence of the auxiliary in the given projectors (auxiliary space).
    Decoherence { projectors: MeasurementOperatorSet },
    ConditionalUnitary(ConditionalUnitary),
}

impl ProtocolStep {
    pub fn duration(&self) -> f64 {
        match self {
            ProtocolStep::CoherentSegment { duration, .. } => *duration,
            _ => 0.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Protocol {
    pub kind: ProtocolKind,
    pub steps: Vec<ProtocolStep>,
    pub system_dim: usize,
    pub aux_dim: usize,
    pub bound: SpeedBound,
    pub target: StateVector,
    pub aux_initial: StateVector,
    pub declared_duration: f64,
    /// Zero-time form of the final feedback segment, when there is one.
    pub feedback: Option<ConditionalUnitary>,
}

impl Protocol {
    /// Checks dimensions, the spread bound on every segment, and that the
    /// declared duration is the total segment time.
    pub fn validate(&self) -> Result<()> {
        let joint = self.system_dim * self.aux_dim;
        if self.target.dim() != self.system_dim || self.aux_initial.dim() != self.aux_dim {
            return invalid("target or auxiliary state has the wrong dimension");
        }
        let mut total = 0.0;
        for step in &self.steps {
            match step {
                ProtocolStep::CoherentSegment {
                    hamiltonian, duration, ..
                } => {
                    if hamiltonian.dim() != joint {
                        return invalid("segment Hamiltonian is not on the joint space");
                    }
                    if !(*duration >= 0.0) {
                        return invalid("segment duration is negative");
                    }
                    if !self.bound.admits(hamiltonian) {
                        return invalid(format!(
                            "segment spread {} exceeds 2mu = {}",
                            hamiltonian.spectral_spread(),
                            self.bound.max_spread()
                        ));
                    }
                    total += duration;
                }
                ProtocolStep::Decoherence { projectors } => {
                    if projectors.dim() != self.aux_dim {
                        return invalid("decoherence projectors must act on the auxiliary");
                    }
                }
                ProtocolStep::ConditionalUnitary(cu) => {
                    if cu.projectors().dim() != self.aux_dim || cu.branch_unitaries()[0].dim() != self.system_dim {
                        return invalid("conditional unitary has the wrong dimensions");
                    }
                }
            }
        }
        if (total - self.declared_duration).abs() > 1e-12 * total.max(1.0) {
            return invalid(format!(
                "declared duration {} != segment total {total}",
                self.declared_duration
            ));
        }
        Ok(())
    }

    pub fn segment_time(&self) -> f64 {
        self.steps.iter().map(ProtocolStep::duration).sum()
    }

    pub fn hamiltonians(&self) -> impl Iterator<Item = &HermitianOperator> {
        self.steps.iter().filter_map(|s| match s {
            ProtocolStep::CoherentSegment { hamiltonian, .. } => Some(hamiltonian),
            _ => None,
        })
    }

    /// Same protocol with the timed feedback segment replaced by its
    /// instantaneous conditional unitary.
    pub fn with_instant_feedback(&self) -> Option<Protocol> {
        let cu = self.feedback.clone()?;
        let mut steps = self.steps.clone();
        let last = steps
            .iter()
            .rposition(|s| matches!(s, ProtocolStep::CoherentSegment { .. }))?;
        steps[last] = ProtocolStep::ConditionalUnitary(cu);
        let mut out = self.clone();
        out.declared_duration = steps.iter().map(ProtocolStep::duration).sum();
        out.steps = steps;
        Some(out)
    }
}

fn check_dim(n: usize) -> Result<()> {
    if n < 2 {
        return invalid(format!("system dimension N = {n} must be at least 2"));
    }
    Ok(())
}

/// (2/mu) arccos(1/sqrt(N)).
pub fn tau_mf(n: usize, bound: SpeedBound) -> Result<f64> {
    Ok(2.0 * lemma1_bound(n)? / bound.mu())
}

/// pi / (2 mu), independent of N.
pub fn tau_swap(bound: SpeedBound) -> f64 {
    std::f64::consts::FRAC_PI_2 / bound.mu()
}

/// (1/mu) arccos(1/N).
pub fn tau_opt(n: usize, bound: SpeedBound) -> Result<f64> {
    check_dim(n)?;
    Ok((1.0 / n as f64).acos() / bound.mu())
}

/// s(N) = 2 arccos(1/sqrt(N)) / arccos(1/N).
pub fn speedup(n: usize) -> Result<f64> {
    check_dim(n)?;
    let n = n as f64;
    Ok(2.0 * (1.0 / n.sqrt()).acos() / (1.0 / n).acos())
}

/// 2 - 1/sqrt(N).
pub fn speedup_asymptote(n: usize) -> f64 {
    2.0 - 1.0 / (n as f64).sqrt()
}
