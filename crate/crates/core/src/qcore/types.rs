//! Validated state and operator types.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::linalg::{self, matrix_json, CMatrix, CVector, ONE};
use crate::error::{invalid, Result};

pub const NORM_TOL: f64 = 1e-12;
pub const HERMITIAN_TOL: f64 = 1e-12;
pub const TRACE_TOL: f64 = 1e-12;
pub const PSD_TOL: f64 = 1e-10;
pub const UNITARY_TOL: f64 = 1e-10;
pub const COMPLETENESS_TOL: f64 = 1e-10;

/// Unit-norm pure state.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<[f64; 2]>", into = "Vec<[f64; 2]>")]
pub struct StateVector {
    amplitudes: CVector,
}

impl StateVector {
    pub fn new(amplitudes: Vec<Complex64>) -> Result<Self> {
        Self::from_vector(CVector::from_vec(amplitudes))
    }

    pub fn from_vector(amplitudes: CVector) -> Result<Self> {
        if amplitudes.len() < 2 {
            return invalid(format!("state dimension {} < 2", amplitudes.len()));
        }
        let norm = amplitudes.norm();
        if !norm.is_finite() || (norm - 1.0).abs() > NORM_TOL {
            return invalid(format!("state norm {norm} is not 1"));
        }
        Ok(Self { amplitudes })
    }

    /// Rescales to unit norm; fails on a zero or non-finite vector.
    pub fn normalized(amplitudes: CVector) -> Result<Self> {
        let norm = amplitudes.norm();
        if !(norm.is_finite() && norm > 1e-300) {
            return invalid("cannot normalize a zero vector");
        }
        Self::from_vector(amplitudes.unscale(norm))
    }

    pub fn from_reals(amplitudes: &[f64]) -> Result<Self> {
        Self::normalized(CVector::from_iterator(
            amplitudes.len(),
            amplitudes.iter().map(|&x| linalg::c(x, 0.0)),
        ))
    }

    pub fn basis(dim: usize, index: usize) -> Result<Self> {
        if index >= dim {
            return invalid(format!("basis index {index} out of range for dim {dim}"));
        }
        let mut v = CVector::zeros(dim);
        v[index] = ONE;
        Self::from_vector(v)
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &CVector {
        &self.amplitudes
    }

    pub fn into_vector(self) -> CVector {
        self.amplitudes
    }

    /// <self|other>
    pub fn inner(&self, other: &StateVector) -> Complex64 {
        self.amplitudes.dotc(&other.amplitudes)
    }

    pub fn projector(&self) -> CMatrix {
        linalg::outer(&self.amplitudes, &self.amplitudes)
    }

    pub fn to_density(&self) -> DensityMatrix {
        DensityMatrix {
            entries: self.projector(),
        }
    }

    pub fn kron(&self, other: &StateVector) -> StateVector {
        StateVector {
            amplitudes: linalg::kron_vec(&self.amplitudes, &other.amplitudes),
        }
    }

    pub fn scaled_phase(&self, phase: Complex64) -> StateVector {
        StateVector {
            amplitudes: self.amplitudes.map(|a| a * phase),
        }
    }
}

impl TryFrom<Vec<[f64; 2]>> for StateVector {
    type Error = crate::Error;
    fn try_from(v: Vec<[f64; 2]>) -> Result<Self> {
        Self::new(v.into_iter().map(|[re, im]| Complex64::new(re, im)).collect())
    }
}

impl From<StateVector> for Vec<[f64; 2]> {
    fn from(s: StateVector) -> Self {
        s.amplitudes.iter().map(|z| [z.re, z.im]).collect()
    }
}

/// Hermitian, positive-semidefinite, unit-trace operator.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityMatrix {
    #[serde(with = "matrix_json")]
    entries: CMatrix,
}

impl DensityMatrix {
    pub fn new(entries: CMatrix) -> Result<Self> {
        if !entries.is_square() || entries.nrows() < 1 {
            return invalid("density matrix must be square and non-empty");
        }
        if !linalg::is_hermitian(&entries, HERMITIAN_TOL) {
            return invalid("density matrix is not Hermitian");
        }
        let tr = linalg::trace(&entries);
        if (tr.re - 1.0).abs() > TRACE_TOL || tr.im.abs() > TRACE_TOL {
            return invalid(format!("density matrix trace {tr} is not 1"));
        }
        let lowest = linalg::eigvalsh(&entries)[0];
        if lowest < -PSD_TOL {
            return invalid(format!("density matrix has eigenvalue {lowest}"));
        }
        Ok(Self { entries })
    }

    /// Validates after removing rounding-level anti-Hermitian parts and trace drift.
    pub(crate) fn from_computed(entries: CMatrix) -> Result<Self> {
        let mut m = linalg::hermitize(&entries);
        let tr = linalg::trace(&m).re;
        if (tr - 1.0).abs() < 1e-9 {
            m.unscale_mut(tr);
        }
        Self::new(m)
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self {
            entries: linalg::identity(dim).unscale(dim as f64),
        }
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.entries
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        linalg::eigvalsh(&self.entries)
    }

    /// Tr(rho^2)
    pub fn purity(&self) -> f64 {
        // Tr(rho rho^H) = sum |rho_ij|^2 for Hermitian rho
        self.entries.iter().map(|z| z.norm_sqr()).sum()
    }

    /// <psi|rho|psi>
    pub fn fidelity_with(&self, psi: &StateVector) -> f64 {
        let v = psi.amplitudes();
        v.dotc(&(&self.entries * v)).re.clamp(0.0, 1.0)
    }

    pub fn kron(&self, other: &DensityMatrix) -> DensityMatrix {
        DensityMatrix {
            entries: linalg::kron(&self.entries, &other.entries),
        }
    }
}

/// Hamiltonian; the controlled resource is its spectral spread.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HermitianOperator {
    #[serde(with = "matrix_json")]
    entries: CMatrix,
}

impl HermitianOperator {
    pub fn new(entries: CMatrix) -> Result<Self> {
        if !linalg::is_hermitian(&entries, HERMITIAN_TOL) {
            return invalid("operator is not Hermitian");
        }
        Ok(Self { entries })
    }

    pub(crate) fn from_computed(entries: CMatrix) -> Result<Self> {
        Self::new(linalg::hermitize(&entries))
    }

    pub fn zero(dim: usize) -> Self {
        Self {
            entries: CMatrix::zeros(dim, dim),
        }
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.entries
    }

    pub fn eigen(&self) -> (Vec<f64>, CMatrix) {
        linalg::eigh(&self.entries)
    }

    /// lambda_max - lambda_min
    pub fn spectral_spread(&self) -> f64 {
        let values = linalg::eigvalsh(&self.entries);
        match (values.first(), values.last()) {
            (Some(lo), Some(hi)) => (hi - lo).max(0.0),
            _ => 0.0,
        }
    }

    /// exp(-iHt)
    pub fn propagator(&self, t: f64) -> UnitaryOperator {
        let m = linalg::hermitian_function(&self.entries, |e| Complex64::from_polar(1.0, -e * t));
        UnitaryOperator { entries: m }
    }

    pub fn kron(&self, other: &HermitianOperator) -> HermitianOperator {
        HermitianOperator {
            entries: linalg::kron(&self.entries, &other.entries),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UnitaryOperator {
    #[serde(with = "matrix_json")]
    entries: CMatrix,
}

impl UnitaryOperator {
    pub fn new(entries: CMatrix) -> Result<Self> {
        if !entries.is_square() {
            return invalid("unitary must be square");
        }
        let n = entries.nrows();
        let dev = linalg::max_abs_diff(&(entries.adjoint() * &entries), &linalg::identity(n));
        if dev > UNITARY_TOL {
            return invalid(format!("operator is not unitary (deviation {dev:e})"));
        }
        Ok(Self { entries })
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            entries: linalg::identity(dim),
        }
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.entries
    }

    pub fn adjoint(&self) -> UnitaryOperator {
        UnitaryOperator {
            entries: self.entries.adjoint(),
        }
    }

    /// self * other (other acts first).
    pub fn compose(&self, other: &UnitaryOperator) -> UnitaryOperator {
        UnitaryOperator {
            entries: &self.entries * &other.entries,
        }
    }

    pub fn apply(&self, psi: &StateVector) -> StateVector {
        StateVector {
            amplitudes: &self.entries * psi.amplitudes(),
        }
    }

    pub fn kron(&self, other: &UnitaryOperator) -> UnitaryOperator {
        UnitaryOperator {
            entries: linalg::kron(&self.entries, &other.entries),
        }
    }
}

/// Measurement operators {A_m} with sum A_m^H A_m = I.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasurementOperatorSet {
    #[serde(with = "matrix_list_json")]
    operators: Vec<CMatrix>,
}

impl MeasurementOperatorSet {
    pub fn new(operators: Vec<CMatrix>) -> Result<Self> {
        let Some(first) = operators.first() else {
            return invalid("measurement needs at least one operator");
        };
        let dim = first.nrows();
        if operators.iter().any(|a| a.nrows() != dim || a.ncols() != dim) {
            return invalid("measurement operators must be square with a common dimension");
        }
        let sum = operators
            .iter()
            .fold(CMatrix::zeros(dim, dim), |acc, a| acc + a.adjoint() * a);
        let dev = linalg::max_abs_diff(&sum, &linalg::identity(dim));
        if dev > COMPLETENESS_TOL {
            return invalid(format!("measurement set is incomplete (deviation {dev:e})"));
        }
        Ok(Self { operators })
    }

    /// Rank-one projectors onto an orthonormal basis given as states.
    pub fn projective(basis: &[StateVector]) -> Result<Self> {
        Self::new(basis.iter().map(StateVector::projector).collect())
    }

    pub fn computational(dim: usize) -> Self {
        let ops = (0..dim)
            .map(|i| {
                let mut m = CMatrix::zeros(dim, dim);
                m[(i, i)] = ONE;
                m
            })
            .collect();
        Self { operators: ops }
    }

    pub fn operators(&self) -> &[CMatrix] {
        &self.operators
    }

    pub fn len(&self) -> usize {
        self.operators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.operators.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.operators[0].nrows()
    }

    /// I_sys (x) A_m for each operator, acting on the second tensor factor.
    pub fn lifted_to_second(&self, first_dim: usize) -> MeasurementOperatorSet {
        let id = linalg::identity(first_dim);
        MeasurementOperatorSet {
            operators: self.operators.iter().map(|a| linalg::kron(&id, a)).collect(),
        }
    }
}

mod matrix_list_json {
    use super::{matrix_json, CMatrix};
    use serde::de::Error as _;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(ms: &[CMatrix], s: S) -> Result<S::Ok, S::Error> {
        ms.iter()
            .map(matrix_json::to_rows)
            .collect::<Vec<_>>()
            .serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<CMatrix>, D::Error> {
        let raw = Vec::<Vec<Vec<[f64; 2]>>>::deserialize(d)?;
        raw.iter()
            .map(|rows| matrix_json::from_rows(rows).ok_or_else(|| D::Error::custom("ragged matrix")))
            .collect()
    }
}
