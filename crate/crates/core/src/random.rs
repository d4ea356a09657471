//! Seeded random ensembles: complex Ginibre matrices, Haar unitaries, states,
//! density matrices and bare measurements.

use nalgebra::QR;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::qcore::linalg::{self, CMatrix, CVector};
use crate::qcore::{DensityMatrix, HermitianOperator, MeasurementOperatorSet, StateVector, UnitaryOperator};

pub fn complex_normal<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

pub fn ginibre<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| complex_normal(rng))
}

/// Orthonormalizes the columns of a full-rank square matrix (QR with the
/// phases of R's diagonal moved into Q, which makes the map rotation-invariant).
pub fn orthonormalize(z: CMatrix) -> CMatrix {
    let (mut q, r) = QR::new(z).unpack();
    for j in 0..q.ncols() {
        let d = r[(j, j)];
        let n = d.norm();
        if n > 0.0 {
            let phase = d / n;
            for i in 0..q.nrows() {
                q[(i, j)] *= phase;
            }
        }
    }
    q
}

pub fn haar_unitary<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> UnitaryOperator {
    UnitaryOperator::new(orthonormalize(ginibre(rng, dim, dim))).expect("QR factor is unitary")
}

pub fn random_state<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> StateVector {
    let v = CVector::from_fn(dim, |_, _| complex_normal(rng));
    StateVector::normalized(v).expect("gaussian vector is nonzero")
}

/// Hilbert-Schmidt random mixed state G G^H / Tr.
pub fn random_density<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> DensityMatrix {
    let g = ginibre(rng, dim, dim);
    let m = &g * g.adjoint();
    let tr = linalg::trace(&m).re;
    DensityMatrix::from_computed(m.unscale(tr)).expect("Wishart matrix is a valid state")
}

pub fn random_hermitian<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> HermitianOperator {
    let g = ginibre(rng, dim, dim);
    HermitianOperator::from_computed(&g + g.adjoint()).expect("hermitized")
}

/// Random Hermitian with spectral spread exactly `spread`.
pub fn random_hamiltonian_with_spread<R: Rng + ?Sized>(rng: &mut R, dim: usize, spread: f64) -> HermitianOperator {
    let h = random_hermitian(rng, dim);
    let (values, vectors) = h.eigen();
    let lo = values[0];
    let width = values[dim - 1] - lo;
    let scaled = values.iter().map(|&v| linalg::c((v - lo) / width * spread - spread / 2.0, 0.0));
    HermitianOperator::from_computed(linalg::from_eigen(&vectors, scaled)).expect("hermitian")
}

/// Random bare measurement: A_m = E_m^{1/2} with E_m = S^{-1/2} G_m^H G_m S^{-1/2}.
pub fn random_bare_measurement<R: Rng + ?Sized>(rng: &mut R, dim: usize, outcomes: usize) -> MeasurementOperatorSet {
    let effects: Vec<CMatrix> = (0..outcomes)
        .map(|_| {
            let g = ginibre(rng, dim, dim);
            g.adjoint() * g
        })
        .collect();
    let total = effects.iter().fold(CMatrix::zeros(dim, dim), |acc, e| acc + e);
    let inv_sqrt = linalg::hermitian_function(&total, |x| linalg::c(1.0 / x.sqrt(), 0.0));
    let ops = effects
        .iter()
        .map(|e| {
            let normalized = linalg::hermitize(&(&inv_sqrt * e * &inv_sqrt));
            linalg::hermitian_function(&normalized, |x| linalg::c(x.max(0.0).sqrt(), 0.0))
        })
        .collect();
    MeasurementOperatorSet::new(ops).expect("normalized effects are complete")
}

/// Random complete (generally non-bare) measurement from an isometry.
pub fn random_measurement<R: Rng + ?Sized>(rng: &mut R, dim: usize, outcomes: usize) -> MeasurementOperatorSet {
    let big = outcomes * dim;
    let u = haar_unitary(rng, big);
    let ops = (0..outcomes)
        .map(|m| u.matrix().view((m * dim, 0), (dim, dim)).into_owned())
        .collect();
    MeasurementOperatorSet::new(ops).expect("isometry blocks are complete")
}
