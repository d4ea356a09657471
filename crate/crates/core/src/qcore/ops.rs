use nalgebra::SVD;

use super::linalg::{self, CMatrix};
use super::types::*;
use crate::error::{invalid, Result};

/// Eigenvalues below this are treated as exact zeros inside entropy logs.
pub const ENTROPY_CLAMP: f64 = 1e-12;
/// Outcomes with probability at or below this have no defined post-state.
pub const NEGLIGIBLE_PROBABILITY: f64 = 1e-14;
const OPERATOR_TOL: f64 = 1e-10;

/// Either kind of tensor factor accepted by [`tensor_product`].
#[derive(Clone, Debug, PartialEq)]
pub enum Operand {
    State(StateVector),
    Matrix(CMatrix),
}

pub fn tensor_product(a: &Operand, b: &Operand) -> Result<Operand> {
    match (a, b) {
        (Operand::State(x), Operand::State(y)) => Ok(Operand::State(x.kron(y))),
        (Operand::Matrix(x), Operand::Matrix(y)) => Ok(Operand::Matrix(linalg::kron(x, y))),
        _ => invalid("tensor product of a state with a matrix"),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Subsystem {
    First,
    Second,
}

/// Reduced state of one factor of C^{d1} (x) C^{d2}; joint index is i*d2 + j.
pub fn partial_trace(rho: &DensityMatrix, dims: (usize, usize), keep: Subsystem) -> Result<DensityMatrix> {
    let (d1, d2) = dims;
    if d1 == 0 || d2 == 0 || d1 * d2 != rho.dim() {
        return invalid(format!("dims {d1}x{d2} do not factor dimension {}", rho.dim()));
    }
    let m = rho.matrix();
    let reduced = match keep {
        Subsystem::First => CMatrix::from_fn(d1, d1, |i, k| (0..d2).map(|j| m[(i * d2 + j, k * d2 + j)]).sum()),
        Subsystem::Second => CMatrix::from_fn(d2, d2, |j, l| (0..d1).map(|i| m[(i * d2 + j, i * d2 + l)]).sum()),
    };
    DensityMatrix::from_computed(reduced)
}

/// S = -Tr rho ln rho, in nats.
pub fn von_neumann_entropy(rho: &DensityMatrix) -> f64 {
    shannon_entropy(&rho.eigenvalues()).clamp(0.0, (rho.dim() as f64).ln())
}

/// -sum p ln p with 0 ln 0 = 0 and tiny values clamped to zero.
pub fn shannon_entropy(probabilities: &[f64]) -> f64 {
    probabilities
        .iter()
        .filter(|&&p| p > ENTROPY_CLAMP)
        .map(|&p| -p * p.ln())
        .sum()
}

/// Things that evolve unitarily under exp(-iHt).
pub trait Evolve: Sized {
    fn dim(&self) -> usize;
    fn apply_unitary(&self, u: &UnitaryOperator) -> Result<Self>;
}

impl Evolve for StateVector {
    fn dim(&self) -> usize {
        StateVector::dim(self)
    }

    fn apply_unitary(&self, u: &UnitaryOperator) -> Result<Self> {
        StateVector::normalized(u.matrix() * self.amplitudes())
    }
}

impl Evolve for DensityMatrix {
    fn dim(&self) -> usize {
        DensityMatrix::dim(self)
    }

    fn apply_unitary(&self, u: &UnitaryOperator) -> Result<Self> {
        DensityMatrix::from_computed(u.matrix() * self.matrix() * u.matrix().adjoint())
    }
}

pub fn evolve<T: Evolve>(h: &HermitianOperator, t: f64, input: &T) -> Result<T> {
    if !(t >= 0.0 && t.is_finite()) {
        return invalid(format!("evolution time {t} must be finite and non-negative"));
    }
    if h.dim() != input.dim() {
        return invalid(format!("hamiltonian dim {} != input dim {}", h.dim(), input.dim()));
    }
    input.apply_unitary(&h.propagator(t))
}

pub fn spectral_spread(h: &HermitianOperator) -> f64 {
    h.spectral_spread()
}

/// arccos |<psi|phi>|, in [0, pi/2].
///
/// Evaluated as atan2(|phi - <psi|phi> psi|, |<psi|phi>|), which stays accurate
/// for nearly parallel rays where arccos loses half the digits.
pub fn hilbert_angle(psi: &StateVector, phi: &StateVector) -> Result<f64> {
    if psi.dim() != phi.dim() {
        return invalid(format!("dim mismatch {} vs {}", psi.dim(), phi.dim()));
    }
    let overlap = psi.inner(phi);
    let sine = (phi.amplitudes() - psi.amplitudes() * overlap).norm();
    Ok(sine.atan2(overlap.norm()).clamp(0.0, std::f64::consts::FRAC_PI_2))
}

/// A = U P with P = (A^H A)^{1/2}; for singular A the unitary factor is
/// completed on the kernel by the SVD's singular vectors.
pub fn polar_decompose(a: &CMatrix) -> Result<(UnitaryOperator, CMatrix)> {
    if !a.is_square() || a.nrows() == 0 {
        return invalid("polar decomposition needs a non-empty square matrix");
    }
    let svd = SVD::new(a.clone(), true, true);
    let (Some(w), Some(v_t)) = (svd.u, svd.v_t) else {
        return invalid("singular value decomposition failed");
    };
    let sigma = CMatrix::from_diagonal(&svd.singular_values.map(|s| linalg::c(s, 0.0)));
    let p = linalg::hermitize(&(v_t.adjoint() * sigma * &v_t));
    let u = UnitaryOperator::new(w * v_t)?;
    Ok((u, p))
}

fn is_projector(p: &CMatrix) -> bool {
    linalg::is_hermitian(p, OPERATOR_TOL) && linalg::max_abs_diff(&(p * p), p) <= OPERATOR_TOL
}

/// rho -> sum_m Pi_m rho Pi_m for mutually orthogonal projectors.
pub fn decohere(rho: &DensityMatrix, projectors: &MeasurementOperatorSet) -> Result<DensityMatrix> {
    if projectors.dim() != rho.dim() {
        return invalid("projector dimension does not match state");
    }
    let ops = projectors.operators();
    if let Some(i) = ops.iter().position(|p| !is_projector(p)) {
        return invalid(format!("operator {i} is not an orthogonal projector"));
    }
    for (i, p) in ops.iter().enumerate() {
        for q in &ops[i + 1..] {
            if linalg::max_abs(&(p * q)) > OPERATOR_TOL {
                return invalid("projectors are not mutually orthogonal");
            }
        }
    }
    let m = rho.matrix();
    let out = ops.iter().fold(CMatrix::zeros(rho.dim(), rho.dim()), |acc, p| acc + p * m * p);
    DensityMatrix::from_computed(out)
}

#[derive(Clone, Debug, PartialEq)]
pub struct MeasurementOutcome {
    pub probability: f64,
    /// `None` when the outcome probability is negligible.
    pub post_state: Option<DensityMatrix>,
}

pub fn apply_measurement(rho: &DensityMatrix, m: &MeasurementOperatorSet) -> Result<Vec<MeasurementOutcome>> {
    if m.dim() != rho.dim() {
        return invalid("measurement dimension does not match state");
    }
    let r = rho.matrix();
    m.operators()
        .iter()
        .map(|a| {
            let unnormalized = a * r * a.adjoint();
            let probability = linalg::trace(&unnormalized).re.max(0.0);
            let post_state = if probability > NEGLIGIBLE_PROBABILITY {
                Some(DensityMatrix::from_computed(unnormalized.unscale(probability))?)
            } else {
                None
            };
            Ok(MeasurementOutcome { probability, post_state })
        })
        .collect()
}

/// True iff every operator is Hermitian positive-semidefinite.
pub fn is_bare_measurement(m: &MeasurementOperatorSet) -> bool {
    m.operators()
        .iter()
        .all(|a| linalg::is_hermitian(a, OPERATOR_TOL) && linalg::eigvalsh(a)[0] >= -OPERATOR_TOL)
}

/// Operator sum w = sum_m A_m rho A_m^H of a measurement, outcomes unread.
pub fn unread_channel(rho: &DensityMatrix, m: &MeasurementOperatorSet) -> Result<DensityMatrix> {
    if m.dim() != rho.dim() {
        return invalid("measurement dimension does not match state");
    }
    let r = rho.matrix();
    let w = m
        .operators()
        .iter()
        .fold(CMatrix::zeros(rho.dim(), rho.dim()), |acc, a| acc + a * r * a.adjoint());
    DensityMatrix::from_computed(w)
}

/// Phase-insensitive comparison: 1 - |<a|b>|.
pub fn ray_distance(a: &StateVector, b: &StateVector) -> f64 {
    1.0 - a.inner(b).norm()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcore::linalg::{c, CVector, ONE, ZERO};
    use crate::random;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, FRAC_PI_4, LN_2};

    fn plus() -> StateVector {
        StateVector::from_reals(&[1.0, 1.0]).unwrap()
    }

    fn diag(values: &[f64]) -> DensityMatrix {
        DensityMatrix::new(CMatrix::from_diagonal(&CVector::from_iterator(
            values.len(),
            values.iter().map(|&v| c(v, 0.0)),
        )))
        .unwrap()
    }

    #[test]
    fn tensor_product_examples() {
        let k0 = StateVector::basis(2, 0).unwrap();
        let k1 = StateVector::basis(2, 1).unwrap();
        let Operand::State(s) = tensor_product(&Operand::State(k0.clone()), &Operand::State(k1)).unwrap() else {
            panic!()
        };
        assert_eq!(s, StateVector::basis(4, 1).unwrap());

        let Operand::Matrix(i4) =
            tensor_product(&Operand::Matrix(linalg::identity(2)), &Operand::Matrix(linalg::identity(2))).unwrap()
        else {
            panic!()
        };
        assert_eq!(i4, linalg::identity(4));

        let Operand::State(s) = tensor_product(&Operand::State(plus()), &Operand::State(k0.clone())).unwrap() else {
            panic!()
        };
        let expected = [FRAC_1_SQRT_2, 0.0, FRAC_1_SQRT_2, 0.0];
        for (a, e) in s.amplitudes().iter().zip(expected) {
            assert!((a - c(e, 0.0)).norm() < 1e-15);
        }

        assert!(tensor_product(&Operand::State(k0), &Operand::Matrix(linalg::identity(2))).is_err());
    }

    #[test]
    fn partial_trace_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a = random::random_density(&mut rng, 2);
        let b = random::random_density(&mut rng, 3);
        let joint = a.kron(&b);
        let ra = partial_trace(&joint, (2, 3), Subsystem::First).unwrap();
        let rb = partial_trace(&joint, (2, 3), Subsystem::Second).unwrap();
        assert!(linalg::max_abs_diff(ra.matrix(), a.matrix()) < 1e-12);
        assert!(linalg::max_abs_diff(rb.matrix(), b.matrix()) < 1e-12);

        let bell = StateVector::from_reals(&[1.0, 0.0, 0.0, 1.0]).unwrap().to_density();
        let r = partial_trace(&bell, (2, 2), Subsystem::First).unwrap();
        assert!(linalg::max_abs_diff(r.matrix(), DensityMatrix::maximally_mixed(2).matrix()) < 1e-15);

        let mixed = DensityMatrix::maximally_mixed(4);
        for keep in [Subsystem::First, Subsystem::Second] {
            let r = partial_trace(&mixed, (2, 2), keep).unwrap();
            assert!(linalg::max_abs_diff(r.matrix(), DensityMatrix::maximally_mixed(2).matrix()) < 1e-15);
        }
        assert!(partial_trace(&mixed, (3, 2), Subsystem::First).is_err());
    }

    #[test]
    fn entropy_examples() {
        assert!(von_neumann_entropy(&plus().to_density()).abs() < 1e-12);
        assert!((von_neumann_entropy(&DensityMatrix::maximally_mixed(2)) - LN_2).abs() < 1e-12);
        // -0.75 ln 0.75 - 0.25 ln 0.25, evaluated with mpmath at 30 digits
        let expected = 0.562_335_144_618_808_5;
        assert!((von_neumann_entropy(&diag(&[0.75, 0.25])) - expected).abs() < 1e-12);
    }

    fn sigma_x(mu: f64) -> HermitianOperator {
        HermitianOperator::new(CMatrix::from_row_slice(2, 2, &[ZERO, c(mu, 0.0), c(mu, 0.0), ZERO])).unwrap()
    }

    #[test]
    fn evolve_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let h = random::random_hermitian(&mut rng, 3);
        let psi = random::random_state(&mut rng, 3);
        let same = evolve(&h, 0.0, &psi).unwrap();
        assert!((same.amplitudes() - psi.amplitudes()).norm() < 1e-14);
        assert!(evolve(&h, -1.0, &psi).is_err());
        assert!(evolve(&h, 1.0, &plus()).is_err());

        let mu = 1.7;
        let k0 = StateVector::basis(2, 0).unwrap();
        let k1 = StateVector::basis(2, 1).unwrap();
        let out = evolve(&sigma_x(mu), FRAC_PI_2 / mu, &k0).unwrap();
        assert!(ray_distance(&out, &k1) < 1e-12);

        for theta in [0.1, 0.5, 1.0, 1.4] {
            let out = evolve(&sigma_x(mu), theta / mu, &k0).unwrap();
            let target = StateVector::from_reals(&[theta.cos(), theta.sin()]).unwrap();
            // exp(-i mu sigma_x t)|0> = cos|0> - i sin|1>: same amplitudes in modulus
            assert!((out.amplitudes()[0].norm() - theta.cos()).abs() < 1e-12);
            assert!((out.amplitudes()[1].norm() - theta.sin()).abs() < 1e-12);
            assert!((hilbert_angle(&out, &k0).unwrap() - hilbert_angle(&target, &k0).unwrap()).abs() < 1e-12);
        }
    }

    #[test]
    fn evolve_preserves_norm_trace_and_spectrum() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for d in 2..7 {
            for _ in 0..20 {
                let h = random::random_hermitian(&mut rng, d);
                let t = rng_time(&mut rng);
                let psi = random::random_state(&mut rng, d);
                let out = evolve(&h, t, &psi).unwrap();
                assert!((out.amplitudes().norm() - 1.0).abs() < 1e-10);
                let rho = random::random_density(&mut rng, d);
                let out = evolve(&h, t, &rho).unwrap();
                assert!((linalg::trace(out.matrix()).re - 1.0).abs() < 1e-10);
                for (x, y) in rho.eigenvalues().iter().zip(out.eigenvalues()) {
                    assert!((x - y).abs() < 1e-10);
                }
            }
        }
    }

    fn rng_time(rng: &mut ChaCha8Rng) -> f64 {
        use rand::Rng;
        rng.random_range(0.0..5.0)
    }

    #[test]
    fn spread_examples() {
        assert_eq!(spectral_spread(&HermitianOperator::zero(3)), 0.0);
        assert!((spectral_spread(&sigma_x(0.8)) - 1.6).abs() < 1e-14);
        let h = HermitianOperator::new(CMatrix::from_diagonal(&CVector::from_vec(vec![
            c(3.0, 0.0),
            c(-1.0, 0.0),
            ZERO,
        ])))
        .unwrap();
        assert!((spectral_spread(&h) - 4.0).abs() < 1e-14);
    }

    #[test]
    fn angle_examples() {
        let k0 = StateVector::basis(2, 0).unwrap();
        let k1 = StateVector::basis(2, 1).unwrap();
        assert_eq!(hilbert_angle(&k0, &k0).unwrap(), 0.0);
        assert!((hilbert_angle(&k0, &k1).unwrap() - FRAC_PI_2).abs() < 1e-15);
        assert!((hilbert_angle(&k0, &plus()).unwrap() - FRAC_PI_4).abs() < 1e-12);
        assert!(hilbert_angle(&k0, &StateVector::basis(3, 0).unwrap()).is_err());
    }

    #[test]
    fn polar_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let u0 = random::haar_unitary(&mut rng, 3);
        let (u, p) = polar_decompose(u0.matrix()).unwrap();
        assert!(linalg::max_abs_diff(u.matrix(), u0.matrix()) < 1e-10);
        assert!(linalg::max_abs_diff(&p, &linalg::identity(3)) < 1e-10);

        let rho = random::random_density(&mut rng, 3);
        let (u, p) = polar_decompose(rho.matrix()).unwrap();
        assert!(linalg::max_abs_diff(u.matrix(), &linalg::identity(3)) < 1e-10);
        assert!(linalg::max_abs_diff(&p, rho.matrix()) < 1e-10);

        // |1><0|
        let a = CMatrix::from_row_slice(2, 2, &[ZERO, ZERO, ONE, ZERO]);
        let (u, p) = polar_decompose(&a).unwrap();
        assert!(linalg::max_abs_diff(&(u.matrix() * &p), &a) < 1e-12);
        assert!(linalg::max_abs_diff(&p, &StateVector::basis(2, 0).unwrap().projector()) < 1e-12);
        let image = u.apply(&StateVector::basis(2, 0).unwrap());
        assert!(ray_distance(&image, &StateVector::basis(2, 1).unwrap()) < 1e-12);
    }

    #[test]
    fn polar_reconstructs_random_and_singular() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for d in 2..6 {
            for rank in 0..=d {
                let a = random::ginibre(&mut rng, d, rank) * random::ginibre(&mut rng, rank, d);
                let (u, p) = polar_decompose(&a).unwrap();
                assert!(linalg::max_abs_diff(&(u.matrix() * &p), &a) < 1e-10);
                assert!(linalg::eigvalsh(&p)[0] > -1e-10);
            }
        }
    }

    #[test]
    fn decohere_examples() {
        let z = MeasurementOperatorSet::computational(2);
        let d = diag(&[0.3, 0.7]);
        assert_eq!(decohere(&d, &z).unwrap(), d);
        let out = decohere(&plus().to_density(), &z).unwrap();
        assert!(linalg::max_abs_diff(out.matrix(), DensityMatrix::maximally_mixed(2).matrix()) < 1e-15);

        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let rho = random::random_density(&mut rng, 3);
        let (values, vectors) = linalg::eigh(rho.matrix());
        let basis: Vec<StateVector> = (0..3)
            .map(|k| StateVector::normalized(vectors.column(k).into_owned()).unwrap())
            .collect();
        let out = decohere(&rho, &MeasurementOperatorSet::projective(&basis).unwrap()).unwrap();
        let rotated = vectors.adjoint() * out.matrix() * &vectors;
        for i in 0..3 {
            assert!((rotated[(i, i)].re - values[i]).abs() < 1e-12);
        }

        let r = linalg::identity(2).unscale(2f64.sqrt());
        let not_proj = MeasurementOperatorSet::new(vec![r.clone(), r]).unwrap();
        assert!(decohere(&d, &not_proj).is_err());
    }

    #[test]
    fn decohere_never_lowers_entropy() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for d in 2..=6 {
            for _ in 0..100 {
                let rho = random::random_density(&mut rng, d);
                let u = random::haar_unitary(&mut rng, d);
                let basis: Vec<StateVector> = (0..d)
                    .map(|k| StateVector::normalized(u.matrix().column(k).into_owned()).unwrap())
                    .collect();
                let out = decohere(&rho, &MeasurementOperatorSet::projective(&basis).unwrap()).unwrap();
                assert!(von_neumann_entropy(&out) >= von_neumann_entropy(&rho) - 1e-12);
            }
        }
    }

    #[test]
    fn measurement_examples() {
        let rho = DensityMatrix::maximally_mixed(2);
        let trivial = MeasurementOperatorSet::new(vec![linalg::identity(2)]).unwrap();
        let out = apply_measurement(&rho, &trivial).unwrap();
        assert_eq!(out.len(), 1);
        assert!((out[0].probability - 1.0).abs() < 1e-15);
        assert_eq!(out[0].post_state.as_ref().unwrap(), &rho);

        let out = apply_measurement(&rho, &MeasurementOperatorSet::computational(2)).unwrap();
        for (k, o) in out.iter().enumerate() {
            assert!((o.probability - 0.5).abs() < 1e-15);
            let expected = StateVector::basis(2, k).unwrap().to_density();
            assert_eq!(o.post_state.as_ref().unwrap(), &expected);
        }

        // rank-one bare set sqrt(2/4)|chi_k><chi_k| over four states with sum = I (N = 2)
        let chis: Vec<StateVector> = [[1.0, 0.0], [0.0, 1.0], [1.0, 1.0], [1.0, -1.0]]
            .iter()
            .map(|v| StateVector::from_reals(v).unwrap())
            .collect();
        let ops = chis.iter().map(|x| x.projector().scale(FRAC_1_SQRT_2)).collect();
        let set = MeasurementOperatorSet::new(ops).unwrap();
        let out = apply_measurement(&rho, &set).unwrap();
        for (o, chi) in out.iter().zip(&chis) {
            assert!((o.probability - 0.25).abs() < 1e-14);
            assert!(linalg::max_abs_diff(o.post_state.as_ref().unwrap().matrix(), &chi.projector()) < 1e-14);
        }

        let pure = StateVector::basis(2, 0).unwrap().to_density();
        let out = apply_measurement(&pure, &MeasurementOperatorSet::computational(2)).unwrap();
        assert!(out[1].post_state.is_none());
    }

    #[test]
    fn measurement_probabilities_sum_to_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for trial in 0..100 {
            let d = 2 + trial % 4;
            let m = random::random_measurement(&mut rng, d, 1 + trial % 3);
            let rho = random::random_density(&mut rng, d);
            let total: f64 = apply_measurement(&rho, &m).unwrap().iter().map(|o| o.probability).sum();
            assert!((total - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn bare_measurement_examples() {
        assert!(is_bare_measurement(&MeasurementOperatorSet::computational(3)));
        let flip = CMatrix::from_row_slice(2, 2, &[ZERO, ZERO, ONE, ZERO]);
        let rest = CMatrix::from_row_slice(2, 2, &[ZERO, ZERO, ZERO, ONE]);
        assert!(!is_bare_measurement(&MeasurementOperatorSet::new(vec![flip, rest]).unwrap()));

        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let bare = random::random_bare_measurement(&mut rng, 3, 3);
        assert!(is_bare_measurement(&bare));
        let twisted: Vec<CMatrix> = bare
            .operators()
            .iter()
            .map(|p| {
                let u = random::haar_unitary(&mut rng, 3);
                let a = u.matrix() * p;
                let (u2, p2) = polar_decompose(&a).unwrap();
                assert!(linalg::max_abs_diff(&(u2.matrix() * p2), &a) < 1e-10);
                a
            })
            .collect();
        assert!(!is_bare_measurement(&MeasurementOperatorSet::new(twisted).unwrap()));
    }
}
