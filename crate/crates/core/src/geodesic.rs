//! Geodesic rotations under a bound on the Hamiltonian's spectral spread, and
//! minimal-time synthesis of full unitaries.
//!
//! A Hamiltonian whose eigenvalues span at most `2 mu` rotates any state
//! through Hilbert-space angle at most `mu` per unit time (hbar = 1). The
//! bound is attained on the great circle through the two endpoint rays.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::qcore::linalg::{self, CMatrix, CVector};
use crate::qcore::{hilbert_angle, HermitianOperator, StateVector, UnitaryOperator};

/// Slack allowed on `spread <= 2 mu`.
pub const SPREAD_SLACK: f64 = 1e-9;
const PARALLEL_TOL: f64 = 1e-12;
const GAP_TIE_TOL: f64 = 1e-9;

/// Maximal rotation speed mu > 0 (radians per unit time).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpeedBound(f64);

impl SpeedBound {
    pub fn new(mu: f64) -> Result<Self> {
        if !(mu > 0.0 && mu.is_finite()) {
            return invalid(format!("speed bound mu = {mu} must be positive"));
        }
        Ok(Self(mu))
    }

    pub fn mu(self) -> f64 {
        self.0
    }

    /// Largest admissible spectral spread, 2 mu.
    pub fn max_spread(self) -> f64 {
        2.0 * self.0
    }

    pub fn admits(self, h: &HermitianOperator) -> bool {
        h.spectral_spread() <= self.max_spread() * (1.0 + SPREAD_SLACK)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SynthesisResult {
    pub hamiltonian: HermitianOperator,
    pub duration: f64,
    pub achieved_spread: f64,
}

impl SynthesisResult {
    fn idle(dim: usize) -> Self {
        Self {
            hamiltonian: HermitianOperator::zero(dim),
            duration: 0.0,
            achieved_spread: 0.0,
        }
    }

    pub fn propagator(&self) -> UnitaryOperator {
        self.hamiltonian.propagator(self.duration)
    }
}

/// Orthonormal frame of the plane through psi0 and psi1.
///
/// `a = psi0`; `b` is the unit component of psi1 orthogonal to `a`, phased so
/// that the representative of psi1 with real non-negative overlap reads
/// `cos(theta) a + sin(theta) b`. `generator` is `i b`, the partner that makes
/// `mu(|a><generator| + |generator><a|)` drive exactly that path.
struct GeodesicPlane {
    a: CVector,
    b: CVector,
    generator: CVector,
    theta: f64,
}

fn plane(psi0: &StateVector, psi1: &StateVector) -> Result<Option<GeodesicPlane>> {
    let theta = hilbert_angle(psi0, psi1)?;
    let a = psi0.amplitudes().clone();
    let overlap = psi0.inner(psi1);
    let residual = psi1.amplitudes() - &a * overlap;
    let rn = residual.norm();
    if rn <= PARALLEL_TOL {
        return Ok(None);
    }
    let i = Complex64::i();
    let (b, generator) = if overlap.norm() > PARALLEL_TOL {
        let phase = (overlap / overlap.norm()).conj();
        let b = residual.map(|z| z * phase).unscale(rn);
        let g = b.map(|z| z * i);
        (b, g)
    } else {
        // orthogonal endpoints: pick psi1's free phase so the generator is psi1 itself
        let g = residual.unscale(rn);
        let b = g.map(|z| -z * i);
        (b, g)
    };
    Ok(Some(GeodesicPlane { a, b, generator, theta }))
}

/// Hamiltonian `mu(|a><b~| + |b~><a|)` carrying psi0 to the ray of psi1 along
/// the geodesic, with duration `angle / mu`.
pub fn geodesic_hamiltonian(psi0: &StateVector, psi1: &StateVector, bound: SpeedBound) -> Result<SynthesisResult> {
    let Some(p) = plane(psi0, psi1)? else {
        return Ok(SynthesisResult::idle(psi0.dim()));
    };
    let mu = linalg::c(bound.mu(), 0.0);
    let h = (linalg::outer(&p.a, &p.generator) + linalg::outer(&p.generator, &p.a)) * mu;
    let hamiltonian = HermitianOperator::from_computed(h)?;
    let achieved_spread = hamiltonian.spectral_spread();
    Ok(SynthesisResult {
        hamiltonian,
        duration: p.theta / bound.mu(),
        achieved_spread,
    })
}

/// `cos(mu t)|a> + sin(mu t)|b>` for `0 <= t <= angle/mu`.
pub fn geodesic_path(psi0: &StateVector, psi1: &StateVector, t: f64, bound: SpeedBound) -> Result<StateVector> {
    let plane = plane(psi0, psi1)?;
    let end = plane.as_ref().map_or(0.0, |p| p.theta / bound.mu());
    if !(t >= 0.0 && t <= end * (1.0 + 1e-12) + 1e-15) {
        return invalid(format!("time {t} outside [0, {end}]"));
    }
    let Some(p) = plane else {
        return Ok(psi0.clone());
    };
    let angle = bound.mu() * t;
    StateVector::normalized(p.a.scale(angle.cos()) + p.b.scale(angle.sin()))
}

/// angle(psi0, psi1) / mu.
pub fn min_transform_time(psi0: &StateVector, psi1: &StateVector, bound: SpeedBound) -> Result<f64> {
    Ok(hilbert_angle(psi0, psi1)? / bound.mu())
}

/// arccos(1/sqrt(N)): smallest achievable largest angle from one state to N
/// orthogonal states.
pub fn lemma1_bound(n: usize) -> Result<f64> {
    if n < 2 {
        return invalid(format!("N = {n} must be at least 2"));
    }
    Ok((1.0 / (n as f64).sqrt()).acos())
}

/// N orthonormal states each with overlap exactly 1/sqrt(N) with `psi`.
///
/// `psi` is completed to a unitary `W`; the k-th output is
/// `sum_j W[:, j] F[j, k]` over the first N columns, F the N-point Fourier matrix.
pub fn unbiased_orthogonal_set(psi: &StateVector, n: usize) -> Result<Vec<StateVector>> {
    if n < 1 || psi.dim() < n {
        return invalid(format!("cannot fit {n} orthogonal states in dim {}", psi.dim()));
    }
    let w = linalg::complete_orthonormal_basis(std::slice::from_ref(psi.amplitudes()), psi.dim());
    let frame = w.columns(0, n) * linalg::fourier_matrix(n);
    frame
        .column_iter()
        .map(|col| StateVector::normalized(col.into_owned()))
        .collect()
}

/// Eigenphases in (-pi, pi] with the matching eigenvectors as columns.
pub fn eigenphases(v: &UnitaryOperator) -> (Vec<f64>, CMatrix) {
    let (values, vectors) = linalg::unitary_eigen(v.matrix());
    (values.iter().map(|z| z.arg()).collect(), vectors)
}

/// Eigenphases lifted off the circle so they occupy the shortest arc, and that
/// arc's length. The cut goes in the largest gap between neighbours; ties go to
/// the smallest cut index after sorting ascending.
pub fn unwrap_phases(phases: &[f64]) -> (Vec<f64>, f64) {
    let n = phases.len();
    if n == 0 {
        return (vec![], 0.0);
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| phases[i].total_cmp(&phases[j]));
    let sorted: Vec<f64> = order.iter().map(|&i| phases[i]).collect();
    let gaps: Vec<f64> = (0..n)
        .map(|j| {
            if j + 1 < n {
                sorted[j + 1] - sorted[j]
            } else {
                sorted[0] + 2.0 * PI - sorted[n - 1]
            }
        })
        .collect();
    let widest = gaps.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let cut = gaps.iter().position(|&g| g >= widest - GAP_TIE_TOL).expect("non-empty");
    let mut lifted = vec![0.0; n];
    for (rank, &idx) in order.iter().enumerate() {
        lifted[idx] = if rank <= cut && cut + 1 < n {
            phases[idx] + 2.0 * PI
        } else {
            phases[idx]
        };
    }
    let spread = (2.0 * PI - widest).max(0.0);
    (lifted, spread)
}

/// Fastest constant Hamiltonian with spread <= 2 mu generating `v` up to a
/// global phase: duration = (eigenphase arc length) / (2 mu).
pub fn min_unitary_time(v: &UnitaryOperator, bound: SpeedBound) -> SynthesisResult {
    let (phases, vectors) = eigenphases(v);
    let (lifted, spread) = unwrap_phases(&phases);
    if spread <= 1e-14 {
        return SynthesisResult::idle(v.dim());
    }
    let duration = spread / bound.max_spread();
    let lo = lifted.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = lifted.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let centre = 0.5 * (lo + hi);
    // exp(-i E t) = exp(i (phi - centre))  =>  E = -(phi - centre)/t
    let energies = lifted.iter().map(|&p| linalg::c(-(p - centre) / duration, 0.0));
    let hamiltonian = HermitianOperator::from_computed(linalg::from_eigen(&vectors, energies))
        .expect("eigenbasis reconstruction is Hermitian");
    let achieved_spread = hamiltonian.spectral_spread();
    SynthesisResult {
        hamiltonian,
        duration,
        achieved_spread,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcore::linalg::{c, ONE, ZERO};
    use crate::qcore::{evolve, ray_distance};
    use crate::random;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, FRAC_PI_3, FRAC_PI_4};

    fn mu(m: f64) -> SpeedBound {
        SpeedBound::new(m).unwrap()
    }

    fn basis(d: usize, i: usize) -> StateVector {
        StateVector::basis(d, i).unwrap()
    }

    #[test]
    fn speed_bound_must_be_positive() {
        assert!(SpeedBound::new(0.0).is_err());
        assert!(SpeedBound::new(-1.0).is_err());
        assert!(SpeedBound::new(f64::NAN).is_err());
    }

    #[test]
    fn geodesic_hamiltonian_examples() {
        let r = geodesic_hamiltonian(&basis(2, 0), &basis(2, 1), mu(1.0)).unwrap();
        let sigma_x = CMatrix::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO]);
        assert!(linalg::max_abs_diff(r.hamiltonian.matrix(), &sigma_x) < 1e-15);
        assert!((r.duration - FRAC_PI_2).abs() < 1e-15);

        let psi = StateVector::from_reals(&[0.6, 0.8]).unwrap();
        let r = geodesic_hamiltonian(&psi, &psi, mu(1.0)).unwrap();
        assert_eq!(r.duration, 0.0);
        assert_eq!(r.hamiltonian, HermitianOperator::zero(2));

        let plus = StateVector::from_reals(&[1.0, 1.0]).unwrap();
        let r = geodesic_hamiltonian(&basis(2, 0), &plus, mu(1.0)).unwrap();
        assert!((r.duration - FRAC_PI_4).abs() < 1e-15);
        let end = evolve(&r.hamiltonian, r.duration, &basis(2, 0)).unwrap();
        assert!(ray_distance(&end, &plus) < 1e-14);
    }

    #[test]
    fn random_pairs_reach_target_at_reported_time() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for d in 2..=6 {
            for _ in 0..100 {
                let psi0 = random::random_state(&mut rng, d);
                let psi1 = random::random_state(&mut rng, d);
                let m = mu(rng.random_range(0.2..3.0));
                let r = geodesic_hamiltonian(&psi0, &psi1, m).unwrap();
                let end = evolve(&r.hamiltonian, r.duration, &psi0).unwrap();
                assert!(hilbert_angle(&end, &psi1).unwrap() < 1e-9);
                let expected = hilbert_angle(&psi0, &psi1).unwrap() / m.mu();
                assert!((r.duration - expected).abs() < 1e-12);
                assert!(m.admits(&r.hamiltonian));
                assert!((r.achieved_spread - m.max_spread()).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn path_examples_and_agreement_with_evolution() {
        let m = mu(1.3);
        let (k0, k1) = (basis(2, 0), basis(2, 1));
        assert_eq!(geodesic_path(&k0, &k1, 0.0, m).unwrap(), k0);
        let mid = geodesic_path(&k0, &k1, FRAC_PI_4 / m.mu(), m).unwrap();
        for a in mid.amplitudes().iter() {
            assert!((a.norm() - FRAC_1_SQRT_2).abs() < 1e-15);
        }
        assert!(geodesic_path(&k0, &k1, -0.1, m).is_err());
        assert!(geodesic_path(&k0, &k1, 2.0, m).is_err());

        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let psi0 = random::random_state(&mut rng, 4);
        let psi1 = random::random_state(&mut rng, 4);
        let r = geodesic_hamiltonian(&psi0, &psi1, m).unwrap();
        for _ in 0..20 {
            let t = rng.random_range(0.0..=r.duration);
            let on_path = geodesic_path(&psi0, &psi1, t, m).unwrap();
            let evolved = evolve(&r.hamiltonian, t, &psi0).unwrap();
            assert!((on_path.amplitudes() - evolved.amplitudes()).norm() < 1e-9);
        }
        let end = geodesic_path(&psi0, &psi1, r.duration, m).unwrap();
        assert!(hilbert_angle(&end, &psi1).unwrap() < 1e-9);
    }

    #[test]
    fn path_follows_real_cos_sin_form_in_its_frame() {
        let m = mu(0.7);
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let psi0 = random::random_state(&mut rng, 3);
        let psi1 = random::random_state(&mut rng, 3);
        let end = min_transform_time(&psi0, &psi1, m).unwrap();
        for i in 0..=10 {
            let t = end * i as f64 / 10.0;
            let p = geodesic_path(&psi0, &psi1, t, m).unwrap();
            let ov = psi0.inner(&p);
            assert!((ov - c((m.mu() * t).cos(), 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn min_transform_time_examples() {
        let m = mu(1.0);
        assert!((min_transform_time(&basis(3, 0), &basis(3, 2), m).unwrap() - FRAC_PI_2).abs() < 1e-15);
        assert_eq!(min_transform_time(&basis(3, 1), &basis(3, 1), m).unwrap(), 0.0);
        let half = StateVector::from_reals(&[0.5, 0.75f64.sqrt()]).unwrap();
        let t = min_transform_time(&basis(2, 0), &half, mu(2.0)).unwrap();
        assert!((t - FRAC_PI_3 / 2.0).abs() < 1e-12);
    }

    #[test]
    fn lemma1_bound_examples() {
        assert!((lemma1_bound(2).unwrap() - FRAC_PI_4).abs() < 1e-15);
        assert!((lemma1_bound(4).unwrap() - FRAC_PI_3).abs() < 1e-15);
        // mpmath, 30 digits
        assert!((lemma1_bound(3).unwrap() - 0.955_316_618_124_509_3).abs() < 1e-15);
        assert!(lemma1_bound(1).is_err());
    }

    #[test]
    fn unbiased_set_examples() {
        let plus = StateVector::from_reals(&[1.0, 1.0]).unwrap();
        let set = unbiased_orthogonal_set(&plus, 2).unwrap();
        for k in 0..2 {
            assert!(set.iter().any(|x| ray_distance(x, &basis(2, k)) < 1e-14));
        }

        let mut rng = ChaCha8Rng::seed_from_u64(14);
        for d in 2..=6 {
            for n in 1..=d {
                let psi = random::random_state(&mut rng, d);
                let set = unbiased_orthogonal_set(&psi, n).unwrap();
                assert_eq!(set.len(), n);
                for (i, x) in set.iter().enumerate() {
                    assert!((psi.inner(x).norm() - 1.0 / (n as f64).sqrt()).abs() < 1e-10);
                    for y in &set[i + 1..] {
                        assert!(x.inner(y).norm() < 1e-10);
                    }
                }
                if n >= 2 {
                    let worst = set.iter().map(|k| hilbert_angle(&psi, k).unwrap()).fold(0.0, f64::max);
                    assert!((worst - lemma1_bound(n).unwrap()).abs() < 1e-10);
                }
            }
        }
        assert!(unbiased_orthogonal_set(&plus, 3).is_err());
    }

    #[test]
    fn no_hamiltonian_outruns_the_bound() {
        let mut rng = ChaCha8Rng::seed_from_u64(15);
        let m = mu(1.0);
        for _ in 0..100 {
            let d = rng.random_range(2..=6);
            let spread = rng.random_range(0.1..=m.max_spread());
            let h = random::random_hamiltonian_with_spread(&mut rng, d, spread);
            let psi = random::random_state(&mut rng, d);
            let dt = rng.random_range(0.0..0.5);
            let moved = hilbert_angle(&psi, &evolve(&h, dt, &psi).unwrap()).unwrap();
            assert!(moved <= m.mu() * dt * spread / m.max_spread() + 1e-9);
        }
    }

    #[test]
    fn phase_unwrapping_picks_the_largest_gap() {
        let (lifted, spread) = unwrap_phases(&[3.0, -3.0, 0.1]);
        // gaps on the circle: -3 -> 0.1 (3.1), 0.1 -> 3 (2.9), 3 -> -3 (0.283)
        assert!((spread - (2.0 * PI - 3.1)).abs() < 1e-12);
        assert!((lifted[1] - (-3.0 + 2.0 * PI)).abs() < 1e-12);
        assert_eq!(lifted[0], 3.0);
        let (_, s) = unwrap_phases(&[0.5, 0.5]);
        assert_eq!(s, 0.0);
    }

    #[test]
    fn min_unitary_time_examples() {
        let m = mu(1.0);
        let r = min_unitary_time(&UnitaryOperator::identity(4), m);
        assert_eq!(r.duration, 0.0);

        let swap = UnitaryOperator::new(linalg::swap_matrix(2, 2)).unwrap();
        let r = min_unitary_time(&swap, m);
        assert!((r.duration - FRAC_PI_2).abs() < 1e-12);
        assert!(linalg::max_abs_diff_up_to_phase(r.propagator().matrix(), swap.matrix()) < 1e-9);
        assert!(m.admits(&r.hamiltonian));

        let mut rng = ChaCha8Rng::seed_from_u64(16);
        for _ in 0..50 {
            let d = rng.random_range(2..=6);
            let h0 = random::random_hamiltonian_with_spread(&mut rng, d, m.max_spread());
            let t0 = rng.random_range(0.01..FRAC_PI_2 / m.mu());
            let v = h0.propagator(t0);
            let r = min_unitary_time(&v, m);
            assert!(r.duration <= t0 + 1e-9);
            assert!(m.admits(&r.hamiltonian));
            assert!(linalg::max_abs_diff_up_to_phase(r.propagator().matrix(), v.matrix()) < 1e-9);
        }
    }

    #[test]
    fn min_unitary_time_is_global_phase_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let m = mu(1.5);
        for _ in 0..30 {
            let d = rng.random_range(2..=6);
            let v = random::haar_unitary(&mut rng, d);
            let alpha = rng.random_range(-PI..PI);
            let shifted = UnitaryOperator::new(v.matrix().map(|z| z * Complex64::from_polar(1.0, alpha))).unwrap();
            let a = min_unitary_time(&v, m);
            let b = min_unitary_time(&shifted, m);
            assert!((a.duration - b.duration).abs() < 1e-10);
            assert!(linalg::max_abs_diff(a.hamiltonian.matrix(), b.hamiltonian.matrix()) < 1e-10);
            assert!(linalg::max_abs_diff_up_to_phase(a.propagator().matrix(), v.matrix()) < 1e-9);
        }
    }
}
