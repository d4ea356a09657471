//! The invariant suite behind `purify verify`.

use std::f64::consts::{FRAC_PI_2, PI};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::geodesic::{
    geodesic_hamiltonian, geodesic_path, lemma1_bound, min_unitary_time, unbiased_orthogonal_set, SpeedBound,
};
use crate::optimality::{
    ando_entropy_check, brute_force_lemma1, brute_force_transfer_angle, cauchy_schwarz_bound, extended_lemma_check,
    random_mixed_decomposition, SearchConfig,
};
use crate::protocols::{
    build_mf_protocol, build_optimal_protocol_with, build_swap_protocol, mf_induced_measurement, simulate, speedup,
    speedup_asymptote, tau_mf, tau_opt, tau_swap, OptimalSearch, Protocol,
};
use crate::qcore::linalg;
use crate::qcore::{
    decohere, evolve, hilbert_angle, is_bare_measurement, polar_decompose, von_neumann_entropy, MeasurementOperatorSet, StateVector, UnitaryOperator,
};
use crate::random;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub bound: f64,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VerifyReport {
    pub checks: Vec<Check>,
    pub passed: usize,
    pub failed: usize,
}

#[derive(Default)]
struct Suite {
    checks: Vec<Check>,
}

impl Suite {
    fn at_most(&mut self, name: &str, value: f64, bound: f64) {
        self.push(name, value, bound, value <= bound);
    }

    fn push(&mut self, name: &str, value: f64, bound: f64, passed: bool) {
        self.checks.push(Check {
            name: name.to_string(),
            value,
            bound,
            passed,
        });
    }
}

fn mu1() -> SpeedBound {
    SpeedBound::new(1.0).expect("positive")
}

fn ground(n: usize) -> StateVector {
    StateVector::basis(n, 0).expect("n >= 2")
}

/// Runs every check; never panics on a failing check, only records it.
pub fn verify_suite(seed: u64, trials: usize) -> VerifyReport {
    let mut s = Suite::default();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    qcore_checks(&mut s, &mut rng);
    geodesic_checks(&mut s, &mut rng);
    protocol_checks(&mut s, &mut rng, seed);
    optimality_checks(&mut s, &mut rng, seed, trials);
    let failed = s.checks.iter().filter(|c| !c.passed).count();
    VerifyReport {
        passed: s.checks.len() - failed,
        failed,
        checks: s.checks,
    }
}

fn qcore_checks(s: &mut Suite, rng: &mut ChaCha8Rng) {
    let mut entropy_drop = f64::NEG_INFINITY;
    let mut polar_err: f64 = 0.0;
    for d in 2..=5 {
        for _ in 0..20 {
            let rho = random::random_density(rng, d);
            let u = random::haar_unitary(rng, d);
            let proj = MeasurementOperatorSet::projective(
                &(0..d)
                    .map(|k| StateVector::from_vector(u.matrix().column(k).into_owned()).expect("unit column"))
                    .collect::<Vec<_>>(),
            )
            .expect("orthonormal basis");
            let after = decohere(&rho, &proj).expect("valid projectors");
            entropy_drop = entropy_drop.max(von_neumann_entropy(&rho) - von_neumann_entropy(&after));
            let a = random::ginibre(rng, d, d);
            let (w, p) = polar_decompose(&a).expect("square");
            polar_err = polar_err.max(linalg::max_abs_diff(&(w.matrix() * p), &a));
        }
    }
    s.at_most("qcore.decoherence_never_lowers_entropy", entropy_drop, 1e-12);
    s.at_most("qcore.polar_reconstruction", polar_err, 1e-10);
}

fn geodesic_checks(s: &mut Suite, rng: &mut ChaCha8Rng) {
    let mut reach: f64 = 0.0;
    let mut path: f64 = 0.0;
    let mut duration: f64 = 0.0;
    let mut spread: f64 = 0.0;
    let mut unbiased: f64 = 0.0;
    for d in 2..=6 {
        for _ in 0..20 {
            let bound = SpeedBound::new(rng.random_range(0.5..3.0)).expect("positive");
            let (a, b) = (random::random_state(rng, d), random::random_state(rng, d));
            let g = geodesic_hamiltonian(&a, &b, bound).expect("same dim");
            spread = spread.max(g.achieved_spread / bound.max_spread() - 1.0);
            duration = duration.max((g.duration - hilbert_angle(&a, &b).expect("same dim") / bound.mu()).abs());
            let end = evolve(&g.hamiltonian, g.duration, &a).expect("same dim");
            reach = reach.max(hilbert_angle(&end, &b).expect("same dim"));
            let t = rng.random_range(0.0..=g.duration);
            let on_path = geodesic_path(&a, &b, t, bound).expect("in range");
            let evolved = evolve(&g.hamiltonian, t, &a).expect("same dim");
            path = path.max((on_path.amplitudes() - evolved.amplitudes()).norm());
        }
        for n in 2..=d {
            let psi = random::random_state(rng, d);
            for k in unbiased_orthogonal_set(&psi, n).expect("n <= d") {
                unbiased = unbiased.max((psi.inner(&k).norm() - 1.0 / (n as f64).sqrt()).abs());
            }
        }
    }
    s.at_most("geodesic.reaches_target_ray", reach, 1e-9);
    s.at_most("geodesic.duration_is_angle_over_mu", duration, 1e-12);
    s.at_most("geodesic.path_matches_evolution", path, 1e-9);
    s.at_most("geodesic.relative_spread_excess", spread, 1e-9);
    s.at_most("geodesic.unbiased_overlaps", unbiased, 1e-10);

    let id = min_unitary_time(&UnitaryOperator::identity(4), mu1());
    s.at_most("min_unitary_time.identity", id.duration, 1e-12);
    let swap = UnitaryOperator::new(linalg::swap_matrix(2, 2)).expect("permutation");
    let sw = min_unitary_time(&swap, mu1());
    s.at_most("min_unitary_time.swap", (sw.duration - FRAC_PI_2).abs(), 1e-9);
    let mut excess = f64::NEG_INFINITY;
    for d in 2..=5 {
        let h = random::random_hamiltonian_with_spread(rng, d, 2.0);
        let t0 = rng.random_range(0.0..FRAC_PI_2);
        let r = min_unitary_time(&h.propagator(t0), mu1());
        excess = excess.max(r.duration - t0);
    }
    s.at_most("min_unitary_time.round_trip_not_slower", excess, 1e-9);
}

fn final_entropy_and_infidelity(p: &Protocol, rng: &mut ChaCha8Rng, states: usize) -> (f64, f64) {
    let mut worst = (0.0f64, 0.0f64);
    for _ in 0..states {
        let rho = random::random_density(rng, p.system_dim);
        let traj = simulate(p, &rho, 2).expect("valid protocol");
        let end = traj.last();
        worst.0 = worst.0.max(end.system_entropy);
        worst.1 = worst.1.max(1.0 - end.target_fidelity);
    }
    worst
}

fn protocol_checks(s: &mut Suite, rng: &mut ChaCha8Rng, seed: u64) {
    s.at_most("protocols.speedup_qubit", (speedup(2).expect("N = 2") - 1.5).abs(), 1e-12);
    let min_step = (2..=1000)
        .map(|n| speedup(n + 1).expect("n >= 2") - speedup(n).expect("n >= 2"))
        .fold(f64::INFINITY, f64::min);
    s.push("protocols.speedup_increasing", min_step, 0.0, min_step > 0.0);
    let envelope = (100..=5000)
        .map(|n| (speedup(n).expect("n >= 2") - speedup_asymptote(n)).abs() * n as f64)
        .fold(0.0, f64::max);
    s.at_most("protocols.asymptote_error_times_n", envelope, 0.5);

    let m = mu1();
    let mut order_ok = true;
    for n in 2..=10_000 {
        let (mf, sw, opt) = (tau_mf(n, m).expect("n"), tau_swap(m), tau_opt(n, m).expect("n"));
        order_ok &= if n >= 3 { opt < sw && sw < mf } else { opt < mf && mf <= sw + 1e-15 };
    }
    s.push("protocols.time_ordering", f64::from(u8::from(order_ok)), 1.0, order_ok);

    let mf2 = build_mf_protocol(2, m, ground(2)).expect("N = 2");
    s.at_most("protocols.tau_mf_2", (mf2.declared_duration - FRAC_PI_2).abs(), 1e-9);
    let mf4 = build_mf_protocol(4, m, ground(4)).expect("N = 4");
    s.at_most("protocols.tau_mf_4", (mf4.declared_duration - 2.0 * PI / 3.0).abs(), 1e-9);
    let swap_dev = (2..=4)
        .map(|n| (build_swap_protocol(n, m, ground(n)).expect("n").declared_duration - FRAC_PI_2).abs())
        .fold(0.0, f64::max);
    s.at_most("protocols.tau_swap", swap_dev, 1e-9);

    let search = OptimalSearch {
        seed,
        ..OptimalSearch::default()
    };
    let mut spread_excess = f64::NEG_INFINITY;
    for n in 2..=4 {
        let target = random::random_state(rng, n);
        let mf = build_mf_protocol(n, m, target.clone()).expect("n");
        let sw = build_swap_protocol(n, m, target.clone()).expect("n");
        for p in [&mf, &sw] {
            for h in p.hamiltonians() {
                spread_excess = spread_excess.max(h.spectral_spread() / m.max_spread() - 1.0);
            }
        }
        let (e, f) = final_entropy_and_infidelity(&mf, rng, 10);
        s.at_most(&format!("protocols.mf_purifies_n{n}.entropy"), e, 1e-8);
        s.at_most(&format!("protocols.mf_purifies_n{n}.infidelity"), f, 1e-8);
        let (e, f) = final_entropy_and_infidelity(&sw, rng, 10);
        s.at_most(&format!("protocols.swap_purifies_n{n}.entropy"), e, 1e-8);
        s.at_most(&format!("protocols.swap_purifies_n{n}.infidelity"), f, 1e-8);

        let bare = mf_induced_measurement(&mf).map(|a| is_bare_measurement(&a)).unwrap_or(false);
        s.push(&format!("protocols.mf_measurement_is_bare_n{n}"), f64::from(u8::from(bare)), 1.0, bare);

        let goal = tau_opt(n, m).expect("n");
        match build_optimal_protocol_with(n, m, target, &search) {
            Ok(p) => {
                s.at_most(&format!("protocols.optimal_duration_n{n}"), p.declared_duration, goal + 1e-6);
                let (e, f) = final_entropy_and_infidelity(&p, rng, 10);
                s.at_most(&format!("protocols.optimal_purifies_n{n}.entropy"), e, 1e-8);
                s.at_most(&format!("protocols.optimal_purifies_n{n}.infidelity"), f, 1e-8);
            }
            Err(crate::Error::SynthesisFailure { achieved, .. }) => {
                s.at_most(&format!("protocols.optimal_duration_n{n}"), achieved, goal + 1e-6);
            }
            Err(_) => s.push(&format!("protocols.optimal_duration_n{n}"), f64::NAN, goal + 1e-6, false),
        }
    }
    s.at_most("protocols.relative_spread_excess", spread_excess, 1e-9);

    let mut drift: f64 = 0.0;
    for n in 2..=3 {
        let p = build_mf_protocol(n, m, random::random_state(rng, n)).expect("n");
        let q = p.with_instant_feedback().expect("mf has feedback");
        let rho = random::random_density(rng, n);
        let a = simulate(&p, &rho, 2).expect("valid");
        let b = simulate(&q, &rho, 2).expect("valid");
        drift = drift.max(linalg::max_abs_diff(a.last().joint_state.matrix(), b.last().joint_state.matrix()));
    }
    s.at_most("protocols.instant_feedback_equivalence", drift, 1e-10);
}

fn optimality_checks(s: &mut Suite, rng: &mut ChaCha8Rng, seed: u64, trials: usize) {
    let cfg = SearchConfig {
        trials,
        seed,
        ..SearchConfig::default()
    };
    for n in 2..=4 {
        let bound = lemma1_bound(n).expect("n");
        match brute_force_lemma1(&ground(n), n, &cfg) {
            Ok(r) => {
                let gap = r.best_value - bound;
                s.push(&format!("optimality.lemma1_gap_n{n}"), gap, 1e-3, (-1e-6..=1e-3).contains(&gap));
            }
            Err(_) => s.push(&format!("optimality.lemma1_gap_n{n}"), f64::NAN, 1e-3, false),
        }
    }
    for n in 2..=3 {
        let bound = (1.0 / n as f64).acos();
        match brute_force_transfer_angle(n, &cfg) {
            Ok(r) => {
                let gap = r.best_value - bound;
                s.push(&format!("optimality.transfer_gap_n{n}"), gap, 1e-3, (-1e-6..=1e-3).contains(&gap));
            }
            Err(_) => s.push(&format!("optimality.transfer_gap_n{n}"), f64::NAN, 1e-3, false),
        }
    }

    let mut ando = f64::INFINITY;
    for i in 0..100 {
        let d = 2 + i % 3;
        let outcomes = rng.random_range(2..=4);
        let m = random::random_bare_measurement(rng, d, outcomes);
        let rho = random::random_density(rng, d);
        if let Ok(r) = ando_entropy_check(&m, &rho) {
            ando = ando.min(r.s_w - r.s_rho);
        } else {
            ando = f64::NAN;
            break;
        }
    }
    s.push("optimality.ando_entropy_gain", ando, -1e-9, ando >= -1e-9);

    let mut slack = f64::NEG_INFINITY;
    for i in 0..100 {
        let n = 2 + i % 2;
        let k = rng.random_range(n..=2 * n);
        let (chis, q) = random_mixed_decomposition(rng, n, k);
        let psi = random::random_state(rng, n);
        match extended_lemma_check(&chis, &q, &psi) {
            Ok(r) => slack = slack.max(r.min_overlap - 1.0 / (n as f64).sqrt()),
            Err(_) => {
                slack = f64::NAN;
                break;
            }
        }
    }
    s.push("optimality.extended_lemma_min_overlap_excess", slack, 1e-9, slack <= 1e-9);

    let mut z_max = f64::NEG_INFINITY;
    let mut equality_ok = true;
    for _ in 0..100 {
        let len = rng.random_range(2..=6);
        let unit = |rng: &mut ChaCha8Rng| {
            let v: Vec<f64> = (0..len).map(|_| rng.random_range(-1.0..1.0)).collect();
            let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            v.into_iter().map(|x| x / n).collect::<Vec<_>>()
        };
        let (u, v) = (unit(rng), unit(rng));
        let r = cauchy_schwarz_bound(&u, &v).expect("unit vectors");
        z_max = z_max.max(r.z);
        equality_ok &= !r.equality;
        equality_ok &= cauchy_schwarz_bound(&u, &u).map(|r| r.equality).unwrap_or(false);
    }
    s.at_most("optimality.cauchy_schwarz_max", z_max, 1.0 + 1e-12);
    s.push("optimality.cauchy_schwarz_equality_iff_equal", f64::from(u8::from(equality_ok)), 1.0, equality_ok);
}
