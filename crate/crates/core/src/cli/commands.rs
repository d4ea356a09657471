use std::io::Write;

use serde_json::{json, Value};

use super::{verify_suite, CliError, Command, Format, RunConfig};
use crate::error::Error;
use crate::format::num;
use crate::geodesic::{lemma1_bound, SpeedBound};
use crate::optimality::{brute_force_lemma1, brute_force_transfer_angle, SearchConfig};
use crate::protocols::{
    build_mf_protocol, build_optimal_protocol_with, build_swap_protocol, build_unbiased_swap_protocol, simulate,
    speedup, speedup_asymptote, tau_mf, tau_opt, tau_swap, OptimalSearch, Protocol, ProtocolKind, OPTIMAL_TIME_TOL,
};
use crate::qcore::{DensityMatrix, StateVector};

/// Largest N whose protocols `compare` simulates.
pub const COMPARE_SIMULATION_MAX: usize = 8;
/// Largest N for which `compare` runs the unbiased-swap phase search.
pub const COMPARE_PHASE_SEARCH_MAX: usize = 4;

fn emit(cfg: &RunConfig, content: &str) -> Result<(), CliError> {
    match &cfg.output_path {
        Some(path) => std::fs::write(path, content)
            .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display()))),
        None => std::io::stdout()
            .write_all(content.as_bytes())
            .map_err(|e| CliError::Io(format!("cannot write stdout: {e}"))),
    }
}

fn json_text(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("json values serialize");
    s.push('\n');
    s
}

fn phase_search(cfg: &RunConfig) -> OptimalSearch {
    OptimalSearch {
        seed: cfg.seed,
        ..OptimalSearch::default()
    }
}

pub fn run(cfg: &RunConfig) -> Result<(), CliError> {
    match cfg.command {
        Command::Simulate => run_simulate(cfg),
        Command::Compare => run_compare(cfg),
        Command::Optimize => run_optimize(cfg),
        Command::Speedup => run_speedup(cfg),
        Command::Verify => run_verify(cfg),
    }
}

fn build(kind: ProtocolKind, n: usize, bound: SpeedBound, cfg: &RunConfig) -> Result<Protocol, Error> {
    let target = StateVector::basis(n, 0)?;
    match kind {
        ProtocolKind::Mf => build_mf_protocol(n, bound, target),
        ProtocolKind::Swap => build_swap_protocol(n, bound, target),
        ProtocolKind::Optimal => build_optimal_protocol_with(n, bound, target, &phase_search(cfg)),
    }
}

fn run_simulate(cfg: &RunConfig) -> Result<(), CliError> {
    let bound = SpeedBound::new(cfg.mu)?;
    let p = build(cfg.protocol, cfg.dim, bound, cfg)?;
    let traj = simulate(&p, &DensityMatrix::maximally_mixed(cfg.dim), cfg.samples)?;
    let text = match cfg.format {
        Format::Csv => traj.to_csv(),
        Format::Json => json_text(&traj.to_json()),
    };
    emit(cfg, &text)
}

struct CompareRow {
    n: usize,
    tau_mf: f64,
    tau_swap: f64,
    tau_opt: f64,
    speedup: f64,
    sim_mf: Option<f64>,
    sim_swap: Option<f64>,
    sim_opt: Option<f64>,
}

fn simulated_duration(p: &Protocol) -> Result<f64, Error> {
    let traj = simulate(p, &DensityMatrix::maximally_mixed(p.system_dim), 2)?;
    Ok(traj.last().t)
}

fn run_compare(cfg: &RunConfig) -> Result<(), CliError> {
    let bound = SpeedBound::new(cfg.mu)?;
    let mut rows = Vec::new();
    let mut failure = None;
    for n in 2..=cfg.dim {
        let mut row = CompareRow {
            n,
            tau_mf: tau_mf(n, bound)?,
            tau_swap: tau_swap(bound),
            tau_opt: tau_opt(n, bound)?,
            speedup: speedup(n)?,
            sim_mf: None,
            sim_swap: None,
            sim_opt: None,
        };
        if n <= COMPARE_SIMULATION_MAX {
            row.sim_mf = Some(simulated_duration(&build(ProtocolKind::Mf, n, bound, cfg)?)?);
            row.sim_swap = Some(simulated_duration(&build(ProtocolKind::Swap, n, bound, cfg)?)?);
        }
        if n <= COMPARE_PHASE_SEARCH_MAX {
            let target = StateVector::basis(n, 0)?;
            let p = build_unbiased_swap_protocol(n, bound, target, &phase_search(cfg))?;
            let achieved = simulated_duration(&p)?;
            if achieved > row.tau_opt + OPTIMAL_TIME_TOL && failure.is_none() {
                failure = Some(Error::SynthesisFailure {
                    achieved,
                    target: row.tau_opt,
                });
            }
            row.sim_opt = Some(achieved);
        }
        rows.push(row);
    }
    let text = match cfg.format {
        Format::Csv => {
            let mut out = String::from("N,tau_mf,tau_swap,tau_opt,speedup,sim_mf,sim_swap,sim_opt\n");
            let cell = |x: Option<f64>| x.map(num).unwrap_or_default();
            for r in &rows {
                out.push_str(&format!(
                    "{},{},{},{},{},{},{},{}\n",
                    r.n,
                    num(r.tau_mf),
                    num(r.tau_swap),
                    num(r.tau_opt),
                    num(r.speedup),
                    cell(r.sim_mf),
                    cell(r.sim_swap),
                    cell(r.sim_opt)
                ));
            }
            out
        }
        Format::Json => json_text(&Value::Array(
            rows.iter()
                .map(|r| {
                    json!({
                        "N": r.n, "tau_mf": r.tau_mf, "tau_swap": r.tau_swap, "tau_opt": r.tau_opt,
                        "speedup": r.speedup, "sim_mf": r.sim_mf, "sim_swap": r.sim_swap, "sim_opt": r.sim_opt,
                    })
                })
                .collect(),
        )),
    };
    emit(cfg, &text)?;
    match failure {
        Some(e) => Err(CliError::Synthesis(e)),
        None => Ok(()),
    }
}

fn run_optimize(cfg: &RunConfig) -> Result<(), CliError> {
    let n = cfg.dim;
    let search = SearchConfig {
        trials: cfg.trials,
        seed: cfg.seed,
        ..SearchConfig::default()
    };
    let psi = StateVector::basis(n, 0)?;
    let lemma = brute_force_lemma1(&psi, n, &search)?;
    let transfer = brute_force_transfer_angle(n, &search)?;
    let lemma_bound = lemma1_bound(n)?;
    let transfer_bound = (1.0 / n as f64).acos();
    let text = json_text(&json!({
        "lemma1": { "N": n, "bound": lemma_bound, "report": lemma },
        "transfer_angle": { "N": n, "bound": transfer_bound, "report": transfer },
    }));
    emit(cfg, &text)
}

fn run_speedup(cfg: &RunConfig) -> Result<(), CliError> {
    let text = match cfg.format {
        Format::Csv => {
            let mut out = String::from("N,speedup,asymptote\n");
            for n in 2..=cfg.dim {
                out.push_str(&format!("{n},{},{}\n", num(speedup(n)?), num(speedup_asymptote(n))));
            }
            out
        }
        Format::Json => {
            let rows = (2..=cfg.dim)
                .map(|n| Ok(json!({ "N": n, "speedup": speedup(n)?, "asymptote": speedup_asymptote(n) })))
                .collect::<Result<Vec<_>, Error>>()?;
            json_text(&Value::Array(rows))
        }
    };
    emit(cfg, &text)
}

fn run_verify(cfg: &RunConfig) -> Result<(), CliError> {
    let report = verify_suite(cfg.seed, cfg.trials);
    let text = json_text(&serde_json::to_value(&report).expect("report serializes"));
    emit(cfg, &text)?;
    if report.failed > 0 {
        return Err(CliError::VerifyFailed(report.failed));
    }
    Ok(())
}
