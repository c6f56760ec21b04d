//! Subcommand implementations. Each validates the configuration, runs the
//! experiment and writes its reports into the output directory.

use std::sync::Arc;

use fracwave::laplace::{extend_solution, resolvent_residuals, transform};
use fracwave::linear::{stability_report, StabilityReport};
use fracwave::mlf::{mlf_eval, MLParams};
use fracwave::norms::sobolev_norm;
use fracwave::report::{draws_csv, trajectory_csv, trajectory_summary, TrajectorySummary, SCHEMA_VERSION};
use fracwave::semilinear::{
    assembled_constant, check_b_window, existence_time, picard_solve, small_data_horizon, tilde_constant, BWindow,
    ExistenceTime, PicardConfig, PicardReport, SmallDataHorizon,
};
use fracwave::strichartz::{estimate_constant, ConstantEstimate, ExponentSet};
use fracwave::{solve_linear, solve_linear_derivative, LinearSolver};
use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::output::{CliError, OutDir};

/// Outcome of a command: a one-line summary and the eventual verdict.
pub struct Finished {
    pub summary: String,
    pub verdict: Result<(), CliError>,
}

impl Finished {
    fn ok(summary: String) -> Self {
        Self { summary, verdict: Ok(()) }
    }
}

#[derive(Serialize)]
struct Refinement {
    refined_intervals: usize,
    /// max |u_coarse - u_fine| / max |u_fine| over shared nodes.
    relative_change: f64,
    tolerance: f64,
    pass: bool,
}

#[derive(Serialize)]
struct LinearNorms {
    #[serde(flatten)]
    summary: TrajectorySummary,
    stability: StabilityReport,
    refinement: Option<Refinement>,
}

pub fn solve_linear_cmd(config: &ExperimentConfig, out: &mut OutDir) -> Result<Finished, CliError> {
    config.validate()?;
    let basis = config.basis()?;
    let horizon = config.horizon()?;
    let grid = config.grid(horizon)?;
    let (u0, u1) = config.initial_data(&basis)?;
    let f = config.source(&basis, &grid)?;
    let traj = solve_linear(basis.clone(), config.alpha, &u0, &u1, &f, Arc::new(grid.clone()))?;
    let traj = solve_linear_derivative(&traj)?;
    let stability = stability_report(&traj, config.stability_r)?;
    let refinement = match config.tolerances.refinement {
        None => None,
        Some(tolerance) => {
            let fine_grid = grid.refined();
            let fine_f = config.source(&basis, &fine_grid)?;
            let fine = solve_linear(basis.clone(), config.alpha, &u0, &u1, &fine_f, Arc::new(fine_grid.clone()))?;
            let scale = fine.modal_u.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let mut diff = 0.0f64;
            for j in 0..traj.times().len() {
                for (a, b) in traj.at(j).iter().zip(fine.at(2 * j)) {
                    diff = diff.max((a - b).abs());
                }
            }
            let relative_change = if scale > 0.0 { diff / scale } else { diff };
            Some(Refinement {
                refined_intervals: fine_grid.intervals(),
                relative_change,
                tolerance,
                pass: relative_change <= tolerance,
            })
        }
    };
    out.write("trajectory.csv", &trajectory_csv(&traj))?;
    let failed = refinement.as_ref().filter(|r| !r.pass).map(|r| {
        CliError::Fail(format!("refinement changed the solution by {:e} > {:e}", r.relative_change, r.tolerance))
    });
    let summary = format!(
        "solved {} modes on {} intervals up to T = {horizon}; C(0,T;L²) ratio {:.6e}",
        basis.mode_count(),
        grid.intervals(),
        stability.c_l2
    );
    out.write_json("norms.json", &LinearNorms { summary: trajectory_summary(&traj), stability, refinement })?;
    Ok(Finished { summary, verdict: failed.map_or(Ok(()), Err) })
}

pub fn verify_laplace_cmd(config: &ExperimentConfig, out: &mut OutDir) -> Result<Finished, CliError> {
    config.validate()?;
    let basis = config.basis()?;
    let horizon = config.horizon()?;
    let grid = config.grid(horizon)?;
    let (u0, u1) = config.initial_data(&basis)?;
    let f = config.source(&basis, &grid)?;
    let probe = config.probe(horizon)?;
    let mut ext = extend_solution(basis.clone(), config.alpha, &u0, &u1, &f, &grid, &probe)?;
    if let Some(scale) = config.probe.corrupt_scale {
        ext.trajectory.modal_u *= scale;
    }
    let report = resolvent_residuals(&basis, config.alpha, &u0, &u1, &f, &grid, &transform(&ext, &probe), config.tolerances.laplace)?;
    out.write_json("laplace.json", &report)?;
    let line = format!(
        "max relative resolvent residual {:.3e} (tolerance {:.1e}, truncation {:.1e}) over {} probe values",
        report.max_residual,
        report.tolerance,
        report.relative_tail,
        report.p_values.len()
    );
    if report.pass {
        Ok(Finished::ok(format!("PASS: {line}")))
    } else {
        Ok(Finished { summary: format!("FAIL: {line}"), verdict: Err(CliError::Fail(line)) })
    }
}

#[derive(Serialize)]
struct ExponentReport {
    schema_version: u32,
    b_window: Option<BWindow>,
    exponents: ExponentSet,
}

pub fn exponents_cmd(config: &ExperimentConfig, out: &mut OutDir) -> Result<(Finished, String), CliError> {
    config.validate()?;
    let exponents = config.exponent_set()?;
    let b_window = match config.nonlinearity {
        Some(n) => Some(check_b_window(config.exponent_dimension(), config.alpha, n.b)?),
        None => None,
    };
    let report = ExponentReport { schema_version: SCHEMA_VERSION, b_window, exponents };
    let text = fracwave::report::to_json(&report).map_err(|e| CliError::Io(e.to_string()))?;
    out.write("exponents.json", &text)?;
    let e = &exponents;
    let summary = format!("d = {}, α = {}: γ = {}, q = {}, p = {}, s = {}, r = {}, δ = {}", e.d, e.alpha, e.gamma, e.q, e.p, e.s, e.r, e.delta);
    Ok((Finished::ok(summary), text))
}

#[derive(Serialize)]
struct EstimateReport<'a> {
    schema_version: u32,
    trials: usize,
    seed: u64,
    #[serde(flatten)]
    estimate: &'a ConstantEstimate,
}

pub fn estimate_constant_cmd(config: &ExperimentConfig, out: &mut OutDir) -> Result<Finished, CliError> {
    config.validate()?;
    let basis = config.basis()?;
    let exponents = config.exponent_set()?;
    let estimate = estimate_cfg(config, basis, &exponents)?;
    out.write("draws.csv", &draws_csv(&estimate))?;
    let report = EstimateReport { schema_version: SCHEMA_VERSION, trials: config.estimate.trials, seed: config.seed, estimate: &estimate };
    // Draws go to the CSV only.
    let mut value = serde_json::to_value(&report).map_err(|e| CliError::Io(e.to_string()))?;
    value.as_object_mut().map(|o| o.remove("draws"));
    out.write_json("estimate.json", &value)?;
    Ok(Finished::ok(format!(
        "C0_hat = {:.6e}, δ_hat = {:.4} (δ = {:.4}) from {} draws",
        estimate.c0_hat,
        estimate.delta_hat,
        exponents.delta,
        estimate.draws.len()
    )))
}

fn estimate_cfg(config: &ExperimentConfig, basis: Arc<fracwave::EigenBasis>, e: &ExponentSet) -> Result<ConstantEstimate, CliError> {
    Ok(estimate_constant(basis, e, &config.estimate_config())?)
}

#[derive(Serialize)]
struct SweepPoint {
    eps: f64,
    t: f64,
    m: f64,
    capped: bool,
}

#[derive(Serialize)]
struct SemilinearReport<'a> {
    schema_version: u32,
    constant: f64,
    constant_source: &'static str,
    c0_hat: Option<f64>,
    u0_norm: f64,
    u1_norm: f64,
    existence: ExistenceTime,
    horizon: f64,
    horizon_source: &'static str,
    eps_sweep: Vec<SweepPoint>,
    /// Least-squares slope of log T(ε) on log ε over uncapped points.
    eps_slope: Option<f64>,
    predicted_slope: f64,
    small_data_horizon: Option<SmallDataHorizon>,
    small_data_note: Option<String>,
    picard: &'a PicardReport,
}

pub fn solve_semilinear_cmd(config: &ExperimentConfig, out: &mut OutDir) -> Result<Finished, CliError> {
    config.validate()?;
    let spec = config.nonlinearity()?;
    let d = &config.data;
    if d.f_coeffs.is_some() || d.f != fracwave::profiles::DataProfile::Zero {
        return Err(CliError::Validation("solve-semilinear takes no source term; set data.f = \"zero\"".into()));
    }
    let basis = config.basis()?;
    let exponents = config.exponent_set()?;
    let (u0, u1) = config.initial_data(&basis)?;
    let s = &config.semilinear;
    let cb = spec.mu.abs() * spec.b;
    let (constant, constant_source, c0_hat) = match s.c {
        Some(c) => (c, "config", None),
        None => {
            let est = estimate_cfg(config, basis.clone(), &exponents)?;
            (assembled_constant(s.safety * est.c0_hat, exponents.delta, s.t0, cb), "estimated", Some(est.c0_hat))
        }
    };
    let n0 = sobolev_norm(&basis, &u0, exponents.gamma)?;
    let n1 = sobolev_norm(&basis, &u1, exponents.s)?;
    let existence = existence_time(n0, n1, &exponents, s.t0, constant)?;
    let (horizon, horizon_source) = match config.time.horizon {
        Some(t) => (t, "config"),
        None => (existence.t, "existence_time"),
    };
    let mut eps_sweep = Vec::with_capacity(s.eps.len());
    for &eps in &s.eps {
        if !(eps > 0.0) {
            return Err(CliError::Validation(format!("semilinear.eps values must be positive, got {eps}")));
        }
        let t = existence_time(eps * n0, eps * n1, &exponents, s.t0, constant)?;
        eps_sweep.push(SweepPoint { eps, t: t.t, m: t.m, capped: t.capped });
    }
    let predicted_slope = if exponents.p.is_infinite() {
        -(spec.b - 1.0)
    } else {
        -exponents.p * (spec.b - 1.0) / (exponents.p - spec.b)
    };
    let eps_slope = log_slope(eps_sweep.iter().filter(|p| !p.capped).map(|p| (p.eps.ln(), p.t.ln())));
    let c0_tilde = s.c0_tilde.unwrap_or_else(|| tilde_constant(constant, spec.b));
    let (small, small_data_note) = match small_data_horizon(n0, n1, &exponents, c0_tilde) {
        Ok(h) => (Some(h), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let grid = config.grid(horizon)?;
    let solver = LinearSolver::new(basis.clone(), config.alpha, Arc::new(grid))?;
    let picard_config = PicardConfig {
        tolerance: config.tolerances.picard,
        max_iter: config.tolerances.max_iter,
        oversampling: s.oversampling,
        ball_radius: Some(existence.m),
        ..Default::default()
    };
    let (traj, picard) = picard_solve(&solver, spec, &exponents, &u0, &u1, &picard_config)?;
    // Zero coupling returns the linear trajectory with its data attached.
    let traj = if traj.data.is_some() { solve_linear_derivative(&traj)? } else { traj };
    out.write("trajectory.csv", &trajectory_csv(&traj))?;
    out.write_json("norms.json", &trajectory_summary(&traj))?;
    out.write_json(
        "picard.json",
        &SemilinearReport {
            schema_version: SCHEMA_VERSION,
            constant,
            constant_source,
            c0_hat,
            u0_norm: n0,
            u1_norm: n1,
            existence,
            horizon,
            horizon_source,
            eps_sweep,
            eps_slope,
            predicted_slope,
            small_data_horizon: small,
            small_data_note,
            picard: &picard,
        },
    )?;
    let summary = format!(
        "{:?} after {} iterations on [0, {horizon:.6e}], max contraction ratio {:.3e}, C = {constant:.4e}",
        picard.status,
        picard.iterate_count,
        picard.max_contraction_ratio()
    );
    Ok(Finished { summary, verdict: picard.check().map_err(CliError::from) })
}

fn log_slope(points: impl Iterator<Item = (f64, f64)>) -> Option<f64> {
    let pts: Vec<(f64, f64)> = points.collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    (sxx > 0.0).then(|| pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>() / sxx)
}

#[derive(Serialize)]
struct MlfRow {
    x: f64,
    value: f64,
}

#[derive(Serialize)]
struct MlfReport {
    schema_version: u32,
    alpha: f64,
    beta: f64,
    values: Vec<MlfRow>,
}

pub fn mlf_eval_cmd(config: &ExperimentConfig, out: &mut OutDir) -> Result<(Finished, String), CliError> {
    let m = &config.mlf;
    let alpha = m.alpha.unwrap_or(config.alpha);
    let params = MLParams::new(alpha, m.beta)?;
    let values = m.x.iter().map(|&x| Ok(MlfRow { x, value: mlf_eval(params, x)? })).collect::<Result<Vec<_>, CliError>>()?;
    let report = MlfReport { schema_version: SCHEMA_VERSION, alpha, beta: m.beta, values };
    let text = fracwave::report::to_json(&report).map_err(|e| CliError::Io(e.to_string()))?;
    out.write("mlf.json", &text)?;
    Ok((Finished::ok(format!("E_{{{alpha},{}}} at {} points", m.beta, m.x.len())), text))
}
