//! Dispatch of a resolved configuration to the core experiments.

use std::io::Write;
use std::path::Path;

use serde_json::{json, Value};

use reset_ldp_core::kernels::{validate_kernel, ConditionStatus, DeltaMeasure, ResetKernel};
use reset_ldp_core::path::{
    action_integral, jordan_decompose, rate_deterministic_reset, rate_mixed, rate_negative,
    rate_positive, staircase_schedule, PathError, TargetPath, TimeWindow, TubeSpec,
};
use reset_ldp_core::process::{simulate_path, SimSettings};
use reset_ldp_core::rare_event::{
    direct_mc_estimate, empirical_rate_curve, is_estimate, poisson_tail_bound, predicted_rate,
    sup_law_experiment, with_workers, EstimateResult, Method,
};
use reset_ldp_core::rng::RngStream;

use crate::config::{Experiment, ExperimentConfig};
use crate::output::{estimate_diagnostics, estimate_row, predicted_row, Cell, Table, ESTIMATE_COLUMNS};
use crate::plot::plot_rate_curve;
use crate::CliError;

/// Everything one experiment produces.
#[derive(Debug, Clone)]
pub struct Report {
    pub experiment: Experiment,
    pub table: Table,
    pub predicted: Option<(f64, String)>,
    pub diagnostics: Value,
    /// Rows to plot, for experiments that have a rate curve.
    pub curve: Option<Vec<EstimateResult>>,
    pub config: Value,
}

/// Rendered artifacts. `svg` is present only when the experiment has a curve.
#[derive(Debug, Clone, PartialEq)]
pub struct Artifacts {
    pub csv: String,
    pub json: String,
    pub svg: Option<String>,
}

impl Report {
    pub fn json_value(&self) -> Value {
        json!({
            "experiment": self.experiment.name(),
            "config": self.config,
            "predicted_rate": self.predicted.as_ref().map(|p| p.0),
            "functional": self.predicted.as_ref().map(|p| p.1.clone()),
            "columns": self.table.columns,
            "rows": self.table.json_rows(),
            "diagnostics": self.diagnostics,
        })
    }

    pub fn render(&self) -> Result<Artifacts, CliError> {
        let mut json = serde_json::to_string_pretty(&self.json_value()).map_err(|e| CliError::Runtime(e.to_string()))?;
        json.push('\n');
        let svg = match &self.curve {
            Some(rows) => Some(plot_rate_curve(rows, self.predicted.as_ref().map(|p| p.0))?),
            None => None,
        };
        Ok(Artifacts {
            csv: self.table.to_csv()?,
            json,
            svg,
        })
    }
}

fn runtime(e: reset_ldp_core::Error) -> CliError {
    CliError::Runtime(e.to_string())
}

fn build_kernel(cfg: &ExperimentConfig) -> Result<Box<dyn ResetKernel>, CliError> {
    cfg.kernel.build().map_err(|e| CliError::Config(e.to_string()))
}

fn sim(cfg: &ExperimentConfig) -> SimSettings {
    SimSettings {
        grid_points: cfg.grid_points,
        ..SimSettings::default()
    }
}

fn tube(cfg: &ExperimentConfig, f: TargetPath) -> Result<TubeSpec, CliError> {
    let eps = cfg.epsilon.expect("validated");
    let window = TimeWindow::new(cfg.window_start).map_err(|e| CliError::Config(e.to_string()))?;
    TubeSpec::with_window(f, eps, window).map_err(|e| CliError::Config(e.to_string()))
}

/// Runs the experiment on a pool of `cfg.workers` threads.
pub fn execute(cfg: &ExperimentConfig) -> Result<Report, CliError> {
    if cfg.experiment == Experiment::Converge && cfg.window_start != 0.0 {
        return Err(CliError::Config("converge always uses the full window".into()));
    }
    if cfg.output.svg.is_some() && !matches!(cfg.experiment, Experiment::Estimate | Experiment::Converge) {
        return Err(CliError::Config(format!(
            "{} has no rate curve to plot",
            cfg.experiment.name()
        )));
    }
    let config = serde_json::to_value(cfg).map_err(|e| CliError::Runtime(e.to_string()))?;
    let report = with_workers(cfg.workers, || match cfg.experiment {
        Experiment::Simulate => simulate(cfg),
        Experiment::Estimate => estimate(cfg),
        Experiment::Rate => rate(cfg),
        Experiment::ValidateKernel => validate(cfg),
        Experiment::Converge => converge(cfg),
        Experiment::BoundCheck => bound_check(cfg),
        Experiment::SupLaw => sup_law(cfg),
    })
    .map_err(runtime)??;
    Ok(Report { config, ..report })
}

fn report(experiment: Experiment, table: Table, diagnostics: Value) -> Report {
    Report {
        experiment,
        table,
        predicted: None,
        diagnostics,
        curve: None,
        config: Value::Null,
    }
}

fn simulate(cfg: &ExperimentConfig) -> Result<Report, CliError> {
    let kernel = build_kernel(cfg)?;
    let params = sim(cfg).params(cfg.lambda[0], cfg.t_grid[0]).map_err(|e| CliError::Config(e.to_string()))?;
    let path = simulate_path(&params, kernel.as_ref(), &RngStream::new(cfg.seed, 0)).map_err(runtime)?;
    let mut table = Table::new(&["t", "left", "value", "reset_ordinal"]);
    let mut marks = path.reset_marks.iter().peekable();
    for (i, (&t, &v)) in path.times.iter().zip(&path.values).enumerate() {
        let (left, ord) = match marks.peek() {
            Some(m) if m.index == i => {
                let m = marks.next().unwrap();
                (m.pre, Cell::Int(m.ordinal))
            }
            _ => (v, Cell::Empty),
        };
        table.push(vec![Cell::Num(t), Cell::Num(left), Cell::Num(v), ord]);
    }
    let diagnostics = json!({
        "kernel": kernel.label(),
        "resets": path.reset_marks.len(),
        "knots": path.times.len(),
        "final_value": path.values.last(),
    });
    Ok(report(Experiment::Simulate, table, diagnostics))
}

fn estimate_at(
    cfg: &ExperimentConfig,
    tube: &TubeSpec,
    kernel: &dyn ResetKernel,
    i: usize,
    t: f64,
) -> Result<EstimateResult, CliError> {
    let params = sim(cfg).params(cfg.lambda[0], t).map_err(|e| CliError::Config(e.to_string()))?;
    let stream = RngStream::new(cfg.seed, 0).derive(i as u64);
    match cfg.method {
        Method::Direct => direct_mc_estimate(tube, &params, kernel, cfg.n_replicas, &stream),
        Method::Importance => is_estimate(tube, &params, kernel, cfg.n_replicas, &stream, cfg.is_options),
    }
    .map_err(runtime)
}

fn curve_report(experiment: Experiment, rows: Vec<EstimateResult>, predicted: Option<(f64, String)>, cfg: &ExperimentConfig, kernel: &str) -> Report {
    let mut table = Table::new(&ESTIMATE_COLUMNS);
    for r in &rows {
        table.push(estimate_row(r));
    }
    if experiment == Experiment::Converge {
        let (p, _) = predicted.as_ref().expect("converge has a prediction");
        table.push(predicted_row(*p, cfg.epsilon.unwrap(), cfg.lambda[0], kernel, cfg.seed));
    }
    let diagnostics = json!({
        "rows": rows.iter().map(estimate_diagnostics).collect::<Vec<_>>(),
    });
    Report {
        experiment,
        table,
        predicted,
        diagnostics,
        curve: Some(rows),
        config: Value::Null,
    }
}

fn estimate(cfg: &ExperimentConfig) -> Result<Report, CliError> {
    let f = cfg.target_path()?;
    let kernel = build_kernel(cfg)?;
    let predicted = predicted_rate(&f, cfg.lambda[0], kernel.as_ref())
        .ok()
        .map(|(p, name)| (p, name.to_string()));
    let tube = tube(cfg, f)?;
    let rows = cfg
        .t_grid
        .iter()
        .enumerate()
        .map(|(i, &t)| estimate_at(cfg, &tube, kernel.as_ref(), i, t))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(curve_report(Experiment::Estimate, rows, predicted, cfg, &kernel.label()))
}

fn converge(cfg: &ExperimentConfig) -> Result<Report, CliError> {
    let f = cfg.target_path()?;
    let kernel = build_kernel(cfg)?;
    let curve = empirical_rate_curve(
        &f,
        cfg.lambda[0],
        kernel.as_ref(),
        cfg.epsilon.expect("validated"),
        &cfg.t_grid,
        cfg.n_replicas,
        cfg.method,
        &RngStream::new(cfg.seed, 0),
        sim(cfg),
        cfg.is_options,
    )
    .map_err(runtime)?;
    let mut r = curve_report(
        Experiment::Converge,
        curve.rows.clone(),
        Some((curve.predicted, curve.functional.clone())),
        cfg,
        &kernel.label(),
    );
    r.diagnostics["first_gap"] = json!(curve.first_gap);
    r.diagnostics["last_gap"] = json!(curve.last_gap);
    r.diagnostics["approaches_prediction"] = json!(curve.approaches_prediction());
    Ok(r)
}

fn rate(cfg: &ExperimentConfig) -> Result<Report, CliError> {
    let f = cfg.target_path()?;
    let kernel = build_kernel(cfg)?;
    let lambda = cfg.lambda[0];
    let d = jordan_decompose(&f);
    let mut table = Table::new(&["quantity", "value"]);
    let mut domain = serde_json::Map::new();
    let mut put = |name: &str, v: Result<f64, PathError>| match v {
        Ok(x) => table.push(vec![Cell::text(name), Cell::Num(x)]),
        Err(e) => {
            domain.insert(name.to_string(), json!(e.to_string()));
            table.push(vec![Cell::text(name), Cell::Empty]);
        }
    };
    put("action_f", Ok(action_integral(&f)));
    put("action_f_plus", Ok(action_integral(&d.f_plus)));
    put("action_f_minus", Ok(action_integral(&d.f_minus)));
    put("total_variation", Ok(f.total_variation()));
    put("rate_positive", rate_positive(&f, lambda));
    put("rate_negative", rate_negative(&f, lambda));
    put("rate_mixed", rate_mixed(&f, lambda));
    put("rate_deterministic_reset", rate_deterministic_reset(&f, lambda));
    let predicted = predicted_rate(&f, lambda, kernel.as_ref());
    if let Ok((p, _)) = &predicted {
        table.push(vec![Cell::text("predicted"), Cell::Num(*p)]);
    } else {
        table.push(vec![Cell::text("predicted"), Cell::Empty]);
    }
    let schedule = match cfg.epsilon {
        Some(eps) => match staircase_schedule(&f, eps) {
            Ok(s) => json!(s),
            Err(e) => json!({ "error": e.to_string() }),
        },
        None => Value::Null,
    };
    let diagnostics = json!({
        "sign_pattern": f.sign_pattern(),
        "out_of_domain": domain,
        "staircase": schedule,
    });
    let mut r = report(Experiment::Rate, table, diagnostics);
    r.predicted = predicted.ok().map(|(p, n)| (p, n.to_string()));
    Ok(r)
}

fn status_cells(c: &ConditionStatus) -> (Cell, Cell) {
    match c {
        ConditionStatus::Pass => (Cell::text("pass"), Cell::Empty),
        ConditionStatus::Fail { reason } => (Cell::text("fail"), Cell::text(reason)),
        ConditionStatus::NotApplicable => (Cell::text("not_applicable"), Cell::Empty),
    }
}

fn delta_cell(d: &DeltaMeasure) -> Cell {
    match d {
        DeltaMeasure::Bounded(x) => Cell::Num(*x),
        DeltaMeasure::Unbounded => Cell::text("unbounded"),
        DeltaMeasure::Undefined => Cell::Empty,
    }
}

fn validate(cfg: &ExperimentConfig) -> Result<Report, CliError> {
    let kernel = build_kernel(cfg)?;
    let rep = validate_kernel(kernel.as_ref(), &cfg.probes, &cfg.ns, cfg.tol).map_err(runtime)?;
    let mut table = Table::new(&["condition", "status", "reason"]);
    for (name, c) in [
        ("A0", &rep.a0),
        ("A_plus", &rep.a_plus),
        ("A_minus", &rep.a_minus),
        ("B_plus", &rep.b_plus),
        ("B_minus", &rep.b_minus),
    ] {
        let (s, why) = status_cells(c);
        table.push(vec![Cell::text(name), s, why]);
    }
    for (name, d) in [
        ("measured_delta", &rep.measured_delta),
        ("upper_delta", &rep.upper_delta),
        ("lower_delta", &rep.lower_delta),
    ] {
        table.push(vec![Cell::text(name), delta_cell(d), Cell::Empty]);
    }
    let diagnostics = json!({ "report": rep, "all_pass": rep.all_pass() });
    Ok(report(Experiment::ValidateKernel, table, diagnostics))
}

fn bound_check(cfg: &ExperimentConfig) -> Result<Report, CliError> {
    let mut table = Table::new(&[
        "lambda", "delta", "c", "T", "exact_cdf", "bound", "ln_exact_cdf", "ln_bound", "holds",
    ]);
    let mut all = true;
    for &lambda in &cfg.lambda {
        for &delta in &cfg.delta {
            for &c in &cfg.c {
                let c = if cfg.c_relative { c * lambda * (1.0 - delta) } else { c };
                for &t in &cfg.t_grid {
                    let b = poisson_tail_bound(lambda, delta, c, t).map_err(runtime)?;
                    all &= b.holds;
                    table.push(vec![
                        Cell::Num(b.lambda),
                        Cell::Num(b.delta),
                        Cell::Num(b.c),
                        Cell::Num(b.t),
                        Cell::Num(b.exact_cdf),
                        Cell::Num(b.bound),
                        Cell::Num(b.ln_exact_cdf),
                        Cell::Num(b.ln_bound),
                        Cell::Bool(b.holds),
                    ]);
                }
            }
        }
    }
    Ok(report(Experiment::BoundCheck, table, json!({ "all_hold": all })))
}

fn sup_law(cfg: &ExperimentConfig) -> Result<Report, CliError> {
    let kernel = build_kernel(cfg)?;
    let rows = sup_law_experiment(
        cfg.lambda[0],
        kernel.as_ref(),
        cfg.phi,
        &cfg.t_grid,
        cfg.n_replicas,
        &RngStream::new(cfg.seed, 0),
        sim(cfg),
    )
    .map_err(runtime)?;
    let mut table = Table::new(&["T", "phi", "n_replicas", "median", "q90", "seed"]);
    for r in &rows {
        table.push(vec![
            Cell::Num(r.t),
            Cell::Num(r.phi),
            Cell::Int(r.n_replicas),
            Cell::Num(r.median),
            Cell::Num(r.q90),
            Cell::Int(r.seed),
        ]);
    }
    let decreasing = rows.windows(2).all(|w| w[1].median < w[0].median);
    let diagnostics = json!({
        "phi": cfg.phi.name(),
        "median_strictly_decreasing": decreasing,
    });
    Ok(report(Experiment::SupLaw, table, diagnostics))
}

/// Writes the artifacts to the configured paths; `-` means stdout. With no
/// paths configured the CSV goes to stdout.
pub fn write_artifacts(cfg: &ExperimentConfig, art: &Artifacts, stdout: &mut dyn Write) -> Result<(), CliError> {
    let out = &cfg.output;
    let mut emit = |path: &Path, body: &str| -> Result<(), CliError> {
        if path == Path::new("-") {
            stdout.write_all(body.as_bytes())
        } else {
            std::fs::write(path, body)
        }
        .map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", path.display())))
    };
    if out.csv.is_none() && out.json.is_none() && out.svg.is_none() {
        return emit(Path::new("-"), &art.csv);
    }
    if let Some(p) = &out.csv {
        emit(p, &art.csv)?;
    }
    if let Some(p) = &out.json {
        emit(p, &art.json)?;
    }
    if let (Some(p), Some(svg)) = (&out.svg, &art.svg) {
        emit(p, svg)?;
    }
    Ok(())
}
