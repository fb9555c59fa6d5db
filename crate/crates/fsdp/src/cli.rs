//! The `fsdp` command line.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use fsdp_core::battery::{greedy_peak_shaving, idle_schedule, solve_deterministic, ScheduleResult};
use fsdp_core::dp::{brute_force_solve, check_principle_of_optimality, feasible_trajectories};
use fsdp_core::instances::{counterexample, oracle_check, ObjectiveKind};
use fsdp_core::stochastic::{
    compare_with_clairvoyant, fit_gauss_markov, solve_stochastic, LagMatrices, MultiSeries, NormalizationProfile,
};

use crate::config::{Mode, RunConfig};
use crate::io::{
    load_timeseries, read_model, write_model, write_timeseries, Baselines, Column, FitReport, GridSettings, ModelFile,
    NoiseSettings, RolloutSummary, ScheduleReport, SeriesTable, StochasticReport,
};
use crate::{Error, Result};

#[derive(Debug, Parser)]
#[command(
    name = "fsdp",
    version,
    about = "Battery scheduling by dynamic programming with state augmentation"
)]
pub struct Cli {
    /// Worker threads for the solvers; 0 uses every available core.
    /// Results do not depend on this.
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve one day; `mode = "stochastic"` in the config runs `solve-stochastic`.
    Solve(SolveArgs),
    /// Solve with forecast solar from a fitted model and simulate the policy.
    SolveStochastic(SolveArgs),
    /// Fit a Gauss-Markov solar model to a multi-day series.
    FitSolar(FitArgs),
    /// Sample solar paths from a fitted model.
    SampleSolar(SampleArgs),
    /// Enumerate the three-stage running-maximum counterexample.
    VerifyCounterexample(CounterexampleArgs),
    /// Compare augmented backward induction with enumeration on random instances.
    OracleCheck(OracleArgs),
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    /// TOML run configuration.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Override a config key, `key=value`; repeatable, applied after the file.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
    /// Overrides the config `seed`.
    #[arg(long)]
    pub seed: Option<u64>,
    /// CSV day profile: `load[kW]` and, for deterministic runs, `solar[kW]`.
    #[arg(long)]
    pub profile: PathBuf,
    /// Fitted model file; required for stochastic runs.
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// CSV with `day`, `step` and one column per variable, solar power first.
    #[arg(long)]
    pub data: PathBuf,
    /// Model file to write.
    #[arg(long)]
    pub out: PathBuf,
    /// Lower bound on the per-step standard deviation.
    #[arg(long, default_value_t = 1e-6)]
    pub sigma_floor: f64,
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Steps per path; defaults to the model's profile length.
    #[arg(long)]
    pub steps: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1)]
    pub paths: usize,
    /// CSV to write.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct CounterexampleArgs {
    /// Step size of the state and input grids.
    #[arg(long, default_value_t = 1.0)]
    pub h: f64,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    #[arg(long, default_value_t = 100)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

/// Parses `args` (program name first) and runs. Returns the exit code: 0 on
/// success, 1 for invalid input, 2 for infeasible or failed runs.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write, color: bool) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let text = if color {
                e.render().ansi().to_string()
            } else {
                e.render().to_string()
            };
            let _ = if code == 0 {
                write!(out, "{text}")
            } else {
                write!(err, "{text}")
            };
            return code;
        }
    };
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build() {
        Ok(p) => p,
        Err(e) => {
            let _ = writeln!(err, "{}: {e}", prefix(color));
            return 1;
        }
    };
    let mut buf = Vec::new();
    let result = pool.install(|| dispatch(cli.command, &mut buf));
    let _ = out.write_all(&buf);
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "{}: {e}", prefix(color));
            e.exit_code()
        }
    }
}

fn prefix(color: bool) -> &'static str {
    if color {
        "\x1b[1;31merror\x1b[0m"
    } else {
        "error"
    }
}

fn dispatch(command: Command, out: &mut dyn Write) -> Result<i32> {
    match command {
        Command::Solve(a) => {
            let cfg = load_config(&a)?;
            match cfg.mode {
                Mode::Deterministic => solve(&a, &cfg, out),
                Mode::Stochastic => solve_stoch(&a, &cfg, out),
            }
        }
        Command::SolveStochastic(a) => {
            let cfg = load_config(&a)?;
            solve_stoch(&a, &cfg, out)
        }
        Command::FitSolar(a) => fit(&a, out),
        Command::SampleSolar(a) => sample(&a, out),
        Command::VerifyCounterexample(a) => verify(&a, out),
        Command::OracleCheck(a) => oracle(&a, out),
    }
}

fn load_config(a: &SolveArgs) -> Result<RunConfig> {
    let mut overrides = a.set.clone();
    if let Some(seed) = a.seed {
        overrides.push(format!("seed={seed}"));
    }
    RunConfig::load(a.config.as_deref(), &overrides)
}

fn grid_settings(cfg: &RunConfig, peak_points: usize) -> GridSettings {
    GridSettings {
        energy_points: cfg.grids.energy_points,
        input_points: cfg.grids.input_points,
        peak_grid: cfg.peak_grid_label(),
        peak_points,
    }
}

fn io_err(e: std::io::Error) -> Error {
    Error::io("<stdout>", e)
}

fn solve(a: &SolveArgs, cfg: &RunConfig, out: &mut dyn Write) -> Result<i32> {
    let profile = load_timeseries(&a.profile)?.day_profile()?;
    let instance = cfg.battery_instance(profile);
    instance.validate()?;
    let best = solve_deterministic(&instance)?;
    let idle = idle_schedule(&instance)?;
    let greedy = greedy_peak_shaving(&instance)?;
    crate::io::write_schedule(a.out.join("schedule.csv"), &best)?;
    let report = ScheduleReport {
        energy_cost: best.energy_cost,
        demand_charge: best.demand_charge,
        total_cost: best.total_cost,
        peak_on_peak_demand: best.peak_on_peak_demand,
        steps: best.inputs.len(),
        baselines: Some(Baselines {
            idle_total_cost: idle.total_cost,
            greedy_total_cost: greedy.total_cost,
        }),
        grid: grid_settings(cfg, instance.peak_axis()?.len()),
        seed: cfg.seed,
        mode: Mode::Deterministic.as_str().into(),
    };
    report.write(a.out.join("report.json"))?;
    summary(out, &best).map_err(io_err)?;
    writeln!(
        out,
        "idle baseline {:.6}, greedy baseline {:.6}",
        idle.total_cost, greedy.total_cost
    )
    .map_err(io_err)?;
    Ok(0)
}

fn summary(out: &mut dyn Write, s: &ScheduleResult) -> std::io::Result<()> {
    writeln!(
        out,
        "total cost {:.6} (energy {:.6}, demand {:.6}), on-peak peak {:.6} kW",
        s.total_cost, s.energy_cost, s.demand_charge, s.peak_on_peak_demand
    )
}

fn solve_stoch(a: &SolveArgs, cfg: &RunConfig, out: &mut dyn Write) -> Result<i32> {
    let model_path = a
        .model
        .as_ref()
        .ok_or_else(|| Error::Config("stochastic runs need --model".into()))?;
    let (_, model) = read_model(model_path)?;
    let load = load_timeseries(&a.profile)?.power_column("load")?;
    let instance = cfg.stochastic_instance(load, model);
    instance.validate()?;
    let solved = solve_stochastic(&instance)?;
    let cmp = compare_with_clairvoyant(&instance, &solved, cfg.paths, cfg.seed)?;
    let problem = &solved.problem;
    let first = solved
        .solution
        .policy
        .action(0, problem.initial_id())
        .map(|u| problem.input_grid().point(u)[0])
        .ok_or(fsdp_core::Error::Infeasible { stage: 0 })?;
    let report = StochasticReport {
        expected_cost: solved.expected_cost,
        states: problem.state_grid().len(),
        quadrature_nodes: problem.quadrature().len(),
        clamped_successors: solved.solution.clamped,
        first_input: first,
        rollout: RolloutSummary {
            paths: cfg.paths,
            mean_realized_cost: cmp.mean_stochastic,
            mean_clairvoyant_cost: cmp.mean_clairvoyant,
            mean_gap: cmp.mean_gap,
            min_gap: cmp.min_gap,
            solar_clamped: cmp.solar_clamped,
        },
        grid: grid_settings(cfg, problem.state_grid().axes()[1].len()),
        noise: NoiseSettings {
            w_points: cfg.noise.w_points,
            w_range: cfg.noise.w_range,
            nodes_per_dim: cfg.noise.nodes_per_dim,
            strict: cfg.noise.strict,
        },
        seed: cfg.seed,
        mode: Mode::Stochastic.as_str().into(),
    };
    crate::io::write_json(a.out.join("report.json"), &report)?;
    let table = SeriesTable {
        columns: ["realized", "clairvoyant", "gap"]
            .iter()
            .map(|n| Column {
                name: (*n).into(),
                unit: "USD".into(),
            })
            .collect(),
        days: vec![MultiSeries::from_columns(&[
            cmp.stochastic.clone(),
            cmp.clairvoyant.clone(),
            cmp.stochastic
                .iter()
                .zip(&cmp.clairvoyant)
                .map(|(s, c)| s - c)
                .collect(),
        ])?],
    };
    write_timeseries(a.out.join("rollout.csv"), &table)?;
    writeln!(
        out,
        "expected cost {:.6}; over {} paths: realized {:.6}, clairvoyant {:.6}, gap {:.6}",
        solved.expected_cost, cfg.paths, cmp.mean_stochastic, cmp.mean_clairvoyant, cmp.mean_gap
    )
    .map_err(io_err)?;
    Ok(0)
}

fn fit(a: &FitArgs, out: &mut dyn Write) -> Result<i32> {
    if !(a.sigma_floor.is_finite() && a.sigma_floor >= 0.0) {
        return Err(Error::Config("--sigma-floor must be a nonnegative number".into()));
    }
    let table = load_timeseries(&a.data)?;
    if table.columns.first().map(|c| c.unit.as_str()) != Some("kW") {
        return Err(Error::format(
            &a.data,
            Some(1),
            "the first variable must be solar power",
        ));
    }
    let floor = (a.sigma_floor > 0.0).then_some(a.sigma_floor);
    let profile = NormalizationProfile::from_ensemble(&table.days, floor)?;
    let normalized = table
        .days
        .iter()
        .map(|d| profile.normalize(d))
        .collect::<fsdp_core::Result<Vec<_>>>()?;
    let lags = LagMatrices::estimate(&normalized)?;
    let (process, diagnostics) = fit_gauss_markov(&lags)?;
    write_model(
        &a.out,
        &ModelFile::new(&table.columns, &process, &lags, &diagnostics, &profile),
    )?;
    let report = FitReport {
        days: table.days.len(),
        steps: profile.steps(),
        variables: profile.vars(),
    };
    writeln!(
        out,
        "fitted {} variables on {} days of {} steps; cond(M0) {:.3e}, ridge {:e}, spectral radius {:.4}",
        report.variables,
        report.days,
        report.steps,
        diagnostics.condition_number,
        diagnostics.ridge,
        diagnostics.spectral_radius
    )
    .map_err(io_err)?;
    Ok(0)
}

fn sample(a: &SampleArgs, out: &mut dyn Write) -> Result<i32> {
    let (file, model) = read_model(&a.model)?;
    let steps = a.steps.unwrap_or(model.steps());
    if steps == 0 || a.paths == 0 {
        return Err(Error::Config("--steps and --paths must be positive".into()));
    }
    let mut columns = vec![Column {
        name: "solar".into(),
        unit: "kW".into(),
    }];
    columns.extend(file.variables.iter().map(|v| Column {
        name: format!("w_{v}"),
        unit: "1".into(),
    }));
    let mut days = Vec::with_capacity(a.paths);
    let mut clamped = 0;
    for p in 0..a.paths {
        let path = model.sample_solar(steps, a.seed, p as u64)?;
        clamped += path.clamped;
        let mut cols = vec![path.solar];
        cols.extend((0..path.w.vars()).map(|i| path.w.column(i)));
        days.push(MultiSeries::from_columns(&cols)?);
    }
    write_timeseries(&a.out, &SeriesTable { columns, days })?;
    writeln!(
        out,
        "{} paths of {steps} steps; {clamped} solar samples clamped at zero",
        a.paths
    )
    .map_err(io_err)?;
    Ok(0)
}

fn fmt_seq(us: &[Vec<f64>]) -> String {
    let parts: Vec<String> = us.iter().map(|u| format!("{}", u[0])).collect();
    format!("({})", parts.join(", "))
}

fn verify(a: &CounterexampleArgs, out: &mut dyn Write) -> Result<i32> {
    if !(a.h.is_finite() && a.h > 0.0) {
        return Err(Error::Config("--h must be positive".into()));
    }
    let problem = counterexample(a.h);
    let all = feasible_trajectories(&problem, None)?;
    let best = brute_force_solve(&problem, None)?;
    let violations = check_principle_of_optimality(&problem, None)?;
    let w = io_err;
    writeln!(out, "{} feasible input sequences", all.len()).map_err(w)?;
    for t in &all {
        writeln!(out, "  u = {:<16} cost {}", fmt_seq(&t.inputs), t.objective_value).map_err(w)?;
    }
    writeln!(
        out,
        "optimum u = {} cost {}",
        fmt_seq(&best.inputs),
        best.objective_value
    )
    .map_err(w)?;
    writeln!(out, "{} principle-of-optimality violation(s)", violations.len()).map_err(w)?;
    for v in &violations {
        writeln!(
            out,
            "  s = {}: tail {} costs {}, optimal tail {} costs {}",
            v.stage,
            fmt_seq(&v.tail_inputs),
            v.tail_cost,
            fmt_seq(&v.optimal_inputs),
            v.optimal_cost
        )
        .map_err(w)?;
    }
    Ok(0)
}

fn oracle(a: &OracleArgs, out: &mut dyn Write) -> Result<i32> {
    if a.trials == 0 {
        return Err(Error::Config("--trials must be positive".into()));
    }
    let trials = oracle_check(a.trials, a.seed)?;
    for kind in ObjectiveKind::ALL {
        let of_kind: Vec<_> = trials.iter().filter(|t| t.kind == kind).collect();
        let passed = of_kind.iter().filter(|t| t.passed()).count();
        writeln!(out, "{kind:?}: {passed}/{} passed", of_kind.len()).map_err(io_err)?;
    }
    for t in trials.iter().filter(|t| !t.passed()) {
        writeln!(
            out,
            "  trial {} failed: brute force {}, augmented {}, recovered {}, violations {}",
            t.trial, t.brute_force, t.augmented, t.recovered, t.product_violations
        )
        .map_err(io_err)?;
    }
    let passed = trials.iter().filter(|t| t.passed()).count();
    writeln!(out, "{passed}/{} passed", trials.len()).map_err(io_err)?;
    Ok(if passed == trials.len() { 0 } else { 2 })
}
