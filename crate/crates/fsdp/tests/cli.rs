mod common;

use common::{cli, p, reference, synthetic_day, write_inputs};
use fsdp::io::{read_json, read_model, read_schedule, ScheduleReport, StochasticReport};
use fsdp_core::battery::{battery_step, PeakGrid};
use fsdp_core::dp::{bellman_backward, AdditiveObjective, FiniteHorizonProblem, StateGrid};

#[test]
fn counterexample_table() {
    let r = cli(&["verify-counterexample", "--h", "1"]);
    assert_eq!(r.code, 0, "{}", r.err);
    assert!(r.out.contains("8 feasible input sequences"));
    let lines: Vec<String> = r
        .out
        .lines()
        .map(|l| l.split_whitespace().collect::<Vec<_>>().join(" "))
        .collect();
    for (u, c) in [
        ("(0, 0, 0)", "0"),
        ("(0, 1, -1)", "2.5"),
        ("(1, -1, 1)", "-1.5"),
        ("(1, 0, -1)", "0.5"),
    ] {
        assert!(lines.contains(&format!("u = {u} cost {c}")), "{u}: {}", r.out);
    }
    assert!(r.out.contains("optimum u = (1, -1, 1) cost -1.5"));
    assert!(r.out.contains("1 principle-of-optimality violation(s)"));
    assert!(r.out.contains("s = 2: tail (1) costs 0.5, optimal tail (0) costs 0"));
}

#[test]
fn oracle_check_small() {
    let r = cli(&["oracle-check", "--trials", "12", "--seed", "3"]);
    assert_eq!(r.code, 0, "{}", r.out);
    assert!(r.out.ends_with("12/12 passed\n"), "{}", r.out);
}

#[test]
fn solve_writes_schedule_and_report() {
    let dir = tempfile::tempdir().unwrap();
    write_inputs(dir.path());
    let out = dir.path().join("out");
    let r = cli(&[
        "solve",
        "--config",
        p(&dir.path().join("reference.toml")),
        "--profile",
        p(&dir.path().join("day.csv")),
        "--out",
        p(&out),
    ]);
    assert_eq!(r.code, 0, "{}", r.err);
    let rep: ScheduleReport = read_json(out.join("report.json")).unwrap();
    assert_eq!(rep.steps, 48);
    assert!((rep.total_cost - rep.energy_cost - rep.demand_charge).abs() < 1e-12);
    let base = rep.baselines.unwrap();
    assert!(rep.total_cost <= base.idle_total_cost && rep.total_cost <= base.greedy_total_cost);
    let s = read_schedule(out.join("schedule.csv")).unwrap();
    assert_eq!(s.energy.len(), 49);
    assert_eq!(s.energy[0], 4.0);
    assert_eq!(s.on_peak.iter().filter(|&&f| f).count(), 14);
}

#[test]
fn zero_demand_price_equals_plain_additive_solve() {
    let dir = tempfile::tempdir().unwrap();
    write_inputs(dir.path());
    let out = dir.path().join("out");
    let r = cli(&[
        "solve",
        "--config",
        p(&dir.path().join("reference.toml")),
        "--set",
        "p_d=0",
        "--profile",
        p(&dir.path().join("day.csv")),
        "--out",
        p(&out),
    ]);
    assert_eq!(r.code, 0, "{}", r.err);
    let rep: ScheduleReport = read_json(out.join("report.json")).unwrap();

    let cfg = reference();
    let inst = cfg.battery_instance(synthetic_day());
    let (params, plan, day) = (cfg.params.clone(), cfg.plan.clone(), synthetic_day());
    let plain = FiniteHorizonProblem::builder(0, 48)
        .states(StateGrid::new(vec![inst.energy_axis().unwrap()]).unwrap())
        .inputs(inst.input_grid().unwrap())
        .dynamics(move |x, u, _, o| o[0] = battery_step(&params, x[0], u[0]))
        .objective(AdditiveObjective::new(
            move |_, u, k| plan.price(k) * (day.load[k] - day.solar[k] + u[0]) * 0.5,
            |_| 0.0,
        ))
        .initial_state(vec![cfg.e0])
        .build()
        .unwrap();
    let (v, _) = bellman_backward(&plain).unwrap();
    let expected = v.get(0, plain.initial_id());
    assert!(
        (rep.total_cost - expected).abs() <= 1e-12 * (1.0 + expected.abs()),
        "{} vs {expected}",
        rep.total_cost
    );
    assert_eq!(rep.demand_charge, 0.0);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    write_inputs(dir.path());
    let cfg = p(&dir.path().join("reference.toml")).to_string();
    let day = p(&dir.path().join("day.csv")).to_string();
    let out = p(&dir.path().join("o")).to_string();
    let base = ["solve", "--config", &cfg, "--profile", &day, "--out", &out];

    assert_eq!(cli(&["--help"]).code, 0);
    assert_eq!(cli(&["frobnicate"]).code, 1);
    assert_eq!(cli(&["solve", "--bogus"]).code, 1);

    let r = cli(&[&base[..], &["--set", "eta=1.5"]].concat());
    assert_eq!(r.code, 1);
    assert!(r.err.contains("eta"), "{}", r.err);
    let r = cli(&[&base[..], &["--set", "colour=blue"]].concat());
    assert_eq!(r.code, 1);
    assert!(r.err.contains("colour"), "{}", r.err);
    let r = cli(&[
        "solve",
        "--config",
        &cfg,
        "--profile",
        "/nonexistent.csv",
        "--out",
        &out,
    ]);
    assert_eq!(r.code, 1);
    let r = cli(&[&base[..], &["--set", "mode=\"stochastic\""]].concat());
    assert_eq!(r.code, 1);
    assert!(r.err.contains("--model"), "{}", r.err);
}

#[test]
fn help_lists_every_flag() {
    let r = cli(&["solve", "--help"]);
    for flag in [
        "--config",
        "--set",
        "--seed",
        "--profile",
        "--model",
        "--out",
        "--threads",
    ] {
        assert!(r.out.contains(flag), "{flag} missing from\n{}", r.out);
    }
}

#[test]
fn fit_sample_and_stochastic_solve() {
    let dir = tempfile::tempdir().unwrap();
    write_inputs(dir.path());
    let d = |n: &str| dir.path().join(n);
    let r = cli(&[
        "fit-solar",
        "--data",
        p(&d("weather.csv")),
        "--out",
        p(&d("model.json")),
    ]);
    assert_eq!(r.code, 0, "{}", r.err);
    let (file, model) = read_model(d("model.json")).unwrap();
    assert_eq!(file.variables, ["solar", "temp"]);
    assert_eq!(model.steps(), 48);
    assert!((file.a[0][0] - 0.75).abs() < 0.15, "{:?}", file.a);

    let r = cli(&[
        "sample-solar",
        "--model",
        p(&d("model.json")),
        "--paths",
        "3",
        "--seed",
        "9",
        "--out",
        p(&d("paths.csv")),
    ]);
    assert_eq!(r.code, 0, "{}", r.err);
    let paths = fsdp::io::load_timeseries(d("paths.csv")).unwrap();
    assert_eq!(paths.days.len(), 3);
    assert!(paths.days.iter().all(|s| (0..48).all(|t| s.get(t, 0) >= 0.0)));

    let r = cli(&[
        "solve-stochastic",
        "--config",
        p(&d("reference.toml")),
        "--set",
        "e_points=11",
        "--set",
        "u_points=5",
        "--set",
        "m_points=9",
        "--set",
        "w_points=5",
        "--set",
        "nodes_per_dim=2",
        "--set",
        "paths=8",
        "--profile",
        p(&d("day.csv")),
        "--model",
        p(&d("model.json")),
        "--out",
        p(&d("stoch")),
    ]);
    assert_eq!(r.code, 0, "{}", r.err);
    let rep: StochasticReport = read_json(d("stoch/report.json")).unwrap();
    assert_eq!(rep.states, 11 * 9 * 25);
    assert_eq!(rep.quadrature_nodes, 4);
    assert!(rep.rollout.min_gap >= -1e-9);
    let rollout = fsdp::io::load_timeseries(d("stoch/rollout.csv")).unwrap();
    assert_eq!(rollout.days[0].steps(), 8);
}

#[test]
fn state_cap_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    write_inputs(dir.path());
    let d = |n: &str| dir.path().join(n);
    assert_eq!(
        cli(&["fit-solar", "--data", p(&d("weather.csv")), "--out", p(&d("m.json"))]).code,
        0
    );
    let r = cli(&[
        "solve-stochastic",
        "--config",
        p(&d("reference.toml")),
        "--set",
        "max_states=1000",
        "--profile",
        p(&d("day.csv")),
        "--model",
        p(&d("m.json")),
        "--out",
        p(&d("o")),
    ]);
    assert_eq!(r.code, 1, "{}", r.err);
}

#[test]
fn exact_peak_grid_is_never_worse_than_uniform() {
    let cfg = reference();
    let mut inst = cfg.battery_instance(synthetic_day());
    let uniform = fsdp_core::battery::solve_deterministic(&inst).unwrap();
    inst.options.grids.peak = PeakGrid::Exact;
    let exact = fsdp_core::battery::solve_deterministic(&inst).unwrap();
    assert!(exact.total_cost <= uniform.total_cost + 1e-12);
}
