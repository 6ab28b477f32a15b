//! `bbm`: eigenvalue reports, particle-system simulation, Feynman-Kac
//! estimation, and theorem-level experiment suites for branching Brownian
//! motion with atom or shell branching rates.

use anyhow::{bail, Context, Result};
use bbm::eigen::{rate_profile, solve_for_scenario};
use bbm::engine::{run_replicas, Backend, EngineParams, ObservableSpec};
use bbm::experiments::{
    emit_report, run_critical_experiment, run_growth_experiment, run_spread_experiment,
    run_survival_experiment, run_tail_experiment, ExperimentReport, Verdict,
};
use bbm::fk::{estimate_fk, estimate_tail_fk, fkpp_extinction_fixed_point, mckean_fk_check, TargetFn};
use bbm::model::{build_signed_nu, validate_scenario, Scenario, ScenarioConfig};
use bbm::samplers::{default_epsilon, RngStream};
use clap::{Parser, Subcommand, ValueEnum};
use std::path::PathBuf;

#[derive(Parser)]
#[command(name = "bbm", version, about = "Branching Brownian motion toolkit")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Solve the principal eigenvalue for a scenario and print the rate
    /// profile plus a ground-state profile table (CSV: x,h).
    Eigen {
        /// Scenario config file (TOML).
        #[arg(long)]
        config: PathBuf,
        /// Number of profile sample points.
        #[arg(long, default_value_t = 200)]
        profile_points: usize,
    },
    /// Validate a scenario config and report every invariant violation.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Simulate replicas and write per-replica observables (CSV) plus a
    /// JSON summary of means and standard errors.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Output directory (CSV + JSON); stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Feynman-Kac estimators over non-branching paths.
    Fk {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_enum)]
        target: FkTarget,
        /// Tail slope delta (tail target).
        #[arg(long)]
        delta: Option<f64>,
        /// Norm threshold (mckean target).
        #[arg(long)]
        r_threshold: Option<f64>,
        /// Evaluation times, comma separated; defaults to the scenario's
        /// observation times.
        #[arg(long, value_delimiter = ',')]
        times: Vec<f64>,
        /// Monte Carlo path count.
        #[arg(long, default_value_t = 100_000)]
        n_paths: u64,
        /// Path step size.
        #[arg(long, default_value_t = 1e-3)]
        dt: f64,
    },
    /// Theorem-level experiment suites with pass/fail verdicts. Exit code 0
    /// iff no verdict fails.
    Experiment {
        #[arg(long, value_enum)]
        suite: Suite,
        /// Scenario config; a canonical single-atom binary scenario is used
        /// when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value = "reports")]
        out: PathBuf,
        /// Override the scenario seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Distributional self-tests of the stochastic primitives.
    #[command(hide = true)]
    SelftestSamplers,
}

#[derive(Clone, Copy, ValueEnum)]
enum FkTarget {
    Mean,
    Tail,
    Extinction,
    Mckean,
}

#[derive(Clone, Copy, ValueEnum, PartialEq)]
enum Suite {
    Growth,
    Spread,
    Tail,
    Critical,
    Survival,
    All,
}

fn load_config(path: &PathBuf) -> Result<(Scenario, EngineParams, ObservableSpec)> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading config {}", path.display()))?;
    let cfg = ScenarioConfig::parse(&text).context("parsing scenario config")?;
    let scenario = cfg.to_scenario()?;
    let report = validate_scenario(&scenario);
    if !report.pass {
        bail!("invalid scenario: {}", report.failures.join("; "));
    }
    let dt = cfg.run.dt.unwrap_or(1e-3);
    let epsilon = cfg.run.epsilon_factor.map(|k| k * dt.sqrt());
    let backend = match cfg.run.backend.as_deref() {
        None | Some("auto") => Backend::Auto,
        Some("event") => Backend::EventDriven,
        Some("discrete") => Backend::Discretized,
        Some(other) => bail!("unknown backend {other:?}; expected auto, event, or discrete"),
    };
    let params = EngineParams {
        backend,
        dt,
        epsilon,
        survivor_shortcut: None,
    };
    let spec = ObservableSpec {
        deltas: cfg.run.deltas.clone().unwrap_or_default(),
        directions: cfg.run.directions.clone().unwrap_or_default(),
        survivor_margin: 5.0,
    };
    Ok((scenario, params, spec))
}

fn cmd_eigen(config: &PathBuf, profile_points: usize) -> Result<()> {
    let (scenario, _, _) = load_config(config)?;
    let eigen = match solve_for_scenario(&scenario)? {
        Some(e) => e,
        None => {
            println!("lambda: none (no negative principal eigenvalue)");
            return Ok(());
        }
    };
    let profile = rate_profile(eigen.lambda)?;
    println!("lambda: {}", eigen.lambda);
    println!("decay_rate: {}", eigen.decay_rate);
    println!("critical_delta: {}", profile.critical_delta);
    println!("ballistic_delta: {}", profile.ballistic_delta);
    println!("x,h");
    let d = scenario.measure.dimension();
    let extent = scenario.measure.support_extent() + 10.0 / eigen.decay_rate;
    for i in 0..=profile_points {
        let x = if d == 1 {
            -extent + 2.0 * extent * i as f64 / profile_points as f64
        } else {
            extent * i as f64 / profile_points as f64
        };
        let mut point = vec![0.0; d];
        point[0] = x;
        println!("{x},{}", eigen.eval(&point));
    }
    Ok(())
}

fn cmd_validate(config: &PathBuf) -> Result<()> {
    let text = std::fs::read_to_string(config)?;
    let cfg = ScenarioConfig::parse(&text).context("parsing scenario config")?;
    let report = validate_scenario(&cfg.to_scenario()?);
    if report.pass {
        println!("pass");
        Ok(())
    } else {
        for f in &report.failures {
            println!("fail: {f}");
        }
        bail!("scenario invalid")
    }
}

fn cmd_simulate(config: &PathBuf, out: Option<&PathBuf>) -> Result<()> {
    let (scenario, params, spec) = load_config(config)?;
    let eigen = solve_for_scenario(&scenario)?;
    let ens = run_replicas(&scenario, &params, eigen.as_ref(), &spec)?;
    // CSV: replica, t, Z, Z_delta_*, L, L_r_*, M, extinct.
    let mut csv = String::from("replica,t,Z");
    for d in &spec.deltas {
        csv.push_str(&format!(",Z_delta_{d}"));
    }
    csv.push_str(",L");
    for (j, _) in spec.directions.iter().enumerate() {
        csv.push_str(&format!(",L_r_{j}"));
    }
    csv.push_str(",M,extinct\n");
    for (rep, series) in ens.series.iter().enumerate() {
        for row in &series.rows {
            csv.push_str(&format!("{rep},{},{}", row.t, row.z));
            for v in &row.z_delta {
                csv.push_str(&format!(",{v}"));
            }
            csv.push_str(&format!(",{}", row.l));
            for v in &row.l_dir {
                csv.push_str(&format!(",{v}"));
            }
            match row.m {
                Some(m) => csv.push_str(&format!(",{m}")),
                None => csv.push(','),
            }
            csv.push_str(&format!(",{}\n", row.z == 0));
        }
    }
    // JSON summary: per-time means and standard errors over usable replicas.
    let mut summary = serde_json::Map::new();
    summary.insert("scenario_digest".into(), ens.scenario_digest.clone().into());
    summary.insert("replicas".into(), (ens.series.len() as u64).into());
    summary.insert("capped".into(), (ens.capped_count() as u64).into());
    summary.insert(
        "extinct".into(),
        (ens.series.iter().filter(|s| s.extinct).count() as u64).into(),
    );
    let mut rows_json = Vec::new();
    let n_rows = ens.series.first().map_or(0, |s| s.rows.len());
    for row in 0..n_rows {
        let mut z = bbm::numeric::MeanVar::default();
        let mut l = bbm::numeric::MeanVar::default();
        let mut m = bbm::numeric::MeanVar::default();
        let mut t = 0.0;
        for s in ens.series.iter().filter(|s| !s.capped) {
            t = s.rows[row].t;
            z.push(s.rows[row].z as f64);
            l.push(s.rows[row].l);
            if let Some(mv) = s.rows[row].m {
                m.push(mv);
            }
        }
        let mut obj = serde_json::Map::new();
        obj.insert("t".into(), t.into());
        obj.insert("Z_mean".into(), z.mean().into());
        obj.insert("Z_se".into(), z.std_error().into());
        obj.insert("L_mean".into(), l.mean().into());
        obj.insert("L_se".into(), l.std_error().into());
        if m.count() > 0 {
            obj.insert("M_mean".into(), m.mean().into());
            obj.insert("M_se".into(), m.std_error().into());
        }
        rows_json.push(serde_json::Value::Object(obj));
    }
    summary.insert("observations".into(), serde_json::Value::Array(rows_json));
    let mut json = serde_json::to_string_pretty(&serde_json::Value::Object(summary))?;
    json.push('\n');
    match out {
        Some(dir) => {
            std::fs::create_dir_all(dir)?;
            std::fs::write(dir.join("replicas.csv"), csv)?;
            std::fs::write(dir.join("summary.json"), &json)?;
            println!("wrote {}/replicas.csv and summary.json", dir.display());
        }
        None => {
            print!("{csv}");
            print!("{json}");
        }
    }
    Ok(())
}

fn cmd_fk(
    config: &PathBuf,
    target: FkTarget,
    delta: Option<f64>,
    r_threshold: Option<f64>,
    times: &[f64],
    n_paths: u64,
    dt: f64,
) -> Result<()> {
    let (scenario, _, _) = load_config(config)?;
    let nu = build_signed_nu(&scenario.measure, &scenario.mechanism)?;
    let times: Vec<f64> = if times.is_empty() {
        scenario.observation_times.clone()
    } else {
        times.to_vec()
    };
    let eps = default_epsilon(dt);
    let rng = RngStream::new(scenario.seed, 0);
    println!("t,value,se");
    match target {
        FkTarget::Mean => {
            for (i, &t) in times.iter().enumerate() {
                let est = estimate_fk(
                    &scenario.initial_position,
                    t,
                    TargetFn::One,
                    &nu,
                    n_paths,
                    dt,
                    eps,
                    &rng.substream(i as u64),
                )?;
                println!("{t},{},{}", est.value, est.std_error);
            }
        }
        FkTarget::Tail => {
            let delta = delta.context("--delta is required for the tail target")?;
            for (i, &t) in times.iter().enumerate() {
                let est = estimate_tail_fk(
                    &scenario.initial_position,
                    t,
                    delta,
                    0.0,
                    &nu,
                    n_paths,
                    dt,
                    eps,
                    &rng.substream(i as u64),
                )?;
                println!("{t},{},{}", est.value, est.std_error);
            }
        }
        FkTarget::Extinction => {
            let u = fkpp_extinction_fixed_point(&scenario.mechanism.site_pmfs[0])?;
            println!("0,{u},0");
        }
        FkTarget::Mckean => {
            let r = r_threshold.context("--r-threshold is required for the mckean target")?;
            for (i, &t) in times.iter().enumerate() {
                let est = mckean_fk_check(
                    &scenario.initial_position,
                    t,
                    r,
                    &scenario.measure,
                    n_paths,
                    dt,
                    eps,
                    &rng.substream(i as u64),
                )?;
                println!("{t},{},{}", est.value, est.std_error);
            }
        }
    }
    Ok(())
}

fn default_scenario(seed: u64) -> Scenario {
    Scenario::single_atom_binary(1.0, 0.0, 20.0, vec![20.0], seed, 200)
}

fn cmd_experiment(
    suite: Suite,
    config: Option<&PathBuf>,
    out: &PathBuf,
    seed: Option<u64>,
) -> Result<()> {
    let (scenario, params) = match config {
        Some(path) => {
            let (s, p, _) = load_config(path)?;
            (s, p)
        }
        None => (default_scenario(seed.unwrap_or(2024)), EngineParams::auto()),
    };
    let mut scenario = scenario;
    if let Some(seed) = seed {
        scenario.seed = seed;
    }
    let mut reports: Vec<ExperimentReport> = Vec::new();
    let run_one = |suite: Suite, scenario: &Scenario| -> Result<ExperimentReport> {
        Ok(match suite {
            Suite::Growth => run_growth_experiment(
                scenario,
                &[0.0, 0.25],
                &[8.0, 10.0, 12.0, 14.0, 16.0, 18.0, 20.0],
                &params,
            )?,
            Suite::Spread => run_spread_experiment(scenario, 20.0, &[], &params)?,
            Suite::Tail => {
                let mut s = scenario.clone();
                s.replica_count = s.replica_count.max(2000);
                run_tail_experiment(
                    &s,
                    &[0.75, 1.5],
                    &[4.0, 6.0, 8.0, 10.0, 12.0, 14.0, 16.0],
                    &params,
                    20_000,
                    1e-3,
                )?
            }
            Suite::Critical => run_critical_experiment(
                scenario,
                &[5.0, 7.5, 10.0, 12.5, 15.0],
                &params,
            )?,
            Suite::Survival => {
                let mut s = scenario.clone();
                if s.mechanism.site_pmfs.iter().all(|p| p[0] == 0.0) {
                    // The canonical survival scenario needs deaths.
                    s.mechanism = bbm::model::BranchingMechanism::birth_death(
                        s.mechanism.sites(),
                        0.2,
                    );
                }
                s.replica_count = s.replica_count.max(10_000);
                // Long declaration horizon so the heavy-tailed waiting times
                // have converged; survivors stop early via the shortcut.
                let sp = EngineParams {
                    survivor_shortcut: Some(4096),
                    ..params
                };
                run_survival_experiment(&s, 10_000.0, &sp)?
            }
            Suite::All => unreachable!(),
        })
    };
    if suite == Suite::All {
        for s in [Suite::Growth, Suite::Spread, Suite::Tail, Suite::Critical, Suite::Survival] {
            reports.push(run_one(s, &scenario)?);
        }
    } else {
        reports.push(run_one(suite, &scenario)?);
    }
    let mut any_fail = false;
    for report in &reports {
        let (json, csv) = emit_report(report, out)?;
        let overall = report.overall();
        println!(
            "{}: {:?} ({} quantities, survivors {:?}) -> {}, {}",
            report.experiment,
            overall,
            report.quantities.len(),
            report.survivor_count,
            json.display(),
            csv.display()
        );
        for q in &report.quantities {
            println!(
                "  {}: estimate {} target {:?} tol {:?} -> {:?}",
                q.name, q.estimate, q.target, q.tolerance, q.verdict
            );
        }
        if overall == Verdict::Fail {
            any_fail = true;
        }
    }
    if any_fail {
        bail!("at least one experiment verdict failed");
    }
    Ok(())
}

fn cmd_selftest() -> Result<()> {
    use bbm::numeric::normal_cdf;
    let mut failures = 0;
    let mut check = |name: &str, ok: bool, detail: String| {
        println!("{}: {name} ({detail})", if ok { "PASS" } else { "FAIL" });
        if !ok {
            failures += 1;
        }
    };
    let n = 100_000;
    // First passage CDF at t=1 from x=1.
    {
        let mut rng = RngStream::new(901, 0);
        let mut hits = 0u64;
        for _ in 0..n {
            if bbm::samplers::sample_first_passage(&mut rng, 1.0) <= 1.0 {
                hits += 1;
            }
        }
        let freq = hits as f64 / n as f64;
        let target = 2.0 * normal_cdf(-1.0);
        check(
            "first_passage_cdf",
            (freq - target).abs() < 0.01,
            format!("{freq:.5} vs {target:.5}"),
        );
    }
    // Inverse local time Laplace transform.
    {
        let mut rng = RngStream::new(902, 0);
        let mut acc = 0.0;
        for _ in 0..n {
            acc += (-0.5 * bbm::samplers::sample_inverse_local_time(&mut rng, 1.0)?).exp();
        }
        let mean = acc / n as f64;
        let target = (-1.0f64).exp();
        check(
            "inverse_local_time_laplace",
            (mean - target).abs() < 0.005,
            format!("{mean:.5} vs {target:.5}"),
        );
    }
    // Gaussian step variance.
    {
        let mut rng = RngStream::new(903, 0);
        let dt = 0.7;
        let mut sumsq = 0.0;
        for _ in 0..n {
            let v = bbm::samplers::sample_gaussian_step(&mut rng, dt, 1)?[0];
            sumsq += v * v;
        }
        let var = sumsq / n as f64;
        check(
            "gaussian_step_variance",
            (var - dt).abs() / dt < 0.02,
            format!("{var:.5} vs {dt}"),
        );
    }
    // Regularized local time mean at t=1.
    {
        let mut rng = RngStream::new(904, 0);
        let dt = 1e-4;
        let eps = default_epsilon(dt);
        let paths = 5_000;
        let steps = (1.0 / dt) as usize;
        let sqrt_dt = dt.sqrt();
        let mut total = 0.0;
        for _ in 0..paths {
            let mut x = 0.0f64;
            let mut lt = 0.0;
            for _ in 0..steps {
                let pre = x;
                x += sqrt_dt * rng.standard_normal();
                lt += bbm::samplers::local_time_increment(pre, x, dt, eps);
            }
            total += lt;
        }
        let mean = total / paths as f64;
        let target = (2.0 / std::f64::consts::PI).sqrt();
        check(
            "local_time_mean",
            (mean - target).abs() < 0.03,
            format!("{mean:.5} vs {target:.5}"),
        );
    }
    // Survivor-position acceptance rate equals the clock survival
    // probability.
    {
        let mut rng = RngStream::new(905, 0);
        let (gamma, t): (f64, f64) = (1.0, 1.0);
        let mut accepted = 0u64;
        let mut proposals = 0u64;
        let sd = t.sqrt();
        while accepted < 50_000 {
            let b = sd * rng.standard_normal();
            let lt = bbm::samplers::sample_conditional_local_time(&mut rng, b.abs(), t);
            proposals += 1;
            if rng.uniform() < (-gamma * lt).exp() {
                accepted += 1;
            }
        }
        let rate = accepted as f64 / proposals as f64;
        let target = 2.0 * (gamma * gamma * t / 2.0).exp() * normal_cdf(-gamma * t.sqrt());
        check(
            "survivor_acceptance_rate",
            (rate - target).abs() < 0.01,
            format!("{rate:.5} vs {target:.5}"),
        );
    }
    if failures > 0 {
        bail!("{failures} sampler self-tests failed");
    }
    Ok(())
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    match &cli.cmd {
        Cmd::Eigen { config, profile_points } => cmd_eigen(config, *profile_points),
        Cmd::Validate { config } => cmd_validate(config),
        Cmd::Simulate { config, out } => cmd_simulate(config, out.as_ref()),
        Cmd::Fk {
            config,
            target,
            delta,
            r_threshold,
            times,
            n_paths,
            dt,
        } => cmd_fk(config, *target, *delta, *r_threshold, times, *n_paths, *dt),
        Cmd::Experiment { suite, config, out, seed } => {
            cmd_experiment(*suite, config.as_ref(), out, *seed)
        }
        Cmd::SelftestSamplers => cmd_selftest(),
    }
}
