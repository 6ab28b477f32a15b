//! Scenario-driven experiment suites reproducing the quantitative content
//! of the growth, spread, tail, critical-phase, and survival theorems, with
//! statistical fits, verdicts against runtime-computed targets, and
//! deterministic report emission.

mod report;

pub use report::{emit_report, ExperimentReport, FittedQuantity, Verdict};

use crate::eigen::{rate_profile, solve_for_scenario, EigenResult};
use crate::engine::{run_replicas, EngineParams, ObservableSpec, ReplicaEnsemble};
use crate::fk::{estimate_tail_fk, fkpp_extinction_fixed_point};
use crate::model::{build_signed_nu, scenario_digest, RateMeasure, Scenario};
use crate::numeric::ols_fit;
use crate::samplers::RngStream;
use crate::{Error, Result};
use std::time::Instant;

/// Default verdict tolerances. Growth/tail rates and the critical rate get
/// `+-0.05`, the ballistic tail slope `+-0.10`, the spread band `+-0.10`,
/// the extinction frequency `+-0.02`, and the tail prefactor a max/min
/// ratio of 3. Chosen to absorb the `O(log t / t)` finite-horizon
/// corrections at the default grids.
pub const RATE_TOL: f64 = 0.05;
pub const BALLISTIC_SLOPE_TOL: f64 = 0.10;
pub const SPREAD_BAND: f64 = 0.10;
pub const EXTINCTION_TOL: f64 = 0.02;
pub const PREFACTOR_RATIO_LIMIT: f64 = 3.0;
pub const CRITICAL_RATE_TOL: f64 = 0.05;

fn solve_eigen_required(s: &Scenario) -> Result<EigenResult> {
    solve_for_scenario(s)?.ok_or_else(|| {
        Error::InvalidParameter("experiment requires lambda < 0 for this scenario".into())
    })
}

fn with_observations(s: &Scenario, times: &[f64]) -> Scenario {
    let mut s = s.clone();
    s.observation_times = times.to_vec();
    s.horizon = times.last().copied().unwrap_or(s.horizon);
    s
}

fn survivor_note(s: &Scenario, ens: &ReplicaEnsemble) -> Vec<String> {
    let mut notes = vec![format!(
        "survivor conditioning: Z_T(K) >= 1 with K = support +- 5; {} of {} replicas survive, {} capped",
        ens.survivors().count(),
        ens.series.len(),
        ens.capped_count()
    )];
    if s.measure.dimension() >= 3 {
        notes.push(
            "d >= 3: survival set is a strict superset of the regular-growth set, so the \
             Z_T(K) proxy is labeled approximate"
                .into(),
        );
    }
    notes
}

/// Mean of `Z_t^{delta t}` (index `delta_idx`) over surviving replicas, per
/// observation row.
fn survivor_means(ens: &ReplicaEnsemble, delta_idx: usize) -> Vec<(f64, f64, u64)> {
    let mut out = Vec::new();
    let n_rows = match ens.series.first() {
        Some(s) => s.rows.len(),
        None => return out,
    };
    for row in 0..n_rows {
        let mut acc = 0.0;
        let mut n = 0u64;
        let mut t = 0.0;
        for s in ens.survivors() {
            t = s.rows[row].t;
            acc += s.rows[row].z_delta[delta_idx] as f64;
            n += 1;
        }
        if n > 0 {
            out.push((t, acc / n as f64, n));
        }
    }
    out
}

/// Growth of the population beyond `delta t`: below the critical delta the
/// log-mean slope is tested against `-Lambda_delta`; above it the frequency
/// of a nonempty far population must decay along the grid.
pub fn run_growth_experiment(
    s: &Scenario,
    deltas: &[f64],
    t_grid: &[f64],
    engine: &EngineParams,
) -> Result<ExperimentReport> {
    let start = Instant::now();
    let eigen = solve_eigen_required(s)?;
    let profile = rate_profile(eigen.lambda)?;
    let scenario = with_observations(s, t_grid);
    let spec = ObservableSpec::with_deltas(deltas.to_vec());
    let ens = run_replicas(&scenario, engine, Some(&eigen), &spec)?;
    let survivor_count = ens.survivors().count() as u64;
    let mut quantities = Vec::new();
    let mut notes = survivor_note(&scenario, &ens);
    for (k, &delta) in deltas.iter().enumerate() {
        if delta < profile.critical_delta {
            let means = survivor_means(&ens, k);
            let usable: Vec<(f64, f64)> = means
                .iter()
                .filter(|&&(_, m, _)| m > 0.0)
                .map(|&(t, m, _)| (t, m.ln()))
                .collect();
            if usable.len() < 2 || survivor_count == 0 {
                quantities.push(FittedQuantity::informational(
                    format!("growth_rate_delta_{delta}"),
                    f64::NAN,
                    None,
                    "insufficient surviving data",
                ));
                continue;
            }
            let xs: Vec<f64> = usable.iter().map(|&(t, _)| t).collect();
            let ys: Vec<f64> = usable.iter().map(|&(_, y)| y).collect();
            let fit = ols_fit(&xs, &ys);
            quantities.push(FittedQuantity::against_target(
                format!("growth_rate_delta_{delta}"),
                fit.slope,
                Some(fit.slope_se),
                profile.growth_rate(delta),
                RATE_TOL,
                format!("-Lambda_delta from lambda = {}", eigen.lambda),
            ));
        } else {
            // Containment direction: frequency of {Z^{delta t} >= 1} decays.
            let mut freqs = Vec::new();
            for row in 0..scenario.observation_times.len() {
                let mut hits = 0u64;
                let mut n = 0u64;
                for series in ens.series.iter().filter(|s| !s.capped) {
                    if series.rows[row].z_delta[k] >= 1 {
                        hits += 1;
                    }
                    n += 1;
                }
                freqs.push((scenario.observation_times[row], hits as f64 / n.max(1) as f64));
            }
            let xs: Vec<f64> = freqs.iter().map(|&(t, _)| t).collect();
            let ys: Vec<f64> = freqs.iter().map(|&(_, f)| f).collect();
            let fit = ols_fit(&xs, &ys);
            let verdict_estimate = fit.slope;
            quantities.push(FittedQuantity {
                name: format!("containment_freq_slope_delta_{delta}"),
                estimate: verdict_estimate,
                std_error: Some(fit.slope_se),
                target: Some(0.0),
                tolerance: None,
                provenance: "frequency of nonempty far population must not grow".into(),
                verdict: if verdict_estimate <= 1e-3 {
                    Verdict::Pass
                } else {
                    Verdict::Fail
                },
            });
            notes.push(format!(
                "delta = {delta} >= critical {:.4}: containment checked via frequency slope",
                profile.critical_delta
            ));
        }
    }
    Ok(ExperimentReport {
        experiment: "growth".into(),
        scenario_digest: ens.scenario_digest.clone(),
        seed: scenario.seed,
        replica_count: scenario.replica_count,
        survivor_count: Some(survivor_count),
        quantities,
        notes,
        runtime: start.elapsed(),
    })
}

/// Spread rate: median of `L_t / t` (and its directional analogues) over
/// survivors against `sqrt(-lambda/2)`.
pub fn run_spread_experiment(
    s: &Scenario,
    t_final: f64,
    directions: &[Vec<f64>],
    engine: &EngineParams,
) -> Result<ExperimentReport> {
    let start = Instant::now();
    let eigen = solve_eigen_required(s)?;
    let profile = rate_profile(eigen.lambda)?;
    let scenario = with_observations(s, &[t_final]);
    let spec = ObservableSpec {
        deltas: vec![],
        directions: directions.to_vec(),
        survivor_margin: 5.0,
    };
    let ens = run_replicas(&scenario, engine, Some(&eigen), &spec)?;
    let survivor_count = ens.survivors().count() as u64;
    let mut quantities = Vec::new();
    let target = profile.critical_delta;
    let mut speeds: Vec<f64> = ens.survivors().map(|s| s.rows[0].l / t_final).collect();
    if speeds.is_empty() {
        quantities.push(FittedQuantity::informational(
            "spread_median",
            f64::NAN,
            None,
            "all replicas extinct",
        ));
    } else {
        speeds.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let median = speeds[speeds.len() / 2];
        quantities.push(FittedQuantity::against_target(
            "spread_median",
            median,
            None,
            target,
            SPREAD_BAND,
            format!("sqrt(-lambda/2) with lambda = {}", eigen.lambda),
        ));
        for (j, dir) in directions.iter().enumerate() {
            let mut dir_speeds: Vec<f64> =
                ens.survivors().map(|s| s.rows[0].l_dir[j] / t_final).collect();
            dir_speeds.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let median = dir_speeds[dir_speeds.len() / 2];
            quantities.push(FittedQuantity::against_target(
                format!("spread_median_dir_{j}"),
                median,
                None,
                target,
                SPREAD_BAND,
                format!("directional spread along {dir:?}"),
            ));
        }
    }
    Ok(ExperimentReport {
        experiment: "spread".into(),
        scenario_digest: ens.scenario_digest.clone(),
        seed: scenario.seed,
        replica_count: scenario.replica_count,
        survivor_count: Some(survivor_count),
        quantities,
        notes: survivor_note(&scenario, &ens),
        runtime: start.elapsed(),
    })
}

/// Upper-deviation decay rates of `P_x(L_t >= delta t)` for `delta` beyond
/// the critical point: direct Monte Carlo in the middle regime, the tilted
/// Feynman-Kac proxy at and beyond the ballistic threshold, plus the
/// prefactor boundedness check there.
pub fn run_tail_experiment(
    s: &Scenario,
    deltas: &[f64],
    t_grid: &[f64],
    engine: &EngineParams,
    fk_paths: u64,
    fk_dt: f64,
) -> Result<ExperimentReport> {
    let start = Instant::now();
    if s.mechanism.site_pmfs.iter().any(|pmf| pmf[0] > 0.0) {
        return Err(Error::InvalidParameter(
            "tail experiment requires p0 = 0 at every site".into(),
        ));
    }
    let eigen = solve_eigen_required(s)?;
    let profile = rate_profile(eigen.lambda)?;
    let nu = build_signed_nu(&s.measure, &s.mechanism)?;
    let d = s.measure.dimension();
    let mut quantities = Vec::new();
    let mut notes = Vec::new();

    let direct_deltas: Vec<f64> = deltas
        .iter()
        .copied()
        .filter(|&d| d > profile.critical_delta && d < profile.ballistic_delta)
        .collect();
    let tilted_deltas: Vec<f64> = deltas
        .iter()
        .copied()
        .filter(|&d| d >= profile.ballistic_delta)
        .collect();
    for &delta in deltas {
        if delta <= profile.critical_delta {
            notes.push(format!(
                "delta = {delta} at or below critical {:.4}: not a tail regime, skipped",
                profile.critical_delta
            ));
        }
    }

    let scenario = with_observations(s, t_grid);
    let mut ens = None;
    if !direct_deltas.is_empty() {
        let spec = ObservableSpec::with_deltas(direct_deltas.clone());
        ens = Some(run_replicas(&scenario, engine, Some(&eigen), &spec)?);
    }
    if let Some(ens) = &ens {
        for (k, &delta) in direct_deltas.iter().enumerate() {
            let mut points = Vec::new();
            for row in 0..t_grid.len() {
                let mut hits = 0u64;
                let mut n = 0u64;
                for series in ens.series.iter().filter(|s| !s.capped) {
                    if series.rows[row].z_delta[k] >= 1 {
                        hits += 1;
                    }
                    n += 1;
                }
                if hits > 0 {
                    points.push((t_grid[row], (hits as f64 / n as f64).ln()));
                }
            }
            if points.len() < 2 {
                quantities.push(FittedQuantity::informational(
                    format!("tail_rate_delta_{delta}"),
                    f64::NAN,
                    None,
                    "tail probability below Monte Carlo resolution",
                ));
                notes.push(format!("delta = {delta}: inconclusive, too few nonzero frequencies"));
                continue;
            }
            let xs: Vec<f64> = points.iter().map(|&(t, _)| t).collect();
            let ys: Vec<f64> = points.iter().map(|&(_, y)| y).collect();
            let fit = ols_fit(&xs, &ys);
            let target = eigen.lambda + profile.ballistic_delta * delta; // lambda + A delta, negated rate
            quantities.push(FittedQuantity::against_target(
                format!("tail_rate_delta_{delta}"),
                fit.slope,
                Some(fit.slope_se),
                -target,
                RATE_TOL,
                format!("-lambda - sqrt(-2 lambda) delta from lambda = {}", eigen.lambda),
            ));
        }
    }

    for &delta in &tilted_deltas {
        let rng = RngStream::new(scenario.seed ^ 0x7a11, 0);
        let mut points = Vec::new();
        let mut rescaled = Vec::new();
        for (i, &t) in t_grid.iter().enumerate() {
            let est = estimate_tail_fk(
                &scenario.initial_position,
                t,
                delta,
                0.0,
                &nu,
                fk_paths,
                fk_dt,
                crate::samplers::default_epsilon(fk_dt),
                &rng.substream(i as u64),
            )?;
            if est.value > 0.0 {
                points.push((t, est.value.ln()));
                rescaled.push(
                    est.value * (delta * delta * t / 2.0).exp() * t.powf((2.0 - d as f64) / 2.0),
                );
            }
        }
        if points.len() < 2 {
            quantities.push(FittedQuantity::informational(
                format!("tail_fk_rate_delta_{delta}"),
                f64::NAN,
                None,
                "tilted estimates vanished",
            ));
            continue;
        }
        let xs: Vec<f64> = points.iter().map(|&(t, _)| t).collect();
        let ys: Vec<f64> = points.iter().map(|&(_, y)| y).collect();
        let fit = ols_fit(&xs, &ys);
        quantities.push(FittedQuantity::against_target(
            format!("tail_fk_rate_delta_{delta}"),
            fit.slope,
            Some(fit.slope_se),
            -delta * delta / 2.0,
            BALLISTIC_SLOPE_TOL,
            "-delta^2/2 (ballistic regime)",
        ));
        let ratio = rescaled.iter().cloned().fold(0.0_f64, f64::max)
            / rescaled.iter().cloned().fold(f64::INFINITY, f64::min);
        quantities.push(FittedQuantity {
            name: format!("tail_prefactor_ratio_delta_{delta}"),
            estimate: ratio,
            std_error: None,
            target: Some(1.0),
            tolerance: Some(PREFACTOR_RATIO_LIMIT),
            provenance: "estimate * e^{delta^2 t/2} * t^{(2-d)/2} bounded above and below".into(),
            verdict: if ratio.is_finite() && ratio < PREFACTOR_RATIO_LIMIT {
                Verdict::Pass
            } else {
                Verdict::Fail
            },
        });
    }

    let (digest, survivor_count, replica_count) = match &ens {
        Some(e) => (
            e.scenario_digest.clone(),
            Some(e.survivors().count() as u64),
            scenario.replica_count,
        ),
        None => (scenario_digest(&scenario), None, scenario.replica_count),
    };
    Ok(ExperimentReport {
        experiment: "tail".into(),
        scenario_digest: digest,
        seed: scenario.seed,
        replica_count,
        survivor_count,
        quantities,
        notes,
        runtime: start.elapsed(),
    })
}

/// Critical-phase behavior at `delta = sqrt(-lambda/2)`: subexponential
/// growth of the mean far population, the almost-sure envelope
/// `R_eps(t) = t^{(d+3)/2} (log t)(log log t)^{1+eps}`, and (for `d >= 3`)
/// an informational polynomial exponent against the paper's bracket.
pub fn run_critical_experiment(
    s: &Scenario,
    t_grid: &[f64],
    engine: &EngineParams,
) -> Result<ExperimentReport> {
    let start = Instant::now();
    if s.mechanism.site_pmfs.iter().any(|pmf| pmf[0] > 0.0) {
        return Err(Error::InvalidParameter(
            "critical experiment requires p0 = 0 at every site".into(),
        ));
    }
    let eigen = solve_eigen_required(s)?;
    let profile = rate_profile(eigen.lambda)?;
    let delta = profile.critical_delta;
    let scenario = with_observations(s, t_grid);
    let spec = ObservableSpec::with_deltas(vec![delta]);
    let ens = run_replicas(&scenario, engine, Some(&eigen), &spec)?;
    let survivor_count = ens.survivors().count() as u64;
    let d = s.measure.dimension();
    let mut quantities = Vec::new();
    let mut notes = survivor_note(&scenario, &ens);
    notes.push(format!("critical delta = {delta} from lambda = {}", eigen.lambda));

    let means = survivor_means(&ens, 0);
    let usable: Vec<(f64, f64)> = means
        .iter()
        .filter(|&&(_, m, _)| m > 0.0)
        .map(|&(t, m, _)| (t, m))
        .collect();
    if usable.len() >= 2 {
        let xs: Vec<f64> = usable.iter().map(|&(t, _)| t).collect();
        let ys: Vec<f64> = usable.iter().map(|&(_, m)| m.ln()).collect();
        let fit = ols_fit(&xs, &ys);
        quantities.push(FittedQuantity::against_target(
            "critical_exponential_rate",
            fit.slope,
            Some(fit.slope_se),
            0.0,
            CRITICAL_RATE_TOL,
            "Lambda at the critical delta vanishes",
        ));
    } else {
        quantities.push(FittedQuantity::informational(
            "critical_exponential_rate",
            f64::NAN,
            None,
            "insufficient surviving data",
        ));
    }

    // Envelope check with eps = 0.5 on every usable replica and grid time.
    let eps = 0.5;
    let envelope = |t: f64| -> f64 {
        t.powf((d as f64 + 3.0) / 2.0) * t.ln() * t.ln().ln().powf(1.0 + eps)
    };
    let mut violations = 0u64;
    for series in ens.series.iter().filter(|s| !s.capped) {
        for row in &series.rows {
            if (row.z_delta[0] as f64) > envelope(row.t) {
                violations += 1;
            }
        }
    }
    quantities.push(FittedQuantity {
        name: "envelope_violations".into(),
        estimate: violations as f64,
        std_error: None,
        target: Some(0.0),
        tolerance: Some(0.0),
        provenance: format!("R_eps(t) = t^{{(d+3)/2}} log t (log log t)^{{1+eps}}, eps = {eps}"),
        verdict: if violations == 0 { Verdict::Pass } else { Verdict::Fail },
    });

    if d >= 3 && usable.len() >= 2 {
        let xs: Vec<f64> = usable.iter().map(|&(t, _)| t.ln()).collect();
        let ys: Vec<f64> = usable.iter().map(|&(_, m)| m.ln()).collect();
        let fit = ols_fit(&xs, &ys);
        // Paper bracket: exponents between (d-2)/2 and (d+3)/2 with log
        // slack; the pinned acceptance band is [0, 2.5] for d = 3.
        let lo = 0.0;
        let hi = 2.5;
        quantities.push(FittedQuantity {
            name: "critical_polynomial_exponent".into(),
            estimate: fit.slope,
            std_error: Some(fit.slope_se),
            target: None,
            tolerance: None,
            provenance: format!(
                "informational: paper brackets the exponent in [{}, {}] plus logs; exact rate unknown",
                (d as f64 - 2.0) / 2.0,
                (d as f64 + 3.0) / 2.0
            ),
            verdict: if fit.slope >= lo && fit.slope <= hi {
                Verdict::Pass
            } else {
                Verdict::Fail
            },
        });
        notes.push(format!("d = {d} polynomial exponent band pinned to [{lo}, {hi}]"));
    }

    Ok(ExperimentReport {
        experiment: "critical".into(),
        scenario_digest: ens.scenario_digest.clone(),
        seed: scenario.seed,
        replica_count: scenario.replica_count,
        survivor_count: Some(survivor_count),
        quantities,
        notes,
        runtime: start.elapsed(),
    })
}

/// Extinction vs the generating-function fixed point: Monte Carlo extinction
/// frequency by `t_declare`, survivor frequency on the compact proxy set,
/// and branching-count diagnostics.
pub fn run_survival_experiment(
    s: &Scenario,
    t_declare: f64,
    engine: &EngineParams,
) -> Result<ExperimentReport> {
    let start = Instant::now();
    let single_atom = matches!(&s.measure, RateMeasure::Atoms1d { atoms } if atoms.len() == 1);
    if !single_atom {
        return Err(Error::InvalidParameter(
            "survival experiment requires a d = 1 single-atom model (exact fixed point)".into(),
        ));
    }
    let root = fkpp_extinction_fixed_point(&s.mechanism.site_pmfs[0])?;
    let scenario = with_observations(s, &[t_declare]);
    let spec = ObservableSpec::none();
    let ens = run_replicas(&scenario, engine, None, &spec)?;
    let usable: Vec<_> = ens.series.iter().filter(|s| !s.capped).collect();
    let n = usable.len() as f64;
    let extinct = usable.iter().filter(|s| s.extinct).count() as f64;
    let survive_k = usable
        .iter()
        .filter(|s| s.declared_survivor || s.rows[0].z_k >= 1)
        .count() as f64;
    let ext_freq = extinct / n;
    let freq_se = (ext_freq * (1.0 - ext_freq) / n).sqrt();
    let mut branch_counts: Vec<u64> = usable.iter().map(|s| s.branch_count).collect();
    branch_counts.sort_unstable();
    let mean_branches = branch_counts.iter().sum::<u64>() as f64 / n;
    let quantities = vec![
        FittedQuantity::against_target(
            "extinction_frequency",
            ext_freq,
            Some(freq_se),
            root,
            EXTINCTION_TOL,
            format!("minimal root of u = F(u): {root}"),
        ),
        FittedQuantity::against_target(
            "survival_on_K_frequency",
            survive_k / n,
            Some(freq_se),
            1.0 - root,
            EXTINCTION_TOL,
            "1 - extinction fixed point",
        ),
        FittedQuantity::informational(
            "mean_branch_events",
            mean_branches,
            None,
            "diagnostic: finite branching marks non-regular growth",
        ),
        FittedQuantity::informational(
            "median_branch_events",
            branch_counts[branch_counts.len() / 2] as f64,
            None,
            "diagnostic",
        ),
    ];
    let notes = vec![
        format!(
            "extinct replicas: {extinct} of {n}; branch-event count quartiles: {} / {} / {}",
            branch_counts[branch_counts.len() / 4],
            branch_counts[branch_counts.len() / 2],
            branch_counts[3 * branch_counts.len() / 4]
        ),
        format!(
            "finite-horizon bias: the waiting times at the atom are 1/2-stable, so the \
             extinct-by-T frequency approaches the fixed point like ~0.28/sqrt(T); at \
             T = {t_declare} the expected deficit is about {:.3}",
            0.28 / t_declare.sqrt()
        ),
    ];
    Ok(ExperimentReport {
        experiment: "survival".into(),
        scenario_digest: ens.scenario_digest.clone(),
        seed: scenario.seed,
        replica_count: scenario.replica_count,
        survivor_count: Some(usable.iter().filter(|s| !s.extinct).count() as u64),
        quantities,
        notes,
        runtime: start.elapsed(),
    })
}
