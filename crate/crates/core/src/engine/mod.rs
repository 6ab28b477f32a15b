//! Branching Brownian motion simulation: an exact event-driven backend for
//! 1-D single-atom measures and a time-stepped regularized backend for all
//! models, plus deterministic replica orchestration.

mod discrete;
mod event;
mod observables;

pub use discrete::simulate_discretized;
pub use event::simulate_event_driven;
pub use observables::{support_distance, ObservableRow, ObservableSeries, ObservableSpec};

use crate::eigen::EigenResult;
use crate::model::{scenario_digest, RateMeasure, Scenario};
use crate::samplers::{default_epsilon, RngStream};
use crate::Result;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Result of one replica run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EngineOutcome {
    pub series: ObservableSeries,
}

/// Simulation backend selection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Backend {
    /// Event-driven for single-atom 1-D models, discretized otherwise.
    /// (The approximate multi-atom event scheme failed its cross-backend
    /// KS validation, so `Auto` never selects it.)
    Auto,
    EventDriven,
    /// Event-driven including the approximate multi-atom passage scheme.
    EventDrivenMultiAtom,
    Discretized,
}

/// Backend tuning knobs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EngineParams {
    pub backend: Backend,
    /// Step size for the discretized backend.
    pub dt: f64,
    /// Local-time band halfwidth; defaults to `0.5 sqrt(dt)`.
    pub epsilon: Option<f64>,
    /// Event-driven extinction studies: once this many particle lifelines
    /// have been created, the replica is declared a survivor and stopped.
    /// Sound for supercritical mechanisms (the extinction probability given
    /// thousands of births is astronomically small); observables other than
    /// the extinction flags are not recorded past the shortcut.
    pub survivor_shortcut: Option<u64>,
}

impl EngineParams {
    pub fn auto() -> Self {
        EngineParams {
            backend: Backend::Auto,
            dt: 1e-3,
            epsilon: None,
            survivor_shortcut: None,
        }
    }

    pub fn event_driven() -> Self {
        EngineParams {
            backend: Backend::EventDriven,
            ..EngineParams::auto()
        }
    }

    pub fn discretized(dt: f64) -> Self {
        EngineParams {
            backend: Backend::Discretized,
            dt,
            epsilon: None,
            survivor_shortcut: None,
        }
    }

    fn epsilon_value(&self) -> f64 {
        self.epsilon.unwrap_or_else(|| default_epsilon(self.dt))
    }

    fn resolve(&self, scenario: &Scenario) -> Backend {
        match self.backend {
            Backend::Auto => match &scenario.measure {
                RateMeasure::Atoms1d { atoms } if atoms.len() == 1 => Backend::EventDriven,
                _ => Backend::Discretized,
            },
            other => other,
        }
    }
}

/// Run one replica with the stream keyed by `(scenario.seed, replica_id)`.
pub fn run_single_replica(
    scenario: &Scenario,
    replica_id: u64,
    params: &EngineParams,
    eigen: Option<&EigenResult>,
    spec: &ObservableSpec,
) -> Result<EngineOutcome> {
    let mut rng = RngStream::new(scenario.seed, replica_id);
    match params.resolve(scenario) {
        Backend::EventDriven => {
            simulate_event_driven(scenario, eigen, &mut rng, spec, false, params.survivor_shortcut)
        }
        Backend::EventDrivenMultiAtom => {
            simulate_event_driven(scenario, eigen, &mut rng, spec, true, params.survivor_shortcut)
        }
        Backend::Discretized => {
            simulate_discretized(scenario, params.dt, params.epsilon_value(), eigen, &mut rng, spec)
        }
        Backend::Auto => unreachable!("resolve never returns Auto"),
    }
}

/// All replicas of a scenario, in replica order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicaEnsemble {
    pub scenario_digest: String,
    pub series: Vec<ObservableSeries>,
}

impl ReplicaEnsemble {
    /// Replicas that are usable and survived to the horizon.
    pub fn survivors(&self) -> impl Iterator<Item = &ObservableSeries> {
        self.series.iter().filter(|s| !s.capped && !s.extinct)
    }

    pub fn capped_count(&self) -> usize {
        self.series.iter().filter(|s| s.capped).count()
    }
}

/// Execute every replica independently (in parallel) with per-replica
/// streams; results are collected in replica order, so the output is
/// bit-identical regardless of thread scheduling.
pub fn run_replicas(
    scenario: &Scenario,
    params: &EngineParams,
    eigen: Option<&EigenResult>,
    spec: &ObservableSpec,
) -> Result<ReplicaEnsemble> {
    let report = crate::model::validate_scenario(scenario);
    if !report.pass {
        return Err(crate::Error::InvalidScenario(report.failures.join("; ")));
    }
    let series: Result<Vec<ObservableSeries>> = (0..scenario.replica_count as u64)
        .into_par_iter()
        .map(|rep| run_single_replica(scenario, rep, params, eigen, spec).map(|o| o.series))
        .collect();
    Ok(ReplicaEnsemble {
        scenario_digest: scenario_digest(scenario),
        series: series?,
    })
}
