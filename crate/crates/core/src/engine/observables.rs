//! Population observables recorded at observation times: total count `Z_t`,
//! counts beyond moving radii `Z_t^{delta t}`, the maximal norm `L_t` and
//! its directional analogues `L_t^r`, the additive martingale `M_t`, and a
//! survivor-proxy count on a compact set.

use crate::eigen::EigenResult;
use crate::model::RateMeasure;
use serde::{Deserialize, Serialize};

/// What to record at each observation time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservableSpec {
    /// Thresholds `delta` for the counts `Z_t(|x| >= delta t)`.
    pub deltas: Vec<f64>,
    /// Unit vectors `r` for directional maxima and counts.
    pub directions: Vec<Vec<f64>>,
    /// Survivor proxy: particles within distance `survivor_margin` of the
    /// measure support count toward `Z_t(K)`.
    pub survivor_margin: f64,
}

impl ObservableSpec {
    pub fn none() -> Self {
        ObservableSpec {
            deltas: Vec::new(),
            directions: Vec::new(),
            survivor_margin: 5.0,
        }
    }

    pub fn with_deltas(deltas: Vec<f64>) -> Self {
        ObservableSpec {
            deltas,
            directions: Vec::new(),
            survivor_margin: 5.0,
        }
    }
}

/// Distance from a point to the support of the measure (atom points or
/// shells).
pub fn support_distance(measure: &RateMeasure, x: &[f64]) -> f64 {
    match measure {
        RateMeasure::Atoms1d { atoms } => atoms
            .iter()
            .map(|a| (x[0] - a.position).abs())
            .fold(f64::INFINITY, f64::min),
        RateMeasure::Shells { shells, .. } => {
            let r = x.iter().map(|c| c * c).sum::<f64>().sqrt();
            shells
                .iter()
                .map(|s| (r - s.radius).abs())
                .fold(f64::INFINITY, f64::min)
        }
    }
}

/// Observables at one observation time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservableRow {
    pub t: f64,
    /// Total number of particles alive.
    pub z: u64,
    /// `Z_t^{delta t}` per configured delta.
    pub z_delta: Vec<u64>,
    /// Maximal norm of alive particles (0 when extinct).
    pub l: f64,
    /// Maximal displacement per configured direction.
    pub l_dir: Vec<f64>,
    /// `M_t = e^{lambda t} sum_k h(x_k)` when the eigen data is available.
    pub m: Option<f64>,
    /// Particles within the survivor-proxy set `K`.
    pub z_k: u64,
}

impl ObservableRow {
    pub fn empty(t: f64, spec: &ObservableSpec, with_m: bool) -> Self {
        ObservableRow {
            t,
            z: 0,
            z_delta: vec![0; spec.deltas.len()],
            l: 0.0,
            l_dir: vec![0.0; spec.directions.len()],
            m: if with_m { Some(0.0) } else { None },
            z_k: 0,
        }
    }

    /// Fold one particle position into the row.
    pub fn add_particle(
        &mut self,
        x: &[f64],
        spec: &ObservableSpec,
        measure: &RateMeasure,
        eigen: Option<&EigenResult>,
    ) {
        self.z += 1;
        let norm = x.iter().map(|c| c * c).sum::<f64>().sqrt();
        self.l = self.l.max(norm);
        for (k, &delta) in spec.deltas.iter().enumerate() {
            if norm >= delta * self.t {
                self.z_delta[k] += 1;
            }
        }
        for (k, dir) in spec.directions.iter().enumerate() {
            let proj: f64 = x.iter().zip(dir).map(|(a, b)| a * b).sum();
            if self.z == 1 {
                self.l_dir[k] = proj;
            } else {
                self.l_dir[k] = self.l_dir[k].max(proj);
            }
        }
        if support_distance(measure, x) <= spec.survivor_margin {
            self.z_k += 1;
        }
        if let Some(e) = eigen {
            let h = e.eval(x);
            let m = self.m.get_or_insert(0.0);
            *m += (e.lambda * self.t).exp() * h;
        }
    }
}

/// Per-replica observable series plus lifecycle flags.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservableSeries {
    pub rows: Vec<ObservableRow>,
    /// True when the population died out by the horizon.
    pub extinct: bool,
    /// Exact extinction time when known (event-driven backend), or the step
    /// time at which the population first hit zero.
    pub extinction_time: Option<f64>,
    /// Number of branch events (any offspring count, deaths included).
    pub branch_count: u64,
    /// Particle-lifeline count exceeded the population cap; the series is
    /// unusable and flagged rather than silently truncated.
    pub capped: bool,
    /// Number of particles alive at the horizon.
    pub survivors_at_horizon: u64,
    /// The replica was declared surviving by the creation-count shortcut
    /// before the horizon; rows are incomplete past the stop.
    #[serde(default)]
    pub declared_survivor: bool,
}

impl ObservableSeries {
    pub fn fresh(obs_times: &[f64], spec: &ObservableSpec, with_m: bool) -> Self {
        ObservableSeries {
            rows: obs_times
                .iter()
                .map(|&t| ObservableRow::empty(t, spec, with_m))
                .collect(),
            extinct: false,
            extinction_time: None,
            branch_count: 0,
            capped: false,
            survivors_at_horizon: 0,
            declared_survivor: false,
        }
    }

    /// Row index set: every alive particle must contribute to each row
    /// exactly once; emptiness at a row therefore means extinction at or
    /// before that time.
    pub fn finalize(&mut self, horizon_survivors: u64, max_death_time: Option<f64>) {
        self.survivors_at_horizon = horizon_survivors;
        if horizon_survivors == 0 && !self.capped {
            self.extinct = true;
            self.extinction_time = max_death_time;
        }
    }
}
