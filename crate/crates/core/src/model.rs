//! Branching-rate measures, offspring mechanisms, and scenario configuration.
//!
//! A branching rate is a positive measure with compact support: weighted
//! point atoms on the line (`d = 1`) or weighted spherical shells (`d >= 2`).
//! The offspring mechanism attaches a finitely supported pmf to each support
//! point; the signed measure `nu = (Q - 1) mu` combines the two and is what
//! the eigenvalue solvers and Feynman-Kac estimators consume.

use crate::{Error, Result};
use serde::{Deserialize, Serialize};

/// Tolerance for pmf normalization checks.
pub const PMF_TOL: f64 = 1e-12;

/// A weighted point atom on the line.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub position: f64,
    pub weight: f64,
}

/// A weighted spherical shell `{ |x| = radius }`, interpreted as a surface
/// measure with `weight` density per unit area.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Shell {
    pub radius: f64,
    pub weight: f64,
}

/// Branching-rate measure: point atoms in 1-D or radial shells in `d >= 2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum RateMeasure {
    Atoms1d { atoms: Vec<Atom> },
    Shells { dimension: usize, shells: Vec<Shell> },
}

impl RateMeasure {
    pub fn atoms_1d(atoms: Vec<(f64, f64)>) -> Self {
        RateMeasure::Atoms1d {
            atoms: atoms
                .into_iter()
                .map(|(position, weight)| Atom { position, weight })
                .collect(),
        }
    }

    pub fn shells(dimension: usize, shells: Vec<(f64, f64)>) -> Self {
        RateMeasure::Shells {
            dimension,
            shells: shells
                .into_iter()
                .map(|(radius, weight)| Shell { radius, weight })
                .collect(),
        }
    }

    pub fn dimension(&self) -> usize {
        match self {
            RateMeasure::Atoms1d { .. } => 1,
            RateMeasure::Shells { dimension, .. } => *dimension,
        }
    }

    pub fn support_len(&self) -> usize {
        match self {
            RateMeasure::Atoms1d { atoms } => atoms.len(),
            RateMeasure::Shells { shells, .. } => shells.len(),
        }
    }

    /// Support coordinates: atom positions, or shell radii.
    pub fn support_coords(&self) -> Vec<f64> {
        match self {
            RateMeasure::Atoms1d { atoms } => atoms.iter().map(|a| a.position).collect(),
            RateMeasure::Shells { shells, .. } => shells.iter().map(|s| s.radius).collect(),
        }
    }

    pub fn weights(&self) -> Vec<f64> {
        match self {
            RateMeasure::Atoms1d { atoms } => atoms.iter().map(|a| a.weight).collect(),
            RateMeasure::Shells { shells, .. } => shells.iter().map(|s| s.weight).collect(),
        }
    }

    /// Largest distance of the support from the origin.
    pub fn support_extent(&self) -> f64 {
        self.support_coords()
            .iter()
            .fold(0.0_f64, |acc, &c| acc.max(c.abs()))
    }

    fn check(&self) -> Vec<String> {
        let mut failures = Vec::new();
        match self {
            RateMeasure::Atoms1d { atoms } => {
                if atoms.is_empty() {
                    failures.push("measure support is empty".to_string());
                }
                for a in atoms {
                    if !a.weight.is_finite() || a.weight <= 0.0 {
                        failures.push(format!("weight must be positive, got {}", a.weight));
                    }
                    if !a.position.is_finite() {
                        failures.push("atom position must be finite".to_string());
                    }
                }
                for i in 0..atoms.len() {
                    for j in i + 1..atoms.len() {
                        if atoms[i].position == atoms[j].position {
                            failures.push(format!(
                                "duplicate support point at position {}",
                                atoms[i].position
                            ));
                        }
                    }
                }
            }
            RateMeasure::Shells { dimension, shells } => {
                if *dimension < 2 {
                    failures.push(format!("shell measures require d >= 2, got d = {dimension}"));
                }
                if shells.is_empty() {
                    failures.push("measure support is empty".to_string());
                }
                for s in shells {
                    if !s.radius.is_finite() || s.radius <= 0.0 {
                        failures.push(format!("radius must be positive, got {}", s.radius));
                    }
                    if !s.weight.is_finite() || s.weight <= 0.0 {
                        failures.push(format!("weight must be positive, got {}", s.weight));
                    }
                }
                for i in 0..shells.len() {
                    for j in i + 1..shells.len() {
                        if shells[i].radius == shells[j].radius {
                            failures
                                .push(format!("duplicate support point at radius {}", shells[i].radius));
                        }
                    }
                }
            }
        }
        failures
    }

    pub fn validate(&self) -> Result<()> {
        let failures = self.check();
        if failures.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidMeasure(failures.join("; ")))
        }
    }
}

/// Site-indexed offspring distribution. `site_pmfs[i]` is the pmf
/// `(p_0, ..., p_nmax)` at support point `i` of the paired measure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchingMechanism {
    pub site_pmfs: Vec<Vec<f64>>,
}

impl BranchingMechanism {
    pub fn new(site_pmfs: Vec<Vec<f64>>) -> Self {
        BranchingMechanism { site_pmfs }
    }

    /// Binary splitting (`p_2 = 1`) at every one of `sites` support points.
    pub fn binary(sites: usize) -> Self {
        BranchingMechanism {
            site_pmfs: vec![vec![0.0, 0.0, 1.0]; sites],
        }
    }

    /// Death/birth mixture `p_0, p_2` (with `p_0 + p_2 = 1`) at every site.
    pub fn birth_death(sites: usize, p0: f64) -> Self {
        BranchingMechanism {
            site_pmfs: vec![vec![p0, 0.0, 1.0 - p0]; sites],
        }
    }

    pub fn sites(&self) -> usize {
        self.site_pmfs.len()
    }

    /// Largest offspring count with nonzero probability capacity.
    pub fn nmax(&self) -> usize {
        self.site_pmfs
            .iter()
            .map(|p| p.len().saturating_sub(1))
            .max()
            .unwrap_or(0)
    }

    /// Expected offspring number `Q(a_i)` at site `i`.
    pub fn q(&self, site: usize) -> f64 {
        self.site_pmfs[site]
            .iter()
            .enumerate()
            .map(|(n, p)| n as f64 * p)
            .sum()
    }

    /// Second factorial-free moment `sum n^2 p_n` at site `i`.
    pub fn second_moment(&self, site: usize) -> f64 {
        self.site_pmfs[site]
            .iter()
            .enumerate()
            .map(|(n, p)| (n * n) as f64 * p)
            .sum()
    }

    fn check(&self) -> Vec<String> {
        let mut failures = Vec::new();
        if self.site_pmfs.is_empty() {
            failures.push("mechanism has no sites".to_string());
        }
        for (i, pmf) in self.site_pmfs.iter().enumerate() {
            if pmf.is_empty() {
                failures.push(format!("site {i}: empty pmf"));
                continue;
            }
            if pmf.iter().any(|&p| !(0.0..=1.0).contains(&p)) {
                failures.push(format!("site {i}: pmf entries must lie in [0, 1]"));
            }
            let total: f64 = pmf.iter().sum();
            if (total - 1.0).abs() > PMF_TOL {
                failures.push(format!("site {i}: pmf sums to {total}, expected 1"));
            }
        }
        failures
    }

    pub fn validate(&self) -> Result<()> {
        let failures = self.check();
        if failures.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidMechanism(failures.join("; ")))
        }
    }

    /// Draw an offspring count at `site` given a uniform `u` in `[0, 1)`.
    pub fn sample_offspring(&self, site: usize, u: f64) -> usize {
        let pmf = &self.site_pmfs[site];
        let mut acc = 0.0;
        for (n, &p) in pmf.iter().enumerate() {
            acc += p;
            if u < acc {
                return n;
            }
        }
        pmf.len() - 1
    }
}

/// The signed measure `nu = (Q - 1) mu` on the support of `mu`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignedNu {
    pub base: RateMeasure,
    /// `(Q(a_i) - 1) * w_i` per support point; may be negative.
    pub nu_weights: Vec<f64>,
}

impl SignedNu {
    /// Signed measure over explicit support coordinates (1-D atoms).
    pub fn from_signed_atoms(atoms: Vec<(f64, f64)>) -> Self {
        // Base weights are the absolute values; a unit-mean-shift mechanism
        // is implied. Used by estimators that only need (coords, nu weights).
        let base = RateMeasure::atoms_1d(atoms.iter().map(|&(p, w)| (p, w.abs().max(f64::MIN_POSITIVE))).collect());
        SignedNu {
            base,
            nu_weights: atoms.into_iter().map(|(_, w)| w).collect(),
        }
    }

    /// Support points paired with signed weights, skipping zero weights.
    pub fn signed_support(&self) -> Vec<(f64, f64)> {
        self.base
            .support_coords()
            .into_iter()
            .zip(self.nu_weights.iter().copied())
            .filter(|&(_, w)| w != 0.0)
            .collect()
    }

    /// Positive part `nu^+` as `(coord, weight)` pairs.
    pub fn positive_part(&self) -> Vec<(f64, f64)> {
        self.signed_support().into_iter().filter(|&(_, w)| w > 0.0).collect()
    }

    /// Negative part `nu^-` as `(coord, weight)` pairs with positive weights.
    pub fn negative_part(&self) -> Vec<(f64, f64)> {
        self.signed_support()
            .into_iter()
            .filter(|&(_, w)| w < 0.0)
            .map(|(c, w)| (c, -w))
            .collect()
    }

    pub fn total_positive_mass(&self) -> f64 {
        self.positive_part().iter().map(|&(_, w)| w).sum()
    }
}

/// `nu = (Q - 1) mu`: pair a measure with a mechanism, index-aligned.
pub fn build_signed_nu(measure: &RateMeasure, mech: &BranchingMechanism) -> Result<SignedNu> {
    measure.validate()?;
    mech.validate()?;
    if measure.support_len() != mech.sites() {
        return Err(Error::IndexMismatch {
            measure: measure.support_len(),
            mechanism: mech.sites(),
        });
    }
    let nu_weights = measure
        .weights()
        .iter()
        .enumerate()
        .map(|(i, &w)| (mech.q(i) - 1.0) * w)
        .collect();
    Ok(SignedNu {
        base: measure.clone(),
        nu_weights,
    })
}

/// A complete simulation scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub measure: RateMeasure,
    pub mechanism: BranchingMechanism,
    pub initial_position: Vec<f64>,
    pub horizon: f64,
    pub observation_times: Vec<f64>,
    pub seed: u64,
    pub replica_count: usize,
    pub population_cap: Option<u64>,
}

impl Scenario {
    /// Canonical 1-D scenario: a single atom of weight `c` at the origin
    /// with a binary mechanism, started at `x0`.
    pub fn single_atom_binary(c: f64, x0: f64, horizon: f64, obs: Vec<f64>, seed: u64, replicas: usize) -> Self {
        Scenario {
            measure: RateMeasure::atoms_1d(vec![(0.0, c)]),
            mechanism: BranchingMechanism::binary(1),
            initial_position: vec![x0],
            horizon,
            observation_times: obs,
            seed,
            replica_count: replicas,
            population_cap: Some(DEFAULT_POPULATION_CAP),
        }
    }
}

/// Default per-replica population cap.
pub const DEFAULT_POPULATION_CAP: u64 = 20_000_000;

/// Outcome of scenario validation; failures carry human-readable reasons.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ValidationReport {
    pub pass: bool,
    pub failures: Vec<String>,
}

/// Check every type invariant of a scenario. Failures are reported, not
/// raised.
pub fn validate_scenario(s: &Scenario) -> ValidationReport {
    let mut failures = s.measure.check();
    failures.extend(s.mechanism.check());
    if s.measure.support_len() != s.mechanism.sites() {
        failures.push(format!(
            "measure has {} support points but mechanism has {} pmfs",
            s.measure.support_len(),
            s.mechanism.sites()
        ));
    }
    if s.initial_position.len() != s.measure.dimension() {
        failures.push(format!(
            "initial position has dimension {} but measure has dimension {}",
            s.initial_position.len(),
            s.measure.dimension()
        ));
    }
    if !(s.horizon > 0.0) {
        failures.push(format!("horizon must be positive, got {}", s.horizon));
    }
    if s.observation_times.is_empty() {
        failures.push("observation_times must be nonempty".to_string());
    }
    for w in s.observation_times.windows(2) {
        if w[1] <= w[0] {
            failures.push("observation times must be strictly increasing".to_string());
            break;
        }
    }
    if let Some(&first) = s.observation_times.first() {
        if first <= 0.0 {
            failures.push("observation times must be positive".to_string());
        }
    }
    if let Some(&last) = s.observation_times.last() {
        if last > s.horizon {
            failures.push(format!(
                "observation time {last} exceeds horizon {}",
                s.horizon
            ));
        }
    }
    if s.replica_count < 1 {
        failures.push("replica_count must be >= 1".to_string());
    }
    ValidationReport {
        pass: failures.is_empty(),
        failures,
    }
}

// ---------------------------------------------------------------------------
// Scenario config files
// ---------------------------------------------------------------------------

/// On-disk scenario configuration (TOML with `[measure]`, `[mechanism]`,
/// `[run]` sections). Unknown keys are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub measure: MeasureSection,
    pub mechanism: MechanismSection,
    pub run: RunSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasureSection {
    pub dimension: usize,
    /// `"atoms"` or `"shells"`.
    pub kind: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub atoms: Option<Vec<[f64; 2]>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub shells: Option<Vec<[f64; 2]>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MechanismSection {
    /// One row `[p0, p1, ..., pn]` per support point.
    pub site_pmfs: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub x0: Vec<f64>,
    pub horizon: f64,
    pub obs_times: Vec<f64>,
    pub seed: u64,
    pub replicas: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub population_cap: Option<u64>,
    /// Radial thresholds for the `Z_t^{delta t}` observables.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub deltas: Option<Vec<f64>>,
    /// Unit vectors for directional maxima `L_t^r`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub directions: Option<Vec<Vec<f64>>>,
    /// Step size for the discretized backend.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    /// Local-time band is `epsilon_factor * sqrt(dt)` wide.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epsilon_factor: Option<f64>,
    /// `"auto"`, `"event"`, or `"discrete"`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub backend: Option<String>,
}

impl ScenarioConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: ScenarioConfig =
            toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.to_scenario()?; // surface structural errors at parse time
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("scenario config serializes")
    }

    pub fn from_scenario(s: &Scenario) -> Self {
        let (kind, atoms, shells) = match &s.measure {
            RateMeasure::Atoms1d { atoms } => (
                "atoms".to_string(),
                Some(atoms.iter().map(|a| [a.position, a.weight]).collect()),
                None,
            ),
            RateMeasure::Shells { shells, .. } => (
                "shells".to_string(),
                None,
                Some(shells.iter().map(|s| [s.radius, s.weight]).collect()),
            ),
        };
        ScenarioConfig {
            measure: MeasureSection {
                dimension: s.measure.dimension(),
                kind,
                atoms,
                shells,
            },
            mechanism: MechanismSection {
                site_pmfs: s.mechanism.site_pmfs.clone(),
            },
            run: RunSection {
                x0: s.initial_position.clone(),
                horizon: s.horizon,
                obs_times: s.observation_times.clone(),
                seed: s.seed,
                replicas: s.replica_count,
                population_cap: s.population_cap,
                deltas: None,
                directions: None,
                dt: None,
                epsilon_factor: None,
                backend: None,
            },
        }
    }

    pub fn to_scenario(&self) -> Result<Scenario> {
        let measure = match self.measure.kind.as_str() {
            "atoms" => {
                if self.measure.dimension != 1 {
                    return Err(Error::Config("kind \"atoms\" requires dimension = 1".into()));
                }
                let atoms = self
                    .measure
                    .atoms
                    .as_ref()
                    .ok_or_else(|| Error::Config("kind \"atoms\" requires an atoms list".into()))?;
                if self.measure.shells.is_some() {
                    return Err(Error::Config("kind \"atoms\" must not define shells".into()));
                }
                RateMeasure::atoms_1d(atoms.iter().map(|a| (a[0], a[1])).collect())
            }
            "shells" => {
                if self.measure.dimension < 2 {
                    return Err(Error::Config("kind \"shells\" requires dimension >= 2".into()));
                }
                let shells = self
                    .measure
                    .shells
                    .as_ref()
                    .ok_or_else(|| Error::Config("kind \"shells\" requires a shells list".into()))?;
                if self.measure.atoms.is_some() {
                    return Err(Error::Config("kind \"shells\" must not define atoms".into()));
                }
                RateMeasure::shells(self.measure.dimension, shells.iter().map(|s| (s[0], s[1])).collect())
            }
            other => {
                return Err(Error::Config(format!(
                    "unknown measure kind {other:?}; expected \"atoms\" or \"shells\""
                )))
            }
        };
        Ok(Scenario {
            measure,
            mechanism: BranchingMechanism::new(self.mechanism.site_pmfs.clone()),
            initial_position: self.run.x0.clone(),
            horizon: self.run.horizon,
            observation_times: self.run.obs_times.clone(),
            seed: self.run.seed,
            replica_count: self.run.replicas,
            population_cap: self.run.population_cap,
        })
    }
}

/// Deterministic FNV-1a digest of a scenario's canonical serialization,
/// used to stamp reports.
pub fn scenario_digest(s: &Scenario) -> String {
    let text = ScenarioConfig::from_scenario(s).to_toml_string();
    let mut hash: u64 = 0xcbf29ce484222325;
    for b in text.as_bytes() {
        hash ^= *b as u64;
        hash = hash.wrapping_mul(0x100000001b3);
    }
    format!("{hash:016x}")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn canonical() -> Scenario {
        Scenario::single_atom_binary(1.0, 0.0, 2.0, vec![1.0, 2.0], 7, 10)
    }

    #[test]
    fn canonical_scenario_passes() {
        let report = validate_scenario(&canonical());
        assert!(report.pass, "{:?}", report.failures);
    }

    #[test]
    fn duplicate_atom_position_fails() {
        let mut s = canonical();
        s.measure = RateMeasure::atoms_1d(vec![(0.0, 1.0), (0.0, 2.0)]);
        s.mechanism = BranchingMechanism::binary(2);
        let report = validate_scenario(&s);
        assert!(!report.pass);
        assert!(report.failures.iter().any(|f| f.contains("duplicate support point")));
    }

    #[test]
    fn negative_shell_radius_fails() {
        let mut s = canonical();
        s.measure = RateMeasure::shells(3, vec![(-1.0, 1.0)]);
        s.initial_position = vec![0.0, 0.0, 0.0];
        let report = validate_scenario(&s);
        assert!(!report.pass);
        assert!(report.failures.iter().any(|f| f.contains("radius must be positive")));
    }

    #[test]
    fn unsorted_observation_times_fail() {
        let mut s = canonical();
        s.observation_times = vec![2.0, 1.0];
        assert!(!validate_scenario(&s).pass);
    }

    #[test]
    fn observation_beyond_horizon_fails() {
        let mut s = canonical();
        s.observation_times = vec![1.0, 3.0];
        assert!(!validate_scenario(&s).pass);
    }

    #[test]
    fn signed_nu_binary_mechanism() {
        // p2 = 1 at an atom of weight c: nu weight = c.
        let m = RateMeasure::atoms_1d(vec![(0.0, 2.5)]);
        let nu = build_signed_nu(&m, &BranchingMechanism::binary(1)).unwrap();
        assert_eq!(nu.nu_weights, vec![2.5]);
    }

    #[test]
    fn signed_nu_birth_death_mechanism() {
        // p0 = 0.2, p2 = 0.8: Q = 1.6, nu weight = 0.6.
        let m = RateMeasure::atoms_1d(vec![(0.0, 1.0)]);
        let nu = build_signed_nu(&m, &BranchingMechanism::birth_death(1, 0.2)).unwrap();
        assert!((nu.nu_weights[0] - 0.6).abs() < 1e-15);
    }

    #[test]
    fn signed_nu_critical_free_mechanism() {
        // p1 = 1: nu weight = 0 and the signed support is empty.
        let m = RateMeasure::atoms_1d(vec![(0.0, 1.0)]);
        let mech = BranchingMechanism::new(vec![vec![0.0, 1.0]]);
        let nu = build_signed_nu(&m, &mech).unwrap();
        assert_eq!(nu.nu_weights, vec![0.0]);
        assert!(nu.signed_support().is_empty());
    }

    #[test]
    fn signed_nu_index_mismatch() {
        let m = RateMeasure::atoms_1d(vec![(0.0, 1.0), (1.0, 1.0)]);
        let err = build_signed_nu(&m, &BranchingMechanism::binary(1)).unwrap_err();
        assert!(matches!(err, Error::IndexMismatch { .. }));
    }

    #[test]
    fn nu_parts_partition_support() {
        let m = RateMeasure::atoms_1d(vec![(0.0, 1.0), (1.0, 2.0), (2.0, 3.0)]);
        let mech = BranchingMechanism::new(vec![
            vec![1.0],           // p0 = 1: Q = 0, nu = -1
            vec![0.0, 1.0],      // p1 = 1: nu = 0
            vec![0.0, 0.0, 1.0], // p2 = 1: nu = +3
        ]);
        let nu = build_signed_nu(&m, &mech).unwrap();
        let pos = nu.positive_part();
        let neg = nu.negative_part();
        assert_eq!(pos, vec![(2.0, 3.0)]);
        assert_eq!(neg, vec![(0.0, 1.0)]);
        assert_eq!(nu.signed_support().len(), 2);
    }

    #[test]
    fn q_bounds() {
        let mech = BranchingMechanism::new(vec![vec![0.25, 0.25, 0.25, 0.25]]);
        let q = mech.q(0);
        assert!(q >= 0.0 && q <= mech.nmax() as f64);
        assert!((q - 1.5).abs() < 1e-15);
    }

    #[test]
    fn offspring_sampler_respects_pmf() {
        let mech = BranchingMechanism::new(vec![vec![0.2, 0.0, 0.8]]);
        assert_eq!(mech.sample_offspring(0, 0.1), 0);
        assert_eq!(mech.sample_offspring(0, 0.25), 2);
        assert_eq!(mech.sample_offspring(0, 0.9999), 2);
    }

    #[test]
    fn config_round_trip_identity() {
        let s = canonical();
        let cfg = ScenarioConfig::from_scenario(&s);
        let text = cfg.to_toml_string();
        let parsed = ScenarioConfig::parse(&text).unwrap();
        assert_eq!(parsed.to_scenario().unwrap(), s);
    }

    #[test]
    fn config_rejects_unknown_keys() {
        let text = r#"
[measure]
dimension = 1
kind = "atoms"
atoms = [[0.0, 1.0]]

[mechanism]
site_pmfs = [[0.0, 0.0, 1.0]]

[run]
x0 = [0.0]
horizon = 2.0
obs_times = [1.0, 2.0]
seed = 7
replicas = 10
frobnicate = true
"#;
        let err = ScenarioConfig::parse(text).unwrap_err();
        assert!(matches!(err, Error::Config(_)), "{err}");
    }

    #[test]
    fn digest_is_stable_and_sensitive() {
        let s = canonical();
        let d1 = scenario_digest(&s);
        let d2 = scenario_digest(&s);
        assert_eq!(d1, d2);
        let mut s2 = s.clone();
        s2.seed = 8;
        assert_ne!(d1, scenario_digest(&s2));
    }
}
