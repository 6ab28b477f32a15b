//! Monte Carlo estimators of Feynman-Kac expectations
//! `E_x[e^{A_t^nu} f(B_t)]` over single (non-branching) Brownian paths, the
//! exponentially tilted variant for tail events `{|B_t| >= R(t)}`, the
//! extinction-probability fixed point, and the McKean lower-bound
//! functional.

use crate::model::{RateMeasure, SignedNu};
use crate::numeric::MeanVar;
use crate::samplers::{local_time_increment, shell_local_time_increment, RngStream};
use crate::{Error, Result};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Bounded test function applied to the path endpoint.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum TargetFn {
    One,
    /// Indicator of `{|x| >= r}`.
    OutsideRadius(f64),
    /// Indicator of `{|x| < r}`.
    InsideRadius(f64),
}

impl TargetFn {
    fn eval(&self, x: &[f64]) -> f64 {
        let norm = x.iter().map(|c| c * c).sum::<f64>().sqrt();
        match self {
            TargetFn::One => 1.0,
            TargetFn::OutsideRadius(r) => {
                if norm >= *r {
                    1.0
                } else {
                    0.0
                }
            }
            TargetFn::InsideRadius(r) => {
                if norm < *r {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    fn describe(&self) -> String {
        match self {
            TargetFn::One => "1".into(),
            TargetFn::OutsideRadius(r) => format!("1{{|x| >= {r}}}"),
            TargetFn::InsideRadius(r) => format!("1{{|x| < {r}}}"),
        }
    }
}

/// A Monte Carlo estimate with its standard error and tilt metadata.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FkEstimate {
    pub value: f64,
    pub std_error: f64,
    pub sample_count: u64,
    /// Importance-sampling drift, when one was applied; the likelihood
    /// ratio is folded into the weights, so `value` is unbiased for the
    /// untilted target.
    pub tilt_drift: Option<Vec<f64>>,
    pub target: String,
}

const CHUNK: u64 = 4096;

/// Signed per-step additive-functional increment for a measure.
#[inline]
fn signed_increment(
    measure: &RateMeasure,
    nu_weights: &[f64],
    pre: &[f64],
    post: &[f64],
    pre_r: f64,
    post_r: f64,
    dt: f64,
    epsilon: f64,
) -> f64 {
    let mut inc = 0.0;
    match measure {
        RateMeasure::Atoms1d { atoms } => {
            for (a, &w) in atoms.iter().zip(nu_weights) {
                if w != 0.0 {
                    inc += w * local_time_increment(pre[0] - a.position, post[0] - a.position, dt, epsilon);
                }
            }
        }
        RateMeasure::Shells { shells, .. } => {
            for (s, &w) in shells.iter().zip(nu_weights) {
                if w != 0.0 {
                    inc += w * shell_local_time_increment(pre_r, post_r, s.radius, dt, epsilon);
                }
            }
        }
    }
    inc
}

fn norm_of(x: &[f64]) -> f64 {
    x.iter().map(|c| c * c).sum::<f64>().sqrt()
}

/// Estimate `E_x[e^{A_t^nu} f(B_t)]` from `n_paths` independent paths with
/// the same step/band regularization as the discretized engine.
pub fn estimate_fk(
    x0: &[f64],
    t: f64,
    f: TargetFn,
    nu: &SignedNu,
    n_paths: u64,
    dt: f64,
    epsilon: f64,
    rng: &RngStream,
) -> Result<FkEstimate> {
    if !(t > 0.0) || n_paths == 0 {
        return Err(Error::InvalidParameter(
            "estimate_fk requires t > 0 and n_paths > 0".into(),
        ));
    }
    if !(dt > 0.0) || !(epsilon > 0.0) {
        return Err(Error::InvalidParameter("estimate_fk requires dt, epsilon > 0".into()));
    }
    let steps = (t / dt).round().max(1.0) as u64;
    let d = x0.len();
    let chunks: Vec<u64> = (0..n_paths.div_ceil(CHUNK)).collect();
    let stats: Vec<MeanVar> = chunks
        .par_iter()
        .map(|&chunk| {
            let mut local = MeanVar::default();
            let mut crng = rng.substream(chunk);
            let lo = chunk * CHUNK;
            let hi = (lo + CHUNK).min(n_paths);
            let sqrt_dt = dt.sqrt();
            let mut pre = vec![0.0; d];
            let mut pos = vec![0.0; d];
            for _ in lo..hi {
                pos.copy_from_slice(x0);
                let mut acc = 0.0;
                let mut pre_r = norm_of(&pos);
                for _ in 0..steps {
                    pre.copy_from_slice(&pos);
                    for c in pos.iter_mut() {
                        *c += sqrt_dt * crng.standard_normal();
                    }
                    let post_r = norm_of(&pos);
                    acc += signed_increment(&nu.base, &nu.nu_weights, &pre, &pos, pre_r, post_r, dt, epsilon);
                    pre_r = post_r;
                }
                local.push(acc.exp() * f.eval(&pos));
            }
            local
        })
        .collect();
    let mut total = MeanVar::default();
    for s in &stats {
        total.merge(s);
    }
    Ok(FkEstimate {
        value: total.mean(),
        std_error: total.std_error(),
        sample_count: total.count(),
        tilt_drift: None,
        target: format!("E[e^A {}] at t={t}", f.describe()),
    })
}

/// Tail estimator `E_x[e^{A_t^nu}; |B_t| >= delta t + a_shift]` with an
/// exponential tilt of magnitude `delta`: in 1-D the two half-lines are
/// estimated separately with drifts `+delta` and `-delta`; in higher
/// dimensions each path draws a uniformly random tilt direction. The
/// Girsanov likelihood ratio `e^{-<theta, B_t - x> + |theta|^2 t / 2}`
/// multiplies each weight, so the estimate is unbiased.
pub fn estimate_tail_fk(
    x0: &[f64],
    t: f64,
    delta: f64,
    a_shift: f64,
    nu: &SignedNu,
    n_paths: u64,
    dt: f64,
    epsilon: f64,
    rng: &RngStream,
) -> Result<FkEstimate> {
    if !(delta > 0.0) {
        return Err(Error::InvalidParameter("tail estimator requires delta > 0".into()));
    }
    if !(t > 0.0) || n_paths == 0 || !(dt > 0.0) || !(epsilon > 0.0) {
        return Err(Error::InvalidParameter(
            "tail estimator requires t, n_paths, dt, epsilon > 0".into(),
        ));
    }
    let d = x0.len();
    let radius = delta * t + a_shift;
    let steps = (t / dt).round().max(1.0) as u64;
    let run_side = |side: usize| -> MeanVar {
        let chunks: Vec<u64> = (0..n_paths.div_ceil(CHUNK)).collect();
        let stats: Vec<MeanVar> = chunks
            .par_iter()
            .map(|&chunk| {
                let mut local = MeanVar::default();
                let mut crng = rng.substream(side as u64 * 0x10_0000 + chunk);
                let lo = chunk * CHUNK;
                let hi = (lo + CHUNK).min(n_paths);
                let sqrt_dt = dt.sqrt();
                let mut pre = vec![0.0; d];
                let mut pos = vec![0.0; d];
                let mut theta = vec![0.0; d];
                for _ in lo..hi {
                    // Tilt direction: fixed sign in 1-D, random unit vector
                    // in d >= 2.
                    if d == 1 {
                        theta[0] = if side == 0 { delta } else { -delta };
                    } else {
                        loop {
                            let mut nsq = 0.0;
                            for c in theta.iter_mut() {
                                *c = crng.standard_normal();
                                nsq += *c * *c;
                            }
                            if nsq > 1e-12 {
                                let scale = delta / nsq.sqrt();
                                for c in theta.iter_mut() {
                                    *c *= scale;
                                }
                                break;
                            }
                        }
                    }
                    pos.copy_from_slice(x0);
                    let mut acc = 0.0;
                    let mut pre_r = norm_of(&pos);
                    for _ in 0..steps {
                        pre.copy_from_slice(&pos);
                        for (c, th) in pos.iter_mut().zip(&theta) {
                            *c += sqrt_dt * crng.standard_normal() + th * dt;
                        }
                        let post_r = norm_of(&pos);
                        acc += signed_increment(&nu.base, &nu.nu_weights, &pre, &pos, pre_r, post_r, dt, epsilon);
                        pre_r = post_r;
                    }
                    let mut dot = 0.0;
                    let mut theta_sq = 0.0;
                    for k in 0..d {
                        dot += theta[k] * (pos[k] - x0[k]);
                        theta_sq += theta[k] * theta[k];
                    }
                    let likelihood = (-dot + 0.5 * theta_sq * t).exp();
                    let indicator = if d == 1 {
                        // Side-restricted indicator so the two tilted halves
                        // partition the event.
                        let inside = if side == 0 { pos[0] >= radius } else { pos[0] <= -radius };
                        if inside {
                            1.0
                        } else {
                            0.0
                        }
                    } else if norm_of(&pos) >= radius {
                        1.0
                    } else {
                        0.0
                    };
                    local.push(acc.exp() * indicator * likelihood);
                }
                local
            })
            .collect();
        let mut total = MeanVar::default();
        for s in &stats {
            total.merge(s);
        }
        total
    };
    let (value, std_error, count) = if d == 1 {
        let right = run_side(0);
        let left = run_side(1);
        (
            right.mean() + left.mean(),
            (right.std_error().powi(2) + left.std_error().powi(2)).sqrt(),
            right.count() + left.count(),
        )
    } else {
        let s = run_side(0);
        (s.mean(), s.std_error(), s.count())
    };
    Ok(FkEstimate {
        value,
        std_error,
        sample_count: count,
        tilt_drift: Some(vec![delta]),
        target: format!("E[e^A; |B_t| >= {radius}] at t={t}"),
    })
}

/// Minimal root in `[0, 1]` of `u = F(u) = sum_n p_n u^n`: the extinction
/// probability of the single-site model (starting-point independent in the
/// recurrent dimensions).
pub fn fkpp_extinction_fixed_point(pmf: &[f64]) -> Result<f64> {
    if pmf.is_empty() || pmf.iter().any(|&p| !(0.0..=1.0).contains(&p)) {
        return Err(Error::InvalidMechanism("pmf entries must lie in [0, 1]".into()));
    }
    let total: f64 = pmf.iter().sum();
    if (total - 1.0).abs() > crate::model::PMF_TOL {
        return Err(Error::InvalidMechanism(format!("pmf sums to {total}, expected 1")));
    }
    let p0 = pmf[0];
    if p0 == 0.0 {
        return Ok(0.0);
    }
    let q: f64 = pmf.iter().enumerate().map(|(n, &p)| n as f64 * p).sum();
    if q <= 1.0 {
        return Ok(1.0);
    }
    let f = |u: f64| -> f64 {
        let mut acc = 0.0;
        let mut pow = 1.0;
        for &p in pmf {
            acc += p * pow;
            pow *= u;
        }
        acc
    };
    // g(u) = F(u) - u is convex with g(0) = p0 > 0, g(1) = 0, g'(1) =
    // Q - 1 > 0, so the minimal root lies in (0, 1); find a sign change
    // from below 1 and bisect.
    let g = |u: f64| f(u) - u;
    let mut hi = 1.0 - 1e-3;
    let mut guard = 0;
    while g(hi) >= 0.0 {
        hi = 1.0 - (1.0 - hi) / 2.0;
        guard += 1;
        if guard > 60 {
            return Ok(1.0);
        }
    }
    let mut lo = 0.0;
    let mut hi = hi;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-15 {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// McKean-type lower-bound functional `E_x[e^{-A_t^mu}; |B_t| >= r]`: the
/// no-branching contribution to `P_x(L_t >= r)`, estimated over plain
/// paths. The engine's direct tail frequency must dominate it.
pub fn mckean_fk_check(
    x0: &[f64],
    t: f64,
    r_threshold: f64,
    mu: &RateMeasure,
    n_paths: u64,
    dt: f64,
    epsilon: f64,
    rng: &RngStream,
) -> Result<FkEstimate> {
    mu.validate()?;
    // Reuse the signed estimator with nu = -mu.
    let nu = SignedNu {
        base: mu.clone(),
        nu_weights: mu.weights().iter().map(|w| -w).collect(),
    };
    let mut est = estimate_fk(
        x0,
        t,
        TargetFn::OutsideRadius(r_threshold),
        &nu,
        n_paths,
        dt,
        epsilon,
        rng,
    )?;
    est.target = format!("E[e^{{-A^mu}}; |B_t| >= {r_threshold}] at t={t}");
    Ok(est)
}
