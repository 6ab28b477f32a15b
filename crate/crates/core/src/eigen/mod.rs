//! Principal eigenvalue `lambda(nu)` of `-Δ/2 - nu`, its ground state, and
//! the population growth-rate profile.
//!
//! Atom measures in 1-D are solved through resolvent characterizations
//! (transcendental equations or spectral-radius conditions on small
//! kernels); shell measures in `d >= 2` are solved by radial shooting with
//! delta-shell jump conditions. A finite-difference variational solver
//! ([`lambda_variational_oracle`]) provides an independent check for both.

mod atoms;
mod oracle;
pub mod resolvent;
mod shells;

pub use atoms::{solve_lambda_atoms_general, solve_lambda_single_atom, solve_lambda_two_atoms_signed};
pub use oracle::lambda_variational_oracle;
pub use resolvent::{green_free_radial, resolvent_free, resolvent_free_radial, resolvent_killed_point};
pub use shells::{lambda_radial_oracle, shell_lambda_check, solve_lambda_shells, ShellKind, ShellSpec};

use crate::model::{build_signed_nu, RateMeasure, Scenario};
use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

/// Surface area of the unit sphere in `R^d`.
pub fn unit_sphere_area(d: usize) -> f64 {
    let dd = d as f64;
    2.0 * std::f64::consts::PI.powf(dd / 2.0) / gamma(dd / 2.0)
}

/// How the ground state is represented for evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
enum GroundState {
    /// `h(x) = norm * sum_i c_i G_{-lambda}(x, a_i)` over 1-D atoms.
    AtomKernel { positions: Vec<f64> },
    /// Radial profile `h(x) = f(|x|)` sampled on a uniform grid starting at
    /// `s0`, with the asymptotic tail `tail_coeff * s^{-(d-1)/2} e^{-A s}`
    /// past the grid.
    RadialProfile {
        dimension: usize,
        s0: f64,
        step: f64,
        values: Vec<f64>,
        tail_coeff: f64,
    },
}

/// Principal eigenvalue, decay rate, and normalized ground state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenResult {
    /// Principal eigenvalue, strictly negative.
    pub lambda: f64,
    /// `A = sqrt(-2 lambda)`.
    pub decay_rate: f64,
    /// One coefficient per support point; for atoms these are the kernel
    /// coefficients of `h`, for shells the jump coefficients `nu_i h(r_i)`.
    pub eigen_coeffs: Vec<f64>,
    /// Scale factor making `int h^2 dx = 1`.
    pub norm_constant: f64,
    repr: GroundState,
}

impl EigenResult {
    /// Build from a 1-D atom-kernel representation with unnormalized
    /// coefficients; normalizes via the closed-form `L^2` product of
    /// two-sided exponentials.
    pub(crate) fn from_atom_kernel(lambda: f64, positions: Vec<f64>, coeffs: Vec<f64>) -> Result<Self> {
        if !(lambda < 0.0) {
            return Err(Error::InvalidParameter(format!(
                "eigen result requires lambda < 0, got {lambda}"
            )));
        }
        let a = (-2.0 * lambda).sqrt();
        let l2 = atom_kernel_l2_norm_sq(&positions, &coeffs, a);
        if !(l2 > 0.0) {
            return Err(Error::InvalidParameter("degenerate eigenfunction".into()));
        }
        Ok(EigenResult {
            lambda,
            decay_rate: a,
            eigen_coeffs: coeffs,
            norm_constant: 1.0 / l2.sqrt(),
            repr: GroundState::AtomKernel { positions },
        })
    }

    pub(crate) fn from_radial_profile(
        lambda: f64,
        dimension: usize,
        s0: f64,
        step: f64,
        mut values: Vec<f64>,
        shell_radii: &[f64],
        nu_weights: &[f64],
    ) -> Result<Self> {
        if !(lambda < 0.0) {
            return Err(Error::InvalidParameter(format!(
                "eigen result requires lambda < 0, got {lambda}"
            )));
        }
        let a = (-2.0 * lambda).sqrt();
        let s_end = s0 + step * (values.len() - 1) as f64;
        let f_end = *values.last().unwrap();
        let tail_coeff_un = f_end * s_end.powf((dimension as f64 - 1.0) / 2.0) * (a * s_end).exp();
        // L2 norm: omega_d * int f^2 s^{d-1} ds over the grid (trapezoid)
        // plus the analytic tail integral omega_d * C^2 e^{-2 A s_end}/(2 A).
        let omega = unit_sphere_area(dimension);
        let mut acc = 0.0;
        for (i, &f) in values.iter().enumerate() {
            let s = s0 + step * i as f64;
            let w = if i == 0 || i == values.len() - 1 { 0.5 } else { 1.0 };
            acc += w * f * f * s.powi(dimension as i32 - 1);
        }
        let grid_part = omega * acc * step;
        let tail_part = omega * tail_coeff_un * tail_coeff_un * (-2.0 * a * s_end).exp() / (2.0 * a);
        let l2 = grid_part + tail_part;
        if !(l2 > 0.0) {
            return Err(Error::InvalidParameter("degenerate eigenfunction".into()));
        }
        let norm = 1.0 / l2.sqrt();
        for v in values.iter_mut() {
            *v *= norm;
        }
        let repr = GroundState::RadialProfile {
            dimension,
            s0,
            step,
            values,
            tail_coeff: tail_coeff_un * norm,
        };
        let probe = EigenResult {
            lambda,
            decay_rate: a,
            eigen_coeffs: Vec::new(),
            norm_constant: norm,
            repr,
        };
        let coeffs = shell_radii
            .iter()
            .zip(nu_weights)
            .map(|(&r, &w)| w * probe.eval_radial(r))
            .collect();
        Ok(EigenResult {
            eigen_coeffs: coeffs,
            ..probe
        })
    }

    /// Evaluate the normalized ground state at a point.
    pub fn eval(&self, x: &[f64]) -> f64 {
        match &self.repr {
            GroundState::AtomKernel { positions } => {
                let a = self.decay_rate;
                let xi = x[0];
                let mut s = 0.0;
                for (&p, &c) in positions.iter().zip(&self.eigen_coeffs) {
                    s += c * (-a * (xi - p).abs()).exp() / a;
                }
                self.norm_constant * s
            }
            GroundState::RadialProfile { .. } => {
                let r = x.iter().map(|c| c * c).sum::<f64>().sqrt();
                self.eval_radial(r)
            }
        }
    }

    fn eval_radial(&self, r: f64) -> f64 {
        match &self.repr {
            GroundState::RadialProfile {
                dimension,
                s0,
                step,
                values,
                tail_coeff,
            } => {
                let s_end = s0 + step * (values.len() - 1) as f64;
                if r >= s_end {
                    return tail_coeff * r.powf(-((*dimension as f64 - 1.0) / 2.0))
                        * (-self.decay_rate * r).exp();
                }
                if r <= *s0 {
                    return values[0];
                }
                let pos = (r - s0) / step;
                let i = pos.floor() as usize;
                let frac = pos - i as f64;
                if i + 1 >= values.len() {
                    return values[values.len() - 1];
                }
                values[i] * (1.0 - frac) + values[i + 1] * frac
            }
            GroundState::AtomKernel { .. } => self.eval(&[r]),
        }
    }

    /// `int h(y) dy` over all of `R^d`.
    pub fn integral(&self) -> f64 {
        match &self.repr {
            GroundState::AtomKernel { .. } => {
                let a = self.decay_rate;
                // int G_A(x, p) dx = 2 / A^2 regardless of p.
                self.norm_constant * self.eigen_coeffs.iter().sum::<f64>() * 2.0 / (a * a)
            }
            GroundState::RadialProfile {
                dimension,
                s0,
                step,
                values,
                tail_coeff,
            } => {
                let omega = unit_sphere_area(*dimension);
                let mut acc = 0.0;
                for (i, &f) in values.iter().enumerate() {
                    let s = s0 + step * i as f64;
                    let w = if i == 0 || i == values.len() - 1 { 0.5 } else { 1.0 };
                    acc += w * f * s.powi(*dimension as i32 - 1);
                }
                let s_end = s0 + step * (values.len() - 1) as f64;
                let a = self.decay_rate;
                // Tail: int C s^{(d-1)/2} e^{-A s} ds from s_end, bounded by
                // the leading term; the integrand is tiny there.
                let tail = tail_coeff * s_end.powf((*dimension as f64 - 1.0) / 2.0)
                    * (-a * s_end).exp()
                    / a;
                omega * (acc * step + tail)
            }
        }
    }

    /// Numerically recompute `int h^2 dx` (used by tests to check the
    /// normalization invariant through an independent quadrature).
    pub fn l2_norm_quadrature(&self) -> f64 {
        match &self.repr {
            GroundState::AtomKernel { positions } => {
                let a = self.decay_rate;
                let lo = positions.iter().cloned().fold(f64::INFINITY, f64::min) - 45.0 / a;
                let hi = positions.iter().cloned().fold(f64::NEG_INFINITY, f64::max) + 45.0 / a;
                crate::numeric::integrate_adaptive(
                    |x| {
                        let v = self.eval(&[x]);
                        v * v
                    },
                    lo,
                    hi,
                    1e-10,
                )
            }
            GroundState::RadialProfile { dimension, s0, step, values, .. } => {
                let omega = unit_sphere_area(*dimension);
                let s_end = s0 + step * (values.len() - 1) as f64 + 30.0 / self.decay_rate;
                omega
                    * crate::numeric::integrate_adaptive(
                        |s| {
                            let v = self.eval_radial(s);
                            v * v * s.powi(*dimension as i32 - 1)
                        },
                        *s0,
                        s_end,
                        1e-10,
                    )
            }
        }
    }
}

/// Closed-form `int (sum_i c_i G_A(x, a_i))^2 dx` in 1-D:
/// pairwise products of two-sided exponentials.
fn atom_kernel_l2_norm_sq(positions: &[f64], coeffs: &[f64], a: f64) -> f64 {
    let mut total = 0.0;
    for i in 0..positions.len() {
        for j in 0..positions.len() {
            let delta = (positions[i] - positions[j]).abs();
            let cross = if delta == 0.0 {
                1.0 / a
            } else {
                (-a * delta).exp() * (delta + 1.0 / a)
            };
            total += coeffs[i] * coeffs[j] / (a * a) * cross;
        }
    }
    total
}

/// Exponential growth/decay exponent `Lambda_delta` of the population beyond
/// radius `delta t`, together with its two transition points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateProfile {
    pub lambda: f64,
    /// `sqrt(-lambda/2)`: spread speed; `Lambda_delta` changes sign here.
    pub critical_delta: f64,
    /// `sqrt(-2 lambda)`: the profile switches to `delta^2/2` here.
    pub ballistic_delta: f64,
}

impl RateProfile {
    /// `Lambda_delta`.
    pub fn value(&self, delta: f64) -> f64 {
        let a = self.ballistic_delta;
        if delta <= a {
            self.lambda + a * delta
        } else {
            delta * delta / 2.0
        }
    }

    /// Expected exponential growth rate of `Z_t^{delta t}`, i.e.
    /// `-Lambda_delta`.
    pub fn growth_rate(&self, delta: f64) -> f64 {
        -self.value(delta)
    }
}

/// Build the rate profile for a negative principal eigenvalue.
pub fn rate_profile(lambda: f64) -> Result<RateProfile> {
    if !(lambda < 0.0) {
        return Err(Error::InvalidParameter(format!(
            "rate profile requires lambda < 0, got {lambda}"
        )));
    }
    Ok(RateProfile {
        lambda,
        critical_delta: (-lambda / 2.0).sqrt(),
        ballistic_delta: (-2.0 * lambda).sqrt(),
    })
}

/// Solve the eigenproblem for a scenario's signed measure `nu = (Q-1) mu`.
/// Returns `None` when `lambda(nu) >= 0`.
pub fn solve_for_scenario(s: &Scenario) -> Result<Option<EigenResult>> {
    let nu = build_signed_nu(&s.measure, &s.mechanism)?;
    let support = nu.signed_support();
    if support.iter().all(|&(_, w)| w <= 0.0) {
        return Ok(None);
    }
    match &s.measure {
        RateMeasure::Atoms1d { .. } => solve_lambda_atoms_general(&support),
        RateMeasure::Shells { dimension, .. } => shells::solve_radial_eigen(*dimension, &support),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rate_profile_reference_points() {
        let p = rate_profile(-0.5).unwrap();
        assert!((p.value(0.0) - (-0.5)).abs() < 1e-15);
        assert!((p.value(0.25) - (-0.25)).abs() < 1e-15);
        assert!((p.value(1.5) - 1.125).abs() < 1e-15);
        assert!((p.critical_delta - 0.5).abs() < 1e-15);
        assert!((p.ballistic_delta - 1.0).abs() < 1e-15);
    }

    #[test]
    fn rate_profile_continuous_at_ballistic_point() {
        for &lambda in &[-0.5, -2.0, -0.317] {
            let p = rate_profile(lambda).unwrap();
            let a = p.ballistic_delta;
            let left = p.lambda + a * a;
            let right = a * a / 2.0;
            assert!((left - right).abs() < 1e-12);
            assert!((left - (-lambda)).abs() < 1e-12);
        }
    }

    #[test]
    fn rate_profile_sign_transition_at_critical_delta() {
        let p = rate_profile(-0.5).unwrap();
        let dc = p.critical_delta;
        assert!(p.value(dc).abs() < 1e-12);
        for i in 1..=20 {
            let eps = i as f64 * 0.02;
            assert!(p.value(dc - eps.min(dc * 0.99)) < 0.0);
            assert!(p.value(dc + eps) > 0.0);
        }
    }

    #[test]
    fn rate_profile_rejects_nonnegative_lambda() {
        assert!(rate_profile(0.0).is_err());
        assert!(rate_profile(1.0).is_err());
    }

    #[test]
    fn unit_sphere_areas() {
        assert!((unit_sphere_area(2) - 2.0 * std::f64::consts::PI).abs() < 1e-12);
        assert!((unit_sphere_area(3) - 4.0 * std::f64::consts::PI).abs() < 1e-12);
    }
}
