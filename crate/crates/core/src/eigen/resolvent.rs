//! Resolvent kernels of Brownian motion (generator `Δ/2`): the free
//! `alpha`-resolvent density in any dimension and the 1-D resolvent killed by
//! a point measure `gamma * delta_b`.

use crate::{Error, Result};
use statrs::function::gamma::gamma;

/// Free resolvent density `G_alpha(x, y)` between two points.
///
/// `d = 1` uses the closed form `exp(-sqrt(2 alpha) |x-y|) / sqrt(2 alpha)`;
/// `d >= 2` integrates `int_0^inf exp(-alpha t) p_t(x, y) dt` by a
/// trapezoid rule in `log t` (the integrand decays double-exponentially at
/// both ends after that substitution).
pub fn resolvent_free(alpha: f64, x: &[f64], y: &[f64]) -> Result<f64> {
    if !(alpha > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "resolvent requires alpha > 0, got {alpha}"
        )));
    }
    if x.len() != y.len() {
        return Err(Error::InvalidParameter(
            "resolvent endpoints have mismatched dimensions".into(),
        ));
    }
    let r = dist(x, y);
    Ok(resolvent_free_radial(alpha, r, x.len()))
}

/// `G_alpha` as a function of the separation `r = |x - y|`.
pub fn resolvent_free_radial(alpha: f64, r: f64, d: usize) -> f64 {
    debug_assert!(alpha > 0.0 && r >= 0.0 && d >= 1);
    if d == 1 {
        let s = (2.0 * alpha).sqrt();
        return (-s * r).exp() / s;
    }
    if r == 0.0 {
        return f64::INFINITY;
    }
    // Integrate exp(-alpha e^u) (2 pi e^u)^{-d/2} exp(-r^2 / (2 e^u)) e^u du.
    let dd = d as f64;
    let u_lo = (r * r / 1480.0).ln();
    let mut u_hi = (710.0 / alpha).ln();
    if d >= 3 {
        // Past t_poly the algebraic tail alone is below 1e-16 absolute.
        let t_poly = 1e16_f64.powf(2.0 / (dd - 2.0));
        u_hi = u_hi.min(t_poly.ln());
    }
    if u_hi <= u_lo {
        return 0.0;
    }
    let h = 0.02;
    let n = ((u_hi - u_lo) / h).ceil() as usize + 1;
    let log_norm = -0.5 * dd * (2.0 * std::f64::consts::PI).ln();
    let mut sum = 0.0;
    for i in 0..=n {
        let u = u_lo + (u_hi - u_lo) * i as f64 / n as f64;
        let t = u.exp();
        let log_f = -alpha * t + log_norm - 0.5 * dd * u - r * r / (2.0 * t) + u;
        let w = if i == 0 || i == n { 0.5 } else { 1.0 };
        sum += w * log_f.exp();
    }
    sum * (u_hi - u_lo) / n as f64
}

/// Green function `G(x, y) = Gamma(d/2 - 1) / (2 pi^{d/2} |x-y|^{d-2})` for
/// `d >= 3` (the `alpha -> 0` limit of the resolvent).
pub fn green_free_radial(r: f64, d: usize) -> Result<f64> {
    if d < 3 {
        return Err(Error::InvalidParameter(
            "the Green function requires d >= 3".into(),
        ));
    }
    if !(r > 0.0) {
        return Err(Error::InvalidParameter("Green function requires r > 0".into()));
    }
    let dd = d as f64;
    Ok(gamma(dd / 2.0 - 1.0) / (2.0 * std::f64::consts::PI.powf(dd / 2.0)) / r.powf(dd - 2.0))
}

/// 1-D resolvent of Brownian motion killed by `gamma * delta_0`:
///
/// `G_alpha^{gamma delta_0}(x, y) = (1/s) (e^{-s|x-y|} - gamma/(s+gamma) e^{-s(|x|+|y|)})`
///
/// with `s = sqrt(2 alpha)`.
pub fn resolvent_killed_point(alpha: f64, gamma: f64, x: f64, y: f64) -> Result<f64> {
    if !(alpha > 0.0) || !(gamma > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "killed resolvent requires alpha, gamma > 0, got alpha={alpha}, gamma={gamma}"
        )));
    }
    Ok(killed_kernel_at(alpha, gamma, 0.0, x, y))
}

/// Killed kernel with the barrier at `b`, written in a cancellation-safe
/// form valid down to `alpha -> 0`:
/// `e^{-s u} (s + gamma (1 - e^{-s (D - u)})) / (s (s + gamma))` with
/// `u = |x-y|`, `D = |x-b| + |y-b| >= u`.
pub fn killed_kernel_at(alpha: f64, gamma: f64, b: f64, x: f64, y: f64) -> f64 {
    let s = (2.0 * alpha).sqrt();
    let u = (x - y).abs();
    let dd = (x - b).abs() + (y - b).abs();
    let bracket = s + gamma * (-(-s * (dd - u)).exp_m1());
    (-s * u).exp() * bracket / (s * (s + gamma))
}

/// `alpha -> 0+` limit of [`killed_kernel_at`]:
/// `(1 + gamma (D - u)) / gamma`.
pub fn killed_kernel_limit(gamma: f64, b: f64, x: f64, y: f64) -> f64 {
    let u = (x - y).abs();
    let dd = (x - b).abs() + (y - b).abs();
    (1.0 + gamma * (dd - u)) / gamma
}

fn dist(x: &[f64], y: &[f64]) -> f64 {
    x.iter()
        .zip(y)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn d1_closed_form_at_coincident_points() {
        // alpha = 0.5: G(x, x) = 1 / sqrt(1) = 1.
        let g = resolvent_free(0.5, &[0.3], &[0.3]).unwrap();
        assert!((g - 1.0).abs() < 1e-15);
    }

    #[test]
    fn d1_decays_with_distance() {
        let g1 = resolvent_free(1.0, &[0.0], &[1.0]).unwrap();
        let g2 = resolvent_free(1.0, &[0.0], &[10.0]).unwrap();
        let g3 = resolvent_free(1.0, &[0.0], &[60.0]).unwrap();
        assert!(g1 > g2 && g2 > g3);
        assert!(g3 < 1e-30);
    }

    #[test]
    fn quadrature_matches_d1_closed_form() {
        // The log-trapezoid path is exercised for d >= 2 only, but the same
        // integral with d = 1 must match the closed form.
        for &(alpha, r) in &[(0.5, 1.0), (2.0, 0.3), (0.07, 4.0)] {
            let s = (2.0_f64 * alpha).sqrt();
            let exact = (-s * r).exp() / s;
            // Force the quadrature path by calling the radial routine with
            // d = 1 semantics replicated through the generic integrand:
            let dd = 1.0;
            let u_lo = (r * r / 1480.0_f64).ln();
            let u_hi = (710.0_f64 / alpha).ln();
            let h = 0.02;
            let n = ((u_hi - u_lo) / h).ceil() as usize + 1;
            let log_norm = -0.5 * dd * (2.0 * std::f64::consts::PI).ln();
            let mut sum = 0.0;
            for i in 0..=n {
                let u = u_lo + (u_hi - u_lo) * i as f64 / n as f64;
                let t = u.exp();
                let log_f = -alpha * t + log_norm - 0.5 * dd * u - r * r / (2.0 * t) + u;
                let w = if i == 0 || i == n { 0.5 } else { 1.0 };
                sum += w * log_f.exp();
            }
            let quad = sum * (u_hi - u_lo) / n as f64;
            assert!(
                (quad - exact).abs() / exact < 1e-10,
                "alpha={alpha} r={r}: {quad} vs {exact}"
            );
        }
    }

    #[test]
    fn d3_small_alpha_approaches_green_function() {
        let r = 2.0;
        let g = resolvent_free_radial(1e-12, r, 3);
        let green = green_free_radial(r, 3).unwrap();
        assert!(
            (g - green).abs() / green < 1e-4,
            "resolvent {g} vs green {green}"
        );
        // d = 3 closed form e^{-s r} / (2 pi r) at moderate alpha.
        let alpha = 0.8;
        let s = (2.0_f64 * alpha).sqrt();
        let exact = (-s * r).exp() / (2.0 * std::f64::consts::PI * r);
        let got = resolvent_free_radial(alpha, r, 3);
        assert!((got - exact).abs() / exact < 1e-9, "{got} vs {exact}");
    }

    #[test]
    fn symmetry_in_endpoints() {
        let a = resolvent_free(0.7, &[0.1, -0.4], &[1.2, 0.5]).unwrap();
        let b = resolvent_free(0.7, &[1.2, 0.5], &[0.1, -0.4]).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn killed_kernel_matches_printed_formula() {
        // x = y = a = 1, alpha = 0.5, gamma = 1:
        // (1/1)(e^0 - (1/2) e^{-2}) = 1 - e^{-2}/2.
        let v = resolvent_killed_point(0.5, 1.0, 1.0, 1.0).unwrap();
        let exact = 1.0 - 0.5 * (-2.0_f64).exp();
        assert!((v - exact).abs() < 1e-14);
        assert!((exact - 0.93233).abs() < 5e-6);
    }

    #[test]
    fn killed_kernel_at_origin() {
        // x = y = 0: 1 / (sqrt(2 alpha) + gamma).
        for &(alpha, gamma) in &[(0.5, 1.0), (2.0, 0.25)] {
            let v = resolvent_killed_point(alpha, gamma, 0.0, 0.0).unwrap();
            let exact = 1.0 / ((2.0 * alpha).sqrt() + gamma);
            assert!((v - exact).abs() < 1e-14);
        }
    }

    #[test]
    fn killed_kernel_gamma_to_zero_recovers_free() {
        let free = resolvent_free(0.5, &[0.4], &[1.1]).unwrap();
        let killed = resolvent_killed_point(0.5, 1e-14, 0.4, 1.1).unwrap();
        assert!((free - killed).abs() / free < 1e-10);
    }

    #[test]
    fn killed_kernel_small_alpha_limit_is_stable() {
        let lim = killed_kernel_limit(1.0, 0.0, 1.0, 1.0);
        let near = killed_kernel_at(1e-16, 1.0, 0.0, 1.0, 1.0);
        assert!((lim - near).abs() / lim < 1e-6, "{near} vs {lim}");
        assert!((lim - 3.0).abs() < 1e-14); // (1 + 1*(2-0)) / 1
    }

    #[test]
    fn rejects_nonpositive_alpha() {
        assert!(resolvent_free(0.0, &[0.0], &[1.0]).is_err());
        assert!(resolvent_killed_point(-1.0, 1.0, 0.0, 0.0).is_err());
        assert!(resolvent_killed_point(1.0, 0.0, 0.0, 0.0).is_err());
    }
}
