//! Independent variational eigenvalue oracle: finite-difference
//! discretization of the quadratic form `(1/2) int |grad u|^2 - int u^2 dnu`
//! on a uniform grid, with atoms represented as delta wells of depth `w/h`
//! at the nearest node. Shells use the radial form with the `(d-1)/(2r)`
//! first-derivative term, discretized conservatively (finite volumes) so the
//! reduced problem stays symmetric.

use crate::model::{RateMeasure, SignedNu};
use crate::numeric::smallest_eig_tridiag;
use crate::{Error, Result};

/// Smallest eigenvalue of the discretized form; converges to `lambda(nu)`
/// from above as `grid_step -> 0`. A nonnegative return value means "no
/// negative eigenvalue detected".
pub fn lambda_variational_oracle(nu: &SignedNu, grid_halfwidth: f64, grid_step: f64) -> Result<f64> {
    if !(grid_step > 0.0) || !(grid_halfwidth > 0.0) {
        return Err(Error::InvalidParameter(
            "oracle requires positive grid_halfwidth and grid_step".into(),
        ));
    }
    let extent = nu.base.support_extent();
    if grid_halfwidth < extent + 1.0 {
        return Err(Error::GridTooSmall {
            halfwidth: grid_halfwidth,
            extent,
        });
    }
    match &nu.base {
        RateMeasure::Atoms1d { .. } => {
            let support = nu
                .base
                .support_coords()
                .into_iter()
                .zip(nu.nu_weights.iter().copied())
                .collect::<Vec<_>>();
            Ok(line_oracle(&support, grid_halfwidth, grid_step))
        }
        RateMeasure::Shells { dimension, .. } => {
            let support = nu
                .base
                .support_coords()
                .into_iter()
                .zip(nu.nu_weights.iter().copied())
                .collect::<Vec<_>>();
            Ok(radial_oracle_grid(*dimension, &support, grid_halfwidth, grid_step))
        }
    }
}

fn line_oracle(atoms: &[(f64, f64)], halfwidth: f64, h: f64) -> f64 {
    let half_nodes = (halfwidth / h).round() as usize;
    let n = 2 * half_nodes + 1;
    let mut diag = vec![1.0 / (h * h); n];
    let off = vec![-0.5 / (h * h); n - 1];
    for &(pos, w) in atoms {
        let idx = ((pos + halfwidth) / h).round() as usize;
        let idx = idx.min(n - 1);
        diag[idx] -= w / h;
    }
    smallest_eig_tridiag(&diag, &off)
}

/// Radial finite-volume discretization on `(0, smax)`: stiffness edges carry
/// the `s^{d-1}` weight at midpoints, node masses are the exact cell
/// integrals of `s^{d-1}`, and a shell of weight `w` at radius `R`
/// contributes `-w R^{d-1}` at its node. Natural (Neumann) boundary at 0,
/// Dirichlet at `smax`.
fn radial_oracle_grid(d: usize, shells: &[(f64, f64)], smax: f64, h: f64) -> f64 {
    let dd = d as f64;
    let n = (smax / h).round() as usize; // nodes s_i = i h, i = 0..n-1
    let mut stiff_diag = vec![0.0; n];
    let mut stiff_off = vec![0.0; n - 1];
    let edge_w = |i: usize| ((i as f64 + 0.5) * h).powf(dd - 1.0);
    for i in 0..n {
        if i + 1 < n {
            let w = edge_w(i);
            stiff_diag[i] += 0.5 * w / (h * h);
            stiff_off[i] = -0.5 * w / (h * h);
            stiff_diag[i + 1] += 0.5 * w / (h * h);
        }
    }
    // Edge from the last node to the Dirichlet boundary at smax.
    stiff_diag[n - 1] += 0.5 * edge_w(n - 1) / (h * h);
    for &(radius, w) in shells {
        let idx = (radius / h).round() as usize;
        let idx = idx.min(n - 1);
        stiff_diag[idx] -= w * radius.powf(dd - 1.0) / h;
    }
    // Lumped mass: exact cell integral of s^{d-1}.
    let mass: Vec<f64> = (0..n)
        .map(|i| {
            let lo = if i == 0 { 0.0 } else { (i as f64 - 0.5) * h };
            let hi = (i as f64 + 0.5) * h;
            (hi.powf(dd) - lo.powf(dd)) / dd
        })
        .collect();
    // Symmetrize the generalized problem A v = lambda M v.
    let inv_sqrt: Vec<f64> = mass.iter().map(|&m| 1.0 / m.sqrt()).collect();
    let diag: Vec<f64> = (0..n)
        .map(|i| stiff_diag[i] * inv_sqrt[i] * inv_sqrt[i] * h)
        .collect();
    let off: Vec<f64> = (0..n - 1)
        .map(|i| stiff_off[i] * inv_sqrt[i] * inv_sqrt[i + 1] * h)
        .collect();
    smallest_eig_tridiag(&diag, &off)
}
