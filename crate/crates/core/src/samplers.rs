//! Stochastic primitives: reproducible random streams, Gaussian increments,
//! first-passage and inverse-local-time draws, survival-conditioned and
//! taboo-conditioned endpoint samplers, and regularized local-time
//! increments for the time-stepped engine.

use crate::{Error, Result};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, StandardNormal, StandardUniform};

/// Counter-based reproducible random stream: a ChaCha generator keyed by
/// `(master_seed, stream_id)` through a SplitMix64 expansion, so replicas
/// can run in any order (or in parallel) and still reproduce bit-for-bit.
#[derive(Debug, Clone)]
pub struct RngStream {
    rng: ChaCha8Rng,
    master_seed: u64,
    stream_id: u64,
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e3779b97f4a7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

impl RngStream {
    pub fn new(master_seed: u64, stream_id: u64) -> Self {
        let mut state = master_seed ^ splitmix64(&mut stream_id.clone());
        let mut seed = [0u8; 32];
        for chunk in seed.chunks_mut(8) {
            chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
        }
        RngStream {
            rng: ChaCha8Rng::from_seed(seed),
            master_seed,
            stream_id,
        }
    }

    /// Derive an independent stream for a sub-purpose of this one.
    pub fn substream(&self, tag: u64) -> Self {
        let mut state = self.stream_id ^ 0xa076_1d64_78bd_642f;
        let mixed = splitmix64(&mut state) ^ tag.wrapping_mul(0xe703_7ed1_a0b4_28db);
        RngStream::new(self.master_seed, mixed)
    }

    pub fn standard_normal(&mut self) -> f64 {
        StandardNormal.sample(&mut self.rng)
    }

    pub fn exp1(&mut self) -> f64 {
        Exp1.sample(&mut self.rng)
    }

    pub fn uniform(&mut self) -> f64 {
        StandardUniform.sample(&mut self.rng)
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dest: &mut [u8]) {
        self.rng.fill_bytes(dest)
    }
}

/// One Brownian increment over `dt` in `d` dimensions.
pub fn sample_gaussian_step(rng: &mut RngStream, dt: f64, d: usize) -> Result<Vec<f64>> {
    if !(dt > 0.0) {
        return Err(Error::InvalidParameter(format!("dt must be positive, got {dt}")));
    }
    let sd = dt.sqrt();
    Ok((0..d).map(|_| sd * rng.standard_normal()).collect())
}

/// In-place Brownian increment; `sqrt_dt` is precomputed by the caller.
#[inline]
pub fn gaussian_step_in_place(rng: &mut RngStream, sqrt_dt: f64, pos: &mut [f64]) {
    for c in pos.iter_mut() {
        *c += sqrt_dt * rng.standard_normal();
    }
}

/// First time 1-D Brownian motion from `x` hits 0, sampled as `x^2 / Z^2`
/// (reflection principle; the CDF is `P(T <= t) = 2 Phi(-|x|/sqrt(t))`).
pub fn sample_first_passage(rng: &mut RngStream, x: f64) -> f64 {
    if x == 0.0 {
        return 0.0;
    }
    let mut z = rng.standard_normal();
    while z == 0.0 {
        z = rng.standard_normal();
    }
    (x / z) * (x / z)
}

/// Inverse local time at 0 at level `ell` for Brownian motion started at 0:
/// the 1/2-stable subordinator with `E[e^{-alpha tau_ell}] = e^{-ell
/// sqrt(2 alpha)}`, sampled as `ell^2 / Z^2`.
pub fn sample_inverse_local_time(rng: &mut RngStream, ell: f64) -> Result<f64> {
    if ell < 0.0 {
        return Err(Error::InvalidParameter(format!("ell must be >= 0, got {ell}")));
    }
    if ell == 0.0 {
        return Ok(0.0);
    }
    let mut z = rng.standard_normal();
    while z == 0.0 {
        z = rng.standard_normal();
    }
    Ok((ell / z) * (ell / z))
}

/// Local time at 0 at time `t` given the endpoint magnitude `|B_t| = b`,
/// for Brownian motion started at 0: `sqrt(b^2 + 2 t E) - b` with `E`
/// standard exponential.
pub fn sample_conditional_local_time(rng: &mut RngStream, b_abs: f64, t: f64) -> f64 {
    let e = rng.exp1();
    (b_abs * b_abs + 2.0 * t * e).sqrt() - b_abs
}

/// Endpoint of Brownian motion from 0 at time `t`, conditioned on an
/// exponential clock driven by `gamma x` (local time at 0) not having rung:
/// the law weighted by `e^{-gamma L_t}`, normalized. Exact rejection:
/// propose `B_t ~ N(0, t)`, draw `L_t | |B_t|` from the conditional law,
/// accept with probability `e^{-gamma L_t}`.
pub fn sample_survivor_position(rng: &mut RngStream, gamma: f64, t: f64) -> Result<f64> {
    if !(gamma > 0.0) || !(t > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "survivor sampler requires gamma, t > 0, got {gamma}, {t}"
        )));
    }
    let sd = t.sqrt();
    loop {
        let b = sd * rng.standard_normal();
        let lt = sample_conditional_local_time(rng, b.abs(), t);
        if rng.uniform() < (-gamma * lt).exp() {
            return Ok(b);
        }
    }
}

/// Endpoint displacement (relative to the barrier) of 1-D Brownian motion
/// started at `x != 0` (relative to a barrier at 0), at time `tau`,
/// conditioned on not having hit the barrier. Exact rejection against the
/// image-kernel density ratio `1 - e^{-2 x y / tau}` on the same side.
pub fn sample_taboo_position(rng: &mut RngStream, x: f64, tau: f64) -> Result<f64> {
    if x == 0.0 || !(tau > 0.0) {
        return Err(Error::InvalidParameter(
            "taboo sampler requires x != 0 and tau > 0".into(),
        ));
    }
    let sd = tau.sqrt();
    loop {
        let y = x + sd * rng.standard_normal();
        if y * x <= 0.0 {
            continue;
        }
        if rng.uniform() < 1.0 - (-2.0 * x * y / tau).exp() {
            return Ok(y);
        }
    }
}

/// Regularized local-time increment at 0 for one step: `(dt / 2 eps)` when
/// the step midpoint lies within `eps` of the point, else 0. Accumulated
/// over a path this converges to `L_t` as `dt, eps -> 0` with
/// `eps = kappa sqrt(dt)`.
#[inline]
pub fn local_time_increment(pre_pos: f64, post_pos: f64, dt: f64, epsilon: f64) -> f64 {
    debug_assert!(dt > 0.0 && epsilon > 0.0);
    let mid = 0.5 * (pre_pos + post_pos);
    if mid.abs() < epsilon {
        dt / (2.0 * epsilon)
    } else {
        0.0
    }
}

/// Radial analogue for a shell of radius `big_r`: band test on the radial
/// midpoint. Approximates the additive functional of the unit-density
/// surface measure per unit weight.
#[inline]
pub fn shell_local_time_increment(pre_r: f64, post_r: f64, big_r: f64, dt: f64, epsilon: f64) -> f64 {
    debug_assert!(dt > 0.0 && epsilon > 0.0 && big_r > 0.0);
    let mid = 0.5 * (pre_r + post_r);
    if (mid - big_r).abs() < epsilon {
        dt / (2.0 * epsilon)
    } else {
        0.0
    }
}

/// Default regularization bandwidth `0.5 sqrt(dt)`.
///
/// The running mean of the regularized increments is unbiased for `L_t` at
/// any bandwidth, but exponential functionals `E[e^{c L_t}]` see a bias
/// that grows with the band: at `2 sqrt(dt)` it reaches several percent for
/// the step sizes this crate uses, while `0.5 sqrt(dt)` keeps it below half
/// a percent (measured against the closed form `2 e^{c^2 t/2} Phi(c sqrt
/// t)`). The factor stays configurable.
pub fn default_epsilon(dt: f64) -> f64 {
    0.5 * dt.sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::{ks_two_sample, normal_cdf};

    #[test]
    fn streams_reproduce_bit_for_bit() {
        let mut a = RngStream::new(42, 7);
        let mut b = RngStream::new(42, 7);
        for _ in 0..1000 {
            assert_eq!(a.next_u64(), b.next_u64());
        }
    }

    #[test]
    fn distinct_streams_differ() {
        let mut a = RngStream::new(42, 0);
        let mut b = RngStream::new(42, 1);
        let mut c = RngStream::new(43, 0);
        let va: Vec<u64> = (0..8).map(|_| a.next_u64()).collect();
        let vb: Vec<u64> = (0..8).map(|_| b.next_u64()).collect();
        let vc: Vec<u64> = (0..8).map(|_| c.next_u64()).collect();
        assert_ne!(va, vb);
        assert_ne!(va, vc);
        let mut s = RngStream::new(42, 0).substream(3);
        let vs: Vec<u64> = (0..8).map(|_| s.next_u64()).collect();
        assert_ne!(va, vs);
    }

    #[test]
    fn gaussian_step_moments() {
        let mut rng = RngStream::new(1, 0);
        let dt = 0.3;
        let n = 1_000_000usize;
        let mut sum = 0.0;
        let mut sumsq = 0.0;
        for _ in 0..n {
            let v = sample_gaussian_step(&mut rng, dt, 1).unwrap()[0];
            sum += v;
            sumsq += v * v;
        }
        let mean = sum / n as f64;
        let var = sumsq / n as f64 - mean * mean;
        // CLT bound: |mean| < 4 sqrt(dt / n).
        assert!(mean.abs() < 4.0 * (dt / n as f64).sqrt(), "mean {mean}");
        assert!((var - dt).abs() / dt < 0.02, "var {var}");
        assert!(sample_gaussian_step(&mut rng, 0.0, 1).is_err());
    }

    #[test]
    fn first_passage_cdf_and_scaling() {
        let mut rng = RngStream::new(2, 0);
        let n = 100_000usize;
        let mut hits = 0usize;
        let mut x1 = Vec::with_capacity(n);
        let mut x2 = Vec::with_capacity(n);
        for _ in 0..n {
            let t = sample_first_passage(&mut rng, 1.0);
            if t <= 1.0 {
                hits += 1;
            }
            x1.push(t);
            x2.push(sample_first_passage(&mut rng, 2.0));
        }
        let target = 2.0 * normal_cdf(-1.0); // 0.3173...
        let freq = hits as f64 / n as f64;
        assert!((freq - target).abs() < 0.01, "{freq} vs {target}");
        // Brownian scaling: T_{x=2} =d 4 T_{x=1}.
        let scaled: Vec<f64> = x1.iter().map(|&t| 4.0 * t).collect();
        let (_, p) = ks_two_sample(&scaled, &x2);
        assert!(p > 0.01, "KS p = {p}");
        assert_eq!(sample_first_passage(&mut rng, 0.0), 0.0);
    }

    #[test]
    fn inverse_local_time_laplace_transform() {
        // E[e^{-alpha tau_ell}] = e^{-ell sqrt(2 alpha)}; at alpha = 0.5,
        // ell = 1 the target is e^{-1}.
        let mut rng = RngStream::new(3, 0);
        let n = 100_000usize;
        let mut acc = 0.0;
        for _ in 0..n {
            let tau = sample_inverse_local_time(&mut rng, 1.0).unwrap();
            acc += (-0.5 * tau).exp();
        }
        let mean = acc / n as f64;
        let target = (-1.0_f64).exp();
        assert!((mean - target).abs() < 0.005, "{mean} vs {target}");
        assert_eq!(sample_inverse_local_time(&mut rng, 0.0).unwrap(), 0.0);
        assert!(sample_inverse_local_time(&mut rng, -1.0).is_err());
    }

    #[test]
    fn inverse_local_time_additivity() {
        // tau_{l1+l2} =d tau_{l1} + tau_{l2}' (independent increments of the
        // subordinator).
        let mut rng = RngStream::new(4, 0);
        let n = 50_000usize;
        let mut direct = Vec::with_capacity(n);
        let mut summed = Vec::with_capacity(n);
        for _ in 0..n {
            direct.push(sample_inverse_local_time(&mut rng, 1.7).unwrap());
            let a = sample_inverse_local_time(&mut rng, 1.0).unwrap();
            let b = sample_inverse_local_time(&mut rng, 0.7).unwrap();
            summed.push(a + b);
        }
        let (_, p) = ks_two_sample(&direct, &summed);
        assert!(p > 0.01, "KS p = {p}");
    }

    #[test]
    fn conditional_local_time_against_fine_grid_paths() {
        // Verify the exact conditional law L_t | |B_t| against brute-force
        // path simulation before relying on it: simulate dt = 1e-5 paths,
        // bin by |B_t|, and compare conditional means of the regularized
        // local time within bins.
        let mut rng = RngStream::new(5, 0);
        let t = 1.0;
        let dt = 1e-5;
        let eps = default_epsilon(dt);
        let n_paths = 10_000usize;
        let steps = (t / dt) as usize;
        let sqrt_dt = dt.sqrt();
        let edges = [0.0, 0.4, 0.8, 1.3, 2.0];
        let mut grid_sum = [0.0f64; 4];
        let mut grid_cnt = [0usize; 4];
        for _ in 0..n_paths {
            let mut x = 0.0;
            let mut lt = 0.0;
            for _ in 0..steps {
                let pre = x;
                x += sqrt_dt * rng.standard_normal();
                lt += local_time_increment(pre, x, dt, eps);
            }
            let b = x.abs();
            for k in 0..4 {
                if b >= edges[k] && b < edges[k + 1] {
                    grid_sum[k] += lt;
                    grid_cnt[k] += 1;
                }
            }
        }
        // Conditional mean of sqrt(b^2 + 2tE) - b at bin centers, from the
        // exact sampler.
        for k in 0..4 {
            if grid_cnt[k] < 300 {
                continue;
            }
            let grid_mean = grid_sum[k] / grid_cnt[k] as f64;
            let b_mid = 0.5 * (edges[k] + edges[k + 1]);
            let mut exact = 0.0;
            let m = 200_000;
            for _ in 0..m {
                exact += sample_conditional_local_time(&mut rng, b_mid, t);
            }
            exact /= m as f64;
            assert!(
                (grid_mean - exact).abs() < 0.08,
                "bin {k}: grid {grid_mean} vs exact {exact}"
            );
        }
    }

    #[test]
    fn survivor_position_gamma_to_zero_is_gaussian() {
        let mut rng = RngStream::new(6, 0);
        let t = 1.5;
        let n = 100_000usize;
        let mut samples = Vec::with_capacity(n);
        let mut gauss = Vec::with_capacity(n);
        for _ in 0..n {
            samples.push(sample_survivor_position(&mut rng, 1e-9, t).unwrap());
            gauss.push(t.sqrt() * rng.standard_normal());
        }
        let (_, p) = ks_two_sample(&samples, &gauss);
        assert!(p > 0.01, "KS p = {p}");
    }

    #[test]
    fn survivor_position_symmetric_and_acceptance_matches_survival() {
        let gamma = 1.0;
        let t: f64 = 1.0;
        let n = 100_000usize;
        // Acceptance rate of the rejection sampler = E[e^{-gamma L_t}],
        // which the Levy identity (L_t =d |N(0,t)|) gives in closed form:
        // E e^{-g|Z|sqrt(t)} = 2 e^{g^2 t/2} Phi(-g sqrt(t)).
        let mut rng = RngStream::new(7, 0);
        let mut accepted = 0usize;
        let mut proposals = 0usize;
        let mut mean = 0.0;
        let sd = t.sqrt();
        while accepted < n {
            let b = sd * rng.standard_normal();
            let lt = sample_conditional_local_time(&mut rng, b.abs(), t);
            proposals += 1;
            if rng.uniform() < (-gamma * lt).exp() {
                accepted += 1;
                mean += b;
            }
        }
        mean /= n as f64;
        let rate = accepted as f64 / proposals as f64;
        let target = 2.0 * (gamma * gamma * t / 2.0_f64).exp() * normal_cdf(-gamma * t.sqrt());
        assert!((rate - target).abs() < 0.01, "{rate} vs {target}");
        // Symmetry: mean within 4 standard errors of 0.
        let se = (t / n as f64).sqrt();
        assert!(mean.abs() < 4.0 * se, "mean {mean}");
    }

    #[test]
    fn taboo_position_stays_on_one_side_and_matches_kernel_mean() {
        let mut rng = RngStream::new(8, 0);
        let x = 0.8;
        let tau = 0.5;
        let n = 200_000usize;
        let mut mean = 0.0;
        for _ in 0..n {
            let y = sample_taboo_position(&mut rng, x, tau).unwrap();
            assert!(y > 0.0);
            mean += y;
        }
        mean /= n as f64;
        // Mean of the killed kernel: int y (phi(y-x) - phi(y+x)) dy /
        // P(no hit), computed by quadrature.
        let sd = tau.sqrt();
        let dens = |y: f64| {
            let a = (-(y - x) * (y - x) / (2.0 * tau)).exp();
            let b = (-(y + x) * (y + x) / (2.0 * tau)).exp();
            (a - b) / (sd * (2.0 * std::f64::consts::PI).sqrt())
        };
        let num = crate::numeric::integrate_adaptive(|y| y * dens(y), 0.0, x + 12.0 * sd, 1e-10);
        let den = crate::numeric::integrate_adaptive(dens, 0.0, x + 12.0 * sd, 1e-10);
        let target = num / den;
        assert!((mean - target).abs() < 0.01, "{mean} vs {target}");
    }

    #[test]
    fn local_time_increment_zero_away_from_point() {
        assert_eq!(local_time_increment(5.0, 5.1, 1e-3, 0.06), 0.0);
        assert!(local_time_increment(0.01, -0.01, 1e-3, 0.06) > 0.0);
        assert_eq!(shell_local_time_increment(0.2, 0.3, 1.0, 1e-3, 0.06), 0.0);
        assert!(shell_local_time_increment(0.99, 1.01, 1.0, 1e-3, 0.06) > 0.0);
    }

    #[test]
    fn accumulated_local_time_matches_levy_identity() {
        // E[L_1] = E|N(0,1)| = sqrt(2/pi) at the wide reference band
        // eps = 2 sqrt(dt); refinement halves dt and expects the estimate
        // to move by less than 0.01.
        let run = |dt: f64, paths: usize, seed: u64| -> f64 {
            let mut rng = RngStream::new(seed, 0);
            let eps = 2.0 * dt.sqrt();
            let steps = (1.0 / dt) as usize;
            let sqrt_dt = dt.sqrt();
            let mut total = 0.0;
            for _ in 0..paths {
                let mut x = 0.0;
                let mut lt = 0.0;
                for _ in 0..steps {
                    let pre = x;
                    x += sqrt_dt * rng.standard_normal();
                    lt += local_time_increment(pre, x, dt, eps);
                }
                total += lt;
            }
            total / paths as f64
        };
        let target = (2.0 / std::f64::consts::PI).sqrt();
        let coarse = run(1e-4, 10_000, 9);
        assert!((coarse - target).abs() < 0.02, "{coarse} vs {target}");
        let fine = run(5e-5, 10_000, 10);
        assert!((coarse - fine).abs() < 0.01, "{coarse} vs {fine}");
    }

    #[test]
    fn shell_local_time_matches_occupation_density() {
        // Expected accumulated band time for the radial part of a d=3
        // Brownian motion from the origin approximates
        // int_0^t chi_3 density at R ds (chi distribution with 3 dof,
        // scale sqrt(s)).
        let big_r = 1.0;
        let t = 1.0;
        let dt = 1e-4;
        let eps = default_epsilon(dt);
        let paths = 20_000usize;
        let steps = (t / dt) as usize;
        let sqrt_dt = dt.sqrt();
        let mut rng = RngStream::new(11, 0);
        let mut total = 0.0;
        for _ in 0..paths {
            let mut pos = [0.0f64; 3];
            let mut pre_r = 0.0;
            let mut acc = 0.0;
            for _ in 0..steps {
                for c in pos.iter_mut() {
                    *c += sqrt_dt * rng.standard_normal();
                }
                let r = (pos[0] * pos[0] + pos[1] * pos[1] + pos[2] * pos[2]).sqrt();
                acc += shell_local_time_increment(pre_r, r, big_r, dt, eps);
                pre_r = r;
            }
            total += acc;
        }
        let estimate = total / paths as f64;
        // Radial density of |B_s| in d=3: sqrt(2/pi) r^2 s^{-3/2} e^{-r^2/(2s)}.
        let density = |s: f64| {
            (2.0 / std::f64::consts::PI).sqrt() * big_r * big_r * s.powf(-1.5)
                * (-big_r * big_r / (2.0 * s)).exp()
        };
        let target = crate::numeric::integrate_adaptive(density, 1e-9, t, 1e-10);
        let se = 0.01; // generous cushion: compare within a few percent
        assert!(
            (estimate - target).abs() < 3.0 * se + 0.05 * target,
            "{estimate} vs {target}"
        );
        // Refinement stability: halving dt moves the estimate by < 5%.
        let mut rng2 = RngStream::new(12, 0);
        let dt2 = dt / 2.0;
        let eps2 = default_epsilon(dt2);
        let steps2 = (t / dt2) as usize;
        let sqrt_dt2 = dt2.sqrt();
        let mut total2 = 0.0;
        for _ in 0..paths {
            let mut pos = [0.0f64; 3];
            let mut pre_r = 0.0;
            let mut acc = 0.0;
            for _ in 0..steps2 {
                for c in pos.iter_mut() {
                    *c += sqrt_dt2 * rng2.standard_normal();
                }
                let r = (pos[0] * pos[0] + pos[1] * pos[1] + pos[2] * pos[2]).sqrt();
                acc += shell_local_time_increment(pre_r, r, big_r, dt2, eps2);
                pre_r = r;
            }
            total2 += acc;
        }
        let estimate2 = total2 / paths as f64;
        assert!(
            (estimate - estimate2).abs() / estimate < 0.05,
            "{estimate} vs refined {estimate2}"
        );
    }
}
