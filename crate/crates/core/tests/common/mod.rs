//! Reference computations for the acceptance and oracle tests. None of these
//! use the adaptive integrator or the occupancy scanner.

#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use saddlelab_core::{DVector, ObjectiveFunction};

/// `n` points uniform in the box `[-half, half]^d`.
pub fn box_points(seed: u64, d: usize, half: f64, n: usize) -> Vec<DVector<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| DVector::from_fn(d, |_, _| rng.gen_range(-half..half)))
        .collect()
}

fn ngd_direction(f: &dyn ObjectiveFunction, x: &DVector<f64>) -> Option<DVector<f64>> {
    let g = f.gradient(x);
    let n = g.norm();
    (n > 0.0).then(|| -g / n)
}

/// Classical RK4 on the NGD field with a fixed step `dt`, summing
/// `dt·1{‖x_k − center‖ < r}` until the state reaches distance `exit_radius`
/// from `center`, the gradient norm drops to `grad_stop`, or `t_cap` passes.
pub fn fixed_step_occupancy(
    f: &dyn ObjectiveFunction,
    center: &DVector<f64>,
    r: f64,
    exit_radius: f64,
    x0: &DVector<f64>,
    dt: f64,
    t_cap: f64,
    grad_stop: f64,
) -> f64 {
    let mut x = x0.clone();
    let mut occupancy = 0.0;
    let steps = (t_cap / dt).ceil() as usize;
    for _ in 0..steps {
        let dist = (&x - center).norm();
        if dist >= exit_radius {
            break;
        }
        if f.gradient(&x).norm() <= grad_stop {
            break;
        }
        // Midpoint-in-time indicator: the average of both endpoints.
        let inside_start = dist < r;
        let Some(k1) = ngd_direction(f, &x) else { break };
        let Some(k2) = ngd_direction(f, &(&x + &k1 * (dt / 2.0))) else { break };
        let Some(k3) = ngd_direction(f, &(&x + &k2 * (dt / 2.0))) else { break };
        let Some(k4) = ngd_direction(f, &(&x + &k3 * dt)) else { break };
        x += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0);
        let inside_end = (&x - center).norm() < r;
        occupancy += 0.5 * dt * (inside_start as u8 + inside_end as u8) as f64;
    }
    occupancy
}

fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn rec(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
            return left + right + (left + right - whole) / 15.0;
        }
        rec(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) + rec(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
    }
    let (fa, fb) = (f(a), f(b));
    let fm = f(0.5 * (a + b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    rec(f, a, b, fa, fm, fb, whole, tol, 50)
}

/// NGD occupancy of `B_r(0)`, `r = ‖x0‖`, for `f(x) = ½ Σ λᵢ xᵢ²` from a
/// point `x0` on the sphere, from the closed-form GD solution.
///
/// The NGD orbit is the GD orbit `xᵢ(τ) = x0ᵢ e^{−λᵢτ}` traversed at unit
/// speed, so the occupancy is the GD arc length inside the ball. Since
/// `‖x(τ)‖²` is convex in `τ`, the inside set is one interval `(0, τ_out)`.
/// Returns `None` when the orbit never leaves the ball.
pub fn diagonal_quadratic_occupancy(eigs: &[f64], x0: &[f64]) -> Option<f64> {
    let r2: f64 = x0.iter().map(|x| x * x).sum();
    let norm2 = |tau: f64| -> f64 {
        eigs.iter()
            .zip(x0)
            .filter(|(_, x)| **x != 0.0)
            .map(|(l, x)| x * x * (-2.0 * l * tau).exp())
            .sum()
    };
    let slope0: f64 = eigs.iter().zip(x0).map(|(l, x)| -2.0 * l * x * x).sum();
    if slope0 >= 0.0 {
        return Some(0.0);
    }
    let mut hi = 1.0;
    while norm2(hi) < r2 {
        hi *= 2.0;
        if hi > 1e4 {
            return None;
        }
    }
    // Step off the root at τ = 0 to a point inside the ball before bisecting.
    let mut lo = hi;
    while lo > 1e-300 && norm2(lo) >= r2 {
        lo *= 0.5;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if norm2(mid) < r2 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * hi {
            break;
        }
    }
    let tau_out = 0.5 * (lo + hi);
    let speed = |tau: f64| -> f64 {
        eigs.iter()
            .zip(x0)
            .map(|(l, x)| {
                let v = l * x * (-l * tau).exp();
                v * v
            })
            .sum::<f64>()
            .sqrt()
    };
    Some(adaptive_simpson(&speed, 0.0, tau_out, 1e-13))
}
