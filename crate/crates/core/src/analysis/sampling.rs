//! Seeded sampling of initial conditions.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform direction on the unit sphere in `R^d` (normalized Gaussian).
pub fn unit_direction<R: Rng>(rng: &mut R, d: usize) -> DVector<f64> {
    loop {
        let g = DVector::from_fn(d, |_, _| rng.sample::<f64, _>(StandardNormal));
        let n = g.norm();
        if n > 1e-300 {
            return g / n;
        }
    }
}

/// `n` points uniform on the sphere `∂B_r(center)`.
pub fn on_sphere(seed: u64, center: &DVector<f64>, r: f64, n: usize) -> Vec<DVector<f64>> {
    let mut rng = rng(seed);
    (0..n)
        .map(|_| center + unit_direction(&mut rng, center.len()) * r)
        .collect()
}

/// `n` points uniform (by volume) in the shell `r_in ≤ ‖x − center‖ ≤ r_out`.
pub fn in_shell(seed: u64, center: &DVector<f64>, r_in: f64, r_out: f64, n: usize) -> Vec<DVector<f64>> {
    let d = center.len() as i32;
    let mut rng = rng(seed);
    let (lo, hi) = (r_in.powi(d), r_out.powi(d));
    (0..n)
        .map(|_| {
            let u: f64 = rng.gen();
            let rad = (lo + u * (hi - lo)).powf(1.0 / d as f64);
            center + unit_direction(&mut rng, center.len()) * rad
        })
        .collect()
}

/// `n` points uniform in the ball `B_r(center)`.
pub fn in_ball(seed: u64, center: &DVector<f64>, r: f64, n: usize) -> Vec<DVector<f64>> {
    in_shell(seed, center, 0.0, r, n)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sphere_points_have_radius() {
        let c = DVector::from_vec(vec![1.0, -2.0, 0.5]);
        for p in on_sphere(3, &c, 0.7, 100) {
            assert!(((p - &c).norm() - 0.7).abs() < 1e-14);
        }
    }

    #[test]
    fn shell_points_in_range_and_volume_uniform() {
        let c = DVector::zeros(2);
        let pts = in_shell(9, &c, 1.0, 2.0, 20_000);
        assert!(pts.iter().all(|p| p.norm() >= 1.0 - 1e-12 && p.norm() <= 2.0 + 1e-12));
        // Area fraction of 1 ≤ ρ ≤ 1.5 inside the shell is (2.25 − 1)/(4 − 1).
        let inner = pts.iter().filter(|p| p.norm() <= 1.5).count() as f64 / pts.len() as f64;
        assert!((inner - 1.25 / 3.0).abs() < 0.015);
    }

    #[test]
    fn same_seed_same_points() {
        let c = DVector::zeros(4);
        assert_eq!(in_ball(5, &c, 1.0, 10), in_ball(5, &c, 1.0, 10));
        assert_ne!(in_ball(5, &c, 1.0, 10), in_ball(6, &c, 1.0, 10));
    }
}
