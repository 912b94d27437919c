use nalgebra::DVector;
use serde::Serialize;

use super::{FlowError, Trajectory};

/// Distance within which a local extremum of `‖x(t) − c‖ − r` counts as a
/// grazing contact.
const TANGENCY_TOL: f64 = 1e-9;
const MIN_SAMPLES_PER_SEGMENT: usize = 4;

/// A grazing contact with the sphere where no sign change was visible at the
/// coarse sampling resolution.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TangencyWarning {
    pub t: f64,
    pub signed_distance: f64,
}

/// Time spent by a trajectory inside the open ball `B_r(center)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BallOccupancy {
    pub center: Vec<f64>,
    pub radius: f64,
    /// Disjoint, increasing `(t_in, t_out)` pairs.
    pub intervals: Vec<(f64, f64)>,
    pub total_time: f64,
    pub warnings: Vec<TangencyWarning>,
}

/// Measures `ℒ¹{t : ‖x(t) − center‖ < r}` over the trajectory's interval.
///
/// The dense output is scanned at resolution `max_step`; every sign change of
/// `‖x(t) − center‖ − r` is refined by bisection to the trajectory's
/// `event_time_tol`.
pub fn ball_occupancy(traj: &Trajectory, center: &DVector<f64>, r: f64) -> Result<BallOccupancy, FlowError> {
    if !(r > 0.0) {
        return Err(FlowError::InvalidConfig(format!("ball radius must be positive, got {r}")));
    }
    if center.len() != traj.dim() {
        return Err(FlowError::DimensionMismatch {
            expected: traj.dim(),
            got: center.len(),
        });
    }
    let phi = |t: f64| -> f64 {
        let x = traj.state_at(t).expect("sample time inside trajectory");
        (x - center).norm() - r
    };

    let mut samples: Vec<(f64, f64)> = Vec::new();
    let times = traj.times();
    samples.push((times[0], phi(times[0])));
    for w in times.windows(2) {
        let n = ((w[1] - w[0]) / traj.max_step()).ceil().max(MIN_SAMPLES_PER_SEGMENT as f64) as usize;
        for j in 1..=n {
            let t = if j == n { w[1] } else { w[0] + (w[1] - w[0]) * j as f64 / n as f64 };
            samples.push((t, phi(t)));
        }
    }

    let mut crossings: Vec<f64> = Vec::new();
    let mut warnings = Vec::new();
    let refine = |lo: f64, hi: f64, inside_lo: bool| -> f64 {
        let (mut lo, mut hi) = (lo, hi);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            let pm = phi(mid);
            let converged = hi - lo <= traj.event_time_tol() && pm.abs() <= 1e-8 * r;
            if converged || mid <= lo || mid >= hi {
                break;
            }
            if (pm < 0.0) == inside_lo {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    };
    for k in 1..samples.len() {
        let (ta, pa) = samples[k - 1];
        let (tb, pb) = samples[k];
        let (ia, ib) = (pa < 0.0, pb < 0.0);
        if ia != ib {
            crossings.push(refine(ta, tb, ia));
            continue;
        }
        // A local extremum of phi between samples may hide a pair of
        // crossings (a short dip through the sphere) or a grazing contact.
        if k + 1 < samples.len() {
            let (tc, pc) = samples[k + 1];
            let dip = if ib { pb >= pa && pb >= pc } else { pb <= pa && pb <= pc };
            if dip && (pc < 0.0) == ib {
                let (t_ext, p_ext) = extremum(&phi, ta, tc, !ib);
                if (p_ext < 0.0) != ib {
                    crossings.push(refine(ta, t_ext, ia));
                    crossings.push(refine(t_ext, tc, p_ext < 0.0));
                } else if p_ext.abs() <= TANGENCY_TOL {
                    warnings.push(TangencyWarning {
                        t: t_ext,
                        signed_distance: p_ext,
                    });
                    let fine = traj.max_step() / 100.0;
                    let n = ((tc - ta) / fine).ceil().max(2.0) as usize;
                    let mut prev = (ta, pa);
                    for j in 1..=n {
                        let t = if j == n { tc } else { ta + (tc - ta) * j as f64 / n as f64 };
                        let p = phi(t);
                        if (prev.1 < 0.0) != (p < 0.0) {
                            crossings.push(refine(prev.0, t, prev.1 < 0.0));
                        }
                        prev = (t, p);
                    }
                }
            }
        }
    }
    // The neighbour test above cannot see an extremum between an endpoint
    // sample and its neighbour, such as a short dip right after the start.
    let last = samples.len() - 1;
    if last >= 1 {
        for (a, b) in [(0, 1), (last, last - 1)] {
            let (ta, pa) = samples[a];
            let (tb, pb) = samples[b];
            let inside = pb < 0.0;
            let toward_sphere = if inside { pa >= pb } else { pa <= pb };
            if (pa < 0.0) != inside || !toward_sphere {
                continue;
            }
            let (lo, hi) = if ta < tb { (ta, tb) } else { (tb, ta) };
            let (t_ext, p_ext) = extremum(&phi, lo, hi, !inside);
            if (p_ext < 0.0) != inside {
                crossings.push(refine(lo, t_ext, inside));
                crossings.push(refine(t_ext, hi, !inside));
            }
        }
    }
    crossings.sort_by(|a, b| a.partial_cmp(b).unwrap());
    crossings.dedup_by(|a, b| (*a - *b).abs() <= traj.event_time_tol());

    let start = times[0];
    let end = traj.end_time();
    let mut intervals = Vec::new();
    let mut inside = samples[0].1 < 0.0;
    let mut t_in = start;
    for c in crossings {
        if inside {
            if c > t_in {
                intervals.push((t_in, c));
            }
        } else {
            t_in = c;
        }
        inside = !inside;
    }
    if inside && end > t_in {
        intervals.push((t_in, end));
    }
    let total_time = intervals.iter().fold(0.0, |acc, (a, b)| acc + (b - a));
    Ok(BallOccupancy {
        center: center.iter().copied().collect(),
        radius: r,
        intervals,
        total_time,
        warnings,
    })
}

/// Golden-section search for the extremum of `phi` on `[a, b]`; a minimum
/// when `minimize`, else a maximum.
fn extremum(phi: &impl Fn(f64) -> f64, a: f64, b: f64, minimize: bool) -> (f64, f64) {
    let sign = if minimize { 1.0 } else { -1.0 };
    let g = |t: f64| sign * phi(t);
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (a, b);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut gc, mut gd) = (g(c), g(d));
    for _ in 0..80 {
        if gc < gd {
            b = d;
            d = c;
            gd = gc;
            c = b - inv_phi * (b - a);
            gc = g(c);
        } else {
            a = c;
            c = d;
            gc = gd;
            d = a + inv_phi * (b - a);
            gd = g(d);
        }
    }
    let t = 0.5 * (a + b);
    (t, phi(t))
}
