//! Dormand–Prince 5(4) integration of the GD/NGD flows with dense output.

use nalgebra::DVector;

use super::trajectory::DenseSegment;
use super::{FlowError, FlowKind, IntegratorConfig, Termination, Trajectory};
use super::{NEAR_CRITICAL_GRAD, NEAR_CRITICAL_MAX_STEP};
use crate::objective::ObjectiveFunction;

// Butcher tableau. The flows are autonomous, so the nodes c_i are unused.
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
// Error coefficients (5th minus embedded 4th order weights).
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
// Continuous extension (Hairer, Nørsett & Wanner).
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

const SAFETY: f64 = 0.9;
const MIN_FACTOR: f64 = 0.2;
const MAX_FACTOR: f64 = 5.0;
const REJECT_FACTOR: f64 = 0.25;
const INITIAL_STEP: f64 = 1e-3;
/// Sub-intervals per step scanned for ball-event sign changes.
const EVENT_SAMPLES: usize = 4;

/// Direction of a ball crossing that stops integration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Crossing {
    Enter,
    Exit,
}

/// Stops integration when the trajectory crosses `∂B_radius(center)` in the
/// given direction.
#[derive(Debug, Clone)]
pub struct BallEvent {
    pub center: DVector<f64>,
    pub radius: f64,
    pub crossing: Crossing,
}

impl BallEvent {
    pub fn new(center: DVector<f64>, radius: f64, crossing: Crossing) -> Self {
        Self { center, radius, crossing }
    }

    fn signed_distance(&self, x: &DVector<f64>) -> f64 {
        (x - &self.center).norm() - self.radius
    }

    fn fires(&self, before: f64, after: f64) -> bool {
        match self.crossing {
            Crossing::Enter => before >= 0.0 && after < 0.0,
            Crossing::Exit => before < 0.0 && after >= 0.0,
        }
    }
}

/// Integrates the GD or NGD flow from `x0`.
pub fn integrate(
    f: &dyn ObjectiveFunction,
    kind: &FlowKind,
    x0: &DVector<f64>,
    cfg: &IntegratorConfig,
) -> Result<Trajectory, FlowError> {
    integrate_with_events(f, kind, x0, cfg, &[])
}

/// [`integrate`] with additional ball-crossing stop events; the earliest
/// event (or critical-point arrival) ends the trajectory.
pub fn integrate_with_events(
    f: &dyn ObjectiveFunction,
    kind: &FlowKind,
    x0: &DVector<f64>,
    cfg: &IntegratorConfig,
    events: &[BallEvent],
) -> Result<Trajectory, FlowError> {
    cfg.validate()?;
    let normalized = match kind {
        FlowKind::Gd => false,
        FlowKind::Ngd => true,
        other => return Err(FlowError::UnsupportedKind(other.clone())),
    };
    if x0.len() != f.dim() {
        return Err(FlowError::DimensionMismatch {
            expected: f.dim(),
            got: x0.len(),
        });
    }
    Integrator {
        f,
        normalized,
        cfg,
        events,
        dim: f.dim(),
    }
    .run(kind, x0)
}

struct Integrator<'a> {
    f: &'a dyn ObjectiveFunction,
    normalized: bool,
    cfg: &'a IntegratorConfig,
    events: &'a [BallEvent],
    dim: usize,
}

struct Step {
    y_new: DVector<f64>,
    k: [DVector<f64>; 7],
    grad_norm_new: f64,
    err: f64,
}

enum Attempt {
    Done(Step),
    /// A stage landed exactly on a critical point or produced non-finite values.
    StageFailure,
}

impl Integrator<'_> {
    /// Augmented right-hand side `(ẋ, ‖ẋ‖)` and `‖∇f(x)‖`. `None` when the
    /// NGD field is undefined (zero gradient) or the gradient is not finite.
    fn rhs(&self, y: &DVector<f64>) -> Option<(DVector<f64>, f64)> {
        let x = y.rows(0, self.dim).into_owned();
        let g = self.f.gradient(&x);
        let n = g.norm();
        if !n.is_finite() {
            return None;
        }
        let v = if self.normalized {
            if n == 0.0 {
                return None;
            }
            -g / n
        } else {
            -g
        };
        let speed = v.norm();
        let mut out = DVector::zeros(self.dim + 1);
        out.rows_mut(0, self.dim).copy_from(&v);
        out[self.dim] = speed;
        Some((out, n))
    }

    fn error_norm(&self, y: &DVector<f64>, y_new: &DVector<f64>, err: &DVector<f64>) -> f64 {
        let n = y.len();
        let sum: f64 = (0..n)
            .map(|i| {
                let sc = self.cfg.abs_tol + self.cfg.rel_tol * y[i].abs().max(y_new[i].abs());
                let e = err[i] / sc;
                e * e
            })
            .sum();
        (sum / n as f64).sqrt()
    }

    fn attempt(&self, y: &DVector<f64>, k1: &DVector<f64>, h: f64) -> Attempt {
        macro_rules! stage {
            ($e:expr) => {
                match self.rhs(&$e) {
                    Some((k, _)) => k,
                    None => return Attempt::StageFailure,
                }
            };
        }
        let k2 = stage!(y + k1 * (h * A21));
        let k3 = stage!(y + (k1 * A31 + &k2 * A32) * h);
        let k4 = stage!(y + (k1 * A41 + &k2 * A42 + &k3 * A43) * h);
        let k5 = stage!(y + (k1 * A51 + &k2 * A52 + &k3 * A53 + &k4 * A54) * h);
        let k6 = stage!(y + (k1 * A61 + &k2 * A62 + &k3 * A63 + &k4 * A64 + &k5 * A65) * h);
        let y_new = y + (k1 * A71 + &k3 * A73 + &k4 * A74 + &k5 * A75 + &k6 * A76) * h;
        if y_new.iter().any(|v| !v.is_finite()) {
            return Attempt::StageFailure;
        }
        // At an exact critical point the flow has stopped: zero velocity.
        let (k7, grad_norm_new) = match self.rhs(&y_new) {
            Some(r) => r,
            None => {
                let x = y_new.rows(0, self.dim).into_owned();
                let n = self.f.gradient(&x).norm();
                if !n.is_finite() {
                    return Attempt::StageFailure;
                }
                (DVector::zeros(self.dim + 1), n)
            }
        };
        let err_vec = (k1 * E1 + &k3 * E3 + &k4 * E4 + &k5 * E5 + &k6 * E6 + &k7 * E7) * h;
        let err = self.error_norm(y, &y_new, &err_vec);
        Attempt::Done(Step {
            y_new,
            k: [k1.clone(), k2, k3, k4, k5, k6, k7],
            grad_norm_new,
            err,
        })
    }

    fn dense(t0: f64, h: f64, y: &DVector<f64>, step: &Step) -> DenseSegment {
        let [k1, _, k3, k4, k5, k6, k7] = &step.k;
        let ydiff = &step.y_new - y;
        let bspl = k1 * h - &ydiff;
        let c3 = &ydiff - k7 * h - &bspl;
        let c4 = (k1 * D1 + k3 * D3 + k4 * D4 + k5 * D5 + k6 * D6 + k7 * D7) * h;
        DenseSegment {
            t0,
            h,
            coeffs: [y.clone(), ydiff, bspl, c3, c4],
        }
    }

    fn grad_norm_at(&self, seg: &DenseSegment, t: f64) -> f64 {
        let x = seg.eval(t).rows(0, self.dim).into_owned();
        self.f.gradient(&x).norm()
    }

    /// Bisection for the root of `phi` on `[lo, hi]` with `phi(lo)` on the
    /// "before" side; returns the first time on the "after" side.
    fn bisect(&self, mut lo: f64, mut hi: f64, after: impl Fn(f64) -> bool) -> f64 {
        for _ in 0..200 {
            if hi - lo <= self.cfg.event_time_tol {
                break;
            }
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if after(mid) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        hi
    }

    /// Earliest stop event inside the accepted step `[t0, t1]`.
    fn first_event(&self, seg: &DenseSegment, t0: f64, t1: f64, grad_norm_new: f64) -> Option<(f64, Termination)> {
        let mut best: Option<(f64, Termination)> = None;
        let consider = |t: f64, term: Termination, best: &mut Option<(f64, Termination)>| {
            if best.as_ref().map_or(true, |(bt, _)| t < *bt) {
                *best = Some((t, term));
            }
        };
        if grad_norm_new <= self.cfg.grad_stop {
            let tc = self.bisect(t0, t1, |t| self.grad_norm_at(seg, t) <= self.cfg.grad_stop);
            let point = seg.eval(tc).rows(0, self.dim).iter().copied().collect();
            consider(tc, Termination::CriticalPointReached { point }, &mut best);
        }
        if !self.events.is_empty() {
            let samples: Vec<(f64, DVector<f64>)> = (0..=EVENT_SAMPLES)
                .map(|j| {
                    let t = if j == EVENT_SAMPLES {
                        t1
                    } else {
                        t0 + (t1 - t0) * j as f64 / EVENT_SAMPLES as f64
                    };
                    (t, seg.eval(t).rows(0, self.dim).into_owned())
                })
                .collect();
            for (idx, ev) in self.events.iter().enumerate() {
                for w in samples.windows(2) {
                    let (ta, xa) = &w[0];
                    let (tb, xb) = &w[1];
                    let (pa, pb) = (ev.signed_distance(xa), ev.signed_distance(xb));
                    if ev.fires(pa, pb) {
                        let inside_after = ev.crossing == Crossing::Enter;
                        let te = self.bisect(*ta, *tb, |t| {
                            let x = seg.eval(t).rows(0, self.dim).into_owned();
                            (ev.signed_distance(&x) < 0.0) == inside_after
                        });
                        consider(te, Termination::EventTriggered { event: idx }, &mut best);
                        break;
                    }
                }
            }
        }
        best
    }

    fn run(&self, kind: &FlowKind, x0: &DVector<f64>) -> Result<Trajectory, FlowError> {
        let cfg = self.cfg;
        let d = self.dim;
        let mut y = DVector::zeros(d + 1);
        y.rows_mut(0, d).copy_from(x0);
        let g0 = self.f.gradient(x0).norm();
        if !g0.is_finite() {
            return Err(FlowError::NonFinite { t: 0.0 });
        }
        let mut traj = Trajectory {
            dim: d,
            kind: kind.clone(),
            times: vec![0.0],
            states: vec![x0.clone()],
            f_values: vec![self.f.value(x0)],
            arc_lengths: vec![0.0],
            termination: Termination::HorizonReached,
            segments: Vec::new(),
            max_step: cfg.max_step,
            event_time_tol: cfg.event_time_tol,
        };
        if g0 <= cfg.grad_stop {
            if self.normalized {
                return Err(FlowError::CriticalPointReached {
                    t: 0.0,
                    grad_norm: g0,
                    grad_stop: cfg.grad_stop,
                });
            }
            traj.termination = Termination::CriticalPointReached {
                point: x0.iter().copied().collect(),
            };
            return Ok(traj);
        }

        let (mut k1, mut grad_norm) = self.rhs(&y).ok_or(FlowError::NonFinite { t: 0.0 })?;
        let mut t = 0.0_f64;
        let mut h = INITIAL_STEP.min(cfg.max_step);
        let mut attempts = 0usize;

        loop {
            attempts += 1;
            if attempts > cfg.max_steps {
                return Err(FlowError::TooManySteps {
                    t,
                    max_steps: cfg.max_steps,
                });
            }
            let h_cap = if grad_norm < NEAR_CRITICAL_GRAD {
                cfg.max_step.min(NEAR_CRITICAL_MAX_STEP)
            } else {
                cfg.max_step
            };
            h = h.min(h_cap);
            let remaining = cfg.t_max - t;
            let last = h >= remaining;
            if last {
                h = remaining;
            }
            let h_min = 1e-14 * t.abs().max(1.0);
            if h < h_min {
                if last {
                    traj.termination = Termination::HorizonReached;
                    break;
                }
                return Err(FlowError::StepSizeUnderflow { t, h, grad_norm });
            }

            let step = match self.attempt(&y, &k1, h) {
                Attempt::Done(s) => s,
                Attempt::StageFailure => {
                    h *= REJECT_FACTOR;
                    continue;
                }
            };
            if step.err > 1.0 {
                h *= (SAFETY * step.err.powf(-0.2)).max(MIN_FACTOR);
                continue;
            }
            // An NGD step whose end direction opposes its start direction has
            // jumped across a critical point.
            if self.normalized && step.grad_norm_new > cfg.grad_stop {
                let v0 = k1.rows(0, d);
                let v1 = step.k[6].rows(0, d);
                if v0.dot(&v1) < 0.0 {
                    h *= REJECT_FACTOR;
                    continue;
                }
            }

            let t_new = if last { cfg.t_max } else { t + h };
            let seg = Self::dense(t, h, &y, &step);
            let x_new = step.y_new.rows(0, d).into_owned();
            traj.segments.push(seg);
            traj.push_node(t_new, x_new.clone(), self.f.value(&x_new), step.y_new[d]);

            let seg = traj.segments.last().unwrap();
            if let Some((te, term)) = self.first_event(seg, t, t_new, step.grad_norm_new) {
                if te < t_new {
                    let aug = seg.eval(te);
                    let xe = aug.rows(0, d).into_owned();
                    let n = traj.times.len() - 1;
                    let prev_l = traj.arc_lengths[n - 1];
                    traj.times[n] = te;
                    traj.f_values[n] = self.f.value(&xe);
                    traj.arc_lengths[n] = aug[d].max(prev_l);
                    traj.states[n] = xe;
                }
                traj.termination = term;
                break;
            }
            if x_new.norm() > cfg.divergence_radius {
                traj.termination = Termination::Diverged;
                break;
            }
            if last {
                traj.termination = Termination::HorizonReached;
                break;
            }

            t = t_new;
            y = step.y_new;
            k1 = step.k[6].clone();
            grad_norm = step.grad_norm_new;
            let factor = if step.err == 0.0 {
                MAX_FACTOR
            } else {
                (SAFETY * step.err.powf(-0.2)).clamp(MIN_FACTOR, MAX_FACTOR)
            };
            h *= factor;
        }
        Ok(traj)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::{arc_length_at, ngd_field, reparametrize_by_arc_length};
    use crate::objective::{CubicPerturbedQuadratic, QuadraticForm};

    fn v(xs: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(xs)
    }

    fn saddle() -> QuadraticForm {
        QuadraticForm::diagonal(&[1.0, -1.0]).unwrap()
    }

    fn bowl() -> QuadraticForm {
        QuadraticForm::diagonal(&[1.0, 1.0]).unwrap()
    }

    #[test]
    fn gd_matches_matrix_exponential() {
        let cfg = IntegratorConfig::default().with_t_max(3.0);
        let x0 = v(&[1.0, 0.001]);
        let traj = integrate(&saddle(), &FlowKind::Gd, &x0, &cfg).unwrap();
        assert_eq!(traj.termination(), &Termination::HorizonReached);
        assert_eq!(traj.end_time(), 3.0);
        for k in 0..=300 {
            let t = 0.01 * k as f64;
            let x = traj.state_at(t).unwrap();
            let exact = v(&[(-t).exp(), 0.001 * t.exp()]);
            assert!((x - exact).amax() < 1e-6, "t = {t}");
        }
    }

    #[test]
    fn dense_output_is_accurate_between_nodes() {
        let cfg = IntegratorConfig {
            max_step: 0.5,
            abs_tol: 1e-10,
            rel_tol: 1e-10,
            ..IntegratorConfig::default().with_t_max(4.0)
        };
        let traj = integrate(&saddle(), &FlowKind::Gd, &v(&[1.0, 0.01]), &cfg).unwrap();
        let mut worst = 0.0_f64;
        for w in traj.times().windows(2) {
            for j in 1..10 {
                let t = w[0] + (w[1] - w[0]) * j as f64 / 10.0;
                let x = traj.state_at(t).unwrap();
                let exact = v(&[(-t).exp(), 0.01 * t.exp()]);
                worst = worst.max((&x - &exact).amax() / exact.amax());
            }
        }
        assert!(worst < 1e-8, "relative dense error {worst:e}");
    }

    #[test]
    fn ngd_radial_descent_reaches_minimum_at_t5() {
        let traj = integrate(&bowl(), &FlowKind::Ngd, &v(&[3.0, 4.0]), &IntegratorConfig::default()).unwrap();
        match traj.termination() {
            Termination::CriticalPointReached { point } => {
                assert!(point.iter().all(|c| c.abs() < 1e-9));
            }
            other => panic!("unexpected termination {other:?}"),
        }
        assert!((traj.end_time() - 5.0).abs() < 1e-4, "T = {}", traj.end_time());
        for (t, x) in traj.times().iter().zip(traj.states()) {
            let exact = v(&[3.0, 4.0]) * ((5.0 - t) / 5.0);
            assert!((x - exact).norm() < 1e-8);
        }
    }

    #[test]
    fn ngd_along_stable_axis_reaches_saddle() {
        let traj = integrate(&saddle(), &FlowKind::Ngd, &v(&[1.0, 0.0]), &IntegratorConfig::default()).unwrap();
        assert!(matches!(traj.termination(), Termination::CriticalPointReached { .. }));
        assert!((traj.end_time() - 1.0).abs() < 1e-6);
        let mid = traj.state_at(0.4).unwrap();
        assert!((mid - v(&[0.6, 0.0])).norm() < 1e-10);
    }

    #[test]
    fn ngd_rejects_critical_start() {
        let err = integrate(&saddle(), &FlowKind::Ngd, &v(&[0.0, 0.0]), &IntegratorConfig::default()).unwrap_err();
        assert!(matches!(err, FlowError::CriticalPointReached { .. }));
    }

    #[test]
    fn gd_critical_start_is_trivial_trajectory() {
        let traj = integrate(&saddle(), &FlowKind::Gd, &v(&[0.0, 0.0]), &IntegratorConfig::default()).unwrap();
        assert_eq!(traj.times().len(), 1);
        assert!(matches!(traj.termination(), Termination::CriticalPointReached { .. }));
    }

    #[test]
    fn rejects_discrete_kind_and_bad_dimension() {
        let kind = FlowKind::discrete_gd(super::super::StepSizes::Constant(0.1)).unwrap();
        assert!(matches!(
            integrate(&saddle(), &kind, &v(&[1.0, 0.0]), &IntegratorConfig::default()),
            Err(FlowError::UnsupportedKind(_))
        ));
        assert!(matches!(
            integrate(&saddle(), &FlowKind::Gd, &v(&[1.0]), &IntegratorConfig::default()),
            Err(FlowError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn divergence_is_reported() {
        let cfg = IntegratorConfig {
            divergence_radius: 10.0,
            ..IntegratorConfig::default().with_t_max(100.0)
        };
        let traj = integrate(&saddle(), &FlowKind::Gd, &v(&[0.0, 1.0]), &cfg).unwrap();
        assert_eq!(traj.termination(), &Termination::Diverged);
    }

    #[test]
    fn exit_event_refined_on_sphere() {
        let ev = BallEvent::new(v(&[0.0, 0.0]), 2.0, Crossing::Exit);
        let traj = integrate_with_events(
            &saddle(),
            &FlowKind::Ngd,
            &v(&[0.0, 0.5]),
            &IntegratorConfig::default(),
            &[ev],
        )
        .unwrap();
        assert_eq!(traj.termination(), &Termination::EventTriggered { event: 0 });
        assert!((traj.end_time() - 1.5).abs() < 1e-10);
        assert!((traj.final_state().norm() - 2.0).abs() < 1e-10);
    }

    #[test]
    fn trajectory_invariants_hold() {
        let f = CubicPerturbedQuadratic::diagonal(&[1.0, -1.0], 0.5).unwrap();
        let cfg = IntegratorConfig::default().with_t_max(4.0);
        for kind in [FlowKind::Gd, FlowKind::Ngd] {
            let traj = integrate(&f, &kind, &v(&[0.7, 0.2]), &cfg).unwrap();
            for w in traj.times().windows(2) {
                assert!(w[1] > w[0]);
            }
            for w in traj.arc_lengths().windows(2) {
                assert!(w[1] >= w[0]);
            }
            for w in traj.f_values().windows(2) {
                assert!(w[1] <= w[0] + 1e-9);
            }
            if kind == FlowKind::Ngd {
                for (t, l) in traj.times().iter().zip(traj.arc_lengths()) {
                    assert!((t - l).abs() < 1e-9);
                }
                for x in traj.states() {
                    if let Ok(u) = ngd_field(&f, x, 1e-10) {
                        assert!((u.norm() - 1.0).abs() <= 1e-8);
                    }
                }
            }
        }
    }

    #[test]
    fn arc_length_examples() {
        let cfg = IntegratorConfig::default().with_t_max(5.0);
        let gd = integrate(&bowl(), &FlowKind::Gd, &v(&[1.0, 0.0]), &cfg).unwrap();
        for k in 0..=50 {
            let t = 0.1 * k as f64;
            let l = arc_length_at(&gd, t).unwrap();
            assert!((l - (1.0 - (-t).exp())).abs() < 1e-6, "t = {t}");
        }
        assert!(arc_length_at(&gd, 5.5).is_err());
        assert!(arc_length_at(&gd, -0.1).is_err());

        let s_grid: Vec<f64> = (0..=9).map(|k| 0.1 * k as f64).collect();
        let pts = reparametrize_by_arc_length(&gd, &s_grid).unwrap();
        for (s, p) in s_grid.iter().zip(&pts) {
            assert!((p - v(&[1.0 - s, 0.0])).norm() < 1e-6, "s = {s}");
        }
        assert!(reparametrize_by_arc_length(&gd, &[1.5]).is_err());
    }

    #[test]
    fn ngd_reparametrization_is_identity() {
        let traj = integrate(&saddle(), &FlowKind::Ngd, &v(&[1.0, 0.3]), &IntegratorConfig::default().with_t_max(2.0)).unwrap();
        let s_grid: Vec<f64> = (0..=40).map(|k| 0.05 * k as f64).collect();
        let pts = reparametrize_by_arc_length(&traj, &s_grid).unwrap();
        for (s, p) in s_grid.iter().zip(&pts) {
            assert!((p - traj.state_at(*s).unwrap()).norm() < 1e-8);
        }
    }

    #[test]
    fn split_preserves_dense_output() {
        let traj = integrate(&saddle(), &FlowKind::Ngd, &v(&[1.0, 0.3]), &IntegratorConfig::default().with_t_max(2.0)).unwrap();
        let (a, b) = traj.split_at(0.77).unwrap();
        assert_eq!(a.end_time(), 0.77);
        assert_eq!(b.start_time(), 0.77);
        for t in [0.1, 0.5, 0.77] {
            assert!((a.state_at(t).unwrap() - traj.state_at(t).unwrap()).norm() < 1e-15);
        }
        for t in [0.77, 1.0, 1.9] {
            assert!((b.state_at(t).unwrap() - traj.state_at(t).unwrap()).norm() < 1e-15);
        }
        let node = traj.times()[3];
        let (c, d) = traj.split_at(node).unwrap();
        assert_eq!(c.end_time(), node);
        assert_eq!(d.start_time(), node);
        assert_eq!(c.times().len() + d.times().len(), traj.times().len() + 1);
        assert!(traj.split_at(0.0).is_err());
    }

    #[test]
    fn csv_export_round_trips() {
        let traj = integrate(&saddle(), &FlowKind::Ngd, &v(&[1.0, 0.0]), &IntegratorConfig::default()).unwrap();
        let csv = traj.to_csv_string();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("t,x_0,x_1,f,arclen"));
        let rows: Vec<Vec<f64>> = lines
            .map(|l| l.split(',').map(|c| c.parse().unwrap()).collect())
            .collect();
        assert_eq!(rows.len(), traj.times().len());
        for (row, (t, x)) in rows.iter().zip(traj.times().iter().zip(traj.states())) {
            assert_eq!(row[0], *t);
            assert_eq!(row[1], x[0]);
            assert_eq!(row[2], x[1]);
        }
    }
}
