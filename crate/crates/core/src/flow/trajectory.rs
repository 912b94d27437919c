use std::io::{self, Write};

use nalgebra::DVector;
use serde::Serialize;

use super::{FlowError, FlowKind};

/// Why an integration stopped.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "cause", rename_all = "snake_case")]
pub enum Termination {
    HorizonReached,
    /// `‖∇f‖` fell to the stopping threshold; the end of the maximal interval.
    CriticalPointReached { point: Vec<f64> },
    Diverged,
    /// A caller-supplied ball event fired; `event` indexes the event list.
    EventTriggered { event: usize },
}

/// Continuous extension of one Dormand–Prince step on the augmented state
/// `(x, L)`:
/// `y(θ) = c₀ + θ(c₁ + (1−θ)(c₂ + θ(c₃ + (1−θ)c₄)))`, `θ = (t − t₀)/h`.
#[derive(Debug, Clone)]
pub(crate) struct DenseSegment {
    pub(crate) t0: f64,
    pub(crate) h: f64,
    pub(crate) coeffs: [DVector<f64>; 5],
}

impl DenseSegment {
    pub(crate) fn eval(&self, t: f64) -> DVector<f64> {
        let th = (t - self.t0) / self.h;
        let th1 = 1.0 - th;
        let [c0, c1, c2, c3, c4] = &self.coeffs;
        let inner = c3 + c4 * th1;
        let inner = c2 + inner * th;
        let inner = c1 + inner * th1;
        c0 + inner * th
    }

    pub(crate) fn eval_component(&self, t: f64, i: usize) -> f64 {
        let th = (t - self.t0) / self.h;
        let th1 = 1.0 - th;
        let c = |k: usize| self.coeffs[k][i];
        c(0) + th * (c(1) + th1 * (c(2) + th * (c(3) + th1 * c(4))))
    }
}

/// A solution of the GD or NGD flow: the accepted step nodes plus a dense
/// interpolant valid on `[start_time, end_time]`.
///
/// Arc length `L(t)` is carried as an extra state component integrated
/// alongside `x`, so it shares the integrator's error control.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub(crate) dim: usize,
    pub(crate) kind: FlowKind,
    pub(crate) times: Vec<f64>,
    pub(crate) states: Vec<DVector<f64>>,
    pub(crate) f_values: Vec<f64>,
    pub(crate) arc_lengths: Vec<f64>,
    pub(crate) termination: Termination,
    /// `segments[i]` covers `[times[i], times[i + 1]]`.
    pub(crate) segments: Vec<DenseSegment>,
    pub(crate) max_step: f64,
    pub(crate) event_time_tol: f64,
}

impl Trajectory {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind(&self) -> &FlowKind {
        &self.kind
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn states(&self) -> &[DVector<f64>] {
        &self.states
    }

    pub fn f_values(&self) -> &[f64] {
        &self.f_values
    }

    /// Cumulative arc length at each node.
    pub fn arc_lengths(&self) -> &[f64] {
        &self.arc_lengths
    }

    pub fn termination(&self) -> &Termination {
        &self.termination
    }

    pub fn start_time(&self) -> f64 {
        self.times[0]
    }

    pub fn end_time(&self) -> f64 {
        *self.times.last().unwrap()
    }

    pub fn final_state(&self) -> &DVector<f64> {
        self.states.last().unwrap()
    }

    pub fn total_arc_length(&self) -> f64 {
        *self.arc_lengths.last().unwrap()
    }

    /// Sampling resolution used when scanning the dense output.
    pub fn max_step(&self) -> f64 {
        self.max_step
    }

    pub fn event_time_tol(&self) -> f64 {
        self.event_time_tol
    }

    pub(crate) fn check_time(&self, t: f64) -> Result<(), FlowError> {
        let (start, end) = (self.start_time(), self.end_time());
        if t.is_nan() || t < start || t > end {
            return Err(FlowError::OutOfRange { t, start, end });
        }
        Ok(())
    }

    /// Index `i` of the segment with `times[i] <= t <= times[i + 1]`; `t`
    /// must already be in range and the trajectory must have a segment.
    pub(crate) fn segment_index(&self, t: f64) -> usize {
        let i = self.times.partition_point(|&s| s <= t);
        i.saturating_sub(1).min(self.segments.len() - 1)
    }

    /// Dense-output state `x(t)`.
    pub fn state_at(&self, t: f64) -> Result<DVector<f64>, FlowError> {
        self.check_time(t)?;
        if self.segments.is_empty() {
            return Ok(self.states[0].clone());
        }
        let seg = &self.segments[self.segment_index(t)];
        Ok(seg.eval(t).rows(0, self.dim).into_owned())
    }

    pub(crate) fn arc_length_unchecked(&self, t: f64) -> f64 {
        if self.segments.is_empty() {
            return self.arc_lengths[0];
        }
        let i = self.segment_index(t);
        let raw = self.segments[i].eval_component(t, self.dim);
        raw.clamp(self.arc_lengths[i], self.arc_lengths[i + 1])
    }

    /// Splits at an interior time; both halves share the node at `t`.
    ///
    /// Arc lengths stay cumulative from the original start. The first half
    /// terminates with `HorizonReached`, the second keeps the original cause.
    pub fn split_at(&self, t: f64) -> Result<(Trajectory, Trajectory), FlowError> {
        let (start, end) = (self.start_time(), self.end_time());
        if !(t > start && t < end) {
            return Err(FlowError::OutOfRange { t, start, end });
        }
        let i = self.segment_index(t);
        let mut first = self.clone();
        let mut second = self.clone();
        first.termination = Termination::HorizonReached;
        if self.times[i] == t {
            first.truncate_nodes(i + 1);
            first.segments.truncate(i);
            second.drop_nodes(i);
            second.segments.drain(..i);
        } else {
            let x = self.segments[i].eval(t).rows(0, self.dim).into_owned();
            let l = self.arc_length_unchecked(t);
            let fv = interpolate_f(self, i, t);
            first.truncate_nodes(i + 1);
            first.segments.truncate(i + 1);
            first.push_node(t, x.clone(), fv, l);
            second.drop_nodes(i + 1);
            second.segments.drain(..i);
            second.times.insert(0, t);
            second.states.insert(0, x);
            second.f_values.insert(0, fv);
            second.arc_lengths.insert(0, l);
        }
        Ok((first, second))
    }

    fn truncate_nodes(&mut self, n: usize) {
        self.times.truncate(n);
        self.states.truncate(n);
        self.f_values.truncate(n);
        self.arc_lengths.truncate(n);
    }

    fn drop_nodes(&mut self, n: usize) {
        self.times.drain(..n);
        self.states.drain(..n);
        self.f_values.drain(..n);
        self.arc_lengths.drain(..n);
    }

    pub(crate) fn push_node(&mut self, t: f64, x: DVector<f64>, f: f64, l: f64) {
        self.times.push(t);
        self.states.push(x);
        self.f_values.push(f);
        self.arc_lengths.push(l);
    }

    /// Writes `t,x_0..x_{d-1},f,arclen` with 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        let mut header = String::from("t");
        for i in 0..self.dim {
            header.push_str(&format!(",x_{i}"));
        }
        header.push_str(",f,arclen");
        writeln!(w, "{header}")?;
        for k in 0..self.times.len() {
            let mut row = format!("{:.16e}", self.times[k]);
            for v in self.states[k].iter() {
                row.push_str(&format!(",{v:.16e}"));
            }
            row.push_str(&format!(",{:.16e},{:.16e}", self.f_values[k], self.arc_lengths[k]));
            writeln!(w, "{row}")?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("csv output is ASCII")
    }
}

// The objective is not stored with the trajectory; a split point gets the
// linear interpolant of the neighbouring node values, which preserves
// monotonicity.
fn interpolate_f(traj: &Trajectory, i: usize, t: f64) -> f64 {
    if i + 1 >= traj.times.len() {
        return traj.f_values[i];
    }
    let (t0, t1) = (traj.times[i], traj.times[i + 1]);
    let w = if t1 > t0 { (t - t0) / (t1 - t0) } else { 0.0 };
    traj.f_values[i] * (1.0 - w) + traj.f_values[i + 1] * w
}

/// Cumulative arc length `L(t) = ∫₀ᵗ ‖ẋ(s)‖ ds` from the dense output.
pub fn arc_length_at(traj: &Trajectory, t: f64) -> Result<f64, FlowError> {
    traj.check_time(t)?;
    Ok(traj.arc_length_unchecked(t))
}

/// Arc-length reparametrization `x̃(s) = x(L⁻¹(s))`, inverting `L` by
/// bisection on the dense output.
pub fn reparametrize_by_arc_length(traj: &Trajectory, s_grid: &[f64]) -> Result<Vec<DVector<f64>>, FlowError> {
    let l0 = traj.arc_lengths[0];
    let total = traj.total_arc_length();
    s_grid
        .iter()
        .map(|&s| {
            let target = l0 + s;
            if !(s >= 0.0) || target > total * (1.0 + 1e-14) + 1e-14 {
                return Err(FlowError::OutOfRange {
                    t: s,
                    start: 0.0,
                    end: total - l0,
                });
            }
            let t = invert_arc_length(traj, target.min(total));
            traj.state_at(t)
        })
        .collect()
}

fn invert_arc_length(traj: &Trajectory, target: f64) -> f64 {
    if traj.segments.is_empty() {
        return traj.start_time();
    }
    let i = traj
        .arc_lengths
        .partition_point(|&l| l < target)
        .saturating_sub(1)
        .min(traj.segments.len() - 1);
    let (mut lo, mut hi) = (traj.times[i], traj.times[i + 1]);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if traj.arc_length_unchecked(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}
