//! Uniform JSON payloads and CSV summaries for experiment reports.
//!
//! Every payload is an object with the keys `report_type`, `inputs`,
//! `per_ic`, `bound`, `max`, `pass` and `details`.

use std::fmt::Write as _;

use serde::Serialize;
use serde_json::{json, Value};

use super::{
    DissipationTrace, EscapeTimeReport, GlobalBoundReport, OrbitComparison, StableManifoldReport, StallReport,
    TaylorCheckReport,
};
use crate::flow::Termination;

pub trait Report {
    fn report_type(&self) -> &'static str;
    fn inputs(&self) -> Value;
    fn per_ic(&self) -> Value;
    fn bound(&self) -> Option<f64>;
    fn max(&self) -> Option<f64>;
    fn pass(&self) -> bool;
    /// Report-specific fields not covered by the common keys.
    fn details(&self) -> Value {
        Value::Null
    }
    fn csv_summary(&self) -> String;

    fn payload(&self) -> Value {
        json!({
            "report_type": self.report_type(),
            "inputs": self.inputs(),
            "per_ic": self.per_ic(),
            "bound": self.bound(),
            "max": self.max(),
            "pass": self.pass(),
            "details": self.details(),
        })
    }
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("report types serialize to JSON")
}

fn cause(t: &Termination) -> &'static str {
    match t {
        Termination::HorizonReached => "horizon_reached",
        Termination::CriticalPointReached { .. } => "critical_point_reached",
        Termination::Diverged => "diverged",
        Termination::EventTriggered { .. } => "event_triggered",
    }
}

fn join(xs: &[f64]) -> String {
    xs.iter().map(|x| format!("{x:.16e}")).collect::<Vec<_>>().join(";")
}

impl Report for EscapeTimeReport {
    fn report_type(&self) -> &'static str {
        "escape_sweep"
    }
    fn inputs(&self) -> Value {
        json!({
            "saddle": self.saddle.location,
            "r": self.r,
            "C": self.c,
            "n_ic": self.per_ic.len(),
            "seed": self.seed,
            "t_max": self.t_max,
        })
    }
    fn per_ic(&self) -> Value {
        to_value(&self.per_ic)
    }
    fn bound(&self) -> Option<f64> {
        Some(self.bound)
    }
    fn max(&self) -> Option<f64> {
        Some(self.max_occupancy)
    }
    fn pass(&self) -> bool {
        self.pass
    }
    fn details(&self) -> Value {
        json!({
            "saddle": self.saddle,
            "kappa": self.kappa,
            "r_bar": self.r_bar,
            "argmax": self.argmax,
            "slack": self.slack,
            "horizon_hits": self.horizon_hits,
        })
    }
    fn csv_summary(&self) -> String {
        let mut s = String::from("index,initial_point,occupancy,termination,end_time,converged_to_saddle\n");
        for (i, o) in self.per_ic.iter().enumerate() {
            let _ = writeln!(
                s,
                "{i},{},{:.16e},{},{:.16e},{}",
                join(&o.initial_point),
                o.occupancy,
                cause(&o.termination),
                o.end_time,
                o.converged_to_saddle
            );
        }
        s
    }
}

impl Report for StallReport {
    fn report_type(&self) -> &'static str {
        "gd_stall"
    }
    fn inputs(&self) -> Value {
        json!({
            "saddle": self.saddle,
            "r": self.r,
            "initial_point": self.initial_point,
            "eps": self.measurements.iter().map(|m| m.eps).collect::<Vec<_>>(),
        })
    }
    fn per_ic(&self) -> Value {
        to_value(&self.measurements)
    }
    fn bound(&self) -> Option<f64> {
        None
    }
    fn max(&self) -> Option<f64> {
        self.measurements.iter().filter_map(|m| m.time).reduce(f64::max)
    }
    fn pass(&self) -> bool {
        self.pass
    }
    fn csv_summary(&self) -> String {
        let mut s = String::from("eps,time,log_r_over_eps,neg_r_log_eps\n");
        for m in &self.measurements {
            let t = m.time.map_or_else(|| "nan".to_string(), |t| format!("{t:.16e}"));
            let _ = writeln!(s, "{:.16e},{t},{:.16e},{:.16e}", m.eps, m.log_r_over_eps, m.neg_r_log_eps);
        }
        s
    }
}

impl Report for StableManifoldReport {
    fn report_type(&self) -> &'static str {
        "stable_manifold"
    }
    fn inputs(&self) -> Value {
        json!({
            "saddle": self.saddle.location,
            "r": self.r,
            "n_ic": self.n_ic,
            "seed": self.seed,
        })
    }
    fn per_ic(&self) -> Value {
        to_value(&self.per_ic)
    }
    fn bound(&self) -> Option<f64> {
        None
    }
    fn max(&self) -> Option<f64> {
        Some(self.fraction)
    }
    fn pass(&self) -> bool {
        self.hits == 0
    }
    fn details(&self) -> Value {
        json!({
            "saddle": self.saddle,
            "capture_radius": self.capture_radius,
            "hits": self.hits,
            "fraction": self.fraction,
        })
    }
    fn csv_summary(&self) -> String {
        let mut s = String::from("index,initial_point,termination,end_time,reached_saddle\n");
        for (i, o) in self.per_ic.iter().enumerate() {
            let _ = writeln!(
                s,
                "{i},{},{},{:.16e},{}",
                join(&o.initial_point),
                cause(&o.termination),
                o.end_time,
                o.reached_saddle
            );
        }
        s
    }
}

impl Report for TaylorCheckReport {
    fn report_type(&self) -> &'static str {
        "taylor_check"
    }
    fn inputs(&self) -> Value {
        json!({
            "critical_point": self.critical_point.location,
            "C1": self.c1,
            "C2": self.c2,
            "r_hat": self.r_hat,
            "n_samples": self.n_samples,
            "seed": self.seed,
        })
    }
    fn per_ic(&self) -> Value {
        to_value(&self.violations)
    }
    fn bound(&self) -> Option<f64> {
        None
    }
    fn max(&self) -> Option<f64> {
        Some(self.violation_count as f64)
    }
    fn pass(&self) -> bool {
        TaylorCheckReport::pass(self)
    }
    fn details(&self) -> Value {
        json!({
            "critical_point": self.critical_point,
            "implied_C": self.implied_c,
            "violation_count": self.violation_count,
            "tilde_trace": self.tilde_trace,
        })
    }
    fn csv_summary(&self) -> String {
        let mut s = String::from("point,kind,lhs,rhs\n");
        for v in &self.violations {
            let kind = to_value(&v.kind);
            let _ = writeln!(s, "{},{},{:.16e},{:.16e}", join(&v.point), kind.as_str().unwrap_or(""), v.lhs, v.rhs);
        }
        s
    }
}

impl Report for GlobalBoundReport {
    fn report_type(&self) -> &'static str {
        "global_bound"
    }
    fn inputs(&self) -> Value {
        json!({
            "R": self.big_r,
            "r": self.r,
            "C": self.c,
            "nu": if self.nu_estimated { Value::Null } else { json!(self.nu) },
            "n_ic": self.measured.len(),
            "seed": self.seed,
        })
    }
    fn per_ic(&self) -> Value {
        to_value(&self.measured)
    }
    fn bound(&self) -> Option<f64> {
        Some(self.bound)
    }
    fn max(&self) -> Option<f64> {
        self.max_time
    }
    fn pass(&self) -> bool {
        self.pass
    }
    fn details(&self) -> Value {
        json!({
            "M": self.m,
            "nu": self.nu,
            "nu_estimated": self.nu_estimated,
            "sampled_grad_min": self.sampled_grad_min,
            "d": self.d,
            "kappa": self.kappa,
            "C_hat": self.c_hat,
            "critical_points": self.critical_points,
            "min_separation": self.min_separation,
            "ball_count": self.ball_count,
            "per_ball_time": self.per_ball_time,
            "all_converged": self.all_converged,
            "invariance_violations": self.invariance_violations,
        })
    }
    fn csv_summary(&self) -> String {
        let mut s = String::from("index,initial_point,termination,time,converged_to_minimum,left_ball\n");
        for (i, m) in self.measured.iter().enumerate() {
            let t = m.time.map_or_else(|| "nan".to_string(), |t| format!("{t:.16e}"));
            let _ = writeln!(
                s,
                "{i},{},{},{t},{},{}",
                join(&m.initial_point),
                cause(&m.termination),
                m.converged_to_minimum,
                m.left_ball
            );
        }
        s
    }
}

impl Report for OrbitComparison {
    fn report_type(&self) -> &'static str {
        "compare_orbits"
    }
    fn inputs(&self) -> Value {
        json!({ "initial_point": self.initial_point, "n_grid": self.n_grid })
    }
    fn per_ic(&self) -> Value {
        json!([{
            "initial_point": self.initial_point,
            "s_max": self.s_max,
            "sup_error": self.sup_error,
            "ngd_unit_speed_error": self.ngd_unit_speed_error,
            "gd_termination": self.gd_termination,
            "ngd_termination": self.ngd_termination,
        }])
    }
    fn bound(&self) -> Option<f64> {
        None
    }
    fn max(&self) -> Option<f64> {
        Some(self.sup_error)
    }
    fn pass(&self) -> bool {
        true
    }
    fn csv_summary(&self) -> String {
        let mut s = String::from("s,error\n");
        for (a, e) in &self.errors {
            let _ = writeln!(s, "{a:.16e},{e:.16e}");
        }
        s
    }
}

impl Report for DissipationTrace {
    fn report_type(&self) -> &'static str {
        "dissipation"
    }
    fn inputs(&self) -> Value {
        json!({ "n_samples": self.samples.len() })
    }
    fn per_ic(&self) -> Value {
        to_value(&self.samples)
    }
    fn bound(&self) -> Option<f64> {
        None
    }
    fn max(&self) -> Option<f64> {
        Some(self.max_discrepancy)
    }
    fn pass(&self) -> bool {
        self.max_slope <= 0.0
    }
    fn csv_summary(&self) -> String {
        let mut s = String::from("t,slope,neg_grad_norm\n");
        for p in &self.samples {
            let _ = writeln!(s, "{:.16e},{:.16e},{:.16e}", p.t, p.slope, p.neg_grad_norm);
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::escape_sweep;
    use crate::flow::IntegratorConfig;
    use crate::objective::QuadraticForm;
    use crate::spectral::classify_critical_point;
    use nalgebra::DVector;

    #[test]
    fn escape_payload_schema_and_determinism() {
        let f = QuadraticForm::diagonal(&[1.0, -1.0]).unwrap();
        let info = classify_critical_point(&f, &DVector::zeros(2), 1e-10).unwrap();
        let a = escape_sweep(&f, &info, 0.5, 8, 7, 5.0, &IntegratorConfig::default()).unwrap();
        let b = escape_sweep(&f, &info, 0.5, 8, 7, 5.0, &IntegratorConfig::default()).unwrap();
        let pa = a.payload();
        for key in ["report_type", "inputs", "per_ic", "bound", "max", "pass", "details"] {
            assert!(pa.get(key).is_some(), "missing {key}");
        }
        assert_eq!(pa["report_type"], "escape_sweep");
        assert_eq!(pa["per_ic"].as_array().unwrap().len(), 8);
        assert_eq!(serde_json::to_string(&pa).unwrap(), serde_json::to_string(&b.payload()).unwrap());
        let csv = a.csv_summary();
        assert_eq!(csv.lines().count(), 9);
        assert!(csv.starts_with("index,initial_point,occupancy"));
    }
}
