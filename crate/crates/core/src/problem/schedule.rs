//! Delay schedules λ for the pointwise-delayed noise of Case 3.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DelayKind {
    /// λ_t = t − ε.
    ConstantLag { eps: f64 },
    /// λ_t = c·t, 0 < c < 1.
    Proportional { c: f64 },
    /// λ_t = c·(t − ε), c > 1.
    ClosingApproach { c: f64, eps: f64 },
    /// Piecewise-linear λ through `(times[i], values[i])`.
    Tabulated { times: Vec<f64>, values: Vec<f64> },
}

/// A continuous, strictly increasing time map with `t − ε ≤ max(0, λ_t) ≤ t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DelaySchedule {
    pub kind: DelayKind,
    pub horizon: f64,
}

impl DelaySchedule {
    pub fn new(kind: DelayKind, horizon: f64) -> Result<Self> {
        let s = Self { kind, horizon };
        s.validate()?;
        Ok(s)
    }

    pub fn lambda(&self, t: f64) -> f64 {
        match &self.kind {
            DelayKind::ConstantLag { eps } => t - eps,
            DelayKind::Proportional { c } => c * t,
            DelayKind::ClosingApproach { c, eps } => c * (t - eps),
            DelayKind::Tabulated { times, values } => interp(times, values, t),
        }
    }

    pub fn lambda_inv(&self, u: f64) -> f64 {
        match &self.kind {
            DelayKind::ConstantLag { eps } => u + eps,
            DelayKind::Proportional { c } => u / c,
            DelayKind::ClosingApproach { c, eps } => u / c + eps,
            DelayKind::Tabulated { times, values } => {
                // monotone bisection
                let (mut lo, mut hi) = (times[0], *times.last().unwrap());
                if u <= values[0] {
                    return lo;
                }
                if u >= *values.last().unwrap() {
                    return hi;
                }
                let tol = 1e-12 * self.horizon.max(1.0);
                while hi - lo > tol {
                    let mid = 0.5 * (lo + hi);
                    if interp(times, values, mid) < u {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                0.5 * (lo + hi)
            }
        }
    }

    /// Largest lag `t − max(0, λ_t)` that matters on `[0, T]`.
    pub fn max_lag(&self) -> f64 {
        match &self.kind {
            DelayKind::ConstantLag { eps } => *eps,
            DelayKind::Proportional { c } => (1.0 - c) * self.horizon,
            DelayKind::ClosingApproach { eps, .. } => *eps,
            DelayKind::Tabulated { times, values } => {
                let vertices = times.iter().zip(values).map(|(t, v)| t - v.max(0.0));
                // the lag also peaks where λ crosses zero
                let crossing = if values[0] < 0.0 {
                    self.lambda_inv(0.0)
                } else {
                    0.0
                };
                vertices.fold(crossing, f64::max).min(self.horizon)
            }
        }
    }

    /// Copy with the lag snapped to `eps` where the kind carries one.
    pub fn with_eps(&self, new_eps: f64) -> Self {
        let kind = match &self.kind {
            DelayKind::ConstantLag { .. } => DelayKind::ConstantLag { eps: new_eps },
            DelayKind::ClosingApproach { c, .. } => DelayKind::ClosingApproach {
                c: *c,
                eps: new_eps,
            },
            other => other.clone(),
        };
        Self {
            kind,
            horizon: self.horizon,
        }
    }

    /// Whether the grid lag should be snapped (`round`) or covered (`ceil`).
    pub fn snaps(&self) -> bool {
        matches!(
            self.kind,
            DelayKind::ConstantLag { .. } | DelayKind::ClosingApproach { .. }
        )
    }

    pub fn validate(&self) -> Result<()> {
        let t_end = self.horizon;
        if !(t_end > 0.0 && t_end.is_finite()) {
            return Err(Error::BadHorizon(format!("schedule horizon {t_end}")));
        }
        match &self.kind {
            DelayKind::ConstantLag { eps } if !(*eps > 0.0 && *eps <= t_end) => {
                return Err(Error::BadEps(format!(
                    "constant lag eps = {eps} not in (0, T]"
                )))
            }
            DelayKind::Proportional { c } if !(*c > 0.0 && *c < 1.0) => {
                return Err(Error::ScheduleOutOfRange(format!(
                    "proportional c = {c} not in (0, 1)"
                )))
            }
            DelayKind::ClosingApproach { c, eps } => {
                if !(*c > 1.0) || !(*eps > 0.0 && *eps <= t_end) {
                    return Err(Error::ScheduleOutOfRange(format!(
                        "closing approach needs c > 1, eps in (0, T]; got c = {c}, eps = {eps}"
                    )));
                }
            }
            DelayKind::Tabulated { times, values } => {
                if times.len() < 2 || times.len() != values.len() {
                    return Err(Error::ScheduleOutOfRange(
                        "tabulated schedule needs >= 2 matching points".into(),
                    ));
                }
                if times[0] > 0.0 || *times.last().unwrap() < t_end {
                    return Err(Error::ScheduleOutOfRange(
                        "tabulated schedule must cover [0, T]".into(),
                    ));
                }
                if times.windows(2).any(|w| w[1] <= w[0]) || values.windows(2).any(|w| w[1] <= w[0])
                {
                    return Err(Error::ScheduleOutOfRange(
                        "tabulated schedule must be strictly increasing".into(),
                    ));
                }
            }
            _ => {}
        }
        if self.lambda(t_end) > t_end * (1.0 + 1e-12) {
            return Err(Error::ScheduleOutOfRange(format!(
                "lambda(T) = {} > T = {t_end}",
                self.lambda(t_end)
            )));
        }
        let eps = self.max_lag();
        if !(eps > 0.0) {
            return Err(Error::BadEps(
                "delay schedule has zero lag everywhere; use a positive eps".into(),
            ));
        }
        let n = 1000;
        let tol = 1e-12 * t_end;
        let mut prev = f64::NEG_INFINITY;
        for i in 0..=n {
            let t = t_end * i as f64 / n as f64;
            let l = self.lambda(t);
            if l <= prev {
                return Err(Error::ScheduleOutOfRange(format!(
                    "lambda not strictly increasing near t = {t}"
                )));
            }
            prev = l;
            let lp = l.max(0.0);
            if lp > t + tol || lp < t - eps - tol {
                return Err(Error::ScheduleOutOfRange(format!(
                    "lambda({t}) = {l} outside [t - eps, t]"
                )));
            }
        }
        Ok(())
    }
}

fn interp(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    if x <= xs[0] {
        let s = (ys[1] - ys[0]) / (xs[1] - xs[0]);
        return ys[0] + s * (x - xs[0]);
    }
    let n = xs.len();
    if x >= xs[n - 1] {
        let s = (ys[n - 1] - ys[n - 2]) / (xs[n - 1] - xs[n - 2]);
        return ys[n - 1] + s * (x - xs[n - 1]);
    }
    let k = xs.partition_point(|&v| v <= x) - 1;
    let w = (x - xs[k]) / (xs[k + 1] - xs[k]);
    ys[k] + w * (ys[k + 1] - ys[k])
}
