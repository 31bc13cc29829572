//! Homogeneous-mixing approximation of the three-state process.
//!
//! With `u1`, `u2` the densities of asymptomatic and symptomatic sites:
//!
//! ```text
//! u1' = (beta1 u1 + beta2 u2)(1 - u1 - u2) - (1 + gamma) u1
//! u2' = gamma u1 - u2
//! ```
//!
//! Besides the disease-free point the system has one interior fixed point,
//! present exactly when `beta1 + gamma beta2 > 1 + gamma`.

use std::io::Write;

use serde::Serialize;

use crate::dynamics::{Params, Variant};
use crate::error::{Error, Result};

/// Tolerance for leaving the simplex through roundoff.
pub const SIMPLEX_TOL: f64 = 1e-9;
pub const DEFAULT_DT: f64 = 1e-3;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MeanFieldState {
    pub u1: f64,
    pub u2: f64,
}

impl MeanFieldState {
    pub const ORIGIN: MeanFieldState = MeanFieldState { u1: 0.0, u2: 0.0 };

    pub fn new(u1: f64, u2: f64) -> Result<Self> {
        let s = Self { u1, u2 };
        if !s.in_simplex(0.0) {
            return Err(Error::Domain(format!("({u1}, {u2}) is not in the simplex")));
        }
        Ok(s)
    }

    pub fn in_simplex(&self, tol: f64) -> bool {
        self.u1.is_finite()
            && self.u2.is_finite()
            && self.u1 >= -tol
            && self.u2 >= -tol
            && self.u1 + self.u2 <= 1.0 + tol
    }

    pub fn is_interior(&self) -> bool {
        self.u1 > 0.0 && self.u2 > 0.0 && self.u1 + self.u2 < 1.0
    }

    fn clamp(self) -> Self {
        let u1 = self.u1.max(0.0);
        let u2 = self.u2.max(0.0);
        let s = u1 + u2;
        if s > 1.0 {
            Self { u1: u1 / s, u2: u2 / s }
        } else {
            Self { u1, u2 }
        }
    }

    pub fn distance(&self, other: &Self) -> f64 {
        (self.u1 - other.u1).hypot(self.u2 - other.u2)
    }
}

fn check_params(p: &Params) -> Result<()> {
    p.validate()?;
    if p.variant != Variant::Standard {
        return Err(Error::InvalidParameter("the mean-field system describes the standard variant".into()));
    }
    Ok(())
}

pub fn vector_field(u: MeanFieldState, p: &Params) -> (f64, f64) {
    let MeanFieldState { u1, u2 } = u;
    let f1 = (p.beta1 * u1 + p.beta2 * u2) * (1.0 - u1 - u2) - (1.0 + p.gamma) * u1;
    let f2 = p.gamma * u1 - u2;
    (f1, f2)
}

/// Row-major 2x2 Jacobian of [`vector_field`].
pub fn jacobian(u: MeanFieldState, p: &Params) -> [[f64; 2]; 2] {
    let MeanFieldState { u1, u2 } = u;
    let (b1, b2, g) = (p.beta1, p.beta2, p.gamma);
    [
        [b1 * (1.0 - 2.0 * u1) - (b1 + b2) * u2 - (1.0 + g), b2 * (1.0 - 2.0 * u2) - (b1 + b2) * u1],
        [g, -1.0],
    ]
}

pub fn trace_det(j: &[[f64; 2]; 2]) -> (f64, f64) {
    (j[0][0] + j[1][1], j[0][0] * j[1][1] - j[0][1] * j[1][0])
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Stability {
    Stable,
    Unstable,
    Saddle,
    Degenerate,
}

impl Stability {
    pub fn classify(trace: f64, det: f64) -> Self {
        if det == 0.0 || (trace == 0.0 && det > 0.0) {
            Stability::Degenerate
        } else if det < 0.0 {
            Stability::Saddle
        } else if trace < 0.0 {
            Stability::Stable
        } else {
            Stability::Unstable
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FixedPoint {
    pub u1: f64,
    pub u2: f64,
    pub trace: f64,
    pub det: f64,
    pub stability: Stability,
}

impl FixedPoint {
    fn at(u: MeanFieldState, p: &Params) -> Self {
        let (trace, det) = trace_det(&jacobian(u, p));
        Self { u1: u.u1, u2: u.u2, trace, det, stability: Stability::classify(trace, det) }
    }

    pub fn state(&self) -> MeanFieldState {
        MeanFieldState { u1: self.u1, u2: self.u2 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FixedPointReport {
    pub beta1: f64,
    pub beta2: f64,
    pub gamma: f64,
    /// `beta1 + gamma beta2 > 1 + gamma`.
    pub survival: bool,
    /// `1 + gamma`.
    pub d1: f64,
    /// `beta1 + gamma beta2`.
    pub d2: f64,
    pub p0: FixedPoint,
    pub p12: Option<FixedPoint>,
}

pub fn fixed_points(p: &Params) -> Result<FixedPointReport> {
    check_params(p)?;
    let d1 = 1.0 + p.gamma;
    let d2 = p.beta1 + p.gamma * p.beta2;
    let survival = d2 > d1;
    let p12 = survival.then(|| {
        let u1 = 1.0 / d1 - 1.0 / d2;
        FixedPoint::at(MeanFieldState { u1, u2: p.gamma * u1 }, p)
    });
    Ok(FixedPointReport {
        beta1: p.beta1,
        beta2: p.beta2,
        gamma: p.gamma,
        survival,
        d1,
        d2,
        p0: FixedPoint::at(MeanFieldState::ORIGIN, p),
        p12,
    })
}

/// Divergence of `(F1, F2) / (u1 u2)`; negative on the open simplex.
pub fn dulac_divergence(u: MeanFieldState, p: &Params) -> Result<f64> {
    if !u.is_interior() {
        return Err(Error::Domain(format!("({}, {}) is not in the open simplex", u.u1, u.u2)));
    }
    let MeanFieldState { u1, u2 } = u;
    let (b1, b2, g) = (p.beta1, p.beta2, p.gamma);
    Ok(-b2 * (1.0 - u1 - u2) / (u1 * u1) - (b1 / u2 + b2 / u1) - g / (u2 * u2))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OdeTrajectory {
    pub times: Vec<f64>,
    pub states: Vec<MeanFieldState>,
    /// First time after which every step moved less than `1e-12` per unit time.
    pub converged_at: Option<f64>,
}

impl OdeTrajectory {
    pub fn final_state(&self) -> MeanFieldState {
        *self.states.last().expect("trajectory holds the initial state")
    }

    /// Writes every `stride`-th state and the final one.
    pub fn write_csv<W: Write>(&self, mut out: W, stride: usize) -> Result<()> {
        let stride = stride.max(1);
        writeln!(out, "t,u1,u2")?;
        let last = self.times.len() - 1;
        for i in (0..=last).filter(|i| i % stride == 0 || *i == last) {
            writeln!(out, "{},{},{}", self.times[i], self.states[i].u1, self.states[i].u2)?;
        }
        Ok(())
    }
}

fn rk4_step(u: MeanFieldState, p: &Params, dt: f64) -> MeanFieldState {
    let add = |u: MeanFieldState, k: (f64, f64), h: f64| MeanFieldState { u1: u.u1 + h * k.0, u2: u.u2 + h * k.1 };
    let k1 = vector_field(u, p);
    let k2 = vector_field(add(u, k1, dt / 2.0), p);
    let k3 = vector_field(add(u, k2, dt / 2.0), p);
    let k4 = vector_field(add(u, k3, dt), p);
    MeanFieldState {
        u1: u.u1 + dt / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0),
        u2: u.u2 + dt / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1),
    }
}

/// Classical fixed-step RK4 from `u0` to `t_max`, clamping roundoff at the
/// simplex boundary. A step that leaves the simplex by more than
/// [`SIMPLEX_TOL`] is a [`Error::StepSize`].
pub fn integrate(u0: MeanFieldState, p: &Params, t_max: f64, dt: f64) -> Result<OdeTrajectory> {
    check_params(p)?;
    if !u0.in_simplex(0.0) {
        return Err(Error::Domain(format!("initial state ({}, {}) is not in the simplex", u0.u1, u0.u2)));
    }
    if !(dt > 0.0 && dt.is_finite()) || !(t_max >= 0.0 && t_max.is_finite()) {
        return Err(Error::InvalidParameter(format!("need dt > 0 and t_max >= 0, got dt = {dt}, t_max = {t_max}")));
    }
    let steps = (t_max / dt).ceil() as usize;
    let mut times = Vec::with_capacity(steps + 1);
    let mut states = Vec::with_capacity(steps + 1);
    times.push(0.0);
    states.push(u0);
    let mut u = u0;
    let mut converged_at = Some(0.0);
    for i in 1..=steps {
        let t = (i as f64 * dt).min(t_max);
        let h = t - times[i - 1];
        let next = rk4_step(u, p, h);
        if !next.in_simplex(SIMPLEX_TOL) {
            return Err(Error::StepSize(format!(
                "step to t = {t} left the simplex at ({}, {}); reduce dt = {dt}",
                next.u1, next.u2
            )));
        }
        let next = next.clamp();
        if h > 0.0 && next.distance(&u) / h >= 1e-12 {
            converged_at = None;
        } else if converged_at.is_none() {
            converged_at = Some(times[i - 1]);
        }
        u = next;
        times.push(t);
        states.push(u);
    }
    Ok(OdeTrajectory { times, states, converged_at })
}
