//! Warping functions `f(t)` for the `dz` factor of the cusp metric, the
//! four pointwise sign conditions they must satisfy, and the builder that
//! glues `e^{-t}` to `1 + e^{-t}` with a smooth step.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// `(f, f', f'')` at one parameter value.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WarpValue {
    pub f: f64,
    pub df: f64,
    pub d2f: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum WarpFunction {
    /// `f(t) = e^{-t}`.
    PureExp,
    /// `f(t) = 1 + e^{-t}`.
    ShiftedExp,
    /// `e^{-t}` for `t <= t0`, `1 + e^{-t}` for `t >= t1`, smooth step in between.
    Interpolated { t0: f64, t1: f64 },
    /// Diagnostic constant warp. Fails the monotonicity condition.
    Constant { value: f64 },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WarpError {
    #[error("invalid transition interval: need t0 < t1 <= 0, got t0 = {t0}, t1 = {t1}")]
    InvalidInterval { t0: f64, t1: f64 },
    #[error("invalid builder parameter: {0}")]
    InvalidParameter(String),
    #[error("empty parameter grid")]
    EmptyGrid,
    #[error("warp value f({t}) = {f} is not positive")]
    NonPositive { t: f64, f: f64 },
    #[error(
        "no valid transition after {attempts} attempts (last t0 = {last_t0}); \
         worst margin {margin:e} for condition ({condition}) at t = {t}"
    )]
    InterpolationFailed {
        attempts: usize,
        last_t0: f64,
        t: f64,
        condition: Condition,
        margin: f64,
    },
}

impl WarpFunction {
    pub fn interpolated(t0: f64, t1: f64) -> Result<Self, WarpError> {
        if !(t0.is_finite() && t1.is_finite() && t0 < t1 && t1 <= 0.0) {
            return Err(WarpError::InvalidInterval { t0, t1 });
        }
        Ok(Self::Interpolated { t0, t1 })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::PureExp => "pure_exp",
            Self::ShiftedExp => "shifted_exp",
            Self::Interpolated { .. } => "interpolated",
            Self::Constant { .. } => "constant",
        }
    }

    pub fn eval(&self, t: f64) -> WarpValue {
        match *self {
            Self::PureExp => {
                let e = (-t).exp();
                WarpValue {
                    f: e,
                    df: -e,
                    d2f: e,
                }
            }
            Self::ShiftedExp => {
                let e = (-t).exp();
                WarpValue {
                    f: 1.0 + e,
                    df: -e,
                    d2f: e,
                }
            }
            Self::Interpolated { t0, t1 } => {
                let e = (-t).exp();
                if t <= t0 {
                    return WarpValue {
                        f: e,
                        df: -e,
                        d2f: e,
                    };
                }
                if t >= t1 {
                    return WarpValue {
                        f: 1.0 + e,
                        df: -e,
                        d2f: e,
                    };
                }
                let width = t1 - t0;
                let (s, ds, d2s) = smooth_step((t - t0) / width);
                WarpValue {
                    f: e + s,
                    df: -e + ds / width,
                    d2f: e + d2s / (width * width),
                }
            }
            Self::Constant { value } => WarpValue {
                f: value,
                df: 0.0,
                d2f: 0.0,
            },
        }
    }

    /// Supremum of `f` over `[from, inf)` when the family's closed form
    /// bounds it, `None` otherwise.
    pub fn tail_sup(&self, from: f64) -> Option<f64> {
        let sup = match *self {
            Self::PureExp | Self::ShiftedExp => self.eval(from).f,
            // decreasing once it has become 1 + e^{-t}
            Self::Interpolated { t1, .. } if from >= t1 => self.eval(from).f,
            Self::Interpolated { .. } => return None,
            Self::Constant { value } => value,
        };
        sup.is_finite().then_some(sup)
    }
}

/// `s(u) = phi(u) / (phi(u) + phi(1 - u))` with `phi(u) = exp(-1/u)` for
/// `u > 0`, together with its first two derivatives.
///
/// Written as the logistic function of `q(u) = 1/(1-u) - 1/u`, which stays
/// finite for every `u` strictly inside `(0, 1)`.
pub fn smooth_step(u: f64) -> (f64, f64, f64) {
    if u <= 0.0 {
        return (0.0, 0.0, 0.0);
    }
    if u >= 1.0 {
        return (1.0, 0.0, 0.0);
    }
    let v = 1.0 - u;
    let q = 1.0 / v - 1.0 / u;
    let dq = 1.0 / (v * v) + 1.0 / (u * u);
    let d2q = 2.0 / (v * v * v) - 2.0 / (u * u * u);
    let e = (-q.abs()).exp();
    let s = if q >= 0.0 {
        1.0 / (1.0 + e)
    } else {
        e / (1.0 + e)
    };
    // s (1 - s), evaluated without cancellation
    let w = e / ((1.0 + e) * (1.0 + e));
    let ds = w * dq;
    let d2s = w * ((1.0 - 2.0 * s) * dq * dq + d2q);
    (s, ds, d2s)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Condition {
    A,
    B,
    C,
    D,
}

impl std::fmt::Display for Condition {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Condition::A => "a",
            Condition::B => "b",
            Condition::C => "c",
            Condition::D => "d",
        };
        f.write_str(s)
    }
}

/// Signed slack of the four sign conditions at one `t`:
/// `a = f - 1`, `b = -f'`, `c = f''`, `d = 1 - f f' - (1 + f'/f)^2`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConditionMargins {
    pub t: f64,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl ConditionMargins {
    pub fn at(w: &WarpFunction, t: f64) -> Result<Self, WarpError> {
        let v = w.eval(t);
        if !(v.f > 0.0) {
            return Err(WarpError::NonPositive { t, f: v.f });
        }
        let r = 1.0 + v.df / v.f;
        Ok(Self {
            t,
            a: v.f - 1.0,
            b: -v.df,
            c: v.d2f,
            d: 1.0 - v.f * v.df - r * r,
        })
    }

    pub fn get(&self, c: Condition) -> f64 {
        match c {
            Condition::A => self.a,
            Condition::B => self.b,
            Condition::C => self.c,
            Condition::D => self.d,
        }
    }

    /// Smallest of the four margins and the condition it belongs to.
    pub fn worst(&self) -> (Condition, f64) {
        [Condition::A, Condition::B, Condition::C, Condition::D]
            .into_iter()
            .map(|c| (c, self.get(c)))
            .fold((Condition::A, f64::INFINITY), |acc, x| {
                if x.1 < acc.1 {
                    x
                } else {
                    acc
                }
            })
    }

    pub fn all_above(&self, floor: f64) -> bool {
        self.a > floor && self.b > floor && self.c > floor && self.d > floor
    }
}

/// Componentwise minimum of margins over a grid.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MinMargins {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl MinMargins {
    pub fn of(margins: &[ConditionMargins]) -> Self {
        margins.iter().fold(
            MinMargins {
                a: f64::INFINITY,
                b: f64::INFINITY,
                c: f64::INFINITY,
                d: f64::INFINITY,
            },
            |m, x| MinMargins {
                a: m.a.min(x.a),
                b: m.b.min(x.b),
                c: m.c.min(x.c),
                d: m.d.min(x.d),
            },
        )
    }

    pub fn min(&self) -> f64 {
        self.a.min(self.b).min(self.c).min(self.d)
    }
}

pub fn check_conditions(
    w: &WarpFunction,
    grid: &[f64],
) -> Result<Vec<ConditionMargins>, WarpError> {
    if grid.is_empty() {
        return Err(WarpError::EmptyGrid);
    }
    grid.iter().map(|&t| ConditionMargins::at(w, t)).collect()
}

/// Uniform grid `start, start + step, ...` up to `end` inclusive (the last
/// point is snapped onto `end` when it lands within rounding of it).
pub fn uniform_grid(start: f64, end: f64, step: f64) -> Vec<f64> {
    if !(step > 0.0) || end < start {
        return vec![start];
    }
    let n = ((end - start) / step + 1e-9).floor() as usize;
    (0..=n).map(|i| start + i as f64 * step).collect()
}

pub const MAX_WIDEN_ATTEMPTS: usize = 20;

/// Output of [`build_interpolation`]: the warp plus the certificate that was
/// checked for it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValidatedWarp {
    pub warp: WarpFunction,
    pub requested_t0: f64,
    pub t0: f64,
    pub t1: f64,
    pub grid_start: f64,
    pub grid_end: f64,
    pub grid_step: f64,
    pub margin_floor: f64,
    pub min_margins: MinMargins,
    /// Number of widenings applied to `requested_t0`.
    pub widenings: usize,
}

/// Builds an interpolated warp on `[t0, t1]` and validates the four
/// conditions on `[t0' - 2, 1]` with spacing `grid_step`, widening the
/// transition (`t0' <- t1 - 2 (t1 - t0')`) until every margin exceeds
/// `margin_floor`.
pub fn build_interpolation(
    t0: f64,
    t1: f64,
    grid_step: f64,
    margin_floor: f64,
) -> Result<ValidatedWarp, WarpError> {
    WarpFunction::interpolated(t0, t1)?;
    if !(grid_step > 0.0 && grid_step.is_finite()) {
        return Err(WarpError::InvalidParameter(format!(
            "grid_step must be positive, got {grid_step}"
        )));
    }
    if !(margin_floor >= 0.0) {
        return Err(WarpError::InvalidParameter(format!(
            "margin_floor must be non-negative, got {margin_floor}"
        )));
    }

    let mut start = t0;
    let mut worst = (0.0, Condition::A, f64::NEG_INFINITY);
    for widenings in 0..=MAX_WIDEN_ATTEMPTS {
        let warp = WarpFunction::Interpolated { t0: start, t1 };
        let grid = uniform_grid(start - 2.0, 1.0, grid_step);
        let margins = check_conditions(&warp, &grid)?;
        let bad = margins
            .iter()
            .map(|m| {
                let (c, v) = m.worst();
                (m.t, c, v)
            })
            .min_by(|x, y| x.2.total_cmp(&y.2))
            .expect("grid is non-empty");
        if bad.2 > margin_floor {
            return Ok(ValidatedWarp {
                warp,
                requested_t0: t0,
                t0: start,
                t1,
                grid_start: start - 2.0,
                grid_end: 1.0,
                grid_step,
                margin_floor,
                min_margins: MinMargins::of(&margins),
                widenings,
            });
        }
        worst = bad;
        if widenings < MAX_WIDEN_ATTEMPTS {
            start = t1 - 2.0 * (t1 - start);
        }
    }
    Err(WarpError::InterpolationFailed {
        attempts: MAX_WIDEN_ATTEMPTS + 1,
        last_t0: start,
        t: worst.0,
        condition: worst.1,
        margin: worst.2,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn closed_form_values_at_zero() {
        assert_eq!(
            WarpFunction::PureExp.eval(0.0),
            WarpValue {
                f: 1.0,
                df: -1.0,
                d2f: 1.0
            }
        );
        assert_eq!(
            WarpFunction::ShiftedExp.eval(0.0),
            WarpValue {
                f: 2.0,
                df: -1.0,
                d2f: 1.0
            }
        );
    }

    #[test]
    fn interpolated_outside_transition_is_exact() {
        let w = WarpFunction::interpolated(-4.0, -1.0).unwrap();
        let e5 = 5f64.exp();
        assert_eq!(
            w.eval(-5.0),
            WarpValue {
                f: e5,
                df: -e5,
                d2f: e5
            }
        );
        for t in [-1.0, -0.5, 0.0, 3.0] {
            assert_eq!(w.eval(t), WarpFunction::ShiftedExp.eval(t));
        }
        for t in [-4.0, -7.5] {
            assert_eq!(w.eval(t), WarpFunction::PureExp.eval(t));
        }
    }

    #[test]
    fn rejects_bad_interval() {
        assert!(WarpFunction::interpolated(-1.0, -1.0).is_err());
        assert!(WarpFunction::interpolated(-1.0, 0.5).is_err());
        assert!(WarpFunction::interpolated(f64::NAN, -0.5).is_err());
    }

    #[test]
    fn smooth_step_endpoints_and_symmetry() {
        assert_eq!(smooth_step(0.0), (0.0, 0.0, 0.0));
        assert_eq!(smooth_step(1.0), (1.0, 0.0, 0.0));
        let (s, ds, d2s) = smooth_step(0.5);
        assert_relative_eq!(s, 0.5);
        assert_relative_eq!(ds, 2.0);
        assert!(d2s.abs() < 1e-12);
        for u in [0.1, 0.3, 0.77] {
            let (a, da, d2a) = smooth_step(u);
            let (b, db, d2b) = smooth_step(1.0 - u);
            assert_relative_eq!(a + b, 1.0, epsilon = 1e-15);
            assert_relative_eq!(da, db, max_relative = 1e-12);
            assert_relative_eq!(d2a, -d2b, max_relative = 1e-10);
        }
        // flat to all orders at the ends
        let (s, ds, d2s) = smooth_step(1e-3);
        assert!(s < 1e-300 && ds < 1e-300 && d2s.abs() < 1e-290);
    }

    #[test]
    fn shifted_exp_margins_at_zero() {
        let m = ConditionMargins::at(&WarpFunction::ShiftedExp, 0.0).unwrap();
        assert_eq!((m.a, m.b, m.c), (1.0, 1.0, 1.0));
        assert_relative_eq!(m.d, 2.75);
    }

    #[test]
    fn pure_exp_margins() {
        let m = ConditionMargins::at(&WarpFunction::PureExp, 0.5).unwrap();
        assert_relative_eq!(m.a, (-0.5f64).exp() - 1.0);
        assert!(m.a < -0.39);
        let e = 1f64.exp();
        let m = ConditionMargins::at(&WarpFunction::PureExp, -1.0).unwrap();
        assert_relative_eq!(m.a, e - 1.0);
        assert_relative_eq!(m.b, e);
        assert_relative_eq!(m.c, e);
        assert_relative_eq!(m.d, 1.0 + e * e, max_relative = 1e-15);
    }

    #[test]
    fn pure_exp_condition_d_has_no_ratio_term() {
        for t in uniform_grid(-5.0, 2.0, 0.25) {
            let m = ConditionMargins::at(&WarpFunction::PureExp, t).unwrap();
            assert_relative_eq!(m.d, (-2.0 * t).exp() + 1.0, max_relative = 1e-14);
        }
    }

    #[test]
    fn non_positive_warp_is_a_domain_error() {
        let w = WarpFunction::Constant { value: -1.0 };
        assert!(matches!(
            check_conditions(&w, &[0.0]),
            Err(WarpError::NonPositive { .. })
        ));
        assert_eq!(
            check_conditions(&WarpFunction::PureExp, &[]),
            Err(WarpError::EmptyGrid)
        );
    }

    #[test]
    fn constant_warp_fails_monotonicity() {
        let m = ConditionMargins::at(&WarpFunction::Constant { value: 2.0 }, 0.3).unwrap();
        assert_eq!(m.b, 0.0);
        assert!(!m.all_above(0.0));
    }

    #[test]
    fn grid_is_inclusive() {
        let g = uniform_grid(-1.0, 1.0, 0.5);
        assert_eq!(g, vec![-1.0, -0.5, 0.0, 0.5, 1.0]);
        assert_eq!(uniform_grid(0.0, 1.0, 0.001).len(), 1001);
    }

    #[test]
    fn steep_transition_is_widened_or_reported() {
        match build_interpolation(-0.2, -0.1, 1e-3, 1e-6) {
            Ok(v) => {
                assert!(v.t0 < -0.2);
                assert!(v.widenings > 0);
                assert!(v.min_margins.min() > 1e-6);
            }
            Err(e) => assert!(matches!(e, WarpError::InterpolationFailed { .. })),
        }
    }

    #[test]
    fn narrow_first_attempt_fails_condition_b() {
        let w = WarpFunction::interpolated(-0.2, -0.1).unwrap();
        let m = ConditionMargins::at(&w, -0.15).unwrap();
        assert!(m.b < 0.0);
    }

    #[test]
    fn builder_rejects_bad_parameters() {
        assert!(build_interpolation(-4.0, -1.0, 0.0, 1e-6).is_err());
        assert!(build_interpolation(-4.0, -1.0, 1e-3, -1.0).is_err());
        assert!(build_interpolation(-1.0, -4.0, 1e-3, 1e-6).is_err());
    }
}
