//! Cusp volume `vol(C) * int_{t0}^inf sqrt(det g) dt` by adaptive
//! Gauss-Kronrod quadrature on a finite range plus an analytic tail bound.

#![allow(clippy::excessive_precision)]

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::metric::metric_at;
use crate::warp::WarpFunction;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum VolumeError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("cannot bound sup f on [{from}, inf) for the {family} family")]
    UnboundedTail { family: String, from: f64 },
    #[error("quadrature did not reach tolerance {tol:e} (estimate {estimate:e})")]
    NotConverged { tol: f64, estimate: f64 },
}

// 15-point Kronrod nodes on [-1, 1] (non-negative half) and weights; the
// odd-indexed nodes are the 7-point Gauss nodes.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.000_000_000_000_000_000_000_000_000_000_000,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// Kronrod estimate and `|Kronrod - Gauss|` on `[a, b]`.
fn gk15(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for j in 0..7 {
        let x = h * XGK[j];
        let s = f(c - x) + f(c + x);
        kronrod += WGK[j] * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    (kronrod * h, ((kronrod - gauss) * h).abs())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Quadrature {
    pub value: f64,
    pub error: f64,
    pub intervals: usize,
}

/// Globally adaptive bisection until the summed error estimate is `<= tol`.
pub fn integrate(
    f: impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    tol: f64,
    max_intervals: usize,
) -> Result<Quadrature, VolumeError> {
    let (v, e) = gk15(&f, a, b);
    let mut parts = vec![(a, b, v, e)];
    loop {
        let error: f64 = parts.iter().map(|p| p.3).sum();
        if error <= tol || parts.len() >= max_intervals {
            let value = parts.iter().map(|p| p.2).sum();
            if error > tol {
                return Err(VolumeError::NotConverged {
                    tol,
                    estimate: error,
                });
            }
            return Ok(Quadrature {
                value,
                error,
                intervals: parts.len(),
            });
        }
        let worst = parts
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.total_cmp(&y.1 .3))
            .map(|(i, _)| i)
            .expect("at least one interval");
        let (lo, hi, _, _) = parts.swap_remove(worst);
        let mid = 0.5 * (lo + hi);
        let (v1, e1) = gk15(&f, lo, mid);
        let (v2, e2) = gk15(&f, mid, hi);
        parts.push((lo, mid, v1, e1));
        parts.push((mid, hi, v2, e2));
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct VolumeResult {
    /// Quadrature of the density over `[t0, cutoff]`.
    pub integral: f64,
    pub quadrature_error: f64,
    /// Bound on the omitted integral over `[cutoff, inf)`.
    pub tail_bound: f64,
    pub cutoff: f64,
    /// `quadrature_error + tail_bound`.
    pub error_bound: f64,
    pub total: f64,
}

/// `sqrt(det g)` of the cusp metric, independent of `z`.
pub fn density(w: WarpFunction, t: f64) -> f64 {
    metric_at(w, t, 0.0).volume_density()
}

pub fn cusp_volume(
    w: WarpFunction,
    vol_c: f64,
    t0: f64,
    tol: f64,
) -> Result<VolumeResult, VolumeError> {
    if !(vol_c > 0.0 && vol_c.is_finite()) {
        return Err(VolumeError::InvalidArgument(format!("vol_c = {vol_c}")));
    }
    if !(tol > 0.0) || !t0.is_finite() {
        return Err(VolumeError::InvalidArgument(format!(
            "tol = {tol}, t0 = {t0}"
        )));
    }
    let mut cutoff = match w {
        WarpFunction::Interpolated { t1, .. } => t0.max(t1),
        _ => t0,
    };
    // sup f e^{-2t} over the tail is at most sup f * e^{-2 cutoff}
    let tail = |c: f64| -> Result<f64, VolumeError> {
        let sup = w.tail_sup(c).ok_or_else(|| VolumeError::UnboundedTail {
            family: w.name().to_string(),
            from: c,
        })?;
        Ok(sup * (-2.0 * c).exp() / 2.0)
    };
    let mut tail_bound = tail(cutoff)?;
    while tail_bound > 0.5 * tol {
        cutoff += 0.25;
        tail_bound = tail(cutoff)?;
        if cutoff > t0 + 1e4 {
            return Err(VolumeError::UnboundedTail {
                family: w.name().to_string(),
                from: cutoff,
            });
        }
    }
    let q = integrate(|t| density(w, t), t0, cutoff, 0.5 * tol, 10_000)?;
    Ok(VolumeResult {
        integral: q.value,
        quadrature_error: q.error,
        tail_bound,
        cutoff,
        error_bound: q.error + tail_bound,
        total: vol_c * q.value,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gk_integrates_polynomials_exactly() {
        let (v, e) = gk15(&|x: f64| x.powi(6) - 3.0 * x * x + 1.0, -1.0, 2.0);
        let exact = (128.0 / 7.0 - 8.0 + 2.0) - (-1.0 / 7.0 + 1.0 - 1.0);
        assert!((v - exact).abs() < 1e-13);
        assert!(e < 1e-12);
    }

    #[test]
    fn pure_exp_closed_form() {
        let r = cusp_volume(WarpFunction::PureExp, 1.0, 0.0, 1e-10).unwrap();
        assert!((r.integral - 1.0 / 3.0).abs() <= 1e-10);
    }

    #[test]
    fn shifted_exp_closed_form() {
        let r = cusp_volume(WarpFunction::ShiftedExp, 1.0, 0.0, 1e-10).unwrap();
        assert!((r.integral - 5.0 / 6.0).abs() <= 1e-10);
        assert!(r.tail_bound <= 0.5e-10);
        assert!(r.error_bound <= 1e-10);
    }

    #[test]
    fn density_is_f_times_exp() {
        let w = WarpFunction::interpolated(-4.0, -1.0).unwrap();
        for t in [-5.0, -3.3, -2.0, -1.0, 0.0, 0.7, 4.0] {
            let want = w.eval(t).f * (-2.0 * t).exp();
            assert!((density(w, t) - want).abs() <= 1e-12 * want.max(1.0));
        }
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(cusp_volume(WarpFunction::ShiftedExp, 0.0, 0.0, 1e-8).is_err());
        assert!(cusp_volume(WarpFunction::ShiftedExp, 1.0, 0.0, 0.0).is_err());
        assert!(cusp_volume(WarpFunction::ShiftedExp, 1.0, f64::NAN, 1e-8).is_err());
    }

    #[test]
    fn unbounded_tail_is_rejected() {
        let w = WarpFunction::Constant {
            value: f64::INFINITY,
        };
        assert!(matches!(
            cusp_volume(w, 1.0, 0.0, 1e-8),
            Err(VolumeError::UnboundedTail { .. })
        ));
    }

    #[test]
    fn tighter_tolerance_never_loosens_the_bound() {
        let mut last = f64::INFINITY;
        for k in 4..=12 {
            let r = cusp_volume(WarpFunction::ShiftedExp, 1.0, 0.0, 10f64.powi(-k)).unwrap();
            assert!(r.error_bound <= last);
            last = r.error_bound;
        }
    }

    #[test]
    fn additivity() {
        let tol = 1e-10;
        let w = WarpFunction::ShiftedExp;
        let whole = cusp_volume(w, 1.0, 0.0, tol).unwrap().integral;
        let head = integrate(|t| density(w, t), 0.0, 1.0, tol, 1000)
            .unwrap()
            .value;
        let rest = cusp_volume(w, 1.0, 1.0, tol).unwrap().integral;
        assert!((whole - head - rest).abs() <= 2.0 * tol);
    }
}
