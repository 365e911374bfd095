//! Sectional-curvature extremization over all 2-planes at each `t`, the
//! negativity certificate over a `t` grid, and the rescaling that pinches
//! the cusp end into `(-1, 0)`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::metric::DiagonalMetric;
use crate::optimize::{nelder_mead, NelderMeadOptions};
use crate::planes::{orthonormalize, CurvatureOperator, PlaneChart, PlaneWitness, Vec4};
use crate::riemann::{bivector_name, riemann_closed, BIVECTORS, N_BIVECTORS};
use crate::warp::{uniform_grid, Condition, ConditionMargins, WarpError, WarpFunction};

pub const MIN_SAMPLES: usize = 1000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CertifyError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Warp(#[from] WarpError),
    #[error(
        "condition ({condition}) fails at t = {t} with margin {margin:e}; \
         certification refused before sampling"
    )]
    ConditionsFailed {
        t: f64,
        condition: Condition,
        margin: f64,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SamplerConfig {
    pub n_samples: usize,
    pub n_refine: usize,
    pub seed: u64,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self {
            n_samples: 100_000,
            n_refine: 32,
            seed: 1,
        }
    }
}

impl SamplerConfig {
    fn validate(&self) -> Result<(), CertifyError> {
        if self.n_samples < MIN_SAMPLES {
            return Err(CertifyError::InvalidConfig(format!(
                "n_samples = {} is below {MIN_SAMPLES}",
                self.n_samples
            )));
        }
        if self.n_refine == 0 {
            return Err(CertifyError::InvalidConfig(
                "n_refine must be positive".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvatureBounds {
    pub t: f64,
    pub k_min: f64,
    pub k_max: f64,
    pub argmin_plane: PlaneWitness,
    pub argmax_plane: PlaneWitness,
    /// Extremes over random planes and the six frame planes.
    pub sampled_min: f64,
    pub sampled_max: f64,
    /// Extremes after local refinement.
    pub refined_min: f64,
    pub refined_max: f64,
    /// `max(|sampled_min - refined_min|, |sampled_max - refined_max|)`.
    pub method_agreement: f64,
    /// Frame-plane curvatures in bivector order `xy, xz, xt, yz, yt, zt`.
    pub frame_planes: [f64; N_BIVECTORS],
    /// Eigenvalue range of the curvature operator, an outer enclosure.
    pub operator_min: f64,
    pub operator_max: f64,
    /// Random pairs that were too close to dependent and were redrawn.
    pub redrawn_samples: usize,
}

#[derive(Clone)]
struct Candidate {
    k: f64,
    u: Vec4,
    v: Vec4,
}

/// Keeps the `cap` smallest keys seen so far.
struct Best {
    cap: usize,
    items: Vec<Candidate>,
}

impl Best {
    fn new(cap: usize) -> Self {
        Self {
            cap,
            items: Vec::with_capacity(cap + 1),
        }
    }

    #[inline]
    fn offer(&mut self, key: f64, make: impl FnOnce() -> Candidate) {
        if self.items.len() == self.cap && key >= self.items[self.cap - 1].k {
            return;
        }
        let mut c = make();
        c.k = key;
        let pos = self.items.partition_point(|x| x.k <= key);
        self.items.insert(pos, c);
        self.items.truncate(self.cap);
    }
}

fn stream_seed(seed: u64, index: u64) -> u64 {
    // splitmix64 finalizer over (seed, index)
    let mut x = seed ^ index.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Minimizes `sign * K` from a starting plane; two passes, re-centering the
/// chart on the first result.
fn refine(op: &CurvatureOperator, start: &Candidate, sign: f64) -> (f64, PlaneChart) {
    let mut chart =
        PlaneChart::centered_at(&start.u, &start.v).expect("candidates are orthonormal pairs");
    let mut best = sign * op.curvature(&start.u, &start.v);
    for step in [0.2, 0.01] {
        let m = nelder_mead(
            |a: &[f64; 4]| {
                let (u, v) = chart.plane_at(a);
                sign * op.curvature(&u, &v)
            },
            [0.0; 4],
            NelderMeadOptions {
                initial_step: step,
                ..Default::default()
            },
        );
        if m.value <= best {
            best = m.value;
            chart.angles = m.x;
            chart = chart.recentered();
        }
    }
    (sign * best, chart)
}

/// Extremizes sectional curvature of `metric` at `(t, z)`.
pub fn extremize_metric(
    metric: &DiagonalMetric,
    t: f64,
    z: f64,
    cfg: &SamplerConfig,
    stream: u64,
) -> Result<CurvatureBounds, CertifyError> {
    cfg.validate()?;
    let p = metric.at(t, z);
    let op = CurvatureOperator::new(&riemann_closed(&p), &p.orthonormal_frame());

    let mut lows = Best::new(cfg.n_refine);
    let mut highs = Best::new(cfg.n_refine);
    let mut sampled_min = f64::INFINITY;
    let mut sampled_max = f64::NEG_INFINITY;

    let frame_planes = op.frame_planes();
    for &(a, b) in &BIVECTORS {
        let mut u = [0.0; 4];
        let mut v = [0.0; 4];
        u[a] = 1.0;
        v[b] = 1.0;
        let k = op.curvature(&u, &v);
        sampled_min = sampled_min.min(k);
        sampled_max = sampled_max.max(k);
        lows.offer(k, || Candidate { k, u, v });
        highs.offer(-k, || Candidate { k, u, v });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(stream_seed(cfg.seed, stream));
    let mut redrawn = 0;
    let mut drawn = 0;
    while drawn < cfg.n_samples {
        let raw: [f64; 8] = std::array::from_fn(|_| StandardNormal.sample(&mut rng));
        let Some((u, v)) = orthonormalize(
            &[raw[0], raw[1], raw[2], raw[3]],
            &[raw[4], raw[5], raw[6], raw[7]],
        ) else {
            redrawn += 1;
            continue;
        };
        drawn += 1;
        let k = op.curvature(&u, &v);
        sampled_min = sampled_min.min(k);
        sampled_max = sampled_max.max(k);
        lows.offer(k, || Candidate { k, u, v });
        highs.offer(-k, || Candidate { k, u, v });
    }

    let mut refined_min = (f64::INFINITY, None);
    for c in &lows.items {
        let (k, chart) = refine(&op, c, 1.0);
        if k < refined_min.0 {
            refined_min = (k, Some(chart));
        }
    }
    let mut refined_max = (f64::NEG_INFINITY, None);
    for c in &highs.items {
        let (k, chart) = refine(&op, c, -1.0);
        if k > refined_max.0 {
            refined_max = (k, Some(chart));
        }
    }
    let (operator_min, operator_max) = op.spectral_bounds();
    let argmin = refined_min
        .1
        .expect("at least the frame planes were refined");
    let argmax = refined_max
        .1
        .expect("at least the frame planes were refined");

    Ok(CurvatureBounds {
        t,
        k_min: refined_min.0.min(sampled_min),
        k_max: refined_max.0.max(sampled_max),
        argmin_plane: PlaneWitness::new(argmin, &op),
        argmax_plane: PlaneWitness::new(argmax, &op),
        sampled_min,
        sampled_max,
        refined_min: refined_min.0,
        refined_max: refined_max.0,
        method_agreement: (sampled_min - refined_min.0)
            .abs()
            .max((sampled_max - refined_max.0).abs()),
        frame_planes,
        operator_min,
        operator_max,
        redrawn_samples: redrawn,
    })
}

/// Extremizes sectional curvature of the cusp metric for `w` at `t`, `z = 0`.
pub fn extremize_k(
    w: WarpFunction,
    t: f64,
    cfg: &SamplerConfig,
) -> Result<CurvatureBounds, CertifyError> {
    extremize_metric(&DiagonalMetric::cusp(w), t, 0.0, cfg, 0)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CertifyConfig {
    pub t_min: f64,
    pub t_max: f64,
    pub t_step: f64,
    pub n_samples: usize,
    pub n_refine: usize,
    pub seed: u64,
    /// `K < 0` is certified as `k_max < -floor`.
    pub floor: f64,
    /// Points with `method_agreement` above this are flagged.
    pub agreement_tol: f64,
    /// Refuse to sample when a condition margin is not positive on the grid.
    pub require_conditions: bool,
}

impl Default for CertifyConfig {
    fn default() -> Self {
        Self {
            t_min: -6.0,
            t_max: 10.0,
            t_step: 0.05,
            n_samples: 100_000,
            n_refine: 32,
            seed: 1,
            floor: 1e-9,
            agreement_tol: 1e-4,
            require_conditions: true,
        }
    }
}

impl CertifyConfig {
    pub fn sampler(&self) -> SamplerConfig {
        SamplerConfig {
            n_samples: self.n_samples,
            n_refine: self.n_refine,
            seed: self.seed,
        }
    }

    pub fn validate(&self) -> Result<(), CertifyError> {
        let bad = |m: String| Err(CertifyError::InvalidConfig(m));
        if !(self.t_min.is_finite() && self.t_max.is_finite() && self.t_min < self.t_max) {
            return bad(format!(
                "need finite t_min < t_max, got [{}, {}]",
                self.t_min, self.t_max
            ));
        }
        if !(self.t_step > 0.0) {
            return bad(format!("t_step must be positive, got {}", self.t_step));
        }
        if !(self.floor >= 0.0) || !(self.agreement_tol > 0.0) {
            return bad("floor must be >= 0 and agreement_tol > 0".into());
        }
        self.sampler().validate()
    }

    pub fn grid(&self) -> Vec<f64> {
        uniform_grid(self.t_min, self.t_max, self.t_step)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CertifyStatus {
    Certified,
    Violation,
    Inconclusive,
}

impl CertifyStatus {
    pub fn exit_code(self) -> i32 {
        match self {
            CertifyStatus::Certified => 0,
            CertifyStatus::Violation => 2,
            CertifyStatus::Inconclusive => 3,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub t: f64,
    pub k: f64,
    pub plane: PlaneWitness,
}

/// Closed-form behaviour of the metric beyond the sampled range.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailNote {
    /// `"t <= t_min"` or `"t >= t_max"`.
    pub side: String,
    pub regime: String,
    pub note: String,
    /// Sup of `|k_min|` over the tail when it is negatively curved there.
    pub sup_abs_k_min: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rescale {
    /// Metric scale `g -> scale^2 g`; curvatures scale by `1 / scale^2`.
    pub scale: f64,
    pub scale_squared: f64,
    /// Smallest grid `t` from which every rescaled bound lies in `(-1, 0)`.
    pub pinched_from: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertificationReport {
    pub warp: WarpFunction,
    pub config: CertifyConfig,
    pub status: CertifyStatus,
    pub bounds_curve: Vec<CurvatureBounds>,
    pub margins: Vec<ConditionMargins>,
    pub conditions_hold: bool,
    pub global_negative: bool,
    pub max_k: f64,
    pub min_k: f64,
    pub witness: Option<Witness>,
    /// Grid points where all condition margins are positive yet `k_max >= 0`.
    pub condition_counterexamples: Vec<f64>,
    /// Grid points whose sampler/refiner gap exceeds `agreement_tol`.
    pub flagged_points: Vec<f64>,
    pub max_method_agreement: f64,
    pub rescale: Option<Rescale>,
    pub tail_notes: Vec<TailNote>,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub volume: Option<f64>,
}

impl CertificationReport {
    pub fn pinched_from(&self) -> Option<f64> {
        self.rescale.and_then(|r| r.pinched_from)
    }

    pub fn csv(&self) -> String {
        let mut s =
            String::from("t,k_min,k_max,margin_a,margin_b,margin_c,margin_d,method_agreement\n");
        for (b, m) in self.bounds_curve.iter().zip(&self.margins) {
            s.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                b.t, b.k_min, b.k_max, m.a, m.b, m.c, m.d, b.method_agreement
            ));
        }
        s
    }
}

/// Picks `scale^2 = (1 + floor) max(1, |k_min(last)|, tail_sup)`, the least
/// rescaling that pinches the cusp end, then the longest grid suffix on
/// which every rescaled bound is inside `(-1, 0)`.
pub fn rescale_to_pinching(
    curve: &[CurvatureBounds],
    tail_sup: Option<f64>,
    floor: f64,
) -> Rescale {
    let last = curve.last().map_or(0.0, |b| b.k_min.abs());
    let s2 = (1.0 + floor) * 1f64.max(last).max(tail_sup.unwrap_or(0.0));
    let mut pinched_from = None;
    for b in curve.iter().rev() {
        if b.k_min / s2 > -1.0 && b.k_max / s2 < 0.0 {
            pinched_from = Some(b.t);
        } else {
            break;
        }
    }
    Rescale {
        scale: s2.sqrt(),
        scale_squared: s2,
        pinched_from,
    }
}

fn operator_range(w: WarpFunction, t: f64) -> (f64, f64) {
    let p = DiagonalMetric::cusp(w).at(t, 0.0);
    CurvatureOperator::new(&riemann_closed(&p), &p.orthonormal_frame()).spectral_bounds()
}

/// Regime notes for `t < t_min` and `t > t_max`, and the sup of `|k_min|`
/// over the cusp tail when it is negatively curved.
pub fn tail_notes(w: WarpFunction, t_min: f64, t_max: f64) -> (Vec<TailNote>, Option<f64>) {
    let pure_left = match w {
        WarpFunction::PureExp => true,
        WarpFunction::Interpolated { t0, .. } => t_min <= t0,
        _ => false,
    };
    let left = if pure_left {
        TailNote {
            side: "t <= t_min".into(),
            regime: "pure_exp".into(),
            note: "f = e^{-t}: metric is dt^2 + e^{-2t} g_Sol; frame curvatures \
                   K(E_t, .) = -1, K(E_x, E_y) = e^{2t} - 1, K(E_x, E_z) = K(E_y, E_z) = -e^{2t} - 1, \
                   all tending to -1 as t -> -inf"
                .into(),
            sup_abs_k_min: Some(1.0 + (2.0 * t_min).exp()),
        }
    } else {
        TailNote {
            side: "t <= t_min".into(),
            regime: w.name().into(),
            note: "not covered by a closed-form regime".into(),
            sup_abs_k_min: None,
        }
    };

    let shifted_right = match w {
        WarpFunction::ShiftedExp => true,
        WarpFunction::Interpolated { t1, .. } => t_max >= t1,
        _ => false,
    };
    if !shifted_right {
        let right = TailNote {
            side: "t >= t_max".into(),
            regime: w.name().into(),
            note: "cusp end is not in the 1 + e^{-t} regime; no tail bound".into(),
            sup_abs_k_min: None,
        };
        return (vec![left, right], None);
    }
    // exact operator spectrum on a geometric tail grid, plus the t -> inf
    // limit where f -> 1, f', f'' -> 0 and the spectrum is {-2, 0}
    let mut sup: f64 = 2.0;
    let mut all_negative = true;
    let mut dt = 0.0;
    while dt <= 512.0 {
        let (lo, hi) = operator_range(w, t_max + dt);
        sup = sup.max(-lo);
        all_negative &= hi < 0.0 || t_max + dt > 36.0;
        dt = if dt == 0.0 { 0.125 } else { dt * 2.0 };
    }
    let right = TailNote {
        side: "t >= t_max".into(),
        regime: "shifted_exp".into(),
        note: format!(
            "f = 1 + e^{{-t}}: conditions (a)-(d) hold in closed form; curvature operator \
             spectrum tends to {{-2, 0}} as t -> inf with K(E_z, E_t) = -e^{{-t}} / (1 + e^{{-t}}) < 0; \
             operator max negative on the checked tail grid: {all_negative}"
        ),
        sup_abs_k_min: Some(sup),
    };
    (vec![left, right], Some(sup))
}

#[cfg(feature = "parallel")]
fn map_grid<F>(grid: &[f64], f: F) -> Vec<Result<CurvatureBounds, CertifyError>>
where
    F: Fn(usize, f64) -> Result<CurvatureBounds, CertifyError> + Sync,
{
    use rayon::prelude::*;
    grid.par_iter().enumerate().map(|(i, &t)| f(i, t)).collect()
}

#[cfg(not(feature = "parallel"))]
fn map_grid<F>(grid: &[f64], f: F) -> Vec<Result<CurvatureBounds, CertifyError>>
where
    F: Fn(usize, f64) -> Result<CurvatureBounds, CertifyError>,
{
    grid.iter().enumerate().map(|(i, &t)| f(i, t)).collect()
}

pub fn certify(w: WarpFunction, cfg: &CertifyConfig) -> Result<CertificationReport, CertifyError> {
    cfg.validate()?;
    let grid = cfg.grid();
    let margins = grid
        .iter()
        .map(|&t| ConditionMargins::at(&w, t))
        .collect::<Result<Vec<_>, _>>()?;
    let conditions_hold = margins.iter().all(|m| m.all_above(0.0));
    if cfg.require_conditions && !conditions_hold {
        let (t, condition, margin) = margins
            .iter()
            .map(|m| {
                let (c, v) = m.worst();
                (m.t, c, v)
            })
            .min_by(|a, b| a.2.total_cmp(&b.2))
            .expect("grid is non-empty");
        // adding 0.0 turns a negative zero into zero for the message
        return Err(CertifyError::ConditionsFailed {
            t,
            condition,
            margin: margin + 0.0,
        });
    }

    let metric = DiagonalMetric::cusp(w);
    let sampler = cfg.sampler();
    let bounds_curve = map_grid(&grid, |i, t| {
        extremize_metric(&metric, t, 0.0, &sampler, i as u64)
    })
    .into_iter()
    .collect::<Result<Vec<_>, _>>()?;

    let max_k = bounds_curve
        .iter()
        .map(|b| b.k_max)
        .fold(f64::NEG_INFINITY, f64::max);
    let min_k = bounds_curve
        .iter()
        .map(|b| b.k_min)
        .fold(f64::INFINITY, f64::min);
    let witness = bounds_curve
        .iter()
        .filter(|b| b.k_max >= 0.0)
        .max_by(|a, b| a.k_max.total_cmp(&b.k_max))
        .map(|b| Witness {
            t: b.t,
            k: b.k_max,
            plane: b.argmax_plane.clone(),
        });
    let global_negative = bounds_curve.iter().all(|b| b.k_max < -cfg.floor);
    let status = if witness.is_some() {
        CertifyStatus::Violation
    } else if !global_negative {
        CertifyStatus::Inconclusive
    } else {
        CertifyStatus::Certified
    };
    let condition_counterexamples = bounds_curve
        .iter()
        .zip(&margins)
        .filter(|(b, m)| m.all_above(0.0) && b.k_max >= 0.0)
        .map(|(b, _)| b.t)
        .collect();
    let flagged_points = bounds_curve
        .iter()
        .filter(|b| !(b.method_agreement <= cfg.agreement_tol))
        .map(|b| b.t)
        .collect();
    let max_method_agreement = bounds_curve
        .iter()
        .map(|b| b.method_agreement)
        .fold(0.0, f64::max);

    let (tail_notes, tail_sup) = tail_notes(w, cfg.t_min, cfg.t_max);
    let rescale = global_negative.then(|| rescale_to_pinching(&bounds_curve, tail_sup, cfg.floor));

    Ok(CertificationReport {
        warp: w,
        config: *cfg,
        status,
        bounds_curve,
        margins,
        conditions_hold,
        global_negative,
        max_k,
        min_k,
        witness,
        condition_counterexamples,
        flagged_points,
        max_method_agreement,
        rescale,
        tail_notes,
        seed: cfg.seed,
        volume: None,
    })
}

/// Names of the frame planes in [`CurvatureBounds::frame_planes`] order.
pub fn frame_plane_names() -> [String; N_BIVECTORS] {
    std::array::from_fn(bivector_name)
}
