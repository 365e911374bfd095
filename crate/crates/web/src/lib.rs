//! Browser bindings. Every export returns a JSON string; errors become
//! JavaScript exceptions carrying the message.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use solcusp::certify::{certify, CertifyConfig};
use solcusp::lattice::{build_sol_lattice, AnosovMatrix, LatticeReport};
use solcusp::pipeline::{WarpConfig, WarpFamily};
use solcusp::warp::{build_interpolation, check_conditions, uniform_grid, WarpFunction};

const MAX_POINTS: usize = 20_000;

fn family(name: &str) -> Result<WarpFamily, String> {
    serde_json::from_value(serde_json::Value::String(name.replace('-', "_")))
        .map_err(|_| format!("unknown warp family {name:?}"))
}

/// Resolves a warp; interpolated ones are validated (and possibly widened).
/// A constant warp takes its value from `t0`.
fn resolve(name: &str, t0: f64, t1: f64) -> Result<(WarpFunction, Option<f64>), String> {
    let cfg = WarpConfig {
        family: family(name)?,
        t0,
        t1,
        value: Some(t0),
        ..WarpConfig::default()
    };
    if cfg.family == WarpFamily::Interpolated {
        let v = build_interpolation(t0, t1, cfg.step, cfg.margin).map_err(|e| e.to_string())?;
        Ok((v.warp, Some(v.t0)))
    } else {
        cfg.raw().map(|w| (w, None)).map_err(|e| e.to_string())
    }
}

fn grid(t_min: f64, t_max: f64, step: f64) -> Result<Vec<f64>, String> {
    if !(t_min < t_max && step > 0.0) {
        return Err("need t_min < t_max and step > 0".into());
    }
    if (t_max - t_min) / step > MAX_POINTS as f64 {
        return Err(format!("more than {MAX_POINTS} grid points"));
    }
    Ok(uniform_grid(t_min, t_max, step))
}

#[derive(Serialize)]
struct Profile {
    family: &'static str,
    widened_t0: Option<f64>,
    t: Vec<f64>,
    f: Vec<f64>,
    df: Vec<f64>,
    d2f: Vec<f64>,
    margin_a: Vec<f64>,
    margin_b: Vec<f64>,
    margin_c: Vec<f64>,
    margin_d: Vec<f64>,
}

pub fn warp_profile_json(
    name: &str,
    t0: f64,
    t1: f64,
    t_min: f64,
    t_max: f64,
    step: f64,
) -> Result<String, String> {
    let (w, widened_t0) = resolve(name, t0, t1)?;
    let ts = grid(t_min, t_max, step)?;
    let margins = check_conditions(&w, &ts).map_err(|e| e.to_string())?;
    let vals: Vec<_> = ts.iter().map(|&t| w.eval(t)).collect();
    let p = Profile {
        family: w.name(),
        widened_t0,
        f: vals.iter().map(|v| v.f).collect(),
        df: vals.iter().map(|v| v.df).collect(),
        d2f: vals.iter().map(|v| v.d2f).collect(),
        margin_a: margins.iter().map(|m| m.a).collect(),
        margin_b: margins.iter().map(|m| m.b).collect(),
        margin_c: margins.iter().map(|m| m.c).collect(),
        margin_d: margins.iter().map(|m| m.d).collect(),
        t: ts,
    };
    serde_json::to_string(&p).map_err(|e| e.to_string())
}

#[derive(Serialize)]
struct Curve {
    family: &'static str,
    status: String,
    global_negative: bool,
    pinched_from: Option<f64>,
    scale: Option<f64>,
    max_method_agreement: f64,
    t: Vec<f64>,
    k_min: Vec<f64>,
    k_max: Vec<f64>,
    exact_min: Vec<f64>,
    exact_max: Vec<f64>,
}

#[allow(clippy::too_many_arguments)]
pub fn curvature_curve_json(
    name: &str,
    t0: f64,
    t1: f64,
    t_min: f64,
    t_max: f64,
    step: f64,
    samples: usize,
    seed: u64,
) -> Result<String, String> {
    let (w, _) = resolve(name, t0, t1)?;
    let ts = grid(t_min, t_max, step)?;
    if ts.len() * samples > 50_000_000 {
        return Err("too much work for the browser; use the command-line tool".into());
    }
    let cfg = CertifyConfig {
        t_min,
        t_max,
        t_step: step,
        n_samples: samples,
        n_refine: 8,
        seed,
        require_conditions: false,
        ..CertifyConfig::default()
    };
    let r = certify(w, &cfg).map_err(|e| e.to_string())?;
    let c = &r.bounds_curve;
    let curve = Curve {
        family: w.name(),
        status: serde_json::to_value(r.status)
            .ok()
            .and_then(|v| v.as_str().map(String::from))
            .unwrap_or_default(),
        global_negative: r.global_negative,
        pinched_from: r.pinched_from(),
        scale: r.rescale.map(|s| s.scale),
        max_method_agreement: r.max_method_agreement,
        t: c.iter().map(|b| b.t).collect(),
        k_min: c.iter().map(|b| b.k_min).collect(),
        k_max: c.iter().map(|b| b.k_max).collect(),
        exact_min: c.iter().map(|b| b.operator_min).collect(),
        exact_max: c.iter().map(|b| b.operator_max).collect(),
    };
    serde_json::to_string(&curve).map_err(|e| e.to_string())
}

pub fn lattice_json(a: i64, b: i64, c: i64, d: i64) -> Result<String, String> {
    let m = AnosovMatrix::new(a, b, c, d).map_err(|e| e.to_string())?;
    serde_json::to_string(&LatticeReport::new(&build_sol_lattice(m))).map_err(|e| e.to_string())
}

#[wasm_bindgen]
pub fn warp_profile(
    family: &str,
    t0: f64,
    t1: f64,
    t_min: f64,
    t_max: f64,
    step: f64,
) -> Result<String, JsError> {
    warp_profile_json(family, t0, t1, t_min, t_max, step).map_err(|e| JsError::new(&e))
}

#[allow(clippy::too_many_arguments)]
#[wasm_bindgen]
pub fn curvature_curve(
    family: &str,
    t0: f64,
    t1: f64,
    t_min: f64,
    t_max: f64,
    step: f64,
    samples: u32,
    seed: u32,
) -> Result<String, JsError> {
    curvature_curve_json(
        family,
        t0,
        t1,
        t_min,
        t_max,
        step,
        samples as usize,
        seed as u64,
    )
    .map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn lattice_info(a: i32, b: i32, c: i32, d: i32) -> Result<String, JsError> {
    lattice_json(a.into(), b.into(), c.into(), d.into()).map_err(|e| JsError::new(&e))
}
