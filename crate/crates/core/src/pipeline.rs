//! End-to-end run: lattice, warp, Riemann table check, curvature
//! certificate and volume, rendered into named report files.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::certify::{certify, CertificationReport, CertifyConfig, CertifyError};
use crate::lattice::{build_sol_lattice, AnosovMatrix, LatticeError, LatticeReport};
use crate::table::{default_grid, match_reference_table, MatchOptions, MatchReport};
use crate::volume::{cusp_volume, VolumeResult};
use crate::warp::{build_interpolation, check_conditions, MinMargins, WarpError, WarpFunction};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("invalid matrix")]
    Matrix(#[from] LatticeError),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("i/o error")]
    Io(#[from] std::io::Error),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WarpFamily {
    PureExp,
    ShiftedExp,
    Interpolated,
    Constant,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WarpConfig {
    pub family: WarpFamily,
    pub t0: f64,
    pub t1: f64,
    pub step: f64,
    pub margin: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
}

impl Default for WarpConfig {
    fn default() -> Self {
        Self {
            family: WarpFamily::Interpolated,
            t0: -4.0,
            t1: -1.0,
            step: 1e-3,
            margin: 1e-6,
            value: None,
        }
    }
}

impl WarpConfig {
    /// The warp before any widening by the interpolation builder.
    pub fn raw(&self) -> Result<WarpFunction, WarpError> {
        Ok(match self.family {
            WarpFamily::PureExp => WarpFunction::PureExp,
            WarpFamily::ShiftedExp => WarpFunction::ShiftedExp,
            WarpFamily::Interpolated => WarpFunction::interpolated(self.t0, self.t1)?,
            WarpFamily::Constant => WarpFunction::Constant {
                value: self.value.ok_or_else(|| {
                    WarpError::InvalidParameter("constant warp needs a value".into())
                })?,
            },
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VolumeConfig {
    pub t0: f64,
    pub tol: f64,
}

impl Default for VolumeConfig {
    fn default() -> Self {
        Self {
            t0: 0.0,
            tol: 1e-10,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Json,
    Csv,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub directory: String,
    pub formats: Vec<OutputFormat>,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            directory: "solcusp-run".into(),
            formats: vec![OutputFormat::Json, OutputFormat::Csv],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub matrix: [i64; 4],
    pub warp: WarpConfig,
    pub certify: CertifyConfig,
    pub volume: VolumeConfig,
    pub output: OutputConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            matrix: [2, 1, 1, 1],
            warp: WarpConfig::default(),
            certify: CertifyConfig::default(),
            volume: VolumeConfig::default(),
            output: OutputConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), PipelineError> {
        let [a, b, c, d] = self.matrix;
        AnosovMatrix::new(a, b, c, d)?;
        self.warp
            .raw()
            .map_err(|e| PipelineError::Config(e.to_string()))?;
        if self.warp.family == WarpFamily::Interpolated
            && !(self.warp.step > 0.0 && self.warp.margin >= 0.0)
        {
            return Err(PipelineError::Config(
                "warp.step must be > 0 and warp.margin >= 0".into(),
            ));
        }
        self.certify
            .validate()
            .map_err(|e| PipelineError::Config(e.to_string()))?;
        if !(self.volume.tol > 0.0 && self.volume.t0.is_finite()) {
            return Err(PipelineError::Config("volume.tol must be > 0".into()));
        }
        if self.output.formats.is_empty() {
            return Err(PipelineError::Config("no output formats selected".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WarpReport {
    pub family: String,
    #[serde(rename = "T0")]
    pub t0: Option<f64>,
    #[serde(rename = "T1")]
    pub t1: Option<f64>,
    pub requested_t0: Option<f64>,
    pub widenings: usize,
    pub min_margins: MinMargins,
    pub grid_start: f64,
    pub grid_end: f64,
    pub grid_step: f64,
    pub warp: WarpFunction,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VolumeReport {
    #[serde(flatten)]
    pub result: VolumeResult,
    pub cross_section_volume: f64,
    pub t0: f64,
    pub tol: f64,
    /// The finiteness argument is often stated with the density `e^{-2t}`;
    /// the density integrated here is `sqrt(det g) = f e^{-2t}`.
    pub density: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub status: String,
    pub exit_code: i32,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
    pub riemann_table_matched: Option<bool>,
    pub conditions_hold: Option<bool>,
    pub globally_negative: Option<bool>,
    pub pinched_from: Option<f64>,
    pub scale: Option<f64>,
    pub total_volume: Option<f64>,
    /// Grid points whose sampled and refined extremes disagree by more
    /// than the configured tolerance.
    pub flagged_points: Option<usize>,
    pub max_method_agreement: Option<f64>,
    pub config: RunConfig,
}

#[derive(Clone, Debug, Default)]
pub struct PipelineRun {
    pub lattice: Option<LatticeReport>,
    pub warp: Option<WarpReport>,
    pub riemann: Option<MatchReport>,
    pub certify: Option<CertificationReport>,
    pub volume: Option<VolumeReport>,
    pub summary: Option<Summary>,
}

impl PipelineRun {
    pub fn exit_code(&self) -> i32 {
        self.summary.as_ref().map_or(1, |s| s.exit_code)
    }

    /// Report files as `(file name, contents)`.
    pub fn files(&self, formats: &[OutputFormat]) -> Vec<(String, String)> {
        fn json<T: Serialize>(v: &T) -> String {
            let mut s = serde_json::to_string_pretty(v).expect("reports serialize");
            s.push('\n');
            s
        }
        let mut out = Vec::new();
        if formats.contains(&OutputFormat::Json) {
            if let Some(x) = &self.lattice {
                out.push(("lattice.json".into(), json(x)));
            }
            if let Some(x) = &self.warp {
                out.push(("warp.json".into(), json(x)));
            }
            if let Some(x) = &self.riemann {
                out.push(("riemann.json".into(), json(x)));
            }
            if let Some(x) = &self.certify {
                out.push(("certify.json".into(), json(x)));
            }
            if let Some(x) = &self.volume {
                out.push(("volume.json".into(), json(x)));
            }
        }
        if formats.contains(&OutputFormat::Csv) {
            if let Some(x) = &self.certify {
                out.push(("certify.csv".into(), x.csv()));
            }
        }
        if let Some(x) = &self.summary {
            out.push(("summary.json".into(), json(x)));
        }
        out
    }
}

pub fn write_files(dir: &Path, files: &[(String, String)]) -> Result<(), PipelineError> {
    std::fs::create_dir_all(dir)?;
    for (name, contents) in files {
        std::fs::write(dir.join(name), contents)?;
    }
    Ok(())
}

/// Runs every stage. Configuration errors are returned before any work;
/// failures in a later stage are recorded in the summary and the stages
/// already completed are kept.
pub fn run_pipeline(config: &RunConfig) -> Result<PipelineRun, PipelineError> {
    config.validate()?;
    let mut run = PipelineRun::default();
    let fail = |run: &mut PipelineRun, msg: String, code: i32, partial: Partial| {
        run.summary = Some(Summary {
            status: "failed".into(),
            exit_code: code,
            message: Some(msg),
            riemann_table_matched: partial.matched,
            conditions_hold: partial.conditions,
            globally_negative: None,
            pinched_from: None,
            scale: None,
            total_volume: None,
            flagged_points: None,
            max_method_agreement: None,
            config: config.clone(),
        });
    };

    let [a, b, c, d] = config.matrix;
    let lattice = build_sol_lattice(AnosovMatrix::new(a, b, c, d)?);
    let lattice_report = LatticeReport::new(&lattice);
    let vol_c = lattice_report.volume;
    run.lattice = Some(lattice_report);

    let wc = &config.warp;
    let warp = if wc.family == WarpFamily::Interpolated {
        match build_interpolation(wc.t0, wc.t1, wc.step, wc.margin) {
            Ok(v) => {
                run.warp = Some(WarpReport {
                    family: v.warp.name().into(),
                    t0: Some(v.t0),
                    t1: Some(v.t1),
                    requested_t0: Some(v.requested_t0),
                    widenings: v.widenings,
                    min_margins: v.min_margins,
                    grid_start: v.grid_start,
                    grid_end: v.grid_end,
                    grid_step: v.grid_step,
                    warp: v.warp,
                });
                v.warp
            }
            Err(e) => {
                fail(&mut run, e.to_string(), 1, Partial::default());
                return Ok(run);
            }
        }
    } else {
        let w = wc.raw().map_err(|e| PipelineError::Config(e.to_string()))?;
        let grid = config.certify.grid();
        let margins =
            check_conditions(&w, &grid).map_err(|e| PipelineError::Config(e.to_string()))?;
        run.warp = Some(WarpReport {
            family: w.name().into(),
            t0: None,
            t1: None,
            requested_t0: None,
            widenings: 0,
            min_margins: MinMargins::of(&margins),
            grid_start: config.certify.t_min,
            grid_end: config.certify.t_max,
            grid_step: config.certify.t_step,
            warp: w,
        });
        w
    };

    let riemann = match match_reference_table(warp, &default_grid(), MatchOptions::default()) {
        Ok(r) => r,
        Err(e) => {
            fail(&mut run, e.to_string(), 1, Partial::default());
            return Ok(run);
        }
    };
    let matched = riemann.matched;
    run.riemann = Some(riemann);

    let conditions = match check_conditions(&warp, &config.certify.grid()) {
        Ok(m) => m.iter().all(|m| m.all_above(0.0)),
        Err(_) => false,
    };
    let partial = Partial {
        matched: Some(matched),
        conditions: Some(conditions),
    };

    let mut report = match certify(warp, &config.certify) {
        Ok(r) => r,
        Err(e @ CertifyError::ConditionsFailed { .. }) => {
            fail(&mut run, e.to_string(), 3, partial);
            return Ok(run);
        }
        Err(e) => {
            fail(&mut run, e.to_string(), 1, partial);
            return Ok(run);
        }
    };

    let volume = match cusp_volume(warp, vol_c, config.volume.t0, config.volume.tol) {
        Ok(v) => v,
        Err(e) => {
            run.certify = Some(report);
            fail(&mut run, e.to_string(), 1, partial);
            return Ok(run);
        }
    };
    report.volume = Some(volume.total);
    run.volume = Some(VolumeReport {
        result: volume,
        cross_section_volume: vol_c,
        t0: config.volume.t0,
        tol: config.volume.tol,
        density: "sqrt(det g) = f(t) e^{-2t}".into(),
    });

    let exit_code = report.status.exit_code();
    run.summary = Some(Summary {
        status: "ok".into(),
        exit_code,
        message: None,
        riemann_table_matched: Some(matched),
        conditions_hold: Some(conditions),
        globally_negative: Some(report.global_negative),
        pinched_from: report.pinched_from(),
        scale: report.rescale.map(|r| r.scale),
        total_volume: Some(volume.total),
        flagged_points: Some(report.flagged_points.len()),
        max_method_agreement: Some(report.max_method_agreement),
        config: config.clone(),
    });
    run.certify = Some(report);
    Ok(run)
}

#[derive(Default, Clone, Copy)]
struct Partial {
    matched: Option<bool>,
    conditions: Option<bool>,
}

/// Reads a run configuration, accepting either a bare [`RunConfig`] or a
/// `summary.json` that embeds one under `config`.
pub fn parse_config(text: &str) -> Result<RunConfig, PipelineError> {
    let value: serde_json::Value =
        serde_json::from_str(text).map_err(|e| PipelineError::Config(e.to_string()))?;
    let inner = match value.get("config") {
        Some(c) if value.get("exit_code").is_some() => c.clone(),
        _ => value,
    };
    serde_json::from_value(inner).map_err(|e| PipelineError::Config(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> RunConfig {
        let mut c = RunConfig::default();
        c.certify.t_min = -2.0;
        c.certify.t_max = 2.0;
        c.certify.t_step = 1.0;
        c.certify.n_samples = 1000;
        c.certify.n_refine = 4;
        c
    }

    #[test]
    fn bad_matrix_is_a_config_error() {
        let mut c = small();
        c.matrix = [2, 1, 1, 2];
        assert!(matches!(run_pipeline(&c), Err(PipelineError::Matrix(_))));
    }

    #[test]
    fn missing_sections_take_defaults() {
        let c = parse_config(r#"{"matrix": [3, 2, 1, 1]}"#).unwrap();
        assert_eq!(c.matrix, [3, 2, 1, 1]);
        assert_eq!(c.certify, CertifyConfig::default());
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let mut v = serde_json::to_value(small()).unwrap();
        v["extra"] = serde_json::json!(1);
        assert!(parse_config(&v.to_string()).is_err());
    }

    #[test]
    fn small_run_certifies() {
        let run = run_pipeline(&small()).unwrap();
        let s = run.summary.as_ref().unwrap();
        assert_eq!(s.status, "ok");
        assert_eq!(s.globally_negative, Some(true));
        assert_eq!(s.riemann_table_matched, Some(true));
        assert_eq!(s.conditions_hold, Some(true));
        assert_eq!(run.exit_code(), 0);
        let names: Vec<_> = run
            .files(&[OutputFormat::Json, OutputFormat::Csv])
            .into_iter()
            .map(|f| f.0)
            .collect();
        assert_eq!(
            names,
            [
                "lattice.json",
                "warp.json",
                "riemann.json",
                "certify.json",
                "volume.json",
                "certify.csv",
                "summary.json"
            ]
        );
    }

    #[test]
    fn summary_round_trips_to_config() {
        let run = run_pipeline(&small()).unwrap();
        let text = serde_json::to_string(run.summary.as_ref().unwrap()).unwrap();
        assert_eq!(parse_config(&text).unwrap(), small());
    }

    #[test]
    fn pure_exp_on_positive_t_fails_conditions() {
        let mut c = small();
        c.warp.family = WarpFamily::PureExp;
        c.certify.t_min = 0.1;
        c.certify.t_max = 5.0;
        c.certify.require_conditions = false;
        let run = run_pipeline(&c).unwrap();
        let s = run.summary.unwrap();
        assert_eq!(s.conditions_hold, Some(false));
        assert_eq!(s.globally_negative, Some(false));
        assert_eq!(s.exit_code, 2);
    }
}
