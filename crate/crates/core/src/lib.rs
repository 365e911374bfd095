//! Finite-volume negatively curved cusps over compact Sol 3-manifolds.
//!
//! The cusp metric on `C x R` is
//! `dt^2 + f(t)^2 dz^2 + e^{-2t} (e^{-2z} dx^2 + e^{2z} dy^2)`,
//! where `C` is a mapping torus of a hyperbolic toral automorphism and `f`
//! is a warping function. The crate builds `C`, constructs and validates
//! `f`, computes the Riemann tensor two independent ways, certifies that
//! every sectional curvature is negative over a `t` range, and integrates
//! the cusp volume with a tail bound.

// Tensor code indexes by coordinate; negated comparisons reject NaN.
#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod certify;
pub mod lattice;
pub mod metric;
pub mod optimize;
pub mod pipeline;
pub mod planes;
pub mod riemann;
pub mod table;
pub mod volume;
pub mod warp;

pub use certify::{
    certify, extremize_k, extremize_metric, rescale_to_pinching, CertificationReport,
    CertifyConfig, CertifyError, CertifyStatus, CurvatureBounds, SamplerConfig,
};
pub use lattice::{
    build_sol_lattice, cross_section_volume, verify_isometry, AffineMap3, AnosovMatrix,
    LatticeError, LatticeReport, SolLattice,
};
pub use metric::{metric_at, DiagonalMetric, MetricPoint};
pub use pipeline::{run_pipeline, PipelineError, PipelineRun, RunConfig};
pub use riemann::{
    christoffel, riemann_closed, riemann_fd, sectional_curvature, CurvatureError, FdOptions,
    RiemannTensor,
};
pub use table::{match_reference_table, MatchOptions, MatchReport, REFERENCE_TABLE};
pub use volume::{cusp_volume, VolumeError, VolumeResult};
pub use warp::{
    build_interpolation, check_conditions, ConditionMargins, ValidatedWarp, WarpError,
    WarpFunction, WarpValue,
};
