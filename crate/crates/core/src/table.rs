//! Eight closed-form Riemann components of the cusp metric,
//! and a brute-force search for the labelling of `1..4` onto `(x, y, z, t)`
//! under which they agree with a computed tensor.

use serde::{Deserialize, Serialize};

use crate::metric::{DiagonalMetric, COORD_NAMES, DIM};
use crate::riemann::{
    bivector_name, bivector_slot, riemann_closed, riemann_fd_metric, CurvatureError, FdOptions,
    RiemannTensor, N_BIVECTORS,
};
use crate::warp::{WarpFunction, WarpValue};

/// One entry `R_{abcd} = expr(t, z, f, f', f'')` with labels in `1..=4`.
#[derive(Clone, Copy)]
pub struct TableEntry {
    pub name: &'static str,
    pub labels: [usize; 4],
    pub expr: fn(f64, f64, WarpValue) -> f64,
}

impl std::fmt::Debug for TableEntry {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name)
    }
}

pub const REFERENCE_TABLE: [TableEntry; 8] = [
    TableEntry {
        name: "R_1212",
        labels: [1, 2, 1, 2],
        expr: |t, _z, w| (-4.0 * t).exp() * (1.0 - w.f * w.f) / (w.f * w.f),
    },
    TableEntry {
        name: "R_1313",
        labels: [1, 3, 1, 3],
        expr: |t, z, w| (-2.0 * t - 2.0 * z).exp() * (w.f * w.df - 1.0),
    },
    TableEntry {
        name: "R_1414",
        labels: [1, 4, 1, 4],
        expr: |t, z, _w| -(-2.0 * t - 2.0 * z).exp(),
    },
    TableEntry {
        name: "R_2323",
        labels: [2, 3, 2, 3],
        expr: |t, z, w| (-2.0 * t + 2.0 * z).exp() * (w.f * w.df - 1.0),
    },
    TableEntry {
        name: "R_2424",
        labels: [2, 4, 2, 4],
        expr: |t, z, _w| -(-2.0 * t + 2.0 * z).exp(),
    },
    TableEntry {
        name: "R_3434",
        labels: [3, 4, 3, 4],
        expr: |_t, _z, w| -w.f * w.d2f,
    },
    TableEntry {
        name: "R_1431",
        labels: [1, 4, 3, 1],
        expr: |t, z, w| (-2.0 * t - 2.0 * z).exp() * (1.0 + w.df / w.f),
    },
    TableEntry {
        name: "R_2432",
        labels: [2, 4, 3, 2],
        expr: |t, z, w| -(-2.0 * t + 2.0 * z).exp() * (1.0 + w.df / w.f),
    },
];

/// Which computed tensor the table is compared against.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Pipeline {
    Closed,
    FiniteDifference(FdOptions),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatchOptions {
    pub pipeline: Pipeline,
    /// Mismatches are `|computed - expected| / max(|computed|, |expected|, floor)`
    /// with `floor = scale_floor * max(1, largest |component| at the point)`.
    /// Entries that vanish identically for a warp (`f + f' = 0` for the
    /// pure exponential) are thereby compared against the tensor's size.
    pub scale_floor: f64,
    /// Threshold above which an unlisted independent slot counts as nonzero.
    pub extra_threshold: f64,
    pub tolerance: f64,
}

impl Default for MatchOptions {
    fn default() -> Self {
        Self {
            pipeline: Pipeline::FiniteDifference(FdOptions::default()),
            scale_floor: 1e-6,
            extra_threshold: 1e-7,
            tolerance: 1e-5,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComponentResidual {
    pub name: String,
    /// Coordinate indices the entry maps to under the chosen labelling.
    pub slot: String,
    pub max_relative: f64,
    pub max_absolute: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExtraComponent {
    pub slot: String,
    pub max_abs: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatchReport {
    /// `index_map[label - 1]` is the coordinate name assigned to `label`.
    pub index_map: [String; 4],
    /// Overall sign applied to the computed tensor (+1 or -1).
    pub sign: f64,
    pub max_relative_mismatch: f64,
    pub matched: bool,
    pub per_component: Vec<ComponentResidual>,
    pub extra_nonzero: Vec<ExtraComponent>,
    /// Best mismatch attained by each entry over all labellings and signs,
    /// so an entry that fails everywhere is localized.
    pub best_possible: Vec<ComponentResidual>,
    pub pipeline_agreement: f64,
    pub bianchi_residual: f64,
    pub symmetry_residual: f64,
    pub tolerance: f64,
}

fn permutations() -> Vec<[usize; 4]> {
    let mut out = Vec::with_capacity(24);
    for a in 0..DIM {
        for b in 0..DIM {
            for c in 0..DIM {
                for d in 0..DIM {
                    let p = [a, b, c, d];
                    let distinct = (0..4).all(|i| (0..i).all(|j| p[i] != p[j]));
                    if distinct {
                        out.push(p);
                    }
                }
            }
        }
    }
    out
}

struct Sample {
    t: f64,
    z: f64,
    warp: WarpValue,
    tensor: RiemannTensor,
    floor: f64,
}

fn mismatch(computed: f64, expected: f64, floor: f64) -> f64 {
    (computed - expected).abs() / computed.abs().max(expected.abs()).max(floor)
}

fn entry_residual(
    entry: &TableEntry,
    perm: &[usize; 4],
    sign: f64,
    samples: &[Sample],
) -> ComponentResidual {
    let [a, b, c, d] = entry.labels.map(|l| perm[l - 1]);
    let mut rel: f64 = 0.0;
    let mut abs: f64 = 0.0;
    for s in samples {
        let got = sign * s.tensor.get(a, b, c, d);
        let want = (entry.expr)(s.t, s.z, s.warp);
        rel = rel.max(mismatch(got, want, s.floor));
        abs = abs.max((got - want).abs());
    }
    ComponentResidual {
        name: entry.name.to_string(),
        slot: [a, b, c, d].map(|i| COORD_NAMES[i]).concat(),
        max_relative: rel,
        max_absolute: abs,
    }
}

/// Compares the closed-form table against the computed tensor at every point,
/// over all 24 labellings and both overall signs.
pub fn match_reference_table(
    w: WarpFunction,
    points: &[(f64, f64)],
    opts: MatchOptions,
) -> Result<MatchReport, CurvatureError> {
    let metric = DiagonalMetric::cusp(w);
    let mut samples = Vec::with_capacity(points.len());
    let mut agreement: f64 = 0.0;
    let mut bianchi: f64 = 0.0;
    let mut symmetry: f64 = 0.0;
    for &(t, z) in points {
        let closed = riemann_closed(&metric.at(t, z));
        let fd = riemann_fd_metric(
            &metric,
            t,
            z,
            match opts.pipeline {
                Pipeline::FiniteDifference(o) => o,
                Pipeline::Closed => FdOptions::default(),
            },
        )?;
        agreement = agreement.max(closed.max_abs_diff(&fd));
        let tensor = match opts.pipeline {
            Pipeline::Closed => closed,
            Pipeline::FiniteDifference(_) => fd,
        };
        bianchi = bianchi.max(tensor.bianchi_residual);
        symmetry = symmetry.max(tensor.symmetry_residual);
        let scale = tensor
            .slots
            .iter()
            .flatten()
            .fold(1.0f64, |m, x| m.max(x.abs()));
        samples.push(Sample {
            t,
            z,
            warp: w.eval(t),
            tensor,
            floor: opts.scale_floor * scale,
        });
    }

    let perms = permutations();
    let mut best: Option<(f64, [usize; 4], f64, Vec<ComponentResidual>)> = None;
    let mut best_possible: Vec<Option<ComponentResidual>> = vec![None; REFERENCE_TABLE.len()];
    for perm in &perms {
        for sign in [1.0, -1.0] {
            let residuals: Vec<ComponentResidual> = REFERENCE_TABLE
                .iter()
                .map(|e| entry_residual(e, perm, sign, &samples))
                .collect();
            for (slot, r) in best_possible.iter_mut().zip(&residuals) {
                if slot
                    .as_ref()
                    .is_none_or(|b| r.max_relative < b.max_relative)
                {
                    *slot = Some(r.clone());
                }
            }
            let worst = residuals.iter().map(|r| r.max_relative).fold(0.0, f64::max);
            if best.as_ref().is_none_or(|b| worst < b.0) {
                best = Some((worst, *perm, sign, residuals));
            }
        }
    }
    let (worst, perm, sign, per_component) = best.expect("24 labellings searched");

    // slots covered by the table under the chosen labelling
    let mut covered = [[false; N_BIVECTORS]; N_BIVECTORS];
    for e in &REFERENCE_TABLE {
        let [a, b, c, d] = e.labels.map(|l| perm[l - 1]);
        if let (Some((p, _)), Some((q, _))) = (bivector_slot(a, b), bivector_slot(c, d)) {
            covered[p][q] = true;
            covered[q][p] = true;
        }
    }
    let mut extra_nonzero = Vec::new();
    for p in 0..N_BIVECTORS {
        for q in p..N_BIVECTORS {
            if covered[p][q] {
                continue;
            }
            let max_abs = samples
                .iter()
                .map(|s| s.tensor.slots[p][q].abs())
                .fold(0.0, f64::max);
            if max_abs > opts.extra_threshold {
                extra_nonzero.push(ExtraComponent {
                    slot: format!("{}{}", bivector_name(p), bivector_name(q)),
                    max_abs,
                });
            }
        }
    }

    Ok(MatchReport {
        index_map: perm.map(|i| COORD_NAMES[i].to_string()),
        sign,
        max_relative_mismatch: worst,
        matched: worst <= opts.tolerance && extra_nonzero.is_empty(),
        per_component,
        extra_nonzero,
        best_possible: best_possible.into_iter().flatten().collect(),
        pipeline_agreement: agreement,
        bianchi_residual: bianchi,
        symmetry_residual: symmetry,
        tolerance: opts.tolerance,
    })
}

/// The 5x5 `(t, z)` grid used for table checks.
pub fn default_grid() -> Vec<(f64, f64)> {
    let ts = [-2.0, -1.0, 0.0, 1.0, 2.0];
    let zs = [-1.0, -0.5, 0.0, 0.5, 1.0];
    ts.iter()
        .flat_map(|&t| zs.iter().map(move |&z| (t, z)))
        .collect()
}
