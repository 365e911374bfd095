//! Levi-Civita connection and lowered Riemann tensor, computed two ways:
//! from exact second derivatives of the metric, and from central finite
//! differences of the Christoffel symbols in `t` and `z`.
//!
//! Convention: `R^a_{bcd} = d_c G^a_{db} - d_d G^a_{cb} + G^a_{ce} G^e_{db}
//! - G^a_{de} G^e_{cb}` and `R_{abcd} = g_{ae} R^e_{bcd}`, so that
//! `K(u, v) = R(u, v, u, v) / (|u|^2 |v|^2 - <u, v>^2)` and the hyperbolic
//! metric has `K = -1`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::metric::{DiagonalMetric, Mat4, MetricPoint, COORD_NAMES, DIM, T, Z};
use crate::warp::WarpFunction;

pub type Tensor3 = [Mat4; DIM];
pub type Tensor4 = [[Mat4; DIM]; DIM];

pub const N_BIVECTORS: usize = 6;
/// Index pairs `(i < j)` in the bivector basis order used throughout.
pub const BIVECTORS: [(usize, usize); N_BIVECTORS] =
    [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CurvatureError {
    #[error("finite-difference step {0} outside [1e-6, 1e-2]")]
    StepOutOfRange(f64),
    #[error("degenerate plane: Gram determinant {0:e} after normalization")]
    DegeneratePlane(f64),
}

/// Bivector slot of `(i, j)` and the sign relating `e_i ^ e_j` to it.
pub fn bivector_slot(i: usize, j: usize) -> Option<(usize, f64)> {
    if i == j {
        return None;
    }
    let (a, b, s) = if i < j { (i, j, 1.0) } else { (j, i, -1.0) };
    let slot = BIVECTORS.iter().position(|&p| p == (a, b))?;
    Some((slot, s))
}

pub fn bivector_name(slot: usize) -> String {
    let (i, j) = BIVECTORS[slot];
    format!("{}{}", COORD_NAMES[i], COORD_NAMES[j])
}

/// Christoffel symbols of the second kind, `gamma[i][j][k] = G^i_{jk}`.
#[derive(Clone, Debug, PartialEq)]
pub struct Christoffel(pub Tensor3);

pub fn christoffel(p: &MetricPoint) -> Christoffel {
    let mut gamma = [[[0.0; DIM]; DIM]; DIM];
    for i in 0..DIM {
        for j in 0..DIM {
            for k in j..DIM {
                let mut s = 0.0;
                for m in 0..DIM {
                    s += p.g_inv[i][m] * (p.dg[j][m][k] + p.dg[k][m][j] - p.dg[m][j][k]);
                }
                gamma[i][j][k] = 0.5 * s;
                gamma[i][k][j] = 0.5 * s;
            }
        }
    }
    Christoffel(gamma)
}

/// `dgamma[m][i][j][k] = d_m G^i_{jk}` from the exact second derivatives.
fn christoffel_derivative_closed(p: &MetricPoint) -> Tensor4 {
    // d_m g^{il} = -g^{ia} d_m g_{ab} g^{bl}
    let mut dg_inv = [[[0.0; DIM]; DIM]; DIM];
    for m in 0..DIM {
        for i in 0..DIM {
            for l in 0..DIM {
                let mut s = 0.0;
                for a in 0..DIM {
                    for b in 0..DIM {
                        s += p.g_inv[i][a] * p.dg[m][a][b] * p.g_inv[b][l];
                    }
                }
                dg_inv[m][i][l] = -s;
            }
        }
    }
    let mut out = [[[[0.0; DIM]; DIM]; DIM]; DIM];
    for m in 0..DIM {
        for i in 0..DIM {
            for j in 0..DIM {
                for k in 0..DIM {
                    let mut s = 0.0;
                    for l in 0..DIM {
                        let first = p.dg[j][l][k] + p.dg[k][l][j] - p.dg[l][j][k];
                        let second = p.d2g[m][j][l][k] + p.d2g[m][k][l][j] - p.d2g[m][l][j][k];
                        s += dg_inv[m][i][l] * first + p.g_inv[i][l] * second;
                    }
                    out[m][i][j][k] = 0.5 * s;
                }
            }
        }
    }
    out
}

/// All 256 lowered components from `g`, `G` and `dG`.
fn lowered_riemann(g: &Mat4, gamma: &Tensor3, dgamma: &Tensor4) -> Tensor4 {
    let mut up = [[[[0.0; DIM]; DIM]; DIM]; DIM];
    for a in 0..DIM {
        for b in 0..DIM {
            for c in 0..DIM {
                for d in 0..DIM {
                    let mut s = dgamma[c][a][d][b] - dgamma[d][a][c][b];
                    for e in 0..DIM {
                        s += gamma[a][c][e] * gamma[e][d][b] - gamma[a][d][e] * gamma[e][c][b];
                    }
                    up[a][b][c][d] = s;
                }
            }
        }
    }
    let mut low = [[[[0.0; DIM]; DIM]; DIM]; DIM];
    for a in 0..DIM {
        for b in 0..DIM {
            for c in 0..DIM {
                for d in 0..DIM {
                    low[a][b][c][d] = (0..DIM).map(|e| g[a][e] * up[e][b][c][d]).sum();
                }
            }
        }
    }
    low
}

/// Lowered Riemann tensor stored on the 21 slots of a symmetric 6x6 matrix
/// over bivectors, together with residuals of the identities the full
/// 256-component array was checked against before compression.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RiemannTensor {
    pub slots: [[f64; N_BIVECTORS]; N_BIVECTORS],
    /// Max violation of `R_ijkl = -R_jikl = -R_ijlk = R_klij` in the full array.
    pub symmetry_residual: f64,
    /// Max of `|R_ijkl + R_iklj + R_iljk|` over all index triples.
    pub bianchi_residual: f64,
}

impl RiemannTensor {
    pub fn from_full(r: &Tensor4) -> Self {
        let mut slots = [[0.0; N_BIVECTORS]; N_BIVECTORS];
        for (p, &(i, j)) in BIVECTORS.iter().enumerate() {
            for (q, &(k, l)) in BIVECTORS.iter().enumerate() {
                slots[p][q] = r[i][j][k][l];
            }
        }
        let mut sym: f64 = 0.0;
        let mut bianchi: f64 = 0.0;
        for i in 0..DIM {
            for j in 0..DIM {
                for k in 0..DIM {
                    for l in 0..DIM {
                        let v = r[i][j][k][l];
                        sym = sym
                            .max((v + r[j][i][k][l]).abs())
                            .max((v + r[i][j][l][k]).abs())
                            .max((v - r[k][l][i][j]).abs());
                        bianchi = bianchi.max((v + r[i][k][l][j] + r[i][l][j][k]).abs());
                    }
                }
            }
        }
        // pair symmetry is stored, not assumed: keep the upper triangle
        for p in 0..N_BIVECTORS {
            for q in 0..p {
                slots[p][q] = slots[q][p];
            }
        }
        Self {
            slots,
            symmetry_residual: sym,
            bianchi_residual: bianchi,
        }
    }

    pub fn get(&self, i: usize, j: usize, k: usize, l: usize) -> f64 {
        match (bivector_slot(i, j), bivector_slot(k, l)) {
            (Some((p, s1)), Some((q, s2))) => s1 * s2 * self.slots[p][q],
            _ => 0.0,
        }
    }

    /// `R(u, v, u, v)`.
    pub fn quadratic(&self, u: &[f64; DIM], v: &[f64; DIM]) -> f64 {
        let w = wedge(u, v);
        let mut s = 0.0;
        for p in 0..N_BIVECTORS {
            for q in 0..N_BIVECTORS {
                s += w[p] * self.slots[p][q] * w[q];
            }
        }
        s
    }

    /// Residual of the single first-Bianchi relation left after storage:
    /// `R_xyzt + R_xzty + R_xtyz`.
    pub fn stored_bianchi(&self) -> f64 {
        (self.slots[0][5] - self.slots[1][4] + self.slots[2][3]).abs()
    }

    pub fn max_abs_diff(&self, other: &RiemannTensor) -> f64 {
        let mut m: f64 = 0.0;
        for p in 0..N_BIVECTORS {
            for q in 0..N_BIVECTORS {
                m = m.max((self.slots[p][q] - other.slots[p][q]).abs());
            }
        }
        m
    }
}

pub fn wedge(u: &[f64; DIM], v: &[f64; DIM]) -> [f64; N_BIVECTORS] {
    BIVECTORS.map(|(i, j)| u[i] * v[j] - u[j] * v[i])
}

pub fn riemann_closed(p: &MetricPoint) -> RiemannTensor {
    let gamma = christoffel(p);
    let dgamma = christoffel_derivative_closed(p);
    RiemannTensor::from_full(&lowered_riemann(&p.g, &gamma.0, &dgamma))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FdOptions {
    pub step: f64,
    /// Combine steps `h` and `h/2` to cancel the `h^2` error term.
    pub richardson: bool,
}

impl Default for FdOptions {
    fn default() -> Self {
        Self {
            step: 1e-4,
            richardson: true,
        }
    }
}

/// Riemann tensor with `dG` from central differences of `G` in `t` and `z`.
pub fn riemann_fd_metric(
    metric: &DiagonalMetric,
    t: f64,
    z: f64,
    opts: FdOptions,
) -> Result<RiemannTensor, CurvatureError> {
    let h = opts.step;
    if !(1e-6..=1e-2).contains(&h) {
        return Err(CurvatureError::StepOutOfRange(h));
    }
    let centre = metric.at(t, z);
    let gamma = christoffel(&centre);

    let central = |h: f64| -> Tensor4 {
        let mut d = [[[[0.0; DIM]; DIM]; DIM]; DIM];
        for (m, (dt, dz)) in [(T, (h, 0.0)), (Z, (0.0, h))] {
            let plus = christoffel(&metric.at(t + dt, z + dz)).0;
            let minus = christoffel(&metric.at(t - dt, z - dz)).0;
            for i in 0..DIM {
                for j in 0..DIM {
                    for k in 0..DIM {
                        d[m][i][j][k] = (plus[i][j][k] - minus[i][j][k]) / (2.0 * h);
                    }
                }
            }
        }
        d
    };

    let mut dgamma = central(h);
    if opts.richardson {
        let half = central(0.5 * h);
        for m in [T, Z] {
            for i in 0..DIM {
                for j in 0..DIM {
                    for k in 0..DIM {
                        dgamma[m][i][j][k] = (4.0 * half[m][i][j][k] - dgamma[m][i][j][k]) / 3.0;
                    }
                }
            }
        }
    }
    Ok(RiemannTensor::from_full(&lowered_riemann(
        &centre.g, &gamma.0, &dgamma,
    )))
}

pub fn riemann_fd(
    w: WarpFunction,
    t: f64,
    z: f64,
    opts: FdOptions,
) -> Result<RiemannTensor, CurvatureError> {
    riemann_fd_metric(&DiagonalMetric::cusp(w), t, z, opts)
}

/// Sectional curvature of `span(u, v)` for coordinate vectors `u`, `v`.
pub fn sectional_curvature(
    r: &RiemannTensor,
    p: &MetricPoint,
    u: &[f64; DIM],
    v: &[f64; DIM],
) -> Result<f64, CurvatureError> {
    let nu = p.inner(u, u).sqrt();
    let nv = p.inner(v, v).sqrt();
    let uh = u.map(|x| x / nu);
    let vh = v.map(|x| x / nv);
    let c = p.inner(&uh, &vh);
    let gram = 1.0 - c * c;
    if !(gram > 1e-12) {
        return Err(CurvatureError::DegeneratePlane(gram));
    }
    Ok(r.quadratic(&uh, &vh) / gram)
}
