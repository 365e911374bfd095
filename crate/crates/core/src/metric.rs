//! Diagonal metrics in coordinates `(x, y, z, t)` whose coefficients depend
//! on `(t, z)` only, evaluated together with their exact first and second
//! partial derivatives.

use serde::{Deserialize, Serialize};

use crate::warp::WarpFunction;

pub const DIM: usize = 4;
pub const X: usize = 0;
pub const Y: usize = 1;
pub const Z: usize = 2;
pub const T: usize = 3;
pub const COORD_NAMES: [&str; DIM] = ["x", "y", "z", "t"];

pub type Mat4 = [[f64; DIM]; DIM];

/// One diagonal metric coefficient as a function of `(t, z)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Coefficient {
    /// `exp(rate_t * t + rate_z * z)`.
    Exp {
        rate_t: f64,
        rate_z: f64,
    },
    /// `f(t)^2`.
    WarpSquared(WarpFunction),
    Const(f64),
}

/// Value, gradient `(d/dt, d/dz)` and Hessian `[[tt, tz], [zt, zz]]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Jet {
    pub value: f64,
    pub grad: [f64; 2],
    pub hess: [[f64; 2]; 2],
}

impl Coefficient {
    pub fn value(&self, t: f64, z: f64) -> f64 {
        match *self {
            Coefficient::Exp { rate_t, rate_z } => (rate_t * t + rate_z * z).exp(),
            Coefficient::WarpSquared(w) => {
                let f = w.eval(t).f;
                f * f
            }
            Coefficient::Const(c) => c,
        }
    }

    pub fn jet(&self, t: f64, z: f64) -> Jet {
        match *self {
            Coefficient::Exp { rate_t, rate_z } => {
                let v = (rate_t * t + rate_z * z).exp();
                Jet {
                    value: v,
                    grad: [rate_t * v, rate_z * v],
                    hess: [
                        [rate_t * rate_t * v, rate_t * rate_z * v],
                        [rate_t * rate_z * v, rate_z * rate_z * v],
                    ],
                }
            }
            Coefficient::WarpSquared(w) => {
                let f = w.eval(t);
                Jet {
                    value: f.f * f.f,
                    grad: [2.0 * f.f * f.df, 0.0],
                    hess: [[2.0 * (f.df * f.df + f.f * f.d2f), 0.0], [0.0, 0.0]],
                }
            }
            Coefficient::Const(c) => Jet {
                value: c,
                grad: [0.0; 2],
                hess: [[0.0; 2]; 2],
            },
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiagonalMetric {
    pub coeffs: [Coefficient; DIM],
}

impl DiagonalMetric {
    /// `dt^2 + f(t)^2 dz^2 + e^{-2t} (e^{-2z} dx^2 + e^{2z} dy^2)`.
    pub fn cusp(w: WarpFunction) -> Self {
        Self {
            coeffs: [
                Coefficient::Exp {
                    rate_t: -2.0,
                    rate_z: -2.0,
                },
                Coefficient::Exp {
                    rate_t: -2.0,
                    rate_z: 2.0,
                },
                Coefficient::WarpSquared(w),
                Coefficient::Const(1.0),
            ],
        }
    }

    pub fn flat() -> Self {
        Self {
            coeffs: [Coefficient::Const(1.0); DIM],
        }
    }

    /// `dt^2 + e^{-2t} (dx^2 + dy^2 + dz^2)`, constant curvature -1.
    pub fn hyperbolic() -> Self {
        let e = Coefficient::Exp {
            rate_t: -2.0,
            rate_z: 0.0,
        };
        Self {
            coeffs: [e, e, e, Coefficient::Const(1.0)],
        }
    }

    /// Riemannian product of the Sol metric with a line:
    /// `dt^2 + dz^2 + e^{-2z} dx^2 + e^{2z} dy^2`.
    pub fn sol_line() -> Self {
        Self {
            coeffs: [
                Coefficient::Exp {
                    rate_t: 0.0,
                    rate_z: -2.0,
                },
                Coefficient::Exp {
                    rate_t: 0.0,
                    rate_z: 2.0,
                },
                Coefficient::Const(1.0),
                Coefficient::Const(1.0),
            ],
        }
    }

    pub fn values(&self, t: f64, z: f64) -> [f64; DIM] {
        self.coeffs.map(|c| c.value(t, z))
    }

    pub fn at(&self, t: f64, z: f64) -> MetricPoint {
        let mut p = MetricPoint {
            t,
            z,
            g: [[0.0; DIM]; DIM],
            g_inv: [[0.0; DIM]; DIM],
            dg: [[[0.0; DIM]; DIM]; DIM],
            d2g: [[[[0.0; DIM]; DIM]; DIM]; DIM],
        };
        // jet slots: 0 = t, 1 = z
        let coord = [T, Z];
        for (i, c) in self.coeffs.iter().enumerate() {
            let j = c.jet(t, z);
            p.g[i][i] = j.value;
            p.g_inv[i][i] = 1.0 / j.value;
            for a in 0..2 {
                p.dg[coord[a]][i][i] = j.grad[a];
                for b in 0..2 {
                    p.d2g[coord[a]][coord[b]][i][i] = j.hess[a][b];
                }
            }
        }
        p
    }
}

/// Metric, inverse, and all partials at a point.
///
/// `dg[k][i][j] = d_k g_ij`, `d2g[k][l][i][j] = d_k d_l g_ij`.
#[derive(Clone, Debug, PartialEq)]
pub struct MetricPoint {
    pub t: f64,
    pub z: f64,
    pub g: Mat4,
    pub g_inv: Mat4,
    pub dg: [Mat4; DIM],
    pub d2g: [[Mat4; DIM]; DIM],
}

impl MetricPoint {
    pub fn inner(&self, u: &[f64; DIM], v: &[f64; DIM]) -> f64 {
        let mut s = 0.0;
        for i in 0..DIM {
            for j in 0..DIM {
                s += self.g[i][j] * u[i] * v[j];
            }
        }
        s
    }

    /// `sqrt(det g)`, the Riemannian volume density in these coordinates.
    pub fn volume_density(&self) -> f64 {
        let m = nalgebra::Matrix4::from_fn(|i, j| self.g[i][j]);
        m.determinant().sqrt()
    }

    /// Coordinate components of the g-orthonormal frame obtained by
    /// Gram-Schmidt on the coordinate basis; column `a` is `E_a`.
    pub fn orthonormal_frame(&self) -> Mat4 {
        let mut frame = [[0.0; DIM]; DIM];
        let mut cols: Vec<[f64; DIM]> = Vec::with_capacity(DIM);
        for a in 0..DIM {
            let mut v = [0.0; DIM];
            v[a] = 1.0;
            for c in &cols {
                let p = self.inner(&v, c);
                for i in 0..DIM {
                    v[i] -= p * c[i];
                }
            }
            let n = self.inner(&v, &v).sqrt();
            for x in v.iter_mut() {
                *x /= n;
            }
            cols.push(v);
        }
        for (a, c) in cols.iter().enumerate() {
            for i in 0..DIM {
                frame[i][a] = c[i];
            }
        }
        frame
    }
}

pub fn metric_at(w: WarpFunction, t: f64, z: f64) -> MetricPoint {
    DiagonalMetric::cusp(w).at(t, z)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn shifted_exp_at_origin() {
        let p = metric_at(WarpFunction::ShiftedExp, 0.0, 0.0);
        let diag: Vec<f64> = (0..DIM).map(|i| p.g[i][i]).collect();
        assert_eq!(diag, vec![1.0, 1.0, 4.0, 1.0]);
    }

    #[test]
    fn pure_exp_zz() {
        let p = metric_at(WarpFunction::PureExp, 1.0, 0.0);
        assert_relative_eq!(p.g[Z][Z], (-2f64).exp(), max_relative = 1e-15);
        assert_relative_eq!(p.g[Z][Z], 0.13534, epsilon = 1e-5);
    }

    #[test]
    fn xy_product_is_independent_of_z() {
        for (t, z) in [(0.3, -0.8), (-2.0, 1.0), (1.5, 0.25)] {
            let p = metric_at(WarpFunction::ShiftedExp, t, z);
            assert_relative_eq!(
                p.g[X][X] * p.g[Y][Y],
                (-4.0 * t).exp(),
                max_relative = 1e-14
            );
        }
    }

    #[test]
    fn inverse_times_metric_is_identity() {
        let w = WarpFunction::interpolated(-4.0, -1.0).unwrap();
        for (t, z) in [(-3.0, -1.0), (-2.2, 0.4), (2.0, 1.0)] {
            let p = metric_at(w, t, z);
            for i in 0..DIM {
                for j in 0..DIM {
                    let s: f64 = (0..DIM).map(|k| p.g_inv[i][k] * p.g[k][j]).sum();
                    let e = if i == j { 1.0 } else { 0.0 };
                    assert!((s - e).abs() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn derivative_slots() {
        let p = metric_at(WarpFunction::ShiftedExp, 0.0, 0.0);
        assert_eq!(p.dg[T][X][X], -2.0);
        assert_eq!(p.dg[Z][X][X], -2.0);
        assert_eq!(p.dg[Z][Y][Y], 2.0);
        assert_eq!(p.dg[T][Z][Z], -4.0);
        assert_eq!(p.d2g[T][Z][Y][Y], -4.0);
        assert_eq!(p.d2g[Z][T][Y][Y], -4.0);
        // 2 (f'^2 + f f'') = 2 (1 + 2)
        assert_eq!(p.d2g[T][T][Z][Z], 6.0);
        assert_eq!(p.dg[X], [[0.0; DIM]; DIM]);
    }

    #[test]
    fn frame_is_orthonormal() {
        let p = metric_at(WarpFunction::ShiftedExp, -1.3, 0.7);
        let e = p.orthonormal_frame();
        for a in 0..DIM {
            for b in 0..DIM {
                let ea = [e[0][a], e[1][a], e[2][a], e[3][a]];
                let eb = [e[0][b], e[1][b], e[2][b], e[3][b]];
                let want = if a == b { 1.0 } else { 0.0 };
                assert!((p.inner(&ea, &eb) - want).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn volume_density_matches_closed_form() {
        let p = metric_at(WarpFunction::ShiftedExp, 0.5, -0.3);
        let f = 1.0 + (-0.5f64).exp();
        assert_relative_eq!(
            p.volume_density(),
            f * (-1.0f64).exp(),
            max_relative = 1e-14
        );
    }
}
