//! Tangent 2-planes in a g-orthonormal frame and the curvature operator
//! whose restriction to decomposable unit bivectors is sectional curvature.

use nalgebra::{Matrix6, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::metric::{Mat4, DIM};
use crate::riemann::{wedge, RiemannTensor, BIVECTORS, N_BIVECTORS};

pub type Vec4 = [f64; DIM];

/// `R(E_a, E_b, E_c, E_d)` arranged over frame bivectors.
#[derive(Clone, Debug, PartialEq)]
pub struct CurvatureOperator {
    pub q: [[f64; N_BIVECTORS]; N_BIVECTORS],
    /// Column `a` holds the coordinate components of `E_a`.
    pub frame: Mat4,
}

impl CurvatureOperator {
    pub fn new(r: &RiemannTensor, frame: &Mat4) -> Self {
        // m[P][A] = (E_a ^ E_b) in coordinate bivector P
        let mut m = [[0.0; N_BIVECTORS]; N_BIVECTORS];
        for (p, &(i, j)) in BIVECTORS.iter().enumerate() {
            for (a_idx, &(a, b)) in BIVECTORS.iter().enumerate() {
                m[p][a_idx] = frame[i][a] * frame[j][b] - frame[j][a] * frame[i][b];
            }
        }
        let mut q = [[0.0; N_BIVECTORS]; N_BIVECTORS];
        for a in 0..N_BIVECTORS {
            for b in 0..N_BIVECTORS {
                let mut s = 0.0;
                for p in 0..N_BIVECTORS {
                    for pp in 0..N_BIVECTORS {
                        s += m[p][a] * r.slots[p][pp] * m[pp][b];
                    }
                }
                q[a][b] = s;
            }
        }
        // exact symmetry for the eigen-solver
        for a in 0..N_BIVECTORS {
            for b in 0..a {
                let s = 0.5 * (q[a][b] + q[b][a]);
                q[a][b] = s;
                q[b][a] = s;
            }
        }
        Self { q, frame: *frame }
    }

    /// Sectional curvature of `span(u, v)` for a frame-orthonormal pair.
    #[inline]
    pub fn curvature(&self, u: &Vec4, v: &Vec4) -> f64 {
        let w = wedge(u, v);
        let mut s = 0.0;
        for a in 0..N_BIVECTORS {
            let mut row = 0.0;
            for b in 0..N_BIVECTORS {
                row += self.q[a][b] * w[b];
            }
            s += w[a] * row;
        }
        s
    }

    /// Curvatures of the six frame planes `(E_a, E_b)` in bivector order.
    pub fn frame_planes(&self) -> [f64; N_BIVECTORS] {
        std::array::from_fn(|a| self.q[a][a])
    }

    /// Smallest and largest eigenvalue. Every sectional curvature lies
    /// between them.
    pub fn spectral_bounds(&self) -> (f64, f64) {
        let m = Matrix6::from_fn(|i, j| self.q[i][j]);
        let eig = SymmetricEigen::new(m).eigenvalues;
        (eig.min(), eig.max())
    }

    pub fn to_coordinates(&self, v: &Vec4) -> Vec4 {
        std::array::from_fn(|i| (0..DIM).map(|a| self.frame[i][a] * v[a]).sum())
    }
}

pub fn dot(a: &Vec4, b: &Vec4) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Gram-Schmidt on a pair; `None` when the pair is (nearly) dependent.
pub fn orthonormalize(u: &Vec4, v: &Vec4) -> Option<(Vec4, Vec4)> {
    let nu = dot(u, u).sqrt();
    if !(nu > 1e-12) {
        return None;
    }
    let u = u.map(|x| x / nu);
    let p = dot(&u, v);
    let w: Vec4 = std::array::from_fn(|i| v[i] - p * u[i]);
    let nw = dot(&w, &w).sqrt();
    if !(nw > 1e-6 * dot(v, v).sqrt()) || !(nw > 1e-12) {
        return None;
    }
    Some((u, w.map(|x| x / nw)))
}

/// Orthonormal basis `[u, v, p, q]` whose first two vectors are the inputs.
fn complete_basis(u: &Vec4, v: &Vec4) -> [Vec4; DIM] {
    let mut rest: Vec<(f64, Vec4)> = (0..DIM)
        .map(|k| {
            let mut e = [0.0; DIM];
            e[k] = 1.0;
            let (pu, pv) = (dot(&e, u), dot(&e, v));
            let r: Vec4 = std::array::from_fn(|i| e[i] - pu * u[i] - pv * v[i]);
            (dot(&r, &r), r)
        })
        .collect();
    rest.sort_by(|a, b| b.0.total_cmp(&a.0));
    let p0 = rest[0].1;
    let np = dot(&p0, &p0).sqrt();
    let p = p0.map(|x| x / np);
    let mut q = [0.0; DIM];
    let mut best = -1.0;
    for (_, r) in &rest[1..] {
        let pr = dot(r, &p);
        let c: Vec4 = std::array::from_fn(|i| r[i] - pr * p[i]);
        let n = dot(&c, &c);
        if n > best {
            best = n;
            q = c;
        }
    }
    let nq = best.sqrt();
    [*u, *v, p, q.map(|x| x / nq)]
}

/// Four rotation angles about a base plane, a chart on the Grassmannian of
/// 2-planes in the frame.
///
/// The plane is spanned by the first two vectors after rotating the base
/// basis by `theta_0` in `(u, p)`, `theta_1` in `(u, q)`, `theta_2` in
/// `(v, p)` and `theta_3` in `(v, q)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlaneChart {
    pub base: [Vec4; DIM],
    pub angles: [f64; 4],
}

impl PlaneChart {
    pub fn centered_at(u: &Vec4, v: &Vec4) -> Option<Self> {
        let (u, v) = orthonormalize(u, v)?;
        Some(Self {
            base: complete_basis(&u, &v),
            angles: [0.0; 4],
        })
    }

    fn rotated(&self, angles: &[f64; 4]) -> [Vec4; DIM] {
        let mut b = self.base;
        for (k, &(i, j)) in [(0, 2), (0, 3), (1, 2), (1, 3)].iter().enumerate() {
            let (s, c) = angles[k].sin_cos();
            let (bi, bj) = (b[i], b[j]);
            b[i] = std::array::from_fn(|n| c * bi[n] + s * bj[n]);
            b[j] = std::array::from_fn(|n| -s * bi[n] + c * bj[n]);
        }
        b
    }

    /// The orthonormal pair spanning the plane at `angles`.
    pub fn plane_at(&self, angles: &[f64; 4]) -> (Vec4, Vec4) {
        let b = self.rotated(angles);
        (b[0], b[1])
    }

    pub fn plane(&self) -> (Vec4, Vec4) {
        self.plane_at(&self.angles)
    }

    /// Same plane, re-expressed with zero angles.
    pub fn recentered(&self) -> Self {
        Self {
            base: self.rotated(&self.angles),
            angles: [0.0; 4],
        }
    }
}

/// A plane reported in both frame and coordinate components.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlaneWitness {
    pub chart: PlaneChart,
    pub frame_u: Vec4,
    pub frame_v: Vec4,
    pub coord_u: Vec4,
    pub coord_v: Vec4,
}

impl PlaneWitness {
    pub fn new(chart: PlaneChart, op: &CurvatureOperator) -> Self {
        let (u, v) = chart.plane();
        Self {
            coord_u: op.to_coordinates(&u),
            coord_v: op.to_coordinates(&v),
            frame_u: u,
            frame_v: v,
            chart,
        }
    }
}
