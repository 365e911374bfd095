//! Compact Sol cross-sections as mapping tori of hyperbolic toral
//! automorphisms, with their deck group generators acting on `(x, y, z)`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LatticeError {
    #[error("determinant is {0}, expected 1")]
    Determinant(i64),
    #[error("|trace| = {0} is not > 2; matrix is not hyperbolic")]
    NotHyperbolic(i64),
}

/// Integer matrix `[[a, b], [c, d]]` with determinant 1 and `|a + d| > 2`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnosovMatrix {
    pub entries: [[i64; 2]; 2],
}

impl AnosovMatrix {
    pub fn new(a: i64, b: i64, c: i64, d: i64) -> Result<Self, LatticeError> {
        let det = a * d - b * c;
        if det != 1 {
            return Err(LatticeError::Determinant(det));
        }
        let tr = a + d;
        if tr.abs() <= 2 {
            return Err(LatticeError::NotHyperbolic(tr.abs()));
        }
        Ok(Self {
            entries: [[a, b], [c, d]],
        })
    }

    pub fn trace(&self) -> i64 {
        self.entries[0][0] + self.entries[1][1]
    }

    /// Expanding and contracting eigenvalues (signed; product 1).
    pub fn eigenvalues(&self) -> (f64, f64) {
        let tr = self.trace() as f64;
        let disc = (tr * tr - 4.0).sqrt();
        let big = 0.5 * (tr.abs() + disc) * tr.signum();
        (big, 1.0 / big)
    }

    fn eigenvector(&self, lambda: f64) -> [f64; 2] {
        let [[a, b], _] = self.entries;
        // b != 0 for every hyperbolic matrix of determinant 1
        [b as f64, lambda - a as f64]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AffineMap3 {
    pub linear: [[f64; 3]; 3],
    pub offset: [f64; 3],
}

impl AffineMap3 {
    pub fn identity() -> Self {
        Self {
            linear: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
            offset: [0.0; 3],
        }
    }

    pub fn translation(offset: [f64; 3]) -> Self {
        Self {
            offset,
            ..Self::identity()
        }
    }

    pub fn apply(&self, p: &[f64; 3]) -> [f64; 3] {
        std::array::from_fn(|i| {
            self.offset[i] + (0..3).map(|j| self.linear[i][j] * p[j]).sum::<f64>()
        })
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &AffineMap3) -> AffineMap3 {
        let linear = std::array::from_fn(|i| {
            std::array::from_fn(|j| (0..3).map(|k| self.linear[i][k] * other.linear[k][j]).sum())
        });
        AffineMap3 {
            linear,
            offset: self.apply(&other.offset),
        }
    }

    pub fn determinant(&self) -> f64 {
        let m = &self.linear;
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    }
}

/// `dz^2 + e^{-2z} dx^2 + e^{2z} dy^2` at a point, as a 3x3 matrix in `(x, y, z)`.
pub fn sol_metric(p: &[f64; 3]) -> [[f64; 3]; 3] {
    let z = p[2];
    [
        [(-2.0 * z).exp(), 0.0, 0.0],
        [0.0, (2.0 * z).exp(), 0.0],
        [0.0, 0.0, 1.0],
    ]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolLattice {
    pub matrix: AnosovMatrix,
    /// `log |lambda|` of the expanding eigenvalue.
    pub stretch: f64,
    /// Images of the standard basis of `Z^2` in eigen-coordinates `(x, y)`;
    /// the parallelogram they span has unit area.
    pub basis: [[f64; 2]; 2],
    /// Two lattice translations followed by the monodromy.
    pub generators: Vec<AffineMap3>,
}

pub fn build_sol_lattice(a: AnosovMatrix) -> SolLattice {
    let (lu, ls) = a.eigenvalues();
    let vu = a.eigenvector(lu);
    let vs = a.eigenvector(ls);
    // columns of P are the eigenvectors; scale so |det P| = 1
    let det = vu[0] * vs[1] - vs[0] * vu[1];
    let s = det.abs().sqrt().recip();
    let (vu, vs) = (vu.map(|x| x * s), vs.map(|x| x * s));
    let det = vu[0] * vs[1] - vs[0] * vu[1];
    // rows of P^{-1}
    let inv = [[vs[1] / det, -vs[0] / det], [-vu[1] / det, vu[0] / det]];
    let basis = [[inv[0][0], inv[1][0]], [inv[0][1], inv[1][1]]];
    let stretch = lu.abs().ln();

    let mut generators: Vec<AffineMap3> = basis
        .iter()
        .map(|b| AffineMap3::translation([b[0], b[1], 0.0]))
        .collect();
    generators.push(AffineMap3 {
        linear: [[lu, 0.0, 0.0], [0.0, ls, 0.0], [0.0, 0.0, 1.0]],
        offset: [0.0, 0.0, stretch],
    });
    SolLattice {
        matrix: a,
        stretch,
        basis,
        generators,
    }
}

/// Largest operator-norm gap between the pulled-back and the original Sol
/// metric over `samples`.
pub fn verify_isometry(m: &AffineMap3, samples: &[[f64; 3]]) -> f64 {
    let l = &m.linear;
    samples
        .iter()
        .map(|p| {
            let g_img = sol_metric(&m.apply(p));
            let g_src = sol_metric(p);
            let mut diff = nalgebra::Matrix3::<f64>::zeros();
            for i in 0..3 {
                for j in 0..3 {
                    let mut pulled = 0.0;
                    for a in 0..3 {
                        for b in 0..3 {
                            pulled += l[a][i] * g_img[a][b] * l[b][j];
                        }
                    }
                    diff[(i, j)] = pulled - g_src[i][j];
                }
            }
            nalgebra::SymmetricEigen::new(diff)
                .eigenvalues
                .iter()
                .fold(0.0f64, |acc, e| acc.max(e.abs()))
        })
        .fold(0.0, f64::max)
}

/// The 27 points of `{-1, 0, 1}^3`.
pub fn default_samples() -> Vec<[f64; 3]> {
    let v = [-1.0, 0.0, 1.0];
    let mut out = Vec::with_capacity(27);
    for &x in &v {
        for &y in &v {
            for &z in &v {
                out.push([x, y, z]);
            }
        }
    }
    out
}

/// Volume of the cross-section in the Sol metric, whose density is 1.
pub fn cross_section_volume(lat: &SolLattice) -> f64 {
    let [b1, b2] = lat.basis;
    lat.stretch * (b1[0] * b2[1] - b1[1] * b2[0]).abs()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LatticeReport {
    pub stretch: f64,
    pub basis: [[f64; 2]; 2],
    pub generators: Vec<AffineMap3>,
    pub volume: f64,
    pub max_isometry_deviation: f64,
}

impl LatticeReport {
    pub fn new(lat: &SolLattice) -> Self {
        let samples = default_samples();
        let max_isometry_deviation = lat
            .generators
            .iter()
            .map(|g| verify_isometry(g, &samples))
            .fold(0.0, f64::max);
        Self {
            stretch: lat.stretch,
            basis: lat.basis,
            generators: lat.generators.clone(),
            volume: cross_section_volume(lat),
            max_isometry_deviation,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn cat_map() -> SolLattice {
        build_sol_lattice(AnosovMatrix::new(2, 1, 1, 1).unwrap())
    }

    #[test]
    fn stretch_of_cat_map() {
        // larger root of l^2 - 3 l + 1
        let want = ((3.0 + 5f64.sqrt()) / 2.0).ln();
        assert!((cat_map().stretch - want).abs() < 1e-15);
        assert!((cat_map().stretch - 0.962424).abs() < 1e-6);
    }

    #[test]
    fn rejects_non_hyperbolic_and_bad_determinant() {
        assert_eq!(
            AnosovMatrix::new(1, 1, 0, 1),
            Err(LatticeError::NotHyperbolic(2))
        );
        assert_eq!(
            AnosovMatrix::new(2, 1, 1, 2),
            Err(LatticeError::Determinant(3))
        );
        assert_eq!(
            AnosovMatrix::new(0, 1, -1, 0),
            Err(LatticeError::NotHyperbolic(0))
        );
    }

    #[test]
    fn monodromy_shape() {
        let lat = cat_map();
        let m = lat.generators[2];
        let l = lat.stretch;
        assert!((m.linear[0][0] - l.exp()).abs() < 1e-14);
        assert!((m.linear[1][1] - (-l).exp()).abs() < 1e-15);
        assert_eq!(m.linear[2][2], 1.0);
        assert_eq!(m.offset, [0.0, 0.0, l]);
    }

    #[test]
    fn unit_area_basis_gives_volume_stretch() {
        let lat = cat_map();
        assert!((cross_section_volume(&lat) - lat.stretch).abs() < 1e-14);
    }

    #[test]
    fn volume_of_explicit_bases() {
        let mut lat = cat_map();
        lat.basis = [[1.0, 0.0], [0.0, 1.0]];
        lat.stretch = 1.0;
        assert_eq!(cross_section_volume(&lat), 1.0);
        lat.basis = [[2.0, 0.0], [0.0, 1.0]];
        lat.stretch = 0.5;
        assert_eq!(cross_section_volume(&lat), 1.0);
    }

    #[test]
    fn monodromy_conjugates_lattice_to_itself() {
        // A n in eigen-coordinates equals the monodromy applied to n
        let lat = cat_map();
        let m = lat.generators[2];
        let [[a, b], [c, d]] = lat.matrix.entries;
        let images = [[a, c], [b, d]];
        for (k, col) in images.iter().enumerate() {
            let img = m.apply(&[lat.basis[k][0], lat.basis[k][1], 0.0]);
            let want: [f64; 2] = std::array::from_fn(|i| {
                col[0] as f64 * lat.basis[0][i] + col[1] as f64 * lat.basis[1][i]
            });
            assert!((img[0] - want[0]).abs() < 1e-12 && (img[1] - want[1]).abs() < 1e-12);
        }
    }

    #[test]
    fn generators_are_isometries() {
        let lat = cat_map();
        let samples = default_samples();
        for g in &lat.generators {
            assert!(verify_isometry(g, &samples) <= 1e-12);
            assert!(g.determinant().abs() > 0.0);
        }
        for g in &lat.generators {
            for h in &lat.generators {
                assert!(verify_isometry(&g.compose(h), &samples) <= 1e-12);
            }
        }
    }

    #[test]
    fn bare_z_shift_is_not_an_isometry() {
        let m = AffineMap3::translation([0.0, 0.0, 0.1]);
        let d = verify_isometry(&m, &[[0.0, 0.0, 0.0]]);
        assert!(d > 0.1);
        assert!((d - (0.2f64.exp() - 1.0)).abs() < 1e-14);
        assert_eq!(
            verify_isometry(&AffineMap3::identity(), &default_samples()),
            0.0
        );
    }

    #[test]
    fn negative_trace_uses_signed_eigenvalue() {
        let lat = build_sol_lattice(AnosovMatrix::new(-2, -1, -1, -1).unwrap());
        assert!((lat.stretch - cat_map().stretch).abs() < 1e-14);
        assert!(lat.generators[2].linear[0][0] < 0.0);
        assert!(verify_isometry(&lat.generators[2], &default_samples()) <= 1e-12);
    }

    fn unimodular() -> impl Strategy<Value = [[i64; 2]; 2]> {
        // products of elementary shears generate SL(2, Z)
        prop::collection::vec((any::<bool>(), -3i64..=3), 1..5).prop_map(|ops| {
            let mut m = [[1i64, 0], [0, 1]];
            for (upper, k) in ops {
                let e = if upper {
                    [[1, k], [0, 1]]
                } else {
                    [[1, 0], [k, 1]]
                };
                m = [
                    [
                        m[0][0] * e[0][0] + m[0][1] * e[1][0],
                        m[0][0] * e[0][1] + m[0][1] * e[1][1],
                    ],
                    [
                        m[1][0] * e[0][0] + m[1][1] * e[1][0],
                        m[1][0] * e[0][1] + m[1][1] * e[1][1],
                    ],
                ];
            }
            m
        })
    }

    proptest! {
        #[test]
        fn stretch_is_a_conjugacy_invariant(p in unimodular()) {
            let a = [[2i64, 1], [1, 1]];
            let pinv = [[p[1][1], -p[0][1]], [-p[1][0], p[0][0]]];
            let mul = |x: [[i64; 2]; 2], y: [[i64; 2]; 2]| -> [[i64; 2]; 2] {
                std::array::from_fn(|i| std::array::from_fn(|j| x[i][0] * y[0][j] + x[i][1] * y[1][j]))
            };
            let c = mul(mul(p, a), pinv);
            let m = AnosovMatrix::new(c[0][0], c[0][1], c[1][0], c[1][1]).unwrap();
            let lat = build_sol_lattice(m);
            prop_assert!((lat.stretch - cat_map().stretch).abs() < 1e-12);
            prop_assert!((cross_section_volume(&lat) - lat.stretch).abs() < 1e-9);
            let samples = default_samples();
            for g in &lat.generators {
                prop_assert!(verify_isometry(g, &samples) <= 1e-12);
            }
        }
    }
}
