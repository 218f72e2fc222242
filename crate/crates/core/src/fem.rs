//! P2 reference-element kernels and tetrahedral quadrature.
//!
//! Reference tetrahedron: `{x, y, z >= 0, x + y + z <= 1}` with vertices
//! `0, e_x, e_y, e_z`. Local P2 numbering follows
//! [`crate::exactmath::P2_EDGES`]: four vertices, then the midpoints of
//! edges 01, 02, 03, 12, 13, 23.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::exactmath::P2_EDGES;

/// Minimum exactness degree for load vectors.
pub const MIN_LOAD_DEGREE: usize = 6;
/// Minimum exactness degree for error norms.
pub const MIN_ERROR_DEGREE: usize = 8;

pub type Point = [f64; 3];

/// Quadrature on the reference tetrahedron. Points are reference
/// coordinates; weights sum to 1/6.
#[derive(Clone, Debug)]
pub struct QuadratureRule {
    pub points: Vec<Point>,
    pub weights: Vec<f64>,
    pub exactness_degree: usize,
}

impl QuadratureRule {
    /// Collapsed-coordinate (conical product) rule exact for total degree
    /// `degree`: Gauss–Jacobi in the two collapsed directions, Gauss–Legendre
    /// in the last. All weights are positive and all points interior.
    pub fn with_degree(degree: usize) -> Self {
        let m = degree / 2 + 1;
        let (u, wu) = gauss_jacobi_unit(m, 2);
        let (v, wv) = gauss_jacobi_unit(m, 1);
        let (w, ww) = gauss_jacobi_unit(m, 0);
        let mut points = Vec::with_capacity(m * m * m);
        let mut weights = Vec::with_capacity(m * m * m);
        for i in 0..m {
            for j in 0..m {
                for k in 0..m {
                    let x = u[i];
                    let y = (1.0 - u[i]) * v[j];
                    let z = (1.0 - u[i]) * (1.0 - v[j]) * w[k];
                    points.push([x, y, z]);
                    weights.push(wu[i] * wv[j] * ww[k]);
                }
            }
        }
        Self { points, weights, exactness_degree: 2 * m - 1 }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// `∫_ref f`.
    pub fn integrate(&self, f: impl Fn(Point) -> f64) -> f64 {
        self.points.iter().zip(&self.weights).map(|(p, w)| w * f(*p)).sum()
    }
}

/// Gauss–Jacobi nodes/weights on `[0, 1]` for the weight `(1 - u)^alpha`,
/// via Golub–Welsch on the Jacobi matrix.
fn gauss_jacobi_unit(m: usize, alpha: u32) -> (Vec<f64>, Vec<f64>) {
    let a = alpha as f64;
    let b = 0.0;
    let mut jac = DMatrix::<f64>::zeros(m, m);
    for k in 0..m {
        let kf = k as f64;
        let s = 2.0 * kf + a + b;
        jac[(k, k)] = if k == 0 {
            (b - a) / (a + b + 2.0)
        } else {
            (b * b - a * a) / (s * (s + 2.0))
        };
        if k + 1 < m {
            let k1 = kf + 1.0;
            let s1 = 2.0 * k1 + a + b;
            let num = 4.0 * k1 * (k1 + a) * (k1 + b) * (k1 + a + b);
            let den = s1 * s1 * (s1 + 1.0) * (s1 - 1.0);
            let off = (num / den).sqrt();
            jac[(k, k + 1)] = off;
            jac[(k + 1, k)] = off;
        }
    }
    // μ0 = ∫_{-1}^{1} (1 - t)^α dt = 2^{α+1} / (α + 1)
    let mu0 = 2f64.powi(alpha as i32 + 1) / (a + 1.0);
    let eig = SymmetricEigen::new(jac);
    let mut pairs: Vec<(f64, f64)> = (0..m)
        .map(|i| {
            let t = eig.eigenvalues[i];
            let v0 = eig.eigenvectors[(0, i)];
            // map to [0, 1]: u = (1 + t) / 2, (1 - u)^α du = 2^{-α-1} (1 - t)^α dt
            ((1.0 + t) / 2.0, mu0 * v0 * v0 / 2f64.powi(alpha as i32 + 1))
        })
        .collect();
    pairs.sort_by(|p, q| p.0.total_cmp(&q.0));
    pairs.into_iter().unzip()
}

/// Value and reference gradient of P2 basis function `i` at `p`.
pub fn ref_p2_basis(i: usize, p: Point) -> (f64, [f64; 3]) {
    let l = [1.0 - p[0] - p[1] - p[2], p[0], p[1], p[2]];
    let gl = [[-1.0, -1.0, -1.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
    if i < 4 {
        let v = l[i] * (2.0 * l[i] - 1.0);
        let s = 4.0 * l[i] - 1.0;
        (v, gl[i].map(|g| s * g))
    } else {
        let (a, b) = P2_EDGES[i - 4];
        let v = 4.0 * l[a] * l[b];
        (v, std::array::from_fn(|d| 4.0 * (gl[a][d] * l[b] + l[a] * gl[b][d])))
    }
}

pub fn ref_p2_values(p: Point) -> [f64; 10] {
    std::array::from_fn(|i| ref_p2_basis(i, p).0)
}

pub fn ref_p2_gradients(p: Point) -> [[f64; 3]; 10] {
    std::array::from_fn(|i| ref_p2_basis(i, p).1)
}

/// Affine map `x = v0 + J ξ` of a tetrahedron.
#[derive(Clone, Copy, Debug)]
pub struct AffineMap {
    pub origin: Point,
    pub jacobian: [[f64; 3]; 3],
    pub det: f64,
    /// `J^{-T}`: maps reference gradients to physical gradients.
    pub inv_t: [[f64; 3]; 3],
}

impl AffineMap {
    pub fn new(tet: &[Point; 4]) -> Result<Self> {
        let j: [[f64; 3]; 3] =
            std::array::from_fn(|r| std::array::from_fn(|c| tet[c + 1][r] - tet[0][r]));
        let det = j[0][0] * (j[1][1] * j[2][2] - j[1][2] * j[2][1])
            - j[0][1] * (j[1][0] * j[2][2] - j[1][2] * j[2][0])
            + j[0][2] * (j[1][0] * j[2][1] - j[1][1] * j[2][0]);
        let scale = (0..3)
            .map(|c| (0..3).map(|r| j[r][c] * j[r][c]).sum::<f64>().sqrt())
            .product::<f64>();
        if det.abs() <= 1e-14 * scale || !det.is_finite() {
            return Err(Error::DegenerateTetrahedron);
        }
        // inverse via cofactors; (J^{-1})^T = cof(J) / det
        let cof = |r: usize, c: usize| {
            let r1 = (r + 1) % 3;
            let r2 = (r + 2) % 3;
            let c1 = (c + 1) % 3;
            let c2 = (c + 2) % 3;
            j[r1][c1] * j[r2][c2] - j[r1][c2] * j[r2][c1]
        };
        let inv_t = std::array::from_fn(|r| std::array::from_fn(|c| cof(r, c) / det));
        Ok(Self { origin: tet[0], jacobian: j, det, inv_t })
    }

    pub fn apply(&self, xi: Point) -> Point {
        std::array::from_fn(|r| {
            self.origin[r] + (0..3).map(|c| self.jacobian[r][c] * xi[c]).sum::<f64>()
        })
    }

    pub fn grad(&self, g: [f64; 3]) -> [f64; 3] {
        std::array::from_fn(|r| (0..3).map(|c| self.inv_t[r][c] * g[c]).sum())
    }

    pub fn volume(&self) -> f64 {
        self.det.abs() / 6.0
    }
}

/// 10 × 10 element matrix over the local P2 nodes.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LocalMatrix(pub [[f64; 10]; 10]);

impl LocalMatrix {
    pub fn apply(&self, v: &[f64; 10]) -> [f64; 10] {
        std::array::from_fn(|i| (0..10).map(|j| self.0[i][j] * v[j]).sum())
    }

    pub fn max_asymmetry(&self) -> f64 {
        let mut m = 0.0f64;
        for i in 0..10 {
            for j in 0..10 {
                m = m.max((self.0[i][j] - self.0[j][i]).abs());
            }
        }
        m
    }

    pub fn row_sums(&self) -> [f64; 10] {
        self.0.map(|row| row.iter().sum())
    }
}

/// Basis values and reference gradients tabulated at the points of a rule.
#[derive(Clone, Debug)]
pub struct Tabulation {
    pub rule: QuadratureRule,
    pub values: Vec<[f64; 10]>,
    pub gradients: Vec<[[f64; 3]; 10]>,
}

impl Tabulation {
    pub fn new(rule: QuadratureRule) -> Self {
        let values = rule.points.iter().map(|p| ref_p2_values(*p)).collect();
        let gradients = rule.points.iter().map(|p| ref_p2_gradients(*p)).collect();
        Self { rule, values, gradients }
    }
}

/// `∫_tet ∇φ_i · ∇φ_j`; the integrand is constant-coefficient quadratic, so
/// a degree-2 rule is exact.
pub fn local_stiffness(tet: &[Point; 4]) -> Result<LocalMatrix> {
    let map = AffineMap::new(tet)?;
    let rule = QuadratureRule::with_degree(2);
    let mut k = [[0.0; 10]; 10];
    for (p, w) in rule.points.iter().zip(&rule.weights) {
        let g: [[f64; 3]; 10] = ref_p2_gradients(*p).map(|g| map.grad(g));
        let wj = w * map.det.abs();
        for i in 0..10 {
            for j in i..10 {
                let v = wj * (g[i][0] * g[j][0] + g[i][1] * g[j][1] + g[i][2] * g[j][2]);
                k[i][j] += v;
            }
        }
    }
    for i in 0..10 {
        for j in 0..i {
            k[i][j] = k[j][i];
        }
    }
    Ok(LocalMatrix(k))
}

fn check_load_rule(tab: &Tabulation) -> Result<()> {
    if tab.rule.exactness_degree < MIN_LOAD_DEGREE {
        return Err(Error::InsufficientQuadrature {
            required: MIN_LOAD_DEGREE,
            got: tab.rule.exactness_degree,
        });
    }
    Ok(())
}

/// `∫_tet (Σ_j f_j φ_j) φ_i`: the load of the P2 interpolant with nodal
/// values `f` (local node order).
pub fn local_interpolated_load(tet: &[Point; 4], f: &[f64; 10], tab: &Tabulation) -> Result<[f64; 10]> {
    check_load_rule(tab)?;
    let map = AffineMap::new(tet)?;
    let mut out = [0.0; 10];
    for (q, w) in tab.rule.weights.iter().enumerate() {
        let phi = &tab.values[q];
        let fq: f64 = (0..10).map(|j| f[j] * phi[j]).sum();
        let wf = w * map.det.abs() * fq;
        for (o, p) in out.iter_mut().zip(phi) {
            *o += wf * p;
        }
    }
    Ok(out)
}

/// `∫_tet f φ_i` by quadrature.
pub fn local_load(
    tet: &[Point; 4],
    f: impl Fn(Point) -> f64,
    tab: &Tabulation,
) -> Result<[f64; 10]> {
    check_load_rule(tab)?;
    let map = AffineMap::new(tet)?;
    let mut out = [0.0; 10];
    for (q, p) in tab.rule.points.iter().enumerate() {
        let wf = tab.rule.weights[q] * map.det.abs() * f(map.apply(*p));
        for (o, phi) in out.iter_mut().zip(&tab.values[q]) {
            *o += wf * phi;
        }
    }
    Ok(out)
}
