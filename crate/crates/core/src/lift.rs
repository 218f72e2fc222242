//! Per-cube cubic lift of a P2 solution.
//!
//! Each cube gets a macro-tetrahedron, 3/2 times the size of a Kuhn
//! tetrahedron, whose 20 standard P3 Lagrange nodes all lie on the P2 node
//! lattice. The cubic interpolating the P2 nodal values at those nodes is
//! the lift on that cube; outside the macro-tetrahedron it is extrapolated.
//!
//! Nodes are described in a local frame `t` (units of `h`) with
//! `t_d = s_d (x_d − o_d) / h`, where `o` is the anchor corner and `s_d = ±1`
//! points into the domain. Interpolation is a fixed 20 × 20 inverse in that
//! frame, shared by every cube.

use std::sync::OnceLock;

use num_traits::ToPrimitive;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exactmath::{int, monomials_up_to, rat, solve_rational, Exponent, Poly, Rational};
use crate::mesh::Mesh;

pub const LIFT_NODES: usize = 20;

/// Which 20-node P3 element is placed at each cube.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LiftStencil {
    /// Scaled copy of the Kuhn tetrahedron `t_0 ≥ t_1 ≥ t_2` with vertices
    /// `0, (3/2)e_0, (3/2)(e_0+e_1), (3/2)(1,1,1)`.
    #[default]
    Kuhn,
    /// Corner simplex `t ≥ 0, t_0 + t_1 + t_2 ≤ 3/2`.
    Corner,
}

impl LiftStencil {
    pub fn name(self) -> &'static str {
        match self {
            LiftStencil::Kuhn => "kuhn",
            LiftStencil::Corner => "corner",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        [LiftStencil::Kuhn, LiftStencil::Corner].into_iter().find(|k| k.name() == s)
    }

    /// Node offsets in half-units of `h` (each coordinate in `0..=3`).
    pub fn offsets(self) -> [[u8; 3]; LIFT_NODES] {
        let mut out = [[0u8; 3]; LIFT_NODES];
        let mut i = 0;
        // barycentric multi-indices (k0, k1, k2, k3), k0 = 3 − k1 − k2 − k3
        for k1 in 0..=3u8 {
            for k2 in 0..=3 - k1 {
                for k3 in 0..=3 - k1 - k2 {
                    out[i] = match self {
                        LiftStencil::Kuhn => [k1 + k2 + k3, k2 + k3, k3],
                        LiftStencil::Corner => [k1, k2, k3],
                    };
                    i += 1;
                }
            }
        }
        out
    }

    /// Coefficient map from nodal values to `t`-monomial coefficients.
    pub fn plan(self) -> &'static LiftPlan {
        static KUHN: OnceLock<LiftPlan> = OnceLock::new();
        static CORNER: OnceLock<LiftPlan> = OnceLock::new();
        let cell = match self {
            LiftStencil::Kuhn => &KUHN,
            LiftStencil::Corner => &CORNER,
        };
        cell.get_or_init(|| LiftPlan::new(self))
    }
}

/// Precomputed inverse Vandermonde matrix of a stencil.
#[derive(Clone, Debug)]
pub struct LiftPlan {
    pub stencil: LiftStencil,
    pub monomials: Vec<Exponent>,
    /// `coeffs = inverse · values`.
    pub inverse: [[f64; LIFT_NODES]; LIFT_NODES],
    pub inverse_exact: Vec<Vec<Rational>>,
}

impl LiftPlan {
    fn new(stencil: LiftStencil) -> Self {
        let monomials = monomials_up_to(3);
        let pts: Vec<[Rational; 3]> = stencil
            .offsets()
            .iter()
            .map(|o| o.map(|k| rat(k as i64, 2)))
            .collect();
        let vander: Vec<Vec<Rational>> = pts
            .iter()
            .map(|p| monomials.iter().map(|e| monomial_at(e, p)).collect())
            .collect();
        let identity: Vec<Vec<Rational>> = (0..LIFT_NODES)
            .map(|i| (0..LIFT_NODES).map(|j| int((i == j) as i64)).collect())
            .collect();
        let inverse_exact =
            solve_rational(vander, identity).expect("P3 Lagrange nodes of a tetrahedron are unisolvent");
        let mut inverse = [[0.0; LIFT_NODES]; LIFT_NODES];
        for (i, row) in inverse_exact.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                inverse[i][j] = v.to_f64().expect("finite rational");
            }
        }
        Self { stencil, monomials, inverse, inverse_exact }
    }
}

fn monomial_at(e: &Exponent, p: &[Rational; 3]) -> Rational {
    let mut v = int(1);
    for d in 0..3 {
        for _ in 0..e[d] {
            v *= &p[d];
        }
    }
    v
}

/// Placement of a stencil at one cube.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MacroNodes {
    pub cube: usize,
    /// Anchor corner as a P2 lattice index (units of `h/2`).
    pub anchor: [usize; 3],
    pub signs: [i8; 3],
    pub nodes: [usize; LIFT_NODES],
}

/// Places `stencil` at `cube`: per axis the macro-tetrahedron points in the
/// `+` direction when the cube has at least one neighbour that way, else `−`.
pub fn macro_nodes(mesh: &Mesh, cube: usize, stencil: LiftStencil) -> Result<MacroNodes> {
    let n = mesh.n();
    if n < 2 {
        return Err(Error::LiftUnavailable(n));
    }
    if cube >= mesh.num_cubes() {
        return Err(Error::CubeOutOfRange { index: cube, count: mesh.num_cubes() });
    }
    let c = mesh.cube_lattice(cube);
    let mut anchor = [0usize; 3];
    let mut signs = [1i8; 3];
    for d in 0..3 {
        if c[d] + 2 <= n {
            anchor[d] = 2 * c[d];
        } else {
            anchor[d] = 2 * c[d] + 2;
            signs[d] = -1;
        }
    }
    let offsets = stencil.offsets();
    let mut nodes = [0usize; LIFT_NODES];
    for (slot, o) in nodes.iter_mut().zip(&offsets) {
        let lattice: [usize; 3] = std::array::from_fn(|d| {
            let off = o[d] as isize * signs[d] as isize;
            (anchor[d] as isize + off) as usize
        });
        *slot = mesh
            .node_index(lattice)
            .expect("macro-tetrahedron nodes stay inside the domain");
    }
    Ok(MacroNodes { cube, anchor, signs, nodes })
}

/// A cubic on one cube, stored in the local `t` frame.
#[derive(Clone, Debug, PartialEq)]
pub struct CubicLift {
    pub stencil: LiftStencil,
    pub cube: usize,
    pub h: f64,
    /// Physical position of the anchor corner.
    pub origin: [f64; 3],
    pub signs: [i8; 3],
    /// Coefficients of the `t`-monomials in [`monomials_up_to`]`(3)` order.
    pub coeffs: [f64; LIFT_NODES],
}

impl CubicLift {
    pub fn local(&self, x: [f64; 3]) -> [f64; 3] {
        std::array::from_fn(|d| self.signs[d] as f64 * (x[d] - self.origin[d]) / self.h)
    }

    pub fn eval(&self, x: [f64; 3]) -> f64 {
        let t = self.local(x);
        let pw = powers(t);
        self.stencil
            .plan()
            .monomials
            .iter()
            .zip(&self.coeffs)
            .map(|(e, c)| c * pw[0][e[0] as usize] * pw[1][e[1] as usize] * pw[2][e[2] as usize])
            .sum()
    }

    pub fn gradient(&self, x: [f64; 3]) -> [f64; 3] {
        let t = self.local(x);
        let pw = powers(t);
        let mut g = [0.0; 3];
        for (e, c) in self.stencil.plan().monomials.iter().zip(&self.coeffs) {
            for d in 0..3 {
                if e[d] == 0 {
                    continue;
                }
                let mut term = c * e[d] as f64;
                for k in 0..3 {
                    let p = if k == d { e[k] - 1 } else { e[k] };
                    term *= pw[k][p as usize];
                }
                g[d] += term;
            }
        }
        std::array::from_fn(|d| g[d] * self.signs[d] as f64 / self.h)
    }

    /// The lift as a polynomial in the global coordinates.
    pub fn to_global_poly(&self) -> Poly<f64> {
        let local = Poly::from_terms(
            self.stencil.plan().monomials.iter().copied().zip(self.coeffs.iter().copied()),
        );
        let mut b = [[0.0; 3]; 3];
        let mut shift = [0.0; 3];
        for d in 0..3 {
            let s = self.signs[d] as f64;
            b[d][d] = s / self.h;
            shift[d] = -s * self.origin[d] / self.h;
        }
        local.affine_substitute(&b, &shift)
    }
}

fn powers(t: [f64; 3]) -> [[f64; 4]; 3] {
    t.map(|v| [1.0, v, v * v, v * v * v])
}

/// Lifts the nodal vector `values` (one entry per mesh node) on one cube.
pub fn lift_cube(mesh: &Mesh, values: &[f64], cube: usize, stencil: LiftStencil) -> Result<CubicLift> {
    if values.len() != mesh.num_nodes() {
        return Err(Error::DimensionMismatch { expected: mesh.num_nodes(), got: values.len() });
    }
    let m = macro_nodes(mesh, cube, stencil)?;
    let plan = stencil.plan();
    let v: [f64; LIFT_NODES] = m.nodes.map(|n| values[n]);
    let coeffs = std::array::from_fn(|i| (0..LIFT_NODES).map(|j| plan.inverse[i][j] * v[j]).sum());
    let h = mesh.h();
    Ok(CubicLift {
        stencil,
        cube,
        h,
        origin: m.anchor.map(|a| a as f64 * 0.5 * h),
        signs: m.signs,
        coeffs,
    })
}

/// Lifts on every cube, in cube order.
pub fn lift_all(mesh: &Mesh, values: &[f64], stencil: LiftStencil) -> Result<Vec<CubicLift>> {
    (0..mesh.num_cubes())
        .into_par_iter()
        .map(|c| lift_cube(mesh, values, c, stencil))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    const STENCILS: [LiftStencil; 2] = [LiftStencil::Kuhn, LiftStencil::Corner];

    fn sample(mesh: &Mesh, f: impl Fn([f64; 3]) -> f64) -> Vec<f64> {
        (0..mesh.num_nodes()).map(|i| f(mesh.node_coords(i))).collect()
    }

    fn cubic(x: [f64; 3]) -> f64 {
        let [x, y, z] = x;
        0.3 + x - 2.0 * y * z + 1.5 * x * x * y - 0.7 * z * z * z + x * y * z - 0.25 * y * y
    }

    #[test]
    fn n1_has_no_lift() {
        let mesh = Mesh::uniform(1).unwrap();
        assert!(matches!(macro_nodes(&mesh, 0, LiftStencil::Kuhn), Err(Error::LiftUnavailable(1))));
    }

    #[test]
    fn offsets_are_distinct_and_on_the_half_lattice() {
        for s in STENCILS {
            let mut o = s.offsets().to_vec();
            o.sort();
            o.dedup();
            assert_eq!(o.len(), LIFT_NODES);
            assert!(o.iter().all(|p| p.iter().all(|&k| k <= 3)));
        }
    }

    #[test]
    fn orientation_flips_at_the_far_boundary() {
        let mesh = Mesh::uniform(2).unwrap();
        let first = macro_nodes(&mesh, mesh.cube_index([0, 0, 0]).unwrap(), LiftStencil::Kuhn).unwrap();
        assert_eq!(first.signs, [1, 1, 1]);
        assert_eq!(first.anchor, [0, 0, 0]);
        let last = macro_nodes(&mesh, mesh.cube_index([1, 1, 1]).unwrap(), LiftStencil::Kuhn).unwrap();
        assert_eq!(last.signs, [-1, -1, -1]);
        assert_eq!(last.anchor, [4, 4, 4]);
        for m in [first, last] {
            for &n in &m.nodes {
                let p = mesh.node_coords(n);
                assert!(p.iter().all(|&c| (0.0..=1.0).contains(&c)));
            }
        }
    }

    #[test]
    fn inverse_is_exact() {
        for s in STENCILS {
            let plan = s.plan();
            for (i, o) in s.offsets().iter().enumerate() {
                let p = o.map(|k| rat(k as i64, 2));
                for r in 0..LIFT_NODES {
                    // the r-th Lagrange cubic evaluated at node i
                    let v: Rational = plan
                        .monomials
                        .iter()
                        .enumerate()
                        .map(|(j, e)| plan.inverse_exact[j][r].clone() * monomial_at(e, &p))
                        .fold(int(0), |a, b| a + b);
                    assert_eq!(v, int((r == i) as i64));
                }
            }
        }
    }

    #[test]
    fn constants_lift_to_constants() {
        let mesh = Mesh::uniform(3).unwrap();
        let values = vec![2.5; mesh.num_nodes()];
        for s in STENCILS {
            for l in lift_all(&mesh, &values, s).unwrap() {
                let g = l.to_global_poly();
                assert!((g.coeff([0, 0, 0]) - 2.5).abs() < 1e-12);
                for (e, c) in g.terms() {
                    if *e != [0, 0, 0] {
                        assert!(c.abs() < 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn cubics_are_reproduced() {
        let mesh = Mesh::uniform(4).unwrap();
        let values = sample(&mesh, cubic);
        for s in STENCILS {
            for l in lift_all(&mesh, &values, s).unwrap() {
                let g = l.to_global_poly();
                let expect = [
                    ([0, 0, 0], 0.3),
                    ([1, 0, 0], 1.0),
                    ([0, 1, 1], -2.0),
                    ([2, 1, 0], 1.5),
                    ([0, 0, 3], -0.7),
                    ([1, 1, 1], 1.0),
                    ([0, 2, 0], -0.25),
                ];
                for e in monomials_up_to(3) {
                    let want = expect.iter().find(|(k, _)| *k == e).map_or(0.0, |p| p.1);
                    assert!((g.coeff(e) - want).abs() < 1e-9, "{e:?}: {} vs {want}", g.coeff(e));
                }
                let c = mesh.cube_lattice(l.cube);
                let x = [(c[0] as f64 + 0.3) * mesh.h(), (c[1] as f64 + 0.6) * mesh.h(), (c[2] as f64 + 0.9) * mesh.h()];
                assert!((l.eval(x) - cubic(x)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn lift_interpolates_its_nodes() {
        let mesh = Mesh::uniform(4).unwrap();
        let values = sample(&mesh, |p| (3.0 * p[0]).sin() * (p[1] + 2.0 * p[2]).exp());
        for s in STENCILS {
            for cube in 0..mesh.num_cubes() {
                let l = lift_cube(&mesh, &values, cube, s).unwrap();
                for &n in &macro_nodes(&mesh, cube, s).unwrap().nodes {
                    assert!((l.eval(mesh.node_coords(n)) - values[n]).abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mesh = Mesh::uniform(2).unwrap();
        let values = sample(&mesh, |p| (p[0] * p[1]).cos() + p[2] * p[2] * p[0]);
        let l = lift_cube(&mesh, &values, 5, LiftStencil::Kuhn).unwrap();
        let x = [0.61, 0.27, 0.83];
        let g = l.gradient(x);
        for d in 0..3 {
            let step = 1e-6;
            let mut a = x;
            let mut b = x;
            a[d] += step;
            b[d] -= step;
            let fd = (l.eval(a) - l.eval(b)) / (2.0 * step);
            assert!((fd - g[d]).abs() < 1e-6, "{fd} vs {}", g[d]);
        }
    }
}
