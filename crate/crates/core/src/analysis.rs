//! Manufactured problems, nodal interpolation, error norms and convergence
//! studies.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exactmath::Poly;
use crate::fem::{AffineMap, Point, QuadratureRule, Tabulation, MIN_ERROR_DEGREE, MIN_LOAD_DEGREE};
use crate::lift::{lift_all, CubicLift, LiftStencil};
use crate::mesh::{Mesh, MAX_CUBES_PER_AXIS};
use crate::system::{assemble_model, cg_solve, LoadModel, SolveStats, DEFAULT_CG_TOL};

/// A smooth scalar field on the closed unit cube.
pub trait FieldFunction: Sync {
    fn value(&self, x: Point) -> f64;
    fn gradient(&self, x: Point) -> [f64; 3];
    fn laplacian(&self, x: Point) -> f64;

    /// Right-hand side `f = −Δu`.
    fn source(&self, x: Point) -> f64 {
        -self.laplacian(x)
    }
}

/// A polynomial field with its derivatives precomputed.
#[derive(Clone, Debug)]
pub struct PolyField {
    pub value: Poly<f64>,
    pub gradient: [Poly<f64>; 3],
    pub laplacian: Poly<f64>,
}

impl PolyField {
    pub fn new(value: Poly<f64>) -> Self {
        let gradient = value.gradient();
        let laplacian = (0..3).fold(Poly::zero(), |acc, d| &acc + &gradient[d].partial_derivative(d));
        Self { value, gradient, laplacian }
    }
}

impl FieldFunction for PolyField {
    fn value(&self, x: Point) -> f64 {
        self.value.eval(&x)
    }

    fn gradient(&self, x: Point) -> [f64; 3] {
        std::array::from_fn(|d| self.gradient[d].eval(&x))
    }

    fn laplacian(&self, x: Point) -> f64 {
        self.laplacian.eval(&x)
    }
}

/// One-dimensional factor of a separable field.
#[derive(Clone, Copy, Debug, PartialEq)]
enum Factor {
    /// `v(1 − v)`
    Bubble,
    /// `(v − v²)²`
    BubbleSquared,
    /// `sin(kπv)`
    Sine(f64),
    /// `(v + 1)(2 − v) v(1 − v)`
    ShiftedQuartic,
    /// `(2v − 1) v (v − 1)`
    Cubic,
}

impl Factor {
    /// Value, first and second derivative at `v`.
    fn jet(self, v: f64) -> [f64; 3] {
        let b = v - v * v;
        let db = 1.0 - 2.0 * v;
        match self {
            Factor::Bubble => [b, db, -2.0],
            Factor::BubbleSquared => [b * b, 2.0 * b * db, 2.0 * db * db - 4.0 * b],
            Factor::Sine(k) => {
                let w = k * PI;
                let (s, c) = (w * v).sin_cos();
                [s, w * c, -w * w * s]
            }
            Factor::ShiftedQuartic => {
                let a = (v + 1.0) * (2.0 - v);
                [a * b, db * b + a * db, -2.0 * b + 2.0 * db * db - 2.0 * a]
            }
            Factor::Cubic => {
                let l = 2.0 * v - 1.0;
                [-l * b, l * l - 2.0 * b, 6.0 * l]
            }
        }
    }
}

/// `c · X(x) Y(y) Z(z)`, evaluated in factored form.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SeparableField {
    scale: f64,
    factors: [Factor; 3],
}

impl SeparableField {
    fn jets(&self, x: Point) -> [[f64; 3]; 3] {
        std::array::from_fn(|d| self.factors[d].jet(x[d]))
    }
}

impl FieldFunction for SeparableField {
    fn value(&self, x: Point) -> f64 {
        let j = self.jets(x);
        self.scale * j[0][0] * j[1][0] * j[2][0]
    }

    fn gradient(&self, x: Point) -> [f64; 3] {
        let j = self.jets(x);
        [
            self.scale * j[0][1] * j[1][0] * j[2][0],
            self.scale * j[0][0] * j[1][1] * j[2][0],
            self.scale * j[0][0] * j[1][0] * j[2][1],
        ]
    }

    fn laplacian(&self, x: Point) -> f64 {
        let j = self.jets(x);
        self.scale
            * (j[0][2] * j[1][0] * j[2][0] + j[0][0] * j[1][2] * j[2][0] + j[0][0] * j[1][0] * j[2][2])
    }
}

/// The identically zero field.
#[derive(Clone, Copy, Debug)]
pub struct ZeroField;

impl FieldFunction for ZeroField {
    fn value(&self, _: Point) -> f64 {
        0.0
    }

    fn gradient(&self, _: Point) -> [f64; 3] {
        [0.0; 3]
    }

    fn laplacian(&self, _: Point) -> f64 {
        0.0
    }
}

/// Built-in manufactured solutions (all vanish on the boundary).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Problem {
    /// `2⁶ x(1−x) y(1−y) (z+1)(2−z) z(1−z)`
    Poly1,
    /// `sin(πx) sin(πy) sin(2πz)`
    Trig,
    /// `2¹³ (x−x²)² (y−y²)² (2z−1) z (z−1)`
    Poly2,
}

impl Problem {
    pub const ALL: [Problem; 3] = [Problem::Poly1, Problem::Trig, Problem::Poly2];

    pub fn name(self) -> &'static str {
        match self {
            Problem::Poly1 => "poly1",
            Problem::Trig => "trig",
            Problem::Poly2 => "poly2",
        }
    }

    pub fn field(self) -> Box<dyn FieldFunction> {
        Box::new(self.separable())
    }

    pub fn separable(self) -> SeparableField {
        let (scale, factors) = match self {
            Problem::Poly1 => (64.0, [Factor::Bubble, Factor::Bubble, Factor::ShiftedQuartic]),
            Problem::Trig => (1.0, [Factor::Sine(1.0), Factor::Sine(1.0), Factor::Sine(2.0)]),
            Problem::Poly2 => (8192.0, [Factor::BubbleSquared, Factor::BubbleSquared, Factor::Cubic]),
        };
        SeparableField { scale, factors }
    }

    /// Expanded monomial form of the polynomial problems.
    pub fn polynomial(self) -> Option<Poly<f64>> {
        match self {
            Problem::Poly1 => Some(poly1()),
            Problem::Trig => None,
            Problem::Poly2 => Some(poly2()),
        }
    }
}

impl fmt::Display for Problem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Problem {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Problem::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::UnknownProblem(s.to_string()))
    }
}

pub fn builtin_problem(id: &str) -> Result<Box<dyn FieldFunction>> {
    Ok(id.parse::<Problem>()?.field())
}

fn linear(axis: usize, slope: f64, intercept: f64) -> Poly<f64> {
    &Poly::var(axis).scale(&slope) + &Poly::constant(intercept)
}

/// `v(1 − v)` in the coordinate `axis`.
fn bubble(axis: usize) -> Poly<f64> {
    &Poly::var(axis) * &linear(axis, -1.0, 1.0)
}

fn poly1() -> Poly<f64> {
    let z = &(&linear(2, 1.0, 1.0) * &linear(2, -1.0, 2.0)) * &bubble(2);
    (&(&bubble(0) * &bubble(1)) * &z).scale(&64.0)
}

fn poly2() -> Poly<f64> {
    // (2z − 1) z (z − 1) = −(2z − 1) z (1 − z)
    let z = (&linear(2, 2.0, -1.0) * &bubble(2)).scale(&-1.0);
    (&(&bubble(0).pow(2) * &bubble(1).pow(2)) * &z).scale(&8192.0)
}

/// Values of `u` at every P2 node.
pub fn nodal_interpolate(mesh: &Mesh, u: &dyn FieldFunction) -> Vec<f64> {
    (0..mesh.num_nodes())
        .into_par_iter()
        .map(|i| u.value(mesh.node_coords(i)))
        .collect()
}

/// `‖e‖_0` and `|e|_1`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct Norms {
    pub l2: f64,
    pub h1: f64,
}

fn error_rule(degree: usize) -> Result<QuadratureRule> {
    if degree < MIN_ERROR_DEGREE {
        return Err(Error::InsufficientQuadrature { required: MIN_ERROR_DEGREE, got: degree });
    }
    Ok(QuadratureRule::with_degree(degree))
}

fn finish(parts: Vec<(f64, f64)>) -> Norms {
    // sequential sum keeps the result independent of the thread count
    let (l2, h1) = parts.iter().fold((0.0, 0.0), |a, p| (a.0 + p.0, a.1 + p.1));
    Norms { l2: l2.sqrt(), h1: h1.sqrt() }
}

/// Norms of `u − Σ c_i φ_i` for P2 coefficients `coeffs` over all nodes.
pub fn error_norms(mesh: &Mesh, coeffs: &[f64], u: &dyn FieldFunction, degree: usize) -> Result<Norms> {
    if coeffs.len() != mesh.num_nodes() {
        return Err(Error::DimensionMismatch { expected: mesh.num_nodes(), got: coeffs.len() });
    }
    let tab = Tabulation::new(error_rule(degree)?);
    let maps: Vec<AffineMap> = (0..6).map(|s| AffineMap::new(&mesh.tet_coords(s))).collect::<Result<_>>()?;
    let grads: Vec<Vec<[[f64; 3]; 10]>> = maps
        .iter()
        .map(|m| tab.gradients.iter().map(|g| g.map(|gi| m.grad(gi))).collect())
        .collect();
    let tets = mesh.tets();
    let parts: Vec<(f64, f64)> = (0..tets.len())
        .into_par_iter()
        .map(|t| {
            let slot = tets[t].slot as usize - 1;
            let mut map = maps[slot];
            map.origin = mesh.vertex_coords(tets[t].vertices[0] as usize);
            let c: [f64; 10] = mesh.tet_nodes()[t].map(|n| coeffs[n as usize]);
            let jac = map.det.abs();
            let (mut l2, mut h1) = (0.0, 0.0);
            for (q, p) in tab.rule.points.iter().enumerate() {
                let x = map.apply(*p);
                let vh: f64 = (0..10).map(|i| c[i] * tab.values[q][i]).sum();
                let gu = u.gradient(x);
                let e = u.value(x) - vh;
                let mut ge = 0.0;
                for d in 0..3 {
                    let gh: f64 = (0..10).map(|i| c[i] * grads[slot][q][i][d]).sum();
                    ge += (gu[d] - gh).powi(2);
                }
                let w = tab.rule.weights[q] * jac;
                l2 += w * e * e;
                h1 += w * ge;
            }
            (l2, h1)
        })
        .collect();
    Ok(finish(parts))
}

/// Norms of `u − L` with `L` the piecewise cubic given per cube by `lifts`.
pub fn lift_error_norms(mesh: &Mesh, lifts: &[CubicLift], u: &dyn FieldFunction, degree: usize) -> Result<Norms> {
    if lifts.len() != mesh.num_cubes() {
        return Err(Error::DimensionMismatch { expected: mesh.num_cubes(), got: lifts.len() });
    }
    let rule = error_rule(degree)?;
    let maps: Vec<AffineMap> = (0..6).map(|s| AffineMap::new(&mesh.tet_coords(s))).collect::<Result<_>>()?;
    let tets = mesh.tets();
    let parts: Vec<(f64, f64)> = (0..tets.len())
        .into_par_iter()
        .map(|t| {
            let lift = &lifts[tets[t].cube as usize];
            let mut map = maps[tets[t].slot as usize - 1];
            map.origin = mesh.vertex_coords(tets[t].vertices[0] as usize);
            let jac = map.det.abs();
            let (mut l2, mut h1) = (0.0, 0.0);
            for (p, w) in rule.points.iter().zip(&rule.weights) {
                let x = map.apply(*p);
                let e = u.value(x) - lift.eval(x);
                let gu = u.gradient(x);
                let gl = lift.gradient(x);
                let ge: f64 = (0..3).map(|d| (gu[d] - gl[d]).powi(2)).sum();
                l2 += w * jac * e * e;
                h1 += w * jac * ge;
            }
            (l2, h1)
        })
        .collect();
    Ok(finish(parts))
}

/// `log2(prev / cur)`.
pub fn rate(prev: f64, cur: f64) -> f64 {
    (prev / cur).log2()
}

/// Number of cubes per axis at grid level `level` (level 1 is one cube).
pub fn level_size(level: usize) -> Result<usize> {
    if level == 0 || level > 32 || (1usize << (level - 1)) > MAX_CUBES_PER_AXIS {
        return Err(Error::InvalidLevels(format!("level {level} is out of range")));
    }
    Ok(1 << (level - 1))
}

#[derive(Clone, Debug, PartialEq)]
pub struct StudyOptions {
    pub cg_tol: f64,
    /// `None` lets the solver pick a bound from the system size.
    pub max_iter: Option<usize>,
    pub load_degree: usize,
    pub error_degree: usize,
    pub load: LoadModel,
    pub lift: bool,
    pub stencil: LiftStencil,
}

impl Default for StudyOptions {
    fn default() -> Self {
        Self {
            cg_tol: DEFAULT_CG_TOL,
            max_iter: None,
            load_degree: MIN_LOAD_DEGREE,
            error_degree: MIN_ERROR_DEGREE,
            load: LoadModel::default(),
            lift: true,
            stencil: LiftStencil::default(),
        }
    }
}

impl StudyOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.cg_tol > 0.0 && self.cg_tol.is_finite()) {
            return Err(Error::InvalidTolerance(self.cg_tol));
        }
        if self.load_degree < MIN_LOAD_DEGREE {
            return Err(Error::InsufficientQuadrature { required: MIN_LOAD_DEGREE, got: self.load_degree });
        }
        if self.error_degree < MIN_ERROR_DEGREE {
            return Err(Error::InsufficientQuadrature { required: MIN_ERROR_DEGREE, got: self.error_degree });
        }
        Ok(())
    }
}

/// The six error quantities of one level. Lift entries are `None` when the
/// lift is disabled or unavailable.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct ErrorSet {
    /// `‖I_h u − u_h‖_0`
    pub interp_l2: f64,
    /// `|I_h u − u_h|_1`
    pub interp_h1: f64,
    /// `‖u − u_h‖_0`
    pub fe_l2: f64,
    /// `|u − u_h|_1`
    pub fe_h1: f64,
    /// `‖u − L_3 u_h‖_0`
    pub lift_l2: Option<f64>,
    /// `|u − L_3 u_h|_1`
    pub lift_h1: Option<f64>,
}

impl ErrorSet {
    fn rates_from(&self, prev: &ErrorSet) -> ErrorSet {
        let opt = |p: Option<f64>, c: Option<f64>| Some(rate(p?, c?));
        ErrorSet {
            interp_l2: rate(prev.interp_l2, self.interp_l2),
            interp_h1: rate(prev.interp_h1, self.interp_h1),
            fe_l2: rate(prev.fe_l2, self.fe_l2),
            fe_h1: rate(prev.fe_h1, self.fe_h1),
            lift_l2: opt(prev.lift_l2, self.lift_l2),
            lift_h1: opt(prev.lift_h1, self.lift_h1),
        }
    }

    fn first_rates(&self) -> ErrorSet {
        ErrorSet {
            lift_l2: self.lift_l2.map(|_| 0.0),
            lift_h1: self.lift_h1.map(|_| 0.0),
            ..ErrorSet::default()
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LevelRecord {
    pub level: usize,
    pub n: usize,
    pub h: f64,
    pub dofs: usize,
    pub cg: SolveStats,
    /// `None` when the solve failed; the level is then excluded from rates.
    pub errors: Option<ErrorSet>,
    pub rates: Option<ErrorSet>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub failure: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConvergenceReport {
    pub problem: Problem,
    pub levels: Vec<LevelRecord>,
}

impl ConvergenceReport {
    pub fn succeeded(&self) -> bool {
        self.levels.iter().all(|l| l.failure.is_none())
    }

    pub fn level(&self, level: usize) -> Option<&LevelRecord> {
        self.levels.iter().find(|l| l.level == level)
    }
}

/// Solves one level and measures all error quantities.
pub fn run_level(problem: Problem, level: usize, options: &StudyOptions) -> Result<(LevelRecord, Vec<f64>)> {
    options.validate()?;
    let n = level_size(level)?;
    let u = problem.field();
    let mesh = Mesh::uniform(n)?;
    let tab = Tabulation::new(QuadratureRule::with_degree(options.load_degree));
    let system = assemble_model(&mesh, |x| u.source(x), &tab, options.load)?;
    let max_iter = options.max_iter.unwrap_or(10 * system.dofs() + 100);
    let base = LevelRecord {
        level,
        n,
        h: mesh.h(),
        dofs: system.dofs(),
        cg: SolveStats { iterations: 0, relative_residual: 0.0, wall_time_secs: 0.0 },
        errors: None,
        rates: None,
        failure: None,
    };
    let (x, stats) = match cg_solve(&system.matrix, &system.rhs, options.cg_tol, max_iter) {
        Ok(r) => r,
        Err(Error::NotConverged(nc)) => {
            let record = LevelRecord {
                cg: SolveStats { iterations: nc.iterations, relative_residual: nc.residual, wall_time_secs: 0.0 },
                failure: Some(nc.to_string()),
                ..base
            };
            return Ok((record, system.expand(&nc.best)));
        }
        Err(e) => return Err(e),
    };
    let uh = system.expand(&x);
    let ih = nodal_interpolate(&mesh, u.as_ref());
    let diff: Vec<f64> = ih.iter().zip(&uh).map(|(a, b)| a - b).collect();
    let interp = error_norms(&mesh, &diff, &ZeroField, options.error_degree)?;
    let fe = error_norms(&mesh, &uh, u.as_ref(), options.error_degree)?;
    let lift = if options.lift && n >= 2 {
        let lifts = lift_all(&mesh, &uh, options.stencil)?;
        Some(lift_error_norms(&mesh, &lifts, u.as_ref(), options.error_degree)?)
    } else {
        None
    };
    let errors = ErrorSet {
        interp_l2: interp.l2,
        interp_h1: interp.h1,
        fe_l2: fe.l2,
        fe_h1: fe.h1,
        lift_l2: lift.map(|l| l.l2),
        lift_h1: lift.map(|l| l.h1),
    };
    Ok((LevelRecord { cg: stats, errors: Some(errors), ..base }, uh))
}

/// Runs levels `first..=last` in order and fills in rates between
/// consecutive successful levels.
pub fn convergence_study(problem: Problem, first: usize, last: usize, options: &StudyOptions) -> Result<ConvergenceReport> {
    if first == 0 || first > last {
        return Err(Error::InvalidLevels(format!("{first}:{last}")));
    }
    level_size(last)?;
    options.validate()?;
    let mut levels: Vec<LevelRecord> = Vec::with_capacity(last - first + 1);
    for level in first..=last {
        let (mut record, _) = run_level(problem, level, options)?;
        if let Some(errors) = &record.errors {
            let prev = levels.last().and_then(|p| p.errors.as_ref());
            record.rates = Some(match prev {
                Some(p) => errors.rates_from(p),
                None => errors.first_rates(),
            });
        }
        levels.push(record);
    }
    Ok(ConvergenceReport { problem, levels })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fd_check(u: &dyn FieldFunction, x: Point) {
        let step = 1e-6;
        let g = u.gradient(x);
        let scale = g.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        for d in 0..3 {
            let (mut a, mut b) = (x, x);
            a[d] += step;
            b[d] -= step;
            let fd = (u.value(a) - u.value(b)) / (2.0 * step);
            assert!((fd - g[d]).abs() <= 1e-6 * scale, "d={d}: {fd} vs {}", g[d]);
        }
        let step = 1e-4;
        let mut lap = 0.0;
        for d in 0..3 {
            let (mut a, mut b) = (x, x);
            a[d] += step;
            b[d] -= step;
            lap += (u.value(a) - 2.0 * u.value(x) + u.value(b)) / (step * step);
        }
        let exact = u.laplacian(x);
        assert!((lap - exact).abs() <= 1e-4 * exact.abs().max(1.0), "{lap} vs {exact}");
    }

    #[test]
    fn poly1_at_center() {
        let u = Problem::Poly1.field();
        assert!((u.value([0.5, 0.5, 0.5]) - 2.25).abs() < 1e-14);
    }

    #[test]
    fn trig_source() {
        let u = Problem::Trig.field();
        let x = [0.5, 0.5, 0.25];
        assert!((u.value(x) - 1.0).abs() < 1e-15);
        assert!((u.source(x) - 6.0 * PI * PI).abs() < 1e-12);
    }

    #[test]
    fn problems_vanish_on_the_boundary() {
        for p in Problem::ALL {
            let u = p.field();
            for &(a, b) in &[(0.3, 0.7), (0.91, 0.12), (0.5, 0.5)] {
                for face in 0..3 {
                    for side in [0.0, 1.0] {
                        let mut x = [a, b, a * b];
                        x[face] = side;
                        assert!(u.value(x).abs() < 1e-13, "{p} at {x:?}");
                    }
                }
            }
        }
    }

    #[test]
    fn derivatives_match_finite_differences() {
        for p in Problem::ALL {
            let u = p.field();
            for x in [[0.3, 0.6, 0.2], [0.71, 0.45, 0.88], [0.5, 0.5, 0.5]] {
                fd_check(u.as_ref(), x);
            }
        }
    }

    #[test]
    fn factored_and_expanded_forms_agree() {
        for p in [Problem::Poly1, Problem::Poly2] {
            let a = p.field();
            let b = PolyField::new(p.polynomial().unwrap());
            for x in [[0.3, 0.6, 0.2], [0.71, 0.45, 0.88], [0.05, 0.93, 0.5]] {
                let scale = 1.0 + b.laplacian(x).abs();
                assert!((a.value(x) - b.value(x)).abs() < 1e-11 * scale);
                assert!((a.laplacian(x) - b.laplacian(x)).abs() < 1e-11 * scale);
                for d in 0..3 {
                    assert!((a.gradient(x)[d] - b.gradient(x)[d]).abs() < 1e-11 * scale);
                }
            }
        }
    }

    #[test]
    fn unknown_problem() {
        assert!(matches!("poly3".parse::<Problem>(), Err(Error::UnknownProblem(_))));
    }

    #[test]
    fn interpolant_of_poly1_at_center_node() {
        let mesh = Mesh::uniform(2).unwrap();
        let v = nodal_interpolate(&mesh, Problem::Poly1.field().as_ref());
        let c = mesh.node_index([2, 2, 2]).unwrap();
        assert!((v[c] - 2.25).abs() < 1e-14);
        for (i, &b) in mesh.boundary_mask().iter().enumerate() {
            if b {
                assert_eq!(v[i], 0.0);
            }
        }
    }

    #[test]
    fn quadratic_interpolation_error_vanishes() {
        let q = PolyField::new(Poly::from_terms([([2, 0, 0], 1.0), ([0, 1, 1], -3.0), ([0, 0, 1], 0.5)]));
        let mesh = Mesh::uniform(2).unwrap();
        let coeffs = nodal_interpolate(&mesh, &q);
        let e = error_norms(&mesh, &coeffs, &q, 8).unwrap();
        assert!(e.l2 < 1e-13 && e.h1 < 1e-12, "{e:?}");
    }

    #[test]
    fn error_degree_is_enforced() {
        let mesh = Mesh::uniform(1).unwrap();
        let c = vec![0.0; mesh.num_nodes()];
        assert!(matches!(
            error_norms(&mesh, &c, &ZeroField, 6),
            Err(Error::InsufficientQuadrature { required: 8, got: 6 })
        ));
    }

    #[test]
    fn levels_must_ascend() {
        let o = StudyOptions::default();
        assert!(matches!(convergence_study(Problem::Poly1, 5, 2, &o), Err(Error::InvalidLevels(_))));
        assert!(matches!(convergence_study(Problem::Poly1, 0, 2, &o), Err(Error::InvalidLevels(_))));
    }

    #[test]
    fn rates_start_at_zero() {
        let r = convergence_study(Problem::Poly1, 2, 3, &StudyOptions::default()).unwrap();
        assert_eq!(r.levels.len(), 2);
        let first = r.levels[0].rates.unwrap();
        assert_eq!(first.interp_l2, 0.0);
        assert_eq!(first.lift_l2, Some(0.0));
        let e0 = r.levels[0].errors.unwrap();
        let e1 = r.levels[1].errors.unwrap();
        let r1 = r.levels[1].rates.unwrap();
        assert!((r1.fe_h1 - (e0.fe_h1 / e1.fe_h1).log2()).abs() < 1e-15);
    }
}
