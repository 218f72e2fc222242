//! Exact local H¹-orthogonality of P2 interpolation on the four kinds of
//! support patch of a uniform Kuhn mesh.
//!
//! For a P2 node with basis function `φ` and support patch `R`, and any
//! cubic `p`, the identity `(∇(p − I_2 p), ∇φ)_R = 0` holds exactly. This
//! module builds each patch in a fixed unit-scale frame, restricts `φ` to
//! every patch tetrahedron, and evaluates the per-tetrahedron integrals in
//! rational arithmetic.
//!
//! Canonical frames (unit cubes, Kuhn diagonal along `(1, 1, 1)`):
//!
//! * cube-mid: node `(½, ½, ½)`, the six tetrahedra of `[0, 1]³`, `T_1..T_6`
//!   ordered `x≥y≥z, y≥x≥z, y≥z≥x, z≥y≥x, z≥x≥y, x≥z≥y`;
//! * square-mid: node `(0, ½, ½)`, `x ∈ [−1, 1]`;
//! * edge-mid: node `(0, 0, ½)` on a vertical edge;
//! * vertex: node at the origin, 24 tetrahedra.

use rayon::prelude::*;
use serde::{Serialize, Serializer};

use crate::error::Result;
use crate::exactmath::{
    fraction_string, int, integrate_grad_dot, monomial_name, monomials_up_to, p2_basis, p2_interpolate,
    p2_nodes, rat, Exponent, MultiPoly, Rational, RationalTet,
};
use crate::fem::{local_stiffness, QuadratureRule, Tabulation};
use crate::mesh::{Mesh, NodeKind, KUHN_SLOTS};

/// The P2 basis function of one node, piecewise on its canonical patch.
#[derive(Clone, Debug)]
pub struct PatchBasis {
    pub kind: NodeKind,
    pub node: [Rational; 3],
    /// `T_1, T_2, …` with the restriction of `φ` to each.
    pub pieces: Vec<(RationalTet, MultiPoly)>,
}

/// Kuhn tetrahedron of the unit cube at `origin`, vertices in chain order.
fn kuhn_tet(origin: [i64; 3], slot: usize) -> [[i64; 3]; 4] {
    let order = KUHN_SLOTS[slot - 1];
    let mut v = [origin; 4];
    for step in 0..3 {
        v[step + 1] = v[step];
        v[step + 1][order[step]] += 1;
    }
    v
}

fn patch_geometry(kind: NodeKind) -> ([Rational; 3], Vec<[[i64; 3]; 4]>) {
    match kind {
        NodeKind::CubeMid => (
            [rat(1, 2), rat(1, 2), rat(1, 2)],
            (1..=6).map(|s| kuhn_tet([0, 0, 0], s)).collect(),
        ),
        NodeKind::SquareMid => (
            [int(0), rat(1, 2), rat(1, 2)],
            vec![
                kuhn_tet([0, 0, 0], 4),
                kuhn_tet([0, 0, 0], 3),
                kuhn_tet([-1, 0, 0], 1),
                kuhn_tet([-1, 0, 0], 6),
            ],
        ),
        NodeKind::EdgeMid => {
            let x = [
                [0, 0, 0],
                [-1, 0, 0],
                [-1, -1, 0],
                [0, -1, 0],
                [0, 0, 1],
                [1, 0, 1],
                [1, 1, 1],
                [0, 1, 1],
            ];
            let t = |a: usize, b: usize, c: usize, d: usize| [x[a - 1], x[b - 1], x[c - 1], x[d - 1]];
            (
                [int(0), int(0), rat(1, 2)],
                vec![t(1, 5, 6, 7), t(1, 5, 7, 8), t(1, 2, 5, 8), t(1, 2, 3, 5), t(1, 3, 4, 5), t(1, 4, 5, 6)],
            )
        }
        NodeKind::Vertex => {
            let x = [
                [0, 0, -1],
                [-1, 0, -1],
                [-1, -1, -1],
                [0, -1, -1],
                [1, 0, 0],
                [1, 1, 0],
                [0, 1, 0],
                [-1, 0, 0],
                [-1, -1, 0],
                [0, -1, 0],
                [1, 0, 1],
                [1, 1, 1],
                [0, 1, 1],
                [0, 0, 1],
                [0, 0, 0],
            ];
            let t = |a: usize, b: usize, c: usize| [x[a - 1], x[b - 1], x[c - 1], x[14]];
            (
                [int(0), int(0), int(0)],
                vec![
                    t(1, 5, 6),
                    t(1, 6, 7),
                    t(1, 2, 7),
                    t(7, 2, 8),
                    t(1, 2, 3),
                    t(2, 3, 8),
                    t(3, 8, 9),
                    t(3, 9, 10),
                    t(3, 10, 4),
                    t(3, 1, 4),
                    t(1, 4, 5),
                    t(10, 4, 5),
                    t(5, 6, 12),
                    t(6, 7, 12),
                    t(7, 13, 12),
                    t(12, 13, 14),
                    t(11, 12, 14),
                    t(5, 11, 12),
                    t(7, 8, 13),
                    t(8, 13, 14),
                    t(8, 9, 14),
                    t(9, 10, 14),
                    t(10, 11, 14),
                    t(10, 5, 11),
                ],
            )
        }
    }
}

/// The patch and piecewise basis function for a node kind.
pub fn patch_basis(kind: NodeKind) -> PatchBasis {
    let (node, tets) = patch_geometry(kind);
    let pieces = tets
        .into_iter()
        .map(|ints| {
            let tet = ints.map(|p| p.map(int));
            let local = p2_nodes(&tet)
                .iter()
                .position(|x| *x == node)
                .expect("patch node is a P2 node of every patch tetrahedron");
            let phi = p2_basis(&tet).expect("canonical patch tetrahedra are non-degenerate")[local].clone();
            (tet, phi)
        })
        .collect();
    PatchBasis { kind, node, pieces }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Defect {
    pub total: Rational,
    pub per_tet: Vec<Rational>,
}

/// Per-tetrahedron values of `∫_{T_i} ∇(p − I_2 p) · ∇φ` and their sum.
pub fn orthogonality_defect(kind: NodeKind, p: &MultiPoly) -> Defect {
    defect_on(&patch_basis(kind), p).expect("canonical patch tetrahedra are non-degenerate")
}

pub fn defect_on(patch: &PatchBasis, p: &MultiPoly) -> Result<Defect> {
    let mut per_tet = Vec::with_capacity(patch.pieces.len());
    for (tet, phi) in &patch.pieces {
        let err = p - &p2_interpolate(p, tet)?;
        per_tet.push(integrate_grad_dot(&err, phi, tet)?);
    }
    let total = per_tet.iter().fold(int(0), |acc, v| acc + v);
    Ok(Defect { total, per_tet })
}

#[derive(Clone, Debug, Serialize)]
pub struct LemmaRecord {
    #[serde(rename = "class", serialize_with = "ser_kind")]
    pub kind: NodeKind,
    #[serde(serialize_with = "ser_monomial")]
    pub monomial: Exponent,
    #[serde(serialize_with = "ser_fractions")]
    pub per_tet: Vec<Rational>,
    #[serde(serialize_with = "ser_fraction")]
    pub total: Rational,
}

impl LemmaRecord {
    pub fn is_zero(&self) -> bool {
        self.total == int(0)
    }
}

fn ser_kind<S: Serializer>(k: &NodeKind, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(k.name())
}

fn ser_monomial<S: Serializer>(e: &Exponent, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&monomial_name(*e))
}

fn ser_fraction<S: Serializer>(r: &Rational, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&fraction_string(r))
}

fn ser_fractions<S: Serializer>(v: &[Rational], s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_seq(v.iter().map(fraction_string))
}

#[derive(Clone, Debug)]
pub struct LemmaReport {
    pub records: Vec<LemmaRecord>,
}

impl LemmaReport {
    pub fn nonzero(&self) -> impl Iterator<Item = &LemmaRecord> {
        self.records.iter().filter(|r| !r.is_zero())
    }

    pub fn all_zero(&self) -> bool {
        self.nonzero().next().is_none()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.records).expect("report serializes")
    }

    pub fn to_table(&self) -> String {
        let mut out = String::new();
        for r in &self.records {
            let per: Vec<String> = r.per_tet.iter().map(fraction_string).collect();
            out.push_str(&format!(
                "{:<11} {:<8} total {:<6} [{}]\n",
                r.kind.name(),
                monomial_name(r.monomial),
                fraction_string(&r.total),
                per.join(", ")
            ));
        }
        let zeros = self.records.iter().filter(|r| r.is_zero()).count();
        out.push_str(&format!("{zeros}/{} identities exactly zero\n", self.records.len()));
        out
    }
}

/// Every cubic monomial against every node kind (4 × 20 records).
pub fn verify_all_lemmas() -> LemmaReport {
    let patches: Vec<PatchBasis> = NodeKind::ALL.iter().map(|&k| patch_basis(k)).collect();
    let monomials = monomials_up_to(3);
    let jobs: Vec<(usize, Exponent)> = (0..patches.len())
        .flat_map(|k| monomials.iter().map(move |&e| (k, e)))
        .collect();
    let records = jobs
        .par_iter()
        .map(|&(k, e)| {
            let p = MultiPoly::monomial(e, int(1));
            let d = defect_on(&patches[k], &p).expect("canonical patch tetrahedra are non-degenerate");
            LemmaRecord { kind: patches[k].kind, monomial: e, per_tet: d.per_tet, total: d.total }
        })
        .collect();
    LemmaReport { records }
}

/// Floating-point defect `Σ_T ∫_T ∇(p − I_h p) · ∇φ_j` for every interior
/// node `j` of a real mesh.
pub fn mesh_defects(mesh: &Mesh, p: &MultiPoly) -> Result<Vec<(usize, f64)>> {
    let pf = p.to_f64();
    let grad = pf.gradient();
    // ∇p · ∇φ has degree ≤ deg(p) − 1 + 1
    let tab = Tabulation::new(QuadratureRule::with_degree(p.degree().max(2) as usize));
    let mut acc = vec![0.0; mesh.num_nodes()];
    for (t, nodes) in mesh.tet_nodes().iter().enumerate() {
        let coords = mesh.tet_coords(t);
        let map = crate::fem::AffineMap::new(&coords)?;
        let k = local_stiffness(&coords)?;
        let interp: [f64; 10] = nodes.map(|n| pf.eval(&mesh.node_coords(n as usize)));
        let ki = k.apply(&interp);
        let mut exact = [0.0; 10];
        for (q, xi) in tab.rule.points.iter().enumerate() {
            let x = map.apply(*xi);
            let gp = [grad[0].eval(&x), grad[1].eval(&x), grad[2].eval(&x)];
            let w = tab.rule.weights[q] * map.det.abs();
            for (i, g) in tab.gradients[q].iter().enumerate() {
                let gphi = map.grad(*g);
                exact[i] += w * (gp[0] * gphi[0] + gp[1] * gphi[1] + gp[2] * gphi[2]);
            }
        }
        for i in 0..10 {
            acc[nodes[i] as usize] += exact[i] - ki[i];
        }
    }
    Ok(mesh.interior_nodes().map(|j| (j, acc[j])).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mono(e: Exponent) -> MultiPoly {
        MultiPoly::monomial(e, int(1))
    }

    fn fr(list: &[(i64, i64)]) -> Vec<Rational> {
        list.iter().map(|&(n, d)| rat(n, d)).collect()
    }

    #[test]
    fn basis_restrictions_match_closed_forms() {
        let x = MultiPoly::var(0);
        let y = MultiPoly::var(1);
        let one = MultiPoly::constant(int(1));
        let cube = patch_basis(NodeKind::CubeMid);
        // −4x(y−1) on T_3
        assert_eq!(cube.pieces[2].1, (&x * &(&y - &one)).scale(&int(-4)));

        let square = patch_basis(NodeKind::SquareMid);
        let g = square.pieces[0].1.gradient();
        let z = MultiPoly::var(2);
        let four = int(4);
        assert_eq!(g[0], &z.scale(&four) - &one.scale(&four));
        assert_eq!(g[1], &one.scale(&four) - &z.scale(&four));
        assert_eq!(g[2], &x.scale(&four) - &y.scale(&four));

        let vertex = patch_basis(NodeKind::Vertex);
        for t in [15, 16] {
            let g = vertex.pieces[t].1.gradient();
            assert!(g[0].is_zero() && g[1].is_zero());
            assert_eq!(g[2], &z.scale(&four) - &one.scale(&int(3)));
        }
    }

    #[test]
    fn basis_is_nodal_and_quadratic() {
        for kind in NodeKind::ALL {
            let patch = patch_basis(kind);
            assert_eq!(patch.pieces.len(), kind.patch_size());
            for (tet, phi) in &patch.pieces {
                assert!(phi.degree() <= 2);
                for x in p2_nodes(tet) {
                    let expected = if x == patch.node { int(1) } else { int(0) };
                    assert_eq!(phi.eval(&x), expected);
                }
            }
        }
    }

    #[test]
    fn basis_is_continuous_across_shared_nodes() {
        for kind in NodeKind::ALL {
            let patch = patch_basis(kind);
            for (ta, pa) in &patch.pieces {
                for (tb, pb) in &patch.pieces {
                    for x in p2_nodes(ta) {
                        if p2_nodes(tb).contains(&x) {
                            assert_eq!(pa.eval(&x), pb.eval(&x));
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn cube_mid_defects() {
        // frozen from the symbolic oracle in tests/oracles
        let d = orthogonality_defect(NodeKind::CubeMid, &mono([3, 0, 0]));
        assert_eq!(d.per_tet, fr(&[(-1, 60), (0, 1), (1, 60), (1, 60), (0, 1), (-1, 60)]));
        assert_eq!(d.total, int(0));
        let d = orthogonality_defect(NodeKind::CubeMid, &mono([2, 1, 0]));
        assert_eq!(d.per_tet, fr(&[(-1, 60), (-1, 60), (1, 90), (1, 60), (1, 60), (-1, 90)]));
        let d = orthogonality_defect(NodeKind::CubeMid, &mono([1, 1, 1]));
        assert!(d.per_tet.iter().all(|v| *v == int(0)));
    }

    #[test]
    fn edge_mid_and_vertex_defects() {
        let d = orthogonality_defect(NodeKind::EdgeMid, &mono([0, 0, 3]));
        assert_eq!(d.per_tet, fr(&[(-1, 30), (-1, 30), (0, 1), (1, 30), (1, 30), (0, 1)]));
        let d = orthogonality_defect(NodeKind::Vertex, &mono([3, 0, 0]));
        for (i, v) in d.per_tet.iter().enumerate() {
            let expected = match i + 1 {
                6 | 7 => rat(-1, 40),
                13 | 18 => rat(1, 40),
                11 | 12 => rat(-1, 120),
                19 | 20 => rat(1, 120),
                _ => int(0),
            };
            assert_eq!(*v, expected, "T_{}", i + 1);
        }
        assert_eq!(d.total, int(0));
    }

    #[test]
    fn rotation_permutes_cube_mid_values() {
        // p'(x, y, z) = p(y, z, x); the rotation R(x, y, z) = (y, z, x) maps
        // the cube patch onto itself, so per_tet'(T) = per_tet(R T).
        let patch = patch_basis(NodeKind::CubeMid);
        let rotate = |v: &[Rational; 3]| [v[1].clone(), v[2].clone(), v[0].clone()];
        let image: Vec<usize> = patch
            .pieces
            .iter()
            .map(|(tet, _)| {
                let mut moved: Vec<[Rational; 3]> = tet.iter().map(rotate).collect();
                moved.sort();
                patch
                    .pieces
                    .iter()
                    .position(|(t, _)| {
                        let mut s = t.to_vec();
                        s.sort();
                        s == moved
                    })
                    .unwrap()
            })
            .collect();
        for e in monomials_up_to(3) {
            let p = mono(e);
            let rotated = mono([e[2], e[0], e[1]]);
            let a = orthogonality_defect(NodeKind::CubeMid, &p);
            let b = orthogonality_defect(NodeKind::CubeMid, &rotated);
            for i in 0..6 {
                assert_eq!(b.per_tet[i], a.per_tet[image[i]]);
            }
            assert_eq!(a.total, b.total);
        }
    }

    #[test]
    fn quadratics_have_zero_defect_everywhere() {
        for kind in NodeKind::ALL {
            let d = orthogonality_defect(kind, &mono([2, 0, 0]));
            assert!(d.per_tet.iter().all(|v| *v == int(0)));
        }
    }

    #[test]
    fn quartic_is_not_orthogonal() {
        let d = orthogonality_defect(NodeKind::CubeMid, &mono([4, 0, 0]));
        assert_ne!(d.total, int(0));
    }

    #[test]
    fn report_serializes_fractions() {
        let report = verify_all_lemmas();
        assert_eq!(report.records.len(), 80);
        let json: serde_json::Value = serde_json::from_str(&report.to_json()).unwrap();
        let first = &json[0];
        assert_eq!(first["class"], "cube-mid");
        assert_eq!(first["monomial"], "1");
        assert_eq!(first["total"], "0/1");
        assert_eq!(first["per_tet"].as_array().unwrap().len(), 6);
    }
}
