//! Global P2 assembly with homogeneous Dirichlet elimination, and a
//! Jacobi-preconditioned conjugate-gradient solver.
//!
//! Rows are assembled independently (in parallel) by walking each node's
//! incident tetrahedra in increasing index order, so the reduction order of
//! every entry is fixed and repeated assemblies are bitwise identical.

use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, NotConverged, Result};
use crate::fem::{local_interpolated_load, local_load, local_stiffness, LocalMatrix, Point, Tabulation};
use crate::mesh::Mesh;

/// Default relative residual for CG.
pub const DEFAULT_CG_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct CsrMatrix {
    pub nrows: usize,
    pub row_ptr: Vec<usize>,
    pub col_idx: Vec<u32>,
    pub values: Vec<f64>,
}

impl CsrMatrix {
    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, i: usize) -> (&[u32], &[f64]) {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        (&self.col_idx[r.clone()], &self.values[r])
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (cols, vals) = self.row(i);
        match cols.binary_search(&(j as u32)) {
            Ok(k) => vals[k],
            Err(_) => 0.0,
        }
    }

    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        y.par_iter_mut().enumerate().with_min_len(1024).for_each(|(i, yi)| {
            let (cols, vals) = self.row(i);
            *yi = cols.iter().zip(vals).map(|(&c, v)| v * x[c as usize]).sum();
        });
    }

    pub fn mul(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.nrows];
        self.matvec(x, &mut y);
        y
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.nrows).map(|i| self.get(i, i)).collect()
    }

    /// Largest `|a_ij − a_ji|`; also fails (returns ∞) on structural asymmetry.
    pub fn max_asymmetry(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.nrows {
            let (cols, vals) = self.row(i);
            for (&c, v) in cols.iter().zip(vals) {
                let (tc, tv) = self.row(c as usize);
                match tc.binary_search(&(i as u32)) {
                    Ok(k) => worst = worst.max((v - tv[k]).abs()),
                    Err(_) => return f64::INFINITY,
                }
            }
        }
        worst
    }
}

/// The reduced Poisson system over interior P2 nodes.
#[derive(Clone, Debug)]
pub struct SparseSystem {
    pub matrix: CsrMatrix,
    pub rhs: Vec<f64>,
    /// Mesh node of each unknown.
    pub dof_map: Vec<usize>,
    /// Unknown of each mesh node, `None` on the boundary.
    pub node_to_dof: Vec<Option<u32>>,
}

impl SparseSystem {
    pub fn dofs(&self) -> usize {
        self.dof_map.len()
    }

    /// Scatters a DOF vector to all mesh nodes (boundary values zero).
    pub fn expand(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.node_to_dof.len()];
        for (d, &node) in self.dof_map.iter().enumerate() {
            out[node] = x[d];
        }
        out
    }

    /// Restricts a nodal vector to the DOFs.
    pub fn restrict(&self, nodal: &[f64]) -> Vec<f64> {
        self.dof_map.iter().map(|&n| nodal[n]).collect()
    }
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct SolveStats {
    pub iterations: usize,
    pub relative_residual: f64,
    #[serde(skip)]
    pub wall_time_secs: f64,
}

/// Incident tetrahedra of every node, each list in increasing order.
fn node_tets(mesh: &Mesh) -> (Vec<usize>, Vec<u32>) {
    let nn = mesh.num_nodes();
    let mut count = vec![0usize; nn + 1];
    for nodes in mesh.tet_nodes() {
        for &n in nodes {
            count[n as usize + 1] += 1;
        }
    }
    for i in 0..nn {
        count[i + 1] += count[i];
    }
    let offsets = count.clone();
    let mut fill = count;
    let mut tets = vec![0u32; offsets[nn]];
    for (t, nodes) in mesh.tet_nodes().iter().enumerate() {
        for &n in nodes {
            tets[fill[n as usize]] = t as u32;
            fill[n as usize] += 1;
        }
    }
    (offsets, tets)
}

/// Local stiffness of every Kuhn slot. All tetrahedra in a slot are
/// translates of each other, so six matrices cover the mesh.
fn slot_stiffness(mesh: &Mesh) -> Result<[LocalMatrix; 6]> {
    let mut out = [LocalMatrix([[0.0; 10]; 10]); 6];
    for (s, k) in out.iter_mut().enumerate() {
        *k = local_stiffness(&mesh.tet_coords(s))?;
    }
    Ok(out)
}

/// Builds CSR rows for the nodes in `rows`, keeping only columns accepted by
/// `col_of` (which also renumbers them).
fn assemble_rows(
    mesh: &Mesh,
    rows: &[usize],
    col_of: impl Fn(usize) -> Option<u32> + Sync,
    stiff: &[LocalMatrix; 6],
) -> CsrMatrix {
    let (offsets, inc) = node_tets(mesh);
    let tets = mesh.tets();
    let tet_nodes = mesh.tet_nodes();
    let row_data: Vec<Vec<(u32, f64)>> = rows
        .par_iter()
        .map(|&node| {
            let mut entries: Vec<(u32, f64)> = Vec::with_capacity(64);
            for &t in &inc[offsets[node]..offsets[node + 1]] {
                let t = t as usize;
                let nodes = &tet_nodes[t];
                let a = nodes.iter().position(|&n| n as usize == node).expect("incident tet holds node");
                let k = &stiff[tets[t].slot as usize - 1];
                for b in 0..10 {
                    if let Some(c) = col_of(nodes[b] as usize) {
                        entries.push((c, k.0[a][b]));
                    }
                }
            }
            // stable sort keeps per-column contributions in tet order
            entries.sort_by_key(|e| e.0);
            let mut merged: Vec<(u32, f64)> = Vec::with_capacity(entries.len());
            for (c, v) in entries {
                match merged.last_mut() {
                    Some(last) if last.0 == c => last.1 += v,
                    _ => merged.push((c, v)),
                }
            }
            merged
        })
        .collect();
    let mut row_ptr = Vec::with_capacity(rows.len() + 1);
    row_ptr.push(0);
    let total: usize = row_data.iter().map(Vec::len).sum();
    let mut col_idx = Vec::with_capacity(total);
    let mut values = Vec::with_capacity(total);
    for r in row_data {
        for (c, v) in r {
            col_idx.push(c);
            values.push(v);
        }
        row_ptr.push(col_idx.len());
    }
    CsrMatrix { nrows: rows.len(), row_ptr, col_idx, values }
}

/// Stiffness matrix over all P2 nodes, before boundary elimination.
pub fn assemble_full_matrix(mesh: &Mesh) -> Result<CsrMatrix> {
    let stiff = slot_stiffness(mesh)?;
    let rows: Vec<usize> = (0..mesh.num_nodes()).collect();
    Ok(assemble_rows(mesh, &rows, |n| Some(n as u32), &stiff))
}

/// How the right-hand side `(f, v_h)` is formed.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum LoadModel {
    /// `(I_h f, v_h)`: `f` sampled at the P2 nodes, then integrated exactly.
    #[default]
    Interpolated,
    /// `(f, v_h)` with `f` evaluated at the quadrature points.
    Quadrature,
}

impl LoadModel {
    pub fn name(self) -> &'static str {
        match self {
            LoadModel::Interpolated => "interpolated",
            LoadModel::Quadrature => "quadrature",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        [LoadModel::Interpolated, LoadModel::Quadrature].into_iter().find(|m| m.name() == s)
    }
}

/// Sums per-tetrahedron vectors into nodes, each node in tet order.
fn gather(mesh: &Mesh, local: &[[f64; 10]]) -> Vec<f64> {
    let (offsets, inc) = node_tets(mesh);
    let tet_nodes = mesh.tet_nodes();
    (0..mesh.num_nodes())
        .into_par_iter()
        .map(|node| {
            inc[offsets[node]..offsets[node + 1]]
                .iter()
                .map(|&t| {
                    let t = t as usize;
                    let a = tet_nodes[t].iter().position(|&n| n as usize == node).expect("incident tet holds node");
                    local[t][a]
                })
                .sum()
        })
        .collect()
}

/// Load vector `(f, φ_i)` over all P2 nodes.
pub fn assemble_load(mesh: &Mesh, f: impl Fn(Point) -> f64 + Sync, tab: &Tabulation) -> Result<Vec<f64>> {
    let local: Vec<[f64; 10]> = (0..mesh.tets().len())
        .into_par_iter()
        .map(|t| local_load(&mesh.tet_coords(t), &f, tab))
        .collect::<Result<_>>()?;
    Ok(gather(mesh, &local))
}

/// Load vector `(I_h f, φ_i)` over all P2 nodes.
pub fn assemble_interpolated_load(mesh: &Mesh, f: impl Fn(Point) -> f64 + Sync, tab: &Tabulation) -> Result<Vec<f64>> {
    let nodal: Vec<f64> = (0..mesh.num_nodes()).into_par_iter().map(|i| f(mesh.node_coords(i))).collect();
    let local: Vec<[f64; 10]> = (0..mesh.tets().len())
        .into_par_iter()
        .map(|t| {
            let fl = mesh.tet_nodes()[t].map(|n| nodal[n as usize]);
            local_interpolated_load(&mesh.tet_coords(t), &fl, tab)
        })
        .collect::<Result<_>>()?;
    Ok(gather(mesh, &local))
}

/// Reduced system for a given nodal load vector. Boundary values are zero,
/// so eliminating them needs no right-hand-side correction.
pub fn assemble_with_load(mesh: &Mesh, load: &[f64]) -> Result<SparseSystem> {
    if load.len() != mesh.num_nodes() {
        return Err(Error::DimensionMismatch { expected: mesh.num_nodes(), got: load.len() });
    }
    let stiff = slot_stiffness(mesh)?;
    let dof_map: Vec<usize> = mesh.interior_nodes().collect();
    let mut node_to_dof = vec![None; mesh.num_nodes()];
    for (d, &n) in dof_map.iter().enumerate() {
        node_to_dof[n] = Some(d as u32);
    }
    let matrix = assemble_rows(mesh, &dof_map, |n| node_to_dof[n], &stiff);
    let rhs = dof_map.iter().map(|&n| load[n]).collect();
    Ok(SparseSystem { matrix, rhs, dof_map, node_to_dof })
}

/// Assembles `(∇u_h, ∇v_h) = (f, v_h)` over interior P2 nodes.
pub fn assemble(mesh: &Mesh, f: impl Fn(Point) -> f64 + Sync, tab: &Tabulation) -> Result<SparseSystem> {
    assemble_with_load(mesh, &assemble_load(mesh, f, tab)?)
}

/// As [`assemble`], with the right-hand side formed per `model`.
pub fn assemble_model(
    mesh: &Mesh,
    f: impl Fn(Point) -> f64 + Sync,
    tab: &Tabulation,
    model: LoadModel,
) -> Result<SparseSystem> {
    let load = match model {
        LoadModel::Interpolated => assemble_interpolated_load(mesh, f, tab)?,
        LoadModel::Quadrature => assemble_load(mesh, f, tab)?,
    };
    assemble_with_load(mesh, &load)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Jacobi-preconditioned CG for `A x = b`, stopping when
/// `‖b − A x‖ / ‖b‖ <= tol` (checked on the true residual).
pub fn cg_solve(a: &CsrMatrix, b: &[f64], tol: f64, max_iter: usize) -> Result<(Vec<f64>, SolveStats)> {
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(Error::InvalidTolerance(tol));
    }
    let n = a.nrows;
    if b.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: b.len() });
    }
    let start = Instant::now();
    let bnorm = norm(b);
    let mut x = vec![0.0; n];
    if bnorm == 0.0 {
        return Ok((x, SolveStats { iterations: 0, relative_residual: 0.0, wall_time_secs: 0.0 }));
    }
    let inv_diag: Vec<f64> = a.diagonal().iter().map(|d| if *d != 0.0 { 1.0 / d } else { 1.0 }).collect();
    let mut r = b.to_vec();
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(r, d)| r * d).collect();
    let mut p = z.clone();
    let mut ap = vec![0.0; n];
    let mut rz = dot(&r, &z);
    let mut best = (f64::INFINITY, x.clone());
    let mut iterations = 0;
    loop {
        let rel = norm(&r) / bnorm;
        if rel <= tol {
            // confirm against the true residual before accepting
            a.matvec(&x, &mut ap);
            let true_r: Vec<f64> = b.iter().zip(&ap).map(|(b, ax)| b - ax).collect();
            let true_rel = norm(&true_r) / bnorm;
            if true_rel <= tol {
                let stats = SolveStats {
                    iterations,
                    relative_residual: true_rel,
                    wall_time_secs: start.elapsed().as_secs_f64(),
                };
                return Ok((x, stats));
            }
            r = true_r;
            z = r.iter().zip(&inv_diag).map(|(r, d)| r * d).collect();
            p = z.clone();
            rz = dot(&r, &z);
        }
        if rel < best.0 {
            best = (rel, x.clone());
        }
        if iterations >= max_iter {
            return Err(Box::new(NotConverged { iterations, residual: best.0, best: best.1 }).into());
        }
        a.matvec(&p, &mut ap);
        let alpha = rz / dot(&p, &ap);
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        for i in 0..n {
            z[i] = r[i] * inv_diag[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
        iterations += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::QuadratureRule;

    fn dense(rows: &[&[f64]]) -> CsrMatrix {
        let mut row_ptr = vec![0];
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        for r in rows {
            for (j, v) in r.iter().enumerate() {
                if *v != 0.0 {
                    col_idx.push(j as u32);
                    values.push(*v);
                }
            }
            row_ptr.push(col_idx.len());
        }
        CsrMatrix { nrows: rows.len(), row_ptr, col_idx, values }
    }

    #[test]
    fn identity_solves_in_one_step() {
        let a = dense(&[&[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0], &[0.0, 0.0, 1.0]]);
        let b = [3.0, -1.0, 2.5];
        let (x, stats) = cg_solve(&a, &b, 1e-12, 10).unwrap();
        assert!(stats.iterations <= 1);
        assert_eq!(x, b);
    }

    #[test]
    fn two_by_two() {
        let a = dense(&[&[2.0, 1.0], &[1.0, 2.0]]);
        let (x, stats) = cg_solve(&a, &[3.0, 3.0], 1e-12, 10).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-12 && (x[1] - 1.0).abs() < 1e-12);
        assert!(stats.relative_residual <= 1e-12);
    }

    #[test]
    fn non_convergence_carries_best_iterate() {
        let a = dense(&[&[4.0, 1.0, 0.0], &[1.0, 3.0, 1.0], &[0.0, 1.0, 2.0]]);
        let err = cg_solve(&a, &[1.0, 2.0, 3.0], 1e-14, 1).unwrap_err();
        match err {
            Error::NotConverged(nc) => {
                assert_eq!(nc.iterations, 1);
                assert_eq!(nc.best.len(), 3);
                assert!(nc.residual > 1e-14);
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(cg_solve(&a, &[1.0, 2.0, 3.0], 0.0, 5), Err(Error::InvalidTolerance(_))));
        assert!(matches!(cg_solve(&a, &[1.0], 1e-8, 5), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn single_cube_has_one_unknown() {
        let mesh = Mesh::uniform(1).unwrap();
        let tab = Tabulation::new(QuadratureRule::with_degree(6));
        let sys = assemble(&mesh, |_| 1.0, &tab).unwrap();
        assert_eq!(sys.dofs(), 1);
        assert_eq!(mesh.node_lattice(sys.dof_map[0]), [1, 1, 1]);
    }

    #[test]
    fn constants_are_in_the_kernel() {
        for n in [1, 2, 3] {
            let mesh = Mesh::uniform(n).unwrap();
            let a = assemble_full_matrix(&mesh).unwrap();
            let y = a.mul(&vec![1.0; a.nrows]);
            assert!(y.iter().all(|v| v.abs() < 1e-11));
            assert!(a.max_asymmetry() < 1e-13);
        }
    }

    #[test]
    fn assembly_is_deterministic() {
        let mesh = Mesh::uniform(3).unwrap();
        let tab = Tabulation::new(QuadratureRule::with_degree(6));
        let f = |p: Point| (p[0] * 3.0).sin() + p[1] * p[2];
        let a = assemble(&mesh, f, &tab).unwrap();
        let b = assemble(&mesh, f, &tab).unwrap();
        assert_eq!(a.matrix.row_ptr, b.matrix.row_ptr);
        assert_eq!(a.matrix.col_idx, b.matrix.col_idx);
        assert_eq!(a.matrix.values, b.matrix.values);
        assert_eq!(a.rhs, b.rhs);
    }

    #[test]
    fn reduced_matrix_is_spd() {
        let mesh = Mesh::uniform(2).unwrap();
        let tab = Tabulation::new(QuadratureRule::with_degree(6));
        let sys = assemble(&mesh, |_| 1.0, &tab).unwrap();
        assert_eq!(sys.dofs(), 27);
        assert!(sys.matrix.max_asymmetry() < 1e-13);
        let m = nalgebra::DMatrix::from_fn(27, 27, |i, j| sys.matrix.get(i, j));
        let eig = nalgebra::SymmetricEigen::new(m);
        assert!(eig.eigenvalues.iter().all(|&l| l > 1e-8));
    }
}
