//! Uniform Kuhn meshes of the unit cube with P2 node numbering.
//!
//! Every cube of the `n × n × n` grid is split into the six tetrahedra
//! `{0 <= p_a <= p_b <= p_c <= h}` (cube-local coordinates), one per
//! permutation of the axes. All tetrahedra share the cube's main diagonal
//! from its low corner to its high corner, so each cube face carries exactly
//! one diagonal and the pattern is translation invariant.
//!
//! P2 nodes live on the half-spacing lattice `(i, j, k) · h/2`, indexed
//! lexicographically with `k` fastest. Every lattice point is a P2 node:
//! vertices (all even), axis-edge midpoints (one odd), face-diagonal
//! midpoints (two odd) and cube-diagonal midpoints (all odd).

use std::io::{self, Write};

use crate::error::{Error, Result};
use crate::exactmath::{int, rat, Rational, RationalTet};

/// Largest `n` whose `(2n + 1)^3` node count fits in a `u32` node index.
pub const MAX_CUBES_PER_AXIS: usize = 812;

/// Axis order (largest coordinate first) of the six Kuhn tetrahedra,
/// by local slot 1..=6.
pub const KUHN_SLOTS: [[usize; 3]; 6] = [
    [0, 1, 2], // x >= y >= z
    [1, 0, 2], // y >= x >= z
    [1, 2, 0], // y >= z >= x
    [2, 1, 0], // z >= y >= x
    [2, 0, 1], // z >= x >= y
    [0, 2, 1], // x >= z >= y
];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum NodeKind {
    Vertex,
    EdgeMid,
    SquareMid,
    CubeMid,
}

impl NodeKind {
    pub const ALL: [NodeKind; 4] = [
        NodeKind::CubeMid,
        NodeKind::SquareMid,
        NodeKind::EdgeMid,
        NodeKind::Vertex,
    ];

    /// Classification from the parity of half-lattice coordinates.
    pub fn from_lattice(p: [usize; 3]) -> Self {
        match p.iter().filter(|&&c| c % 2 == 1).count() {
            0 => NodeKind::Vertex,
            1 => NodeKind::EdgeMid,
            2 => NodeKind::SquareMid,
            _ => NodeKind::CubeMid,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            NodeKind::Vertex => "vertex",
            NodeKind::EdgeMid => "edge-mid",
            NodeKind::SquareMid => "square-mid",
            NodeKind::CubeMid => "cube-mid",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        NodeKind::ALL.into_iter().find(|k| k.name() == s)
    }

    /// Number of tetrahedra in the full support patch.
    pub fn patch_size(self) -> usize {
        match self {
            NodeKind::Vertex => 24,
            NodeKind::EdgeMid => 6,
            NodeKind::SquareMid => 4,
            NodeKind::CubeMid => 6,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct NodeClass {
    pub kind: NodeKind,
    /// The node is off `∂Ω`, so its whole support patch is in the mesh and
    /// its basis function belongs to the discrete space.
    pub interior: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Tetrahedron {
    pub vertices: [u32; 4],
    pub cube: u32,
    /// Kuhn slot 1..=6, see [`KUHN_SLOTS`].
    pub slot: u8,
}

#[derive(Clone, Debug)]
pub struct Mesh {
    n: usize,
    h: f64,
    vertices: Vec<[u32; 3]>,
    tets: Vec<Tetrahedron>,
    tet_nodes: Vec<[u32; 10]>,
    boundary_mask: Vec<bool>,
}

impl Mesh {
    pub fn uniform(n: usize) -> Result<Self> {
        if n == 0 || n > MAX_CUBES_PER_AXIS {
            return Err(Error::InvalidMeshSize(n));
        }
        let nv = n + 1;
        let vertices: Vec<[u32; 3]> = (0..nv)
            .flat_map(|i| (0..nv).flat_map(move |j| (0..nv).map(move |k| [i as u32, j as u32, k as u32])))
            .collect();

        let m = 2 * n + 1;
        let node_of = |p: [usize; 3]| ((p[0] * m + p[1]) * m + p[2]) as u32;
        let vert_of = |p: [usize; 3]| ((p[0] * nv + p[1]) * nv + p[2]) as u32;

        let mut tets = Vec::with_capacity(6 * n * n * n);
        let mut tet_nodes = Vec::with_capacity(6 * n * n * n);
        for ci in 0..n {
            for cj in 0..n {
                for ck in 0..n {
                    let cube = ((ci * n + cj) * n + ck) as u32;
                    for (s, order) in KUHN_SLOTS.iter().enumerate() {
                        let mut corners = [[ci, cj, ck]; 4];
                        for step in 0..3 {
                            corners[step + 1] = corners[step];
                            corners[step + 1][order[step]] += 1;
                        }
                        if permutation_is_odd(order) {
                            corners.swap(2, 3);
                        }
                        let vertices = corners.map(vert_of);
                        let lattice = corners.map(|c| c.map(|v| 2 * v));
                        let nodes: [u32; 10] = std::array::from_fn(|i| {
                            if i < 4 {
                                node_of(lattice[i])
                            } else {
                                let (a, b) = crate::exactmath::P2_EDGES[i - 4];
                                node_of(std::array::from_fn(|d| (lattice[a][d] + lattice[b][d]) / 2))
                            }
                        });
                        tets.push(Tetrahedron { vertices, cube, slot: s as u8 + 1 });
                        tet_nodes.push(nodes);
                    }
                }
            }
        }

        let boundary_mask = (0..m * m * m)
            .map(|idx| {
                let p = lattice_of(idx, m);
                p.iter().any(|&c| c == 0 || c == m - 1)
            })
            .collect();

        Ok(Self { n, h: 1.0 / n as f64, vertices, tets, tet_nodes, boundary_mask })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn vertices(&self) -> &[[u32; 3]] {
        &self.vertices
    }

    pub fn tets(&self) -> &[Tetrahedron] {
        &self.tets
    }

    /// Global P2 node indices of each tetrahedron in local P2 order.
    pub fn tet_nodes(&self) -> &[[u32; 10]] {
        &self.tet_nodes
    }

    pub fn boundary_mask(&self) -> &[bool] {
        &self.boundary_mask
    }

    pub fn num_cubes(&self) -> usize {
        self.n * self.n * self.n
    }

    pub fn num_nodes(&self) -> usize {
        self.boundary_mask.len()
    }

    /// Points per axis of the half-spacing lattice, `2n + 1`.
    pub fn nodes_per_axis(&self) -> usize {
        2 * self.n + 1
    }

    pub fn node_index(&self, lattice: [usize; 3]) -> Option<usize> {
        let m = self.nodes_per_axis();
        if lattice.iter().any(|&c| c >= m) {
            return None;
        }
        Some((lattice[0] * m + lattice[1]) * m + lattice[2])
    }

    /// Half-lattice coordinates `(i, j, k)` of a node; the point is `(i, j, k) · h/2`.
    pub fn node_lattice(&self, node: usize) -> [usize; 3] {
        lattice_of(node, self.nodes_per_axis())
    }

    pub fn node_coords(&self, node: usize) -> [f64; 3] {
        let half = 0.5 * self.h;
        self.node_lattice(node).map(|c| c as f64 * half)
    }

    pub fn node_coords_exact(&self, node: usize) -> [Rational; 3] {
        let den = 2 * self.n as i64;
        self.node_lattice(node).map(|c| rat(c as i64, den))
    }

    pub fn vertex_coords(&self, v: usize) -> [f64; 3] {
        self.vertices[v].map(|c| c as f64 * self.h)
    }

    pub fn tet_coords(&self, t: usize) -> [[f64; 3]; 4] {
        self.tets[t].vertices.map(|v| self.vertex_coords(v as usize))
    }

    pub fn tet_exact(&self, t: usize) -> RationalTet {
        let n = self.n as i64;
        self.tets[t]
            .vertices
            .map(|v| self.vertices[v as usize].map(|c| rat(c as i64, n)))
    }

    pub fn cube_lattice(&self, cube: usize) -> [usize; 3] {
        let n = self.n;
        [cube / (n * n), (cube / n) % n, cube % n]
    }

    pub fn cube_index(&self, c: [usize; 3]) -> Option<usize> {
        if c.iter().any(|&v| v >= self.n) {
            return None;
        }
        Some((c[0] * self.n + c[1]) * self.n + c[2])
    }

    /// Tetrahedra of a cube, in slot order.
    pub fn cube_tets(&self, cube: usize) -> std::ops::Range<usize> {
        6 * cube..6 * cube + 6
    }

    pub fn classify_node(&self, node: usize) -> Result<NodeClass> {
        self.check_node(node)?;
        Ok(NodeClass {
            kind: NodeKind::from_lattice(self.node_lattice(node)),
            interior: !self.boundary_mask[node],
        })
    }

    /// Tetrahedra on which the node's global basis function is nonzero.
    pub fn support_patch(&self, node: usize) -> Result<Vec<usize>> {
        self.check_node(node)?;
        let p = self.node_lattice(node);
        let n = self.n;
        // cubes whose closure holds the node: floor/ceil of p/2 minus one
        let ranges: [Vec<usize>; 3] = std::array::from_fn(|d| {
            let lo = p[d].saturating_sub(1) / 2;
            let hi = (p[d] / 2).min(n - 1);
            (lo..=hi).collect()
        });
        let mut out = Vec::new();
        for &ci in &ranges[0] {
            for &cj in &ranges[1] {
                for &ck in &ranges[2] {
                    let cube = (ci * n + cj) * n + ck;
                    for t in self.cube_tets(cube) {
                        if self.tet_nodes[t].contains(&(node as u32)) {
                            out.push(t);
                        }
                    }
                }
            }
        }
        out.sort_unstable();
        Ok(out)
    }

    pub fn interior_nodes(&self) -> impl Iterator<Item = usize> + '_ {
        self.boundary_mask.iter().enumerate().filter(|(_, &b)| !b).map(|(i, _)| i)
    }

    /// Plain-text dump: one line per tetrahedron with its twelve vertex
    /// coordinates.
    pub fn write_tets<W: Write>(&self, mut out: W) -> io::Result<()> {
        for t in 0..self.tets.len() {
            let c = self.tet_coords(t);
            let fields: Vec<String> = c.iter().flatten().map(|v| format!("{v}")).collect();
            writeln!(out, "{}", fields.join(" "))?;
        }
        Ok(())
    }

    /// Sum of exact signed volumes; equals 1 for a valid tiling.
    pub fn total_volume_exact(&self) -> Rational {
        let mut acc = int(0);
        for t in 0..self.tets.len() {
            acc += crate::exactmath::signed_volume(&self.tet_exact(t));
        }
        acc
    }

    fn check_node(&self, node: usize) -> Result<()> {
        if node >= self.num_nodes() {
            return Err(Error::NodeOutOfRange { index: node, count: self.num_nodes() });
        }
        Ok(())
    }
}

fn lattice_of(idx: usize, m: usize) -> [usize; 3] {
    [idx / (m * m), (idx / m) % m, idx % m]
}

fn permutation_is_odd(p: &[usize; 3]) -> bool {
    let mut inversions = 0;
    for i in 0..3 {
        for j in i + 1..3 {
            if p[i] > p[j] {
                inversions += 1;
            }
        }
    }
    inversions % 2 == 1
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exactmath::signed_volume;
    use std::collections::HashSet;

    #[test]
    fn single_cube_counts() {
        let m = Mesh::uniform(1).unwrap();
        assert_eq!(m.tets().len(), 6);
        assert_eq!(m.vertices().len(), 8);
        assert_eq!(m.num_nodes(), 27);
    }

    #[test]
    fn rejects_bad_sizes() {
        assert!(matches!(Mesh::uniform(0), Err(Error::InvalidMeshSize(0))));
        assert!(Mesh::uniform(MAX_CUBES_PER_AXIS + 1).is_err());
    }

    #[test]
    fn midpoints_of_edges_cover_the_half_lattice() {
        // distinct edge midpoints plus vertices, enumerated from the tets
        for n in [1usize, 2, 3] {
            let m = Mesh::uniform(n).unwrap();
            let mut edges = HashSet::new();
            for t in m.tets() {
                for a in 0..4 {
                    for b in a + 1..4 {
                        let (u, v) = (t.vertices[a].min(t.vertices[b]), t.vertices[a].max(t.vertices[b]));
                        edges.insert((u, v));
                    }
                }
            }
            let mids: HashSet<[u32; 3]> = edges
                .iter()
                .map(|&(u, v)| {
                    let (pu, pv) = (m.vertices()[u as usize], m.vertices()[v as usize]);
                    std::array::from_fn(|d| pu[d] + pv[d])
                })
                .collect();
            assert_eq!(mids.len() + m.vertices().len(), (2 * n + 1).pow(3), "n = {n}");
            if n == 1 {
                assert_eq!(mids.len(), 19);
            }
        }
    }

    #[test]
    fn positive_volumes_and_exact_tiling() {
        for n in [1usize, 2, 3] {
            let m = Mesh::uniform(n).unwrap();
            let expected = rat(1, 6 * (n * n * n) as i64);
            for t in 0..m.tets().len() {
                assert_eq!(signed_volume(&m.tet_exact(t)), expected);
            }
            assert_eq!(m.total_volume_exact(), int(1));
        }
    }

    #[test]
    fn classification_examples() {
        let m = Mesh::uniform(2).unwrap();
        let c = m.classify_node(m.node_index([1, 1, 1]).unwrap()).unwrap();
        assert_eq!(c.kind, NodeKind::CubeMid);
        let c = m.classify_node(m.node_index([1, 1, 0]).unwrap()).unwrap();
        assert_eq!(c, NodeClass { kind: NodeKind::SquareMid, interior: false });
        let c = m.classify_node(m.node_index([2, 2, 1]).unwrap()).unwrap();
        assert_eq!(c, NodeClass { kind: NodeKind::EdgeMid, interior: true });
        assert!(m.classify_node(m.num_nodes()).is_err());
    }

    #[test]
    fn patch_sizes_by_kind() {
        let m = Mesh::uniform(4).unwrap();
        for node in m.interior_nodes() {
            let kind = m.classify_node(node).unwrap().kind;
            assert_eq!(m.support_patch(node).unwrap().len(), kind.patch_size(), "{kind:?}");
        }
    }

    #[test]
    fn patches_are_translation_congruent() {
        let m = Mesh::uniform(4).unwrap();
        for node in m.interior_nodes() {
            let p = m.node_lattice(node);
            let Some(shifted) = m.node_index([p[0] + 2, p[1], p[2]]) else { continue };
            if m.boundary_mask()[shifted] {
                continue;
            }
            let a = m.support_patch(node).unwrap();
            let b = m.support_patch(shifted).unwrap();
            let shift = m.n() * m.n() * 6;
            let moved: Vec<usize> = a.iter().map(|t| t + shift).collect();
            assert_eq!(moved, b);
        }
    }

    #[test]
    fn tet_nodes_sit_at_vertices_and_midpoints() {
        let m = Mesh::uniform(2).unwrap();
        for (t, nodes) in m.tet_nodes().iter().enumerate() {
            let c = m.tet_coords(t);
            for (i, &node) in nodes.iter().enumerate() {
                let x = m.node_coords(node as usize);
                let expect: [f64; 3] = if i < 4 {
                    c[i]
                } else {
                    let (a, b) = crate::exactmath::P2_EDGES[i - 4];
                    std::array::from_fn(|d| 0.5 * (c[a][d] + c[b][d]))
                };
                assert_eq!(x, expect);
            }
        }
    }

    #[test]
    fn dump_has_one_line_per_tet() {
        let m = Mesh::uniform(2).unwrap();
        let mut buf = Vec::new();
        m.write_tets(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 48);
        assert_eq!(text.lines().next().unwrap().split_whitespace().count(), 12);
    }
}
