//! Discrete model problem: `-div(alpha grad u) = f` on the unit square with
//! zero Dirichlet data, bilinear (Q1) elements on a uniform grid and
//! element-wise constant coefficients.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sparse::{IndexSet, SparseMatrix};

/// Uniform `n x n` element grid on the unit square.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridSpec {
    elements_per_side: usize,
}

impl GridSpec {
    pub fn new(elements_per_side: usize) -> Result<Self> {
        if elements_per_side < 2 {
            return Err(Error::Input(format!(
                "grid needs at least 2 elements per side, got {elements_per_side}"
            )));
        }
        Ok(GridSpec { elements_per_side })
    }

    pub fn elements_per_side(&self) -> usize {
        self.elements_per_side
    }

    pub fn h(&self) -> f64 {
        1.0 / self.elements_per_side as f64
    }

    pub fn nodes_per_side(&self) -> usize {
        self.elements_per_side + 1
    }

    pub fn node_count(&self) -> usize {
        self.nodes_per_side() * self.nodes_per_side()
    }

    pub fn element_count(&self) -> usize {
        self.elements_per_side * self.elements_per_side
    }

    /// Row-major node index of grid point `(i, j)` = `(x / h, y / h)`.
    pub fn node(&self, i: usize, j: usize) -> usize {
        j * self.nodes_per_side() + i
    }

    pub fn node_position(&self, node: usize) -> (usize, usize) {
        (node % self.nodes_per_side(), node / self.nodes_per_side())
    }

    pub fn is_boundary_node(&self, i: usize, j: usize) -> bool {
        let n = self.elements_per_side;
        i == 0 || j == 0 || i == n || j == n
    }

    /// Nodes of element `(ex, ey)` counter-clockwise from the lower left corner.
    pub fn element_nodes(&self, ex: usize, ey: usize) -> [usize; 4] {
        [
            self.node(ex, ey),
            self.node(ex + 1, ey),
            self.node(ex + 1, ey + 1),
            self.node(ex, ey + 1),
        ]
    }
}

/// Structured decomposition geometry: `K x K` square subdomains of `m x m` elements.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubdomainLayout {
    pub subdomains_per_side: usize,
    pub elements_per_subdomain: usize,
}

impl SubdomainLayout {
    pub fn grid(&self) -> Result<GridSpec> {
        GridSpec::new(self.subdomains_per_side * self.elements_per_subdomain)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CoefficientKind {
    #[default]
    Constant,
    Inclusions,
    Channels,
}

impl std::str::FromStr for CoefficientKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "constant" => Ok(CoefficientKind::Constant),
            "inclusions" => Ok(CoefficientKind::Inclusions),
            "channels" => Ok(CoefficientKind::Channels),
            other => Err(Error::Input(format!("unknown coefficient kind `{other}`"))),
        }
    }
}

/// Geometry parameters of the high-coefficient regions, in elements.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Geometry {
    None,
    /// Square block of `block x block` elements centred on every interior coarse node.
    Inclusions {
        block: usize,
    },
    /// `per_subdomain` horizontal stripes of `width` element rows in each
    /// subdomain row, stopping `margin` elements short of the left and right boundary.
    Channels {
        per_subdomain: usize,
        width: usize,
        #[serde(default)]
        margin: usize,
    },
}

impl Geometry {
    /// Default inclusion block: a quarter of the subdomain width.
    pub fn default_inclusions(elements_per_subdomain: usize) -> Self {
        Geometry::Inclusions {
            block: elements_per_subdomain / 4,
        }
    }

    /// Default channels: two stripes per subdomain row, an eighth of the subdomain wide.
    pub fn default_channels(elements_per_subdomain: usize) -> Self {
        Geometry::Channels {
            per_subdomain: 2,
            width: (elements_per_subdomain / 8).max(1),
            margin: 0,
        }
    }
}

/// Element-wise constant coefficient, row-major over elements (`ey * n + ex`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientField {
    pub kind: CoefficientKind,
    pub geometry: Geometry,
    pub background: f64,
    pub contrast: f64,
    elements_per_side: usize,
    values: Vec<f64>,
}

impl CoefficientField {
    pub fn constant(grid: GridSpec, value: f64) -> Self {
        CoefficientField {
            kind: CoefficientKind::Constant,
            geometry: Geometry::None,
            background: value,
            contrast: 1.0,
            elements_per_side: grid.elements_per_side(),
            values: vec![value; grid.element_count()],
        }
    }

    pub fn value(&self, ex: usize, ey: usize) -> f64 {
        self.values[ey * self.elements_per_side + ex]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn elements_per_side(&self) -> usize {
        self.elements_per_side
    }

    pub fn high_value(&self) -> f64 {
        self.background * self.contrast
    }

    pub fn count_high(&self) -> usize {
        let high = self.high_value();
        if self.contrast == 1.0 {
            return 0;
        }
        self.values.iter().filter(|&&v| v == high).count()
    }

    /// One line per element row (bottom row first), values separated by spaces.
    pub fn to_grid_string(&self) -> String {
        let mut out = String::new();
        for row in self.values.chunks(self.elements_per_side) {
            let line: Vec<String> = row.iter().map(|v| format!("{v:e}")).collect();
            let _ = writeln!(out, "{}", line.join(" "));
        }
        out
    }

    pub fn write_grid(&self, path: impl AsRef<Path>) -> Result<()> {
        Ok(fs::write(path, self.to_grid_string())?)
    }

    /// Builds the field for a layout from its kind, using default geometry
    /// when `geometry` is `None`.
    pub fn for_layout(
        kind: CoefficientKind,
        layout: SubdomainLayout,
        geometry: Option<Geometry>,
        contrast: f64,
    ) -> Result<Self> {
        let m = layout.elements_per_subdomain;
        match kind {
            CoefficientKind::Constant => Ok(Self::constant(layout.grid()?, 1.0)),
            CoefficientKind::Inclusions => {
                let g = geometry.unwrap_or_else(|| Geometry::default_inclusions(m));
                let Geometry::Inclusions { block } = g else {
                    return Err(Error::Input("inclusions need an inclusion geometry".into()));
                };
                coefficient_inclusions(layout, block, contrast)
            }
            CoefficientKind::Channels => {
                let g = geometry.unwrap_or_else(|| Geometry::default_channels(m));
                let Geometry::Channels {
                    per_subdomain,
                    width,
                    margin,
                } = g
                else {
                    return Err(Error::Input("channels need a channel geometry".into()));
                };
                coefficient_channels(layout, per_subdomain, width, margin, contrast)
            }
        }
    }
}

/// High-coefficient `block x block` squares centred on the interior coarse nodes.
pub fn coefficient_inclusions(layout: SubdomainLayout, block: usize, contrast: f64) -> Result<CoefficientField> {
    let grid = layout.grid()?;
    let m = layout.elements_per_subdomain;
    if block > m {
        return Err(Error::Input(format!(
            "inclusion block of {block} elements exceeds subdomain size {m}"
        )));
    }
    let mut field = CoefficientField::constant(grid, 1.0);
    field.kind = CoefficientKind::Inclusions;
    field.geometry = Geometry::Inclusions { block };
    field.contrast = contrast;
    let n = grid.elements_per_side();
    let k = layout.subdomains_per_side;
    for cy in 1..k {
        for cx in 1..k {
            let (x0, y0) = (cx * m - block / 2, cy * m - block / 2);
            for ey in y0..y0 + block {
                for ex in x0..x0 + block {
                    field.values[ey * n + ex] = contrast;
                }
            }
        }
    }
    Ok(field)
}

/// Horizontal stripes, `per_subdomain` per subdomain row, each `width`
/// element rows thick, centred-ish at `(2j + 1) m / (2 per_subdomain)`.
/// With `margin = 0` they span the full domain width.
pub fn coefficient_channels(
    layout: SubdomainLayout,
    per_subdomain: usize,
    width: usize,
    margin: usize,
    contrast: f64,
) -> Result<CoefficientField> {
    let grid = layout.grid()?;
    let m = layout.elements_per_subdomain;
    let mut field = CoefficientField::constant(grid, 1.0);
    field.kind = CoefficientKind::Channels;
    field.geometry = Geometry::Channels {
        per_subdomain,
        width,
        margin,
    };
    field.contrast = contrast;
    if per_subdomain == 0 {
        return Ok(field);
    }
    if width == 0 {
        return Err(Error::Input("channel width must be positive".into()));
    }
    let offsets: Vec<usize> = (0..per_subdomain)
        .map(|j| (2 * j + 1) * m / (2 * per_subdomain))
        .collect();
    for (j, &off) in offsets.iter().enumerate() {
        // node rows off..=off+width must stay strictly between coarse node rows
        if off == 0 || off + width >= m {
            return Err(Error::Input(format!(
                "channel {j} (rows {off}..{}) touches a coarse node row of a {m}-element subdomain",
                off + width
            )));
        }
        if j > 0 && offsets[j - 1] + width > off {
            return Err(Error::Input(format!("channels {} and {j} overlap", j - 1)));
        }
    }
    let n = grid.elements_per_side();
    if 2 * margin >= n {
        return Err(Error::Input(format!(
            "channel margin {margin} leaves no stripe on {n} elements"
        )));
    }
    for row in 0..layout.subdomains_per_side {
        for &off in &offsets {
            for ey in row * m + off..row * m + off + width {
                field.values[ey * n + margin..(ey + 1) * n - margin].fill(contrast);
            }
        }
    }
    Ok(field)
}

/// Assembled system after zero-Dirichlet elimination.
#[derive(Debug, Clone)]
pub struct DiscreteProblem {
    pub grid: GridSpec,
    pub a: SparseMatrix,
    pub b: Vec<f64>,
    /// Global node indices of the free (non-boundary) nodes, in dof order.
    pub free_dofs: IndexSet,
}

impl DiscreteProblem {
    pub fn n_dofs(&self) -> usize {
        self.free_dofs.len()
    }

    /// Grid position `(i, j)` of dof `d`.
    pub fn dof_position(&self, d: usize) -> (usize, usize) {
        self.grid.node_position(self.free_dofs.as_slice()[d])
    }

    pub fn dof_at(&self, i: usize, j: usize) -> Option<usize> {
        if self.grid.is_boundary_node(i, j) || i > self.grid.elements_per_side() || j > self.grid.elements_per_side() {
            return None;
        }
        let n = self.grid.elements_per_side();
        Some((j - 1) * (n - 1) + (i - 1))
    }

    /// True when no neighbour of the dof in the grid lies on the boundary.
    pub fn stencil_avoids_boundary(&self, d: usize) -> bool {
        let (i, j) = self.dof_position(d);
        let n = self.grid.elements_per_side();
        i >= 2 && j >= 2 && i + 2 <= n && j + 2 <= n
    }

    /// Expands a dof vector to the full node grid (zeros on the boundary).
    pub fn to_node_values(&self, x: &[f64]) -> Vec<f64> {
        let mut full = vec![0.0; self.grid.node_count()];
        for (d, node) in self.free_dofs.iter().enumerate() {
            full[node] = x[d];
        }
        full
    }
}

/// Element stiffness of the bilinear element on a square, unit coefficient.
/// Independent of the element size in two dimensions.
const Q1_STIFFNESS: [[f64; 4]; 4] = {
    const D: f64 = 2.0 / 3.0;
    const S: f64 = -1.0 / 6.0;
    const O: f64 = -1.0 / 3.0;
    [[D, S, O, S], [S, D, S, O], [O, S, D, S], [S, O, S, D]]
};

fn free_numbering(grid: GridSpec) -> (IndexSet, Vec<usize>) {
    let n = grid.elements_per_side();
    let mut dof_of_node = vec![usize::MAX; grid.node_count()];
    let mut free = Vec::with_capacity((n - 1) * (n - 1));
    for j in 1..n {
        for i in 1..n {
            let node = grid.node(i, j);
            dof_of_node[node] = free.len();
            free.push(node);
        }
    }
    (IndexSet::from_sorted(free), dof_of_node)
}

/// Q1 stiffness matrix and load vector for constant source `f`, boundary
/// rows and columns eliminated.
pub fn assemble(grid: GridSpec, coeff: &CoefficientField, f: f64) -> Result<DiscreteProblem> {
    let n = grid.elements_per_side();
    if coeff.elements_per_side() != n {
        return Err(Error::Input(format!(
            "coefficient defined on {} elements per side, grid has {n}",
            coeff.elements_per_side()
        )));
    }
    let (free_dofs, dof_of_node) = free_numbering(grid);
    let ndofs = free_dofs.len();
    let load = f * grid.h() * grid.h() / 4.0;
    let mut triplets = Vec::with_capacity(16 * n * n);
    let mut b = vec![0.0; ndofs];
    for ey in 0..n {
        for ex in 0..n {
            let alpha = coeff.value(ex, ey);
            let nodes = grid.element_nodes(ex, ey);
            for (p, &np) in nodes.iter().enumerate() {
                let dp = dof_of_node[np];
                if dp == usize::MAX {
                    continue;
                }
                b[dp] += load;
                for (q, &nq) in nodes.iter().enumerate() {
                    let dq = dof_of_node[nq];
                    if dq != usize::MAX {
                        triplets.push((dp, dq, alpha * Q1_STIFFNESS[p][q]));
                    }
                }
            }
        }
    }
    let a = SparseMatrix::from_triplets(ndofs, ndofs, &triplets)?;
    Ok(DiscreteProblem { grid, a, b, free_dofs })
}

/// Five-point finite-difference Laplacian (unit coefficient, scaled by `h²`)
/// on the same grid and dof numbering as [`assemble`].
pub fn five_point_laplacian(grid: GridSpec, f: f64) -> DiscreteProblem {
    let n = grid.elements_per_side();
    let (free_dofs, dof_of_node) = free_numbering(grid);
    let ndofs = free_dofs.len();
    let mut triplets = Vec::with_capacity(5 * ndofs);
    for j in 1..n {
        for i in 1..n {
            let d = dof_of_node[grid.node(i, j)];
            triplets.push((d, d, 4.0));
            for (ni, nj) in [(i - 1, j), (i + 1, j), (i, j - 1), (i, j + 1)] {
                let dn = dof_of_node[grid.node(ni, nj)];
                if dn != usize::MAX {
                    triplets.push((d, dn, -1.0));
                }
            }
        }
    }
    let a = SparseMatrix::from_triplets(ndofs, ndofs, &triplets).expect("stencil in range");
    DiscreteProblem {
        grid,
        a,
        b: vec![f * grid.h() * grid.h(); ndofs],
        free_dofs,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sparse::factorize;

    fn layout(k: usize, m: usize) -> SubdomainLayout {
        SubdomainLayout {
            subdomains_per_side: k,
            elements_per_subdomain: m,
        }
    }

    /// Element stiffness by 2x2 Gauss quadrature of the bilinear basis gradients.
    fn quadrature_element_stiffness(h: f64) -> [[f64; 4]; 4] {
        let corners = [(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)];
        let g = 0.5 / 3f64.sqrt();
        let pts = [0.5 - g, 0.5 + g];
        let mut k = [[0.0; 4]; 4];
        for &s in &pts {
            for &t in &pts {
                let grad = |c: (f64, f64)| {
                    let sx = if c.0 == 0.0 { -1.0 } else { 1.0 };
                    let sy = if c.1 == 0.0 { -1.0 } else { 1.0 };
                    let fx = if c.0 == 0.0 { 1.0 - s } else { s };
                    let fy = if c.1 == 0.0 { 1.0 - t } else { t };
                    (sx * fy / h, sy * fx / h)
                };
                for p in 0..4 {
                    for q in 0..4 {
                        let (gp, gq) = (grad(corners[p]), grad(corners[q]));
                        k[p][q] += 0.25 * h * h * (gp.0 * gq.0 + gp.1 * gq.1);
                    }
                }
            }
        }
        k
    }

    #[test]
    fn grid_rejects_tiny() {
        assert!(GridSpec::new(1).is_err());
        let g = GridSpec::new(3).unwrap();
        assert_eq!(g.node_count(), 16);
        assert_eq!(g.element_count(), 9);
    }

    #[test]
    fn two_by_two_grid_has_single_dof() {
        let grid = GridSpec::new(2).unwrap();
        let p = assemble(grid, &CoefficientField::constant(grid, 1.0), 1.0).unwrap();
        assert_eq!(p.n_dofs(), 1);
        assert!((p.a.get(0, 0) - 8.0 / 3.0).abs() < 1e-15);
        assert!((p.b[0] - 0.25).abs() < 1e-15);
        let x = factorize(&p.a, true).unwrap().solve(&p.b).unwrap();
        assert!((x[0] - 3.0 / 32.0).abs() < 1e-16);
    }

    #[test]
    fn stiffness_scales_with_coefficient() {
        let grid = GridSpec::new(5).unwrap();
        let one = assemble(grid, &CoefficientField::constant(grid, 1.0), 1.0).unwrap();
        let c = 3.7;
        let scaled = assemble(grid, &CoefficientField::constant(grid, c), 1.0).unwrap();
        for (x, y) in one.a.values().iter().zip(scaled.a.values()) {
            assert!((c * x - y).abs() <= 1e-15 * y.abs().max(1.0));
        }
    }

    #[test]
    fn matches_dense_quadrature_assembly() {
        let n = 4;
        let grid = GridSpec::new(n).unwrap();
        let p = assemble(grid, &CoefficientField::constant(grid, 1.0), 1.0).unwrap();
        let k = quadrature_element_stiffness(grid.h());
        let nn = n + 1;
        let mut full = nalgebra::DMatrix::<f64>::zeros(nn * nn, nn * nn);
        for ey in 0..n {
            for ex in 0..n {
                let nodes = [
                    ey * nn + ex,
                    ey * nn + ex + 1,
                    (ey + 1) * nn + ex + 1,
                    (ey + 1) * nn + ex,
                ];
                for p in 0..4 {
                    for q in 0..4 {
                        full[(nodes[p], nodes[q])] += k[p][q];
                    }
                }
            }
        }
        let dense = p.a.to_dense();
        for (dp, np) in p.free_dofs.iter().enumerate() {
            for (dq, nq) in p.free_dofs.iter().enumerate() {
                assert!((dense[(dp, dq)] - full[(np, nq)]).abs() <= 1e-14);
            }
        }
    }

    #[test]
    fn symmetric_with_interior_zero_row_sums() {
        let l = layout(4, 8);
        for kind in [
            CoefficientKind::Constant,
            CoefficientKind::Inclusions,
            CoefficientKind::Channels,
        ] {
            let field = CoefficientField::for_layout(kind, l, None, 1e8).unwrap();
            let p = assemble(l.grid().unwrap(), &field, 1.0).unwrap();
            assert!(p.a.is_symmetric());
            let sums = p.a.row_sums();
            for d in 0..p.n_dofs() {
                if p.stencil_avoids_boundary(d) {
                    let scale = p.a.row(d).fold(0.0f64, |m, (_, v)| m.max(v.abs()));
                    assert!(sums[d].abs() <= 1e-12 * scale, "dof {d}: {}", sums[d]);
                }
            }
            factorize(&p.a, true).unwrap();
        }
    }

    #[test]
    fn inclusions_counting() {
        let empty = coefficient_inclusions(layout(4, 8), 0, 1e8).unwrap();
        assert!(empty.values().iter().all(|&v| v == 1.0));

        let f = coefficient_inclusions(layout(4, 8), 2, 1e8).unwrap();
        assert_eq!(f.count_high(), 36);
        // every high element touches a coarse node
        for ey in 0..32 {
            for ex in 0..32 {
                if f.value(ex, ey) == 1e8 {
                    let near = |e: usize| e % 8 == 7 || e % 8 == 0;
                    assert!(near(ex) && near(ey) && ex > 0 && ey > 0);
                }
            }
        }
        assert!(coefficient_inclusions(layout(4, 8), 9, 1e8).is_err());
    }

    #[test]
    fn channels_counting() {
        let none = coefficient_channels(layout(4, 8), 0, 1, 0, 1e8).unwrap();
        assert!(none.values().iter().all(|&v| v == 1.0));

        let f = coefficient_channels(layout(4, 8), 2, 1, 0, 1e8).unwrap();
        assert_eq!(f.count_high(), 256);
        let rows: Vec<usize> = (0..32).filter(|&ey| f.value(0, ey) == 1e8).collect();
        assert_eq!(rows, vec![2, 6, 10, 14, 18, 22, 26, 30]);
        for &ey in &rows {
            // full width, hence across every vertical subdomain edge
            assert!((0..32).all(|ex| f.value(ex, ey) == 1e8));
            // neither bounding node row is a coarse node row
            assert!(ey % 8 != 0 && (ey + 1) % 8 != 0);
        }
        assert!(coefficient_channels(layout(4, 8), 2, 3, 0, 1e8).is_err());
        assert!(coefficient_channels(layout(4, 4), 3, 1, 0, 1e8).is_err());
    }

    #[test]
    fn coefficient_dump_shape() {
        let f = coefficient_channels(layout(2, 8), 2, 1, 0, 100.0).unwrap();
        let text = f.to_grid_string();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 16);
        assert!(lines.iter().all(|l| l.split_whitespace().count() == 16));
        assert!(lines[2].starts_with("1e2"));
    }

    #[test]
    fn five_point_rows() {
        let grid = GridSpec::new(4).unwrap();
        let p = five_point_laplacian(grid, 1.0);
        assert_eq!(p.n_dofs(), 9);
        assert_eq!(p.a.get(4, 4), 4.0);
        assert_eq!(p.a.row_sums()[4], 0.0);
        assert!(p.a.is_symmetric());
    }
}
