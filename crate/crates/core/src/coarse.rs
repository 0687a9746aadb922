//! Energy-minimizing coarse spaces.
//!
//! Every space is `Φ = [Φ_I; Φ_Γ]` with `Φ_I = -A_II⁻¹ A_IΓ Φ_Γ`; the spaces
//! differ only in the interface values `Φ_Γ`:
//!
//! * GDSW: indicator of each vertex and edge class (the restricted constant
//!   null space);
//! * RGDSW (option 1): for each vertex-centred component, the inverse of the
//!   number of components a dof belongs to;
//! * AMS: identity on the vertices and, on each edge, the solution of a
//!   reduced edge problem whose diagonal absorbs the dropped couplings.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::decomposition::{ClassKind, DofClass, InterfaceClassification, RgdswComponent};
use crate::error::{Error, Result};
use crate::problem::DiscreteProblem;
use crate::sparse::{
    extract_submatrix, factorize, factorize_m_matrix, row_sum_deficits, spmv, Factorization, IndexSet,
    MMatrixFactorization, SparseMatrix,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CoarseSpaceKind {
    Gdsw,
    Rgdsw,
    Ams,
}

impl CoarseSpaceKind {
    pub const ALL: [CoarseSpaceKind; 3] = [CoarseSpaceKind::Gdsw, CoarseSpaceKind::Rgdsw, CoarseSpaceKind::Ams];

    pub fn name(self) -> &'static str {
        match self {
            CoarseSpaceKind::Gdsw => "gdsw",
            CoarseSpaceKind::Rgdsw => "rgdsw",
            CoarseSpaceKind::Ams => "ams",
        }
    }
}

/// What a coarse column represents.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CoarseDof {
    /// One GDSW function per interface class.
    Class {
        kind: ClassKind,
        index: usize,
    },
    Component(RgdswComponent),
    /// AMS: one function per vertex dof.
    VertexDof {
        class: usize,
        dof: usize,
    },
}

/// Interface values `Φ_Γ`, rows ordered as `InterfaceClassification::gamma`.
#[derive(Debug, Clone)]
pub struct InterfaceValues {
    pub kind: CoarseSpaceKind,
    pub phi_gamma: SparseMatrix,
    pub columns: Vec<CoarseDof>,
}

/// Coarse basis `Φ` (fine dofs x coarse dofs).
#[derive(Debug, Clone)]
pub struct Prolongation {
    pub kind: CoarseSpaceKind,
    pub phi: SparseMatrix,
    pub columns: Vec<CoarseDof>,
}

impl Prolongation {
    pub fn dim(&self) -> usize {
        self.phi.ncols()
    }

    pub fn row_sums(&self) -> Vec<f64> {
        self.phi.row_sums()
    }
}

/// Extends interface values into the subdomain interiors:
/// `Φ_I = -A_II⁻¹ A_IΓ Φ_Γ`, one subdomain block of `A_II` at a time.
pub fn harmonic_extension(
    a: &SparseMatrix,
    cls: &InterfaceClassification,
    values: &InterfaceValues,
) -> Result<Prolongation> {
    let n = a.nrows();
    let ncoarse = values.phi_gamma.ncols();
    if values.phi_gamma.nrows() != cls.gamma.len() {
        return Err(Error::DimensionMismatch {
            op: "harmonic_extension",
            expected: cls.gamma.len(),
            got: values.phi_gamma.nrows(),
        });
    }
    let mut triplets = Vec::new();
    for (s, interior) in cls.subdomain_interiors.iter().enumerate() {
        if interior.is_empty() || ncoarse == 0 {
            continue;
        }
        let a_ig = extract_submatrix(a, interior, &cls.gamma)?;
        // columns of A_IΓ Φ_Γ, one row per coarse dof
        let coupling = a_ig.matmul(&values.phi_gamma)?.transpose();
        if coupling.nnz() == 0 {
            continue;
        }
        let a_ii = extract_submatrix(a, interior, interior)?;
        let factor = factorize(&a_ii, true).map_err(|e| e.in_block(format!("interior of subdomain {s}")))?;
        let mut rhs = vec![0.0; interior.len()];
        for c in 0..ncoarse {
            if coupling.row_cols(c).is_empty() {
                continue;
            }
            rhs.fill(0.0);
            for (r, v) in coupling.row(c) {
                rhs[r] = -v;
            }
            factor.solve_in_place(&mut rhs);
            for (r, &v) in rhs.iter().enumerate() {
                if v != 0.0 {
                    triplets.push((interior.as_slice()[r], c, v));
                }
            }
        }
    }
    for (p, d) in cls.gamma.iter().enumerate() {
        for (c, v) in values.phi_gamma.row(p) {
            triplets.push((d, c, v));
        }
    }
    Ok(Prolongation {
        kind: values.kind,
        phi: SparseMatrix::from_triplets(n, ncoarse, &triplets)?,
        columns: values.columns.clone(),
    })
}

/// GDSW: one column per vertex and edge class holding the class indicator.
pub fn gdsw_interface_values(cls: &InterfaceClassification) -> InterfaceValues {
    let mut columns: Vec<CoarseDof> = (0..cls.vertices.len())
        .map(|index| CoarseDof::Class {
            kind: ClassKind::Vertex,
            index,
        })
        .collect();
    let first_edge = columns.len();
    columns.extend((0..cls.edges.len()).map(|index| CoarseDof::Class {
        kind: ClassKind::Edge,
        index,
    }));
    let triplets: Vec<_> = cls
        .gamma
        .iter()
        .enumerate()
        .map(|(p, d)| match cls.dof_class[d] {
            DofClass::Vertex(k) => (p, k, 1.0),
            DofClass::Edge(k) => (p, first_edge + k, 1.0),
            DofClass::Interior { .. } => unreachable!("gamma dofs are classified"),
        })
        .collect();
    InterfaceValues {
        kind: CoarseSpaceKind::Gdsw,
        phi_gamma: SparseMatrix::from_triplets(cls.gamma.len(), columns.len(), &triplets)
            .expect("class columns in range"),
        columns,
    }
}

/// RGDSW option 1: value `1 / |ancestry(dof)|` in each of the dof's components.
pub fn rgdsw_interface_values(cls: &InterfaceClassification) -> InterfaceValues {
    let mut triplets = Vec::new();
    for (p, anc) in cls.ancestry.iter().enumerate() {
        let w = cls.rgdsw_weight(p);
        for &c in anc {
            triplets.push((p, c, w));
        }
    }
    let columns: Vec<CoarseDof> = cls.rgdsw_components.iter().copied().map(CoarseDof::Component).collect();
    InterfaceValues {
        kind: CoarseSpaceKind::Rgdsw,
        phi_gamma: SparseMatrix::from_triplets(cls.gamma.len(), columns.len(), &triplets)
            .expect("component columns in range"),
        columns,
    }
}

/// AMS columns (one per vertex dof, ordered by vertex class) and the map
/// vertex dof -> column.
fn ams_columns(cls: &InterfaceClassification) -> (Vec<CoarseDof>, Vec<usize>) {
    let mut columns = Vec::new();
    let mut column_of = vec![usize::MAX; cls.n_dofs()];
    for (k, v) in cls.vertices.iter().enumerate() {
        for d in v.dofs.iter() {
            column_of[d] = columns.len();
            columns.push(CoarseDof::VertexDof { class: k, dof: d });
        }
    }
    (columns, column_of)
}

/// Solver for a reduced edge block: the cancellation-free M-matrix
/// factorization when the block allows it, Cholesky otherwise.
enum EdgeSolver {
    MMatrix(MMatrixFactorization),
    General(Factorization),
}

impl EdgeSolver {
    /// `weights` are the kept off-diagonal couplings negated, `deficits` the
    /// row sums of the reduced block; `lumped` assembles the block for the
    /// general path.
    fn new(weights: SparseMatrix, deficits: &[f64], lumped: impl FnOnce() -> Result<SparseMatrix>) -> Result<Self> {
        let m_matrix = weights.values().iter().all(|&w| w >= 0.0) && deficits.iter().all(|&d| d >= 0.0);
        if m_matrix {
            Ok(EdgeSolver::MMatrix(factorize_m_matrix(&weights, deficits)?))
        } else {
            Ok(EdgeSolver::General(factorize(&lumped()?, true)?))
        }
    }

    fn solve_in_place(&self, x: &mut [f64]) {
        match self {
            EdgeSolver::MMatrix(f) => f.solve_in_place(x),
            EdgeSolver::General(f) => f.solve_in_place(x),
        }
    }
}

/// AMS interface values: `Φ_V = I` and, per edge class,
/// `Φ_E = -Ã_EE⁻¹ A_EV Φ_V` with
/// `Ã_EE = A_EE + diag(A_EI 1) + diag(A_EE' 1)`, where `E'` collects the
/// other edge classes.
///
/// Couplings to other edge classes (present for Q1 stencils at the corners
/// around a vertex) are dropped and lumped like the interior couplings, so
/// each edge class is solved independently. Edge classes without a
/// neighbouring vertex get zero rows.
///
/// The diagonal of `Ã_EE` is never formed explicitly when the block is an
/// M-matrix: its row sums are `(A 1)_e - (A_EV 1)_e`, taken from the
/// rounding-cleaned row sums of `A`.
pub fn ams_interface_values(a: &SparseMatrix, cls: &InterfaceClassification) -> Result<InterfaceValues> {
    let (columns, column_of) = ams_columns(cls);
    let gamma_pos = cls.gamma.local_map(cls.n_dofs());
    let row_deficit = row_sum_deficits(a);
    let mut triplets = Vec::new();
    for v in cls.vertex_dofs().iter() {
        triplets.push((gamma_pos[v], column_of[v], 1.0));
    }
    for (k, edge) in cls.edges.iter().enumerate() {
        if cls.edge_vertices[k].is_empty() {
            continue;
        }
        let local = edge.dofs.local_map(cls.n_dofs());
        let m = edge.dofs.len();
        let mut weights = Vec::new();
        let mut reduced = Vec::new();
        let mut deficits = Vec::with_capacity(m);
        let mut vertex_coupling = Vec::new();
        for (r, e) in edge.dofs.iter().enumerate() {
            let mut lumped = 0.0;
            let mut deficit = row_deficit[e];
            for (c, val) in a.row(e) {
                if local[c] != usize::MAX {
                    reduced.push((r, local[c], val));
                    if local[c] != r {
                        weights.push((r, local[c], -val));
                    }
                } else if matches!(cls.dof_class[c], DofClass::Vertex(_)) {
                    vertex_coupling.push((column_of[c], r, val));
                    deficit -= val;
                } else {
                    lumped += val;
                }
            }
            reduced.push((r, r, lumped));
            deficits.push(deficit);
        }
        let solver = EdgeSolver::new(SparseMatrix::from_triplets(m, m, &weights)?, &deficits, || {
            SparseMatrix::from_triplets(m, m, &reduced)
        })
        .map_err(|e| e.in_block(format!("AMS edge class {k}")))?;
        vertex_coupling.sort_by_key(|&(col, r, _)| (col, r));
        let mut rhs = vec![0.0; m];
        for chunk in vertex_coupling.chunk_by(|x, y| x.0 == y.0) {
            rhs.fill(0.0);
            for &(_, r, val) in chunk {
                rhs[r] -= val;
            }
            solver.solve_in_place(&mut rhs);
            for (r, &x) in rhs.iter().enumerate() {
                if x != 0.0 {
                    triplets.push((gamma_pos[edge.dofs.as_slice()[r]], chunk[0].0, x));
                }
            }
        }
    }
    Ok(InterfaceValues {
        kind: CoarseSpaceKind::Ams,
        phi_gamma: SparseMatrix::from_triplets(cls.gamma.len(), columns.len(), &triplets)?,
        columns,
    })
}

/// AMS prolongation by block backward substitution over the global
/// `I / E / V` blocks:
/// `Φ_V = I`, `Φ_E = -Ã_EE⁻¹ A_EV`, `Φ_I = -A_II⁻¹ (A_IV + A_IE Φ_E)`.
///
/// Uses whole-domain block factorizations instead of the per-edge and
/// per-subdomain solves of [`ams_interface_values`] + [`harmonic_extension`].
pub fn ams_prolongation_direct(a: &SparseMatrix, cls: &InterfaceClassification) -> Result<Prolongation> {
    let n = a.nrows();
    let (columns, column_of) = ams_columns(cls);
    let nv = columns.len();
    let interior = &cls.interior;
    let vertex_dofs: Vec<usize> = columns
        .iter()
        .map(|c| match c {
            CoarseDof::VertexDof { dof, .. } => *dof,
            _ => unreachable!(),
        })
        .collect();
    let mut edge_dofs: Vec<usize> = cls
        .edges
        .iter()
        .enumerate()
        .filter(|(k, _)| !cls.edge_vertices[*k].is_empty())
        .flat_map(|(_, e)| e.dofs.iter())
        .collect();
    edge_dofs.sort_unstable();
    let edges = IndexSet::from_sorted(edge_dofs);
    let all_vertices = cls.vertex_dofs();

    // Φ_V in column order: selector of the vertex dofs
    let phi_v = SparseMatrix::from_triplets(
        all_vertices.len(),
        nv,
        &all_vertices
            .iter()
            .enumerate()
            .map(|(r, d)| (r, column_of[d], 1.0))
            .collect::<Vec<_>>(),
    )?;

    let a_ee = extract_submatrix(a, &edges, &edges)?;
    let a_ev = extract_submatrix(a, &edges, &all_vertices)?;
    let edge_class = |local: usize| cls.dof_class[edges.as_slice()[local]];
    let within = a_ee.filter(|r, c| edge_class(r) == edge_class(c));
    let across = a_ee.filter(|r, c| edge_class(r) != edge_class(c));
    let mut complement: Vec<usize> = (0..n)
        .filter(|&d| !edges.contains(d) && !all_vertices.contains(d))
        .collect();
    complement.sort_unstable();
    // interior dofs plus edge dofs of vertex-less classes
    let complement = IndexSet::from_sorted(complement);
    let a_ei = extract_submatrix(a, &edges, &complement)?;

    let row_deficit = row_sum_deficits(a);
    let vertex_sums = spmv(&a_ev, &vec![1.0; all_vertices.len()])?;
    let deficits: Vec<f64> = edges
        .iter()
        .zip(&vertex_sums)
        .map(|(e, s)| row_deficit[e] - s)
        .collect();
    let weights = within.filter(|r, c| r != c).scale(-1.0);

    let mut triplets = Vec::new();
    let mut phi_e_triplets = Vec::new();
    if !edges.is_empty() {
        let solver = EdgeSolver::new(weights, &deficits, || {
            let mut lump = spmv(&a_ei, &vec![1.0; complement.len()])?;
            for (l, s) in lump.iter_mut().zip(spmv(&across, &vec![1.0; edges.len()])?) {
                *l += s;
            }
            within.add(&SparseMatrix::from_diagonal(&lump))
        })
        .map_err(|e| e.in_block("reduced edge block"))?;
        let rhs_e = a_ev.matmul(&phi_v)?.transpose();
        let mut x = vec![0.0; edges.len()];
        for c in 0..nv {
            x.fill(0.0);
            for (r, v) in rhs_e.row(c) {
                x[r] = -v;
            }
            solver.solve_in_place(&mut x);
            for (r, &v) in x.iter().enumerate() {
                if v != 0.0 {
                    phi_e_triplets.push((r, c, v));
                    triplets.push((edges.as_slice()[r], c, v));
                }
            }
        }
    }
    let phi_e = SparseMatrix::from_triplets(edges.len(), nv, &phi_e_triplets)?;

    if !interior.is_empty() && nv > 0 {
        let a_ii = extract_submatrix(a, interior, interior)?;
        let a_iv = extract_submatrix(a, interior, &all_vertices)?;
        let a_ie = extract_submatrix(a, interior, &edges)?;
        let rhs_i = a_iv.matmul(&phi_v)?.add(&a_ie.matmul(&phi_e)?)?.transpose();
        let factor_i = factorize(&a_ii, true).map_err(|e| e.in_block("interior block"))?;
        let mut x = vec![0.0; interior.len()];
        for c in 0..nv {
            x.fill(0.0);
            for (r, v) in rhs_i.row(c) {
                x[r] = -v;
            }
            factor_i.solve_in_place(&mut x);
            for (r, &v) in x.iter().enumerate() {
                if v != 0.0 {
                    triplets.push((interior.as_slice()[r], c, v));
                }
            }
        }
    }
    for (c, &d) in vertex_dofs.iter().enumerate() {
        triplets.push((d, c, 1.0));
    }
    Ok(Prolongation {
        kind: CoarseSpaceKind::Ams,
        phi: SparseMatrix::from_triplets(n, nv, &triplets)?,
        columns,
    })
}

/// Interface values for `kind` followed by the energy-minimizing extension.
pub fn build_coarse_space(
    kind: CoarseSpaceKind,
    a: &SparseMatrix,
    cls: &InterfaceClassification,
) -> Result<Prolongation> {
    let values = match kind {
        CoarseSpaceKind::Gdsw => gdsw_interface_values(cls),
        CoarseSpaceKind::Rgdsw => rgdsw_interface_values(cls),
        CoarseSpaceKind::Ams => ams_interface_values(a, cls)?,
    };
    harmonic_extension(a, cls, &values)
}

/// `max |A_II Φ_I + A_IΓ Φ_Γ|`, i.e. the largest interior entry of `A Φ`.
pub fn harmonicity_defect(a: &SparseMatrix, cls: &InterfaceClassification, phi: &SparseMatrix) -> Result<f64> {
    let a_i = a.select_rows(cls.interior.as_slice());
    let r = a_i.matmul(phi)?;
    Ok(r.max_abs())
}

/// Dofs whose row of `Φ` must sum to one for the given space.
///
/// Constants are reproduced wherever the construction never sees a row of
/// `A` coupled to the eliminated Dirichlet nodes: Γ rows for GDSW and RGDSW,
/// vertex rows and Dirichlet-free edge classes for AMS, and the interiors of
/// subdomains whose interior rows are Dirichlet-free and whose neighbouring
/// Γ rows qualify.
pub fn unit_row_sum_region(a: &SparseMatrix, cls: &InterfaceClassification, kind: CoarseSpaceKind) -> Vec<bool> {
    let n = cls.n_dofs();
    let free: Vec<bool> = row_sum_deficits(a).iter().map(|&d| d == 0.0).collect();
    let mut ok = vec![false; n];
    for d in cls.gamma.iter() {
        ok[d] = match (kind, cls.dof_class[d]) {
            (CoarseSpaceKind::Gdsw | CoarseSpaceKind::Rgdsw, _) => true,
            (CoarseSpaceKind::Ams, DofClass::Vertex(_)) => true,
            (CoarseSpaceKind::Ams, DofClass::Edge(k)) => {
                !cls.edge_vertices[k].is_empty() && cls.edges[k].dofs.iter().all(|e| free[e])
            }
            (_, DofClass::Interior { .. }) => unreachable!("gamma dofs are classified"),
        };
    }
    for interior in &cls.subdomain_interiors {
        let qualifies = interior
            .iter()
            .all(|d| free[d] && a.row_cols(d).iter().all(|&c| !cls.gamma.contains(c) || ok[c]));
        for d in interior.iter() {
            ok[d] = qualifies;
        }
    }
    ok
}

/// Column `c` of `Φ` on the full node grid, one line per node row (bottom first).
pub fn basis_raster(problem: &DiscreteProblem, prolongation: &Prolongation, c: usize) -> String {
    let full = problem.to_node_values(&prolongation.phi.column(c));
    let per_row = problem.grid.nodes_per_side();
    let mut out = String::new();
    for row in full.chunks(per_row) {
        let line: Vec<String> = row.iter().map(|v| format!("{v:.6e}")).collect();
        let _ = writeln!(out, "{}", line.join(" "));
    }
    out
}

/// All columns as raster blocks headed by `# space=<kind> column=<c>`.
pub fn basis_rasters(problem: &DiscreteProblem, prolongation: &Prolongation) -> String {
    let mut out = String::new();
    for c in 0..prolongation.dim() {
        let _ = writeln!(out, "# space={} column={c}", prolongation.kind.name());
        out.push_str(&basis_raster(problem, prolongation, c));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decomposition::{classify_interface, partition_structured};
    use crate::problem::{
        assemble, coefficient_channels, five_point_laplacian, CoefficientField, GridSpec, SubdomainLayout,
    };
    use nalgebra::{DMatrix, DVector};

    fn setup(n: usize, k: usize) -> (DiscreteProblem, InterfaceClassification) {
        let grid = GridSpec::new(n).unwrap();
        let p = assemble(grid, &CoefficientField::constant(grid, 1.0), 1.0).unwrap();
        let dec = partition_structured(grid, k).unwrap();
        let cls = classify_interface(&dec, &p.a).unwrap();
        (p, cls)
    }

    fn channels(k: usize, m: usize, contrast: f64) -> (DiscreteProblem, InterfaceClassification, CoefficientField) {
        let layout = SubdomainLayout {
            subdomains_per_side: k,
            elements_per_subdomain: m,
        };
        let coeff = coefficient_channels(layout, 2, (m / 8).max(1), 0, contrast).unwrap();
        let grid = layout.grid().unwrap();
        let p = assemble(grid, &coeff, 1.0).unwrap();
        let dec = partition_structured(grid, k).unwrap();
        let cls = classify_interface(&dec, &p.a).unwrap();
        (p, cls, coeff)
    }

    fn max_diff(x: &SparseMatrix, y: &SparseMatrix) -> f64 {
        (x.to_dense() - y.to_dense()).amax()
    }

    #[test]
    fn ones_extend_to_ones() {
        let (p, cls) = setup(8, 2);
        let values = InterfaceValues {
            kind: CoarseSpaceKind::Gdsw,
            phi_gamma: SparseMatrix::from_triplets(
                cls.gamma.len(),
                1,
                &(0..cls.gamma.len()).map(|r| (r, 0, 1.0)).collect::<Vec<_>>(),
            )
            .unwrap(),
            columns: vec![CoarseDof::Class {
                kind: ClassKind::Vertex,
                index: 0,
            }],
        };
        // the Neumann-like operator: constant is in its kernel on every interior row
        let a = p.a.filter(|r, c| r != c).add(&SparseMatrix::from_diagonal(
            &p.a.filter(|r, c| r != c)
                .row_sums()
                .iter()
                .map(|s| -s)
                .collect::<Vec<_>>(),
        ));
        let a = a.unwrap();
        let phi = harmonic_extension(&a, &cls, &values).unwrap();
        for d in 0..p.n_dofs() {
            assert!((phi.phi.get(d, 0) - 1.0).abs() < 1e-12, "dof {d}");
        }
    }

    #[test]
    fn single_subdomain_gives_empty_space() {
        let (p, cls) = setup(4, 1);
        assert!(cls.gamma.is_empty());
        for kind in CoarseSpaceKind::ALL {
            let phi = build_coarse_space(kind, &p.a, &cls).unwrap();
            assert_eq!(phi.dim(), 0);
            assert_eq!(phi.phi.nrows(), p.n_dofs());
        }
    }

    #[test]
    fn harmonic_extension_matches_dense_solve() {
        let (p, cls) = setup(8, 2);
        let values = gdsw_interface_values(&cls);
        let phi = harmonic_extension(&p.a, &cls, &values).unwrap();
        let a = p.a.to_dense();
        let ii: Vec<usize> = cls.interior.iter().collect();
        let gg: Vec<usize> = cls.gamma.iter().collect();
        let a_ii = DMatrix::from_fn(ii.len(), ii.len(), |r, c| a[(ii[r], ii[c])]);
        let a_ig = DMatrix::from_fn(ii.len(), gg.len(), |r, c| a[(ii[r], gg[c])]);
        let phi_i = -a_ii.lu().solve(&(a_ig * values.phi_gamma.to_dense())).unwrap();
        for (r, &d) in ii.iter().enumerate() {
            for c in 0..phi.dim() {
                assert!((phi.phi.get(d, c) - phi_i[(r, c)]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn gdsw_two_by_two() {
        let (_, cls) = setup(8, 2);
        let v = gdsw_interface_values(&cls);
        assert_eq!(v.phi_gamma.ncols(), 5);
        for r in 0..cls.gamma.len() {
            let row: Vec<_> = v.phi_gamma.row(r).collect();
            assert_eq!(row.len(), 1);
            assert_eq!(row[0].1, 1.0);
        }
    }

    #[test]
    fn rgdsw_weights_on_three_by_three() {
        let (p, cls) = setup(12, 3);
        let v = rgdsw_interface_values(&cls);
        assert_eq!(v.phi_gamma.ncols(), 4);
        let sums = v.phi_gamma.row_sums();
        assert!(sums.iter().all(|s| (s - 1.0).abs() < 1e-15));
        let mut halves = 0;
        for (pos, d) in cls.gamma.iter().enumerate() {
            let row: Vec<_> = v.phi_gamma.row(pos).collect();
            match cls.dof_class[d] {
                DofClass::Vertex(k) => assert_eq!(row, vec![(k, 1.0)]),
                DofClass::Edge(k) if cls.edge_vertices[k].len() == 2 => {
                    assert_eq!(row.len(), 2);
                    assert!(row.iter().all(|&(_, w)| w == 0.5));
                    halves += 1;
                }
                _ => {}
            }
        }
        // the four edges of the central square, 3 dofs each
        assert_eq!(halves, 12);
        let gdsw = gdsw_interface_values(&cls).phi_gamma.ncols();
        let ams = ams_interface_values(&p.a, &cls).unwrap().phi_gamma.ncols();
        assert!(v.phi_gamma.ncols() <= gdsw);
        assert_eq!(ams, v.phi_gamma.ncols());
        assert_eq!(gdsw, cls.vertices.len() + cls.edges.len());
    }

    #[test]
    fn ams_constant_coefficient_edges_are_ramps() {
        let (p, cls) = setup(12, 3);
        let v = ams_interface_values(&p.a, &cls).unwrap();
        let gamma_pos = cls.gamma.local_map(cls.n_dofs());
        let mut checked = 0;
        for (k, edge) in cls.edges.iter().enumerate() {
            if cls.edge_vertices[k].len() != 2 {
                continue;
            }
            for &vk in &cls.edge_vertices[k] {
                let vdof = cls.vertices[vk].dofs.as_slice()[0];
                let (vi, vj) = p.dof_position(vdof);
                let col = v
                    .columns
                    .iter()
                    .position(|c| matches!(c, CoarseDof::VertexDof { dof, .. } if *dof == vdof))
                    .unwrap();
                for e in edge.dofs.iter() {
                    let (i, j) = p.dof_position(e);
                    let dist = vi.abs_diff(i) + vj.abs_diff(j);
                    let expected = 1.0 - dist as f64 / 4.0;
                    assert!((v.phi_gamma.get(gamma_pos[e], col) - expected).abs() < 1e-13);
                    checked += 1;
                }
            }
        }
        assert_eq!(checked, 4 * 3 * 2);
        // row sums of the interface part where every edge has a vertex
        for (pos, s) in v.phi_gamma.row_sums().iter().enumerate() {
            let d = cls.gamma.as_slice()[pos];
            if let DofClass::Edge(k) = cls.dof_class[d] {
                if cls.edge_vertices[k].len() == 2 {
                    assert!((s - 1.0).abs() < 1e-13);
                }
            }
        }
    }

    #[test]
    fn ams_edges_adapt_to_channels() {
        // moderate contrast keeps the dense oracle itself accurate
        let (p, cls, coeff) = channels(2, 8, 1e4);
        let v = ams_interface_values(&p.a, &cls).unwrap();
        assert_eq!(v.columns.len(), 1);
        let gamma_pos = cls.gamma.local_map(cls.n_dofs());
        let mut saw_stripe = false;
        for (k, edge) in cls.edges.iter().enumerate() {
            let dofs = edge.dofs.as_slice();
            // dense oracle: reduced edge block from the full matrix
            let a = p.a.to_dense();
            let m = dofs.len();
            let mut red = DMatrix::<f64>::zeros(m, m);
            let mut rhs = DVector::<f64>::zeros(m);
            for r in 0..m {
                for c in 0..cls.n_dofs() {
                    let val = a[(dofs[r], c)];
                    if let Some(lc) = dofs.iter().position(|&x| x == c) {
                        red[(r, lc)] += val;
                    } else if matches!(cls.dof_class[c], DofClass::Vertex(_)) {
                        rhs[r] -= val;
                    } else {
                        red[(r, r)] += val;
                    }
                }
            }
            let oracle = red.lu().solve(&rhs).unwrap();
            let values: Vec<f64> = dofs.iter().map(|&d| v.phi_gamma.get(gamma_pos[d], 0)).collect();
            for r in 0..m {
                assert!(
                    (values[r] - oracle[r]).abs() < 1e-10 * oracle.amax(),
                    "edge {k} dof {r}"
                );
            }
            // steps along vertical edges: flat across a stripe, steep outside
            let (i0, _) = p.dof_position(dofs[0]);
            if p.dof_position(dofs[1]).0 != i0 {
                continue;
            }
            let mut stripe = Vec::new();
            let mut plain = Vec::new();
            for w in 0..m - 1 {
                let j = p.dof_position(dofs[w]).1.min(p.dof_position(dofs[w + 1]).1);
                let step = (values[w + 1] - values[w]).abs();
                if coeff.value(i0, j) > 1.0 {
                    stripe.push(step);
                } else {
                    plain.push(step);
                }
            }
            if let Some(worst) = stripe.iter().copied().reduce(f64::max) {
                saw_stripe = true;
                let least = plain.iter().copied().fold(f64::INFINITY, f64::min);
                assert!(
                    least > 10.0 * worst,
                    "edge {k}: stripe step {worst}, plain step {least}"
                );
            }
        }
        assert!(saw_stripe);
    }

    #[test]
    fn ams_paths_agree() {
        for (p, cls) in [setup(12, 3), setup(16, 2)] {
            let composed = build_coarse_space(CoarseSpaceKind::Ams, &p.a, &cls).unwrap();
            let direct = ams_prolongation_direct(&p.a, &cls).unwrap();
            assert_eq!(composed.columns, direct.columns);
            assert!(max_diff(&composed.phi, &direct.phi) < 1e-12);
        }
        let (p, cls, _) = channels(3, 8, 1e8);
        let composed = build_coarse_space(CoarseSpaceKind::Ams, &p.a, &cls).unwrap();
        let direct = ams_prolongation_direct(&p.a, &cls).unwrap();
        assert!(max_diff(&composed.phi, &direct.phi) < 1e-12);
    }

    #[test]
    fn ams_on_five_point_stencil_is_bilinear() {
        let grid = GridSpec::new(16).unwrap();
        let p = five_point_laplacian(grid, 1.0);
        let dec = partition_structured(grid, 2).unwrap();
        let cls = classify_interface(&dec, &p.a).unwrap();
        let phi = build_coarse_space(CoarseSpaceKind::Ams, &p.a, &cls).unwrap();
        assert_eq!(phi.dim(), 1);
        for d in 0..p.n_dofs() {
            let (i, j) = p.dof_position(d);
            let hat = (1.0 - i.abs_diff(8) as f64 / 8.0) * (1.0 - j.abs_diff(8) as f64 / 8.0);
            assert!((phi.phi.get(d, 0) - hat).abs() < 1e-12, "dof ({i}, {j})");
        }
    }

    #[test]
    fn structural_properties() {
        let cases = [setup(12, 3), setup(16, 2)].into_iter().chain([{
            let (p, c, _) = channels(3, 8, 1e6);
            (p, c)
        }]);
        for (p, cls) in cases {
            for kind in CoarseSpaceKind::ALL {
                let phi = build_coarse_space(kind, &p.a, &cls).unwrap();
                let defect = harmonicity_defect(&p.a, &cls, &phi.phi).unwrap();
                assert!(defect <= 1e-10 * p.a.max_abs(), "{kind:?}: {defect}");

                let region = unit_row_sum_region(&p.a, &cls, kind);
                for (d, s) in phi.row_sums().iter().enumerate() {
                    assert!(*s > -1e-12 && *s < 1.0 + 1e-10, "{kind:?} dof {d}: {s}");
                    if region[d] {
                        assert!((s - 1.0).abs() < 1e-10, "{kind:?} dof {d}: {s}");
                    }
                }

                let a0 = crate::sparse::triple_product(&phi.phi, &p.a).unwrap();
                assert!(factorize(&a0, true).is_ok());
                let gram = phi.phi.to_dense().transpose() * phi.phi.to_dense();
                assert_eq!(gram.rank(1e-10 * gram.amax()), phi.dim());

                for c in 0..phi.dim() {
                    let allowed = support(&cls, &phi.columns[c]);
                    for (d, v) in phi.phi.column(c).iter().enumerate() {
                        if *v != 0.0 {
                            assert!(allowed[d], "{kind:?} column {c} leaks to dof {d}");
                        }
                    }
                }
            }
        }
    }

    /// Declared support of one coarse function.
    fn support(cls: &InterfaceClassification, col: &CoarseDof) -> Vec<bool> {
        let n = cls.n_dofs();
        let mut allowed = vec![false; n];
        let mut subs = Vec::new();
        let mut mark = |class: &crate::decomposition::InterfaceClass, subs: &mut Vec<usize>| {
            for d in class.dofs.iter() {
                allowed[d] = true;
            }
            subs.extend(class.subdomains.iter().copied());
        };
        match *col {
            CoarseDof::Class { kind, index } => match kind {
                ClassKind::Vertex => mark(&cls.vertices[index], &mut subs),
                _ => mark(&cls.edges[index], &mut subs),
            },
            CoarseDof::Component(comp) => {
                let c = cls.rgdsw_components.iter().position(|x| *x == comp).unwrap();
                match comp {
                    RgdswComponent::Vertex(v) => mark(&cls.vertices[v], &mut subs),
                    RgdswComponent::Standalone(e) => mark(&cls.edges[e], &mut subs),
                }
                for (pos, d) in cls.gamma.iter().enumerate() {
                    if cls.ancestry[pos].contains(&c) {
                        if let DofClass::Edge(k) = cls.dof_class[d] {
                            mark(&cls.edges[k], &mut subs);
                        }
                    }
                }
            }
            CoarseDof::VertexDof { class, .. } => {
                mark(&cls.vertices[class], &mut subs);
                for (k, vs) in cls.edge_vertices.iter().enumerate() {
                    if vs.contains(&class) {
                        mark(&cls.edges[k], &mut subs);
                    }
                }
            }
        }
        for s in subs {
            for d in cls.subdomain_interiors[s].iter() {
                allowed[d] = true;
            }
        }
        allowed
    }

    #[test]
    fn rasters_have_one_block_per_column() {
        let (p, cls) = setup(8, 2);
        let phi = build_coarse_space(CoarseSpaceKind::Gdsw, &p.a, &cls).unwrap();
        let text = basis_rasters(&p, &phi);
        assert_eq!(text.matches("# space=gdsw column=").count(), 5);
        let raster = basis_raster(&p, &phi, 0);
        let first: Vec<&str> = raster.lines().collect();
        assert_eq!(first.len(), 9);
        assert!(first.iter().all(|l| l.split_whitespace().count() == 9));
    }
}
