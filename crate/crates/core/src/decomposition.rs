//! Structured nonoverlapping partition, algebraic overlap growth and the
//! interface classification into vertex, edge (and reserved face) classes.

use std::collections::{BTreeMap, VecDeque};
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::problem::{GridSpec, SubdomainLayout};
use crate::sparse::{IndexSet, SparseMatrix};

/// Nonoverlapping and overlapping subdomain dof sets.
#[derive(Debug, Clone)]
pub struct Decomposition {
    layout: SubdomainLayout,
    grid: GridSpec,
    owner: Vec<usize>,
    /// Sorted ids of the subdomains whose closure contains each dof.
    adjacent: Vec<Vec<usize>>,
    nonoverlapping: Vec<IndexSet>,
    overlapping: Vec<IndexSet>,
    overlap_layers: usize,
}

/// Element-based partition of the free dofs into `K x K` squares.
///
/// A dof on a subdomain boundary is owned by the lowest-index adjacent subdomain.
pub fn partition_structured(grid: GridSpec, subdomains_per_side: usize) -> Result<Decomposition> {
    let n = grid.elements_per_side();
    if subdomains_per_side == 0 || n % subdomains_per_side != 0 {
        return Err(Error::Input(format!(
            "{subdomains_per_side} subdomains per side do not divide {n} elements per side"
        )));
    }
    let k = subdomains_per_side;
    let m = n / k;
    let ndofs = (n - 1) * (n - 1);
    let mut adjacent = Vec::with_capacity(ndofs);
    for j in 1..n {
        for i in 1..n {
            let mut subs = Vec::with_capacity(4);
            for ey in [j - 1, j] {
                for ex in [i - 1, i] {
                    subs.push((ey / m) * k + ex / m);
                }
            }
            subs.sort_unstable();
            subs.dedup();
            adjacent.push(subs);
        }
    }
    let owner: Vec<usize> = adjacent.iter().map(|s| s[0]).collect();
    let mut sets = vec![Vec::new(); k * k];
    for (d, &o) in owner.iter().enumerate() {
        sets[o].push(d);
    }
    let nonoverlapping: Vec<IndexSet> = sets.into_iter().map(IndexSet::from_sorted).collect();
    Ok(Decomposition {
        layout: SubdomainLayout {
            subdomains_per_side: k,
            elements_per_subdomain: m,
        },
        grid,
        owner,
        adjacent,
        overlapping: nonoverlapping.clone(),
        nonoverlapping,
        overlap_layers: 0,
    })
}

impl Decomposition {
    pub fn n_subdomains(&self) -> usize {
        self.nonoverlapping.len()
    }

    pub fn n_dofs(&self) -> usize {
        self.owner.len()
    }

    pub fn layout(&self) -> SubdomainLayout {
        self.layout
    }

    pub fn grid(&self) -> GridSpec {
        self.grid
    }

    pub fn owner(&self, dof: usize) -> usize {
        self.owner[dof]
    }

    pub fn multiplicity(&self, dof: usize) -> usize {
        self.adjacent[dof].len()
    }

    pub fn adjacent_subdomains(&self, dof: usize) -> &[usize] {
        &self.adjacent[dof]
    }

    pub fn nonoverlapping(&self, i: usize) -> &IndexSet {
        &self.nonoverlapping[i]
    }

    pub fn overlapping(&self, i: usize) -> &IndexSet {
        &self.overlapping[i]
    }

    pub fn overlap_layers(&self) -> usize {
        self.overlap_layers
    }

    /// Overlapping sets: all dofs within graph distance `layers` of each
    /// nonoverlapping set in the adjacency graph of `a`.
    pub fn grow_overlap(&self, a: &SparseMatrix, layers: usize) -> Result<Decomposition> {
        if a.nrows() != self.n_dofs() {
            return Err(Error::DimensionMismatch {
                op: "grow_overlap",
                expected: self.n_dofs(),
                got: a.nrows(),
            });
        }
        let n = self.n_dofs();
        let mut seen = vec![usize::MAX; n];
        let mut overlapping = Vec::with_capacity(self.n_subdomains());
        for (s, base) in self.nonoverlapping.iter().enumerate() {
            let mut members: Vec<usize> = base.iter().collect();
            let mut frontier: Vec<usize> = members.clone();
            for &d in &members {
                seen[d] = s;
            }
            for _ in 0..layers {
                let mut next = Vec::new();
                for &d in &frontier {
                    for &c in a.row_cols(d) {
                        if seen[c] != s {
                            seen[c] = s;
                            next.push(c);
                        }
                    }
                }
                if next.is_empty() {
                    break;
                }
                members.extend_from_slice(&next);
                frontier = next;
            }
            members.sort_unstable();
            overlapping.push(IndexSet::from_sorted(members));
        }
        Ok(Decomposition {
            overlapping,
            overlap_layers: layers,
            ..self.clone()
        })
    }

    /// 0/1 selector `R_i` of the overlapping subdomain `i` (rows = local dofs).
    pub fn restriction(&self, i: usize) -> Result<SparseMatrix> {
        let set = self.overlapping.get(i).ok_or_else(|| {
            Error::Input(format!(
                "subdomain {i} out of range ({} subdomains)",
                self.n_subdomains()
            ))
        })?;
        let m = set.len();
        SparseMatrix::try_new(
            m,
            self.n_dofs(),
            (0..=m).collect(),
            set.as_slice().to_vec(),
            vec![1.0; m],
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClassKind {
    Vertex,
    Edge,
    /// Reserved for three-dimensional decompositions; never produced in 2D.
    Face,
}

/// One interface equivalence class (a connected set of dofs sharing the same
/// adjacent subdomains).
#[derive(Debug, Clone, PartialEq)]
pub struct InterfaceClass {
    pub kind: ClassKind,
    pub dofs: IndexSet,
    pub subdomains: Vec<usize>,
}

/// Where a dof sits in the classification.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DofClass {
    Interior { subdomain: usize },
    Vertex(usize),
    Edge(usize),
}

/// A coarse component of the reduced (vertex-based) interface partition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RgdswComponent {
    /// Centred at vertex class `k`.
    Vertex(usize),
    /// Edge class `k` without any neighbouring vertex class.
    Standalone(usize),
}

#[derive(Debug, Clone)]
pub struct InterfaceClassification {
    pub gamma: IndexSet,
    pub interior: IndexSet,
    /// Interior dofs of each subdomain; `A_II` is block diagonal over these.
    pub subdomain_interiors: Vec<IndexSet>,
    pub vertices: Vec<InterfaceClass>,
    pub edges: Vec<InterfaceClass>,
    pub faces: Vec<InterfaceClass>,
    /// Vertex classes adjacent (in the graph of `A`) to each edge class.
    pub edge_vertices: Vec<Vec<usize>>,
    pub rgdsw_components: Vec<RgdswComponent>,
    /// For each Γ dof (by position in `gamma`), its RGDSW components.
    pub ancestry: Vec<Vec<usize>>,
    pub dof_class: Vec<DofClass>,
}

impl InterfaceClassification {
    /// Option-1 weight of a Γ dof: inverse of its number of components.
    pub fn rgdsw_weight(&self, gamma_pos: usize) -> f64 {
        1.0 / self.ancestry[gamma_pos].len() as f64
    }

    pub fn n_dofs(&self) -> usize {
        self.dof_class.len()
    }

    /// All vertex dofs, sorted.
    pub fn vertex_dofs(&self) -> IndexSet {
        let mut v: Vec<usize> = self.vertices.iter().flat_map(|c| c.dofs.iter()).collect();
        v.sort_unstable();
        IndexSet::from_sorted(v)
    }

    /// All edge dofs, sorted.
    pub fn edge_dofs(&self) -> IndexSet {
        let mut v: Vec<usize> = self.edges.iter().flat_map(|c| c.dofs.iter()).collect();
        v.sort_unstable();
        IndexSet::from_sorted(v)
    }
}

/// Connected components of `members` in the graph of `a`, each sorted,
/// ordered by their smallest dof.
fn connected_components(a: &SparseMatrix, members: &[usize], in_set: &mut [bool]) -> Vec<Vec<usize>> {
    for &d in members {
        in_set[d] = true;
    }
    let mut comps = Vec::new();
    for &start in members {
        if !in_set[start] {
            continue;
        }
        in_set[start] = false;
        let mut comp = vec![start];
        let mut queue = VecDeque::from([start]);
        while let Some(d) = queue.pop_front() {
            for &c in a.row_cols(d) {
                if in_set[c] {
                    in_set[c] = false;
                    comp.push(c);
                    queue.push_back(c);
                }
            }
        }
        comp.sort_unstable();
        comps.push(comp);
    }
    comps
}

/// Groups interface dofs (multiplicity ≥ 2) into equivalence classes by their
/// adjacent-subdomain sets, split into connected components of the graph of `a`.
pub fn classify_interface(dec: &Decomposition, a: &SparseMatrix) -> Result<InterfaceClassification> {
    let n = dec.n_dofs();
    if a.nrows() != n {
        return Err(Error::DimensionMismatch {
            op: "classify_interface",
            expected: n,
            got: a.nrows(),
        });
    }
    let mut groups: BTreeMap<&[usize], Vec<usize>> = BTreeMap::new();
    let mut interiors = vec![Vec::new(); dec.n_subdomains()];
    let mut gamma = Vec::new();
    let mut interior = Vec::new();
    for d in 0..n {
        let subs = dec.adjacent_subdomains(d);
        if subs.len() >= 2 {
            groups.entry(subs).or_default().push(d);
            gamma.push(d);
        } else {
            interiors[subs[0]].push(d);
            interior.push(d);
        }
    }

    let mut scratch = vec![false; n];
    let mut vertices = Vec::new();
    let mut edges = Vec::new();
    for (subs, members) in &groups {
        let kind = if subs.len() >= 3 {
            ClassKind::Vertex
        } else {
            ClassKind::Edge
        };
        for comp in connected_components(a, members, &mut scratch) {
            let class = InterfaceClass {
                kind,
                dofs: IndexSet::from_sorted(comp),
                subdomains: subs.to_vec(),
            };
            match kind {
                ClassKind::Vertex => vertices.push(class),
                _ => edges.push(class),
            }
        }
    }
    let first = |c: &InterfaceClass| c.dofs.as_slice()[0];
    vertices.sort_by_key(first);
    edges.sort_by_key(first);

    let mut dof_class: Vec<DofClass> = (0..n)
        .map(|d| DofClass::Interior {
            subdomain: dec.adjacent_subdomains(d)[0],
        })
        .collect();
    for (k, c) in vertices.iter().enumerate() {
        for d in c.dofs.iter() {
            dof_class[d] = DofClass::Vertex(k);
        }
    }
    for (k, c) in edges.iter().enumerate() {
        for d in c.dofs.iter() {
            dof_class[d] = DofClass::Edge(k);
        }
    }

    let edge_vertices: Vec<Vec<usize>> = edges
        .iter()
        .map(|e| {
            let mut vs: Vec<usize> = e
                .dofs
                .iter()
                .flat_map(|d| a.row_cols(d).iter())
                .filter_map(|&c| match dof_class[c] {
                    DofClass::Vertex(k) => Some(k),
                    _ => None,
                })
                .collect();
            vs.sort_unstable();
            vs.dedup();
            vs
        })
        .collect();

    let mut rgdsw_components: Vec<RgdswComponent> = (0..vertices.len()).map(RgdswComponent::Vertex).collect();
    let mut edge_components = Vec::with_capacity(edges.len());
    for (k, vs) in edge_vertices.iter().enumerate() {
        if vs.is_empty() {
            edge_components.push(vec![rgdsw_components.len()]);
            rgdsw_components.push(RgdswComponent::Standalone(k));
        } else {
            edge_components.push(vs.clone());
        }
    }
    let ancestry = gamma
        .iter()
        .map(|&d| match dof_class[d] {
            DofClass::Vertex(k) => vec![k],
            DofClass::Edge(k) => edge_components[k].clone(),
            DofClass::Interior { .. } => unreachable!("gamma dofs are classified"),
        })
        .collect();

    Ok(InterfaceClassification {
        gamma: IndexSet::from_sorted(gamma),
        interior: IndexSet::from_sorted(interior),
        subdomain_interiors: interiors.into_iter().map(IndexSet::from_sorted).collect(),
        vertices,
        edges,
        faces: Vec::new(),
        edge_vertices,
        rgdsw_components,
        ancestry,
        dof_class,
    })
}

/// Per-dof CSV: `dof,i,j,owner,multiplicity,class_kind,class_id`.
///
/// Interior dofs report `interior` with their subdomain as class id.
pub fn decomposition_csv(dec: &Decomposition, cls: &InterfaceClassification) -> String {
    let mut out = String::from("dof,i,j,owner,multiplicity,class_kind,class_id\n");
    let n = dec.grid().elements_per_side();
    for d in 0..dec.n_dofs() {
        let (i, j) = (d % (n - 1) + 1, d / (n - 1) + 1);
        let (kind, id) = match cls.dof_class[d] {
            DofClass::Interior { subdomain } => ("interior", subdomain),
            DofClass::Vertex(k) => ("vertex", k),
            DofClass::Edge(k) => ("edge", k),
        };
        let _ = writeln!(out, "{d},{i},{j},{},{},{kind},{id}", dec.owner(d), dec.multiplicity(d));
    }
    out
}

pub fn write_decomposition_csv(
    path: impl AsRef<Path>,
    dec: &Decomposition,
    cls: &InterfaceClassification,
) -> Result<()> {
    Ok(fs::write(path, decomposition_csv(dec, cls))?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{assemble, CoefficientField};
    use crate::sparse::extract_submatrix;
    use proptest::prelude::*;

    fn setup(n: usize, k: usize) -> (SparseMatrix, Decomposition) {
        let grid = GridSpec::new(n).unwrap();
        let p = assemble(grid, &CoefficientField::constant(grid, 1.0), 1.0).unwrap();
        let dec = partition_structured(grid, k).unwrap();
        (p.a, dec)
    }

    /// Dofs within distance `layers` of `seed`, by repeated dense boolean products.
    fn dense_reach(a: &SparseMatrix, seed: &IndexSet, layers: usize) -> Vec<usize> {
        let dense = a.to_dense();
        let n = a.nrows();
        let mut reached: Vec<bool> = (0..n).map(|d| seed.contains(d)).collect();
        for _ in 0..layers {
            let prev = reached.clone();
            for i in 0..n {
                for j in 0..n {
                    if prev[j] && dense[(i, j)] != 0.0 {
                        reached[i] = true;
                    }
                }
            }
        }
        (0..n).filter(|&d| reached[d]).collect()
    }

    #[test]
    fn rejects_non_divisible() {
        let grid = GridSpec::new(10).unwrap();
        assert!(partition_structured(grid, 3).is_err());
        assert!(partition_structured(grid, 0).is_err());
    }

    #[test]
    fn single_subdomain_has_no_interface() {
        let (a, dec) = setup(6, 1);
        assert_eq!(dec.nonoverlapping(0).len(), 25);
        let cls = classify_interface(&dec, &a).unwrap();
        assert!(cls.gamma.is_empty());
        assert!(cls.vertices.is_empty() && cls.edges.is_empty());
        assert_eq!(cls.interior.len(), 25);
    }

    #[test]
    fn four_by_four_two_by_two_multiplicities() {
        let (a, dec) = setup(4, 2);
        assert_eq!(dec.n_dofs(), 9);
        let cls = classify_interface(&dec, &a).unwrap();
        // free nodes (i,j) in 1..=3; cross through (2,2)
        assert_eq!(cls.gamma.as_slice(), &[1, 3, 4, 5, 7]);
        assert_eq!(dec.multiplicity(4), 4);
        for d in [1, 3, 5, 7] {
            assert_eq!(dec.multiplicity(d), 2);
        }
        for d in [0, 2, 6, 8] {
            assert_eq!(dec.multiplicity(d), 1);
        }
        let total: usize = (0..4).map(|s| dec.nonoverlapping(s).len()).sum();
        assert_eq!(total, 9);
    }

    #[test]
    fn overlap_layers() {
        let (a, dec) = setup(8, 2);
        let zero = dec.grow_overlap(&a, 0).unwrap();
        for s in 0..4 {
            assert_eq!(zero.overlapping(s), dec.nonoverlapping(s));
        }
        let sat = dec.grow_overlap(&a, 20).unwrap();
        for s in 0..4 {
            assert_eq!(sat.overlapping(s).len(), 49);
        }
        let two = dec.grow_overlap(&a, 2).unwrap();
        for s in 0..4 {
            assert_eq!(
                two.overlapping(s).as_slice(),
                dense_reach(&a, dec.nonoverlapping(s), 2).as_slice()
            );
            assert!(dec.nonoverlapping(s).is_subset_of(two.overlapping(s)));
        }
    }

    #[test]
    fn classification_two_by_two() {
        let (a, dec) = setup(8, 2);
        let cls = classify_interface(&dec, &a).unwrap();
        assert_eq!(cls.vertices.len(), 1);
        assert_eq!(cls.vertices[0].dofs.len(), 1);
        assert_eq!(cls.vertices[0].subdomains.len(), 4);
        assert_eq!(cls.edges.len(), 4);
        for e in &cls.edges {
            assert_eq!(e.subdomains.len(), 2);
            assert_eq!(e.dofs.len(), 3);
        }
        assert_eq!(cls.edge_vertices, vec![vec![0]; 4]);
        assert_eq!(cls.rgdsw_components.len(), 1);
        for p in 0..cls.gamma.len() {
            assert_eq!(cls.rgdsw_weight(p), 1.0);
        }
    }

    #[test]
    fn classification_three_by_three() {
        let (a, dec) = setup(12, 3);
        let cls = classify_interface(&dec, &a).unwrap();
        assert_eq!(cls.vertices.len(), 4);
        assert_eq!(cls.edges.len(), 12);
        let inner: Vec<usize> = (0..12).filter(|&k| cls.edge_vertices[k].len() == 2).collect();
        assert_eq!(inner.len(), 4);
        for (p, d) in cls.gamma.iter().enumerate() {
            if let DofClass::Edge(k) = cls.dof_class[d] {
                let expected = if inner.contains(&k) { 0.5 } else { 1.0 };
                assert_eq!(cls.rgdsw_weight(p), expected);
            }
        }
        // every vertex is interior to the structured grid: four subdomains
        assert!(cls.vertices.iter().all(|v| v.subdomains.len() == 4));
    }

    #[test]
    fn classification_invariants() {
        for (n, k) in [(16, 4), (24, 3), (16, 2)] {
            let (a, dec) = setup(n, k);
            let cls = classify_interface(&dec, &a).unwrap();
            let mut all: Vec<usize> = cls.gamma.iter().chain(cls.interior.iter()).collect();
            all.sort_unstable();
            assert_eq!(all, (0..dec.n_dofs()).collect::<Vec<_>>());
            let mut classes: Vec<usize> = cls.vertex_dofs().iter().chain(cls.edge_dofs().iter()).collect();
            classes.sort_unstable();
            assert_eq!(classes, cls.gamma.as_slice());
            assert!(cls.edges.iter().all(|e| e.subdomains.len() == 2));
            assert!(cls.vertices.iter().all(|v| v.subdomains.len() >= 3));
            for p in 0..cls.gamma.len() {
                let total: f64 = cls.ancestry[p].iter().map(|_| cls.rgdsw_weight(p)).sum();
                assert_eq!(total, 1.0);
            }
            let interiors: usize = cls.subdomain_interiors.iter().map(IndexSet::len).sum();
            assert_eq!(interiors, cls.interior.len());
        }
    }

    #[test]
    fn standalone_edge_component() {
        // 2x1 strips: the single vertical edge has no vertex class
        let (a, dec) = setup(4, 2);
        let mut strip = dec.clone();
        for d in 0..strip.n_dofs() {
            let subs: Vec<usize> = strip.adjacent[d]
                .iter()
                .map(|s| s % 2)
                .collect::<std::collections::BTreeSet<_>>()
                .into_iter()
                .collect();
            strip.adjacent[d] = subs;
        }
        let cls = classify_interface(&strip, &a).unwrap();
        assert!(cls.vertices.is_empty());
        assert_eq!(cls.edges.len(), 1);
        assert_eq!(cls.rgdsw_components, vec![RgdswComponent::Standalone(0)]);
        assert!(cls.ancestry.iter().all(|anc| anc == &vec![0]));
    }

    #[test]
    fn restriction_selectors() {
        let (a, dec) = setup(8, 2);
        let sat = dec.grow_overlap(&a, 50).unwrap();
        let r = sat.restriction(0).unwrap();
        assert_eq!(r.to_dense(), nalgebra::DMatrix::identity(49, 49));
        assert!(dec.restriction(4).is_err());

        let mut single = dec.clone();
        single.overlapping[1] = IndexSet::new(vec![5], 49).unwrap();
        let r = single.restriction(1).unwrap();
        assert_eq!((r.nrows(), r.ncols()), (1, 49));
        assert_eq!(r.get(0, 5), 1.0);

        let two = dec.grow_overlap(&a, 2).unwrap();
        for s in 0..4 {
            let r = two.restriction(s).unwrap();
            let local = r.matmul(&a).unwrap().matmul(&r.transpose()).unwrap();
            let oracle = extract_submatrix(&a, two.overlapping(s), two.overlapping(s)).unwrap();
            assert_eq!(local.to_dense(), oracle.to_dense());
        }
    }

    #[test]
    fn csv_dump_has_row_per_dof() {
        let (a, dec) = setup(8, 2);
        let cls = classify_interface(&dec, &a).unwrap();
        let text = decomposition_csv(&dec, &cls);
        assert_eq!(text.lines().count(), 50);
        assert!(text.lines().any(|l| l.ends_with("vertex,0") && l.contains(",4,4,")));
    }

    proptest! {
        #[test]
        fn overlap_is_monotone(k in 1usize..5, layers in 0usize..4) {
            let (a, dec) = setup(4 * k, k);
            let small = dec.grow_overlap(&a, layers).unwrap();
            let big = dec.grow_overlap(&a, layers + 1).unwrap();
            for s in 0..dec.n_subdomains() {
                prop_assert!(small.overlapping(s).is_subset_of(big.overlapping(s)));
            }
        }
    }
}
