//! Sparse intrinsic-CAR precision matrices.
//!
//! Two weighting rules build the "inverse matrix" of a conditional
//! autoregressive model: border counting (each unit's diagonal is its number
//! of neighbors, every neighbor pair gets -1) and inverse distance (each
//! undirected node pair gets minus the sum of 1/length over its connecting
//! pipes, diagonals make rows sum to zero). Block assembly stacks scaled
//! precision blocks into the joint prior over a composite latent field.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use thiserror::Error;

use crate::network::WaterNetwork;

#[derive(Debug, Error, PartialEq)]
pub enum PrecisionError {
    #[error("adjacency is asymmetric: `{a}` lists `{b}` but not vice versa")]
    AsymmetricAdjacency { a: String, b: String },
    #[error("unit `{0}` lists itself as a neighbor")]
    SelfNeighbor(String),
    #[error("unit `{a}` lists neighbor `{b}` more than once")]
    DuplicateNeighbor { a: String, b: String },
    #[error("segment `{from}` -> `{to}` has non-positive length {value}")]
    ZeroLengthSegment { from: String, to: String, value: f64 },
    #[error("expected {blocks} scales for {blocks} blocks, got {scales}")]
    ScaleCountMismatch { blocks: usize, scales: usize },
    #[error("block {index} has non-positive scale {value}")]
    NonPositiveScale { index: usize, value: f64 },
    #[error("matrix entry ({i},{j})={a} does not match its transpose {b}")]
    Asymmetric { i: usize, j: usize, a: f64, b: f64 },
    #[error("entry ({i},{j}) outside dimension {dim}")]
    OutOfBounds { i: usize, j: usize, dim: usize },
}

/// Symmetric neighbor lists over labeled units.
#[derive(Clone, Debug)]
pub struct Adjacency {
    labels: Vec<String>,
    neighbors: Vec<Vec<usize>>,
}

impl Adjacency {
    /// Neighbor lists as given; symmetry is validated by the builder.
    pub fn from_neighbor_lists(labels: Vec<String>, neighbors: Vec<Vec<usize>>) -> Self {
        assert_eq!(labels.len(), neighbors.len());
        Adjacency { labels, neighbors }
    }

    /// Symmetric-by-construction adjacency from undirected unit pairs.
    pub fn from_pairs(labels: Vec<String>, pairs: &[(usize, usize)]) -> Self {
        let mut neighbors = alloc::vec![Vec::new(); labels.len()];
        for &(a, b) in pairs {
            neighbors[a].push(b);
            neighbors[b].push(a);
        }
        for list in neighbors.iter_mut() {
            list.sort_unstable();
            list.dedup();
        }
        Adjacency { labels, neighbors }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn neighbors_of(&self, unit: usize) -> &[usize] {
        &self.neighbors[unit]
    }
}

/// The weighting rule used to fill the precision entries.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Weighting {
    /// -1 per bordering pair, diagonal = neighbor count.
    BorderCount,
    /// -sum(1/length) per connected pair, diagonal = row-sum balance.
    InverseDistance,
}

/// Sparse symmetric precision matrix with structural metadata.
///
/// Stored as CSR over the full symmetric pattern with sorted column indices.
/// `intrinsic` marks matrices whose rows sum to zero (improper CAR priors);
/// their rank deficiency equals the number of connected components of the
/// sparsity pattern.
#[derive(Clone, Debug)]
pub struct PrecisionMatrix {
    dim: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
    labels: Option<Vec<String>>,
    component_of: Vec<usize>,
    n_components: usize,
    intrinsic: bool,
}

impl PrecisionMatrix {
    /// Build from (possibly duplicated) triplets; duplicates are summed and
    /// symmetry is checked to 1e-15 relative.
    pub fn from_triplets(
        dim: usize,
        triplets: impl IntoIterator<Item = (usize, usize, f64)>,
        labels: Option<Vec<String>>,
        intrinsic: bool,
    ) -> Result<Self, PrecisionError> {
        let mut map: BTreeMap<(usize, usize), f64> = BTreeMap::new();
        for (i, j, v) in triplets {
            if i >= dim || j >= dim {
                return Err(PrecisionError::OutOfBounds { i, j, dim });
            }
            *map.entry((i, j)).or_insert(0.0) += v;
        }
        // symmetry
        for (&(i, j), &v) in &map {
            if i == j {
                continue;
            }
            let w = map.get(&(j, i)).copied().unwrap_or(0.0);
            let scale = 1.0f64.max(fabs(v)).max(fabs(w));
            if fabs(v - w) > 1e-15 * scale {
                return Err(PrecisionError::Asymmetric { i, j, a: v, b: w });
            }
        }
        let mut row_ptr = alloc::vec![0usize; dim + 1];
        for &(i, _) in map.keys() {
            row_ptr[i + 1] += 1;
        }
        for i in 0..dim {
            row_ptr[i + 1] += row_ptr[i];
        }
        let nnz = map.len();
        let mut col_idx = Vec::with_capacity(nnz);
        let mut values = Vec::with_capacity(nnz);
        for ((_, j), v) in map {
            col_idx.push(j);
            values.push(v);
        }
        if let Some(ref l) = labels {
            assert_eq!(l.len(), dim);
        }
        let (component_of, n_components) = pattern_components(dim, &row_ptr, &col_idx);
        Ok(PrecisionMatrix {
            dim,
            row_ptr,
            col_idx,
            values,
            labels,
            component_of,
            n_components,
            intrinsic,
        })
    }

    /// `value * I`, convenient for iid blocks and tests.
    pub fn scaled_identity(dim: usize, value: f64) -> Self {
        Self::from_triplets(dim, (0..dim).map(|i| (i, i, value)), None, false)
            .expect("diagonal triplets are always symmetric")
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.col_idx.len()
    }

    /// Raw CSR view `(dim, row_ptr, col_idx, values)`.
    pub(crate) fn raw_csr(&self) -> (usize, &[usize], &[usize], &[f64]) {
        (self.dim, &self.row_ptr, &self.col_idx, &self.values)
    }

    pub fn is_intrinsic(&self) -> bool {
        self.intrinsic
    }

    /// Column indices and values of row `i` (sorted by column).
    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        (&self.col_idx[r.clone()], &self.values[r])
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (cols, vals) = self.row(i);
        match cols.binary_search(&j) {
            Ok(k) => vals[k],
            Err(_) => 0.0,
        }
    }

    pub fn row_sum(&self, i: usize) -> f64 {
        let (_, vals) = self.row(i);
        vals.iter().sum()
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    pub fn label_of(&self, i: usize) -> String {
        match &self.labels {
            Some(l) => l[i].clone(),
            None => alloc::format!("u{i}"),
        }
    }

    pub fn index_of_label(&self, label: &str) -> Option<usize> {
        self.labels
            .as_ref()
            .and_then(|l| l.iter().position(|x| x == label))
    }

    /// Component id per row index, derived from the sparsity pattern.
    pub fn component_of(&self) -> &[usize] {
        &self.component_of
    }

    pub fn n_components(&self) -> usize {
        self.n_components
    }

    /// Row indices grouped by component, in component order.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let mut blocks = alloc::vec![Vec::new(); self.n_components];
        for (i, &c) in self.component_of.iter().enumerate() {
            blocks[c].push(i);
        }
        blocks
    }

    pub fn mean_diag(&self) -> f64 {
        if self.dim == 0 {
            return 0.0;
        }
        (0..self.dim).map(|i| self.get(i, i)).sum::<f64>() / self.dim as f64
    }

    /// y = Q x
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.dim);
        let mut y = alloc::vec![0.0; self.dim];
        for i in 0..self.dim {
            let (cols, vals) = self.row(i);
            let mut acc = 0.0;
            for (c, v) in cols.iter().zip(vals) {
                acc += v * x[*c];
            }
            y[i] = acc;
        }
        y
    }

    /// xᵀ Q x
    pub fn quad_form(&self, x: &[f64]) -> f64 {
        self.mul_vec(x).iter().zip(x).map(|(a, b)| a * b).sum()
    }

    /// Upper-triangle entries (i <= j) in row-major order.
    pub fn iter_upper(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.dim).flat_map(move |i| {
            let (cols, vals) = self.row(i);
            cols.iter()
                .zip(vals)
                .filter(move |(c, _)| **c >= i)
                .map(move |(c, v)| (i, *c, *v))
        })
    }

    /// All stored entries.
    pub fn iter_all(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.dim).flat_map(move |i| {
            let (cols, vals) = self.row(i);
            cols.iter().zip(vals).map(move |(c, v)| (i, *c, *v))
        })
    }

    /// Dense copy, row-major. Intended for oracles and small matrices.
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut out = alloc::vec![alloc::vec![0.0; self.dim]; self.dim];
        for (i, j, v) in self.iter_all() {
            out[i][j] = v;
        }
        out
    }
}

fn fabs(x: f64) -> f64 {
    if x < 0.0 {
        -x
    } else {
        x
    }
}

fn pattern_components(dim: usize, row_ptr: &[usize], col_idx: &[usize]) -> (Vec<usize>, usize) {
    let mut comp = alloc::vec![usize::MAX; dim];
    let mut n = 0;
    for start in 0..dim {
        if comp[start] != usize::MAX {
            continue;
        }
        comp[start] = n;
        let mut stack = alloc::vec![start];
        while let Some(v) = stack.pop() {
            for &w in &col_idx[row_ptr[v]..row_ptr[v + 1]] {
                if comp[w] == usize::MAX {
                    comp[w] = n;
                    stack.push(w);
                }
            }
        }
        n += 1;
    }
    (comp, n)
}

/// Border-count precision: `Q[i][j] = -1` for neighbors, `Q[i][i]` = neighbor
/// count. Rows sum to zero, so the matrix is intrinsic.
pub fn build_border_precision(adjacency: &Adjacency) -> Result<PrecisionMatrix, PrecisionError> {
    let n = adjacency.len();
    for i in 0..n {
        let mut seen = alloc::collections::BTreeSet::new();
        for &j in adjacency.neighbors_of(i) {
            if j == i {
                return Err(PrecisionError::SelfNeighbor(adjacency.labels[i].clone()));
            }
            if !seen.insert(j) {
                return Err(PrecisionError::DuplicateNeighbor {
                    a: adjacency.labels[i].clone(),
                    b: adjacency.labels[j].clone(),
                });
            }
            if !adjacency.neighbors_of(j).contains(&i) {
                return Err(PrecisionError::AsymmetricAdjacency {
                    a: adjacency.labels[i].clone(),
                    b: adjacency.labels[j].clone(),
                });
            }
        }
    }
    let mut triplets = Vec::new();
    for i in 0..n {
        let deg = adjacency.neighbors_of(i).len();
        triplets.push((i, i, deg as f64));
        for &j in adjacency.neighbors_of(i) {
            triplets.push((i, j, -1.0));
        }
    }
    PrecisionMatrix::from_triplets(n, triplets, Some(adjacency.labels.to_vec()), true)
}

/// Distance-weighted precision over a network: for each undirected node pair
/// the off-diagonal is `-sum(1/length)` over connecting segments (flow
/// direction is ignored; a valid precision must be symmetric), and diagonals
/// balance the rows to zero sum.
pub fn build_distance_precision(net: &WaterNetwork) -> Result<PrecisionMatrix, PrecisionError> {
    let n = net.node_count();
    let mut weights: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    for &(f, t, l) in net.segment_indices() {
        if !(l > 0.0) {
            return Err(PrecisionError::ZeroLengthSegment {
                from: net.node_ids()[f].as_str().to_string(),
                to: net.node_ids()[t].as_str().to_string(),
                value: l,
            });
        }
        let key = (f.min(t), f.max(t));
        *weights.entry(key).or_insert(0.0) += 1.0 / l;
    }
    let mut triplets = Vec::new();
    let mut diag = alloc::vec![0.0; n];
    for (&(i, j), &w) in &weights {
        triplets.push((i, j, -w));
        triplets.push((j, i, -w));
        diag[i] += w;
        diag[j] += w;
    }
    for (i, d) in diag.into_iter().enumerate() {
        triplets.push((i, i, d));
    }
    let labels = net
        .node_ids()
        .iter()
        .map(|id| id.as_str().to_string())
        .collect();
    PrecisionMatrix::from_triplets(n, triplets, Some(labels), true)
}

/// One block of a composite latent-field prior.
#[derive(Clone, Copy, Debug)]
pub enum Block<'a> {
    /// A structured precision (CAR block); scaled by its `tau`.
    Structured(&'a PrecisionMatrix),
    /// Independent units: `tau * I(dim)`.
    Iid { dim: usize },
}

impl Block<'_> {
    pub fn dim(&self) -> usize {
        match self {
            Block::Structured(q) => q.dim(),
            Block::Iid { dim } => *dim,
        }
    }
}

/// Block-diagonal precision over the concatenated latent field; block `b` is
/// multiplied by `scales[b]`.
pub fn assemble_block_precision(
    blocks: &[Block<'_>],
    scales: &[f64],
) -> Result<PrecisionMatrix, PrecisionError> {
    if blocks.len() != scales.len() {
        return Err(PrecisionError::ScaleCountMismatch {
            blocks: blocks.len(),
            scales: scales.len(),
        });
    }
    for (index, &s) in scales.iter().enumerate() {
        if !(s > 0.0) || !s.is_finite() {
            return Err(PrecisionError::NonPositiveScale { index, value: s });
        }
    }
    let dim: usize = blocks.iter().map(Block::dim).sum();
    let mut triplets = Vec::new();
    let mut labels = Vec::with_capacity(dim);
    let mut offset = 0usize;
    let mut all_intrinsic = !blocks.is_empty();
    for (b, (block, &tau)) in blocks.iter().zip(scales).enumerate() {
        match block {
            Block::Structured(q) => {
                for (i, j, v) in q.iter_all() {
                    triplets.push((offset + i, offset + j, tau * v));
                }
                for i in 0..q.dim() {
                    labels.push(q.label_of(i));
                }
                all_intrinsic &= q.is_intrinsic();
            }
            Block::Iid { dim } => {
                for i in 0..*dim {
                    triplets.push((offset + i, offset + i, tau));
                    labels.push(alloc::format!("b{b}.{i}"));
                }
                all_intrinsic = false;
            }
        }
        offset += block.dim();
    }
    PrecisionMatrix::from_triplets(dim, triplets, Some(labels), all_intrinsic)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::parse_network;

    fn three_node_net() -> WaterNetwork {
        parse_network(
            "node_id,x,y\na,,\nb,,\nc,,\n",
            "from_node,to_node,length_m\na,b,10\na,c,30\n",
        )
        .unwrap()
    }

    #[test]
    fn border_row_counts_two_neighbors() {
        let adj = Adjacency::from_pairs(
            alloc::vec!["a".into(), "b".into(), "c".into()],
            &[(0, 1), (0, 2)],
        );
        let q = build_border_precision(&adj).unwrap();
        assert_eq!(q.get(0, 0), 2.0);
        assert_eq!(q.get(0, 1), -1.0);
        assert_eq!(q.get(0, 2), -1.0);
        assert_eq!(q.get(1, 2), 0.0);
        assert!(q.is_intrinsic());
    }

    #[test]
    fn border_triangle_clique() {
        let adj = Adjacency::from_pairs(
            alloc::vec!["a".into(), "b".into(), "c".into()],
            &[(0, 1), (0, 2), (1, 2)],
        );
        let q = build_border_precision(&adj).unwrap();
        for i in 0..3 {
            assert_eq!(q.get(i, i), 2.0);
            for j in 0..3 {
                if i != j {
                    assert_eq!(q.get(i, j), -1.0);
                }
            }
        }
    }

    #[test]
    fn border_path_endpoints_count_one() {
        let adj = Adjacency::from_pairs(
            alloc::vec!["a".into(), "b".into(), "c".into()],
            &[(0, 1), (1, 2)],
        );
        let q = build_border_precision(&adj).unwrap();
        let expected = [[1.0, -1.0, 0.0], [-1.0, 2.0, -1.0], [0.0, -1.0, 1.0]];
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(q.get(i, j), expected[i][j], "({i},{j})");
            }
        }
    }

    #[test]
    fn border_asymmetric_rejected() {
        let adj = Adjacency::from_neighbor_lists(
            alloc::vec!["a".into(), "b".into()],
            alloc::vec![alloc::vec![1], alloc::vec![]],
        );
        let err = build_border_precision(&adj).unwrap_err();
        assert!(matches!(err, PrecisionError::AsymmetricAdjacency { .. }));
    }

    #[test]
    fn border_self_neighbor_rejected() {
        let adj = Adjacency::from_neighbor_lists(
            alloc::vec!["a".into()],
            alloc::vec![alloc::vec![0]],
        );
        assert!(matches!(
            build_border_precision(&adj).unwrap_err(),
            PrecisionError::SelfNeighbor(_)
        ));
    }

    #[test]
    fn distance_three_node_fixture() {
        // Pipes a-b 10 m and a-c 30 m: row a is (1/10 + 1/30, -1/10, -1/30).
        let q = build_distance_precision(&three_node_net()).unwrap();
        let third = 1.0 / 30.0;
        assert!((q.get(0, 0) - (0.1 + third)).abs() < 1e-15);
        assert!((q.get(0, 1) + 0.1).abs() < 1e-15);
        assert!((q.get(0, 2) + third).abs() < 1e-15);
        assert_eq!(q.get(1, 2), 0.0);
        assert!((q.get(1, 1) - 0.1).abs() < 1e-15);
        assert!((q.get(2, 2) - third).abs() < 1e-15);
        // printed to two decimals the fixture reads 0.13 / -0.1 / -0.03
        let round2 = |x: f64| libm::round(x * 100.0) / 100.0;
        assert_eq!(round2(q.get(0, 0)), 0.13);
        assert_eq!(round2(q.get(0, 1)), -0.1);
        assert_eq!(round2(q.get(0, 2)), -0.03);
    }

    #[test]
    fn distance_single_edge() {
        let net = parse_network(
            "node_id,x,y\na,,\nb,,\n",
            "from_node,to_node,length_m\na,b,4\n",
        )
        .unwrap();
        let q = build_distance_precision(&net).unwrap();
        assert_eq!(q.get(0, 0), 0.25);
        assert_eq!(q.get(0, 1), -0.25);
        assert_eq!(q.get(1, 1), 0.25);
    }

    #[test]
    fn unit_lengths_reduce_to_border_counts() {
        let net = parse_network(
            "node_id,x,y\na,,\nb,,\nc,,\n",
            "from_node,to_node,length_m\na,b,1\nb,c,1\n",
        )
        .unwrap();
        let q = build_distance_precision(&net).unwrap();
        let adj = Adjacency::from_pairs(
            alloc::vec!["a".into(), "b".into(), "c".into()],
            &[(0, 1), (1, 2)],
        );
        let b = build_border_precision(&adj).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(q.get(i, j), b.get(i, j));
            }
        }
    }

    #[test]
    fn distance_is_direction_invariant() {
        let forward = parse_network(
            "node_id,x,y\na,,\nb,,\nc,,\n",
            "from_node,to_node,length_m\na,b,10\nb,c,20\n",
        )
        .unwrap();
        let reversed = parse_network(
            "node_id,x,y\na,,\nb,,\nc,,\n",
            "from_node,to_node,length_m\nb,a,10\nb,c,20\n",
        )
        .unwrap();
        let qf = build_distance_precision(&forward).unwrap();
        let qr = build_distance_precision(&reversed).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(qf.get(i, j), qr.get(i, j));
            }
        }
    }

    #[test]
    fn parallel_segments_merge_weights() {
        let net = parse_network(
            "node_id,x,y\na,,\nb,,\n",
            "from_node,to_node,length_m\na,b,10\nb,a,40\n",
        )
        .unwrap();
        let q = build_distance_precision(&net).unwrap();
        assert!((q.get(0, 1) + (0.1 + 0.025)).abs() < 1e-15);
        assert!((q.row_sum(0)).abs() < 1e-15);
    }

    #[test]
    fn distance_rows_sum_to_zero() {
        let q = build_distance_precision(&three_node_net()).unwrap();
        for i in 0..q.dim() {
            assert!(q.row_sum(i).abs() < 1e-12);
        }
    }

    #[test]
    fn length_scaling_inverts_matrix_scale() {
        let base = parse_network(
            "node_id,x,y\na,,\nb,,\nc,,\n",
            "from_node,to_node,length_m\na,b,10\na,c,30\n",
        )
        .unwrap();
        let tripled = parse_network(
            "node_id,x,y\na,,\nb,,\nc,,\n",
            "from_node,to_node,length_m\na,b,30\na,c,90\n",
        )
        .unwrap();
        let q = build_distance_precision(&base).unwrap();
        let q3 = build_distance_precision(&tripled).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert!((q3.get(i, j) - q.get(i, j) / 3.0).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn components_tracked_per_pattern() {
        let net = parse_network(
            "node_id,x,y\na,,\nb,,\nc,,\nd,,\n",
            "from_node,to_node,length_m\na,b,1\nc,d,1\n",
        )
        .unwrap();
        let q = build_distance_precision(&net).unwrap();
        assert_eq!(q.n_components(), 2);
        assert_eq!(q.components(), alloc::vec![alloc::vec![0, 1], alloc::vec![2, 3]]);
    }

    #[test]
    fn assemble_scales_structured_block() {
        let q = build_distance_precision(&three_node_net()).unwrap();
        let doubled = assemble_block_precision(&[Block::Structured(&q)], &[2.0]).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert!((doubled.get(i, j) - 2.0 * q.get(i, j)).abs() < 1e-15);
            }
        }
        assert!(doubled.is_intrinsic());
    }

    #[test]
    fn assemble_iid_block() {
        let q = assemble_block_precision(&[Block::Iid { dim: 4 }], &[0.5]).unwrap();
        assert_eq!(q.dim(), 4);
        for i in 0..4 {
            for j in 0..4 {
                let expect = if i == j { 0.5 } else { 0.0 };
                assert_eq!(q.get(i, j), expect);
            }
        }
        assert!(!q.is_intrinsic());
    }

    #[test]
    fn assemble_matches_dense_hand_assembly() {
        let car = build_distance_precision(&three_node_net()).unwrap();
        let joint =
            assemble_block_precision(&[Block::Structured(&car), Block::Iid { dim: 2 }], &[1.0, 3.0])
                .unwrap();
        assert_eq!(joint.dim(), 5);
        // dense oracle assembled by hand
        let mut dense = alloc::vec![alloc::vec![0.0; 5]; 5];
        for i in 0..3 {
            for j in 0..3 {
                dense[i][j] = car.get(i, j);
            }
        }
        dense[3][3] = 3.0;
        dense[4][4] = 3.0;
        for i in 0..5 {
            for j in 0..5 {
                assert!((joint.get(i, j) - dense[i][j]).abs() < 1e-15, "({i},{j})");
            }
        }
        assert!(!joint.is_intrinsic());
    }

    #[test]
    fn assemble_rejects_scale_mismatch_and_nonpositive() {
        let err = assemble_block_precision(&[Block::Iid { dim: 2 }], &[]).unwrap_err();
        assert!(matches!(err, PrecisionError::ScaleCountMismatch { .. }));
        let err = assemble_block_precision(&[Block::Iid { dim: 2 }], &[0.0]).unwrap_err();
        assert!(matches!(err, PrecisionError::NonPositiveScale { .. }));
    }

    #[test]
    fn triplets_reject_asymmetry() {
        let err = PrecisionMatrix::from_triplets(
            2,
            [(0, 1, 1.0), (1, 0, 2.0), (0, 0, 1.0), (1, 1, 1.0)],
            None,
            false,
        )
        .unwrap_err();
        assert!(matches!(err, PrecisionError::Asymmetric { .. }));
    }
}
