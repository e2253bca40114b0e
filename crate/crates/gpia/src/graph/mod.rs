//! Undirected simple graphs with node features, class labels and a
//! designated categorical property column.

mod io;
mod property;
mod sample;
mod synthetic;

use std::collections::{BTreeSet, HashSet};

use ndarray::{Array2, Axis};

use crate::error::{Error, Result};

pub use io::{load_graph, load_graph_dir, write_edges, write_features, write_graph};
pub use property::{
    count_groups, count_groups_from_values, evaluate_from_values, evaluate_property,
    group_size_ratio, Comparator, Group, Level, PropertySpec,
};
pub use sample::{
    densify, graph_fingerprint, overlap_report, sample_by_group_ratio, sample_subgraphs, split_node_pools,
    split_train_test, OverlapReport, SampleFlag, SubgraphSample, TrainTestSplit,
};
pub use synthetic::{generate_synthetic, SyntheticConfig, CORRELATED_COL, PROPERTY_COL};

#[derive(Clone, Debug, PartialEq)]
pub struct Graph {
    edges: Vec<(usize, usize)>,
    features: Array2<f64>,
    labels: Vec<usize>,
    classes: usize,
    property_col: usize,
    property_values: BTreeSet<i64>,
    adjacency: Vec<Vec<usize>>,
}

impl Graph {
    /// Builds a graph, validating every structural invariant. Edges are
    /// stored as `(min, max)` pairs in sorted order.
    pub fn new(
        features: Array2<f64>,
        labels: Vec<usize>,
        edges: impl IntoIterator<Item = (usize, usize)>,
        property_col: usize,
    ) -> Result<Self> {
        let n = features.nrows();
        if labels.len() != n {
            return Err(Error::Consistency(format!(
                "{} feature rows but {} labels",
                n,
                labels.len()
            )));
        }
        if property_col >= features.ncols() {
            return Err(Error::Consistency(format!(
                "property column {} out of range for {} feature columns",
                property_col,
                features.ncols()
            )));
        }
        let mut values = BTreeSet::new();
        for &x in features.column(property_col) {
            values.insert(property_code(x)?);
        }
        let edges = normalize_edges(n, edges)?;
        let classes = labels.iter().map(|&l| l + 1).max().unwrap_or(0);
        let adjacency = build_adjacency(n, &edges);
        Ok(Graph {
            edges,
            features,
            labels,
            classes,
            property_col,
            property_values: values,
            adjacency,
        })
    }

    pub fn n(&self) -> usize {
        self.features.nrows()
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn features(&self) -> &Array2<f64> {
        &self.features
    }

    pub fn feature_dim(&self) -> usize {
        self.features.ncols()
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    /// Number of classes. At least one more than the largest label; may be
    /// larger when inherited from a parent graph.
    pub fn num_classes(&self) -> usize {
        self.classes
    }

    pub fn property_col(&self) -> usize {
        self.property_col
    }

    /// Declared set of property-feature values.
    pub fn property_values(&self) -> &BTreeSet<i64> {
        &self.property_values
    }

    pub fn property_value(&self, node: usize) -> i64 {
        // Validated at construction.
        self.features[[node, self.property_col]] as i64
    }

    pub fn property_column(&self) -> Vec<i64> {
        (0..self.n()).map(|i| self.property_value(i)).collect()
    }

    pub fn neighbors(&self, node: usize) -> &[usize] {
        &self.adjacency[node]
    }

    pub fn degree(&self, node: usize) -> usize {
        self.adjacency[node].len()
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        let (a, b) = if u < v { (u, v) } else { (v, u) };
        self.edges.binary_search(&(a, b)).is_ok()
    }

    /// Overrides the class count (e.g. to keep a parent's count on a
    /// subgraph that happens to miss a class).
    pub fn with_num_classes(mut self, classes: usize) -> Result<Self> {
        if classes < self.labels.iter().map(|&l| l + 1).max().unwrap_or(0) {
            return Err(Error::Consistency(format!(
                "class count {classes} smaller than the largest label"
            )));
        }
        self.classes = classes;
        Ok(self)
    }

    /// Extends the declared property-value set with values from `values`.
    pub fn with_declared_values(mut self, values: &BTreeSet<i64>) -> Self {
        self.property_values.extend(values.iter().copied());
        self
    }

    /// Replaces the edge set, keeping nodes, features and labels.
    pub fn with_edges(&self, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let edges = normalize_edges(self.n(), edges)?;
        let adjacency = build_adjacency(self.n(), &edges);
        Ok(Graph {
            edges,
            adjacency,
            ..self.clone()
        })
    }

    /// Node-induced subgraph on `nodes` (any order, no duplicates). Local
    /// node `i` corresponds to the `i`-th smallest parent id.
    pub fn induced_subgraph(&self, nodes: &[usize]) -> Result<Graph> {
        let mut ids: Vec<usize> = nodes.to_vec();
        ids.sort_unstable();
        if ids.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Consistency("duplicate node in subgraph".into()));
        }
        if let Some(&bad) = ids.iter().find(|&&v| v >= self.n()) {
            return Err(Error::NodeRange { id: bad, n: self.n() });
        }
        let edges = induced_edges(self, &ids);
        self.materialize(&ids, edges)
    }

    /// Builds the subgraph on sorted parent ids `ids` with local edges.
    pub(crate) fn materialize(&self, ids: &[usize], local_edges: Vec<(usize, usize)>) -> Result<Graph> {
        let features = self.features.select(Axis(0), ids);
        let labels = ids.iter().map(|&i| self.labels[i]).collect();
        Ok(Graph::new(features, labels, local_edges, self.property_col)?
            .with_num_classes(self.classes)?
            .with_declared_values(&self.property_values))
    }

    /// Features the GNN consumes: the full matrix, or the matrix with the
    /// property column removed.
    pub fn model_inputs(&self, drop_property: bool) -> Array2<f64> {
        if !drop_property {
            return self.features.clone();
        }
        let keep: Vec<usize> = (0..self.feature_dim())
            .filter(|&c| c != self.property_col)
            .collect();
        self.features.select(Axis(1), &keep)
    }

    /// Same graph with nodes relabelled: node `i` becomes `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Graph> {
        let n = self.n();
        if perm.len() != n || perm.iter().collect::<HashSet<_>>().len() != n {
            return Err(Error::Consistency("not a permutation".into()));
        }
        let mut features = Array2::zeros(self.features.raw_dim());
        let mut labels = vec![0; n];
        for i in 0..n {
            features.row_mut(perm[i]).assign(&self.features.row(i));
            labels[perm[i]] = self.labels[i];
        }
        let edges = self.edges.iter().map(|&(u, v)| (perm[u], perm[v]));
        Ok(Graph::new(features, labels, edges, self.property_col)?
            .with_num_classes(self.classes)?
            .with_declared_values(&self.property_values))
    }
}

/// Local edges of the subgraph induced by sorted parent ids.
pub(crate) fn induced_edges(g: &Graph, ids: &[usize]) -> Vec<(usize, usize)> {
    let mut edges = Vec::new();
    for (a, &u) in ids.iter().enumerate() {
        for &v in g.neighbors(u) {
            if v > u {
                if let Ok(b) = ids.binary_search(&v) {
                    edges.push((a, b));
                }
            }
        }
    }
    edges.sort_unstable();
    edges
}

fn property_code(x: f64) -> Result<i64> {
    if !x.is_finite() || x.fract() != 0.0 || x < 0.0 {
        return Err(Error::Consistency(format!(
            "property column must hold non-negative integer codes, found {x}"
        )));
    }
    Ok(x as i64)
}

fn normalize_edges(
    n: usize,
    edges: impl IntoIterator<Item = (usize, usize)>,
) -> Result<Vec<(usize, usize)>> {
    let mut out = Vec::new();
    for (u, v) in edges {
        if u >= n {
            return Err(Error::NodeRange { id: u, n });
        }
        if v >= n {
            return Err(Error::NodeRange { id: v, n });
        }
        if u == v {
            return Err(Error::SelfLoop(u));
        }
        out.push(if u < v { (u, v) } else { (v, u) });
    }
    out.sort_unstable();
    if let Some(w) = out.windows(2).find(|w| w[0] == w[1]) {
        return Err(Error::DuplicateEdge(w[0].0, w[0].1));
    }
    Ok(out)
}

fn build_adjacency(n: usize, edges: &[(usize, usize)]) -> Vec<Vec<usize>> {
    let mut adj = vec![Vec::new(); n];
    for &(u, v) in edges {
        adj[u].push(v);
        adj[v].push(u);
    }
    for list in &mut adj {
        list.sort_unstable();
    }
    adj
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::*;
    use ndarray::array;

    /// Nodes with the given property codes, one extra feature column and
    /// all labels zero.
    pub fn with_groups(values: &[i64], edges: &[(usize, usize)]) -> Graph {
        let n = values.len();
        let mut x = Array2::zeros((n, 2));
        for (i, &v) in values.iter().enumerate() {
            x[[i, 0]] = v as f64;
            x[[i, 1]] = i as f64;
        }
        Graph::new(x, vec![0; n], edges.iter().copied(), 0).unwrap()
    }

    pub fn path3() -> Graph {
        Graph::new(
            array![[0.0, 1.0], [1.0, 0.0], [0.0, 1.0]],
            vec![0, 1, 0],
            [(0, 1), (1, 2)],
            0,
        )
        .unwrap()
    }
}

#[cfg(test)]
mod tests {
    use super::fixtures::*;
    use super::*;
    use ndarray::array;

    #[test]
    fn rejects_self_loops_duplicates_and_range() {
        let x = array![[0.0], [1.0], [0.0]];
        assert!(matches!(
            Graph::new(x.clone(), vec![0; 3], [(2, 2)], 0),
            Err(Error::SelfLoop(2))
        ));
        assert!(matches!(
            Graph::new(x.clone(), vec![0; 3], [(0, 1), (1, 0)], 0),
            Err(Error::DuplicateEdge(0, 1))
        ));
        assert!(matches!(
            Graph::new(x.clone(), vec![0; 3], [(0, 5)], 0),
            Err(Error::NodeRange { id: 5, n: 3 })
        ));
        assert!(matches!(
            Graph::new(x, vec![0; 2], [], 0),
            Err(Error::Consistency(_))
        ));
    }

    #[test]
    fn property_column_must_be_integer_codes() {
        let x = array![[0.5], [1.0]];
        assert!(Graph::new(x, vec![0, 0], [], 0).is_err());
    }

    #[test]
    fn induced_subgraph_keeps_edges_between_sampled_nodes() {
        let g = with_groups(&[0, 1, 0, 1], &[(0, 1), (1, 2), (2, 3), (0, 3)]);
        let s = g.induced_subgraph(&[3, 0, 2]).unwrap();
        assert_eq!(s.n(), 3);
        // parent ids 0,2,3 -> local 0,1,2
        assert_eq!(s.edges(), &[(0, 2), (1, 2)]);
        assert_eq!(s.property_column(), vec![0, 0, 1]);
        assert_eq!(s.property_values(), g.property_values());
    }

    #[test]
    fn model_inputs_drop_property_column() {
        let g = path3();
        assert_eq!(g.model_inputs(false).ncols(), 2);
        let x = g.model_inputs(true);
        assert_eq!(x, array![[1.0], [0.0], [1.0]]);
    }

    #[test]
    fn permutation_relabels_consistently() {
        let g = path3();
        let p = g.permuted(&[2, 0, 1]).unwrap();
        assert_eq!(p.labels(), &[1, 0, 0]);
        assert!(p.has_edge(2, 0) && p.has_edge(0, 1));
        assert_eq!(p.num_edges(), 2);
    }
}
