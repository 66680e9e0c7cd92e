//! Chimera cell-grid topologies.
//!
//! A Chimera graph is an `rows × cols` grid of unit cells. Each cell is a
//! complete bipartite graph `K_{K,K}` between half 0 and half 1. Half-0
//! qubits couple to the same position in the cell below; half-1 qubits
//! couple to the same position in the cell to the right.
//!
//! Node ids are `(row * cols + col) * 2K + half * K + index`.

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ising::IsingModel;
use crate::rng::StreamRng;

/// Position of a qubit inside the grid.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Coord {
    pub row: usize,
    pub col: usize,
    pub half: usize,
    pub index: usize,
}

/// Nodes and couplers missing from the ideal graph.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Omissions {
    pub nodes: Vec<usize>,
    pub edges: Vec<(usize, usize)>,
}

#[derive(Debug, Serialize, Deserialize)]
struct TopologyFile {
    rows: usize,
    cols: usize,
    cell_size: usize,
    #[serde(default)]
    omitted_nodes: Vec<usize>,
    #[serde(default)]
    omitted_edges: Vec<[usize; 2]>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ChimeraTopology {
    rows: usize,
    cols: usize,
    cell_size: usize,
    omitted_nodes: BTreeSet<usize>,
    omitted_edges: BTreeSet<(usize, usize)>,
    nodes: Vec<usize>,
    edges: Vec<(usize, usize)>,
}

impl ChimeraTopology {
    pub fn ideal(rows: usize, cols: usize, cell_size: usize) -> Result<Self> {
        Self::build(rows, cols, cell_size, &Omissions::default())
    }

    pub fn build(rows: usize, cols: usize, cell_size: usize, omissions: &Omissions) -> Result<Self> {
        if rows == 0 || cols == 0 || cell_size == 0 {
            return Err(Error::InvalidTopology(format!(
                "grid {rows}x{cols} with cell size {cell_size} is empty"
            )));
        }
        let ideal_nodes = rows * cols * 2 * cell_size;
        let ideal_edges = ideal_edge_list(rows, cols, cell_size);

        let mut omitted_nodes = BTreeSet::new();
        for &n in &omissions.nodes {
            if n >= ideal_nodes {
                return Err(Error::InvalidTopology(format!(
                    "omitted node {n} is outside the {ideal_nodes}-node grid"
                )));
            }
            if !omitted_nodes.insert(n) {
                return Err(Error::InvalidTopology(format!("node {n} omitted twice")));
            }
        }
        let ideal_set: BTreeSet<(usize, usize)> = ideal_edges.iter().copied().collect();
        let mut omitted_edges = BTreeSet::new();
        for &(a, b) in &omissions.edges {
            let e = (a.min(b), a.max(b));
            if !ideal_set.contains(&e) {
                return Err(Error::InvalidTopology(format!(
                    "omitted edge ({a}, {b}) is not a Chimera coupler"
                )));
            }
            if !omitted_edges.insert(e) {
                return Err(Error::InvalidTopology(format!("edge ({a}, {b}) omitted twice")));
            }
        }

        let nodes = (0..ideal_nodes).filter(|n| !omitted_nodes.contains(n)).collect();
        let edges = ideal_edges
            .into_iter()
            .filter(|(a, b)| {
                !omitted_nodes.contains(a)
                    && !omitted_nodes.contains(b)
                    && !omitted_edges.contains(&(*a, *b))
            })
            .collect();
        Ok(ChimeraTopology {
            rows,
            cols,
            cell_size,
            omitted_nodes,
            omitted_edges,
            nodes,
            edges,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn cell_size(&self) -> usize {
        self.cell_size
    }

    pub fn cell_count(&self) -> usize {
        self.rows * self.cols
    }

    pub fn ideal_node_count(&self) -> usize {
        self.rows * self.cols * 2 * self.cell_size
    }

    /// Present node ids, ascending.
    pub fn nodes(&self) -> &[usize] {
        &self.nodes
    }

    /// Present couplers `(a, b)` with `a < b`, ascending.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn omissions(&self) -> Omissions {
        Omissions {
            nodes: self.omitted_nodes.iter().copied().collect(),
            edges: self.omitted_edges.iter().copied().collect(),
        }
    }

    pub fn node_id(&self, c: Coord) -> usize {
        (c.row * self.cols + c.col) * 2 * self.cell_size + c.half * self.cell_size + c.index
    }

    pub fn coord(&self, id: usize) -> Coord {
        let k = self.cell_size;
        let cell = id / (2 * k);
        let within = id % (2 * k);
        Coord {
            row: cell / self.cols,
            col: cell % self.cols,
            half: within / k,
            index: within % k,
        }
    }

    pub fn contains_node(&self, id: usize) -> bool {
        id < self.ideal_node_count() && !self.omitted_nodes.contains(&id)
    }

    pub fn contains_edge(&self, a: usize, b: usize) -> bool {
        self.edges.binary_search(&(a.min(b), a.max(b))).is_ok()
    }

    pub fn max_degree(&self) -> usize {
        let mut degree = vec![0usize; self.ideal_node_count()];
        for &(a, b) in &self.edges {
            degree[a] += 1;
            degree[b] += 1;
        }
        degree.into_iter().max().unwrap_or(0)
    }

    /// Drops each present node independently with probability `rate`.
    ///
    /// One `unit()` draw per present node, in ascending id order.
    pub fn with_random_omissions(&self, rate: f64, seed: u64) -> Result<Self> {
        if !(0.0..1.0).contains(&rate) {
            return Err(Error::InvalidArgument(format!(
                "node drop rate {rate} outside [0, 1)"
            )));
        }
        let mut rng = StreamRng::new(seed);
        let mut omissions = self.omissions();
        for &n in &self.nodes {
            if rng.unit() < rate {
                omissions.nodes.push(n);
            }
        }
        // edges already listed stay listed even if a new node drop covers them
        Self::build(self.rows, self.cols, self.cell_size, &omissions)
    }

    /// Zero-coefficient Ising model on this graph, labelled with node ids.
    pub fn empty_model(&self) -> IsingModel {
        let index = |id: usize| self.nodes.binary_search(&id).expect("present node");
        IsingModel::new(
            self.nodes.len(),
            self.edges.iter().map(|&(a, b)| (index(a), index(b), 0.0)),
            vec![0.0; self.nodes.len()],
        )
        .and_then(|m| m.with_labels(self.nodes.clone()))
        .expect("topology yields a valid graph")
    }

    pub fn to_json_value(&self) -> serde_json::Value {
        serde_json::to_value(self.to_file()).expect("topology serializes")
    }

    pub fn from_json_value(value: &serde_json::Value) -> Result<Self> {
        let file: TopologyFile = serde_json::from_value(value.clone())?;
        Self::from_file(file)
    }

    pub fn to_json_string(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.to_file()).expect("topology serializes");
        s.push('\n');
        s
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        Self::from_file(serde_json::from_str(text)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json_str(&text)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json_string()).map_err(|e| Error::io(path, e))
    }

    fn to_file(&self) -> TopologyFile {
        TopologyFile {
            rows: self.rows,
            cols: self.cols,
            cell_size: self.cell_size,
            omitted_nodes: self.omitted_nodes.iter().copied().collect(),
            omitted_edges: self.omitted_edges.iter().map(|&(a, b)| [a, b]).collect(),
        }
    }

    fn from_file(file: TopologyFile) -> Result<Self> {
        let omissions = Omissions {
            nodes: file.omitted_nodes,
            edges: file.omitted_edges.into_iter().map(|[a, b]| (a, b)).collect(),
        };
        Self::build(file.rows, file.cols, file.cell_size, &omissions)
    }
}

fn ideal_edge_list(rows: usize, cols: usize, k: usize) -> Vec<(usize, usize)> {
    let id = |r: usize, c: usize, half: usize, i: usize| (r * cols + c) * 2 * k + half * k + i;
    let mut edges = Vec::with_capacity(rows * cols * (k * k + 2 * k));
    for r in 0..rows {
        for c in 0..cols {
            for a in 0..k {
                for b in 0..k {
                    edges.push((id(r, c, 0, a), id(r, c, 1, b)));
                }
            }
            for i in 0..k {
                if r + 1 < rows {
                    edges.push((id(r, c, 0, i), id(r + 1, c, 0, i)));
                }
                if c + 1 < cols {
                    edges.push((id(r, c, 1, i), id(r, c + 1, 1, i)));
                }
            }
        }
    }
    edges.sort_unstable();
    edges
}
