//! Ising and QUBO data model.
//!
//! Energies follow `E(σ) = Σ_{(i,j)} J_ij σ_i σ_j + Σ_i h_i σ_i`. Every sum is
//! accumulated in a fixed order (edges sorted by `(i, j)`, then nodes by
//! index) so that the same model and configuration always produce the same
//! bits.

use std::collections::BTreeMap;
use std::fmt;

use serde_json::Value;

use crate::error::{Error, Result};

/// Free-form key/value annotations carried alongside a model.
pub type Metadata = BTreeMap<String, Value>;

/// A spin assignment over `{-1, 0, +1}`; `0` marks an unassigned spin.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Spins(Vec<i8>);

impl Spins {
    pub fn new(values: Vec<i8>) -> Result<Self> {
        if let Some(pos) = values.iter().position(|v| !matches!(v, -1..=1)) {
            return Err(Error::Contract(format!(
                "spin {} has value {}, expected -1, 0 or +1",
                pos, values[pos]
            )));
        }
        Ok(Spins(values))
    }

    pub fn uniform(len: usize, value: i8) -> Self {
        assert!(matches!(value, -1..=1));
        Spins(vec![value; len])
    }

    pub fn unassigned(len: usize) -> Self {
        Spins(vec![0; len])
    }

    /// Decodes a bitmask where bit `i = 0` means `σ_i = +1` and `1` means `σ_i = -1`.
    pub fn from_mask(mask: u64, len: usize) -> Self {
        Spins((0..len).map(|i| if mask >> i & 1 == 0 { 1 } else { -1 }).collect())
    }

    pub fn to_mask(&self) -> u64 {
        self.0
            .iter()
            .enumerate()
            .filter(|(_, &s)| s < 0)
            .fold(0u64, |m, (i, _)| m | 1 << i)
    }

    pub(crate) fn from_vec_unchecked(values: Vec<i8>) -> Self {
        debug_assert!(values.iter().all(|v| matches!(v, -1..=1)));
        Spins(values)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[i8] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<i8> {
        self.0
    }

    pub fn is_complete(&self) -> bool {
        self.0.iter().all(|&s| s != 0)
    }

    /// `-σ`.
    pub fn flipped(&self) -> Self {
        Spins(self.0.iter().map(|s| -s).collect())
    }

    pub(crate) fn check_complete(&self, expected_len: usize) -> Result<()> {
        if self.len() != expected_len {
            return Err(Error::Contract(format!(
                "configuration has {} spins, model has {}",
                self.len(),
                expected_len
            )));
        }
        if let Some(pos) = self.0.iter().position(|&s| s == 0) {
            return Err(Error::Contract(format!("spin {pos} is unassigned")));
        }
        Ok(())
    }
}

impl fmt::Display for Spins {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &s in &self.0 {
            f.write_str(match s {
                1 => "+",
                -1 => "-",
                _ => "0",
            })?;
        }
        Ok(())
    }
}

/// Number of positions where two complete configurations differ.
pub fn hamming_distance(a: &Spins, b: &Spins) -> Result<usize> {
    if a.len() != b.len() {
        return Err(Error::SizeMismatch {
            expected: a.len(),
            actual: b.len(),
        });
    }
    a.check_complete(a.len())?;
    b.check_complete(b.len())?;
    Ok(a.0.iter().zip(&b.0).filter(|(x, y)| x != y).count())
}

/// Per-node sign flips `g_i ∈ {-1, +1}`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Gauge(Vec<i8>);

impl Gauge {
    pub fn new(signs: Vec<i8>) -> Result<Self> {
        if let Some(pos) = signs.iter().position(|&g| g != 1 && g != -1) {
            return Err(Error::Contract(format!(
                "gauge entry {} is {}, expected ±1",
                pos, signs[pos]
            )));
        }
        Ok(Gauge(signs))
    }

    pub fn identity(len: usize) -> Self {
        Gauge(vec![1; len])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[i8] {
        &self.0
    }

    pub fn is_identity(&self) -> bool {
        self.0.iter().all(|&g| g == 1)
    }

    /// `(g ⊙ σ)_i = g_i σ_i`.
    pub fn apply(&self, config: &Spins) -> Result<Spins> {
        if config.len() != self.len() {
            return Err(Error::SizeMismatch {
                expected: self.len(),
                actual: config.len(),
            });
        }
        Ok(Spins(self.0.iter().zip(&config.0).map(|(g, s)| g * s).collect()))
    }

    pub fn compose(&self, other: &Gauge) -> Result<Gauge> {
        if other.len() != self.len() {
            return Err(Error::SizeMismatch {
                expected: self.len(),
                actual: other.len(),
            });
        }
        Ok(Gauge(self.0.iter().zip(&other.0).map(|(a, b)| a * b).collect()))
    }

    /// Bit `i` set where `g_i = -1`; XOR with a configuration mask applies the gauge.
    pub fn flip_mask(&self) -> u64 {
        Spins(self.0.clone()).to_mask()
    }
}

/// One coupler `J_ij` with `i < j`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Edge {
    pub i: usize,
    pub j: usize,
    pub coupling: f64,
}

/// Sorts `(i, j, value)` triples canonically and checks graph-shape invariants.
fn canonical_edges(
    node_count: usize,
    edges: impl IntoIterator<Item = (usize, usize, f64)>,
) -> Result<Vec<Edge>> {
    let mut out: Vec<Edge> = edges
        .into_iter()
        .map(|(a, b, c)| {
            let (i, j) = if a <= b { (a, b) } else { (b, a) };
            Edge { i, j, coupling: c }
        })
        .collect();
    for e in &out {
        if e.i == e.j {
            return Err(Error::InvalidInstance(format!("self-loop on node {}", e.i)));
        }
        if e.j >= node_count {
            return Err(Error::InvalidInstance(format!(
                "edge ({}, {}) references a node outside [0, {})",
                e.i, e.j, node_count
            )));
        }
        if !e.coupling.is_finite() {
            return Err(Error::InvalidInstance(format!(
                "edge ({}, {}) has non-finite coefficient",
                e.i, e.j
            )));
        }
    }
    out.sort_by_key(|e| (e.i, e.j));
    if let Some(w) = out.windows(2).find(|w| (w[0].i, w[0].j) == (w[1].i, w[1].j)) {
        return Err(Error::InvalidInstance(format!(
            "duplicate edge ({}, {})",
            w[0].i, w[0].j
        )));
    }
    Ok(out)
}

fn check_labels(labels: &[usize], node_count: usize) -> Result<()> {
    if labels.len() != node_count {
        return Err(Error::SizeMismatch {
            expected: node_count,
            actual: labels.len(),
        });
    }
    if labels.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidInstance(
            "variable labels must be strictly increasing".into(),
        ));
    }
    Ok(())
}

/// Sparse Ising model over dense node indices `0..N`.
///
/// `labels` maps each dense index to its external (hardware) id; it is the
/// identity unless the model was built from a graph with gaps.
#[derive(Clone, Debug, PartialEq)]
pub struct IsingModel {
    node_count: usize,
    edges: Vec<Edge>,
    fields: Vec<f64>,
    labels: Vec<usize>,
    metadata: Metadata,
    adjacency: Vec<Vec<(usize, f64)>>,
}

impl IsingModel {
    pub fn new(
        node_count: usize,
        edges: impl IntoIterator<Item = (usize, usize, f64)>,
        fields: Vec<f64>,
    ) -> Result<Self> {
        if fields.len() != node_count {
            return Err(Error::SizeMismatch {
                expected: node_count,
                actual: fields.len(),
            });
        }
        if let Some(pos) = fields.iter().position(|h| !h.is_finite()) {
            return Err(Error::InvalidInstance(format!(
                "field on node {pos} is not finite"
            )));
        }
        let edges = canonical_edges(node_count, edges)?;
        let mut adjacency = vec![Vec::new(); node_count];
        for e in &edges {
            adjacency[e.i].push((e.j, e.coupling));
            adjacency[e.j].push((e.i, e.coupling));
        }
        Ok(IsingModel {
            node_count,
            edges,
            fields,
            labels: (0..node_count).collect(),
            metadata: Metadata::new(),
            adjacency,
        })
    }

    pub fn with_labels(mut self, labels: Vec<usize>) -> Result<Self> {
        check_labels(&labels, self.node_count)?;
        self.labels = labels;
        Ok(self)
    }

    pub fn with_metadata(mut self, metadata: Metadata) -> Self {
        self.metadata = metadata;
        self
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn fields(&self) -> &[f64] {
        &self.fields
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn metadata(&self) -> &Metadata {
        &self.metadata
    }

    pub fn metadata_mut(&mut self) -> &mut Metadata {
        &mut self.metadata
    }

    /// Neighbours of `i` with the coupling to each, in ascending edge order.
    pub fn neighbors(&self, i: usize) -> &[(usize, f64)] {
        &self.adjacency[i]
    }

    pub fn coupling(&self, i: usize, j: usize) -> Option<f64> {
        self.adjacency[i]
            .iter()
            .find(|(k, _)| *k == j)
            .map(|(_, c)| *c)
    }

    pub fn energy(&self, config: &Spins) -> Result<f64> {
        config.check_complete(self.node_count)?;
        Ok(self.energy_of(config.as_slice()))
    }

    /// Energy of a raw spin slice; unassigned (`0`) entries contribute nothing.
    pub(crate) fn energy_of(&self, spins: &[i8]) -> f64 {
        let mut total = 0.0;
        for e in &self.edges {
            total += e.coupling * f64::from(spins[e.i] * spins[e.j]);
        }
        for (h, &s) in self.fields.iter().zip(spins) {
            total += h * f64::from(s);
        }
        total
    }

    /// `h_i + Σ_j J_ij σ_j`; flipping `σ_i` changes the energy by `-2 σ_i` times this.
    #[inline]
    pub fn local_field(&self, i: usize, spins: &[i8]) -> f64 {
        let mut f = self.fields[i];
        for &(j, c) in &self.adjacency[i] {
            f += c * f64::from(spins[j]);
        }
        f
    }

    /// `Σ -|J_ij| - Σ |h_i|`, the energy every term reaching its own minimum would give.
    pub fn frustration_bound(&self) -> f64 {
        let mut bound = 0.0;
        for e in &self.edges {
            bound -= e.coupling.abs();
        }
        for h in &self.fields {
            bound -= h.abs();
        }
        bound
    }

    /// Sum of coefficient magnitudes; used to scale numerical tolerances.
    pub fn scale(&self) -> f64 {
        -self.frustration_bound()
    }

    /// True iff the given optimum cannot satisfy every term at its own minimum.
    pub fn is_frustrated(&self, optimum: &Spins) -> Result<bool> {
        Ok(self.energy(optimum)? > self.frustration_bound())
    }

    /// `J'_ij = J_ij g_i g_j`, `h'_i = h_i g_i`.
    ///
    /// The composite gauge is kept under the `gauge` metadata key (removed
    /// when it composes back to the identity), so the operation is involutive.
    pub fn gauge_transform(&self, gauge: &Gauge) -> Result<IsingModel> {
        if gauge.len() != self.node_count {
            return Err(Error::SizeMismatch {
                expected: self.node_count,
                actual: gauge.len(),
            });
        }
        let g = gauge.as_slice();
        let edges = self
            .edges
            .iter()
            .map(|e| (e.i, e.j, e.coupling * f64::from(g[e.i] * g[e.j])));
        let fields = self
            .fields
            .iter()
            .zip(g)
            .map(|(h, &gi)| h * f64::from(gi))
            .collect();
        let mut metadata = self.metadata.clone();
        let prior = match metadata.get("gauge") {
            Some(v) => Some(gauge_from_value(v, self.node_count)?),
            None => None,
        };
        let composite = match prior {
            Some(p) => p.compose(gauge)?,
            None => gauge.clone(),
        };
        if composite.is_identity() {
            metadata.remove("gauge");
        } else {
            metadata.insert("gauge".into(), Value::from(composite.as_slice().to_vec()));
        }
        Ok(IsingModel::new(self.node_count, edges, fields)?
            .with_labels(self.labels.clone())?
            .with_metadata(metadata))
    }

    /// QUBO form under `σ_i = 2x_i - 1`; objective equals energy for matching assignments.
    pub fn to_boolean(&self) -> BoolModel {
        let mut linear: Vec<f64> = self.fields.iter().map(|h| 2.0 * h).collect();
        let mut quadratic = Vec::with_capacity(self.edges.len());
        let mut offset = 0.0;
        for e in &self.edges {
            quadratic.push(Edge {
                i: e.i,
                j: e.j,
                coupling: 4.0 * e.coupling,
            });
            linear[e.i] -= 2.0 * e.coupling;
            linear[e.j] -= 2.0 * e.coupling;
            offset += e.coupling;
        }
        for h in &self.fields {
            offset -= h;
        }
        BoolModel {
            node_count: self.node_count,
            linear,
            quadratic,
            offset,
            labels: self.labels.clone(),
            metadata: self.metadata.clone(),
        }
    }
}

pub(crate) fn gauge_from_value(value: &Value, len: usize) -> Result<Gauge> {
    let signs: Vec<i8> = serde_json::from_value(value.clone())?;
    if signs.len() != len {
        return Err(Error::SizeMismatch {
            expected: len,
            actual: signs.len(),
        });
    }
    Gauge::new(signs)
}

/// `Σ c_ij x_i x_j + Σ c_i x_i + c` over `x ∈ {0,1}^N`.
#[derive(Clone, Debug, PartialEq)]
pub struct BoolModel {
    node_count: usize,
    linear: Vec<f64>,
    quadratic: Vec<Edge>,
    offset: f64,
    labels: Vec<usize>,
    metadata: Metadata,
}

impl BoolModel {
    pub fn new(
        node_count: usize,
        quadratic: impl IntoIterator<Item = (usize, usize, f64)>,
        linear: Vec<f64>,
        offset: f64,
    ) -> Result<Self> {
        if linear.len() != node_count {
            return Err(Error::SizeMismatch {
                expected: node_count,
                actual: linear.len(),
            });
        }
        if !offset.is_finite() || linear.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidInstance("non-finite coefficient".into()));
        }
        Ok(BoolModel {
            node_count,
            quadratic: canonical_edges(node_count, quadratic)?,
            linear,
            offset,
            labels: (0..node_count).collect(),
            metadata: Metadata::new(),
        })
    }

    pub fn with_labels(mut self, labels: Vec<usize>) -> Result<Self> {
        check_labels(&labels, self.node_count)?;
        self.labels = labels;
        Ok(self)
    }

    pub fn with_metadata(mut self, metadata: Metadata) -> Self {
        self.metadata = metadata;
        self
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn linear(&self) -> &[f64] {
        &self.linear
    }

    pub fn quadratic(&self) -> &[Edge] {
        &self.quadratic
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn metadata(&self) -> &Metadata {
        &self.metadata
    }

    /// Objective value including the constant offset.
    pub fn objective(&self, x: &[u8]) -> Result<f64> {
        if x.len() != self.node_count {
            return Err(Error::SizeMismatch {
                expected: self.node_count,
                actual: x.len(),
            });
        }
        if x.iter().any(|&v| v > 1) {
            return Err(Error::Contract("boolean assignment outside {0, 1}".into()));
        }
        let mut total = 0.0;
        for e in &self.quadratic {
            total += e.coupling * f64::from(x[e.i] * x[e.j]);
        }
        for (c, &v) in self.linear.iter().zip(x) {
            total += c * f64::from(v);
        }
        Ok(total + self.offset)
    }

    /// Ising form under `x_i = (σ_i + 1) / 2`.
    ///
    /// Returns the model and the constant `k` with `objective(x) = E(σ) + k`.
    pub fn to_ising(&self) -> (IsingModel, f64) {
        let mut fields: Vec<f64> = self.linear.iter().map(|c| c / 2.0).collect();
        let mut offset = self.offset;
        let mut edges = Vec::with_capacity(self.quadratic.len());
        for e in &self.quadratic {
            let quarter = e.coupling / 4.0;
            edges.push((e.i, e.j, quarter));
            fields[e.i] += quarter;
            fields[e.j] += quarter;
            offset += quarter;
        }
        for c in &self.linear {
            offset += c / 2.0;
        }
        let model = IsingModel::new(self.node_count, edges, fields)
            .and_then(|m| m.with_labels(self.labels.clone()))
            .expect("bool model invariants carry over")
            .with_metadata(self.metadata.clone());
        (model, offset)
    }
}

/// Maps a spin configuration to `x_i = (σ_i + 1) / 2`.
pub fn spins_to_bits(config: &Spins) -> Result<Vec<u8>> {
    config.check_complete(config.len())?;
    Ok(config.as_slice().iter().map(|&s| u8::from(s > 0)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pair(j: f64) -> IsingModel {
        IsingModel::new(2, [(0, 1, j)], vec![0.0, 0.0]).unwrap()
    }

    #[test]
    fn energy_examples() {
        let m = pair(-1.0);
        assert_eq!(m.energy(&Spins::uniform(2, 1)).unwrap(), -1.0);
        let single = IsingModel::new(1, [], vec![-1.0]).unwrap();
        assert_eq!(single.energy(&Spins::uniform(1, 1)).unwrap(), -1.0);
    }

    #[test]
    fn energy_rejects_bad_configs() {
        let m = pair(-1.0);
        assert!(matches!(
            m.energy(&Spins::uniform(3, 1)),
            Err(Error::Contract(_))
        ));
        let partial = Spins::new(vec![1, 0]).unwrap();
        assert!(matches!(m.energy(&partial), Err(Error::Contract(_))));
        assert!(Spins::new(vec![2]).is_err());
    }

    #[test]
    fn model_rejects_bad_graphs() {
        assert!(IsingModel::new(2, [(0, 0, 1.0)], vec![0.0; 2]).is_err());
        assert!(IsingModel::new(2, [(0, 2, 1.0)], vec![0.0; 2]).is_err());
        assert!(IsingModel::new(2, [(0, 1, 1.0), (1, 0, 2.0)], vec![0.0; 2]).is_err());
        assert!(IsingModel::new(2, [], vec![0.0]).is_err());
    }

    #[test]
    fn edges_are_canonical() {
        let m = IsingModel::new(3, [(2, 1, 0.5), (1, 0, -1.0)], vec![0.0; 3]).unwrap();
        let pairs: Vec<_> = m.edges().iter().map(|e| (e.i, e.j)).collect();
        assert_eq!(pairs, vec![(0, 1), (1, 2)]);
    }

    #[test]
    fn frustration_examples() {
        let m = pair(-1.0);
        assert!(!m.is_frustrated(&Spins::uniform(2, 1)).unwrap());
        let triangle =
            IsingModel::new(3, [(0, 1, 1.0), (0, 2, 1.0), (1, 2, 1.0)], vec![0.0; 3]).unwrap();
        let best = (0..8u64)
            .map(|m| triangle.energy(&Spins::from_mask(m, 3)).unwrap())
            .fold(f64::INFINITY, f64::min);
        assert_eq!(best, -1.0);
        assert!(triangle
            .is_frustrated(&Spins::new(vec![1, -1, 1]).unwrap())
            .unwrap());
    }

    #[test]
    fn gauge_examples() {
        let m = IsingModel::new(3, [(0, 1, -1.0), (1, 2, 0.2)], vec![0.5, -1.0, 0.0]).unwrap();
        let flipped = m.gauge_transform(&Gauge::new(vec![-1; 3]).unwrap()).unwrap();
        assert_eq!(flipped.edges(), m.edges());
        assert_eq!(flipped.fields(), &[-0.5, 1.0, -0.0]);
        let same = m.gauge_transform(&Gauge::identity(3)).unwrap();
        assert_eq!(same, m);
        let g = Gauge::new(vec![1, -1, -1]).unwrap();
        assert_eq!(m.gauge_transform(&g).unwrap().gauge_transform(&g).unwrap(), m);
        assert!(m.gauge_transform(&Gauge::identity(2)).is_err());
    }

    #[test]
    fn to_boolean_examples() {
        let b = pair(-1.0).to_boolean();
        assert_eq!(b.quadratic()[0].coupling, -4.0);
        assert_eq!(b.linear(), &[2.0, 2.0]);
        assert_eq!(b.offset(), -1.0);

        let single = IsingModel::new(1, [], vec![1.0]).unwrap().to_boolean();
        assert_eq!(single.linear(), &[2.0]);
        assert_eq!(single.offset(), -1.0);

        for mask in 0..4 {
            let s = Spins::from_mask(mask, 2);
            let x = spins_to_bits(&s).unwrap();
            assert_eq!(pair(-1.0).energy(&s).unwrap(), b.objective(&x).unwrap());
        }
    }

    #[test]
    fn to_ising_examples() {
        let b = BoolModel::new(2, [(0, 1, 4.0)], vec![-2.0, -2.0], 1.0).unwrap();
        let (m, offset) = b.to_ising();
        assert_eq!(m.edges()[0].coupling, 1.0);
        assert_eq!(m.fields(), &[0.0, 0.0]);
        assert_eq!(offset, 0.0);

        let zero = BoolModel::new(3, [], vec![0.0; 3], 0.0).unwrap();
        let (m, offset) = zero.to_ising();
        assert!(m.fields().iter().all(|&h| h == 0.0));
        assert_eq!(offset, 0.0);

        let (back, offset) = pair(-1.0).to_boolean().to_ising();
        assert_eq!(back, pair(-1.0));
        assert_eq!(offset, 0.0);
    }

    #[test]
    fn hamming_examples() {
        let a = Spins::new(vec![1, 1, -1]).unwrap();
        let b = Spins::new(vec![1, -1, -1]).unwrap();
        assert_eq!(hamming_distance(&a, &a).unwrap(), 0);
        assert_eq!(hamming_distance(&a, &b).unwrap(), 1);
        let c = Spins::uniform(5, 1);
        assert_eq!(hamming_distance(&c, &c.flipped()).unwrap(), 5);
        assert!(hamming_distance(&a, &c).is_err());
    }

    #[test]
    fn mask_round_trip() {
        let s = Spins::new(vec![1, -1, -1, 1]).unwrap();
        assert_eq!(s.to_mask(), 0b0110);
        assert_eq!(Spins::from_mask(0b0110, 4), s);
    }
}
