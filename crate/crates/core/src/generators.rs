//! Planted-structure instance families.
//!
//! Couplings and fields are drawn i.i.d. from small discrete distributions.
//! Draw order is fixed: one `unit()` per coupler in canonical edge order,
//! then one `unit()` per node in index order, then (when requested) one
//! `sign()` per node for the random gauge. See [`crate::rng`] for the stream.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::chimera::ChimeraTopology;
use crate::error::{Error, Result};
use crate::exact::{self, Certificate};
use crate::ising::{Gauge, IsingModel, Metadata, Spins};
use crate::rng::StreamRng;

const PROBABILITY_SLACK: f64 = 1e-12;

fn check_entries(entries: &[(f64, f64)], what: &str) -> Result<f64> {
    let mut total = 0.0;
    for &(value, p) in entries {
        if !value.is_finite() {
            return Err(Error::InvalidDistribution(format!(
                "{what} value {value} is not finite"
            )));
        }
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidDistribution(format!(
                "{what} probability {p} for value {value} outside [0, 1]"
            )));
        }
        total += p;
    }
    Ok(total)
}

fn draw(entries: &[(f64, f64)], u: f64) -> Option<f64> {
    let mut cumulative = 0.0;
    for &(value, p) in entries {
        cumulative += p;
        if u < cumulative {
            return Some(value);
        }
    }
    None
}

/// Discrete field distribution; mass not listed sits on `h = 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct FieldDistribution {
    entries: Vec<(f64, f64)>,
}

impl FieldDistribution {
    pub fn new(entries: Vec<(f64, f64)>) -> Result<Self> {
        let total = check_entries(&entries, "field")?;
        if total > 1.0 + PROBABILITY_SLACK {
            return Err(Error::InvalidDistribution(format!(
                "field probabilities sum to {total} > 1"
            )));
        }
        Ok(FieldDistribution { entries })
    }

    pub fn entries(&self) -> &[(f64, f64)] {
        &self.entries
    }

    pub fn mean(&self) -> f64 {
        self.entries.iter().map(|(v, p)| v * p).sum()
    }

    pub fn sample(&self, u: f64) -> f64 {
        draw(&self.entries, u).unwrap_or(0.0)
    }
}

/// Discrete coupling distribution; probabilities sum to one.
#[derive(Clone, Debug, PartialEq)]
pub struct CouplingDistribution {
    entries: Vec<(f64, f64)>,
}

impl CouplingDistribution {
    pub fn new(entries: Vec<(f64, f64)>) -> Result<Self> {
        let total = check_entries(&entries, "coupling")?;
        if (total - 1.0).abs() > PROBABILITY_SLACK {
            return Err(Error::InvalidDistribution(format!(
                "coupling probabilities sum to {total}, expected 1"
            )));
        }
        Ok(CouplingDistribution { entries })
    }

    pub fn constant(value: f64) -> Self {
        CouplingDistribution {
            entries: vec![(value, 1.0)],
        }
    }

    pub fn entries(&self) -> &[(f64, f64)] {
        &self.entries
    }

    pub fn sample(&self, u: f64) -> f64 {
        // rounding can leave u just past the final cumulative sum
        draw(&self.entries, u).unwrap_or_else(|| {
            self.entries
                .iter()
                .rev()
                .find(|(_, p)| *p > 0.0)
                .map_or(0.0, |(v, _)| *v)
        })
    }
}

/// A named pair of coupling and field distributions.
#[derive(Clone, Debug, PartialEq)]
pub struct Family {
    pub name: String,
    pub couplings: CouplingDistribution,
    pub fields: FieldDistribution,
}

impl Family {
    pub fn custom(name: impl Into<String>, couplings: CouplingDistribution, fields: FieldDistribution) -> Self {
        Family {
            name: name.into(),
            couplings,
            fields,
        }
    }

    fn preset(name: &str, couplings: &[(f64, f64)], fields: &[(f64, f64)]) -> Self {
        Family {
            name: name.to_string(),
            couplings: CouplingDistribution::new(couplings.to_vec()).expect("preset couplings"),
            fields: FieldDistribution::new(fields.to_vec()).expect("preset fields"),
        }
    }
}

/// The built-in families keyed by canonical upper-case name.
pub fn family_presets() -> BTreeMap<&'static str, Family> {
    let ferro = [(-1.0, 1.0)];
    let corrupted = [(-1.0, 0.625), (0.2, 0.375)];
    let split_uniform = [(-0.03, 0.666), (0.03, 0.334)];
    let frustrated = [(-1.0, 0.020), (1.0, 0.010)];
    BTreeMap::from([
        ("BFM", Family::preset("BFM", &ferro, &[(-1.0, 0.010)])),
        ("FBFM", Family::preset("FBFM", &ferro, &frustrated)),
        ("CBFM", Family::preset("CBFM", &corrupted, &frustrated)),
        ("BFM-U", Family::preset("BFM-U", &ferro, &[(-0.01, 1.0)])),
        ("FBFM-U", Family::preset("FBFM-U", &ferro, &split_uniform)),
        ("CBFM-U", Family::preset("CBFM-U", &corrupted, &split_uniform)),
        (
            "RANF-1",
            Family::preset("RANF-1", &[(-1.0, 0.5), (1.0, 0.5)], &[(-1.0, 0.5), (1.0, 0.5)]),
        ),
    ])
}

/// Case-insensitive preset lookup.
pub fn family(name: &str) -> Result<Family> {
    let key = name.to_ascii_uppercase();
    family_presets()
        .remove(key.as_str())
        .ok_or_else(|| Error::UnknownFamily(name.to_string()))
}

/// Expected `E(σ ≡ -1) - E(σ ≡ +1)` for `node_count` nodes.
///
/// Couplings cancel between the two uniform states, leaving `-2 Σ h_i`,
/// whose expectation is `-2 N E[h]`.
pub fn expected_gap(family: &Family, node_count: usize) -> f64 {
    -2.0 * node_count as f64 * family.fields.mean()
}

/// Planted solution and (optionally) a certified optimum for one instance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub planted_config: Vec<i8>,
    pub gauge: Vec<i8>,
    /// No nonzero field was drawn, so `±planted` tie.
    #[serde(default)]
    pub degenerate: bool,
    pub certified: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub certified_energy: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub certified_optima: Vec<Vec<i8>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub certificate_method: Option<String>,
}

impl GroundTruth {
    pub fn planted(&self) -> Spins {
        Spins::from_vec_unchecked(self.planted_config.clone())
    }

    /// Planted state plus its global flip when the instance is degenerate.
    pub fn planted_optima(&self) -> Vec<Spins> {
        let p = self.planted();
        if self.degenerate {
            vec![p.clone(), p.flipped()]
        } else {
            vec![p]
        }
    }

    pub fn certified_configs(&self) -> Vec<Spins> {
        self.certified_optima
            .iter()
            .map(|c| Spins::from_vec_unchecked(c.clone()))
            .collect()
    }

    /// Records a complete certificate; rejects one the planted state beats.
    pub fn attach_certificate(&mut self, model: &IsingModel, cert: &Certificate) -> Result<()> {
        if !cert.proof_complete {
            return Err(Error::Contract("certificate is not a complete proof".into()));
        }
        let planted = model.energy(&self.planted())?;
        if cert.optimal_energy > planted {
            return Err(Error::Contract(format!(
                "certified energy {} exceeds planted energy {}",
                cert.optimal_energy, planted
            )));
        }
        self.certified = true;
        self.certified_energy = Some(cert.optimal_energy);
        self.certified_optima = cert
            .optimal_configs
            .iter()
            .map(|c| c.as_slice().to_vec())
            .collect();
        self.certificate_method = Some(cert.method.name().to_string());
        Ok(())
    }

    pub fn to_json_string(&self) -> Result<String> {
        let mut s = serde_json::to_string(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json_string()?).map_err(|e| Error::io(path, e))
    }
}

/// Sidecar path for an instance file: `x.json` → `x.truth.json`.
pub fn sidecar_path(instance: &Path) -> std::path::PathBuf {
    let stem = instance
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    instance.with_file_name(format!("{stem}.truth.json"))
}

/// Draws one instance on `topology`.
///
/// The returned model carries the family, seed, distributions and topology
/// in its metadata but never the gauge; that lives only in the ground truth.
pub fn generate(
    topology: &ChimeraTopology,
    family: &Family,
    random_gauge: bool,
    seed: u64,
) -> Result<(IsingModel, GroundTruth)> {
    let mut rng = StreamRng::new(seed);
    let nodes = topology.nodes();
    let index = |id: usize| nodes.binary_search(&id).expect("present node");
    let edges: Vec<(usize, usize, f64)> = topology
        .edges()
        .iter()
        .map(|&(a, b)| (index(a), index(b), family.couplings.sample(rng.unit())))
        .collect();
    let fields: Vec<f64> = nodes.iter().map(|_| family.fields.sample(rng.unit())).collect();
    let gauge = if random_gauge {
        Gauge::new(nodes.iter().map(|_| rng.sign()).collect())?
    } else {
        Gauge::identity(nodes.len())
    };
    let degenerate = fields.iter().all(|&h| h == 0.0);

    let mut metadata = Metadata::new();
    metadata.insert("generator".into(), json!("ising-bench"));
    metadata.insert("family".into(), json!(family.name));
    metadata.insert("seed".into(), json!(seed));
    metadata.insert("random_gauge".into(), json!(random_gauge));
    metadata.insert("couplings".into(), pairs_json(family.couplings.entries()));
    metadata.insert("fields".into(), pairs_json(family.fields.entries()));
    metadata.insert("topology".into(), topology.to_json_value());

    let base = IsingModel::new(nodes.len(), edges, fields)?
        .with_labels(nodes.to_vec())?
        .with_metadata(metadata);
    let mut model = base.gauge_transform(&gauge)?;
    model.metadata_mut().remove("gauge");

    let planted = gauge.apply(&Spins::uniform(nodes.len(), 1))?;
    let truth = GroundTruth {
        planted_config: planted.into_vec(),
        gauge: gauge.as_slice().to_vec(),
        degenerate,
        certified: false,
        certified_energy: None,
        certified_optima: Vec::new(),
        certificate_method: None,
    };
    Ok((model, truth))
}

fn pairs_json(entries: &[(f64, f64)]) -> Value {
    Value::from(
        entries
            .iter()
            .map(|&(v, p)| json!([v, p]))
            .collect::<Vec<_>>(),
    )
}

/// Certifies `truth` with [`exact::certify_model`], seeding the search with the planted state.
pub fn certify(model: &IsingModel, truth: &mut GroundTruth, bnb_time_limit: f64) -> Result<Certificate> {
    let cert = exact::certify_model(model, bnb_time_limit, Some(&truth.planted()))?;
    if cert.proof_complete {
        truth.attach_certificate(model, &cert)?;
    }
    Ok(cert)
}
