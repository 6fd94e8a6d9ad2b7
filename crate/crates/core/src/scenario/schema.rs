//! Scenario files. Set, simplex, form and parameter indices are 1-based.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::cech::Shape;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Mode {
    #[serde(rename = "deg1-chain")]
    Deg1Chain,
    #[serde(rename = "deg1-paper")]
    Deg1Paper,
    #[serde(rename = "paper-direct")]
    PaperDirect,
    #[serde(rename = "zigzag")]
    Zigzag,
    #[serde(rename = "foliation")]
    Foliation,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Deg1Chain => "deg1-chain",
            Mode::Deg1Paper => "deg1-paper",
            Mode::PaperDirect => "paper-direct",
            Mode::Zigzag => "zigzag",
            Mode::Foliation => "foliation",
        }
    }

    pub fn needs_provider(self) -> bool {
        matches!(self, Mode::Deg1Paper | Mode::PaperDirect)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    pub mode: Mode,
    #[serde(default)]
    pub seed: u64,
    pub manifold: ManifoldBlock,
    #[serde(default)]
    pub cover: Option<CoverBlock>,
    #[serde(default)]
    pub family: Option<FamilyBlock>,
    #[serde(default)]
    pub provider: Option<ProviderBlock>,
    #[serde(default)]
    pub tolerances: BTreeMap<String, f64>,
    /// Verification points in `M`: a cell-centred grid clipped to the region.
    #[serde(default)]
    pub grid: Option<BoxGrid>,
    #[serde(default)]
    pub probe: Option<ProbeBlock>,
    #[serde(default)]
    pub oracle: Option<OracleBlock>,
    #[serde(default)]
    pub bundle: Option<BundleBlock>,
    /// Where `run` writes the report unless `--out` is given.
    #[serde(default)]
    pub output: Option<String>,
}

/// `M ⊆ R^dim` given by predicates that must all be positive, and a box
/// around it for rejection sampling.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifoldBlock {
    pub dim: usize,
    #[serde(default)]
    pub region: Vec<String>,
    pub sample_box: BoxSpec,
    #[serde(default = "default_region_samples")]
    pub region_samples: usize,
}

fn default_region_samples() -> usize {
    64
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoxSpec {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoxGrid {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub n: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoverBlock {
    pub sets: Vec<SetBlock>,
    #[serde(default)]
    pub nerve: Vec<SimplexBlock>,
    /// Extra samples drawn per simplex when none are listed.
    #[serde(default = "default_samples")]
    pub samples: usize,
}

fn default_samples() -> usize {
    crate::fixtures::SAMPLES
}

/// A cover set: either a parametrized `shape`, or explicit `membership`
/// predicates, `chart` and `bump`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SetBlock {
    #[serde(default)]
    pub name: Option<String>,
    #[serde(default)]
    pub shape: Option<Shape>,
    #[serde(default)]
    pub membership: Option<Vec<String>>,
    #[serde(default)]
    pub chart: Option<ChartBlock>,
    #[serde(default)]
    pub bump: Option<String>,
}

/// A chart given by a shape or by forward and inverse components.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChartBlock {
    #[serde(default)]
    pub shape: Option<Shape>,
    #[serde(default)]
    pub forward: Option<Vec<String>>,
    #[serde(default)]
    pub inverse: Option<Vec<String>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimplexBlock {
    pub simplex: Vec<usize>,
    #[serde(default)]
    pub chart: Option<ChartBlock>,
    #[serde(default)]
    pub witness: Option<Vec<f64>>,
    #[serde(default)]
    pub samples: Option<Vec<Vec<f64>>>,
}

/// `{indices: [i1 < i2 < ...], coeff}`; an empty index list is a 0-form.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermBlock {
    pub indices: Vec<usize>,
    pub coeff: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilyBlock {
    pub degree: usize,
    #[serde(default)]
    pub params: usize,
    pub form: Vec<TermBlock>,
    /// Parameter grid; omitted when there are no parameters.
    #[serde(default)]
    pub grid: Option<BoxGrid>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProviderMode {
    Symbolic,
    Jittered,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProviderBlock {
    pub mode: ProviderMode,
    pub eta: Vec<TermBlock>,
    #[serde(default)]
    pub jitter: Option<JitterBlock>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JitterBlock {
    pub at: JitterAt,
    /// A closed form added for parameters above the threshold.
    pub term: Vec<TermBlock>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JitterAt {
    pub param: usize,
    pub threshold: f64,
}

/// Smoothness probe in the parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeBlock {
    pub points: Vec<Vec<f64>>,
    pub centers: Vec<Vec<f64>>,
    pub h: f64,
    pub levels: usize,
}

/// A known primitive of a degree-1 family; outputs must differ from it by a
/// function of `x` alone.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleBlock {
    pub primitive: String,
}

/// Product bundle over the manifold and cover of the scenario, with a
/// leafwise form in total coordinates (base first).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BundleBlock {
    pub fiber_dim: usize,
    pub degree: usize,
    pub form: Vec<TermBlock>,
    #[serde(default)]
    pub fiber_centers: Option<Vec<Vec<f64>>>,
    pub fiber_grid: BoxGrid,
}
