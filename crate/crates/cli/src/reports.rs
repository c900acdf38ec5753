//! JSON report envelopes. Every command emits one JSON document with a
//! schema-version field; all maps are struct-backed so field order (and
//! therefore the bytes) are deterministic for fixed inputs and seeds.

use serde::Serialize;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Serialize)]
pub struct Envelope<T: Serialize> {
    pub schema_version: u32,
    pub command: &'static str,
    #[serde(flatten)]
    pub body: T,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timings: Option<Timings>,
}

#[derive(Serialize)]
pub struct Timings {
    pub total_ms: f64,
}

pub fn render<T: Serialize>(command: &'static str, body: T, total_ms: Option<f64>) -> String {
    let envelope = Envelope {
        schema_version: SCHEMA_VERSION,
        command,
        body,
        timings: total_ms.map(|total_ms| Timings { total_ms }),
    };
    let mut out = serde_json::to_string_pretty(&envelope).expect("report serialization");
    out.push('\n');
    out
}

#[derive(Serialize)]
pub struct SolveBody {
    pub method: String,
    pub labels: Vec<usize>,
    pub energy: f64,
}

#[derive(Serialize)]
pub struct LpBody {
    pub objective: f64,
    pub integral: bool,
    pub provenance: potts_core::locallp::Provenance,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mps_dumped_to: Option<String>,
}

#[derive(Serialize)]
pub struct CheckBody {
    pub labels: Vec<usize>,
    pub labeling_source: String,
    #[serde(flatten)]
    pub report: potts_core::stability::StabilityReport,
}

#[derive(Serialize)]
pub struct RepairBody {
    pub target: Vec<usize>,
    #[serde(flatten)]
    pub result: potts_core::repair::RepairResult,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wrote: Option<String>,
}

#[derive(Serialize)]
pub struct RepairGridBody {
    pub target: Vec<usize>,
    pub grid: Vec<RepairGridEntry>,
}

#[derive(Serialize)]
pub struct RepairGridEntry {
    pub psi: f64,
    pub objective: f64,
    pub cost_changed_fraction: f64,
    pub weight_changed_fraction: f64,
    pub post_verdict: potts_core::stability::Verdict,
}

#[derive(Serialize)]
pub struct BoundsBody {
    pub target: Vec<usize>,
    #[serde(flatten)]
    pub report: potts_core::bounds::BoundReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reference: Option<serde_json::Value>,
}

#[derive(Serialize)]
pub struct StereoBody {
    pub nodes: usize,
    pub edges: usize,
    pub labels: usize,
    pub wrote: String,
}

#[derive(Serialize)]
pub struct NoiseSampleBody {
    pub active_nodes: usize,
    pub active_edges: usize,
    pub max_residual_bias: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wrote: Option<String>,
}
