//! Run specifications.

use std::path::PathBuf;

use anyhow::{bail, Result};
use maxosc::measures::MeasureSpec;
use maxosc::oscillator::{Profile, VSpec};
use maxosc::systems::{BlockFiltration, SystemConfig};
use serde::{Deserialize, Serialize};

pub const DEFAULT_MAX_LENGTH: u64 = 200_000_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSpec {
    pub system: SystemConfig,
    pub task: Task,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Task {
    Shadow(ShadowTask),
    Glue(GlueTask),
    CompileMeasure(CompileTask),
    Oscillate(OscillateTask),
}

impl Task {
    pub fn name(&self) -> &'static str {
        match self {
            Task::Shadow(_) => "shadow",
            Task::Glue(_) => "glue",
            Task::CompileMeasure(_) => "compile-measure",
            Task::Oscillate(_) => "oscillate",
        }
    }
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShadowTask {
    /// Pseudo-orbit CSV `index,x,y,level`, relative to the run file.
    pub input: PathBuf,
    #[serde(default = "yes")]
    pub periodic: bool,
    pub eta: f64,
    /// Defaults to a filtration sufficient for `eta`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub filtration: Option<BlockFiltration>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SegmentSpec {
    pub word: String,
    #[serde(default = "one_u64")]
    pub repeats: u64,
    #[serde(default = "one_u32")]
    pub level: u32,
}

fn one_u64() -> u64 {
    1
}

fn one_u32() -> u32 {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GlueTask {
    pub segments: Vec<SegmentSpec>,
    /// Glue into one periodic point instead of a one-sided stream.
    #[serde(default)]
    pub periodic: bool,
    #[serde(default = "one_usize")]
    pub resolution: usize,
    #[serde(default)]
    pub min_gap_one: bool,
}

fn one_usize() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompileTask {
    pub measure: MeasureSpec,
    pub zeta: f64,
    /// Cylinder words; defaults to the first `family_size` cylinders.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub functions: Option<Vec<String>>,
    #[serde(default = "default_family")]
    pub family_size: usize,
}

fn default_family() -> usize {
    maxosc::measures::DEFAULT_FAMILY_SIZE
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnchorSpec {
    pub cycle: String,
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OscillateTask {
    pub v: VSpec,
    pub depth: usize,
    pub profile: Profile,
    #[serde(default = "default_zeta0")]
    pub zeta0: f64,
    #[serde(default = "default_family")]
    pub family_size: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub anchor: Option<AnchorSpec>,
    #[serde(default)]
    pub min_gap_one: bool,
    /// Path parameters of the targets checked for `V ⊆ V_f`.
    #[serde(default = "default_targets")]
    pub targets: Vec<f64>,
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default = "default_pcn_scan")]
    pub pcn_scan: u64,
    #[serde(default = "default_max_length")]
    pub max_length: u64,
    #[serde(default = "default_prefix")]
    pub prefix_len: usize,
}

fn default_zeta0() -> f64 {
    maxosc::oscillator::DEFAULT_ZETA0
}

fn default_targets() -> Vec<f64> {
    vec![0.0, 0.25, 0.5, 0.75, 1.0]
}

fn default_tolerance() -> f64 {
    0.1
}

fn default_samples() -> usize {
    200
}

fn default_pcn_scan() -> u64 {
    100_000
}

fn default_max_length() -> u64 {
    DEFAULT_MAX_LENGTH
}

fn default_prefix() -> usize {
    4096
}

fn positive(field: &str, v: f64) -> Result<()> {
    if !(v > 0.0 && v.is_finite()) {
        bail!("invalid config: field `{field}`: must be > 0 (got {v})");
    }
    Ok(())
}

impl RunSpec {
    pub fn validate(&self) -> Result<()> {
        match &self.task {
            Task::Shadow(t) => {
                positive("task.eta", t.eta)?;
                if let Some(f) = &t.filtration {
                    f.validate()?;
                }
            }
            Task::Glue(t) => {
                if t.segments.is_empty() {
                    bail!("invalid config: field `task.segments`: must be nonempty");
                }
                if t.resolution == 0 {
                    bail!("invalid config: field `task.resolution`: must be ≥ 1");
                }
            }
            Task::CompileMeasure(t) => {
                positive("task.zeta", t.zeta)?;
                if t.family_size == 0 {
                    bail!("invalid config: field `task.family_size`: must be ≥ 1");
                }
            }
            Task::Oscillate(t) => {
                positive("task.zeta0", t.zeta0)?;
                positive("task.tolerance", t.tolerance)?;
                if let Some(e) = t.eta {
                    positive("task.eta", e)?;
                }
                if let Some(a) = &t.anchor {
                    positive("task.anchor.delta", a.delta)?;
                }
                if t.depth == 0 {
                    bail!("invalid config: field `task.depth`: must be ≥ 1");
                }
                if t.family_size == 0 {
                    bail!("invalid config: field `task.family_size`: must be ≥ 1");
                }
                if let Some(bad) = t.targets.iter().find(|t| !(0.0..=1.0).contains(*t)) {
                    bail!("invalid config: field `task.targets`: {bad} outside [0, 1]");
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const OSC: &str = r#"{
        "system": {"kind": "shift", "alphabet": 2, "forbidden": ["11"]},
        "task": {"kind": "oscillate", "v": {"path": [{"periodic": "0"}, {"periodic": "01"}]},
                 "depth": 6, "profile": {"desk": {"c": 2.0}}}
    }"#;

    #[test]
    fn round_trip() {
        let spec: RunSpec = serde_json::from_str(OSC).unwrap();
        spec.validate().unwrap();
        let text = serde_json::to_string(&spec).unwrap();
        assert_eq!(serde_json::from_str::<RunSpec>(&text).unwrap(), spec);
    }

    #[test]
    fn zero_zeta_names_field() {
        let mut spec: RunSpec = serde_json::from_str(OSC).unwrap();
        if let Task::Oscillate(t) = &mut spec.task {
            t.zeta0 = 0.0;
        }
        let err = spec.validate().unwrap_err().to_string();
        assert!(err.contains("task.zeta0"), "{err}");
    }
}
