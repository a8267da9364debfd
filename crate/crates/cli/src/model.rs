//! Model and shell JSON files.

use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use shellkit_core::{DensityModel, Shell, StackedShellModel, Stage, Vector};

pub const MODEL_FORMAT: &str = "shellkit-model-v1";
pub const SHELL_FORMAT: &str = "shellkit-shell-v1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DensityFile {
    pub points: Vec<f64>,
    pub bandwidth: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StageFile {
    pub m: Vec<f64>,
    pub mu: Vec<f64>,
    pub density: DensityFile,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub format: String,
    pub class_label: String,
    pub lambda: f64,
    #[serde(rename = "K")]
    pub k_stages: usize,
    pub stages: Vec<StageFile>,
}

impl From<&StackedShellModel> for ModelFile {
    fn from(m: &StackedShellModel) -> Self {
        ModelFile {
            format: MODEL_FORMAT.into(),
            class_label: m.class_label.clone(),
            lambda: m.lambda,
            k_stages: m.depth(),
            stages: m
                .stages
                .iter()
                .map(|s| StageFile {
                    m: s.m.to_vec(),
                    mu: s.center.to_vec(),
                    density: DensityFile { points: s.density.points().to_vec(), bandwidth: s.density.bandwidth() },
                })
                .collect(),
        }
    }
}

impl ModelFile {
    pub fn into_model(self) -> Result<StackedShellModel> {
        if self.format != MODEL_FORMAT {
            bail!("unsupported model format {:?} (expected {MODEL_FORMAT})", self.format);
        }
        if self.k_stages != self.stages.len() {
            bail!("model declares K = {} but has {} stages", self.k_stages, self.stages.len());
        }
        let stages = self
            .stages
            .into_iter()
            .enumerate()
            .map(|(i, s)| {
                Ok(Stage {
                    m: Vector::new(s.m).with_context(|| format!("stage {i}: m"))?,
                    center: Vector::new(s.mu).with_context(|| format!("stage {i}: mu"))?,
                    density: DensityModel::from_parts(s.density.points, s.density.bandwidth).with_context(|| format!("stage {i}: density"))?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        if stages.last().is_some_and(|s| !s.m.is_zero()) {
            bail!("last stage mean must be the zero vector");
        }
        Ok(StackedShellModel::new(self.class_label, self.lambda, stages)?)
    }
}

pub fn save_model(path: &Path, model: &StackedShellModel) -> Result<()> {
    write_json(path, &ModelFile::from(model))
}

pub fn load_model(path: &Path) -> Result<StackedShellModel> {
    let f: ModelFile = read_json(path)?;
    f.into_model().with_context(|| format!("invalid model {}", path.display()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShellFile {
    pub format: String,
    pub center: Vec<f64>,
    pub radius_sq: f64,
    pub lambda: f64,
    pub iterations: usize,
    pub final_objective: f64,
}

impl From<&Shell> for ShellFile {
    fn from(s: &Shell) -> Self {
        ShellFile {
            format: SHELL_FORMAT.into(),
            center: s.center.to_vec(),
            radius_sq: s.radius_sq,
            lambda: s.lambda,
            iterations: s.iterations,
            final_objective: s.final_objective,
        }
    }
}

impl ShellFile {
    pub fn into_shell(self) -> Result<Shell> {
        if self.format != SHELL_FORMAT {
            bail!("unsupported shell format {:?} (expected {SHELL_FORMAT})", self.format);
        }
        Ok(Shell {
            center: Vector::new(self.center)?,
            radius_sq: self.radius_sq,
            lambda: self.lambda,
            iterations: self.iterations,
            final_objective: self.final_objective,
        })
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let file = std::fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
    let mut w = std::io::BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, value).with_context(|| format!("writing {}", path.display()))?;
    std::io::Write::write_all(&mut w, b"\n")?;
    Ok(())
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}
