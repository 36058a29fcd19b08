//! Experiment configuration: a single JSON document.

use std::fs;
use std::path::{Path, PathBuf};

use eit_core::geometry::{Inclusion, Phantom, Point, Shape};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// Environment variable that relocates relative output directories.
pub const OUTPUT_ROOT_ENV: &str = "EIT_OUTPUT_ROOT";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case", deny_unknown_fields)]
pub enum InclusionSpec {
    Disk {
        center: [f64; 2],
        radius: f64,
        contrast: f64,
    },
    Rectangle {
        lower_left: [f64; 2],
        upper_right: [f64; 2],
        contrast: f64,
    },
    Ellipse {
        center: [f64; 2],
        semi_x: f64,
        semi_y: f64,
        contrast: f64,
    },
}

impl InclusionSpec {
    pub fn to_inclusion(&self) -> Inclusion {
        let pt = |p: [f64; 2]| Point::new(p[0], p[1]);
        match *self {
            Self::Disk {
                center,
                radius,
                contrast,
            } => Inclusion {
                shape: Shape::Disk {
                    center: pt(center),
                    radius,
                },
                contrast,
            },
            Self::Rectangle {
                lower_left,
                upper_right,
                contrast,
            } => Inclusion {
                shape: Shape::Rectangle {
                    lower_left: pt(lower_left),
                    upper_right: pt(upper_right),
                },
                contrast,
            },
            Self::Ellipse {
                center,
                semi_x,
                semi_y,
                contrast,
            } => Inclusion {
                shape: Shape::Ellipse {
                    center: pt(center),
                    semi_x,
                    semi_y,
                },
                contrast,
            },
        }
    }

    pub fn contrast(&self) -> f64 {
        match *self {
            Self::Disk { contrast, .. }
            | Self::Rectangle { contrast, .. }
            | Self::Ellipse { contrast, .. } => contrast,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverKind {
    Frobenius,
    Spectral,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ComparisonMode {
    /// Box `[0, min(a, beta_k)]`.
    None,
    /// Box `[0, a]`.
    NoBeta,
    /// Box `[0, beta_k]`.
    NoA,
    /// Unconstrained `min ||S a - vec||^2 + lambda ||a||^2`.
    Tikhonov { lambda: f64 },
}

fn default_n1() -> usize {
    16
}
fn default_mesh_refinement() -> usize {
    64
}
fn default_partition_resolution() -> usize {
    16
}
fn default_solver() -> SolverKind {
    SolverKind::Frobenius
}
fn default_comparison() -> ComparisonMode {
    ComparisonMode::None
}
fn default_tol() -> f64 {
    eit_core::solver::DEFAULT_TOL
}
fn default_max_iter() -> usize {
    eit_core::solver::DEFAULT_MAX_ITER
}
fn default_subgrid() -> usize {
    eit_core::geometry::DEFAULT_SUBGRID
}
fn default_class_samples() -> usize {
    eit_core::geometry::DEFAULT_CLASS_SAMPLES
}
fn default_canvas() -> usize {
    256
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub phantom: Vec<InclusionSpec>,
    /// Highest current order; the basis has `2 n1` currents.
    #[serde(default = "default_n1")]
    pub n1: usize,
    /// Number of mesh rings `R`.
    #[serde(default = "default_mesh_refinement")]
    pub mesh_refinement: usize,
    /// Pixel grid is `M x M` over `[-1, 1]^2`.
    #[serde(default = "default_partition_resolution")]
    pub partition_resolution: usize,
    pub delta_rel: f64,
    pub seed: u64,
    /// Defaults to the smallest contrast in the phantom.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma_min: Option<f64>,
    /// Noise level of the monotonicity test relative to `||V||_F`; defaults
    /// to `delta_rel`, i.e. the injected noise magnitude.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub test_delta_rel: Option<f64>,
    #[serde(default = "default_solver")]
    pub solver: SolverKind,
    #[serde(default = "default_comparison")]
    pub comparison_mode: ComparisonMode,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    /// Sub-grid per pixel axis for the sensitivity quadrature.
    #[serde(default = "default_subgrid")]
    pub subgrid: usize,
    /// Sample grid per pixel axis for inside/outside classification.
    #[serde(default = "default_class_samples")]
    pub class_samples: usize,
    #[serde(default = "default_canvas")]
    pub canvas_width: usize,
    #[serde(default = "default_canvas")]
    pub canvas_height: usize,
    pub output_dir: PathBuf,
}

fn field_err(field: &str, msg: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("{field}: {msg}"))
}

fn check_positive(field: &str, x: f64) -> Result<(), CliError> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(field_err(
            field,
            format!("must be positive and finite, got {x}"),
        ))
    }
}

fn check_range(field: &str, x: usize, lo: usize, hi: usize) -> Result<(), CliError> {
    if (lo..=hi).contains(&x) {
        Ok(())
    } else {
        Err(field_err(
            field,
            format!("must lie in [{lo}, {hi}], got {x}"),
        ))
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), CliError> {
        check_range("n1", self.n1, 1, 64)?;
        check_range("mesh_refinement", self.mesh_refinement, 1, 256)?;
        check_range("partition_resolution", self.partition_resolution, 2, 128)?;
        if !(self.delta_rel >= 0.0 && self.delta_rel.is_finite()) {
            return Err(field_err(
                "delta_rel",
                format!("must be >= 0, got {}", self.delta_rel),
            ));
        }
        if let Some(d) = self.test_delta_rel {
            if !(d >= 0.0 && d.is_finite()) {
                return Err(field_err(
                    "test_delta_rel",
                    format!("must be >= 0, got {d}"),
                ));
            }
        }
        if let Some(g) = self.gamma_min {
            check_positive("gamma_min", g)?;
        } else if self.phantom.is_empty() {
            return Err(field_err("gamma_min", "required when the phantom is empty"));
        }
        if let ComparisonMode::Tikhonov { lambda } = self.comparison_mode {
            check_positive("comparison_mode.tikhonov.lambda", lambda)?;
        }
        if self.solver == SolverKind::Spectral
            && matches!(self.comparison_mode, ComparisonMode::Tikhonov { .. })
        {
            return Err(field_err(
                "solver",
                "spectral solver cannot be combined with tikhonov mode",
            ));
        }
        check_positive("tol", self.tol)?;
        check_range("max_iter", self.max_iter, 1, 10_000_000)?;
        check_range("subgrid", self.subgrid, 1, 256)?;
        check_range("class_samples", self.class_samples, 4, 256)?;
        check_range("canvas_width", self.canvas_width, 1, 8192)?;
        check_range("canvas_height", self.canvas_height, 1, 8192)?;
        if self.output_dir.as_os_str().is_empty() {
            return Err(field_err("output_dir", "must not be empty"));
        }
        self.phantom()?;
        Ok(())
    }

    pub fn phantom(&self) -> Result<Phantom, CliError> {
        Phantom::new(
            self.phantom
                .iter()
                .map(InclusionSpec::to_inclusion)
                .collect(),
        )
        .map_err(|e| field_err("phantom", e))
    }

    /// `gamma_min`, or the smallest phantom contrast.
    pub fn effective_gamma_min(&self) -> Option<f64> {
        self.gamma_min.or_else(|| {
            self.phantom
                .iter()
                .map(InclusionSpec::contrast)
                .min_by(f64::total_cmp)
        })
    }

    /// Output directory after applying [`OUTPUT_ROOT_ENV`] to relative paths.
    pub fn resolved_output_dir(&self) -> PathBuf {
        match std::env::var_os(OUTPUT_ROOT_ENV) {
            Some(root) if self.output_dir.is_relative() && !root.is_empty() => {
                PathBuf::from(root).join(&self.output_dir)
            }
            _ => self.output_dir.clone(),
        }
    }

    fn base(phantom: Vec<InclusionSpec>, delta_rel: f64, output_dir: &str) -> Self {
        Self {
            phantom,
            n1: default_n1(),
            mesh_refinement: default_mesh_refinement(),
            partition_resolution: default_partition_resolution(),
            delta_rel,
            seed: 42,
            gamma_min: None,
            test_delta_rel: None,
            solver: default_solver(),
            comparison_mode: default_comparison(),
            tol: default_tol(),
            max_iter: default_max_iter(),
            subgrid: default_subgrid(),
            class_samples: default_class_samples(),
            canvas_width: default_canvas(),
            canvas_height: default_canvas(),
            output_dir: PathBuf::from(output_dir),
        }
    }
}

pub const PRESET_NAMES: [&str; 3] = ["figure1", "figure3", "concentric"];

/// Ball, rectangle and ellipse with contrasts 3, 1 and 2.
pub fn figure1_phantom() -> Vec<InclusionSpec> {
    vec![
        InclusionSpec::Disk {
            center: [-0.4, -0.5],
            radius: 0.1,
            contrast: 3.0,
        },
        InclusionSpec::Rectangle {
            lower_left: [0.3, -0.65],
            upper_right: [0.45, -0.4],
            contrast: 1.0,
        },
        InclusionSpec::Ellipse {
            center: [0.1, 0.4],
            semi_x: 0.3,
            semi_y: 0.1,
            contrast: 2.0,
        },
    ]
}

/// Centered disk of radius `rho` and contrast `gamma`.
pub fn concentric_phantom(rho: f64, gamma: f64) -> Vec<InclusionSpec> {
    vec![InclusionSpec::Disk {
        center: [0.0, 0.0],
        radius: rho,
        contrast: gamma,
    }]
}

pub fn preset(name: &str) -> Result<ExperimentConfig, CliError> {
    match name {
        "figure1" => Ok(ExperimentConfig::base(
            figure1_phantom(),
            1e-3,
            "out/figure1",
        )),
        "figure3" => Ok(ExperimentConfig::base(
            vec![InclusionSpec::Disk {
                center: [0.0, 0.0],
                radius: 0.1,
                contrast: 3.0,
            }],
            1e-11,
            "out/figure3",
        )),
        "concentric" => {
            let mut cfg =
                ExperimentConfig::base(concentric_phantom(0.3, 1.0), 0.0, "out/concentric");
            cfg.n1 = 8;
            Ok(cfg)
        }
        other => Err(CliError::Config(format!(
            "unknown preset '{other}' (expected one of {})",
            PRESET_NAMES.join(", ")
        ))),
    }
}
