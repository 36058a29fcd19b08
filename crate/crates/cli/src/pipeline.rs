//! mesh -> V -> noise -> partition -> S_k -> bounds -> solve -> artifacts.

use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::time::Instant;

use eit_core::fem::generate_mesh;
use eit_core::geometry::{
    build_partition_with, classify_pixel, PartitionOptions, PixelClass, PixelPartition, Shape,
};
use eit_core::monotonicity::{compute_bounds, contrast_bound, BoundsVector};
use eit_core::ntd::{
    add_noise, analytic_concentric, assemble_all_sk, assemble_v, write_matrix, CurrentBasis,
    MeasurementMatrix, SensitivityMatrix,
};
use eit_core::solver::{
    solve_box_ls, solve_spectral, solve_tikhonov, ReconstructionProblem, ReconstructionResult,
    SolverOptions,
};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::config::{ComparisonMode, ExperimentConfig, SolverKind};
use crate::error::{CliError, Stage, StageExt};
use crate::render::render_image;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PixelRecord {
    pub id: usize,
    pub ix: usize,
    pub iy: usize,
    pub x_center: f64,
    pub y_center: f64,
    pub area: f64,
    pub class: String,
    pub beta: f64,
    pub upper: f64,
    pub a_hat: f64,
}

/// Wall-clock seconds per stage.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StageTimings {
    pub mesh: f64,
    pub forward: f64,
    pub noise: f64,
    pub partition: f64,
    pub sensitivity: f64,
    pub bounds: f64,
    pub solve: f64,
    pub total: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub config: ExperimentConfig,
    pub mesh_nodes: usize,
    pub mesh_triangles: usize,
    pub num_currents: usize,
    pub v_frobenius_norm: f64,
    pub delta_abs: f64,
    /// Noise level used in the monotonicity test.
    pub test_delta_abs: f64,
    pub contrast_bound: f64,
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
    pub kkt_residual: f64,
    pub pixels: Vec<PixelRecord>,
    /// Kept out of `report.json` so the report is reproducible; written to
    /// `timings.json` instead.
    #[serde(skip)]
    pub timings: StageTimings,
}

/// Everything the pipeline computed, for callers that need more than the
/// report.
#[derive(Debug, Clone)]
pub struct PipelineOutput {
    pub report: Report,
    pub partition: PixelPartition,
    pub classes: Vec<PixelClass>,
    pub sensitivities: Vec<SensitivityMatrix>,
    pub v_exact: MeasurementMatrix,
    pub v_delta: MeasurementMatrix,
    pub bounds: BoundsVector,
    pub result: ReconstructionResult,
}

/// Upper bounds of the box for a comparison mode.
fn box_upper(mode: ComparisonMode, bounds: &BoundsVector) -> Vec<f64> {
    match mode {
        ComparisonMode::None | ComparisonMode::Tikhonov { .. } => bounds.effective_upper.clone(),
        ComparisonMode::NoBeta => vec![bounds.contrast_bound; bounds.beta.len()],
        ComparisonMode::NoA => bounds.beta.clone(),
    }
}

/// Runs every stage in memory without writing artifacts.
pub fn run_pipeline(cfg: &ExperimentConfig) -> Result<PipelineOutput, CliError> {
    cfg.validate()?;
    let start = Instant::now();
    let mut timings = StageTimings::default();
    let mut lap = Instant::now();
    let mut tick = |slot: &mut f64| {
        *slot = lap.elapsed().as_secs_f64();
        lap = Instant::now();
    };

    let phantom = cfg.phantom()?;
    let gamma_min = cfg
        .effective_gamma_min()
        .ok_or_else(|| CliError::Config("gamma_min: required when the phantom is empty".into()))?;
    let a = contrast_bound(gamma_min).stage(Stage::Bounds)?;

    let mesh = generate_mesh(cfg.mesh_refinement, &phantom).stage(Stage::Mesh)?;
    tick(&mut timings.mesh);

    let basis = CurrentBasis::new(cfg.n1).stage(Stage::Forward)?;
    let v_exact = assemble_v(&mesh, &basis).stage(Stage::Forward)?;
    tick(&mut timings.forward);

    let v_delta = add_noise(&v_exact, cfg.delta_rel, cfg.seed).stage(Stage::Noise)?;
    tick(&mut timings.noise);

    let opts = PartitionOptions {
        subgrid: cfg.subgrid,
        ..PartitionOptions::default()
    };
    let partition =
        build_partition_with(cfg.partition_resolution, &opts).stage(Stage::Partition)?;
    let classes = partition
        .pixels
        .iter()
        .map(|px| classify_pixel(px, &phantom, cfg.class_samples))
        .collect::<eit_core::Result<Vec<_>>>()
        .stage(Stage::Partition)?;
    tick(&mut timings.partition);

    let sensitivities = assemble_all_sk(&partition.pixels, &basis).stage(Stage::Sensitivity)?;
    tick(&mut timings.sensitivity);

    let v_norm = v_exact.frobenius_norm();
    let test_delta = cfg
        .test_delta_rel
        .map_or(v_delta.noise_level, |d| d * v_norm);
    let bounds = compute_bounds(&sensitivities, &v_delta, test_delta, a).stage(Stage::Bounds)?;
    tick(&mut timings.bounds);

    let problem = ReconstructionProblem::from_parts(
        &sensitivities,
        &v_delta,
        box_upper(cfg.comparison_mode, &bounds),
    )
    .stage(Stage::Solve)?;
    let solver_opts = SolverOptions {
        tol: cfg.tol,
        max_iter: cfg.max_iter,
    };
    let result = match (cfg.comparison_mode, cfg.solver) {
        (ComparisonMode::Tikhonov { lambda }, _) => solve_tikhonov(&problem, lambda),
        (_, SolverKind::Frobenius) => solve_box_ls(&problem, &solver_opts),
        (_, SolverKind::Spectral) => solve_spectral(&problem, &solver_opts),
    }
    .stage(Stage::Solve)?;
    tick(&mut timings.solve);
    timings.total = start.elapsed().as_secs_f64();

    let pixels = partition
        .pixels
        .iter()
        .zip(&classes)
        .enumerate()
        .map(|(k, (px, class))| {
            let c = px.cell.center();
            PixelRecord {
                id: px.id,
                ix: px.grid.0,
                iy: px.grid.1,
                x_center: c.x,
                y_center: c.y,
                area: px.area,
                class: class.as_str().to_string(),
                beta: bounds.beta[k],
                upper: problem.upper[k],
                a_hat: result.coefficients[k],
            }
        })
        .collect();

    let report = Report {
        config: cfg.clone(),
        mesh_nodes: mesh.num_nodes(),
        mesh_triangles: mesh.triangles.len(),
        num_currents: basis.len(),
        v_frobenius_norm: v_norm,
        delta_abs: v_delta.noise_level,
        test_delta_abs: bounds.delta_abs,
        contrast_bound: a,
        objective: result.objective,
        iterations: result.iterations,
        converged: result.converged,
        kkt_residual: result.kkt_residual,
        pixels,
        timings,
    };
    Ok(PipelineOutput {
        report,
        partition,
        classes,
        sensitivities,
        v_exact,
        v_delta,
        bounds,
        result,
    })
}

/// File names written by [`run_experiment`].
pub const ARTIFACTS: [&str; 9] = [
    "report.json",
    "timings.json",
    "v.txt",
    "v_delta.txt",
    "bounds.txt",
    "result.txt",
    "result_summary.txt",
    "reconstruction.pgm",
    "reconstruction.csv",
];

/// Runs the pipeline and writes its artifacts to the resolved output
/// directory. On failure, files this run created are removed again.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<PipelineOutput, CliError> {
    let out = run_pipeline(cfg)?;
    let dir = cfg.resolved_output_dir();
    let created_dir = !dir.exists();
    fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;
    let existed: Vec<bool> = ARTIFACTS.iter().map(|f| dir.join(f).exists()).collect();
    if let Err(e) = write_artifacts(&out, &dir) {
        for (name, &was_there) in ARTIFACTS.iter().zip(&existed) {
            if !was_there {
                let _ = fs::remove_file(dir.join(name));
            }
        }
        if created_dir {
            let _ = fs::remove_dir(&dir);
        }
        return Err(e);
    }
    Ok(out)
}

fn write_text(path: PathBuf, text: &str) -> Result<(), CliError> {
    fs::write(&path, text).map_err(|e| CliError::io(&path, e))
}

fn write_matrix_file(path: PathBuf, m: &DMatrix<f64>) -> Result<(), CliError> {
    let file = fs::File::create(&path).map_err(|e| CliError::io(&path, e))?;
    write_matrix(BufWriter::new(file), m).map_err(|e| CliError::io(&path, e))
}

fn write_artifacts(out: &PipelineOutput, dir: &Path) -> Result<(), CliError> {
    let report = &out.report;
    let json = serde_json::to_string_pretty(report).expect("report serializes");
    write_text(dir.join("report.json"), &(json + "\n"))?;
    let timings = serde_json::to_string_pretty(&report.timings).expect("timings serialize");
    write_text(dir.join("timings.json"), &(timings + "\n"))?;
    write_matrix_file(dir.join("v.txt"), &out.v_exact.entries)?;
    write_matrix_file(dir.join("v_delta.txt"), &out.v_delta.entries)?;

    let mut bounds = String::from("pixel_id, beta, effective_upper, class\n");
    for p in &report.pixels {
        bounds.push_str(&format!(
            "{}, {:.16e}, {:.16e}, {}\n",
            p.id, p.beta, p.upper, p.class
        ));
    }
    write_text(dir.join("bounds.txt"), &bounds)?;

    let mut result = String::from("pixel_id, a_hat\n");
    for p in &report.pixels {
        result.push_str(&format!("{}, {:.16e}\n", p.id, p.a_hat));
    }
    write_text(dir.join("result.txt"), &result)?;
    write_text(
        dir.join("result_summary.txt"),
        &format!(
            "objective = {:.16e}\niterations = {}\nconverged = {}\nkkt_residual = {:.16e}\n",
            report.objective, report.iterations, report.converged, report.kkt_residual
        ),
    )?;

    let cfg = &report.config;
    render_image(
        &out.result.coefficients,
        &out.partition,
        report.contrast_bound,
        cfg.canvas_width,
        cfg.canvas_height,
        dir,
        "reconstruction",
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleRow {
    pub j: usize,
    pub kind: String,
    pub fem: f64,
    pub analytic: f64,
    pub rel_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub rho: f64,
    pub sigma1: f64,
    pub mesh_refinement: usize,
    pub rows: Vec<OracleRow>,
    pub max_rel_error: f64,
    /// Largest off-diagonal entry over `||V||_F`.
    pub max_offdiag_rel: f64,
    pub pass: bool,
}

pub const ORACLE_DIAG_TOL: f64 = 0.02;
pub const ORACLE_OFFDIAG_TOL: f64 = 1e-3;

/// Compares the FEM diagonal of `V` with the analytic values for a single
/// centered disk.
pub fn oracle_check(cfg: &ExperimentConfig) -> Result<OracleReport, CliError> {
    cfg.validate()?;
    let phantom = cfg.phantom()?;
    let (rho, gamma) = match phantom.inclusions() {
        [inc] => match inc.shape {
            Shape::Disk { center, radius } if center.coords.norm() == 0.0 => (radius, inc.contrast),
            _ => {
                return Err(CliError::Config(
                    "phantom: oracle check needs one disk centered at the origin".into(),
                ))
            }
        },
        _ => {
            return Err(CliError::Config(
                "phantom: oracle check needs exactly one inclusion".into(),
            ))
        }
    };
    let sigma1 = 1.0 + gamma;
    let mesh = generate_mesh(cfg.mesh_refinement, &phantom).stage(Stage::Mesh)?;
    let basis = CurrentBasis::new(cfg.n1).stage(Stage::Forward)?;
    let v = assemble_v(&mesh, &basis).stage(Stage::Forward)?;
    let mut rows = Vec::with_capacity(basis.len());
    for (k, &(j, kind)) in basis.ordering().iter().enumerate() {
        let analytic =
            1.0 / j as f64 - analytic_concentric(rho, sigma1, j).stage(Stage::Forward)?;
        let fem = v.entries[(k, k)];
        rows.push(OracleRow {
            j,
            kind: kind.as_str().to_string(),
            fem,
            analytic,
            rel_error: (fem - analytic).abs() / analytic.abs(),
        });
    }
    let n = basis.len();
    let norm = v.frobenius_norm();
    let mut offdiag: f64 = 0.0;
    for r in 0..n {
        for c in 0..n {
            if r != c {
                offdiag = offdiag.max(v.entries[(r, c)].abs());
            }
        }
    }
    let max_rel_error = rows.iter().fold(0.0_f64, |m, r| m.max(r.rel_error));
    let max_offdiag_rel = if norm > 0.0 { offdiag / norm } else { 0.0 };
    Ok(OracleReport {
        rho,
        sigma1,
        mesh_refinement: cfg.mesh_refinement,
        rows,
        max_rel_error,
        max_offdiag_rel,
        pass: max_rel_error <= ORACLE_DIAG_TOL && max_offdiag_rel <= ORACLE_OFFDIAG_TOL,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::preset;

    fn small(mut cfg: ExperimentConfig) -> ExperimentConfig {
        cfg.n1 = 4;
        cfg.mesh_refinement = 12;
        cfg.partition_resolution = 6;
        cfg.subgrid = 4;
        cfg
    }

    #[test]
    fn empty_phantom_reconstructs_zero() {
        let mut cfg = small(preset("figure1").unwrap());
        cfg.phantom.clear();
        cfg.gamma_min = Some(1.0);
        cfg.delta_rel = 0.0;
        let out = run_pipeline(&cfg).unwrap();
        assert!(out.result.coefficients.iter().all(|&a| a == 0.0));
        assert_eq!(out.report.objective, 0.0);
    }

    #[test]
    fn modes_set_the_box() {
        let base = small(preset("figure1").unwrap());
        let none = run_pipeline(&base).unwrap();
        let a = none.bounds.contrast_bound;
        for (k, p) in none.report.pixels.iter().enumerate() {
            assert_eq!(p.upper, none.bounds.beta[k].min(a));
            assert!(p.a_hat >= 0.0 && p.a_hat <= p.upper);
        }
        let mut cfg = base.clone();
        cfg.comparison_mode = ComparisonMode::NoBeta;
        let out = run_pipeline(&cfg).unwrap();
        assert!(out.report.pixels.iter().all(|p| p.upper == a));
        cfg.comparison_mode = ComparisonMode::NoA;
        let out = run_pipeline(&cfg).unwrap();
        for (k, p) in out.report.pixels.iter().enumerate() {
            assert_eq!(p.upper, out.bounds.beta[k]);
        }
    }

    #[test]
    fn stage_errors_are_tagged() {
        let mut cfg = small(preset("figure1").unwrap());
        cfg.max_iter = 0;
        match run_pipeline(&cfg).unwrap_err() {
            CliError::Config(msg) => assert!(msg.contains("max_iter")),
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn oracle_rejects_off_center_phantoms() {
        let cfg = small(preset("figure1").unwrap());
        assert!(matches!(oracle_check(&cfg), Err(CliError::Config(_))));
        let mut cfg = small(preset("concentric").unwrap());
        cfg.mesh_refinement = 32;
        let rep = oracle_check(&cfg).unwrap();
        assert_eq!(rep.rows.len(), 8);
        assert!(rep.pass, "{rep:?}");
    }
}
