//! Batch experiments: configuration, orchestration and artifact emission.

mod checks;
mod config;
mod convergence;
mod evolve;
mod trajectory;

use serde::Serialize;

pub use checks::{curvature_table, run_curvature_check, run_gauge_check, CurvatureCheckReport, CurvatureRow, GaugeCheckReport};
pub use config::{CurvatureField, Experiment, ExperimentConfig};
pub use convergence::{run_convergence, ConvergenceLeg, ConvergenceReport};
pub use evolve::{run_evolve, EvolveReport};
pub use trajectory::{run_trajectory, trajectory_report, TrajectoryReport};

use crate::dirac::{equal_color, gaussian_packet, packet_resolved, DiracParams, SpectralGrid, SpinorField};
use crate::error::{Error, Result};
use crate::io::Manifest;
use crate::lattice::LatticeSpec;
use crate::lattice_gauge::{sample_from_potentials, GaugeField};
use crate::scenario::ColorElectricField;
use crate::unitary::generators_u;
use crate::walker::{WalkConfig, WalkState};

pub const THREADS_ENV: &str = "GAUGEWALK_THREADS";

/// Invariant tolerance shared by the verification experiments.
pub const INVARIANT_TOL: f64 = 1e-10;

/// Thread cap from `GAUGEWALK_THREADS`, if set.
pub fn thread_cap() -> Result<Option<usize>> {
    match std::env::var(THREADS_ENV) {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(Error::Config(format!("{THREADS_ENV} must be a positive integer, got {v:?}"))),
        },
    }
}

/// Runs `f` inside a rayon pool honoring the thread cap; returns the result
/// and the pool size.
pub fn in_pool<T: Send>(f: impl FnOnce() -> T + Send) -> Result<(T, usize)> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = thread_cap()? {
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let threads = pool.current_num_threads();
    Ok((pool.install(f), threads))
}

/// What a run produced: its manifest and a JSON report.
#[derive(Debug, Clone, Serialize)]
pub struct RunOutcome {
    pub manifest: Manifest,
    pub report: serde_json::Value,
}

/// Validates `cfg`, runs its experiment and turns failed invariants into
/// [`Error::InvariantViolation`] after the artifacts are written.
pub fn run(cfg: &ExperimentConfig) -> Result<RunOutcome> {
    cfg.validate()?;
    let (result, _) = in_pool(|| -> Result<(Manifest, serde_json::Value, Result<()>)> {
        Ok(match cfg.experiment {
            Experiment::Evolve => {
                let (m, r) = run_evolve(cfg)?;
                let v = r.verdict();
                (m, serde_json::to_value(&r)?, v)
            }
            Experiment::Convergence => {
                let (m, r) = run_convergence(cfg)?;
                (m, serde_json::to_value(&r)?, Ok(()))
            }
            Experiment::Trajectory => {
                let (m, r) = run_trajectory(cfg)?;
                (m, serde_json::to_value(&r)?, Ok(()))
            }
            Experiment::GaugeCheck => {
                let (m, r) = run_gauge_check(cfg)?;
                let v = r.verdict();
                (m, serde_json::to_value(&r)?, v)
            }
            Experiment::CurvatureCheck => {
                let (m, r) = run_curvature_check(cfg)?;
                let v = r.verdict();
                (m, serde_json::to_value(&r)?, v)
            }
        })
    })?;
    let (manifest, report, verdict) = result?;
    verdict?;
    Ok(RunOutcome { manifest, report })
}

/// Number of `epsilon` steps reaching `t_max` exactly.
pub(crate) fn step_count(t_max: f64, epsilon: f64) -> Result<usize> {
    let steps = (t_max / epsilon).round();
    if (steps * epsilon - t_max).abs() > 1e-9 * t_max.max(1.0) {
        return Err(Error::Config(format!("t_max = {t_max} is not a multiple of epsilon = {epsilon}")));
    }
    Ok(steps as usize)
}

/// Lattice, packet and both dynamics for the SU(2) electric-field runs.
pub(crate) struct ElectricSetup {
    pub spec: LatticeSpec,
    pub grid: SpectralGrid,
    pub packet: SpinorField,
    pub walk_field: GaugeField,
    pub walk_config: WalkConfig,
    pub dirac: DiracParams,
    pub steps: usize,
}

impl ElectricSetup {
    pub fn new(cfg: &ExperimentConfig, epsilon: f64) -> Result<Self> {
        let steps = step_count(cfg.t_max, epsilon)?;
        let spec = LatticeSpec::for_domain(epsilon, cfg.x_max, cfg.t_max)?;
        let grid = SpectralGrid::from_lattice(&spec)?;
        if !packet_resolved(cfg.sigma, &grid) || cfg.k0.abs() + 4.0 * cfg.sigma > grid.k_max() {
            return Err(Error::Config(format!(
                "packet under-resolved at epsilon = {epsilon}: sigma = {}, k0 = {}, k_max = {:.3}, L = {:.3}",
                cfg.sigma,
                cfg.k0,
                grid.k_max(),
                grid.period()
            )));
        }
        let packet = gaussian_packet(cfg.k0, cfg.sigma, cfg.mass, &equal_color(2), &grid)?;
        let field = ColorElectricField::new(cfg.e_ym);
        let gens = generators_u(2)?;
        let walk_field = sample_from_potentials(&field.b_p(), &field.b_q(), spec, &gens)?;
        let dirac = DiracParams::new(cfg.mass, field.b0(), field.b1(), gens)?;
        Ok(Self {
            spec,
            grid,
            packet,
            walk_field,
            walk_config: WalkConfig::with_theta(cfg.theta_for(epsilon), 2),
            dirac,
            steps,
        })
    }

    pub fn initial_walk(&self) -> Result<WalkState> {
        WalkState::from_amplitudes(self.spec, 2, 0, self.packet.values().to_vec())
    }
}
