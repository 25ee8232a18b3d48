use serde::Serialize;

use super::{ElectricSetup, ExperimentConfig};
use crate::analysis::{mean_position, position_spread};
use crate::classical::{closed_form_trajectory, ensemble_mean_position, integrate, wong_coupling, ClassicalState};
use crate::dirac::equal_color;
use crate::error::{Error, Result};
use crate::io::{csv_bytes, ArtifactWriter, Manifest};
use crate::unitary::generators_u;
use crate::walker::step;

/// Fraction of the lattice at each end treated as the boundary layer.
const EDGE_FRACTION: f64 = 0.05;
/// Probability allowed in the boundary layer before a run is aborted.
const EDGE_PROBABILITY: f64 = 1e-6;

#[derive(Debug, Clone, Serialize)]
pub struct TrajectoryReport {
    pub epsilon: f64,
    pub e_ym: f64,
    pub g: f64,
    /// Coupling used in the Wong equations.
    pub wong_g: f64,
    pub k0: f64,
    pub sigma: f64,
    pub x0: f64,
    pub isospin: [f64; 3],
    pub times: Vec<f64>,
    pub xbar_walk: Vec<f64>,
    /// Standard deviation of the walker position distribution.
    pub spread_walk: Vec<f64>,
    pub x_classical: Vec<f64>,
    pub x_ensemble: Vec<f64>,
    /// `max_t |x̄ − x_cl|`.
    pub max_abs_diff: f64,
    /// `max_t |x_cl − x0|`.
    pub traversed: f64,
    /// `max_abs_diff / traversed`, absent when nothing was traversed.
    pub relative_diff: Option<f64>,
    /// Same ratio against the momentum-averaged classical ensemble.
    pub ensemble_relative_diff: Option<f64>,
}

/// `Iᵃ = ⟨c| τ̄ₐ |c⟩` on the SU(2) generators.
pub fn isospin_of(color: &[num_complex::Complex64]) -> Result<[f64; 3]> {
    let gens = generators_u(2)?;
    let mut out = [0.0; 3];
    for (a, t) in gens.special().iter().enumerate() {
        let v = nalgebra::DVector::from_column_slice(color);
        out[a] = (v.adjoint() * t * &v)[(0, 0)].re;
    }
    Ok(out)
}

fn edge_probability(density: &[f64]) -> f64 {
    let n = density.len();
    let edge = ((n as f64 * EDGE_FRACTION).ceil() as usize).max(2).min(n / 2);
    let total: f64 = density.iter().sum();
    let outer: f64 = density[..edge].iter().chain(&density[n - edge..]).sum();
    outer / total
}

/// Walker mean position against the Wong trajectory with matched initial
/// data `(x0 = x̄(0), p0 = k0, I = ⟨τ̄⟩)`. Writes nothing.
pub fn trajectory_report(cfg: &ExperimentConfig) -> Result<TrajectoryReport> {
    cfg.validate()?;
    let eps = cfg.epsilon;
    let setup = ElectricSetup::new(cfg, eps)?;
    let mut state = setup.initial_walk()?;
    let x0 = mean_position(state.amplitudes(), 2, &setup.spec)?;
    let isospin = isospin_of(&equal_color(2))?;
    let wong_g = wong_coupling(cfg.g);

    let mut times = vec![0.0];
    let mut xbar = vec![x0];
    let mut spread = vec![position_spread(state.amplitudes(), 2, &setup.spec)?];
    for _ in 0..setup.steps {
        state = step(&state, &setup.walk_field, &setup.walk_config)?;
        let t = state.time();
        if edge_probability(&state.site_probabilities()) > EDGE_PROBABILITY {
            return Err(Error::NumericalAbort {
                t,
                reason: "walker packet reached the spatial boundary".into(),
            });
        }
        times.push(t);
        xbar.push(mean_position(state.amplitudes(), 2, &setup.spec)?);
        spread.push(position_spread(state.amplitudes(), 2, &setup.spec)?);
    }

    let x_classical: Vec<f64> = times
        .iter()
        .map(|&t| closed_form_trajectory(x0, cfg.k0, cfg.e_ym, wong_g, cfg.mass.max(f64::MIN_POSITIVE), t).0)
        .collect();
    let x_ensemble: Vec<f64> = times
        .iter()
        .map(|&t| ensemble_mean_position(x0, cfg.k0, cfg.sigma, cfg.e_ym, wong_g, cfg.mass.max(f64::MIN_POSITIVE), t))
        .collect::<Result<_>>()?;
    let max_diff = |other: &[f64]| xbar.iter().zip(other).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let traversed = x_classical.iter().map(|x| (x - x0).abs()).fold(0.0, f64::max);
    let max_abs_diff = max_diff(&x_classical);
    let ratio = |d: f64| (traversed > 0.0).then(|| d / traversed);

    Ok(TrajectoryReport {
        epsilon: eps,
        e_ym: cfg.e_ym,
        g: cfg.g,
        wong_g,
        k0: cfg.k0,
        sigma: cfg.sigma,
        x0,
        isospin,
        relative_diff: ratio(max_abs_diff),
        ensemble_relative_diff: ratio(max_diff(&x_ensemble)),
        max_abs_diff,
        traversed,
        times,
        xbar_walk: xbar,
        spread_walk: spread,
        x_classical,
        x_ensemble,
    })
}

/// Runs [`trajectory_report`], integrates the Wong equations alongside and
/// writes both trajectories.
pub fn run_trajectory(cfg: &ExperimentConfig) -> Result<(Manifest, TrajectoryReport)> {
    let report = trajectory_report(cfg)?;
    let mut classical_rows = Vec::new();
    if cfg.mass > 0.0 {
        let s0 = ClassicalState::new(report.x0, cfg.k0, report.isospin);
        integrate(s0, cfg.e_ym, report.wong_g, cfg.mass, cfg.epsilon, report.times.len() - 1, |t, s| {
            classical_rows.push(vec![t, s.x, s.p, s.isospin[0], s.isospin[1], s.isospin[2]]);
        })?;
    }

    let mut out = ArtifactWriter::new(&cfg.output_dir)?;
    let header: Vec<String> = ["t", "xbar_walk", "x_classical", "E_ym"].iter().map(|s| s.to_string()).collect();
    let rows = (0..report.times.len()).map(|i| vec![report.times[i], report.xbar_walk[i], report.x_classical[i], cfg.e_ym]);
    out.write("trajectory.csv", &csv_bytes(&header, rows)?)?;
    let header: Vec<String> = ["t", "x", "p", "I1", "I2", "I3"].iter().map(|s| s.to_string()).collect();
    out.write("classical.csv", &csv_bytes(&header, classical_rows)?)?;
    out.write("trajectory.json", &serde_json::to_vec_pretty(&report)?)?;
    let manifest = out.finish("trajectory", rayon::current_num_threads(), cfg.to_json())?;
    Ok((manifest, report))
}
