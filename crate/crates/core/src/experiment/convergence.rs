use rayon::prelude::*;
use serde::Serialize;

use super::{ElectricSetup, ExperimentConfig};
use crate::analysis::{fit_loglog, fit_loglog_slope, relative_difference, ConvergenceSeries, LogLogFit, Projection};
use crate::dirac::{default_substeps, free_propagate, lattice_norm, solve};
use crate::error::Result;
use crate::io::{ArtifactWriter, Checkpoint, Manifest, Origin};
use crate::walker::{evolve, total_probability};

/// One `ε` of the sweep.
#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceLeg {
    pub epsilon: f64,
    pub p_max: usize,
    pub steps: usize,
    /// RK2 substeps per `ε`; zero when the exact free propagator was used.
    pub dirac_substeps: usize,
    pub delta_re_minus: f64,
    pub delta_im_minus: f64,
    pub walk_norm: f64,
    pub dirac_norm: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceReport {
    pub legs: Vec<ConvergenceLeg>,
    pub fit_re_minus: LogLogFit,
    pub fit_im_minus: LogLogFit,
    pub threads: usize,
}

impl ConvergenceReport {
    pub fn series(&self) -> Result<(ConvergenceSeries, ConvergenceSeries)> {
        let eps: Vec<f64> = self.legs.iter().map(|l| l.epsilon).collect();
        Ok((
            ConvergenceSeries::new(eps.clone(), self.legs.iter().map(|l| l.delta_re_minus).collect(), "re_minus")?,
            ConvergenceSeries::new(eps, self.legs.iter().map(|l| l.delta_im_minus).collect(), "im_minus")?,
        ))
    }
}

struct LegOutput {
    leg: ConvergenceLeg,
    walk: Vec<u8>,
    dirac: Vec<u8>,
}

fn run_leg(cfg: &ExperimentConfig, epsilon: f64) -> Result<LegOutput> {
    let setup = ElectricSetup::new(cfg, epsilon)?;
    let walk0 = setup.initial_walk()?;
    let walk = evolve(&walk0, &setup.walk_field, &setup.walk_config, setup.steps, |_| {})?;
    let (dirac, substeps) = if cfg.e_ym == 0.0 {
        (free_propagate(&setup.packet, cfg.mass, cfg.t_max)?, 0)
    } else {
        let sub = default_substeps(&setup.grid, &setup.dirac, epsilon, cfg.t_max)?;
        log::info!("epsilon = {epsilon}: {} steps x {sub} RK2 substeps", setup.steps);
        (solve(&setup.packet, &setup.dirac, cfg.t_max, epsilon, sub, |_, _| {})?, sub)
    };
    let with_color = |p: Projection| Projection { color: cfg.color_index, ..p };
    let delta = |p| relative_difference(dirac.values(), walk.amplitudes(), 2, &setup.spec, with_color(p));
    let leg = ConvergenceLeg {
        epsilon,
        p_max: setup.spec.p_max(),
        steps: setup.steps,
        dirac_substeps: substeps,
        delta_re_minus: delta(Projection::RE_MINUS)?,
        delta_im_minus: delta(Projection::IM_MINUS)?,
        walk_norm: total_probability(&walk) * epsilon,
        dirac_norm: lattice_norm(&dirac, &setup.spec)?,
    };
    let checkpoint = |origin, amps: &[num_complex::Complex64]| {
        Checkpoint {
            origin,
            dim: 2,
            p_max: setup.spec.p_max(),
            j: setup.steps as u64,
            epsilon,
            amps: amps.to_vec(),
        }
        .to_bytes()
    };
    Ok(LegOutput {
        walk: checkpoint(Origin::Walk, walk.amplitudes())?,
        dirac: checkpoint(Origin::Dirac, dirac.values())?,
        leg,
    })
}

fn running_slopes(legs: &[ConvergenceLeg]) -> Vec<Option<f64>> {
    (0..legs.len())
        .map(|i| {
            if i == 0 {
                return None;
            }
            let eps: Vec<f64> = legs[..=i].iter().map(|l| l.epsilon).collect();
            let del: Vec<f64> = legs[..=i].iter().map(|l| l.delta_re_minus).collect();
            if i == 1 {
                Some((del[0] / del[1]).ln() / (eps[0] / eps[1]).ln())
            } else {
                fit_loglog(&eps, &del).ok().map(|f| f.slope)
            }
        })
        .collect()
}

fn convergence_csv(legs: &[ConvergenceLeg]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["epsilon", "delta_re_minus", "delta_im_minus", "slope_running"])?;
    for (leg, slope) in legs.iter().zip(running_slopes(legs)) {
        w.write_record([
            leg.epsilon.to_string(),
            leg.delta_re_minus.to_string(),
            leg.delta_im_minus.to_string(),
            slope.map(|s| s.to_string()).unwrap_or_default(),
        ])?;
    }
    w.into_inner().map_err(|e| crate::error::Error::io("<csv buffer>", e.into_error()))
}

/// Walk versus Dirac reference at fixed physical time for each `ε`, in the
/// uniform SU(2) electric field; legs run concurrently.
pub fn run_convergence(cfg: &ExperimentConfig) -> Result<(Manifest, ConvergenceReport)> {
    cfg.validate()?;
    let outputs: Vec<LegOutput> = cfg
        .epsilons
        .par_iter()
        .map(|&eps| run_leg(cfg, eps))
        .collect::<Result<_>>()?;
    let legs: Vec<ConvergenceLeg> = outputs.iter().map(|o| o.leg.clone()).collect();
    let eps: Vec<f64> = legs.iter().map(|l| l.epsilon).collect();
    let re = ConvergenceSeries::new(eps.clone(), legs.iter().map(|l| l.delta_re_minus).collect(), "re_minus")?;
    let im = ConvergenceSeries::new(eps, legs.iter().map(|l| l.delta_im_minus).collect(), "im_minus")?;
    let report = ConvergenceReport {
        fit_re_minus: fit_loglog_slope(&re)?,
        fit_im_minus: fit_loglog_slope(&im)?,
        legs,
        threads: rayon::current_num_threads(),
    };
    let mut out = ArtifactWriter::new(&cfg.output_dir)?;
    for o in &outputs {
        out.write(&format!("walk_eps{}.bin", o.leg.epsilon), &o.walk)?;
        out.write(&format!("dirac_eps{}.bin", o.leg.epsilon), &o.dirac)?;
    }
    out.write("convergence.csv", &convergence_csv(&report.legs)?)?;
    out.write("convergence.json", &serde_json::to_vec_pretty(&report)?)?;
    let manifest = out.finish("convergence", report.threads, cfg.to_json())?;
    Ok((manifest, report))
}
