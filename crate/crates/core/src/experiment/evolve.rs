use serde::Serialize;

use super::{step_count, ExperimentConfig, INVARIANT_TOL};
use crate::analysis::mean_position;
use crate::dirac::{equal_color, gaussian_packet, SpectralGrid};
use crate::error::{Error, Result};
use crate::io::{csv_bytes, state_csv, ArtifactWriter, Checkpoint, Manifest, Origin};
use crate::lattice::LatticeSpec;
use crate::lattice_gauge::{sample_from_potentials, GaugeField};
use crate::scenario::ColorElectricField;
use crate::unitary::generators_u;
use crate::walker::{step, total_probability, WalkConfig, WalkState};

#[derive(Debug, Clone, Serialize)]
pub struct EvolveReport {
    pub dim: usize,
    pub epsilon: f64,
    pub theta: f64,
    pub steps: usize,
    /// Background: the SU(2) electric field for `N = 2`, free links otherwise.
    pub field: String,
    pub max_probability_drift: f64,
    pub final_xbar: f64,
    pub checkpoints: Vec<String>,
}

impl EvolveReport {
    pub fn verdict(&self) -> Result<()> {
        if self.max_probability_drift <= INVARIANT_TOL {
            Ok(())
        } else {
            Err(Error::InvariantViolation(format!(
                "probability drift {:e} exceeds {INVARIANT_TOL:e}",
                self.max_probability_drift
            )))
        }
    }
}

fn checkpoint(state: &WalkState) -> Checkpoint {
    Checkpoint {
        origin: Origin::Walk,
        dim: state.dim(),
        p_max: state.spec().p_max(),
        j: state.j() as u64,
        epsilon: state.spec().epsilon(),
        amps: state.amplitudes().to_vec(),
    }
}

/// Evolves a Gaussian packet and records `x̄(t)`, the norm, periodic
/// checkpoints and the final state.
pub fn run_evolve(cfg: &ExperimentConfig) -> Result<(Manifest, EvolveReport)> {
    cfg.validate()?;
    let eps = cfg.epsilon;
    let dim = cfg.dim;
    let steps = step_count(cfg.t_max, eps)?;
    let spec = LatticeSpec::for_domain(eps, cfg.x_max, cfg.t_max)?;
    let grid = SpectralGrid::from_lattice(&spec)?;
    let packet = gaussian_packet(cfg.k0, cfg.sigma, cfg.mass, &equal_color(dim), &grid)?;
    let (field, label) = if dim == 2 {
        let f = ColorElectricField::new(cfg.e_ym);
        (sample_from_potentials(&f.b_p(), &f.b_q(), spec, &generators_u(2)?)?, "su2-electric")
    } else {
        (GaugeField::identity(spec, dim), "free")
    };
    let walk = WalkConfig::with_theta(cfg.theta_for(eps), dim);
    let mut state = WalkState::from_amplitudes(spec, dim, 0, packet.into_values())?;

    let mut out = ArtifactWriter::new(&cfg.output_dir)?;
    let p0 = total_probability(&state);
    let mut drift: f64 = 0.0;
    let mut rows = vec![vec![0.0, mean_position(state.amplitudes(), dim, &spec)?, p0 * eps]];
    let mut checkpoints = Vec::new();
    out.write("state_initial.csv", &state_csv(&spec, dim, state.amplitudes())?)?;
    for _ in 0..steps {
        state = step(&state, &field, &walk)?;
        let p = total_probability(&state);
        if !p.is_finite() {
            return Err(Error::NumericalAbort {
                t: state.time(),
                reason: "non-finite walker amplitude".into(),
            });
        }
        drift = drift.max((p - p0).abs());
        rows.push(vec![state.time(), mean_position(state.amplitudes(), dim, &spec)?, p * eps]);
        if let Some(every) = cfg.checkpoint_every {
            if state.j() % every == 0 {
                let name = format!("walk_j{}.bin", state.j());
                out.write(&name, &checkpoint(&state).to_bytes()?)?;
                checkpoints.push(name);
            }
        }
    }
    let header: Vec<String> = ["t", "xbar", "norm"].iter().map(|s| s.to_string()).collect();
    out.write("xbar.csv", &csv_bytes(&header, rows)?)?;
    out.write("state_final.csv", &state_csv(&spec, dim, state.amplitudes())?)?;
    out.write("walk_final.bin", &checkpoint(&state).to_bytes()?)?;
    let report = EvolveReport {
        dim,
        epsilon: eps,
        theta: walk.theta,
        steps,
        field: label.into(),
        max_probability_drift: drift,
        final_xbar: mean_position(state.amplitudes(), dim, &spec)?,
        checkpoints,
    };
    out.write("evolve.json", &serde_json::to_vec_pretty(&report)?)?;
    let manifest = out.finish("evolve", rayon::current_num_threads(), cfg.to_json())?;
    Ok((manifest, report))
}
