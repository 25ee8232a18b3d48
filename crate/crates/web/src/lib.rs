//! Browser bindings: an animated walk in the color-electric field, the
//! walker-versus-classical trajectory and the curvature halving table.

use gaugewalk::analysis::mean_position;
use gaugewalk::dirac::{equal_color, gaussian_packet, SpectralGrid};
use gaugewalk::experiment::{curvature_table, trajectory_report, Experiment, ExperimentConfig};
use gaugewalk::lattice::LatticeSpec;
use gaugewalk::lattice_gauge::{sample_from_potentials, GaugeField};
use gaugewalk::scenario::ColorElectricField;
use gaugewalk::unitary::generators_u;
use gaugewalk::walker::{step, total_probability, WalkConfig, WalkState};
use gaugewalk::Result;
use wasm_bindgen::prelude::*;

/// A walker packet that advances on demand.
#[wasm_bindgen]
pub struct WalkDemo {
    state: WalkState,
    field: GaugeField,
    walk: WalkConfig,
}

impl WalkDemo {
    pub fn build(e_ym: f64, mass: f64, sigma: f64, k0: f64, epsilon: f64, x_max: f64) -> Result<Self> {
        let spec = LatticeSpec::for_domain(epsilon, x_max, 4.0 * x_max)?;
        let grid = SpectralGrid::from_lattice(&spec)?;
        let packet = gaussian_packet(k0, sigma, mass, &equal_color(2), &grid)?;
        let f = ColorElectricField::new(e_ym);
        let field = sample_from_potentials(&f.b_p(), &f.b_q(), spec, &generators_u(2)?)?;
        Ok(Self {
            state: WalkState::from_amplitudes(spec, 2, 0, packet.into_values())?,
            field,
            walk: WalkConfig::from_mass(mass, epsilon, 2),
        })
    }

    /// Advances up to `steps`, stopping at the end of the sampled field.
    pub fn advance_by(&mut self, steps: usize) -> Result<usize> {
        let room = self.field.spec().j_max().saturating_sub(self.state.j() + 1);
        let n = steps.min(room);
        for _ in 0..n {
            self.state = step(&self.state, &self.field, &self.walk)?;
        }
        Ok(n)
    }
}

#[wasm_bindgen]
impl WalkDemo {
    #[wasm_bindgen(constructor)]
    pub fn new(e_ym: f64, mass: f64, sigma: f64, k0: f64, epsilon: f64, x_max: f64) -> Result<WalkDemo, JsError> {
        Ok(Self::build(e_ym, mass, sigma, k0, epsilon, x_max)?)
    }

    /// Returns the number of steps actually taken.
    pub fn advance(&mut self, steps: u32) -> Result<u32, JsError> {
        Ok(self.advance_by(steps as usize)? as u32)
    }

    pub fn time(&self) -> f64 {
        self.state.time()
    }

    pub fn mean_position(&self) -> Result<f64, JsError> {
        Ok(mean_position(self.state.amplitudes(), 2, self.state.spec())?)
    }

    /// `Σ|ψ|² ε`.
    pub fn norm(&self) -> f64 {
        total_probability(&self.state) * self.state.spec().epsilon()
    }

    /// Probability density per site, ordered by position.
    pub fn density(&self) -> Vec<f64> {
        self.state.site_probabilities()
    }

    pub fn positions(&self) -> Vec<f64> {
        self.state.spec().positions()
    }
}

fn trajectory_config(e_ym: f64, mass: f64, sigma: f64, k0: f64, t_max: f64) -> ExperimentConfig {
    ExperimentConfig {
        experiment: Experiment::Trajectory,
        e_ym,
        mass,
        sigma,
        k0,
        t_max,
        ..Default::default()
    }
}

pub fn trajectory_value(e_ym: f64, mass: f64, sigma: f64, k0: f64, t_max: f64) -> Result<serde_json::Value> {
    Ok(serde_json::to_value(trajectory_report(&trajectory_config(e_ym, mass, sigma, k0, t_max))?)?)
}

pub fn curvature_value(e_ym: f64) -> Result<serde_json::Value> {
    let cfg = ExperimentConfig {
        experiment: Experiment::CurvatureCheck,
        e_ym,
        ..Default::default()
    };
    Ok(serde_json::to_value(curvature_table(&cfg)?)?)
}

/// Walker `x̄(t)` and the classical trajectory, as JSON.
#[wasm_bindgen]
pub fn trajectory_json(e_ym: f64, mass: f64, sigma: f64, k0: f64, t_max: f64) -> Result<String, JsError> {
    Ok(trajectory_value(e_ym, mass, sigma, k0, t_max)?.to_string())
}

/// Curvature remainder and extraction error over the ε-halving table, as JSON.
#[wasm_bindgen]
pub fn curvature_json(e_ym: f64) -> Result<String, JsError> {
    Ok(curvature_value(e_ym)?.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn demo_conserves_norm_and_stops_at_field_end() {
        let mut demo = WalkDemo::build(0.08, 0.1, 1.0, 0.0, 0.2, 20.0).unwrap();
        let n0 = demo.norm();
        assert_eq!(demo.advance_by(50).unwrap(), 50);
        assert!((demo.norm() - n0).abs() < 1e-12);
        assert_eq!(demo.density().len(), demo.positions().len());
        let taken = demo.advance_by(10_000).unwrap();
        assert!(taken < 10_000);
        assert_eq!(demo.advance_by(1).unwrap(), 0);
    }

    #[test]
    fn json_outputs() {
        let t = trajectory_value(0.08, 0.1, 1.0, 0.0, 2.0).unwrap();
        assert_eq!(t["times"].as_array().unwrap().len(), 21);
        let c = curvature_value(0.08).unwrap();
        assert_eq!(c["rows"].as_array().unwrap().len(), 4);
        assert!(trajectory_value(0.08, 0.1, -1.0, 0.0, 2.0).is_err());
    }
}
