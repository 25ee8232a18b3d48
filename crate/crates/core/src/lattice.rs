//! Spacetime lattice geometry and smooth Lie-algebra valued coordinate fields.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    #[default]
    Periodic,
}

/// Lattice with shared time/space step `ε`: sites `p = −p_max..=p_max`, time
/// slices `j = 0..=j_max`, periodic in `p`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatticeSpec {
    epsilon: f64,
    p_max: usize,
    j_max: usize,
    #[serde(default)]
    boundary: Boundary,
}

impl LatticeSpec {
    pub fn new(epsilon: f64, p_max: usize, j_max: usize) -> Result<Self> {
        if !(epsilon.is_finite() && epsilon > 0.0) {
            return Err(Error::InvalidLattice(format!("epsilon must be positive, got {epsilon}")));
        }
        if p_max < 2 {
            return Err(Error::InvalidLattice(format!("p_max must be >= 2, got {p_max}")));
        }
        if j_max < 2 {
            return Err(Error::InvalidLattice(format!("j_max must be >= 2, got {j_max}")));
        }
        Ok(Self {
            epsilon,
            p_max,
            j_max,
            boundary: Boundary::Periodic,
        })
    }

    /// Lattice covering `[−x_max, x_max]` with enough slices to step up to
    /// `t_max` and still evaluate one slice beyond it.
    pub fn for_domain(epsilon: f64, x_max: f64, t_max: f64) -> Result<Self> {
        if !(x_max.is_finite() && x_max > 0.0 && t_max.is_finite() && t_max >= 0.0) {
            return Err(Error::InvalidLattice(format!("bad domain x_max = {x_max}, t_max = {t_max}")));
        }
        let p_max = (x_max / epsilon).round() as usize;
        let j_max = ((t_max / epsilon).round() as usize + 2).max(2);
        Self::new(epsilon, p_max, j_max)
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn p_max(&self) -> usize {
        self.p_max
    }

    pub fn j_max(&self) -> usize {
        self.j_max
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    pub fn with_j_max(self, j_max: usize) -> Result<Self> {
        Self::new(self.epsilon, self.p_max, j_max)
    }

    pub fn n_sites(&self) -> usize {
        2 * self.p_max + 1
    }

    /// Storage index of site `p`, wrapping periodically.
    pub fn site_index(&self, p: i64) -> usize {
        (p + self.p_max as i64).rem_euclid(self.n_sites() as i64) as usize
    }

    pub fn site_p(&self, index: usize) -> i64 {
        index as i64 - self.p_max as i64
    }

    pub fn t(&self, j: usize) -> f64 {
        j as f64 * self.epsilon
    }

    pub fn x(&self, p: i64) -> f64 {
        p as f64 * self.epsilon
    }

    pub fn sites(&self) -> impl Iterator<Item = i64> {
        let p_max = self.p_max as i64;
        -p_max..=p_max
    }

    pub fn positions(&self) -> Vec<f64> {
        self.sites().map(|p| self.x(p)).collect()
    }

    /// Length of the periodic cell, `(2 p_max + 1) ε`.
    pub fn period(&self) -> f64 {
        self.n_sites() as f64 * self.epsilon
    }
}

type CoordFn = dyn Fn(f64, f64, &mut [f64]) + Send + Sync;

/// A smooth field `(t, x) ↦ b^k(t, x)` of Lie-algebra coordinates.
#[derive(Clone)]
pub struct LieField {
    n_coords: usize,
    uniform: bool,
    f: Arc<CoordFn>,
}

impl fmt::Debug for LieField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LieField")
            .field("n_coords", &self.n_coords)
            .field("uniform", &self.uniform)
            .finish_non_exhaustive()
    }
}

impl LieField {
    pub fn new<F>(n_coords: usize, f: F) -> Self
    where
        F: Fn(f64, f64, &mut [f64]) + Send + Sync + 'static,
    {
        Self {
            n_coords,
            uniform: false,
            f: Arc::new(f),
        }
    }

    /// A field that depends on time only.
    pub fn uniform<F>(n_coords: usize, f: F) -> Self
    where
        F: Fn(f64, &mut [f64]) + Send + Sync + 'static,
    {
        Self {
            n_coords,
            uniform: true,
            f: Arc::new(move |t, _x, out| f(t, out)),
        }
    }

    pub fn zero(n_coords: usize) -> Self {
        Self::uniform(n_coords, |_, out| out.fill(0.0))
    }

    pub fn constant(coords: Vec<f64>) -> Self {
        Self::uniform(coords.len(), move |_, out| out.copy_from_slice(&coords))
    }

    /// `ca·a + cb·b`.
    pub fn linear_combination(a: &LieField, ca: f64, b: &LieField, cb: f64) -> Result<Self> {
        if a.n_coords != b.n_coords {
            return Err(Error::DimensionMismatch {
                expected: a.n_coords,
                got: b.n_coords,
            });
        }
        let n = a.n_coords;
        let (fa, fb) = (a.f.clone(), b.f.clone());
        Ok(Self {
            n_coords: n,
            uniform: a.uniform && b.uniform,
            f: Arc::new(move |t, x, out| {
                let mut tmp = vec![0.0; n];
                fa(t, x, out);
                fb(t, x, &mut tmp);
                for (o, v) in out.iter_mut().zip(&tmp) {
                    *o = ca * *o + cb * v;
                }
            }),
        })
    }

    pub fn n_coords(&self) -> usize {
        self.n_coords
    }

    pub fn is_uniform(&self) -> bool {
        self.uniform
    }

    pub fn eval_into(&self, t: f64, x: f64, out: &mut [f64]) {
        (self.f)(t, x, out)
    }

    pub fn eval(&self, t: f64, x: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.n_coords];
        self.eval_into(t, x, &mut out);
        out
    }
}
