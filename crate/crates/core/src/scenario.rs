//! Field configurations used by the experiments.

use num_complex::Complex64;

use crate::error::Result;
use crate::lattice::LieField;
use crate::unitary::{generators_u, ComplexMatrix};

/// Uniform, constant SU(2) "electric" field along `τ̄₁ = σ₁/2`.
///
/// Temporal gauge: `b₀ = 0`, `b₁ = E_YM·t·τ̄₁`, i.e. `b_P = −b₁`, `b_Q = +b₁`.
/// Coordinates are on the U(2) basis `(1, σ₁/2, σ₂/2, σ₃/2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ColorElectricField {
    pub e_ym: f64,
}

impl ColorElectricField {
    pub fn new(e_ym: f64) -> Self {
        Self { e_ym }
    }

    pub fn b0(&self) -> LieField {
        LieField::zero(4)
    }

    pub fn b1(&self) -> LieField {
        let e = self.e_ym;
        LieField::uniform(4, move |t, out| {
            out.fill(0.0);
            out[1] = e * t;
        })
    }

    pub fn b_p(&self) -> LieField {
        let e = self.e_ym;
        LieField::uniform(4, move |t, out| {
            out.fill(0.0);
            out[1] = -e * t;
        })
    }

    pub fn b_q(&self) -> LieField {
        self.b1()
    }

    /// `F₁₀ = −E_YM σ₁/2`.
    pub fn field_strength(&self) -> ComplexMatrix {
        let gens = generators_u(2).expect("U(2) basis");
        gens.get(1) * Complex64::new(-self.e_ym, 0.0)
    }
}

/// A smooth, non-commuting U(N) potential pair `(b₀, b₁)` with nonzero Abelian
/// and non-Abelian parts; used to probe the curvature expansion away from the
/// uniform case.
pub fn smooth_test_potentials(dim: usize, amplitude: f64) -> Result<(LieField, LieField)> {
    let n = dim * dim;
    generators_u(dim)?;
    let b0 = LieField::new(n, move |t, x, out| {
        for (k, o) in out.iter_mut().enumerate() {
            let kf = k as f64 + 1.0;
            *o = amplitude * ((0.7 * kf * x + 0.3 * t).sin() + 0.2 * kf * t * x.cos());
        }
    });
    let b1 = LieField::new(n, move |t, x, out| {
        for (k, o) in out.iter_mut().enumerate() {
            let kf = k as f64 + 1.0;
            *o = amplitude * ((0.5 * t - 0.4 * kf * x).cos() + 0.1 * kf * x * t);
        }
    });
    Ok((b0, b1))
}

/// `(b_P, b_Q) = (b₀ − b₁, b₀ + b₁)`.
pub fn link_potentials(b0: &LieField, b1: &LieField) -> Result<(LieField, LieField)> {
    Ok((
        LieField::linear_combination(b0, 1.0, b1, -1.0)?,
        LieField::linear_combination(b0, 1.0, b1, 1.0)?,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn electric_potentials_invert_to_b0_b1() {
        let f = ColorElectricField::new(0.08);
        let (t, x) = (3.0, -1.0);
        let bp = f.b_p().eval(t, x);
        let bq = f.b_q().eval(t, x);
        let b0: Vec<f64> = bp.iter().zip(&bq).map(|(p, q)| (q + p) / 2.0).collect();
        let b1: Vec<f64> = bp.iter().zip(&bq).map(|(p, q)| (q - p) / 2.0).collect();
        assert_eq!(b0, vec![0.0; 4]);
        assert!((b1[1] - 0.08 * 3.0).abs() < 1e-15);
        let (bp2, bq2) = link_potentials(&f.b0(), &f.b1()).unwrap();
        assert_eq!(bp2.eval(t, x), bp);
        assert_eq!(bq2.eval(t, x), bq);
    }
}
