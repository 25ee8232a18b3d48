//! Classical colored-particle reference: 1D Wong equations in the uniform
//! SU(2) electric field `A₀ = 0`, `A₁ = E_YM t τ̄₁`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassicalState {
    pub x: f64,
    pub p: f64,
    pub isospin: [f64; 3],
}

impl ClassicalState {
    pub fn new(x: f64, p: f64, isospin: [f64; 3]) -> Self {
        Self { x, p, isospin }
    }

    /// Isospin aligned with the field, `I = (1/2, 0, 0)`.
    pub fn aligned(x: f64, p: f64) -> Self {
        Self::new(x, p, [0.5, 0.0, 0.0])
    }

    pub fn isospin_norm(&self) -> f64 {
        self.isospin.iter().map(|i| i * i).sum::<f64>().sqrt()
    }

    fn axpy(&self, a: f64, d: &ClassicalState) -> ClassicalState {
        ClassicalState {
            x: self.x + a * d.x,
            p: self.p + a * d.p,
            isospin: [
                self.isospin[0] + a * d.isospin[0],
                self.isospin[1] + a * d.isospin[1],
                self.isospin[2] + a * d.isospin[2],
            ],
        }
    }
}

/// Wong coupling that reproduces the walk and Dirac dynamics for a field
/// coupling `g`: those carry the potential as `+i B_μ`, which is the Wong
/// system with the opposite charge sign.
pub fn wong_coupling(g: f64) -> f64 {
    -g
}

/// `ẋ = p/√(p²+m²)`, `ṗ = g Iᵃ Eᵃ`, `İᵃ = g ẋ εᵃᵇᶜ A₁ᵇ Iᶜ` with
/// `Eᵃ = E_YM δᵃ¹` and `A₁ᵇ = E_YM t δᵇ¹`. Derivatives are returned in a
/// `ClassicalState`.
pub fn wong_rhs(s: &ClassicalState, e_ym: f64, g: f64, m: f64, t: f64) -> ClassicalState {
    let v = s.p / s.p.hypot(m);
    let a1 = e_ym * t;
    let [i1, i2, i3] = s.isospin;
    ClassicalState {
        x: v,
        p: g * i1 * e_ym,
        isospin: [0.0, -g * v * a1 * i3, g * v * a1 * i2],
    }
}

/// Classical RK4 on `(x, p)` and on the precession angle `φ̇ = g ẋ E_YM t`;
/// `(I₂, I₃)` is then rotated by the angle increment, which keeps `|I|`
/// fixed to rounding. `I₁` has zero derivative in this field.
pub fn rk4_step(s: &ClassicalState, e_ym: f64, g: f64, m: f64, t: f64, dt: f64) -> Result<ClassicalState> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::InvalidArgument(format!("dt must be positive, got {dt}")));
    }
    if !(m.is_finite() && m > 0.0) {
        return Err(Error::InvalidArgument(format!("mass must be positive, got {m}")));
    }
    let rate = |st: &ClassicalState, tau: f64| {
        let d = wong_rhs(st, e_ym, g, m, tau);
        (d, g * d.x * e_ym * tau)
    };
    let (k1, w1) = rate(s, t);
    let (k2, w2) = rate(&s.axpy(dt / 2.0, &k1), t + dt / 2.0);
    let (k3, w3) = rate(&s.axpy(dt / 2.0, &k2), t + dt / 2.0);
    let (k4, w4) = rate(&s.axpy(dt, &k3), t + dt);
    let sixth = dt / 6.0;
    let dphi = sixth * (w1 + 2.0 * w2 + 2.0 * w3 + w4);
    let (sn, cs) = dphi.sin_cos();
    let [i1, i2, i3] = s.isospin;
    Ok(ClassicalState {
        x: s.x + sixth * (k1.x + 2.0 * k2.x + 2.0 * k3.x + k4.x),
        p: s.p + sixth * (k1.p + 2.0 * k2.p + 2.0 * k3.p + k4.p),
        isospin: [i1, i2 * cs - i3 * sn, i2 * sn + i3 * cs],
    })
}

/// RK4 from `t = 0` in `steps` steps of `dt`; `observer` sees `(t, state)`
/// at `t = 0` and after each step.
pub fn integrate<F>(s0: ClassicalState, e_ym: f64, g: f64, m: f64, dt: f64, steps: usize, mut observer: F) -> Result<ClassicalState>
where
    F: FnMut(f64, &ClassicalState),
{
    let mut s = s0;
    observer(0.0, &s);
    for j in 0..steps {
        let t = j as f64 * dt;
        s = rk4_step(&s, e_ym, g, m, t, dt)?;
        if !(s.x.is_finite() && s.p.is_finite()) {
            return Err(Error::NumericalAbort {
                t: t + dt,
                reason: "non-finite classical state".into(),
            });
        }
        observer(t + dt, &s);
    }
    Ok(s)
}

/// Aligned isospin: `p(t) = p0 + a t` with `a = g E_YM / 2`, and
/// `x(t) = x0 + (p² − p0²)/(a (E + E0)) = x0 + (2 p0 t + a t²)/(E + E0)`,
/// `E = √(p² + m²)`, which stays exact as `a → 0`.
pub fn closed_form_trajectory(x0: f64, p0: f64, e_ym: f64, g: f64, m: f64, t: f64) -> (f64, f64) {
    let a = g * e_ym / 2.0;
    let p = p0 + a * t;
    let e = p.hypot(m);
    let e0 = p0.hypot(m);
    (x0 + (2.0 * p0 * t + a * t * t) / (e + e0), p)
}

const ENSEMBLE_NODES: usize = 401;

/// Mean aligned-isospin trajectory over the momentum distribution
/// `∝ exp(−(k − k0)²/σ²)` of a Gaussian packet, by trapezoidal quadrature on
/// `k0 ± 6σ`.
pub fn ensemble_mean_position(x0: f64, k0: f64, sigma: f64, e_ym: f64, g: f64, m: f64, t: f64) -> Result<f64> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::InvalidArgument(format!("ensemble needs sigma > 0, got {sigma}")));
    }
    let nodes = ENSEMBLE_NODES;
    let half = 6.0 * sigma;
    let h = 2.0 * half / (nodes - 1) as f64;
    let (mut num, mut den) = (0.0, 0.0);
    for i in 0..nodes {
        let k = k0 - half + i as f64 * h;
        let w = (-(k - k0).powi(2) / (sigma * sigma)).exp() * if i == 0 || i == nodes - 1 { 0.5 } else { 1.0 };
        num += w * closed_form_trajectory(x0, k, e_ym, g, m, t).0;
        den += w;
    }
    Ok(num / den)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rhs_examples() {
        let s = ClassicalState::aligned(0.0, 0.3);
        let d = wong_rhs(&s, 0.08, 1.0, 0.1, 2.0);
        assert_eq!(d.isospin, [0.0, 0.0, 0.0]);
        assert!((d.p - 0.04).abs() < 1e-16);
        let d = wong_rhs(&s, 0.0, 1.0, 0.1, 2.0);
        assert_eq!(d.p, 0.0);
        let s = ClassicalState::new(0.0, 0.3, [0.1, 0.2, 0.3]);
        let d = wong_rhs(&s, 0.08, 0.0, 0.1, 2.0);
        assert_eq!((d.p, d.isospin), (0.0, [0.0; 3]));
        assert!((d.x - 0.3 / 0.3f64.hypot(0.1)).abs() < 1e-16);
    }

    #[test]
    fn rk4_trivial_inputs() {
        let s = ClassicalState::aligned(1.0, 0.0);
        let out = rk4_step(&s, 0.0, 1.0, 0.1, 0.0, 0.1).unwrap();
        assert_eq!(out, s);
        assert!(rk4_step(&s, 0.0, 1.0, 0.1, 0.0, 0.0).is_err());
        assert!(rk4_step(&s, 0.0, 1.0, 0.0, 0.0, 0.1).is_err());
    }

    #[test]
    fn rk4_matches_closed_form() {
        for (p0, g) in [(0.0, 1.0), (1.0, 1.0), (1.0, -1.0), (-0.4, 1.0)] {
            let (e, m) = (0.08, 0.1);
            let mut worst: f64 = 0.0;
            integrate(ClassicalState::aligned(0.5, p0), e, g, m, 0.01, 10_000, |t, s| {
                let (x, p) = closed_form_trajectory(0.5, p0, e, g, m, t);
                worst = worst.max((s.x - x).abs()).max((s.p - p).abs());
            })
            .unwrap();
            assert!(worst <= 1e-8, "p0 = {p0}: {worst}");
        }
    }

    #[test]
    fn rk4_order() {
        let (e, g, m) = (0.5, 1.0, 0.3);
        let s0 = ClassicalState::new(0.0, 0.2, [0.3, 0.2, 0.1]);
        let reference = integrate(s0, e, g, m, 1e-4, 40_000, |_, _| {}).unwrap();
        let errs: Vec<f64> = [0.2, 0.1, 0.05]
            .iter()
            .map(|&dt| {
                let steps = (4.0 / dt) as usize;
                let s = integrate(s0, e, g, m, dt, steps, |_, _| {}).unwrap();
                (s.x - reference.x).abs() + (s.p - reference.p).abs() + (s.isospin[1] - reference.isospin[1]).abs()
            })
            .collect();
        for w in errs.windows(2) {
            let r = w[0] / w[1];
            assert!((r - 16.0).abs() <= 3.2, "ratio {r}");
        }
    }

    #[test]
    fn casimir_conserved() {
        let s0 = ClassicalState::new(0.0, 0.5, [0.2, 0.3, -0.4]);
        let n0 = s0.isospin_norm();
        let mut prev = n0;
        integrate(s0, 0.08, 1.0, 0.1, 0.01, 10_000, |_, s| {
            assert!((s.isospin_norm() - prev).abs() <= 1e-12);
            prev = s.isospin_norm();
        })
        .unwrap();
        assert!((prev - n0).abs() <= 1e-10);
    }

    #[test]
    fn closed_form_limits() {
        assert_eq!(closed_form_trajectory(1.5, 0.3, 0.08, 1.0, 0.1, 0.0), (1.5, 0.3));
        // non-relativistic: x ≈ x0 + (p0/m) t + (g E / 4m) t²
        let (m, e, g, p0) = (50.0, 0.1, 1.0, 0.01);
        for t in [0.5, 1.0, 2.0] {
            let (x, _) = closed_form_trajectory(0.0, p0, e, g, m, t);
            let nr = p0 / m * t + g * e / (4.0 * m) * t * t;
            assert!((x - nr).abs() <= 1e-3 * nr.abs());
        }
        // acceleration gE/(2m) within 1%
        let h = 0.1;
        let x = |t| closed_form_trajectory(0.0, 0.0, e, g, m, t).0;
        let acc = (x(1.0 + h) - 2.0 * x(1.0) + x(1.0 - h)) / (h * h);
        assert!((acc / (g * e / (2.0 * m)) - 1.0).abs() < 0.01);
        // ultra-relativistic saturation
        let (x1, _) = closed_form_trajectory(0.0, 1.0, 0.08, 1.0, 0.1, 10.0);
        let (x2, _) = closed_form_trajectory(0.0, 1.0, 0.08, 1.0, 0.1, 11.0);
        assert!(x2 - x1 > 0.99 && x2 - x1 < 1.0);
        assert_eq!(wong_coupling(1.0), -1.0);
    }

    #[test]
    fn ensemble_reduces_to_point_for_narrow_packet() {
        let point = closed_form_trajectory(0.0, 1.0, 0.08, 1.0, 0.1, 5.0).0;
        let ens = ensemble_mean_position(0.0, 1.0, 1e-4, 0.08, 1.0, 0.1, 5.0).unwrap();
        assert!((ens - point).abs() < 1e-6);
        let sym = ensemble_mean_position(0.0, 0.0, 1.0, 0.0, 1.0, 0.1, 5.0).unwrap();
        assert!(sym.abs() < 1e-12);
        assert!(ensemble_mean_position(0.0, 0.0, 0.0, 0.0, 1.0, 0.1, 5.0).is_err());
    }
}
