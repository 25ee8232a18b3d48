//! Continuum reference: the 2N-component Dirac equation in a U(N) background,
//! pseudo-spectral in space and midpoint RK2 in time.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::analysis::l2_bracket;
use crate::error::{Error, Result};
use crate::lattice::{LatticeSpec, LieField};
use crate::unitary::{ComplexMatrix, GeneratorSet};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };
const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

struct GridInner {
    n_points: usize,
    x_min: f64,
    period: f64,
    wavenumbers: Vec<f64>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

/// Uniform periodic grid `x_i = x_min + i·L/n` with its DFT wavenumbers.
#[derive(Clone)]
pub struct SpectralGrid(Arc<GridInner>);

impl fmt::Debug for SpectralGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SpectralGrid")
            .field("n_points", &self.0.n_points)
            .field("x_min", &self.0.x_min)
            .field("period", &self.0.period)
            .finish()
    }
}

impl PartialEq for SpectralGrid {
    fn eq(&self, other: &Self) -> bool {
        self.0.n_points == other.0.n_points && self.0.x_min == other.0.x_min && self.0.period == other.0.period
    }
}

impl SpectralGrid {
    pub fn new(n_points: usize, x_min: f64, period: f64) -> Result<Self> {
        if n_points < 8 {
            return Err(Error::InvalidArgument(format!("spectral grid needs >= 8 points, got {n_points}")));
        }
        if !(x_min.is_finite() && period.is_finite() && period > 0.0) {
            return Err(Error::InvalidArgument(format!("bad grid extent x_min = {x_min}, period = {period}")));
        }
        let n = n_points as i64;
        let scale = 2.0 * std::f64::consts::PI / period;
        let wavenumbers = (0..n)
            .map(|m| {
                let signed = if 2 * m < n { m } else { m - n };
                signed as f64 * scale
            })
            .collect();
        let mut planner = FftPlanner::new();
        Ok(Self(Arc::new(GridInner {
            n_points,
            x_min,
            period,
            wavenumbers,
            forward: planner.plan_fft_forward(n_points),
            inverse: planner.plan_fft_inverse(n_points),
        })))
    }

    /// The grid whose points are exactly the lattice sites `x_p = p ε`.
    pub fn from_lattice(spec: &LatticeSpec) -> Result<Self> {
        Self::new(spec.n_sites(), spec.x(-(spec.p_max() as i64)), spec.period())
    }

    pub fn n_points(&self) -> usize {
        self.0.n_points
    }

    pub fn x_min(&self) -> f64 {
        self.0.x_min
    }

    pub fn x_max(&self) -> f64 {
        self.0.x_min + self.0.period
    }

    pub fn period(&self) -> f64 {
        self.0.period
    }

    pub fn dx(&self) -> f64 {
        self.0.period / self.0.n_points as f64
    }

    pub fn x(&self, i: usize) -> f64 {
        self.0.x_min + i as f64 * self.dx()
    }

    pub fn wavenumbers(&self) -> &[f64] {
        &self.0.wavenumbers
    }

    /// Largest resolved `|k|`.
    pub fn k_max(&self) -> f64 {
        self.0.wavenumbers.iter().fold(0.0, |a, k| a.max(k.abs()))
    }

    fn has_nyquist(&self) -> bool {
        self.0.n_points.is_multiple_of(2)
    }

    /// Wavenumber used for differentiation; the Nyquist mode maps to zero.
    fn derivative_wavenumber(&self, m: usize) -> f64 {
        if self.has_nyquist() && m == self.0.n_points / 2 {
            0.0
        } else {
            self.0.wavenumbers[m]
        }
    }

    /// `∂_x` of one periodic sample vector, in place.
    pub fn differentiate(&self, data: &mut [Complex64]) {
        let n = self.0.n_points;
        self.0.forward.process(data);
        let norm = 1.0 / n as f64;
        for (m, z) in data.iter_mut().enumerate() {
            *z *= I * (self.derivative_wavenumber(m) * norm);
        }
        self.0.inverse.process(data);
    }
}

/// `Ψ(x)` on a spectral grid, stored point-major: `N` components of `ψ⁻`
/// then `N` of `ψ⁺`, matching the walker layout.
#[derive(Debug, Clone, PartialEq)]
pub struct SpinorField {
    grid: SpectralGrid,
    dim: usize,
    values: Vec<Complex64>,
}

impl SpinorField {
    pub fn zeros(grid: SpectralGrid, dim: usize) -> Self {
        let len = grid.n_points() * 2 * dim;
        Self {
            grid,
            dim,
            values: vec![ZERO; len],
        }
    }

    pub fn from_values(grid: SpectralGrid, dim: usize, values: Vec<Complex64>) -> Result<Self> {
        let expected = grid.n_points() * 2 * dim;
        if dim == 0 || values.len() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                got: values.len(),
            });
        }
        if values.iter().any(|z| !z.is_finite()) {
            return Err(Error::NonFinite("spinor value".into()));
        }
        Ok(Self { grid, dim, values })
    }

    /// Fills component `c` (0..2N) from a function of `x`.
    pub fn from_fn(grid: SpectralGrid, dim: usize, mut f: impl FnMut(f64, usize) -> Complex64) -> Result<Self> {
        let mut out = Self::zeros(grid, dim);
        let w = 2 * dim;
        for i in 0..out.grid.n_points() {
            let x = out.grid.x(i);
            for c in 0..w {
                out.values[i * w + c] = f(x, c);
            }
        }
        Self::from_values(out.grid, dim, out.values)
    }

    pub fn grid(&self) -> &SpectralGrid {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn component(&self, c: usize) -> Vec<Complex64> {
        self.values.iter().skip(c).step_by(2 * self.dim).copied().collect()
    }

    /// `⟨|Ψ|²⟩` with weight `dx`.
    pub fn norm_sqr(&self) -> f64 {
        let density: Vec<f64> = self
            .values
            .chunks_exact(2 * self.dim)
            .map(|s| s.iter().map(|z| z.norm_sqr()).sum())
            .collect();
        crate::analysis::pairwise_sum(&density) * self.grid.dx()
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|z| z.is_finite())
    }

    fn axpy(&self, a: f64, other: &SpinorField) -> SpinorField {
        let values = self.values.iter().zip(&other.values).map(|(x, y)| x + y * a).collect();
        SpinorField {
            grid: self.grid.clone(),
            dim: self.dim,
            values,
        }
    }

    pub fn max_distance(&self, other: &SpinorField) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

/// Componentwise `∂_x Ψ` by forward DFT, multiplication by `ik` and inverse DFT.
pub fn spectral_derivative(f: &SpinorField) -> SpinorField {
    let w = 2 * f.dim;
    let n = f.grid.n_points();
    let mut out = SpinorField::zeros(f.grid.clone(), f.dim);
    let mut buf = vec![ZERO; n];
    for c in 0..w {
        for (i, b) in buf.iter_mut().enumerate() {
            *b = f.values[i * w + c];
        }
        f.grid.differentiate(&mut buf);
        for (i, b) in buf.iter().enumerate() {
            out.values[i * w + c] = *b;
        }
    }
    out
}

/// Mass and background potentials `b₀, b₁` on a u(N) basis.
#[derive(Debug, Clone)]
pub struct DiracParams {
    pub mass: f64,
    pub b0: LieField,
    pub b1: LieField,
    pub gens: GeneratorSet,
}

impl DiracParams {
    pub fn new(mass: f64, b0: LieField, b1: LieField, gens: GeneratorSet) -> Result<Self> {
        if !(mass.is_finite() && mass >= 0.0) {
            return Err(Error::InvalidArgument(format!("mass must be finite and >= 0, got {mass}")));
        }
        for b in [&b0, &b1] {
            if b.n_coords() != gens.len() {
                return Err(Error::DimensionMismatch {
                    expected: gens.len(),
                    got: b.n_coords(),
                });
            }
        }
        Ok(Self { mass, b0, b1, gens })
    }

    pub fn free(mass: f64, gens: GeneratorSet) -> Result<Self> {
        let n = gens.len();
        Self::new(mass, LieField::zero(n), LieField::zero(n), gens)
    }

    pub fn dim(&self) -> usize {
        self.gens.dim()
    }

    /// `(B₀ − B₁, B₀ + B₁)` at `(t, x)`.
    fn potentials(&self, t: f64, x: f64, scratch: &mut [f64], m0: &mut ComplexMatrix, m1: &mut ComplexMatrix) -> Result<(ComplexMatrix, ComplexMatrix)> {
        self.b0.eval_into(t, x, scratch);
        if scratch.iter().any(|v| !v.is_finite()) {
            return Err(Error::NumericalAbort {
                t,
                reason: format!("b0 non-finite at x = {x}"),
            });
        }
        self.gens.combine_into(scratch, m0);
        self.b1.eval_into(t, x, scratch);
        if scratch.iter().any(|v| !v.is_finite()) {
            return Err(Error::NumericalAbort {
                t,
                reason: format!("b1 non-finite at x = {x}"),
            });
        }
        self.gens.combine_into(scratch, m1);
        Ok((&*m0 - &*m1, &*m0 + &*m1))
    }

    /// Upper bound on `‖B₀ ± B₁‖` sampled at `t ∈ {0, t_max/2, t_max}` on
    /// the grid points.
    pub fn potential_bound(&self, grid: &SpectralGrid, t_max: f64) -> Result<f64> {
        let n = self.dim();
        let mut scratch = vec![0.0; self.gens.len()];
        let (mut m0, mut m1) = (ComplexMatrix::zeros(n, n), ComplexMatrix::zeros(n, n));
        let uniform = self.b0.is_uniform() && self.b1.is_uniform();
        let points = if uniform { 1 } else { grid.n_points() };
        let mut bound: f64 = 0.0;
        for t in [0.0, 0.5 * t_max, t_max] {
            for i in 0..points {
                let (a, b) = self.potentials(t, grid.x(i), &mut scratch, &mut m0, &mut m1)?;
                bound = bound.max(a.norm()).max(b.norm());
            }
        }
        Ok(bound)
    }
}

fn matvec_add(m: &ComplexMatrix, v: &[Complex64], scale: Complex64, out: &mut [Complex64]) {
    for (r, o) in out.iter_mut().enumerate() {
        let mut acc = ZERO;
        for (c, x) in v.iter().enumerate() {
            acc += m[(r, c)] * x;
        }
        *o += acc * scale;
    }
}

/// `∂₀Ψ`:
/// `∂₀ψ⁻ = ∂₁ψ⁻ + i(B₀ − B₁)ψ⁻ − imψ⁺`,
/// `∂₀ψ⁺ = −∂₁ψ⁺ + i(B₀ + B₁)ψ⁺ − imψ⁻`.
pub fn dirac_rhs(f: &SpinorField, params: &DiracParams, t: f64) -> Result<SpinorField> {
    let n = f.dim;
    if params.dim() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: params.dim(),
        });
    }
    let w = 2 * n;
    let mut out = spectral_derivative(f);
    let mut scratch = vec![0.0; params.gens.len()];
    let (mut m0, mut m1) = (ComplexMatrix::zeros(n, n), ComplexMatrix::zeros(n, n));
    let uniform = params.b0.is_uniform() && params.b1.is_uniform();
    let mut cached = if uniform {
        Some(params.potentials(t, 0.0, &mut scratch, &mut m0, &mut m1)?)
    } else {
        None
    };
    let im = -I * params.mass;
    for i in 0..f.grid.n_points() {
        let local;
        let (bp, bq) = match cached.as_mut() {
            Some(pair) => (&pair.0, &pair.1),
            None => {
                local = params.potentials(t, f.grid.x(i), &mut scratch, &mut m0, &mut m1)?;
                (&local.0, &local.1)
            }
        };
        let src = &f.values[i * w..(i + 1) * w];
        let dst = &mut out.values[i * w..(i + 1) * w];
        for z in &mut dst[n..] {
            *z = -*z;
        }
        let (minus, plus) = src.split_at(n);
        let (dminus, dplus) = dst.split_at_mut(n);
        matvec_add(bp, minus, I, dminus);
        matvec_add(bq, plus, I, dplus);
        for k in 0..n {
            dminus[k] += im * plus[k];
            dplus[k] += im * minus[k];
        }
    }
    Ok(out)
}

/// Midpoint RK2: `f + dt·rhs(f + dt/2·rhs(f, t), t + dt/2)`.
pub fn rk2_step(f: &SpinorField, params: &DiracParams, t: f64, dt: f64) -> Result<SpinorField> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::InvalidArgument(format!("dt must be positive, got {dt}")));
    }
    let k1 = dirac_rhs(f, params, t)?;
    let mid = f.axpy(0.5 * dt, &k1);
    let k2 = dirac_rhs(&mid, params, t + 0.5 * dt)?;
    Ok(f.axpy(dt, &k2))
}

/// Number of RK2 substeps per `dt` keeping the worst-mode growth factor of
/// midpoint RK2, `(1 + z⁴/4)^{1/2}` per substep with `z = h·rate`, below
/// `max_growth` over `t_max`; substeps are also capped at `h ≤ max_h`.
pub fn stable_substeps(rate: f64, dt: f64, t_max: f64, max_growth: f64, max_h: f64) -> usize {
    if !(rate > 0.0 && dt > 0.0 && t_max > 0.0) {
        return 1;
    }
    let budget = max_growth.ln();
    let mut s = ((dt / max_h).ceil() as usize).max(1);
    loop {
        let h = dt / s as f64;
        let z = h * rate;
        let total = t_max / h;
        if 0.5 * total * (z.powi(4) / 4.0).ln_1p() <= budget || s >= 1 << 20 {
            return s;
        }
        s = (s as f64 * 1.25).ceil() as usize;
    }
}

/// Default substep count for `solve`: growth ≤ 10⁴ on the highest mode and
/// `h ≤ 0.01`.
pub fn default_substeps(grid: &SpectralGrid, params: &DiracParams, dt: f64, t_max: f64) -> Result<usize> {
    let rate = grid.k_max() + params.mass + params.potential_bound(grid, t_max)?;
    Ok(stable_substeps(rate, dt, t_max, 1e4, 0.01))
}

/// Integrates from `t = 0` to `t_max` in steps of `dt`, each split into
/// `substeps` RK2 stages; `observer` sees `(t, Ψ)` after every `dt`.
pub fn solve<F>(initial: &SpinorField, params: &DiracParams, t_max: f64, dt: f64, substeps: usize, mut observer: F) -> Result<SpinorField>
where
    F: FnMut(f64, &SpinorField),
{
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::InvalidArgument(format!("dt must be positive, got {dt}")));
    }
    if !(t_max.is_finite() && t_max >= 0.0) {
        return Err(Error::InvalidArgument(format!("t_max must be >= 0, got {t_max}")));
    }
    if substeps == 0 {
        return Err(Error::InvalidArgument("substeps must be >= 1".into()));
    }
    let steps = (t_max / dt).round() as usize;
    if (steps as f64 * dt - t_max).abs() > 1e-9 * t_max.max(1.0) {
        return Err(Error::InvalidArgument(format!("t_max = {t_max} is not a multiple of dt = {dt}")));
    }
    let h = dt / substeps as f64;
    let mut cur = initial.clone();
    for j in 0..steps {
        let t0 = j as f64 * dt;
        for s in 0..substeps {
            cur = rk2_step(&cur, params, t0 + s as f64 * h, h)?;
        }
        let t = (j + 1) as f64 * dt;
        if !cur.is_finite() {
            return Err(Error::NumericalAbort {
                t,
                reason: "non-finite spinor value".into(),
            });
        }
        observer(t, &cur);
    }
    Ok(cur)
}

/// Exact free evolution `Ψ̂(k, t) = e^{−iH(k)t} Ψ̂(k, 0)` with
/// `e^{−iHt} = cos(Et) − i sin(Et) H/E` per mode and color.
pub fn free_propagate(f: &SpinorField, mass: f64, t: f64) -> Result<SpinorField> {
    if !(mass.is_finite() && mass >= 0.0 && t.is_finite()) {
        return Err(Error::InvalidArgument(format!("free propagation needs finite m >= 0 and t, got m = {mass}, t = {t}")));
    }
    let n = f.grid.n_points();
    let w = 2 * f.dim;
    let mut out = SpinorField::zeros(f.grid.clone(), f.dim);
    let mut minus = vec![ZERO; n];
    let mut plus = vec![ZERO; n];
    for a in 0..f.dim {
        for i in 0..n {
            minus[i] = f.values[i * w + a];
            plus[i] = f.values[i * w + f.dim + a];
        }
        f.grid.0.forward.process(&mut minus);
        f.grid.0.forward.process(&mut plus);
        for (m, &k) in f.grid.wavenumbers().iter().enumerate() {
            let e = k.hypot(mass);
            let (c, s) = if e == 0.0 { (1.0, t) } else { ((e * t).cos(), (e * t).sin() / e) };
            let (x, y) = (minus[m], plus[m]);
            let hx = x * (-k) + y * mass;
            let hy = x * mass + y * k;
            minus[m] = (x * c - I * hx * s) / n as f64;
            plus[m] = (y * c - I * hy * s) / n as f64;
        }
        f.grid.0.inverse.process(&mut minus);
        f.grid.0.inverse.process(&mut plus);
        for i in 0..n {
            out.values[i * w + a] = minus[i];
            out.values[i * w + f.dim + a] = plus[i];
        }
    }
    Ok(out)
}

/// Positive-energy eigenvector of `H(k) = [[−k, m], [m, k]]`:
/// `u₊ = (E − k, m)/‖·‖`, `E = √(k² + m²)`.
pub fn u_plus(k: f64, m: f64) -> Result<[f64; 2]> {
    if !(m.is_finite() && m > 0.0) {
        return Err(Error::InvalidArgument(format!("u_plus needs m > 0, got {m}")));
    }
    if !k.is_finite() {
        return Err(Error::NonFinite(format!("wavenumber {k}")));
    }
    let e = k.hypot(m);
    // E − k loses precision for k ≫ m; use m²/(E + k) there.
    let a = if k > 0.0 { m * m / (e + k) } else { e - k };
    let norm = a.hypot(m);
    Ok([a / norm, m / norm])
}

/// `lim_{m→0⁺} u₊(k, m)`: `(0, 1)` for `k > 0`, `(1, 0)` for `k < 0` and
/// `(1, 1)/√2` at `k = 0`.
pub fn u_plus_massless(k: f64) -> [f64; 2] {
    if k > 0.0 {
        [0.0, 1.0]
    } else if k < 0.0 {
        [1.0, 0.0]
    } else {
        [std::f64::consts::FRAC_1_SQRT_2; 2]
    }
}

/// `Σ_k e^{−(k−k0)²/2σ²} e^{ikx} (u₊(k) ⊗ color)` over the grid modes,
/// normalized to unit L2 bracket. A zero mass uses [`u_plus_massless`].
pub fn gaussian_packet(k0: f64, sigma: f64, mass: f64, color: &[Complex64], grid: &SpectralGrid) -> Result<SpinorField> {
    if !(sigma.is_finite() && sigma > 0.0) {
        return Err(Error::InvalidArgument(format!("sigma must be positive, got {sigma}")));
    }
    if !k0.is_finite() {
        return Err(Error::NonFinite(format!("k0 = {k0}")));
    }
    let dim = color.len();
    let cnorm: f64 = color.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if dim == 0 || (cnorm - 1.0).abs() > 1e-10 {
        return Err(Error::InvalidArgument("color must be a unit vector".into()));
    }
    if !packet_resolved(sigma, grid) {
        log::warn!("packet under-resolved: sigma·L = {} < 4π", sigma * grid.period());
    }
    let n = grid.n_points();
    let w = 2 * dim;
    let mut coeffs = vec![vec![ZERO; n]; 2];
    for (m, &k) in grid.wavenumbers().iter().enumerate() {
        let weight = (-(k - k0).powi(2) / (2.0 * sigma * sigma)).exp();
        if weight == 0.0 {
            continue;
        }
        let u = if mass == 0.0 { u_plus_massless(k) } else { u_plus(k, mass)? };
        let phase = Complex64::from_polar(weight, k * grid.x_min());
        coeffs[0][m] = phase * u[0];
        coeffs[1][m] = phase * u[1];
    }
    let mut values = vec![ZERO; n * w];
    for (block, c) in coeffs.iter_mut().enumerate() {
        grid.0.inverse.process(c);
        for i in 0..n {
            for (a, col) in color.iter().enumerate() {
                values[i * w + block * dim + a] = c[i] * col;
            }
        }
    }
    let mut field = SpinorField::from_values(grid.clone(), dim, values)?;
    let norm = field.norm_sqr();
    if !(norm > 0.0 && norm.is_finite()) {
        return Err(Error::InvalidArgument("packet has no resolved modes".into()));
    }
    let s = 1.0 / norm.sqrt();
    field.values.iter_mut().for_each(|z| *z *= s);
    Ok(field)
}

/// `σ·L ≥ 4π`.
pub fn packet_resolved(sigma: f64, grid: &SpectralGrid) -> bool {
    sigma * grid.period() >= 4.0 * std::f64::consts::PI
}

/// The equally weighted color state `(1, …, 1)/√N`.
pub fn equal_color(dim: usize) -> Vec<Complex64> {
    vec![Complex64::new(1.0 / (dim as f64).sqrt(), 0.0); dim]
}

/// L2 bracket of `|Ψ|²` on a lattice-aligned field.
pub fn lattice_norm(f: &SpinorField, spec: &LatticeSpec) -> Result<f64> {
    let density: Vec<f64> = f
        .values
        .chunks_exact(2 * f.dim)
        .map(|s| s.iter().map(|z| z.norm_sqr()).sum())
        .collect();
    l2_bracket(&density, spec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::ColorElectricField;
    use crate::unitary::generators_u;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn unit_grid(n: usize) -> SpectralGrid {
        SpectralGrid::new(n, 0.0, 2.0 * PI).unwrap()
    }

    #[test]
    fn grid_validation_and_modes() {
        assert!(SpectralGrid::new(4, 0.0, 1.0).is_err());
        assert!(SpectralGrid::new(8, 0.0, 0.0).is_err());
        let g = unit_grid(8);
        assert_eq!(g.wavenumbers(), &[0.0, 1.0, 2.0, 3.0, -4.0, -3.0, -2.0, -1.0]);
        let spec = LatticeSpec::new(0.5, 4, 4).unwrap();
        let g = SpectralGrid::from_lattice(&spec).unwrap();
        assert_eq!(g.n_points(), 9);
        for (i, p) in spec.sites().enumerate() {
            assert!((g.x(i) - spec.x(p)).abs() < 1e-15);
        }
    }

    #[test]
    fn derivative_examples() {
        for n in [16usize, 17] {
            let g = unit_grid(n);
            let constant = SpinorField::from_fn(g.clone(), 1, |_, _| c(2.0, -1.0)).unwrap();
            assert!(spectral_derivative(&constant).values().iter().all(|z| z.norm() < 1e-13));
            let sin = SpinorField::from_fn(g.clone(), 1, |x, _| c(x.sin(), 0.0)).unwrap();
            let d = spectral_derivative(&sin);
            for i in 0..n {
                assert!((d.values()[2 * i] - c(g.x(i).cos(), 0.0)).norm() < 1e-12);
            }
            let mode = SpinorField::from_fn(g.clone(), 1, |x, _| Complex64::from_polar(1.0, 3.0 * x)).unwrap();
            let d = spectral_derivative(&mode);
            for i in 0..n {
                let expect = I * 3.0 * Complex64::from_polar(1.0, 3.0 * g.x(i));
                assert!((d.values()[2 * i + 1] - expect).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn nyquist_derivative_is_zero() {
        let g = unit_grid(8);
        let f = SpinorField::from_fn(g.clone(), 1, |x, _| c((4.0 * x).cos(), 0.0)).unwrap();
        assert!(spectral_derivative(&f).values().iter().all(|z| z.norm() < 1e-12));
    }

    #[test]
    fn rhs_massless_advection() {
        let g = unit_grid(32);
        let params = DiracParams::free(0.0, generators_u(1).unwrap()).unwrap();
        let f = SpinorField::from_fn(g.clone(), 1, |x, comp| if comp == 0 { c((2.0 * x).sin(), 0.0) } else { ZERO }).unwrap();
        let r = dirac_rhs(&f, &params, 0.0).unwrap();
        for i in 0..32 {
            assert!((r.values()[2 * i] - c(2.0 * (2.0 * g.x(i)).cos(), 0.0)).norm() < 1e-12);
            assert!(r.values()[2 * i + 1].norm() < 1e-14);
        }
    }

    #[test]
    fn rhs_plane_wave_is_hamiltonian() {
        let g = unit_grid(32);
        let (k, m) = (3.0, 0.7);
        let params = DiracParams::free(m, generators_u(1).unwrap()).unwrap();
        let (a, b) = (c(0.3, 0.2), c(-0.5, 0.9));
        let f = SpinorField::from_fn(g.clone(), 1, |x, comp| Complex64::from_polar(1.0, k * x) * if comp == 0 { a } else { b }).unwrap();
        let r = dirac_rhs(&f, &params, 0.0).unwrap();
        for i in 0..32 {
            let e = Complex64::from_polar(1.0, k * g.x(i));
            let h0 = -I * (-k * a + m * b);
            let h1 = -I * (m * a + k * b);
            assert!((r.values()[2 * i] - h0 * e).norm() < 1e-12);
            assert!((r.values()[2 * i + 1] - h1 * e).norm() < 1e-12);
        }
    }

    #[test]
    fn rhs_electric_field_terms() {
        let g = unit_grid(16);
        let e_ym = 0.08;
        let field = ColorElectricField::new(e_ym);
        let params = DiracParams::new(0.0, field.b0(), field.b1(), generators_u(2).unwrap()).unwrap();
        let f = SpinorField::from_fn(g.clone(), 2, |_, comp| c(1.0 + comp as f64, 0.5)).unwrap();
        let t = 2.5;
        let r = dirac_rhs(&f, &params, t).unwrap();
        let s = e_ym * t / 2.0;
        let v = f.values();
        for i in 0..16 {
            let (m0, m1, p0, p1) = (v[4 * i], v[4 * i + 1], v[4 * i + 2], v[4 * i + 3]);
            let out = &r.values()[4 * i..4 * i + 4];
            assert!((out[0] - (-I * s * m1)).norm() < 1e-12);
            assert!((out[1] - (-I * s * m0)).norm() < 1e-12);
            assert!((out[2] - (I * s * p1)).norm() < 1e-12);
            assert!((out[3] - (I * s * p0)).norm() < 1e-12);
        }
    }

    #[test]
    fn rk2_trivial_and_order() {
        let g = unit_grid(16);
        let params = DiracParams::free(0.0, generators_u(1).unwrap()).unwrap();
        let zero = SpinorField::zeros(g.clone(), 1);
        assert_eq!(rk2_step(&zero, &params, 0.0, 0.1).unwrap(), zero);
        assert!(rk2_step(&zero, &params, 0.0, 0.0).is_err());

        // global error at fixed time against the exact plane wave
        let (k, m) = (2.0, 0.5);
        let params = DiracParams::free(m, generators_u(1).unwrap()).unwrap();
        let u = u_plus(k, m).unwrap();
        let e = k.hypot(m);
        let init = SpinorField::from_fn(g.clone(), 1, |x, comp| Complex64::from_polar(u[comp], k * x)).unwrap();
        let t_end = 1.0;
        let exact = SpinorField::from_fn(g.clone(), 1, |x, comp| Complex64::from_polar(u[comp], k * x - e * t_end)).unwrap();
        let errs: Vec<f64> = [0.05, 0.025, 0.0125]
            .iter()
            .map(|&dt| solve(&init, &params, t_end, dt, 1, |_, _| {}).unwrap().max_distance(&exact))
            .collect();
        for w in errs.windows(2) {
            let ratio = w[0] / w[1];
            assert!((ratio - 4.0).abs() <= 0.8, "ratio {ratio}");
        }
    }

    #[test]
    fn massless_mode_returns_after_period() {
        let g = unit_grid(16);
        let params = DiracParams::free(0.0, generators_u(1).unwrap()).unwrap();
        let f = SpinorField::from_fn(g.clone(), 1, |x, comp| if comp == 1 { Complex64::from_polar(1.0, x) } else { ZERO }).unwrap();
        let dt = 2.0 * PI / 2000.0;
        let end = solve(&f, &params, 2.0 * PI, dt, 1, |_, _| {}).unwrap();
        let err = end.max_distance(&f);
        assert!(err <= 2.0 * PI * dt * dt / 6.0 * 1.1, "err {err}");
    }

    #[test]
    fn solve_contracts() {
        let g = unit_grid(16);
        let params = DiracParams::free(0.3, generators_u(1).unwrap()).unwrap();
        let f = SpinorField::from_fn(g.clone(), 1, |x, _| c(x.cos(), 0.0)).unwrap();
        assert_eq!(solve(&f, &params, 0.0, 0.1, 1, |_, _| {}).unwrap(), f);
        let mut ts = Vec::new();
        solve(&f, &params, 0.3, 0.1, 2, |t, _| ts.push(t)).unwrap();
        assert_eq!(ts.len(), 3);
        assert!(solve(&f, &params, 0.35, 0.1, 1, |_, _| {}).is_err());
        assert!(solve(&f, &params, 1.0, 0.1, 0, |_, _| {}).is_err());
        // unstable step size blows up and is reported with its time
        let big = SpectralGrid::new(64, 0.0, 1.0).unwrap();
        let f = SpinorField::from_fn(big, 1, |x, _| c((2.0 * PI * 31.0 * x).cos(), 0.0)).unwrap();
        let err = solve(&f, &params, 1e4, 0.5, 1, |_, _| {}).unwrap_err();
        assert!(matches!(err, Error::NumericalAbort { .. }));
    }

    #[test]
    fn norm_conserved_free_massive_packet() {
        let spec = LatticeSpec::for_domain(0.1, 30.0, 100.0).unwrap();
        let g = SpectralGrid::from_lattice(&spec).unwrap();
        let params = DiracParams::free(0.1, generators_u(1).unwrap()).unwrap();
        let init = gaussian_packet(0.0, 0.5, 0.1, &[c(1.0, 0.0)], &g).unwrap();
        let n0 = init.norm_sqr();
        let end = solve(&init, &params, 100.0, 0.1, 64, |_, _| {}).unwrap();
        assert!((end.norm_sqr() - n0).abs() <= 1e-8, "drift {}", (end.norm_sqr() - n0).abs());
    }

    #[test]
    fn substep_budget() {
        let s = stable_substeps(63.0, 0.05, 50.0, 1e4, 0.01);
        let h = 0.05 / s as f64;
        assert!(h <= 0.01);
        assert!(0.5 * (50.0 / h) * ((h * 63.0).powi(4) / 4.0).ln_1p() <= 1e4f64.ln());
        assert_eq!(stable_substeps(0.0, 0.1, 1.0, 1e4, 1.0), 1);
    }

    #[test]
    fn free_propagator_matches_plane_wave_and_rk2() {
        let g = unit_grid(32);
        let (k, m) = (3.0, 0.4);
        let u = u_plus(k, m).unwrap();
        let e = k.hypot(m);
        let init = SpinorField::from_fn(g.clone(), 1, |x, comp| Complex64::from_polar(u[comp], k * x)).unwrap();
        let exact = SpinorField::from_fn(g.clone(), 1, |x, comp| Complex64::from_polar(u[comp], k * x - e * 2.0)).unwrap();
        assert!(free_propagate(&init, m, 2.0).unwrap().max_distance(&exact) < 1e-12);
        let f = SpinorField::from_fn(g.clone(), 2, |x, comp| c((x + comp as f64).sin(), (2.0 * x).cos())).unwrap();
        let params = DiracParams::free(m, generators_u(2).unwrap()).unwrap();
        let rk = solve(&f, &params, 1.0, 0.001, 1, |_, _| {}).unwrap();
        assert!(free_propagate(&f, m, 1.0).unwrap().max_distance(&rk) < 1e-5);
        // massless: pure transport by whole grid steps
        let shifted = free_propagate(&f, 0.0, g.dx() * 3.0).unwrap();
        for i in 0..32 {
            let src = (i + 3) % 32;
            assert!((shifted.values()[4 * i] - f.values()[4 * src]).norm() < 1e-12);
        }
    }

    #[test]
    fn u_plus_examples() {
        let u = u_plus(0.0, 0.3).unwrap();
        assert!((u[0] - 1.0 / 2f64.sqrt()).abs() < 1e-15 && (u[1] - 1.0 / 2f64.sqrt()).abs() < 1e-15);
        assert!(u_plus(1.0, 0.0).is_err());
        for m in [0.05, 0.1, 1.0] {
            for i in 0..200 {
                let k = -50.0 + i as f64 * 0.5;
                let u = u_plus(k, m).unwrap();
                let e = k.hypot(m);
                let r0 = -k * u[0] + m * u[1] - e * u[0];
                let r1 = m * u[0] + k * u[1] - e * u[1];
                assert!(r0.hypot(r1) <= 1e-12, "k = {k}, m = {m}");
                assert!((u[0].hypot(u[1]) - 1.0).abs() <= 1e-15);
                let v = u_plus(-k, m).unwrap();
                assert!((v[0] - u[1]).abs() < 1e-15 && (v[1] - u[0]).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn packet_normalized_and_centered() {
        let spec = LatticeSpec::for_domain(0.1, 20.0, 1.0).unwrap();
        let g = SpectralGrid::from_lattice(&spec).unwrap();
        let color = equal_color(2);
        let p = gaussian_packet(0.0, 0.5, 0.1, &color, &g).unwrap();
        assert!((lattice_norm(&p, &spec).unwrap() - 1.0).abs() < 1e-12);
        let xbar = crate::analysis::mean_position(p.values(), 2, &spec).unwrap();
        assert!(xbar.abs() < 1e-10, "xbar {xbar}");
        // color factors through
        for i in 0..g.n_points() {
            let s = &p.values()[4 * i..4 * i + 4];
            assert!((s[0] - s[1]).norm() < 1e-15 && (s[2] - s[3]).norm() < 1e-15);
        }
        assert!(gaussian_packet(0.0, 0.0, 0.1, &color, &g).is_err());
        assert!(gaussian_packet(0.0, 0.5, 0.1, &[c(1.0, 0.0), c(1.0, 0.0)], &g).is_err());
        assert!(!packet_resolved(0.01, &g));
        let massless = gaussian_packet(0.5, 0.5, 0.0, &color, &g).unwrap();
        assert!((lattice_norm(&massless, &spec).unwrap() - 1.0).abs() < 1e-12);
        assert!(gaussian_packet(0.5, 0.5, -1.0, &color, &g).is_err());
        let u = u_plus(1e-3, 1e-9).unwrap();
        let v = u_plus_massless(1e-3);
        assert!((u[0] - v[0]).abs() < 1e-5 && (u[1] - v[1]).abs() < 1e-5);
    }
}
