//! The 2N-component walk: coin operator, evolution, and gauge transformations
//! of walker states.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::analysis::pairwise_sum;
use crate::error::{Error, Result};
use crate::lattice::LatticeSpec;
use crate::lattice_gauge::{GaugeField, GaugeSlice, GaugeTransformation};
use crate::unitary::{unitarity_residual, ComplexMatrix, INPUT_TOL};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Coin angle and internal dimension of a walk.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WalkConfig {
    pub theta: f64,
    pub dim: usize,
}

impl WalkConfig {
    /// `θ = −ε m`.
    pub fn from_mass(mass: f64, epsilon: f64, dim: usize) -> Self {
        Self {
            theta: -epsilon * mass,
            dim,
        }
    }

    pub fn with_theta(theta: f64, dim: usize) -> Self {
        Self { theta, dim }
    }
}

/// `B(θ, P, Q) = [[cosθ P, i sinθ Q], [i sinθ P, cosθ Q]]`.
pub fn coin_matrix(theta: f64, p: &ComplexMatrix, q: &ComplexMatrix) -> Result<ComplexMatrix> {
    let n = p.nrows();
    if q.nrows() != n || !p.is_square() || !q.is_square() {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: q.nrows(),
        });
    }
    for m in [p, q] {
        let residual = unitarity_residual(m);
        if residual > INPUT_TOL {
            return Err(Error::NotUnitary { residual });
        }
    }
    let (c, s) = (Complex64::new(theta.cos(), 0.0), I * theta.sin());
    let mut b = ComplexMatrix::zeros(2 * n, 2 * n);
    b.view_mut((0, 0), (n, n)).copy_from(&(p * c));
    b.view_mut((0, n), (n, n)).copy_from(&(q * s));
    b.view_mut((n, 0), (n, n)).copy_from(&(p * s));
    b.view_mut((n, n), (n, n)).copy_from(&(q * c));
    Ok(b)
}

/// One time slice of the walk: per site, `N` components of `ψ⁻` followed by
/// `N` components of `ψ⁺`, sites in order `p = −p_max..=p_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct WalkState {
    spec: LatticeSpec,
    dim: usize,
    j: usize,
    amps: Vec<Complex64>,
}

impl WalkState {
    pub fn zeros(spec: LatticeSpec, dim: usize) -> Self {
        Self {
            spec,
            dim,
            j: 0,
            amps: vec![Complex64::new(0.0, 0.0); spec.n_sites() * 2 * dim],
        }
    }

    pub fn from_amplitudes(spec: LatticeSpec, dim: usize, j: usize, amps: Vec<Complex64>) -> Result<Self> {
        let expected = spec.n_sites() * 2 * dim;
        if amps.len() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                got: amps.len(),
            });
        }
        if amps.iter().any(|z| !z.is_finite()) {
            return Err(Error::NonFinite("walker amplitude".into()));
        }
        Ok(Self { spec, dim, j, amps })
    }

    /// Amplitude `c` at site `p` only.
    pub fn localized(spec: LatticeSpec, dim: usize, p: i64, components: &[Complex64]) -> Result<Self> {
        if components.len() != 2 * dim {
            return Err(Error::DimensionMismatch {
                expected: 2 * dim,
                got: components.len(),
            });
        }
        let mut s = Self::zeros(spec, dim);
        s.site_mut(p).copy_from_slice(components);
        Ok(s)
    }

    pub fn spec(&self) -> &LatticeSpec {
        &self.spec
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn j(&self) -> usize {
        self.j
    }

    pub fn time(&self) -> f64 {
        self.spec.t(self.j)
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn into_amplitudes(self) -> Vec<Complex64> {
        self.amps
    }

    pub fn site(&self, p: i64) -> &[Complex64] {
        let w = 2 * self.dim;
        let s = self.spec.site_index(p);
        &self.amps[s * w..(s + 1) * w]
    }

    pub fn site_mut(&mut self, p: i64) -> &mut [Complex64] {
        let w = 2 * self.dim;
        let s = self.spec.site_index(p);
        &mut self.amps[s * w..(s + 1) * w]
    }

    pub fn minus(&self, p: i64) -> &[Complex64] {
        &self.site(p)[..self.dim]
    }

    pub fn plus(&self, p: i64) -> &[Complex64] {
        &self.site(p)[self.dim..]
    }

    /// `|Ψ_{j,p}|²` per site.
    pub fn site_probabilities(&self) -> Vec<f64> {
        self.amps
            .chunks_exact(2 * self.dim)
            .map(|c| c.iter().map(|z| z.norm_sqr()).sum())
            .collect()
    }

    /// Largest componentwise distance to another state.
    pub fn max_distance(&self, other: &WalkState) -> f64 {
        self.amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

/// `Π_j = Σ_p |Ψ_{j,p}|²`.
pub fn total_probability(state: &WalkState) -> f64 {
    let per_site: Vec<f64> = state.amps.iter().map(|z| z.norm_sqr()).collect();
    pairwise_sum(&per_site)
}

fn matvec(m: &[Complex64], v: &[Complex64], out: &mut [Complex64]) {
    let n = v.len();
    for (r, o) in out.iter_mut().enumerate() {
        let row = &m[r * n..(r + 1) * n];
        *o = row.iter().zip(v).map(|(a, b)| a * b).sum();
    }
}

/// Advances `state` by one step using a pre-built slice of links.
pub fn step_with_slice(state: &WalkState, slice: &GaugeSlice, theta: f64) -> Result<WalkState> {
    let n = state.dim;
    if slice.dim != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: slice.dim,
        });
    }
    let sites = state.spec.n_sites();
    if slice.n_sites() != sites {
        return Err(Error::DimensionMismatch {
            expected: sites,
            got: slice.n_sites(),
        });
    }
    let (c, s) = (theta.cos(), I * theta.sin());
    let w = 2 * n;
    let d2 = n * n;
    let mut out = vec![Complex64::new(0.0, 0.0); state.amps.len()];
    let mut a = vec![Complex64::new(0.0, 0.0); n];
    let mut b = vec![Complex64::new(0.0, 0.0); n];
    for site in 0..sites {
        let right = if site + 1 == sites { 0 } else { site + 1 };
        let left = if site == 0 { sites - 1 } else { site - 1 };
        let minus_src = &state.amps[right * w..right * w + n];
        let plus_src = &state.amps[left * w + n..left * w + w];
        matvec(&slice.p[site * d2..(site + 1) * d2], minus_src, &mut a);
        matvec(&slice.q[site * d2..(site + 1) * d2], plus_src, &mut b);
        let dst = &mut out[site * w..(site + 1) * w];
        for k in 0..n {
            dst[k] = a[k] * c + b[k] * s;
            dst[n + k] = a[k] * s + b[k] * c;
        }
    }
    Ok(WalkState {
        spec: state.spec,
        dim: n,
        j: state.j + 1,
        amps: out,
    })
}

fn check_field(state: &WalkState, field: &GaugeField, config: &WalkConfig) -> Result<()> {
    if field.dim() != state.dim || config.dim != state.dim {
        return Err(Error::DimensionMismatch {
            expected: state.dim,
            got: if field.dim() != state.dim { field.dim() } else { config.dim },
        });
    }
    if field.spec().p_max() != state.spec.p_max() {
        return Err(Error::DimensionMismatch {
            expected: state.spec.n_sites(),
            got: field.spec().n_sites(),
        });
    }
    if !config.theta.is_finite() {
        return Err(Error::NonFinite("coin angle".into()));
    }
    Ok(())
}

/// `Ψ_{j+1,p} = B(θ, P_{j,p}, Q_{j,p}) (ψ⁻_{j,p+1}, ψ⁺_{j,p−1})`.
pub fn step(state: &WalkState, field: &GaugeField, config: &WalkConfig) -> Result<WalkState> {
    check_field(state, field, config)?;
    let slice = field.slice(state.j)?;
    step_with_slice(state, &slice, config.theta)
}

/// Applies `steps` steps; `observer` sees every new slice.
pub fn evolve<F>(state: &WalkState, field: &GaugeField, config: &WalkConfig, steps: usize, mut observer: F) -> Result<WalkState>
where
    F: FnMut(&WalkState),
{
    check_field(state, field, config)?;
    let mut cur = state.clone();
    for _ in 0..steps {
        let slice = field.slice(cur.j)?;
        cur = step_with_slice(&cur, &slice, config.theta)?;
        observer(&cur);
    }
    Ok(cur)
}

/// `Ψ′_{j,p} = (1₂ ⊗ G_{j,p}) Ψ_{j,p}`.
pub fn gauge_transform_state(state: &WalkState, g: &GaugeTransformation) -> Result<WalkState> {
    let n = state.dim;
    if g.dim() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: g.dim(),
        });
    }
    if g.spec().p_max() != state.spec.p_max() {
        return Err(Error::DimensionMismatch {
            expected: state.spec.n_sites(),
            got: g.spec().n_sites(),
        });
    }
    let mut out = state.clone();
    let mut buf = vec![Complex64::new(0.0, 0.0); n];
    for p in state.spec.sites() {
        let gm = g.at(state.j, p)?;
        let flat: Vec<Complex64> = (0..n).flat_map(|r| (0..n).map(move |c| (r, c))).map(|rc| gm[rc]).collect();
        let site = out.site_mut(p);
        for block in 0..2 {
            let src: Vec<Complex64> = site[block * n..(block + 1) * n].to_vec();
            matvec(&flat, &src, &mut buf);
            site[block * n..(block + 1) * n].copy_from_slice(&buf);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::unitary::{generators_u, max_abs};
    use std::f64::consts::FRAC_PI_4;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn spec() -> LatticeSpec {
        LatticeSpec::new(0.1, 5, 40).unwrap()
    }

    fn random_state(spec: LatticeSpec, dim: usize, seed: u64) -> WalkState {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let amps = (0..spec.n_sites() * 2 * dim)
            .map(|_| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        WalkState::from_amplitudes(spec, dim, 0, amps).unwrap()
    }

    #[test]
    fn coin_limits() {
        let id = ComplexMatrix::identity(2, 2);
        let b = coin_matrix(0.0, &id, &id).unwrap();
        assert!(max_abs(&(b - ComplexMatrix::identity(4, 4))) == 0.0);
        let b = coin_matrix(std::f64::consts::FRAC_PI_2, &id, &id).unwrap();
        for r in 0..4 {
            for col in 0..4 {
                let expect = if (r + 2) % 4 == col { I } else { c(0.0, 0.0) };
                assert!((b[(r, col)] - expect).norm() <= 1e-15);
            }
        }
    }

    #[test]
    fn coin_is_unitary() {
        let gens = generators_u(2).unwrap();
        let r = GaugeField::random(spec(), 2, 3, 3.0).unwrap();
        let (p, q) = r.links(4, 1).unwrap();
        let b = coin_matrix(0.3, &p, &q).unwrap();
        assert!(unitarity_residual(&b) <= 1e-12);
        assert_eq!(gens.dim(), 2);
        assert!(coin_matrix(0.3, &p, &ComplexMatrix::identity(3, 3)).is_err());
    }

    #[test]
    fn free_massless_walk_is_transport() {
        let s = spec();
        let field = GaugeField::identity(s, 2);
        let cfg = WalkConfig::with_theta(0.0, 2);
        let psi = random_state(s, 2, 1);
        let next = step(&psi, &field, &cfg).unwrap();
        for p in s.sites() {
            assert_eq!(next.minus(p), psi.minus(p + 1));
            assert_eq!(next.plus(p), psi.plus(p - 1));
        }
        assert_eq!(next.j(), 1);
    }

    #[test]
    fn single_site_split_quarter_angle() {
        let s = spec();
        let field = GaugeField::identity(s, 1);
        let cfg = WalkConfig::with_theta(FRAC_PI_4, 1);
        let psi = WalkState::localized(s, 1, 0, &[c(0.0, 0.0), c(1.0, 0.0)]).unwrap();
        let next = step(&psi, &field, &cfg).unwrap();
        // ψ⁺ at p = 0 feeds site p = 1 in both components
        let out = next.site(1);
        assert!((out[0].norm_sqr() - 0.5).abs() <= 1e-15);
        assert!((out[1].norm_sqr() - 0.5).abs() <= 1e-15);
        assert!((total_probability(&next) - 1.0).abs() <= 1e-15);
    }

    #[test]
    fn steps_compose() {
        let s = spec();
        let field = GaugeField::random(s, 2, 5, 2.0).unwrap();
        let cfg = WalkConfig::from_mass(0.7, s.epsilon(), 2);
        let psi = random_state(s, 2, 2);
        let two = evolve(&psi, &field, &cfg, 2, |_| {}).unwrap();
        let one_one = step(&step(&psi, &field, &cfg).unwrap(), &field, &cfg).unwrap();
        assert_eq!(two, one_one);
        assert_eq!(evolve(&psi, &field, &cfg, 0, |_| {}).unwrap(), psi);
        let mut seen = Vec::new();
        evolve(&psi, &field, &cfg, 3, |st| seen.push(st.j())).unwrap();
        assert_eq!(seen, vec![1, 2, 3]);
    }

    #[test]
    fn probability_conserved() {
        let s = spec();
        let field = GaugeField::random(s, 3, 9, 3.0).unwrap();
        let cfg = WalkConfig::with_theta(0.4, 3);
        let psi = random_state(s, 3, 3);
        let p0 = total_probability(&psi);
        let end = evolve(&psi, &field, &cfg, 39, |st| {
            assert!((total_probability(st) - p0).abs() <= 1e-12 * p0);
        })
        .unwrap();
        assert_eq!(end.j(), 39);
        assert_eq!(total_probability(&WalkState::zeros(s, 2)), 0.0);
    }

    #[test]
    fn step_beyond_field_fails() {
        let s = LatticeSpec::new(0.1, 3, 2).unwrap();
        let field = GaugeField::identity(s, 1);
        let cfg = WalkConfig::with_theta(0.1, 1);
        let psi = WalkState::localized(s, 1, 0, &[c(1.0, 0.0), c(0.0, 0.0)]).unwrap();
        assert!(evolve(&psi, &field, &cfg, 3, |_| {}).is_ok());
        assert!(evolve(&psi, &field, &cfg, 4, |_| {}).is_err());
        let cfg2 = WalkConfig::with_theta(0.1, 2);
        assert!(matches!(step(&psi, &field, &cfg2), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn gauge_transform_of_state() {
        let s = spec();
        let psi = random_state(s, 1, 4);
        let g = GaugeTransformation::identity(s, 1);
        assert_eq!(gauge_transform_state(&psi, &g).unwrap(), psi);

        let g = GaugeTransformation::from_fn(s, 1, |_, p| {
            ComplexMatrix::from_element(1, 1, Complex64::from_polar(1.0, 0.3 * p as f64))
        })
        .unwrap();
        let out = gauge_transform_state(&psi, &g).unwrap();
        for p in s.sites() {
            let phase = Complex64::from_polar(1.0, 0.3 * p as f64);
            for (a, b) in out.site(p).iter().zip(psi.site(p)) {
                assert!((a - b * phase).norm() <= 1e-15);
            }
        }

        let psi = random_state(s, 3, 5);
        let g = GaugeTransformation::random(s, 3, 6).unwrap();
        let out = gauge_transform_state(&psi, &g).unwrap();
        assert!((total_probability(&out) - total_probability(&psi)).abs() <= 1e-14 * total_probability(&psi));
    }

    #[test]
    fn commuting_square_small() {
        let s = LatticeSpec::new(0.1, 4, 12).unwrap();
        let r = GaugeField::random(s, 2, 31, 3.0).unwrap();
        let g = GaugeTransformation::random(s.with_j_max(13).unwrap(), 2, 32).unwrap();
        let cfg = WalkConfig::with_theta(0.37, 2);
        let psi = random_state(s, 2, 33);
        let r2 = transform_potentials_helper(&r, &g);
        let lhs = evolve(&gauge_transform_state(&psi, &g).unwrap(), &r2, &cfg, 10, |_| {}).unwrap();
        let rhs = gauge_transform_state(&evolve(&psi, &r, &cfg, 10, |_| {}).unwrap(), &g).unwrap();
        assert!(lhs.max_distance(&rhs) <= 1e-12);
    }

    fn transform_potentials_helper(r: &GaugeField, g: &GaugeTransformation) -> GaugeField {
        crate::lattice_gauge::transform_potentials(r, g).unwrap()
    }
}
