//! Gauge potentials `R = (P, Q)` on the spacetime lattice, their gauge
//! transformations, and the discrete curvature built from them.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::lattice::{LatticeSpec, LieField};
use crate::unitary::{
    exp_i_hermitian, factorize, generators_u, max_abs, unitarity_residual, ComplexMatrix, GeneratorSet,
    CONSTRUCTION_TOL, INPUT_TOL,
};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Something that can produce the link pair `(P_{j,p}, Q_{j,p})` on demand.
///
/// Implementations must be pure: the same `(j, p)` always yields the same
/// matrices, so slices can be rebuilt concurrently.
pub trait LinkSource: Send + Sync + fmt::Debug {
    fn dim(&self) -> usize;
    fn links(&self, j: usize, p: i64) -> (ComplexMatrix, ComplexMatrix);

    /// True when the links do not depend on `p`.
    fn is_uniform(&self) -> bool {
        false
    }
}

/// `P = exp(iε b_P·τ)`, `Q = exp(iε b_Q·τ)` sampled at `(t_j, x_p)`.
#[derive(Debug)]
struct SampledPotentials {
    spec: LatticeSpec,
    gens: GeneratorSet,
    b_p: LieField,
    b_q: LieField,
}

impl SampledPotentials {
    fn link(&self, b: &LieField, t: f64, x: f64) -> ComplexMatrix {
        let mut coords = vec![0.0; b.n_coords()];
        b.eval_into(t, x, &mut coords);
        let eps = self.spec.epsilon();
        coords.iter_mut().for_each(|c| *c *= eps);
        let mut h = ComplexMatrix::zeros(self.gens.dim(), self.gens.dim());
        self.gens.combine_into(&coords, &mut h);
        exp_i_hermitian(&h)
    }
}

impl LinkSource for SampledPotentials {
    fn dim(&self) -> usize {
        self.gens.dim()
    }

    fn links(&self, j: usize, p: i64) -> (ComplexMatrix, ComplexMatrix) {
        let (t, x) = (self.spec.t(j), self.spec.x(p));
        (self.link(&self.b_p, t, x), self.link(&self.b_q, t, x))
    }

    fn is_uniform(&self) -> bool {
        self.b_p.is_uniform() && self.b_q.is_uniform()
    }
}

/// Independent random links per site, reproducible from `(seed, j, p)`.
#[derive(Debug)]
struct RandomLinks {
    gens: GeneratorSet,
    seed: u64,
    scale: f64,
    wrap: usize,
    p_max: i64,
}

pub(crate) fn site_rng(seed: u64, j: usize, p: i64, salt: u64) -> ChaCha8Rng {
    // splitmix-style mixing keeps neighbouring sites decorrelated
    let mut z = seed
        ^ (j as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
        ^ (p as u64).wrapping_mul(0xC2B2_AE3D_27D4_EB4F)
        ^ salt.wrapping_mul(0x1656_67B1_9E37_79F9);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    ChaCha8Rng::seed_from_u64(z ^ (z >> 31))
}

pub(crate) fn random_unitary(gens: &GeneratorSet, rng: &mut impl Rng, scale: f64) -> ComplexMatrix {
    let coords: Vec<f64> = (0..gens.len()).map(|_| rng.random_range(-scale..=scale)).collect();
    let mut h = ComplexMatrix::zeros(gens.dim(), gens.dim());
    gens.combine_into(&coords, &mut h);
    exp_i_hermitian(&h)
}

impl LinkSource for RandomLinks {
    fn dim(&self) -> usize {
        self.gens.dim()
    }

    fn links(&self, j: usize, p: i64) -> (ComplexMatrix, ComplexMatrix) {
        let p = (p + self.p_max).rem_euclid(self.wrap as i64) - self.p_max;
        let mut rng = site_rng(self.seed, j, p, 1);
        let a = random_unitary(&self.gens, &mut rng, self.scale);
        let b = random_unitary(&self.gens, &mut rng, self.scale);
        (a, b)
    }
}

#[derive(Clone)]
enum Links {
    /// Row-major over `(j, site)`.
    Stored {
        p: Arc<Vec<ComplexMatrix>>,
        q: Arc<Vec<ComplexMatrix>>,
    },
    Lazy(Arc<dyn LinkSource>),
}

/// The discrete gauge potential `R = (P, Q)` over slices `0..=j_max`.
#[derive(Clone)]
pub struct GaugeField {
    spec: LatticeSpec,
    dim: usize,
    links: Links,
}

impl fmt::Debug for GaugeField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match &self.links {
            Links::Stored { .. } => "stored",
            Links::Lazy(_) => "lazy",
        };
        f.debug_struct("GaugeField")
            .field("spec", &self.spec)
            .field("dim", &self.dim)
            .field("links", &kind)
            .finish()
    }
}

/// One time slice of links in flat row-major layout, ready for the walker.
#[derive(Debug, Clone)]
pub struct GaugeSlice {
    pub dim: usize,
    pub p: Vec<Complex64>,
    pub q: Vec<Complex64>,
}

impl GaugeSlice {
    pub fn n_sites(&self) -> usize {
        self.p.len() / (self.dim * self.dim)
    }
}

fn check_j(spec: &LatticeSpec, j: usize) -> Result<()> {
    if j > spec.j_max() {
        return Err(Error::OutOfRange(format!("time slice {j} beyond j_max = {}", spec.j_max())));
    }
    Ok(())
}

impl GaugeField {
    /// Trivial field `P = Q = 1`.
    pub fn identity(spec: LatticeSpec, dim: usize) -> Self {
        let n = (spec.j_max() + 1) * spec.n_sites();
        let id = ComplexMatrix::identity(dim, dim);
        let v = Arc::new(vec![id; n]);
        Self {
            spec,
            dim,
            links: Links::Stored { p: v.clone(), q: v },
        }
    }

    /// Field from explicit link arrays, row-major over `(j, site)`.
    pub fn from_links(spec: LatticeSpec, dim: usize, p: Vec<ComplexMatrix>, q: Vec<ComplexMatrix>) -> Result<Self> {
        let n = (spec.j_max() + 1) * spec.n_sites();
        if p.len() != n || q.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: p.len().min(q.len()),
            });
        }
        for (idx, m) in p.iter().chain(q.iter()).enumerate() {
            if m.nrows() != dim || m.ncols() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: m.nrows(),
                });
            }
            let residual = unitarity_residual(m);
            if residual > INPUT_TOL {
                log::debug!("link {idx} not unitary");
                return Err(Error::NotUnitary { residual });
            }
        }
        Ok(Self {
            spec,
            dim,
            links: Links::Stored {
                p: Arc::new(p),
                q: Arc::new(q),
            },
        })
    }

    /// Independent random links, each `exp(i X·τ)` with coordinates uniform in
    /// `[−scale, scale]`. Links are generated lazily from `(seed, j, p)`.
    pub fn random(spec: LatticeSpec, dim: usize, seed: u64, scale: f64) -> Result<Self> {
        let gens = generators_u(dim)?;
        Ok(Self {
            spec,
            dim,
            links: Links::Lazy(Arc::new(RandomLinks {
                gens,
                seed,
                scale,
                wrap: spec.n_sites(),
                p_max: spec.p_max() as i64,
            })),
        })
    }

    pub fn from_source(spec: LatticeSpec, source: Arc<dyn LinkSource>) -> Self {
        Self {
            spec,
            dim: source.dim(),
            links: Links::Lazy(source),
        }
    }

    pub fn spec(&self) -> &LatticeSpec {
        &self.spec
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_lazy(&self) -> bool {
        matches!(self.links, Links::Lazy(_))
    }

    /// `(P_{j,p}, Q_{j,p})`, `p` wrapping periodically.
    pub fn links(&self, j: usize, p: i64) -> Result<(ComplexMatrix, ComplexMatrix)> {
        check_j(&self.spec, j)?;
        Ok(self.links_unchecked(j, p))
    }

    fn links_unchecked(&self, j: usize, p: i64) -> (ComplexMatrix, ComplexMatrix) {
        match &self.links {
            Links::Stored { p: ps, q: qs } => {
                let idx = j * self.spec.n_sites() + self.spec.site_index(p);
                (ps[idx].clone(), qs[idx].clone())
            }
            Links::Lazy(src) => {
                let p = self.spec.site_p(self.spec.site_index(p));
                src.links(j, p)
            }
        }
    }

    pub fn p(&self, j: usize, p: i64) -> Result<ComplexMatrix> {
        Ok(self.links(j, p)?.0)
    }

    pub fn q(&self, j: usize, p: i64) -> Result<ComplexMatrix> {
        Ok(self.links(j, p)?.1)
    }

    /// Materializes slice `j` in flat layout. Lazy sources are evaluated in
    /// parallel over sites; the result does not depend on scheduling.
    pub fn slice(&self, j: usize) -> Result<GaugeSlice> {
        check_j(&self.spec, j)?;
        let n = self.spec.n_sites();
        let d2 = self.dim * self.dim;
        let pairs: Vec<(ComplexMatrix, ComplexMatrix)> = match &self.links {
            Links::Stored { .. } => (0..n)
                .map(|s| self.links_unchecked(j, self.spec.site_p(s)))
                .collect(),
            Links::Lazy(src) if src.is_uniform() => vec![self.links_unchecked(j, 0); n],
            Links::Lazy(_) => (0..n)
                .into_par_iter()
                .map(|s| self.links_unchecked(j, self.spec.site_p(s)))
                .collect(),
        };
        let mut p = Vec::with_capacity(n * d2);
        let mut q = Vec::with_capacity(n * d2);
        for (pm, qm) in &pairs {
            push_row_major(&mut p, pm);
            push_row_major(&mut q, qm);
        }
        Ok(GaugeSlice { dim: self.dim, p, q })
    }

    /// Copies every link into memory.
    pub fn materialize(&self) -> GaugeField {
        match &self.links {
            Links::Stored { .. } => self.clone(),
            Links::Lazy(_) => {
                let (p, q): (Vec<_>, Vec<_>) = (0..=self.spec.j_max())
                    .flat_map(|j| self.spec.sites().map(move |p| (j, p)))
                    .collect::<Vec<_>>()
                    .into_par_iter()
                    .map(|(j, p)| self.links_unchecked(j, p))
                    .unzip();
                GaugeField {
                    spec: self.spec,
                    dim: self.dim,
                    links: Links::Stored {
                        p: Arc::new(p),
                        q: Arc::new(q),
                    },
                }
            }
        }
    }
}

fn push_row_major(out: &mut Vec<Complex64>, m: &ComplexMatrix) {
    for r in 0..m.nrows() {
        for c in 0..m.ncols() {
            out.push(m[(r, c)]);
        }
    }
}

/// `P_{j,p} = exp(iε b_P(t_j, x_p)·τ)` and likewise for `Q`.
///
/// The coordinate functions are checked for finiteness on every lattice site
/// up front; the exponentials are evaluated lazily per slice.
pub fn sample_from_potentials(b_p: &LieField, b_q: &LieField, spec: LatticeSpec, gens: &GeneratorSet) -> Result<GaugeField> {
    let n_coords = gens.len();
    for (name, b) in [("b_P", b_p), ("b_Q", b_q)] {
        if b.n_coords() != n_coords {
            return Err(Error::DimensionMismatch {
                expected: n_coords,
                got: b.n_coords(),
            });
        }
        let mut buf = vec![0.0; n_coords];
        for j in 0..=spec.j_max() {
            for p in spec.sites() {
                b.eval_into(spec.t(j), spec.x(p), &mut buf);
                if buf.iter().any(|v| !v.is_finite()) {
                    return Err(Error::NonFiniteSample {
                        what: name,
                        j: j as i64,
                        p,
                    });
                }
            }
        }
    }
    Ok(GaugeField::from_source(
        spec,
        Arc::new(SampledPotentials {
            spec,
            gens: gens.clone(),
            b_p: b_p.clone(),
            b_q: b_q.clone(),
        }),
    ))
}

/// A lattice array of `G_{j,p} ∈ U(N)`.
#[derive(Debug, Clone)]
pub struct GaugeTransformation {
    spec: LatticeSpec,
    dim: usize,
    g: Vec<ComplexMatrix>,
}

impl GaugeTransformation {
    pub fn identity(spec: LatticeSpec, dim: usize) -> Self {
        let n = (spec.j_max() + 1) * spec.n_sites();
        Self {
            spec,
            dim,
            g: vec![ComplexMatrix::identity(dim, dim); n],
        }
    }

    pub fn from_fn(spec: LatticeSpec, dim: usize, mut f: impl FnMut(usize, i64) -> ComplexMatrix) -> Result<Self> {
        let mut g = Vec::with_capacity((spec.j_max() + 1) * spec.n_sites());
        for j in 0..=spec.j_max() {
            for p in spec.sites() {
                let m = f(j, p);
                if m.nrows() != dim {
                    return Err(Error::DimensionMismatch {
                        expected: dim,
                        got: m.nrows(),
                    });
                }
                let residual = unitarity_residual(&m);
                if residual > CONSTRUCTION_TOL {
                    return Err(Error::NotUnitary { residual });
                }
                g.push(m);
            }
        }
        Ok(Self { spec, dim, g })
    }

    /// Random site-independent draws, reproducible from `seed`.
    pub fn random(spec: LatticeSpec, dim: usize, seed: u64) -> Result<Self> {
        let gens = generators_u(dim)?;
        Self::from_fn(spec, dim, |j, p| {
            let mut rng = site_rng(seed, j, p, 2);
            random_unitary(&gens, &mut rng, std::f64::consts::PI)
        })
    }

    /// The lattice of inverses `G†`.
    pub fn inverse(&self) -> Self {
        Self {
            spec: self.spec,
            dim: self.dim,
            g: self.g.iter().map(|m| m.adjoint()).collect(),
        }
    }

    pub fn spec(&self) -> &LatticeSpec {
        &self.spec
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn at(&self, j: usize, p: i64) -> Result<&ComplexMatrix> {
        check_j(&self.spec, j)?;
        Ok(&self.g[j * self.spec.n_sites() + self.spec.site_index(p)])
    }
}

fn check_compatible(spec: &LatticeSpec, dim: usize, g: &GaugeTransformation) -> Result<()> {
    if g.dim != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: g.dim,
        });
    }
    if g.spec.p_max() != spec.p_max() || g.spec.epsilon() != spec.epsilon() {
        return Err(Error::InvalidArgument("gauge transformation lattice differs from field lattice".into()));
    }
    Ok(())
}

/// `P′ = G_{j+1,p} P G⁻¹_{j,p+1}`, `Q′ = G_{j+1,p} Q G⁻¹_{j,p−1}`.
///
/// `G` must cover one slice more than `R`.
pub fn transform_potentials(r: &GaugeField, g: &GaugeTransformation) -> Result<GaugeField> {
    check_compatible(&r.spec, r.dim, g)?;
    if g.spec.j_max() < r.spec.j_max() + 1 {
        return Err(Error::OutOfRange(format!(
            "gauge transformation needs slices up to {}, has {}",
            r.spec.j_max() + 1,
            g.spec.j_max()
        )));
    }
    let coords: Vec<(usize, i64)> = (0..=r.spec.j_max())
        .flat_map(|j| r.spec.sites().map(move |p| (j, p)))
        .collect();
    let (p, q): (Vec<_>, Vec<_>) = coords
        .into_par_iter()
        .map(|(j, p)| {
            let (pm, qm) = r.links_unchecked(j, p);
            let g_next = &g.g[(j + 1) * g.spec.n_sites() + g.spec.site_index(p)];
            let g_right = &g.g[j * g.spec.n_sites() + g.spec.site_index(p + 1)];
            let g_left = &g.g[j * g.spec.n_sites() + g.spec.site_index(p - 1)];
            (g_next * pm * g_right.adjoint(), g_next * qm * g_left.adjoint())
        })
        .unzip();
    Ok(GaugeField {
        spec: r.spec,
        dim: r.dim,
        links: Links::Stored {
            p: Arc::new(p),
            q: Arc::new(q),
        },
    })
}

/// `U_{j,p} = Q†_{j,p} P_{j,p}`.
pub fn holonomy_u(r: &GaugeField, j: usize, p: i64) -> Result<ComplexMatrix> {
    let (pm, qm) = r.links(j, p)?;
    Ok(qm.adjoint() * pm)
}

/// `V_{j,p} = Q_{j,p} P_{j−1,p−1}`.
pub fn holonomy_v(r: &GaugeField, j: usize, p: i64) -> Result<ComplexMatrix> {
    if j == 0 {
        return Err(Error::OutOfRange("V needs slice j - 1; j = 0 given".into()));
    }
    let qm = r.q(j, p)?;
    let pm = r.p(j - 1, p - 1)?;
    Ok(qm * pm)
}

/// `ℱ_{j,p}` attributed to site `(j, p)`.
#[derive(Debug, Clone)]
pub struct CurvatureSample {
    pub j: usize,
    pub p: i64,
    pub value: ComplexMatrix,
}

fn check_curvature_range(spec: &LatticeSpec, j: usize) -> Result<()> {
    if j == 0 || j + 1 > spec.j_max() {
        return Err(Error::OutOfRange(format!(
            "curvature needs 1 <= j <= j_max - 1 = {}, got {j}",
            spec.j_max() - 1
        )));
    }
    Ok(())
}

/// Four-factor product from any link accessor.
fn curvature_with<F>(links: F, j: usize, p: i64) -> ComplexMatrix
where
    F: Fn(usize, i64) -> (ComplexMatrix, ComplexMatrix),
{
    let u = |j: usize, p: i64| {
        let (pm, qm) = links(j, p);
        qm.adjoint() * pm
    };
    let v = |j: usize, p: i64| {
        let (_, qm) = links(j, p);
        let (pm, _) = links(j - 1, p - 1);
        qm * pm
    };
    u(j - 1, p).adjoint() * v(j, p - 1).adjoint() * u(j + 1, p) * v(j, p + 1)
}

/// `ℱ_{j,p} = U†_{j−1,p} V†_{j,p−1} U_{j+1,p} V_{j,p+1}`.
pub fn discrete_curvature(r: &GaugeField, j: usize, p: i64) -> Result<CurvatureSample> {
    check_curvature_range(&r.spec, j)?;
    let value = curvature_with(|j, p| r.links_unchecked(j, p), j, p);
    Ok(CurvatureSample { j, p, value })
}

/// Curvature at every site of slice `j`, evaluated in parallel.
pub fn curvature_slice(r: &GaugeField, j: usize) -> Result<Vec<CurvatureSample>> {
    check_curvature_range(&r.spec, j)?;
    Ok(r.spec
        .sites()
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|p| CurvatureSample {
            j,
            p,
            value: curvature_with(|j, p| r.links_unchecked(j, p), j, p),
        })
        .collect())
}

/// `G_{j−1,p+1}`, the matrix conjugating `ℱ_{j,p}` under a gauge change.
pub fn curvature_gauge_conjugator(g: &GaugeTransformation, j: usize, p: i64) -> Result<ComplexMatrix> {
    if j == 0 {
        return Err(Error::OutOfRange("conjugator needs j >= 1".into()));
    }
    Ok(g.at(j - 1, p + 1)?.clone())
}

/// `F₁₀ = ∂₁B₀ − ∂₀B₁ − i[B₁, B₀]` with `B_μ = b_μ·τ`, derivatives by central
/// differences of step `h`.
pub fn continuous_curvature(b0: &LieField, b1: &LieField, gens: &GeneratorSet, t: f64, x: f64, h: f64) -> Result<ComplexMatrix> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::InvalidArgument(format!("difference step must be positive, got {h}")));
    }
    let d1b0: Vec<f64> = b0
        .eval(t, x + h)
        .iter()
        .zip(b0.eval(t, x - h))
        .map(|(a, b)| (a - b) / (2.0 * h))
        .collect();
    let d0b1: Vec<f64> = b1
        .eval(t + h, x)
        .iter()
        .zip(b1.eval(t - h, x))
        .map(|(a, b)| (a - b) / (2.0 * h))
        .collect();
    field_strength_from_derivatives(&b0.eval(t, x), &b1.eval(t, x), &d1b0, &d0b1, gens)
}

/// `F₁₀` from pointwise values and caller-supplied derivatives `∂₁b₀`, `∂₀b₁`.
pub fn field_strength_from_derivatives(
    b0: &[f64],
    b1: &[f64],
    d1b0: &[f64],
    d0b1: &[f64],
    gens: &GeneratorSet,
) -> Result<ComplexMatrix> {
    let all = b0.iter().chain(b1).chain(d1b0).chain(d0b1);
    if all.clone().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("field-strength input".into()));
    }
    let big_b0 = gens.combine(b0)?;
    let big_b1 = gens.combine(b1)?;
    let comm = &big_b1 * &big_b0 - &big_b0 * &big_b1;
    Ok(gens.combine(d1b0)? - gens.combine(d0b1)? - comm * I)
}

/// `‖ℱ − 1 − 4iε²F₁₀‖_max`, the remainder of the small-ε expansion.
pub fn curvature_remainder(sample: &ComplexMatrix, f10: &ComplexMatrix, epsilon: f64) -> f64 {
    let n = sample.nrows();
    let lead = ComplexMatrix::identity(n, n) + f10 * (I * 4.0 * epsilon * epsilon);
    max_abs(&(sample - lead))
}

/// `(ℱ − 1) / (4iε²)`, the field strength read off a lattice curvature sample.
pub fn extract_field_strength(sample: &ComplexMatrix, epsilon: f64) -> ComplexMatrix {
    let n = sample.nrows();
    (sample - ComplexMatrix::identity(n, n)) / (I * 4.0 * epsilon * epsilon)
}

/// Real U(1) phases `Y₀ = (Y_Q + Y_P)/2`, `Y₁ = (Y_Q − Y_P)/2` on the lattice.
#[derive(Debug, Clone)]
pub struct AbelianPotential {
    spec: LatticeSpec,
    y0: Vec<f64>,
    y1: Vec<f64>,
}

impl AbelianPotential {
    pub fn new(spec: LatticeSpec, y0: Vec<f64>, y1: Vec<f64>) -> Result<Self> {
        let n = (spec.j_max() + 1) * spec.n_sites();
        if y0.len() != n || y1.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: y0.len().min(y1.len()),
            });
        }
        if y0.iter().chain(&y1).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("Abelian potential".into()));
        }
        Ok(Self { spec, y0, y1 })
    }

    /// Builds `(Y₀, Y₁)` from the link phases `(Y_P, Y_Q)`.
    pub fn from_link_phases(spec: LatticeSpec, mut phases: impl FnMut(usize, i64) -> (f64, f64)) -> Result<Self> {
        let mut y0 = Vec::new();
        let mut y1 = Vec::new();
        for j in 0..=spec.j_max() {
            for p in spec.sites() {
                let (yp, yq) = phases(j, p);
                y0.push((yq + yp) / 2.0);
                y1.push((yq - yp) / 2.0);
            }
        }
        Self::new(spec, y0, y1)
    }

    pub fn spec(&self) -> &LatticeSpec {
        &self.spec
    }

    fn y0(&self, j: usize, p: i64) -> f64 {
        self.y0[j * self.spec.n_sites() + self.spec.site_index(p)]
    }

    fn y1(&self, j: usize, p: i64) -> f64 {
        self.y1[j * self.spec.n_sites() + self.spec.site_index(p)]
    }

    /// `f₁₀ = d₁Y₀ − d₀Y₁` with `d₀ = L₀ − Σ₁`, `d₁ = Δ₁`.
    fn f10(&self, j: usize, p: i64) -> f64 {
        let delta1_y0 = (self.y0(j, p + 1) - self.y0(j, p - 1)) / 2.0;
        let l0_y1 = self.y1(j + 1, p);
        let sigma1_y1 = (self.y1(j, p + 1) + self.y1(j, p - 1)) / 2.0;
        delta1_y0 - (l0_y1 - sigma1_y1)
    }
}

/// Discrete Abelian curvature: returns `f₁₀` at `(j, p)` and the phase
/// `exp[2i(𝓘f₁₀)_{j,p}]` with `𝓘 = 1 + L₀⁻¹L₁⁻¹`.
pub fn abelian_discrete_curvature(y: &AbelianPotential, j: usize, p: i64) -> Result<(f64, Complex64)> {
    check_curvature_range(&y.spec, j)?;
    let f = y.f10(j, p);
    let smoothed = f + y.f10(j - 1, p - 1);
    Ok((f, Complex64::from_polar(1.0, 2.0 * smoothed)))
}

/// Largest `|ℱ_{j,p} − exp[2i(𝓘f₁₀)_{j,p}]|` over all curvature sites of a
/// scalar field with random link phases in `[−π, π)`, seeded by `seed`.
pub fn abelian_cross_check(spec: LatticeSpec, seed: u64) -> Result<f64> {
    let phase = |j: usize, p: i64| {
        let mut rng = site_rng(seed, j, p, 3);
        (
            rng.random_range(-std::f64::consts::PI..std::f64::consts::PI),
            rng.random_range(-std::f64::consts::PI..std::f64::consts::PI),
        )
    };
    let mut ps = Vec::new();
    let mut qs = Vec::new();
    for j in 0..=spec.j_max() {
        for p in spec.sites() {
            let (yp, yq) = phase(j, p);
            ps.push(ComplexMatrix::from_element(1, 1, Complex64::from_polar(1.0, yp)));
            qs.push(ComplexMatrix::from_element(1, 1, Complex64::from_polar(1.0, yq)));
        }
    }
    let r = GaugeField::from_links(spec, 1, ps, qs)?;
    let y = AbelianPotential::from_link_phases(spec, phase)?;
    let mut worst: f64 = 0.0;
    for j in 1..spec.j_max() {
        for p in spec.sites() {
            let f = discrete_curvature(&r, j, p)?.value[(0, 0)];
            let (_, ph) = abelian_discrete_curvature(&y, j, p)?;
            worst = worst.max((f - ph).norm());
        }
    }
    Ok(worst)
}

/// Outcome of comparing `ℱ(R)` with `ℱ(δ_R)·ℱ(R̄)`.
#[derive(Debug, Clone, Copy)]
pub struct FactorizationCheck {
    pub residual: f64,
    /// Some link on the stencil had `det = −1`.
    pub branch_cut_hit: bool,
}

/// Splits every link on the curvature stencil into `δ·M̄` and checks
/// `ℱ(R) = ℱ(δ_R) ℱ(R̄)`.
pub fn curvature_factorization_check(r: &GaugeField, j: usize, p: i64) -> Result<FactorizationCheck> {
    check_curvature_range(&r.spec, j)?;
    let full = curvature_with(|j, p| r.links_unchecked(j, p), j, p);

    let mut stencil = Vec::new();
    for (dj, dp) in [(-1i64, 0i64), (0, -1), (-1, -2), (1, 0), (0, 1)] {
        stencil.push(((j as i64 + dj) as usize, p + dp));
    }
    let mut split = std::collections::HashMap::new();
    let mut branch_cut_hit = false;
    for &(jj, pp) in &stencil {
        let (pm, qm) = r.links_unchecked(jj, pp);
        let fp = factorize(&pm)?;
        let fq = factorize(&qm)?;
        branch_cut_hit |= fp.on_branch_cut || fq.on_branch_cut;
        split.insert((jj, r.spec.site_index(pp)), (fp, fq));
    }
    let get = |jj: usize, pp: i64| &split[&(jj, r.spec.site_index(pp))];
    let abelian = curvature_with(
        |jj, pp| {
            let (fp, fq) = get(jj, pp);
            (
                ComplexMatrix::from_element(1, 1, fp.delta),
                ComplexMatrix::from_element(1, 1, fq.delta),
            )
        },
        j,
        p,
    )[(0, 0)];
    let special = curvature_with(
        |jj, pp| {
            let (fp, fq) = get(jj, pp);
            (fp.special.clone(), fq.special.clone())
        },
        j,
        p,
    );
    if branch_cut_hit {
        log::warn!("factorization at (j = {j}, p = {p}) touches a det = -1 link");
    }
    Ok(FactorizationCheck {
        residual: max_abs(&(full - special * abelian)),
        branch_cut_hit,
    })
}
