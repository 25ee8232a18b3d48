//! Metrics on lattice fields: L2 bracket, relative differences, mean position
//! and log-log slope fits.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::LatticeSpec;

/// Pairwise (cascade) summation with a fixed split, so results do not depend
/// on thread count.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    const LEAF: usize = 32;
    if values.len() <= LEAF {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

/// `⟨f⟩ = Σ_p f(x_p) ε`.
pub fn l2_bracket(f: &[f64], spec: &LatticeSpec) -> Result<f64> {
    if f.len() != spec.n_sites() {
        return Err(Error::DimensionMismatch {
            expected: spec.n_sites(),
            got: f.len(),
        });
    }
    Ok(pairwise_sum(f) * spec.epsilon())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Block {
    Minus,
    Plus,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Part {
    Complex,
    Re,
    Im,
}

/// Which scalar is extracted from a site-major `(ψ⁻, ψ⁺)` amplitude array.
/// `color: None` stacks all color components of the block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Projection {
    pub block: Block,
    pub part: Part,
    pub color: Option<usize>,
}

impl Projection {
    pub const RE_MINUS: Projection = Projection {
        block: Block::Minus,
        part: Part::Re,
        color: None,
    };
    pub const IM_MINUS: Projection = Projection {
        block: Block::Minus,
        part: Part::Im,
        color: None,
    };

    pub fn tag(&self) -> String {
        let part = match self.part {
            Part::Complex => "",
            Part::Re => "re_",
            Part::Im => "im_",
        };
        let block = match self.block {
            Block::Minus => "minus",
            Block::Plus => "plus",
        };
        match self.color {
            Some(c) => format!("{part}{block}_{c}"),
            None => format!("{part}{block}"),
        }
    }

    /// `|f|²` of the projected scalar at every site, summed over the selected
    /// color components.
    fn site_weights(&self, amps: &[Complex64], dim: usize) -> Result<Vec<f64>> {
        if let Some(c) = self.color {
            if c >= dim {
                return Err(Error::OutOfRange(format!("color index {c} for N = {dim}")));
            }
        }
        let offset = match self.block {
            Block::Minus => 0,
            Block::Plus => dim,
        };
        let colors = match self.color {
            Some(c) => c..c + 1,
            None => 0..dim,
        };
        Ok(amps
            .chunks_exact(2 * dim)
            .map(|site| {
                colors
                    .clone()
                    .map(|c| {
                        let z = site[offset + c];
                        match self.part {
                            Part::Complex => z.norm_sqr(),
                            Part::Re => z.re * z.re,
                            Part::Im => z.im * z.im,
                        }
                    })
                    .sum()
            })
            .collect())
    }
}

fn check_layout(amps: &[Complex64], dim: usize, spec: &LatticeSpec) -> Result<()> {
    let expected = spec.n_sites() * 2 * dim;
    if dim == 0 || amps.len() != expected {
        return Err(Error::DimensionMismatch {
            expected,
            got: amps.len(),
        });
    }
    Ok(())
}

/// `δ = √(⟨|a−b|²⟩ / ⟨|a|²⟩)` on the projected scalar; `a` is the reference.
pub fn relative_difference(a: &[Complex64], b: &[Complex64], dim: usize, spec: &LatticeSpec, projection: Projection) -> Result<f64> {
    check_layout(a, dim, spec)?;
    check_layout(b, dim, spec)?;
    let diff: Vec<Complex64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let num = l2_bracket(&projection.site_weights(&diff, dim)?, spec)?;
    let den = l2_bracket(&projection.site_weights(a, dim)?, spec)?;
    if den == 0.0 {
        return Err(Error::InvalidArgument("reference field has zero norm".into()));
    }
    let d = (num / den).sqrt();
    if !d.is_finite() {
        return Err(Error::NonFinite("relative difference".into()));
    }
    Ok(d)
}

/// `x̄ = ⟨x |Ψ|²⟩ / ⟨|Ψ|²⟩`.
pub fn mean_position(amps: &[Complex64], dim: usize, spec: &LatticeSpec) -> Result<f64> {
    check_layout(amps, dim, spec)?;
    let density: Vec<f64> = amps
        .chunks_exact(2 * dim)
        .map(|s| s.iter().map(|z| z.norm_sqr()).sum())
        .collect();
    let weighted: Vec<f64> = density.iter().zip(spec.positions()).map(|(d, x)| d * x).collect();
    let norm = l2_bracket(&density, spec)?;
    if norm == 0.0 {
        return Err(Error::InvalidArgument("zero-norm state has no mean position".into()));
    }
    Ok(l2_bracket(&weighted, spec)? / norm)
}

/// Standard deviation of the position distribution `|ψ|²`.
pub fn position_spread(amps: &[Complex64], dim: usize, spec: &LatticeSpec) -> Result<f64> {
    let mean = mean_position(amps, dim, spec)?;
    let density: Vec<f64> = amps
        .chunks_exact(2 * dim)
        .map(|s| s.iter().map(|z| z.norm_sqr()).sum())
        .collect();
    let second: Vec<f64> = density.iter().zip(spec.positions()).map(|(d, x)| d * (x - mean).powi(2)).collect();
    Ok((l2_bracket(&second, spec)? / l2_bracket(&density, spec)?).sqrt())
}

/// `δ` values against a strictly decreasing sequence of `ε`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceSeries {
    epsilons: Vec<f64>,
    deltas: Vec<f64>,
    component_tag: String,
}

impl ConvergenceSeries {
    pub fn new(epsilons: Vec<f64>, deltas: Vec<f64>, component_tag: impl Into<String>) -> Result<Self> {
        if epsilons.len() != deltas.len() {
            return Err(Error::DimensionMismatch {
                expected: epsilons.len(),
                got: deltas.len(),
            });
        }
        if epsilons.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::InvalidArgument("epsilons must be strictly decreasing".into()));
        }
        if epsilons.iter().chain(&deltas).any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::InvalidArgument("epsilons and deltas must be positive".into()));
        }
        Ok(Self {
            epsilons,
            deltas,
            component_tag: component_tag.into(),
        })
    }

    pub fn epsilons(&self) -> &[f64] {
        &self.epsilons
    }

    pub fn deltas(&self) -> &[f64] {
        &self.deltas
    }

    pub fn component_tag(&self) -> &str {
        &self.component_tag
    }

    pub fn len(&self) -> usize {
        self.epsilons.len()
    }

    pub fn is_empty(&self) -> bool {
        self.epsilons.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogLogFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
}

/// Least-squares fit of `log δ = slope · log ε + c`.
pub fn fit_loglog_slope(series: &ConvergenceSeries) -> Result<LogLogFit> {
    fit_loglog(series.epsilons(), series.deltas())
}

pub fn fit_loglog(xs: &[f64], ys: &[f64]) -> Result<LogLogFit> {
    if xs.len() != ys.len() {
        return Err(Error::DimensionMismatch {
            expected: xs.len(),
            got: ys.len(),
        });
    }
    if xs.len() < 3 {
        return Err(Error::InvalidArgument(format!("need at least 3 points, got {}", xs.len())));
    }
    if xs.iter().chain(ys).any(|v| !(*v > 0.0 && v.is_finite())) {
        return Err(Error::InvalidArgument("log-log fit needs positive values".into()));
    }
    let lx: Vec<f64> = xs.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ly.iter().map(|y| (y - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidArgument("abscissae are all equal".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Ok(LogLogFit { slope, intercept, r2 })
}

/// Observed orders `log₂(e_k / e_{k+1})` of a halving sequence.
pub fn halving_orders(errors: &[f64]) -> Vec<f64> {
    errors.windows(2).map(|w| (w[0] / w[1]).log2()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn spec() -> LatticeSpec {
        LatticeSpec::new(0.5, 2, 4).unwrap()
    }

    #[test]
    fn bracket_examples() {
        let s = spec();
        assert_eq!(l2_bracket(&[1.0; 5], &s).unwrap(), 2.5);
        assert_eq!(l2_bracket(&[0.0; 5], &s).unwrap(), 0.0);
        assert!(l2_bracket(&[1.0; 4], &s).is_err());
    }

    #[test]
    fn pairwise_sum_matches_naive() {
        let v: Vec<f64> = (0..1000).map(|i| (i as f64).sin()).collect();
        let naive: f64 = v.iter().sum();
        assert!((pairwise_sum(&v) - naive).abs() < 1e-12);
        assert_eq!(pairwise_sum(&[]), 0.0);
    }

    fn field(seed: f64) -> Vec<Complex64> {
        (0..20).map(|i| c((i as f64 * seed).sin(), (i as f64 * seed + 1.0).cos())).collect()
    }

    #[test]
    fn relative_difference_examples() {
        let s = spec();
        let a = field(0.7);
        let zero = vec![c(0.0, 0.0); 20];
        for proj in [Projection::RE_MINUS, Projection::IM_MINUS] {
            assert_eq!(relative_difference(&a, &a, 2, &s, proj).unwrap(), 0.0);
            assert!((relative_difference(&a, &zero, 2, &s, proj).unwrap() - 1.0).abs() < 1e-15);
            let b: Vec<Complex64> = a.iter().map(|z| z * 1.3).collect();
            assert!((relative_difference(&a, &b, 2, &s, proj).unwrap() - 0.3).abs() < 1e-14);
        }
        assert!(relative_difference(&zero, &a, 2, &s, Projection::RE_MINUS).is_err());
        let single = Projection {
            color: Some(1),
            ..Projection::RE_MINUS
        };
        assert!(relative_difference(&a, &a, 2, &s, single).is_ok());
        let bad = Projection {
            color: Some(2),
            ..Projection::RE_MINUS
        };
        assert!(relative_difference(&a, &a, 2, &s, bad).is_err());
        assert_eq!(Projection::IM_MINUS.tag(), "im_minus");
    }

    #[test]
    fn mean_position_examples() {
        let s = LatticeSpec::new(0.5, 4, 4).unwrap();
        let mut amps = vec![c(0.0, 0.0); s.n_sites() * 2];
        for p in -1..=1i64 {
            amps[s.site_index(p) * 2] = c(1.0, 0.0);
        }
        assert!(mean_position(&amps, 1, &s).unwrap().abs() < 1e-15);
        amps.rotate_right(2 * 2);
        assert!((mean_position(&amps, 1, &s).unwrap() - 1.0).abs() < 1e-15);
        assert!(mean_position(&[c(0.0, 0.0); 18], 1, &s).is_err());
        // three equal sites spaced 0.5 apart
        assert!((position_spread(&amps, 1, &s).unwrap() - (1.0f64 / 6.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn slope_fits() {
        let eps = vec![0.4, 0.2, 0.1, 0.05];
        let lin: Vec<f64> = eps.iter().map(|e| 3.0 * e).collect();
        let quad: Vec<f64> = eps.iter().map(|e| 3.0 * e * e).collect();
        let f = fit_loglog_slope(&ConvergenceSeries::new(eps.clone(), lin, "x").unwrap()).unwrap();
        assert!((f.slope - 1.0).abs() < 1e-12 && (f.r2 - 1.0).abs() < 1e-12);
        let f = fit_loglog(&eps, &quad).unwrap();
        assert!((f.slope - 2.0).abs() < 1e-12);
        assert!(fit_loglog(&eps[..2], &quad[..2]).is_err());
        assert!(ConvergenceSeries::new(vec![0.1, 0.2, 0.3], vec![1.0; 3], "x").is_err());
        assert!(ConvergenceSeries::new(vec![0.3, 0.2, 0.1], vec![1.0, 0.0, 1.0], "x").is_err());
        let o = halving_orders(&[8.0, 1.0, 0.125]);
        assert_eq!(o, vec![3.0, 3.0]);
    }

    proptest! {
        #[test]
        fn delta_scale_invariant(lambda in 0.1f64..10.0, seed in 0.1f64..3.0, eta in -2.0f64..2.0) {
            let s = spec();
            let a = field(seed);
            let b: Vec<Complex64> = a.iter().enumerate().map(|(i, z)| z * (1.0 + eta * (i as f64).cos())).collect();
            let d1 = relative_difference(&a, &b, 2, &s, Projection::RE_MINUS).unwrap();
            let a2: Vec<Complex64> = a.iter().map(|z| z * lambda).collect();
            let b2: Vec<Complex64> = b.iter().map(|z| z * lambda).collect();
            let d2 = relative_difference(&a2, &b2, 2, &s, Projection::RE_MINUS).unwrap();
            prop_assert!((d1 - d2).abs() <= 1e-12 * (1.0 + d1));
            let b3: Vec<Complex64> = a.iter().map(|z| z * lambda).collect();
            let d3 = relative_difference(&a, &b3, 2, &s, Projection::IM_MINUS).unwrap();
            prop_assert!((d3 - (1.0 - lambda).abs()).abs() <= 1e-12 * (1.0 + d3));
        }

        #[test]
        fn bracket_linear_monotone(f in proptest::collection::vec(0.0f64..5.0, 5), g in proptest::collection::vec(0.0f64..5.0, 5), a in 0.0f64..3.0) {
            let s = spec();
            let h: Vec<f64> = f.iter().zip(&g).map(|(x, y)| a * x + y).collect();
            let lhs = l2_bracket(&h, &s).unwrap();
            let rhs = a * l2_bracket(&f, &s).unwrap() + l2_bracket(&g, &s).unwrap();
            prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + lhs));
            prop_assert!(lhs >= l2_bracket(&g, &s).unwrap() - 1e-12);
        }
    }
}
