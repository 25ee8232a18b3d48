//! U(N) / SU(N) matrix algebra: generator bases, the exponential map and the
//! U(1) x SU(N) factorization.

use std::ops::Deref;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type ComplexMatrix = DMatrix<Complex64>;

/// Unitarity tolerance used when matrices are built internally.
pub const CONSTRUCTION_TOL: f64 = 1e-12;
/// Unitarity tolerance applied to matrices handed in from outside.
pub const INPUT_TOL: f64 = 1e-10;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// A basis of Hermitian generators of u(N).
///
/// Index 0 is the identity (the U(1) direction); indices `1..N²` are the
/// generalized Gell-Mann matrices scaled by 1/2, so for `N = 2` the traceless
/// part is exactly `σ₁/2, σ₂/2, σ₃/2`.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorSet {
    dim: usize,
    gens: Vec<ComplexMatrix>,
}

impl GeneratorSet {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.gens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gens.is_empty()
    }

    pub fn get(&self, k: usize) -> &ComplexMatrix {
        &self.gens[k]
    }

    pub fn iter(&self) -> impl Iterator<Item = &ComplexMatrix> {
        self.gens.iter()
    }

    /// Traceless generators of su(N).
    pub fn special(&self) -> &[ComplexMatrix] {
        &self.gens[1..]
    }

    /// `Σ_k X^k τ_k`.
    pub fn combine(&self, coords: &[f64]) -> Result<ComplexMatrix> {
        if coords.len() != self.gens.len() {
            return Err(Error::DimensionMismatch {
                expected: self.gens.len(),
                got: coords.len(),
            });
        }
        let mut h = ComplexMatrix::zeros(self.dim, self.dim);
        self.combine_into(coords, &mut h);
        Ok(h)
    }

    pub(crate) fn combine_into(&self, coords: &[f64], out: &mut ComplexMatrix) {
        out.fill(Complex64::new(0.0, 0.0));
        for (c, g) in coords.iter().zip(&self.gens) {
            if *c != 0.0 {
                *out += g * Complex64::new(*c, 0.0);
            }
        }
    }

    /// Hilbert-Schmidt Gram matrix `Tr(τ_i τ_j)`.
    pub fn gram(&self) -> DMatrix<f64> {
        let n = self.gens.len();
        DMatrix::from_fn(n, n, |i, j| (&self.gens[i] * &self.gens[j]).trace().re)
    }
}

/// Coordinates `X^k` of a Lie-algebra element in a [`GeneratorSet`].
#[derive(Debug, Clone, PartialEq)]
pub struct LieCoordinates(Vec<f64>);

impl LieCoordinates {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if let Some(bad) = coords.iter().find(|c| !c.is_finite()) {
            return Err(Error::NonFinite(format!("Lie coordinate {bad}")));
        }
        Ok(Self(coords))
    }

    pub fn zeros(len: usize) -> Self {
        Self(vec![0.0; len])
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self(self.0.iter().map(|c| c * s).collect())
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for LieCoordinates {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl From<LieCoordinates> for Vec<f64> {
    fn from(c: LieCoordinates) -> Self {
        c.0
    }
}

/// Builds the basis `{1} ∪ {generalized Gell-Mann / 2}` of u(N).
///
/// Off-diagonal generators come in (symmetric, antisymmetric) pairs for each
/// `j < k`, followed by the `N - 1` diagonal ones.
pub fn generators_u(n: usize) -> Result<GeneratorSet> {
    if n == 0 {
        return Err(Error::InvalidDimension("U(N) needs N >= 1".into()));
    }
    let zero = || ComplexMatrix::zeros(n, n);
    let half = Complex64::new(0.5, 0.0);
    let mut gens = Vec::with_capacity(n * n);
    gens.push(ComplexMatrix::identity(n, n));
    for j in 0..n {
        for k in (j + 1)..n {
            let mut s = zero();
            s[(j, k)] = half;
            s[(k, j)] = half;
            gens.push(s);
            let mut a = zero();
            a[(j, k)] = -I * 0.5;
            a[(k, j)] = I * 0.5;
            gens.push(a);
        }
    }
    for l in 1..n {
        let lf = l as f64;
        let norm = (2.0 / (lf * (lf + 1.0))).sqrt() * 0.5;
        let mut d = zero();
        for i in 0..l {
            d[(i, i)] = Complex64::new(norm, 0.0);
        }
        d[(l, l)] = Complex64::new(-lf * norm, 0.0);
        gens.push(d);
    }
    Ok(GeneratorSet { dim: n, gens })
}

/// `exp(i H)` for Hermitian `H`, through its eigendecomposition.
pub fn exp_i_hermitian(h: &ComplexMatrix) -> ComplexMatrix {
    let n = h.nrows();
    if n == 1 {
        return ComplexMatrix::from_element(1, 1, Complex64::from_polar(1.0, h[(0, 0)].re));
    }
    // Symmetrize so rounding in the caller cannot break Hermiticity.
    let herm = (h + h.adjoint()) * Complex64::new(0.5, 0.0);
    let eig = SymmetricEigen::new(herm);
    let v = &eig.eigenvectors;
    let mut scaled = v.clone();
    for (c, lambda) in eig.eigenvalues.iter().enumerate() {
        let phase = Complex64::from_polar(1.0, *lambda);
        for r in 0..n {
            scaled[(r, c)] *= phase;
        }
    }
    scaled * v.adjoint()
}

/// `M = exp(i Σ_k X^k τ_k)`.
pub fn exp_map(x: &LieCoordinates, gens: &GeneratorSet) -> Result<ComplexMatrix> {
    if let Some(bad) = x.iter().find(|c| !c.is_finite()) {
        return Err(Error::NonFinite(format!("Lie coordinate {bad}")));
    }
    Ok(exp_i_hermitian(&gens.combine(x)?))
}

/// `‖M†M − 1‖_max`.
pub fn unitarity_residual(m: &ComplexMatrix) -> f64 {
    if !m.is_square() {
        return f64::INFINITY;
    }
    let n = m.nrows();
    max_abs(&(m.adjoint() * m - ComplexMatrix::identity(n, n)))
}

pub fn is_unitary(m: &ComplexMatrix, tol: f64) -> bool {
    unitarity_residual(m) <= tol
}

/// Largest entry modulus; NaN entries propagate as infinity.
pub fn max_abs(m: &ComplexMatrix) -> f64 {
    m.iter().fold(0.0_f64, |acc, z| {
        let a = z.norm();
        if a.is_nan() {
            f64::INFINITY
        } else {
            acc.max(a)
        }
    })
}

/// Result of splitting `M = δ · M̄` with `M̄ ∈ SU(N)`.
#[derive(Debug, Clone)]
pub struct Factorization {
    /// `δ = exp(iα/N)`, the k = 0 root of `δ^N = det M`.
    pub delta: Complex64,
    /// `M̄ = M / δ`, unit determinant.
    pub special: ComplexMatrix,
    /// Principal argument of `det M` in `(−π, π]`.
    pub alpha: f64,
    /// Set when `det M` sits on the cut at −1, where the k = 0 branch jumps.
    pub on_branch_cut: bool,
}

/// Distance in `α` from the −1 branch point below which a factorization is
/// flagged as discontinuous.
pub const BRANCH_CUT_TOL: f64 = 1e-8;

pub fn factorize(m: &ComplexMatrix) -> Result<Factorization> {
    let residual = unitarity_residual(m);
    if residual > INPUT_TOL {
        return Err(Error::NotUnitary { residual });
    }
    let n = m.nrows();
    let det = m.clone().determinant();
    let mut alpha = det.arg();
    if alpha <= -std::f64::consts::PI {
        alpha = std::f64::consts::PI;
    }
    let on_branch_cut = std::f64::consts::PI - alpha.abs() < BRANCH_CUT_TOL;
    if on_branch_cut {
        alpha = std::f64::consts::PI;
    }
    let delta = Complex64::from_polar(1.0, alpha / n as f64);
    let special = m * delta.conj();
    Ok(Factorization {
        delta,
        special,
        alpha,
        on_branch_cut,
    })
}

/// Pauli matrices `σ₁, σ₂, σ₃`.
pub fn pauli() -> [ComplexMatrix; 3] {
    let o = Complex64::new(0.0, 0.0);
    let l = Complex64::new(1.0, 0.0);
    [
        ComplexMatrix::from_row_slice(2, 2, &[o, l, l, o]),
        ComplexMatrix::from_row_slice(2, 2, &[o, -I, I, o]),
        ComplexMatrix::from_row_slice(2, 2, &[l, o, o, -l]),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn max_diff(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
        max_abs(&(a - b))
    }

    #[test]
    fn zero_dimension_rejected() {
        assert!(matches!(generators_u(0), Err(Error::InvalidDimension(_))));
    }

    #[test]
    fn u1_has_single_identity_generator() {
        let g = generators_u(1).unwrap();
        assert_eq!(g.len(), 1);
        assert_eq!(g.get(0)[(0, 0)], Complex64::new(1.0, 0.0));
    }

    #[test]
    fn u2_basis_is_identity_plus_half_paulis() {
        let g = generators_u(2).unwrap();
        assert_eq!(g.len(), 4);
        assert!(max_diff(g.get(0), &ComplexMatrix::identity(2, 2)) == 0.0);
        for (k, s) in pauli().iter().enumerate() {
            assert!(max_diff(g.get(k + 1), &(s * Complex64::new(0.5, 0.0))) == 0.0, "k = {k}");
        }
    }

    #[test]
    fn u3_generators_hermitian_and_orthogonal() {
        let g = generators_u(3).unwrap();
        assert_eq!(g.len(), 9);
        for t in g.iter() {
            assert!(max_diff(t, &t.adjoint()) <= 1e-13);
        }
        for t in g.special() {
            assert!(t.trace().norm() <= 1e-14);
        }
        let gram = g.gram();
        for i in 1..9 {
            for j in 1..9 {
                let expect = if i == j { 0.5 } else { 0.0 };
                assert!((gram[(i, j)] - expect).abs() <= 1e-14, "({i},{j}) = {}", gram[(i, j)]);
            }
        }
        assert!(gram.determinant().abs() > 1e-6);
    }

    #[test]
    fn exp_of_zero_is_identity() {
        for n in 1..4 {
            let g = generators_u(n).unwrap();
            let m = exp_map(&LieCoordinates::zeros(n * n), &g).unwrap();
            assert!(max_diff(&m, &ComplexMatrix::identity(n, n)) <= 1e-15);
        }
    }

    #[test]
    fn u1_quarter_turn_is_i() {
        let g = generators_u(1).unwrap();
        let m = exp_map(&LieCoordinates::new(vec![PI / 2.0]).unwrap(), &g).unwrap();
        assert!((m[(0, 0)] - I).norm() <= 1e-15);
    }

    #[test]
    fn half_turn_about_sigma1() {
        // exp(iπσ₁/2) = iσ₁
        let g = generators_u(2).unwrap();
        let m = exp_map(&LieCoordinates::new(vec![0.0, PI, 0.0, 0.0]).unwrap(), &g).unwrap();
        let expect = &pauli()[0] * I;
        assert!(max_diff(&m, &expect) <= 1e-14);
    }

    #[test]
    fn non_finite_coordinates_rejected() {
        assert!(LieCoordinates::new(vec![f64::NAN]).is_err());
        let g = generators_u(2).unwrap();
        assert!(g.combine(&[0.0; 3]).is_err());
    }

    #[test]
    fn unitarity_check_detects_perturbation() {
        let mut m = ComplexMatrix::identity(3, 3);
        assert!(is_unitary(&m, 1e-12));
        m[(0, 0)] += Complex64::new(1e-6, 0.0);
        assert!(!is_unitary(&m, 1e-12));
    }

    #[test]
    fn factorize_identity() {
        let f = factorize(&ComplexMatrix::identity(3, 3)).unwrap();
        assert!((f.delta - Complex64::new(1.0, 0.0)).norm() <= 1e-15);
        assert!(max_diff(&f.special, &ComplexMatrix::identity(3, 3)) <= 1e-15);
        assert!(!f.on_branch_cut);
    }

    #[test]
    fn factorize_global_phase() {
        let beta = 0.1;
        let m = ComplexMatrix::identity(2, 2) * Complex64::from_polar(1.0, beta);
        let f = factorize(&m).unwrap();
        assert!((f.delta - Complex64::from_polar(1.0, beta)).norm() <= 1e-14);
        assert!(max_diff(&f.special, &ComplexMatrix::identity(2, 2)) <= 1e-14);
    }

    #[test]
    fn factorize_special_matrix_is_fixed() {
        let m = &pauli()[0] * I;
        assert!((m.clone().determinant() - Complex64::new(1.0, 0.0)).norm() <= 1e-15);
        let f = factorize(&m).unwrap();
        assert!((f.delta - Complex64::new(1.0, 0.0)).norm() <= 1e-15);
        assert!(max_diff(&f.special, &m) <= 1e-15);
    }

    #[test]
    fn factorize_flags_minus_one_determinant() {
        // σ₃ has det −1
        let f = factorize(&pauli()[2]).unwrap();
        assert!(f.on_branch_cut);
        assert!((f.alpha - PI).abs() <= 1e-15);
        assert!((f.delta - I).norm() <= 1e-15);
        assert!((f.special.clone().determinant() - Complex64::new(1.0, 0.0)).norm() <= 1e-14);
    }

    #[test]
    fn factorize_rejects_non_unitary() {
        let m = ComplexMatrix::identity(2, 2) * Complex64::new(2.0, 0.0);
        assert!(matches!(factorize(&m), Err(Error::NotUnitary { .. })));
    }
}
