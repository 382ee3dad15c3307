//! Dense complex operator arithmetic on the 2^N atomic Hilbert space.
//!
//! Basis convention: each atom contributes the ordered pair (|e⟩, |g⟩) —
//! excited first — and atom 1 is the leftmost tensor factor. For two atoms
//! the basis index order is therefore |ee⟩, |eg⟩, |ge⟩, |gg⟩, which puts the
//! single-excitation amplitudes α (first atom excited) and β (second atom
//! excited) at diagonal positions 1 and 2.
//!
//! Matrices are dense and row-major; the network sizes of interest stay at
//! desk scale (N ≲ 10), so no sparse structure is attempted.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Add, Mul, Sub};

use num_complex::Complex64;
// Needed for float math in the no_std build; redundant when a build in the
// same graph links std (whose inherent methods shadow the trait).
#[allow(unused_imports)]
use num_traits::Float;

/// A square complex matrix on a 2^N-dimensional space.
#[derive(Clone, Debug, PartialEq)]
pub struct Operator {
    dim: usize,
    data: Vec<Complex64>,
}

/// Ladder/Pauli flavor for [`sigma`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SigmaKind {
    /// Lowering operator |g⟩⟨e|.
    Minus,
    /// Raising operator |e⟩⟨g|.
    Plus,
    /// Population difference σ⁺σ⁻ − σ⁻σ⁺.
    Z,
}

impl Operator {
    pub fn zeros(dim: usize) -> Self {
        Self { dim, data: vec![Complex64::new(0.0, 0.0); dim * dim] }
    }

    pub fn identity(dim: usize) -> Self {
        let mut op = Self::zeros(dim);
        for i in 0..dim {
            op[(i, i)] = Complex64::new(1.0, 0.0);
        }
        op
    }

    /// Build from a row-major slice of length `dim²`.
    pub fn from_rows(dim: usize, data: &[Complex64]) -> Self {
        assert_eq!(data.len(), dim * dim, "row-major data must have dim² entries");
        Self { dim, data: data.to_vec() }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    pub fn dagger(&self) -> Operator {
        let mut out = Operator::zeros(self.dim);
        for r in 0..self.dim {
            for c in 0..self.dim {
                out[(c, r)] = self[(r, c)].conj();
            }
        }
        out
    }

    pub fn scale(&self, s: Complex64) -> Operator {
        Operator { dim: self.dim, data: self.data.iter().map(|z| z * s).collect() }
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.dim).map(|i| self[(i, i)]).sum()
    }

    pub fn matmul(&self, rhs: &Operator) -> Operator {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch in matmul");
        let n = self.dim;
        let mut out = Operator::zeros(n);
        for r in 0..n {
            for k in 0..n {
                let a = self.data[r * n + k];
                if a == Complex64::new(0.0, 0.0) {
                    continue;
                }
                let row = &rhs.data[k * n..(k + 1) * n];
                let dst = &mut out.data[r * n..(r + 1) * n];
                for c in 0..n {
                    dst[c] += a * row[c];
                }
            }
        }
        out
    }

    /// Kronecker product, `self` as the left (most significant) factor.
    pub fn kron(&self, rhs: &Operator) -> Operator {
        let (a, b) = (self.dim, rhs.dim);
        let n = a * b;
        let mut out = Operator::zeros(n);
        for ra in 0..a {
            for ca in 0..a {
                let w = self[(ra, ca)];
                if w == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for rb in 0..b {
                    for cb in 0..b {
                        out[(ra * b + rb, ca * b + cb)] = w * rhs[(rb, cb)];
                    }
                }
            }
        }
        out
    }

    pub fn commutator(&self, rhs: &Operator) -> Operator {
        &self.matmul(rhs) - &rhs.matmul(self)
    }

    /// Largest entry magnitude of `self − self†`.
    pub fn hermiticity_residual(&self) -> f64 {
        let mut max = 0.0f64;
        for r in 0..self.dim {
            for c in 0..self.dim {
                let d = (self[(r, c)] - self[(c, r)].conj()).norm();
                if d > max {
                    max = d;
                }
            }
        }
        max
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, z| m.max(z.norm()))
    }

    /// Symmetrized Hermitian part (self + self†)/2.
    pub fn hermitize(&self) -> Operator {
        let mut out = Operator::zeros(self.dim);
        for r in 0..self.dim {
            for c in 0..self.dim {
                out[(r, c)] = 0.5 * (self[(r, c)] + self[(c, r)].conj());
            }
        }
        out
    }

    /// In-place `self += s * other`, the hot-loop primitive.
    pub fn axpy(&mut self, s: Complex64, other: &Operator) {
        assert_eq!(self.dim, other.dim, "dimension mismatch in axpy");
        for (a, b) in self.data.iter_mut().zip(other.data.iter()) {
            *a += s * b;
        }
    }
}

impl core::ops::Index<(usize, usize)> for Operator {
    type Output = Complex64;
    fn index(&self, (r, c): (usize, usize)) -> &Complex64 {
        &self.data[r * self.dim + c]
    }
}

impl core::ops::IndexMut<(usize, usize)> for Operator {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut Complex64 {
        &mut self.data[r * self.dim + c]
    }
}

impl Add for &Operator {
    type Output = Operator;
    fn add(self, rhs: &Operator) -> Operator {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch in add");
        Operator {
            dim: self.dim,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &Operator {
    type Output = Operator;
    fn sub(self, rhs: &Operator) -> Operator {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch in sub");
        Operator {
            dim: self.dim,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

impl Mul for &Operator {
    type Output = Operator;
    fn mul(self, rhs: &Operator) -> Operator {
        self.matmul(rhs)
    }
}

/// Single-atom operator embedded in the N-atom space: identity on every
/// other tensor slot. `j` is 1-based; panics if out of range.
pub fn sigma(j: usize, kind: SigmaKind, n_atoms: usize) -> Operator {
    assert!(j >= 1 && j <= n_atoms, "atom index {j} out of range 1..={n_atoms}");
    let m = match kind {
        // Basis (|e⟩, |g⟩): σ⁻ = |g⟩⟨e| has its 1 at row g, column e.
        SigmaKind::Minus => Operator::from_rows(
            2,
            &[
                Complex64::new(0.0, 0.0),
                Complex64::new(0.0, 0.0),
                Complex64::new(1.0, 0.0),
                Complex64::new(0.0, 0.0),
            ],
        ),
        SigmaKind::Plus => Operator::from_rows(
            2,
            &[
                Complex64::new(0.0, 0.0),
                Complex64::new(1.0, 0.0),
                Complex64::new(0.0, 0.0),
                Complex64::new(0.0, 0.0),
            ],
        ),
        SigmaKind::Z => Operator::from_rows(
            2,
            &[
                Complex64::new(1.0, 0.0),
                Complex64::new(0.0, 0.0),
                Complex64::new(0.0, 0.0),
                Complex64::new(-1.0, 0.0),
            ],
        ),
    };
    let left = Operator::identity(1 << (j - 1));
    let right = Operator::identity(1 << (n_atoms - j));
    left.kron(&m).kron(&right)
}

/// Lindblad dissipator `D[O]ρ = OρO† − (O†Oρ + ρO†O)/2`. Trace-annihilating.
pub fn dissipator(o: &Operator, rho: &Operator) -> Operator {
    assert_eq!(o.dim(), rho.dim(), "dimension mismatch in dissipator");
    let od = o.dagger();
    let odo = od.matmul(o);
    let sandwich = o.matmul(rho).matmul(&od);
    let mut out = sandwich;
    out.axpy(Complex64::new(-0.5, 0.0), &odo.matmul(rho));
    out.axpy(Complex64::new(-0.5, 0.0), &rho.matmul(&odo));
    out
}

/// Measurement-backaction superoperator
/// `H[L]ρ = Lρ + ρL† − Tr[(L+L†)ρ]·ρ`. Trace-annihilating; nonlinear in ρ.
pub fn measurement_superop(lbar: &Operator, rho: &Operator) -> Operator {
    assert_eq!(lbar.dim(), rho.dim(), "dimension mismatch in measurement_superop");
    let ld = lbar.dagger();
    let mut out = lbar.matmul(rho);
    out.axpy(Complex64::new(1.0, 0.0), &rho.matmul(&ld));
    let signal = (lbar + &ld).matmul(rho).trace();
    out.axpy(-signal, rho);
    out
}

/// Homodyne signal `Tr[(L+L†)ρ]` (real part; the trace is real for Hermitian ρ).
pub fn homodyne_signal(lbar: &Operator, rho: &Operator) -> f64 {
    let ld = lbar.dagger();
    (lbar + &ld).matmul(rho).trace().re
}

// Real symmetric embedding [[X, −Y], [Y, X]] of the Hermitian A = X + iY;
// it carries each eigenvalue of A twice.
fn real_embedding(a: &Operator) -> (Vec<f64>, usize) {
    let n = a.dim();
    let m = 2 * n;
    let mut s = vec![0.0f64; m * m];
    for r in 0..n {
        for c in 0..n {
            let z = 0.5 * (a[(r, c)] + a[(c, r)].conj());
            s[r * m + c] = z.re;
            s[(r + n) * m + (c + n)] = z.re;
            s[r * m + (c + n)] = -z.im;
            s[(r + n) * m + c] = z.im;
        }
    }
    (s, m)
}

/// Eigenvalues of a Hermitian matrix, ascending.
///
/// Solved by cyclic Jacobi on the real symmetric embedding. Intended for
/// the small dimensions used here.
pub fn hermitian_eigenvalues(a: &Operator) -> Vec<f64> {
    let (mut s, m) = real_embedding(a);
    jacobi_symmetric(&mut s, m, None);
    let mut eigs = Vec::with_capacity(m);
    for i in 0..m {
        eigs.push(s[i * m + i]);
    }
    eigs.sort_by(|x, y| x.partial_cmp(y).unwrap());
    // Doubled spectrum: take every second value.
    eigs.into_iter().step_by(2).collect()
}

/// Smallest eigenvalue of a Hermitian matrix.
pub fn min_eigenvalue(a: &Operator) -> f64 {
    hermitian_eigenvalues(a)[0]
}

/// Cheap positive-semidefiniteness certificate by LDLᴴ factorization with
/// pivot tolerance `tol` (relative to the largest diagonal entry). `true`
/// guarantees all eigenvalues ≥ −O(tol·scale); `false` may occasionally be
/// conservative and callers should fall back to an exact solve.
pub fn psd_within(a: &Operator, tol: f64) -> bool {
    let n = a.dim();
    let scale = (0..n).map(|i| a[(i, i)].re.abs()).fold(1.0f64, f64::max);
    let pivot_floor = tol * scale;
    let mut l = vec![Complex64::new(0.0, 0.0); n * n];
    let mut d = vec![0.0f64; n];
    for k in 0..n {
        let mut dk = a[(k, k)].re;
        for j in 0..k {
            dk -= l[k * n + j].norm_sqr() * d[j];
        }
        if dk < -pivot_floor {
            return false;
        }
        if dk <= pivot_floor {
            // Rank-deficient direction: remaining column entries must vanish
            // for a PSD matrix; otherwise it is indefinite (or nearly so).
            let col_tol = (pivot_floor * scale).sqrt().max(pivot_floor);
            for i in (k + 1)..n {
                let mut aik = a[(i, k)];
                for j in 0..k {
                    aik -= l[i * n + j] * l[k * n + j].conj() * d[j];
                }
                if aik.norm() > 10.0 * col_tol {
                    return false;
                }
                l[i * n + k] = Complex64::new(0.0, 0.0);
            }
            d[k] = 0.0;
        } else {
            d[k] = dk;
            for i in (k + 1)..n {
                let mut aik = a[(i, k)];
                for j in 0..k {
                    aik -= l[i * n + j] * l[k * n + j].conj() * d[j];
                }
                l[i * n + k] = aik / dk;
            }
        }
    }
    true
}

/// Project a Hermitian matrix onto the positive-semidefinite cone by
/// clipping negative eigenvalues to zero. Returns the projected matrix and
/// the smallest eigenvalue found before clipping.
pub fn clip_negative_eigenvalues(a: &Operator) -> (Operator, f64) {
    let n = a.dim();
    let (mut s, m) = real_embedding(a);
    let mut v = vec![0.0f64; m * m];
    for i in 0..m {
        v[i * m + i] = 1.0;
    }
    jacobi_symmetric(&mut s, m, Some(&mut v));
    let mut min = f64::INFINITY;
    let mut lambda = vec![0.0f64; m];
    for i in 0..m {
        lambda[i] = s[i * m + i];
        min = min.min(lambda[i]);
    }
    // R' = V·diag(max(λ,0))·Vᵀ; the clipped spectrum keeps the doubled
    // eigenspaces together, so R' is again of embedding form.
    let mut out = Operator::zeros(n);
    for r in 0..n {
        for c in 0..n {
            let mut re = 0.0;
            let mut im = 0.0;
            for k in 0..m {
                let lk = lambda[k].max(0.0);
                if lk == 0.0 {
                    continue;
                }
                re += lk * v[r * m + k] * v[c * m + k];
                im += lk * v[(r + n) * m + k] * v[c * m + k];
            }
            out[(r, c)] = Complex64::new(re, im);
        }
    }
    (out.hermitize(), min)
}

// Cyclic Jacobi on a packed real symmetric matrix; optionally accumulates
// the rotations into `vectors` (columns become eigenvectors).
fn jacobi_symmetric(s: &mut [f64], n: usize, mut vectors: Option<&mut [f64]>) {
    let scale = (0..n).map(|i| s[i * n + i].abs()).fold(1.0f64, f64::max);
    let tol = 1e-15 * scale;
    for _sweep in 0..64 {
        let mut off = 0.0f64;
        for p in 0..n {
            for q in (p + 1)..n {
                off = off.max(s[p * n + q].abs());
            }
        }
        if off <= tol {
            return;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = s[p * n + q];
                if apq.abs() <= tol * 1e-2 {
                    continue;
                }
                let app = s[p * n + p];
                let aqq = s[q * n + q];
                let theta = 0.5 * (aqq - app) / apq;
                let t = if theta >= 0.0 {
                    1.0 / (theta + (1.0 + theta * theta).sqrt())
                } else {
                    1.0 / (theta - (1.0 + theta * theta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let sn = t * c;
                for k in 0..n {
                    let skp = s[k * n + p];
                    let skq = s[k * n + q];
                    s[k * n + p] = c * skp - sn * skq;
                    s[k * n + q] = sn * skp + c * skq;
                }
                for k in 0..n {
                    let spk = s[p * n + k];
                    let sqk = s[q * n + k];
                    s[p * n + k] = c * spk - sn * sqk;
                    s[q * n + k] = sn * spk + c * sqk;
                }
                if let Some(v) = vectors.as_deref_mut() {
                    for k in 0..n {
                        let vkp = v[k * n + p];
                        let vkq = v[k * n + q];
                        v[k * n + p] = c * vkp - sn * vkq;
                        v[k * n + q] = sn * vkp + c * vkq;
                    }
                }
            }
        }
    }
}

/// A Hermitian, unit-trace, positive-semidefinite matrix (within tolerances).
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    op: Operator,
}

/// Why a matrix was rejected as a density matrix.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum StateError {
    NotHermitian { residual: f64 },
    TraceNotOne { trace: f64 },
    NegativeEigenvalue { min: f64 },
}

impl core::fmt::Display for StateError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            StateError::NotHermitian { residual } => {
                write!(f, "matrix is not Hermitian (residual {residual:.3e})")
            }
            StateError::TraceNotOne { trace } => {
                write!(f, "matrix trace {trace} is not 1")
            }
            StateError::NegativeEigenvalue { min } => {
                write!(f, "matrix has negative eigenvalue {min:.3e}")
            }
        }
    }
}

impl core::error::Error for StateError {}

impl DensityMatrix {
    /// Tolerances: Hermitian to 1e-10, trace to 1e-8, eigenvalues ≥ −1e-8.
    pub fn new(op: Operator) -> Result<Self, StateError> {
        let herm = op.hermiticity_residual();
        if herm > 1e-10 {
            return Err(StateError::NotHermitian { residual: herm });
        }
        let tr = op.trace();
        if (tr.re - 1.0).abs() > 1e-8 || tr.im.abs() > 1e-8 {
            return Err(StateError::TraceNotOne { trace: tr.re });
        }
        let min = min_eigenvalue(&op);
        if min < -1e-8 {
            return Err(StateError::NegativeEigenvalue { min });
        }
        Ok(Self { op })
    }

    /// Pure basis state |k⟩⟨k|.
    pub fn basis_state(dim: usize, k: usize) -> Self {
        assert!(k < dim, "basis index out of range");
        let mut op = Operator::zeros(dim);
        op[(k, k)] = Complex64::new(1.0, 0.0);
        Self { op }
    }

    /// Pure product state given per-atom excitation flags, `true` = excited.
    /// Atom 1 is the first entry.
    pub fn product_state(excited: &[bool]) -> Self {
        let mut k = 0usize;
        for &e in excited {
            k = (k << 1) | usize::from(!e);
        }
        Self::basis_state(1 << excited.len(), k)
    }

    pub fn operator(&self) -> &Operator {
        &self.op
    }

    pub fn into_operator(self) -> Operator {
        self.op
    }

    pub fn dim(&self) -> usize {
        self.op.dim()
    }

    pub fn expectation(&self, o: &Operator) -> Complex64 {
        o.matmul(&self.op).trace()
    }

    /// Tr ρ² = Σ|ρ_ij|² for Hermitian ρ.
    pub fn purity(&self) -> f64 {
        self.op.data().iter().map(|z| z.norm_sqr()).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    use approx::assert_abs_diff_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn sigma_minus_single_atom_matrix() {
        let sm = sigma(1, SigmaKind::Minus, 1);
        assert_eq!(sm[(0, 0)], c(0.0, 0.0));
        assert_eq!(sm[(0, 1)], c(0.0, 0.0));
        assert_eq!(sm[(1, 0)], c(1.0, 0.0));
        assert_eq!(sm[(1, 1)], c(0.0, 0.0));
    }

    #[test]
    fn sigma_z_on_excited_second_atom() {
        // |ge⟩ has atom 2 excited: σ₂^z eigenvalue +1. Index of |ge⟩ is 0b10.
        let sz2 = sigma(2, SigmaKind::Z, 2);
        assert_eq!(sz2[(2, 2)], c(1.0, 0.0));
        // and atom 1 in the ground state means σ₁^z eigenvalue −1 there.
        let sz1 = sigma(1, SigmaKind::Z, 2);
        assert_eq!(sz1[(2, 2)], c(-1.0, 0.0));
    }

    #[test]
    fn ladder_commutator_is_sigma_z() {
        for n in 1..=3 {
            for j in 1..=n {
                let comm = sigma(j, SigmaKind::Plus, n).commutator(&sigma(j, SigmaKind::Minus, n));
                let sz = sigma(j, SigmaKind::Z, n);
                assert_abs_diff_eq!((&comm - &sz).max_abs(), 0.0, epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn ladder_squares_vanish_and_cross_atom_operators_commute() {
        let n = 3;
        for j in 1..=n {
            let sp = sigma(j, SigmaKind::Plus, n);
            let sm = sigma(j, SigmaKind::Minus, n);
            assert_abs_diff_eq!(sp.matmul(&sp).max_abs(), 0.0, epsilon = 1e-14);
            assert_abs_diff_eq!(sm.matmul(&sm).max_abs(), 0.0, epsilon = 1e-14);
        }
        for j in 1..=n {
            for l in 1..=n {
                if j == l {
                    continue;
                }
                for (a, b) in [
                    (SigmaKind::Minus, SigmaKind::Plus),
                    (SigmaKind::Minus, SigmaKind::Z),
                    (SigmaKind::Plus, SigmaKind::Z),
                ] {
                    let comm = sigma(j, a, n).commutator(&sigma(l, b, n));
                    assert_abs_diff_eq!(comm.max_abs(), 0.0, epsilon = 1e-14);
                }
            }
        }
    }

    #[test]
    fn dissipator_decays_excited_state() {
        let sm = sigma(1, SigmaKind::Minus, 1);
        let excited = DensityMatrix::basis_state(2, 0);
        let d = dissipator(&sm, excited.operator());
        // |g⟩⟨g| − |e⟩⟨e|
        assert_abs_diff_eq!(d[(0, 0)].re, -1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(d[(1, 1)].re, 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(d.trace().norm(), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn ground_state_is_dark() {
        let sm = sigma(1, SigmaKind::Minus, 1);
        let ground = DensityMatrix::basis_state(2, 1);
        assert_abs_diff_eq!(dissipator(&sm, ground.operator()).max_abs(), 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(
            measurement_superop(&sm, ground.operator()).max_abs(),
            0.0,
            epsilon = 1e-14
        );
    }

    #[test]
    fn measurement_superop_on_plus_state() {
        // ρ = (|e⟩+|g⟩)(⟨e|+⟨g|)/2 with L = σ⁻ gives diag(−1/2, 1/2).
        let sm = sigma(1, SigmaKind::Minus, 1);
        let rho = Operator::from_rows(2, &[c(0.5, 0.0), c(0.5, 0.0), c(0.5, 0.0), c(0.5, 0.0)]);
        let h = measurement_superop(&sm, &rho);
        let expected =
            Operator::from_rows(2, &[c(-0.5, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.5, 0.0)]);
        assert_abs_diff_eq!((&h - &expected).max_abs(), 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(h.trace().norm(), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn zero_observable_gives_zero_backaction() {
        let rho = DensityMatrix::basis_state(2, 0);
        let zero = Operator::zeros(2);
        assert_abs_diff_eq!(
            measurement_superop(&zero, rho.operator()).max_abs(),
            0.0,
            epsilon = 1e-14
        );
    }

    #[test]
    fn eigenvalues_of_constructed_spectrum() {
        // Build A = U diag(λ) U† from a product of complex Givens rotations and
        // check the solver recovers λ.
        let lambda = [-0.75, -0.1, 0.0, 0.4, 1.3, 2.0, 2.0, 3.25];
        let n = lambda.len();
        let mut u = Operator::identity(n);
        let rotations = [
            (0usize, 1usize, 0.3, 1.1),
            (2, 3, 1.2, -0.4),
            (4, 7, 0.9, 2.2),
            (1, 6, 2.0, 0.0),
            (0, 5, 0.5, -1.7),
            (3, 4, 1.9, 0.8),
        ];
        for &(p, q, angle, phase) in &rotations {
            let mut g = Operator::identity(n);
            let (s, cth) = angle.sin_cos();
            g[(p, p)] = c(cth, 0.0);
            g[(q, q)] = c(cth, 0.0);
            g[(p, q)] = Complex64::from_polar(s, phase);
            g[(q, p)] = -Complex64::from_polar(s, -phase);
            u = u.matmul(&g);
        }
        let mut d = Operator::zeros(n);
        for (i, &l) in lambda.iter().enumerate() {
            d[(i, i)] = c(l, 0.0);
        }
        let a = u.matmul(&d).matmul(&u.dagger());
        let eigs = hermitian_eigenvalues(&a);
        for (got, want) in eigs.iter().zip(lambda.iter()) {
            assert_abs_diff_eq!(got, want, epsilon = 1e-10);
        }
        assert_abs_diff_eq!(min_eigenvalue(&a), -0.75, epsilon = 1e-10);
    }

    #[test]
    fn psd_check_accepts_density_matrices_and_rejects_indefinite() {
        // Pure (rank-deficient) state.
        let rho = DensityMatrix::product_state(&[true, false]);
        assert!(psd_within(rho.operator(), 1e-12));
        // Entangled pure state.
        let mut bell = Operator::zeros(4);
        for r in [1, 2] {
            for cidx in [1, 2] {
                bell[(r, cidx)] = c(0.5, 0.0);
            }
        }
        assert!(psd_within(&bell, 1e-12));
        // Indefinite.
        let neg = Operator::from_rows(2, &[c(1.05, 0.0), c(0.3, 0.1), c(0.3, -0.1), c(-0.05, 0.0)]);
        assert!(!psd_within(&neg, 1e-12));
        // Off-diagonal too large for the diagonal (indefinite despite
        // positive diagonal).
        let tilted = Operator::from_rows(2, &[c(0.5, 0.0), c(0.6, 0.0), c(0.6, 0.0), c(0.5, 0.0)]);
        assert!(!psd_within(&tilted, 1e-12));
    }

    #[test]
    fn clipping_projects_onto_psd_cone() {
        let a = Operator::from_rows(
            2,
            &[c(0.9, 0.0), c(0.4, 0.2), c(0.4, -0.2), c(0.1, 0.0)],
        );
        let eigs = hermitian_eigenvalues(&a);
        assert!(eigs[0] < 0.0);
        let (clipped, min) = clip_negative_eigenvalues(&a);
        assert_abs_diff_eq!(min, eigs[0], epsilon = 1e-12);
        let clipped_eigs = hermitian_eigenvalues(&clipped);
        assert!(clipped_eigs[0] > -1e-12);
        // The positive eigenvalue survives unchanged.
        assert_abs_diff_eq!(clipped_eigs[1], eigs[1], epsilon = 1e-10);
        // Projection of an already-PSD matrix is the identity map.
        let rho = DensityMatrix::product_state(&[true]);
        let (same, min) = clip_negative_eigenvalues(rho.operator());
        assert!(min >= -1e-14);
        assert_abs_diff_eq!((&same - rho.operator()).max_abs(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn density_matrix_validation() {
        assert!(DensityMatrix::new(Operator::identity(2).scale(c(0.5, 0.0))).is_ok());
        let mut bad_trace = Operator::identity(2);
        bad_trace[(0, 0)] = c(0.7, 0.0);
        assert!(matches!(
            DensityMatrix::new(bad_trace),
            Err(StateError::TraceNotOne { .. })
        ));
        let neg = Operator::from_rows(2, &[c(1.1, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-0.1, 0.0)]);
        assert!(matches!(
            DensityMatrix::new(neg),
            Err(StateError::NegativeEigenvalue { .. })
        ));
        let mut skew = Operator::identity(2).scale(c(0.5, 0.0));
        skew[(0, 1)] = c(0.1, 0.0);
        assert!(matches!(DensityMatrix::new(skew), Err(StateError::NotHermitian { .. })));
    }

    #[test]
    fn product_state_indexing() {
        // |eg⟩ is index 1 in the two-atom basis.
        let rho = DensityMatrix::product_state(&[true, false]);
        assert_eq!(rho.operator()[(1, 1)], c(1.0, 0.0));
        assert_abs_diff_eq!(rho.purity(), 1.0, epsilon = 1e-14);
    }
}
