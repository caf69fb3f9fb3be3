//! Dense complex vector/matrix primitives and the spectral routines the
//! optimizers need: rank-1 outer products, Hermitian quadratic forms, a
//! power-iteration largest-eigenvalue solver and a cyclic-Jacobi full
//! eigendecomposition (used by the SDP projection and covariance factoring).
//!
//! Everything is dense; problem dimensions stay in the low hundreds.

use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

/// Shorthand for the complex scalar type used throughout the crate.
pub type C64 = Complex64;

/// Elementwise Hermitian-symmetry tolerance enforced by [`HermitianMatrix`]
/// constructors, relative to the largest entry magnitude.
pub const HERMITIAN_TOL: f64 = 1e-12;

const POWER_ITERATION_CAP: usize = 10_000;
const POWER_ITERATION_TOL: f64 = 1e-10;

#[derive(Debug, Error)]
pub enum NumericsError {
    #[error("vector must have at least one entry")]
    EmptyVector,
    #[error("non-finite entry at index {0}")]
    NonFinite(usize),
    #[error("matrix is not Hermitian (max asymmetry {0:.3e})")]
    NotHermitian(f64),
    #[error("eigenvalue iteration did not converge within {0} iterations")]
    EigNonConvergence(usize),
}

/// Fixed-length complex vector with finite entries.
#[derive(Debug, Clone, PartialEq)]
pub struct CVector(Vec<C64>);

impl CVector {
    /// Build from raw entries. Panics on an empty or non-finite input; these
    /// are programmer errors everywhere this crate constructs vectors.
    pub fn new(entries: Vec<C64>) -> Self {
        assert!(!entries.is_empty(), "CVector must have at least one entry");
        debug_assert!(
            entries.iter().all(|z| z.re.is_finite() && z.im.is_finite()),
            "CVector entries must be finite"
        );
        Self(entries)
    }

    /// Fallible constructor for data crossing an external boundary.
    pub fn try_new(entries: Vec<C64>) -> Result<Self, NumericsError> {
        if entries.is_empty() {
            return Err(NumericsError::EmptyVector);
        }
        for (i, z) in entries.iter().enumerate() {
            if !(z.re.is_finite() && z.im.is_finite()) {
                return Err(NumericsError::NonFinite(i));
            }
        }
        Ok(Self(entries))
    }

    pub fn zeros(n: usize) -> Self {
        Self::new(vec![C64::new(0.0, 0.0); n])
    }

    pub fn from_fn(n: usize, f: impl FnMut(usize) -> C64) -> Self {
        Self::new((0..n).map(f).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        false // length >= 1 by construction
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.0
    }

    pub fn iter(&self) -> std::slice::Iter<'_, C64> {
        self.0.iter()
    }

    /// Hermitian inner product `selfᴴ · other` (conjugates `self`).
    pub fn inner(&self, other: &Self) -> C64 {
        assert_eq!(self.len(), other.len(), "inner product length mismatch");
        self.0
            .iter()
            .zip(other.0.iter())
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn scaled(&self, c: C64) -> Self {
        Self::new(self.0.iter().map(|z| z * c).collect())
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.len(), other.len(), "vector add length mismatch");
        Self::new(
            self.0
                .iter()
                .zip(other.0.iter())
                .map(|(a, b)| a + b)
                .collect(),
        )
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!(self.len(), other.len(), "vector sub length mismatch");
        Self::new(
            self.0
                .iter()
                .zip(other.0.iter())
                .map(|(a, b)| a - b)
                .collect(),
        )
    }

    pub fn conj(&self) -> Self {
        Self::new(self.0.iter().map(|z| z.conj()).collect())
    }

    /// Sum of entry magnitudes.
    pub fn abs_sum(&self) -> f64 {
        self.0.iter().map(|z| z.norm()).sum()
    }
}

impl std::ops::Index<usize> for CVector {
    type Output = C64;
    fn index(&self, i: usize) -> &C64 {
        &self.0[i]
    }
}

impl std::ops::IndexMut<usize> for CVector {
    fn index_mut(&mut self, i: usize) -> &mut C64 {
        &mut self.0[i]
    }
}

/// Dense Hermitian matrix, row-major. Constructors symmetrize so the stored
/// data equals its own conjugate transpose exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianMatrix {
    n: usize,
    data: Vec<C64>,
}

impl HermitianMatrix {
    /// Build from a row-major square array, verifying Hermitian symmetry
    /// within [`HERMITIAN_TOL`] (relative to the largest entry) and then
    /// symmetrizing exactly.
    pub fn from_entries(n: usize, data: Vec<C64>) -> Result<Self, NumericsError> {
        assert_eq!(data.len(), n * n, "entry count must be n*n");
        for (i, z) in data.iter().enumerate() {
            if !(z.re.is_finite() && z.im.is_finite()) {
                return Err(NumericsError::NonFinite(i));
            }
        }
        let scale = data.iter().map(|z| z.norm()).fold(0.0_f64, f64::max).max(1.0);
        let mut max_dev = 0.0_f64;
        for i in 0..n {
            for j in i..n {
                let dev = (data[i * n + j] - data[j * n + i].conj()).norm();
                max_dev = max_dev.max(dev);
            }
        }
        if max_dev > HERMITIAN_TOL * scale {
            return Err(NumericsError::NotHermitian(max_dev));
        }
        let mut m = Self { n, data };
        m.symmetrize();
        Ok(m)
    }

    fn symmetrize(&mut self) {
        let n = self.n;
        for i in 0..n {
            self.data[i * n + i] = C64::new(self.data[i * n + i].re, 0.0);
            for j in (i + 1)..n {
                let avg = 0.5 * (self.data[i * n + j] + self.data[j * n + i].conj());
                self.data[i * n + j] = avg;
                self.data[j * n + i] = avg.conj();
            }
        }
    }

    pub fn zeros(n: usize) -> Self {
        assert!(n >= 1);
        Self {
            n,
            data: vec![C64::new(0.0, 0.0); n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::scaled_identity(n, 1.0)
    }

    pub fn scaled_identity(n: usize, c: f64) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.data[i * n + i] = C64::new(c, 0.0);
        }
        m
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        let mut m = Self::zeros(n);
        for (i, &d) in diag.iter().enumerate() {
            m.data[i * n + i] = C64::new(d, 0.0);
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn entry(&self, i: usize, j: usize) -> C64 {
        self.data[i * self.n + j]
    }

    pub(crate) fn set_entry(&mut self, i: usize, j: usize, z: C64) {
        self.data[i * self.n + j] = z;
    }

    pub fn matvec(&self, x: &CVector) -> CVector {
        assert_eq!(self.n, x.len(), "matvec dimension mismatch");
        CVector::from_fn(self.n, |i| {
            let row = &self.data[i * self.n..(i + 1) * self.n];
            row.iter().zip(x.iter()).map(|(a, b)| a * b).sum()
        })
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.n, other.n, "matrix add dimension mismatch");
        let data = self
            .data
            .iter()
            .zip(other.data.iter())
            .map(|(a, b)| a + b)
            .collect();
        Self { n: self.n, data }
    }

    pub fn scale(&self, c: f64) -> Self {
        Self {
            n: self.n,
            data: self.data.iter().map(|z| z * c).collect(),
        }
    }

    pub fn add_scaled_identity(&self, c: f64) -> Self {
        let mut m = self.clone();
        for i in 0..m.n {
            m.data[i * m.n + i] += C64::new(c, 0.0);
        }
        m
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self.data[i * self.n + i].re).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Largest row sum of entry magnitudes; a Gershgorin bound on the
    /// spectral radius.
    fn inf_norm(&self) -> f64 {
        (0..self.n)
            .map(|i| {
                self.data[i * self.n..(i + 1) * self.n]
                    .iter()
                    .map(|z| z.norm())
                    .sum::<f64>()
            })
            .fold(0.0, f64::max)
    }

    /// Full eigendecomposition by cyclic Jacobi rotations. Returns
    /// eigenvalues in ascending order with matching orthonormal
    /// eigenvectors. Cost is O(n³) per sweep; fine for n ≤ a few hundred.
    pub fn eigh(&self) -> (Vec<f64>, Vec<CVector>) {
        let n = self.n;
        let mut a = self.data.clone();
        let mut v = vec![C64::new(0.0, 0.0); n * n];
        for i in 0..n {
            v[i * n + i] = C64::new(1.0, 0.0);
        }
        let scale = self.frobenius_norm();
        if scale > 0.0 {
            let idx = |i: usize, j: usize| i * n + j;
            const MAX_SWEEPS: usize = 100;
            for _sweep in 0..MAX_SWEEPS {
                let off: f64 = (0..n)
                    .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
                    .map(|(i, j)| a[idx(i, j)].norm_sqr())
                    .sum();
                if off.sqrt() <= 1e-13 * scale {
                    break;
                }
                for p in 0..n.saturating_sub(1) {
                    for q in (p + 1)..n {
                        let apq = a[idx(p, q)];
                        let abs = apq.norm();
                        if abs <= 1e-300 {
                            continue;
                        }
                        let phase = apq / abs;
                        let app = a[idx(p, p)].re;
                        let aqq = a[idx(q, q)].re;
                        let tau = (aqq - app) / (2.0 * abs);
                        let t = if tau >= 0.0 {
                            1.0 / (tau + (1.0 + tau * tau).sqrt())
                        } else {
                            1.0 / (tau - (1.0 + tau * tau).sqrt())
                        };
                        let c = 1.0 / (1.0 + t * t).sqrt();
                        let s = t * c;
                        // Unitary plane rotation G = D·J with D = diag(1, e^{-jφ})
                        // making the pivot real, J the real Jacobi rotation.
                        let em = phase.conj(); // e^{-jφ}
                        let ep = phase; // e^{+jφ}
                        for k in 0..n {
                            let akp = a[idx(k, p)];
                            let akq = a[idx(k, q)];
                            a[idx(k, p)] = c * akp - s * em * akq;
                            a[idx(k, q)] = s * akp + c * em * akq;
                        }
                        for k in 0..n {
                            let apk = a[idx(p, k)];
                            let aqk = a[idx(q, k)];
                            a[idx(p, k)] = c * apk - s * ep * aqk;
                            a[idx(q, k)] = s * apk + c * ep * aqk;
                        }
                        a[idx(p, q)] = C64::new(0.0, 0.0);
                        a[idx(q, p)] = C64::new(0.0, 0.0);
                        a[idx(p, p)] = C64::new(a[idx(p, p)].re, 0.0);
                        a[idx(q, q)] = C64::new(a[idx(q, q)].re, 0.0);
                        for k in 0..n {
                            let vkp = v[idx(k, p)];
                            let vkq = v[idx(k, q)];
                            v[idx(k, p)] = c * vkp - s * em * vkq;
                            v[idx(k, q)] = s * vkp + c * em * vkq;
                        }
                    }
                }
            }
        }
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| {
            a[i * n + i]
                .re
                .partial_cmp(&a[j * n + j].re)
                .expect("eigenvalues are finite")
        });
        let eigenvalues: Vec<f64> = order.iter().map(|&i| a[i * n + i].re).collect();
        let eigenvectors: Vec<CVector> = order
            .iter()
            .map(|&col| CVector::from_fn(n, |row| v[row * n + col]))
            .collect();
        (eigenvalues, eigenvectors)
    }
}

/// Rank-1 outer product `h·hᴴ`. Positive semidefinite by construction.
pub fn outer_product(h: &CVector) -> HermitianMatrix {
    let n = h.len();
    let mut m = HermitianMatrix::zeros(n);
    for i in 0..n {
        for j in 0..n {
            m.set_entry(i, j, h[i] * h[j].conj());
        }
    }
    m
}

/// Real quadratic form `Re{xᴴMx}` of a Hermitian matrix. The imaginary part
/// of `xᴴMx` vanishes analytically; a debug assertion guards the numerics.
pub fn quadratic_form(m: &HermitianMatrix, x: &CVector) -> f64 {
    assert_eq!(m.dim(), x.len(), "quadratic form dimension mismatch");
    let q = x.inner(&m.matvec(x));
    debug_assert!(
        q.im.abs() <= 1e-9 * q.re.abs().max(1.0),
        "quadratic form of a Hermitian matrix must be real (im = {:.3e})",
        q.im
    );
    q.re
}

/// Largest eigenvalue of a Hermitian matrix by power iteration on the
/// Gershgorin-shifted matrix `B + sI` (so the target eigenvalue dominates in
/// magnitude even for indefinite `B`). Stops when the Rayleigh quotient
/// changes by less than 1e-10 relative per iteration; errors after 10 000
/// iterations.
pub fn max_eigenvalue(b: &HermitianMatrix) -> Result<f64, NumericsError> {
    let n = b.dim();
    if n == 1 {
        return Ok(b.entry(0, 0).re);
    }
    let shift = b.inf_norm();
    if shift == 0.0 {
        return Ok(0.0);
    }
    // Deterministic pseudo-random start; an adversarial orthogonal start is
    // measure-zero and does not arise for the matrices this crate builds.
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_1a11);
    let mut x = CVector::from_fn(n, |_| {
        C64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)
    });
    let inv_norm = 1.0 / x.norm();
    x = x.scaled(C64::new(inv_norm, 0.0));
    let mut rq_prev = quadratic_form(b, &x);
    for _ in 0..POWER_ITERATION_CAP {
        let mut y = b.matvec(&x);
        y = y.add(&x.scaled(C64::new(shift, 0.0)));
        let norm = y.norm();
        if norm == 0.0 {
            // x is an exact eigenvector of B with eigenvalue -shift.
            return Ok(rq_prev);
        }
        x = y.scaled(C64::new(1.0 / norm, 0.0));
        let rq = quadratic_form(b, &x);
        let delta = (rq - rq_prev).abs();
        if delta <= POWER_ITERATION_TOL * rq.abs() || delta <= 1e-30 * shift {
            return Ok(rq);
        }
        rq_prev = rq;
    }
    Err(NumericsError::EigNonConvergence(POWER_ITERATION_CAP))
}
