//! Dense linear algebra for the small complex drift matrices of the bridge.
//!
//! nalgebra supplies the Hessenberg reduction, the Padé matrix exponential
//! and the symmetric eigensolver. The complex Schur iteration and the
//! triangular eigenvector solve live here because nalgebra's Schur routine
//! targets real quasi-triangular forms.

use nalgebra::{Complex, DMatrix, DVector, SymmetricEigen};

use crate::error::{BridgeError, Result};

pub type C64 = Complex<f64>;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

const MAX_QR_SWEEPS: usize = 60;

/// Unitary `q` and upper-triangular `t` with `m = q t q*`.
#[derive(Debug, Clone)]
pub struct ComplexSchur {
    pub q: CMatrix,
    pub t: CMatrix,
}

/// Right eigenvectors (columns), eigenvalues, and the inverse eigenvector matrix.
#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    pub values: CVector,
    pub vectors: CMatrix,
    pub inverse: CMatrix,
}

impl EigenDecomposition {
    /// `‖V‖_F ‖V⁻¹‖_F`, large when the matrix is close to defective.
    pub fn condition(&self) -> f64 {
        self.vectors.norm() * self.inverse.norm()
    }

    /// Spectral projector onto eigenvalue `k`.
    pub fn projector(&self, k: usize) -> CMatrix {
        self.vectors.column(k) * self.inverse.row(k)
    }

    /// `V diag(f(λ)) V⁻¹ x`.
    pub fn apply_fn(&self, x: &CVector, f: impl Fn(C64) -> C64) -> CVector {
        let mut coeffs = &self.inverse * x;
        for (c, &l) in coeffs.iter_mut().zip(self.values.iter()) {
            *c *= f(l);
        }
        &self.vectors * coeffs
    }

    /// Index of the eigenvalue with the largest real part (the slowest-decaying mode).
    pub fn slowest(&self) -> usize {
        let mut best = 0;
        for k in 1..self.values.len() {
            if self.values[k].re > self.values[best].re {
                best = k;
            }
        }
        best
    }
}

fn givens(x: C64, y: C64) -> (f64, C64) {
    let ax = x.norm();
    let r = ax.hypot(y.norm());
    if r == 0.0 {
        return (1.0, C64::new(0.0, 0.0));
    }
    if ax == 0.0 {
        return (0.0, C64::new(1.0, 0.0));
    }
    (ax / r, (x / ax) * y.conj() / r)
}

// h <- G h on rows (k, k+1), columns in `cols`.
fn rotate_rows(h: &mut CMatrix, k: usize, c: f64, s: C64, cols: std::ops::Range<usize>) {
    for j in cols {
        let a = h[(k, j)];
        let b = h[(k + 1, j)];
        h[(k, j)] = a * c + s * b;
        h[(k + 1, j)] = -s.conj() * a + b * c;
    }
}

// h <- h G* on columns (k, k+1), rows in `rows`.
fn rotate_cols(h: &mut CMatrix, k: usize, c: f64, s: C64, rows: std::ops::Range<usize>) {
    for i in rows {
        let a = h[(i, k)];
        let b = h[(i, k + 1)];
        h[(i, k)] = a * c + b * s.conj();
        h[(i, k + 1)] = -a * s + b * c;
    }
}

fn wilkinson_shift(a: C64, b: C64, c: C64, d: C64) -> C64 {
    let half = (a - d) * 0.5;
    let disc = (half * half + b * c).sqrt();
    let mean = (a + d) * 0.5;
    let l1 = mean + disc;
    let l2 = mean - disc;
    if (l1 - d).norm() <= (l2 - d).norm() {
        l1
    } else {
        l2
    }
}

/// Complex Schur decomposition by Hessenberg reduction and single-shift QR.
pub fn complex_schur(m: &CMatrix) -> Result<ComplexSchur> {
    let n = m.nrows();
    if n != m.ncols() {
        return Err(BridgeError::Numerical(
            "Schur decomposition needs a square matrix".into(),
        ));
    }
    if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(BridgeError::NonFinite("matrix entries"));
    }
    if n <= 1 {
        return Ok(ComplexSchur {
            q: CMatrix::identity(n, n),
            t: m.clone(),
        });
    }
    let (mut q, mut h) = m.clone().hessenberg().unpack();
    let scale = m.norm().max(f64::MIN_POSITIVE);
    let eps = f64::EPSILON;

    let mut hi = n - 1;
    let mut sweeps = 0usize;
    while hi > 0 {
        // locate the start of the unreduced block ending at `hi`
        let mut lo = hi;
        while lo > 0 {
            let sub = h[(lo, lo - 1)].norm();
            let diag = h[(lo - 1, lo - 1)].norm() + h[(lo, lo)].norm();
            if sub <= eps * diag.max(eps * scale) {
                h[(lo, lo - 1)] = C64::new(0.0, 0.0);
                break;
            }
            lo -= 1;
        }
        if lo == hi {
            hi -= 1;
            sweeps = 0;
            continue;
        }
        sweeps += 1;
        if sweeps > MAX_QR_SWEEPS {
            return Err(BridgeError::Numerical(
                "complex QR iteration did not converge".into(),
            ));
        }
        let shift = if sweeps.is_multiple_of(11) {
            // exceptional shift to break cycles
            h[(hi, hi)] + C64::new(h[(hi, hi - 1)].norm(), 0.0)
        } else {
            wilkinson_shift(
                h[(hi - 1, hi - 1)],
                h[(hi - 1, hi)],
                h[(hi, hi - 1)],
                h[(hi, hi)],
            )
        };

        let (c, s) = givens(h[(lo, lo)] - shift, h[(lo + 1, lo)]);
        rotate_rows(&mut h, lo, c, s, lo..n);
        rotate_cols(&mut h, lo, c, s, 0..(lo + 3).min(hi + 1));
        rotate_cols(&mut q, lo, c, s, 0..n);
        for k in lo + 1..hi {
            let (c, s) = givens(h[(k, k - 1)], h[(k + 1, k - 1)]);
            rotate_rows(&mut h, k, c, s, k - 1..n);
            h[(k + 1, k - 1)] = C64::new(0.0, 0.0);
            rotate_cols(&mut h, k, c, s, 0..(k + 3).min(hi + 1));
            rotate_cols(&mut q, k, c, s, 0..n);
        }
    }
    for j in 0..n {
        for i in j + 1..n {
            h[(i, j)] = C64::new(0.0, 0.0);
        }
    }
    Ok(ComplexSchur { q, t: h })
}

/// Full eigendecomposition `m = V diag(λ) V⁻¹` for a diagonalizable complex matrix.
pub fn eigen_decompose(m: &CMatrix) -> Result<EigenDecomposition> {
    let n = m.nrows();
    let ComplexSchur { q, t } = complex_schur(m)?;
    let tiny = f64::EPSILON * m.norm().max(f64::MIN_POSITIVE);
    let mut y = CMatrix::zeros(n, n);
    for k in 0..n {
        y[(k, k)] = C64::new(1.0, 0.0);
        let lk = t[(k, k)];
        for i in (0..k).rev() {
            let mut acc = C64::new(0.0, 0.0);
            for j in i + 1..=k {
                acc += t[(i, j)] * y[(j, k)];
            }
            let mut den = t[(i, i)] - lk;
            if den.norm() < tiny {
                den = C64::new(tiny, 0.0);
            }
            y[(i, k)] = -acc / den;
        }
    }
    let mut vectors = q * y;
    for mut col in vectors.column_iter_mut() {
        let norm = col.norm();
        if norm > 0.0 {
            col /= C64::new(norm, 0.0);
        }
    }
    let inverse = vectors
        .clone()
        .try_inverse()
        .ok_or_else(|| BridgeError::Numerical("eigenvector matrix is singular".into()))?;
    let values = t.diagonal();
    Ok(EigenDecomposition {
        values,
        vectors,
        inverse,
    })
}

/// Eigenvalues only.
pub fn eigenvalues(m: &CMatrix) -> Result<CVector> {
    Ok(complex_schur(m)?.t.diagonal())
}

/// Dense matrix exponential `exp(m t)` (Padé scaling and squaring).
pub fn expm_scaled(m: &CMatrix, t: f64) -> CMatrix {
    (m * C64::new(t, 0.0)).exp()
}

/// Second moments of a linear SDE: `C(t) = F C₀ Fᵀ + ∫₀ᵗ e^{As} D e^{Aᵀs} ds`, `F = e^{At}`.
///
/// The integral is taken with a Van Loan block exponential over a short step
/// and then extended by doubling, `Q(2h) = Q(h) + F(h) Q(h) F(h)ᵀ`, which stays
/// bounded where the plain block exponential would overflow.
pub fn propagate_covariance(
    a: &DMatrix<f64>,
    d: &DMatrix<f64>,
    c0: &DMatrix<f64>,
    t: f64,
) -> DMatrix<f64> {
    let n = a.nrows();
    if t == 0.0 {
        return symmetrize(c0);
    }
    let norm = a.norm() * t;
    let mut doublings = 0u32;
    let mut h = t;
    while norm / f64::from(1u32 << doublings.min(31)) > 0.5 && doublings < 60 {
        doublings += 1;
        h = t / 2f64.powi(doublings as i32);
    }
    let mut block = DMatrix::<f64>::zeros(2 * n, 2 * n);
    block.view_mut((0, 0), (n, n)).copy_from(&(a * h));
    block.view_mut((0, n), (n, n)).copy_from(&(d * h));
    block
        .view_mut((n, n), (n, n))
        .copy_from(&(-a.transpose() * h));
    let e = block.exp();
    let mut f = e.view((0, 0), (n, n)).into_owned();
    let g = e.view((0, n), (n, n)).into_owned();
    let mut q = symmetrize(&(g * f.transpose()));
    for _ in 0..doublings {
        q = symmetrize(&(&q + &f * &q * f.transpose()));
        f = &f * &f;
    }
    symmetrize(&(&f * c0 * f.transpose() + q))
}

pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Symplectic form for quadratures ordered `(q₁…qₙ, p₁…pₙ)`.
pub fn symplectic_form(modes: usize) -> DMatrix<f64> {
    let mut omega = DMatrix::zeros(2 * modes, 2 * modes);
    for j in 0..modes {
        omega[(j, modes + j)] = 1.0;
        omega[(modes + j, j)] = -1.0;
    }
    omega
}

/// Smallest eigenvalue of the Hermitian matrix `C + iΩ`.
///
/// With `q = a + a†` and `p = (a − a†)/i` the uncertainty principle reads
/// `C + iΩ ⪰ 0`; the vacuum sits on the boundary with minimum eigenvalue 0.
pub fn min_uncertainty_eigenvalue(cov: &DMatrix<f64>) -> f64 {
    let dim = cov.nrows();
    let omega = symplectic_form(dim / 2);
    // real symmetric embedding of C + iΩ
    let mut emb = DMatrix::<f64>::zeros(2 * dim, 2 * dim);
    emb.view_mut((0, 0), (dim, dim)).copy_from(cov);
    emb.view_mut((dim, dim), (dim, dim)).copy_from(cov);
    emb.view_mut((0, dim), (dim, dim)).copy_from(&(-&omega));
    emb.view_mut((dim, 0), (dim, dim)).copy_from(&omega);
    SymmetricEigen::new(symmetrize(&emb)).eigenvalues.min()
}
