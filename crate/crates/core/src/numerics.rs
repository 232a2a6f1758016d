//! Dense complex linear algebra for small square operators.
//!
//! Everything here works on [`ComplexMatrix`], a row-major `n × m` array of
//! [`Complex64`]. The dimensions this crate deals with are tiny (a few dozen
//! at most, a few hundred for vectorised commutant systems), so the routines
//! favour robustness over speed: eigenproblems go through cyclic Jacobi
//! sweeps and spans are handled through Gram matrices.

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);
pub const I: Complex64 = Complex64::new(0.0, 1.0);

/// Maximum number of full Jacobi sweeps before giving up.
pub const JACOBI_SWEEP_BUDGET: usize = 100;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NumericsError {
    #[error("matrix entries must be finite (found {0} at ({1}, {2}))")]
    NonFinite(Complex64, usize, usize),
    #[error("ragged rows: row {row} has {found} entries, expected {expected}")]
    Ragged { row: usize, found: usize, expected: usize },
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("dimension mismatch: expected {expected}x{expected}, got {rows}x{cols}")]
    DimensionMismatch { expected: usize, rows: usize, cols: usize },
    #[error("matrix is not self-adjoint (max deviation {0:e})")]
    NotSelfAdjoint(f64),
    #[error("Jacobi iteration did not converge within {0} sweeps")]
    NoConvergence(usize),
}

/// Comparison thresholds shared by every numerical check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TolerancePolicy {
    /// Entrywise (max-norm) equality threshold.
    pub eps_eq: f64,
    /// Relative eigenvalue threshold for numerical rank.
    pub eps_rank: f64,
}

impl Default for TolerancePolicy {
    fn default() -> Self {
        Self { eps_eq: 1e-9, eps_rank: 1e-8 }
    }
}

impl TolerancePolicy {
    pub fn new(eps_eq: f64, eps_rank: f64) -> Option<Self> {
        (eps_eq > 0.0 && eps_rank > 0.0 && eps_eq.is_finite() && eps_rank.is_finite())
            .then_some(Self { eps_eq, eps_rank })
    }
}

#[derive(Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix {}x{} [", self.rows, self.cols)?;
        for r in 0..self.rows {
            write!(f, "  ")?;
            for c in 0..self.cols {
                let z = self[(r, c)];
                write!(f, "{:>10.6}{:+.6}i  ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![ZERO; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = ONE;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Self { rows, cols, data }
    }

    /// Builds a matrix from nested rows, rejecting ragged input and
    /// non-finite entries.
    pub fn from_rows(rows: &[Vec<Complex64>]) -> Result<Self, NumericsError> {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(nrows * ncols);
        for (r, row) in rows.iter().enumerate() {
            if row.len() != ncols {
                return Err(NumericsError::Ragged { row: r, found: row.len(), expected: ncols });
            }
            for (c, &z) in row.iter().enumerate() {
                if !(z.re.is_finite() && z.im.is_finite()) {
                    return Err(NumericsError::NonFinite(z, r, c));
                }
                data.push(z);
            }
        }
        Ok(Self { rows: nrows, cols: ncols, data })
    }

    /// Real-entried convenience constructor; panics on ragged input.
    pub fn from_real_rows<const N: usize>(rows: [[f64; N]; N]) -> Self {
        Self::from_fn(N, N, |r, c| Complex64::new(rows[r][c], 0.0))
    }

    pub fn from_complex_rows<const N: usize>(rows: [[Complex64; N]; N]) -> Self {
        Self::from_fn(N, N, |r, c| rows[r][c])
    }

    pub fn diagonal(values: &[Complex64]) -> Self {
        let n = values.len();
        let mut m = Self::zeros(n, n);
        for (i, &v) in values.iter().enumerate() {
            m[(i, i)] = v;
        }
        m
    }

    /// Column vector `v` as an `n × 1` matrix.
    pub fn column(v: &[Complex64]) -> Self {
        Self { rows: v.len(), cols: 1, data: v.to_vec() }
    }

    /// Rank-one projector `v v*` for a (not necessarily normalised) vector.
    pub fn outer(u: &[Complex64], v: &[Complex64]) -> Self {
        Self::from_fn(u.len(), v.len(), |r, c| u[r] * v[c].conj())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    /// Entries in row-major order.
    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn to_rows(&self) -> Vec<Vec<Complex64>> {
        self.data.chunks(self.cols.max(1)).map(<[_]>::to_vec).collect()
    }

    pub fn column_vec(&self, c: usize) -> Vec<Complex64> {
        (0..self.rows).map(|r| self[(r, c)]).collect()
    }

    pub fn set_column(&mut self, c: usize, v: &[Complex64]) {
        for (r, &z) in v.iter().enumerate() {
            self[(r, c)] = z;
        }
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |r, c| self[(c, r)].conj())
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(|&z| z * s).collect() }
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Max-norm distance; `f64::INFINITY` when shapes differ.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        if self.rows != other.rows || self.cols != other.cols {
            return f64::INFINITY;
        }
        self.data.iter().zip(&other.data).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }

    /// Frobenius inner product `<self, other> = tr(self* other)`.
    pub fn inner(&self, other: &Self) -> Complex64 {
        self.data.iter().zip(&other.data).map(|(a, b)| a.conj() * b).sum()
    }

    pub fn commutator(&self, other: &Self) -> Self {
        &(self * other) - &(other * self)
    }

    pub fn self_adjoint_deviation(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let mut dev: f64 = 0.0;
        for r in 0..self.rows {
            for c in r..self.cols {
                dev = dev.max((self[(r, c)] - self[(c, r)].conj()).norm());
            }
        }
        dev
    }

    pub fn pow(&self, k: usize) -> Self {
        let mut acc = Self::identity(self.rows);
        for _ in 0..k {
            acc = &acc * self;
        }
        acc
    }

    /// Extracts the principal submatrix on `indices` (rows and columns).
    pub fn compress(&self, indices: &[usize]) -> Self {
        Self::from_fn(indices.len(), indices.len(), |r, c| self[(indices[r], indices[c])])
    }

    pub fn mul_vec(&self, v: &[Complex64]) -> Vec<Complex64> {
        (0..self.rows).map(|r| (0..self.cols).map(|c| self[(r, c)] * v[c]).sum()).collect()
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = Complex64;
    fn index(&self, (r, c): (usize, usize)) -> &Complex64 {
        &self.data[r * self.cols + c]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut Complex64 {
        &mut self.data[r * self.cols + c]
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.cols, rhs.rows, "matrix product shape mismatch");
        let mut out = ComplexMatrix::zeros(self.rows, rhs.cols);
        for r in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(r, k)];
                if a == ZERO {
                    continue;
                }
                for c in 0..rhs.cols {
                    out.data[r * rhs.cols + c] += a * rhs[(k, c)];
                }
            }
        }
        out
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols), "matrix sum shape mismatch");
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols), "matrix difference shape mismatch");
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

#[derive(Serialize, Deserialize)]
struct MatrixJson {
    re: Vec<Vec<f64>>,
    im: Vec<Vec<f64>>,
}

impl Serialize for ComplexMatrix {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let split = |part: fn(&Complex64) -> f64| -> Vec<Vec<f64>> {
            (0..self.rows).map(|r| (0..self.cols).map(|c| part(&self[(r, c)])).collect()).collect()
        };
        MatrixJson { re: split(|z| z.re), im: split(|z| z.im) }.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for ComplexMatrix {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        use serde::de::Error;
        let json = MatrixJson::deserialize(deserializer)?;
        if json.re.len() != json.im.len() {
            return Err(D::Error::custom("re and im parts have different row counts"));
        }
        let rows = json
            .re
            .iter()
            .zip(&json.im)
            .map(|(re, im)| {
                if re.len() != im.len() {
                    return Err(D::Error::custom("re and im rows have different lengths"));
                }
                Ok(re.iter().zip(im).map(|(&a, &b)| Complex64::new(a, b)).collect())
            })
            .collect::<Result<Vec<Vec<_>>, _>>()?;
        ComplexMatrix::from_rows(&rows).map_err(D::Error::custom)
    }
}

/// Result of a Hermitian eigendecomposition: ascending eigenvalues and a
/// unitary whose columns are the matching eigenvectors.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    pub eigenvalues: Vec<f64>,
    pub vectors: ComplexMatrix,
}

/// Hermitian eigendecomposition by cyclic complex Jacobi rotations.
///
/// Each rotation first removes the phase of the pivot `m[p][q]` and then
/// applies the classical real Jacobi rotation, so the working matrix stays
/// Hermitian throughout.
pub fn hermitian_eig(m: &ComplexMatrix, tol: &TolerancePolicy) -> Result<HermitianEigen, NumericsError> {
    if !m.is_square() {
        return Err(NumericsError::NotSquare { rows: m.rows, cols: m.cols });
    }
    let dev = m.self_adjoint_deviation();
    if dev > tol.eps_eq {
        return Err(NumericsError::NotSelfAdjoint(dev));
    }
    let n = m.rows;
    // symmetrise so that round-off in the input does not leak into the sweeps
    let mut a = ComplexMatrix::from_fn(n, n, |r, c| (m[(r, c)] + m[(c, r)].conj()) * 0.5);
    let mut q = ComplexMatrix::identity(n);

    let scale = a.frobenius_norm();
    let target = f64::EPSILON * scale;
    let mut converged = n <= 1 || scale == 0.0;
    let mut sweep = 0;
    while !converged {
        if sweep == JACOBI_SWEEP_BUDGET {
            return Err(NumericsError::NoConvergence(JACOBI_SWEEP_BUDGET));
        }
        sweep += 1;
        for p in 0..n - 1 {
            for qi in p + 1..n {
                rotate(&mut a, &mut q, p, qi);
            }
        }
        converged = off_diagonal_norm(&a) <= target;
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].re.total_cmp(&a[(j, j)].re));
    let eigenvalues = order.iter().map(|&i| a[(i, i)].re).collect();
    let vectors = ComplexMatrix::from_fn(n, n, |r, c| q[(r, order[c])]);
    Ok(HermitianEigen { eigenvalues, vectors })
}

fn off_diagonal_norm(a: &ComplexMatrix) -> f64 {
    let mut s = 0.0;
    for r in 0..a.rows {
        for c in 0..a.cols {
            if r != c {
                s += a[(r, c)].norm_sqr();
            }
        }
    }
    s.sqrt()
}

fn rotate(a: &mut ComplexMatrix, q: &mut ComplexMatrix, p: usize, r: usize) {
    let apq = a[(p, r)];
    let g = apq.norm();
    if g == 0.0 {
        return;
    }
    let app = a[(p, p)].re;
    let arr = a[(r, r)].re;
    let phase = apq / g;
    let tau = (arr - app) / (2.0 * g);
    let t = if tau >= 0.0 { 1.0 / (tau + (1.0 + tau * tau).sqrt()) } else { -1.0 / (-tau + (1.0 + tau * tau).sqrt()) };
    let c = 1.0 / (1.0 + t * t).sqrt();
    let s = t * c;
    // J = diag(1, conj(phase)) * [[c, s], [-s, c]] restricted to (p, r)
    let jpp = Complex64::new(c, 0.0);
    let jpr = Complex64::new(s, 0.0);
    let jrp = -phase.conj() * s;
    let jrr = phase.conj() * c;

    let n = a.rows;
    // A <- A J
    for k in 0..n {
        let akp = a[(k, p)];
        let akr = a[(k, r)];
        a[(k, p)] = akp * jpp + akr * jrp;
        a[(k, r)] = akp * jpr + akr * jrr;
    }
    // A <- J* A
    for k in 0..n {
        let apk = a[(p, k)];
        let ark = a[(r, k)];
        a[(p, k)] = jpp.conj() * apk + jrp.conj() * ark;
        a[(r, k)] = jpr.conj() * apk + jrr.conj() * ark;
    }
    a[(p, r)] = ZERO;
    a[(r, p)] = ZERO;
    a[(p, p)].im = 0.0;
    a[(r, r)].im = 0.0;
    // Q <- Q J
    for k in 0..n {
        let qkp = q[(k, p)];
        let qkr = q[(k, r)];
        q[(k, p)] = qkp * jpp + qkr * jrp;
        q[(k, r)] = qkp * jpr + qkr * jrr;
    }
}

/// `true` iff `M*M = I` within `eps_eq` in the max norm. Non-square input is
/// never unitary.
pub fn is_unitary(m: &ComplexMatrix, tol: &TolerancePolicy) -> bool {
    unitarity_defect(m) <= tol.eps_eq
}

/// `‖M*M − I‖_max`, or infinity for non-square input.
pub fn unitarity_defect(m: &ComplexMatrix) -> f64 {
    if !m.is_square() {
        return f64::INFINITY;
    }
    (&m.adjoint() * m).max_abs_diff(&ComplexMatrix::identity(m.rows))
}

/// Numerical rank of a family of equally-shaped matrices viewed as flat
/// vectors: eigenvalues of the Gram matrix at or below
/// `eps_rank · λ_max` count as zero.
pub fn numerical_rank(vectors: &[ComplexMatrix], tol: &TolerancePolicy) -> usize {
    if vectors.is_empty() {
        return 0;
    }
    let k = vectors.len();
    let gram = ComplexMatrix::from_fn(k, k, |i, j| vectors[i].inner(&vectors[j]));
    let eig = match hermitian_eig(&gram, &TolerancePolicy { eps_eq: f64::INFINITY, ..*tol }) {
        Ok(e) => e,
        Err(_) => return 0,
    };
    let top = eig.eigenvalues.last().copied().unwrap_or(0.0);
    if top <= 0.0 {
        return 0;
    }
    eig.eigenvalues.iter().filter(|&&l| l > tol.eps_rank * top).count()
}

/// Basis of the commutant `{X : XA = AX for every generator A}` of a family
/// of `n × n` matrices, orthonormal in the Frobenius inner product.
///
/// The linear constraints `XA − AX = 0` are accumulated into the Hermitian
/// normal matrix `G = Σ L_A* L_A` on the `n²` unknowns of `X`; the commutant
/// is the eigenspace of `G` for eigenvalues at or below `eps_rank · λ_max`.
pub fn commutant_basis(
    generators: &[ComplexMatrix],
    n: usize,
    tol: &TolerancePolicy,
) -> Result<Vec<ComplexMatrix>, NumericsError> {
    for g in generators {
        if g.rows != n || g.cols != n {
            return Err(NumericsError::DimensionMismatch { expected: n, rows: g.rows, cols: g.cols });
        }
    }
    let unknowns = n * n;
    let mut normal = ComplexMatrix::zeros(unknowns, unknowns);
    let mut row: Vec<(usize, Complex64)> = Vec::with_capacity(2 * n);
    for a in generators {
        for i in 0..n {
            for j in 0..n {
                // (XA − AX)_{ij} = Σ_k X_{ik} A_{kj} − Σ_k A_{ik} X_{kj}
                row.clear();
                for k in 0..n {
                    push_coeff(&mut row, i * n + k, a[(k, j)]);
                    push_coeff(&mut row, k * n + j, -a[(i, k)]);
                }
                for &(u, cu) in &row {
                    for &(v, cv) in &row {
                        normal[(u, v)] += cu.conj() * cv;
                    }
                }
            }
        }
    }
    let eig = hermitian_eig(&normal, &TolerancePolicy { eps_eq: f64::INFINITY, ..*tol })?;
    // Scalar generators leave only rounding noise in `normal`, so the cutoff is
    // floored by the generators' own scale rather than taken relative to noise.
    let top = eig.eigenvalues.last().copied().unwrap_or(0.0).max(0.0);
    let scale = generators.iter().map(|g| g.frobenius_norm().powi(2)).fold(top, f64::max);
    let cutoff = tol.eps_rank * scale;
    Ok(eig
        .eigenvalues
        .iter()
        .enumerate()
        .filter(|(_, &l)| scale == 0.0 || l <= cutoff)
        .map(|(idx, _)| ComplexMatrix::from_fn(n, n, |r, c| eig.vectors[(r * n + c, idx)]))
        .collect())
}

fn push_coeff(row: &mut Vec<(usize, Complex64)>, unknown: usize, coeff: Complex64) {
    if coeff == ZERO {
        return;
    }
    match row.iter_mut().find(|(u, _)| *u == unknown) {
        Some((_, c)) => *c += coeff,
        None => row.push((unknown, coeff)),
    }
}

/// Orthonormal basis (Frobenius inner product) of the span of a family of
/// equally-shaped matrices, used for span-membership residuals.
#[derive(Debug, Clone)]
pub struct SpanProjector {
    basis: Vec<ComplexMatrix>,
}

impl SpanProjector {
    /// Modified Gram–Schmidt with one re-orthogonalisation pass. A vector is
    /// dropped when its residual norm falls to `sqrt(eps_rank)` of its
    /// original norm, matching the Gram-eigenvalue threshold of
    /// [`numerical_rank`].
    pub fn new(vectors: &[ComplexMatrix], tol: &TolerancePolicy) -> Self {
        let drop = tol.eps_rank.sqrt();
        let mut basis: Vec<ComplexMatrix> = Vec::new();
        for v in vectors {
            let norm0 = v.frobenius_norm();
            if norm0 == 0.0 {
                continue;
            }
            let mut w = v.clone();
            for _ in 0..2 {
                for b in &basis {
                    let coeff = b.inner(&w);
                    w = &w - &b.scale(coeff);
                }
            }
            let norm = w.frobenius_norm();
            if norm > drop * norm0 {
                basis.push(w.scale(Complex64::new(1.0 / norm, 0.0)));
            }
        }
        Self { basis }
    }

    pub fn dimension(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[ComplexMatrix] {
        &self.basis
    }

    pub fn project(&self, m: &ComplexMatrix) -> ComplexMatrix {
        let mut out = ComplexMatrix::zeros(m.rows, m.cols);
        for b in &self.basis {
            out = &out + &b.scale(b.inner(m));
        }
        out
    }

    /// Max-norm distance from `m` to the span.
    pub fn residual(&self, m: &ComplexMatrix) -> f64 {
        m.max_abs_diff(&self.project(m))
    }
}
