//! Construction of a `U`-invariant masa containing a block algebra.
//!
//! Given `U* A U = A` for a block algebra `A`, the unitary splits as
//! `U = V W` with `V` block-diagonal and `W` a weighted composition operator
//! that carries blocks onto blocks. `W` induces a permutation `π` of the
//! block labels; on each cycle of `π` the compression of `U^{n_k}` to the
//! base block is unitary, its eigenbasis spans an invariant masa there, and
//! powers of `U*` transport that masa around the rest of the cycle.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::discrete::{algebra_basis, check_masa, BlockAlgebra, DiscreteError, DiscreteSpace, MasaCheck};
use crate::numerics::{
    hermitian_eig, numerical_rank, unitarity_defect, ComplexMatrix, NumericsError, SpanProjector, TolerancePolicy, ZERO,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EmbedError {
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error(transparent)]
    Discrete(#[from] DiscreteError),
    #[error("operator is not unitary (‖U*U − I‖ = {0:e})")]
    NotUnitary(f64),
    #[error("operator size {found} does not match the {expected}-point space")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("algebra is not invariant under conjugation (residual {residual:e})")]
    NotInvariant { residual: f64 },
    #[error("block {from} ({from_size} points) cannot be carried onto block {to} ({to_size} points)")]
    BlockSizeMismatch { from: usize, to: usize, from_size: usize, to_size: usize },
    #[error("map is not a permutation of 0..{0}")]
    NotAPermutation(usize),
    #[error("conjugation closure did not stabilise within {0} rounds")]
    IterationBudgetExceeded(usize),
}

fn check_permutation(map: &[usize]) -> Result<(), EmbedError> {
    let mut seen = vec![false; map.len()];
    for &y in map {
        if y >= map.len() || std::mem::replace(&mut seen[y], true) {
            return Err(EmbedError::NotAPermutation(map.len()));
        }
    }
    Ok(())
}

/// Radon–Nikodym derivative `h = dμ/dν` of the point masses against the
/// pushforward `ν = μ ∘ φ⁻¹`, i.e. `h(x) = μ({x}) / μ({φ⁻¹(x)})`.
pub fn radon_nikodym_weights(space: &DiscreteSpace, bijection: &[usize]) -> Result<Vec<f64>, EmbedError> {
    if bijection.len() != space.len() {
        return Err(EmbedError::DimensionMismatch { expected: space.len(), found: bijection.len() });
    }
    check_permutation(bijection)?;
    let mut nu = vec![0.0; space.len()];
    for (x, &y) in bijection.iter().enumerate() {
        nu[y] = space.mass(x);
    }
    Ok((0..space.len()).map(|x| space.mass(x) / nu[x]).collect())
}

/// `W f = (√h · f) ∘ φ` on `L²(X, μ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedCompositionOperator {
    bijection: Vec<usize>,
    density: Vec<f64>,
    masses: Vec<f64>,
}

impl WeightedCompositionOperator {
    pub fn new(space: &DiscreteSpace, bijection: Vec<usize>) -> Result<Self, EmbedError> {
        let density = radon_nikodym_weights(space, &bijection)?;
        Ok(Self { bijection, density, masses: space.weights().to_vec() })
    }

    pub fn bijection(&self) -> &[usize] {
        &self.bijection
    }

    /// The Radon–Nikodym derivative `h`.
    pub fn density(&self) -> &[f64] {
        &self.density
    }

    /// `√h`, the multiplier applied before composing.
    pub fn weights(&self) -> Vec<f64> {
        self.density.iter().map(|h| h.sqrt()).collect()
    }

    /// Pushforward masses `ν({x}) = μ({φ⁻¹(x)})`.
    pub fn pushforward(&self) -> Vec<f64> {
        let mut nu = vec![0.0; self.masses.len()];
        for (x, &y) in self.bijection.iter().enumerate() {
            nu[y] = self.masses[x];
        }
        nu
    }

    /// Acts on a function given by its point values.
    pub fn apply(&self, f: &[Complex64]) -> Vec<Complex64> {
        self.bijection.iter().map(|&y| f[y] * self.density[y].sqrt()).collect()
    }

    /// Squared `L²(μ)` norm of a function given by point values.
    pub fn l2_norm_sqr(&self, f: &[Complex64]) -> f64 {
        f.iter().zip(&self.masses).map(|(z, m)| z.norm_sqr() * m).sum()
    }

    /// Matrix in the orthonormal basis `δ_x / √μ({x})`:
    /// `W_{xy} = √μ_x · √h(y) / √μ_y` when `φ(x) = y`.
    pub fn matrix(&self) -> ComplexMatrix {
        let n = self.masses.len();
        let mut m = ComplexMatrix::zeros(n, n);
        for (x, &y) in self.bijection.iter().enumerate() {
            let entry = (self.masses[x] * self.density[y] / self.masses[y]).sqrt();
            m[(x, y)] = Complex64::new(entry, 0.0);
        }
        m
    }
}

/// A cycle of the block permutation: `labels[r] = π^r(labels[0])`, with the
/// smallest label first.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cycle {
    pub labels: Vec<usize>,
}

impl Cycle {
    pub fn base(&self) -> usize {
        self.labels[0]
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

pub fn cycle_decomposition(pi: &[usize]) -> Vec<Cycle> {
    let mut seen = vec![false; pi.len()];
    let mut cycles = Vec::new();
    for start in 0..pi.len() {
        if seen[start] {
            continue;
        }
        let mut labels = Vec::new();
        let mut j = start;
        while !seen[j] {
            seen[j] = true;
            labels.push(j);
            j = pi[j];
        }
        cycles.push(Cycle { labels });
    }
    cycles
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InvarianceReport {
    pub invariant_subset: bool,
    pub invariant_equal: bool,
    pub residual: f64,
}

fn check_operator(algebra: &BlockAlgebra, u: &ComplexMatrix) -> Result<(), EmbedError> {
    if u.rows() != algebra.n() || u.cols() != algebra.n() {
        return Err(EmbedError::DimensionMismatch { expected: algebra.n(), found: u.rows().max(u.cols()) });
    }
    Ok(())
}

/// Tests `U* A U ⊆ A` (and equality) on the block-indicator basis.
pub fn check_invariance(
    algebra: &BlockAlgebra,
    u: &ComplexMatrix,
    tol: &TolerancePolicy,
) -> Result<InvarianceReport, EmbedError> {
    check_operator(algebra, u)?;
    let defect = unitarity_defect(u);
    if defect > tol.eps_eq {
        return Err(EmbedError::NotUnitary(defect));
    }
    let basis = algebra_basis(algebra);
    let span = SpanProjector::new(&basis, tol);
    let u_adj = u.adjoint();
    let conjugated: Vec<_> = basis.iter().map(|p| &(&u_adj * p) * u).collect();
    let residual = conjugated.iter().map(|c| span.residual(c)).fold(0.0, f64::max);
    let invariant_subset = residual <= tol.eps_eq;
    let invariant_equal = invariant_subset && numerical_rank(&conjugated, tol) == basis.len();
    Ok(InvarianceReport { invariant_subset, invariant_equal, residual })
}

#[derive(Debug, Clone)]
pub struct UnitaryFactorization {
    /// Block-diagonal factor, in the commutant of the algebra.
    pub v: ComplexMatrix,
    pub w: WeightedCompositionOperator,
    /// `w` as a matrix in the orthonormal point basis.
    pub w_matrix: ComplexMatrix,
    /// Block permutation: `φ(X_j) = X_{π(j)}`.
    pub pi: Vec<usize>,
    pub cycles: Vec<Cycle>,
    /// `‖U − V W‖_max`.
    pub residual: f64,
}

/// Splits `U = V W`. The block permutation is read off from
/// `U* P_k U = P_m ⇔ π(k) = m`; `φ` then maps each block onto its image in
/// ascending point order and `V = U W*`.
pub fn factor_unitary(
    algebra: &BlockAlgebra,
    u: &ComplexMatrix,
    tol: &TolerancePolicy,
) -> Result<UnitaryFactorization, EmbedError> {
    let report = check_invariance(algebra, u, tol)?;
    if !report.invariant_equal {
        return Err(EmbedError::NotInvariant { residual: report.residual });
    }
    let partition = algebra.partition();
    let nb = partition.num_blocks();
    let projections = algebra_basis(algebra);
    let u_adj = u.adjoint();

    let mut pi = vec![usize::MAX; nb];
    let mut taken = vec![false; nb];
    for (k, pk) in projections.iter().enumerate() {
        let image = &(&u_adj * pk) * u;
        let (m, dist) = projections
            .iter()
            .enumerate()
            .map(|(m, pm)| (m, image.max_abs_diff(pm)))
            .fold((usize::MAX, f64::INFINITY), |best, cur| if cur.1 < best.1 { cur } else { best });
        if dist > tol.eps_eq || taken[m] {
            return Err(EmbedError::NotInvariant { residual: dist });
        }
        taken[m] = true;
        pi[k] = m;
    }

    let mut phi = vec![0; algebra.n()];
    for (j, &k) in pi.iter().enumerate() {
        let (from, to) = (partition.block(j), partition.block(k));
        if from.len() != to.len() {
            return Err(EmbedError::BlockSizeMismatch { from: j, to: k, from_size: from.len(), to_size: to.len() });
        }
        for (&x, &y) in from.iter().zip(to) {
            phi[x] = y;
        }
    }
    let w = WeightedCompositionOperator::new(algebra.space(), phi)?;
    let w_matrix = w.matrix();
    let v = u * &w_matrix.adjoint();
    let block_leak = projections.iter().map(|p| v.commutator(p).max_abs()).fold(0.0, f64::max);
    if block_leak > tol.eps_eq {
        return Err(EmbedError::NotInvariant { residual: block_leak });
    }
    let residual = u.max_abs_diff(&(&v * &w_matrix));
    let cycles = cycle_decomposition(&pi);
    Ok(UnitaryFactorization { v, w, w_matrix, pi, cycles, residual })
}

/// Orthonormal eigenbasis (as columns) of a unitary matrix, obtained from
/// the Hermitian solver alone: diagonalise `H = (C + C*)/2`, then inside
/// every cluster of nearly equal `H`-eigenvalues diagonalise the compressed
/// `K = (C − C*)/2i`. `H` and `K` commute because `C` is normal.
pub fn unitary_eigenbasis(c: &ComplexMatrix, tol: &TolerancePolicy) -> Result<ComplexMatrix, NumericsError> {
    let n = c.rows();
    let c_adj = c.adjoint();
    let hermitian = (c + &c_adj).scale(Complex64::new(0.5, 0.0));
    let skew = (c - &c_adj).scale(Complex64::new(0.0, -0.5));
    let loose = TolerancePolicy { eps_eq: f64::INFINITY, ..*tol };
    let eig = hermitian_eig(&hermitian, &loose)?;
    let mut q = eig.vectors;
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && eig.eigenvalues[end] - eig.eigenvalues[end - 1] <= tol.eps_rank {
            end += 1;
        }
        if end - start > 1 {
            let cols: Vec<Vec<Complex64>> = (start..end).map(|j| q.column_vec(j)).collect();
            let qc = ComplexMatrix::from_fn(n, cols.len(), |r, j| cols[j][r]);
            let kc = &(&qc.adjoint() * &skew) * &qc;
            let inner = hermitian_eig(&kc, &loose)?;
            let rotated = &qc * &inner.vectors;
            for j in 0..cols.len() {
                q.set_column(start + j, &rotated.column_vec(j));
            }
        }
        start = end;
    }
    Ok(q)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub masa: MasaCheck,
    /// Max distance from a block-indicator of `A` to the span of the masa.
    pub containment_residual: f64,
    pub contains_algebra: bool,
    /// Max distance from `U* p U` to the span of the masa, over masa projections `p`.
    pub invariance_residual: f64,
    pub invariant: bool,
    /// `‖Σ p − I‖_max` plus the largest pairwise product `‖p q‖_max`.
    pub orthogonality_residual: f64,
    /// Largest wrap-around defect `‖(U*)^{n_k} p U^{n_k} − p‖_max` over base-block projections.
    pub cycle_residual: f64,
    pub factorization_residual: f64,
    pub passed: bool,
}

#[derive(Debug, Clone)]
pub struct MasaResult {
    /// Unit vectors `w` whose projections `w w*` span the masa.
    pub vectors: Vec<Vec<Complex64>>,
    pub projections: Vec<ComplexMatrix>,
    pub factorization: UnitaryFactorization,
    pub certificate: Certificate,
}

pub fn invariant_masa_embed(
    algebra: &BlockAlgebra,
    u: &ComplexMatrix,
    tol: &TolerancePolicy,
) -> Result<MasaResult, EmbedError> {
    let factorization = factor_unitary(algebra, u, tol)?;
    let n = algebra.n();
    let partition = algebra.partition();
    let u_adj = u.adjoint();

    let mut vectors = Vec::with_capacity(n);
    let mut cycle_residual: f64 = 0.0;
    for cycle in &factorization.cycles {
        let base = partition.block(cycle.base());
        let power = u.pow(cycle.len());
        let compression = power.compress(base);
        let eigvecs = unitary_eigenbasis(&compression, tol)?;
        for col in 0..base.len() {
            let mut v = vec![ZERO; n];
            for (i, &x) in base.iter().enumerate() {
                v[x] = eigvecs[(i, col)];
            }
            let p = ComplexMatrix::outer(&v, &v);
            let wrapped = &(&power.adjoint() * &p) * &power;
            cycle_residual = cycle_residual.max(wrapped.max_abs_diff(&p));
            // (U*)^r carries the base block through the rest of the cycle
            for _ in 0..cycle.len() {
                let next = u_adj.mul_vec(&v);
                vectors.push(std::mem::replace(&mut v, next));
            }
        }
    }

    let projections: Vec<_> = vectors.iter().map(|v| ComplexMatrix::outer(v, v)).collect();
    let certificate = certify(algebra, u, &projections, tol, cycle_residual, factorization.residual);
    Ok(MasaResult { vectors, projections, factorization, certificate })
}

fn certify(
    algebra: &BlockAlgebra,
    u: &ComplexMatrix,
    projections: &[ComplexMatrix],
    tol: &TolerancePolicy,
    cycle_residual: f64,
    factorization_residual: f64,
) -> Certificate {
    let n = algebra.n();
    let masa = check_masa(projections, n, tol);
    let span = SpanProjector::new(projections, tol);
    let containment_residual = algebra_basis(algebra).iter().map(|p| span.residual(p)).fold(0.0, f64::max);
    let u_adj = u.adjoint();
    let invariance_residual = projections.iter().map(|p| span.residual(&(&(&u_adj * p) * u))).fold(0.0, f64::max);

    let mut sum = ComplexMatrix::zeros(n, n);
    let mut cross: f64 = 0.0;
    for (i, p) in projections.iter().enumerate() {
        sum = &sum + p;
        for q in &projections[i + 1..] {
            cross = cross.max((p * q).max_abs());
        }
    }
    let orthogonality_residual = sum.max_abs_diff(&ComplexMatrix::identity(n)) + cross;

    let contains_algebra = containment_residual <= tol.eps_eq;
    let invariant = invariance_residual <= tol.eps_eq;
    let passed = masa.is_masa
        && masa.rank == n
        && contains_algebra
        && invariant
        && orthogonality_residual <= tol.eps_eq
        && cycle_residual <= tol.eps_eq
        && factorization_residual <= tol.eps_eq;
    Certificate {
        masa,
        containment_residual,
        contains_algebra,
        invariance_residual,
        invariant,
        orthogonality_residual,
        cycle_residual,
        factorization_residual,
        passed,
    }
}

#[derive(Debug, Clone)]
pub struct ClosureResult {
    /// Frobenius-orthonormal basis of the closed algebra.
    pub basis: Vec<ComplexMatrix>,
    pub rank: usize,
    /// Conjugation rounds performed, including the final one that added nothing.
    pub iterations: usize,
    pub abelian: bool,
    pub self_adjoint: bool,
    /// Max distance of `U* b U` and `U b U*` from the span, over basis elements `b`.
    pub equality_residual: f64,
}

/// Smallest algebra containing `A` that is closed under `X ↦ U X U*`:
/// repeatedly adjoin conjugates and close under products and adjoints until
/// the numerical rank stops growing.
pub fn conjugation_closure(
    algebra: &BlockAlgebra,
    u: &ComplexMatrix,
    max_iter: usize,
    tol: &TolerancePolicy,
) -> Result<ClosureResult, EmbedError> {
    let report = check_invariance(algebra, u, tol)?;
    if !report.invariant_subset {
        return Err(EmbedError::NotInvariant { residual: report.residual });
    }
    let u_adj = u.adjoint();
    let mut span = SpanProjector::new(&algebra_basis(algebra), tol);
    let mut iterations = 0;
    loop {
        if iterations == max_iter {
            return Err(EmbedError::IterationBudgetExceeded(max_iter));
        }
        iterations += 1;
        let before = span.dimension();
        let mut family: Vec<ComplexMatrix> = span.basis().to_vec();
        family.extend(span.basis().iter().map(|b| &(u * b) * &u_adj));
        span = close_under_products(&family, tol);
        if span.dimension() == before {
            break;
        }
    }

    let basis = span.basis().to_vec();
    let abelian =
        basis.iter().enumerate().all(|(i, a)| basis[i + 1..].iter().all(|b| a.commutator(b).max_abs() <= tol.eps_eq));
    let self_adjoint = basis.iter().all(|b| span.residual(&b.adjoint()) <= tol.eps_eq);
    let equality_residual = basis
        .iter()
        .flat_map(|b| [&(&u_adj * b) * u, &(u * b) * &u_adj])
        .map(|m| span.residual(&m))
        .fold(0.0, f64::max);
    Ok(ClosureResult { rank: basis.len(), basis, iterations, abelian, self_adjoint, equality_residual })
}

fn close_under_products(family: &[ComplexMatrix], tol: &TolerancePolicy) -> SpanProjector {
    let mut members = family.to_vec();
    members.extend(family.iter().map(ComplexMatrix::adjoint));
    let mut span = SpanProjector::new(&members, tol);
    loop {
        let basis = span.basis().to_vec();
        let mut grown = basis.clone();
        for a in &basis {
            for b in &basis {
                grown.push(a * b);
            }
        }
        let next = SpanProjector::new(&grown, tol);
        if next.dimension() == span.dimension() {
            return span;
        }
        span = next;
    }
}
