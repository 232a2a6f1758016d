//! Finite discrete measure spaces and the abelian algebras of multiplication
//! operators that are constant on the blocks of a partition.
//!
//! Operators on `L²(X, μ)` are represented in the orthonormal point basis
//! `e_x = δ_x / √μ({x})`, so multiplication operators are diagonal no matter
//! what the point masses are.

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numerics::{commutant_basis, numerical_rank, ComplexMatrix, SpanProjector, TolerancePolicy, ONE, ZERO};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DiscreteError {
    #[error("a discrete space needs at least one point")]
    Empty,
    #[error("point mass at {index} must be positive and finite, got {weight}")]
    BadWeight { index: usize, weight: f64 },
    #[error("block {0} is empty")]
    EmptyBlock(usize),
    #[error("point {0} is outside 0..{1}")]
    PointOutOfRange(usize, usize),
    #[error("point {0} appears in more than one block")]
    Overlap(usize),
    #[error("point {0} is not covered by any block")]
    Uncovered(usize),
    #[error("length mismatch: expected {expected}, got {found}")]
    LengthMismatch { expected: usize, found: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct DiscreteSpace {
    weights: Vec<f64>,
}

impl DiscreteSpace {
    pub fn new(weights: Vec<f64>) -> Result<Self, DiscreteError> {
        if weights.is_empty() {
            return Err(DiscreteError::Empty);
        }
        if let Some((index, &weight)) = weights.iter().enumerate().find(|(_, w)| !(w.is_finite() && **w > 0.0)) {
            return Err(DiscreteError::BadWeight { index, weight });
        }
        Ok(Self { weights })
    }

    pub fn counting(n: usize) -> Result<Self, DiscreteError> {
        Self::new(vec![1.0; n])
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn mass(&self, x: usize) -> f64 {
        self.weights[x]
    }
}

impl TryFrom<Vec<f64>> for DiscreteSpace {
    type Error = DiscreteError;
    fn try_from(w: Vec<f64>) -> Result<Self, Self::Error> {
        Self::new(w)
    }
}

impl From<DiscreteSpace> for Vec<f64> {
    fn from(s: DiscreteSpace) -> Self {
        s.weights
    }
}

/// Disjoint nonempty blocks covering `0..n`. Points inside each block are
/// kept in ascending order; block labels are the positions in the list.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockPartition {
    blocks: Vec<Vec<usize>>,
    owner: Vec<usize>,
}

impl BlockPartition {
    pub fn new(blocks: Vec<Vec<usize>>, n: usize) -> Result<Self, DiscreteError> {
        let mut owner = vec![usize::MAX; n];
        let mut sorted = Vec::with_capacity(blocks.len());
        for (label, mut block) in blocks.into_iter().enumerate() {
            if block.is_empty() {
                return Err(DiscreteError::EmptyBlock(label));
            }
            block.sort_unstable();
            for &x in &block {
                if x >= n {
                    return Err(DiscreteError::PointOutOfRange(x, n));
                }
                if owner[x] != usize::MAX {
                    return Err(DiscreteError::Overlap(x));
                }
                owner[x] = label;
            }
            sorted.push(block);
        }
        if let Some(x) = owner.iter().position(|&o| o == usize::MAX) {
            return Err(DiscreteError::Uncovered(x));
        }
        Ok(Self { blocks: sorted, owner })
    }

    pub fn singletons(n: usize) -> Self {
        Self { blocks: (0..n).map(|x| vec![x]).collect(), owner: (0..n).collect() }
    }

    pub fn whole(n: usize) -> Self {
        Self { blocks: vec![(0..n).collect()], owner: vec![0; n] }
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    pub fn block(&self, label: usize) -> &[usize] {
        &self.blocks[label]
    }

    pub fn num_blocks(&self) -> usize {
        self.blocks.len()
    }

    pub fn num_points(&self) -> usize {
        self.owner.len()
    }

    pub fn block_of(&self, x: usize) -> usize {
        self.owner[x]
    }

    /// Diagonal 0/1 projection onto the span of a block's points.
    pub fn projection(&self, label: usize) -> ComplexMatrix {
        let mut diag = vec![ZERO; self.num_points()];
        for &x in &self.blocks[label] {
            diag[x] = ONE;
        }
        ComplexMatrix::diagonal(&diag)
    }
}

/// The algebra `{M_f : f constant on each block}` over a discrete space.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockAlgebra {
    space: DiscreteSpace,
    partition: BlockPartition,
}

impl BlockAlgebra {
    pub fn new(space: DiscreteSpace, partition: BlockPartition) -> Result<Self, DiscreteError> {
        if space.len() != partition.num_points() {
            return Err(DiscreteError::LengthMismatch { expected: space.len(), found: partition.num_points() });
        }
        Ok(Self { space, partition })
    }

    pub fn space(&self) -> &DiscreteSpace {
        &self.space
    }

    pub fn partition(&self) -> &BlockPartition {
        &self.partition
    }

    pub fn n(&self) -> usize {
        self.space.len()
    }

    /// Linear dimension of the algebra, i.e. the number of blocks.
    pub fn dimension(&self) -> usize {
        self.partition.num_blocks()
    }
}

/// A bounded function on a finite space, one complex value per point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundedFunction(pub Vec<Complex64>);

impl BoundedFunction {
    pub fn real(values: &[f64]) -> Self {
        Self(values.iter().map(|&v| Complex64::new(v, 0.0)).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

pub fn multiplication_operator(f: &BoundedFunction, space: &DiscreteSpace) -> Result<ComplexMatrix, DiscreteError> {
    if f.len() != space.len() {
        return Err(DiscreteError::LengthMismatch { expected: space.len(), found: f.len() });
    }
    Ok(ComplexMatrix::diagonal(&f.0))
}

/// One block-indicator projection per block, in label order.
pub fn algebra_basis(algebra: &BlockAlgebra) -> Vec<ComplexMatrix> {
    (0..algebra.dimension()).map(|j| algebra.partition.projection(j)).collect()
}

/// Outcome of the masa oracle, kept for reporting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MasaCheck {
    pub self_adjoint: bool,
    pub abelian: bool,
    pub unital: bool,
    pub rank: usize,
    pub commutant_dimension: usize,
    pub is_masa: bool,
}

pub fn check_masa(basis: &[ComplexMatrix], n: usize, tol: &TolerancePolicy) -> MasaCheck {
    let shaped = basis.iter().all(|b| b.rows() == n && b.cols() == n);
    let span = SpanProjector::new(basis, tol);
    let self_adjoint = shaped && basis.iter().all(|b| span.residual(&b.adjoint()) <= tol.eps_eq);
    let abelian = shaped
        && basis
            .iter()
            .enumerate()
            .all(|(i, a)| basis[i + 1..].iter().all(|b| a.commutator(b).max_abs() <= tol.eps_eq));
    let unital = shaped && span.residual(&ComplexMatrix::identity(n)) <= tol.eps_eq;
    let rank = numerical_rank(basis, tol);
    let commutant_dimension =
        if shaped { commutant_basis(basis, n, tol).map(|c| c.len()).unwrap_or(usize::MAX) } else { usize::MAX };
    let is_masa = self_adjoint && abelian && unital && commutant_dimension == rank;
    MasaCheck { self_adjoint, abelian, unital, rank, commutant_dimension, is_masa }
}

/// `true` iff the span of `basis` is a maximal abelian self-adjoint algebra
/// of `n × n` matrices.
pub fn is_masa(basis: &[ComplexMatrix], n: usize, tol: &TolerancePolicy) -> bool {
    check_masa(basis, n, tol).is_masa
}

/// Exact-equality key for a complex value; folds `-0.0` into `0.0`.
fn value_key(z: Complex64) -> (u64, u64) {
    ((z.re + 0.0).to_bits(), (z.im + 0.0).to_bits())
}

/// Finds a bijection `σ` of the points with `g(x) = f(σ(x))` for every `x`,
/// matching equal values in ascending point order. `None` when the value
/// multiplicities of `f` and `g` differ.
pub fn multiplicity_match(f: &BoundedFunction, g: &BoundedFunction) -> Option<Vec<usize>> {
    if f.len() != g.len() {
        return None;
    }
    let mut pools: BTreeMap<(u64, u64), Vec<usize>> = BTreeMap::new();
    for (x, &v) in f.0.iter().enumerate().rev() {
        pools.entry(value_key(v)).or_default().push(x);
    }
    let mut sigma = Vec::with_capacity(g.len());
    for &v in &g.0 {
        sigma.push(pools.get_mut(&value_key(v))?.pop()?);
    }
    Some(sigma)
}

/// As [`multiplicity_match`], but values within `value_tol` of a cluster
/// representative are treated as equal. Clusters are formed greedily from
/// `f` in point order.
pub fn multiplicity_match_with_tol(f: &BoundedFunction, g: &BoundedFunction, value_tol: f64) -> Option<Vec<usize>> {
    if f.len() != g.len() {
        return None;
    }
    let mut reps: Vec<Complex64> = Vec::new();
    let mut pools: Vec<Vec<usize>> = Vec::new();
    for (x, &v) in f.0.iter().enumerate() {
        match reps.iter().position(|&r| (r - v).norm() <= value_tol) {
            Some(k) => pools[k].push(x),
            None => {
                reps.push(v);
                pools.push(vec![x]);
            }
        }
    }
    for pool in &mut pools {
        pool.reverse();
    }
    let mut sigma = Vec::with_capacity(g.len());
    for &v in &g.0 {
        let k = reps.iter().position(|&r| (r - v).norm() <= value_tol)?;
        sigma.push(pools[k].pop()?);
    }
    Some(sigma)
}

/// Permutation matrix `P_σ` with `P_σ e_x = e_{σ(x)}`.
pub fn permutation_matrix(sigma: &[usize]) -> ComplexMatrix {
    let n = sigma.len();
    let mut p = ComplexMatrix::zeros(n, n);
    for (x, &y) in sigma.iter().enumerate() {
        p[(y, x)] = ONE;
    }
    p
}
