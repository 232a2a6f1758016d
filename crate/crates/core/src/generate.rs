//! Random instances `(A, U)` with `U* A U = A`, built as `U = V₀ W₀` from a
//! random block-diagonal unitary and a block-permuting composition operator.

use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

use crate::discrete::{BlockAlgebra, BlockPartition, DiscreteSpace};
use crate::embedding::{cycle_decomposition, WeightedCompositionOperator};
use crate::numerics::ComplexMatrix;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GenerateError {
    #[error("inconsistent instance spec: {0}")]
    InconsistentSpec(String),
}

/// What to build: block sizes (in label order), the block permutation `π`
/// (`φ(X_j) = X_{π(j)}`), and optional point masses.
#[derive(Debug, Clone, PartialEq)]
pub struct InstanceSpec {
    pub block_sizes: Vec<usize>,
    pub pi: Vec<usize>,
    /// `None` draws masses uniformly from `[0.5, 2)`.
    pub weights: Option<Vec<f64>>,
    /// Use `V₀ = I`, so `U` is a pure composition operator.
    pub trivial_v: bool,
    /// Scatter points over blocks instead of laying blocks out contiguously.
    pub shuffle_points: bool,
}

#[derive(Debug, Clone)]
pub struct GeneratedInstance {
    pub algebra: BlockAlgebra,
    pub unitary: ComplexMatrix,
    pub pi: Vec<usize>,
    pub v0: ComplexMatrix,
    pub w0: ComplexMatrix,
}

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Haar-like random unitary: Gram–Schmidt on a complex Gaussian matrix.
pub fn random_unitary<R: Rng + ?Sized>(n: usize, rng: &mut R) -> ComplexMatrix {
    loop {
        let mut cols: Vec<Vec<Complex64>> = (0..n)
            .map(|_| (0..n).map(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))).collect())
            .collect();
        let mut ok = true;
        for j in 0..n {
            for _ in 0..2 {
                for i in 0..j {
                    let coeff: Complex64 = cols[i].iter().zip(&cols[j]).map(|(a, b)| a.conj() * b).sum();
                    let prev = cols[i].clone();
                    for (x, p) in cols[j].iter_mut().zip(prev) {
                        *x -= coeff * p;
                    }
                }
            }
            let norm = cols[j].iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            if norm < 1e-8 {
                ok = false;
                break;
            }
            for x in &mut cols[j] {
                *x /= norm;
            }
        }
        if ok {
            return ComplexMatrix::from_fn(n, n, |r, c| cols[c][r]);
        }
    }
}

pub fn generate(spec: &InstanceSpec, seed: u64) -> Result<GeneratedInstance, GenerateError> {
    let nb = spec.block_sizes.len();
    if nb == 0 || spec.block_sizes.contains(&0) {
        return Err(GenerateError::InconsistentSpec("block sizes must be positive and nonempty".into()));
    }
    if spec.pi.len() != nb {
        return Err(GenerateError::InconsistentSpec(format!(
            "permutation has {} entries for {nb} blocks",
            spec.pi.len()
        )));
    }
    let mut seen = vec![false; nb];
    for &k in &spec.pi {
        if k >= nb || std::mem::replace(&mut seen[k], true) {
            return Err(GenerateError::InconsistentSpec("block map is not a permutation".into()));
        }
    }
    for cycle in cycle_decomposition(&spec.pi) {
        let size = spec.block_sizes[cycle.base()];
        if let Some(&bad) = cycle.labels.iter().find(|&&j| spec.block_sizes[j] != size) {
            return Err(GenerateError::InconsistentSpec(format!(
                "blocks {} and {bad} share a cycle but have sizes {size} and {}",
                cycle.base(),
                spec.block_sizes[bad]
            )));
        }
    }
    let n: usize = spec.block_sizes.iter().sum();
    let mut rng = rng_from_seed(seed);

    let mut points: Vec<usize> = (0..n).collect();
    if spec.shuffle_points {
        points.shuffle(&mut rng);
    }
    let mut blocks = Vec::with_capacity(nb);
    let mut cursor = 0;
    for &s in &spec.block_sizes {
        blocks.push(points[cursor..cursor + s].to_vec());
        cursor += s;
    }
    let partition = BlockPartition::new(blocks, n).map_err(|e| GenerateError::InconsistentSpec(e.to_string()))?;

    let weights = match &spec.weights {
        Some(w) if w.len() != n => {
            return Err(GenerateError::InconsistentSpec(format!("{} weights for {n} points", w.len())))
        }
        Some(w) => w.clone(),
        None => (0..n).map(|_| rng.gen_range(0.5..2.0)).collect(),
    };
    let space = DiscreteSpace::new(weights).map_err(|e| GenerateError::InconsistentSpec(e.to_string()))?;

    let mut v0 = ComplexMatrix::identity(n);
    if !spec.trivial_v {
        v0 = ComplexMatrix::zeros(n, n);
        for block in partition.blocks() {
            let local = random_unitary(block.len(), &mut rng);
            for (i, &x) in block.iter().enumerate() {
                for (j, &y) in block.iter().enumerate() {
                    v0[(x, y)] = local[(i, j)];
                }
            }
        }
    }

    let mut phi = vec![0; n];
    for (j, &k) in spec.pi.iter().enumerate() {
        for (&x, &y) in partition.block(j).iter().zip(partition.block(k)) {
            phi[x] = y;
        }
    }
    let w0 = WeightedCompositionOperator::new(&space, phi)
        .map_err(|e| GenerateError::InconsistentSpec(e.to_string()))?
        .matrix();
    let unitary = &v0 * &w0;
    let algebra = BlockAlgebra::new(space, partition).map_err(|e| GenerateError::InconsistentSpec(e.to_string()))?;
    Ok(GeneratedInstance { algebra, unitary, pi: spec.pi.clone(), v0, w0 })
}

/// Random spec with at most `max_dim` points and blocks of at most
/// `max_block` points: groups of equal-size blocks are joined into cycles,
/// then block labels are shuffled.
pub fn random_spec(seed: u64, max_dim: usize, max_block: usize) -> InstanceSpec {
    let mut rng = rng_from_seed(seed ^ 0x005e_ed0f_b10c);
    let target = rng.gen_range(1..=max_dim.max(1));
    let mut sizes = Vec::new();
    let mut cycles: Vec<Vec<usize>> = Vec::new();
    let mut remaining = target;
    while remaining > 0 {
        let size = rng.gen_range(1..=max_block.min(remaining));
        let len = rng.gen_range(1..=(remaining / size).min(4));
        let labels: Vec<usize> = (sizes.len()..sizes.len() + len).collect();
        sizes.extend(std::iter::repeat_n(size, len));
        cycles.push(labels);
        remaining -= size * len;
    }
    let nb = sizes.len();
    let mut relabel: Vec<usize> = (0..nb).collect();
    relabel.shuffle(&mut rng);
    let mut block_sizes = vec![0; nb];
    for (old, &new) in relabel.iter().enumerate() {
        block_sizes[new] = sizes[old];
    }
    let mut pi = vec![0; nb];
    for cycle in &cycles {
        for (r, &old) in cycle.iter().enumerate() {
            pi[relabel[old]] = relabel[cycle[(r + 1) % cycle.len()]];
        }
    }
    InstanceSpec { block_sizes, pi, weights: None, trivial_v: false, shuffle_points: true }
}
