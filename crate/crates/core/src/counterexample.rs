//! The rotation skew product `U = V_M W` on `L²([0,1), ℂ²)`, where `W` is
//! composition with `t ↦ t + a` and `V(t)` is piecewise constant on
//! `J₁, J₂, J₃`.
//!
//! No `U`-invariant masa contains the diagonal multiplication algebra. That is
//! a statement about measurable fields and cannot be checked by sampling, so
//! this module falsifies concrete candidate projection fields along orbits and
//! exposes the pointwise algebra used in the argument: the diagonalizer of a
//! self-adjoint `2×2` matrix, the forced conjugation step, and sign transport.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::circle::{interval_index, shift, CirclePoint, Interval, RotationConfig};
use crate::generate::rng_from_seed;
use crate::numerics::{ComplexMatrix, I, ONE, ZERO};
use crate::sign::{alpha, sign_profile_with_tol, SignClass};

/// `|x| ≤ SIGN_ZERO_TOL` reads as zero when taking signs of computed values.
pub const SIGN_ZERO_TOL: f64 = 1e-10;
/// Off-diagonal magnitudes at or below this take the diagonal branch.
pub const DIAGONAL_CUTOFF: f64 = 1e-14;
/// Below this `e` is treated as zero when resolving the global sign.
pub const E_ZERO_TOL: f64 = 1e-12;
pub const PROJECTION_TOL: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CounterexampleError {
    #[error("invalid field: {0}")]
    BadField(String),
    #[error("invalid candidate: {0}")]
    InvalidCandidate(String),
    #[error("need at least two orbit samples, got {0}")]
    MissingSample(usize),
    #[error("invalid S parameters: {0}")]
    BadParameters(String),
    #[error("steps must be at least 1")]
    NoSteps,
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// A `2×2` matrix-valued function on `[0, 1)`, constant on the pieces
/// `[0, t₁), [t₁, t₂), …, [t_k, 1)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "FieldDocument", into = "FieldDocument")]
pub struct PiecewiseMatrixField {
    breakpoints: Vec<f64>,
    values: Vec<ComplexMatrix>,
}

#[derive(Serialize, Deserialize)]
struct FieldDocument {
    breakpoints: Vec<f64>,
    values: Vec<ComplexMatrix>,
}

impl TryFrom<FieldDocument> for PiecewiseMatrixField {
    type Error = CounterexampleError;
    fn try_from(d: FieldDocument) -> Result<Self, Self::Error> {
        Self::new(d.breakpoints, d.values)
    }
}

impl From<PiecewiseMatrixField> for FieldDocument {
    fn from(f: PiecewiseMatrixField) -> Self {
        FieldDocument { breakpoints: f.breakpoints, values: f.values }
    }
}

impl PiecewiseMatrixField {
    /// `breakpoints` are the interior cuts, strictly increasing in `(0, 1)`;
    /// `values` has one more entry than `breakpoints`.
    pub fn new(breakpoints: Vec<f64>, values: Vec<ComplexMatrix>) -> Result<Self, CounterexampleError> {
        if values.len() != breakpoints.len() + 1 {
            return Err(CounterexampleError::BadField(format!(
                "{} cuts need {} values, got {}",
                breakpoints.len(),
                breakpoints.len() + 1,
                values.len()
            )));
        }
        if breakpoints.iter().any(|&t| !(t > 0.0 && t < 1.0)) {
            return Err(CounterexampleError::BadField("cuts must lie in (0, 1)".into()));
        }
        if breakpoints.windows(2).any(|w| w[0] >= w[1]) {
            return Err(CounterexampleError::BadField("cuts must be strictly increasing".into()));
        }
        if let Some(m) = values.iter().find(|m| m.rows() != 2 || m.cols() != 2) {
            return Err(CounterexampleError::BadField(format!("value of shape {}x{}", m.rows(), m.cols())));
        }
        if values.iter().any(|m| m.as_slice().iter().any(|z| !z.re.is_finite() || !z.im.is_finite())) {
            return Err(CounterexampleError::BadField("non-finite entry".into()));
        }
        Ok(Self { breakpoints, values })
    }

    pub fn constant(value: ComplexMatrix) -> Result<Self, CounterexampleError> {
        Self::new(Vec::new(), vec![value])
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn values(&self) -> &[ComplexMatrix] {
        &self.values
    }

    pub fn num_pieces(&self) -> usize {
        self.values.len()
    }

    pub fn piece_of(&self, t: CirclePoint) -> usize {
        self.breakpoints.partition_point(|&b| b <= t.value())
    }

    pub fn value_at(&self, t: CirclePoint) -> &ComplexMatrix {
        &self.values[self.piece_of(t)]
    }
}

pub fn v_block(j: Interval) -> ComplexMatrix {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    match j {
        Interval::J1 => ComplexMatrix::from_real_rows([[h, -h], [h, h]]),
        Interval::J2 => ComplexMatrix::from_complex_rows([[c(-h, 0.0), c(-h, 0.0)], [c(0.0, -h), c(0.0, h)]]),
        Interval::J3 => ComplexMatrix::identity(2),
    }
}

/// `V` with the three blocks on `J₁, J₂, J₃`.
pub fn standard_v(config: &RotationConfig) -> PiecewiseMatrixField {
    PiecewiseMatrixField { breakpoints: vec![config.a(), config.four_a()], values: Interval::ALL.map(v_block).to_vec() }
}

/// `V ≡ I`, for which the diagonal algebra is itself an invariant masa.
pub fn identity_v() -> PiecewiseMatrixField {
    PiecewiseMatrixField { breakpoints: Vec::new(), values: vec![ComplexMatrix::identity(2)] }
}

/// `S = [[d, θ̄e], [θe, −d]]` with `e ≥ 0` and `|θ| = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SParameters {
    pub d: f64,
    pub e: f64,
    pub theta: Complex64,
}

impl SParameters {
    /// `θ` is normalised; `e = 0` is accepted (diagonal `S`).
    pub fn new(d: f64, e: f64, theta: Complex64) -> Result<Self, CounterexampleError> {
        if !d.is_finite() || !e.is_finite() || e < 0.0 {
            return Err(CounterexampleError::BadParameters(format!("d = {d}, e = {e}")));
        }
        let r = theta.norm();
        if !r.is_finite() || r == 0.0 {
            return Err(CounterexampleError::BadParameters(format!("theta = {theta}")));
        }
        Ok(Self { d, e, theta: theta / r })
    }

    pub fn from_angle(d: f64, e: f64, theta_arg: f64) -> Result<Self, CounterexampleError> {
        Self::new(d, e, Complex64::from_polar(1.0, theta_arg))
    }

    /// Reads `d` from the `(0,0)` entry and `θe` from the `(1,0)` entry.
    pub fn from_matrix(s: &ComplexMatrix) -> Self {
        let z = s[(1, 0)];
        let e = z.norm();
        let theta = if e > 0.0 { z / e } else { ONE };
        Self { d: s[(0, 0)].re, e, theta }
    }

    pub fn to_matrix(&self) -> ComplexMatrix {
        let z = self.theta * self.e;
        ComplexMatrix::from_complex_rows([[c(self.d, 0.0), z.conj()], [z, c(-self.d, 0.0)]])
    }

    pub fn c(&self) -> f64 {
        self.theta.re
    }

    pub fn s(&self) -> f64 {
        self.theta.im
    }

    pub fn neg(&self) -> Self {
        Self { d: -self.d, e: self.e, theta: -self.theta }
    }

    /// Class of `(sgn d, sgn ce, sgn se)` with zero threshold [`SIGN_ZERO_TOL`].
    pub fn profile(&self) -> SignClass {
        let z = self.theta * self.e;
        sign_profile_with_tol(self.d, z.re, z.im, SIGN_ZERO_TOL)
    }
}

/// A field of rank-one projections `P(t)`, generating the candidate masa
/// together with the diagonal algebra.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CandidateDocument", into = "CandidateDocument")]
pub struct ProjectionFieldCandidate {
    field: PiecewiseMatrixField,
}

#[derive(Serialize, Deserialize)]
struct CandidateDocument {
    breakpoints: Vec<f64>,
    projections: Vec<ComplexMatrix>,
}

impl TryFrom<CandidateDocument> for ProjectionFieldCandidate {
    type Error = CounterexampleError;
    fn try_from(d: CandidateDocument) -> Result<Self, Self::Error> {
        let field = PiecewiseMatrixField::new(d.breakpoints, d.projections)
            .map_err(|e| CounterexampleError::InvalidCandidate(e.to_string()))?;
        Self::new(field)
    }
}

impl From<ProjectionFieldCandidate> for CandidateDocument {
    fn from(c: ProjectionFieldCandidate) -> Self {
        CandidateDocument { breakpoints: c.field.breakpoints, projections: c.field.values }
    }
}

/// Largest of `‖P² − P‖`, `‖P − P*‖` and `|tr P − 1|`.
pub fn rank_one_projection_defect(p: &ComplexMatrix) -> f64 {
    let idem = (&(p * p) - p).max_abs();
    let sa = p.self_adjoint_deviation();
    let tr = (p.trace() - ONE).norm();
    idem.max(sa).max(tr)
}

impl ProjectionFieldCandidate {
    pub fn new(field: PiecewiseMatrixField) -> Result<Self, CounterexampleError> {
        for (i, p) in field.values.iter().enumerate() {
            let defect = rank_one_projection_defect(p);
            if defect.is_nan() || defect > PROJECTION_TOL {
                return Err(CounterexampleError::InvalidCandidate(format!(
                    "piece {i} is not a rank-one projection (defect {defect:e})"
                )));
            }
        }
        Ok(Self { field })
    }

    pub fn constant(p: ComplexMatrix) -> Result<Self, CounterexampleError> {
        Self::new(PiecewiseMatrixField::constant(p)?)
    }

    pub fn field(&self) -> &PiecewiseMatrixField {
        &self.field
    }

    pub fn projection_at(&self, t: CirclePoint) -> &ComplexMatrix {
        self.field.value_at(t)
    }

    /// `S(t) = 2P(t) − I`.
    pub fn symmetry_at(&self, t: CirclePoint) -> ComplexMatrix {
        &self.projection_at(t).scale(c(2.0, 0.0)) - &ComplexMatrix::identity(2)
    }
}

/// Random unit vector `v` in `ℂ²` and its projection `v v*`.
pub fn random_rank_one<R: Rng + ?Sized>(rng: &mut R) -> ComplexMatrix {
    loop {
        let v: Vec<Complex64> = (0..2).map(|_| c(rng.sample(StandardNormal), rng.sample(StandardNormal))).collect();
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm > 1e-6 {
            let v: Vec<Complex64> = v.iter().map(|z| z / norm).collect();
            return ComplexMatrix::outer(&v, &v);
        }
    }
}

/// Candidate with between 1 and `max_pieces` pieces, uniform cuts and
/// independent random rank-one projections.
pub fn random_candidate(seed: u64, max_pieces: usize) -> ProjectionFieldCandidate {
    let mut rng = rng_from_seed(seed);
    let pieces = rng.gen_range(1..=max_pieces.max(1));
    let mut cuts: Vec<f64> = (1..pieces).map(|_| rng.gen_range(0.0..1.0)).filter(|&t| t > 0.0).collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let values = (0..=cuts.len()).map(|_| random_rank_one(&mut rng)).collect();
    ProjectionFieldCandidate::new(PiecewiseMatrixField { breakpoints: cuts, values })
        .expect("outer products of unit vectors are rank-one projections")
}

/// `(Uf)(t_k) = V(t_k) f(t_{k+1})` on orbit samples `t_{k+1} = t_k + a`.
/// The last sample has no successor, so the output is one shorter.
pub fn apply_u(
    samples: &[[Complex64; 2]],
    orbit: &[CirclePoint],
    v: &PiecewiseMatrixField,
) -> Result<Vec<[Complex64; 2]>, CounterexampleError> {
    if samples.len() < 2 || orbit.len() < samples.len() {
        return Err(CounterexampleError::MissingSample(samples.len().min(orbit.len())));
    }
    Ok((0..samples.len() - 1)
        .map(|k| {
            let m = v.value_at(orbit[k]);
            let f = samples[k + 1];
            [m[(0, 0)] * f[0] + m[(0, 1)] * f[1], m[(1, 0)] * f[0] + m[(1, 1)] * f[1]]
        })
        .collect())
}

/// The value `V*(t) S(t) V(t)` that `±S(t + a)` is forced to equal.
pub fn conjugate_step(s: &ComplexMatrix, t: CirclePoint, v: &PiecewiseMatrixField) -> ComplexMatrix {
    let vt = v.value_at(t);
    &(&vt.adjoint() * s) * vt
}

/// As [`conjugate_step`] on parameters, with the global sign resolved.
pub fn conjugate_step_params(s: &SParameters, t: CirclePoint, v: &PiecewiseMatrixField) -> SParameters {
    resolve_sign(SParameters::from_matrix(&conjugate_step(&s.to_matrix(), t, v)))
}

/// `e ≥ 0` holds by construction; when `e` vanishes the sign making `d ≥ 0`
/// is chosen.
pub fn resolve_sign(p: SParameters) -> SParameters {
    if p.e <= E_ZERO_TOL && p.d < 0.0 {
        p.neg()
    } else {
        p
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagonalization {
    /// Unitary with `T B₀ T* = diag(1, −1)` for the normalised traceless part `B₀`.
    pub t: ComplexMatrix,
    /// `T* E₁₁ T`.
    pub p: ComplexMatrix,
    pub diagonal_branch: bool,
}

/// Explicit unitary diagonalizer of a self-adjoint `2×2` matrix. With the
/// traceless part written `[[a, ξ̄b], [ξb, −a]]`, `b > 0`, `|ξ| = 1` and
/// `x = a/√(a² + b²)`, `T = (1/√2)[[√(1+x), ξ̄√(1−x)], [−√(1−x), ξ̄√(1+x)]]`.
/// Diagonal inputs give `T = I`.
pub fn diagonalizer(b: &ComplexMatrix) -> Diagonalization {
    let half_trace = (b[(0, 0)].re + b[(1, 1)].re) / 2.0;
    let a = b[(0, 0)].re - half_trace;
    let off = b[(1, 0)];
    let bb = off.norm();
    let e11 = ComplexMatrix::from_real_rows([[1.0, 0.0], [0.0, 0.0]]);
    if bb <= DIAGONAL_CUTOFF {
        return Diagonalization { t: ComplexMatrix::identity(2), p: e11, diagonal_branch: true };
    }
    let xi_bar = (off / bb).conj();
    let x = a / a.hypot(bb);
    let plus = ((1.0 + x) / 2.0).sqrt();
    let minus = ((1.0 - x) / 2.0).sqrt();
    let t = ComplexMatrix::from_complex_rows([[c(plus, 0.0), xi_bar * minus], [c(-minus, 0.0), xi_bar * plus]]);
    let p = &(&t.adjoint() * &e11) * &t;
    Diagonalization { t, p, diagonal_branch: false }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalDefect {
    pub interval: Interval,
    pub count: usize,
    pub max_defect: f64,
    pub mean_defect: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DefectReport {
    pub steps: usize,
    pub max_defect: f64,
    pub mean_defect: f64,
    /// Orbit point where the maximum is attained.
    pub argmax: CirclePoint,
    pub per_interval: Vec<IntervalDefect>,
}

/// `min_ε ‖S(t + a) − ε V*(t) S(t) V(t)‖_F` for `S = 2P − I`.
pub fn pointwise_defect(
    candidate: &ProjectionFieldCandidate,
    t: CirclePoint,
    config: &RotationConfig,
    v: &PiecewiseMatrixField,
) -> f64 {
    let forced = conjugate_step(&candidate.symmetry_at(t), t, v);
    let next = candidate.symmetry_at(shift(t, config));
    let plus = (&next - &forced).frobenius_norm();
    let minus = (&next + &forced).frobenius_norm();
    plus.min(minus)
}

/// Aggregates [`pointwise_defect`] over `steps` orbit points starting at `t0`.
pub fn invariance_defect(
    candidate: &ProjectionFieldCandidate,
    config: &RotationConfig,
    v: &PiecewiseMatrixField,
    t0: CirclePoint,
    steps: usize,
) -> Result<DefectReport, CounterexampleError> {
    if steps == 0 {
        return Err(CounterexampleError::NoSteps);
    }
    let mut count = [0usize; 3];
    let mut max = [0.0f64; 3];
    let mut sum = [0.0f64; 3];
    let mut argmax = t0;
    let mut overall = f64::NEG_INFINITY;
    let mut t = t0;
    for _ in 0..steps {
        let delta = pointwise_defect(candidate, t, config, v);
        let j = interval_index(t, config).index() - 1;
        count[j] += 1;
        sum[j] += delta;
        max[j] = max[j].max(delta);
        if delta > overall {
            overall = delta;
            argmax = t;
        }
        t = shift(t, config);
    }
    let per_interval = Interval::ALL
        .iter()
        .enumerate()
        .map(|(j, &interval)| IntervalDefect {
            interval,
            count: count[j],
            max_defect: max[j],
            mean_defect: if count[j] == 0 { 0.0 } else { sum[j] / count[j] as f64 },
        })
        .collect();
    Ok(DefectReport {
        steps,
        max_defect: overall,
        mean_defect: sum.iter().sum::<f64>() / steps as f64,
        argmax,
        per_interval,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropagationStep {
    pub t: CirclePoint,
    pub interval: Interval,
    pub params: SParameters,
    pub class: SignClass,
    pub diagonal: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Propagation {
    /// `steps + 1` entries: the initial value and each forced successor.
    pub trajectory: Vec<PropagationStep>,
    /// Every class equals `α_j` of its predecessor's class.
    pub consistent: bool,
    /// Indices where `e` fell below the sign-resolution threshold.
    pub boundary_hits: Vec<usize>,
}

/// Iterates `S(t + a) = ±V*(t) S(t) V(t)` from `(t0, S0)`.
pub fn constraint_propagate(
    s0: SParameters,
    t0: CirclePoint,
    config: &RotationConfig,
    v: &PiecewiseMatrixField,
    steps: usize,
) -> Propagation {
    let record = |t: CirclePoint, params: SParameters| PropagationStep {
        t,
        interval: interval_index(t, config),
        params,
        class: params.profile(),
        diagonal: params.e <= E_ZERO_TOL,
    };
    let mut trajectory = Vec::with_capacity(steps + 1);
    let mut boundary_hits = Vec::new();
    let mut consistent = true;
    let mut cur = record(t0, resolve_sign(s0));
    for k in 0..steps {
        let params = conjugate_step_params(&cur.params, cur.t, v);
        let next = record(shift(cur.t, config), params);
        consistent &= next.class == alpha(cur.interval, cur.class);
        if next.diagonal {
            boundary_hits.push(k + 1);
        }
        trajectory.push(std::mem::replace(&mut cur, next));
    }
    trajectory.push(cur);
    Propagation { trajectory, consistent, boundary_hits }
}

/// The orbit of `f ≡ 0` except for `f(t_k) = (1, i)`.
#[doc(hidden)]
pub fn delta_samples(len: usize, k: usize) -> Vec<[Complex64; 2]> {
    (0..len).map(|i| if i == k { [ONE, I] } else { [ZERO, ZERO] }).collect()
}
