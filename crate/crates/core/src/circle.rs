//! The irrational rotation `t ↦ t + a mod 1` on `[0, 1)`, its partition into
//! `J₁ = [0, a)`, `J₂ = [a, 4a)`, `J₃ = [4a, 1)`, and the induced map on `J₁`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CircleError {
    #[error("rotation amount must lie in (0, 0.25), got {0}")]
    BadRotation(f64),
    #[error("point {0} is not in [0, 1)")]
    BadPoint(f64),
    #[error("point {t} is not in the base interval [0, {a})")]
    NotInBaseInterval { t: f64, a: f64 },
}

/// A point of `ℝ/ℤ`, stored in `[0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct CirclePoint(f64);

impl CirclePoint {
    pub fn new(t: f64) -> Result<Self, CircleError> {
        if t.is_finite() && (0.0..1.0).contains(&t) {
            Ok(Self(t))
        } else {
            Err(CircleError::BadPoint(t))
        }
    }

    /// Reduces any finite real into `[0, 1)`.
    pub fn wrap(t: f64) -> Self {
        let r = t.rem_euclid(1.0);
        // rem_euclid can round up to exactly 1.0 for tiny negative inputs
        Self(if r >= 1.0 { 0.0 } else { r })
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Interval {
    J1,
    J2,
    J3,
}

impl Interval {
    pub const ALL: [Interval; 3] = [Interval::J1, Interval::J2, Interval::J3];

    pub fn index(self) -> usize {
        match self {
            Interval::J1 => 1,
            Interval::J2 => 2,
            Interval::J3 => 3,
        }
    }

    pub fn from_index(i: usize) -> Option<Self> {
        match i {
            1 => Some(Interval::J1),
            2 => Some(Interval::J2),
            3 => Some(Interval::J3),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RotationConfig {
    a: f64,
    b: f64,
}

impl RotationConfig {
    pub fn new(a: f64) -> Result<Self, CircleError> {
        if !(a.is_finite() && a > 0.0 && a < 0.25) {
            return Err(CircleError::BadRotation(a));
        }
        Ok(Self { a, b: 1.0 - 4.0 * a })
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    /// `b = 1 − 4a`, the rotation amount of the induced map on `J₁`.
    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn four_a(&self) -> f64 {
        4.0 * self.a
    }

    /// Interval endpoints `[0, a, 4a, 1]`.
    pub fn breakpoints(&self) -> [f64; 4] {
        [0.0, self.a, self.four_a(), 1.0]
    }

    pub fn length(&self, j: Interval) -> f64 {
        match j {
            Interval::J1 => self.a,
            Interval::J2 => 3.0 * self.a,
            Interval::J3 => self.b,
        }
    }

    /// Small-denominator rational approximations of `a` and of `4/a − 16`,
    /// the two quantities whose irrationality the ergodicity arguments need.
    pub fn rationality_warnings(&self) -> Vec<RationalApproximation> {
        [("a", self.a), ("4/a - 16", 4.0 / self.a - 16.0)]
            .into_iter()
            .filter_map(|(name, x)| {
                near_rational(x, RATIONAL_DENOMINATOR_LIMIT, RATIONAL_DISTANCE).map(|(p, q)| RationalApproximation {
                    quantity: name.to_string(),
                    value: x,
                    numerator: p,
                    denominator: q,
                })
            })
            .collect()
    }
}

pub const RATIONAL_DENOMINATOR_LIMIT: i64 = 1_000_000;
/// Distance below which a convergent counts as "the same number" in `f64`.
pub const RATIONAL_DISTANCE: f64 = 1e-13;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RationalApproximation {
    pub quantity: String,
    pub value: f64,
    pub numerator: i64,
    pub denominator: i64,
}

/// First continued-fraction convergent `p/q` with `q ≤ max_den` lying within
/// `dist` of `x`, if any.
pub fn near_rational(x: f64, max_den: i64, dist: f64) -> Option<(i64, i64)> {
    let (mut p0, mut q0, mut p1, mut q1) = (0i64, 1i64, 1i64, 0i64);
    let mut rest = x;
    for _ in 0..64 {
        let digit = rest.floor();
        if digit.abs() > 1e12 {
            return None;
        }
        let digit = digit as i64;
        let (p2, q2) = (digit.checked_mul(p1)?.checked_add(p0)?, digit.checked_mul(q1)?.checked_add(q0)?);
        if q2 > max_den {
            return None;
        }
        if (x - p2 as f64 / q2 as f64).abs() <= dist {
            return Some((p2, q2));
        }
        (p0, q0, p1, q1) = (p1, q1, p2, q2);
        let frac = rest - digit as f64;
        if frac == 0.0 {
            return None;
        }
        rest = 1.0 / frac;
    }
    None
}

/// `t ↦ t + a mod 1`, one addition and at most one subtraction.
pub fn shift(t: CirclePoint, config: &RotationConfig) -> CirclePoint {
    let s = t.0 + config.a;
    CirclePoint(if s >= 1.0 { s - 1.0 } else { s })
}

/// The `k`-th orbit point recomputed from scratch as `t₀ + k·a mod 1`, with
/// the product formed exactly through a fused multiply-add.
pub fn orbit_anchor(t0: CirclePoint, k: u64, config: &RotationConfig) -> CirclePoint {
    let kf = k as f64;
    let prod = kf * config.a;
    let err = kf.mul_add(config.a, -prod);
    let whole = prod.floor();
    CirclePoint::wrap((prod - whole) + t0.0 + err)
}

pub fn interval_index(t: CirclePoint, config: &RotationConfig) -> Interval {
    if t.0 < config.a {
        Interval::J1
    } else if t.0 < config.four_a() {
        Interval::J2
    } else {
        Interval::J3
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FirstReturn {
    pub t_return: CirclePoint,
    pub steps: usize,
    /// Interval of each point visited before stepping, starting with `t`.
    pub word: Vec<Interval>,
}

/// Iterates the rotation from `t ∈ J₁` until it lands in `J₁` again.
pub fn first_return(t: CirclePoint, config: &RotationConfig) -> Result<FirstReturn, CircleError> {
    if interval_index(t, config) != Interval::J1 {
        return Err(CircleError::NotInBaseInterval { t: t.0, a: config.a });
    }
    let mut word = vec![Interval::J1];
    let mut cur = shift(t, config);
    while interval_index(cur, config) != Interval::J1 {
        word.push(interval_index(cur, config));
        cur = shift(cur, config);
    }
    Ok(FirstReturn { t_return: cur, steps: word.len(), word })
}

/// Rotation of the base interval `[0, a)` by `amount`, i.e. `t ↦ t + amount mod a`.
pub fn induced_rotation(t: f64, amount: f64, config: &RotationConfig) -> f64 {
    let r = (t + amount).rem_euclid(config.a);
    if r >= config.a {
        0.0
    } else {
        r
    }
}

/// Closed form of [`first_return`]. A return after `n` steps lands at
/// `t + n·a − 1`, which is `t − 1 ≡ t − b (mod a)` because `b = 1 − 4a`.
pub fn first_return_closed_form(t: CirclePoint, config: &RotationConfig) -> CirclePoint {
    CirclePoint(induced_rotation(t.0, -config.b, config))
}

/// `true` iff the word is `1 2 2 2 3*`.
pub fn is_canonical_return_word(word: &[Interval]) -> bool {
    word.len() >= 4
        && word[..4] == [Interval::J1, Interval::J2, Interval::J2, Interval::J2]
        && word[4..].iter().all(|&j| j == Interval::J3)
}

/// `steps` orbit points `t₀, sh(t₀), …`.
pub fn orbit(t0: CirclePoint, config: &RotationConfig, steps: usize) -> Vec<CirclePoint> {
    std::iter::successors(Some(t0), |&t| Some(shift(t, config))).take(steps).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquidistributionStats {
    pub steps: usize,
    pub visits: [usize; 3],
    pub frequencies: [f64; 3],
    pub lengths: [f64; 3],
    pub discrepancy: f64,
}

pub fn equidistribution_stats(orbit: &[CirclePoint], config: &RotationConfig) -> EquidistributionStats {
    let mut visits = [0usize; 3];
    for &t in orbit {
        visits[interval_index(t, config).index() - 1] += 1;
    }
    let steps = orbit.len();
    let frequencies = visits.map(|v| if steps == 0 { 0.0 } else { v as f64 / steps as f64 });
    let lengths = Interval::ALL.map(|j| config.length(j));
    let discrepancy = frequencies.iter().zip(&lengths).map(|(f, l)| (f - l).abs()).fold(0.0, f64::max);
    EquidistributionStats { steps, visits, frequencies, lengths, discrepancy }
}
