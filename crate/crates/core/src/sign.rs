//! The 14-state automaton on sign triples modulo a global sign.
//!
//! A state is a triple `(p, q, r) ∈ {−1, 0, 1}³` identified with its
//! negative. Crossing interval `J_j` acts on states by `α_j`:
//! `α₁(p, q, r) = (q, −p, r)`, `α₂(p, q, r) = (r, p, q)`, `α₃ = id`.
//! All tables are exact and built once.

use std::fmt;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::circle::Interval;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SignError {
    #[error("class {0} is in stratum {1}, expected stratum {2}")]
    WrongStratum(SignClass, usize, usize),
    #[error("sign component {0} is not in {{-1, 0, 1}}")]
    BadComponent(i8),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SignTriple(pub [i8; 3]);

impl SignTriple {
    pub fn new(p: i8, q: i8, r: i8) -> Result<Self, SignError> {
        for c in [p, q, r] {
            if !(-1..=1).contains(&c) {
                return Err(SignError::BadComponent(c));
            }
        }
        Ok(Self([p, q, r]))
    }

    pub fn negated(self) -> Self {
        Self(self.0.map(|c| -c))
    }

    pub fn zeros(self) -> usize {
        self.0.iter().filter(|&&c| c == 0).count()
    }
}

/// Canonical representative of `{t, −t}`: first nonzero component is `+1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SignClass(SignTriple);

impl fmt::Display for SignClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let [p, q, r] = self.0 .0;
        write!(f, "({p},{q},{r})")
    }
}

impl SignClass {
    pub fn representative(self) -> SignTriple {
        self.0
    }

    pub fn zero() -> Self {
        Self(SignTriple([0, 0, 0]))
    }

    /// Position in [`all_classes`].
    pub fn index(self) -> usize {
        tables().classes.iter().position(|&c| c == self).expect("canonical classes are enumerated")
    }
}

pub fn canonicalize(t: SignTriple) -> SignClass {
    match t.0.iter().find(|&&c| c != 0) {
        Some(&lead) if lead < 0 => SignClass(t.negated()),
        _ => SignClass(t),
    }
}

fn raw_alpha(j: Interval, t: SignTriple) -> SignTriple {
    let [p, q, r] = t.0;
    SignTriple(match j {
        Interval::J1 => [q, -p, r],
        Interval::J2 => [r, p, q],
        Interval::J3 => [p, q, r],
    })
}

/// A self-map of the 14 classes, stored by class index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ClassMap(pub [u8; 14]);

impl ClassMap {
    pub fn identity() -> Self {
        let mut t = [0u8; 14];
        for (i, slot) in t.iter_mut().enumerate() {
            *slot = i as u8;
        }
        Self(t)
    }

    pub fn apply(&self, c: SignClass) -> SignClass {
        tables().classes[self.0[c.index()] as usize]
    }

    /// `other ∘ self`: first `self`, then `other`.
    pub fn then(&self, other: &ClassMap) -> ClassMap {
        ClassMap(self.0.map(|i| other.0[i as usize]))
    }

    pub fn pow(&self, k: usize) -> ClassMap {
        (0..k).fold(ClassMap::identity(), |acc, _| acc.then(self))
    }
}

struct Tables {
    classes: Vec<SignClass>,
    alpha: [ClassMap; 3],
}

fn tables() -> &'static Tables {
    static TABLES: OnceLock<Tables> = OnceLock::new();
    TABLES.get_or_init(|| {
        let mut classes: Vec<SignClass> = Vec::new();
        for p in -1..=1 {
            for q in -1..=1 {
                for r in -1..=1 {
                    let c = canonicalize(SignTriple([p, q, r]));
                    if !classes.contains(&c) {
                        classes.push(c);
                    }
                }
            }
        }
        classes.sort_by_key(|c| (std::cmp::Reverse(c.0.zeros()), c.0));
        let alpha = Interval::ALL.map(|j| {
            let mut t = [0u8; 14];
            for (i, &c) in classes.iter().enumerate() {
                let image = canonicalize(raw_alpha(j, c.0));
                t[i] = classes.iter().position(|&d| d == image).expect("closed under alpha") as u8;
            }
            ClassMap(t)
        });
        Tables { classes, alpha }
    })
}

/// All 14 classes, ordered by stratum (most zeros first) then lexicographically.
pub fn all_classes() -> &'static [SignClass] {
    &tables().classes
}

pub fn alpha_table(j: Interval) -> &'static ClassMap {
    &tables().alpha[j.index() - 1]
}

pub fn alpha(j: Interval, c: SignClass) -> SignClass {
    alpha_table(j).apply(c)
}

/// Classes per stratum, indexed by number of zeros.
pub const STRATUM_SIZES: [usize; 4] = [4, 6, 3, 1];
/// Classes in `D₁, D₂, D₃, D₄`.
pub const D_CLASS_COUNTS: [usize; 4] = [1, 1, 2, 2];
/// Classes in `F₁, F₂, F₃, F₄`.
pub const F_CLASS_COUNTS: [usize; 4] = [1, 1, 1, 1];

/// Number of zero components.
pub fn stratum(c: SignClass) -> usize {
    c.0.zeros()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DLabel {
    D1,
    D2,
    D3,
    D4,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FLabel {
    F1,
    F2,
    F3,
    F4,
}

/// Label of a one-zero class: `D₁ = {(p,q,0): pq = 1}`, `D₂ = {(p,q,0): pq = −1}`,
/// `D₃ = {(p,0,r)}`, `D₄ = {(0,q,r)}`.
pub fn d_partition(c: SignClass) -> Result<DLabel, SignError> {
    if stratum(c) != 1 {
        return Err(SignError::WrongStratum(c, stratum(c), 1));
    }
    let [p, q, r] = c.0 .0;
    Ok(match (p, q, r) {
        (_, _, 0) if p * q == 1 => DLabel::D1,
        (_, _, 0) => DLabel::D2,
        (_, 0, _) => DLabel::D3,
        _ => DLabel::D4,
    })
}

/// Label of a no-zero class by `(pr, qr)`: `(1,1) → F₁`, `(1,−1) → F₂`,
/// `(−1,−1) → F₃`, `(−1,1) → F₄`.
pub fn f_partition(c: SignClass) -> Result<FLabel, SignError> {
    if stratum(c) != 0 {
        return Err(SignError::WrongStratum(c, stratum(c), 0));
    }
    let [p, q, r] = c.0 .0;
    Ok(match (p * r, q * r) {
        (1, 1) => FLabel::F1,
        (1, _) => FLabel::F2,
        (_, -1) => FLabel::F3,
        _ => FLabel::F4,
    })
}

/// Composite `α_{w_m} ∘ … ∘ α_{w_1}` for an interval word.
pub fn word_reduce(word: &[Interval]) -> ClassMap {
    word.iter().fold(ClassMap::identity(), |acc, &j| acc.then(alpha_table(j)))
}

fn signum(x: f64, zero_tol: f64) -> i8 {
    if x > zero_tol {
        1
    } else if x < -zero_tol {
        -1
    } else {
        0
    }
}

/// Class of `(sgn d, sgn c, sgn s)` with exact zero test.
pub fn sign_profile(d: f64, c: f64, s: f64) -> SignClass {
    sign_profile_with_tol(d, c, s, 0.0)
}

/// As [`sign_profile`], but `|x| ≤ zero_tol` counts as zero.
pub fn sign_profile_with_tol(d: f64, c: f64, s: f64, zero_tol: f64) -> SignClass {
    canonicalize(SignTriple([signum(d, zero_tol), signum(c, zero_tol), signum(s, zero_tol)]))
}
