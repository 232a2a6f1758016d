//! Invariant maximal abelian self-adjoint algebras on finite discrete
//! spaces, and the combinatorial and numerical machinery behind the
//! irrational-rotation obstruction to such algebras on `L²(S¹) ⊕ L²(S¹)`.

pub mod circle;
pub mod counterexample;
pub mod discrete;
pub mod embedding;
pub mod generate;
pub mod numerics;
pub mod sign;
