//! Exact-arithmetic verification of the local orbital-integral identities
//! for the cubic metaplectic cover of SL(3) over Q_p, p ≡ 1 (mod 3), p > 3.
//!
//! The toolkit computes each local character sum and orbital integral twice —
//! once by the closed case formulas and once by independent brute-force shell
//! summation — and checks the matching identities (big cell, degenerate
//! orbits, functional equations) with exact cyclotomic equality, no floating
//! point anywhere on the verification path.
//!
//! Layer map:
//! - [`padic`], [`region`]: capped-relative arithmetic in Q_p and the exact
//!   shell-integration engine.
//! - [`cyclo`]: the value field Q(ζ_{3·p^M}) with decidable equality, the
//!   additive character ψ, and the μ₃ embedding.
//! - [`sums`]: cubic Hilbert symbol, Kloosterman and cubic exponential
//!   integrals, Gauss pairs, and the comparison identities.
//! - [`orbital_i`], [`orbital_j`]: the two big-cell orbital integrals with
//!   their reduction towers, plus the degenerate-orbit integrals.
//! - [`matcher`]: the fundamental-lemma comparisons and sweep reports.
//! - [`orbits`]: the finite-field orbit classifier with its
//!   stabilizer-enumeration oracle.

pub mod cli;
pub mod cyclo;
pub mod matcher;
pub mod orbital_i;
pub mod orbital_j;
pub mod orbits;
pub mod padic;
pub mod region;
pub mod sums;

pub use cyclo::{CycCtx, CycValue, Mu3};
pub use padic::{make_field, ArithError, FieldParams, PAdic, RhoChoice};
pub use sums::{SumError, SumParams, SymbolNorm};
