//! Exact arithmetic in the cyclotomic field Q(ζ_N), N = 3·p^M.
//!
//! Every character-sum value in the toolkit lives here. Since gcd(3, p) = 1
//! we split ζ_N = ζ_3 · ζ_{p^M} and work in the tensor basis
//! ζ_3^i · ζ_{p^M}^j with i ∈ {0,1} and the top base-p digit of j at most
//! p − 2; that set is a Q-basis of Q(ζ_N), so equality of coefficient maps
//! is equality of values. Values are sparse: a sum of roots of unity touches
//! only the exponents it actually contains.
//!
//! The additive character ψ has conductor O and is pinned by
//! ψ(p^{-m} u) = ζ_{p^m}^{u mod p^m}; the μ₃ embedding is pinned by
//! ρ ↦ ζ_3.

use crate::padic::{FieldParams, PAdic};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use std::collections::{BTreeMap, HashMap};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CycError {
    #[error("conductor overflow: psi needs depth {0} but the field caps at {1}")]
    ConductorOverflow(u32, u32),
    #[error("mixed cyclotomic orders: {0} vs {1}")]
    MixedOrders(u64, u64),
}

/// Cyclotomic context derived from the ambient field: orders and digit caps.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CycCtx {
    pub p: u64,
    /// M with N = 3·p^M.
    pub m_exp: u32,
    /// p^M.
    pub pm: u64,
    /// p^{M-1}.
    pub pm_down: u64,
    /// N = 3·p^M.
    pub n: u64,
}

impl CycCtx {
    pub fn from_field(f: &FieldParams) -> Self {
        let m_exp = f.conductor_cap;
        let pm = f.pk(m_exp);
        CycCtx { p: f.p, m_exp, pm, pm_down: pm / f.p, n: 3 * pm }
    }
}

/// An exact element of Q(ζ_N) in canonical sparse form.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CycValue {
    pub n: u64,
    terms: BTreeMap<(u8, u64), BigRational>,
}

/// An element of μ₃ as an exponent, embedded in Q(ζ_N) via ρ ↦ ζ₃.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Mu3(pub u8);

impl Mu3 {
    pub fn new(k: i64) -> Self {
        Mu3(k.rem_euclid(3) as u8)
    }
    pub fn mul(self, other: Mu3) -> Mu3 {
        Mu3((self.0 + other.0) % 3)
    }
    pub fn inv(self) -> Mu3 {
        Mu3((3 - self.0) % 3)
    }
    pub fn pow(self, e: i64) -> Mu3 {
        Mu3::new(self.0 as i64 * e)
    }
    pub fn is_trivial(self) -> bool {
        self.0 == 0
    }
}

impl CycValue {
    pub fn zero(ctx: &CycCtx) -> Self {
        CycValue { n: ctx.n, terms: BTreeMap::new() }
    }

    pub fn one(ctx: &CycCtx) -> Self {
        Self::from_rational(ctx, BigRational::one())
    }

    pub fn from_rational(ctx: &CycCtx, r: BigRational) -> Self {
        let mut v = Self::zero(ctx);
        v.add_root_scaled(ctx, 0, 0, &r);
        v
    }

    pub fn from_int(ctx: &CycCtx, k: i64) -> Self {
        Self::from_rational(ctx, BigRational::from_integer(BigInt::from(k)))
    }

    /// q^e as an exact rational.
    pub fn q_power(ctx: &CycCtx, e: i64) -> Self {
        let q = BigInt::from(ctx.p);
        let r = if e >= 0 {
            BigRational::from_integer(q.pow(e as u32))
        } else {
            BigRational::new(BigInt::one(), q.pow((-e) as u32))
        };
        Self::from_rational(ctx, r)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Add `coef · ζ₃^i ζ_{p^M}^j`, reducing into the canonical basis.
    ///
    /// Reduction rules: ζ₃² = −1 − ζ₃ and, when the top base-p digit of j is
    /// p − 1, ζ^j = −Σ_{t=0}^{p-2} ζ^{j - (p-1-t)·p^{M-1}}.
    pub fn add_root_scaled(&mut self, ctx: &CycCtx, i: u8, j: u64, coef: &BigRational) {
        if coef.is_zero() {
            return;
        }
        let i = i % 3;
        let j = j % ctx.pm;
        let top = j / ctx.pm_down;
        debug_assert!(top < ctx.p);
        if i == 2 {
            let neg = -coef;
            self.add_root_scaled(ctx, 0, j, &neg);
            self.add_root_scaled(ctx, 1, j, &neg);
        } else if top == ctx.p - 1 {
            let r = j - top * ctx.pm_down;
            let neg = -coef;
            for t in 0..ctx.p - 1 {
                self.insert(i, r + t * ctx.pm_down, &neg);
            }
        } else {
            self.insert(i, j, coef);
        }
    }

    fn insert(&mut self, i: u8, j: u64, coef: &BigRational) {
        let slot = self.terms.entry((i, j)).or_insert_with(BigRational::zero);
        *slot += coef;
        if slot.is_zero() {
            self.terms.remove(&(i, j));
        }
    }

    pub fn add(&self, other: &CycValue) -> CycValue {
        debug_assert_eq!(self.n, other.n);
        let mut out = self.clone();
        for (&(i, j), c) in &other.terms {
            out.insert(i, j, c);
        }
        out
    }

    pub fn sub(&self, other: &CycValue) -> CycValue {
        let mut out = self.clone();
        for (&(i, j), c) in &other.terms {
            let neg = -c;
            out.insert(i, j, &neg);
        }
        out
    }

    pub fn scale(&self, r: &BigRational) -> CycValue {
        if r.is_zero() {
            return CycValue { n: self.n, terms: BTreeMap::new() };
        }
        CycValue {
            n: self.n,
            terms: self.terms.iter().map(|(&k, c)| (k, c * r)).collect(),
        }
    }

    pub fn scale_int(&self, k: i64) -> CycValue {
        self.scale(&BigRational::from_integer(BigInt::from(k)))
    }

    pub fn mul(&self, ctx: &CycCtx, other: &CycValue) -> CycValue {
        debug_assert_eq!(self.n, other.n);
        let mut out = CycValue::zero(ctx);
        for (&(i1, j1), c1) in &self.terms {
            for (&(i2, j2), c2) in &other.terms {
                out.add_root_scaled(ctx, (i1 + i2) % 3, (j1 + j2) % ctx.pm, &(c1 * c2));
            }
        }
        out
    }

    /// Multiply by a single root ζ₃^i ζ_{p^M}^j (an exponent shift).
    pub fn mul_root(&self, ctx: &CycCtx, i: u8, j: u64) -> CycValue {
        let mut out = CycValue::zero(ctx);
        for (&(i1, j1), c) in &self.terms {
            out.add_root_scaled(ctx, (i1 + i) % 3, (j1 + j) % ctx.pm, c);
        }
        out
    }

    /// Multiply by the embedded μ₃ element.
    pub fn mul_mu3(&self, ctx: &CycCtx, z: Mu3) -> CycValue {
        self.mul_root(ctx, z.0, 0)
    }

    /// Complex conjugation ζ ↦ ζ^{-1}.
    pub fn conj(&self, ctx: &CycCtx) -> CycValue {
        let mut out = CycValue::zero(ctx);
        for (&(i, j), c) in &self.terms {
            out.add_root_scaled(ctx, (3 - i) % 3, (ctx.pm - j) % ctx.pm, c);
        }
        out
    }

    /// Rational part if the value is rational, else None.
    pub fn as_rational(&self) -> Option<BigRational> {
        if self.terms.is_empty() {
            return Some(BigRational::zero());
        }
        if self.terms.len() == 1 {
            if let Some(c) = self.terms.get(&(0, 0)) {
                return Some(c.clone());
            }
        }
        None
    }

    /// Numeric image under ζ_N ↦ e^{2πi/N} (display and diagnostics only).
    pub fn embed_complex(&self, ctx: &CycCtx) -> num_complex::Complex64 {
        use num_complex::Complex64;
        let mut acc = Complex64::new(0.0, 0.0);
        for (&(i, j), c) in &self.terms {
            // write j / p^M in lowest terms so the angle stays in f64 range
            let mut num = j;
            let mut k = ctx.m_exp;
            while k > 0 && num % ctx.p == 0 {
                num /= ctx.p;
                k -= 1;
            }
            let den = ctx.p.pow(k);
            let angle = std::f64::consts::TAU * (i as f64 / 3.0 + num as f64 / den as f64);
            let coef = c.to_f64().unwrap_or_else(|| {
                c.numer().to_f64().unwrap() / c.denom().to_f64().unwrap()
            });
            acc += Complex64::from_polar(coef.abs(), angle) * coef.signum();
        }
        acc
    }

    /// Exponent-coefficient pairs against ζ_N, for the report format.
    pub fn serialize_terms(&self, ctx: &CycCtx) -> Vec<(u64, String)> {
        // CRT idempotents: e3 ≡ (1,0), ep ≡ (0,1) mod (3, p^M)
        let pm_mod3 = (ctx.pm % 3) as u64;
        let inv_pm_mod3 = if pm_mod3 == 1 { 1u64 } else { 2u64 };
        let e3 = (ctx.pm as u128 * inv_pm_mod3 as u128 % ctx.n as u128) as u64;
        let inv3 = crate::padic::mod_inverse(3 % ctx.pm, ctx.pm);
        let ep = (3u128 * inv3 as u128 % ctx.n as u128) as u64;
        self.terms
            .iter()
            .map(|(&(i, j), c)| {
                let k = ((i as u128 * e3 as u128 + j as u128 * ep as u128) % ctx.n as u128) as u64;
                (k, c.to_string())
            })
            .collect()
    }
}

/// ψ(x): the fixed additive character with conductor O.
pub fn psi(f: &FieldParams, ctx: &CycCtx, x: PAdic) -> Result<CycValue, CycError> {
    match psi_exponent(f, ctx, x)? {
        None => Ok(CycValue::one(ctx)),
        Some(j) => {
            let mut v = CycValue::zero(ctx);
            v.add_root_scaled(ctx, 0, j, &BigRational::one());
            Ok(v)
        }
    }
}

/// The ζ_{p^M}-exponent of ψ(x); None means ψ(x) = 1.
///
/// For x = p^{-m} u with m > 0 this is (u mod p^m)·p^{M-m}.
pub fn psi_exponent(f: &FieldParams, ctx: &CycCtx, x: PAdic) -> Result<Option<u64>, CycError> {
    match x {
        PAdic::Zero => Ok(None),
        PAdic::NonZero { val, .. } if val >= 0 => Ok(None),
        PAdic::NonZero { val, .. } => {
            let m = (-val) as u32;
            if m > ctx.m_exp {
                return Err(CycError::ConductorOverflow(m, ctx.m_exp));
            }
            let t = f.unit_mod(x, m);
            Ok(Some(t * f.pk(ctx.m_exp - m)))
        }
    }
}

/// Embed a μ₃ element as a cyclotomic root of unity.
pub fn mu3_embed(ctx: &CycCtx, z: Mu3) -> CycValue {
    let mut v = CycValue::zero(ctx);
    v.add_root_scaled(ctx, z.0, 0, &BigRational::one());
    v
}

/// Integer accumulator for large root-of-unity sums.
///
/// Brute-force integrals add millions of terms `w · ζ₃^i ζ_{p^M}^j` whose
/// weights share the denominator q^K (q−1)^E. Numerators are accumulated as
/// i128 against that common denominator and converted to an exact CycValue
/// once at the end.
pub struct RootAccum {
    ctx: CycCtx,
    /// denominator exponents: weight = numer / (q^k_cap · (q-1)^e_cap)
    k_cap: u32,
    e_cap: u32,
    slots: HashMap<(u8, u64), i128>,
}

impl RootAccum {
    pub fn new(ctx: &CycCtx, k_cap: u32, e_cap: u32) -> Self {
        RootAccum { ctx: *ctx, k_cap, e_cap, slots: HashMap::new() }
    }

    /// Add `numer / (q^k · (q-1)^e) · ζ₃^i ζ_{p^M}^j`; (k, e) must not exceed the caps.
    pub fn add(&mut self, i: u8, j: u64, numer: i128, k: u32, e: u32) {
        assert!(k <= self.k_cap && e <= self.e_cap, "denominator exceeds accumulator cap");
        let mut scaled = numer;
        for _ in 0..(self.k_cap - k) {
            scaled = scaled.checked_mul(self.ctx.p as i128).expect("accumulator overflow");
        }
        for _ in 0..(self.e_cap - e) {
            scaled = scaled.checked_mul((self.ctx.p - 1) as i128).expect("accumulator overflow");
        }
        self.add_reduced(i % 3, j % self.ctx.pm, scaled);
    }

    fn add_reduced(&mut self, i: u8, j: u64, w: i128) {
        if w == 0 {
            return;
        }
        let top = j / self.ctx.pm_down;
        if i == 2 {
            self.add_reduced(0, j, -w);
            self.add_reduced(1, j, -w);
        } else if top == self.ctx.p - 1 {
            let r = j - top * self.ctx.pm_down;
            for t in 0..self.ctx.p - 1 {
                let slot = self.slots.entry((i, r + t * self.ctx.pm_down)).or_insert(0);
                *slot -= w;
            }
        } else {
            let slot = self.slots.entry((i, j)).or_insert(0);
            *slot += w;
        }
    }

    /// Merge another accumulator with identical caps (parallel reduction).
    pub fn merge(&mut self, other: RootAccum) {
        assert!(self.k_cap == other.k_cap && self.e_cap == other.e_cap);
        for ((i, j), w) in other.slots {
            let slot = self.slots.entry((i, j)).or_insert(0);
            *slot += w;
        }
    }

    pub fn finalize(self) -> CycValue {
        let denom = BigInt::from(self.ctx.p).pow(self.k_cap)
            * BigInt::from(self.ctx.p - 1).pow(self.e_cap);
        let mut out = CycValue::zero(&self.ctx);
        for ((i, j), w) in self.slots {
            if w != 0 {
                out.insert(i, j, &BigRational::new(BigInt::from(w), denom.clone()));
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::padic::{make_field, RhoChoice};

    fn setup() -> (FieldParams, CycCtx) {
        let f = make_field(7, 10, RhoChoice::Smaller).unwrap();
        let ctx = CycCtx::from_field(&f);
        (f, ctx)
    }

    #[test]
    fn cube_root_relation() {
        let (_, ctx) = setup();
        let one = CycValue::one(&ctx);
        let z = mu3_embed(&ctx, Mu3(1));
        let z2 = mu3_embed(&ctx, Mu3(2));
        let s = one.add(&z).add(&z2);
        assert!(s.is_zero());
        // rho^3 embeds to 1
        assert_eq!(z.mul(&ctx, &z).mul(&ctx, &z), CycValue::one(&ctx));
    }

    #[test]
    fn psi_basics() {
        let (f, ctx) = setup();
        assert_eq!(psi(&f, &ctx, f.from_int(3)).unwrap(), CycValue::one(&ctx));
        let zp = psi(&f, &ctx, f.make(-1, 1)).unwrap();
        assert_ne!(zp, CycValue::one(&ctx));
        // periodicity mod O: psi(1/p + 1) = psi(1/p)
        let x = f.add(f.make(-1, 1), f.from_int(1)).unwrap();
        assert_eq!(psi(&f, &ctx, x).unwrap(), zp);
        // conj(zeta_p) = zeta_p^{p-1}
        let zc = zp.conj(&ctx);
        let mut expect = CycValue::zero(&ctx);
        expect.add_root_scaled(&ctx, 0, ctx.pm - f.pk(ctx.m_exp - 1), &num_rational::BigRational::one());
        assert_eq!(zc, expect);
    }

    #[test]
    fn psi_additive() {
        let (f, ctx) = setup();
        let samples = [
            f.make(-2, 11),
            f.make(-1, 3),
            f.make(0, 2),
            f.make(-3, 45),
            f.from_int(-1),
        ];
        for &x in &samples {
            for &y in &samples {
                let lhs = psi(&f, &ctx, f.add(x, y).unwrap()).unwrap();
                let rhs = psi(&f, &ctx, x).unwrap().mul(&ctx, &psi(&f, &ctx, y).unwrap());
                assert_eq!(lhs, rhs);
            }
        }
    }

    #[test]
    fn rational_identities() {
        let (f, ctx) = setup();
        // 1 - 1/p == (p-1)/p
        let a = CycValue::one(&ctx).sub(&CycValue::q_power(&ctx, -1));
        let b = CycValue::from_rational(
            &ctx,
            BigRational::new(BigInt::from(f.p - 1), BigInt::from(f.p)),
        );
        assert_eq!(a, b);
    }

    #[test]
    fn gauss_sum_magnitude() {
        let (f, ctx) = setup();
        // sum_{z mod 7} zeta_7^{z^2} has |.| = sqrt(7)
        let mut s = CycValue::zero(&ctx);
        for z in 0..7u64 {
            let x = if z == 0 {
                crate::padic::PAdic::Zero
            } else {
                f.mul(f.make(-1, 1), f.from_int((z * z) as i64)).unwrap()
            };
            s = s.add(&psi(&f, &ctx, x).unwrap());
        }
        let c = s.embed_complex(&ctx);
        assert!((c.norm() - 7f64.sqrt()).abs() < 1e-9);
    }

    #[test]
    fn conj_is_ring_involution() {
        let (f, ctx) = setup();
        let a = psi(&f, &ctx, f.make(-2, 5)).unwrap().add(&CycValue::from_int(&ctx, 3));
        let b = psi(&f, &ctx, f.make(-1, 2)).unwrap().scale_int(-2);
        assert_eq!(a.conj(&ctx).conj(&ctx), a);
        let lhs = a.mul(&ctx, &b).conj(&ctx);
        let rhs = a.conj(&ctx).mul(&ctx, &b.conj(&ctx));
        assert_eq!(lhs, rhs);
    }

    #[test]
    fn accumulator_matches_direct() {
        let (f, ctx) = setup();
        let mut acc = RootAccum::new(&ctx, 3, 1);
        let mut direct = CycValue::zero(&ctx);
        for t in (0..24u64).filter(|t| (2 * t + 1) % 7 != 0) {
            let x = f.make(-2, 2 * t + 1);
            let v = psi(&f, &ctx, x).unwrap();
            let w = BigRational::new(BigInt::from(1), BigInt::from(7i64.pow(2) * 6));
            direct = direct.add(&v.scale(&w));
            if let Some(j) = psi_exponent(&f, &ctx, x).unwrap() {
                acc.add(0, j, 1, 2, 1);
            } else {
                acc.add(0, 0, 1, 2, 1);
            }
        }
        assert_eq!(acc.finalize(), direct);
    }

    #[test]
    fn embed_is_ring_hom() {
        let (f, ctx) = setup();
        let a = psi(&f, &ctx, f.make(-2, 3)).unwrap().add(&CycValue::from_int(&ctx, 2));
        let b = psi(&f, &ctx, f.make(-1, 4)).unwrap().sub(&CycValue::q_power(&ctx, -2));
        let prod = a.mul(&ctx, &b).embed_complex(&ctx);
        let sep = a.embed_complex(&ctx) * b.embed_complex(&ctx);
        assert!((prod - sep).norm() < 1e-12);
    }
}
