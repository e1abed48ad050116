//! Exact truncated arithmetic in Q_p for p ≡ 1 (mod 3), p > 3.
//!
//! A nonzero element is stored in capped-relative form `p^val * unit` where
//! the unit is carried modulo `p^prec`. Every constructor starts from the
//! field's working precision; arithmetic tracks how many significant digits
//! survive and fails loudly with [`ArithError::PrecisionLoss`] once a result
//! drops below the configured minimum. Zero is an explicit tagged value.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ArithError {
    #[error("division by zero")]
    DivisionByZero,
    #[error("precision loss: {0} significant digits left (minimum {1})")]
    PrecisionLoss(u32, u32),
    #[error("no square root: {0}")]
    NoSquareRoot(&'static str),
    #[error("invalid field parameters: {0}")]
    BadField(String),
}

pub type ArithResult<T> = Result<T, ArithError>;

/// Which root of x² + x + 1 mod p to lift when constructing ρ.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RhoChoice {
    Smaller,
    Larger,
}

/// An element of Q_p at working precision.
///
/// `NonZero { val, unit, prec }` represents `p^val * u` with `u ≡ unit
/// (mod p^prec)`, `unit` coprime to p and reduced into `[1, p^prec)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PAdic {
    Zero,
    NonZero { val: i64, unit: u64, prec: u32 },
}

impl PAdic {
    pub fn is_zero(&self) -> bool {
        matches!(self, PAdic::Zero)
    }

    /// Valuation; None for the exact zero.
    pub fn val(&self) -> Option<i64> {
        match self {
            PAdic::Zero => None,
            PAdic::NonZero { val, .. } => Some(*val),
        }
    }

    /// Valuation with zero mapped to +infinity for domain tests.
    pub fn val_or_inf(&self) -> i64 {
        self.val().unwrap_or(i64::MAX / 4)
    }

    pub fn prec(&self) -> Option<u32> {
        match self {
            PAdic::NonZero { prec, .. } => Some(*prec),
            PAdic::Zero => None,
        }
    }

    /// `true` when the element lies in the ring of integers O (zero included).
    pub fn in_o(&self) -> bool {
        self.val_or_inf() >= 0
    }

    /// `true` when the element is a unit of O.
    pub fn is_unit(&self) -> bool {
        self.val() == Some(0)
    }
}

/// Ambient field data: the prime, working precision, the chosen lift of ρ
/// and the cyclotomic order N = 3·p^M used for character values.
#[derive(Debug, Clone)]
pub struct FieldParams {
    pub p: u64,
    /// Working precision P (p-adic digits carried by fresh values).
    pub precision: u32,
    /// Minimum significant digits before an operation reports PrecisionLoss.
    pub min_sig: u32,
    /// Hensel lift of the chosen root of x² + x + 1.
    pub rho: PAdic,
    /// ψ can be evaluated down to valuation −M; cyclotomic order is 3·p^M.
    pub conductor_cap: u32,
    /// Residue of rho mod p, cached for symbol computations.
    pub rho_residue: u64,
    pow_table: Vec<u64>,
}

fn is_prime_u64(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2u64;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

/// Construct field parameters, Hensel-lifting ρ from the selected residue.
///
/// Rejects p ≤ 3, composite p and p ≢ 1 (mod 3). Precision is capped so that
/// p^P fits in 62 bits; unit arithmetic then never overflows u128 products.
pub fn make_field(p: u64, precision: u32, rho_choice: RhoChoice) -> ArithResult<FieldParams> {
    if p <= 3 {
        return Err(ArithError::BadField(format!("p = {p} must exceed 3")));
    }
    if !is_prime_u64(p) {
        return Err(ArithError::BadField(format!("p = {p} is not prime")));
    }
    if p % 3 != 1 {
        return Err(ArithError::BadField(format!("p = {p} is not 1 mod 3")));
    }
    if precision < 2 {
        return Err(ArithError::BadField("precision must be at least 2".into()));
    }
    let mut pow_table = vec![1u64];
    for _ in 0..precision {
        let last = *pow_table.last().unwrap();
        let next = last.checked_mul(p).filter(|&v| v < (1u64 << 62)).ok_or_else(|| {
            ArithError::BadField(format!("p^{precision} exceeds the 62-bit unit cap"))
        })?;
        pow_table.push(next);
    }
    // roots of x^2 + x + 1 in F_p; exactly two since p ≡ 1 (mod 3)
    let mut roots: Vec<u64> = (1..p).filter(|&r| (r * r + r + 1) % p == 0).collect();
    roots.sort_unstable();
    debug_assert_eq!(roots.len(), 2);
    let r0 = match rho_choice {
        RhoChoice::Smaller => roots[0],
        RhoChoice::Larger => roots[1],
    };
    let mut field = FieldParams {
        p,
        precision,
        min_sig: 4.min(precision),
        rho: PAdic::Zero,
        conductor_cap: precision,
        rho_residue: r0,
        pow_table,
    };
    field.rho = field.hensel_root_x2x1(r0)?;
    Ok(field)
}

impl FieldParams {
    /// p^k as u64 (k must stay within the working table).
    pub fn pk(&self, k: u32) -> u64 {
        self.pow_table[k as usize]
    }

    pub fn modulus(&self) -> u64 {
        self.pk(self.precision)
    }

    fn reduce_unit(&self, u: u64, prec: u32) -> u64 {
        u % self.pk(prec)
    }

    /// Fresh nonzero element `p^val * unit` at full working precision.
    pub fn make(&self, val: i64, unit: u64) -> PAdic {
        let u = unit % self.modulus();
        assert!(u % self.p != 0, "unit part must be coprime to p");
        PAdic::NonZero { val, unit: u, prec: self.precision }
    }

    /// Embed an integer exactly (valuation extracted, unit at full precision).
    pub fn from_int(&self, n: i64) -> PAdic {
        if n == 0 {
            return PAdic::Zero;
        }
        let neg = n < 0;
        let mut m = n.unsigned_abs();
        let mut val = 0i64;
        while m % self.p == 0 {
            m /= self.p;
            val += 1;
        }
        let modulus = self.modulus();
        let mut u = m % modulus;
        if neg {
            u = modulus - u;
        }
        PAdic::NonZero { val, unit: u, prec: self.precision }
    }

    /// `u · ρ^k · p^m` with integer u coprime to p — the CLI element syntax.
    pub fn from_parts(&self, u: i64, rho_exp: u32, p_exp: i64) -> ArithResult<PAdic> {
        let mut x = self.from_int(u);
        for _ in 0..(rho_exp % 3) {
            x = self.mul(x, self.rho)?;
        }
        Ok(self.shift(x, p_exp))
    }

    /// Multiply by p^k (exact).
    pub fn shift(&self, x: PAdic, k: i64) -> PAdic {
        match x {
            PAdic::Zero => PAdic::Zero,
            PAdic::NonZero { val, unit, prec } => PAdic::NonZero { val: val + k, unit, prec },
        }
    }

    pub fn neg(&self, x: PAdic) -> PAdic {
        match x {
            PAdic::Zero => PAdic::Zero,
            PAdic::NonZero { val, unit, prec } => {
                PAdic::NonZero { val, unit: self.pk(prec) - unit, prec }
            }
        }
    }

    pub fn add(&self, x: PAdic, y: PAdic) -> ArithResult<PAdic> {
        let (xv, xu, xp, yv, yu, yp) = match (x, y) {
            (PAdic::Zero, _) => return Ok(y),
            (_, PAdic::Zero) => return Ok(x),
            (
                PAdic::NonZero { val: xv, unit: xu, prec: xp },
                PAdic::NonZero { val: yv, unit: yu, prec: yp },
            ) => (xv, xu, xp, yv, yu, yp),
        };
        let v = xv.min(yv);
        let dx = (xv - v) as u32;
        let dy = (yv - v) as u32;
        // absolute precision of the aligned sum
        let avail = (xp + dx).min(yp + dy).min(self.precision);
        if dx >= avail && dy >= avail {
            // both shifted out of the window; cannot happen since one shift is 0
            unreachable!();
        }
        let m = self.pk(avail);
        let a = if dx >= avail { 0 } else { self.reduce_unit(xu, avail - dx) * self.pk(dx) };
        let b = if dy >= avail { 0 } else { self.reduce_unit(yu, avail - dy) * self.pk(dy) };
        let s = (a + b) % m;
        if s == 0 {
            // full-width cancellation: by the precision-margin convention this
            // is a constructed zero (e.g. rho^2 + rho + 1)
            return Ok(PAdic::Zero);
        }
        let mut sv = 0u32;
        let mut su = s;
        while su % self.p == 0 {
            su /= self.p;
            sv += 1;
        }
        let rem = avail - sv;
        if rem < self.min_sig {
            return Err(ArithError::PrecisionLoss(rem, self.min_sig));
        }
        Ok(PAdic::NonZero { val: v + sv as i64, unit: su, prec: rem })
    }

    pub fn sub(&self, x: PAdic, y: PAdic) -> ArithResult<PAdic> {
        self.add(x, self.neg(y))
    }

    pub fn mul(&self, x: PAdic, y: PAdic) -> ArithResult<PAdic> {
        match (x, y) {
            (PAdic::Zero, _) | (_, PAdic::Zero) => Ok(PAdic::Zero),
            (
                PAdic::NonZero { val: xv, unit: xu, prec: xp },
                PAdic::NonZero { val: yv, unit: yu, prec: yp },
            ) => {
                let prec = xp.min(yp);
                let m = self.pk(prec) as u128;
                let u = ((xu as u128 % m) * (yu as u128 % m) % m) as u64;
                Ok(PAdic::NonZero { val: xv + yv, unit: u, prec })
            }
        }
    }

    pub fn div(&self, x: PAdic, y: PAdic) -> ArithResult<PAdic> {
        let yi = self.inv(y)?;
        self.mul(x, yi)
    }

    pub fn inv(&self, x: PAdic) -> ArithResult<PAdic> {
        match x {
            PAdic::Zero => Err(ArithError::DivisionByZero),
            PAdic::NonZero { val, unit, prec } => {
                let u = mod_inverse(unit, self.pk(prec));
                Ok(PAdic::NonZero { val: -val, unit: u, prec })
            }
        }
    }

    pub fn pow(&self, x: PAdic, e: i64) -> ArithResult<PAdic> {
        if e < 0 {
            return self.pow(self.inv(x)?, -e);
        }
        let mut acc = self.from_int(1);
        for _ in 0..e {
            acc = self.mul(acc, x)?;
        }
        Ok(acc)
    }

    /// Product of an integer scalar with x.
    pub fn int_mul(&self, n: i64, x: PAdic) -> ArithResult<PAdic> {
        self.mul(self.from_int(n), x)
    }

    /// Sum of a slice, failing on precision loss.
    pub fn sum(&self, xs: &[PAdic]) -> ArithResult<PAdic> {
        let mut acc = PAdic::Zero;
        for &x in xs {
            acc = self.add(acc, x)?;
        }
        Ok(acc)
    }

    /// The unit part reduced mod p^k. Panics on zero input.
    pub fn unit_mod(&self, x: PAdic, k: u32) -> u64 {
        match x {
            PAdic::Zero => panic!("unit_mod on zero"),
            PAdic::NonZero { unit, prec, .. } => {
                assert!(k <= prec, "requested {k} digits, only {prec} known");
                unit % self.pk(k)
            }
        }
    }

    /// Residue of the unit part mod p.
    pub fn unit_residue(&self, x: PAdic) -> u64 {
        self.unit_mod(x, 1)
    }

    /// Congruence test x ≡ y (mod p^k·p^{val floor}); exact on the carried digits.
    pub fn congruent(&self, x: PAdic, y: PAdic, k: i64) -> bool {
        // x ≡ y mod p^k in the additive sense: val(x − y) ≥ k
        match self.sub(x, y) {
            Ok(d) => d.val_or_inf() >= k,
            Err(_) => true, // cancellation deeper than precision certainly reaches p^k
        }
    }

    /// Hensel lift of a residue r0 with r0² + r0 + 1 ≡ 0 (mod p).
    fn hensel_root_x2x1(&self, r0: u64) -> ArithResult<PAdic> {
        // Newton iteration x <- x - f(x)/f'(x) for f = x^2 + x + 1
        let m = self.modulus() as u128;
        let mut x = r0 as u128;
        for _ in 0..64 {
            let fx = (x * x + x + 1) % m;
            if fx == 0 {
                break;
            }
            let fpx = (2 * x + 1) % m;
            let fpx_inv = mod_inverse(fpx as u64, m as u64) as u128;
            x = (x + m - (fx * fpx_inv) % m) % m;
        }
        debug_assert_eq!((x * x + x + 1) % m, 0);
        Ok(PAdic::NonZero { val: 0, unit: x as u64, prec: self.precision })
    }

    /// Square root by Hensel lifting.
    ///
    /// Fails with NoSquareRoot when the valuation is odd or the unit is a
    /// quadratic non-residue mod p — the vanishing branches of the closed
    /// Kloosterman/cubic formulas key off this error.
    pub fn hensel_sqrt(&self, x: PAdic) -> ArithResult<PAdic> {
        let (val, unit, prec) = match x {
            PAdic::Zero => return Err(ArithError::NoSquareRoot("zero argument")),
            PAdic::NonZero { val, unit, prec } => (val, unit, prec),
        };
        if val % 2 != 0 {
            return Err(ArithError::NoSquareRoot("odd valuation"));
        }
        let r0 = (1..self.p).find(|&r| (r * r) % self.p == unit % self.p);
        let r0 = match r0 {
            Some(r) => r,
            None => return Err(ArithError::NoSquareRoot("unit is a non-residue")),
        };
        // Newton lift of r0^2 = unit mod p^prec
        let m = self.pk(prec) as u128;
        let mut r = r0 as u128;
        for _ in 0..64 {
            let fx = (r * r + m - unit as u128 % m) % m;
            if fx == 0 {
                break;
            }
            let fpx_inv = mod_inverse((2 * r % m) as u64, m as u64) as u128;
            r = (r + m - fx * fpx_inv % m) % m;
        }
        debug_assert_eq!(r * r % m, unit as u128 % m);
        Ok(PAdic::NonZero { val: val / 2, unit: r as u64, prec })
    }

    /// Is x a square in F*? (even valuation and unit a residue mod p)
    pub fn is_square(&self, x: PAdic) -> bool {
        match x {
            PAdic::Zero => false,
            PAdic::NonZero { val, unit, .. } => {
                val % 2 == 0 && {
                    let r = unit % self.p;
                    (1..self.p).any(|t| t * t % self.p == r)
                }
            }
        }
    }

    /// Is x a unit square (element of O*²)?
    pub fn is_unit_square(&self, x: PAdic) -> bool {
        x.val() == Some(0) && self.is_square(x)
    }
}

/// Modular inverse for odd prime-power modulus.
pub fn mod_inverse(a: u64, m: u64) -> u64 {
    let (mut t, mut new_t) = (0i128, 1i128);
    let (mut r, mut new_r) = (m as i128, (a % m) as i128);
    while new_r != 0 {
        let q = r / new_r;
        (t, new_t) = (new_t, t - q * new_t);
        (r, new_r) = (new_r, r - q * new_r);
    }
    assert_eq!(r, 1, "element not invertible");
    (((t % m as i128) + m as i128) % m as i128) as u64
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f7() -> FieldParams {
        make_field(7, 12, RhoChoice::Smaller).unwrap()
    }

    #[test]
    fn field_construction_and_rho() {
        let f = f7();
        assert_eq!(f.rho_residue, 2); // roots of x²+x+1 mod 7 are 2 and 4
        let f13 = make_field(13, 10, RhoChoice::Smaller).unwrap();
        assert_eq!(f13.rho_residue, 3); // roots mod 13 are 3 and 9
        assert!(make_field(5, 8, RhoChoice::Smaller).is_err());
        assert!(make_field(9, 8, RhoChoice::Smaller).is_err());
        assert!(make_field(3, 8, RhoChoice::Smaller).is_err());
    }

    #[test]
    fn rho_is_cube_root() {
        let f = f7();
        let r3 = f.pow(f.rho, 3).unwrap();
        assert_eq!(r3, f.from_int(1));
        assert_ne!(f.rho, f.from_int(1));
        // rho² + rho + 1 = 0 at full precision
        let r2 = f.mul(f.rho, f.rho).unwrap();
        let s = f.add(f.add(r2, f.rho).unwrap(), f.from_int(1)).unwrap();
        assert!(s.is_zero());
    }

    #[test]
    fn valuation_rules() {
        let f = f7();
        let x = f.make(1, 3);
        let y = f.make(1, 4);
        let xy = f.mul(x, y).unwrap();
        assert_eq!(xy.val(), Some(2));
        assert_eq!(f.unit_residue(xy), 12 % 7);
        let one = f.from_int(1);
        let minus_one = f.from_int(-1);
        assert!(f.add(one, minus_one).unwrap().is_zero());
    }

    #[test]
    fn add_extracts_valuation() {
        let f = f7();
        // 3 + 4 = 7 = p·1
        let s = f.add(f.from_int(3), f.from_int(4)).unwrap();
        assert_eq!(s.val(), Some(1));
        assert_eq!(f.unit_residue(s), 1);
        // precision drops by one digit
        assert_eq!(s.prec(), Some(11));
    }

    #[test]
    fn precision_loss_fires() {
        let f = make_field(7, 6, RhoChoice::Smaller).unwrap();
        // 1 + (7^4 - 1): cancellation through 4 of 6 digits leaves 2 < min_sig
        let x = f.from_int(1);
        let y = f.from_int(7i64.pow(4) - 1);
        match f.add(x, y) {
            Err(ArithError::PrecisionLoss(left, _)) => assert_eq!(left, 2),
            other => panic!("expected precision loss, got {other:?}"),
        }
    }

    #[test]
    fn sqrt_cases() {
        let f = f7();
        let y = f.hensel_sqrt(f.from_int(4)).unwrap();
        let sq = f.mul(y, y).unwrap();
        assert_eq!(sq, f.from_int(4));
        assert!(matches!(
            f.hensel_sqrt(f.from_int(7)),
            Err(ArithError::NoSquareRoot("odd valuation"))
        ));
        // -3 = (1 + 2rho)² is a unit square
        let m3 = f.from_int(-3);
        let r = f.hensel_sqrt(m3).unwrap();
        assert_eq!(f.mul(r, r).unwrap(), m3);
        let going = f.add(f.from_int(1), f.int_mul(2, f.rho).unwrap()).unwrap();
        let sq2 = f.mul(going, going).unwrap();
        assert_eq!(sq2, m3);
    }

    #[test]
    fn division() {
        let f = f7();
        let x = f.make(2, 3);
        let y = f.make(-1, 5);
        let q = f.div(x, y).unwrap();
        assert_eq!(q.val(), Some(3));
        let back = f.mul(q, y).unwrap();
        assert_eq!(back, x);
        assert!(f.div(x, PAdic::Zero).is_err());
    }
}
