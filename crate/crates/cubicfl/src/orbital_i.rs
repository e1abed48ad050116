//! The orbital integral I(a,b) on the PGL₃ side: closed seven-case formula,
//! the full reduction tower as independent brute-force layers, and the two
//! degenerate-orbit integrals I₁(a), I₂(a).
//!
//! Layer map for I(a,b):
//! - `full`: the raw five-fold integral with the |t|² d*t factor; the two
//!   coordinates that enter the phase linearly (z and s) are integrated by
//!   the exact linear-phase ball formula, the rest is summed over cosets.
//! - `j-sum`: Σ_j I(j;a,b) with I(j;·) in its three-variable form after the
//!   z-integration.
//! - `reduced`: I(j;a,b) as a two-variable cubic-phase sum after the
//!   s-integration.
//! - `split`: the same domain split three ways by the position of y, the
//!   pieces summed separately.
//!
//! All layers are exact; they agree with each other and with the closed
//! formula wherever domains overlap.

use crate::cyclo::{psi, CycValue};
use crate::padic::{FieldParams, PAdic};
use crate::region::q_rat;
use crate::sums::{cubic_closed, CubicKind, SumError, SumParams, SumResult};

/// Which brute-force evaluation layer of I(a,b).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ILayer {
    Full,
    JSum,
    Reduced,
    Split,
}

fn v_inf(x: PAdic) -> i64 {
    x.val_or_inf()
}

/// Closed form for I(a,b) (the seven-case table for |b| ≤ |a|, extended by
/// the functional equation I(a,b) = I(−b,−a)).
pub fn i_closed(sp: &SumParams, a: PAdic, b: PAdic) -> SumResult<CycValue> {
    let f = &sp.field;
    let ctx = &sp.ctx;
    if a.is_zero() || b.is_zero() {
        return Err(SumError::ZeroArgument);
    }
    let (va, vb) = (a.val().unwrap(), b.val().unwrap());
    if va < 0 || vb < 0 {
        return Ok(CycValue::zero(ctx));
    }
    if vb < va {
        // I(a,b) = I(-b,-a) moves us to the |b| <= |a| half
        return i_closed(sp, f.neg(b), f.neg(a));
    }
    if va == 0 && vb == 0 {
        return Ok(CycValue::one(ctx));
    }
    if va == 1 && vb == 1 {
        return Ok(CycValue::from_int(ctx, 2 * f.p as i64));
    }
    let ai = f.inv(a)?;
    let bi = f.inv(b)?;
    let two_ab = f.int_mul(2, f.mul(ai, bi)?)?;
    if va == vb {
        // 3|a|⁻¹ + |ab|⁻¹ Σ_ℓ Σ_k C_ℓ(b⁻¹ − ρ^k a⁻¹, 2a⁻¹b⁻¹)
        let mut acc = CycValue::q_power(ctx, va).scale_int(3);
        let scale = q_rat(f.p, va + vb);
        for l in (va + 1).div_euclid(2)..=va - 1 {
            let mut rho_k = f.from_int(1);
            for _ in 0..3 {
                let first = f.sub(bi, f.mul(rho_k, ai)?)?;
                let c = cubic_closed(sp, CubicKind::Cl(l), first, two_ab)?;
                acc = acc.add(&c.scale(&scale));
                rho_k = f.mul(rho_k, f.rho)?;
            }
        }
        return Ok(acc);
    }
    // now vb > va
    if va == 0 {
        let c = cubic_closed(sp, CubicKind::C, bi, two_ab)?;
        return Ok(c.scale(&q_rat(f.p, vb)));
    }
    if va % 2 != 0 {
        return Ok(CycValue::zero(ctx));
    }
    let mut acc = CycValue::zero(ctx);
    let scale = q_rat(f.p, va + vb);
    let mut rho_k = f.from_int(1);
    for _ in 0..3 {
        let first = f.sub(bi, f.mul(rho_k, ai)?)?;
        let c = cubic_closed(sp, CubicKind::Cl(va / 2), first, two_ab)?;
        acc = acc.add(&c.scale(&scale));
        rho_k = f.mul(rho_k, f.rho)?;
    }
    Ok(acc)
}

/// Exact ∫_{c+p^D O} ψ(μ s) ds = q^{-D} ψ(μ c) [val(μ) ≥ -D]; None when the
/// oscillation kills the ball.
fn ball_linear_psi(
    sp: &SumParams,
    center: PAdic,
    depth: i64,
    coeff: PAdic,
) -> SumResult<Option<(i64, CycValue)>> {
    if v_inf(coeff) < -depth {
        return Ok(None);
    }
    let f = &sp.field;
    let v = psi(f, &sp.ctx, f.mul(coeff, center)?)?;
    Ok(Some((depth, v)))
}

/// Intersection of two balls c1 + p^{d1}O and c2 + p^{d2}O: the finer ball
/// when the centers agree to the coarser radius, else empty.
fn ball_intersect(
    f: &FieldParams,
    c1: PAdic,
    d1: i64,
    c2: PAdic,
    d2: i64,
) -> SumResult<Option<(PAdic, i64)>> {
    let dmin = d1.min(d2);
    let diff = f.sub(c1, c2)?;
    if v_inf(diff) < dmin {
        return Ok(None);
    }
    Ok(if d1 >= d2 { Some((c1, d1)) } else { Some((c2, d2)) })
}

/// Coset representatives p^floor (t + p^digits O) of the ball p^floor O.
fn ball_reps(f: &FieldParams, floor: i64, digits: u32) -> Vec<PAdic> {
    (0..f.pk(digits))
        .map(|t| if t == 0 { PAdic::Zero } else { f.shift(f.from_int(t as i64), floor) })
        .collect()
}

/// Retry a digit-parameterized exact sum until two consecutive depths agree.
fn stabilize(
    d0: u32,
    tries: u32,
    mut eval: impl FnMut(u32) -> SumResult<CycValue>,
) -> SumResult<CycValue> {
    let mut prev = eval(d0)?;
    for d in d0 + 1..=d0 + tries {
        let cur = eval(d)?;
        if cur == prev {
            return Ok(cur);
        }
        prev = cur;
    }
    Err(SumError::Stability(d0 + tries))
}

/// I(j;a,b) in the three-variable form (the j-sum layer integrand):
/// q^{-j} ∫ ψ[x+y+2(bx²y−axy²+(abxy−b²x²−a²y²)s)] over
/// x+as, y−bs ∈ p^{-j}, bx, ay ∈ p^j.
fn i_j_three_var(sp: &SumParams, a: PAdic, b: PAdic, j: i64, digits: u32) -> SumResult<CycValue> {
    let f = &sp.field;
    let ctx = &sp.ctx;
    let (va, vb) = (a.val().unwrap(), b.val().unwrap());
    let mut acc = CycValue::zero(ctx);
    let (xf, yf) = (j - vb, j - va);
    let meas = q_rat(f.p, -(xf + digits as i64)) * q_rat(f.p, -(yf + digits as i64));
    for x in ball_reps(f, xf, digits) {
        for y in ball_reps(f, yf, digits) {
            // s-ball from x+as, y−bs ∈ p^{-j}
            let c1 = f.neg(f.div(x, a)?);
            let c2 = f.div(y, b)?;
            let s_ball = ball_intersect(f, c1, -j - va, c2, -j - vb)?;
            let (s0, ds) = match s_ball {
                None => continue,
                Some(v) => v,
            };
            let bx2y = f.mul(b, f.mul(f.mul(x, x)?, y)?)?;
            let axy2 = f.mul(a, f.mul(x, f.mul(y, y)?)?)?;
            let abxy = f.mul(f.mul(a, b)?, f.mul(x, y)?)?;
            let b2x2 = f.mul(f.mul(b, b)?, f.mul(x, x)?)?;
            let a2y2 = f.mul(f.mul(a, a)?, f.mul(y, y)?)?;
            let mu = f.int_mul(2, f.sub(abxy, f.add(b2x2, a2y2)?)?)?;
            let base = f.add(f.add(x, y)?, f.int_mul(2, f.sub(bx2y, axy2)?)?)?;
            if let Some((d, v)) = ball_linear_psi(sp, s0, ds, mu)? {
                let term = psi(f, ctx, base)?.mul(ctx, &v);
                acc = acc.add(&term.scale(&(q_rat(f.p, -d) * &meas)));
            }
        }
    }
    Ok(acc.scale(&q_rat(f.p, -j)))
}

/// I(j;a,b) in the two-variable reduced form:
/// |a|⁻¹ ∫ ψ[(1−ρa⁻¹b)x − (1+2ρ)y + 2a⁻¹b²x³] over the domain
/// bx−ρay ∈ a p^{-j}, bx, ay, y(bx+ay) ∈ p^j, restricted by `y_filter`.
fn i_j_reduced_filtered(
    sp: &SumParams,
    a: PAdic,
    b: PAdic,
    j: i64,
    digits: u32,
    y_filter: impl Fn(i64) -> bool,
) -> SumResult<CycValue> {
    let f = &sp.field;
    let ctx = &sp.ctx;
    let (va, vb) = (a.val().unwrap(), b.val().unwrap());
    let ai = f.inv(a)?;
    let coef_x = f.sub(f.from_int(1), f.mul(f.rho, f.mul(ai, b)?)?)?;
    let coef_y = f.neg(f.add(f.from_int(1), f.int_mul(2, f.rho)?)?);
    let coef_x3 = f.int_mul(2, f.mul(ai, f.mul(b, b)?)?)?;
    let (xf, yf) = (j - vb, j - va);
    let meas = q_rat(f.p, -(xf + digits as i64)) * q_rat(f.p, -(yf + digits as i64));
    let mut acc = CycValue::zero(ctx);
    for x in ball_reps(f, xf, digits) {
        let bx = f.mul(b, x)?;
        for y in ball_reps(f, yf, digits) {
            if !y_filter(v_inf(y)) {
                continue;
            }
            let ay = f.mul(a, y)?;
            // domain predicates, all on exact valuations
            if v_inf(f.sub(bx, f.mul(f.rho, ay)?)?) < va - j {
                continue;
            }
            if v_inf(f.mul(y, f.add(bx, ay)?)?) < j {
                continue;
            }
            let x3 = f.mul(x, f.mul(x, x)?)?;
            let arg =
                f.add(f.add(f.mul(coef_x, x)?, f.mul(coef_y, y)?)?, f.mul(coef_x3, x3)?)?;
            acc = acc.add(&psi(f, ctx, arg)?.scale(&meas));
        }
    }
    Ok(acc.scale(&q_rat(f.p, va)))
}

/// The three-way split of I(j;a,b) by the position of y.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SplitPiece {
    One,
    Two,
    Three,
}

/// m = min(j, val(a)−j, ⌊(val(a)−j)/2⌋) controlling the first split piece.
fn split_m(va: i64, j: i64) -> i64 {
    j.min(va - j).min((va - j).div_euclid(2))
}

/// One split piece of I(j;a,b), by direct filtered summation.
pub fn i_split_piece(
    sp: &SumParams,
    a: PAdic,
    b: PAdic,
    j: i64,
    piece: SplitPiece,
) -> SumResult<CycValue> {
    let va = a.val().ok_or(SumError::ZeroArgument)?;
    let m = split_m(va, j);
    let d0 = base_digits(a, b) + 1;
    stabilize(d0, 4, |d| {
        i_j_reduced_filtered(sp, a, b, j, d, |vy| match piece {
            SplitPiece::One => vy >= -m,
            SplitPiece::Two => vy < -j,
            SplitPiece::Three => vy >= -j && 2 * vy + va < j,
        })
    })
}

fn base_digits(a: PAdic, b: PAdic) -> u32 {
    let va = v_inf(a).clamp(0, 8) as u32;
    let vb = v_inf(b).clamp(0, 8) as u32;
    2 + va.max(vb)
}

/// The full five-fold integral, with t integrated shell-by-shell and the
/// linear-phase coordinates z and s integrated exactly.
///
/// For fixed val(t) = j the constraint system is an affine image of the box
/// (R, λ) ∈ p^j × p^j with R = bx + ρ²ay and λ = 2bρx + 2aρ²y (the z-phase
/// coefficient), so the sum runs over that box; dx dy = |ab|⁻¹ dR dλ.
fn i_full_layer(sp: &SumParams, a: PAdic, b: PAdic) -> SumResult<CycValue> {
    let f = &sp.field;
    let ctx = &sp.ctx;
    let (va, vb) = (a.val().unwrap(), b.val().unwrap());
    if va < 0 || vb < 0 {
        return Ok(CycValue::zero(ctx));
    }
    if va > 1 || vb > 1 {
        return Err(SumError::CostGuard(
            "full layer is budgeted for max(|a|⁻¹,|b|⁻¹) ≤ q".into(),
        ));
    }
    let rho = f.rho;
    let rho2 = f.mul(rho, rho)?;
    // (x, y) from (R, λ): det = 2abρ²(1−ρ)
    let det = f.mul(f.int_mul(2, f.mul(a, b)?)?, f.mul(rho2, f.sub(f.from_int(1), rho)?)?)?;
    let det_inv = f.inv(det)?;
    let rho_inv = f.inv(rho)?;
    let mut total = CycValue::zero(ctx);
    for j in 0..=va.min(vb) {
        let jj = j;
        let layer = stabilize(2 + (va + vb) as u32, 4, |digits| {
            let mut acc = CycValue::zero(ctx);
            let meas = q_rat(f.p, -2 * (jj + digits as i64));
            for r_rep in ball_reps(f, jj, digits) {
                for l_rep in ball_reps(f, jj, digits) {
                    // x = aρ²(2R−λ)/det, y = b(λ−2ρR)/det
                    let x = f.mul(
                        f.mul(a, rho2)?,
                        f.mul(f.sub(f.int_mul(2, r_rep)?, l_rep)?, det_inv)?,
                    )?;
                    let y = f.mul(
                        b,
                        f.mul(f.sub(l_rep, f.int_mul(2, f.mul(rho, r_rep)?)?)?, det_inv)?,
                    )?;
                    let c1 = f.neg(f.div(x, a)?);
                    let c2 = f.div(y, b)?;
                    let (s0, ds) = match ball_intersect(f, c1, -jj - va, c2, -jj - vb)? {
                        None => continue,
                        Some(v) => v,
                    };
                    // s-phase coefficient −λρ⁻¹R from the z-ball center
                    let lr = f.mul(l_rep, f.mul(rho_inv, r_rep)?)?;
                    if v_inf(lr) < -ds {
                        continue;
                    }
                    // Φ(s₀) = x + y + 2aρ²xy² − λρ⁻¹(R s₀ − xy)
                    let xy = f.mul(x, y)?;
                    let cubic =
                        f.int_mul(2, f.mul(f.mul(a, rho2)?, f.mul(x, f.mul(y, y)?)?)?)?;
                    let zc = f.mul(f.mul(l_rep, rho_inv)?, f.sub(f.mul(r_rep, s0)?, xy)?)?;
                    let phase = f.sub(f.add(f.add(x, y)?, cubic)?, zc)?;
                    let w = &meas * q_rat(f.p, jj) * q_rat(f.p, -ds);
                    acc = acc.add(&psi(f, ctx, phase)?.scale(&w));
                }
            }
            // q^{-2j} |t|² weight and |ab|⁻¹ Jacobian
            Ok(acc.scale(&(q_rat(f.p, -2 * jj) * q_rat(f.p, va + vb))))
        })?;
        total = total.add(&layer);
    }
    Ok(total)
}

/// Brute-force I(a,b) at the requested layer of the reduction tower.
pub fn i_brute(sp: &SumParams, a: PAdic, b: PAdic, layer: ILayer) -> SumResult<CycValue> {
    let ctx = &sp.ctx;
    if a.is_zero() || b.is_zero() {
        return Err(SumError::ZeroArgument);
    }
    let (va, vb) = (a.val().unwrap(), b.val().unwrap());
    if layer == ILayer::Full {
        return i_full_layer(sp, a, b);
    }
    if va < 0 || vb < 0 {
        return Err(SumError::HypothesisNotMet(
            "tower layers need a, b ∈ O (the full layer handles the vanishing range)".into(),
        ));
    }
    if matches!(layer, ILayer::Reduced | ILayer::Split) && vb < va {
        return Err(SumError::HypothesisNotMet("reduced/split layers assume |b| ≤ |a|".into()));
    }
    let mut acc = CycValue::zero(ctx);
    for j in 0..=va.min(vb) {
        let piece = match layer {
            ILayer::JSum => {
                let d0 = base_digits(a, b);
                stabilize(d0, 4, |d| i_j_three_var(sp, a, b, j, d))?
            }
            ILayer::Reduced => {
                let d0 = base_digits(a, b) + 1;
                stabilize(d0, 4, |d| i_j_reduced_filtered(sp, a, b, j, d, |_| true))?
            }
            ILayer::Split => {
                let mut s = CycValue::zero(ctx);
                for piece in [SplitPiece::One, SplitPiece::Two, SplitPiece::Three] {
                    s = s.add(&i_split_piece(sp, a, b, j, piece)?);
                }
                s
            }
            ILayer::Full => unreachable!(),
        };
        acc = acc.add(&piece);
    }
    Ok(acc)
}

/// I(j;a,b) itself (three-variable layer), exposed for tower tests.
pub fn i_j_term(sp: &SumParams, a: PAdic, b: PAdic, j: i64) -> SumResult<CycValue> {
    let d0 = base_digits(a, b);
    stabilize(d0, 4, |d| i_j_three_var(sp, a, b, j, d))
}

/// Closed forms for the degenerate integrals I₁(a) and I₂(a).
pub fn i_deg_closed(sp: &SumParams, which: u8, a: PAdic) -> SumResult<CycValue> {
    let f = &sp.field;
    let ctx = &sp.ctx;
    let va = a.val().ok_or(SumError::ZeroArgument)?;
    if va > 0 {
        return Ok(CycValue::zero(ctx));
    }
    if va == 0 {
        return Ok(CycValue::one(ctx));
    }
    match which {
        1 => {
            // ψ(−a) + 1 + ψ(ρ²a)
            let rho2 = f.mul(f.rho, f.rho)?;
            Ok(psi(f, ctx, f.neg(a))?
                .add(&CycValue::one(ctx))
                .add(&psi(f, ctx, f.mul(rho2, a)?)?))
        }
        2 => {
            // 1 + ψ(a) + ψ(−ρa)
            Ok(CycValue::one(ctx)
                .add(&psi(f, ctx, a)?)
                .add(&psi(f, ctx, f.neg(f.mul(f.rho, a)?))?))
        }
        _ => Err(SumError::HypothesisNotMet("which must be 1 or 2".into())),
    }
}

/// Brute-force I₁(a): shell sum over t with z integrated by the linear-phase
/// formula and (x, y) enumerated on the cited domain.
fn i_deg1_brute(sp: &SumParams, a: PAdic) -> SumResult<CycValue> {
    let f = &sp.field;
    let ctx = &sp.ctx;
    let va = a.val().ok_or(SumError::ZeroArgument)?;
    if va > 0 {
        return Ok(CycValue::zero(ctx));
    }
    let n = -va; // |a| = q^n, n ≥ 0
    let ai = f.inv(a)?;
    let ai2 = f.mul(ai, ai)?;
    let rho = f.rho;
    let rho2 = f.mul(rho, rho)?;
    let mut total = CycValue::zero(ctx);
    for j in 0..=2 * n {
        let jj = j;
        let piece = stabilize((n + 2) as u32, 4, |digits| {
            let mut acc = CycValue::zero(ctx);
            // x ∈ (−a + p^{-j}) with val(x) ≥ j − 2n; y ∈ p^{-j}
            let meas = q_rat(f.p, jj - digits as i64);
            for xr in ball_reps(f, -jj, digits) {
                let x = f.add(f.neg(a), xr)?;
                if v_inf(x) < jj - 2 * n {
                    continue;
                }
                for y in ball_reps(f, -jj, digits) {
                    // z ∈ (ρay − ρ²xy) + p^{-j}, phase coefficient a⁻²x − ρ²a⁻¹
                    let z0 = f.sub(f.mul(rho, f.mul(a, y)?)?, f.mul(rho2, f.mul(x, y)?)?)?;
                    let zc = f.sub(f.mul(ai2, x)?, f.mul(rho2, ai)?)?;
                    let Some((dz, zval)) = ball_linear_psi(sp, z0, -jj, zc)? else {
                        continue;
                    };
                    // remaining phase −ρa⁻¹xy + x + y
                    let base =
                        f.add(f.neg(f.mul(rho, f.mul(ai, f.mul(x, y)?)?)?), f.add(x, y)?)?;
                    let w = &meas * &meas * q_rat(f.p, -dz) * q_rat(f.p, -2 * jj);
                    acc = acc.add(&psi(f, ctx, base)?.mul(ctx, &zval).scale(&w));
                }
            }
            Ok(acc)
        })?;
        total = total.add(&piece);
    }
    Ok(total)
}

/// Brute-force I₂(a), same scheme with the roles of x and y adapted.
fn i_deg2_brute(sp: &SumParams, a: PAdic) -> SumResult<CycValue> {
    let f = &sp.field;
    let ctx = &sp.ctx;
    let va = a.val().ok_or(SumError::ZeroArgument)?;
    if va > 0 {
        return Ok(CycValue::zero(ctx));
    }
    let n = -va;
    let ai = f.inv(a)?;
    let ai2 = f.mul(ai, ai)?;
    let rho = f.rho;
    let mut total = CycValue::zero(ctx);
    for j in 0..=2 * n {
        let jj = j;
        let piece = stabilize((n + 2) as u32, 4, |digits| {
            let mut acc = CycValue::zero(ctx);
            let meas = q_rat(f.p, jj - digits as i64);
            for x in ball_reps(f, -jj, digits) {
                for yr in ball_reps(f, -jj, digits) {
                    let y = f.add(a, yr)?;
                    if v_inf(y) < jj - 2 * n {
                        continue;
                    }
                    // z-ball from t(xa−xy−zρ) ∈ O: z ∈ ρ⁻¹x(a−y) + p^{-j};
                    // z-phase coefficient −(a⁻²y + ρa⁻¹)
                    let z0 = f.mul(f.inv(rho)?, f.mul(x, f.sub(a, y)?)?)?;
                    let zc = f.neg(f.add(f.mul(ai2, y)?, f.mul(rho, ai)?)?);
                    let Some((dz, zval)) = ball_linear_psi(sp, z0, -jj, zc)? else {
                        continue;
                    };
                    // remaining phase a⁻²xy² − a⁻¹xy + x + y
                    let xy = f.mul(x, y)?;
                    let base = f.add(
                        f.sub(f.mul(ai2, f.mul(xy, y)?)?, f.mul(ai, xy)?)?,
                        f.add(x, y)?,
                    )?;
                    let w = &meas * &meas * q_rat(f.p, -dz) * q_rat(f.p, -2 * jj);
                    acc = acc.add(&psi(f, ctx, base)?.mul(ctx, &zval).scale(&w));
                }
            }
            Ok(acc)
        })?;
        total = total.add(&piece);
    }
    Ok(total)
}

/// Brute-force degenerate integrals.
pub fn i_deg_brute(sp: &SumParams, which: u8, a: PAdic) -> SumResult<CycValue> {
    match which {
        1 => i_deg1_brute(sp, a),
        2 => i_deg2_brute(sp, a),
        _ => Err(SumError::HypothesisNotMet("which must be 1 or 2".into())),
    }
}
