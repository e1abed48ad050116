//! Shell-decomposed exact integration over Q_p regions.
//!
//! A region is a finite disjoint union of shells per coordinate; the engine
//! sums `measure(coset) · integrand(representative)` over coset
//! representatives at a chosen refinement depth. With the stability-checked
//! policy the sum is recomputed one digit deeper and must agree exactly,
//! which certifies that the integrand was locally constant on every coset.
//!
//! Normalizations: ∫_O dx = 1 and ∫_{O*} d*x = 1.

use crate::cyclo::{CycCtx, CycValue};
use crate::padic::{FieldParams, PAdic};
use crate::sums::SumError;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::One;

/// One shell of a single coordinate.
#[derive(Debug, Clone, Copy)]
pub enum Shell {
    /// c + p^d O.
    Ball { center: PAdic, depth: i64 },
    /// { x : val(x) = l }.
    ValShell(i64),
    /// O*.
    UnitBall,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeasureKind {
    Additive,
    Multiplicative,
}

#[derive(Debug, Clone)]
pub struct RegionDim {
    pub shells: Vec<Shell>,
    pub measure: MeasureKind,
}

/// A product region with explicit per-coordinate shells.
#[derive(Debug, Clone)]
pub struct Region {
    pub dims: Vec<RegionDim>,
}

impl Region {
    pub fn new(dims: Vec<RegionDim>) -> Self {
        Region { dims }
    }

    /// The ring of integers as a one-dimensional additive region.
    pub fn integers() -> Self {
        Region::new(vec![RegionDim {
            shells: vec![Shell::Ball { center: PAdic::Zero, depth: 0 }],
            measure: MeasureKind::Additive,
        }])
    }

    pub fn units(measure: MeasureKind) -> Self {
        Region::new(vec![RegionDim { shells: vec![Shell::UnitBall], measure }])
    }

    pub fn val_shell(l: i64, measure: MeasureKind) -> Self {
        Region::new(vec![RegionDim { shells: vec![Shell::ValShell(l)], measure }])
    }

    pub fn product(dims: Vec<Region>) -> Self {
        Region::new(dims.into_iter().flat_map(|r| r.dims).collect())
    }
}

#[derive(Debug, Clone, Copy)]
pub enum DepthPolicy {
    /// Sum at the given refinement depth without verification.
    Fixed(u32),
    /// Sum at the given depth and again one digit deeper; exact agreement
    /// is required, otherwise the integral reports StabilityFailure.
    StabilityChecked(u32),
}

/// p^e as an exact rational, any sign of e.
pub fn q_rat(p: u64, e: i64) -> BigRational {
    if e >= 0 {
        BigRational::from_integer(BigInt::from(p).pow(e as u32))
    } else {
        BigRational::new(BigInt::one(), BigInt::from(p).pow((-e) as u32))
    }
}

/// Coset representatives with exact measures for one shell at depth r.
fn shell_cosets(
    f: &FieldParams,
    shell: Shell,
    measure: MeasureKind,
    r: u32,
) -> Result<Vec<(PAdic, BigRational)>, SumError> {
    let p = f.p;
    let mut out = Vec::new();
    match shell {
        Shell::Ball { center, depth } => {
            if measure == MeasureKind::Multiplicative {
                return Err(SumError::BadRegion("multiplicative measure on a ball"));
            }
            // cosets center + p^depth(t + p^r O), measure p^{-depth-r}
            let w = q_rat(p, -(depth + r as i64));
            for t in 0..f.pk(r) {
                let rep = f.add(center, offset(f, t, depth))?;
                out.push((rep, w.clone()));
            }
        }
        Shell::UnitBall | Shell::ValShell(_) => {
            let l = if let Shell::ValShell(l) = shell { l } else { 0 };
            debug_assert!(r >= 1);
            let w = match measure {
                // additive mass of the unit coset p^l(u + p^r O) is q^{-l-r}
                MeasureKind::Additive => q_rat(p, -(l + r as i64)),
                // multiplicative mass of any val-shell is 1, split evenly
                MeasureKind::Multiplicative => BigRational::new(
                    BigInt::one(),
                    BigInt::from(p - 1) * BigInt::from(p).pow(r - 1),
                ),
            };
            for u in 1..f.pk(r) {
                if u % p == 0 {
                    continue;
                }
                out.push((f.make(l, u), w.clone()));
            }
        }
    }
    Ok(out)
}

fn offset(f: &FieldParams, t: u64, depth: i64) -> PAdic {
    if t == 0 {
        PAdic::Zero
    } else {
        let x = f.from_int(t as i64);
        f.shift(x, depth)
    }
}

/// Exact integral of `integrand` over `region`.
pub fn integrate(
    f: &FieldParams,
    ctx: &CycCtx,
    region: &Region,
    integrand: &dyn Fn(&[PAdic]) -> Result<CycValue, SumError>,
    policy: DepthPolicy,
) -> Result<CycValue, SumError> {
    match policy {
        DepthPolicy::Fixed(r) => integrate_at(f, ctx, region, integrand, r),
        DepthPolicy::StabilityChecked(r) => {
            let v0 = integrate_at(f, ctx, region, integrand, r)?;
            let v1 = integrate_at(f, ctx, region, integrand, r + 1)?;
            if v0 != v1 {
                return Err(SumError::Stability(r));
            }
            Ok(v0)
        }
    }
}

fn integrate_at(
    f: &FieldParams,
    ctx: &CycCtx,
    region: &Region,
    integrand: &dyn Fn(&[PAdic]) -> Result<CycValue, SumError>,
    r: u32,
) -> Result<CycValue, SumError> {
    let mut per_dim: Vec<Vec<(PAdic, BigRational)>> = Vec::with_capacity(region.dims.len());
    for dim in &region.dims {
        let mut cosets = Vec::new();
        for &shell in &dim.shells {
            cosets.extend(shell_cosets(f, shell, dim.measure, r)?);
        }
        per_dim.push(cosets);
    }
    let mut acc = CycValue::zero(ctx);
    let mut idx = vec![0usize; per_dim.len()];
    let mut point = vec![PAdic::Zero; per_dim.len()];
    loop {
        let mut w = BigRational::one();
        for (d, &i) in idx.iter().enumerate() {
            point[d] = per_dim[d][i].0;
            w *= &per_dim[d][i].1;
        }
        let v = integrand(&point)?;
        if !v.is_zero() {
            acc = acc.add(&v.scale(&w));
        }
        // odometer
        let mut d = 0;
        loop {
            if d == per_dim.len() {
                return Ok(acc);
            }
            idx[d] += 1;
            if idx[d] < per_dim[d].len() {
                break;
            }
            idx[d] = 0;
            d += 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cyclo::psi;
    use crate::padic::{make_field, RhoChoice};

    #[test]
    fn normalizations() {
        let f = make_field(7, 10, RhoChoice::Smaller).unwrap();
        let ctx = CycCtx::from_field(&f);
        let one = |_: &[PAdic]| -> Result<CycValue, SumError> { Ok(CycValue::one(&ctx)) };
        // ∫_O dx = 1
        let v = integrate(&f, &ctx, &Region::integers(), &one, DepthPolicy::StabilityChecked(1))
            .unwrap();
        assert_eq!(v, CycValue::one(&ctx));
        // ∫_{O*} d*x = 1
        let v = integrate(
            &f,
            &ctx,
            &Region::units(MeasureKind::Multiplicative),
            &one,
            DepthPolicy::StabilityChecked(1),
        )
        .unwrap();
        assert_eq!(v, CycValue::one(&ctx));
        // additive mass of a ball c + p^d O is q^{-d}
        let ball = Region::new(vec![RegionDim {
            shells: vec![Shell::Ball { center: f.from_int(3), depth: 2 }],
            measure: MeasureKind::Additive,
        }]);
        let v = integrate(&f, &ctx, &ball, &one, DepthPolicy::StabilityChecked(1)).unwrap();
        assert_eq!(v, CycValue::q_power(&ctx, -2));
    }

    #[test]
    fn psi_integrals() {
        let f = make_field(7, 10, RhoChoice::Smaller).unwrap();
        let ctx = CycCtx::from_field(&f);
        let fch = f.clone();
        let cch = ctx;
        let integ = move |x: &[PAdic]| -> Result<CycValue, SumError> {
            Ok(psi(&fch, &cch, x[0])?)
        };
        // ∫_O ψ = 1
        let v = integrate(&f, &ctx, &Region::integers(), &integ, DepthPolicy::StabilityChecked(1))
            .unwrap();
        assert_eq!(v, CycValue::one(&ctx));
        // ∫_{val = -1} ψ = -1  (the full p-sphere of radius q)
        let v = integrate(
            &f,
            &ctx,
            &Region::val_shell(-1, MeasureKind::Additive),
            &integ,
            DepthPolicy::StabilityChecked(1),
        )
        .unwrap();
        assert_eq!(v, CycValue::from_int(&ctx, -1));
    }

    #[test]
    fn additivity_over_disjoint_shells() {
        let f = make_field(7, 10, RhoChoice::Smaller).unwrap();
        let ctx = CycCtx::from_field(&f);
        let fch = f.clone();
        let cch = ctx;
        let integ = move |x: &[PAdic]| -> Result<CycValue, SumError> {
            Ok(psi(&fch, &cch, fch.mul(x[0], fch.make(-2, 3))?)?)
        };
        // O = p O ⊔ O*
        let whole =
            integrate(&f, &ctx, &Region::integers(), &integ, DepthPolicy::StabilityChecked(2))
                .unwrap();
        let inner_ball = Region::new(vec![RegionDim {
            shells: vec![Shell::Ball { center: PAdic::Zero, depth: 1 }],
            measure: MeasureKind::Additive,
        }]);
        let a = integrate(&f, &ctx, &inner_ball, &integ, DepthPolicy::StabilityChecked(2)).unwrap();
        let b = integrate(
            &f,
            &ctx,
            &Region::units(MeasureKind::Additive),
            &integ,
            DepthPolicy::StabilityChecked(2),
        )
        .unwrap();
        assert_eq!(whole, a.add(&b));
    }
}
