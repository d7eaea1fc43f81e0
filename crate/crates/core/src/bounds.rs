//! Level thresholds beyond which the analytic estimates force every root of
//! r_f onto the circle |z| = 1/√N.
//!
//! For k = 2m + 2 (even) and k = 2m + 3 (odd) the criteria compare an upper
//! bound for |S₁| + |S₂| + |S₃| against e^{−2π/√N}; weight 5 has its own
//! inequality with a free exponent ε ∈ (0, 1).

use std::ops::{Add, Div, Mul, Sub};

use serde::{Deserialize, Serialize};
use thiserror::Error;
use twofloat::TwoFloat;

use crate::specfun::{gamma, zeta, SpecFunError};

/// Below this gap between the two sides the comparison is redone in double-double.
pub const ESCALATION_GAP: f64 = 1e-12;
pub const WEIGHT5_EXPONENT: f64 = 0.4;

#[derive(Debug, Error)]
pub enum BoundsError {
    #[error("m = {0} is below 2")]
    SmallM(u32),
    #[error("exponent {0} outside (0, 1)")]
    Exponent(f64),
    #[error("level must be positive")]
    ZeroLevel,
    #[error("criterion still fails at N = {0}")]
    NoThreshold(u64),
    #[error(transparent)]
    SpecFun(#[from] SpecFunError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Parity {
    Even,
    Odd,
}

impl Parity {
    pub fn weight(self, m: u32) -> u32 {
        match self {
            Parity::Even => 2 * m + 2,
            Parity::Odd => 2 * m + 3,
        }
    }

    /// (parity, m) for weights k ≥ 6.
    pub fn split_weight(k: u32) -> Option<(Parity, u32)> {
        match k {
            0..=5 => None,
            _ if k.is_multiple_of(2) => Some((Parity::Even, (k - 2) / 2)),
            _ => Some((Parity::Odd, (k - 3) / 2)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriterionEvaluation {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
    pub m: Option<u32>,
    pub weight: u32,
    pub level: u64,
    /// true when the sides were within `ESCALATION_GAP` and compared in double-double
    pub escalated: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundsRow {
    pub m: u32,
    pub parity: Parity,
    pub minimal_level: u64,
}

trait Real: Copy + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self> + Div<Output = Self> {
    fn of(x: f64) -> Self;
    fn pi() -> Self;
    fn exp(self) -> Self;
    fn sqrt(self) -> Self;
    fn powi(self, n: i32) -> Self;
    fn to_f64(self) -> f64;
}

impl Real for f64 {
    fn of(x: f64) -> Self {
        x
    }
    fn pi() -> Self {
        std::f64::consts::PI
    }
    fn exp(self) -> Self {
        f64::exp(self)
    }
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    fn powi(self, n: i32) -> Self {
        f64::powi(self, n)
    }
    fn to_f64(self) -> f64 {
        self
    }
}

impl Real for TwoFloat {
    fn of(x: f64) -> Self {
        TwoFloat::from(x)
    }
    fn pi() -> Self {
        twofloat::consts::PI
    }
    fn exp(self) -> Self {
        TwoFloat::exp(self)
    }
    fn sqrt(self) -> Self {
        TwoFloat::sqrt(self)
    }
    fn powi(self, n: i32) -> Self {
        TwoFloat::powi(self, n)
    }
    fn to_f64(self) -> f64 {
        self.hi() + self.lo()
    }
}

fn factorial<T: Real>(n: u32) -> T {
    (1..=n).fold(T::of(1.0), |acc, i| acc * T::of(i as f64))
}

fn x_of<T: Real>(level: u64) -> T {
    T::of(2.0) * T::pi() / T::of(level as f64).sqrt()
}

fn even_sides<T: Real>(m: u32, level: u64) -> (T, T) {
    let x = x_of::<T>(level);
    let xm1 = x.powi(m as i32 - 1);
    let lhs = T::of(16.0 / 5.0) * T::of(0.5).powi(m as i32) * ((T::of(2.0) * x).exp() - T::of(1.0))
        + T::of(17.0 / 4.0) / factorial::<T>(m - 1) * xm1
        + T::of(7.0 / 2.0) * T::of(m as f64 + 1.0) / factorial::<T>(m) * xm1;
    let rhs = (T::of(0.0) - x).exp();
    (lhs, rhs)
}

fn odd_sides<T: Real>(m: u32, level: u64) -> (T, T) {
    let x = x_of::<T>(level);
    let zeta2 = T::pi() * T::pi() / T::of(6.0);
    let lhs = T::of(7.0 / 2.0) * T::of(0.5).powi(m as i32) * ((T::of(2.0) * x).exp() - T::of(1.0))
        + T::of(m as f64 + 2.0) / factorial::<T>(m) * x.powi(m as i32 - 1) * zeta2 * zeta2;
    let rhs = (T::of(0.0) - x).exp();
    (lhs, rhs)
}

fn decide(
    m: u32,
    level: u64,
    parity: Parity,
    sides: fn(u32, u64) -> (f64, f64),
    precise: fn(u32, u64) -> (TwoFloat, TwoFloat),
) -> Result<CriterionEvaluation, BoundsError> {
    if m < 2 {
        return Err(BoundsError::SmallM(m));
    }
    if level == 0 {
        return Err(BoundsError::ZeroLevel);
    }
    let (lhs, rhs) = sides(m, level);
    let (holds, escalated) = if (lhs - rhs).abs() < ESCALATION_GAP {
        let (l, r) = precise(m, level);
        ((l - r).to_f64() < 0.0, true)
    } else {
        (lhs < rhs, false)
    };
    Ok(CriterionEvaluation {
        lhs,
        rhs,
        holds,
        m: Some(m),
        weight: parity.weight(m),
        level,
        escalated,
    })
}

/// (16/5)2^{−m}(e^{4π/√N} − 1) + (17/4)x^{m−1}/(m−1)! + (7/2)(m+1)x^{m−1}/m! < e^{−x}, x = 2π/√N.
pub fn even_criterion(m: u32, level: u64) -> Result<CriterionEvaluation, BoundsError> {
    decide(m, level, Parity::Even, even_sides::<f64>, even_sides::<TwoFloat>)
}

/// (7/2)2^{−m}(e^{4π/√N} − 1) + (m+2)x^{m−1}ζ(2)²/m! < e^{−x}, x = 2π/√N.
pub fn odd_criterion(m: u32, level: u64) -> Result<CriterionEvaluation, BoundsError> {
    decide(m, level, Parity::Odd, odd_sides::<f64>, odd_sides::<TwoFloat>)
}

pub fn criterion(parity: Parity, m: u32, level: u64) -> Result<CriterionEvaluation, BoundsError> {
    match parity {
        Parity::Even => even_criterion(m, level),
        Parity::Odd => odd_criterion(m, level),
    }
}

/// ζ(1+ε)²/ζ(2)² · (2π/√N)^{1−ε} · Γ(3+ε)/Γ(4) < 1/3.
pub fn weight5_criterion(level: u64, eps: f64) -> Result<CriterionEvaluation, BoundsError> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(BoundsError::Exponent(eps));
    }
    if level == 0 {
        return Err(BoundsError::ZeroLevel);
    }
    let z2 = zeta(2.0)?;
    let x = 2.0 * std::f64::consts::PI / (level as f64).sqrt();
    let lhs = zeta(1.0 + eps)?.powi(2) / (z2 * z2) * x.powf(1.0 - eps) * gamma(3.0 + eps)? / gamma(4.0)?;
    let rhs = 1.0 / 3.0;
    Ok(CriterionEvaluation {
        lhs,
        rhs,
        holds: lhs < rhs,
        m: None,
        weight: 5,
        level,
        escalated: false,
    })
}

/// Smallest N with `holds(N)`, assuming the criterion is monotone in N, plus
/// a guard scan over (N, 10N] confirming it never fails again.
fn threshold(holds: impl Fn(u64) -> Result<bool, BoundsError>) -> Result<u64, BoundsError> {
    if holds(1)? {
        return Ok(1);
    }
    let mut lo = 1u64;
    let mut hi = 2u64;
    while !holds(hi)? {
        lo = hi;
        hi = hi.checked_mul(2).ok_or(BoundsError::NoThreshold(hi))?;
    }
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if holds(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let stride = (hi / 1000).max(1);
    let mut n = hi + 1;
    while n <= 10 * hi {
        if !holds(n)? {
            return Err(BoundsError::NoThreshold(n));
        }
        n += stride;
    }
    Ok(hi)
}

/// N(m): the smallest level from which the criterion holds.
pub fn minimal_level(m: u32, parity: Parity) -> Result<u64, BoundsError> {
    threshold(|n| Ok(criterion(parity, m, n)?.holds))
}

pub fn weight5_threshold(eps: f64) -> Result<u64, BoundsError> {
    threshold(|n| Ok(weight5_criterion(n, eps)?.holds))
}

/// Rows m = 2, 3, ... where N(m) drops, ending at the first m with N(m) = 1.
pub fn exceptional_table(parity: Parity) -> Result<Vec<BoundsRow>, BoundsError> {
    let mut rows: Vec<BoundsRow> = Vec::new();
    let mut m = 2;
    loop {
        let n = minimal_level(m, parity)?;
        if rows.last().is_none_or(|r| n < r.minimal_level) {
            rows.push(BoundsRow {
                m,
                parity,
                minimal_level: n,
            });
        }
        if n == 1 {
            return Ok(rows);
        }
        m += 1;
    }
}

/// Whether (k, N) is outside the range the estimates cover. Weights 3 and 4
/// are handled for every level and never belong to the set.
pub fn in_exceptional_set(weight: u32, level: u64) -> Result<bool, BoundsError> {
    match weight {
        0..=4 => Ok(false),
        5 => Ok(level < weight5_threshold(WEIGHT5_EXPONENT)?),
        _ => {
            let (parity, m) = Parity::split_weight(weight).expect("k >= 6");
            Ok(level < minimal_level(m, parity)?)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rows(parity: Parity) -> Vec<(u32, u64)> {
        exceptional_table(parity)
            .unwrap()
            .into_iter()
            .map(|r| (r.m, r.minimal_level))
            .collect()
    }

    #[test]
    fn even_table() {
        let want = vec![
            (2, 5875),
            (3, 433),
            (4, 142),
            (5, 69),
            (6, 41),
            (7, 27),
            (8, 19),
            (9, 14),
            (10, 11),
            (11, 9),
            (12, 7),
            (13, 6),
            (14, 5),
            (16, 4),
            (18, 3),
            (21, 2),
            (29, 1),
        ];
        assert_eq!(rows(Parity::Even), want);
    }

    #[test]
    fn odd_table_from_the_displayed_inequality() {
        // reference values: the odd inequality evaluated exactly at 50 digits
        let want = vec![
            (2, 2741),
            (3, 330),
            (4, 126),
            (5, 66),
            (6, 41),
            (7, 27),
            (8, 20),
            (9, 15),
            (10, 12),
            (11, 9),
            (12, 8),
            (13, 6),
            (14, 5),
            (16, 4),
            (18, 3),
            (22, 2),
            (30, 1),
        ];
        assert_eq!(rows(Parity::Odd), want);
    }

    #[test]
    fn even_boundaries() {
        assert!(even_criterion(2, 5875).unwrap().holds);
        assert!(!even_criterion(2, 5874).unwrap().holds);
        assert!(even_criterion(29, 1).unwrap().holds);
        assert!(!even_criterion(28, 1).unwrap().holds);
        assert_eq!(minimal_level(8, Parity::Even).unwrap(), 19);
        assert_eq!(minimal_level(29, Parity::Even).unwrap(), 1);
        assert!(even_criterion(1, 10).is_err());
    }

    #[test]
    fn odd_boundaries() {
        assert!(odd_criterion(31, 1).unwrap().holds);
        assert!(odd_criterion(2, 5258).unwrap().holds);
        assert!(odd_criterion(2, 2741).unwrap().holds);
        assert!(!odd_criterion(2, 2740).unwrap().holds);
    }

    #[test]
    fn weight_five() {
        let at = weight5_criterion(10332, 0.4).unwrap();
        assert!(at.holds);
        assert!((at.lhs - 0.333_328_69).abs() < 1e-8);
        let below = weight5_criterion(10331, 0.4).unwrap();
        assert!(!below.holds);
        assert!((below.lhs - 0.333_338_37).abs() < 1e-8);
        assert_eq!(weight5_threshold(0.4).unwrap(), 10332);
        assert!(weight5_criterion(10, 1.0).is_err());
        assert!(weight5_criterion(u64::MAX, 0.4).unwrap().lhs < 1e-4);
    }

    #[test]
    fn exceptional_membership() {
        assert!(!in_exceptional_set(3, 1).unwrap());
        assert!(!in_exceptional_set(4, 2).unwrap());
        assert!(in_exceptional_set(5, 10331).unwrap());
        assert!(!in_exceptional_set(5, 10332).unwrap());
        assert!(in_exceptional_set(6, 5874).unwrap());
        assert!(!in_exceptional_set(6, 5875).unwrap());
        assert!(in_exceptional_set(7, 11).unwrap());
        assert!(!in_exceptional_set(60, 1).unwrap());
    }

    #[test]
    fn large_level_limit() {
        for m in 2..40 {
            assert!(even_criterion(m, 1 << 40).unwrap().holds);
            assert!(odd_criterion(m, 1 << 40).unwrap().holds);
        }
    }

    #[test]
    fn escalation_agrees_with_plain_comparison_away_from_ties() {
        let (l, r) = even_sides::<TwoFloat>(5, 69);
        let plain = even_criterion(5, 69).unwrap();
        assert_eq!((l - r).to_f64() < 0.0, plain.holds);
        assert!(!plain.escalated);
    }

    proptest! {
        #[test]
        fn lhs_decreases_in_level(m in 2u32..40, n in 1u64..100_000) {
            for parity in [Parity::Even, Parity::Odd] {
                let a = criterion(parity, m, n).unwrap().lhs;
                let b = criterion(parity, m, n + 1).unwrap().lhs;
                prop_assert!(b < a);
            }
            let a = weight5_criterion(n, 0.4).unwrap().lhs;
            let b = weight5_criterion(n + 1, 0.4).unwrap().lhs;
            prop_assert!(b < a);
        }

        #[test]
        fn lhs_decreases_in_m(m in 3u32..40, n in 1u64..100_000) {
            for parity in [Parity::Even, Parity::Odd] {
                let a = criterion(parity, m, n).unwrap().lhs;
                let b = criterion(parity, m + 1, n).unwrap().lhs;
                prop_assert!(b < a);
            }
        }
    }
}
