//! The completed L-function Λ(s, f) = (√N/2π)^s Γ(s) L(s, f) at real s.
//!
//! Λ is evaluated by splitting the Mellin integral ∫₀^∞ f(it/√N) t^{s-1} dt at
//! t₀ and folding the piece below t₀ onto the dual form with the functional
//! equation:
//!
//! Λ(s) = Σ a_n c_n^{-s} Γ(s, c_n t₀) + ε Σ ā_n c_n^{s-k} Γ(k-s, c_n / t₀),
//!
//! with c_n = 2πn/√N. The true value does not depend on t₀; comparing two
//! split points recovers ε when it is not known.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::newform::{validate, NewformDescriptor, Rule};
use crate::specfun::{ln_upper_incomplete_gamma, log_gamma, zeta, PrecisionBudget, SpecFunError};

pub const DEFAULT_TRUNCATION_CAP: usize = 10_000_000;
/// Split points probed by the ε solver and the invariance checks.
pub const SPLIT_POINTS: [f64; 3] = [1.0, 1.25, 0.8];
pub const SYNTHETIC_LEVEL: u64 = 1_000_000_000_000_000_000;
/// Relative error assumed for each incomplete-gamma factor.
const TERM_REL_ERROR: f64 = 1e-13;

#[derive(Debug, Error)]
pub enum LValueError {
    #[error("truncation length {needed} exceeds the cap {cap}")]
    Budget { needed: usize, cap: usize },
    #[error("{needed} coefficients needed for the precision budget, only {available} available")]
    Precision { needed: usize, available: usize },
    #[error("s = {s} outside the open critical range (0, {weight})")]
    Domain { s: f64, weight: u32 },
    #[error("root-number equation is ill-conditioned (coefficient {coefficient:e})")]
    IllConditioned { coefficient: f64 },
    #[error("solved root number has modulus {modulus}, expected 1")]
    NotUnimodular { modulus: f64 },
    #[error("functional equation residual {residual:e} exceeds 1e3 x error estimate {budget:e}")]
    FunctionalEquation { residual: f64, budget: f64 },
    #[error("|Lambda| decreases from s = {s_lo} ({lo:e}) to s = {s_hi} ({hi:e}), which is impossible for a newform")]
    Monotonicity { s_lo: f64, s_hi: f64, lo: f64, hi: f64 },
    #[error("descriptor failed validation: {0}")]
    Invalid(String),
    #[error("no descriptor attached to this table; value at s = {0} is not tabulated")]
    MissingSource(f64),
    #[error(transparent)]
    SpecFun(#[from] SpecFunError),
}

/// Budget for L-value work: the relative goal is turned into an absolute
/// one using the rough size (√N/2π)^{k/2} Γ(k/2) of the central value.
pub fn lambda_budget(level: u64, weight: u32, base: &PrecisionBudget) -> PrecisionBudget {
    let h = weight as f64 / 2.0;
    let ln_scale = h * ((level as f64).sqrt() / (2.0 * PI)).ln()
        + log_gamma(h).expect("weight is positive");
    base.with_abs(base.target_rel_error * ln_scale.exp().max(f64::MIN_POSITIVE))
}

fn c_n(n: usize, level: u64) -> f64 {
    2.0 * PI * n as f64 / (level as f64).sqrt()
}

/// ln( n^{(k+1)/2} max_s c_n^{-s} Γ(s, c_n t) ) over a half-integer grid of s in (0, k).
fn ln_tail_term(n: usize, level: u64, weight: u32, t: f64) -> Result<f64, SpecFunError> {
    let c = c_n(n, level);
    let mut best = f64::NEG_INFINITY;
    for i in 1..(2 * weight) {
        let s = i as f64 / 2.0;
        best = best.max(-s * c.ln() + ln_upper_incomplete_gamma(s, c * t)?);
    }
    Ok((weight as f64 + 1.0) / 2.0 * (n as f64).ln() + best)
}

pub fn truncation_length(level: u64, weight: u32, budget: &PrecisionBudget) -> Result<usize, LValueError> {
    truncation_length_capped(level, weight, budget, DEFAULT_TRUNCATION_CAP)
}

/// Smallest M whose Deligne-bounded tail Σ_{n>M} (both sums, any split point
/// in [0.8, 1.25], any s in (0, k)) is below the absolute budget.
pub fn truncation_length_capped(
    level: u64,
    weight: u32,
    budget: &PrecisionBudget,
    cap: usize,
) -> Result<usize, LValueError> {
    if level == 0 || weight < 3 {
        return Err(LValueError::Invalid(format!(
            "level {level}, weight {weight}: need N >= 1 and k >= 3"
        )));
    }
    let target = budget.target_abs_error;
    let t_min = SPLIT_POINTS.iter().cloned().fold(f64::INFINITY, f64::min);
    let mut terms: Vec<f64> = Vec::new();
    let mut n = 1usize;
    loop {
        // both sums see an argument at least c_n · t_min
        let term = 2.0 * ln_tail_term(n, level, weight, t_min)?.exp();
        if n > cap && term >= target {
            return Err(LValueError::Budget { needed: n, cap });
        }
        terms.push(term);
        if n >= 2 {
            let ratio = term / terms[n - 2];
            if ratio < 0.9 {
                let rest = term * ratio / (1.0 - ratio);
                if rest < target * 1e-3 {
                    terms.push(rest);
                    break;
                }
            }
        }
        n += 1;
    }
    // suffix sums: tail(M) = Σ_{n > M} terms
    let mut tail = 0.0;
    let mut m = terms.len();
    for (idx, t) in terms.iter().enumerate().rev() {
        tail += t;
        if tail >= target {
            m = idx + 1;
            break;
        }
        m = idx;
    }
    if m > cap {
        return Err(LValueError::Budget { needed: m, cap });
    }
    Ok(m.max(1))
}

/// The two sums of the split formula at one (s, t₀).
#[derive(Debug, Clone, Copy)]
pub struct SplitParts {
    pub direct: Complex64,
    pub dual: Complex64,
    /// Σ of term magnitudes, for rounding-error estimates.
    pub magnitude: f64,
    pub tail: f64,
}

impl SplitParts {
    pub fn combine(&self, epsilon: Complex64) -> Complex64 {
        self.direct + epsilon * self.dual
    }
}

pub fn split_parts(
    d: &NewformDescriptor,
    s: f64,
    t0: f64,
    m: usize,
) -> Result<SplitParts, LValueError> {
    let k = d.weight();
    if !(s > 0.0 && s < k as f64) {
        return Err(LValueError::Domain { s, weight: k });
    }
    let kf = k as f64;
    let mut direct = Complex64::new(0.0, 0.0);
    let mut dual = Complex64::new(0.0, 0.0);
    let mut magnitude = 0.0;
    for n in 1..=m.min(d.len()) {
        let a = d.coefficient(n);
        if a.re == 0.0 && a.im == 0.0 {
            continue;
        }
        let c = c_n(n, d.level());
        let w1 = (-s * c.ln() + ln_upper_incomplete_gamma(s, c * t0)?).exp();
        let w2 = (-(kf - s) * c.ln() + ln_upper_incomplete_gamma(kf - s, c / t0)?).exp();
        direct += a * w1;
        dual += a.conj() * w2;
        magnitude += a.norm() * (w1 + w2);
    }
    let ln_tail = ln_tail_term(m + 1, d.level(), k, t0.min(1.0 / t0))?;
    // the first omitted term dominates a geometric tail; a factor 10 covers the rest
    let tail = 20.0 * ln_tail.exp();
    Ok(SplitParts {
        direct,
        dual,
        magnitude,
        tail,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LambdaValue {
    pub value: Complex64,
    pub est_abs_error: f64,
}

fn required_length(d: &NewformDescriptor) -> Result<usize, LValueError> {
    let budget = lambda_budget(d.level(), d.weight(), &PrecisionBudget::default());
    let m = truncation_length(d.level(), d.weight(), &budget)?;
    if m > d.len() {
        return Err(LValueError::Precision {
            needed: m,
            available: d.len(),
        });
    }
    Ok(m)
}

/// Λ(s, f) at the default split point t₀ = 1.
pub fn lambda_value(d: &NewformDescriptor, s: f64, epsilon: Complex64) -> Result<Complex64, LValueError> {
    Ok(lambda_value_at(d, s, epsilon, 1.0)?.value)
}

pub fn lambda_value_at(
    d: &NewformDescriptor,
    s: f64,
    epsilon: Complex64,
    t0: f64,
) -> Result<LambdaValue, LValueError> {
    let m = required_length(d)?;
    let parts = split_parts(d, s, t0, m)?;
    Ok(LambdaValue {
        value: parts.combine(epsilon),
        est_abs_error: parts.tail + TERM_REL_ERROR * parts.magnitude,
    })
}

/// L(s) = Λ(s) (2π/√N)^s / Γ(s).
pub fn l_from_lambda(lambda: Complex64, s: f64, level: u64) -> Complex64 {
    let ln_factor = s * (2.0 * PI / (level as f64).sqrt()).ln() - log_gamma(s).expect("s > 0");
    lambda * ln_factor.exp()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EpsilonMethod {
    Given,
    Solved,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpsilonSolve {
    pub epsilon: Complex64,
    /// Relative split-invariance defect at a third split point.
    pub residual: f64,
    pub method: EpsilonMethod,
}

/// Point used for ε recovery; off the centre and away from the integers.
fn solve_point(weight: u32) -> f64 {
    weight as f64 / 2.0 + 0.31
}

pub fn solve_root_number(d: &NewformDescriptor) -> Result<EpsilonSolve, LValueError> {
    let m = required_length(d)?;
    let s = solve_point(d.weight());
    let [t0, t1, t2] = SPLIT_POINTS;
    let p0 = split_parts(d, s, t0, m)?;
    let p2 = split_parts(d, s, t2, m)?;
    let (epsilon, method) = match d.root_number() {
        Some(eps) => (eps, EpsilonMethod::Given),
        None => {
            let p1 = split_parts(d, s, t1, m)?;
            let coefficient = p0.dual - p1.dual;
            let scale = p0.direct.norm().max(p0.dual.norm());
            if coefficient.norm() < 1e-10 * scale {
                return Err(LValueError::IllConditioned {
                    coefficient: coefficient.norm() / scale,
                });
            }
            let eps = (p1.direct - p0.direct) / coefficient;
            if (eps.norm() - 1.0).abs() > 1e-8 {
                return Err(LValueError::NotUnimodular { modulus: eps.norm() });
            }
            (eps, EpsilonMethod::Solved)
        }
    };
    let v0 = p0.combine(epsilon);
    let v2 = p2.combine(epsilon);
    let residual = (v2 - v0).norm() / v0.norm().max(f64::MIN_POSITIVE);
    Ok(EpsilonSolve {
        epsilon,
        residual,
        method,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LambdaEntry {
    pub j: u32,
    pub lambda: Complex64,
    pub l_value: Complex64,
    pub est_abs_error: f64,
}

/// Λ(j, f) and L(j, f) at the critical integers j = 1..k-1.
#[derive(Debug, Clone)]
pub struct LambdaTable {
    label: String,
    level: u64,
    weight: u32,
    entries: Vec<LambdaEntry>,
    truncation_length: usize,
    epsilon: EpsilonSolve,
    fe_residual: f64,
    source: Option<Arc<NewformDescriptor>>,
}

impl LambdaTable {
    /// A table from prescribed Λ values (j = 1..k-1), with no descriptor behind it.
    /// Nothing is checked; use the `check_*` methods explicitly.
    pub fn synthetic(
        label: impl Into<String>,
        level: u64,
        weight: u32,
        epsilon: Complex64,
        lambdas: &[Complex64],
    ) -> Result<Self, LValueError> {
        if weight < 3 || lambdas.len() != weight as usize - 1 || level == 0 {
            return Err(LValueError::Invalid(format!(
                "synthetic table needs k >= 3, N >= 1 and k-1 values (k = {weight}, got {})",
                lambdas.len()
            )));
        }
        let entries: Vec<_> = lambdas
            .iter()
            .enumerate()
            .map(|(i, &lambda)| {
                let j = i as u32 + 1;
                LambdaEntry {
                    j,
                    lambda,
                    l_value: l_from_lambda(lambda, j as f64, level),
                    est_abs_error: TERM_REL_ERROR * lambda.norm(),
                }
            })
            .collect();
        let mut table = Self {
            label: label.into(),
            level,
            weight,
            entries,
            truncation_length: 0,
            epsilon: EpsilonSolve {
                epsilon,
                residual: 0.0,
                method: EpsilonMethod::Given,
            },
            fe_residual: 0.0,
            source: None,
        };
        table.fe_residual = table.stored_fe_residual();
        Ok(table)
    }

    /// Λ(1) = Λ(k−1) = ½ and every other value zero, so t_f(e^{iθ}) = cos((k−2)θ/2).
    /// The level is taken huge so the sin θ term of the angle predictions vanishes.
    pub fn synthetic_cosine(weight: u32) -> Result<Self, LValueError> {
        if weight < 3 {
            return Err(LValueError::Invalid(format!("weight {weight} below 3")));
        }
        let mut lambdas = vec![Complex64::new(0.0, 0.0); weight as usize - 1];
        lambdas[0] = Complex64::new(0.5, 0.0);
        *lambdas.last_mut().expect("k >= 3") = Complex64::new(0.5, 0.0);
        Self::synthetic(
            format!("synthetic:cosine:{weight}"),
            SYNTHETIC_LEVEL,
            weight,
            Complex64::new(1.0, 0.0),
            &lambdas,
        )
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn level(&self) -> u64 {
        self.level
    }

    pub fn weight(&self) -> u32 {
        self.weight
    }

    pub fn entries(&self) -> &[LambdaEntry] {
        &self.entries
    }

    pub fn entry(&self, j: u32) -> &LambdaEntry {
        &self.entries[j as usize - 1]
    }

    pub fn lambda(&self, j: u32) -> Complex64 {
        self.entry(j).lambda
    }

    pub fn l_value(&self, j: u32) -> Complex64 {
        self.entry(j).l_value
    }

    pub fn epsilon(&self) -> Complex64 {
        self.epsilon.epsilon
    }

    pub fn epsilon_solve(&self) -> &EpsilonSolve {
        &self.epsilon
    }

    pub fn truncation_length(&self) -> usize {
        self.truncation_length
    }

    pub fn source(&self) -> Option<&NewformDescriptor> {
        self.source.as_deref()
    }

    pub fn max_abs_lambda(&self) -> f64 {
        self.entries.iter().map(|e| e.lambda.norm()).fold(0.0, f64::max)
    }

    pub fn max_est_error(&self) -> f64 {
        self.entries.iter().map(|e| e.est_abs_error).fold(0.0, f64::max)
    }

    /// max_j |Λ(j) − ε Λ(k−j, f̄)| / max_j |Λ(j)|, where the dual side was
    /// evaluated at a different split point when the table was built.
    pub fn fe_residual(&self) -> f64 {
        self.fe_residual
    }

    fn stored_fe_residual(&self) -> f64 {
        let k = self.weight;
        let eps = self.epsilon();
        let worst = (1..k)
            .map(|j| (self.lambda(j) - eps * self.lambda(k - j).conj()).norm())
            .fold(0.0, f64::max);
        worst / self.max_abs_lambda().max(f64::MIN_POSITIVE)
    }

    /// Every Λ and L multiplied by `factor` (root sets are unchanged by this).
    pub fn scaled(&self, factor: Complex64) -> Self {
        let mut out = self.clone();
        for e in &mut out.entries {
            e.lambda *= factor;
            e.l_value *= factor;
            e.est_abs_error *= factor.norm();
        }
        out
    }

    /// Λ at a real point: tabulated when s is a critical integer, computed otherwise.
    pub fn lambda_at(&self, s: f64) -> Result<LambdaValue, LValueError> {
        if s.fract() == 0.0 && s >= 1.0 && s <= (self.weight - 1) as f64 {
            let e = self.entry(s as u32);
            return Ok(LambdaValue {
                value: e.lambda,
                est_abs_error: e.est_abs_error,
            });
        }
        let d = self.source.as_deref().ok_or(LValueError::MissingSource(s))?;
        lambda_value_at(d, s, self.epsilon(), 1.0)
    }

    /// |Λ(s)| must increase along s = k/2, k/2+1, ... (k even) and along
    /// (k+1)/2 + a for real a > 0. Differences inside the error estimates
    /// are tolerated.
    pub fn check_monotonicity(&self) -> Result<(), LValueError> {
        let k = self.weight;
        let kf = k as f64;
        let mut points: Vec<f64> = Vec::new();
        if k.is_multiple_of(2) {
            points.extend((k / 2..k).map(f64::from));
        } else {
            points.extend((k.div_ceil(2)..k).map(f64::from));
        }
        if self.source.is_some() {
            let start = (kf + 1.0) / 2.0;
            let mut a = 0.25;
            while start + a < kf - 1.0 {
                if (start + a).fract() != 0.0 {
                    points.push(start + a);
                }
                a += 0.25;
            }
        }
        points.sort_by(|a, b| a.total_cmp(b));
        points.dedup();
        let values = points
            .iter()
            .map(|&s| self.lambda_at(s))
            .collect::<Result<Vec<_>, _>>()?;
        for (w, v) in points.windows(2).zip(values.windows(2)) {
            let (lo, hi) = (v[0].value.norm(), v[1].value.norm());
            let slack = v[0].est_abs_error + v[1].est_abs_error;
            if hi <= lo - slack {
                return Err(LValueError::Monotonicity {
                    s_lo: w[0],
                    s_hi: w[1],
                    lo,
                    hi,
                });
            }
        }
        Ok(())
    }
}

pub fn build_lambda_table(d: &NewformDescriptor) -> Result<LambdaTable, LValueError> {
    let report = validate(d);
    if let Some(v) = report.violations.iter().find(|v| v.rule == Rule::CoefficientCount) {
        return Err(LValueError::Precision {
            needed: v.index,
            available: d.len(),
        });
    }
    if !report.passed {
        let summary: Vec<String> = report
            .violations
            .iter()
            .map(|v| format!("{} at n = {} ({})", v.rule, v.index, v.magnitude))
            .collect();
        return Err(LValueError::Invalid(summary.join("; ")));
    }
    let m = required_length(d)?;
    let epsilon = solve_root_number(d)?;
    let eps = epsilon.epsilon;
    let k = d.weight();
    let [t0, t1, _] = SPLIT_POINTS;
    let mut entries = Vec::with_capacity(k as usize - 1);
    let mut alt = Vec::with_capacity(k as usize - 1);
    for j in 1..k {
        let s = j as f64;
        let parts = split_parts(d, s, t0, m)?;
        let lambda = parts.combine(eps);
        entries.push(LambdaEntry {
            j,
            lambda,
            l_value: l_from_lambda(lambda, s, d.level()),
            est_abs_error: parts.tail + TERM_REL_ERROR * parts.magnitude,
        });
        alt.push(split_parts(d, s, t1, m)?.combine(eps));
    }
    // Λ(j) at t₀ against ε·conj(Λ(k−j)) at t₁
    let mut worst = 0.0f64;
    let mut worst_budget = 0.0f64;
    for j in 1..k {
        let lhs = entries[j as usize - 1].lambda;
        let rhs = eps * alt[(k - j) as usize - 1].conj();
        let r = (lhs - rhs).norm();
        if r > worst {
            worst = r;
        }
        worst_budget = worst_budget
            .max(entries[j as usize - 1].est_abs_error + entries[(k - j) as usize - 1].est_abs_error);
    }
    if worst > 1e3 * worst_budget {
        return Err(LValueError::FunctionalEquation {
            residual: worst,
            budget: worst_budget,
        });
    }
    let max_abs = entries.iter().map(|e| e.lambda.norm()).fold(0.0, f64::max);
    let table = LambdaTable {
        label: d.label().to_string(),
        level: d.level(),
        weight: k,
        entries,
        truncation_length: m,
        epsilon,
        fe_residual: worst / max_abs.max(f64::MIN_POSITIVE),
        source: Some(Arc::new(d.clone())),
    };
    table.check_monotonicity()?;
    Ok(table)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatioCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

/// |L((k+1)/2 + a) / L((k+1)/2 + b) − 1| against ζ(1+a)²/ζ(1+b)² − 1.
pub fn lemma_ratio_check(table: &LambdaTable, a: f64, b: f64) -> Result<RatioCheck, LValueError> {
    let k = table.weight() as f64;
    let base = (k + 1.0) / 2.0;
    if !(a > 0.0 && a < b && base + b <= k - 1.0) {
        return Err(LValueError::Domain {
            s: base + b,
            weight: table.weight(),
        });
    }
    let va = table.lambda_at(base + a)?;
    let vb = table.lambda_at(base + b)?;
    let la = l_from_lambda(va.value, base + a, table.level());
    let lb = l_from_lambda(vb.value, base + b, table.level());
    let ratio = la / lb;
    let lhs = (ratio - 1.0).norm();
    let rhs = zeta(1.0 + a)?.powi(2) / zeta(1.0 + b)?.powi(2) - 1.0;
    let rel_err = va.est_abs_error / va.value.norm().max(f64::MIN_POSITIVE)
        + vb.est_abs_error / vb.value.norm().max(f64::MIN_POSITIVE);
    let margin = rel_err * ratio.norm() + 1e-12;
    Ok(RatioCheck {
        lhs,
        rhs,
        holds: lhs <= rhs + margin,
    })
}
