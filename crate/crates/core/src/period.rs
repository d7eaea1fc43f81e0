//! The period polynomial r_f(z) = Σ c_n z^n and its rotated form t_f, which
//! is real on the unit circle.
//!
//! With z = i√N ρ the roots of r_f on |ρ| = 1/√N move to |z| = 1, where
//!
//! t_f(e^{iθ}) = Σ b_n e^{iθ(n − (k−2)/2)},  b_n = C(k−2, n) δ Λ(k−1−n),
//!
//! and δ is the principal square root of 1/ε. For odd k the half-integer
//! power uses the branch θ/2 with θ ∈ [0, 2π).

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lvalues::LambdaTable;
use crate::rootfind::{horner, polish, RootFindError, RootFinderRegistry, DEFAULT_FINDER, FALLBACK_FINDER};
use crate::specfun::{binomial, ln_factorial};

pub const DEFAULT_CIRCLE_TOLERANCE: f64 = 1e-6;
pub const MAX_ROOT_RESIDUAL: f64 = 1e-10;
const TWO_PI: f64 = 2.0 * PI;
/// ln of the largest and smallest positive normal doubles.
const LN_MAX: f64 = 709.0;
const LN_MIN: f64 = -708.0;

#[derive(Debug, Error)]
pub enum PeriodError {
    #[error("coefficient c_{index} has magnitude e^{ln_magnitude:.1}, outside the double range")]
    Overflow { index: usize, ln_magnitude: f64 },
    #[error("leading coefficient Λ(1) = {value:e} is within its error bound {error:e}")]
    Degenerate { value: f64, error: f64 },
    #[error("root number has modulus {0}, expected 1")]
    NotUnimodular(f64),
    #[error("Im t_f(e^(i{theta})) = {imaginary:e} exceeds the tolerance {tolerance:e}")]
    Branch { theta: f64, imaginary: f64, tolerance: f64 },
    #[error("best root residual {residual:e} exceeds {MAX_ROOT_RESIDUAL:e}")]
    Residual { residual: f64 },
    #[error("weight {weight} is below the minimum {min} for this operation")]
    Weight { weight: u32, min: u32 },
    #[error("roots {first} and {second} both match prediction {prediction}")]
    Matching { prediction: usize, first: usize, second: usize },
    #[error(transparent)]
    RootFind(#[from] RootFindError),
}

fn backward_error(coeffs: &[Complex64], z: Complex64) -> f64 {
    let r = z.norm();
    let size = coeffs.iter().rev().fold(0.0, |acc, c| acc * r + c.norm());
    horner(coeffs, z).norm() / size.max(f64::MIN_POSITIVE)
}

fn reduce_angle(theta: f64) -> f64 {
    let r = theta.rem_euclid(TWO_PI);
    if r >= TWO_PI {
        0.0
    } else {
        r
    }
}

/// Signed distance a − b folded into (−π, π].
fn circular_difference(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(TWO_PI);
    if d > PI {
        d - TWO_PI
    } else {
        d
    }
}

#[derive(Debug, Clone)]
pub struct PeriodPolynomial {
    label: String,
    level: u64,
    weight: u32,
    coeffs: Vec<Complex64>,
    coeff_errors: Vec<f64>,
    /// C(k−2, n) Λ(k−1−n) scaled to unit maximum: r_f in the variable z = i√N ρ, up to a constant.
    scaled: Vec<Complex64>,
}

pub fn build_period_polynomial(table: &LambdaTable) -> Result<PeriodPolynomial, PeriodError> {
    let k = table.weight();
    let deg = k - 2;
    let ln_n = (table.level() as f64).ln();
    let mut coeffs = Vec::with_capacity(deg as usize + 1);
    let mut errors = Vec::with_capacity(deg as usize + 1);
    let mut scaled = Vec::with_capacity(deg as usize + 1);
    // c_n = (−1)^k i^{k−1+n} N^{(n−k+1)/2} C(k−2, n) Λ(k−1−n)
    let sign = if k.is_multiple_of(2) { 1.0 } else { -1.0 };
    for n in 0..=deg {
        let e = table.entry(k - 1 - n);
        let lam = e.lambda;
        let ln_scale = binomial(deg, n).ln() + (n as f64 - k as f64 + 1.0) / 2.0 * ln_n;
        let c = if lam.norm() == 0.0 {
            Complex64::new(0.0, 0.0)
        } else {
            let ln_mag = ln_scale + lam.norm().ln();
            if !(LN_MIN..=LN_MAX).contains(&ln_mag) {
                return Err(PeriodError::Overflow {
                    index: n as usize,
                    ln_magnitude: ln_mag,
                });
            }
            let phase = Complex64::new(0.0, 1.0).powu((k - 1 + n) % 4) * sign;
            phase * Complex64::from_polar(ln_mag.exp(), lam.arg())
        };
        coeffs.push(c);
        errors.push(ln_scale.exp() * e.est_abs_error);
        scaled.push(lam * binomial(deg, n));
    }
    let lead = table.entry(1);
    if lead.lambda.norm() <= lead.est_abs_error {
        return Err(PeriodError::Degenerate {
            value: lead.lambda.norm(),
            error: lead.est_abs_error,
        });
    }
    let max = scaled.iter().map(|c| c.norm()).fold(0.0, f64::max);
    for c in &mut scaled {
        *c /= max;
    }
    Ok(PeriodPolynomial {
        label: table.label().to_string(),
        level: table.level(),
        weight: k,
        coeffs,
        coeff_errors: errors,
        scaled,
    })
}

impl PeriodPolynomial {
    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn level(&self) -> u64 {
        self.level
    }

    pub fn weight(&self) -> u32 {
        self.weight
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coefficients(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coefficient_errors(&self) -> &[f64] {
        &self.coeff_errors
    }

    pub fn scaled_coefficients(&self) -> &[Complex64] {
        &self.scaled
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        horner(&self.coeffs, z)
    }

    fn sqrt_n(&self) -> f64 {
        (self.level as f64).sqrt()
    }

    /// Normwise backward error |r_f(ρ)| / Σ |c_n| |ρ|^n.
    pub fn residual(&self, rho: Complex64) -> f64 {
        let z = Complex64::new(0.0, self.sqrt_n()) * rho;
        backward_error(&self.scaled, z)
    }

    /// Roots with the default finder and the fallback on failure.
    pub fn find_roots(&self) -> Result<Vec<Complex64>, PeriodError> {
        self.find_roots_with(&RootFinderRegistry::default(), DEFAULT_FINDER)
    }

    /// Roots sorted by argument in [0, 2π). The named finder runs first; the
    /// companion-matrix finder is tried if it fails or leaves a large residual.
    pub fn find_roots_with(&self, registry: &RootFinderRegistry, name: &str) -> Result<Vec<Complex64>, PeriodError> {
        let mut best: Option<(f64, Vec<Complex64>)> = None;
        let mut last_err = None;
        let mut names = vec![name];
        if name != FALLBACK_FINDER {
            names.push(FALLBACK_FINDER);
        }
        for n in names {
            let finder = registry.get(n)?;
            match finder.find_roots(&self.scaled, Some(1.0)) {
                Ok(mut z) => {
                    polish(&self.scaled, &mut z);
                    let worst = z.iter().map(|&r| backward_error(&self.scaled, r)).fold(0.0, f64::max);
                    if best.as_ref().is_none_or(|(w, _)| worst < *w) {
                        best = Some((worst, z));
                    }
                    if worst <= MAX_ROOT_RESIDUAL {
                        break;
                    }
                }
                Err(e) => last_err = Some(e),
            }
        }
        let (worst, z) = match (best, last_err) {
            (Some(b), _) => b,
            (None, Some(e)) => return Err(e.into()),
            (None, None) => unreachable!("at least one finder runs"),
        };
        if worst > MAX_ROOT_RESIDUAL {
            return Err(PeriodError::Residual { residual: worst });
        }
        let to_rho = Complex64::new(0.0, -1.0 / self.sqrt_n());
        let mut roots: Vec<Complex64> = z.into_iter().map(|r| r * to_rho).collect();
        roots.sort_by(|a, b| reduce_angle(a.arg()).total_cmp(&reduce_angle(b.arg())));
        Ok(roots)
    }
}

#[derive(Debug, Clone)]
pub struct UnitCircleForm {
    level: u64,
    weight: u32,
    epsilon: Complex64,
    delta: Complex64,
    b: Vec<Complex64>,
    b_errors: Vec<f64>,
}

pub fn build_unit_circle_form(table: &LambdaTable, epsilon: Complex64) -> Result<UnitCircleForm, PeriodError> {
    if (epsilon.norm() - 1.0).abs() > 1e-8 {
        return Err(PeriodError::NotUnimodular(epsilon.norm()));
    }
    let k = table.weight();
    let delta = epsilon.inv().sqrt();
    let (b, b_errors) = (0..=k - 2)
        .map(|n| {
            let e = table.entry(k - 1 - n);
            let c = binomial(k - 2, n);
            (delta * e.lambda * c, e.est_abs_error * c)
        })
        .unzip();
    Ok(UnitCircleForm {
        level: table.level(),
        weight: k,
        epsilon,
        delta,
        b,
        b_errors,
    })
}

impl UnitCircleForm {
    pub fn level(&self) -> u64 {
        self.level
    }

    pub fn weight(&self) -> u32 {
        self.weight
    }

    pub fn epsilon(&self) -> Complex64 {
        self.epsilon
    }

    pub fn delta(&self) -> Complex64 {
        self.delta
    }

    pub fn coefficients(&self) -> &[Complex64] {
        &self.b
    }

    pub fn is_half_integral(&self) -> bool {
        self.weight % 2 == 1
    }

    /// The same form built with −δ; t_f changes sign, its roots do not.
    pub fn other_branch(&self) -> Self {
        let mut out = self.clone();
        out.delta = -self.delta;
        for b in &mut out.b {
            *b = -*b;
        }
        out
    }

    fn half_degree(&self) -> f64 {
        (self.weight as f64 - 2.0) / 2.0
    }

    pub fn max_coefficient(&self) -> f64 {
        self.b.iter().map(|b| b.norm()).fold(0.0, f64::max)
    }

    /// Σ b_n e^{iθ(n−h)} with the angle taken literally: θ ∈ [0, 2π) follows the
    /// branch convention, and θ + 2π continues the half power (a sign flip for odd k).
    pub fn eval_complex(&self, theta: f64) -> Complex64 {
        let h = self.half_degree();
        self.b
            .iter()
            .enumerate()
            .map(|(n, &b)| b * Complex64::from_polar(1.0, theta * (n as f64 - h)))
            .sum()
    }

    pub fn imaginary_tolerance(&self) -> f64 {
        let err: f64 = self.b_errors.iter().sum();
        let size: f64 = self.b.iter().map(|b| b.norm()).sum();
        (1e3 * err).max(64.0 * f64::EPSILON * size)
    }

    pub fn eval_t(&self, theta: f64) -> Result<f64, PeriodError> {
        let v = self.eval_complex(theta);
        let tolerance = self.imaginary_tolerance();
        if v.im.abs() > tolerance {
            return Err(PeriodError::Branch {
                theta,
                imaginary: v.im,
                tolerance,
            });
        }
        Ok(v.re)
    }

    /// max over `samples` equally spaced θ of |Im t_f| / max |b_n|.
    pub fn reality_defect(&self, samples: usize) -> f64 {
        let worst = (0..samples)
            .map(|i| self.eval_complex(TWO_PI * i as f64 / samples as f64).im.abs())
            .fold(0.0, f64::max);
        worst / self.max_coefficient().max(f64::MIN_POSITIVE)
    }

    /// max |b_n − conj(b_{k−2−n})|.
    pub fn symmetry_defect(&self) -> f64 {
        let d = self.b.len() - 1;
        (0..=d)
            .map(|n| (self.b[n] - self.b[d - n].conj()).norm())
            .fold(0.0, f64::max)
    }

    /// C = arg(δ^{-1} conj(L(k−1))) = arg b_{k−2}.
    pub fn phase_constant(&self) -> f64 {
        self.b[self.b.len() - 1].arg()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RootEntry {
    pub rho: Complex64,
    /// |√N |ρ| − 1|
    pub modulus_deviation: f64,
    pub residual: Option<f64>,
    /// arg ρ in [0, 2π)
    pub argument: f64,
    /// arg(i√N ρ) in [0, 2π): the angle on the unit circle of t_f
    pub circle_argument: f64,
    pub prediction: Option<usize>,
    pub prediction_deviation: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RootReport {
    pub level: u64,
    pub weight: u32,
    pub tolerance: f64,
    pub roots: Vec<RootEntry>,
    pub max_deviation: f64,
    pub passed: bool,
    pub certificate: Option<CertificateStatus>,
}

pub fn circle_report(roots: &[Complex64], level: u64, weight: u32, tolerance: f64) -> RootReport {
    let sqrt_n = (level as f64).sqrt();
    let entries: Vec<RootEntry> = roots
        .iter()
        .map(|&rho| RootEntry {
            rho,
            modulus_deviation: (sqrt_n * rho.norm() - 1.0).abs(),
            residual: None,
            argument: reduce_angle(rho.arg()),
            circle_argument: reduce_angle(rho.arg() + PI / 2.0),
            prediction: None,
            prediction_deviation: None,
        })
        .collect();
    let max_deviation = entries.iter().map(|e| e.modulus_deviation).fold(0.0, f64::max);
    RootReport {
        level,
        weight,
        tolerance,
        passed: !entries.is_empty() && max_deviation <= tolerance,
        roots: entries,
        max_deviation,
        certificate: None,
    }
}

impl RootReport {
    pub fn attach_residuals(&mut self, poly: &PeriodPolynomial) {
        for e in &mut self.roots {
            e.residual = Some(poly.residual(e.rho));
        }
    }

    pub fn roots_on_circle(&self, tolerance: f64) -> usize {
        self.roots.iter().filter(|e| e.modulus_deviation <= tolerance).count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CertificateStatus {
    Certified,
    Trivial,
    Inconclusive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Seeding {
    Predictions,
    Scan,
    None,
}

pub const CERTIFICATE_CONVENTION: &str =
    "branch cut at theta = 0; alternations on the open arc plus one wraparound root by parity";

/// Angles on [0, 2π) where t_f alternates in sign, bracketing k−2 roots.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Certificate {
    pub status: CertificateStatus,
    pub angles: Vec<f64>,
    pub signs: Vec<i8>,
    pub values: Vec<f64>,
    /// min |t_f| over the certificate angles
    pub margin: f64,
    pub interior_changes: usize,
    pub wraparound_root: bool,
    pub seeding: Seeding,
    pub convention: String,
}

fn sign_of(v: f64) -> i8 {
    if v > 0.0 {
        1
    } else if v < 0.0 {
        -1
    } else {
        0
    }
}

/// Interior sign changes and whether a root sits across θ = 0.
fn count_brackets(signs: &[i8], half_integral: bool) -> (usize, bool) {
    let interior = signs.windows(2).filter(|w| w[0] != w[1]).count();
    let (first, last) = (signs[0], signs[signs.len() - 1]);
    // for odd k, t_f(θ + 2π) = −t_f(θ)
    let wrap = if half_integral { first == last } else { first != last };
    (interior, wrap)
}

fn assemble(form: &UnitCircleForm, angles: Vec<f64>, seeding: Seeding) -> Certificate {
    let values: Vec<f64> = angles.iter().map(|&t| form.eval_complex(t).re).collect();
    let signs: Vec<i8> = values.iter().map(|&v| sign_of(v)).collect();
    let (interior, wrap) = if signs.is_empty() {
        (0, false)
    } else {
        count_brackets(&signs, form.is_half_integral())
    };
    let degree = form.weight as usize - 2;
    let certified = !signs.is_empty() && signs.iter().all(|&s| s != 0) && interior + wrap as usize == degree;
    Certificate {
        status: if certified {
            CertificateStatus::Certified
        } else {
            CertificateStatus::Inconclusive
        },
        margin: values.iter().map(|v| v.abs()).fold(f64::INFINITY, f64::min),
        angles,
        signs,
        values,
        interior_changes: interior,
        wraparound_root: wrap,
        seeding,
        convention: CERTIFICATE_CONVENTION.to_string(),
    }
}

/// The θ in a small window around `theta` where |t_f| is largest.
fn refine_extremum(form: &UnitCircleForm, theta: f64, half_width: f64) -> f64 {
    let mut best = (theta, form.eval_complex(theta).re.abs());
    for i in 0..=16 {
        let t = theta - half_width + 2.0 * half_width * i as f64 / 16.0;
        if !(0.0..TWO_PI).contains(&t) {
            continue;
        }
        let v = form.eval_complex(t).re.abs();
        if v > best.1 {
            best = (t, v);
        }
    }
    best.0
}

pub fn sign_certificate(form: &UnitCircleForm) -> Certificate {
    let k = form.weight;
    if k == 3 {
        // t_f = 2 Re(b_1 e^{iθ/2}) has exactly one root on [0, 2π) once |b_0| = |b_1|
        let (b0, b1) = (form.b[0].norm(), form.b[1].norm());
        let defect = (b0 - b1).abs();
        let status = if defect <= 1e-12 * b0.max(b1) + form.b_errors.iter().sum::<f64>() {
            CertificateStatus::Trivial
        } else {
            CertificateStatus::Inconclusive
        };
        return Certificate {
            status,
            angles: Vec::new(),
            signs: Vec::new(),
            values: Vec::new(),
            margin: defect,
            interior_changes: 0,
            wraparound_root: false,
            seeding: Seeding::None,
            convention: CERTIFICATE_CONVENTION.to_string(),
        };
    }
    let degree = k as usize - 2;
    let spacing = TWO_PI / degree as f64;
    if let Ok(pred) = theta_predictions(form.level, k, -form.phase_constant()) {
        if pred.monotone && pred.thetas.len() == degree {
            let values: Vec<f64> = pred.thetas.iter().map(|&t| form.eval_complex(t).re.abs()).collect();
            let top = values.iter().cloned().fold(0.0, f64::max);
            let angles: Vec<f64> = pred
                .thetas
                .iter()
                .zip(&values)
                .map(|(&t, &v)| if v < 0.1 * top { refine_extremum(form, t, spacing / 4.0) } else { t })
                .collect();
            let cert = assemble(form, angles, Seeding::Predictions);
            if cert.status == CertificateStatus::Certified {
                return cert;
            }
        }
    }
    scan_certificate(form)
}

fn scan_certificate(form: &UnitCircleForm) -> Certificate {
    let degree = form.weight as usize - 2;
    let grid = 64 * degree.max(4);
    // one representative per sign run: the point of largest |t_f|
    let mut reps: Vec<(f64, f64)> = Vec::new();
    let mut current: Option<(i8, f64, f64)> = None;
    for i in 0..grid {
        let t = TWO_PI * (i as f64 + 0.5) / grid as f64;
        let v = form.eval_complex(t).re;
        let s = sign_of(v);
        if s == 0 {
            continue;
        }
        match current {
            Some((cs, bt, bv)) if cs == s => {
                if v.abs() > bv.abs() {
                    current = Some((s, t, v));
                } else {
                    current = Some((cs, bt, bv));
                }
            }
            Some((_, bt, bv)) => {
                reps.push((bt, bv));
                current = Some((s, t, v));
            }
            None => current = Some((s, t, v)),
        }
    }
    if let Some((_, bt, bv)) = current {
        reps.push((bt, bv));
    }
    if reps.len() >= 2 {
        let (first, last) = (sign_of(reps[0].1), sign_of(reps[reps.len() - 1].1));
        let same_run = if form.is_half_integral() { first != last } else { first == last };
        if same_run {
            reps.pop();
        }
    }
    assemble(form, reps.into_iter().map(|(t, _)| t).collect(), Seeding::Scan)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ThetaPredictions {
    pub thetas: Vec<f64>,
    /// false when (k−2)/2 ≤ 2π/√N; the angles then come from a scan and may not be unique
    pub monotone: bool,
}

/// Solutions θ ∈ [0, 2π) of (k−2)/2·θ − (2π/√N) sin θ = ℓπ + phase, ℓ = 0..k−3.
pub fn theta_predictions(level: u64, weight: u32, phase: f64) -> Result<ThetaPredictions, PeriodError> {
    if weight < 4 {
        return Err(PeriodError::Weight { weight, min: 4 });
    }
    let h = (weight as f64 - 2.0) / 2.0;
    let x = TWO_PI / (level as f64).sqrt();
    let g = |t: f64| h * t - x * t.sin();
    let period = TWO_PI * h;
    let degree = weight as usize - 2;
    if h > x {
        let mut thetas: Vec<f64> = (0..degree)
            .map(|l| {
                let target = (l as f64 * PI + phase).rem_euclid(period);
                solve_increasing(&g, |t| h - x * t.cos(), target, 0.0, TWO_PI)
            })
            .map(reduce_angle)
            .collect();
        thetas.sort_by(f64::total_cmp);
        return Ok(ThetaPredictions { thetas, monotone: true });
    }
    // g is not monotone: collect every crossing of every shifted target
    let steps = 4096 * weight as usize;
    let mut thetas = Vec::new();
    let j_max = ((x + period) / period).ceil() as i64 + 1;
    for l in 0..degree {
        for j in -j_max..=j_max {
            let target = l as f64 * PI + phase + j as f64 * period;
            let mut prev = g(0.0) - target;
            for i in 1..=steps {
                let t = TWO_PI * i as f64 / steps as f64;
                let cur = g(t) - target;
                if prev == 0.0 || prev.signum() != cur.signum() {
                    let lo = TWO_PI * (i - 1) as f64 / steps as f64;
                    thetas.push(reduce_angle(bisect(&|s| g(s) - target, lo, t)));
                }
                prev = cur;
            }
        }
    }
    thetas.sort_by(f64::total_cmp);
    thetas.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
    Ok(ThetaPredictions { thetas, monotone: false })
}

fn bisect(f: &dyn Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let flo = f(lo);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if (f(mid) > 0.0) == (flo > 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-15 {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// Newton iteration kept inside a shrinking bracket of an increasing function.
fn solve_increasing(g: &dyn Fn(f64) -> f64, dg: impl Fn(f64) -> f64, target: f64, mut lo: f64, mut hi: f64) -> f64 {
    let mut t = lo + (hi - lo) * (target - g(lo)) / (g(hi) - g(lo));
    for _ in 0..200 {
        let v = g(t) - target;
        if v.abs() < 1e-14 * target.abs().max(1.0) {
            break;
        }
        if v > 0.0 {
            hi = t;
        } else {
            lo = t;
        }
        let next = t - v / dg(t);
        t = if next > lo && next < hi { next } else { 0.5 * (lo + hi) };
        if hi - lo < 1e-13 {
            break;
        }
    }
    t
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EquiMatch {
    pub root_index: usize,
    pub prediction_index: usize,
    pub root_angle: f64,
    pub predicted: f64,
    /// root angle minus prediction, in (−π, π]
    pub deviation: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EquiReport {
    pub phase_constant: f64,
    pub predictions: ThetaPredictions,
    pub matches: Vec<EquiMatch>,
    pub max_deviation: f64,
    /// mean signed deviation; an estimate of c_f − C
    pub mean_offset: f64,
    /// for k = 4: |arg ρ₁ − arg ρ₂ − π| folded into [0, π]
    pub antipodal_defect: Option<f64>,
}

/// Matches root angles (in the t_f normalisation) against the zero predictions
/// hθ − (2π/√N) sin θ = ℓπ + π/2 − C.
pub fn equidistribution_report(report: &mut RootReport, form: &UnitCircleForm) -> Result<EquiReport, PeriodError> {
    let c = form.phase_constant();
    let predictions = theta_predictions(form.level, form.weight, PI / 2.0 - c)?;
    let mut owner: Vec<Option<usize>> = vec![None; predictions.thetas.len()];
    let mut matches = Vec::with_capacity(report.roots.len());
    for (i, e) in report.roots.iter().enumerate() {
        let (j, dev) = predictions
            .thetas
            .iter()
            .enumerate()
            .map(|(j, &p)| (j, circular_difference(e.circle_argument, p)))
            .min_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
            .ok_or(PeriodError::Weight {
                weight: form.weight,
                min: 4,
            })?;
        if let Some(first) = owner[j] {
            return Err(PeriodError::Matching {
                prediction: j,
                first,
                second: i,
            });
        }
        owner[j] = Some(i);
        matches.push(EquiMatch {
            root_index: i,
            prediction_index: j,
            root_angle: e.circle_argument,
            predicted: predictions.thetas[j],
            deviation: dev,
        });
    }
    for m in &matches {
        let e = &mut report.roots[m.root_index];
        e.prediction = Some(m.prediction_index);
        e.prediction_deviation = Some(m.deviation.abs());
    }
    let max_deviation = matches.iter().map(|m| m.deviation.abs()).fold(0.0, f64::max);
    let mean_offset = matches.iter().map(|m| m.deviation).sum::<f64>() / matches.len().max(1) as f64;
    let antipodal_defect = (form.weight == 4 && report.roots.len() == 2).then(|| {
        circular_difference(report.roots[0].argument - report.roots[1].argument, PI).abs()
    });
    Ok(EquiReport {
        phase_constant: c,
        predictions,
        matches,
        max_deviation,
        mean_offset,
        antipodal_defect,
    })
}

/// The pieces of Q_f at z = e^{iθ}: main term plus S₁, S₂, S₃.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QfDiagnostics {
    pub theta: f64,
    pub m: u32,
    pub main: Complex64,
    /// |L(k−1)| e^{−2π/√N}
    pub main_floor: f64,
    pub s1: f64,
    pub s2: f64,
    pub s3: f64,
    /// main_floor − (|S₁| + |S₂| + |S₃|)
    pub margin: f64,
    pub q_sum: Complex64,
    /// Q_f computed from the t_f coefficients, for comparison with `q_sum`
    pub q_direct: Complex64,
}

pub fn qf_decomposition(table: &LambdaTable, epsilon: Complex64, theta: f64) -> Result<QfDiagnostics, PeriodError> {
    let k = table.weight();
    if k < 6 {
        return Err(PeriodError::Weight { weight: k, min: 6 });
    }
    if (epsilon.norm() - 1.0).abs() > 1e-8 {
        return Err(PeriodError::NotUnimodular(epsilon.norm()));
    }
    let odd = k % 2 == 1;
    let m = if odd { (k - 3) / 2 } else { (k - 2) / 2 };
    let power = if odd { m as f64 + 0.5 } else { m as f64 };
    let x = TWO_PI / (table.level() as f64).sqrt();
    let delta = epsilon.inv().sqrt();
    let z = Complex64::from_polar(1.0, theta);
    let w = x / z;
    let zh = Complex64::from_polar(1.0, power * theta);
    let l_top = table.l_value(k - 1);
    let pref = delta.inv() * l_top.conj() * zh;

    let main = pref * w.exp();
    let mut s1 = Complex64::new(0.0, 0.0);
    let mut term = Complex64::new(1.0, 0.0);
    for n in 0..m {
        let ratio = (table.l_value(k - 1 - n) / l_top).conj();
        s1 += term * (ratio - 1.0);
        term *= w / (n as f64 + 1.0);
    }
    s1 *= pref;
    // term is now w^m / m!
    let mut tail = Complex64::new(0.0, 0.0);
    let mut t = term;
    let mut n = m;
    loop {
        tail += t;
        n += 1;
        t *= w / n as f64;
        if t.norm() <= 1e-17 * tail.norm() && n as f64 > x {
            break;
        }
    }
    let s2 = -pref * tail;
    let s3 = if odd {
        delta.inv() * zh * term * table.l_value(m + 2).conj()
    } else {
        let ln_mag = (2.0 * m as f64 + 1.0) * x.ln() - 2.0_f64.ln() - 2.0 * ln_factorial(m);
        delta * table.lambda(m + 1) * ln_mag.exp()
    };
    let q_sum = main + s1 + s2 + s3;

    // Q_f = x^{k−1}/(k−2)! · Σ_{n>m or n=m (halved, k even)} b_n z^{n−h}
    let h = (k as f64 - 2.0) / 2.0;
    let ln_front = (k as f64 - 1.0) * x.ln() - ln_factorial(k - 2);
    let mut q_direct = Complex64::new(0.0, 0.0);
    for n in m..=k - 2 {
        let weight_n = if !odd && n == m {
            0.5
        } else if odd && n == m {
            0.0
        } else {
            1.0
        };
        if weight_n == 0.0 {
            continue;
        }
        let b = delta * table.lambda(k - 1 - n);
        let ln_c = ln_front + binomial(k - 2, n).ln();
        q_direct += b * ln_c.exp() * weight_n * Complex64::from_polar(1.0, theta * (n as f64 - h));
    }
    let main_floor = l_top.norm() * (-x).exp();
    let (s1, s2, s3) = (s1.norm(), s2.norm(), s3.norm());
    Ok(QfDiagnostics {
        theta,
        m,
        main,
        main_floor,
        s1,
        s2,
        s3,
        margin: main_floor - (s1 + s2 + s3),
        q_sum,
        q_direct,
    })
}

/// Extremum angles hθ − (2π/√N) sin θ = ℓπ − C where the main term of Q_f is real.
pub fn qf_sample_angles(form: &UnitCircleForm) -> Result<Vec<f64>, PeriodError> {
    Ok(theta_predictions(form.level, form.weight, -form.phase_constant())?.thetas)
}
