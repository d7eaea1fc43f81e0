//! Polynomial root finders behind a common trait, selectable by name.
//!
//! Coefficients are given in ascending order: p(z) = Σ c_n z^n.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use thiserror::Error;

pub const DEFAULT_MAX_ITERATIONS: usize = 500;
pub const DEFAULT_FINDER: &str = "aberth";
pub const FALLBACK_FINDER: &str = "companion";

#[derive(Debug, Error)]
pub enum RootFindError {
    #[error("polynomial has degree {0}; need at least 1 with a nonzero leading coefficient")]
    Degenerate(usize),
    #[error("{method} did not converge within {iterations} iterations")]
    NoConvergence { method: &'static str, iterations: usize },
    #[error("unknown root finder '{name}' (known: {known})")]
    Unknown { name: String, known: String },
}

pub trait RootFinder: Send + Sync {
    fn name(&self) -> &'static str;

    /// All roots of Σ c_n z^n. `prior_radius` is where the roots are expected
    /// to lie; iterative methods start on that circle.
    fn find_roots(&self, coeffs: &[Complex64], prior_radius: Option<f64>) -> Result<Vec<Complex64>, RootFindError>;
}

/// Strip trailing zero coefficients and divide by the leading one.
fn monic(coeffs: &[Complex64]) -> Result<Vec<Complex64>, RootFindError> {
    let scale = coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
    let mut end = coeffs.len();
    while end > 0 && coeffs[end - 1].norm() <= 1e-300_f64.max(scale * 1e-15) {
        end -= 1;
    }
    if end < 2 {
        return Err(RootFindError::Degenerate(end.saturating_sub(1)));
    }
    let lead = coeffs[end - 1];
    Ok(coeffs[..end].iter().map(|c| c / lead).collect())
}

pub fn horner(coeffs: &[Complex64], z: Complex64) -> Complex64 {
    coeffs.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, &c| acc * z + c)
}

fn horner_with_derivative(coeffs: &[Complex64], z: Complex64) -> (Complex64, Complex64) {
    let zero = Complex64::new(0.0, 0.0);
    coeffs.iter().rev().fold((zero, zero), |(p, dp), &c| (p * z + c, dp * z + p))
}

fn initial_guesses(p: &[Complex64], prior_radius: Option<f64>) -> Vec<Complex64> {
    let n = p.len() - 1;
    let radius = prior_radius.unwrap_or_else(|| {
        let r = p[0].norm().powf(1.0 / n as f64);
        if r > 0.0 && r.is_finite() {
            r
        } else {
            1.0
        }
    });
    // a small rotation keeps guesses off symmetry axes of real polynomials
    (0..n)
        .map(|j| Complex64::from_polar(radius, 2.0 * PI * j as f64 / n as f64 + 0.4 / n as f64))
        .collect()
}

/// Rounding-level bound on |p(z)| for Horner evaluation.
fn noise_floor(p: &[Complex64], z: Complex64) -> f64 {
    let r = z.norm();
    let magnitude = p.iter().rev().fold(0.0, |acc, c| acc * r + c.norm());
    4.0 * p.len() as f64 * f64::EPSILON * magnitude
}

fn converged(step: Complex64, z: Complex64) -> bool {
    step.norm() <= 4.0 * f64::EPSILON * z.norm().max(f64::MIN_POSITIVE)
}

pub struct AberthEhrlich {
    pub max_iterations: usize,
}

impl Default for AberthEhrlich {
    fn default() -> Self {
        Self {
            max_iterations: DEFAULT_MAX_ITERATIONS,
        }
    }
}

impl RootFinder for AberthEhrlich {
    fn name(&self) -> &'static str {
        "aberth"
    }

    fn find_roots(&self, coeffs: &[Complex64], prior_radius: Option<f64>) -> Result<Vec<Complex64>, RootFindError> {
        let p = monic(coeffs)?;
        if p.len() == 2 {
            return Ok(vec![-p[0]]);
        }
        let mut z = initial_guesses(&p, prior_radius);
        let mut frozen = vec![false; z.len()];
        for _ in 0..self.max_iterations {
            for i in 0..z.len() {
                if frozen[i] {
                    continue;
                }
                let (v, dv) = horner_with_derivative(&p, z[i]);
                if v.norm() <= noise_floor(&p, z[i]) {
                    frozen[i] = true;
                    continue;
                }
                let ratio = v / dv;
                let repulsion: Complex64 = z
                    .iter()
                    .enumerate()
                    .filter(|&(j, _)| j != i)
                    .map(|(_, &zj)| (z[i] - zj).inv())
                    .sum();
                let step = ratio / (1.0 - ratio * repulsion);
                if !step.is_finite() {
                    continue;
                }
                z[i] -= step;
                frozen[i] = converged(step, z[i]);
            }
            if frozen.iter().all(|&f| f) {
                return Ok(z);
            }
        }
        Err(RootFindError::NoConvergence {
            method: "aberth",
            iterations: self.max_iterations,
        })
    }
}

pub struct DurandKerner {
    pub max_iterations: usize,
}

impl Default for DurandKerner {
    fn default() -> Self {
        Self {
            max_iterations: DEFAULT_MAX_ITERATIONS,
        }
    }
}

impl RootFinder for DurandKerner {
    fn name(&self) -> &'static str {
        "durand-kerner"
    }

    fn find_roots(&self, coeffs: &[Complex64], prior_radius: Option<f64>) -> Result<Vec<Complex64>, RootFindError> {
        let p = monic(coeffs)?;
        if p.len() == 2 {
            return Ok(vec![-p[0]]);
        }
        let mut z = initial_guesses(&p, prior_radius);
        let mut frozen = vec![false; z.len()];
        for _ in 0..self.max_iterations {
            for i in 0..z.len() {
                if frozen[i] {
                    continue;
                }
                let v = horner(&p, z[i]);
                if v.norm() <= noise_floor(&p, z[i]) {
                    frozen[i] = true;
                    continue;
                }
                let denom: Complex64 = z
                    .iter()
                    .enumerate()
                    .filter(|&(j, _)| j != i)
                    .map(|(_, &zj)| z[i] - zj)
                    .product();
                let step = v / denom;
                if !step.is_finite() {
                    continue;
                }
                z[i] -= step;
                frozen[i] = converged(step, z[i]);
            }
            if frozen.iter().all(|&f| f) {
                return Ok(z);
            }
        }
        Err(RootFindError::NoConvergence {
            method: "durand-kerner",
            iterations: self.max_iterations,
        })
    }
}

/// Eigenvalues of the companion matrix via a complex Schur decomposition.
pub struct CompanionMatrix;

impl RootFinder for CompanionMatrix {
    fn name(&self) -> &'static str {
        "companion"
    }

    fn find_roots(&self, coeffs: &[Complex64], _prior_radius: Option<f64>) -> Result<Vec<Complex64>, RootFindError> {
        let p = monic(coeffs)?;
        let n = p.len() - 1;
        let mut m = DMatrix::<Complex64>::zeros(n, n);
        for i in 1..n {
            m[(i, i - 1)] = Complex64::new(1.0, 0.0);
        }
        for i in 0..n {
            m[(i, n - 1)] = -p[i];
        }
        let schur = m
            .try_schur(f64::EPSILON, 100 * n.max(10))
            .ok_or(RootFindError::NoConvergence {
                method: "companion",
                iterations: 100 * n.max(10),
            })?;
        let (_, t) = schur.unpack();
        Ok((0..n).map(|i| t[(i, i)]).collect())
    }
}

/// Up to three Newton steps per root, kept only while the residual shrinks.
pub fn polish(coeffs: &[Complex64], roots: &mut [Complex64]) {
    for r in roots.iter_mut() {
        for _ in 0..3 {
            let (v, dv) = horner_with_derivative(coeffs, *r);
            let candidate = *r - v / dv;
            if candidate.is_finite() && horner(coeffs, candidate).norm() < v.norm() {
                *r = candidate;
            } else {
                break;
            }
        }
    }
}

/// Root finders registered by name.
#[derive(Clone)]
pub struct RootFinderRegistry {
    finders: BTreeMap<&'static str, Arc<dyn RootFinder>>,
}

impl Default for RootFinderRegistry {
    fn default() -> Self {
        let mut r = Self::empty();
        r.register(Arc::new(AberthEhrlich::default()));
        r.register(Arc::new(DurandKerner::default()));
        r.register(Arc::new(CompanionMatrix));
        r
    }
}

impl RootFinderRegistry {
    pub fn empty() -> Self {
        Self {
            finders: BTreeMap::new(),
        }
    }

    /// Adds a finder, replacing any earlier one with the same name.
    pub fn register(&mut self, finder: Arc<dyn RootFinder>) {
        self.finders.insert(finder.name(), finder);
    }

    pub fn get(&self, name: &str) -> Result<Arc<dyn RootFinder>, RootFindError> {
        self.finders.get(name).cloned().ok_or_else(|| RootFindError::Unknown {
            name: name.to_string(),
            known: self.names().join(", "),
        })
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.finders.keys().copied().collect()
    }
}
