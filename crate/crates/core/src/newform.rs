//! Newform data model, the coefficient-file format and validation.
//!
//! Coefficients are stored exactly as given, in the arithmetic normalization
//! where the Deligne bound reads |a_p| ≤ 2 p^{(k-1)/2}.

use std::fmt;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lvalues;
use crate::specfun::PrecisionBudget;

#[derive(Debug, Error)]
pub enum NewformError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed coefficient file: {0}")]
    Parse(String),
    #[error("coefficient file is missing field `{0}`")]
    Schema(String),
    #[error("coefficient a_{index} is missing")]
    Gap { index: usize },
    #[error("invalid descriptor: {0}")]
    Invalid(String),
    #[error("q-expansion tail bound {tail:e} exceeds the target {target:e} at y = {y}")]
    Precision { y: f64, tail: f64, target: f64 },
    #[error("y = {y} is below the convergence limit {limit} of the truncated q-expansion")]
    Domain { y: f64, limit: f64 },
}

/// A normalized newform f ∈ S_k(Γ₀(N), χ) given by its first M Fourier coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct NewformDescriptor {
    label: String,
    level: u64,
    weight: u32,
    nebentypus: String,
    root_number: Option<Complex64>,
    coefficients: Vec<Complex64>,
}

impl NewformDescriptor {
    pub fn new(
        label: impl Into<String>,
        level: u64,
        weight: u32,
        nebentypus: impl Into<String>,
        root_number: Option<Complex64>,
        coefficients: Vec<Complex64>,
    ) -> Result<Self, NewformError> {
        if level == 0 {
            return Err(NewformError::Invalid("level must be positive".into()));
        }
        if weight < 3 {
            return Err(NewformError::Invalid(format!(
                "weight {weight} < 3 gives a constant period polynomial"
            )));
        }
        if coefficients.is_empty() {
            return Err(NewformError::Invalid("no coefficients".into()));
        }
        if coefficients
            .iter()
            .any(|c| !c.re.is_finite() || !c.im.is_finite())
        {
            return Err(NewformError::Invalid("non-finite coefficient".into()));
        }
        Ok(Self {
            label: label.into(),
            level,
            weight,
            nebentypus: nebentypus.into(),
            root_number,
            coefficients,
        })
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

    pub fn nebentypus(&self) -> &str {
        &self.nebentypus
    }

    pub fn root_number(&self) -> Option<Complex64> {
        self.root_number
    }

    /// a_1, a_2, ..., a_M.
    pub fn coefficients(&self) -> &[Complex64] {
        &self.coefficients
    }

    /// a_n with 1-based n; zero past the stored range.
    pub fn coefficient(&self, n: usize) -> Complex64 {
        if n == 0 {
            return Complex64::new(0.0, 0.0);
        }
        self.coefficients
            .get(n - 1)
            .copied()
            .unwrap_or(Complex64::new(0.0, 0.0))
    }

    pub fn len(&self) -> usize {
        self.coefficients.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coefficients.is_empty()
    }

    pub fn with_root_number(mut self, root_number: Option<Complex64>) -> Self {
        self.root_number = root_number;
        self
    }

    /// Keep only a_1..a_M.
    pub fn truncated(&self, m: usize) -> Self {
        let mut out = self.clone();
        out.coefficients.truncate(m.max(1));
        out
    }

    pub fn is_self_dual(&self) -> bool {
        self.coefficients.iter().all(|c| c.im == 0.0)
    }

    pub fn to_file(&self) -> CoefficientFile {
        CoefficientFile {
            label: Some(self.label.clone()),
            level: Some(self.level),
            weight: Some(self.weight),
            char: Some(self.nebentypus.clone()),
            root_number: self.root_number.map(|e| [e.re, e.im]),
            coeffs: Some(
                self.coefficients
                    .iter()
                    .map(|c| Some([c.re, c.im]))
                    .collect(),
            ),
        }
    }

    pub fn to_json(&self) -> String {
        self.to_file().to_json()
    }

    pub fn from_json(text: &str) -> Result<Self, NewformError> {
        let file: CoefficientFile =
            serde_json::from_str(text).map_err(|e| NewformError::Parse(e.to_string()))?;
        file.into_descriptor()
    }
}

/// On-disk coefficient document. Every field is optional at the serde level
/// so a missing one is reported as a schema error rather than a parse error.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientFile {
    pub label: Option<String>,
    pub level: Option<u64>,
    pub weight: Option<u32>,
    pub char: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub root_number: Option<[f64; 2]>,
    pub coeffs: Option<Vec<Option<[f64; 2]>>>,
}

impl CoefficientFile {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("coefficient files always serialize")
    }

    pub fn into_descriptor(self) -> Result<NewformDescriptor, NewformError> {
        let label = self.label.ok_or_else(|| NewformError::Schema("label".into()))?;
        let level = self.level.ok_or_else(|| NewformError::Schema("level".into()))?;
        let weight = self
            .weight
            .ok_or_else(|| NewformError::Schema("weight".into()))?;
        let nebentypus = self.char.ok_or_else(|| NewformError::Schema("char".into()))?;
        let raw = self
            .coeffs
            .ok_or_else(|| NewformError::Schema("coeffs".into()))?;
        let coefficients = raw
            .into_iter()
            .enumerate()
            .map(|(i, c)| {
                c.map(|[re, im]| Complex64::new(re, im))
                    .ok_or(NewformError::Gap { index: i + 1 })
            })
            .collect::<Result<Vec<_>, _>>()?;
        let root_number = self.root_number.map(|[re, im]| Complex64::new(re, im));
        NewformDescriptor::new(label, level, weight, nebentypus, root_number, coefficients)
    }
}

pub fn load_from_file(path: impl AsRef<Path>) -> Result<NewformDescriptor, NewformError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| NewformError::Io {
        path: path.display().to_string(),
        source,
    })?;
    NewformDescriptor::from_json(&text)
}

pub fn save_to_file(d: &NewformDescriptor, path: impl AsRef<Path>) -> Result<(), NewformError> {
    let path = path.as_ref();
    std::fs::write(path, d.to_json()).map_err(|source| NewformError::Io {
        path: path.display().to_string(),
        source,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rule {
    Normalization,
    RootNumberModulus,
    Deligne,
    AnalyticNormalization,
    CoefficientCount,
}

impl Rule {
    pub fn name(self) -> &'static str {
        match self {
            Rule::Normalization => "normalization",
            Rule::RootNumberModulus => "root number modulus",
            Rule::Deligne => "deligne",
            Rule::AnalyticNormalization => "analytic normalization",
            Rule::CoefficientCount => "coefficient count",
        }
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub rule: Rule,
    /// Coefficient index the violation refers to (0 when not index-specific).
    pub index: usize,
    pub magnitude: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hint: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub passed: bool,
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    fn from_violations(violations: Vec<Violation>) -> Self {
        Self {
            passed: violations.is_empty(),
            violations,
        }
    }

    pub fn has(&self, rule: Rule) -> bool {
        self.violations.iter().any(|v| v.rule == rule)
    }

    /// Violations other than an insufficient coefficient count.
    pub fn structural(&self) -> impl Iterator<Item = &Violation> {
        self.violations
            .iter()
            .filter(|v| v.rule != Rule::CoefficientCount)
    }
}

const DELIGNE_SLACK: f64 = 1e-6;
const ROOT_NUMBER_SLACK: f64 = 1e-10;

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= n {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

/// Check every descriptor invariant and report all violations.
pub fn validate(d: &NewformDescriptor) -> ValidationReport {
    let mut violations = Vec::new();
    let a1 = d.coefficient(1);
    let off = (a1 - Complex64::new(1.0, 0.0)).norm();
    if off > 1e-12 {
        violations.push(Violation {
            rule: Rule::Normalization,
            index: 1,
            magnitude: a1.norm(),
            hint: None,
        });
    }
    if let Some(eps) = d.root_number() {
        if (eps.norm() - 1.0).abs() > ROOT_NUMBER_SLACK {
            violations.push(Violation {
                rule: Rule::RootNumberModulus,
                index: 0,
                magnitude: eps.norm(),
                hint: None,
            });
        }
    }
    let half = (d.weight() as f64 - 1.0) / 2.0;
    let mut checked = 0usize;
    let mut max_abs = 0.0f64;
    for p in (2..=d.len() as u64).filter(|&p| is_prime(p) && !d.level().is_multiple_of(p)) {
        let a = d.coefficient(p as usize).norm();
        let bound = 2.0 * (p as f64).powf(half);
        if a > bound + DELIGNE_SLACK {
            violations.push(Violation {
                rule: Rule::Deligne,
                index: p as usize,
                magnitude: a,
                hint: None,
            });
        }
        checked += 1;
        max_abs = max_abs.max(a);
    }
    if checked >= 5 && max_abs > 0.0 && max_abs <= 2.0 + DELIGNE_SLACK {
        violations.push(Violation {
            rule: Rule::AnalyticNormalization,
            index: 0,
            magnitude: max_abs,
            hint: Some(format!(
                "all |a_p| <= 2 at {checked} unramified primes; coefficients look analytically \
                 normalized, multiply a_n by n^{half}"
            )),
        });
    }
    let budget = lvalues::lambda_budget(d.level(), d.weight(), &PrecisionBudget::default());
    match lvalues::truncation_length(d.level(), d.weight(), &budget) {
        Ok(m) if m <= d.len() => {}
        Ok(m) => violations.push(Violation {
            rule: Rule::CoefficientCount,
            index: m,
            magnitude: d.len() as f64,
            hint: Some(format!("{m} coefficients needed, {} given", d.len())),
        }),
        Err(e) => violations.push(Violation {
            rule: Rule::CoefficientCount,
            index: 0,
            magnitude: d.len() as f64,
            hint: Some(e.to_string()),
        }),
    }
    ValidationReport::from_violations(violations)
}

/// The dual form f̄: conjugated coefficients and root number.
pub fn conjugate(d: &NewformDescriptor) -> NewformDescriptor {
    NewformDescriptor {
        coefficients: d.coefficients.iter().map(|c| c.conj()).collect(),
        root_number: d.root_number.map(|e| e.conj()),
        ..d.clone()
    }
}

/// f(iy) together with a Deligne-bound estimate of the truncated tail.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CuspValue {
    pub value: Complex64,
    pub tail_bound: f64,
}

/// Σ_{n ≤ M} d(n) n^{(k-1)/2} e^{-2πny} over n > M, using d(n) ≤ n.
pub(crate) fn q_tail_bound(m: usize, weight: u32, y: f64) -> f64 {
    let exponent = (weight as f64 + 1.0) / 2.0;
    let decay = 2.0 * std::f64::consts::PI * y;
    let mut total = 0.0;
    let mut n = m as f64 + 1.0;
    loop {
        let term = (exponent * n.ln() - decay * n).exp();
        total += term;
        // once terms decrease geometrically with ratio r, the rest is below term·r/(1-r)
        let ratio = ((n + 1.0) / n).powf(exponent) * (-decay).exp();
        if ratio < 0.9 && term * ratio / (1.0 - ratio) <= total * 1e-3 {
            total += term * ratio / (1.0 - ratio);
            return total;
        }
        n += 1.0;
        if n > 1e8 {
            return f64::INFINITY;
        }
    }
}

pub fn eval_cusp_form(
    d: &NewformDescriptor,
    y: f64,
    budget: &PrecisionBudget,
) -> Result<CuspValue, NewformError> {
    let limit = 0.1 / (d.level() as f64).sqrt();
    if !(y >= limit) {
        return Err(NewformError::Domain { y, limit });
    }
    let q = (-2.0 * std::f64::consts::PI * y).exp();
    let mut qn = 1.0;
    let mut value = Complex64::new(0.0, 0.0);
    for a in d.coefficients() {
        qn *= q;
        if qn == 0.0 {
            break;
        }
        value += a * qn;
    }
    let tail = q_tail_bound(d.len(), d.weight(), y);
    let target = budget
        .target_abs_error
        .max(budget.target_rel_error * value.norm());
    if tail > target {
        return Err(NewformError::Precision { y, tail, target });
    }
    Ok(CuspValue {
        value,
        tail_bound: tail,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn toy(level: u64, weight: u32, coeffs: Vec<Complex64>) -> NewformDescriptor {
        NewformDescriptor::new("toy", level, weight, "trivial", None, coeffs).unwrap()
    }

    const SEVEN_ELEVEN_HEAD: &str = r#"{
        "label": "11.7.b.a", "level": 11, "weight": 7, "char": "11.b",
        "root_number": [1.0, 0.0],
        "coeffs": [[1,0],[0,0],[10,0],[64,0],[74,0]]
    }"#;

    #[test]
    fn parses_head_of_weight_seven_form() {
        let d = NewformDescriptor::from_json(SEVEN_ELEVEN_HEAD).unwrap();
        assert_eq!(d.level(), 11);
        assert_eq!(d.weight(), 7);
        assert_eq!(d.coefficient(3), c(10.0, 0.0));
        assert_eq!(d.coefficient(4), c(64.0, 0.0));
        assert_eq!(d.coefficient(5), c(74.0, 0.0));
        assert_eq!(d.root_number(), Some(c(1.0, 0.0)));
    }

    #[test]
    fn schema_and_gap_errors() {
        let missing = r#"{"label": "x", "level": 11, "char": "a", "coeffs": [[1,0]]}"#;
        match NewformDescriptor::from_json(missing) {
            Err(NewformError::Schema(f)) => assert_eq!(f, "weight"),
            other => panic!("expected schema error, got {other:?}"),
        }
        let gap = r#"{"label": "x", "level": 11, "weight": 3, "char": "a", "coeffs": [[1,0],null,[2,0]]}"#;
        assert!(matches!(
            NewformDescriptor::from_json(gap),
            Err(NewformError::Gap { index: 2 })
        ));
        assert!(matches!(
            NewformDescriptor::from_json("{not json"),
            Err(NewformError::Parse(_))
        ));
    }

    #[test]
    fn bad_normalization_is_reported() {
        let text = r#"{"label": "x", "level": 11, "weight": 3, "char": "a", "coeffs": [[2,0],[0,0]]}"#;
        let d = NewformDescriptor::from_json(text).unwrap();
        let report = validate(&d);
        assert!(!report.passed);
        assert!(report.has(Rule::Normalization));
        assert_eq!(Rule::Normalization.name(), "normalization");
    }

    #[test]
    fn deligne_violation_at_two() {
        let mut coeffs = vec![c(0.0, 0.0); 10];
        coeffs[0] = c(1.0, 0.0);
        coeffs[1] = c(100.0, 0.0);
        let report = validate(&toy(11, 3, coeffs));
        let v = report
            .violations
            .iter()
            .find(|v| v.rule == Rule::Deligne)
            .expect("deligne violation");
        assert_eq!(v.index, 2);
        assert_eq!(v.magnitude, 100.0);
    }

    #[test]
    fn ramified_primes_are_not_deligne_checked() {
        let mut coeffs = vec![c(0.0, 0.0); 12];
        coeffs[0] = c(1.0, 0.0);
        coeffs[10] = c(1331.0, 0.0); // p = 11 divides the level
        let report = validate(&toy(11, 3, coeffs));
        assert!(!report.has(Rule::Deligne));
    }

    #[test]
    fn root_number_modulus_violation() {
        let d = toy(11, 3, vec![c(1.0, 0.0)]).with_root_number(Some(c(2.0, 0.0)));
        assert!(validate(&d).has(Rule::RootNumberModulus));
    }

    #[test]
    fn all_violations_are_reported_together() {
        let mut coeffs = vec![c(0.0, 0.0); 10];
        coeffs[0] = c(3.0, 0.0);
        coeffs[1] = c(50.0, 0.0);
        let d = toy(11, 3, coeffs).with_root_number(Some(c(0.0, 3.0)));
        let report = validate(&d);
        assert!(report.has(Rule::Normalization));
        assert!(report.has(Rule::Deligne));
        assert!(report.has(Rule::RootNumberModulus));
        assert!(report.has(Rule::CoefficientCount));
    }

    #[test]
    fn analytic_normalization_hint() {
        // |a_p| ≤ 2 at every unramified prime: weight 12 data scaled down
        let coeffs: Vec<_> = (1..=60)
            .map(|n| c(if n == 1 { 1.0 } else { ((n as f64) * 0.7).cos() }, 0.0))
            .collect();
        let report = validate(&toy(1, 12, coeffs));
        let v = report
            .violations
            .iter()
            .find(|v| v.rule == Rule::AnalyticNormalization)
            .unwrap();
        assert!(v.hint.as_deref().unwrap().contains("normalized"));
    }

    #[test]
    fn conjugation() {
        let d = toy(11, 3, vec![c(1.0, 0.0), c(1.0, 1.0)]).with_root_number(Some(c(0.0, 1.0)));
        let cd = conjugate(&d);
        assert_eq!(cd.coefficient(2), c(1.0, -1.0));
        assert_eq!(cd.root_number(), Some(c(0.0, -1.0)));
        assert_eq!(conjugate(&cd), d);
        let real = toy(11, 3, vec![c(1.0, 0.0), c(-2.0, 0.0)]);
        assert_eq!(conjugate(&real), real);
    }

    #[test]
    fn cusp_form_single_term() {
        let d = toy(1, 12, vec![c(1.0, 0.0)]);
        let v = eval_cusp_form(&d, 1.0, &PrecisionBudget::new(1.0, 1.0).unwrap()).unwrap();
        let want = (-2.0 * std::f64::consts::PI).exp();
        assert!((v.value.re - want).abs() < 1e-18);
        assert_eq!(v.value.im, 0.0);
    }

    #[test]
    fn cusp_form_domain_and_precision() {
        let d = toy(100, 12, vec![c(1.0, 0.0); 3]);
        assert!(matches!(
            eval_cusp_form(&d, 0.001, &PrecisionBudget::default()),
            Err(NewformError::Domain { .. })
        ));
        assert!(matches!(
            eval_cusp_form(&d, 0.02, &PrecisionBudget::default()),
            Err(NewformError::Precision { .. })
        ));
        let far = eval_cusp_form(&d, 50.0, &PrecisionBudget::default()).unwrap();
        assert!(far.value.norm() < 1e-100);
    }

    #[test]
    fn json_round_trip_is_bit_exact() {
        let coeffs = vec![c(1.0, 0.0), c(0.1 + 0.2, -1e-300), c(-0.0, 123_456.789_012_345_67)];
        let d = NewformDescriptor::new("x", 5, 4, "a", Some(c(0.6, 0.8)), coeffs).unwrap();
        let back = NewformDescriptor::from_json(&d.to_json()).unwrap();
        for (a, b) in d.coefficients().iter().zip(back.coefficients()) {
            assert_eq!(a.re.to_bits(), b.re.to_bits());
            assert_eq!(a.im.to_bits(), b.im.to_bits());
        }
        assert_eq!(back.to_json(), d.to_json());
    }

    mod props {
        use super::super::*;
        use proptest::prelude::*;

        fn finite() -> impl Strategy<Value = f64> {
            prop_oneof![
                any::<f64>().prop_filter("finite", |x| x.is_finite()),
                -1e6f64..1e6,
            ]
        }

        proptest! {
            #[test]
            fn file_round_trip(coeffs in prop::collection::vec((finite(), finite()), 1..40),
                               eps in proptest::option::of((finite(), finite()))) {
                let coeffs: Vec<_> = coeffs.into_iter().map(|(a, b)| Complex64::new(a, b)).collect();
                let d = NewformDescriptor::new("p", 7, 5, "c", eps.map(|(a, b)| Complex64::new(a, b)), coeffs).unwrap();
                let text = d.to_json();
                let back = NewformDescriptor::from_json(&text).unwrap();
                for (a, b) in d.coefficients().iter().zip(back.coefficients()) {
                    prop_assert_eq!(a.re.to_bits(), b.re.to_bits());
                    prop_assert_eq!(a.im.to_bits(), b.im.to_bits());
                }
                prop_assert_eq!(back.to_json(), text);
            }

            #[test]
            fn validation_is_conjugation_invariant(re in prop::collection::vec(-40.0f64..40.0, 1..30),
                                                   im in prop::collection::vec(-40.0f64..40.0, 30)) {
                let coeffs: Vec<_> = re.iter().zip(&im).map(|(&a, &b)| Complex64::new(a, b)).collect();
                let d = NewformDescriptor::new("p", 3, 5, "c", None, coeffs).unwrap();
                prop_assert_eq!(validate(&d).passed, validate(&conjugate(&d)).passed);
                prop_assert_eq!(validate(&d).violations.len(), validate(&conjugate(&d)).violations.len());
            }
        }
    }
}
