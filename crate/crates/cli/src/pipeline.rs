//! validate → L-table → polynomial → roots → circle report → certificate → equidistribution.

use num_complex::Complex64;
use periodpoly_core::bounds;
use periodpoly_core::lvalues::{build_lambda_table, LambdaTable};
use periodpoly_core::newform::{self, Rule};
use periodpoly_core::period::{
    build_period_polynomial, build_unit_circle_form, circle_report, equidistribution_report, qf_decomposition,
    qf_sample_angles, sign_certificate, Certificate, EquiReport, PeriodPolynomial, RootReport, UnitCircleForm,
    DEFAULT_CIRCLE_TOLERANCE,
};
use periodpoly_core::rootfind::{RootFinderRegistry, DEFAULT_FINDER};

use crate::error::CliError;
use crate::source::Input;

#[derive(Debug, Clone)]
pub struct VerifyOptions {
    pub tolerance: f64,
    pub finder: String,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            tolerance: DEFAULT_CIRCLE_TOLERANCE,
            finder: DEFAULT_FINDER.to_string(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Verification {
    pub table: LambdaTable,
    pub polynomial: PeriodPolynomial,
    pub form: UnitCircleForm,
    pub report: RootReport,
    pub certificate: Certificate,
    pub equi: Result<EquiReport, String>,
    pub qf_margin: Option<f64>,
    pub in_exceptional_set: bool,
}

impl Verification {
    /// The circle check is the verdict; the certificate is supporting evidence.
    pub fn passed(&self) -> bool {
        self.report.passed
    }
}

pub fn lambda_table(input: &Input) -> Result<LambdaTable, CliError> {
    match input {
        Input::Table(t) => Ok(t.clone()),
        Input::Form(d) => {
            let v = newform::validate(d);
            if let Some(bad) = v.structural().next() {
                return Err(CliError::Validation(format!(
                    "{}: {} violated at index {} (magnitude {:e}){}",
                    d.label(),
                    bad.rule,
                    bad.index,
                    bad.magnitude,
                    bad.hint.as_deref().map(|h| format!("; {h}")).unwrap_or_default()
                )));
            }
            if let Some(short) = v.violations.iter().find(|x| x.rule == Rule::CoefficientCount) {
                return Err(CliError::Precision(format!(
                    "{}: {}",
                    d.label(),
                    short.hint.as_deref().unwrap_or("too few coefficients")
                )));
            }
            Ok(build_lambda_table(d)?)
        }
    }
}

/// Smallest Q_f margin over the extremum angles, for k ≥ 6.
pub fn qf_margin(table: &LambdaTable, form: &UnitCircleForm) -> Result<Option<f64>, CliError> {
    if table.weight() < 6 {
        return Ok(None);
    }
    let mut worst = f64::INFINITY;
    for theta in qf_sample_angles(form)? {
        worst = worst.min(qf_decomposition(table, table.epsilon(), theta)?.margin);
    }
    Ok(Some(worst))
}

pub fn verify(input: &Input, opts: &VerifyOptions) -> Result<Verification, CliError> {
    let table = lambda_table(input)?;
    verify_table(table, opts)
}

pub fn verify_table(table: LambdaTable, opts: &VerifyOptions) -> Result<Verification, CliError> {
    let polynomial = build_period_polynomial(&table)?;
    let roots = polynomial.find_roots_with(&RootFinderRegistry::default(), &opts.finder)?;
    let mut report = circle_report(&roots, table.level(), table.weight(), opts.tolerance);
    report.attach_residuals(&polynomial);
    let form = build_unit_circle_form(&table, table.epsilon())?;
    let certificate = sign_certificate(&form);
    report.certificate = Some(certificate.status);
    let equi = if table.weight() >= 4 {
        equidistribution_report(&mut report, &form).map_err(|e| e.to_string())
    } else {
        Err("no angle predictions below weight 4".to_string())
    };
    let qf_margin = qf_margin(&table, &form)?;
    let in_exceptional_set = bounds::in_exceptional_set(table.weight(), table.level())?;
    Ok(Verification {
        table,
        polynomial,
        form,
        report,
        certificate,
        equi,
        qf_margin,
        in_exceptional_set,
    })
}

pub fn epsilon_pair(z: Complex64) -> [f64; 2] {
    [z.re, z.im]
}
