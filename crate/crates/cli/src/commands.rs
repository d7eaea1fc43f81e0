//! Subcommand bodies. Each writes human output to `out` and returns the exit status.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use periodpoly_core::bounds::{self, Parity, WEIGHT5_EXPONENT};
use periodpoly_core::construct;
use periodpoly_core::newform::{self, NewformDescriptor};
use periodpoly_core::period::CertificateStatus;
use periodpoly_lmfdb::{FetchRequest, LmfdbClient};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{CliError, Exit};
use crate::pipeline::{verify, Verification, VerifyOptions};
use crate::record::{Format, Report, VerificationRecord};
use crate::source::{required_coefficients, Resolver, Source};

fn io(out: &mut dyn Write, text: std::fmt::Arguments<'_>) -> Result<(), CliError> {
    out.write_fmt(text).map_err(CliError::io("<stdout>"))
}

macro_rules! say {
    ($out:expr, $($arg:tt)*) => { io($out, format_args!($($arg)*)) };
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TextFormat {
    #[default]
    Text,
    Json,
    Csv,
}

pub struct FetchArgs {
    pub label: String,
    pub coefficients: Option<usize>,
    pub offline: bool,
    pub embedding: Option<String>,
    pub out: Option<PathBuf>,
}

pub fn fetch(client: &LmfdbClient, args: &FetchArgs, out: &mut dyn Write) -> Result<Exit, CliError> {
    let min = match (args.coefficients, crate::source::level_weight_of(&args.label)) {
        (Some(m), _) => m,
        (None, Some((n, k))) if n > 0 && k >= 3 => required_coefficients(n, k)?,
        (None, _) => 1,
    };
    let req = FetchRequest::new(&args.label, min)
        .offline(args.offline)
        .with_embedding(args.embedding.clone());
    let d = client.fetch_newform(&req)?;
    if let Some(path) = &args.out {
        newform::save_to_file(&d, path)?;
        say!(out, "wrote {} ({} coefficients) to {}\n", d.label(), d.len(), path.display())?;
    } else {
        say!(
            out,
            "cached {} ({} coefficients) in {}\n",
            d.label(),
            d.len(),
            client.cache().dir().display()
        )?;
    }
    Ok(Exit::Ok)
}

fn fmt_c(z: num_complex::Complex64) -> String {
    let sign = if z.im < 0.0 { '-' } else { '+' };
    format!("{:.15} {sign} {:.15}i", z.re, z.im.abs())
}

fn status_name(s: CertificateStatus) -> &'static str {
    match s {
        CertificateStatus::Certified => "certified",
        CertificateStatus::Trivial => "trivial",
        CertificateStatus::Inconclusive => "inconclusive",
    }
}

pub fn print_summary(v: &Verification, out: &mut dyn Write) -> Result<(), CliError> {
    let t = &v.table;
    let solved = if t.epsilon_solve().method == periodpoly_core::lvalues::EpsilonMethod::Solved {
        "solved"
    } else {
        "given"
    };
    say!(
        out,
        "{}  N = {}  k = {}  epsilon = {} ({solved})\n",
        t.label(),
        t.level(),
        t.weight(),
        fmt_c(t.epsilon())
    )?;
    say!(out, "roots of r_f:\n")?;
    for (i, e) in v.report.roots.iter().enumerate() {
        say!(
            out,
            "  z{} = {}   |sqrt(N)|z| - 1| = {:.1e}\n",
            i + 1,
            fmt_c(e.rho),
            e.modulus_deviation
        )?;
    }
    say!(
        out,
        "max circle deviation {:.3e} (tolerance {:e}): {}\n",
        v.report.max_deviation,
        v.report.tolerance,
        if v.passed() { "PASS" } else { "FAIL" }
    )?;
    let c = &v.certificate;
    say!(
        out,
        "sign certificate: {} ({} interior changes, wraparound root: {})\n",
        status_name(c.status),
        c.interior_changes,
        c.wraparound_root
    )?;
    match &v.equi {
        Ok(e) => say!(
            out,
            "equidistribution: max |arg - theta| = {:.3e}, phase constant C = {:.6}\n",
            e.max_deviation,
            e.phase_constant
        )?,
        Err(why) => say!(out, "equidistribution: {why}\n")?,
    }
    if let Some(m) = v.qf_margin {
        say!(out, "Q_f margin: {m:.6e}\n")?;
    }
    say!(
        out,
        "exceptional range of the estimates: {}\n",
        if v.in_exceptional_set { "inside" } else { "outside" }
    )?;
    Ok(())
}

pub struct VerifyArgs {
    pub source: String,
    pub options: VerifyOptions,
    pub report: Option<PathBuf>,
    pub format: Format,
}

pub fn verify_cmd(resolver: &Resolver<'_>, args: &VerifyArgs, out: &mut dyn Write) -> Result<Exit, CliError> {
    let start = Instant::now();
    let source = Source::parse(&args.source)?;
    let input = resolver.resolve(&source)?;
    let v = verify(&input, &args.options)?;
    print_summary(&v, out)?;
    let record = VerificationRecord::from_verification(&source.name(), &v);
    if let Some(path) = &args.report {
        let mut timings = BTreeMap::new();
        timings.insert(source.name(), start.elapsed().as_secs_f64() * 1e3);
        Report::new(vec![record], timings).write(path, args.format)?;
    }
    Ok(if v.passed() { Exit::Ok } else { Exit::Failed })
}

#[derive(Serialize)]
struct BoundsLine {
    parity: Parity,
    m: u32,
    weight: u32,
    minimal_level: u64,
}

pub fn bounds_cmd(parities: &[Parity], format: TextFormat, out: &mut dyn Write) -> Result<Exit, CliError> {
    let mut lines = Vec::new();
    for &p in parities {
        for row in bounds::exceptional_table(p)? {
            lines.push(BoundsLine {
                parity: p,
                m: row.m,
                weight: p.weight(row.m),
                minimal_level: row.minimal_level,
            });
        }
    }
    let weight5 = (parities.len() > 1)
        .then(|| bounds::weight5_threshold(WEIGHT5_EXPONENT))
        .transpose()?;
    match format {
        TextFormat::Text => {
            for &p in parities {
                let name = match p {
                    Parity::Even => "even weights, k = 2m + 2",
                    Parity::Odd => "odd weights, k = 2m + 3",
                };
                say!(out, "{name}\n{:>4} {:>8}\n", "m", "N(m)")?;
                for l in lines.iter().filter(|l| l.parity == p) {
                    say!(out, "{:>4} {:>8}\n", l.m, l.minimal_level)?;
                }
            }
            if let Some(n) = weight5 {
                say!(out, "k=5: N ≥ {n}\n")?;
            }
        }
        TextFormat::Json => {
            #[derive(Serialize)]
            struct Doc<'a> {
                rows: &'a [BoundsLine],
                weight5_threshold: Option<u64>,
            }
            let doc = Doc {
                rows: &lines,
                weight5_threshold: weight5,
            };
            say!(out, "{}\n", serde_json::to_string_pretty(&doc).expect("serializable"))?;
        }
        TextFormat::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            for l in &lines {
                w.serialize(l)?;
            }
            let bytes = w.into_inner().map_err(|e| CliError::Usage(e.to_string()))?;
            out.write_all(&bytes).map_err(CliError::io("<stdout>"))?;
            if let Some(n) = weight5 {
                say!(out, "# k=5: N ≥ {n}\n")?;
            }
        }
    }
    Ok(Exit::Ok)
}

#[derive(Serialize)]
struct EquiRow {
    root: usize,
    prediction: usize,
    predicted: f64,
    argument: f64,
    deviation: f64,
}

pub fn equi_cmd(resolver: &Resolver<'_>, source: &str, format: TextFormat, out: &mut dyn Write) -> Result<Exit, CliError> {
    let source = Source::parse(source)?;
    let v = verify(&resolver.resolve(&source)?, &VerifyOptions::default())?;
    let e = v.equi.as_ref().map_err(|why| CliError::Usage(why.clone()))?;
    let rows: Vec<EquiRow> = e
        .matches
        .iter()
        .map(|m| EquiRow {
            root: m.root_index + 1,
            prediction: m.prediction_index,
            predicted: m.predicted,
            argument: m.root_angle,
            deviation: m.deviation,
        })
        .collect();
    match format {
        TextFormat::Text => {
            say!(
                out,
                "{}  N = {}  k = {}  C = {:.12}\n",
                v.table.label(),
                v.table.level(),
                v.table.weight(),
                e.phase_constant
            )?;
            say!(out, "{:>4} {:>4} {:>18} {:>18} {:>12}\n", "root", "l", "prediction", "argument", "deviation")?;
            for r in &rows {
                say!(
                    out,
                    "{:>4} {:>4} {:>18.12} {:>18.12} {:>12.3e}\n",
                    r.root,
                    r.prediction,
                    r.predicted,
                    r.argument,
                    r.deviation
                )?;
            }
            say!(out, "max deviation {:.3e}, mean offset {:.3e}\n", e.max_deviation, e.mean_offset)?;
            if let Some(d) = e.antipodal_defect {
                say!(out, "|arg z1 - arg z2 - pi| = {d:.3e}\n")?;
            }
        }
        TextFormat::Json => {
            #[derive(Serialize)]
            struct Doc<'a> {
                label: &'a str,
                phase_constant: f64,
                rows: &'a [EquiRow],
                max_deviation: f64,
                antipodal_defect: Option<f64>,
            }
            let doc = Doc {
                label: v.table.label(),
                phase_constant: e.phase_constant,
                rows: &rows,
                max_deviation: e.max_deviation,
                antipodal_defect: e.antipodal_defect,
            };
            say!(out, "{}\n", serde_json::to_string_pretty(&doc).expect("serializable"))?;
        }
        TextFormat::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            for r in &rows {
                w.serialize(r)?;
            }
            let bytes = w.into_inner().map_err(|e| CliError::Usage(e.to_string()))?;
            out.write_all(&bytes).map_err(CliError::io("<stdout>"))?;
        }
    }
    Ok(Exit::Ok)
}

pub fn read_manifest(path: &Path) -> Result<Vec<String>, CliError> {
    let text = std::fs::read_to_string(path).map_err(CliError::io(path))?;
    let base = path.parent().unwrap_or(Path::new("."));
    Ok(text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|l| {
            let rel = base.join(l);
            if !Path::new(l).exists() && rel.exists() {
                rel.display().to_string()
            } else {
                l.to_string()
            }
        })
        .collect())
}

pub struct BatchArgs {
    pub manifest: PathBuf,
    pub jobs: usize,
    pub options: VerifyOptions,
    pub report: Option<PathBuf>,
    pub format: Format,
}

fn run_one(resolver: &Resolver<'_>, entry: &str, opts: &VerifyOptions) -> (VerificationRecord, f64) {
    let start = Instant::now();
    let result = Source::parse(entry)
        .and_then(|s| resolver.resolve(&s))
        .and_then(|input| verify(&input, opts));
    let record = match result {
        Ok(v) => VerificationRecord::from_verification(entry, &v),
        Err(e) => VerificationRecord::from_error(entry, opts.tolerance, &e),
    };
    (record, start.elapsed().as_secs_f64() * 1e3)
}

pub fn batch_report(resolver: &Resolver<'_>, entries: &[String], jobs: usize, opts: &VerifyOptions) -> Result<Report, CliError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let results: Vec<(VerificationRecord, f64)> =
        pool.install(|| entries.par_iter().map(|e| run_one(resolver, e, opts)).collect());
    let timings = results.iter().map(|(r, ms)| (r.source.clone(), *ms)).collect();
    Ok(Report::new(results.into_iter().map(|(r, _)| r).collect(), timings))
}

pub fn batch(resolver: &Resolver<'_>, args: &BatchArgs, out: &mut dyn Write) -> Result<Exit, CliError> {
    let entries = read_manifest(&args.manifest)?;
    let report = batch_report(resolver, &entries, args.jobs, &args.options)?;
    for r in &report.records {
        let detail = match (&r.error, r.max_circle_deviation) {
            (Some(e), _) => e.clone(),
            (None, Some(d)) => format!("max deviation {d:.3e}"),
            (None, None) => String::new(),
        };
        say!(out, "{:<5} {}  {}\n", format!("{:?}", r.outcome).to_lowercase(), r.source, detail)?;
    }
    let passed = report.records.iter().filter(|r| r.exit_code == 0).count();
    say!(out, "{passed}/{} passed\n", report.records.len())?;
    if let Some(path) = &args.report {
        report.write(path, args.format)?;
    }
    Ok(if passed == report.records.len() {
        Exit::Ok
    } else {
        Exit::Failed
    })
}

/// Coefficient file for every catalogue form, sized for the default budget.
pub fn corpus_descriptors() -> Result<Vec<NewformDescriptor>, CliError> {
    construct::catalogue()
        .into_iter()
        .map(|e| Ok((e.build)(required_coefficients(e.level, e.weight)?)?))
        .collect()
}

pub fn corpus(write_to: Option<&Path>, out: &mut dyn Write) -> Result<Exit, CliError> {
    let forms = corpus_descriptors()?;
    if let Some(dir) = write_to {
        std::fs::create_dir_all(dir).map_err(CliError::io(dir))?;
        for d in &forms {
            newform::save_to_file(d, dir.join(format!("{}.json", d.label())))?;
        }
        say!(out, "wrote {} coefficient files to {}\n", forms.len(), dir.display())?;
    } else {
        say!(out, "{:<20} {:>4} {:>3} {:>6}\n", "label", "N", "k", "terms")?;
        for d in &forms {
            say!(out, "{:<20} {:>4} {:>3} {:>6}\n", d.label(), d.level(), d.weight(), d.len())?;
        }
    }
    Ok(Exit::Ok)
}

pub fn purge(client: &LmfdbClient, older_than: Duration, out: &mut dyn Write) -> Result<Exit, CliError> {
    let n = client.purge_cache(older_than)?;
    say!(out, "removed {n} cache entries from {}\n", client.cache().dir().display())?;
    Ok(Exit::Ok)
}
