//! Exact q-expansions for a small catalogue of newforms: CM forms over
//! imaginary quadratic fields of class number one, eta quotients, level-one
//! eigenforms and a twist of Δ with complex coefficients.

use num_complex::Complex64;
use thiserror::Error;

use crate::newform::NewformDescriptor;

#[derive(Debug, Error)]
pub enum ConstructError {
    #[error("unsupported construction: {0}")]
    Unsupported(String),
    #[error("integer overflow while expanding coefficient {n}")]
    Overflow { n: usize },
}

type Series = Vec<i128>;

fn mul(a: &[i128], b: &[i128], len: usize) -> Result<Series, ConstructError> {
    let mut out = vec![0i128; len];
    for (i, &x) in a.iter().enumerate().take(len) {
        if x == 0 {
            continue;
        }
        for (j, &y) in b.iter().enumerate().take(len - i) {
            let p = x.checked_mul(y).ok_or(ConstructError::Overflow { n: i + j })?;
            out[i + j] = out[i + j].checked_add(p).ok_or(ConstructError::Overflow { n: i + j })?;
        }
    }
    Ok(out)
}

/// ∏_{n≥1} (1 − q^{dn})^e as a power series in q, truncated to `len` terms.
fn eta_power(d: usize, e: u32, len: usize) -> Result<Series, ConstructError> {
    let mut s = vec![0i128; len];
    s[0] = 1;
    let mut n = d;
    while n < len {
        for _ in 0..e {
            for i in (n..len).rev() {
                s[i] -= s[i - n];
            }
        }
        n += d;
    }
    Ok(s)
}

fn to_descriptor(
    label: &str,
    level: u64,
    weight: u32,
    nebentypus: &str,
    coeffs: impl IntoIterator<Item = i128>,
) -> NewformDescriptor {
    let coeffs: Vec<Complex64> = coeffs.into_iter().map(|c| Complex64::new(c as f64, 0.0)).collect();
    NewformDescriptor::new(label, level, weight, nebentypus, None, coeffs).expect("constructed forms are well formed")
}

/// η(d₁z)^{e₁} ⋯ η(d_r z)^{e_r} with Σ d_i e_i = 24, so the expansion starts at q.
pub fn eta_product(
    label: &str,
    level: u64,
    nebentypus: &str,
    factors: &[(usize, u32)],
    terms: usize,
) -> Result<NewformDescriptor, ConstructError> {
    let shift: usize = factors.iter().map(|&(d, e)| d * e as usize).sum();
    if shift != 24 || terms == 0 {
        return Err(ConstructError::Unsupported(format!(
            "eta product with q-order {shift}/24 (need exactly 1)"
        )));
    }
    let weight: u32 = factors.iter().map(|&(_, e)| e).sum::<u32>() / 2;
    let mut acc = vec![0i128; terms];
    acc[0] = 1;
    for &(d, e) in factors {
        acc = mul(&acc, &eta_power(d, e, terms)?, terms)?;
    }
    Ok(to_descriptor(label, level, weight, nebentypus, acc))
}

fn sigma(n: usize, p: u32) -> Result<i128, ConstructError> {
    let mut s: i128 = 0;
    for d in 1..=n {
        if n.is_multiple_of(d) {
            let t = (d as i128).checked_pow(p).ok_or(ConstructError::Overflow { n })?;
            s = s.checked_add(t).ok_or(ConstructError::Overflow { n })?;
        }
    }
    Ok(s)
}

/// Eisenstein series E_j = 1 + c_j Σ σ_{j-1}(n) q^n.
fn eisenstein(j: u32, len: usize) -> Result<Series, ConstructError> {
    let c: i128 = match j {
        4 => 240,
        6 => -504,
        8 => 480,
        10 => -264,
        14 => -24,
        _ => return Err(ConstructError::Unsupported(format!("Eisenstein series of weight {j}"))),
    };
    let mut s = vec![0i128; len];
    s[0] = 1;
    for (n, slot) in s.iter_mut().enumerate().skip(1) {
        *slot = c.checked_mul(sigma(n, j - 1)?).ok_or(ConstructError::Overflow { n })?;
    }
    Ok(s)
}

fn delta(terms: usize) -> Result<Series, ConstructError> {
    let mut s = vec![0i128; terms];
    let p = eta_power(1, 24, terms)?;
    s[1..].copy_from_slice(&p[..terms - 1]);
    Ok(s)
}

/// The unique normalised eigenform of level one and weight 12, 16, 18, 20, 22 or 26.
pub fn level_one(weight: u32, terms: usize) -> Result<NewformDescriptor, ConstructError> {
    let len = terms + 1;
    let base = delta(len)?;
    let series = match weight {
        12 => base,
        16 | 18 | 20 | 22 | 26 => mul(&base, &eisenstein(weight - 12, len)?, len)?,
        _ => {
            return Err(ConstructError::Unsupported(format!(
                "level one weight {weight} (cusp space not one-dimensional)"
            )))
        }
    };
    Ok(to_descriptor(
        &format!("1.{weight}.a.a"),
        1,
        weight,
        "1.a",
        series.into_iter().skip(1),
    ))
}

/// Δ twisted by the quartic character mod 5 with ψ(2) = i; level 25, complex coefficients.
pub fn delta_twist(terms: usize) -> Result<NewformDescriptor, ConstructError> {
    let base = delta(terms + 1)?;
    let psi = [
        Complex64::new(0.0, 0.0),
        Complex64::new(1.0, 0.0),
        Complex64::new(0.0, 1.0),
        Complex64::new(0.0, -1.0),
        Complex64::new(-1.0, 0.0),
    ];
    let coeffs = (1..=terms).map(|n| psi[n % 5] * base[n] as f64).collect();
    Ok(NewformDescriptor::new("local.25.12.twist", 25, 12, "local.25.psi2", None, coeffs)
        .expect("constructed forms are well formed"))
}

struct QuadraticOrder {
    disc: i64,
    units: usize,
}

impl QuadraticOrder {
    fn new(disc: i64) -> Result<Self, ConstructError> {
        let units = match disc {
            -3 => 6,
            -4 => 4,
            -7 | -8 | -11 | -19 | -43 | -67 | -163 => 2,
            _ => {
                return Err(ConstructError::Unsupported(format!(
                    "discriminant {disc} (class number one fields only)"
                )))
            }
        };
        Ok(Self { disc, units })
    }

    /// Norm of x + yω, where ω = √(D/4) for D ≡ 0 mod 4 and (1+√D)/2 otherwise.
    fn norm(&self, x: i64, y: i64) -> i64 {
        if self.disc % 4 == 0 {
            x * x - self.disc / 4 * y * y
        } else {
            x * x + x * y + (1 - self.disc) / 4 * y * y
        }
    }

    /// (tr, nm) with ω² = tr·ω − nm.
    fn omega_relation(&self) -> (i128, i128) {
        if self.disc % 4 == 0 {
            (0, (-self.disc / 4) as i128)
        } else {
            (1, ((1 - self.disc) / 4) as i128)
        }
    }

    fn omega(&self) -> Complex64 {
        let r = (-self.disc as f64).sqrt();
        if self.disc % 4 == 0 {
            Complex64::new(0.0, r / 2.0)
        } else {
            Complex64::new(0.5, r / 2.0)
        }
    }
}

/// (x + yω)^p exactly in Z[ω], returned as the pair (u, v) with value u + vω.
fn power_exact(x: i128, y: i128, p: u32, tr: i128, nm: i128) -> Option<(i128, i128)> {
    let (mut u, mut v) = (1i128, 0i128);
    for _ in 0..p {
        // (u + vω)(x + yω) = ux + (uy + vx)ω + vy ω²
        let vy = v.checked_mul(y)?;
        let nu = u.checked_mul(x)?.checked_sub(vy.checked_mul(nm)?)?;
        let nv = u.checked_mul(y)?.checked_add(v.checked_mul(x)?)?.checked_add(vy.checked_mul(tr)?)?;
        u = nu;
        v = nv;
    }
    Some((u, v))
}

/// The CM newform attached to the Hecke character (α) ↦ α^{k−1} of a class
/// number one field; requires the character to be trivial on units.
pub fn cm_form(disc: i64, weight: u32, terms: usize) -> Result<NewformDescriptor, ConstructError> {
    let order = QuadraticOrder::new(disc)?;
    let p = weight - 1;
    if weight < 3 || !(p as usize).is_multiple_of(order.units) {
        return Err(ConstructError::Unsupported(format!(
            "weight {weight} over discriminant {disc}: α^(k-1) is not trivial on units"
        )));
    }
    let (tr, nm) = order.omega_relation();
    let omega = order.omega();
    let bound = (terms as f64).sqrt().ceil() as i64 * 2 + 2;
    let mut exact = vec![Some(0i128); terms + 1];
    let mut approx = vec![0.0f64; terms + 1];
    for x in -bound..=bound {
        for y in -bound..=bound {
            let n = order.norm(x, y);
            if n <= 0 || n as usize > terms {
                continue;
            }
            let n = n as usize;
            let z = Complex64::new(x as f64, 0.0) + omega * y as f64;
            approx[n] += z.powu(p).re;
            exact[n] = match (exact[n], power_exact(x as i128, y as i128, p, tr, nm)) {
                // the imaginary parts cancel over conjugate pairs; the real part of u + vω is u + v·Re ω
                (Some(acc), Some((u, v))) => {
                    let twice_re = if tr == 0 { u.checked_mul(2) } else { u.checked_mul(2).and_then(|a| a.checked_add(v)) };
                    twice_re.and_then(|t| acc.checked_add(t))
                }
                _ => None,
            };
        }
    }
    let units = order.units as f64;
    let coeffs: Vec<Complex64> = (1..=terms)
        .map(|n| match exact[n] {
            Some(twice) => Complex64::new(twice as f64 / (2.0 * units), 0.0),
            None => Complex64::new(approx[n] / units, 0.0),
        })
        .collect();
    let level = (-disc) as u64;
    let label = match (disc, weight) {
        (-11, 7) => "11.7.b.a".to_string(),
        _ => format!("local.{level}.{weight}.cm"),
    };
    Ok(NewformDescriptor::new(label, level, weight, format!("{level}.b"), None, coeffs)
        .expect("constructed forms are well formed"))
}

/// The weight 7 CM form of level 11 used throughout the test-suite.
pub fn golden_weight7_level11(terms: usize) -> NewformDescriptor {
    cm_form(-11, 7, terms).expect("supported construction")
}

type Builder = fn(usize) -> Result<NewformDescriptor, ConstructError>;

/// A named member of the built-in catalogue.
#[derive(Clone, Copy)]
pub struct CatalogueEntry {
    pub label: &'static str,
    pub level: u64,
    pub weight: u32,
    pub build: Builder,
}

macro_rules! entry {
    ($label:expr, $level:expr, $weight:expr, $build:expr) => {
        CatalogueEntry {
            label: $label,
            level: $level,
            weight: $weight,
            build: $build,
        }
    };
}

pub fn catalogue() -> Vec<CatalogueEntry> {
    vec![
        entry!("11.7.b.a", 11, 7, |m| cm_form(-11, 7, m)),
        entry!("1.12.a.a", 1, 12, |m| level_one(12, m)),
        entry!("1.16.a.a", 1, 16, |m| level_one(16, m)),
        entry!("1.18.a.a", 1, 18, |m| level_one(18, m)),
        entry!("1.20.a.a", 1, 20, |m| level_one(20, m)),
        entry!("1.22.a.a", 1, 22, |m| level_one(22, m)),
        entry!("1.26.a.a", 1, 26, |m| level_one(26, m)),
        entry!("2.8.a.a", 2, 8, |m| eta_product("2.8.a.a", 2, "2.a", &[(1, 8), (2, 8)], m)),
        entry!("3.6.a.a", 3, 6, |m| eta_product("3.6.a.a", 3, "3.a", &[(1, 6), (3, 6)], m)),
        entry!("4.6.a.a", 4, 6, |m| eta_product("4.6.a.a", 4, "4.a", &[(2, 12)], m)),
        entry!("5.4.a.a", 5, 4, |m| eta_product("5.4.a.a", 5, "5.a", &[(1, 4), (5, 4)], m)),
        entry!("6.4.a.a", 6, 4, |m| {
            eta_product("6.4.a.a", 6, "6.a", &[(1, 2), (2, 2), (3, 2), (6, 2)], m)
        }),
        entry!("8.4.a.a", 8, 4, |m| eta_product("8.4.a.a", 8, "8.a", &[(2, 4), (4, 4)], m)),
        entry!("9.4.a.a", 9, 4, |m| eta_product("9.4.a.a", 9, "9.a", &[(3, 8)], m)),
        entry!("7.3.b.a", 7, 3, |m| eta_product("7.3.b.a", 7, "7.b", &[(1, 3), (7, 3)], m)),
        entry!("4.5.b.a", 4, 5, |m| eta_product("4.5.b.a", 4, "4.b", &[(1, 4), (2, 2), (4, 4)], m)),
        entry!("local.25.12.twist", 25, 12, delta_twist),
        entry!("local.3.7.cm", 3, 7, |m| cm_form(-3, 7, m)),
        entry!("local.3.13.cm", 3, 13, |m| cm_form(-3, 13, m)),
        entry!("local.3.25.cm", 3, 25, |m| cm_form(-3, 25, m)),
        entry!("local.4.9.cm", 4, 9, |m| cm_form(-4, 9, m)),
        entry!("local.4.21.cm", 4, 21, |m| cm_form(-4, 21, m)),
        entry!("local.7.5.cm", 7, 5, |m| cm_form(-7, 5, m)),
        entry!("local.7.21.cm", 7, 21, |m| cm_form(-7, 21, m)),
        entry!("local.8.7.cm", 8, 7, |m| cm_form(-8, 7, m)),
        entry!("local.11.29.cm", 11, 29, |m| cm_form(-11, 29, m)),
        entry!("local.19.9.cm", 19, 9, |m| cm_form(-19, 9, m)),
        entry!("local.19.25.cm", 19, 25, |m| cm_form(-19, 25, m)),
        entry!("local.43.23.cm", 43, 23, |m| cm_form(-43, 23, m)),
        entry!("local.67.21.cm", 67, 21, |m| cm_form(-67, 21, m)),
        entry!("local.163.5.cm", 163, 5, |m| cm_form(-163, 5, m)),
        entry!("local.163.21.cm", 163, 21, |m| cm_form(-163, 21, m)),
    ]
}

pub fn by_label(label: &str, terms: usize) -> Option<Result<NewformDescriptor, ConstructError>> {
    catalogue()
        .into_iter()
        .find(|e| e.label == label)
        .map(|e| (e.build)(terms))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn re(d: &NewformDescriptor, n: usize) -> f64 {
        d.coefficient(n).re
    }

    #[test]
    fn ramanujan_tau() {
        let d = level_one(12, 12).unwrap();
        let tau = [1.0, -24.0, 252.0, -1472.0, 4830.0, -6048.0, -16744.0, 84480.0, -113643.0];
        for (n, t) in tau.iter().enumerate() {
            assert_eq!(re(&d, n + 1), *t);
        }
    }

    #[test]
    fn weight16_level1() {
        let d = level_one(16, 5).unwrap();
        assert_eq!(re(&d, 2), 216.0);
        assert_eq!(re(&d, 3), -3348.0);
    }

    #[test]
    fn golden_head() {
        let d = golden_weight7_level11(11);
        let want = [1.0, 0.0, 10.0, 64.0, 74.0, 0.0, 0.0, 0.0, -629.0, 0.0, -1331.0];
        for (n, w) in want.iter().enumerate() {
            assert_eq!(re(&d, n + 1), *w, "n = {}", n + 1);
        }
        assert_eq!(d.label(), "11.7.b.a");
    }

    #[test]
    fn eta_heads() {
        let d = eta_product("5.4.a.a", 5, "5.a", &[(1, 4), (5, 4)], 6).unwrap();
        assert_eq!(d.weight(), 4);
        let want = [1.0, -4.0, 2.0, 8.0, -5.0, -8.0];
        for (n, w) in want.iter().enumerate() {
            assert_eq!(re(&d, n + 1), *w);
        }
        let d = eta_product("7.3.b.a", 7, "7.b", &[(1, 3), (7, 3)], 5).unwrap();
        assert_eq!(re(&d, 2), -3.0);
        assert_eq!(re(&d, 4), 5.0);
        assert!(eta_product("x", 1, "1.a", &[(1, 12)], 5).is_err());
    }

    #[test]
    fn cm_multiplicativity() {
        let d = cm_form(-4, 9, 60).unwrap();
        for (m, n) in [(2usize, 5usize), (3, 7), (4, 9), (5, 11)] {
            assert!((re(&d, m * n) - re(&d, m) * re(&d, n)).abs() < 1e-6 * re(&d, m * n).abs().max(1.0));
        }
        // inert primes vanish
        assert_eq!(re(&d, 3), 0.0);
        assert_eq!(re(&d, 7), 0.0);
    }

    #[test]
    fn twist_is_not_self_dual() {
        let d = delta_twist(6).unwrap();
        assert_eq!(d.coefficient(2), Complex64::new(0.0, -24.0));
        assert_eq!(d.coefficient(5), Complex64::new(0.0, 0.0));
        assert!(!d.is_self_dual());
    }

    #[test]
    fn unsupported() {
        assert!(cm_form(-15, 7, 5).is_err());
        assert!(cm_form(-4, 7, 5).is_err());
        assert!(level_one(14, 5).is_err());
        assert!(by_label("nope", 5).is_none());
        assert!(by_label("9.4.a.a", 5).unwrap().is_ok());
    }
}
