//! Period integral ∫_0^{i∞} f(y)(y − z)^{k−2} dy by double-exponential quadrature
//! along the imaginary axis, with f(it) for t < 1/√N taken from the involution
//! f(it) = ε (t√N)^{−k} f̄(i/(Nt)).

use num_complex::Complex64;
use periodpoly_core::newform::{self, conjugate, NewformDescriptor};
use periodpoly_core::specfun::PrecisionBudget;

fn f_on_axis(d: &NewformDescriptor, dual: &NewformDescriptor, eps: Complex64, t: f64) -> Complex64 {
    let budget = PrecisionBudget::new(1e-300, 1e-15).expect("positive targets");
    let sqrt_n = (d.level() as f64).sqrt();
    if t * sqrt_n >= 1.0 {
        newform::eval_cusp_form(d, t, &budget).expect("q-expansion converges").value
    } else {
        let u = 1.0 / (d.level() as f64 * t);
        let g = newform::eval_cusp_form(dual, u, &budget).expect("q-expansion converges").value;
        if g == Complex64::new(0.0, 0.0) {
            return g;
        }
        eps * g * (t * sqrt_n).powi(-(d.weight() as i32))
    }
}

fn integrate_complex(g: impl Fn(f64) -> Complex64, a: f64, b: f64, tol: f64) -> Complex64 {
    let re = quadrature::integrate(|t| g(t).re, a, b, tol).integral;
    let im = quadrature::integrate(|t| g(t).im, a, b, tol).integral;
    Complex64::new(re, im)
}

/// The integral for `d` at `z`, given its root number. `tol` is absolute per piece.
pub fn period_integral(d: &NewformDescriptor, eps: Complex64, z: Complex64, tol: f64) -> Complex64 {
    let dual = conjugate(d);
    let k = d.weight() as i32;
    let sqrt_n = (d.level() as f64).sqrt();
    let integrand = |t: f64| {
        if t <= 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        let y = Complex64::new(0.0, t);
        f_on_axis(d, &dual, eps, t) * (y - z).powi(k - 2) * Complex64::i()
    };
    // f(it) decays like e^{−2πt}; past t = 40/√N + 8 the remainder is far below tol
    let edges = [0.0, 0.25 / sqrt_n, 1.0 / sqrt_n, 2.0 / sqrt_n, 8.0 + 40.0 / sqrt_n];
    edges
        .windows(2)
        .map(|w| integrate_complex(integrand, w[0], w[1], tol))
        .sum()
}
