//! Independent reference computations shared by the integration suites.
//!
//! Nothing here calls into the library's numerical code paths; the oracles
//! are written from first principles so that agreement is meaningful.

#![allow(dead_code)]

use std::f64::consts::PI;

use num_complex::Complex64;
use ocsnspd::optics::{ComplexIndex, Layer, Stack};

/// Adaptive Simpson quadrature with Richardson correction.
pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    #[allow(clippy::too_many_arguments)]
    fn recurse(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        recurse(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) + recurse(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    recurse(f, a, b, fa, fm, fb, whole, tol, 40)
}

/// Normalized Gaussian intensity `2/(πω²)·exp(−2ρ²/ω²)`.
fn intensity(w: f64, x: f64, y: f64) -> f64 {
    2.0 / (PI * w * w) * (-2.0 * (x * x + y * y) / (w * w)).exp()
}

/// Power of a unit Gaussian beam inside a centered disk, by nested 2-D
/// quadrature in polar coordinates.
pub fn disk_power_quadrature(w: f64, radius: f64) -> f64 {
    let radial = |theta: f64| {
        let (c, s) = (theta.cos(), theta.sin());
        adaptive_simpson(&|r: f64| intensity(w, r * c, r * s) * r, 0.0, radius, 1e-13)
    };
    adaptive_simpson(&radial, 0.0, 2.0 * PI, 1e-12)
}

/// Power inside a centered square, by nested 2-D quadrature in x and y.
pub fn square_power_quadrature(w: f64, side: f64) -> f64 {
    let h = 0.5 * side;
    let column = |x: f64| adaptive_simpson(&|y: f64| intensity(w, x, y), -h, h, 1e-13);
    adaptive_simpson(&column, -h, h, 1e-12)
}

/// Reflectance of a single film between two lossless half-spaces, from the
/// Airy summation of multiple reflections.
pub fn airy_single_film_reflectance(n0: f64, n1: Complex64, n2: f64, d_nm: f64, wl_nm: f64) -> f64 {
    let n0c = Complex64::from(n0);
    let n2c = Complex64::from(n2);
    let r01 = (n0c - n1) / (n0c + n1);
    let r12 = (n1 - n2c) / (n1 + n2c);
    let phase = Complex64::new(0.0, 4.0 * PI * d_nm / wl_nm) * n1;
    let e = phase.exp();
    let r = (r01 + r12 * e) / (Complex64::from(1.0) + r01 * r12 * e);
    r.norm_sqr()
}

pub fn lossless(n: f64) -> ComplexIndex {
    ComplexIndex::lossless(n)
}

/// The rear-illuminated cavity device: substrate half-space, nanowire film,
/// spacer, mirror, vacuum.
pub fn cavity_stack(nbn: ComplexIndex, sio: ComplexIndex, au: ComplexIndex, sio_nm: f64) -> Stack {
    Stack::new(
        lossless(1.7),
        vec![Layer::new("NbN", 4.0, nbn).unwrap(), Layer::new("SiO", sio_nm, sio).unwrap(), Layer::new("Au", 100.0, au).unwrap()],
        lossless(1.0),
    )
}

/// Shipped default materials, resolved (NbN fitted).
pub fn default_materials() -> ocsnspd::config::MaterialTable {
    ocsnspd::config::RunConfig::default().resolve().unwrap().materials
}

/// Exhaustive scan on a uniform grid; returns the first maximizer.
pub fn brute_force_max(f: impl Fn(f64) -> f64, lo: f64, hi: f64, step: f64) -> (f64, f64) {
    let n = ((hi - lo) / step).round() as usize;
    (0..=n)
        .map(|i| lo + i as f64 * step)
        .map(|x| (x, f(x)))
        .fold((f64::NAN, f64::NEG_INFINITY), |best, (x, v)| if v > best.1 { (x, v) } else { best })
}
