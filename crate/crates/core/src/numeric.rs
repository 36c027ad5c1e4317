//! Small one-dimensional search primitives shared by the calibration fit and
//! the thickness optimizer.

/// Inverse golden ratio, (√5 − 1)/2.
pub(crate) const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Golden-section maximization of `f` on `[lo, hi]`.
///
/// Every probe is passed to `observe` in evaluation order. Returns the best
/// probe seen. Stops once the bracket is narrower than `tol`.
pub(crate) fn golden_section_max<F, O>(mut f: F, lo: f64, hi: f64, tol: f64, mut observe: O) -> Result<(f64, f64), (f64, f64)>
where
    F: FnMut(f64) -> f64,
    O: FnMut(f64, f64),
{
    let (mut a, mut b) = (lo, hi);
    let mut eval = |x: f64| -> Result<f64, (f64, f64)> {
        let v = f(x);
        observe(x, v);
        if v.is_finite() {
            Ok(v)
        } else {
            Err((x, v))
        }
    };

    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = eval(c)?;
    let mut fd = eval(d)?;
    let mut best = if fd > fc { (d, fd) } else { (c, fc) };

    // 200 iterations shrink any finite bracket below f64 resolution.
    for _ in 0..200 {
        if (b - a).abs() <= tol {
            break;
        }
        // Ties move towards the lower end.
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = eval(c)?;
            if fc > best.1 || (fc == best.1 && c < best.0) {
                best = (c, fc);
            }
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = eval(d)?;
            if fd > best.1 || (fd == best.1 && d < best.0) {
                best = (d, fd);
            }
        }
    }
    Ok(best)
}

/// Bisection for an increasing function crossing `target` on `[lo, hi]`.
pub(crate) fn bisect_increasing<F>(mut f: F, target: f64, mut lo: f64, mut hi: f64, tol: f64) -> f64
where
    F: FnMut(f64) -> f64,
{
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if f(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}
