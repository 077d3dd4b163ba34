use super::OdeError;

pub const BRENT_X_TOL: f64 = 1e-12;
pub const BRENT_MAX_EVALUATIONS: usize = 200;

#[derive(Debug, Clone, PartialEq)]
pub struct BrentResult {
    pub root: f64,
    pub evaluations: usize,
    /// Abscissae at which `fn` was evaluated, in order.
    pub iterates: Vec<f64>,
}

/// Brent's zeroin on `[lo, hi]`. The iterate sequence depends only on sign
/// patterns and ratios of function values, so it is unchanged under positive
/// rescaling of `f`.
pub fn brent_root(
    mut f: impl FnMut(f64) -> f64,
    lo: f64,
    hi: f64,
    x_tol: f64,
    max_evaluations: usize,
) -> Result<BrentResult, OdeError> {
    let mut iterates = vec![lo, hi];
    let (mut a, mut b) = (lo, hi);
    let (mut fa, mut fb) = (f(a), f(b));
    if fa == 0.0 {
        return Ok(BrentResult {
            root: a,
            evaluations: 2,
            iterates,
        });
    }
    if fb == 0.0 {
        return Ok(BrentResult {
            root: b,
            evaluations: 2,
            iterates,
        });
    }
    if fa.is_nan() || fb.is_nan() || fa.signum() == fb.signum() {
        return Err(OdeError::NoSignChange {
            lo,
            hi,
            f_lo: fa,
            f_hi: fb,
        });
    }
    let (mut c, mut fc) = (b, fb);
    let (mut d, mut e) = (b - a, b - a);
    let mut evaluations = 2;
    loop {
        if fb.signum() == fc.signum() {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol1 = 2.0 * f64::EPSILON * b.abs() + 0.5 * x_tol;
        let xm = 0.5 * (c - b);
        if xm.abs() <= tol1 || fb == 0.0 {
            return Ok(BrentResult {
                root: b,
                evaluations,
                iterates,
            });
        }
        if evaluations >= max_evaluations {
            return Err(OdeError::MaxEvaluations {
                evaluations,
                best: b,
            });
        }
        if e.abs() >= tol1 && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * xm * s;
                q = 1.0 - s;
            } else {
                let qq = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * xm * qq * (qq - r) - (b - a) * (r - 1.0));
                q = (qq - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            } else {
                p = -p;
            }
            if 2.0 * p < (3.0 * xm * q - (tol1 * q).abs()).min((e * q).abs()) {
                e = d;
                d = p / q;
            } else {
                d = xm;
                e = d;
            }
        } else {
            d = xm;
            e = d;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol1 { d } else { tol1.copysign(xm) };
        fb = f(b);
        evaluations += 1;
        iterates.push(b);
    }
}

/// Plain bisection to absolute width `x_tol`; `f(lo)` and `f(hi)` must
/// differ in sign.
pub fn bisect(
    mut f: impl FnMut(f64) -> f64,
    mut lo: f64,
    mut hi: f64,
    x_tol: f64,
) -> Result<f64, OdeError> {
    let mut flo = f(lo);
    let fhi = f(hi);
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if flo.signum() == fhi.signum() {
        return Err(OdeError::NoSignChange {
            lo,
            hi,
            f_lo: flo,
            f_hi: fhi,
        });
    }
    for _ in 0..200 {
        if (hi - lo).abs() <= x_tol {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        if fm == 0.0 {
            return Ok(mid);
        }
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}
