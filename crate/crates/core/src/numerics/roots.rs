use crate::error::{EahmError, Result};

const MAX_ITERATIONS: usize = 400;

/// Root of a monotone function bracketed by `[lo, hi]`.
///
/// Illinois-modified regula falsi; when a secant step fails to halve the
/// bracket the next step is a plain bisection. Stops when `|f(x)| <= tol`
/// or the bracket is narrower than `tol`.
pub fn root_find_monotone<F>(f: F, lo: f64, hi: f64, tol: f64) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    if !(lo <= hi) {
        return Err(EahmError::Precondition(format!(
            "root bracket [{lo}, {hi}] is reversed"
        )));
    }
    let mut a = lo;
    let mut b = hi;
    let mut fa = f(a);
    let mut fb = f(b);
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() || fa.is_nan() || fb.is_nan() {
        return Err(EahmError::NoBracket {
            lo,
            hi,
            f_lo: fa,
            f_hi: fb,
        });
    }

    // Which end was retained last: -1 for a, +1 for b.
    let mut side = 0i8;
    let mut force_bisect = false;
    for _ in 0..MAX_ITERATIONS {
        let width = b - a;
        let x = if force_bisect {
            0.5 * (a + b)
        } else {
            let s = b - fb * (b - a) / (fb - fa);
            if s > a && s < b {
                s
            } else {
                0.5 * (a + b)
            }
        };
        let fx = f(x);
        if fx.abs() <= tol || width <= tol {
            return Ok(x);
        }
        if fx.signum() == fa.signum() {
            a = x;
            fa = fx;
            if side == -1 {
                fb *= 0.5;
            }
            side = -1;
        } else {
            b = x;
            fb = fx;
            if side == 1 {
                fa *= 0.5;
            }
            side = 1;
        }
        force_bisect = !force_bisect && (b - a) > 0.5 * width;
        if b - a <= tol {
            return Ok(0.5 * (a + b));
        }
    }
    Ok(0.5 * (a + b))
}
