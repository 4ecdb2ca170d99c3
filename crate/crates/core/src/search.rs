//! One-dimensional maximisation shared by the solver and the oracle.

use crate::scalar::Scalar;

/// Golden-section maximisation of `f` on `[lo, hi]` until the bracket is
/// narrower than `tol`. Returns the best point evaluated and its value.
///
/// Non-finite values (e.g. `-inf` for infeasible candidates) are simply
/// worse than any finite one.
pub fn golden_section_max<T: Scalar, F: FnMut(T) -> T>(mut f: F, lo: T, hi: T, tol: T) -> (T, T) {
    let inv_phi = T::lit((5.0_f64.sqrt() - 1.0) / 2.0);
    let (mut a, mut b) = if lo <= hi { (lo, hi) } else { (hi, lo) };
    let mut x1 = b - inv_phi * (b - a);
    let mut x2 = a + inv_phi * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    let mut best = if f2 > f1 { (x2, f2) } else { (x1, f1) };
    let tol = tol.max(T::epsilon() * (a.abs() + b.abs()));
    for _ in 0..200 {
        if b - a <= tol {
            break;
        }
        if f1 >= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = f(x1);
            if f1 > best.1 {
                best = (x1, f1);
            }
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = f(x2);
            if f2 > best.1 {
                best = (x2, f2);
            }
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_parabola_peak() {
        let (x, fx) = golden_section_max(|x: f64| -(x - 0.3).powi(2) + 2.0, 0.0, 1.0, 1e-10);
        assert!((x - 0.3).abs() < 1e-8);
        assert!((fx - 2.0).abs() < 1e-15);
    }

    #[test]
    fn boundary_peak() {
        let (x, _) = golden_section_max(|x: f64| x, 0.0, 1.0, 1e-10);
        assert!(x > 1.0 - 1e-9);
    }

    #[test]
    fn skips_infeasible_region() {
        let f = |x: f64| if x < 0.5 { f64::NEG_INFINITY } else { -(x - 0.7).powi(2) };
        let (x, _) = golden_section_max(f, 0.0, 1.0, 1e-10);
        assert!((x - 0.7).abs() < 1e-7);
    }
}
