//! Truncated complex power series.

use crate::dynamics::C64;

/// Coefficients of u⁰, u¹, … up to a fixed order.
pub type Series = Vec<C64>;

pub fn zero(order: usize) -> Series {
    vec![C64::new(0.0, 0.0); order + 1]
}

pub fn mul(a: &[C64], b: &[C64], order: usize) -> Series {
    let mut out = zero(order);
    for (i, x) in a.iter().enumerate().take(order + 1) {
        if x.norm() == 0.0 {
            continue;
        }
        for (j, y) in b.iter().enumerate().take(order + 1 - i) {
            out[i + j] += x * y;
        }
    }
    out
}

/// Taylor series of f_c^n about `p`, minus f_c^n(p), in powers of u = z − p.
pub fn iterate_series(c: C64, p: C64, n: usize, order: usize) -> Series {
    let mut s = zero(order);
    s[0] = p;
    if order >= 1 {
        s[1] = C64::new(1.0, 0.0);
    }
    for _ in 0..n {
        s = mul(&s, &s, order);
        s[0] += c;
    }
    s[0] = C64::new(0.0, 0.0);
    s
}

/// log(1 + x) for a series with x(0) = 0.
pub fn log1p(x: &[C64], order: usize) -> Series {
    debug_assert!(x[0].norm() == 0.0);
    let mut out = zero(order);
    let mut pw = zero(order);
    pw[0] = C64::new(1.0, 0.0);
    for k in 1..=order {
        pw = mul(&pw, x, order);
        let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
        for i in 0..=order {
            out[i] += pw[i] * (sign / k as f64);
        }
    }
    out
}

/// exp(x) for a series with x(0) = 0.
pub fn exp0(x: &[C64], order: usize) -> Series {
    debug_assert!(x[0].norm() == 0.0);
    let mut out = zero(order);
    out[0] = C64::new(1.0, 0.0);
    let mut term = out.clone();
    for k in 1..=order {
        term = mul(&term, x, order);
        for t in term.iter_mut() {
            *t /= k as f64;
        }
        for i in 0..=order {
            out[i] += term[i];
        }
    }
    out
}

/// V^s for V(0) = 1 and real exponent s.
pub fn pow1(v: &[C64], s: f64, order: usize) -> Series {
    let mut x = v.to_vec();
    x.resize(order + 1, C64::new(0.0, 0.0));
    x[0] = C64::new(0.0, 0.0);
    let l = log1p(&x, order);
    let scaled: Series = l.iter().map(|c| c * s).collect();
    exp0(&scaled, order)
}

/// Horner evaluation of Σ a_k u^k and its derivative.
pub fn eval(a: &[C64], u: C64) -> (C64, C64) {
    let mut v = C64::new(0.0, 0.0);
    let mut d = C64::new(0.0, 0.0);
    for c in a.iter().rev() {
        d = d * u + v;
        v = v * u + c;
    }
    (v, d)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cx(r: f64, i: f64) -> C64 {
        C64::new(r, i)
    }

    #[test]
    fn iterate_series_matches_direct_evaluation() {
        let c = cx(-0.12, 0.75);
        let p = cx(0.1, 0.2);
        let s = iterate_series(c, p, 3, 8);
        let f3 = |z: C64| {
            let mut w = z;
            for _ in 0..3 {
                w = w * w + c;
            }
            w
        };
        let u = cx(1e-3, -2e-3);
        let (v, _) = eval(&s, u);
        assert!((v - (f3(p + u) - f3(p))).norm() < 1e-15);
    }

    #[test]
    fn pow_of_geometric_series() {
        // (1 − u)^{-1} = Σ u^k and (1 − u)^{1/2} squared is 1 − u.
        let v = vec![cx(1.0, 0.0), cx(-1.0, 0.0)];
        let inv = pow1(&v, -1.0, 10);
        for c in &inv {
            assert!((c - cx(1.0, 0.0)).norm() < 1e-13);
        }
        let h = pow1(&v, 0.5, 10);
        let sq = mul(&h, &h, 10);
        assert!((sq[0] - cx(1.0, 0.0)).norm() < 1e-14);
        assert!((sq[1] - cx(-1.0, 0.0)).norm() < 1e-14);
        for c in &sq[2..] {
            assert!(c.norm() < 1e-13);
        }
    }

    #[test]
    fn eval_derivative() {
        let a = vec![cx(1.0, 0.0), cx(2.0, 0.0), cx(3.0, 1.0)];
        let (v, d) = eval(&a, cx(0.5, 0.5));
        let u = cx(0.5, 0.5);
        assert!((v - (a[0] + a[1] * u + a[2] * u * u)).norm() < 1e-15);
        assert!((d - (a[1] + 2.0 * a[2] * u)).norm() < 1e-15);
    }
}
