//! Extended-precision reference values used by the integration tests.
//!
//! The ascending series is summed in binary fixed point with a few hundred
//! fraction bits, so cancellation between large terms never reaches the
//! digits that are compared against the library.

#![allow(dead_code)]

use num_bigint::BigInt;
use num_complex::Complex64;
use num_traits::{One, Signed, ToPrimitive, Zero};

const FRAC: u64 = 640;

#[derive(Clone, Debug)]
struct Fx {
    re: BigInt,
    im: BigInt,
}

fn fx_from_f64(x: f64) -> BigInt {
    if x == 0.0 {
        return BigInt::zero();
    }
    let bits = x.abs().to_bits();
    let exp = ((bits >> 52) & 0x7ff) as i64;
    let mant = if exp == 0 {
        (bits & ((1u64 << 52) - 1)) << 1
    } else {
        (bits & ((1u64 << 52) - 1)) | (1u64 << 52)
    };
    let shift = exp - 1075 + FRAC as i64;
    let m = BigInt::from(mant);
    let v = if shift >= 0 { m << (shift as u64) } else { m >> ((-shift) as u64) };
    if x < 0.0 {
        -v
    } else {
        v
    }
}

fn fx_to_f64(v: &BigInt) -> f64 {
    // Keep the top 64 bits, then scale.
    let bits = v.bits();
    if bits == 0 {
        return 0.0;
    }
    let drop = bits.saturating_sub(64);
    let top = (v.abs() >> drop).to_f64().unwrap();
    let val = top * 2f64.powi(drop as i32 - FRAC as i32);
    if v.is_negative() {
        -val
    } else {
        val
    }
}

impl Fx {
    fn from_c(z: Complex64) -> Self {
        Fx { re: fx_from_f64(z.re), im: fx_from_f64(z.im) }
    }
    fn one() -> Self {
        Fx { re: BigInt::one() << FRAC, im: BigInt::zero() }
    }
    fn mul(&self, o: &Fx) -> Fx {
        Fx {
            re: (&self.re * &o.re - &self.im * &o.im) >> FRAC,
            im: (&self.re * &o.im + &self.im * &o.re) >> FRAC,
        }
    }
    fn div_int(&self, n: u64) -> Fx {
        Fx { re: &self.re / n, im: &self.im / n }
    }
    fn mul_int(&self, n: i64) -> Fx {
        Fx { re: &self.re * n, im: &self.im * n }
    }
    fn add(&self, o: &Fx) -> Fx {
        Fx { re: &self.re + &o.re, im: &self.im + &o.im }
    }
    fn to_c(&self) -> Complex64 {
        Complex64::new(fx_to_f64(&self.re), fx_to_f64(&self.im))
    }
    fn is_negligible(&self) -> bool {
        self.re.bits() < 8 && self.im.bits() < 8
    }
}

/// `J_k(w) = mantissa * exp(log_scale)`, summed in extended precision.
pub fn oracle_j(k: u32, w: Complex64) -> (Complex64, f64) {
    if w == Complex64::new(0.0, 0.0) {
        return if k == 0 { (Complex64::new(1.0, 0.0), 0.0) } else { (Complex64::new(0.0, 0.0), 0.0) };
    }
    let q = Fx::from_c(-0.25 * w * w);
    let mut t = Fx::one();
    let mut sum = t.clone();
    let mut m: u64 = 0;
    loop {
        m += 1;
        t = t.mul(&q).div_int(m * (m + k as u64));
        sum = sum.add(&t);
        if t.is_negligible() && (m * m) as f64 > q.to_c().norm() {
            break;
        }
    }
    let s = sum.to_c();
    let lf: f64 = (2..=k).map(|i| (i as f64).ln()).sum();
    let lp = (w * 0.5).ln() * k as f64;
    let phase = Complex64::from_polar(1.0, lp.im);
    (s * phase, lp.re - lf)
}

/// Plain value of `J_k(w)`; callers keep `|w|` moderate.
pub fn oracle_j_value(k: i64, w: Complex64) -> Complex64 {
    let (v, ls) = oracle_j(k.unsigned_abs() as u32, w);
    let v = v * ls.exp();
    if k < 0 && k % 2 != 0 {
        -v
    } else {
        v
    }
}

/// `J_k'(w) = (J_{k-1}(w) - J_{k+1}(w)) / 2`.
pub fn oracle_jprime_value(k: i64, w: Complex64) -> Complex64 {
    0.5 * (oracle_j_value(k - 1, w) - oracle_j_value(k + 1, w))
}

/// Bisection for a sign change of a real function on `[a, b]`.
pub fn bisect(mut a: f64, mut b: f64, f: impl Fn(f64) -> f64) -> f64 {
    let mut fa = f(a);
    assert!(fa * f(b) < 0.0, "no sign change on [{a}, {b}]");
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        let fm = f(m);
        if fm == 0.0 {
            return m;
        }
        if fa * fm < 0.0 {
            b = m;
        } else {
            a = m;
            fa = fm;
        }
    }
    0.5 * (a + b)
}

/// Sign-carrying transmission determinant of one mode at real `lambda > 0`,
/// constant media, from oracle Bessel values.
pub fn oracle_det_real(k: i64, lambda: f64, media: (f64, f64, f64, f64), radius: f64) -> f64 {
    let (c1, n1, c2, n2) = media;
    let o1 = (lambda * n1 / c1).sqrt();
    let o2 = (lambda * n2 / c2).sqrt();
    let a = Complex64::new(o1 * radius, 0.0);
    let b = Complex64::new(o2 * radius, 0.0);
    let v = c1 * o1 * oracle_jprime_value(k, a) * oracle_j_value(k, b)
        - c2 * o2 * oracle_jprime_value(k, b) * oracle_j_value(k, a);
    v.re
}

/// Smallest root of `oracle_det_real` on `(lo, hi)`, found by a sign scan of
/// step `step` followed by bisection.
pub fn oracle_first_real_root(
    k: i64,
    media: (f64, f64, f64, f64),
    radius: f64,
    lo: f64,
    hi: f64,
    step: f64,
) -> Option<f64> {
    let f = |l: f64| oracle_det_real(k, l, media, radius);
    let mut a = lo;
    let mut fa = f(a);
    while a < hi {
        let b = (a + step).min(hi);
        let fb = f(b);
        if fa * fb < 0.0 {
            return Some(bisect(a, b, f));
        }
        a = b;
        fa = fb;
    }
    None
}

/// `I_0'(x) / I_0(x) = I_1(x) / I_0(x)` for real `x > 0`.
pub fn oracle_i1_over_i0(x: f64) -> f64 {
    let w = Complex64::new(0.0, x);
    let (j0, l0) = oracle_j(0, w);
    let (j1, l1) = oracle_j(1, w);
    // I_n(x) = i^{-n} J_n(ix)
    let r = j1 / j0 * (l1 - l0).exp();
    (r * Complex64::new(0.0, -1.0)).re
}

/// Transmission determinant of one mode at complex `lambda`, constant media,
/// with the same square-root branch for both media.
pub fn oracle_det(k: i64, lambda: Complex64, media: (f64, f64, f64, f64), radius: f64) -> Complex64 {
    let (c1, n1, c2, n2) = media;
    let o1 = (lambda * (n1 / c1)).sqrt();
    let o2 = (lambda * (n2 / c2)).sqrt();
    let (a, b) = (o1 * radius, o2 * radius);
    c1 * o1 * oracle_jprime_value(k, a) * oracle_j_value(k, b) - c2 * o2 * oracle_jprime_value(k, b) * oracle_j_value(k, a)
}

/// All sign changes of `oracle_det_real` on `(lo, hi)` at resolution `step`,
/// each refined by bisection.
pub fn oracle_real_roots(k: i64, media: (f64, f64, f64, f64), radius: f64, lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let f = |l: f64| oracle_det_real(k, l, media, radius);
    let mut out = Vec::new();
    let mut a = lo;
    let mut fa = f(a);
    while a < hi {
        let b = (a + step).min(hi);
        let fb = f(b);
        if fa * fb < 0.0 {
            out.push(bisect(a, b, f));
        }
        a = b;
        fa = fb;
    }
    out
}
