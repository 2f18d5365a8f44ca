//! Integer-order Bessel functions of the first kind for complex argument.
//!
//! Small arguments (relative to the order) use the ascending series with the
//! prefactor kept in log form. Everything else uses Miller's backward
//! recurrence normalized by the generating-function identity
//! `exp(-i s w) = J_0(w) + 2 sum_{n>=1} (-i s)^n J_n(w)`, with `s` the sign of
//! `Im w`, so the normalization sum never cancels.

use num_complex::Complex64;

use crate::error::{Error, Result};

pub const MAX_ORDER: u32 = 2000;
pub const MAX_ARG: f64 = 1e4;

const SERIES_RADIUS: f64 = 12.0;
const RESCALE_AT: f64 = 1e250;
const RESCALE_BY: f64 = 1e-250;

/// `J_order(argument)` and its derivative.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BesselEval {
    pub order: u32,
    pub argument: Complex64,
    pub value_j: Complex64,
    pub value_jprime: Complex64,
}

/// `J = j * exp(log_scale)` and `J' = jprime * exp(log_scale)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaledBessel {
    pub j: Complex64,
    pub jprime: Complex64,
    pub log_scale: f64,
}

impl ScaledBessel {
    pub fn value(&self) -> Result<Complex64> {
        unscale(self.j, self.log_scale)
    }

    pub fn derivative(&self) -> Result<Complex64> {
        unscale(self.jprime, self.log_scale)
    }
}

fn unscale(v: Complex64, ls: f64) -> Result<Complex64> {
    if v == Complex64::new(0.0, 0.0) {
        return Ok(v);
    }
    let lm = v.norm().ln() + ls;
    if lm > f64::MAX.ln() {
        return Err(Error::Overflow(lm));
    }
    Ok(v * ls.exp())
}

pub fn bessel_j_pair(order: u32, w: Complex64) -> Result<BesselEval> {
    let s = bessel_j_scaled(order, w)?;
    Ok(BesselEval {
        order,
        argument: w,
        value_j: s.value()?,
        value_jprime: s.derivative()?,
    })
}

pub fn bessel_j_log_scaled(order: u32, w: Complex64) -> Result<(Complex64, f64)> {
    let s = bessel_j_scaled(order, w)?;
    Ok((s.j, s.log_scale))
}

/// `J_order(w)` and `J'_order(w)` sharing one logarithmic scale.
pub fn bessel_j_scaled(order: u32, w: Complex64) -> Result<ScaledBessel> {
    if !w.re.is_finite() || !w.im.is_finite() {
        return Err(Error::NonFinite);
    }
    if order > MAX_ORDER {
        return Err(Error::Domain(format!("order {order} > {MAX_ORDER}")));
    }
    let aw = w.norm();
    if aw > MAX_ARG {
        return Err(Error::Domain(format!("|w| = {aw} > {MAX_ARG}")));
    }
    if aw == 0.0 {
        let (j, jp) = match order {
            0 => (1.0, 0.0),
            1 => (0.0, 0.5),
            _ => (0.0, 0.0),
        };
        return Ok(ScaledBessel {
            j: Complex64::new(j, 0.0),
            jprime: Complex64::new(jp, 0.0),
            log_scale: 0.0,
        });
    }
    // Terms of the series never grow once |w|^2/4 <= order + 1, so
    // cancellation stays bounded; beyond that the recurrence is used.
    if aw <= SERIES_RADIUS || 0.25 * aw * aw <= order as f64 + 1.0 {
        Ok(series(order, w))
    } else {
        Ok(miller(order, w))
    }
}

fn ln_factorial(k: u32) -> f64 {
    (2..=k).map(|i| (i as f64).ln()).sum()
}

fn series(order: u32, w: Complex64) -> ScaledBessel {
    let k = order as f64;
    let q = -0.25 * w * w;
    let mut t = Complex64::new(1.0, 0.0);
    let mut sum = t;
    let mut dsum = t * k;
    let mut m = 0.0;
    loop {
        m += 1.0;
        t = t * q / (m * (m + k));
        sum += t;
        dsum += t * (2.0 * m + k);
        if t.norm() <= 1e-17 * sum.norm() && m * m > q.norm() {
            break;
        }
        if m > 4000.0 {
            break;
        }
    }
    let lp = (w * 0.5).ln() * k;
    let ls = lp.re - ln_factorial(order) + sum.norm().ln();
    let phase = Complex64::from_polar(1.0 / sum.norm(), lp.im);
    ScaledBessel {
        j: sum * phase,
        jprime: dsum / w * phase,
        log_scale: ls,
    }
}

fn miller(order: u32, w: Complex64) -> ScaledBessel {
    let sigma = if w.im >= 0.0 { 1.0 } else { -1.0 };
    let start = order as usize + 20 + (1.2 * w.norm()).ceil() as usize;
    let target = order as usize;
    let partner = if target == 0 { 1 } else { target - 1 };
    // (-i sigma)^n cycles with period 4.
    let unit = Complex64::new(0.0, -sigma);
    let mut pw = [Complex64::new(1.0, 0.0); 4];
    for i in 1..4 {
        pw[i] = pw[i - 1] * unit;
    }

    let inv_w = w.inv();
    let mut p_next = Complex64::new(0.0, 0.0);
    let mut p = Complex64::new(1e-30, 0.0);
    let mut norm = Complex64::new(0.0, 0.0);
    let mut rescales: i64 = 0;
    let mut stored_target = (Complex64::new(0.0, 0.0), 0i64);
    let mut stored_partner = (Complex64::new(0.0, 0.0), 0i64);

    let mut n = start;
    loop {
        if n == target {
            stored_target = (p, rescales);
        }
        if n == partner {
            stored_partner = (p, rescales);
        }
        norm += if n == 0 { p } else { 2.0 * pw[n % 4] * p };
        if n == 0 {
            break;
        }
        let p_prev = (2.0 * n as f64) * inv_w * p - p_next;
        p_next = p;
        p = p_prev;
        n -= 1;
        if p.norm() > RESCALE_AT {
            p *= RESCALE_BY;
            p_next *= RESCALE_BY;
            norm *= RESCALE_BY;
            rescales += 1;
        }
    }

    let ln_rescale = RESCALE_BY.ln();
    // ln|J_n| and arg J_n from a stored recurrence value.
    let ln_abs = |s: (Complex64, i64)| {
        s.0.norm().ln() + ln_rescale * (rescales - s.1) as f64 - norm.norm().ln() + w.im.abs()
    };
    let phase = |s: (Complex64, i64)| {
        // Normalize before dividing: norm_sqr of the raw values can overflow.
        let a = s.0 / s.0.norm();
        let b = norm / norm.norm();
        let u = a * b.conj() * Complex64::from_polar(1.0, -sigma * w.re);
        u / u.norm()
    };

    let lt = ln_abs(stored_target);
    let ut = phase(stored_target);
    let lp = ln_abs(stored_partner);
    let up = phase(stored_partner);
    let other = up * (lp - lt).exp();
    let jprime = if target == 0 {
        -other
    } else {
        other - (target as f64) * inv_w * ut
    };
    ScaledBessel {
        j: ut,
        jprime,
        log_scale: lt,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn origin_values() {
        let e = bessel_j_pair(0, c(0.0, 0.0)).unwrap();
        assert_eq!(e.value_j, c(1.0, 0.0));
        assert_eq!(e.value_jprime, c(0.0, 0.0));
        let e = bessel_j_pair(3, c(0.0, 0.0)).unwrap();
        assert_eq!(e.value_j, c(0.0, 0.0));
        assert_eq!(e.value_jprime, c(0.0, 0.0));
        assert_eq!(bessel_j_log_scaled(0, c(0.0, 0.0)).unwrap(), (c(1.0, 0.0), 0.0));
    }

    #[test]
    fn known_real_values() {
        // Abramowitz & Stegun tables.
        let j0 = bessel_j_pair(0, c(1.0, 0.0)).unwrap();
        assert!((j0.value_j.re - 0.765_197_686_557_966_6).abs() < 1e-15);
        assert!((j0.value_jprime.re + 0.440_050_585_744_933_5).abs() < 1e-15);
        let j1 = bessel_j_pair(1, c(30.0, 0.0)).unwrap();
        assert!((j1.value_j.re + 0.118_751_062_616_623_3).abs() < 1e-13);
    }

    #[test]
    fn series_and_miller_agree_at_switchover() {
        for &(k, w) in &[(0u32, c(12.5, 0.3)), (3, c(-9.0, 8.9)), (7, c(0.0, 13.0))] {
            let a = series(k, w);
            let b = miller(k, w);
            let va = a.j * (a.log_scale - b.log_scale).exp();
            assert!((va - b.j).norm() < 1e-11 * b.j.norm(), "{k} {w}");
            let da = a.jprime * (a.log_scale - b.log_scale).exp();
            assert!((da - b.jprime).norm() < 1e-11 * b.jprime.norm().max(b.j.norm()));
        }
    }

    #[test]
    fn scaled_magnitude_stays_near_one() {
        for &(k, w) in &[(0u32, c(0.0, 100.0)), (40, c(3.0, 0.0)), (5, c(300.0, -250.0))] {
            let (v, _) = bessel_j_log_scaled(k, w).unwrap();
            assert!(v.norm() >= 1e-2 && v.norm() <= 1e2);
        }
    }

    #[test]
    fn overflow_is_reported() {
        assert!(matches!(bessel_j_pair(0, c(0.0, 900.0)), Err(Error::Overflow(_))));
        assert!(bessel_j_log_scaled(0, c(0.0, 900.0)).is_ok());
    }

    #[test]
    fn rejects_bad_input() {
        assert_eq!(bessel_j_pair(0, c(f64::NAN, 0.0)), Err(Error::NonFinite));
        assert!(matches!(bessel_j_pair(2001, c(1.0, 0.0)), Err(Error::Domain(_))));
        assert!(matches!(bessel_j_pair(0, c(2e4, 0.0)), Err(Error::Domain(_))));
    }

    #[test]
    fn small_argument_law() {
        for k in 0..=10u32 {
            for &w in &[c(0.1, 0.0), c(0.03, -0.07), c(0.0, 0.09)] {
                let e = bessel_j_pair(k, w).unwrap();
                let lead = (w * 0.5).powu(k) / (ln_factorial(k).exp());
                assert!((e.value_j - lead).norm() <= w.norm().powi(k as i32 + 2));
            }
        }
    }
}
