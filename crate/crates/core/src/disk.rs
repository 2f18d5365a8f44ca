//! Exact transmission problem on a disk with constant coefficients.
//!
//! Separation of variables reduces the problem to one scalar determinant per
//! angular mode. With `w_j = sqrt(lambda n_j / c_j)` the normalized
//! determinant
//! `d_k = [c1 w1 J_k'(w1 R) J_k(w2 R) - c2 w2 J_k'(w2 R) J_k(w1 R)] / (w1 w2)^k`
//! is even in each `w_j`, hence entire in `lambda`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::bessel::{bessel_j_scaled, MAX_ORDER};
use crate::error::{Error, Result};
use crate::parametrix::{
    boundary_symbol_tau, cutoff_symbol_b, solve_eikonal, solve_transport, DiskNormalForm, NormalForm, TransportForm,
};
use crate::symbol::{japanese, rho, BoundaryFunction, BoundaryGeometry, GridSpec, MediumPair, SpectralPoint, Zone};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiskConfig {
    pub radius: f64,
    pub c1: f64,
    pub n1: f64,
    pub c2: f64,
    pub n2: f64,
}

impl DiskConfig {
    pub fn new(radius: f64, c1: f64, n1: f64, c2: f64, n2: f64) -> Result<Self> {
        let cfg = DiskConfig { radius, c1, n1, c2, n2 };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let v = [self.radius, self.c1, self.n1, self.c2, self.n2];
        if !v.iter().all(|x| x.is_finite() && *x > 0.0) {
            return Err(Error::InvalidInput(format!("radius and media must be positive: {v:?}")));
        }
        let (a, b) = (self.c1 * self.n1, self.c2 * self.n2);
        if (a - b).abs() <= 1e-12 * a.max(b) {
            return Err(Error::ConditionViolated("contrast", format!("c1 n1 = c2 n2 = {a}")));
        }
        Ok(())
    }

    pub fn media(&self) -> MediumPair {
        MediumPair::constant(self.c1, self.n1, self.c2, self.n2)
    }

    pub fn geometry(&self) -> BoundaryGeometry {
        BoundaryGeometry::circle(self.radius)
    }

    pub fn m_max(&self) -> f64 {
        (self.n1 / self.c1).max(self.n2 / self.c2)
    }
}

/// `value * exp(log_scale)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogScaled {
    pub value: Complex64,
    pub log_scale: f64,
}

impl LogScaled {
    pub fn is_zero(&self) -> bool {
        self.value == Complex64::new(0.0, 0.0)
    }

    /// `ln |.|`, `-inf` for an exact zero.
    pub fn ln_abs(&self) -> f64 {
        self.value.norm().ln() + self.log_scale
    }

    pub fn to_complex(&self) -> Result<Complex64> {
        if self.is_zero() {
            return Ok(self.value);
        }
        let l = self.ln_abs();
        if l > f64::MAX.ln() {
            return Err(Error::Overflow(l));
        }
        Ok(self.value * self.log_scale.exp())
    }

    /// `self / other` as a plain number.
    pub fn ratio(&self, other: &LogScaled) -> Complex64 {
        self.value / other.value * (self.log_scale - other.log_scale).exp()
    }

    fn normalized(value: Complex64, log_scale: f64) -> LogScaled {
        let a = value.norm();
        if a == 0.0 || !a.is_finite() {
            return LogScaled { value, log_scale };
        }
        LogScaled { value: value / a, log_scale: log_scale + a.ln() }
    }
}

/// Normalized transmission determinant of angular mode `k`.
pub fn transmission_det(k: u32, lambda: Complex64, cfg: &DiskConfig) -> Result<LogScaled> {
    cfg.validate()?;
    if !(lambda.re.is_finite() && lambda.im.is_finite()) {
        return Err(Error::NonFinite);
    }
    if lambda == Complex64::new(0.0, 0.0) {
        return Err(Error::Domain("lambda = 0 is excluded".into()));
    }
    if lambda.norm() * cfg.radius * cfg.radius * cfg.m_max() > 1e8 {
        return Err(Error::Overflow(lambda.norm()));
    }
    let w1 = (lambda * (cfg.n1 / cfg.c1)).sqrt();
    let w2 = (lambda * (cfg.n2 / cfg.c2)).sqrt();
    det_with_roots(k, w1, w2, cfg)
}

/// The determinant for explicit choices of `w1`, `w2`.
pub fn det_with_roots(k: u32, w1: Complex64, w2: Complex64, cfg: &DiskConfig) -> Result<LogScaled> {
    if k > MAX_ORDER {
        return Err(Error::Domain(format!("mode {k} > {MAX_ORDER}")));
    }
    let a = bessel_j_scaled(k, w1 * cfg.radius)?;
    let b = bessel_j_scaled(k, w2 * cfg.radius)?;
    let num = cfg.c1 * w1 * a.jprime * b.j - cfg.c2 * w2 * b.jprime * a.j;
    let p = w1 * w2;
    let kf = k as f64;
    let phase = Complex64::from_polar(1.0, -kf * p.arg());
    Ok(LogScaled::normalized(num * phase, a.log_scale + b.log_scale - kf * p.norm().ln()))
}

/// Per-mode Dirichlet-to-Neumann eigenvalue `i h w J_|m|'(w R) / J_|m|(w R)`
/// with `w = sqrt(z n / c) / h`, for boundary data `exp(i m theta)`.
pub fn exact_dtn(mode: i64, sp: &SpectralPoint, radius: f64, c: f64, n: f64) -> Result<Complex64> {
    let order = mode.unsigned_abs();
    if order > MAX_ORDER as u64 {
        return Err(Error::Domain(format!("mode {mode} exceeds {MAX_ORDER}")));
    }
    let w = (sp.z * (n / c)).sqrt() / sp.h;
    let s = bessel_j_scaled(order as u32, w * radius)?;
    if s.j.norm() == 0.0 || s.j.norm() < 1e-280 * s.jprime.norm() {
        return Err(Error::DirichletPole(mode));
    }
    Ok(I * sp.h * w * s.jprime / s.j)
}

/// Boundary symbol compared against the exact DtN eigenvalues.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Correction {
    /// `rho` alone.
    None,
    /// `rho + h b` with `b` the cutoff-based correction symbol.
    CutoffSymbol,
    /// `rho + h b` with `b = -i a_{1,0}` from the transport recursion.
    FirstTransport,
    /// The full boundary symbol `tau` of the given order.
    Tau(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct DtnReport {
    pub h: f64,
    pub z: Complex64,
    pub correction: Correction,
    /// `max_m <xi'_m> |exact(m) - symbol(xi'_m)|`.
    pub weighted_error: f64,
    pub worst_mode: i64,
    /// Error at `m = 0` (complex, `exact - symbol`).
    pub zero_mode_error: Complex64,
}

/// Symbol values at `xi'_m = h m / R` for `m = -m_max..=m_max`.
pub fn boundary_symbol_at_modes(
    sp: &SpectralPoint,
    radius: f64,
    c: f64,
    n: f64,
    m_max: usize,
    correction: Correction,
    delta0: f64,
) -> Result<Vec<Complex64>> {
    let count = 2 * m_max + 1;
    let xi_max = (sp.h * m_max as f64 / radius).max(sp.h / radius);
    // Nodes of this grid sit exactly on the mode frequencies.
    let grid = GridSpec { nx: 16, nxi: count.max(3), xi_max };
    let xi_of = |j: usize| sp.h * (j as f64 - m_max as f64) / radius;
    let form = DiskNormalForm { radius, c, n };
    let m = n / c;
    let base: Vec<Complex64> = (0..count).map(|j| rho(xi_of(j).powi(2), m, sp.z)).collect::<Result<_>>()?;
    match correction {
        Correction::None => Ok(base),
        Correction::CutoffSymbol => {
            let b = cutoff_symbol_b(&form, &BoundaryFunction::constant(1.0), &grid, delta0)?;
            Ok(base.iter().enumerate().map(|(j, r)| r + sp.h * b.get(0, j)).collect())
        }
        Correction::FirstTransport | Correction::Tau(_) => {
            let order = match correction {
                Correction::Tau(n) => n,
                _ => 2,
            };
            let jet = form.jet(order)?;
            let ph = solve_eikonal(&jet, sp, &grid)?;
            let amp = solve_transport(&jet, &ph, &BoundaryFunction::constant(1.0), TransportForm::Conjugated)?;
            if let Correction::Tau(_) = correction {
                let tau = boundary_symbol_tau(&amp, &ph, sp.h);
                Ok((0..count).map(|j| tau.get(0, j)).collect())
            } else {
                let a10 = amp.coeff(1, 0);
                Ok(base.iter().enumerate().map(|(j, r)| r - I * sp.h * a10.get(0, j)).collect())
            }
        }
    }
}

/// Weighted per-mode error of a boundary symbol against the exact DtN.
pub fn dtn_compare(
    sp: &SpectralPoint,
    c: f64,
    n: f64,
    radius: f64,
    m_max: usize,
    correction: Correction,
    delta0: f64,
) -> Result<DtnReport> {
    if sp.zone == Zone::Z1 && sp.z.im.abs() < sp.h.sqrt() * (1.0 - 1e-12) && sp.epsilon == 0.0 {
        return Err(Error::ZoneMismatch("Z1 comparison needs |Im z| >= h^(1/2 - eps)".into()));
    }
    let sym = boundary_symbol_at_modes(sp, radius, c, n, m_max, correction, delta0)?;
    let mut rep = DtnReport {
        h: sp.h,
        z: sp.z,
        correction,
        weighted_error: 0.0,
        worst_mode: 0,
        zero_mode_error: Complex64::new(0.0, 0.0),
    };
    for (j, s) in sym.iter().enumerate() {
        let m = j as i64 - m_max as i64;
        if m < 0 {
            // The disk symbol and the DtN are even in m.
            continue;
        }
        let exact = exact_dtn(m, sp, radius, c, n)?;
        let xi = sp.h * m as f64 / radius;
        let e = japanese(xi) * (exact - s).norm();
        if m == 0 {
            rep.zero_mode_error = exact - s;
        }
        if e > rep.weighted_error {
            rep.weighted_error = e;
            rep.worst_mode = m;
        }
    }
    Ok(rep)
}

/// `max_m |Re(c exact_dtn(m))|` at `z = -1`.
pub fn greens_identity_check(h: f64, c: f64, n: f64, radius: f64, m_max: usize) -> Result<f64> {
    let sp = SpectralPoint::new(h, Complex64::new(-1.0, 0.0), Zone::Z2, 0.0)?;
    let mut worst: f64 = 0.0;
    for m in 0..=m_max as i64 {
        worst = worst.max((c * exact_dtn(m, &sp, radius, c, n)?).re.abs());
    }
    Ok(worst)
}

/// `max_m |Re(c tau(xi'_m))|` at `z = -1` for the order-`order` parametrix.
pub fn parametrix_greens_check(h: f64, c: f64, n: f64, radius: f64, m_max: usize, order: usize) -> Result<f64> {
    let sp = SpectralPoint::new(h, Complex64::new(-1.0, 0.0), Zone::Z2, 0.0)?;
    let tau = boundary_symbol_at_modes(&sp, radius, c, n, m_max, Correction::Tau(order), 1.0)?;
    Ok(tau.iter().map(|t| (c * t).re.abs()).fold(0.0, f64::max))
}
