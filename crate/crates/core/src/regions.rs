//! Eigenvalue-free region predicates, coefficient conditions on the
//! boundary, envelope exponents and counting-function comparisons.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::disk::DiskConfig;
use crate::error::{Error, Result};
use crate::rootscan::{EigRecord, Spectrum};
use crate::symbol::MediumPair;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum RegionSpec {
    /// `Re >= 0`, `|Im| >= c (Re + 1)^(3/4 + eps)`.
    LambdaPlus { c: f64, eps: f64 },
    /// `Re <= -c_tilde`, or `-c_tilde <= Re <= 0` with `|Im| >= c`.
    LambdaMinus { c: f64, c_tilde: f64 },
    /// `Re >= 0`, `|Im| >= c (Re + 1)^(4/5)`.
    FrontFourFifths { c: f64 },
    /// `Re <= 0`, `|Im| >= c (|Re| + 1)^(-n)`.
    NegativeAxis { c: f64, n: u32 },
    /// `|Im| >= c (|Re| + 1)^(1 - kappa/2)`.
    Strip { c: f64, kappa: f64 },
}

impl RegionSpec {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            RegionSpec::LambdaPlus { c, eps } => c > 0.0 && eps > 0.0 && eps <= 0.25,
            RegionSpec::LambdaMinus { c, c_tilde } => c > 0.0 && c_tilde > 0.0,
            RegionSpec::FrontFourFifths { c } => c > 0.0,
            RegionSpec::NegativeAxis { c, n } => c > 0.0 && n >= 1,
            RegionSpec::Strip { c, kappa } => c > 0.0 && kappa > 0.0 && kappa <= 1.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidInput(format!("region constants out of range: {self:?}")))
        }
    }

    /// Exponent of the boundary curve `|Im| = c (|Re| + 1)^p`, where defined.
    pub fn exponent(&self) -> Option<f64> {
        match *self {
            RegionSpec::LambdaPlus { eps, .. } => Some(0.75 + eps),
            RegionSpec::FrontFourFifths { .. } => Some(0.8),
            RegionSpec::NegativeAxis { n, .. } => Some(-(n as f64)),
            RegionSpec::Strip { kappa, .. } => Some(1.0 - kappa / 2.0),
            RegionSpec::LambdaMinus { .. } => None,
        }
    }
}

pub fn in_region(lambda: Complex64, spec: &RegionSpec) -> bool {
    let (re, im) = (lambda.re, lambda.im.abs());
    match *spec {
        RegionSpec::LambdaPlus { c, eps } => re >= 0.0 && im >= c * (re + 1.0).powf(0.75 + eps),
        RegionSpec::LambdaMinus { c, c_tilde } => re <= -c_tilde || (re <= 0.0 && im >= c),
        RegionSpec::FrontFourFifths { c } => re >= 0.0 && im >= c * (re + 1.0).powf(0.8),
        RegionSpec::NegativeAxis { c, n } => re <= 0.0 && im >= c * (re.abs() + 1.0).powi(-(n as i32)),
        RegionSpec::Strip { c, kappa } => im >= c * (re.abs() + 1.0).powf(1.0 - kappa / 2.0),
    }
}

/// Boundary conditions on the media, each true iff it holds at every node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConditionFlags {
    /// `c1 n1 != c2 n2`.
    pub c1_2: bool,
    /// `c1 = c2` and `d_nu c1 = d_nu c2`.
    pub c1_3: bool,
    /// `c1 != c2`.
    pub c1_4: bool,
    /// `n1 / c1 != n2 / c2`.
    pub c1_5: bool,
    /// `n1 / c1 = n2 / c2`.
    pub c1_6: bool,
    /// `(c1 - c2)(c1 n1 - c2 n2) > 0`.
    pub c1_7: bool,
    /// `(c1 - c2)(c1 n1 - c2 n2) < 0`.
    pub c1_8: bool,
    /// `n1 = n2`.
    pub c1_9: bool,
}

impl ConditionFlags {
    /// `(1.8) => (1.5)`, and `(1.7)`, `(1.8)` never both.
    pub fn consistent(&self) -> bool {
        (!self.c1_8 || self.c1_5) && !(self.c1_7 && self.c1_8)
    }
}

const REL: f64 = 1e-12;

fn same(a: f64, b: f64) -> bool {
    (a - b).abs() <= REL * a.abs().max(b.abs()).max(1.0)
}

/// Evaluates the conditions at `nodes` equally spaced boundary points.
pub fn condition_flags(mp: &MediumPair, circumference: f64, nodes: usize) -> Result<ConditionFlags> {
    mp.validate_positive(circumference, nodes)?;
    let mut f = ConditionFlags {
        c1_2: true,
        c1_3: true,
        c1_4: true,
        c1_5: true,
        c1_6: true,
        c1_7: true,
        c1_8: true,
        c1_9: true,
    };
    for i in 0..nodes {
        let x = circumference * i as f64 / nodes as f64;
        let p = mp.at(x, circumference);
        let (a, b) = (p.c1 * p.n1, p.c2 * p.n2);
        let prod = (p.c1 - p.c2) * (a - b);
        let scale = (p.c1.abs() + p.c2.abs()) * (a.abs() + b.abs());
        let eq_c = same(p.c1, p.c2);
        f.c1_2 &= !same(a, b);
        f.c1_3 &= eq_c && same(mp.dc1_dnu.eval(x, circumference), mp.dc2_dnu.eval(x, circumference));
        f.c1_4 &= !eq_c;
        f.c1_5 &= !same(p.n1 / p.c1, p.n2 / p.c2);
        f.c1_6 &= same(p.n1 / p.c1, p.n2 / p.c2);
        f.c1_7 &= prod > REL * scale;
        f.c1_8 &= prod < -REL * scale;
        f.c1_9 &= same(p.n1, p.n2);
    }
    debug_assert!(f.consistent(), "{f:?}");
    Ok(f)
}

pub fn disk_condition_flags(cfg: &DiskConfig) -> Result<ConditionFlags> {
    condition_flags(&cfg.media(), 2.0 * PI * cfg.radius, 16)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Branch {
    /// `Re lambda >= 0`, abscissa `Re lambda + 1`.
    Right,
    /// `Re lambda <= 0`, abscissa `|Re lambda| + 1`.
    Left,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExponentFit {
    /// Slope of `log |Im|` against `log(|Re| + 1)` on the envelope;
    /// `-inf` when every eigenvalue of the branch is real.
    pub beta: f64,
    /// `|Im| ~ c (|Re| + 1)^beta`.
    pub c: f64,
    /// `(log10(|Re| + 1), log10 |Im|)` of the envelope points.
    pub envelope: Vec<(f64, f64)>,
    pub used: usize,
}

/// Bins per decade of `|Re| + 1` for the envelope maxima.
pub const ENVELOPE_BINS_PER_DECADE: f64 = 10.0;
pub const MIN_FIT_POINTS: usize = 10;
pub const FIT_WINDOW_START: f64 = 10.0;

/// Least-squares power law through the upper envelope of `|Im lambda|`.
pub fn exponent_fit(eigs: &[EigRecord], branch: Branch) -> Result<ExponentFit> {
    let pts: Vec<(f64, f64)> = eigs
        .iter()
        .filter(|e| match branch {
            Branch::Right => e.lambda.re >= 0.0,
            Branch::Left => e.lambda.re <= 0.0,
        })
        .map(|e| (e.lambda.re.abs() + 1.0, e.lambda.im.abs()))
        .filter(|p| p.0 >= FIT_WINDOW_START)
        .collect();
    if pts.len() < MIN_FIT_POINTS {
        return Err(Error::InsufficientData(format!("{} eigenvalues in the fit window", pts.len())));
    }
    let mut bins: std::collections::BTreeMap<i64, (f64, f64)> = std::collections::BTreeMap::new();
    for &(x, y) in pts.iter().filter(|p| p.1 > 0.0) {
        let lx = x.log10();
        let ly = y.log10();
        let key = (lx * ENVELOPE_BINS_PER_DECADE).floor() as i64;
        let e = bins.entry(key).or_insert((lx, ly));
        if ly > e.1 {
            *e = (lx, ly);
        }
    }
    let envelope: Vec<(f64, f64)> = bins.into_values().collect();
    if envelope.is_empty() {
        return Ok(ExponentFit { beta: f64::NEG_INFINITY, c: 0.0, envelope, used: pts.len() });
    }
    if envelope.len() < 2 {
        return Err(Error::InsufficientData("envelope has a single point".into()));
    }
    let n = envelope.len() as f64;
    let mx = envelope.iter().map(|p| p.0).sum::<f64>() / n;
    let my = envelope.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = envelope.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = envelope.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return Err(Error::InsufficientData("envelope abscissae coincide".into()));
    }
    let beta = sxy / sxx;
    let c = 10f64.powf(my - beta * mx);
    Ok(ExponentFit { beta, c, envelope, used: pts.len() })
}

/// `inf |Im lambda|` over eigenvalues with `-c_tilde <= Re <= 0`.
pub fn lambda_minus_infimum(eigs: &[EigRecord], c_tilde: f64) -> Option<f64> {
    eigs.iter()
        .filter(|e| e.lambda.re <= 0.0 && e.lambda.re >= -c_tilde)
        .map(|e| e.lambda.im.abs())
        .reduce(f64::min)
}

/// `tau_1 + tau_2` for constant media on the disk (`d = 2`).
pub fn weyl_constant(cfg: &DiskConfig) -> f64 {
    let area = PI * cfg.radius * cfg.radius;
    PI / (4.0 * PI * PI) * area * (cfg.n1 / cfg.c1 + cfg.n2 / cfg.c2)
}

/// Leading coefficient `a` of `N^-(r) ~ a r`, or `None` without (1.8).
pub fn surface_wave_constant(cfg: &DiskConfig) -> Result<Option<f64>> {
    if !disk_condition_flags(cfg)?.c1_8 {
        return Ok(None);
    }
    let c = (cfg.c1 * cfg.c1 - cfg.c2 * cfg.c2).abs() / (cfg.c1 * cfg.n1 - cfg.c2 * cfg.n2).abs();
    let perimeter = 2.0 * PI * cfg.radius;
    Ok(Some(2.0 / (2.0 * PI) * perimeter / c.sqrt()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeylRow {
    pub r: f64,
    pub count: u64,
    pub predicted: f64,
    pub ratio: f64,
    pub negative_count: Option<u64>,
    pub negative_predicted: Option<f64>,
    pub negative_ratio: Option<f64>,
}

/// Counting functions with multiplicity against their leading asymptotics.
pub fn weyl_compare(spec: &Spectrum, cfg: &DiskConfig, r_values: &[f64]) -> Result<Vec<WeylRow>> {
    if !spec.sentinel_ok {
        return Err(Error::IncompleteSpectrum("mode cutoff not verified".into()));
    }
    let tau = weyl_constant(cfg);
    let neg = surface_wave_constant(cfg)?;
    let rect = spec.region.rect;
    r_values
        .iter()
        .map(|&r| {
            let r2 = r * r;
            if rect.re_min > -r2 || rect.re_max < r2 || rect.im_min > -r2 || rect.im_max < r2 {
                return Err(Error::IncompleteSpectrum(format!("scan region does not cover |lambda| <= {r2}")));
            }
            let inside = spec.records.iter().filter(|e| e.lambda.norm() <= r2);
            let count: u64 = inside.clone().map(|e| e.multiplicity as u64).sum();
            let negative_count: u64 = inside.filter(|e| e.lambda.re < 0.0).map(|e| e.multiplicity as u64).sum();
            let predicted = tau * r2;
            let np = neg.map(|a| a * r);
            Ok(WeylRow {
                r,
                count,
                predicted,
                ratio: count as f64 / predicted,
                negative_count: np.map(|_| negative_count),
                negative_predicted: np,
                negative_ratio: np.map(|p| negative_count as f64 / p),
            })
        })
        .collect()
}
