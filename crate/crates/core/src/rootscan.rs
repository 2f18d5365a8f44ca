//! Zeros of analytic functions in rectangles by the argument principle.
//!
//! Windings are computed from unwrapped phase increments along edges with
//! adaptive refinement. Rectangles are quadrisected until each cell holds at
//! most one zero, which is then polished by Newton's method.

use std::f64::consts::{FRAC_PI_4, PI, TAU};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::disk::{transmission_det, DiskConfig, LogScaled};
use crate::error::{Error, Result};

/// Finest edge sampling, as a fraction of the edge length.
pub const MAX_SAMPLES_PER_SIDE: usize = 1 << 14;
pub const MAX_RETRIES: usize = 5;
pub const SENTINEL_MODES: u32 = 3;

/// Split fractions tried in turn; none is 1/2 so that splits of intervals
/// symmetric about the real axis never land on it.
const SPLITS: [(f64, f64); MAX_RETRIES] =
    [(0.5131, 0.4827), (0.4619, 0.5377), (0.5483, 0.4471), (0.4237, 0.5719), (0.5911, 0.4133)];

pub trait Analytic: Sync {
    fn eval(&self, z: Complex64) -> Result<LogScaled>;

    /// Rough count of phase turns along the segment `a -> b`; sets the
    /// initial sampling so that no full turn hides between two samples.
    fn turns_hint(&self, _a: Complex64, _b: Complex64) -> f64 {
        0.0
    }
}

impl<F> Analytic for F
where
    F: Fn(Complex64) -> Result<LogScaled> + Sync,
{
    fn eval(&self, z: Complex64) -> Result<LogScaled> {
        self(z)
    }
}

/// Closed axis-aligned rectangle in the `lambda` plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
}

impl Rect {
    pub fn new(re_min: f64, re_max: f64, im_min: f64, im_max: f64) -> Result<Self> {
        let r = Rect { re_min, re_max, im_min, im_max };
        if !(re_min < re_max && im_min < im_max) || ![re_min, re_max, im_min, im_max].iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidInput(format!("degenerate rectangle {r:?}")));
        }
        Ok(r)
    }

    pub fn center(&self) -> Complex64 {
        Complex64::new(0.5 * (self.re_min + self.re_max), 0.5 * (self.im_min + self.im_max))
    }

    pub fn diameter(&self) -> f64 {
        (self.re_max - self.re_min).hypot(self.im_max - self.im_min)
    }

    /// Largest modulus of a point of the rectangle.
    pub fn scale(&self) -> f64 {
        self.re_min.abs().max(self.re_max.abs()).hypot(self.im_min.abs().max(self.im_max.abs()))
    }

    pub fn contains(&self, z: Complex64) -> bool {
        z.re >= self.re_min && z.re <= self.re_max && z.im >= self.im_min && z.im <= self.im_max
    }

    pub fn dilated(&self, d: f64) -> Rect {
        Rect { re_min: self.re_min - d, re_max: self.re_max + d, im_min: self.im_min - d, im_max: self.im_max + d }
    }

    fn corners(&self) -> [Complex64; 4] {
        [
            Complex64::new(self.re_min, self.im_min),
            Complex64::new(self.re_max, self.im_min),
            Complex64::new(self.re_max, self.im_max),
            Complex64::new(self.re_min, self.im_max),
        ]
    }
}

/// A rectangle to scan together with the excluded disk around `lambda = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanRegion {
    pub rect: Rect,
    pub exclusion: f64,
}

impl ScanRegion {
    pub fn new(re_min: f64, re_max: f64, im_min: f64, im_max: f64) -> Result<Self> {
        let rect = Rect::new(re_min, re_max, im_min, im_max)?;
        Ok(ScanRegion { rect, exclusion: 1e-6 * rect.scale().max(1.0) })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Root {
    pub lambda: Complex64,
    pub multiplicity: u32,
    /// `|f| / (|lambda| |f'|)` at the returned point.
    pub residual: f64,
    /// `ln |f|` at the returned point.
    pub log_abs: f64,
    pub newton_iters: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EigRecord {
    pub lambda: Complex64,
    pub mode: u32,
    /// Zero order times the `+-k` degeneracy.
    pub multiplicity: u32,
    pub residual: f64,
    pub log_abs: f64,
    pub newton_iters: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RootOptions {
    /// Relative Newton residual required of every reported simple root.
    pub tol: f64,
    pub samples_per_side: usize,
    /// Snap roots within `1e-9 |lambda|` of the real axis onto it.
    pub real_axis_snap: bool,
}

impl Default for RootOptions {
    fn default() -> Self {
        RootOptions { tol: 1e-8, samples_per_side: 64, real_axis_snap: false }
    }
}

#[derive(Debug)]
enum EdgeFail {
    Unresolved,
    Hard(Error),
}

fn phase_of<F: Analytic + ?Sized>(f: &F, z: Complex64) -> std::result::Result<f64, EdgeFail> {
    match f.eval(z) {
        Ok(v) if v.value.norm() > 0.0 && v.value.re.is_finite() && v.value.im.is_finite() => Ok(v.value.arg()),
        Ok(_) | Err(Error::Domain(_)) => Err(EdgeFail::Unresolved),
        Err(e) => Err(EdgeFail::Hard(e)),
    }
}

fn wrap(d: f64) -> f64 {
    let mut d = d % TAU;
    if d > PI {
        d -= TAU;
    } else if d < -PI {
        d += TAU;
    }
    d
}

/// Unwrapped phase increment of `f` along the straight segment `a -> b`.
fn edge_phase<F: Analytic + ?Sized>(
    f: &F,
    a: Complex64,
    b: Complex64,
    samples: usize,
) -> std::result::Result<f64, EdgeFail> {
    let n = samples.max((8.0 * f.turns_hint(a, b)).ceil() as usize).clamp(1, MAX_SAMPLES_PER_SIDE);
    let min_dt = 1.0 / MAX_SAMPLES_PER_SIDE as f64;
    let at = |t: f64| a + (b - a) * t;
    fn refine<F: Analytic + ?Sized>(
        f: &F,
        at: &dyn Fn(f64) -> Complex64,
        (ta, pa): (f64, f64),
        (tb, pb): (f64, f64),
        min_dt: f64,
    ) -> std::result::Result<f64, EdgeFail> {
        let d = wrap(pb - pa);
        if d.abs() <= FRAC_PI_4 {
            return Ok(d);
        }
        if tb - ta <= min_dt * 1.000001 {
            // A simple zero off the segment turns the phase by less than pi.
            return if d.abs() <= 0.9 * PI { Ok(d) } else { Err(EdgeFail::Unresolved) };
        }
        let tm = 0.5 * (ta + tb);
        let pm = phase_of(f, at(tm))?;
        Ok(refine(f, at, (ta, pa), (tm, pm), min_dt)? + refine(f, at, (tm, pm), (tb, pb), min_dt)?)
    }
    let ts: Vec<f64> = (0..=n).map(|i| i as f64 / n as f64).collect();
    let ps = ts.iter().map(|&t| phase_of(f, at(t))).collect::<std::result::Result<Vec<_>, _>>()?;
    let mut total = 0.0;
    for i in 0..n {
        total += refine(f, &at, (ts[i], ps[i]), (ts[i + 1], ps[i + 1]), min_dt)?;
    }
    Ok(total)
}

fn rect_phase<F: Analytic + ?Sized>(f: &F, r: &Rect, samples: usize) -> std::result::Result<f64, EdgeFail> {
    let c = r.corners();
    let mut total = 0.0;
    for i in 0..4 {
        total += edge_phase(f, c[i], c[(i + 1) % 4], samples)?;
    }
    Ok(total)
}

fn turns(phase: f64) -> i64 {
    (phase / TAU).round() as i64
}

/// Winding number of `f` around `rect`; the rectangle is dilated by `1e-6`
/// of its size (growing tenfold per retry) when a zero sits on or next to
/// the contour.
///
/// Zeros of order above one passing within a sample spacing of an edge can
/// alias; the determinants scanned here have simple zeros generically.
pub fn winding_count<F: Analytic + ?Sized>(f: &F, rect: &Rect, samples_per_side: usize) -> Result<i64> {
    winding_with_rect(f, rect, samples_per_side).map(|(w, _)| w)
}

fn winding_with_rect<F: Analytic + ?Sized>(f: &F, rect: &Rect, samples: usize) -> Result<(i64, Rect)> {
    let mut step = 1e-6 * rect.diameter();
    let mut r = *rect;
    for _ in 0..=MAX_RETRIES {
        match rect_phase(f, &r, samples) {
            Ok(p) => return Ok((turns(p), r)),
            Err(EdgeFail::Hard(e)) => return Err(e),
            Err(EdgeFail::Unresolved) => {
                r = r.dilated(step);
                step *= 10.0;
            }
        }
    }
    Err(Error::ContourThroughZero(MAX_RETRIES))
}

/// Four children of `r`, returned with their windings, from 12 edge pieces.
fn split<F: Analytic + ?Sized>(f: &F, r: &Rect, parent: i64, samples: usize) -> Result<Vec<(Rect, i64)>> {
    let mut last = None;
    for (fx, fy) in SPLITS {
        let xm = r.re_min + fx * (r.re_max - r.re_min);
        let ym = r.im_min + fy * (r.im_max - r.im_min);
        let p = |x: f64, y: f64| Complex64::new(x, y);
        let (x0, x1, y0, y1) = (r.re_min, r.re_max, r.im_min, r.im_max);
        let segs = [
            (p(x0, y0), p(xm, y0)),
            (p(xm, y0), p(x1, y0)),
            (p(x1, y0), p(x1, ym)),
            (p(x1, ym), p(x1, y1)),
            (p(x1, y1), p(xm, y1)),
            (p(xm, y1), p(x0, y1)),
            (p(x0, y1), p(x0, ym)),
            (p(x0, ym), p(x0, y0)),
            // Interior pieces, oriented away from the centre.
            (p(xm, ym), p(xm, y0)),
            (p(xm, ym), p(x1, ym)),
            (p(xm, ym), p(xm, y1)),
            (p(xm, ym), p(x0, ym)),
        ];
        let half = (samples / 2).max(8);
        let ph: std::result::Result<Vec<f64>, EdgeFail> =
            segs.par_iter().map(|&(a, b)| edge_phase(f, a, b, half)).collect();
        let e = match ph {
            Ok(v) => v,
            Err(EdgeFail::Hard(e)) => return Err(e),
            Err(EdgeFail::Unresolved) => {
                last = Some(Error::ContourThroughZero(MAX_RETRIES));
                continue;
            }
        };
        // Children counter-clockwise: lower-left, lower-right, upper-right, upper-left.
        let kids = [
            (Rect { re_min: x0, re_max: xm, im_min: y0, im_max: ym }, e[0] - e[8] + e[11] + e[7]),
            (Rect { re_min: xm, re_max: x1, im_min: y0, im_max: ym }, e[1] + e[2] - e[9] + e[8]),
            (Rect { re_min: xm, re_max: x1, im_min: ym, im_max: y1 }, e[9] + e[3] + e[4] - e[10]),
            (Rect { re_min: x0, re_max: xm, im_min: ym, im_max: y1 }, e[10] + e[5] + e[6] - e[11]),
        ];
        let out: Vec<(Rect, i64)> = kids.iter().map(|(r, ph)| (*r, turns(*ph))).collect();
        let sum: i64 = out.iter().map(|k| k.1).sum();
        if sum == parent {
            return Ok(out);
        }
        last = Some(Error::WindingMismatch { parent, children: sum });
    }
    Err(last.unwrap_or(Error::ContourThroughZero(MAX_RETRIES)))
}

/// Log-derivative `f'/f` by a central difference.
fn log_derivative<F: Analytic + ?Sized>(f: &F, z: Complex64, fz: &LogScaled) -> Result<Complex64> {
    let d = 1e-7 * z.norm().max(1.0);
    let p = f.eval(z + d)?;
    let m = f.eval(z - d)?;
    Ok((p.ratio(fz) - m.ratio(fz)) / (2.0 * d))
}

struct Polished {
    z: Complex64,
    residual: f64,
    log_abs: f64,
    iters: usize,
}

/// Newton's method for a zero of order `order`.
fn newton<F: Analytic + ?Sized>(f: &F, start: Complex64, order: i64, snap: bool) -> Result<Polished> {
    let mut z = start;
    let mut last_step = f64::INFINITY;
    for it in 1..=60 {
        let fz = f.eval(z)?;
        if fz.is_zero() {
            return Ok(Polished { z, residual: 0.0, log_abs: f64::NEG_INFINITY, iters: it });
        }
        let ld = log_derivative(f, z, &fz)?;
        let mut step = -(order as f64) / ld;
        if snap && z.im == 0.0 {
            step.im = 0.0;
        }
        if !(step.re.is_finite() && step.im.is_finite()) {
            return Err(Error::NonFinite);
        }
        let s = step.norm();
        let scale = z.norm().max(f64::MIN_POSITIVE);
        z += step;
        if snap && z.im != 0.0 && z.im.abs() <= 1e-9 * z.norm().max(1.0) {
            z.im = 0.0;
        }
        if s <= 4.0 * f64::EPSILON * scale || (s >= last_step && s <= 1e-12 * scale) {
            let fz = f.eval(z)?;
            return Ok(Polished { z, residual: s / scale, log_abs: fz.ln_abs(), iters: it });
        }
        last_step = s;
    }
    let fz = f.eval(z)?;
    let ld = log_derivative(f, z, &fz)?;
    Ok(Polished { z, residual: 1.0 / (ld.norm() * z.norm()), log_abs: fz.ln_abs(), iters: 60 })
}

fn process<F: Analytic + ?Sized>(f: &F, cell: Rect, winding: i64, opts: &RootOptions, min_diam: f64) -> Result<Vec<Root>> {
    if winding <= 0 {
        if winding < 0 {
            return Err(Error::WindingMismatch { parent: winding, children: 0 });
        }
        return Ok(Vec::new());
    }
    let small = cell.diameter() < min_diam;
    if let Ok(p) = newton(f, cell.center(), winding, opts.real_axis_snap) {
        let root = Root {
            lambda: p.z,
            multiplicity: winding as u32,
            residual: p.residual,
            log_abs: p.log_abs,
            newton_iters: p.iters,
        };
        if winding == 1 && p.residual <= opts.tol && cell.dilated(1e-9 * cell.diameter()).contains(p.z) {
            return Ok(vec![root]);
        }
        if winding > 1 {
            // Accept a multiple zero only if a square centred on it, well
            // inside the cell, carries the whole winding.
            let room = [p.z.re - cell.re_min, cell.re_max - p.z.re, p.z.im - cell.im_min, cell.im_max - p.z.im]
                .into_iter()
                .fold(f64::INFINITY, f64::min);
            let half = (0.01 * cell.diameter()).min(0.5 * room);
            if half > 1e-6 * min_diam {
                let sq = Rect { re_min: p.z.re - half, re_max: p.z.re + half, im_min: p.z.im - half, im_max: p.z.im + half };
                if matches!(winding_count(f, &sq, opts.samples_per_side), Ok(w) if w == winding) {
                    return Ok(vec![root]);
                }
            }
        }
    }
    if small {
        let c = cell.center();
        let fc = f.eval(c)?;
        let ld = log_derivative(f, c, &fc)?;
        return Ok(vec![Root {
            lambda: c,
            multiplicity: winding as u32,
            residual: 1.0 / (ld.norm() * c.norm()),
            log_abs: fc.ln_abs(),
            newton_iters: 0,
        }]);
    }
    let kids = split(f, &cell, winding, opts.samples_per_side)?;
    let parts: Vec<Result<Vec<Root>>> =
        kids.into_par_iter().map(|(r, w)| process(f, r, w, opts, min_diam)).collect();
    let mut out = Vec::new();
    for p in parts {
        out.extend(p?);
    }
    Ok(out)
}

/// All zeros of `f` in `rect` (up to a `1e-6` relative dilation), with the
/// top-level winding number.
pub fn find_roots<F: Analytic + ?Sized>(f: &F, rect: &Rect, opts: &RootOptions) -> Result<(Vec<Root>, i64)> {
    let (w, r) = winding_with_rect(f, rect, opts.samples_per_side)?;
    let min_diam = 1e3 * opts.tol * r.scale().max(1.0);
    let mut roots = process(f, r, w, opts, min_diam)?;
    let total: i64 = roots.iter().map(|r| r.multiplicity as i64).sum();
    if total != w {
        return Err(Error::WindingMismatch { parent: w, children: total });
    }
    sort_roots(&mut roots);
    Ok((roots, w))
}

fn sort_roots(v: &mut [Root]) {
    v.sort_by(|a, b| a.lambda.re.total_cmp(&b.lambda.re).then(a.lambda.im.total_cmp(&b.lambda.im)));
}

/// `f(z) / z^order`.
struct Deflated<'a, F: Analytic + ?Sized> {
    inner: &'a F,
    order: i64,
}

impl<F: Analytic + ?Sized> Analytic for Deflated<'_, F> {
    fn eval(&self, z: Complex64) -> Result<LogScaled> {
        if self.order != 0 && z.norm() == 0.0 {
            return Err(Error::Domain("deflated function at the origin".into()));
        }
        let v = self.inner.eval(z)?;
        if self.order == 0 {
            return Ok(v);
        }
        let k = self.order as f64;
        Ok(LogScaled {
            value: v.value * Complex64::from_polar(1.0, -k * z.arg()),
            log_scale: v.log_scale - k * z.norm().ln(),
        })
    }

    fn turns_hint(&self, a: Complex64, b: Complex64) -> f64 {
        self.inner.turns_hint(a, b)
    }
}

/// The normalized determinant of one angular mode as an analytic function.
#[derive(Debug, Clone, Copy)]
pub struct ModeDeterminant {
    pub cfg: DiskConfig,
    pub mode: u32,
}

impl Analytic for ModeDeterminant {
    fn eval(&self, z: Complex64) -> Result<LogScaled> {
        transmission_det(self.mode, z, &self.cfg)
    }

    fn turns_hint(&self, a: Complex64, b: Complex64) -> f64 {
        let c = &self.cfg;
        let s = (c.n1 / c.c1).sqrt() + (c.n2 / c.c2).sqrt();
        c.radius * s * (b.sqrt() - a.sqrt()).norm() / PI
    }
}

/// Mode cutoff beyond which no zero lies in the region.
pub fn default_k_max(cfg: &DiskConfig, region: &ScanRegion) -> u32 {
    (region.rect.scale().sqrt() * cfg.radius * cfg.m_max().sqrt()).ceil() as u32 + 20
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeSummary {
    pub mode: u32,
    /// Winding of the top-level contour after removing the zero at the origin.
    pub winding: i64,
    /// Order of the zero at `lambda = 0` that was divided out.
    pub origin_order: i64,
    /// Sum of root multiplicities before the `+-k` doubling.
    pub found: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    pub region: ScanRegion,
    pub k_max: u32,
    pub records: Vec<EigRecord>,
    pub modes: Vec<ModeSummary>,
    pub sentinel_ok: bool,
}

fn origin_order<F: Analytic + ?Sized>(f: &F, region: &ScanRegion, samples: usize) -> Result<i64> {
    let e = region.exclusion;
    if !region.rect.dilated(e).contains(Complex64::new(0.0, 0.0)) {
        return Ok(0);
    }
    // Slightly off-centre so that no edge sample is exactly 0.
    let sq = Rect { re_min: -e * 0.99, re_max: e * 1.01, im_min: -e * 1.03, im_max: e * 0.97 };
    winding_count(f, &sq, samples)
}

fn scan_mode(cfg: &DiskConfig, region: &ScanRegion, k: u32, opts: &RootOptions) -> Result<(Vec<EigRecord>, ModeSummary)> {
    let det = ModeDeterminant { cfg: *cfg, mode: k };
    let order = origin_order(&det, region, opts.samples_per_side)?;
    let g = Deflated { inner: &det, order };
    let (roots, w) = find_roots(&g, &region.rect, opts)?;
    let mult = if k == 0 { 1 } else { 2 };
    let records: Vec<EigRecord> = roots
        .iter()
        .map(|r| EigRecord {
            lambda: r.lambda,
            mode: k,
            multiplicity: r.multiplicity * mult,
            residual: r.residual,
            log_abs: r.log_abs,
            newton_iters: r.newton_iters,
        })
        .collect();
    let found = roots.iter().map(|r| r.multiplicity as i64).sum();
    Ok((records, ModeSummary { mode: k, winding: w, origin_order: order, found }))
}

/// Transmission eigenvalues of the disk in `region`, over modes `0..=k_max`.
pub fn spectrum(cfg: &DiskConfig, region: &ScanRegion, k_max: u32, opts: &RootOptions) -> Result<Spectrum> {
    cfg.validate()?;
    let opts = RootOptions { real_axis_snap: true, ..*opts };
    let sentinels: Vec<(u32, i64)> = (k_max + 1..=k_max + SENTINEL_MODES)
        .into_par_iter()
        .map(|k| {
            let det = ModeDeterminant { cfg: *cfg, mode: k };
            let order = origin_order(&det, region, opts.samples_per_side)?;
            let w = winding_count(&Deflated { inner: &det, order }, &region.rect, opts.samples_per_side)?;
            Ok((k, w))
        })
        .collect::<Result<_>>()?;
    if let Some(&(k, w)) = sentinels.iter().find(|s| s.1 != 0) {
        return Err(Error::SentinelNonzeroWinding { mode: k as usize, winding: w });
    }
    let per_mode: Vec<(Vec<EigRecord>, ModeSummary)> =
        (0..=k_max).into_par_iter().map(|k| scan_mode(cfg, region, k, &opts)).collect::<Result<_>>()?;
    let mut records = Vec::new();
    let mut modes = Vec::new();
    for (r, m) in per_mode {
        records.extend(r);
        modes.push(m);
    }
    records.sort_by(|a, b| {
        a.lambda.re.total_cmp(&b.lambda.re).then(a.lambda.im.total_cmp(&b.lambda.im)).then(a.mode.cmp(&b.mode))
    });
    Ok(Spectrum { region: *region, k_max, records, modes, sentinel_ok: true })
}

/// Largest distance from a non-real root to the nearest conjugate of a
/// root of the same mode, relative to `max(1, |lambda|)`.
pub fn conjugate_closure_error(records: &[EigRecord]) -> f64 {
    records
        .iter()
        .filter(|r| r.lambda.im != 0.0)
        .map(|r| {
            let d = records
                .iter()
                .filter(|s| s.mode == r.mode && s.multiplicity == r.multiplicity)
                .map(|s| (s.lambda - r.lambda.conj()).norm())
                .fold(f64::INFINITY, f64::min);
            d / r.lambda.norm().max(1.0)
        })
        .fold(0.0, f64::max)
}
