//! Boundary symbols on the cotangent bundle of a circle.
//!
//! Conventions: `rho` is the root of `rho^2 + r0 - m z = 0` with positive
//! imaginary part, `<xi> = sqrt(1 + xi^2)`, and boundary points are given by
//! arc length `x` in `[0, L)`.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const ZONE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Zone {
    Z1,
    Z2,
    Z3,
}

impl Zone {
    /// Zone containing `z`, preferring Z1/Z2 on the shared corners.
    pub fn of(z: Complex64) -> Option<Zone> {
        if (z.re - 1.0).abs() <= ZONE_TOL && z.im.abs() > 0.0 && z.im.abs() <= 1.0 + ZONE_TOL {
            Some(Zone::Z1)
        } else if (z.re + 1.0).abs() <= ZONE_TOL && z.im.abs() <= 1.0 + ZONE_TOL {
            Some(Zone::Z2)
        } else if z.re.abs() <= 1.0 + ZONE_TOL && (z.im.abs() - 1.0).abs() <= ZONE_TOL {
            Some(Zone::Z3)
        } else {
            None
        }
    }

    pub fn contains(self, z: Complex64) -> bool {
        match self {
            Zone::Z1 => (z.re - 1.0).abs() <= ZONE_TOL && z.im != 0.0 && z.im.abs() <= 1.0 + ZONE_TOL,
            Zone::Z2 => (z.re + 1.0).abs() <= ZONE_TOL && z.im.abs() <= 1.0 + ZONE_TOL,
            Zone::Z3 => z.re.abs() <= 1.0 + ZONE_TOL && (z.im.abs() - 1.0).abs() <= ZONE_TOL,
        }
    }
}

/// Semiclassical pair `(h, z)` with `lambda = z / h^2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralPoint {
    pub h: f64,
    pub z: Complex64,
    pub zone: Zone,
    pub epsilon: f64,
}

impl SpectralPoint {
    pub fn new(h: f64, z: Complex64, zone: Zone, epsilon: f64) -> Result<Self> {
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::InvalidInput(format!("h must be positive, got {h}")));
        }
        if !(0.0..0.5).contains(&epsilon) {
            return Err(Error::InvalidInput(format!("epsilon {epsilon} outside [0, 0.5)")));
        }
        if !zone.contains(z) {
            return Err(Error::ZoneMismatch(format!("z = {z} is not in {zone:?}")));
        }
        if zone == Zone::Z1 && epsilon > 0.0 && z.im.abs() < h.powf(0.5 - epsilon) * (1.0 - ZONE_TOL) {
            return Err(Error::ZoneMismatch(format!(
                "|Im z| = {} below h^(1/2-eps) = {}",
                z.im.abs(),
                h.powf(0.5 - epsilon)
            )));
        }
        Ok(SpectralPoint { h, z, zone, epsilon })
    }

    pub fn lambda(&self) -> Complex64 {
        self.z / (self.h * self.h)
    }
}

pub fn japanese(xi: f64) -> f64 {
    (1.0 + xi * xi).sqrt()
}

/// The boundary circle of a disk, parametrized by arc length.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundaryGeometry {
    pub radius: f64,
}

impl BoundaryGeometry {
    pub fn circle(radius: f64) -> Self {
        BoundaryGeometry { radius }
    }

    pub fn circumference(&self) -> f64 {
        TAU * self.radius
    }

    pub fn curvature_radius(&self) -> f64 {
        self.radius
    }

    pub fn r0(&self, _x: f64, xi: f64) -> f64 {
        xi * xi
    }
}

/// A smooth periodic boundary function given by a finite Fourier series in
/// the angle `theta = 2 pi x / L`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryFunction {
    pub mean: f64,
    #[serde(default)]
    pub cos: Vec<f64>,
    #[serde(default)]
    pub sin: Vec<f64>,
}

impl BoundaryFunction {
    pub fn constant(v: f64) -> Self {
        BoundaryFunction { mean: v, cos: Vec::new(), sin: Vec::new() }
    }

    pub fn is_constant(&self) -> bool {
        self.cos.iter().chain(&self.sin).all(|&c| c == 0.0)
    }

    pub fn at_angle(&self, theta: f64) -> f64 {
        let mut v = self.mean;
        for (k, c) in self.cos.iter().enumerate() {
            v += c * ((k + 1) as f64 * theta).cos();
        }
        for (k, s) in self.sin.iter().enumerate() {
            v += s * ((k + 1) as f64 * theta).sin();
        }
        v
    }

    pub fn eval(&self, x: f64, circumference: f64) -> f64 {
        self.at_angle(TAU * x / circumference)
    }

    pub fn scaled(&self, f: f64) -> Self {
        BoundaryFunction {
            mean: self.mean * f,
            cos: self.cos.iter().map(|c| c * f).collect(),
            sin: self.sin.iter().map(|c| c * f).collect(),
        }
    }
}

/// Coefficients of the two media restricted to the boundary. `dc1_dnu` and
/// `dc2_dnu` are the normal derivatives of `c1`, `c2` on the boundary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MediumPair {
    pub c1: BoundaryFunction,
    pub n1: BoundaryFunction,
    pub c2: BoundaryFunction,
    pub n2: BoundaryFunction,
    #[serde(default = "zero_fn")]
    pub dc1_dnu: BoundaryFunction,
    #[serde(default = "zero_fn")]
    pub dc2_dnu: BoundaryFunction,
}

fn zero_fn() -> BoundaryFunction {
    BoundaryFunction::constant(0.0)
}

/// Pointwise values of a [`MediumPair`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MediaAt {
    pub c1: f64,
    pub n1: f64,
    pub c2: f64,
    pub n2: f64,
}

impl MediaAt {
    pub fn m1(&self) -> f64 {
        self.n1 / self.c1
    }
    pub fn m2(&self) -> f64 {
        self.n2 / self.c2
    }
}

impl MediumPair {
    pub fn constant(c1: f64, n1: f64, c2: f64, n2: f64) -> Self {
        MediumPair {
            c1: BoundaryFunction::constant(c1),
            n1: BoundaryFunction::constant(n1),
            c2: BoundaryFunction::constant(c2),
            n2: BoundaryFunction::constant(n2),
            dc1_dnu: zero_fn(),
            dc2_dnu: zero_fn(),
        }
    }

    pub fn at(&self, x: f64, circumference: f64) -> MediaAt {
        let t = TAU * x / circumference;
        MediaAt {
            c1: self.c1.at_angle(t),
            n1: self.n1.at_angle(t),
            c2: self.c2.at_angle(t),
            n2: self.n2.at_angle(t),
        }
    }

    pub fn is_constant(&self) -> bool {
        [&self.c1, &self.n1, &self.c2, &self.n2].iter().all(|f| f.is_constant())
    }

    /// Pointwise values on `nodes` equally spaced boundary points.
    pub fn sample(&self, circumference: f64, nodes: usize) -> Vec<MediaAt> {
        (0..nodes)
            .map(|i| self.at(circumference * i as f64 / nodes as f64, circumference))
            .collect()
    }

    /// Largest value of `m_j = n_j / c_j` over both media on the sample.
    pub fn max_m(&self, circumference: f64, nodes: usize) -> f64 {
        self.sample(circumference, nodes)
            .iter()
            .map(|p| p.m1().max(p.m2()))
            .fold(0.0, f64::max)
    }

    pub fn min_inv_m(&self, circumference: f64, nodes: usize) -> f64 {
        1.0 / self.max_m(circumference, nodes)
    }

    pub fn validate_positive(&self, circumference: f64, nodes: usize) -> Result<()> {
        for p in self.sample(circumference, nodes) {
            if !(p.c1 > 0.0 && p.n1 > 0.0 && p.c2 > 0.0 && p.n2 > 0.0) {
                return Err(Error::InvalidInput(format!("coefficients must be positive, got {p:?}")));
            }
        }
        Ok(())
    }
}

/// Uniform grid over `[0, L) x [-xi_max, xi_max]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub nx: usize,
    pub nxi: usize,
    pub xi_max: f64,
}

impl GridSpec {
    pub fn new(nx: usize, nxi: usize, xi_max: f64) -> Result<Self> {
        if nx < 16 || nxi < 16 {
            return Err(Error::InvalidInput(format!("grid {nx}x{nxi} smaller than 16 nodes")));
        }
        if !(xi_max > 0.0) {
            return Err(Error::InvalidInput("xi_max must be positive".into()));
        }
        Ok(GridSpec { nx, nxi, xi_max })
    }

    /// 256 x 513 nodes with `Xi = 4 max(sqrt(2 m_max), 1)`.
    pub fn default_for(m_max: f64) -> Self {
        GridSpec {
            nx: 256,
            nxi: 513,
            xi_max: 4.0 * (2.0 * m_max).sqrt().max(1.0),
        }
    }

    pub fn refined(&self) -> Self {
        GridSpec {
            nx: 2 * self.nx,
            nxi: 2 * (self.nxi - 1) + 1,
            xi_max: self.xi_max,
        }
    }

    pub fn dxi(&self) -> f64 {
        2.0 * self.xi_max / (self.nxi - 1) as f64
    }

    pub fn xi(&self, j: usize) -> f64 {
        -self.xi_max + self.dxi() * j as f64
    }
}

/// Complex values of a symbol on a [`GridSpec`], stored row-major in `x`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolGrid {
    pub circumference: f64,
    pub spec: GridSpec,
    pub values: Vec<Complex64>,
}

impl SymbolGrid {
    pub fn from_fn<F>(circumference: f64, spec: GridSpec, f: F) -> Self
    where
        F: Fn(f64, f64) -> Complex64 + Sync,
    {
        let values = (0..spec.nx * spec.nxi)
            .into_par_iter()
            .map(|k| {
                let (i, j) = (k / spec.nxi, k % spec.nxi);
                f(circumference * i as f64 / spec.nx as f64, spec.xi(j))
            })
            .collect();
        SymbolGrid { circumference, spec, values }
    }

    pub fn try_from_fn<F>(circumference: f64, spec: GridSpec, f: F) -> Result<Self>
    where
        F: Fn(f64, f64) -> Result<Complex64> + Sync,
    {
        let values = (0..spec.nx * spec.nxi)
            .into_par_iter()
            .map(|k| {
                let (i, j) = (k / spec.nxi, k % spec.nxi);
                f(circumference * i as f64 / spec.nx as f64, spec.xi(j))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(SymbolGrid { circumference, spec, values })
    }

    pub fn constant(circumference: f64, spec: GridSpec, v: Complex64) -> Self {
        SymbolGrid { circumference, spec, values: vec![v; spec.nx * spec.nxi] }
    }

    pub fn x(&self, i: usize) -> f64 {
        self.circumference * i as f64 / self.spec.nx as f64
    }

    pub fn xi(&self, j: usize) -> f64 {
        self.spec.xi(j)
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.values[i * self.spec.nxi + j]
    }

    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> Self {
        SymbolGrid {
            circumference: self.circumference,
            spec: self.spec,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn zip_with(&self, other: &SymbolGrid, f: impl Fn(Complex64, Complex64) -> Complex64) -> Self {
        assert_eq!(self.spec, other.spec, "symbol grids must share a layout");
        SymbolGrid {
            circumference: self.circumference,
            spec: self.spec,
            values: self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// True when every row equals the first to `tol` (absolute).
    pub fn is_x_independent(&self, tol: f64) -> bool {
        let nxi = self.spec.nxi;
        let first = &self.values[..nxi];
        self.values.chunks(nxi).all(|row| row.iter().zip(first).all(|(a, b)| (a - b).norm() <= tol))
    }

    /// `d^order/dx^order` by Fourier differentiation along each `xi` column.
    pub fn dx_spectral(&self, order: u32) -> SymbolGrid {
        if order == 0 {
            return self.clone();
        }
        let (nx, nxi) = (self.spec.nx, self.spec.nxi);
        let mut planner = FftPlanner::<f64>::new();
        let fwd = planner.plan_fft_forward(nx);
        let inv = planner.plan_fft_inverse(nx);
        let factor: Vec<Complex64> = (0..nx)
            .map(|k| {
                let kk = if k <= nx / 2 { k as i64 } else { k as i64 - nx as i64 };
                // The Nyquist mode has no consistent derivative; drop it.
                if nx % 2 == 0 && k == nx / 2 && order % 2 == 1 {
                    return Complex64::new(0.0, 0.0);
                }
                let w = Complex64::new(0.0, TAU * kk as f64 / self.circumference);
                w.powu(order) / nx as f64
            })
            .collect();
        let mut out = vec![Complex64::new(0.0, 0.0); nx * nxi];
        let mut col = vec![Complex64::new(0.0, 0.0); nx];
        for j in 0..nxi {
            for i in 0..nx {
                col[i] = self.values[i * nxi + j];
            }
            fwd.process(&mut col);
            for (c, f) in col.iter_mut().zip(&factor) {
                *c *= f;
            }
            inv.process(&mut col);
            for i in 0..nx {
                out[i * nxi + j] = col[i];
            }
        }
        SymbolGrid { circumference: self.circumference, spec: self.spec, values: out }
    }

    /// `d^order/dxi^order` by fourth-order central differences; only nodes at
    /// least three steps from the ends of the `xi` range are meaningful.
    pub fn dxi_fd(&self, order: u32) -> SymbolGrid {
        if order == 0 {
            return self.clone();
        }
        let (nx, nxi) = (self.spec.nx, self.spec.nxi);
        let h = self.spec.dxi();
        let (stencil, denom): (&[f64], f64) = match order {
            1 => (&[0.0, 1.0, -8.0, 0.0, 8.0, -1.0, 0.0], 12.0 * h),
            2 => (&[0.0, -1.0, 16.0, -30.0, 16.0, -1.0, 0.0], 12.0 * h * h),
            3 => (&[1.0, -8.0, 13.0, 0.0, -13.0, 8.0, -1.0], 8.0 * h.powi(3)),
            4 => (&[-1.0, 12.0, -39.0, 56.0, -39.0, 12.0, -1.0], 6.0 * h.powi(4)),
            _ => panic!("xi derivatives above order 4 are not supported"),
        };
        let mut out = vec![Complex64::new(0.0, 0.0); nx * nxi];
        for i in 0..nx {
            let row = &self.values[i * nxi..(i + 1) * nxi];
            for j in 3..nxi - 3 {
                let mut acc = Complex64::new(0.0, 0.0);
                for (s, &c) in stencil.iter().enumerate() {
                    if c != 0.0 {
                        acc += c * row[j + s - 3];
                    }
                }
                out[i * nxi + j] = acc / denom;
            }
        }
        SymbolGrid { circumference: self.circumference, spec: self.spec, values: out }
    }
}

/// Root of `rho^2 + r0 - m z = 0` with `Im rho > 0`.
pub fn rho(r0: f64, m: f64, z: Complex64) -> Result<Complex64> {
    if !(r0.is_finite() && m.is_finite() && z.re.is_finite() && z.im.is_finite()) {
        return Err(Error::NonFinite);
    }
    if !(m > 0.0) || r0 < 0.0 {
        return Err(Error::InvalidInput(format!("need m > 0 and r0 >= 0, got m={m}, r0={r0}")));
    }
    let w = m * z - r0;
    if w.im == 0.0 && w.re >= 0.0 {
        return Err(Error::BranchFailure { r0, m, z });
    }
    let s = w.sqrt();
    Ok(if s.im > 0.0 { s } else { -s })
}

/// Smooth monotone step: 1 on `s <= 1`, 0 on `s >= 2`.
pub fn smooth_step(s: f64) -> f64 {
    if s <= 1.0 {
        return 1.0;
    }
    if s >= 2.0 {
        return 0.0;
    }
    let g = |t: f64| (-1.0 / t).exp();
    let a = g(2.0 - s);
    let b = g(s - 1.0);
    a / (a + b)
}

/// `chi = phi(delta0 r0)`.
pub fn chi_cutoff(r0: f64, delta0: f64) -> f64 {
    smooth_step(delta0 * r0)
}

/// `0.4 min(1/m1, 1/m2)` over the boundary sample.
pub fn default_delta0(mp: &MediumPair, circumference: f64) -> f64 {
    0.4 * mp.min_inv_m(circumference, 256)
}

pub fn default_delta0_single(m: f64) -> f64 {
    0.4 / m
}

/// Which `rho` bounds to test.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RhoBound {
    /// `Im rho >= m |Im z| / (2 |rho|)`.
    ImaginaryPart,
    /// `|rho| >= C sqrt(|Im z|)`.
    Modulus,
    /// `C~ sqrt(r0 + 1) >= 2 Im rho >= |rho| >= C sqrt(r0 + 1)`.
    Elliptic,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RhoBoundReport {
    pub samples: usize,
    /// Minimum of `2 Im rho |rho| / (m |Im z|)`.
    pub imag_ratio_min: Option<f64>,
    /// Fitted `C` in `|rho| >= C sqrt(|Im z|)`.
    pub modulus_c: Option<f64>,
    /// Minimum of `2 Im rho / |rho|` on the elliptic domain.
    pub elliptic_ratio_min: Option<f64>,
    pub elliptic_c_lower: Option<f64>,
    pub elliptic_c_upper: Option<f64>,
    pub elliptic_samples: usize,
    pub passes: bool,
}

/// Samples the requested bounds over every node of `grid`, with
/// `r0 = xi^2` and `m` evaluated at the `x` nodes.
pub fn check_rho_bounds(
    sp: &SpectralPoint,
    geom: &BoundaryGeometry,
    m: &BoundaryFunction,
    grid: &GridSpec,
    bounds: &[RhoBound],
) -> Result<RhoBoundReport> {
    let z = sp.z;
    for b in bounds {
        if matches!(b, RhoBound::ImaginaryPart | RhoBound::Modulus) && sp.zone == Zone::Z2 {
            return Err(Error::ZoneMismatch(format!("{b:?} bound holds on Z1 and Z3 only")));
        }
    }
    let circ = geom.circumference();
    let mut rep = RhoBoundReport { passes: true, ..Default::default() };
    let mut imag_min = f64::INFINITY;
    let mut mod_min = f64::INFINITY;
    let mut ell_ratio = f64::INFINITY;
    let mut ell_lo = f64::INFINITY;
    let mut ell_hi: f64 = 0.0;
    for i in 0..grid.nx {
        let x = circ * i as f64 / grid.nx as f64;
        let mv = m.eval(x, circ);
        for j in 0..grid.nxi {
            let r0 = geom.r0(x, grid.xi(j));
            let p = rho(r0, mv, z)?;
            rep.samples += 1;
            if z.im != 0.0 {
                imag_min = imag_min.min(2.0 * p.im * p.norm() / (mv * z.im.abs()));
                mod_min = mod_min.min(p.norm() / z.im.abs().sqrt());
            }
            let in_domain = sp.zone == Zone::Z2 || r0 >= 2.0 * mv;
            if in_domain {
                rep.elliptic_samples += 1;
                let s = (r0 + 1.0).sqrt();
                ell_ratio = ell_ratio.min(2.0 * p.im / p.norm());
                ell_lo = ell_lo.min(p.norm() / s);
                ell_hi = ell_hi.max(2.0 * p.im / s);
            }
        }
    }
    for b in bounds {
        match b {
            RhoBound::ImaginaryPart => {
                rep.imag_ratio_min = Some(imag_min);
                rep.passes &= imag_min >= 1.0 - 1e-12;
            }
            RhoBound::Modulus => {
                rep.modulus_c = Some(mod_min);
                rep.passes &= mod_min > 0.0 && mod_min.is_finite();
            }
            RhoBound::Elliptic => {
                if rep.elliptic_samples == 0 {
                    return Err(Error::InsufficientData("no grid node in the elliptic domain".into()));
                }
                rep.elliptic_ratio_min = Some(ell_ratio);
                rep.elliptic_c_lower = Some(ell_lo);
                rep.elliptic_c_upper = Some(ell_hi);
                rep.passes &= ell_ratio >= 1.0 - 1e-12 && ell_lo > 0.0 && ell_hi.is_finite();
            }
        }
    }
    Ok(rep)
}

/// Parameters of a symbol class `S^ell_{delta1, delta2}(mu)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassParams {
    pub ell: f64,
    pub delta1: f64,
    pub delta2: f64,
    pub max_order: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassEstimate {
    pub params: ClassParams,
    pub norm: f64,
    pub refined_norm: f64,
    /// Largest contribution and its `(alpha, beta)`.
    pub worst: (u32, u32),
}

/// Class seminorm of a gridded symbol against a gridded weight: the maximum
/// over `alpha + beta <= max_order` of
/// `sup |d_x^alpha d_xi^beta a| mu^(-ell + delta1 alpha + delta2 beta)`.
pub fn class_norm_on_grid(a: &SymbolGrid, mu: &SymbolGrid, p: &ClassParams) -> Result<(f64, (u32, u32))> {
    if p.max_order > 4 {
        return Err(Error::InvalidInput("class norms support derivatives up to order 4".into()));
    }
    let nxi = a.spec.nxi;
    let mut best = (0.0, (0, 0));
    for alpha in 0..=p.max_order {
        let ax = a.dx_spectral(alpha);
        for beta in 0..=(p.max_order - alpha) {
            let d = ax.dxi_fd(beta);
            let e = -p.ell + p.delta1 * alpha as f64 + p.delta2 * beta as f64;
            let (lo, hi) = if beta == 0 { (0, nxi) } else { (3, nxi - 3) };
            let mut sup: f64 = 0.0;
            for i in 0..a.spec.nx {
                for j in lo..hi {
                    let k = i * nxi + j;
                    sup = sup.max(d.values[k].norm() * mu.values[k].re.powf(e));
                }
            }
            if sup > best.0 {
                best = (sup, (alpha, beta));
            }
        }
    }
    Ok(best)
}

/// Class seminorm of `a` with weight `mu`, evaluated on `grid` and on its 2x
/// refinement; fails when the two disagree by 10% or more.
pub fn class_norm<F, W>(
    a: F,
    mu: W,
    params: &ClassParams,
    circumference: f64,
    grid: &GridSpec,
) -> Result<ClassEstimate>
where
    F: Fn(f64, f64) -> Complex64 + Sync,
    W: Fn(f64, f64) -> f64 + Sync,
{
    let eval = |g: &GridSpec| -> Result<(f64, (u32, u32))> {
        let ag = SymbolGrid::from_fn(circumference, *g, &a);
        let mg = SymbolGrid::from_fn(circumference, *g, |x, xi| Complex64::new(mu(x, xi), 0.0));
        class_norm_on_grid(&ag, &mg, params)
    };
    let (n1, worst) = eval(grid)?;
    let (n2, _) = eval(&grid.refined())?;
    let change = if n1 == 0.0 { if n2 == 0.0 { 0.0 } else { 1.0 } } else { (n2 - n1).abs() / n1 };
    if change >= 0.1 {
        return Err(Error::GridTooCoarse(100.0 * change));
    }
    Ok(ClassEstimate { params: *params, norm: n1, refined_norm: n2, worst })
}

fn check_transmission_condition(mp: &MediumPair, circ: f64, nodes: usize) -> Result<()> {
    for p in mp.sample(circ, nodes) {
        let a = p.c1 * p.n1;
        let b = p.c2 * p.n2;
        if (a - b).abs() <= 1e-12 * a.abs().max(b.abs()) {
            return Err(Error::ConditionViolated("contrast", format!("c1 n1 = c2 n2 = {a} on the boundary")));
        }
    }
    Ok(())
}

/// `c1 rho1 - c2 rho2` on the grid.
pub fn inversion_symbol(
    mp: &MediumPair,
    sp: &SpectralPoint,
    geom: &BoundaryGeometry,
    grid: &GridSpec,
) -> Result<SymbolGrid> {
    let circ = geom.circumference();
    check_transmission_condition(mp, circ, grid.nx)?;
    SymbolGrid::try_from_fn(circ, *grid, |x, xi| {
        let p = mp.at(x, circ);
        let r0 = geom.r0(x, xi);
        Ok(p.c1 * rho(r0, p.m1(), sp.z)? - p.c2 * rho(r0, p.m2(), sp.z)?)
    })
}

/// Right side of the factored form
/// `c1 rho1 - c2 rho2 = c~ (z - c0 r0) / (c1 rho1 + c2 rho2)` with
/// `c~ = c1 n1 - c2 n2` and `c0 = (c1^2 - c2^2) / c~`.
pub fn inversion_factored(p: &MediaAt, r0: f64, z: Complex64) -> Result<Complex64> {
    let ct = p.c1 * p.n1 - p.c2 * p.n2;
    let c0 = (p.c1 * p.c1 - p.c2 * p.c2) / ct;
    let s = p.c1 * rho(r0, p.m1(), z)? + p.c2 * rho(r0, p.m2(), z)?;
    Ok(ct * (z - c0 * r0) / s)
}

/// Largest relative gap between the direct and factored forms on the grid.
pub fn inversion_identity_defect(
    mp: &MediumPair,
    sp: &SpectralPoint,
    geom: &BoundaryGeometry,
    grid: &GridSpec,
) -> Result<f64> {
    let direct = inversion_symbol(mp, sp, geom, grid)?;
    let circ = geom.circumference();
    let fact = SymbolGrid::try_from_fn(circ, *grid, |x, xi| inversion_factored(&mp.at(x, circ), geom.r0(x, xi), sp.z))?;
    Ok(direct
        .values
        .iter()
        .zip(&fact.values)
        .map(|(a, b)| (a - b).norm() / a.norm())
        .fold(0.0, f64::max))
}

fn check_z2(z: Complex64) -> Result<()> {
    if Zone::Z2.contains(z) {
        Ok(())
    } else {
        Err(Error::ZoneMismatch(format!("kappa is defined on Z2, got z = {z}")))
    }
}

/// `kappa(z) = c1 d rho1/dz - c2 d rho2/dz = n1/(2 rho1) - n2/(2 rho2)`.
pub fn kappa(mp: &MediumPair, z: Complex64, geom: &BoundaryGeometry, grid: &GridSpec) -> Result<SymbolGrid> {
    check_z2(z)?;
    let circ = geom.circumference();
    SymbolGrid::try_from_fn(circ, *grid, |x, xi| kappa_at(&mp.at(x, circ), geom.r0(x, xi), z))
}

pub fn kappa_at(p: &MediaAt, r0: f64, z: Complex64) -> Result<Complex64> {
    let r1 = rho(r0, p.m1(), z)?;
    let r2 = rho(r0, p.m2(), z)?;
    Ok(p.n1 / (2.0 * r1) - p.n2 / (2.0 * r2))
}

/// Single-fraction form of `kappa`:
/// `[z n1 n2 (c1 n1 - c2 n2) + c1 c2 (n2^2 - n1^2) r0] / [2 c1 c2 rho1 rho2 (n1 rho2 + n2 rho1)]`.
pub fn kappa_closed_form(p: &MediaAt, r0: f64, z: Complex64) -> Result<Complex64> {
    let r1 = rho(r0, p.m1(), z)?;
    let r2 = rho(r0, p.m2(), z)?;
    let num = z * p.n1 * p.n2 * (p.c1 * p.n1 - p.c2 * p.n2) + p.c1 * p.c2 * (p.n2 * p.n2 - p.n1 * p.n1) * r0;
    let den = 2.0 * p.c1 * p.c2 * r1 * r2 * (p.n1 * r2 + p.n2 * r1);
    Ok(num / den)
}

/// `d kappa / dz = -n1^2/(4 c1 rho1^3) + n2^2/(4 c2 rho2^3)`.
pub fn kappa_derivative(p: &MediaAt, r0: f64, z: Complex64) -> Result<Complex64> {
    let r1 = rho(r0, p.m1(), z)?;
    let r2 = rho(r0, p.m2(), z)?;
    Ok(-p.n1 * p.n1 / (4.0 * p.c1 * r1.powu(3)) + p.n2 * p.n2 / (4.0 * p.c2 * r2.powu(3)))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KappaSignReport {
    /// `+1` or `-1` when `Im kappa` keeps one strict sign, else `0`.
    pub sign: i8,
    /// `min |Im kappa| <xi>` over the grid.
    pub fitted_c: f64,
}

pub fn kappa_sign_report(k: &SymbolGrid) -> KappaSignReport {
    let (mut pos, mut neg) = (true, true);
    let mut c = f64::INFINITY;
    for i in 0..k.spec.nx {
        for j in 0..k.spec.nxi {
            let v = k.get(i, j).im;
            pos &= v > 0.0;
            neg &= v < 0.0;
            c = c.min(v.abs() * japanese(k.xi(j)));
        }
    }
    let sign = if pos { 1 } else if neg { -1 } else { 0 };
    KappaSignReport { sign, fitted_c: c }
}
