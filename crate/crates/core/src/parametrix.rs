//! Boundary parametrix in normal coordinates.
//!
//! Near the boundary the operator is written as
//! `D_{x1}^2 + R(x) D_{x'}^2 - z m(x) + h (q_sharp D_{x1} + q_flat D_{x'}) + h^2 q_tilde`
//! with `D = -i h d` and `x1` the distance to the boundary. The phase
//! `phi = x' xi' + sum_k x1^k phi_k` and amplitude
//! `a = sum_j h^j sum_k x1^k a_{k,j}` are built from the Taylor jets of
//! these coefficients.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::symbol::{chi_cutoff, rho, BoundaryFunction, GridSpec, SpectralPoint, SymbolGrid};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };
const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// Complex periodic boundary function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplexBoundaryFunction {
    pub re: BoundaryFunction,
    pub im: BoundaryFunction,
}

impl ComplexBoundaryFunction {
    pub fn constant(v: Complex64) -> Self {
        ComplexBoundaryFunction {
            re: BoundaryFunction::constant(v.re),
            im: BoundaryFunction::constant(v.im),
        }
    }

    pub fn eval(&self, x: f64, circumference: f64) -> Complex64 {
        Complex64::new(self.re.eval(x, circumference), self.im.eval(x, circumference))
    }
}

/// Pointwise values of the operator coefficients.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Coefficients {
    pub r: f64,
    pub m: f64,
    pub q_sharp: Complex64,
    /// `q_flat(x, xi') = q_flat * xi'`.
    pub q_flat: Complex64,
    pub q_tilde: Complex64,
}

/// Operator coefficients near the boundary, exactly and as Taylor jets.
pub trait NormalForm: Sync {
    fn circumference(&self) -> f64;
    fn coefficients(&self, x1: f64, x: f64) -> Coefficients;
    fn jet(&self, order: usize) -> Result<NormalJet>;
}

/// Taylor coefficients in `x1` of the normal-form coefficients, each a
/// function of the boundary point.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalJet {
    pub order: usize,
    pub circumference: f64,
    pub r_coeffs: Vec<BoundaryFunction>,
    pub m_coeffs: Vec<BoundaryFunction>,
    pub q_sharp_coeffs: Vec<ComplexBoundaryFunction>,
    pub q_flat_coeffs: Vec<ComplexBoundaryFunction>,
    pub qtilde_coeffs: Vec<ComplexBoundaryFunction>,
}

impl NormalJet {
    fn validate(&self) -> Result<()> {
        let n = self.order;
        if n < 2 {
            return Err(Error::InvalidInput(format!("jet order {n} < 2")));
        }
        for (name, len) in [
            ("R", self.r_coeffs.len()),
            ("m", self.m_coeffs.len()),
            ("q_sharp", self.q_sharp_coeffs.len()),
            ("q_flat", self.q_flat_coeffs.len()),
            ("q_tilde", self.qtilde_coeffs.len()),
        ] {
            if len != n {
                return Err(Error::InvalidInput(format!("{name} jet has {len} terms, expected {n}")));
            }
        }
        Ok(())
    }

    fn sampled(&self, nx: usize) -> SampledJet {
        let l = self.circumference;
        let xs: Vec<f64> = (0..nx).map(|i| l * i as f64 / nx as f64).collect();
        let real = |v: &[BoundaryFunction]| -> Vec<Vec<f64>> {
            v.iter().map(|f| xs.iter().map(|&x| f.eval(x, l)).collect()).collect()
        };
        let cplx = |v: &[ComplexBoundaryFunction]| -> Vec<Vec<Complex64>> {
            v.iter().map(|f| xs.iter().map(|&x| f.eval(x, l)).collect()).collect()
        };
        SampledJet {
            r: real(&self.r_coeffs),
            m: real(&self.m_coeffs),
            qs: cplx(&self.q_sharp_coeffs),
            qf: cplx(&self.q_flat_coeffs),
            qt: cplx(&self.qtilde_coeffs),
        }
    }
}

struct SampledJet {
    r: Vec<Vec<f64>>,
    m: Vec<Vec<f64>>,
    qs: Vec<Vec<Complex64>>,
    qf: Vec<Vec<Complex64>>,
    qt: Vec<Vec<Complex64>>,
}

impl NormalForm for NormalJet {
    fn circumference(&self) -> f64 {
        self.circumference
    }

    /// The truncated Taylor polynomials, taken as exact coefficients.
    fn coefficients(&self, x1: f64, x: f64) -> Coefficients {
        let l = self.circumference;
        let horner_r = |v: &[BoundaryFunction]| v.iter().rev().fold(0.0, |acc, f| acc * x1 + f.eval(x, l));
        let horner_c = |v: &[ComplexBoundaryFunction]| v.iter().rev().fold(ZERO, |acc, f| acc * x1 + f.eval(x, l));
        Coefficients {
            r: horner_r(&self.r_coeffs),
            m: horner_r(&self.m_coeffs),
            q_sharp: horner_c(&self.q_sharp_coeffs),
            q_flat: horner_c(&self.q_flat_coeffs),
            q_tilde: horner_c(&self.qtilde_coeffs),
        }
    }

    fn jet(&self, order: usize) -> Result<NormalJet> {
        if order > self.order {
            return Err(Error::InvalidInput(format!("jet of order {} cannot be extended to {order}", self.order)));
        }
        let mut j = self.clone();
        j.order = order;
        j.r_coeffs.truncate(order);
        j.m_coeffs.truncate(order);
        j.q_sharp_coeffs.truncate(order);
        j.q_flat_coeffs.truncate(order);
        j.qtilde_coeffs.truncate(order);
        Ok(j)
    }
}

/// Disk of radius `radius` with constant `(c, n)`, boundary coordinates
/// `x1 = radius - r` and arc length.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiskNormalForm {
    pub radius: f64,
    pub c: f64,
    pub n: f64,
}

impl NormalForm for DiskNormalForm {
    fn circumference(&self) -> f64 {
        std::f64::consts::TAU * self.radius
    }

    fn coefficients(&self, x1: f64, _x: f64) -> Coefficients {
        let s = 1.0 - x1 / self.radius;
        Coefficients {
            r: 1.0 / (s * s),
            m: self.n / self.c,
            q_sharp: I / (self.radius - x1),
            q_flat: ZERO,
            q_tilde: ZERO,
        }
    }

    fn jet(&self, order: usize) -> Result<NormalJet> {
        disk_normal_jet(self.radius, self.c, self.n, order)
    }
}

/// `R_l = (l+1)/R^l`, `m_0 = n/c`, `q_sharp_l = i/R^(l+1)`, the rest zero.
pub fn disk_normal_jet(radius: f64, c: f64, n: f64, order: usize) -> Result<NormalJet> {
    if !(2..=8).contains(&order) {
        return Err(Error::InvalidInput(format!("disk jet order {order} outside 2..=8")));
    }
    if !(radius > 0.0 && c > 0.0 && n > 0.0) {
        return Err(Error::InvalidInput("radius, c and n must be positive".into()));
    }
    let k = BoundaryFunction::constant;
    let kc = |v: Complex64| ComplexBoundaryFunction::constant(v);
    Ok(NormalJet {
        order,
        circumference: std::f64::consts::TAU * radius,
        r_coeffs: (0..order).map(|l| k((l + 1) as f64 / radius.powi(l as i32))).collect(),
        m_coeffs: (0..order).map(|l| k(if l == 0 { n / c } else { 0.0 })).collect(),
        q_sharp_coeffs: (0..order).map(|l| kc(I / radius.powi(l as i32 + 1))).collect(),
        q_flat_coeffs: (0..order).map(|_| kc(ZERO)).collect(),
        qtilde_coeffs: (0..order).map(|_| kc(ZERO)).collect(),
    })
}

/// Grid function with its first two `x'` derivatives.
#[derive(Debug, Clone, PartialEq)]
pub struct JetTerm {
    pub value: SymbolGrid,
    pub dx: SymbolGrid,
    pub dxx: SymbolGrid,
}

impl JetTerm {
    fn new(value: SymbolGrid) -> Self {
        let dx = value.dx_spectral(1);
        let dxx = value.dx_spectral(2);
        JetTerm { value, dx, dxx }
    }

    fn zero(like: &SymbolGrid) -> Self {
        let z = like.map(|_| ZERO);
        JetTerm { value: z.clone(), dx: z.clone(), dxx: z }
    }
}

/// `phi_k` for `k = 1..=order`; `phi_0 = x' xi'` is implicit.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseJet {
    pub order: usize,
    pub z: Complex64,
    terms: Vec<JetTerm>,
    xi: SymbolGrid,
}

impl PhaseJet {
    /// `phi_k` for `1 <= k <= order`.
    pub fn phi(&self, k: usize) -> &SymbolGrid {
        &self.terms[k - 1].value
    }

    pub fn rho(&self) -> &SymbolGrid {
        self.phi(1)
    }

    pub fn spec(&self) -> GridSpec {
        self.xi.spec
    }

    pub fn circumference(&self) -> f64 {
        self.xi.circumference
    }

    fn at(&self, k: usize, node: usize) -> Complex64 {
        if k == 0 || k > self.order {
            ZERO
        } else {
            self.terms[k - 1].value.values[node]
        }
    }

    fn dx_at(&self, k: usize, node: usize) -> Complex64 {
        if k == 0 {
            self.xi.values[node]
        } else if k > self.order {
            ZERO
        } else {
            self.terms[k - 1].dx.values[node]
        }
    }

    fn dxx_at(&self, k: usize, node: usize) -> Complex64 {
        if k == 0 || k > self.order {
            ZERO
        } else {
            self.terms[k - 1].dxx.values[node]
        }
    }

    /// Keep `phi_1..phi_keep`.
    pub fn truncate(&self, keep: usize) -> PhaseJet {
        let keep = keep.clamp(1, self.order);
        PhaseJet { order: keep, z: self.z, terms: self.terms[..keep].to_vec(), xi: self.xi.clone() }
    }

    /// Replace `phi_k` by `f * phi_k`.
    pub fn scale_term(&self, k: usize, f: Complex64) -> PhaseJet {
        let mut out = self.clone();
        out.terms[k - 1] = JetTerm::new(self.terms[k - 1].value.map(|v| v * f));
        out
    }

    /// `sum_{k>=1} x1^k phi_k` at one node.
    pub fn eval_normal(&self, x1: f64, node: usize) -> Complex64 {
        (1..=self.order).rev().fold(ZERO, |acc, k| (acc + self.at(k, node)) * x1)
    }
}

fn check_rho(rho: &SymbolGrid) -> Result<()> {
    let m = rho.values.iter().map(|v| v.norm()).fold(f64::INFINITY, f64::min);
    if m < 1e-12 {
        return Err(Error::DegenerateRho(m));
    }
    Ok(())
}

/// Solves the eikonal recursion for `phi_1 = rho, phi_2, ..., phi_N`, which
/// makes `(d_{x1} phi)^2 + R (d' phi)^2 - z m = O(x1^N)`.
pub fn solve_eikonal(jet: &NormalJet, sp: &SpectralPoint, grid: &GridSpec) -> Result<PhaseJet> {
    jet.validate()?;
    let n = jet.order;
    let l = jet.circumference;
    let s = jet.sampled(grid.nx);
    let nxi = grid.nxi;
    let z = sp.z;
    let xi = SymbolGrid::from_fn(l, *grid, |_, xi| Complex64::new(xi, 0.0));
    let rho_grid = SymbolGrid::try_from_fn(l, *grid, |x, xi| {
        let i = ((x / l) * grid.nx as f64).round() as usize % grid.nx;
        rho(s.r[0][i] * xi * xi, s.m[0][i], z)
    })?;
    check_rho(&rho_grid)?;
    let mut phase = PhaseJet { order: 1, z, terms: vec![JetTerm::new(rho_grid)], xi };
    for kk in 1..n {
        let mut next = phase.terms[0].value.clone();
        for (node, out) in next.values.iter_mut().enumerate() {
            let i = node / nxi;
            let mut acc = ZERO;
            for k in 1..kk {
                let j = kk - k;
                acc += ((k + 1) * (j + 1)) as f64 * phase.at(k + 1, node) * phase.at(j + 1, node);
            }
            for ll in 0..=kk {
                for k in 0..=(kk - ll) {
                    let j = kk - ll - k;
                    acc += s.r[ll][i] * phase.dx_at(k, node) * phase.dx_at(j, node);
                }
            }
            acc -= z * s.m[kk][i];
            *out = -acc / (2.0 * (kk + 1) as f64 * phase.at(1, node));
        }
        phase.terms.push(JetTerm::new(next));
        phase.order += 1;
    }
    Ok(phase)
}

/// Which form of the transport recursion to solve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TransportForm {
    /// Includes the `-i (d_{x1}^2 phi + R d'^2 phi) a` term produced by
    /// conjugating the operator with `exp(i phi / h)`.
    Conjugated,
    /// Omits that term.
    WithoutPhaseCurvature,
}

/// `a_{k,j}` for `k = 0..=N`, `j = 0..N`.
#[derive(Debug, Clone, PartialEq)]
pub struct AmplitudeJet {
    pub order: usize,
    pub form: TransportForm,
    pub psi: BoundaryFunction,
    terms: Vec<Vec<JetTerm>>,
}

impl AmplitudeJet {
    /// `a_{k,j}`.
    pub fn coeff(&self, k: usize, j: usize) -> &SymbolGrid {
        &self.terms[j][k].value
    }

    fn at(&self, k: usize, j: usize, node: usize) -> Complex64 {
        if j >= self.order || k > self.order {
            ZERO
        } else {
            self.terms[j][k].value.values[node]
        }
    }

    fn dx_at(&self, k: usize, j: usize, node: usize) -> Complex64 {
        if j >= self.order || k > self.order {
            ZERO
        } else {
            self.terms[j][k].dx.values[node]
        }
    }

    fn dxx_at(&self, k: usize, j: usize, node: usize) -> Complex64 {
        if j >= self.order || k > self.order {
            ZERO
        } else {
            self.terms[j][k].dxx.values[node]
        }
    }
}

/// Solves the transport recursion level by level in `h` and order by order
/// in `x1`, isolating the `-2i (K+1) rho a_{K+1,j}` term.
pub fn solve_transport(
    jet: &NormalJet,
    phase: &PhaseJet,
    psi: &BoundaryFunction,
    form: TransportForm,
) -> Result<AmplitudeJet> {
    jet.validate()?;
    let n = jet.order;
    if phase.order < n {
        return Err(Error::InvalidInput(format!("phase of order {} for jet of order {n}", phase.order)));
    }
    check_rho(phase.rho())?;
    let grid = phase.spec();
    let l = phase.circumference();
    let s = jet.sampled(grid.nx);
    let nxi = grid.nxi;
    let like = phase.rho();
    let psi_grid = SymbolGrid::from_fn(l, grid, |x, _| Complex64::new(psi.eval(x, l), 0.0));

    let mut amp = AmplitudeJet { order: n, form, psi: psi.clone(), terms: Vec::with_capacity(n) };
    for j in 0..n {
        let mut level = Vec::with_capacity(n + 1);
        level.push(if j == 0 { JetTerm::new(psi_grid.clone()) } else { JetTerm::zero(like) });
        amp.terms.push(level);
        for kk in 0..n {
            let mut next = like.clone();
            for (node, out) in next.values.iter_mut().enumerate() {
                let i = node / nxi;
                let a = |k: usize| amp.terms[j].get(k).map_or(ZERO, |t| t.value.values[node]);
                let da = |k: usize| amp.terms[j].get(k).map_or(ZERO, |t| t.dx.values[node]);
                let mut lhs = ZERO;
                for nu in 1..=kk {
                    let k = kk - nu;
                    lhs += -2.0 * I * ((nu + 1) * (k + 1)) as f64 * phase.at(nu + 1, node) * a(k + 1);
                }
                for ll in 0..=kk {
                    for nu in 0..=(kk - ll) {
                        let k = kk - ll - nu;
                        lhs += -2.0 * I * s.r[ll][i] * phase.dx_at(nu, node) * da(k);
                        let q = s.qs[ll][i] * (nu + 1) as f64 * phase.at(nu + 1, node)
                            + s.qf[ll][i] * phase.dx_at(nu, node);
                        lhs += q * a(k);
                        if form == TransportForm::Conjugated {
                            lhs += -I * s.r[ll][i] * phase.dxx_at(nu, node) * a(k);
                        }
                    }
                }
                if form == TransportForm::Conjugated {
                    for nu in 0..=kk {
                        let k = kk - nu;
                        lhs += -I * ((nu + 2) * (nu + 1)) as f64 * phase.at(nu + 2, node) * a(k);
                    }
                }
                let mut rhs = ZERO;
                if j > 0 {
                    let p = j - 1;
                    rhs += ((kk + 2) * (kk + 1)) as f64 * amp.at(kk + 2, p, node);
                    for ll in 0..=kk {
                        let k = kk - ll;
                        rhs += s.r[ll][i] * amp.dxx_at(k, p, node)
                            + I * s.qs[ll][i] * (k + 1) as f64 * amp.at(k + 1, p, node)
                            + I * s.qf[ll][i] * amp.dx_at(k, p, node)
                            - s.qt[ll][i] * amp.at(k, p, node);
                    }
                }
                *out = (rhs - lhs) / (-2.0 * I * (kk + 1) as f64 * phase.at(1, node));
            }
            amp.terms[j].push(JetTerm::new(next));
        }
    }
    Ok(amp)
}

/// `a_{1,0}` from first principles for the recursion without the phase
/// curvature term: `-(i/2) q(0, x', 1, xi'/rho) psi - <R xi', grad psi> / rho`.
pub fn first_amplitude_without_curvature(jet: &NormalJet, phase: &PhaseJet, psi: &BoundaryFunction) -> SymbolGrid {
    let l = phase.circumference();
    let grid = phase.spec();
    let s = jet.sampled(grid.nx);
    let psi_g = SymbolGrid::from_fn(l, grid, |x, _| Complex64::new(psi.eval(x, l), 0.0));
    let dpsi = psi_g.dx_spectral(1);
    let mut out = phase.rho().clone();
    for (node, v) in out.values.iter_mut().enumerate() {
        let i = node / grid.nxi;
        let r = phase.at(1, node);
        let xi = phase.xi.values[node];
        let q = s.qs[0][i] + s.qf[0][i] * xi / r;
        *v = -0.5 * I * q * psi_g.values[node] - s.r[0][i] * xi * dpsi.values[node] / r;
    }
    out
}

/// `tau = psi rho - i h sum_j h^j a_{1,j}`.
pub fn boundary_symbol_tau(amp: &AmplitudeJet, phase: &PhaseJet, h: f64) -> SymbolGrid {
    let rho = phase.rho();
    let psi = amp.coeff(0, 0);
    let mut out = rho.zip_with(psi, |r, p| r * p);
    let mut hp = h;
    for j in 0..amp.order {
        let a1 = amp.coeff(1, j);
        for (o, a) in out.values.iter_mut().zip(&a1.values) {
            *o -= I * hp * a;
        }
        hp *= h;
    }
    out
}

/// Correction symbol of the form
/// `b = -(i/2)(1-chi) psi q(0,x',1,xi'/sqrt(r0)) - (1/2)(1-chi) <R xi'/sqrt(r0), grad psi>`.
pub fn cutoff_symbol_b(form: &dyn NormalForm, psi: &BoundaryFunction, grid: &GridSpec, delta0: f64) -> Result<SymbolGrid> {
    let l = form.circumference();
    let jet = form.jet(2)?;
    let s = jet.sampled(grid.nx);
    let psi_g = SymbolGrid::from_fn(l, *grid, |x, _| Complex64::new(psi.eval(x, l), 0.0));
    let dpsi = psi_g.dx_spectral(1);
    let mut out = psi_g.clone();
    for (node, v) in out.values.iter_mut().enumerate() {
        let i = node / grid.nxi;
        let xi = grid.xi(node % grid.nxi);
        let r0 = s.r[0][i] * xi * xi;
        let cut = 1.0 - chi_cutoff(r0, delta0);
        if cut == 0.0 {
            *v = ZERO;
            continue;
        }
        let unit = xi / r0.sqrt();
        let q = s.qs[0][i] + s.qf[0][i] * unit;
        *v = -0.5 * I * cut * psi_g.values[node] * q - 0.5 * cut * s.r[0][i] * unit * dpsi.values[node];
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseBoundReport {
    pub delta: f64,
    pub passes: bool,
    /// Smallest `Im phi(x1) - x1 Im rho / 2` over the samples at `delta`.
    pub min_margin: f64,
    /// Largest admissible `delta` on `[0, delta_cap]` to resolution `1e-3`.
    pub delta_star: f64,
}

fn phase_bound_margin(phase: &PhaseJet, delta: f64, samples: usize) -> f64 {
    let rho = phase.rho();
    let mut worst = f64::INFINITY;
    for node in 0..rho.values.len() {
        let r = rho.values[node];
        let top = 2.0 * delta * r.norm().powi(3).min(1.0);
        for s in 1..=samples {
            let x1 = top * s as f64 / samples as f64;
            let margin = phase.eval_normal(x1, node).im - 0.5 * x1 * r.im;
            // Scale-free margin: compare against x1 Im rho.
            worst = worst.min(margin / (x1 * r.im));
        }
    }
    worst
}

/// Checks `Im phi >= x1 Im rho / 2` for `0 <= x1 <= 2 delta min(1, |rho|^3)`.
pub fn phase_lower_bound_check(phase: &PhaseJet, delta: f64, delta_cap: f64) -> Result<PhaseBoundReport> {
    if !(delta > 0.0) || !(delta_cap > 0.0) {
        return Err(Error::InvalidInput("delta must be positive".into()));
    }
    const SAMPLES: usize = 48;
    let m = phase_bound_margin(phase, delta, SAMPLES);
    let ok = |d: f64| phase_bound_margin(phase, d, SAMPLES) >= -1e-12;
    let delta_star = if ok(delta_cap) {
        delta_cap
    } else {
        let (mut lo, mut hi) = (0.0, delta_cap);
        while hi - lo > 1e-3 {
            let mid = 0.5 * (lo + hi);
            if ok(mid) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    };
    Ok(PhaseBoundReport { delta, passes: m >= -1e-12, min_margin: m, delta_star })
}

/// Residual ratios `|.| / x1^N` of the eikonal and of each `h`-order of the
/// conjugated operator applied to the parametrix, with exact coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualSample {
    pub x1: f64,
    pub eikonal_ratio: f64,
    /// Indexed by the power of `h`, `0..=N`.
    pub transport_ratio: Vec<f64>,
}

pub fn residual_ratios(
    form: &dyn NormalForm,
    phase: &PhaseJet,
    amp: &AmplitudeJet,
    x1_values: &[f64],
) -> Vec<ResidualSample> {
    let n = amp.order;
    let grid = phase.spec();
    let l = phase.circumference();
    let nxi = grid.nxi;
    let z = phase.z;
    x1_values
        .iter()
        .map(|&x1| {
            let coeffs: Vec<Coefficients> =
                (0..grid.nx).map(|i| form.coefficients(x1, l * i as f64 / grid.nx as f64)).collect();
            let mut e_max: f64 = 0.0;
            let mut t_max = vec![0.0f64; n + 1];
            for node in 0..phase.rho().values.len() {
                let c = coeffs[node / nxi];
                let p1 = poly(x1, (1..=phase.order).map(|k| k as f64 * phase.at(k, node)).collect());
                let p11 = poly(
                    x1,
                    (2..=phase.order).map(|k| (k * (k - 1)) as f64 * phase.at(k, node)).collect(),
                );
                let pd = poly(x1, (0..=phase.order).map(|k| phase.dx_at(k, node)).collect());
                let pdd = poly(x1, (0..=phase.order).map(|k| phase.dxx_at(k, node)).collect());
                let e = p1 * p1 + c.r * pd * pd - z * c.m;
                e_max = e_max.max(e.norm());
                let amp_at = |j: usize| -> [Complex64; 5] {
                    if j >= n {
                        return [ZERO; 5];
                    }
                    let v = poly(x1, (0..=n).map(|k| amp.at(k, j, node)).collect());
                    let d1 = poly(x1, (1..=n).map(|k| k as f64 * amp.at(k, j, node)).collect());
                    let d11 = poly(x1, (2..=n).map(|k| (k * (k - 1)) as f64 * amp.at(k, j, node)).collect());
                    let dp = poly(x1, (0..=n).map(|k| amp.dx_at(k, j, node)).collect());
                    let dpp = poly(x1, (0..=n).map(|k| amp.dxx_at(k, j, node)).collect());
                    [v, d1, d11, dp, dpp]
                };
                let t_op = |a: &[Complex64; 5]| {
                    -2.0 * I * p1 * a[1] - 2.0 * I * c.r * pd * a[3] - I * (p11 + c.r * pdd) * a[0]
                        + (c.q_sharp * p1 + c.q_flat * pd) * a[0]
                };
                let l_op = |a: &[Complex64; 5]| {
                    a[2] + c.r * a[4] + I * c.q_sharp * a[1] + I * c.q_flat * a[3] - c.q_tilde * a[0]
                };
                for (p, slot) in t_max.iter_mut().enumerate() {
                    let mut r = e * amp_at(p)[0];
                    if p >= 1 {
                        r += t_op(&amp_at(p - 1));
                    }
                    if p >= 2 {
                        r -= l_op(&amp_at(p - 2));
                    }
                    *slot = slot.max(r.norm());
                }
            }
            let scale = x1.powi(n as i32);
            ResidualSample {
                x1,
                eikonal_ratio: e_max / scale,
                transport_ratio: t_max.iter().map(|v| v / scale).collect(),
            }
        })
        .collect()
}

fn poly(x: f64, c: Vec<Complex64>) -> Complex64 {
    c.iter().rev().fold(ZERO, |acc, &v| acc * x + v)
}
