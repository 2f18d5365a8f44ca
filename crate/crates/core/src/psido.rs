//! Semiclassical quantization on the circle `R / L Z`.
//!
//! `Op_h(a)` acts on `f = sum_m f_m e^{2 pi i m x / L}` by
//! `sum_m a(x, 2 pi h m / L) f_m e^{2 pi i m x / L}` (left quantization).
//! In the Fourier basis this is the matrix `A[n, m] = a_hat_{n-m}(xi_m)`
//! where `a_hat_k(xi)` is the `k`-th Fourier coefficient of `a(., xi)`.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::symbol::SymbolGrid;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };
pub const MAX_POWER_ITERATIONS: usize = 10_000;
pub const POWER_TOLERANCE: f64 = 1e-8;

/// Trigonometric polynomial `sum_{|m| <= M} f_m e^{2 pi i m x / L}`.
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodicFunction {
    pub circumference: f64,
    /// `coeffs[m + M]` holds `f_m`.
    pub coeffs: Vec<Complex64>,
}

impl PeriodicFunction {
    pub fn new(circumference: f64, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() % 2 == 0 {
            return Err(Error::InvalidInput("coefficient count must be odd".into()));
        }
        Ok(PeriodicFunction { circumference, coeffs })
    }

    pub fn zeros(circumference: f64, max_mode: usize) -> Self {
        PeriodicFunction { circumference, coeffs: vec![ZERO; 2 * max_mode + 1] }
    }

    /// Single exponential `e^{2 pi i m x / L}`.
    pub fn mode(circumference: f64, max_mode: usize, m: i64) -> Self {
        let mut f = Self::zeros(circumference, max_mode);
        f.coeffs[(m + max_mode as i64) as usize] = Complex64::new(1.0, 0.0);
        f
    }

    /// Coefficients of `f` for `|m| <= max_mode`, from `4 max_mode + 4` samples.
    pub fn from_fn(circumference: f64, max_mode: usize, f: impl Fn(f64) -> Complex64) -> Self {
        let n = 4 * max_mode + 4;
        let mut buf: Vec<Complex64> = (0..n).map(|i| f(circumference * i as f64 / n as f64)).collect();
        FftPlanner::new().plan_fft_forward(n).process(&mut buf);
        let coeffs = (-(max_mode as i64)..=max_mode as i64)
            .map(|m| buf[m.rem_euclid(n as i64) as usize] / n as f64)
            .collect();
        PeriodicFunction { circumference, coeffs }
    }

    pub fn max_mode(&self) -> usize {
        self.coeffs.len() / 2
    }

    pub fn coeff(&self, m: i64) -> Complex64 {
        let mm = self.max_mode() as i64;
        if m.abs() > mm {
            ZERO
        } else {
            self.coeffs[(m + mm) as usize]
        }
    }

    pub fn eval(&self, x: f64) -> Complex64 {
        let mm = self.max_mode() as i64;
        self.coeffs
            .iter()
            .enumerate()
            .map(|(j, c)| c * Complex64::from_polar(1.0, TAU * (j as i64 - mm) as f64 * x / self.circumference))
            .sum()
    }

    /// `||f||_{L^2} = sqrt(L sum |f_m|^2)`.
    pub fn l2_norm(&self) -> f64 {
        (self.circumference * self.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>()).sqrt()
    }
}

/// Dense matrix of `Op_h(a)` with rows `|n| <= rows` and columns `|m| <= cols`.
#[derive(Debug, Clone, PartialEq)]
pub struct OpMatrix {
    pub rows: usize,
    pub cols: usize,
    /// Row-major, `(2 rows + 1) x (2 cols + 1)`.
    pub data: Vec<Complex64>,
}

impl OpMatrix {
    fn nr(&self) -> usize {
        2 * self.rows + 1
    }

    fn nc(&self) -> usize {
        2 * self.cols + 1
    }

    pub fn get(&self, n: i64, m: i64) -> Complex64 {
        self.data[(n + self.rows as i64) as usize * self.nc() + (m + self.cols as i64) as usize]
    }

    pub fn apply(&self, v: &[Complex64]) -> Vec<Complex64> {
        let nc = self.nc();
        self.data.par_chunks(nc).map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum()).collect()
    }

    pub fn apply_adjoint(&self, v: &[Complex64]) -> Vec<Complex64> {
        let (nr, nc) = (self.nr(), self.nc());
        (0..nc)
            .into_par_iter()
            .map(|m| (0..nr).map(|n| self.data[n * nc + m].conj() * v[n]).sum())
            .collect()
    }

    /// `self * other`.
    pub fn mul(&self, other: &OpMatrix) -> Result<OpMatrix> {
        if self.cols != other.rows {
            return Err(Error::InvalidInput("matrix shapes do not match".into()));
        }
        let (nk, nc) = (self.nc(), other.nc());
        let data = self
            .data
            .par_chunks(nk)
            .flat_map_iter(|row| {
                let mut out = vec![ZERO; nc];
                for (k, a) in row.iter().enumerate() {
                    if *a != ZERO {
                        for (o, b) in out.iter_mut().zip(&other.data[k * nc..(k + 1) * nc]) {
                            *o += a * b;
                        }
                    }
                }
                out
            })
            .collect();
        Ok(OpMatrix { rows: self.rows, cols: other.cols, data })
    }

    pub fn sub(&self, other: &OpMatrix) -> Result<OpMatrix> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::InvalidInput("matrix shapes do not match".into()));
        }
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect();
        Ok(OpMatrix { rows: self.rows, cols: self.cols, data })
    }
}

/// Values `a(x_i, xi)` for all grid rows, cubic Lagrange in `xi`, exact at nodes.
fn column_at(a: &SymbolGrid, xi: f64) -> Vec<Complex64> {
    let spec = a.spec;
    let t = (xi + spec.xi_max) / spec.dxi();
    let nearest = t.round();
    if (t - nearest).abs() < 1e-9 {
        let j = (nearest as usize).min(spec.nxi - 1);
        return (0..spec.nx).map(|i| a.get(i, j)).collect();
    }
    let j0 = (t.floor() as i64 - 1).clamp(0, spec.nxi as i64 - 4) as usize;
    let w: Vec<f64> = (0..4)
        .map(|p| {
            (0..4)
                .filter(|&q| q != p)
                .map(|q| (t - (j0 + q) as f64) / (p as f64 - q as f64))
                .product()
        })
        .collect();
    (0..spec.nx).map(|i| (0..4).map(|p| w[p] * a.get(i, j0 + p)).sum()).collect()
}

fn check_range(a: &SymbolGrid, h: f64, max_mode: usize) -> Result<()> {
    let need = TAU * h * max_mode as f64 / a.circumference;
    if need > a.spec.xi_max * (1.0 + 1e-12) {
        return Err(Error::FrequencyOutOfRange { needed: need, available: a.spec.xi_max });
    }
    Ok(())
}

/// Matrix of `Op_h(a)` from columns `|m| <= cols` to rows `|n| <= rows`.
///
/// Fourier coefficients of `a(., xi)` above the grid Nyquist limit are zero.
pub fn op_matrix_rect(a: &SymbolGrid, h: f64, rows: usize, cols: usize) -> Result<OpMatrix> {
    check_range(a, h, cols)?;
    let nx = a.spec.nx;
    let fft = FftPlanner::new().plan_fft_forward(nx);
    let nc = 2 * cols + 1;
    let columns: Vec<Vec<Complex64>> = (0..nc)
        .into_par_iter()
        .map(|c| {
            let m = c as i64 - cols as i64;
            let mut buf = column_at(a, TAU * h * m as f64 / a.circumference);
            fft.process(&mut buf);
            buf.iter().map(|v| v / nx as f64).collect()
        })
        .collect();
    let half = (nx as i64 - 1) / 2;
    let nr = 2 * rows + 1;
    let mut data = vec![ZERO; nr * nc];
    data.par_chunks_mut(nc).enumerate().for_each(|(r, row)| {
        let n = r as i64 - rows as i64;
        for (c, out) in row.iter_mut().enumerate() {
            let k = n - (c as i64 - cols as i64);
            if k.abs() <= half {
                *out = columns[c][k.rem_euclid(nx as i64) as usize];
            }
        }
    });
    Ok(OpMatrix { rows, cols, data })
}

/// Square `(2M + 1)` matrix of `Op_h(a)`.
pub fn op_matrix(a: &SymbolGrid, h: f64, max_mode: usize) -> Result<OpMatrix> {
    op_matrix_rect(a, h, max_mode, max_mode)
}

/// `Op_h(a) f`, truncated to the modes of `f`.
pub fn op_h_apply(a: &SymbolGrid, f: &PeriodicFunction, h: f64) -> Result<PeriodicFunction> {
    if (a.circumference - f.circumference).abs() > 1e-12 * a.circumference {
        return Err(Error::InvalidInput("circumference mismatch".into()));
    }
    let m = op_matrix(a, h, f.max_mode())?;
    Ok(PeriodicFunction { circumference: f.circumference, coeffs: m.apply(&f.coeffs) })
}

fn start_vector(dim: usize, seed: Option<u64>) -> Vec<Complex64> {
    match seed {
        None => vec![Complex64::new(1.0, 0.0); dim],
        Some(s) => {
            let mut rng = ChaCha8Rng::seed_from_u64(s);
            (0..dim).map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect()
        }
    }
}

fn norm2(v: &[Complex64]) -> f64 {
    v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
}

/// Largest singular value of a linear map given by `apply` and `adjoint`,
/// by power iteration on `A* A`.
pub fn power_norm(
    dim: usize,
    apply: impl Fn(&[Complex64]) -> Vec<Complex64>,
    adjoint: impl Fn(&[Complex64]) -> Vec<Complex64>,
    seed: Option<u64>,
) -> Result<f64> {
    let mut v = start_vector(dim, seed);
    let n0 = norm2(&v);
    v.iter_mut().for_each(|c| *c /= n0);
    let mut prev = f64::NAN;
    for _ in 0..MAX_POWER_ITERATIONS {
        let av = apply(&v);
        let sigma = norm2(&av);
        if sigma == 0.0 {
            return Ok(0.0);
        }
        if !sigma.is_finite() {
            return Err(Error::NonFinite);
        }
        if (sigma - prev).abs() <= POWER_TOLERANCE * sigma {
            return Ok(sigma);
        }
        prev = sigma;
        let mut w = adjoint(&av);
        let nw = norm2(&w);
        if nw == 0.0 {
            return Ok(sigma);
        }
        w.iter_mut().for_each(|c| *c /= nw);
        v = w;
    }
    Err(Error::NoConvergence(MAX_POWER_ITERATIONS))
}

pub fn matrix_norm(m: &OpMatrix, seed: Option<u64>) -> Result<f64> {
    power_norm(m.nc(), |v| m.apply(v), |v| m.apply_adjoint(v), seed)
}

/// `L^2` operator norm of `Op_h(a)` restricted to modes `|m| <= M`.
pub fn op_norm(a: &SymbolGrid, h: f64, max_mode: usize, seed: Option<u64>) -> Result<f64> {
    matrix_norm(&op_matrix(a, h, max_mode)?, seed)
}

/// `|| Op_h(a+) Op_h(a-) - Op_h(a+ a-) ||` on modes `|m| <= M`.
///
/// The intermediate space keeps every mode `Op_h(a-)` can reach from
/// `|m| <= M` on this grid, so the product is not polluted by truncation.
pub fn composition_defect(
    a_plus: &SymbolGrid,
    a_minus: &SymbolGrid,
    h: f64,
    max_mode: usize,
    seed: Option<u64>,
) -> Result<f64> {
    if a_plus.spec != a_minus.spec || (a_plus.circumference - a_minus.circumference).abs() > 0.0 {
        return Err(Error::InvalidInput("symbols live on different grids".into()));
    }
    let mid = max_mode + a_minus.spec.nx / 2;
    let ap = op_matrix_rect(a_plus, h, max_mode, mid)?;
    let am = op_matrix_rect(a_minus, h, mid, max_mode)?;
    let prod = a_plus.zip_with(a_minus, |p, q| p * q);
    let d = ap.mul(&am)?.sub(&op_matrix(&prod, h, max_mode)?)?;
    matrix_norm(&d, seed)
}
