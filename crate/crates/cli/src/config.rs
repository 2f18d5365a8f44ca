//! Experiment configuration, read from a single JSON file.

use std::path::Path;

use serde::{Deserialize, Serialize};
use tefree::disk::DiskConfig;
use tefree::regions::RegionSpec;
use tefree::rootscan::{Rect, ScanRegion};
use tefree::symbol::{GridSpec, MediumPair, SpectralPoint, Zone};
use tefree::Complex64;

use crate::Failure;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub disk: DiskSection,
    #[serde(default)]
    pub scan: Option<ScanSection>,
    #[serde(default)]
    pub semiclassical: Option<SemiclassicalSection>,
    #[serde(default)]
    pub regions: Vec<RegionSpec>,
    #[serde(default)]
    pub counting: Option<CountingSection>,
    #[serde(default)]
    pub outputs: OutputSection,
}

/// Disk radius and the media quadruple `(c1, n1, c2, n2)`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiskSection {
    #[serde(default = "one")]
    pub radius: f64,
    pub media: [f64; 4],
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ModeCutoff {
    Fixed(u32),
    Auto(AutoTag),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AutoTag {
    Auto,
}

impl Default for ModeCutoff {
    fn default() -> Self {
        ModeCutoff::Auto(AutoTag::Auto)
    }
}

/// Rectangle `re x im` in the eigenvalue plane.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanSection {
    pub re: [f64; 2],
    pub im: [f64; 2],
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default)]
    pub k_max: ModeCutoff,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ZPoint {
    pub re: f64,
    pub im: f64,
    /// Inferred from `z` when absent.
    #[serde(default)]
    pub zone: Option<Zone>,
    #[serde(default)]
    pub epsilon: f64,
}

impl ZPoint {
    pub fn z(&self) -> Complex64 {
        Complex64::new(self.re, self.im)
    }

    pub fn zone(&self) -> Result<Zone, Failure> {
        self.zone
            .or_else(|| Zone::of(self.z()))
            .ok_or_else(|| Failure::invalid(format!("z = {} lies on none of the zones", self.z())))
    }

    pub fn point(&self, h: f64) -> Result<SpectralPoint, Failure> {
        Ok(SpectralPoint::new(h, self.z(), self.zone()?, self.epsilon)?)
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub nx: usize,
    pub nxi: usize,
    pub xi_max: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompositionSection {
    pub max_mode: usize,
    #[serde(default = "default_nx")]
    pub nx: usize,
    /// Boundary media; the disk constants when absent.
    #[serde(default)]
    pub media: Option<MediumPair>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SemiclassicalSection {
    pub h: Vec<f64>,
    pub z: Vec<ZPoint>,
    #[serde(default = "default_order")]
    pub order: usize,
    #[serde(default)]
    pub grid: Option<GridSection>,
    /// Normal distances for the residual tables.
    #[serde(default = "default_x1")]
    pub x1: Vec<f64>,
    /// Which medium (1 or 2) the single-medium checks use.
    #[serde(default = "default_medium")]
    pub medium: u8,
    /// Mode cutoff of the DtN comparison is `modes_per_h / h`, capped at 2000.
    #[serde(default = "default_modes_per_h")]
    pub modes_per_h: f64,
    #[serde(default)]
    pub composition: Option<CompositionSection>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CountingSection {
    pub r: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default)]
    pub dir: Option<String>,
    #[serde(default = "yes")]
    pub json: bool,
    #[serde(default = "yes")]
    pub svg: bool,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection { dir: None, json: true, svg: true }
    }
}

fn one() -> f64 {
    1.0
}
fn yes() -> bool {
    true
}
fn default_tol() -> f64 {
    1e-8
}
fn default_order() -> usize {
    4
}
fn default_nx() -> usize {
    32
}
fn default_medium() -> u8 {
    1
}
fn default_modes_per_h() -> f64 {
    4.0
}
fn default_x1() -> Vec<f64> {
    (6..=10).map(|p| 2f64.powi(-p)).collect()
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, Failure> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::invalid(format!("cannot read {}: {e}", path.display())))?;
        let cfg: RunConfig =
            serde_json::from_str(&text).map_err(|e| Failure::invalid(format!("{}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Checks every module precondition so that numeric work never starts
    /// on an invalid configuration.
    pub fn validate(&self) -> Result<(), Failure> {
        self.disk()?;
        if let Some(s) = &self.scan {
            self.region_of(s)?;
            if !(s.tol > 0.0 && s.tol < 1e-2) {
                return Err(Failure::invalid(format!("scan.tol must lie in (0, 1e-2), got {}", s.tol)));
            }
        }
        if let Some(s) = &self.semiclassical {
            if s.h.is_empty() || s.z.is_empty() {
                return Err(Failure::invalid("semiclassical.h and semiclassical.z must be nonempty".into()));
            }
            for &h in &s.h {
                for z in &s.z {
                    z.point(h)?;
                }
            }
            if !(1..=8).contains(&s.order) {
                return Err(Failure::invalid(format!("jet order {} outside 1..=8", s.order)));
            }
            if let Some(g) = s.grid {
                GridSpec::new(g.nx, g.nxi, g.xi_max)?;
            }
            if s.x1.iter().any(|x| !(*x > 0.0 && *x < 1.0)) {
                return Err(Failure::invalid("x1 values must lie in (0, 1)".into()));
            }
            if s.medium != 1 && s.medium != 2 {
                return Err(Failure::invalid(format!("medium must be 1 or 2, got {}", s.medium)));
            }
            if !(s.modes_per_h > 0.0) {
                return Err(Failure::invalid("modes_per_h must be positive".into()));
            }
            if let Some(c) = &s.composition {
                if let Some(mp) = &c.media {
                    mp.validate_positive(std::f64::consts::TAU * self.disk.radius, 256)?;
                }
                if c.nx < 16 || c.max_mode == 0 {
                    return Err(Failure::invalid("composition needs nx >= 16 and max_mode >= 1".into()));
                }
            }
        }
        for r in &self.regions {
            r.validate()?;
        }
        if let Some(c) = &self.counting {
            if c.r.is_empty() || c.r.iter().any(|r| !(*r > 0.0)) {
                return Err(Failure::invalid("counting.r must be a nonempty list of positive radii".into()));
            }
        }
        Ok(())
    }

    pub fn disk(&self) -> Result<DiskConfig, Failure> {
        let [c1, n1, c2, n2] = self.disk.media;
        Ok(DiskConfig::new(self.disk.radius, c1, n1, c2, n2)?)
    }

    pub fn region_of(&self, s: &ScanSection) -> Result<ScanRegion, Failure> {
        Rect::new(s.re[0], s.re[1], s.im[0], s.im[1])?;
        Ok(ScanRegion::new(s.re[0], s.re[1], s.im[0], s.im[1])?)
    }

    /// `(c, n)` of the medium selected for single-medium checks.
    pub fn single_medium(&self) -> (f64, f64) {
        let [c1, n1, c2, n2] = self.disk.media;
        match self.semiclassical.as_ref().map(|s| s.medium) {
            Some(2) => (c2, n2),
            _ => (c1, n1),
        }
    }
}
