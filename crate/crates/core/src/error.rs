use num_complex::Complex64;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("non-finite argument")]
    NonFinite,
    #[error("value overflows f64 (log scale {0:.3}); use the log-scaled variant")]
    Overflow(f64),
    #[error("argument outside the supported domain: {0}")]
    Domain(String),
    #[error("rho would be real at r0={r0}, m={m}, z={z}: point is off the zones")]
    BranchFailure { r0: f64, m: f64, z: Complex64 },
    #[error("zone mismatch: {0}")]
    ZoneMismatch(String),
    #[error("{0} condition violated: {1}")]
    ConditionViolated(&'static str, String),
    #[error("grid too coarse: refinement changed the class norm by {0:.1}%")]
    GridTooCoarse(f64),
    #[error("degenerate rho: min |rho| on grid is {0:e}")]
    DegenerateRho(f64),
    #[error("frequency {needed} lies outside the symbol grid range {available}")]
    FrequencyOutOfRange { needed: f64, available: f64 },
    #[error("power iteration did not converge in {0} iterations")]
    NoConvergence(usize),
    #[error("Dirichlet pole in mode {0}")]
    DirichletPole(i64),
    #[error("contour passes through a zero after {0} retries")]
    ContourThroughZero(usize),
    #[error("phase jump unresolved at maximum sampling")]
    PhaseJumpUnresolved,
    #[error("winding conservation broken: parent {parent}, children {children}")]
    WindingMismatch { parent: i64, children: i64 },
    #[error("sentinel mode {mode} has winding {winding}; raise k_max")]
    SentinelNonzeroWinding { mode: usize, winding: i64 },
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("incomplete spectrum: {0}")]
    IncompleteSpectrum(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
}
