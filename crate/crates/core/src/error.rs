use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid grid size {nphi}x{ntheta}: both sides must be even and at least {min}")]
    InvalidGrid { nphi: usize, ntheta: usize, min: usize },

    #[error("non-finite Fourier coefficient in mode ({m}, {n})")]
    NonFiniteCoefficient { m: i32, n: i32 },

    #[error("surface is not an immersion: min |E_phi x E_theta| = {min:e}")]
    ImmersionFailure { min: f64 },

    #[error("surface comes within {clearance:e} of the z-axis (required > {required:e})")]
    AxisIntersection { clearance: f64, required: f64 },

    #[error("point at cylindrical radius {rho:e} is closer than {delta:e} to the z-axis")]
    AxisProximity { rho: f64, delta: f64 },

    #[error("tangential Gram matrix is numerically singular (det = {det:e})")]
    SingularFrame { det: f64 },

    #[error("Neumann datum violates flux compatibility: |int g dA| = {residual:e} > {bound:e}")]
    IncompatibleDatum { residual: f64, bound: f64 },

    #[error("boundary integral system is ill-conditioned (estimate {estimate:e} > {bound:e})")]
    IllConditioned { estimate: f64, bound: f64 },

    #[error("linear solve residual {residual:e} exceeds tolerance {tol:e}")]
    SolverResidual { residual: f64, tol: f64 },

    #[error("interior probe lies {distance:e} from the boundary (needs >= {required:e})")]
    TooCloseToBoundary { distance: f64, required: f64 },

    #[error("toroidal circulation drifted to {value} (|c - 1| > {tol:e})")]
    CirculationDrift { value: f64, tol: f64 },

    #[error("field is not transverse to poloidal cuts: min B^phi = {min:e}")]
    NotTransverse { min: f64 },

    #[error("adaptive integrator step size underflow at phi = {phi}")]
    StepFailure { phi: f64 },

    #[error("circle map lift is not strictly increasing at sample {index}")]
    NotMonotone { index: usize },

    #[error("field is not linearized: sup |X^theta - mean| = {spread:e} > {tol:e}")]
    NotLinearized { spread: f64, tol: f64 },

    #[error("diophantine bound fails at denominator q = {0}")]
    NotDiophantineUpTo(u64),

    #[error("function must have zero average (found {0:e})")]
    NonzeroAverage(f64),

    #[error("small divisor |m + n omega| = {value:e} at mode ({m}, {n}) below floor")]
    SmallDivisorOverflow { m: i64, n: i64, value: f64 },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}
