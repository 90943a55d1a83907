use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("unphysical Bloch vector: |s| = {norm}")]
    UnphysicalBloch { norm: f64 },

    #[error("matrix has a non-finite entry")]
    NonFinite,

    #[error("matrix is not Hermitian (deviation {deviation:e})")]
    NotHermitian { deviation: f64 },

    #[error("trace is {trace}, expected 1")]
    InvalidTrace { trace: f64 },

    #[error("matrix is not positive semidefinite (smallest eigenvalue {min_eigenvalue:e})")]
    NotPositive { min_eigenvalue: f64 },

    #[error("matrix is not unitary (deviation {deviation:e})")]
    NotUnitary { deviation: f64 },

    #[error("convention violation: matrix pipeline and closed form differ by {deviation:e}")]
    ConventionViolation { deviation: f64 },

    #[error("{name} = {value} is outside [0, 1]")]
    OutOfUnitInterval { name: &'static str, value: f64 },

    #[error("fringe scan needs at least 8 phase samples, got {0}")]
    TooFewPhaseSamples(usize),

    #[error("f_Q undefined at maximal distinguishability (D_Q = {d_q})")]
    FqUndefined { d_q: f64 },

    #[error("{which} Bloch vector must lie in the x-z plane (y = {y})")]
    OutOfPlane { which: &'static str, y: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
