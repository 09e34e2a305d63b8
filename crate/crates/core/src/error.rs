use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("rate `{name}` must be non-negative (got {value})")]
    NegativeRate { name: &'static str, value: f64 },

    #[error("parameter `{name}` must be finite (got {value})")]
    NonFinite { name: &'static str, value: f64 },

    #[error(
        "degenerate eigenvalues (|lambda1 - lambda2| = {gap:.3e}); \
         perturb kappa by about 1 part in 1e6 to leave the confluent point"
    )]
    DegenerateEigenvalues { gap: f64 },

    #[error("z = {z} sits on a pole of the Laplace transform")]
    PoleHit { z: num_complex::Complex64 },

    #[error("repeated poles (min gap {gap:.3e}); perturb the parameters slightly")]
    RepeatedPoles { gap: f64 },

    #[error("closed-form energies require gamma = 0 (got {gamma})")]
    RequiresGammaZero { gamma: f64 },

    #[error("asymptotic observables need kappa > 0 or gamma > 0")]
    NoEscapeChannel,

    #[error("the dot is decoupled from the cavity (g = 0); no photon reaches the output mode")]
    Decoupled,

    #[error("purity is monotone on [{lo}, {hi}]; no interior maximum")]
    NoInteriorMax { lo: f64, hi: f64 },

    #[error("step-halving check failed: endpoint moved by {change:.3e} (limit {limit:.1e})")]
    StepTooLarge { change: f64, limit: f64 },

    #[error("root finder did not converge")]
    NoConvergence,

    #[error("the two-Lorentzian approximation is undefined for gamma_p = 0 (zero-width dot line)")]
    ZeroWidthDotLine,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}
