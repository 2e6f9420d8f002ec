use alloc::string::String;

/// Everything that can go wrong inside the numerical core.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// A wavelength, temperature or frequency left the dispersion model's
    /// validity window. `bound` names the violated limit.
    #[error("{quantity} = {value} outside the model validity range ({bound})")]
    Domain { quantity: &'static str, value: f64, bound: String },

    /// No frequency satisfies Δk = 0 at this temperature.
    #[error("no phase matching at T = {temperature} °C (Δk at degeneracy = {delta_k_degenerate} 1/m)")]
    NoPhaseMatching { temperature: f64, delta_k_degenerate: f64 },

    /// A caller broke a documented precondition.
    #[error("contract violation: {0}")]
    Contract(String),

    /// An adaptive integrator ran out of refinements.
    #[error("quadrature did not converge: estimate {estimate_re}{estimate_im:+}i, residual {residual:e}")]
    NonConvergence { estimate_re: f64, estimate_im: f64, residual: f64 },

    /// The numeric oracle refuses inputs that would make it too expensive.
    #[error("numeric oracle refused: {0}")]
    CostGuard(String),

    /// An optimum landed on the edge of the search interval.
    #[error("optimum of {parameter} hit the {side} search bound {bound}")]
    BoundaryHit { parameter: &'static str, side: &'static str, bound: f64 },
}

pub type Result<T> = core::result::Result<T, Error>;
