pub mod checker;
pub mod kernel;
pub mod leakage;
pub mod pgm;
pub mod uav;

/// Exact rational scalar for leakage computations.
pub type Exact = num_rational::Ratio<i64>;
pub type Estimate64 = leakage::Estimate<f64>;
pub type ExactEstimate = leakage::Estimate<Exact>;
