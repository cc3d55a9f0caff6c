pub mod checkpoint;
pub mod diagnostics;
pub mod dynamics;
pub mod equivalence;
pub mod error;
pub mod initial;
pub mod kernels;
pub mod legendre;
pub mod linalg;
pub mod meanfield;
pub mod oracle;
pub mod potential;
pub mod quadrature;
pub mod radial;
pub mod scalar;
pub mod state;
pub mod system;
pub mod validation;

pub use error::{Error, Result};

pub type GauntTable = legendre::GauntTable<f64>;
pub type GauntTable32 = legendre::GauntTable<f32>;
pub type GaussRule = quadrature::GaussLegendre<f64>;
pub type GaussRule32 = quadrature::GaussLegendre<f32>;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
