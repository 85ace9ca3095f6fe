pub mod config;
pub mod error;
pub mod estimators;
pub mod formulas;
pub mod jet;
pub mod laws;
pub mod optimize;
pub mod oracle;
pub mod roots;
pub mod scalar;
pub mod simulator;
pub mod special;

pub use config::{Grid, ModelConfig};
pub use error::{Error, Result};
pub use estimators::{Design, EstimateReport, Method};
pub use formulas::{CovarianceBundle, Model, MomentSet, Sensitivities};
pub use jet::Jet;
pub use laws::{DamageLaw, InspectionLaw, SaneLaw};
pub use oracle::McEstimate;
pub use scalar::Real;
pub use simulator::{CountSnapshot, CycleRecord, Trajectory};

pub type Jet64 = Jet<f64>;
pub type SaneLaw64 = SaneLaw<f64>;
pub type DamageLaw64 = DamageLaw<f64>;
pub type InspectionLaw64 = InspectionLaw<f64>;
pub type Model64 = formulas::Model<f64>;
pub type MomentSet64 = formulas::MomentSet<f64>;
pub type CovarianceBundle64 = formulas::CovarianceBundle<f64>;
pub type Sensitivities64 = formulas::Sensitivities<f64>;
pub type Design64 = estimators::Design<f64>;
