//! Zone-based backwards reachability for probabilistic timed automata.

pub mod backwards;
pub mod dbm;
pub mod digital;
pub mod error;
pub mod federation;
pub mod harness;
pub mod mdp;
pub mod model;
pub mod result;
pub mod scalar;

pub use dbm::{Bound, Dbm, Valuation};
pub use error::{EngineError, MdpError, ModelError, ModelErrors, ZoneError};
pub use federation::Federation;
pub use mdp::{Mdp, MdpBuilder};
pub use result::{ProbResult, Stats};
pub use model::{EngineConfig, Expr, Property, Pta};
pub use scalar::Scalar;

/// Clock valuation with exact rational values.
pub type ClockValuation = Valuation<num_rational::Rational64>;

/// Value-iteration result in double precision.
pub type Solution = mdp::Solution<f64>;
