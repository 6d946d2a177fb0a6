pub mod bicop;
pub mod dvine;
pub(crate) mod engine;
pub mod error;
pub mod fit;
pub mod kld;
pub mod optim;
pub mod pvc;
pub mod quad;
pub mod rng;
pub mod stats;
pub mod svc;

pub use bicop::{BivariateCopula, Family, NumericBivariateCopula};
pub use dvine::{ConditionalEdge, DVineSpec, ParamMap};
pub use error::{PvcError, Result};
pub use svc::SimplifiedVineSpec;
