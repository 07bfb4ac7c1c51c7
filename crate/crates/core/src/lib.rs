pub mod clearing;
pub mod error;
pub mod fixtures;
pub mod formulations;
pub mod io;
pub mod lp;
pub mod metrics;
pub mod model;
pub mod perturb;
pub mod ph;
pub mod pricing;
pub mod runner;
pub mod synth;
pub mod verify;

pub use error::Error;
