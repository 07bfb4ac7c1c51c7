use crate::lp::{LpError, LpStatus};

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error("solver returned status {0:?}, an optimal solution is required")]
    NotOptimal(LpStatus),
    #[error("invalid instance: {}", .0.join("; "))]
    Validation(Vec<String>),
    #[error("{0}")]
    Input(String),
    #[error("progressive hedging stopped after {iterations} iterations without converging")]
    NotConverged { iterations: usize },
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}
