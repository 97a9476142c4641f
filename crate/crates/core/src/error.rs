use thiserror::Error;

use crate::quad::QuadError;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Quad(#[from] QuadError),

    #[error("{name} = {value} is out of range: {requirement}")]
    Domain {
        name: &'static str,
        value: f64,
        requirement: &'static str,
    },

    #[error("invalid profile: {0}")]
    InvalidProfile(String),

    #[error("profile is not asymptotically flat: {0}")]
    NotAsymptoticallyFlat(String),

    #[error("malformed profile spec `{spec}`: {reason}")]
    Spec { spec: String, reason: String },

    #[error("cannot read profile table {path}: {reason}")]
    Table { path: String, reason: String },

    #[error("hypothesis not satisfied: {0}")]
    Hypothesis(String),

    #[error("integrand tail does not decay: {0}")]
    DivergentTail(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn ensure_domain(ok: bool, name: &'static str, value: f64, requirement: &'static str) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::Domain {
            name,
            value,
            requirement,
        })
    }
}
