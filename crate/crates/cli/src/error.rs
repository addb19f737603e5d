use std::path::PathBuf;

use genealab_core::GenealogyError;
use genealab_sim::SimError;
use genealab_verify::{Report, VerifyError};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error(transparent)]
    Verify(#[from] VerifyError),
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        CliError::Verify(e.into())
    }
}

impl From<GenealogyError> for CliError {
    fn from(e: GenealogyError) -> Self {
        CliError::Verify(e.into())
    }
}

/// Leading identifier of a `Debug` rendering: the variant name.
fn variant<T: std::fmt::Debug>(e: &T) -> String {
    format!("{e:?}")
        .chars()
        .take_while(|c| c.is_alphanumeric())
        .collect()
}

impl CliError {
    /// `module::Variant`, naming the crate the error comes from.
    pub fn code(&self) -> String {
        match self {
            CliError::Config(_) => "config::ConfigInvalid".into(),
            CliError::Io { .. } => "cli::Io".into(),
            CliError::Verify(e) => match e {
                VerifyError::Genealogy(g) | VerifyError::Sim(SimError::Genealogy(g)) => {
                    format!("core::{}", variant(g))
                }
                VerifyError::Sim(s) => format!("sim::{}", variant(s)),
                VerifyError::Budget { source, .. } => format!("sim::{}", variant(source)),
                other => format!("verify::{}", variant(other)),
            },
        }
    }

    /// Report on the replicates that finished before a budget error.
    pub fn partial_report(&self) -> Option<&Report> {
        match self {
            CliError::Verify(VerifyError::Budget { partial, .. }) => Some(partial),
            _ => None,
        }
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;
