use std::fmt;
use std::process::ExitCode;

use mpi_core::gateway::GatewayError;
use mpi_core::induction::InductionError;
use mpi_core::scoring::AdministerError;
use mpi_core::vignette::VignetteError;

/// Exit status classes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Config = 2,
    Gateway = 3,
    Threshold = 4,
}

#[derive(Debug)]
pub struct Failure {
    pub kind: Kind,
    pub message: String,
}

impl Failure {
    pub fn config(message: impl fmt::Display) -> Self {
        Failure { kind: Kind::Config, message: message.to_string() }
    }

    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(self.kind as u8)
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

fn gateway_kind(e: &GatewayError) -> Kind {
    match e {
        GatewayError::InvalidProfile(_) => Kind::Config,
        _ => Kind::Gateway,
    }
}

impl From<GatewayError> for Failure {
    fn from(e: GatewayError) -> Self {
        Failure { kind: gateway_kind(&e), message: e.to_string() }
    }
}

fn administer_kind(e: &AdministerError) -> Kind {
    match e {
        AdministerError::Template(_) => Kind::Config,
        AdministerError::Gateway { source, .. } => gateway_kind(source),
        AdministerError::TooManyInvalid { .. } => Kind::Threshold,
    }
}

impl From<AdministerError> for Failure {
    fn from(e: AdministerError) -> Self {
        Failure { kind: administer_kind(&e), message: e.to_string() }
    }
}

impl From<InductionError> for Failure {
    fn from(e: InductionError) -> Self {
        let kind = match e.root() {
            InductionError::Gateway(g) => gateway_kind(g),
            InductionError::Administer { source, .. } => administer_kind(source),
            // Degenerate model output is a provider-side failure.
            InductionError::EmptyPortrait | InductionError::TooFewAntonyms { .. } => Kind::Gateway,
            InductionError::AllInvalid => Kind::Threshold,
            _ => Kind::Config,
        };
        Failure { kind, message: e.to_string() }
    }
}

impl From<VignetteError> for Failure {
    fn from(e: VignetteError) -> Self {
        let kind = match &e {
            VignetteError::Gateway(g) => gateway_kind(g),
            VignetteError::EmptyEssay(_) => Kind::Gateway,
            _ => Kind::Config,
        };
        Failure { kind, message: e.to_string() }
    }
}
