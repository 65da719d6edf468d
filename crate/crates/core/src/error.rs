use thiserror::Error;

/// Every failure the numerical core can report.
///
/// `name()` gives the bare variant name, which the CLI prints on stderr.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("index {0} lies outside the window and the background forbids extension")]
    IndexOutOfBackground(i64),
    #[error("invalid input: {0}")]
    InvalidInput(&'static str),
    #[error("tridiagonal eigensolver did not converge")]
    ConvergenceFailure,
    #[error("evaluation point coincides with an atom at {0}")]
    PoleAtZ(f64),
    #[error("measure has {atoms} atoms, {needed} needed")]
    RankDeficient { atoms: usize, needed: usize },
    #[error("orthogonality lost at step {0}")]
    LossOfOrthogonality(usize),
    #[error("Weyl disk is degenerate")]
    DegenerateDisk,
    #[error("point is too close to the spectrum")]
    NearSpectrum,
    #[error("pole hit while evaluating the m-function")]
    PoleHit,
    #[error("edge extraction failed inside a reflection")]
    ChainEdgeFailure,
    #[error("extrapolation did not settle (spread {0:e})")]
    ExtrapolationDivergence(f64),
    #[error("recovered a_n^2 = {0} is not positive")]
    NonPositiveASquared(f64),
    #[error("exponent {0} exceeds the overflow guard")]
    OverflowGuard(f64),
    #[error("energy lies inside the spectrum")]
    EnergyInsideSpectrum,
    #[error("positive solution changes sign near site {0}")]
    SignChange(i64),
    #[error("step size underflow at t = {0}")]
    StepSizeUnderflow(f64),
    #[error("parameters outside the family's domain")]
    DomainError,
    #[error("envelope bound violated at k = {0}")]
    EnvelopeViolation(usize),
}

impl Error {
    pub fn name(&self) -> &'static str {
        match self {
            Error::IndexOutOfBackground(_) => "IndexOutOfBackground",
            Error::InvalidInput(_) => "InvalidInput",
            Error::ConvergenceFailure => "ConvergenceFailure",
            Error::PoleAtZ(_) => "PoleAtZ",
            Error::RankDeficient { .. } => "RankDeficient",
            Error::LossOfOrthogonality(_) => "LossOfOrthogonality",
            Error::DegenerateDisk => "DegenerateDisk",
            Error::NearSpectrum => "NearSpectrum",
            Error::PoleHit => "PoleHit",
            Error::ChainEdgeFailure => "ChainEdgeFailure",
            Error::ExtrapolationDivergence(_) => "ExtrapolationDivergence",
            Error::NonPositiveASquared(_) => "NonPositiveASquared",
            Error::OverflowGuard(_) => "OverflowGuard",
            Error::EnergyInsideSpectrum => "EnergyInsideSpectrum",
            Error::SignChange(_) => "SignChange",
            Error::StepSizeUnderflow(_) => "StepSizeUnderflow",
            Error::DomainError => "DomainError",
            Error::EnvelopeViolation(_) => "EnvelopeViolation",
        }
    }
}

pub type Result<T> = core::result::Result<T, Error>;
