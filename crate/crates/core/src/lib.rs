//! Classical resource estimation for plane-wave pseudopotential quantum dynamics.

pub mod cell_basis;
pub mod cli_reports;
pub mod evolution_planner;
pub mod initprep;
pub mod pseudopotential;
pub mod qci;
pub mod qrs_design;
pub mod rescaling;
pub mod toffoli_model;

use thiserror::Error;

/// Process exit code for invalid input.
pub const EXIT_VALIDATION: i32 = 2;
/// Process exit code for a numerical failure.
pub const EXIT_NUMERIC: i32 = 3;

/// Any error raised by the library.
#[derive(Debug, Error)]
pub enum Error {
    /// Pseudopotential data.
    #[error(transparent)]
    Pseudo(#[from] pseudopotential::PseudoError),
    /// Cell or basis construction.
    #[error(transparent)]
    Basis(#[from] cell_basis::BasisError),
    /// Rescaling sums.
    #[error(transparent)]
    Rescaling(#[from] rescaling::RescalingError),
    /// Reference states.
    #[error(transparent)]
    Qrs(#[from] qrs_design::QrsError),
    /// Cost ledger.
    #[error(transparent)]
    Cost(#[from] toffoli_model::CostError),
    /// Evolution planning.
    #[error(transparent)]
    Plan(#[from] evolution_planner::PlanError),
    /// Initial-state precomputation.
    #[error(transparent)]
    Init(#[from] initprep::InitError),
    /// Species identification.
    #[error(transparent)]
    Qci(#[from] qci::QciError),
    /// Instance catalog and reports.
    #[error(transparent)]
    Report(#[from] cli_reports::ReportError),
}

impl Error {
    /// True when the error stems from a numerical failure rather than invalid input.
    pub fn is_numeric(&self) -> bool {
        use evolution_planner::PlanError;
        use initprep::InitError;
        use qrs_design::QrsError;
        use rescaling::RescalingError;
        use toffoli_model::CostError;
        match self {
            Error::Rescaling(RescalingError::Basis(_)) => false,
            Error::Rescaling(_) => true,
            Error::Qrs(e) => matches!(e, QrsError::Domination { .. } | QrsError::ZeroExchange),
            Error::Cost(e) => matches!(e, CostError::NegativeRow { .. }),
            Error::Plan(e) => matches!(e, PlanError::Overflow),
            Error::Init(e) => {
                matches!(e, InitError::NotMinimum { .. } | InitError::RankDeficient { .. } | InitError::Completion)
            }
            Error::Report(e) => e.is_numeric(),
            Error::Pseudo(_) | Error::Basis(_) | Error::Qci(_) => false,
        }
    }

    /// Process exit code: 2 for invalid input, 3 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        if self.is_numeric() {
            EXIT_NUMERIC
        } else {
            EXIT_VALIDATION
        }
    }
}
