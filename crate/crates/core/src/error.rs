use thiserror::Error;

/// Errors raised when an input falls outside the domain an operation accepts.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("candidate count {0} is outside the supported range 2..={max}", max = crate::election::MAX_CANDIDATES)]
    CandidateCount(usize),
    #[error("ballot length {max_len} is invalid for {kappa} candidates")]
    BallotLength { kappa: usize, max_len: usize },
    #[error("candidate {candidate} is not one of the {kappa} candidates")]
    UnknownCandidate { candidate: usize, kappa: usize },
    #[error("candidate {0} appears more than once")]
    DuplicateCandidate(usize),
    #[error("ranking is empty")]
    EmptyRanking,
    #[error("ranking of length {len} exceeds the ballot length {max_len}")]
    RankingTooLong { len: usize, max_len: usize },
    #[error("ranking {0:?} is listed more than once")]
    DuplicateRanking(Vec<usize>),
    #[error("rate {0} is negative or not finite")]
    InvalidRate(f64),
    #[error("candidate {0} has already been dropped")]
    CandidateDropped(usize),
    #[error("position bound {bound} is outside 1..={max_len}")]
    PositionBound { bound: usize, max_len: usize },
    #[error("{dropped} dropped candidates leave no opponent among {kappa}")]
    TooManyDropped { dropped: usize, kappa: usize },
    #[error("sequence has length {len}, expected {expected}")]
    SequenceLength { len: usize, expected: usize },
    #[error("round index {round} is outside 1..={max}")]
    RoundIndex { round: usize, max: usize },
    #[error("election has no ballots")]
    EmptyElection,
    #[error("utility vector has {len} entries for {kappa} candidates")]
    UtilityLength { len: usize, kappa: usize },
    #[error("utility {0} is not finite")]
    InvalidUtility(f64),
    #[error("tail tolerance {0} must lie strictly between 0 and 1")]
    Tolerance(f64),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("profile has no admissible ballots")]
    NoBallots,
    #[error("malformed input: {0}")]
    Parse(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
