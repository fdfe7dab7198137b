//! JSON forms of profiles and realized elections.
//!
//! ```json
//! {"kappa": 3, "L": 3, "rates": [{"ranking": [0, 2], "rate": 4.5}]}
//! ```
//!
//! A realized election uses `count` (a nonnegative integer) in place of
//! `rate`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::election::{BallotProfile, RealizedElection, Ranking};
use crate::error::{Error, Result};

#[derive(Debug, Serialize, Deserialize)]
struct RateEntry {
    ranking: Vec<usize>,
    rate: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct ProfileFile {
    kappa: usize,
    #[serde(rename = "L")]
    max_len: usize,
    rates: Vec<RateEntry>,
}

#[derive(Debug, Serialize, Deserialize)]
struct CountEntry {
    ranking: Vec<usize>,
    count: u64,
}

#[derive(Debug, Serialize, Deserialize)]
struct RealizedFile {
    kappa: usize,
    #[serde(rename = "L")]
    max_len: usize,
    rates: Vec<CountEntry>,
}

fn parse_err(e: impl std::fmt::Display) -> Error {
    Error::Parse(e.to_string())
}

pub fn profile_from_json(text: &str) -> Result<BallotProfile> {
    let file: ProfileFile = serde_json::from_str(text).map_err(parse_err)?;
    let rates = file
        .rates
        .into_iter()
        .map(|e| Ok((Ranking::from_indices(&e.ranking, file.kappa)?, e.rate)))
        .collect::<Result<Vec<_>>>()?;
    BallotProfile::new(file.kappa, file.max_len, rates)
}

pub fn profile_to_json(profile: &BallotProfile) -> String {
    let file = ProfileFile {
        kappa: profile.kappa(),
        max_len: profile.max_len(),
        rates: profile
            .entries()
            .iter()
            .map(|(r, rate)| RateEntry { ranking: r.indices(), rate: *rate })
            .collect(),
    };
    serde_json::to_string_pretty(&file).expect("profile serializes")
}

pub fn read_profile(path: impl AsRef<Path>) -> Result<BallotProfile> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    profile_from_json(&text)
}

pub fn realized_from_json(text: &str) -> Result<RealizedElection> {
    let file: RealizedFile = serde_json::from_str(text).map_err(parse_err)?;
    let counts = file
        .rates
        .into_iter()
        .map(|e| Ok((Ranking::from_indices(&e.ranking, file.kappa)?, e.count)))
        .collect::<Result<Vec<_>>>()?;
    RealizedElection::new(file.kappa, file.max_len, counts)
}

/// Parses a comma-separated list of candidate ids, e.g. `"0,2,1"`.
pub fn parse_ballot(text: &str, kappa: usize) -> Result<Ranking> {
    let ids = text
        .split(',')
        .map(|s| s.trim().parse::<usize>().map_err(|e| Error::Parse(format!("ballot entry {s:?}: {e}"))))
        .collect::<Result<Vec<_>>>()?;
    Ranking::from_indices(&ids, kappa)
}
