//! Probability that one ballot changes the winner of an Instant Runoff
//! Voting election, split into direct and indirect pivotality, under a
//! Poisson model of the electorate.

pub mod election;
pub mod error;
pub mod experiment;
pub mod io;
pub mod oracle;
pub mod pivot;
pub mod skellam;
pub mod smdp;

pub use error::{Error, Result};
