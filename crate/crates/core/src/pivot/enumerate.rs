//! Elimination orders visited by the pivotality sums.

use itertools::Itertools;

use crate::election::{Candidate, CandidateSet, EliminationSequence};
use crate::error::{Error, Result};

pub(crate) fn all_candidates(kappa: usize) -> Vec<Candidate> {
    (0..kappa as u8).map(Candidate).collect()
}

/// Every ordering of `items`, lexicographic in the input order.
pub(crate) fn orderings(items: &[Candidate]) -> impl Iterator<Item = Vec<Candidate>> + '_ {
    items.iter().copied().permutations(items.len())
}

/// Every drop list that leaves `c` as one of the final two: the orderings
/// of the other κ-1 candidates.
pub fn drop_lists(kappa: usize, c: Candidate) -> impl Iterator<Item = EliminationSequence> {
    let others: Vec<Candidate> = all_candidates(kappa).into_iter().filter(|&x| x != c).collect();
    let n = others.len();
    others
        .into_iter()
        .permutations(n)
        .map(EliminationSequence::from_vec_unchecked)
}

/// Calls `f(t, alternate)` for each alternate elimination order of a full
/// sequence `seq` in which the candidate dropped in round `round` (1-based)
/// is saved by one vote and `t` goes out in its place.
///
/// The alternate keeps the rounds before `round`, drops `t` (a candidate that
/// outlasted the saved one) in `round`, and then any ordering of the rest,
/// provided the final winner is neither the original winner nor the saved
/// candidate.
pub(crate) fn for_each_alternate(seq: &[Candidate], round: usize, mut f: impl FnMut(Candidate, &[Candidate])) {
    let kappa = seq.len();
    let y0 = round - 1;
    let saved = seq[y0];
    let winner = seq[kappa - 1];
    let mut alt: Vec<Candidate> = Vec::with_capacity(kappa);
    for &t in &seq[round..] {
        let rest: Vec<Candidate> = seq[y0..].iter().copied().filter(|&x| x != t).collect();
        for tail in orderings(&rest) {
            let last = tail[tail.len() - 1];
            if last == winner || last == saved {
                continue;
            }
            alt.clear();
            alt.extend_from_slice(&seq[..y0]);
            alt.push(t);
            alt.extend_from_slice(&tail);
            f(t, &alt);
        }
    }
}

/// The alternate elimination orders reachable from `seq` when the candidate
/// dropped in round `round` (1-based) is saved by one vote.
///
/// Rounds `1..=κ-1` are accepted; the final round never yields an alternate
/// because the only replacement would leave the saved candidate as winner.
pub fn enumerate_alternates(seq: &EliminationSequence, round: usize) -> Result<Vec<EliminationSequence>> {
    let kappa = seq.len();
    let full: CandidateSet = seq.to_set();
    if kappa < 2 || full.len() != kappa || seq.as_slice().iter().any(|c| c.index() >= kappa) {
        return Err(Error::SequenceLength { len: kappa, expected: full.len().max(2) });
    }
    if round == 0 || round >= kappa {
        return Err(Error::RoundIndex { round, max: kappa - 1 });
    }
    let mut out = Vec::new();
    for_each_alternate(seq.as_slice(), round, |_, alt| {
        out.push(EliminationSequence::from_vec_unchecked(alt.to_vec()))
    });
    Ok(out)
}
