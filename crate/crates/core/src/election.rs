//! Candidates, ballots, expected vote totals and concrete tabulation.
//!
//! A [`BallotProfile`] holds the expected number of voters casting each
//! ranking. The vote total of a candidate after some eliminations is the
//! mass of every ranking on which that candidate is the highest-ranked
//! candidate still standing. A ranking whose listed candidates have all been
//! dropped is exhausted and counts for nobody.

use std::fmt;

use itertools::Itertools;
use serde::Serialize;

use crate::error::{Error, Result};

/// Upper bound on the number of candidates (sets are stored as bitmasks).
pub const MAX_CANDIDATES: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct Candidate(pub u8);

impl Candidate {
    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub fn from_index(index: usize, kappa: usize) -> Result<Self> {
        if index >= kappa {
            return Err(Error::UnknownCandidate { candidate: index, kappa });
        }
        Ok(Candidate(index as u8))
    }
}

impl fmt::Display for Candidate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A set of candidates, stored as a bitmask.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct CandidateSet(u32);

impl CandidateSet {
    pub const EMPTY: CandidateSet = CandidateSet(0);

    pub fn from_bits(bits: u32) -> Self {
        CandidateSet(bits)
    }

    pub fn bits(self) -> u32 {
        self.0
    }

    pub fn contains(self, c: Candidate) -> bool {
        self.0 & (1 << c.0) != 0
    }

    #[must_use]
    pub fn with(self, c: Candidate) -> Self {
        CandidateSet(self.0 | (1 << c.0))
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn is_subset(self, other: CandidateSet) -> bool {
        self.0 & !other.0 == 0
    }
}

impl FromIterator<Candidate> for CandidateSet {
    fn from_iter<I: IntoIterator<Item = Candidate>>(iter: I) -> Self {
        iter.into_iter().fold(CandidateSet::EMPTY, CandidateSet::with)
    }
}

impl<'a> FromIterator<&'a Candidate> for CandidateSet {
    fn from_iter<I: IntoIterator<Item = &'a Candidate>>(iter: I) -> Self {
        iter.into_iter().copied().collect()
    }
}

fn check_kappa(kappa: usize) -> Result<()> {
    if !(2..=MAX_CANDIDATES).contains(&kappa) {
        return Err(Error::CandidateCount(kappa));
    }
    Ok(())
}

fn check_distinct(candidates: &[Candidate], kappa: usize) -> Result<()> {
    let mut seen = CandidateSet::EMPTY;
    for &c in candidates {
        if c.index() >= kappa {
            return Err(Error::UnknownCandidate { candidate: c.index(), kappa });
        }
        if seen.contains(c) {
            return Err(Error::DuplicateCandidate(c.index()));
        }
        seen = seen.with(c);
    }
    Ok(())
}

/// One ballot type: an ordered, duplicate-free list of candidates.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct Ranking(Vec<Candidate>);

impl Ranking {
    /// Builds a ranking valid for an election with `kappa` candidates.
    pub fn new(candidates: Vec<Candidate>, kappa: usize) -> Result<Self> {
        if candidates.is_empty() {
            return Err(Error::EmptyRanking);
        }
        check_distinct(&candidates, kappa)?;
        Ok(Ranking(candidates))
    }

    pub fn from_indices(ids: &[usize], kappa: usize) -> Result<Self> {
        let candidates = ids
            .iter()
            .map(|&i| Candidate::from_index(i, kappa))
            .collect::<Result<Vec<_>>>()?;
        Ranking::new(candidates, kappa)
    }

    pub fn candidates(&self) -> &[Candidate] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn indices(&self) -> Vec<usize> {
        self.0.iter().map(|c| c.index()).collect()
    }

    /// The highest-ranked candidate not in `dropped`, if any.
    pub fn top_remaining(&self, dropped: CandidateSet) -> Option<Candidate> {
        top_remaining(&self.0, dropped)
    }
}

impl fmt::Display for Ranking {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}]", self.0.iter().join(","))
    }
}

#[inline]
pub(crate) fn top_remaining(ranking: &[Candidate], dropped: CandidateSet) -> Option<Candidate> {
    ranking.iter().copied().find(|&c| !dropped.contains(c))
}

/// Candidates in the order they are eliminated.
///
/// A drop list holds κ-1 candidates; a full sequence holds all κ, the last
/// one being the winner.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct EliminationSequence(Vec<Candidate>);

impl EliminationSequence {
    pub fn new(order: Vec<Candidate>, kappa: usize) -> Result<Self> {
        check_distinct(&order, kappa)?;
        Ok(EliminationSequence(order))
    }

    pub fn from_indices(ids: &[usize], kappa: usize) -> Result<Self> {
        let order = ids
            .iter()
            .map(|&i| Candidate::from_index(i, kappa))
            .collect::<Result<Vec<_>>>()?;
        EliminationSequence::new(order, kappa)
    }

    pub(crate) fn from_vec_unchecked(order: Vec<Candidate>) -> Self {
        EliminationSequence(order)
    }

    pub fn as_slice(&self) -> &[Candidate] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn last(&self) -> Option<Candidate> {
        self.0.last().copied()
    }

    pub fn to_set(&self) -> CandidateSet {
        self.0.iter().collect()
    }

    pub fn indices(&self) -> Vec<usize> {
        self.0.iter().map(|c| c.index()).collect()
    }
}

/// Every duplicate-free ranking admissible for `kappa` candidates and ballot
/// length `max_len`, in lexicographic order of candidate ids.
///
/// With `full_length` only rankings of exactly `max_len` candidates are
/// returned, otherwise all lengths `1..=max_len`.
pub fn admissible_rankings(kappa: usize, max_len: usize, full_length: bool) -> Result<Vec<Ranking>> {
    check_kappa(kappa)?;
    if max_len == 0 || max_len > kappa {
        return Err(Error::BallotLength { kappa, max_len });
    }
    let lengths = if full_length { max_len..=max_len } else { 1..=max_len };
    let mut out: Vec<Ranking> = lengths
        .flat_map(|len| {
            (0..kappa as u8)
                .map(Candidate)
                .permutations(len)
                .map(Ranking)
        })
        .collect();
    out.sort();
    Ok(out)
}

/// Expected behaviour of the electorate: a Poisson rate for each ranking.
#[derive(Debug, Clone, PartialEq)]
pub struct BallotProfile {
    kappa: usize,
    max_len: usize,
    entries: Vec<(Ranking, f64)>,
    total_expected: f64,
}

impl BallotProfile {
    pub fn new(kappa: usize, max_len: usize, rates: Vec<(Ranking, f64)>) -> Result<Self> {
        let entries = validate_entries(kappa, max_len, rates, |&r: &f64| {
            if r.is_finite() && r >= 0.0 {
                Ok(())
            } else {
                Err(Error::InvalidRate(r))
            }
        })?;
        let total_expected = entries.iter().map(|(_, r)| r).sum();
        Ok(BallotProfile { kappa, max_len, entries, total_expected })
    }

    pub fn kappa(&self) -> usize {
        self.kappa
    }

    pub fn max_len(&self) -> usize {
        self.max_len
    }

    /// Rankings with their rates, sorted by ranking.
    pub fn entries(&self) -> &[(Ranking, f64)] {
        &self.entries
    }

    pub fn total_expected(&self) -> f64 {
        self.total_expected
    }

    pub fn rate(&self, ranking: &Ranking) -> f64 {
        self.entries
            .binary_search_by(|(r, _)| r.cmp(ranking))
            .map(|i| self.entries[i].1)
            .unwrap_or(0.0)
    }

    pub fn candidates(&self) -> impl Iterator<Item = Candidate> {
        (0..self.kappa as u8).map(Candidate)
    }

    pub fn check_ranking(&self, ranking: &Ranking) -> Result<()> {
        check_distinct(ranking.candidates(), self.kappa)?;
        if ranking.len() > self.max_len {
            return Err(Error::RankingTooLong { len: ranking.len(), max_len: self.max_len });
        }
        Ok(())
    }

    /// Same rankings and rates with candidate ids mapped through `perm`
    /// (candidate `c` becomes `perm[c]`).
    pub fn relabel(&self, perm: &[Candidate]) -> Result<Self> {
        check_permutation(perm, self.kappa)?;
        let rates = self
            .entries
            .iter()
            .map(|(r, rate)| (Ranking(r.0.iter().map(|c| perm[c.index()]).collect()), *rate))
            .collect();
        BallotProfile::new(self.kappa, self.max_len, rates)
    }

    /// Mass of rankings on which `a` sits at a position `p <= bound` with
    /// every candidate ranked above it in `dropped`.
    pub(crate) fn support_in(&self, a: Candidate, bound: usize, dropped: CandidateSet) -> f64 {
        self.entries
            .iter()
            .filter(|(r, _)| {
                r.0.iter()
                    .take(bound)
                    .find(|&&c| !dropped.contains(c))
                    .is_some_and(|&c| c == a)
            })
            .map(|(_, rate)| rate)
            .sum()
    }

    /// Expected vote total of `c` once every candidate in `dropped` is out.
    pub(crate) fn total_in(&self, c: Candidate, dropped: CandidateSet) -> f64 {
        self.support_in(c, self.max_len, dropped)
    }
}

/// Rate mass of voters ranking `a` within the first `bound` positions with
/// everything above it already in `dropped`. Each ranking counts once.
pub fn conditional_support(
    profile: &BallotProfile,
    a: Candidate,
    bound: usize,
    dropped: &[Candidate],
) -> Result<f64> {
    check_distinct(&[a], profile.kappa)?;
    check_distinct(dropped, profile.kappa)?;
    if bound == 0 || bound > profile.max_len {
        return Err(Error::PositionBound { bound, max_len: profile.max_len });
    }
    let dropped: CandidateSet = dropped.iter().collect();
    if dropped.contains(a) {
        return Err(Error::CandidateDropped(a.index()));
    }
    Ok(profile.support_in(a, bound, dropped))
}

/// Expected vote total of `c` after the candidates in `dropped` have been
/// eliminated.
pub fn expected_total(profile: &BallotProfile, c: Candidate, dropped: &[Candidate]) -> Result<f64> {
    check_distinct(&[c], profile.kappa)?;
    check_distinct(dropped, profile.kappa)?;
    if dropped.len() + 2 > profile.kappa {
        return Err(Error::TooManyDropped { dropped: dropped.len(), kappa: profile.kappa });
    }
    let set: CandidateSet = dropped.iter().collect();
    if set.contains(c) {
        return Err(Error::CandidateDropped(c.index()));
    }
    Ok(profile.total_in(c, set))
}

/// A concrete electorate: an integer number of ballots per ranking.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RealizedElection {
    kappa: usize,
    max_len: usize,
    entries: Vec<(Ranking, u64)>,
}

impl RealizedElection {
    pub fn new(kappa: usize, max_len: usize, counts: Vec<(Ranking, u64)>) -> Result<Self> {
        let entries = validate_entries(kappa, max_len, counts, |_| Ok(()))?;
        Ok(RealizedElection { kappa, max_len, entries })
    }

    pub fn kappa(&self) -> usize {
        self.kappa
    }

    pub fn max_len(&self) -> usize {
        self.max_len
    }

    pub fn entries(&self) -> &[(Ranking, u64)] {
        &self.entries
    }

    pub fn total_ballots(&self) -> u64 {
        self.entries.iter().map(|(_, n)| n).sum()
    }
}

fn validate_entries<T>(
    kappa: usize,
    max_len: usize,
    mut entries: Vec<(Ranking, T)>,
    check_value: impl Fn(&T) -> Result<()>,
) -> Result<Vec<(Ranking, T)>> {
    check_kappa(kappa)?;
    if max_len == 0 || max_len > kappa {
        return Err(Error::BallotLength { kappa, max_len });
    }
    for (ranking, value) in &entries {
        check_distinct(ranking.candidates(), kappa)?;
        if ranking.is_empty() {
            return Err(Error::EmptyRanking);
        }
        if ranking.len() > max_len {
            return Err(Error::RankingTooLong { len: ranking.len(), max_len });
        }
        check_value(value)?;
    }
    entries.sort_by(|a, b| a.0.cmp(&b.0));
    if let Some(w) = entries.windows(2).find(|w| w[0].0 == w[1].0) {
        return Err(Error::DuplicateRanking(w[0].0.indices()));
    }
    Ok(entries)
}

pub(crate) fn check_permutation(perm: &[Candidate], kappa: usize) -> Result<()> {
    if perm.len() != kappa {
        return Err(Error::SequenceLength { len: perm.len(), expected: kappa });
    }
    check_distinct(perm, kappa)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rule {
    Irv,
    Smdp,
}

/// Deterministic priority order used to settle exact ties in a count.
///
/// The first candidate has the highest priority: it wins a tie for the most
/// votes and survives a tie for the fewest.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TieBreak {
    rank: Vec<u8>,
}

impl TieBreak {
    pub fn new(priority: &[Candidate], kappa: usize) -> Result<Self> {
        check_permutation(priority, kappa)?;
        let mut rank = vec![0u8; kappa];
        for (pos, c) in priority.iter().enumerate() {
            rank[c.index()] = pos as u8;
        }
        Ok(TieBreak { rank })
    }

    /// Lower id wins.
    pub fn ascending(kappa: usize) -> Self {
        TieBreak { rank: (0..kappa as u8).collect() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub winner: Candidate,
    /// Elimination order for IRV; empty for SMDP.
    pub drops: EliminationSequence,
}

/// Counts a realized election under `rule`.
pub fn tabulate(realized: &RealizedElection, rule: Rule, tie_break: &TieBreak) -> Result<Outcome> {
    if realized.total_ballots() == 0 {
        return Err(Error::EmptyElection);
    }
    if tie_break.rank.len() != realized.kappa {
        return Err(Error::SequenceLength { len: tie_break.rank.len(), expected: realized.kappa });
    }
    let ballots = realized.entries.iter().map(|(r, n)| (r.candidates(), *n));
    match rule {
        Rule::Irv => {
            let mut drops = Vec::with_capacity(realized.kappa - 1);
            let winner = count_irv(realized.kappa, ballots, &tie_break.rank, &mut drops);
            Ok(Outcome { winner, drops: EliminationSequence(drops) })
        }
        Rule::Smdp => {
            let winner = count_smdp(realized.kappa, ballots, &tie_break.rank);
            Ok(Outcome { winner, drops: EliminationSequence(Vec::new()) })
        }
    }
}

/// IRV count over `(ranking, count)` pairs. Elimination order is written to
/// `drops`; the winner is returned. Zero-ballot elections are settled
/// entirely by `rank`.
pub(crate) fn count_irv<'a, I>(kappa: usize, ballots: I, rank: &[u8], drops: &mut Vec<Candidate>) -> Candidate
where
    I: Iterator<Item = (&'a [Candidate], u64)> + Clone,
{
    drops.clear();
    let mut dropped = CandidateSet::EMPTY;
    let mut totals = [0u64; MAX_CANDIDATES];
    for _ in 1..kappa {
        totals[..kappa].fill(0);
        for (ranking, n) in ballots.clone() {
            if n == 0 {
                continue;
            }
            if let Some(c) = top_remaining(ranking, dropped) {
                totals[c.index()] += n;
            }
        }
        let mut loser: Option<Candidate> = None;
        for c in (0..kappa as u8).map(Candidate) {
            if dropped.contains(c) {
                continue;
            }
            loser = match loser {
                None => Some(c),
                Some(l) => {
                    let (tc, tl) = (totals[c.index()], totals[l.index()]);
                    if tc < tl || (tc == tl && rank[c.index()] > rank[l.index()]) {
                        Some(c)
                    } else {
                        Some(l)
                    }
                }
            };
        }
        let loser = loser.expect("at least two candidates remain");
        dropped = dropped.with(loser);
        drops.push(loser);
    }
    (0..kappa as u8)
        .map(Candidate)
        .find(|&c| !dropped.contains(c))
        .expect("one candidate remains")
}

pub(crate) fn count_smdp<'a, I>(kappa: usize, ballots: I, rank: &[u8]) -> Candidate
where
    I: Iterator<Item = (&'a [Candidate], u64)>,
{
    let mut totals = [0u64; MAX_CANDIDATES];
    for (ranking, n) in ballots {
        if let Some(c) = ranking.first() {
            totals[c.index()] += n;
        }
    }
    (0..kappa as u8)
        .map(Candidate)
        .max_by(|&a, &b| {
            totals[a.index()]
                .cmp(&totals[b.index()])
                .then(rank[b.index()].cmp(&rank[a.index()]))
        })
        .expect("kappa >= 2")
}
