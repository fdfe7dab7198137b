use rayon::prelude::*;

use super::enumerate::{all_candidates, for_each_alternate, orderings};
use super::{
    DirectEvent, IndirectEvent, PivotConfig, PivotEvent, PivotReport, UtilityVector, MAX_PIVOT_CANDIDATES,
};
use crate::election::{BallotProfile, Candidate, CandidateSet, EliminationSequence, Ranking};
use crate::error::{Error, Result};
use crate::skellam::{pmf, strictly_greater, ties};

/// Pairwise comparison tables for one profile.
///
/// Every comparison the sums need is between two candidates still standing
/// after some set of drops, so it is computed once per (drop set, pair) and
/// shared by all ballots.
#[derive(Debug, Clone)]
pub struct PivotEngine {
    kappa: usize,
    max_len: usize,
    cfg: PivotConfig,
    totals: Vec<f64>,
    // P(x outlasts y) given the drop set, indexed by `slot`
    survive: Vec<f64>,
    // ½·P(x level with y) + ½·P(x one behind y)
    tie: Vec<f64>,
}

fn mask_of(cands: &[Candidate]) -> CandidateSet {
    cands.iter().copied().collect()
}

impl PivotEngine {
    pub fn new(profile: &BallotProfile, cfg: PivotConfig) -> Result<Self> {
        let kappa = profile.kappa();
        if kappa > MAX_PIVOT_CANDIDATES {
            return Err(Error::Config(format!(
                "pivotal enumeration supports at most {MAX_PIVOT_CANDIDATES} candidates, got {kappa}"
            )));
        }
        let n_masks = 1usize << kappa;
        let mut totals = vec![0.0; n_masks * kappa];
        let mut survive = vec![0.0; n_masks * kappa * kappa];
        let mut tie = vec![0.0; n_masks * kappa * kappa];
        let tol = cfg.tol;
        for bits in 0..n_masks {
            let mask = CandidateSet::from_bits(bits as u32);
            if mask.len() + 2 > kappa {
                continue;
            }
            let standing: Vec<Candidate> = (0..kappa as u8).map(Candidate).filter(|&c| !mask.contains(c)).collect();
            for &x in &standing {
                totals[bits * kappa + x.index()] = profile.total_in(x, mask);
            }
            for &x in &standing {
                let vx = totals[bits * kappa + x.index()];
                for &y in &standing {
                    if x == y {
                        continue;
                    }
                    let vy = totals[bits * kappa + y.index()];
                    let slot = (bits * kappa + x.index()) * kappa + y.index();
                    let mut s = strictly_greater(vx, vy, tol);
                    if cfg.sequence_ties {
                        s += 0.5 * pmf(0, vx, vy, tol);
                    }
                    survive[slot] = s;
                    tie[slot] = ties(vx, vy, tol).pivotal();
                }
            }
        }
        Ok(PivotEngine { kappa, max_len: profile.max_len(), cfg, totals, survive, tie })
    }

    pub fn kappa(&self) -> usize {
        self.kappa
    }

    pub fn config(&self) -> PivotConfig {
        self.cfg
    }

    /// Expected total of `c` after the drops in `dropped`.
    pub fn total(&self, c: Candidate, dropped: CandidateSet) -> f64 {
        self.totals[dropped.bits() as usize * self.kappa + c.index()]
    }

    fn slot(&self, mask: CandidateSet, x: Candidate, y: Candidate) -> usize {
        (mask.bits() as usize * self.kappa + x.index()) * self.kappa + y.index()
    }

    fn survives(&self, mask: CandidateSet, x: Candidate, y: Candidate) -> f64 {
        self.survive[self.slot(mask, x, y)]
    }

    fn tie_factor(&self, mask: CandidateSet, c: Candidate, opp: Candidate) -> f64 {
        self.tie[self.slot(mask, c, opp)]
    }

    /// Product of the survival comparisons of `rounds` consecutive drops of
    /// `order`, starting after the drops in `prefix`.
    fn chain(&self, mut mask: CandidateSet, order: &[Candidate], rounds: usize) -> f64 {
        let mut p = 1.0;
        for l in 0..rounds {
            let out = order[l];
            for &r in &order[l + 1..] {
                p *= self.survives(mask, r, out);
            }
            if p == 0.0 {
                return 0.0;
            }
            mask = mask.with(out);
        }
        p
    }

    pub fn drop_sequence_prob(&self, seq: &EliminationSequence) -> Result<f64> {
        let s = seq.as_slice();
        let full = seq.to_set();
        if s.len() != self.kappa || full.len() != self.kappa || s.iter().any(|c| c.index() >= self.kappa) {
            return Err(Error::SequenceLength { len: s.len(), expected: self.kappa });
        }
        Ok(self.chain(CandidateSet::EMPTY, s, self.kappa - 1))
    }

    pub(crate) fn check_ballot(&self, ballot: &Ranking) -> Result<()> {
        if ballot.len() > self.max_len {
            return Err(Error::RankingTooLong { len: ballot.len(), max_len: self.max_len });
        }
        if let Some(c) = ballot.candidates().iter().find(|c| c.index() >= self.kappa) {
            return Err(Error::UnknownCandidate { candidate: c.index(), kappa: self.kappa });
        }
        Ok(())
    }

    /// Direct pivotal probability, the utility it carries, and optionally the
    /// individual events.
    pub(crate) fn direct(
        &self,
        ballot: &Ranking,
        utility: Option<&UtilityVector>,
        mut events: Option<&mut Vec<DirectEvent>>,
    ) -> (f64, f64) {
        let kappa = self.kappa;
        let b = ballot.candidates();
        let (mut p_sum, mut u_sum) = (0.0, 0.0);
        let mut order = Vec::with_capacity(kappa);
        for (i, &c) in b.iter().enumerate() {
            let higher = mask_of(&b[..i]);
            let others: Vec<Candidate> = all_candidates(kappa).into_iter().filter(|&x| x != c).collect();
            for s in orderings(&others) {
                let early = mask_of(&s[..kappa - 2]);
                if !higher.is_subset(early) {
                    continue;
                }
                order.clear();
                order.extend_from_slice(&s);
                order.push(c);
                let runner_up = s[kappa - 2];
                let p = self.chain(CandidateSet::EMPTY, &order, kappa - 2) * self.tie_factor(early, c, runner_up);
                let swing = utility.map(|u| u.get(c) - u.get(runner_up));
                p_sum += p;
                if let Some(sw) = swing {
                    u_sum += p * sw;
                }
                if let Some(ev) = events.as_deref_mut() {
                    ev.push(DirectEvent {
                        position: i + 1,
                        candidate: c,
                        drops: EliminationSequence::from_vec_unchecked(s),
                        runner_up,
                        probability: p,
                        utility_swing: swing,
                    });
                }
            }
        }
        (p_sum, u_sum)
    }

    pub(crate) fn indirect(
        &self,
        ballot: &Ranking,
        utility: Option<&UtilityVector>,
        mut events: Option<&mut Vec<IndirectEvent>>,
    ) -> (f64, f64) {
        let kappa = self.kappa;
        let b = ballot.candidates();
        let (mut p_sum, mut u_sum) = (0.0, 0.0);
        if kappa < 3 {
            return (0.0, 0.0);
        }
        let everyone = all_candidates(kappa);
        for (i, &c) in b.iter().enumerate() {
            let higher = mask_of(&b[..i]);
            for a in orderings(&everyone) {
                let y = a.iter().position(|&x| x == c).unwrap() + 1;
                if y > kappa - 2 {
                    continue;
                }
                let before = mask_of(&a[..y - 1]);
                if !higher.is_subset(before) {
                    continue;
                }
                let base = self.chain(CandidateSet::EMPTY, &a, kappa - 1);
                if base == 0.0 && events.is_none() {
                    continue;
                }
                let winner = a[kappa - 1];
                for_each_alternate(&a, y, |t, alt| {
                    let suffix = self.chain(before.with(t), &alt[y..], kappa - y - 1);
                    let p = base * suffix * self.tie_factor(before, c, t);
                    let swing = utility.map(|u| u.get(alt[kappa - 1]) - u.get(winner));
                    p_sum += p;
                    if let Some(sw) = swing {
                        u_sum += p * sw;
                    }
                    if let Some(ev) = events.as_deref_mut() {
                        ev.push(IndirectEvent {
                            position: i + 1,
                            candidate: c,
                            base: EliminationSequence::from_vec_unchecked(a.clone()),
                            round: y,
                            alternate: EliminationSequence::from_vec_unchecked(alt.to_vec()),
                            replaced: t,
                            probability: p,
                            utility_swing: swing,
                        });
                    }
                });
            }
        }
        (p_sum, u_sum)
    }

    pub fn report(&self, ballot: &Ranking, utility: Option<&UtilityVector>, with_events: bool) -> Result<PivotReport> {
        self.check_ballot(ballot)?;
        if let Some(u) = utility {
            if u.values().len() != self.kappa {
                return Err(Error::UtilityLength { len: u.values().len(), kappa: self.kappa });
            }
        }
        let mut direct_events = Vec::new();
        let mut indirect_events = Vec::new();
        let (pd, ud) = self.direct(ballot, utility, with_events.then_some(&mut direct_events));
        let (pi, ui) = self.indirect(ballot, utility, with_events.then_some(&mut indirect_events));
        let events = with_events.then(|| {
            direct_events
                .into_iter()
                .map(PivotEvent::Direct)
                .chain(indirect_events.into_iter().map(PivotEvent::Indirect))
                .collect()
        });
        Ok(PivotReport {
            ballot: ballot.clone(),
            p_direct: pd,
            p_indirect: pi,
            p_total: pd + pi,
            expected_utility: utility.map(|_| ud + ui),
            events,
        })
    }

    /// Reports for many ballots, evaluated in parallel and returned in input
    /// order.
    pub fn sweep(&self, ballots: &[Ranking], utility: Option<&UtilityVector>) -> Result<Vec<PivotReport>> {
        self.sweep_with(ballots, utility, false)
    }

    pub fn sweep_with(
        &self,
        ballots: &[Ranking],
        utility: Option<&UtilityVector>,
        with_events: bool,
    ) -> Result<Vec<PivotReport>> {
        ballots.par_iter().map(|b| self.report(b, utility, with_events)).collect()
    }
}
