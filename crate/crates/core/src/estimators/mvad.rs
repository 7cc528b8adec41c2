use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;

use super::{argmax_set, check_budget, final_pick, majority, AdConfig, EstimationOutcome};
use crate::centrality::{likelihood_table, CentralityTable};
use crate::diffusion::Snapshot;
use crate::error::Result;
use crate::respondent::{query_rounds, TruthModel};

/// Adaptive majority-vote estimator. Walks from the rumor center, asking
/// each respondent `r` id/dir pairs and moving to its majority-designated
/// neighbor. With perfect identity answers the walk stops at the first
/// respondent that says "yes"; otherwise the estimate is drawn from the
/// identity-majority set and the most-visited set.
///
/// Designations of non-infected neighbors are discarded since the querier
/// knows the snapshot; a visit without usable designations moves to a
/// uniformly random infected neighbor.
pub fn run_mvad<R: Rng + ?Sized>(
    snapshot: &Snapshot,
    config: &AdConfig,
    model: &TruthModel,
    rng: &mut R,
) -> Result<EstimationOutcome> {
    let likelihood = likelihood_table(snapshot)?;
    run_mvad_with(snapshot, &likelihood, config, model, rng)
}

pub fn run_mvad_with<R: Rng + ?Sized>(
    snapshot: &Snapshot,
    likelihood: &CentralityTable,
    config: &AdConfig,
    model: &TruthModel,
    rng: &mut R,
) -> Result<EstimationOutcome> {
    let r = check_budget(config.budget, config.r)?;
    let adj = snapshot.local_adjacency();
    let mut remaining = config.budget;
    let mut s = likelihood.center();
    let mut s_i = BTreeSet::new();
    let mut eta: BTreeMap<_, u32> = BTreeMap::new();
    let mut walk = Vec::new();

    while remaining >= config.r {
        remaining -= config.r;
        walk.push(s);
        *eta.entry(s).or_default() += 1;
        let record = query_rounds(s, snapshot, r, model, rng)?;
        if model.perfect_identity() {
            if record.yes_count > 0 {
                return Ok(EstimationOutcome {
                    estimate: s,
                    s_i: BTreeSet::from([s]),
                    s_d: argmax_set(&eta),
                    eta,
                    walk,
                    budget_used: config.budget - remaining,
                    ..Default::default()
                });
            }
        } else if record.says_source() {
            s_i.insert(s);
        }

        let local = snapshot.local_index(s).expect("walk stays on infected nodes");
        let votes = record
            .designations
            .iter()
            .filter(|(w, _)| snapshot.is_infected(**w))
            .map(|(&w, &c)| (w, c));
        s = match majority(votes, rng) {
            Some(w) => w,
            None if adj[local].is_empty() => s,
            None => snapshot.node(adj[local][rng.random_range(0..adj[local].len())]),
        };
    }

    let s_d = argmax_set(&eta);
    let estimate = final_pick(likelihood, &s_i, &s_d, false, &walk);
    Ok(EstimationOutcome {
        estimate,
        s_i,
        s_d,
        eta,
        walk,
        budget_used: config.budget - remaining,
        budget_discarded: remaining,
        ..Default::default()
    })
}
