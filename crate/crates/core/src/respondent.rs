//! Noisy answers to identity ("are you the source?") and direction ("who
//! infected you?") questions.

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::diffusion::Snapshot;
use crate::error::{invalid_input, invalid_param, Result};
use crate::graph::NodeId;

/// Homogeneous truthfulness: `p` for identity answers, `q` for direction
/// answers.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TruthModel {
    p: f64,
    q: f64,
}

impl TruthModel {
    /// Requires `1/2 < p <= 1` and `0 <= q <= 1`.
    pub fn new(p: f64, q: f64) -> Result<Self> {
        if !(p > 0.5 && p <= 1.0) {
            return Err(invalid_param(format!("p must lie in (1/2, 1], got {p}")));
        }
        if !(0.0..=1.0).contains(&q) {
            return Err(invalid_param(format!("q must lie in [0, 1], got {q}")));
        }
        Ok(TruthModel { p, q })
    }

    /// Like [`TruthModel::new`] but also requires `q > 1/d`.
    pub fn for_degree(p: f64, q: f64, d: usize) -> Result<Self> {
        let model = Self::new(p, q)?;
        if d < 2 || q <= 1.0 / d as f64 {
            return Err(invalid_param(format!(
                "q must exceed 1/d = 1/{d} to carry direction information, got {q}"
            )));
        }
        Ok(model)
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn perfect_identity(&self) -> bool {
        self.p >= 1.0
    }
}

/// Tally of `r` rounds of questioning of one respondent.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnswerRecord {
    pub respondent: NodeId,
    pub rounds: u32,
    pub yes_count: u32,
    pub designations: BTreeMap<NodeId, u32>,
}

impl AnswerRecord {
    pub fn direction_answers(&self) -> u32 {
        self.designations.values().sum()
    }

    /// Majority vote on the identity question (`μ/r >= 1/2`).
    pub fn says_source(&self) -> bool {
        2 * self.yes_count >= self.rounds
    }
}

/// True answer is `v == source`; it is reported with probability `p`.
pub fn answer_id<R: Rng + ?Sized>(v: NodeId, source: NodeId, p: f64, rng: &mut R) -> bool {
    let truth = v == source;
    if rng.random_bool(p.clamp(0.0, 1.0)) {
        truth
    } else {
        !truth
    }
}

/// A non-source names its true parent with probability `q` and otherwise one
/// of its other neighbors uniformly. The source (asked only after a false
/// "no") names a uniformly random neighbor.
pub fn answer_dir<R: Rng + ?Sized>(
    v: NodeId,
    snapshot: &Snapshot,
    q: f64,
    rng: &mut R,
) -> Result<NodeId> {
    let neighbors = snapshot.graph().neighbors(v);
    if neighbors.is_empty() {
        return Err(invalid_input(format!("node {v} has no neighbors")));
    }
    let Some(parent) = snapshot.parent_of(v) else {
        if v == snapshot.source() {
            return Ok(neighbors[rng.random_range(0..neighbors.len())]);
        }
        return Err(invalid_input(format!("node {v} is not infected")));
    };
    if neighbors.len() == 1 || rng.random_bool(q.clamp(0.0, 1.0)) {
        return Ok(parent);
    }
    // uniform over the neighbors other than the parent
    let mut i = rng.random_range(0..neighbors.len() - 1);
    if neighbors[i] >= parent {
        i += 1;
    }
    Ok(neighbors[i])
}

/// `r` rounds of an identity question, each followed by a direction
/// question when the identity answer is "no". Costs `r` budget units.
pub fn query_rounds<R: Rng + ?Sized>(
    v: NodeId,
    snapshot: &Snapshot,
    r: u32,
    model: &TruthModel,
    rng: &mut R,
) -> Result<AnswerRecord> {
    if r < 1 {
        return Err(invalid_param("repetition count r must be at least 1"));
    }
    let mut record = AnswerRecord {
        respondent: v,
        rounds: r,
        ..Default::default()
    };
    for _ in 0..r {
        if answer_id(v, snapshot.source(), model.p, rng) {
            record.yes_count += 1;
        } else {
            let w = answer_dir(v, snapshot, model.q, rng)?;
            *record.designations.entry(w).or_default() += 1;
        }
    }
    Ok(record)
}
