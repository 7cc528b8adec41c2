//! Closed-form budget thresholds, rate functions, repetition counts and
//! detection lower bounds for `d`-regular trees.
//!
//! Entropies are standard (non-negative) Shannon entropies in bits. The
//! `log log` factors of the thresholds use natural logarithms.

use serde::Serialize;
use statrs::function::gamma::ln_gamma;

use crate::error::{invalid_param, Result};

/// Rate functions below this value are treated as zero.
pub const RATE_EPS: f64 = 1e-12;

fn xlog2x(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        x * x.log2()
    }
}

/// `(H(p), H(q))` with `H(p) = −p log₂p − (1−p) log₂(1−p)` and
/// `H(q) = −q log₂q − (1−q) log₂((1−q)/(d−1))`.
pub fn entropies(p: f64, q: f64, d: usize) -> (f64, f64) {
    let hp = -xlog2x(p) - xlog2x(1.0 - p);
    let rest = 1.0 - q;
    let hq = if rest <= 0.0 {
        -xlog2x(q)
    } else {
        -xlog2x(q) - rest * (rest / (d as f64 - 1.0)).log2()
    };
    (hp, hq)
}

pub fn f1(d: usize, p: f64, q: f64) -> f64 {
    let (hp, hq) = entropies(p, q, d);
    (1.0 - hp) + p * (1.0 - p) * ((d as f64).log2() - hq)
}

pub fn f2(d: usize, p: f64, q: f64) -> f64 {
    let d = d as f64;
    3.0 * (p - 0.5).powi(2) + (d - 1.0) * p * (1.0 - p) / (3.0 * d) * (q - 1.0 / d).powi(2)
}

pub fn f3(d: usize, p: f64, q: f64) -> f64 {
    let (hp, hq) = entropies(p, q, d);
    (1.0 - hp) + p * ((d as f64).log2() - hq)
}

pub fn f4(d: usize, p: f64, q: f64) -> f64 {
    let d = d as f64;
    2.0 * d / (d - 1.0) * (p - 0.5).powi(2) + (d - 1.0) / (d - 2.0) * (q - 1.0 / d).powi(3)
}

/// Querying scheme.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Na,
    Ad,
}

impl std::str::FromStr for Scheme {
    type Err = crate::Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "na" => Ok(Scheme::Na),
            "ad" => Ok(Scheme::Ad),
            _ => Err(invalid_param(format!("unknown scheme '{s}' (expected na or ad)"))),
        }
    }
}

impl std::fmt::Display for Scheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Scheme::Na => "na",
            Scheme::Ad => "ad",
        })
    }
}

/// Which side of the budget characterization.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundKind {
    Necessary,
    Sufficient,
}

impl std::str::FromStr for BoundKind {
    type Err = crate::Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "necessary" => Ok(BoundKind::Necessary),
            "sufficient" => Ok(BoundKind::Sufficient),
            _ => Err(invalid_param(format!(
                "unknown bound kind '{s}' (expected necessary or sufficient)"
            ))),
        }
    }
}

impl std::fmt::Display for BoundKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            BoundKind::Necessary => "necessary",
            BoundKind::Sufficient => "sufficient",
        })
    }
}

/// The fractional part of the repetition-count formula before flooring:
/// `r* = ⌊1 + slope · g(K)⌋` with `g = ln K` (NA) or `ln ln K` (AD).
fn r_star_slope(scheme: Scheme, kind: BoundKind, d: usize, p: f64, q: f64) -> f64 {
    let (hp, hq) = entropies(p, q, d);
    let df = d as f64;
    let e = std::f64::consts::E;
    match (scheme, kind) {
        (Scheme::Na, BoundKind::Necessary) => {
            4.0 * (1.0 - p) * (7.0 * hp + 2.0 * hq) / (3.0 * e * (df - 1.0).ln())
        }
        (Scheme::Na, BoundKind::Sufficient) => {
            2.0 * (1.0 - p) * (1.0 + (1.0 - q).powi(2)) / (e * (df - 1.0).ln())
        }
        (Scheme::Ad, BoundKind::Necessary) => {
            7.0 * df * p * (3.0 * hp + 2.0 * df * hq) / (2.0 * (df - 1.0))
        }
        (Scheme::Ad, BoundKind::Sufficient) => {
            7.0 * df * df * (2.0 * (1.0 - p).powi(3) + (1.0 - q).powi(2)) / (3.0 * (df - 1.0))
        }
    }
}

fn budget_growth(scheme: Scheme, k: f64) -> f64 {
    match scheme {
        Scheme::Na => k.ln(),
        Scheme::Ad => k.ln().ln(),
    }
}

/// Unfloored repetition count `1 + slope · g(K)` (real `K`).
pub fn r_star_continuous(scheme: Scheme, kind: BoundKind, k: f64, d: usize, p: f64, q: f64) -> f64 {
    1.0 + r_star_slope(scheme, kind, d, p, q) * budget_growth(scheme, k)
}

/// Repetition count from the matching budget theorem, floored and clamped
/// to `[1, K]`.
pub fn choose_r_star(
    scheme: Scheme,
    kind: BoundKind,
    k: u64,
    d: usize,
    p: f64,
    q: f64,
) -> Result<u64> {
    if k < 3 {
        return Err(invalid_param(format!("budget K must be at least 3, got {k}")));
    }
    if d < 3 {
        return Err(invalid_param(format!("degree d must be at least 3, got {d}")));
    }
    let r = r_star_continuous(scheme, kind, k as f64, d, p, q).floor();
    Ok((r.max(1.0) as u64).min(k))
}

/// Inputs shared by the budget thresholds.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BudgetInputs {
    pub delta: f64,
    pub d: usize,
    pub p: f64,
    pub q: f64,
    /// Entropy of infection times; when absent the bound `H ≤ K/r*` is
    /// resolved self-consistently.
    pub h_t: Option<f64>,
    pub c_const: f64,
    pub u1: f64,
    pub u2: f64,
}

impl BudgetInputs {
    pub fn new(delta: f64, d: usize, p: f64, q: f64) -> Result<Self> {
        let inputs = BudgetInputs {
            delta,
            d,
            p,
            q,
            h_t: None,
            c_const: 1.0,
            u1: 1.0,
            u2: 1.0,
        };
        inputs.validate()?;
        Ok(inputs)
    }

    pub fn with_h_t(mut self, h_t: f64) -> Self {
        self.h_t = Some(h_t);
        self
    }

    pub fn with_constants(mut self, c: f64, u1: f64, u2: f64) -> Self {
        self.c_const = c;
        self.u1 = u1;
        self.u2 = u2;
        self
    }

    /// `0 < δ < 1`, `d ≥ 3`, `1/2 ≤ p ≤ 1`, `1/d ≤ q ≤ 1`. The closed
    /// interval ends are admitted so the no-information point can be
    /// evaluated (it yields a diverging threshold).
    pub fn validate(&self) -> Result<()> {
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(invalid_param(format!("delta must lie in (0, 1), got {}", self.delta)));
        }
        if self.d < 3 {
            return Err(invalid_param(format!("d must be at least 3, got {}", self.d)));
        }
        if !(self.p >= 0.5 && self.p <= 1.0) {
            return Err(invalid_param(format!("p must lie in [1/2, 1], got {}", self.p)));
        }
        let floor = 1.0 / self.d as f64;
        if !(self.q >= floor && self.q <= 1.0) {
            return Err(invalid_param(format!("q must lie in [1/d, 1], got {}", self.q)));
        }
        if let Some(h) = self.h_t {
            if h.is_nan() || h <= 0.0 {
                return Err(invalid_param(format!("H(T) must be positive, got {h}")));
            }
        }
        if !(self.c_const > 0.0 && self.u1 > 0.0 && self.u2 > 0.0) {
            return Err(invalid_param("constants C, U1, U2 must be positive"));
        }
        Ok(())
    }

    fn alpha(&self) -> f64 {
        if self.p >= 1.0 {
            1.0
        } else {
            2.0
        }
    }
}

/// A budget threshold, or the reason it is unbounded.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "lowercase")]
pub enum Threshold {
    Finite { value: f64 },
    Diverges { reason: String },
}

impl Threshold {
    pub fn value(&self) -> f64 {
        match self {
            Threshold::Finite { value } => *value,
            Threshold::Diverges { .. } => f64::INFINITY,
        }
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, Threshold::Finite { .. })
    }

    fn diverges(reason: impl Into<String>) -> Self {
        Threshold::Diverges {
            reason: reason.into(),
        }
    }

    fn from_value(value: f64) -> Self {
        if value.is_finite() {
            Threshold::Finite { value }
        } else {
            Threshold::diverges("threshold exceeds the floating-point range")
        }
    }
}

fn loglog(x: f64, label: &str) -> Result<f64> {
    let v = x.ln().ln();
    if v.is_nan() || v <= 0.0 {
        return Err(invalid_param(format!(
            "log log({label}) must be positive; delta is too large"
        )));
    }
    Ok(v)
}

fn rate_guard(name: &str, f: f64) -> Option<Threshold> {
    (f <= RATE_EPS).then(|| Threshold::diverges(format!("{name} vanishes: answers carry no information")))
}

/// Sufficient NA budget: `12d/(d−2) · (2/δ) / (f₂ · ln ln(2/δ))`.
pub fn na_sufficient(inputs: &BudgetInputs) -> Result<Threshold> {
    inputs.validate()?;
    let ll = loglog(2.0 / inputs.delta, "2/delta")?;
    let f = f2(inputs.d, inputs.p, inputs.q);
    if let Some(t) = rate_guard("f2", f) {
        return Ok(t);
    }
    let d = inputs.d as f64;
    Ok(Threshold::from_value(
        12.0 * d / (d - 2.0) * (2.0 / inputs.delta) / (f * ll),
    ))
}

/// Sufficient AD budget: `2(2d−3)/d · (ln(7/δ))^α / (f₄ · ln ln(7/δ))`.
pub fn ad_sufficient(inputs: &BudgetInputs) -> Result<Threshold> {
    inputs.validate()?;
    let ll = loglog(7.0 / inputs.delta, "7/delta")?;
    let f = f4(inputs.d, inputs.p, inputs.q);
    if let Some(t) = rate_guard("f4", f) {
        return Ok(t);
    }
    let d = inputs.d as f64;
    let l = (7.0 / inputs.delta).ln();
    Ok(Threshold::from_value(
        2.0 * (2.0 * d - 3.0) / d * l.powf(inputs.alpha()) / (f * ll),
    ))
}

/// Necessary NA budget: `C · H(T) · (2/δ)^½ / (f₁ · ln ln(2/δ))`.
pub fn na_necessary(inputs: &BudgetInputs) -> Result<Threshold> {
    inputs.validate()?;
    let ll = loglog(2.0 / inputs.delta, "2/delta")?;
    let f = f1(inputs.d, inputs.p, inputs.q);
    if let Some(t) = rate_guard("f1", f) {
        return Ok(t);
    }
    let factor = inputs.c_const * (2.0 / inputs.delta).sqrt() / (f * ll);
    Ok(necessary_with_entropy(Scheme::Na, inputs, factor))
}

/// Necessary AD budget: `C · H(T) · (ln(7/δ))^{α/2} / (f₃ · ln ln(7/δ))`.
pub fn ad_necessary(inputs: &BudgetInputs) -> Result<Threshold> {
    inputs.validate()?;
    let ll = loglog(7.0 / inputs.delta, "7/delta")?;
    let f = f3(inputs.d, inputs.p, inputs.q);
    if let Some(t) = rate_guard("f3", f) {
        return Ok(t);
    }
    let l = (7.0 / inputs.delta).ln();
    let factor = inputs.c_const * l.powf(inputs.alpha() / 2.0) / (f * ll);
    Ok(necessary_with_entropy(Scheme::Ad, inputs, factor))
}

/// `K = factor · H(T)`. With no entropy supplied, `H(T) = K / r*(K)`, so the
/// threshold is the budget at which the (unfloored) repetition count equals
/// `factor`; `r*` is increasing in `K`, and the root is found by bisection
/// on `ln K`.
fn necessary_with_entropy(scheme: Scheme, inputs: &BudgetInputs, factor: f64) -> Threshold {
    if let Some(h) = inputs.h_t {
        return Threshold::from_value(factor * h);
    }
    let (d, p, q) = (inputs.d, inputs.p, inputs.q);
    let slope = r_star_slope(scheme, BoundKind::Necessary, d, p, q);
    if slope <= 0.0 {
        // r* is constantly 1: K ≤ factor·K holds for every K iff factor ≥ 1
        return if factor >= 1.0 {
            Threshold::diverges("r* is constant and H(T) = K/r* makes every budget insufficient")
        } else {
            Threshold::Finite { value: 0.0 }
        };
    }
    let excess = |log_k: f64| r_star_continuous(scheme, BoundKind::Necessary, log_k.exp(), d, p, q) - factor;
    // AD grows with ln ln K, so K must exceed e for the growth term to be
    // positive; start the bracket there.
    let mut lo = match scheme {
        Scheme::Na => 0.0,
        Scheme::Ad => 1.0,
    };
    if excess(lo) >= 0.0 {
        return Threshold::Finite { value: lo.exp() };
    }
    let mut hi = lo + 1.0;
    while excess(hi) < 0.0 {
        hi *= 2.0;
        if hi > 1e6 {
            return Threshold::diverges("self-consistent budget exceeds the floating-point range");
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if excess(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Threshold::from_value(hi.exp())
}

/// Dispatch on `(scheme, kind)`.
pub fn budget_threshold(scheme: Scheme, kind: BoundKind, inputs: &BudgetInputs) -> Result<Threshold> {
    match (scheme, kind) {
        (Scheme::Na, BoundKind::Necessary) => na_necessary(inputs),
        (Scheme::Na, BoundKind::Sufficient) => na_sufficient(inputs),
        (Scheme::Ad, BoundKind::Necessary) => ad_necessary(inputs),
        (Scheme::Ad, BoundKind::Sufficient) => ad_sufficient(inputs),
    }
}

/// Bounds on the adaptivity gap `K_na(δ)/K_ad(δ)`:
/// `U₁(1/δ)^½ / ln^α(1/δ) ≤ AG(δ) ≤ U₂(1/δ) / ln^{α/2}(1/δ)`.
pub fn adaptivity_gap_bounds(inputs: &BudgetInputs) -> Result<(f64, f64)> {
    inputs.validate()?;
    if inputs.delta >= (-2.0f64).exp() {
        return Err(invalid_param(format!(
            "delta must be below 1/e^2 for the gap bounds, got {}",
            inputs.delta
        )));
    }
    let inv = 1.0 / inputs.delta;
    let l = inv.ln();
    let a = inputs.alpha();
    Ok((inputs.u1 * inv.sqrt() / l.powf(a), inputs.u2 * inv / l.powf(a / 2.0)))
}

fn check_lb_domain(k: u64, r: u64, d: usize, p: f64, q: f64) -> Result<()> {
    if r < 1 || k < r {
        return Err(invalid_param(format!("need K >= r >= 1, got K={k}, r={r}")));
    }
    if d < 3 {
        return Err(invalid_param(format!("d must be at least 3, got {d}")));
    }
    if !(0.0..=1.0).contains(&p) || !(0.0..=1.0).contains(&q) {
        return Err(invalid_param("p and q must be probabilities"));
    }
    Ok(())
}

/// Detection lower bound for the majority-vote NA estimator:
/// `1 − c((r+p+q)/(r+2))³ exp(−h_d(K,r) w_d(p,q)/2)`, clamped to `[0, 1]`,
/// with `c = 7(d+1)/d`, `w_d = ½(4(p−½)² + (d/(d−1))³(q−1/d)³)` and
/// `h_d = x ln x`, `x = ln(K/r)/ln(d−1)`. Requires `K/r ≥ d−1`.
pub fn detection_lb_mvna(k: u64, r: u64, d: usize, p: f64, q: f64) -> Result<f64> {
    check_lb_domain(k, r, d, p, q)?;
    let df = d as f64;
    if (k / r) < d as u64 - 1 {
        return Err(invalid_param(format!(
            "need K/r >= d-1 for a non-negative h_d, got K={k}, r={r}, d={d}"
        )));
    }
    let x = ((k as f64) / (r as f64)).ln() / (df - 1.0).ln();
    let h = if x > 0.0 { x * x.ln() } else { 0.0 };
    let w = 0.5 * (4.0 * (p - 0.5).powi(2) + (df / (df - 1.0)).powi(3) * (q - 1.0 / df).powi(3));
    let c = 7.0 * (df + 1.0) / df;
    let rf = r as f64;
    let lead = ((rf + p + q) / (rf + 2.0)).powi(3);
    Ok((1.0 - c * lead * (-h * w / 2.0).exp()).clamp(0.0, 1.0))
}

/// Detection lower bound for the majority-vote AD estimator:
/// `1 − c g³ exp(−(p−½)² (K/r) ln(K/r))`, clamped to `[0, 1]`, with
/// `c = (5d+1)/d` and `g = exp(−r(d−1)(q−1/d)² / (3d(1−q)))`.
pub fn detection_lb_mvad(k: u64, r: u64, d: usize, p: f64, q: f64) -> Result<f64> {
    check_lb_domain(k, r, d, p, q)?;
    let df = d as f64;
    let rf = r as f64;
    let g = if q >= 1.0 {
        0.0
    } else {
        (-rf * (df - 1.0) * (q - 1.0 / df).powi(2) / (3.0 * df * (1.0 - q))).exp()
    };
    let c = (5.0 * df + 1.0) / df;
    let ratio = k as f64 / rf;
    let decay = (-(p - 0.5).powi(2) * ratio * ratio.ln()).exp();
    Ok((1.0 - c * g.powi(3) * decay).clamp(0.0, 1.0))
}

/// `Σ_i [ln Γ(h_i) + h_i]`: upper bound on the infection-time entropy of a
/// candidate set with hop distances `h_i` to the source (unit rate).
pub fn h_t_upper_bound(hop_distances: &[u64]) -> Result<f64> {
    hop_distances.iter().try_fold(0.0, |acc, &h| {
        if h < 1 {
            Err(invalid_param("hop distances must be at least 1"))
        } else {
            Ok(acc + ln_gamma(h as f64) + h as f64)
        }
    })
}

/// Lower bound on the probability that `r` majority-voted identity answers
/// put the source in the identity filter: `p + (1−p)(1 − e^{−(p−½)² ln r})`.
pub fn majority_inclusion_bound(p: f64, r: u64) -> f64 {
    let r = (r.max(1)) as f64;
    p + (1.0 - p) * (1.0 - (-(p - 0.5).powi(2) * r.ln()).exp())
}
