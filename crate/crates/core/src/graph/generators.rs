use std::collections::VecDeque;

use rand::Rng;

use super::{FiniteGraph, RegularTree};
use crate::error::{invalid_param, Error, Result};

pub const GALTON_WATSON_MAX_ATTEMPTS: usize = 10_000;

pub fn make_regular_tree(d: usize) -> Result<RegularTree> {
    RegularTree::new(d)
}

/// Offspring law for non-root nodes of a Galton-Watson tree. The root draws
/// from the same range shifted up by one, since it has no parent edge.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OffspringLaw {
    Uniform { min: usize, max: usize },
}

impl OffspringLaw {
    pub fn default_for(d_max: usize) -> Self {
        OffspringLaw::Uniform {
            min: 1,
            max: d_max - 1,
        }
    }

    fn sample<R: Rng + ?Sized>(&self, root: bool, rng: &mut R) -> usize {
        let OffspringLaw::Uniform { min, max } = *self;
        let shift = usize::from(root);
        rng.random_range(min + shift..=max + shift)
    }
}

/// Galton-Watson tree with offspring uniform on `{1, .., d_max-1}` (root:
/// `{1, .., d_max}`), grown breadth-first until it has `min_nodes` nodes.
pub fn make_galton_watson<R: Rng + ?Sized>(
    d_max: usize,
    min_nodes: usize,
    rng: &mut R,
) -> Result<FiniteGraph> {
    if d_max < 2 {
        return Err(invalid_param(format!("d_max must be at least 2, got {d_max}")));
    }
    make_galton_watson_with(d_max, min_nodes, OffspringLaw::default_for(d_max), rng)
}

pub fn make_galton_watson_with<R: Rng + ?Sized>(
    d_max: usize,
    min_nodes: usize,
    law: OffspringLaw,
    rng: &mut R,
) -> Result<FiniteGraph> {
    let OffspringLaw::Uniform { min, max } = law;
    if d_max < 2 || min_nodes < 1 || min > max || max + 1 > d_max {
        return Err(invalid_param(format!(
            "invalid galton-watson parameters: d_max={d_max}, min_nodes={min_nodes}, offspring {min}..={max}"
        )));
    }
    for _ in 0..GALTON_WATSON_MAX_ATTEMPTS {
        let mut edges = Vec::with_capacity(min_nodes);
        let mut count = 1usize;
        let mut queue = VecDeque::from([0usize]);
        while count < min_nodes {
            let Some(v) = queue.pop_front() else { break };
            let kids = law.sample(v == 0, rng);
            for _ in 0..kids {
                edges.push((v, count));
                queue.push_back(count);
                count += 1;
            }
        }
        if count >= min_nodes {
            return FiniteGraph::from_edges(count, edges);
        }
    }
    Err(Error::GenerationFailure(format!(
        "galton-watson process died out {GALTON_WATSON_MAX_ATTEMPTS} times before reaching {min_nodes} nodes"
    )))
}

/// `G(n, avg_degree/(n-1))`, reduced to its largest connected component.
pub fn make_erdos_renyi<R: Rng + ?Sized>(
    n: usize,
    avg_degree: f64,
    rng: &mut R,
) -> Result<FiniteGraph> {
    if n < 2 || !(avg_degree > 0.0 && avg_degree <= (n - 1) as f64) {
        return Err(invalid_param(format!(
            "erdos-renyi needs n >= 2 and 0 < avg_degree <= n-1, got n={n}, avg={avg_degree}"
        )));
    }
    let p = (avg_degree / (n - 1) as f64).min(1.0);
    // Geometric skipping over the lower-triangular pair sequence.
    let log_q = (1.0 - p).ln();
    let mut edges = Vec::new();
    let (mut v, mut w) = (1usize, -1i64);
    while v < n {
        let u: f64 = rng.random();
        let skip = if log_q == f64::NEG_INFINITY {
            0
        } else {
            ((1.0 - u).ln() / log_q).floor() as i64
        };
        w += 1 + skip;
        while w >= v as i64 && v < n {
            w -= v as i64;
            v += 1;
        }
        if v < n {
            edges.push((v, w as usize));
        }
    }
    let lcc = FiniteGraph::from_edges(n, edges)?.largest_component();
    if lcc.node_count() < 2 {
        return Err(Error::GenerationFailure(
            "largest component has fewer than 2 nodes".into(),
        ));
    }
    Ok(lcc)
}

/// Preferential attachment where new node `i` brings enough edges to keep
/// `|E| ≈ edge_node_ratio · |V|`. With ratio 1.5 the attachment count
/// alternates between 1 and 2.
pub fn make_scale_free<R: Rng + ?Sized>(
    n: usize,
    edge_node_ratio: f64,
    rng: &mut R,
) -> Result<FiniteGraph> {
    if n < 3 || edge_node_ratio.is_nan() || edge_node_ratio <= 0.0 {
        return Err(invalid_param(format!(
            "scale-free needs n >= 3 and a positive ratio, got n={n}, ratio={edge_node_ratio}"
        )));
    }
    let mut edges = vec![(0usize, 1usize)];
    // every edge contributes both endpoints: sampling uniformly from this
    // list is sampling proportional to degree
    let mut endpoints = vec![0usize, 1];
    let mut targets = Vec::new();
    for i in 2..n {
        let wanted = (edge_node_ratio * (i + 1) as f64).round() as usize;
        let m = wanted.saturating_sub(edges.len()).clamp(1, i);
        targets.clear();
        while targets.len() < m {
            let t = endpoints[rng.random_range(0..endpoints.len())];
            if !targets.contains(&t) {
                targets.push(t);
            }
        }
        for &t in &targets {
            edges.push((i, t));
            endpoints.push(i);
            endpoints.push(t);
        }
    }
    FiniteGraph::from_edges(n, edges)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn galton_watson_dmax_two_is_a_path() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let g = make_galton_watson(2, 50, &mut rng).unwrap();
        assert!(g.max_degree() <= 2);
        assert!(g.is_tree());
    }

    #[test]
    fn galton_watson_respects_bounds() {
        for seed in 0..20 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let g = make_galton_watson(10, 500, &mut rng).unwrap();
            assert!(g.node_count() >= 500);
            assert!(g.max_degree() <= 10);
            assert_eq!(g.edge_count(), g.node_count() - 1);
            assert!(g.is_tree());
            assert!(g.is_symmetric());
        }
    }

    #[test]
    fn galton_watson_retries_after_extinction() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let law = OffspringLaw::Uniform { min: 0, max: 2 };
        let g = make_galton_watson_with(3, 40, law, &mut rng).unwrap();
        assert!(g.node_count() >= 40);
        assert!(g.is_tree());
    }

    #[test]
    fn galton_watson_gives_up() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let law = OffspringLaw::Uniform { min: 0, max: 0 };
        let err = make_galton_watson_with(3, 3, law, &mut rng).unwrap_err();
        assert!(matches!(err, Error::GenerationFailure(_)));
    }

    #[test]
    fn erdos_renyi_complete_graph() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let g = make_erdos_renyi(30, 29.0, &mut rng).unwrap();
        assert_eq!(g.node_count(), 30);
        assert_eq!(g.edge_count(), 30 * 29 / 2);
    }

    #[test]
    fn erdos_renyi_mean_degree() {
        let mut total = 0.0;
        for seed in 0..10 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let g = make_erdos_renyi(2000, 4.0, &mut rng).unwrap();
            assert!(g.is_connected());
            assert!(g.is_symmetric());
            total += g.mean_degree();
        }
        let mean = total / 10.0;
        assert!((3.5..=4.5).contains(&mean), "mean degree {mean}");
    }

    #[test]
    fn scale_free_ratio_and_tail() {
        for seed in 0..20 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let g = make_scale_free(2000, 1.5, &mut rng).unwrap();
            let ratio = g.edge_count() as f64 / g.node_count() as f64;
            assert!((1.4..=1.6).contains(&ratio), "ratio {ratio}");
            assert!(g.is_connected());
            assert!(g.max_degree() as f64 > 5.0 * g.mean_degree());
        }
    }

    #[test]
    fn scale_free_small_n_connected() {
        for n in 3..40 {
            let mut rng = ChaCha8Rng::seed_from_u64(n as u64);
            assert!(make_scale_free(n, 1.5, &mut rng).unwrap().is_connected());
        }
    }

    #[test]
    fn generators_are_seed_deterministic() {
        let a = make_erdos_renyi(500, 4.0, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        let b = make_erdos_renyi(500, 4.0, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        assert_eq!(a.edges(), b.edges());
        let a = make_scale_free(500, 1.5, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        let b = make_scale_free(500, 1.5, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        assert_eq!(a.edges(), b.edges());
        let a = make_galton_watson(10, 300, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        let b = make_galton_watson(10, 300, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        assert_eq!(a.edges(), b.edges());
    }
}
