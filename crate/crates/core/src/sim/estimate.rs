//! Blockmodel parameter estimation: block-pair edge frequencies and
//! label proportions from a graph with known labels.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::sim::graph::LabeledGraph;

/// Estimated blockmodel parameters.
///
/// `b_hat[k][l]` is edges divided by potential pairs between blocks k
/// and l; `pi_hat[k]` is the label proportion. Block pairs with no
/// potential pairs at all (only possible for a singleton block's
/// diagonal) get `b_hat` 0 and are listed in `zero_pair_flags` so
/// callers can tell an estimated zero from an undefined one.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SbmEstimate {
    pub b_hat: Vec<Vec<f64>>,
    pub pi_hat: Vec<f64>,
    pub zero_pair_flags: Vec<(usize, usize)>,
}

/// Estimates from labels and an edge predicate over vertex pairs.
/// Every block must contain at least one vertex.
pub(crate) fn estimate_from(
    k: usize,
    labels: &[usize],
    is_edge: impl Fn(usize, usize) -> bool,
) -> Result<SbmEstimate> {
    let n = labels.len();
    let mut counts = vec![0usize; k];
    for &lab in labels {
        counts[lab] += 1;
    }
    if let Some(empty) = counts.iter().position(|&c| c == 0) {
        return Err(Error::domain(
            "estimate_sbm",
            format!("block {empty} has no vertices"),
        ));
    }

    let mut edges = vec![vec![0u64; k]; k];
    for u in 0..n {
        for v in (u + 1)..n {
            if is_edge(u, v) {
                let (a, b) = (labels[u], labels[v]);
                edges[a][b] += 1;
                if a != b {
                    edges[b][a] += 1;
                }
            }
        }
    }

    let mut b_hat = vec![vec![0.0f64; k]; k];
    let mut zero_pair_flags = Vec::new();
    for a in 0..k {
        for b in a..k {
            let pairs = if a == b {
                counts[a] * (counts[a] - 1) / 2
            } else {
                counts[a] * counts[b]
            };
            if pairs == 0 {
                zero_pair_flags.push((a, b));
                continue;
            }
            let rate = edges[a][b] as f64 / pairs as f64;
            b_hat[a][b] = rate;
            b_hat[b][a] = rate;
        }
    }
    let pi_hat = counts.iter().map(|&c| c as f64 / n as f64).collect();
    Ok(SbmEstimate {
        b_hat,
        pi_hat,
        zero_pair_flags,
    })
}

/// Block-pair edge frequencies and label proportions of a graph.
pub fn estimate_sbm(g: &LabeledGraph) -> Result<SbmEstimate> {
    estimate_from(g.k(), g.labels(), |u, v| g.has_edge(u, v))
}
