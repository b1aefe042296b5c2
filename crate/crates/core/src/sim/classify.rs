//! Vertex classifiers for a held-out vertex of an observed graph: the
//! block-degree ratio rule, the binomial plug-in rule, the
//! feature-density rule, and the missing-aware likelihood ratio.
//!
//! All classifiers break score ties by a uniform seeded draw among the
//! leaders, and all log-space scores use explicit guards so that a
//! zero probability can sink a candidate to −∞ but never produce NaN.

use crate::error::{Error, Result};
use crate::model::{BlockModel, EdgeClass, FeatureModel};
use crate::sim::argmax_with_seeded_ties;
use crate::sim::graph::{EdgeStatus, MissingnessMode, ObservedGraph};

/// Compares block scores d/m as exact rationals by cross
/// multiplication; an empty block scores 0/0 := 0. Floats are never
/// compared, so ties are detected exactly.
pub(crate) fn rational_cmp(a: (usize, usize), b: (usize, usize)) -> std::cmp::Ordering {
    let (an, ad) = if a.1 == 0 { (0u64, 1u64) } else { (a.0 as u64, a.1 as u64) };
    let (bn, bd) = if b.1 == 0 { (0u64, 1u64) } else { (b.0 as u64, b.1 as u64) };
    (an * bd).cmp(&(bn * ad))
}

fn check_vertex(og: &ObservedGraph, v_star: usize, op: &'static str) -> Result<()> {
    if v_star >= og.n() {
        return Err(Error::domain(
            op,
            format!("vertex {v_star} outside 0..{}", og.n()),
        ));
    }
    Ok(())
}

fn check_matrix(m: &[Vec<f64>], k: usize, op: &'static str) -> Result<()> {
    if m.len() != k || m.iter().any(|row| row.len() != k) {
        return Err(Error::domain(op, format!("matrix is not {k}x{k}")));
    }
    for row in m {
        for &p in row {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::domain(op, format!("entry {p} is not a probability")));
            }
        }
    }
    Ok(())
}

/// Edge and assessed-pair counts from `v_star` to each block, blocks
/// counted over the labeled vertices excluding `v_star` itself.
fn block_tallies(og: &ObservedGraph, v_star: usize) -> (Vec<usize>, Vec<usize>, Vec<usize>) {
    let k = og.k();
    let mut edges = vec![0usize; k];
    let mut assessed = vec![0usize; k];
    let mut counts = vec![0usize; k];
    for u in 0..og.n() {
        if u == v_star {
            continue;
        }
        let block = og.labels()[u];
        counts[block] += 1;
        match og.status(v_star, u) {
            EdgeStatus::Edge => {
                edges[block] += 1;
                assessed[block] += 1;
            }
            EdgeStatus::NonEdge => assessed[block] += 1,
            EdgeStatus::Missing => {}
        }
    }
    (edges, assessed, counts)
}

/// Block-degree ratio classifier: argmax over blocks of d_k / n_k,
/// where d_k counts observed edges from `v_star` into block k.
///
/// The denominator depends on the missingness mode: with imputed
/// zeros it is the full block size (excluding `v_star`); under Mcar it
/// is o_k, the number of assessed potential edges into block k, so
/// unassessed pairs drop out of both numerator and denominator.
pub fn classify_gamma(og: &ObservedGraph, v_star: usize, tie_seed: u64) -> Result<usize> {
    check_vertex(og, v_star, "classify_gamma")?;
    let (edges, assessed, counts) = block_tallies(og, v_star);
    let denom = match og.mode() {
        MissingnessMode::ImputedZero => counts,
        MissingnessMode::Mcar => assessed,
    };
    let scores: Vec<(usize, usize)> = edges.into_iter().zip(denom).collect();
    Ok(argmax_with_seeded_ties(
        &scores,
        |a, b| rational_cmp(*a, *b),
        tie_seed,
    ))
}

/// Binomial plug-in classifier: argmax over blocks y of
/// π̂_y · ∏_k Bin(d_k; n_k, B̂_{yk}), evaluated in log space with the
/// y-independent binomial coefficients dropped.
///
/// B̂ entries of exactly 0 or 1 are floored/capped at half the
/// resolution an estimate could have on this graph's labeled part
/// (1/(2·max(1, pairs)) for the corresponding block pair), keeping
/// every log finite.
pub fn classify_plugin(
    og: &ObservedGraph,
    v_star: usize,
    b_hat: &[Vec<f64>],
    pi_hat: &[f64],
    tie_seed: u64,
) -> Result<usize> {
    check_vertex(og, v_star, "classify_plugin")?;
    if og.mode() != MissingnessMode::ImputedZero {
        return Err(Error::Unsupported {
            op: "classify_plugin",
            msg: "binomial totals need ImputedZero mode; use classify_mcar_lr for Mcar".into(),
        });
    }
    let k = og.k();
    check_matrix(b_hat, k, "classify_plugin")?;
    if pi_hat.len() != k || pi_hat.iter().any(|p| !(0.0..=1.0).contains(p)) {
        return Err(Error::domain("classify_plugin", "prior is not a probability vector"));
    }

    let (d, _, counts) = block_tallies(og, v_star);
    let pair_count = |y: usize, j: usize| -> usize {
        if y == j {
            counts[y] * counts[y].saturating_sub(1) / 2
        } else {
            counts[y] * counts[j]
        }
    };
    let scores: Vec<f64> = (0..k)
        .map(|y| {
            let mut s = pi_hat[y].ln();
            for j in 0..k {
                let floor = 1.0 / (2.0 * pair_count(y, j).max(1) as f64);
                let p = match b_hat[y][j] {
                    b if b == 0.0 => floor,
                    b if b == 1.0 => 1.0 - floor,
                    b => b,
                };
                s += d[j] as f64 * p.ln() + (counts[j] - d[j]) as f64 * (1.0 - p).ln();
            }
            s
        })
        .collect();
    Ok(argmax_with_seeded_ties(&scores, |a, b| a.total_cmp(b), tie_seed))
}

/// Feature-density classifier: argmax over blocks y of
/// π_y · ∏_k ∏_i [B_{yk}·f_edge(x_i) + (1−B_{yk})·f_nonedge(x_i)],
/// where `features[k]` holds the observed feature values on assessed
/// pairs from the held-out vertex into block k.
///
/// Feature values must lie strictly inside (0, 1); a boundary value is
/// reported with its flat index (block order, then position).
pub fn classify_feature_bayes(
    features: &[Vec<f64>],
    bm: &BlockModel,
    feats: &FeatureModel,
    kappa: f64,
    tie_seed: u64,
) -> Result<usize> {
    let k = bm.k();
    if features.len() != k {
        return Err(Error::domain(
            "classify_feature_bayes",
            format!("{} feature lists for {k} blocks", features.len()),
        ));
    }
    // Densities per feature value, computed once across candidates.
    let mut densities: Vec<Vec<(f64, f64)>> = Vec::with_capacity(k);
    let mut flat_index = 0usize;
    for list in features {
        let mut pairs = Vec::with_capacity(list.len());
        for &x in list {
            if !(x > 0.0 && x < 1.0) {
                return Err(Error::FeatureOutOfRange {
                    index: flat_index,
                    value: x,
                });
            }
            pairs.push((
                feats.pdf(EdgeClass::NonEdge, kappa, x)?,
                feats.pdf(EdgeClass::Edge, kappa, x)?,
            ));
            flat_index += 1;
        }
        densities.push(pairs);
    }

    let b = bm.b();
    let scores: Vec<f64> = (0..k)
        .map(|y| {
            let mut s = bm.pi()[y].ln();
            for (j, pairs) in densities.iter().enumerate() {
                let byj = b[y][j];
                for &(f0, f1) in pairs {
                    s += (byj * f1 + (1.0 - byj) * f0).ln();
                }
            }
            s
        })
        .collect();
    Ok(argmax_with_seeded_ties(&scores, |a, b| a.total_cmp(b), tie_seed))
}

/// c·ln(p) with the empty-count convention 0·ln(0) := 0.
fn count_log(count: usize, p: f64) -> f64 {
    if count == 0 {
        0.0
    } else {
        count as f64 * p.ln()
    }
}

/// Missing-aware likelihood-ratio classifier for Mcar observations:
/// argmax over blocks y of
/// Σ_k [m_k·ln B̃_{yk} + (o_k−m_k)·ln(1−B̃_{yk})], with m_k observed
/// edges and o_k assessed pairs into block k. With nothing assessed
/// every block ties.
pub fn classify_mcar_lr(
    og: &ObservedGraph,
    v_star: usize,
    btilde_mcar: &[Vec<f64>],
    tie_seed: u64,
) -> Result<usize> {
    check_vertex(og, v_star, "classify_mcar_lr")?;
    if og.mode() != MissingnessMode::Mcar {
        return Err(Error::domain(
            "classify_mcar_lr",
            "needs an Mcar-mode observation",
        ));
    }
    let k = og.k();
    check_matrix(btilde_mcar, k, "classify_mcar_lr")?;
    let (m, o, _) = block_tallies(og, v_star);
    let scores: Vec<f64> = (0..k)
        .map(|y| {
            (0..k)
                .map(|j| {
                    count_log(m[j], btilde_mcar[y][j])
                        + count_log(o[j] - m[j], 1.0 - btilde_mcar[y][j])
                })
                .sum()
        })
        .collect();
    Ok(argmax_with_seeded_ties(&scores, |a, b| a.total_cmp(b), tie_seed))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::channel::observe_binary_channel;
    use crate::sim::graph::LabeledGraph;
    use crate::special::Probability;

    /// Perfectly observed graph over explicit labels and edges.
    fn observed(k: usize, labels: &[usize], edges: &[(usize, usize)]) -> ObservedGraph {
        let mut g = LabeledGraph::new(k, labels.to_vec()).unwrap();
        for &(u, v) in edges {
            g.set_edge(u, v, true).unwrap();
        }
        observe_binary_channel(&g, Probability::ONE, Probability::ONE, 0)
    }

    #[test]
    fn gamma_picks_the_saturated_block() {
        // v* = 4 touches every class-0 vertex and no class-1 vertex.
        let og = observed(2, &[0, 0, 1, 1, 0], &[(4, 0), (4, 1)]);
        assert_eq!(classify_gamma(&og, 4, 7).unwrap(), 0);
    }

    #[test]
    fn gamma_on_empty_graph_is_a_uniform_coin() {
        let og = observed(2, &[0, 0, 1, 1, 0], &[]);
        let mut seen = [0usize; 2];
        for seed in 0..500 {
            seen[classify_gamma(&og, 4, seed).unwrap()] += 1;
        }
        assert!(seen[0] > 150 && seen[1] > 150, "tie split {seen:?}");
    }

    #[test]
    fn gamma_mcar_denominator_is_assessed_count() {
        use crate::sim::graph::{EdgeStatus::*, MissingnessMode};
        // v* = 0; blocks of the rest: [0, 0, 0, 1, 1, 1].
        // Pairs from v* in triangular order are exactly (0, u) for
        // u = 1..=6: block 0 sees Edge, Missing, Missing; block 1 sees
        // Edge, Edge, NonEdge. Remaining pairs are unassessed.
        let labels = vec![0, 0, 0, 0, 1, 1, 1];
        let mut status = vec![Missing; 21];
        status[0] = Edge;
        status[1] = Missing;
        status[2] = Missing;
        status[3] = Edge;
        status[4] = Edge;
        status[5] = NonEdge;
        let og =
            ObservedGraph::from_statuses(2, labels, status, MissingnessMode::Mcar).unwrap();
        // Mcar scores: 1/1 vs 2/3 -> block 0.
        assert_eq!(classify_gamma(&og, 0, 3).unwrap(), 0);
        // Imputing zeros changes the call: 1/3 vs 2/3 -> block 1.
        assert_eq!(classify_gamma(&og.to_imputed_zero(), 0, 3).unwrap(), 1);
    }

    #[test]
    fn plugin_single_block_returns_it() {
        let og = observed(1, &[0, 0, 0], &[(0, 1)]);
        assert_eq!(classify_plugin(&og, 2, &[vec![0.5]], &[1.0], 1).unwrap(), 0);
    }

    #[test]
    fn plugin_prefers_the_matching_degree_profile() {
        // v* = 6 connects to all of block 0 and none of block 1; with a
        // sharp B the posterior must favor block 0.
        let og = observed(
            2,
            &[0, 0, 0, 1, 1, 1, 0],
            &[(6, 0), (6, 1), (6, 2)],
        );
        let b_hat = vec![vec![0.9, 0.1], vec![0.1, 0.9]];
        assert_eq!(
            classify_plugin(&og, 6, &b_hat, &[0.5, 0.5], 11).unwrap(),
            0
        );
    }

    #[test]
    fn plugin_floors_degenerate_estimates() {
        let og = observed(2, &[0, 0, 1, 1, 0], &[(4, 0), (4, 2)]);
        // Zero and one entries would produce infinite logs unfloored.
        let b_hat = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        let got = classify_plugin(&og, 4, &b_hat, &[0.5, 0.5], 5).unwrap();
        // d = (1, 1) against capped rows: symmetric evidence, and the
        // result must simply be a valid block, finite all the way.
        assert!(got < 2);
    }

    #[test]
    fn plugin_ties_on_flat_parameters() {
        let og = observed(2, &[0, 0, 1, 1, 0], &[(4, 0), (4, 2)]);
        let b_hat = vec![vec![0.4, 0.4], vec![0.4, 0.4]];
        let mut seen = [0usize; 2];
        for seed in 0..400 {
            seen[classify_plugin(&og, 4, &b_hat, &[0.5, 0.5], seed).unwrap()] += 1;
        }
        assert!(seen[0] > 100 && seen[1] > 100, "tie split {seen:?}");
    }

    #[test]
    fn plugin_rejects_mcar_and_bad_shapes() {
        use crate::sim::graph::{EdgeStatus::*, MissingnessMode};
        let og = ObservedGraph::from_statuses(
            2,
            vec![0, 1, 1],
            vec![Missing, Edge, NonEdge],
            MissingnessMode::Mcar,
        )
        .unwrap();
        assert!(classify_plugin(&og, 0, &[vec![0.5, 0.5], vec![0.5, 0.5]], &[0.5, 0.5], 0).is_err());
        let ok = og.to_imputed_zero();
        assert!(classify_plugin(&ok, 0, &[vec![0.5]], &[0.5, 0.5], 0).is_err());
        assert!(classify_plugin(&ok, 9, &[vec![0.5, 0.5], vec![0.5, 0.5]], &[0.5, 0.5], 0).is_err());
    }

    #[test]
    fn feature_bayes_empty_features_follow_the_prior() {
        let bm = crate::model::BlockModel::new(
            10,
            vec![vec![0.8, 0.2], vec![0.2, 0.8]],
            vec![0.7, 0.3],
        )
        .unwrap();
        let fm = FeatureModel::beta_cubic();
        let got =
            classify_feature_bayes(&[vec![], vec![]], &bm, &fm, 3.5, 2).unwrap();
        assert_eq!(got, 0);
    }

    #[test]
    fn feature_bayes_rejects_boundary_values_with_index() {
        let bm = crate::model::BlockModel::two_block(10, 0.8, 0.2).unwrap();
        let fm = FeatureModel::beta_cubic();
        let err = classify_feature_bayes(&[vec![0.3, 0.4], vec![0.2, 1.0]], &bm, &fm, 3.5, 2)
            .unwrap_err();
        match err {
            Error::FeatureOutOfRange { index, value } => {
                assert_eq!(index, 3);
                assert_eq!(value, 1.0);
            }
            other => panic!("wrong error: {other}"),
        }
    }

    #[test]
    fn feature_bayes_strong_edge_features_pick_the_affine_block() {
        // Features near 1 look like edges; three such features toward
        // block 0 and low features toward block 1 indicate class 0
        // under an affinity model.
        let bm = crate::model::BlockModel::two_block(10, 0.9, 0.1).unwrap();
        let fm = FeatureModel::beta_cubic();
        let got = classify_feature_bayes(
            &[vec![0.9, 0.85, 0.8], vec![0.1, 0.15, 0.2]],
            &bm,
            &fm,
            3.5,
            2,
        )
        .unwrap();
        assert_eq!(got, 0);
    }

    #[test]
    fn mcar_lr_nothing_assessed_is_a_full_tie() {
        use crate::sim::graph::{EdgeStatus::*, MissingnessMode};
        let og = ObservedGraph::from_statuses(
            2,
            vec![0, 0, 1, 1],
            vec![Missing; 6],
            MissingnessMode::Mcar,
        )
        .unwrap();
        let bt = vec![vec![0.7, 0.2], vec![0.2, 0.7]];
        let mut seen = [0usize; 2];
        for seed in 0..400 {
            seen[classify_mcar_lr(&og, 0, &bt, seed).unwrap()] += 1;
        }
        assert!(seen[0] > 100 && seen[1] > 100, "tie split {seen:?}");
    }

    #[test]
    fn mcar_lr_all_assessed_reduces_to_degree_comparison() {
        use crate::sim::graph::{EdgeStatus::*, MissingnessMode};
        // v* = 0 with blocks [0, 0, 1, 1] for the rest: two edges into
        // block 0, one into block 1, everything assessed.
        let labels = vec![0, 0, 0, 1, 1];
        let mut status = vec![NonEdge; 10];
        status[0] = Edge;
        status[1] = Edge;
        status[2] = Edge;
        status[3] = NonEdge;
        let og = ObservedGraph::from_statuses(2, labels, status, MissingnessMode::Mcar).unwrap();
        let bt = vec![vec![0.7, 0.2], vec![0.2, 0.7]];
        assert_eq!(classify_mcar_lr(&og, 0, &bt, 1).unwrap(), 0);
        assert!(classify_mcar_lr(&og.to_imputed_zero(), 0, &bt, 1).is_err());
    }
}
