//! Observation channels: the feature-threshold channel driven by a
//! quality parameter, and the simpler binary assess/accuracy channel.
//!
//! Both channels draw exactly two uniforms per potential edge whether
//! or not the pair ends up assessed. Fixed consumption means a shared
//! seed yields coupled observations across different channel settings
//! (the experiment grids rely on this for smooth comparisons) and
//! identical draws across missingness modes.

use rand::Rng;

use crate::error::Result;
use crate::model::{Design, EdgeClass, FeatureModel};
use crate::sim::graph::{EdgeStatus, LabeledGraph, MissingnessMode, ObservedGraph};
use crate::special::Probability;

/// Observes `g` through the feature channel at one design point:
/// each pair is assessed with probability h(kappa); an assessed pair's
/// feature is drawn from its class distribution and the pair is
/// reported as an edge exactly when the feature clears the threshold.
///
/// The feature draw is collapsed: with X = F⁻¹(u), the event X > tau
/// is the event u ≥ F(tau) up to the null set u = F(tau), so the
/// channel compares the uniform against F directly. The closed
/// comparison makes the endpoints exact: tau = 0 reports every
/// assessed pair as an edge and tau = 1 reports none.
pub fn observe_errorful(
    g: &LabeledGraph,
    feats: &FeatureModel,
    design: Design,
    mode: MissingnessMode,
    seed: u64,
) -> Result<ObservedGraph> {
    let mut rng = crate::sim::trial_rng(seed, 0);
    observe_errorful_with_rng(g, feats, design, mode, &mut rng)
}

pub fn observe_errorful_with_rng(
    g: &LabeledGraph,
    feats: &FeatureModel,
    design: Design,
    mode: MissingnessMode,
    rng: &mut impl Rng,
) -> Result<ObservedGraph> {
    let assess = feats.assess_probability(design.kappa)?.get();
    let cdf_nonedge = feats
        .cdf(EdgeClass::NonEdge, design.kappa, design.tau)?
        .get();
    let cdf_edge = feats.cdf(EdgeClass::Edge, design.kappa, design.tau)?.get();

    let n = g.n();
    let mut status = Vec::with_capacity(n * (n - 1) / 2);
    let unassessed = match mode {
        MissingnessMode::ImputedZero => EdgeStatus::NonEdge,
        MissingnessMode::Mcar => EdgeStatus::Missing,
    };
    for u in 0..n {
        for v in (u + 1)..n {
            let u1: f64 = rng.gen();
            let u2: f64 = rng.gen();
            if u1 < assess {
                let cdf_at_tau = if g.has_edge(u, v) { cdf_edge } else { cdf_nonedge };
                status.push(if u2 >= cdf_at_tau {
                    EdgeStatus::Edge
                } else {
                    EdgeStatus::NonEdge
                });
            } else {
                status.push(unassessed);
            }
        }
    }
    Ok(ObservedGraph::from_parts_unchecked(
        g.k(),
        g.labels().to_vec(),
        status,
        mode,
    ))
}

/// Observes `g` through the binary channel: each pair is assessed with
/// probability `assess`; an assessed pair reports its true status with
/// probability `accuracy` and the opposite otherwise, the same rate
/// for edges and non-edges. Unassessed pairs are reported as
/// non-edges.
pub fn observe_binary_channel(
    g: &LabeledGraph,
    assess: Probability,
    accuracy: Probability,
    seed: u64,
) -> ObservedGraph {
    let mut rng = crate::sim::trial_rng(seed, 0);
    observe_binary_channel_with_rng(g, assess, accuracy, &mut rng)
}

pub fn observe_binary_channel_with_rng(
    g: &LabeledGraph,
    assess: Probability,
    accuracy: Probability,
    rng: &mut impl Rng,
) -> ObservedGraph {
    observe_binary_asymmetric_with_rng(g, assess, accuracy, accuracy, rng)
}

/// Binary channel with separate accuracies for true edges and true
/// non-edges. The symmetric channel is the special case the
/// experiments use; this generalization exists for sensitivity probes.
pub fn observe_binary_asymmetric_with_rng(
    g: &LabeledGraph,
    assess: Probability,
    accuracy_edge: Probability,
    accuracy_nonedge: Probability,
    rng: &mut impl Rng,
) -> ObservedGraph {
    let n = g.n();
    let mut status = Vec::with_capacity(n * (n - 1) / 2);
    for u in 0..n {
        for v in (u + 1)..n {
            let u1: f64 = rng.gen();
            let u2: f64 = rng.gen();
            if u1 < assess.get() {
                let truth = g.has_edge(u, v);
                let accuracy = if truth { accuracy_edge } else { accuracy_nonedge };
                // Report flips exactly when the draw clears the
                // accuracy, so accuracy = 1 never flips and
                // accuracy = 0.5 is a fair coin.
                let report = if u2 < accuracy.get() { truth } else { !truth };
                status.push(if report { EdgeStatus::Edge } else { EdgeStatus::NonEdge });
            } else {
                status.push(EdgeStatus::NonEdge);
            }
        }
    }
    ObservedGraph::from_parts_unchecked(
        g.k(),
        g.labels().to_vec(),
        status,
        MissingnessMode::ImputedZero,
    )
}

/// Draws one feature value from the class-conditional distribution by
/// bisecting the CDF against a uniform. 60 halvings pin the value to
/// within 2⁻⁶⁰, and the returned point is strictly inside (0, 1).
pub fn sample_feature(
    feats: &FeatureModel,
    class: EdgeClass,
    kappa: f64,
    rng: &mut impl Rng,
) -> Result<f64> {
    let u: f64 = rng.gen();
    let mut lo = 0.0f64;
    let mut hi = 1.0f64;
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if feats.cdf(class, kappa, mid)?.get() < u {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let x = 0.5 * (lo + hi);
    // Guard the open-interval contract against u at the extremes.
    Ok(x.clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0))
}
