//! Monte Carlo harnesses: held-out-vertex error under the errorful
//! channel, leave-one-out error on a fixed graph, and a paired
//! comparison of the feature-density and degree-ratio rules.
//!
//! Every harness streams one RNG per trial (`trial_rng(seed, t)`), so
//! results are reproducible bit for bit regardless of how rayon
//! schedules the trials, and two runs with a common master seed share
//! their randomness trial by trial.

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{
    errorful_block_matrix, mcar_block_matrix, BlockModel, Design, EdgeClass, FeatureModel,
};
use crate::sim::channel::{
    observe_binary_channel_with_rng, observe_errorful_with_rng, sample_feature,
};
use crate::sim::classify::{
    classify_feature_bayes, classify_gamma, classify_mcar_lr, classify_plugin, rational_cmp,
};
use crate::sim::graph::{
    conditioned_counts, sample_given_labels, EdgeStatus, LabeledGraph, MissingnessMode,
    ObservedGraph,
};
use crate::sim::{argmax_with_seeded_ties, trial_rng};
use crate::special::Probability;

/// Result of a Monte Carlo run.
///
/// `std_error` is always the binomial formula sqrt(p̂(1−p̂)/trials).
/// For harnesses whose per-trial statistic is itself a mean in [0, 1]
/// (leave-one-out) this is an upper bound on the true standard error,
/// never an understatement.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunReport {
    pub trials: u64,
    pub error_rate: f64,
    pub std_error: f64,
    pub seed: u64,
    pub config_digest: String,
}

impl RunReport {
    fn new(trials: u64, error_rate: f64, seed: u64, config_digest: String) -> Self {
        let std_error = (error_rate * (1.0 - error_rate) / trials as f64).sqrt();
        RunReport {
            trials,
            error_rate,
            std_error,
            seed,
            config_digest,
        }
    }
}

fn check_trials(trials: u64, op: &'static str) -> Result<()> {
    if trials == 0 {
        return Err(Error::domain(op, "need at least one trial"));
    }
    Ok(())
}

fn model_digest(bm: &BlockModel) -> String {
    format!("n={} b={:?} pi={:?}", bm.n(), bm.b(), bm.pi())
}

/// Which rule classifies the held-out vertex in
/// [`monte_carlo_vertex_error`].
///
/// `Plugin` scores against the analytic error-free-labels block matrix
/// of the observed graph (imputed-zero channel); `McarLr` observes
/// with explicit missings and scores against the Mcar matrix.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VertexClassifier {
    Gamma,
    Plugin,
    McarLr,
}

/// Estimates the held-out-vertex misclassification probability at an
/// operating point by simulation: block sizes for the other n−1
/// vertices are fixed by largest-remainder apportionment of the prior,
/// the held-out label is drawn from the prior, the graph passes
/// through the errorful channel, and the chosen rule classifies the
/// held-out vertex.
pub fn monte_carlo_vertex_error(
    bm: &BlockModel,
    feats: &FeatureModel,
    design: Design,
    classifier: VertexClassifier,
    trials: u64,
    seed: u64,
) -> Result<RunReport> {
    check_trials(trials, "monte_carlo_vertex_error")?;
    if bm.n() < 2 {
        return Err(Error::domain(
            "monte_carlo_vertex_error",
            "need at least two vertices",
        ));
    }
    let rates = feats.channel_rates(&design)?;
    let btilde = errorful_block_matrix(bm, &rates);
    let bmcar = mcar_block_matrix(bm, &rates);
    let mode = match classifier {
        VertexClassifier::McarLr => MissingnessMode::Mcar,
        _ => MissingnessMode::ImputedZero,
    };
    let base_counts = conditioned_counts(bm.pi(), bm.n() - 1);
    let mut base_labels = Vec::with_capacity(bm.n());
    for (block, &c) in base_counts.iter().enumerate() {
        base_labels.extend(std::iter::repeat(block).take(c));
    }

    let misses: Result<Vec<bool>> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = trial_rng(seed, t);
            let y_star = crate::sim::sample_categorical(&mut rng, bm.pi());
            let mut labels = base_labels.clone();
            labels.push(y_star);
            let v_star = labels.len() - 1;
            let g = sample_given_labels(bm, &labels, &mut rng)?;
            let og = observe_errorful_with_rng(&g, feats, design, mode, &mut rng)?;
            let tie_seed: u64 = rng.gen();
            let predicted = match classifier {
                VertexClassifier::Gamma => classify_gamma(&og, v_star, tie_seed)?,
                VertexClassifier::Plugin => {
                    classify_plugin(&og, v_star, &btilde, bm.pi(), tie_seed)?
                }
                VertexClassifier::McarLr => classify_mcar_lr(&og, v_star, &bmcar, tie_seed)?,
            };
            Ok(predicted != y_star)
        })
        .collect();
    let misses = misses?;
    let error_rate = misses.iter().filter(|&&m| m).count() as f64 / trials as f64;
    let digest = format!(
        "vertex-error {} kappa={} tau={} classifier={:?} trials={trials}",
        model_digest(bm),
        design.kappa,
        design.tau,
        classifier
    );
    Ok(RunReport::new(trials, error_rate, seed, digest))
}

/// How a fixed graph is observed in a leave-one-out run. All variants
/// produce imputed-zero observations; `Perfect` consumes no
/// randomness.
#[derive(Clone, Copy, Debug)]
pub enum ChannelSpec<'a> {
    Perfect,
    Binary {
        assess: Probability,
        accuracy: Probability,
    },
    Errorful {
        feats: &'a FeatureModel,
        design: Design,
    },
}

impl ChannelSpec<'_> {
    fn observe(&self, g: &LabeledGraph, rng: &mut impl Rng) -> Result<ObservedGraph> {
        match *self {
            ChannelSpec::Perfect => {
                let n = g.n();
                let mut status = Vec::with_capacity(n * (n - 1) / 2);
                for u in 0..n {
                    for v in (u + 1)..n {
                        status.push(if g.has_edge(u, v) {
                            EdgeStatus::Edge
                        } else {
                            EdgeStatus::NonEdge
                        });
                    }
                }
                Ok(ObservedGraph::from_parts_unchecked(
                    g.k(),
                    g.labels().to_vec(),
                    status,
                    MissingnessMode::ImputedZero,
                ))
            }
            ChannelSpec::Binary { assess, accuracy } => {
                Ok(observe_binary_channel_with_rng(g, assess, accuracy, rng))
            }
            ChannelSpec::Errorful { feats, design } => {
                observe_errorful_with_rng(g, feats, design, MissingnessMode::ImputedZero, rng)
            }
        }
    }

    fn digest(&self) -> String {
        match *self {
            ChannelSpec::Perfect => "perfect".into(),
            ChannelSpec::Binary { assess, accuracy } => {
                format!("binary assess={assess} accuracy={accuracy}")
            }
            ChannelSpec::Errorful { design, .. } => {
                format!("errorful kappa={} tau={}", design.kappa, design.tau)
            }
        }
    }
}

/// Classification rule for leave-one-out runs.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LooClassifier {
    Gamma,
    Plugin,
}

/// Where the plug-in rule's parameters come from in a leave-one-out
/// run: re-estimated from the observed graph, or from the true graph
/// (an oracle baseline). Either way the held-out vertex is excluded
/// from estimation.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EstimationMode {
    PerObservation,
    FromTrueGraph,
}

/// Leave-one-out data for one estimation source: block sizes, the
/// symmetric block-pair edge totals, and each vertex's block-degree
/// vector, from which leaving any one vertex out is O(K² + K).
struct LooTotals {
    counts: Vec<usize>,
    edge_tot: Vec<Vec<i64>>,
    deg: Vec<Vec<i64>>,
}

impl LooTotals {
    fn build(n: usize, k: usize, labels: &[usize], is_edge: impl Fn(usize, usize) -> bool) -> Self {
        let mut counts = vec![0usize; k];
        for &l in labels {
            counts[l] += 1;
        }
        let mut edge_tot = vec![vec![0i64; k]; k];
        let mut deg = vec![vec![0i64; k]; n];
        for u in 0..n {
            for v in (u + 1)..n {
                if is_edge(u, v) {
                    let (a, b) = (labels[u], labels[v]);
                    edge_tot[a][b] += 1;
                    if a != b {
                        edge_tot[b][a] += 1;
                    }
                    deg[u][b] += 1;
                    deg[v][a] += 1;
                }
            }
        }
        LooTotals {
            counts,
            edge_tot,
            deg,
        }
    }

    /// Parameters estimated with vertex `v` (block `c`) removed. Block
    /// pairs left with no potential pairs estimate to 0, which the
    /// plug-in classifier floors away from the log singularity.
    fn leave_out(&self, v: usize, c: usize) -> (Vec<Vec<f64>>, Vec<f64>) {
        let k = self.counts.len();
        let mut counts = self.counts.clone();
        counts[c] -= 1;
        let m: usize = counts.iter().sum();
        let mut b_hat = vec![vec![0.0f64; k]; k];
        for a in 0..k {
            for b in a..k {
                let mut e = self.edge_tot[a][b];
                if a == c {
                    e -= self.deg[v][b];
                }
                if b == c && a != b {
                    e -= self.deg[v][a];
                }
                let pairs = if a == b {
                    counts[a] * counts[a].saturating_sub(1) / 2
                } else {
                    counts[a] * counts[b]
                };
                if pairs > 0 {
                    let rate = e as f64 / pairs as f64;
                    b_hat[a][b] = rate;
                    b_hat[b][a] = rate;
                }
            }
        }
        let pi_hat = counts.iter().map(|&x| x as f64 / m as f64).collect();
        (b_hat, pi_hat)
    }
}

/// Leave-one-out misclassification rate on a fixed labeled graph: per
/// trial the graph is observed once through the channel, then every
/// vertex in turn is classified from that observation with parameters
/// estimated without it. The per-trial statistic is the fraction of
/// vertices misclassified; the report averages it over trials.
pub fn loo_error(
    g: &LabeledGraph,
    channel: &ChannelSpec,
    classifier: LooClassifier,
    estimation: EstimationMode,
    trials: u64,
    seed: u64,
) -> Result<RunReport> {
    check_trials(trials, "loo_error")?;
    let n = g.n();
    if n < 2 {
        return Err(Error::domain("loo_error", "need at least two vertices"));
    }
    let k = g.k();
    let labels = g.labels();
    let true_totals = match (classifier, estimation) {
        (LooClassifier::Plugin, EstimationMode::FromTrueGraph) => Some(LooTotals::build(
            n,
            k,
            labels,
            |u, v| g.has_edge(u, v),
        )),
        _ => None,
    };

    let rates: Result<Vec<f64>> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = trial_rng(seed, t);
            let og = channel.observe(g, &mut rng)?;
            let observed_totals = match (classifier, estimation) {
                (LooClassifier::Plugin, EstimationMode::PerObservation) => {
                    Some(LooTotals::build(n, k, labels, |u, v| {
                        og.status(u, v) == EdgeStatus::Edge
                    }))
                }
                _ => None,
            };
            let mut missed = 0usize;
            for v in 0..n {
                let tie_seed: u64 = rng.gen();
                let predicted = match classifier {
                    LooClassifier::Gamma => classify_gamma(&og, v, tie_seed)?,
                    LooClassifier::Plugin => {
                        let totals = observed_totals
                            .as_ref()
                            .or(true_totals.as_ref())
                            .expect("plug-in totals prepared above");
                        let (b_hat, pi_hat) = totals.leave_out(v, labels[v]);
                        classify_plugin(&og, v, &b_hat, &pi_hat, tie_seed)?
                    }
                };
                if predicted != labels[v] {
                    missed += 1;
                }
            }
            Ok(missed as f64 / n as f64)
        })
        .collect();
    let rates = rates?;
    let error_rate = rates.iter().sum::<f64>() / trials as f64;
    let digest = format!(
        "loo n={n} k={k} channel=[{}] classifier={classifier:?} estimation={estimation:?} trials={trials}",
        channel.digest()
    );
    Ok(RunReport::new(trials, error_rate, seed, digest))
}

/// Paired comparison of two rules on identical data.
/// `mean_difference` is the degree-ratio error minus the
/// feature-density error, so a positive value favors using features.
#[derive(Clone, Debug, Serialize)]
pub struct PairedComparison {
    pub gamma: RunReport,
    pub feature_bayes: RunReport,
    pub mean_difference: f64,
    pub se_difference: f64,
}

/// Runs the degree-ratio rule (thresholding each feature at τ) and
/// the feature-density rule on the same sampled data, trial by trial:
/// only the held-out vertex's incident pairs are drawn, since neither
/// rule looks at the rest of the graph when the blockmodel is given.
pub fn paired_feature_vs_gamma(
    bm: &BlockModel,
    feats: &FeatureModel,
    design: Design,
    trials: u64,
    seed: u64,
) -> Result<PairedComparison> {
    check_trials(trials, "paired_feature_vs_gamma")?;
    if bm.n() < 2 {
        return Err(Error::domain(
            "paired_feature_vs_gamma",
            "need at least two vertices",
        ));
    }
    let assess = feats.assess_probability(design.kappa)?.get();
    let counts = conditioned_counts(bm.pi(), bm.n() - 1);
    let k = bm.k();
    let b = bm.b();

    let outcomes: Result<Vec<(bool, bool)>> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = trial_rng(seed, t);
            let y_star = crate::sim::sample_categorical(&mut rng, bm.pi());
            let mut gamma_edges = vec![0usize; k];
            let mut features: Vec<Vec<f64>> = vec![Vec::new(); k];
            for (block, &c) in counts.iter().enumerate() {
                for _ in 0..c {
                    let truth = rng.gen::<f64>() < b[y_star][block];
                    let assessed = rng.gen::<f64>() < assess;
                    if !assessed {
                        continue;
                    }
                    let class = if truth { EdgeClass::Edge } else { EdgeClass::NonEdge };
                    let x = sample_feature(feats, class, design.kappa, &mut rng)?;
                    if x > design.tau {
                        gamma_edges[block] += 1;
                    }
                    features[block].push(x);
                }
            }
            let tie_gamma: u64 = rng.gen();
            let tie_feature: u64 = rng.gen();
            let scores: Vec<(usize, usize)> =
                gamma_edges.into_iter().zip(counts.iter().copied()).collect();
            let gamma_pick =
                argmax_with_seeded_ties(&scores, |a, b| rational_cmp(*a, *b), tie_gamma);
            let feature_pick =
                classify_feature_bayes(&features, bm, feats, design.kappa, tie_feature)?;
            Ok((gamma_pick != y_star, feature_pick != y_star))
        })
        .collect();
    let outcomes = outcomes?;

    let gamma_rate = outcomes.iter().filter(|o| o.0).count() as f64 / trials as f64;
    let feature_rate = outcomes.iter().filter(|o| o.1).count() as f64 / trials as f64;
    let diffs: Vec<f64> = outcomes
        .iter()
        .map(|&(ge, fe)| (ge as i64 - fe as i64) as f64)
        .collect();
    let mean_difference = diffs.iter().sum::<f64>() / trials as f64;
    let se_difference = if trials < 2 {
        0.0
    } else {
        let var = diffs
            .iter()
            .map(|d| (d - mean_difference).powi(2))
            .sum::<f64>()
            / (trials - 1) as f64;
        (var / trials as f64).sqrt()
    };

    let base = format!(
        "paired {} kappa={} tau={} trials={trials}",
        model_digest(bm),
        design.kappa,
        design.tau
    );
    Ok(PairedComparison {
        gamma: RunReport::new(trials, gamma_rate, seed, format!("{base} arm=gamma")),
        feature_bayes: RunReport::new(trials, feature_rate, seed, format!("{base} arm=feature")),
        mean_difference,
        se_difference,
    })
}
