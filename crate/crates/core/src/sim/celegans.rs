//! Quantity-versus-quality experiment on a fixed labeled graph,
//! patterned after partially assessed connectome data: sweep a grid of
//! (assessment fraction, assessment accuracy) operating points, score
//! each by leave-one-out error of the plug-in rule, and trace budget
//! curves that trade accuracy against coverage.
//!
//! Every cell runs from the same master seed, so cells share their
//! randomness trial by trial. Comparisons across cells then use common
//! random numbers, and the gold-standard run is bit-identical to the
//! fully assessed, fully accurate grid cell.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::sim::estimate::SbmEstimate;
use crate::sim::graph::LabeledGraph;
use crate::sim::harness::{
    loo_error, ChannelSpec, EstimationMode, LooClassifier, RunReport,
};
use crate::special::Probability;

/// One operating point of the sweep.
#[derive(Clone, Debug, Serialize)]
pub struct GridCell {
    pub assess: f64,
    pub accuracy: f64,
    pub report: RunReport,
}

/// One point of a budget curve: accuracy 1 − 0.2·assess^q, so spending
/// effort on coverage (larger assess) costs accuracy, more steeply for
/// small q.
#[derive(Clone, Debug, Serialize)]
pub struct CurveCell {
    pub q: f64,
    pub assess: f64,
    pub accuracy: f64,
    pub report: RunReport,
}

/// Full experiment output: the gold-standard error (perfect
/// assessment), the chance rate 1 − max π̂, the estimated blockmodel,
/// and the grid and curve sweeps.
#[derive(Clone, Debug, Serialize)]
pub struct ExperimentTable {
    pub gold: RunReport,
    pub chance: f64,
    pub estimate: SbmEstimate,
    pub grid: Vec<GridCell>,
    pub curves: Vec<CurveCell>,
}

fn curve_accuracy(assess: f64, q: f64) -> f64 {
    1.0 - 0.2 * assess.powf(q)
}

/// Runs the sweep. Assessment fractions must lie in [0, 1], accuracies
/// in [0.5, 1] (below a coin flip the channel label convention breaks
/// down), and curve exponents must be positive and finite.
pub fn celegans_experiment(
    g: &LabeledGraph,
    assess_grid: &[f64],
    accuracy_grid: &[f64],
    q_list: &[f64],
    trials: u64,
    seed: u64,
) -> Result<ExperimentTable> {
    const OP: &str = "celegans_experiment";
    if assess_grid.is_empty() || accuracy_grid.is_empty() {
        return Err(Error::domain(OP, "empty operating-point grid"));
    }
    for &x in assess_grid {
        if !(0.0..=1.0).contains(&x) {
            return Err(Error::domain(OP, format!("assessment fraction {x} outside [0, 1]")));
        }
    }
    for &y in accuracy_grid {
        if !(0.5..=1.0).contains(&y) {
            return Err(Error::domain(OP, format!("accuracy {y} outside [0.5, 1]")));
        }
    }
    for &q in q_list {
        if !(q > 0.0 && q.is_finite()) {
            return Err(Error::domain(OP, format!("curve exponent {q} must be positive")));
        }
    }

    let estimate = g.estimate_sbm()?;
    let chance = 1.0
        - estimate
            .pi_hat
            .iter()
            .cloned()
            .fold(f64::NEG_INFINITY, f64::max);

    let run = |assess: f64, accuracy: f64| -> Result<RunReport> {
        loo_error(
            g,
            &ChannelSpec::Binary {
                assess: Probability::new(assess)?,
                accuracy: Probability::new(accuracy)?,
            },
            LooClassifier::Plugin,
            EstimationMode::PerObservation,
            trials,
            seed,
        )
    };

    let gold = run(1.0, 1.0)?;

    let mut grid = Vec::with_capacity(assess_grid.len() * accuracy_grid.len());
    for &assess in assess_grid {
        for &accuracy in accuracy_grid {
            grid.push(GridCell {
                assess,
                accuracy,
                report: run(assess, accuracy)?,
            });
        }
    }

    let mut curves = Vec::with_capacity(q_list.len() * assess_grid.len());
    for &q in q_list {
        for &assess in assess_grid {
            let accuracy = curve_accuracy(assess, q);
            curves.push(CurveCell {
                q,
                assess,
                accuracy,
                report: run(assess, accuracy)?,
            });
        }
    }

    Ok(ExperimentTable {
        gold,
        chance,
        estimate,
        grid,
        curves,
    })
}
