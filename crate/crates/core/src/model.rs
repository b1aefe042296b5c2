//! The true blockmodel, the quality-indexed feature family, and the
//! transform from (model, operating point) to the effective block
//! matrix of the observed graph.
//!
//! The observation channel works per potential edge: the pair is
//! assessed with probability `h(kappa)` (quality penalty), an assessed
//! pair yields a scalar feature drawn from the edge or non-edge class
//! distribution at quality `kappa`, and the feature is thresholded at
//! `tau` to declare an edge. Composing those steps with the true block
//! matrix `B` gives the observed graph's own blockmodel with matrix
//! `B~ = h·(tpr·B + fpr·(J−B))`; under the missing-at-random variant
//! unassessed pairs are marked missing instead of non-edge and the
//! penalty drops out of the matrix.

use crate::error::{Error, Result};
use crate::special::{beta_pdf, reg_inc_beta, Probability};
use std::fmt;
use std::sync::Arc;

/// Tolerance for simplex and symmetry validation.
const VALIDATE_EPS: f64 = 1e-12;

/// A stochastic blockmodel on `n` vertices with `K` blocks: symmetric
/// block connectivity matrix `B` and block prior `pi`.
#[derive(Clone, Debug)]
pub struct BlockModel {
    n: usize,
    b: Vec<Vec<f64>>,
    pi: Vec<f64>,
}

impl BlockModel {
    pub fn new(n: usize, b: Vec<Vec<f64>>, pi: Vec<f64>) -> Result<Self> {
        let k = b.len();
        if k == 0 {
            return Err(Error::InvalidModel("need at least one block".into()));
        }
        if n < 2 {
            return Err(Error::InvalidModel(format!(
                "need at least two vertices, got {n}"
            )));
        }
        if pi.len() != k {
            return Err(Error::InvalidModel(format!(
                "prior has {} entries for {} blocks",
                pi.len(),
                k
            )));
        }
        for (i, row) in b.iter().enumerate() {
            if row.len() != k {
                return Err(Error::InvalidModel(format!(
                    "connectivity row {i} has {} entries for {k} blocks",
                    row.len()
                )));
            }
            for (j, &v) in row.iter().enumerate() {
                if !(0.0..=1.0).contains(&v) {
                    return Err(Error::InvalidModel(format!(
                        "connectivity entry ({i},{j}) = {v} is not a probability"
                    )));
                }
                if (v - b[j][i]).abs() > VALIDATE_EPS {
                    return Err(Error::InvalidModel(format!(
                        "connectivity matrix is not symmetric at ({i},{j})"
                    )));
                }
            }
        }
        for (i, &p) in pi.iter().enumerate() {
            if !(p >= 0.0) || p > 1.0 {
                return Err(Error::InvalidModel(format!(
                    "prior entry {i} = {p} is not a probability"
                )));
            }
        }
        let total: f64 = pi.iter().sum();
        if (total - 1.0).abs() > VALIDATE_EPS {
            return Err(Error::InvalidModel(format!(
                "prior sums to {total}, not 1"
            )));
        }
        Ok(BlockModel { n, b, pi })
    }

    /// Two-block model with within-block probability `b11`, cross-block
    /// probability `b12`, and a uniform prior.
    pub fn two_block(n: usize, b11: f64, b12: f64) -> Result<Self> {
        BlockModel::new(n, vec![vec![b11, b12], vec![b12, b11]], vec![0.5, 0.5])
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.b.len()
    }

    pub fn b(&self) -> &[Vec<f64>] {
        &self.b
    }

    pub fn pi(&self) -> &[f64] {
        &self.pi
    }

    /// True when every diagonal entry strictly dominates its row.
    pub fn is_affinity(&self) -> bool {
        let k = self.k();
        (0..k).all(|i| (0..k).all(|j| i == j || self.b[i][i] > self.b[i][j]))
    }

    /// Expected edge density (n·piᵀB·pi − Σ_k B_kk·pi_k) / (n − 1),
    /// the probability that a uniformly chosen potential edge exists.
    pub fn expected_density(&self) -> Probability {
        let n = self.n as f64;
        let quad: f64 = self
            .b
            .iter()
            .zip(&self.pi)
            .map(|(row, &pi_i)| {
                pi_i * row
                    .iter()
                    .zip(&self.pi)
                    .map(|(&bij, &pj)| bij * pj)
                    .sum::<f64>()
            })
            .sum();
        let diag: f64 = (0..self.k()).map(|i| self.b[i][i] * self.pi[i]).sum();
        Probability::new((n * quad - diag) / (n - 1.0))
            .expect("density of a valid blockmodel is a probability")
    }
}

/// Which class-conditional distribution a feature was drawn from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EdgeClass {
    NonEdge,
    Edge,
}

/// An operating point of the observation channel: feature quality
/// `kappa` and edge-classification threshold `tau`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Design {
    pub kappa: f64,
    pub tau: f64,
}

/// The three scalar rates that summarize the channel at an operating
/// point: the assessment probability and the true/false positive rates
/// of the thresholded edge classifier.
#[derive(Clone, Copy, Debug)]
pub struct ChannelRates {
    pub assess: Probability,
    pub tpr: Probability,
    pub fpr: Probability,
}

impl ChannelRates {
    /// Requires tpr ≥ fpr, which any stochastically ordered feature
    /// family guarantees.
    pub fn new(assess: Probability, tpr: Probability, fpr: Probability) -> Result<Self> {
        if tpr.get() < fpr.get() {
            return Err(Error::InvalidModel(format!(
                "true positive rate {tpr} below false positive rate {fpr}"
            )));
        }
        Ok(ChannelRates { assess, tpr, fpr })
    }

    /// Noiseless fully-assessed channel.
    pub fn perfect() -> Self {
        ChannelRates {
            assess: Probability::ONE,
            tpr: Probability::ONE,
            fpr: Probability::ZERO,
        }
    }
}

type CdfFn = dyn Fn(f64, f64) -> f64 + Send + Sync;
type PdfFn = dyn Fn(f64, f64) -> f64 + Send + Sync;
type PenaltyFn = dyn Fn(f64) -> f64 + Send + Sync;

/// Quality-indexed class-conditional feature distributions plus the
/// quality penalty. The family is pluggable through function objects;
/// the shipped default uses Beta(2,kappa) for non-edges, Beta(kappa,2)
/// for edges, and the cubic penalty (2/kappa)³ on kappa in [2, 50].
///
/// Custom families must satisfy, on a validation grid:
/// - the penalty is nonincreasing in kappa;
/// - edge features stochastically dominate non-edge features,
///   F_edge(t) ≤ F_nonedge(t);
/// - raising kappa pushes the classes apart, i.e. F_nonedge grows
///   pointwise with kappa while F_edge shrinks.
#[derive(Clone)]
pub struct FeatureModel {
    cdf0: Arc<CdfFn>,
    cdf1: Arc<CdfFn>,
    pdf0: Arc<PdfFn>,
    pdf1: Arc<PdfFn>,
    penalty: Arc<PenaltyFn>,
    kappa_min: f64,
    kappa_max: f64,
}

impl fmt::Debug for FeatureModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FeatureModel")
            .field("kappa_min", &self.kappa_min)
            .field("kappa_max", &self.kappa_max)
            .finish()
    }
}

/// Points per axis in the validation grid for pluggable families.
const VALIDATION_GRID: usize = 101;

impl FeatureModel {
    /// The default Beta family with the cubic quality penalty.
    pub fn beta_cubic() -> Self {
        Self::beta_cubic_with_domain(2.0, 50.0)
            .expect("default beta family is valid on any subdomain of [2, inf)")
    }

    /// Beta family restricted to a caller-chosen quality interval;
    /// `kappa_min` must be at least 2 so that both shape parameters
    /// stay at or above 2 and densities stay bounded.
    pub fn beta_cubic_with_domain(kappa_min: f64, kappa_max: f64) -> Result<Self> {
        if !(kappa_min >= 2.0) {
            return Err(Error::InvalidModel(format!(
                "beta family needs kappa_min >= 2, got {kappa_min}"
            )));
        }
        Self::custom(
            Arc::new(|kappa, x| {
                reg_inc_beta(2.0, kappa, x)
                    .expect("beta cdf arguments validated by caller")
                    .get()
            }),
            Arc::new(|kappa, x| {
                reg_inc_beta(kappa, 2.0, x)
                    .expect("beta cdf arguments validated by caller")
                    .get()
            }),
            Arc::new(|kappa, x| {
                beta_pdf(2.0, kappa, x).expect("shapes >= 2 keep the density finite")
            }),
            Arc::new(|kappa, x| {
                beta_pdf(kappa, 2.0, x).expect("shapes >= 2 keep the density finite")
            }),
            Arc::new(|kappa| (2.0 / kappa).powi(3)),
            kappa_min,
            kappa_max,
        )
    }

    /// Builds a family from user closures and validates the ordering
    /// requirements on a finite grid.
    #[allow(clippy::too_many_arguments)]
    pub fn custom(
        cdf0: Arc<CdfFn>,
        cdf1: Arc<CdfFn>,
        pdf0: Arc<PdfFn>,
        pdf1: Arc<PdfFn>,
        penalty: Arc<PenaltyFn>,
        kappa_min: f64,
        kappa_max: f64,
    ) -> Result<Self> {
        if !kappa_min.is_finite() || !kappa_max.is_finite() || kappa_min >= kappa_max {
            return Err(Error::InvalidModel(format!(
                "quality domain [{kappa_min}, {kappa_max}] is empty or unbounded"
            )));
        }
        let fm = FeatureModel {
            cdf0,
            cdf1,
            pdf0,
            pdf1,
            penalty,
            kappa_min,
            kappa_max,
        };
        fm.validate_on_grid()?;
        Ok(fm)
    }

    pub fn kappa_domain(&self) -> (f64, f64) {
        (self.kappa_min, self.kappa_max)
    }

    pub(crate) fn check_kappa(&self, kappa: f64, op: &'static str) -> Result<()> {
        if !(kappa >= self.kappa_min && kappa <= self.kappa_max) {
            return Err(Error::domain(
                op,
                format!(
                    "kappa = {kappa} outside the quality domain [{}, {}]",
                    self.kappa_min, self.kappa_max
                ),
            ));
        }
        Ok(())
    }

    /// Class-conditional feature CDF at quality `kappa`.
    pub fn cdf(&self, class: EdgeClass, kappa: f64, x: f64) -> Result<Probability> {
        self.check_kappa(kappa, "FeatureModel::cdf")?;
        if !(0.0..=1.0).contains(&x) {
            return Err(Error::domain(
                "FeatureModel::cdf",
                format!("x = {x} outside [0,1]"),
            ));
        }
        let f = match class {
            EdgeClass::NonEdge => &self.cdf0,
            EdgeClass::Edge => &self.cdf1,
        };
        Probability::new(f(kappa, x))
    }

    /// Class-conditional feature density at quality `kappa`.
    pub fn pdf(&self, class: EdgeClass, kappa: f64, x: f64) -> Result<f64> {
        self.check_kappa(kappa, "FeatureModel::pdf")?;
        let f = match class {
            EdgeClass::NonEdge => &self.pdf0,
            EdgeClass::Edge => &self.pdf1,
        };
        let v = f(kappa, x);
        if !(v >= 0.0) {
            return Err(Error::domain(
                "FeatureModel::pdf",
                format!("density at (kappa={kappa}, x={x}) is {v}"),
            ));
        }
        Ok(v)
    }

    /// Fraction of potential edges assessed at quality `kappa`.
    pub fn assess_probability(&self, kappa: f64) -> Result<Probability> {
        self.check_kappa(kappa, "FeatureModel::assess_probability")?;
        Probability::new((self.penalty)(kappa))
    }

    /// The channel summary at an operating point.
    pub fn channel_rates(&self, design: &Design) -> Result<ChannelRates> {
        let assess = self.assess_probability(design.kappa)?;
        let f1 = self.cdf(EdgeClass::Edge, design.kappa, design.tau)?;
        let f0 = self.cdf(EdgeClass::NonEdge, design.kappa, design.tau)?;
        ChannelRates::new(assess, f1.complement(), f0.complement())
    }

    /// Grid validation of the penalty and stochastic-ordering
    /// requirements; rejects families that would break the downstream
    /// monotonicity arguments.
    pub fn validate_on_grid(&self) -> Result<()> {
        let grid_err = |msg: String| Error::InvalidModel(msg);
        let kappas: Vec<f64> = (0..VALIDATION_GRID)
            .map(|i| {
                (i as f64).mul_add(
                    (self.kappa_max - self.kappa_min) / (VALIDATION_GRID - 1) as f64,
                    self.kappa_min,
                )
            })
            .collect();
        let ts: Vec<f64> = (0..VALIDATION_GRID)
            .map(|i| i as f64 / (VALIDATION_GRID - 1) as f64)
            .collect();

        let mut prev_h = f64::INFINITY;
        for &kappa in &kappas {
            let h = (self.penalty)(kappa);
            if !(0.0..=1.0 + VALIDATE_EPS).contains(&h) {
                return Err(grid_err(format!("penalty at kappa={kappa} is {h}")));
            }
            if h > prev_h + VALIDATE_EPS {
                return Err(grid_err(format!(
                    "penalty increases at kappa={kappa} ({prev_h} -> {h})"
                )));
            }
            prev_h = h;
        }

        for &t in &ts {
            let mut prev_f0 = f64::NEG_INFINITY;
            let mut prev_f1 = f64::INFINITY;
            for &kappa in &kappas {
                let f0 = (self.cdf0)(kappa, t);
                let f1 = (self.cdf1)(kappa, t);
                for (name, v) in [("non-edge cdf", f0), ("edge cdf", f1)] {
                    if !(-VALIDATE_EPS..=1.0 + VALIDATE_EPS).contains(&v) {
                        return Err(grid_err(format!(
                            "{name} at (kappa={kappa}, t={t}) is {v}"
                        )));
                    }
                }
                if f1 > f0 + VALIDATE_EPS {
                    return Err(grid_err(format!(
                        "edge features fail to dominate at (kappa={kappa}, t={t}): \
                         F_edge={f1} > F_nonedge={f0}"
                    )));
                }
                if f0 < prev_f0 - VALIDATE_EPS {
                    return Err(grid_err(format!(
                        "non-edge cdf decreases in kappa at (kappa={kappa}, t={t})"
                    )));
                }
                if f1 > prev_f1 + VALIDATE_EPS {
                    return Err(grid_err(format!(
                        "edge cdf increases in kappa at (kappa={kappa}, t={t})"
                    )));
                }
                prev_f0 = f0;
                prev_f1 = f1;
            }
        }
        Ok(())
    }
}

/// Effective block matrix of the observed graph when unassessed pairs
/// are imputed as non-edges: B~ = assess·(tpr·B + fpr·(J−B)).
///
/// Entries are evaluated as assess·(fpr + (tpr−fpr)·B) so that two
/// degenerate cases hold bit for bit: a perfect channel reproduces B
/// unchanged, and equal rates (useless features) flatten the whole
/// matrix to the constant assess·fpr.
pub fn errorful_block_matrix(bm: &BlockModel, rates: &ChannelRates) -> Vec<Vec<f64>> {
    let a = rates.assess.get();
    let t = rates.tpr.get();
    let f = rates.fpr.get();
    bm.b()
        .iter()
        .map(|row| row.iter().map(|&b| a * (f + (t - f) * b)).collect())
        .collect()
}

/// Effective block matrix under the missing-at-random convention,
/// where only assessed pairs enter the likelihood: the assessment
/// probability cancels and B~ = tpr·B + fpr·(J−B), evaluated in the
/// same rearranged form as [`errorful_block_matrix`].
pub fn mcar_block_matrix(bm: &BlockModel, rates: &ChannelRates) -> Vec<Vec<f64>> {
    let t = rates.tpr.get();
    let f = rates.fpr.get();
    bm.b()
        .iter()
        .map(|row| row.iter().map(|&b| f + (t - f) * b).collect())
        .collect()
}
