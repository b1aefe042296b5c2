//! Grid search over the quantity/quality design space: the
//! misclassification surface and its argmin, the large-sample normal
//! optimum, the spectral projection-bound optimum, and the fixed-kappa
//! diagnostic curves.
//!
//! Everything here is a deterministic function of the model and the
//! grids. Cells are independent, so rows are evaluated in parallel and
//! merged by index; tie-breaking is lexicographic (best value, then
//! smallest tau, then smallest kappa) so the reported optimum never
//! depends on scheduling.

use rayon::prelude::*;
use serde::Serialize;

use crate::embed::{symmetric_eig, SquareMatrix};
use crate::error::{Error, Result};
use crate::exact::{
    balanced_two_block_error, conditional_error, normal_approx_error, ClassCounts, TieRule,
};
use crate::model::{errorful_block_matrix, BlockModel, Design, EdgeClass, FeatureModel};
use crate::special::Probability;

/// Evenly spaced grid from `min` to at most `max` in steps of `step`.
///
/// Points are computed as fused `i·step + min`, which keeps decimal
/// grids clean (0.005 steps from 0 land bitwise on the 0.6 literal)
/// and makes `grid[0] == min` exact. The final point is capped at
/// `max` to absorb last-ulp overshoot.
pub fn linear_grid(min: f64, max: f64, step: f64) -> Result<Vec<f64>> {
    if !min.is_finite() || !max.is_finite() || !(step > 0.0) {
        return Err(Error::domain(
            "linear_grid",
            format!("need finite bounds and positive step, got [{min}, {max}] step {step}"),
        ));
    }
    if max < min {
        return Err(Error::domain(
            "linear_grid",
            format!("empty range [{min}, {max}]"),
        ));
    }
    let count = ((max - min) / step + 1e-9).floor() as usize + 1;
    Ok((0..count)
        .map(|i| (i as f64).mul_add(step, min).min(max))
        .collect())
}

/// How a surface cell's misclassification probability is computed.
#[derive(Clone, Debug)]
pub enum SurfaceEvaluator {
    /// Exact enumeration conditioned on fixed per-block label counts
    /// (which must sum to n−1: the held-out vertex is excluded).
    Exact { counts: Vec<usize> },
    /// Closed form for the balanced symmetric two-block model.
    Balanced,
    /// Large-sample normal approximation for the same balanced model.
    Normal,
}

/// A grid point and the value achieved there.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct SurfaceOptimum {
    pub kappa: f64,
    pub tau: f64,
    pub value: f64,
}

/// Misclassification probability over a (kappa, tau) grid.
#[derive(Clone, Debug)]
pub struct ErrorSurface {
    pub kappa_grid: Vec<f64>,
    pub tau_grid: Vec<f64>,
    /// Assessment probability h(kappa) per kappa row, for plotting the
    /// surface against the fraction of pairs assessed.
    pub assess: Vec<f64>,
    /// values[i][j] is the error at (kappa_grid[i], tau_grid[j]).
    pub values: Vec<Vec<Probability>>,
    pub argmin: SurfaceOptimum,
    /// Row-wise best threshold: entry i is the optimum over tau at
    /// kappa_grid[i] (ties resolve to the smallest tau).
    pub per_kappa_argmin_tau: Vec<SurfaceOptimum>,
}

fn validate_grids(feats: &FeatureModel, kappa_grid: &[f64], tau_grid: &[f64]) -> Result<()> {
    if kappa_grid.is_empty() || tau_grid.is_empty() {
        return Err(Error::domain("optimize", "empty grid"));
    }
    for &kappa in kappa_grid {
        feats.check_kappa(kappa, "optimize")?;
    }
    for &tau in tau_grid {
        if !(0.0..=1.0).contains(&tau) {
            return Err(Error::domain("optimize", format!("tau {tau} outside [0, 1]")));
        }
    }
    Ok(())
}

/// Checks the shape the balanced closed form and the normal
/// approximation require: two blocks, equal diagonal, uniform prior,
/// and an even number n−1 of labeled vertices to split in half.
fn require_balanced(bm: &BlockModel, op: &'static str) -> Result<usize> {
    let b = bm.b();
    let balanced = bm.k() == 2
        && (b[0][0] - b[1][1]).abs() <= 1e-12
        && (bm.pi()[0] - 0.5).abs() <= 1e-12
        && (bm.n() - 1) % 2 == 0;
    if !balanced {
        return Err(Error::Unsupported {
            op,
            msg: "needs the balanced symmetric two-block model \
                  (K = 2, B11 = B22, uniform prior, n odd)"
                .into(),
        });
    }
    Ok((bm.n() - 1) / 2)
}

/// Lexicographic improvement test: smaller value, then smaller tau,
/// then smaller kappa.
fn improves_min(value: f64, kappa: f64, tau: f64, best: &SurfaceOptimum) -> bool {
    value < best.value
        || (value == best.value && (tau < best.tau || (tau == best.tau && kappa < best.kappa)))
}

/// Evaluates the misclassification surface over the grid.
///
/// Evaluator failures (enumeration budget, invalid cells) surface with
/// the offending grid coordinates attached.
pub fn build_surface(
    bm: &BlockModel,
    feats: &FeatureModel,
    kappa_grid: &[f64],
    tau_grid: &[f64],
    evaluator: &SurfaceEvaluator,
) -> Result<ErrorSurface> {
    validate_grids(feats, kappa_grid, tau_grid)?;
    let counts = match evaluator {
        SurfaceEvaluator::Exact { counts } => {
            if counts.len() != bm.k() {
                return Err(Error::domain(
                    "build_surface",
                    format!("{} block counts for {} blocks", counts.len(), bm.k()),
                ));
            }
            if counts.iter().sum::<usize>() != bm.n() - 1 {
                return Err(Error::domain(
                    "build_surface",
                    format!(
                        "block counts must sum to n−1 = {} (held-out vertex excluded)",
                        bm.n() - 1
                    ),
                ));
            }
            Some(ClassCounts::new(counts.clone())?)
        }
        SurfaceEvaluator::Balanced | SurfaceEvaluator::Normal => {
            require_balanced(bm, "build_surface")?;
            None
        }
    };

    let assess: Vec<f64> = kappa_grid
        .iter()
        .map(|&k| feats.assess_probability(k).map(|p| p.get()))
        .collect::<Result<_>>()?;

    let rows: Vec<Vec<Probability>> = kappa_grid
        .par_iter()
        .map(|&kappa| {
            tau_grid
                .iter()
                .map(|&tau| {
                    surface_cell(bm, feats, kappa, tau, evaluator, counts.as_ref())
                        .map_err(|e| e.at_cell(kappa, tau))
                })
                .collect()
        })
        .collect::<Result<_>>()?;

    let mut per_kappa = Vec::with_capacity(kappa_grid.len());
    for (i, row) in rows.iter().enumerate() {
        let mut best = SurfaceOptimum {
            kappa: kappa_grid[i],
            tau: tau_grid[0],
            value: row[0].get(),
        };
        for (j, v) in row.iter().enumerate().skip(1) {
            if v.get() < best.value {
                best.tau = tau_grid[j];
                best.value = v.get();
            }
        }
        per_kappa.push(best);
    }
    let mut argmin = per_kappa[0];
    for cand in &per_kappa[1..] {
        if improves_min(cand.value, cand.kappa, cand.tau, &argmin) {
            argmin = *cand;
        }
    }

    Ok(ErrorSurface {
        kappa_grid: kappa_grid.to_vec(),
        tau_grid: tau_grid.to_vec(),
        assess,
        values: rows,
        argmin,
        per_kappa_argmin_tau: per_kappa,
    })
}

fn surface_cell(
    bm: &BlockModel,
    feats: &FeatureModel,
    kappa: f64,
    tau: f64,
    evaluator: &SurfaceEvaluator,
    counts: Option<&ClassCounts>,
) -> Result<Probability> {
    let rates = feats.channel_rates(&Design { kappa, tau })?;
    let bt = errorful_block_matrix(bm, &rates);
    match evaluator {
        SurfaceEvaluator::Exact { .. } => {
            let counts = counts.expect("validated in build_surface");
            conditional_error(counts, &bt, bm.pi(), TieRule::default())
        }
        SurfaceEvaluator::Balanced => {
            let half = (bm.n() - 1) / 2;
            Ok(balanced_two_block_error(
                half,
                Probability::new(bt[0][0])?,
                Probability::new(bt[0][1])?,
            ))
        }
        SurfaceEvaluator::Normal => Ok(normal_approx_error(
            bm.n() - 1,
            Probability::new(bt[0][0])?,
            Probability::new(bt[0][1])?,
        )),
    }
}

/// Observed within/cross block probabilities for the balanced model at
/// one design point.
fn balanced_rates(bm: &BlockModel, feats: &FeatureModel, kappa: f64, tau: f64) -> Result<(f64, f64)> {
    let rates = feats.channel_rates(&Design { kappa, tau })?;
    let bt = errorful_block_matrix(bm, &rates);
    Ok((bt[0][0], bt[0][1]))
}

/// Design point maximizing the signal-to-noise ratio μ/σ of the
/// block-degree difference, the quantity the normal approximation
/// says to optimize.
///
/// σ = 0 cells score +∞ when the signal is positive (perfect
/// separation) and −∞ otherwise, so degenerate cells never beat a
/// finite competitor by accident. Ties resolve to the smallest tau,
/// then the smallest kappa.
pub fn normal_approx_optimum(
    bm: &BlockModel,
    feats: &FeatureModel,
    kappa_grid: &[f64],
    tau_grid: &[f64],
) -> Result<(f64, f64)> {
    let half = require_balanced(bm, "normal_approx_optimum")?;
    validate_grids(feats, kappa_grid, tau_grid)?;
    let mut best: Option<(f64, f64, f64)> = None;
    for &kappa in kappa_grid {
        for &tau in tau_grid {
            let (b11, b12) = balanced_rates(bm, feats, kappa, tau)?;
            let mu = half as f64 * (b11 - b12);
            let var = half as f64 * (b11 * (1.0 - b11) + b12 * (1.0 - b12));
            let score = if var > 0.0 {
                mu / var.sqrt()
            } else if mu > 0.0 {
                f64::INFINITY
            } else {
                f64::NEG_INFINITY
            };
            let replace = match &best {
                None => true,
                Some((bs, bk, bt_)) => {
                    score > *bs
                        || (score == *bs && (tau < *bt_ || (tau == *bt_ && kappa < *bk)))
                }
            };
            if replace {
                best = Some((score, kappa, tau));
            }
        }
    }
    let (_, kappa, tau) = best.expect("grids validated nonempty");
    Ok((kappa, tau))
}

/// Design point minimizing the spectral projection bound
/// max_k (πᵀB̃)_k / λ_d², with λ_d the d-th largest-magnitude
/// eigenvalue of diag(π)·B̃.
///
/// The eigenvalues come from the symmetric similarity
/// diag(π)^½ · B̃ · diag(π)^½, which shares the spectrum and keeps the
/// Jacobi solver applicable. Cells where |λ_d| falls below 1e-12 of
/// the spectral radius (a rank-deficient B̃) score +∞ and are never
/// selected over a finite cell.
pub fn projection_optimum(
    bm: &BlockModel,
    feats: &FeatureModel,
    kappa_grid: &[f64],
    tau_grid: &[f64],
    d: usize,
) -> Result<(f64, f64)> {
    let k = bm.k();
    if d == 0 || d > k {
        return Err(Error::domain(
            "projection_optimum",
            format!("embedding dimension {d} not in 1..={k}"),
        ));
    }
    validate_grids(feats, kappa_grid, tau_grid)?;
    let pi = bm.pi();
    let root_pi: Vec<f64> = pi.iter().map(|&p| p.sqrt()).collect();

    let mut best: Option<SurfaceOptimum> = None;
    for &kappa in kappa_grid {
        for &tau in tau_grid {
            let rates = feats
                .channel_rates(&Design { kappa, tau })
                .map_err(|e| e.at_cell(kappa, tau))?;
            let bt = errorful_block_matrix(bm, &rates);
            // Mirrored fill keeps the similarity bitwise symmetric.
            let mut sim = SquareMatrix::zeros(k);
            for i in 0..k {
                for j in i..k {
                    let v = root_pi[i] * root_pi[j] * bt[i][j];
                    sim.set(i, j, v);
                    sim.set(j, i, v);
                }
            }
            let eig = symmetric_eig(&sim).map_err(|e| e.at_cell(kappa, tau))?;
            let radius = eig.values[0].abs();
            let lambda_d = eig.values[d - 1];
            let score = if lambda_d.abs() <= 1e-12 * radius || radius == 0.0 {
                f64::INFINITY
            } else {
                let worst = (0..k)
                    .map(|col| (0..k).map(|row| pi[row] * bt[row][col]).sum::<f64>())
                    .fold(f64::NEG_INFINITY, f64::max);
                worst / (lambda_d * lambda_d)
            };
            let replace = match &best {
                None => true,
                Some(b) => improves_min(score, kappa, tau, b),
            };
            if replace {
                best = Some(SurfaceOptimum { kappa, tau, value: score });
            }
        }
    }
    let best = best.expect("grids validated nonempty");
    Ok((best.kappa, best.tau))
}

/// One point of the observed-probability path at fixed kappa.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct PathPoint {
    pub tau: f64,
    pub b11: f64,
    pub b12: f64,
    /// Exact misclassification probability at this design point,
    /// conditioned on the prior-proportional block split of the n−1
    /// labeled vertices.
    pub error: f64,
}

/// Traces (B̃₁₁, B̃₁₂) as tau sweeps the grid at fixed kappa, with the
/// exact error overlaid. At tau = 0 both coordinates collapse to the
/// assessment probability; at tau = 1 both vanish.
pub fn btilde_path(
    bm: &BlockModel,
    feats: &FeatureModel,
    kappa: f64,
    tau_grid: &[f64],
) -> Result<Vec<PathPoint>> {
    if bm.k() != 2 {
        return Err(Error::Unsupported {
            op: "btilde_path",
            msg: format!("needs a two-block model, got {} blocks", bm.k()),
        });
    }
    validate_grids(feats, &[kappa], tau_grid)?;
    let counts = ClassCounts::new(crate::sim::graph::conditioned_counts(bm.pi(), bm.n() - 1))?;
    tau_grid
        .iter()
        .map(|&tau| {
            let rates = feats
                .channel_rates(&Design { kappa, tau })
                .map_err(|e| e.at_cell(kappa, tau))?;
            let bt = errorful_block_matrix(bm, &rates);
            let error = conditional_error(&counts, &bt, bm.pi(), TieRule::default())
                .map_err(|e| e.at_cell(kappa, tau))?;
            Ok(PathPoint {
                tau,
                b11: bt[0][0],
                b12: bt[0][1],
                error: error.get(),
            })
        })
        .collect()
}

/// One point of the signal mean/variance curve at fixed kappa.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct CurvePoint {
    pub tau: f64,
    pub mean: f64,
    pub variance: f64,
}

/// The block-degree signal curve and its qualitative shape summary.
#[derive(Clone, Debug)]
pub struct MeanVarianceCurve {
    pub points: Vec<CurvePoint>,
    /// Threshold with the largest mean signal (ties → smallest tau).
    pub argmax_mean_tau: f64,
    /// Whether the variance never increases along the grid.
    pub variance_nonincreasing: bool,
}

/// Mean and variance of the per-vertex block-degree difference
/// (D_within − D_cross)/n as tau varies at fixed kappa: the mean is
/// B̃₁₁ − B̃₁₂ and the variance [B̃₁₁(1−B̃₁₁) + B̃₁₂(1−B̃₁₂)]/n.
pub fn mean_variance_curve(
    bm: &BlockModel,
    feats: &FeatureModel,
    kappa: f64,
    tau_grid: &[f64],
    n: usize,
) -> Result<MeanVarianceCurve> {
    let b = bm.b();
    if bm.k() != 2 || (b[0][0] - b[1][1]).abs() > 1e-12 {
        return Err(Error::Unsupported {
            op: "mean_variance_curve",
            msg: "needs a symmetric two-block model (K = 2, B11 = B22)".into(),
        });
    }
    if n == 0 {
        return Err(Error::domain("mean_variance_curve", "need n >= 1"));
    }
    validate_grids(feats, &[kappa], tau_grid)?;

    let mut points = Vec::with_capacity(tau_grid.len());
    for &tau in tau_grid {
        let (b11, b12) = balanced_rates(bm, feats, kappa, tau)?;
        points.push(CurvePoint {
            tau,
            mean: b11 - b12,
            variance: (b11 * (1.0 - b11) + b12 * (1.0 - b12)) / n as f64,
        });
    }
    let mut argmax = points[0];
    for p in &points[1..] {
        if p.mean > argmax.mean {
            argmax = *p;
        }
    }
    let variance_nonincreasing = points
        .windows(2)
        .all(|w| w[1].variance <= w[0].variance + 1e-12);
    Ok(MeanVarianceCurve {
        points,
        argmax_mean_tau: argmax.tau,
        variance_nonincreasing,
    })
}

/// Threshold equalizing the class-weighted feature densities
/// ρ·f_edge(t) = (1−ρ)·f_nonedge(t), where ρ is the model's expected
/// edge density: the feature-space Bayes decision boundary.
///
/// Located by a sign-change scan over 2048 interior intervals followed
/// by bisection. Families whose weighted densities never cross (for
/// example identical class densities) yield a domain error.
pub fn bayes_threshold(bm: &BlockModel, feats: &FeatureModel, kappa: f64) -> Result<f64> {
    feats.check_kappa(kappa, "bayes_threshold")?;
    let rho = bm.expected_density().get();
    if !(rho > 0.0 && rho < 1.0) {
        return Err(Error::domain(
            "bayes_threshold",
            format!("expected density {rho} leaves nothing to threshold"),
        ));
    }
    let g = |t: f64| -> Result<f64> {
        let f1 = feats.pdf(EdgeClass::Edge, kappa, t)?;
        let f0 = feats.pdf(EdgeClass::NonEdge, kappa, t)?;
        Ok(rho * f1 - (1.0 - rho) * f0)
    };

    const SCAN: usize = 2048;
    let mut lo = f64::NAN;
    let mut hi = f64::NAN;
    let mut g_lo = 0.0;
    let mut prev: Option<(f64, f64)> = None;
    for i in 1..SCAN {
        let t = i as f64 / SCAN as f64;
        let gt = g(t)?;
        if gt == 0.0 {
            return Ok(t);
        }
        if let Some((pt, pg)) = prev {
            if pg < 0.0 && gt > 0.0 {
                lo = pt;
                hi = t;
                g_lo = pg;
                break;
            }
        }
        prev = Some((t, gt));
    }
    if lo.is_nan() {
        return Err(Error::domain(
            "bayes_threshold",
            "weighted class densities never cross in (0, 1)",
        ));
    }
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        let gm = g(mid)?;
        if gm == 0.0 {
            return Ok(mid);
        }
        if (gm < 0.0) == (g_lo < 0.0) {
            lo = mid;
            g_lo = gm;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}
