//! Dense symmetric eigensolver, adjacency spectral embedding, and a
//! two-class linear discriminant, combined into a Monte Carlo estimate
//! of the held-out-vertex error of the spectral pipeline.
//!
//! The eigensolver is cyclic Jacobi: unconditionally convergent for
//! symmetric input and accurate to rounding, which matters more here
//! than speed since the matrices are small (n in the tens to hundreds).

use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{BlockModel, Design, FeatureModel};

/// Row-major dense square matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct SquareMatrix {
    n: usize,
    data: Vec<f64>,
}

impl SquareMatrix {
    pub fn new(n: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != n * n {
            return Err(Error::domain(
                "SquareMatrix::new",
                format!("expected {} entries for order {n}, got {}", n * n, data.len()),
            ));
        }
        Ok(SquareMatrix { n, data })
    }

    pub fn zeros(n: usize) -> Self {
        SquareMatrix { n, data: vec![0.0; n * n] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                m.set(i, j, f(i, j));
            }
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

/// Eigenpairs of a symmetric matrix, ordered by descending |eigenvalue|.
/// Column j of `vectors` belongs to `values[j]`; columns are orthonormal.
#[derive(Clone, Debug)]
pub struct EigenDecomposition {
    pub values: Vec<f64>,
    pub vectors: SquareMatrix,
}

/// Full eigendecomposition by cyclic Jacobi rotations.
///
/// Sweeps until the off-diagonal Frobenius norm drops below
/// 1e-10 times the input norm. Input must be symmetric (checked to a
/// relative 1e-10) with finite entries.
pub fn symmetric_eig(m: &SquareMatrix) -> Result<EigenDecomposition> {
    let n = m.dim();
    let norm = m.frobenius_norm();
    if !norm.is_finite() {
        return Err(Error::domain("symmetric_eig", "matrix has non-finite entries"));
    }
    let sym_tol = 1e-10 * norm.max(1.0);
    for i in 0..n {
        for j in (i + 1)..n {
            if (m.get(i, j) - m.get(j, i)).abs() > sym_tol {
                return Err(Error::domain(
                    "symmetric_eig",
                    format!("matrix is not symmetric at ({i}, {j})"),
                ));
            }
        }
    }

    let mut a = m.clone();
    // Mirror the upper triangle so rotations see a bitwise-symmetric matrix.
    for i in 0..n {
        for j in (i + 1)..n {
            let v = a.get(i, j);
            a.set(j, i, v);
        }
    }
    // The sweep loop works on the raw row-major storage: a rotation
    // touches two full rows contiguously, then mirrors them into the
    // matching columns via symmetry. Eigenvectors accumulate
    // transposed (one row per eventual column) for the same reason.
    let ad = &mut a.data;
    let mut vt = vec![0.0f64; n * n];
    for i in 0..n {
        vt[i * n + i] = 1.0;
    }
    let off_tol = 1e-10 * norm;
    // Entries this small cannot push the off norm past the exit
    // threshold even if every off-diagonal entry had this magnitude
    // (n(n-1) of them, each squared under off_tol^2 / n^2), so their
    // rotations are skipped.
    let skip_tol = off_tol / n as f64;
    let mut row_p = vec![0.0f64; n];
    let mut row_q = vec![0.0f64; n];

    let off = |d: &[f64]| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    s += d[i * n + j] * d[i * n + j];
                }
            }
        }
        s.sqrt()
    };

    let mut sweeps = 0;
    while off(ad) > off_tol {
        sweeps += 1;
        if sweeps > 100 {
            return Err(Error::domain(
                "symmetric_eig",
                "Jacobi iteration failed to converge in 100 sweeps",
            ));
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = ad[p * n + q];
                if apq.abs() <= skip_tol {
                    continue;
                }
                let app = ad[p * n + p];
                let aqq = ad[q * n + q];
                // Rotation angle that zeros a[p][q]; the guarded form of
                // t avoids overflow when the diagonal gap dwarfs apq.
                let theta = (aqq - app) / (2.0 * apq);
                let t = if theta.abs() > 1e153 {
                    0.5 / theta
                } else {
                    theta.signum() / (theta.abs() + theta.hypot(1.0))
                };
                let c = 1.0 / t.hypot(1.0);
                let s = t * c;

                row_p.copy_from_slice(&ad[p * n..p * n + n]);
                row_q.copy_from_slice(&ad[q * n..q * n + n]);
                for i in 0..n {
                    let aip = row_p[i];
                    let aiq = row_q[i];
                    row_p[i] = c * aip - s * aiq;
                    row_q[i] = s * aip + c * aiq;
                }
                // The (p, q) plane itself takes the two-sided update.
                row_p[p] = app - t * apq;
                row_p[q] = 0.0;
                row_q[q] = aqq + t * apq;
                row_q[p] = 0.0;
                ad[p * n..p * n + n].copy_from_slice(&row_p);
                ad[q * n..q * n + n].copy_from_slice(&row_q);
                for i in 0..n {
                    ad[i * n + p] = row_p[i];
                    ad[i * n + q] = row_q[i];
                }

                let (head, tail) = vt.split_at_mut(q * n);
                let vp = &mut head[p * n..p * n + n];
                let vq = &mut tail[..n];
                for i in 0..n {
                    let vip = vp[i];
                    let viq = vq[i];
                    vp[i] = c * vip - s * viq;
                    vq[i] = s * vip + c * viq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        a.get(j, j)
            .abs()
            .partial_cmp(&a.get(i, i).abs())
            .expect("finite eigenvalues")
            .then(i.cmp(&j))
    });
    let values: Vec<f64> = order.iter().map(|&i| a.get(i, i)).collect();
    let mut vectors = SquareMatrix::zeros(n);
    for (col, &src) in order.iter().enumerate() {
        for row in 0..n {
            vectors.set(row, col, vt[src * n + row]);
        }
    }
    Ok(EigenDecomposition { values, vectors })
}

/// Spectral embedding of a symmetric matrix: row i of `coords` is
/// vertex i's position, scaled by the square root of the eigenvalue
/// magnitudes.
#[derive(Clone, Debug)]
pub struct Embedding {
    pub coords: Vec<Vec<f64>>,
    /// The d retained eigenvalues, descending in magnitude. Signs are
    /// kept so callers can see indefiniteness of the input.
    pub eigenvalues: Vec<f64>,
}

/// Adjacency spectral embedding into `d` dimensions: columns of the
/// top-|λ| eigenvectors scaled by |λ|^(1/2).
pub fn ase(m: &SquareMatrix, d: usize) -> Result<Embedding> {
    let n = m.dim();
    if d == 0 || d > n {
        return Err(Error::domain(
            "ase",
            format!("dimension {d} not in 1..={n}"),
        ));
    }
    let eig = symmetric_eig(m)?;
    let scale: Vec<f64> = eig.values[..d].iter().map(|l| l.abs().sqrt()).collect();
    let coords = (0..n)
        .map(|i| (0..d).map(|j| eig.vectors.get(i, j) * scale[j]).collect())
        .collect();
    Ok(Embedding { coords, eigenvalues: eig.values[..d].to_vec() })
}

/// Two-class linear rule: predict `class_hi` when w·x exceeds the
/// threshold, `class_lo` otherwise (ties resolve to `class_lo`).
#[derive(Clone, Debug)]
pub struct Discriminant {
    pub weights: Vec<f64>,
    pub threshold: f64,
    pub class_lo: usize,
    pub class_hi: usize,
    /// Set when the pooled scatter was singular and a ridge was added.
    pub ridged: bool,
}

/// Fisher's linear discriminant: w solves S_w w = μ_hi − μ_lo with the
/// pooled within-class scatter S_w, thresholded at the projected
/// midpoint of the class means.
///
/// A singular S_w falls back to S_w + λI with λ = 1e-8·trace(S_w)
/// (absolute 1e-8 when the scatter vanishes entirely) and sets
/// `ridged`.
pub fn flda_train(points: &[Vec<f64>], labels: &[usize]) -> Result<Discriminant> {
    if points.len() != labels.len() {
        return Err(Error::domain(
            "flda_train",
            format!("{} points but {} labels", points.len(), labels.len()),
        ));
    }
    let mut classes: Vec<usize> = labels.to_vec();
    classes.sort_unstable();
    classes.dedup();
    if classes.len() != 2 {
        return Err(Error::domain(
            "flda_train",
            format!("need exactly two classes, got {}", classes.len()),
        ));
    }
    let (lo, hi) = (classes[0], classes[1]);
    let d = points[0].len();
    if d == 0 || points.iter().any(|p| p.len() != d) {
        return Err(Error::domain("flda_train", "points must share a positive dimension"));
    }

    let mean_of = |class: usize| -> Vec<f64> {
        let mut mu = vec![0.0; d];
        let mut count = 0.0;
        for (p, &l) in points.iter().zip(labels) {
            if l == class {
                for (m, &x) in mu.iter_mut().zip(p) {
                    *m += x;
                }
                count += 1.0;
            }
        }
        mu.iter_mut().for_each(|m| *m /= count);
        mu
    };
    let mu_lo = mean_of(lo);
    let mu_hi = mean_of(hi);

    let mut scatter = vec![0.0; d * d];
    for (p, &l) in points.iter().zip(labels) {
        let mu = if l == lo { &mu_lo } else { &mu_hi };
        for i in 0..d {
            for j in 0..d {
                scatter[i * d + j] += (p[i] - mu[i]) * (p[j] - mu[j]);
            }
        }
    }
    let diff: Vec<f64> = mu_hi.iter().zip(&mu_lo).map(|(h, l)| h - l).collect();

    let (weights, ridged) = match solve_linear(&scatter, &diff, d) {
        Some(w) => (w, false),
        None => {
            let trace: f64 = (0..d).map(|i| scatter[i * d + i]).sum();
            let lambda = if trace > 0.0 { 1e-8 * trace } else { 1e-8 };
            let mut ridged_scatter = scatter;
            for i in 0..d {
                ridged_scatter[i * d + i] += lambda;
            }
            let w = solve_linear(&ridged_scatter, &diff, d)
                .ok_or_else(|| Error::domain("flda_train", "scatter matrix unusable"))?;
            (w, true)
        }
    };

    let threshold = weights
        .iter()
        .enumerate()
        .map(|(i, w)| w * 0.5 * (mu_lo[i] + mu_hi[i]))
        .sum();
    Ok(Discriminant { weights, threshold, class_lo: lo, class_hi: hi, ridged })
}

/// Gaussian elimination with partial pivoting; None when a pivot falls
/// below 1e-12 of the matrix scale.
fn solve_linear(a: &[f64], b: &[f64], d: usize) -> Option<Vec<f64>> {
    let scale = a.iter().fold(0.0f64, |acc, v| acc.max(v.abs())).max(1e-300);
    let mut m = a.to_vec();
    let mut rhs = b.to_vec();
    for col in 0..d {
        let pivot_row = (col..d)
            .max_by(|&i, &j| {
                m[i * d + col].abs().partial_cmp(&m[j * d + col].abs()).expect("finite")
            })
            .expect("nonempty range");
        if m[pivot_row * d + col].abs() <= 1e-12 * scale {
            return None;
        }
        if pivot_row != col {
            for j in 0..d {
                m.swap(col * d + j, pivot_row * d + j);
            }
            rhs.swap(col, pivot_row);
        }
        for row in (col + 1)..d {
            let factor = m[row * d + col] / m[col * d + col];
            if factor == 0.0 {
                continue;
            }
            for j in col..d {
                m[row * d + j] -= factor * m[col * d + j];
            }
            rhs[row] -= factor * rhs[col];
        }
    }
    let mut x = vec![0.0; d];
    for col in (0..d).rev() {
        let mut acc = rhs[col];
        for j in (col + 1)..d {
            acc -= m[col * d + j] * x[j];
        }
        x[col] = acc / m[col * d + col];
    }
    Some(x)
}

pub fn flda_classify(disc: &Discriminant, x: &[f64]) -> usize {
    let score: f64 = disc.weights.iter().zip(x).map(|(w, v)| w * v).sum();
    if score > disc.threshold {
        disc.class_hi
    } else {
        disc.class_lo
    }
}

/// One point of the embedding-pipeline error curve.
#[derive(Clone, Copy, Debug, serde::Serialize)]
pub struct EmbeddingPoint {
    pub tau: f64,
    pub error_rate: f64,
    pub std_error: f64,
    pub trials: u64,
}

/// Monte Carlo error of the spectral pipeline at fixed `kappa` across
/// a grid of thresholds: sample the graph conditioned on block sizes,
/// pass it through the errorful channel, embed all n vertices (the
/// held-out one included, with unassessed pairs imputed as non-edges),
/// train the discriminant on the n−1 labeled embeddings, and classify
/// the held-out vertex.
///
/// Each (tau, trial) pair owns an RNG stream, so results are identical
/// across thread counts and tau points are statistically independent.
/// A trial whose pipeline degenerates (e.g. the eigensolver rejects the
/// draw) is redrawn at most 3 times, then counted as an error.
pub fn mc_embedding_error(
    model: &BlockModel,
    feats: &FeatureModel,
    kappa: f64,
    taus: &[f64],
    dimension: usize,
    trials: u64,
    seed: u64,
) -> Result<Vec<EmbeddingPoint>> {
    if model.k() != 2 {
        return Err(Error::Unsupported {
            op: "mc_embedding_error",
            msg: "the discriminant stage is binary; need exactly two blocks".into(),
        });
    }
    if trials < 100 {
        return Err(Error::domain(
            "mc_embedding_error",
            format!("need at least 100 trials for a usable standard error, got {trials}"),
        ));
    }
    if taus.is_empty() {
        return Err(Error::domain("mc_embedding_error", "empty tau grid"));
    }
    if dimension == 0 || dimension > model.n() {
        return Err(Error::domain(
            "mc_embedding_error",
            format!("embedding dimension {dimension} not in 1..={}", model.n()),
        ));
    }
    feats.check_kappa(kappa, "mc_embedding_error")?;
    for &tau in taus {
        if !(0.0..=1.0).contains(&tau) {
            return Err(Error::domain("mc_embedding_error", format!("tau {tau} outside [0, 1]")));
        }
    }

    let n = model.n();
    let counts = crate::sim::graph::conditioned_counts(model.pi(), n - 1);
    let mut labels = Vec::with_capacity(n);
    for (block, &c) in counts.iter().enumerate() {
        labels.extend(std::iter::repeat(block).take(c));
    }

    taus.par_iter()
        .enumerate()
        .map(|(tau_idx, &tau)| {
            let design = Design { kappa, tau };
            let mut errors = 0u64;
            for t in 0..trials {
                let mut rng = crate::sim::trial_rng(seed, tau_idx as u64 * trials + t);
                let mut attempts = 0;
                let missed = loop {
                    match embedding_trial(model, feats, design, &labels, dimension, &mut rng) {
                        Ok(missed) => break missed,
                        Err(_) if attempts < 3 => attempts += 1,
                        Err(_) => break true,
                    }
                };
                if missed {
                    errors += 1;
                }
            }
            let p = errors as f64 / trials as f64;
            Ok(EmbeddingPoint {
                tau,
                error_rate: p,
                std_error: (p * (1.0 - p) / trials as f64).sqrt(),
                trials,
            })
        })
        .collect()
}

fn embedding_trial(
    model: &BlockModel,
    feats: &FeatureModel,
    design: Design,
    labeled: &[usize],
    dimension: usize,
    rng: &mut impl Rng,
) -> Result<bool> {
    let held_out = crate::sim::sample_categorical(rng, model.pi());
    let mut labels = labeled.to_vec();
    labels.push(held_out);

    let graph = crate::sim::graph::sample_given_labels(model, &labels, rng)?;
    let observed = crate::sim::channel::observe_errorful_with_rng(
        &graph,
        feats,
        design,
        crate::sim::graph::MissingnessMode::ImputedZero,
        rng,
    )?;
    let adj = observed.adjacency_matrix()?;
    let emb = ase(&adj, dimension)?;

    let n = labels.len();
    let disc = flda_train(&emb.coords[..n - 1], labeled)?;
    let predicted = flda_classify(&disc, &emb.coords[n - 1]);
    Ok(predicted != held_out)
}
