//! Labeled graphs, their errorfully observed counterparts, and
//! block-conditioned sampling.
//!
//! Adjacency is stored as the strict upper triangle in a flat byte
//! array: graphs here are simple, undirected, and hollow, and the
//! experiments sweep all potential edges anyway, so dense triangular
//! storage is the honest choice at desk scale.

use rand::Rng;

use crate::embed::SquareMatrix;
use crate::error::{Error, Result};
use crate::model::BlockModel;
use crate::sim::estimate::SbmEstimate;

/// How block sizes arise when sampling: labels drawn iid from the
/// prior, or fixed counts in block order (block 0 first).
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Conditioning {
    Multinomial,
    FixedCounts(Vec<usize>),
}

/// Index into the strict upper triangle, row-major; caller supplies
/// u < v.
#[inline]
fn tri_index(n: usize, u: usize, v: usize) -> usize {
    debug_assert!(u < v && v < n);
    u * (2 * n - u - 1) / 2 + (v - u - 1)
}

fn tri_len(n: usize) -> usize {
    n * (n - 1) / 2
}

fn validate_labels(k: usize, labels: &[usize]) -> Result<()> {
    if k == 0 {
        return Err(Error::domain("graph", "need at least one block"));
    }
    if labels.is_empty() {
        return Err(Error::domain("graph", "need at least one vertex"));
    }
    if let Some(&bad) = labels.iter().find(|&&l| l >= k) {
        return Err(Error::domain(
            "graph",
            format!("label {bad} out of range for {k} blocks"),
        ));
    }
    Ok(())
}

/// Simple undirected graph with a block label per vertex.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LabeledGraph {
    n: usize,
    k: usize,
    labels: Vec<usize>,
    adj: Vec<u8>,
}

impl LabeledGraph {
    /// Edgeless graph over the given labels.
    pub fn new(k: usize, labels: Vec<usize>) -> Result<Self> {
        validate_labels(k, &labels)?;
        let n = labels.len();
        Ok(LabeledGraph {
            n,
            k,
            labels,
            adj: vec![0; tri_len(n)],
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        if u == v {
            return false;
        }
        let (u, v) = if u < v { (u, v) } else { (v, u) };
        self.adj[tri_index(self.n, u, v)] != 0
    }

    /// Sets the (u, v) adjacency; self-loops are rejected.
    pub fn set_edge(&mut self, u: usize, v: usize, present: bool) -> Result<()> {
        if u == v {
            return Err(Error::domain("set_edge", format!("self-loop at vertex {u}")));
        }
        if u >= self.n || v >= self.n {
            return Err(Error::domain(
                "set_edge",
                format!("vertex pair ({u}, {v}) outside 0..{}", self.n),
            ));
        }
        let (u, v) = if u < v { (u, v) } else { (v, u) };
        self.adj[tri_index(self.n, u, v)] = present as u8;
        Ok(())
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(|&b| b as usize).sum()
    }

    pub fn block_counts(&self) -> Vec<usize> {
        let mut counts = vec![0usize; self.k];
        for &l in &self.labels {
            counts[l] += 1;
        }
        counts
    }

    /// Dense 0/1 adjacency matrix (symmetric, zero diagonal).
    pub fn adjacency_matrix(&self) -> SquareMatrix {
        let mut m = SquareMatrix::zeros(self.n);
        for u in 0..self.n {
            for v in (u + 1)..self.n {
                if self.adj[tri_index(self.n, u, v)] != 0 {
                    m.set(u, v, 1.0);
                    m.set(v, u, 1.0);
                }
            }
        }
        m
    }

    /// Block-pair edge frequencies and label proportions of this graph.
    pub fn estimate_sbm(&self) -> Result<SbmEstimate> {
        crate::sim::estimate::estimate_sbm(self)
    }
}

/// Apportions `total` vertices to blocks proportional to `pi` by
/// largest remainder: floors first, then hands leftover seats to the
/// largest fractional parts (ties to the smaller index).
pub fn conditioned_counts(pi: &[f64], total: usize) -> Vec<usize> {
    let mut counts: Vec<usize> = pi.iter().map(|&p| (p * total as f64).floor() as usize).collect();
    let assigned: usize = counts.iter().sum();
    let mut order: Vec<usize> = (0..pi.len()).collect();
    order.sort_by(|&i, &j| {
        let fi = pi[i] * total as f64 - counts[i] as f64;
        let fj = pi[j] * total as f64 - counts[j] as f64;
        fj.partial_cmp(&fi).expect("finite remainders").then(i.cmp(&j))
    });
    for &i in order.iter().take(total - assigned) {
        counts[i] += 1;
    }
    counts
}

/// Samples edges independently per pair given fixed vertex labels:
/// pair (u, v) is an edge with probability B[label(u)][label(v)].
pub fn sample_given_labels(
    bm: &BlockModel,
    labels: &[usize],
    rng: &mut impl Rng,
) -> Result<LabeledGraph> {
    let mut g = LabeledGraph::new(bm.k(), labels.to_vec())?;
    let b = bm.b();
    let n = labels.len();
    for u in 0..n {
        for v in (u + 1)..n {
            let p = b[labels[u]][labels[v]];
            // Strict comparison on a [0, 1) uniform makes the edge
            // probabilities 0 and 1 exact.
            if rng.gen::<f64>() < p {
                g.adj[tri_index(n, u, v)] = 1;
            }
        }
    }
    Ok(g)
}

/// Samples a blockmodel graph of bm.n() vertices, labels first (iid
/// from the prior, or fixed counts laid out in block order), then
/// edges.
pub fn sample_sbm(bm: &BlockModel, seed: u64, conditioning: &Conditioning) -> Result<LabeledGraph> {
    let mut rng = crate::sim::trial_rng(seed, 0);
    sample_sbm_with_rng(bm, conditioning, &mut rng)
}

pub fn sample_sbm_with_rng(
    bm: &BlockModel,
    conditioning: &Conditioning,
    rng: &mut impl Rng,
) -> Result<LabeledGraph> {
    let labels = match conditioning {
        Conditioning::Multinomial => (0..bm.n())
            .map(|_| crate::sim::sample_categorical(rng, bm.pi()))
            .collect::<Vec<_>>(),
        Conditioning::FixedCounts(counts) => {
            if counts.len() != bm.k() {
                return Err(Error::domain(
                    "sample_sbm",
                    format!("{} counts for {} blocks", counts.len(), bm.k()),
                ));
            }
            if counts.iter().sum::<usize>() != bm.n() {
                return Err(Error::domain(
                    "sample_sbm",
                    format!("counts sum to {}, graph has {} vertices", counts.iter().sum::<usize>(), bm.n()),
                ));
            }
            let mut labels = Vec::with_capacity(bm.n());
            for (block, &c) in counts.iter().enumerate() {
                labels.extend(std::iter::repeat(block).take(c));
            }
            labels
        }
    };
    sample_given_labels(bm, &labels, rng)
}

/// Per-pair outcome of an observation channel.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EdgeStatus {
    Edge,
    NonEdge,
    Missing,
}

/// What happens to pairs the channel never assessed: imputed as
/// non-edges, or kept as missing data.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MissingnessMode {
    ImputedZero,
    Mcar,
}

/// A labeled graph as seen through an observation channel.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ObservedGraph {
    n: usize,
    k: usize,
    labels: Vec<usize>,
    status: Vec<EdgeStatus>,
    mode: MissingnessMode,
}

impl ObservedGraph {
    /// Builds from explicit per-pair statuses (strict upper triangle,
    /// row-major). Missing entries are only legal in Mcar mode.
    pub fn from_statuses(
        k: usize,
        labels: Vec<usize>,
        status: Vec<EdgeStatus>,
        mode: MissingnessMode,
    ) -> Result<Self> {
        validate_labels(k, &labels)?;
        let n = labels.len();
        if status.len() != tri_len(n) {
            return Err(Error::domain(
                "ObservedGraph::from_statuses",
                format!("{} statuses for {} pairs", status.len(), tri_len(n)),
            ));
        }
        if mode == MissingnessMode::ImputedZero
            && status.iter().any(|&s| s == EdgeStatus::Missing)
        {
            return Err(Error::domain(
                "ObservedGraph::from_statuses",
                "Missing status under ImputedZero mode",
            ));
        }
        Ok(ObservedGraph { n, k, labels, status, mode })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn mode(&self) -> MissingnessMode {
        self.mode
    }

    /// Status of a pair; the diagonal is NonEdge by convention.
    pub fn status(&self, u: usize, v: usize) -> EdgeStatus {
        if u == v {
            return EdgeStatus::NonEdge;
        }
        let (u, v) = if u < v { (u, v) } else { (v, u) };
        self.status[tri_index(self.n, u, v)]
    }

    pub fn edge_count(&self) -> usize {
        self.status.iter().filter(|&&s| s == EdgeStatus::Edge).count()
    }

    /// Reinterprets unassessed pairs as non-edges.
    pub fn to_imputed_zero(&self) -> ObservedGraph {
        let status = self
            .status
            .iter()
            .map(|&s| if s == EdgeStatus::Missing { EdgeStatus::NonEdge } else { s })
            .collect();
        ObservedGraph {
            n: self.n,
            k: self.k,
            labels: self.labels.clone(),
            status,
            mode: MissingnessMode::ImputedZero,
        }
    }

    /// Dense 0/1 adjacency of the observed graph; defined only in
    /// ImputedZero mode, where every pair has a definite status.
    pub fn adjacency_matrix(&self) -> Result<SquareMatrix> {
        if self.mode != MissingnessMode::ImputedZero {
            return Err(Error::Unsupported {
                op: "ObservedGraph::adjacency_matrix",
                msg: "Mcar observations have no binary adjacency; call to_imputed_zero first"
                    .into(),
            });
        }
        let mut m = SquareMatrix::zeros(self.n);
        for u in 0..self.n {
            for v in (u + 1)..self.n {
                if self.status[tri_index(self.n, u, v)] == EdgeStatus::Edge {
                    m.set(u, v, 1.0);
                    m.set(v, u, 1.0);
                }
            }
        }
        Ok(m)
    }

    /// Block-pair Edge frequencies of the observed graph; requires
    /// ImputedZero mode so the denominator is all potential pairs.
    pub fn estimate_sbm(&self) -> Result<SbmEstimate> {
        if self.mode != MissingnessMode::ImputedZero {
            return Err(Error::Unsupported {
                op: "ObservedGraph::estimate_sbm",
                msg: "estimation over all pairs needs ImputedZero mode".into(),
            });
        }
        crate::sim::estimate::estimate_from(self.k, &self.labels, |u, v| {
            self.status(u, v) == EdgeStatus::Edge
        })
    }

    #[cfg(test)]
    pub(crate) fn status_slice(&self) -> &[EdgeStatus] {
        &self.status
    }

    pub(crate) fn from_parts_unchecked(
        k: usize,
        labels: Vec<usize>,
        status: Vec<EdgeStatus>,
        mode: MissingnessMode,
    ) -> Self {
        let n = labels.len();
        debug_assert_eq!(status.len(), tri_len(n));
        ObservedGraph { n, k, labels, status, mode }
    }
}
