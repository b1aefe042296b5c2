//! Exact vertex-misclassification probabilities for a held-out vertex
//! classified by the normalized-block-degree rule, plus the balanced
//! two-block closed form and the large-sample normal approximation.
//!
//! Setup: the held-out vertex draws its block from `pi`; conditioned on
//! its block `k` and on `n_j` labeled vertices in block `j`, the block
//! degree counts are independent binomials D_j ~ Bin(n_j, B~[k][j]).
//! The classifier picks argmax_j D_j / n_j, breaking ties uniformly at
//! random, with the convention that an empty block scores 0/0 := 0.

use crate::error::{Error, Result};
use crate::special::{binom_cdf, binom_pmf, std_normal_cdf, Probability};

/// Joint-outcome ceiling for exact enumeration. One unit is one cell
/// of the product space ∏(n_j + 1).
pub const DEFAULT_ENUM_BUDGET: u64 = 10_000_000;

/// Number of labeled vertices per block around the held-out vertex.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClassCounts(Vec<usize>);

impl ClassCounts {
    pub fn new(counts: Vec<usize>) -> Result<Self> {
        if counts.is_empty() {
            return Err(Error::domain("ClassCounts::new", "no blocks"));
        }
        Ok(ClassCounts(counts))
    }

    pub fn counts(&self) -> &[usize] {
        &self.0
    }

    pub fn total(&self) -> usize {
        self.0.iter().sum()
    }
}

/// How ties in the classifier score are resolved. With a uniform draw
/// among an argmax set of size m that contains the true block, the
/// conditional misclassification probability is (m−1)/m, which at two
/// blocks is the fair coin.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum TieRule {
    #[default]
    UniformAmongArgmax,
}

fn validate_square(btilde: &[Vec<f64>], k: usize, op: &'static str) -> Result<()> {
    if btilde.len() != k {
        return Err(Error::domain(
            op,
            format!("matrix has {} rows for {k} blocks", btilde.len()),
        ));
    }
    for row in btilde {
        if row.len() != k {
            return Err(Error::domain(
                op,
                format!("matrix row has {} entries for {k} blocks", row.len()),
            ));
        }
        for &v in row {
            Probability::new(v).map_err(|_| {
                Error::domain(op, format!("matrix entry {v} is not a probability"))
            })?;
        }
    }
    Ok(())
}

fn validate_simplex(pi: &[f64], k: usize, op: &'static str) -> Result<()> {
    if pi.len() != k {
        return Err(Error::domain(
            op,
            format!("prior has {} entries for {k} blocks", pi.len()),
        ));
    }
    let mut total = 0.0;
    for &p in pi {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::domain(op, format!("prior entry {p} is not a probability")));
        }
        total += p;
    }
    if (total - 1.0).abs() > 1e-12 {
        return Err(Error::domain(op, format!("prior sums to {total}, not 1")));
    }
    Ok(())
}

/// Cost of enumerating the joint outcome space.
fn enumeration_cost(counts: &[usize]) -> u128 {
    counts.iter().map(|&n| (n as u128) + 1).product()
}

/// Compare d_a/n_a with d_b/n_b exactly by cross-multiplication.
/// Blocks with n = 0 carry score 0/0 := 0, encoded as 0/1. Floats are
/// never compared: a float tie that is not an exact rational tie would
/// silently change the tie term.
fn cmp_scores(d_a: usize, n_a: usize, d_b: usize, n_b: usize) -> std::cmp::Ordering {
    let (num_a, den_a) = if n_a == 0 { (0u64, 1u64) } else { (d_a as u64, n_a as u64) };
    let (num_b, den_b) = if n_b == 0 { (0u64, 1u64) } else { (d_b as u64, n_b as u64) };
    (num_a * den_b).cmp(&(num_b * den_a))
}

/// Misclassification weight of one joint outcome `d` when the true
/// block is `k`: 1 if some other block strictly beats block k's score,
/// (m−1)/m if block k ties the maximum within an argmax set of size m,
/// and 0 when block k wins outright.
fn misclass_weight(k: usize, d: &[usize], counts: &[usize]) -> f64 {
    let mut best = 0usize;
    let mut ties = 1usize;
    for j in 1..d.len() {
        match cmp_scores(d[j], counts[j], d[best], counts[best]) {
            std::cmp::Ordering::Greater => {
                best = j;
                ties = 1;
            }
            std::cmp::Ordering::Equal => ties += 1,
            std::cmp::Ordering::Less => {}
        }
    }
    match cmp_scores(d[k], counts[k], d[best], counts[best]) {
        std::cmp::Ordering::Less => 1.0,
        std::cmp::Ordering::Equal => (ties - 1) as f64 / ties as f64,
        std::cmp::Ordering::Greater => unreachable!("max is maximal"),
    }
}

/// Misclassification probability conditioned on the true block being
/// `k`, by exact enumeration over the joint binomial outcomes.
fn conditional_given_class(k: usize, counts: &[usize], row: &[f64]) -> f64 {
    let kk = counts.len();
    // With equal block sizes and a constant row, the K block scores are
    // exchangeable, so the true block wins with probability exactly
    // 1/K; this keeps the useless-channel case exact instead of
    // accumulating rounding from a full enumeration.
    let equal_counts = counts.iter().all(|&c| c == counts[0]);
    let constant_row = row.iter().all(|&p| p == row[0]);
    if equal_counts && constant_row {
        return (kk - 1) as f64 / kk as f64;
    }

    let tables: Vec<Vec<f64>> = (0..kk)
        .map(|j| {
            let p = Probability::new(row[j]).expect("validated entry");
            (0..=counts[j])
                .map(|d| binom_pmf(d as u64, counts[j] as u64, p).get())
                .collect()
        })
        .collect();

    let mut d = vec![0usize; kk];
    let mut acc = 0.0;
    loop {
        let mut p = 1.0;
        for j in 0..kk {
            p *= tables[j][d[j]];
        }
        if p > 0.0 {
            acc += p * misclass_weight(k, &d, counts);
        }
        // Odometer increment over the product space.
        let mut j = 0;
        loop {
            if j == kk {
                return acc;
            }
            d[j] += 1;
            if d[j] <= counts[j] {
                break;
            }
            d[j] = 0;
            j += 1;
        }
    }
}

/// Misclassification probability of the held-out vertex given the
/// per-block label counts, mixing over its true block with `pi`.
///
/// Fails with a budget error when the joint outcome space exceeds
/// [`DEFAULT_ENUM_BUDGET`]; use [`conditional_error_budgeted`] to raise
/// the ceiling, or fall back to Monte Carlo.
pub fn conditional_error(
    counts: &ClassCounts,
    btilde: &[Vec<f64>],
    pi: &[f64],
    tie: TieRule,
) -> Result<Probability> {
    conditional_error_budgeted(counts, btilde, pi, tie, DEFAULT_ENUM_BUDGET)
}

pub fn conditional_error_budgeted(
    counts: &ClassCounts,
    btilde: &[Vec<f64>],
    pi: &[f64],
    _tie: TieRule,
    budget: u64,
) -> Result<Probability> {
    let k = counts.counts().len();
    validate_square(btilde, k, "conditional_error")?;
    validate_simplex(pi, k, "conditional_error")?;
    let cost = enumeration_cost(counts.counts());
    if cost > budget as u128 {
        return Err(Error::BudgetExceeded { cost, budget });
    }
    let mut total = 0.0;
    for (kk, &pi_k) in pi.iter().enumerate() {
        if pi_k == 0.0 {
            continue;
        }
        total += pi_k * conditional_given_class(kk, counts.counts(), &btilde[kk]);
    }
    Probability::new(total)
}

/// Misclassification probability with the labeled block sizes drawn
/// multinomially: averages [`conditional_error`] over every composition
/// of n−1 labeled vertices into the K blocks, weighted by the
/// multinomial probability mass.
pub fn full_error(
    n: usize,
    btilde: &[Vec<f64>],
    pi: &[f64],
    _tie: TieRule,
    budget: u64,
) -> Result<Probability> {
    let k = btilde.len();
    if n < 2 {
        return Err(Error::domain("full_error", format!("need n >= 2, got {n}")));
    }
    validate_square(btilde, k, "full_error")?;
    validate_simplex(pi, k, "full_error")?;
    if k == 1 {
        // A single block cannot be confused with anything.
        return Ok(Probability::ZERO);
    }

    let m = n - 1;
    // First pass: total enumeration cost across all compositions.
    let mut cost: u128 = 0;
    for_each_composition(m, k, &mut |counts| {
        cost = cost.saturating_add(enumeration_cost(counts));
    });
    if cost > budget as u128 {
        return Err(Error::BudgetExceeded { cost, budget });
    }

    let ln_gamma_n = crate::special::log_gamma(n as f64).expect("n >= 2");
    let mut total = 0.0;
    for_each_composition(m, k, &mut |counts| {
        // Multinomial weight of this composition under pi; a block with
        // zero prior mass cannot receive labeled vertices.
        let mut ln_w = ln_gamma_n;
        for (j, &c) in counts.iter().enumerate() {
            if pi[j] == 0.0 {
                if c > 0 {
                    return;
                }
                continue;
            }
            ln_w += (c as f64) * pi[j].ln()
                - crate::special::log_gamma((c + 1) as f64).expect("c + 1 >= 1");
        }
        let w = ln_w.exp();
        let mut inner = 0.0;
        for (kk, &pi_k) in pi.iter().enumerate() {
            if pi_k == 0.0 {
                continue;
            }
            inner += pi_k * conditional_given_class(kk, counts, &btilde[kk]);
        }
        total += w * inner;
    });
    Probability::new(total)
}

/// Visits every composition of `total` into `parts` nonnegative counts
/// in lexicographic order.
fn for_each_composition(total: usize, parts: usize, f: &mut impl FnMut(&[usize])) {
    fn rec(
        remaining: usize,
        idx: usize,
        buf: &mut Vec<usize>,
        f: &mut impl FnMut(&[usize]),
    ) {
        if idx + 1 == buf.len() {
            buf[idx] = remaining;
            f(buf);
            return;
        }
        for c in 0..=remaining {
            buf[idx] = c;
            rec(remaining - c, idx + 1, buf, f);
        }
    }
    let mut buf = vec![0usize; parts];
    rec(total, 0, &mut buf, f);
}

/// Closed form for the balanced symmetric two-block case: both blocks
/// hold `n1` labeled vertices, within-block observed probability `b11`,
/// cross-block `b12`, uniform prior. Evaluates
///
///   Σ_{i≥1} f(i; n1, b12)·F(i−1; n1, b11) + ½·Σ_i f(i; n1, b12)·f(i; n1, b11)
///
/// in O(n1) pmf/cdf calls. Equal probabilities short-circuit to the
/// exact coin flip, which also covers the degenerate n1 = 0 case.
///
/// The sums assume the affinity orientation b11 > b12; that is where
/// they coincide with the likelihood-ratio misclassification
/// probability ([`conditional_error`] on the 2x2 symmetric model).
/// For b11 < b12 they still evaluate the same fixed-direction event,
/// which then exceeds one half.
pub fn balanced_two_block_error(n1: usize, b11: Probability, b12: Probability) -> Probability {
    if b11.get() == b12.get() || n1 == 0 {
        return Probability::HALF;
    }
    let n = n1 as u64;
    let mut strict = 0.0;
    let mut tie = 0.0;
    for i in 0..=n {
        let f12 = binom_pmf(i, n, b12).get();
        if f12 == 0.0 {
            continue;
        }
        if i >= 1 {
            strict += f12 * binom_cdf(i as i64 - 1, n, b11).get();
        }
        tie += f12 * binom_pmf(i, n, b11).get();
    }
    Probability::new(strict + 0.5 * tie).expect("convex combination of probabilities")
}

/// Large-sample normal approximation for the balanced symmetric
/// two-block case: Φ(−μ/σ) with μ = (n/2)(b11−b12) and
/// σ² = (n/2)(b11(1−b11) + b12(1−b12)).
///
/// Degenerate σ = 0 resolves to the limit: 0 when the signal is
/// positive, 1 when negative, and the coin flip when there is none.
pub fn normal_approx_error(n: usize, b11: Probability, b12: Probability) -> Probability {
    let half_n = n as f64 / 2.0;
    let (b11, b12) = (b11.get(), b12.get());
    let mu = half_n * (b11 - b12);
    let var = half_n * (b11 * (1.0 - b11) + b12 * (1.0 - b12));
    if var == 0.0 {
        return match mu.partial_cmp(&0.0).expect("mu is finite") {
            std::cmp::Ordering::Greater => Probability::ZERO,
            std::cmp::Ordering::Equal => Probability::HALF,
            std::cmp::Ordering::Less => Probability::ONE,
        };
    }
    std_normal_cdf(-mu / var.sqrt())
}
