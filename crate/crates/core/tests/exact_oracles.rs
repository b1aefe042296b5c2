//! Independent oracles for the exact misclassification computations:
//! direct joint-outcome enumeration built from a Pascal triangle,
//! Monte Carlo inversion sampling, and total enumeration of tiny
//! graphs.

use egl_core::exact::{
    balanced_two_block_error, conditional_error, full_error, ClassCounts, TieRule,
};
use egl_core::special::Probability;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Row n of Pascal's triangle in f64, built additively: exact for the
/// sizes used here (well below 2^53).
fn pascal_row(n: usize) -> Vec<f64> {
    let mut row = vec![1.0];
    for _ in 0..n {
        let mut next = vec![1.0];
        for w in row.windows(2) {
            next.push(w[0] + w[1]);
        }
        next.push(1.0);
        row = next;
    }
    row
}

fn pmf_direct(coeffs: &[f64], i: usize, n: usize, p: f64) -> f64 {
    coeffs[i] * p.powi(i as i32) * (1.0 - p).powi((n - i) as i32)
}

/// Misclassification of a balanced two-block vertex by double
/// enumeration of its within- and cross-block degrees, ties at 1/2.
fn brute_force_balanced(n1: usize, b11: f64, b12: f64) -> f64 {
    let coeffs = pascal_row(n1);
    let mut total = 0.0;
    for i in 0..=n1 {
        let f_within = pmf_direct(&coeffs, i, n1, b11);
        for j in 0..=n1 {
            let f_cross = pmf_direct(&coeffs, j, n1, b12);
            if j > i {
                total += f_cross * f_within;
            } else if j == i {
                total += 0.5 * f_cross * f_within;
            }
        }
    }
    total
}

fn random_triples(count: usize, seed: u64) -> Vec<(usize, f64, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            (
                rng.gen_range(1..=12usize),
                rng.gen::<f64>(),
                rng.gen::<f64>(),
            )
        })
        .collect()
}

#[test]
fn balanced_closed_form_matches_brute_force_enumeration() {
    for (n1, b11, b12) in random_triples(50, 0xACC4) {
        let got = balanced_two_block_error(
            n1,
            Probability::new(b11).unwrap(),
            Probability::new(b12).unwrap(),
        )
        .get();
        let want = brute_force_balanced(n1, b11, b12);
        assert!(
            (got - want).abs() <= 1e-10,
            "n1={n1} b11={b11} b12={b12}: closed form {got}, brute force {want}"
        );
    }
}

#[test]
fn balanced_closed_form_matches_general_enumeration() {
    // The general conditional enumerator walks a completely different
    // code path (odometer over joint outcomes); on balanced symmetric
    // inputs the two must agree to enumeration accuracy.
    for (n1, b11, b12) in random_triples(50, 0x5EED) {
        let counts = ClassCounts::new(vec![n1, n1]).unwrap();
        let bt = vec![vec![b11, b12], vec![b12, b11]];
        let general = conditional_error(&counts, &bt, &[0.5, 0.5], TieRule::default())
            .unwrap()
            .get();
        let closed = balanced_two_block_error(
            n1,
            Probability::new(b11).unwrap(),
            Probability::new(b12).unwrap(),
        )
        .get();
        assert!(
            (general - closed).abs() <= 1e-10,
            "n1={n1} b11={b11} b12={b12}: enumeration {general}, closed form {closed}"
        );
    }
}

/// Cross-multiplied comparison of d_a/n_a vs d_b/n_b with empty blocks
/// scoring zero, mirroring the library's tie conventions.
fn ratio_cmp(da: usize, na: usize, db: usize, nb: usize) -> std::cmp::Ordering {
    let (da, na) = if na == 0 { (0u64, 1u64) } else { (da as u64, na as u64) };
    let (db, nb) = if nb == 0 { (0u64, 1u64) } else { (db as u64, nb as u64) };
    (da * nb).cmp(&(db * na))
}

#[test]
fn conditional_enumeration_matches_inversion_sampling() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xC0FFEE);
    let counts_vec = [4usize, 3, 3];
    let draws = 250_000u32;
    for cfg in 0..8 {
        let bt: Vec<Vec<f64>> = (0..3)
            .map(|_| (0..3).map(|_| rng.gen::<f64>()).collect())
            .collect();
        let raw: Vec<f64> = (0..3).map(|_| rng.gen::<f64>() + 0.05).collect();
        let total: f64 = raw.iter().sum();
        let pi: Vec<f64> = raw.iter().map(|w| w / total).collect();

        let exact = conditional_error(
            &ClassCounts::new(counts_vec.to_vec()).unwrap(),
            &bt,
            &pi,
            TieRule::default(),
        )
        .unwrap()
        .get();

        let mut miss = 0.0f64;
        for _ in 0..draws {
            let u: f64 = rng.gen();
            let mut acc = 0.0;
            let mut y = 2;
            for (k, &p) in pi.iter().enumerate() {
                acc += p;
                if u < acc {
                    y = k;
                    break;
                }
            }
            let mut d = [0usize; 3];
            for (k, &nk) in counts_vec.iter().enumerate() {
                for _ in 0..nk {
                    if rng.gen::<f64>() < bt[y][k] {
                        d[k] += 1;
                    }
                }
            }
            let mut leaders = vec![0usize];
            for k in 1..3 {
                match ratio_cmp(d[k], counts_vec[k], d[leaders[0]], counts_vec[leaders[0]]) {
                    std::cmp::Ordering::Greater => leaders = vec![k],
                    std::cmp::Ordering::Equal => leaders.push(k),
                    std::cmp::Ordering::Less => {}
                }
            }
            if !leaders.contains(&y) {
                miss += 1.0;
            } else {
                miss += (leaders.len() - 1) as f64 / leaders.len() as f64;
            }
        }
        let estimate = miss / draws as f64;
        let se = (exact * (1.0 - exact) / draws as f64).sqrt().max(1e-6);
        assert!(
            (estimate - exact).abs() <= 4.0 * se,
            "config {cfg}: exact {exact}, sampled {estimate}, se {se}"
        );
    }
}

/// Total enumeration of the n = 3 problem: two labeled vertices with
/// independent labels, the held-out vertex's label, and both incident
/// edge indicators.
fn brute_force_full_n3(bt: &[Vec<f64>], pi: &[f64]) -> f64 {
    let mut total = 0.0;
    for l1 in 0..2 {
        for l2 in 0..2 {
            let w_labels = pi[l1] * pi[l2];
            if w_labels == 0.0 {
                continue;
            }
            for y in 0..2 {
                let w_y = pi[y];
                if w_y == 0.0 {
                    continue;
                }
                for e1 in 0..2 {
                    for e2 in 0..2 {
                        let p1 = if e1 == 1 { bt[y][l1] } else { 1.0 - bt[y][l1] };
                        let p2 = if e2 == 1 { bt[y][l2] } else { 1.0 - bt[y][l2] };
                        let w = w_labels * w_y * p1 * p2;
                        if w == 0.0 {
                            continue;
                        }
                        let mut d = [0usize; 2];
                        let mut n = [0usize; 2];
                        n[l1] += 1;
                        n[l2] += 1;
                        d[l1] += e1;
                        d[l2] += e2;
                        let ord = ratio_cmp(d[0], n[0], d[1], n[1]);
                        let miss = match ord {
                            std::cmp::Ordering::Equal => 0.5,
                            std::cmp::Ordering::Greater => {
                                if y == 0 {
                                    0.0
                                } else {
                                    1.0
                                }
                            }
                            std::cmp::Ordering::Less => {
                                if y == 1 {
                                    0.0
                                } else {
                                    1.0
                                }
                            }
                        };
                        total += w * miss;
                    }
                }
            }
        }
    }
    total
}

#[test]
fn full_error_matches_total_enumeration_at_n3() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xFEED);
    for _ in 0..20 {
        let bt: Vec<Vec<f64>> = (0..2)
            .map(|_| (0..2).map(|_| rng.gen::<f64>()).collect())
            .collect();
        let p0: f64 = rng.gen();
        let pi = vec![p0, 1.0 - p0];
        let got = full_error(3, &bt, &pi, TieRule::default(), 1 << 20)
            .unwrap()
            .get();
        let want = brute_force_full_n3(&bt, &pi);
        assert!(
            (got - want).abs() <= 1e-12,
            "bt={bt:?} pi={pi:?}: full_error {got}, brute force {want}"
        );
    }
}

#[test]
fn perfectly_separated_blocks_are_never_misclassified() {
    let counts = ClassCounts::new(vec![5, 5]).unwrap();
    let bt = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
    let err = conditional_error(&counts, &bt, &[0.5, 0.5], TieRule::default()).unwrap();
    assert_eq!(err.get(), 0.0);
}

#[test]
fn error_shrinks_as_within_block_signal_grows() {
    let b12 = Probability::new(0.2).unwrap();
    let mut prev = 1.0f64;
    for step in 0..=12 {
        let b11 = 0.3 + 0.05 * step as f64;
        let e = balanced_two_block_error(10, Probability::new(b11).unwrap(), b12).get();
        assert!(
            e <= prev + 1e-12,
            "error rose from {prev} to {e} at b11 = {b11}"
        );
        prev = e;
    }
}
