//! Supervised matrix similarity score.
//!
//! For a symmetric matrix `S` and labels, the class-margin statistic is
//! `f(S) = Σ_y |mean within class y − mean between y and the rest|`, where
//! the within-class mean runs over pairs `i ≠ j`. The score of an
//! approximation `K̂` of `K` is `f(K̂)/f(K)`.

use crate::error::{Error, Result};
use crate::linalg;
use crate::proximity::source::classes_of;
use crate::proximity::{KernelSource, NystromFactors};

fn class_members(labels: &[i64]) -> Result<Vec<(i64, Vec<usize>)>> {
    let classes = classes_of(labels);
    if classes.len() < 2 {
        return Err(Error::SingleClass);
    }
    classes
        .into_iter()
        .map(|c| {
            let idx: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == c).collect();
            if idx.len() < 2 {
                return Err(Error::ClassTooSmall {
                    class: c,
                    count: idx.len(),
                    required: 2,
                });
            }
            Ok((c, idx))
        })
        .collect()
}

fn statistic(
    n: usize,
    members: &[(i64, Vec<usize>)],
    mut block_sum: impl FnMut(&[usize]) -> (f64, f64, f64),
) -> f64 {
    // block_sum(class) returns (sum over class×class, trace over class,
    // sum over class×all).
    members
        .iter()
        .map(|(_, idx)| {
            let nc = idx.len() as f64;
            let (within, trace, row_total) = block_sum(idx);
            let within_mean = (within - trace) / (nc * (nc - 1.0));
            let between_mean = (row_total - within) / (nc * (n as f64 - nc));
            (within_mean - between_mean).abs()
        })
        .sum()
}

/// `f(S)` read entry by entry from any kernel source, `O(N²)`.
pub fn margin_statistic<S: KernelSource + ?Sized>(s: &S, labels: &[i64]) -> Result<f64> {
    check_len(s.len(), labels.len())?;
    let members = class_members(labels)?;
    let n = s.len();
    // Row sums over each class, accumulated in one pass over the matrix.
    let class_pos: Vec<usize> = {
        let mut pos = vec![0; n];
        for (k, (_, idx)) in members.iter().enumerate() {
            for &i in idx {
                pos[i] = k;
            }
        }
        pos
    };
    let nc = members.len();
    let mut sums = vec![vec![0.0; nc]; nc];
    let mut traces = vec![0.0; nc];
    for i in 0..n {
        traces[class_pos[i]] += s.entry(i, i);
        for j in 0..n {
            sums[class_pos[i]][class_pos[j]] += s.entry(i, j);
        }
    }
    let mut k = 0;
    Ok(statistic(n, &members, |_| {
        let within = sums[k][k];
        let row_total: f64 = sums[k].iter().sum();
        let out = (within, traces[k], row_total);
        k += 1;
        out
    }))
}

/// `f(K̃)` through the factors in `O(N·m)`.
pub fn margin_statistic_factored(f: &NystromFactors, labels: &[i64]) -> Result<f64> {
    check_len(f.n(), labels.len())?;
    let members = class_members(labels)?;
    let total = f.cross().row_sum().transpose();
    Ok(statistic(f.n(), &members, |idx| {
        let s = linalg::sum_rows(f.cross(), idx.iter().copied());
        let ps = f.landmark_block_pinv() * &s;
        let within = s.dot(&ps);
        let row_total = total.dot(&ps);
        let trace: f64 = idx.iter().map(|&i| f.entry(i, i)).sum();
        (within, trace, row_total)
    }))
}

/// Supervised similarity score `f(K̃)/f(K)`.
pub fn smss<S: KernelSource + ?Sized>(approx: &NystromFactors, original: &S, labels: &[i64]) -> Result<f64> {
    check_len(original.len(), approx.n())?;
    let reference = margin_statistic(original, labels)?;
    if reference == 0.0 || !reference.is_finite() {
        return Err(Error::DegenerateMargin);
    }
    Ok(margin_statistic_factored(approx, labels)? / reference)
}

fn check_len(expected: usize, actual: usize) -> Result<()> {
    if expected != actual {
        return Err(Error::DimensionMismatch { expected, actual });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::proximity::SimilarityMatrix;
    use nalgebra::DMatrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn block_matrix(labels: &[i64], within: f64, between: f64) -> SimilarityMatrix {
        let n = labels.len();
        SimilarityMatrix::new(DMatrix::from_fn(n, n, |i, j| {
            if labels[i] == labels[j] {
                within
            } else {
                between
            }
        }))
        .unwrap()
    }

    #[test]
    fn half_margin_gives_half_score() {
        let labels = [0, 0, 0, 1, 1, 1];
        let k = block_matrix(&labels, 1.0, 0.0);
        let approx = block_matrix(&labels, 1.0, 0.5);
        // Rank two: one landmark per class reproduces it exactly.
        let f = NystromFactors::from_source(&approx, &[0, 3]).unwrap();
        assert!((smss(&f, &k, &labels).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn multiclass_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let labels: Vec<i64> = (0..12).map(|i| i % 3).collect();
        let mut m = DMatrix::from_fn(12, 12, |_, _| rng.random_range(-1.0..1.0));
        m = &m + m.transpose();
        let k = SimilarityMatrix::new(m.clone()).unwrap();
        let mut expected = 0.0;
        for y in 0..3 {
            let (mut w, mut nw, mut b, mut nb) = (0.0, 0.0, 0.0, 0.0);
            for i in 0..12 {
                for j in 0..12 {
                    if labels[i] != y {
                        continue;
                    }
                    if labels[j] == y && i != j {
                        w += m[(i, j)];
                        nw += 1.0;
                    } else if labels[j] != y {
                        b += m[(i, j)];
                        nb += 1.0;
                    }
                }
            }
            expected += (w / nw - b / nb).abs();
        }
        let got = margin_statistic(&k, &labels).unwrap();
        assert!((got - expected).abs() < 1e-12);
        let all: Vec<usize> = (0..12).collect();
        let f = NystromFactors::from_source(&k, &all).unwrap();
        assert!((margin_statistic_factored(&f, &labels).unwrap() - expected).abs() < 1e-9);
    }

    #[test]
    fn identity_score_and_degenerate_margin() {
        let labels = [0, 0, 1, 1];
        let flat = block_matrix(&labels, 1.0, 1.0);
        let f = NystromFactors::from_source(&flat, &[0]).unwrap();
        assert!(matches!(smss(&f, &flat, &labels), Err(Error::DegenerateMargin)));
        let k = block_matrix(&labels, 2.0, 0.5);
        let f = NystromFactors::from_source(&k, &[0, 2]).unwrap();
        assert!((smss(&f, &k, &labels).unwrap() - 1.0).abs() < 1e-12);
        assert!(matches!(margin_statistic(&k, &[0, 0, 0, 0]), Err(Error::SingleClass)));
    }
}
