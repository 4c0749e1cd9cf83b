//! Kernel k-means landmark selection.
//!
//! Clustering runs on the squared kernel `K·Kᵀ`, whose explicit features
//! are the rows of `K`. For Nyström factors the same features are available
//! in `m` dimensions: `K̃² = Q·G·Qᵀ` with `Q = K_{N,m}·K_{m,m}⁺` and
//! `G = K_{N,m}ᵀ·K_{N,m}`, so `Q·G^{1/2}` has the right inner products.

use nalgebra::{DMatrix, DVector};
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg;
use crate::proximity::{KernelSource, NystromFactors};

pub const MAX_ITERATIONS: usize = 50;

/// Lloyd's algorithm on feature rows; returns one representative row index
/// per cluster, sorted ascending.
pub fn kmeans_representatives(features: &DMatrix<f64>, m: usize, seed: u64) -> Result<Vec<usize>> {
    let n = features.nrows();
    if m == 0 {
        return Err(Error::Empty("k-means needs at least one cluster"));
    }
    if m > n {
        return Err(Error::TooMany {
            requested: m,
            available: n,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let norms: DVector<f64> = DVector::from_fn(n, |i, _| features.row(i).norm_squared());
    let init = seed_points(features, &norms, m, &mut rng);
    let mut centers = linalg::select_rows(features, &init);
    let mut assign = vec![usize::MAX; n];

    for _ in 0..MAX_ITERATIONS {
        let next = nearest_center(features, &norms, &centers);
        if next == assign {
            break;
        }
        assign = next;
        let mut sums = DMatrix::zeros(m, features.ncols());
        let mut counts = vec![0usize; m];
        for (i, &c) in assign.iter().enumerate() {
            counts[c] += 1;
            let mut row = sums.row_mut(c);
            row += features.row(i);
        }
        for (c, &count) in counts.iter().enumerate() {
            if count > 0 {
                let mean = sums.row(c) / count as f64;
                centers.row_mut(c).copy_from(&mean);
            }
        }
    }

    // Representative: the member closest to its cluster mean. Empty
    // clusters fall back to the closest point not already chosen.
    let dist = squared_distances(features, &norms, &centers);
    let mut chosen = vec![false; n];
    let mut reps = Vec::with_capacity(m);
    let mut empty = Vec::new();
    for c in 0..m {
        let best = (0..n)
            .filter(|&i| assign[i] == c)
            .min_by(|&a, &b| dist[(a, c)].total_cmp(&dist[(b, c)]).then(a.cmp(&b)));
        match best {
            Some(i) => {
                chosen[i] = true;
                reps.push(i);
            }
            None => empty.push(c),
        }
    }
    for c in empty {
        let i = (0..n)
            .filter(|&i| !chosen[i])
            .min_by(|&a, &b| dist[(a, c)].total_cmp(&dist[(b, c)]).then(a.cmp(&b)))
            .expect("m ≤ n leaves an unchosen point");
        chosen[i] = true;
        reps.push(i);
    }
    reps.sort_unstable();
    Ok(reps)
}

/// k-means++ seeding: `m` distinct points, each drawn with probability
/// proportional to its squared distance from the points already drawn.
fn seed_points<R: Rng>(features: &DMatrix<f64>, norms: &DVector<f64>, m: usize, rng: &mut R) -> Vec<usize> {
    let n = features.nrows();
    let mut chosen = vec![rng.random_range(0..n)];
    let mut taken = vec![false; n];
    taken[chosen[0]] = true;
    let mut best = vec![f64::INFINITY; n];
    while chosen.len() < m {
        let last = *chosen.last().expect("non-empty");
        let row = features.row(last);
        for i in 0..n {
            let d = (norms[i] - 2.0 * features.row(i).dot(&row) + norms[last]).max(0.0);
            best[i] = best[i].min(d);
        }
        let total: f64 = (0..n).filter(|&i| !taken[i]).map(|i| best[i]).sum();
        let next = if total > 0.0 {
            let mut u = rng.random::<f64>() * total;
            let mut pick = None;
            for i in (0..n).filter(|&i| !taken[i]) {
                pick = Some(i);
                u -= best[i];
                if u < 0.0 {
                    break;
                }
            }
            pick.expect("an untaken point exists")
        } else {
            // All remaining points coincide with chosen ones.
            let free: Vec<usize> = (0..n).filter(|&i| !taken[i]).collect();
            free[sample(rng, free.len(), 1).index(0)]
        };
        taken[next] = true;
        chosen.push(next);
    }
    chosen
}

fn squared_distances(
    features: &DMatrix<f64>,
    norms: &DVector<f64>,
    centers: &DMatrix<f64>,
) -> DMatrix<f64> {
    let cross = features * centers.transpose();
    let cnorms: Vec<f64> = (0..centers.nrows()).map(|c| centers.row(c).norm_squared()).collect();
    DMatrix::from_fn(features.nrows(), centers.nrows(), |i, c| {
        norms[i] - 2.0 * cross[(i, c)] + cnorms[c]
    })
}

fn nearest_center(
    features: &DMatrix<f64>,
    norms: &DVector<f64>,
    centers: &DMatrix<f64>,
) -> Vec<usize> {
    let dist = squared_distances(features, norms, centers);
    (0..features.nrows())
        .map(|i| {
            let mut best = 0;
            for c in 1..centers.nrows() {
                if dist[(i, c)] < dist[(i, best)] {
                    best = c;
                }
            }
            best
        })
        .collect()
}

/// k-means landmarks on the squared kernel of a dense source (`O(N²)`
/// memory).
pub fn kmeans_on_source<S: KernelSource + ?Sized>(source: &S, m: usize, seed: u64) -> Result<Vec<usize>> {
    let idx: Vec<usize> = (0..source.len()).collect();
    let rows = source.symmetric_block(&idx);
    kmeans_representatives(&rows, m, seed)
}

/// k-means landmarks on the squared kernel of Nyström factors (`O(N·m)`
/// memory).
pub fn kmeans_on_factors(f: &NystromFactors, m: usize, seed: u64) -> Result<Vec<usize>> {
    let g = f.cross().transpose() * f.cross();
    let (vals, vecs) = linalg::sym_eigen(&g);
    let root = vecs * DMatrix::from_diagonal(&vals.map(|v| v.max(0.0).sqrt()));
    let features = f.projected() * root;
    kmeans_representatives(&features, m, seed)
}
