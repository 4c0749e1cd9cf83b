//! Minimum enclosing ball core sets in kernel feature space.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg;
use crate::proximity::{KernelSource, SimilarityMatrix, Subset};

pub const DEFAULT_EPSILON: f64 = 0.01;

/// Dual weights at or below this value do not count as core points.
pub const CORE_WEIGHT_THRESHOLD: f64 = 1e-8;

const DUAL_GAP_TOL: f64 = 1e-9;
const MAX_FW_STEPS: usize = 200_000;

/// Approximate minimum enclosing ball of a point set given by its kernel.
#[derive(Debug, Clone, PartialEq)]
pub struct MebSolution {
    /// Indices into the kernel passed to [`meb_coreset`], ascending.
    pub core_set: Vec<usize>,
    /// Simplex weights aligned with `core_set`.
    pub dual_weights: Vec<f64>,
    pub radius: f64,
    pub epsilon: f64,
    /// Points added by the outer loop (including the initial pair).
    pub iterations: usize,
}

/// Iteration cap `⌈2/ε²⌉` of the core-set loop.
pub fn iteration_cap(epsilon: f64) -> usize {
    (2.0 / (epsilon * epsilon)).ceil() as usize
}

/// Dual MEB on a small working set:
/// minimize `αᵀQα − αᵀd` over the simplex by away-step Frank–Wolfe with
/// exact line search, starting from `alpha`.
struct DualSolver {
    q: Vec<Vec<f64>>,
    d: Vec<f64>,
    alpha: Vec<f64>,
    q_alpha: Vec<f64>,
}

impl DualSolver {
    fn new(q: [[f64; 2]; 2], d: [f64; 2]) -> Self {
        let mut s = Self {
            q: q.iter().map(|r| r.to_vec()).collect(),
            d: d.to_vec(),
            alpha: vec![0.5, 0.5],
            q_alpha: vec![0.0; 2],
        };
        s.refresh();
        s
    }

    fn refresh(&mut self) {
        let n = self.alpha.len();
        for i in 0..n {
            self.q_alpha[i] = (0..n).map(|j| self.q[i][j] * self.alpha[j]).sum();
        }
    }

    /// Appends a point with weight zero; `column[j] = k(new, s_j)` for the
    /// existing members, followed by `k(new, new)`.
    fn push(&mut self, column: &[f64]) {
        let n = self.alpha.len();
        debug_assert_eq!(column.len(), n + 1);
        for (i, row) in self.q.iter_mut().enumerate() {
            row.push(column[i]);
        }
        self.q.push(column.to_vec());
        self.d.push(column[n]);
        self.alpha.push(0.0);
        let new_qa = (0..n).map(|j| column[j] * self.alpha[j]).sum();
        self.q_alpha.push(new_qa);
    }

    fn quad(&self) -> f64 {
        self.alpha.iter().zip(&self.q_alpha).map(|(a, b)| a * b).sum()
    }

    /// Squared radius `αᵀd − αᵀQα` at the current weights.
    fn radius_sq(&self) -> f64 {
        let lin: f64 = self.alpha.iter().zip(&self.d).map(|(a, b)| a * b).sum();
        lin - self.quad()
    }

    fn solve(&mut self, tol: f64) {
        let n = self.alpha.len();
        for step in 0..MAX_FW_STEPS {
            if step % 64 == 63 {
                // Incremental updates drift; resync occasionally.
                self.refresh();
            }
            let grad: Vec<f64> = (0..n).map(|i| 2.0 * self.q_alpha[i] - self.d[i]).collect();
            let g_alpha: f64 = grad.iter().zip(&self.alpha).map(|(g, a)| g * a).sum();
            let s = argmin(&grad);
            let v = (0..n)
                .filter(|&i| self.alpha[i] > 0.0)
                .max_by(|&a, &b| grad[a].total_cmp(&grad[b]).then(b.cmp(&a)))
                .expect("simplex weights sum to one");
            let gap_fw = g_alpha - grad[s];
            let gap_away = grad[v] - g_alpha;
            if gap_fw <= tol {
                break;
            }
            let qa2 = self.quad();
            if gap_fw >= gap_away {
                // d = e_s − α.
                let curv = self.q[s][s] - 2.0 * self.q_alpha[s] + qa2;
                let gamma = line_search(gap_fw, curv, 1.0);
                for i in 0..n {
                    self.alpha[i] *= 1.0 - gamma;
                    self.q_alpha[i] = (1.0 - gamma) * self.q_alpha[i] + gamma * self.q[i][s];
                }
                self.alpha[s] += gamma;
            } else {
                // d = α − e_v.
                let av = self.alpha[v];
                let gamma_max = av / (1.0 - av);
                let curv = qa2 - 2.0 * self.q_alpha[v] + self.q[v][v];
                let gamma = line_search(gap_away, curv, gamma_max);
                for i in 0..n {
                    self.alpha[i] *= 1.0 + gamma;
                    self.q_alpha[i] = (1.0 + gamma) * self.q_alpha[i] - gamma * self.q[i][v];
                }
                self.alpha[v] -= gamma;
                if gamma >= gamma_max {
                    self.alpha[v] = 0.0;
                }
            }
            for a in self.alpha.iter_mut() {
                if *a < 0.0 {
                    *a = 0.0;
                }
            }
            let total: f64 = self.alpha.iter().sum();
            for a in self.alpha.iter_mut() {
                *a /= total;
            }
        }
        self.refresh();
    }
}

/// Exact minimizer along a direction with descent `slope > 0` and
/// `curv = dᵀQd`, clamped to `[0, gamma_max]`.
fn line_search(slope: f64, curv: f64, gamma_max: f64) -> f64 {
    if curv <= 0.0 {
        gamma_max
    } else {
        (slope / (2.0 * curv)).clamp(0.0, gamma_max)
    }
}

fn argmin(v: &[f64]) -> usize {
    let mut best = 0;
    for i in 1..v.len() {
        if v[i] < v[best] {
            best = i;
        }
    }
    best
}

/// `(1+ε)`-approximate MEB of the points behind a psd kernel.
///
/// Feature-space distances are read only through kernel values, so the
/// kernel must be positive semi-definite; a negative squared distance
/// yields [`Error::NotPsd`].
pub fn meb_coreset<S: KernelSource + ?Sized>(
    kernel: &S,
    epsilon: f64,
    seed: u64,
) -> Result<MebSolution> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    meb_coreset_with_rng(kernel, epsilon, &mut rng)
}

pub fn meb_coreset_with_rng<S: KernelSource + ?Sized, R: Rng>(
    kernel: &S,
    epsilon: f64,
    rng: &mut R,
) -> Result<MebSolution> {
    let n = kernel.len();
    if n < 2 {
        return Err(Error::TooMany {
            requested: 2,
            available: n,
        });
    }
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "MEB epsilon must be positive, got {epsilon}"
        )));
    }
    let diag: Vec<f64> = (0..n).map(|i| kernel.entry(i, i)).collect();
    let scale = diag.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
    let neg_tol = 1e-9 * scale;
    let abs_tol = 1e-12 * scale;

    // Columns k(·, s) for every member s of the working set.
    let mut columns: Vec<Vec<f64>> = Vec::new();
    let column = |s: usize| -> Vec<f64> { (0..n).map(|i| kernel.entry(i, s)).collect() };

    let first = rng.random_range(0..n);
    let col_first = column(first);
    let mut second = None;
    let mut best = f64::NEG_INFINITY;
    for i in 0..n {
        if i == first {
            continue;
        }
        let d2 = diag[i] + diag[first] - 2.0 * col_first[i];
        if d2 < -neg_tol {
            return Err(Error::NotPsd { value: d2 });
        }
        if d2 > best {
            best = d2;
            second = Some(i);
        }
    }
    let second = second.expect("n ≥ 2");
    let col_second = column(second);
    let mut members = vec![first, second];
    let k01 = col_first[second];
    let mut solver = DualSolver::new(
        [[diag[first], k01], [k01, diag[second]]],
        [diag[first], diag[second]],
    );
    columns.push(col_first);
    columns.push(col_second);

    let cap = iteration_cap(epsilon);
    let gap_tol = DUAL_GAP_TOL * scale;
    let mut iterations = 2;
    let r2 = loop {
        solver.solve(gap_tol);
        let r2 = solver.radius_sq().max(0.0);
        let center_sq = solver.quad();
        let mut far = None;
        let mut far_d2 = f64::NEG_INFINITY;
        for i in 0..n {
            let mut dot = 0.0;
            for (c, a) in columns.iter().zip(&solver.alpha) {
                dot += a * c[i];
            }
            let d2 = diag[i] - 2.0 * dot + center_sq;
            if d2 < -neg_tol {
                return Err(Error::NotPsd { value: d2 });
            }
            if d2 > far_d2 {
                far_d2 = d2;
                far = Some(i);
            }
        }
        let bound = r2 * (1.0 + epsilon).powi(2) + abs_tol;
        if far_d2 <= bound || iterations >= cap {
            break r2;
        }
        let p = far.expect("n ≥ 2");
        if members.contains(&p) {
            // Only possible when the dual is not yet converged to tolerance.
            break r2;
        }
        let col = column(p);
        let mut entry: Vec<f64> = members.iter().map(|&s| col[s]).collect();
        entry.push(diag[p]);
        solver.push(&entry);
        members.push(p);
        columns.push(col);
        iterations += 1;
    };

    let mut pairs: Vec<(usize, f64)> = members
        .iter()
        .zip(&solver.alpha)
        .filter(|(_, &a)| a > CORE_WEIGHT_THRESHOLD)
        .map(|(&i, &a)| (i, a))
        .collect();
    if pairs.len() < 2 {
        // Degenerate ball (e.g. identical points): keep the initial pair.
        for &m in &members {
            if pairs.len() >= 2 {
                break;
            }
            if !pairs.iter().any(|&(i, _)| i == m) {
                pairs.push((m, 0.0));
            }
        }
    }
    pairs.sort_by_key(|&(i, _)| i);
    let total: f64 = pairs.iter().map(|&(_, a)| a).sum();
    let dual_weights = if total > 0.0 {
        pairs.iter().map(|&(_, a)| a / total).collect()
    } else {
        vec![1.0 / pairs.len() as f64; pairs.len()]
    };
    Ok(MebSolution {
        core_set: pairs.iter().map(|&(i, _)| i).collect(),
        dual_weights,
        radius: r2.sqrt(),
        epsilon,
        iterations,
    })
}

/// Squared feature-space distance of every point to the center of `sol`.
pub fn center_distances_sq<S: KernelSource + ?Sized>(kernel: &S, sol: &MebSolution) -> Vec<f64> {
    let c = &sol.core_set;
    let a = &sol.dual_weights;
    let mut center_sq = 0.0;
    for (x, ax) in c.iter().zip(a) {
        for (y, ay) in c.iter().zip(a) {
            center_sq += ax * ay * kernel.entry(*x, *y);
        }
    }
    (0..kernel.len())
        .map(|i| {
            let dot: f64 = c.iter().zip(a).map(|(&s, w)| w * kernel.entry(i, s)).sum();
            kernel.entry(i, i) - 2.0 * dot + center_sq
        })
        .collect()
}

/// Whether a dense class block has an eigenvalue below `−1e-10·max|λ|`.
pub fn is_indefinite(block: &DMatrix<f64>) -> bool {
    let (vals, _) = linalg::sym_eigen(block);
    let max = vals.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    vals.iter().any(|&v| v < -1e-10 * max)
}

/// Per-class MEB result in global indices.
#[derive(Debug, Clone)]
pub struct ClassCoreSet {
    pub class: i64,
    pub indices: Vec<usize>,
    pub squared: bool,
    pub solution: MebSolution,
}

/// Runs the MEB core-set algorithm on each class separately.
///
/// A class block is squared first when the source is not known to be psd
/// and the block has a significantly negative eigenvalue, or always when
/// `force_square` is set.
pub fn classwise_coresets<S: KernelSource + ?Sized>(
    source: &S,
    labels: &[i64],
    epsilon: f64,
    seed: u64,
    force_square: bool,
) -> Result<Vec<ClassCoreSet>> {
    if labels.len() != source.len() {
        return Err(Error::DimensionMismatch {
            expected: source.len(),
            actual: labels.len(),
        });
    }
    let classes = crate::proximity::source::classes_of(labels);
    classes
        .par_iter()
        .map(|&class| {
            let idx: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
            if idx.len() < 2 {
                return Err(Error::ClassTooSmall {
                    class,
                    count: idx.len(),
                    required: 2,
                });
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(class as u64);
            let (solution, squared) = if source.known_psd() && !force_square {
                let view = Subset::new(source, idx.clone())?;
                (meb_coreset_with_rng(&view, epsilon, &mut rng)?, false)
            } else {
                let block = source.symmetric_block(&idx);
                let squared = force_square || is_indefinite(&block);
                let mut k = if squared { &block * block.transpose() } else { block };
                linalg::symmetrize(&mut k);
                let k = SimilarityMatrix::new(k)?;
                (meb_coreset_with_rng(&k, epsilon, &mut rng)?, squared)
            };
            let indices = solution.core_set.iter().map(|&i| idx[i]).collect();
            Ok(ClassCoreSet {
                class,
                indices,
                squared,
                solution,
            })
        })
        .collect()
}
