//! Acceptance suite. Runs every criterion in sequence (timings are not
//! disturbed by sibling tests), prints one PASS/FAIL line each and exits
//! non-zero if any criterion fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use nalgebra::{DMatrix, SymmetricEigen};
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use nykernel::classifiers::pcvm::{train_ny_pcvm_observed, train_pcvm_full_observed, PcvmIteration};
use nykernel::classifiers::probit::psi;
use nykernel::classifiers::{ClassifierKind, TrainConfig};
use nykernel::harness::{
    crossval, scaling_bench, CvReport, DatasetSpec, ExperimentSpec, Generator, LandmarkCount,
    Selector,
};
use nykernel::harness::datasets::gen_gauss_overlap;
use nykernel::landmarks::meb::center_distances_sq;
use nykernel::landmarks::{meb_coreset, smss};
use nykernel::lowrank::{nystrom_evd, nystrom_pinv};
use nykernel::proximity::io::{save_kernel, save_labels, KernelFormat};
use nykernel::proximity::{DataSource, KernelFunction, NystromFactors, SimilarityMatrix};
use nykernel::testutil::{indefinite_low_rank, random_psd};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn max_abs(a: &DMatrix<f64>) -> f64 {
    a.iter().fold(0.0, |m, v| m.max(v.abs()))
}

fn rel_frobenius(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).norm() / b.norm()
}

/// Signature (10,0) on even trials, (7,3) on odd ones.
fn rank10_instances() -> Vec<(SimilarityMatrix, Vec<usize>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(0xacce_0001);
    (0..20)
        .map(|t| {
            let (p, q) = if t % 2 == 0 { (10, 0) } else { (7, 3) };
            let k = indefinite_low_rank(&mut rng, 200, p, q);
            let lm = sample(&mut rng, 200, 10).into_vec();
            (k, lm)
        })
        .collect()
}

fn nystrom_exactness() -> Outcome {
    let start = Instant::now();
    let mut worst = 0.0f64;
    for (k, lm) in rank10_instances() {
        let f = NystromFactors::from_source(&k, &lm).map_err(|e| e.to_string())?;
        worst = worst.max(rel_frobenius(f.reconstruct().matrix(), k.matrix()));
    }
    let secs = start.elapsed().as_secs_f64();
    check(
        worst <= 1e-8 && secs < 5.0,
        format!("worst relative error {worst:.2e} (<= 1e-8), {secs:.2}s (< 5s)"),
    )
}

fn lowrank_evd_matches_dense() -> Outcome {
    let mut worst = 0.0f64;
    let mut signatures_ok = true;
    for (t, (k, lm)) in rank10_instances().into_iter().enumerate() {
        let f = NystromFactors::from_source(&k, &lm).map_err(|e| e.to_string())?;
        let evd = nystrom_evd(&f).map_err(|e| e.to_string())?;
        let mut dense: Vec<f64> = SymmetricEigen::new(k.matrix().clone()).eigenvalues.iter().copied().collect();
        dense.sort_by(|a, b| b.abs().total_cmp(&a.abs()));
        let mut low: Vec<f64> = evd.eigvals.iter().copied().collect();
        low.sort_by(|a, b| b.abs().total_cmp(&a.abs()));
        // Eigenvalues missing from the factored spectrum count as zero.
        for (i, d) in dense.iter().enumerate() {
            worst = worst.max((d - low.get(i).copied().unwrap_or(0.0)).abs());
        }
        let expected = if t % 2 == 0 { (10, 0) } else { (7, 3) };
        signatures_ok &= evd.signature() == expected;
    }
    check(
        worst <= 1e-7 && signatures_ok,
        format!("max eigenvalue deviation {worst:.2e} (<= 1e-7), signatures preserved: {signatures_ok}"),
    )
}

fn nystrom_pseudo_inverse() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0xacce_0003);
    let mut worst = 0.0f64;
    for t in 0..20 {
        let n = [60, 120, 200][t % 3];
        let (p, q) = [(6, 0), (4, 3), (3, 2), (8, 1)][t % 4];
        let rank = p + q;
        let k = indefinite_low_rank(&mut rng, n, p, q);
        // Every other instance has more landmarks than the rank, so the
        // landmark block itself is singular.
        let m = if t % 2 == 0 { rank } else { rank + 5 };
        let lm = sample(&mut rng, n, m).into_vec();
        let f = NystromFactors::from_source(&k, &lm).map_err(|e| e.to_string())?;
        let kt = f.reconstruct().into_matrix();
        let pinv = nystrom_pinv(&f).map_err(|e| e.to_string())?.reconstruct();
        worst = worst.max(max_abs(&(&kt * &pinv * &kt - &kt)));
        worst = worst.max(max_abs(&(&pinv * &kt * &pinv - &pinv)));
    }
    let mut full_dev = 0.0f64;
    for _ in 0..5 {
        let k = random_psd(&mut rng, 80, 80, 0.5);
        let f = NystromFactors::from_source(&k, &(0..80).collect::<Vec<_>>()).map_err(|e| e.to_string())?;
        let pinv = nystrom_pinv(&f).map_err(|e| e.to_string())?.reconstruct();
        let oracle = k.matrix().clone().pseudo_inverse(1e-12).map_err(|e| e.to_string())?;
        full_dev = full_dev.max(max_abs(&(pinv - oracle)));
    }
    check(
        worst <= 1e-6 && full_dev <= 1e-6,
        format!("Penrose residual {worst:.2e} (<= 1e-6), full-rank vs dense {full_dev:.2e} (<= 1e-6)"),
    )
}

/// Exact smallest enclosing circle (randomized incremental algorithm).
fn exact_meb_2d(pts: &[[f64; 2]], rng: &mut ChaCha8Rng) -> ([f64; 2], f64) {
    let mut p = pts.to_vec();
    for i in (1..p.len()).rev() {
        p.swap(i, rng.random_range(0..=i));
    }
    let dist = |a: [f64; 2], b: [f64; 2]| ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt();
    let inside = |c: [f64; 2], r: f64, x: [f64; 2]| dist(c, x) <= r * (1.0 + 1e-12) + 1e-15;
    let circum = |a: [f64; 2], b: [f64; 2], c: [f64; 2]| {
        let (bx, by) = (b[0] - a[0], b[1] - a[1]);
        let (cx, cy) = (c[0] - a[0], c[1] - a[1]);
        let d = 2.0 * (bx * cy - by * cx);
        let b2 = bx * bx + by * by;
        let c2 = cx * cx + cy * cy;
        let ux = (cy * b2 - by * c2) / d;
        let uy = (bx * c2 - cx * b2) / d;
        let center = [a[0] + ux, a[1] + uy];
        (center, dist(center, a))
    };
    let (mut c, mut r) = (p[0], 0.0);
    for i in 1..p.len() {
        if inside(c, r, p[i]) {
            continue;
        }
        (c, r) = (p[i], 0.0);
        for j in 0..i {
            if inside(c, r, p[j]) {
                continue;
            }
            c = [(p[i][0] + p[j][0]) / 2.0, (p[i][1] + p[j][1]) / 2.0];
            r = dist(c, p[i]);
            for k in 0..j {
                if !inside(c, r, p[k]) {
                    (c, r) = circum(p[i], p[j], p[k]);
                }
            }
        }
    }
    (c, r)
}

fn meb_quality() -> Outcome {
    let eps = 0.01;
    let mut rng = ChaCha8Rng::seed_from_u64(0xacce_0004);
    let (mut worst_cover, mut worst_ratio, mut largest_core) = (0.0f64, 0.0f64, 0usize);
    for t in 0..50 {
        let n = rng.random_range(10..=300);
        let pts: Vec<[f64; 2]> = (0..n)
            .map(|_| {
                if t % 2 == 0 {
                    [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)]
                } else {
                    [rng.random_range(0.0..4.0), rng.random_range(0.0..1.0)]
                }
            })
            .collect();
        let (_, r_opt) = exact_meb_2d(&pts, &mut rng);
        let src = DataSource::vectors(pts.iter().map(|p| p.to_vec()).collect(), KernelFunction::Linear);
        let sol = meb_coreset(&src, eps, t as u64).map_err(|e| e.to_string())?;
        let far = center_distances_sq(&src, &sol).into_iter().fold(0.0f64, f64::max).sqrt();
        worst_cover = worst_cover.max(far / (sol.radius * (1.0 + eps)));
        worst_ratio = worst_ratio.max(sol.radius / r_opt);
        largest_core = largest_core.max(sol.core_set.len());
    }
    check(
        worst_cover <= 1.0 && worst_ratio <= 1.0 + eps && largest_core <= 40,
        format!(
            "max distance / R(1+eps) = {worst_cover:.4} (<= 1), max R/R_opt = {worst_ratio:.4} (<= 1.01), \
             largest core set {largest_core} (<= 40)"
        ),
    )
}

fn generated(gen: Generator, n: usize, seed: u64, kind: ClassifierKind, selector: Selector) -> ExperimentSpec {
    let mut spec = ExperimentSpec::new(DatasetSpec::Generated { generator: gen, n, seed }, kind, selector);
    spec.seed = seed;
    spec.train.rng_seed = seed;
    spec
}

fn run(spec: &ExperimentSpec) -> Result<CvReport, String> {
    crossval(spec).map_err(|e| {
        let mut msg = format!("{}: {e}", spec.classifier);
        let mut src = std::error::Error::source(&e);
        while let Some(inner) = src {
            msg.push_str(&format!(": {inner}"));
            src = inner.source();
        }
        msg
    })
}

fn ball_experiment() -> Outcome {
    let start = Instant::now();
    let n = Generator::Ball.default_n();
    let full = run(&generated(Generator::Ball, n, 1, ClassifierKind::Ikfd, Selector::All))?;
    let ny = run(&generated(
        Generator::Ball,
        n,
        1,
        ClassifierKind::NyIkfd,
        Selector::Meb { epsilon: 0.01 },
    ))?;
    let smss = ny.mean_smss.unwrap_or(f64::NAN);
    let lm = ny.mean_landmarks.unwrap_or(f64::NAN);
    let secs = start.elapsed().as_secs_f64();
    check(
        full.mean_accuracy == 100.0 && ny.mean_accuracy >= 82.3 && smss >= 0.9 && (4.0..=16.0).contains(&lm) && secs < 60.0,
        format!(
            "full iKFD {:.2}% (= 100), MEB Ny-iKFD {:.2}% (>= 82.3), SMSS {smss:.3} (>= 0.9), \
             landmarks {lm:.1} (in [4, 16]), {secs:.1}s (< 60s)",
            full.mean_accuracy, ny.mean_accuracy
        ),
    )
}

fn magnification_experiment() -> Outcome {
    let n = Generator::Magnification.default_n();
    let (mut meb, mut km) = (0.0, 0.0);
    for seed in 0..10 {
        let a = run(&generated(
            Generator::Magnification,
            n,
            seed,
            ClassifierKind::NyIkfd,
            Selector::Meb { epsilon: 0.01 },
        ))?;
        let b = run(&generated(
            Generator::Magnification,
            n,
            seed,
            ClassifierKind::NyIkfd,
            Selector::Kmeans(LandmarkCount::MatchMeb(0.01)),
        ))?;
        meb += a.mean_accuracy / 10.0;
        km += b.mean_accuracy / 10.0;
    }
    check(
        meb >= 95.0 && km <= 92.0 && meb > km,
        format!("MEB landmarks {meb:.2}% (>= 95), k-means landmarks {km:.2}% (<= 92)"),
    )
}

fn pe_gaussians_experiment() -> Outcome {
    let n = Generator::PeGaussians.default_n();
    let (mut full, mut ny) = (0.0, 0.0);
    for seed in 0..10 {
        full += run(&generated(Generator::PeGaussians, n, seed, ClassifierKind::Ikfd, Selector::All))?.mean_accuracy
            / 10.0;
        ny += run(&generated(
            Generator::PeGaussians,
            n,
            seed,
            ClassifierKind::NyIkfd,
            Selector::Meb { epsilon: 0.01 },
        ))?
        .mean_accuracy
            / 10.0;
    }
    check(
        (88.5..=98.5).contains(&full) && (ny - full).abs() <= 6.0,
        format!("full iKFD {full:.2}% (in [88.5, 98.5]), Ny-iKFD {ny:.2}% (within 6 points)"),
    )
}

fn smss_identity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0xacce_0008);
    let mut worst = 0.0f64;
    for t in 0..10 {
        let n = 80;
        let (k, lm) = if t % 2 == 0 {
            (random_psd(&mut rng, n, n, 0.1), (0..n).collect::<Vec<_>>())
        } else {
            // Rank 8: eight generic landmarks already give full-rank factors.
            (indefinite_low_rank(&mut rng, n, 5, 3), sample(&mut rng, n, 8).into_vec())
        };
        let labels: Vec<i64> = (0..n).map(|i| (i % 2) as i64 + if i % 7 == 0 { 2 } else { 0 }).collect();
        let f = NystromFactors::from_source(&k, &lm).map_err(|e| e.to_string())?;
        let s = smss(&f, &k, &labels).map_err(|e| e.to_string())?;
        worst = worst.max((s - 1.0).abs());
    }
    check(worst <= 1e-9, format!("max |smss - 1| = {worst:.2e} (<= 1e-9)"))
}

fn pcvm_properties() -> Outcome {
    let mut violations = 0usize;
    let mut runs = 0usize;
    let mut emptied = 0usize;
    let mut retained = Vec::new();
    for seed in 0..10u64 {
        let data = gen_gauss_overlap(200, seed).map_err(|e| e.to_string())?;
        let y = data.binary_labels(1);
        let cfg = TrainConfig {
            rng_seed: seed,
            ..TrainConfig::default()
        };
        let mut observe = |it: &PcvmIteration| {
            for ((&i, &w), &yl) in it.active.iter().zip(it.weights).zip(it.basis_labels) {
                // Signed weight is yl·w; the constraint y_i·w_i >= 0.
                if !(w >= 0.0 && yl == y[i] && y[i] * (yl * w) >= 0.0) {
                    violations += 1;
                }
            }
        };
        let k = data.source.to_similarity();
        // A run may legitimately end with every weight pruned; the
        // iterations up to that point still count as observations.
        let mut finish = |r: nykernel::Result<_>| match r {
            Ok(_) => Ok(()),
            Err(nykernel::Error::AllWeightsPruned { .. }) => {
                emptied += 1;
                Ok(())
            }
            Err(e) => Err(e.to_string()),
        };
        let dense = train_pcvm_full_observed(k.matrix(), &y, &cfg, &mut observe);
        if let Ok(model) = &dense {
            retained.push(100.0 * model.active.len() as f64 / y.len() as f64);
        }
        finish(dense.map(|_| ()))?;
        let lm: Vec<usize> = sample(&mut ChaCha8Rng::seed_from_u64(seed), 200, 40).into_vec();
        let f = NystromFactors::from_source(&data.source, &lm).map_err(|e| e.to_string())?;
        finish(train_ny_pcvm_observed(&f, &y, &cfg, &mut observe).map(|_| ()))?;
        runs += 2;
    }
    let psi0 = psi(0.0);

    // Lockstep needs the exact Υ solve, i.e. fewer objects than the
    // small-problem cutoff; above it Υ is itself Nyström-approximated.
    let n = 80;
    let cfg = TrainConfig {
        max_iters: 3,
        ..TrainConfig::default()
    };
    assert!(n < cfg.small_problem_cutoff);
    let data = gen_gauss_overlap(n, 5).map_err(|e| e.to_string())?;
    let y = data.binary_labels(1);
    let k = data.source.to_similarity();
    let f = NystromFactors::from_source(&k, &(0..n).collect::<Vec<_>>()).map_err(|e| e.to_string())?;
    let mut dense = Vec::new();
    train_pcvm_full_observed(k.matrix(), &y, &cfg, &mut |it| {
        dense.push((it.active.to_vec(), it.weights.to_vec()))
    })
    .map_err(|e| e.to_string())?;
    let mut ny = Vec::new();
    train_ny_pcvm_observed(&f, &y, &cfg, &mut |it| ny.push((it.active.to_vec(), it.weights.to_vec())))
        .map_err(|e| e.to_string())?;
    let mut lockstep = 0.0f64;
    let mut same_active = dense.len() == 3 && ny.len() == 3;
    for ((ad, wd), (an, wn)) in dense.iter().zip(&ny) {
        same_active &= ad == an;
        for (a, b) in wd.iter().zip(wn) {
            lockstep = lockstep.max((a - b).abs());
        }
    }

    let mean_retained = retained.iter().sum::<f64>() / retained.len() as f64;
    check(
        violations == 0 && psi0 == 0.5 && same_active && lockstep <= 1e-4 && mean_retained <= 20.0,
        format!(
            "sign violations {violations} over {runs} runs ({emptied} ended fully pruned), psi(0) = {psi0}, lockstep deviation {lockstep:.2e} \
             (<= 1e-4, same active sets: {same_active}), dense retained {mean_retained:.2}% (<= 20) \
             over {} completed runs",
            retained.len()
        ),
    )
}

fn linear_scaling() -> Outcome {
    let start = Instant::now();
    let ny = scaling_bench(ClassifierKind::NyIkfd, &[1000, 2000, 4000, 8000], 64, 0).map_err(|e| e.to_string())?;
    let dense = scaling_bench(ClassifierKind::Ikfd, &[250, 500, 1000], 64, 0).map_err(|e| e.to_string())?;
    let secs = start.elapsed().as_secs_f64();
    check(
        ny.slope <= 1.3 && dense.slope >= 2.5 && secs < 600.0,
        format!(
            "Ny-iKFD slope {:.3} (<= 1.3), dense iKFD slope {:.3} (>= 2.5), {secs:.1}s (< 600s)",
            ny.slope, dense.slope
        ),
    )
}

fn nyk1_crossval_smoke() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let data = nykernel::harness::generate(Generator::Checkerboard, 200, 3).map_err(|e| e.to_string())?;
    let kpath = dir.path().join("cb.nyk");
    save_kernel(&data.source.to_similarity(), &kpath, KernelFormat::Text).map_err(|e| e.to_string())?;
    save_labels(&data.labels, &dir.path().join("cb.labels")).map_err(|e| e.to_string())?;
    let text = "dataset = file\nkernel = cb.nyk\nlabels = cb.labels\nclassifier = ny-ikfd\nfolds = 5\nseed = 4\noutput = out/cb\n";
    let spec = ExperimentSpec::parse(text, dir.path()).map_err(|e| e.to_string())?;
    let report = run(&spec)?;
    let prefix = dir.path().join("out/cb");
    let read = |ext: &str| std::fs::read_to_string(prefix.with_extension(ext)).map_err(|e| format!("{ext}: {e}"));
    let json = CvReport::from_json(&read("json")?).map_err(|e| e.to_string())?;
    let csv_rows = read("csv")?.lines().count();
    let kv = read("txt")?;
    let well_formed = report.folds.len() == 5
        && json == report
        && csv_rows == 6
        && kv.contains("accuracy = ")
        && (0.0..=100.0).contains(&report.mean_accuracy)
        && report.folds.iter().all(|f| f.landmarks.as_ref().is_some_and(|l| !l.is_empty()));
    check(
        well_formed,
        format!(
            "{} folds, accuracy {:.2}%, report files consistent: {well_formed}",
            report.folds.len(),
            report.mean_accuracy
        ),
    )
}

fn main() {
    let criteria: [Criterion; 11] = [
        ("1 nystrom exactness", nystrom_exactness),
        ("2 low-rank EVD vs dense", lowrank_evd_matches_dense),
        ("3 nystrom pseudo-inverse", nystrom_pseudo_inverse),
        ("4 MEB quality", meb_quality),
        ("5 ball experiment", ball_experiment),
        ("6 magnification experiment", magnification_experiment),
        ("7 pE gaussians", pe_gaussians_experiment),
        ("8 SMSS identity", smss_identity),
        ("9 PCVM properties", pcvm_properties),
        ("10 linear scaling", linear_scaling),
        ("NYK1 crossval smoke", nyk1_crossval_smoke),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = Vec::new();
    let total = Instant::now();
    for (name, f) in criteria {
        if !filter.is_empty() && !filter.iter().any(|p| name.contains(p.as_str())) {
            continue;
        }
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|_| Err("panicked".into()));
        let took = fmt_secs(start.elapsed());
        match outcome {
            Ok(detail) => println!("PASS  criterion {name}: {detail} [{took}]"),
            Err(detail) => {
                println!("FAIL  criterion {name}: {detail} [{took}]");
                failed.push(name);
            }
        }
    }
    println!("acceptance: {} failed, total {}", failed.len(), fmt_secs(total.elapsed()));
    if !failed.is_empty() {
        std::process::exit(1);
    }
}

fn fmt_secs(d: Duration) -> String {
    format!("{:.1}s", d.as_secs_f64())
}
