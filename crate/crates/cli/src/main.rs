//! `nyk`: command-line front end for the nykernel library.
//!
//! Exit codes: 0 on success, 2 for invalid input, 3 for numerical failures.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use nykernel::classifiers::{load_model, save_model, ClassifierKind, TrainConfig};
use nykernel::harness::{
    crossval, fit, fit_with_landmarks, generate, scaling_bench, select_landmarks, ExperimentSpec, Generator,
    LandmarkCount, Selector,
};
use nykernel::landmarks::{LandmarkReport, Method};
use nykernel::proximity::io::{load_kernel, load_labels, save_kernel, save_labels, KernelFormat};
use nykernel::proximity::{KernelSource, NystromFactors, SimilarityMatrix, Subset};

#[derive(Parser)]
#[command(name = "nyk", version, about = "Nyström-approximated indefinite kernel classification")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dataset as a kernel file plus labels.
    Gen {
        /// ball, checkerboard, gauss_overlap, pe_gaussians or magnification
        dataset: String,
        /// Points per class for `ball`, total points otherwise.
        #[arg(long)]
        n: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output prefix; writes <out>.nyk (or .nykb) and <out>.labels.
        #[arg(long)]
        out: PathBuf,
        /// Write the binary NYKB format.
        #[arg(long)]
        binary: bool,
    },
    /// Select landmarks on a kernel file.
    Landmarks {
        /// meb, kmeans or random
        method: String,
        #[arg(long)]
        kernel: PathBuf,
        #[arg(long)]
        labels: PathBuf,
        /// MEB approximation parameter.
        #[arg(long, default_value_t = 0.01)]
        eps: f64,
        /// Landmark count for kmeans/random (default: as many as MEB finds).
        #[arg(long)]
        m: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Landmark file to write (stdout if omitted).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Train a classifier on a kernel file.
    Train {
        /// ikfd, ny-ikfd, pcvm or ny-pcvm
        classifier: String,
        #[arg(long)]
        kernel: PathBuf,
        #[arg(long)]
        labels: PathBuf,
        /// Train on these object indices only (whitespace separated).
        #[arg(long)]
        subset: Option<PathBuf>,
        /// Landmark file (indices relative to the training objects).
        #[arg(long)]
        landmarks: Option<PathBuf>,
        /// Selector used when no landmark file is given: meb, kmeans, random.
        #[arg(long, default_value = "meb")]
        selector: String,
        #[arg(long, default_value_t = 0.01)]
        eps: f64,
        #[arg(long)]
        m: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 500)]
        max_iters: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Predict objects of a kernel file with a trained model.
    Predict {
        #[arg(long)]
        model: PathBuf,
        /// Kernel file whose columns include the model's training objects.
        #[arg(long)]
        kernel: PathBuf,
        /// Objects to predict (default: all rows).
        #[arg(long)]
        rows: Option<PathBuf>,
        /// True labels; prints the accuracy when given.
        #[arg(long)]
        labels: Option<PathBuf>,
        /// Prediction file to write (stdout if omitted).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Cross-validate an experiment described by a key = value spec file.
    Crossval {
        #[arg(long)]
        spec: PathBuf,
        /// Also print the JSON report.
        #[arg(long)]
        json: bool,
    },
    /// Supervised similarity score of a landmark set.
    Smss {
        #[arg(long)]
        kernel: PathBuf,
        #[arg(long)]
        labels: PathBuf,
        #[arg(long)]
        landmarks: PathBuf,
    },
    /// Training time against N on gauss_overlap data.
    BenchScaling {
        #[arg(long, default_value = "ny-ikfd")]
        classifier: String,
        /// Comma-separated, ascending sizes.
        #[arg(long, default_value = "1000,2000,4000,8000", value_delimiter = ',')]
        n: Vec<usize>,
        #[arg(long, default_value_t = 64)]
        m: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn read_indices(path: &Path) -> Result<Vec<usize>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    text.split_whitespace()
        .map(|t| t.parse().with_context(|| format!("bad index '{t}' in {}", path.display())))
        .collect()
}

fn read_landmarks(path: &Path) -> Result<LandmarkReport> {
    let file = fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
    Ok(LandmarkReport::read_text(file)?)
}

fn selector_for(method: &str, eps: f64, m: Option<usize>) -> Result<Selector> {
    let count = m.map_or(LandmarkCount::MatchMeb(eps), LandmarkCount::Fixed);
    Ok(match method.parse::<Method>()? {
        Method::Meb => Selector::Meb { epsilon: eps },
        Method::Kmeans => Selector::Kmeans(count),
        Method::Random => Selector::Random(count),
    })
}

fn output(path: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(fs::File::create(p).with_context(|| format!("creating {}", p.display()))?),
        None => Box::new(std::io::stdout().lock()),
    })
}

fn with_ext(prefix: &Path, ext: &str) -> PathBuf {
    let mut p = prefix.as_os_str().to_owned();
    p.push(ext);
    PathBuf::from(p)
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Gen {
            dataset,
            n,
            seed,
            out,
            binary,
        } => {
            let gen: Generator = dataset.parse()?;
            let data = generate(gen, n.unwrap_or_else(|| gen.default_n()), seed)?;
            let (ext, format) = if binary {
                (".nykb", KernelFormat::Binary)
            } else {
                (".nyk", KernelFormat::Text)
            };
            if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(dir)?;
            }
            let kpath = with_ext(&out, ext);
            let lpath = with_ext(&out, ".labels");
            save_kernel(&data.source.to_similarity(), &kpath, format)?;
            save_labels(&data.labels, &lpath)?;
            println!("wrote {} and {} ({} objects)", kpath.display(), lpath.display(), data.len());
        }
        Command::Landmarks {
            method,
            kernel,
            labels,
            eps,
            m,
            seed,
            out,
        } => {
            let k = load_kernel(&kernel)?;
            let y = load_labels(&labels)?;
            check_labels(&k, &y)?;
            let mut report = select_landmarks(&k, &y, selector_for(&method, eps, m)?, seed)?;
            let f = NystromFactors::from_source(&k, &report.indices)?;
            report.smss = Some(nykernel::landmarks::smss(&f, &k, &y)?);
            report.write_text(output(&out)?)?;
        }
        Command::Train {
            classifier,
            kernel,
            labels,
            subset,
            landmarks,
            selector,
            eps,
            m,
            seed,
            max_iters,
            out,
        } => {
            let kind: ClassifierKind = classifier.parse()?;
            let k = load_kernel(&kernel)?;
            let y = load_labels(&labels)?;
            check_labels(&k, &y)?;
            let train = match subset {
                Some(p) => read_indices(&p)?,
                None => (0..k.n()).collect(),
            };
            let view = Subset::new(&k, train.clone())?;
            let y_train: Vec<i64> = train.iter().map(|&i| y[i]).collect();
            let cfg = TrainConfig {
                rng_seed: seed,
                max_iters,
                meb_epsilon: eps,
                ..TrainConfig::default()
            };
            let mut fitted = match (landmarks, kind.uses_landmarks()) {
                (Some(p), true) => fit_with_landmarks(&view, &y_train, kind, read_landmarks(&p)?, &cfg, true)?,
                (Some(_), false) => bail!("{kind} does not use landmarks"),
                (None, _) => fit(&view, &y_train, kind, selector_for(&selector, eps, m)?, &cfg, true)?,
            };
            fitted.model.training_refs = train;
            save_model(&fitted.model, &out)?;
            println!("saved {} model to {}", kind, out.display());
            if let Some(r) = &fitted.landmarks {
                println!("landmarks = {}", r.len());
            }
            if let Some(s) = fitted.smss {
                println!("smss = {s:.4}");
            }
            if let Some(p) = fitted.model.retained_percent() {
                println!("retained_percent = {p:.2}");
            }
        }
        Command::Predict {
            model,
            kernel,
            rows,
            labels,
            out,
        } => {
            let model = load_model(&model)?;
            let k = load_kernel(&kernel)?;
            if let Some(&bad) = model.training_refs.iter().find(|&&j| j >= k.n()) {
                bail!("model references object {bad} but the kernel has {} objects", k.n());
            }
            let rows = match rows {
                Some(p) => read_indices(&p)?,
                None => (0..k.n()).collect(),
            };
            if let Some(&bad) = rows.iter().find(|&&i| i >= k.n()) {
                bail!("row {bad} out of range for {} objects", k.n());
            }
            let truth = labels.map(|p| load_labels(&p)).transpose()?;
            let mut w = output(&out)?;
            writeln!(
                w,
                "# index label {}",
                model.classes.iter().map(|c| format!("p{c}")).collect::<Vec<_>>().join(" ")
            )?;
            let mut correct = 0;
            for &i in &rows {
                let (label, scores) = model.predict(&|j| k.entry(i, model.training_refs[j]));
                let s: Vec<String> = scores.iter().map(|p| format!("{p:.6}")).collect();
                writeln!(w, "{i} {label} {}", s.join(" "))?;
                if truth.as_ref().is_some_and(|t| t.get(i) == Some(&label)) {
                    correct += 1;
                }
            }
            w.flush()?;
            if truth.is_some() {
                eprintln!("accuracy = {:.2}", 100.0 * correct as f64 / rows.len() as f64);
            }
        }
        Command::Crossval { spec, json } => {
            let spec = ExperimentSpec::load(&spec)?;
            let report = crossval(&spec)?;
            report.write_kv(std::io::stdout().lock())?;
            if json {
                println!("{}", report.to_json()?);
            }
        }
        Command::Smss {
            kernel,
            labels,
            landmarks,
        } => {
            let k = load_kernel(&kernel)?;
            let y = load_labels(&labels)?;
            check_labels(&k, &y)?;
            let report = read_landmarks(&landmarks)?;
            let f = NystromFactors::from_source(&k, &report.indices)?;
            println!("{:.6}", nykernel::landmarks::smss(&f, &k, &y)?);
        }
        Command::BenchScaling { classifier, n, m, seed } => {
            let kind: ClassifierKind = classifier.parse()?;
            let report = scaling_bench(kind, &n, m, seed)?;
            println!("# {} m={}", report.classifier, report.m);
            println!("n,seconds");
            for r in &report.rows {
                println!("{},{:.6}", r.n, r.seconds);
            }
            println!("slope = {:.3}", report.slope);
        }
    }
    Ok(())
}

fn check_labels(k: &SimilarityMatrix, y: &[i64]) -> Result<()> {
    if k.n() != y.len() {
        bail!("kernel has {} objects but {} labels were given", k.n(), y.len());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            let numerical = e
                .downcast_ref::<nykernel::Error>()
                .is_some_and(nykernel::Error::is_numerical);
            ExitCode::from(if numerical { 3 } else { 2 })
        }
    }
}
