//! Plain-text model files.
//!
//! A file holds an `OVR1` header (classifier kind, classes, training
//! object ids) followed by one `IKFD1` or `PCVM1` block per binary model.
//! Every float is written in its shortest round-trip form, so a reloaded
//! model predicts bit-for-bit like the original.

use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;
use std::str::FromStr;

use nalgebra::DVector;

use crate::classifiers::ikfd::Gaussian1d;
use crate::classifiers::{BinaryModel, ClassifierKind, IkfdModel, KernelExpansion, OvrModel, PcvmModel};
use crate::error::{Error, Result};
use crate::proximity::io::format_float;

fn floats<'a>(v: impl IntoIterator<Item = &'a f64>) -> String {
    v.into_iter().map(|&x| format_float(x)).collect::<Vec<_>>().join(" ")
}

fn ints<'a>(v: impl IntoIterator<Item = &'a usize>) -> String {
    v.into_iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ")
}

fn write_expansion<W: Write>(w: &mut W, e: &KernelExpansion) -> std::io::Result<()> {
    writeln!(w, "expansion {}", e.indices.len())?;
    writeln!(w, "{}", ints(&e.indices))?;
    writeln!(w, "{}", floats(&e.coefs))
}

fn write_ikfd<W: Write>(w: &mut W, m: &IkfdModel) -> std::io::Result<()> {
    writeln!(w, "IKFD1")?;
    writeln!(w, "n {}", m.alpha.len())?;
    writeln!(w, "bias {}", format_float(m.bias))?;
    writeln!(w, "alpha {}", floats(m.alpha.iter()))?;
    writeln!(w, "mean_pos {}", floats(m.mean_pos.iter()))?;
    writeln!(w, "mean_neg {}", floats(m.mean_neg.iter()))?;
    writeln!(w, "posterior_pos {} {}", format_float(m.posterior_pos.mean), format_float(m.posterior_pos.var))?;
    writeln!(w, "posterior_neg {} {}", format_float(m.posterior_neg.mean), format_float(m.posterior_neg.var))?;
    write_expansion(w, &m.expansion)
}

fn write_pcvm<W: Write>(w: &mut W, m: &PcvmModel) -> std::io::Result<()> {
    writeln!(w, "PCVM1")?;
    writeln!(w, "n {}", m.n_train)?;
    writeln!(w, "bias {}", format_float(m.bias))?;
    writeln!(w, "prune_threshold {}", format_float(m.prune_threshold))?;
    writeln!(w, "iterations {}", m.iterations)?;
    writeln!(w, "active {}", m.active.len())?;
    writeln!(w, "{}", ints(&m.active))?;
    writeln!(w, "{}", floats(&m.weights))?;
    writeln!(w, "{}", floats(&m.basis_labels))?;
    write_expansion(w, &m.expansion)
}

pub fn write_model<W: Write>(model: &OvrModel, w: W) -> Result<()> {
    let mut w = std::io::BufWriter::new(w);
    writeln!(w, "OVR1")?;
    writeln!(w, "kind {}", model.kind)?;
    writeln!(
        w,
        "classes {}",
        model.classes.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(" ")
    )?;
    writeln!(w, "training {}", model.training_refs.len())?;
    writeln!(w, "{}", ints(&model.training_refs))?;
    writeln!(w, "models {}", model.models.len())?;
    for m in &model.models {
        match m {
            BinaryModel::Ikfd(m) => write_ikfd(&mut w, m)?,
            BinaryModel::Pcvm(m) => write_pcvm(&mut w, m)?,
        }
    }
    w.flush()?;
    Ok(())
}

/// Whitespace token stream that remembers line numbers for errors.
struct Tokens {
    items: Vec<(usize, String)>,
    pos: usize,
}

impl Tokens {
    fn new<R: Read>(r: R) -> Result<Self> {
        let mut items = Vec::new();
        for (i, line) in BufReader::new(r).lines().enumerate() {
            for t in line?.split_whitespace() {
                items.push((i + 1, t.to_string()));
            }
        }
        Ok(Self { items, pos: 0 })
    }

    fn line(&self) -> usize {
        self.items.get(self.pos).or(self.items.last()).map_or(1, |t| t.0)
    }

    fn next(&mut self) -> Result<&str> {
        let line = self.line();
        let t = self
            .items
            .get(self.pos)
            .ok_or_else(|| Error::parse(line, "unexpected end of file"))?;
        self.pos += 1;
        Ok(&t.1)
    }

    fn expect(&mut self, word: &str) -> Result<()> {
        let line = self.line();
        let t = self.next()?;
        if t == word {
            Ok(())
        } else {
            Err(Error::parse(line, format!("expected '{word}', found '{t}'")))
        }
    }

    fn parse<T: FromStr>(&mut self) -> Result<T> {
        let line = self.line();
        let t = self.next()?.to_string();
        t.parse()
            .map_err(|_| Error::parse(line, format!("cannot parse '{t}'")))
    }

    fn many<T: FromStr>(&mut self, n: usize) -> Result<Vec<T>> {
        (0..n).map(|_| self.parse()).collect()
    }

    fn done(&self) -> bool {
        self.pos >= self.items.len()
    }
}

fn read_expansion(t: &mut Tokens) -> Result<KernelExpansion> {
    t.expect("expansion")?;
    let k: usize = t.parse()?;
    Ok(KernelExpansion {
        indices: t.many(k)?,
        coefs: t.many(k)?,
    })
}

fn read_gaussian(t: &mut Tokens, key: &str) -> Result<Gaussian1d> {
    t.expect(key)?;
    Ok(Gaussian1d {
        mean: t.parse()?,
        var: t.parse()?,
    })
}

fn read_ikfd(t: &mut Tokens) -> Result<IkfdModel> {
    t.expect("n")?;
    let n: usize = t.parse()?;
    t.expect("bias")?;
    let bias = t.parse()?;
    t.expect("alpha")?;
    let alpha = DVector::from_vec(t.many(n)?);
    t.expect("mean_pos")?;
    let mean_pos = DVector::from_vec(t.many(n)?);
    t.expect("mean_neg")?;
    let mean_neg = DVector::from_vec(t.many(n)?);
    let posterior_pos = read_gaussian(t, "posterior_pos")?;
    let posterior_neg = read_gaussian(t, "posterior_neg")?;
    Ok(IkfdModel {
        alpha,
        bias,
        mean_pos,
        mean_neg,
        expansion: read_expansion(t)?,
        posterior_pos,
        posterior_neg,
    })
}

fn read_pcvm(t: &mut Tokens) -> Result<PcvmModel> {
    t.expect("n")?;
    let n_train = t.parse()?;
    t.expect("bias")?;
    let bias = t.parse()?;
    t.expect("prune_threshold")?;
    let prune_threshold = t.parse()?;
    t.expect("iterations")?;
    let iterations = t.parse()?;
    t.expect("active")?;
    let k: usize = t.parse()?;
    Ok(PcvmModel {
        active: t.many(k)?,
        weights: t.many(k)?,
        basis_labels: t.many(k)?,
        bias,
        prune_threshold,
        iterations,
        n_train,
        expansion: read_expansion(t)?,
    })
}

pub fn read_model<R: Read>(r: R) -> Result<OvrModel> {
    let mut t = Tokens::new(r)?;
    t.expect("OVR1")?;
    t.expect("kind")?;
    let kind: ClassifierKind = t.next()?.parse()?;
    t.expect("classes")?;
    let mut classes = Vec::new();
    while t.items.get(t.pos).is_some_and(|s| s.1 != "training") {
        classes.push(t.parse::<i64>()?);
    }
    if classes.len() < 2 {
        return Err(Error::parse(t.line(), "a model needs at least two classes"));
    }
    t.expect("training")?;
    let n: usize = t.parse()?;
    let training_refs = t.many(n)?;
    t.expect("models")?;
    let count: usize = t.parse()?;
    let expected = if classes.len() == 2 { 1 } else { classes.len() };
    if count != expected {
        return Err(Error::parse(t.line(), format!("expected {expected} binary models, found {count}")));
    }
    let mut models = Vec::with_capacity(count);
    for _ in 0..count {
        let line = t.line();
        let m = match t.next()? {
            "IKFD1" => BinaryModel::Ikfd(read_ikfd(&mut t)?),
            "PCVM1" => BinaryModel::Pcvm(read_pcvm(&mut t)?),
            other => return Err(Error::parse(line, format!("unknown model block '{other}'"))),
        };
        models.push(m);
    }
    if !t.done() {
        return Err(Error::parse(t.line(), "trailing data after last model"));
    }
    Ok(OvrModel {
        kind,
        classes,
        models,
        training_refs,
    })
}

pub fn save_model(model: &OvrModel, path: &Path) -> Result<()> {
    write_model(model, std::fs::File::create(path)?)
}

pub fn load_model(path: &Path) -> Result<OvrModel> {
    read_model(std::fs::File::open(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifiers::{one_vs_rest_train, train_ikfd, train_ny_pcvm, TrainConfig};
    use crate::proximity::{DataSource, KernelFunction, KernelSource, NystromFactors};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn data() -> (DataSource, Vec<i64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut pts = Vec::new();
        let mut y = Vec::new();
        for i in 0..90 {
            let c = (i % 3) as i64;
            pts.push(vec![
                3.0 * c as f64 + rng.sample::<f64, _>(StandardNormal),
                rng.sample::<f64, _>(StandardNormal) * 1e-7,
            ]);
            y.push(c);
        }
        (DataSource::vectors(pts, KernelFunction::Rbf { sigma: 1.3 }), y)
    }

    fn round_trip(model: &OvrModel, src: &DataSource) {
        let mut buf = Vec::new();
        write_model(model, &mut buf).unwrap();
        let back = read_model(buf.as_slice()).unwrap();
        assert_eq!(&back, model);
        for i in 0..src.len() {
            let a = model.predict(&|j| src.entry(i, j));
            let b = back.predict(&|j| src.entry(i, j));
            assert_eq!(a.0, b.0);
            for (x, y) in a.1.iter().zip(&b.1) {
                assert_eq!(x.to_bits(), y.to_bits());
            }
        }
    }

    #[test]
    fn ikfd_round_trip_bit_exact() {
        let (src, y) = data();
        let f = NystromFactors::from_source(&src, &[0, 7, 20, 33, 51, 64, 88]).unwrap();
        let model = one_vs_rest_train(&y, ClassifierKind::NyIkfd, |t| train_ikfd(&f, t).map(BinaryModel::Ikfd)).unwrap();
        round_trip(&model, &src);
    }

    #[test]
    fn pcvm_round_trip_bit_exact() {
        let (src, y) = data();
        let f = NystromFactors::from_source(&src, &(0..90).step_by(3).collect::<Vec<_>>()).unwrap();
        let cfg = TrainConfig::default();
        let model = one_vs_rest_train(&y, ClassifierKind::NyPcvm, |t| {
            train_ny_pcvm(&f, t, &cfg).map(BinaryModel::Pcvm)
        })
        .unwrap();
        round_trip(&model, &src);
    }

    #[test]
    fn rejects_malformed_files() {
        assert!(matches!(read_model("IKFD1\n".as_bytes()), Err(Error::Parse { line: 1, .. })));
        let truncated = "OVR1\nkind ikfd\nclasses 0 1\ntraining 2\n0 1\nmodels 1\nIKFD1\nn 2\nbias 0\nalpha 1\n";
        assert!(matches!(read_model(truncated.as_bytes()), Err(Error::Parse { .. })));
        let wrong = "OVR1\nkind ikfd\nclasses 0 1 2\ntraining 0\n\nmodels 1\n";
        assert!(matches!(read_model(wrong.as_bytes()), Err(Error::Parse { line: 6, .. })));
    }
}
