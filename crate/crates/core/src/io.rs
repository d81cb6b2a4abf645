//! Plain-text CSV serialization. Every file has one header row naming its
//! columns and may start with `#` comment lines (configuration, seed).
//! Floats are written in shortest round-trip form, so reading a file back
//! reproduces every value bit for bit.
//!
//! Schemas:
//!
//! | object | columns |
//! |---|---|
//! | MRP | `field,i,j,value` with `field` one of `gamma`, `reward`, `transition` |
//! | basis | `state,phi_0,...,phi_{p-1}` |
//! | samples | `i,state,next_state,episode,reward,phi_0..,next_phi_0..` |
//! | path coefficients | `method,lambda,j,theta` |
//! | path diagnostics | `method,lambda,status,inf_residual,l2_residual,l1_norm,support,message` |
//! | score table | `method,criterion,lambda,fold,score,selected` |
//! | LP | `block,i,j,value` with `block` one of `c`, `g`, `h` |

use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::estimators::RegularizationPath;
use crate::mrp::{FeatureBasis, MarkovRewardProcess, SampleSet};
use crate::selection::ScoreTable;
use crate::solvers::LinearProgram;

/// Shortest representation that parses back to the same `f64`.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:?}")
}

fn parse_f64(s: &str) -> Result<f64> {
    s.trim()
        .parse::<f64>()
        .map_err(|e| Error::Parse(format!("bad float '{s}': {e}")))
}

fn parse_usize(s: &str) -> Result<usize> {
    s.trim()
        .parse::<usize>()
        .map_err(|e| Error::Parse(format!("bad index '{s}': {e}")))
}

/// Write `# <line>` for each comment line.
pub fn write_comment<W: Write>(w: &mut W, comment: Option<&str>) -> io::Result<()> {
    if let Some(c) = comment {
        for line in c.lines() {
            writeln!(w, "# {line}")?;
        }
    }
    Ok(())
}

fn writer<W: Write>(mut w: W, comment: Option<&str>) -> Result<csv::Writer<W>> {
    write_comment(&mut w, comment)?;
    Ok(csv::WriterBuilder::new().from_writer(w))
}

/// Split a CSV source into its leading comment lines and a record reader.
type Source<R> = io::Chain<io::Cursor<Vec<u8>>, BufReader<R>>;

fn reader<R: Read>(r: R) -> Result<(Vec<String>, csv::Reader<Source<R>>)> {
    let mut buf = BufReader::new(r);
    let mut comments = Vec::new();
    let mut first = String::new();
    loop {
        first.clear();
        if buf.read_line(&mut first)? == 0 {
            break;
        }
        match first.strip_prefix('#') {
            Some(c) => comments.push(c.trim().to_string()),
            None => break,
        }
    }
    let rest = io::Cursor::new(first.into_bytes()).chain(buf);
    let rdr = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(rest);
    Ok((comments, rdr))
}

fn expect_headers<R: Read>(rdr: &mut csv::Reader<R>, expected: &[&str]) -> Result<csv::StringRecord> {
    let h = rdr.headers()?.clone();
    if h.len() < expected.len() || expected.iter().zip(h.iter()).any(|(e, g)| *e != g) {
        return Err(Error::Parse(format!(
            "expected columns starting with {:?}, found {:?}",
            expected,
            h.iter().collect::<Vec<_>>()
        )));
    }
    Ok(h)
}

pub fn write_mrp<W: Write>(w: W, mrp: &MarkovRewardProcess, comment: Option<&str>) -> Result<()> {
    let mut wr = writer(w, comment)?;
    wr.write_record(["field", "i", "j", "value"])?;
    wr.write_record(["gamma", "0", "0", &fmt_f64(mrp.gamma())])?;
    for (i, r) in mrp.reward().iter().enumerate() {
        wr.write_record(["reward", &i.to_string(), "0", &fmt_f64(*r)])?;
    }
    let p = mrp.transition();
    for i in 0..p.nrows() {
        for j in 0..p.ncols() {
            wr.write_record(["transition", &i.to_string(), &j.to_string(), &fmt_f64(p[(i, j)])])?;
        }
    }
    wr.flush()?;
    Ok(())
}

pub fn read_mrp<R: Read>(r: R) -> Result<MarkovRewardProcess> {
    let (_, mut rdr) = reader(r)?;
    expect_headers(&mut rdr, &["field", "i", "j", "value"])?;
    let mut gamma = None;
    let mut rewards: Vec<(usize, f64)> = Vec::new();
    let mut entries: Vec<(usize, usize, f64)> = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let (i, j, v) = (parse_usize(&rec[1])?, parse_usize(&rec[2])?, parse_f64(&rec[3])?);
        match &rec[0] {
            "gamma" => gamma = Some(v),
            "reward" => rewards.push((i, v)),
            "transition" => entries.push((i, j, v)),
            other => return Err(Error::Parse(format!("unknown MRP field '{other}'"))),
        }
    }
    let gamma = gamma.ok_or_else(|| Error::Parse("missing gamma row".into()))?;
    let n = rewards.len();
    let mut reward = DVector::zeros(n);
    for (i, v) in rewards {
        if i >= n {
            return Err(Error::Parse(format!("reward index {i} out of range")));
        }
        reward[i] = v;
    }
    if entries.len() != n * n {
        return Err(Error::Parse(format!(
            "{n} rewards but {} transition entries",
            entries.len()
        )));
    }
    let mut p = DMatrix::zeros(n, n);
    for (i, j, v) in entries {
        if i >= n || j >= n {
            return Err(Error::Parse(format!("transition index ({i},{j}) out of range")));
        }
        p[(i, j)] = v;
    }
    MarkovRewardProcess::new(p, reward, gamma)
}

pub fn write_basis<W: Write>(w: W, basis: &FeatureBasis, comment: Option<&str>) -> Result<()> {
    let mut wr = writer(w, comment)?;
    let m = basis.matrix();
    let mut header = vec!["state".to_string()];
    header.extend((0..m.ncols()).map(|j| format!("phi_{j}")));
    wr.write_record(&header)?;
    for s in 0..m.nrows() {
        let mut row = vec![s.to_string()];
        row.extend(m.row(s).iter().map(|v| fmt_f64(*v)));
        wr.write_record(&row)?;
    }
    wr.flush()?;
    Ok(())
}

pub fn read_basis<R: Read>(r: R) -> Result<FeatureBasis> {
    let (_, mut rdr) = reader(r)?;
    let h = expect_headers(&mut rdr, &["state"])?;
    let p = h.len() - 1;
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        if rec.len() != p + 1 {
            return Err(Error::Parse("ragged basis row".into()));
        }
        let vals = rec.iter().skip(1).map(parse_f64).collect::<Result<Vec<_>>>()?;
        rows.push((parse_usize(&rec[0])?, vals));
    }
    rows.sort_by_key(|(s, _)| *s);
    if rows.iter().enumerate().any(|(k, (s, _))| k != *s) {
        return Err(Error::Parse("basis states must be 0..S without gaps".into()));
    }
    let m = DMatrix::from_fn(rows.len(), p, |i, j| rows[i].1[j]);
    FeatureBasis::new(m)
}

pub fn write_samples<W: Write>(w: W, samples: &SampleSet, comment: Option<&str>) -> Result<()> {
    let mut w = w;
    write_comment(&mut w, comment)?;
    writeln!(w, "# seed={}", samples.seed)?;
    let mut wr = csv::WriterBuilder::new().from_writer(w);
    let p = samples.num_features();
    let mut header: Vec<String> = ["i", "state", "next_state", "episode", "reward"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    header.extend((0..p).map(|j| format!("phi_{j}")));
    header.extend((0..p).map(|j| format!("next_phi_{j}")));
    wr.write_record(&header)?;
    for i in 0..samples.len() {
        let mut row = vec![
            i.to_string(),
            samples.states[i].to_string(),
            samples.next_states[i].to_string(),
            samples.episodes[i].to_string(),
            fmt_f64(samples.rewards[i]),
        ];
        row.extend(samples.phi.row(i).iter().map(|v| fmt_f64(*v)));
        row.extend(samples.phi_next.row(i).iter().map(|v| fmt_f64(*v)));
        wr.write_record(&row)?;
    }
    wr.flush()?;
    Ok(())
}

pub fn read_samples<R: Read>(r: R) -> Result<SampleSet> {
    let (comments, mut rdr) = reader(r)?;
    let seed = comments
        .iter()
        .filter_map(|c| c.strip_prefix("seed="))
        .next_back()
        .map(|s| s.trim().parse::<u64>())
        .transpose()
        .map_err(|e| Error::Parse(format!("bad seed comment: {e}")))?
        .unwrap_or(0);
    let h = expect_headers(&mut rdr, &["i", "state", "next_state", "episode", "reward"])?;
    let width = h.len() - 5;
    if width % 2 != 0 {
        return Err(Error::Parse("feature columns must come in phi/next_phi pairs".into()));
    }
    let p = width / 2;
    let (mut states, mut next, mut episodes, mut rewards, mut phi, mut phi_next) =
        (vec![], vec![], vec![], vec![], vec![], vec![]);
    for (k, rec) in rdr.records().enumerate() {
        let rec = rec?;
        if rec.len() != h.len() {
            return Err(Error::Parse(format!("row {k} has {} fields", rec.len())));
        }
        if parse_usize(&rec[0])? != k {
            return Err(Error::Parse(format!("row {k} is out of order")));
        }
        states.push(parse_usize(&rec[1])?);
        next.push(parse_usize(&rec[2])?);
        episodes.push(parse_usize(&rec[3])?);
        rewards.push(parse_f64(&rec[4])?);
        for j in 0..p {
            phi.push(parse_f64(&rec[5 + j])?);
            phi_next.push(parse_f64(&rec[5 + p + j])?);
        }
    }
    let n = states.len();
    SampleSet::new(
        states,
        next,
        DVector::from_vec(rewards),
        DMatrix::from_row_slice(n, p, &phi),
        DMatrix::from_row_slice(n, p, &phi_next),
        episodes,
        seed,
    )
}

/// Coefficients of every successful path point: `method,lambda,j,theta`.
pub fn write_path_coefficients<W: Write>(w: W, paths: &[RegularizationPath], comment: Option<&str>) -> Result<()> {
    let mut wr = writer(w, comment)?;
    wr.write_record(["method", "lambda", "j", "theta"])?;
    for path in paths {
        for est in path.estimates() {
            for (j, t) in est.theta.iter().enumerate() {
                wr.write_record([path.method.name(), &fmt_f64(est.lambda), &j.to_string(), &fmt_f64(*t)])?;
            }
        }
    }
    wr.flush()?;
    Ok(())
}

/// One row per path point, failures included.
pub fn write_path_diagnostics<W: Write>(w: W, paths: &[RegularizationPath], comment: Option<&str>) -> Result<()> {
    let mut wr = writer(w, comment)?;
    wr.write_record([
        "method",
        "lambda",
        "status",
        "inf_residual",
        "l2_residual",
        "l1_norm",
        "support",
        "message",
    ])?;
    for path in paths {
        for pt in &path.points {
            let lambda = fmt_f64(pt.lambda);
            match &pt.outcome {
                Ok(e) => {
                    let d = &e.diagnostics;
                    wr.write_record([
                        path.method.name(),
                        &lambda,
                        "ok",
                        &fmt_f64(d.inf_norm_residual),
                        &fmt_f64(d.l2_norm_residual),
                        &fmt_f64(d.l1_norm_theta),
                        &d.support_size.to_string(),
                        "",
                    ])?;
                }
                Err(msg) => wr.write_record([path.method.name(), &lambda, "failed", "", "", "", "", msg])?,
            }
        }
    }
    wr.flush()?;
    Ok(())
}

/// Per-fold and aggregate scores. Aggregate rows have an empty `fold`.
pub fn write_score_tables<W: Write>(w: W, tables: &[ScoreTable], comment: Option<&str>) -> Result<()> {
    let mut wr = writer(w, comment)?;
    wr.write_record(["method", "criterion", "lambda", "fold", "score", "selected"])?;
    let opt = |s: Option<f64>| s.map(fmt_f64).unwrap_or_default();
    for t in tables {
        let crit = t.criterion.to_string();
        for e in &t.entries {
            let lambda = fmt_f64(e.lambda);
            for (k, s) in e.fold_scores.iter().enumerate() {
                wr.write_record([t.method.name(), &crit, &lambda, &k.to_string(), &opt(*s), ""])?;
            }
            let sel = if t.selected == Some(e.lambda) { "1" } else { "0" };
            wr.write_record([t.method.name(), &crit, &lambda, "", &opt(e.score), sel])?;
        }
    }
    wr.flush()?;
    Ok(())
}

/// Debug dump of `min c^T x s.t. G x <= h`.
pub fn write_lp<W: Write>(w: W, lp: &LinearProgram, comment: Option<&str>) -> Result<()> {
    let mut wr = writer(w, comment)?;
    wr.write_record(["block", "i", "j", "value"])?;
    for (j, v) in lp.c.iter().enumerate() {
        wr.write_record(["c", "0", &j.to_string(), &fmt_f64(*v)])?;
    }
    for i in 0..lp.g.nrows() {
        for j in 0..lp.g.ncols() {
            let v = lp.g[(i, j)];
            if v != 0.0 {
                wr.write_record(["g", &i.to_string(), &j.to_string(), &fmt_f64(v)])?;
            }
        }
    }
    for (i, v) in lp.h.iter().enumerate() {
        wr.write_record(["h", &i.to_string(), "0", &fmt_f64(*v)])?;
    }
    wr.flush()?;
    Ok(())
}

pub fn read_lp<R: Read>(r: R) -> Result<LinearProgram> {
    let (_, mut rdr) = reader(r)?;
    expect_headers(&mut rdr, &["block", "i", "j", "value"])?;
    let (mut c, mut g, mut h) = (Vec::new(), Vec::new(), Vec::new());
    for rec in rdr.records() {
        let rec = rec?;
        let (i, j, v) = (parse_usize(&rec[1])?, parse_usize(&rec[2])?, parse_f64(&rec[3])?);
        match &rec[0] {
            "c" => c.push((j, v)),
            "g" => g.push((i, j, v)),
            "h" => h.push((i, v)),
            other => return Err(Error::Parse(format!("unknown LP block '{other}'"))),
        }
    }
    let dense = |entries: &[(usize, f64)]| -> Result<DVector<f64>> {
        let mut v = DVector::zeros(entries.len());
        for &(k, x) in entries {
            if k >= entries.len() {
                return Err(Error::Parse(format!("index {k} out of range")));
            }
            v[k] = x;
        }
        Ok(v)
    };
    let c = dense(&c)?;
    let h = dense(&h)?;
    let mut gm = DMatrix::zeros(h.len(), c.len());
    for (i, j, v) in g {
        if i >= h.len() || j >= c.len() {
            return Err(Error::Parse(format!("G index ({i},{j}) out of range")));
        }
        gm[(i, j)] = v;
    }
    LinearProgram::new(c, gm, h)
}

/// Create a file for writing, with parent directories.
pub fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir)?;
        }
    }
    Ok(BufWriter::new(File::create(path)?))
}

pub fn open(path: &Path) -> Result<BufReader<File>> {
    Ok(BufReader::new(File::open(path)?))
}
