//! Text formats: labeled CSV datasets, the `slda-model v1` rule file, and
//! the `slda-population v1` / `slda-covariance v1` matrix files.
//!
//! Floats are written with enough significant digits to read back exactly.
//! In the line-oriented formats, blank lines and lines starting with `#`
//! are ignored by the readers.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::classify::SparsityReport;
use crate::error::{Error, Result};
use crate::model::{Dataset, Distribution, LinearRule, PopulationSpec, ThresholdConfig};
use crate::numerics::{Matrix, SparseSymMatrix};
use crate::scalar::{format_exact, Real};

/// Name of the label column in dataset CSVs.
pub const LABEL_COLUMN: &str = "class";

pub const MODEL_HEADER: &str = "slda-model v1";
pub const POPULATION_HEADER: &str = "slda-population v1";
pub const COVARIANCE_HEADER: &str = "slda-covariance v1";

/// Feature table read from CSV; `labels` is present when the file has a
/// `class` column.
#[derive(Debug, Clone)]
pub struct FeatureTable<T> {
    pub names: Vec<String>,
    pub features: Matrix<T>,
    pub labels: Option<Vec<i64>>,
}

impl<T: Real> FeatureTable<T> {
    /// Validates into a [`Dataset`]; fails without labels.
    pub fn into_dataset(self) -> Result<Dataset<T>> {
        let labels = self
            .labels
            .ok_or_else(|| Error::invalid(format!("no `{LABEL_COLUMN}` column")))?;
        let rows: Vec<&[T]> = (0..self.features.rows()).map(|i| self.features.row(i)).collect();
        crate::model::validate_dataset(&rows, &labels)
    }
}

fn parse_cell<T: Real>(cell: &str, line: usize, column: &str) -> Result<T> {
    let v: T = cell.trim().parse().map_err(|_| Error::Parse {
        line,
        message: format!("column `{column}`: `{cell}` is not a number"),
    })?;
    if !v.is_finite() {
        return Err(Error::Parse {
            line,
            message: format!("column `{column}`: non-finite value `{cell}`"),
        });
    }
    Ok(v)
}

/// Reads a comma-separated table with a header row. Line numbers in errors
/// count the header as line 1.
pub fn read_table<T: Real>(path: &Path) -> Result<FeatureTable<T>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_path(path)?;
    let headers: Vec<String> = rdr.headers()?.iter().map(|h| h.trim().to_string()).collect();
    let label_idx = headers.iter().position(|h| h == LABEL_COLUMN);
    if headers.iter().filter(|h| *h == LABEL_COLUMN).count() > 1 {
        return Err(Error::invalid(format!("more than one `{LABEL_COLUMN}` column")));
    }
    let names: Vec<String> = headers
        .iter()
        .enumerate()
        .filter(|&(j, _)| Some(j) != label_idx)
        .map(|(_, h)| h.clone())
        .collect();
    if names.is_empty() {
        return Err(Error::invalid("no feature columns"));
    }
    let p = names.len();
    let mut data = Vec::new();
    let mut labels = Vec::new();
    for (r, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = r + 2;
        if rec.len() != headers.len() {
            return Err(Error::Parse {
                line,
                message: format!("{} fields, header has {}", rec.len(), headers.len()),
            });
        }
        for (j, cell) in rec.iter().enumerate() {
            if Some(j) == label_idx {
                let l: i64 = cell.trim().parse().map_err(|_| Error::Parse {
                    line,
                    message: format!("label `{cell}` is not an integer"),
                })?;
                labels.push(l);
            } else {
                data.push(parse_cell(cell, line, &headers[j])?);
            }
        }
    }
    let n = data.len() / p;
    if n == 0 {
        return Err(Error::invalid("no data rows"));
    }
    Ok(FeatureTable {
        names,
        features: Matrix::from_vec(n, p, data)?,
        labels: label_idx.map(|_| labels),
    })
}

pub fn read_dataset<T: Real>(path: &Path) -> Result<Dataset<T>> {
    read_table(path)?.into_dataset()
}

/// Writes features (columns `names`, default `x1..xp`) and the label column.
pub fn write_dataset<T: Real>(path: &Path, dataset: &Dataset<T>, names: Option<&[String]>) -> Result<()> {
    let p = dataset.p();
    let default: Vec<String>;
    let names = match names {
        Some(n) if n.len() == p => n,
        Some(n) => return Err(Error::Shape { expected: p, got: n.len() }),
        None => {
            default = (1..=p).map(|j| format!("x{j}")).collect();
            &default
        }
    };
    let mut w = csv::Writer::from_path(path)?;
    let mut header: Vec<&str> = names.iter().map(String::as_str).collect();
    header.push(LABEL_COLUMN);
    w.write_record(&header)?;
    for i in 0..dataset.n() {
        let mut rec: Vec<String> = dataset.row(i).iter().map(|&v| format_exact(v)).collect();
        rec.push(dataset.labels()[i].to_string());
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// A fitted two-class rule with the configuration that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelFile<T> {
    pub config: ThresholdConfig,
    pub rule: LinearRule<T>,
    /// Written as trailing comment lines; not read back.
    pub report: Option<SparsityReport>,
}

pub fn format_model<T: Real>(model: &ModelFile<T>) -> String {
    let rule = &model.rule;
    let mut s = String::new();
    let _ = writeln!(s, "{MODEL_HEADER}");
    let _ = writeln!(s, "p {}", rule.dim());
    let _ = writeln!(s, "alpha {}", format_exact(model.config.alpha));
    let _ = writeln!(s, "M1 {}", format_exact(model.config.m1));
    let _ = writeln!(s, "M2 {}", format_exact(model.config.m2));
    let _ = writeln!(s, "c {}", format_exact(rule.cutoff()));
    let _ = writeln!(s, "degenerate {}", rule.is_degenerate());
    for &w in rule.weights() {
        let _ = writeln!(s, "{}", format_exact(w));
    }
    if let Some(r) = &model.report {
        for (k, v) in r.to_lines() {
            let _ = writeln!(s, "# {k} {v}");
        }
    }
    s
}

pub fn write_model<T: Real>(path: &Path, model: &ModelFile<T>) -> Result<()> {
    fs::write(path, format_model(model))?;
    Ok(())
}

/// Non-blank, non-comment lines with their 1-based line numbers.
fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

fn perr(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

fn parse_num<V: std::str::FromStr>(tok: &str, line: usize, what: &str) -> Result<V> {
    tok.parse().map_err(|_| perr(line, format!("{what}: cannot parse `{tok}`")))
}

struct Lines<'a, I: Iterator<Item = (usize, &'a str)>> {
    inner: std::iter::Peekable<I>,
    last: usize,
}

impl<'a, I: Iterator<Item = (usize, &'a str)>> Lines<'a, I> {
    fn next(&mut self, what: &str) -> Result<(usize, &'a str)> {
        match self.inner.next() {
            Some((n, l)) => {
                self.last = n;
                Ok((n, l))
            }
            None => Err(perr(self.last + 1, format!("unexpected end of file, expected {what}"))),
        }
    }

    /// Next line as `key value`, returning the value.
    fn keyed(&mut self, key: &str) -> Result<(usize, &'a str)> {
        let (n, l) = self.next(key)?;
        let mut it = l.splitn(2, char::is_whitespace);
        match (it.next(), it.next()) {
            (Some(k), Some(v)) if k == key => Ok((n, v.trim())),
            _ => Err(perr(n, format!("expected `{key} <value>`, found `{l}`"))),
        }
    }
}

fn lines(text: &str) -> Lines<'_, impl Iterator<Item = (usize, &str)>> {
    Lines {
        inner: content_lines(text).peekable(),
        last: 0,
    }
}

pub fn parse_model<T: Real>(text: &str) -> Result<ModelFile<T>> {
    let mut ls = lines(text);
    let (n, head) = ls.next("header")?;
    if head != MODEL_HEADER {
        return Err(perr(n, format!("expected header `{MODEL_HEADER}`")));
    }
    let (n, v) = ls.keyed("p")?;
    let p: usize = parse_num(v, n, "p")?;
    if p == 0 {
        return Err(perr(n, "p must be positive"));
    }
    let (n, v) = ls.keyed("alpha")?;
    let alpha: f64 = parse_num(v, n, "alpha")?;
    let (n, v) = ls.keyed("M1")?;
    let m1: f64 = parse_num(v, n, "M1")?;
    let (n, v) = ls.keyed("M2")?;
    let m2: f64 = parse_num(v, n, "M2")?;
    let config = ThresholdConfig::new(m1, m2, alpha).map_err(|e| perr(n, e.to_string()))?;
    let (n, v) = ls.keyed("c")?;
    let c: T = parse_num(v, n, "c")?;
    let (dn, v) = ls.keyed("degenerate")?;
    let degenerate: bool = parse_num(v, dn, "degenerate")?;
    let mut w = Vec::with_capacity(p);
    for j in 0..p {
        let (n, v) = ls.next(&format!("weight {}", j + 1))?;
        w.push(parse_num::<T>(v, n, "weight")?);
    }
    if let Some((n, l)) = ls.inner.next() {
        return Err(perr(n, format!("unexpected content after {p} weights: `{l}`")));
    }
    if w.iter().chain([&c]).any(|v| !v.is_finite()) {
        return Err(perr(dn, "non-finite rule coefficient"));
    }
    let rule = LinearRule::new(w, c);
    if rule.is_degenerate() != degenerate {
        return Err(perr(dn, "degenerate flag disagrees with the weights"));
    }
    Ok(ModelFile {
        config,
        rule,
        report: None,
    })
}

pub fn read_model<T: Real>(path: &Path) -> Result<ModelFile<T>> {
    parse_model(&fs::read_to_string(path)?)
}

fn format_matrix_lines<T: Real>(s: &mut String, cov: &SparseSymMatrix<T>) {
    let _ = write!(s, "diag");
    for &d in cov.diagonal() {
        let _ = write!(s, " {}", format_exact(d));
    }
    let _ = writeln!(s);
    for &(i, j, v) in cov.off_diagonal() {
        let _ = writeln!(s, "offdiag {} {} {}", i + 1, j + 1, format_exact(v));
    }
}

fn parse_vector<T: Real>(tokens: &str, p: usize, line: usize, what: &str) -> Result<Vec<T>> {
    let v: Vec<T> = tokens
        .split_whitespace()
        .map(|t| parse_num(t, line, what))
        .collect::<Result<_>>()?;
    if v.len() != p {
        return Err(perr(line, format!("{what}: {} values, expected {p}", v.len())));
    }
    Ok(v)
}

/// Parses the `diag` line and any `offdiag i j v` lines (1-based indices).
fn parse_matrix_lines<'a, T: Real, I: Iterator<Item = (usize, &'a str)>>(
    ls: &mut Lines<'a, I>,
    p: usize,
) -> Result<SparseSymMatrix<T>> {
    let (n, v) = ls.keyed("diag")?;
    let diag = parse_vector(v, p, n, "diag")?;
    let mut off = Vec::new();
    let mut last = n;
    for (n, l) in ls.inner.by_ref() {
        last = n;
        let toks: Vec<&str> = l.split_whitespace().collect();
        if toks.len() != 4 || toks[0] != "offdiag" {
            return Err(perr(n, format!("expected `offdiag i j value`, found `{l}`")));
        }
        let i: usize = parse_num(toks[1], n, "row index")?;
        let j: usize = parse_num(toks[2], n, "column index")?;
        if i == 0 || j == 0 || i > p || j > p {
            return Err(perr(n, format!("index ({i}, {j}) outside 1..={p}")));
        }
        off.push((i - 1, j - 1, parse_num::<T>(toks[3], n, "value")?));
    }
    SparseSymMatrix::new(diag, off).map_err(|e| perr(last, e.to_string()))
}

pub fn format_covariance<T: Real>(cov: &SparseSymMatrix<T>) -> String {
    let mut s = format!("{COVARIANCE_HEADER}\np {}\n", cov.dim());
    format_matrix_lines(&mut s, cov);
    s
}

pub fn parse_covariance<T: Real>(text: &str) -> Result<SparseSymMatrix<T>> {
    let mut ls = lines(text);
    let (n, head) = ls.next("header")?;
    if head != COVARIANCE_HEADER {
        return Err(perr(n, format!("expected header `{COVARIANCE_HEADER}`")));
    }
    let (n, v) = ls.keyed("p")?;
    let p: usize = parse_num(v, n, "p")?;
    parse_matrix_lines(&mut ls, p)
}

pub fn write_covariance<T: Real>(path: &Path, cov: &SparseSymMatrix<T>) -> Result<()> {
    fs::write(path, format_covariance(cov))?;
    Ok(())
}

pub fn read_covariance<T: Real>(path: &Path) -> Result<SparseSymMatrix<T>> {
    parse_covariance(&fs::read_to_string(path)?)
}

pub fn format_population<T: Real>(pop: &PopulationSpec<T>) -> String {
    let mut s = format!("{POPULATION_HEADER}\np {}\nclasses {}\n", pop.p(), pop.num_classes());
    match pop.distribution() {
        Distribution::Normal => s.push_str("distribution normal\n"),
        Distribution::StudentT { df } => {
            let _ = writeln!(s, "distribution student_t {df}");
        }
    }
    for k in 1..=pop.num_classes() {
        let _ = write!(s, "mean {k}");
        for &m in pop.mean(k) {
            let _ = write!(s, " {}", format_exact(m));
        }
        let _ = writeln!(s);
    }
    format_matrix_lines(&mut s, pop.covariance());
    s
}

pub fn parse_population<T: Real>(text: &str) -> Result<PopulationSpec<T>> {
    let mut ls = lines(text);
    let (n, head) = ls.next("header")?;
    if head != POPULATION_HEADER {
        return Err(perr(n, format!("expected header `{POPULATION_HEADER}`")));
    }
    let (n, v) = ls.keyed("p")?;
    let p: usize = parse_num(v, n, "p")?;
    let (n, v) = ls.keyed("classes")?;
    let k: usize = parse_num(v, n, "classes")?;
    let (dn, v) = ls.keyed("distribution")?;
    let toks: Vec<&str> = v.split_whitespace().collect();
    let distribution = match toks.as_slice() {
        ["normal"] => Distribution::Normal,
        ["student_t", df] => Distribution::StudentT {
            df: parse_num(df, dn, "degrees of freedom")?,
        },
        _ => return Err(perr(dn, format!("unknown distribution `{v}`"))),
    };
    let mut means = Vec::with_capacity(k);
    for idx in 1..=k {
        let (n, v) = ls.keyed("mean")?;
        let (label, rest) = v.split_once(char::is_whitespace).unwrap_or((v, ""));
        let label: usize = parse_num(label, n, "mean class")?;
        if label != idx {
            return Err(perr(n, format!("expected mean {idx}, found mean {label}")));
        }
        means.push(parse_vector(rest, p, n, "mean")?);
    }
    let cov = parse_matrix_lines(&mut ls, p)?;
    PopulationSpec::new(means, cov, distribution).map_err(|e| perr(dn, e.to_string()))
}

pub fn write_population<T: Real>(path: &Path, pop: &PopulationSpec<T>) -> Result<()> {
    fs::write(path, format_population(pop))?;
    Ok(())
}

pub fn read_population<T: Real>(path: &Path) -> Result<PopulationSpec<T>> {
    parse_population(&fs::read_to_string(path)?)
}
