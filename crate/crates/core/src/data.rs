//! Data ingestion, principal-component resampling and analytic simulators.

use std::collections::HashSet;
use std::io::{Read, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::baselines::DensitySpec;
use crate::error::{invalid, Error, Result};
use crate::linalg::sym_eigen;
use crate::rng::keyed_uniform;
use crate::sample::SampleMatrix;

#[derive(Clone, Debug)]
pub struct Table {
    pub features: SampleMatrix,
    pub labels: Option<Vec<String>>,
    pub header: Option<Vec<String>>,
}

/// Read a comma-separated numeric table. A first line with any non-numeric
/// feature cell is taken as a header. `label_column` is split out verbatim.
pub fn load_csv(path: &Path, label_column: Option<usize>) -> Result<Table> {
    let file = std::fs::File::open(path)?;
    parse_csv(file, &path.display().to_string(), label_column)
}

pub fn parse_csv(reader: impl Read, source: &str, label_column: Option<usize>) -> Result<Table> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let parse_err = |line: usize, reason: String| Error::Parse {
        path: source.to_string(),
        line,
        reason,
    };
    let mut width = None;
    let mut header = None;
    let mut data = Vec::new();
    let mut labels = Vec::new();
    let mut rows = 0usize;
    for (idx, record) in rdr.records().enumerate() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(idx + 1, |p| p.line() as usize);
            parse_err(line, e.to_string())
        })?;
        let line = record.position().map_or(idx + 1, |p| p.line() as usize);
        let w = *width.get_or_insert(record.len());
        if record.len() != w {
            return Err(parse_err(line, format!("expected {w} fields, found {}", record.len())));
        }
        if let Some(c) = label_column {
            if c >= w {
                return Err(invalid("label_column", format!("column {c} out of range for {w} columns")));
            }
        }
        let is_feature = |j: usize| Some(j) != label_column;
        let parsed: Vec<Option<f64>> = record
            .iter()
            .enumerate()
            .map(|(j, cell)| if is_feature(j) { cell.parse::<f64>().ok() } else { Some(0.0) })
            .collect();
        if idx == 0 && parsed.iter().any(Option::is_none) {
            header = Some(record.iter().map(str::to_string).collect());
            continue;
        }
        for (j, (cell, value)) in record.iter().zip(&parsed).enumerate() {
            if !is_feature(j) {
                labels.push(cell.to_string());
                continue;
            }
            match value {
                Some(v) if v.is_finite() => data.push(*v),
                _ => return Err(parse_err(line, format!("column {j}: `{cell}` is not a finite number"))),
            }
        }
        rows += 1;
    }
    let w = width.ok_or_else(|| Error::Empty(format!("{source}: no rows")))?;
    if rows == 0 {
        return Err(Error::Empty(format!("{source}: no data rows")));
    }
    let d = w - usize::from(label_column.is_some());
    if d == 0 {
        return Err(Error::Empty(format!("{source}: no feature columns")));
    }
    Ok(Table {
        features: SampleMatrix::new(data, rows, d)?,
        labels: label_column.map(|_| labels),
        header,
    })
}

/// Write features (and labels as a trailing column) as CSV.
pub fn write_csv(writer: impl Write, features: &SampleMatrix, labels: Option<&[String]>) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let map_err = |e: csv::Error| Error::Io(std::io::Error::other(e));
    for (i, row) in features.rows().enumerate() {
        let mut cells: Vec<String> = row.iter().map(|v| format!("{v:?}")).collect();
        if let Some(l) = labels {
            cells.push(l[i].clone());
        }
        w.write_record(&cells).map_err(map_err)?;
    }
    w.flush()?;
    Ok(())
}

/// First principal direction of the mean-centered sample, with the
/// population (`1/n`) standard deviation of the projections onto it.
#[derive(Clone, Debug, PartialEq)]
pub struct PrincipalComponent {
    pub direction: Vec<f64>,
    pub sd: f64,
    pub mean: Vec<f64>,
}

impl PrincipalComponent {
    pub fn project(&self, x: &[f64]) -> f64 {
        x.iter()
            .zip(&self.mean)
            .zip(&self.direction)
            .map(|((xi, mi), ei)| (xi - mi) * ei)
            .sum()
    }
}

pub fn first_pc(x: &SampleMatrix) -> Result<PrincipalComponent> {
    let n = x.nrows();
    if n < 2 {
        return Err(invalid("x", "need at least two rows"));
    }
    let d = x.ncols();
    let mean = x.column_means();
    let mut cov = faer::Mat::<f64>::zeros(d, d);
    for row in x.rows() {
        for a in 0..d {
            let da = row[a] - mean[a];
            for b in 0..=a {
                cov[(a, b)] += da * (row[b] - mean[b]);
            }
        }
    }
    for a in 0..d {
        for b in 0..=a {
            let v = cov[(a, b)] / n as f64;
            cov[(a, b)] = v;
            cov[(b, a)] = v;
        }
    }
    let eig = sym_eigen(cov.as_ref())?;
    let direction: Vec<f64> = eig.vectors.col(0).iter().copied().collect();
    let mut pc = PrincipalComponent {
        direction,
        sd: 0.0,
        mean,
    };
    let var = x.rows().map(|r| pc.project(r).powi(2)).sum::<f64>() / n as f64;
    pc.sd = var.sqrt();
    if !(pc.sd > 0.0) || eig.values[0] <= 0.0 {
        return Err(Error::Degenerate("zero covariance: all points coincide".into()));
    }
    Ok(pc)
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

#[derive(Clone, Debug)]
pub struct Resampled {
    pub features: SampleMatrix,
    pub labels: Option<Vec<String>>,
    /// Indices of kept rows in the input.
    pub kept: Vec<usize>,
}

/// Selection probability `sigmoid((a⟨x − x̄, e₁⟩ − b) / σ_v)`.
pub fn pca_keep_probability(pc: &PrincipalComponent, x: &[f64], a: f64, b: f64) -> f64 {
    sigmoid((a * pc.project(x) - b) / pc.sd)
}

/// Keep each row independently with its PCA-sigmoid probability.
pub fn pca_resample(x: &SampleMatrix, labels: Option<&[String]>, a: f64, b: f64, seed: u64) -> Result<Resampled> {
    let pc = first_pc(x)?;
    pca_resample_with(x, labels, &pc, a, b, seed)
}

/// [`pca_resample`] with a precomputed component. Row `i` is kept iff
/// `U(seed, i) < P_i`, so decisions do not depend on other rows.
pub fn pca_resample_with(
    x: &SampleMatrix,
    labels: Option<&[String]>,
    pc: &PrincipalComponent,
    a: f64,
    b: f64,
    seed: u64,
) -> Result<Resampled> {
    if !(pc.sd > 0.0) {
        return Err(Error::Degenerate("projection standard deviation is zero".into()));
    }
    let kept: Vec<usize> = x
        .rows()
        .enumerate()
        .filter(|(i, row)| keyed_uniform(seed, *i as u64) < pca_keep_probability(pc, row, a, b))
        .map(|(i, _)| i)
        .collect();
    subset(x, labels, kept)
}

fn subset(x: &SampleMatrix, labels: Option<&[String]>, kept: Vec<usize>) -> Result<Resampled> {
    if let Some(l) = labels {
        if l.len() != x.nrows() {
            return Err(Error::DimensionMismatch {
                expected: x.nrows(),
                found: l.len(),
            });
        }
    }
    if kept.is_empty() {
        return Err(Error::Empty("resampling kept no rows".into()));
    }
    Ok(Resampled {
        features: x.select_rows(&kept)?,
        labels: labels.map(|l| kept.iter().map(|&i| l[i].clone()).collect()),
        kept,
    })
}

/// Keep exactly the rows whose label is in `keep`.
pub fn label_resample(x: &SampleMatrix, labels: &[String], keep: &[String]) -> Result<Resampled> {
    if keep.is_empty() {
        return Err(invalid("keep", "label subset must be nonempty"));
    }
    let keep: HashSet<&str> = keep.iter().map(String::as_str).collect();
    let kept = labels
        .iter()
        .enumerate()
        .filter(|(_, l)| keep.contains(l.as_str()))
        .map(|(i, _)| i)
        .collect();
    subset(x, Some(labels), kept)
}

/// `n` iid draws from `spec`, deterministic in `seed`.
pub fn simulate(spec: &DensitySpec, n: usize, seed: u64) -> Result<SampleMatrix> {
    Ok(simulate_with_components(spec, n, seed)?.0)
}

/// Like [`simulate`], also returning the top-level mixture component of each
/// draw (always 0 for non-mixtures).
pub fn simulate_with_components(spec: &DensitySpec, n: usize, seed: u64) -> Result<(SampleMatrix, Vec<usize>)> {
    spec.validate()?;
    if n == 0 {
        return Err(invalid("n", "must be at least 1"));
    }
    let d = spec.dimension();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut data = Vec::with_capacity(n * d);
    let mut comps = Vec::with_capacity(n);
    for _ in 0..n {
        comps.push(draw(spec, &mut rng, &mut data));
    }
    Ok((SampleMatrix::new(data, n, d)?, comps))
}

fn draw(spec: &DensitySpec, rng: &mut ChaCha8Rng, out: &mut Vec<f64>) -> usize {
    match spec {
        DensitySpec::Gaussian { mean, sd } => {
            for m in mean {
                let z: f64 = StandardNormal.sample(rng);
                out.push(m + sd * z);
            }
            0
        }
        DensitySpec::Uniform { low, high, dim } => {
            for _ in 0..*dim {
                out.push(rng.random_range(*low..*high));
            }
            0
        }
        DensitySpec::Mixture { weights, components } => {
            let u: f64 = rng.random();
            let mut acc = 0.0;
            let mut pick = components.len() - 1;
            for (i, w) in weights.iter().enumerate() {
                acc += w;
                if u < acc {
                    pick = i;
                    break;
                }
            }
            draw(&components[pick], rng, out);
            pick
        }
    }
}
