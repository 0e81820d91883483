//! The five pipelines. Each returns its artifacts; nothing touches the disk
//! until [`crate::output::write_artifacts`].

use std::time::{SystemTime, UNIX_EPOCH};

use fredholm::baselines::{true_ratio, DensitySpec, LSIF_LAMBDAS, TIKDE_RELATIVE_THRESHOLDS};
use fredholm::data::{label_resample, load_csv, pca_resample, simulate};
use fredholm::downstream::{eval_metrics, weighted_linear_svm, weighted_ols, Metrics, Task, WeightedModel};
use fredholm::estimators::{Fire, FireSetting, LsifEstimator, RatioEstimator, TikdeEstimator};
use fredholm::kernel::bandwidth_grid;
use fredholm::rng::{derive_seed, permutation, stage_rng};
use fredholm::selection::{
    j_score, kfold_cv, make_validation_set, oracle_select, CvOptions, CvResult, ValidationFamily, ValidationSet,
};
use fredholm::solvers::DEFAULT_LAMBDAS;
use fredholm::{clamp_nonnegative, KernelSpec, SampleMatrix};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{
    BenchMethod, DataSource, DownstreamConfig, ExperimentConfig, MethodConfig, ResampleConfig, SettingConfig,
    WeightSource, SCHEMA_VERSION,
};
use crate::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Estimate,
    Cv,
    Simulate,
    Downstream,
    Resample,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Self::Estimate => "estimate",
            Self::Cv => "cv",
            Self::Simulate => "simulate",
            Self::Downstream => "downstream",
            Self::Resample => "resample",
        }
    }
}

/// A named output file.
#[derive(Clone, Debug, PartialEq)]
pub struct Artifact {
    pub name: String,
    pub bytes: Vec<u8>,
}

impl Artifact {
    fn new(name: &str, bytes: Vec<u8>) -> Self {
        Self {
            name: name.to_string(),
            bytes,
        }
    }
}

fn config_error(reason: impl Into<String>) -> CliError {
    CliError::Config(reason.into())
}

/// Run `command` and return its artifacts: `result.json` (envelope with
/// schema version, timestamp, config echo and result), `config.json`, and
/// command-specific CSVs.
pub fn run(command: Command, cfg: &ExperimentConfig) -> Result<Vec<Artifact>, CliError> {
    // Sequential dense kernels keep floating-point results independent of the
    // thread count; parallelism comes from rayon over grid cells and trials.
    faer::set_global_parallelism(faer::Par::Seq);
    cfg.validate()?;
    let (result, mut artifacts) = match command {
        Command::Estimate => estimate(cfg)?,
        Command::Cv => cross_validate(cfg)?,
        Command::Simulate => bench(cfg)?,
        Command::Downstream => downstream(cfg)?,
        Command::Resample => resample(cfg)?,
    };
    let timestamp = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
    let envelope = json!({
        "schema_version": SCHEMA_VERSION,
        "command": command.name(),
        "timestamp_unix": timestamp,
        "config": cfg,
        "result": result,
    });
    artifacts.push(Artifact::new("result.json", pretty(&envelope)?));
    artifacts.push(Artifact::new("config.json", pretty(cfg)?));
    Ok(artifacts)
}

fn pretty<T: Serialize>(v: &T) -> Result<Vec<u8>, CliError> {
    let mut out = serde_json::to_vec_pretty(v).map_err(|e| CliError::Output(e.to_string()))?;
    out.push(b'\n');
    Ok(out)
}

struct Loaded {
    x: SampleMatrix,
    labels: Option<Vec<String>>,
    density: Option<DensitySpec>,
}

fn load(src: Option<&DataSource>, role: &str, seed: u64) -> Result<Loaded, CliError> {
    match src {
        None => Err(config_error(format!("missing data source for {role}"))),
        Some(DataSource::Csv { path, label_column }) => {
            let t = load_csv(path, *label_column)?;
            Ok(Loaded {
                x: t.features,
                labels: t.labels,
                density: None,
            })
        }
        Some(DataSource::Density { density, n }) => {
            let n = n.ok_or_else(|| config_error(format!("{role}.n is required for a density source")))?;
            Ok(Loaded {
                x: simulate(density, n, derive_seed(seed, &format!("sample-{role}")))?,
                labels: None,
                density: Some(density.clone()),
            })
        }
    }
}

fn load_pair(cfg: &ExperimentConfig) -> Result<(Loaded, Loaded), CliError> {
    let p = load(cfg.p.as_ref(), "p", cfg.seed)?;
    let q = load(cfg.q.as_ref(), "q", cfg.seed)?;
    if p.x.ncols() != q.x.ncols() {
        return Err(config_error(format!(
            "p has {} features but q has {}",
            p.x.ncols(),
            q.x.ncols()
        )));
    }
    Ok((p, q))
}

/// What the second grid axis means for a method.
#[derive(Clone, Copy, Debug, Serialize)]
#[serde(rename_all = "snake_case")]
enum ParamKind {
    Lambda,
    Epsilon,
    CutoffK,
}

struct Method {
    estimator: Box<dyn RatioEstimator>,
    params: Vec<f64>,
    kind: ParamKind,
}

fn fire_setting(setting: &SettingConfig, q_density: Option<&DensitySpec>) -> Result<FireSetting, CliError> {
    Ok(match setting {
        SettingConfig::Type1 => FireSetting::Type1,
        SettingConfig::Combined { gamma } => FireSetting::Combined { gamma: *gamma },
        SettingConfig::RkhsLoss => FireSetting::RkhsLoss,
        SettingConfig::Type15 { bandwidth_ratio } => FireSetting::Type15 {
            bandwidth_ratio: *bandwidth_ratio,
        },
        SettingConfig::Type2 => FireSetting::Type2 {
            q: q_density
                .cloned()
                .ok_or_else(|| config_error("type2 needs q given as a density"))?,
        },
        SettingConfig::Spectral => FireSetting::Spectral,
    })
}

fn lambdas(cfg: &ExperimentConfig, default: &[f64]) -> Vec<f64> {
    cfg.grid.lambda.clone().unwrap_or_else(|| default.to_vec())
}

fn fire_method(cfg: &ExperimentConfig, setting: &SettingConfig, width: f64, q: Option<&DensitySpec>) -> Result<Method, CliError> {
    let fire = Fire {
        setting: fire_setting(setting, q)?,
        rkhs_width_factor: width,
    };
    let (params, kind) = if matches!(setting, SettingConfig::Spectral) {
        let cutoffs = cfg
            .grid
            .cutoff_k
            .clone()
            .unwrap_or_else(|| vec![1, 2, 3, 5, 10, 20, 50, 100]);
        (cutoffs.into_iter().map(|c| c as f64).collect(), ParamKind::CutoffK)
    } else {
        (lambdas(cfg, &DEFAULT_LAMBDAS), ParamKind::Lambda)
    };
    Ok(Method {
        estimator: Box::new(fire),
        params,
        kind,
    })
}

fn method(cfg: &ExperimentConfig, which: &MethodConfig, q: Option<&DensitySpec>) -> Result<Method, CliError> {
    match which {
        MethodConfig::Fire {
            setting,
            rkhs_width_factor,
        } => fire_method(cfg, setting, *rkhs_width_factor, q),
        MethodConfig::Tikde => Ok(Method {
            estimator: Box::new(TikdeEstimator),
            params: cfg
                .grid
                .epsilon
                .clone()
                .unwrap_or_else(|| TIKDE_RELATIVE_THRESHOLDS.to_vec()),
            kind: ParamKind::Epsilon,
        }),
        MethodConfig::Lsif => Ok(Method {
            estimator: Box::new(LsifEstimator),
            params: lambdas(cfg, &LSIF_LAMBDAS),
            kind: ParamKind::Lambda,
        }),
    }
}

fn t_grid(cfg: &ExperimentConfig, z_p: &SampleMatrix, z_q: &SampleMatrix) -> Result<Vec<f64>, CliError> {
    match &cfg.grid.t {
        Some(t) => Ok(t.clone()),
        None => Ok(bandwidth_grid(&z_p.concat(z_q)?)?.grid),
    }
}

fn validation_set(
    cfg: &ExperimentConfig,
    classification: bool,
    z_q: &SampleMatrix,
    t0: f64,
) -> Result<ValidationSet, CliError> {
    let family = cfg.validation.family.unwrap_or(if classification {
        ValidationFamily::Halfspace
    } else {
        ValidationFamily::Linear
    });
    let seed = cfg.validation.seed.unwrap_or_else(|| derive_seed(cfg.seed, "validation"));
    let (anchors, kernel) = if family.needs_anchors() {
        let mut idx = permutation(z_q.nrows(), &mut stage_rng(seed, "anchors"));
        idx.truncate(cfg.validation.anchors);
        idx.sort_unstable();
        (Some(z_q.select_rows(&idx)?), Some(KernelSpec::gaussian(t0)?))
    } else {
        (None, None)
    };
    Ok(make_validation_set(
        family,
        z_q.ncols(),
        cfg.validation.count,
        seed,
        anchors.as_ref(),
        kernel.as_ref(),
    )?)
}

fn cv_options(cfg: &ExperimentConfig) -> CvOptions {
    CvOptions {
        folds: cfg.cv.folds,
        seed: derive_seed(cfg.seed, "cv"),
        max_p: cfg.cv.max_p,
        max_q: cfg.cv.max_q,
    }
}

struct Selection {
    cv: CvResult,
    t_grid: Vec<f64>,
    method: Method,
    validation: ValidationSet,
}

fn select(cfg: &ExperimentConfig, p: &Loaded, q: &Loaded, classification: bool) -> Result<Selection, CliError> {
    let method = method(cfg, &cfg.method, q.density.as_ref())?;
    let t_grid = t_grid(cfg, &p.x, &q.x)?;
    let validation = validation_set(cfg, classification, &q.x, t_grid[0])?;
    let cv = kfold_cv(
        &p.x,
        &q.x,
        method.estimator.as_ref(),
        &t_grid,
        &method.params,
        &validation,
        &cv_options(cfg),
    )?;
    if !cv.selected_cell().mean_score.is_finite() {
        return Err(CliError::Numerical("every cross-validation cell failed".into()));
    }
    Ok(Selection {
        cv,
        t_grid,
        method,
        validation,
    })
}

fn fit_selected(sel: &Selection, z_p: &SampleMatrix, z_q: &SampleMatrix) -> Result<fredholm::estimators::BoxedModel, CliError> {
    let cell = sel.cv.selected_cell();
    let mut models = sel.method.estimator.fit_grid(z_p, z_q, cell.t, &[cell.param])?;
    Ok(models.remove(0)?)
}

fn selection_json(sel: &Selection) -> Value {
    let cell = sel.cv.selected_cell();
    json!({
        "method": sel.method.estimator.name(),
        "parameter_kind": sel.method.kind,
        "selected_t": cell.t,
        "selected_lambda": cell.param,
        "selected_score": cell.mean_score,
        "t_grid": sel.t_grid,
        "parameter_grid": sel.method.params,
        "validation": {
            "family": sel.validation.family(),
            "count": sel.validation.len(),
            "seed": sel.validation.seed(),
        },
        "fold_count": sel.cv.fold_count,
        "cv_surface": sel.cv.cells,
    })
}

fn column_csv(header: &str, values: &[f64]) -> Vec<u8> {
    let mut s = format!("{header}\n");
    for v in values {
        s.push_str(&format!("{v:?}\n"));
    }
    s.into_bytes()
}

fn matrix_csv(x: &SampleMatrix, labels: Option<&[String]>) -> Result<Vec<u8>, CliError> {
    let mut buf = Vec::new();
    fredholm::data::write_csv(&mut buf, x, labels)?;
    Ok(buf)
}

fn summary(values: &[f64]) -> Value {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    json!({"mean": mean, "min": min, "max": max})
}

type Output = (Value, Vec<Artifact>);

fn estimate(cfg: &ExperimentConfig) -> Result<Output, CliError> {
    let (p, q) = load_pair(cfg)?;
    let sel = select(cfg, &p, &q, false)?;
    let model = fit_selected(&sel, &p.x, &q.x)?;
    let weights = model.evaluate(&p.x)?;
    let mut artifacts = vec![Artifact::new("weights.csv", column_csv("weight", &weights))];
    let mut result = selection_json(&sel);
    result["n_p"] = json!(p.x.nrows());
    result["n_q"] = json!(q.x.nrows());
    result["weights_path"] = json!("weights.csv");
    result["weights_summary"] = summary(&weights);
    result["coefficients"] = json!(model.coefficients());
    result["centers_path"] = match model.centers() {
        Some(c) => {
            artifacts.push(Artifact::new("centers.csv", matrix_csv(c, None)?));
            json!("centers.csv")
        }
        None => Value::Null,
    };
    Ok((result, artifacts))
}

/// Seeded split of `0..n` into a selection part of `round(fraction·n)` rows
/// and the remainder; both parts nonempty.
fn split(n: usize, fraction: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>), CliError> {
    let k = ((n as f64) * fraction).round() as usize;
    if k == 0 || k >= n {
        return Err(config_error(format!(
            "cv.cv_fraction {fraction} leaves an empty part of a {n}-point sample"
        )));
    }
    let mut perm = permutation(n, &mut stage_rng(seed, "holdout"));
    let mut rest = perm.split_off(k);
    perm.sort_unstable();
    rest.sort_unstable();
    Ok((perm, rest))
}

/// Select on a `cv_fraction` share of both samples, then score the selected
/// estimator with `J` on the held-out remainder.
fn cross_validate(cfg: &ExperimentConfig) -> Result<Output, CliError> {
    let (p, q) = load_pair(cfg)?;
    let (p_cv, p_err) = split(p.x.nrows(), cfg.cv.cv_fraction, derive_seed(cfg.seed, "split-p"))?;
    let (q_cv, q_err) = split(q.x.nrows(), cfg.cv.cv_fraction, derive_seed(cfg.seed, "split-q"))?;
    let p_sel = Loaded {
        x: p.x.select_rows(&p_cv)?,
        labels: None,
        density: p.density.clone(),
    };
    let q_sel = Loaded {
        x: q.x.select_rows(&q_cv)?,
        labels: None,
        density: q.density.clone(),
    };
    let sel = select(cfg, &p_sel, &q_sel, false)?;
    let model = fit_selected(&sel, &p_sel.x, &q_sel.x)?;
    let p_hold = p.x.select_rows(&p_err)?;
    let q_hold = q.x.select_rows(&q_err)?;
    let f_hold = model.evaluate(&p_hold)?;
    let u_p = sel.validation.evaluate(&p_hold)?;
    let u_q = sel.validation.evaluate(&q_hold)?;
    let mut result = selection_json(&sel);
    result["n_selection"] = json!({"p": p_cv.len(), "q": q_cv.len()});
    result["n_holdout"] = json!({"p": p_err.len(), "q": q_err.len()});
    result["holdout_j"] = json!(j_score(&f_hold, u_p.as_ref(), u_q.as_ref())?);
    result["holdout_l2_to_truth"] = match (&p.density, &q.density) {
        (Some(pd), Some(qd)) => {
            let truth = true_ratio(pd.clone(), qd.clone())?;
            let r = fredholm::RatioModel::evaluate(&truth, &p_hold)?;
            json!(fredholm::selection::l2_error(&f_hold, &r))
        }
        _ => Value::Null,
    };
    Ok((result, Vec::new()))
}

#[derive(Serialize)]
struct BenchRow {
    method: String,
    n: usize,
    rep: usize,
    t: f64,
    param: f64,
    l2_error: f64,
}

fn bench(cfg: &ExperimentConfig) -> Result<Output, CliError> {
    let b = cfg
        .bench
        .as_ref()
        .ok_or_else(|| config_error("simulate needs a bench section"))?;
    let densities = |src: &Option<DataSource>, role: &str| match src {
        Some(DataSource::Density { density, n }) => Ok((density.clone(), *n)),
        _ => Err(config_error(format!("simulate needs {role} given as a density"))),
    };
    let (pd, _) = densities(&cfg.p, "p")?;
    let (qd, m) = densities(&cfg.q, "q")?;
    let m = m.ok_or_else(|| config_error("q.n is required"))?;
    let truth = true_ratio(pd.clone(), qd.clone())?;
    let fire_cfg = match &cfg.method {
        m @ MethodConfig::Fire { .. } => m.clone(),
        _ => MethodConfig::default(),
    };
    let methods: Vec<(String, Method)> = b
        .methods
        .iter()
        .map(|bm| {
            let which = match bm {
                BenchMethod::Fire => fire_cfg.clone(),
                BenchMethod::Tikde => MethodConfig::Tikde,
                BenchMethod::Lsif => MethodConfig::Lsif,
            };
            let m = method(cfg, &which, Some(&qd))?;
            Ok((m.estimator.name(), m))
        })
        .collect::<Result<_, CliError>>()?;

    let trials: Vec<(usize, usize)> = b
        .ladder
        .iter()
        .flat_map(|&n| (0..b.reps).map(move |r| (n, r)))
        .collect();
    let rows: Vec<Vec<BenchRow>> = trials
        .par_iter()
        .map(|&(n, rep)| {
            let s = derive_seed(cfg.seed, &format!("bench/{n}/{rep}"));
            let z_p = simulate(&pd, n, derive_seed(s, "p"))?;
            let z_q = simulate(&qd, m, derive_seed(s, "q"))?;
            let eval = simulate(&pd, b.eval_points, derive_seed(s, "eval"))?;
            let r = fredholm::RatioModel::evaluate(&truth, &eval)?;
            let grid = t_grid(cfg, &z_p, &z_q)?;
            methods
                .iter()
                .map(|(name, m)| {
                    let (t, param, l2_error) =
                        match oracle_select(&z_p, &z_q, m.estimator.as_ref(), &grid, &m.params, &eval, &r) {
                            Ok(c) => (c.t, c.param, c.error),
                            Err(fredholm::Error::Numerical(_)) => (f64::NAN, f64::NAN, f64::INFINITY),
                            Err(e) => return Err(e.into()),
                        };
                    Ok(BenchRow {
                        method: name.clone(),
                        n,
                        rep,
                        t,
                        param,
                        l2_error,
                    })
                })
                .collect::<Result<Vec<_>, CliError>>()
        })
        .collect::<Result<_, CliError>>()?;
    let rows: Vec<BenchRow> = rows.into_iter().flatten().collect();

    let mut csv = String::from("method,n,rep,t,param,l2_error\n");
    for r in &rows {
        csv.push_str(&format!("{},{},{},{:?},{:?},{:?}\n", r.method, r.n, r.rep, r.t, r.param, r.l2_error));
    }
    let mut medians = Vec::new();
    for (name, _) in &methods {
        for &n in &b.ladder {
            let mut errs: Vec<f64> = rows
                .iter()
                .filter(|r| &r.method == name && r.n == n)
                .map(|r| r.l2_error)
                .collect();
            errs.sort_by(f64::total_cmp);
            medians.push(json!({"method": name, "n": n, "median_l2_error": median(&errs), "trials": errs.len()}));
        }
    }
    let result = json!({
        "rows_path": "bench.csv",
        "rows": rows.len(),
        "medians": medians,
    });
    Ok((result, vec![Artifact::new("bench.csv", csv.into_bytes())]))
}

/// Median of a sorted slice.
pub fn median(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n == 0 {
        return f64::NAN;
    }
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

fn encode_labels(d: &DownstreamConfig, p: &[String], q: Option<&[String]>) -> Result<(Vec<f64>, Option<Vec<f64>>), CliError> {
    match d.task {
        Task::Regression => {
            let parse = |ls: &[String]| -> Result<Vec<f64>, CliError> {
                ls.iter()
                    .map(|l| {
                        l.parse::<f64>()
                            .ok()
                            .filter(|v| v.is_finite())
                            .ok_or_else(|| config_error(format!("regression label {l:?} is not a number")))
                    })
                    .collect()
            };
            Ok((parse(p)?, q.map(parse).transpose()?))
        }
        Task::BinaryClassification => {
            let mut distinct: Vec<&String> = p.iter().chain(q.into_iter().flatten()).collect();
            distinct.sort();
            distinct.dedup();
            if distinct.len() != 2 {
                return Err(config_error(format!(
                    "binary classification needs exactly two labels, found {}",
                    distinct.len()
                )));
            }
            let positive = match &d.positive_label {
                Some(l) if distinct.contains(&l) => l.clone(),
                Some(l) => return Err(config_error(format!("positive_label {l:?} does not occur in the data"))),
                None => distinct[1].clone(),
            };
            let enc = |ls: &[String]| ls.iter().map(|l| if *l == positive { 1.0 } else { -1.0 }).collect();
            Ok((enc(p), q.map(enc)))
        }
    }
}

#[derive(Serialize)]
struct DownstreamRow {
    size: usize,
    method: &'static str,
    beta: Vec<f64>,
    metrics: Option<Metrics>,
}

fn downstream(cfg: &ExperimentConfig) -> Result<Output, CliError> {
    let d = cfg
        .downstream
        .as_ref()
        .ok_or_else(|| config_error("downstream needs a downstream section"))?;
    let (p, q) = load_pair(cfg)?;
    let p_labels = p
        .labels
        .as_deref()
        .ok_or_else(|| config_error("downstream needs labeled p data (p.label_column)"))?;
    let (y_p, y_q) = encode_labels(d, p_labels, q.labels.as_deref())?;
    let available = p.x.nrows();
    if let Some(&k) = d.ladder.iter().find(|&&k| k > available) {
        return Err(config_error(format!(
            "ladder size {k} exceeds the {available} labeled rows available"
        )));
    }
    let classification = d.task == Task::BinaryClassification;
    let (weights, ratio) = match d.weights {
        WeightSource::Uniform => (vec![1.0; available], Value::Null),
        WeightSource::Estimated => {
            let sel = select(cfg, &p, &q, classification)?;
            let model = fit_selected(&sel, &p.x, &q.x)?;
            let mut w = model.evaluate(&p.x)?;
            clamp_nonnegative(&mut w);
            (w, selection_json(&sel))
        }
    };
    let order = permutation(available, &mut stage_rng(cfg.seed, "downstream-order"));
    let fit = |x: &SampleMatrix, y: &[f64], w: &[f64]| -> Result<WeightedModel, CliError> {
        if w.iter().all(|v| *v == 0.0) {
            return Err(CliError::Numerical("every estimated weight on the training subset is zero".into()));
        }
        Ok(match d.task {
            Task::Regression => weighted_ols(x, y, w)?,
            Task::BinaryClassification => weighted_linear_svm(x, y, w, d.c, d.epochs)?.model,
        })
    };
    let mut rows = Vec::new();
    for &k in &d.ladder {
        let idx = &order[..k];
        let x = p.x.select_rows(idx)?;
        let y: Vec<f64> = idx.iter().map(|&i| y_p[i]).collect();
        let w: Vec<f64> = idx.iter().map(|&i| weights[i]).collect();
        for (name, model) in [("unweighted", fit(&x, &y, &vec![1.0; k])?), ("weighted", fit(&x, &y, &w)?)] {
            let metrics = match &y_q {
                Some(yq) => Some(eval_metrics(&model, &q.x, yq)?),
                None => None,
            };
            rows.push(DownstreamRow {
                size: k,
                method: name,
                beta: model.beta,
                metrics,
            });
        }
    }
    let result = json!({
        "task": d.task,
        "weights": d.weights,
        "weights_summary": summary(&weights),
        "ratio": ratio,
        "rows": rows,
    });
    Ok((result, vec![Artifact::new("weights.csv", column_csv("weight", &weights))]))
}

fn resample(cfg: &ExperimentConfig) -> Result<Output, CliError> {
    let spec = cfg
        .resample
        .as_ref()
        .ok_or_else(|| config_error("resample needs a resample section"))?;
    let p = load(cfg.p.as_ref(), "p", cfg.seed)?;
    let labels = p.labels.as_deref();
    let out = match spec {
        ResampleConfig::Pca { a, b } => pca_resample(&p.x, labels, *a, *b, derive_seed(cfg.seed, "resample"))?,
        ResampleConfig::Label { keep } => {
            let labels = labels.ok_or_else(|| config_error("label resampling needs p.label_column"))?;
            label_resample(&p.x, labels, keep)?
        }
    };
    let mut artifacts = vec![Artifact::new(
        "selected.csv",
        matrix_csv(&out.features, out.labels.as_deref())?,
    )];
    let rest: Vec<usize> = (0..p.x.nrows()).filter(|i| out.kept.binary_search(i).is_err()).collect();
    if !rest.is_empty() {
        let rest_labels: Option<Vec<String>> = labels.map(|l| rest.iter().map(|&i| l[i].clone()).collect());
        artifacts.push(Artifact::new(
            "complement.csv",
            matrix_csv(&p.x.select_rows(&rest)?, rest_labels.as_deref())?,
        ));
    }
    let result = json!({
        "n_input": p.x.nrows(),
        "n_selected": out.kept.len(),
        "selected_rows": out.kept,
        "selected_path": "selected.csv",
        "complement_path": if rest.is_empty() { Value::Null } else { json!("complement.csv") },
    });
    Ok((result, artifacts))
}
