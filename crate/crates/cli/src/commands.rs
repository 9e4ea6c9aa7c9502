use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use slda_core::diagnostics::{condition_check, cumulative_proportions, diagnose_dataset, diagnose_population, DiagnosticsParams};
use slda_core::evaluate::{cv_grid_search, default_grids, empirical_rate_labeled};
use slda_core::io::{read_dataset, read_model, read_population, read_table, write_model, ModelFile};
use slda_core::scalar::format_exact;
use slda_core::simulate::{format_replicates_csv, format_summary, load_scenario, preset, run_scenario, PRESET_NAMES};
use slda_core::{build_slda, ThresholdConfig};

use crate::config::{pick, RunConfig};
use crate::{AtStage, CliError, Thresholds};

fn require_file(path: &Path, what: &str) -> Result<(), CliError> {
    if path.is_file() {
        Ok(())
    } else {
        Err(CliError::input("checking paths", format!("{what} `{}` is not a readable file", path.display())))
    }
}

fn require_out_dir(path: &Path) -> Result<(), CliError> {
    match path.parent() {
        Some(d) if !d.as_os_str().is_empty() && !d.is_dir() => Err(CliError::input(
            "checking paths",
            format!("output directory `{}` does not exist", d.display()),
        )),
        _ => Ok(()),
    }
}

fn write_out(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| CliError::input("writing output", format!("{}: {e}", path.display())))
}

fn threshold_config(cfg: &RunConfig, t: &Thresholds) -> Result<ThresholdConfig, CliError> {
    let d = ThresholdConfig::default();
    ThresholdConfig::new(
        pick(t.m1, &cfg.m1).unwrap_or(d.m1),
        pick(t.m2, &cfg.m2).unwrap_or(d.m2),
        pick(t.alpha, &cfg.alpha).unwrap_or(d.alpha),
    )
    .at("reading parameters")
}

pub fn fit(cfg: &RunConfig, train: &Path, t: &Thresholds, out: &Path) -> Result<(), CliError> {
    require_file(train, "training data")?;
    require_out_dir(out)?;
    let config = threshold_config(cfg, t)?;
    let data = read_dataset::<f64>(train).at("reading training data")?;
    if data.num_classes() != 2 {
        return Err(CliError::input(
            "reading training data",
            format!("fit needs two classes, found {}", data.num_classes()),
        ));
    }
    let (rule, report) = build_slda(&data, &config).at("fitting")?;
    write_model(
        out,
        &ModelFile {
            config,
            rule,
            report: Some(report),
        },
    )
    .at("writing model")?;
    for (k, v) in report.to_lines() {
        println!("{k} {v}");
    }
    if report.degenerate {
        eprintln!("slda: warning: every mean difference was thresholded away; the rule assigns everything to class 1");
    }
    Ok(())
}

pub fn predict(model: &Path, test: &Path, score: bool, out: Option<&Path>) -> Result<(), CliError> {
    require_file(model, "model")?;
    require_file(test, "test data")?;
    if let Some(o) = out {
        require_out_dir(o)?;
    }
    let model = read_model::<f64>(model).at("reading model")?;
    let table = read_table::<f64>(test).at("reading test data")?;
    let rule = &model.rule;
    if table.features.cols() != rule.dim() {
        return Err(CliError::input(
            "checking dimensions",
            format!("model has p = {} but test data has {} features", rule.dim(), table.features.cols()),
        ));
    }
    let mut text = String::from(if score { "predicted,score\n" } else { "predicted\n" });
    let mut predicted = Vec::with_capacity(table.features.rows());
    for i in 0..table.features.rows() {
        let s = rule.score(table.features.row(i)).at("predicting")?;
        let label = if s >= 0.0 { 1 } else { 2 };
        predicted.push(label);
        if score {
            let _ = writeln!(text, "{label},{}", format_exact(s));
        } else {
            let _ = writeln!(text, "{label}");
        }
    }
    match out {
        Some(o) => write_out(o, &text)?,
        None => print!("{text}"),
    }
    if let Some(labels) = &table.labels {
        if labels.iter().all(|&l| l == 1 || l == 2) {
            let labels: Vec<usize> = labels.iter().map(|&l| l as usize).collect();
            let rate = empirical_rate_labeled(rule, &table.features, &labels).at("scoring predictions")?;
            let wrong = predicted.iter().zip(&labels).filter(|(a, b)| a != b).count();
            eprintln!(
                "misclassified {wrong} of {} (class-averaged rate {})",
                labels.len(),
                rate.conditional_rate
            );
        }
    }
    Ok(())
}

pub fn cv(
    cfg: &RunConfig,
    train: &Path,
    grid_m1: Option<Vec<f64>>,
    grid_m2: Option<Vec<f64>>,
    alpha: Option<f64>,
    out: &Path,
) -> Result<(), CliError> {
    require_file(train, "training data")?;
    require_out_dir(out)?;
    let alpha = pick(alpha, &cfg.alpha).unwrap_or(ThresholdConfig::default().alpha);
    let data = read_dataset::<f64>(train).at("reading training data")?;
    let g1 = pick(grid_m1, &cfg.grid_m1);
    let g2 = pick(grid_m2, &cfg.grid_m2);
    let (g1, g2) = match (g1, g2) {
        (Some(a), Some(b)) => (a, b),
        (a, b) => {
            let (d1, d2) = default_grids(&data, alpha).at("building default grids")?;
            (a.unwrap_or(d1), b.unwrap_or(d2))
        }
    };
    let surface = cv_grid_search(&data, &g1, &g2, alpha).at("cross-validating")?;
    let mut text = String::from("M1,M2,loocv_rate\n");
    for (&(m1, m2), &s) in surface.grid.iter().zip(&surface.scores) {
        let _ = writeln!(text, "{},{},{}", format_exact(m1), format_exact(m2), format_exact(s));
    }
    write_out(out, &text)?;
    let failed = surface.failed.iter().filter(|&&f| f).count();
    if failed > 0 {
        eprintln!("slda: warning: {failed} grid point(s) failed and were scored 1");
    }
    println!("best_m1 {}", format_exact(surface.best.0));
    println!("best_m2 {}", format_exact(surface.best.1));
    println!("best_loocv_rate {}", format_exact(surface.best_score));
    Ok(())
}

pub fn list_presets() {
    for name in PRESET_NAMES {
        println!("{name}");
    }
}

pub struct SimOverrides {
    pub seed: Option<u64>,
    pub reps: Option<usize>,
    pub n_mc: Option<usize>,
}

fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

pub fn simulate(name: Option<&str>, file: Option<&Path>, ov: &SimOverrides, out: &Path) -> Result<(), CliError> {
    require_out_dir(out)?;
    let mut scenario = match (name, file) {
        (_, Some(f)) => {
            require_file(f, "scenario file")?;
            load_scenario(f).at("reading scenario")?
        }
        (Some(n), None) => preset(n).ok_or_else(|| {
            CliError::input(
                "selecting scenario",
                format!("unknown scenario `{n}`; known presets: {}", PRESET_NAMES.join(", ")),
            )
        })?,
        (None, None) => {
            return Err(CliError::input(
                "selecting scenario",
                format!("give --scenario or --scenario-file; known presets: {}", PRESET_NAMES.join(", ")),
            ))
        }
    };
    if let Some(s) = ov.seed {
        scenario.seed = s;
    }
    if let Some(r) = ov.reps {
        scenario.reps = r;
    }
    if let Some(m) = ov.n_mc {
        scenario.n_mc = m;
    }
    let run = run_scenario(&scenario).at("simulating")?;
    let csv = format_replicates_csv(&scenario.name, &run.records).at("formatting replicates")?;
    write_out(&with_suffix(out, "_replicates.csv"), &csv)?;
    let summary = format_summary(&run.summary);
    write_out(&with_suffix(out, "_summary.toml"), &summary)?;
    print!("{summary}");
    Ok(())
}

pub struct DiagnoseOptions {
    pub n: Option<usize>,
    pub h: Option<f64>,
    pub g: Option<f64>,
    pub r: Option<f64>,
    pub c0: Option<f64>,
}

pub fn diagnose(
    cfg: &RunConfig,
    train: Option<&Path>,
    population: Option<&Path>,
    opts: &DiagnoseOptions,
    t: &Thresholds,
    out: Option<&Path>,
) -> Result<(), CliError> {
    if let Some(o) = out {
        require_out_dir(o)?;
    }
    let d = DiagnosticsParams::default();
    let params = DiagnosticsParams {
        h: opts.h.unwrap_or(d.h),
        g: opts.g.unwrap_or(d.g),
        r: opts.r.unwrap_or(d.r),
        config: threshold_config(cfg, t)?,
    };
    let (report, delta, condition) = match (train, population) {
        (Some(path), _) => {
            require_file(path, "training data")?;
            let data = read_dataset::<f64>(path).at("reading training data")?;
            let report = diagnose_dataset(&data, &params).at("diagnosing data")?;
            let delta = slda_core::estimation::summarize(&data).delta_hat();
            (report, delta, None)
        }
        (None, Some(path)) => {
            require_file(path, "population file")?;
            let n = opts
                .n
                .ok_or_else(|| CliError::input("reading parameters", "--n is required with --population"))?;
            let pop = read_population::<f64>(path).at("reading population")?;
            let report = diagnose_population(&pop, n, &params).at("diagnosing population")?;
            let condition = match opts.c0 {
                Some(c0) => Some(condition_check(&pop, c0).at("checking conditions")?),
                None => None,
            };
            (report, pop.delta(), condition)
        }
        (None, None) => unreachable!("clap requires one input"),
    };
    for (k, v) in report.to_lines() {
        println!("{k} {v}");
    }
    if let Some(c) = condition {
        println!("c0 {}", c.c0);
        println!("eigen_ok {}", c.eigen_ok);
        println!("delta_ok {}", c.delta_ok);
        println!("conditions_passed {}", c.passed());
    }
    if let Some(o) = out {
        let props = cumulative_proportions(&delta).at("computing cumulative proportions")?;
        let mut text = String::from("l,cumulative_proportion\n");
        for (l, v) in props.iter().enumerate() {
            let _ = writeln!(text, "{},{}", l + 1, format_exact(*v));
        }
        write_out(o, &text)?;
    }
    Ok(())
}
