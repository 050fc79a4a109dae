//! The five batch commands.

use std::io::Write;
use std::path::{Path, PathBuf};

use cassl_core::curriculum::build_curriculum_traced;
use cassl_core::pipeline::{
    collect_initial, evaluate_design, run_curriculum, train_random_baseline, train_staged_baseline,
    CurriculumSource,
};
use cassl_core::{analyze, analyze_dataset, RunOutput, SensitivityReport};
use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::error::CliError;
use crate::output::{
    create, read_json, write_json, Ceiling, CurriculumFile, EnergyRow, ModelFile, OrderComparison,
    RunFile, SensitivityFile, OUTPUT_SCHEMA_VERSION,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BaselineKind {
    Random,
    Staged,
    RandomCurriculum,
}

fn prepare_out(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir)
        .map_err(|e| CliError::Runtime(format!("cannot create {}: {e}", dir.display())))
}

/// Collects the initial design and writes `sensitivity.json` and `design.csv`.
pub fn analyze_cmd(cfg: &ExperimentConfig) -> Result<SensitivityFile, CliError> {
    cfg.validate()?;
    let env = cfg.build_env()?;
    let space = env.space();
    let design = cfg.design(space.len())?;
    let (report, mean) = if env.is_deterministic() {
        let y = evaluate_design(env.as_ref(), &design, cfg.seed).map_err(CliError::runtime)?;
        let mut r = analyze(&design, &y).map_err(CliError::runtime)?;
        r.dims = space.names();
        (r, y.iter().sum::<f64>() / y.len() as f64)
    } else {
        let ds =
            collect_initial(env.as_ref(), space, &design, cfg.seed).map_err(CliError::runtime)?;
        let r = analyze_dataset(space, &design, &ds).map_err(CliError::runtime)?;
        (r, ds.success_rate())
    };
    let out = &cfg.out_dir;
    prepare_out(out)?;
    let mut w = create(&out.join("design.csv"))?;
    design
        .write_csv(Some(space), &mut w)
        .map_err(CliError::runtime)?;
    w.flush().map_err(CliError::runtime)?;
    let file = SensitivityFile {
        schema_version: OUTPUT_SCHEMA_VERSION,
        config: cfg.clone(),
        environment: env.name().to_string(),
        design_rows: design.len(),
        mean_outcome: mean,
        report,
    };
    write_json(&out.join("sensitivity.json"), &file)?;
    Ok(file)
}

/// Reads either a `sensitivity.json` written by `analyze` or a bare report.
pub fn load_report(path: &Path) -> Result<(SensitivityReport, Option<ExperimentConfig>), CliError> {
    let value: serde_json::Value = read_json(path)?;
    let bad = |e: serde_json::Error| CliError::Config(format!("{}: {e}", path.display()));
    if value.get("report").is_some() {
        let f: SensitivityFile = serde_json::from_value(value).map_err(bad)?;
        Ok((f.report, Some(f.config)))
    } else {
        Ok((serde_json::from_value(value).map_err(bad)?, None))
    }
}

/// Builds the curriculum for a report and writes `curriculum.json`.
pub fn rank_cmd(
    input: &Path,
    expect: Option<Vec<String>>,
    out: &Path,
) -> Result<CurriculumFile, CliError> {
    let (report, config) = load_report(input)?;
    let dims = report.dims.clone();
    if let Some(e) = &expect {
        if let Some(unknown) = e.iter().find(|n| !dims.contains(n)) {
            return Err(CliError::Config(format!(
                "expected order names unknown dimension `{unknown}`"
            )));
        }
    }
    let (curriculum, trace) = build_curriculum_traced(&report).map_err(CliError::config)?;
    let names = |v: &[usize]| -> Vec<String> { v.iter().map(|&i| dims[i].clone()).collect() };
    let flat_order = names(&curriculum.flat_order);
    let file = CurriculumFile {
        schema_version: OUTPUT_SCHEMA_VERSION,
        config,
        stages: curriculum.stages.iter().map(|s| names(s)).collect(),
        energy_table: trace
            .iter()
            .enumerate()
            .map(|(s, t)| EnergyRow::from_trace(s + 1, t, &dims))
            .collect(),
        comparison: expect.map(|e| OrderComparison::new(e, &flat_order)),
        flat_order,
        dims,
    };
    prepare_out(out)?;
    write_json(&out.join("curriculum.json"), &file)?;
    Ok(file)
}

fn write_run(cfg: &ExperimentConfig, run: &RunOutput) -> Result<RunFile, CliError> {
    let out = &cfg.out_dir;
    prepare_out(out)?;
    let mut w = create(&out.join("dataset.jsonl"))?;
    run.dataset.write_jsonl(&mut w).map_err(CliError::runtime)?;
    w.flush().map_err(CliError::runtime)?;
    write_json(
        &out.join("model.json"),
        &ModelFile {
            schema_version: OUTPUT_SCHEMA_VERSION,
            config: cfg.clone(),
            model: run.model.clone(),
        },
    )?;
    let file = RunFile {
        schema_version: OUTPUT_SCHEMA_VERSION,
        config: cfg.clone(),
        report: run.report.clone(),
        sensitivity: run.sensitivity.clone(),
        ceiling: cfg.ceiling().map(|(seen, novel)| Ceiling { seen, novel }),
    };
    write_json(&out.join("run_report.json"), &file)?;
    write_stage_series(&out.join("stages.csv"), &file)?;
    Ok(file)
}

#[derive(Serialize)]
struct StageRow {
    stage: usize,
    collection_success: Option<f64>,
    seen: Option<f64>,
    novel: Option<f64>,
    seen_expected: Option<f64>,
    novel_expected: Option<f64>,
}

fn write_stage_series(path: &Path, run: &RunFile) -> Result<(), CliError> {
    let r = &run.report;
    let n = r
        .collection_success
        .len()
        .max(r.checkpoints.iter().map(|c| c.stage + 1).max().unwrap_or(0));
    let mut w = csv::Writer::from_writer(create(path)?);
    for stage in 0..n {
        let cp = r.checkpoints.iter().find(|c| c.stage == stage);
        w.serialize(StageRow {
            stage,
            collection_success: r.collection_success.get(stage).copied(),
            seen: cp.map(|c| c.seen.rate),
            novel: cp.map(|c| c.novel.rate),
            seen_expected: cp.and_then(|c| c.seen.expected),
            novel_expected: cp.and_then(|c| c.novel.expected),
        })
        .map_err(CliError::runtime)?;
    }
    w.flush().map_err(CliError::runtime)
}

/// Full curriculum run.
pub fn train_cmd(cfg: &ExperimentConfig) -> Result<RunFile, CliError> {
    cfg.validate()?;
    let env = cfg.build_env()?;
    let run_cfg = cfg.run_config()?;
    let run = run_curriculum(
        env.as_ref(),
        &run_cfg,
        CurriculumSource::Sensitivity,
        "cassl",
    )
    .map_err(CliError::runtime)?;
    write_run(cfg, &run)
}

pub fn baseline_cmd(cfg: &ExperimentConfig, kind: BaselineKind) -> Result<RunFile, CliError> {
    cfg.validate()?;
    let env = cfg.build_env()?;
    let run_cfg = cfg.run_config()?;
    let k = env.space().len();
    let run = match kind {
        BaselineKind::Random => train_random_baseline(env.as_ref(), &run_cfg, cfg.random_budget(k)),
        BaselineKind::Staged => {
            train_staged_baseline(env.as_ref(), &run_cfg, &cfg.staged_budgets(k)?)
        }
        BaselineKind::RandomCurriculum => run_curriculum(
            env.as_ref(),
            &run_cfg,
            CurriculumSource::Random,
            "random-curriculum",
        ),
    }
    .map_err(CliError::runtime)?;
    write_run(cfg, &run)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodSummary {
    pub method: String,
    pub runs: usize,
    pub seen: f64,
    pub novel: f64,
    pub seen_expected: Option<f64>,
    pub novel_expected: Option<f64>,
    pub training_evaluations: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageSummary {
    pub method: String,
    pub stage: usize,
    pub runs: usize,
    pub seen: f64,
    pub novel: f64,
}

fn mean(v: impl Iterator<Item = f64>) -> f64 {
    let (s, n) = v.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    s / n as f64
}

fn mean_opt(v: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    let v: Option<Vec<f64>> = v.collect();
    v.map(|v| mean(v.into_iter()))
}

/// Per-method final success rates (`comparison.csv`) and per-stage series
/// (`stages.csv`), averaged over the runs of each method in input order.
pub fn report_cmd(
    inputs: &[PathBuf],
    out: &Path,
) -> Result<(Vec<MethodSummary>, Vec<StageSummary>), CliError> {
    if inputs.is_empty() {
        return Err(CliError::Config(
            "report needs at least one run_report.json".into(),
        ));
    }
    let mut runs: Vec<RunFile> = Vec::with_capacity(inputs.len());
    for p in inputs {
        let r: RunFile = read_json(p)?;
        if r.report.checkpoints.is_empty() {
            return Err(CliError::Config(format!(
                "{} has no evaluated checkpoints",
                p.display()
            )));
        }
        runs.push(r);
    }
    let mut methods: Vec<String> = Vec::new();
    for r in &runs {
        if !methods.contains(&r.report.method) {
            methods.push(r.report.method.clone());
        }
    }
    let mut summary = Vec::new();
    let mut stages = Vec::new();
    for m in &methods {
        let of: Vec<&RunFile> = runs.iter().filter(|r| &r.report.method == m).collect();
        let last = |r: &&RunFile| r.report.final_checkpoint().cloned().expect("checked above");
        summary.push(MethodSummary {
            method: m.clone(),
            runs: of.len(),
            seen: mean(of.iter().map(|r| last(r).seen.rate)),
            novel: mean(of.iter().map(|r| last(r).novel.rate)),
            seen_expected: mean_opt(of.iter().map(|r| last(r).seen.expected)),
            novel_expected: mean_opt(of.iter().map(|r| last(r).novel.expected)),
            training_evaluations: mean(of.iter().map(|r| r.report.training_evaluations as f64)),
        });
        let max_stage = of
            .iter()
            .flat_map(|r| r.report.checkpoints.iter().map(|c| c.stage))
            .max()
            .unwrap_or(0);
        for stage in 0..=max_stage {
            let cps: Vec<_> = of
                .iter()
                .filter_map(|r| r.report.checkpoints.iter().find(|c| c.stage == stage))
                .collect();
            if cps.is_empty() {
                continue;
            }
            stages.push(StageSummary {
                method: m.clone(),
                stage,
                runs: cps.len(),
                seen: mean(cps.iter().map(|c| c.seen.rate)),
                novel: mean(cps.iter().map(|c| c.novel.rate)),
            });
        }
    }
    prepare_out(out)?;
    let mut w = csv::Writer::from_writer(create(&out.join("comparison.csv"))?);
    for s in &summary {
        w.serialize(s).map_err(CliError::runtime)?;
    }
    w.flush().map_err(CliError::runtime)?;
    let mut w = csv::Writer::from_writer(create(&out.join("stages.csv"))?);
    for s in &stages {
        w.serialize(s).map_err(CliError::runtime)?;
    }
    w.flush().map_err(CliError::runtime)?;
    Ok((summary, stages))
}
