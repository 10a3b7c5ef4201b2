use std::collections::HashMap;

use flowrisk::dataset::{format_float, format_index_list, stratified_split, FeatureTable};
use flowrisk::export::{
    artifact_from_str, artifact_to_string, emit_expression, evaluate_in, write_feature_manifest, ModelArtifact,
};
use flowrisk::fselect::{
    candidate_pool, importance_screen, permutation_importance, rfe_loop, screen_columns, FeatureSpec,
};
use flowrisk::linmod::{coefficient_importance, LogisticModel};
use flowrisk::metrics::{pr_auc, pr_curve};
use flowrisk::synth::{generate, DEFAULT_LABEL_COLUMN};

use crate::error::CliError;
use crate::session::{write_atomic, Session, Split};
use crate::Command;

/// Rows checked when verifying the emitted expression.
const EXPRESSION_CHECK_ROWS: usize = 1000;
const EXPRESSION_TOLERANCE: f64 = 1e-10;

pub(crate) fn run_stage(s: &mut Session, command: Command) -> Result<(), CliError> {
    match command {
        Command::Synth => synth(s),
        Command::Prepare => prepare(s),
        Command::Screen => screen(s),
        Command::TrainBaseline => train_baseline(s),
        Command::Engineer => engineer(s),
        Command::Select => select(s),
        Command::Evaluate => evaluate(s),
        Command::Importance => importance(s),
        Command::Export => export(s),
        Command::RunAll => unreachable!("expanded by the session"),
    }
}

fn json<T: serde::Serialize>(value: &T) -> Vec<u8> {
    let mut text = serde_json::to_string_pretty(value).expect("serializable");
    text.push('\n');
    text.into_bytes()
}

fn parse_json<T: serde::de::DeserializeOwned>(text: &str, what: &str) -> Result<T, CliError> {
    serde_json::from_str(text).map_err(|e| CliError::new("artifact-invalid", format!("{what}: {e}")))
}

fn csv_bytes(write: impl FnOnce(&mut Vec<u8>) -> flowrisk::Result<()>) -> Result<Vec<u8>, CliError> {
    let mut buf = Vec::new();
    write(&mut buf)?;
    Ok(buf)
}

fn metrics_csv(rows: &[(&str, String)]) -> Vec<u8> {
    let mut out = String::from("metric,value\n");
    for (k, v) in rows {
        out.push_str(&format!("{k},{v}\n"));
    }
    out.into_bytes()
}

fn prevalence(t: &FeatureTable) -> f64 {
    t.positives() as f64 / t.n_rows() as f64
}

fn synth(s: &mut Session) -> Result<(), CliError> {
    let cfg = s
        .config
        .synth
        .clone()
        .ok_or_else(|| CliError::config("synth needs a [synth] section"))?;
    let out = generate(&cfg.truth, cfg.rows, cfg.columns, cfg.seed)?;
    let table = csv_bytes(|b| out.write_csv(b))?;
    let truth = csv_bytes(|b| out.write_truth(b))?;
    let input = s.config.input.clone();
    let mut truth_path = input.clone().into_os_string();
    truth_path.push(".truth.json");
    write_atomic(&input, &table)?;
    write_atomic(truth_path.as_ref(), &truth)?;
    let worst = out.noise_correlations.iter().map(|(_, r)| r.abs()).fold(0.0, f64::max);
    s.commit(
        Command::Synth,
        Vec::new(),
        &[
            (
                "table",
                format!(
                    "\"{}\"",
                    input.file_name().unwrap_or(input.as_os_str()).to_string_lossy()
                ),
            ),
            ("label_column", format!("\"{DEFAULT_LABEL_COLUMN}\"")),
            ("positives", out.table.positives().to_string()),
            ("max_noise_point_biserial", format_float(worst)),
            ("noise_correlation_bound", format_float(out.correlation_bound)),
        ],
    )
}

fn prepare(s: &mut Session) -> Result<(), CliError> {
    let seed = s.config.seeds.split;
    let labels = s.table()?.labels()?.to_vec();
    let mut split = stratified_split(&labels, seed)?;
    let manifest = split.manifest(&labels);
    let files = vec![
        ("prepare/manifest.toml".to_string(), manifest.to_toml().into_bytes()),
        (
            "prepare/train.idx".to_string(),
            format_index_list(&split.train).into_bytes(),
        ),
        (
            "prepare/validation.idx".to_string(),
            format_index_list(&split.validation).into_bytes(),
        ),
        (
            "prepare/test.idx".to_string(),
            format_index_list(&split.test).into_bytes(),
        ),
    ];
    split.test.clear();
    s.split = Some(split);
    let rejected = s.rejected_rows();
    s.commit(Command::Prepare, files, &[("rejected_rows", rejected.to_string())])
}

fn screen(s: &mut Session) -> Result<(), CliError> {
    let train = s.rows(Split::Train)?;
    let outcome = screen_columns(&train, &s.config.screen)?;
    let imp = importance_screen(
        &train,
        &outcome.retained,
        s.config.screen.importance_cutoff,
        &s.config.train,
    )?;
    let mut base = imp.kept.join("\n");
    base.push('\n');
    let files = vec![
        (
            "screen/removal_report.csv".to_string(),
            csv_bytes(|b| outcome.write_report(b))?,
        ),
        ("screen/importance.csv".to_string(), csv_bytes(|b| imp.write_report(b))?),
        ("screen/base_features.txt".to_string(), base.into_bytes()),
        ("screen/model.json".to_string(), json(&imp.model)),
    ];
    s.commit(
        Command::Screen,
        files,
        &[
            ("retained_after_screening", outcome.retained.len().to_string()),
            ("base_features", imp.kept.len().to_string()),
            ("solver_iterations", imp.fit.iterations.to_string()),
        ],
    )
}

fn train_baseline(s: &mut Session) -> Result<(), CliError> {
    let model: LogisticModel = parse_json(&s.read_output("screen/model.json", Command::Screen)?, "screen model")?;
    let valid = s.rows(Split::Validation)?;
    let probs = model.predict_proba(&valid)?;
    let auc = pr_auc(&probs, valid.labels()?)?;
    let files = vec![(
        "baseline/metrics.csv".to_string(),
        metrics_csv(&[
            ("features", model.dim().to_string()),
            ("validation_pr_auc", format_float(auc)),
            ("validation_prevalence", format_float(prevalence(&valid))),
        ]),
    )];
    s.commit(Command::TrainBaseline, files, &[])
}

fn read_base_features(s: &Session) -> Result<Vec<String>, CliError> {
    Ok(s.read_output("screen/base_features.txt", Command::Screen)?
        .lines()
        .filter(|l| !l.is_empty())
        .map(str::to_string)
        .collect())
}

fn engineer(s: &mut Session) -> Result<(), CliError> {
    let base = read_base_features(s)?;
    let train = s.rows(Split::Train)?;
    let pool = candidate_pool(&train, &base)?;
    let files = vec![("engineer/specs.json".to_string(), json(&pool))];
    s.commit(
        Command::Engineer,
        files,
        &[
            ("base_features", base.len().to_string()),
            ("candidates", pool.len().to_string()),
        ],
    )
}

fn select(s: &mut Session) -> Result<(), CliError> {
    let specs: Vec<FeatureSpec> = parse_json(&s.read_output("engineer/specs.json", Command::Engineer)?, "spec list")?;
    let train = s.rows(Split::Train)?;
    let (kept, trace) = rfe_loop(&specs, &train, &s.config.rfe(), &s.config.train)?;
    let files = vec![
        ("select/trace.csv".to_string(), csv_bytes(|b| trace.write_csv(b))?),
        ("select/trace.json".to_string(), json(&trace)),
        ("select/final_specs.json".to_string(), json(&kept)),
    ];
    s.commit(
        Command::Select,
        files,
        &[
            ("iterations", trace.iterations.len().to_string()),
            ("final_features", kept.len().to_string()),
            ("best_cv_pr_auc", format_float(trace.best_pr_auc)),
        ],
    )
}

fn evaluate(s: &mut Session) -> Result<(), CliError> {
    let specs: Vec<FeatureSpec> = parse_json(
        &s.read_output("select/final_specs.json", Command::Select)?,
        "final spec list",
    )?;
    let train = s.rows(Split::Train)?;
    let (model, fit) = LogisticModel::train(&train, &specs, &s.config.train)?;
    drop(train);
    let valid = s.rows(Split::Validation)?;
    let valid_auc = pr_auc(&model.predict_proba(&valid)?, valid.labels()?)?;

    let test = s.test_rows()?;
    let curve = pr_curve(&model.predict_proba(&test)?, test.labels()?)?;
    let test_auc = curve.average_precision();

    let mut artifact = ModelArtifact::new(model, s.config.label.clone(), s.fingerprint.clone());
    artifact.metrics.insert("validation_pr_auc".into(), valid_auc);
    artifact.metrics.insert("test_pr_auc".into(), test_auc);
    artifact.metrics.insert("test_prevalence".into(), prevalence(&test));
    artifact
        .metrics
        .insert("validation_prevalence".into(), prevalence(&valid));
    let files = vec![
        (
            "evaluate/metrics.csv".to_string(),
            metrics_csv(&[
                ("features", artifact.model.dim().to_string()),
                ("solver_iterations", fit.iterations.to_string()),
                ("validation_pr_auc", format_float(valid_auc)),
                ("validation_prevalence", format_float(prevalence(&valid))),
                ("test_pr_auc", format_float(test_auc)),
                ("test_prevalence", format_float(prevalence(&test))),
            ]),
        ),
        (
            "evaluate/test_pr_curve.csv".to_string(),
            csv_bytes(|b| curve.write_csv(b))?,
        ),
        (
            "evaluate/model.artifact.json".to_string(),
            artifact_to_string(&artifact)?.into_bytes(),
        ),
    ];
    let reads = s.test_reads();
    s.commit(Command::Evaluate, files, &[("test_split_reads", reads.to_string())])
}

fn load_artifact(s: &Session) -> Result<ModelArtifact, CliError> {
    Ok(artifact_from_str(
        &s.read_output("evaluate/model.artifact.json", Command::Evaluate)?,
    )?)
}

fn importance(s: &mut Session) -> Result<(), CliError> {
    let artifact = load_artifact(s)?;
    let valid = s.rows(Split::Validation)?;
    let model = &artifact.model;
    let report = permutation_importance(model, &valid, s.config.importance.repeats, s.config.seeds.importance)?;
    let coef = coefficient_importance(model).unwrap_or_else(|_| vec![0.0; model.dim()]);
    let mut out = String::from("feature,coefficient_importance,permutation_mean_drop,permutation_std_drop\n");
    for (f, c) in report.features.iter().zip(&coef) {
        out.push_str(&format!(
            "\"{}\",{},{},{}\n",
            f.spec,
            format_float(*c),
            format_float(f.mean_drop),
            format_float(f.std_drop)
        ));
    }
    let files = vec![("importance/permutation.csv".to_string(), out.into_bytes())];
    s.commit(
        Command::Importance,
        files,
        &[
            ("repeats", report.repeats.to_string()),
            ("reference_pr_auc", format_float(report.reference_pr_auc)),
        ],
    )
}

fn export(s: &mut Session) -> Result<(), CliError> {
    let artifact = load_artifact(s)?;
    let dialect = s.config.dialect()?;
    let model = &artifact.model;
    let text = emit_expression(model, &dialect)?;

    // the expression must reproduce the model on held-in rows
    let valid = s.rows(Split::Validation)?;
    let rows: Vec<usize> = (0..valid.n_rows().min(EXPRESSION_CHECK_ROWS)).collect();
    let sample = valid.select_rows(&rows);
    let probs = model.predict_proba(&sample)?;
    let tokens: Vec<(String, &[f64])> = model
        .base_columns()
        .into_iter()
        .map(|b| Ok((dialect.variable(b)?, sample.column(b)?)))
        .collect::<flowrisk::Result<_>>()?;
    let mut worst = 0.0f64;
    for (i, p) in probs.iter().enumerate() {
        let bindings: HashMap<String, f64> = tokens.iter().map(|(t, c)| (t.clone(), c[i])).collect();
        worst = worst.max((evaluate_in(&dialect, &text, &bindings)? - p).abs());
    }
    if worst > EXPRESSION_TOLERANCE {
        return Err(CliError::new(
            "export-failed",
            format!("expression deviates from the model by {worst:e}"),
        ));
    }

    let files = vec![
        ("export/model.expr".to_string(), format!("{text}\n").into_bytes()),
        (
            "export/final_features.csv".to_string(),
            csv_bytes(|b| write_feature_manifest(model, b))?,
        ),
    ];
    s.commit(
        Command::Export,
        files,
        &[
            ("checked_rows", rows.len().to_string()),
            ("max_abs_deviation", format_float(worst)),
        ],
    )
}
