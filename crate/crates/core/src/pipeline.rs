//! Stage orchestration behind the command-line tool.
//!
//! Each command runs its prerequisite stages in memory and writes the
//! artifacts of every stage it passes through, so `tune` also leaves the
//! cohort report, feature matrices and RFE curves behind. All randomness comes
//! from the run seed through labeled sub-streams (`split-batters`,
//! `rfe-batters-7`, `tune-batters-7-mlp`, `train-batters-7-mlp`, ...).

use std::fmt::{self, Write as _};
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::baseline::{fit_aging_curve, predict_delta_method, AgingCurve};
use crate::cohort::{build_batting_cohort, build_pitching_cohort, cohort_report, Cohort, CohortKind, CohortReport};
use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::evaluation::{
    evaluate, prediction_table_csv, render_heatmap, rfe_curve_csv, rfe_curve_svg, EvaluationReport, HeatmapSpec,
    YearPredictions, DELTA_LABEL,
};
use crate::features::{
    apply_scaler, build_features, build_targets, fit_scaler, FeatureMatrix, ScalerParams, TargetVector,
};
use crate::fixtures::generate_synthetic_league;
use crate::ingest::{attach_war, load_dataset, merge_stints, ColumnMap, Dataset};
use crate::models::{fit, predict, FittedModel};
use crate::numerics::derive_seed;
use crate::selection::{grid_search, rfe_rank, split_players, PlayerSplit, RfeResult, SplitSpec, TuneResult};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Command {
    Ingest,
    Cohort,
    Features,
    Select,
    Tune,
    Train,
    Evaluate,
    Baseline,
    Synth,
    All,
}

impl Command {
    pub const ALL: [Command; 10] = [
        Command::Ingest,
        Command::Cohort,
        Command::Features,
        Command::Select,
        Command::Tune,
        Command::Train,
        Command::Evaluate,
        Command::Baseline,
        Command::Synth,
        Command::All,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Command::Ingest => "ingest",
            Command::Cohort => "cohort",
            Command::Features => "features",
            Command::Select => "select",
            Command::Tune => "tune",
            Command::Train => "train",
            Command::Evaluate => "evaluate",
            Command::Baseline => "baseline",
            Command::Synth => "synth",
            Command::All => "all",
        }
    }

    pub fn parse(s: &str) -> Option<Command> {
        Command::ALL.into_iter().find(|c| c.as_str() == s)
    }

    pub fn needs_data(self) -> bool {
        self != Command::Synth
    }

    /// Position in the linear chain ingest -> evaluate; `baseline` branches
    /// off after the split.
    fn depth(self) -> usize {
        match self {
            Command::Ingest => 0,
            Command::Cohort => 1,
            Command::Features | Command::Baseline => 2,
            Command::Select => 3,
            Command::Tune => 4,
            Command::Train => 5,
            Command::Evaluate | Command::All => 6,
            Command::Synth => 0,
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug, Default)]
pub struct RunSummary {
    /// Files written, relative to the output directory, in write order.
    pub artifacts: Vec<PathBuf>,
    pub cohort_reports: Vec<CohortReport>,
    pub evaluation: Option<EvaluationReport>,
}

struct Writer {
    out: PathBuf,
    summary: RunSummary,
}

impl Writer {
    /// Full path for `rel`, with its directory created and the artifact
    /// recorded.
    fn path(&mut self, rel: impl AsRef<Path>) -> Result<PathBuf> {
        let path = self.out.join(rel.as_ref());
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir).map_err(|e| Error::write(dir, e))?;
        }
        self.summary.artifacts.push(rel.as_ref().to_path_buf());
        Ok(path)
    }

    fn put(&mut self, rel: impl AsRef<Path>, body: &str) -> Result<()> {
        let path = self.path(rel)?;
        std::fs::write(&path, body).map_err(|e| Error::write(&path, e))
    }
}

/// Validates `cfg`, runs `cmd` and writes its artifacts under `cfg.out`,
/// finishing with `run_config.txt` and `manifest.txt`.
pub fn run(cfg: &RunConfig, cmd: Command) -> Result<RunSummary> {
    cfg.validate(cmd.needs_data())?;
    std::fs::create_dir_all(&cfg.out).map_err(|e| Error::write(&cfg.out, e))?;
    let mut w = Writer {
        out: cfg.out.clone(),
        summary: RunSummary::default(),
    };
    log::info!("{cmd}: seed {} config {}", cfg.seed, cfg.digest());
    if cmd == Command::Synth {
        synth(cfg, &mut w)?;
    } else {
        let ds = ingest(cfg, &mut w)?;
        if cmd.depth() >= 1 {
            let cohorts = cohorts(cfg, &ds, &mut w)?;
            for cohort in &cohorts {
                run_cohort(cfg, cmd, cohort, &mut w)?;
            }
        }
    }
    w.put("run_config.txt", &cfg.to_text())?;
    if let Some(report) = &mut w.summary.evaluation {
        report.seed = cfg.seed;
        report.config_digest = cfg.digest();
        let csv = report.to_csv();
        w.put("metrics.csv", &csv)?;
    }
    let mut manifest = format!(
        "command = {cmd}\nseed = {}\nconfig_digest = {}\n",
        cfg.seed,
        cfg.digest()
    );
    for a in &w.summary.artifacts {
        let _ = writeln!(manifest, "artifact = {}", a.display());
    }
    w.put("manifest.txt", &manifest)?;
    Ok(w.summary)
}

fn synth(cfg: &RunConfig, w: &mut Writer) -> Result<()> {
    let mut scfg = cfg.synth.clone();
    scfg.seed = cfg.seed;
    let league = generate_synthetic_league(&scfg)?;
    let dir = cfg.synth_dir();
    let paths = league.write_to(&dir)?;
    log::info!(
        "synthetic league of {} players written to {}",
        scfg.n_players,
        dir.display()
    );
    let listed = [&paths.batting, &paths.pitching, &paths.people]
        .into_iter()
        .chain(&paths.fielding)
        .chain(&paths.war)
        .map(|p| p.display().to_string())
        .collect::<Vec<_>>()
        .join("\n");
    w.put(
        "synth_files.txt",
        &format!("{listed}\n{}\n", dir.join("truth.csv").display()),
    )
}

fn ingest(cfg: &RunConfig, w: &mut Writer) -> Result<Dataset> {
    let columns = match &cfg.columns {
        Some(p) => ColumnMap::from_file(p)?,
        None => ColumnMap::lahman(),
    };
    let ds = attach_war(merge_stints(load_dataset(&cfg.data, &columns)?));
    log::info!(
        "ingest: {} batting seasons, {} pitching seasons, {} players, {} rejects",
        ds.batting.len(),
        ds.pitching.len(),
        ds.bios.len(),
        ds.rejects.len()
    );
    crate::ingest::write_rejects(&w.path("rejects.csv")?, &ds.rejects)?;
    w.put(
        "ingest_summary.csv",
        &format!(
            "table,rows\nbatting_seasons,{}\npitching_seasons,{}\npeople,{}\nwar_records,{}\nrejects,{}\n",
            ds.batting.len(),
            ds.pitching.len(),
            ds.bios.len(),
            ds.wars.len(),
            ds.rejects.len()
        ),
    )?;
    Ok(ds)
}

fn cohorts(cfg: &RunConfig, ds: &Dataset, w: &mut Writer) -> Result<Vec<Cohort>> {
    let built: Vec<Cohort> = cfg
        .cohorts
        .iter()
        .map(|k| match k {
            CohortKind::Batters => build_batting_cohort(ds, &cfg.cohort),
            CohortKind::Pitchers => build_pitching_cohort(ds, &cfg.cohort),
        })
        .collect();
    let mut csv = format!("{}\n", CohortReport::csv_header());
    let mut pretty = String::new();
    let mut exclusions = String::from("cohort,category,count\n");
    for c in &built {
        let r = cohort_report(c, ds, &cfg.cohort);
        csv.push_str(&r.csv_rows());
        pretty.push_str(&r.pretty());
        pretty.push('\n');
        let d = &c.diagnostics;
        let _ = writeln!(exclusions, "{},pre_cutoff,{}", c.kind, d.pre_cutoff);
        let _ = writeln!(exclusions, "{},contemporary,{}", c.kind, d.contemporary);
        for (rule, n) in &d.excluded {
            let _ = writeln!(exclusions, "{},{},{n}", c.kind, rule.as_str());
        }
        let _ = writeln!(exclusions, "{},included,{}", c.kind, d.included);
        let mut players = String::from("player_id,debut_year,age_at_debut,seasons\n");
        for career in &c.careers {
            let _ = writeln!(
                players,
                "{},{},{},{}",
                career.player_id,
                career.debut_year,
                career.age_at_debut.map(|a| a.to_string()).unwrap_or_default(),
                career.seasons.len()
            );
        }
        w.put(format!("cohort_{}.csv", c.kind), &players)?;
        log::info!("cohort {}: {} players", c.kind, c.len());
        w.summary.cohort_reports.push(r);
    }
    w.put("cohort_report.csv", &csv)?;
    w.put("cohort_report.txt", &pretty)?;
    w.put("cohort_exclusions.csv", &exclusions)?;
    Ok(built)
}

fn scaler_csv(s: &ScalerParams) -> String {
    let mut out = String::from("feature,min,max\n");
    for ((n, lo), hi) in s.feature_names.iter().zip(&s.min).zip(&s.max) {
        let _ = writeln!(out, "{n},{lo},{hi}");
    }
    out
}

/// Everything computed for one target year of one cohort.
struct YearWork {
    year: u32,
    rfe: RfeResult,
    tuned: Vec<TuneResult>,
    models: Vec<FittedModel>,
    predictions: YearPredictions,
}

fn run_cohort(cfg: &RunConfig, cmd: Command, cohort: &Cohort, w: &mut Writer) -> Result<()> {
    let kind = cohort.kind;
    let split = split_players(
        &cohort.ids(),
        &SplitSpec {
            train_fraction: cfg.train_fraction,
            seed: derive_seed(cfg.seed, &format!("split-{kind}")),
        },
    )?;
    let mut split_csv = String::from("player_id,side\n");
    for (side, ids) in [("train", &split.train), ("test", &split.test)] {
        for id in ids.iter() {
            let _ = writeln!(split_csv, "{id},{side}");
        }
    }
    w.put(format!("split_{kind}.csv"), &split_csv)?;

    let targets: Vec<TargetVector> = cfg
        .years
        .iter()
        .map(|&y| build_targets(cohort, y, cfg.policy))
        .collect::<Result<_>>()?;
    let delta = baseline(cohort, &split, &targets, w)?;
    if cmd == Command::Baseline {
        return Ok(());
    }

    let x = build_features(cohort);
    let scaler = fit_scaler(&x.select_players(&split.train)?)?;
    let x_train = apply_scaler(&scaler, &x.select_players(&split.train)?)?;
    let x_test = apply_scaler(&scaler, &x.select_players(&split.test)?)?;
    x.write_csv(&w.path(format!("features_{kind}.csv"))?)?;
    w.put(format!("scaler_{kind}.csv"), &scaler_csv(&scaler))?;
    for t in &targets {
        t.write_csv(&w.path(format!("targets_{kind}_y{}.csv", t.target_year))?)?;
    }
    if cmd.depth() < Command::Select.depth() {
        return Ok(());
    }

    let work: Vec<YearWork> = targets
        .par_iter()
        .zip(delta.par_iter())
        .map(|(t, d)| year_work(cfg, cmd, kind, t, d, &split, &x_train, &x_test))
        .collect::<Result<_>>()?;

    for yw in &work {
        let stem = format!("rfe_{kind}_{}", yw.year);
        w.put(format!("{stem}.csv"), &rfe_curve_csv(&yw.rfe.trace))?;
        w.put(
            format!("{stem}.svg"),
            &rfe_curve_svg(&yw.rfe.trace, &format!("{kind}, season {}: RFE curve", yw.year)),
        )?;
        w.put(
            format!("retained_{kind}_{}.txt", yw.year),
            &(yw.rfe.retained.join("\n") + "\n"),
        )?;
        w.put(
            format!("ranking_{kind}_{}.txt", yw.year),
            &(yw.rfe.trace.ranking().join("\n") + "\n"),
        )?;
        for (m, t) in cfg.models.iter().zip(&yw.tuned) {
            w.put(format!("tune_{kind}_{}_{m}.csv", yw.year), &t.to_csv())?;
        }
        for model in &yw.models {
            w.put(
                format!("models/{kind}_{}_{}.txt", yw.year, model.kind),
                &model.to_text(),
            )?;
        }
    }
    if cmd.depth() < Command::Evaluate.depth() {
        return Ok(());
    }

    let years: Vec<YearPredictions> = work.into_iter().map(|yw| yw.predictions).collect();
    let entries = evaluate(kind, &years)?;
    for e in &entries {
        log::info!("{kind} season {} {}: R² {:.4}", e.target_year, e.model, e.r2);
    }
    w.summary
        .evaluation
        .get_or_insert_with(EvaluationReport::default)
        .entries
        .extend(entries);
    w.put(format!("predictions_{kind}.csv"), &prediction_table_csv(&years))?;
    let labels: Vec<String> = years[0].predicted.iter().map(|(l, _)| l.clone()).collect();
    for (i, label) in labels.iter().enumerate() {
        let actual: Vec<f64> = years.iter().flat_map(|y| y.actual.iter().copied()).collect();
        let pred: Vec<f64> = years.iter().flat_map(|y| y.predicted[i].1.iter().copied()).collect();
        let svg = render_heatmap(
            &actual,
            &pred,
            &HeatmapSpec::default(),
            &format!("{kind} {label}: predicted vs actual WAR, seasons {}", year_span(cfg)),
        )?;
        w.put(format!("heatmap_{kind}_{label}.svg"), &svg)?;
    }
    Ok(())
}

fn year_span(cfg: &RunConfig) -> String {
    match (cfg.years.first(), cfg.years.last()) {
        (Some(a), Some(b)) if a != b => format!("{a}-{b}"),
        (Some(a), _) => a.to_string(),
        _ => String::new(),
    }
}

/// Delta-method predictions for the test players, one vector per target
/// year, from a curve fitted on training players only.
fn baseline(
    cohort: &Cohort,
    split: &PlayerSplit,
    targets: &[TargetVector],
    w: &mut Writer,
) -> Result<Vec<(Vec<f64>, Vec<bool>)>> {
    let kind = cohort.kind;
    let train: std::collections::HashSet<&str> = split.train.iter().map(String::as_str).collect();
    let curve: AgingCurve = fit_aging_curve(cohort.careers.iter().filter(|c| train.contains(c.player_id.as_str())));
    w.put(format!("aging_curve_{kind}.csv"), &curve.to_csv())?;
    let test: Vec<_> = cohort
        .careers
        .iter()
        .filter(|c| !train.contains(c.player_id.as_str()))
        .collect();
    let mut csv = String::from("player_id,year,actual,delta,imputed_base\n");
    let mut out = Vec::new();
    for t in targets {
        let actual = t.select_players(&split.test)?;
        let mut values = Vec::with_capacity(test.len());
        let mut flags = Vec::with_capacity(test.len());
        for (c, a) in test.iter().zip(&actual.values) {
            let p = predict_delta_method(c, &curve, t.target_year)?;
            let _ = writeln!(
                csv,
                "{},{},{a},{},{}",
                c.player_id,
                t.target_year,
                p.value,
                u8::from(p.imputed_base)
            );
            values.push(p.value);
            flags.push(p.imputed_base);
        }
        out.push((values, flags));
    }
    w.put(format!("baseline_{kind}.csv"), &csv)?;
    Ok(out)
}

#[allow(clippy::too_many_arguments)]
fn year_work(
    cfg: &RunConfig,
    cmd: Command,
    kind: CohortKind,
    target: &TargetVector,
    delta: &(Vec<f64>, Vec<bool>),
    split: &PlayerSplit,
    x_train: &FeatureMatrix,
    x_test: &FeatureMatrix,
) -> Result<YearWork> {
    let year = target.target_year;
    let y_train = target.select_players(&split.train)?.values;
    let y_test = target.select_players(&split.test)?.values;
    // eliminate down to one feature so the curve and ranking are complete,
    // then keep the configured number of survivors
    let mut rfe = rfe_rank(
        x_train,
        &y_train,
        1,
        derive_seed(cfg.seed, &format!("rfe-{kind}-{year}")),
    )?;
    rfe.retained = rfe.trace.survivors(cfg.retained);
    let xr_train = x_train.select_columns(&rfe.retained)?;
    let xr_test = x_test.select_columns(&rfe.retained)?;

    let mut tuned = Vec::new();
    let mut models = Vec::new();
    let mut predicted = Vec::new();
    if cmd.depth() >= Command::Tune.depth() {
        for &m in &cfg.models {
            let t = grid_search(
                &cfg.grid(m).points(),
                &xr_train,
                &y_train,
                cfg.folds,
                derive_seed(cfg.seed, &format!("tune-{kind}-{year}-{m}")),
            )?;
            log::info!("{kind} season {year} {m}: best {} (CV R² {:.4})", t.best, t.best_score);
            if cmd.depth() >= Command::Train.depth() {
                let model = fit(
                    &xr_train,
                    &y_train,
                    &t.best,
                    derive_seed(cfg.seed, &format!("train-{kind}-{year}-{m}")),
                )?;
                if !model.converged {
                    log::warn!("{kind} season {year} {m}: fit stopped at its iteration cap");
                }
                predicted.push((m.as_str().to_string(), predict(&model, &xr_test)?));
                models.push(model);
            }
            tuned.push(t);
        }
    }
    predicted.push((DELTA_LABEL.to_string(), delta.0.clone()));
    Ok(YearWork {
        year,
        rfe,
        tuned,
        models,
        predictions: YearPredictions {
            target_year: year,
            player_ids: split.test.clone(),
            actual: y_test,
            predicted,
            imputed_base: delta.1.clone(),
        },
    })
}
