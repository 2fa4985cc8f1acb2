use cqa_core::learn::model::MODEL_VERSION;
use cqa_core::learn::validation::EliminationStep;
use cqa_core::learn::{
    backward_elimination, cross_validate, dataset_from_corpus, feature_importance, holdout, Algorithm, CvConfig,
    EvalReport, FeatureCategory, GbtParams, HoldoutConfig, Label, LabeledDataset, StatusSmoothing, TrainConfig,
    FEATURE_NAMES,
};
use cqa_core::learn::classifiers::{KnnParams, LogisticParams};
use serde::{Deserialize, Serialize};

use super::{command_line, corpus_dir, open_corpus, read_toml, seed};
use crate::args::{GlobalArgs, LearnArgs};
use crate::failure::{ExitCode, Outcome};
use crate::manifest::Stage;
use crate::row;
use crate::table::Table;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LearnConfig {
    pub algorithm: Algorithm,
    pub status_smoothing: StatusSmoothing,
    pub logistic: LogisticParams,
    pub knn: KnnParams,
    pub gbt: GbtParams,
    pub holdout: HoldoutConfig,
    pub cv: CvConfig,
    /// Cross-validation used inside feature importance and elimination.
    pub importance: CvConfig,
}

impl Default for LearnConfig {
    fn default() -> Self {
        let t = TrainConfig::default();
        LearnConfig {
            algorithm: t.algorithm,
            status_smoothing: StatusSmoothing::default(),
            logistic: t.logistic,
            knn: t.knn,
            gbt: t.gbt,
            holdout: HoldoutConfig::default(),
            cv: CvConfig::default(),
            importance: CvConfig {
                folds: 3,
                repeats: 1,
                ..CvConfig::default()
            },
        }
    }
}

impl LearnConfig {
    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            algorithm: self.algorithm,
            logistic: self.logistic,
            knn: self.knn,
            gbt: self.gbt,
        }
    }
}

fn category_of(name: &str) -> &'static str {
    match FEATURE_NAMES.iter().position(|f| *f == name).map(FeatureCategory::of) {
        Some(FeatureCategory::Social) => "social",
        Some(FeatureCategory::Activity) => "activity",
        Some(FeatureCategory::Accomplishment) => "accomplishment",
        Some(FeatureCategory::Flag) => "flag",
        Some(FeatureCategory::DevianceScore) => "deviance_score",
        Some(FeatureCategory::DevianceHomophily) => "deviance_homophily",
        None => "",
    }
}

fn print_report(algo: Algorithm, e: &EvalReport) {
    println!("{:<12} {:>9} {:>9} {:>9} {:>9}", "algorithm", "accuracy", "precision", "recall", "f1");
    println!(
        "{:<12} {:>9.2} {:>9.2} {:>9.2} {:>9.2}",
        algo.as_str(),
        e.accuracy,
        e.precision,
        e.recall,
        e.f1
    );
    println!();
    println!("{:<16} {:>12} {:>17}", "", "actual fair", "actual suspended");
    for l in Label::ALL {
        let r = e.confusion[l.index()];
        println!("{:<16} {:>12.2} {:>17.2}", format!("predicted {l}"), r[0], r[1]);
    }
}

pub fn run(g: &GlobalArgs, a: &LearnArgs) -> Outcome {
    let mut cfg: LearnConfig = match &a.config {
        Some(p) => read_toml(p).usage()?,
        None => LearnConfig::default(),
    };
    if let Some(name) = &a.algo {
        cfg.algorithm = name.parse().usage()?;
    }
    cfg.gbt.validate().usage()?;
    if let Some(b) = &cfg.holdout.balance {
        b.validate().usage()?;
    }
    let seed = seed(g);
    let mut snapshot = serde_json::to_value(&cfg).expect("config serializes");
    snapshot["cv_enabled"] = a.cv.into();
    snapshot["importance_enabled"] = (!a.no_importance).into();
    snapshot["elimination_enabled"] = a.elimination.into();
    snapshot["model_version"] = MODEL_VERSION.into();
    let mut stage = Stage::begin("learn", command_line(), seed, g.threads, snapshot);
    let out = g.out_dir.join("learn");
    std::fs::create_dir_all(&out).analysis()?;

    let data = match &a.dataset {
        Some(p) => {
            stage.input(p);
            LabeledDataset::read_csv(p).analysis()?
        }
        None => {
            let (corpus, files) = open_corpus(&corpus_dir(g, &a.corpus))?;
            files.into_iter().for_each(|f| stage.input(f));
            let d = dataset_from_corpus(&corpus, cfg.status_smoothing).analysis()?;
            let path = out.join("dataset.csv");
            d.write_csv(&path).analysis()?;
            stage.output(path);
            d
        }
    };
    let [fair, susp] = data.class_counts();
    log::info!("{} users: {fair} fair, {susp} suspended", data.len());

    let train_cfg = cfg.train_config();
    let result = holdout(&data, &train_cfg, &cfg.holdout, seed).training()?;
    let e = &result.report;
    print_report(cfg.algorithm, e);

    let mut tables = Vec::new();
    let mut metrics = Table::new("metrics", &["algorithm", "accuracy", "precision", "recall", "f1", "n_test"]);
    metrics.push(row![cfg.algorithm.as_str(), e.accuracy, e.precision, e.recall, e.f1, e.n]);
    tables.push(metrics);
    let mut confusion = Table::new("confusion", &["predicted", "actual_fair", "actual_suspended"]);
    for l in Label::ALL {
        let r = e.confusion[l.index()];
        confusion.push(row![l.as_str(), r[0], r[1]]);
    }
    tables.push(confusion);

    let test = data.subset(&result.test_rows);
    let preds = result.model.predict(&test.x).training()?;
    let mut pt = Table::new("predictions", &["user_id", "actual", "predicted", "p_suspended"]);
    for ((id, y), p) in test.ids.iter().zip(&test.y).zip(&preds) {
        pt.push(row![id.as_str(), y.as_str(), p.label.as_str(), p.p_suspended]);
    }
    tables.push(pt);
    let model_path = out.join("model.json");
    result.model.save(&model_path).analysis()?;
    stage.output(&model_path);

    if a.cv {
        let cv = cross_validate(&data, &train_cfg, &cfg.cv, seed).training()?;
        let mut t = Table::new("cv", &["metric", "mean", "std"]);
        let m = &cv.mean;
        println!();
        println!("{} x {} cross-validation", cfg.cv.repeats, cfg.cv.folds);
        for (name, mean, std) in [
            ("accuracy", m.accuracy, cv.std_accuracy),
            ("precision", m.precision, cv.std_precision),
            ("recall", m.recall, cv.std_recall),
            ("f1", m.f1, cv.std_f1),
        ] {
            println!("{name:<10} {mean:>7.2} ± {std:.2}");
            t.push(row![name, mean, std]);
        }
        tables.push(t);
    }

    if !a.no_importance {
        let imp = feature_importance(&data, &train_cfg, &cfg.importance, seed).training()?;
        let mut t = Table::new(
            "importance",
            &["rank", "feature", "category", "importance", "accuracy_without"],
        );
        for (i, f) in imp.ranked().into_iter().enumerate() {
            t.push(row![i + 1, f.feature.as_str(), category_of(&f.feature), f.importance, f.accuracy_without]);
        }
        tables.push(t);
    }

    if a.elimination {
        let steps: Vec<EliminationStep> = backward_elimination(&data, &train_cfg, &cfg.importance, seed).training()?;
        let mut t = Table::new("elimination", &["step", "removed", "accuracy"]);
        for (i, s) in steps.iter().enumerate() {
            t.push(row![i + 1, s.removed.as_str(), s.accuracy]);
        }
        tables.push(t);
    }

    for t in &tables {
        stage.output(t.write(&out, g.format).analysis()?);
    }
    stage.finish(&g.out_dir).analysis()
}
