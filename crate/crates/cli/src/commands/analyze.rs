use std::path::PathBuf;

use cqa_core::corpus::{aggregate_ledgers, build_activity_network, build_ff_network, EventCorpus, PostKind};
use cqa_core::deviance::{
    classify_cohorts, cohort_comparisons, compare_polynomial_models, compute_deviance, flag_activity_correlations,
    flagged_fraction_distribution, never_flagged_comparisons, suspension_probability_curve, GroupComparison,
};
use cqa_core::graph::{
    degree_distribution, fit_power_law, local_clustering, reciprocity, weakly_connected_components, ClusteringMode,
    DegreeDirection, DirectedGraph, Orientation,
};
use cqa_core::homophily::{
    answer_distance_profile, attribute_assortativity, deviance_similarity_profile, flag_distance_profile,
    report_distance_histogram, sigma_delta, DistanceProfile, HistogramVariant,
};
use cqa_core::stats::EmpiricalDistribution;
use cqa_core::timing::{deletion_delay_cdf, deletion_delay_summary, report_time_to_flag_cdf};
use cqa_core::Result as CoreResult;

use super::{command_line, corpus_dir, open_corpus, seed};
use crate::args::{AnalyzeArgs, Analysis, GlobalArgs};
use crate::failure::{ExitCode, Outcome};
use crate::manifest::Stage;
use crate::row;
use crate::table::Table;

const KINDS: [PostKind; 2] = [PostKind::Question, PostKind::Answer];

pub fn run(g: &GlobalArgs, a: &AnalyzeArgs) -> Outcome {
    let seed = seed(g);
    let dir = corpus_dir(g, &a.corpus);
    let config = serde_json::json!({
        "analysis": a.analysis.as_str(),
        "max_hop": a.max_hop,
        "sample_size": a.sample_size,
        "n_perm": a.n_perm,
        "max_degree": a.max_degree,
        "delta_sigma": a.delta_sigma,
        "x_min": a.x_min,
        "format": g.format.extension(),
    });
    let name = format!("analyze.{}", a.analysis.as_str());
    let mut stage = Stage::begin(&name, command_line(), seed, g.threads, config);
    let (corpus, files) = open_corpus(&dir)?;
    files.into_iter().for_each(|f| stage.input(f));

    let tables = match a.analysis {
        Analysis::Network => network(&corpus, a),
        Analysis::Deviance => deviance(&corpus, a, seed),
        Analysis::Homophily => homophily(&corpus, a, seed),
        Analysis::Timing => timing(&corpus),
    }
    .analysis()?;

    let out = g.out_dir.join(a.analysis.as_str());
    let mut written: Vec<PathBuf> = Vec::new();
    for t in &tables {
        written.push(t.write(&out, g.format).analysis()?);
    }
    for p in &written {
        println!("{}", p.display());
        stage.output(p);
    }
    stage.finish(&g.out_dir).analysis()
}

fn distribution_table(name: String, x: &str, y: &str, d: &EmpiricalDistribution) -> Table {
    let mut t = Table::new(name, &[x, y]);
    for (v, p) in d.steps() {
        t.push(row![v, p]);
    }
    t
}

fn degree_ccdf(name: &str, g: &DirectedGraph, dir: DegreeDirection) -> Table {
    let dist = degree_distribution(g, dir);
    let n = dist.node_count() as f64;
    let mut t = Table::new(name, &["degree", "ccdf"]);
    let mut at_least = dist.node_count();
    for (&d, &c) in &dist.counts {
        t.push(row![d, at_least as f64 / n]);
        at_least -= c;
    }
    t
}

fn network(corpus: &EventCorpus, a: &AnalyzeArgs) -> CoreResult<Vec<Table>> {
    let graphs = [("ff", build_ff_network(corpus)), ("an", build_activity_network(corpus))];
    let mut summary = Table::new(
        "network_summary",
        &[
            "network",
            "nodes",
            "edges",
            "reciprocity",
            "wcc_count",
            "largest_wcc_fraction",
            "mean_clustering",
            "alpha_in",
            "alpha_out",
        ],
    );
    let mut tables = Vec::new();
    for (name, g) in &graphs {
        let wcc = weakly_connected_components(g);
        let largest = wcc.iter().map(Vec::len).max().unwrap_or(0);
        let cc = local_clustering(g, ClusteringMode::Reciprocated);
        let alpha = |d| fit_power_law(&degree_distribution(g, d), a.x_min).map(|f| f.alpha);
        summary.push(row![
            *name,
            g.node_count(),
            g.edge_count(),
            reciprocity(g)?,
            wcc.len(),
            largest as f64 / g.node_count().max(1) as f64,
            cc.iter().sum::<f64>() / cc.len().max(1) as f64,
            alpha(DegreeDirection::In)?,
            alpha(DegreeDirection::Out)?,
        ]);
        tables.push(degree_ccdf(&format!("degree_ccdf_{name}_in"), g, DegreeDirection::In));
        tables.push(degree_ccdf(&format!("degree_ccdf_{name}_out"), g, DegreeDirection::Out));
    }
    tables.insert(0, summary);
    Ok(tables)
}

fn comparison_tables(prefix: &str, comparisons: &[GroupComparison]) -> [Table; 2] {
    let mut groups = Table::new(
        format!("{prefix}_groups"),
        &["metric", "group", "n", "min", "q1", "median", "mean", "q3", "max"],
    );
    let mut tests = Table::new(
        format!("{prefix}_tests"),
        &["metric", "group_a", "group_b", "ks_d", "ks_p", "mean_diff", "perm_z", "perm_p"],
    );
    for c in comparisons {
        for s in &c.groups {
            let st = s.stats.map_or([f64::NAN; 6], |d| [d.min, d.q1, d.median, d.mean, d.q3, d.max]);
            groups.push(row![c.metric.as_str(), s.label.as_str(), s.n, st[0], st[1], st[2], st[3], st[4], st[5]]);
        }
        for t in &c.tests {
            tests.push(row![
                c.metric.as_str(),
                t.a.as_str(),
                t.b.as_str(),
                t.ks.statistic,
                t.ks.p_value,
                t.permutation.statistic,
                t.permutation.z.unwrap_or(f64::NAN),
                t.permutation.p_value,
            ]);
        }
    }
    [groups, tests]
}

fn deviance(corpus: &EventCorpus, a: &AnalyzeArgs, seed: u64) -> CoreResult<Vec<Table>> {
    let ledgers = aggregate_ledgers(corpus);
    let report = compute_deviance(&ledgers)?;
    let suspended = corpus.suspended_by_index();
    let mut tables = Vec::new();

    let mut rep = Table::new(
        "deviance_report",
        &["user_id", "question_deviance", "answer_deviance", "suspended"],
    );
    for i in 0..report.len() {
        rep.push(row![
            report.ids[i].as_str(),
            report.question_deviance[i],
            report.answer_deviance[i],
            suspended[i],
        ]);
    }
    tables.push(rep);

    let mut reg = Table::new("regression", &["kind", "alpha", "beta", "r_squared", "n"]);
    for (kind, m) in [("question", &report.question_model), ("answer", &report.answer_model)] {
        reg.push(row![kind, m.alpha, m.beta, m.r_squared, m.n]);
    }
    tables.push(reg);

    let mut poly = Table::new(
        "polynomial_models",
        &["kind", "degree", "r_squared", "adjusted_r_squared", "selected"],
    );
    for kind in KINDS {
        let (fits, best) = compare_polynomial_models(&ledgers, kind, a.max_degree)?;
        for (i, f) in fits.iter().enumerate() {
            poly.push(row![kind.as_str(), f.degree, f.r_squared, f.adjusted_r_squared, i == best]);
        }
    }
    tables.push(poly);

    let corr = flag_activity_correlations(&ledgers)?;
    let mut pairs = Table::new("flag_correlations", &["x", "y", "r"]);
    for (x, y, r) in &corr.pairs {
        pairs.push(row![x.as_str(), y.as_str(), *r]);
    }
    tables.push(pairs);
    let mut heat = Table::new("flag_heatmap", &["kind", "row", "column", "r"]);
    for (kind, m) in [("question", &corr.question_heatmap), ("answer", &corr.answer_heatmap)] {
        for (i, r) in m.iter().enumerate() {
            for (j, v) in r.iter().enumerate() {
                heat.push(row![kind, corr.heatmap_labels[i].as_str(), corr.heatmap_labels[j].as_str(), *v]);
            }
        }
    }
    tables.push(heat);

    for kind in KINDS {
        let d = flagged_fraction_distribution(&ledgers, kind)?;
        tables.push(distribution_table(
            format!("flagged_fraction_{}", kind.as_str()),
            "flagged_fraction",
            "cdf",
            &d,
        ));
    }

    let percents: Vec<f64> = (1..=100).map(f64::from).collect();
    let rows = ledgers.rows();
    let flags_q: Vec<f64> = rows.iter().map(|r| r.q_flags_received as f64).collect();
    let flags_a: Vec<f64> = rows.iter().map(|r| r.a_flags_received as f64).collect();
    let curves = [
        &report.question_deviance,
        &flags_q,
        &report.answer_deviance,
        &flags_a,
    ]
    .map(|s| suspension_probability_curve(&report.ids, s, &suspended, &percents));
    let curves = curves.into_iter().collect::<CoreResult<Vec<_>>>()?;
    let mut curve = Table::new(
        "suspension_curve",
        &["top_percent", "question_deviance", "question_flags", "answer_deviance", "answer_flags"],
    );
    for (i, x) in percents.iter().enumerate() {
        curve.push(row![*x, curves[0][i].1, curves[1][i].1, curves[2][i].1, curves[3][i].1]);
    }
    tables.push(curve);

    let an = build_activity_network(corpus);
    let ff = build_ff_network(corpus);
    let cohorts = classify_cohorts(&report, &suspended);
    tables.extend(comparison_tables(
        "cohort",
        &cohort_comparisons(corpus, &ledgers, &an, &cohorts, a.n_perm, seed),
    ));
    tables.extend(comparison_tables(
        "never_flagged",
        &never_flagged_comparisons(&ledgers, &ff, &suspended, a.n_perm, seed),
    ));
    Ok(tables)
}

fn profile_table(name: String, p: &DistanceProfile) -> Table {
    let mut t = Table::new(name, &["hop", "probability", "n_users"]);
    for pt in &p.points {
        t.push(row![pt.hop, pt.probability, pt.n_users]);
    }
    t
}

fn sigma_label(k: f64) -> String {
    format!("{k}sigma").replace('.', "_")
}

fn homophily(corpus: &EventCorpus, a: &AnalyzeArgs, seed: u64) -> CoreResult<Vec<Table>> {
    let ff = build_ff_network(corpus);
    let an = build_activity_network(corpus);
    let ledgers = aggregate_ledgers(corpus);
    let report = compute_deviance(&ledgers)?;
    let (h, n) = (a.max_hop, a.sample_size);
    let mut tables = vec![
        profile_table("answer_profile".into(), &answer_distance_profile(&ff, corpus, h, n, seed)?),
        profile_table("flag_profile_ff".into(), &flag_distance_profile(&ff, corpus, h, n, seed)?),
        profile_table("flag_profile_an".into(), &flag_distance_profile(&an, corpus, h, n, seed)?),
    ];
    for (kind, scores) in [("question", &report.question_deviance), ("answer", &report.answer_deviance)] {
        for &k in &a.delta_sigma {
            let p = deviance_similarity_profile(&ff, scores, sigma_delta(scores, k), h, n, seed)?;
            tables.push(profile_table(format!("similarity_{kind}_{}", sigma_label(k)), &p));
        }
    }
    let valid: Vec<_> = corpus.flags().iter().filter(|f| f.valid).cloned().collect();
    let mut assort = Table::new("assortativity", &["network", "attribute", "r"]);
    for (name, g) in [("ff", &ff), ("an", &an)] {
        let hist = |v| report_distance_histogram(g, &valid, v, h, Orientation::Forward, seed);
        let (obs, null) = (hist(HistogramVariant::Observed)?, hist(HistogramVariant::Null)?);
        let mut t = Table::new(format!("report_distance_{name}"), &["hop", "observed_pct", "null_pct"]);
        for i in 0..h {
            t.push(row![i + 1, obs.percentages[i], null.percentages[i]]);
        }
        tables.push(t);
        for (attr, scores) in [
            ("question_deviance", &report.question_deviance),
            ("answer_deviance", &report.answer_deviance),
        ] {
            assort.push(row![name, attr, attribute_assortativity(g, scores)?]);
        }
    }
    tables.push(assort);
    Ok(tables)
}

fn timing(corpus: &EventCorpus) -> CoreResult<Vec<Table>> {
    let mut tables = Vec::new();
    let mut summary = Table::new("deletion_summary", &["kind", "n", "within_one_day", "within_three_days"]);
    for kind in KINDS {
        let k = kind.as_str();
        let del = deletion_delay_cdf(corpus, kind)?;
        tables.push(distribution_table(format!("deletion_delay_{k}"), "delay_seconds", "cdf", &del));
        let rep = report_time_to_flag_cdf(corpus, kind)?;
        tables.push(distribution_table(format!("report_delay_{k}"), "delay_seconds", "cdf", &rep));
        let s = deletion_delay_summary(corpus, kind)?;
        summary.push(row![k, s.n, s.within_one_day, s.within_three_days]);
    }
    tables.push(summary);
    Ok(tables)
}
