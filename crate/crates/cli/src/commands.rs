//! The six subcommands. Each takes the effective config and an output
//! directory, writes its artifacts, and reports progress on standard
//! error only.

use std::path::Path;

use anyhow::{bail, Context};
use egl_core::embed::mc_embedding_error;
use egl_core::exact::{conditional_error, ClassCounts, TieRule};
use egl_core::model::{errorful_block_matrix, BlockModel, Design, FeatureModel};
use egl_core::optimize::{
    bayes_threshold, btilde_path, build_surface, linear_grid, mean_variance_curve,
    normal_approx_optimum, projection_optimum,
};
use egl_core::sim::celegans::celegans_experiment;
use egl_core::sim::graph::{conditioned_counts, sample_sbm, Conditioning, LabeledGraph};
use egl_core::sim::harness::{monte_carlo_vertex_error, VertexClassifier};
use egl_core::sim::io::{load_graph, WeightRule};
use egl_core::special::std_normal_cdf;

use crate::config::{ClassifierChoice, RunConfig};
use crate::output::{csv_row, OutDir};

/// Error surface over the full (kappa, tau) grid: the surface CSV, the
/// grid argmin, and the best threshold per kappa row.
pub fn cmd_surface(cfg: &RunConfig, out: &mut OutDir) -> anyhow::Result<()> {
    let bm = cfg.block_model()?;
    let fm = cfg.feature_model()?;
    let kappas = cfg.kappa_grid.points()?;
    let taus = cfg.tau_grid.points()?;
    eprintln!(
        "surface: {} x {} cells, {} evaluator",
        kappas.len(),
        taus.len(),
        cfg.evaluator
    );
    let surface = build_surface(&bm, &fm, &kappas, &taus, &cfg.surface_evaluator(&bm))?;

    let mut rows = Vec::with_capacity(kappas.len() * taus.len());
    for (i, &kappa) in surface.kappa_grid.iter().enumerate() {
        for (j, &tau) in surface.tau_grid.iter().enumerate() {
            rows.push(csv_row(&[
                kappa,
                surface.assess[i],
                tau,
                surface.values[i][j].get(),
            ]));
        }
    }
    out.write_csv("surface.csv", "kappa,h_kappa,tau,L", rows)?;

    let curve: Vec<String> = surface
        .kappa_grid
        .iter()
        .zip(&surface.assess)
        .zip(&surface.per_kappa_argmin_tau)
        .map(|((&kappa, &h), opt)| csv_row(&[kappa, h, opt.tau, opt.value]))
        .collect();
    out.write_csv("optimal_tau.csv", "kappa,h_kappa,tau_star,L", curve)?;

    out.write_json(
        "argmin.json",
        serde_json::json!({
            "kappa_star": surface.argmin.kappa,
            "tau_star": surface.argmin.tau,
            "l_star": surface.argmin.value,
            "evaluator": cfg.evaluator.to_string(),
        }),
    )
}

/// Observed block probabilities (B~11, B~12) along tau at fixed kappa,
/// with the exact error overlaid.
pub fn cmd_path(cfg: &RunConfig, out: &mut OutDir) -> anyhow::Result<()> {
    let bm = cfg.block_model()?;
    let fm = cfg.feature_model()?;
    let taus = cfg.tau_grid.points()?;
    eprintln!("path: kappa {} over {} thresholds", cfg.kappa, taus.len());
    let points = btilde_path(&bm, &fm, cfg.kappa, &taus)?;
    out.write_csv(
        "path.csv",
        "tau,b11,b12,L",
        points
            .iter()
            .map(|p| csv_row(&[p.tau, p.b11, p.b12, p.error])),
    )
}

/// Mean and variance of the per-vertex block-degree signal along tau
/// at fixed kappa, plus the qualitative shape summary.
pub fn cmd_curves(cfg: &RunConfig, out: &mut OutDir) -> anyhow::Result<()> {
    let bm = cfg.block_model()?;
    let fm = cfg.feature_model()?;
    let taus = cfg.tau_grid.points()?;
    eprintln!("curves: kappa {} over {} thresholds", cfg.kappa, taus.len());
    let curve = mean_variance_curve(&bm, &fm, cfg.kappa, &taus, bm.n())?;
    out.write_csv(
        "curves.csv",
        "tau,mean,variance",
        curve
            .points
            .iter()
            .map(|p| csv_row(&[p.tau, p.mean, p.variance])),
    )?;
    out.write_json(
        "diagnostics.json",
        serde_json::json!({
            "kappa": cfg.kappa,
            "argmax_mean_tau": curve.argmax_mean_tau,
            "variance_nonincreasing": curve.variance_nonincreasing,
        }),
    )
}

/// Exact error of the likelihood rule at the prior-proportional block
/// split, one threshold.
fn exact_error(
    bm: &BlockModel,
    fm: &FeatureModel,
    counts: &ClassCounts,
    kappa: f64,
    tau: f64,
) -> anyhow::Result<f64> {
    let rates = fm.channel_rates(&Design { kappa, tau })?;
    let bt = errorful_block_matrix(bm, &rates);
    Ok(conditional_error(counts, &bt, bm.pi(), TieRule::default())?.get())
}

/// Normal approximation of the balanced two-block error, one
/// threshold.
fn normal_error(bm: &BlockModel, fm: &FeatureModel, kappa: f64, tau: f64) -> anyhow::Result<f64> {
    let rates = fm.channel_rates(&Design { kappa, tau })?;
    let bt = errorful_block_matrix(bm, &rates);
    let (b11, b12) = (bt[0][0], bt[0][1]);
    let half = ((bm.n() - 1) / 2) as f64;
    let mu = half * (b11 - b12);
    let var = half * (b11 * (1.0 - b11) + b12 * (1.0 - b12));
    Ok(if var > 0.0 {
        std_normal_cdf(-mu / var.sqrt()).get()
    } else if mu > 0.0 {
        0.0
    } else {
        0.5
    })
}

/// Side-by-side error curves at fixed kappa (exact, normal
/// approximation, optionally the Monte Carlo embedding pipeline) and
/// the four reported optima.
pub fn cmd_compare(cfg: &RunConfig, out: &mut OutDir) -> anyhow::Result<()> {
    let bm = cfg.block_model()?;
    let fm = cfg.feature_model()?;
    let kappa = cfg.kappa;
    let counts = ClassCounts::new(conditioned_counts(bm.pi(), bm.n() - 1))?;

    // Optima on the finer search grid; the normal-approximation
    // optimum also guards the model shape for the L_normal column.
    let search = linear_grid(cfg.tau_grid.min, cfg.tau_grid.max, cfg.compare.optimum_tau_step)?;
    eprintln!("compare: kappa {kappa}, optimum search over {} thresholds", search.len());
    let mut tau_star = (f64::INFINITY, 0.0);
    for &tau in &search {
        let err = exact_error(&bm, &fm, &counts, kappa, tau)?;
        if err < tau_star.0 {
            tau_star = (err, tau);
        }
    }
    let (_, tau_normal) = normal_approx_optimum(&bm, &fm, &[kappa], &search)?;
    let (_, tau_projection) =
        projection_optimum(&bm, &fm, &[kappa], &search, cfg.compare.embedding_dimension)?;
    let tau_bayes = bayes_threshold(&bm, &fm, kappa)?;

    let taus = linear_grid(cfg.tau_grid.min, cfg.tau_grid.max, cfg.compare.tau_step)?;
    let embedding = if cfg.compare.embedding_trials > 0 {
        eprintln!(
            "compare: embedding pipeline, {} trials x {} thresholds",
            cfg.compare.embedding_trials,
            taus.len()
        );
        Some(mc_embedding_error(
            &bm,
            &fm,
            kappa,
            &taus,
            cfg.compare.embedding_dimension,
            cfg.compare.embedding_trials,
            cfg.seed,
        )?)
    } else {
        None
    };

    let mut rows = Vec::with_capacity(taus.len());
    for (j, &tau) in taus.iter().enumerate() {
        let mut cells = vec![
            tau,
            exact_error(&bm, &fm, &counts, kappa, tau)?,
            normal_error(&bm, &fm, kappa, tau)?,
        ];
        if let Some(points) = &embedding {
            cells.push(points[j].error_rate);
            cells.push(points[j].std_error);
        }
        rows.push(csv_row(&cells));
    }
    let header = if embedding.is_some() {
        "tau,L_exact,L_normal,L_hat_embedding,se"
    } else {
        "tau,L_exact,L_normal"
    };
    out.write_csv("compare.csv", header, rows)?;

    out.write_json(
        "optima.json",
        serde_json::json!({
            "kappa": kappa,
            "tau_star": tau_star.1,
            "l_star": tau_star.0,
            "tau_normal": tau_normal,
            "tau_projection": tau_projection,
            "tau_bayes": tau_bayes,
        }),
    )
}

/// Quantity-versus-quality sweep: leave-one-out error of the plug-in
/// rule under a binary assessment channel, over an operating-point
/// grid and along fixed-budget curves.
pub fn cmd_celegans(cfg: &RunConfig, out: &mut OutDir) -> anyhow::Result<()> {
    let c = &cfg.celegans;
    let (g, source): (LabeledGraph, &str) = match (&c.edges, &c.labels) {
        (Some(edges), Some(labels)) => {
            let loaded = load_graph(
                Path::new(edges),
                Path::new(labels),
                WeightRule::NonzeroIsEdge,
            )?;
            for w in &loaded.warnings {
                eprintln!("warning: {w}");
            }
            (loaded.graph, "dataset")
        }
        (None, None) => {
            let bm = c.surrogate.build().context("config /celegans/surrogate")?;
            let counts = conditioned_counts(bm.pi(), bm.n());
            let g = sample_sbm(&bm, cfg.seed, &Conditioning::FixedCounts(counts))?;
            (g, "surrogate")
        }
        _ => bail!("config /celegans: edges and labels must be given together"),
    };
    let n = g.n();
    let edges = g.edge_count();
    let density = 2.0 * edges as f64 / (n as f64 * (n as f64 - 1.0));
    eprintln!(
        "celegans: {source} graph, n={n}, {edges} edges, {}x{} grid, {} curves, {} trials",
        c.assess_grid.len(),
        c.accuracy_grid.len(),
        c.q_list.len(),
        cfg.trials
    );

    let table = celegans_experiment(
        &g,
        &c.assess_grid,
        &c.accuracy_grid,
        &c.q_list,
        cfg.trials,
        cfg.seed,
    )?;

    out.write_csv(
        "grid.csv",
        "assess,accuracy,error,se",
        table.grid.iter().map(|cell| {
            csv_row(&[
                cell.assess,
                cell.accuracy,
                cell.report.error_rate,
                cell.report.std_error,
            ])
        }),
    )?;
    out.write_csv(
        "curves.csv",
        "q,assess,accuracy,error,se",
        table.curves.iter().map(|cell| {
            csv_row(&[
                cell.q,
                cell.assess,
                cell.accuracy,
                cell.report.error_rate,
                cell.report.std_error,
            ])
        }),
    )?;
    out.write_json(
        "summary.json",
        serde_json::json!({
            "source": source,
            "n": n,
            "edges": edges,
            "density": density,
            "trials": cfg.trials,
            "gold": serde_json::to_value(&table.gold)?,
            "chance": table.chance,
            "estimate": serde_json::to_value(&table.estimate)?,
        }),
    )
}

/// Monte Carlo misclassification estimate for one classifier at one
/// design point.
pub fn cmd_simulate(cfg: &RunConfig, out: &mut OutDir) -> anyhow::Result<()> {
    let bm = cfg.block_model()?;
    let fm = cfg.feature_model()?;
    let design = Design {
        kappa: cfg.simulate.kappa,
        tau: cfg.simulate.tau,
    };
    let classifier = match cfg.simulate.classifier {
        ClassifierChoice::Gamma => VertexClassifier::Gamma,
        ClassifierChoice::Plugin => VertexClassifier::Plugin,
        ClassifierChoice::McarLr => VertexClassifier::McarLr,
    };
    eprintln!(
        "simulate: {} at kappa={} tau={}, {} trials",
        cfg.simulate.classifier, design.kappa, design.tau, cfg.trials
    );
    let report = monte_carlo_vertex_error(&bm, &fm, design, classifier, cfg.trials, cfg.seed)?;
    out.write_json(
        "report.json",
        serde_json::json!({
            "classifier": cfg.simulate.classifier.to_string(),
            "kappa": design.kappa,
            "tau": design.tau,
            "report": serde_json::to_value(&report)?,
        }),
    )
}
