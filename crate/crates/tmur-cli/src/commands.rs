//! Subcommand implementations and artifact writers.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use tmur_core::autodiff::Tape;
use tmur_core::data::{
    add_gaussian_noise, load_manifest, perturb_view_strength, MultiViewDataset,
};
use tmur_core::evidential::ScaleFamily;
use tmur_core::loss::LossWeights;
use tmur_core::metrics::{self, MetricsReport, PredictionRecord, PredictionSet};
use tmur_core::model::{
    predictions_from_evidence, ModelConfig, RouterInput, SavedModel, TmurModel,
};
use tmur_core::report::{
    fmt_float, mean_std, write_keyvalues, write_metrics_bundle, write_reliability_csv,
    write_trace_csv,
};
use tmur_core::theory::{
    check_scale_bias, check_routing_gap, log_grid, routing_gap_learning_demo, static_demo_spec,
    xor_demo_model_config, xor_demo_spec, xor_demo_train_config, GapDemoReport,
    RoutingGapInstance,
};
use tmur_core::train::{
    evaluate_model, run_training, stratified_split, TrainConfig, TrainOutcome, PROTOCOL_SEEDS,
};
use tmur_core::{Result, TmurError};

use crate::{
    AblateArgs, AblationChoice, Command, EvalArgs, HyperArgs, PerturbKind, SweepArgs,
    TheoryArgs, TheoryCheck, TrainArgs,
};

pub fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::Train(args) => cmd_train(&args),
        Command::Eval(args) => cmd_eval(&args),
        Command::Ablate(args) => cmd_ablate(&args),
        Command::Sweep(args) => cmd_sweep(&args),
        Command::Theory(args) => cmd_theory(&args),
    }
}

// ---------------------------------------------------------------- flag glue

fn usage(msg: impl Into<String>) -> TmurError {
    TmurError::domain(msg)
}

fn parse_f64_list(text: &str, flag: &str) -> Result<Vec<f64>> {
    text.split(',')
        .map(|tok| {
            let tok = tok.trim();
            tok.parse::<f64>()
                .map_err(|_| usage(format!("--{flag}: cannot parse '{tok}' as a number")))
        })
        .collect()
}

fn parse_usize_list(text: &str, flag: &str) -> Result<Vec<usize>> {
    text.split(',')
        .map(|tok| {
            let tok = tok.trim();
            tok.parse::<usize>()
                .map_err(|_| usage(format!("--{flag}: cannot parse '{tok}' as an integer")))
        })
        .collect()
}

fn resolve_seeds(seed: Option<u64>, seeds: Option<&str>, fallback: &[u64]) -> Result<Vec<u64>> {
    if let Some(s) = seed {
        return Ok(vec![s]);
    }
    let Some(spec) = seeds else {
        return Ok(fallback.to_vec());
    };
    if spec.trim() == "five" {
        return Ok(PROTOCOL_SEEDS.to_vec());
    }
    spec.split(',')
        .map(|tok| {
            let tok = tok.trim();
            tok.parse::<u64>()
                .map_err(|_| usage(format!("--seeds: cannot parse '{tok}' as a seed")))
        })
        .collect()
}

fn model_config(hyper: &HyperArgs, ds: &MultiViewDataset) -> Result<ModelConfig> {
    let mut mc = ModelConfig::new(ds.view_dims(), ds.num_classes);
    mc.aligned_dim = hyper.aligned_dim;
    mc.hidden_dims = parse_usize_list(&hyper.hidden, "hidden")?;
    mc.temperature = hyper.tau;
    mc.validate()?;
    Ok(mc)
}

fn train_config(hyper: &HyperArgs, beta: f64, gamma: f64, seed: u64) -> Result<TrainConfig> {
    let mut tc = TrainConfig::new(seed);
    tc.epochs = hyper.epochs;
    tc.batch_size = hyper.batch;
    tc.base_lr = hyper.lr;
    tc.weights = LossWeights::new(hyper.lambda, beta, gamma, hyper.rho)?;
    Ok(tc)
}

fn train_once(
    ds: &MultiViewDataset,
    hyper: &HyperArgs,
    beta: f64,
    gamma: f64,
    router: RouterInput,
    seed: u64,
) -> Result<TrainOutcome> {
    let mut mc = model_config(hyper, ds)?;
    mc.router_input = router;
    let tc = train_config(hyper, beta, gamma, seed)?;
    run_training(ds, mc, &tc)
}

fn join_f64(values: &[f64]) -> String {
    values
        .iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

// -------------------------------------------------------------------- train

fn config_entries(
    args: &TrainArgs,
    seed: u64,
    mc: &ModelConfig,
) -> Vec<(String, String)> {
    let h = &args.hyper;
    vec![
        ("command".into(), "train".into()),
        ("manifest".into(), args.manifest.display().to_string()),
        ("seed".into(), seed.to_string()),
        ("epochs".into(), h.epochs.to_string()),
        ("batch".into(), h.batch.to_string()),
        ("lr".into(), fmt_float(h.lr)),
        ("lambda".into(), fmt_float(h.lambda)),
        ("beta".into(), fmt_float(args.beta)),
        ("gamma".into(), fmt_float(args.gamma)),
        ("rho".into(), fmt_float(h.rho)),
        ("tau".into(), fmt_float(h.tau)),
        (
            "hidden".into(),
            mc.hidden_dims
                .iter()
                .map(|d| d.to_string())
                .collect::<Vec<_>>()
                .join(","),
        ),
        ("aligned_dim".into(), mc.aligned_dim.to_string()),
        ("bins".into(), args.bins.to_string()),
        ("router".into(), mc.router_input.as_str().into()),
    ]
}

/// Test metrics re-binned when the requested bin count differs from the one
/// used during training. The 80/20 split is deterministic in the seed, so the
/// held-out set is reconstructed exactly.
fn metrics_for_bins(
    outcome: &TrainOutcome,
    ds: &MultiViewDataset,
    bins: usize,
) -> Result<MetricsReport> {
    if bins == outcome.report.metrics.bins {
        return Ok(outcome.report.metrics.clone());
    }
    let (_, test) = stratified_split(ds, 0.8, outcome.saved.seed)?;
    evaluate_model(&outcome.saved, &test, bins)
}

fn cmd_train(args: &TrainArgs) -> Result<()> {
    let ds = load_manifest(&args.manifest)?;
    let seeds = resolve_seeds(args.seed, args.seeds.as_deref(), &[3407])?;
    fs::create_dir_all(&args.out)?;

    let mut rows: Vec<(u64, [f64; 4])> = Vec::new();
    for &seed in &seeds {
        let outcome = train_once(
            &ds,
            &args.hyper,
            args.beta,
            args.gamma,
            RouterInput::AttentionContext,
            seed,
        )?;
        let metrics = metrics_for_bins(&outcome, &ds, args.bins)?;
        let dir = args.out.join(format!("seed{seed}"));
        fs::create_dir_all(&dir)?;

        let mc = TmurModel::attach(outcome.saved.config.clone(), &outcome.saved.params)?;
        write_keyvalues(dir.join("config.txt"), &config_entries(args, seed, mc.config()))?;
        outcome.saved.save(dir.join("model.txt"))?;
        let report = &outcome.report;
        let extra = vec![
            ("seed".to_string(), seed.to_string()),
            (
                "final_train_accuracy".to_string(),
                fmt_float(report.final_train_accuracy),
            ),
            (
                "final_test_accuracy".to_string(),
                fmt_float(report.final_test_accuracy),
            ),
            (
                "best_test_accuracy".to_string(),
                fmt_float(report.best_test_accuracy),
            ),
            ("best_epoch".to_string(), report.best_epoch.to_string()),
        ];
        write_metrics_bundle(&dir, &metrics, &extra)?;
        write_trace_csv(dir.join("trace.csv"), &report.trace)?;

        println!(
            "seed {seed}: test accuracy {:.4} (best {:.4} at epoch {}), {:.1}s",
            report.final_test_accuracy,
            report.best_test_accuracy,
            report.best_epoch,
            report.wall_seconds
        );
        rows.push((
            seed,
            [
                metrics.accuracy,
                metrics.prob_ece,
                metrics.u_ece,
                metrics.mean_uncertainty,
            ],
        ));
    }

    write_train_summary(&args.out, &rows)?;
    let accs: Vec<f64> = rows.iter().map(|r| r.1[0]).collect();
    let (mean, std) = mean_std(&accs);
    println!(
        "{} seed(s): test accuracy {:.4} \u{b1} {:.4}",
        rows.len(),
        mean,
        std
    );
    Ok(())
}

const SUMMARY_METRICS: [&str; 4] = ["test_accuracy", "prob_ece", "u_ece", "mean_uncertainty"];

fn write_train_summary(out: &Path, rows: &[(u64, [f64; 4])]) -> Result<()> {
    let mut csv = String::from("seed,test_accuracy,prob_ece,u_ece,mean_uncertainty\n");
    for (seed, m) in rows {
        let _ = writeln!(
            csv,
            "{seed},{},{},{},{}",
            fmt_float(m[0]),
            fmt_float(m[1]),
            fmt_float(m[2]),
            fmt_float(m[3])
        );
    }
    fs::write(out.join("summary.csv"), csv)?;

    let mut entries = vec![(
        "seeds".to_string(),
        rows.iter()
            .map(|(s, _)| s.to_string())
            .collect::<Vec<_>>()
            .join(","),
    )];
    for (i, name) in SUMMARY_METRICS.iter().enumerate() {
        let values: Vec<f64> = rows.iter().map(|r| r.1[i]).collect();
        let (mean, std) = mean_std(&values);
        entries.push((format!("{name}_mean"), fmt_float(mean)));
        entries.push((format!("{name}_std"), fmt_float(std)));
    }
    write_keyvalues(out.join("summary.txt"), &entries)
}

// --------------------------------------------------------------------- eval

fn cmd_eval(args: &EvalArgs) -> Result<()> {
    let saved = SavedModel::load(&args.model)?;
    let ds = load_manifest(&args.manifest)?;

    match args.perturb {
        None => {
            if args.sigma.is_some() || args.factors.is_some() {
                return Err(usage("--sigma/--factors require --perturb"));
            }
            let report = evaluate_model(&saved, &ds, args.bins)?;
            let extra = vec![("perturb".to_string(), "none".to_string())];
            write_eval_bundle(&args.out, &report, &extra, &saved, &ds, args)?;
            print_eval_line("clean", &report);
        }
        Some(PerturbKind::Scale) => {
            if args.sigma.is_some() {
                return Err(usage("--sigma applies to --perturb noise only"));
            }
            let spec = args
                .factors
                .as_deref()
                .ok_or_else(|| usage("--perturb scale requires --factors"))?;
            let factors = parse_f64_list(spec, "factors")?;
            let perturbed = perturb_view_strength(&ds, &factors)?;
            let report = evaluate_model(&saved, &perturbed, args.bins)?;
            let extra = vec![
                ("perturb".to_string(), "scale".to_string()),
                ("factors".to_string(), join_f64(&factors)),
            ];
            write_eval_bundle(&args.out, &report, &extra, &saved, &perturbed, args)?;
            print_eval_line("scaled", &report);
        }
        Some(PerturbKind::Noise) => {
            if args.factors.is_some() {
                return Err(usage("--factors applies to --perturb scale only"));
            }
            let spec = args
                .sigma
                .as_deref()
                .ok_or_else(|| usage("--perturb noise requires --sigma"))?;
            let tokens: Vec<String> =
                spec.split(',').map(|t| t.trim().to_string()).collect();
            let sigmas = parse_f64_list(spec, "sigma")?;

            let mut entries = vec![("sigmas".to_string(), join_f64(&sigmas))];
            for (token, &sigma) in tokens.iter().zip(&sigmas) {
                let noisy = add_gaussian_noise(&ds, sigma, args.seed)?;
                let report = evaluate_model(&saved, &noisy, args.bins)?;
                let dir = args.out.join(format!("sigma_{token}"));
                let extra = vec![
                    ("perturb".to_string(), "noise".to_string()),
                    ("sigma".to_string(), sigma.to_string()),
                    ("noise_seed".to_string(), args.seed.to_string()),
                ];
                write_eval_bundle(&dir, &report, &extra, &saved, &noisy, args)?;
                entries.push((
                    format!("sigma_{token}_accuracy"),
                    fmt_float(report.accuracy),
                ));
                entries.push((
                    format!("sigma_{token}_mean_uncertainty"),
                    fmt_float(report.mean_uncertainty),
                ));
                print_eval_line(&format!("sigma {token}"), &report);
            }
            fs::create_dir_all(&args.out)?;
            write_keyvalues(args.out.join("noise_response.txt"), &entries)?;
        }
    }
    Ok(())
}

fn print_eval_line(label: &str, report: &MetricsReport) {
    println!(
        "{label}: accuracy {:.4}, prob ece {:.4}, u ece {:.4}, mean uncertainty {:.4}",
        report.accuracy, report.prob_ece, report.u_ece, report.mean_uncertainty
    );
}

fn write_eval_bundle(
    dir: &Path,
    report: &MetricsReport,
    extra: &[(String, String)],
    saved: &SavedModel,
    ds: &MultiViewDataset,
    args: &EvalArgs,
) -> Result<()> {
    fs::create_dir_all(dir)?;
    write_metrics_bundle(dir, report, extra)?;
    if args.per_view {
        write_per_view_tables(dir, saved, ds, args.bins)?;
    }
    Ok(())
}

/// One reliability table per expert (the private view experts, then the
/// collaborative one), from that expert's own evidence head.
fn write_per_view_tables(
    dir: &Path,
    saved: &SavedModel,
    ds: &MultiViewDataset,
    bins: usize,
) -> Result<()> {
    let model = TmurModel::attach(saved.config.clone(), &saved.params)?;
    let scaled = saved.scaler.apply(ds)?;
    let num_experts = saved.config.num_experts();
    let num_views = saved.config.num_views;

    let mut sets = Vec::with_capacity(num_experts);
    for _ in 0..num_experts {
        sets.push(PredictionSet::new(ds.num_classes)?);
    }

    const CHUNK: usize = 512;
    let n = scaled.num_samples();
    let mut start = 0;
    while start < n {
        let end = (start + CHUNK).min(n);
        let idx: Vec<usize> = (start..end).collect();
        let part = scaled.subset(&idx)?;
        let mut tape = Tape::new();
        let out = model.forward(&mut tape, &saved.params, &part.views)?;
        for (i, &node) in out.expert_evidence.iter().enumerate() {
            let batch = predictions_from_evidence(tape.value(node));
            for r in 0..batch.labels.len() {
                let mut confidence = 0.0f64;
                for c in 0..ds.num_classes {
                    confidence = confidence.max(batch.probabilities.get(r, c));
                }
                sets[i].push(PredictionRecord {
                    predicted: batch.labels[r],
                    actual: part.labels[r],
                    confidence,
                    uncertainty: batch.uncertainty[r],
                })?;
            }
        }
        start = end;
    }

    let mut entries = Vec::new();
    for (i, set) in sets.iter().enumerate() {
        let report = metrics::evaluate(set, bins)?;
        let role = if i < num_views {
            format!("view {}", ds.view_names[i])
        } else {
            "collaborative".to_string()
        };
        write_reliability_csv(
            dir.join(format!("expert{i}_reliability_confidence.csv")),
            &report.reliability_confidence,
        )?;
        write_reliability_csv(
            dir.join(format!("expert{i}_reliability_uncertainty.csv")),
            &report.reliability_uncertainty,
        )?;
        entries.push((format!("expert{i}_role"), role));
        entries.push((format!("expert{i}_accuracy"), fmt_float(report.accuracy)));
        entries.push((
            format!("expert{i}_mean_uncertainty"),
            fmt_float(report.mean_uncertainty),
        ));
    }
    write_keyvalues(dir.join("per_view.txt"), &entries)
}

// ------------------------------------------------------------------- ablate

struct Variant {
    name: &'static str,
    beta: f64,
    gamma: f64,
    router: RouterInput,
}

fn cmd_ablate(args: &AblateArgs) -> Result<()> {
    let ds = load_manifest(&args.manifest)?;
    let seeds = resolve_seeds(args.seed, args.seeds.as_deref(), &PROTOCOL_SEEDS)?;

    let full = Variant {
        name: "full",
        beta: args.beta,
        gamma: args.gamma,
        router: RouterInput::AttentionContext,
    };
    let no_balance = Variant {
        name: "no_balance",
        beta: 0.0,
        ..full_like(&full)
    };
    let no_diversity = Variant {
        name: "no_diversity",
        gamma: 0.0,
        ..full_like(&full)
    };
    let no_attention = Variant {
        name: "no_attention",
        router: RouterInput::RawConcat,
        ..full_like(&full)
    };
    let variants: Vec<Variant> = match args.which {
        AblationChoice::Bal => vec![full, no_balance],
        AblationChoice::Div => vec![full, no_diversity],
        AblationChoice::Attention => vec![full, no_attention],
        AblationChoice::All => vec![full, no_balance, no_diversity, no_attention],
    };

    fs::create_dir_all(&args.out)?;
    let mut table = String::from(
        "variant,seeds,accuracy_mean,accuracy_std,mean_uncertainty_mean,mean_uncertainty_std\n",
    );
    let mut runs = String::from("variant,seed,test_accuracy,mean_uncertainty\n");
    for v in &variants {
        let mut accs = Vec::new();
        let mut uncs = Vec::new();
        for &seed in &seeds {
            let outcome = train_once(&ds, &args.hyper, v.beta, v.gamma, v.router, seed)?;
            let m = &outcome.report.metrics;
            let _ = writeln!(
                runs,
                "{},{seed},{},{}",
                v.name,
                fmt_float(m.accuracy),
                fmt_float(m.mean_uncertainty)
            );
            accs.push(m.accuracy);
            uncs.push(m.mean_uncertainty);
        }
        let (am, asd) = mean_std(&accs);
        let (um, usd) = mean_std(&uncs);
        let _ = writeln!(
            table,
            "{},{},{},{},{},{}",
            v.name,
            seeds.len(),
            fmt_float(am),
            fmt_float(asd),
            fmt_float(um),
            fmt_float(usd)
        );
        println!(
            "{:<13} accuracy {:.4} \u{b1} {:.4} over {} seed(s)",
            v.name,
            am,
            asd,
            seeds.len()
        );
    }
    fs::write(args.out.join("ablation.csv"), table)?;
    fs::write(args.out.join("ablation_runs.csv"), runs)?;
    Ok(())
}

fn full_like(v: &Variant) -> Variant {
    Variant {
        name: v.name,
        beta: v.beta,
        gamma: v.gamma,
        router: v.router,
    }
}

// -------------------------------------------------------------------- sweep

fn cmd_sweep(args: &SweepArgs) -> Result<()> {
    let ds = load_manifest(&args.manifest)?;
    let betas = parse_f64_list(&args.beta, "beta")?;
    let gammas = parse_f64_list(&args.gamma, "gamma")?;

    let mut accuracy = vec![vec![0.0f64; gammas.len()]; betas.len()];
    let mut csv = String::from("beta,gamma,test_accuracy\n");
    for (i, &beta) in betas.iter().enumerate() {
        for (j, &gamma) in gammas.iter().enumerate() {
            let outcome = train_once(
                &ds,
                &args.hyper,
                beta,
                gamma,
                RouterInput::AttentionContext,
                args.seed,
            )?;
            let acc = outcome.report.final_test_accuracy;
            accuracy[i][j] = acc;
            let _ = writeln!(csv, "{beta},{gamma},{}", fmt_float(acc));
            println!("beta {beta} gamma {gamma}: test accuracy {acc:.4}");
        }
    }

    // Largest accuracy jump between grid-adjacent cells; a coarse sensitivity
    // statistic for the swept weights.
    let mut max_delta = 0.0f64;
    for i in 0..betas.len() {
        for j in 0..gammas.len() {
            if i + 1 < betas.len() {
                max_delta = max_delta.max((accuracy[i][j] - accuracy[i + 1][j]).abs());
            }
            if j + 1 < gammas.len() {
                max_delta = max_delta.max((accuracy[i][j] - accuracy[i][j + 1]).abs());
            }
        }
    }

    fs::create_dir_all(&args.out)?;
    fs::write(args.out.join("sweep.csv"), csv)?;
    write_keyvalues(
        args.out.join("sweep.txt"),
        &[
            ("cells".to_string(), (betas.len() * gammas.len()).to_string()),
            ("beta_grid".to_string(), join_f64(&betas)),
            ("gamma_grid".to_string(), join_f64(&gammas)),
            ("seed".to_string(), args.seed.to_string()),
            ("max_neighbor_delta".to_string(), fmt_float(max_delta)),
        ],
    )?;
    println!(
        "{} cells, max neighbor delta {:.4}",
        betas.len() * gammas.len(),
        max_delta
    );
    Ok(())
}

// ------------------------------------------------------------------- theory

fn cmd_theory(args: &TheoryArgs) -> Result<()> {
    match args.check {
        TheoryCheck::ScaleBias => theory_scale_bias(args),
        TheoryCheck::RoutingGap => theory_routing_gap(args),
        TheoryCheck::GapDemo => theory_gap_demo(args),
    }
}

fn theory_scale_bias(args: &TheoryArgs) -> Result<()> {
    let grid = log_grid(1e-2, 1e2, 200);
    let patterns: [(&str, Vec<f64>); 2] = [
        ("skewed", vec![3.0, 1.0, 0.5, 0.25]),
        ("uniform", vec![1.0, 1.0, 1.0, 1.0]),
    ];
    let mut entries = Vec::new();
    for (name, pattern) in patterns {
        let family = ScaleFamily::new(pattern)?;
        let report = check_scale_bias(&family, &grid)?;
        println!(
            "scale-bias check ({name}): PASS \u{2014} du/dt rel err {:.2e}, dp/dt rel err {:.2e}, direction dev {:.2e}",
            report.max_u_derivative_rel_err,
            report.max_p_derivative_rel_err,
            report.max_direction_deviation
        );
        entries.push((
            format!("{name}_u_derivative_rel_err"),
            fmt_float(report.max_u_derivative_rel_err),
        ));
        entries.push((
            format!("{name}_p_derivative_rel_err"),
            fmt_float(report.max_p_derivative_rel_err),
        ));
        entries.push((
            format!("{name}_direction_deviation"),
            fmt_float(report.max_direction_deviation),
        ));
    }
    if let Some(out) = &args.out {
        fs::create_dir_all(out)?;
        write_keyvalues(out.join("scale_bias.txt"), &entries)?;
    }
    Ok(())
}

fn theory_routing_gap(args: &TheoryArgs) -> Result<()> {
    let xor = RoutingGapInstance::xor();
    let report = check_routing_gap(&xor)?;
    println!(
        "routing-gap check (parity): PASS \u{2014} best-local risk {:.6}, lower bound {:.6}, grid risk {:.6}",
        report.best_local_risk, report.lower_bound, report.grid_risk
    );
    let informed = check_routing_gap(&xor.with_full_information())?;
    println!(
        "routing-gap check (full information): PASS \u{2014} best-local risk {:.6}, lower bound {:.6}",
        informed.best_local_risk, informed.lower_bound
    );
    if let Some(out) = &args.out {
        fs::create_dir_all(out)?;
        write_keyvalues(
            out.join("routing_gap.txt"),
            &[
                ("parity_best_local_risk".to_string(), fmt_float(report.best_local_risk)),
                ("parity_lower_bound".to_string(), fmt_float(report.lower_bound)),
                ("parity_grid_risk".to_string(), fmt_float(report.grid_risk)),
                (
                    "informed_best_local_risk".to_string(),
                    fmt_float(informed.best_local_risk),
                ),
                ("informed_lower_bound".to_string(), fmt_float(informed.lower_bound)),
            ],
        )?;
    }
    Ok(())
}

fn demo_rows(label: &str, report: &GapDemoReport) -> String {
    let mut csv = String::from("seed,full_accuracy,restricted_accuracy,margin\n");
    for run in &report.runs {
        println!(
            "  seed {:>5}: full {:.4}, restricted {:.4}, margin {:+.4}",
            run.seed,
            run.full_accuracy,
            run.restricted_accuracy,
            run.margin()
        );
        let _ = writeln!(
            csv,
            "{},{},{},{}",
            run.seed,
            fmt_float(run.full_accuracy),
            fmt_float(run.restricted_accuracy),
            fmt_float(run.margin())
        );
    }
    println!(
        "  {label}: mean margin {:+.4}, min margin {:+.4}",
        report.mean_margin, report.min_margin
    );
    csv
}

fn theory_gap_demo(args: &TheoryArgs) -> Result<()> {
    let seeds = resolve_seeds(None, args.seeds.as_deref(), &PROTOCOL_SEEDS)?;
    let model = xor_demo_model_config();
    let train = xor_demo_train_config(0);

    println!("learning demo, sample-dependent reliability:");
    let gap = routing_gap_learning_demo(&xor_demo_spec(), &model, &train, &seeds)?;
    let gap_csv = demo_rows("sample-dependent", &gap);

    println!("learning demo, static control:");
    let control = routing_gap_learning_demo(&static_demo_spec(), &model, &train, &seeds)?;
    let control_csv = demo_rows("static control", &control);

    if let Some(out) = &args.out {
        fs::create_dir_all(out)?;
        fs::write(out.join("gap_demo.csv"), gap_csv)?;
        fs::write(out.join("static_control.csv"), control_csv)?;
    }

    if gap.min_margin < 0.05 {
        return Err(TmurError::check(format!(
            "full router should beat the restricted one by at least 5 points on every seed; worst margin {:.2} points",
            gap.min_margin * 100.0
        )));
    }
    if control.mean_margin.abs() > 0.01 {
        return Err(TmurError::check(format!(
            "static control should tie within 1 point; mean margin {:.2} points",
            control.mean_margin * 100.0
        )));
    }
    println!(
        "gap demo: PASS \u{2014} min margin {:.1} points, static control mean {:.2} points",
        gap.min_margin * 100.0,
        control.mean_margin * 100.0
    );
    Ok(())
}
