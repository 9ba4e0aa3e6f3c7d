use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use biasaudit_core::latent::{cross_validated_auc, CodeSet, FeatureMode, FoldSpec, Gamma};
use biasaudit_core::report::{render_json, render_plots, run_audit, AuditConfig};
use biasaudit_core::stats::{
    chi_squared_one_sided, dip_test, mann_whitney_u, shapiro_wilk, ContingencyTable2x2, MwuMode,
};
use biasaudit_core::synthetic::{four_group_dataset, gen_code_vectors_for};
use biasaudit_core::threshold::{
    bias_sweep, eer_operating_point, hter_at, roc_curve, significant_regions, table_at, Grid,
};
use biasaudit_core::{Dataset, GroupPair, SampleClass};

#[derive(Parser)]
#[command(name = "biasaudit", version, about = "Group-bias audit for threshold-based classifiers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every analysis and write report.json plus plots
    Audit(AuditArgs),
    /// Chi-squared p-value as a function of the threshold
    Sweep(SweepArgs),
    /// One-sided chi-squared test at a single threshold, or on a given table
    Chi2(Chi2Args),
    /// Mann–Whitney U test of bona fide responses
    Mwu(MwuArgs),
    /// Hartigan's dip test per group
    Dip(DipArgs),
    /// Shapiro–Wilk normality test per group
    Sw(GroupArgs),
    /// Equal error rate threshold and per-group HTER
    Eer(DataArg),
    /// Cross-validated SVM AUC between groups of code vectors
    SvmSep(SvmArgs),
    /// Write a synthetic four-group dataset and matching code vectors
    Synth(SynthArgs),
}

#[derive(Args)]
struct DataArg {
    /// response CSV with columns sample_id,group,class,response
    #[arg(long)]
    data: PathBuf,
}

#[derive(Args)]
struct AuditArgs {
    #[command(flatten)]
    data: DataArg,
    /// TOML file with AuditConfig fields; flags override it
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    alpha: Option<f64>,
    /// comma-separated bona fide error fractions
    #[arg(long, value_delimiter = ',')]
    quantiles: Option<Vec<f64>>,
    #[arg(long)]
    dip_bins: Option<usize>,
    #[arg(long)]
    dip_replicas: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// code-vector CSV; enables the SVM section
    #[arg(long)]
    codes: Option<PathBuf>,
    /// codebook size when the code CSV lacks a `#K=` line
    #[arg(long)]
    k: Option<u32>,
    /// output directory; without it the report goes to stdout
    #[arg(long)]
    out: Option<PathBuf>,
    /// skip SVG/CSV plot output
    #[arg(long)]
    no_plots: bool,
}

#[derive(Args)]
struct PairArg {
    /// two group labels, comma-separated; default is every pair
    #[arg(long, value_delimiter = ',')]
    pair: Option<Vec<String>>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    data: DataArg,
    #[command(flatten)]
    pair: PairArg,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
}

#[derive(Args)]
struct Chi2Args {
    #[arg(long, required_unless_present = "table")]
    data: Option<PathBuf>,
    #[arg(long, requires = "data")]
    threshold: Option<f64>,
    #[command(flatten)]
    pair: PairArg,
    /// accepted_a,rejected_a,accepted_b,rejected_b
    #[arg(long, value_delimiter = ',', conflicts_with = "data")]
    table: Option<Vec<u64>>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Auto,
    Exact,
    Approx,
}

#[derive(Args)]
struct MwuArgs {
    #[command(flatten)]
    data: DataArg,
    #[command(flatten)]
    pair: PairArg,
    #[arg(long, value_enum, default_value = "auto")]
    mode: ModeArg,
}

#[derive(Args)]
struct GroupArgs {
    #[command(flatten)]
    data: DataArg,
    /// restrict to one group
    #[arg(long)]
    group: Option<String>,
}

#[derive(Args)]
struct DipArgs {
    #[command(flatten)]
    groups: GroupArgs,
    /// bin count; 0 uses the raw values
    #[arg(long, default_value_t = 50)]
    bins: usize,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    #[arg(long, default_value_t = 10_000)]
    replicas: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct SvmArgs {
    #[arg(long)]
    codes: PathBuf,
    #[arg(long)]
    k: Option<u32>,
    #[command(flatten)]
    pair: PairArg,
    #[arg(long, default_value_t = 1.0)]
    c: f64,
    /// `auto` or a positive number
    #[arg(long, default_value = "auto")]
    gamma: String,
    #[arg(long, default_value_t = 5)]
    folds: usize,
    /// scaled-indices or code-histogram
    #[arg(long, default_value = "scaled-indices")]
    feature_mode: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long)]
    out: PathBuf,
    /// bona fide samples per group
    #[arg(long, default_value_t = 200)]
    n: usize,
    /// attack samples per group; 0 leaves attacks out
    #[arg(long, default_value_t = 200)]
    attack: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// code vectors per group; 0 skips codes.csv
    #[arg(long, default_value_t = 100)]
    code_n: usize,
    #[arg(long, default_value_t = 64)]
    code_len: usize,
    #[arg(long, default_value_t = 16)]
    k: u32,
    #[arg(long, default_value_t = 0.0)]
    separability: f64,
}

fn print_json(v: &Value) -> anyhow::Result<()> {
    println!("{}", serde_json::to_string_pretty(v)?);
    Ok(())
}

fn load(path: &Path) -> anyhow::Result<Dataset> {
    Dataset::load_csv(path).with_context(|| format!("reading {}", path.display()))
}

fn load_codes(path: &Path, k: Option<u32>) -> anyhow::Result<CodeSet> {
    CodeSet::load_csv(path, k).with_context(|| format!("reading {}", path.display()))
}

fn pairs_of(labels: Vec<String>, arg: &PairArg) -> anyhow::Result<Vec<GroupPair>> {
    if let Some(p) = &arg.pair {
        if p.len() != 2 {
            bail!(biasaudit_core::Error::Parameter(format!(
                "--pair takes two labels, got {}",
                p.len()
            )));
        }
        for g in p {
            if !labels.contains(g) {
                return Err(biasaudit_core::Error::UnknownGroup(g.clone()).into());
            }
        }
        return Ok(vec![GroupPair::new(p[0].clone(), p[1].clone())?]);
    }
    if labels.len() < 2 {
        return Err(biasaudit_core::Error::InsufficientGroups { found: labels.len() }.into());
    }
    let mut out = Vec::new();
    for i in 0..labels.len() {
        for j in i + 1..labels.len() {
            out.push(GroupPair::new(labels[i].clone(), labels[j].clone())?);
        }
    }
    Ok(out)
}

fn dataset_pairs(ds: &Dataset, arg: &PairArg) -> anyhow::Result<Vec<GroupPair>> {
    pairs_of(ds.groups().map(str::to_string).collect(), arg)
}

fn audit(args: AuditArgs) -> anyhow::Result<()> {
    let mut cfg = match &args.config {
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            toml::from_str::<AuditConfig>(&text)
                .map_err(|e| biasaudit_core::Error::Validation(format!("config {}: {e}", p.display())))?
        }
        None => AuditConfig::default(),
    };
    if let Some(v) = args.alpha {
        cfg.alpha = v;
    }
    if let Some(v) = args.quantiles {
        cfg.quantiles = v;
    }
    if let Some(v) = args.dip_bins {
        cfg.dip_bins = v;
    }
    if let Some(v) = args.dip_replicas {
        cfg.dip_replicas = v;
    }
    if let Some(v) = args.seed {
        cfg.seed = v;
    }
    if let Some(v) = args.out {
        cfg.out_dir = Some(v);
    }
    cfg.validate()?;

    let ds = load(&args.data.data)?;
    let codes = args.codes.as_deref().map(|p| load_codes(p, args.k)).transpose()?;
    let report = run_audit(&ds, &cfg, codes.as_ref())?;
    let bytes = render_json(&report);
    match &cfg.out_dir {
        Some(dir) => {
            fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
            let path = dir.join("report.json");
            fs::write(&path, &bytes).with_context(|| format!("writing {}", path.display()))?;
            log::info!("wrote {}", path.display());
            if !args.no_plots {
                let files = render_plots(&report, &dir.join("plots"))
                    .with_context(|| format!("writing plots under {}", dir.display()))?;
                log::info!("wrote {} plot files", files.len());
            }
        }
        None => {
            use std::io::Write;
            std::io::stdout().write_all(&bytes)?;
        }
    }
    Ok(())
}

fn sweep(args: SweepArgs) -> anyhow::Result<()> {
    let ds = load(&args.data.data)?;
    let mut out = Vec::new();
    for pair in dataset_pairs(&ds, &args.pair)? {
        let a = ds.bona_fide_responses(&pair.a)?;
        let b = ds.bona_fide_responses(&pair.b)?;
        let curve = bias_sweep(&pair, &a, &b, &Grid::Auto, args.alpha)?;
        let regions = significant_regions(&curve);
        out.push(json!({ "curve": curve, "regions": regions }));
    }
    print_json(&Value::Array(out))
}

fn chi2(args: Chi2Args) -> anyhow::Result<()> {
    if let Some(t) = args.table {
        if t.len() != 4 {
            bail!(biasaudit_core::Error::Parameter(format!(
                "--table takes four counts, got {}",
                t.len()
            )));
        }
        let table = ContingencyTable2x2::new(t[0], t[1], t[2], t[3]);
        let r = chi_squared_one_sided(&table)?;
        return print_json(&json!({ "table": table, "result": r }));
    }
    let Some(threshold) = args.threshold else {
        bail!(biasaudit_core::Error::Parameter("--threshold is required with --data".into()));
    };
    let ds = load(args.data.as_deref().expect("clap enforces --data"))?;
    let mut out = Vec::new();
    for pair in dataset_pairs(&ds, &args.pair)? {
        let a = ds.bona_fide_responses(&pair.a)?;
        let b = ds.bona_fide_responses(&pair.b)?;
        let table = table_at(&a, &b, threshold)?;
        let r = chi_squared_one_sided(&table)?;
        let worse = r.direction.map(|s| pair.label(s).to_string());
        out.push(json!({ "pair": pair, "threshold": threshold, "table": table, "result": r, "worse_group": worse }));
    }
    print_json(&Value::Array(out))
}

fn mwu(args: MwuArgs) -> anyhow::Result<()> {
    let ds = load(&args.data.data)?;
    let mode = match args.mode {
        ModeArg::Auto => MwuMode::Auto,
        ModeArg::Exact => MwuMode::Exact,
        ModeArg::Approx => MwuMode::NormalApprox,
    };
    let mut out = Vec::new();
    for pair in dataset_pairs(&ds, &args.pair)? {
        let a = ds.bona_fide_responses(&pair.a)?;
        let b = ds.bona_fide_responses(&pair.b)?;
        out.push(json!({ "pair": pair, "result": mann_whitney_u(&a, &b, mode)? }));
    }
    print_json(&Value::Array(out))
}

fn selected_groups(ds: &Dataset, group: &Option<String>) -> anyhow::Result<Vec<String>> {
    match group {
        Some(g) if ds.groups().any(|x| x == g) => Ok(vec![g.clone()]),
        Some(g) => Err(biasaudit_core::Error::UnknownGroup(g.clone()).into()),
        None => Ok(ds.groups().map(str::to_string).collect()),
    }
}

fn dip(args: DipArgs) -> anyhow::Result<()> {
    let ds = load(&args.groups.data.data)?;
    let bins = (args.bins > 0).then_some(args.bins);
    let mut out = Vec::new();
    for g in selected_groups(&ds, &args.groups.group)? {
        let v = ds.bona_fide_responses(&g)?;
        let r = dip_test(&v, bins, args.alpha, args.replicas, args.seed)?;
        out.push(json!({ "group": g, "result": r }));
    }
    print_json(&Value::Array(out))
}

fn sw(args: GroupArgs) -> anyhow::Result<()> {
    let ds = load(&args.data.data)?;
    let mut out = Vec::new();
    for g in selected_groups(&ds, &args.group)? {
        let v = ds.bona_fide_responses(&g)?;
        out.push(json!({ "group": g, "result": shapiro_wilk(&v)? }));
    }
    print_json(&Value::Array(out))
}

fn eer(args: DataArg) -> anyhow::Result<()> {
    let ds = load(&args.data)?;
    let bona = ds.pooled_responses(SampleClass::BonaFide);
    let attack = ds.pooled_responses(SampleClass::Attack);
    let op = eer_operating_point(&roc_curve(&bona, &attack)?);
    let mut per_group = Vec::new();
    for g in ds.groups() {
        let gb = ds.bona_fide_responses(g)?;
        let ga = ds.class_responses(g, SampleClass::Attack)?;
        if gb.is_empty() || ga.is_empty() {
            continue;
        }
        per_group.push(json!({ "group": g, "operating_point": hter_at(&gb, &ga, op.threshold)? }));
    }
    print_json(&json!({ "pooled": op, "per_group": per_group }))
}

fn svm_sep(args: SvmArgs) -> anyhow::Result<()> {
    let set = load_codes(&args.codes, args.k)?;
    let mode: FeatureMode = args.feature_mode.parse()?;
    let gamma: Gamma = args.gamma.parse()?;
    let params = biasaudit_core::latent::SmoParams {
        c: args.c,
        gamma,
        ..Default::default()
    };
    let folds = FoldSpec {
        k: args.folds,
        seed: args.seed,
    };
    let mut out = Vec::new();
    for pair in pairs_of(set.groups(), &args.pair)? {
        let vectors: Vec<_> = set
            .vectors
            .iter()
            .filter(|v| v.group == pair.a || v.group == pair.b)
            .cloned()
            .collect();
        let auc = cross_validated_auc(&vectors, mode, &params, &folds)?;
        out.push(json!({ "pair": pair, "auc": auc }));
    }
    print_json(&Value::Array(out))
}

fn synth(args: SynthArgs) -> anyhow::Result<()> {
    fs::create_dir_all(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    let ds = four_group_dataset(args.n, args.attack, args.seed)?;
    let path = args.out.join("responses.csv");
    ds.save_csv(&path).with_context(|| format!("writing {}", path.display()))?;
    log::info!("wrote {}", path.display());
    if args.code_n > 0 {
        let labels: Vec<String> = ds.groups().map(str::to_string).collect();
        let refs: Vec<&str> = labels.iter().map(String::as_str).collect();
        let codes = gen_code_vectors_for(&refs, args.code_n, args.code_len, args.k, args.separability, args.seed)?;
        let path = args.out.join("codes.csv");
        codes.save_csv(&path).with_context(|| format!("writing {}", path.display()))?;
        log::info!("wrote {}", path.display());
    }
    Ok(())
}

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<biasaudit_core::Error>() {
            return if e.is_io() { 2 } else { 1 };
        }
        if cause.is::<std::io::Error>() {
            return 2;
        }
    }
    1
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    // usage errors share exit code 1 with validation errors; 2 is for I/O
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = match cli.command {
        Command::Audit(a) => audit(a),
        Command::Sweep(a) => sweep(a),
        Command::Chi2(a) => chi2(a),
        Command::Mwu(a) => mwu(a),
        Command::Dip(a) => dip(a),
        Command::Sw(a) => sw(a),
        Command::Eer(a) => eer(a),
        Command::SvmSep(a) => svm_sep(a),
        Command::Synth(a) => synth(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
