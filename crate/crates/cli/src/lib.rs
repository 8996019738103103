//! Command-line front end: argument parsing, config files and dispatch.

mod config;

use std::ffi::OsString;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, CommandFactory, Parser, Subcommand, ValueEnum};
use vbsa::adaptive::AdaptiveOptions;
use vbsa::bench::{self, AdaptiveConfig, CellError, Experiment, ExperimentConfig, PlotSeries};
use vbsa::designs::{self, ReferenceDesign};
use vbsa::estimators::{EstimatorRegistry, EvaluationSet};
use vbsa::qmc::{self, ColumnPermutation};
use vbsa::testfns::{Family, FunctionSpec};
use vbsa::{MatrixRole, SampleMatrix};

/// Exit status when a sweep finished but some cells failed.
const EXIT_CELL_ERRORS: u8 = 3;

#[derive(Parser)]
#[command(name = "vbsa", version, about = "Variance-based total-effect sensitivity experiments")]
#[command(args_override_self = true)]
struct Cli {
    /// Flat `key = value` file with defaults for the subcommand's flags;
    /// flags given on the command line win.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Convergence of estimators at matched cost over scrambled repetitions
    Bench(BenchArgs),
    /// Total-effect indices from one design, for a test function or a file of outputs
    Estimate(EstimateArgs),
    /// Cost, economy, explorativity and discrepancy of designs fitting a budget
    Metrics(MetricsArgs),
    /// L2-star discrepancy of a Sobol' block or a point file
    Discrepancy(DiscrepancyArgs),
    /// Exact first-order and total indices of a test function as CSV
    Analytic(AnalyticArgs),
    /// Adaptive allocation against the plain asymmetric estimator
    Adaptive(AdaptiveArgs),
}

#[derive(Args, Clone)]
struct FunctionArgs {
    /// Test function: A1, A2, A3, B1, B2, B3, C1, C2 or G
    #[arg(long, short = 'f')]
    function: Family,
    /// Number of input factors
    #[arg(long, short = 'k', default_value_t = 6)]
    k: usize,
    /// Comma-separated a_j for G-type functions; sets k
    #[arg(long, value_delimiter = ',', action = clap::ArgAction::Set)]
    coefficients: Option<Vec<f64>>,
}

impl FunctionArgs {
    fn spec(&self) -> Result<FunctionSpec> {
        function_spec(self.function, self.k, self.coefficients.clone())
    }
}

fn function_spec(family: Family, k: usize, coefficients: Option<Vec<f64>>) -> Result<FunctionSpec> {
    match coefficients {
        Some(a) => Ok(FunctionSpec::with_coefficients(family, a)?),
        None if family == Family::G => {
            bail!("function G needs its coefficients, e.g. --coefficients 0,1,4.5,9")
        }
        None => Ok(FunctionSpec::new(family, k)?),
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Svg,
    Both,
}

impl Format {
    fn csv(self) -> bool {
        self != Format::Svg
    }
    fn svg(self) -> bool {
        self != Format::Csv
    }
}

#[derive(Args)]
struct OutArgs {
    /// Directory for written files
    #[arg(long, env = "VBSA_OUT_DIR", default_value = "vbsa-out")]
    out_dir: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Both)]
    format: Format,
}

#[derive(Args)]
struct BenchArgs {
    #[command(flatten)]
    function: FunctionArgs,
    /// Comma-separated estimators, optionally with a matrix count (lamboni:4)
    #[arg(long, short = 'e', value_delimiter = ',', action = clap::ArgAction::Set, default_value = "saltenis")]
    estimators: Vec<String>,
    /// Matrix counts applied to multimatrix and lamboni entries given without one
    #[arg(long, value_delimiter = ',', action = clap::ArgAction::Set)]
    n: Vec<usize>,
    #[arg(long, default_value_t = 2)]
    p_min: u32,
    #[arg(long, default_value_t = 14)]
    p_max: u32,
    /// Scrambled repetitions per cell
    #[arg(long, default_value_t = 50)]
    reps: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args)]
struct EstimateArgs {
    /// Estimator name, optionally with a matrix count (lamboni:4)
    #[arg(long, short = 'e', default_value = "saltenis")]
    estimator: String,
    /// Wide CSV of model outputs: one column per block label (A, B, A_B(1), ...)
    #[arg(long, value_name = "FILE", conflicts_with = "function")]
    input: Option<PathBuf>,
    /// Test function to evaluate over the design instead of reading outputs
    #[arg(long, short = 'f')]
    function: Option<Family>,
    #[arg(long, short = 'k', default_value_t = 6)]
    k: usize,
    #[arg(long, value_delimiter = ',', action = clap::ArgAction::Set)]
    coefficients: Option<Vec<f64>>,
    /// Rows per base matrix are 2^p
    #[arg(long, short = 'p', default_value_t = 10)]
    p: u32,
    /// Permute the Sobol' columns with this seed
    #[arg(long)]
    seed: Option<u64>,
    /// Write the design's input points (block,row,x1..xk) here and stop
    #[arg(long, value_name = "FILE")]
    plan_out: Option<PathBuf>,
}

#[derive(Args)]
struct MetricsArgs {
    #[arg(long, short = 'k', default_value_t = 6)]
    k: usize,
    /// Target number of model runs
    #[arg(long, default_value_t = 500)]
    budget: usize,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args)]
struct DiscrepancyArgs {
    /// Columns of the Sobol' block
    #[arg(long, required_unless_present = "input")]
    dims: Option<usize>,
    /// The block has 2^p points
    #[arg(long, short = 'p', required_unless_present = "input")]
    p: Option<u32>,
    /// Headerless CSV of points in the unit cube
    #[arg(long, value_name = "FILE", conflicts_with_all = ["dims", "p"])]
    input: Option<PathBuf>,
}

#[derive(Args)]
struct AnalyticArgs {
    #[command(flatten)]
    function: FunctionArgs,
}

#[derive(Args)]
struct AdaptiveArgs {
    #[command(flatten)]
    function: FunctionArgs,
    #[arg(long, default_value_t = 5)]
    p_min: u32,
    #[arg(long, default_value_t = 11)]
    p_max: u32,
    #[arg(long, default_value_t = 50)]
    reps: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Keep every factor active (plain asymmetric estimator on the same rows)
    #[arg(long)]
    no_drop: bool,
    #[command(flatten)]
    out: OutArgs,
}

/// Pull `--config FILE` out of `argv` and splice the file's entries in
/// right after the subcommand, so explicit flags come later and win.
fn expand_config(argv: Vec<OsString>) -> Result<Vec<OsString>> {
    let mut rest = Vec::with_capacity(argv.len());
    let mut path = None;
    let mut it = argv.into_iter();
    while let Some(a) = it.next() {
        let s = a.to_string_lossy();
        if s == "--config" {
            path = Some(PathBuf::from(it.next().context("--config needs a file")?));
        } else if let Some(p) = s.strip_prefix("--config=") {
            path = Some(PathBuf::from(p));
        } else {
            rest.push(a);
        }
    }
    let Some(path) = path else {
        return Ok(rest);
    };
    let entries = config::read(&path)?;
    let cmd = Cli::command();
    let Some(pos) = rest
        .iter()
        .skip(1)
        .position(|a| cmd.find_subcommand(a).is_some())
        .map(|i| i + 1)
    else {
        // let clap report the missing subcommand
        return Ok(rest);
    };
    let sub = cmd.find_subcommand(&rest[pos]).expect("found above");
    let extra = config::to_args(sub, &entries)?;
    rest.splice(pos + 1..pos + 1, extra);
    Ok(rest)
}

/// Parse `argv` (program name first), run the subcommand and return the
/// process exit status: 0 on success, 2 for usage errors, 3 when a sweep
/// finished with failed cells and 1 for any other failure.
pub fn run<I, T>(argv: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString>,
{
    let argv = match expand_config(argv.into_iter().map(Into::into).collect()) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e:#}");
            return 2;
        }
    };
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code() as u8;
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            1
        }
    }
}

fn dispatch(cmd: Command) -> Result<u8> {
    match cmd {
        Command::Bench(a) => bench_cmd(a),
        Command::Estimate(a) => estimate_cmd(a).map(|_| 0),
        Command::Metrics(a) => metrics_cmd(a).map(|_| 0),
        Command::Discrepancy(a) => discrepancy_cmd(a).map(|_| 0),
        Command::Analytic(a) => analytic_cmd(a).map(|_| 0),
        Command::Adaptive(a) => adaptive_cmd(a),
    }
}

/// `multimatrix` with `--n 3,4` becomes `multimatrix:3,multimatrix:4`.
fn expand_estimators(names: &[String], n: &[usize]) -> Vec<String> {
    let mut out = Vec::new();
    for name in names {
        let name = name.trim();
        if !n.is_empty() && !name.contains(':') && matches!(name, "multimatrix" | "lamboni") {
            out.extend(n.iter().map(|n| format!("{name}:{n}")));
        } else {
            out.push(name.to_string());
        }
    }
    out
}

fn print_aggregates(exp: &Experiment) {
    println!("{:<16} {:>3} {:>7} {:>8} {:>12}", "estimator", "p", "N", "N_T", "MAE");
    for r in exp.aggregates() {
        println!(
            "{:<16} {:>3} {:>7} {:>8} {:>12.6}",
            r.estimator, r.p, r.rows, r.total_points, r.mae
        );
    }
}

fn report_errors(dir: &Path, stem: &str, errors: &[CellError]) -> Result<()> {
    if errors.is_empty() {
        return Ok(());
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["estimator", "p", "rep", "error"])?;
    for e in errors {
        w.write_record([e.estimator.clone(), e.p.to_string(), e.rep.to_string(), e.error.to_string()])?;
    }
    let text = String::from_utf8(w.into_inner()?)?;
    let path = bench::write_file(dir, &format!("{stem}_errors.csv"), &text)?;
    eprintln!("{} cells failed; see {}", errors.len(), path.display());
    Ok(())
}

fn write_outputs(out: &OutArgs, stem: &str, title: &str, exp: &Experiment) -> Result<()> {
    if out.format.csv() {
        let path = bench::write_file(&out.out_dir, &format!("{stem}.csv"), &bench::records_csv(&exp.records)?)?;
        println!("wrote {}", path.display());
    }
    if out.format.svg() {
        let series = PlotSeries::from_records(&exp.records);
        let svg = bench::plot_svg(&series, title, "total cost N_T", "MAE")?;
        let path = bench::write_file(&out.out_dir, &format!("{stem}.svg"), &svg)?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn bench_cmd(a: BenchArgs) -> Result<u8> {
    let f = a.function.spec()?;
    let mut cfg = ExperimentConfig::new(f.clone(), expand_estimators(&a.estimators, &a.n));
    cfg.p_min = a.p_min;
    cfg.p_max = a.p_max;
    cfg.repetitions = a.reps;
    cfg.seed = a.seed;
    let exp = bench::convergence_experiment(&cfg)?;
    println!("{} k={} repetitions={} seed={}", f.label(), f.k(), a.reps, a.seed);
    print_aggregates(&exp);
    let stem = format!("{}_convergence", f.family());
    if exp.records.is_empty() {
        report_errors(&a.out.out_dir, &stem, &exp.errors)?;
        bail!("every cell failed");
    }
    write_outputs(&a.out, &stem, &f.label(), &exp)?;
    report_errors(&a.out.out_dir, &stem, &exp.errors)?;
    Ok(if exp.is_complete() {
        0
    } else {
        EXIT_CELL_ERRORS
    })
}

fn adaptive_cmd(a: AdaptiveArgs) -> Result<u8> {
    let f = a.function.spec()?;
    let cfg = AdaptiveConfig {
        function: f.clone(),
        p_min: a.p_min,
        p_max: a.p_max,
        repetitions: a.reps,
        seed: a.seed,
        options: AdaptiveOptions {
            drop_rule: !a.no_drop,
        },
    };
    let out = bench::adaptive_experiment(&cfg)?;
    println!("{} k={} repetitions={} seed={}", f.label(), f.k(), a.reps, a.seed);
    print_aggregates(&out.experiment);
    let stem = format!("{}_adaptive", f.family());
    if out.experiment.records.is_empty() {
        report_errors(&a.out.out_dir, &stem, &out.experiment.errors)?;
        bail!("every run failed");
    }
    write_outputs(&a.out, &stem, &format!("{} adaptive", f.label()), &out.experiment)?;
    if a.out.format.csv() {
        let csv = bench::ledger_csv(&f.label(), &out.ledger)?;
        let path = bench::write_file(&a.out.out_dir, &format!("{stem}_ledger.csv"), &csv)?;
        println!("wrote {}", path.display());
    }
    report_errors(&a.out.out_dir, &stem, &out.experiment.errors)?;
    Ok(if out.experiment.is_complete() {
        0
    } else {
        EXIT_CELL_ERRORS
    })
}

fn read_outputs(path: &Path) -> Result<(Vec<MatrixRole>, Vec<Vec<f64>>)> {
    let mut reader = csv::Reader::from_path(path)
        .with_context(|| format!("cannot read {}", path.display()))?;
    let labels = reader
        .headers()?
        .iter()
        .map(|h| h.parse::<MatrixRole>())
        .collect::<vbsa::Result<Vec<_>>>()?;
    let mut columns = vec![Vec::new(); labels.len()];
    for (i, rec) in reader.records().enumerate() {
        let rec = rec?;
        for (c, field) in rec.iter().enumerate() {
            let v: f64 = field
                .trim()
                .parse()
                .with_context(|| format!("row {}, column {}: `{field}` is not a number", i + 1, labels[c]))?;
            columns[c].push(v);
        }
    }
    Ok((labels, columns))
}

fn estimate_cmd(a: EstimateArgs) -> Result<()> {
    let est = EstimatorRegistry::builtin().create(&a.estimator)?;
    let evals = if let Some(path) = &a.input {
        let (labels, columns) = read_outputs(path)?;
        let k = labels
            .iter()
            .filter_map(|l| match l {
                MatrixRole::Hybrid { factor, .. } | MatrixRole::Cyclic { factor } => Some(factor + 1),
                _ => None,
            })
            .max()
            .context("the file has no hybrid columns, so the factor count is unknown")?;
        let rows = columns.first().map_or(0, Vec::len);
        let mut evals = EvaluationSet::new(rows, k);
        for (l, c) in labels.into_iter().zip(columns) {
            evals.insert(l, c)?;
        }
        evals
    } else {
        let k = a.coefficients.as_ref().map_or(a.k, Vec::len);
        let spec = est.design(1 << a.p, k)?;
        let mut pool = qmc::sobol_block(spec.n * k, a.p)?;
        if let Some(seed) = a.seed {
            pool = qmc::permute_columns(&pool, &ColumnPermutation::from_seed(spec.n * k, seed))?;
        }
        let plan = designs::assemble_plan(&spec, &designs::split_base_matrices(&pool, spec.n, k)?)?;
        if let Some(path) = &a.plan_out {
            write_plan(path, &plan)?;
            println!("wrote {} points to {}", plan.len(), path.display());
            return Ok(());
        }
        let Some(family) = a.function else {
            bail!("give --function to evaluate a test function, --input for a file of outputs, or --plan-out");
        };
        let f = function_spec(family, k, a.coefficients.clone())?;
        EvaluationSet::from_plan(&plan, |x| f.value(x))
    };
    let t = est.estimate(&evals)?;
    let mut w = csv::Writer::from_writer(io::stdout().lock());
    w.write_record(["factor", "T_hat", "numerator", "effects_used"])?;
    for j in 0..t.k() {
        w.write_record([
            (j + 1).to_string(),
            format!("{:?}", t.t_hat[j]),
            format!("{:?}", t.numerator[j]),
            t.effects_used[j].to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn write_plan(path: &Path, plan: &designs::EvaluationPlan) -> Result<()> {
    let k = plan.spec().k;
    let mut w = csv::Writer::from_path(path).with_context(|| format!("cannot write {}", path.display()))?;
    let mut header = vec!["block".to_string(), "row".to_string()];
    header.extend((1..=k).map(|j| format!("x{j}")));
    w.write_record(&header)?;
    for (x, role, i) in plan.points() {
        let mut rec = vec![role.to_string(), (i + 1).to_string()];
        rec.extend(x.iter().map(|v| format!("{v:?}")));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

fn metrics_cmd(a: MetricsArgs) -> Result<()> {
    let rows = designs::budget_table(a.k, a.budget)?;
    println!(
        "{:<12} {:>5} {:>3} {:>6} {:>6} {:>5} {:>9} {:>6}",
        "design", "N", "n", "N_T", "E_T", "nN", "D", "chi"
    );
    for m in &rows {
        println!(
            "{:<12} {:>5} {:>3} {:>6} {:>6} {:>5} {:>9.5} {:>6.3}",
            m.spec.kind.to_string(),
            m.spec.rows,
            m.spec.n,
            m.total_points,
            m.total_effects,
            m.spec.n * m.spec.rows,
            m.discrepancy.unwrap_or(f64::NAN),
            m.explorativity
        );
    }
    if a.out.format.csv() {
        let path = bench::write_file(&a.out.out_dir, "table3.csv", &bench::table3_csv(&rows)?)?;
        println!("wrote {}", path.display());
    }
    if a.out.format.svg() {
        let mut points: Vec<(String, f64, f64)> = rows
            .iter()
            .map(|m| {
                let label = match m.spec.kind {
                    designs::DesignKind::Multimatrix => format!("n={}", m.spec.n),
                    kind => kind.to_string(),
                };
                (label, m.economy, m.explorativity)
            })
            .collect();
        for r in [ReferenceDesign::Couples, ReferenceDesign::Stars, ReferenceDesign::WindingStairs] {
            let (e, chi) = r.metrics(a.k, a.budget);
            points.push((r.name().to_string(), e, chi));
        }
        let path = bench::write_file(&a.out.out_dir, "figure2.svg", &bench::figure2_svg(&points)?)?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn discrepancy_cmd(a: DiscrepancyArgs) -> Result<()> {
    let points = match (&a.input, a.dims, a.p) {
        (Some(path), _, _) => {
            let text = fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
            let mut rows = Vec::new();
            let mut reader = csv::ReaderBuilder::new()
                .has_headers(false)
                .from_reader(text.as_bytes());
            for rec in reader.records() {
                let rec = rec?;
                rows.push(
                    rec.iter()
                        .map(|s| s.trim().parse::<f64>())
                        .collect::<std::result::Result<Vec<_>, _>>()
                        .context("point files hold numbers only")?,
                );
            }
            SampleMatrix::from_rows(&rows, MatrixRole::Pool)?
        }
        (None, Some(d), Some(p)) => qmc::sobol_block(d, p)?,
        _ => bail!("give --dims and --p, or --input"),
    };
    let d = qmc::l2_star_discrepancy(&points)?;
    let mut out = io::stdout().lock();
    writeln!(out, "points,dims,D")?;
    writeln!(out, "{},{},{d:?}", points.rows(), points.cols())?;
    Ok(())
}

fn analytic_cmd(a: AnalyticArgs) -> Result<()> {
    let f = a.function.spec()?;
    let ix = f.analytic_indices();
    let mut w = csv::Writer::from_writer(io::stdout().lock());
    w.write_record(["factor", "S", "T", "V"])?;
    for j in 0..f.k() {
        w.write_record([
            (j + 1).to_string(),
            format!("{:?}", ix.first_order[j]),
            format!("{:?}", ix.total[j]),
            format!("{:?}", ix.variance),
        ])?;
    }
    w.flush()?;
    Ok(())
}
