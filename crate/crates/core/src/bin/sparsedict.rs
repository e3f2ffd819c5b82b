use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use sparsedict::descent::{run_descent, DescentTrace, Encoder, EncoderParams, Resample, SampleSource};
use sparsedict::evaluation::{evaluate, hungarian_match, recovery_success, write_eval_report};
use sparsedict::genmodel::{generate_batch, generate_dictionary, generate_full_samples, read_dataset, write_dataset, PartialSample};
use sparsedict::harness::{run_sweep, write_outputs, ExperimentConfig};
use sparsedict::numerics::{spectral_norm, PowerIteration};
use sparsedict::spectral_init::{run_init, write_report, InitError};
use sparsedict::{par, Matrix};

#[derive(Parser)]
#[command(name = "sparsedict", version, about = "Dictionary learning from incompletely observed samples")]
struct Cli {
    /// Run on a single worker thread.
    #[arg(long, global = true)]
    serial: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw a dictionary, a fully observed hold-out, and a partial pool.
    Generate(RunArgs),
    /// Run the spectral initializer on generated data.
    Init(DataArgs),
    /// Initialize (unless --init is given) and refine by descent.
    Learn(LearnArgs),
    /// Monte Carlo sweep over the configured (p, rho) grid.
    Sweep(RunArgs),
    /// Match an estimate against a reference dictionary.
    Eval(EvalArgs),
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    p: Option<usize>,
    #[arg(long)]
    rho: Option<f64>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long, value_parser = parse_resample)]
    resample: Option<Resample>,
    #[arg(long, value_parser = parse_encoder)]
    encoder: Option<Encoder>,
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

#[derive(Args)]
struct DataArgs {
    #[command(flatten)]
    run: RunArgs,
    /// Directory written by `generate`.
    #[arg(long)]
    data: PathBuf,
    /// Reference dictionary; sets the projection radius and enables tracing.
    #[arg(long)]
    truth: Option<PathBuf>,
}

#[derive(Args)]
struct LearnArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Start descent from this matrix instead of running the initializer.
    #[arg(long)]
    init: Option<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    est: PathBuf,
    #[arg(long)]
    truth: PathBuf,
    #[arg(long)]
    tau: f64,
    /// Also write the per-column matching and an evaluation report here.
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

fn parse_resample(s: &str) -> Result<Resample, String> {
    match s {
        "fresh" => Ok(Resample::Fresh),
        "fixed_pool" => Ok(Resample::FixedPool),
        _ => Err(format!("expected fresh or fixed_pool, got {s}")),
    }
}

fn parse_encoder(s: &str) -> Result<Encoder, String> {
    match s {
        "threshold" => Ok(Encoder::Threshold),
        "topk" | "top_k" => Ok(Encoder::TopK),
        _ => Err(format!("expected threshold or topk, got {s}")),
    }
}

enum Failure {
    Usage(String),
    Runtime(String),
}

impl<E: std::error::Error> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::Runtime(e.to_string())
    }
}

type CliResult = Result<(), Failure>;

fn load_config(args: &RunArgs) -> Result<ExperimentConfig, Failure> {
    let text = fs::read_to_string(&args.config)
        .map_err(|e| Failure::Usage(format!("cannot read {}: {e}", args.config.display())))?;
    let mut cfg = ExperimentConfig::from_toml(&text).map_err(|e| Failure::Usage(e.to_string()))?;
    if let Some(seed) = args.seed {
        cfg.master_seed = seed;
    }
    if let Some(p) = args.p {
        cfg.p_grid = vec![p];
    }
    if let Some(rho) = args.rho {
        cfg.rho_grid = vec![rho];
    }
    if let Some(t) = args.trials {
        cfg.trials = t;
    }
    if let Some(r) = args.resample {
        cfg.resample = r;
    }
    if let Some(e) = args.encoder {
        cfg.encoder = e;
    }
    cfg.validate().map_err(|e| Failure::Usage(e.to_string()))?;
    for w in cfg.warnings() {
        eprintln!("warning: {w}");
    }
    Ok(cfg)
}

fn read_matrix(path: &Path) -> Result<Matrix, Failure> {
    let file = File::open(path).map_err(|e| Failure::Runtime(format!("cannot open {}: {e}", path.display())))?;
    Ok(Matrix::read_text(BufReader::new(file))?)
}

fn write_matrix(m: &Matrix, path: &Path) -> CliResult {
    m.write_text(BufWriter::new(File::create(path)?))?;
    Ok(())
}

fn generate(args: &RunArgs) -> CliResult {
    let cfg = load_config(args)?;
    let model = cfg.model(cfg.rho_grid[0]);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.master_seed);
    let a_star = generate_dictionary(&model, &mut rng)?;
    let fulls: Vec<Vec<f64>> = generate_full_samples(&model, &a_star, cfg.holdout(), &mut rng)?
        .into_iter()
        .map(|(y, _)| y)
        .collect();
    let pool: Vec<PartialSample> = generate_batch(&model, &a_star, cfg.p_grid[0], &mut rng)?
        .into_iter()
        .map(|(y, _)| y)
        .collect();
    fs::create_dir_all(&args.out_dir)?;
    write_matrix(&a_star, &args.out_dir.join("astar.txt"))?;
    write_matrix(&Matrix::from_rows(&fulls)?, &args.out_dir.join("holdout.txt"))?;
    write_dataset(BufWriter::new(File::create(args.out_dir.join("samples.txt"))?), &model, &pool)?;
    Ok(())
}

struct Loaded {
    cfg: ExperimentConfig,
    rho: f64,
    fulls: Vec<Vec<f64>>,
    pool: Vec<PartialSample>,
    truth: Option<Matrix>,
}

fn load_data(args: &DataArgs) -> Result<Loaded, Failure> {
    let mut cfg = load_config(&args.run)?;
    let holdout = read_matrix(&args.data.join("holdout.txt"))?;
    let file = File::open(args.data.join("samples.txt"))?;
    let (header, pool) = read_dataset(BufReader::new(file))?;
    if (header.n, header.m, header.k) != (cfg.n, cfg.m, cfg.k) {
        return Err(Failure::Usage(format!(
            "data has n={} m={} k={} but the config says n={} m={} k={}",
            header.n, header.m, header.k, cfg.n, cfg.m, cfg.k
        )));
    }
    cfg.rho_grid = vec![header.rho];
    let truth = args.truth.as_deref().map(read_matrix).transpose()?;
    Ok(Loaded {
        rho: header.rho,
        fulls: (0..holdout.rows()).map(|i| holdout.row(i).to_vec()).collect(),
        pool,
        truth,
        cfg,
    })
}

fn initialize(data: &Loaded, out_dir: &Path, rng: &mut ChaCha8Rng) -> Result<Matrix, Failure> {
    let model = data.cfg.model(data.rho);
    let truth_norm = match &data.truth {
        Some(t) => Some(spectral_norm(t, &PowerIteration::default())?),
        None => None,
    };
    let init_cfg = data.cfg.init(&model, truth_norm);
    fs::create_dir_all(out_dir)?;
    let report_path = out_dir.join("init_report.csv");
    match run_init(&data.fulls, &data.pool, &init_cfg, data.rho, model.m, rng) {
        Ok(out) => {
            write_report(&out.report, BufWriter::new(File::create(&report_path)?))?;
            let a0 = out.a0.ok_or_else(|| Failure::Usage("m must be >= 1".into()))?;
            write_matrix(&a0, &out_dir.join("a0.txt"))?;
            Ok(a0)
        }
        Err(InitError::Incomplete { found, wanted, report, .. }) => {
            write_report(&report, BufWriter::new(File::create(&report_path)?))?;
            Err(Failure::Runtime(format!(
                "initialization found {found} of {wanted} columns; raise max_pair_trials or relax c1/c2"
            )))
        }
        Err(e) => Err(e.into()),
    }
}

fn init(args: &DataArgs) -> CliResult {
    let data = load_data(args)?;
    let mut rng = ChaCha8Rng::seed_from_u64(data.cfg.master_seed);
    initialize(&data, &args.run.out_dir, &mut rng)?;
    Ok(())
}

fn learn(args: &LearnArgs) -> CliResult {
    let data = load_data(&args.data)?;
    let out_dir = &args.data.run.out_dir;
    let mut rng = ChaCha8Rng::seed_from_u64(data.cfg.master_seed);
    let a0 = match &args.init {
        Some(path) => read_matrix(path)?,
        None => initialize(&data, out_dir, &mut rng)?,
    };
    let model = data.cfg.model(data.rho);
    let dcfg = data.cfg.descent(&model, data.pool.len());
    let params = EncoderParams::from_model(&model, dcfg.encoder);
    let source = SampleSource::Pool {
        samples: &data.pool,
        truth: None,
    };
    let (a_hat, trace): (Matrix, DescentTrace) =
        run_descent(&a0, &dcfg, &params, source, data.truth.as_ref(), &mut rng)?;
    fs::create_dir_all(out_dir)?;
    write_matrix(&a_hat, &out_dir.join("a_hat.txt"))?;
    trace.write_csv(BufWriter::new(File::create(out_dir.join("trace_0.csv"))?))?;
    Ok(())
}

fn sweep(args: &RunArgs) -> CliResult {
    let cfg = load_config(args)?;
    let result = run_sweep(&cfg)?;
    for r in result.records.iter().filter(|r| r.failure.is_some()) {
        eprintln!(
            "note: p={} rho={} trial={}: {}",
            r.p,
            r.rho,
            r.trial,
            r.failure.as_deref().unwrap_or_default()
        );
    }
    write_outputs(&result, &cfg, &args.out_dir)?;
    Ok(())
}

fn eval(args: &EvalArgs) -> CliResult {
    if !(args.tau > 0.0) {
        return Err(Failure::Usage(format!("tau must be positive, got {}", args.tau)));
    }
    let est = read_matrix(&args.est)?;
    let truth = read_matrix(&args.truth)?;
    let m = hungarian_match(&est, &truth)?;
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    writeln!(out, "frob_err,max_err,total_cost,tau,success")?;
    writeln!(
        out,
        "{},{},{},{},{}",
        m.frob_err,
        m.max_err,
        m.total_cost,
        args.tau,
        recovery_success(&m, args.tau) as u8
    )?;
    if let Some(dir) = &args.out_dir {
        fs::create_dir_all(dir)?;
        let mut w = BufWriter::new(File::create(dir.join("match.csv"))?);
        writeln!(w, "truth_col,est_col,sign,col_err")?;
        for (i, ((j, s), e)) in m.permutation.iter().zip(&m.signs).zip(&m.per_column_err).enumerate() {
            writeln!(w, "{i},{j},{s},{e}")?;
        }
        let report = evaluate(&est, &truth, args.tau, 200, &mut ChaCha8Rng::seed_from_u64(0))?;
        write_eval_report(&[report], BufWriter::new(File::create(dir.join("report.csv"))?))?;
    }
    Ok(())
}

fn dispatch(cli: &Cli) -> CliResult {
    match &cli.command {
        Command::Generate(a) => generate(a),
        Command::Init(a) => init(a),
        Command::Learn(a) => learn(a),
        Command::Sweep(a) => sweep(a),
        Command::Eval(a) => eval(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            eprintln!("error\tusage\t{}", e.kind());
            return ExitCode::from(2);
        }
    };
    let result = if cli.serial {
        par::serial(|| dispatch(&cli))
    } else {
        dispatch(&cli)
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error\tusage\t{msg}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error\truntime\t{msg}");
            ExitCode::from(1)
        }
    }
}
