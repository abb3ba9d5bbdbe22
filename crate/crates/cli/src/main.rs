use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};

use sidr::io::{load_dataset, write_features, write_labels, write_layout};
use sidr::sim::{generate_synthetic_benchmark, run_simulation, BenchmarkConfig, SimConfig};
use sidr::{adjusted_silhouette, project, EmbeddingHead, Error, MdsConfig, Method, RngSeed};
use sidr_server::AppState;

#[derive(Parser)]
#[command(name = "sidr", version, about = "Steerable 2D projections of feature vectors")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Project a feature file to a unit-square layout CSV (`id,x,y`).
    Project(ProjectArgs),
    /// Run the interaction-size sweep and write report CSVs plus an SVG plot.
    Simulate(SimulateArgs),
    /// Start the HTTP server.
    Serve(ServeArgs),
    /// Write the synthetic two-factor benchmark as CSV files.
    GenBenchmark(GenArgs),
}

#[derive(Args)]
struct ProjectArgs {
    #[arg(long)]
    features: PathBuf,
    /// Labels to score the layout against.
    #[arg(long)]
    labels: Option<PathBuf>,
    /// Embedding-head checkpoint to apply before projecting.
    #[arg(long)]
    head: Option<PathBuf>,
    /// Output CSV; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    out_dir: PathBuf,
    /// JSON file with a full sweep configuration; flags given here override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Feature file; the synthetic benchmark is used when omitted.
    #[arg(long, requires = "labels")]
    features: Option<PathBuf>,
    /// Ground-truth labels for `--features`.
    #[arg(long, requires = "features")]
    labels: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    methods: Option<Vec<Method>>,
    #[arg(long = "k", value_delimiter = ',')]
    k_values: Option<Vec<usize>>,
    #[arg(long)]
    reps: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct ServeArgs {
    #[arg(long, default_value_t = 8080)]
    port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    host: String,
    /// Where head checkpoints are written.
    #[arg(long)]
    data_dir: Option<PathBuf>,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long)]
    out_dir: PathBuf,
    #[arg(long, default_value_t = 10)]
    n_per_cell: usize,
    #[arg(long, default_value_t = 16)]
    d: usize,
    #[arg(long, default_value_t = 3.0)]
    dominant_gap: f64,
    #[arg(long, default_value_t = 1.0)]
    secondary_gap: f64,
    #[arg(long, default_value_t = 0.25)]
    noise: f64,
    #[arg(long, default_value_t = 7)]
    seed: u64,
}

fn create(path: &Path) -> sidr::Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|e| Error::Io { path: path.into(), source: e })
}

fn cmd_project(a: ProjectArgs) -> sidr::Result<()> {
    let (features, labels) = load_dataset(&a.features, a.labels.as_deref())?;
    let head = a.head.as_deref().map(EmbeddingHead::load).transpose()?;
    let cfg = MdsConfig { seed: RngSeed(a.seed), ..Default::default() };
    let layout = project(&features, head.as_ref(), &cfg)?;
    match &a.out {
        Some(path) => {
            let mut w = create(path)?;
            write_layout(&layout, &mut w)?;
            w.flush().map_err(|e| Error::Io { path: path.clone(), source: e })?;
        }
        None => write_layout(&layout, std::io::stdout().lock())?,
    }
    if let Some(labels) = labels {
        let s = adjusted_silhouette(&layout, &labels)?;
        let text = format!("silhouette {}\nadjusted {}\n", s.silhouette, s.adjusted);
        // keep standard output a clean CSV when the layout goes there
        if a.out.is_some() {
            print!("{text}");
        } else {
            eprint!("{text}");
        }
    }
    Ok(())
}

fn cmd_simulate(a: SimulateArgs) -> sidr::Result<()> {
    let mut cfg = match &a.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| Error::Io { path: path.clone(), source: e })?;
            serde_json::from_str::<SimConfig>(&text)?
        }
        None => SimConfig::default(),
    };
    if let Some(m) = a.methods {
        cfg.methods = m;
    }
    if let Some(k) = a.k_values {
        cfg.k_values = k;
    }
    if let Some(r) = a.reps {
        cfg.repetitions = r;
    }
    if let Some(s) = a.seed {
        cfg.seed = RngSeed(s);
    }
    let (features, labels) = match (&a.features, &a.labels) {
        (Some(f), Some(l)) => {
            let (features, labels) = load_dataset(f, Some(l))?;
            (features, labels.expect("labels were requested"))
        }
        _ => {
            let b = generate_synthetic_benchmark(&BenchmarkConfig::default())?;
            (b.features, b.secondary)
        }
    };
    let report = run_simulation(&features, &labels, &cfg)?;
    report.write_dir(&a.out_dir)?;
    print!("{}", report.aggregates_csv());
    for row in report.failures() {
        eprintln!(
            "cell {} k={} rep={} failed: {}",
            row.method,
            row.k,
            row.repetition,
            row.error.as_deref().unwrap_or_default()
        );
    }
    Ok(())
}

fn cmd_serve(a: ServeArgs) -> sidr::Result<()> {
    let runtime = tokio::runtime::Runtime::new().map_err(|e| Error::Io { path: "tokio runtime".into(), source: e })?;
    runtime.block_on(async {
        let addr = format!("{}:{}", a.host, a.port);
        let listener = tokio::net::TcpListener::bind(&addr)
            .await
            .map_err(|e| Error::Io { path: addr.clone().into(), source: e })?;
        eprintln!("listening on http://{}", listener.local_addr().map(|a| a.to_string()).unwrap_or(addr.clone()));
        let state = Arc::new(AppState::new(a.data_dir));
        sidr_server::serve(listener, state)
            .await
            .map_err(|e| Error::Io { path: addr.into(), source: e })
    })
}

fn cmd_gen_benchmark(a: GenArgs) -> sidr::Result<()> {
    let b = generate_synthetic_benchmark(&BenchmarkConfig {
        n_per_cell: a.n_per_cell,
        d: a.d,
        dominant_gap: a.dominant_gap,
        secondary_gap: a.secondary_gap,
        noise: a.noise,
        seed: RngSeed(a.seed),
    })?;
    std::fs::create_dir_all(&a.out_dir).map_err(|e| Error::Io { path: a.out_dir.clone(), source: e })?;
    let path = a.out_dir.join("features.csv");
    let mut w = create(&path)?;
    write_features(&b.features, &mut w)?;
    w.flush().map_err(|e| Error::Io { path, source: e })?;
    for (name, labels) in [("labels_primary.csv", &b.primary), ("labels_secondary.csv", &b.secondary)] {
        let path = a.out_dir.join(name);
        let mut w = create(&path)?;
        write_labels(labels, &mut w)?;
        w.flush().map_err(|e| Error::Io { path, source: e })?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let result = match Cli::parse().command {
        Command::Project(a) => cmd_project(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Serve(a) => cmd_serve(a),
        Command::GenBenchmark(a) => cmd_gen_benchmark(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
