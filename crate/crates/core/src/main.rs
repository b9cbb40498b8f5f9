use clap::{Args, Parser, Subcommand};
use gblab::complex::solid_angles;
use gblab::config::{parse_seed, RunConfig};
use gblab::flatform::{diagonalize_with_seed, FlatBilinearTensor};
use gblab::pfaffian::{pfaffian, SkewMatrix};
use gblab::pseudosphere::{convergence_table, Rectangle, Soliton};
use gblab::report::Report;
use gblab::suites::{run_suites, Suite};
use gblab::Error;
use serde::de::DeserializeOwned;
use serde::Serialize;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

#[derive(Parser, Debug)]
#[command(name = "gblab", version, about = "Verification suites and calculators for Gauss-Bonnet integrands")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Global {
    /// Write the output here instead of stdout.
    #[arg(long, global = true, value_name = "FILE")]
    out: Option<PathBuf>,
    /// Flat TOML run configuration.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Report format; overrides the config file.
    #[arg(long, global = true, value_parser = ["json", "csv", "text"])]
    format: Option<String>,
    /// Seed; overrides the config file and GBLAB_SEED.
    #[arg(long, global = true)]
    seed: Option<String>,
    /// Main grid resolution of the selected suite.
    #[arg(long, global = true)]
    resolution: Option<usize>,
    /// Number of suites run concurrently.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Omit the timestamp and wall times so equal runs give identical bytes.
    #[arg(long, global = true)]
    no_timestamp: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run a verification suite.
    Verify {
        #[arg(value_parser = ["pfaffian", "forms", "frames", "thom", "complex", "flatform", "hazzidakis", "all"])]
        suite: String,
    },
    /// Compute a single object from a JSON input.
    #[command(subcommand)]
    Compute(Compute),
    /// Render a saved JSON report, or run every suite when no input is given.
    Report {
        #[arg(long, value_name = "FILE")]
        input: Option<PathBuf>,
    },
}

#[derive(Subcommand, Debug)]
enum Compute {
    /// Pfaffian of a skew matrix given as an array of rows.
    Pfaffian {
        #[arg(long, value_name = "FILE")]
        input: PathBuf,
    },
    /// Rank-one diagonalization of a flat symmetric bilinear tensor `h[λ][i][j]`.
    Diagonalize {
        #[arg(long, value_name = "FILE")]
        input: PathBuf,
    },
    /// Solid-angle fractions of the dual cells of a coframe given as rows.
    SolidAngle {
        #[arg(long, value_name = "FILE")]
        coframe: PathBuf,
        #[arg(long)]
        samples: Option<usize>,
    },
    /// CSV of area against corner sum over a list of resolutions.
    Convergence {
        #[arg(long, default_value_t = 1.0)]
        mu: f64,
        /// Rectangle `a,b,c,d` for `[a,b] x [c,d]`.
        #[arg(long, value_delimiter = ',', num_args = 4, default_values_t = [-1.5, -0.5, -1.5, -0.5])]
        rect: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_values_t = [65usize, 129, 257, 513])]
        resolutions: Vec<usize>,
    },
}

/// Input, configuration or output error; exit code 2.
struct Failure(String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
    }
}

fn load_config(g: &Global) -> Result<RunConfig, Failure> {
    let mut cfg = match &g.config {
        Some(p) => RunConfig::from_file(p)?,
        None => RunConfig::default(),
    };
    cfg.apply_env()?;
    if let Some(s) = &g.seed {
        cfg.seed = parse_seed(s)?;
    }
    if let Some(f) = &g.format {
        cfg.format = f.parse()?;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| {
        let kind = if e.is_data() { "invalid" } else { "malformed" };
        Failure(format!("{kind} JSON in {}: {e}", path.display()))
    })
}

fn emit(out: &Option<PathBuf>, text: &str) -> Result<(), Failure> {
    match out {
        Some(p) => std::fs::write(p, text).map_err(|e| Failure(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn to_json<T: Serialize>(v: &T) -> Result<String, Failure> {
    let mut s = serde_json::to_string_pretty(v).map_err(|e| Failure(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

fn run(cli: Cli) -> Result<bool, Failure> {
    let g = cli.global;
    let mut cfg = load_config(&g)?;
    match cli.command {
        Command::Verify { suite } => {
            let suites: Vec<Suite> = match suite.as_str() {
                "all" => Suite::ALL.to_vec(),
                name => vec![Suite::from_name(name).ok_or_else(|| Failure(format!("unknown suite '{name}'")))?],
            };
            if let Some(r) = g.resolution {
                if suites.len() != 1 {
                    return Err(Failure("--resolution applies to a single suite".into()));
                }
                suites[0].set_resolution(&mut cfg, r);
                cfg.validate()?;
            }
            verify(&format!("verify {suite}"), &suites, &cfg, &g)
        }
        Command::Report { input } => {
            let report = match input {
                Some(p) => {
                    let mut r: Report = read_json(&p)?;
                    r.recompute_pass();
                    if g.no_timestamp {
                        r.strip_timing();
                    }
                    r
                }
                None => return verify("verify all", &Suite::ALL, &cfg, &g),
            };
            emit(&g.out, &report.render(cfg.format)?)?;
            Ok(report.pass)
        }
        Command::Compute(c) => {
            compute(c, &cfg, &g)?;
            Ok(true)
        }
    }
}

fn verify(command: &str, suites: &[Suite], cfg: &RunConfig, g: &Global) -> Result<bool, Failure> {
    let t = Instant::now();
    let jobs = g.jobs.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    let reports = run_suites(suites, cfg, jobs)?;
    let mut report = Report::new(command, cfg, reports);
    if g.no_timestamp {
        report.strip_timing();
    } else {
        report.wall_time_s = Some(t.elapsed().as_secs_f64());
        report.timestamp = SystemTime::now().duration_since(UNIX_EPOCH).ok().map(|d| d.as_secs());
    }
    emit(&g.out, &report.render(cfg.format)?)?;
    Ok(report.pass)
}

#[derive(Serialize)]
struct SolidAngleOutput {
    fractions: Vec<f64>,
    sum: f64,
    samples: usize,
    seed: u64,
}

fn compute(c: Compute, cfg: &RunConfig, g: &Global) -> Result<(), Failure> {
    let text = match c {
        Compute::Pfaffian { input } => {
            let rows: Vec<Vec<f64>> = read_json(&input)?;
            let a = SkewMatrix::from_rows(&rows)?;
            format!("{}\n", pfaffian(&a)?)
        }
        Compute::Diagonalize { input } => {
            let beta: FlatBilinearTensor = read_json(&input)?;
            to_json(&diagonalize_with_seed(&beta, cfg.seed)?)?
        }
        Compute::SolidAngle { coframe, samples } => {
            let rows: Vec<Vec<f64>> = read_json(&coframe)?;
            let r = solid_angles(&rows, samples.unwrap_or(cfg.samples), cfg.seed)?;
            let sum = r.fractions.iter().sum();
            to_json(&SolidAngleOutput { fractions: r.fractions, sum, samples: r.samples, seed: r.seed })?
        }
        Compute::Convergence { mu, rect, resolutions } => {
            let rect = Rectangle::new(rect[0], rect[1], rect[2], rect[3])?;
            let rows = convergence_table(Soliton::new(mu)?, rect, &resolutions)?;
            let mut s = String::from("resolution,area,corner_sum,error,residual\n");
            for r in rows {
                s.push_str(&format!("{},{:e},{:e},{:e},{:e}\n", r.resolution, r.area, r.corner_sum, r.error, r.residual));
            }
            s
        }
    };
    emit(&g.out, &text)
}
