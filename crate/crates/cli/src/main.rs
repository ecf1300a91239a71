//! `lbd`: run the sampler from a config file and regenerate the benchmark
//! experiments as plot-ready CSV.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use lbd_core::diagnostics::ring_weight;
use lbd_core::experiments::{self, TwoRingVariant};
use lbd_core::reparam::Family;
use lbd_core::sampler::{self, RunConfig, SampleRun, TargetSpec};

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] lbd_core::Error),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl CliError {
    fn exit_code(&self) -> u8 {
        use lbd_core::Error as E;
        match self {
            CliError::Config(_) => 2,
            CliError::Core(E::Diverged { .. } | E::NonFinite { .. } | E::NotPositiveDefinite | E::DegenerateBandwidth) => 3,
            CliError::Core(_) => 2,
            CliError::Io { .. } => 1,
        }
    }
}

type Result<T> = std::result::Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(name = "lbd", version, about = "Ensemble Langevin sampler with birth-death jumps")]
struct Cli {
    /// Run configuration (JSON or TOML). Experiments use it as their base.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the seed of the config or experiment.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Caps the number of worker threads.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[arg(long, global = true, default_value = ".")]
    out_dir: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the sampler; writes samples.csv and trace.csv.
    Run,
    /// Fisher-preconditioned vs identity on the 10-d hybrid Rosenbrock.
    ComparePrecond {
        #[arg(long)]
        iterations: Option<usize>,
    },
    /// Gaussian, logistic and Cauchy maps on the box-constrained Rosenbrock.
    ReparamSweep {
        #[arg(long)]
        iterations: Option<usize>,
    },
    /// Standard, annealed and annealed birth-death runs on the two-ring mixture.
    TwoRing {
        #[arg(long)]
        iterations: Option<usize>,
    },
    /// Annealed birth-death two-ring runs at fixed kernel bandwidths.
    BandwidthSweep {
        #[arg(long)]
        iterations: Option<usize>,
        #[arg(long, value_delimiter = ',', default_values_t = experiments::SWEEP_BANDWIDTHS)]
        bandwidths: Vec<f64>,
    },
    /// Exact draws from a target's direct sampler.
    Oracle {
        /// `hybrid-rosenbrock` or `two-ring`; ignored when --config is given.
        #[arg(long, default_value = "hybrid-rosenbrock")]
        target: String,
        #[arg(long, default_value_t = 2000)]
        count: usize,
    },
}

fn parse_config(text: &str, path: &Path) -> Result<RunConfig> {
    let ext = path.extension().and_then(|e| e.to_str()).unwrap_or("");
    let describe = |e: String| CliError::Config(format!("{}: {e}", path.display()));
    match ext {
        "json" => serde_json::from_str(text).map_err(|e| describe(e.to_string())),
        "toml" => toml::from_str(text).map_err(|e| describe(e.to_string())),
        _ => match toml::from_str(text) {
            Ok(c) => Ok(c),
            Err(toml_err) => serde_json::from_str(text)
                .map_err(|_| describe(toml_err.to_string())),
        },
    }
}

fn load_config(path: &Path) -> Result<RunConfig> {
    let text = fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let config = parse_config(&text, path)?;
    config.validate()?;
    Ok(config)
}

fn create(path: &Path) -> Result<BufWriter<fs::File>> {
    fs::File::create(path)
        .map(BufWriter::new)
        .map_err(|source| CliError::Io {
            path: path.to_path_buf(),
            source,
        })
}

fn io_at(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn write_samples(path: &Path, run: &SampleRun) -> Result<()> {
    let mut w = create(path)?;
    let header: Vec<String> = (1..=run.dim).map(|j| format!("x{j}")).collect();
    let mut body = || -> std::io::Result<()> {
        writeln!(w, "{}", header.join(","))?;
        for row in run.samples.chunks_exact(run.dim) {
            let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            writeln!(w, "{}", cells.join(","))?;
        }
        w.flush()
    };
    body().map_err(io_at(path))
}

struct Context {
    base: Option<RunConfig>,
    seed: Option<u64>,
    threads: Option<usize>,
    out_dir: PathBuf,
}

impl Context {
    /// The experiment preset, or the user config with the experiment's own
    /// knobs applied by `adjust`.
    fn config(&self, preset: RunConfig, iterations: Option<usize>, adjust: impl FnOnce(&mut RunConfig)) -> RunConfig {
        let mut c = match &self.base {
            Some(base) => {
                let mut c = base.clone();
                adjust(&mut c);
                c
            }
            None => preset,
        };
        if let Some(s) = self.seed {
            c.seed = s;
        }
        if let Some(t) = self.threads {
            c.threads = Some(t);
        }
        if let Some(l) = iterations {
            c.iterations = l;
            c.bd_stride = c.bd_stride.min(l);
        }
        c
    }

    fn path(&self, name: &str) -> PathBuf {
        self.out_dir.join(name)
    }

    fn series(&self, file: &str, runs: &[(String, SampleRun)]) -> Result<()> {
        let path = self.path(file);
        let names: Vec<String> = runs.iter().map(|(n, _)| n.clone()).collect();
        let traces: Vec<_> = runs.iter().map(|(_, r)| r.trace.clone()).collect();
        let mut w = create(&path)?;
        experiments::write_series_csv(&mut w, &names, &traces)
            .and_then(|_| w.flush())
            .map_err(io_at(&path))?;
        for (name, r) in runs {
            println!("{name}: final epsilon_stat {}", fmt_eps(r.final_epsilon()));
        }
        println!("wrote {}", path.display());
        Ok(())
    }
}

fn fmt_eps(e: Option<f64>) -> String {
    e.map_or_else(|| "n/a".to_string(), |v| format!("{v:.4}"))
}

fn execute(cli: Cli) -> Result<()> {
    let base = cli.config.as_deref().map(load_config).transpose()?;
    fs::create_dir_all(&cli.out_dir).map_err(io_at(&cli.out_dir))?;
    let ctx = Context {
        base,
        seed: cli.seed,
        threads: cli.threads,
        out_dir: cli.out_dir,
    };
    match cli.command {
        Command::Run => {
            let Some(mut c) = ctx.base.clone() else {
                return Err(CliError::Config("`run` needs --config".into()));
            };
            if let Some(s) = ctx.seed {
                c.seed = s;
            }
            if ctx.threads.is_some() {
                c.threads = ctx.threads;
            }
            let r = sampler::run(&c)?;
            write_samples(&ctx.path("samples.csv"), &r)?;
            let trace_path = ctx.path("trace.csv");
            let mut w = create(&trace_path)?;
            r.trace.write_csv(&mut w).and_then(|_| w.flush()).map_err(io_at(&trace_path))?;
            println!(
                "final epsilon_stat {} | jumps {} over {} rounds | wall {:.2}s",
                fmt_eps(r.final_epsilon()),
                r.counters.total_jumps,
                r.counters.bd_rounds,
                r.wall_time.as_secs_f64()
            );
        }
        Command::ComparePrecond { iterations } => {
            let mut runs = Vec::new();
            for (name, pre) in [("fisher", true), ("identity", false)] {
                let c = ctx.config(experiments::preconditioning(pre, 0), iterations, |c| {
                    c.precondition = pre;
                    c.tau = if pre { experiments::PRECONDITIONED_TAU } else { experiments::IDENTITY_TAU };
                });
                runs.push((name.to_string(), sampler::run(&c)?));
            }
            ctx.series("compare_precond.csv", &runs)?;
        }
        Command::ReparamSweep { iterations } => {
            let mut runs = Vec::new();
            for (name, family) in [("Gauss", Family::Gaussian), ("Logistic", Family::Logistic), ("Cauchy", Family::Cauchy)] {
                let c = ctx.config(experiments::reparameterization(family, 0), iterations, |c| c.reparam = family);
                runs.push((name.to_string(), sampler::run(&c)?));
            }
            ctx.series("reparam_sweep.csv", &runs)?;
        }
        Command::TwoRing { iterations } => {
            let mut runs = Vec::new();
            for v in TwoRingVariant::ALL {
                let c = ctx.config(experiments::two_ring(v, 0), iterations, |c| {
                    c.anneal = v != TwoRingVariant::Standard;
                    c.bd = v == TwoRingVariant::AnnealedBirthDeath;
                });
                let r = sampler::run(&c)?;
                if r.dim == 2 {
                    println!("{}: outer-ring weight {:.3}", v.label(), ring_weight(&r.samples, 3.0, 6.0));
                }
                let file = format!("two_ring_{}.csv", v.label().to_lowercase().replace('+', "_"));
                write_samples(&ctx.path(&file), &r)?;
                runs.push((v.label().to_string(), r));
            }
            ctx.series("two_ring.csv", &runs)?;
        }
        Command::BandwidthSweep { iterations, bandwidths } => {
            if bandwidths.iter().any(|h| !(*h > 0.0)) {
                return Err(CliError::Config("bandwidths must be positive".into()));
            }
            let mut runs = Vec::new();
            for h in bandwidths {
                let c = ctx.config(experiments::fixed_bandwidth(h, 0), iterations, |c| {
                    c.bd = true;
                    c.bandwidth = Some(h);
                });
                runs.push((experiments::bandwidth_label(h), sampler::run(&c)?));
            }
            ctx.series("bandwidth_sweep.csv", &runs)?;
        }
        Command::Oracle { target, count } => {
            let spec = match &ctx.base {
                Some(c) => c.target.clone(),
                None => match target.as_str() {
                    "hybrid-rosenbrock" => experiments::hybrid_rosenbrock(),
                    "two-ring" => TargetSpec::TwoRing { sigma: 0.5 },
                    other => return Err(CliError::Config(format!("unknown target `{other}`"))),
                },
            };
            let seed = ctx.seed.or(ctx.base.as_ref().map(|c| c.seed)).unwrap_or(0);
            let samples = sampler::oracle_samples(&spec, count, seed)?;
            let dim = spec.build()?.dim();
            let run = SampleRun {
                samples,
                dim,
                trace: Default::default(),
                rounds: Vec::new(),
                counters: Default::default(),
                wall_time: Default::default(),
            };
            let path = ctx.path("oracle.csv");
            write_samples(&path, &run)?;
            println!("wrote {count} draws to {}", path.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
