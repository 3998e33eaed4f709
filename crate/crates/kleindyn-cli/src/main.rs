//! `kleindyn` binary: scenario-driven runs of the semi-analytic and
//! finite-difference scattering pipelines, amplitude sweeps, and snapshot
//! comparison. Errors are reported as a single JSON line on stderr with
//! exit code 1.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};

use kleindyn::amplitudes::{
    amplitude_method, barrier_steps, convergence, AmplitudeRequest,
};
use kleindyn::wavepacket::MomentumGrid;
use kleindyn_cli::config::LoadedScenario;
use kleindyn_cli::output::write_artifacts;
use kleindyn_cli::scenario::{run_scenario, RunMethod, RunOptions};
use kleindyn_cli::snapshot::{compare, import_snapshot};

#[derive(Parser)]
#[command(
    name = "kleindyn",
    version,
    about = "Relativistic wavepacket scattering off supercritical barriers: \
             semi-analytic and finite-difference pipelines with cross-checks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Tabulate barrier coefficients over the configured momentum window.
    Amplitudes(AmplitudesArgs),
    /// Evaluate the semi-analytic wavepacket at the requested times.
    Packet(PacketArgs),
    /// Advance the initial packet with the stepped finite-difference scheme.
    Evolve(EvolveArgs),
    /// Compare two exported snapshot CSVs and print the metrics as JSON.
    Compare(CompareArgs),
    /// Run the configured pipelines and write snapshots plus a report.
    Run(FullRunArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Scenario configuration file (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides the config's `output_dir` (default ./out).
    #[arg(long)]
    out: Option<PathBuf>,
}

impl CommonArgs {
    fn load(&self) -> anyhow::Result<LoadedScenario> {
        let loaded = LoadedScenario::from_path(&self.config)?;
        loaded.config.validate()?;
        Ok(loaded)
    }

    fn out_dir(&self, loaded: &LoadedScenario) -> PathBuf {
        self.out
            .clone()
            .or_else(|| loaded.config.output_dir.clone())
            .unwrap_or_else(|| PathBuf::from("./out"))
    }
}

#[derive(Args)]
struct AmplitudesArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Amplitude-assembly strategy (overrides the config).
    #[arg(long)]
    method: Option<String>,
    /// Reflection-order truncation override.
    #[arg(long)]
    nmax: Option<u32>,
}

#[derive(Args)]
struct PacketArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Reflection-order truncation override.
    #[arg(long)]
    nmax: Option<u32>,
}

#[derive(Args)]
struct EvolveArgs {
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args)]
struct CompareArgs {
    /// Reference snapshot CSV.
    a: PathBuf,
    /// Snapshot CSV to compare against the reference.
    b: PathBuf,
}

#[derive(Args)]
struct FullRunArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Which pipelines to run.
    #[arg(long, value_enum, default_value_t = MethodArg::Both)]
    method: MethodArg,
    /// Reflection-order truncation override.
    #[arg(long)]
    nmax: Option<u32>,
    /// Also write a gnuplot script plotting the exported densities.
    #[arg(long)]
    plot: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Semi,
    Fd,
    Both,
}

impl From<MethodArg> for RunMethod {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Semi => RunMethod::Semi,
            MethodArg::Fd => RunMethod::Fd,
            MethodArg::Both => RunMethod::Both,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            let line = serde_json::json!({ "error": format!("{err:#}") });
            eprintln!("{line}");
            ExitCode::FAILURE
        }
    }
}

fn dispatch(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Amplitudes(args) => run_amplitudes(&args),
        Command::Packet(args) => {
            let opts = RunOptions {
                method: RunMethod::Semi,
                n_max_override: args.nmax,
            };
            run_pipelines(&args.common, opts, false)
        }
        Command::Evolve(args) => {
            let opts = RunOptions {
                method: RunMethod::Fd,
                n_max_override: None,
            };
            run_pipelines(&args.common, opts, false)
        }
        Command::Compare(args) => run_compare(&args),
        Command::Run(args) => {
            let opts = RunOptions {
                method: args.method.into(),
                n_max_override: args.nmax,
            };
            run_pipelines(&args.common, opts, args.plot)
        }
    }
}

fn run_pipelines(common: &CommonArgs, opts: RunOptions, plot: bool) -> anyhow::Result<()> {
    let loaded = common.load()?;
    let out_dir = common.out_dir(&loaded);
    let artifacts = run_scenario(&loaded, &opts)?;
    for w in &artifacts.warnings {
        eprintln!("warning: {w}");
    }
    let written = write_artifacts(
        &artifacts,
        &loaded.config.snapshot_times,
        &loaded.sha256,
        &out_dir,
        plot,
    )?;
    for path in &written.snapshots {
        println!("wrote {}", path.display());
    }
    println!("wrote {}", written.report.display());
    if let Some(p) = &written.plot {
        println!("wrote {}", p.display());
    }
    Ok(())
}

fn run_compare(args: &CompareArgs) -> anyhow::Result<()> {
    let a = import_snapshot(&args.a)?;
    let b = import_snapshot(&args.b)?;
    let metrics = compare(&a, &b)?;
    let json = serde_json::to_string(&metrics).context("metrics serialization")?;
    println!("{json}");
    Ok(())
}

/// Sweeps the configured momentum window (201 samples) and writes one CSV
/// row per incident momentum: the transfer-assembled coefficients, their
/// moduli, and the interference-loop convergence data.
fn run_amplitudes(args: &AmplitudesArgs) -> anyhow::Result<()> {
    let loaded = args.common.load()?;
    let cfg = &loaded.config;
    let ps = cfg.particle();
    let barrier = cfg.barrier();
    let convention = cfg.smooth_convention()?;
    let window = cfg.momentum_grid(&ps)?;
    let sweep = MomentumGrid::new(window.lo, window.hi, 201)
        .map_err(|e| anyhow::anyhow!("momentum sweep: {e}"))?;

    let method_name = args.method.as_deref().unwrap_or(&cfg.method_amplitudes);
    let method = amplitude_method(method_name)?;
    let n_max = args.nmax.or(cfg.n_max).unwrap_or(cfg.mse_terms_cap);

    let mut body = String::from(
        "p1,re_b1,im_b1,re_a2,im_a2,re_b2,im_b2,re_a3,im_a3,abs_b1,abs_a3,loop_abs,converges\n",
    );
    for p1 in sweep.samples() {
        let mut req = AmplitudeRequest::new(cfg.equation.kind(), ps, barrier, p1);
        req = req.with_n_max(n_max);
        req.smooth_convention = convention;
        let amps = method.compute(&req)?;
        let conv = convergence(&barrier_steps(&req)?);
        body.push_str(&format!(
            "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{}\n",
            p1,
            amps.b1.re,
            amps.b1.im,
            amps.a2.re,
            amps.a2.im,
            amps.b2.re,
            amps.b2.im,
            amps.a3.re,
            amps.a3.im,
            amps.b1.norm(),
            amps.a3.norm(),
            conv.modulus,
            conv.converges,
        ));
    }

    let out_dir = args.common.out_dir(&loaded);
    fs::create_dir_all(&out_dir)
        .with_context(|| format!("creating {}", out_dir.display()))?;
    let path = out_dir.join(format!("amplitudes_{method_name}.csv"));
    write_text(&path, &body)?;
    println!("wrote {}", path.display());
    Ok(())
}

fn write_text(path: &Path, text: &str) -> anyhow::Result<()> {
    let mut f =
        fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
    f.write_all(text.as_bytes())
        .with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}
