use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use surfwave::model::Formulation;
use surfwave::runner::study::{convergence_study, table1};
use surfwave::runner::{self, parse_run_config, parse_snapshot, RunConfig, RunError, SavedState};

#[derive(Parser)]
#[command(name = "surfwave", version, about = "Periodic boundary-integral water-wave simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one simulation. Exit code 0 = completed, 2 = instability, 3 = splash.
    Run {
        config: PathBuf,
        #[command(flatten)]
        over: Overrides,
    },
    /// Run a resolution study and report Hausdorff errors against a reference.
    Converge {
        config: PathBuf,
        #[command(flatten)]
        over: Overrides,
        /// Resolutions to measure.
        #[arg(long, value_delimiter = ',', required = true)]
        ns: Vec<usize>,
        /// Resolution of the reference run.
        #[arg(long, default_value_t = 2048)]
        reference: usize,
        /// Comparison times (multiples of the snapshot interval).
        #[arg(long, value_delimiter = ',', required = true)]
        times: Vec<f64>,
        /// Keep finished runs found in the output directory.
        #[arg(long)]
        reuse: bool,
    },
    /// Breaking-wave runs for all four schemes at each resolution.
    Table1 {
        #[arg(long)]
        dir: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "256,512,1024,2048")]
        ns: Vec<usize>,
        /// Stop runs that are still stable at this time.
        #[arg(long, default_value_t = 5.0)]
        cap: f64,
        #[arg(long)]
        reuse: bool,
    },
    /// Build the initial state, round-trip it through the snapshot format and
    /// print its diagnostics.
    IcCheck {
        config: PathBuf,
        #[command(flatten)]
        over: Overrides,
        /// Also write the initial snapshot here.
        #[arg(long)]
        write: Option<PathBuf>,
    },
}

#[derive(Args, Default)]
struct Overrides {
    /// Surface nodes.
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, value_parser = parse_formulation)]
    formulation: Option<Formulation>,
    /// Fixed time step (0 picks one from the CFL target).
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    cfl: Option<f64>,
    /// Odd-even coupling correction (dipole only).
    #[arg(long)]
    oec: bool,
    #[arg(long)]
    end: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_formulation(s: &str) -> Result<Formulation, String> {
    match s {
        "vortex" => Ok(Formulation::Vortex),
        "dipole" => Ok(Formulation::Dipole),
        _ => Err(format!("unknown formulation {s:?} (vortex or dipole)")),
    }
}

impl Overrides {
    fn apply(&self, cfg: &mut RunConfig) {
        if let Some(n) = self.n {
            cfg.scenario.n_s = n;
            cfg.scenario.n_b = None;
        }
        if let Some(f) = self.formulation {
            cfg.scenario.formulation = f;
        }
        if let Some(dt) = self.dt {
            cfg.step.dt = dt;
        }
        if let Some(c) = self.cfl {
            cfg.step.cfl_target = c;
        }
        if self.oec {
            cfg.step.oec = true;
        }
        if let Some(t) = self.end {
            cfg.end.time = Some(t);
        }
        if let Some(d) = &self.out {
            cfg.output.dir = d.clone();
        }
    }
}

fn load_config(path: &Path, over: &Overrides) -> Result<RunConfig, RunError> {
    let text = runner::read_file(path)?;
    let mut cfg = parse_run_config(&text).map_err(|source| RunError::Parse { path: path.to_path_buf(), source })?;
    over.apply(&mut cfg);
    // relative snapshot paths are taken from the config's directory
    if let (Some(s), Some(base)) = (&cfg.initial_snapshot, path.parent()) {
        if s.is_relative() {
            cfg.initial_snapshot = Some(base.join(s));
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

fn ic_check(cfg: &RunConfig, write: Option<&Path>) -> Result<bool, RunError> {
    let problem = cfg.problem()?;
    let (state, t0) = runner::initial_state(cfg, &problem)?;
    let saved = SavedState::new(&state, t0, 0);
    let text = saved.to_text();
    let back = parse_snapshot(&text).map_err(|source| RunError::Parse { path: "<memory>".into(), source })?;
    let exact = back == saved;
    let rec = runner::diagnose(&problem, &back.to_state()?, t0, 0.0)?;
    println!("scenario        {} ({}, N = {})", cfg.scenario.kind, cfg.formulation(), state.surface.len());
    println!("round trip      {}", if exact { "exact" } else { "MISMATCH" });
    println!("min spacing     {:.6e}", state.surface.min_spacing());
    println!("mass            {:.12e}", rec.mass);
    match rec.energy {
        Some(e) => println!("wave energy     {e:.12e}"),
        None => println!("wave energy     n/a"),
    }
    println!("circulation     {:.6e}", rec.circulation_total);
    println!("compatibility   {:.3e}", rec.compatibility_residual);
    if let Some(p) = write {
        runner::write_file(p, &text)?;
    }
    Ok(exact)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    // clap exits with 2 on usage errors, which here means instability
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result: Result<u8, RunError> = (|| match cli.command {
        Command::Run { config, over } => {
            let cfg = load_config(&config, &over)?;
            let s = runner::run(&cfg)?;
            println!("{} (dt = {:.6e}, output in {})", s.outcome, s.dt, s.dir.display());
            Ok(s.outcome.exit_code() as u8)
        }
        Command::Converge { config, over, ns, reference, times, reuse } => {
            let cfg = load_config(&config, &over)?;
            let t = convergence_study(&cfg, &ns, reference, &times, reuse)?;
            print!("{}", t.to_text());
            Ok(if t.complete() { 0 } else { 1 })
        }
        Command::Table1 { dir, ns, cap, reuse } => {
            let t = table1(&dir, &ns, cap, reuse)?;
            print!("{}", t.to_text());
            Ok(0)
        }
        Command::IcCheck { config, over, write } => {
            let cfg = load_config(&config, &over)?;
            Ok(if ic_check(&cfg, write.as_deref())? { 0 } else { 1 })
        }
    })();
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
