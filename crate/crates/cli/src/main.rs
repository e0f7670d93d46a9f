use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use thzsec::emit::{self, Format};
use thzsec::outage::monte_carlo_outage;
use thzsec::scan::{extract_insecure_region, run_scan, run_sweep, ScanResult, ScanSpec};
use thzsec::{Config, Error, ResolvedLink, ScanMode};

const EXIT_CONFIG: u8 = 1;
const EXIT_RUNTIME: u8 = 2;
const EXIT_IO: u8 = 3;

const MONTE_CARLO_SAMPLES: usize = 1_000_000;

/// Eavesdropping risk maps for terahertz links in atmospheric turbulence.
#[derive(Parser)]
#[command(name = "thzsec", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Secrecy capacity or outage probability over a grid of Eve positions.
    Scan(Common),
    /// Full breakdown at Eve's configured position.
    Point {
        #[command(flatten)]
        common: Common,
        /// Override Eve's x position, m.
        #[arg(long, allow_hyphen_values = true)]
        x: Option<f64>,
        /// Override Eve's y position, m.
        #[arg(long, allow_hyphen_values = true)]
        y: Option<f64>,
    },
    /// One scan per value of the `[sweep]` parameter.
    Sweep(Common),
    /// Check a config and print it with every default filled in.
    Validate(Common),
}

#[derive(Args)]
struct Common {
    /// TOML config (JSON if the name ends in .json). Defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output file; stdout when omitted. For `sweep`, the name template.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
    /// Seed for the Monte Carlo outage check.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads for scans.
    #[arg(long, value_parser = clap::value_parser!(u16).range(1..))]
    threads: Option<u16>,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Det,
    Prob,
}

enum Failure {
    Config(String),
    Runtime(String),
    Io(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let msg = e.to_string();
        match e {
            Error::Config(_) | Error::AbsorptionTable(_) => Failure::Config(msg),
            Error::Io { .. } | Error::Csv { .. } => Failure::Io(msg),
            _ => Failure::Runtime(msg),
        }
    }
}

impl From<thzsec::ConfigError> for Failure {
    fn from(e: thzsec::ConfigError) -> Self {
        match e {
            thzsec::ConfigError::Read { .. } => Failure::Io(e.to_string()),
            _ => Failure::Config(e.to_string()),
        }
    }
}

fn io_failure(path: Option<&Path>, e: std::io::Error) -> Failure {
    match path {
        Some(p) => Failure::Io(format!("{}: {e}", p.display())),
        None => Failure::Io(format!("stdout: {e}")),
    }
}

impl Common {
    fn load(&self) -> Result<Config, Failure> {
        let mut cfg = match &self.config {
            Some(p) => Config::from_path(p)?,
            None => Config::default(),
        };
        if let Some(m) = self.mode {
            cfg.scan.mode = match m {
                ModeArg::Det => ScanMode::Deterministic,
                ModeArg::Prob => ScanMode::Probabilistic,
            };
        }
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        Ok(cfg)
    }

    fn format(&self) -> Format {
        match self.format {
            Some(FormatArg::Json) => Format::Json,
            Some(FormatArg::Csv) => Format::Csv,
            None if self
                .out
                .as_deref()
                .and_then(Path::extension)
                .is_some_and(|e| e.eq_ignore_ascii_case("json")) =>
            {
                Format::Json
            }
            None => Format::Csv,
        }
    }

    fn spec(&self, cfg: &Config) -> ScanSpec {
        ScanSpec {
            threads: self.threads.map(usize::from),
            ..ScanSpec::from_config(cfg)
        }
    }
}

fn write_output(
    out: Option<&Path>,
    body: impl FnOnce(&mut dyn Write) -> std::io::Result<()>,
) -> Result<(), Failure> {
    match out {
        Some(p) => {
            let file = std::fs::File::create(p).map_err(|e| io_failure(Some(p), e))?;
            let mut w = std::io::BufWriter::new(file);
            body(&mut w)
                .and_then(|_| w.flush())
                .map_err(|e| io_failure(Some(p), e))
        }
        None => {
            let stdout = std::io::stdout();
            let mut w = stdout.lock();
            body(&mut w)
                .and_then(|_| w.flush())
                .map_err(|e| io_failure(None, e))
        }
    }
}

fn report_scan(label: &str, r: &ScanResult) {
    let region = extract_insecure_region(r);
    eprintln!("{label}{}", emit::summary_line(r));
    eprintln!(
        "{label}insecure area {} m^2 over {} rows",
        region.area_m2,
        region.rows.len()
    );
    if let Some(reason) = &r.metadata.nan_reason {
        eprintln!("{label}{} cells not evaluated: {reason}", r.nan_cells);
    }
}

fn cmd_scan(c: &Common) -> Result<(), Failure> {
    let cfg = c.load()?;
    let result = run_scan(&cfg, &c.spec(&cfg))?;
    let format = c.format();
    write_output(c.out.as_deref(), |w| emit::write(&result, format, w))?;
    report_scan("", &result);
    Ok(())
}

fn cmd_sweep(c: &Common) -> Result<(), Failure> {
    let cfg = c.load()?;
    let Some(sweep) = cfg.sweep.clone() else {
        return Err(Failure::Config("config has no [sweep] section".into()));
    };
    let base = c.out.clone().unwrap_or_else(|| PathBuf::from("sweep.csv"));
    let format = c.format();
    for (value, result) in run_sweep(&cfg, sweep.param, &sweep.values, &c.spec(&cfg))? {
        let path = emit::sweep_path(&base, sweep.param.name(), value, format);
        emit::emit(&result, format, &path)?;
        report_scan(&format!("{}: ", path.display()), &result);
    }
    Ok(())
}

fn cmd_point(c: &Common, x: Option<f64>, y: Option<f64>) -> Result<(), Failure> {
    let mut cfg = c.load()?;
    cfg.eve.x_m = x.unwrap_or(cfg.eve.x_m);
    cfg.eve.y_m = y.unwrap_or(cfg.eve.y_m);
    cfg.validate()?;
    let link = ResolvedLink::from_config(&cfg)?;
    let report = link.point(cfg.eve.x_m, cfg.eve.y_m)?;
    let o = &report.outage;
    let mc = o
        .g_threshold
        .map(|g| monte_carlo_outage(&o.fading, g, MONTE_CARLO_SAMPLES, cfg.seed));

    match c.format() {
        Format::Json => {
            let mut doc = serde_json::to_value(report).expect("report serialises");
            doc["monte_carlo"] = serde_json::json!({
                "seed": cfg.seed,
                "samples": MONTE_CARLO_SAMPLES,
                "p_o": mc,
            });
            write_output(c.out.as_deref(), |w| {
                serde_json::to_writer_pretty(&mut *w, &doc)?;
                writeln!(w)
            })
        }
        Format::Csv => write_output(c.out.as_deref(), |w| {
            let e = &report.extinction;
            let g = &report.gains;
            let r = &report.rates;
            let s = &report.secrecy;
            writeln!(w, "eve_xy_m          {:?}", report.eve_xy)?;
            writeln!(w, "alpha_g_np_per_m  {:e}", e.alpha_g)?;
            writeln!(w, "alpha_t_np_per_m  {:e}", e.alpha_t)?;
            writeln!(w, "a_t_db            {}", e.a_t_db)?;
            writeln!(w, "sigma_r2_plane    {}", e.sigma_r2_plane)?;
            writeln!(w, "beta_r2_spherical {}", e.beta_r2_sph)?;
            writeln!(w, "g_los             {:e}", g.g_los)?;
            writeln!(w, "g_nlos            {:e}", g.g_nlos)?;
            writeln!(w, "steering_deg      {}", g.steering_rad.to_degrees())?;
            writeln!(w, "segment_m         {:?}", g.segment)?;
            writeln!(w, "lambda_l          {}", r.lambda_l)?;
            writeln!(w, "lambda_n          {}", r.lambda_n)?;
            writeln!(w, "lambda_b          {}", r.lambda_b)?;
            writeln!(w, "lambda_e          {}", r.lambda_e)?;
            writeln!(w, "i_bob_bits        {}", s.i_bob)?;
            writeln!(w, "i_eve_bits        {}", s.i_eve)?;
            writeln!(w, "c_s_bps           {:e}", s.c_s_bps)?;
            writeln!(w, "insecure          {}", s.insecure)?;
            writeln!(w, "target_rate_bps   {:e}", o.target_rate_bps)?;
            writeln!(w, "g_threshold       {:?}", o.g_threshold)?;
            writeln!(w, "p_outage          {:e}", o.p_o)?;
            match mc {
                Some(p) => writeln!(
                    w,
                    "p_outage_mc       {p:e} (seed {}, {MONTE_CARLO_SAMPLES} draws)",
                    cfg.seed
                ),
                None => writeln!(w, "p_outage_mc       n/a"),
            }
        }),
    }
}

fn cmd_validate(c: &Common) -> Result<(), Failure> {
    let cfg = c.load()?;
    cfg.absorption_backend()?;
    let text = cfg.to_toml_string();
    write_output(c.out.as_deref(), |w| w.write_all(text.as_bytes()))?;
    match ResolvedLink::from_config(&cfg) {
        Ok(_) => eprintln!("config ok"),
        Err(e) => eprintln!("config ok, but the link cannot be evaluated: {e}"),
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_CONFIG)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let outcome = match &cli.command {
        Command::Scan(c) => cmd_scan(c),
        Command::Sweep(c) => cmd_sweep(c),
        Command::Point { common, x, y } => cmd_point(common, *x, *y),
        Command::Validate(c) => cmd_validate(c),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(m)) => {
            eprintln!("config error: {m}");
            ExitCode::from(EXIT_CONFIG)
        }
        Err(Failure::Runtime(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(EXIT_RUNTIME)
        }
        Err(Failure::Io(m)) => {
            eprintln!("i/o error: {m}");
            ExitCode::from(EXIT_IO)
        }
    }
}
