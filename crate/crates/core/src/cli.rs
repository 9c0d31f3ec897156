//! Command-line surface: config ingestion, simulation runs, pump sweeps, and
//! correspondence reports.
//!
//! Data tables are plain tab-separated text with a commented header naming
//! the columns and the manifest hash; a `manifest.toml` sidecar records the
//! command, config fingerprint, grid, and wall time. Identical config and
//! flags produce byte-identical tables (timestamps live only in the
//! manifest).
//!
//! Exit codes: 0 success, 1 validation failure, 2 numerical-check failure,
//! 3 I/O failure.

use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::{Parser, Subcommand, ValueEnum};

use crate::config::{load_config, ConfigError};
use crate::field::{CorrelatorKind, Pathway};
use crate::manifest::{config_hash, GridSpec, RunManifest};
use crate::model::{validate_system, ValidatedBundle};
use crate::signal::{
    brute_force_signal, difference_spectrum, signal_finite_te_rephasing, signal_short_te,
    ComponentKind, OracleSettings, SignalError, Spectrum1D,
};
use crate::twod::correspondence_check;

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 1;
pub const EXIT_NUMERICAL: i32 = 2;
pub const EXIT_IO: i32 = 3;

/// Environment variable overriding the rayon worker count.
pub const THREADS_ENV: &str = "TWINSPEC_THREADS";

#[derive(Debug, Parser)]
#[command(
    name = "twinspec",
    version,
    about = "Frequency-dispersed transmission spectroscopy with entangled photon pairs"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    /// Delta-correlated (short entanglement time) closed forms.
    ShortTe,
    /// Finite-Tₑ rephasing SE/ESA closed forms.
    FiniteTe,
    /// Direct quadrature of the pathway integrals (slow; reference).
    Oracle,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate transmission spectra at one or more idler delays.
    Simulate {
        /// Path to a TOML configuration file.
        config: PathBuf,
        /// Comma-separated idler delays Δt.
        #[arg(long, value_delimiter = ',', required = true)]
        dt: Vec<f64>,
        #[arg(long, value_enum, default_value_t = ModeArg::ShortTe)]
        mode: ModeArg,
        /// Override the entanglement time from the config.
        #[arg(long)]
        te: Option<f64>,
        /// Detection grid as `min:max:points` (default spans every line with
        /// margin and ≥ 8 points per linewidth).
        #[arg(long)]
        grid: Option<String>,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
    },
    /// Sweep the PDC pump frequency and tabulate ΔS(ω; Δt) per pump point.
    SweepPump {
        config: PathBuf,
        /// Pump range as `start:stop:step`.
        #[arg(long)]
        wp: String,
        /// Idler delay Δt.
        #[arg(long)]
        dt: f64,
        #[arg(long)]
        grid: Option<String>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Verify the anti-diagonal correspondence with the absorptive 2D
    /// spectrum and write a machine-readable report.
    CheckCorrespondence {
        config: PathBuf,
        /// Comma-separated idler delays Δt.
        #[arg(long, value_delimiter = ',', required = true)]
        dt: Vec<f64>,
        /// Pass/fail threshold on the max absolute deviation.
        #[arg(long, default_value_t = 1e-8)]
        tolerance: f64,
        #[arg(long)]
        grid: Option<String>,
        /// Report file path.
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Config(ConfigError),
    Numerical(String),
    Io(String),
    CheckFailed,
}

impl CliError {
    fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_VALIDATION,
            CliError::Config(ConfigError::Io { .. }) => EXIT_IO,
            CliError::Config(_) => EXIT_VALIDATION,
            CliError::Numerical(_) => EXIT_NUMERICAL,
            CliError::Io(_) => EXIT_IO,
            CliError::CheckFailed => EXIT_NUMERICAL,
        }
    }

    fn message(&self) -> String {
        match self {
            CliError::Usage(m) => m.clone(),
            CliError::Config(e) => e.to_string(),
            CliError::Numerical(m) => m.clone(),
            CliError::Io(m) => m.clone(),
            CliError::CheckFailed => "correspondence check failed".into(),
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e)
    }
}

impl From<SignalError> for CliError {
    fn from(e: SignalError) -> Self {
        match e {
            SignalError::TruncationTooShort { .. } | SignalError::Quadrature(_) => {
                CliError::Numerical(e.to_string())
            }
            other => CliError::Usage(other.to_string()),
        }
    }
}

fn io_err(context: &str, e: std::io::Error) -> CliError {
    CliError::Io(format!("{context}: {e}"))
}

/// Entry point used by `main`.
pub fn run() -> i32 {
    run_from(std::env::args())
}

/// Parse and execute; returns the process exit code.
pub fn run_from<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<String>,
{
    let argv: Vec<String> = args.into_iter().map(Into::into).collect();
    init_threads();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) => {
            // clap handles --help/--version through this path with code 0
            let code = if e.use_stderr() { EXIT_VALIDATION } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli, argv.join(" ")) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {}", e.message());
            e.exit_code()
        }
    }
}

fn init_threads() {
    if let Ok(value) = std::env::var(THREADS_ENV) {
        if let Ok(n) = value.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build_global();
        }
    }
}

fn execute(cli: Cli, command_line: String) -> Result<(), CliError> {
    match cli.command {
        Command::Simulate {
            config,
            dt,
            mode,
            te,
            grid,
            out,
        } => simulate(&config, &dt, mode, te, grid.as_deref(), &out, &command_line),
        Command::SweepPump {
            config,
            wp,
            dt,
            grid,
            out,
        } => sweep_pump(&config, &wp, dt, grid.as_deref(), &out, &command_line),
        Command::CheckCorrespondence {
            config,
            dt,
            tolerance,
            grid,
            out,
        } => check_cmd(&config, &dt, tolerance, grid.as_deref(), &out, &command_line),
    }
}

/// Default detection grid: spans every single- and double-manifold transition
/// with a 10-linewidth margin, at ≥ 8 points per narrowest linewidth.
pub fn default_grid(bundle: &ValidatedBundle) -> (Vec<f64>, GridSpec) {
    let system = bundle.system();
    let model = bundle.model();
    let mut peaks: Vec<f64> = system.single_energies.clone();
    for (d, &ed) in system.double_energies.iter().enumerate() {
        for &ea in &system.single_energies {
            peaks.push(ed - ea);
        }
        let _ = d;
    }
    let mut widths: Vec<f64> = model.dephasing_ge.clone();
    widths.extend(model.dephasing_ef.iter().flatten().copied());
    let gamma_max = widths.iter().cloned().fold(f64::MIN_POSITIVE, f64::max);
    let gamma_min = widths.iter().cloned().fold(f64::INFINITY, f64::min);
    let lo = peaks.iter().cloned().fold(f64::INFINITY, f64::min) - 10.0 * gamma_max;
    let hi = peaks.iter().cloned().fold(f64::NEG_INFINITY, f64::max) + 10.0 * gamma_max;
    let points = (((hi - lo) / (gamma_min / 8.0)).ceil() as usize + 1).clamp(65, 4097);
    (linspace(lo, hi, points), GridSpec { min: lo, max: hi, points })
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let step = (hi - lo) / (n - 1) as f64;
    (0..n).map(|i| lo + step * i as f64).collect()
}

fn parse_grid(spec: &str) -> Result<(Vec<f64>, GridSpec), CliError> {
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() != 3 {
        return Err(CliError::Usage(format!(
            "grid must be min:max:points, got `{spec}`"
        )));
    }
    let min: f64 = parts[0]
        .parse()
        .map_err(|_| CliError::Usage(format!("bad grid min `{}`", parts[0])))?;
    let max: f64 = parts[1]
        .parse()
        .map_err(|_| CliError::Usage(format!("bad grid max `{}`", parts[1])))?;
    let points: usize = parts[2]
        .parse()
        .map_err(|_| CliError::Usage(format!("bad grid point count `{}`", parts[2])))?;
    if max <= min || points < 2 {
        return Err(CliError::Usage(format!(
            "grid must satisfy min < max and points ≥ 2, got `{spec}`"
        )));
    }
    Ok((linspace(min, max, points), GridSpec { min, max, points }))
}

fn resolve_grid(
    bundle: &ValidatedBundle,
    spec: Option<&str>,
) -> Result<(Vec<f64>, GridSpec), CliError> {
    match spec {
        Some(s) => parse_grid(s),
        None => Ok(default_grid(bundle)),
    }
}

fn check_delays(delays: &[f64]) -> Result<(), CliError> {
    if delays.is_empty() {
        return Err(CliError::Usage("at least one --dt value is required".into()));
    }
    if let Some(&bad) = delays.iter().find(|&&d| d < 0.0 || !d.is_finite()) {
        return Err(CliError::Usage(format!("delays must be ≥ 0, got {bad}")));
    }
    Ok(())
}

fn format_value(v: f64) -> String {
    format!("{v:.16e}")
}

/// Filename-safe token for a delay value.
fn delay_token(v: f64) -> String {
    format!("{v}").replace('.', "p").replace('-', "m")
}

fn write_spectrum_table(
    path: &Path,
    spectrum: &Spectrum1D,
    hash: &str,
) -> Result<(), CliError> {
    let mut text = String::new();
    text.push_str("# twinspec spectrum table\n");
    text.push_str(&format!("# manifest_hash: {hash}\n"));
    text.push_str(&format!("# mode: {}\n", spectrum.meta().mode.label()));
    text.push_str(&format!(
        "# pump_frequency: {}\n",
        format_value(spectrum.meta().pump_frequency)
    ));
    text.push_str(&format!("# delay: {}\n", format_value(spectrum.meta().delay)));
    text.push_str(&format!(
        "# entanglement_time: {}\n",
        format_value(spectrum.meta().entanglement_time)
    ));
    text.push_str(&format!(
        "# sc_available: {}\n",
        spectrum.meta().sc_available
    ));
    text.push_str("# columns: omega\ttotal\tGSB\tSE\tESA\tSEcoh\tESAcoh\tSc\n");
    for (i, &omega) in spectrum.omega().iter().enumerate() {
        let mut row = vec![format_value(omega), format_value(spectrum.values()[i])];
        for kind in ComponentKind::ALL {
            row.push(format_value(spectrum.component(kind)[i]));
        }
        text.push_str(&row.join("\t"));
        text.push('\n');
    }
    std::fs::write(path, text).map_err(|e| io_err(&format!("writing {}", path.display()), e))
}

fn write_manifest(
    out_dir: &Path,
    command: &str,
    config_path: &Path,
    hash: &str,
    grid: &GridSpec,
    outputs: Vec<String>,
    started: Instant,
) -> Result<(), CliError> {
    let manifest = RunManifest {
        tool: "twinspec".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        command: command.to_string(),
        config_path: config_path.display().to_string(),
        config_hash: hash.to_string(),
        grid: grid.clone(),
        outputs,
        wall_time_ms: started.elapsed().as_millis() as u64,
        created_unix_ms: SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_millis() as u64)
            .unwrap_or(0),
    };
    let path = out_dir.join("manifest.toml");
    std::fs::write(&path, manifest.to_toml())
        .map_err(|e| io_err(&format!("writing {}", path.display()), e))
}

fn simulate(
    config_path: &Path,
    delays: &[f64],
    mode: ModeArg,
    te_override: Option<f64>,
    grid_spec: Option<&str>,
    out_dir: &Path,
    command_line: &str,
) -> Result<(), CliError> {
    let started = Instant::now();
    check_delays(delays)?;
    let (mut bundle, raw) = load_config(config_path)?;
    if let Some(te) = te_override {
        bundle = bundle
            .with_entanglement_time(te)
            .map_err(|e| CliError::Config(e.into()))?;
    }
    // Mode/feature conflicts are reported before any compute starts.
    let te = bundle.field().entanglement_time;
    match mode {
        ModeArg::FiniteTe => {
            if te <= 0.0 {
                return Err(CliError::Usage(
                    "finite-te mode requires a positive entanglement time \
                     (set field.entanglement_time or pass --te)"
                        .into(),
                ));
            }
            if bundle.model().has_coherence_transfer() {
                return Err(CliError::Usage(
                    "finite-te closed forms assume diagonal coherence evolution; \
                     coherence transfer is only served by --mode oracle"
                        .into(),
                ));
            }
        }
        ModeArg::Oracle => {
            if te <= 0.0 {
                return Err(CliError::Usage(
                    "oracle mode samples finite-Tₑ correlators; set a positive \
                     entanglement time (field.entanglement_time or --te)"
                        .into(),
                ));
            }
        }
        ModeArg::ShortTe => {}
    }
    let (grid, grid_info) = resolve_grid(&bundle, grid_spec)?;
    std::fs::create_dir_all(out_dir)
        .map_err(|e| io_err(&format!("creating {}", out_dir.display()), e))?;
    let hash = config_hash(&raw);
    let mut outputs = Vec::new();
    for (idx, &delay) in delays.iter().enumerate() {
        let spectrum = match mode {
            ModeArg::ShortTe => signal_short_te(&grid, delay, &bundle)?,
            ModeArg::FiniteTe => {
                let se = signal_finite_te_rephasing(&grid, delay, &bundle, Pathway::Se)?;
                let esa = signal_finite_te_rephasing(&grid, delay, &bundle, Pathway::Esa)?;
                se.sum_with(&esa)?
            }
            ModeArg::Oracle => brute_force_signal(
                &grid,
                delay,
                &bundle,
                &CorrelatorKind::ALL,
                &OracleSettings::default(),
            )?,
        };
        if !spectrum.meta().sc_available && mode == ModeArg::ShortTe {
            eprintln!(
                "warning: S_c omitted for Δt = {delay} (waiting-time kernel diverges; \
                 no net decay out of the single manifold)"
            );
        }
        let name = format!("spectrum_{idx:03}_dt{}.tsv", delay_token(delay));
        write_spectrum_table(&out_dir.join(&name), &spectrum, &hash)?;
        println!("wrote {}", out_dir.join(&name).display());
        outputs.push(name);
    }
    write_manifest(out_dir, command_line, config_path, &hash, &grid_info, outputs, started)
}

fn parse_sweep(spec: &str) -> Result<Vec<f64>, CliError> {
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() != 3 {
        return Err(CliError::Usage(format!(
            "--wp must be start:stop:step, got `{spec}`"
        )));
    }
    let start: f64 = parts[0]
        .parse()
        .map_err(|_| CliError::Usage(format!("bad sweep start `{}`", parts[0])))?;
    let stop: f64 = parts[1]
        .parse()
        .map_err(|_| CliError::Usage(format!("bad sweep stop `{}`", parts[1])))?;
    let step: f64 = parts[2]
        .parse()
        .map_err(|_| CliError::Usage(format!("bad sweep step `{}`", parts[2])))?;
    if step <= 0.0 {
        return Err(CliError::Usage(format!("sweep step must be > 0, got {step}")));
    }
    let mut values = Vec::new();
    let mut k = 0usize;
    loop {
        let v = start + step * k as f64;
        if v > stop + 1e-12 * step.abs().max(1.0) {
            break;
        }
        values.push(v);
        k += 1;
    }
    if values.is_empty() {
        return Err(CliError::Usage(format!(
            "sweep range `{spec}` contains no pump values"
        )));
    }
    Ok(values)
}

fn sweep_pump(
    config_path: &Path,
    wp_spec: &str,
    delay: f64,
    grid_spec: Option<&str>,
    out_dir: &Path,
    command_line: &str,
) -> Result<(), CliError> {
    let started = Instant::now();
    check_delays(&[delay])?;
    let pumps = parse_sweep(wp_spec)?;
    let (bundle, raw) = load_config(config_path)?;
    let (grid, grid_info) = resolve_grid(&bundle, grid_spec)?;
    std::fs::create_dir_all(out_dir)
        .map_err(|e| io_err(&format!("creating {}", out_dir.display()), e))?;
    let hash = config_hash(&raw);

    let mut text = String::new();
    text.push_str("# twinspec pump sweep (ΔS per pump frequency)\n");
    text.push_str(&format!("# manifest_hash: {hash}\n"));
    text.push_str(&format!("# delay: {}\n", format_value(delay)));
    text.push_str("# columns: pump_frequency\tomega\ttotal\tGSB\tSE\tESA\tSEcoh\tESAcoh\tSc\n");
    for &pump in &pumps {
        // The short-Tₑ signal depends on the beam centers only through their
        // sum, so recentering both beams keeps the field valid.
        let (system, mut field, model) = bundle.clone().into_parts();
        field.pump_frequency = pump;
        field.signal_center = 0.5 * pump;
        field.idler_center = 0.5 * pump;
        let swept = validate_system(system, field, model)
            .map_err(|e| CliError::Config(e.into()))?;
        let ds = difference_spectrum(&grid, delay, &swept)?;
        for (i, &omega) in ds.omega().iter().enumerate() {
            let mut row = vec![
                format_value(pump),
                format_value(omega),
                format_value(ds.values()[i]),
            ];
            for kind in ComponentKind::ALL {
                row.push(format_value(ds.component(kind)[i]));
            }
            text.push_str(&row.join("\t"));
            text.push('\n');
        }
    }
    let name = "sweep.tsv";
    std::fs::write(out_dir.join(name), text)
        .map_err(|e| io_err(&format!("writing {}", out_dir.join(name).display()), e))?;
    println!("wrote {}", out_dir.join(name).display());
    write_manifest(
        out_dir,
        command_line,
        config_path,
        &hash,
        &grid_info,
        vec![name.to_string()],
        started,
    )
}

#[derive(serde::Serialize)]
struct CorrespondenceReportFile {
    tool: String,
    version: String,
    config_hash: String,
    tolerance: f64,
    passed: bool,
    delays: Vec<CorrespondenceRow>,
}

#[derive(serde::Serialize)]
struct CorrespondenceRow {
    delay: f64,
    max_abs_deviation: f64,
    omega_at_max: f64,
}

fn check_cmd(
    config_path: &Path,
    delays: &[f64],
    tolerance: f64,
    grid_spec: Option<&str>,
    out_path: &Path,
    _command_line: &str,
) -> Result<(), CliError> {
    check_delays(delays)?;
    let (bundle, raw) = load_config(config_path)?;
    let (grid, _) = resolve_grid(&bundle, grid_spec)?;
    let report = correspondence_check(&bundle, delays, &grid, tolerance, None)
        .map_err(|e| CliError::Numerical(e.to_string()))?;
    let file = CorrespondenceReportFile {
        tool: "twinspec".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        config_hash: config_hash(&raw),
        tolerance,
        passed: report.passed,
        delays: report
            .per_delay
            .iter()
            .map(|d| CorrespondenceRow {
                delay: d.delay,
                max_abs_deviation: d.max_abs_deviation,
                omega_at_max: d.omega_at_max,
            })
            .collect(),
    };
    if let Some(parent) = out_path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)
                .map_err(|e| io_err(&format!("creating {}", parent.display()), e))?;
        }
    }
    let mut handle = std::fs::File::create(out_path)
        .map_err(|e| io_err(&format!("writing {}", out_path.display()), e))?;
    handle
        .write_all(toml::to_string_pretty(&file).expect("report serializes").as_bytes())
        .map_err(|e| io_err(&format!("writing {}", out_path.display()), e))?;
    for row in &report.per_delay {
        println!(
            "dt={} max_deviation={:.3e} at omega={:.6} [{}]",
            row.delay,
            row.max_abs_deviation,
            row.omega_at_max,
            if row.max_abs_deviation < tolerance {
                "PASS"
            } else {
                "FAIL"
            }
        );
    }
    if report.passed {
        Ok(())
    } else {
        Err(CliError::CheckFailed)
    }
}
