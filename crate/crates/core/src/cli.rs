//! Command-line front end: flag and config-file parsing, and the run modes.

use std::f64::consts::PI;
use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::error::ErrorKind;
use clap::{Parser, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::analysis::{
    chsh, chsh_from_correlations, setting_position, simulate_tables, sweep_log, tabulate, window_sweep,
    ChshQuadruple, SweepOptions,
};
use crate::coincidence::{find_coincidences, MatchPolicy};
use crate::error::{Error, Result};
use crate::io::results::{
    write_chsh, write_correlations, write_curves, write_oracle_chsh, write_sweep, ChshRow, CurveRow,
    OracleChshRow,
};
use crate::io::{manifest::unix_now, read_tags, tags::station_path, write_tags, RunManifest};
use crate::model::{ModelParams, Setting};
use crate::oracle::{
    chsh_exact, coincidence_probability, correlation_exact, mixed_correlation, singlet_correlation,
    QuadratureSpec,
};
use crate::sim::{run_experiment, run_experiment_with_workers, with_workers, Emission, ExperimentConfig, Station};

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "EPRB_OUT_DIR";
const DEFAULT_OUT_DIR: &str = "eprb-out";

pub const DEFAULT_D: f64 = 4.0;
pub const DEFAULT_T0: f64 = 1000.0;
pub const DEFAULT_WINDOW: f64 = 10.0;
pub const DEFAULT_PAIRS: u64 = 1_000_000;
pub const DEFAULT_SEED: u64 = 42;
pub const DEFAULT_CURVE_POINTS: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Simulate, match at one window, tabulate correlations and CHSH.
    #[default]
    Mc,
    /// Exact model curves next to the quantum references.
    Oracle,
    /// CHSH versus coincidence window.
    Sweep,
    /// Re-match stored time tags over a window grid.
    Reanalyze,
}

impl Mode {
    fn name(self) -> &'static str {
        match self {
            Mode::Mc => "mc",
            Mode::Oracle => "oracle",
            Mode::Sweep => "sweep",
            Mode::Reanalyze => "reanalyze",
        }
    }
}

/// Simulator and exact oracle for Bell tests with polarization-dependent detection delays.
///
/// Times are in nanoseconds. Angles need a unit suffix: `22.5deg` or `0.3927rad`.
#[derive(Debug, Parser)]
#[command(name = "eprb", version)]
pub struct Args {
    /// TOML file with any of the options below (flags override it).
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub mode: Option<Mode>,
    /// Delay exponent d.
    #[arg(long, allow_negative_numbers = true)]
    pub d: Option<f64>,
    /// Maximum detection delay T0.
    #[arg(long, allow_negative_numbers = true)]
    pub t0: Option<f64>,
    /// Coincidence window W.
    #[arg(long, allow_negative_numbers = true)]
    pub window: Option<f64>,
    /// Window grid `min:max:logN` or `min:max:linN`.
    #[arg(long, value_name = "GRID")]
    pub windows: Option<String>,
    /// Number of emitted pairs.
    #[arg(long)]
    pub pairs: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Station 1 settings, comma separated.
    #[arg(long, value_name = "ANGLES", allow_hyphen_values = true)]
    pub angles1: Option<String>,
    /// Station 2 settings, comma separated.
    #[arg(long, value_name = "ANGLES", allow_hyphen_values = true)]
    pub angles2: Option<String>,
    /// CHSH angles `a,a',b,b'`.
    #[arg(long, value_name = "ANGLES", allow_hyphen_values = true)]
    pub quadruple: Option<String>,
    /// `regular:<interval>` or `poisson:<rate>`.
    #[arg(long)]
    pub emission: Option<String>,
    #[arg(long, value_parser = ["paired", "stream"])]
    pub matcher: Option<String>,
    /// Write time tags to `<prefix>.station{1,2}.csv`.
    #[arg(long, value_name = "PREFIX")]
    pub tags_out: Option<PathBuf>,
    /// Read time tags from `<prefix>.station{1,2}.csv` (reanalyze mode).
    #[arg(long, value_name = "PREFIX")]
    pub tags_in: Option<PathBuf>,
    /// Output directory [default: $EPRB_OUT_DIR or ./eprb-out].
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads for the simulation.
    #[arg(long)]
    pub workers: Option<usize>,
    /// Number of delta points in oracle curves over [0, pi).
    #[arg(long)]
    pub curve_points: Option<usize>,
    /// Fresh simulation per window in sweeps.
    #[arg(long)]
    pub independent: bool,
}

/// Config-file counterpart of [`Args`]; every key optional.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct FileConfig {
    pub mode: Option<Mode>,
    pub d: Option<f64>,
    pub t0: Option<f64>,
    pub window: Option<f64>,
    pub windows: Option<String>,
    pub pairs: Option<u64>,
    pub seed: Option<u64>,
    pub angles1: Option<String>,
    pub angles2: Option<String>,
    pub quadruple: Option<String>,
    pub emission: Option<String>,
    pub matcher: Option<String>,
    pub tags_out: Option<PathBuf>,
    pub tags_in: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub workers: Option<usize>,
    pub curve_points: Option<usize>,
    pub independent: Option<bool>,
}

impl FileConfig {
    pub fn parse(text: &str, source: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| {
            let line = e
                .span()
                .map_or(0, |span| text[..span.start.min(text.len())].matches('\n').count() as u64 + 1);
            Error::Parse {
                path: source.to_owned(),
                line,
                reason: e.message().to_owned(),
            }
        })
    }
}

/// A fully validated run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRequest {
    pub mode: Mode,
    pub config: ExperimentConfig,
    pub windows: Vec<f64>,
    pub quadruple: ChshQuadruple,
    pub matcher: MatchPolicy,
    pub tags_out: Option<PathBuf>,
    pub tags_in: Option<PathBuf>,
    pub out_dir: PathBuf,
    pub workers: Option<usize>,
    pub curve_points: usize,
    pub independent: bool,
}

/// Result of argument parsing: a run, or text to print (help, version).
#[derive(Debug)]
pub enum Parsed {
    Run(Box<RunRequest>),
    Print(String),
}

/// Parses `angle` with a mandatory `deg` or `rad` suffix into radians.
pub fn parse_angle(text: &str) -> Result<f64> {
    let t = text.trim();
    let (number, to_rad): (&str, fn(f64) -> f64) = if let Some(n) = t.strip_suffix("deg") {
        (n, f64::to_radians)
    } else if let Some(n) = t.strip_suffix("rad") {
        (n, |x| x)
    } else {
        return Err(Error::invalid("angle", format!("{t:?} needs a `deg` or `rad` suffix")));
    };
    let value = number
        .trim()
        .parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| Error::invalid("angle", format!("{t:?} is not a finite number")))?;
    Ok(to_rad(value))
}

pub fn parse_angles(text: &str) -> Result<Vec<Setting>> {
    let list: Vec<Setting> = text
        .split(',')
        .map(|a| parse_angle(a).map(Setting))
        .collect::<Result<_>>()?;
    if list.is_empty() {
        return Err(Error::invalid("angles", "empty list"));
    }
    Ok(list)
}

pub fn parse_quadruple(text: &str) -> Result<ChshQuadruple> {
    let angles = parse_angles(text)?;
    match angles[..] {
        [a, a_prime, b, b_prime] => Ok(ChshQuadruple {
            a,
            a_prime,
            b,
            b_prime,
        }),
        _ => Err(Error::invalid(
            "quadruple",
            format!("expected 4 angles, got {}", angles.len()),
        )),
    }
}

/// Parses `min:max:logN` or `min:max:linN` into a strictly increasing grid.
pub fn parse_window_grid(text: &str) -> Result<Vec<f64>> {
    let bad = |reason: String| Error::invalid("windows", reason);
    let parts: Vec<&str> = text.trim().split(':').collect();
    let [min, max, spec] = parts[..] else {
        return Err(bad(format!("{text:?} is not `min:max:logN` or `min:max:linN`")));
    };
    let number = |s: &str| {
        s.trim()
            .parse::<f64>()
            .ok()
            .filter(|v| v.is_finite() && *v >= 0.0)
            .ok_or_else(|| bad(format!("{s:?} is not a finite window >= 0")))
    };
    let (min, max) = (number(min)?, number(max)?);
    let (log, count) = if let Some(n) = spec.strip_prefix("log") {
        (true, n)
    } else if let Some(n) = spec.strip_prefix("lin") {
        (false, n)
    } else {
        return Err(bad(format!("spacing {spec:?} must be logN or linN")));
    };
    let count: usize = count
        .parse()
        .ok()
        .filter(|&n| (1..=100_000).contains(&n))
        .ok_or_else(|| bad(format!("point count {count:?} must be an integer in 1..=100000")))?;
    if count == 1 {
        return if min == max {
            Ok(vec![min])
        } else {
            Err(bad("a single point needs min == max".into()))
        };
    }
    if min >= max {
        return Err(bad(format!("min {min} must be below max {max}")));
    }
    if log && min <= 0.0 {
        return Err(bad("log spacing needs min > 0".into()));
    }
    let last = (count - 1) as f64;
    let grid: Vec<f64> = (0..count)
        .map(|k| {
            let f = k as f64 / last;
            match (k, log) {
                (0, _) => min,
                (k, _) if k == count - 1 => max,
                (_, true) => min * (max / min).powf(f),
                (_, false) => min + (max - min) * f,
            }
        })
        .collect();
    if grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(bad("grid points are not strictly increasing".into()));
    }
    Ok(grid)
}

pub fn parse_emission(text: &str) -> Result<Emission> {
    let bad = |reason: String| Error::invalid("emission", reason);
    let (kind, value) = text
        .trim()
        .split_once(':')
        .ok_or_else(|| bad(format!("{text:?} is not `regular:<interval>` or `poisson:<rate>`")))?;
    let value: f64 = value
        .trim()
        .parse()
        .ok()
        .filter(|v: &f64| v.is_finite() && *v > 0.0)
        .ok_or_else(|| bad(format!("{value:?} must be a finite number > 0")))?;
    match kind {
        "regular" => Ok(Emission::Regular { interval: value }),
        "poisson" => Ok(Emission::Poisson { rate: value }),
        other => Err(bad(format!("unknown emission process {other:?}"))),
    }
}

fn clap_error(e: clap::Error) -> Error {
    let text = e.to_string();
    let first = text.lines().next().unwrap_or("").trim_start_matches("error: ").to_owned();
    match e.kind() {
        ErrorKind::UnknownArgument => {
            let flag = e
                .get(clap::error::ContextKind::InvalidArg)
                .map(|v| v.to_string())
                .unwrap_or(first);
            Error::UnknownFlag(flag)
        }
        ErrorKind::MissingRequiredArgument => Error::MissingField(first),
        ErrorKind::InvalidValue | ErrorKind::ValueValidation => {
            let flag = e
                .get(clap::error::ContextKind::InvalidArg)
                .map(|v| v.to_string())
                .unwrap_or_else(|| "value".into());
            Error::InvalidParameter {
                name: "flag",
                reason: format!("{flag}: {first}"),
            }
        }
        _ => Error::Usage(first),
    }
}

/// Parses command-line arguments (including the program name) into a run.
pub fn parse_config<I, T>(args: I) -> Result<Parsed>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args = match Args::try_parse_from(args) {
        Ok(args) => args,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            return Ok(Parsed::Print(e.to_string()));
        }
        Err(e) => return Err(clap_error(e)),
    };
    let file = match &args.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            FileConfig::parse(&text, &path.display().to_string())?
        }
        None => FileConfig::default(),
    };
    let out_env = std::env::var_os(OUT_DIR_ENV).map(PathBuf::from);
    resolve(args, file, out_env).map(|r| Parsed::Run(Box::new(r)))
}

/// Merges flags over the config file over defaults, and validates the result.
pub fn resolve(args: Args, file: FileConfig, out_env: Option<PathBuf>) -> Result<RunRequest> {
    let mode = args.mode.or(file.mode).unwrap_or_default();
    let d = args.d.or(file.d).unwrap_or(DEFAULT_D);
    let t0 = args.t0.or(file.t0).unwrap_or(DEFAULT_T0);
    let window = args.window.or(file.window).unwrap_or(DEFAULT_WINDOW);
    let params = ModelParams::new(d, t0, window)?;

    let quadruple = match args.quadruple.as_deref().or(file.quadruple.as_deref()) {
        Some(text) => parse_quadruple(text)?,
        None => ChshQuadruple::default(),
    };
    let settings1 = match args.angles1.as_deref().or(file.angles1.as_deref()) {
        Some(text) => parse_angles(text)?,
        None => quadruple.station1(),
    };
    let settings2 = match args.angles2.as_deref().or(file.angles2.as_deref()) {
        Some(text) => parse_angles(text)?,
        None => quadruple.station2(),
    };
    let emission = match args.emission.as_deref().or(file.emission.as_deref()) {
        Some(text) => parse_emission(text)?,
        None => Emission::default_for(&params),
    };
    let n_pairs = args.pairs.or(file.pairs).unwrap_or(DEFAULT_PAIRS);
    let seed = args.seed.or(file.seed).unwrap_or(DEFAULT_SEED);
    let config = ExperimentConfig::new(params, settings1, settings2, n_pairs, seed).with_emission(emission);
    config.validate()?;

    let windows = match args.windows.as_deref().or(file.windows.as_deref()) {
        Some(text) => parse_window_grid(text)?,
        None => match mode {
            Mode::Sweep | Mode::Reanalyze => parse_window_grid(&format!("{}:{}:log20", t0 / 1000.0, t0))?,
            Mode::Mc | Mode::Oracle => vec![window],
        },
    };
    let default_matcher = if mode == Mode::Reanalyze {
        MatchPolicy::Stream
    } else {
        MatchPolicy::Paired
    };
    let matcher = match args.matcher.as_deref().or(file.matcher.as_deref()) {
        Some(text) => MatchPolicy::from_str(text)?,
        None => default_matcher,
    };
    let tags_in = args.tags_in.or(file.tags_in);
    if mode == Mode::Reanalyze && tags_in.is_none() {
        return Err(Error::MissingField("tags-in (required by --mode reanalyze)".into()));
    }
    let workers = args.workers.or(file.workers);
    if workers == Some(0) {
        return Err(Error::invalid("workers", "must be at least 1"));
    }
    let curve_points = args.curve_points.or(file.curve_points).unwrap_or(DEFAULT_CURVE_POINTS);
    if curve_points == 0 {
        return Err(Error::invalid("curve-points", "must be at least 1"));
    }
    if matches!(mode, Mode::Sweep | Mode::Reanalyze) {
        let wanted = [(1, &config.settings1, quadruple.station1()), (2, &config.settings2, quadruple.station2())];
        for (station, list, angles) in wanted {
            for s in angles {
                if setting_position(list, s).is_none() {
                    return Err(Error::UnknownSetting { station, angle: s.angle() });
                }
            }
        }
    }
    let out_dir = args
        .out
        .or(file.out)
        .or(out_env)
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR));
    Ok(RunRequest {
        mode,
        config,
        windows,
        quadruple,
        matcher,
        tags_out: args.tags_out.or(file.tags_out),
        tags_in,
        out_dir,
        workers,
        curve_points,
        independent: args.independent || file.independent.unwrap_or(false),
    })
}

fn display(path: &Path) -> String {
    path.display().to_string()
}

/// Executes a run, writes its result files and manifest, and returns the manifest.
pub fn run(request: &RunRequest) -> Result<RunManifest> {
    match request.workers {
        Some(n) => with_workers(n, || run_inner(request)),
        None => run_inner(request),
    }
}

fn run_inner(request: &RunRequest) -> Result<RunManifest> {
    let started = unix_now();
    fs::create_dir_all(&request.out_dir).map_err(|e| Error::io(&request.out_dir, e))?;
    let mut outputs = match request.mode {
        Mode::Mc => run_mc(request)?,
        Mode::Oracle => run_oracle(request)?,
        Mode::Sweep => run_sweep(request)?,
        Mode::Reanalyze => run_reanalyze(request)?,
    };
    let manifest_path = request.out_dir.join("manifest.json");
    outputs.push(display(&manifest_path));
    let manifest = RunManifest {
        version: env!("CARGO_PKG_VERSION").to_owned(),
        mode: request.mode.name().to_owned(),
        seed: request.config.seed,
        config: request.config.clone(),
        windows: request.windows.clone(),
        quadruple: request.quadruple,
        matcher: request.matcher,
        started,
        finished: unix_now(),
        outputs,
    };
    manifest.write(&manifest_path)?;
    Ok(manifest)
}

fn run_mc(request: &RunRequest) -> Result<Vec<String>> {
    let config = &request.config;
    let window = config.params.window();
    let mut outputs = Vec::new();
    let needs_log = request.tags_out.is_some() || request.matcher == MatchPolicy::Stream;
    let table = if needs_log {
        let log = match request.workers {
            Some(n) => run_experiment_with_workers(config, n)?,
            None => run_experiment(config)?,
        };
        if let Some(prefix) = &request.tags_out {
            outputs.extend(write_tags(&log, prefix)?.iter().map(|p| display(p)));
        }
        tabulate(&find_coincidences(&log, window, request.matcher)?, config)?
    } else {
        let table = simulate_tables(config, &[window])?.remove(0);
        if table.total() == 0 {
            return Err(Error::NoCoincidences);
        }
        table
    };
    let path = request.out_dir.join("correlations.csv");
    write_correlations(&path, &table)?;
    outputs.push(display(&path));
    // CHSH only when every quadruple angle is among the configured settings.
    if let Ok(value) = chsh(&table, &request.quadruple) {
        let path = request.out_dir.join("chsh.csv");
        write_chsh(&path, &ChshRow::new(window, value, table.total(), config.n_pairs))?;
        outputs.push(display(&path));
    }
    Ok(outputs)
}

fn run_oracle(request: &RunRequest) -> Result<Vec<String>> {
    let params = &request.config.params;
    let quad = QuadratureSpec::default();
    let n = request.curve_points;
    let a1 = Setting(0.0);
    let rows = (0..n)
        .map(|k| {
            let delta = PI * k as f64 / n as f64;
            let a2 = Setting(delta);
            Ok(CurveRow {
                delta_rad: delta,
                model: correlation_exact(a1, a2, params, &quad)?,
                singlet: singlet_correlation(a1, a2),
                mixed: mixed_correlation(a1, a2),
                coincidence_probability: coincidence_probability(a1, a2, params, &quad)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let curves = request.out_dir.join("oracle_curves.csv");
    write_curves(&curves, &rows)?;

    let q = &request.quadruple;
    let reference = |f: fn(Setting, Setting) -> f64| {
        chsh_from_correlations(q.combinations().map(|(x, y)| f(x, y)))
    };
    let row = OracleChshRow {
        window: params.window(),
        s_model: chsh_exact(q, params, &quad)?,
        s_singlet: reference(singlet_correlation),
        s_mixed: reference(mixed_correlation),
    };
    let chsh_path = request.out_dir.join("oracle_chsh.csv");
    write_oracle_chsh(&chsh_path, &row)?;
    Ok(vec![display(&curves), display(&chsh_path)])
}

fn sweep_options(request: &RunRequest) -> SweepOptions {
    SweepOptions {
        quadruple: request.quadruple,
        matcher: request.matcher,
        independent: request.independent,
    }
}

fn run_sweep(request: &RunRequest) -> Result<Vec<String>> {
    let mut outputs = Vec::new();
    let options = sweep_options(request);
    let sweep = if let Some(prefix) = &request.tags_out {
        let log = run_experiment(&request.config)?;
        outputs.extend(write_tags(&log, prefix)?.iter().map(|p| display(p)));
        if request.independent {
            window_sweep(&request.config, &request.windows, &options)?
        } else {
            sweep_log(&log, &request.windows, &options)?
        }
    } else {
        window_sweep(&request.config, &request.windows, &options)?
    };
    let path = request.out_dir.join("sweep.csv");
    write_sweep(&path, &sweep)?;
    outputs.push(display(&path));
    Ok(outputs)
}

fn run_reanalyze(request: &RunRequest) -> Result<Vec<String>> {
    let prefix = request
        .tags_in
        .as_deref()
        .ok_or_else(|| Error::MissingField("tags-in".into()))?;
    let log = read_tags(prefix, &request.config)?;
    let sweep = sweep_log(&log, &request.windows, &sweep_options(request))?;
    let path = request.out_dir.join("sweep.csv");
    write_sweep(&path, &sweep)?;
    Ok(vec![
        display(&station_path(prefix, Station::One)),
        display(&station_path(prefix, Station::Two)),
        display(&path),
    ])
}
