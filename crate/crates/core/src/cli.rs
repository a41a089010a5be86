//! Command-line front end: ingestion, fitting, assessment and study reproduction.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Read;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::assess::{assess_fit, AssessmentReport};
use crate::baseline::{run_baseline, summarize_baseline, BaselineReport};
use crate::chain::{read_snapshot, run_chain, write_draws_csv, write_snapshot, PosteriorDraws, Snapshot};
use crate::error::{Error, Result};
use crate::geo::{Coordinates, LonLat};
use crate::model::{Dataset, ModelConfig, Scheme};
use crate::numerics::RngStream;
use crate::posterior::{dahl_select, summarize_clusters, ClusterSummary, DahlResult, SummaryMode};
use crate::simgen::{run_replicate_study, ScenarioSpec};

/// Version stamped into every JSON artifact.
pub const OUTPUT_VERSION: u32 = 1;

#[derive(Debug, Parser)]
#[command(name = "geodpm", version, about = "Clustered-coefficient spatial regression")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit the clustered spatial model to a CSV.
    Fit {
        data: PathBuf,
        #[command(flatten)]
        opts: FitOptions,
        #[arg(long, value_enum, default_value = "pooled")]
        summary_mode: ModeArg,
    },
    /// Fit the single-coefficient regression without a spatial effect.
    FitBaseline {
        data: PathBuf,
        #[command(flatten)]
        opts: FitOptions,
    },
    /// Fit every weighting scheme to one CSV and compare LPML.
    CompareSchemes {
        data: PathBuf,
        #[command(flatten)]
        opts: FitOptions,
    },
    /// Run a simulation study described by a scenario JSON file.
    ReplicateStudy {
        scenario: PathBuf,
        #[command(flatten)]
        opts: FitOptions,
        /// Overrides the replicate count in the scenario file.
        #[arg(long)]
        replicates: Option<usize>,
    },
    /// Turn a snapshot into label, trace and cluster tables.
    Summarize {
        snapshot: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[arg(long, value_enum, default_value = "pooled")]
        summary_mode: ModeArg,
        /// Also write every stored draw as one wide CSV.
        #[arg(long)]
        export_draws: bool,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum SchemeArg {
    Unity,
    Exponential,
    Gaussian,
}

impl From<SchemeArg> for Scheme {
    fn from(s: SchemeArg) -> Self {
        match s {
            SchemeArg::Unity => Scheme::Unity,
            SchemeArg::Exponential => Scheme::Exponential,
            SchemeArg::Gaussian => Scheme::Gaussian,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ModeArg {
    Pooled,
    Matched,
    SelectedDraw,
}

impl From<ModeArg> for SummaryMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Pooled => SummaryMode::Pooled,
            ModeArg::Matched => SummaryMode::Matched,
            ModeArg::SelectedDraw => SummaryMode::SelectedDraw,
        }
    }
}

/// Options shared by every fitting subcommand. Flags override the JSON file,
/// which overrides the built-in defaults.
#[derive(Debug, Clone, Default, Args)]
pub struct FitOptions {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_enum)]
    pub scheme: Option<SchemeArg>,
    #[arg(long)]
    pub iters: Option<usize>,
    #[arg(long)]
    pub thin: Option<usize>,
    #[arg(long)]
    pub burnin: Option<usize>,
    #[arg(long)]
    pub truncation: Option<usize>,
    #[arg(long)]
    pub bandwidth_max: Option<f64>,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

fn merge(base: &mut serde_json::Value, over: serde_json::Value) {
    match (base, over) {
        (serde_json::Value::Object(b), serde_json::Value::Object(o)) => {
            for (k, v) in o {
                match b.get_mut(&k) {
                    Some(slot) if slot.is_object() && v.is_object() => merge(slot, v),
                    _ => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (b, o) => *b = o,
    }
}

/// Defaults, then the JSON file, then command-line flags.
pub fn resolve_config(base: ModelConfig, opts: &FitOptions) -> Result<ModelConfig> {
    let mut config = match &opts.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            let over: serde_json::Value = serde_json::from_str(&text)
                .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
            if !over.is_object() {
                return Err(Error::Config(format!("{}: expected a JSON object", path.display())));
            }
            let mut value = serde_json::to_value(&base).expect("config serializes");
            merge(&mut value, over);
            serde_json::from_value(value)
                .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?
        }
        None => base,
    };
    if let Some(v) = opts.seed {
        config.seed = v;
    }
    if let Some(v) = opts.scheme {
        config.scheme = v.into();
    }
    if let Some(v) = opts.iters {
        config.n_iter = v;
    }
    if let Some(v) = opts.thin {
        config.thin = v;
    }
    if let Some(v) = opts.burnin {
        config.burn_in = v;
    }
    if let Some(v) = opts.truncation {
        config.truncation = v;
    }
    if let Some(v) = opts.bandwidth_max {
        config.bandwidth_max = v;
    }
    config.validate()?;
    Ok(config)
}

fn ingest_err(row: usize, column: &str, message: impl Into<String>) -> Error {
    Error::Ingestion {
        row,
        column: column.into(),
        message: message.into(),
    }
}

/// Reads columns `y`, `x1..xp`, `lon`, `lat` and an optional `name`;
/// other columns are ignored. Rows are numbered from 1 after the header.
pub fn read_dataset_csv<R: Read>(reader: R) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| ingest_err(0, "", e.to_string()))?
        .clone();
    if headers.is_empty() || headers.iter().all(|h| h.is_empty()) {
        return Err(ingest_err(0, "", "empty file"));
    }
    let find = |name: &str| headers.iter().position(|h| h == name);
    let need = |name: &str| find(name).ok_or_else(|| ingest_err(0, name, "missing column"));
    let iy = need("y")?;
    let ilon = need("lon")?;
    let ilat = need("lat")?;
    let iname = find("name");
    let mut ix = Vec::new();
    while let Some(i) = find(&format!("x{}", ix.len() + 1)) {
        ix.push(i);
    }
    if ix.is_empty() {
        return Err(ingest_err(0, "x1", "missing column"));
    }
    let p = ix.len();
    for h in headers.iter() {
        if let Some(k) = h.strip_prefix('x').and_then(|d| d.parse::<usize>().ok()) {
            if k > p {
                return Err(ingest_err(0, h, format!("covariate columns must run x1..x{k} without gaps")));
            }
        }
    }
    let (mut y, mut x, mut pts, mut names) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    for (k, rec) in rdr.records().enumerate() {
        let row = k + 1;
        let rec = rec.map_err(|e| ingest_err(row, "", e.to_string()))?;
        let num = |i: usize| -> Result<f64> {
            let cell = rec.get(i).unwrap_or("");
            let v: f64 = cell
                .parse()
                .map_err(|_| ingest_err(row, &headers[i], format!("not a number: {cell:?}")))?;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(ingest_err(row, &headers[i], "value must be finite"))
            }
        };
        y.push(num(iy)?);
        for &i in &ix {
            x.push(num(i)?);
        }
        let point = LonLat::new(num(ilon)?, num(ilat)?);
        point
            .validate()
            .map_err(|e| ingest_err(row, "lon/lat", e.to_string()))?;
        pts.push(point);
        if let Some(i) = iname {
            names.push(rec.get(i).unwrap_or("").to_string());
        }
    }
    let n = y.len();
    if n == 0 {
        return Err(ingest_err(0, "", "no data rows"));
    }
    if n < p {
        return Err(ingest_err(n, "", format!("{n} rows cannot identify {p} coefficients")));
    }
    Dataset::new(y, x, p, Coordinates::new(pts)?, iname.map(|_| names))
}

pub fn load_dataset(path: &Path) -> Result<Dataset> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_dataset_csv(file)
}

#[derive(Serialize)]
struct Versioned<'a, T: Serialize> {
    format_version: u32,
    #[serde(flatten)]
    content: &'a T,
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let wrapped = Versioned {
        format_version: OUTPUT_VERSION,
        content: value,
    };
    let mut text = serde_json::to_string_pretty(&wrapped).map_err(|e| Error::Format(e.to_string()))?;
    text.push('\n');
    write_text(path, &text)
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

/// The exact configuration a run used, re-usable as `--config`.
pub fn write_resolved_config(dir: &Path, config: &ModelConfig) -> Result<()> {
    let mut text = serde_json::to_string_pretty(config).map_err(|e| Error::Format(e.to_string()))?;
    text.push('\n');
    write_text(&dir.join("resolved_config.json"), &text)
}

fn location_names(data: &Dataset) -> Vec<String> {
    match data.names() {
        Some(names) => names.to_vec(),
        None => (1..=data.n()).map(|i| i.to_string()).collect(),
    }
}

fn coefficient_names(p: usize) -> Vec<String> {
    (1..=p).map(|j| format!("x{j}")).collect()
}

/// Per-location final labels, one row per location.
pub fn labels_csv(data: &Dataset, dahl: &DahlResult) -> String {
    let mut out = String::from("name,lon,lat,cluster\n");
    for ((name, pt), c) in location_names(data).iter().zip(data.coords().iter()).zip(&dahl.partition) {
        let _ = writeln!(out, "{name},{},{},{c}", pt.lon, pt.lat);
    }
    out
}

/// Per-draw scalar traces.
pub fn trace_csv(draws: &PosteriorDraws) -> String {
    let mut out = String::from("draw,occupied,alpha,tau_y,tau_w,tau_b,phi,loglik\n");
    for t in 0..draws.len() {
        let ll: f64 = draws.loglik.row(t).iter().sum();
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            t + 1,
            draws.occupied(t),
            draws.alpha[t],
            draws.tau_y[t],
            draws.tau_w[t],
            draws.tau_b[t],
            draws.phi[t],
            ll
        );
    }
    out
}

/// Everything derived from a fitted chain.
pub struct FitArtifacts {
    pub dahl: DahlResult,
    pub summary: ClusterSummary,
    pub assessment: AssessmentReport,
}

pub fn analyse(draws: &PosteriorDraws, data: &Dataset, mode: SummaryMode) -> Result<FitArtifacts> {
    let dahl = dahl_select(draws)?;
    let summary = summarize_clusters(draws, &dahl, mode)?;
    let assessment = assess_fit(draws, data, &dahl, &summary)?;
    Ok(FitArtifacts {
        dahl,
        summary,
        assessment,
    })
}

fn write_summaries(dir: &Path, snap: &Snapshot, mode: SummaryMode) -> Result<FitArtifacts> {
    let a = analyse(&snap.draws, &snap.data, mode)?;
    write_json(&dir.join("dahl.json"), &a.dahl)?;
    write_json(&dir.join("clusters.json"), &a.summary)?;
    write_json(&dir.join("assessment.json"), &a.assessment)?;
    write_text(&dir.join("clusters.txt"), &a.summary.render_table(&coefficient_names(snap.data.p())))?;
    write_text(&dir.join("labels.csv"), &labels_csv(&snap.data, &a.dahl))?;
    write_text(&dir.join("trace.csv"), &trace_csv(&snap.draws))?;
    Ok(a)
}

fn report_fit(a: &FitArtifacts, p: usize) -> String {
    let mut s = format!("clusters: {}\n", a.dahl.k);
    s.push_str(&a.summary.render_table(&coefficient_names(p)));
    let _ = write!(s, "LPML {:.3}", a.assessment.lpml);
    if let Some(se) = a.assessment.lpml_jackknife_se {
        let _ = write!(s, " (jackknife SE {se:.3})");
    }
    let _ = writeln!(s, "   p_D {:.3}", a.assessment.p_d);
    s
}

fn standardized(path: &Path) -> Result<(Dataset, crate::model::Standardization)> {
    load_dataset(path)?.standardized()
}

pub fn cmd_fit(data: &Path, opts: &FitOptions, mode: SummaryMode) -> Result<String> {
    let config = resolve_config(ModelConfig::default(), opts)?;
    let (data, stdz) = standardized(data)?;
    ensure_dir(&opts.out)?;
    write_resolved_config(&opts.out, &config)?;
    let draws = run_chain(&config, &data, RngStream::new(config.seed))?;
    let snap = Snapshot {
        draws,
        data,
        standardization: Some(stdz),
    };
    write_snapshot(&opts.out.join("draws.snapshot"), &snap)?;
    let a = write_summaries(&opts.out, &snap, mode)?;
    Ok(report_fit(&a, snap.data.p()))
}

pub fn cmd_fit_baseline(data: &Path, opts: &FitOptions) -> Result<String> {
    let config = resolve_config(ModelConfig::default(), opts)?;
    let (data, _) = standardized(data)?;
    ensure_dir(&opts.out)?;
    write_resolved_config(&opts.out, &config)?;
    let draws = run_baseline(&config, &data, RngStream::new(config.seed))?;
    let report: BaselineReport = summarize_baseline(&draws, &data)?;
    write_json(&opts.out.join("baseline.json"), &report)?;
    Ok(report.render_table())
}

#[derive(Debug, Serialize)]
struct SchemeRow {
    scheme: Scheme,
    lpml: f64,
    lpml_jackknife_se: Option<f64>,
    p_d: f64,
    k: usize,
}

pub fn cmd_compare_schemes(data: &Path, opts: &FitOptions) -> Result<String> {
    let base = resolve_config(ModelConfig::default(), opts)?;
    let (data, _) = standardized(data)?;
    ensure_dir(&opts.out)?;
    write_resolved_config(&opts.out, &base)?;
    let mut rows = Vec::new();
    for scheme in Scheme::ALL {
        let config = ModelConfig { scheme, ..base.clone() };
        let draws = run_chain(&config, &data, RngStream::new(config.seed))?;
        let a = analyse(&draws, &data, SummaryMode::default())?;
        rows.push(SchemeRow {
            scheme,
            lpml: a.assessment.lpml,
            lpml_jackknife_se: a.assessment.lpml_jackknife_se,
            p_d: a.assessment.p_d,
            k: a.dahl.k,
        });
    }
    #[derive(Serialize)]
    struct Comparison<'a> {
        schemes: &'a [SchemeRow],
    }
    write_json(&opts.out.join("schemes.json"), &Comparison { schemes: &rows })?;
    let mut s = format!("{:<14}{:>12}{:>12}{:>10}{:>6}\n", "scheme", "LPML", "SE", "p_D", "k");
    for r in &rows {
        let se = r.lpml_jackknife_se.map_or("-".into(), |v| format!("{v:.3}"));
        let _ = writeln!(s, "{:<14}{:>12.3}{:>12}{:>10.3}{:>6}", r.scheme.name(), r.lpml, se, r.p_d, r.k);
    }
    Ok(s)
}

pub fn cmd_replicate_study(path: &Path, opts: &FitOptions, replicates: Option<usize>) -> Result<String> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut spec: ScenarioSpec = serde_json::from_str(&text)
        .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    if let Some(r) = replicates {
        spec.replicates = r;
    }
    if let Some(seed) = opts.seed {
        spec.seed = seed;
    }
    let fit = resolve_config(ModelConfig::desk_scale(), opts)?;
    ensure_dir(&opts.out)?;
    write_resolved_config(&opts.out, &fit)?;
    let mut echo = serde_json::to_string_pretty(&spec).map_err(|e| Error::Format(e.to_string()))?;
    echo.push('\n');
    write_text(&opts.out.join("resolved_scenario.json"), &echo)?;
    let report = run_replicate_study(&spec, &fit, &RngStream::new(spec.seed))?;
    let reps = opts.out.join("replicates");
    ensure_dir(&reps)?;
    let mut files = Vec::new();
    for o in &report.outcomes {
        let name = format!("replicate_{:03}.json", o.index + 1);
        write_json(&reps.join(&name), o)?;
        files.push(format!("replicates/{name}"));
    }
    #[derive(Serialize)]
    struct Manifest<'a> {
        scenario: &'a ScenarioSpec,
        fit: &'a ModelConfig,
        replicate_files: &'a [String],
        failures: &'a [crate::simgen::ReplicateFailure],
        wall_clock_secs: f64,
    }
    write_json(
        &opts.out.join("manifest.json"),
        &Manifest {
            scenario: &report.spec,
            fit: &report.fit,
            replicate_files: &files,
            failures: &report.failures,
            wall_clock_secs: report.wall_clock_secs,
        },
    )?;
    write_json(&opts.out.join("metrics.json"), &report.metrics)?;
    let table = report.render_table();
    write_text(&opts.out.join("table.txt"), &table)?;
    Ok(table)
}

pub fn cmd_summarize(path: &Path, out: &Path, mode: SummaryMode, export_draws: bool) -> Result<String> {
    let snap = read_snapshot(path)?;
    ensure_dir(out)?;
    let a = write_summaries(out, &snap, mode)?;
    if export_draws {
        write_draws_csv(&out.join("draws.csv"), &snap.draws)?;
    }
    Ok(report_fit(&a, snap.data.p()))
}

pub fn execute(cli: Cli) -> Result<String> {
    match cli.command {
        Command::Fit { data, opts, summary_mode } => cmd_fit(&data, &opts, summary_mode.into()),
        Command::FitBaseline { data, opts } => cmd_fit_baseline(&data, &opts),
        Command::CompareSchemes { data, opts } => cmd_compare_schemes(&data, &opts),
        Command::ReplicateStudy { scenario, opts, replicates } => {
            cmd_replicate_study(&scenario, &opts, replicates)
        }
        Command::Summarize { snapshot, out, summary_mode, export_draws } => {
            cmd_summarize(&snapshot, &out, summary_mode.into(), export_draws)
        }
    }
}

/// Parses arguments, runs the command and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 64 } else { 0 };
        }
    };
    match execute(cli) {
        Ok(text) => {
            print!("{text}");
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
