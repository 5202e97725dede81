//! Command-line front end. Every command prints a table or summary on
//! stdout and writes its artifacts into the output directory.
//!
//! Exit codes: 0 success, 1 verification failure, 2 usage or spec error,
//! 3 resolution error, 4 witness capacity error.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use num_traits::ToPrimitive;
use serde::Serialize;

use crate::analysis::{
    estimate_dimension, finite_bounds_check, gm, ratio_series, BoundsReport, Counter, DimensionEstimate,
    EstimateOptions, RatioSeries, ScaleSchedule,
};
use crate::error::{Error, Result};
use crate::grid::{parse_exact_rational, Cap, GridScale};
use crate::lemmas::{run_suite, Suite, SuiteReport, TrialConfig};
use crate::oracles::{brute_force_occupancy, calibrate_closed_forms, Generator, SlackCalibration};
use crate::polyline::BigRational;
use crate::sets::{CountedSet, Exponent, PaperSetParams, SetSpec};
use crate::witness::{build_witness, fraction, iterate_theorem1, row_capacity, StageRecord};

/// Environment variable naming the default output directory.
pub const OUTPUT_DIR_ENV: &str = "GDIM_OUTPUT_DIR";

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERIFY: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_RESOLUTION: i32 = 3;
pub const EXIT_CAPACITY: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "graphbox", version, about = "Box and graph box counting on subsets of [0, 1]")]
pub struct Cli {
    /// Directory for CSV and JSON artifacts [default: $GDIM_OUTPUT_DIR or .]
    #[arg(long, global = true)]
    pub out_dir: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Ratio series and dimension estimate along a scale schedule.
    Dim {
        /// power:p=<rat> | cantor:ratio=<rat>,depth=<int> |
        /// paper:a=<rat>,c=<rat>,levels=<int>[,x1=<int>,gamma=<int>] | file:<path>
        #[arg(long)]
        set: String,
        /// geo:<base>:<min>:<max> or list:<m1>,<m2>,...
        #[arg(long)]
        schedule: String,
        #[arg(long, default_value = "gm")]
        counter: String,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
    },
    /// Witness function at one scale, or the staged sum with --stages.
    Witness {
        #[arg(long)]
        set: String,
        #[arg(long, required_unless_present = "stages")]
        m: Option<u64>,
        /// Height cap h, decimal or num/den.
        #[arg(long, default_value = "1")]
        cap: String,
        #[arg(long, requires = "schedule")]
        stages: Option<usize>,
        #[arg(long)]
        schedule: Option<String>,
    },
    /// Verification suites; exit 1 on any failure.
    Verify {
        /// lemmas | bounds | corollary2 | paperset
        #[arg(long)]
        suite: String,
        /// Required by randomized suites.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = 1000)]
        trials: u64,
        /// Exponent for corollary2.
        #[arg(long, default_value = "1")]
        p: String,
        /// Largest scale swept by corollary2.
        #[arg(long, default_value_t = 2000)]
        m_max: u64,
        /// Set for bounds and paperset, replacing the built-in ones.
        #[arg(long)]
        set: Option<String>,
        /// Scales for bounds.
        #[arg(long, default_value = "geo:2:4:4096")]
        schedule: String,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

/// Failure of one command, carrying its exit code.
#[derive(Debug)]
pub enum Failure {
    Error(Error),
    Verification(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Error(e)
    }
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Verification(_) => EXIT_VERIFY,
            Failure::Error(Error::Resolution { .. }) => EXIT_RESOLUTION,
            Failure::Error(Error::Capacity { .. }) => EXIT_CAPACITY,
            Failure::Error(_) => EXIT_USAGE,
        }
    }
}

/// Parses `args` (program name first), runs the command and returns the
/// exit code. Normal output goes to `out`, diagnostics to `err`.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { err.write_all(text.as_bytes()) } else { out.write_all(text.as_bytes()) };
            return code;
        }
    };
    let dir = cli
        .out_dir
        .clone()
        .or_else(|| std::env::var_os(OUTPUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."));
    match execute(&cli.command, &dir, out) {
        Ok(()) => EXIT_OK,
        Err(f) => {
            let _ = match &f {
                Failure::Error(e) => writeln!(err, "error: {e}"),
                Failure::Verification(msg) => writeln!(err, "verification failed: {msg}"),
            };
            f.exit_code()
        }
    }
}

fn execute(command: &Command, dir: &Path, out: &mut dyn Write) -> std::result::Result<(), Failure> {
    match command {
        Command::Dim { set, schedule, counter, format } => cmd_dim(set, schedule, counter, *format, dir, out),
        Command::Witness { set, m, cap, stages, schedule } => match stages {
            Some(n) => cmd_stages(set, *n, schedule.as_deref().unwrap_or_default(), dir, out),
            None => cmd_witness(set, m.expect("clap requires m without stages"), cap, dir, out),
        },
        Command::Verify { suite, seed, trials, p, m_max, set, schedule } => {
            cmd_verify(suite, *seed, *trials, p, *m_max, set.as_deref(), schedule, dir, out)
        }
    }
}

fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<()> {
    fs::create_dir_all(dir)?;
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::Io(e.to_string()))?;
    fs::write(dir.join(name), text + "\n")?;
    Ok(())
}

fn io(e: std::io::Error) -> Failure {
    Failure::Error(e.into())
}

fn series_csv(series: &RatioSeries) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| Error::Io(e.to_string());
    w.write_record(["m", "value", "ratio"]).map_err(csv_err)?;
    for e in &series.entries {
        w.write_record([e.m.to_string(), e.value.to_string(), format!("{:.12}", e.ratio)])
            .map_err(csv_err)?;
    }
    w.into_inner().map_err(|e| Error::Io(e.to_string()))
}

#[derive(Serialize)]
struct DimReport<'a> {
    set: &'a str,
    schedule: &'a [u64],
    series: &'a RatioSeries,
    summary: &'a DimensionEstimate,
}

fn cmd_dim(
    set: &str,
    schedule: &str,
    counter: &str,
    format: Format,
    dir: &Path,
    out: &mut dyn Write,
) -> std::result::Result<(), Failure> {
    let spec: SetSpec = set.parse()?;
    let schedule: ScaleSchedule = schedule.parse()?;
    let counter: Counter = counter.parse()?;
    let built = spec.build()?;
    let series = ratio_series(&built, &schedule, counter)?;
    let estimate = estimate_dimension(&series, EstimateOptions::default())?;
    let csv = series_csv(&series)?;
    fs::create_dir_all(dir).map_err(io)?;
    fs::write(dir.join("dim.csv"), &csv).map_err(io)?;
    let report = DimReport { set, schedule: schedule.scales(), series: &series, summary: &estimate };
    write_json(dir, "dim.json", &report)?;
    match format {
        Format::Csv => {
            out.write_all(&csv).map_err(io)?;
            writeln!(
                out,
                "# counter={} limsup_proxy={:.6} slope={:.6} degenerate={}",
                estimate.counter, estimate.limsup_proxy, estimate.slope, estimate.degenerate
            )
            .map_err(io)?;
        }
        Format::Json => {
            let text = serde_json::to_string_pretty(&report).map_err(|e| Error::Io(e.to_string()))?;
            writeln!(out, "{text}").map_err(io)?;
        }
    }
    Ok(())
}

fn parse_height(cap: &str) -> Result<BigRational> {
    parse_exact_rational(cap)
}

fn cmd_witness(set: &str, m: u64, cap: &str, dir: &Path, out: &mut dyn Write) -> std::result::Result<(), Failure> {
    let spec: SetSpec = set.parse()?;
    let built = spec.build()?;
    let m = GridScale::new(m)?;
    built.valid_scale_range().check(m)?;
    let h = parse_height(cap)?;
    let rows = row_capacity(m, &h).max(1);
    let points = built.explicit_for(m.get(), rows)?;
    let w = build_witness(&points, m, &h)?;
    fs::create_dir_all(dir).map_err(io)?;
    let file = fs::File::create(dir.join("witness.csv")).map_err(io)?;
    w.write_csv(std::io::BufWriter::new(file))?;
    let summary = w.summary();
    write_json(dir, "witness.json", &summary)?;
    writeln!(
        out,
        "m={} h={} selected={} bound={} achieved={} sup_norm={}",
        summary.m, summary.h, summary.selected, summary.bound, summary.achieved, summary.sup_norm
    )
    .map_err(io)?;
    if !w.is_sound() {
        return Err(Failure::Verification(format!("achieved {} < bound {}", w.achieved, w.bound)));
    }
    Ok(())
}

#[derive(Serialize)]
struct StagesReport<'a> {
    set: &'a str,
    a: f64,
    stages: &'a [StageRecord],
}

fn cmd_stages(set: &str, n: usize, schedule: &str, dir: &Path, out: &mut dyn Write) -> std::result::Result<(), Failure> {
    let spec: SetSpec = set.parse()?;
    let schedule: ScaleSchedule = schedule.parse()?;
    let built = spec.build()?;
    let run = iterate_theorem1(&built, n, &schedule)?;
    fs::create_dir_all(dir).map_err(io)?;
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| Error::Io(e.to_string());
    w.write_record(["x", "value"]).map_err(csv_err)?;
    for (x, y) in run.function.breakpoints() {
        w.write_record([fraction(x), fraction(y)]).map_err(csv_err)?;
    }
    fs::write(dir.join("witness.csv"), w.into_inner().map_err(|e| Error::Io(e.to_string()))?).map_err(io)?;
    write_json(dir, "witness.json", &StagesReport { set, a: run.a, stages: &run.stages })?;
    writeln!(out, "a={:.6}", run.a).map_err(io)?;
    for r in &run.stages {
        writeln!(
            out,
            "stage={} m={} cells={} ratio={:.6} target={:.6} sup_norm={} cap={} conditions_verbatim={} conditions_as_constructed={}",
            r.stage,
            r.m,
            r.cells,
            r.ratio,
            r.target,
            r.sup_norm,
            r.height_cap,
            r.conditions_verbatim(),
            r.conditions_as_constructed()
        )
        .map_err(io)?;
    }
    let unsound: Vec<usize> = run
        .stages
        .iter()
        .filter(|r| !(r.partial_sum && r.norm_cap && r.tail_small && r.final_half))
        .map(|r| r.stage)
        .collect();
    if !unsound.is_empty() {
        return Err(Failure::Verification(format!("stages {unsound:?} violate the construction guarantees")));
    }
    Ok(())
}

#[derive(Serialize)]
struct VerifyReport<T: Serialize> {
    suite: String,
    seed: Option<u64>,
    trials: u64,
    passes: u64,
    skips: u64,
    failures: u64,
    details: T,
}

fn tally<T: Serialize>(suite: &str, seed: Option<u64>, passes: u64, skips: u64, failures: u64, details: T) -> VerifyReport<T> {
    VerifyReport { suite: suite.into(), seed, trials: passes + skips + failures, passes, skips, failures, details }
}

#[allow(clippy::too_many_arguments)]
fn cmd_verify(
    suite: &str,
    seed: Option<u64>,
    trials: u64,
    p: &str,
    m_max: u64,
    set: Option<&str>,
    schedule: &str,
    dir: &Path,
    out: &mut dyn Write,
) -> std::result::Result<(), Failure> {
    let failures = match suite {
        "lemmas" => {
            let seed = seed.ok_or_else(|| Error::Parameter("the lemmas suite needs --seed".into()))?;
            let config = TrialConfig::new(seed, trials);
            let reports = Suite::ALL
                .iter()
                .map(|&s| run_suite(s, &config))
                .collect::<Result<Vec<SuiteReport>>>()?;
            for r in &reports {
                writeln!(
                    out,
                    "{} trials={} passes={} skips={} failures={} seed={}",
                    r.suite.name(),
                    r.trials,
                    r.passes,
                    r.skips,
                    r.failures,
                    r.seed
                )
                .map_err(io)?;
            }
            let sum = |f: fn(&SuiteReport) -> u64| reports.iter().map(f).sum::<u64>();
            let report = tally(suite, Some(seed), sum(|r| r.passes), sum(|r| r.skips), sum(|r| r.failures), &reports);
            write_json(dir, "verify-lemmas.json", &report)?;
            report.failures
        }
        "bounds" => verify_bounds(set, schedule, dir, out)?,
        "corollary2" => verify_corollary2(p, m_max, dir, out)?,
        "paperset" => verify_paperset(set, dir, out)?,
        other => {
            return Err(Error::Parameter(format!(
                "unknown suite {other:?}; expected lemmas, bounds, corollary2 or paperset"
            ))
            .into())
        }
    };
    if failures > 0 {
        return Err(Failure::Verification(format!("{failures} failing checks in suite {suite}")));
    }
    Ok(())
}

#[derive(Serialize)]
struct BoundsEntry {
    set: String,
    #[serde(flatten)]
    report: BoundsReport,
}

fn default_sets() -> Vec<String> {
    vec![
        "power:p=1/2".into(),
        "power:p=1".into(),
        "power:p=2".into(),
        "cantor:ratio=1/3,depth=10".into(),
        "paper:a=1/2,c=1/3,levels=3,x1=2,gamma=4".into(),
    ]
}

fn verify_bounds(set: Option<&str>, schedule: &str, dir: &Path, out: &mut dyn Write) -> std::result::Result<u64, Failure> {
    let schedule: ScaleSchedule = schedule.parse()?;
    let specs = set.map_or_else(default_sets, |s| vec![s.to_string()]);
    let mut entries = Vec::new();
    for spec in &specs {
        let built = spec.parse::<SetSpec>()?.build()?;
        for &mv in schedule.scales() {
            let m = GridScale::new(mv)?;
            if built.valid_scale_range().check(m).is_err() {
                continue;
            }
            entries.push(BoundsEntry { set: spec.clone(), report: finite_bounds_check(&built, m)? });
        }
    }
    let failures = entries.iter().filter(|e| !e.report.pass()).count() as u64;
    let passes = entries.len() as u64 - failures;
    for e in entries.iter().filter(|e| !e.report.pass()) {
        writeln!(out, "FAIL {} m={} n={} gm={} g_sqrt={}", e.set, e.report.m, e.report.n, e.report.gm, e.report.g_sqrt)
            .map_err(io)?;
    }
    writeln!(out, "bounds checks={} passes={passes} failures={failures}", entries.len()).map_err(io)?;
    write_json(dir, "verify-bounds.json", &tally("bounds", None, passes, 0, failures, &entries))?;
    Ok(failures)
}

#[derive(Serialize)]
struct PowerOracleDetails {
    exponent: String,
    m_max: u64,
    mismatches: Vec<(u64, String)>,
    closed_forms: SlackCalibration,
}

fn verify_corollary2(p: &str, m_max: u64, dir: &Path, out: &mut dyn Write) -> std::result::Result<u64, Failure> {
    let p: Exponent = p.parse()?;
    if m_max < 2 {
        return Err(Error::Parameter("--m-max must be at least 2".into()).into());
    }
    let set = CountedSet::power(p);
    let mut checks = 0u64;
    let mut mismatches = Vec::new();
    for mv in 2..=m_max {
        let m = GridScale::new(mv)?;
        for cap in [Cap::Bounded(1), Cap::Bounded(mv), Cap::Unbounded] {
            checks += 1;
            if set.occupancy(m, cap)? != brute_force_occupancy(&Generator::Power(p), m, cap)? {
                mismatches.push((mv, format!("{cap:?}")));
            }
        }
    }
    let closed_forms = calibrate_closed_forms(p, m_max)?;
    let failures = mismatches.len() as u64;
    writeln!(
        out,
        "corollary2 p={p} scales=2..={m_max} checks={checks} mismatches={failures} n_slack={} g_slack_per_m={:.4}",
        closed_forms.n_slack, closed_forms.g_slack_per_m
    )
    .map_err(io)?;
    let details = PowerOracleDetails { exponent: p.to_string(), m_max, mismatches, closed_forms };
    write_json(dir, "verify-corollary2.json", &tally("corollary2", None, checks - failures, 0, failures, &details))?;
    Ok(failures)
}

#[derive(Serialize)]
struct SpecialScaleCheck {
    level: u32,
    m: Option<u64>,
    gm: Option<u64>,
    lower_bound: f64,
    meets_lower_bound: Option<bool>,
    g_ratio: Option<f64>,
}

#[derive(Serialize)]
struct PaperDetails {
    within_cell: bool,
    diameter: bool,
    level_size: bool,
    blocks_checked: u64,
    predicted_graph_dimension: f64,
    special_scales: Vec<SpecialScaleCheck>,
}

fn verify_paperset(set: Option<&str>, dir: &Path, out: &mut dyn Write) -> std::result::Result<u64, Failure> {
    let spec = set.unwrap_or("paper:a=1/2,c=1/3,levels=3,x1=2,gamma=4");
    let (built, generated) = spec.parse::<SetSpec>()?.build_with_metadata()?;
    let generated = generated.ok_or_else(|| Error::Parameter("paperset needs a paper: set".into()))?;
    let blocks = generated.check_blocks();
    let params: &PaperSetParams = generated.params();
    let b = params.predicted_graph_dimension();
    let mut checks = Vec::new();
    for s in generated.special_scales()? {
        let testable = s.realized && s.m.is_some_and(|m| m >= 2);
        let (g, ok, ratio) = match (testable, s.m) {
            (true, Some(mv)) => {
                let g = gm(&built, GridScale::new(mv)?)?;
                let ok = generated.meets_lower_bound(s.level, g)?;
                (Some(g), Some(ok), Some((g as f64).ln() / (mv as f64).ln()))
            }
            _ => (None, None, None),
        };
        checks.push(SpecialScaleCheck {
            level: s.level,
            m: s.m,
            gm: g,
            lower_bound: generated.lower_bound_value(s.level),
            meets_lower_bound: ok,
            g_ratio: ratio,
        });
    }
    let block_failures = [blocks.within_cell, blocks.diameter, blocks.level_size].iter().filter(|ok| !**ok).count() as u64;
    let bound_failures = checks.iter().filter(|c| c.meets_lower_bound == Some(false)).count() as u64;
    let bound_passes = checks.iter().filter(|c| c.meets_lower_bound == Some(true)).count() as u64;
    let skips = checks.iter().filter(|c| c.meets_lower_bound.is_none()).count() as u64;
    for c in &checks {
        match (c.m, c.gm, c.g_ratio) {
            (Some(m), Some(g), Some(r)) => writeln!(
                out,
                "level={} m={m} gm={g} lower_bound={:.3} meets={} g_ratio={r:.4}",
                c.level,
                c.lower_bound,
                c.meets_lower_bound == Some(true)
            ),
            _ => writeln!(out, "level={} not realized at this depth", c.level),
        }
        .map_err(io)?;
    }
    writeln!(
        out,
        "blocks={} within_cell={} diameter={} level_size={} predicted_gdim={:.4}",
        blocks.blocks_checked,
        blocks.within_cell,
        blocks.diameter,
        blocks.level_size,
        b.to_f64().unwrap_or(f64::NAN)
    )
    .map_err(io)?;
    let details = PaperDetails {
        within_cell: blocks.within_cell,
        diameter: blocks.diameter,
        level_size: blocks.level_size,
        blocks_checked: blocks.blocks_checked,
        predicted_graph_dimension: b.to_f64().unwrap_or(f64::NAN),
        special_scales: checks,
    };
    let failures = block_failures + bound_failures;
    write_json(dir, "verify-paperset.json", &tally("paperset", None, 3 - block_failures + bound_passes, skips, failures, &details))?;
    Ok(failures)
}
