//! The `cuspext` command line: configuration, subcommands, run records.
//!
//! Exit codes: 0 success, 1 internal error, 2 failed precondition (such as a
//! test function outside the source Sobolev space), 64 usage error.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_rational::BigRational;
use serde::{Deserialize, Serialize};
use serde_json::json;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::exponent::Exponent;
use crate::extension::{extension_exponents, norm_ratio, ExtensionDirection, ExtensionReport, Reflection, DEFAULT_NEIGHBOURHOOD};
use crate::geometry::{CuspProfile, Domain, QuadratureSpec};
use crate::integrability::{
    closed_form_threshold, distortion_sup, exp_integrability, integrate_distortion, IntegralSeries, ThresholdFamily,
};
use crate::maps::{
    compose, AngularStretch, CircleInversion, DiameterReflection, Identity, PlanarMap, Rotation, VerticalStretch,
};
use crate::sharpness::{l1_quasidisk_demo, phase_diagram_svg, threshold_scan};
use crate::sobolev::TestFunction;
use crate::VERSION;

pub const EXIT_OK: u8 = 0;
pub const EXIT_INTERNAL: u8 = 1;
pub const EXIT_PRECONDITION: u8 = 2;
pub const EXIT_USAGE: u8 = 64;

/// Environment variable overriding the output directory.
pub const OUT_ENV: &str = "CUSPEXT_OUT";
const DEFAULT_OUT: &str = "cuspext-out";

#[derive(Debug, Parser)]
#[command(name = "cuspext", version, about = "Sobolev extension numerics across cuspidal boundaries")]
pub struct Cli {
    /// TOML run configuration; flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory (the CUSPEXT_OUT environment variable takes precedence).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Seed for sampled checks.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Integrability of K^p for a map family over a grid of degrees and exponents.
    DistortionScan(ScanArgs),
    /// Reflection extension across the model cusp and its norm-ratio series.
    Extend(ExtendArgs),
    /// Exact threshold region table and phase diagram.
    Sharpness(SharpnessArgs),
    /// Integrability verdict for one map over one region.
    Classify(ClassifyArgs),
    /// Sobolev exponents (P, Q) of the extension.
    Exponents(ExponentArgs),
    /// Exponential cusp: integrable distortion, no (p, q) extension for p, q > 1.
    L1Demo(QuadArgs),
    /// Summarise previously written run records.
    Report(ReportArgs),
}

#[derive(Debug, Clone, Args, Default)]
pub struct QuadArgs {
    /// Base mesh resolution.
    #[arg(long)]
    pub n: Option<usize>,
    /// Deepest cutoff level K (tip neighbourhood 2^-K).
    #[arg(long)]
    pub levels: Option<u32>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    AngularStretch,
    VerticalStretchPower,
}

impl From<Family> for ThresholdFamily {
    fn from(f: Family) -> Self {
        match f {
            Family::AngularStretch => ThresholdFamily::AngularStretch,
            Family::VerticalStretchPower => ThresholdFamily::VerticalStretchPower,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct ScanArgs {
    /// Cusp degrees, e.g. `3/2,2,3`.
    #[arg(long, value_delimiter = ',')]
    pub s: Option<Vec<Exponent>>,
    /// Integrability exponents, e.g. `3/2,2,4`.
    #[arg(long, value_delimiter = ',')]
    pub p: Option<Vec<Exponent>>,
    #[arg(long, value_enum)]
    pub family: Option<Family>,
    #[command(flatten)]
    pub quad: QuadArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DirectionArg {
    In,
    Out,
}

impl From<DirectionArg> for ExtensionDirection {
    fn from(d: DirectionArg) -> Self {
        match d {
            DirectionArg::In => ExtensionDirection::In,
            DirectionArg::Out => ExtensionDirection::Out,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FunctionArg {
    AngularJump,
    RadialPower,
}

#[derive(Debug, Clone, Args)]
pub struct ExtendArgs {
    /// Cusp degree s > 1.
    #[arg(long)]
    pub s: Option<Exponent>,
    /// Distortion exponent of the cusp side.
    #[arg(long)]
    pub q: Option<Exponent>,
    #[arg(long, value_enum)]
    pub direction: Option<DirectionArg>,
    /// Exponent γ of the test function.
    #[arg(long, allow_hyphen_values = true)]
    pub gamma: Option<f64>,
    /// Test function family (default: angular-jump inward, radial-power outward).
    #[arg(long, value_enum)]
    pub function: Option<FunctionArg>,
    /// Radius of the neighbourhood U = B(0, r_U).
    #[arg(long)]
    pub ru: Option<f64>,
    #[arg(long)]
    pub levels: Option<u32>,
    #[arg(long)]
    pub n: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct SharpnessArgs {
    #[arg(long, value_delimiter = ',')]
    pub p: Option<Vec<Exponent>>,
    #[arg(long, value_delimiter = ',')]
    pub q: Option<Vec<Exponent>>,
    #[arg(long, value_delimiter = ',')]
    pub s: Option<Vec<Exponent>>,
    /// Skip the SVG phase diagram.
    #[arg(long)]
    pub no_svg: bool,
}

#[derive(Debug, Clone, Args)]
pub struct ClassifyArgs {
    /// Map kind, e.g. angular-stretch, inversion, vertical-stretch.
    #[arg(long)]
    pub map: Option<String>,
    /// Degree for angular-stretch maps and polar cusp regions.
    #[arg(long)]
    pub s: Option<f64>,
    /// Profile for vertical stretches and channels: `exp` or a power degree.
    #[arg(long)]
    pub profile: Option<String>,
    /// Exponent p of ∫K^p.
    #[arg(long)]
    pub p: Option<Exponent>,
    /// Rate λ of ∫exp(λK), instead of p.
    #[arg(long, conflicts_with = "p")]
    pub lambda: Option<f64>,
    #[command(flatten)]
    pub quad: QuadArgs,
}

#[derive(Debug, Clone, Args)]
pub struct ExponentArgs {
    #[arg(long)]
    pub p: Option<Exponent>,
    #[arg(long)]
    pub q: Option<Exponent>,
    #[arg(long, value_enum)]
    pub direction: Option<DirectionArg>,
}

#[derive(Debug, Clone, Args)]
pub struct ReportArgs {
    /// Run record files; defaults to every `*.json` record in the output directory.
    pub records: Vec<PathBuf>,
}

/// A cusp width profile named in configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ProfileSpec {
    Named(String),
    Degree(f64),
}

impl ProfileSpec {
    pub fn build(&self) -> Result<CuspProfile> {
        match self {
            ProfileSpec::Degree(s) => CuspProfile::power(*s),
            ProfileSpec::Named(name) => match name.as_str() {
                "exp" | "exponential" => Ok(CuspProfile::exponential()),
                other => match other.strip_prefix("power:").unwrap_or(other).parse::<Exponent>() {
                    Ok(e) if !e.is_infinite() => CuspProfile::power(e.to_f64()),
                    _ => Err(Error::Config(format!("unknown profile `{other}`; use `exp` or a degree"))),
                },
            },
        }
    }
}

/// A map named in configuration, e.g. `{ kind = "angular-stretch", s = 2.0 }`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum MapSpec {
    Identity,
    Rotation { angle: f64 },
    Inversion,
    DiameterReflection,
    AngularStretch { s: f64 },
    VerticalStretch { profile: ProfileSpec },
    CuspReflection { s: f64 },
}

impl MapSpec {
    pub fn build(&self) -> Result<Arc<dyn PlanarMap>> {
        Ok(match self {
            MapSpec::Identity => Arc::new(Identity),
            MapSpec::Rotation { angle } => Arc::new(Rotation { angle: *angle }),
            MapSpec::Inversion => Arc::new(CircleInversion),
            MapSpec::DiameterReflection => Arc::new(DiameterReflection),
            MapSpec::AngularStretch { s } => Arc::new(AngularStretch::new(*s)?),
            MapSpec::VerticalStretch { profile } => Arc::new(VerticalStretch::new(profile.build()?)),
            MapSpec::CuspReflection { s } => Arc::new(Reflection::new(*s)?),
        })
    }

    /// The region a map is naturally measured on.
    pub fn default_domain(&self) -> Result<DomainSpec> {
        Ok(match self {
            MapSpec::AngularStretch { s } => DomainSpec::PolarCuspComplement { s: *s },
            MapSpec::CuspReflection { s } => DomainSpec::PolarCusp { s: *s },
            MapSpec::VerticalStretch { profile } => DomainSpec::Channel { profile: profile.clone() },
            MapSpec::Inversion => DomainSpec::Annulus { inner: 0.5, outer: 2.0 },
            _ => DomainSpec::UnitDisk,
        })
    }
}

/// A region named in configuration, e.g. `{ kind = "polar-cusp", s = 2.0 }`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DomainSpec {
    UnitDisk,
    Ball { radius: f64 },
    Annulus { inner: f64, outer: f64 },
    RightHalfDisk { radius: f64 },
    PolarCusp { s: f64 },
    PolarCuspComplement { s: f64 },
    Channel { profile: ProfileSpec },
    InwardCusp { profile: ProfileSpec },
    OutwardCusp { profile: ProfileSpec },
}

impl DomainSpec {
    pub fn build(&self) -> Result<Domain> {
        Ok(match self {
            DomainSpec::UnitDisk => Domain::UnitDisk,
            DomainSpec::Ball { radius } => Domain::ball(*radius),
            DomainSpec::Annulus { inner, outer } => Domain::annulus(*inner, *outer),
            DomainSpec::RightHalfDisk { radius } => Domain::right_half_disk(*radius),
            DomainSpec::PolarCusp { s } => Domain::polar_cusp(*s)?,
            DomainSpec::PolarCuspComplement { s } => Domain::polar_cusp_complement(*s)?,
            DomainSpec::Channel { profile } => Domain::CuspChannel(profile.build()?),
            DomainSpec::InwardCusp { profile } => Domain::CartesianInwardCusp(profile.build()?),
            DomainSpec::OutwardCusp { profile } => Domain::CartesianOutwardCusp(profile.build()?),
        })
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExponentConfig {
    pub p: Option<Exponent>,
    pub q: Option<Exponent>,
    pub lambda: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub p: Option<Vec<Exponent>>,
    pub q: Option<Vec<Exponent>>,
    pub s: Option<Vec<Exponent>>,
}

/// Run configuration. Loaded from TOML, overridden by flags, and echoed in
/// full into every run record.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub subcommand: Option<String>,
    pub domain: Option<DomainSpec>,
    pub map: Option<MapSpec>,
    /// Maps composed in mathematical order; overrides `map`.
    pub compose: Option<Vec<MapSpec>>,
    pub function: Option<TestFunction>,
    #[serde(default)]
    pub exponents: ExponentConfig,
    #[serde(default)]
    pub grid: GridConfig,
    pub s: Option<Exponent>,
    pub direction: Option<ExtensionDirection>,
    pub family: Option<Family>,
    pub r_u: Option<f64>,
    pub quadrature: Option<QuadratureSpec>,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub svg: Option<bool>,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    fn quadrature(&self, quad: &QuadArgs, default_n: usize, default_level: u32) -> QuadratureSpec {
        let base = self.quadrature.unwrap_or(QuadratureSpec::new(default_n, default_level));
        QuadratureSpec { n: quad.n.unwrap_or(base.n), level: quad.levels.unwrap_or(base.level), grading: base.grading }
    }

    fn map(&self) -> Result<Option<Arc<dyn PlanarMap>>> {
        if let Some(stages) = &self.compose {
            let maps = stages.iter().map(MapSpec::build).collect::<Result<Vec<_>>>()?;
            return Ok(Some(Arc::new(compose(maps)?)));
        }
        self.map.as_ref().map(MapSpec::build).transpose()
    }
}

/// Everything a run leaves behind, in one self-describing file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub tool: String,
    pub version: String,
    pub subcommand: String,
    pub config: RunConfig,
    pub results: serde_json::Value,
    pub files: Vec<String>,
    pub wall_clock_seconds: f64,
}

struct Output {
    summary: String,
    results: serde_json::Value,
    /// `(file name, contents)` written next to the record.
    files: Vec<(String, String)>,
}

/// Maps an error to the exit-code contract.
pub fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Precondition(_) | Error::Domain(_) => EXIT_PRECONDITION,
        Error::Config(_) | Error::Parse(_) => EXIT_USAGE,
        _ => EXIT_INTERNAL,
    }
}

/// Parses `argv`, runs the subcommand and returns the exit code.
pub fn run<I, T>(argv: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match execute(cli) {
        Ok(summary) => {
            print!("{summary}");
            EXIT_OK
        }
        Err(e) => {
            eprintln!("cuspext: {e}");
            exit_code(&e)
        }
    }
}

fn output_dir(cli_out: Option<&Path>, config: &RunConfig) -> PathBuf {
    if let Some(env) = std::env::var_os(OUT_ENV).filter(|v| !v.is_empty()) {
        return PathBuf::from(env);
    }
    cli_out.map(Path::to_path_buf).or_else(|| config.out.clone()).unwrap_or_else(|| PathBuf::from(DEFAULT_OUT))
}

/// Runs a parsed command and returns its stdout summary.
pub fn execute(cli: Cli) -> Result<String> {
    let mut config = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        config.seed = Some(seed);
    }
    let out_dir = output_dir(cli.out.as_deref(), &config);
    config.out = Some(out_dir.clone());
    let name = subcommand_name(&cli.command);
    if let Some(configured) = &config.subcommand {
        if configured != name {
            return Err(Error::Config(format!("config is for `{configured}`, not `{name}`")));
        }
    }
    config.subcommand = Some(name.to_string());
    let started = Instant::now();
    let output = match &cli.command {
        Command::DistortionScan(a) => distortion_scan(a, &mut config)?,
        Command::Extend(a) => extend_cmd(a, &mut config)?,
        Command::Sharpness(a) => sharpness_cmd(a, &mut config)?,
        Command::Classify(a) => classify_cmd(a, &mut config)?,
        Command::Exponents(a) => exponents_cmd(a, &mut config)?,
        Command::L1Demo(a) => l1_demo_cmd(a, &mut config)?,
        Command::Report(a) => return report_cmd(a, &out_dir),
    };
    let elapsed = started.elapsed().as_secs_f64();
    write_outputs(&out_dir, name, config, output, elapsed)
}

fn subcommand_name(c: &Command) -> &'static str {
    match c {
        Command::DistortionScan(_) => "distortion-scan",
        Command::Extend(_) => "extend",
        Command::Sharpness(_) => "sharpness",
        Command::Classify(_) => "classify",
        Command::Exponents(_) => "exponents",
        Command::L1Demo(_) => "l1-demo",
        Command::Report(_) => "report",
    }
}

fn write_outputs(dir: &Path, name: &str, config: RunConfig, output: Output, elapsed: f64) -> Result<String> {
    fs::create_dir_all(dir)?;
    let mut files = Vec::new();
    for (file, contents) in &output.files {
        fs::write(dir.join(file), contents)?;
        files.push(dir.join(file).display().to_string());
    }
    let record_path = dir.join(format!("{name}.json"));
    files.push(record_path.display().to_string());
    let record = RunRecord {
        tool: "cuspext".into(),
        version: VERSION.into(),
        subcommand: name.into(),
        config,
        results: output.results,
        files: files.clone(),
        wall_clock_seconds: elapsed,
    };
    let text = serde_json::to_string_pretty(&record).map_err(|e| Error::Io(e.to_string()))?;
    fs::write(&record_path, text + "\n")?;
    let mut summary = output.summary;
    for f in files {
        let _ = writeln!(summary, "wrote {f}");
    }
    Ok(summary)
}

fn to_json<T: Serialize>(v: &T) -> Result<serde_json::Value> {
    serde_json::to_value(v).map_err(|e| Error::Io(e.to_string()))
}

fn parse_list(default: &str) -> Vec<Exponent> {
    default.split(',').map(|s| s.parse().expect("valid built-in default")).collect()
}

fn series_csv_header(levels: usize, lead: &str, tail: &str) -> String {
    let cols: Vec<String> = (0..levels).map(|k| format!("I_{k}")).collect();
    format!("{lead},{},{tail}\n", cols.join(","))
}

fn distortion_scan(a: &ScanArgs, config: &mut RunConfig) -> Result<Output> {
    let ss = a.s.clone().or_else(|| config.grid.s.clone()).unwrap_or_else(|| parse_list("3/2,2,3"));
    let ps = a.p.clone().or_else(|| config.grid.p.clone()).unwrap_or_else(|| parse_list("3/2,2,4"));
    let family = a.family.or(config.family).unwrap_or(Family::AngularStretch);
    let spec = config.quadrature(&a.quad, 128, 16);
    spec.validate()?;
    config.grid.s = Some(ss.clone());
    config.grid.p = Some(ps.clone());
    config.family = Some(family);
    config.quadrature = Some(spec);
    let mut csv = series_csv_header(spec.level as usize + 1, "s,p", "verdict,oracle_threshold");
    let mut rows = Vec::new();
    let mut summary = String::new();
    for s in &ss {
        if s.is_infinite() {
            return Err(Error::Config("cusp degrees must be finite".into()));
        }
        let sf = s.to_f64();
        let (map, region): (Arc<dyn PlanarMap>, Domain) = match family {
            Family::AngularStretch => (Arc::new(AngularStretch::new(sf)?), Domain::polar_cusp_complement(sf)?),
            Family::VerticalStretchPower => {
                let profile = CuspProfile::power(sf)?;
                (Arc::new(VerticalStretch::new(profile.clone())), Domain::CuspChannel(profile))
            }
        };
        for p in ps.iter() {
            let series = integrate_distortion(map.as_ref(), &region, p, &spec)?;
            let threshold = closed_form_threshold(family.into(), p);
            let values: Vec<String> = series.values.iter().map(|v| format!("{v:e}")).collect();
            let _ = writeln!(csv, "{s},{p},{},{},{threshold}", values.join(","), series.verdict);
            let _ = writeln!(summary, "s={s} p={p}: {} (threshold s*={threshold})", series.verdict);
            rows.push(json!({ "s": s, "p": p, "threshold": threshold, "series": series }));
        }
    }
    Ok(Output {
        summary,
        results: json!({ "family": family, "rows": rows }),
        files: vec![("distortion-scan.csv".into(), csv)],
    })
}

fn extend_cmd(a: &ExtendArgs, config: &mut RunConfig) -> Result<Output> {
    let s = a.s.clone().or_else(|| config.s.clone()).unwrap_or(Exponent::integer(2));
    let q = a.q.clone().or_else(|| config.exponents.q.clone()).unwrap_or(Exponent::integer(4));
    let direction = a.direction.map(Into::into).or(config.direction).unwrap_or(ExtensionDirection::In);
    let function = match (a.function, a.gamma) {
        (None, None) => config.function.unwrap_or(default_function(direction, 0.2)),
        (family, gamma) => {
            let gamma = gamma.or(config.function.and_then(function_gamma)).unwrap_or(0.2);
            match family {
                Some(FunctionArg::AngularJump) => TestFunction::AngularJump { gamma },
                Some(FunctionArg::RadialPower) => TestFunction::RadialPower { gamma },
                None => match config.function {
                    Some(TestFunction::RadialPower { .. }) => TestFunction::RadialPower { gamma },
                    Some(TestFunction::AngularJump { .. }) => TestFunction::AngularJump { gamma },
                    _ => default_function(direction, gamma),
                },
            }
        }
    };
    let r_u = a.ru.or(config.r_u).unwrap_or(DEFAULT_NEIGHBOURHOOD);
    let base = config.quadrature.unwrap_or(QuadratureSpec::new(64, 6));
    let spec = QuadratureSpec { n: a.n.unwrap_or(base.n), level: a.levels.unwrap_or(base.level), grading: base.grading };
    spec.validate()?;
    if s.is_infinite() {
        return Err(Error::Config("cusp degree must be finite".into()));
    }
    let (big_p, big_q) = extension_exponents(&Exponent::Infinite, &q, direction)?;
    config.s = Some(s.clone());
    config.exponents.q = Some(q.clone());
    config.exponents.p = Some(Exponent::Infinite);
    config.direction = Some(direction);
    config.function = Some(function);
    config.r_u = Some(r_u);
    config.quadrature = Some(spec);
    let report = norm_ratio(&function, s.to_f64(), &big_p, &big_q, r_u, direction, &spec)?;
    Ok(Output {
        summary: extension_summary(&report),
        results: to_json(&report)?,
        files: vec![("extend.csv".into(), ratio_csv(&report))],
    })
}

fn default_function(direction: ExtensionDirection, gamma: f64) -> TestFunction {
    match direction {
        ExtensionDirection::In => TestFunction::AngularJump { gamma },
        ExtensionDirection::Out => TestFunction::RadialPower { gamma },
    }
}

fn function_gamma(f: TestFunction) -> Option<f64> {
    match f {
        TestFunction::AngularJump { gamma } | TestFunction::RadialPower { gamma } => Some(gamma),
        _ => None,
    }
}

fn extension_summary(r: &ExtensionReport) -> String {
    let mut s = format!(
        "extension {} s={} {} P={} Q={} r_U={}\n",
        r.direction, r.s, r.function, r.big_p, r.big_q, r.r_u
    );
    if let Some((a, b)) = r.last_two() {
        let _ = writeln!(s, "last ratios {a:.6} {b:.6}: {:?}", r.verdict);
    } else {
        let _ = writeln!(s, "ratio series undefined: {:?}", r.verdict);
    }
    s
}

fn ratio_csv(r: &ExtensionReport) -> String {
    let mut csv = String::from("level,source_seminorm,extension_seminorm,ratio\n");
    for (k, ((src, ext), ratio)) in r
        .source_seminorm
        .values
        .iter()
        .zip(&r.extension_seminorm.values)
        .zip(&r.ratios)
        .enumerate()
    {
        let ratio = ratio.map(|v| format!("{v:e}")).unwrap_or_default();
        let _ = writeln!(csv, "{k},{src:e},{ext:e},{ratio}");
    }
    csv
}

fn rationals(list: &[Exponent], what: &str) -> Result<Vec<BigRational>> {
    list.iter()
        .map(|e| e.finite().cloned().ok_or_else(|| Error::Config(format!("{what} grid values must be finite"))))
        .collect()
}

fn sharpness_cmd(a: &SharpnessArgs, config: &mut RunConfig) -> Result<Output> {
    let ps = a.p.clone().or_else(|| config.grid.p.clone()).unwrap_or_else(|| parse_list("2,4"));
    let qs = a.q.clone().or_else(|| config.grid.q.clone()).unwrap_or_else(|| parse_list("3/2,2,3"));
    let ss = a.s.clone().or_else(|| config.grid.s.clone()).unwrap_or_else(|| parse_list("3/2,2,3,4"));
    let svg = !a.no_svg && config.svg.unwrap_or(true);
    config.grid = GridConfig { p: Some(ps.clone()), q: Some(qs.clone()), s: Some(ss.clone()) };
    config.svg = Some(svg);
    let table = threshold_scan(&rationals(&ps, "p")?, &rationals(&qs, "q")?, &rationals(&ss, "s")?)?;
    let mut files = vec![("sharpness.csv".to_string(), table.to_csv())];
    if svg {
        let q_max = qs.iter().map(Exponent::to_f64).fold(4.0, f64::max) + 1.0;
        let s_max = ss.iter().map(Exponent::to_f64).fold(4.0, f64::max) + 1.0;
        for p in rationals(&ps, "p")? {
            let name = format!("sharpness-p{}.svg", crate::exponent::format_rational(&p).replace('/', "_"));
            files.push((name, phase_diagram_svg(&p, q_max, s_max)?));
        }
    }
    let below = |c: &crate::sharpness::RuleCell| c.verdict == crate::sharpness::RuleVerdict::Below;
    let mut summary = format!("{} grid cells\n", table.cells.len());
    for c in &table.cells {
        let _ = writeln!(
            summary,
            "p={} q={} s={}: outward {} inward {} distortion {} fiber {}",
            c.p,
            c.q,
            c.s,
            c.outward.verdict,
            c.inward.verdict,
            c.distortion.verdict,
            c.fiber.verdict
        );
    }
    let extendable = table.cells.iter().filter(|c| below(&c.inward)).count();
    Ok(Output { summary, results: json!({ "table": table, "inward_below": extendable }), files })
}

fn classify_cmd(a: &ClassifyArgs, config: &mut RunConfig) -> Result<Output> {
    if let Some(kind) = &a.map {
        config.compose = None;
        config.map = Some(map_from_flags(kind, a.s, a.profile.as_deref())?);
    }
    let map_spec = config.map.clone();
    let map = config.map()?.ok_or_else(|| Error::Config("classify needs a map (--map or `map = {...}`)".into()))?;
    if config.domain.is_none() {
        let spec = map_spec.unwrap_or(MapSpec::Identity);
        config.domain = Some(spec.default_domain()?);
    }
    let region = config.domain.as_ref().expect("set above").build()?;
    let spec = config.quadrature(&a.quad, 128, 16);
    spec.validate()?;
    config.quadrature = Some(spec);
    let lambda = a.lambda.or(config.exponents.lambda);
    let (series, label): (IntegralSeries, String) = if let Some(lambda) = lambda {
        config.exponents.lambda = Some(lambda);
        (exp_integrability(map.as_ref(), &region, lambda, &spec)?, format!("exp({lambda}·K)"))
    } else {
        let p = a.p.clone().or_else(|| config.exponents.p.clone()).unwrap_or(Exponent::integer(2));
        config.exponents.p = Some(p.clone());
        if p.is_infinite() {
            let sup = distortion_sup(map.as_ref(), &region, &spec)?;
            return Ok(Output {
                summary: format!("{} on {}: essential sup estimate of K = {sup:e}\n", map.name(), region.describe()),
                results: json!({ "map": map.name(), "region": region.describe(), "ess_sup_estimate": sup }),
                files: Vec::new(),
            });
        }
        (integrate_distortion(map.as_ref(), &region, &p, &spec)?, format!("K^{p}"))
    };
    let mut csv = String::from("level,value\n");
    for (k, v) in series.values.iter().enumerate() {
        let _ = writeln!(csv, "{k},{v:e}");
    }
    Ok(Output {
        summary: format!(
            "∫ {label} over {} for {}: {}{}\n",
            region.describe(),
            map.name(),
            series.verdict,
            if series.overflow { " (overflow)" } else { "" }
        ),
        results: json!({ "map": map.name(), "series": series }),
        files: vec![("classify.csv".into(), csv)],
    })
}

fn map_from_flags(kind: &str, s: Option<f64>, profile: Option<&str>) -> Result<MapSpec> {
    let need_s = || s.ok_or_else(|| Error::Config(format!("map `{kind}` needs --s")));
    Ok(match kind {
        "identity" => MapSpec::Identity,
        "inversion" => MapSpec::Inversion,
        "diameter-reflection" => MapSpec::DiameterReflection,
        "angular-stretch" => MapSpec::AngularStretch { s: need_s()? },
        "cusp-reflection" => MapSpec::CuspReflection { s: need_s()? },
        "vertical-stretch" => MapSpec::VerticalStretch {
            profile: ProfileSpec::Named(profile.map(str::to_string).unwrap_or_else(|| "exp".into())),
        },
        other => return Err(Error::Config(format!("unknown map kind `{other}`"))),
    })
}

fn exponents_cmd(a: &ExponentArgs, config: &mut RunConfig) -> Result<Output> {
    let p = a.p.clone().or_else(|| config.exponents.p.clone()).unwrap_or(Exponent::Infinite);
    let q = a.q.clone().or_else(|| config.exponents.q.clone()).unwrap_or(Exponent::Infinite);
    let direction = a.direction.map(Into::into).or(config.direction).unwrap_or(ExtensionDirection::In);
    config.exponents.p = Some(p.clone());
    config.exponents.q = Some(q.clone());
    config.direction = Some(direction);
    let (big_p, big_q) = extension_exponents(&p, &q, direction)?;
    Ok(Output {
        summary: format!("P={big_p}, Q={big_q}\n"),
        results: json!({ "p": p, "q": q, "direction": direction, "P": big_p, "Q": big_q }),
        files: Vec::new(),
    })
}

fn l1_demo_cmd(a: &QuadArgs, config: &mut RunConfig) -> Result<Output> {
    let spec = config.quadrature(a, 128, 16);
    spec.validate()?;
    config.quadrature = Some(spec);
    let r = l1_quasidisk_demo(&spec)?;
    let mut summary = format!(
        "∫K dA over the exponential channel: {:.6} ({}), oracle {} (relative error {:.2}%)\n",
        r.distortion_integral.last(),
        r.distortion_integral.verdict,
        r.oracle,
        100.0 * r.relative_error
    );
    for f in &r.fibers {
        let _ = writeln!(summary, "fiber bound Q={}: {}", f.big_q, f.series.verdict);
    }
    let _ = writeln!(summary, "fiber bound Q=1: {}", r.q_one.verdict);
    let mut csv = series_csv_header(spec.level as usize + 1, "quantity", "verdict");
    let mut row = |name: String, s: &IntegralSeries| {
        let v: Vec<String> = s.values.iter().map(|x| format!("{x:e}")).collect();
        let _ = writeln!(csv, "{name},{},{}", v.join(","), s.verdict);
    };
    row("distortion_integral".into(), &r.distortion_integral);
    for f in &r.fibers {
        row(format!("fiber_Q{}", f.big_q), &f.series);
    }
    row("fiber_Q1".into(), &r.q_one);
    Ok(Output { summary, results: to_json(&r)?, files: vec![("l1-demo.csv".into(), csv)] })
}

fn report_cmd(a: &ReportArgs, out_dir: &Path) -> Result<String> {
    let paths: Vec<PathBuf> = if a.records.is_empty() {
        let mut found: Vec<PathBuf> = fs::read_dir(out_dir)
            .map_err(|e| Error::Precondition(format!("cannot read {}: {e}", out_dir.display())))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "json"))
            .collect();
        found.sort();
        found
    } else {
        a.records.clone()
    };
    if paths.is_empty() {
        return Err(Error::Precondition(format!("no run records in {}", out_dir.display())));
    }
    let mut out = String::new();
    for path in paths {
        let text = fs::read_to_string(&path)?;
        let record: RunRecord = serde_json::from_str(&text)
            .map_err(|e| Error::Precondition(format!("{} is not a run record: {e}", path.display())))?;
        let _ = writeln!(
            out,
            "{}: {} (cuspext {}{}), {:.3}s, {} files",
            path.display(),
            record.subcommand,
            record.version,
            if record.version == VERSION { "" } else { ", different version" },
            record.wall_clock_seconds,
            record.files.len()
        );
        for line in record_highlights(&record) {
            let _ = writeln!(out, "  {line}");
        }
    }
    Ok(out)
}

fn record_highlights(r: &RunRecord) -> Vec<String> {
    let v = &r.results;
    match r.subcommand.as_str() {
        "exponents" => vec![format!("P={}, Q={}", v["P"].as_str().unwrap_or("?"), v["Q"].as_str().unwrap_or("?"))],
        "extend" => vec![format!("verdict {}", v["verdict"].as_str().unwrap_or("?"))],
        "classify" => vec![format!("verdict {}", v["series"]["verdict"].as_str().unwrap_or("?"))],
        "distortion-scan" => v["rows"]
            .as_array()
            .map(|rows| {
                rows.iter()
                    .map(|row| {
                        format!(
                            "s={} p={}: {}",
                            row["s"].as_str().unwrap_or("?"),
                            row["p"].as_str().unwrap_or("?"),
                            row["series"]["verdict"].as_str().unwrap_or("?")
                        )
                    })
                    .collect()
            })
            .unwrap_or_default(),
        "l1-demo" => vec![format!(
            "∫K dA = {}, relative error {}",
            v["distortion_integral"]["values"].as_array().and_then(|a| a.last()).and_then(|x| x.as_f64()).unwrap_or(f64::NAN),
            v["relative_error"].as_f64().unwrap_or(f64::NAN)
        )],
        "sharpness" => vec![format!("{} cells", v["table"]["cells"].as_array().map_or(0, Vec::len))],
        _ => Vec::new(),
    }
}
