//! `fspace` command line: norms, classification, experiments, counterexamples
//! and corpus generation.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use fspace_core::composition_lab::{self, ComposeSlot, LipschitzScaler};
use fspace_core::differences::{self, GrowthReport};
use fspace_core::faber::hat_eval;
use fspace_core::fubini;
use fspace_core::grid::{generate_corpus, CorpusSpec};
use fspace_core::norms::{self, NormKind};
use fspace_core::report::ReportConfig;
use fspace_core::spaces::{self, Family, ScalerMeta};
use fspace_core::truncation_lab::{self, EquivalenceReport, Operator};
use fspace_core::{Error, GridBox, GridFunction, SpaceParams};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_PRECONDITION: i32 = 3;

#[derive(Parser, Debug)]
#[command(name = "fspace", version, about = "Discrete Besov and Triebel-Lizorkin norm experiments")]
pub struct Cli {
    /// Worker threads; results do not depend on this.
    #[arg(long, global = true, env = "FSPACE_THREADS")]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Evaluate one discrete norm of a grid function.
    Norm {
        #[arg(long)]
        kind: NormKind,
        #[arg(long)]
        space: SpaceParams,
        #[arg(long)]
        input: PathBuf,
    },
    /// Classify a parameter point for truncation or composition properties.
    Classify {
        #[arg(long)]
        space: SpaceParams,
        /// Scaler JSON; switches to the composition classifier.
        #[arg(long)]
        scaler: Option<PathBuf>,
        /// Range `lo:hi` on which the scaler is validated.
        #[arg(long, default_value = "-4:4")]
        range: String,
    },
    /// Run a corpus experiment and write a JSON report.
    Experiment {
        which: ExperimentKind,
        #[command(flatten)]
        args: ExperimentArgs,
    },
    /// Closed-form counterexample tables.
    Counterexample {
        which: CounterexampleKind,
        #[arg(long)]
        space: SpaceParams,
        #[arg(long, default_value_t = 10)]
        jmax: u32,
        /// CSV destination; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Growth diagnostics of partial difference norms.
    Diagnose {
        which: DiagnoseKind,
        #[arg(long)]
        target: Target,
        #[arg(long)]
        space: SpaceParams,
        #[arg(long)]
        input: Option<PathBuf>,
        /// Difference order; 1 for chiQ, 2 for hat by default.
        #[arg(long)]
        order: Option<u32>,
        #[arg(long)]
        level: Option<u32>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Corpus management.
    Corpus {
        which: CorpusAction,
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        level: Option<u32>,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum ExperimentKind {
    Trunc,
    Compose,
    Fubini,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum CounterexampleKind {
    HaarScaling,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum DiagnoseKind {
    Membership,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum CorpusAction {
    Generate,
}

#[derive(Clone, Copy, Debug, PartialEq, ValueEnum)]
pub enum Target {
    #[value(name = "chiQ", alias = "chiq")]
    ChiQ,
    Hat,
    File,
}

#[derive(Args, Debug)]
pub struct ExperimentArgs {
    #[arg(long)]
    pub space: SpaceParams,
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long = "norm-kind")]
    pub norm_kind: NormKind,
    #[arg(long)]
    pub scaler: Option<PathBuf>,
    /// Overrides the level in the corpus file.
    #[arg(long)]
    pub level: Option<u32>,
    /// `abs|pos|neg` for trunc, `g|abs-g` for compose.
    #[arg(long)]
    pub operator: Option<String>,
    #[arg(long)]
    pub out: PathBuf,
    /// Optional per-function CSV with columns `tag,norm_f,norm_T,ratio`.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

fn default_level() -> u32 {
    9
}

/// Corpus file: a generator spec plus the grid it is sampled on.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CorpusFile {
    #[serde(flatten)]
    pub spec: CorpusSpec,
    #[serde(default = "default_level")]
    pub level: u32,
    #[serde(default)]
    pub dim: Option<usize>,
    #[serde(default)]
    pub bbox: Option<GridBox>,
}

impl CorpusFile {
    fn load(path: &Path) -> Result<Self> {
        let text = read(path)?;
        serde_json::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())).into())
    }

    fn generate(&self, level: Option<u32>, dim: Option<usize>) -> Result<(u32, Vec<GridFunction>)> {
        let level = level.unwrap_or(self.level);
        let dim = dim.or(self.dim).unwrap_or(1);
        if let Some(d) = self.dim {
            if d != dim {
                bail!(Error::InvalidParameter(format!("corpus dimension {d} does not match space dimension {dim}")));
            }
        }
        let bbox = self.bbox.clone().unwrap_or_else(|| GridBox::unit(dim));
        Ok((level, generate_corpus(&self.spec, level, &bbox, dim)?))
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

fn write(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    }
    fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => write(p, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn load_grid(path: &Path) -> Result<GridFunction> {
    let text = read(path)?;
    GridFunction::from_json(&text).map_err(|e| anyhow::Error::new(e).context(path.display().to_string()))
}

fn load_scaler(path: &Path) -> Result<LipschitzScaler> {
    Ok(LipschitzScaler::from_json(&read(path)?)?)
}

fn parse_range(text: &str) -> Result<(f64, f64)> {
    let parsed = text.split_once(':').and_then(|(a, b)| Some((a.trim().parse().ok()?, b.trim().parse().ok()?)));
    match parsed {
        Some((lo, hi)) if lo < hi => Ok((lo, hi)),
        _ => bail!(Error::Parse(format!("range `{text}` is not lo:hi with lo < hi"))),
    }
}

fn pretty<T: Serialize>(value: &T) -> String {
    let mut text = serde_json::to_string_pretty(value).expect("reports serialize");
    text.push('\n');
    text
}

fn cmd_norm(kind: NormKind, sp: &SpaceParams, input: &Path) -> Result<()> {
    let f = load_grid(input)?;
    let v = norms::evaluate(kind, &f, sp)?;
    println!("{}", v.value);
    for flag in &v.flags {
        println!("note: {flag}");
    }
    Ok(())
}

fn cmd_classify(sp: &SpaceParams, scaler: Option<&Path>, range: &str) -> Result<()> {
    let text = match scaler {
        None => pretty(&spaces::truncation_verdict(sp)?),
        Some(path) => {
            let g = load_scaler(path)?;
            let range = parse_range(range)?;
            let span = range.1 - range.0;
            composition_lab::validate_scaler(&g, range, span * 1e-4)?;
            let (finite, _) = composition_lab::gprime_seminorm(&g, range, sp.p)?;
            let meta = ScalerMeta { is_lipschitz_scaling: true, gprime_seminorm_finite: finite };
            pretty(&spaces::composition_verdict(sp, meta)?)
        }
    };
    print!("{text}");
    Ok(())
}

#[derive(Serialize)]
struct CompositionOutput<'a> {
    config: &'a ReportConfig,
    #[serde(flatten)]
    report: &'a composition_lab::CompositionReport,
}

fn cmd_experiment(which: ExperimentKind, a: &ExperimentArgs) -> Result<()> {
    let file = CorpusFile::load(&a.corpus)?;
    let (_, corpus) = file.generate(a.level, Some(a.space.n))?;
    let sp = &a.space;
    let (config, json, equivalence): (ReportConfig, String, EquivalenceReport) = match which {
        ExperimentKind::Trunc => {
            let op: Operator = a.operator.as_deref().unwrap_or("abs").parse()?;
            let mut r = truncation_lab::ratio_experiment(&corpus, a.norm_kind, sp, op)?;
            r.config.corpus = Some(file.spec.clone());
            (r.config.clone(), pretty(&r), r)
        }
        ExperimentKind::Compose => {
            let path = a.scaler.as_deref().ok_or_else(|| Error::InvalidParameter("compose needs --scaler".into()))?;
            let g = load_scaler(path)?;
            let slot = match a.operator.as_deref().unwrap_or("g") {
                "g" => ComposeSlot::G,
                "abs-g" => ComposeSlot::AbsG,
                other => bail!(Error::UnknownKind(other.to_string())),
            };
            let mut r = composition_lab::composition_experiment(&corpus, &g, a.norm_kind, sp, slot)?;
            r.equivalence.config.corpus = Some(file.spec.clone());
            let config = r.equivalence.config.clone();
            let json = pretty(&CompositionOutput { config: &config, report: &r });
            (config, json, r.equivalence)
        }
        ExperimentKind::Fubini => {
            let mut rows = Vec::with_capacity(corpus.len());
            for f in &corpus {
                let sliced = fubini::fubini_norm(f, sp, a.norm_kind)?.total;
                let direct = fspace_core::oscillation::b_osc_norm(f, sp.s, sp.p, sp.q)?;
                rows.push((f.tag().to_string(), direct, sliced));
            }
            let level = corpus.first().map_or(0, |f| f.level());
            let config = ReportConfig::new(*sp, a.norm_kind.name(), level, Some(file.spec.clone())).with_operator("fubini");
            let r = EquivalenceReport::from_norms(config.clone(), rows)?;
            (config, pretty(&r), r)
        }
    };
    debug_assert_eq!(config, equivalence.config);
    write(&a.out, &json)?;
    if let Some(csv) = &a.csv {
        write(csv, &equivalence.to_csv())?;
    }
    eprintln!(
        "{} functions, ratio in [{:.6}, {:.6}], spread {:.6}",
        equivalence.rows.len(),
        equivalence.min,
        equivalence.max,
        equivalence.spread
    );
    Ok(())
}

fn cmd_counterexample(sp: &SpaceParams, jmax: u32, out: Option<&Path>) -> Result<()> {
    let rows = truncation_lab::counterexample_scaling(sp.s, sp.p, sp.q, sp.n, jmax)?;
    emit(out, &truncation_lab::counterexample_csv(&rows))
}

#[derive(Serialize)]
struct MembershipOutput {
    config: ReportConfig,
    target: String,
    order: u32,
    report: GrowthReport,
}

fn cmd_membership(
    target: Target,
    sp: &SpaceParams,
    input: Option<&Path>,
    order: Option<u32>,
    level: Option<u32>,
    out: Option<&Path>,
) -> Result<()> {
    if sp.family != Family::B {
        bail!(Error::InvalidParameter("membership diagnostics use the difference norm of B spaces".into()));
    }
    let n = sp.n;
    let default_level = match n {
        1 => 12,
        2 => 7,
        _ => 5,
    };
    let level = level.unwrap_or(default_level);
    let bbox = GridBox::new(vec![-1; n], 3);
    let (f, default_order) = match target {
        Target::ChiQ => {
            let f = GridFunction::sample(n, level, bbox, "chiQ", |x| {
                if x.iter().all(|t| (0.0..=1.0).contains(t)) { 1.0 } else { 0.0 }
            })?;
            (f, 1)
        }
        Target::Hat => {
            let f = GridFunction::sample(n, level, bbox, "hat", |x| x.iter().map(|&t| hat_eval(0, 0, t)).product())?;
            (f, 2)
        }
        Target::File => {
            let path = input.ok_or_else(|| Error::InvalidParameter("--target file needs --input".into()))?;
            let f = load_grid(path)?;
            if f.dim() != n {
                bail!(Error::InvalidParameter(format!("input dimension {} does not match n = {n}", f.dim())));
            }
            (f, if sp.s < 1.0 { 1 } else { 2 })
        }
    };
    let order = order.unwrap_or(default_order);
    let report = differences::membership_diagnostic(&f, sp.s, sp.p, sp.q, order)?;
    let config = ReportConfig::new(*sp, "diff", f.level(), None);
    let target = f.tag().to_string();
    emit(out, &pretty(&MembershipOutput { config, target, order, report }))
}

#[derive(Serialize)]
struct CorpusManifest<'a> {
    artifact_version: &'a str,
    corpus: &'a CorpusFile,
    files: Vec<String>,
}

fn cmd_corpus(spec: &Path, out: &Path, level: Option<u32>) -> Result<()> {
    let mut file = CorpusFile::load(spec)?;
    let (level, corpus) = file.generate(level, None)?;
    file.level = level;
    fs::create_dir_all(out).with_context(|| format!("cannot create {}", out.display()))?;
    let mut files = Vec::with_capacity(corpus.len());
    for (i, f) in corpus.iter().enumerate() {
        let name = format!("{i:05}.json");
        write(&out.join(&name), &f.to_json())?;
        files.push(name);
    }
    let manifest = CorpusManifest { artifact_version: fspace_core::report::ARTIFACT_VERSION, corpus: &file, files };
    write(&out.join("manifest.json"), &pretty(&manifest))?;
    eprintln!("wrote {} functions to {}", corpus.len(), out.display());
    Ok(())
}

fn dispatch(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Norm { kind, space, input } => cmd_norm(*kind, space, input),
        Command::Classify { space, scaler, range } => cmd_classify(space, scaler.as_deref(), range),
        Command::Experiment { which, args } => cmd_experiment(*which, args),
        Command::Counterexample { which: CounterexampleKind::HaarScaling, space, jmax, out } => {
            cmd_counterexample(space, *jmax, out.as_deref())
        }
        Command::Diagnose { which: DiagnoseKind::Membership, target, space, input, order, level, out } => {
            cmd_membership(*target, space, input.as_deref(), *order, *level, out.as_deref())
        }
        Command::Corpus { which: CorpusAction::Generate, spec, out, level } => cmd_corpus(spec, out, *level),
    }
}

/// Exit code for a failed command.
pub fn exit_code(err: &anyhow::Error) -> i32 {
    match err.downcast_ref::<Error>() {
        Some(e) if e.is_precondition() => EXIT_PRECONDITION,
        _ => EXIT_VALIDATION,
    }
}

/// Parses `args` (program name first) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_VALIDATION } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be positive");
            return EXIT_VALIDATION;
        }
        // A second call in the same process keeps the first pool.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    match dispatch(&cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e:#}");
            exit_code(&e)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn range_parsing() {
        assert_eq!(parse_range("-4:4").unwrap(), (-4.0, 4.0));
        assert!(parse_range("4:-4").is_err());
        assert!(parse_range("x").is_err());
    }

    #[test]
    fn exit_codes_follow_error_kind() {
        let pre = anyhow::Error::new(Error::Precondition { message: "m".into(), citation: "c".into() });
        assert_eq!(exit_code(&pre), EXIT_PRECONDITION);
        let bad = anyhow::Error::new(Error::Parse("x".into()));
        assert_eq!(exit_code(&bad), EXIT_VALIDATION);
        assert_eq!(exit_code(&anyhow::anyhow!("io")), EXIT_VALIDATION);
    }

    #[test]
    fn corpus_file_defaults() {
        let f: CorpusFile = serde_json::from_str(r#"{"seed":1,"count":2,"kind":"haar-step"}"#).unwrap();
        assert_eq!(f.level, 9);
        let (level, fs) = f.generate(Some(4), Some(2)).unwrap();
        assert_eq!((level, fs.len(), fs[0].dim()), (4, 2, 2));
        let fixed: CorpusFile = serde_json::from_str(r#"{"seed":1,"count":2,"kind":"haar-step","dim":1}"#).unwrap();
        assert!(fixed.generate(None, Some(2)).is_err());
    }

    #[test]
    fn unknown_flag_is_validation_error() {
        assert_eq!(run(["fspace", "classify", "--bogus"]), EXIT_VALIDATION);
        assert_eq!(run(["fspace", "classify", "--space", "B:0.75:2:2"]), EXIT_VALIDATION);
    }
}
