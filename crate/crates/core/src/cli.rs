//! Command-line front end. `run` parses arguments, executes one command and
//! returns the process exit code: 0 on success, 2 when a budget ran out or a
//! check fell outside its bound, 1 on errors.

use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::corpus::{self, Body, Class, CorpusFunction, ListFilter};
use crate::fubini::{fubini_compare, nullset_integral_check, FubiniOptions, FubiniReport};
use crate::geometry::Interval;
use crate::integrator::{
    integrate, partition_at, sstar_double_sum, IntegralResult, IntegrateOptions, Scheme, StrongGapRequest,
};
use crate::nullset::NullSet;
use crate::partitions::{write_jsonl, Corner, Discipline, TagStrategy, TaggedPartition};
use crate::value::{Integrand, Norm, VectorValue};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_BUDGET: i32 = 2;

/// Accepted range for `--max-depth`.
pub const MAX_DEPTH_RANGE: (usize, usize) = (1, 60);

/// Steps run by `nullset` when `--max-depth` is not given.
const NULLSET_DEFAULT_STEPS: usize = 12;

/// Variation growth over four distinct steps that triggers the
/// non-absolute-integrability diagnostic.
const VARIATION_GROWTH_FLAG: f64 = 1.2;

#[derive(Debug, Parser)]
#[command(name = "gaugeint", version, about = "Gauge integrals of vector-valued functions on intervals and rectangles")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Integrate a corpus function by gauge refinement.
    Integrate(RunArgs),
    /// Compare the double integral with both iterated integrals.
    Fubini(RunArgs),
    /// S* double sum over two generated partitions.
    Sstar(SstarArgs),
    /// Integrate the indicator of a corpus null set.
    Nullset(RunArgs),
    /// Inspect the corpus.
    Corpus {
        #[command(subcommand)]
        action: CorpusCommand,
    },
}

#[derive(Debug, Subcommand)]
pub enum CorpusCommand {
    List {
        #[arg(long)]
        json: bool,
        #[arg(long)]
        class: Option<ClassArg>,
        #[arg(long)]
        dim: Option<usize>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModeArg {
    Mcshane,
    Hk,
}

impl From<ModeArg> for Discipline {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Mcshane => Discipline::McShane,
            ModeArg::Hk => Discipline::Hk,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TagsArg {
    Center,
    NullAvoiding,
    Corner,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NormArg {
    Euclid,
    Max,
    Sum,
}

impl From<NormArg> for Norm {
    fn from(n: NormArg) -> Self {
        match n {
            NormArg::Euclid => Norm::Euclid,
            NormArg::Max => Norm::Max,
            NormArg::Sum => Norm::Sum,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutFormat {
    Json,
    Csv,
    Table,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ClassArg {
    Bochner,
    HkOnly,
    NullPerturbed,
}

impl From<ClassArg> for Class {
    fn from(c: ClassArg) -> Self {
        match c {
            ClassArg::Bochner => Class::Bochner,
            ClassArg::HkOnly => Class::HkOnly,
            ClassArg::NullPerturbed => Class::NullPerturbed,
        }
    }
}

/// Flags shared by the run commands. Every flag overrides the matching
/// field of `--config`.
#[derive(Debug, Clone, Default, Args)]
pub struct RunArgs {
    /// Corpus id; `nullset` also accepts `empty1d` and `empty2d`.
    #[arg(long = "fn")]
    pub function: Option<String>,
    #[arg(long)]
    pub mode: Option<ModeArg>,
    /// Refinement tolerance; defaults to the corpus entry's recommendation.
    #[arg(long)]
    pub tol: Option<f64>,
    /// Inner tolerance for `fubini`; defaults to a tenth of `--tol`.
    #[arg(long)]
    pub tol_inner: Option<f64>,
    /// Last refinement step attempted (1..=60).
    #[arg(long)]
    pub max_depth: Option<usize>,
    #[arg(long)]
    pub tags: Option<TagsArg>,
    #[arg(long)]
    pub norm: Option<NormArg>,
    #[arg(long)]
    pub out: Option<OutFormat>,
    /// Also measure the strong gap on the final partition.
    #[arg(long)]
    pub strong_gap: bool,
    /// Write the final partition as JSON lines.
    #[arg(long)]
    pub dump_partition: Option<PathBuf>,
    /// Write the report here instead of standard output.
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long)]
    pub threads: Option<usize>,
    /// JSON file with defaults for any of the flags.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct SstarArgs {
    #[command(flatten)]
    pub run: RunArgs,
    /// Halving depth of the first partition.
    #[arg(long)]
    pub mesh_p: Option<usize>,
    /// Halving depth of the second partition.
    #[arg(long)]
    pub mesh_q: Option<usize>,
    /// Tags of the second partition; the first uses `--tags`.
    #[arg(long)]
    pub tags_q: Option<TagsArg>,
}

/// Contents of a `--config` file.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConfigFile {
    #[serde(rename = "fn")]
    pub function: Option<String>,
    pub mode: Option<ModeArg>,
    pub tol: Option<f64>,
    pub tol_inner: Option<f64>,
    pub max_depth: Option<usize>,
    pub tags: Option<TagsArg>,
    pub norm: Option<NormArg>,
    pub out: Option<OutFormat>,
    pub strong_gap: Option<bool>,
    pub dump_partition: Option<PathBuf>,
    pub output: Option<PathBuf>,
    pub threads: Option<usize>,
    pub mesh_p: Option<usize>,
    pub mesh_q: Option<usize>,
    pub tags_q: Option<TagsArg>,
}

/// Fully resolved settings of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub command: String,
    pub function: String,
    pub discipline: Discipline,
    pub tol: f64,
    pub tol_inner: f64,
    pub max_depth: Option<usize>,
    pub tags: TagsArg,
    pub norm: NormArg,
    pub out: OutFormat,
    pub strong_gap: bool,
    pub dump_partition: Option<PathBuf>,
    pub output: Option<PathBuf>,
    pub threads: Option<usize>,
    pub mesh_p: usize,
    pub mesh_q: usize,
    pub tags_q: TagsArg,
}

fn load_config(path: Option<&Path>) -> Result<ConfigFile> {
    let Some(path) = path else { return Ok(ConfigFile::default()) };
    let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
}

impl RunConfig {
    fn resolve(command: &str, args: &RunArgs, extra: Option<&SstarArgs>) -> Result<Self> {
        let file = load_config(args.config.as_deref())?;
        let function = args.function.clone().or(file.function).ok_or_else(|| anyhow!("--fn is required"))?;
        let entry = corpus::lookup(&function).ok();
        let discipline = args
            .mode
            .or(file.mode)
            .map(Discipline::from)
            .unwrap_or_else(|| entry.map_or(Discipline::McShane, CorpusFunction::discipline));
        let default_tol = entry.map_or(crate::integrator::DEFAULT_TOL, |e| e.recommended_tol);
        let tol = args.tol.or(file.tol).unwrap_or(default_tol);
        let tol_inner = args.tol_inner.or(file.tol_inner).unwrap_or(tol / 10.0);
        for (name, t) in [("--tol", tol), ("--tol-inner", tol_inner)] {
            if !(t > 0.0 && t.is_finite()) {
                bail!("{name} must be positive and finite, got {t}");
            }
        }
        let max_depth = args.max_depth.or(file.max_depth);
        if let Some(d) = max_depth {
            if !(MAX_DEPTH_RANGE.0..=MAX_DEPTH_RANGE.1).contains(&d) {
                bail!("--max-depth must lie in [{}, {}], got {d}", MAX_DEPTH_RANGE.0, MAX_DEPTH_RANGE.1);
            }
        }
        let default_tags = match entry.map(CorpusFunction::default_tags) {
            Some(TagStrategy::NullAvoiding(_)) => TagsArg::NullAvoiding,
            _ => TagsArg::Center,
        };
        let threads = args.threads.or(file.threads);
        if threads == Some(0) {
            bail!("--threads must be at least 1");
        }
        Ok(RunConfig {
            command: command.to_string(),
            function,
            discipline,
            tol,
            tol_inner,
            max_depth,
            tags: args.tags.or(file.tags).unwrap_or(default_tags),
            norm: args.norm.or(file.norm).unwrap_or(NormArg::Euclid),
            out: args.out.or(file.out).unwrap_or(OutFormat::Json),
            strong_gap: args.strong_gap || file.strong_gap.unwrap_or(false),
            dump_partition: args.dump_partition.clone().or(file.dump_partition),
            output: args.output.clone().or(file.output),
            threads,
            mesh_p: extra.and_then(|e| e.mesh_p).or(file.mesh_p).unwrap_or(4),
            mesh_q: extra.and_then(|e| e.mesh_q).or(file.mesh_q).unwrap_or(5),
            tags_q: extra.and_then(|e| e.tags_q).or(file.tags_q).unwrap_or(TagsArg::Center),
        })
    }

    fn strategy(&self, tags: TagsArg, null_set: &NullSet) -> TagStrategy {
        match tags {
            TagsArg::Center => TagStrategy::Center,
            TagsArg::NullAvoiding => TagStrategy::NullAvoiding(null_set.clone()),
            TagsArg::Corner => TagStrategy::Corner(Corner::Lower),
        }
    }

    fn options<const D: usize>(&self, tags: TagStrategy) -> IntegrateOptions<D> {
        let mut o = IntegrateOptions { tags, norm: self.norm.into(), ..Default::default() };
        if let Some(d) = self.max_depth {
            o.max_depth = d;
        }
        o
    }
}

/// `integrate` report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntegrateReport {
    pub function: String,
    pub dim: usize,
    pub tags: TagsArg,
    pub norm: NormArg,
    pub exact: Option<VectorValue>,
    pub error_vs_exact: Option<f64>,
    pub result: IntegralResult,
    pub diagnostics: Vec<String>,
}

/// `fubini` report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FubiniRun {
    pub function: String,
    pub exact: Option<VectorValue>,
    pub report: FubiniReport,
}

/// `sstar` report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SstarReport {
    pub function: String,
    pub depth_p: usize,
    pub depth_q: usize,
    pub tags_p: TagsArg,
    pub tags_q: TagsArg,
    pub cells_p: usize,
    pub cells_q: usize,
    pub mesh_p: f64,
    pub mesh_q: f64,
    pub sum: f64,
    pub lipschitz: Option<f64>,
    pub bound: Option<f64>,
    pub within_bound: Option<bool>,
}

/// `nullset` report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NullsetReport {
    pub function: String,
    pub set: NullSet,
    pub tags: TagsArg,
    pub estimate: VectorValue,
    pub zero_at_every_depth: bool,
    pub within_tol: bool,
    pub result: IntegralResult,
}

/// Parse `args` (program name first) and run. The report goes to `stdout`
/// unless `--output` is given; errors go to standard error.
pub fn run<I, T>(args: I, stdout: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ERROR } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli, stdout) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            EXIT_ERROR
        }
    }
}

fn dispatch(cli: Cli, stdout: &mut dyn Write) -> Result<i32> {
    let (name, args, extra) = match &cli.command {
        Command::Corpus { action: CorpusCommand::List { json, class, dim } } => {
            return corpus_list(*json, *class, *dim, stdout);
        }
        Command::Integrate(a) => ("integrate", a, None),
        Command::Fubini(a) => ("fubini", a, None),
        Command::Nullset(a) => ("nullset", a, None),
        Command::Sstar(s) => ("sstar", &s.run, Some(s)),
    };
    let cfg = RunConfig::resolve(name, args, extra)?;
    let threads = cfg.threads.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().context("building thread pool")?;
    let (code, text) = pool.install(|| match name {
        "integrate" => cmd_integrate(&cfg),
        "fubini" => cmd_fubini(&cfg),
        "nullset" => cmd_nullset(&cfg),
        _ => cmd_sstar(&cfg),
    })?;
    match &cfg.output {
        Some(path) => std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))?,
        None => stdout.write_all(text.as_bytes())?,
    }
    Ok(code)
}

fn corpus_list(json: bool, class: Option<ClassArg>, dim: Option<usize>, out: &mut dyn Write) -> Result<i32> {
    let list = corpus::list(&ListFilter { class: class.map(Class::from), dim });
    if json {
        serde_json::to_writer_pretty(&mut *out, &list)?;
        writeln!(out)?;
    } else {
        for s in &list {
            let exact = s.exact_double.as_ref().map_or_else(|| "-".to_string(), VectorValue::to_string);
            writeln!(out, "{:<14} {}D {:<15} exact {:<24} {}", s.id, s.dim, format!("{:?}", s.class), exact, s.notes)?;
        }
    }
    Ok(EXIT_OK)
}

fn to_json<T: Serialize>(v: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(v)? + "\n")
}

fn csv_trace(r: &IntegralResult) -> Result<String> {
    let mut buf = Vec::new();
    r.write_csv(&mut buf)?;
    Ok(String::from_utf8(buf)?)
}

fn dump<const D: usize>(path: &Path, p: &TaggedPartition<D>) -> Result<()> {
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    let mut w = BufWriter::new(file);
    write_jsonl(p, &mut w)?;
    w.flush()?;
    Ok(())
}

fn diagnostics(r: &IntegralResult) -> Vec<String> {
    let mut out = Vec::new();
    if !r.converged {
        out.push(format!("stopped without settling: {:?} at step {}", r.stop, r.depth));
    }
    let distinct: Vec<_> = r.trace.iter().filter(|row| !row.repeated).collect();
    if distinct.len() >= 5 {
        let last = distinct[distinct.len() - 1];
        let earlier = distinct[distinct.len() - 5];
        if earlier.variation > 0.0 && last.variation >= VARIATION_GROWTH_FLAG * earlier.variation {
            out.push(format!(
                "variation sum grew from {:.6e} (step {}) to {:.6e} (step {}): diverging variation, not absolutely integrable along this sequence",
                earlier.variation, earlier.depth, last.variation, last.depth
            ));
        }
    }
    out
}

fn result_table(r: &IntegralResult) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{:>5} {:>12} {:>28} {:>12} {:>14}", "depth", "cells", "estimate", "gap", "variation");
    for row in &r.trace {
        let gap = row.gap.map_or_else(|| "-".to_string(), |g| format!("{g:.3e}"));
        let _ = writeln!(
            s,
            "{:>5} {:>12} {:>28} {:>12} {:>14.6e}{}",
            row.depth,
            row.cells,
            row.estimate.to_string(),
            gap,
            row.variation,
            if row.repeated { " (repeated)" } else { "" }
        );
    }
    let _ = writeln!(s, "value {} converged {} stop {:?}", r.value, r.converged, r.stop);
    s
}

fn cmd_integrate(cfg: &RunConfig) -> Result<(i32, String)> {
    let e = corpus::lookup(&cfg.function)?;
    let result = match &e.body {
        Body::One { f, domain, primitive } => {
            let scheme = e.scheme_1d()?;
            let mut opts = cfg.options::<1>(cfg.strategy(cfg.tags, &e.null_set));
            if cfg.strong_gap {
                opts.strong_gap = primitive.clone().map_or(StrongGapRequest::Estimated, StrongGapRequest::Exact);
            }
            run_integrate(f.as_ref(), domain, &scheme, cfg, &opts)?
        }
        Body::Two { f, domain, primitive, .. } => {
            let scheme = e.scheme_2d()?;
            let mut opts = cfg.options::<2>(cfg.strategy(cfg.tags, &e.null_set));
            if cfg.strong_gap {
                opts.strong_gap = primitive.clone().map_or(StrongGapRequest::Estimated, StrongGapRequest::Exact);
            }
            run_integrate(f.as_ref(), domain, &scheme, cfg, &opts)?
        }
    };
    let norm: Norm = cfg.norm.into();
    let report = IntegrateReport {
        function: e.id.to_string(),
        dim: e.dim(),
        tags: cfg.tags,
        norm: cfg.norm,
        exact: e.exact_double.clone(),
        error_vs_exact: e.exact_double.as_ref().map(|x| result.value.distance(x, norm)),
        diagnostics: diagnostics(&result),
        result,
    };
    for d in &report.diagnostics {
        eprintln!("note: {d}");
    }
    let code = if report.result.converged { EXIT_OK } else { EXIT_BUDGET };
    let text = match cfg.out {
        OutFormat::Json => to_json(&report)?,
        OutFormat::Csv => csv_trace(&report.result)?,
        OutFormat::Table => {
            let mut s = format!("{} ({:?}, {} tags)\n", report.function, report.result.discipline, cfg.tags.name());
            s += &result_table(&report.result);
            if let (Some(x), Some(err)) = (&report.exact, report.error_vs_exact) {
                let _ = writeln!(s, "exact {x} error {err:.3e}");
            }
            s
        }
    };
    Ok((code, text))
}

fn run_integrate<const D: usize>(
    f: &dyn Integrand<D>,
    domain: &Interval<D>,
    scheme: &Scheme<D>,
    cfg: &RunConfig,
    opts: &IntegrateOptions<D>,
) -> Result<IntegralResult> {
    let r = integrate(f, domain, cfg.discipline, scheme, cfg.tol, opts)?;
    if let Some(path) = &cfg.dump_partition {
        dump(path, &partition_at(domain, cfg.discipline, scheme, r.depth, opts)?)?;
    }
    Ok(r)
}

fn cmd_fubini(cfg: &RunConfig) -> Result<(i32, String)> {
    let e = corpus::lookup(&cfg.function)?;
    let Body::Two { f, domain, z1, z2, .. } = &e.body else {
        bail!("fubini needs a planar function; {} is one-dimensional", e.id);
    };
    let mut opts = FubiniOptions::new(cfg.discipline, cfg.tol);
    opts.tol_inner = cfg.tol_inner;
    opts.settings.tags = cfg.strategy(cfg.tags, &e.null_set);
    opts.settings.norm = cfg.norm.into();
    if let Some(d) = cfg.max_depth {
        opts.settings.max_depth = d;
    }
    opts.settings.singular = e.singular.clone();
    opts.settings.profile = e.profile.clone();
    let report = fubini_compare(f.clone(), domain, z1, z2, &opts)?;
    if let Some(path) = &cfg.dump_partition {
        let scheme = e.scheme_2d()?;
        let o = cfg.options::<2>(opts.settings.tags.clone());
        dump(path, &partition_at(domain, cfg.discipline, &scheme, report.double.depth, &o)?)?;
    }
    let code = if report.within_bound { EXIT_OK } else { EXIT_BUDGET };
    let run = FubiniRun { function: e.id.to_string(), exact: e.exact_double.clone(), report };
    let text = match cfg.out {
        OutFormat::Json => to_json(&run)?,
        OutFormat::Table => format!("{}\n{}", run.function, run.report.table()),
        OutFormat::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            let d = run.report.double.value.dim();
            let mut header = vec!["integral".to_string()];
            header.extend((0..d).map(|i| format!("value_{i}")));
            header.extend(["depth", "cells", "gap", "bound"].map(String::from));
            w.write_record(&header)?;
            let rows = [
                ("double", &run.report.double, None),
                ("iterated_xy", &run.report.iterated_xy, Some((run.report.gap_xy, run.report.bound_xy))),
                ("iterated_yx", &run.report.iterated_yx, Some((run.report.gap_yx, run.report.bound_yx))),
            ];
            for (name, r, gap) in rows {
                let mut rec = vec![name.to_string()];
                rec.extend(r.value.0.iter().map(f64::to_string));
                rec.push(r.depth.to_string());
                rec.push(r.cells.to_string());
                rec.push(gap.map_or_else(String::new, |g| g.0.to_string()));
                rec.push(gap.map_or_else(String::new, |g| g.1.to_string()));
                w.write_record(&rec)?;
            }
            String::from_utf8(w.into_inner()?)?
        }
    };
    Ok((code, text))
}

impl TagsArg {
    fn name(self) -> &'static str {
        match self {
            TagsArg::Center => "center",
            TagsArg::NullAvoiding => "null-avoiding",
            TagsArg::Corner => "corner",
        }
    }
}

fn cmd_nullset(cfg: &RunConfig) -> Result<(i32, String)> {
    let (set, dim) = match cfg.function.as_str() {
        "empty1d" => (NullSet::Empty, 1),
        "empty2d" => (NullSet::Empty, 2),
        id => {
            let e = corpus::lookup(id)?;
            if e.null_set.is_empty() {
                bail!("{id} declares no null set");
            }
            (e.null_set.clone(), e.dim())
        }
    };
    let strategy = cfg.strategy(cfg.tags, &set);
    let steps = cfg.max_depth.unwrap_or(NULLSET_DEFAULT_STEPS);
    let result = if dim == 1 {
        let dom = Interval::<1>::unit();
        let r = nullset_integral_check(&set, &dom, cfg.discipline, &strategy, cfg.tol, steps)?;
        if let Some(path) = &cfg.dump_partition {
            dump(path, &partition_at(&dom, cfg.discipline, &Scheme::halving(dom), r.depth, &cfg.options::<1>(strategy))?)?;
        }
        r
    } else {
        let dom = Interval::<2>::unit();
        let r = nullset_integral_check(&set, &dom, cfg.discipline, &strategy, cfg.tol, steps)?;
        if let Some(path) = &cfg.dump_partition {
            dump(path, &partition_at(&dom, cfg.discipline, &Scheme::halving(dom), r.depth, &cfg.options::<2>(strategy))?)?;
        }
        r
    };
    let zero_at_every_depth = result.trace.iter().all(|row| row.estimate.0.iter().all(|&x| x == 0.0));
    let estimate = result.value.clone();
    let within_tol = estimate.norm(cfg.norm.into()) <= cfg.tol;
    if !zero_at_every_depth {
        let hits = result.trace.iter().filter(|row| row.estimate.0.iter().any(|&x| x != 0.0)).count();
        eprintln!("note: {hits} of {} steps had tags on the set", result.trace.len());
    }
    let report =
        NullsetReport { function: cfg.function.clone(), set, tags: cfg.tags, estimate, zero_at_every_depth, within_tol, result };
    let code = if within_tol { EXIT_OK } else { EXIT_BUDGET };
    let text = match cfg.out {
        OutFormat::Json => to_json(&report)?,
        OutFormat::Csv => csv_trace(&report.result)?,
        OutFormat::Table => format!(
            "indicator of the null set of {} ({} tags)\n{}zero at every step: {}\n",
            report.function,
            cfg.tags.name(),
            result_table(&report.result),
            report.zero_at_every_depth
        ),
    };
    Ok((code, text))
}

fn cmd_sstar(cfg: &RunConfig) -> Result<(i32, String)> {
    let e = corpus::lookup(&cfg.function)?;
    let norm: Norm = cfg.norm.into();
    let sp = cfg.strategy(cfg.tags, &e.null_set);
    let sq = cfg.strategy(cfg.tags_q, &e.null_set);
    let (sum, cells_p, cells_q, mesh_p, mesh_q, measure) = match &e.body {
        Body::One { f, domain, .. } => {
            let s = Scheme::halving(*domain);
            let p = partition_at(domain, cfg.discipline, &s, cfg.mesh_p, &cfg.options::<1>(sp))?;
            let q = partition_at(domain, cfg.discipline, &s, cfg.mesh_q, &cfg.options::<1>(sq))?;
            (sstar_double_sum(f.as_ref(), &p, &q, norm)?, p.len(), q.len(), p.mesh(), q.mesh(), domain.measure())
        }
        Body::Two { f, domain, .. } => {
            let s = Scheme::halving(*domain);
            let p = partition_at(domain, cfg.discipline, &s, cfg.mesh_p, &cfg.options::<2>(sp))?;
            let q = partition_at(domain, cfg.discipline, &s, cfg.mesh_q, &cfg.options::<2>(sq))?;
            (sstar_double_sum(f.as_ref(), &p, &q, norm)?, p.len(), q.len(), p.mesh(), q.mesh(), domain.measure())
        }
    };
    let lipschitz = e.lipschitz_for(norm);
    let bound = lipschitz.map(|l| l * (mesh_p + mesh_q) * measure);
    let report = SstarReport {
        function: e.id.to_string(),
        depth_p: cfg.mesh_p,
        depth_q: cfg.mesh_q,
        tags_p: cfg.tags,
        tags_q: cfg.tags_q,
        cells_p,
        cells_q,
        mesh_p,
        mesh_q,
        sum,
        lipschitz,
        bound,
        within_bound: bound.map(|b| sum <= b),
    };
    let text = match cfg.out {
        OutFormat::Json => to_json(&report)?,
        OutFormat::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.serialize(&report)?;
            String::from_utf8(w.into_inner()?)?
        }
        OutFormat::Table => {
            let mut s = format!(
                "{}: P depth {} ({} tags, {} cells, mesh {}), Q depth {} ({} tags, {} cells, mesh {})\n",
                report.function,
                report.depth_p,
                report.tags_p.name(),
                report.cells_p,
                report.mesh_p,
                report.depth_q,
                report.tags_q.name(),
                report.cells_q,
                report.mesh_q
            );
            let _ = writeln!(s, "double sum {:.6e}", report.sum);
            if let Some(b) = report.bound {
                let _ = writeln!(s, "mesh bound {b:.6e} ({})", if sum <= b { "within" } else { "exceeded" });
            }
            s
        }
    };
    Ok((EXIT_OK, text))
}
