//! Command-line front end: body-spec parsing, experiment dispatch, CSV/JSON
//! emission, exit-code contract.
//!
//! Exit codes: 0 pass, 1 a verifier found violations, 2 usage or parse
//! error, 3 numerical failure. Output is byte-identical across reruns with
//! the same configuration and seed; when `--out` is given the file is
//! written atomically (temp file + rename).

use crate::bodies::{BodyFamily, BodyMetrics};
use crate::ellipsoid::Ellipsoid;
use crate::experiments::{
    self, PLimitFamily, SweepRecord, VerdictReport,
};
use crate::sampling::{McEstimate, RngStream};
use crate::Error;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::path::PathBuf;

/// Numerical convex-geometry toolkit: shape parameters, quermassintegrals,
/// and slicing-ratio experiments for ellipsoids and polytope families.
#[derive(Debug, Parser)]
#[command(name = "quermass", version, max_term_width = 100)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compute the metrics row (volume, surface, r, R, w, M, p, q, t) of one body.
    Compute {
        /// Body spec: ball:R | cube:h | box:s,a,n | wl1:s,n | ellipsoid:a1,...,an
        body: String,
        /// Ambient dimension for ball/cube specs (others carry their own).
        #[arg(long)]
        n: Option<usize>,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Run a theorem verifier; exits 0 iff no violations.
    Verify {
        target: VerifyTarget,
        /// Body spec for body-specific verifiers (positive-bound, slicing-ratio).
        body: Option<String>,
        /// Ambient (or maximum) dimension, where the verifier needs one.
        #[arg(long)]
        n: Option<usize>,
        /// Section codimension / fixed section dimension, per verifier.
        #[arg(long)]
        k: Option<usize>,
        /// Number of random trials.
        #[arg(long)]
        trials: Option<u64>,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Run a parameter sweep; one output row per grid point.
    Sweep {
        name: SweepName,
        /// Ambient dimension.
        #[arg(long)]
        n: Option<usize>,
        /// Section codimension (quermass-slicing).
        #[arg(long)]
        k: Option<usize>,
        /// Quermassintegral index (quermass-slicing).
        #[arg(long)]
        j: Option<usize>,
        /// Comma-separated r grid.
        #[arg(long)]
        r: Option<String>,
        /// Comma-separated a grid.
        #[arg(long)]
        a: Option<String>,
        /// Comma-separated s grid, or a single fixed s where the sweep is over a.
        #[arg(long)]
        s: Option<String>,
        #[command(flatten)]
        common: CommonArgs,
    },
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// RNG seed; echoed into the output.
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    /// Monte-Carlo samples per estimate.
    #[arg(long, default_value_t = 100_000)]
    pub samples: u64,
    /// Output path (defaults to stdout).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// csv (default for compute/sweep) or json (default for verify).
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum VerifyTarget {
    /// Section semi-axes interlace the body's semi-axes.
    Interlacing,
    /// No Haar hyperplane section beats the one orthogonal to the shortest axis.
    ExtremalSection,
    /// S(K)/|K| <= n/(n-k) t(K) max_H S(K∩H)/|K∩H| on an ellipsoid.
    PositiveBound,
    /// Volume-normalized slicing ratio obeys the displayed ellipsoid bound.
    SlicingRatio,
    /// No direction beats the known maximal cube-section perimeter at n = 3.
    CubeSection,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SweepName {
    /// Surface slicing ratio along a_1 = r^-(n-1), rest r.
    SurfaceSlicing,
    /// W_j slicing ratio on the revolution family E_{r, r^-(n-1)}.
    QuermassSlicing,
    /// q along the family a_1..a_{n-1} = a, a_n = a^-(n-1).
    QUnbounded,
    /// p(P_s)/n^{3/2} over s on the weighted-l1 family.
    PWl1,
    /// p(P_{a,s})/sqrt(n) over a at fixed s on the box family.
    PBox,
    /// S r / |P_{a,s}| over a at fixed s, against 1 + (n-1)s/a.
    BoxInradius,
}

/// Echo block written at the head of every JSON output; parsing the emitted
/// JSON reproduces this struct exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub command: String,
    pub target: String,
    pub body: Option<String>,
    pub n: Option<usize>,
    pub k: Option<usize>,
    pub j: Option<usize>,
    pub r: Option<Vec<f64>>,
    pub a: Option<Vec<f64>>,
    pub s: Option<Vec<f64>>,
    pub trials: Option<u64>,
    pub seed: u64,
    pub samples: u64,
    pub format: String,
}

/// Finished run: the bytes to emit and the violation count driving the exit
/// code.
pub struct RunOutput {
    pub bytes: Vec<u8>,
    pub violations: u64,
}

/// Maps a library error to the exit-code contract: 2 for usage/parse/domain
/// problems, 3 for numerical failures.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Parse { .. }
        | Error::Domain(_)
        | Error::Dimension(_)
        | Error::InvalidBody(_) => 2,
        _ => 3,
    }
}

/// Machine-readable error record emitted on stderr before a nonzero exit.
pub fn error_record(err: &Error) -> String {
    let payload = serde_json::json!({
        "error": err.to_string(),
        "exit_code": exit_code(err),
    });
    format!("{payload}\n")
}

/// Parses the body grammar
/// `ball:R | cube:h | box:s,a,n | wl1:s,n | ellipsoid:a1,...,an`
/// with an optional `@frame=identity` suffix. `ambient` supplies the
/// dimension for ball/cube specs (default 3). Errors carry the byte
/// position of the first offending token.
pub fn parse_body_spec(text: &str, ambient: Option<usize>) -> Result<BodyFamily, Error> {
    let (spec, frame) = match text.find('@') {
        Some(i) => (&text[..i], Some((i, &text[i + 1..]))),
        None => (text, None),
    };
    if let Some((pos, frame)) = frame {
        if frame != "frame=identity" {
            return Err(Error::Parse {
                position: pos,
                message: format!("unsupported frame clause '{frame}'; only @frame=identity"),
            });
        }
    }
    let colon = spec.find(':').ok_or_else(|| Error::Parse {
        position: 0,
        message: "expected 'kind:params', e.g. ball:1 or ellipsoid:1,2,3".into(),
    })?;
    let kind = &spec[..colon];
    let params = parse_float_list(&spec[colon + 1..], colon + 1)?;
    let dim_of = |x: f64, pos: usize| -> Result<usize, Error> {
        if x.fract() != 0.0 || x < 1.0 || x > 64.0 {
            Err(Error::Parse { position: pos, message: format!("invalid dimension {x}") })
        } else {
            Ok(x as usize)
        }
    };
    let arity = |want: usize| -> Result<(), Error> {
        if params.len() == want {
            Ok(())
        } else {
            Err(Error::Parse {
                position: colon + 1,
                message: format!("{kind} takes {want} parameter(s), got {}", params.len()),
            })
        }
    };
    match kind {
        "ball" => {
            arity(1)?;
            BodyFamily::ball(ambient.unwrap_or(3), params[0].1)
        }
        "cube" => {
            arity(1)?;
            BodyFamily::cube(ambient.unwrap_or(3), params[0].1)
        }
        "box" => {
            arity(3)?;
            let n = dim_of(params[2].1, params[2].0)?;
            BodyFamily::slab_box(n, params[0].1, params[1].1)
        }
        "wl1" => {
            arity(2)?;
            let n = dim_of(params[1].1, params[1].0)?;
            BodyFamily::weighted_l1(n, params[0].1)
        }
        "ellipsoid" => {
            if params.is_empty() {
                return Err(Error::Parse {
                    position: colon + 1,
                    message: "ellipsoid needs at least one axis".into(),
                });
            }
            let axes: Vec<f64> = params.iter().map(|&(_, v)| v).collect();
            Ok(BodyFamily::EllipsoidRef(Ellipsoid::axis_aligned(axes)?))
        }
        other => Err(Error::Parse {
            position: 0,
            message: format!(
                "unknown body kind '{other}'; expected ball, cube, box, wl1, or ellipsoid"
            ),
        }),
    }
}

/// Parses a comma-separated float list, returning (byte position, value)
/// pairs; `offset` shifts the reported positions into the caller's string.
fn parse_float_list(text: &str, offset: usize) -> Result<Vec<(usize, f64)>, Error> {
    let mut out = Vec::new();
    let mut pos = 0;
    for token in text.split(',') {
        let v: f64 = token.trim().parse().map_err(|_| Error::Parse {
            position: offset + pos,
            message: format!("expected a number, got '{token}'"),
        })?;
        if !v.is_finite() {
            return Err(Error::Parse {
                position: offset + pos,
                message: format!("non-finite value '{token}'"),
            });
        }
        out.push((offset + pos, v));
        pos += token.len() + 1;
    }
    Ok(out)
}

fn required<T>(value: Option<T>, flag: &str) -> Result<T, Error> {
    value.ok_or_else(|| Error::Parse {
        position: 0,
        message: format!("missing required flag --{flag}"),
    })
}

fn single(values: &[f64], flag: &str) -> Result<f64, Error> {
    if values.len() == 1 {
        Ok(values[0])
    } else {
        Err(Error::Parse {
            position: 0,
            message: format!("--{flag} takes exactly one value here, got {}", values.len()),
        })
    }
}

/// Dispatches a parsed command and renders its output.
pub fn run(cli: Cli) -> Result<RunOutput, Error> {
    match cli.command {
        Command::Compute { body, n, common } => {
            let family = parse_body_spec(&body, n)?;
            let config = RunConfig {
                command: "compute".into(),
                target: body.clone(),
                body: Some(body.clone()),
                n,
                k: None,
                j: None,
                r: None,
                a: None,
                s: None,
                trials: None,
                seed: common.seed,
                samples: common.samples,
                format: format_name(&common, Format::Csv),
            };
            let metrics = family.mc_metrics(common.samples, RngStream::new(common.seed, 0))?;
            let bytes = match effective_format(&common, Format::Csv) {
                Format::Csv => metrics_csv(&body, &metrics)?,
                Format::Json => json_output(&config, &metrics)?,
            };
            Ok(RunOutput { bytes, violations: 0 })
        }
        Command::Verify { target, body, n, k, trials, common } => {
            if common.samples < 1000 {
                return Err(Error::Domain(format!(
                    "verify requires --samples >= 1000, got {}",
                    common.samples
                )));
            }
            let stream = RngStream::new(common.seed, 0);
            let report = match target {
                VerifyTarget::Interlacing => experiments::verify_interlacing(
                    n.unwrap_or(10),
                    k,
                    trials.unwrap_or(10_000),
                    stream,
                )?,
                VerifyTarget::ExtremalSection => {
                    experiments::verify_extremal_hyperplane_sections(
                        trials.unwrap_or(50),
                        200,
                        common.samples,
                        stream,
                    )?
                }
                VerifyTarget::PositiveBound => {
                    let e = require_ellipsoid(&body, n)?;
                    experiments::verify_positive_bound(
                        &e,
                        required(k, "k")?,
                        common.samples,
                        stream,
                    )?
                }
                VerifyTarget::SlicingRatio => {
                    let e = require_ellipsoid(&body, n)?;
                    experiments::verify_prop_sec71(&e, common.samples, stream)?
                }
                VerifyTarget::CubeSection => {
                    experiments::cube_section_max_scan(trials.unwrap_or(10_000), stream)?
                }
            };
            let config = RunConfig {
                command: "verify".into(),
                target: verify_name(target),
                body,
                n,
                k,
                j: None,
                r: None,
                a: None,
                s: None,
                trials,
                seed: common.seed,
                samples: common.samples,
                format: format_name(&common, Format::Json),
            };
            let bytes = match effective_format(&common, Format::Json) {
                Format::Csv => verdict_csv(&report)?,
                Format::Json => json_output(&config, &report)?,
            };
            Ok(RunOutput { bytes, violations: report.violations })
        }
        Command::Sweep { name, n, k, j, r, a, s, common } => {
            let stream = RngStream::new(common.seed, 0);
            let r_grid = parse_grid(&r)?;
            let a_grid = parse_grid(&a)?;
            let s_grid = parse_grid(&s)?;
            let records = match name {
                SweepName::SurfaceSlicing => experiments::sweep_surface_slicing(
                    required(n, "n")?,
                    &required(r_grid.clone(), "r")?,
                    common.samples,
                    stream,
                )?,
                SweepName::QuermassSlicing => experiments::sweep_quermass_slicing(
                    required(n, "n")?,
                    required(k, "k")?,
                    required(j, "j")?,
                    &required(r_grid.clone(), "r")?,
                    common.samples,
                    stream,
                )?,
                SweepName::QUnbounded => experiments::sweep_q_unbounded(
                    required(n, "n")?,
                    &required(a_grid.clone(), "a")?,
                    common.samples,
                    stream,
                )?,
                SweepName::PWl1 => experiments::sweep_p_limits(
                    PLimitFamily::WeightedL1Upper,
                    required(n, "n")?,
                    &required(s_grid.clone(), "s")?,
                    0.0,
                    common.samples,
                    stream,
                )?,
                SweepName::PBox => experiments::sweep_p_limits(
                    PLimitFamily::BoxLower,
                    required(n, "n")?,
                    &required(a_grid.clone(), "a")?,
                    single(&required(s_grid.clone(), "s")?, "s")?,
                    common.samples,
                    stream,
                )?,
                SweepName::BoxInradius => experiments::sweep_p_limits(
                    PLimitFamily::BoxInradius,
                    required(n, "n")?,
                    &required(a_grid.clone(), "a")?,
                    single(&required(s_grid.clone(), "s")?, "s")?,
                    common.samples,
                    stream,
                )?,
            };
            let config = RunConfig {
                command: "sweep".into(),
                target: sweep_name(name),
                body: None,
                n,
                k,
                j,
                r: r_grid,
                a: a_grid,
                s: s_grid,
                trials: None,
                seed: common.seed,
                samples: common.samples,
                format: format_name(&common, Format::Csv),
            };
            let bytes = match effective_format(&common, Format::Csv) {
                Format::Csv => sweep_csv(&records)?,
                Format::Json => json_output(&config, &records)?,
            };
            Ok(RunOutput { bytes, violations: 0 })
        }
    }
}

/// Writes `bytes` to `out` atomically, or to stdout when no path is given.
pub fn emit(bytes: &[u8], out: &Option<PathBuf>) -> Result<(), Error> {
    match out {
        None => {
            std::io::stdout().write_all(bytes)?;
            Ok(())
        }
        Some(path) => {
            let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
            let mut tmp = match dir {
                Some(d) => tempfile::NamedTempFile::new_in(d)?,
                None => tempfile::NamedTempFile::new_in(".")?,
            };
            tmp.write_all(bytes)?;
            tmp.persist(path).map_err(|e| Error::Io(e.error))?;
            Ok(())
        }
    }
}

pub fn out_path(cli: &Cli) -> Option<PathBuf> {
    match &cli.command {
        Command::Compute { common, .. }
        | Command::Verify { common, .. }
        | Command::Sweep { common, .. } => common.out.clone(),
    }
}

fn require_ellipsoid(body: &Option<String>, n: Option<usize>) -> Result<Ellipsoid, Error> {
    let text = body.as_deref().ok_or_else(|| Error::Parse {
        position: 0,
        message: "this verifier needs a body spec (ball:R or ellipsoid:a1,...,an)".into(),
    })?;
    match parse_body_spec(text, n)? {
        BodyFamily::EllipsoidRef(e) => Ok(e),
        BodyFamily::Ball { radius, dim } => Ellipsoid::ball(dim, radius),
        _ => Err(Error::InvalidBody(
            "this verifier is defined for ellipsoids only".into(),
        )),
    }
}

fn parse_grid(flag: &Option<String>) -> Result<Option<Vec<f64>>, Error> {
    match flag {
        None => Ok(None),
        Some(text) => Ok(Some(
            parse_float_list(text, 0)?.into_iter().map(|(_, v)| v).collect(),
        )),
    }
}

fn effective_format(common: &CommonArgs, default: Format) -> Format {
    common.format.unwrap_or(default)
}

fn format_name(common: &CommonArgs, default: Format) -> String {
    match effective_format(common, default) {
        Format::Csv => "csv".into(),
        Format::Json => "json".into(),
    }
}

fn verify_name(t: VerifyTarget) -> String {
    match t {
        VerifyTarget::Interlacing => "interlacing",
        VerifyTarget::ExtremalSection => "extremal-section",
        VerifyTarget::PositiveBound => "positive-bound",
        VerifyTarget::SlicingRatio => "slicing-ratio",
        VerifyTarget::CubeSection => "cube-section",
    }
    .into()
}

fn sweep_name(s: SweepName) -> String {
    match s {
        SweepName::SurfaceSlicing => "surface-slicing",
        SweepName::QuermassSlicing => "quermass-slicing",
        SweepName::QUnbounded => "q-unbounded",
        SweepName::PWl1 => "p-wl1",
        SweepName::PBox => "p-box",
        SweepName::BoxInradius => "box-inradius",
    }
    .into()
}

/// 12-significant-digit decimal rendering, stable across runs.
pub fn fmt_sig(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let exp = x.abs().log10().floor() as i32;
    let decimals = (11 - exp).max(0) as usize;
    format!("{x:.decimals$}")
}

fn json_output<T: Serialize>(config: &RunConfig, result: &T) -> Result<Vec<u8>, Error> {
    let doc = serde_json::json!({ "config": config, "result": result });
    let mut bytes = serde_json::to_vec_pretty(&doc)
        .map_err(|e| Error::Domain(format!("serialization failed: {e}")))?;
    bytes.push(b'\n');
    Ok(bytes)
}

fn csv_error(e: impl std::fmt::Display) -> Error {
    Error::Domain(format!("csv serialization failed: {e}"))
}

fn metrics_csv(body: &str, m: &BodyMetrics) -> Result<Vec<u8>, Error> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "body",
        "dim",
        "seed",
        "samples",
        "volume",
        "surface",
        "surface_se",
        "inradius",
        "circumradius",
        "mean_width",
        "mean_width_se",
        "m_parameter",
        "m_parameter_se",
        "vrad",
        "t",
        "p",
        "p_se",
        "q",
        "q_se",
    ])
    .map_err(csv_error)?;
    w.write_record([
        body.to_string(),
        m.dim.to_string(),
        m.seed.to_string(),
        m.surface.samples.to_string(),
        fmt_sig(m.volume),
        fmt_sig(m.surface.mean),
        fmt_sig(m.surface.stderr),
        fmt_sig(m.inradius),
        fmt_sig(m.circumradius),
        fmt_sig(m.mean_width.mean),
        fmt_sig(m.mean_width.stderr),
        fmt_sig(m.m_parameter.mean),
        fmt_sig(m.m_parameter.stderr),
        fmt_sig(m.vrad),
        fmt_sig(m.t),
        fmt_sig(m.p.mean),
        fmt_sig(m.p.stderr),
        fmt_sig(m.q.mean),
        fmt_sig(m.q.stderr),
    ])
    .map_err(csv_error)?;
    w.into_inner().map_err(csv_error)
}

fn sweep_csv(records: &[SweepRecord]) -> Result<Vec<u8>, Error> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let value_names: Vec<&str> = records
        .first()
        .map(|r| r.values.iter().map(|(k, _)| k.as_str()).collect())
        .unwrap_or_default();
    let mut header = vec!["sweep".to_string(), "parameter".to_string()];
    for name in &value_names {
        header.push((*name).to_string());
        header.push(format!("{name}_se"));
    }
    header.extend(["ratio".into(), "ratio_se".into(), "seed".into()]);
    w.write_record(&header).map_err(csv_error)?;
    for rec in records {
        let mut row = vec![rec.sweep_name.clone(), fmt_sig(rec.parameter)];
        for name in &value_names {
            let est: &McEstimate = &rec
                .values
                .iter()
                .find(|(k, _)| k == name)
                .ok_or_else(|| {
                    Error::Domain(format!("sweep records disagree on value column '{name}'"))
                })?
                .1;
            row.push(fmt_sig(est.mean));
            row.push(fmt_sig(est.stderr));
        }
        row.push(fmt_sig(rec.ratio.mean));
        row.push(fmt_sig(rec.ratio.stderr));
        row.push(rec.ratio.seed.to_string());
        w.write_record(&row).map_err(csv_error)?;
    }
    w.into_inner().map_err(csv_error)
}

fn verdict_csv(report: &VerdictReport) -> Result<Vec<u8>, Error> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec![
        "theorem".to_string(),
        "trials".to_string(),
        "violations".to_string(),
        "worst_margin".to_string(),
        "seed".to_string(),
    ];
    for (name, _) in &report.notes {
        header.push(name.clone());
    }
    w.write_record(&header).map_err(csv_error)?;
    let mut row = vec![
        report.theorem_tag.clone(),
        report.trials.to_string(),
        report.violations.to_string(),
        fmt_sig(report.worst_margin),
        report.seeds[0].to_string(),
    ];
    for (_, value) in &report.notes {
        row.push(fmt_sig(*value));
    }
    w.write_record(&row).map_err(csv_error)?;
    w.into_inner().map_err(csv_error)
}
