//! The `circdom` command line.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use serde::Serialize;
use serde_json::json;

use super::accumulation::{generate_accumulation_example, verify_accumulation};
use super::builtins::{self, Coefficient};
use super::pipelines::{self, GridSpec, SibnerOptions, TestMap, ZeroAreaOptions};
use super::svg::{render_svg, Scene};
use crate::beltrami::{self, DavidKind, DavidProfile, InvariantExtension};
use crate::error::{Error, Result};
use crate::field::{Bbox, GridField};
use crate::geometry::CircleDomain;
use crate::schottky::{self, AreaLedger};
use crate::solver::{self, SolveOptions};

pub const EXIT_OK: i32 = 0;
pub const EXIT_DOMAIN: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Parser, Debug)]
#[command(name = "circdom", version, about = "Circle domains, reflection groups and Beltrami solvers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check that the circles are disjoint and miss the point components.
    Validate {
        #[command(flatten)]
        domain: DomainArg,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// List the reduced words of the reflection group and their matrices.
    Orbit {
        #[command(flatten)]
        domain: DomainArg,
        #[arg(long, default_value_t = schottky::DEFAULT_DEPTH)]
        depth: usize,
        #[arg(long, default_value_t = 100_000)]
        max_words: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Per-word areas of the orbit tiles, as JSON lines.
    AreaLedger {
        #[command(flatten)]
        domain: DomainArg,
        #[arg(long, default_value_t = schottky::DEFAULT_DEPTH)]
        depth: usize,
        /// Emit one JSON summary with tail indices M(1..=N) instead of JSON lines.
        #[arg(long, value_name = "N")]
        summary: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Extend a coefficient given on the fundamental domain to the whole plane.
    ExtendMu {
        #[command(flatten)]
        domain: DomainArg,
        /// CPGF file, or builtin:zero, builtin:invariant-constant, builtin:zero-area.
        #[arg(long)]
        mu: String,
        #[command(flatten)]
        grid: GridArgs,
        #[arg(long, default_value_t = schottky::DEFAULT_REDUCTION_DEPTH)]
        depth: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Compare super-level measures of a coefficient with a David profile.
    DavidCheck {
        #[arg(long)]
        mu: PathBuf,
        #[arg(long, value_enum, default_value_t = ProfileArg::StronglyDavid)]
        profile: ProfileArg,
        #[arg(long, default_value_t = std::f64::consts::PI + 1.0)]
        m: f64,
        #[arg(long, default_value_t = 1.0)]
        alpha: f64,
        #[arg(long, default_value_t = 1.0)]
        beta: f64,
        /// Check ε = 1/n for n = 1..=N.
        #[arg(long, default_value_t = 3)]
        n_max: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Principal solution of the Beltrami equation; writes f(z) − z.
    Solve {
        #[arg(long)]
        mu: PathBuf,
        #[command(flatten)]
        solve: SolveArgs,
        #[arg(long)]
        out: PathBuf,
        /// Where to write the JSON log (default: stdout).
        #[arg(long)]
        log: Option<PathBuf>,
    },
    /// Solve and measure how far the boundary images are from circles.
    RigidityCheck {
        #[command(flatten)]
        domain: DomainArg,
        /// CPGF file, or builtin:zero, builtin:invariant-constant, builtin:control.
        #[arg(long)]
        mu: String,
        /// Treat a CPGF coefficient as given on the fundamental domain and extend it.
        #[arg(long)]
        extend: bool,
        #[command(flatten)]
        grid: GridArgs,
        #[command(flatten)]
        solve: SolveArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Pull back a test map's coefficient, solve, and check f ∘ g⁻¹ is conformal.
    Sibner {
        #[command(flatten)]
        domain: DomainArg,
        /// identity, shear:<re>[,<im>] or radial:<a>.
        #[arg(long)]
        map: String,
        #[arg(long, default_value_t = 4.5)]
        half_width: f64,
        #[arg(long, default_value_t = 1024)]
        n: usize,
        #[arg(long, default_value_t = 3.5)]
        radius: f64,
        #[arg(long, default_value_t = 0.25)]
        margin: f64,
        #[command(flatten)]
        solve: SolveArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// The non-rigid construction on a domain with a fat Cantor set.
    ZeroArea {
        #[arg(long, default_value = "builtin:zero-area")]
        domain: String,
        #[arg(long, default_value_t = 4.0)]
        half_width: f64,
        #[arg(long, default_value_t = 512)]
        n: usize,
        #[arg(long, default_value_t = 3)]
        grid_n_max: usize,
        #[arg(long, default_value_t = schottky::SCALE_CAP)]
        analytic_n_max: usize,
        #[arg(long, default_value_t = 4)]
        rungs: usize,
        #[command(flatten)]
        solve: SolveArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate a domain whose circles accumulate on every boundary circle.
    GenExample {
        #[arg(long, default_value_t = 4)]
        k_max: usize,
        /// Domain JSON output.
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        svg: Option<PathBuf>,
    },
    /// Draw a domain, optionally over a field heat map.
    Render {
        #[command(flatten)]
        domain: DomainArg,
        #[arg(long)]
        field: Option<PathBuf>,
        #[arg(long, default_value_t = 800)]
        width: u32,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum ProfileArg {
    David,
    StronglyDavid,
}

impl From<ProfileArg> for DavidKind {
    fn from(p: ProfileArg) -> Self {
        match p {
            ProfileArg::David => DavidKind::David,
            ProfileArg::StronglyDavid => DavidKind::StronglyDavid,
        }
    }
}

#[derive(Args, Debug)]
struct DomainArg {
    /// Domain JSON file, or builtin:two-circles, builtin:three-circles, builtin:zero-area.
    #[arg(long)]
    domain: String,
}

#[derive(Args, Debug)]
struct GridArgs {
    /// Half side of the square grid box centered at 0.
    #[arg(long)]
    half_width: Option<f64>,
    #[arg(long)]
    n: Option<usize>,
}

#[derive(Args, Debug)]
struct SolveArgs {
    #[arg(long, default_value_t = solver::DEFAULT_TOL)]
    tol: f64,
    #[arg(long, default_value_t = solver::DEFAULT_MAX_ITER)]
    max_iter: usize,
}

impl SolveArgs {
    fn options(&self) -> Result<SolveOptions> {
        if self.tol.is_nan() || self.tol <= 0.0 {
            return Err(Error::InvalidArgument("--tol must be positive".into()));
        }
        Ok(SolveOptions {
            tol: self.tol,
            max_iter: self.max_iter,
        })
    }
}

impl GridArgs {
    fn grid(&self, default_half: f64, default_n: usize) -> Result<(Bbox, usize)> {
        let n = self.n.unwrap_or(default_n);
        if n == 0 || n > solver::MAX_GRID {
            return Err(Error::InvalidArgument(format!("--n must lie in 1..={}", solver::MAX_GRID)));
        }
        Ok((Bbox::square(self.half_width.unwrap_or(default_half))?, n))
    }
}

fn load_domain(spec: &str) -> Result<CircleDomain> {
    match spec.strip_prefix("builtin:") {
        Some(name) => builtins::domain(name),
        None => CircleDomain::from_json(&std::fs::read_to_string(spec)?),
    }
}

fn emit(out: Option<&Path>, bytes: &[u8]) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, bytes)?,
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(bytes)?;
            stdout.flush()?;
        }
    }
    Ok(())
}

fn emit_json<T: Serialize>(out: Option<&Path>, value: &T) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    emit(out, s.as_bytes())
}

/// Deterministic probe points spread over a box.
fn box_probes(b: Bbox, count: usize) -> Vec<Complex64> {
    let (g1, g2) = (0.754_877_666_246_692_7, 0.569_840_290_998_053_2);
    (0..count)
        .map(|k| {
            let (s, t) = ((0.5 + g1 * k as f64).fract(), (0.5 + g2 * k as f64).fract());
            Complex64::new(b.x0 + s * b.width(), b.y0 + t * b.height())
        })
        .collect()
}

#[derive(Serialize)]
struct WordRecord<'a> {
    word: &'a [usize],
    orientation_reversing: bool,
    /// `[a, b, c, d]` as `[re, im]` pairs, normalized to determinant 1.
    matrix: [[f64; 2]; 4],
}

fn run_command(cmd: Command) -> Result<i32> {
    match cmd {
        Command::Validate { domain, out } => {
            let d = load_domain(&domain.domain)?;
            let report = d.validate();
            let valid = report.is_valid();
            emit_json(out.as_deref(), &json!({"valid": valid, "report": report}))?;
            Ok(if valid { EXIT_OK } else { EXIT_DOMAIN })
        }
        Command::Orbit {
            domain,
            depth,
            max_words,
            out,
        } => {
            let d = load_domain(&domain.domain)?;
            if !d.validate().is_valid() {
                return Err(Error::InvalidDomain("domain does not validate".into()));
            }
            let e = schottky::enumerate_words(d.circles.len(), depth, max_words)?;
            let mut words = Vec::with_capacity(e.words.len());
            for w in &e.words {
                let t = schottky::word_to_map(w, &d)?;
                let m = t.matrix();
                words.push(WordRecord {
                    word: w.letters(),
                    orientation_reversing: t.is_orientation_reversing(),
                    matrix: [0, 1, 2, 3].map(|k| [m[k].re, m[k].im]),
                });
            }
            emit_json(out.as_deref(), &json!({"depth": depth, "complete": e.complete, "words": words}))?;
            Ok(EXIT_OK)
        }
        Command::AreaLedger {
            domain,
            depth,
            summary,
            out,
        } => {
            let d = load_domain(&domain.domain)?;
            let ledger = AreaLedger::build(&d, depth)?;
            match summary {
                None => {
                    let mut buf = Vec::new();
                    ledger.write_jsonl(&mut buf)?;
                    emit(out.as_deref(), &buf)?;
                }
                Some(n) => {
                    let m = ledger.tail_indices(n)?;
                    emit_json(
                        out.as_deref(),
                        &json!({
                            "depth": ledger.depth(),
                            "contraction_ratio": ledger.contraction_ratio,
                            "disk_area": ledger.disk_area,
                            "level_totals": ledger.level_totals,
                            "tail_indices": m,
                        }),
                    )?;
                }
            }
            Ok(EXIT_OK)
        }
        Command::ExtendMu {
            domain,
            mu,
            grid,
            depth,
            out,
        } => {
            let d = load_domain(&domain.domain)?;
            let (ext, base_sup, residual) = match mu.strip_prefix("builtin:") {
                Some(name) => {
                    let (bbox, n) = grid.grid(4.5, 512)?;
                    match name {
                        "zero" => extend_with(&d, |_| Some(Complex64::new(0.0, 0.0)), bbox, n, depth)?,
                        "invariant-constant" => {
                            extend_with(&d, |z| Some(builtins::constant_on_domain(&d, z)), bbox, n, depth)?
                        }
                        "zero-area" => {
                            let support = d.cantor_spec.ok_or_else(|| {
                                Error::InvalidDomain("builtin:zero-area needs a domain with a fat Cantor set".into())
                            })?;
                            let ledger = pipelines::ledger_for(&d, schottky::SCALE_CAP)?;
                            let spec = beltrami::david_coefficient(&ledger, support, schottky::SCALE_CAP)?;
                            extend_with(&d, builtins::annulus_on_domain(&spec), bbox, n, depth)?
                        }
                        _ => {
                            return Err(Error::InvalidArgument(format!(
                                "unknown coefficient builtin:{name} for extend-mu"
                            )))
                        }
                    }
                }
                None => {
                    let field = GridField::read_file(&mu)?;
                    let (bbox, n) = match (grid.half_width, grid.n) {
                        (None, None) if field.nx() == field.ny() => (field.bbox(), field.nx()),
                        (None, None) => return Err(Error::InvalidArgument("give --n for non-square grids".into())),
                        _ => grid.grid(4.5, 512)?,
                    };
                    extend_with(&d, builtins::nearest_cell(&field), bbox, n, depth)?
                }
            };
            ext.field.write_file(&out)?;
            emit_json(
                None,
                &json!({
                    "unresolved_cells": ext.unresolved_cells,
                    "undefined_cells": ext.undefined_cells,
                    "sup_norm": ext.field.sup_norm(),
                    "base_sup_norm": base_sup,
                    "invariance_residual": residual,
                }),
            )?;
            Ok(EXIT_OK)
        }
        Command::DavidCheck {
            mu,
            profile,
            m,
            alpha,
            beta,
            n_max,
            out,
        } => {
            let field = GridField::read_file(&mu)?;
            if n_max == 0 {
                return Err(Error::InvalidArgument("--n-max must be positive".into()));
            }
            let profile = DavidProfile::new(m, alpha, beta, profile.into())?;
            let eps: Vec<f64> = (1..=n_max).map(|n| 1.0 / n as f64).collect();
            let report = beltrami::check_david(&field.superlevel_measure(&eps), &profile);
            emit_json(out.as_deref(), &json!({"holds": report.holds(), "report": report}))?;
            Ok(EXIT_OK)
        }
        Command::Solve { mu, solve, out, log } => {
            let field = GridField::read_file(&mu)?;
            let r = solver::solve_beltrami(&field, solve.options()?)?;
            r.displacement.write_file(&out)?;
            emit_json(
                log.as_deref(),
                &json!({
                    "iterations": r.iterations,
                    "residual_l2": r.residual_l2,
                    "residuals": r.residuals,
                    "convergence_ratio": r.convergence_ratio,
                    "laurent": [r.laurent.re, r.laurent.im],
                    "warning": r.warning,
                }),
            )?;
            Ok(EXIT_OK)
        }
        Command::RigidityCheck {
            domain,
            mu,
            extend,
            grid,
            solve,
            out,
        } => {
            let d = load_domain(&domain.domain)?;
            let field = match mu.strip_prefix("builtin:") {
                Some(name) => {
                    let (bbox, n) = grid.grid(4.5, 512)?;
                    Coefficient::from_name(name)?.grid(&d, bbox, n)?
                }
                None => {
                    let base = GridField::read_file(&mu)?;
                    if extend {
                        let ext = InvariantExtension::new(&d, builtins::nearest_cell(&base));
                        ext.sample(base.bbox(), base.nx(), base.ny())?.field
                    } else {
                        base
                    }
                }
            };
            let report = pipelines::rigidity_check(&d, &field, solve.options()?)?;
            emit_json(out.as_deref(), &report)?;
            Ok(EXIT_OK)
        }
        Command::Sibner {
            domain,
            map,
            half_width,
            n,
            radius,
            margin,
            solve,
            out,
        } => {
            let d = load_domain(&domain.domain)?;
            let g = TestMap::parse(&map)?;
            let opts = SibnerOptions {
                grid: GridSpec { half_width, n },
                radius,
                margin,
                solve: solve.options()?,
            };
            emit_json(out.as_deref(), &pipelines::sibner_pipeline(&d, g, opts)?)?;
            Ok(EXIT_OK)
        }
        Command::ZeroArea {
            domain,
            half_width,
            n,
            grid_n_max,
            analytic_n_max,
            rungs,
            solve,
            out,
        } => {
            let d = load_domain(&domain)?;
            let opts = ZeroAreaOptions {
                grid: GridSpec { half_width, n },
                grid_n_max,
                analytic_n_max,
                ladder_rungs: rungs,
                solve: solve.options()?,
            };
            emit_json(out.as_deref(), &pipelines::zero_area_probe(&d, opts)?)?;
            Ok(EXIT_OK)
        }
        Command::GenExample { k_max, out, svg } => {
            let config = generate_accumulation_example(k_max)?;
            let report = verify_accumulation(&config);
            let mut domain_json = config.domain().to_json()?;
            domain_json.push('\n');
            std::fs::write(&out, domain_json)?;
            if let Some(path) = svg {
                std::fs::write(path, render_svg(&Scene::accumulation(&config)?)?)?;
            }
            emit_json(
                None,
                &json!({"circles": config.circles.len(), "level_sizes": config.level_sizes, "verification": report}),
            )?;
            Ok(if report.passed() { EXIT_OK } else { EXIT_DOMAIN })
        }
        Command::Render {
            domain,
            field,
            width,
            out,
        } => {
            let d = load_domain(&domain.domain)?;
            let mut scene = Scene::domain(&d)?;
            if width == 0 {
                return Err(Error::InvalidArgument("--width must be positive".into()));
            }
            scene.width = width;
            if let Some(path) = field {
                let f = GridField::read_file(path)?;
                scene.view = f.bbox();
                scene.field = Some(f);
            }
            std::fs::write(out, render_svg(&scene)?)?;
            Ok(EXIT_OK)
        }
    }
}

type Extension = (crate::beltrami::ExtensionGrid, f64, f64);

fn extend_with<F>(d: &CircleDomain, base: F, bbox: Bbox, n: usize, depth: usize) -> Result<Extension>
where
    F: Fn(Complex64) -> Option<Complex64>,
{
    if !d.validate().is_valid() {
        return Err(Error::InvalidDomain("domain does not validate".into()));
    }
    let ext = InvariantExtension::with_depth(d, base, depth);
    let grid = ext.sample(bbox, n, n)?;
    let base_sup = grid
        .field
        .centers()
        .into_iter()
        .filter(|&z| d.in_fundamental_domain(z))
        .filter_map(|z| ext.base(z))
        .map(|v| v.norm())
        .fold(0.0, f64::max);
    let residual = ext.invariance_residual(&box_probes(bbox, 1000));
    Ok((grid, base_sup, residual))
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::InvalidArgument(_) => EXIT_USAGE,
        _ => EXIT_DOMAIN,
    }
}

/// Runs the CLI on `args` (including the program name) and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match run_command(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
