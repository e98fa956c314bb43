//! Mode execution: wire a parsed config into the pipeline and write the
//! artifacts. Every output starts with comment lines carrying the tool
//! version and the config hash, so results are traceable to their inputs.

use std::fs;
use std::path::{Path, PathBuf};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::config::{build_generator, build_system, ConfigError, Mode, RunConfig, SystemSpec};
use crate::geometry::{
    inner_tube_volume_raster, inner_tube_volume_raster_with_image, polygon_area,
    steiner_coefficients, Point, Polygon,
};
use crate::oracle::{direct_tile_sum, sweep_compare, OracleError, SweepReport, SweepRow, SweepValues};
use crate::spectrum::{DimensionSet, ScalingZeta, SpectrumError};
use crate::system::{raster_condition_check, SelfSimilarSystem, SystemError};
use crate::tube::{tube_formula_sweep, GeometricZeta, TubeError};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Error)]
pub enum RunError {
    #[error("config error: {0}")]
    Config(#[from] ConfigError),
    #[error("numeric error: {0}")]
    Spectrum(#[from] SpectrumError),
    #[error("numeric error: {0}")]
    Tube(#[from] TubeError),
    #[error("numeric error: {0}")]
    Geometry(#[from] crate::geometry::GeometryError),
    #[error("numeric error: {0}")]
    Oracle(OracleError),
    #[error("resource limit: {0}")]
    Resource(String),
    #[error("numeric error: {0}")]
    System(SystemError),
    #[error("io error at {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl RunError {
    /// Exit codes: 0 ok, 2 config error, 3 numeric error, 4 resource error.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 2,
            RunError::Resource(_) => 4,
            RunError::Io { .. } => 3,
            _ => 3,
        }
    }
}

impl From<OracleError> for RunError {
    fn from(e: OracleError) -> Self {
        match e {
            OracleError::Enumeration { .. } => RunError::Resource(e.to_string()),
            other => RunError::Oracle(other),
        }
    }
}

impl From<SystemError> for RunError {
    fn from(e: SystemError) -> Self {
        match e {
            SystemError::BudgetExceeded { .. } => RunError::Resource(e.to_string()),
            other => RunError::System(other),
        }
    }
}

/// Files written by a run.
#[derive(Debug, Default)]
pub struct Artifacts {
    pub files: Vec<PathBuf>,
    pub summary: Vec<String>,
}

pub fn run(config: &RunConfig) -> Result<Artifacts, RunError> {
    config.validate()?;
    fs::create_dir_all(&config.out_dir).map_err(|e| RunError::Io {
        path: PathBuf::from(&config.out_dir),
        source: e,
    })?;
    match config.mode {
        Mode::Dimensions => run_dimensions(config),
        Mode::Tube => run_tube(config, false),
        Mode::Compare => run_tube(config, true),
        Mode::Polygon => run_polygon(config),
        Mode::Conditions => run_conditions(config),
    }
}

fn header(config: &RunConfig, mode: Mode) -> String {
    format!(
        "# fractube v{TOOL_VERSION} mode={} config_sha256={}\n",
        mode.as_str(),
        config.content_hash()
    )
}

fn out_path(config: &RunConfig, default_name: &str) -> PathBuf {
    let name = config.csv_name.as_deref().unwrap_or(default_name);
    Path::new(&config.out_dir).join(name)
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), RunError> {
    fs::write(path, bytes).map_err(|e| RunError::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

fn system_of(config: &RunConfig) -> Result<SelfSimilarSystem, RunError> {
    Ok(build_system(config.system.as_ref().expect("validated"))?)
}

/// Default pole-search strip: left edge −2d, right edge d (the similarity
/// dimension sits below d by the system invariant).
fn strip_of(config: &RunConfig, d: u32) -> (f64, f64) {
    config
        .strip
        .unwrap_or((-2.0 * d as f64, d as f64 + 1e-9))
}

fn run_dimensions(config: &RunConfig) -> Result<Artifacts, RunError> {
    let system = system_of(config)?;
    let zeta = ScalingZeta::new(system.ratios())?;
    let window = config.window.unwrap_or(50.0);
    let strip = strip_of(config, system.dimension());
    let dims = zeta.complex_dimensions(window, strip)?;

    let mut buf = Vec::new();
    buf.extend_from_slice(header(config, Mode::Dimensions).as_bytes());
    buf.extend_from_slice(
        format!(
            "# D={} lattice={} period={}\n",
            crate::io::fmt_f64(dims.dimension()),
            dims.lattice().is_some(),
            dims.lattice()
                .map(|l| crate::io::fmt_f64(l.period))
                .unwrap_or_else(|| "nan".to_string()),
        )
        .as_bytes(),
    );
    dims.write_csv(&mut buf).map_err(|e| RunError::Io {
        path: PathBuf::from("<buffer>"),
        source: e,
    })?;
    let path = out_path(config, "dimensions.csv");
    write_file(&path, &buf)?;

    let mut artifacts = Artifacts::default();
    artifacts.summary.push(format!(
        "D = {:.12}, {} poles in |Im s| <= {window}",
        dims.dimension(),
        dims.poles().len()
    ));
    if let Some(lat) = dims.lattice() {
        artifacts
            .summary
            .push(format!("lattice base {:.12}, period {:.12}", lat.base, lat.period));
    }
    for note in dims.notes() {
        artifacts.summary.push(format!("note: {note}"));
    }
    artifacts.files.push(path);
    Ok(artifacts)
}

/// Shared by tube and compare: build per-generator pipelines, evaluate the
/// ε grid, and (for compare) pair with the direct oracle, summing rows
/// across generators.
fn run_tube(config: &RunConfig, compare: bool) -> Result<Artifacts, RunError> {
    let system = system_of(config)?;
    let zeta = ScalingZeta::new(system.ratios())?;
    let grid = config.eps_grid.as_ref().expect("validated").points();
    let truncation = config.truncation;

    let mut pipelines: Vec<(GeometricZeta, DimensionSet)> = Vec::new();
    for (i, spec) in config.generators.iter().enumerate() {
        let path = format!("generators[{i}]");
        let (_, profile) = build_generator(spec, &path, true)?;
        let profile = profile.expect("need_profile");
        let window = config
            .window
            .unwrap_or_else(|| default_window(&zeta, truncation));
        let gz = GeometricZeta::for_window(zeta.clone(), profile, window)?;
        let strip = strip_of(config, gz.profile().dimension());
        let dims = zeta.complex_dimensions(window, strip)?;
        pipelines.push((gz, dims));
    }

    // Evaluate per generator, then sum rows.
    let mut summed: Vec<SweepRow> = grid
        .iter()
        .map(|&eps| SweepRow {
            eps,
            outcome: Ok(SweepValues {
                tube: crate::tube::TubeEvaluation {
                    eps,
                    truncation,
                    integer_part: 0.0,
                    complex_part: 0.0,
                    total: 0.0,
                    imag_leak: 0.0,
                },
                direct: 0.0,
                abs_err: 0.0,
                rel_err: 0.0,
            }),
        })
        .collect();
    for (gz, dims) in &pipelines {
        let rows: Vec<SweepRow> = if compare {
            sweep_compare(&system, gz, dims, &grid, truncation)?.rows
        } else {
            tube_formula_sweep(gz, dims, &grid, truncation)
                .into_iter()
                .zip(&grid)
                .map(|(res, &eps)| SweepRow {
                    eps,
                    outcome: res.map_err(|e| e.to_string()).map(|tube| SweepValues {
                        tube,
                        direct: f64::NAN,
                        abs_err: f64::NAN,
                        rel_err: f64::NAN,
                    }),
                })
                .collect()
        };
        for (acc, row) in summed.iter_mut().zip(rows) {
            let merged = match (&acc.outcome, row.outcome) {
                (Ok(a), Ok(b)) => Ok(SweepValues {
                    tube: crate::tube::TubeEvaluation {
                        eps: a.tube.eps,
                        truncation,
                        integer_part: a.tube.integer_part + b.tube.integer_part,
                        complex_part: a.tube.complex_part + b.tube.complex_part,
                        total: a.tube.total + b.tube.total,
                        imag_leak: a.tube.imag_leak + b.tube.imag_leak,
                    },
                    direct: a.direct + b.direct,
                    abs_err: f64::NAN,
                    rel_err: f64::NAN,
                }),
                (Err(e), _) => Err(e.clone()),
                (_, Err(e)) => Err(e),
            };
            acc.outcome = merged;
        }
    }
    if compare {
        for row in &mut summed {
            if let Ok(v) = &mut row.outcome {
                v.abs_err = (v.tube.total - v.direct).abs();
                v.rel_err = v.abs_err / v.direct.abs().max(f64::MIN_POSITIVE);
            }
        }
    }
    let report = SweepReport {
        rows: summed,
        truncation,
        cutoff_policy: "cutoff = eps / g per evaluation".to_string(),
    };

    let mut buf = Vec::new();
    let mode = if compare { Mode::Compare } else { Mode::Tube };
    buf.extend_from_slice(header(config, mode).as_bytes());
    report.write_csv(&mut buf).map_err(|e| RunError::Io {
        path: PathBuf::from("<buffer>"),
        source: e,
    })?;
    let default_name = if compare { "compare.csv" } else { "tube.csv" };
    let path = out_path(config, default_name);
    write_file(&path, &buf)?;

    let mut artifacts = Artifacts::default();
    artifacts.files.push(path);
    if compare {
        if let Some(max) = report.max_rel_err() {
            artifacts
                .summary
                .push(format!("max relative error {max:.3e} at N = {truncation}"));
        }
        for row in &report.rows {
            if let Err(e) = &row.outcome {
                artifacts
                    .summary
                    .push(format!("eps = {}: {e}", row.eps));
            }
        }
        if config.svg {
            let svg_path = Path::new(&config.out_dir).join("compare.svg");
            let mut svg = Vec::new();
            report
                .to_plot("inner tube volume: residue series vs direct sum")
                .write_svg(&mut svg)
                .map_err(|e| RunError::Io {
                    path: svg_path.clone(),
                    source: e,
                })?;
            write_file(&svg_path, &svg)?;
            artifacts.files.push(svg_path);
        }
    }
    Ok(artifacts)
}

/// Enough window that the requested symmetric truncation is covered for
/// lattice systems; other systems get a generous default.
fn default_window(zeta: &ScalingZeta, truncation: u64) -> f64 {
    match zeta.lattice_detect(1e-9) {
        Some(lat) => (truncation.max(1) as f64 + 0.75) * lat.period,
        None => 50.0f64.max(truncation as f64),
    }
}

fn run_polygon(config: &RunConfig) -> Result<Artifacts, RunError> {
    let spec = &config.generators[0];
    let (polygon, profile) = build_generator(spec, "generator", false)?;
    let polygon = polygon.ok_or_else(|| {
        ConfigError::Invalid {
            path: "generator".into(),
            message: "mode polygon needs a polygon or a polygon-backed builtin".into(),
        }
    })?;
    let (k1, k0) = steiner_coefficients(&polygon).map_err(|e| {
        RunError::Config(ConfigError::Invalid {
            path: "generator.polygon".into(),
            message: e.to_string(),
        })
    })?;
    let area = polygon_area(&polygon);

    // ε samples: the grid when given, otherwise seeded draws below the
    // thin-feature scale 2·area/perimeter.
    let eps_list: Vec<f64> = match &config.eps_grid {
        Some(grid) => grid.points(),
        None => {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            let scale = 2.0 * area / polygon.perimeter();
            let mut v: Vec<f64> = (0..5).map(|_| rng.gen_range(0.05..1.0) * scale).collect();
            v.sort_by(|a, b| a.partial_cmp(b).unwrap());
            v
        }
    };

    let mut buf = Vec::new();
    buf.extend_from_slice(header(config, Mode::Polygon).as_bytes());
    buf.extend_from_slice(
        format!(
            "# kappa1={} kappa0={} area={}\n",
            crate::io::fmt_f64(k1),
            crate::io::fmt_f64(k0),
            crate::io::fmt_f64(area)
        )
        .as_bytes(),
    );
    buf.extend_from_slice(b"eps,quadratic,raster,abs_err,rel_err,raster_bound\n");
    let mut artifacts = Artifacts::default();
    for &eps in &eps_list {
        let est = inner_tube_volume_raster(&polygon, eps, config.resolution)?;
        let quadratic = k1 * eps + k0 * eps * eps;
        let abs_err = (est.volume - quadratic).abs();
        buf.extend_from_slice(
            format!(
                "{},{},{},{},{},{}\n",
                crate::io::fmt_f64(eps),
                crate::io::fmt_f64(quadratic),
                crate::io::fmt_f64(est.volume),
                crate::io::fmt_f64(abs_err),
                crate::io::fmt_f64(abs_err / quadratic.abs().max(f64::MIN_POSITIVE)),
                crate::io::fmt_f64(est.error_bound),
            )
            .as_bytes(),
        );
    }
    if config.pgm {
        if let Some(&eps) = eps_list.first() {
            let (_, image) =
                inner_tube_volume_raster_with_image(&polygon, eps, config.resolution)?;
            let pgm_path = Path::new(&config.out_dir).join("band.pgm");
            let mut pgm = Vec::new();
            image.write_pgm(&mut pgm).map_err(|e| RunError::Io {
                path: pgm_path.clone(),
                source: e,
            })?;
            write_file(&pgm_path, &pgm)?;
            artifacts.files.push(pgm_path);
        }
    }
    let path = out_path(config, "polygon.csv");
    write_file(&path, &buf)?;
    artifacts.files.push(path);
    if let Some(p) = profile {
        artifacts.summary.push(format!(
            "profile: h = {}, g = {}",
            p.regime_bound(),
            p.inradius()
        ));
    }
    artifacts
        .summary
        .push(format!("kappa1 = {k1:.12}, kappa0 = {k0:.12}, area = {area:.12}"));
    Ok(artifacts)
}

fn run_conditions(config: &RunConfig) -> Result<Artifacts, RunError> {
    let system = system_of(config)?;
    let hull = match (&config.hull, config.system.as_ref()) {
        (Some(pts), _) => Polygon::new(pts.iter().map(|&(x, y)| Point::new(x, y)).collect())
            .map_err(|e| {
                RunError::Config(ConfigError::Invalid {
                    path: "hull".into(),
                    message: e.to_string(),
                })
            })?,
        (None, Some(SystemSpec::Builtin(name))) if name == "example1" => {
            crate::fixtures::example1_hull()
        }
        _ => {
            return Err(RunError::Config(ConfigError::Invalid {
                path: "hull".into(),
                message: "required for mode conditions".into(),
            }))
        }
    };
    let report = raster_condition_check(&system, &hull, config.resolution)?;

    let mut buf = Vec::new();
    buf.extend_from_slice(header(config, Mode::Conditions).as_bytes());
    buf.extend_from_slice(b"key,value\n");
    let mut push = |k: &str, v: String| {
        buf.extend_from_slice(format!("{k},{v}\n").as_bytes());
    };
    push("tileset_ok", report.tileset_ok.to_string());
    push("nontrivial_ok", report.nontrivial_ok.to_string());
    push("outside_area", crate::io::fmt_f64(report.outside_area));
    push("overlap_area", crate::io::fmt_f64(report.overlap_area));
    push("uncovered_area", crate::io::fmt_f64(report.uncovered_area));
    push("error_bound", crate::io::fmt_f64(report.error_bound));
    push("resolution", report.resolution.to_string());
    let path = out_path(config, "conditions.csv");
    write_file(&path, &buf)?;

    let mut artifacts = Artifacts::default();
    artifacts.files.push(path);
    if config.pgm {
        let pgm_path = Path::new(&config.out_dir).join("generator_mask.pgm");
        let mut pgm = Vec::new();
        report
            .generator_mask
            .write_pgm(&mut pgm)
            .map_err(|e| RunError::Io {
                path: pgm_path.clone(),
                source: e,
            })?;
        write_file(&pgm_path, &pgm)?;
        artifacts.files.push(pgm_path);
    }
    artifacts.summary.push(format!(
        "tileset_ok = {}, nontrivial_ok = {}, uncovered area = {:.6} (bound {:.6})",
        report.tileset_ok, report.nontrivial_ok, report.uncovered_area, report.error_bound
    ));
    Ok(artifacts)
}

/// Direct oracle value for one ε; used by the CLI summary and tests.
pub fn direct_value(
    system: &SelfSimilarSystem,
    gz: &GeometricZeta,
    eps: f64,
) -> Result<f64, RunError> {
    Ok(direct_tile_sum(system, gz.profile(), eps)?)
}

/// Bundled configurations, compiled in so runs are reproducible without
/// external files.
pub fn bundled_config(name: &str) -> Option<&'static str> {
    match name {
        "example1_compare" => Some(include_str!("../configs/example1_compare.json")),
        "example1_dimensions" => Some(include_str!("../configs/example1_dimensions.json")),
        "example1_conditions" => Some(include_str!("../configs/example1_conditions.json")),
        "example1_polygon" => Some(include_str!("../configs/example1_polygon.json")),
        _ => None,
    }
}

/// Load a config argument: a bundled name or a file path.
pub fn load_config_text(arg: &str) -> Result<(String, Option<&'static str>), RunError> {
    if let Some(text) = bundled_config(arg) {
        return Ok((text.to_string(), Some("bundled")));
    }
    let path = Path::new(arg);
    let text = fs::read_to_string(path).map_err(|e| RunError::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    Ok((text, None))
}

pub use std::io::Write as IoWrite;

/// Print run summary lines unless quiet.
pub fn print_summary(artifacts: &Artifacts, quiet: bool) {
    if quiet {
        return;
    }
    let mut out = std::io::stdout().lock();
    for line in &artifacts.summary {
        let _ = writeln!(out, "{line}");
    }
    for file in &artifacts.files {
        let _ = writeln!(out, "wrote {}", file.display());
    }
}
