//! Subcommands. Each one returns its summary text and the files it wants
//! written; nothing touches the disk until [`write_outcome`].

use std::path::{Path, PathBuf};

use num_complex::Complex64;
use paramp_core::detection::{detection_report, monte_carlo_image, DetectionReport};
use paramp_core::field::TransverseGrid;
use paramp_core::modes::{self, ModeBasis};
use paramp_core::params::{Geometry, ValidityCheck, ValidityStatus};
use paramp_core::propagation::{self, PropagationResult, ODD_WEIGHT_TOLERANCE};
use paramp_core::transfer;

use crate::config::{Artifact, Scenario};
use crate::{core_err, io, CliError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Run,
    GainMap,
    NoiseMap,
    Amplify,
    Simulate,
    Modes,
    Validate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GeometryChoice {
    Planar,
    Confocal,
    Both,
}

/// Command-line overrides applied on top of a scenario.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub emit: Option<Vec<Artifact>>,
    pub seed: Option<u64>,
    pub shots: Option<usize>,
    pub geometry: Option<GeometryChoice>,
    pub threshold: Option<f64>,
    pub pgm: bool,
    pub pmax: Option<u32>,
    pub lmax: Option<u32>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Outcome {
    pub summary: String,
    /// File names relative to the output directory, with their contents.
    pub files: Vec<(String, Vec<u8>)>,
}

struct Ctx {
    scn: Scenario,
    geometries: Vec<Geometry>,
    emit: Vec<Artifact>,
    pgm: bool,
    out: Outcome,
}

impl Ctx {
    fn line(&mut self, text: impl AsRef<str>) {
        self.out.summary.push_str(text.as_ref());
        self.out.summary.push('\n');
    }

    fn field(&mut self, geometry: Option<Geometry>, quantity: &str, grid: &TransverseGrid, values: &[f64]) {
        let stem = match geometry {
            Some(g) => format!("{g}_{quantity}"),
            None => quantity.to_owned(),
        };
        self.out
            .files
            .push((format!("{stem}.csv"), io::csv_string(grid, quantity, values).into_bytes()));
        if self.pgm {
            self.out
                .files
                .push((format!("{stem}.pgm"), io::pgm_bytes(grid, quantity, values)));
        }
    }
}

pub fn apply_overrides(mut scn: Scenario, ov: &Overrides) -> Result<Scenario, CliError> {
    if let Some(t) = ov.threshold {
        if !(t.is_finite() && t > 0.0) {
            return Err(CliError::Config(format!("--threshold must be positive (got {t})")));
        }
        scn.threshold = t;
    }
    if let Some(s) = ov.shots {
        if s == 0 {
            return Err(CliError::Config("--shots must be at least 1".into()));
        }
        scn.shots = s;
    }
    if let Some(seed) = ov.seed {
        scn.seed = seed;
    }
    if let Some(emit) = &ov.emit {
        scn.emit = emit.clone();
    }
    if let Some(p) = ov.pmax {
        scn.modes.pmax = p;
    }
    if let Some(l) = ov.lmax {
        scn.modes.lmax = l;
    }
    scn.pgm |= ov.pgm;
    Ok(scn)
}

pub fn execute(command: Command, scn: Scenario, ov: &Overrides) -> Result<Outcome, CliError> {
    let scn = apply_overrides(scn, ov)?;
    let geometries = match ov.geometry {
        None => vec![scn.cavity.geometry()],
        Some(GeometryChoice::Planar) => vec![Geometry::Planar],
        Some(GeometryChoice::Confocal) => vec![Geometry::Confocal],
        Some(GeometryChoice::Both) => vec![Geometry::Planar, Geometry::Confocal],
    };
    let mut ctx = Ctx {
        emit: scn.emit.clone(),
        pgm: scn.pgm,
        scn,
        geometries,
        out: Outcome::default(),
    };
    let header = format!(
        "rho0={:.6e}\ngrid_n={}\ngrid_extent={:.6e}",
        ctx.scn.train.rho0(),
        ctx.scn.grid.n(),
        ctx.scn.grid.extent()
    );
    ctx.line(header);
    match command {
        Command::Run => run(&mut ctx)?,
        Command::GainMap => gain_map(&mut ctx)?,
        Command::NoiseMap => noise_map(&mut ctx)?,
        Command::Amplify => amplify(&mut ctx)?,
        Command::Simulate => simulate(&mut ctx)?,
        Command::Modes => modes_report(&mut ctx)?,
        Command::Validate => validate(&mut ctx)?,
    }
    Ok(ctx.out)
}

/// Writes every file of `outcome` under `dir`, creating it if needed.
pub fn write_outcome(outcome: &Outcome, dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    if outcome.files.is_empty() {
        return Ok(Vec::new());
    }
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    outcome
        .files
        .iter()
        .map(|(name, bytes)| {
            let path = dir.join(name);
            std::fs::write(&path, bytes).map_err(|e| CliError::io(&path, e))?;
            Ok(path)
        })
        .collect()
}

fn validity_line(v: &ValidityCheck, precision: usize) -> String {
    format!(
        "validity_figure={:.*} ({}, threshold {})",
        precision, v.figure, v.status, v.threshold
    )
}

fn validity_warning(v: &ValidityCheck) -> Option<&'static str> {
    match v.status {
        ValidityStatus::Pass => None,
        ValidityStatus::Fail => {
            Some("warning: validity figure below threshold; dropped vacuum-noise terms may matter")
        }
        ValidityStatus::Undefined => Some("warning: infinite pupil; validity figure undefined"),
    }
}

fn report_for(ctx: &Ctx, g: Geometry) -> Result<DetectionReport, CliError> {
    let s = &ctx.scn;
    detection_report(&s.object, &s.cavity.with_geometry(g), &s.train, &s.detector, s.threshold).map_err(core_err)
}

fn noise_values(report: &DetectionReport) -> Vec<f64> {
    report
        .noise_figure
        .values()
        .iter()
        .map(|f| f.unwrap_or(f64::NAN))
        .collect()
}

fn amplified(ctx: &Ctx, g: Geometry) -> Result<PropagationResult, CliError> {
    let s = &ctx.scn;
    propagation::amplify(&s.object.to_complex(), &s.cavity.with_geometry(g), &s.train).map_err(core_err)
}

fn emit_image(ctx: &mut Ctx, g: Geometry, result: &PropagationResult) {
    let grid = *result.image.grid();
    let mag: Vec<f64> = result.image.values().iter().map(|v| v.norm()).collect();
    let phase: Vec<f64> = result.image.values().iter().map(|v| v.arg()).collect();
    ctx.field(Some(g), "image_magnitude", &grid, &mag);
    ctx.field(Some(g), "image_phase", &grid, &phase);
}

fn odd_object_weight(ctx: &Ctx) -> f64 {
    ctx.scn.object.to_complex().odd_fraction()
}

fn run(ctx: &mut Ctx) -> Result<(), CliError> {
    for g in ctx.geometries.clone() {
        let report = report_for(ctx, g)?;
        let peak_g = report.gain.max();
        let min_f = report
            .noise_figure
            .values()
            .iter()
            .flatten()
            .copied()
            .fold(f64::INFINITY, f64::min);
        ctx.line(format!("[{g}]"));
        ctx.line(format!("peak_G={peak_g:.6}"));
        if min_f.is_finite() {
            ctx.line(format!("min_F={min_f:.6}"));
        } else {
            ctx.line("min_F=undefined");
        }
        ctx.line(validity_line(&report.validity, 6));
        if let Some(w) = validity_warning(&report.validity) {
            ctx.line(w);
        }
        if !report.long_window {
            ctx.line("warning: detection window shorter than 100 cavity lifetimes");
        }
        if g == Geometry::Confocal {
            let odd = odd_object_weight(ctx);
            if odd > ODD_WEIGHT_TOLERANCE {
                ctx.line(format!(
                    "warning: confocal cavity drops the odd object component (weight {odd:.6})"
                ));
            }
        }

        let grid = *report.grid();
        for artifact in ctx.emit.clone() {
            match artifact {
                Artifact::GainMap => ctx.field(Some(g), "gain", &grid, report.gain.values()),
                Artifact::NoiseMap => ctx.field(Some(g), "noise_figure", &grid, &noise_values(&report)),
                Artifact::Image => {
                    let result = amplified(ctx, g)?;
                    emit_image(ctx, g, &result);
                }
                Artifact::Counts => {
                    let mc = monte_carlo_image(&report.mean_field(), &report.variance_field(), ctx.scn.seed, ctx.scn.shots)
                        .map_err(core_err)?;
                    ctx.field(Some(g), "mc_mean", &grid, mc.mean.values());
                    ctx.field(Some(g), "mc_variance", &grid, mc.variance.values());
                }
            }
        }
    }
    Ok(())
}

fn gain_map(ctx: &mut Ctx) -> Result<(), CliError> {
    for g in ctx.geometries.clone() {
        let s = &ctx.scn;
        let map = transfer::gain_map(&s.cavity.with_geometry(g), &s.train, &s.grid).map_err(core_err)?;
        ctx.line(format!("[{g}]"));
        ctx.line(format!("peak_G={:.6}", map.max()));
        ctx.line(format!("min_G={:.6}", map.min()));
        ctx.field(Some(g), "gain", map.grid(), map.values());
    }
    Ok(())
}

fn noise_map(ctx: &mut Ctx) -> Result<(), CliError> {
    for g in ctx.geometries.clone() {
        let s = &ctx.scn;
        let map = transfer::noise_figure_map(&s.cavity.with_geometry(g), &s.train, &s.grid, s.detector.eta())
            .map_err(core_err)?;
        let i = map.argmin();
        let (row, col) = (i / map.grid().side(), i % map.grid().side());
        let grid = *map.grid();
        ctx.line(format!("[{g}]"));
        ctx.line(format!("min_F={:.6}", map.min()));
        ctx.line(format!("max_F={:.6}", map.max()));
        ctx.line(format!(
            "min_F_radius_rho0={:.6}",
            grid.radius(row, col) / ctx.scn.train.rho0()
        ));
        ctx.field(Some(g), "noise_figure", &grid, map.values());
    }
    Ok(())
}

fn amplify(ctx: &mut Ctx) -> Result<(), CliError> {
    let mut images = Vec::new();
    for g in ctx.geometries.clone() {
        let result = amplified(ctx, g)?;
        let peak = result.image.values().iter().map(|v| v.norm()).fold(0.0, f64::max);
        ctx.line(format!("[{g}]"));
        ctx.line(format!("peak_magnitude={peak:.6e}"));
        if let Some(odd) = result.odd_discarded {
            ctx.line(format!("odd_discarded={odd:.6}"));
        }
        ctx.line(validity_line(&result.validity, 6));
        if let Some(w) = validity_warning(&result.validity) {
            ctx.line(w);
        }
        emit_image(ctx, g, &result);
        images.push(result.image);
    }
    if let [planar, confocal] = images.as_slice() {
        let mid = planar.grid().center();
        let (a, b) = (*planar.at(mid, mid), *confocal.at(mid, mid));
        let on_axis = relative_or_absolute(a - b, b);
        ctx.line("[difference]");
        ctx.line(format!("l2_difference={:.6e}", planar.relative_l2(confocal)));
        ctx.line(format!("on_axis_difference={on_axis:.6e}"));
    }
    Ok(())
}

fn relative_or_absolute(diff: Complex64, reference: Complex64) -> f64 {
    if reference.norm() > 0.0 {
        diff.norm() / reference.norm()
    } else {
        diff.norm()
    }
}

fn simulate(ctx: &mut Ctx) -> Result<(), CliError> {
    for g in ctx.geometries.clone() {
        let report = report_for(ctx, g)?;
        let (mean, var) = (report.mean_field(), report.variance_field());
        let mc = monte_carlo_image(&mean, &var, ctx.scn.seed, ctx.scn.shots).map_err(core_err)?;

        // empirical F against the analytic one, over unmasked pixels
        let (mut f_an, mut f_mc, mut used) = (0.0, 0.0, 0usize);
        for (i, f) in report.noise_figure.values().iter().enumerate() {
            let (Some(f), Some(ro)) = (f, report.object.values()[i].snr) else {
                continue;
            };
            let (m, v) = (mc.mean.values()[i], mc.variance.values()[i]);
            if v > 0.0 && m > 0.0 {
                f_an += f;
                f_mc += ro / (m * m / v);
                used += 1;
            }
        }

        ctx.line(format!("[{g}]"));
        ctx.line(format!("shots={}", mc.shots));
        ctx.line(format!("seed={}", ctx.scn.seed));
        ctx.line(format!("peak_mean_counts={:.6}", mean.max()));
        ctx.line(format!("fraction_within_3se={:.6}", mc.fraction_within(&mean, &var, 3.0)));
        if used > 0 {
            ctx.line(format!("mean_F={:.6}", f_an / used as f64));
            ctx.line(format!("mean_F_mc={:.6}", f_mc / used as f64));
        }
        if mc.low_mean_pixels > 0 {
            ctx.line(format!(
                "warning: {} pixels below {} mean counts; Gaussian count model is rough there",
                mc.low_mean_pixels,
                paramp_core::detection::GAUSSIAN_MIN_MEAN
            ));
        }
        let grid = *mean.grid();
        let last: Vec<f64> = mc.last_shot.values().iter().map(|&c| c as f64).collect();
        ctx.field(Some(g), "mc_mean", &grid, mc.mean.values());
        ctx.field(Some(g), "mc_variance", &grid, mc.variance.values());
        ctx.field(Some(g), "counts", &grid, &last);
    }
    Ok(())
}

fn modes_report(ctx: &mut Ctx) -> Result<(), CliError> {
    let spec = ctx.scn.modes;
    let basis = ModeBasis::new(spec.waist, spec.pmax, spec.lmax, &ctx.scn.grid).map_err(core_err)?;
    let dev = basis.gram_deviation();
    let coeffs = modes::decompose(&ctx.scn.object.to_complex(), &basis).map_err(core_err)?;
    let (_, odd) = modes::split_even_odd(&coeffs);
    let total: f64 = coeffs.entries.iter().map(|(_, c)| c.norm_sqr()).sum();
    let odd_weight: f64 = odd.entries.iter().map(|(_, c)| c.norm_sqr()).sum();

    ctx.line(format!("waist={:.6e}", spec.waist));
    ctx.line(format!("pmax={}", spec.pmax));
    ctx.line(format!("lmax={}", spec.lmax));
    ctx.line(format!("modes={}", basis.len()));
    ctx.line(format!("gram_max_offdiag={:.6e}", dev.max_offdiag));
    ctx.line(format!("gram_max_diag_deviation={:.6e}", dev.max_diag));
    if let Some(r) = coeffs.residual {
        ctx.line(format!("object_residual={r:.6e}"));
    }
    if total > 0.0 {
        ctx.line(format!("object_odd_weight={:.6e}", odd_weight / total));
    }
    Ok(())
}

fn validate(ctx: &mut Ctx) -> Result<(), CliError> {
    let s = &ctx.scn;
    let peak = s.object.values().iter().map(|v| v * v).fold(0.0, f64::max);
    let check = ValidityCheck::evaluate(peak, &s.train, &s.cavity, s.threshold).map_err(core_err)?;
    let long = s.detector.long_window(s.cavity.gamma());
    ctx.line(validity_line(&check, 1));
    if let Some(w) = validity_warning(&check) {
        ctx.line(w);
    }
    if !long {
        ctx.line("warning: detection window shorter than 100 cavity lifetimes");
    }
    Ok(())
}
