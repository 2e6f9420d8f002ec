//! Command-line front end.
//!
//! Exit statuses: 0 success, 1 computational failure, 2 usage or config
//! failure.

use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use lgbright_core::amplitude::AmplitudeEngine;
use lgbright_core::dispersion::DispersionModel;
use lgbright_core::lgmodes::{FocalConfig, ModeSpec, DEFAULT_INDEX_CAP};
use lgbright_core::optimizer::{
    crossmode_penalty, mode_table, rate_surface, ridge_and_summit, summit, temp_scan, KernelRates, SearchRange, Summit,
};
use lgbright_core::rates::{
    pair_rate_kernel, spectrum, spectrum_full, spectrum_quadratic, waist_surface, FrequencyGrid, Normalization,
    PumpWaistPolicy, SpectrumResult, WaistAxis,
};
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{git_hash, RunConfig, CONFIG_ENV};
use crate::error::{CliError, CliResult};
use crate::model_io::ModelDocument;
use crate::output::{fmt_num, OutputDir, Table};
use crate::parallel::RayonExecutor;

#[derive(Debug, Parser)]
#[command(
    name = "lgbright",
    version,
    about = "Brightness of LG-projected photon pairs from type-0 ppKTP",
    after_help = "Defaults: 30 mm ppKTP, 3.425 µm poling, 405 nm pump, 24.5 °C, \
                  calibrated Fradkin/Emanueli n_z model, spectra on ω_r ∈ [0.7, 1.3] \
                  (2001 points), rate window ω_r ∈ [0.55, 1.45], f_p ∈ [0.05, 10], \
                  f_si ∈ [0.05, 20]. Precedence: flags > config file > defaults."
)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// JSON run configuration.
    #[arg(long, global = true, env = CONFIG_ENV)]
    pub config: Option<PathBuf>,
    /// Output directory; every file of the run is written inside it.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads (default: one per core).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Crystal temperature, °C.
    #[arg(long, global = true)]
    pub temp: Option<f64>,
    /// Built-in dispersion model name or model JSON path.
    #[arg(long, global = true)]
    pub model: Option<String>,
    /// Spectrum normalisation.
    #[arg(long, global = true, value_enum)]
    pub normalization: Option<NormArg>,
    /// Also write plot.py referencing the CSV outputs.
    #[arg(long, global = true)]
    pub emit_plot_script: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum NormArg {
    GlobalMax,
    Raw,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MethodArg {
    Degenerate,
    Quadratic,
    Full,
}

/// `lo,hi,points`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Span {
    pub lo: f64,
    pub hi: f64,
    pub points: usize,
}

fn parse_span(s: &str) -> Result<Span, String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != 3 {
        return Err(format!("expected lo,hi,points, got `{s}`"));
    }
    let lo = parts[0].parse().map_err(|_| format!("bad number `{}`", parts[0]))?;
    let hi = parts[1].parse().map_err(|_| format!("bad number `{}`", parts[1]))?;
    let points = parts[2].parse().map_err(|_| format!("bad point count `{}`", parts[2]))?;
    Ok(Span { lo, hi, points })
}

/// `l,n:l,n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModePair {
    pub a: (u32, u32),
    pub b: (u32, u32),
}

fn parse_pair(s: &str) -> Result<ModePair, String> {
    let one = |t: &str| -> Result<(u32, u32), String> {
        let v: Vec<&str> = t.split(',').map(str::trim).collect();
        match v.as_slice() {
            [l, n] => {
                Ok((l.parse().map_err(|_| format!("bad l `{l}`"))?, n.parse().map_err(|_| format!("bad n `{n}`"))?))
            }
            _ => Err(format!("expected l,n, got `{t}`")),
        }
    };
    let (a, b) = s.split_once(':').ok_or_else(|| format!("expected l,n:l,n, got `{s}`"))?;
    Ok(ModePair { a: one(a)?, b: one(b)? })
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case", tag = "subcommand")]
pub enum Command {
    /// Normalised coincidence spectra P(ω_r), one CSV per parameter set.
    Spectrum(SpectrumArgs),
    /// R_c over an (f_p, f_si^d) grid with ridge and summit.
    Surface(SurfaceArgs),
    /// Ridge f_si^{d,opt}(f_p) and summit (f_p^opt, R_c^max) of one mode.
    Optimize(ModeArgs),
    /// Summits of every (l, n_si) up to the given indices.
    ModeTable(ModeTableArgs),
    /// R_c over (w_s, w_i) from the full closed form.
    WaistSurface(WaistSurfaceArgs),
    /// Ridge point f_si^{d,opt} at fixed f_p across temperatures.
    TempScan(TempScanArgs),
    /// Full, degenerate and quadratic-Φ spectra side by side.
    Compare(CompareArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct SpectrumArgs {
    /// Azimuthal index l; comma-separated values form a product sweep.
    #[arg(long, value_delimiter = ',', required = true)]
    pub l: Vec<u32>,
    /// Radial index n_si = n_s = n_i.
    #[arg(long, value_delimiter = ',', required = true)]
    pub n: Vec<u32>,
    /// Pump focal parameter f_p.
    #[arg(long, value_delimiter = ',', required = true)]
    pub fp: Vec<f64>,
    /// Signal/idler focal parameter f_si^d.
    #[arg(long, value_delimiter = ',', required = true)]
    pub fsi: Vec<f64>,
    /// Amplitude formula.
    #[arg(long, value_enum, default_value = "degenerate")]
    pub method: MethodArg,
    /// ω_r grid as start,stop,points.
    #[arg(long, value_parser = parse_span)]
    pub grid: Option<Span>,
}

#[derive(Debug, Args, Serialize)]
pub struct ModeArgs {
    /// Azimuthal index l.
    #[arg(long)]
    pub l: u32,
    /// Radial index n_si.
    #[arg(long)]
    pub n: u32,
}

#[derive(Debug, Args, Serialize)]
pub struct SurfaceArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub mode: ModeArgs,
    /// f_p grid as lo,hi,points (log-spaced).
    #[arg(long, value_parser = parse_span)]
    pub fp_range: Option<Span>,
    /// f_si^d grid as lo,hi,points (log-spaced).
    #[arg(long, value_parser = parse_span)]
    pub fsi_range: Option<Span>,
}

#[derive(Debug, Args, Serialize)]
pub struct ModeTableArgs {
    /// Largest azimuthal index.
    #[arg(long)]
    pub lmax: u32,
    /// Largest radial index.
    #[arg(long)]
    pub nmax: u32,
    /// Cross-mode penalty of b at a's optimal f_p, as la,na:lb,nb. Repeatable.
    #[arg(long = "penalty", value_parser = parse_pair)]
    pub penalties: Vec<ModePair>,
}

#[derive(Debug, Args, Serialize)]
pub struct WaistSurfaceArgs {
    /// Azimuthal index l.
    #[arg(long)]
    pub l: u32,
    /// Signal radial index n_s.
    #[arg(long)]
    pub ns: u32,
    /// Idler radial index n_i.
    #[arg(long)]
    pub ni: u32,
    /// w_s axis in µm as lo,hi,points.
    #[arg(long, value_parser = parse_span)]
    pub ws: Option<Span>,
    /// w_i axis in µm as lo,hi,points.
    #[arg(long, value_parser = parse_span)]
    pub wi: Option<Span>,
    /// Fixed pump waist in µm instead of optimising it per point.
    #[arg(long)]
    pub wp: Option<f64>,
    /// Skip the local refinement of the grid optimum.
    #[arg(long)]
    pub no_refine: bool,
}

#[derive(Debug, Args, Serialize)]
pub struct TempScanArgs {
    /// Azimuthal index l.
    #[arg(long)]
    pub l: u32,
    /// Radial index n_si.
    #[arg(long)]
    pub n: u32,
    /// Pump focal parameters.
    #[arg(long, value_delimiter = ',', required = true)]
    pub fp: Vec<f64>,
    /// Temperatures in °C.
    #[arg(long, value_delimiter = ',', required = true)]
    pub temps: Vec<f64>,
}

#[derive(Debug, Args, Serialize)]
pub struct CompareArgs {
    /// Azimuthal index l.
    #[arg(long)]
    pub l: u32,
    /// Radial index n_si.
    #[arg(long)]
    pub n: u32,
    /// Pump focal parameter f_p.
    #[arg(long)]
    pub fp: f64,
    /// Signal/idler focal parameter f_si^d.
    #[arg(long)]
    pub fsi: f64,
    /// ω_r grid as start,stop,points.
    #[arg(long, value_parser = parse_span)]
    pub grid: Option<Span>,
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn positive(name: &str, values: &[f64]) -> CliResult<()> {
    match values.iter().find(|v| !(**v > 0.0 && v.is_finite())) {
        Some(v) => Err(usage(format!("--{name} values must be positive, got {v}"))),
        None => Ok(()),
    }
}

fn check_cap(what: &str, v: u32) -> CliResult<()> {
    if v > DEFAULT_INDEX_CAP {
        return Err(usage(format!("{what} = {v} exceeds the index cap {DEFAULT_INDEX_CAP}")));
    }
    Ok(())
}

fn search_range(s: Span, flag: &str) -> CliResult<SearchRange> {
    let r = SearchRange { lo: s.lo, hi: s.hi, points: s.points };
    r.validate(flag).map_err(|e| usage(format!("--{flag}: {e}")))?;
    if r.points < 8 {
        return Err(usage(format!("--{flag} needs at least 8 points")));
    }
    Ok(r)
}

fn grid_of(s: Option<Span>, default: FrequencyGrid) -> CliResult<FrequencyGrid> {
    let g = s.map_or(default, |s| FrequencyGrid { start: s.lo, stop: s.hi, points: s.points });
    g.validate().map_err(|e| usage(format!("--grid: {e}")))?;
    Ok(g)
}

/// Flag-level checks that need no computation.
fn validate_command(cmd: &Command) -> CliResult<()> {
    match cmd {
        Command::Spectrum(a) => {
            positive("fp", &a.fp)?;
            positive("fsi", &a.fsi)?;
            for &l in &a.l {
                check_cap("l", l)?;
            }
            for &n in &a.n {
                check_cap("n", n)?;
            }
            grid_of(a.grid, FrequencyGrid::default())?;
        }
        Command::Surface(a) => {
            check_cap("l", a.mode.l)?;
            check_cap("n", a.mode.n)?;
            if let Some(s) = a.fp_range {
                search_range(s, "fp-range")?;
            }
            if let Some(s) = a.fsi_range {
                search_range(s, "fsi-range")?;
            }
        }
        Command::Optimize(a) => {
            check_cap("l", a.l)?;
            check_cap("n", a.n)?;
        }
        Command::ModeTable(a) => {
            check_cap("lmax", a.lmax)?;
            check_cap("nmax", a.nmax)?;
            for p in &a.penalties {
                for (l, n) in [p.a, p.b] {
                    check_cap("l", l)?;
                    check_cap("n", n)?;
                }
            }
        }
        Command::WaistSurface(a) => {
            for (k, v) in [("l", a.l), ("ns", a.ns), ("ni", a.ni)] {
                check_cap(k, v)?;
            }
            for (flag, s) in [("ws", a.ws), ("wi", a.wi)] {
                if let Some(s) = s {
                    if !(s.lo > 0.0 && s.hi > s.lo && s.points >= 2) {
                        return Err(usage(format!("--{flag} needs 0 < lo < hi and at least 2 points")));
                    }
                }
            }
            if let Some(wp) = a.wp {
                positive("wp", &[wp])?;
            }
        }
        Command::TempScan(a) => {
            check_cap("l", a.l)?;
            check_cap("n", a.n)?;
            positive("fp", &a.fp)?;
            if a.temps.iter().any(|t| !t.is_finite()) {
                return Err(usage("--temps must be finite"));
            }
        }
        Command::Compare(a) => {
            check_cap("l", a.l)?;
            check_cap("n", a.n)?;
            positive("fp", &[a.fp])?;
            positive("fsi", &[a.fsi])?;
            grid_of(a.grid, FrequencyGrid::default())?;
        }
    }
    Ok(())
}

/// Merge flags into the loaded configuration.
fn apply_overrides(cfg: &mut RunConfig, g: &GlobalArgs) {
    if let Some(p) = &g.out {
        cfg.output_dir = p.clone();
    }
    if let Some(t) = g.threads {
        cfg.threads = Some(t);
    }
    if let Some(t) = g.temp {
        cfg.crystal.temperature_c = t;
    }
    if let Some(m) = &g.model {
        cfg.dispersion_model = m.clone();
    }
    if let Some(n) = g.normalization {
        cfg.normalization = match n {
            NormArg::GlobalMax => Normalization::GlobalMax,
            NormArg::Raw => Normalization::Raw,
        };
    }
}

struct Run<'a> {
    cfg: &'a RunConfig,
    model: &'a DispersionModel,
    exec: RayonExecutor,
    out: OutputDir,
    provenance: Value,
}

impl<'a> Run<'a> {
    fn engine(&self) -> CliResult<AmplitudeEngine<'a>> {
        Ok(AmplitudeEngine::new(self.model, self.cfg.crystal.spec(), self.cfg.quadrature)?)
    }

    fn envelope(&mut self, name: &str, results: Value, converged: bool) -> CliResult<()> {
        let v = json!({ "provenance": self.provenance, "results": results });
        self.out.write_json(name, &v, converged)?;
        Ok(())
    }

    fn p_header(&self) -> &'static str {
        match self.cfg.normalization {
            Normalization::GlobalMax => "P_normalized",
            Normalization::Raw => "P",
        }
    }
}

fn method_tag(m: MethodArg) -> &'static str {
    match m {
        MethodArg::Degenerate => "degenerate",
        MethodArg::Quadratic => "quadratic",
        MethodArg::Full => "full",
    }
}

fn spectrum_of(
    run: &Run<'_>,
    engine: &AmplitudeEngine<'_>,
    method: MethodArg,
    mode: &ModeSpec,
    focal: &FocalConfig,
    grid: &FrequencyGrid,
) -> CliResult<SpectrumResult> {
    let norm = run.cfg.normalization;
    Ok(match method {
        MethodArg::Degenerate => spectrum(&run.exec, engine, mode, focal, grid, norm)?,
        MethodArg::Quadratic => spectrum_quadratic(&run.exec, engine, mode, focal, grid, norm)?,
        MethodArg::Full => {
            let w = engine.waists_from_focal(focal);
            spectrum_full(&run.exec, engine, mode, &w, grid, norm)?
        }
    })
}

fn cmd_spectrum(run: &mut Run<'_>, a: &SpectrumArgs) -> CliResult<()> {
    let engine = run.engine()?;
    let grid = grid_of(a.grid, run.cfg.spectrum_grid)?;
    let tag = method_tag(a.method);
    let mut summary = Vec::new();
    let mut all_converged = true;
    for &l in &a.l {
        for &n in &a.n {
            for &fp in &a.fp {
                for &fsi in &a.fsi {
                    let mode = ModeSpec::symmetric(l, n);
                    let focal = FocalConfig::new(fp, fsi)?;
                    let s = spectrum_of(run, &engine, a.method, &mode, &focal, &grid)?;
                    let mut t = Table::new(&["omega_r", run.p_header(), "method"]);
                    for (x, p) in s.omega_r.iter().zip(&s.probability) {
                        t.push(vec![fmt_num(*x), fmt_num(*p), tag.to_string()]);
                    }
                    let name = format!("spectrum_{tag}_l{l}_n{n}_fp{}_fsi{}.csv", fmt_num(fp), fmt_num(fsi));
                    run.out.write_table(&name, &t, s.converged)?;
                    all_converged &= s.converged;
                    summary.push(json!({
                        "file": name, "l": l, "n_si": n, "f_p": fp, "f_si": fsi,
                        "peak_omega_r": s.omega_r[s.argmax()], "peak_offset": s.peak_offset(),
                        "converged": s.converged,
                    }));
                }
            }
        }
    }
    run.envelope("spectrum.json", json!({ "method": tag, "spectra": summary }), all_converged)
}

fn summit_row(t: &mut Table, kind: &str, f_p: f64, f_si: f64, rate: f64, top: f64) {
    t.push(vec![kind.to_string(), fmt_num(f_p), fmt_num(f_si), fmt_num(rate), fmt_num(rate / top)]);
}

fn summit_json(s: &Summit) -> Value {
    json!({ "f_p": s.f_p, "f_si": s.f_si, "rate": s.rate })
}

fn cmd_surface(run: &mut Run<'_>, a: &SurfaceArgs) -> CliResult<()> {
    let engine = run.engine()?;
    let rates = KernelRates::new(&engine, &run.cfg.rates)?;
    let mode = ModeSpec::symmetric(a.mode.l, a.mode.n);
    let fp = a.fp_range.map_or(Ok(run.cfg.surface.f_p), |s| search_range(s, "fp-range"))?;
    let fsi = a.fsi_range.map_or(Ok(run.cfg.surface.f_si), |s| search_range(s, "fsi-range"))?;
    let surf = rate_surface(&run.exec, &rates, &mode, &fp, &fsi, &run.cfg.optimizer)?;
    let top = surf.summit.rate;
    let mut t = Table::new(&["kind", "f_p", "f_si", "R_c", "R_c_normalized"]);
    for (i, &f_p) in surf.f_p_grid.iter().enumerate() {
        for (j, &f_si) in surf.f_si_grid.iter().enumerate() {
            summit_row(&mut t, "grid", f_p, f_si, surf.value(i, j), top);
        }
    }
    for r in &surf.ridge {
        summit_row(&mut t, "ridge", r.f_p, r.f_si, r.rate, top);
    }
    summit_row(&mut t, "summit", surf.summit.f_p, surf.summit.f_si, top, top);
    let name = format!("surface_l{}_n{}.csv", a.mode.l, a.mode.n);
    run.out.write_table(&name, &t, true)?;
    let clip = pair_rate_kernel(&engine, rates.table(), &mode, &FocalConfig::new(surf.summit.f_p, surf.summit.f_si)?)?;
    run.envelope(
        "surface.json",
        json!({ "file": name, "l": a.mode.l, "n_si": a.mode.n, "summit": summit_json(&surf.summit), "clipped": clip.clipped }),
        true,
    )
}

fn cmd_optimize(run: &mut Run<'_>, a: &ModeArgs) -> CliResult<()> {
    let engine = run.engine()?;
    let rates = KernelRates::new(&engine, &run.cfg.rates)?;
    let mode = ModeSpec::symmetric(a.l, a.n);
    let f_p = run.cfg.optimizer.f_p.values();
    let (ridge, s) = ridge_and_summit(&run.exec, &rates, &mode, &f_p, &run.cfg.optimizer)?;
    let mut t = Table::new(&["kind", "f_p", "f_si", "R_c", "R_c_normalized"]);
    for r in &ridge {
        summit_row(&mut t, "ridge", r.f_p, r.f_si, r.rate, s.rate);
    }
    summit_row(&mut t, "summit", s.f_p, s.f_si, s.rate, s.rate);
    let name = format!("optimize_l{}_n{}.csv", a.l, a.n);
    run.out.write_table(&name, &t, true)?;
    let clip = pair_rate_kernel(&engine, rates.table(), &mode, &FocalConfig::new(s.f_p, s.f_si)?)?;
    run.envelope(
        "optimize.json",
        json!({ "file": name, "l": a.l, "n_si": a.n, "summit": summit_json(&s), "clipped": clip.clipped }),
        true,
    )
}

fn cmd_mode_table(run: &mut Run<'_>, a: &ModeTableArgs) -> CliResult<()> {
    let engine = run.engine()?;
    let rates = KernelRates::new(&engine, &run.cfg.rates)?;
    let table = mode_table(&run.exec, &rates, a.lmax, a.nmax, DEFAULT_INDEX_CAP, &run.cfg.optimizer)?;
    let mut t = Table::new(&["kind", "l", "n_si", "f_p_opt", "f_si_opt", "R_c_max", "diagonal"]);
    let mut entries = Vec::new();
    for (&(l, n), s) in &table.entries {
        t.push(vec![
            "summit".into(),
            l.to_string(),
            n.to_string(),
            fmt_num(s.f_p),
            fmt_num(s.f_si),
            fmt_num(s.rate),
            (l == n).to_string(),
        ]);
        entries.push(json!({ "l": l, "n_si": n, "summit": summit_json(s), "diagonal": l == n }));
    }
    run.out.write_table("mode_table.csv", &t, true)?;

    let mut penalties = Vec::new();
    if !a.penalties.is_empty() {
        let get = |k: (u32, u32)| -> CliResult<Summit> {
            match table.get(k.0, k.1) {
                Some(s) => Ok(*s),
                None => Ok(summit(&rates, &ModeSpec::symmetric(k.0, k.1), &run.cfg.optimizer)?),
            }
        };
        let mut p = Table::new(&["kind", "l_a", "n_a", "l_b", "n_b", "f_p", "penalty"]);
        for pair in &a.penalties {
            let (sa, sb) = (get(pair.a)?, get(pair.b)?);
            let mb = ModeSpec::symmetric(pair.b.0, pair.b.1);
            let v = crossmode_penalty(&rates, &sa, &mb, &sb, &run.cfg.optimizer)?;
            p.push(vec![
                "penalty".into(),
                pair.a.0.to_string(),
                pair.a.1.to_string(),
                pair.b.0.to_string(),
                pair.b.1.to_string(),
                fmt_num(sa.f_p),
                fmt_num(v),
            ]);
            penalties.push(json!({ "a": [pair.a.0, pair.a.1], "b": [pair.b.0, pair.b.1], "penalty": v }));
        }
        run.out.write_table("crossmode.csv", &p, true)?;
    }
    run.envelope("mode_table.json", json!({ "entries": entries, "penalties": penalties }), true)
}

fn axis_um(s: Option<Span>, default: WaistAxis) -> WaistAxis {
    let a = s.map_or(default, |s| WaistAxis { lo: s.lo, hi: s.hi, points: s.points });
    WaistAxis { lo: a.lo * 1e-6, hi: a.hi * 1e-6, points: a.points }
}

fn cmd_waist_surface(run: &mut Run<'_>, a: &WaistSurfaceArgs) -> CliResult<()> {
    let engine = run.engine()?;
    let mode = ModeSpec::new(a.l, a.ns, a.ni);
    let ws = axis_um(a.ws, run.cfg.waist.w_s_um);
    let wi = axis_um(a.wi, run.cfg.waist.w_i_um);
    let policy = a.wp.map_or(run.cfg.waist.pump, |w| PumpWaistPolicy::Fixed(w * 1e-6));
    let refine = run.cfg.waist.refine && !a.no_refine;
    let s = waist_surface(&run.exec, &engine, &mode, &ws, &wi, &policy, &run.cfg.waist.rates, refine)?;
    let mut t = Table::new(&["kind", "w_s_um", "w_i_um", "w_p_um", "R_c", "R_c_normalized"]);
    let top = s.argmax.3;
    for (i, &x) in s.w_s.iter().enumerate() {
        for (j, &y) in s.w_i.iter().enumerate() {
            let k = i * s.w_i.len() + j;
            t.push(vec![
                "grid".into(),
                fmt_num(x * 1e6),
                fmt_num(y * 1e6),
                fmt_num(s.w_p[k] * 1e6),
                fmt_num(s.values[k]),
                fmt_num(s.values[k] / top),
            ]);
        }
    }
    let (x, y, p, r) = s.argmax;
    t.push(vec!["summit".into(), fmt_num(x * 1e6), fmt_num(y * 1e6), fmt_num(p * 1e6), fmt_num(r), "1".into()]);
    let name = format!("waist_surface_l{}_ns{}_ni{}.csv", a.l, a.ns, a.ni);
    run.out.write_table(&name, &t, s.converged)?;
    run.envelope(
        "waist_surface.json",
        json!({
            "file": name, "l": a.l, "n_s": a.ns, "n_i": a.ni,
            "argmax_um": { "w_s": x * 1e6, "w_i": y * 1e6, "w_p": p * 1e6 }, "rate": r,
            "converged": s.converged,
        }),
        s.converged,
    )
}

fn cmd_temp_scan(run: &mut Run<'_>, a: &TempScanArgs) -> CliResult<()> {
    let mode = ModeSpec::symmetric(a.l, a.n);
    for &t in &a.temps {
        run.model
            .check_temperature(t)
            .map_err(|e| CliError::ConfigValue { key: "--temps".into(), message: e.to_string() })?;
    }
    let crystal = run.cfg.crystal.spec();
    let mut t = Table::new(&["kind", "T_C", "f_p", "f_si_opt", "R_c_max", "phi_half"]);
    let mut rows = Vec::new();
    for &fp in &a.fp {
        let scan = temp_scan(
            &run.exec,
            run.model,
            &crystal,
            &run.cfg.quadrature,
            &run.cfg.rates,
            &mode,
            fp,
            &a.temps,
            &run.cfg.optimizer,
        )?;
        for e in scan {
            t.push(vec![
                "ridge".into(),
                fmt_num(e.temperature),
                fmt_num(fp),
                fmt_num(e.f_si),
                fmt_num(e.rate),
                e.phi_half.map_or(String::new(), fmt_num),
            ]);
            rows.push(
                json!({ "T_C": e.temperature, "f_p": fp, "f_si": e.f_si, "rate": e.rate, "phi_half": e.phi_half }),
            );
        }
    }
    let name = format!("temp_scan_l{}_n{}.csv", a.l, a.n);
    run.out.write_table(&name, &t, true)?;
    run.envelope("temp_scan.json", json!({ "file": name, "rows": rows }), true)
}

fn cmd_compare(run: &mut Run<'_>, a: &CompareArgs) -> CliResult<()> {
    let engine = run.engine()?;
    let grid = grid_of(a.grid, run.cfg.spectrum_grid)?;
    let mode = ModeSpec::symmetric(a.l, a.n);
    let focal = FocalConfig::new(a.fp, a.fsi)?;
    let methods = [MethodArg::Full, MethodArg::Degenerate, MethodArg::Quadratic];
    let spectra =
        methods.iter().map(|&m| spectrum_of(run, &engine, m, &mode, &focal, &grid)).collect::<CliResult<Vec<_>>>()?;
    let mut t = Table::new(&["kind", "method", "omega_r", "value"]);
    for (m, s) in methods.iter().zip(&spectra) {
        for (x, p) in s.omega_r.iter().zip(&s.probability) {
            t.push(vec!["spectrum".into(), method_tag(*m).into(), fmt_num(*x), fmt_num(*p)]);
        }
    }
    let mut distances = Vec::new();
    for (i, j) in [(1, 0), (2, 0), (2, 1)] {
        let pair = format!("{}-vs-{}", method_tag(methods[i]), method_tag(methods[j]));
        let linf = spectra[i].linf_distance(&spectra[j]);
        let l2 = spectra[i].l2_distance(&spectra[j]);
        t.push(vec!["linf".into(), pair.clone(), String::new(), fmt_num(linf)]);
        t.push(vec!["l2".into(), pair.clone(), String::new(), fmt_num(l2)]);
        distances.push(json!({ "pair": pair, "linf": linf, "l2": l2 }));
    }
    let converged = spectra.iter().all(|s| s.converged);
    let name = format!("compare_l{}_n{}_fp{}_fsi{}.csv", a.l, a.n, fmt_num(a.fp), fmt_num(a.fsi));
    run.out.write_table(&name, &t, converged)?;
    run.envelope("compare.json", json!({ "file": name, "distances": distances }), converged)
}

/// Execute a parsed command line.
pub fn run(cli: &Cli) -> CliResult<()> {
    let started = Instant::now();
    let mut cfg = RunConfig::load_or_default(cli.global.config.as_deref())?;
    apply_overrides(&mut cfg, &cli.global);
    let model = cfg.validate()?;
    validate_command(&cli.command)?;
    let exec = RayonExecutor::new(cfg.threads).map_err(|e| CliError::Usage(format!("--threads: {e}")))?;
    let command = serde_json::to_value(&cli.command).expect("command serialises");
    let config_hash = git_hash(&serde_json::to_vec(&json!({ "config": &cfg, "command": &command })).expect("json"));
    let provenance = json!({
        "tool": env!("CARGO_PKG_NAME"),
        "version": env!("CARGO_PKG_VERSION"),
        "command": command,
        "config_hash": config_hash,
        "crystal": cfg.crystal,
        "dispersion_model": ModelDocument::from(&model),
        "settings": &cfg,
    });
    let out = OutputDir::create(&cfg.output_dir)?;
    let mut run = Run { cfg: &cfg, model: &model, exec, out, provenance };
    match &cli.command {
        Command::Spectrum(a) => cmd_spectrum(&mut run, a)?,
        Command::Surface(a) => cmd_surface(&mut run, a)?,
        Command::Optimize(a) => cmd_optimize(&mut run, a)?,
        Command::ModeTable(a) => cmd_mode_table(&mut run, a)?,
        Command::WaistSurface(a) => cmd_waist_surface(&mut run, a)?,
        Command::TempScan(a) => cmd_temp_scan(&mut run, a)?,
        Command::Compare(a) => cmd_compare(&mut run, a)?,
    }
    if cli.global.emit_plot_script {
        run.out.write_plot_script()?;
    }
    run.out.write_manifest(&run.provenance, started.elapsed().as_secs_f64())?;
    Ok(())
}
