//! Focal-parameter optimisation of the pair collection rate.
//!
//! For a fixed f_p the rate has a single ridge in f_si^d; the ridge point
//! (f_si^{d,opt}, R^max_{c,f_p}) is found by a coarse log scan followed by
//! golden-section refinement. The summit (f_p^opt, R_c^max) maximises the
//! ridge over f_p the same way.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::amplitude::AmplitudeEngine;
use crate::dispersion::{CrystalSpec, DispersionModel};
use crate::exec::Executor;
use crate::lgmodes::{FocalConfig, ModeSpec};
use crate::quadrature::QuadratureSettings;
use crate::rates::{golden_max, kernel_rate_value, log_space, QTable, RateSettings};
use crate::{Error, Result};

/// Anything that can evaluate R_c(mode, f_p, f_si^d) at a fixed temperature.
pub trait RateModel: Sync {
    fn rate(&self, mode: &ModeSpec, focal: &FocalConfig) -> Result<f64>;
}

/// Kernel-route rates at the engine temperature.
#[derive(Debug, Clone)]
pub struct KernelRates<'a> {
    engine: &'a AmplitudeEngine<'a>,
    table: QTable,
}

impl<'a> KernelRates<'a> {
    pub fn new(engine: &'a AmplitudeEngine<'a>, settings: &RateSettings) -> Result<Self> {
        Ok(Self { engine, table: QTable::new(engine, settings)? })
    }

    pub fn table(&self) -> &QTable {
        &self.table
    }

    pub fn engine(&self) -> &AmplitudeEngine<'a> {
        self.engine
    }
}

impl RateModel for KernelRates<'_> {
    fn rate(&self, mode: &ModeSpec, focal: &FocalConfig) -> Result<f64> {
        let sum = self.engine.degenerate_sum(mode, focal)?;
        Ok(kernel_rate_value(&self.table, &sum))
    }
}

/// Log-spaced search interval.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct SearchRange {
    pub lo: f64,
    pub hi: f64,
    pub points: usize,
}

impl SearchRange {
    pub fn validate(&self, name: &str) -> Result<()> {
        if !(self.lo > 0.0 && self.hi > self.lo && self.points >= 3 && self.hi.is_finite()) {
            return Err(Error::Contract(format!("invalid {name} search range {self:?}")));
        }
        Ok(())
    }

    pub fn values(&self) -> Vec<f64> {
        log_space(self.lo, self.hi, self.points)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields, default))]
pub struct OptimizerSettings {
    pub f_si: SearchRange,
    pub f_p: SearchRange,
    /// Relative tolerance of the golden-section refinement.
    pub rel_tolerance: f64,
    /// Factor by which a range is widened once when the optimum sits on it.
    pub widen_factor: f64,
}

impl Default for OptimizerSettings {
    fn default() -> Self {
        Self {
            f_si: SearchRange { lo: 0.05, hi: 20.0, points: 25 },
            f_p: SearchRange { lo: 0.05, hi: 10.0, points: 19 },
            rel_tolerance: 1e-3,
            widen_factor: 4.0,
        }
    }
}

impl OptimizerSettings {
    pub fn validate(&self) -> Result<()> {
        self.f_si.validate("f_si")?;
        self.f_p.validate("f_p")?;
        if !(self.rel_tolerance > 0.0 && self.rel_tolerance < 0.5) || !(self.widen_factor > 1.0) {
            return Err(Error::Contract(format!("invalid optimiser tolerances {self:?}")));
        }
        Ok(())
    }
}

/// Ridge point: the best f_si^d at a given f_p.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ColumnOptimum {
    pub f_p: f64,
    pub f_si: f64,
    pub rate: f64,
    /// Best coarse-grid sample the refinement started from.
    pub coarse_rate: f64,
    pub widened: bool,
}

/// Global optimum (f_p^opt, f_si^{d,opt}, R_c^max).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summit {
    pub f_p: f64,
    pub f_si: f64,
    pub rate: f64,
}

/// Indices of coarse-scan local maxima (plateaus count once, at their left end).
fn local_maxima(v: &[f64]) -> Vec<usize> {
    let n = v.len();
    let mut out = Vec::new();
    for i in 0..n {
        let left = i == 0 || v[i] > v[i - 1];
        let mut j = i;
        while j + 1 < n && v[j + 1] == v[i] {
            j += 1;
        }
        let right = j + 1 == n || v[i] > v[j + 1];
        if left && right && (i == 0 || v[i] != v[i - 1]) {
            out.push(i);
        }
    }
    out
}

fn argmax_smallest(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}

/// Coarse scan plus golden refinement of a one-parameter function. Widens the
/// range once by `widen` when the best sample sits on a boundary.
fn maximise_1d<F: FnMut(f64) -> Result<f64>>(
    range: &SearchRange,
    rel_tol: f64,
    widen: f64,
    parameter: &'static str,
    mut g: F,
) -> Result<(f64, f64, f64, bool)> {
    let mut range = *range;
    let mut widened = false;
    loop {
        let xs = range.values();
        let values = xs.iter().map(|&x| g(x)).collect::<Result<Vec<_>>>()?;
        let best = argmax_smallest(&values);
        let n = xs.len();
        if best == 0 || best + 1 == n {
            let side = if best == 0 { "lower" } else { "upper" };
            let bound = xs[best];
            if widened {
                return Err(Error::BoundaryHit { parameter, side, bound });
            }
            widened = true;
            let extra = ((widen.ln() / (xs[1] / xs[0]).ln()).ceil() as usize).max(1);
            if best == 0 {
                range = SearchRange { lo: range.lo / widen, hi: range.hi, points: range.points + extra };
            } else {
                range = SearchRange { lo: range.lo, hi: range.hi * widen, points: range.points + extra };
            }
            continue;
        }
        let coarse = values[best];
        let mut candidates = alloc::vec![best];
        for m in local_maxima(&values) {
            if m != best && m > 0 && m + 1 < n && m.abs_diff(best) > 2 {
                candidates.push(m);
            }
        }
        candidates.sort_unstable();
        let mut top: Option<(f64, f64)> = None;
        for i in candidates {
            let (x, v) = golden_max(xs[i - 1], xs[i + 1], (1.0 + rel_tol).ln(), &mut g)?;
            let (x, v) = if v >= values[i] { (x, v) } else { (xs[i], values[i]) };
            top = match top {
                Some((bx, bv)) if bv > v || (bv == v && bx <= x) => Some((bx, bv)),
                _ => Some((x, v)),
            };
        }
        let (x, v) = top.expect("at least one candidate");
        return Ok((x, v, coarse, widened));
    }
}

/// Best f_si^d at fixed f_p: coarse log scan then golden-section refinement.
pub fn opt_fsi_given_fp<M: RateModel + ?Sized>(
    model: &M,
    mode: &ModeSpec,
    f_p: f64,
    settings: &OptimizerSettings,
) -> Result<ColumnOptimum> {
    settings.validate()?;
    let (f_si, rate, coarse_rate, widened) =
        maximise_1d(&settings.f_si, settings.rel_tolerance, settings.widen_factor, "f_si", |f_si| {
            model.rate(mode, &FocalConfig::new(f_p, f_si)?)
        })?;
    Ok(ColumnOptimum { f_p, f_si, rate, coarse_rate, widened })
}

/// Summit of the ridge over f_p.
pub fn summit<M: RateModel + ?Sized>(model: &M, mode: &ModeSpec, settings: &OptimizerSettings) -> Result<Summit> {
    settings.validate()?;
    let (f_p, rate, _, _) = maximise_1d(&settings.f_p, settings.rel_tolerance, settings.widen_factor, "f_p", |f_p| {
        Ok(opt_fsi_given_fp(model, mode, f_p, settings)?.rate)
    })?;
    let c = opt_fsi_given_fp(model, mode, f_p, settings)?;
    Ok(Summit { f_p, f_si: c.f_si, rate: c.rate.max(rate) })
}

/// R_c over a log (f_p, f_si^d) grid with its ridge and summit.
#[derive(Debug, Clone, PartialEq)]
pub struct RateSurface {
    pub mode: ModeSpec,
    pub f_p_grid: Vec<f64>,
    pub f_si_grid: Vec<f64>,
    /// values[i_p * f_si_grid.len() + i_si].
    pub values: Vec<f64>,
    pub ridge: Vec<ColumnOptimum>,
    pub summit: Summit,
}

impl RateSurface {
    pub fn value(&self, i_p: usize, i_si: usize) -> f64 {
        self.values[i_p * self.f_si_grid.len() + i_si]
    }
}

/// Fill a rate surface; ridge columns at every f_p grid value and the summit
/// refined over f_p.
pub fn rate_surface<M: RateModel, E: Executor>(
    exec: &E,
    model: &M,
    mode: &ModeSpec,
    f_p_range: &SearchRange,
    f_si_range: &SearchRange,
    settings: &OptimizerSettings,
) -> Result<RateSurface> {
    f_p_range.validate("f_p")?;
    f_si_range.validate("f_si")?;
    if f_p_range.points < 8 || f_si_range.points < 8 {
        return Err(Error::Contract(format!(
            "rate surfaces need at least 8×8 points, got {}×{}",
            f_p_range.points, f_si_range.points
        )));
    }
    let f_p_grid = f_p_range.values();
    let f_si_grid = f_si_range.values();
    let columns = exec.map(f_p_grid.clone(), |f_p| -> Result<(Vec<f64>, ColumnOptimum)> {
        let vals = f_si_grid
            .iter()
            .map(|&f_si| model.rate(mode, &FocalConfig::new(f_p, f_si)?))
            .collect::<Result<Vec<_>>>()?;
        let col = opt_fsi_given_fp(model, mode, f_p, settings)?;
        Ok((vals, col))
    });
    let mut values = Vec::with_capacity(f_p_grid.len() * f_si_grid.len());
    let mut ridge = Vec::with_capacity(f_p_grid.len());
    for c in columns {
        let (vals, mut col) = c?;
        let grid_best = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if grid_best > col.rate {
            let i = argmax_smallest(&vals);
            col = ColumnOptimum { f_si: f_si_grid[i], rate: vals[i], ..col };
        }
        values.extend(vals);
        ridge.push(col);
    }
    let summit = dominant_summit(summit(model, mode, settings)?, &ridge);
    Ok(RateSurface { mode: *mode, f_p_grid, f_si_grid, values, ridge, summit })
}

/// The summit, replaced by the best ridge point if that one is higher.
fn dominant_summit(s: Summit, ridge: &[ColumnOptimum]) -> Summit {
    let mut out = s;
    for r in ridge {
        if r.rate > out.rate {
            out = Summit { f_p: r.f_p, f_si: r.f_si, rate: r.rate };
        }
    }
    out
}

/// Ridge points at the given f_p values plus the summit, which dominates them.
pub fn ridge_and_summit<M: RateModel, E: Executor>(
    exec: &E,
    model: &M,
    mode: &ModeSpec,
    f_p_values: &[f64],
    settings: &OptimizerSettings,
) -> Result<(Vec<ColumnOptimum>, Summit)> {
    let ridge = exec
        .map(f_p_values.to_vec(), |f_p| opt_fsi_given_fp(model, mode, f_p, settings))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let s = dominant_summit(summit(model, mode, settings)?, &ridge);
    Ok((ridge, s))
}

/// Summits keyed by (l, n_si).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ModeTable {
    pub entries: BTreeMap<(u32, u32), Summit>,
}

impl ModeTable {
    pub fn get(&self, l: u32, n: u32) -> Option<&Summit> {
        self.entries.get(&(l, n))
    }
}

/// One summit per (l, n_si) with l ≤ l_max, n_si ≤ n_max.
pub fn mode_table<M: RateModel, E: Executor>(
    exec: &E,
    model: &M,
    l_max: u32,
    n_max: u32,
    index_cap: u32,
    settings: &OptimizerSettings,
) -> Result<ModeTable> {
    if l_max > index_cap || n_max > index_cap {
        return Err(Error::Contract(format!(
            "mode table up to (l, n) = ({l_max}, {n_max}) exceeds the index cap {index_cap}"
        )));
    }
    let keys: Vec<(u32, u32)> = (0..=l_max).flat_map(|l| (0..=n_max).map(move |n| (l, n))).collect();
    let out = exec.map(keys.clone(), |(l, n)| summit(model, &ModeSpec::symmetric(l, n), settings));
    let mut entries = BTreeMap::new();
    for (k, r) in keys.into_iter().zip(out) {
        entries.insert(k, r?);
    }
    Ok(ModeTable { entries })
}

/// R_b(f_p^opt(a), f_si re-optimised) / R_b^max, in [0, 1].
pub fn crossmode_penalty<M: RateModel + ?Sized>(
    model: &M,
    summit_a: &Summit,
    mode_b: &ModeSpec,
    summit_b: &Summit,
    settings: &OptimizerSettings,
) -> Result<f64> {
    let col = opt_fsi_given_fp(model, mode_b, summit_a.f_p, settings)?;
    if summit_b.rate <= 0.0 {
        return Err(Error::Contract(format!("mode {mode_b:?} has a non-positive R_c^max")));
    }
    Ok((col.rate / summit_b.rate).clamp(0.0, 1.0))
}

/// Ridge point at one temperature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TempScanEntry {
    pub temperature: f64,
    pub f_si: f64,
    pub rate: f64,
    /// Φ_{1/2}, when the crystal phase-matches at this temperature.
    pub phi_half: Option<f64>,
}

/// opt_fsi_given_fp at each temperature.
#[allow(clippy::too_many_arguments)]
pub fn temp_scan<E: Executor>(
    exec: &E,
    model: &DispersionModel,
    crystal: &CrystalSpec,
    quadrature: &QuadratureSettings,
    rates: &RateSettings,
    mode: &ModeSpec,
    f_p: f64,
    temperatures: &[f64],
    settings: &OptimizerSettings,
) -> Result<Vec<TempScanEntry>> {
    let out = exec.map(temperatures.to_vec(), |t| -> Result<TempScanEntry> {
        model.check_temperature(t)?;
        let c = crystal.at_temperature(t);
        let engine = AmplitudeEngine::new(model, c, *quadrature)?;
        let k = KernelRates::new(&engine, rates)?;
        let col = opt_fsi_given_fp(&k, mode, f_p, settings)?;
        Ok(TempScanEntry { temperature: t, f_si: col.f_si, rate: col.rate, phi_half: model.phi_half(t, &c).ok() })
    });
    out.into_iter().collect()
}
