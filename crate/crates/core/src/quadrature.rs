//! Quadrature: Gauss-Legendre rules, the adaptive u-integral of the
//! coincidence amplitude and an adaptive Gauss-Kronrod integrator.

use alloc::collections::BinaryHeap;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::f64::consts::PI;
#[allow(unused_imports)]
use num_traits::Float;

use num_complex::Complex64;

use crate::{Error, Result};

/// n-point Gauss-Legendre rule on [−1, 1].
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        assert!(n > 0, "Gauss-Legendre rule needs at least one node");
        let mut nodes = alloc::vec![0.0; n];
        let mut weights = alloc::vec![0.0; n];
        let nf = n as f64;
        for i in 0..n.div_ceil(2) {
            // Tricomi initial guess, then Newton on P_n.
            let mut x = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() <= 1e-16 * x.abs().max(1.0) {
                    let (_, d) = legendre_with_derivative(n, x);
                    dp = d;
                    break;
                }
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        Self { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Nodes and weights mapped onto [a, b].
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let c = 0.5 * (a + b);
        let h = 0.5 * (b - a);
        self.nodes.iter().zip(&self.weights).map(move |(&x, &w)| (c + h * x, h * w))
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        self.mapped(a, b).map(|(x, w)| w * f(x)).sum()
    }

    pub fn integrate_complex<F: FnMut(f64) -> Complex64>(&self, a: f64, b: f64, mut f: F) -> Complex64 {
        self.mapped(a, b).fold(Complex64::new(0.0, 0.0), |acc, (x, w)| acc + f(x) * w)
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let p = if n == 0 { 1.0 } else { p1 };
    let dp = if n == 0 { 0.0 } else { n as f64 * (x * p1 - p0) / (x * x - 1.0) };
    (p, dp)
}

/// Settings of the adaptive u-integral.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields, default))]
pub struct QuadratureSettings {
    /// Gauss-Legendre nodes per panel at the first level (≥ 16).
    pub base_nodes: usize,
    /// Number of node doublings before giving up.
    pub max_refinements: usize,
    /// Convergence threshold, relative to the L1 size of the integrand.
    pub rel_tolerance: f64,
}

impl Default for QuadratureSettings {
    fn default() -> Self {
        Self { base_nodes: 16, max_refinements: 6, rel_tolerance: 1e-10 }
    }
}

impl QuadratureSettings {
    pub fn validate(&self) -> Result<()> {
        if self.base_nodes < 16 {
            return Err(Error::Contract(alloc::format!("base_nodes must be at least 16, got {}", self.base_nodes)));
        }
        if !(self.rel_tolerance > 0.0) {
            return Err(Error::Contract(alloc::format!("rel_tolerance must be positive, got {}", self.rel_tolerance)));
        }
        Ok(())
    }
}

/// Converged value of ∫_{−1}^{1} f(u) e^{iΦu} du.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UIntegral {
    pub value: Complex64,
    /// |difference| between the last two levels.
    pub error: f64,
    pub converged: bool,
    pub panels: usize,
    pub nodes_per_panel: usize,
}

/// Above this |Φ| the interval is split into ⌈|Φ|/π⌉ panels.
pub const PANEL_THRESHOLD: f64 = 50.0;

/// Number of panels used for phase Φ.
pub fn panel_count(phi: f64) -> usize {
    if phi.abs() > PANEL_THRESHOLD {
        (phi.abs() / PI).ceil() as usize
    } else {
        1
    }
}

/// Adaptive Gauss-Legendre integrator for oscillatory u-integrals. Holds the
/// rules of every refinement level so repeated calls do not rebuild them.
#[derive(Debug, Clone)]
pub struct UIntegrator {
    settings: QuadratureSettings,
    rules: Vec<GaussLegendre>,
}

impl UIntegrator {
    pub fn new(settings: QuadratureSettings) -> Result<Self> {
        settings.validate()?;
        let rules = (0..=settings.max_refinements).map(|k| GaussLegendre::new(settings.base_nodes << k)).collect();
        Ok(Self { settings, rules })
    }

    pub fn settings(&self) -> &QuadratureSettings {
        &self.settings
    }

    fn level(&self, k: usize, panels: usize, phi: f64, f: &mut dyn FnMut(f64) -> Complex64) -> (Complex64, f64) {
        let rule = &self.rules[k];
        let width = 2.0 / panels as f64;
        let mut sum = Complex64::new(0.0, 0.0);
        let mut l1 = 0.0;
        for p in 0..panels {
            let a = -1.0 + width * p as f64;
            let b = if p + 1 == panels { 1.0 } else { a + width };
            for (u, w) in rule.mapped(a, b) {
                let v = f(u);
                l1 += w * v.norm();
                sum += v * Complex64::from_polar(w, phi * u);
            }
        }
        (sum, l1)
    }

    /// ∫_{−1}^{1} f(u) e^{iΦu} du.
    ///
    /// Returns an error carrying the best estimate when the node doubling
    /// does not settle within `max_refinements`.
    pub fn integrate<F: FnMut(f64) -> Complex64>(&self, mut f: F, phi: f64) -> Result<UIntegral> {
        let out = self.integrate_unchecked(&mut f, phi);
        if out.converged {
            Ok(out)
        } else {
            Err(Error::NonConvergence { estimate_re: out.value.re, estimate_im: out.value.im, residual: out.error })
        }
    }

    /// Like [`Self::integrate`] but reports non-convergence through the flag.
    pub fn integrate_unchecked(&self, f: &mut dyn FnMut(f64) -> Complex64, phi: f64) -> UIntegral {
        let panels = panel_count(phi);
        let (mut prev, _) = self.level(0, panels, phi, f);
        let mut error = f64::INFINITY;
        for k in 1..self.rules.len() {
            let (cur, l1) = self.level(k, panels, phi, f);
            error = (cur - prev).norm();
            let scale = cur.norm().max(l1);
            if error <= self.settings.rel_tolerance * scale || scale == 0.0 {
                return UIntegral { value: cur, error, converged: true, panels, nodes_per_panel: self.rules[k].len() };
            }
            prev = cur;
        }
        UIntegral {
            value: prev,
            error,
            converged: false,
            panels,
            nodes_per_panel: self.rules[self.rules.len() - 1].len(),
        }
    }
}

/// ∫_{−1}^{1} f(u) e^{iΦu} du with a fresh integrator.
pub fn u_integral<F: FnMut(f64) -> Complex64>(
    integrand: F,
    phi: f64,
    settings: &QuadratureSettings,
) -> Result<UIntegral> {
    UIntegrator::new(*settings)?.integrate(integrand, phi)
}

// 15-point Kronrod extension of the 7-point Gauss rule.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
const WG: [f64; 4] =
    [0.129_484_966_168_869_7, 0.279_705_391_489_276_7, 0.381_830_050_505_118_9, 0.417_959_183_673_469_4];

/// Output of [`gauss_kronrod`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Adaptive<T> {
    pub value: T,
    pub error: f64,
    pub converged: bool,
    pub evaluations: usize,
}

/// Values an adaptive integrator can accumulate.
pub trait Integrand:
    Copy + core::ops::Add<Output = Self> + core::ops::Sub<Output = Self> + core::ops::Mul<f64, Output = Self>
{
    fn zero() -> Self;
    fn magnitude(self) -> f64;
}

impl Integrand for f64 {
    fn zero() -> Self {
        0.0
    }
    fn magnitude(self) -> f64 {
        self.abs()
    }
}

impl Integrand for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn magnitude(self) -> f64 {
        self.norm()
    }
}

struct Segment<T> {
    a: f64,
    b: f64,
    value: T,
    error: f64,
}

impl<T> PartialEq for Segment<T> {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl<T> Eq for Segment<T> {}
impl<T> PartialOrd for Segment<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<T> Ord for Segment<T> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error).then_with(|| other.a.total_cmp(&self.a))
    }
}

fn gk15<T: Integrand, F: FnMut(f64) -> T>(f: &mut F, a: f64, b: f64) -> (T, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let x = h * XGK[j];
        let f1 = f(c - x);
        let f2 = f(c + x);
        let s = f1 + f2;
        kron = kron + s * WGK[j];
        if j % 2 == 1 {
            gauss = gauss + s * WG[j / 2];
        }
    }
    let kron = kron * h;
    let gauss = gauss * h;
    (kron, (kron - gauss).magnitude())
}

/// Globally adaptive 15-point Gauss-Kronrod over [a, b], started on
/// `initial_panels` equal pieces. Stops when the summed error estimate is
/// below `max(abs_tol, rel_tol·|value|)`.
pub fn gauss_kronrod<T: Integrand, F: FnMut(f64) -> T>(
    mut f: F,
    a: f64,
    b: f64,
    initial_panels: usize,
    abs_tol: f64,
    rel_tol: f64,
    max_segments: usize,
) -> Adaptive<T> {
    let panels = initial_panels.max(1);
    let mut heap = BinaryHeap::with_capacity(max_segments + panels);
    let width = (b - a) / panels as f64;
    let mut evaluations = 0;
    for p in 0..panels {
        let lo = a + width * p as f64;
        let hi = if p + 1 == panels { b } else { lo + width };
        let (value, error) = gk15(&mut f, lo, hi);
        evaluations += 15;
        heap.push(Segment { a: lo, b: hi, value, error });
    }
    let totals = |heap: &BinaryHeap<Segment<T>>| {
        let mut v = T::zero();
        let mut e = 0.0;
        // Deterministic order: sum in position order.
        let mut segs: Vec<&Segment<T>> = heap.iter().collect();
        segs.sort_by(|x, y| x.a.total_cmp(&y.a));
        for s in segs {
            v = v + s.value;
            e += s.error;
        }
        (v, e)
    };
    let (mut value, mut error) = totals(&heap);
    let mut converged = error <= abs_tol.max(rel_tol * value.magnitude());
    while !converged && heap.len() < max_segments {
        let worst = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (worst.a + worst.b);
        if !(mid > worst.a && mid < worst.b) {
            heap.push(worst);
            break;
        }
        let (v1, e1) = gk15(&mut f, worst.a, mid);
        let (v2, e2) = gk15(&mut f, mid, worst.b);
        evaluations += 30;
        heap.push(Segment { a: worst.a, b: mid, value: v1, error: e1 });
        heap.push(Segment { a: mid, b: worst.b, value: v2, error: e2 });
        value = value - worst.value + v1 + v2;
        error = error - worst.error + e1 + e2;
        converged = error <= abs_tol.max(rel_tol * value.magnitude());
    }
    let (v, e) = totals(&heap);
    value = v;
    error = e;
    converged = converged || error <= abs_tol.max(rel_tol * value.magnitude());
    Adaptive { value, error, converged, evaluations }
}
