//! Globally adaptive Gauss–Kronrod (10/21) quadrature with optional
//! square-root substitution panels for integrable `|t|^{-1/2}` endpoints.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const XGK: [f64; 11] = [
    0.995_657_163_025_808_1,
    0.973_906_528_517_171_7,
    0.930_157_491_355_708_2,
    0.865_063_366_688_984_5,
    0.780_817_726_586_416_9,
    0.679_409_568_299_024_4,
    0.562_757_134_668_604_7,
    0.433_395_394_129_247_2,
    0.294_392_862_701_460_2,
    0.148_874_338_981_631_22,
    0.000000000000000000000000000000000,
];

const WGK: [f64; 11] = [
    0.011_694_638_867_371_874,
    0.032_558_162_307_964_725,
    0.054_755_896_574_351_995,
    0.075_039_674_810_919_96,
    0.093_125_454_583_697_6,
    0.109_387_158_802_297_64,
    0.123_491_976_262_065_84,
    0.134_709_217_311_473_34,
    0.142_775_938_577_060_09,
    0.147_739_104_901_338_49,
    0.149_445_554_002_916_9,
];

// Gauss weights for the nodes XGK[1], XGK[3], ..., XGK[9]
const WG: [f64; 5] = [
    0.066_671_344_308_688_14,
    0.149_451_349_150_580_6,
    0.219_086_362_515_982_04,
    0.269_266_719_309_996_35,
    0.295_524_224_714_752_87,
];

/// Quadrature controls.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    pub abs_tol: f64,
    /// Half-width of the panel around `t = 0` integrated under `t = ±s²`.
    pub singularity_halfwidth: f64,
    pub max_panels: usize,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec {
            abs_tol: 1e-9,
            singularity_halfwidth: 0.1,
            max_panels: 1 << 16,
        }
    }
}

impl QuadratureSpec {
    pub fn with_tol(abs_tol: f64) -> Self {
        QuadratureSpec {
            abs_tol,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.abs_tol > 0.0) {
            return Err(Error::InvalidQuadrature(format!("abs_tol must be > 0, got {}", self.abs_tol)));
        }
        if !(self.singularity_halfwidth > 0.0 && self.singularity_halfwidth < PI) {
            return Err(Error::InvalidQuadrature(format!(
                "singularity_halfwidth must lie in (0, π), got {}",
                self.singularity_halfwidth
            )));
        }
        if self.max_panels == 0 {
            return Err(Error::InvalidQuadrature("max_panels must be positive".into()));
        }
        Ok(())
    }
}

/// Result of a quadrature: estimate, estimated absolute error, panels used.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Integral {
    pub value: f64,
    pub error: f64,
    pub panels: usize,
}

/// How a panel's variable maps onto the integration variable `t`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Map {
    Identity,
    /// `t = s²`, `dt = 2s ds`.
    Square,
    /// `t = -s²`, contributing `∫ f(-s²) 2s ds`.
    SquareNeg,
}

#[derive(Debug, Clone, Copy)]
pub struct Panel {
    pub a: f64,
    pub b: f64,
    pub map: Map,
}

impl Panel {
    pub fn new(a: f64, b: f64, map: Map) -> Self {
        Panel { a, b, map }
    }
}

#[derive(Debug, Clone, Copy)]
struct Scored {
    panel: Panel,
    value: f64,
    error: f64,
}

impl PartialEq for Scored {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Scored {}
impl PartialOrd for Scored {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Scored {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error
            .total_cmp(&other.error)
            .then_with(|| other.panel.a.total_cmp(&self.panel.a))
    }
}

#[inline]
fn eval_mapped<F: Fn(f64) -> f64>(f: &F, s: f64, map: Map) -> f64 {
    match map {
        Map::Identity => f(s),
        Map::Square => {
            if s == 0.0 {
                0.0
            } else {
                f(s * s) * 2.0 * s
            }
        }
        Map::SquareNeg => {
            if s == 0.0 {
                0.0
            } else {
                f(-s * s) * 2.0 * s
            }
        }
    }
}

fn gk21<F: Fn(f64) -> f64>(f: &F, p: Panel) -> (f64, f64) {
    let center = 0.5 * (p.a + p.b);
    let half = 0.5 * (p.b - p.a);
    let fc = eval_mapped(f, center, p.map);
    let mut res_k = fc * WGK[10];
    let mut res_g = 0.0;
    let mut res_abs = res_k.abs();
    let mut fv = [(0.0, 0.0); 10];
    for j in 0..10 {
        let dx = half * XGK[j];
        let f1 = eval_mapped(f, center - dx, p.map);
        let f2 = eval_mapped(f, center + dx, p.map);
        fv[j] = (f1, f2);
        res_k += WGK[j] * (f1 + f2);
        res_abs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            res_g += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = res_k * 0.5;
    let mut res_asc = WGK[10] * (fc - mean).abs();
    for j in 0..10 {
        res_asc += WGK[j] * ((fv[j].0 - mean).abs() + (fv[j].1 - mean).abs());
    }
    let abs_half = half.abs();
    let value = res_k * half;
    res_abs *= abs_half;
    res_asc *= abs_half;
    let mut err = ((res_k - res_g) * half).abs();
    if res_asc != 0.0 && err != 0.0 {
        let scale = (200.0 * err / res_asc).powf(1.5);
        err = if scale < 1.0 { res_asc * scale } else { res_asc };
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * res_abs);
    }
    (value, err)
}

/// Bisect the worst panel until the summed error estimate is within
/// `abs_tol`. Fails with the best estimate once `max_panels` is reached.
pub fn adaptive<F: Fn(f64) -> f64>(f: F, initial: &[Panel], abs_tol: f64, max_panels: usize) -> Result<Integral> {
    let mut heap = BinaryHeap::with_capacity(initial.len() * 2);
    for &panel in initial {
        let (value, error) = gk21(&f, panel);
        heap.push(Scored { panel, value, error });
    }
    let mut panels = heap.len();
    loop {
        let error: f64 = heap.iter().map(|s| s.error).sum();
        if error <= abs_tol {
            break;
        }
        if panels >= max_panels {
            let value = sorted_sum(&heap);
            return Err(Error::Quadrature {
                estimate: value,
                achieved: error,
                abs_tol,
                panels,
            });
        }
        // refine every panel carrying a large share before re-summing
        let mut budget = (heap.len() / 8).max(1);
        while budget > 0 {
            let Some(worst) = heap.pop() else { break };
            let p = worst.panel;
            let mid = 0.5 * (p.a + p.b);
            if mid <= p.a || mid >= p.b {
                // cannot split further; keep as is
                heap.push(worst);
                let value = sorted_sum(&heap);
                let achieved: f64 = heap.iter().map(|s| s.error).sum();
                return Err(Error::Quadrature {
                    estimate: value,
                    achieved,
                    abs_tol,
                    panels,
                });
            }
            for half in [Panel::new(p.a, mid, p.map), Panel::new(mid, p.b, p.map)] {
                let (value, error) = gk21(&f, half);
                heap.push(Scored { panel: half, value, error });
            }
            panels += 1;
            budget -= 1;
            if panels >= max_panels {
                break;
            }
        }
    }
    let error: f64 = heap.iter().map(|s| s.error).sum();
    Ok(Integral {
        value: sorted_sum(&heap),
        error,
        panels,
    })
}

fn sorted_sum(heap: &BinaryHeap<Scored>) -> f64 {
    let mut parts: Vec<(f64, u8, f64)> = heap
        .iter()
        .map(|s| {
            let tag = match s.panel.map {
                Map::SquareNeg => 0,
                Map::Square => 1,
                Map::Identity => 2,
            };
            (s.panel.a, tag, s.value)
        })
        .collect();
    parts.sort_by(|x, y| x.1.cmp(&y.1).then(x.0.total_cmp(&y.0)));
    parts.iter().map(|p| p.2).sum()
}

/// Split `[a, b]` into `n` equal panels.
fn split(a: f64, b: f64, n: usize, map: Map, out: &mut Vec<Panel>) {
    let n = n.max(1);
    let h = (b - a) / n as f64;
    for i in 0..n {
        let lo = a + h * i as f64;
        let hi = if i + 1 == n { b } else { a + h * (i + 1) as f64 };
        out.push(Panel::new(lo, hi, map));
    }
}

/// Layout hints for integrals over `[0, upper]` with a `t^{-1/2}` endpoint
/// at 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HalfRange {
    /// Upper limit of integration, at most π.
    pub upper: f64,
    /// Largest angular frequency of oscillating factors such as `cos(v t)`.
    pub frequency: f64,
}

impl Default for HalfRange {
    fn default() -> Self {
        HalfRange {
            upper: PI,
            frequency: 0.0,
        }
    }
}

/// Initial panels for `[0, upper]`: the square-root panel `[0, w]` and
/// identity panels on `[w, upper]`, each a couple of oscillation periods
/// wide at most.
pub fn half_range_panels(q: &QuadratureSpec, range: HalfRange) -> Vec<Panel> {
    let mut out = Vec::new();
    let upper = range.upper.min(PI);
    let w = q.singularity_halfwidth.min(upper);
    let sw = w.sqrt();
    let freq = range.frequency.abs();
    // in s = √t the phase is freq·s², local frequency 2·freq·s
    let n_central = if freq > 0.0 {
        ((freq * w) / PI).ceil() as usize + 4
    } else {
        4
    };
    split(0.0, sw, n_central.min(q.max_panels / 4 + 1), Map::Square, &mut out);
    if upper > w {
        let n_outer = if freq > 0.0 {
            ((upper - w) * freq / (2.0 * PI)).ceil() as usize + 4
        } else {
            8
        };
        split(w, upper, n_outer.min(q.max_panels / 2 + 1), Map::Identity, &mut out);
    }
    out
}

/// `∫_0^{upper} f(t) dt` for `f` smooth on `(0, π]` with at most a
/// `t^{-1/2}` singularity at 0.
pub fn singular_integral_half<F: Fn(f64) -> f64>(f: F, q: &QuadratureSpec, range: HalfRange) -> Result<Integral> {
    q.validate()?;
    let panels = half_range_panels(q, range);
    adaptive(f, &panels, q.abs_tol, q.max_panels)
}

/// `∫_{-π}^{π} f(t) dt` for `f` smooth except for a `|t|^{-1/2}`
/// singularity at 0. The panels `[-w, 0]` and `[0, w]` are integrated under
/// `t = ∓s²`, whose Jacobian `2s` cancels the singularity.
pub fn singular_integral<F: Fn(f64) -> f64>(f: F, q: &QuadratureSpec) -> Result<Integral> {
    q.validate()?;
    let w = q.singularity_halfwidth;
    let sw = w.sqrt();
    let mut panels = Vec::new();
    split(0.0, sw, 4, Map::SquareNeg, &mut panels);
    split(0.0, sw, 4, Map::Square, &mut panels);
    split(-PI, -w, 8, Map::Identity, &mut panels);
    split(w, PI, 8, Map::Identity, &mut panels);
    adaptive(f, &panels, q.abs_tol, q.max_panels)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverse_sqrt_over_full_period() {
        let q = QuadratureSpec::default();
        let r = singular_integral(|t: f64| t.abs().powf(-0.5), &q).unwrap();
        let exact = 4.0 * PI.sqrt();
        assert!((r.value - 7.0898154036).abs() < 1e-9);
        assert!((r.value - exact).abs() <= r.error.max(1e-12) + 1e-12);
    }

    #[test]
    fn smooth_integrands() {
        let q = QuadratureSpec::default();
        let c = singular_integral(|t: f64| t.cos(), &q).unwrap();
        assert!(c.value.abs() < 1e-12);
        let one = singular_integral(|_| 1.0, &q).unwrap();
        assert!((one.value - 2.0 * PI).abs() < 1e-12);
        let h = singular_integral_half(|t: f64| (3.0 * t).cos(), &q, HalfRange { upper: PI, frequency: 3.0 }).unwrap();
        assert!(h.value.abs() < 1e-12);
    }

    #[test]
    fn oscillatory_singular_integral() {
        // ∫_0^π cos(v t)/√t dt = √(π/(2v))·(2 C(√(2v))) with Fresnel C; check
        // against a fine composite rule in s = √t instead.
        let v = 400.0;
        let q = QuadratureSpec::default();
        let got = singular_integral_half(|t: f64| (v * t).cos() / t.sqrt(), &q, HalfRange { upper: PI, frequency: v })
            .unwrap();
        let n = 2_000_000;
        let h = PI.sqrt() / n as f64;
        let reference: f64 = (0..n)
            .map(|i| {
                let s = (i as f64 + 0.5) * h;
                2.0 * (v * s * s).cos()
            })
            .sum::<f64>()
            * h;
        assert!((got.value - reference).abs() < 1e-7, "{} vs {}", got.value, reference);
    }

    #[test]
    fn failure_reports_best_estimate() {
        let q = QuadratureSpec {
            abs_tol: 1e-15,
            max_panels: 20,
            ..Default::default()
        };
        let res = singular_integral(|t: f64| (1000.0 * t).sin().abs(), &q);
        match res {
            Err(Error::Quadrature { estimate, achieved, panels, .. }) => {
                assert!(estimate.is_finite());
                assert!(achieved > 1e-15);
                assert!(panels >= 20);
            }
            other => panic!("expected failure, got {other:?}"),
        }
    }

    #[test]
    fn spec_validation() {
        assert!(QuadratureSpec::with_tol(0.0).validate().is_err());
        let bad = QuadratureSpec {
            singularity_halfwidth: 4.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        assert!(QuadratureSpec::default().validate().is_ok());
    }
}
