//! Martin kernels of the induced and planar chains, the decomposition of
//! `G(x, ·)` at the first axis hit, and directional asymptotics.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fit::log_log_fit;
use crate::lattice::{Kernel, Vertex};
use crate::oracle::{first_hit_axis_with, FirstHitOptions, FirstHitReport};
use crate::spectral::{
    green_closed_form, green_from_axis, green_induced, one_minus_phi, row_factor, singular_integral_half, HalfRange,
    PhiVariant, QuadratureSpec,
};
use crate::weight::Mode;
use crate::{GreenValue, MartinValue, Route};

/// Share of the first-hit law that must be kept when the far tail is cut.
pub const NU_RETAINED_MASS: f64 = 1.0 - 1e-4;

/// Direction of a target sequence.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Direction {
    /// `y₁ / y₂² → λ`.
    Parabolic(f64),
    /// `y₁ → +∞` faster than `y₂²`.
    PlusInfinity,
    /// `y₁ → −∞` faster than `y₂²`.
    MinusInfinity,
}

impl Direction {
    pub fn is_finite(&self) -> bool {
        matches!(self, Direction::Parabolic(_))
    }

    pub fn label(&self) -> String {
        match self {
            Direction::Parabolic(l) => format!("{l}"),
            Direction::PlusInfinity => "+inf".into(),
            Direction::MinusInfinity => "-inf".into(),
        }
    }
}

/// Targets escaping to infinity in a fixed direction, indexed by `k`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DirectionalSequence {
    pub direction: Direction,
    pub ks: Vec<i64>,
    pub targets: Vec<Vertex>,
}

impl DirectionalSequence {
    /// `y_k = (round(λk²), k)`.
    pub fn parabolic(lambda: f64, ks: &[i64]) -> Result<Self> {
        let targets = ks
            .iter()
            .map(|&k| {
                let y1 = (lambda * (k as f64) * (k as f64)).round();
                if !y1.is_finite() || y1.abs() > 1e18 {
                    return Err(Error::InvalidArgument(format!("λ k² out of range for k = {k}")));
                }
                Ok(Vertex::new(y1 as i64, k))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::checked(Direction::Parabolic(lambda), ks, targets)
    }

    /// `y_k = (±k, h)`.
    pub fn horizontal(plus: bool, h: i64, ks: &[i64]) -> Result<Self> {
        let s = if plus { 1 } else { -1 };
        let dir = if plus {
            Direction::PlusInfinity
        } else {
            Direction::MinusInfinity
        };
        Self::checked(dir, ks, ks.iter().map(|&k| Vertex::new(s * k, h)).collect())
    }

    /// `y_k = (±k³, k)`.
    pub fn cubic(plus: bool, ks: &[i64]) -> Result<Self> {
        let s = if plus { 1 } else { -1 };
        let dir = if plus {
            Direction::PlusInfinity
        } else {
            Direction::MinusInfinity
        };
        let targets = ks
            .iter()
            .map(|&k| {
                k.checked_pow(3)
                    .map(|c| Vertex::new(s * c, k))
                    .ok_or_else(|| Error::InvalidArgument(format!("k³ overflows for k = {k}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::checked(dir, ks, targets)
    }

    fn checked(direction: Direction, ks: &[i64], targets: Vec<Vertex>) -> Result<Self> {
        if ks.iter().any(|&k| k <= 0) {
            return Err(Error::InvalidArgument("sequence indices must be positive".into()));
        }
        for w in targets.windows(2) {
            if w[1].l1_norm() <= w[0].l1_norm() {
                return Err(Error::InvalidArgument(format!(
                    "targets must grow in norm: {} then {}",
                    w[0], w[1]
                )));
            }
        }
        Ok(DirectionalSequence {
            direction,
            ks: ks.to_vec(),
            targets,
        })
    }

    /// The regressor of the power-law fit relative to the axis point `z₁`.
    pub fn scale(&self, y: Vertex, z1: i64) -> f64 {
        if self.direction.is_finite() {
            y.x2.unsigned_abs() as f64
        } else {
            (y.x1 as f64 - z1 as f64).abs()
        }
    }

    /// The decay exponent of the Green function along the sequence.
    pub fn expected_exponent(&self) -> f64 {
        if self.direction.is_finite() {
            -1.0
        } else {
            -0.5
        }
    }
}

/// `G ≈ constant · scale^exponent` on a window of the sequence.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AsymptoticFit {
    pub exponent: f64,
    pub constant: f64,
    pub residual: f64,
    /// First and last index `k` used.
    pub window: (i64, i64),
}

/// Least-squares power law of `values` against the sequence scale.
pub fn fit_asymptotics(seq: &DirectionalSequence, values: &[f64], z1: i64) -> Result<AsymptoticFit> {
    if values.len() != seq.targets.len() {
        return Err(Error::InvalidArgument(format!(
            "{} values for {} targets",
            values.len(),
            seq.targets.len()
        )));
    }
    if values.len() < 8 {
        return Err(Error::DegenerateFit(format!("need at least 8 points, got {}", values.len())));
    }
    let xs: Vec<f64> = seq.targets.iter().map(|&y| seq.scale(y, z1)).collect();
    let f = log_log_fit(&xs, values)?;
    Ok(AsymptoticFit {
        exponent: f.slope,
        constant: f.constant(),
        residual: f.residual,
        window: (seq.ks[0], *seq.ks.last().unwrap()),
    })
}

/// Geometric mean of `value · scale^{-exponent}`: the prefactor with the
/// exponent held fixed.
pub fn plateau_constant(seq: &DirectionalSequence, values: &[f64], z1: i64, exponent: f64) -> f64 {
    let n = values.len() as f64;
    let s: f64 = seq
        .targets
        .iter()
        .zip(values)
        .map(|(&y, &v)| v.ln() - exponent * seq.scale(y, z1).ln())
        .sum();
    (s / n).exp()
}

/// The sub-sequence of targets with index in `lo..=hi`.
pub fn window(seq: &DirectionalSequence, lo: usize, hi: usize) -> DirectionalSequence {
    DirectionalSequence {
        direction: seq.direction,
        ks: seq.ks[lo..=hi].to_vec(),
        targets: seq.targets[lo..=hi].to_vec(),
    }
}

/// `K₀(u, v) = G₀(0, v − u) / G₀(0, v)`.
pub fn martin_kernel_induced(u: i64, v: i64, variant: PhiVariant, q: &QuadratureSpec) -> Result<MartinValue> {
    let den = green_induced(v, variant, q)?;
    if u == 0 {
        return Ok(MartinValue {
            value: 1.0,
            error: 0.0,
            route: Route::Spectral,
        });
    }
    let num = green_induced(v - u, variant, q)?;
    Ok(ratio(num.value, num.error, den.value, den.error, Route::Spectral))
}

fn ratio(num: f64, num_err: f64, den: f64, den_err: f64, route: Route) -> MartinValue {
    let value = num / den;
    let error = if den > den_err {
        (num + num_err) / (den - den_err) - value
    } else {
        f64::INFINITY
    };
    MartinValue {
        value,
        error: error.max(value - (num - num_err) / (den + den_err)),
        route,
    }
}

/// How the ingredients of the first-hit decomposition are obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GreenMethod {
    /// Exact evolution to the given horizon for the pre-hit occupation and
    /// the first-hit law; the truncation enters the error bound.
    Oracle { horizon: usize },
    /// Fourier transforms of both ingredients.
    ClosedForm,
}

/// Upper bound on `G(w, y)` over all starts `w`.
pub fn green_upper_bound(y: Vertex, q: &QuadratureSpec) -> Result<f64> {
    let g00 = green_induced(0, PhiVariant::Excursion, q)?;
    let g00 = g00.value + g00.error;
    Ok(if y.x2 == 0 {
        g00
    } else {
        2.0 * y.x2.unsigned_abs() as f64 + 1.5 * g00
    })
}

/// First-hit data from `(0, a)`, reusable for every start `(x₁, a)`.
#[derive(Debug, Clone)]
pub struct HitIngredients {
    pub level: i64,
    pub report: FirstHitReport<f64>,
    /// First-hit weights on `lo..lo + weights.len()` after the tail cut.
    lo: i64,
    weights: Vec<f64>,
    /// ν mass dropped by the tail cut.
    pub cut_mass: f64,
}

impl HitIngredients {
    pub fn new(k: &Kernel, level: i64, horizon: usize) -> Result<Self> {
        let opts = FirstHitOptions {
            track_local_time: true,
            ..FirstHitOptions::for_mode(Mode::Float)
        };
        let report = first_hit_axis_with::<f64>(k, Vertex::new(0, level), horizon, opts)?;
        let total: f64 = report.nu.values().sum();
        // keep the smallest symmetric window |z| ≤ Z holding the retained share
        let mut by_dist: Vec<(u64, f64)> = report.nu.iter().map(|(&z, &w)| (z.unsigned_abs(), w)).collect();
        by_dist.sort_by_key(|p| p.0);
        let mut kept = 0.0;
        let mut zmax = 0u64;
        for &(d, w) in &by_dist {
            if kept >= NU_RETAINED_MASS * total {
                break;
            }
            kept += w;
            zmax = d;
        }
        let zmax = zmax as i64;
        let mut lo = i64::MAX;
        let mut hi = i64::MIN;
        for &z in report.nu.keys() {
            if z.abs() <= zmax {
                lo = lo.min(z);
                hi = hi.max(z);
            }
        }
        let mut weights = Vec::new();
        let mut retained = 0.0;
        if lo <= hi {
            weights = vec![0.0; (hi - lo + 1) as usize];
            for (&z, &w) in report.nu.range(lo..=hi) {
                weights[(z - lo) as usize] = w;
                retained += w;
            }
        } else {
            lo = 0;
        }
        Ok(HitIngredients {
            level,
            report,
            lo,
            weights,
            cut_mass: (total - retained).max(0.0),
        })
    }

    /// `Σ_z ν(z) e^{it z}` over the retained window.
    fn nu_transform(&self, t: f64) -> Complex64 {
        let step = Complex64::new(t.cos(), t.sin());
        let mut acc = Complex64::new(0.0, 0.0);
        for &w in self.weights.iter().rev() {
            acc = acc * step + w;
        }
        let lo = self.lo as f64 * t;
        acc * Complex64::new(lo.cos(), lo.sin())
    }

    fn max_abs_z(&self) -> f64 {
        let hi = self.lo + self.weights.len() as i64 - 1;
        self.lo.unsigned_abs().max(hi.unsigned_abs()) as f64
    }

    /// `Σ_z ν_x(z) G((z, 0), y)` for `x = (x₁, level)` over the retained
    /// window, by one Fourier integral.
    pub fn hit_sum(&self, x1: i64, y: Vertex, variant: PhiVariant, q: &QuadratureSpec) -> Result<GreenValue> {
        if self.weights.is_empty() {
            return Ok(GreenValue {
                value: 0.0,
                error: 0.0,
                route: Route::Oracle,
            });
        }
        let d = y.x1 as f64 - x1 as f64;
        let sign = match variant {
            PhiVariant::Excursion => -1.0,
            PhiVariant::Paper => 1.0,
        };
        let f = |t: f64| {
            // G((z,0),y) has phase e^{∓it(y₁ − z)}
            let nu = self.nu_transform(t);
            let nu = if sign < 0.0 { nu } else { nu.conj() };
            let ph = sign * t * d;
            let v = nu * Complex64::new(ph.cos(), ph.sin()) * row_factor(t, y.x2, variant);
            v.re / one_minus_phi(t, variant)
        };
        let inner = QuadratureSpec {
            abs_tol: q.abs_tol * PI,
            ..*q
        };
        let res = singular_integral_half(
            f,
            &inner,
            HalfRange {
                upper: PI,
                frequency: d.abs() + self.max_abs_z(),
            },
        )?;
        Ok(GreenValue {
            value: res.value / PI,
            error: res.error / PI,
            route: Route::Oracle,
        })
    }

    /// Truncated `E^x η_{0,τ₁}(y)` for `x = (x₁, level)` and the bound on
    /// what the truncation missed.
    pub fn local_time(&self, k: &Kernel, x1: i64, y: Vertex) -> (f64, f64) {
        let rel = Vertex::new(y.x1 - x1, y.x2);
        (self.report.local_time_at(rel), self.report.local_time_tail_bound(k, rel))
    }

    /// `E^x η_{0,τ₁∧N}(y) + Σ_z ν_x(z) G((z,0),y)` with a rigorous upper
    /// bound on the shortfall from `G(x, y)` (quadrature error included).
    pub fn green(&self, k: &Kernel, x1: i64, y: Vertex, variant: PhiVariant, q: &QuadratureSpec) -> Result<GreenValue> {
        let (lt, _) = self.local_time(k, x1, y);
        let hit = self.hit_sum(x1, y, variant, q)?;
        let missing = self.report.escaped_mass + self.cut_mass;
        let bound = missing * green_upper_bound(y, q)?;
        Ok(GreenValue {
            value: lt + hit.value,
            error: bound + hit.error,
            route: Route::Oracle,
        })
    }
}

/// `G(x, y)` through the first-hit decomposition.
pub fn green_general(
    k: &Kernel,
    x: Vertex,
    y: Vertex,
    method: GreenMethod,
    variant: PhiVariant,
    q: &QuadratureSpec,
) -> Result<GreenValue> {
    if x.x2 == 0 {
        let g = green_from_axis(x, y, variant, q)?;
        return Ok(GreenValue {
            value: g.value,
            error: g.error,
            route: Route::Spectral,
        });
    }
    match method {
        GreenMethod::ClosedForm => {
            let g = green_closed_form(x, y, variant, q)?;
            Ok(GreenValue {
                value: g.value,
                error: g.error,
                route: Route::Spectral,
            })
        }
        GreenMethod::Oracle { horizon } => HitIngredients::new(k, x.x2, horizon)?.green(k, x.x1, y, variant, q),
    }
}

/// `K(x, y) = G(x, y) / G(o, y)` with `o = (0, 0)`.
pub fn martin_kernel(
    k: &Kernel,
    x: Vertex,
    y: Vertex,
    method: GreenMethod,
    variant: PhiVariant,
    q: &QuadratureSpec,
) -> Result<MartinValue> {
    let den = green_from_axis(Vertex::ORIGIN, y, variant, q)?;
    if x == Vertex::ORIGIN {
        return Ok(MartinValue {
            value: 1.0,
            error: 0.0,
            route: Route::Spectral,
        });
    }
    let num = green_general(k, x, y, method, variant, q)?;
    Ok(ratio(num.value, num.error, den.value, den.error, num.route))
}

/// The first-hit decomposition divided by `G(o, y)`:
/// `E^x η_{0,τ₁}(y) / G(o, y) + Σ_z ν_x(z) K((z, 0), y)`, from exact
/// finite-horizon ingredients. The value is a lower bound on `K(x, y)` and
/// `error` bounds the shortfall.
pub fn decomposition_rhs(
    k: &Kernel,
    ing: &HitIngredients,
    x1: i64,
    y: Vertex,
    variant: PhiVariant,
    q: &QuadratureSpec,
) -> Result<MartinValue> {
    let den = green_from_axis(Vertex::ORIGIN, y, variant, q)?;
    let g = ing.green(k, x1, y, variant, q)?;
    let value = g.value / den.value;
    // shortfall of the numerator plus the effect of the denominator's error
    let error = g.error / (den.value - den.error) + value * den.error / (den.value - den.error);
    Ok(MartinValue {
        value,
        error,
        route: Route::Oracle,
    })
}

/// Pre-hit local time from the origin at one target.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LocalTimePoint {
    pub y: Vertex,
    pub value: f64,
    /// Upper bound on the part missed by the horizon.
    pub bound: f64,
    /// `value · |y₁|^{1/2}` or `value · |y₂|` depending on the direction.
    pub scaled: f64,
}

/// Whether the scaled local times were shown to decrease.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum DecayVerdict {
    /// Every step decreases even after widening by the truncation bound.
    Certified,
    /// The point estimates decrease but the bounds overlap somewhere.
    Plausible,
    /// The point estimates do not decrease.
    NotDecreasing,
}

/// `E⁰ η_{0,τ₁}(y)` along `ys` from exact evolution, with the check that
/// `value · |y₁|^{1/2}` (or `value · |y₂|` when `horizontal` is false)
/// decreases.
pub fn local_time_decay(
    k: &Kernel,
    ys: &[Vertex],
    horizon: usize,
    horizontal: bool,
) -> Result<(Vec<LocalTimePoint>, DecayVerdict)> {
    let opts = FirstHitOptions {
        track_local_time: true,
        ..FirstHitOptions::for_mode(Mode::Float)
    };
    let rep = first_hit_axis_with::<f64>(k, Vertex::ORIGIN, horizon, opts)?;
    let pts: Vec<LocalTimePoint> = ys
        .iter()
        .map(|&y| {
            let value = rep.local_time_at(y);
            let s = if horizontal {
                (y.x1.unsigned_abs() as f64).sqrt()
            } else {
                y.x2.unsigned_abs() as f64
            };
            LocalTimePoint {
                y,
                value,
                bound: rep.local_time_tail_bound(k, y),
                scaled: value * s,
            }
        })
        .collect();
    let mut verdict = DecayVerdict::Certified;
    for w in pts.windows(2) {
        let (a, b) = (&w[0], &w[1]);
        if b.scaled >= a.scaled {
            verdict = DecayVerdict::NotDecreasing;
            break;
        }
        let factor_b = if b.value > 0.0 { b.scaled / b.value } else { 0.0 };
        if (b.value + b.bound) * factor_b >= a.scaled {
            verdict = DecayVerdict::Plausible;
        }
    }
    Ok((pts, verdict))
}

/// `G((z, 0), y_k)` along a sequence.
pub fn directional_green(
    seq: &DirectionalSequence,
    z1: i64,
    variant: PhiVariant,
    q: &QuadratureSpec,
) -> Result<Vec<GreenValue>> {
    seq.targets
        .iter()
        .map(|&y| {
            let g = green_from_axis(Vertex::new(z1, 0), y, variant, q)?;
            Ok(GreenValue {
                value: g.value,
                error: g.error,
                route: Route::Spectral,
            })
        })
        .collect()
}

/// One row of a boundary-convergence scan.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MartinRow {
    pub x: Vertex,
    pub k: i64,
    pub y: Vertex,
    pub kernel: MartinValue,
}

/// `K(x, y_k)` for every start in `xs` and every target of `seq`.
pub fn boundary_scan(
    k: &Kernel,
    xs: &[Vertex],
    seq: &DirectionalSequence,
    method: GreenMethod,
    variant: PhiVariant,
    q: &QuadratureSpec,
) -> Result<Vec<MartinRow>> {
    let mut rows = Vec::with_capacity(xs.len() * seq.targets.len());
    let ingredients = match method {
        GreenMethod::Oracle { horizon } => {
            let mut levels: Vec<i64> = xs.iter().map(|x| x.x2).filter(|&a| a != 0).collect();
            levels.sort_unstable();
            levels.dedup();
            levels
                .into_iter()
                .map(|a| Ok((a, HitIngredients::new(k, a, horizon)?)))
                .collect::<Result<Vec<_>>>()?
        }
        GreenMethod::ClosedForm => Vec::new(),
    };
    for (&kk, &y) in seq.ks.iter().zip(&seq.targets) {
        let den = green_from_axis(Vertex::ORIGIN, y, variant, q)?;
        for &x in xs {
            let kernel = if x == Vertex::ORIGIN {
                MartinValue {
                    value: 1.0,
                    error: 0.0,
                    route: Route::Spectral,
                }
            } else if x.x2 == 0 || method == GreenMethod::ClosedForm {
                let num = green_general(k, x, y, GreenMethod::ClosedForm, variant, q)?;
                ratio(num.value, num.error, den.value, den.error, num.route)
            } else {
                let ing = &ingredients.iter().find(|(a, _)| *a == x.x2).expect("level prepared").1;
                let num = ing.green(k, x.x1, y, variant, q)?;
                // one-sided: the value is a lower bound
                ratio(num.value, num.error, den.value, den.error, Route::Oracle)
            };
            rows.push(MartinRow { x, k: kk, y, kernel });
        }
    }
    Ok(rows)
}

/// All vertices of `[lo, hi]²`.
pub fn box_starts(lo: i64, hi: i64) -> Vec<Vertex> {
    (lo..=hi)
        .flat_map(|x1| (lo..=hi).map(move |x2| Vertex::new(x1, x2)))
        .collect()
}

#[cfg(test)]
mod tests;
