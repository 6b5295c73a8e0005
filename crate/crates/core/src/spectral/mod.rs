//! Closed-form characteristic functions and Fourier-integral Green functions.
//!
//! Notation used throughout:
//!
//! * `r(t) = 1 / (3 - 2 e^{it})` and `χ(t) = 2 / (3 - e^{it})` are the
//!   characteristic functions of a geometric count on ℕ with mean 2 and
//!   mean 1/2 respectively;
//! * `g(x) = (1 - √(1 - x²)) / x` is the generating function of `σ₁ - 1` for
//!   the vertical simple random walk;
//! * `ρ(t) = g(χ(t))`.
//!
//! Off the axis, the walk on ℍ moves horizontally with probability 1/3 at
//! every step, so the number of horizontal moves made during one visit of the
//! vertical walk to a level is geometric with `P(ξ = j) = (2/3)(1/3)^j`,
//! whose characteristic function is `χ`. This gives
//! `φ(t) = Re g(χ(t))` ([`PhiVariant::Excursion`]). [`PhiVariant::Paper`]
//! keeps the alternative closed form `Re r⁻¹ g(r)` available for comparison;
//! [`arbitrate`] decides between the two against the exact first-hit law.

pub mod quadrature;

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fit::{log_log_fit, LineFit};
use crate::lattice::{Kernel, Vertex};
use crate::oracle::{self, char_enclosure, FirstHitOptions};
use crate::weight::Mode;

pub use quadrature::{singular_integral, singular_integral_half, HalfRange, Integral, QuadratureSpec};

/// Which closed form of the induced-step characteristic function to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PhiVariant {
    /// `φ(t) = Re[r(t)⁻¹ g(r(t))]`.
    Paper,
    /// `φ(t) = Re[g(χ(t))]`.
    Excursion,
}

impl Default for PhiVariant {
    /// The variant selected by [`arbitrate`] (asserted in the test suite).
    fn default() -> Self {
        PhiVariant::Excursion
    }
}

impl PhiVariant {
    pub const ALL: [PhiVariant; 2] = [PhiVariant::Paper, PhiVariant::Excursion];

    pub fn name(&self) -> &'static str {
        match self {
            PhiVariant::Paper => "paper",
            PhiVariant::Excursion => "excursion",
        }
    }

    /// Law of the per-visit horizontal move count implied by the variant.
    pub fn geometric_convention(&self) -> GeometricConvention {
        match self {
            PhiVariant::Paper => GeometricConvention::MeanTwo,
            PhiVariant::Excursion => GeometricConvention::MeanHalf,
        }
    }
}

impl std::str::FromStr for PhiVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "paper" => Ok(PhiVariant::Paper),
            "excursion" => Ok(PhiVariant::Excursion),
            _ => Err(Error::InvalidArgument(format!("unknown variant {s:?}"))),
        }
    }
}

/// Geometric law on ℕ with parameter 1/3, in its two readings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GeometricConvention {
    /// `P(ξ = j) = (2/3)(1/3)^j`, mean 1/2.
    MeanHalf,
    /// `P(ξ = j) = (1/3)(2/3)^j`, mean 2.
    MeanTwo,
}

impl GeometricConvention {
    /// Probability of one more horizontal move.
    pub fn continue_prob(&self) -> f64 {
        match self {
            GeometricConvention::MeanHalf => 1.0 / 3.0,
            GeometricConvention::MeanTwo => 2.0 / 3.0,
        }
    }
}

#[inline]
fn cis(t: f64) -> Complex64 {
    Complex64::new(t.cos(), t.sin())
}

/// `1 - e^{it}` without cancellation.
#[inline]
fn one_minus_cis(t: f64) -> Complex64 {
    let s = (0.5 * t).sin();
    Complex64::new(2.0 * s * s, -t.sin())
}

/// `r(t) = (3 - 2e^{it})⁻¹`.
pub fn r_of(t: f64) -> Complex64 {
    (Complex64::new(3.0, 0.0) - 2.0 * cis(t)).inv()
}

/// `χ(t) = 2 / (3 - e^{it})`.
pub fn chi_of(t: f64) -> Complex64 {
    Complex64::new(2.0, 0.0) / (Complex64::new(3.0, 0.0) - cis(t))
}

/// `g(x) = (1 - √(1 - x²)) / x`, evaluated as `x / (1 + √(1 - x²))` with the
/// principal square root so that `g(0) = 0`.
pub fn g_of(x: Complex64) -> Complex64 {
    x / (1.0 + (1.0 - x * x).sqrt())
}

/// `(x, 1 - x)` for the variant's step transform, the second component
/// computed without cancellation.
#[inline]
fn step_transform(t: f64, v: PhiVariant) -> (Complex64, Complex64) {
    let omc = one_minus_cis(t);
    match v {
        PhiVariant::Paper => {
            // 1 - r = 2(1 - e^{it}) / (3 - 2e^{it})
            let den = Complex64::new(1.0, 0.0) + 2.0 * omc;
            (den.inv(), 2.0 * omc / den)
        }
        PhiVariant::Excursion => {
            // 1 - χ = (1 - e^{it}) / (3 - e^{it})
            let den = Complex64::new(2.0, 0.0) + omc;
            (2.0 / den, omc / den)
        }
    }
}

/// `ρ(t) = g(χ(t))` (or `g(r(t))` for the paper variant).
pub fn rho(t: f64, v: PhiVariant) -> Complex64 {
    let (x, d) = step_transform(t, v);
    // 1 - x² = d (2 - d)
    x / (1.0 + (d * (2.0 - d)).sqrt())
}

/// `1 - φ(t)` evaluated through `1 - x² = (1 - x)(1 + x)` so that no
/// significant digits are lost near `t = 0`.
fn one_minus_phi_raw(t: f64, v: PhiVariant) -> f64 {
    let (x, d) = step_transform(t, v);
    let s = d * (2.0 - d);
    let root = s.sqrt();
    match v {
        // 1 - g(x) = (√(1-x²) - (1-x)) / x
        PhiVariant::Excursion => ((root - d) / x).re,
        // 1 - g(x)/x = (√(1-x²) - (1-x²)) / x²
        PhiVariant::Paper => ((root - s) / (x * x)).re,
    }
}

const KAPPA_CUTOFF: f64 = 1e-12;

/// κ in `1 - φ(t) ≈ κ √|t|`, read off the stable evaluation at the cutoff.
pub fn kappa_near_origin(v: PhiVariant) -> f64 {
    one_minus_phi_raw(KAPPA_CUTOFF, v) / KAPPA_CUTOFF.sqrt()
}

/// `1 - φ(t)`; below `|t| = 10⁻¹²` the `κ√|t|` model is used.
pub fn one_minus_phi(t: f64, v: PhiVariant) -> f64 {
    let a = t.abs();
    if a < KAPPA_CUTOFF {
        kappa_near_origin(v) * a.sqrt()
    } else {
        one_minus_phi_raw(a, v)
    }
}

/// Characteristic function of the induced-chain step at `t`.
pub fn phi(t: f64, v: PhiVariant) -> f64 {
    if t == 0.0 {
        return 1.0;
    }
    1.0 - one_minus_phi_raw(t.abs(), v)
}

/// Straightforward evaluation of φ from its defining formula, for
/// cross-checking the rearranged one away from the origin.
pub fn phi_naive(t: f64, v: PhiVariant) -> f64 {
    match v {
        PhiVariant::Paper => {
            let r = r_of(t);
            (g_of(r) / r).re
        }
        PhiVariant::Excursion => g_of(chi_of(t)).re,
    }
}

/// Log-log fit of `1 - φ(t)` on `[t_lo, t_hi]` (geometric grid of `n`
/// points); the slope should be 1/2 and `exp(intercept)` estimates κ.
pub fn fit_one_minus_phi(v: PhiVariant, t_lo: f64, t_hi: f64, n: usize) -> Result<LineFit> {
    let ts: Vec<f64> = (0..n)
        .map(|i| t_lo * (t_hi / t_lo).powf(i as f64 / (n - 1) as f64))
        .collect();
    let ys: Vec<f64> = ts.iter().map(|&t| one_minus_phi(t, v)).collect();
    log_log_fit(&ts, &ys)
}

/// `x^k` for a complex `x` with `|x| ≤ 1`: binary powering for moderate `k`,
/// `exp(k log x)` beyond (the branch of the logarithm is irrelevant for
/// integer `k`).
#[inline]
pub fn complex_powu(x: Complex64, k: u64) -> Complex64 {
    if k <= 10_000 {
        x.powu(k as u32)
    } else if x == Complex64::new(0.0, 0.0) {
        x
    } else {
        (x.ln() * k as f64).exp()
    }
}

/// Fourier transform `Σ_w E^{(0,0)}[visits to (w, b) before τ₁] e^{itw}`
/// of the pre-return occupation of row `b` (1 on the axis itself).
pub fn row_factor(t: f64, b: i64, v: PhiVariant) -> Complex64 {
    if b == 0 {
        return Complex64::new(1.0, 0.0);
    }
    match v {
        PhiVariant::Excursion => {
            let p = complex_powu(rho(t, v), b.unsigned_abs());
            let p = if b > 0 { p } else { p.conj() };
            1.5 * p
        }
        PhiVariant::Paper => complex_powu(rho(t, v), b.unsigned_abs()),
    }
}

/// `E^{(0,a)}[e^{it X}]` where `X` is the abscissa of the first axis hit.
pub fn first_passage_transform(t: f64, a: i64) -> Complex64 {
    if a == 0 {
        return Complex64::new(1.0, 0.0);
    }
    let p = complex_powu(rho(t, PhiVariant::Excursion), a.unsigned_abs());
    if a > 0 {
        p
    } else {
        p.conj()
    }
}

/// Fourier transform of `w ↦ E^{(0,a)}[η_{0,τ₁}((w, b))]` for `a ≠ 0`.
///
/// The vertical walk killed at 0 has generating Green function
/// `(ρ^{|a-b|} - ρ^{a+b}) / √(1-s²)` between levels of the same sign;
/// each vertical visit contributes `Σ_m (e^{it}/3)^m = (3/2)χ` along its row.
pub fn local_time_transform(t: f64, a: i64, b: i64) -> Complex64 {
    if a == 0 || b == 0 || a.signum() != b.signum() {
        return Complex64::new(0.0, 0.0);
    }
    let (ua, ub) = (a.unsigned_abs(), b.unsigned_abs());
    let r = rho(t, PhiVariant::Excursion);
    let r2 = r * r;
    // (1 - ρ^{2m}) / (1 - ρ²) as a finite geometric sum
    let m = ua.min(ub);
    let mut sum = Complex64::new(0.0, 0.0);
    let mut term = Complex64::new(1.0, 0.0);
    if m <= 64 {
        for _ in 0..m {
            sum += term;
            term *= r2;
        }
    } else {
        let one = Complex64::new(1.0, 0.0);
        let denom = one - r2;
        if denom.norm() < 1e-8 {
            // ρ² ≈ 1: fall back to the sum
            for _ in 0..m {
                sum += term;
                term *= r2;
            }
        } else {
            sum = (one - complex_powu(r2, m)) / denom;
        }
    }
    let out = 3.0 * complex_powu(r, 1 + ua.abs_diff(ub)) * sum;
    if a > 0 {
        out
    } else {
        out.conj()
    }
}

/// Upper limit beyond which the integrand envelope `env(t)` (assumed
/// nonincreasing on `(0, π]`) integrates to less than `budget`, together
/// with that bound.
fn envelope_cutoff<E: Fn(f64) -> f64>(env: E, budget: f64) -> (f64, f64) {
    let tail = |a: f64| (PI - a) * env(a);
    let mut lo = 1e-3;
    if tail(lo) < budget {
        return (lo, tail(lo));
    }
    let mut hi = PI;
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if tail(mid) < budget {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    if hi >= PI * 0.999 {
        (PI, 0.0)
    } else {
        (hi, tail(hi))
    }
}

fn finish(integral: Integral, scale: f64, extra_error: f64) -> Integral {
    Integral {
        value: integral.value * scale,
        error: integral.error * scale + extra_error,
        panels: integral.panels,
    }
}

/// `G₀(0, v) = (1/π) ∫_0^π cos(tv) / (1 - φ(t)) dt`, the Green function of
/// the induced chain.
pub fn green_induced(v: i64, variant: PhiVariant, q: &QuadratureSpec) -> Result<Integral> {
    let vf = v as f64;
    let f = |t: f64| (vf * t).cos() / one_minus_phi(t, variant);
    let range = HalfRange {
        upper: PI,
        frequency: vf.abs(),
    };
    let inner = QuadratureSpec {
        abs_tol: q.abs_tol * PI,
        ..*q
    };
    let res = singular_integral_half(f, &inner, range)?;
    Ok(finish(res, 1.0 / PI, 0.0))
}

/// `G(z, y)` for `z` on the axis: the inverse Fourier transform of the
/// induced Green function times the row factor of `y₂`.
pub fn green_from_axis(z: Vertex, y: Vertex, variant: PhiVariant, q: &QuadratureSpec) -> Result<Integral> {
    if z.x2 != 0 {
        return Err(Error::InvalidArgument(format!("green_from_axis needs z on the axis, got {z}")));
    }
    let delta = y.x1 as f64 - z.x1 as f64;
    if y.x2 == 0 {
        return green_induced(y.x1 - z.x1, variant, q);
    }
    let sign = match variant {
        PhiVariant::Excursion => -1.0,
        PhiVariant::Paper => 1.0,
    };
    let b = y.x2;
    let f = |t: f64| (cis(sign * t * delta) * row_factor(t, b, variant)).re / one_minus_phi(t, variant);
    let env = |t: f64| {
        let m = rho(t, variant).norm().powf(b.unsigned_abs() as f64);
        1.5 * m / one_minus_phi(t, variant)
    };
    // 1 - φ is not monotone for the paper variant, so no cutoff there
    let (upper, tail) = match variant {
        PhiVariant::Excursion => envelope_cutoff(env, 0.05 * q.abs_tol * PI),
        PhiVariant::Paper => (PI, 0.0),
    };
    let inner = QuadratureSpec {
        abs_tol: q.abs_tol * PI - tail,
        ..*q
    };
    let res = singular_integral_half(
        f,
        &inner,
        HalfRange {
            upper,
            frequency: delta.abs(),
        },
    )?;
    Ok(finish(res, 1.0 / PI, tail / PI))
}

/// `G(x, y)` for any start, in closed form: for `x` off the axis,
/// `G(x, y) = E^x η_{0,τ₁}(y) + Σ_z ν_x(z) G((z,0), y)` with both the
/// pre-hit occupation and `ν_x` taken from their Fourier transforms.
/// Only available for [`PhiVariant::Excursion`].
pub fn green_closed_form(x: Vertex, y: Vertex, variant: PhiVariant, q: &QuadratureSpec) -> Result<Integral> {
    if x.x2 == 0 {
        return green_from_axis(x, y, variant, q);
    }
    if variant != PhiVariant::Excursion {
        return Err(Error::Unsupported(
            "closed-form Green function from off-axis starts exists only for the excursion variant".into(),
        ));
    }
    let (a, b) = (x.x2, y.x2);
    let delta = y.x1 as f64 - x.x1 as f64;
    let f = |t: f64| {
        let phase = cis(-t * delta);
        let lt = local_time_transform(t, a, b);
        let hit = first_passage_transform(t, a) * row_factor(t, b, variant);
        (phase * lt).re + (phase * hit).re / one_minus_phi(t, variant)
    };
    let (ua, ub) = (a.unsigned_abs() as f64, b.unsigned_abs() as f64);
    let same_side = a.signum() == b.signum();
    let env = |t: f64| {
        let m = rho(t, variant).norm();
        let hit = m.powf(ua) * if b == 0 { 1.0 } else { 1.5 * m.powf(ub) } / one_minus_phi(t, variant);
        let lt = if same_side {
            3.0 * m.powf(1.0 + (ua - ub).abs()) * ua.min(ub)
        } else {
            0.0
        };
        hit + lt
    };
    let budget = 0.05 * q.abs_tol * PI;
    let (upper, tail) = envelope_cutoff(env, budget);
    let inner = QuadratureSpec {
        abs_tol: q.abs_tol * PI - tail,
        ..*q
    };
    let res = singular_integral_half(
        f,
        &inner,
        HalfRange {
            upper,
            frequency: delta.abs(),
        },
    )?;
    Ok(finish(res, 1.0 / PI, tail / PI))
}

/// One grid point of the variant arbitration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ArbitrationRow {
    pub t: f64,
    pub phi_paper: f64,
    pub phi_excursion: f64,
    pub oracle_low: f64,
    pub oracle_high: f64,
}

impl ArbitrationRow {
    pub fn inside(&self, v: PhiVariant) -> bool {
        let x = match v {
            PhiVariant::Paper => self.phi_paper,
            PhiVariant::Excursion => self.phi_excursion,
        };
        x >= self.oracle_low && x <= self.oracle_high
    }

    /// The unique variant inside the enclosure, if exactly one is.
    pub fn unique_inside(&self) -> Option<PhiVariant> {
        match (self.inside(PhiVariant::Paper), self.inside(PhiVariant::Excursion)) {
            (true, false) => Some(PhiVariant::Paper),
            (false, true) => Some(PhiVariant::Excursion),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Arbitration {
    pub horizon: usize,
    pub escaped_mass: f64,
    pub rows: Vec<ArbitrationRow>,
    /// Set when one variant, the same at every grid point, is the only one
    /// inside the enclosure.
    pub winner: Option<PhiVariant>,
}

/// `{kπ/16 : k = 1..16}`.
pub fn arbitration_grid() -> Vec<f64> {
    (1..=16).map(|k| k as f64 * PI / 16.0).collect()
}

/// Compare both variants with the exact first-hit enclosure of
/// `E⁰[cos(t X_{σ₁})]` at horizon `horizon`.
pub fn arbitrate(horizon: usize, grid: &[f64]) -> Result<Arbitration> {
    let k = Kernel::sign_rule();
    let opts = FirstHitOptions {
        track_local_time: false,
        ..FirstHitOptions::for_mode(Mode::Float)
    };
    let report = oracle::first_hit_axis_with::<f64>(&k, Vertex::ORIGIN, horizon, opts)?;
    let rows: Vec<ArbitrationRow> = grid
        .iter()
        .map(|&t| {
            let c = char_enclosure(&report, t);
            ArbitrationRow {
                t,
                phi_paper: phi(t, PhiVariant::Paper),
                phi_excursion: phi(t, PhiVariant::Excursion),
                oracle_low: c.low(),
                oracle_high: c.high(),
            }
        })
        .collect();
    let mut winner = None;
    for (i, row) in rows.iter().enumerate() {
        match (row.unique_inside(), i) {
            (Some(v), 0) => winner = Some(v),
            (Some(v), _) if winner == Some(v) => {}
            _ => {
                winner = None;
                break;
            }
        }
    }
    Ok(Arbitration {
        horizon,
        escaped_mass: report.escaped_mass,
        rows,
        winner,
    })
}
