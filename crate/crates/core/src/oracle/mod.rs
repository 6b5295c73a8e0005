//! Exact finite-horizon computations used as ground truth by every other
//! route: the law of M_n, truncated Green sums, the first-hit law of the axis
//! and pre-hit local times.
//!
//! In exact mode ([`BigRational`](num_rational::BigRational)) nothing is ever
//! dropped. In float mode the only approximation is the optional pruning of
//! negligible edge mass, which is added to the reported deficit so that
//! enclosures remain valid.

mod field;

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::lattice::{Kernel, Vertex};
use crate::weight::{Mode, Weight};

pub use field::{EngineConfig, Field};
use field::Evolver;

/// A finitely supported (sub-)probability measure on vertices.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseDistribution<W> {
    weights: BTreeMap<Vertex, W>,
}

impl<W: Weight> SparseDistribution<W> {
    pub fn point(v: Vertex) -> Self {
        let mut weights = BTreeMap::new();
        weights.insert(v, W::one());
        SparseDistribution { weights }
    }

    /// Zero entries are dropped; negative entries are rejected.
    pub fn from_weights(weights: BTreeMap<Vertex, W>) -> Result<Self> {
        let mut out = BTreeMap::new();
        for (v, w) in weights {
            if w.is_zero() {
                continue;
            }
            if !w.is_positive() {
                return Err(Error::InvalidArgument(format!("negative weight at {v}")));
            }
            out.insert(v, w);
        }
        Ok(SparseDistribution { weights: out })
    }

    pub fn weights(&self) -> &BTreeMap<Vertex, W> {
        &self.weights
    }

    pub fn get(&self, v: Vertex) -> W {
        self.weights.get(&v).cloned().unwrap_or_else(W::zero)
    }

    pub fn total_mass(&self) -> W {
        let mut t = W::zero();
        for w in self.weights.values() {
            t.add_assign(w);
        }
        t
    }

    /// `1 - total_mass`.
    pub fn deficit(&self) -> W {
        W::one().sub(&self.total_mass())
    }

    pub fn mode(&self) -> Mode {
        W::MODE
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

/// Law of M_n under P^d, by repeated application of the kernel's
/// `out_neighbors`.
pub fn evolve<W: Weight>(
    k: &Kernel,
    d: &SparseDistribution<W>,
    n: usize,
    max_sites: usize,
) -> Result<SparseDistribution<W>> {
    let mut cur = d.weights.clone();
    for _ in 0..n {
        let mut next: BTreeMap<Vertex, W> = BTreeMap::new();
        for (u, w) in &cur {
            for (v, p) in k.out_neighbors(*u)? {
                next.entry(v).or_insert_with(W::zero).add_assign(&w.mul(&W::from_prob(p)));
            }
        }
        if next.len() > max_sites {
            return Err(Error::ResourceCap {
                sites: next.len(),
                cap: max_sites,
            });
        }
        cur = next;
    }
    Ok(SparseDistribution { weights: cur })
}

/// `P^n(x, y)` for every target and every `n ≤ horizon`, one row per target.
pub fn green_series<W: Weight>(
    k: &Kernel,
    x: Vertex,
    targets: &[Vertex],
    horizon: usize,
    cfg: EngineConfig,
) -> Result<Vec<Vec<W>>> {
    let mut ev = Evolver::new(k, Field::point(x, W::one()), horizon, cfg)?;
    let mut out: Vec<Vec<W>> = targets.iter().map(|_| Vec::with_capacity(horizon + 1)).collect();
    for n in 0..=horizon {
        if n > 0 {
            ev.step()?;
        }
        for (series, y) in out.iter_mut().zip(targets) {
            series.push(ev.cur.get(*y));
        }
    }
    Ok(out)
}

/// `Σ_{n=0}^{N} P^n(x, y)` for several targets from one evolution.
pub fn truncated_green_many<W: Weight>(
    k: &Kernel,
    x: Vertex,
    targets: &[Vertex],
    horizon: usize,
    cfg: EngineConfig,
) -> Result<Vec<W>> {
    let mut ev = Evolver::new(k, Field::point(x, W::one()), horizon, cfg)?;
    let mut sums: Vec<W> = targets.iter().map(|_| W::zero()).collect();
    for n in 0..=horizon {
        if n > 0 {
            ev.step()?;
        }
        for (s, y) in sums.iter_mut().zip(targets) {
            s.add_assign(&ev.cur.get(*y));
        }
    }
    Ok(sums)
}

/// `Σ_{n=0}^{N} P^n(x, y)`, a lower bound on G(x, y).
pub fn truncated_green<W: Weight>(k: &Kernel, x: Vertex, y: Vertex, horizon: usize) -> Result<W> {
    let cfg = match W::MODE {
        Mode::Exact => EngineConfig::exact(),
        Mode::Float => EngineConfig::default(),
    };
    Ok(truncated_green_many(k, x, &[y], horizon, cfg)?.remove(0))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FirstHitOptions {
    pub engine: EngineConfig,
    pub track_local_time: bool,
    /// Keep the hit law split by hitting time.
    pub by_time: bool,
}

impl FirstHitOptions {
    pub fn for_mode(mode: Mode) -> Self {
        FirstHitOptions {
            engine: match mode {
                Mode::Exact => EngineConfig::exact(),
                Mode::Float => EngineConfig::default(),
            },
            track_local_time: true,
            by_time: false,
        }
    }
}

/// Truncated law of the first return to the axis and the pre-hit occupation
/// measure.
#[derive(Debug, Clone)]
pub struct FirstHitReport<W> {
    pub start: Vertex,
    pub horizon: usize,
    /// `P^x(M_{τ₁} = (z, 0), τ₁ ≤ horizon)` by abscissa `z`.
    pub nu: BTreeMap<i64, W>,
    /// `E^x[η_{0, τ₁ ∧ (horizon + 1)}(y)]`: visits at times `0..=horizon`
    /// strictly before τ₁. Empty unless tracked.
    pub local_time: Field<W>,
    /// `P^x(τ₁ > horizon)` plus any pruned mass.
    pub escaped_mass: W,
    /// Mass still alive at the horizon.
    pub survivors: Field<W>,
    /// Part of `escaped_mass` that was pruned rather than evolved.
    pub pruned_mass: W,
    /// `hits_by_time[m - 1][z] = P^x(τ₁ = m, M_{τ₁} = (z, 0))` when requested.
    pub hits_by_time: Vec<BTreeMap<i64, W>>,
}

impl<W: Weight> FirstHitReport<W> {
    pub fn nu_mass(&self) -> W {
        let mut t = W::zero();
        for w in self.nu.values() {
            t.add_assign(w);
        }
        t
    }

    pub fn nu_at(&self, z: i64) -> W {
        self.nu.get(&z).cloned().unwrap_or_else(W::zero)
    }

    pub fn local_time_at(&self, y: Vertex) -> W {
        self.local_time.get(y)
    }

    /// Upper bound on the pre-hit visits to `y` that the truncation missed.
    ///
    /// From any start, the expected number of visits to `y` before the axis
    /// is hit is at most `2|y₂|`: the vertical coordinate is a simple random
    /// walk killed at 0, which visits level `y₂` from `y₂` on average `2|y₂|`
    /// times, and each such visit passes column `y₁` at most once because
    /// horizontal moves within a row are one-directional. Under the sign
    /// rule, survivors on the wrong side of `y₁` (or in the other half-plane)
    /// can never reach `y` before τ₁ and are excluded.
    pub fn local_time_tail_bound(&self, k: &Kernel, y: Vertex) -> f64 {
        if y.x2 == 0 {
            return 0.0;
        }
        let per_visit = 2.0 * y.x2.unsigned_abs() as f64;
        let pruned = self.pruned_mass.to_f64();
        if !k.orientation().is_sign_rule() {
            return per_visit * self.escaped_mass.to_f64();
        }
        let mut reachable = 0.0;
        if let Some((ymin, ymax)) = self.survivors.row_range() {
            for row in ymin..=ymax {
                if row == 0 || row.signum() != y.x2.signum() {
                    continue;
                }
                let m = if row > 0 {
                    self.survivors.row_mass_between(row, i64::MIN, y.x1)
                } else {
                    self.survivors.row_mass_between(row, y.x1, i64::MAX)
                };
                reachable += m.to_f64();
            }
        }
        per_visit * (reachable + pruned)
    }
}

/// Evolve the walk killed on the axis at times ≥ 1, binning killed mass by
/// abscissa.
pub fn first_hit_axis_with<W: Weight>(
    k: &Kernel,
    x: Vertex,
    horizon: usize,
    opts: FirstHitOptions,
) -> Result<FirstHitReport<W>> {
    if horizon == 0 {
        return Err(Error::InvalidArgument("first_hit_axis needs horizon >= 1".into()));
    }
    let mut ev = Evolver::new(k, Field::point(x, W::one()), horizon, opts.engine)?;
    let mut nu: BTreeMap<i64, W> = BTreeMap::new();
    let mut local_time = Field::default();
    let mut hits_by_time = Vec::new();
    for _ in 0..horizon {
        if opts.track_local_time {
            local_time.accumulate(&ev.cur);
        }
        ev.step()?;
        let mut hits = BTreeMap::new();
        if let Some(row) = ev.kill_axis() {
            for (j, w) in row.vals.iter().enumerate() {
                if w.is_zero() {
                    continue;
                }
                let z = row.lo + j as i64;
                nu.entry(z).or_insert_with(W::zero).add_assign(w);
                if opts.by_time {
                    hits.insert(z, w.clone());
                }
            }
        }
        if opts.by_time {
            hits_by_time.push(hits);
        }
    }
    if opts.track_local_time {
        local_time.accumulate(&ev.cur);
    }
    let mut escaped_mass = ev.cur.total();
    escaped_mass.add_assign(&ev.pruned);
    Ok(FirstHitReport {
        start: x,
        horizon,
        nu,
        local_time,
        escaped_mass,
        survivors: ev.cur,
        pruned_mass: ev.pruned,
        hits_by_time,
    })
}

pub fn first_hit_axis<W: Weight>(k: &Kernel, x: Vertex, horizon: usize) -> Result<FirstHitReport<W>> {
    first_hit_axis_with(k, x, horizon, FirstHitOptions::for_mode(W::MODE))
}

/// Both sides of the exact split of `Σ_{n≤N} Pⁿ(x, y)` at the first axis hit:
/// the direct sum, and the pre-hit visits plus
/// `Σ_m Σ_z P^x(τ₁ = m, M_{τ₁} = (z, 0)) Σ_{n≤N−m} Pⁿ((z, 0), y)`.
pub fn first_hit_split<W: Weight>(k: &Kernel, x: Vertex, ys: &[Vertex], horizon: usize) -> Result<Vec<(W, W)>> {
    let cfg = match W::MODE {
        Mode::Exact => EngineConfig::exact(),
        Mode::Float => EngineConfig::default(),
    };
    let opts = FirstHitOptions {
        engine: cfg,
        track_local_time: true,
        by_time: true,
    };
    let rep = first_hit_axis_with::<W>(k, x, horizon, opts)?;
    let lhs = truncated_green_many::<W>(k, x, ys, horizon, cfg)?;
    let mut out = Vec::with_capacity(ys.len());
    for (y, l) in ys.iter().zip(lhs) {
        let mut rhs = rep.local_time_at(*y);
        for (m_minus_1, hits) in rep.hits_by_time.iter().enumerate() {
            let rest = horizon - (m_minus_1 + 1);
            for (z, w) in hits {
                let g = truncated_green::<W>(k, Vertex::new(*z, 0), *y, rest)?;
                rhs.add_assign(&w.mul(&g));
            }
        }
        out.push((l, rhs));
    }
    Ok(out)
}

/// Truncated characteristic function of the first-hit displacement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CharEnclosure {
    /// `Σ_z ν(z) cos(t (z - x₁))`.
    pub re: f64,
    /// `Σ_z ν(z) sin(t (z - x₁))`; zero for starts on the axis of ℍ.
    pub im: f64,
    /// Half-width of the enclosure of the untruncated real part.
    pub escaped: f64,
    /// Bound on the floating-point error of `re`.
    pub rounding: f64,
}

impl CharEnclosure {
    pub fn low(&self) -> f64 {
        (self.re - self.escaped - self.rounding).max(-1.0)
    }

    pub fn high(&self) -> f64 {
        (self.re + self.escaped + self.rounding).min(1.0)
    }

    pub fn contains(&self, v: f64) -> bool {
        v >= self.low() && v <= self.high()
    }
}

pub fn char_enclosure<W: Weight>(report: &FirstHitReport<W>, t: f64) -> CharEnclosure {
    let x1 = report.start.x1;
    let (mut re, mut im) = (0.0, 0.0);
    for (z, w) in &report.nu {
        let arg = t * (z - x1) as f64;
        let w = w.to_f64();
        re += w * arg.cos();
        im += w * arg.sin();
    }
    // each term carries a few ulps from cos and the product, the sum one per
    // addition, and the weights sum to at most one
    let rounding = (report.nu.len() as f64 + 4.0) * 4.0 * f64::EPSILON;
    CharEnclosure {
        re,
        im,
        escaped: report.escaped_mass.to_f64(),
        rounding,
    }
}

/// `(Σ_z ν(z) cos(t z), escaped_mass)`: E⁰[cos(t X_{σ₁})] lies within
/// `±escaped_mass` of the first component.
pub fn char_of_first_hit<W: Weight>(report: &FirstHitReport<W>, t: f64) -> (f64, f64) {
    let c = char_enclosure(report, t);
    (c.re, c.escaped)
}
