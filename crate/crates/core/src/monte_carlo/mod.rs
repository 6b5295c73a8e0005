//! Trajectory simulation of the walk, of the induced chain at axis returns,
//! and of its geometric representation, with reproducible chunked estimators.
//!
//! Every estimator splits its paths into fixed-size chunks; chunk `c` draws
//! from `ChaCha8Rng::seed_from_u64(seed)` on stream `c`. Chunks may run on
//! any number of threads and are merged in chunk order, so results depend on
//! `(seed, n_paths, chunk_size)` only.

mod digits;
pub mod stats;

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lattice::{Kernel, Vertex};
use crate::spectral::GeometricConvention;

pub use digits::Digits;
pub use stats::{two_sample_chi2, Chi2Test, Welford};

/// Default step cap for sampling τ₁.
pub const DEFAULT_STEP_CAP: u64 = 100_000_000;

/// A simulated path with its axis returns.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    pub start: Vertex,
    /// `steps[n]` is the position at time `n`; `steps[0] = start`.
    pub steps: Vec<Vertex>,
    /// `(n, abscissa)` for every time `n ≥ 1` spent on the axis.
    pub axis_hits: Vec<(u64, i64)>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.steps.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.steps.len() == 1
    }

    /// Visit counts over times `0..n`.
    pub fn local_times(&self, n: usize) -> BTreeMap<Vertex, u64> {
        let mut out = BTreeMap::new();
        for v in self.steps.iter().take(n) {
            *out.entry(*v).or_insert(0) += 1;
        }
        out
    }
}

/// One excursion of the vertical walk with its horizontal displacement
/// assembled from per-visit geometric counts.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GeomExcursion {
    /// Levels visited at times `0..=σ₁`.
    pub y_path: Vec<i64>,
    /// Visits to each level at times `0..σ₁`.
    pub local_times: BTreeMap<i64, u64>,
    /// `geom_draws[i]` horizontal moves made during the visit at time `i`
    /// (zero on the axis).
    pub geom_draws: Vec<u64>,
    pub x_displacement: i64,
}

impl GeomExcursion {
    /// `σ₁`.
    pub fn return_time(&self) -> u64 {
        (self.y_path.len() - 1) as u64
    }

    /// Total number of moves of the planar walk, `σ₁ + Σ ξ`.
    pub fn planar_time(&self) -> u64 {
        self.return_time() + self.geom_draws.iter().sum::<u64>()
    }

    /// `Σ_i sgn(y_i) ξ_i`.
    pub fn recompute_displacement(&self) -> i64 {
        self.y_path
            .iter()
            .zip(&self.geom_draws)
            .map(|(&y, &g)| y.signum() * g as i64)
            .sum()
    }
}

/// A Monte Carlo mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub value: f64,
    pub stderr: f64,
    pub n_samples: u64,
    pub seed: u64,
}

/// Outcome of one induced-chain draw.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Induced {
    /// First-return abscissa displacement and the number of planar moves.
    Hit { x: i64, time: u64 },
    /// The step cap was reached first.
    Censored,
}

impl Induced {
    pub fn displacement(&self) -> Option<i64> {
        match self {
            Induced::Hit { x, .. } => Some(*x),
            Induced::Censored => None,
        }
    }
}

/// Chunking and seeding of a Monte Carlo run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct McConfig {
    pub seed: u64,
    pub chunk_size: u64,
    /// Run chunks on the current rayon pool.
    pub parallel: bool,
    pub step_cap: u64,
}

impl Default for McConfig {
    fn default() -> Self {
        McConfig {
            seed: 0,
            chunk_size: 4096,
            parallel: true,
            step_cap: DEFAULT_STEP_CAP,
        }
    }
}

impl McConfig {
    pub fn with_seed(seed: u64) -> Self {
        McConfig {
            seed,
            ..Default::default()
        }
    }

    /// The generator for chunk `c`.
    pub fn chunk_rng(&self, c: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(c);
        rng
    }

    fn chunks(&self, n: u64) -> Vec<(u64, u64)> {
        let size = self.chunk_size.max(1);
        (0..n.div_ceil(size))
            .map(|c| (c, size.min(n - c * size)))
            .collect()
    }

    /// Run `work(chunk_index, paths_in_chunk, rng)` for every chunk and
    /// return the results in chunk order.
    pub fn run_chunks<T, F>(&self, n: u64, work: F) -> Vec<T>
    where
        T: Send,
        F: Fn(u64, u64, &mut ChaCha8Rng) -> T + Sync,
    {
        let chunks = self.chunks(n);
        let go = |&(c, m): &(u64, u64)| {
            let mut rng = self.chunk_rng(c);
            work(c, m, &mut rng)
        };
        if self.parallel {
            chunks.par_iter().map(go).collect()
        } else {
            chunks.iter().map(go).collect()
        }
    }
}

fn check_room(x: Vertex, steps: u64) -> Result<()> {
    let room = i64::MAX as u64 - steps.min(i64::MAX as u64);
    if x.x1.unsigned_abs() > room || x.x2.unsigned_abs() > room {
        return Err(Error::Overflow(x));
    }
    Ok(())
}

/// One step from `u` using the cached digits. Neighbours are indexed as in
/// [`Kernel::neighbor`].
#[inline]
fn fast_step<R: Rng>(k: &Kernel, u: Vertex, d: &mut Digits<'_, R>) -> Vertex {
    let e = k.epsilon(u.x2);
    let idx = if e == 0 { d.bit() as u8 } else { d.trit() };
    match idx {
        0 => Vertex::new(u.x1, u.x2 + 1),
        1 => Vertex::new(u.x1, u.x2 - 1),
        _ => Vertex::new(u.x1 + e as i64, u.x2),
    }
}

/// A path of exactly `n_steps` steps from `x`.
pub fn simulate<R: Rng>(k: &Kernel, x: Vertex, n_steps: usize, rng: &mut R) -> Result<Trajectory> {
    check_room(x, n_steps as u64)?;
    let mut d = Digits::new(rng);
    let mut steps = Vec::with_capacity(n_steps + 1);
    let mut axis_hits = Vec::new();
    let mut u = x;
    steps.push(u);
    for n in 1..=n_steps as u64 {
        u = fast_step(k, u, &mut d);
        steps.push(u);
        if u.x2 == 0 {
            axis_hits.push((n, u.x1));
        }
    }
    Ok(Trajectory {
        start: x,
        steps,
        axis_hits,
    })
}

/// Run the walk from `x` until it is on the axis at some time ≥ 1.
pub fn first_axis_hit<R: Rng>(k: &Kernel, x: Vertex, cap: u64, rng: &mut R) -> Result<Induced> {
    check_room(x, cap)?;
    let mut d = Digits::new(rng);
    let mut u = x;
    for n in 1..=cap {
        u = fast_step(k, u, &mut d);
        if u.x2 == 0 {
            return Ok(Induced::Hit {
                x: u.x1 - x.x1,
                time: n,
            });
        }
    }
    Ok(Induced::Censored)
}

/// One induced-chain step from the origin by running the planar walk.
pub fn sample_induced_direct<R: Rng>(k: &Kernel, cap: u64, rng: &mut R) -> Result<Induced> {
    first_axis_hit(k, Vertex::ORIGIN, cap, rng)
}

/// `ξ` with `P(ξ ≥ j) = p^j`, by inversion.
#[inline]
fn geometric<R: Rng>(rng: &mut R, log_p: f64) -> u64 {
    // u in (0, 1]
    let u = 1.0 - rng.gen::<f64>();
    (u.ln() / log_p).floor() as u64
}

/// One excursion of the vertical walk with geometric horizontal counts.
/// Returns `None` when `σ₁ + Σ ξ` exceeds `cap`.
pub fn sample_induced_geometric<R: Rng>(
    conv: GeometricConvention,
    cap: u64,
    rng: &mut R,
) -> Option<GeomExcursion> {
    let log_p = conv.continue_prob().ln();
    let mut y_path = vec![0i64];
    let mut geom_draws = Vec::new();
    let mut local_times = BTreeMap::new();
    let mut x = 0i64;
    let mut time = 0u64;
    let mut y = 0i64;
    loop {
        *local_times.entry(y).or_insert(0) += 1;
        let g = if y == 0 { 0 } else { geometric(rng, log_p) };
        geom_draws.push(g);
        x += y.signum() * g as i64;
        time += g + 1;
        if time > cap {
            return None;
        }
        y += if rng.gen::<bool>() { 1 } else { -1 };
        y_path.push(y);
        if y == 0 {
            return Some(GeomExcursion {
                y_path,
                local_times,
                geom_draws,
                x_displacement: x,
            });
        }
    }
}

/// [`sample_induced_geometric`] without recording the excursion; consumes
/// the generator identically.
pub fn induced_geometric_fast<R: Rng>(conv: GeometricConvention, cap: u64, rng: &mut R) -> Induced {
    let log_p = conv.continue_prob().ln();
    let mut x = 0i64;
    let mut time = 0u64;
    let mut y = 0i64;
    loop {
        if y != 0 {
            let g = geometric(rng, log_p);
            x += y.signum() * g as i64;
            time += g;
        }
        time += 1;
        if time > cap {
            return Induced::Censored;
        }
        y += if rng.gen::<bool>() { 1 } else { -1 };
        if y == 0 {
            return Induced::Hit { x, time };
        }
    }
}

/// Mean number of visits to `y` at times `0..=horizon` from `x`.
pub fn estimate_green(k: &Kernel, x: Vertex, y: Vertex, n_paths: u64, horizon: usize, cfg: &McConfig) -> Result<Estimate> {
    Ok(estimate_green_many(k, x, &[y], n_paths, horizon, cfg)?.remove(0))
}

/// [`estimate_green`] for several targets sharing the same paths.
pub fn estimate_green_many(
    k: &Kernel,
    x: Vertex,
    targets: &[Vertex],
    n_paths: u64,
    horizon: usize,
    cfg: &McConfig,
) -> Result<Vec<Estimate>> {
    if n_paths == 0 {
        return Err(Error::InvalidArgument("n_paths must be positive".into()));
    }
    check_room(x, horizon as u64)?;
    let parts = cfg.run_chunks(n_paths, |_, m, rng| {
        let mut acc: Vec<Welford> = targets.iter().map(|_| Welford::default()).collect();
        let mut counts = vec![0u64; targets.len()];
        let mut d = Digits::new(rng);
        for _ in 0..m {
            counts.iter_mut().for_each(|c| *c = 0);
            let mut u = x;
            for n in 0..=horizon {
                if n > 0 {
                    u = fast_step(k, u, &mut d);
                }
                for (c, y) in counts.iter_mut().zip(targets) {
                    if u == *y {
                        *c += 1;
                    }
                }
            }
            for (a, &c) in acc.iter_mut().zip(&counts) {
                a.push(c as f64);
            }
        }
        acc
    });
    let mut total: Vec<Welford> = targets.iter().map(|_| Welford::default()).collect();
    for part in parts {
        for (t, p) in total.iter_mut().zip(part) {
            t.merge(&p);
        }
    }
    Ok(total.iter().map(|w| w.estimate(cfg.seed)).collect())
}

/// Empirical law of an integer-valued draw with censored draws kept apart.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct EmpiricalLaw {
    pub counts: BTreeMap<i64, u64>,
    pub censored: u64,
    pub n: u64,
}

impl EmpiricalLaw {
    pub fn record(&mut self, draw: Induced) {
        self.n += 1;
        match draw {
            Induced::Hit { x, .. } => *self.counts.entry(x).or_insert(0) += 1,
            Induced::Censored => self.censored += 1,
        }
    }

    pub fn merge(&mut self, other: &EmpiricalLaw) {
        for (&z, &c) in &other.counts {
            *self.counts.entry(z).or_insert(0) += c;
        }
        self.censored += other.censored;
        self.n += other.n;
    }

    pub fn prob(&self, z: i64) -> f64 {
        self.counts.get(&z).copied().unwrap_or(0) as f64 / self.n as f64
    }

    /// Binomial standard error of [`EmpiricalLaw::prob`].
    pub fn stderr(&self, z: i64) -> f64 {
        let p = self.prob(z);
        (p * (1.0 - p) / self.n as f64).sqrt()
    }

    /// Fraction of censored draws.
    pub fn deficit(&self) -> f64 {
        self.censored as f64 / self.n as f64
    }

    pub fn mean_uncensored(&self) -> f64 {
        let (s, c) = self
            .counts
            .iter()
            .fold((0.0, 0u64), |(s, c), (&z, &n)| (s + z as f64 * n as f64, c + n));
        s / c as f64
    }

    /// Counts for `z` in `-width..=width`, then the left tail, right tail
    /// and censored draws.
    pub fn binned(&self, width: i64) -> Vec<u64> {
        let mut out = vec![0u64; (2 * width + 1) as usize + 3];
        for (&z, &c) in &self.counts {
            let slot = if z < -width {
                out.len() - 3
            } else if z > width {
                out.len() - 2
            } else {
                (z + width) as usize
            };
            out[slot] += c;
        }
        let last = out.len() - 1;
        out[last] = self.censored;
        out
    }
}

/// Empirical first-hit abscissa law from `x` (absolute abscissae).
pub fn estimate_nu(k: &Kernel, x: Vertex, n_paths: u64, cfg: &McConfig) -> Result<EmpiricalLaw> {
    check_room(x, cfg.step_cap)?;
    let parts = cfg.run_chunks(n_paths, |_, m, rng| {
        let mut law = EmpiricalLaw::default();
        for _ in 0..m {
            let draw = first_axis_hit(k, x, cfg.step_cap, rng).expect("room checked");
            law.record(match draw {
                Induced::Hit { x: dx, time } => Induced::Hit { x: x.x1 + dx, time },
                c => c,
            });
        }
        law
    });
    let mut law = EmpiricalLaw::default();
    for p in &parts {
        law.merge(p);
    }
    Ok(law)
}

/// Induced-chain displacement laws from both samplers.
pub fn induced_laws(k: &Kernel, conv: GeometricConvention, n: u64, cfg: &McConfig) -> (EmpiricalLaw, EmpiricalLaw) {
    let direct = cfg.run_chunks(n, |_, m, rng| {
        let mut law = EmpiricalLaw::default();
        for _ in 0..m {
            law.record(sample_induced_direct(k, cfg.step_cap, rng).expect("origin has room"));
        }
        law
    });
    // the geometric sampler uses the streams after those of the direct one
    let offset = n.div_ceil(cfg.chunk_size.max(1));
    let geom = cfg.run_chunks(n, |c, m, _| {
        let mut rng = cfg.chunk_rng(c + offset);
        let mut law = EmpiricalLaw::default();
        for _ in 0..m {
            law.record(induced_geometric_fast(conv, cfg.step_cap, &mut rng));
        }
        law
    });
    let fold = |parts: Vec<EmpiricalLaw>| {
        let mut law = EmpiricalLaw::default();
        for p in &parts {
            law.merge(p);
        }
        law
    };
    (fold(direct), fold(geom))
}

/// Empirical survival `P(τ₁ > T)` of the direct sampler's return time at
/// each threshold, and the log-log slope against `T` (about −1/2).
pub fn return_time_tail(k: &Kernel, thresholds: &[u64], n: u64, cfg: &McConfig) -> Result<(Vec<f64>, f64)> {
    let cap = thresholds.iter().copied().max().unwrap_or(0);
    let parts = cfg.run_chunks(n, |_, m, rng| {
        let mut above = vec![0u64; thresholds.len()];
        for _ in 0..m {
            let t = match sample_induced_direct(k, cap, rng).expect("origin has room") {
                Induced::Hit { time, .. } => time,
                Induced::Censored => u64::MAX,
            };
            for (a, &th) in above.iter_mut().zip(thresholds) {
                if t > th {
                    *a += 1;
                }
            }
        }
        above
    });
    let mut above = vec![0u64; thresholds.len()];
    for p in parts {
        for (a, b) in above.iter_mut().zip(p) {
            *a += b;
        }
    }
    let surv: Vec<f64> = above.iter().map(|&a| a as f64 / n as f64).collect();
    let xs: Vec<f64> = thresholds.iter().map(|&t| t as f64).collect();
    let fit = crate::fit::log_log_fit(&xs, &surv)?;
    Ok((surv, fit.slope))
}

#[cfg(test)]
mod tests;
