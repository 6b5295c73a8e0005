//! The table-producing subcommands and their argument parsers.

use std::f64::consts::PI;

use num_rational::BigRational;
use orlat_core::martin::{boundary_scan, box_starts, green_general, DirectionalSequence, GreenMethod};
use orlat_core::monte_carlo::{estimate_green_many, McConfig};
use orlat_core::oracle::{
    evolve, first_hit_axis_with, green_series, EngineConfig, FirstHitOptions, SparseDistribution,
};
use orlat_core::spectral::arbitrate;
use orlat_core::weight::{Mode, Weight};
use orlat_core::{Kernel, QuadratureSpec, Route, Vertex};

use crate::config::{ModeChoice, OptSeqArgs, RouteChoice, RunConfig, SeqArgs, TargetArgs};
use crate::error::{CliError, Result};
use crate::output::{Cell, Table};

const DEFAULT_KS: &str = "32,64,128,256";

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn int(s: &str, what: &str) -> Result<i64> {
    s.trim()
        .parse()
        .map_err(|_| usage(format!("{what}: expected an integer, got {s:?}")))
}

/// `a,b`.
pub fn parse_vertex(s: &str) -> Result<Vertex> {
    let (a, b) = s
        .split_once(',')
        .ok_or_else(|| usage(format!("expected a vertex `x1,x2`, got {s:?}")))?;
    Ok(Vertex::new(int(a, "x1")?, int(b, "x2")?))
}

/// `lo:hi` with `lo ≤ hi`.
pub fn parse_range(s: &str) -> Result<(i64, i64)> {
    let (a, b) = s
        .split_once(':')
        .ok_or_else(|| usage(format!("expected a range `lo:hi`, got {s:?}")))?;
    let (lo, hi) = (int(a, "range")?, int(b, "range")?);
    if lo > hi {
        return Err(usage(format!("empty range {s:?}")));
    }
    Ok((lo, hi))
}

/// `a:b,c:d` as every vertex with `a ≤ y₁ ≤ b`, `c ≤ y₂ ≤ d`, row by row.
pub fn parse_rect(s: &str) -> Result<Vec<Vertex>> {
    let (r1, r2) = s
        .split_once(',')
        .ok_or_else(|| usage(format!("expected a rectangle `a:b,c:d`, got {s:?}")))?;
    let (a, b) = parse_range(r1)?;
    let (c, d) = parse_range(r2)?;
    let area = (b - a + 1) as u128 * (d - c + 1) as u128;
    if area > 10_000_000 {
        return Err(usage(format!("rectangle {s:?} has {area} targets")));
    }
    Ok((c..=d).flat_map(|y2| (a..=b).map(move |y1| Vertex::new(y1, y2))).collect())
}

/// `n` distinct rounded points of the geometric progression from `lo` to
/// `hi`.
pub fn geometric_ks(lo: i64, hi: i64, n: usize) -> Vec<i64> {
    if n <= 1 {
        return vec![lo];
    }
    let (l, h) = (lo as f64, hi as f64);
    let mut ks: Vec<i64> = (0..n)
        .map(|i| (l * (h / l).powf(i as f64 / (n - 1) as f64)).round() as i64)
        .collect();
    ks.dedup();
    ks
}

/// A list `a,b,c` or `lo:hi:n` for `n` geometric points.
pub fn parse_ks(s: &str) -> Result<Vec<i64>> {
    let parts: Vec<&str> = s.split(':').collect();
    let ks = match parts.as_slice() {
        [lo, hi, n] => {
            let (lo, hi) = (int(lo, "ks")?, int(hi, "ks")?);
            let n = int(n, "ks")?;
            if lo <= 0 || hi < lo || n < 1 {
                return Err(usage(format!("bad index range {s:?}")));
            }
            geometric_ks(lo, hi, n as usize)
        }
        [list] => list.split(',').map(|k| int(k, "ks")).collect::<Result<Vec<_>>>()?,
        _ => return Err(usage(format!("expected `a,b,..` or `lo:hi:n`, got {s:?}"))),
    };
    if ks.is_empty() {
        return Err(usage("no sequence indices"));
    }
    Ok(ks)
}

/// `lambda=<λ>`, `+inf`, `-inf`, `+cubic` or `-cubic`.
pub fn parse_sequence(spec: &str, ks: &[i64], height: i64) -> Result<DirectionalSequence> {
    let seq = match spec.trim() {
        "+inf" | "inf" => DirectionalSequence::horizontal(true, height, ks)?,
        "-inf" => DirectionalSequence::horizontal(false, height, ks)?,
        "+cubic" | "cubic" => DirectionalSequence::cubic(true, ks)?,
        "-cubic" => DirectionalSequence::cubic(false, ks)?,
        other => {
            let l = other
                .strip_prefix("lambda=")
                .ok_or_else(|| usage(format!("unknown sequence {other:?}")))?;
            let l: f64 = l.parse().map_err(|_| usage(format!("bad λ in {other:?}")))?;
            if !l.is_finite() {
                return Err(usage("λ must be finite; use +inf or -inf"));
            }
            DirectionalSequence::parabolic(l, ks)?
        }
    };
    Ok(seq)
}

fn seq_from(args: &SeqArgs) -> Result<DirectionalSequence> {
    parse_sequence(&args.seq, &parse_ks(&args.ks)?, args.height)
}

fn targets_from(t: &TargetArgs) -> Result<Vec<Vertex>> {
    if let Some(y) = &t.y {
        return Ok(vec![parse_vertex(y)?]);
    }
    if let Some(r) = &t.rect {
        return parse_rect(r);
    }
    let OptSeqArgs { seq, ks, height } = &t.seq;
    match seq {
        Some(s) => {
            let ks = parse_ks(ks.as_deref().unwrap_or(DEFAULT_KS))?;
            Ok(parse_sequence(s, &ks, height.unwrap_or(1))?.targets)
        }
        None => Err(usage("give targets with --y, --rect or --seq")),
    }
}

fn quadrature(cfg: &RunConfig) -> Result<QuadratureSpec> {
    let q = QuadratureSpec::with_tol(cfg.abs_tol);
    q.validate()?;
    Ok(q)
}

pub fn cmd_phi(cfg: &RunConfig, grid: usize, ts: &[f64]) -> Result<Table> {
    let ts: Vec<f64> = if ts.is_empty() {
        if grid == 0 {
            return Err(usage("--grid must be positive"));
        }
        (0..=grid).map(|k| k as f64 * PI / grid as f64).collect()
    } else {
        ts.to_vec()
    };
    if let Some(t) = ts.iter().find(|t| !(t.abs() <= PI)) {
        return Err(usage(format!("t = {t} outside [-π, π]")));
    }
    let arb = arbitrate(cfg.horizon, &ts)?;
    let mut table = Table::new(&["t", "phi_paper", "phi_excursion", "oracle_low", "oracle_high"]);
    for r in &arb.rows {
        table.push(vec![
            r.t.into(),
            r.phi_paper.into(),
            r.phi_excursion.into(),
            r.oracle_low.into(),
            r.oracle_high.into(),
        ]);
    }
    table.note("escaped_mass", format!("{:e}", arb.escaped_mass));
    table.note("winner", arb.winner.map_or("none", |v| v.name()));
    Ok(table)
}

/// A truncated Green sum with an extrapolated estimate of what lies
/// beyond the horizon.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncatedGreen {
    /// `Σ_{n≤N} Pⁿ(x, y)`, a lower bound on `G(x, y)`.
    pub value: f64,
    /// Estimate of `Σ_{n>N} Pⁿ(x, y)`.
    pub tail: f64,
    /// `tail` plus the change from the cruder estimate.
    pub error: f64,
}

/// Truncated Green sums to `horizon`. With `T(M)` the sum to `M` and
/// `Pⁿ ≈ a n^{-3/2} + b n^{-2}`, the tail is `(5 D₁ − D₂) / 3` where
/// `D₁ = T(N) − T(N/4)` and `D₂ = T(N/4) − T(N/16)`; `D₁` alone is the
/// leading-order estimate.
pub fn oracle_green(k: &Kernel, x: Vertex, targets: &[Vertex], horizon: usize) -> Result<Vec<TruncatedGreen>> {
    if horizon < 16 {
        return Err(usage("the oracle route needs --horizon ≥ 16"));
    }
    let series = green_series::<f64>(k, x, targets, horizon, EngineConfig::default())?;
    Ok(series
        .iter()
        .map(|s| {
            let upto = |m: usize| s[..=m].iter().sum::<f64>();
            let (t1, t4, t16) = (upto(horizon), upto(horizon / 4), upto(horizon / 16));
            let (d1, d2) = (t1 - t4, t4 - t16);
            let tail = ((5.0 * d1 - d2) / 3.0).max(0.0);
            TruncatedGreen {
                value: t1,
                tail,
                error: tail + (tail - d1).abs(),
            }
        })
        .collect())
}

pub fn cmd_green(cfg: &RunConfig, x: &str, targets: &TargetArgs, route: RouteChoice) -> Result<Table> {
    let k = Kernel::sign_rule();
    let x = parse_vertex(x)?;
    let ys = targets_from(targets)?;
    let q = quadrature(cfg)?;
    let vals: Vec<(f64, f64, Route)> = match route {
        RouteChoice::Spectral => ys
            .iter()
            .map(|&y| {
                let g = green_general(&k, x, y, GreenMethod::ClosedForm, cfg.variant, &q)?;
                Ok((g.value, g.error, g.route))
            })
            .collect::<Result<_>>()?,
        RouteChoice::Oracle => oracle_green(&k, x, &ys, cfg.horizon)?
            .into_iter()
            .map(|g| (g.value, g.error, Route::Oracle))
            .collect(),
        RouteChoice::Mc => {
            let mc = McConfig::with_seed(cfg.seed);
            estimate_green_many(&k, x, &ys, cfg.n_paths, cfg.horizon, &mc)?
                .into_iter()
                .map(|e| (e.value, e.stderr, Route::MonteCarlo))
                .collect()
        }
    };
    let mut table = Table::new(&["y1", "y2", "value", "error", "route"]);
    for (y, (v, e, r)) in ys.iter().zip(vals) {
        table.push(vec![y.x1.into(), y.x2.into(), v.into(), e.into(), r.as_str().into()]);
    }
    match route {
        RouteChoice::Spectral => table.note("error", "quadrature error bound"),
        RouteChoice::Oracle => table.note("error", "extrapolated tail beyond the horizon; value is a lower bound"),
        RouteChoice::Mc => table.note("error", "one standard error"),
    }
    Ok(table)
}

pub fn cmd_martin(cfg: &RunConfig, xbox: &str, seq: &SeqArgs, oracle: bool) -> Result<Table> {
    let k = Kernel::sign_rule();
    let (lo, hi) = parse_range(xbox)?;
    let xs = box_starts(lo, hi);
    let seq = seq_from(seq)?;
    let q = quadrature(cfg)?;
    let method = if oracle {
        GreenMethod::Oracle { horizon: cfg.horizon }
    } else {
        GreenMethod::ClosedForm
    };
    let rows = boundary_scan(&k, &xs, &seq, method, cfg.variant, &q)?;
    let mut table = Table::new(&["x1", "x2", "k", "y1", "y2", "K", "error"]);
    for r in &rows {
        table.push(vec![
            r.x.x1.into(),
            r.x.x2.into(),
            r.k.into(),
            r.y.x1.into(),
            r.y.x2.into(),
            r.kernel.value.into(),
            r.kernel.error.into(),
        ]);
    }
    let last = *seq.ks.last().expect("non-empty");
    let worst = rows
        .iter()
        .filter(|r| r.k == last)
        .map(|r| (r.kernel.value - 1.0).abs())
        .fold(0.0, f64::max);
    table.note("direction", seq.direction.label());
    table.note("max_abs_K_minus_1_at_last_k", worst);
    Ok(table)
}

fn weight_cells<W: Weight + ToRational>(w: &W, mode: ModeChoice) -> Vec<Cell> {
    match mode {
        ModeChoice::Exact => {
            let (n, d) = w.num_den();
            vec![n.into(), d.into()]
        }
        ModeChoice::Float => vec![w.to_f64().into()],
    }
}

/// Numerator and denominator text of an exact weight.
pub trait ToRational {
    fn num_den(&self) -> (String, String);
}

impl ToRational for BigRational {
    fn num_den(&self) -> (String, String) {
        (self.numer().to_string(), self.denom().to_string())
    }
}

impl ToRational for f64 {
    fn num_den(&self) -> (String, String) {
        (format!("{self:?}"), "1".into())
    }
}

fn weight_columns(first: &[&str], mode: ModeChoice) -> Table {
    let mut cols = first.to_vec();
    match mode {
        ModeChoice::Exact => cols.extend(["weight_num", "weight_den"]),
        ModeChoice::Float => cols.push("weight_float"),
    }
    Table::new(&cols)
}

fn evolve_table<W: Weight + ToRational>(x: Vertex, n: usize, mode: ModeChoice) -> Result<Table> {
    let k = Kernel::sign_rule();
    let d = evolve(&k, &SparseDistribution::<W>::point(x), n, EngineConfig::default().max_sites)?;
    let mut table = weight_columns(&["x1", "x2"], mode);
    for (v, w) in d.weights() {
        let mut row: Vec<Cell> = vec![v.x1.into(), v.x2.into()];
        row.extend(weight_cells(w, mode));
        table.push(row);
    }
    table.note("sites", d.len());
    table.note("deficit", d.deficit().to_f64());
    Ok(table)
}

pub fn cmd_evolve(cfg: &RunConfig, x: &str, mode: ModeChoice) -> Result<Table> {
    let x = parse_vertex(x)?;
    match mode {
        ModeChoice::Exact => evolve_table::<BigRational>(x, cfg.horizon, mode),
        ModeChoice::Float => evolve_table::<f64>(x, cfg.horizon, mode),
    }
}

fn first_hit_table<W: Weight + ToRational>(x: Vertex, horizon: usize, mode: ModeChoice) -> Result<Table> {
    let k = Kernel::sign_rule();
    let opts = FirstHitOptions {
        track_local_time: false,
        ..FirstHitOptions::for_mode(W::MODE)
    };
    let rep = first_hit_axis_with::<W>(&k, x, horizon, opts)?;
    let mut table = weight_columns(&["z"], mode);
    for (z, w) in &rep.nu {
        let mut row: Vec<Cell> = vec![(*z).into()];
        row.extend(weight_cells(w, mode));
        table.push(row);
    }
    table.note("hit_mass", rep.nu_mass().to_f64());
    table.note("escaped_mass", rep.escaped_mass.to_f64());
    if W::MODE == Mode::Float {
        table.note("pruned_mass", rep.pruned_mass.to_f64());
    }
    Ok(table)
}

pub fn cmd_first_hit(cfg: &RunConfig, x: &str, mode: ModeChoice) -> Result<Table> {
    let x = parse_vertex(x)?;
    if x.x2 == 0 {
        return Err(usage("the start must be off the axis"));
    }
    match mode {
        ModeChoice::Exact => first_hit_table::<BigRational>(x, cfg.horizon, mode),
        ModeChoice::Float => first_hit_table::<f64>(x, cfg.horizon, mode),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parsers() {
        assert_eq!(parse_vertex("-3,2").unwrap(), Vertex::new(-3, 2));
        assert!(parse_vertex("3").is_err());
        assert_eq!(parse_range("-3:3").unwrap(), (-3, 3));
        assert!(parse_range("2:1").is_err());
        let r = parse_rect("0:2,-1:0").unwrap();
        assert_eq!(r.len(), 6);
        assert_eq!(r[0], Vertex::new(0, -1));
        assert_eq!(parse_ks("4,8,16").unwrap(), vec![4, 8, 16]);
        assert_eq!(parse_ks("32:256:4").unwrap(), vec![32, 64, 128, 256]);
        assert!(parse_ks("0:4:3").is_err());
        let s = parse_sequence("lambda=-1", &[2, 3], 1).unwrap();
        assert_eq!(s.targets, vec![Vertex::new(-4, 2), Vertex::new(-9, 3)]);
        let s = parse_sequence("-inf", &[2, 3], 4).unwrap();
        assert_eq!(s.targets, vec![Vertex::new(-2, 4), Vertex::new(-3, 4)]);
        assert!(parse_sequence("lambda=inf", &[2], 1).is_err());
        assert!(parse_sequence("sideways", &[2], 1).is_err());
    }

    #[test]
    fn geometric_indices_are_distinct_and_span() {
        let ks = geometric_ks(32, 256, 16);
        assert_eq!(ks.len(), 16);
        assert_eq!((ks[0], ks[15]), (32, 256));
        let ks = geometric_ks(256, 65536, 17);
        assert_eq!(ks.len(), 17);
        assert_eq!(ks[8], 4096);
    }

    #[test]
    fn oracle_tail_estimate_covers_the_gap() {
        let k = Kernel::sign_rule();
        let ys = [Vertex::new(1, 0), Vertex::new(0, 0), Vertex::new(2, 1)];
        let short = oracle_green(&k, Vertex::ORIGIN, &ys, 1024).unwrap();
        let long = oracle_green(&k, Vertex::ORIGIN, &ys, 4096).unwrap();
        for (s, l) in short.iter().zip(&long) {
            // the sum from 1025 to 4096 is half the tail beyond 1024 at leading order
            let gap = l.value - s.value;
            assert!(gap > 0.0 && gap < s.error);
            assert!((gap / (s.tail - l.tail) - 1.0).abs() < 0.01, "{gap} {} {}", s.tail, l.tail);
            assert!(l.error >= l.tail && l.tail > 0.0);
        }
        assert!(oracle_green(&k, Vertex::ORIGIN, &ys, 8).is_err());
    }
}
