//! Row-banded storage of a measure on ℤ² and the kernel applied to it.
//!
//! A nearest-neighbour walk started from a point has, at time n, support
//! inside a diamond of radius n. Each row is stored as one dense run of
//! columns, so one step of the kernel is three shifted `axpy` passes per row.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::lattice::{Kernel, Vertex};
use crate::weight::Weight;

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Row<W> {
    pub lo: i64,
    pub vals: Vec<W>,
}

impl<W> Row<W> {
    fn empty() -> Self {
        Row { lo: 0, vals: Vec::new() }
    }

    #[inline]
    fn hi(&self) -> i64 {
        self.lo + self.vals.len() as i64
    }
}

/// A finitely supported measure on ℤ², stored row by row.
#[derive(Debug, Clone, PartialEq)]
pub struct Field<W> {
    y0: i64,
    rows: Vec<Row<W>>,
}

impl<W: Weight> Default for Field<W> {
    fn default() -> Self {
        Field { y0: 0, rows: Vec::new() }
    }
}

impl<W: Weight> Field<W> {
    pub fn point(v: Vertex, w: W) -> Self {
        Field {
            y0: v.x2,
            rows: vec![Row { lo: v.x1, vals: vec![w] }],
        }
    }

    pub fn is_empty(&self) -> bool {
        self.rows.iter().all(|r| r.vals.is_empty())
    }

    /// Number of stored sites, zeros inside a run included.
    pub fn sites(&self) -> usize {
        self.rows.iter().map(|r| r.vals.len()).sum()
    }

    pub(crate) fn row(&self, y: i64) -> Option<&Row<W>> {
        let i = y.checked_sub(self.y0)?;
        if i < 0 {
            return None;
        }
        self.rows.get(i as usize).filter(|r| !r.vals.is_empty())
    }

    fn row_mut(&mut self, y: i64) -> Option<&mut Row<W>> {
        let i = y.checked_sub(self.y0)?;
        if i < 0 {
            return None;
        }
        self.rows.get_mut(i as usize).filter(|r| !r.vals.is_empty())
    }

    /// Rows with nonempty storage, bottom to top.
    pub fn row_range(&self) -> Option<(i64, i64)> {
        let first = self.rows.iter().position(|r| !r.vals.is_empty())?;
        let last = self.rows.iter().rposition(|r| !r.vals.is_empty())?;
        Some((self.y0 + first as i64, self.y0 + last as i64))
    }

    pub fn get(&self, v: Vertex) -> W {
        self.row(v.x2)
            .and_then(|r| {
                let j = v.x1.checked_sub(r.lo)?;
                if j < 0 {
                    None
                } else {
                    r.vals.get(j as usize).cloned()
                }
            })
            .unwrap_or_else(W::zero)
    }

    pub fn total(&self) -> W {
        let mut t = W::zero();
        for r in &self.rows {
            for v in &r.vals {
                t.add_assign(v);
            }
        }
        t
    }

    /// Nonzero entries, row by row from the bottom, left to right.
    pub fn iter(&self) -> impl Iterator<Item = (Vertex, &W)> + '_ {
        self.rows.iter().enumerate().flat_map(move |(i, r)| {
            let y = self.y0 + i as i64;
            r.vals
                .iter()
                .enumerate()
                .filter(|(_, w)| !w.is_zero())
                .map(move |(j, w)| (Vertex::new(r.lo + j as i64, y), w))
        })
    }

    /// Total mass on `row` restricted to columns in `[lo, hi]`.
    pub fn row_mass_between(&self, row: i64, lo: i64, hi: i64) -> W {
        let mut t = W::zero();
        if let Some(r) = self.row(row) {
            for (j, w) in r.vals.iter().enumerate() {
                let x = r.lo + j as i64;
                if x >= lo && x <= hi {
                    t.add_assign(w);
                }
            }
        }
        t
    }

    pub fn to_map(&self) -> BTreeMap<Vertex, W> {
        self.iter().map(|(v, w)| (v, w.clone())).collect()
    }

    /// Add `other` into `self`, growing rows as needed.
    pub fn accumulate(&mut self, other: &Field<W>) {
        let Some((ymin, ymax)) = other.row_range() else {
            return;
        };
        self.ensure_rows(ymin, ymax);
        for y in ymin..=ymax {
            let Some(src) = other.row(y) else { continue };
            let i = (y - self.y0) as usize;
            let dst = &mut self.rows[i];
            if dst.vals.is_empty() {
                dst.lo = src.lo;
                dst.vals.extend_from_slice(&src.vals);
                continue;
            }
            let lo = dst.lo.min(src.lo);
            let hi = dst.hi().max(src.hi());
            if lo < dst.lo || hi > dst.hi() {
                let mut grown = vec![W::zero(); (hi - lo) as usize];
                let off = (dst.lo - lo) as usize;
                grown[off..off + dst.vals.len()].clone_from_slice(&dst.vals);
                dst.vals = grown;
                dst.lo = lo;
            }
            let off = (src.lo - dst.lo) as usize;
            for (d, s) in dst.vals[off..off + src.vals.len()].iter_mut().zip(&src.vals) {
                d.add_assign(s);
            }
        }
    }

    fn ensure_rows(&mut self, ymin: i64, ymax: i64) {
        if self.rows.is_empty() {
            self.y0 = ymin;
        }
        if ymin < self.y0 {
            let extra = (self.y0 - ymin) as usize;
            let mut rows: Vec<Row<W>> = (0..extra).map(|_| Row::empty()).collect();
            rows.append(&mut self.rows);
            self.rows = rows;
            self.y0 = ymin;
        }
        let need = (ymax - self.y0 + 1) as usize;
        while self.rows.len() < need {
            self.rows.push(Row::empty());
        }
    }

    /// Remove and return the contents of `row`.
    fn take_row(&mut self, y: i64) -> Option<Row<W>> {
        let r = self.row_mut(y)?;
        let lo = r.lo;
        Some(Row {
            lo,
            vals: std::mem::take(&mut r.vals),
        })
    }

    fn drop_empty_edge_rows(&mut self) {
        let first = self.rows.iter().position(|r| !r.vals.is_empty());
        match first {
            None => {
                self.rows.clear();
            }
            Some(f) => {
                let last = self.rows.iter().rposition(|r| !r.vals.is_empty()).unwrap();
                self.rows.truncate(last + 1);
                if f > 0 {
                    self.rows.drain(..f);
                    self.y0 += f as i64;
                }
            }
        }
    }

    /// Trim negligible entries off the ends of every row into `sink`.
    fn prune_edges(&mut self, threshold: f64, sink: &mut W) {
        for r in &mut self.rows {
            let start = r.vals.iter().position(|w| !w.negligible(threshold));
            match start {
                None => {
                    for w in &r.vals {
                        sink.add_assign(w);
                    }
                    r.vals.clear();
                }
                Some(s) => {
                    let end = r.vals.iter().rposition(|w| !w.negligible(threshold)).unwrap();
                    for w in r.vals[end + 1..].iter().chain(&r.vals[..s]) {
                        sink.add_assign(w);
                    }
                    r.vals.truncate(end + 1);
                    if s > 0 {
                        r.vals.drain(..s);
                        r.lo += s as i64;
                    }
                }
            }
        }
        self.drop_empty_edge_rows();
    }
}

/// Memory and truncation controls for the evolution engine.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EngineConfig {
    /// Hard cap on stored sites; exceeding it is an error.
    pub max_sites: usize,
    /// Float mode only: entries below this at the edge of a row are moved
    /// into the reported mass deficit. Zero disables pruning.
    pub prune_below: f64,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            max_sites: 50_000_000,
            prune_below: 1e-22,
        }
    }
}

impl EngineConfig {
    pub fn exact() -> Self {
        EngineConfig {
            prune_below: 0.0,
            ..Default::default()
        }
    }
}

/// Applies the kernel to a [`Field`], optionally killing mass on the axis.
pub(crate) struct Evolver<'k, W> {
    kernel: &'k Kernel,
    cfg: EngineConfig,
    pub cur: Field<W>,
    next: Field<W>,
    pub pruned: W,
}

impl<'k, W: Weight> Evolver<'k, W> {
    pub fn new(kernel: &'k Kernel, start: Field<W>, horizon: usize, cfg: EngineConfig) -> Result<Self> {
        // every coordinate reachable within the horizon must be representable
        let h = i64::try_from(horizon).map_err(|_| Error::InvalidArgument("horizon too large".into()))?;
        for (v, _) in start.iter() {
            if v.checked_offset(h, h).is_err() || v.checked_offset(-h, -h).is_err() {
                return Err(Error::Overflow(v));
            }
        }
        Ok(Evolver {
            kernel,
            cfg,
            cur: start,
            next: Field::default(),
            pruned: W::zero(),
        })
    }

    pub fn step(&mut self) -> Result<()> {
        let Some((ymin, ymax)) = self.cur.row_range() else {
            return Ok(());
        };
        let new_y0 = ymin - 1;
        let new_len = (ymax - ymin + 3) as usize;
        let next = &mut self.next;
        next.y0 = new_y0;
        next.rows.truncate(new_len);
        while next.rows.len() < new_len {
            next.rows.push(Row::empty());
        }
        let cur = &self.cur;
        let kernel = self.kernel;
        let mut sites = 0usize;
        for (i, dst) in next.rows.iter_mut().enumerate() {
            let y = new_y0 + i as i64;
            let eps = kernel.epsilon(y) as i64;
            // (source row, column shift, coefficient)
            let mut sources: [(Option<&Row<W>>, i64, i64); 3] = [(None, 0, 0); 3];
            sources[0] = (cur.row(y + 1), 0, y + 1);
            sources[1] = (cur.row(y - 1), 0, y - 1);
            if eps != 0 {
                sources[2] = (cur.row(y), eps, y);
            }
            let mut lo = i64::MAX;
            let mut hi = i64::MIN;
            for (src, shift, _) in &sources {
                if let Some(r) = src {
                    lo = lo.min(r.lo + shift);
                    hi = hi.max(r.hi() + shift);
                }
            }
            dst.vals.clear();
            if lo >= hi {
                continue;
            }
            dst.lo = lo;
            dst.vals.resize((hi - lo) as usize, W::zero());
            for (src, shift, from_row) in &sources {
                if let Some(r) = src {
                    let c = W::from_prob(kernel.row_step_prob(*from_row));
                    let off = (r.lo + shift - lo) as usize;
                    W::axpy(&mut dst.vals[off..off + r.vals.len()], &c, &r.vals);
                }
            }
            sites += dst.vals.len();
        }
        if sites > self.cfg.max_sites {
            return Err(Error::ResourceCap {
                sites,
                cap: self.cfg.max_sites,
            });
        }
        std::mem::swap(&mut self.cur, &mut self.next);
        if self.cfg.prune_below > 0.0 {
            self.cur.prune_edges(self.cfg.prune_below, &mut self.pruned);
        } else {
            self.cur.drop_empty_edge_rows();
        }
        Ok(())
    }

    /// Remove the mass currently on the axis, returned per column.
    pub fn kill_axis(&mut self) -> Option<Row<W>> {
        let r = self.cur.take_row(0);
        self.cur.drop_empty_edge_rows();
        r
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::weight::ratio;
    use num_rational::BigRational;

    #[test]
    fn accumulate_grows_rows_and_keeps_order() {
        let mut a = Field::point(Vertex::new(2, 1), 1.0f64);
        a.accumulate(&Field::point(Vertex::new(-1, -2), 2.0));
        a.accumulate(&Field::point(Vertex::new(5, 1), 3.0));
        assert_eq!(a.get(Vertex::new(2, 1)), 1.0);
        assert_eq!(a.get(Vertex::new(-1, -2)), 2.0);
        assert_eq!(a.get(Vertex::new(5, 1)), 3.0);
        assert_eq!(a.get(Vertex::new(3, 1)), 0.0);
        let order: Vec<_> = a.iter().map(|(v, _)| v).collect();
        assert_eq!(order, vec![Vertex::new(-1, -2), Vertex::new(2, 1), Vertex::new(5, 1)]);
        assert_eq!(a.total(), 6.0);
    }

    #[test]
    fn one_step_exact() {
        let k = Kernel::sign_rule();
        let mut ev = Evolver::new(&k, Field::point(Vertex::ORIGIN, ratio(1, 1)), 2, EngineConfig::exact()).unwrap();
        ev.step().unwrap();
        assert_eq!(ev.cur.get(Vertex::new(0, 1)), ratio(1, 2));
        assert_eq!(ev.cur.get(Vertex::new(0, -1)), ratio(1, 2));
        ev.step().unwrap();
        assert_eq!(ev.cur.get(Vertex::ORIGIN), ratio(1, 3));
        assert_eq!(ev.cur.get(Vertex::new(1, 1)), ratio(1, 6));
        assert_eq!(ev.cur.get(Vertex::new(-1, -1)), ratio(1, 6));
        assert_eq!(ev.cur.total(), ratio(1, 1));
        let killed = ev.kill_axis().unwrap();
        assert_eq!(killed.vals, vec![ratio(1, 3)]);
        assert_eq!(ev.cur.total(), ratio(2, 3));
    }

    #[test]
    fn pruning_moves_mass_to_deficit() {
        let k = Kernel::sign_rule();
        let cfg = EngineConfig {
            prune_below: 1e-3,
            ..Default::default()
        };
        let mut ev = Evolver::new(&k, Field::point(Vertex::ORIGIN, 1.0f64), 40, cfg).unwrap();
        for _ in 0..40 {
            ev.step().unwrap();
        }
        assert!(ev.pruned > 0.0);
        assert!((ev.cur.total() + ev.pruned - 1.0).abs() < 1e-12);
    }

    #[test]
    fn support_cap_is_an_error() {
        let k = Kernel::sign_rule();
        let cfg = EngineConfig {
            max_sites: 50,
            prune_below: 0.0,
        };
        let mut ev = Evolver::new(&k, Field::point(Vertex::ORIGIN, 1.0f64), 100, cfg).unwrap();
        let res = (0..100).try_for_each(|_| ev.step());
        assert!(matches!(res, Err(Error::ResourceCap { cap: 50, .. })));
    }

    #[test]
    fn overflowing_start_is_rejected() {
        let k = Kernel::sign_rule();
        let start = Field::point(Vertex::new(i64::MAX - 3, 0), BigRational::from_integer(1.into()));
        assert!(Evolver::new(&k, start, 10, EngineConfig::exact()).is_err());
    }
}
