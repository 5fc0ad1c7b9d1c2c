//! Ironing of the virtual valuation for utility.
//!
//! The construction runs in quantile space on a clipped grid
//! `q in [eps, 1 - eps]`:
//!
//! 1. `h(q) = theta(F^-1(q))`
//! 2. `H(q) = int h`, by the cumulative trapezoid rule
//! 3. `G` = lower convex hull of the points `(q_j, H(q_j))`
//! 4. `g` = slope of the hull segment to the right of `q` (right-continuous)
//! 5. `phibar(v) = g(F(v))`
//!
//! Hull segments that skip grid points, together with runs of segments whose
//! slopes agree to 1e-9, become *flat pieces*: value ranges on which the
//! ironed valuation is one stored constant. Everywhere else `phibar` is the
//! exact `theta(v)`, which the hull certifies to be increasing there. The
//! ends of each flat piece are then snapped onto the points where `theta`
//! crosses the piece's level, so level sets are exact and ties between agents
//! are decided by float equality of stored constants, never by grid cells.

use std::io::Write;

use serde::Serialize;

use crate::dist::{clipped_quantile_grid, Support, ValueDistribution, QUANTILE_EPS};
use crate::error::{Error, Result};

pub const DEFAULT_GRID: usize = 1 << 14;
const MIN_GRID: usize = 64;
/// Relative `H - G` gap below which a grid point counts as touching the hull.
const IRONING_THRESHOLD: f64 = 1e-9;
/// Relative slope agreement for merging adjacent hull segments.
const SLOPE_MERGE_TOL: f64 = 1e-9;

/// Vertex indices of the lower convex hull of points with strictly
/// increasing `x`. Collinear interior points are dropped, so consecutive
/// vertex slopes strictly increase.
pub fn lower_convex_hull(points: &[(f64, f64)]) -> Result<Vec<usize>> {
    if points.len() < 2 {
        return Err(Error::input("convex hull needs at least two points"));
    }
    if let Some(bad) = points.iter().find(|(x, y)| !(x.is_finite() && y.is_finite())) {
        return Err(Error::input(format!("non-finite hull point {bad:?}")));
    }
    if let Some(w) = points.windows(2).find(|w| w[1].0 <= w[0].0) {
        return Err(Error::input(format!(
            "hull x must strictly increase: {} then {}",
            w[0].0, w[1].0
        )));
    }
    let cross = |o: (f64, f64), a: (f64, f64), b: (f64, f64)| {
        (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0)
    };
    let mut hull: Vec<usize> = Vec::with_capacity(points.len());
    for (i, &p) in points.iter().enumerate() {
        while hull.len() >= 2 {
            let o = points[hull[hull.len() - 2]];
            let a = points[hull[hull.len() - 1]];
            if cross(o, a, p) <= 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(i);
    }
    Ok(hull)
}

/// A maximal stretch where `G < H`, i.e. one hull segment bridging over
/// grid points that lie strictly above it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IronedInterval {
    pub q_lo: f64,
    pub q_hi: f64,
    pub v_lo: f64,
    pub v_hi: f64,
    /// Constant ironed value on the interval (the hull slope).
    pub level: f64,
}

/// A value range on which `phibar` is constant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FlatPiece {
    pub v_lo: f64,
    pub v_hi: f64,
    pub level: f64,
    /// `false` for stretches where `theta` itself is constant.
    pub ironed: bool,
}

/// `{u : phibar(u) >= L}` starts at `lo`; `{u : phibar(u) > L}` starts at `hi`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LevelSet {
    pub lo: f64,
    pub hi: f64,
}

/// One grid row of the ironing table.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct IroningRow {
    pub q: f64,
    pub v: f64,
    pub theta: f64,
    #[serde(rename = "H")]
    pub big_h: f64,
    #[serde(rename = "G")]
    pub big_g: f64,
    pub phibar: f64,
    pub ironed_flag: u8,
}

/// Anything that can report an (ironed) virtual valuation for a value.
pub trait IronedValuation: Send + Sync {
    fn ironed_value(&self, v: f64) -> Result<f64>;
}

impl<F> IronedValuation for F
where
    F: Fn(f64) -> f64 + Send + Sync,
{
    fn ironed_value(&self, v: f64) -> Result<f64> {
        Ok(self(v))
    }
}

#[derive(Debug, Clone)]
pub struct IronedVirtual {
    dist: ValueDistribution,
    q: Vec<f64>,
    v: Vec<f64>,
    h: Vec<f64>,
    big_h: Vec<f64>,
    big_g: Vec<f64>,
    hull: Vec<usize>,
    flagged: Vec<bool>,
    intervals: Vec<IronedInterval>,
    pieces: Vec<FlatPiece>,
}

/// Irons `d`'s virtual valuation for utility on a grid of `grid` quantiles.
pub fn iron(d: &ValueDistribution, grid: usize) -> Result<IronedVirtual> {
    iron_clipped(d, grid, QUANTILE_EPS)
}

/// As [`iron`], with the quantile grid clipped to `[eps, 1 - eps]`.
pub fn iron_clipped(d: &ValueDistribution, grid: usize, eps: f64) -> Result<IronedVirtual> {
    if !(eps > 0.0 && eps < 0.25) {
        return Err(Error::input(format!("clip eps must lie in (0, 0.25), got {eps}")));
    }
    let dist = d.clone();
    build(d.clone(), grid, eps, move |v| dist.theta(v))
}

fn build(dist: ValueDistribution, grid: usize, eps: f64, theta: impl Fn(f64) -> f64) -> Result<IronedVirtual> {
    if grid < MIN_GRID {
        return Err(Error::input(format!("ironing grid needs >= {MIN_GRID} points, got {grid}")));
    }
    let support = dist.support();
    let q: Vec<f64> = clipped_quantile_grid(grid, eps).collect();
    let v: Vec<f64> = q.iter().map(|&q| dist.quantile(q)).collect();
    let mut h = Vec::with_capacity(grid);
    for (&qj, &vj) in q.iter().zip(&v) {
        let t = theta(vj);
        if !t.is_finite() {
            return Err(Error::Numeric { quantile: qj });
        }
        h.push(t);
    }

    let mut big_h = vec![0.0; grid];
    for j in 1..grid {
        big_h[j] = big_h[j - 1] + 0.5 * (h[j - 1] + h[j]) * (q[j] - q[j - 1]);
    }

    let points: Vec<(f64, f64)> = q.iter().copied().zip(big_h.iter().copied()).collect();
    let hull = lower_convex_hull(&points)?;

    let mut big_g = big_h.clone();
    for w in hull.windows(2) {
        let (a, b) = (w[0], w[1]);
        let slope = (big_h[b] - big_h[a]) / (q[b] - q[a]);
        for j in a + 1..b {
            big_g[j] = (big_h[a] + slope * (q[j] - q[a])).min(big_h[j]);
        }
    }

    let scale = big_h.iter().fold(0.0f64, |m, x| m.max(x.abs())).max(f64::MIN_POSITIVE);
    let threshold = IRONING_THRESHOLD * scale;
    let flagged: Vec<bool> = big_h.iter().zip(&big_g).map(|(h, g)| h - g > threshold).collect();

    // Hull segments: (start index, end index, slope, bridges flagged points).
    let segments: Vec<(usize, usize, f64, bool)> = hull
        .windows(2)
        .map(|w| {
            let (a, b) = (w[0], w[1]);
            let slope = (big_h[b] - big_h[a]) / (q[b] - q[a]);
            (a, b, slope, flagged[a + 1..b].iter().any(|&f| f))
        })
        .collect();

    let intervals = segments
        .iter()
        .filter(|s| s.3)
        .map(|&(a, b, slope, _)| IronedInterval {
            q_lo: q[a],
            q_hi: q[b],
            v_lo: v[a],
            v_hi: v[b],
            level: slope,
        })
        .collect();

    let last = grid - 1;
    let mut pieces = Vec::new();
    let mut i = 0;
    while i < segments.len() {
        let base = segments[i].2;
        let mut j = i + 1;
        while j < segments.len()
            && (segments[j].2 - base).abs() <= SLOPE_MERGE_TOL * base.abs().max(1.0)
        {
            j += 1;
        }
        let (begin, end) = (segments[i].0, segments[j - 1].1);
        let ironed = segments[i..j].iter().any(|s| s.3);
        if ironed || end - begin >= 2 {
            let mut piece = FlatPiece {
                v_lo: if begin == 0 { support.lo } else { v[begin] },
                v_hi: if end == last { support.hi } else { v[end] },
                level: (big_h[end] - big_h[begin]) / (q[end] - q[begin]),
                ironed,
            };
            if ironed {
                refine_piece(&mut piece, &dist, &theta);
            } else {
                piece.level = h[(begin + end) / 2];
            }
            pieces.push(piece);
        }
        i = j;
    }
    snap_piece_ends(&mut pieces, support, &theta, v[last]);

    Ok(IronedVirtual {
        dist,
        q,
        v,
        h,
        big_h,
        big_g,
        hull,
        flagged,
        intervals,
        pieces,
    })
}

/// Replaces the grid estimate of an ironed piece by the exact solution of
/// `int_lo^hi (1 - F) dv = c (F(hi) - F(lo))` with `theta(lo) = theta(hi) = c`
/// at interior ends. The update `c <- int (1 - F) / mass` is a Newton step,
/// since the end terms of the derivative vanish where `theta = c`.
fn refine_piece(piece: &mut FlatPiece, dist: &ValueDistribution, theta: &impl Fn(f64) -> f64) {
    const MAX_SHIFT: f64 = 1e-3;
    let support = dist.support();
    let (lo_fixed, hi_fixed) = (piece.v_lo <= support.lo, piece.v_hi >= support.hi);
    let ends = |c: f64| -> Option<(f64, f64)> {
        let lo = if lo_fixed { support.lo } else { upward_crossing(theta, c, piece.v_lo, support)? };
        let hi = if hi_fixed { support.hi } else { upward_crossing(theta, c, piece.v_hi, support)? };
        (hi > lo).then_some((lo, hi))
    };
    let mut c = piece.level;
    for _ in 0..60 {
        let Some((lo, hi)) = ends(c) else { return };
        let mass = dist.survival(lo) - dist.survival(hi);
        if mass.is_nan() || mass <= 0.0 {
            return;
        }
        let next = dist.survival_integral(lo, hi) / mass;
        let settled = (next - c).abs() <= 4.0 * f64::EPSILON * c.abs().max(1.0);
        c = next;
        if settled {
            break;
        }
    }
    if (c - piece.level).abs() > MAX_SHIFT * piece.level.abs().max(1.0) {
        return;
    }
    if let Some((lo, hi)) = ends(c) {
        *piece = FlatPiece { v_lo: lo, v_hi: hi, level: c, ironed: true };
    }
}

/// Point near `near` where `theta` crosses `c` from below.
fn upward_crossing(theta: &impl Fn(f64) -> f64, c: f64, near: f64, support: Support) -> Option<f64> {
    let scale = near.abs().max(1.0);
    let mut h = 1e-6 * scale;
    while h <= 0.05 * scale {
        let a = (near - h).max(support.lo);
        let b = (near + h).min(support.hi);
        if theta(a) < c && theta(b) >= c {
            let (mut a, mut b) = (a, b);
            for _ in 0..200 {
                let mid = 0.5 * (a + b);
                if mid <= a || mid >= b {
                    break;
                }
                if theta(mid) < c {
                    a = mid;
                } else {
                    b = mid;
                }
            }
            return Some(b);
        }
        h *= 2.0;
    }
    None
}

/// Widens each flat piece over the neighbouring stretch where `theta` is
/// still on the wrong side of the piece's level, so that `phibar` is monotone
/// and each level set is exactly the piece.
fn snap_piece_ends(pieces: &mut [FlatPiece], support: Support, theta: &impl Fn(f64) -> f64, grid_top: f64) {
    const STEPS: usize = 200;
    for idx in 0..pieces.len() {
        let level = pieces[idx].level;
        let left_limit = if idx == 0 { support.lo } else { pieces[idx - 1].v_hi };
        let lo = pieces[idx].v_lo;
        if lo > left_limit && theta(lo) >= level {
            if theta(left_limit) >= level {
                pieces[idx].v_lo = left_limit;
            } else {
                let (mut a, mut b) = (left_limit, lo);
                for _ in 0..STEPS {
                    let mid = 0.5 * (a + b);
                    if mid <= a || mid >= b {
                        break;
                    }
                    if theta(mid) >= level {
                        b = mid;
                    } else {
                        a = mid;
                    }
                }
                pieces[idx].v_lo = b;
            }
        }

        let hi = pieces[idx].v_hi;
        let right_limit = pieces.get(idx + 1).map_or(support.hi, |p| p.v_lo);
        if hi < right_limit && theta(hi) <= level {
            let mut top = right_limit;
            if !top.is_finite() {
                top = grid_top.max(hi);
                while theta(top) <= level && top.is_finite() {
                    top *= 2.0;
                }
            }
            if theta(top) <= level {
                pieces[idx].v_hi = right_limit;
            } else {
                let (mut a, mut b) = (hi, top);
                for _ in 0..STEPS {
                    let mid = 0.5 * (a + b);
                    if mid <= a || mid >= b {
                        break;
                    }
                    if theta(mid) <= level {
                        a = mid;
                    } else {
                        b = mid;
                    }
                }
                pieces[idx].v_hi = a;
            }
        }
    }
}

impl IronedVirtual {
    pub fn distribution(&self) -> &ValueDistribution {
        &self.dist
    }

    pub fn support(&self) -> Support {
        self.dist.support()
    }

    pub fn grid_len(&self) -> usize {
        self.q.len()
    }

    pub fn quantiles(&self) -> &[f64] {
        &self.q
    }

    pub fn h_values(&self) -> &[f64] {
        &self.h
    }

    pub fn h_integral(&self) -> &[f64] {
        &self.big_h
    }

    pub fn hull_values(&self) -> &[f64] {
        &self.big_g
    }

    pub fn hull_vertices(&self) -> &[usize] {
        &self.hull
    }

    pub fn ironed_intervals(&self) -> &[IronedInterval] {
        &self.intervals
    }

    pub fn flat_pieces(&self) -> &[FlatPiece] {
        &self.pieces
    }

    /// True when one flat piece covers the whole support.
    pub fn is_constant(&self) -> bool {
        let s = self.support();
        matches!(self.pieces.as_slice(), [p] if p.v_lo <= s.lo && p.v_hi >= s.hi)
    }

    /// Derivative of the hull at quantile `q`, right-continuous.
    pub fn slope_at_quantile(&self, q: f64) -> f64 {
        let seg = self.hull.partition_point(|&j| self.q[j] <= q).clamp(1, self.hull.len() - 1);
        let (a, b) = (self.hull[seg - 1], self.hull[seg]);
        (self.big_h[b] - self.big_h[a]) / (self.q[b] - self.q[a])
    }

    fn piece_at(&self, v: f64) -> Option<&FlatPiece> {
        let idx = self.pieces.partition_point(|p| p.v_lo <= v);
        idx.checked_sub(1).map(|i| &self.pieces[i]).filter(|p| v <= p.v_hi)
    }

    fn check(&self, v: f64) -> Result<()> {
        let s = self.support();
        if v.is_finite() && s.contains(v) {
            Ok(())
        } else {
            Err(Error::Domain { value: v, lo: s.lo, hi: s.hi })
        }
    }

    /// The ironed virtual valuation `phibar(v)`.
    pub fn ironed_value(&self, v: f64) -> Result<f64> {
        self.check(v)?;
        Ok(self.value_unchecked(v))
    }

    pub(crate) fn value_unchecked(&self, v: f64) -> f64 {
        match self.piece_at(v) {
            Some(p) => p.level,
            None => self.dist.theta(v),
        }
    }

    /// Level set of `phibar(v)`: where `phibar` first reaches and first
    /// exceeds that level.
    pub fn level_set(&self, v: f64) -> Result<LevelSet> {
        self.check(v)?;
        Ok(match self.piece_at(v) {
            Some(p) => LevelSet { lo: p.v_lo, hi: p.v_hi },
            None => LevelSet { lo: v, hi: v },
        })
    }

    pub fn rows(&self) -> Vec<IroningRow> {
        (0..self.q.len())
            .map(|j| IroningRow {
                q: self.q[j],
                v: self.v[j],
                theta: self.h[j],
                big_h: self.big_h[j],
                big_g: self.big_g[j],
                phibar: self.value_unchecked(self.v[j]),
                ironed_flag: self.flagged[j] as u8,
            })
            .collect()
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for row in self.rows() {
            w.serialize(row)?;
        }
        w.flush()?;
        Ok(())
    }
}

impl IronedValuation for IronedVirtual {
    fn ironed_value(&self, v: f64) -> Result<f64> {
        IronedVirtual::ironed_value(self, v)
    }
}
