//! Coordinate boxes over pairs of marginals and the extreme points of their
//! intersection with the simplex.

use num_traits::{One, Zero};

use super::interval::Interval;
use super::mp::Enclosure;
use crate::error::{Error, Result};
use crate::rational::{self, Rational};

/// `Q_X × Q_Y` with `lx ≤ Q_X ≤ ux` and `ly ≤ Q_Y ≤ uy`.
///
/// Bounds are dyadic rationals held exactly in `f64`; bisection at the
/// midpoint keeps them dyadic.
#[derive(Clone, Debug, PartialEq)]
pub struct ProductBox {
    lx: Vec<f64>,
    ux: Vec<f64>,
    ly: Vec<f64>,
    uy: Vec<f64>,
}

/// Which marginal a box coordinate belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Axis {
    X(usize),
    Y(usize),
}

impl ProductBox {
    pub fn new(lx: Vec<f64>, ux: Vec<f64>, ly: Vec<f64>, uy: Vec<f64>) -> Result<Self> {
        if lx.len() != ux.len() || ly.len() != uy.len() || lx.is_empty() || ly.is_empty() {
            return Err(Error::invalid(
                "box bound vectors have inconsistent lengths",
            ));
        }
        let ok = |l: &[f64], u: &[f64]| {
            l.iter()
                .zip(u)
                .all(|(&a, &b)| a.is_finite() && b.is_finite() && 0.0 <= a && a <= b && b <= 1.0)
        };
        if !ok(&lx, &ux) || !ok(&ly, &uy) {
            return Err(Error::invalid("box bounds must satisfy 0 <= l <= u <= 1"));
        }
        Ok(Self { lx, ux, ly, uy })
    }

    /// `[0, 1]` in every coordinate.
    pub fn full(rows: usize, cols: usize) -> Self {
        Self {
            lx: vec![0.0; rows],
            ux: vec![1.0; rows],
            ly: vec![0.0; cols],
            uy: vec![1.0; cols],
        }
    }

    pub fn rows(&self) -> usize {
        self.lx.len()
    }

    pub fn cols(&self) -> usize {
        self.ly.len()
    }

    pub fn coordinate_count(&self) -> usize {
        self.rows() + self.cols()
    }

    pub fn axis(&self, k: usize) -> Axis {
        if k < self.rows() {
            Axis::X(k)
        } else {
            Axis::Y(k - self.rows())
        }
    }

    pub fn bounds(&self, k: usize) -> (f64, f64) {
        match self.axis(k) {
            Axis::X(i) => (self.lx[i], self.ux[i]),
            Axis::Y(j) => (self.ly[j], self.uy[j]),
        }
    }

    pub fn x_bounds(&self) -> (&[f64], &[f64]) {
        (&self.lx, &self.ux)
    }

    pub fn y_bounds(&self) -> (&[f64], &[f64]) {
        (&self.ly, &self.uy)
    }

    /// True when one of the marginal boxes misses the simplex.
    pub fn is_empty(&self) -> bool {
        marginal_is_empty(&self.lx, &self.ux) || marginal_is_empty(&self.ly, &self.uy)
    }

    /// Cells `(x, y)` where some member of the box puts positive mass, in
    /// row-major order. Elsewhere every `Q_X(x)Q_Y(y)` in the box is zero.
    pub fn active_cells(&self) -> Vec<bool> {
        let ax = active(&self.lx, &self.ux);
        let ay = active(&self.ly, &self.uy);
        ax.iter()
            .flat_map(|&a| ay.iter().map(move |&b| a && b))
            .collect()
    }

    /// Width of coordinate `k` after clipping against the simplex: the range of
    /// `Q(k)` actually attained inside the box.
    pub fn effective_width(&self, k: usize) -> f64 {
        let (lo, hi) = self.effective_bounds(k);
        (hi - lo).max(0.0)
    }

    /// Range of coordinate `k` after clipping against the other bounds.
    pub fn effective_bounds(&self, k: usize) -> (f64, f64) {
        let (l, u, i) = match self.axis(k) {
            Axis::X(i) => (&self.lx, &self.ux, i),
            Axis::Y(j) => (&self.ly, &self.uy, j),
        };
        clipped(l, u, i)
    }

    /// `√hi − √lo` over the effective range of coordinate `k`.
    ///
    /// Bounds lose the most where a coordinate approaches zero, since `t^{1−α}`
    /// has unbounded slope there; measuring widths on the square-root scale
    /// splits those coordinates first.
    pub fn sqrt_width(&self, k: usize) -> f64 {
        let (lo, hi) = self.effective_bounds(k);
        if hi <= lo {
            0.0
        } else {
            hi.sqrt() - lo.max(0.0).sqrt()
        }
    }

    /// Coordinate to bisect next: the largest [`sqrt_width`](Self::sqrt_width),
    /// lowest index on ties.
    pub fn split_coordinate(&self) -> usize {
        let mut best = 0;
        let mut best_w = f64::NEG_INFINITY;
        for k in 0..self.coordinate_count() {
            let w = self.sqrt_width(k);
            if w > best_w {
                best = k;
                best_w = w;
            }
        }
        best
    }

    /// Bisect coordinate `k` at its midpoint.
    pub fn split(&self, k: usize) -> (ProductBox, ProductBox) {
        let (l, u) = self.bounds(k);
        let mid = 0.5 * (l + u);
        debug_assert!(l < mid && mid < u, "coordinate {k} cannot be bisected");
        let mut lower = self.clone();
        let mut upper = self.clone();
        match self.axis(k) {
            Axis::X(i) => {
                lower.ux[i] = mid;
                upper.lx[i] = mid;
            }
            Axis::Y(j) => {
                lower.uy[j] = mid;
                upper.ly[j] = mid;
            }
        }
        (lower, upper)
    }

    /// A point of the box on the simplex: `l + t(u − l)` per marginal.
    pub fn center(&self) -> Option<(Vec<f64>, Vec<f64>)> {
        Some((
            interior_point(&self.lx, &self.ux)?,
            interior_point(&self.ly, &self.uy)?,
        ))
    }

    /// Exact rational bounds, in the order `lx, ux, ly, uy`.
    pub fn to_rationals(&self) -> [Vec<Rational>; 4] {
        let conv = |v: &[f64]| v.iter().map(|&x| rational::from_f64_exact(x)).collect();
        [
            conv(&self.lx),
            conv(&self.ux),
            conv(&self.ly),
            conv(&self.uy),
        ]
    }

    /// Float approximations of the extreme points, for heuristics.
    pub fn extreme_points_f64(&self) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
        let (xs, ys) = self.extreme_enclosures::<Interval>(53);
        let flat = |pts: Vec<Vec<Interval>>| {
            pts.into_iter()
                .map(|q| q.iter().map(|v| v.lo().max(0.0)).collect())
                .collect()
        };
        (flat(xs), flat(ys))
    }

    /// Extreme points of both marginal regions as enclosures.
    pub(crate) fn extreme_enclosures<E: Enclosure>(
        &self,
        bits: usize,
    ) -> (Vec<Vec<E>>, Vec<Vec<E>>) {
        (
            extreme_enclosures(&self.lx, &self.ux, bits),
            extreme_enclosures(&self.ly, &self.uy, bits),
        )
    }
}

fn marginal_is_empty(l: &[f64], u: &[f64]) -> bool {
    let sum = |v: &[f64]| {
        v.iter()
            .fold(Interval::ZERO, |acc, &x| acc.add(&Interval::point(x)))
    };
    let sl = sum(l);
    let su = sum(u);
    if sl.lo() > 1.0 || su.hi() < 1.0 {
        return true;
    }
    if sl.hi() <= 1.0 && su.lo() >= 1.0 {
        return false;
    }
    let exact = |v: &[f64]| {
        v.iter()
            .map(|&x| rational::from_f64_exact(x))
            .sum::<Rational>()
    };
    exact(l) > Rational::one() || exact(u) < Rational::one()
}

/// Coordinate `i` can be positive iff `u_i > 0` and the other lower bounds
/// leave room, i.e. `Σ_{j≠i} l_j < 1`.
fn active(l: &[f64], u: &[f64]) -> Vec<bool> {
    (0..l.len())
        .map(|i| {
            if u[i] <= 0.0 {
                return false;
            }
            let others = l.iter().enumerate().filter(|&(j, _)| j != i);
            let s = others
                .clone()
                .fold(Interval::ZERO, |acc, (_, &x)| acc.add(&Interval::point(x)));
            if s.hi() < 1.0 {
                true
            } else if s.lo() >= 1.0 {
                false
            } else {
                others
                    .map(|(_, &x)| rational::from_f64_exact(x))
                    .sum::<Rational>()
                    < Rational::one()
            }
        })
        .collect()
}

fn clipped(l: &[f64], u: &[f64], i: usize) -> (f64, f64) {
    let others_l: f64 = l
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != i)
        .map(|(_, v)| v)
        .sum();
    let others_u: f64 = u
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != i)
        .map(|(_, v)| v)
        .sum();
    (l[i].max(1.0 - others_u), u[i].min(1.0 - others_l))
}

fn interior_point(l: &[f64], u: &[f64]) -> Option<Vec<f64>> {
    let sl: f64 = l.iter().sum();
    let span: f64 = l.iter().zip(u).map(|(a, b)| b - a).sum();
    if sl > 1.0 + 1e-15 || sl + span < 1.0 - 1e-15 {
        return None;
    }
    let t = if span > 0.0 {
        ((1.0 - sl) / span).clamp(0.0, 1.0)
    } else {
        0.0
    };
    Some(l.iter().zip(u).map(|(a, b)| a + t * (b - a)).collect())
}

/// Candidate vertices: all coordinates but one pinned at a bound, the free one
/// set by the sum constraint. Each entry is the pinned mask and free index.
fn vertex_patterns(m: usize) -> impl Iterator<Item = (usize, u32)> {
    (0..m).flat_map(move |free| (0..1u32 << (m - 1)).map(move |mask| (free, mask)))
}

fn pinned_value<T: Clone>(l: &[T], u: &[T], free: usize, mask: u32, j: usize) -> T {
    let bit = if j < free { j } else { j - 1 };
    if mask >> bit & 1 == 1 {
        u[j].clone()
    } else {
        l[j].clone()
    }
}

/// Exact extreme points of `{q : l ≤ q ≤ u, Σ q = 1}`, without duplicates.
pub fn box_extreme_points(l: &[Rational], u: &[Rational]) -> Result<Vec<Vec<Rational>>> {
    if l.len() != u.len() || l.is_empty() {
        return Err(Error::invalid(
            "bound vectors must be nonempty and of equal length",
        ));
    }
    if l.iter().zip(u).any(|(a, b)| a > b) {
        return Err(Error::EmptyRegion(
            "some lower bound exceeds its upper bound".into(),
        ));
    }
    let one = Rational::one();
    if l.iter().sum::<Rational>() > one || u.iter().sum::<Rational>() < one {
        return Err(Error::EmptyRegion("box does not meet the simplex".into()));
    }
    let m = l.len();
    let mut points: Vec<Vec<Rational>> = Vec::new();
    for (free, mask) in vertex_patterns(m) {
        let mut q: Vec<Rational> = (0..m)
            .map(|j| {
                if j == free {
                    Rational::zero()
                } else {
                    pinned_value(l, u, free, mask, j)
                }
            })
            .collect();
        let rest: Rational = q.iter().sum();
        let v = &one - rest;
        if v < l[free] || v > u[free] {
            continue;
        }
        q[free] = v;
        if !points.contains(&q) {
            points.push(q);
        }
    }
    Ok(points)
}

fn extreme_enclosures<E: Enclosure>(l: &[f64], u: &[f64], bits: usize) -> Vec<Vec<E>> {
    let m = l.len();
    let mut keys: Vec<Vec<f64>> = Vec::new();
    let mut out = Vec::new();
    for (free, mask) in vertex_patterns(m) {
        let pinned: Vec<f64> = (0..m)
            .map(|j| {
                if j == free {
                    0.0
                } else {
                    pinned_value(l, u, free, mask, j)
                }
            })
            .collect();
        let rest = pinned
            .iter()
            .fold(Interval::ZERO, |acc, &x| acc.add(&Interval::point(x)));
        let v = Interval::ONE.sub(&rest);
        if v.hi() < l[free] || v.lo() > u[free] {
            continue;
        }
        let mut key = pinned.clone();
        key[free] = v.lo();
        key.push(v.hi() - v.lo());
        if keys.contains(&key) {
            continue;
        }
        keys.push(key);
        let point = (0..m)
            .map(|j| {
                if j != free {
                    return E::from_f64(pinned[j], bits);
                }
                if v.lo() == v.hi() {
                    return E::from_f64(v.lo(), bits);
                }
                // The free coordinate is 1 − Σ pinned; when that is not an
                // f64 recompute it exactly and clip to the bounds, which can
                // only add points and so keeps minima sound.
                let exact = Rational::one()
                    - pinned
                        .iter()
                        .enumerate()
                        .filter(|&(j, _)| j != free)
                        .map(|(_, &x)| rational::from_f64_exact(x))
                        .sum::<Rational>();
                let lo = rational::from_f64_exact(l[free]).max(exact.clone());
                let hi = rational::from_f64_exact(u[free]).min(exact);
                let mid = if lo <= hi { lo } else { hi };
                E::from_rational(&mid, bits)
            })
            .collect();
        out.push(point);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::parse_rational;

    fn rats(v: &[&str]) -> Vec<Rational> {
        v.iter().map(|s| parse_rational(s).unwrap()).collect()
    }

    fn sorted(mut v: Vec<Vec<Rational>>) -> Vec<Vec<Rational>> {
        v.sort();
        v
    }

    #[test]
    fn full_box_gives_vertices() {
        let pts = box_extreme_points(&rats(&["0", "0", "0"]), &rats(&["1", "1", "1"])).unwrap();
        assert_eq!(
            sorted(pts),
            sorted(vec![
                rats(&["1", "0", "0"]),
                rats(&["0", "1", "0"]),
                rats(&["0", "0", "1"])
            ])
        );
    }

    #[test]
    fn symmetric_band() {
        let pts = box_extreme_points(&rats(&["0.2"; 3]), &rats(&["0.6"; 3])).unwrap();
        let expected = vec![
            rats(&["0.6", "0.2", "0.2"]),
            rats(&["0.2", "0.6", "0.2"]),
            rats(&["0.2", "0.2", "0.6"]),
        ];
        assert_eq!(sorted(pts), sorted(expected));
    }

    #[test]
    fn capped_first_coordinate() {
        let pts = box_extreme_points(&rats(&["0", "0", "0"]), &rats(&["0.5", "1", "1"])).unwrap();
        let expected = vec![
            rats(&["0.5", "0.5", "0"]),
            rats(&["0.5", "0", "0.5"]),
            rats(&["0", "1", "0"]),
            rats(&["0", "0", "1"]),
        ];
        assert_eq!(sorted(pts), sorted(expected));
    }

    #[test]
    fn empty_region_is_an_error() {
        let err = box_extreme_points(&rats(&["0.5", "0.5", "0.5"]), &rats(&["1", "1", "1"]));
        assert!(matches!(err, Err(Error::EmptyRegion(_))));
    }

    #[test]
    fn split_and_widths() {
        let b = ProductBox::full(3, 3);
        assert_eq!(b.split_coordinate(), 0);
        // [0, 1/4] outranks [1/2, 1] on the square-root scale.
        let near_zero =
            ProductBox::new(vec![0.0, 0.5], vec![0.25, 1.0], vec![0.0; 2], vec![1.0; 2]).unwrap();
        assert_eq!(near_zero.sqrt_width(0), 0.5);
        assert!(near_zero.sqrt_width(1) < 0.5);
        let (lo, hi) = b.split(0);
        assert_eq!(lo.bounds(0), (0.0, 0.5));
        assert_eq!(hi.bounds(0), (0.5, 1.0));
        let (_, corner) = hi.split(1);
        // Q_X(0) ≥ 0.5 and Q_X(1) ≥ 0.5 leaves only Q_X = (0.5, 0.5, 0).
        assert!(!corner.is_empty());
        assert_eq!(corner.effective_width(2), 0.0);
        let (_, beyond) = corner.split(0);
        assert!(beyond.is_empty());
    }

    #[test]
    fn enclosures_match_exact_points() {
        let b = ProductBox::new(vec![0.25; 3], vec![0.5; 3], vec![0.0; 3], vec![1.0; 3]).unwrap();
        let (xs, ys) = b.extreme_enclosures::<Interval>(53);
        assert_eq!(xs.len(), 3);
        assert_eq!(ys.len(), 3);
        for p in &xs {
            let s = p.iter().fold(Interval::ZERO, |a, q| a.add(q));
            assert!(s.contains(1.0));
        }
    }
}
