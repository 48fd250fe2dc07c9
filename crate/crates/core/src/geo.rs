//! Locations, distance metrics, orderings and preceding-only neighbor search.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Earth radius in kilometers, used when a great-circle metric is requested
/// without an explicit radius.
pub const EARTH_RADIUS_KM: f64 = 6371.0;

/// A point in the plane. For great-circle data `x` is longitude and `y` is
/// latitude, both in degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Location {
    pub x: f64,
    pub y: f64,
}

impl Location {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub enum Metric {
    #[default]
    Euclidean,
    GreatCircle { radius: f64 },
}

impl Metric {
    pub fn great_circle() -> Self {
        Metric::GreatCircle {
            radius: EARTH_RADIUS_KM,
        }
    }

    /// Distance between two locations that have already been validated for
    /// this metric.
    #[inline]
    pub fn distance(&self, a: &Location, b: &Location) -> f64 {
        match *self {
            Metric::Euclidean => euclidean_distance(a, b),
            Metric::GreatCircle { radius } => haversine(a, b, radius),
        }
    }

    pub fn validate(&self, loc: &Location) -> Result<()> {
        if !loc.x.is_finite() || !loc.y.is_finite() {
            return Err(Error::Domain(format!(
                "non-finite coordinate ({}, {})",
                loc.x, loc.y
            )));
        }
        if let Metric::GreatCircle { radius } = *self {
            if !(radius > 0.0) || !radius.is_finite() {
                return Err(Error::Domain(format!("radius must be positive, got {radius}")));
            }
            if !(-90.0..=90.0).contains(&loc.y) {
                return Err(Error::Domain(format!(
                    "latitude {} outside [-90, 90]",
                    loc.y
                )));
            }
        }
        Ok(())
    }
}

#[inline]
pub fn euclidean_distance(a: &Location, b: &Location) -> f64 {
    let dx = a.x - b.x;
    let dy = a.y - b.y;
    (dx * dx + dy * dy).sqrt()
}

/// Haversine great-circle distance; coordinates in degrees.
pub fn great_circle_distance(a: &Location, b: &Location, radius: f64) -> Result<f64> {
    let metric = Metric::GreatCircle { radius };
    metric.validate(a)?;
    metric.validate(b)?;
    Ok(haversine(a, b, radius))
}

#[inline]
fn hav(theta: f64) -> f64 {
    let s = (0.5 * theta).sin();
    s * s
}

#[inline]
fn haversine(a: &Location, b: &Location, radius: f64) -> f64 {
    let (lon1, lat1) = (a.x.to_radians(), a.y.to_radians());
    let (lon2, lat2) = (b.x.to_radians(), b.y.to_radians());
    let h = hav(lat2 - lat1) + lat1.cos() * lat2.cos() * hav(lon2 - lon1);
    2.0 * radius * h.clamp(0.0, 1.0).sqrt().asin()
}

/// Locations with one observation each.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    locations: Vec<Location>,
    observations: Vec<f64>,
    metric: Metric,
}

impl Dataset {
    pub fn new(locations: Vec<Location>, observations: Vec<f64>, metric: Metric) -> Result<Self> {
        if locations.is_empty() {
            return Err(Error::Size("dataset must contain at least one location".into()));
        }
        if locations.len() != observations.len() {
            return Err(Error::Size(format!(
                "{} locations but {} observations",
                locations.len(),
                observations.len()
            )));
        }
        for loc in &locations {
            metric.validate(loc)?;
        }
        if let Some(i) = observations.iter().position(|v| !v.is_finite()) {
            return Err(Error::Domain(format!("observation {i} is not finite")));
        }
        Ok(Self {
            locations,
            observations,
            metric,
        })
    }

    /// A dataset whose observations are all zero.
    pub fn zeros(locations: Vec<Location>, metric: Metric) -> Result<Self> {
        let n = locations.len();
        Self::new(locations, vec![0.0; n], metric)
    }

    pub fn len(&self) -> usize {
        self.locations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.locations.is_empty()
    }

    pub fn locations(&self) -> &[Location] {
        &self.locations
    }

    pub fn observations(&self) -> &[f64] {
        &self.observations
    }

    pub fn metric(&self) -> Metric {
        self.metric
    }

    /// Same locations, new observations.
    pub fn with_observations(&self, observations: Vec<f64>) -> Result<Self> {
        Self::new(self.locations.clone(), observations, self.metric)
    }

    /// Reorder so that position `k` holds original entry `perm.order()[k]`.
    pub fn permuted(&self, perm: &Permutation) -> Result<Self> {
        if perm.len() != self.len() {
            return Err(Error::Size(format!(
                "permutation of length {} applied to dataset of size {}",
                perm.len(),
                self.len()
            )));
        }
        Ok(Self {
            locations: perm.apply(&self.locations),
            observations: perm.apply(&self.observations),
            metric: self.metric,
        })
    }

    pub fn distance(&self, i: usize, j: usize) -> f64 {
        self.metric.distance(&self.locations[i], &self.locations[j])
    }
}

/// Maps new position to original index.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Permutation {
    order: Vec<usize>,
}

impl Permutation {
    pub fn identity(n: usize) -> Self {
        Self {
            order: (0..n).collect(),
        }
    }

    pub fn from_vec(order: Vec<usize>) -> Result<Self> {
        let mut seen = vec![false; order.len()];
        for &i in &order {
            if i >= order.len() || seen[i] {
                return Err(Error::Domain(format!(
                    "not a permutation of 0..{}: index {i} repeated or out of range",
                    order.len()
                )));
            }
            seen[i] = true;
        }
        Ok(Self { order })
    }

    pub fn order(&self) -> &[usize] {
        &self.order
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    pub fn apply<T: Clone>(&self, items: &[T]) -> Vec<T> {
        self.order.iter().map(|&i| items[i].clone()).collect()
    }

    /// Position of each original index.
    pub fn inverse(&self) -> Permutation {
        let mut inv = vec![0; self.order.len()];
        for (pos, &orig) in self.order.iter().enumerate() {
            inv[orig] = pos;
        }
        Permutation { order: inv }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Ordering {
    Random,
    Morton,
}

impl Ordering {
    pub fn name(&self) -> &'static str {
        match self {
            Ordering::Random => "random",
            Ordering::Morton => "morton",
        }
    }

    pub fn permutation(&self, locations: &[Location], seed: u64) -> Permutation {
        match self {
            Ordering::Random => random_ordering(locations.len(), seed),
            Ordering::Morton => morton_ordering(locations),
        }
    }
}

impl std::str::FromStr for Ordering {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "random" => Ok(Ordering::Random),
            "morton" => Ok(Ordering::Morton),
            other => Err(Error::Domain(format!("unknown ordering {other:?}"))),
        }
    }
}

/// Fisher-Yates shuffle driven by ChaCha8 seeded from `seed`.
pub fn random_ordering(n: usize, seed: u64) -> Permutation {
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);
    Permutation { order }
}

const MORTON_BITS: u32 = 16;

fn quantize(v: f64, lo: f64, hi: f64) -> u32 {
    let span = hi - lo;
    if !(span > 0.0) {
        return 0;
    }
    let max = ((1u32 << MORTON_BITS) - 1) as f64;
    let q = ((v - lo) / span * max).round();
    q.clamp(0.0, max) as u32
}

/// Spread the low 16 bits of `v` so that bit k lands at bit 2k.
fn spread_bits(v: u32) -> u32 {
    let mut x = v & 0xFFFF;
    x = (x | (x << 8)) & 0x00FF_00FF;
    x = (x | (x << 4)) & 0x0F0F_0F0F;
    x = (x | (x << 2)) & 0x3333_3333;
    x = (x | (x << 1)) & 0x5555_5555;
    x
}

/// Z-order code with x in the even bit positions.
pub fn morton_code(qx: u32, qy: u32) -> u32 {
    spread_bits(qx) | (spread_bits(qy) << 1)
}

/// Sort by Morton code over the bounding box of `locations`; ties keep the
/// original order.
pub fn morton_ordering(locations: &[Location]) -> Permutation {
    let (mut xlo, mut xhi) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut ylo, mut yhi) = (f64::INFINITY, f64::NEG_INFINITY);
    for l in locations {
        xlo = xlo.min(l.x);
        xhi = xhi.max(l.x);
        ylo = ylo.min(l.y);
        yhi = yhi.max(l.y);
    }
    let codes: Vec<u32> = locations
        .iter()
        .map(|l| morton_code(quantize(l.x, xlo, xhi), quantize(l.y, ylo, yhi)))
        .collect();
    let mut order: Vec<usize> = (0..locations.len()).collect();
    order.sort_by_key(|&i| codes[i]);
    Permutation { order }
}

/// The `m` nearest predecessors of every ordered index `i >= m` (0-based).
///
/// Row `i - m` holds the neighbors of ordered index `i`, sorted by
/// increasing distance with ties broken by the smaller index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NeighborTable {
    m: usize,
    n: usize,
    neighbors: Vec<usize>,
}

impl NeighborTable {
    pub fn from_rows(n: usize, m: usize, rows: Vec<Vec<usize>>) -> Result<Self> {
        if m == 0 || n <= m {
            return Err(Error::Size(format!("need n > m >= 1, got n={n}, m={m}")));
        }
        if rows.len() != n - m {
            return Err(Error::Size(format!(
                "expected {} neighbor rows, got {}",
                n - m,
                rows.len()
            )));
        }
        let mut neighbors = Vec::with_capacity((n - m) * m);
        for (r, row) in rows.iter().enumerate() {
            let target = r + m;
            if row.len() != m {
                return Err(Error::Size(format!(
                    "row for target {target} has {} entries, expected {m}",
                    row.len()
                )));
            }
            let mut sorted = row.clone();
            sorted.sort_unstable();
            sorted.dedup();
            if sorted.len() != m || sorted.last().is_some_and(|&j| j >= target) {
                return Err(Error::Domain(format!(
                    "row for target {target} must list {m} distinct predecessors"
                )));
            }
            neighbors.extend_from_slice(row);
        }
        Ok(Self { m, n, neighbors })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Neighbors of ordered index `target` (requires `m <= target < n`).
    pub fn neighbors_of(&self, target: usize) -> &[usize] {
        assert!(
            target >= self.m && target < self.n,
            "target {target} has no neighbor row (m={}, n={})",
            self.m,
            self.n
        );
        let r = target - self.m;
        &self.neighbors[r * self.m..(r + 1) * self.m]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[usize]> {
        self.neighbors.chunks_exact(self.m)
    }
}

/// Bounded candidate list kept sorted by `(distance, index)`.
struct Candidates {
    cap: usize,
    items: Vec<(f64, usize)>,
}

impl Candidates {
    fn new(cap: usize) -> Self {
        Self {
            cap,
            items: Vec::with_capacity(cap + 1),
        }
    }

    fn full(&self) -> bool {
        self.items.len() == self.cap
    }

    fn worst(&self) -> f64 {
        self.items.last().map_or(f64::INFINITY, |c| c.0)
    }

    #[inline]
    fn offer(&mut self, d: f64, j: usize) {
        if self.full() {
            let (wd, wj) = self.items[self.cap - 1];
            if (d, j) >= (wd, wj) {
                return;
            }
        }
        let pos = self
            .items
            .partition_point(|&(cd, cj)| (cd, cj) < (d, j));
        self.items.insert(pos, (d, j));
        self.items.truncate(self.cap);
    }

    fn into_indices(self) -> Vec<usize> {
        self.items.into_iter().map(|(_, j)| j).collect()
    }
}

fn scan_predecessors(ds: &Dataset, target: usize, m: usize) -> Vec<usize> {
    let mut cands = Candidates::new(m);
    for j in 0..target {
        cands.offer(ds.distance(target, j), j);
    }
    cands.into_indices()
}

/// Uniform bucket grid over all points; each bucket lists its points in
/// ascending index order so successors of a target can be cut off early.
struct Grid {
    xlo: f64,
    ylo: f64,
    cell: f64,
    nx: usize,
    ny: usize,
    starts: Vec<usize>,
    members: Vec<usize>,
}

impl Grid {
    fn build(locations: &[Location]) -> Self {
        let n = locations.len();
        let (mut xlo, mut xhi) = (f64::INFINITY, f64::NEG_INFINITY);
        let (mut ylo, mut yhi) = (f64::INFINITY, f64::NEG_INFINITY);
        for l in locations {
            xlo = xlo.min(l.x);
            xhi = xhi.max(l.x);
            ylo = ylo.min(l.y);
            yhi = yhi.max(l.y);
        }
        let (w, h) = (xhi - xlo, yhi - ylo);
        let target_cells = (n / 2).max(1) as f64;
        let extent = w.max(h);
        let cell = if extent > 0.0 {
            let area = if w > 0.0 && h > 0.0 { w * h } else { extent * extent / target_cells };
            (area / target_cells).sqrt().max(extent / 4096.0)
        } else {
            1.0
        };
        let nx = ((w / cell).floor() as usize + 1).max(1);
        let ny = ((h / cell).floor() as usize + 1).max(1);
        let mut grid = Grid {
            xlo,
            ylo,
            cell,
            nx,
            ny,
            starts: vec![0; nx * ny + 1],
            members: vec![0; n],
        };
        let cells: Vec<usize> = locations.iter().map(|l| grid.cell_of(l)).collect();
        for &c in &cells {
            grid.starts[c + 1] += 1;
        }
        for c in 0..nx * ny {
            grid.starts[c + 1] += grid.starts[c];
        }
        let mut fill = grid.starts.clone();
        for (i, &c) in cells.iter().enumerate() {
            grid.members[fill[c]] = i;
            fill[c] += 1;
        }
        grid
    }

    fn coords(&self, l: &Location) -> (usize, usize) {
        let cx = (((l.x - self.xlo) / self.cell).floor().max(0.0) as usize).min(self.nx - 1);
        let cy = (((l.y - self.ylo) / self.cell).floor().max(0.0) as usize).min(self.ny - 1);
        (cx, cy)
    }

    fn cell_of(&self, l: &Location) -> usize {
        let (cx, cy) = self.coords(l);
        cy * self.nx + cx
    }

    fn search(&self, ds: &Dataset, target: usize, m: usize) -> Vec<usize> {
        let locs = ds.locations();
        let p = &locs[target];
        let (cx, cy) = self.coords(p);
        let mut cands = Candidates::new(m);
        let max_ring = self.nx.max(self.ny);
        for ring in 0..=max_ring {
            // Points not yet visited lie outside the block of rings
            // 0..ring, so at least `reach` away from the target.
            if ring > 0 && cands.full() {
                let h = (ring - 1) as f64;
                let left = p.x - (self.xlo + (cx as f64 - h) * self.cell);
                let right = self.xlo + (cx as f64 + h + 1.0) * self.cell - p.x;
                let below = p.y - (self.ylo + (cy as f64 - h) * self.cell);
                let above = self.ylo + (cy as f64 + h + 1.0) * self.cell - p.y;
                let reach = left.min(right).min(below).min(above);
                if cands.worst() < reach * (1.0 - 1e-12) {
                    break;
                }
            }
            let r = ring as isize;
            let (x0, x1) = (cx as isize - r, cx as isize + r);
            let (y0, y1) = (cy as isize - r, cy as isize + r);
            for gy in y0.max(0)..=y1.min(self.ny as isize - 1) {
                let on_edge_row = gy == y0 || gy == y1;
                let step = if on_edge_row { 1 } else { (x1 - x0).max(1) };
                let mut gx = x0;
                while gx <= x1 {
                    if gx >= 0 && gx < self.nx as isize {
                        let c = gy as usize * self.nx + gx as usize;
                        for &j in &self.members[self.starts[c]..self.starts[c + 1]] {
                            if j >= target {
                                break;
                            }
                            cands.offer(ds.metric().distance(p, &locs[j]), j);
                        }
                    }
                    gx += step;
                }
            }
        }
        cands.into_indices()
    }
}

/// For every ordered index `i >= m`, the `m` predecessors closest to it.
///
/// Euclidean data is searched through a bucket grid, great-circle data by a
/// full scan; both return the exact neighbor sets.
pub fn nearest_neighbors(ordered: &Dataset, m: usize) -> Result<NeighborTable> {
    let n = ordered.len();
    if m == 0 || n <= m {
        return Err(Error::Size(format!(
            "nearest neighbors need n > m >= 1, got n={n}, m={m}"
        )));
    }
    let rows: Vec<Vec<usize>> = match ordered.metric() {
        Metric::Euclidean => {
            let grid = Grid::build(ordered.locations());
            (m..n)
                .into_par_iter()
                .map(|i| grid.search(ordered, i, m))
                .collect()
        }
        Metric::GreatCircle { .. } => (m..n)
            .into_par_iter()
            .map(|i| scan_predecessors(ordered, i, m))
            .collect(),
    };
    let mut neighbors = Vec::with_capacity((n - m) * m);
    for row in rows {
        neighbors.extend(row);
    }
    Ok(NeighborTable { m, n, neighbors })
}

/// Plain predecessor scan, usable for any metric.
pub fn nearest_neighbors_scan(ordered: &Dataset, m: usize) -> Result<NeighborTable> {
    let n = ordered.len();
    if m == 0 || n <= m {
        return Err(Error::Size(format!(
            "nearest neighbors need n > m >= 1, got n={n}, m={m}"
        )));
    }
    let rows: Vec<Vec<usize>> = (m..n)
        .into_par_iter()
        .map(|i| scan_predecessors(ordered, i, m))
        .collect();
    let mut neighbors = Vec::with_capacity((n - m) * m);
    for row in rows {
        neighbors.extend(row);
    }
    Ok(NeighborTable { m, n, neighbors })
}

/// The `k` locations of `pool` closest to `query`, ties by smaller index.
pub fn k_nearest(pool: &[Location], metric: Metric, query: &Location, k: usize) -> Vec<usize> {
    let mut cands = Candidates::new(k.min(pool.len()));
    if cands.cap == 0 {
        return Vec::new();
    }
    for (j, l) in pool.iter().enumerate() {
        cands.offer(metric.distance(query, l), j);
    }
    cands.into_indices()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, PI, SQRT_2};

    fn loc(x: f64, y: f64) -> Location {
        Location::new(x, y)
    }

    #[test]
    fn euclidean_examples() {
        assert_eq!(euclidean_distance(&loc(0.0, 0.0), &loc(0.0, 0.0)), 0.0);
        assert_eq!(euclidean_distance(&loc(0.0, 0.0), &loc(3.0, 4.0)), 5.0);
        assert!((euclidean_distance(&loc(1.0, 1.0), &loc(2.0, 2.0)) - SQRT_2).abs() < 1e-15);
    }

    #[test]
    fn great_circle_examples() {
        let o = loc(0.0, 0.0);
        assert_eq!(great_circle_distance(&o, &o, 1.0).unwrap(), 0.0);
        let anti = great_circle_distance(&o, &loc(180.0, 0.0), 1.0).unwrap();
        assert!((anti - PI).abs() < 1e-12);
        let pole = great_circle_distance(&o, &loc(0.0, 90.0), 1.0).unwrap();
        assert!((pole - FRAC_PI_2).abs() < 1e-12);
    }

    #[test]
    fn great_circle_one_degree_on_equator() {
        let d = great_circle_distance(&loc(0.0, 0.0), &loc(1.0, 0.0), EARTH_RADIUS_KM).unwrap();
        assert!((d - EARTH_RADIUS_KM * PI / 180.0).abs() < 1e-9);
    }

    #[test]
    fn great_circle_rejects_bad_latitude() {
        let err = great_circle_distance(&loc(0.0, 91.0), &loc(0.0, 0.0), 1.0).unwrap_err();
        assert!(matches!(err, Error::Domain(_)));
        assert!(great_circle_distance(&loc(0.0, 0.0), &loc(0.0, 0.0), 0.0).is_err());
    }

    #[test]
    fn dataset_validation() {
        assert!(Dataset::new(vec![], vec![], Metric::Euclidean).is_err());
        assert!(Dataset::new(vec![loc(0.0, 0.0)], vec![1.0, 2.0], Metric::Euclidean).is_err());
        assert!(Dataset::new(vec![loc(0.0, 0.0)], vec![f64::NAN], Metric::Euclidean).is_err());
        assert!(Dataset::new(vec![loc(f64::INFINITY, 0.0)], vec![0.0], Metric::Euclidean).is_err());
        assert!(Dataset::new(vec![loc(0.0, -95.0)], vec![0.0], Metric::great_circle()).is_err());
    }

    #[test]
    fn random_ordering_examples() {
        assert_eq!(random_ordering(1, 99).order(), &[0]);
        let a = random_ordering(5, 42);
        let b = random_ordering(5, 42);
        assert_eq!(a, b);
        let mut big = random_ordering(1000, 7).order().to_vec();
        big.sort_unstable();
        assert_eq!(big, (0..1000).collect::<Vec<_>>());
    }

    #[test]
    fn morton_examples() {
        let pts = [loc(0.0, 0.0), loc(1.0, 0.0), loc(0.0, 1.0), loc(1.0, 1.0)];
        assert_eq!(morton_ordering(&pts).order(), &[0, 1, 2, 3]);
        let shuffled = [loc(1.0, 1.0), loc(0.0, 1.0), loc(0.0, 0.0), loc(1.0, 0.0)];
        assert_eq!(morton_ordering(&shuffled).order(), &[2, 3, 1, 0]);
        assert_eq!(morton_ordering(&[loc(3.0, 4.0)]).order(), &[0]);
        let same = vec![loc(0.5, 0.5); 6];
        assert_eq!(morton_ordering(&same).order(), &[0, 1, 2, 3, 4, 5]);
    }

    #[test]
    fn morton_code_bit_layout() {
        assert_eq!(morton_code(1, 0), 1);
        assert_eq!(morton_code(0, 1), 2);
        assert_eq!(morton_code(0xFFFF, 0xFFFF), u32::MAX);
        assert_eq!(morton_code(0b10, 0b01), 0b0110);
    }

    #[test]
    fn morton_degenerate_axis() {
        // All on a vertical line: x quantizes to 0, order follows y.
        let pts = [loc(2.0, 3.0), loc(2.0, 1.0), loc(2.0, 2.0)];
        assert_eq!(morton_ordering(&pts).order(), &[1, 2, 0]);
    }

    #[test]
    fn permutation_validation_and_inverse() {
        assert!(Permutation::from_vec(vec![0, 0, 1]).is_err());
        assert!(Permutation::from_vec(vec![0, 3, 1]).is_err());
        let p = Permutation::from_vec(vec![2, 0, 1]).unwrap();
        let inv = p.inverse();
        assert_eq!(inv.order(), &[1, 2, 0]);
        assert_eq!(p.apply(&['a', 'b', 'c']), vec!['c', 'a', 'b']);
    }

    #[test]
    fn collinear_neighbors() {
        let ds = Dataset::zeros(
            (0..4).map(|i| loc(i as f64, 0.0)).collect(),
            Metric::Euclidean,
        )
        .unwrap();
        let nt = nearest_neighbors(&ds, 2).unwrap();
        assert_eq!(nt.neighbors_of(3), &[2, 1]);
        assert_eq!(nt.neighbors_of(2), &[1, 0]);
    }

    #[test]
    fn forced_neighbor_set() {
        let ds = Dataset::zeros(
            vec![loc(0.3, 0.1), loc(0.9, 0.4), loc(0.2, 0.8), loc(0.5, 0.5)],
            Metric::Euclidean,
        )
        .unwrap();
        let nt = nearest_neighbors(&ds, 3).unwrap();
        let mut row = nt.neighbors_of(3).to_vec();
        row.sort_unstable();
        assert_eq!(row, vec![0, 1, 2]);
    }

    #[test]
    fn ties_prefer_smaller_index() {
        // Target at origin; predecessors 0 and 1 equidistant.
        let ds = Dataset::zeros(
            vec![loc(1.0, 0.0), loc(-1.0, 0.0), loc(0.0, 5.0), loc(0.0, 0.0)],
            Metric::Euclidean,
        )
        .unwrap();
        let nt = nearest_neighbors(&ds, 1).unwrap();
        assert_eq!(nt.neighbors_of(3), &[0]);
    }

    #[test]
    fn size_error() {
        let ds = Dataset::zeros(vec![loc(0.0, 0.0), loc(1.0, 0.0)], Metric::Euclidean).unwrap();
        assert!(matches!(nearest_neighbors(&ds, 2), Err(Error::Size(_))));
        assert!(matches!(nearest_neighbors(&ds, 0), Err(Error::Size(_))));
    }

    #[test]
    fn neighbor_table_rejects_successors() {
        assert!(NeighborTable::from_rows(3, 1, vec![vec![0], vec![2]]).is_err());
        assert!(NeighborTable::from_rows(3, 1, vec![vec![0], vec![1]]).is_ok());
    }
}
