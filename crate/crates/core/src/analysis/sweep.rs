use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::domain::{argmax_mechanism, make_bounds, ExpectationMode, NoiseConfig};
use crate::ensemble::EnsembleConfig;
use crate::error::{Error, Result};
use crate::mechanisms::{certify, MechanismId, OptimizerSettings};

/// Square lattice over `(e0, e1) ∈ [0, 1]²` with `e0 = i / (res − 1)` and
/// `e1 = j / (res − 1)`. Cells outside the feasible region, or cells with
/// no defined value, hold `None`.
#[derive(Debug, Clone, PartialEq)]
pub struct Lattice<T> {
    resolution: usize,
    cells: Vec<Option<T>>,
}

impl<T> Lattice<T> {
    fn from_fn(resolution: usize, mut f: impl FnMut(usize, usize) -> Option<T>) -> Self {
        let mut cells = Vec::with_capacity(resolution * resolution);
        for i in 0..resolution {
            for j in 0..resolution {
                cells.push(f(i, j));
            }
        }
        Lattice { resolution, cells }
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    /// Coordinate of lattice index `k` along either axis.
    pub fn coord(&self, k: usize) -> f64 {
        k as f64 / (self.resolution - 1) as f64
    }

    pub fn get(&self, i: usize, j: usize) -> Option<&T> {
        if i >= self.resolution || j >= self.resolution {
            return None;
        }
        self.cells[i * self.resolution + j].as_ref()
    }

    /// Defined cells as `(i, j, value)`, row-major in `i`.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, &T)> + '_ {
        let res = self.resolution;
        self.cells
            .iter()
            .enumerate()
            .filter_map(move |(k, v)| v.as_ref().map(|v| (k / res, k % res, v)))
    }

    pub fn map<U>(&self, mut f: impl FnMut(&T) -> Option<U>) -> Lattice<U> {
        Lattice {
            resolution: self.resolution,
            cells: self.cells.iter().map(|c| c.as_ref().and_then(&mut f)).collect(),
        }
    }

    pub fn defined(&self) -> usize {
        self.cells.iter().filter(|c| c.is_some()).count()
    }
}

/// Whether lattice cell `(i, j)` lies in `{e0 ≥ e1 ≥ 0, e0 + e1 ≤ 1}`.
/// Decided on the integer indices, so no rounding can move a cell across
/// the boundary.
pub fn lattice_feasible(i: usize, j: usize, resolution: usize) -> bool {
    j <= i && i + j < resolution
}

/// Per-mechanism radii over the feasible region of the simplex projection.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepGrid {
    resolution: usize,
    noise: NoiseConfig,
    mode: ExpectationMode,
    layers: BTreeMap<MechanismId, Lattice<f64>>,
}

impl SweepGrid {
    pub fn resolution(&self) -> usize {
        self.resolution
    }

    pub fn sigma(&self) -> f64 {
        self.noise.sigma()
    }

    pub fn noise(&self) -> &NoiseConfig {
        &self.noise
    }

    pub fn mode(&self) -> ExpectationMode {
        self.mode
    }

    pub fn mechanisms(&self) -> impl Iterator<Item = MechanismId> + '_ {
        self.layers.keys().copied()
    }

    pub fn coord(&self, k: usize) -> f64 {
        k as f64 / (self.resolution - 1) as f64
    }

    pub fn is_feasible(&self, i: usize, j: usize) -> bool {
        i < self.resolution && lattice_feasible(i, j, self.resolution)
    }

    pub fn layer(&self, id: MechanismId) -> Result<&Lattice<f64>> {
        self.layers
            .get(&id)
            .ok_or_else(|| Error::invalid("sweep", format!("{id} was not evaluated")))
    }

    /// Radius of `id` at cell `(i, j)`; `None` on masked cells or for a
    /// mechanism outside the sweep.
    pub fn value(&self, id: MechanismId, i: usize, j: usize) -> Option<f64> {
        self.layers.get(&id).and_then(|l| l.get(i, j)).copied()
    }
}

/// Evaluate every enabled mechanism at each feasible lattice point, using
/// analytic expectations with no confidence shrinkage.
pub fn sweep_simplex(
    mechanisms: &EnsembleConfig,
    noise: &NoiseConfig,
    resolution: usize,
    opt: &OptimizerSettings,
) -> Result<SweepGrid> {
    if resolution < 2 {
        return Err(Error::invalid("resolution", "need at least 2 points per axis"));
    }
    opt.validate()?;
    let mode = mechanisms.mode();
    let step = (resolution - 1) as f64;
    let cells: Vec<(usize, usize)> = (0..resolution)
        .flat_map(|i| (0..resolution).map(move |j| (i, j)))
        .filter(|&(i, j)| lattice_feasible(i, j, resolution))
        .collect();
    let ids: Vec<MechanismId> = mechanisms.enabled().collect();
    let values: Vec<Vec<f64>> = cells
        .par_iter()
        .map(|&(i, j)| {
            let bounds = make_bounds(i as f64 / step, j as f64 / step, mode)?;
            ids.iter().map(|&id| certify(id, &bounds, noise, opt)).collect()
        })
        .collect::<Result<_>>()?;

    let mut layers = BTreeMap::new();
    for (k, &id) in ids.iter().enumerate() {
        let mut flat = vec![None; resolution * resolution];
        for (&(i, j), v) in cells.iter().zip(&values) {
            flat[i * resolution + j] = Some(v[k]);
        }
        layers.insert(id, Lattice { resolution, cells: flat });
    }
    Ok(SweepGrid {
        resolution,
        noise: *noise,
        mode,
        layers,
    })
}

/// Elementwise `a − b` on feasible cells.
pub fn diff_map(grid: &SweepGrid, a: MechanismId, b: MechanismId) -> Result<Lattice<f64>> {
    let la = grid.layer(a)?;
    let lb = grid.layer(b)?;
    Ok(Lattice::from_fn(grid.resolution, |i, j| {
        Some(la.get(i, j)? - lb.get(i, j)?)
    }))
}

/// Elementwise `numerator / max(denominators)`. Cells where the
/// denominator is zero are masked rather than divided.
pub fn ratio_map(grid: &SweepGrid, numerator: MechanismId, denominators: &[MechanismId]) -> Result<Lattice<f64>> {
    if denominators.is_empty() {
        return Err(Error::invalid("ratio", "empty denominator set"));
    }
    let num = grid.layer(numerator)?;
    let dens: Vec<&Lattice<f64>> = denominators.iter().map(|&d| grid.layer(d)).collect::<Result<_>>()?;
    Ok(Lattice::from_fn(grid.resolution, |i, j| {
        let n = *num.get(i, j)?;
        let d = dens
            .iter()
            .map(|l| l.get(i, j).copied().unwrap_or(0.0))
            .fold(0.0_f64, f64::max);
        (d > 0.0).then(|| n / d)
    }))
}

/// One connected piece of the border between two regions, as a polyline
/// in `(e0, e1)` coordinates running along lattice cell edges.
#[derive(Debug, Clone, PartialEq)]
pub struct Boundary {
    pub between: (MechanismId, MechanismId),
    pub points: Vec<(f64, f64)>,
}

/// Argmax labels plus the borders between differently labelled cells.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionMap {
    pub labels: Lattice<MechanismId>,
    pub boundaries: Vec<Boundary>,
}

impl RegionMap {
    /// Number of cells won by `id`.
    pub fn area(&self, id: MechanismId) -> usize {
        self.labels.iter().filter(|(_, _, m)| **m == id).count()
    }
}

/// Winning mechanism at every feasible cell. Ties go to the earliest
/// mechanism in [`MechanismId::ALL`]; cells where every radius is zero are
/// left unlabelled.
pub fn region_of_superiority(grid: &SweepGrid) -> RegionMap {
    let labels = Lattice::from_fn(grid.resolution, |i, j| {
        let radii: Vec<(MechanismId, f64)> = grid
            .layers
            .iter()
            .filter_map(|(&id, l)| l.get(i, j).map(|&r| (id, r)))
            .collect();
        if radii.iter().all(|&(_, r)| r <= 0.0) {
            return None;
        }
        argmax_mechanism(radii)
    });
    let boundaries = trace_boundaries(&labels);
    RegionMap { labels, boundaries }
}

type Node = (i64, i64);

/// Collect the cell edges separating two different labels and chain them
/// into polylines. Nodes use doubled integer coordinates so edge midpoints
/// are exact.
fn trace_boundaries(labels: &Lattice<MechanismId>) -> Vec<Boundary> {
    let res = labels.resolution();
    let mut edges: BTreeMap<(MechanismId, MechanismId), Vec<(Node, Node)>> = BTreeMap::new();
    let mut push = |a: MechanismId, b: MechanismId, p: Node, q: Node| {
        let key = if a < b { (a, b) } else { (b, a) };
        edges.entry(key).or_default().push((p.min(q), p.max(q)));
    };
    for i in 0..res {
        for j in 0..res {
            let Some(&here) = labels.get(i, j) else { continue };
            let (ci, cj) = (2 * i as i64, 2 * j as i64);
            if let Some(&right) = labels.get(i, j + 1) {
                if right != here {
                    push(here, right, (ci - 1, cj + 1), (ci + 1, cj + 1));
                }
            }
            if let Some(&below) = labels.get(i + 1, j) {
                if below != here {
                    push(here, below, (ci + 1, cj - 1), (ci + 1, cj + 1));
                }
            }
        }
    }

    let scale = 2.0 * (res - 1) as f64;
    let to_point = |(a, b): Node| ((a as f64 / scale).clamp(0.0, 1.0), (b as f64 / scale).clamp(0.0, 1.0));
    let mut out = Vec::new();
    for (between, segs) in edges {
        let mut at: BTreeMap<Node, Vec<usize>> = BTreeMap::new();
        for (k, &(p, q)) in segs.iter().enumerate() {
            at.entry(p).or_default().push(k);
            at.entry(q).or_default().push(k);
        }
        let mut used = vec![false; segs.len()];
        for start in 0..segs.len() {
            if used[start] {
                continue;
            }
            used[start] = true;
            let mut chain = std::collections::VecDeque::from([segs[start].0, segs[start].1]);
            for forward in [true, false] {
                loop {
                    let end = if forward { *chain.back().unwrap() } else { *chain.front().unwrap() };
                    let next = at[&end].iter().copied().find(|&k| !used[k]);
                    let Some(k) = next else { break };
                    used[k] = true;
                    let (p, q) = segs[k];
                    let other = if p == end { q } else { p };
                    if forward {
                        chain.push_back(other);
                    } else {
                        chain.push_front(other);
                    }
                }
            }
            out.push(Boundary {
                between,
                points: chain.into_iter().map(to_point).collect(),
            });
        }
    }
    out
}
