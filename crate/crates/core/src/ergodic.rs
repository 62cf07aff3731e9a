//! Statistics of the dynamics: (n, eps)-cover entropy estimates, Birkhoff
//! occupation averages of a ball, center expansion exponents and samples of
//! the measure of maximal entropy of `g`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::mane::{
    ball_measure, ball_measure_and_inequality, CenterExtremes, ManeMap, MeasureStats,
};
use crate::semiconj::{least_squares_slope, SemiconjugacyEvaluator};
use crate::torus::{
    apply_lattice_into, coord_distance, indexed_rng, lattice_to_unit, uniform_point, wrap_coord,
    LatticePoint, LinearAction, RationalPoint, ToralMap, TorusPoint,
};

pub const MAX_ENTROPY_N: usize = 6;
pub const MAX_ENTROPY_SAMPLES: usize = 10_000_000;
pub const MIN_ENTROPY_EPS: f64 = 0.05;

/// Spanning-set sizes and growth rates.
#[derive(Clone, Debug)]
pub struct EntropyEstimate {
    pub eps_list: Vec<f64>,
    pub n_list: Vec<usize>,
    /// `counts[e][k]` is `S(n_list[k], eps_list[e])`.
    pub counts: Vec<Vec<usize>>,
    /// Least-squares slope of `ln S` over the largest three `n`, per `eps`.
    pub slopes: Vec<f64>,
    /// Fit residuals per `eps`, aligned with the fitted `n` values.
    pub residuals: Vec<Vec<f64>>,
    /// Per-`eps` slopes fitted linearly in `eps` and evaluated at `eps = 0`,
    /// clamped at zero; with a single `eps`, its slope.
    pub slope: f64,
    pub sample_size: usize,
    pub warnings: Vec<String>,
}

/// Orbits of `sample_size` seeded uniform points, `n_max + 1` slices each.
/// Starting points carry 53 bits so that floating and lattice starts agree;
/// linear maps are iterated exactly on the lattice.
fn sample_orbits<M: ToralMap>(map: &M, n_max: usize, sample_size: usize, seed: u64) -> Vec<f64> {
    let d = map.dim();
    let stride = (n_max + 1) * d;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let starts: Vec<u64> = (0..sample_size * d)
        .map(|_| rng.random::<u64>() & !0x7ff)
        .collect();
    let mut data = vec![0.0; sample_size * stride];
    data.par_chunks_mut(stride)
        .zip(starts.par_chunks(d))
        .for_each(|(orbit, start)| match map.as_linear() {
            Some(a) => {
                let mut cur = start.to_vec();
                let mut next = cur.clone();
                for k in 0..=n_max {
                    for i in 0..d {
                        orbit[k * d + i] = lattice_to_unit(cur[i]);
                    }
                    apply_lattice_into(a, &cur, &mut next);
                    std::mem::swap(&mut cur, &mut next);
                }
            }
            None => {
                for i in 0..d {
                    orbit[i] = lattice_to_unit(start[i]);
                }
                for k in 0..n_max {
                    let (head, tail) = orbit.split_at_mut((k + 1) * d);
                    map.step(&head[k * d..], &mut tail[..d]);
                }
            }
        });
    data
}

const LEAF_SIZE: usize = 16;
const NONE: u32 = u32::MAX;

struct Node {
    start: u32,
    end: u32,
    dim: u32,
    split: f64,
    left: u32,
    right: u32,
    parent: u32,
}

/// Periodic distance from `x` to the arc `[a, b]` of the circle.
#[inline]
fn arc_gap(x: f64, a: f64, b: f64) -> f64 {
    if x >= a && x <= b {
        0.0
    } else {
        wrap_coord(x - a).abs().min(wrap_coord(x - b).abs())
    }
}

/// Greedy eps-net in the Bowen metric `d_n`, indexed by a static kd-tree over
/// the embedded orbit coordinates. Rows are stored in tree order so that
/// leaves are contiguous; subtrees remember whether they hold a center, and
/// a subtree is skipped as soon as one time slice is provably farther than
/// `eps` in the flat metric.
struct BowenNet {
    rows: Vec<f64>,
    width: usize,
    d: usize,
    eps: f64,
    /// Tree position of each sample.
    pos: Vec<u32>,
    nodes: Vec<Node>,
    leaf_of: Vec<u32>,
    has_center: Vec<bool>,
    is_center: Vec<bool>,
}

/// Split dimensions: first and last slice, then the middle ones. The end
/// slices constrain the Bowen ball most for a map that stretches.
fn split_order(n: usize, d: usize) -> Vec<usize> {
    let mut slices = vec![0];
    if n > 0 {
        slices.push(n);
    }
    slices.extend(1..n);
    slices.iter().flat_map(|&s| s * d..(s + 1) * d).collect()
}

impl BowenNet {
    fn new(data: &[f64], stride: usize, d: usize, n: usize, eps: f64) -> Self {
        let count = data.len() / stride;
        let width = (n + 1) * d;
        let split_dims = split_order(n, d);
        let used = split_dims.len().min(2 * d);
        let mut perm: Vec<u32> = (0..count as u32).collect();
        let mut nodes: Vec<Node> = Vec::new();
        let mut leaf_of = vec![0u32; count];
        // (node range, depth, parent, is_left)
        let mut stack = vec![(0usize, count, 0usize, NONE, false)];
        while let Some((start, end, depth, parent, is_left)) = stack.pop() {
            let id = nodes.len() as u32;
            if parent != NONE {
                let p = &mut nodes[parent as usize];
                if is_left {
                    p.left = id;
                } else {
                    p.right = id;
                }
            }
            let dim = split_dims[depth % used];
            let mut node = Node {
                start: start as u32,
                end: end as u32,
                dim: dim as u32,
                split: 0.0,
                left: NONE,
                right: NONE,
                parent,
            };
            if end - start <= LEAF_SIZE {
                for t in start..end {
                    leaf_of[t] = id;
                }
                nodes.push(node);
                continue;
            }
            let mid = (start + end) / 2;
            let key = |j: &u32| data[*j as usize * stride + dim];
            perm[start..end].select_nth_unstable_by(mid - start, |a, b| key(a).total_cmp(&key(b)));
            node.split = key(&perm[mid]);
            nodes.push(node);
            stack.push((mid, end, depth + 1, id, false));
            stack.push((start, mid, depth + 1, id, true));
        }
        let mut rows = Vec::with_capacity(count * width);
        let mut pos = vec![0u32; count];
        for (t, &j) in perm.iter().enumerate() {
            rows.extend_from_slice(&data[j as usize * stride..j as usize * stride + width]);
            pos[j as usize] = t as u32;
        }
        let nn = nodes.len();
        Self {
            rows,
            width,
            d,
            eps,
            pos,
            nodes,
            leaf_of,
            has_center: vec![false; nn],
            is_center: vec![false; count],
        }
    }

    /// `d_n(x, row t) < eps`, slice by slice with early exit.
    #[inline]
    fn close(&self, x: &[f64], t: usize) -> bool {
        let e2 = self.eps * self.eps;
        let y = &self.rows[t * self.width..(t + 1) * self.width];
        x.chunks_exact(self.d)
            .zip(y.chunks_exact(self.d))
            .all(|(a, b)| {
                let mut acc = 0.0;
                for (u, v) in a.iter().zip(b) {
                    let w = wrap_coord(u - v);
                    acc += w * w;
                }
                acc < e2
            })
    }

    fn covered(&self, i: usize) -> bool {
        let t = self.pos[i] as usize;
        let x = &self.rows[t * self.width..(t + 1) * self.width];
        let mut lo = vec![0.0; self.width];
        let mut hi = vec![1.0; self.width];
        let mut gap = vec![0.0; self.width];
        let mut slice_gap = vec![0.0; self.width / self.d];
        let mut q = Query {
            x,
            lo: &mut lo,
            hi: &mut hi,
            gap: &mut gap,
            slice_gap: &mut slice_gap,
        };
        self.search(0, &mut q)
    }

    fn search(&self, id: usize, q: &mut Query) -> bool {
        if !self.has_center[id] {
            return false;
        }
        let node = &self.nodes[id];
        if node.left == NONE {
            return (node.start as usize..node.end as usize)
                .any(|t| self.is_center[t] && self.close(q.x, t));
        }
        let dim = node.dim as usize;
        let slice = dim / self.d;
        let x = q.x[dim];
        let e2 = self.eps * self.eps;
        let children = if x <= node.split {
            [(node.left, true), (node.right, false)]
        } else {
            [(node.right, false), (node.left, true)]
        };
        for (child, is_left) in children {
            let (a, b) = if is_left {
                (q.lo[dim], node.split)
            } else {
                (node.split, q.hi[dim])
            };
            let g = arc_gap(x, a, b);
            let old = q.gap[dim];
            let sum = q.slice_gap[slice] - old * old + g * g;
            if sum >= e2 {
                continue;
            }
            let (saved_bound, saved_sum) = (
                if is_left { q.hi[dim] } else { q.lo[dim] },
                q.slice_gap[slice],
            );
            if is_left {
                q.hi[dim] = node.split;
            } else {
                q.lo[dim] = node.split;
            }
            q.gap[dim] = g;
            q.slice_gap[slice] = sum;
            let found = self.search(child as usize, q);
            if is_left {
                q.hi[dim] = saved_bound;
            } else {
                q.lo[dim] = saved_bound;
            }
            q.gap[dim] = old;
            q.slice_gap[slice] = saved_sum;
            if found {
                return true;
            }
        }
        false
    }

    fn add_center(&mut self, i: usize) {
        let t = self.pos[i] as usize;
        self.is_center[t] = true;
        let mut id = self.leaf_of[t];
        while id != NONE && !self.has_center[id as usize] {
            self.has_center[id as usize] = true;
            id = self.nodes[id as usize].parent;
        }
    }

    /// Greedy net over samples in index order; returns its size.
    fn build(mut self) -> usize {
        let count = self.pos.len();
        let mut size = 0;
        for i in 0..count {
            if !self.covered(i) {
                self.add_center(i);
                size += 1;
            }
        }
        size
    }
}

/// Search state: the query row, the current cell and its per-slice gaps.
struct Query<'q> {
    x: &'q [f64],
    lo: &'q mut [f64],
    hi: &'q mut [f64],
    gap: &'q mut [f64],
    slice_gap: &'q mut [f64],
}

/// Spanning-set growth estimate from seeded uniform samples.
pub fn entropy_estimate<M: ToralMap>(
    map: &M,
    eps_list: &[f64],
    n_list: &[usize],
    sample_size: usize,
    seed: u64,
) -> Result<EntropyEstimate> {
    if eps_list.is_empty() || n_list.len() < 2 {
        return Err(Error::Argument(
            "need at least one eps and two values of n".into(),
        ));
    }
    if let Some(&e) = eps_list.iter().find(|&&e| !(e >= MIN_ENTROPY_EPS)) {
        return Err(Error::Argument(format!(
            "eps = {e} is below {MIN_ENTROPY_EPS}"
        )));
    }
    if eps_list
        .iter()
        .enumerate()
        .any(|(i, e)| eps_list[..i].contains(e))
    {
        return Err(Error::Argument("eps list has repeated values".into()));
    }
    let mut ns = n_list.to_vec();
    ns.sort_unstable();
    ns.dedup();
    if ns.len() != n_list.len() {
        return Err(Error::Argument("n list has repeated values".into()));
    }
    let n_max = *ns.last().unwrap();
    if n_max > MAX_ENTROPY_N {
        return Err(Error::Argument(format!(
            "n = {n_max} exceeds {MAX_ENTROPY_N}"
        )));
    }
    if sample_size == 0 || sample_size > MAX_ENTROPY_SAMPLES {
        return Err(Error::Argument(format!(
            "sample size {sample_size} outside 1..={MAX_ENTROPY_SAMPLES}"
        )));
    }
    let d = map.dim();
    let stride = (n_max + 1) * d;
    let data = sample_orbits(map, n_max, sample_size, seed);
    let cells: Vec<(usize, usize)> = (0..eps_list.len())
        .flat_map(|e| (0..ns.len()).map(move |k| (e, k)))
        .collect();
    let sizes: Vec<usize> = cells
        .par_iter()
        .map(|&(e, k)| BowenNet::new(&data, stride, d, ns[k], eps_list[e]).build())
        .collect();
    let counts: Vec<Vec<usize>> = sizes.chunks(ns.len()).map(|c| c.to_vec()).collect();
    let fit_from = ns.len().saturating_sub(3);
    let x: Vec<f64> = ns[fit_from..].iter().map(|&n| n as f64).collect();
    let mut slopes = Vec::new();
    let mut residuals = Vec::new();
    let mut warnings = Vec::new();
    for (e, row) in counts.iter().enumerate() {
        let y: Vec<f64> = row[fit_from..].iter().map(|&c| (c as f64).ln()).collect();
        let slope = least_squares_slope(&x, &y);
        let mx = x.iter().sum::<f64>() / x.len() as f64;
        let my = y.iter().sum::<f64>() / y.len() as f64;
        residuals.push(
            x.iter()
                .zip(&y)
                .map(|(a, b)| b - (my + slope * (a - mx)))
                .collect(),
        );
        slopes.push(slope);
        if row.iter().any(|&c| c == sample_size) {
            warnings.push(format!(
                "eps = {}: the net saturated the sample of {sample_size} points",
                eps_list[e]
            ));
        }
    }
    let slope = extrapolate_to_zero(eps_list, &slopes).max(0.0);
    Ok(EntropyEstimate {
        eps_list: eps_list.to_vec(),
        n_list: ns,
        counts,
        slopes,
        residuals,
        slope,
        sample_size,
        warnings,
    })
}

/// Value at `eps = 0` of the least-squares line through `(eps, slope)`.
fn extrapolate_to_zero(eps: &[f64], slopes: &[f64]) -> f64 {
    if eps.len() == 1 {
        return slopes[0];
    }
    let b = least_squares_slope(eps, slopes);
    let n = eps.len() as f64;
    slopes.iter().sum::<f64>() / n - b * eps.iter().sum::<f64>() / n
}

/// Where a Birkhoff orbit starts.
#[derive(Clone, Debug)]
pub enum Start {
    /// A seeded uniform point.
    Random,
    Point(TorusPoint),
    /// An exact rational point; linear orbits stay exact.
    Exact(RationalPoint),
}

#[derive(Clone, Debug, PartialEq)]
pub struct BirkhoffResult {
    pub n: usize,
    pub average: f64,
    pub target_m: f64,
    pub radius: f64,
    pub first_half: f64,
    pub second_half: f64,
}

pub const MAX_BIRKHOFF_N: usize = 100_000_000;

/// Fraction of the first `n` orbit points inside `B(q, radius)`.
pub fn birkhoff_indicator_average<M: ToralMap>(
    map: &M,
    start: &Start,
    q: &TorusPoint,
    radius: f64,
    n: usize,
    seed: u64,
) -> Result<BirkhoffResult> {
    let d = map.dim();
    let target_m = ball_measure(d, radius)?;
    if !(2..=MAX_BIRKHOFF_N).contains(&n) {
        return Err(Error::Argument(format!(
            "orbit length {n} outside 2..={MAX_BIRKHOFF_N}"
        )));
    }
    let qc = q.coords();
    let inside = |x: &[f64]| coord_distance(x, qc) < radius;
    let half = n / 2;
    let mut hits = [0usize; 2];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match (map.as_linear(), start) {
        (Some(a), Start::Exact(p)) => {
            let mut x = p.clone();
            for k in 0..n {
                if inside(x.to_torus().coords()) {
                    hits[(k >= half) as usize] += 1;
                }
                x = x.apply(a);
            }
        }
        (Some(a), _) => {
            let mut x = match start {
                Start::Point(p) => p.to_lattice(),
                _ => LatticePoint((0..d).map(|_| rng.random::<u64>()).collect()),
            };
            let mut next = x.clone();
            let mut f = vec![0.0; d];
            for k in 0..n {
                for i in 0..d {
                    f[i] = lattice_to_unit(x.0[i]);
                }
                if inside(&f) {
                    hits[(k >= half) as usize] += 1;
                }
                apply_lattice_into(a, &x.0, &mut next.0);
                std::mem::swap(&mut x, &mut next);
            }
        }
        (None, _) => {
            let mut x = match start {
                Start::Random => uniform_point(&mut rng, d).coords().to_vec(),
                Start::Point(p) => p.coords().to_vec(),
                Start::Exact(p) => p.to_torus().coords().to_vec(),
            };
            let mut next = x.clone();
            for k in 0..n {
                if inside(&x) {
                    hits[(k >= half) as usize] += 1;
                }
                map.step(&x, &mut next);
                std::mem::swap(&mut x, &mut next);
            }
        }
    }
    Ok(BirkhoffResult {
        n,
        average: (hits[0] + hits[1]) as f64 / n as f64,
        target_m,
        radius,
        first_half: hits[0] as f64 / half as f64,
        second_half: hits[1] as f64 / (n - half) as f64,
    })
}

/// Growth rate of the center derivative along an orbit.
#[derive(Clone, Debug)]
pub struct CenterExpansionReport {
    pub n: usize,
    pub exponent: f64,
    pub lower_bound: f64,
    pub slack_sigma: f64,
    pub extremes: CenterExtremes,
    pub measure: MeasureStats,
    pub prefactor_note: String,
}

const EXTREME_SAMPLES: usize = 4096;

/// The certified rate `(1-m-sigma) ln a(g) + (2m+sigma) ln b(g)` with
/// `sigma` half the largest admissible slack.
pub fn center_expansion_bound(g: &ManeMap) -> Result<(f64, f64, CenterExtremes, MeasureStats)> {
    let ext = g.center_derivative_extremes(EXTREME_SAMPLES)?;
    let stats = ball_measure_and_inequality(g.spectral(), g.params(), 3.0 * g.params().rho)?;
    let sigma = 0.5 * stats.slack_sigma;
    let lower = stats.log_rate(ext.a_g.ln(), ext.b_g.ln(), sigma);
    Ok((lower, sigma, ext, stats))
}

/// `(1/n) sum_{k<n} ln |Dg_{g^k x} v_c|`.
pub fn center_expansion_exponent(
    g: &ManeMap,
    x: &TorusPoint,
    n: usize,
) -> Result<CenterExpansionReport> {
    if n < 1000 {
        return Err(Error::Argument(format!("orbit length {n} is below 1000")));
    }
    let (lower_bound, slack_sigma, extremes, measure) = center_expansion_bound(g)?;
    let mut cur = x.coords().to_vec();
    let mut next = cur.clone();
    // compensated sum: 1e5 equal terms would otherwise drift by about 1e-12
    let (mut sum, mut carry) = (0.0f64, 0.0f64);
    for _ in 0..n {
        let v = g.center_stretch(&cur).ln();
        let t = sum + v;
        carry += if sum.abs() >= v.abs() {
            (sum - t) + v
        } else {
            (v - t) + sum
        };
        sum = t;
        g.step_into(&cur, &mut next);
        std::mem::swap(&mut cur, &mut next);
    }
    Ok(CenterExpansionReport {
        n,
        exponent: (sum + carry) / n as f64,
        lower_bound,
        slack_sigma,
        extremes,
        measure,
        prefactor_note: "the orbit-dependent prefactor K(x) is not estimated; \
                         only the exponential rate is compared"
            .into(),
    })
}

/// Pull-back of Lebesgue measure through `pi`.
#[derive(Clone, Debug)]
pub struct MmeSample {
    pub points: Vec<TorusPoint>,
    pub seed: u64,
    pub window: usize,
    pub tolerance: f64,
    pub resamples: usize,
}

pub const MAX_MME_COUNT: usize = 100_000;
const MAX_RESAMPLE_RATE: f64 = 0.01;

/// For each seeded uniform `x`, a preimage under `pi`; targets on long
/// fibers are redrawn from the same per-index stream.
pub fn sample_mme(
    e: &SemiconjugacyEvaluator,
    count: usize,
    seed: u64,
    tol: f64,
) -> Result<MmeSample> {
    if count == 0 || count > MAX_MME_COUNT {
        return Err(Error::Argument(format!(
            "sample count {count} outside 1..={MAX_MME_COUNT}"
        )));
    }
    let d = e.map().dim();
    let limit = ((MAX_RESAMPLE_RATE * count as f64).ceil() as usize).max(1);
    let drawn: Vec<(TorusPoint, usize)> = (0..count)
        .into_par_iter()
        .map(|i| {
            let mut rng = indexed_rng(seed, i as u64);
            let mut redraws = 0;
            loop {
                let x = uniform_point(&mut rng, d);
                match e.invert_pi(&x, tol) {
                    Ok(y) => return Ok((y, redraws)),
                    Err(Error::Ambiguity(_)) if redraws < limit => redraws += 1,
                    Err(err) => return Err(err),
                }
            }
        })
        .collect::<Result<_>>()?;
    let resamples: usize = drawn.iter().map(|p| p.1).sum();
    if resamples as f64 > MAX_RESAMPLE_RATE * count as f64 {
        return Err(Error::Anomaly(format!(
            "{resamples} of {count} targets needed redrawing (more than 1%)"
        )));
    }
    Ok(MmeSample {
        points: drawn.into_iter().map(|p| p.0).collect(),
        seed,
        window: e.window(),
        tolerance: tol,
        resamples,
    })
}

/// Kolmogorov-Smirnov distance of a sample from the uniform law on `[0, 1]`.
pub fn ks_uniform(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    v.iter()
        .enumerate()
        .map(|(i, &x)| ((i + 1) as f64 / n - x).max(x - i as f64 / n))
        .fold(0.0, f64::max)
}
