//! The semiconjugacy `pi` from `g` onto the linear factor: `pi(x)` is the
//! point whose linear orbit shadows the g-orbit of `x`. Fibers of `pi` are
//! center segments; this module measures them.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::mane::ManeMap;
use crate::shadowing::{corrections, shadowing_constants, truncation_bound, ShadowingConstants};
use crate::spectral::{ToralMatrix, CENTER};
use crate::torus::{
    apply_linear_into, coord_distance, indexed_rng, lift_difference, reduce_coord, uniform_point,
    TorusPoint,
};

/// Default fiber and inversion tolerance.
///
/// Torus points carry rounding of order 1e-17 off their center leaf, and `pi`
/// is only Holder transverse to the leaf, so near the fiber through `q` the
/// computed `pi` wanders by up to about 5e-9. The default sits above that floor.
pub const DEFAULT_TOLERANCE: f64 = 1e-8;
/// Smallest tolerance accepted: ten times the floating noise of `pi`.
pub const MIN_TOLERANCE: f64 = 1e-12;
const MAX_INVERSION_STEPS: usize = 200;
const DAMPING: f64 = 0.9;

/// Evaluates `pi` through orbit windows `[-N, N]`.
#[derive(Clone, Debug)]
pub struct SemiconjugacyEvaluator {
    g: ManeMap,
    inv: ToralMatrix,
    window: usize,
    constants: ShadowingConstants,
    epsilon: f64,
    w_center: Vec<f64>,
}

impl SemiconjugacyEvaluator {
    /// Checks that every g-orbit is an epsilon-chain inside the uniqueness
    /// regime `3 kappa epsilon < expansivity`.
    pub fn new(g: ManeMap, window: usize) -> Result<Self> {
        if window < 1 {
            return Err(Error::Argument(
                "window half-length must be at least 1".into(),
            ));
        }
        let s = g.spectral();
        let constants = shadowing_constants(s);
        let epsilon = g.perturbation_sup();
        constants.check_regime(epsilon)?;
        let w_center = s.eigenbasis_inverse().row(CENTER).iter().copied().collect();
        Ok(Self {
            inv: g.matrix().inverse(),
            g,
            window,
            constants,
            epsilon,
            w_center,
        })
    }

    pub fn with_window(&self, window: usize) -> Result<Self> {
        Self::new(self.g.clone(), window)
    }

    pub fn map(&self) -> &ManeMap {
        &self.g
    }

    pub fn window(&self) -> usize {
        self.window
    }

    pub fn constants(&self) -> ShadowingConstants {
        self.constants
    }

    /// `sup |g - f_A|`.
    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// `delta = kappa * epsilon`, the bound on `d(pi(x), x)`.
    pub fn delta(&self) -> f64 {
        self.constants.kappa * self.epsilon
    }

    /// Tail bound of the finite window at its middle point.
    pub fn truncation_bound(&self) -> f64 {
        truncation_bound(
            self.g.spectral(),
            self.epsilon,
            2 * self.window,
            self.window,
        )
    }

    fn dim(&self) -> usize {
        self.g.dim()
    }

    /// `pi` on raw coordinates.
    pub fn pi_coords(&self, x: &[f64]) -> Result<Vec<f64>> {
        let d = self.dim();
        let n = self.window;
        let len = 2 * n + 1;
        let mut orbit = vec![0.0; len * d];
        orbit[n * d..(n + 1) * d].copy_from_slice(x);
        for j in n..2 * n {
            let (head, tail) = orbit.split_at_mut((j + 1) * d);
            self.g.step_into(&head[j * d..], &mut tail[..d]);
        }
        for j in (1..=n).rev() {
            let (head, tail) = orbit.split_at_mut(j * d);
            self.g
                .inverse_into(&self.inv, &tail[..d], &mut head[(j - 1) * d..])?;
        }
        let mut errors = vec![0.0; 2 * n * d];
        let mut ax = [0.0; crate::mane::MAX_DIM];
        for j in 0..2 * n {
            apply_linear_into(self.g.matrix(), &orbit[j * d..(j + 1) * d], &mut ax[..d]);
            for i in 0..d {
                errors[j * d + i] = crate::torus::wrap_coord(orbit[(j + 1) * d + i] - ax[i]);
            }
        }
        let (w, _) = corrections(self.g.spectral(), &errors, n, false);
        Ok(x.iter().zip(&w).map(|(a, b)| reduce_coord(a - b)).collect())
    }

    pub fn pi_point(&self, x: &TorusPoint) -> Result<TorusPoint> {
        Ok(TorusPoint::new(self.pi_coords(x.coords())?))
    }

    /// Center eigen-coordinate of a small displacement.
    fn center_coord(&self, u: &[f64]) -> f64 {
        u.iter().zip(&self.w_center).map(|(a, b)| a * b).sum()
    }

    fn on_leaf(&self, y: &[f64], t: f64) -> Vec<f64> {
        y.iter()
            .zip(self.g.center_direction())
            .map(|(a, v)| reduce_coord(a + t * v))
            .collect()
    }

    fn residual(&self, y: &[f64], target: &[f64]) -> Result<(Vec<f64>, f64)> {
        let r = lift_difference(&self.pi_coords(y)?, target);
        let n = r.iter().map(|x| x * x).sum::<f64>().sqrt();
        Ok((r, n))
    }

    /// Bisection along the center leaf through `y` on the center component of
    /// the residual, which is monotone along leaves.
    fn leaf_bisect(&self, y: &[f64], target: &[f64], tol: f64) -> Result<Option<Vec<f64>>> {
        let reach = 3.0 * self.delta();
        let c = |t: f64| -> Result<f64> {
            let (r, _) = self.residual(&self.on_leaf(y, t), target)?;
            Ok(self.center_coord(&r))
        };
        let (mut lo, mut hi) = (-reach, reach);
        if !(c(lo)? <= 0.0 && c(hi)? >= 0.0) {
            return Ok(None);
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            let p = self.on_leaf(y, mid);
            let (r, n) = self.residual(&p, target)?;
            if n <= tol {
                return Ok(Some(p));
            }
            if self.center_coord(&r) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(Some(self.on_leaf(y, 0.5 * (lo + hi))))
    }

    /// Inversion without the ambiguity probe.
    fn invert_raw(&self, target: &[f64], tol: f64) -> Result<Vec<f64>> {
        let mut y = target.to_vec();
        let mut best = (f64::INFINITY, y.clone());
        let mut stall = 0;
        for _ in 0..MAX_INVERSION_STEPS {
            let (r, n) = self.residual(&y, target)?;
            if n <= tol {
                return Ok(y);
            }
            if n < 0.5 * best.0 {
                stall = 0;
            } else {
                stall += 1;
            }
            if n < best.0 {
                best = (n, y.clone());
            }
            if stall >= 8 {
                stall = 0;
                if let Some(p) = self.leaf_bisect(&best.1, target, tol)? {
                    y = p;
                    continue;
                }
            }
            for (yi, ri) in y.iter_mut().zip(&r) {
                *yi = reduce_coord(*yi - DAMPING * ri);
            }
        }
        Err(Error::Inversion(format!(
            "no preimage within {tol:e} of {target:?} after {MAX_INVERSION_STEPS} iterations \
             (best residual {:e})",
            best.0
        )))
    }

    fn check_tol(tol: f64) -> Result<()> {
        if !(tol >= MIN_TOLERANCE) {
            return Err(Error::Argument(format!(
                "tolerance {tol:e} is below the floating floor {MIN_TOLERANCE:e}"
            )));
        }
        Ok(())
    }

    /// A point `y` with `d(pi(y), target) <= tol`. Fails with an ambiguity
    /// error when the fiber at the target is longer than `100 tol`.
    pub fn invert_pi(&self, target: &TorusPoint, tol: f64) -> Result<TorusPoint> {
        Self::check_tol(tol)?;
        let t = target.coords();
        let y = self.invert_raw(t, tol)?;
        let h = 50.0 * tol;
        let wide = [h, -h].iter().try_fold(false, |acc, &s| -> Result<bool> {
            Ok(acc || self.residual(&self.on_leaf(&y, s), t)?.1 <= tol)
        })?;
        if wide {
            let fiber = self.fiber_through(&y, target, tol)?;
            if fiber.length > 100.0 * tol {
                return Err(Error::Ambiguity(Box::new(fiber)));
            }
        }
        Ok(TorusPoint::new(y))
    }

    /// The center interval `pi^{-1}(x)`, up to `tol`.
    pub fn fiber_segment(&self, x: &TorusPoint, tol: f64) -> Result<FiberEstimate> {
        Self::check_tol(tol)?;
        let y = self.invert_raw(x.coords(), tol)?;
        self.fiber_through(&y, x, tol)
    }

    /// Maximal interval around `y` on its center line where `pi` stays
    /// within `tol` of `x`.
    fn fiber_through(&self, y: &[f64], x: &TorusPoint, tol: f64) -> Result<FiberEstimate> {
        let xc = x.coords();
        let pred =
            |t: f64| -> Result<bool> { Ok(self.residual(&self.on_leaf(y, t), xc)?.1 <= tol) };
        if !pred(0.0)? {
            return Err(Error::Inversion("fiber scan started off the fiber".into()));
        }
        let reach = 3.0 * self.delta();
        let mut ends = [0.0; 2];
        for (k, side) in [1.0, -1.0].into_iter().enumerate() {
            if pred(side * reach)? {
                return Err(Error::Anomaly(format!(
                    "fiber at {xc:?} extends past 3 delta = {reach:e} (t = {})",
                    side * reach
                )));
            }
            let (mut lo, mut hi) = (0.0, reach);
            loop {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                if pred(side * mid)? {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            ends[k] = lo;
        }
        let (t_plus, t_minus) = (ends[0], ends[1]);
        let length = t_plus + t_minus;
        let bad: Vec<f64> = (1..8)
            .map(|k| -t_minus + length * k as f64 / 8.0)
            .filter(|&t| !matches!(pred(t), Ok(true)))
            .collect();
        if !bad.is_empty() {
            return Err(Error::Anomaly(format!(
                "fiber predicate is not an interval at {xc:?}: fails at t = {bad:?}"
            )));
        }
        Ok(FiberEstimate {
            base: x.clone(),
            center: TorusPoint::new(y.to_vec()),
            t_minus,
            t_plus,
            length,
            window: self.window,
            tolerance: tol,
        })
    }

    /// Lengths of `g^n(K)` for `0 <= n <= n_max` and the cover counts of `K`
    /// at scale `cover_eps` for `1 <= n <= cover_n`.
    pub fn fiber_report(
        &self,
        f: &FiberEstimate,
        n_max: usize,
        cover_eps: f64,
        cover_n: usize,
    ) -> Result<FiberReport> {
        if !(cover_eps > 0.0) || cover_n < 2 {
            return Err(Error::Argument(
                "cover scale must be positive and cover_n >= 2".into(),
            ));
        }
        let (lo, hi) = self.leaf_offsets(f);
        // dense samples including the endpoints for lengths
        let dense = 256;
        let mut offsets: Vec<f64> = (0..=dense)
            .map(|k| lo + (hi - lo) * k as f64 / dense as f64)
            .collect();
        let mut base = f.center.coords().to_vec();
        let mut next = base.clone();
        let mut lengths = Vec::with_capacity(n_max + 1);
        for n in 0..=n_max {
            lengths.push(offsets.windows(2).map(|w| (w[1] - w[0]).abs()).sum());
            if n < n_max {
                self.g.leaf_offsets_step(&base, &mut offsets);
                self.g.step_into(&base, &mut next);
                std::mem::swap(&mut base, &mut next);
            }
        }
        let bound_l = lengths.iter().copied().fold(0.0, f64::max);
        let counts = self.fiber_cover_counts(f, cover_eps, cover_n);
        let ns: Vec<f64> = (1..=cover_n).map(|n| n as f64).collect();
        let ln: Vec<f64> = counts.iter().map(|&c| (c as f64).ln()).collect();
        Ok(FiberReport {
            lengths_under_iteration: lengths,
            bound_l,
            cover_eps,
            cover_counts: counts,
            cover_slope: least_squares_slope(&ns, &ln),
        })
    }

    /// Lengths with the default cover settings (`eps = 1e-3`, `n <= 30`).
    pub fn fiber_iterate_lengths(&self, f: &FiberEstimate, n_max: usize) -> Result<FiberReport> {
        self.fiber_report(f, n_max, 1e-3, 30)
    }

    /// Leaf coordinates of the endpoints relative to the fiber center,
    /// recomputed from the rounded endpoint points.
    fn leaf_offsets(&self, f: &FiberEstimate) -> (f64, f64) {
        if f.length == 0.0 {
            return (0.0, 0.0);
        }
        let c = f.center.coords();
        let at = |t: f64| self.center_coord(&lift_difference(&self.on_leaf(c, t), c));
        (at(-f.t_minus), at(f.t_plus))
    }

    /// Greedy `(n, eps)`-net sizes of the segment in the Bowen metric along
    /// the leaf, over interior midpoint samples.
    fn fiber_cover_counts(&self, f: &FiberEstimate, eps: f64, n_max: usize) -> Vec<usize> {
        let (lo, hi) = self.leaf_offsets(f);
        let m = 2000;
        let mut offsets: Vec<f64> = (0..m)
            .map(|k| lo + (hi - lo) * (k as f64 + 0.5) / m as f64)
            .collect();
        let mut traj = vec![offsets.clone()];
        let mut base = f.center.coords().to_vec();
        let mut next = base.clone();
        for _ in 0..n_max {
            self.g.leaf_offsets_step(&base, &mut offsets);
            self.g.step_into(&base, &mut next);
            std::mem::swap(&mut base, &mut next);
            traj.push(offsets.clone());
        }
        (1..=n_max)
            .map(|n| {
                let mut centers: Vec<usize> = Vec::new();
                for i in 0..m {
                    let covered = centers
                        .iter()
                        .any(|&c| (0..=n).all(|k| (traj[k][i] - traj[k][c]).abs() < eps));
                    if !covered {
                        centers.push(i);
                    }
                }
                centers.len()
            })
            .collect()
    }

    /// `max d(pi(g x), f_A(pi(x)))` over seeded uniform samples.
    pub fn semiconjugacy_defect(&self, sample_count: usize, seed: u64) -> Result<f64> {
        Ok(self
            .defect_samples(sample_count, seed)?
            .into_iter()
            .fold(0.0, f64::max))
    }

    /// Per-sample defects, in sample order.
    pub fn defect_samples(&self, sample_count: usize, seed: u64) -> Result<Vec<f64>> {
        Ok(self
            .pi_samples(sample_count, seed)?
            .into_iter()
            .map(|p| p.defect)
            .collect())
    }

    /// Defect and displacement `d(pi(x), x)` at seeded uniform samples.
    pub fn pi_samples(&self, sample_count: usize, seed: u64) -> Result<Vec<PiSample>> {
        if sample_count == 0 {
            return Err(Error::Argument("sample count must be positive".into()));
        }
        let d = self.dim();
        (0..sample_count)
            .into_par_iter()
            .map(|i| {
                let x = uniform_point(&mut indexed_rng(seed, i as u64), d);
                let mut gx = vec![0.0; d];
                self.g.step_into(x.coords(), &mut gx);
                let lhs = self.pi_coords(&gx)?;
                let px = self.pi_coords(x.coords())?;
                let mut rhs = vec![0.0; d];
                apply_linear_into(self.g.matrix(), &px, &mut rhs);
                Ok(PiSample {
                    defect: coord_distance(&lhs, &rhs),
                    displacement: coord_distance(&px, x.coords()),
                })
            })
            .collect()
    }

    /// Fibers at seeded uniform points, in sample order.
    pub fn sample_fibers(&self, count: usize, seed: u64, tol: f64) -> Result<Vec<FiberEstimate>> {
        let d = self.dim();
        (0..count)
            .into_par_iter()
            .map(|i| self.fiber_segment(&uniform_point(&mut indexed_rng(seed, i as u64), d), tol))
            .collect()
    }
}

/// Semiconjugacy checks at one sample point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PiSample {
    /// `d(pi(g x), f_A(pi(x)))`.
    pub defect: f64,
    /// `d(pi(x), x)`.
    pub displacement: f64,
}

/// Ordinary least-squares slope of `y` against `x`.
pub fn least_squares_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

/// A center segment approximating `pi^{-1}(base)`.
#[derive(Clone, Debug)]
pub struct FiberEstimate {
    pub base: TorusPoint,
    /// Point of the fiber found by inversion.
    pub center: TorusPoint,
    /// The segment is `[center - t_minus v_c, center + t_plus v_c]`.
    pub t_minus: f64,
    pub t_plus: f64,
    pub length: f64,
    pub window: usize,
    pub tolerance: f64,
}

impl FiberEstimate {
    pub fn endpoints(&self, vc: &[f64]) -> (TorusPoint, TorusPoint) {
        (
            self.center.translate(vc, -self.t_minus),
            self.center.translate(vc, self.t_plus),
        )
    }
}

/// Iterated lengths of a fiber and its cover counts.
#[derive(Clone, Debug)]
pub struct FiberReport {
    pub lengths_under_iteration: Vec<f64>,
    pub bound_l: f64,
    pub cover_eps: f64,
    /// `cover_counts[n - 1]` is the net size for `n` steps.
    pub cover_counts: Vec<usize>,
    pub cover_slope: f64,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mane::{ManeParams, ManeSettings};
    use crate::spectral::{canonical_matrix, spectral_data};
    use crate::torus::distance;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn evaluator(window: usize) -> SemiconjugacyEvaluator {
        let a = canonical_matrix();
        let s = spectral_data(&a, 1e-12).unwrap();
        let p = ManeParams::defaults(&a, &s).unwrap();
        SemiconjugacyEvaluator::new(ManeMap::build(&a, &s, p).unwrap(), window).unwrap()
    }

    fn linear_evaluator() -> SemiconjugacyEvaluator {
        let a = canonical_matrix();
        let s = spectral_data(&a, 1e-12).unwrap();
        let mut p = ManeParams::defaults(&a, &s).unwrap();
        p.b = s.lambda_c();
        SemiconjugacyEvaluator::new(ManeMap::build(&a, &s, p).unwrap(), 60).unwrap()
    }

    #[test]
    fn regime_rejects_wide_support() {
        let a = canonical_matrix();
        let s = spectral_data(&a, 1e-12).unwrap();
        let set = ManeSettings {
            tau_fraction: 1.0,
            ..ManeSettings::default()
        };
        let p = ManeParams::from_settings(&a, &s, &set).unwrap();
        let g = ManeMap::build(&a, &s, p).unwrap();
        assert!(matches!(
            SemiconjugacyEvaluator::new(g, 60),
            Err(Error::ShadowingRegime(_))
        ));
    }

    #[test]
    fn pi_fixes_q_and_collapses_pitchfork() {
        let e = evaluator(60);
        let q = TorusPoint::new(e.map().q().to_vec());
        assert!(distance(&e.pi_point(&q).unwrap(), &q) < 1e-12);
        let pf = e.map().center_profile_fixed_points().unwrap();
        for p in &pf.points {
            assert!(distance(&e.pi_point(p).unwrap(), &q) < DEFAULT_TOLERANCE);
        }
    }

    #[test]
    fn linear_pi_is_identity() {
        let e = linear_evaluator();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..200 {
            let x = uniform_point(&mut rng, 3);
            assert!(distance(&e.pi_point(&x).unwrap(), &x) < 1e-12);
            assert_eq!(e.invert_pi(&x, DEFAULT_TOLERANCE).unwrap(), x);
        }
    }

    #[test]
    fn near_identity_and_equivariant() {
        let e = evaluator(60);
        let delta = e.delta();
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        for k in 0..300 {
            let x = if k % 2 == 0 {
                uniform_point(&mut rng, 3)
            } else {
                let q = e.map().q();
                TorusPoint::new(
                    q.iter()
                        .map(|c| c + 0.01 * (rng.random::<f64>() - 0.5))
                        .collect(),
                )
            };
            let p = e.pi_point(&x).unwrap();
            assert!(distance(&p, &x) < delta);
        }
        assert!(e.semiconjugacy_defect(200, 1).unwrap() < 1e-8);
    }

    #[test]
    fn fiber_at_q_is_pitchfork_interval() {
        let e = evaluator(60);
        let q = TorusPoint::new(e.map().q().to_vec());
        let t_star = e.map().pitchfork_offset().unwrap();
        let f = e.fiber_segment(&q, DEFAULT_TOLERANCE).unwrap();
        assert!((f.length - 2.0 * t_star).abs() < 1e-6);
        assert!(matches!(
            e.invert_pi(&q, DEFAULT_TOLERANCE),
            Err(Error::Ambiguity(_))
        ));
        // Endpoint rounding grows by the stretch at q1, q2 (about 5.2) per step.
        let rep = e.fiber_iterate_lengths(&f, 5).unwrap();
        for l in &rep.lengths_under_iteration {
            assert!((l - f.length).abs() < 1e-9, "{l} vs {}", f.length);
        }
        assert!(rep.cover_slope <= 0.02);
    }

    #[test]
    fn generic_fibers_are_points() {
        let e = evaluator(60);
        let fibers = e.sample_fibers(20, 3, DEFAULT_TOLERANCE).unwrap();
        for f in &fibers {
            assert!(f.length < 1e-4);
            let rep = e.fiber_iterate_lengths(f, 5).unwrap();
            assert!(rep.bound_l < 1e-4);
        }
    }

    #[test]
    fn inversion_round_trip() {
        let e = evaluator(60);
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for k in 0..100 {
            let x = if k % 2 == 0 {
                uniform_point(&mut rng, 3)
            } else {
                let q = e.map().q();
                TorusPoint::new(
                    q.iter()
                        .map(|c| c + 0.02 * (rng.random::<f64>() - 0.5))
                        .collect(),
                )
            };
            let y = e.invert_pi(&x, DEFAULT_TOLERANCE).unwrap();
            assert!(distance(&e.pi_point(&y).unwrap(), &x) <= DEFAULT_TOLERANCE);
        }
        assert!(e.invert_pi(&TorusPoint::origin(3), 1e-15).is_err());
    }

    #[test]
    fn slope_of_a_line() {
        assert!((least_squares_slope(&[1.0, 2.0, 3.0], &[2.0, 4.0, 6.0]) - 2.0).abs() < 1e-15);
    }
}
