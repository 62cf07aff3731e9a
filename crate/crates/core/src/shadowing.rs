//! Shadowing of epsilon-chains by true orbits of the linear automorphism.
//!
//! With `e_j = x_{j+1} - A x_j`, the correction `w_j` solving
//! `w_{j+1} = A w_j + e_j` makes `y_j = x_j - w_j` a true orbit. Per
//! eigendirection the bounded solution is a geometric series: contracting
//! components are summed forward, expanding ones backward. A finite window
//! truncates the series and the tails are bounded explicitly.

use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::spectral::{SpectralData, ToralMatrix};
use crate::torus::{
    apply_linear_into, coord_distance, indexed_rng, lift_difference, uniform_point, Lift,
    LinearAction, TorusPoint,
};

/// A finite epsilon-chain for the linear map, stored as torus points together
/// with the step errors `e_j` (small torus displacements).
#[derive(Clone, Debug)]
pub struct PseudoOrbit {
    points: Vec<TorusPoint>,
    errors: Vec<f64>,
    epsilon: f64,
}

impl PseudoOrbit {
    pub fn new(a: &ToralMatrix, points: Vec<TorusPoint>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::Argument(
                "a pseudo-orbit needs at least two points".into(),
            ));
        }
        let d = a.dim();
        if points.iter().any(|p| p.dim() != d) {
            return Err(Error::Argument("pseudo-orbit dimension mismatch".into()));
        }
        let mut errors = Vec::with_capacity(d * (points.len() - 1));
        let mut ax = vec![0.0; d];
        for w in points.windows(2) {
            apply_linear_into(a, w[0].coords(), &mut ax);
            errors.extend(lift_difference(w[1].coords(), &ax));
        }
        let epsilon = max_norm(&errors, d);
        Ok(Self {
            points,
            errors,
            epsilon,
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[TorusPoint] {
        &self.points
    }

    /// Step errors, flattened: `errors()[j*d..(j+1)*d] = x_{j+1} - A x_j`.
    pub fn errors(&self) -> &[f64] {
        &self.errors
    }

    /// `max_j |x_{j+1} - A x_j|`.
    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }
}

fn max_norm(flat: &[f64], d: usize) -> f64 {
    flat.chunks(d)
        .map(|e| e.iter().map(|x| x * x).sum::<f64>().sqrt())
        .fold(0.0, f64::max)
}

/// The epsilon-to-delta ratio and a usable expansivity constant.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ShadowingConstants {
    /// `delta / epsilon = sum_i |P_i| / |lambda_i - 1|`.
    pub kappa: f64,
    pub expansivity: f64,
}

impl ShadowingConstants {
    /// Largest epsilon with `3 kappa epsilon` below the expansivity constant.
    pub fn max_epsilon(&self) -> f64 {
        self.expansivity / (3.0 * self.kappa)
    }

    pub fn check_regime(&self, epsilon: f64) -> Result<()> {
        let delta = self.kappa * epsilon;
        if 3.0 * delta >= self.expansivity {
            return Err(Error::ShadowingRegime(format!(
                "3 delta = 3 kappa epsilon = {:.6e} is not below the expansivity constant {:.6e} \
                 (epsilon = {epsilon:.6e}, kappa = {:.6})",
                3.0 * delta,
                self.expansivity,
                self.kappa
            )));
        }
        Ok(())
    }
}

/// Upper limit for the expansivity constant, half the injectivity radius.
const INJECTIVITY_MARGIN: f64 = 0.25;

pub fn shadowing_constants(s: &SpectralData) -> ShadowingConstants {
    let norms = s.projection_norms();
    let kappa = s
        .eigenvalues()
        .iter()
        .zip(norms)
        .map(|(l, p)| p / (l - 1.0).abs())
        .sum();
    let gap = s
        .eigenvalues()
        .iter()
        .map(|l| (l - 1.0).abs())
        .fold(f64::INFINITY, f64::min);
    let total: f64 = norms.iter().sum();
    ShadowingConstants {
        kappa,
        expansivity: INJECTIVITY_MARGIN.min(gap / (2.0 * total)),
    }
}

/// A true orbit shadowing a pseudo-orbit.
#[derive(Clone, Debug)]
pub struct ShadowingResult {
    /// Lift of the shadowing point at `anchor_index`, near `x_{anchor_index}`.
    pub anchor: Lift,
    pub anchor_index: usize,
    pub epsilon: f64,
    /// `max_j |y_j - x_j|` over the window.
    pub delta_realized: f64,
    /// Bound on the anchor error caused by cutting the series at the window ends.
    pub truncation_bound: f64,
}

impl ShadowingResult {
    pub fn point(&self) -> TorusPoint {
        self.anchor.reduce()
    }
}

/// Solves the correction recursion on flat step errors and returns
/// `(w_anchor, max_j |w_j|)`. `errors` holds `L` steps, so the window has
/// `L + 1` points and `anchor <= L`.
pub(crate) fn corrections(
    s: &SpectralData,
    errors: &[f64],
    anchor: usize,
    want_max: bool,
) -> (Vec<f64>, f64) {
    let d = s.dim();
    let steps = errors.len() / d;
    let v = s.eigenbasis();
    let v_inv = s.eigenbasis_inverse();
    let points = steps + 1;
    // component amplitudes W_i[j], stored per point
    let mut amp = vec![0.0; points * d];
    for (i, &lambda) in s.eigenvalues().iter().enumerate() {
        let alpha = |k: usize| -> f64 { (0..d).map(|c| v_inv[(i, c)] * errors[k * d + c]).sum() };
        if lambda < 1.0 {
            let mut w = 0.0;
            for j in 0..steps {
                w = lambda * w + alpha(j);
                amp[(j + 1) * d + i] = w;
            }
        } else {
            let mut w = 0.0;
            for j in (0..steps).rev() {
                w = (w - alpha(j)) / lambda;
                amp[j * d + i] = w;
            }
        }
    }
    let vector = |j: usize| -> Vec<f64> {
        (0..d)
            .map(|r| (0..d).map(|i| v[(r, i)] * amp[j * d + i]).sum())
            .collect()
    };
    let max = if want_max {
        (0..points)
            .map(|j| vector(j).iter().map(|x| x * x).sum::<f64>().sqrt())
            .fold(0.0, f64::max)
    } else {
        0.0
    };
    (vector(anchor), max)
}

/// Tail bound for anchor `c` in a window with `steps` steps.
pub fn truncation_bound(s: &SpectralData, epsilon: f64, steps: usize, c: usize) -> f64 {
    s.eigenvalues()
        .iter()
        .zip(s.projection_norms())
        .map(|(&l, &p)| {
            if l < 1.0 {
                p * l.powi(c as i32) / (1.0 - l)
            } else {
                p * l.powi(-((steps - c) as i32)) / (l - 1.0)
            }
        })
        .sum::<f64>()
        * epsilon
}

/// Shadows `po` with the anchor at its first point.
pub fn shadow(po: &PseudoOrbit, s: &SpectralData) -> Result<ShadowingResult> {
    shadow_at(po, s, 0)
}

/// Shadows `po` with the anchor at `anchor_index`.
pub fn shadow_at(
    po: &PseudoOrbit,
    s: &SpectralData,
    anchor_index: usize,
) -> Result<ShadowingResult> {
    if anchor_index >= po.len() {
        return Err(Error::Argument(format!(
            "anchor index {anchor_index} outside a window of {} points",
            po.len()
        )));
    }
    let consts = shadowing_constants(s);
    consts.check_regime(po.epsilon)?;
    let (w, delta) = corrections(s, &po.errors, anchor_index, true);
    let x = po.points[anchor_index].coords();
    Ok(ShadowingResult {
        anchor: Lift(x.iter().zip(&w).map(|(a, b)| a - b).collect()),
        anchor_index,
        epsilon: po.epsilon,
        delta_realized: delta,
        truncation_bound: truncation_bound(s, po.epsilon, po.len() - 1, anchor_index),
    })
}

/// Outcome of shadowing many seeded noisy orbits of the linear map.
#[derive(Clone, Debug, PartialEq)]
pub struct ShadowingSurvey {
    pub orbits: usize,
    /// Steps in the short window; the long window has twice as many.
    pub steps: usize,
    pub noise: f64,
    pub max_epsilon: f64,
    pub max_delta: f64,
    /// Largest `delta_realized / (kappa eps + truncation_bound)`.
    pub max_bound_ratio: f64,
    /// Orbits with `delta_realized > kappa eps + truncation_bound`.
    pub bound_violations: usize,
    /// Largest anchor gap between the short and the doubled window.
    pub max_window_gap: f64,
    /// Orbits whose window gap exceeds the two truncation bounds.
    pub window_violations: usize,
    /// Largest `delta_realized` over the matching noiseless orbits.
    pub true_orbit_delta: f64,
}

struct OrbitCheck {
    epsilon: f64,
    delta: f64,
    bound: f64,
    gap: f64,
    gap_bound: f64,
    true_delta: f64,
}

fn seeded_orbit(a: &ToralMatrix, seed: u64, index: u64, len: usize, noise: f64) -> Vec<TorusPoint> {
    let d = a.dim();
    let mut rng = indexed_rng(seed, index);
    let mut pts = vec![uniform_point(&mut rng, d)];
    let scale = noise / (d as f64).sqrt();
    for _ in 1..len {
        let next = pts.last().unwrap().apply(a);
        let kick: Vec<f64> = (0..d)
            .map(|_| scale * (2.0 * rng.random::<f64>() - 1.0))
            .collect();
        pts.push(if noise > 0.0 {
            next.translate(&kick, 1.0)
        } else {
            next
        });
    }
    pts
}

/// Shadows `orbits` seeded noisy orbits (per-step noise of norm at most
/// `noise`) with the anchor in the middle of a window of `steps` steps, then
/// again in a window twice as long with the same anchor point, and the
/// noiseless orbits through the same starting points.
pub fn noisy_orbit_survey(
    a: &ToralMatrix,
    s: &SpectralData,
    orbits: usize,
    steps: usize,
    noise: f64,
    seed: u64,
) -> Result<ShadowingSurvey> {
    if orbits == 0 || steps < 2 || steps % 2 != 0 {
        return Err(Error::Argument(
            "need orbits > 0 and an even window of at least 2 steps".into(),
        ));
    }
    if !(noise >= 0.0) {
        return Err(Error::Argument(format!("noise {noise} is negative")));
    }
    let kappa = shadowing_constants(s).kappa;
    let half = steps / 2;
    let rows: Vec<OrbitCheck> = (0..orbits)
        .into_par_iter()
        .map(|i| {
            let pts = seeded_orbit(a, seed, i as u64, 2 * steps + 1, noise);
            let long = PseudoOrbit::new(a, pts.clone())?;
            let short = PseudoOrbit::new(a, pts[half..=half + steps].to_vec())?;
            let rs = shadow_at(&short, s, half)?;
            let rl = shadow_at(&long, s, steps)?;
            let clean = PseudoOrbit::new(a, seeded_orbit(a, seed, i as u64, steps + 1, 0.0))?;
            Ok(OrbitCheck {
                epsilon: rs.epsilon,
                delta: rs.delta_realized,
                bound: kappa * rs.epsilon + rs.truncation_bound,
                gap: coord_distance(rs.point().coords(), rl.point().coords()),
                gap_bound: rs.truncation_bound + rl.truncation_bound,
                true_delta: shadow_at(&clean, s, half)?.delta_realized,
            })
        })
        .collect::<Result<_>>()?;
    let max = |f: fn(&OrbitCheck) -> f64| rows.iter().map(f).fold(0.0, f64::max);
    Ok(ShadowingSurvey {
        orbits,
        steps,
        noise,
        max_epsilon: max(|r| r.epsilon),
        max_delta: max(|r| r.delta),
        max_bound_ratio: max(|r| r.delta / r.bound),
        bound_violations: rows.iter().filter(|r| r.delta > r.bound).count(),
        max_window_gap: max(|r| r.gap),
        window_violations: rows.iter().filter(|r| r.gap > r.gap_bound).count(),
        true_orbit_delta: max(|r| r.true_delta),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{canonical_matrix, spectral_data};
    use crate::torus::{distance, fixed_points, LinearAction};
    use nalgebra::{DMatrix, DVector};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn setup() -> (ToralMatrix, SpectralData) {
        let a = canonical_matrix();
        let s = spectral_data(&a, 1e-12).unwrap();
        (a, s)
    }

    fn orbit(a: &ToralMatrix, x: TorusPoint, n: usize) -> Vec<TorusPoint> {
        let mut out = vec![x];
        for _ in 1..n {
            let next = out.last().unwrap().apply(a);
            out.push(next);
        }
        out
    }

    #[test]
    fn diagonal_kappa() {
        let s =
            SpectralData::from_eigen(vec![(0.5, vec![1.0, 0.0]), (2.0, vec![0.0, 1.0])]).unwrap();
        let c = shadowing_constants(&s);
        assert!((c.kappa - 3.0).abs() < 1e-12);
        assert!((c.expansivity - 0.125).abs() < 1e-12);
    }

    #[test]
    fn kappa_ignores_eigenvector_scale() {
        let s1 =
            SpectralData::from_eigen(vec![(0.5, vec![1.0, 1.0]), (2.0, vec![1.0, -0.5])]).unwrap();
        let s2 = SpectralData::from_eigen(vec![(0.5, vec![-3.0, -3.0]), (2.0, vec![0.2, -0.1])])
            .unwrap();
        let (c1, c2) = (shadowing_constants(&s1), shadowing_constants(&s2));
        assert!((c1.kappa - c2.kappa).abs() < 1e-12);
    }

    #[test]
    fn canonical_constants() {
        let (_, s) = setup();
        let c = shadowing_constants(&s);
        // regression values from the eigendecomposition
        assert!((c.kappa - 5.6736).abs() < 1e-3);
        assert!((c.expansivity - 0.043868).abs() < 1e-5);
        assert!(c.kappa > 0.0 && c.expansivity > 0.0);
    }

    #[test]
    fn true_orbit_shadows_itself() {
        let (a, s) = setup();
        let po = PseudoOrbit::new(&a, orbit(&a, TorusPoint::new(vec![0.3, 0.1, 0.7]), 40)).unwrap();
        assert_eq!(po.epsilon(), 0.0);
        let r = shadow(&po, &s).unwrap();
        assert_eq!(r.delta_realized, 0.0);
        assert_eq!(r.anchor.0, po.points()[0].coords());
    }

    #[test]
    fn constant_orbit_at_fixed_point() {
        let (a, s) = setup();
        for fp in fixed_points(&a).unwrap() {
            let po = PseudoOrbit::new(&a, vec![fp.point.clone(); 30]).unwrap();
            let r = shadow_at(&po, &s, 15).unwrap();
            assert!(distance(&r.point(), &fp.point) < 1e-14);
        }
    }

    // Independent oracle: the shadowing point of a single impulse solves a
    // boundary-value problem with P_s-matching at the left end and
    // P_u-matching at the right end, solved densely with big lifts.
    #[test]
    fn single_impulse_matches_boundary_value_solve() {
        let (a, s) = setup();
        let m = 3usize;
        let x = vec![0.31, 0.47, 0.62];
        let e = vec![2e-4, -1e-4, 3e-4];
        let af = a.to_dmatrix();
        let ainv = a.inverse().to_dmatrix();
        let xv = DVector::from_vec(x.clone());
        let ev = DVector::from_vec(e.clone());
        // lifts of the window ends
        let left = ainv.pow(m as u32) * &xv;
        let right = af.pow(m as u32 - 1) * (&af * &xv + &ev);
        let vinv = s.eigenbasis_inverse();
        let mut rows = DMatrix::zeros(3, 3);
        let mut rhs = DVector::zeros(3);
        let am = af.pow(m as u32);
        let aminv = ainv.pow(m as u32);
        for i in 0..3 {
            let (mat, target) = if i == 0 {
                (&aminv, &left)
            } else {
                (&am, &right)
            };
            let row = vinv.row(i) * mat;
            rows.row_mut(i).copy_from(&row);
            rhs[i] = (vinv.row(i) * target)[0];
        }
        let y = rows.lu().solve(&rhs).unwrap();
        // the pseudo-orbit on the torus
        let mut pts = Vec::new();
        for j in -(m as i32)..=(m as i32) {
            let p = if j <= 0 {
                ainv.pow((-j) as u32) * &xv
            } else {
                af.pow(j as u32 - 1) * (&af * &xv + &ev)
            };
            pts.push(TorusPoint::new(p.iter().copied().collect()));
        }
        let po = PseudoOrbit::new(&a, pts).unwrap();
        let r = shadow_at(&po, &s, m).unwrap();
        let got = r.point();
        let want = TorusPoint::new(y.iter().copied().collect());
        assert!(distance(&got, &want) < r.truncation_bound + 1e-9);
        // closed form: y = x + sum_u P_u e / lambda_u
        let mut cf = xv.clone();
        for i in 1..3 {
            cf += s.projection(i) * &ev / s.eigenvalues()[i];
        }
        assert!(distance(&got, &TorusPoint::new(cf.iter().copied().collect())) < 1e-9);
    }

    fn noisy_orbit(
        a: &ToralMatrix,
        rng: &mut ChaCha8Rng,
        len: usize,
        noise: f64,
    ) -> Vec<TorusPoint> {
        let mut pts = vec![TorusPoint::new(
            (0..3).map(|_| rng.random::<f64>()).collect(),
        )];
        for _ in 1..len {
            let next = pts.last().unwrap().apply(a);
            let n: Vec<f64> = (0..3)
                .map(|_| noise * (2.0 * rng.random::<f64>() - 1.0) / 3f64.sqrt())
                .collect();
            pts.push(next.translate(&n, 1.0));
        }
        pts
    }

    #[test]
    fn noisy_orbits_within_bound() {
        let (a, s) = setup();
        let k = shadowing_constants(&s).kappa;
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..500 {
            let po = PseudoOrbit::new(&a, noisy_orbit(&a, &mut rng, 31, 1e-6)).unwrap();
            let r = shadow_at(&po, &s, 15).unwrap();
            assert!(r.delta_realized <= k * r.epsilon + r.truncation_bound);
            assert!(r.delta_realized > 0.0);
        }
    }

    #[test]
    fn shift_equivariance() {
        let (a, s) = setup();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let pts = noisy_orbit(&a, &mut rng, 42, 1e-5);
        let p1 = PseudoOrbit::new(&a, pts[..41].to_vec()).unwrap();
        let p2 = PseudoOrbit::new(&a, pts[1..].to_vec()).unwrap();
        let r1 = shadow_at(&p1, &s, 20).unwrap();
        let r2 = shadow_at(&p2, &s, 20).unwrap();
        let bound = a.norm2() * r1.truncation_bound + r2.truncation_bound + 1e-12;
        assert!(distance(&r1.point().apply(&a), &r2.point()) < bound);
    }

    #[test]
    fn survey_of_noisy_orbits() {
        let (a, s) = setup();
        let r = noisy_orbit_survey(&a, &s, 200, 40, 1e-6, 3).unwrap();
        assert_eq!(r.bound_violations, 0);
        assert_eq!(r.window_violations, 0);
        assert_eq!(r.true_orbit_delta, 0.0);
        assert!(r.max_epsilon <= 1e-6 && r.max_delta > 0.0);
        assert_eq!(r, noisy_orbit_survey(&a, &s, 200, 40, 1e-6, 3).unwrap());
        assert!(noisy_orbit_survey(&a, &s, 10, 41, 1e-6, 3).is_err());
    }

    #[test]
    fn regime_is_enforced() {
        let (a, s) = setup();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let po = PseudoOrbit::new(&a, noisy_orbit(&a, &mut rng, 10, 0.05)).unwrap();
        assert!(matches!(shadow(&po, &s), Err(Error::ShadowingRegime(_))));
        let one = PseudoOrbit::new(&a, vec![TorusPoint::origin(3)]);
        assert!(one.is_err());
    }
}
