//! The deformed map `g`: a pitchfork of the fixed point `q` along the center
//! direction, realised as a rank-one shear along `v_c` inside a small box
//! around `q`. Outside the box `g` is the linear automorphism.

use std::sync::OnceLock;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::spectral::{SpectralData, ToralMatrix, CENTER};
use crate::torus::{
    apply_linear_into, coord_distance, default_q_index, fixed_points, reduce_coord, wrap_coord,
    LinearAction, ToralMap, TorusPoint,
};

/// Largest dimension supported by the stack buffers of the evaluator.
pub const MAX_DIM: usize = 8;

pub const DEFAULT_RHO: f64 = 0.05;
pub const DEFAULT_B: f64 = 0.5;
/// Center half-width as a fraction of the largest admissible support radius.
/// Small enough that `kappa * sup|g - f_A|` stays below a third of the
/// expansivity constant for the default system.
pub const DEFAULT_TAU_FRACTION: f64 = 0.15;
/// Safety margin applied to the largest support radius.
const SUPPORT_MARGIN: f64 = 0.99;

/// Quintic cutoff: 1 on `[0, 1/2]`, 0 on `[1, inf)`, C^2 in between.
#[inline]
pub fn cutoff(r: f64) -> f64 {
    if r <= 0.5 {
        1.0
    } else if r >= 1.0 {
        0.0
    } else {
        let u = 2.0 * r - 1.0;
        1.0 - u * u * u * (10.0 + u * (-15.0 + 6.0 * u))
    }
}

#[inline]
pub fn cutoff_derivative(r: f64) -> f64 {
    if r <= 0.5 || r >= 1.0 {
        0.0
    } else {
        let u = 2.0 * r - 1.0;
        let w = u * (1.0 - u);
        -60.0 * w * w
    }
}

/// Constants of the cutoff profile, computed once.
#[derive(Clone, Copy, Debug)]
pub struct ProfileConstants {
    /// `max r * cutoff(r)`, so that `sup |s| = tau * max_r_sigma`.
    pub max_r_sigma: f64,
    /// `M_1 = max |r * cutoff'(r)|`.
    pub m1: f64,
    /// `min (cutoff(r) + r cutoff'(r))`, the most negative slope of `s`.
    pub min_ds: f64,
}

fn golden_max(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..200 {
        let a = hi - g * (hi - lo);
        let b = lo + g * (hi - lo);
        if f(a) < f(b) {
            lo = a;
        } else {
            hi = b;
        }
    }
    f(0.5 * (lo + hi))
}

pub fn profile_constants() -> ProfileConstants {
    static CELL: OnceLock<ProfileConstants> = OnceLock::new();
    *CELL.get_or_init(|| ProfileConstants {
        max_r_sigma: golden_max(|r| r * cutoff(r), 0.5, 1.0),
        m1: golden_max(|r| -r * cutoff_derivative(r), 0.5, 1.0),
        min_ds: -golden_max(|r| -(cutoff(r) + r * cutoff_derivative(r)), 0.5, 1.0),
    })
}

/// Parameters of the deformation.
#[derive(Clone, Debug, PartialEq)]
pub struct ManeParams {
    pub q: TorusPoint,
    pub rho: f64,
    pub b: f64,
    pub tau: f64,
    pub sigma_perp: f64,
    pub gamma: f64,
}

/// Human-level settings from which [`ManeParams`] are derived.
#[derive(Clone, Debug, PartialEq)]
pub struct ManeSettings {
    /// Index into [`fixed_points`]; `None` picks the nonzero fixed point of
    /// smallest positive first coordinate.
    pub q_index: Option<usize>,
    pub rho: f64,
    pub b: f64,
    pub tau_fraction: f64,
    pub gamma: f64,
}

impl Default for ManeSettings {
    fn default() -> Self {
        Self {
            q_index: None,
            rho: DEFAULT_RHO,
            b: DEFAULT_B,
            tau_fraction: DEFAULT_TAU_FRACTION,
            gamma: 0.0,
        }
    }
}

/// Largest `tau = sigma_perp` for which the support box fits in `B(q, rho/2)`.
pub fn max_support_radius(s: &SpectralData, rho: f64) -> f64 {
    let v_norm = s.eigenbasis().singular_values().max();
    SUPPORT_MARGIN * rho / (2.0 * 2f64.sqrt() * v_norm)
}

impl ManeParams {
    /// Derives parameters: `sigma_perp` is the largest admissible radius and
    /// `tau` the requested fraction of it.
    pub fn from_settings(a: &ToralMatrix, s: &SpectralData, set: &ManeSettings) -> Result<Self> {
        if !(set.tau_fraction > 0.0 && set.tau_fraction <= 1.0) {
            return Err(Error::Argument(format!(
                "tau fraction {} must lie in (0, 1]",
                set.tau_fraction
            )));
        }
        if !(set.rho > 0.0) {
            return Err(Error::Argument(format!(
                "rho = {} must be positive",
                set.rho
            )));
        }
        let fps = fixed_points(a)?;
        let idx = match set.q_index {
            Some(i) if i < fps.len() => i,
            Some(i) => {
                return Err(Error::Argument(format!(
                    "fixed point index {i} out of range (the matrix has {} fixed points)",
                    fps.len()
                )))
            }
            None => default_q_index(&fps).ok_or_else(|| {
                Error::Argument("the matrix has no nonzero fixed point to deform".into())
            })?,
        };
        let r = max_support_radius(s, set.rho);
        Ok(Self {
            q: fps[idx].point.clone(),
            rho: set.rho,
            b: set.b,
            tau: set.tau_fraction * r,
            sigma_perp: r,
            gamma: set.gamma,
        })
    }

    /// Default parameters for a system.
    pub fn defaults(a: &ToralMatrix, s: &SpectralData) -> Result<Self> {
        Self::from_settings(a, s, &ManeSettings::default())
    }

    /// A nearby family member: `b`, `tau` and `sigma_perp` jittered within
    /// the budget `gamma`. The center foliation stays linear and the support
    /// only shrinks, so every geometric check of `self` carries over.
    pub fn family_member(&self, seed: u64) -> ManeParams {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let shrink = self.gamma.min(0.5);
        let mut p = self.clone();
        p.b = self.b - self.gamma * rng.random::<f64>();
        p.tau = self.tau * (1.0 - shrink * rng.random::<f64>());
        p.sigma_perp = self.sigma_perp * (1.0 - shrink * rng.random::<f64>());
        p
    }
}

/// Ball measure and the center-expansion inequality.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MeasureStats {
    pub m: f64,
    pub radius_used: f64,
    pub inequality_value: f64,
    pub slack_sigma: f64,
}

impl MeasureStats {
    /// `(1 - m - sigma) ln a + (2m + sigma) ln b`.
    pub fn log_rate(&self, ln_a: f64, ln_b: f64, sigma: f64) -> f64 {
        (1.0 - self.m - sigma) * ln_a + (2.0 * self.m + sigma) * ln_b
    }
}

/// Volume of the Euclidean unit ball in dimension `d`.
pub fn unit_ball_volume(d: usize) -> f64 {
    let pi = std::f64::consts::PI;
    let (mut v, start) = if d % 2 == 0 { (1.0, 2) } else { (2.0, 3) };
    let mut k = start;
    while k <= d {
        v *= 2.0 * pi / k as f64;
        k += 2;
    }
    v
}

pub fn ball_measure(d: usize, radius: f64) -> Result<f64> {
    if !(radius > 0.0 && radius < 0.5) {
        return Err(Error::Geometry(format!(
            "ball radius {radius} must lie in (0, 1/2) to embed in the torus"
        )));
    }
    Ok(unit_ball_volume(d) * radius.powi(d as i32))
}

/// `m = vol B(radius)`, the value `lambda_c^(1-m) b^(2m)` and the largest
/// slack `sigma` keeping `lambda_c^(1-m-sigma) b^(2m+sigma) > 1`.
pub fn ball_measure_and_inequality(
    s: &SpectralData,
    params: &ManeParams,
    radius: f64,
) -> Result<MeasureStats> {
    let m = ball_measure(s.dim(), radius)?;
    let (la, lb) = (s.lambda_c().ln(), params.b.ln());
    let stats = MeasureStats {
        m,
        radius_used: radius,
        inequality_value: ((1.0 - m) * la + 2.0 * m * lb).exp(),
        slack_sigma: 0.0,
    };
    let f = |sigma: f64| stats.log_rate(la, lb, sigma);
    let hi_end = 1.0 - m;
    let slack = if f(0.0) <= 0.0 {
        0.0
    } else if f(hi_end) > 0.0 {
        hi_end
    } else {
        let (mut lo, mut hi) = (0.0, hi_end);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    };
    Ok(MeasureStats {
        slack_sigma: slack,
        ..stats
    })
}

/// Minimum center stretch outside and inside `B(q, rho)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CenterExtremes {
    pub a_g: f64,
    pub b_g: f64,
}

/// The three fixed points on the center leaf through `q`.
#[derive(Clone, Debug)]
pub struct Pitchfork {
    pub t_star: f64,
    /// `q - t* v_c`, `q`, `q + t* v_c`.
    pub points: [TorusPoint; 3],
    /// Center stretch at each point.
    pub stretches: [f64; 3],
}

/// The deformed diffeomorphism.
#[derive(Clone, Debug)]
pub struct ManeMap {
    a: ToralMatrix,
    a_f: Vec<f64>,
    spectral: SpectralData,
    params: ManeParams,
    d: usize,
    lambda_c: f64,
    coef: f64,
    vc: Vec<f64>,
    v_inv: Vec<f64>,
    q: Vec<f64>,
    profile: ProfileConstants,
}

impl ManeMap {
    /// Builds and validates the map.
    pub fn build(a: &ToralMatrix, s: &SpectralData, params: ManeParams) -> Result<Self> {
        let d = a.dim();
        if d != s.dim() || d != params.q.dim() {
            return Err(Error::Argument(
                "dimension mismatch between matrix, spectrum and q".into(),
            ));
        }
        if d > MAX_DIM {
            return Err(Error::Argument(format!("dimension {d} exceeds {MAX_DIM}")));
        }
        let lambda_c = s.lambda_c();
        let zero = params.b == lambda_c;
        if !zero && !(params.b > 0.0 && params.b < 1.0) {
            return Err(Error::Argument(format!(
                "b = {} must lie in (0, 1) (or equal lambda_c for the unperturbed map)",
                params.b
            )));
        }
        if !(params.rho > 0.0 && params.tau > 0.0 && params.sigma_perp > 0.0) {
            return Err(Error::Argument(
                "rho, tau and sigma_perp must be positive".into(),
            ));
        }
        if !(params.gamma >= 0.0) || (params.gamma > 0.0 && params.gamma >= params.b) {
            return Err(Error::Argument(format!(
                "gamma = {} must be nonnegative and below b",
                params.gamma
            )));
        }
        let moved = coord_distance(params.q.apply(a).coords(), params.q.coords());
        if moved > 1e-12 {
            return Err(Error::Argument(format!(
                "q is not fixed by the matrix (moves by {moved:e})"
            )));
        }
        let v_norm = s.eigenbasis().singular_values().max();
        let reach = v_norm * params.tau.hypot(params.sigma_perp);
        if reach >= params.rho / 2.0 {
            return Err(Error::Geometry(format!(
                "support box reaches {reach:.6} from q, not inside B(q, rho/2) = {:.6}",
                params.rho / 2.0
            )));
        }
        let stats = ball_measure_and_inequality(s, &params, 3.0 * params.rho)?;
        if !(stats.inequality_value > 1.0) {
            return Err(Error::Inequality {
                value: stats.inequality_value,
                m: stats.m,
            });
        }
        let map = Self {
            a: a.clone(),
            a_f: a.entries().iter().map(|&e| e as f64).collect(),
            spectral: s.clone(),
            d,
            lambda_c,
            coef: lambda_c - params.b,
            vc: s.center_direction(),
            v_inv: s.eigenbasis_inverse().transpose().as_slice().to_vec(),
            q: params.q.coords().to_vec(),
            params,
            profile: profile_constants(),
        };
        map.self_check()?;
        Ok(map)
    }

    /// Deterministic spot check of foliation invariance and stretch bounds.
    fn self_check(&self) -> Result<()> {
        let (lo, hi) = self.center_stretch_bounds();
        let mut x = vec![0.0; self.d];
        let mut gx = vec![0.0; self.d];
        let mut y = vec![0.0; self.d];
        let mut gy = vec![0.0; self.d];
        for k in 0..256usize {
            // spread samples over the support box
            let t = (k as f64 + 0.5) / 256.0;
            for i in 0..self.d {
                let phase = ((k * (i + 3) * 7919) % 256) as f64 / 256.0;
                x[i] = reduce_coord(self.q[i] + self.params.rho * (phase - 0.5) * 0.5);
            }
            let h = self.center_stretch(&x);
            if h < lo - 1e-12 || h > hi + 1e-12 {
                return Err(Error::Numeric(format!(
                    "center stretch {h} outside [{lo}, {hi}]"
                )));
            }
            let dt = self.params.tau * (t - 0.5);
            for i in 0..self.d {
                y[i] = reduce_coord(x[i] + dt * self.vc[i]);
            }
            self.step(&x, &mut gx);
            self.step(&y, &mut gy);
            let diff: Vec<f64> = gy.iter().zip(&gx).map(|(a, b)| wrap_coord(a - b)).collect();
            let along: f64 = diff.iter().zip(&self.vc).map(|(a, b)| a * b).sum();
            let off = diff
                .iter()
                .zip(&self.vc)
                .map(|(a, b)| (a - along * b).powi(2))
                .sum::<f64>()
                .sqrt();
            if off > 1e-12 {
                return Err(Error::Numeric(format!(
                    "center line not preserved (off by {off:e})"
                )));
            }
        }
        Ok(())
    }

    pub fn matrix(&self) -> &ToralMatrix {
        &self.a
    }

    pub fn spectral(&self) -> &SpectralData {
        &self.spectral
    }

    pub fn params(&self) -> &ManeParams {
        &self.params
    }

    pub fn profile(&self) -> ProfileConstants {
        self.profile
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    /// `lambda_c - b`, the perturbation coefficient.
    pub fn coefficient(&self) -> f64 {
        self.coef
    }

    pub fn center_direction(&self) -> &[f64] {
        &self.vc
    }

    pub fn q(&self) -> &[f64] {
        &self.q
    }

    /// `sup |g - f_A| = (lambda_c - b) tau max(r sigma(r))`: every g-orbit is
    /// an epsilon-chain for the linear map with this epsilon.
    pub fn perturbation_sup(&self) -> f64 {
        self.coef * self.params.tau * self.profile.max_r_sigma
    }

    /// Analytic range `[b, lambda_c + (lambda_c - b) M_1]` of the center stretch.
    pub fn center_stretch_bounds(&self) -> (f64, f64) {
        (
            self.lambda_c - self.coef,
            self.lambda_c + self.coef * self.profile.m1,
        )
    }

    /// Smallest unstable eigenvalue over the largest center stretch.
    pub fn domination_ratio(&self) -> f64 {
        let lu = self
            .spectral
            .lambda_u()
            .first()
            .copied()
            .unwrap_or(f64::INFINITY);
        lu / self.center_stretch_bounds().1
    }

    #[inline]
    fn s(&self, t: f64) -> f64 {
        t * cutoff(t.abs() / self.params.tau)
    }

    #[inline]
    fn ds(&self, t: f64) -> f64 {
        let r = t.abs() / self.params.tau;
        cutoff(r) + r * cutoff_derivative(r)
    }

    /// Offset from `q` and its eigen-coordinates.
    #[inline]
    fn local(&self, x: &[f64]) -> ([f64; MAX_DIM], [f64; MAX_DIM]) {
        let d = self.d;
        let mut u = [0.0; MAX_DIM];
        let mut xi = [0.0; MAX_DIM];
        for i in 0..d {
            u[i] = wrap_coord(x[i] - self.q[i]);
        }
        for k in 0..d {
            xi[k] = (0..d).map(|j| self.v_inv[k * d + j] * u[j]).sum();
        }
        (u, xi)
    }

    #[inline]
    fn perp_radius(&self, xi: &[f64]) -> f64 {
        xi[..self.d]
            .iter()
            .enumerate()
            .filter(|(k, _)| *k != CENTER)
            .map(|(_, v)| v * v)
            .sum::<f64>()
            .sqrt()
    }

    #[inline]
    fn in_support(&self, xi_c: f64, r_perp: f64) -> bool {
        self.coef != 0.0 && xi_c.abs() < self.params.tau && r_perp < self.params.sigma_perp
    }

    /// `g(x)` into `out`.
    #[inline]
    pub fn step_into(&self, x: &[f64], out: &mut [f64]) {
        let (u, xi) = self.local(x);
        let rp = self.perp_radius(&xi);
        let xc = xi[CENTER];
        if !self.in_support(xc, rp) {
            apply_linear_into(&self.a, x, out);
            return;
        }
        let pert = self.coef * self.s(xc) * cutoff(rp / self.params.sigma_perp);
        let d = self.d;
        for i in 0..d {
            let au: f64 = (0..d).map(|j| self.a_f[i * d + j] * u[j]).sum();
            out[i] = reduce_coord(self.q[i] + au - pert * self.vc[i]);
        }
    }

    pub fn evaluate(&self, x: &TorusPoint) -> TorusPoint {
        let mut out = vec![0.0; self.d];
        self.step_into(x.coords(), &mut out);
        TorusPoint::new(out)
    }

    /// Image and exact Jacobian.
    pub fn evaluate_with_derivative(&self, x: &TorusPoint) -> (TorusPoint, DMatrix<f64>) {
        let d = self.d;
        let image = self.evaluate(x);
        let mut jac = DMatrix::from_row_slice(d, d, &self.a_f);
        let (_, xi) = self.local(x.coords());
        let rp = self.perp_radius(&xi);
        let xc = xi[CENTER];
        if !self.in_support(xc, rp) {
            return (image, jac);
        }
        let sp = self.params.sigma_perp;
        let chi = cutoff(rp / sp);
        let dchi = cutoff_derivative(rp / sp) / sp;
        let s = self.s(xc);
        // gradient of s(xi_c) chi(|xi_perp|) in eigen-coordinates
        let mut grad = [0.0; MAX_DIM];
        for k in 0..d {
            grad[k] = if k == CENTER {
                self.ds(xc) * chi
            } else if rp > 0.0 {
                s * dchi * xi[k] / rp
            } else {
                0.0
            };
        }
        for j in 0..d {
            let w: f64 = (0..d).map(|k| grad[k] * self.v_inv[k * d + j]).sum();
            for i in 0..d {
                jac[(i, j)] -= self.coef * self.vc[i] * w;
            }
        }
        (image, jac)
    }

    /// `|Dg_x v_c|`, the stretch along the (invariant) center direction.
    #[inline]
    pub fn center_stretch(&self, x: &[f64]) -> f64 {
        let (_, xi) = self.local(x);
        let rp = self.perp_radius(&xi);
        let xc = xi[CENTER];
        if !self.in_support(xc, rp) {
            return self.lambda_c;
        }
        self.lambda_c - self.coef * self.ds(xc) * cutoff(rp / self.params.sigma_perp)
    }

    /// The center map `h(t) = lambda_c t - (lambda_c - b) s(t)` on the leaf through `q`.
    #[inline]
    pub fn leaf_map(&self, t: f64) -> f64 {
        self.lambda_c * t - self.coef * self.s(t)
    }

    /// Image of the leaf offsets `offsets` (relative to the base point `x`)
    /// under `g`, returned relative to `g(x)`. Uses the closed form along the
    /// center line, so no torus roundoff enters the offsets.
    pub fn leaf_offsets_step(&self, x: &[f64], offsets: &mut [f64]) {
        let (_, xi) = self.local(x);
        let rp = self.perp_radius(&xi);
        let xc = xi[CENTER];
        let chi = if self.coef != 0.0 && rp < self.params.sigma_perp {
            cutoff(rp / self.params.sigma_perp)
        } else {
            0.0
        };
        let base = self.s(xc);
        for t in offsets.iter_mut() {
            *t = self.lambda_c * *t - self.coef * chi * (self.s(xc + *t) - base);
        }
    }

    /// `g^{-1}(y)`: start from `A^{-1} y`, then solve the one-dimensional
    /// center equation by safeguarded Newton.
    pub fn inverse_into(&self, inv: &ToralMatrix, y: &[f64], out: &mut [f64]) -> Result<()> {
        apply_linear_into(inv, y, out);
        let (u, xi) = self.local(out);
        let rp = self.perp_radius(&xi);
        let xc = xi[CENTER];
        if !self.in_support(xc, rp) {
            return Ok(());
        }
        let chi = cutoff(rp / self.params.sigma_perp);
        // eta solves lambda_c eta - coef chi s(eta) = lambda_c xc
        let target = self.lambda_c * xc;
        let f = |e: f64| self.lambda_c * e - self.coef * chi * self.s(e) - target;
        let tau = self.params.tau;
        let (mut lo, mut hi) = (xc - tau, xc + tau);
        let mut eta = xc;
        let mut converged = false;
        for _ in 0..100 {
            let fe = f(eta);
            if fe == 0.0 {
                converged = true;
                break;
            }
            if fe < 0.0 {
                lo = eta;
            } else {
                hi = eta;
            }
            let df = self.lambda_c - self.coef * chi * self.ds(eta);
            let mut next = eta - fe / df;
            if !(next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
            if (next - eta).abs() <= 1e-17 + 1e-15 * eta.abs() {
                eta = next;
                converged = true;
                break;
            }
            eta = next;
        }
        if !converged {
            return Err(Error::Inversion(format!(
                "center Newton iteration did not converge at {:?}",
                &y[..self.d]
            )));
        }
        let shift = eta - xc;
        for i in 0..self.d {
            out[i] = reduce_coord(self.q[i] + u[i] + shift * self.vc[i]);
        }
        Ok(())
    }

    pub fn inverse(&self, y: &TorusPoint) -> Result<TorusPoint> {
        let mut out = vec![0.0; self.d];
        self.inverse_into(&self.a.inverse(), y.coords(), &mut out)?;
        Ok(TorusPoint::new(out))
    }

    /// `t*` with `cutoff(t*/tau) = (lambda_c - 1)/(lambda_c - b)`, bisected to
    /// the last representable bit.
    pub fn pitchfork_offset(&self) -> Result<f64> {
        if !(self.params.b < 1.0) {
            return Err(Error::Profile(format!(
                "b = {} >= 1: the center leaf has no pitchfork",
                self.params.b
            )));
        }
        let target = (self.lambda_c - 1.0) / self.coef;
        let (mut lo, mut hi) = (0.5, 1.0);
        if !(cutoff(lo) > target && cutoff(hi) < target) {
            return Err(Error::Profile("pitchfork root not bracketed".into()));
        }
        loop {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if cutoff(mid) > target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi) * self.params.tau)
    }

    /// Fixed points on the center leaf through `q`.
    pub fn center_profile_fixed_points(&self) -> Result<Pitchfork> {
        let t = self.pitchfork_offset()?;
        let q = TorusPoint::new(self.q.clone());
        let points = [
            q.translate(&self.vc, -t),
            q.clone(),
            q.translate(&self.vc, t),
        ];
        let mut stretches = [0.0; 3];
        for (k, p) in points.iter().enumerate() {
            let moved = coord_distance(self.evaluate(p).coords(), p.coords());
            if moved > 1e-10 {
                return Err(Error::Profile(format!(
                    "pitchfork point {k} moves by {moved:e}"
                )));
            }
            stretches[k] = self.center_stretch(p.coords());
        }
        Ok(Pitchfork {
            t_star: t,
            points,
            stretches,
        })
    }

    /// Minimum center stretch over low-discrepancy samples inside and outside
    /// `B(q, rho)`; `q` itself is always included in the inside sample.
    pub fn center_derivative_extremes(&self, samples: usize) -> Result<CenterExtremes> {
        if samples < 1000 {
            return Err(Error::Argument(format!(
                "need at least 1000 samples, got {samples}"
            )));
        }
        let d = self.d;
        let alpha = kronecker_alphas(d);
        let rho = self.params.rho;
        let mut b_g = self.center_stretch(&self.q);
        let mut a_g = f64::INFINITY;
        let (mut inside, mut outside) = (0, 0);
        let mut x = vec![0.0; d];
        let mut n = 0u64;
        while inside < samples || outside < samples {
            n += 1;
            let z: Vec<f64> = alpha.iter().map(|a| (0.5 + n as f64 * a).fract()).collect();
            if inside < samples {
                let w: Vec<f64> = z.iter().map(|c| 2.0 * c - 1.0).collect();
                if w.iter().map(|c| c * c).sum::<f64>() < 1.0 {
                    for i in 0..d {
                        x[i] = reduce_coord(self.q[i] + rho * w[i]);
                    }
                    b_g = b_g.min(self.center_stretch(&x));
                    inside += 1;
                }
            }
            if outside < samples && coord_distance(&z, &self.q) >= rho {
                a_g = a_g.min(self.center_stretch(&z));
                outside += 1;
            }
        }
        Ok(CenterExtremes { a_g, b_g })
    }
}

/// Additive recurrence constants `phi_d^{-k}` of the R_d sequence.
fn kronecker_alphas(d: usize) -> Vec<f64> {
    // phi_d is the positive root of x^(d+1) = x + 1
    let mut phi = 2.0f64;
    for _ in 0..100 {
        phi = (1.0 + phi).powf(1.0 / (d as f64 + 1.0));
    }
    (1..=d).map(|k| phi.powi(-(k as i32))).collect()
}

impl ToralMap for ManeMap {
    fn dim(&self) -> usize {
        self.d
    }

    fn step(&self, x: &[f64], out: &mut [f64]) {
        self.step_into(x, out)
    }
}
