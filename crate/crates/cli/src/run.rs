//! Experiment pipelines. Each command computes its results in memory and
//! returns the files to write plus a JSON fragment for the summary.

use std::time::Instant;

use clap::ValueEnum;
use manelab_core::ergodic::center_expansion_bound;
use manelab_core::shadowing::truncation_bound;
use manelab_core::spectral::is_admissible;
use manelab_core::torus::{default_q_index, LinearAction};
use manelab_core::{
    birkhoff_indicator_average, center_expansion_exponent, companion_matrix, entropy_estimate,
    fixed_points, indexed_rng, ks_uniform, linear_entropy, matrix_power, noisy_orbit_survey,
    sample_mme, search_admissible_polynomials, shadowing_constants, spectral_data, uniform_point,
    EntropyEstimate, Error, FixedPoint, IntPolynomial, ManeMap, ManeParams, ManeSettings,
    SemiconjugacyEvaluator, SpectralData, Start, ToralMatrix, TorusPoint,
};
use rayon::prelude::*;
use serde_json::{json, Map, Value};

use crate::config::{BirkhoffStart, ExperimentConfig};
use crate::report::{num, plot_script, Csv, OutputFile};

const SPECTRAL_TOL: f64 = 1e-12;
/// Fixed points listed in the summary; the count is always reported.
const LISTED_FIXED_POINTS: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Command {
    Search,
    Spectral,
    Build,
    Shadow,
    Pi,
    Fibers,
    Entropy,
    Birkhoff,
    Exponent,
    Mme,
    All,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Self::Search => "search",
            Self::Spectral => "spectral",
            Self::Build => "build",
            Self::Shadow => "shadow",
            Self::Pi => "pi",
            Self::Fibers => "fibers",
            Self::Entropy => "entropy",
            Self::Birkhoff => "birkhoff",
            Self::Exponent => "exponent",
            Self::Mme => "mme",
            Self::All => "all",
        }
    }

    fn steps(self) -> Vec<Command> {
        use Command::*;
        match self {
            All => vec![
                Search, Spectral, Build, Shadow, Pi, Fibers, Entropy, Birkhoff, Exponent, Mme,
            ],
            c => vec![c],
        }
    }

    fn needs_map(self) -> bool {
        !matches!(self, Self::Search | Self::Spectral)
    }
}

/// A failed run: exit code and a message naming the module.
#[derive(Debug)]
pub struct RunError {
    pub code: i32,
    pub message: String,
}

impl RunError {
    pub fn config(message: impl Into<String>) -> Self {
        Self {
            code: 2,
            message: message.into(),
        }
    }
}

/// Argument errors are configuration errors; everything else is numeric.
fn in_module(module: &'static str) -> impl Fn(Error) -> RunError {
    move |e| RunError {
        code: if matches!(e, Error::Argument(_)) {
            2
        } else {
            3
        },
        message: format!("{module}: {e}"),
    }
}

type Res<T> = Result<T, RunError>;

/// Files and summary of a finished run.
pub struct Outcome {
    pub files: Vec<OutputFile>,
    pub summary: Value,
}

/// Shared state: the matrix, its spectrum and, for most commands, the map.
struct System {
    poly: IntPolynomial,
    a: ToralMatrix,
    s: SpectralData,
    fixed: Vec<FixedPoint>,
    g: Option<Built>,
}

struct Built {
    g: ManeMap,
    q_index: usize,
}

impl System {
    fn new(cfg: &ExperimentConfig) -> Res<Self> {
        let poly = IntPolynomial::new(cfg.system.poly.clone()).map_err(in_module("spectral"))?;
        let c = companion_matrix(&poly).map_err(in_module("spectral"))?;
        let a = matrix_power(&c, cfg.system.power).map_err(in_module("spectral"))?;
        let s = spectral_data(&a, SPECTRAL_TOL).map_err(in_module("spectral"))?;
        let fixed = fixed_points(&a).map_err(in_module("torus"))?;
        Ok(Self {
            poly,
            a,
            s,
            fixed,
            g: None,
        })
    }

    fn build(&mut self, cfg: &ExperimentConfig) -> Res<()> {
        let m = &cfg.mane;
        let settings = ManeSettings {
            q_index: m.q_index,
            rho: m.rho,
            b: m.b,
            tau_fraction: m.tau_fraction,
            gamma: m.gamma,
        };
        let params =
            ManeParams::from_settings(&self.a, &self.s, &settings).map_err(in_module("mane"))?;
        let q_index = match m.q_index {
            Some(i) => i,
            None => {
                default_q_index(&self.fixed).expect("parameters were derived from a fixed point")
            }
        };
        let g = ManeMap::build(&self.a, &self.s, params).map_err(in_module("mane"))?;
        self.g = Some(Built { g, q_index });
        Ok(())
    }

    fn map(&self) -> &ManeMap {
        &self
            .g
            .as_ref()
            .expect("map is built before map pipelines")
            .g
    }

    fn evaluator(&self, window: usize) -> Res<SemiconjugacyEvaluator> {
        SemiconjugacyEvaluator::new(self.map().clone(), window).map_err(in_module("semiconj"))
    }

    fn q(&self) -> &TorusPoint {
        &self.map().params().q
    }

    /// The unperturbed member of the family, `b = lambda_c`.
    fn linear_member(&self) -> Res<ManeMap> {
        let mut p = self.map().params().clone();
        p.b = self.s.lambda_c();
        p.gamma = 0.0;
        ManeMap::build(&self.a, &self.s, p).map_err(in_module("mane"))
    }
}

fn coords_json(x: &TorusPoint) -> Value {
    json!(x.coords())
}

fn coord_header(d: usize) -> Vec<String> {
    (1..=d).map(|i| format!("x{i}")).collect()
}

fn system_json(sys: &System, cfg: &ExperimentConfig) -> Value {
    json!({
        "poly": cfg.system.poly,
        "polynomial": sys.poly.to_string(),
        "power": cfg.system.power,
        "dim": sys.a.dim(),
        "matrix": sys.a.rows(),
    })
}

fn constants_json(sys: &System, cfg: &ExperimentConfig) -> Value {
    let sc = shadowing_constants(&sys.s);
    let mut c = Map::new();
    c.insert("kappa".into(), json!(sc.kappa));
    c.insert("expansivity".into(), json!(sc.expansivity));
    c.insert("max_epsilon".into(), json!(sc.max_epsilon()));
    c.insert("eigenvalues".into(), json!(sys.s.eigenvalues()));
    c.insert("entropy".into(), json!(linear_entropy(&sys.s)));
    if let Some(b) = &sys.g {
        let g = &b.g;
        let p = g.params();
        let eps = g.perturbation_sup();
        let n = cfg.shadow.window;
        c.insert("epsilon".into(), json!(eps));
        c.insert("delta".into(), json!(sc.kappa * eps));
        c.insert("window".into(), json!(n));
        c.insert(
            "truncation_bound".into(),
            json!(truncation_bound(&sys.s, eps, 2 * n, n)),
        );
        if let Ok(st) = manelab_core::ball_measure_and_inequality(&sys.s, p, 3.0 * p.rho) {
            c.insert("m".into(), json!(st.m));
            c.insert("inequality_value".into(), json!(st.inequality_value));
            c.insert("slack_sigma".into(), json!(st.slack_sigma));
        }
        if let Ok(t) = g.pitchfork_offset() {
            c.insert("t_star".into(), json!(t));
        }
        c.insert("q".into(), coords_json(&p.q));
        c.insert("q_index".into(), json!(b.q_index));
        c.insert("b".into(), json!(p.b));
        c.insert("rho".into(), json!(p.rho));
        c.insert("tau".into(), json!(p.tau));
        c.insert("sigma_perp".into(), json!(p.sigma_perp));
    }
    Value::Object(c)
}

/// Runs a command and assembles the summary.
pub fn run(cmd: Command, cfg: &ExperimentConfig, plot: bool) -> Res<Outcome> {
    let mut sys = System::new(cfg)?;
    if cmd.steps().iter().any(|c| c.needs_map()) {
        sys.build(cfg)?;
    }
    let mut files = Vec::new();
    let mut results = Map::new();
    let mut timings = Map::new();
    for step in cmd.steps() {
        let start = Instant::now();
        let (value, mut out) = match step {
            Command::Search => search(cfg)?,
            Command::Spectral => spectral(&sys)?,
            Command::Build => build(&sys)?,
            Command::Shadow => shadow(&sys, cfg)?,
            Command::Pi => pi(&sys, cfg)?,
            Command::Fibers => fibers(&sys, cfg)?,
            Command::Entropy => entropy(&sys, cfg)?,
            Command::Birkhoff => birkhoff(&sys, cfg)?,
            Command::Exponent => exponent(&sys, cfg)?,
            Command::Mme => mme(&sys, cfg)?,
            Command::All => unreachable!("expanded into steps"),
        };
        timings.insert(step.name().into(), json!(start.elapsed().as_secs_f64()));
        results.insert(step.name().into(), value);
        if plot {
            let scripts: Vec<OutputFile> =
                out.iter().filter_map(|f| plot_script(&f.name)).collect();
            out.extend(scripts);
        }
        files.extend(out);
    }
    let summary = json!({
        "tool": { "name": "manelab", "version": env!("CARGO_PKG_VERSION") },
        "command": cmd.name(),
        "config": cfg,
        "system": system_json(&sys, cfg),
        "constants": constants_json(&sys, cfg),
        "results": results,
        "timings": timings,
    });
    files.push(OutputFile {
        name: "summary.json".into(),
        bytes: (serde_json::to_string_pretty(&summary).expect("summary serializes") + "\n")
            .into_bytes(),
    });
    Ok(Outcome { files, summary })
}

type Step = Res<(Value, Vec<OutputFile>)>;

fn search(cfg: &ExperimentConfig) -> Step {
    let (d, bound) = (cfg.system.search_degree, cfg.system.search_bound);
    let found = search_admissible_polynomials(d, bound).map_err(in_module("spectral"))?;
    let coeffs: Vec<&[i64]> = found.iter().map(|p| p.coeffs()).collect();
    let all_admissible = found.iter().all(|p| {
        is_admissible(p)
            && companion_matrix(p)
                .and_then(|c| spectral_data(&c, SPECTRAL_TOL))
                .is_ok()
    });
    Ok((
        json!({
            "degree": d,
            "bound": bound,
            "count": found.len(),
            "polynomials": coeffs,
            "contains_configured": coeffs.contains(&cfg.system.poly.as_slice()),
            "all_admissible": all_admissible,
        }),
        Vec::new(),
    ))
}

fn spectral(sys: &System) -> Step {
    let s = &sys.s;
    let h = linear_entropy(s);
    let listed: Vec<Value> = sys
        .fixed
        .iter()
        .take(LISTED_FIXED_POINTS)
        .map(|p| json!({ "num": p.exact.num, "den": p.exact.den, "point": coords_json(&p.point) }))
        .collect();
    let max_move = sys
        .fixed
        .iter()
        .map(|p| manelab_core::distance(&p.point.apply(&sys.a), &p.point))
        .fold(0.0, f64::max);
    Ok((
        json!({
            "eigenvalues": s.eigenvalues(),
            "entropy": h,
            "entropy_identity_gap": (h + s.lambda_s().ln()).abs(),
            "lambda_s": s.lambda_s(),
            "lambda_c": s.lambda_c(),
            "condition_number": s.condition_number(),
            "determinant": sys.a.determinant().to_string(),
            "fixed_point_count": sys.fixed.len(),
            "fixed_point_max_move": max_move,
            "fixed_points": listed,
        }),
        Vec::new(),
    ))
}

fn build(sys: &System) -> Step {
    let g = sys.map();
    let p = g.params();
    let fork = g.center_profile_fixed_points().map_err(in_module("mane"))?;
    let (_, _, ext, st) = center_expansion_bound(g).map_err(in_module("ergodic"))?;
    let (lo, hi) = g.center_stretch_bounds();
    Ok((
        json!({
            "params": {
                "q": coords_json(&p.q),
                "rho": p.rho,
                "b": p.b,
                "tau": p.tau,
                "sigma_perp": p.sigma_perp,
                "gamma": p.gamma,
            },
            "pitchfork": {
                "t_star": fork.t_star,
                "points": fork.points.iter().map(coords_json).collect::<Vec<_>>(),
                "stretches": fork.stretches,
            },
            "measure": {
                "radius": st.radius_used,
                "m": st.m,
                "inequality_value": st.inequality_value,
                "slack_sigma": st.slack_sigma,
            },
            "extremes": { "a_g": ext.a_g, "b_g": ext.b_g },
            "perturbation_sup": g.perturbation_sup(),
            "center_stretch_bounds": [lo, hi],
            "domination_ratio": g.domination_ratio(),
        }),
        Vec::new(),
    ))
}

fn shadow(sys: &System, cfg: &ExperimentConfig) -> Step {
    let sh = &cfg.shadow;
    let r = noisy_orbit_survey(
        &sys.a,
        &sys.s,
        sh.orbits,
        sh.orbit_steps,
        sh.noise,
        cfg.rng.seed,
    )
    .map_err(in_module("shadowing"))?;
    Ok((
        json!({
            "orbits": r.orbits,
            "steps": r.steps,
            "noise": r.noise,
            "max_epsilon": r.max_epsilon,
            "max_delta": r.max_delta,
            "max_bound_ratio": r.max_bound_ratio,
            "bound_violations": r.bound_violations,
            "max_window_gap": r.max_window_gap,
            "window_violations": r.window_violations,
            "true_orbit_delta": r.true_orbit_delta,
        }),
        Vec::new(),
    ))
}

fn pi(sys: &System, cfg: &ExperimentConfig) -> Step {
    let sh = &cfg.shadow;
    let e = sys.evaluator(sh.window)?;
    let samples = e
        .pi_samples(sh.defect_samples, cfg.rng.seed)
        .map_err(in_module("semiconj"))?;
    let mut csv = Csv::new("defect.csv", &["sample_id", "defect"]);
    for (i, p) in samples.iter().enumerate() {
        csv.row(&[i.to_string(), num(p.defect)]);
    }
    let lin = SemiconjugacyEvaluator::new(sys.linear_member()?, sh.window)
        .map_err(in_module("semiconj"))?;
    let identity_error = lin
        .pi_samples(sh.defect_samples, cfg.rng.seed)
        .map_err(in_module("semiconj"))?
        .iter()
        .map(|p| p.displacement)
        .fold(0.0, f64::max);
    let max_defect = samples.iter().map(|p| p.defect).fold(0.0, f64::max);
    let max_disp = samples.iter().map(|p| p.displacement).fold(0.0, f64::max);
    Ok((
        json!({
            "window": sh.window,
            "samples": samples.len(),
            "max_defect": max_defect,
            "max_displacement": max_disp,
            "delta": e.delta(),
            "displacement_within_delta": max_disp < e.delta(),
            "truncation_bound": e.truncation_bound(),
            "linear_identity_error": identity_error,
        }),
        vec![csv.file()],
    ))
}

fn fibers(sys: &System, cfg: &ExperimentConfig) -> Step {
    let sh = &cfg.shadow;
    let e = sys.evaluator(sh.fiber_window)?;
    let d = sys.a.dim();
    let tol = sh.tolerance;
    let found = e
        .sample_fibers(sh.fiber_samples, cfg.rng.seed, tol)
        .map_err(in_module("semiconj"))?;
    let mut header = coord_header(d);
    header.extend(["length".to_string(), "window".to_string()]);
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    let mut csv = Csv::new("fibers.csv", &header);
    for f in &found {
        let mut row: Vec<String> = f.base.coords().iter().map(|&x| num(x)).collect();
        row.push(num(f.length));
        row.push(f.window.to_string());
        csv.row(&row);
    }
    let qf = e
        .fiber_segment(sys.q(), tol)
        .map_err(in_module("semiconj"))?;
    let rep = e
        .fiber_iterate_lengths(&qf, sh.fiber_iterates)
        .map_err(in_module("semiconj"))?;
    let t_star = sys.map().pitchfork_offset().map_err(in_module("mane"))?;
    let l0 = rep.lengths_under_iteration[0];
    let drift = rep
        .lengths_under_iteration
        .iter()
        .map(|l| (l - l0).abs())
        .fold(0.0, f64::max);
    Ok((
        json!({
            "window": sh.fiber_window,
            "tolerance": tol,
            "samples": found.len(),
            "max_random_length": found.iter().map(|f| f.length).fold(0.0, f64::max),
            "q_fiber": {
                "length": qf.length,
                "two_t_star": 2.0 * t_star,
                "t_minus": qf.t_minus,
                "t_plus": qf.t_plus,
                "lengths_under_iteration": rep.lengths_under_iteration,
                "max_length_drift": drift,
                "cover_eps": rep.cover_eps,
                "cover_counts": rep.cover_counts,
                "cover_slope": rep.cover_slope,
            },
        }),
        vec![csv.file()],
    ))
}

fn entropy_csv(name: &str, est: &EntropyEstimate) -> OutputFile {
    let mut csv = Csv::new(name, &["eps", "n", "count"]);
    for (e, row) in est.eps_list.iter().zip(&est.counts) {
        for (n, c) in est.n_list.iter().zip(row) {
            csv.row(&[num(*e), n.to_string(), c.to_string()]);
        }
    }
    csv.file()
}

fn entropy_json(est: &EntropyEstimate) -> Value {
    json!({
        "counts": est.counts,
        "slopes": est.slopes,
        "residuals": est.residuals,
        "slope": est.slope,
        "warnings": est.warnings,
    })
}

fn entropy(sys: &System, cfg: &ExperimentConfig) -> Step {
    let en = &cfg.entropy;
    let seed = cfg.rng.seed;
    let (g_est, a_est) = rayon::join(
        || entropy_estimate(sys.map(), &en.eps, &en.n, en.samples, seed),
        || entropy_estimate(&sys.a, &en.eps, &en.n, en.samples, seed),
    );
    let g_est = g_est.map_err(in_module("ergodic"))?;
    let a_est = a_est.map_err(in_module("ergodic"))?;
    let h = linear_entropy(&sys.s);
    Ok((
        json!({
            "samples": en.samples,
            "eps": g_est.eps_list,
            "n": g_est.n_list,
            "map": entropy_json(&g_est),
            "linear": entropy_json(&a_est),
            "slope_difference": (g_est.slope - a_est.slope).abs(),
            "linear_entropy": h,
            "linear_relative_error": (a_est.slope - h).abs() / h,
        }),
        vec![
            entropy_csv("entropy.csv", &g_est),
            entropy_csv("entropy_linear.csv", &a_est),
        ],
    ))
}

fn birkhoff(sys: &System, cfg: &ExperimentConfig) -> Step {
    let bk = &cfg.birkhoff;
    let q = sys.q().clone();
    let q_exact = sys.fixed[sys.g.as_ref().expect("map built").q_index]
        .exact
        .clone();
    let g = sys.map();
    let runs: Vec<_> = bk
        .starts
        .par_iter()
        .enumerate()
        .map(|(id, start)| {
            let seed = cfg.rng.seed.wrapping_add(id as u64);
            let r = match start {
                BirkhoffStart::Linear => {
                    birkhoff_indicator_average(&sys.a, &Start::Random, &q, bk.radius, bk.n, seed)
                }
                BirkhoffStart::Fixed => birkhoff_indicator_average(
                    &sys.a,
                    &Start::Exact(q_exact.clone()),
                    &q,
                    bk.radius,
                    bk.n,
                    seed,
                ),
                BirkhoffStart::Mane => {
                    birkhoff_indicator_average(g, &Start::Random, &q, bk.radius, bk.n, seed)
                }
                BirkhoffStart::ManeFixed => birkhoff_indicator_average(
                    g,
                    &Start::Point(q.clone()),
                    &q,
                    bk.radius,
                    bk.n,
                    seed,
                ),
            };
            r.map(|r| (id, *start, r))
        })
        .collect::<Result<_, _>>()
        .map_err(in_module("ergodic"))?;
    let mut csv = Csv::new("birkhoff.csv", &["start_id", "n", "average", "target_m"]);
    let mut rows = Vec::new();
    for (id, start, r) in &runs {
        csv.row(&[
            id.to_string(),
            r.n.to_string(),
            num(r.average),
            num(r.target_m),
        ]);
        rows.push(json!({
            "start_id": id,
            "start": start,
            "average": r.average,
            "target_m": r.target_m,
            "relative_error": (r.average - r.target_m).abs() / r.target_m,
            "first_half": r.first_half,
            "second_half": r.second_half,
        }));
    }
    Ok((
        json!({ "radius": bk.radius, "n": bk.n, "runs": rows }),
        vec![csv.file()],
    ))
}

fn exponent(sys: &System, cfg: &ExperimentConfig) -> Step {
    let ex = &cfg.exponent;
    let g = sys.map();
    let d = sys.a.dim();
    let reports: Vec<_> = (0..ex.starts)
        .into_par_iter()
        .map(|i| {
            let x = uniform_point(&mut indexed_rng(cfg.rng.seed, i as u64), d);
            center_expansion_exponent(g, &x, ex.n)
        })
        .collect::<Result<_, _>>()
        .map_err(in_module("ergodic"))?;
    let at_q = center_expansion_exponent(g, sys.q(), ex.n).map_err(in_module("ergodic"))?;
    let mut csv = Csv::new(
        "exponent.csv",
        &["sample_id", "n", "exponent", "lower_bound"],
    );
    for (i, r) in reports.iter().enumerate() {
        csv.row(&[
            i.to_string(),
            r.n.to_string(),
            num(r.exponent),
            num(r.lower_bound),
        ]);
    }
    let exps: Vec<f64> = reports.iter().map(|r| r.exponent).collect();
    Ok((
        json!({
            "n": ex.n,
            "starts": ex.starts,
            "exponents": exps,
            "min_exponent": exps.iter().copied().fold(f64::INFINITY, f64::min),
            "lower_bound": at_q.lower_bound,
            "slack_sigma": at_q.slack_sigma,
            "a_g": at_q.extremes.a_g,
            "b_g": at_q.extremes.b_g,
            "exponent_at_q": at_q.exponent,
            "ln_b": g.params().b.ln(),
            "note": at_q.prefactor_note,
        }),
        vec![csv.file()],
    ))
}

fn mme(sys: &System, cfg: &ExperimentConfig) -> Step {
    let e = sys.evaluator(cfg.shadow.window)?;
    let tol = cfg.shadow.tolerance;
    let count = cfg.mme.count;
    let sample = sample_mme(&e, count, cfg.rng.seed, tol).map_err(in_module("ergodic"))?;
    let pushed: Vec<TorusPoint> = sample
        .points
        .par_iter()
        .map(|y| e.pi_point(y))
        .collect::<Result<_, _>>()
        .map_err(in_module("semiconj"))?;
    let d = sys.a.dim();
    let ks: Vec<f64> = (0..d)
        .map(|i| ks_uniform(&pushed.iter().map(|p| p.coords()[i]).collect::<Vec<_>>()))
        .collect();
    let mean: Vec<f64> = (0..d)
        .map(|i| sample.points.iter().map(|p| p.coords()[i]).sum::<f64>() / count as f64)
        .collect();
    let mut header = vec!["sample_id".to_string()];
    header.extend(coord_header(d));
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    let mut csv = Csv::new("mme.csv", &header);
    for (i, y) in sample.points.iter().enumerate() {
        let mut row = vec![i.to_string()];
        row.extend(y.coords().iter().map(|&x| num(x)));
        csv.row(&row);
    }
    Ok((
        json!({
            "count": count,
            "window": sample.window,
            "tolerance": sample.tolerance,
            "resamples": sample.resamples,
            "resample_rate": sample.resamples as f64 / count as f64,
            "ks": ks,
            "max_ks": ks.iter().copied().fold(0.0, f64::max),
            "sample_mean": mean,
        }),
        vec![csv.file()],
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> ExperimentConfig {
        let mut c = ExperimentConfig::default();
        c.shadow.defect_samples = 8;
        c.shadow.fiber_samples = 4;
        c.shadow.orbits = 16;
        c.entropy.samples = 2000;
        c.entropy.n = vec![1, 2];
        c.birkhoff.n = 10_000;
        c.exponent.n = 2000;
        c.exponent.starts = 2;
        c.mme.count = 16;
        c
    }

    #[test]
    fn error_codes() {
        let e = in_module("mane")(Error::Argument("x".into()));
        assert_eq!(e.code, 2);
        assert!(e.message.starts_with("mane:"));
        assert_eq!(
            in_module("semiconj")(Error::ShadowingRegime("x".into())).code,
            3
        );
    }

    #[test]
    fn small_run_of_everything() {
        let out = run(Command::All, &small(), true).unwrap();
        let names: Vec<&str> = out.files.iter().map(|f| f.name.as_str()).collect();
        for n in [
            "defect.csv",
            "fibers.csv",
            "entropy.csv",
            "entropy_linear.csv",
            "birkhoff.csv",
            "exponent.csv",
            "mme.csv",
            "entropy.gp",
            "summary.json",
        ] {
            assert!(names.contains(&n), "{n} missing from {names:?}");
        }
        let s = &out.summary;
        for key in ["system", "constants", "results", "timings"] {
            assert!(s.get(key).is_some(), "{key}");
        }
        let c = &s["constants"];
        for key in ["epsilon", "delta", "m", "inequality_value", "t_star"] {
            assert!(c[key].is_f64(), "{key}");
        }
        assert_eq!(s["results"]["spectral"]["fixed_point_count"], 13);
        assert_eq!(s["results"]["search"]["contains_configured"], true);
    }

    #[test]
    fn csv_fragments_are_seeded() {
        let a = run(Command::Birkhoff, &small(), false).unwrap();
        let b = run(Command::Birkhoff, &small(), false).unwrap();
        assert_eq!(a.files[0].bytes, b.files[0].bytes);
        let text = String::from_utf8(a.files[0].bytes.clone()).unwrap();
        assert!(text.starts_with("start_id,n,average,target_m\n"));
        assert_eq!(text.lines().count(), 5);
    }
}
