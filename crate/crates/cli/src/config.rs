//! Experiment configuration: flat INI sections with `key = value` pairs.
//!
//! Every key has a default; a config file must still carry a `[system]`
//! section. Unknown sections and keys are rejected, and every value is range
//! checked here so that the library preconditions hold before any work.

use std::collections::BTreeSet;
use std::str::FromStr;

use ini::Ini;
use manelab_core::ergodic::{
    MAX_BIRKHOFF_N, MAX_ENTROPY_N, MAX_ENTROPY_SAMPLES, MAX_MME_COUNT, MIN_ENTROPY_EPS,
};
use manelab_core::semiconj::MIN_TOLERANCE;
use manelab_core::spectral::{MAX_POWER, MAX_SEARCH_BOUND, MAX_SEARCH_DEGREE};
use serde::Serialize;

/// The integer matrix under study: `companion(poly)^power`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SystemConfig {
    /// Coefficients in ascending order, constant term first.
    pub poly: Vec<i64>,
    pub power: u32,
    pub search_degree: usize,
    pub search_bound: i64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ManeConfig {
    /// `None` selects the default fixed point.
    pub q_index: Option<usize>,
    pub rho: f64,
    pub b: f64,
    pub tau_fraction: f64,
    pub gamma: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ShadowConfig {
    /// Half-width `N` of the orbit window used for `pi`.
    pub window: usize,
    /// Window used for fiber scans.
    pub fiber_window: usize,
    /// Fiber and inversion tolerance.
    pub tolerance: f64,
    pub defect_samples: usize,
    pub fiber_samples: usize,
    /// Largest `n` for the iterate lengths of the fiber through `q`.
    pub fiber_iterates: usize,
    pub orbits: usize,
    pub orbit_steps: usize,
    pub noise: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EntropyConfig {
    pub eps: Vec<f64>,
    pub n: Vec<usize>,
    pub samples: usize,
}

/// One Birkhoff orbit.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BirkhoffStart {
    /// Seeded point under the linear map, iterated exactly on the lattice.
    Linear,
    /// The fixed point `q` under the linear map, in exact arithmetic.
    Fixed,
    /// Seeded point under the deformed map.
    Mane,
    /// The fixed point `q` under the deformed map.
    ManeFixed,
}

impl FromStr for BirkhoffStart {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "linear" => Ok(Self::Linear),
            "fixed" => Ok(Self::Fixed),
            "mane" => Ok(Self::Mane),
            "mane_fixed" => Ok(Self::ManeFixed),
            _ => Err(format!(
                "unknown start `{s}` (expected linear, fixed, mane or mane_fixed)"
            )),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BirkhoffConfig {
    pub radius: f64,
    pub n: usize,
    pub starts: Vec<BirkhoffStart>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExponentConfig {
    pub n: usize,
    pub starts: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MmeConfig {
    pub count: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RngConfig {
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub system: SystemConfig,
    pub mane: ManeConfig,
    pub shadow: ShadowConfig,
    pub entropy: EntropyConfig,
    pub birkhoff: BirkhoffConfig,
    pub exponent: ExponentConfig,
    pub mme: MmeConfig,
    pub rng: RngConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            system: SystemConfig {
                poly: vec![-1, 6, -5, 1],
                power: 2,
                search_degree: 3,
                search_bound: 8,
            },
            mane: ManeConfig {
                q_index: None,
                rho: 0.05,
                b: 0.5,
                tau_fraction: 0.15,
                gamma: 0.0,
            },
            shadow: ShadowConfig {
                window: 60,
                fiber_window: 200,
                tolerance: 1e-8,
                defect_samples: 1000,
                fiber_samples: 100,
                fiber_iterates: 5,
                orbits: 10_000,
                orbit_steps: 40,
                noise: 1e-6,
            },
            entropy: EntropyConfig {
                eps: vec![0.2, 0.25, 0.3],
                n: vec![1, 2, 3, 4],
                samples: 1_000_000,
            },
            birkhoff: BirkhoffConfig {
                radius: 0.15,
                n: 1_000_000,
                starts: vec![
                    BirkhoffStart::Linear,
                    BirkhoffStart::Fixed,
                    BirkhoffStart::Mane,
                    BirkhoffStart::ManeFixed,
                ],
            },
            exponent: ExponentConfig {
                n: 100_000,
                starts: 8,
            },
            mme: MmeConfig { count: 10_000 },
            rng: RngConfig { seed: 42 },
        }
    }
}

const SECTIONS: &[(&str, &[&str])] = &[
    (
        "system",
        &["poly", "power", "search_degree", "search_bound"],
    ),
    ("mane", &["q_index", "rho", "b", "tau_fraction", "gamma"]),
    (
        "shadow",
        &[
            "window",
            "fiber_window",
            "tolerance",
            "defect_samples",
            "fiber_samples",
            "fiber_iterates",
            "orbits",
            "orbit_steps",
            "noise",
        ],
    ),
    ("entropy", &["eps", "n", "samples"]),
    ("birkhoff", &["radius", "n", "starts"]),
    ("exponent", &["n", "starts"]),
    ("mme", &["count"]),
    ("rng", &["seed"]),
];

fn parse<T: FromStr>(section: &str, key: &str, v: &str) -> Result<T, String> {
    v.trim()
        .parse()
        .map_err(|_| format!("[{section}] {key}: cannot parse `{v}`"))
}

fn parse_list<T: FromStr>(section: &str, key: &str, v: &str) -> Result<Vec<T>, String> {
    v.split(',').map(|x| parse(section, key, x)).collect()
}

impl ExperimentConfig {
    /// Parses a config file's text on top of the defaults.
    pub fn from_ini_str(text: &str) -> Result<Self, String> {
        let ini = Ini::load_from_str(text).map_err(|e| format!("config syntax: {e}"))?;
        let mut cfg = Self::default();
        let mut seen = BTreeSet::new();
        for (name, props) in ini.iter() {
            let Some(name) = name else {
                if props.iter().next().is_some() {
                    return Err("config keys must sit inside a section".into());
                }
                continue;
            };
            let Some((_, keys)) = SECTIONS.iter().find(|(s, _)| *s == name) else {
                return Err(format!("unknown section [{name}]"));
            };
            if !seen.insert(name.to_string()) {
                return Err(format!("section [{name}] appears twice"));
            }
            let mut keys_seen = BTreeSet::new();
            for (key, value) in props.iter() {
                if !keys.contains(&key) {
                    return Err(format!("[{name}] unknown key `{key}`"));
                }
                if !keys_seen.insert(key) {
                    return Err(format!("[{name}] key `{key}` appears twice"));
                }
                cfg.set(name, key, value)?;
            }
        }
        if !seen.contains("system") {
            return Err("missing [system] section".into());
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn set(&mut self, section: &str, key: &str, v: &str) -> Result<(), String> {
        match (section, key) {
            ("system", "poly") => self.system.poly = parse_list(section, key, v)?,
            ("system", "power") => self.system.power = parse(section, key, v)?,
            ("system", "search_degree") => self.system.search_degree = parse(section, key, v)?,
            ("system", "search_bound") => self.system.search_bound = parse(section, key, v)?,
            ("mane", "q_index") => {
                self.mane.q_index = if v.trim() == "auto" {
                    None
                } else {
                    Some(parse(section, key, v)?)
                }
            }
            ("mane", "rho") => self.mane.rho = parse(section, key, v)?,
            ("mane", "b") => self.mane.b = parse(section, key, v)?,
            ("mane", "tau_fraction") => self.mane.tau_fraction = parse(section, key, v)?,
            ("mane", "gamma") => self.mane.gamma = parse(section, key, v)?,
            ("shadow", "window") => self.shadow.window = parse(section, key, v)?,
            ("shadow", "fiber_window") => self.shadow.fiber_window = parse(section, key, v)?,
            ("shadow", "tolerance") => self.shadow.tolerance = parse(section, key, v)?,
            ("shadow", "defect_samples") => self.shadow.defect_samples = parse(section, key, v)?,
            ("shadow", "fiber_samples") => self.shadow.fiber_samples = parse(section, key, v)?,
            ("shadow", "fiber_iterates") => self.shadow.fiber_iterates = parse(section, key, v)?,
            ("shadow", "orbits") => self.shadow.orbits = parse(section, key, v)?,
            ("shadow", "orbit_steps") => self.shadow.orbit_steps = parse(section, key, v)?,
            ("shadow", "noise") => self.shadow.noise = parse(section, key, v)?,
            ("entropy", "eps") => self.entropy.eps = parse_list(section, key, v)?,
            ("entropy", "n") => self.entropy.n = parse_list(section, key, v)?,
            ("entropy", "samples") => self.entropy.samples = parse(section, key, v)?,
            ("birkhoff", "radius") => self.birkhoff.radius = parse(section, key, v)?,
            ("birkhoff", "n") => self.birkhoff.n = parse(section, key, v)?,
            ("birkhoff", "starts") => self.birkhoff.starts = parse_list(section, key, v)?,
            ("exponent", "n") => self.exponent.n = parse(section, key, v)?,
            ("exponent", "starts") => self.exponent.starts = parse(section, key, v)?,
            ("mme", "count") => self.mme.count = parse(section, key, v)?,
            ("rng", "seed") => self.rng.seed = parse(section, key, v)?,
            _ => return Err(format!("[{section}] unknown key `{key}`")),
        }
        Ok(())
    }

    /// Range checks mirroring the library preconditions.
    pub fn validate(&self) -> Result<(), String> {
        let check = |ok: bool, msg: &str| if ok { Ok(()) } else { Err(msg.to_string()) };
        let s = &self.system;
        check(s.poly.len() >= 3, "[system] poly needs degree at least 2")?;
        check(
            s.poly.last() == Some(&1),
            "[system] poly must be monic (last coefficient 1)",
        )?;
        check(
            (1..=MAX_POWER).contains(&s.power),
            &format!("[system] power must lie in 1..={MAX_POWER}"),
        )?;
        check(
            (2..=MAX_SEARCH_DEGREE).contains(&s.search_degree),
            &format!("[system] search_degree must lie in 2..={MAX_SEARCH_DEGREE}"),
        )?;
        check(
            (1..=MAX_SEARCH_BOUND).contains(&s.search_bound),
            &format!("[system] search_bound must lie in 1..={MAX_SEARCH_BOUND}"),
        )?;
        let m = &self.mane;
        check(
            m.rho.is_finite() && m.rho > 0.0,
            "[mane] rho must be positive",
        )?;
        check(m.b > 0.0 && m.b < 1.0, "[mane] b must lie in (0, 1)")?;
        check(
            m.tau_fraction > 0.0 && m.tau_fraction <= 1.0,
            "[mane] tau_fraction must lie in (0, 1]",
        )?;
        check(
            m.gamma >= 0.0 && m.gamma < m.b,
            "[mane] gamma must lie in [0, b)",
        )?;
        let sh = &self.shadow;
        check(
            sh.window >= 1 && sh.fiber_window >= 1,
            "[shadow] windows must be positive",
        )?;
        check(
            sh.tolerance >= MIN_TOLERANCE && sh.tolerance.is_finite(),
            &format!("[shadow] tolerance must be at least {MIN_TOLERANCE:e}"),
        )?;
        check(
            sh.defect_samples >= 1 && sh.fiber_samples >= 1 && sh.orbits >= 1,
            "[shadow] sample counts must be positive",
        )?;
        check(
            sh.orbit_steps >= 2 && sh.orbit_steps % 2 == 0,
            "[shadow] orbit_steps must be even and at least 2",
        )?;
        check(
            sh.noise >= 0.0 && sh.noise.is_finite(),
            "[shadow] noise must be non-negative",
        )?;
        let e = &self.entropy;
        check(!e.eps.is_empty(), "[entropy] eps list is empty")?;
        check(
            e.eps
                .iter()
                .enumerate()
                .all(|(i, x)| !e.eps[..i].contains(x)),
            "[entropy] eps has repeated values",
        )?;
        check(
            e.eps.iter().all(|&x| x >= MIN_ENTROPY_EPS && x.is_finite()),
            &format!("[entropy] every eps must be at least {MIN_ENTROPY_EPS}"),
        )?;
        let distinct: BTreeSet<_> = e.n.iter().collect();
        check(
            distinct.len() == e.n.len() && e.n.len() >= 2,
            "[entropy] n needs at least two distinct values",
        )?;
        check(
            e.n.iter().all(|&n| (1..=MAX_ENTROPY_N).contains(&n)),
            &format!("[entropy] every n must lie in 1..={MAX_ENTROPY_N}"),
        )?;
        check(
            (1..=MAX_ENTROPY_SAMPLES).contains(&e.samples),
            &format!("[entropy] samples must lie in 1..={MAX_ENTROPY_SAMPLES}"),
        )?;
        let b = &self.birkhoff;
        check(
            b.radius > 0.0 && b.radius < 0.5,
            "[birkhoff] radius must lie in (0, 0.5)",
        )?;
        check(
            (2..=MAX_BIRKHOFF_N).contains(&b.n),
            &format!("[birkhoff] n must lie in 2..={MAX_BIRKHOFF_N}"),
        )?;
        check(!b.starts.is_empty(), "[birkhoff] starts list is empty")?;
        check(
            self.exponent.n >= 1000,
            "[exponent] n must be at least 1000",
        )?;
        check(
            self.exponent.starts >= 1,
            "[exponent] starts must be positive",
        )?;
        check(
            (1..=MAX_MME_COUNT).contains(&self.mme.count),
            &format!("[mme] count must lie in 1..={MAX_MME_COUNT}"),
        )?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const DEFAULT_CFG: &str = include_str!("../../../configs/default.cfg");

    #[test]
    fn shipped_config_matches_defaults() {
        assert_eq!(
            ExperimentConfig::from_ini_str(DEFAULT_CFG).unwrap(),
            ExperimentConfig::default()
        );
    }

    #[test]
    fn minimal_config() {
        let c = ExperimentConfig::from_ini_str("[system]\npoly = -1,6,-5,1\n").unwrap();
        assert_eq!(c, ExperimentConfig::default());
        let c = ExperimentConfig::from_ini_str("[system]\n[rng]\nseed = 7\n[mane]\nq_index = 3\n")
            .unwrap();
        assert_eq!(c.rng.seed, 7);
        assert_eq!(c.mane.q_index, Some(3));
    }

    #[test]
    fn rejects_bad_input() {
        for text in [
            "[rng]\nseed = 1\n",
            "[system]\nfoo = 1\n",
            "[system]\n[extra]\n",
            "seed = 1\n[system]\n",
            "[system]\npower = two\n",
            "[system]\npower = 0\n",
            "[system]\npoly = 1,2,3\n",
            "[system]\n[mane]\nb = 1.5\n",
            "[system]\n[entropy]\nn = 2,2\n",
            "[system]\n[entropy]\neps = 0.01\n",
            "[system]\n[entropy]\neps = 0.2,0.2\n",
            "[system]\n[shadow]\ntolerance = 1e-14\n",
            "[system]\n[shadow]\norbit_steps = 41\n",
            "[system]\n[birkhoff]\nstarts = linear,nowhere\n",
            "[system]\n[system]\n",
            "[system]\npower = 2\npower = 3\n",
        ] {
            assert!(ExperimentConfig::from_ini_str(text).is_err(), "{text}");
        }
    }
}
