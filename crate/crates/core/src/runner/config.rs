use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Solve,
    Verify,
    Sweep,
    Degenerate,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Solve => "solve",
            Command::Verify => "verify",
            Command::Sweep => "sweep",
            Command::Degenerate => "degenerate",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Wave {
    Sin,
    Cos,
    One,
}

/// `amp · Π_a wave_a(2π k_a x_a)` over the real axes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrigTerm {
    pub amp: f64,
    pub waves: Vec<Wave>,
    #[serde(default)]
    pub k: Option<Vec<u32>>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum BackgroundSpec {
    #[default]
    Flat,
    /// `g₀ = δ + ψ_{ij̄}` with `ψ` a trigonometric series.
    Perturbed { psi: Vec<TrigTerm> },
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DensitySpec {
    /// `F ≡ 0`
    #[default]
    Zero,
    /// `e^F = 1 + Σ terms`, then normalized.
    Trig { terms: Vec<TrigTerm> },
    /// `F = A exp(-d₀²/(2w²))`, then normalized.
    Bump {
        amplitude: f64,
        width: f64,
        #[serde(default)]
        center: Option<Vec<f64>>,
    },
    /// `F = log f` (or `log f_k` when `k` is set) for the log-type profile.
    LogType {
        radius: f64,
        #[serde(default)]
        center: Option<Vec<f64>>,
        #[serde(default)]
        k: Option<u64>,
    },
    /// `F = log f` (or `log f_k`) for the power profile `ρ^{ε₀}`.
    Power {
        eps0: f64,
        radius: f64,
        #[serde(default)]
        center: Option<Vec<f64>>,
        #[serde(default)]
        k: Option<u64>,
    },
    /// `F` manufactured from the potential `φ* = Σ terms`.
    Manufactured { terms: Vec<TrigTerm> },
    /// Raw `F` read from a field snapshot.
    Snapshot { path: PathBuf },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSpec {
    pub newton_tol: f64,
    pub max_newton_iters: usize,
    pub continuation_steps: usize,
}

impl Default for SolverSpec {
    fn default() -> Self {
        SolverSpec {
            newton_tol: crate::solver::DEFAULT_NEWTON_TOL,
            max_newton_iters: crate::solver::DEFAULT_MAX_NEWTON_ITERS,
            continuation_steps: crate::solver::DEFAULT_CONTINUATION_STEPS,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EstimateSpec {
    pub r: f64,
    pub c0: f64,
    pub alpha: f64,
}

impl Default for EstimateSpec {
    fn default() -> Self {
        EstimateSpec {
            r: 0.25,
            c0: crate::estimate::DEFAULT_C0,
            alpha: crate::estimate::ALPHA,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSpec {
    pub a_values: Vec<f64>,
    pub base_amplitude: f64,
    pub base_width: f64,
    /// Frozen `sup H` of the `a = 1` member; the measured value is used when absent.
    pub baseline_sup_h: Option<f64>,
}

impl Default for SweepSpec {
    fn default() -> Self {
        SweepSpec {
            a_values: vec![1.0, 3.0, 10.0, 30.0, 100.0],
            base_amplitude: 1.0,
            base_width: 0.3,
            baseline_sup_h: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DegenerateSpec {
    pub eps0: f64,
    pub radius: f64,
    pub k_decades: u32,
    /// Grid sizes for the log-profile driver comparison (first vs last).
    pub log_grid_sizes: Vec<usize>,
}

impl Default for DegenerateSpec {
    fn default() -> Self {
        DegenerateSpec {
            eps0: 0.5,
            radius: 0.2,
            k_decades: 4,
            log_grid_sizes: vec![32, 128],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Thresholds {
    pub bochner_rel_flat: f64,
    pub bochner_rel_perturbed: f64,
    pub slack_rel: f64,
    pub ibp: f64,
    pub manufactured_sup: f64,
    pub sweep_wgrad_rel: f64,
    pub sweep_sup_f_factor: f64,
    pub sweep_grad_growth: f64,
    pub sweep_sup_h_factor: f64,
    pub sobolev_factor: f64,
    pub grad_ratio: f64,
    pub uniform_tol: f64,
    pub driver_growth: f64,
    pub sobolev_drift: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            bochner_rel_flat: 1e-8,
            bochner_rel_perturbed: 1e-4,
            slack_rel: 1e-6,
            ibp: 1e-8,
            manufactured_sup: 1e-6,
            sweep_wgrad_rel: 0.01,
            sweep_sup_f_factor: 2.0,
            sweep_grad_growth: 10.0,
            sweep_sup_h_factor: 10.0,
            sobolev_factor: 2.0,
            grad_ratio: 2.0,
            uniform_tol: crate::degenerate::DEFAULT_UNIFORM_TOL,
            driver_growth: 2.0,
            sobolev_drift: 0.1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub command: Option<Command>,
    pub n: usize,
    #[serde(rename = "N")]
    pub points: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub snapshots: bool,
    #[serde(default)]
    pub background: BackgroundSpec,
    #[serde(default)]
    pub density: DensitySpec,
    #[serde(default)]
    pub solver: SolverSpec,
    #[serde(default)]
    pub estimate: EstimateSpec,
    #[serde(default)]
    pub sweep: SweepSpec,
    #[serde(default)]
    pub degenerate: DegenerateSpec,
    #[serde(default)]
    pub thresholds: Thresholds,
}

fn default_output() -> PathBuf {
    PathBuf::from("out")
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::parse(&text)?;
        // relative snapshot paths are taken relative to the config file
        if let DensitySpec::Snapshot { path: p } = &mut cfg.density {
            if p.is_relative() {
                if let Some(dir) = path.parent() {
                    *p = dir.join(&*p);
                }
            }
        }
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_sections() {
        let cfg = RunConfig::parse(
            r#"
n = 1
N = 64
seed = 3

[density]
kind = "trig"
terms = [{ amp = 0.3, waves = ["sin", "one"] }]

[solver]
newton_tol = 1e-9
"#,
        )
        .unwrap();
        assert_eq!(cfg.points, 64);
        assert_eq!(cfg.solver.newton_tol, 1e-9);
        assert_eq!(cfg.solver.max_newton_iters, 50);
        assert!(matches!(cfg.density, DensitySpec::Trig { .. }));
        assert_eq!(cfg.background, BackgroundSpec::Flat);
    }

    #[test]
    fn rejects_unknown_keys() {
        assert!(matches!(
            RunConfig::parse("n = 1\nN = 16\nbogus = 2\n"),
            Err(Error::Config(_))
        ));
    }
}
