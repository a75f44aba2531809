//! Selecting few members of a family whose intersection is not much larger
//! than the intersection of the whole family.
//!
//! * [`select_volume_subfamily`]: half-spaces, volume ratio `n^{(3-δ)/2}`.
//! * [`select_contact_subfamily`]: the contact half-spaces of John position.
//! * [`select_diameter_subfamily`]: convex bodies, containment factor `n^{2-δ/2}`.

mod caratheodory;
mod diameter;
mod volume;

pub use caratheodory::{caratheodory_reduce, reduce_support};
pub use diameter::{
    select_diameter_subfamily, thrifty_approximation, ThriftyApproximation, BETA_BISECTION_STEPS,
};
pub use volume::{
    bl_exponents, lifted_operators, select_contact_subfamily, select_volume_subfamily, BLExponents,
    LiftedOperators,
};

use serde::{Deserialize, Serialize};

use crate::convex::{volume_exact, volume_monte_carlo, HPolytope, DEFAULT_MAX_DIM};
use crate::error::{Error, Result};
use crate::john::CONTACT_TOL;
use crate::linalg::{serde_vec, Vector};
use crate::sparsify::{Strategy, BUDGET_FACTOR};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pipeline {
    Volume,
    Diameter,
    Contact,
}

impl Pipeline {
    pub fn name(self) -> &'static str {
        match self {
            Pipeline::Volume => "volume",
            Pipeline::Diameter => "diameter",
            Pipeline::Contact => "contact",
        }
    }

    /// Exponent `e` of the guaranteed rate `n^e`.
    pub fn bound_exponent(self, delta: f64) -> f64 {
        match self {
            Pipeline::Volume => (3.0 - delta) / 2.0,
            Pipeline::Diameter => 2.0 - delta / 2.0,
            Pipeline::Contact => 0.5,
        }
    }
}

/// How the volume ratio is measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OracleChoice {
    /// Exact up to [`AUTO_EXACT_MAX_DIM`], Monte Carlo up to [`AUTO_MC_MAX_DIM`], skipped above.
    Auto,
    /// Exact where vertex enumeration allows it, Monte Carlo fallback otherwise.
    Exact,
    MonteCarlo,
}

impl std::str::FromStr for OracleChoice {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "auto" => Ok(OracleChoice::Auto),
            "exact" => Ok(OracleChoice::Exact),
            "mc" | "monte_carlo" => Ok(OracleChoice::MonteCarlo),
            other => Err(Error::InvalidArgument(format!("unknown oracle {other:?}"))),
        }
    }
}

/// What was actually used for a reported ratio.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OracleMode {
    Exact,
    MonteCarlo,
    Skipped,
}

impl OracleMode {
    pub fn name(self) -> &'static str {
        match self {
            OracleMode::Exact => "exact",
            OracleMode::MonteCarlo => "monte_carlo",
            OracleMode::Skipped => "skipped",
        }
    }
}

pub const AUTO_EXACT_MAX_DIM: usize = 6;
pub const AUTO_MC_MAX_DIM: usize = 10;
pub const DEFAULT_MC_SAMPLES: usize = 1_000_000;
/// Monte Carlo ratios with a larger relative standard error are not reported.
pub const MC_MAX_RELATIVE_STDERR: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct VolumeOracle {
    pub choice: OracleChoice,
    pub mc_samples: usize,
    pub seed: u64,
}

impl Default for VolumeOracle {
    fn default() -> Self {
        Self {
            choice: OracleChoice::Auto,
            mc_samples: DEFAULT_MC_SAMPLES,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatioEstimate {
    pub mode: OracleMode,
    /// `(vol(Q)/vol(P))^{1/n}`
    pub value: Option<f64>,
    pub stderr: Option<f64>,
}

/// `(vol(q)/vol(p))^{1/n}` for bounded `p ⊆ q`.
pub fn volume_ratio(q: &HPolytope, p: &HPolytope, oracle: &VolumeOracle) -> Result<RatioEstimate> {
    let n = p.dim();
    let exact = match oracle.choice {
        OracleChoice::Auto => n <= AUTO_EXACT_MAX_DIM,
        OracleChoice::Exact => n <= DEFAULT_MAX_DIM,
        OracleChoice::MonteCarlo => false,
    };
    if exact {
        let ratio = volume_exact(q)? / volume_exact(p)?;
        return Ok(RatioEstimate {
            mode: OracleMode::Exact,
            value: Some(ratio.powf(1.0 / n as f64)),
            stderr: Some(0.0),
        });
    }
    if oracle.choice == OracleChoice::Auto && n > AUTO_MC_MAX_DIM {
        return Ok(RatioEstimate {
            mode: OracleMode::Skipped,
            value: None,
            stderr: None,
        });
    }
    let vq = volume_monte_carlo(q, oracle.mc_samples, oracle.seed)?;
    let vp = volume_monte_carlo(p, oracle.mc_samples, oracle.seed.wrapping_add(1))?;
    if vq.value <= 0.0 || vp.value <= 0.0 {
        return Ok(RatioEstimate {
            mode: OracleMode::Skipped,
            value: None,
            stderr: None,
        });
    }
    let ratio = (vq.value / vp.value).powf(1.0 / n as f64);
    let rel = ((vq.stderr / vq.value).powi(2) + (vp.stderr / vp.value).powi(2)).sqrt() / n as f64;
    let stderr = ratio * rel;
    if rel > MC_MAX_RELATIVE_STDERR {
        return Ok(RatioEstimate {
            mode: OracleMode::Skipped,
            value: None,
            stderr: Some(stderr),
        });
    }
    Ok(RatioEstimate {
        mode: OracleMode::MonteCarlo,
        value: Some(ratio),
        stderr: Some(stderr),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SelectionOptions {
    pub strategy: Strategy,
    /// Budget is `⌈budget_factor · n / ε²⌉`.
    pub budget_factor: f64,
    pub seed: u64,
    pub contact_tol: f64,
    pub oracle: VolumeOracle,
}

impl Default for SelectionOptions {
    fn default() -> Self {
        Self {
            strategy: Strategy::Barrier,
            budget_factor: BUDGET_FACTOR,
            seed: 0,
            contact_tol: CONTACT_TOL,
            oracle: VolumeOracle::default(),
        }
    }
}

impl SelectionOptions {
    pub fn budget(&self, n: usize, epsilon: f64) -> usize {
        (self.budget_factor * n as f64 / (epsilon * epsilon)).ceil() as usize
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionResult {
    pub pipeline: Pipeline,
    pub dim: usize,
    pub delta: f64,
    /// Distinct, ascending indices into the input family.
    pub indices: Vec<usize>,
    pub s: usize,
    /// `budget + n + 1` for the sparsified pipelines.
    pub admissible_cap: usize,
    /// `admissible_cap / n^δ`
    pub alpha_cap: f64,
    /// `s / n^δ`
    pub alpha_implied: f64,
    /// Translation such that `z + Q ⊆ β (z + P)`; zero for the volume pipelines.
    #[serde(with = "serde_vec")]
    pub z: Vector,
    /// Volume ratio `(vol(Q)/vol(P))^{1/n}` or containment factor `β`.
    pub achieved: Option<f64>,
    pub stderr: Option<f64>,
    pub oracle_mode: OracleMode,
    pub bound_exponent: f64,
    /// `n^{bound_exponent}`
    pub bound: f64,
    pub epsilon: Option<f64>,
    pub budget: Option<usize>,
    pub strategy: Option<Strategy>,
    pub sigma_size: usize,
    pub tau_size: usize,
    pub contacts: usize,
    pub residual_identity: f64,
    pub residual_barycenter: f64,
    /// Diameter pipeline: whether `β` was certified inside the bisection range.
    pub certified: Option<bool>,
}

impl SelectionResult {
    /// `achieved / bound`, when measured.
    pub fn normalized(&self) -> Option<f64> {
        self.achieved.map(|a| a / self.bound)
    }

    /// Structural invariants: distinct in-range indices within the cap.
    pub fn check(&self, family_len: usize) -> Result<()> {
        if self.s != self.indices.len() || self.s > self.admissible_cap {
            return Err(Error::InvalidArgument(format!(
                "selection of size {} (recorded {}) exceeds cap {}",
                self.indices.len(),
                self.s,
                self.admissible_cap
            )));
        }
        if let Some(&i) = self.indices.iter().find(|&&i| i >= family_len) {
            return Err(Error::IndexOutOfRange {
                index: i,
                len: family_len,
            });
        }
        if self.indices.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidArgument(
                "selected indices are not distinct and sorted".into(),
            ));
        }
        Ok(())
    }
}

fn check_delta(delta: f64) -> Result<()> {
    if (1.0..=2.0).contains(&delta) {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "delta must lie in [1, 2], got {delta}"
        )))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bound_exponents_decrease_in_delta() {
        for p in [Pipeline::Volume, Pipeline::Diameter] {
            assert!(p.bound_exponent(1.0) > p.bound_exponent(1.5));
            assert!(p.bound_exponent(1.5) > p.bound_exponent(2.0));
        }
        assert_eq!(Pipeline::Volume.bound_exponent(1.0), 1.0);
        assert_eq!(Pipeline::Diameter.bound_exponent(2.0), 1.0);
    }

    #[test]
    fn ratio_of_nested_boxes() {
        let p = HPolytope::cube(3);
        let q = p.scale(2.0);
        let r = volume_ratio(&q, &p, &VolumeOracle::default()).unwrap();
        assert_eq!(r.mode, OracleMode::Exact);
        assert!((r.value.unwrap() - 2.0).abs() < 1e-9);
        let mc = VolumeOracle {
            choice: OracleChoice::MonteCarlo,
            mc_samples: 200_000,
            seed: 5,
        };
        // vol(2·cube) / vol(cross-polytope) = 64 / (8/6)
        let cross = HPolytope::cross_polytope(3);
        let r = volume_ratio(&q, &cross, &mc).unwrap();
        assert_eq!(r.mode, OracleMode::MonteCarlo);
        assert!((r.value.unwrap() - 48f64.cbrt()).abs() < 4.0 * r.stderr.unwrap());
    }

    #[test]
    fn auto_oracle_skips_high_dimensions() {
        let p = HPolytope::cube(11);
        let r = volume_ratio(&p, &p, &VolumeOracle::default()).unwrap();
        assert_eq!(r.mode, OracleMode::Skipped);
        assert!(r.value.is_none());
    }
}
