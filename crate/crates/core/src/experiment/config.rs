use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model_space::SparsityModel;
use crate::sampler::SamplerConfig;

use super::data::YearFilter;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Regime {
    /// 3×3, one zero per row and column, `Q = R = I`.
    Iso3,
    /// 6×6 block diagonal with 2×2 blocks, `Q = R = 0.01 I`.
    Iso6Block,
    /// 12×12 block diagonal with 2×2 blocks, `Q = R = 0.01 I`.
    Iso12Block,
    /// Isotropic structure of the same dimension with a random known `Q`.
    Aniso,
    /// As `Aniso`, but the sampler is given an EM estimate of `Q`.
    AnisoEstimatedQ,
    /// 4×4 system with a chosen number of zeros, `T = 50`.
    VarSparsity,
    /// `Iso3` over several series lengths.
    VarLength,
    /// Observations from a CSV file, no ground truth.
    RealCsv,
    /// User-supplied mask and noise levels.
    Custom,
}

impl FromStr for Regime {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key: String = s
            .chars()
            .filter(|c| c.is_ascii_alphanumeric())
            .collect::<String>()
            .to_lowercase();
        Ok(match key.as_str() {
            "iso3" => Regime::Iso3,
            "iso6block" | "iso6" => Regime::Iso6Block,
            "iso12block" | "iso12" => Regime::Iso12Block,
            "aniso" => Regime::Aniso,
            "anisoestimatedq" | "estimatedq" => Regime::AnisoEstimatedQ,
            "varsparsity" => Regime::VarSparsity,
            "varlength" => Regime::VarLength,
            "realcsv" | "csv" => Regime::RealCsv,
            "custom" => Regime::Custom,
            _ => return Err(Error::Config(format!("unknown regime `{s}`"))),
        })
    }
}

/// A fully resolved experiment description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub regime: Regime,
    pub dx: usize,
    /// Series length `T`.
    pub t_len: usize,
    /// Series lengths swept by `VarLength`.
    pub lengths: Vec<usize>,
    /// Number of zero entries for `VarSparsity`.
    pub n_sparse: usize,
    pub n_runs: usize,
    pub sampler: SamplerConfig,
    pub seed: u64,
    pub output_dir: PathBuf,
    /// Also run the dense random-walk baseline on every dataset.
    pub baseline: bool,
    /// Worker threads; 0 uses all cores.
    pub threads: usize,
    pub em_iters: usize,
    /// Spectral norm of generated transition matrices.
    pub stability_factor: f64,
    pub q_scale: f64,
    pub r_scale: f64,
    pub mask: Option<SparsityModel>,
    pub csv_path: Option<PathBuf>,
    pub columns: Vec<String>,
    pub year_filter: Option<YearFilter>,
    pub write_chains: bool,
    pub compact_chains: bool,
    pub dot_threshold: f64,
    pub dot_self_loops: bool,
}

impl ExperimentSpec {
    /// Regime defaults for the given dimension (ignored by fixed-size regimes).
    pub fn for_regime(regime: Regime, dx: Option<usize>) -> Self {
        let dx = match regime {
            Regime::Iso3 | Regime::VarLength => 3,
            Regime::Iso6Block => 6,
            Regime::Iso12Block => 12,
            Regime::VarSparsity => 4,
            _ => dx.unwrap_or(3),
        };
        let low_noise = matches!(regime, Regime::Iso6Block | Regime::Iso12Block)
            || (matches!(regime, Regime::Aniso | Regime::AnisoEstimatedQ) && dx != 3);
        let noise = if low_noise { 0.01 } else { 1.0 };
        let lambda_prior = match regime {
            Regime::VarSparsity | Regime::RealCsv => 0.5,
            _ if low_noise => (-1.0f64).exp(),
            _ => 1.0,
        };
        let sampler = SamplerConfig {
            lambda_prior,
            lambda_j: if regime == Regime::RealCsv { 0.2 } else { 0.1 },
            ..SamplerConfig::default()
        };
        Self {
            regime,
            dx,
            t_len: if regime == Regime::VarSparsity { 50 } else { 100 },
            lengths: vec![10, 50, 100, 150],
            n_sparse: 8,
            n_runs: 100,
            sampler,
            seed: 0,
            output_dir: PathBuf::from("results"),
            baseline: false,
            threads: 0,
            em_iters: 50,
            stability_factor: 1.0,
            q_scale: noise,
            r_scale: if regime == Regime::RealCsv { 0.5 } else { noise },
            mask: None,
            csv_path: None,
            columns: Vec::new(),
            year_filter: None,
            write_chains: true,
            compact_chains: false,
            dot_threshold: 0.5,
            dot_self_loops: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.sampler.validate()?;
        let bad = |msg: String| Err(Error::Config(msg));
        if self.n_runs == 0 {
            return bad("n_runs must be positive".into());
        }
        if self.t_len == 0 || self.lengths.contains(&0) {
            return bad("series lengths must be positive".into());
        }
        if !(self.q_scale > 0.0) || !(self.r_scale > 0.0) {
            return bad("noise scales must be positive".into());
        }
        match self.regime {
            Regime::Iso6Block | Regime::Iso12Block if !self.dx.is_multiple_of(2) => {
                return bad("block regimes require an even dimension".into())
            }
            Regime::Aniso | Regime::AnisoEstimatedQ if self.dx != 3 && !self.dx.is_multiple_of(2) => {
                return bad("anisotropic regimes need dx = 3 or an even dx".into())
            }
            Regime::VarSparsity if self.n_sparse >= self.dx * self.dx => {
                return bad(format!("n_sparse must be below {}", self.dx * self.dx))
            }
            Regime::VarLength if self.lengths.is_empty() => return bad("VarLength needs at least one length".into()),
            Regime::Custom => match &self.mask {
                Some(m) if m.dx() == self.dx && m.n_dense() > 0 => {}
                _ => return bad("Custom regime needs a non-empty mask of size dx²".into()),
            },
            Regime::RealCsv if self.csv_path.is_none() || self.columns.is_empty() => {
                return bad("RealCsv needs `csv` and `columns`".into())
            }
            _ => {}
        }
        Ok(())
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let file: ExperimentFile = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        file.resolve()
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }
}

/// On-disk experiment file: flat `key = value` pairs (TOML syntax). Unknown
/// keys are rejected; anything omitted takes the regime default.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentFile {
    pub regime: String,
    pub dx: Option<usize>,
    #[serde(rename = "T")]
    pub t_len: Option<usize>,
    pub lengths: Option<Vec<usize>>,
    pub n_sparse: Option<usize>,
    pub n_runs: Option<usize>,
    pub seed: Option<u64>,
    pub output_dir: Option<PathBuf>,
    pub baseline: Option<bool>,
    pub threads: Option<usize>,
    pub em_iters: Option<usize>,
    pub stability_factor: Option<f64>,
    pub q_scale: Option<f64>,
    pub r_scale: Option<f64>,
    pub mask: Option<String>,
    pub csv: Option<PathBuf>,
    pub columns: Option<Vec<String>>,
    pub year_column: Option<String>,
    pub year: Option<i64>,
    pub write_chains: Option<bool>,
    pub compact_chains: Option<bool>,
    pub dot_threshold: Option<f64>,
    pub dot_self_loops: Option<bool>,
    // sampler
    pub pi0: Option<f64>,
    pub pi_minus1: Option<f64>,
    #[serde(alias = "lambda")]
    pub lambda_prior: Option<f64>,
    pub lambda_j: Option<f64>,
    pub sigma_walk: Option<f64>,
    pub sigma_completion: Option<f64>,
    pub n_iters: Option<usize>,
    pub burn_in: Option<usize>,
}

impl ExperimentFile {
    pub fn resolve(self) -> Result<ExperimentSpec> {
        let regime: Regime = self.regime.parse()?;
        let mut spec = ExperimentSpec::for_regime(regime, self.dx);
        macro_rules! set {
            ($($src:ident => $dst:expr),* $(,)?) => {
                $(if let Some(v) = self.$src { $dst = v; })*
            };
        }
        set! {
            t_len => spec.t_len,
            lengths => spec.lengths,
            n_sparse => spec.n_sparse,
            n_runs => spec.n_runs,
            seed => spec.seed,
            output_dir => spec.output_dir,
            baseline => spec.baseline,
            threads => spec.threads,
            em_iters => spec.em_iters,
            stability_factor => spec.stability_factor,
            q_scale => spec.q_scale,
            r_scale => spec.r_scale,
            columns => spec.columns,
            write_chains => spec.write_chains,
            compact_chains => spec.compact_chains,
            dot_threshold => spec.dot_threshold,
            dot_self_loops => spec.dot_self_loops,
            pi0 => spec.sampler.pi0,
            pi_minus1 => spec.sampler.pi_minus1,
            lambda_prior => spec.sampler.lambda_prior,
            lambda_j => spec.sampler.lambda_j,
            sigma_walk => spec.sampler.sigma_walk,
            sigma_completion => spec.sampler.sigma_completion,
            n_iters => spec.sampler.n_iters,
            burn_in => spec.sampler.burn_in,
        }
        if let Some(m) = self.mask {
            spec.mask = Some(SparsityModel::from_bitstring(spec.dx, &m)?);
        }
        spec.csv_path = self.csv;
        if let Some(year) = self.year {
            spec.year_filter = Some(YearFilter {
                column: self.year_column.unwrap_or_else(|| "Year".into()),
                year,
            });
        }
        if regime == Regime::RealCsv {
            spec.dx = spec.columns.len();
        }
        spec.validate()?;
        Ok(spec)
    }
}
