//! Run parameters: defaults, then the TOML file, then command-line flags.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};

use quench_core::bounds::EPSILON_0;
use quench_core::ed_oracle::MAX_CORRELATION_SPINS;
use quench_core::ising_exact::Limit;

/// A rejected configuration. The message names the violated precondition.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

fn invalid<T>(msg: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError(msg.into()))
}

/// A list of reals, written either as `start:stop:step` (inclusive) or as a
/// comma-separated list.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(into = "Vec<f64>")]
pub struct Grid(Vec<f64>);

impl Grid {
    pub fn values(&self) -> &[f64] {
        &self.0
    }
}

impl From<Grid> for Vec<f64> {
    fn from(g: Grid) -> Self {
        g.0
    }
}

// keeps 0.1-step grids free of 0.30000000000000004
fn tidy(x: f64) -> f64 {
    (x * 1e12).round() / 1e12
}

impl FromStr for Grid {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let num = |p: &str| p.trim().parse::<f64>().map_err(|e| format!("`{p}` in grid `{s}`: {e}"));
        let parts: Vec<&str> = s.split(':').collect();
        match parts.len() {
            1 => s.split(',').map(num).collect::<Result<_, _>>().map(Grid),
            3 => {
                let (a, b, h) = (num(parts[0])?, num(parts[1])?, num(parts[2])?);
                if !(h > 0.0) || !(b >= a) || !a.is_finite() || !b.is_finite() {
                    return Err(format!("range `{s}` needs start ≤ stop and step > 0"));
                }
                let count = ((b - a) / h + 1e-9).floor() as usize;
                if count > 10_000_000 {
                    return Err(format!("range `{s}` has too many points"));
                }
                Ok(Grid((0..=count).map(|i| tidy(a + i as f64 * h)).collect()))
            }
            _ => Err(format!("grid `{s}` is neither start:stop:step nor a comma list")),
        }
    }
}

impl<'de> Deserialize<'de> for Grid {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Text(String),
            List(Vec<f64>),
        }
        match Raw::deserialize(d)? {
            Raw::Text(s) => s.parse().map_err(serde::de::Error::custom),
            Raw::List(v) => Ok(Grid(v)),
        }
    }
}

fn grid(s: &str) -> Grid {
    s.parse().expect("built-in grid")
}

fn check_grid(name: &str, g: &Grid, min: f64) -> Result<(), ConfigError> {
    if g.values().is_empty() {
        return invalid(format!("{name} is empty"));
    }
    if let Some(bad) = g.values().iter().find(|x| !x.is_finite() || **x < min) {
        return invalid(format!("{name} contains {bad}; values must be finite and ≥ {min}"));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum LimitChoice {
    Finite,
    Thermodynamic,
}

impl From<LimitChoice> for Limit {
    fn from(c: LimitChoice) -> Self {
        match c {
            LimitChoice::Finite => Limit::Finite,
            LimitChoice::Thermodynamic => Limit::Thermodynamic,
        }
    }
}

macro_rules! overlay {
    ($params:expr, $flags:expr, $($field:ident),+) => {
        $(if let Some(v) = $flags.$field.clone() { $params.$field = v; })+
    };
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
pub struct EntropyCurve {
    pub n_spins: usize,
    pub block_len: usize,
    pub t_grid: Grid,
    pub limit: LimitChoice,
    pub renyi_alpha: f64,
}

impl Default for EntropyCurve {
    fn default() -> Self {
        Self {
            n_spins: 101,
            block_len: 20,
            t_grid: grid("0:13:0.5"),
            limit: LimitChoice::Finite,
            renyi_alpha: 2.0,
        }
    }
}

#[derive(Debug, Clone, Default, Args)]
pub struct EntropyCurveFlags {
    #[arg(long)]
    pub n_spins: Option<usize>,
    #[arg(long)]
    pub block_len: Option<usize>,
    /// `start:stop:step` or `t1,t2,...`
    #[arg(long)]
    pub t_grid: Option<Grid>,
    #[arg(long)]
    pub limit: Option<LimitChoice>,
    #[arg(long)]
    pub renyi_alpha: Option<f64>,
}

impl EntropyCurve {
    pub fn resolve(file: Option<Self>, flags: &EntropyCurveFlags) -> Result<Self, ConfigError> {
        let mut p = file.unwrap_or_default();
        overlay!(p, flags, n_spins, block_len, t_grid, limit, renyi_alpha);
        if p.n_spins < 2 {
            return invalid("n-spins must be at least 2");
        }
        if p.block_len == 0 || p.block_len >= p.n_spins {
            return invalid(format!("block-len must lie in 1..{}", p.n_spins));
        }
        check_grid("t-grid", &p.t_grid, 0.0)?;
        if !(p.renyi_alpha > 0.0) || p.renyi_alpha == 1.0 || !p.renyi_alpha.is_finite() {
            return invalid("renyi-alpha must be positive, finite and different from 1");
        }
        Ok(p)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
pub struct VerifyTheorem {
    pub n_spins: usize,
    pub block_len: usize,
    pub t_grid: Grid,
}

impl Default for VerifyTheorem {
    fn default() -> Self {
        Self {
            n_spins: 101,
            block_len: 20,
            t_grid: grid("4:13:1"),
        }
    }
}

#[derive(Debug, Clone, Default, Args)]
pub struct VerifyTheoremFlags {
    #[arg(long)]
    pub n_spins: Option<usize>,
    #[arg(long)]
    pub block_len: Option<usize>,
    #[arg(long)]
    pub t_grid: Option<Grid>,
}

impl VerifyTheorem {
    pub fn resolve(file: Option<Self>, flags: &VerifyTheoremFlags) -> Result<Self, ConfigError> {
        let mut p = file.unwrap_or_default();
        overlay!(p, flags, n_spins, block_len, t_grid);
        if p.n_spins < 2 {
            return invalid("n-spins must be at least 2");
        }
        if p.block_len == 0 || p.block_len >= p.n_spins {
            return invalid(format!("block-len must lie in 1..{}", p.n_spins));
        }
        check_grid("t-grid", &p.t_grid, 0.0)?;
        Ok(p)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
pub struct BesselCheck {
    /// z-grid for the cubic-sum lower bound.
    pub cubic_z_grid: Grid,
    /// The cubic partial sum runs to `⌈z⌉ + cubic_cutoff_offset`.
    pub cubic_cutoff_offset: usize,
    pub tail_k_min: usize,
    pub tail_k_max: usize,
    /// Points per K on `(0, eK/4]`.
    pub tail_points: usize,
    /// The tail partial sum runs over `K+1..=K+tail_terms`.
    pub tail_terms: usize,
    /// z-grid for the `J_0² + J_1²` lower bound.
    pub j01_z_grid: Grid,
}

impl Default for BesselCheck {
    fn default() -> Self {
        Self {
            cubic_z_grid: grid("1:50:0.1"),
            cubic_cutoff_offset: 80,
            tail_k_min: 2,
            tail_k_max: 60,
            tail_points: 40,
            tail_terms: 200,
            j01_z_grid: grid("1:100:0.1"),
        }
    }
}

#[derive(Debug, Clone, Default, Args)]
pub struct BesselCheckFlags {
    #[arg(long)]
    pub cubic_z_grid: Option<Grid>,
    #[arg(long)]
    pub cubic_cutoff_offset: Option<usize>,
    #[arg(long)]
    pub tail_k_min: Option<usize>,
    #[arg(long)]
    pub tail_k_max: Option<usize>,
    #[arg(long)]
    pub tail_points: Option<usize>,
    #[arg(long)]
    pub tail_terms: Option<usize>,
    #[arg(long)]
    pub j01_z_grid: Option<Grid>,
}

impl BesselCheck {
    pub fn resolve(file: Option<Self>, flags: &BesselCheckFlags) -> Result<Self, ConfigError> {
        let mut p = file.unwrap_or_default();
        overlay!(
            p,
            flags,
            cubic_z_grid,
            cubic_cutoff_offset,
            tail_k_min,
            tail_k_max,
            tail_points,
            tail_terms,
            j01_z_grid
        );
        check_grid("cubic-z-grid", &p.cubic_z_grid, 1.0)?;
        check_grid("j01-z-grid", &p.j01_z_grid, 1.0)?;
        if p.tail_k_min < 2 || p.tail_k_max < p.tail_k_min {
            return invalid("tail K range needs 2 ≤ tail-k-min ≤ tail-k-max");
        }
        if p.tail_points == 0 || p.tail_terms == 0 {
            return invalid("tail-points and tail-terms must be positive");
        }
        Ok(p)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
pub struct OracleCompare {
    pub sizes: Vec<usize>,
    pub t_grid: Grid,
    pub tolerance: f64,
}

impl Default for OracleCompare {
    fn default() -> Self {
        Self {
            sizes: vec![5, 7, 9, 11],
            t_grid: grid("0,0.5,1,2,4"),
            tolerance: 1e-8,
        }
    }
}

#[derive(Debug, Clone, Default, Args)]
pub struct OracleCompareFlags {
    /// Odd chain lengths, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub sizes: Option<Vec<usize>>,
    #[arg(long)]
    pub t_grid: Option<Grid>,
    #[arg(long)]
    pub tolerance: Option<f64>,
}

impl OracleCompare {
    pub fn resolve(file: Option<Self>, flags: &OracleCompareFlags) -> Result<Self, ConfigError> {
        let mut p = file.unwrap_or_default();
        overlay!(p, flags, sizes, t_grid, tolerance);
        if p.sizes.is_empty() {
            return invalid("sizes is empty");
        }
        if let Some(&n) = p
            .sizes
            .iter()
            .find(|&&n| n < 3 || n % 2 == 0 || n > MAX_CORRELATION_SPINS)
        {
            return invalid(format!(
                "size {n}: the periodic comparison needs odd N in 3..={MAX_CORRELATION_SPINS}"
            ));
        }
        check_grid("t-grid", &p.t_grid, 0.0)?;
        if !(p.tolerance > 0.0) {
            return invalid("tolerance must be positive");
        }
        Ok(p)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
pub struct TebdRun {
    pub n_spins: usize,
    pub t_final: f64,
    pub dt: f64,
    pub order: u8,
    pub discard_tol: f64,
    pub max_bond: Option<usize>,
    pub sample_every: usize,
    /// Compare against exact evolution (only for N ≤ 12).
    pub fidelity: bool,
}

impl Default for TebdRun {
    fn default() -> Self {
        Self {
            n_spins: 20,
            t_final: 6.0,
            dt: 0.02,
            order: 2,
            discard_tol: 1e-10,
            max_bond: None,
            sample_every: 5,
            fidelity: true,
        }
    }
}

#[derive(Debug, Clone, Default, Args)]
pub struct TebdRunFlags {
    #[arg(long)]
    pub n_spins: Option<usize>,
    #[arg(long)]
    pub t_final: Option<f64>,
    #[arg(long)]
    pub dt: Option<f64>,
    #[arg(long)]
    pub order: Option<u8>,
    #[arg(long)]
    pub discard_tol: Option<f64>,
    #[arg(long)]
    pub max_bond: Option<usize>,
    #[arg(long)]
    pub sample_every: Option<usize>,
    #[arg(long)]
    pub fidelity: Option<bool>,
}

impl TebdRun {
    pub fn resolve(file: Option<Self>, flags: &TebdRunFlags) -> Result<Self, ConfigError> {
        let mut p = file.unwrap_or_default();
        overlay!(
            p,
            flags,
            n_spins,
            t_final,
            dt,
            order,
            discard_tol,
            sample_every,
            fidelity
        );
        if flags.max_bond.is_some() {
            p.max_bond = flags.max_bond;
        }
        if p.n_spins < 2 {
            return invalid("n-spins must be at least 2");
        }
        if !(p.dt > 0.0) || !p.dt.is_finite() {
            return invalid("dt must be positive");
        }
        if !(p.t_final >= 0.0) || !p.t_final.is_finite() {
            return invalid("t-final must be finite and ≥ 0");
        }
        let steps = p.t_final / p.dt;
        if (steps - steps.round()).abs() > 1e-9 * steps.max(1.0) {
            return invalid(format!("t-final {} is not a multiple of dt {}", p.t_final, p.dt));
        }
        if p.order != 1 && p.order != 2 {
            return invalid("order must be 1 or 2");
        }
        if !(p.discard_tol >= 0.0) || !p.discard_tol.is_finite() {
            return invalid("discard-tol must be finite and ≥ 0");
        }
        if p.max_bond == Some(0) {
            return invalid("max-bond must be positive");
        }
        if p.sample_every == 0 {
            return invalid("sample-every must be positive");
        }
        Ok(p)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
pub struct BoundsTable {
    pub t_grid: Grid,
    pub epsilons: Grid,
    /// Append the threshold `2e/3π` to the ε list.
    pub include_epsilon_0: bool,
    /// Block length used in the general approximate-entropy bound.
    pub block_len: usize,
    /// Random state pairs for the sampled continuity-bound table.
    pub continuity_samples: usize,
    pub continuity_max_qubits: usize,
}

impl Default for BoundsTable {
    fn default() -> Self {
        Self {
            t_grid: grid("4:20:1"),
            epsilons: grid("0,0.1,0.2,0.3,0.4,0.5,0.6"),
            include_epsilon_0: true,
            block_len: 20,
            continuity_samples: 200,
            continuity_max_qubits: 6,
        }
    }
}

#[derive(Debug, Clone, Default, Args)]
pub struct BoundsTableFlags {
    #[arg(long)]
    pub t_grid: Option<Grid>,
    #[arg(long)]
    pub epsilons: Option<Grid>,
    #[arg(long)]
    pub include_epsilon_0: Option<bool>,
    #[arg(long)]
    pub block_len: Option<usize>,
    #[arg(long)]
    pub continuity_samples: Option<usize>,
    #[arg(long)]
    pub continuity_max_qubits: Option<usize>,
}

impl BoundsTable {
    pub fn resolve(file: Option<Self>, flags: &BoundsTableFlags) -> Result<Self, ConfigError> {
        let mut p = file.unwrap_or_default();
        overlay!(
            p,
            flags,
            t_grid,
            epsilons,
            include_epsilon_0,
            block_len,
            continuity_samples,
            continuity_max_qubits
        );
        check_grid("t-grid", &p.t_grid, 0.0)?;
        if let Some(bad) = p.t_grid.values().iter().find(|&&t| t <= 0.0) {
            return invalid(format!("t-grid contains {bad}; the bounds need t > 0"));
        }
        check_grid("epsilons", &p.epsilons, 0.0)?;
        if p.include_epsilon_0 {
            p.epsilons.0.push(EPSILON_0);
        }
        if p.block_len == 0 {
            return invalid("block-len must be positive");
        }
        if !(2..=8).contains(&p.continuity_max_qubits) {
            return invalid("continuity-max-qubits must lie in 2..=8");
        }
        Ok(p)
    }
}

/// The TOML file: shared keys at top level, one table per subcommand.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct FileConfig {
    pub output_dir: Option<PathBuf>,
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub entropy_curve: Option<EntropyCurve>,
    pub verify_theorem: Option<VerifyTheorem>,
    pub bessel_check: Option<BesselCheck>,
    pub oracle_compare: Option<OracleCompare>,
    pub tebd_run: Option<TebdRun>,
    pub bounds_table: Option<BoundsTable>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text =
            std::fs::read_to_string(path).map_err(|e| ConfigError(format!("cannot read {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| ConfigError(format!("{}: {e}", path.display())))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_forms() {
        assert_eq!(grid("4:13:1").values().len(), 10);
        let g = grid("0:1:0.1");
        assert_eq!(g.values().len(), 11);
        assert_eq!(g.values()[3], 0.3);
        assert_eq!(grid("0,0.5,2").values(), &[0.0, 0.5, 2.0]);
        assert!("3:1:1".parse::<Grid>().is_err());
        assert!("1:2".parse::<Grid>().is_err());
        assert!("a,b".parse::<Grid>().is_err());
    }

    #[test]
    fn file_then_flags() {
        let file: FileConfig =
            toml::from_str("seed = 3\n[verify-theorem]\nn-spins = 61\nt-grid = [4.0, 5.0]\n").unwrap();
        assert_eq!(file.seed, Some(3));
        let flags = VerifyTheoremFlags {
            block_len: Some(12),
            ..Default::default()
        };
        let p = VerifyTheorem::resolve(file.verify_theorem, &flags).unwrap();
        assert_eq!((p.n_spins, p.block_len), (61, 12));
        assert_eq!(p.t_grid.values(), &[4.0, 5.0]);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(toml::from_str::<FileConfig>("[tebd-run]\nsteps = 3\n").is_err());
        assert!(toml::from_str::<FileConfig>("colour = 1\n").is_err());
    }

    #[test]
    fn preconditions() {
        let bad = OracleCompareFlags {
            sizes: Some(vec![5, 8]),
            ..Default::default()
        };
        assert!(OracleCompare::resolve(None, &bad).is_err());
        let bad = TebdRunFlags {
            t_final: Some(1.01),
            ..Default::default()
        };
        assert!(TebdRun::resolve(None, &bad).is_err());
        let p = BoundsTable::resolve(None, &BoundsTableFlags::default()).unwrap();
        assert_eq!(*p.epsilons.values().last().unwrap(), EPSILON_0);
    }
}
