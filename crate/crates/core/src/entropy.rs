//! Block entanglement entropies of Gaussian states and the chain of lower
//! bounds that leads from the exact entropy down to a Bessel sum.

use std::f64::consts::SQRT_2;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::bessel::{bessel_j_row, cubic_sum_range};
use crate::bounds::{theorem1_bound, TheoremHypotheses};
use crate::error::{domain, Error, Result};
use crate::ising_exact::{
    f_n_infinite, g_n_infinite, thermodynamic_error_bound, CorrelationMatrix, Ordering, QuenchParams,
};
use crate::linalg;

/// Antisymmetry tolerance accepted by [`normal_modes`].
pub const ANTISYMMETRY_TOL: f64 = 1e-8;
/// Normal modes within this distance outside `[0, 1]` are clamped; beyond it
/// they are rejected.
pub const CLAMP_TOL: f64 = 1e-8;
/// Error budget of the thermodynamic-limit replacement in the corner sum.
pub const CORNER_ERROR_BUDGET: f64 = 0.3;
/// Constant absorbing `-J_1(2t)/(2t) + ¼ - 0.3` for `t ≥ 4`.
pub const BESSEL_SUM_OFFSET: f64 = 0.14;

/// Normal-mode values `λ_j ∈ [0, 1]` of a `2L × 2L` block correlation matrix,
/// sorted in descending order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockSpectrum {
    lambdas: Vec<f64>,
}

impl BlockSpectrum {
    pub fn new(lambdas: Vec<f64>) -> Result<Self> {
        for &l in &lambdas {
            if !(0.0..=1.0).contains(&l) {
                return Err(Error::SpectrumOutOfRange { value: l });
            }
        }
        Ok(Self { lambdas })
    }

    pub fn lambdas(&self) -> &[f64] {
        &self.lambdas
    }

    pub fn len(&self) -> usize {
        self.lambdas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lambdas.is_empty()
    }
}

/// Leading `2L × 2L` principal submatrix of a modewise correlation matrix,
/// i.e. the correlation matrix of sites `0..L`.
pub fn block_submatrix(gamma: &CorrelationMatrix, block_len: usize) -> Result<DMatrix<f64>> {
    if gamma.ordering() != Ordering::Modewise {
        return Err(Error::OrderingMismatch {
            expected: Ordering::Modewise,
            found: gamma.ordering(),
        });
    }
    if block_len == 0 || block_len > gamma.n_modes() {
        return Err(domain(
            "block submatrix",
            format!("block length {block_len} outside 1..={}", gamma.n_modes()),
        ));
    }
    let d = 2 * block_len;
    Ok(gamma.entries().view((0, 0), (d, d)).into_owned())
}

/// Canonical values of a real antisymmetric matrix: the nonnegative
/// eigenvalues of the Hermitian matrix `iA`, one per `±λ` pair.
pub fn normal_modes(a: &DMatrix<f64>) -> Result<BlockSpectrum> {
    let dim = a.nrows();
    if a.ncols() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: a.ncols(),
        });
    }
    if !dim.is_multiple_of(2) {
        return Err(domain("normal modes", format!("dimension {dim} is odd")));
    }
    let residual = (a + a.transpose()).amax();
    if residual > ANTISYMMETRY_TOL {
        return Err(Error::NotAntisymmetric { residual });
    }
    let ia = DMatrix::from_fn(dim, dim, |i, j| {
        // symmetrize away round-off before handing to the Hermitian solver
        Complex64::new(0.0, 0.5 * (a[(i, j)] - a[(j, i)]))
    });
    let mut eig = linalg::eigvalsh(&ia)?;
    eig.sort_by(|x, y| y.total_cmp(x));
    let half = dim / 2;
    for j in 0..half {
        let pair = (eig[j] + eig[dim - 1 - j]).abs();
        if pair > ANTISYMMETRY_TOL {
            return Err(Error::Residual {
                context: "normal modes are not paired as ±λ",
                residual: pair,
                tolerance: ANTISYMMETRY_TOL,
            });
        }
    }
    let mut lambdas = Vec::with_capacity(half);
    for &l in &eig[..half] {
        let v = if l > 1.0 {
            if l - 1.0 > CLAMP_TOL {
                return Err(Error::SpectrumOutOfRange { value: l });
            }
            1.0
        } else if l < 0.0 {
            if -l > CLAMP_TOL {
                return Err(Error::SpectrumOutOfRange { value: l });
            }
            0.0
        } else {
            l
        };
        lambdas.push(v);
    }
    Ok(BlockSpectrum { lambdas })
}

/// Shannon entropy in bits of the distribution `(p, 1-p)`.
pub fn binary_shannon(p: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(domain("binary entropy", format!("probability {p} outside [0, 1]")));
    }
    Ok(xlog2x(p) + xlog2x(1.0 - p))
}

fn xlog2x(p: f64) -> f64 {
    if p <= 0.0 {
        0.0
    } else {
        -p * p.log2()
    }
}

/// `h(x) = -((1+x)/2) log₂((1+x)/2) - ((1-x)/2) log₂((1-x)/2)`, the entropy
/// in bits of a single fermionic mode with normal-mode value `x`.
pub fn binary_entropy_h(x: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) {
        return Err(domain("mode entropy", format!("x = {x} outside [0, 1]")));
    }
    Ok(xlog2x(0.5 * (1.0 + x)) + xlog2x(0.5 * (1.0 - x)))
}

/// `Σ_j h(λ_j)` in bits.
pub fn block_entropy(spectrum: &BlockSpectrum) -> f64 {
    spectrum
        .lambdas
        .iter()
        .map(|&l| binary_entropy_h(l).expect("spectrum values lie in [0, 1]"))
        .sum()
}

/// Rényi entropy of order `α` in bits,
/// `Σ_j (1/(1-α)) log₂[((1+λ_j)/2)^α + ((1-λ_j)/2)^α]`.
pub fn renyi_entropy(spectrum: &BlockSpectrum, alpha: f64) -> Result<f64> {
    if !(alpha > 0.0) || !alpha.is_finite() || alpha == 1.0 {
        return Err(domain(
            "renyi entropy",
            format!("alpha = {alpha} must be positive, finite and ≠ 1"),
        ));
    }
    Ok(spectrum
        .lambdas
        .iter()
        .map(|&l| {
            let p = 0.5 * (1.0 + l);
            let q = 0.5 * (1.0 - l);
            (p.powf(alpha) + q.powf(alpha)).log2() / (1.0 - alpha)
        })
        .sum())
}

/// Entropy in bits of sites `0..L` of a modewise correlation matrix.
pub fn entropy_of_block(gamma: &CorrelationMatrix, block_len: usize) -> Result<f64> {
    Ok(block_entropy(&normal_modes(&block_submatrix(gamma, block_len)?)?))
}

/// Every quantity of the lower-bound chain at one `(N, L, t)` point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundChainReport {
    pub n_spins: usize,
    pub block_len: usize,
    pub t: f64,
    /// Exact block entropy (bits).
    pub s_exact: f64,
    /// `L + ½ tr[A²] = Σ_j (1 - λ_j²)`.
    pub parabola_bound: f64,
    /// `½ ‖C‖₂²`, with `C` the block/complement off-diagonal part.
    pub c_norm_bound: f64,
    /// `½ Σ_{1≤|n|≤L} |n| ‖γ_n‖₂²`.
    pub corner_bound: f64,
    /// `Σ_{k=1}^{2L} k³ J_k(2t)² / (2t)² - 0.14`; present only under the
    /// theorem's hypotheses.
    pub bessel_bound: Option<f64>,
    /// `(4/3π) t - ½ ln t - 1`; absent at `t = 0`.
    pub theorem_bound: Option<f64>,
    pub hypotheses_hold: bool,
    /// `½ Σ |n| A_n` with `A_n` built from the thermodynamic-limit blocks.
    pub thermo_corner: f64,
    /// `30 e^{-1.45N + 4.5t}`.
    pub limit_epsilon: f64,
    /// `ε (2√2/3 · L(L+1)(2L+1)/t + 1)`, the accounted error of replacing
    /// `‖γ_n‖²` by `A_n`.
    pub limit_error_budget: f64,
    /// `½‖C‖² - corner`, the mass dropped by keeping only the corners of `C`.
    pub dropped_mass: f64,
}

impl BoundChainReport {
    pub fn theorem_margin(&self) -> Option<f64> {
        self.theorem_bound.map(|b| self.s_exact - b)
    }

    pub fn parabola_margin(&self) -> f64 {
        self.s_exact - self.parabola_bound
    }

    /// `|parabola - ½‖C‖²|`, zero by purity.
    pub fn purity_identity_residual(&self) -> f64 {
        (self.parabola_bound - self.c_norm_bound).abs()
    }

    pub fn corner_margin(&self) -> f64 {
        self.c_norm_bound - self.corner_bound
    }

    /// `corner - bessel_bound`.
    pub fn bessel_margin(&self) -> Option<f64> {
        self.bessel_bound.map(|b| self.corner_bound - b)
    }

    pub const CSV_HEADER: &'static str = "N,L,t_model,S_exact_bits,parabola_bits,c_norm_bits,corner_bits,\
bessel_bits,theorem_bound_bits,hypotheses_hold,theorem_margin_bits,parabola_margin_bits,\
purity_residual_bits,corner_margin_bits,bessel_margin_bits,thermo_corner_bits,limit_epsilon,\
limit_error_budget_bits,dropped_mass_bits";

    /// One CSV row matching [`Self::CSV_HEADER`]; absent entries are `NA`.
    pub fn csv_row(&self) -> String {
        // shortest round-trip, exponent form at extreme magnitudes
        let f = |x: f64| format!("{:?}", if x == 0.0 { 0.0 } else { x });
        let opt = |v: Option<f64>| v.map_or_else(|| "NA".to_string(), f);
        [
            self.n_spins.to_string(),
            self.block_len.to_string(),
            f(self.t),
            f(self.s_exact),
            f(self.parabola_bound),
            f(self.c_norm_bound),
            f(self.corner_bound),
            opt(self.bessel_bound),
            opt(self.theorem_bound),
            self.hypotheses_hold.to_string(),
            opt(self.theorem_margin()),
            f(self.parabola_margin()),
            f(self.purity_identity_residual()),
            f(self.corner_margin()),
            opt(self.bessel_margin()),
            f(self.thermo_corner),
            f(self.limit_epsilon),
            f(self.limit_error_budget),
            f(self.dropped_mass),
        ]
        .join(",")
    }
}

/// Evaluates the whole bound chain from one modewise correlation matrix.
pub fn bound_chain(gamma: &CorrelationMatrix, params: &QuenchParams) -> Result<BoundChainReport> {
    let n = gamma.n_modes();
    if params.n_spins != n {
        return Err(Error::DimensionMismatch {
            expected: 2 * params.n_spins,
            found: 2 * n,
        });
    }
    let l = params.block_len;
    let t = params.t;
    let a = block_submatrix(gamma, l)?;
    let s_exact = block_entropy(&normal_modes(&a)?);
    let parabola_bound = l as f64 + 0.5 * (&a * &a).trace();

    let d = 2 * l;
    let c = gamma.entries().view((0, d), (d, 2 * n - d));
    let c_norm_bound = 0.5 * c.norm_squared();

    let mut corner_bound = 0.0;
    let mut thermo_corner = 0.0;
    for m in 1..=l.min(n - 1) {
        let fwd = gamma.site_block(0, m).norm_squared();
        let back = gamma.site_block(m, 0).norm_squared();
        corner_bound += 0.5 * m as f64 * (fwd + back);
        for signed in [m as i64, -(m as i64)] {
            let f = f_n_infinite(signed, t);
            let gp = g_n_infinite(signed, t);
            let gm = g_n_infinite(-signed, t);
            thermo_corner += 0.5 * m as f64 * (2.0 * f * f + gp * gp + gm * gm);
        }
    }

    let hypotheses_hold = TheoremHypotheses::new(n, l, t).holds();
    let bessel_bound = if hypotheses_hold {
        let z = 2.0 * t;
        let row = bessel_j_row(z, 2 * l)?;
        Some(cubic_sum_range(&row, 1, 2 * l) / (z * z) - BESSEL_SUM_OFFSET)
    } else {
        None
    };
    let theorem_bound = (t > 0.0).then(|| theorem1_bound(t));
    let limit_epsilon = thermodynamic_error_bound(n, t);
    let lf = l as f64;
    let limit_error_budget = if t > 0.0 {
        limit_epsilon * (2.0 * SQRT_2 / 3.0 * lf * (lf + 1.0) * (2.0 * lf + 1.0) / t + 1.0)
    } else {
        f64::INFINITY
    };

    Ok(BoundChainReport {
        n_spins: n,
        block_len: l,
        t,
        s_exact,
        parabola_bound,
        c_norm_bound,
        corner_bound,
        bessel_bound,
        theorem_bound,
        hypotheses_hold,
        thermo_corner,
        limit_epsilon,
        limit_error_budget,
        dropped_mass: c_norm_bound - corner_bound,
    })
}
