//! Majorana correlation matrix of the quenched Ising ring.
//!
//! Majorana operators follow the Jordan-Wigner map
//! `c_j = Z_0⋯Z_{j-1} X_j`, `c_{j+N} = Z_0⋯Z_{j-1} Y_j` for sites `j = 0..N`.
//! Two orderings of the `2N` indices are used:
//!
//! * position-momentum: `c_0 … c_{N-1}, c_N … c_{2N-1}`;
//! * modewise: index `2j ↔ c_j`, `2j+1 ↔ c_{j+N}`, so that site `j` owns the
//!   `2×2` diagonal block `j`.
//!
//! The time parameter `t` here is the one in which `Γ_t = e^{-Ht} Γ_0 e^{Ht}`
//! and `f_n`, `g_n` carry `sin(2t sin(φ/2))`. In terms of the spin chain
//! Hamiltonian this is the state `e^{+iℋt/2}|1…1⟩`; see
//! [`crate::ed_oracle::spin_time_for_model_time`].
//!
//! For even `N` the same formulas describe the Ising ring with the boundary
//! coupling flipped.

mod extended;

use std::f64::consts::PI;
use std::io::{self, Write};

use nalgebra::{DMatrix, Matrix2};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bessel::{bessel_j_row, BesselRow};
use crate::error::{domain, Error, Result};

pub use extended::{thermodynamic_deviation, LimitDeviation};

/// Order of the Majorana indices in a [`CorrelationMatrix`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Ordering {
    PositionMomentum,
    Modewise,
}

impl Ordering {
    pub fn tag(self) -> &'static str {
        match self {
            Ordering::PositionMomentum => "position-momentum",
            Ordering::Modewise => "modewise",
        }
    }

    /// Matrix index of the position (`kind = 0`) or momentum (`kind = 1`)
    /// Majorana of `site` in a chain of `n` sites.
    pub fn index(self, site: usize, kind: usize, n: usize) -> usize {
        debug_assert!(kind < 2 && site < n);
        match self {
            Ordering::PositionMomentum => site + kind * n,
            Ordering::Modewise => 2 * site + kind,
        }
    }
}

/// Which of the two `f_n`, `g_n` families to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Limit {
    /// Discrete Fourier sums over the `N` ring momenta.
    Finite,
    /// Bessel-function closed forms of the `N → ∞` limit.
    Thermodynamic,
}

/// Parameters of one quench evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuenchParams {
    pub n_spins: usize,
    pub t: f64,
    pub block_len: usize,
}

impl QuenchParams {
    pub fn new(n_spins: usize, t: f64, block_len: usize) -> Result<Self> {
        if n_spins == 0 {
            return Err(domain("quench parameters", "N must be positive"));
        }
        if block_len == 0 || block_len > n_spins {
            return Err(domain(
                "quench parameters",
                format!("block length {block_len} must lie in 1..={n_spins}"),
            ));
        }
        if !t.is_finite() || t < 0.0 {
            return Err(domain("quench parameters", format!("t = {t} must be finite and ≥ 0")));
        }
        Ok(Self { n_spins, t, block_len })
    }

    pub fn is_odd(&self) -> bool {
        self.n_spins % 2 == 1
    }

    /// Entropy statements may assume `L ≤ N/2` because the global state is pure.
    pub fn block_in_half(&self) -> bool {
        2 * self.block_len <= self.n_spins
    }
}

/// Real antisymmetric `2N × 2N` matrix of Majorana second moments,
/// `Γ_kl = -(i/2) tr(ρ [c_k, c_l])`.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationMatrix {
    n_modes: usize,
    ordering: Ordering,
    entries: DMatrix<f64>,
}

impl CorrelationMatrix {
    pub fn new(entries: DMatrix<f64>, ordering: Ordering) -> Result<Self> {
        let dim = entries.nrows();
        if entries.ncols() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: entries.ncols(),
            });
        }
        if dim == 0 || !dim.is_multiple_of(2) {
            return Err(domain(
                "correlation matrix",
                format!("dimension {dim} is not a positive even number"),
            ));
        }
        Ok(Self {
            n_modes: dim / 2,
            ordering,
            entries,
        })
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn ordering(&self) -> Ordering {
        self.ordering
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn into_entries(self) -> DMatrix<f64> {
        self.entries
    }

    /// `max |Γ + Γᵀ|`.
    pub fn antisymmetry_residual(&self) -> f64 {
        (&self.entries + self.entries.transpose()).amax()
    }

    /// `max |Γ² + 𝟙|`; zero for pure Gaussian states.
    pub fn purity_residual(&self) -> f64 {
        let mut sq = &self.entries * &self.entries;
        for i in 0..sq.nrows() {
            sq[(i, i)] += 1.0;
        }
        sq.amax()
    }

    pub fn max_abs_entry(&self) -> f64 {
        self.entries.amax()
    }

    /// Re-expresses the matrix in another index ordering.
    pub fn reordered(&self, target: Ordering) -> Self {
        if target == self.ordering {
            return self.clone();
        }
        let n = self.n_modes;
        let dim = 2 * n;
        // perm[new] = old
        let mut perm = vec![0; dim];
        for site in 0..n {
            for kind in 0..2 {
                perm[target.index(site, kind, n)] = self.ordering.index(site, kind, n);
            }
        }
        let entries = DMatrix::from_fn(dim, dim, |i, j| self.entries[(perm[i], perm[j])]);
        Self {
            n_modes: n,
            ordering: target,
            entries,
        }
    }

    /// The `2×2` block coupling site `j` (rows) with site `k` (columns),
    /// arranged as `[[pos,pos],[pos,mom]; [mom,pos],[mom,mom]]`.
    pub fn site_block(&self, j: usize, k: usize) -> Matrix2<f64> {
        let n = self.n_modes;
        let o = self.ordering;
        Matrix2::from_fn(|a, b| self.entries[(o.index(j, a, n), o.index(k, b, n))])
    }

    /// Largest deviation of any site block `(j, k)` from block `(0, (k-j) mod N)`.
    pub fn toeplitz_residual(&self) -> f64 {
        let n = self.n_modes;
        let reference: Vec<Matrix2<f64>> = (0..n).map(|m| self.site_block(0, m)).collect();
        let mut worst = 0.0f64;
        for j in 0..n {
            for k in 0..n {
                let m = (k + n - j) % n;
                worst = worst.max((self.site_block(j, k) - reference[m]).amax());
            }
        }
        worst
    }

    /// Writes the matrix as CSV: a `#` metadata line carrying `N`, `t` and the
    /// ordering tag, a column header, then one row per matrix row.
    pub fn write_csv<W: Write>(&self, mut out: W, t: f64) -> io::Result<()> {
        writeln!(out, "# N={},t={},ordering={}", self.n_modes, t, self.ordering.tag())?;
        let dim = 2 * self.n_modes;
        let header: Vec<String> = (0..dim).map(|c| format!("c{c}")).collect();
        writeln!(out, "{}", header.join(","))?;
        for i in 0..dim {
            let row: Vec<String> = (0..dim).map(|j| format!("{}", self.entries[(i, j)])).collect();
            writeln!(out, "{}", row.join(","))?;
        }
        Ok(())
    }
}

/// One `2×2` block `γ_n = [[f_n, -g_n], [g_{-n}, -f_n]]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeBlock {
    pub n: i64,
    pub f: f64,
    pub g_plus: f64,
    pub g_minus: f64,
}

impl ModeBlock {
    pub fn matrix(&self) -> Matrix2<f64> {
        Matrix2::new(self.f, -self.g_plus, self.g_minus, -self.f)
    }

    /// Squared Frobenius norm `2 f² + g_n² + g_{-n}²`.
    pub fn norm_sq(&self) -> f64 {
        2.0 * self.f * self.f + self.g_plus * self.g_plus + self.g_minus * self.g_minus
    }
}

/// Real antisymmetric `H` with `ℋ = (i/4) Σ_kl H_kl [c_k, c_l]`, position-momentum
/// ordered.
#[derive(Debug, Clone, PartialEq)]
pub struct HamiltonianMatrix {
    n_modes: usize,
    entries: DMatrix<f64>,
}

impl HamiltonianMatrix {
    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    /// Closed-form momentum block `Ĥ(φ_k) = ½[[0, 1-e^{iφ}], [-1+e^{-iφ}, 0]]`.
    pub fn fourier_block(&self, k: usize) -> nalgebra::Matrix2<Complex64> {
        fourier_hamiltonian(ring_momentum(k, self.n_modes))
    }
}

/// `φ_k = 2πk/N`.
pub fn ring_momentum(k: usize, n: usize) -> f64 {
    2.0 * PI * k as f64 / n as f64
}

pub fn fourier_hamiltonian(phi: f64) -> nalgebra::Matrix2<Complex64> {
    let e = Complex64::from_polar(1.0, phi);
    let one = Complex64::new(1.0, 0.0);
    let zero = Complex64::new(0.0, 0.0);
    nalgebra::Matrix2::new(zero, (one - e) * 0.5, (e.conj() - one) * 0.5, zero)
}

/// `Γ̂_t(φ) = e^{-Ĥt} Γ̂_0 e^{Ĥt}` using `e^{Ĥs} = cos(ωs) 𝟙 + sin(ωs)/ω Ĥ`,
/// `ω = |sin(φ/2)|`, which holds because `Ĥ² = -ω² 𝟙`.
pub fn fourier_block_evolved(phi: f64, t: f64) -> nalgebra::Matrix2<Complex64> {
    let h = fourier_hamiltonian(phi);
    let omega = (0.5 * phi).sin().abs();
    let exp = |s: f64| {
        let (sin_c, cos_c) = if omega == 0.0 {
            (s, 1.0)
        } else {
            ((omega * s).sin() / omega, (omega * s).cos())
        };
        nalgebra::Matrix2::identity() * Complex64::new(cos_c, 0.0) + h * Complex64::new(sin_c, 0.0)
    };
    let g0 = nalgebra::Matrix2::new(
        Complex64::new(0.0, 0.0),
        Complex64::new(-1.0, 0.0),
        Complex64::new(1.0, 0.0),
        Complex64::new(0.0, 0.0),
    );
    exp(-t) * g0 * exp(t)
}

/// Initial correlation matrix `[[0, -𝟙], [𝟙, 0]]` of `|1…1⟩`, position-momentum
/// ordered.
pub fn gamma_initial(n: usize) -> Result<CorrelationMatrix> {
    if n == 0 {
        return Err(domain("initial correlation matrix", "N must be positive"));
    }
    let mut g = DMatrix::zeros(2 * n, 2 * n);
    for k in 0..n {
        g[(k, k + n)] = -1.0;
        g[(k + n, k)] = 1.0;
    }
    CorrelationMatrix::new(g, Ordering::PositionMomentum)
}

/// Hamiltonian matrix of `ℋ = (i/2) Σ_j (c_j - c_{j+1 mod N}) c_{j+N}`.
pub fn hamiltonian_matrix(n: usize) -> Result<HamiltonianMatrix> {
    if n < 2 {
        return Err(domain("hamiltonian matrix", "N must be at least 2"));
    }
    // (i/2) Σ M_kl c_k c_l with M non-antisymmetric; H = (M - Mᵀ)/2
    let mut h = DMatrix::zeros(2 * n, 2 * n);
    for j in 0..n {
        let jn = j + n;
        let next = (j + 1) % n;
        h[(j, jn)] += 0.5;
        h[(jn, j)] -= 0.5;
        h[(next, jn)] -= 0.5;
        h[(jn, next)] += 0.5;
    }
    Ok(HamiltonianMatrix { n_modes: n, entries: h })
}

/// `Γ_t = e^{-Ht} Γ_0 e^{Ht}` through a dense matrix exponential.
pub fn evolve_direct(gamma0: &CorrelationMatrix, h: &HamiltonianMatrix, t: f64) -> Result<CorrelationMatrix> {
    if gamma0.n_modes != h.n_modes {
        return Err(Error::DimensionMismatch {
            expected: 2 * h.n_modes,
            found: 2 * gamma0.n_modes,
        });
    }
    if gamma0.ordering != Ordering::PositionMomentum {
        return Err(Error::OrderingMismatch {
            expected: Ordering::PositionMomentum,
            found: gamma0.ordering,
        });
    }
    if t == 0.0 {
        return Ok(gamma0.clone());
    }
    let u = (&h.entries * (-t)).exp();
    // e^{Ht} = (e^{-Ht})ᵀ since H is antisymmetric
    let g = &u * &gamma0.entries * u.transpose();
    CorrelationMatrix::new(g, Ordering::PositionMomentum)
}

/// Finite-`N` `f_n`, the discrete Fourier sum
/// `(1/N) Σ_k (i/2) e^{inφ_k} [e^{-iφ_k/2} + e^{iφ_k/2}] sin(2t sin(φ_k/2))`.
pub fn f_n_finite(n: i64, t: f64, n_sites: usize) -> f64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for k in 0..n_sites {
        let phi = ring_momentum(k, n_sites);
        let bracket = Complex64::from_polar(1.0, -0.5 * phi) + Complex64::from_polar(1.0, 0.5 * phi);
        let s = (2.0 * t * (0.5 * phi).sin()).sin();
        acc += Complex64::new(0.0, 0.5) * phase(n, k, n_sites) * bracket * s;
    }
    acc /= n_sites as f64;
    debug_assert!(acc.im.abs() <= 1e-12, "f_n imaginary residual {}", acc.im);
    acc.re
}

/// Finite-`N` `g_n`,
/// `(1/N) Σ_k ½ e^{inφ_k} [1 - e^{iφ_k} + (1 + e^{iφ_k}) cos(2t sin(φ_k/2))]`.
pub fn g_n_finite(n: i64, t: f64, n_sites: usize) -> f64 {
    let one = Complex64::new(1.0, 0.0);
    let mut acc = Complex64::new(0.0, 0.0);
    for k in 0..n_sites {
        let phi = ring_momentum(k, n_sites);
        let e = Complex64::from_polar(1.0, phi);
        let c = (2.0 * t * (0.5 * phi).sin()).cos();
        acc += phase(n, k, n_sites) * (one - e + (one + e) * c) * 0.5;
    }
    acc /= n_sites as f64;
    debug_assert!(acc.im.abs() <= 1e-12, "g_n imaginary residual {}", acc.im);
    acc.re
}

/// `e^{i n φ_k}` with the exponent reduced modulo `N` before the float
/// multiplication.
fn phase(n: i64, k: usize, n_sites: usize) -> Complex64 {
    let m = (n.rem_euclid(n_sites as i64) as usize * k) % n_sites;
    Complex64::from_polar(1.0, ring_momentum(m, n_sites))
}

/// `f_n^∞ = -2n J_{2n}(2t) / (2t)`, zero at `t = 0`.
pub fn f_n_infinite(n: i64, t: f64) -> f64 {
    if t == 0.0 || n == 0 {
        return 0.0;
    }
    let row = bessel_j_row(2.0 * t, (2 * n.unsigned_abs() as usize).max(1)).expect("t is finite and nonnegative");
    f_from_row(n, t, &row)
}

/// `g_n^∞ = (2n+1) J_{2n+1}(2t) / (2t) + I_n` with `I_0 = ½`, `I_{-1} = -½`.
pub fn g_n_infinite(n: i64, t: f64) -> f64 {
    if t == 0.0 {
        return limit_offset(n) + if n == 0 || n == -1 { 0.5 } else { 0.0 };
    }
    let row = bessel_j_row(2.0 * t, (2 * n.unsigned_abs() as usize + 1).max(1)).expect("t is finite and nonnegative");
    g_from_row(n, t, &row)
}

fn limit_offset(n: i64) -> f64 {
    match n {
        0 => 0.5,
        -1 => -0.5,
        _ => 0.0,
    }
}

fn f_from_row(n: i64, t: f64, row: &BesselRow) -> f64 {
    if n == 0 {
        return 0.0;
    }
    -(2 * n) as f64 * row.order(2 * n) / (2.0 * t)
}

fn g_from_row(n: i64, t: f64, row: &BesselRow) -> f64 {
    (2 * n + 1) as f64 * row.order(2 * n + 1) / (2.0 * t) + limit_offset(n)
}

/// The block `γ_n` at offset `n` in the requested limit.
pub fn mode_block(n: i64, t: f64, n_sites: usize, limit: Limit) -> ModeBlock {
    match limit {
        Limit::Finite => ModeBlock {
            n,
            f: f_n_finite(n, t, n_sites),
            g_plus: g_n_finite(n, t, n_sites),
            g_minus: g_n_finite(-n, t, n_sites),
        },
        Limit::Thermodynamic => ModeBlock {
            n,
            f: f_n_infinite(n, t),
            g_plus: g_n_infinite(n, t),
            g_minus: g_n_infinite(-n, t),
        },
    }
}

/// Signed representative of the ring offset `m ∈ 0..N` in `(-N/2, N/2]`.
pub fn signed_offset(m: usize, n_sites: usize) -> i64 {
    if 2 * m <= n_sites {
        m as i64
    } else {
        m as i64 - n_sites as i64
    }
}

/// Block-Toeplitz `Γ_t` in modewise ordering, with site block `(j, k)` equal
/// to `γ_{k-j}` and `γ_{N-n} = γ_{-n}`.
pub fn gamma_t_fourier(n_sites: usize, t: f64, limit: Limit) -> Result<CorrelationMatrix> {
    if n_sites == 0 {
        return Err(domain("fourier correlation matrix", "N must be positive"));
    }
    if !t.is_finite() {
        return Err(domain("fourier correlation matrix", format!("t = {t} is not finite")));
    }
    let blocks: Vec<Matrix2<f64>> = match limit {
        Limit::Finite => (0..n_sites)
            .into_par_iter()
            .map(|m| mode_block(signed_offset(m, n_sites), t, n_sites, limit).matrix())
            .collect(),
        Limit::Thermodynamic => {
            let row = (t > 0.0).then(|| bessel_j_row(2.0 * t, n_sites + 2)).transpose()?;
            (0..n_sites)
                .map(|m| {
                    let n = signed_offset(m, n_sites);
                    match &row {
                        Some(row) => ModeBlock {
                            n,
                            f: f_from_row(n, t, row),
                            g_plus: g_from_row(n, t, row),
                            g_minus: g_from_row(-n, t, row),
                        },
                        None => mode_block(n, 0.0, n_sites, limit),
                    }
                    .matrix()
                })
                .collect()
        }
    };
    let dim = 2 * n_sites;
    let entries = DMatrix::from_fn(dim, dim, |r, c| {
        let (j, k) = (r / 2, c / 2);
        blocks[(k + n_sites - j) % n_sites][(r % 2, c % 2)]
    });
    CorrelationMatrix::new(entries, Ordering::Modewise)
}

/// Quadrature error bound `2M / (e^{aN} - 1)` for the `N`-point trapezoidal
/// rule applied to the `f_n`, `g_n` integrands, with
/// `M = ¼ e^{|n|a} (1 + e^a) (3 + exp[t (e^{a/2} + e^{-a/2})])`.
pub fn quadrature_error_bound(n: i64, t: f64, n_sites: usize, a: f64) -> Result<f64> {
    if !(a > 0.0) || !a.is_finite() {
        return Err(domain(
            "quadrature error bound",
            format!("strip half-width a = {a} must be > 0"),
        ));
    }
    if n_sites == 0 {
        return Err(domain("quadrature error bound", "N must be positive"));
    }
    let na = n.unsigned_abs() as f64 * a;
    let m = 0.25 * na.exp() * (1.0 + a.exp()) * (3.0 + (t * (0.5 * a).cosh() * 2.0).exp());
    Ok(2.0 * m / (a * n_sites as f64).exp_m1())
}

/// `30 e^{-1.45N + 4.5t}`, the `a = 2.9` form of [`quadrature_error_bound`]
/// valid for `|n| ≤ N/2`, `t ≥ 4`, `N ≥ 20`.
pub fn thermodynamic_error_bound(n_sites: usize, t: f64) -> f64 {
    30.0 * (-1.45 * n_sites as f64 + 4.5 * t).exp()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn initial_matrix_shapes() {
        let g1 = gamma_initial(1).unwrap();
        assert_eq!(g1.entries(), &DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]));
        let g3 = gamma_initial(3).unwrap();
        for k in 0..3 {
            assert_eq!(g3.entries()[(k, k + 3)], -1.0);
            assert_eq!(g3.entries()[(k + 3, k)], 1.0);
        }
        for n in 1..8 {
            let g = gamma_initial(n).unwrap();
            assert_eq!(g.purity_residual(), 0.0);
            assert_eq!(g.antisymmetry_residual(), 0.0);
        }
        assert!(gamma_initial(0).is_err());
    }

    #[test]
    fn hamiltonian_n2_by_hand() {
        // (i/2)[(c0 - c1) c2 + (c1 - c0) c3], antisymmetrized
        let h = hamiltonian_matrix(2).unwrap();
        #[rustfmt::skip]
        let want = DMatrix::from_row_slice(4, 4, &[
             0.0, 0.0,  0.5, -0.5,
             0.0, 0.0, -0.5,  0.5,
            -0.5, 0.5,  0.0,  0.0,
             0.5,-0.5,  0.0,  0.0,
        ]);
        assert_eq!(h.entries(), &want);
        for n in 2..12 {
            let h = hamiltonian_matrix(n).unwrap();
            assert_eq!(h.entries(), &(-h.entries().transpose()));
        }
        assert!(hamiltonian_matrix(1).is_err());
    }

    #[test]
    fn hamiltonian_fourier_blocks() {
        let n = 7;
        let h = hamiltonian_matrix(n).unwrap();
        let f = DMatrix::from_fn(n, n, |k, l| {
            Complex64::from_polar(1.0 / (n as f64).sqrt(), ring_momentum((k * l) % n, n))
        });
        let mut big = DMatrix::zeros(2 * n, 2 * n);
        big.view_mut((0, 0), (n, n)).copy_from(&f);
        big.view_mut((n, n), (n, n)).copy_from(&f);
        let hc = h.entries().map(|x| Complex64::new(x, 0.0));
        let conj = &big * hc * big.adjoint();
        for k in 0..n {
            let want = h.fourier_block(k);
            for (a, b) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
                let got = conj[(k + a * n, k + b * n)];
                assert!((got - want[(a, b)]).norm() < 1e-14);
            }
            // block-diagonal: nothing couples different momenta
            for k2 in (0..n).filter(|&k2| k2 != k) {
                assert!(conj[(k, k2 + n)].norm() < 1e-14);
            }
        }
    }

    #[test]
    fn zero_time_values() {
        for n in -4..=4 {
            assert_eq!(f_n_finite(n, 0.0, 9), 0.0);
            let want = if n == 0 { 1.0 } else { 0.0 };
            assert_abs_diff_eq!(g_n_finite(n, 0.0, 9), want, epsilon = 1e-15);
            assert_eq!(f_n_infinite(n, 0.0), 0.0);
            assert_abs_diff_eq!(g_n_infinite(n, 0.0), want, epsilon = 0.0);
        }
        assert_abs_diff_eq!(g_n_infinite(0, 1e-9), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(g_n_infinite(-1, 1e-9), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn infinite_forms_against_bessel() {
        use crate::bessel::bessel_j;
        assert_abs_diff_eq!(
            f_n_infinite(1, 2.0),
            -2.0 * bessel_j(2, 4.0).unwrap() / 4.0,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(
            g_n_infinite(2, 3.0),
            5.0 * bessel_j(5, 6.0).unwrap() / 6.0,
            epsilon = 1e-15
        );
        let z = 2.0 * 1.3;
        assert_abs_diff_eq!(
            g_n_infinite(-1, 1.3),
            bessel_j(1, z).unwrap() / z - 0.5,
            epsilon = 1e-15
        );
        // both Bessel representations of f_n^∞ agree
        for n in -5..=5i64 {
            let t = 2.7;
            let alt = -0.5 * (bessel_j(2 * n - 1, 2.0 * t).unwrap() + bessel_j(2 * n + 1, 2.0 * t).unwrap());
            assert_abs_diff_eq!(f_n_infinite(n, t), alt, epsilon = 1e-14);
            let alt_g =
                0.5 * (bessel_j(2 * n, 2.0 * t).unwrap() + bessel_j(2 * n + 2, 2.0 * t).unwrap()) + limit_offset(n);
            assert_abs_diff_eq!(g_n_infinite(n, t), alt_g, epsilon = 1e-14);
        }
    }

    #[test]
    fn fourier_blocks_reproduce_mode_blocks() {
        let (n_sites, t) = (11, 1.9);
        for n in -5..=5i64 {
            let mut sum = nalgebra::Matrix2::<Complex64>::zeros();
            for k in 0..n_sites {
                let phi = ring_momentum(k, n_sites);
                sum += fourier_block_evolved(phi, t) * phase(n, k, n_sites);
            }
            sum /= Complex64::new(n_sites as f64, 0.0);
            let block = mode_block(n, t, n_sites, Limit::Finite).matrix();
            for (a, b) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
                assert!((sum[(a, b)] - block[(a, b)]).norm() < 1e-13);
            }
        }
    }

    #[test]
    fn fourier_path_matches_direct_evolution() {
        for &(n, t) in &[(21usize, 2.0), (9, 0.7), (10, 3.1), (21, 0.0)] {
            let direct = evolve_direct(&gamma_initial(n).unwrap(), &hamiltonian_matrix(n).unwrap(), t)
                .unwrap()
                .reordered(Ordering::Modewise);
            let fourier = gamma_t_fourier(n, t, Limit::Finite).unwrap();
            let diff = (direct.entries() - fourier.entries()).amax();
            assert!(diff <= 1e-9, "N={n}, t={t}: {diff}");
        }
    }

    #[test]
    fn f_and_g_are_correlation_entries() {
        let (n, t) = (21, 2.0);
        let direct = evolve_direct(&gamma_initial(n).unwrap(), &hamiltonian_matrix(n).unwrap(), t)
            .unwrap()
            .reordered(Ordering::Modewise);
        // block (0, 1) is γ_1 = [[f_1, -g_1], [g_{-1}, -f_1]]; block (1, 0) is γ_{-1}
        let b01 = direct.site_block(0, 1);
        assert_abs_diff_eq!(b01[(0, 0)], f_n_finite(1, t, n), epsilon = 1e-10);
        let b10 = direct.site_block(1, 0);
        assert_abs_diff_eq!(b10[(0, 1)], -g_n_finite(-1, t, n), epsilon = 1e-10);
        assert_abs_diff_eq!(b01[(1, 0)], g_n_finite(-1, t, n), epsilon = 1e-10);
    }

    #[test]
    fn zero_time_fourier_is_reordered_initial() {
        let g = gamma_t_fourier(7, 0.0, Limit::Finite).unwrap();
        let want = gamma_initial(7).unwrap().reordered(Ordering::Modewise);
        assert!((g.entries() - want.entries()).amax() < 1e-15);
        let g = gamma_t_fourier(7, 0.0, Limit::Thermodynamic).unwrap();
        assert!((g.entries() - want.entries()).amax() < 1e-15);
    }

    #[test]
    fn direct_evolution_invariants() {
        let n = 15;
        let g0 = gamma_initial(n).unwrap();
        let h = hamiltonian_matrix(n).unwrap();
        assert_eq!(evolve_direct(&g0, &h, 0.0).unwrap(), g0);
        for &t in &[0.3, 1.0, 4.0, 9.5] {
            let g = evolve_direct(&g0, &h, t).unwrap();
            assert!(g.purity_residual() <= 1e-10);
            assert!(g.antisymmetry_residual() <= 1e-10);
            assert!(g.max_abs_entry() <= 1.0 + 1e-12);
        }
        let wrong = gamma_initial(n + 1).unwrap();
        assert!(matches!(
            evolve_direct(&wrong, &h, 1.0),
            Err(Error::DimensionMismatch { .. })
        ));
        let modewise = g0.reordered(Ordering::Modewise);
        assert!(matches!(
            evolve_direct(&modewise, &h, 1.0),
            Err(Error::OrderingMismatch { .. })
        ));
    }

    #[test]
    fn reordering_round_trip() {
        let g = gamma_t_fourier(6, 1.2, Limit::Finite).unwrap();
        let back = g.reordered(Ordering::PositionMomentum).reordered(Ordering::Modewise);
        assert_eq!(g, back);
    }

    #[test]
    fn quadrature_bound_examples() {
        let b = quadrature_error_bound(10, 4.0, 20, 2.9).unwrap();
        assert!(b <= 30.0 * (-11.0f64).exp());
        assert_abs_diff_eq!(
            thermodynamic_error_bound(20, 4.0),
            30.0 * (-11.0f64).exp(),
            epsilon = 1e-18
        );
        let mut prev = f64::INFINITY;
        for n_sites in 5..60 {
            let b = quadrature_error_bound(2, 3.0, n_sites, 1.3).unwrap();
            assert!(b < prev);
            prev = b;
        }
        assert!(quadrature_error_bound(1, 1.0, 10, 0.0).is_err());
        assert!(quadrature_error_bound(1, 1.0, 10, -1.0).is_err());
    }

    #[test]
    fn convenience_bound_dominates_general_bound() {
        for n_sites in (20..=60).step_by(4) {
            let mut t = 4.0;
            while t <= n_sites as f64 / 5.0 {
                for n in 0..=(n_sites as i64 / 2) {
                    let general = quadrature_error_bound(n, t, n_sites, 2.9).unwrap();
                    assert!(general <= thermodynamic_error_bound(n_sites, t));
                }
                t += 0.5;
            }
        }
    }

    #[test]
    fn csv_export() {
        let g = gamma_initial(2).unwrap();
        let mut buf = Vec::new();
        g.write_csv(&mut buf, 0.5).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "# N=2,t=0.5,ordering=position-momentum");
        assert_eq!(lines[1], "c0,c1,c2,c3");
        assert_eq!(lines[2], "0,0,-1,0");
        assert_eq!(lines.len(), 6);
    }
}
