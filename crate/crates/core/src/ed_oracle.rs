//! Brute-force state-vector oracle for small spin chains.
//!
//! Basis convention: basis index bit for site `j` is bit `N-1-j`, so site 0
//! is the most significant. A set bit is the computational `|1⟩`, on which
//! `σ_z` acts as `-1`. With this choice the Jordan–Wigner correlation matrix
//! of `|1…1⟩` is [`gamma_initial`](crate::ising_exact::gamma_initial) and the
//! parity of `|1…1⟩` is `-1` for odd `N`.
//!
//! The free-fermion solution uses a model time `τ` related to the spin clock
//! by [`spin_time_for_model_time`].

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{domain, Error, Result};
use crate::ising_exact::{CorrelationMatrix, Ordering};
use crate::linalg;

pub const MAX_HAMILTONIAN_SPINS: usize = 14;
pub const MAX_CORRELATION_SPINS: usize = 12;
pub const NORM_TOL: f64 = 1e-10;
pub const IMAG_RESIDUAL_TOL: f64 = 1e-10;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

/// Spin-Hamiltonian time at which the exact state reproduces the
/// correlation matrix of model time `τ`.
pub fn spin_time_for_model_time(tau: f64) -> f64 {
    -0.5 * tau
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum Boundary {
    Periodic,
    Open,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    n_spins: usize,
    amps: DVector<Complex64>,
}

impl StateVector {
    pub fn new(n_spins: usize, amps: DVector<Complex64>) -> Result<Self> {
        if amps.len() != 1usize << n_spins {
            return Err(Error::DimensionMismatch {
                expected: 1 << n_spins,
                found: amps.len(),
            });
        }
        let norm = amps.norm();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::Residual {
                context: "state vector norm",
                residual: (norm - 1.0).abs(),
                tolerance: NORM_TOL,
            });
        }
        Ok(Self { n_spins, amps })
    }

    pub fn basis(n_spins: usize, index: usize) -> Self {
        let mut amps = DVector::from_element(1 << n_spins, ZERO);
        amps[index] = ONE;
        Self { n_spins, amps }
    }

    /// `|1…1⟩`, the quench initial state.
    pub fn all_ones(n_spins: usize) -> Self {
        Self::basis(n_spins, (1 << n_spins) - 1)
    }

    /// Haar-random pure state.
    pub fn random<R: Rng + ?Sized>(n_spins: usize, rng: &mut R) -> Self {
        let amps = DVector::from_fn(1 << n_spins, |_, _| {
            Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
        });
        let norm = amps.norm();
        Self {
            n_spins,
            amps: amps / Complex64::from(norm),
        }
    }

    pub fn n_spins(&self) -> usize {
        self.n_spins
    }

    pub fn amplitudes(&self) -> &DVector<Complex64> {
        &self.amps
    }

    pub fn norm(&self) -> f64 {
        self.amps.norm()
    }

    pub fn inner(&self, other: &Self) -> Complex64 {
        self.amps.dotc(&other.amps)
    }

    pub fn fidelity(&self, other: &Self) -> f64 {
        self.inner(other).norm_sqr()
    }

    pub fn expectation(&self, h: &DMatrix<f64>) -> f64 {
        let re = h * self.amps.map(|z| z.re);
        let im = h * self.amps.map(|z| z.im);
        self.amps
            .iter()
            .zip(re.iter().zip(im.iter()))
            .map(|(a, (r, i))| a.re * r + a.im * i)
            .sum()
    }

    pub fn density_matrix(&self) -> DMatrix<Complex64> {
        &self.amps * self.amps.adjoint()
    }
}

fn site_bit(n_spins: usize, site: usize) -> usize {
    1 << (n_spins - 1 - site)
}

/// `ℋ = -½ Σ_j [σ^x_j σ^x_{j+1} + σ^z_j]` as a dense real matrix. The
/// periodic variant adds the bond `(N-1, 0)`; for `N = 2` that bond
/// coincides with `(0, 1)` and is counted twice.
pub fn build_spin_hamiltonian(n_spins: usize, boundary: Boundary) -> Result<DMatrix<f64>> {
    if n_spins == 0 {
        return Err(domain("spin hamiltonian", "N must be positive"));
    }
    if n_spins > MAX_HAMILTONIAN_SPINS {
        return Err(Error::TooLarge {
            requested: n_spins,
            limit: MAX_HAMILTONIAN_SPINS,
        });
    }
    if boundary == Boundary::Periodic && n_spins < 2 {
        return Err(domain("spin hamiltonian", "periodic chain needs N ≥ 2"));
    }
    let dim = 1usize << n_spins;
    let mut h = DMatrix::zeros(dim, dim);
    let mut bonds: Vec<(usize, usize)> = (0..n_spins - 1).map(|j| (j, j + 1)).collect();
    if boundary == Boundary::Periodic {
        bonds.push((n_spins - 1, 0));
    }
    for i in 0..dim {
        let down = i.count_ones() as f64;
        h[(i, i)] = -0.5 * (n_spins as f64 - 2.0 * down);
        for &(a, b) in &bonds {
            let j = i ^ site_bit(n_spins, a) ^ site_bit(n_spins, b);
            h[(j, i)] -= 0.5;
        }
    }
    Ok(h)
}

struct Sector {
    indices: Vec<usize>,
    vectors: DMatrix<f64>,
    values: DVector<f64>,
}

/// Spectral propagator `e^{-iHt}` of a real symmetric matrix. The matrix is
/// split into the connected components of its sparsity graph (for the spin
/// chain these are the parity sectors) and each block is diagonalized.
pub struct Propagator {
    dim: usize,
    sectors: Vec<Sector>,
}

impl Propagator {
    pub fn new(h: &DMatrix<f64>) -> Result<Self> {
        let dim = h.nrows();
        if h.ncols() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: h.ncols(),
            });
        }
        let asym = (h - h.transpose()).amax();
        if asym > 1e-12 {
            return Err(Error::Residual {
                context: "hamiltonian symmetry",
                residual: asym,
                tolerance: 1e-12,
            });
        }
        let mut parent: Vec<usize> = (0..dim).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        for j in 0..dim {
            for i in (j + 1)..dim {
                if h[(i, j)] != 0.0 {
                    let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                    if a != b {
                        parent[a] = b;
                    }
                }
            }
        }
        let mut groups: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
        for i in 0..dim {
            let r = find(&mut parent, i);
            groups.entry(r).or_default().push(i);
        }
        let sectors = groups
            .into_values()
            .collect::<Vec<_>>()
            .into_par_iter()
            .map(|indices| {
                let m = indices.len();
                let block = DMatrix::from_fn(m, m, |a, b| h[(indices[a], indices[b])]);
                let (values, vectors) = linalg::eigh(&block)?;
                Ok(Sector {
                    indices,
                    vectors,
                    values,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { dim, sectors })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of independent blocks found.
    pub fn n_sectors(&self) -> usize {
        self.sectors.len()
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self.sectors.iter().flat_map(|s| s.values.iter().copied()).collect();
        v.sort_by(f64::total_cmp);
        v
    }

    /// `V e^{-iΛt} Vᵀ ψ`.
    pub fn apply(&self, psi: &StateVector, t: f64) -> Result<StateVector> {
        if psi.amps.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: psi.amps.len(),
            });
        }
        if t == 0.0 {
            return Ok(psi.clone());
        }
        let mut out = DVector::from_element(self.dim, ZERO);
        for s in &self.sectors {
            let re = DVector::from_iterator(s.indices.len(), s.indices.iter().map(|&i| psi.amps[i].re));
            let im = DVector::from_iterator(s.indices.len(), s.indices.iter().map(|&i| psi.amps[i].im));
            let cr = s.vectors.tr_mul(&re);
            let ci = s.vectors.tr_mul(&im);
            let mut pr = DVector::zeros(cr.len());
            let mut pi = DVector::zeros(cr.len());
            for k in 0..cr.len() {
                let phase = Complex64::from_polar(1.0, -s.values[k] * t) * Complex64::new(cr[k], ci[k]);
                pr[k] = phase.re;
                pi[k] = phase.im;
            }
            let vr = &s.vectors * pr;
            let vi = &s.vectors * pi;
            for (a, &i) in s.indices.iter().enumerate() {
                out[i] = Complex64::new(vr[a], vi[a]);
            }
        }
        Ok(StateVector {
            n_spins: psi.n_spins,
            amps: out,
        })
    }
}

/// `e^{-iHt} ψ0` by full eigendecomposition.
pub fn evolve_state(psi0: &StateVector, h: &DMatrix<f64>, t: f64) -> Result<StateVector> {
    Propagator::new(h)?.apply(psi0, t)
}

/// Quenched chain `e^{-iℋt}|1…1⟩` with a cached propagator.
pub struct QuenchOracle {
    n_spins: usize,
    boundary: Boundary,
    hamiltonian: DMatrix<f64>,
    propagator: Propagator,
    initial: StateVector,
}

impl QuenchOracle {
    pub fn new(n_spins: usize, boundary: Boundary) -> Result<Self> {
        let hamiltonian = build_spin_hamiltonian(n_spins, boundary)?;
        let propagator = Propagator::new(&hamiltonian)?;
        Ok(Self {
            n_spins,
            boundary,
            hamiltonian,
            propagator,
            initial: StateVector::all_ones(n_spins),
        })
    }

    pub fn n_spins(&self) -> usize {
        self.n_spins
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    pub fn hamiltonian(&self) -> &DMatrix<f64> {
        &self.hamiltonian
    }

    pub fn state_at_spin_time(&self, t: f64) -> StateVector {
        self.propagator
            .apply(&self.initial, t)
            .expect("propagator built for this chain")
    }

    pub fn state_at_model_time(&self, tau: f64) -> StateVector {
        self.state_at_spin_time(spin_time_for_model_time(tau))
    }
}

fn shannon_bits(probs: impl Iterator<Item = f64>) -> f64 {
    probs.filter(|&p| p > 0.0).map(|p| -p * p.log2()).sum()
}

/// Von Neumann entropy in bits of sites `0..L`, from the singular values of
/// the `2^L × 2^{N-L}` amplitude matrix.
pub fn reduced_entropy(psi: &StateVector, block_len: usize) -> Result<f64> {
    let n = psi.n_spins;
    if block_len == 0 || block_len >= n {
        return Err(domain("reduced entropy", format!("L = {block_len} outside 1..{n}")));
    }
    let rows = 1usize << block_len;
    let cols = 1usize << (n - block_len);
    // site 0 most significant: row index is the block configuration
    let m = DMatrix::from_fn(rows, cols, |a, b| psi.amps[a * cols + b]);
    let sv = linalg::singular_values(&m)?;
    Ok(shannon_bits(sv.iter().map(|s| s * s)))
}

/// Von Neumann entropy in bits of a Hermitian density matrix.
pub fn von_neumann_entropy(rho: &DMatrix<Complex64>) -> Result<f64> {
    Ok(shannon_bits(linalg::eigvalsh(rho)?.into_iter().map(|l| l.max(0.0))))
}

/// `‖A‖₁` of a Hermitian matrix.
pub fn trace_norm(a: &DMatrix<Complex64>) -> Result<f64> {
    Ok(linalg::eigvalsh(a)?.iter().map(|l| l.abs()).sum())
}

/// Traces out all but the first `keep` qubits of an `n_qubits` density
/// matrix.
pub fn partial_trace(rho: &DMatrix<Complex64>, n_qubits: usize, keep: usize) -> Result<DMatrix<Complex64>> {
    if rho.nrows() != 1 << n_qubits || rho.ncols() != rho.nrows() {
        return Err(Error::DimensionMismatch {
            expected: 1 << n_qubits,
            found: rho.nrows(),
        });
    }
    if keep > n_qubits {
        return Err(domain("partial trace", format!("keep {keep} of {n_qubits} qubits")));
    }
    let dk = 1usize << keep;
    let de = 1usize << (n_qubits - keep);
    Ok(DMatrix::from_fn(dk, dk, |a, b| {
        (0..de).map(|e| rho[(a * de + e, b * de + e)]).sum()
    }))
}

/// Random mixed state on `n_qubits`: the reduction of a Haar-random pure
/// state on `n_qubits + env_qubits`.
pub fn random_mixed_state<R: Rng + ?Sized>(n_qubits: usize, env_qubits: usize, rng: &mut R) -> DMatrix<Complex64> {
    let psi = StateVector::random(n_qubits + env_qubits, rng);
    partial_trace(&psi.density_matrix(), n_qubits + env_qubits, n_qubits).expect("consistent dimensions")
}

/// A Majorana operator as a signed permutation: `c|i⟩ = coeff[i] |target[i]⟩`.
#[derive(Debug, Clone, PartialEq)]
pub struct Majorana {
    target: Vec<usize>,
    coeff: Vec<Complex64>,
}

impl Majorana {
    /// `c_j = Z_0⋯Z_{j-1} X_j` for `kind = 0` and `c_{j+N} = Z_0⋯Z_{j-1} Y_j`
    /// for `kind = 1`.
    pub fn new(n_spins: usize, site: usize, kind: usize) -> Self {
        assert!(site < n_spins && kind < 2);
        let dim = 1usize << n_spins;
        let flip = site_bit(n_spins, site);
        // bits of sites 0..site-1 are the high bits above `flip`
        let string_mask = (dim - 1) & !((flip << 1) - 1);
        let mut target = Vec::with_capacity(dim);
        let mut coeff = Vec::with_capacity(dim);
        for i in 0..dim {
            let sign = if (i & string_mask).count_ones().is_multiple_of(2) {
                1.0
            } else {
                -1.0
            };
            let c = if kind == 0 {
                Complex64::new(sign, 0.0)
            } else {
                // Y|0⟩ = i|1⟩, Y|1⟩ = -i|0⟩
                let s = if i & flip == 0 { 1.0 } else { -1.0 };
                I * (sign * s)
            };
            target.push(i ^ flip);
            coeff.push(c);
        }
        Self { target, coeff }
    }

    /// All `2N` operators in position-momentum order.
    pub fn all(n_spins: usize) -> Vec<Self> {
        (0..2)
            .flat_map(|kind| (0..n_spins).map(move |site| Self::new(n_spins, site, kind)))
            .collect()
    }

    pub fn apply(&self, v: &DVector<Complex64>) -> DVector<Complex64> {
        let mut out = DVector::from_element(v.len(), ZERO);
        for (i, (&j, &c)) in self.target.iter().zip(&self.coeff).enumerate() {
            out[j] += c * v[i];
        }
        out
    }

    pub fn to_dense(&self) -> DMatrix<Complex64> {
        let dim = self.target.len();
        let mut m = DMatrix::from_element(dim, dim, ZERO);
        for (i, (&j, &c)) in self.target.iter().zip(&self.coeff).enumerate() {
            m[(j, i)] = c;
        }
        m
    }
}

/// `Γ_kl = -(i/2)⟨ψ|[c_k, c_l]|ψ⟩` in position-momentum order.
pub fn jw_correlation_matrix(psi: &StateVector) -> Result<CorrelationMatrix> {
    let n = psi.n_spins;
    if n > MAX_CORRELATION_SPINS {
        return Err(Error::TooLarge {
            requested: n,
            limit: MAX_CORRELATION_SPINS,
        });
    }
    let images: Vec<DVector<Complex64>> = Majorana::all(n).iter().map(|c| c.apply(&psi.amps)).collect();
    let d = 2 * n;
    let mut gamma = DMatrix::zeros(d, d);
    for k in 0..d {
        for l in (k + 1)..d {
            // distinct Majoranas anticommute, so the commutator is 2 c_k c_l
            let v = -I * images[k].dotc(&images[l]);
            if v.im.abs() > IMAG_RESIDUAL_TOL {
                return Err(Error::Residual {
                    context: "imaginary part of a correlation entry",
                    residual: v.im.abs(),
                    tolerance: IMAG_RESIDUAL_TOL,
                });
            }
            gamma[(k, l)] = v.re;
            gamma[(l, k)] = -v.re;
        }
    }
    CorrelationMatrix::new(gamma, Ordering::PositionMomentum)
}

/// `⟨ψ|σ_z^{(0)}⋯σ_z^{(N-1)}|ψ⟩`.
pub fn parity_expectation(psi: &StateVector) -> f64 {
    psi.amps
        .iter()
        .enumerate()
        .map(|(i, a)| {
            if i.count_ones() % 2 == 0 {
                a.norm_sqr()
            } else {
                -a.norm_sqr()
            }
        })
        .sum()
}
