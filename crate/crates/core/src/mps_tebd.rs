//! Open-chain TEBD for the quench `|1…1⟩ → e^{-iℋt}|1…1⟩`, tracking bond
//! dimensions, cut entropies and the discarded weight.
//!
//! Time here is the spin Hamiltonian's own clock. Site and basis
//! conventions match [`ed_oracle`](crate::ed_oracle).

use nalgebra::{DMatrix, DVector, Matrix4};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::bounds::{bond_dim_lower_bound, TheoremHypotheses, EPSILON_0};
use crate::ed_oracle::{Boundary, QuenchOracle, StateVector, MAX_CORRELATION_SPINS};
use crate::error::{domain, Error, Result};
use crate::linalg;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Site tensor split by physical index: `a[s]` is `left × right`.
#[derive(Debug, Clone, PartialEq)]
struct Site {
    a: [DMatrix<Complex64>; 2],
}

impl Site {
    fn left(&self) -> usize {
        self.a[0].nrows()
    }

    fn right(&self) -> usize {
        self.a[0].ncols()
    }

    /// `(2·left) × right`, physical index outermost.
    fn stacked_rows(&self) -> DMatrix<Complex64> {
        let (l, r) = (self.left(), self.right());
        let mut m = DMatrix::from_element(2 * l, r, ZERO);
        for s in 0..2 {
            m.view_mut((s * l, 0), (l, r)).copy_from(&self.a[s]);
        }
        m
    }

    /// `left × (2·right)`.
    fn stacked_cols(&self) -> DMatrix<Complex64> {
        let (l, r) = (self.left(), self.right());
        let mut m = DMatrix::from_element(l, 2 * r, ZERO);
        for s in 0..2 {
            m.view_mut((0, s * r), (l, r)).copy_from(&self.a[s]);
        }
        m
    }

    fn from_rows(m: &DMatrix<Complex64>) -> Self {
        let l = m.nrows() / 2;
        Self {
            a: [m.rows(0, l).into_owned(), m.rows(l, l).into_owned()],
        }
    }

    fn from_cols(m: &DMatrix<Complex64>) -> Self {
        let r = m.ncols() / 2;
        Self {
            a: [m.columns(0, r).into_owned(), m.columns(r, r).into_owned()],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruncationPolicy {
    pub max_bond: Option<usize>,
    /// Largest discarded squared weight per cut.
    pub discard_tol: f64,
}

impl TruncationPolicy {
    pub fn new(max_bond: Option<usize>, discard_tol: f64) -> Result<Self> {
        if !(discard_tol >= 0.0) || !discard_tol.is_finite() {
            return Err(domain("truncation policy", format!("discard tolerance {discard_tol}")));
        }
        if max_bond == Some(0) {
            return Err(domain("truncation policy", "max bond must be positive"));
        }
        Ok(Self { max_bond, discard_tol })
    }

    pub fn discard(tol: f64) -> Result<Self> {
        Self::new(None, tol)
    }

    pub fn max_bond(d: usize) -> Result<Self> {
        Self::new(Some(d), 0.0)
    }

    /// Number of singular values to keep and the discarded weight.
    fn keep(&self, s: &[f64]) -> Result<(usize, f64)> {
        let total: f64 = s.iter().map(|x| x * x).sum();
        let mut k = s.len();
        let mut tail = 0.0;
        while k > 1 {
            let w = s[k - 1] * s[k - 1];
            if (tail + w) / total > self.discard_tol || (self.discard_tol == 0.0 && w > 0.0) {
                break;
            }
            tail += w;
            k -= 1;
        }
        if let Some(d) = self.max_bond {
            if k > d {
                if self.discard_tol == 0.0 && s[d..].iter().any(|&x| x > 0.0) {
                    return Err(Error::PolicyInfeasible(format!(
                        "zero discard tolerance needs bond {k} above the cap {d}"
                    )));
                }
                tail += s[d..k].iter().map(|x| x * x).sum::<f64>();
                k = d;
            }
        }
        Ok((k, tail / total))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatrixProductState {
    sites: Vec<Site>,
    center: usize,
    /// Discarded squared weight summed over the cuts of each step.
    truncation_ledger: Vec<f64>,
    /// `Π (1 - w)` over every truncation so far.
    kept_product: f64,
}

/// Product MPS `|1…1⟩`.
pub fn init_product_mps(n_spins: usize) -> Result<MatrixProductState> {
    if n_spins < 2 {
        return Err(domain("product mps", "N must be at least 2"));
    }
    let site = Site {
        a: [DMatrix::from_element(1, 1, ZERO), DMatrix::from_element(1, 1, ONE)],
    };
    Ok(MatrixProductState {
        sites: vec![site; n_spins],
        center: 0,
        truncation_ledger: Vec::new(),
        kept_product: 1.0,
    })
}

impl MatrixProductState {
    pub fn n_spins(&self) -> usize {
        self.sites.len()
    }

    pub fn center(&self) -> usize {
        self.center
    }

    pub fn bond_dims(&self) -> Vec<usize> {
        self.sites[..self.sites.len() - 1].iter().map(Site::right).collect()
    }

    pub fn max_bond(&self) -> usize {
        self.bond_dims().into_iter().max().unwrap_or(1)
    }

    pub fn truncation_ledger(&self) -> &[f64] {
        &self.truncation_ledger
    }

    /// `ε̂ = 2(1 - Π(1 - w))` over all discarded weights `w`, an upper-bound
    /// style proxy for the trace-norm error.
    pub fn error_estimate(&self) -> f64 {
        2.0 * (1.0 - self.kept_product)
    }

    pub fn norm(&self) -> f64 {
        self.sites[self.center].stacked_rows().norm()
    }

    /// Largest deviation from left (right) isometry on sites left (right) of
    /// the center.
    pub fn canonical_residual(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for (i, site) in self.sites.iter().enumerate() {
            if i < self.center {
                let m = site.stacked_rows();
                let id = DMatrix::identity(m.ncols(), m.ncols());
                worst = worst.max((m.adjoint() * &m - id).map(|z| z.norm()).amax());
            } else if i > self.center {
                let m = site.stacked_cols();
                let id = DMatrix::identity(m.nrows(), m.nrows());
                worst = worst.max((&m * m.adjoint() - id).map(|z| z.norm()).amax());
            }
        }
        worst
    }

    fn shift_right(&mut self) {
        let c = self.center;
        let qr = self.sites[c].stacked_rows().qr();
        let (q, r) = (qr.q(), qr.r());
        self.sites[c] = Site::from_rows(&q);
        let next = &mut self.sites[c + 1];
        for s in 0..2 {
            next.a[s] = &r * &next.a[s];
        }
        self.center += 1;
    }

    fn shift_left(&mut self) {
        let c = self.center;
        let qr = self.sites[c].stacked_cols().adjoint().qr();
        let (q, r) = (qr.q(), qr.r());
        self.sites[c] = Site::from_cols(&q.adjoint());
        let prev = &mut self.sites[c - 1];
        let ra = r.adjoint();
        for s in 0..2 {
            prev.a[s] = &prev.a[s] * &ra;
        }
        self.center -= 1;
    }

    pub fn move_center(&mut self, to: usize) {
        assert!(to < self.sites.len());
        while self.center < to {
            self.shift_right();
        }
        while self.center > to {
            self.shift_left();
        }
    }

    /// Applies a two-site gate on `(i, i+1)` and truncates. The center ends
    /// on `i+1` when `sweep_right`, else on `i`. Returns the discarded weight.
    fn apply_gate(
        &mut self,
        i: usize,
        gate: &Matrix4<Complex64>,
        policy: &TruncationPolicy,
        sweep_right: bool,
    ) -> Result<f64> {
        if self.center != i && self.center != i + 1 {
            self.move_center(if self.center < i { i } else { i + 1 });
        }
        let (l, r) = (self.sites[i].left(), self.sites[i + 1].right());
        let mut blocks = Vec::with_capacity(4);
        for s1 in 0..2 {
            for s2 in 0..2 {
                blocks.push(&self.sites[i].a[s1] * &self.sites[i + 1].a[s2]);
            }
        }
        let mut theta = DMatrix::from_element(2 * l, 2 * r, ZERO);
        for out in 0..4 {
            let mut acc = DMatrix::from_element(l, r, ZERO);
            for (inp, b) in blocks.iter().enumerate() {
                let g = gate[(out, inp)];
                if g != ZERO {
                    acc += b * g;
                }
            }
            let (s1, s2) = (out / 2, out % 2);
            theta.view_mut((s1 * l, s2 * r), (l, r)).copy_from(&acc);
        }
        let svd = linalg::svd(&theta)?;
        let (k, discarded) = policy.keep(&svd.s)?;
        let norm = svd.s[..k].iter().map(|x| x * x).sum::<f64>().sqrt();
        let mut left = svd.u.columns(0, k).into_owned();
        let mut right = svd.vt.rows(0, k).into_owned();
        for j in 0..k {
            let w = Complex64::from(svd.s[j] / norm);
            if sweep_right {
                let mut row = right.row_mut(j);
                row *= w;
            } else {
                let mut col = left.column_mut(j);
                col *= w;
            }
        }
        self.sites[i] = Site::from_rows(&left);
        self.sites[i + 1] = Site::from_cols(&right);
        self.center = if sweep_right { i + 1 } else { i };
        self.kept_product *= 1.0 - discarded;
        Ok(discarded)
    }

    /// Schmidt values across every cut, from one left-to-right sweep on a
    /// copy of the state.
    pub fn schmidt_spectra(&self) -> Vec<Vec<f64>> {
        let mut work = self.clone();
        work.move_center(0);
        let n = work.sites.len();
        let mut out = Vec::with_capacity(n - 1);
        for c in 0..n - 1 {
            let svd = linalg::svd(&work.sites[c].stacked_rows()).expect("svd of a finite site tensor");
            let mut sv = svd.vt;
            for (j, &x) in svd.s.iter().enumerate() {
                let mut row = sv.row_mut(j);
                row *= Complex64::from(x);
            }
            work.sites[c] = Site::from_rows(&svd.u);
            let next = &mut work.sites[c + 1];
            for s in 0..2 {
                next.a[s] = &sv * &next.a[s];
            }
            work.center = c + 1;
            let vals = svd.s;
            out.push(vals);
        }
        out
    }

    /// Entropy in bits across every cut `1..N`.
    pub fn cut_entropies(&self) -> Vec<f64> {
        self.schmidt_spectra().iter().map(|s| schmidt_entropy(s)).collect()
    }

    /// Dense `2^N` amplitude vector, site 0 most significant.
    pub fn to_state_vector(&self) -> Result<StateVector> {
        let n = self.sites.len();
        if n > MAX_CORRELATION_SPINS + 2 {
            return Err(Error::TooLarge {
                requested: n,
                limit: MAX_CORRELATION_SPINS + 2,
            });
        }
        // rows: configurations of sites so far; columns: right bond
        let mut acc = self.sites[0].stacked_rows();
        for site in &self.sites[1..] {
            let rows = acc.nrows();
            let r = site.right();
            let mut next = DMatrix::from_element(2 * rows, r, ZERO);
            for s in 0..2 {
                let part = &acc * &site.a[s];
                for row in 0..rows {
                    // append the new site as least significant bit
                    next.row_mut(2 * row + s).copy_from(&part.row(row));
                }
            }
            acc = next;
        }
        let mut amps = DVector::from_element(1 << n, ZERO);
        // the first site's rows are stacked by physical index, then each
        // appended site doubles the index
        for (idx, v) in amps.iter_mut().enumerate() {
            *v = acc[(idx, 0)];
        }
        let norm = amps.norm();
        StateVector::new(n, amps / Complex64::from(norm))
    }
}

fn schmidt_entropy(s: &[f64]) -> f64 {
    let total: f64 = s.iter().map(|x| x * x).sum();
    s.iter()
        .map(|x| x * x / total)
        .filter(|&p| p > 0.0)
        .map(|p| -p * p.log2())
        .sum()
}

/// Entropy in bits across the cut between sites `cut-1` and `cut`.
pub fn mps_cut_entropy(mps: &MatrixProductState, cut: usize) -> Result<f64> {
    let n = mps.n_spins();
    if cut == 0 || cut >= n {
        return Err(Error::CutOutOfRange { cut, max: n - 1 });
    }
    let mut work = mps.clone();
    work.move_center(cut - 1);
    let s = linalg::singular_values(&work.sites[cut - 1].stacked_rows())?;
    Ok(schmidt_entropy(&s))
}

struct Layer {
    bonds: Vec<usize>,
    gates: Vec<Matrix4<Complex64>>,
    sweep_right: bool,
}

/// Even/odd bond splitting of `e^{-iℋ dt}` on the open chain.
pub struct TrotterPlan {
    n_spins: usize,
    dt: f64,
    order: u8,
    layers: Vec<Layer>,
}

/// `-½ σ^xσ^x - w_l σ^z ⊗ 𝟙 - w_r 𝟙 ⊗ σ^z` in the basis `2 s_l + s_r`.
pub fn bond_hamiltonian(w_left: f64, w_right: f64) -> Matrix4<f64> {
    let mut h = Matrix4::zeros();
    for idx in 0..4 {
        h[(idx ^ 3, idx)] = -0.5;
        let zl = if idx & 2 == 0 { 1.0 } else { -1.0 };
        let zr = if idx & 1 == 0 { 1.0 } else { -1.0 };
        h[(idx, idx)] = -(w_left * zl + w_right * zr);
    }
    h
}

fn field_weight(site: usize, n_spins: usize) -> f64 {
    if site == 0 || site == n_spins - 1 {
        0.5
    } else {
        0.25
    }
}

pub fn bond_gate(bond: usize, n_spins: usize, tau: f64) -> Matrix4<Complex64> {
    let h = bond_hamiltonian(field_weight(bond, n_spins), field_weight(bond + 1, n_spins));
    let eig = h.symmetric_eigen();
    let v = eig.eigenvectors.map(Complex64::from);
    let d = Matrix4::from_diagonal(&eig.eigenvalues.map(|l| Complex64::from_polar(1.0, -l * tau)));
    v * d * v.transpose()
}

impl TrotterPlan {
    pub fn new(n_spins: usize, dt: f64, order: u8) -> Result<Self> {
        if n_spins < 2 {
            return Err(domain("trotter plan", "N must be at least 2"));
        }
        if !dt.is_finite() {
            return Err(domain("trotter plan", format!("dt = {dt}")));
        }
        let layer = |parity: usize, tau: f64, sweep_right: bool| {
            let mut bonds: Vec<usize> = (parity..n_spins - 1).step_by(2).collect();
            if !sweep_right {
                bonds.reverse();
            }
            let gates = bonds.iter().map(|&b| bond_gate(b, n_spins, tau)).collect();
            Layer {
                bonds,
                gates,
                sweep_right,
            }
        };
        let layers = match order {
            1 => vec![layer(0, dt, true), layer(1, dt, false)],
            2 => vec![layer(0, 0.5 * dt, true), layer(1, dt, false), layer(0, 0.5 * dt, true)],
            _ => return Err(domain("trotter plan", format!("order {order} not in {{1, 2}}"))),
        };
        Ok(Self {
            n_spins,
            dt,
            order,
            layers,
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn order(&self) -> u8 {
        self.order
    }

    /// Largest `‖U†U - 𝟙‖_max` over the gates.
    pub fn unitarity_residual(&self) -> f64 {
        self.layers
            .iter()
            .flat_map(|l| l.gates.iter())
            .map(|g| (g.adjoint() * g - Matrix4::identity()).map(|z| z.norm()).amax())
            .fold(0.0, f64::max)
    }

    /// One step applied to a dense state vector, without truncation.
    pub fn apply_dense(&self, psi: &StateVector) -> Result<StateVector> {
        let n = psi.n_spins();
        if n != self.n_spins {
            return Err(Error::DimensionMismatch {
                expected: self.n_spins,
                found: n,
            });
        }
        let mut amps = psi.amplitudes().clone();
        for layer in &self.layers {
            for (&b, g) in layer.bonds.iter().zip(&layer.gates) {
                apply_gate_dense(&mut amps, n, b, g);
            }
        }
        StateVector::new(n, amps)
    }
}

/// Applies a gate on bond `(b, b+1)` of a dense `2^n` amplitude vector. The
/// gate basis is `2 s_b + s_{b+1}`.
fn apply_gate_dense(amps: &mut DVector<Complex64>, n: usize, b: usize, g: &Matrix4<Complex64>) {
    let lo = 1usize << (n - 2 - b);
    let hi = lo << 1;
    for base in 0..amps.len() {
        if base & (hi | lo) != 0 {
            continue;
        }
        let idx = [base, base | lo, base | hi, base | hi | lo];
        let v = [amps[idx[0]], amps[idx[1]], amps[idx[2]], amps[idx[3]]];
        for (out, &i) in idx.iter().enumerate() {
            amps[i] = (0..4).map(|k| g[(out, k)] * v[k]).sum();
        }
    }
}

/// One Trotter step with truncation. Records the step's discarded weight.
pub fn tebd_step(mps: &mut MatrixProductState, plan: &TrotterPlan, policy: &TruncationPolicy) -> Result<()> {
    if mps.n_spins() != plan.n_spins {
        return Err(Error::DimensionMismatch {
            expected: plan.n_spins,
            found: mps.n_spins(),
        });
    }
    let mut step_discard = 0.0;
    for layer in &plan.layers {
        for (&b, g) in layer.bonds.iter().zip(&layer.gates) {
            step_discard += mps.apply_gate(b, g, policy, layer.sweep_right)?;
        }
    }
    mps.truncation_ledger.push(step_discard);
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuenchConfig {
    pub n_spins: usize,
    pub t_final: f64,
    pub dt: f64,
    pub order: u8,
    pub policy: TruncationPolicy,
    /// Record a sample every this many steps (the final step is always
    /// recorded).
    pub sample_every: usize,
    /// Attach the fidelity against exact evolution when `N ≤ 12`.
    pub with_fidelity: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TebdSample {
    pub t: f64,
    pub step: usize,
    pub max_bond: usize,
    pub bond_profile: Vec<usize>,
    pub cut_entropies: Vec<f64>,
    pub half_chain_entropy: f64,
    pub error_estimate: f64,
    pub fidelity: Option<f64>,
    /// Lower bound on `log₂ D` at `(t, ε̂)`, present when `ε̂ < ε₀` and `t > 0`.
    pub log2_bond_bound: Option<f64>,
    /// Theorem hypotheses for the half chain of this `N` hold at `t`.
    pub hypotheses_hold: bool,
}

impl TebdSample {
    /// `log₂(max D) ≥ bound` whenever the bound is present.
    pub fn bond_bound_consistent(&self) -> bool {
        self.log2_bond_bound.is_none_or(|b| (self.max_bond as f64).log2() >= b)
    }
}

pub fn run_quench(config: &QuenchConfig) -> Result<Vec<TebdSample>> {
    let n = config.n_spins;
    if !(config.t_final >= 0.0) || !(config.dt > 0.0) {
        return Err(domain(
            "tebd run",
            format!("t_final = {}, dt = {}", config.t_final, config.dt),
        ));
    }
    if config.sample_every == 0 {
        return Err(domain("tebd run", "sample interval must be positive"));
    }
    let steps_f = config.t_final / config.dt;
    let n_steps = steps_f.round() as usize;
    if (steps_f - n_steps as f64).abs() > 1e-9 * steps_f.max(1.0) {
        return Err(domain(
            "tebd run",
            format!("t_final = {} is not a multiple of dt = {}", config.t_final, config.dt),
        ));
    }
    let plan = TrotterPlan::new(n, config.dt, config.order)?;
    let oracle = if config.with_fidelity && n <= MAX_CORRELATION_SPINS {
        Some(QuenchOracle::new(n, Boundary::Open)?)
    } else {
        None
    };
    let mut mps = init_product_mps(n)?;
    let mut samples = Vec::new();
    let record = |mps: &MatrixProductState, step: usize| -> Result<TebdSample> {
        let t = step as f64 * config.dt;
        let cut_entropies = mps.cut_entropies();
        let eps = mps.error_estimate();
        let fidelity = match &oracle {
            Some(o) => Some(o.state_at_spin_time(t).fidelity(&mps.to_state_vector()?)),
            None => None,
        };
        let log2_bond_bound = if t > 0.0 && eps < EPSILON_0 {
            Some(bond_dim_lower_bound(t, eps)?.log2_d)
        } else {
            None
        };
        Ok(TebdSample {
            t,
            step,
            max_bond: mps.max_bond(),
            bond_profile: mps.bond_dims(),
            half_chain_entropy: cut_entropies[n / 2 - 1],
            cut_entropies,
            error_estimate: eps,
            fidelity,
            log2_bond_bound,
            hypotheses_hold: TheoremHypotheses::new(n, n / 2, t).holds(),
        })
    };
    samples.push(record(&mps, 0)?);
    for step in 1..=n_steps {
        tebd_step(&mut mps, &plan, &config.policy)?;
        if step % config.sample_every == 0 || step == n_steps {
            samples.push(record(&mps, step)?);
        }
    }
    Ok(samples)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ed_oracle::{build_spin_hamiltonian, evolve_state, reduced_entropy};
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;

    fn exact() -> TruncationPolicy {
        TruncationPolicy::discard(0.0).unwrap()
    }

    #[test]
    fn product_state() {
        let mps = init_product_mps(4).unwrap();
        assert_eq!(mps.bond_dims(), vec![1, 1, 1]);
        assert_abs_diff_eq!(mps.norm(), 1.0);
        assert!(mps.cut_entropies().iter().all(|&s| s == 0.0));
        let psi = mps.to_state_vector().unwrap();
        assert_eq!(psi.amplitudes()[15], ONE);
        assert_eq!(psi.amplitudes().iter().filter(|z| z.norm() > 0.0).count(), 1);
        assert!(init_product_mps(1).is_err());
        assert!(matches!(mps_cut_entropy(&mps, 4), Err(Error::CutOutOfRange { .. })));
        assert!(matches!(mps_cut_entropy(&mps, 0), Err(Error::CutOutOfRange { .. })));
    }

    #[test]
    fn bell_pair_entropy() {
        let mut mps = init_product_mps(2).unwrap();
        // |11⟩ → (|00⟩ + |11⟩)/√2
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let mut g = Matrix4::zeros();
        g[(0, 3)] = Complex64::from(s);
        g[(3, 3)] = Complex64::from(s);
        g[(0, 0)] = Complex64::from(s);
        g[(3, 0)] = Complex64::from(-s);
        g[(1, 1)] = ONE;
        g[(2, 2)] = ONE;
        mps.apply_gate(0, &g, &exact(), true).unwrap();
        assert_abs_diff_eq!(mps_cut_entropy(&mps, 1).unwrap(), 1.0, epsilon = 1e-14);
    }

    #[test]
    fn gates_are_unitary() {
        for order in [1, 2] {
            let plan = TrotterPlan::new(9, 0.37, order).unwrap();
            assert!(plan.unitarity_residual() <= 1e-12);
        }
        assert!(TrotterPlan::new(9, 0.1, 3).is_err());
    }

    #[test]
    fn bond_terms_sum_to_chain_hamiltonian() {
        for n in 2..=6 {
            let h = build_spin_hamiltonian(n, Boundary::Open).unwrap();
            let mut sum = DMatrix::<f64>::zeros(1 << n, 1 << n);
            for b in 0..n - 1 {
                let hb = bond_hamiltonian(field_weight(b, n), field_weight(b + 1, n));
                let lo = 1usize << (n - 2 - b);
                let hi = lo << 1;
                for base in (0..1usize << n).filter(|i| i & (hi | lo) == 0) {
                    let idx = [base, base | lo, base | hi, base | hi | lo];
                    for a in 0..4 {
                        for c in 0..4 {
                            sum[(idx[a], idx[c])] += hb[(a, c)];
                        }
                    }
                }
            }
            assert!((sum - h).amax() < 1e-15, "N = {n}");
        }
    }

    #[test]
    fn trotter_step_error_is_third_order() {
        let n = 6;
        let h = build_spin_hamiltonian(n, Boundary::Open).unwrap();
        let psi0 = StateVector::random(n, &mut rand_chacha::ChaCha8Rng::seed_from_u64(5));
        let err = |dt: f64| {
            let exact = evolve_state(&psi0, &h, dt).unwrap();
            let trotter = TrotterPlan::new(n, dt, 2).unwrap().apply_dense(&psi0).unwrap();
            (exact.amplitudes() - trotter.amplitudes()).norm()
        };
        let (e1, e2) = (err(0.1), err(0.05));
        let ratio = e1 / e2;
        assert!((6.5..=9.5).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn zero_step_is_identity() {
        let mut mps = init_product_mps(6).unwrap();
        let plan = TrotterPlan::new(6, 0.3, 2).unwrap();
        for _ in 0..3 {
            tebd_step(&mut mps, &plan, &exact()).unwrap();
        }
        let before = mps.to_state_vector().unwrap();
        let zero = TrotterPlan::new(6, 0.0, 2).unwrap();
        let mut untouched = mps.clone();
        tebd_step(&mut untouched, &zero, &exact()).unwrap();
        let after = untouched.to_state_vector().unwrap();
        assert!((before.amplitudes() - after.amplitudes()).map(|z| z.norm()).amax() <= 1e-12);
        // a lossy policy may only drop what it is allowed to
        let policy = TruncationPolicy::discard(1e-12).unwrap();
        tebd_step(&mut mps, &zero, &policy).unwrap();
        let after = mps.to_state_vector().unwrap();
        assert!(1.0 - before.fidelity(&after) <= 1e-12 * 15.0);
        assert!((mps.norm() - 1.0).abs() <= 1e-10);
    }

    #[test]
    fn mps_matches_dense_trotter() {
        let n = 7;
        let plan = TrotterPlan::new(n, 0.1, 2).unwrap();
        let mut mps = init_product_mps(n).unwrap();
        let mut dense = StateVector::all_ones(n);
        for _ in 0..10 {
            tebd_step(&mut mps, &plan, &exact()).unwrap();
            dense = plan.apply_dense(&dense).unwrap();
            eprintln!(
                "DBG fid {} canon {} bonds {:?}",
                mps.to_state_vector().unwrap().fidelity(&dense),
                mps.canonical_residual(),
                mps.bond_dims()
            );
            assert!(mps.canonical_residual() <= 1e-10);
            assert!((mps.norm() - 1.0).abs() <= 1e-10);
        }
        let got = mps.to_state_vector().unwrap();
        assert!((got.fidelity(&dense) - 1.0).abs() <= 1e-12);
        for (cut, s) in mps.cut_entropies().iter().enumerate() {
            assert!((s - reduced_entropy(&dense, cut + 1).unwrap()).abs() < 1e-10);
            assert!((s - mps_cut_entropy(&mps, cut + 1).unwrap()).abs() < 1e-12);
        }
    }

    #[test]
    fn bond_caps_and_entropy_limit() {
        let n = 10;
        let plan = TrotterPlan::new(n, 0.05, 2).unwrap();
        let policy = TruncationPolicy::max_bond(4).unwrap();
        assert!(TruncationPolicy::new(Some(4), 0.0).is_ok());
        let policy = TruncationPolicy::new(policy.max_bond, 1e-14).unwrap();
        let mut mps = init_product_mps(n).unwrap();
        for _ in 0..40 {
            tebd_step(&mut mps, &plan, &policy).unwrap();
            for (i, &d) in mps.bond_dims().iter().enumerate() {
                assert!(d <= 4);
                assert!(d <= (1usize << (i + 1)).min(1 << (n - 1 - i)));
            }
            for (s, &d) in mps.cut_entropies().iter().zip(&mps.bond_dims()) {
                assert!(*s <= (d as f64).log2() + 1e-12);
            }
            assert!((mps.norm() - 1.0).abs() <= 1e-10);
        }
        assert!(mps.error_estimate() > 0.0);
    }

    #[test]
    fn infeasible_policy_is_reported() {
        let n = 8;
        let plan = TrotterPlan::new(n, 0.1, 2).unwrap();
        let policy = TruncationPolicy::new(Some(2), 0.0).unwrap();
        let mut mps = init_product_mps(n).unwrap();
        let res = (0..20).try_for_each(|_| tebd_step(&mut mps, &plan, &policy));
        assert!(matches!(res, Err(Error::PolicyInfeasible(_))));
    }

    #[test]
    fn small_run_tracks_oracle() {
        let cfg = QuenchConfig {
            n_spins: 8,
            t_final: 1.0,
            dt: 0.05,
            order: 2,
            policy: TruncationPolicy::discard(1e-12).unwrap(),
            sample_every: 5,
            with_fidelity: true,
        };
        let samples = run_quench(&cfg).unwrap();
        assert_eq!(samples.len(), 5);
        assert_eq!(samples[0].half_chain_entropy, 0.0);
        let last = samples.last().unwrap();
        assert!(last.fidelity.unwrap() > 1.0 - 1e-4);
        assert!(samples.iter().all(TebdSample::bond_bound_consistent));
        let bad = QuenchConfig { t_final: 1.01, ..cfg };
        assert!(run_quench(&bad).is_err());
    }
}
