//! Closed-form lower bounds: the linear entropy-growth bound, the continuity
//! (Audenaert) bound, and the resulting bound on MPS bond dimension.
//!
//! Entropies are in bits, but the `ln t` corrections are natural logarithms
//! exactly as the bounds are stated. Use [`nats_to_bits`] when mixing.

use std::f64::consts::{E, LN_2, PI};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::entropy::{binary_shannon, bound_chain, BoundChainReport};
use crate::error::{domain, Result};
use crate::ising_exact::{gamma_t_fourier, Limit, QuenchParams};

/// Trace-norm error at which the linear coefficient of the bond-dimension
/// bound vanishes, `2e/(3π) ≈ 0.577`.
pub const EPSILON_0: f64 = 2.0 * E / (3.0 * PI);

/// Slope of the entropy bound, `4/(3π)` bits per unit time.
pub const THEOREM_SLOPE: f64 = 4.0 / (3.0 * PI);

pub fn nats_to_bits(x: f64) -> f64 {
    x / LN_2
}

pub fn bits_to_nats(x: f64) -> f64 {
    x * LN_2
}

/// Applicability gate of the entropy-growth bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TheoremHypotheses {
    pub n_spins: usize,
    pub block_len: usize,
    pub t: f64,
}

impl TheoremHypotheses {
    pub fn new(n_spins: usize, block_len: usize, t: f64) -> Self {
        Self { n_spins, block_len, t }
    }

    pub fn holds(&self) -> bool {
        let l = self.block_len as f64;
        self.n_spins >= 20
            && self.block_len >= 10
            && self.t >= 4.0
            && self.t <= E * l / 4.0
            && self.t <= self.n_spins as f64 / 5.0
    }
}

/// `(4/3π) t - ½ ln t - 1`. Applicability is checked separately.
pub fn theorem1_bound(t: f64) -> f64 {
    THEOREM_SLOPE * t - 0.5 * t.ln() - 1.0
}

/// Trace-norm error `ε`, half reduced trace distance `T` and bond dimension
/// `D` of an MPS approximation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ApproximationBudget {
    pub epsilon: f64,
    pub half_trace_distance: f64,
    pub bond_dim: usize,
}

impl ApproximationBudget {
    pub fn new(epsilon: f64, half_trace_distance: f64, bond_dim: usize) -> Result<Self> {
        if !(epsilon >= 0.0) || !(half_trace_distance >= 0.0) || bond_dim == 0 {
            return Err(domain(
                "approximation budget",
                format!("ε = {epsilon}, T = {half_trace_distance}, D = {bond_dim}"),
            ));
        }
        if half_trace_distance > 0.5 * epsilon {
            return Err(domain(
                "approximation budget",
                format!("T = {half_trace_distance} exceeds ε/2 = {}", 0.5 * epsilon),
            ));
        }
        Ok(Self {
            epsilon,
            half_trace_distance,
            bond_dim,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AudenaertBound {
    /// `T log₂(2^L - 1) + H(T, 1-T)`.
    pub exact: f64,
    /// `T L + 1`.
    pub relaxed: f64,
}

pub fn audenaert_bound(half_trace_distance: f64, block_len: usize) -> Result<AudenaertBound> {
    let t = half_trace_distance;
    if !(0.0..=1.0).contains(&t) {
        return Err(domain("audenaert bound", format!("T = {t} outside [0, 1]")));
    }
    if block_len == 0 {
        return Err(domain("audenaert bound", "L must be positive"));
    }
    let l = block_len as f64;
    // log₂(2^L - 1) without overflow for large L
    let log_dim = l + (-(-l * LN_2).exp()).ln_1p() / LN_2;
    Ok(AudenaertBound {
        exact: t * log_dim + binary_shannon(t)?,
        relaxed: t * l + 1.0,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ApproxEntropyBound {
    /// `(4/3π) t - ½ ε L - ½ ln t - 2`.
    pub general: f64,
    /// `(4/3π - 2ε/e) t - ½ ln t - 2`, the general form at `L = 4t/e`.
    pub optimized: f64,
    /// `L ≥ 10` and `4 ≤ t ≤ eL/4`.
    pub block_hypotheses: bool,
    /// `t ≥ 5e/2`, needed for `L = 4t/e ≥ 10`.
    pub optimized_applicable: bool,
}

/// Lower bound on the block entropy of any state within trace distance `ε`
/// of the quenched state.
pub fn approx_entropy_lower_bound(t: f64, epsilon: f64, block_len: usize) -> Result<ApproxEntropyBound> {
    if !(t > 0.0) || !(epsilon >= 0.0) {
        return Err(domain("approximate entropy bound", format!("t = {t}, ε = {epsilon}")));
    }
    let l = block_len as f64;
    let tail = -0.5 * t.ln() - 2.0;
    Ok(ApproxEntropyBound {
        general: THEOREM_SLOPE * t - 0.5 * epsilon * l + tail,
        optimized: (THEOREM_SLOPE - 2.0 * epsilon / E) * t + tail,
        block_hypotheses: block_len >= 10 && t >= 4.0 && t <= E * l / 4.0,
        optimized_applicable: t >= 2.5 * E,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BondDimBound {
    /// `(2/3π - ε/e) t - ¼ ln t - 1`, a lower bound on `log₂ D`.
    pub log2_d: f64,
    /// Smallest integer `D` compatible with the bound (at least 1).
    pub min_d: u64,
    pub applicable: bool,
}

impl BondDimBound {
    pub fn linear_coefficient(epsilon: f64) -> f64 {
        2.0 / (3.0 * PI) - epsilon / E
    }
}

pub fn bond_dim_lower_bound(t: f64, epsilon: f64) -> Result<BondDimBound> {
    if !(t > 0.0) || !(epsilon >= 0.0) {
        return Err(domain("bond dimension bound", format!("t = {t}, ε = {epsilon}")));
    }
    let log2_d = BondDimBound::linear_coefficient(epsilon) * t - 0.25 * t.ln() - 1.0;
    let min_d = if log2_d >= 63.0 {
        u64::MAX
    } else {
        (log2_d.exp2().ceil() as u64).max(1)
    };
    Ok(BondDimBound {
        log2_d,
        min_d,
        applicable: t >= 2.5 * E,
    })
}

/// Bound chains over a time grid. Points outside the hypotheses are still
/// evaluated and carry `hypotheses_hold = false`.
pub fn verify_theorem1(n_spins: usize, block_len: usize, t_grid: &[f64]) -> Result<Vec<BoundChainReport>> {
    t_grid
        .par_iter()
        .map(|&t| {
            let params = QuenchParams::new(n_spins, t, block_len)?;
            let gamma = gamma_t_fourier(n_spins, t, Limit::Finite)?;
            bound_chain(&gamma, &params)
        })
        .collect()
}

/// `true` when the point is applicable and the exact entropy clears the bound.
pub fn theorem1_satisfied(report: &BoundChainReport) -> bool {
    report.hypotheses_hold && report.theorem_margin().is_some_and(|m| m >= 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn hypothesis_gate() {
        assert!(TheoremHypotheses::new(101, 20, 4.0).holds());
        assert!(TheoremHypotheses::new(101, 20, 13.5).holds());
        assert!(!TheoremHypotheses::new(101, 20, 3.9).holds());
        assert!(!TheoremHypotheses::new(101, 20, 13.6).holds());
        assert!(TheoremHypotheses::new(21, 10, 4.0).holds());
        assert!(!TheoremHypotheses::new(21, 10, 4.3).holds());
        assert!(!TheoremHypotheses::new(19, 10, 4.0).holds());
        assert!(!TheoremHypotheses::new(101, 9, 4.0).holds());
    }

    #[test]
    fn theorem_bound_values() {
        assert_abs_diff_eq!(theorem1_bound(4.0), 16.0 / (3.0 * PI) - 0.5 * 4f64.ln() - 1.0);
        assert_abs_diff_eq!(theorem1_bound(4.0), 0.004_505_545, epsilon = 1e-8);
        assert_abs_diff_eq!(theorem1_bound(12.0), 48.0 / (3.0 * PI) - 0.5 * 12f64.ln() - 1.0);
        assert_abs_diff_eq!(THEOREM_SLOPE, 0.424_413, epsilon = 1e-6);
        assert_abs_diff_eq!(nats_to_bits(bits_to_nats(3.7)), 3.7, epsilon = 1e-15);
        assert_abs_diff_eq!(nats_to_bits(LN_2), 1.0);
    }

    #[test]
    fn audenaert_examples() {
        let b = audenaert_bound(0.0, 3).unwrap();
        assert_eq!((b.exact, b.relaxed), (0.0, 1.0));
        let b = audenaert_bound(0.5, 4).unwrap();
        assert_abs_diff_eq!(b.exact, 0.5 * 15f64.log2() + 1.0, epsilon = 1e-14);
        for l in 1..=30 {
            for i in 0..=100 {
                let b = audenaert_bound(i as f64 / 100.0, l).unwrap();
                assert!(b.exact <= b.relaxed + 1e-14);
            }
        }
        assert!(audenaert_bound(1.2, 3).is_err());
        assert!(audenaert_bound(-0.1, 3).is_err());
    }

    #[test]
    fn approx_bound_examples() {
        let t = 8.0;
        let b = approx_entropy_lower_bound(t, 0.0, 12).unwrap();
        assert_abs_diff_eq!(b.optimized, THEOREM_SLOPE * t - 0.5 * t.ln() - 2.0);
        let b = approx_entropy_lower_bound(t, EPSILON_0, 12).unwrap();
        assert_abs_diff_eq!(b.optimized, -0.5 * t.ln() - 2.0, epsilon = 1e-14);
        let b = approx_entropy_lower_bound(10.0, 0.1, 15).unwrap();
        assert_abs_diff_eq!(b.optimized, (THEOREM_SLOPE - 0.2 / E) * 10.0 - 0.5 * 10f64.ln() - 2.0);
        assert!(b.optimized_applicable && b.block_hypotheses);
        // general form at L = 4t/e is the optimized one
        let t = 2.5 * E * 2.0;
        let l = 4.0 * t / E;
        let gen = THEOREM_SLOPE * t - 0.5 * 0.3 * l - 0.5 * t.ln() - 2.0;
        assert_abs_diff_eq!(
            gen,
            approx_entropy_lower_bound(t, 0.3, 20).unwrap().optimized,
            epsilon = 1e-12
        );
        assert!(!approx_entropy_lower_bound(6.0, 0.1, 20).unwrap().optimized_applicable);
    }

    #[test]
    fn bond_dim_examples() {
        let b = bond_dim_lower_bound(10.0, 0.0).unwrap();
        assert_abs_diff_eq!(b.log2_d, 2.0 / (3.0 * PI) * 10.0 - 0.25 * 10f64.ln() - 1.0);
        assert_eq!(b.min_d, (b.log2_d.exp2().ceil() as u64).max(1));
        assert_abs_diff_eq!(BondDimBound::linear_coefficient(EPSILON_0), 0.0, epsilon = 1e-16);
        assert!(BondDimBound::linear_coefficient(EPSILON_0 - 1e-9) > 0.0);
        assert!(BondDimBound::linear_coefficient(EPSILON_0 + 1e-9) < 0.0);
        assert_eq!(bond_dim_lower_bound(4.0, 0.5).unwrap().min_d, 1);
        // d/dt = c - 1/(4t) with c the linear coefficient: increasing from
        // t = 4 on only while c ≥ 1/16
        for eps in [0.0, 0.2, 0.4, 0.5, 0.57] {
            let c = BondDimBound::linear_coefficient(eps);
            let t0 = (1.0 / (4.0 * c)).max(4.0);
            let mut prev = bond_dim_lower_bound(t0, eps).unwrap().log2_d;
            for i in 1..200 {
                let cur = bond_dim_lower_bound(t0 + 0.1 * i as f64, eps).unwrap().log2_d;
                assert!(cur > prev, "ε = {eps}");
                prev = cur;
            }
        }
        let c = BondDimBound::linear_coefficient(0.5);
        assert!(c > 0.0 && 1.0 / (4.0 * c) > 4.0);
        assert_abs_diff_eq!(EPSILON_0, 0.577, epsilon = 5e-4);
    }

    #[test]
    fn budget_invariants() {
        assert!(ApproximationBudget::new(0.2, 0.1, 4).is_ok());
        assert!(ApproximationBudget::new(0.2, 0.11, 4).is_err());
        assert!(ApproximationBudget::new(0.2, 0.1, 0).is_err());
    }

    #[test]
    fn verify_small_ring() {
        let reports = verify_theorem1(21, 10, &[4.0, 3.9]).unwrap();
        assert!(theorem1_satisfied(&reports[0]));
        assert!(!reports[1].hypotheses_hold);
        assert!(!theorem1_satisfied(&reports[1]));
    }
}
