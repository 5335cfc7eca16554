//! Bessel functions of the first kind at integer order, and the weighted sums
//! `Σ n³ J_n(z)²` together with the closed-form bounds on them.

use std::f64::consts::{E, PI};

use crate::error::{domain, Result};

/// Extra orders above the requested range at which backward recurrence starts.
const MILLER_OFFSET: usize = 40;
/// Terms of the power series used below `z = 1`.
const SERIES_TERMS: usize = 30;
/// Rescaling threshold during backward recurrence.
const RESCALE_ABOVE: f64 = 1e200;

/// `J_0(z), …, J_{n_max}(z)` at a single argument.
#[derive(Debug, Clone, PartialEq)]
pub struct BesselRow {
    z: f64,
    values: Vec<f64>,
}

impl BesselRow {
    pub fn z(&self) -> f64 {
        self.z
    }

    pub fn n_max(&self) -> usize {
        self.values.len() - 1
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `J_n(z)` for any integer `n` with `|n| ≤ n_max`, using
    /// `J_{-n} = (-1)^n J_n` for negative orders.
    pub fn order(&self, n: i64) -> f64 {
        let m = n.unsigned_abs() as usize;
        assert!(
            m <= self.n_max(),
            "order {n} outside row of length {}",
            self.values.len()
        );
        let v = self.values[m];
        if n < 0 && m % 2 == 1 {
            -v
        } else {
            v
        }
    }

    /// `|J_0² + 2 Σ_{n≥1} J_n² - 1|` over the stored orders.
    pub fn normalization_residual(&self) -> f64 {
        let tail: f64 = self.values[1..].iter().map(|v| v * v).sum();
        (self.values[0] * self.values[0] + 2.0 * tail - 1.0).abs()
    }
}

fn check_argument(z: f64) -> Result<()> {
    if !z.is_finite() {
        return Err(domain("bessel argument", format!("z = {z} is not finite")));
    }
    if z < 0.0 {
        return Err(domain("bessel argument", format!("z = {z} is negative")));
    }
    Ok(())
}

/// Evaluates `J_0(z) … J_{n_max}(z)`.
///
/// For `z ≥ 1` Miller's backward recurrence is started at order
/// `n_max + ⌈z⌉ + 40` and normalized with `J_0 + 2 Σ_k J_{2k} = 1`; below that
/// the power series is summed directly.
pub fn bessel_j_row(z: f64, n_max: usize) -> Result<BesselRow> {
    check_argument(z)?;
    if n_max < 1 {
        return Err(domain("bessel row", "n_max must be at least 1"));
    }
    let values = if z < 1.0 {
        (0..=n_max).map(|n| power_series(n, z)).collect()
    } else {
        miller(z, n_max)
    };
    Ok(BesselRow { z, values })
}

/// Single value `J_n(z)` for any integer order.
pub fn bessel_j(n: i64, z: f64) -> Result<f64> {
    let row = bessel_j_row(z, (n.unsigned_abs() as usize).max(1))?;
    Ok(row.order(n))
}

fn power_series(n: usize, z: f64) -> f64 {
    let half = 0.5 * z;
    // (z/2)^n / n!, built incrementally so that large n underflows to zero
    let mut term = 1.0;
    for k in 1..=n {
        term *= half / k as f64;
    }
    if n > 0 && z == 0.0 {
        return 0.0;
    }
    let q = -half * half;
    let mut sum = term;
    for m in 1..SERIES_TERMS {
        term *= q / (m as f64 * (m + n) as f64);
        sum += term;
    }
    sum
}

fn miller(z: f64, n_max: usize) -> Vec<f64> {
    let start = n_max + z.ceil() as usize + MILLER_OFFSET;
    let mut vals = vec![0.0; start + 2];
    vals[start] = 1.0;
    for k in (1..=start).rev() {
        let next = 2.0 * k as f64 / z * vals[k] - vals[k + 1];
        vals[k - 1] = next;
        if next.abs() > RESCALE_ABOVE {
            for v in &mut vals[k - 1..] {
                *v /= RESCALE_ABOVE;
            }
        }
    }
    let norm = vals[0] + 2.0 * vals.iter().skip(2).step_by(2).sum::<f64>();
    vals.truncate(n_max + 1);
    for v in &mut vals {
        *v /= norm;
    }
    vals
}

/// Partial sum `Σ_{n=1}^{n_max} n³ J_n(z)²`.
pub fn weighted_cubic_sum(z: f64, n_max: usize) -> Result<f64> {
    let row = bessel_j_row(z, n_max)?;
    Ok(cubic_sum_range(&row, 1, n_max))
}

/// `Σ_{n=from}^{to} n³ J_n²` over a precomputed row.
pub fn cubic_sum_range(row: &BesselRow, from: usize, to: usize) -> f64 {
    row.values[from..=to]
        .iter()
        .enumerate()
        .map(|(i, j)| {
            let n = (from + i) as f64;
            n * n * n * j * j
        })
        .sum()
}

/// Closed-form lower bound on `Q(z) = Σ_{n≥1} n³ J_n(z)²`, valid for `z ≥ 1`:
/// `(2/3π) z³ - ½ z² ln z - (4-π)/(4π) z² - (3π-4)/(12π)`.
pub fn lemma1_lower_bound(z: f64) -> Result<f64> {
    if !(z >= 1.0) || !z.is_finite() {
        return Err(domain("cubic-sum lower bound", format!("requires z ≥ 1, got {z}")));
    }
    let z2 = z * z;
    Ok(2.0 / (3.0 * PI) * z2 * z - 0.5 * z2 * z.ln() - (4.0 - PI) / (4.0 * PI) * z2 - (3.0 * PI - 4.0) / (12.0 * PI))
}

/// Upper bound `(K z²/2) (e z / 2K)^{2K}` on the tail `Σ_{n>K} n³ J_n(z)²`,
/// valid for `K ≥ 2` and `0 ≤ z ≤ eK/4`.
pub fn lemma2_tail_bound(k: usize, z: f64) -> Result<f64> {
    if k < 2 {
        return Err(domain("cubic-sum tail bound", format!("requires K ≥ 2, got {k}")));
    }
    check_argument(z)?;
    let kf = k as f64;
    if z > E * kf / 4.0 {
        return Err(domain(
            "cubic-sum tail bound",
            format!("requires z ≤ eK/4 = {}, got {z}", E * kf / 4.0),
        ));
    }
    Ok(kf * z * z / 2.0 * (E * z / (2.0 * kf)).powi(2 * k as i32))
}

/// `2/(πz) - 1/z²`, a lower bound on `J_0(z)² + J_1(z)²` for `z ≥ 1`.
pub fn lemma3_lower_bound(z: f64) -> Result<f64> {
    if !(z >= 1.0) || !z.is_finite() {
        return Err(domain("J0²+J1² lower bound", format!("requires z ≥ 1, got {z}")));
    }
    Ok(2.0 / (PI * z) - 1.0 / (z * z))
}
