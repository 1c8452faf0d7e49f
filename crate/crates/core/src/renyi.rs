//! Moment inversion for `Tr rho^n` and statistical error predictions.
//!
//! For a fine-grained outcome (`Tr P_s = 1`) in a sector of dimension `N`,
//! the Haar average of `P(s)^n` is
//!
//! ```text
//! <P^n> = (1/D_n) Σ_{cycle types b of S_n} C_b Π_k (Tr rho^k)^{b_k},
//! D_n = N (N+1) ... (N+n-1),   C_b = n! / Π_k (b_k! k^{b_k}).
//! ```
//!
//! The only cycle type containing `Tr rho^n` is the single `n`-cycle, with
//! `C = (n-1)!`, so the relation is linear in `Tr rho^n` once the lower
//! traces are known.
//!
//! For an outcome of weight `w = Tr P_s` and second order,
//!
//! ```text
//! <P>   = w a / N
//! <P^2> = [a^2 w (N w - 1) + b w (N - w)] / [N (N^2 - 1)]
//! ```
//!
//! with `a = Tr rho` and `b = Tr rho^2`.

use std::fmt;

use crate::error::{Error, Result};
use crate::hilbert::SectorLabel;
use crate::measure::{unbiased_power, ShotRecord, Shots};

/// Cycle types of `S_n` as multiplicity vectors `b[k-1]` = number of
/// `k`-cycles, in lexicographically descending order of `b`.
pub fn cycle_types(n: usize) -> Vec<Vec<u32>> {
    fn rec(left: usize, max_part: usize, b: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if left == 0 {
            out.push(b.clone());
            return;
        }
        for part in (1..=max_part.min(left)).rev() {
            b[part - 1] += 1;
            rec(left - part, part, b, out);
            b[part - 1] -= 1;
        }
    }
    let mut out = Vec::new();
    if n > 0 {
        rec(n, n, &mut vec![0; n], &mut out);
    }
    out.sort_by(|a, b| b.cmp(a));
    out
}

fn factorial(n: u32) -> u128 {
    (1..=n as u128).product()
}

/// Number of permutations of `n = Σ k b_k` elements with `b_k` cycles of
/// length `k` (`b[k-1]`).
pub fn permutation_type_count(b: &[u32]) -> Result<u128> {
    let n: u64 = b.iter().enumerate().map(|(i, &m)| (i as u64 + 1) * m as u64).sum();
    if n == 0 {
        return Err(Error::InvalidParameter("empty cycle type".into()));
    }
    if n > 30 {
        return Err(Error::InvalidParameter(format!("cycle type of size {n} is too large")));
    }
    if b.len() > n as usize && b[n as usize..].iter().any(|&m| m > 0) {
        return Err(Error::InvalidParameter("inconsistent cycle type".into()));
    }
    let mut denom: u128 = 1;
    for (i, &m) in b.iter().enumerate() {
        denom *= factorial(m) * (i as u128 + 1).pow(m);
    }
    Ok(factorial(n as u32) / denom)
}

fn rising(dim: usize, n: u32) -> f64 {
    (0..n).map(|i| dim as f64 + i as f64).product()
}

/// Partition sum `Σ_b C_b Π (Tr rho^k)^{b_k}`, optionally skipping the
/// single `n`-cycle.
fn partition_sum(n: u32, traces: &[f64], skip_full_cycle: bool) -> f64 {
    cycle_types(n as usize)
        .iter()
        .filter(|b| !(skip_full_cycle && b[n as usize - 1] == 1))
        .map(|b| {
            let coeff = permutation_type_count(b).expect("valid cycle type") as f64;
            let prod: f64 = b.iter().enumerate().map(|(k, &m)| traces[k].powi(m as i32)).product();
            coeff * prod
        })
        .sum()
}

/// Haar average `<P^n>` of a fine-grained outcome from `traces[k-1] = Tr rho^k`.
pub fn forward_moment(n: u32, traces: &[f64], dim: usize) -> Result<f64> {
    if n == 0 || dim == 0 {
        return Err(Error::InvalidParameter("need n >= 1 and a nonempty sector".into()));
    }
    if traces.len() < n as usize {
        return Err(Error::InvalidParameter(format!("need {n} traces, got {}", traces.len())));
    }
    Ok(partition_sum(n, traces, false) / rising(dim, n))
}

/// Solve the `n`-th moment relation for `Tr rho^n` given `lower[k-1] = Tr rho^k`
/// for `k < n`.
pub fn invert_higher_moment(n: u32, mn: f64, lower: &[f64], dim: usize) -> Result<f64> {
    if n == 0 || dim == 0 {
        return Err(Error::InvalidParameter("need n >= 1 and a nonempty sector".into()));
    }
    if lower.len() < n as usize - 1 {
        return Err(Error::InvalidParameter(format!("order {n} needs {} lower traces, got {}", n - 1, lower.len())));
    }
    let mut traces = lower[..n as usize - 1].to_vec();
    traces.push(0.0);
    let rest = partition_sum(n, &traces, true);
    Ok((mn * rising(dim, n) - rest) / factorial(n - 1) as f64)
}

/// `(<P>, <P^2>)` for an outcome of weight `w`.
pub fn forward_second_moment(tr1: f64, tr2: f64, w: usize, dim: usize) -> Result<(f64, f64)> {
    if dim < 2 || w == 0 || w > dim {
        return Err(Error::InvalidParameter(format!("invalid weight {w} for dimension {dim}")));
    }
    let (n, w) = (dim as f64, w as f64);
    let m1 = w * tr1 / n;
    let m2 = (tr1 * tr1 * w * (n * w - 1.0) + tr2 * w * (n - w)) / (n * (n * n - 1.0));
    Ok((m1, m2))
}

/// `Tr rho^2` from `<P^2>` and a known `Tr rho`.
pub fn invert_second_with_trace(tr1: f64, m2: f64, w: usize, dim: usize) -> Result<f64> {
    if dim < 2 {
        return Err(Error::Degenerate(format!("dimension {dim} carries no purity information")));
    }
    if w == 0 || w > dim {
        return Err(Error::InvalidParameter(format!("invalid weight {w} for dimension {dim}")));
    }
    if w == dim {
        return Err(Error::Degenerate("outcome projector is the identity on its sector".into()));
    }
    let (n, w) = (dim as f64, w as f64);
    Ok((m2 * n * (n * n - 1.0) - tr1 * tr1 * w * (n * w - 1.0)) / (w * (n - w)))
}

/// `(Tr rho, Tr rho^2)` from the first two moments of an outcome of weight `w`.
pub fn invert_second_moment(m1: f64, m2: f64, w: usize, dim: usize) -> Result<(f64, f64)> {
    if w == 0 || w > dim {
        return Err(Error::InvalidParameter(format!("invalid weight {w} for dimension {dim}")));
    }
    let tr1 = m1 * dim as f64 / w as f64;
    Ok((tr1, invert_second_with_trace(tr1, m2, w, dim)?))
}

/// Summed unbiased powers of one sector: `sums[k-1][s] = Σ_l (P_l(s)^k)_e`.
#[derive(Debug, Clone, PartialEq)]
pub struct SectorMoments {
    pub label: SectorLabel,
    pub dim: usize,
    pub weights: Vec<usize>,
    pub sums: Vec<Vec<f64>>,
}

/// Ensemble-averaged moment estimates `<P(s)^k>_e` for `k = 1..order`.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentTable {
    order: u32,
    unitaries: usize,
    shots: Option<Shots>,
    sectors: Vec<SectorMoments>,
}

impl MomentTable {
    pub fn new(order: u32) -> Result<Self> {
        if order == 0 {
            return Err(Error::InvalidParameter("moment order must be at least 1".into()));
        }
        Ok(Self { order, unitaries: 0, shots: None, sectors: Vec::new() })
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn unitaries(&self) -> usize {
        self.unitaries
    }

    pub fn shots(&self) -> Option<Shots> {
        self.shots
    }

    pub fn sectors(&self) -> &[SectorMoments] {
        &self.sectors
    }

    fn check_shape(
        &mut self,
        labels: &[SectorLabel],
        dims: &[usize],
        weights: &[Vec<usize>],
        shots: Shots,
    ) -> Result<()> {
        if self.unitaries == 0 && self.sectors.is_empty() {
            self.shots = Some(shots);
            self.sectors = labels
                .iter()
                .zip(dims)
                .zip(weights)
                .map(|((&label, &dim), w)| SectorMoments {
                    label,
                    dim,
                    weights: w.clone(),
                    sums: vec![vec![0.0; w.len()]; self.order as usize],
                })
                .collect();
            return Ok(());
        }
        let same = self.shots == Some(shots)
            && self.sectors.len() == labels.len()
            && self
                .sectors
                .iter()
                .zip(labels.iter().zip(dims).zip(weights))
                .all(|(s, ((l, d), w))| s.label == *l && s.dim == *d && &s.weights == w);
        if same {
            Ok(())
        } else {
            Err(Error::InvalidParameter("record does not match the moment table layout".into()))
        }
    }

    /// Add the unbiased power estimates of one unitary.
    pub fn add(&mut self, record: &ShotRecord) -> Result<()> {
        self.check_shape(&record.labels, &record.dims, &record.weights, record.shots)?;
        let mut rows = Vec::with_capacity(self.sectors.len());
        for (a, s) in self.sectors.iter().enumerate() {
            let mut row = vec![vec![0.0; s.weights.len()]; self.order as usize];
            for (k, r) in row.iter_mut().enumerate() {
                for (o, v) in r.iter_mut().enumerate() {
                    *v = unbiased_power(record, a, o, k as u32 + 1)?;
                }
            }
            rows.push(row);
        }
        for (s, row) in self.sectors.iter_mut().zip(rows) {
            for (acc, r) in s.sums.iter_mut().zip(row) {
                for (x, y) in acc.iter_mut().zip(r) {
                    *x += y;
                }
            }
        }
        self.unitaries += 1;
        Ok(())
    }

    /// Combine two partial tables of the same layout.
    pub fn merge(mut self, other: MomentTable) -> Result<Self> {
        if other.unitaries == 0 {
            return Ok(self);
        }
        if self.unitaries == 0 {
            return Ok(other);
        }
        if self.order != other.order {
            return Err(Error::InvalidParameter("moment orders differ".into()));
        }
        let labels: Vec<_> = other.sectors.iter().map(|s| s.label).collect();
        let dims: Vec<_> = other.sectors.iter().map(|s| s.dim).collect();
        let weights: Vec<_> = other.sectors.iter().map(|s| s.weights.clone()).collect();
        self.check_shape(&labels, &dims, &weights, other.shots.expect("nonempty table has shots"))?;
        for (s, o) in self.sectors.iter_mut().zip(other.sectors) {
            for (acc, r) in s.sums.iter_mut().zip(o.sums) {
                for (x, y) in acc.iter_mut().zip(r) {
                    *x += y;
                }
            }
        }
        self.unitaries += other.unitaries;
        Ok(self)
    }

    /// `<P(s)^k>_e` for sector index `sector`.
    pub fn mean(&self, sector: usize, k: u32, outcome: usize) -> f64 {
        self.sectors[sector].sums[k as usize - 1][outcome] / self.unitaries as f64
    }
}

/// A Rényi entropy, or the reason it cannot be formed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Entropy {
    Defined(f64),
    /// The estimated trace power was not positive.
    Undefined {
        trace_power: f64,
    },
}

impl Entropy {
    pub fn from_trace_power(n: u32, p: f64) -> Self {
        if p > 0.0 && p.is_finite() && n >= 2 {
            Entropy::Defined(p.ln() / (1.0 - n as f64))
        } else {
            Entropy::Undefined { trace_power: p }
        }
    }

    pub fn value(&self) -> Option<f64> {
        match self {
            Entropy::Defined(v) => Some(*v),
            Entropy::Undefined { .. } => None,
        }
    }
}

impl fmt::Display for Entropy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Entropy::Defined(v) => write!(f, "{v}"),
            Entropy::Undefined { trace_power } => write!(f, "undefined (trace power {trace_power})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SectorEstimate {
    pub label: SectorLabel,
    pub dim: usize,
    /// `traces[k-1]` estimates `Tr (rho^α)^k`.
    pub traces: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimationReport {
    pub order: u32,
    pub unitaries: usize,
    pub shots: Shots,
    pub outcomes: usize,
    pub sectors: Vec<SectorEstimate>,
    /// `totals[k-1]` estimates `p_k`.
    pub totals: Vec<f64>,
    /// `entropies[k-2]` is `S^(k)` for `k = 2..=order`.
    pub entropies: Vec<Entropy>,
    pub predicted_error: f64,
    pub prediction_validated: bool,
}

impl EstimationReport {
    pub fn p(&self, k: u32) -> f64 {
        self.totals[k as usize - 1]
    }

    pub fn entropy(&self, k: u32) -> Option<Entropy> {
        self.entropies.get(k as usize - 2).copied()
    }
}

/// Invert the moment table sector by sector and sum the traces.
///
/// Lower-order traces are pooled over all outcomes of a sector; the highest
/// order is inverted per outcome and averaged uniformly over outcomes.
pub fn estimate_renyi(table: &MomentTable, n: u32) -> Result<EstimationReport> {
    if n == 0 || n > table.order {
        return Err(Error::InvalidParameter(format!("order {n} not available in a table of order {}", table.order)));
    }
    if table.unitaries == 0 {
        return Err(Error::InvalidParameter("moment table is empty".into()));
    }
    let mut sectors = Vec::with_capacity(table.sectors.len());
    for (a, s) in table.sectors.iter().enumerate() {
        let outcomes = s.weights.len();
        let fine = s.weights.iter().all(|&w| w == 1);
        let mut traces = Vec::with_capacity(n as usize);
        // Outcome probabilities of a sector add up to its trace.
        traces.push((0..outcomes).map(|o| table.mean(a, 1, o)).sum::<f64>());
        for k in 2..=n {
            let value = if s.dim == 1 {
                table.mean(a, k, 0)
            } else if fine {
                let sum: f64 = (0..outcomes)
                    .map(|o| invert_higher_moment(k, table.mean(a, k, o), &traces, s.dim))
                    .sum::<Result<f64>>()?;
                sum / outcomes as f64
            } else if k == 2 {
                let sum: f64 = (0..outcomes)
                    .map(|o| invert_second_with_trace(traces[0], table.mean(a, 2, o), s.weights[o], s.dim))
                    .sum::<Result<f64>>()?;
                sum / outcomes as f64
            } else {
                return Err(Error::Unimplemented(format!(
                    "order {k} inversion for outcomes of weight > 1 in sector {}",
                    s.label
                )));
            };
            traces.push(value);
        }
        sectors.push(SectorEstimate { label: s.label, dim: s.dim, traces });
    }
    let totals: Vec<f64> = (0..n as usize).map(|k| sectors.iter().map(|s| s.traces[k]).sum()).collect();
    let entropies = (2..=n).map(|k| Entropy::from_trace_power(k, totals[k as usize - 1])).collect();
    let dim: usize = table.sectors.iter().map(|s| s.dim).sum();
    let outcomes: usize = table.sectors.iter().map(|s| s.weights.len()).sum();
    let shots = table.shots.expect("nonempty table has shots");
    let guess = totals[n as usize - 1].clamp(0.0, 1.0);
    let predicted_error = predicted_error_with_outcomes(n, table.unitaries, shots, dim, outcomes, guess);
    Ok(EstimationReport {
        order: n,
        unitaries: table.unitaries,
        shots,
        outcomes,
        sectors,
        totals,
        entropies,
        predicted_error,
        prediction_validated: prediction_validated(n),
    })
}

fn binomial(n: u64, k: u64) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Pure-state spread `n!/N^n · sqrt(C(2n, n) - 1)` of `P^n` over the ensemble.
pub fn c_n(n: u32, dim: usize) -> f64 {
    factorial(n) as f64 / (dim as f64).powi(n as i32) * (binomial(2 * n as u64, n as u64) - 1.0).sqrt()
}

/// Unitary-number constant of the planning formula, `C_n N^n / (3 (n-1)!)`.
pub fn c_prime(n: u32) -> f64 {
    n as f64 * (binomial(2 * n as u64, n as u64) - 1.0).sqrt() / 3.0
}

/// Shot-noise constant of the planning formula.
pub fn b_n(n: u32) -> f64 {
    (factorial(n) as f64).sqrt()
}

/// Orders for which the planning constants have been checked numerically.
pub fn prediction_validated(n: u32) -> bool {
    (2..=4).contains(&n)
}

/// Expected error of `(p_n)_e` with a fine-grained observable.
pub fn predicted_error(n: u32, unitaries: usize, shots: Shots, dim: usize, p_guess: f64) -> f64 {
    predicted_error_with_outcomes(n, unitaries, shots, dim, dim, p_guess)
}

/// Expected error of `(p_n)_e` averaged over `outcomes` outcomes. The
/// unitary-number term is scaled by `p_guess`, vanishing for the maximally
/// mixed limit.
pub fn predicted_error_with_outcomes(
    n: u32,
    unitaries: usize,
    shots: Shots,
    dim: usize,
    outcomes: usize,
    p_guess: f64,
) -> f64 {
    let shot_term = match shots {
        Shots::Infinite => 0.0,
        Shots::Finite(m) => {
            let ratio = dim as f64 / m as f64;
            let half = n as f64 / 2.0;
            (0..).map(|k| k as f64).take_while(|&k| k < half).map(|k| ratio.powf(half - k)).sum::<f64>() * b_n(n)
        }
    };
    (c_prime(n) * p_guess + shot_term) / ((unitaries * outcomes) as f64).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cycle_type_counts() {
        assert_eq!(permutation_type_count(&[3, 0, 0]).unwrap(), 1);
        assert_eq!(permutation_type_count(&[1, 1, 0]).unwrap(), 3);
        assert_eq!(permutation_type_count(&[0, 2, 0, 0]).unwrap(), 3);
        for n in 1..=7u32 {
            let total: u128 = cycle_types(n as usize).iter().map(|b| permutation_type_count(b).unwrap()).sum();
            assert_eq!(total, factorial(n));
        }
    }

    #[test]
    fn cycle_types_of_four() {
        assert_eq!(
            cycle_types(4),
            vec![vec![4, 0, 0, 0], vec![2, 1, 0, 0], vec![1, 0, 1, 0], vec![0, 2, 0, 0], vec![0, 0, 0, 1]]
        );
    }

    #[test]
    fn second_moment_examples() {
        let (a, b) = invert_second_moment(0.5, 1.0 / 3.0, 1, 2).unwrap();
        assert!((a - 1.0).abs() < 1e-14 && (b - 1.0).abs() < 1e-14);
        let (a, b) = invert_second_moment(0.25, 1.0 / 16.0, 1, 4).unwrap();
        assert!((a - 1.0).abs() < 1e-14 && (b - 0.25).abs() < 1e-14);
        assert!(matches!(invert_second_moment(1.0, 1.0, 4, 4), Err(Error::Degenerate(_))));
        assert!(matches!(invert_second_moment(1.0, 1.0, 1, 1), Err(Error::Degenerate(_))));
    }

    #[test]
    fn third_moment_examples() {
        let m3 = forward_moment(3, &[1.0, 1.0, 1.0], 2).unwrap();
        assert!((m3 - 0.25).abs() < 1e-15);
        assert!((invert_higher_moment(3, 0.25, &[1.0, 1.0], 2).unwrap() - 1.0).abs() < 1e-14);
        let m3 = forward_moment(3, &[1.0, 0.5, 0.25], 2).unwrap();
        assert!((m3 - 0.125).abs() < 1e-15);
        assert!((invert_higher_moment(3, 0.125, &[1.0, 0.5], 2).unwrap() - 0.25).abs() < 1e-14);
        assert!((invert_higher_moment(1, 0.2, &[], 5).unwrap() - 1.0).abs() < 1e-15);
        assert!(invert_higher_moment(3, 0.1, &[1.0], 4).is_err());
    }

    #[test]
    fn weighted_forward_matches_fine_formula() {
        for dim in 2..10 {
            let (m1, m2) = forward_second_moment(0.8, 0.3, 1, dim).unwrap();
            assert!((m1 - forward_moment(1, &[0.8], dim).unwrap()).abs() < 1e-15);
            assert!((m2 - forward_moment(2, &[0.8, 0.3], dim).unwrap()).abs() < 1e-15);
        }
    }

    #[test]
    fn planning_constants() {
        assert!((c_n(2, 256) - 2.0 / 65536.0 * 5f64.sqrt()).abs() < 1e-18);
        assert!((c_n(2, 256) - 6.83e-5).abs() < 1e-7);
        let e = predicted_error(2, 100, Shots::Finite(500), 1 << 14, 1.0);
        assert!(e > 0.05 / 1.5 && e < 0.05 * 1.5, "{e}");
        let inf = predicted_error(2, 100, Shots::Infinite, 64, 1.0);
        assert!((inf - c_prime(2) / (6400f64).sqrt()).abs() < 1e-15);
        assert!(!prediction_validated(5));
    }

    #[test]
    fn entropy_of_nonpositive_power_is_undefined() {
        assert_eq!(Entropy::from_trace_power(2, -0.01), Entropy::Undefined { trace_power: -0.01 });
        assert!((Entropy::from_trace_power(2, 0.25).value().unwrap() - 4f64.ln()).abs() < 1e-15);
    }
}
