//! Sector-resolving projective measurements and unbiased power estimators.

use rand::Rng;
use rand_distr::{Binomial, Distribution};

use crate::error::{Error, Result};
use crate::hilbert::{Sector, SectorLabel, SectorState};
use crate::linalg::conjugated_diagonal;
use crate::unitaries::BlockUnitary;

/// Outcome groups of one sector: a partition of its basis indices.
#[derive(Debug, Clone, PartialEq)]
pub struct SectorOutcomes {
    pub label: SectorLabel,
    pub dim: usize,
    pub groups: Vec<Vec<usize>>,
}

impl SectorOutcomes {
    pub fn weights(&self) -> Vec<usize> {
        self.groups.iter().map(Vec::len).collect()
    }

    pub fn is_fine(&self) -> bool {
        self.groups.len() == self.dim
    }
}

/// A measurement that resolves the sector label and then groups of basis
/// states within each sector.
#[derive(Debug, Clone, PartialEq)]
pub struct Observable {
    sectors: Vec<SectorOutcomes>,
}

impl Observable {
    /// One outcome per basis state.
    pub fn fine(sectors: &[Sector]) -> Self {
        let sectors = sectors
            .iter()
            .map(|s| SectorOutcomes { label: s.label(), dim: s.dim(), groups: (0..s.dim()).map(|i| vec![i]).collect() })
            .collect();
        Self { sectors }
    }

    /// Consecutive basis states bundled into groups of `size` (the last group
    /// of a sector may be smaller).
    pub fn coarse(sectors: &[Sector], size: usize) -> Result<Self> {
        let dims: Vec<(SectorLabel, usize)> = sectors.iter().map(|s| (s.label(), s.dim())).collect();
        Self::grouped(&dims, size)
    }

    /// As [`Observable::coarse`], from sector labels and dimensions alone.
    pub fn grouped(dims: &[(SectorLabel, usize)], size: usize) -> Result<Self> {
        if size == 0 {
            return Err(Error::InvalidParameter("outcome group size must be positive".into()));
        }
        let sectors = dims
            .iter()
            .map(|&(label, dim)| {
                let idx: Vec<usize> = (0..dim).collect();
                SectorOutcomes { label, dim, groups: idx.chunks(size).map(<[usize]>::to_vec).collect() }
            })
            .collect();
        Ok(Self { sectors })
    }

    /// Arbitrary groups; they must partition every sector's basis.
    pub fn from_groups(sectors: Vec<SectorOutcomes>) -> Result<Self> {
        let mut labels: Vec<SectorLabel> = sectors.iter().map(|s| s.label).collect();
        labels.sort();
        labels.dedup();
        if labels.len() != sectors.len() {
            return Err(Error::InvalidParameter("duplicate sector in observable".into()));
        }
        for s in &sectors {
            let mut seen = vec![false; s.dim];
            for g in &s.groups {
                if g.is_empty() {
                    return Err(Error::InvalidParameter(format!("empty outcome group in {}", s.label)));
                }
                for &i in g {
                    if i >= s.dim || std::mem::replace(&mut seen[i], true) {
                        return Err(Error::InvalidParameter(format!(
                            "outcome groups of {} overlap or overflow",
                            s.label
                        )));
                    }
                }
            }
            if seen.iter().any(|&x| !x) {
                return Err(Error::InvalidParameter(format!("outcome groups of {} do not cover the basis", s.label)));
            }
        }
        let mut sectors = sectors;
        sectors.sort_by_key(|s| s.label);
        Ok(Self { sectors })
    }

    pub fn sectors(&self) -> &[SectorOutcomes] {
        &self.sectors
    }

    pub fn outcome_count(&self) -> usize {
        self.sectors.iter().map(|s| s.groups.len()).sum()
    }

    pub fn is_fine(&self) -> bool {
        self.sectors.iter().all(SectorOutcomes::is_fine)
    }
}

/// Outcome probabilities `P(s_α)` of one sector.
#[derive(Debug, Clone, PartialEq)]
pub struct SectorProbabilities {
    pub label: SectorLabel,
    pub dim: usize,
    pub weights: Vec<usize>,
    pub probs: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutcomeDistribution {
    pub sectors: Vec<SectorProbabilities>,
}

impl OutcomeDistribution {
    pub fn total(&self) -> f64 {
        self.sectors.iter().flat_map(|s| s.probs.iter()).sum()
    }
}

const PROB_TOL: f64 = 1e-9;

/// Exact outcome probabilities on `U rho U†`.
pub fn outcome_probs(u: &BlockUnitary, rho: &SectorState, obs: &Observable) -> Result<OutcomeDistribution> {
    for b in rho.blocks() {
        if !obs.sectors.iter().any(|s| s.label == b.label) {
            return Err(Error::SectorMismatch(format!("observable does not cover sector {}", b.label)));
        }
    }
    let sectors = obs
        .sectors
        .iter()
        .map(|so| {
            let weights = so.weights();
            let probs = match rho.block(so.label) {
                None => vec![0.0; so.groups.len()],
                Some(b) => {
                    let ub = u
                        .block(so.label)
                        .ok_or_else(|| Error::SectorMismatch(format!("no unitary block for {}", so.label)))?;
                    if ub.dim() != b.dim() || b.dim() != so.dim {
                        return Err(Error::SectorMismatch(format!("dimension mismatch in {}", so.label)));
                    }
                    let diag = conjugated_diagonal(&ub.matrix, &b.matrix);
                    so.groups
                        .iter()
                        .map(|g| {
                            let p: f64 = g.iter().map(|&i| diag[i]).sum();
                            if !(-PROB_TOL..=1.0 + PROB_TOL).contains(&p) {
                                return Err(Error::Numerical {
                                    label: so.label.to_string(),
                                    reason: format!("outcome probability {p} out of range"),
                                });
                            }
                            Ok(p.clamp(0.0, 1.0))
                        })
                        .collect::<Result<Vec<_>>>()?
                }
            };
            Ok(SectorProbabilities { label: so.label, dim: so.dim, weights, probs })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(OutcomeDistribution { sectors })
}

/// Number of measurements per unitary.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Shots {
    Finite(u64),
    Infinite,
}

#[derive(Debug, Clone, PartialEq)]
pub enum RecordData {
    Counts(Vec<Vec<u64>>),
    Exact(Vec<Vec<f64>>),
}

/// Measurement record of one unitary: counts per sector and outcome, or the
/// exact probabilities when the number of shots is infinite.
#[derive(Debug, Clone, PartialEq)]
pub struct ShotRecord {
    pub labels: Vec<SectorLabel>,
    pub dims: Vec<usize>,
    pub weights: Vec<Vec<usize>>,
    pub shots: Shots,
    pub data: RecordData,
}

impl ShotRecord {
    pub fn exact(dist: &OutcomeDistribution) -> Self {
        Self {
            labels: dist.sectors.iter().map(|s| s.label).collect(),
            dims: dist.sectors.iter().map(|s| s.dim).collect(),
            weights: dist.sectors.iter().map(|s| s.weights.clone()).collect(),
            shots: Shots::Infinite,
            data: RecordData::Exact(dist.sectors.iter().map(|s| s.probs.clone()).collect()),
        }
    }

    /// Record built from explicit counts per sector and outcome.
    pub fn from_counts(dist: &OutcomeDistribution, counts: Vec<Vec<u64>>) -> Result<Self> {
        if counts.len() != dist.sectors.len() || counts.iter().zip(&dist.sectors).any(|(c, s)| c.len() != s.probs.len())
        {
            return Err(Error::InvalidParameter("count table does not match the outcome structure".into()));
        }
        let total = counts.iter().flatten().sum();
        let mut r = Self::exact(dist);
        r.shots = Shots::Finite(total);
        r.data = RecordData::Counts(counts);
        Ok(r)
    }

    pub fn sector_count(&self) -> usize {
        self.labels.len()
    }

    pub fn outcomes(&self, sector: usize) -> usize {
        self.weights[sector].len()
    }
}

/// One multinomial draw of `n_m` shots over all outcomes of all sectors.
pub fn sample_shots<R: Rng + ?Sized>(dist: &OutcomeDistribution, shots: Shots, rng: &mut R) -> Result<ShotRecord> {
    let n_m = match shots {
        Shots::Infinite => return Ok(ShotRecord::exact(dist)),
        Shots::Finite(0) => return Err(Error::InvalidParameter("need at least one shot".into())),
        Shots::Finite(n) => n,
    };
    let flat: Vec<f64> = dist.sectors.iter().flat_map(|s| s.probs.iter().copied()).collect();
    let flat_counts = multinomial(n_m, &flat, rng);
    let mut it = flat_counts.into_iter();
    let counts = dist.sectors.iter().map(|s| it.by_ref().take(s.probs.len()).collect()).collect();
    ShotRecord::from_counts(dist, counts)
}

/// Multinomial sample by sequential conditional binomials.
pub fn multinomial<R: Rng + ?Sized>(n: u64, probs: &[f64], rng: &mut R) -> Vec<u64> {
    let mut left = n;
    let mut mass: f64 = probs.iter().sum();
    let mut out = vec![0; probs.len()];
    for (k, &p) in probs.iter().enumerate() {
        if left == 0 {
            break;
        }
        if k + 1 == probs.len() {
            out[k] = left;
            break;
        }
        let q = if mass > 0.0 { (p / mass).clamp(0.0, 1.0) } else { 0.0 };
        let b = if q >= 1.0 {
            left
        } else if q <= 0.0 {
            0
        } else {
            Binomial::new(left, q).expect("valid binomial").sample(rng)
        };
        out[k] = b;
        left -= b;
        mass -= p;
    }
    out
}

/// `B (B-1) ... (B-n+1) / [N (N-1) ... (N-n+1)]`, the unbiased estimator of
/// `P^n` from `B` hits in `N` binomial trials.
pub fn falling_factorial_estimator(b: u64, n_m: u64, n: u32) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidParameter("power must be at least 1".into()));
    }
    if n_m < n as u64 {
        return Err(Error::EstimatorUndefined(format!("N_M = {n_m} < n = {n}")));
    }
    if b > n_m {
        return Err(Error::InvalidParameter(format!("count {b} exceeds N_M = {n_m}")));
    }
    let mut v = 1.0;
    for i in 0..n as u64 {
        if b < i + 1 {
            return Ok(0.0);
        }
        v *= (b - i) as f64 / (n_m - i) as f64;
    }
    Ok(v)
}

/// Unbiased estimate of `P(s)^n` for outcome `outcome` of sector index `sector`.
pub fn unbiased_power(record: &ShotRecord, sector: usize, outcome: usize, n: u32) -> Result<f64> {
    match (&record.data, record.shots) {
        (RecordData::Exact(p), _) => {
            if n == 0 {
                return Err(Error::InvalidParameter("power must be at least 1".into()));
            }
            Ok(p[sector][outcome].powi(n as i32))
        }
        (RecordData::Counts(c), Shots::Finite(n_m)) => falling_factorial_estimator(c[sector][outcome], n_m, n),
        (RecordData::Counts(_), Shots::Infinite) => {
            Err(Error::InvalidParameter("count record without a shot number".into()))
        }
    }
}
