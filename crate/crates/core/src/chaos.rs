//! Spectral and delocalization diagnostics of unitary ensembles.

use std::f64::consts::PI;

use rand::Rng;

use crate::error::{Error, Result};
use crate::hilbert::{trace_power, SectorState};
use crate::linalg::{hermitian_eigenvalues, unitary_eigen, wrap_phase, CMatrix};
use crate::measure::{outcome_probs, Observable, ShotRecord};
use crate::renyi::{estimate_renyi, MomentTable};
use crate::unitaries::BlockUnitary;

/// Gaps below this are treated as coincident phases.
pub const GAP_FLOOR: f64 = 1e-14;
/// Phase separation below which an eigenbasis is reported as ambiguous.
pub const DEGENERACY_TOL: f64 = 1e-8;
pub const R_BINS: usize = 50;

/// Sorted eigenphases in `[-π, π)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseSpectrum {
    phases: Vec<f64>,
}

impl PhaseSpectrum {
    pub fn new(phases: impl IntoIterator<Item = f64>) -> Self {
        let mut phases: Vec<f64> = phases.into_iter().map(wrap_phase).collect();
        phases.sort_by(f64::total_cmp);
        Self { phases }
    }

    pub fn of_unitary(u: &CMatrix) -> Result<Self> {
        let (phases, _) = unitary_eigen(u).ok_or_else(|| Error::Numerical {
            label: "unitary".into(),
            reason: "Schur decomposition did not converge".into(),
        })?;
        Ok(Self::new(phases))
    }

    /// I.i.d. uniform phases.
    pub fn poisson<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Self {
        Self::new((0..dim).map(|_| rng.random_range(-PI..PI)))
    }

    pub fn phases(&self) -> &[f64] {
        &self.phases
    }

    pub fn len(&self) -> usize {
        self.phases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phases.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GapRatios {
    pub ratios: Vec<f64>,
    /// Some gap fell below [`GAP_FLOOR`] and was raised to it.
    pub floored: bool,
}

impl GapRatios {
    pub fn mean(&self) -> f64 {
        self.ratios.iter().sum::<f64>() / self.ratios.len() as f64
    }
}

/// Ratios `min(d_ν, d_{ν+1}) / max(d_ν, d_{ν+1})` of consecutive circular gaps.
pub fn phase_gap_ratios(spec: &PhaseSpectrum) -> Result<GapRatios> {
    let n = spec.len();
    if n < 3 {
        return Err(Error::InvalidParameter(format!("gap ratios need at least 3 phases, got {n}")));
    }
    let p = spec.phases();
    let mut floored = false;
    let gaps: Vec<f64> = (0..n)
        .map(|i| {
            let d = if i + 1 < n { p[i + 1] - p[i] } else { p[0] + 2.0 * PI - p[n - 1] };
            if d < GAP_FLOOR {
                floored = true;
                GAP_FLOOR
            } else {
                d
            }
        })
        .collect();
    let ratios = (0..n)
        .map(|i| {
            let (a, b) = (gaps[i], gaps[(i + 1) % n]);
            a.min(b) / a.max(b)
        })
        .collect();
    Ok(GapRatios { ratios, floored })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ipr {
    pub value: f64,
    /// Two eigenphases are closer than [`DEGENERACY_TOL`], so the eigenbasis
    /// and the value are not unique.
    pub degenerate: bool,
}

/// `Σ_ν <φ_ν| rho |φ_ν>^2` over the eigenvectors of `u`.
pub fn ipr(u: &CMatrix, rho: &CMatrix) -> Result<Ipr> {
    if u.nrows() != rho.nrows() || !u.is_square() || !rho.is_square() {
        return Err(Error::InvalidParameter("unitary and state dimensions differ".into()));
    }
    let (phases, vecs) = unitary_eigen(u).ok_or_else(|| Error::Numerical {
        label: "unitary".into(),
        reason: "Schur decomposition did not converge".into(),
    })?;
    let value = (0..vecs.ncols())
        .map(|k| {
            let v = vecs.column(k);
            (v.adjoint() * rho * v)[(0, 0)].re.powi(2)
        })
        .sum();
    let spec = PhaseSpectrum::new(phases);
    let p = spec.phases();
    let n = p.len();
    let degenerate =
        n > 1 && (p.windows(2).any(|w| w[1] - w[0] < DEGENERACY_TOL) || p[0] + 2.0 * PI - p[n - 1] < DEGENERACY_TOL);
    Ok(Ipr { value, degenerate })
}

/// Sum of the block IPRs of a block-diagonal state.
pub fn block_ipr(u: &BlockUnitary, rho: &SectorState) -> Result<Ipr> {
    let mut total = Ipr { value: 0.0, degenerate: false };
    for b in rho.blocks() {
        let ub = u.block(b.label).ok_or_else(|| Error::SectorMismatch(format!("no unitary block for {}", b.label)))?;
        let r = ipr(&ub.matrix, &b.matrix)?;
        total.value += r.value;
        total.degenerate |= r.degenerate;
    }
    Ok(total)
}

/// Haar average of the IPR for a state with spectrum `eigenvalues`.
pub fn ipr_cue_reference(eigenvalues: &[f64]) -> f64 {
    let n = eigenvalues.len() as f64;
    let s1: f64 = eigenvalues.iter().sum();
    let s2: f64 = eigenvalues.iter().map(|l| l * l).sum();
    2.0 / (n + 1.0) * (s2 + (s1 * s1 - s2) / 2.0)
}

/// Fixed 50-bin histogram of gap ratios on `[0, 1]`, normalized to a density.
#[derive(Debug, Clone, PartialEq)]
pub struct RHistogram {
    pub counts: Vec<u64>,
}

impl Default for RHistogram {
    fn default() -> Self {
        Self { counts: vec![0; R_BINS] }
    }
}

impl RHistogram {
    pub fn add(&mut self, r: f64) {
        let k = ((r * R_BINS as f64) as usize).min(R_BINS - 1);
        self.counts[k] += 1;
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn bin_center(k: usize) -> f64 {
        (k as f64 + 0.5) / R_BINS as f64
    }

    pub fn density(&self) -> Vec<f64> {
        let t = self.total().max(1) as f64;
        self.counts.iter().map(|&c| c as f64 * R_BINS as f64 / t).collect()
    }
}

/// Certification summary of an ensemble for one test state.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleSummary {
    pub unitaries: usize,
    pub mean_ipr: f64,
    pub ipr_reference: f64,
    pub degenerate_spectra: usize,
    /// Gap ratios pooled over all unitaries and blocks of dimension >= 3.
    pub mean_r: f64,
    pub r_count: usize,
    pub floored_spectra: usize,
    pub histogram: RHistogram,
    pub purity_estimate: f64,
    pub purity_exact: f64,
}

impl EnsembleSummary {
    pub fn purity_error(&self) -> f64 {
        (self.purity_estimate - self.purity_exact).abs()
    }
}

/// IPR, gap-ratio statistics and exact-probability purity estimate of an ensemble.
pub fn ensemble_diagnostics(ensemble: &[BlockUnitary], rho: &SectorState, obs: &Observable) -> Result<EnsembleSummary> {
    if ensemble.is_empty() {
        return Err(Error::InvalidParameter("empty ensemble".into()));
    }
    let mut ipr_sum = 0.0;
    let mut degenerate = 0;
    let mut r_sum = 0.0;
    let mut r_count = 0;
    let mut floored = 0;
    let mut hist = RHistogram::default();
    let mut table = MomentTable::new(2)?;
    for u in ensemble {
        let i = block_ipr(u, rho)?;
        ipr_sum += i.value;
        degenerate += i.degenerate as usize;
        for b in u.blocks().iter().filter(|b| b.dim() >= 3) {
            let g = phase_gap_ratios(&PhaseSpectrum::of_unitary(&b.matrix)?)?;
            floored += g.floored as usize;
            for &r in &g.ratios {
                r_sum += r;
                hist.add(r);
            }
            r_count += g.ratios.len();
        }
        table.add(&ShotRecord::exact(&outcome_probs(u, rho, obs)?))?;
    }
    let report = estimate_renyi(&table, 2)?;
    let mut ipr_reference = 0.0;
    for b in rho.blocks() {
        let eig = hermitian_eigenvalues(&b.matrix).ok_or_else(|| Error::Numerical {
            label: b.label.to_string(),
            reason: "eigenvalues did not converge".into(),
        })?;
        ipr_reference += ipr_cue_reference(&eig);
    }
    Ok(EnsembleSummary {
        unitaries: ensemble.len(),
        mean_ipr: ipr_sum / ensemble.len() as f64,
        ipr_reference,
        degenerate_spectra: degenerate,
        mean_r: if r_count > 0 { r_sum / r_count as f64 } else { f64::NAN },
        r_count,
        floored_spectra: floored,
        histogram: hist,
        purity_estimate: report.p(2),
        purity_exact: trace_power(rho, 2)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::SectorLabel;
    use crate::linalg::{c, CVector, C64};
    use crate::rng::seeded;
    use crate::unitaries::sample_cue;

    #[test]
    fn equally_spaced_phases() {
        let u = CMatrix::from_diagonal(&CVector::from_vec(vec![c(1.0, 0.0), c(0.0, 1.0), c(-1.0, 0.0), c(0.0, -1.0)]));
        let g = phase_gap_ratios(&PhaseSpectrum::of_unitary(&u).unwrap()).unwrap();
        assert_eq!(g.ratios.len(), 4);
        assert!(g.ratios.iter().all(|&r| (r - 1.0).abs() < 1e-12));
        assert!(!g.floored);
    }

    #[test]
    fn coincident_phases_are_flagged() {
        let g = phase_gap_ratios(&PhaseSpectrum::new([0.0, 0.0, 1.0])).unwrap();
        assert!(g.floored);
        assert!(g.ratios.iter().all(|r| (0.0..=1.0).contains(r)));
        assert!(phase_gap_ratios(&PhaseSpectrum::new([0.0, 1.0])).is_err());
    }

    #[test]
    fn ipr_limits() {
        let u = sample_cue(5, &mut seeded(1));
        let (_, vecs) = unitary_eigen(&u).unwrap();
        let v0 = vecs.column(0).into_owned();
        assert!((ipr(&u, &(&v0 * v0.adjoint())).unwrap().value - 1.0).abs() < 1e-10);
        let mut uni = CVector::zeros(5);
        for k in 0..5 {
            uni += vecs.column(k);
        }
        uni /= C64::new(5f64.sqrt(), 0.0);
        assert!((ipr(&u, &(&uni * uni.adjoint())).unwrap().value - 0.2).abs() < 1e-10);
    }

    #[test]
    fn cue_reference_values() {
        assert!((ipr_cue_reference(&[1.0, 0.0, 0.0, 0.0]) - 0.4).abs() < 1e-15);
        assert!((ipr_cue_reference(&[0.5, 0.5]) - 0.5).abs() < 1e-15);
        for n in 2..12 {
            assert!((ipr_cue_reference(&vec![1.0 / n as f64; n]) - 1.0 / n as f64).abs() < 1e-15);
        }
    }

    #[test]
    fn pure_state_cue_ipr_average() {
        let mut rng = seeded(3);
        let mut rho = CMatrix::zeros(4, 4);
        rho[(0, 0)] = c(1.0, 0.0);
        let n = 10_000;
        let xs: Vec<f64> = (0..n).map(|_| ipr(&sample_cue(4, &mut rng), &rho).unwrap().value).collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        assert!((mean - 0.4).abs() < 3.0 * (var / n as f64).sqrt(), "{mean}");
    }

    #[test]
    fn histogram_bins() {
        let mut h = RHistogram::default();
        for r in [0.0, 0.019, 0.02, 0.5, 1.0] {
            h.add(r);
        }
        assert_eq!(h.counts[0], 2);
        assert_eq!(h.counts[1], 1);
        assert_eq!(h.counts[25], 1);
        assert_eq!(h.counts[49], 1);
        assert!((h.density().iter().sum::<f64>() / R_BINS as f64 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn diagnostics_of_a_small_cue_ensemble() {
        let mut rng = seeded(4);
        let sectors = [(SectorLabel::Full, 8)];
        let ens: Vec<BlockUnitary> = (0..50).map(|_| BlockUnitary::cue(&sectors, &mut rng)).collect();
        let mut psi = CVector::zeros(8);
        psi[0] = c(1.0, 0.0);
        let rho = SectorState::pure(SectorLabel::Full, &psi).unwrap();
        let obs = Observable::from_groups(vec![crate::measure::SectorOutcomes {
            label: SectorLabel::Full,
            dim: 8,
            groups: (0..8).map(|i| vec![i]).collect(),
        }])
        .unwrap();
        let s = ensemble_diagnostics(&ens, &rho, &obs).unwrap();
        assert_eq!(s.r_count, 400);
        assert!((s.ipr_reference - 2.0 / 9.0).abs() < 1e-15);
        assert!(s.mean_ipr > 0.125 && s.mean_ipr < 1.0);
        assert_eq!(s.purity_exact, 1.0);
    }
}
