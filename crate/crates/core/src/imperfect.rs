//! Decoherence channels, disorder jitter and finite detection fidelity.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{hermitize, BasisConfig, Block, Sector, SectorState, SpaceKind};
use crate::linalg::CMatrix;
use crate::measure::OutcomeDistribution;
use crate::models::{sample_disorder_with_width, DisorderPattern, QuenchModel};
use crate::unitaries::BlockUnitary;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChannelKind {
    Dephasing,
    Depolarizing,
}

/// Product of identical single-site channels with jump probability `p`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelSpec {
    kind: ChannelKind,
    p: f64,
}

impl ChannelSpec {
    pub fn new(kind: ChannelKind, p: f64) -> Result<Self> {
        let max = match kind {
            ChannelKind::Dephasing => 1.0,
            ChannelKind::Depolarizing => 1.0 / 3.0,
        };
        if !(0.0..max).contains(&p) {
            return Err(Error::InvalidParameter(format!("{kind:?} probability {p} outside [0, {max})")));
        }
        Ok(Self { kind, p })
    }

    pub fn kind(&self) -> ChannelKind {
        self.kind
    }

    pub fn p(&self) -> f64 {
        self.p
    }
}

/// Per-site readout error probability `p = 1 - F`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FidelitySpec {
    p: f64,
}

impl FidelitySpec {
    pub fn new(p: f64) -> Result<Self> {
        if !(0.0..0.5).contains(&p) {
            return Err(Error::InvalidParameter(format!("misread probability {p} outside [0, 1/2)")));
        }
        Ok(Self { p })
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn fidelity(&self) -> f64 {
        1.0 - self.p
    }
}

fn full_index(cfg: &BasisConfig) -> usize {
    cfg.occupations().iter().fold(0, |acc, &b| (acc << 1) | b as usize)
}

fn check_spin(sectors: &[Sector]) -> Result<usize> {
    let first = sectors.first().ok_or_else(|| Error::InvalidParameter("no sectors given".into()))?;
    if sectors.iter().any(|s| s.kind() != SpaceKind::Spin || s.sites() != first.sites()) {
        return Err(Error::InvalidParameter("channels act on spin-1/2 models only".into()));
    }
    let total: usize = sectors.iter().map(Sector::dim).sum();
    if total != 1 << first.sites() {
        return Err(Error::InvalidParameter("sectors do not cover the spin Hilbert space".into()));
    }
    Ok(first.sites())
}

fn embed(state: &SectorState, sectors: &[Sector], sites: usize) -> Result<CMatrix> {
    let dim = 1 << sites;
    let mut rho = CMatrix::zeros(dim, dim);
    for b in state.blocks() {
        let sector = sectors
            .iter()
            .find(|s| s.label() == b.label)
            .ok_or_else(|| Error::SectorMismatch(format!("state block {} is not a model sector", b.label)))?;
        let idx: Vec<usize> = sector.basis().iter().map(full_index).collect();
        for (i, &fi) in idx.iter().enumerate() {
            for (j, &fj) in idx.iter().enumerate() {
                rho[(fi, fj)] = b.matrix[(i, j)];
            }
        }
    }
    Ok(rho)
}

fn project(rho: &CMatrix, sectors: &[Sector]) -> Result<SectorState> {
    let mut blocks = Vec::new();
    for s in sectors {
        let idx: Vec<usize> = s.basis().iter().map(full_index).collect();
        let m = CMatrix::from_fn(idx.len(), idx.len(), |i, j| rho[(idx[i], idx[j])]);
        if m.diagonal().iter().map(|z| z.re).sum::<f64>() > 0.0 {
            blocks.push(Block::new(s.label(), hermitize(m)));
        }
    }
    SectorState::new(blocks)
}

fn channel_full(rho: &mut CMatrix, sites: usize, spec: ChannelSpec) {
    let p = spec.p;
    if p == 0.0 {
        return;
    }
    let dim = rho.nrows();
    for site in 0..sites {
        let mask = 1 << (sites - 1 - site);
        match spec.kind {
            ChannelKind::Dephasing => {
                for r in 0..dim {
                    for c in 0..dim {
                        if (r ^ c) & mask != 0 {
                            rho[(r, c)] *= 1.0 - 2.0 * p;
                        }
                    }
                }
            }
            ChannelKind::Depolarizing => {
                let old = rho.clone();
                for r in 0..dim {
                    for c in 0..dim {
                        rho[(r, c)] = if (r ^ c) & mask != 0 {
                            old[(r, c)] * (1.0 - 4.0 * p)
                        } else {
                            old[(r, c)] * (1.0 - 2.0 * p) + old[(r ^ mask, c ^ mask)] * (2.0 * p)
                        };
                    }
                }
            }
        }
    }
}

/// Apply the site-product channel exactly. `sectors` must be all sectors of
/// a spin model; the result has a block for every sector with weight.
pub fn apply_channel(state: &SectorState, sectors: &[Sector], spec: ChannelSpec) -> Result<SectorState> {
    let sites = check_spin(sectors)?;
    let mut rho = embed(state, sectors, sites)?;
    channel_full(&mut rho, sites, spec);
    project(&rho, sectors)
}

/// `D(U D(rho) U†)`.
pub fn decohered_final_state(
    state: &SectorState,
    u: &BlockUnitary,
    sectors: &[Sector],
    spec: ChannelSpec,
) -> Result<SectorState> {
    let first = apply_channel(state, sectors, spec)?;
    let evolved = first.conjugated(u.blocks())?;
    apply_channel(&evolved, sectors, spec)
}

/// Add fresh normal noise of width `p δ` to a disorder pattern. For
/// Fermi-Hubbard models the noise keeps the up/down ratio.
pub fn jitter_disorder<R: Rng + ?Sized>(
    pattern: &DisorderPattern,
    model: &QuenchModel,
    p: f64,
    rng: &mut R,
) -> Result<DisorderPattern> {
    if !(p >= 0.0 && p.is_finite()) {
        return Err(Error::InvalidParameter(format!("jitter strength {p} must be non-negative")));
    }
    if p == 0.0 {
        return Ok(pattern.clone());
    }
    let noise = sample_disorder_with_width(model, pattern.quench, p * model.disorder_strength(), rng);
    if noise.values.len() != pattern.values.len() {
        return Err(Error::InvalidParameter("pattern does not belong to the model".into()));
    }
    Ok(DisorderPattern {
        quench: pattern.quench,
        values: pattern.values.iter().zip(&noise.values).map(|(a, b)| a + b).collect(),
    })
}

/// Misread every site of a spin readout independently with probability `p`.
pub fn fidelity_flip<R: Rng + ?Sized>(shot: &BasisConfig, spec: FidelitySpec, rng: &mut R) -> BasisConfig {
    BasisConfig(
        shot.occupations().iter().map(|&b| if spec.p > 0.0 && rng.random_bool(spec.p) { b ^ 1 } else { b }).collect(),
    )
}

/// Exact readout distribution after independent per-site misreads. The
/// distribution must be fine-grained over all sectors of a spin model.
pub fn readout_distribution(
    dist: &OutcomeDistribution,
    sectors: &[Sector],
    spec: FidelitySpec,
) -> Result<OutcomeDistribution> {
    let sites = check_spin(sectors)?;
    let mut full = vec![0.0; 1 << sites];
    let mut layout = Vec::with_capacity(dist.sectors.len());
    for sp in &dist.sectors {
        let sector = sectors
            .iter()
            .find(|s| s.label() == sp.label)
            .ok_or_else(|| Error::SectorMismatch(format!("unknown sector {}", sp.label)))?;
        if sp.weights.iter().any(|&w| w != 1) || sp.probs.len() != sector.dim() {
            return Err(Error::InvalidParameter("readout errors need a fine-grained observable".into()));
        }
        let idx: Vec<usize> = sector.basis().iter().map(full_index).collect();
        for (i, &fi) in idx.iter().enumerate() {
            full[fi] = sp.probs[i];
        }
        layout.push(idx);
    }
    if layout.iter().map(Vec::len).sum::<usize>() != full.len() {
        return Err(Error::InvalidParameter("distribution does not cover every spin configuration".into()));
    }
    let p = spec.p;
    for site in 0..sites {
        let mask = 1 << (sites - 1 - site);
        for r in 0..full.len() {
            if r & mask == 0 {
                let (a, b) = (full[r], full[r | mask]);
                full[r] = (1.0 - p) * a + p * b;
                full[r | mask] = p * a + (1.0 - p) * b;
            }
        }
    }
    let mut out = dist.clone();
    for (sp, idx) in out.sectors.iter_mut().zip(&layout) {
        for (i, &fi) in idx.iter().enumerate() {
            sp.probs[i] = full[fi];
        }
    }
    Ok(out)
}

/// Undo the purity suppression `(1-p)^{2L}` caused by misreads.
pub fn fidelity_correct(p2_est: f64, p: f64, sites: usize) -> Result<f64> {
    if !(0.0..1.0).contains(&p) {
        return Err(Error::InvalidParameter(format!("misread probability {p} outside [0, 1)")));
    }
    Ok(p2_est / (1.0 - p).powi(2 * sites as i32))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{enumerate_sectors, trace_power, Lattice, SectorLabel};
    use crate::linalg::{c, hermitian_eigenvalues, CVector};
    use crate::measure::{outcome_probs, Observable};
    use crate::models::{FermiHubbardParams, IsingParams};
    use crate::rng::seeded;

    fn spin_sectors(l: usize, field: f64) -> Vec<Sector> {
        let model =
            QuenchModel::ising(Lattice::chain(l).unwrap(), IsingParams { field, ..IsingParams::default() }).unwrap();
        enumerate_sectors(&model).unwrap()
    }

    fn random_state(dim: usize, seed: u64) -> SectorState {
        let u = crate::unitaries::sample_cue(dim, &mut seeded(seed));
        let w: Vec<f64> = (0..dim).map(|i| (i + 1) as f64).collect();
        let total: f64 = w.iter().sum();
        let d = CMatrix::from_diagonal(&CVector::from_iterator(dim, w.iter().map(|x| c(x / total, 0.0))));
        SectorState::new(vec![Block::new(SectorLabel::Full, hermitize(&u * d * u.adjoint()))]).unwrap()
    }

    #[test]
    fn spec_validation() {
        assert!(ChannelSpec::new(ChannelKind::Depolarizing, 0.34).is_err());
        assert!(ChannelSpec::new(ChannelKind::Dephasing, 0.9).is_ok());
        assert!(ChannelSpec::new(ChannelKind::Dephasing, -0.1).is_err());
        assert!(FidelitySpec::new(0.5).is_err());
    }

    #[test]
    fn zero_probability_and_diagonal_states() {
        let sectors = spin_sectors(2, 1.0);
        let rho = random_state(4, 1);
        let same = apply_channel(&rho, &sectors, ChannelSpec::new(ChannelKind::Depolarizing, 0.0).unwrap()).unwrap();
        assert_eq!(same, rho);
        let diag = SectorState::diagonal(SectorLabel::Full, &[0.1, 0.2, 0.3, 0.4]).unwrap();
        let out = apply_channel(&diag, &sectors, ChannelSpec::new(ChannelKind::Dephasing, 0.2).unwrap()).unwrap();
        assert_eq!(out, diag);
    }

    #[test]
    fn dephasing_plus_state() {
        let sectors = spin_sectors(1, 1.0);
        let plus = CVector::from_vec(vec![c(1.0, 0.0), c(1.0, 0.0)]);
        let rho = SectorState::pure(SectorLabel::Full, &plus).unwrap();
        let out = apply_channel(&rho, &sectors, ChannelSpec::new(ChannelKind::Dephasing, 0.05).unwrap()).unwrap();
        assert!((out.blocks()[0].matrix[(0, 1)].re - 0.45).abs() < 1e-14);
    }

    #[test]
    fn depolarizing_single_site_matches_kraus_sum() {
        let sectors = spin_sectors(1, 1.0);
        let rho = random_state(2, 3);
        let p = 0.07;
        let out = apply_channel(&rho, &sectors, ChannelSpec::new(ChannelKind::Depolarizing, p).unwrap()).unwrap();
        let x = CMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)]);
        let y = CMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(0.0, -1.0), c(0.0, 1.0), c(0.0, 0.0)]);
        let z = CMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-1.0, 0.0)]);
        // Basis order is ↑, ↓, so σ^z = diag(1, -1) as written.
        let r = &rho.blocks()[0].matrix;
        let expect = r * c(1.0 - 3.0 * p, 0.0) + (&x * r * &x + &y * r * &y + &z * r * &z) * c(p, 0.0);
        assert!((&out.blocks()[0].matrix - expect).iter().all(|d| d.norm() < 1e-14));
    }

    #[test]
    fn channels_preserve_trace_and_positivity() {
        for (kind, p) in [(ChannelKind::Dephasing, 0.4), (ChannelKind::Depolarizing, 0.3)] {
            let sectors = spin_sectors(3, 1.0);
            let rho = random_state(8, 5);
            let out = apply_channel(&rho, &sectors, ChannelSpec::new(kind, p).unwrap()).unwrap();
            assert!((trace_power(&out, 1).unwrap() - 1.0).abs() < 1e-12);
            let eig = hermitian_eigenvalues(&out.blocks()[0].matrix).unwrap();
            assert!(eig.iter().all(|&e| e > -1e-10));
        }
    }

    #[test]
    fn depolarizing_moves_weight_between_parity_sectors() {
        let sectors = spin_sectors(2, 0.0);
        let up = SectorState::diagonal(SectorLabel::Parity(0), &[1.0, 0.0]).unwrap();
        let out = apply_channel(&up, &sectors, ChannelSpec::new(ChannelKind::Depolarizing, 0.1).unwrap()).unwrap();
        assert_eq!(out.blocks().len(), 2);
        assert!((trace_power(&out, 1).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn sandwich_with_identity_is_double_channel() {
        let sectors = spin_sectors(2, 1.0);
        let rho = random_state(4, 7);
        let spec = ChannelSpec::new(ChannelKind::Depolarizing, 0.05).unwrap();
        let u = BlockUnitary::identity(&sectors);
        let a = decohered_final_state(&rho, &u, &sectors, spec).unwrap();
        let b = apply_channel(&apply_channel(&rho, &sectors, spec).unwrap(), &sectors, spec).unwrap();
        assert!((&a.blocks()[0].matrix - &b.blocks()[0].matrix).iter().all(|d| d.norm() < 1e-15));
    }

    #[test]
    fn non_spin_models_are_rejected() {
        let fh = QuenchModel::fermi_hubbard(Lattice::chain(1).unwrap(), FermiHubbardParams::default()).unwrap();
        let sectors = enumerate_sectors(&fh).unwrap();
        let rho = SectorState::maximally_mixed(sectors[0].label(), 1).unwrap();
        assert!(apply_channel(&rho, &sectors, ChannelSpec::new(ChannelKind::Dephasing, 0.1).unwrap()).is_err());
    }

    #[test]
    fn jitter_zero_and_ratio() {
        let fh = QuenchModel::fermi_hubbard(Lattice::chain(3).unwrap(), FermiHubbardParams::default()).unwrap();
        let base = crate::models::sample_disorder(&fh, 0, &mut seeded(1));
        assert_eq!(jitter_disorder(&base, &fh, 0.0, &mut seeded(2)).unwrap(), base);
        let j = jitter_disorder(&base, &fh, 0.3, &mut seeded(2)).unwrap();
        assert_ne!(j, base);
        for s in 0..3 {
            assert!((j.values[2 * s] - 2.0 * j.values[2 * s + 1]).abs() < 1e-12);
        }
    }

    #[test]
    fn flips() {
        let up = BasisConfig(vec![1, 1]);
        assert_eq!(fidelity_flip(&up, FidelitySpec::new(0.0).unwrap(), &mut seeded(1)), up);
        let spec = FidelitySpec::new(0.1).unwrap();
        let mut rng = seeded(2);
        let n = 100_000;
        let mut counts = [0usize; 4];
        for _ in 0..n {
            let o = fidelity_flip(&up, spec, &mut rng);
            counts[full_index(&o)] += 1;
        }
        // Index 3 is ↑↑, 2 and 1 have one misread site, 0 has two.
        let expect = [0.01, 0.09, 0.09, 0.81];
        for (k, &e) in expect.iter().enumerate() {
            let f = counts[k] as f64 / n as f64;
            assert!((f - e).abs() < 3.0 * (e * (1.0 - e) / n as f64).sqrt(), "{k}: {f}");
        }
    }

    #[test]
    fn exact_readout_channel() {
        let sectors = spin_sectors(2, 1.0);
        let rho = SectorState::diagonal(SectorLabel::Full, &[1.0, 0.0, 0.0, 0.0]).unwrap();
        let obs = Observable::fine(&sectors);
        let d = outcome_probs(&BlockUnitary::identity(&sectors), &rho, &obs).unwrap();
        let r = readout_distribution(&d, &sectors, FidelitySpec::new(0.1).unwrap()).unwrap();
        let p = &r.sectors[0].probs;
        assert!((p[0] - 0.81).abs() < 1e-15 && (p[1] - 0.09).abs() < 1e-15 && (p[2] - 0.09).abs() < 1e-15);
        assert!((p[3] - 0.01).abs() < 1e-15);
    }

    #[test]
    fn correction_arithmetic() {
        assert_eq!(fidelity_correct(0.7, 0.0, 4).unwrap(), 0.7);
        let v = fidelity_correct(0.78, 0.02, 6).unwrap();
        assert!((v - 0.78 / 0.98f64.powi(12)).abs() < 1e-15);
        assert!((v - 0.993).abs() < 1e-3);
        assert!(fidelity_correct(0.5, 1.0, 2).is_err());
    }
}
