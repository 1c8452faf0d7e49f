//! Lattice Hamiltonians and disorder patterns for the three quench models.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{Lattice, Sector, SectorLabel, SpaceKind};
use crate::linalg::{c, hermiticity_defect, max_abs, CMatrix};

/// Interaction axis of the Ising coupling.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Z,
}

/// Long-range transverse-field Ising chain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IsingParams {
    /// Nearest-neighbour coupling `J`.
    pub coupling: f64,
    /// Power-law exponent of the coupling.
    pub alpha: f64,
    pub axis: Axis,
    /// Transverse field `Ω` along x.
    pub field: f64,
    /// Standard deviation of the on-site disorder.
    pub disorder: f64,
}

impl Default for IsingParams {
    fn default() -> Self {
        Self { coupling: 1.0, alpha: 6.0, axis: Axis::Z, field: 1.0, disorder: 1.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FermiHubbardParams {
    pub hopping: f64,
    pub interaction: f64,
    pub disorder: f64,
    /// Ratio `Δ_up / Δ_down` of the spin-dependent disorder.
    #[serde(default = "default_spin_ratio")]
    pub spin_ratio: f64,
}

fn default_spin_ratio() -> f64 {
    2.0
}

impl Default for FermiHubbardParams {
    fn default() -> Self {
        Self { hopping: 1.0, interaction: 1.0, disorder: 1.0, spin_ratio: default_spin_ratio() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoseHubbardParams {
    pub hopping: f64,
    pub interaction: f64,
    pub disorder: f64,
}

impl Default for BoseHubbardParams {
    fn default() -> Self {
        Self { hopping: 1.0, interaction: 1.0, disorder: 1.0 }
    }
}

/// A lattice model together with its parameters.
#[derive(Debug, Clone, PartialEq)]
pub enum QuenchModel {
    Ising { lattice: Lattice, params: IsingParams },
    FermiHubbard { lattice: Lattice, params: FermiHubbardParams },
    BoseHubbard { lattice: Lattice, params: BoseHubbardParams, particles: u32 },
}

fn check_finite(name: &str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} must be finite, got {v}")))
    }
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    check_finite(name, v)?;
    if v > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")))
    }
}

fn check_nonnegative(name: &str, v: f64) -> Result<()> {
    check_finite(name, v)?;
    if v >= 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} must be non-negative, got {v}")))
    }
}

impl QuenchModel {
    pub fn ising(lattice: Lattice, params: IsingParams) -> Result<Self> {
        if !lattice.is_chain() {
            return Err(Error::InvalidParameter("the Ising model is defined on a chain".into()));
        }
        check_positive("coupling J", params.coupling)?;
        check_positive("exponent alpha", params.alpha)?;
        check_finite("field", params.field)?;
        check_nonnegative("disorder", params.disorder)?;
        Ok(QuenchModel::Ising { lattice, params })
    }

    pub fn fermi_hubbard(lattice: Lattice, params: FermiHubbardParams) -> Result<Self> {
        check_positive("hopping t_F", params.hopping)?;
        check_finite("interaction U", params.interaction)?;
        check_nonnegative("disorder", params.disorder)?;
        check_finite("spin ratio", params.spin_ratio)?;
        if 2 * lattice.sites() > 24 {
            return Err(Error::InvalidParameter("Fermi-Hubbard lattice too large for dense storage".into()));
        }
        Ok(QuenchModel::FermiHubbard { lattice, params })
    }

    pub fn bose_hubbard(lattice: Lattice, params: BoseHubbardParams, particles: u32) -> Result<Self> {
        check_positive("hopping J", params.hopping)?;
        check_finite("interaction U", params.interaction)?;
        check_nonnegative("disorder", params.disorder)?;
        if particles > u8::MAX as u32 {
            return Err(Error::InvalidParameter(format!("{particles} bosons exceed the occupation range")));
        }
        Ok(QuenchModel::BoseHubbard { lattice, params, particles })
    }

    pub fn name(&self) -> &'static str {
        match self {
            QuenchModel::Ising { .. } => "ising",
            QuenchModel::FermiHubbard { .. } => "fermi-hubbard",
            QuenchModel::BoseHubbard { .. } => "bose-hubbard",
        }
    }

    pub fn lattice(&self) -> &Lattice {
        match self {
            QuenchModel::Ising { lattice, .. }
            | QuenchModel::FermiHubbard { lattice, .. }
            | QuenchModel::BoseHubbard { lattice, .. } => lattice,
        }
    }

    pub fn kind(&self) -> SpaceKind {
        match self {
            QuenchModel::Ising { .. } => SpaceKind::Spin,
            QuenchModel::FermiHubbard { .. } => SpaceKind::Fermion,
            QuenchModel::BoseHubbard { .. } => SpaceKind::Boson,
        }
    }

    pub fn disorder_strength(&self) -> f64 {
        match self {
            QuenchModel::Ising { params, .. } => params.disorder,
            QuenchModel::FermiHubbard { params, .. } => params.disorder,
            QuenchModel::BoseHubbard { params, .. } => params.disorder,
        }
    }

    /// Number of disorder values per pattern: one per site, or one per
    /// fermionic mode.
    pub fn disorder_len(&self) -> usize {
        match self {
            QuenchModel::FermiHubbard { lattice, .. } => 2 * lattice.sites(),
            _ => self.lattice().sites(),
        }
    }

    fn check_sector(&self, sector: &Sector) -> Result<()> {
        let ok = sector.kind() == self.kind()
            && sector.sites() == self.lattice().sites()
            && match (self, sector.label()) {
                (QuenchModel::Ising { .. }, SectorLabel::Full | SectorLabel::Parity(_)) => true,
                (QuenchModel::FermiHubbard { .. }, SectorLabel::Full | SectorLabel::Fermion { .. }) => true,
                (QuenchModel::BoseHubbard { particles, .. }, SectorLabel::Boson { n }) => n == *particles,
                _ => false,
            };
        if ok {
            Ok(())
        } else {
            Err(Error::SectorMismatch(format!(
                "sector {} does not belong to this {} model",
                sector.label(),
                self.name()
            )))
        }
    }
}

/// On-site disorder values of one quench. For Fermi-Hubbard models the
/// entries are ordered by fermionic mode `2 * site + spin`.
#[derive(Debug, Clone, PartialEq)]
pub struct DisorderPattern {
    pub quench: usize,
    pub values: Vec<f64>,
}

impl DisorderPattern {
    pub fn zeros(model: &QuenchModel, quench: usize) -> Self {
        Self { quench, values: vec![0.0; model.disorder_len()] }
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self { quench: self.quench, values: self.values.iter().map(|v| v * factor).collect() }
    }
}

/// Dense Hermitian matrix in the basis of one sector.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianOperator {
    pub label: SectorLabel,
    pub matrix: CMatrix,
}

impl HermitianOperator {
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// `self + diag(d)`.
    pub fn plus_diagonal(&self, d: &[f64]) -> Self {
        let mut matrix = self.matrix.clone();
        for (i, &v) in d.iter().enumerate() {
            matrix[(i, i)] += c(v, 0.0);
        }
        Self { label: self.label, matrix }
    }

    pub fn is_hermitian(&self) -> bool {
        hermiticity_defect(&self.matrix) <= 1e-12 * max_abs(&self.matrix).max(f64::MIN_POSITIVE)
    }
}

fn spin(bit: u8) -> f64 {
    if bit == 1 {
        1.0
    } else {
        -1.0
    }
}

/// Target index of a flipped configuration, or a cross-sector error.
fn target(sector: &Sector, occ: &[u8]) -> Result<usize> {
    sector.lookup_occupations(occ).ok_or_else(|| Error::CrossSector(sector.label().to_string()))
}

/// Static Hamiltonian `H|_A` restricted to `sector`.
pub fn build_static(model: &QuenchModel, sector: &Sector) -> Result<HermitianOperator> {
    model.check_sector(sector)?;
    let dim = sector.dim();
    let mut h = CMatrix::zeros(dim, dim);
    match model {
        QuenchModel::Ising { lattice, params } => {
            let pairs: Vec<(usize, usize, f64)> = lattice
                .all_pairs()
                .into_iter()
                .map(|(i, l)| (i, l, params.coupling / ((l - i) as f64).powf(params.alpha)))
                .collect();
            let mut scratch = Vec::new();
            for (col, cfg) in sector.basis().iter().enumerate() {
                let occ = cfg.occupations();
                for &(i, l, j) in &pairs {
                    match params.axis {
                        Axis::Z => h[(col, col)] += c(j * spin(occ[i]) * spin(occ[l]), 0.0),
                        Axis::X => {
                            scratch.clear();
                            scratch.extend_from_slice(occ);
                            scratch[i] ^= 1;
                            scratch[l] ^= 1;
                            h[(target(sector, &scratch)?, col)] += c(j, 0.0);
                        }
                    }
                }
                if params.field != 0.0 {
                    for i in 0..occ.len() {
                        scratch.clear();
                        scratch.extend_from_slice(occ);
                        scratch[i] ^= 1;
                        h[(target(sector, &scratch)?, col)] += c(params.field, 0.0);
                    }
                }
            }
        }
        QuenchModel::FermiHubbard { lattice, params } => {
            let bonds = lattice.nearest_neighbors();
            let mut scratch = Vec::new();
            for (col, cfg) in sector.basis().iter().enumerate() {
                let occ = cfg.occupations();
                for &(i, l) in &bonds {
                    for sigma in 0..2 {
                        let (a, b) = (2 * i + sigma, 2 * l + sigma);
                        for (from, to) in [(a, b), (b, a)] {
                            if occ[from] == 1 && occ[to] == 0 {
                                let (lo, hi) = if from < to { (from, to) } else { (to, from) };
                                let between: u32 = occ[lo + 1..hi].iter().map(|&n| n as u32).sum();
                                let sign = if between.is_multiple_of(2) { 1.0 } else { -1.0 };
                                scratch.clear();
                                scratch.extend_from_slice(occ);
                                scratch[from] = 0;
                                scratch[to] = 1;
                                h[(target(sector, &scratch)?, col)] += c(-params.hopping * sign, 0.0);
                            }
                        }
                    }
                }
                let doublons = (0..lattice.sites()).filter(|&s| occ[2 * s] == 1 && occ[2 * s + 1] == 1).count();
                h[(col, col)] += c(params.interaction * doublons as f64, 0.0);
            }
        }
        QuenchModel::BoseHubbard { lattice, params, .. } => {
            let bonds = lattice.nearest_neighbors();
            let mut scratch = Vec::new();
            for (col, cfg) in sector.basis().iter().enumerate() {
                let occ = cfg.occupations();
                for &(i, l) in &bonds {
                    for (from, to) in [(i, l), (l, i)] {
                        if occ[from] > 0 {
                            let amp = ((occ[from] as f64) * (occ[to] as f64 + 1.0)).sqrt();
                            scratch.clear();
                            scratch.extend_from_slice(occ);
                            scratch[from] -= 1;
                            scratch[to] += 1;
                            h[(target(sector, &scratch)?, col)] += c(-params.hopping * amp, 0.0);
                        }
                    }
                }
                let onsite: f64 = occ.iter().map(|&n| n as f64 * (n as f64 - 1.0)).sum();
                h[(col, col)] += c(0.5 * params.interaction * onsite, 0.0);
            }
        }
    }
    Ok(HermitianOperator { label: sector.label(), matrix: h })
}

/// Diagonal of `Σ Δ_i X_i` in the basis of `sector`.
pub fn disorder_diagonal(model: &QuenchModel, sector: &Sector, pattern: &DisorderPattern) -> Result<Vec<f64>> {
    model.check_sector(sector)?;
    if pattern.values.len() != model.disorder_len() {
        return Err(Error::InvalidParameter(format!(
            "disorder pattern has {} values, model needs {}",
            pattern.values.len(),
            model.disorder_len()
        )));
    }
    let d = &pattern.values;
    Ok(sector
        .basis()
        .iter()
        .map(|cfg| {
            let occ = cfg.occupations();
            match model {
                QuenchModel::Ising { .. } => occ.iter().zip(d).map(|(&b, &v)| v * spin(b)).sum(),
                _ => occ.iter().zip(d).map(|(&n, &v)| v * n as f64).sum(),
            }
        })
        .collect())
}

/// Disorder-only Hamiltonian `Σ Δ_i X_i`.
pub fn build_disorder(model: &QuenchModel, sector: &Sector, pattern: &DisorderPattern) -> Result<HermitianOperator> {
    let d = disorder_diagonal(model, sector, pattern)?;
    let zero = HermitianOperator { label: sector.label(), matrix: CMatrix::zeros(d.len(), d.len()) };
    Ok(zero.plus_diagonal(&d))
}

/// Quench Hamiltonian `H|_A + Σ Δ_i X_i`.
pub fn build_quench(model: &QuenchModel, sector: &Sector, pattern: &DisorderPattern) -> Result<HermitianOperator> {
    let h = build_static(model, sector)?;
    Ok(h.plus_diagonal(&disorder_diagonal(model, sector, pattern)?))
}

/// Draw one disorder pattern with i.i.d. normal entries of width `δ`. For
/// Fermi-Hubbard models the down-spin values are drawn and the up-spin
/// values are the same numbers times the spin ratio.
pub fn sample_disorder<R: Rng + ?Sized>(model: &QuenchModel, quench: usize, rng: &mut R) -> DisorderPattern {
    sample_disorder_with_width(model, quench, model.disorder_strength(), rng)
}

pub(crate) fn sample_disorder_with_width<R: Rng + ?Sized>(
    model: &QuenchModel,
    quench: usize,
    width: f64,
    rng: &mut R,
) -> DisorderPattern {
    let sites = model.lattice().sites();
    let draw = |rng: &mut R| {
        if width == 0.0 {
            0.0
        } else {
            Normal::new(0.0, width).expect("finite width").sample(rng)
        }
    };
    let values = match model {
        QuenchModel::FermiHubbard { params, .. } => {
            let mut v = vec![0.0; 2 * sites];
            for s in 0..sites {
                let down = draw(rng);
                v[2 * s] = params.spin_ratio * down;
                v[2 * s + 1] = down;
            }
            v
        }
        _ => (0..sites).map(|_| draw(rng)).collect(),
    };
    DisorderPattern { quench, values }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::enumerate_sectors;
    use crate::linalg::hermitian_eigenvalues;
    use crate::rng::seeded;

    fn chain(l: usize) -> Lattice {
        Lattice::chain(l).unwrap()
    }

    #[test]
    fn parameter_validation() {
        let bad_alpha = IsingParams { alpha: 0.0, ..IsingParams::default() };
        assert!(QuenchModel::ising(chain(2), bad_alpha).is_err());
        let bad_j = IsingParams { coupling: -1.0, ..IsingParams::default() };
        assert!(QuenchModel::ising(chain(2), bad_j).is_err());
        let bad_t = FermiHubbardParams { hopping: 0.0, ..FermiHubbardParams::default() };
        assert!(QuenchModel::fermi_hubbard(chain(2), bad_t).is_err());
        assert!(QuenchModel::ising(Lattice::rectangle(2, 2).unwrap(), IsingParams::default()).is_err());
    }

    #[test]
    fn ising_two_site_zz() {
        let p = IsingParams { coupling: 1.3, field: 0.0, ..IsingParams::default() };
        let model = QuenchModel::ising(chain(2), p).unwrap();
        let s = Sector::full(&model);
        let h = build_static(&model, &s).unwrap();
        let diag: Vec<f64> = (0..4).map(|i| h.matrix[(i, i)].re).collect();
        assert_eq!(diag, vec![1.3, -1.3, -1.3, 1.3]);
        assert_eq!(max_abs(&(h.matrix.clone() - CMatrix::from_diagonal(&h.matrix.diagonal()))), 0.0);
    }

    #[test]
    fn ising_power_law_ratio() {
        let p = IsingParams { field: 0.0, ..IsingParams::default() };
        let model = QuenchModel::ising(chain(3), p).unwrap();
        let s = Sector::full(&model);
        let h = build_static(&model, &s).unwrap();
        // ↑↑↑ minus ↑↑↓ isolates the couplings touching site 2.
        let e_all = h.matrix[(0, 0)].re;
        let e_flip_last = h.matrix[(s.lookup_occupations(&[1, 1, 0]).unwrap(), 0)].re;
        assert_eq!(e_flip_last, 0.0);
        let e_110 = h.matrix[(1, 1)].re;
        let nnn = (e_all - e_110) / 2.0 - 1.0;
        assert_eq!(nnn, 1.0 / 64.0);
    }

    #[test]
    fn ising_single_site_disorder() {
        let p = IsingParams { field: 0.0, ..IsingParams::default() };
        let model = QuenchModel::ising(chain(1), p).unwrap();
        let s = Sector::full(&model);
        let h = build_quench(&model, &s, &DisorderPattern { quench: 0, values: vec![0.7] }).unwrap();
        assert_eq!(h.matrix[(0, 0)].re, 0.7);
        assert_eq!(h.matrix[(1, 1)].re, -0.7);
    }

    #[test]
    fn zero_pattern_is_static() {
        let model = QuenchModel::ising(chain(3), IsingParams::default()).unwrap();
        let s = Sector::full(&model);
        let h0 = build_static(&model, &s).unwrap();
        let hq = build_quench(&model, &s, &DisorderPattern::zeros(&model, 0)).unwrap();
        assert_eq!(h0, hq);
    }

    #[test]
    fn fermi_hubbard_two_site_hopping() {
        let p = FermiHubbardParams { hopping: 0.8, ..FermiHubbardParams::default() };
        let model = QuenchModel::fermi_hubbard(chain(2), p).unwrap();
        let s = Sector::build(&model, SectorLabel::fermion(1, 1).unwrap()).unwrap();
        let h = build_static(&model, &s).unwrap();
        assert_eq!(h.matrix[(0, 1)].re, -0.8);
        let mut eig = hermitian_eigenvalues(&h.matrix).unwrap();
        eig.sort_by(f64::total_cmp);
        assert!((eig[0] + 0.8).abs() < 1e-14 && (eig[1] - 0.8).abs() < 1e-14);
    }

    #[test]
    fn fermi_hubbard_signs_and_hermiticity() {
        let model =
            QuenchModel::fermi_hubbard(Lattice::rectangle(2, 2).unwrap(), FermiHubbardParams::default()).unwrap();
        for s in enumerate_sectors(&model).unwrap() {
            let h = build_static(&model, &s).unwrap();
            assert!(h.is_hermitian());
            for i in 0..s.dim() {
                for j in 0..s.dim() {
                    if i != j {
                        let v = h.matrix[(i, j)].re;
                        assert!(v == 0.0 || v.abs() == 1.0, "{v}");
                    }
                }
            }
        }
        // Sign from passing the down fermion on site 0 when the up fermion
        // hops 0 -> 1: modes 0 and 2 with mode 1 occupied in between.
        let model = QuenchModel::fermi_hubbard(chain(2), FermiHubbardParams::default()).unwrap();
        let s = Sector::build(&model, SectorLabel::fermion(2, 0).unwrap()).unwrap();
        let h = build_static(&model, &s).unwrap();
        let from = s.lookup_occupations(&[1, 1, 0, 0]).unwrap();
        let to = s.lookup_occupations(&[0, 1, 1, 0]).unwrap();
        assert_eq!(h.matrix[(to, from)].re, 1.0);
        assert_eq!(h.matrix[(from, from)].re, 1.0);
    }

    #[test]
    fn bose_hubbard_elements() {
        let p = BoseHubbardParams { hopping: 1.0, interaction: 2.5, disorder: 1.0 };
        let model = QuenchModel::bose_hubbard(chain(2), p, 2).unwrap();
        let s = Sector::full(&model);
        let h = build_static(&model, &s).unwrap();
        assert_eq!(h.matrix[(0, 0)].re, 2.5);
        assert_eq!(h.matrix[(1, 1)].re, 0.0);
        assert!((h.matrix[(1, 0)].re + 2f64.sqrt()).abs() < 1e-15);
        let d = disorder_diagonal(&model, &s, &DisorderPattern { quench: 0, values: vec![1.0, -1.0] }).unwrap();
        assert_eq!(d, vec![2.0, 0.0, -2.0]);
    }

    #[test]
    fn sector_model_mismatch() {
        let bh = QuenchModel::bose_hubbard(chain(2), BoseHubbardParams::default(), 2).unwrap();
        let ising = QuenchModel::ising(chain(2), IsingParams::default()).unwrap();
        assert!(matches!(build_static(&ising, &Sector::full(&bh)), Err(Error::SectorMismatch(_))));
    }

    #[test]
    fn parity_sectors_are_closed_without_field() {
        let p = IsingParams { field: 0.0, axis: Axis::X, ..IsingParams::default() };
        let model = QuenchModel::ising(chain(4), p).unwrap();
        for s in enumerate_sectors(&model).unwrap() {
            build_static(&model, &s).unwrap();
        }
        // A field flips single spins and leaves the parity sector.
        let with_field = QuenchModel::ising(chain(4), IsingParams::default()).unwrap();
        let s = Sector::build(&with_field, SectorLabel::Parity(0)).unwrap();
        assert!(matches!(build_static(&with_field, &s), Err(Error::CrossSector(_))));
    }

    #[test]
    fn disorder_sampling() {
        let quiet = QuenchModel::ising(chain(3), IsingParams { disorder: 0.0, ..IsingParams::default() }).unwrap();
        assert!(sample_disorder(&quiet, 0, &mut seeded(1)).values.iter().all(|&v| v == 0.0));

        let model = QuenchModel::ising(chain(4), IsingParams::default()).unwrap();
        assert_eq!(sample_disorder(&model, 0, &mut seeded(9)), sample_disorder(&model, 0, &mut seeded(9)));

        let single = QuenchModel::ising(chain(1), IsingParams::default()).unwrap();
        let mut rng = seeded(5);
        let xs: Vec<f64> = (0..100_000).map(|_| sample_disorder(&single, 0, &mut rng).values[0]).collect();
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        let std = (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / xs.len() as f64).sqrt();
        assert!(mean.abs() < 0.01, "{mean}");
        assert!((std - 1.0).abs() < 0.01, "{std}");

        let fh = QuenchModel::fermi_hubbard(chain(3), FermiHubbardParams::default()).unwrap();
        let pat = sample_disorder(&fh, 0, &mut seeded(3));
        for s in 0..3 {
            assert_eq!(pat.values[2 * s], 2.0 * pat.values[2 * s + 1]);
        }
    }
}
