//! Many-body bases, conserved-charge sectors and block-diagonal states.
//!
//! Basis configurations are occupation tuples. Spin-1/2 sites store `1` for
//! up and `0` for down. Fermi-Hubbard configurations store one entry per
//! fermionic mode, with mode `2 * site + spin` (`spin = 0` for up, `1` for
//! down); this is also the Jordan-Wigner order used for fermionic signs.
//! Bose-Hubbard configurations store the boson number per site.
//!
//! Within a sector, basis states are sorted in descending lexicographic order
//! of the occupation tuple with site 0 most significant, so that e.g. the
//! two-spin basis reads `↑↑, ↑↓, ↓↑, ↓↓` and two bosons on two sites read
//! `(2,0), (1,1), (0,2)`.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use crate::error::{Error, Result};
use crate::linalg::{hermitian_eigenvalues, hermiticity_defect, max_abs, trace, CMatrix, CVector};
use crate::models::QuenchModel;

/// Rectangular lattice with open boundaries. A chain is `lx = L, ly = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Lattice {
    lx: usize,
    ly: usize,
}

impl Lattice {
    pub fn chain(sites: usize) -> Result<Self> {
        Self::rectangle(sites, 1)
    }

    pub fn rectangle(lx: usize, ly: usize) -> Result<Self> {
        if lx == 0 || ly == 0 {
            return Err(Error::InvalidParameter(format!("lattice {lx}x{ly} has no sites")));
        }
        Ok(Self { lx, ly })
    }

    pub fn lx(&self) -> usize {
        self.lx
    }

    pub fn ly(&self) -> usize {
        self.ly
    }

    pub fn sites(&self) -> usize {
        self.lx * self.ly
    }

    pub fn is_chain(&self) -> bool {
        self.ly == 1
    }

    /// Row-major site index of `(ix, iy)`, both zero-based.
    pub fn site(&self, ix: usize, iy: usize) -> usize {
        debug_assert!(ix < self.lx && iy < self.ly);
        iy * self.lx + ix
    }

    pub fn coords(&self, site: usize) -> (usize, usize) {
        (site % self.lx, site / self.lx)
    }

    /// Nearest-neighbour pairs `(i, l)` with `i < l`, sorted.
    pub fn nearest_neighbors(&self) -> Vec<(usize, usize)> {
        let mut pairs = Vec::new();
        for iy in 0..self.ly {
            for ix in 0..self.lx {
                let s = self.site(ix, iy);
                if ix + 1 < self.lx {
                    pairs.push((s, self.site(ix + 1, iy)));
                }
                if iy + 1 < self.ly {
                    pairs.push((s, self.site(ix, iy + 1)));
                }
            }
        }
        pairs.sort_unstable();
        pairs
    }

    /// All pairs `(i, l)` with `i < l`.
    pub fn all_pairs(&self) -> Vec<(usize, usize)> {
        let n = self.sites();
        (0..n).flat_map(|i| (i + 1..n).map(move |l| (i, l))).collect()
    }
}

/// Occupation record of one many-body basis state.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BasisConfig(pub Vec<u8>);

impl BasisConfig {
    pub fn occupations(&self) -> &[u8] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn total(&self) -> u32 {
        self.0.iter().map(|&n| n as u32).sum()
    }
}

impl fmt::Display for BasisConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for n in &self.0 {
            write!(f, "{n}")?;
        }
        Ok(())
    }
}

/// Kind of local Hilbert space a configuration lives in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SpaceKind {
    Spin,
    Fermion,
    Boson,
}

/// Conserved quantum numbers labelling a sector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SectorLabel {
    /// No resolved charge: the whole model basis.
    Full,
    /// Number of up spins modulo two.
    Parity(u8),
    /// Particle number and magnetization `n_up - n_down`.
    Fermion { n: u32, sz: i32 },
    /// Particle number.
    Boson { n: u32 },
}

impl SectorLabel {
    /// Validated Fermi-Hubbard sector request.
    pub fn fermion(n: i64, sz: i64) -> Result<Self> {
        if n < 0 {
            return Err(Error::InvalidSector(format!("negative particle number {n}")));
        }
        if sz.abs() > n {
            return Err(Error::InvalidSector(format!("|S_z| = {} exceeds N = {n}", sz.abs())));
        }
        if (n + sz) % 2 != 0 {
            return Err(Error::InvalidSector(format!("N = {n} and S_z = {sz} have different parity")));
        }
        Ok(SectorLabel::Fermion { n: n as u32, sz: sz as i32 })
    }

    /// Validated Bose-Hubbard sector request.
    pub fn boson(n: i64) -> Result<Self> {
        if n < 0 {
            return Err(Error::InvalidSector(format!("negative particle number {n}")));
        }
        Ok(SectorLabel::Boson { n: n as u32 })
    }

    pub fn parity(p: u8) -> Result<Self> {
        if p > 1 {
            return Err(Error::InvalidSector(format!("parity must be 0 or 1, got {p}")));
        }
        Ok(SectorLabel::Parity(p))
    }
}

impl fmt::Display for SectorLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SectorLabel::Full => write!(f, "full"),
            SectorLabel::Parity(p) => write!(f, "parity={p}"),
            SectorLabel::Fermion { n, sz } => write!(f, "N={n};Sz={sz}"),
            SectorLabel::Boson { n } => write!(f, "N={n}"),
        }
    }
}

/// A block of the Hilbert space with fixed conserved charges.
#[derive(Debug, Clone)]
pub struct Sector {
    label: SectorLabel,
    kind: SpaceKind,
    sites: usize,
    basis: Vec<BasisConfig>,
    index: HashMap<BasisConfig, usize>,
}

impl Sector {
    fn from_configs(label: SectorLabel, kind: SpaceKind, sites: usize, mut basis: Vec<BasisConfig>) -> Self {
        basis.sort_unstable_by(|a, b| b.cmp(a));
        basis.dedup();
        let index = basis.iter().enumerate().map(|(i, c)| (c.clone(), i)).collect();
        Self { label, kind, sites, basis, index }
    }

    /// The whole basis of a model as one block, ignoring conserved charges.
    /// Bose-Hubbard models have no finite full space; their model particle
    /// number sector is returned instead.
    pub fn full(model: &QuenchModel) -> Self {
        let sites = model.lattice().sites();
        match model {
            QuenchModel::Ising { .. } => {
                Self::from_configs(SectorLabel::Full, SpaceKind::Spin, sites, binary_configs(sites))
            }
            QuenchModel::FermiHubbard { .. } => {
                Self::from_configs(SectorLabel::Full, SpaceKind::Fermion, sites, binary_configs(2 * sites))
            }
            QuenchModel::BoseHubbard { particles, .. } => Self::from_configs(
                SectorLabel::Boson { n: *particles },
                SpaceKind::Boson,
                sites,
                compositions(*particles, sites),
            ),
        }
    }

    /// Build the sector of `model` carrying `label`.
    pub fn build(model: &QuenchModel, label: SectorLabel) -> Result<Self> {
        let sites = model.lattice().sites();
        let mismatch = || Error::SectorMismatch(format!("label {label} does not belong to model {}", model.name()));
        match (model, label) {
            (QuenchModel::Ising { .. }, SectorLabel::Full) | (QuenchModel::FermiHubbard { .. }, SectorLabel::Full) => {
                Ok(Self::full(model))
            }
            (QuenchModel::Ising { .. }, SectorLabel::Parity(p)) => {
                if p > 1 {
                    return Err(Error::InvalidSector(format!("parity must be 0 or 1, got {p}")));
                }
                let configs = binary_configs(sites).into_iter().filter(|c| c.total() % 2 == p as u32).collect();
                Ok(Self::from_configs(label, SpaceKind::Spin, sites, configs))
            }
            (QuenchModel::FermiHubbard { .. }, SectorLabel::Fermion { n, sz }) => {
                let n = n as i64;
                let sz = sz as i64;
                SectorLabel::fermion(n, sz)?;
                let n_up = ((n + sz) / 2) as usize;
                let n_dn = ((n - sz) / 2) as usize;
                if n_up > sites || n_dn > sites {
                    return Err(Error::InvalidSector(format!("N = {n}, S_z = {sz} does not fit on {sites} sites")));
                }
                let ups = combinations(sites, n_up);
                let dns = combinations(sites, n_dn);
                let mut configs = Vec::with_capacity(ups.len() * dns.len());
                for u in &ups {
                    for d in &dns {
                        let occ = (0..sites).flat_map(|s| [u[s], d[s]]).collect();
                        configs.push(BasisConfig(occ));
                    }
                }
                Ok(Self::from_configs(label, SpaceKind::Fermion, sites, configs))
            }
            (QuenchModel::BoseHubbard { particles, .. }, SectorLabel::Boson { n }) => {
                if n != *particles {
                    return Err(Error::InvalidSector(format!(
                        "model holds {particles} bosons, sector asks for N = {n}"
                    )));
                }
                Ok(Self::full(model))
            }
            _ => Err(mismatch()),
        }
    }

    pub fn label(&self) -> SectorLabel {
        self.label
    }

    pub fn kind(&self) -> SpaceKind {
        self.kind
    }

    pub fn sites(&self) -> usize {
        self.sites
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[BasisConfig] {
        &self.basis
    }

    pub fn config(&self, i: usize) -> &BasisConfig {
        &self.basis[i]
    }

    pub fn lookup(&self, config: &BasisConfig) -> Option<usize> {
        self.index.get(config).copied()
    }

    pub fn lookup_occupations(&self, occupations: &[u8]) -> Option<usize> {
        // HashMap<BasisConfig, _> cannot be queried by slice, so allocate.
        self.index.get(&BasisConfig(occupations.to_vec())).copied()
    }
}

/// All sectors of `model` with a nonempty basis, sorted by label.
pub fn enumerate_sectors(model: &QuenchModel) -> Result<Vec<Sector>> {
    let sites = model.lattice().sites();
    let labels: Vec<SectorLabel> = match model {
        QuenchModel::Ising { params, .. } => {
            if params.field == 0.0 {
                vec![SectorLabel::Parity(0), SectorLabel::Parity(1)]
            } else {
                vec![SectorLabel::Full]
            }
        }
        QuenchModel::FermiHubbard { .. } => {
            let mut v = Vec::new();
            for n_up in 0..=sites {
                for n_dn in 0..=sites {
                    v.push(SectorLabel::Fermion { n: (n_up + n_dn) as u32, sz: n_up as i32 - n_dn as i32 });
                }
            }
            v.sort_unstable();
            v
        }
        QuenchModel::BoseHubbard { particles, .. } => vec![SectorLabel::Boson { n: *particles }],
    };
    let mut sectors = labels.into_iter().map(|l| Sector::build(model, l)).collect::<Result<Vec<_>>>()?;
    sectors.retain(|s| s.dim() > 0);
    Ok(sectors)
}

fn binary_configs(modes: usize) -> Vec<BasisConfig> {
    (0..1u64 << modes)
        .rev()
        .map(|mask| BasisConfig((0..modes).map(|m| ((mask >> (modes - 1 - m)) & 1) as u8).collect()))
        .collect()
}

/// Occupation vectors with `k` of `n` entries set, descending lexicographic.
fn combinations(n: usize, k: usize) -> Vec<Vec<u8>> {
    fn rec(n: usize, k: usize, prefix: &mut Vec<u8>, out: &mut Vec<Vec<u8>>) {
        let remaining = n - prefix.len();
        if k > remaining {
            return;
        }
        if remaining == 0 {
            out.push(prefix.clone());
            return;
        }
        if k > 0 {
            prefix.push(1);
            rec(n, k - 1, prefix, out);
            prefix.pop();
        }
        prefix.push(0);
        rec(n, k, prefix, out);
        prefix.pop();
    }
    let mut out = Vec::new();
    rec(n, k, &mut Vec::with_capacity(n), &mut out);
    out
}

/// Ways to distribute `total` bosons over `sites`, descending lexicographic.
fn compositions(total: u32, sites: usize) -> Vec<BasisConfig> {
    fn rec(left: u32, sites: usize, prefix: &mut Vec<u8>, out: &mut Vec<BasisConfig>) {
        if prefix.len() + 1 == sites {
            prefix.push(left as u8);
            out.push(BasisConfig(prefix.clone()));
            prefix.pop();
            return;
        }
        for n in (0..=left).rev() {
            prefix.push(n as u8);
            rec(left - n, sites, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    if sites > 0 && total <= u8::MAX as u32 {
        rec(total, sites, &mut Vec::with_capacity(sites), &mut out);
    }
    out
}

/// A labelled dense square block.
#[derive(Debug, Clone, PartialEq)]
pub struct Block {
    pub label: SectorLabel,
    pub matrix: CMatrix,
}

impl Block {
    pub fn new(label: SectorLabel, matrix: CMatrix) -> Self {
        Self { label, matrix }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }
}

const STATE_TOL: f64 = 1e-12;

/// Block-diagonal density matrix `rho_A = ⊕_α rho_A^α`. Only sectors with
/// support need to be present.
#[derive(Debug, Clone, PartialEq)]
pub struct SectorState {
    blocks: Vec<Block>,
}

impl SectorState {
    /// Validates Hermiticity, positivity and unit total trace.
    pub fn new(mut blocks: Vec<Block>) -> Result<Self> {
        if blocks.is_empty() {
            return Err(Error::InvalidState("state has no blocks".into()));
        }
        blocks.sort_by_key(|b| b.label);
        for w in blocks.windows(2) {
            if w[0].label == w[1].label {
                return Err(Error::InvalidState(format!("duplicate block {}", w[0].label)));
            }
        }
        let mut total = 0.0;
        for b in &blocks {
            if !b.matrix.is_square() {
                return Err(Error::InvalidState(format!("block {} is not square", b.label)));
            }
            let scale = max_abs(&b.matrix).max(1.0);
            if hermiticity_defect(&b.matrix) > STATE_TOL * scale {
                return Err(Error::InvalidState(format!("block {} is not Hermitian", b.label)));
            }
            let eig = hermitian_eigenvalues(&b.matrix).ok_or_else(|| Error::Numerical {
                label: b.label.to_string(),
                reason: "eigenvalues did not converge".into(),
            })?;
            if let Some(min) = eig.iter().copied().reduce(f64::min) {
                if min < -STATE_TOL {
                    return Err(Error::InvalidState(format!("block {} has negative eigenvalue {min:e}", b.label)));
                }
            }
            total += trace(&b.matrix).re;
        }
        if (total - 1.0).abs() > STATE_TOL {
            return Err(Error::InvalidState(format!("total trace {total} is not 1")));
        }
        Ok(Self { blocks })
    }

    /// Pure state `|psi><psi|` in one sector; `psi` is normalized here.
    pub fn pure(label: SectorLabel, psi: &CVector) -> Result<Self> {
        let norm = psi.norm();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::InvalidState("state vector has zero norm".into()));
        }
        let psi = psi / nalgebra::Complex::new(norm, 0.0);
        Self::new(vec![Block::new(label, &psi * psi.adjoint())])
    }

    /// `I / dim` in one sector.
    pub fn maximally_mixed(label: SectorLabel, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidState("empty sector".into()));
        }
        let m = CMatrix::identity(dim, dim).map(|z| z / dim as f64);
        Self::new(vec![Block::new(label, m)])
    }

    /// Diagonal state with the given populations in one sector.
    pub fn diagonal(label: SectorLabel, populations: &[f64]) -> Result<Self> {
        let v = CVector::from_iterator(populations.len(), populations.iter().map(|&p| nalgebra::Complex::new(p, 0.0)));
        Self::new(vec![Block::new(label, CMatrix::from_diagonal(&v))])
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn into_blocks(self) -> Vec<Block> {
        self.blocks
    }

    pub fn block(&self, label: SectorLabel) -> Option<&Block> {
        self.blocks.iter().find(|b| b.label == label)
    }

    pub fn labels(&self) -> Vec<SectorLabel> {
        self.blocks.iter().map(|b| b.label).collect()
    }

    pub fn total_dim(&self) -> usize {
        self.blocks.iter().map(Block::dim).sum()
    }

    /// Replace every block by `V rho V†` for per-sector unitaries.
    pub fn conjugated(&self, unitaries: &[Block]) -> Result<Self> {
        let blocks = self
            .blocks
            .iter()
            .map(|b| {
                let v = unitaries
                    .iter()
                    .find(|u| u.label == b.label)
                    .ok_or_else(|| Error::SectorMismatch(format!("no unitary block for {}", b.label)))?;
                if v.dim() != b.dim() {
                    return Err(Error::SectorMismatch(format!("dimension mismatch in {}", b.label)));
                }
                let m = &v.matrix * &b.matrix * v.matrix.adjoint();
                Ok(Block::new(b.label, hermitize(m)))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { blocks })
    }
}

pub(crate) fn hermitize(m: CMatrix) -> CMatrix {
    (&m + m.adjoint()).map(|z| z * 0.5)
}

/// Exact `Tr[(rho^α)^n]` for every block, from eigenvalues.
pub fn sector_trace_powers(state: &SectorState, n: u32) -> Result<BTreeMap<SectorLabel, f64>> {
    if n == 0 {
        return Err(Error::InvalidParameter("trace power needs n >= 1".into()));
    }
    state
        .blocks()
        .iter()
        .map(|b| {
            let eig = hermitian_eigenvalues(&b.matrix).ok_or_else(|| Error::Numerical {
                label: b.label.to_string(),
                reason: "eigenvalues did not converge".into(),
            })?;
            Ok((b.label, eig.iter().map(|&l| l.max(0.0).powi(n as i32)).sum()))
        })
        .collect()
}

/// `p_n = Σ_α Tr[(rho^α)^n]`.
pub fn trace_power(state: &SectorState, n: u32) -> Result<f64> {
    Ok(sector_trace_powers(state, n)?.values().sum())
}
