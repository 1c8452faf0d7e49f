//! Named test states.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::hilbert::{BasisConfig, Sector, SectorLabel, SectorState};
use crate::linalg::{c, hermitian_eigen, CVector};
use crate::models::{build_static, BoseHubbardParams, QuenchModel};

fn sector_of<'a>(sectors: &'a [Sector], occ: &[u8]) -> Result<(&'a Sector, usize)> {
    sectors.iter().find_map(|s| s.lookup_occupations(occ).map(|i| (s, i))).ok_or_else(|| {
        Error::InvalidState(format!("configuration {} is in none of the sectors", BasisConfig(occ.to_vec())))
    })
}

/// Product state of one basis configuration.
pub fn basis_state(sectors: &[Sector], occupations: &[u8]) -> Result<SectorState> {
    let (s, i) = sector_of(sectors, occupations)?;
    let mut psi = CVector::zeros(s.dim());
    psi[i] = c(1.0, 0.0);
    SectorState::pure(s.label(), &psi)
}

/// `|↑↓↑↓...⟩` on a spin chain.
pub fn antiferromagnetic(sectors: &[Sector], sites: usize) -> Result<SectorState> {
    let occ: Vec<u8> = (0..sites).map(|i| (i % 2 == 0) as u8).collect();
    basis_state(sectors, &occ)
}

/// Normalized superposition of basis configurations with given amplitudes.
/// All configurations must lie in one sector.
pub fn superposition(sectors: &[Sector], terms: &[(Vec<u8>, f64)]) -> Result<SectorState> {
    let first = terms.first().ok_or_else(|| Error::InvalidState("empty superposition".into()))?;
    let (sector, _) = sector_of(sectors, &first.0)?;
    let mut psi = CVector::zeros(sector.dim());
    for (occ, amp) in terms {
        let i = sector
            .lookup_occupations(occ)
            .ok_or_else(|| Error::InvalidState("superposition mixes configurations of different sectors".into()))?;
        psi[i] += c(*amp, 0.0);
    }
    SectorState::pure(sector.label(), &psi)
}

/// `(|↑...↑⟩ + |↓...↓⟩)/√2`.
pub fn ghz(sectors: &[Sector], sites: usize) -> Result<SectorState> {
    superposition(sectors, &[(vec![1; sites], 1.0), (vec![0; sites], 1.0)])
}

/// Equal mixture of the first `rank` basis states of a sector; purity `1/rank`.
pub fn uniform_mixture(sector: &Sector, rank: usize) -> Result<SectorState> {
    if rank == 0 || rank > sector.dim() {
        return Err(Error::InvalidState(format!("rank {rank} outside 1..={}", sector.dim())));
    }
    let mut pops = vec![0.0; sector.dim()];
    for p in pops.iter_mut().take(rank) {
        *p = 1.0 / rank as f64;
    }
    SectorState::diagonal(sector.label(), &pops)
}

pub fn maximally_mixed(sector: &Sector) -> Result<SectorState> {
    SectorState::maximally_mixed(sector.label(), sector.dim())
}

/// Haar-random pure state in one sector.
pub fn random_pure<R: Rng + ?Sized>(sector: &Sector, rng: &mut R) -> Result<SectorState> {
    let psi = CVector::from_fn(sector.dim(), |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        c(re, im)
    });
    SectorState::pure(sector.label(), &psi)
}

/// Fermionic mode `2 * site + spin` with `spin = 0` for up.
pub fn mode(site: usize, up: bool) -> usize {
    2 * site + if up { 0 } else { 1 }
}

/// `c†_{m_1} c†_{m_2} ... |vacuum⟩` as an occupation vector and sign, or
/// `None` if a mode is created twice.
pub fn create_on_vacuum(modes_total: usize, modes: &[usize]) -> Option<(Vec<u8>, f64)> {
    let mut occ = vec![0u8; modes_total];
    let mut sign = 1.0;
    for &m in modes.iter().rev() {
        if occ[m] == 1 {
            return None;
        }
        if occ[..m].iter().filter(|&&n| n == 1).count() % 2 == 1 {
            sign = -sign;
        }
        occ[m] = 1;
    }
    Some((occ, sign))
}

/// Named Fermi-Hubbard test states on an `lx × ly` lattice, built from
/// creation operators at 1-based corner coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FermionTestState {
    /// One up fermion shared between the two opposite corners.
    Psi11,
    /// A singlet-like pair spread over the four corners.
    Psi20,
    /// Two up fermions on the first or the last bond.
    Psi22,
}

pub fn fermion_test_state(model: &QuenchModel, sectors: &[Sector], which: FermionTestState) -> Result<SectorState> {
    let QuenchModel::FermiHubbard { lattice, .. } = model else {
        return Err(Error::InvalidParameter("fermionic test states need a Fermi-Hubbard model".into()));
    };
    let (lx, ly) = (lattice.lx(), lattice.ly());
    let site = |x: usize, y: usize| lattice.site(x - 1, y - 1);
    let terms: Vec<Vec<usize>> = match which {
        FermionTestState::Psi11 => vec![vec![mode(site(1, 1), true)], vec![mode(site(lx, ly), true)]],
        FermionTestState::Psi20 => vec![
            vec![mode(site(1, 1), false), mode(site(lx, ly), true)],
            vec![mode(site(lx, 1), false), mode(site(1, ly), true)],
        ],
        FermionTestState::Psi22 => {
            if lx < 2 {
                return Err(Error::InvalidParameter("the two-fermion bond state needs lx >= 2".into()));
            }
            vec![
                vec![mode(site(1, 1), true), mode(site(2, 1), true)],
                vec![mode(site(lx - 1, ly), true), mode(site(lx, ly), true)],
            ]
        }
    };
    let amps: Vec<(Vec<u8>, f64)> = terms
        .iter()
        .map(|t| {
            create_on_vacuum(2 * lattice.sites(), t).ok_or_else(|| Error::InvalidState("mode created twice".into()))
        })
        .collect::<Result<_>>()?;
    superposition(sectors, &amps)
}

/// Ground state of the clean Bose-Hubbard chain with `U = J`.
pub fn bose_ground_state(model: &QuenchModel, sector: &Sector) -> Result<SectorState> {
    let QuenchModel::BoseHubbard { lattice, params, particles } = model else {
        return Err(Error::InvalidParameter("the ground state needs a Bose-Hubbard model".into()));
    };
    let clean = BoseHubbardParams { hopping: params.hopping, interaction: params.hopping, disorder: 0.0 };
    let clean = QuenchModel::bose_hubbard(*lattice, clean, *particles)?;
    let h = build_static(&clean, sector)?;
    let (vals, vecs) = hermitian_eigen(&h.matrix).ok_or_else(|| Error::Numerical {
        label: sector.label().to_string(),
        reason: "ground state diagonalization did not converge".into(),
    })?;
    let k = (0..vals.len()).min_by(|&a, &b| vals[a].total_cmp(&vals[b])).expect("nonempty sector");
    SectorState::pure(sector.label(), &vecs.column(k).into_owned())
}

pub fn label_of(state: &SectorState) -> Option<SectorLabel> {
    match state.blocks() {
        [b] => Some(b.label),
        _ => None,
    }
}
