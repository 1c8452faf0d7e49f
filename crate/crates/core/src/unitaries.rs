//! Quench-sequence unitaries and Haar-random reference unitaries.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{Block, Sector, SectorLabel};
use crate::linalg::{c, hermitian_eigen, unitarity_defect, CMatrix, C64};
use crate::models::{
    build_static, disorder_diagonal, sample_disorder, DisorderPattern, HermitianOperator, QuenchModel,
};

/// Cached eigendecomposition of a Hermitian operator, reusable for any
/// evolution time.
#[derive(Debug, Clone)]
pub struct Propagator {
    label: SectorLabel,
    values: Vec<f64>,
    vectors: CMatrix,
}

impl Propagator {
    pub fn new(h: &HermitianOperator) -> Result<Self> {
        let (values, vectors) = hermitian_eigen(&h.matrix).ok_or_else(|| Error::Numerical {
            label: h.label.to_string(),
            reason: "Hermitian eigendecomposition did not converge".into(),
        })?;
        Ok(Self { label: h.label, values, vectors })
    }

    pub fn label(&self) -> SectorLabel {
        self.label
    }

    /// `exp(-i H t)`.
    pub fn at(&self, t: f64) -> CMatrix {
        let phases: Vec<C64> = self.values.iter().map(|&e| C64::from_polar(1.0, -e * t)).collect();
        let mut scaled = self.vectors.clone();
        for (k, mut col) in scaled.column_iter_mut().enumerate() {
            col *= phases[k];
        }
        scaled * self.vectors.adjoint()
    }
}

/// `exp(-i H t)` by spectral decomposition.
pub fn evolve(h: &HermitianOperator, t: f64) -> Result<CMatrix> {
    Ok(Propagator::new(h)?.at(t))
}

/// How the disorder is switched between quenches.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum QuenchMode {
    /// A fresh disorder pattern on top of the static Hamiltonian in every quench.
    FreshPattern,
    /// Odd quenches (1-based) evolve with the static Hamiltonian only, even
    /// quenches with a fresh disorder pattern only.
    Digital,
    /// One disorder pattern switched on and off; the first quench has it on.
    /// Durations are uniform in `[0, max_time]`.
    SinglePatternRandomTimes { max_time: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuenchSchedule {
    quenches: usize,
    time: f64,
    mode: QuenchMode,
}

impl QuenchSchedule {
    pub fn new(quenches: usize, time: f64, mode: QuenchMode) -> Result<Self> {
        if quenches == 0 {
            return Err(Error::InvalidParameter("a schedule needs at least one quench".into()));
        }
        if !(time > 0.0 && time.is_finite()) {
            return Err(Error::InvalidParameter(format!("quench time must be positive, got {time}")));
        }
        if let QuenchMode::SinglePatternRandomTimes { max_time } = mode {
            if !(max_time > 0.0 && max_time.is_finite()) {
                return Err(Error::InvalidParameter(format!("maximal quench time must be positive, got {max_time}")));
            }
        }
        Ok(Self { quenches, time, mode })
    }

    pub fn quenches(&self) -> usize {
        self.quenches
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn mode(&self) -> QuenchMode {
        self.mode
    }
}

/// Hamiltonian applied during one quench.
#[derive(Debug, Clone, PartialEq)]
pub enum QuenchStep {
    Static,
    DisorderOnly(DisorderPattern),
    Full(DisorderPattern),
}

/// Concrete random choices of one quench sequence, shared by all sectors.
#[derive(Debug, Clone, PartialEq)]
pub struct QuenchRealization {
    pub steps: Vec<(QuenchStep, f64)>,
}

impl QuenchRealization {
    pub fn sample<R: Rng + ?Sized>(model: &QuenchModel, schedule: &QuenchSchedule, rng: &mut R) -> Self {
        let t = schedule.time();
        let steps = match schedule.mode() {
            QuenchMode::FreshPattern => {
                (0..schedule.quenches()).map(|j| (QuenchStep::Full(sample_disorder(model, j, rng)), t)).collect()
            }
            QuenchMode::Digital => (0..schedule.quenches())
                .map(|j| {
                    if j % 2 == 0 {
                        (QuenchStep::Static, t)
                    } else {
                        (QuenchStep::DisorderOnly(sample_disorder(model, j, rng)), t)
                    }
                })
                .collect(),
            QuenchMode::SinglePatternRandomTimes { max_time } => {
                let pattern = sample_disorder(model, 0, rng);
                (0..schedule.quenches())
                    .map(|j| {
                        let dt = rng.random_range(0.0..=max_time);
                        if j % 2 == 0 {
                            (QuenchStep::Full(pattern.clone()), dt)
                        } else {
                            (QuenchStep::Static, dt)
                        }
                    })
                    .collect()
            }
        };
        Self { steps }
    }

    /// Apply `f` to every disorder pattern.
    pub fn try_map_patterns(&self, mut f: impl FnMut(&DisorderPattern) -> Result<DisorderPattern>) -> Result<Self> {
        let steps = self
            .steps
            .iter()
            .map(|(s, t)| {
                let s = match s {
                    QuenchStep::Static => QuenchStep::Static,
                    QuenchStep::DisorderOnly(p) => QuenchStep::DisorderOnly(f(p)?),
                    QuenchStep::Full(p) => QuenchStep::Full(f(p)?),
                };
                Ok((s, *t))
            })
            .collect::<Result<_>>()?;
        Ok(Self { steps })
    }
}

/// Per-sector unitaries `U_A = ⊕_α U^α`, sorted by label.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockUnitary {
    blocks: Vec<Block>,
}

pub const UNITARITY_TOL: f64 = 1e-10;

impl BlockUnitary {
    /// Validates that every block is unitary to `tol`.
    pub fn new(mut blocks: Vec<Block>, tol: f64) -> Result<Self> {
        blocks.sort_by_key(|b| b.label);
        for b in &blocks {
            if !b.matrix.is_square() {
                return Err(Error::InvalidParameter(format!("block {} is not square", b.label)));
            }
            let defect = unitarity_defect(&b.matrix);
            if defect.is_nan() || defect > tol {
                return Err(Error::Numerical {
                    label: b.label.to_string(),
                    reason: format!("unitarity defect {defect:e}"),
                });
            }
        }
        Ok(Self { blocks })
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn block(&self, label: SectorLabel) -> Option<&Block> {
        self.blocks.iter().find(|b| b.label == label)
    }

    pub fn identity(sectors: &[Sector]) -> Self {
        let blocks = sectors.iter().map(|s| Block::new(s.label(), CMatrix::identity(s.dim(), s.dim()))).collect();
        Self { blocks }
    }

    /// Independent Haar-random block for every sector.
    pub fn cue<R: Rng + ?Sized>(sectors: &[(SectorLabel, usize)], rng: &mut R) -> Self {
        let mut blocks: Vec<Block> = sectors.iter().map(|&(l, d)| Block::new(l, sample_cue(d, rng))).collect();
        blocks.sort_by_key(|b| b.label);
        Self { blocks }
    }
}

/// Model sectors with their static Hamiltonians diagonalized once, so that
/// many quench sequences can be realized cheaply.
#[derive(Debug, Clone)]
pub struct QuenchEngine {
    model: QuenchModel,
    sectors: Vec<Sector>,
    statics: Vec<HermitianOperator>,
    static_propagators: Vec<Propagator>,
}

impl QuenchEngine {
    pub fn new(model: QuenchModel, sectors: Vec<Sector>) -> Result<Self> {
        let statics = sectors.iter().map(|s| build_static(&model, s)).collect::<Result<Vec<_>>>()?;
        let static_propagators = statics.iter().map(Propagator::new).collect::<Result<Vec<_>>>()?;
        Ok(Self { model, sectors, statics, static_propagators })
    }

    pub fn model(&self) -> &QuenchModel {
        &self.model
    }

    pub fn sectors(&self) -> &[Sector] {
        &self.sectors
    }

    /// `U = e^{-i H^η t_η} ... e^{-i H^1 t_1}` in every sector.
    pub fn realize(&self, realization: &QuenchRealization) -> Result<BlockUnitary> {
        let mut blocks = Vec::with_capacity(self.sectors.len());
        for (k, sector) in self.sectors.iter().enumerate() {
            let dim = sector.dim();
            let mut u = CMatrix::identity(dim, dim);
            for (step, t) in &realization.steps {
                let step_u = match step {
                    QuenchStep::Static => self.static_propagators[k].at(*t),
                    QuenchStep::DisorderOnly(p) => {
                        let d = disorder_diagonal(&self.model, sector, p)?;
                        let phases = d.iter().map(|&e| C64::from_polar(1.0, -e * t));
                        // Left-multiplying by a diagonal scales rows.
                        for (i, ph) in phases.enumerate() {
                            let mut row = u.row_mut(i);
                            row *= ph;
                        }
                        continue;
                    }
                    QuenchStep::Full(p) => {
                        let h = self.statics[k].plus_diagonal(&disorder_diagonal(&self.model, sector, p)?);
                        Propagator::new(&h)?.at(*t)
                    }
                };
                u = step_u * u;
            }
            blocks.push(Block::new(sector.label(), u));
        }
        let tol = UNITARITY_TOL * realization.steps.len().max(1) as f64;
        BlockUnitary::new(blocks, tol)
    }

    pub fn sample<R: Rng + ?Sized>(&self, schedule: &QuenchSchedule, rng: &mut R) -> Result<BlockUnitary> {
        self.realize(&QuenchRealization::sample(&self.model, schedule, rng))
    }
}

/// Draw one quench sequence and compose it in every given sector.
pub fn compose_quenches<R: Rng + ?Sized>(
    model: &QuenchModel,
    sectors: &[Sector],
    schedule: &QuenchSchedule,
    rng: &mut R,
) -> Result<BlockUnitary> {
    QuenchEngine::new(model.clone(), sectors.to_vec())?.sample(schedule, rng)
}

/// Haar-random unitary: QR of a complex Ginibre matrix with the phases of
/// `diag(R)` moved into `Q`.
pub fn sample_cue<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> CMatrix {
    assert!(dim >= 1, "CUE dimension must be positive");
    let g = CMatrix::from_fn(dim, dim, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        c(re, im)
    });
    let qr = g.qr();
    let r = qr.r();
    let mut q = qr.q();
    for (k, mut col) in q.column_iter_mut().enumerate() {
        let d = r[(k, k)];
        let n = d.norm();
        if n > 0.0 {
            col *= d / n;
        }
    }
    q
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{enumerate_sectors, Lattice};
    use crate::linalg::max_abs;
    use crate::models::{Axis, BoseHubbardParams, FermiHubbardParams, IsingParams};
    use crate::rng::seeded;
    use std::f64::consts::PI;

    fn op(m: CMatrix) -> HermitianOperator {
        HermitianOperator { label: SectorLabel::Full, matrix: m }
    }

    fn pauli_z() -> CMatrix {
        CMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-1.0, 0.0)])
    }

    fn pauli_x() -> CMatrix {
        CMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)])
    }

    #[test]
    fn evolve_examples() {
        let u0 = evolve(&op(pauli_x()), 0.0).unwrap();
        assert!(max_abs(&(u0 - CMatrix::identity(2, 2))) < 1e-14);
        let uz = evolve(&op(pauli_z()), PI).unwrap();
        assert!(max_abs(&(uz + CMatrix::identity(2, 2))) < 1e-14);
        let ux = evolve(&op(pauli_x()), PI / 2.0).unwrap();
        assert!((ux[(0, 1)].norm() - 1.0).abs() < 1e-14);
        assert!(ux[(0, 0)].norm() < 1e-14);
    }

    #[test]
    fn schedule_validation() {
        assert!(QuenchSchedule::new(0, 1.0, QuenchMode::FreshPattern).is_err());
        assert!(QuenchSchedule::new(1, 0.0, QuenchMode::FreshPattern).is_err());
        assert!(QuenchSchedule::new(1, 1.0, QuenchMode::SinglePatternRandomTimes { max_time: 0.0 }).is_err());
    }

    #[test]
    fn degenerate_schedule_is_static_evolution() {
        let p = IsingParams { disorder: 0.0, ..IsingParams::default() };
        let model = QuenchModel::ising(Lattice::chain(3).unwrap(), p).unwrap();
        let sectors = enumerate_sectors(&model).unwrap();
        let sched = QuenchSchedule::new(1, 0.7, QuenchMode::FreshPattern).unwrap();
        let u = compose_quenches(&model, &sectors, &sched, &mut seeded(1)).unwrap();
        let h = build_static(&model, &sectors[0]).unwrap();
        let expect = evolve(&h, 0.7).unwrap();
        assert!(max_abs(&(&u.blocks()[0].matrix - expect)) < 1e-12);
    }

    #[test]
    fn same_seed_same_unitary() {
        let model = QuenchModel::fermi_hubbard(Lattice::chain(2).unwrap(), FermiHubbardParams::default()).unwrap();
        let sectors = enumerate_sectors(&model).unwrap();
        for mode in
            [QuenchMode::FreshPattern, QuenchMode::Digital, QuenchMode::SinglePatternRandomTimes { max_time: 2.0 }]
        {
            let sched = QuenchSchedule::new(4, 1.0, mode).unwrap();
            let a = compose_quenches(&model, &sectors, &sched, &mut seeded(11)).unwrap();
            let b = compose_quenches(&model, &sectors, &sched, &mut seeded(11)).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn diagonal_quenches_multiply_phases() {
        let p = IsingParams { field: 0.0, axis: Axis::Z, coupling: 1.0, ..IsingParams::default() };
        let model = QuenchModel::ising(Lattice::chain(2).unwrap(), p).unwrap();
        let sector = Sector::build(&model, SectorLabel::Full).unwrap();
        let sched = QuenchSchedule::new(2, 0.9, QuenchMode::FreshPattern).unwrap();
        let real = QuenchRealization::sample(&model, &sched, &mut seeded(4));
        let engine = QuenchEngine::new(model.clone(), vec![sector.clone()]).unwrap();
        let bu = engine.realize(&real).unwrap();
        let u = &bu.blocks()[0].matrix;
        let zz = [1.0, -1.0, -1.0, 1.0];
        for i in 0..4 {
            let mut energy = 0.0;
            for (step, _) in &real.steps {
                let QuenchStep::Full(pat) = step else { unreachable!() };
                energy += zz[i] + disorder_diagonal(&model, &sector, pat).unwrap()[i];
            }
            let expect = C64::from_polar(1.0, -0.9 * energy);
            assert!((u[(i, i)] - expect).norm() < 1e-12);
        }
    }

    #[test]
    fn digital_and_random_time_steps() {
        let model = QuenchModel::ising(Lattice::chain(2).unwrap(), IsingParams::default()).unwrap();
        let sched = QuenchSchedule::new(4, 1.0, QuenchMode::Digital).unwrap();
        let real = QuenchRealization::sample(&model, &sched, &mut seeded(2));
        assert!(matches!(real.steps[0].0, QuenchStep::Static));
        assert!(matches!(real.steps[1].0, QuenchStep::DisorderOnly(_)));

        let sched = QuenchSchedule::new(3, 1.0, QuenchMode::SinglePatternRandomTimes { max_time: 2.0 }).unwrap();
        let real = QuenchRealization::sample(&model, &sched, &mut seeded(2));
        let (QuenchStep::Full(a), _) = &real.steps[0] else { panic!("first quench must be on") };
        let (QuenchStep::Full(b), _) = &real.steps[2] else { panic!() };
        assert_eq!(a, b);
        assert!(matches!(real.steps[1].0, QuenchStep::Static));
        assert!(real.steps.iter().all(|(_, t)| (0.0..=2.0).contains(t)));
    }

    #[test]
    fn composed_blocks_are_unitary() {
        let model = QuenchModel::bose_hubbard(Lattice::chain(4).unwrap(), BoseHubbardParams::default(), 2).unwrap();
        let sectors = enumerate_sectors(&model).unwrap();
        let sched = QuenchSchedule::new(8, 1.0, QuenchMode::FreshPattern).unwrap();
        let u = compose_quenches(&model, &sectors, &sched, &mut seeded(3)).unwrap();
        assert!(unitarity_defect(&u.blocks()[0].matrix) < 1e-12);
    }

    #[test]
    fn cue_is_unitary() {
        let mut rng = seeded(8);
        for d in [1, 2, 5, 16] {
            assert!(unitarity_defect(&sample_cue(d, &mut rng)) < 1e-12);
        }
    }

    #[test]
    fn cue_dim_one_is_uniform_phase() {
        let mut rng = seeded(12);
        let n = 10_000;
        let mean: C64 = (0..n).map(|_| sample_cue(1, &mut rng)[(0, 0)]).sum::<C64>() / n as f64;
        assert!(mean.norm() < 0.05);
    }

    #[test]
    fn cue_first_moments() {
        let mut rng = seeded(13);
        let n = 10_000;
        let (mut s_abs, mut s_abs2, mut s_cross) = (0.0, 0.0, C64::new(0.0, 0.0));
        let mut cross_sq = 0.0;
        for _ in 0..n {
            let u = sample_cue(8, &mut rng);
            let a = u[(0, 0)].norm_sqr();
            s_abs += a;
            s_abs2 += a * a;
            let x = u[(0, 0)] * u[(0, 1)].conj();
            s_cross += x;
            cross_sq += x.norm_sqr();
        }
        let mean = s_abs / n as f64;
        let sigma = ((s_abs2 / n as f64 - mean * mean) / n as f64).sqrt();
        assert!((mean - 0.125).abs() < 3.0 * sigma, "{mean}");
        let cross = s_cross / n as f64;
        let sigma_cross = (cross_sq / n as f64 / n as f64).sqrt();
        assert!(cross.norm() < 3.0 * sigma_cross, "{cross}");
    }
}
