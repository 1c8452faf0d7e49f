//! End-to-end randomized-measurement runs: unitaries, imperfections, shots
//! and moment accumulation, parallel over unitaries with per-unitary seeds.

use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::hilbert::{Sector, SectorLabel, SectorState};
use crate::imperfect::{decohered_final_state, jitter_disorder, readout_distribution, ChannelSpec, FidelitySpec};
use crate::measure::{multinomial, outcome_probs, sample_shots, Observable, OutcomeDistribution, ShotRecord, Shots};
use crate::renyi::{estimate_renyi, EstimationReport, MomentTable};
use crate::rng::derive;
use crate::unitaries::{BlockUnitary, QuenchEngine, QuenchRealization, QuenchSchedule};

/// Largest sector dimension allowed in runs that recompose the unitary per shot.
pub const JITTER_DIM_CAP: usize = 1 << 10;

const UNITARY_STREAM: u64 = 0;
const SHOT_STREAM: u64 = 1;
const JITTER_STREAM: u64 = 3;

#[derive(Debug, Clone)]
pub enum UnitarySource {
    /// Independent Haar-random blocks of the given dimensions.
    Cue(Vec<(SectorLabel, usize)>),
    Quench {
        engine: QuenchEngine,
        schedule: QuenchSchedule,
    },
}

impl UnitarySource {
    pub fn cue_for(sectors: &[Sector]) -> Self {
        UnitarySource::Cue(sectors.iter().map(|s| (s.label(), s.dim())).collect())
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<(BlockUnitary, Option<QuenchRealization>)> {
        match self {
            UnitarySource::Cue(dims) => Ok((BlockUnitary::cue(dims, rng), None)),
            UnitarySource::Quench { engine, schedule } => {
                let real = QuenchRealization::sample(engine.model(), schedule, rng);
                Ok((engine.realize(&real)?, Some(real)))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Imperfections {
    pub channel: Option<ChannelSpec>,
    /// Relative width `p` of the per-shot disorder noise.
    pub jitter: Option<f64>,
    pub readout: Option<FidelitySpec>,
}

impl Imperfections {
    pub fn is_ideal(&self) -> bool {
        self.channel.is_none() && self.jitter.is_none_or(|p| p == 0.0) && self.readout.is_none()
    }
}

#[derive(Debug, Clone)]
pub struct Protocol {
    pub source: UnitarySource,
    pub sectors: Vec<Sector>,
    pub state: SectorState,
    pub observable: Observable,
    pub order: u32,
    pub unitaries: usize,
    pub shots: Shots,
    pub imperfections: Imperfections,
}

impl Protocol {
    pub fn validate(&self) -> Result<()> {
        if self.unitaries == 0 {
            return Err(Error::InvalidParameter("need at least one unitary".into()));
        }
        if self.order == 0 {
            return Err(Error::InvalidParameter("order must be at least 1".into()));
        }
        if let Shots::Finite(m) = self.shots {
            if m < self.order as u64 {
                return Err(Error::EstimatorUndefined(format!("N_M = {m} < n = {}", self.order)));
            }
        }
        if let Some(p) = self.imperfections.jitter.filter(|&p| p > 0.0) {
            if !matches!(self.source, UnitarySource::Quench { .. }) {
                return Err(Error::InvalidParameter("disorder jitter needs quench unitaries".into()));
            }
            if self.shots == Shots::Infinite {
                return Err(Error::InvalidParameter("disorder jitter needs a finite number of shots".into()));
            }
            if self.sectors.iter().any(|s| s.dim() > JITTER_DIM_CAP) {
                return Err(Error::InvalidParameter(format!(
                    "jittered runs are capped at sector dimension {JITTER_DIM_CAP}"
                )));
            }
            if !p.is_finite() {
                return Err(Error::InvalidParameter("jitter must be finite".into()));
            }
        }
        Ok(())
    }

    /// The `l`-th unitary of the run with master seed `seed`.
    pub fn unitary(&self, seed: u64, l: usize) -> Result<BlockUnitary> {
        Ok(self.source.sample(&mut derive(seed, &[UNITARY_STREAM, l as u64]))?.0)
    }

    fn distribution(&self, u: &BlockUnitary) -> Result<OutcomeDistribution> {
        let dist = match self.imperfections.channel {
            Some(spec) => {
                let rho = decohered_final_state(&self.state, u, &self.sectors, spec)?;
                outcome_probs(&BlockUnitary::identity(&self.sectors), &rho, &self.observable)?
            }
            None => outcome_probs(u, &self.state, &self.observable)?,
        };
        match self.imperfections.readout {
            Some(spec) => readout_distribution(&dist, &self.sectors, spec),
            None => Ok(dist),
        }
    }

    /// Measurement record of the `l`-th unitary.
    pub fn record(&self, seed: u64, l: usize) -> Result<ShotRecord> {
        let (u, real) = self.source.sample(&mut derive(seed, &[UNITARY_STREAM, l as u64]))?;
        let mut shot_rng = derive(seed, &[SHOT_STREAM, l as u64]);
        match (self.imperfections.jitter.filter(|&p| p > 0.0), real, &self.source) {
            (Some(p), Some(real), UnitarySource::Quench { engine, .. }) => {
                let Shots::Finite(n_m) = self.shots else { unreachable!("validated") };
                let mut jitter_rng = derive(seed, &[JITTER_STREAM, l as u64]);
                let mut flat_counts = Vec::new();
                let mut last = None;
                for _ in 0..n_m {
                    let shaken =
                        real.try_map_patterns(|pat| jitter_disorder(pat, engine.model(), p, &mut jitter_rng))?;
                    let dist = self.distribution(&engine.realize(&shaken)?)?;
                    let flat: Vec<f64> = dist.sectors.iter().flat_map(|s| s.probs.iter().copied()).collect();
                    let hit = multinomial(1, &flat, &mut shot_rng);
                    if flat_counts.is_empty() {
                        flat_counts = vec![0u64; flat.len()];
                    }
                    for (c, h) in flat_counts.iter_mut().zip(hit) {
                        *c += h;
                    }
                    last = Some(dist);
                }
                let dist = last.expect("at least one shot");
                let mut it = flat_counts.into_iter();
                let counts = dist.sectors.iter().map(|s| it.by_ref().take(s.probs.len()).collect()).collect();
                ShotRecord::from_counts(&dist, counts)
            }
            _ => sample_shots(&self.distribution(&u)?, self.shots, &mut shot_rng),
        }
    }

    /// Accumulate the moment table over all unitaries. The result does not
    /// depend on the number of worker threads.
    pub fn run(&self, seed: u64) -> Result<MomentTable> {
        self.validate()?;
        let records: Vec<ShotRecord> =
            (0..self.unitaries).into_par_iter().map(|l| self.record(seed, l)).collect::<Result<_>>()?;
        let mut table = MomentTable::new(self.order)?;
        for r in &records {
            table.add(r)?;
        }
        Ok(table)
    }

    pub fn estimate(&self, seed: u64) -> Result<EstimationReport> {
        estimate_renyi(&self.run(seed)?, self.order)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{enumerate_sectors, trace_power, Lattice};
    use crate::imperfect::ChannelKind;
    use crate::models::{IsingParams, QuenchModel};
    use crate::states::{antiferromagnetic, ghz};
    use crate::unitaries::QuenchMode;

    fn ising(l: usize) -> (QuenchModel, Vec<Sector>) {
        let m = QuenchModel::ising(Lattice::chain(l).unwrap(), IsingParams::default()).unwrap();
        let s = enumerate_sectors(&m).unwrap();
        (m, s)
    }

    fn cue_protocol(l: usize, shots: Shots, unitaries: usize) -> Protocol {
        let (_, sectors) = ising(l);
        Protocol {
            source: UnitarySource::cue_for(&sectors),
            state: antiferromagnetic(&sectors, l).unwrap(),
            observable: Observable::fine(&sectors),
            sectors,
            order: 2,
            unitaries,
            shots,
            imperfections: Imperfections::default(),
        }
    }

    #[test]
    fn runs_are_thread_count_independent() {
        let p = cue_protocol(3, Shots::Finite(20), 40);
        let a = p.run(5).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let b = pool.install(|| p.run(5).unwrap());
        assert_eq!(a, b);
    }

    #[test]
    fn exact_cue_purity_of_a_pure_state() {
        let p = cue_protocol(3, Shots::Infinite, 2000);
        let r = p.estimate(1).unwrap();
        assert!((r.p(2) - 1.0).abs() < 0.1, "{}", r.p(2));
        assert!((r.p(1) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn single_unitary_report() {
        let p = cue_protocol(2, Shots::Finite(10), 1);
        let r = p.estimate(3).unwrap();
        assert_eq!(r.unitaries, 1);
        assert!(r.predicted_error > 0.3);
    }

    #[test]
    fn zero_jitter_matches_ideal_run() {
        let (m, s) = ising(3);
        let engine = QuenchEngine::new(m, s.clone()).unwrap();
        let schedule = QuenchSchedule::new(3, 1.0, QuenchMode::FreshPattern).unwrap();
        let mut p = Protocol {
            source: UnitarySource::Quench { engine, schedule },
            state: antiferromagnetic(&s, 3).unwrap(),
            observable: Observable::fine(&s),
            sectors: s,
            order: 2,
            unitaries: 10,
            shots: Shots::Finite(8),
            imperfections: Imperfections::default(),
        };
        let ideal = p.run(2).unwrap();
        p.imperfections.jitter = Some(0.0);
        assert_eq!(ideal, p.run(2).unwrap());
        p.imperfections.jitter = Some(0.2);
        let jittered = p.run(2).unwrap();
        assert_eq!(jittered.unitaries(), 10);
        assert_ne!(ideal, jittered);
    }

    #[test]
    fn decoherence_lowers_ghz_purity() {
        let (_, s) = ising(2);
        let state = ghz(&s, 2).unwrap();
        assert!((trace_power(&state, 2).unwrap() - 1.0).abs() < 1e-12);
        let mut p = Protocol {
            source: UnitarySource::cue_for(&s),
            state,
            observable: Observable::fine(&s),
            sectors: s,
            order: 2,
            unitaries: 300,
            shots: Shots::Infinite,
            imperfections: Imperfections::default(),
        };
        let ideal = p.estimate(4).unwrap().p(2);
        p.imperfections.channel = Some(ChannelSpec::new(ChannelKind::Dephasing, 0.05).unwrap());
        let noisy = p.estimate(4).unwrap().p(2);
        assert!(noisy < ideal);
    }

    #[test]
    fn invalid_runs() {
        let mut p = cue_protocol(2, Shots::Finite(1), 5);
        assert!(matches!(p.run(1), Err(Error::EstimatorUndefined(_))));
        p.shots = Shots::Finite(4);
        p.imperfections.jitter = Some(0.1);
        assert!(p.run(1).is_err());
    }
}
