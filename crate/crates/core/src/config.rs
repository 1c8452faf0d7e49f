//! Experiment configuration files.
//!
//! Configs are TOML. Unknown keys are rejected, and keys that do not apply to
//! the selected model are rejected during validation.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::hilbert::{enumerate_sectors, Lattice, Sector, SectorLabel, SectorState};
use crate::imperfect::ChannelKind;
use crate::measure::Shots;
use crate::models::{Axis, BoseHubbardParams, FermiHubbardParams, IsingParams, QuenchModel};
use crate::states;
use crate::unitaries::{QuenchMode, QuenchSchedule};

/// Largest sector dimension accepted for dense simulation.
pub const MAX_DENSE_DIM: usize = 1 << 12;

const STATE_STREAM: u64 = 4;

/// Generator for randomly drawn test states.
pub fn state_rng(seed: u64) -> crate::rng::SeededRng {
    crate::rng::derive(seed, &[STATE_STREAM])
}

/// A scalar or a list in the config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

impl<T: Clone> OneOrMany<T> {
    pub fn to_vec(&self) -> Vec<T> {
        match self {
            OneOrMany::One(x) => vec![x.clone()],
            OneOrMany::Many(v) => v.clone(),
        }
    }
}

/// Shot number: a positive integer or `"inf"`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ShotsValue {
    Count(u64),
    Word(String),
}

impl ShotsValue {
    pub fn to_shots(&self) -> Result<Shots> {
        match self {
            ShotsValue::Count(0) => Err(Error::Config("shots must be positive".into())),
            ShotsValue::Count(n) => Ok(Shots::Finite(*n)),
            ShotsValue::Word(w) if w == "inf" => Ok(Shots::Infinite),
            ShotsValue::Word(w) => Err(Error::Config(format!("shots must be an integer or \"inf\", got {w:?}"))),
        }
    }
}

pub fn shots_label(s: Shots) -> String {
    match s {
        Shots::Finite(n) => n.to_string(),
        Shots::Infinite => "inf".into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    Ising,
    FermiHubbard,
    BoseHubbard,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub kind: Option<ModelKind>,
    pub sites: Option<usize>,
    pub lx: Option<usize>,
    pub ly: Option<usize>,
    pub particles: Option<u32>,
    pub coupling: Option<f64>,
    pub alpha: Option<f64>,
    pub axis: Option<Axis>,
    pub field: Option<f64>,
    pub hopping: Option<f64>,
    pub interaction: Option<f64>,
    pub disorder: Option<f64>,
    pub spin_ratio: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModeName {
    FreshPattern,
    Digital,
    RandomTimes,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleConfig {
    pub quenches: OneOrMany<usize>,
    #[serde(default = "one")]
    pub time: f64,
    #[serde(default = "fresh")]
    pub mode: ModeName,
    pub max_time: Option<f64>,
}

fn one() -> f64 {
    1.0
}

fn fresh() -> ModeName {
    ModeName::FreshPattern
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StateKind {
    Antiferromagnetic,
    AllUp,
    Ghz,
    Fock,
    /// First basis state of the chosen sector.
    Pure,
    MaximallyMixed,
    Mixture,
    Random,
    Psi11,
    Psi20,
    Psi22,
    Ground,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateConfig {
    pub kind: StateKind,
    pub occupations: Option<Vec<u8>>,
    pub rank: Option<usize>,
    /// Sector selection for sector-level states.
    pub n: Option<u32>,
    pub sz: Option<i32>,
    pub parity: Option<u8>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasurementConfig {
    #[serde(default = "default_order")]
    pub order: OneOrMany<u32>,
    pub unitaries: OneOrMany<usize>,
    #[serde(default = "default_shots")]
    pub shots: OneOrMany<ShotsValue>,
    #[serde(default = "default_group")]
    pub group_size: OneOrMany<usize>,
    #[serde(default = "default_reps")]
    pub repetitions: usize,
}

fn default_order() -> OneOrMany<u32> {
    OneOrMany::One(2)
}

fn default_shots() -> OneOrMany<ShotsValue> {
    OneOrMany::One(ShotsValue::Word("inf".into()))
}

fn default_group() -> OneOrMany<usize> {
    OneOrMany::One(1)
}

fn default_reps() -> usize {
    1
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepParameter {
    Time,
    Disorder,
    Alpha,
    Interaction,
    Field,
    Coupling,
    Hopping,
    Sites,
    Lx,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub parameter: SweepParameter,
    pub values: Vec<f64>,
    /// Keep `η T` fixed while sweeping `time`.
    #[serde(default)]
    pub fixed_total_time: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CueConfig {
    pub dim: usize,
    /// Ranks of the uniformly mixed test states; rank 1 is pure.
    #[serde(default = "rank_one")]
    pub ranks: OneOrMany<usize>,
}

fn rank_one() -> OneOrMany<usize> {
    OneOrMany::One(1)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChannelName {
    None,
    Dephasing,
    Depolarizing,
}

impl ChannelName {
    pub fn kind(self) -> Option<ChannelKind> {
        match self {
            ChannelName::None => None,
            ChannelName::Dephasing => Some(ChannelKind::Dephasing),
            ChannelName::Depolarizing => Some(ChannelKind::Depolarizing),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ImperfectConfig {
    pub sites: OneOrMany<usize>,
    #[serde(default = "no_channel")]
    pub channel: ChannelName,
    #[serde(default = "zero")]
    pub channel_p: OneOrMany<f64>,
    #[serde(default = "zero")]
    pub readout_p: OneOrMany<f64>,
    #[serde(default = "zero")]
    pub jitter: OneOrMany<f64>,
    /// Quenches per unitary in jittered runs, as a multiple of the site count.
    #[serde(default = "two")]
    pub quenches_per_site: usize,
}

fn no_channel() -> ChannelName {
    ChannelName::None
}

fn zero() -> OneOrMany<f64> {
    OneOrMany::One(0.0)
}

fn two() -> usize {
    2
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChaosConfig {
    pub disorder: OneOrMany<f64>,
    /// Quench numbers for which r histograms are emitted.
    #[serde(default)]
    pub histogram_quenches: Vec<usize>,
    /// Disorder strength of the histogram rows.
    pub histogram_disorder: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub output: Option<String>,
    pub model: Option<ModelConfig>,
    pub schedule: Option<ScheduleConfig>,
    pub state: Option<StateConfig>,
    pub measurement: MeasurementConfig,
    pub sweep: Option<SweepConfig>,
    pub cue: Option<CueConfig>,
    pub imperfect: Option<ImperfectConfig>,
    pub chaos: Option<ChaosConfig>,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &std::path::Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    /// Hex SHA-256 of the canonical serialization.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        hex::encode(Sha256::digest(json.as_bytes()))
    }

    pub fn orders(&self) -> Vec<u32> {
        self.measurement.order.to_vec()
    }

    pub fn unitaries(&self) -> Vec<usize> {
        self.measurement.unitaries.to_vec()
    }

    pub fn shots(&self) -> Result<Vec<Shots>> {
        self.measurement.shots.to_vec().iter().map(ShotsValue::to_shots).collect()
    }

    pub fn group_sizes(&self) -> Vec<usize> {
        self.measurement.group_size.to_vec()
    }

    /// Check every section that is present, without running anything.
    pub fn validate(&self) -> Result<()> {
        let m = &self.measurement;
        if m.order.to_vec().contains(&0) || m.order.to_vec().is_empty() {
            return Err(Error::Config("measurement.order entries must be >= 1".into()));
        }
        if m.unitaries.to_vec().contains(&0) || m.unitaries.to_vec().is_empty() {
            return Err(Error::Config("measurement.unitaries entries must be >= 1".into()));
        }
        if m.group_size.to_vec().contains(&0) {
            return Err(Error::Config("measurement.group_size entries must be >= 1".into()));
        }
        if m.repetitions == 0 {
            return Err(Error::Config("measurement.repetitions must be >= 1".into()));
        }
        let shots = self.shots()?;
        if shots.is_empty() {
            return Err(Error::Config("measurement.shots is empty".into()));
        }
        if let Some(model) = &self.model {
            let built = model.build(None)?;
            let sectors = enumerate_sectors(&built)?;
            if let Some(big) = sectors.iter().find(|s| s.dim() > MAX_DENSE_DIM) {
                return Err(Error::Config(format!(
                    "sector {} has dimension {} > {MAX_DENSE_DIM}",
                    big.label(),
                    big.dim()
                )));
            }
            if let Some(st) = &self.state {
                st.build(&built, &sectors, &mut state_rng(self.seed))?;
            }
        }
        if let Some(s) = &self.schedule {
            if s.quenches.to_vec().is_empty() {
                return Err(Error::Config("schedule.quenches is empty".into()));
            }
            for q in s.quenches.to_vec() {
                s.build(q, s.time)?;
            }
        }
        if let Some(sw) = &self.sweep {
            if sw.values.is_empty() {
                return Err(Error::Config("sweep.values is empty".into()));
            }
            let model = self.model.as_ref().ok_or_else(|| Error::Config("a sweep needs a [model]".into()))?;
            for &v in &sw.values {
                if sw.parameter != SweepParameter::Time {
                    model.build(Some((sw.parameter, v)))?;
                } else if v.is_nan() || v <= 0.0 {
                    return Err(Error::Config(format!("sweep time {v} must be positive")));
                }
            }
        }
        if let Some(c) = &self.cue {
            if c.dim == 0 || c.dim > MAX_DENSE_DIM {
                return Err(Error::Config(format!("cue.dim must be in 1..={MAX_DENSE_DIM}")));
            }
            let ranks = c.ranks.to_vec();
            if ranks.is_empty() || ranks.iter().any(|&r| r == 0 || r > c.dim) {
                return Err(Error::Config(format!("cue.ranks entries must be in 1..={}", c.dim)));
            }
        }
        if let Some(im) = &self.imperfect {
            let sites = im.sites.to_vec();
            if sites.is_empty() || sites.iter().any(|&l| l == 0 || (1usize << l.min(31)) > MAX_DENSE_DIM) {
                return Err(Error::Config("imperfect.sites must be in 1..=12".into()));
            }
            for p in im.channel_p.to_vec() {
                if let Some(kind) = im.channel.kind() {
                    crate::imperfect::ChannelSpec::new(kind, p).map_err(|e| Error::Config(e.to_string()))?;
                }
            }
            for p in im.readout_p.to_vec() {
                crate::imperfect::FidelitySpec::new(p).map_err(|e| Error::Config(e.to_string()))?;
            }
            if im.jitter.to_vec().iter().any(|&p| p.is_nan() || p < 0.0) {
                return Err(Error::Config("imperfect.jitter entries must be >= 0".into()));
            }
            if im.jitter.to_vec().iter().any(|&p| p > 0.0) && shots.contains(&Shots::Infinite) {
                return Err(Error::Config("jittered runs need a finite number of shots".into()));
            }
        }
        if let Some(ch) = &self.chaos {
            if ch.disorder.to_vec().iter().any(|&d| d.is_nan() || d < 0.0) {
                return Err(Error::Config("chaos.disorder entries must be >= 0".into()));
            }
        }
        Ok(())
    }

    pub fn require_model(&self) -> Result<&ModelConfig> {
        self.model.as_ref().ok_or_else(|| Error::Config("missing [model] section".into()))
    }

    pub fn require_schedule(&self) -> Result<&ScheduleConfig> {
        self.schedule.as_ref().ok_or_else(|| Error::Config("missing [schedule] section".into()))
    }

    pub fn require_state(&self) -> Result<&StateConfig> {
        self.state.as_ref().ok_or_else(|| Error::Config("missing [state] section".into()))
    }
}

impl ModelConfig {
    fn kind(&self) -> Result<ModelKind> {
        self.kind.ok_or_else(|| Error::Config("model.kind is required".into()))
    }

    fn reject(&self, keys: &[(&str, bool)]) -> Result<()> {
        for (k, set) in keys {
            if *set {
                return Err(Error::Config(format!("model.{k} does not apply to {:?}", self.kind)));
            }
        }
        Ok(())
    }

    /// Build the model, optionally overriding one parameter.
    pub fn build(&self, over: Option<(SweepParameter, f64)>) -> Result<QuenchModel> {
        let mut m = self.clone();
        if let Some((p, v)) = over {
            let as_count = || -> Result<usize> {
                if v >= 1.0 && v.fract() == 0.0 {
                    Ok(v as usize)
                } else {
                    Err(Error::Config(format!("{p:?} sweep value {v} is not a positive integer")))
                }
            };
            match p {
                SweepParameter::Time => {}
                SweepParameter::Disorder => m.disorder = Some(v),
                SweepParameter::Alpha => m.alpha = Some(v),
                SweepParameter::Interaction => m.interaction = Some(v),
                SweepParameter::Field => m.field = Some(v),
                SweepParameter::Coupling => m.coupling = Some(v),
                SweepParameter::Hopping => m.hopping = Some(v),
                SweepParameter::Sites => m.sites = Some(as_count()?),
                SweepParameter::Lx => m.lx = Some(as_count()?),
            }
        }
        let err = |e: Error| Error::Config(e.to_string());
        match m.kind()? {
            ModelKind::Ising => {
                m.reject(&[
                    ("lx", m.lx.is_some()),
                    ("ly", m.ly.is_some()),
                    ("particles", m.particles.is_some()),
                    ("hopping", m.hopping.is_some()),
                    ("interaction", m.interaction.is_some()),
                    ("spin_ratio", m.spin_ratio.is_some()),
                ])?;
                let d = IsingParams::default();
                let params = IsingParams {
                    coupling: m.coupling.unwrap_or(d.coupling),
                    alpha: m.alpha.unwrap_or(d.alpha),
                    axis: m.axis.unwrap_or(d.axis),
                    field: m.field.unwrap_or(d.field),
                    disorder: m.disorder.unwrap_or(d.disorder),
                };
                let sites = m.sites.ok_or_else(|| Error::Config("model.sites is required".into()))?;
                QuenchModel::ising(Lattice::chain(sites).map_err(err)?, params).map_err(err)
            }
            ModelKind::FermiHubbard => {
                m.reject(&[
                    ("sites", m.sites.is_some()),
                    ("particles", m.particles.is_some()),
                    ("coupling", m.coupling.is_some()),
                    ("alpha", m.alpha.is_some()),
                    ("axis", m.axis.is_some()),
                    ("field", m.field.is_some()),
                ])?;
                let d = FermiHubbardParams::default();
                let params = FermiHubbardParams {
                    hopping: m.hopping.unwrap_or(d.hopping),
                    interaction: m.interaction.unwrap_or(d.interaction),
                    disorder: m.disorder.unwrap_or(d.disorder),
                    spin_ratio: m.spin_ratio.unwrap_or(d.spin_ratio),
                };
                let lx = m.lx.ok_or_else(|| Error::Config("model.lx is required".into()))?;
                let lattice = Lattice::rectangle(lx, m.ly.unwrap_or(1)).map_err(err)?;
                QuenchModel::fermi_hubbard(lattice, params).map_err(err)
            }
            ModelKind::BoseHubbard => {
                m.reject(&[
                    ("lx", m.lx.is_some()),
                    ("ly", m.ly.is_some()),
                    ("coupling", m.coupling.is_some()),
                    ("alpha", m.alpha.is_some()),
                    ("axis", m.axis.is_some()),
                    ("field", m.field.is_some()),
                    ("spin_ratio", m.spin_ratio.is_some()),
                ])?;
                let d = BoseHubbardParams::default();
                let params = BoseHubbardParams {
                    hopping: m.hopping.unwrap_or(d.hopping),
                    interaction: m.interaction.unwrap_or(d.interaction),
                    disorder: m.disorder.unwrap_or(d.disorder),
                };
                let sites = m.sites.ok_or_else(|| Error::Config("model.sites is required".into()))?;
                let particles = m.particles.ok_or_else(|| Error::Config("model.particles is required".into()))?;
                QuenchModel::bose_hubbard(Lattice::chain(sites).map_err(err)?, params, particles).map_err(err)
            }
        }
    }
}

impl ScheduleConfig {
    pub fn build(&self, quenches: usize, time: f64) -> Result<QuenchSchedule> {
        let mode = match self.mode {
            ModeName::FreshPattern => QuenchMode::FreshPattern,
            ModeName::Digital => QuenchMode::Digital,
            ModeName::RandomTimes => QuenchMode::SinglePatternRandomTimes {
                max_time: self
                    .max_time
                    .ok_or_else(|| Error::Config("schedule.max_time is required for random-times".into()))?,
            },
        };
        if self.max_time.is_some() && self.mode != ModeName::RandomTimes {
            return Err(Error::Config("schedule.max_time only applies to random-times".into()));
        }
        QuenchSchedule::new(quenches, time, mode).map_err(|e| Error::Config(e.to_string()))
    }
}

impl StateConfig {
    fn sector<'a>(&self, sectors: &'a [Sector]) -> Result<&'a Sector> {
        let wanted = match (self.n, self.sz, self.parity) {
            (None, None, None) => return sectors.first().ok_or_else(|| Error::Config("model has no sectors".into())),
            (Some(n), Some(sz), None) => SectorLabel::fermion(n as i64, sz as i64)?,
            (Some(n), None, None) => SectorLabel::boson(n as i64)?,
            (None, None, Some(p)) => SectorLabel::parity(p)?,
            _ => return Err(Error::Config("state sector needs (n, sz), n, or parity".into())),
        };
        sectors
            .iter()
            .find(|s| s.label() == wanted)
            .ok_or_else(|| Error::Config(format!("sector {wanted} does not exist in this model")))
    }

    fn check_unused(&self) -> Result<()> {
        let uses_occ = self.kind == StateKind::Fock;
        let uses_rank = self.kind == StateKind::Mixture;
        let uses_sector = matches!(
            self.kind,
            StateKind::Pure | StateKind::MaximallyMixed | StateKind::Mixture | StateKind::Random | StateKind::Ground
        );
        if self.occupations.is_some() && !uses_occ {
            return Err(Error::Config("state.occupations only applies to fock states".into()));
        }
        if self.rank.is_some() && !uses_rank {
            return Err(Error::Config("state.rank only applies to mixture states".into()));
        }
        if (self.n.is_some() || self.sz.is_some() || self.parity.is_some()) && !uses_sector {
            return Err(Error::Config(format!("state {:?} does not take a sector", self.kind)));
        }
        Ok(())
    }

    pub fn build<R: rand::Rng + ?Sized>(
        &self,
        model: &QuenchModel,
        sectors: &[Sector],
        rng: &mut R,
    ) -> Result<SectorState> {
        self.check_unused()?;
        let sites = model.lattice().sites();
        let spin_only = |what: &str| -> Result<()> {
            if matches!(model, QuenchModel::Ising { .. }) {
                Ok(())
            } else {
                Err(Error::Config(format!("{what} states need a spin model")))
            }
        };
        let fermion = |which| -> Result<SectorState> { states::fermion_test_state(model, sectors, which) };
        let st = match self.kind {
            StateKind::Antiferromagnetic => {
                spin_only("antiferromagnetic")?;
                states::antiferromagnetic(sectors, sites)?
            }
            StateKind::AllUp => {
                spin_only("all-up")?;
                states::basis_state(sectors, &vec![1; sites])?
            }
            StateKind::Ghz => {
                spin_only("GHZ")?;
                states::ghz(sectors, sites)?
            }
            StateKind::Fock => {
                let occ =
                    self.occupations.as_ref().ok_or_else(|| Error::Config("fock state needs occupations".into()))?;
                states::basis_state(sectors, occ)?
            }
            StateKind::Pure => states::uniform_mixture(self.sector(sectors)?, 1)?,
            StateKind::MaximallyMixed => states::maximally_mixed(self.sector(sectors)?)?,
            StateKind::Mixture => {
                let rank = self.rank.ok_or_else(|| Error::Config("mixture state needs a rank".into()))?;
                states::uniform_mixture(self.sector(sectors)?, rank)?
            }
            StateKind::Random => states::random_pure(self.sector(sectors)?, rng)?,
            StateKind::Psi11 => fermion(states::FermionTestState::Psi11)?,
            StateKind::Psi20 => fermion(states::FermionTestState::Psi20)?,
            StateKind::Psi22 => fermion(states::FermionTestState::Psi22)?,
            StateKind::Ground => states::bose_ground_state(model, self.sector(sectors)?)?,
        };
        Ok(st)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASIC: &str = r#"
seed = 7

[model]
kind = "ising"
sites = 4

[schedule]
quenches = [1, 2, 4]

[state]
kind = "antiferromagnetic"

[measurement]
unitaries = 10
"#;

    #[test]
    fn parses_a_minimal_config() {
        let c = ExperimentConfig::from_toml(BASIC).unwrap();
        assert_eq!(c.seed, 7);
        assert_eq!(c.shots().unwrap(), vec![Shots::Infinite]);
        assert_eq!(c.orders(), vec![2]);
        assert_eq!(c.hash(), ExperimentConfig::from_toml(BASIC).unwrap().hash());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let text = BASIC.replace("sites = 4", "sites = 4\ncolour = 3");
        assert!(matches!(ExperimentConfig::from_toml(&text), Err(Error::Config(_))));
        let text = BASIC.replace("sites = 4", "sites = 4\nparticles = 3");
        assert!(ExperimentConfig::from_toml(&text).is_err());
    }

    #[test]
    fn invalid_values_are_rejected() {
        assert!(ExperimentConfig::from_toml(&BASIC.replace("unitaries = 10", "unitaries = 0")).is_err());
        assert!(
            ExperimentConfig::from_toml(&BASIC.replace("unitaries = 10", "unitaries = 10\nshots = \"lots\"")).is_err()
        );
        assert!(ExperimentConfig::from_toml(&BASIC.replace("sites = 4", "sites = 13")).is_err());
        assert!(ExperimentConfig::from_toml(&BASIC.replace("antiferromagnetic", "psi20")).is_err());
    }

    #[test]
    fn hash_changes_with_content() {
        let a = ExperimentConfig::from_toml(BASIC).unwrap();
        let b = ExperimentConfig::from_toml(&BASIC.replace("seed = 7", "seed = 8")).unwrap();
        assert_ne!(a.hash(), b.hash());
    }

    #[test]
    fn sweep_overrides_model_parameters() {
        let c = ExperimentConfig::from_toml(BASIC).unwrap();
        let m = c.model.unwrap().build(Some((SweepParameter::Sites, 6.0))).unwrap();
        assert_eq!(m.lattice().sites(), 6);
    }
}
