//! JSON scenario configuration.
//!
//! One top-level section per experiment. Every field has a default, but the
//! section for the experiment being run must be present (`{}` is enough).
//! Unknown keys are rejected at every level.

use std::path::Path;

use nalgebra::{Matrix2, Matrix4, Vector2, Vector4};
use rand::SeedableRng;
use serde::{Deserialize, Serialize};

use crate::bounds::PassiveScenario;
use crate::controller::{
    db_to_linear, CognitiveScenario, ParamGrids, PerformanceGoals, RadarConfig, RadarParams, SinrDip, SinrTimeline,
};
use crate::error::{Error, Result};
use crate::sensing::EnergyDetector;
use crate::spectrum_hmm::HmmModel;
use crate::symbiotic::{place_in_disc, CpeNetwork, SymbioticScenario};
use crate::tracking::{Antenna, BistaticChannel, MotionModel, TargetState, Waveform};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Spectrum,
    Tracking,
    PassiveSelection,
    Symbiotic,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 4] = [
        ExperimentKind::Spectrum,
        ExperimentKind::Tracking,
        ExperimentKind::PassiveSelection,
        ExperimentKind::Symbiotic,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            ExperimentKind::Spectrum => "spectrum",
            ExperimentKind::Tracking => "tracking",
            ExperimentKind::PassiveSelection => "passive_selection",
            ExperimentKind::Symbiotic => "symbiotic",
        }
    }

    pub fn parse(name: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.as_str() == name)
            .ok_or_else(|| {
                Error::Config(format!(
                    "unknown experiment '{name}' (expected spectrum, tracking, passive_selection or symbiotic)"
                ))
            })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    /// Experiment run when none is named on the command line.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub experiment: Option<ExperimentKind>,
    #[serde(default)]
    pub seed: u64,
    /// Overrides every section's own trial count.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trials: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spectrum: Option<SpectrumConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tracking: Option<TrackingConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub passive_selection: Option<PassiveConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub symbiotic: Option<SymbioticConfig>,
}

fn config_err(e: Error) -> Error {
    match e {
        Error::InvalidInput(m) => Error::Config(m),
        other => other,
    }
}

impl Config {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// A config with every section at its defaults.
    pub fn with_all_defaults() -> Self {
        Self {
            experiment: None,
            seed: 0,
            trials: None,
            spectrum: Some(SpectrumConfig::default()),
            tracking: Some(TrackingConfig::default()),
            passive_selection: Some(PassiveConfig::default()),
            symbiotic: Some(SymbioticConfig::default()),
        }
    }

    pub fn to_json_value(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("config is always serializable")
    }

    /// Experiments this config can run: the named one, or every present section.
    pub fn experiments(&self) -> Vec<ExperimentKind> {
        match self.experiment {
            Some(k) => vec![k],
            None => ExperimentKind::ALL
                .into_iter()
                .filter(|k| self.has_section(*k))
                .collect(),
        }
    }

    pub fn has_section(&self, kind: ExperimentKind) -> bool {
        match kind {
            ExperimentKind::Spectrum => self.spectrum.is_some(),
            ExperimentKind::Tracking => self.tracking.is_some(),
            ExperimentKind::PassiveSelection => self.passive_selection.is_some(),
            ExperimentKind::Symbiotic => self.symbiotic.is_some(),
        }
    }

    fn missing(kind: ExperimentKind) -> Error {
        Error::Config(format!("config has no '{}' section", kind.as_str()))
    }

    pub fn spectrum(&self) -> Result<&SpectrumConfig> {
        self.spectrum.as_ref().ok_or_else(|| Self::missing(ExperimentKind::Spectrum))
    }

    pub fn tracking(&self) -> Result<&TrackingConfig> {
        self.tracking.as_ref().ok_or_else(|| Self::missing(ExperimentKind::Tracking))
    }

    pub fn passive_selection(&self) -> Result<&PassiveConfig> {
        self.passive_selection
            .as_ref()
            .ok_or_else(|| Self::missing(ExperimentKind::PassiveSelection))
    }

    pub fn symbiotic(&self) -> Result<&SymbioticConfig> {
        self.symbiotic.as_ref().ok_or_else(|| Self::missing(ExperimentKind::Symbiotic))
    }

    /// Trial count for an experiment after the top-level override.
    pub fn trials_for(&self, kind: ExperimentKind) -> Result<usize> {
        let section = match kind {
            ExperimentKind::Spectrum => self.spectrum()?.trials,
            ExperimentKind::Tracking => self.tracking()?.trials,
            ExperimentKind::PassiveSelection => {
                self.passive_selection()?;
                1
            }
            ExperimentKind::Symbiotic => self.symbiotic()?.trials,
        };
        Ok(self.trials.unwrap_or(section))
    }

    /// Checks every present section and that at least one experiment is runnable.
    pub fn validate(&self) -> Result<()> {
        if self.trials == Some(0) {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        if let Some(k) = self.experiment {
            if !self.has_section(k) {
                return Err(Self::missing(k));
            }
        }
        if self.experiments().is_empty() {
            return Err(Error::Config("config contains no experiment section".into()));
        }
        if let Some(s) = &self.spectrum {
            s.validate().map_err(config_err)?;
        }
        if let Some(s) = &self.tracking {
            s.validate().map_err(config_err)?;
        }
        if let Some(s) = &self.passive_selection {
            s.scenario().map_err(config_err)?.validate().map_err(config_err)?;
        }
        if let Some(s) = &self.symbiotic {
            s.validate().map_err(config_err)?;
        }
        Ok(())
    }
}

fn mat2(m: &[[f64; 2]; 2]) -> Matrix2<f64> {
    Matrix2::new(m[0][0], m[0][1], m[1][0], m[1][1])
}

fn vec2(v: &[f64; 2]) -> Vector2<f64> {
    Vector2::new(v[0], v[1])
}

fn diag_cov(std: &[f64; 4]) -> Result<Matrix4<f64>> {
    if std.iter().any(|&s| !(s > 0.0) || !s.is_finite()) {
        return Err(Error::invalid("prior standard deviations must be positive"));
    }
    Ok(Matrix4::from_diagonal(&Vector4::from_iterator(std.iter().map(|s| s * s))))
}

fn check_trials(trials: usize) -> Result<()> {
    if trials == 0 {
        return Err(Error::invalid("trials must be at least 1"));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Trajectories
// ---------------------------------------------------------------------------

/// Either a straight leg `start → end` at `speed`, or an explicit initial
/// state `[x, vx, y, vy]` with a step count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrajectoryConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub end: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub speed: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial: Option<[f64; 4]>,
    pub dt: f64,
    /// Defaults to the number of whole steps needed to cover the leg.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub steps: Option<usize>,
}

impl TrajectoryConfig {
    pub fn leg(start: [f64; 2], end: [f64; 2], speed: f64, dt: f64) -> Self {
        Self {
            start: Some(start),
            end: Some(end),
            speed: Some(speed),
            initial: None,
            dt,
            steps: None,
        }
    }

    pub fn from_state(initial: [f64; 4], dt: f64, steps: usize) -> Self {
        Self {
            start: None,
            end: None,
            speed: None,
            initial: Some(initial),
            dt,
            steps: Some(steps),
        }
    }

    /// Initial state and number of steps.
    pub fn resolve(&self) -> Result<(TargetState, usize)> {
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(Error::invalid("trajectory dt must be positive"));
        }
        let resolved = match (self.start, self.end, self.speed, self.initial) {
            (Some(a), Some(b), Some(speed), None) => {
                let d = vec2(&b) - vec2(&a);
                let len = d.norm();
                if !(speed > 0.0) || !(len > 0.0) {
                    return Err(Error::invalid("trajectory needs distinct endpoints and a positive speed"));
                }
                let v = d / len * speed;
                let steps = self.steps.unwrap_or((len / (speed * self.dt)).floor() as usize);
                (TargetState::new(a[0], v[0], a[1], v[1]), steps)
            }
            (None, None, None, Some(s)) => {
                let steps = self
                    .steps
                    .ok_or_else(|| Error::invalid("a trajectory given by initial state needs 'steps'"))?;
                (TargetState::new(s[0], s[1], s[2], s[3]), steps)
            }
            _ => {
                return Err(Error::invalid(
                    "trajectory needs either start/end/speed or initial, not both",
                ))
            }
        };
        if resolved.1 == 0 {
            return Err(Error::invalid("trajectory has no steps"));
        }
        if !resolved.0.is_finite() {
            return Err(Error::invalid("trajectory state must be finite"));
        }
        Ok(resolved)
    }
}

// ---------------------------------------------------------------------------
// Spectrum
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetectorConfig {
    pub samples_per_slot: usize,
    pub noise_power: f64,
    pub pfa: f64,
    /// Per-sample primary-user SNR when the channel is busy.
    pub busy_snr_db: f64,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        Self {
            samples_per_slot: 8,
            noise_power: 1.0,
            pfa: 0.1,
            busy_snr_db: -3.0,
        }
    }
}

impl DetectorConfig {
    pub fn build(&self) -> Result<EnergyDetector> {
        EnergyDetector::from_pfa(self.samples_per_slot, self.noise_power, self.pfa)
    }

    pub fn busy_snr(&self) -> f64 {
        db_to_linear(self.busy_snr_db)
    }

    pub fn busy_power(&self) -> f64 {
        self.noise_power * self.busy_snr()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpectrumConfig {
    /// `a_true[h][k] = Pr[S_t = h | S_{t-1} = k]` (columns sum to 1).
    pub a_true: [[f64; 2]; 2],
    pub pi: [f64; 2],
    pub detector: DetectorConfig,
    /// Explicit emission matrix; when set, observations are drawn from it
    /// directly instead of running the energy detector.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub emission: Option<[[f64; 2]; 2]>,
    pub pris: usize,
    pub trials: usize,
    pub lambdas: Vec<f64>,
    pub timeseries_lambda: f64,
    /// PRIs per time-series block.
    pub block: usize,
    /// Blocks excluded from the time-series stability summary.
    pub warmup_pris: usize,
    pub window: usize,
    pub max_iters: usize,
    pub tol: f64,
}

pub fn lambda_grid(from: f64, to: f64, steps: usize) -> Vec<f64> {
    match steps {
        0 => Vec::new(),
        1 => vec![from],
        _ => (0..steps)
            .map(|i| from + (to - from) * i as f64 / (steps - 1) as f64)
            .collect(),
    }
}

impl Default for SpectrumConfig {
    fn default() -> Self {
        Self {
            a_true: [[0.9, 0.1], [0.1, 0.9]],
            pi: [0.5, 0.5],
            detector: DetectorConfig::default(),
            emission: None,
            pris: 10_000,
            trials: 1000,
            lambdas: lambda_grid(0.0, 1.0, 21),
            timeseries_lambda: 0.65,
            block: 500,
            warmup_pris: 1000,
            window: 200,
            max_iters: 20,
            tol: 1e-6,
        }
    }
}

impl SpectrumConfig {
    pub fn emission_matrix(&self) -> Result<Matrix2<f64>> {
        match &self.emission {
            Some(b) => Ok(mat2(b)),
            None => self.detector.build()?.roc_to_emission(self.detector.busy_snr()),
        }
    }

    pub fn true_model(&self) -> Result<HmmModel> {
        HmmModel::new(mat2(&self.a_true), self.emission_matrix()?, self.pi)
    }

    pub fn validate(&self) -> Result<()> {
        self.true_model()?;
        check_trials(self.trials)?;
        if self.pris < 2 || self.window < 2 || self.block == 0 || self.max_iters == 0 {
            return Err(Error::invalid("pris and window need at least 2, block and max_iters at least 1"));
        }
        if !(self.tol >= 0.0) {
            return Err(Error::invalid("tol must be non-negative"));
        }
        if self.lambdas.is_empty() {
            return Err(Error::invalid("lambda grid is empty"));
        }
        if self.lambdas.iter().chain([&self.timeseries_lambda]).any(|l| !(0.0..=1.0).contains(l)) {
            return Err(Error::invalid("lambda values must lie in [0, 1]"));
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Tracking
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RadarSection {
    pub position: [f64; 2],
    pub wavelength: f64,
    pub pfa: f64,
    pub c_v: f64,
    /// When absent, calibrated so the baseline dwell meets the range goal
    /// at nominal SINR.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c_r: Option<f64>,
}

impl Default for RadarSection {
    fn default() -> Self {
        Self {
            position: [0.0, 0.0],
            wavelength: 0.1,
            pfa: 1e-6,
            c_v: 1.0,
            c_r: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrackingConfig {
    pub radar: RadarSection,
    pub goals: PerformanceGoals,
    pub grids: ParamGrids,
    pub baseline: RadarParams,
    pub trajectory: TrajectoryConfig,
    /// White-acceleration spectral density, m²/s³.
    pub accel_psd: f64,
    pub prior_std: [f64; 4],
    pub sinr: SinrTimeline,
    pub sinr_noise_db: f64,
    pub trials: usize,
}

impl Default for TrackingConfig {
    fn default() -> Self {
        Self {
            radar: RadarSection::default(),
            goals: PerformanceGoals {
                range_rmse: 5.0,
                velocity_rmse: 0.06,
                doppler_upper: 0.5,
                clutter_lower: 0.15,
            },
            grids: ParamGrids::default(),
            baseline: RadarParams::new(6000.0, 128),
            trajectory: TrajectoryConfig::from_state([12_000.0, -50.0, 600.0, 0.0], 1.0, 120),
            accel_psd: 0.05,
            prior_std: [20.0, 2.0, 20.0, 2.0],
            sinr: SinrTimeline {
                nominal_db: 15.0,
                dips: vec![
                    SinrDip {
                        start_s: 30.0,
                        end_s: 45.0,
                        depth_db: 6.0,
                    },
                    SinrDip {
                        start_s: 75.0,
                        end_s: 90.0,
                        depth_db: 6.0,
                    },
                ],
            },
            sinr_noise_db: 0.5,
            trials: 50,
        }
    }
}

impl TrackingConfig {
    pub fn scenario(&self) -> Result<CognitiveScenario> {
        let (initial, dwells) = self.trajectory.resolve()?;
        let model = MotionModel::with_acceleration_noise(self.trajectory.dt, self.accel_psd)?;
        let mut radar = RadarConfig {
            position: vec2(&self.radar.position),
            wavelength: self.radar.wavelength,
            pfa: self.radar.pfa,
            c_r: self.radar.c_r.unwrap_or(1.0),
            c_v: self.radar.c_v,
        };
        if self.radar.c_r.is_none() {
            radar.calibrate_range(&self.baseline, self.goals.range_rmse, db_to_linear(self.sinr.nominal_db));
        }
        let sc = CognitiveScenario {
            radar,
            goals: self.goals,
            grids: self.grids.clone(),
            baseline: self.baseline,
            model,
            initial,
            prior_cov: diag_cov(&self.prior_std)?,
            dwells,
            sinr: self.sinr.clone(),
            sinr_noise_db: self.sinr_noise_db,
        };
        Ok(sc)
    }

    pub fn validate(&self) -> Result<()> {
        check_trials(self.trials)?;
        if !(self.baseline.prf > 0.0) || self.baseline.n_pulses == 0 {
            return Err(Error::invalid("baseline parameters must be positive"));
        }
        self.scenario()?.validate()
    }
}

// ---------------------------------------------------------------------------
// Passive selection
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelConfig {
    pub waveform: Waveform,
    pub tx: [f64; 2],
    pub wavelength: f64,
    /// Row-major `(range, velocity)` covariance at the reference SNR.
    pub r0: [[f64; 2]; 2],
    pub reference_snr: f64,
    /// Transmitter-target and target-receiver distances of the reference SNR.
    pub reference_ranges: [f64; 2],
    pub pfa: f64,
}

impl ChannelConfig {
    pub fn build(&self, rx: Vector2<f64>) -> Result<BistaticChannel> {
        BistaticChannel::new(
            self.waveform,
            vec2(&self.tx),
            rx,
            self.wavelength,
            mat2(&self.r0),
            self.reference_snr,
            (self.reference_ranges[0], self.reference_ranges[1]),
            self.pfa,
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PassiveConfig {
    pub receiver: [f64; 2],
    #[serde(skip_serializing_if = "Option::is_none")]
    pub antenna: Option<Antenna>,
    pub channels: Vec<ChannelConfig>,
    pub trajectory: TrajectoryConfig,
    pub prior_std: [f64; 4],
}

impl Default for PassiveConfig {
    fn default() -> Self {
        // Receiver at the harbour origin; UMTS 453 m to the south-east, FM
        // 36 km to the north-east.
        let umts_offset = 453.0 / std::f64::consts::SQRT_2;
        let fm_offset = 36_000.0 / std::f64::consts::SQRT_2;
        Self {
            receiver: [0.0, 0.0],
            antenna: Some(Antenna {
                gain_db: 10.0,
                hpbw_deg: 3.0,
            }),
            channels: vec![
                ChannelConfig {
                    waveform: Waveform::Umts,
                    tx: [umts_offset, -umts_offset],
                    wavelength: 0.1427,
                    r0: [[25.0, 0.0], [0.0, 4.0]],
                    reference_snr: 1.0,
                    reference_ranges: [2000.0, 2000.0],
                    pfa: 1e-4,
                },
                ChannelConfig {
                    waveform: Waveform::Fm,
                    tx: [fm_offset, fm_offset],
                    wavelength: 3.0,
                    r0: [[90_000.0, 0.0], [0.0, 0.09]],
                    reference_snr: 10.0,
                    reference_ranges: [36_000.0, 10_000.0],
                    pfa: 1e-4,
                },
            ],
            // Inbound from the south-south-east. FM ranges then carry enough
            // cross-range information to dominate UMTS far out on both axes.
            trajectory: TrajectoryConfig::leg([3400.0, -7300.0], [200.0, -450.0], 10.0, 1.0),
            prior_std: [70.0, 5.0, 70.0, 5.0],
        }
    }
}

impl PassiveConfig {
    pub fn scenario(&self) -> Result<PassiveScenario> {
        let rx = vec2(&self.receiver);
        let channels = self
            .channels
            .iter()
            .map(|c| c.build(rx))
            .collect::<Result<Vec<_>>>()?;
        let (initial, steps) = self.trajectory.resolve()?;
        if let Some(a) = &self.antenna {
            if !(a.hpbw_deg > 0.0) || !a.gain_db.is_finite() {
                return Err(Error::invalid("antenna needs a positive beamwidth and finite gain"));
            }
        }
        Ok(PassiveScenario {
            channels,
            antenna: self.antenna,
            model: MotionModel::constant_velocity(self.trajectory.dt)?,
            initial,
            steps,
            prior_cov: diag_cov(&self.prior_std)?,
        })
    }
}

// ---------------------------------------------------------------------------
// Symbiotic
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CpeTemplate {
    pub wavelength: f64,
    pub r0: [[f64; 2]; 2],
    pub reference_snr: f64,
    pub reference_ranges: [f64; 2],
    pub pfa: f64,
}

impl Default for CpeTemplate {
    fn default() -> Self {
        Self {
            wavelength: 0.5,
            r0: [[100.0, 0.0], [0.0, 1.0]],
            reference_snr: 10.0,
            reference_ranges: [500.0, 500.0],
            pfa: 1e-4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SymbioticConfig {
    pub n_cpes: usize,
    pub m: usize,
    pub n_max: usize,
    pub lambda_sym: f64,
    pub p_active: f64,
    /// Radius of the disc around the receiver in which CPEs are placed.
    pub radius: f64,
    pub receiver: [f64; 2],
    pub cpe: CpeTemplate,
    /// Restrict activation candidates to the ideal subset.
    pub ideal_only: bool,
    pub trajectory: TrajectoryConfig,
    pub accel_psd: f64,
    pub prior_std: [f64; 4],
    pub trials: usize,
}

impl Default for SymbioticConfig {
    fn default() -> Self {
        Self {
            n_cpes: 256,
            m: 8,
            n_max: 4,
            lambda_sym: 0.95,
            p_active: 0.05,
            radius: 1000.0,
            receiver: [0.0, 0.0],
            cpe: CpeTemplate::default(),
            ideal_only: false,
            trajectory: TrajectoryConfig::leg([-400.0, 400.0], [400.0, -250.0], 8.33, 1.0),
            accel_psd: 0.01,
            prior_std: [30.0, 3.0, 30.0, 3.0],
            trials: 10_000,
        }
    }
}

impl SymbioticConfig {
    /// Scenario with CPE positions drawn from `layout_rng`.
    pub fn scenario<R: rand::Rng>(&self, layout_rng: &mut R) -> Result<SymbioticScenario> {
        if !(self.radius > 0.0) {
            return Err(Error::invalid("CPE disc radius must be positive"));
        }
        let rx = vec2(&self.receiver);
        let cpes = place_in_disc(self.n_cpes, rx, self.radius, layout_rng)
            .into_iter()
            .map(|tx| {
                BistaticChannel::new(
                    Waveform::Cpe80222,
                    tx,
                    rx,
                    self.cpe.wavelength,
                    mat2(&self.cpe.r0),
                    self.cpe.reference_snr,
                    (self.cpe.reference_ranges[0], self.cpe.reference_ranges[1]),
                    self.cpe.pfa,
                )
            })
            .collect::<Result<Vec<_>>>()?;
        let mut network = CpeNetwork::new(cpes, self.m, self.n_max)?;
        network.ideal_only = self.ideal_only;
        let (initial, steps) = self.trajectory.resolve()?;
        let sc = SymbioticScenario {
            network,
            model: MotionModel::with_acceleration_noise(self.trajectory.dt, self.accel_psd)?,
            initial,
            prior_cov: diag_cov(&self.prior_std)?,
            steps,
            p_active: self.p_active,
            lambda_sym: self.lambda_sym,
        };
        sc.validate()?;
        Ok(sc)
    }

    pub fn validate(&self) -> Result<()> {
        check_trials(self.trials)?;
        if self.n_cpes == 0 {
            return Err(Error::invalid("network needs at least one CPE"));
        }
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0);
        self.scenario(&mut rng).map(|_| ())
    }
}
