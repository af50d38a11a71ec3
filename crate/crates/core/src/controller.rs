//! Perception-action controller for a monostatic pulse-Doppler tracker.
//!
//! Each dwell the controller picks `(PRF, N_p)` from a grid, minimising dwell
//! time `N_p / PRF` subject to predicted range/velocity RMSE goals and
//! normalised-Doppler bounds. Predicted RMSE comes from the one-step
//! predicted information `(F P Fᵀ + Q)⁻¹ + P_D Hᵀ R(θ)⁻¹ H`.

use std::cmp::Ordering;

use nalgebra::{Matrix2, Matrix4, Vector2, Vector4};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tracking::{detection_probability, MeasurementModel, MonostaticRadar, MotionModel, TargetState, TrackBelief};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadarParams {
    pub prf: f64,
    pub n_pulses: u32,
}

impl RadarParams {
    pub fn new(prf: f64, n_pulses: u32) -> Self {
        Self { prf, n_pulses }
    }

    /// Dwell time in seconds.
    pub fn cost(&self) -> f64 {
        self.n_pulses as f64 / self.prf
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamGrids {
    pub prfs: Vec<f64>,
    pub pulses: Vec<u32>,
}

impl Default for ParamGrids {
    fn default() -> Self {
        Self {
            prfs: vec![2000.0, 3000.0, 4000.0, 5000.0, 6000.0, 8000.0, 10000.0],
            pulses: vec![32, 64, 128, 256, 512],
        }
    }
}

impl ParamGrids {
    pub fn validate(&self) -> Result<()> {
        if self.prfs.is_empty() || self.pulses.is_empty() {
            return Err(Error::invalid("parameter grids must be non-empty"));
        }
        if self.prfs.iter().any(|&p| !(p > 0.0) || !p.is_finite()) || self.pulses.contains(&0) {
            return Err(Error::invalid("grid values must be positive"));
        }
        if self.prfs.windows(2).any(|w| w[0] >= w[1]) || self.pulses.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid("grids must be strictly ascending"));
        }
        Ok(())
    }

    pub fn candidates(&self) -> impl Iterator<Item = RadarParams> + '_ {
        self.prfs
            .iter()
            .flat_map(move |&prf| self.pulses.iter().map(move |&n| RadarParams::new(prf, n)))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerformanceGoals {
    pub range_rmse: f64,
    pub velocity_rmse: f64,
    #[serde(default = "default_doppler_upper")]
    pub doppler_upper: f64,
    #[serde(default)]
    pub clutter_lower: f64,
}

fn default_doppler_upper() -> f64 {
    0.5
}

impl PerformanceGoals {
    pub fn validate(&self) -> Result<()> {
        if !(self.range_rmse > 0.0) || !(self.velocity_rmse > 0.0) {
            return Err(Error::invalid("rmse goals must be positive"));
        }
        if !(0.0 <= self.clutter_lower && self.clutter_lower < self.doppler_upper && self.doppler_upper <= 0.5) {
            return Err(Error::invalid("need 0 <= clutter bound < doppler bound <= 0.5"));
        }
        Ok(())
    }
}

/// Sensor constants for the dwell measurement model
/// `σ_r² = c_r / (SINR·N_p)`, `σ_v² = c_v (λ·PRF / 2N_p)² / (SINR·N_p)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadarConfig {
    pub position: Vector2<f64>,
    pub wavelength: f64,
    pub pfa: f64,
    pub c_r: f64,
    pub c_v: f64,
}

impl RadarConfig {
    /// Sets `c_r` so `baseline` yields range standard deviation `range_std`
    /// at linear SINR `sinr`.
    pub fn calibrate_range(&mut self, baseline: &RadarParams, range_std: f64, sinr: f64) {
        self.c_r = range_std * range_std * sinr * baseline.n_pulses as f64;
    }

    pub fn sensor(&self) -> MonostaticRadar {
        MonostaticRadar { position: self.position }
    }

    /// Measurement covariance of one dwell at linear SINR `sinr`.
    pub fn covariance(&self, params: &RadarParams, sinr: f64) -> Result<Matrix2<f64>> {
        if !(sinr > 0.0) || !sinr.is_finite() {
            return Err(Error::invalid(format!("sinr must be positive, got {sinr}")));
        }
        let np = params.n_pulses as f64;
        let bin = self.wavelength * params.prf / (2.0 * np);
        let integrated = sinr * np;
        Ok(Matrix2::new(self.c_r / integrated, 0.0, 0.0, self.c_v * bin * bin / integrated))
    }

    /// Detection probability of one dwell with coherent integration gain.
    pub fn detection_probability(&self, params: &RadarParams, sinr: f64) -> f64 {
        detection_probability(sinr * params.n_pulses as f64, self.pfa)
    }

    /// Radial velocity to normalised Doppler `2v/(λ·PRF)`.
    pub fn normalized_doppler(&self, radial_velocity: f64, prf: f64) -> f64 {
        2.0 * radial_velocity / (self.wavelength * prf)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DwellForecast {
    pub params: RadarParams,
    pub rmse_range: f64,
    pub rmse_velocity: f64,
    pub max_doppler: f64,
    pub mean_doppler: f64,
    pub cost: f64,
}

/// Quantities of a forecast that do not depend on `θ`.
struct Prediction {
    p_pred_inv: Matrix4<f64>,
    h: nalgebra::Matrix2x4<f64>,
    radial: f64,
    radial_std: f64,
}

fn prediction(belief: &TrackBelief, model: &MotionModel, cfg: &RadarConfig) -> Result<Prediction> {
    let mean = model.f * belief.mean;
    let p_pred = belief.predicted_covariance(model);
    let p_pred_inv = p_pred
        .cholesky()
        .ok_or_else(|| Error::numerical("predicted covariance is singular"))?
        .inverse();
    let state = TargetState::from_vector(&mean);
    let sensor = cfg.sensor();
    let h = sensor.jacobian(&state)?;
    let radial = sensor.measure(&state)?[1];
    let radial_std = (h * p_pred * h.transpose())[(1, 1)].max(0.0).sqrt();
    Ok(Prediction {
        p_pred_inv,
        h,
        radial,
        radial_std,
    })
}

fn forecast_from(pred: &Prediction, params: RadarParams, cfg: &RadarConfig, sinr: f64) -> Result<DwellForecast> {
    let r = cfg.covariance(&params, sinr)?;
    let r_inv = r
        .try_inverse()
        .ok_or_else(|| Error::numerical("dwell covariance is singular"))?;
    let pd = cfg.detection_probability(&params, sinr);
    let j = pred.p_pred_inv + pred.h.transpose() * r_inv * pred.h * pd;
    let p_post = j
        .cholesky()
        .ok_or_else(|| Error::numerical("predicted information is singular"))?
        .inverse();
    let rv = pred.h * p_post * pred.h.transpose();
    let speed = pred.radial.abs();
    Ok(DwellForecast {
        params,
        rmse_range: rv[(0, 0)].max(0.0).sqrt(),
        rmse_velocity: rv[(1, 1)].max(0.0).sqrt(),
        max_doppler: cfg.normalized_doppler(speed + 2.0 * pred.radial_std, params.prf),
        mean_doppler: cfg.normalized_doppler(speed, params.prf),
        cost: params.cost(),
    })
}

/// Forecast for the next dwell under `params` at linear SINR `sinr`.
pub fn forecast(
    belief: &TrackBelief,
    model: &MotionModel,
    params: RadarParams,
    cfg: &RadarConfig,
    sinr: f64,
) -> Result<DwellForecast> {
    forecast_from(&prediction(belief, model, cfg)?, params, cfg, sinr)
}

pub fn is_feasible(f: &DwellForecast, goals: &PerformanceGoals) -> bool {
    f.max_doppler <= goals.doppler_upper
        && f.mean_doppler >= goals.clutter_lower
        && f.rmse_range <= goals.range_rmse
        && f.rmse_velocity <= goals.velocity_rmse
}

/// Sum of constraint violations, each relative to its bound.
pub fn violation_score(f: &DwellForecast, goals: &PerformanceGoals) -> f64 {
    let rel = |excess: f64, bound: f64| if excess > 0.0 { excess / bound } else { 0.0 };
    let mut v = rel(f.max_doppler - goals.doppler_upper, goals.doppler_upper)
        + rel(f.rmse_range - goals.range_rmse, goals.range_rmse)
        + rel(f.rmse_velocity - goals.velocity_rmse, goals.velocity_rmse);
    if goals.clutter_lower > 0.0 {
        v += rel(goals.clutter_lower - f.mean_doppler, goals.clutter_lower);
    }
    v
}

/// Orders by cost, then fewer pulses, then lower PRF.
fn cheaper(a: &DwellForecast, b: &DwellForecast) -> Ordering {
    a.cost
        .total_cmp(&b.cost)
        .then(a.params.n_pulses.cmp(&b.params.n_pulses))
        .then(a.params.prf.total_cmp(&b.params.prf))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Selection {
    pub forecast: DwellForecast,
    pub feasible: bool,
}

impl Selection {
    pub fn params(&self) -> RadarParams {
        self.forecast.params
    }
}

/// Exhaustive grid search. Falls back to the least-violating candidate when
/// nothing is feasible.
pub fn select_params(
    belief: &TrackBelief,
    model: &MotionModel,
    goals: &PerformanceGoals,
    grids: &ParamGrids,
    cfg: &RadarConfig,
    sinr: f64,
) -> Result<Selection> {
    grids.validate()?;
    let pred = prediction(belief, model, cfg)?;
    let forecasts = grids
        .candidates()
        .map(|p| forecast_from(&pred, p, cfg, sinr))
        .collect::<Result<Vec<_>>>()?;
    let best_feasible = forecasts
        .iter()
        .filter(|f| is_feasible(f, goals))
        .min_by(|a, b| cheaper(a, b));
    if let Some(f) = best_feasible {
        return Ok(Selection {
            forecast: *f,
            feasible: true,
        });
    }
    let fallback = forecasts
        .iter()
        .map(|f| (violation_score(f, goals), f))
        .min_by(|(va, a), (vb, b)| va.total_cmp(vb).then_with(|| cheaper(a, b)))
        .map(|(_, f)| *f)
        .expect("grids are non-empty");
    Ok(Selection {
        forecast: fallback,
        feasible: false,
    })
}

// ---------------------------------------------------------------------------
// Scenario
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SinrDip {
    pub start_s: f64,
    pub end_s: f64,
    pub depth_db: f64,
}

/// Piecewise-constant SINR: nominal level minus any active dips.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SinrTimeline {
    pub nominal_db: f64,
    #[serde(default)]
    pub dips: Vec<SinrDip>,
}

impl SinrTimeline {
    pub fn sinr_db(&self, t: f64) -> f64 {
        self.nominal_db - self.dip_depth(t)
    }

    fn dip_depth(&self, t: f64) -> f64 {
        self.dips
            .iter()
            .filter(|d| t >= d.start_s && t < d.end_s)
            .map(|d| d.depth_db)
            .sum()
    }

    pub fn in_dip(&self, t: f64) -> bool {
        self.dip_depth(t) > 0.0
    }
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TrackMode {
    Fixed,
    Cognitive,
}

impl TrackMode {
    pub fn label(&self) -> &'static str {
        match self {
            TrackMode::Fixed => "fixed",
            TrackMode::Cognitive => "cognitive",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CognitiveScenario {
    pub radar: RadarConfig,
    pub goals: PerformanceGoals,
    pub grids: ParamGrids,
    pub baseline: RadarParams,
    pub model: MotionModel,
    pub initial: TargetState,
    pub prior_cov: Matrix4<f64>,
    pub dwells: usize,
    pub sinr: SinrTimeline,
    /// Standard deviation of the per-dwell SINR estimate, dB.
    pub sinr_noise_db: f64,
}

impl CognitiveScenario {
    pub fn validate(&self) -> Result<()> {
        self.grids.validate()?;
        self.goals.validate()?;
        if self.dwells == 0 {
            return Err(Error::invalid("scenario needs at least one dwell"));
        }
        if !(self.radar.wavelength > 0.0) || !(self.radar.c_r > 0.0) || !(self.radar.c_v > 0.0) {
            return Err(Error::invalid("radar constants must be positive"));
        }
        if !(self.radar.pfa > 0.0 && self.radar.pfa < 1.0) {
            return Err(Error::invalid("pfa must lie in (0, 1)"));
        }
        if !(self.sinr_noise_db >= 0.0) {
            return Err(Error::invalid("sinr noise must be non-negative"));
        }
        TrackBelief::new(self.initial.to_vector(), self.prior_cov)?;
        Ok(())
    }
}

/// Every random quantity of one run, drawn up front so both modes see the
/// same truth, SINR estimates and noise.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioNoise {
    pub truth: Vec<TargetState>,
    pub initial_error: Vector4<f64>,
    pub sinr_noise: Vec<f64>,
    pub detect_uniform: Vec<f64>,
    pub meas_normals: Vec<Vector2<f64>>,
}

impl ScenarioNoise {
    pub fn draw<R: Rng>(scenario: &CognitiveScenario, rng: &mut R) -> Result<Self> {
        let n = scenario.dwells;
        let normal4 = |rng: &mut R| {
            Vector4::from_fn(|_, _| StandardNormal.sample(rng))
        };
        let prior_l = scenario
            .prior_cov
            .cholesky()
            .ok_or_else(|| Error::invalid("prior covariance not positive definite"))?
            .l();
        let initial_error = prior_l * normal4(rng);
        let q_l = if scenario.model.is_deterministic() {
            None
        } else {
            Some(
                scenario
                    .model
                    .q
                    .cholesky()
                    .ok_or_else(|| Error::invalid("process noise covariance not positive definite"))?
                    .l(),
            )
        };
        let mut x = scenario.initial.to_vector();
        let mut truth = Vec::with_capacity(n);
        let mut sinr_noise = Vec::with_capacity(n);
        let mut detect_uniform = Vec::with_capacity(n);
        let mut meas_normals = Vec::with_capacity(n);
        for _ in 0..n {
            let w = normal4(rng);
            x = scenario.model.f * x + q_l.map_or(Vector4::zeros(), |l| l * w);
            truth.push(TargetState::from_vector(&x));
            let s: f64 = StandardNormal.sample(rng);
            sinr_noise.push(s * scenario.sinr_noise_db);
            detect_uniform.push(rng.random());
            meas_normals.push(Vector2::new(StandardNormal.sample(rng), StandardNormal.sample(rng)));
        }
        Ok(Self {
            truth,
            initial_error,
            sinr_noise,
            detect_uniform,
            meas_normals,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DwellLog {
    pub time_s: f64,
    pub prf_hz: f64,
    pub n_pulses: u32,
    pub pred_rmse_r: f64,
    pub act_err_r: f64,
    pub pred_rmse_v: f64,
    pub act_err_v: f64,
    pub norm_doppler_mean: f64,
    pub norm_doppler_max: f64,
    pub sinr_db: f64,
    pub sinr_est_db: f64,
    pub target_doppler: f64,
    pub feasible: bool,
    pub detected: bool,
    pub in_dip: bool,
}

/// Runs one tracking pass. Fixed mode holds `scenario.baseline`; cognitive
/// mode re-selects parameters every dwell from the SINR estimate.
pub fn run_cognitive_track(
    scenario: &CognitiveScenario,
    mode: TrackMode,
    noise: &ScenarioNoise,
) -> Result<Vec<DwellLog>> {
    scenario.validate()?;
    if noise.truth.len() != scenario.dwells {
        return Err(Error::invalid("noise realisation does not match dwell count"));
    }
    let cfg = &scenario.radar;
    let sensor = cfg.sensor();
    let model = &scenario.model;
    let mut belief = TrackBelief::new(scenario.initial.to_vector() + noise.initial_error, scenario.prior_cov)?;
    let mut log = Vec::with_capacity(scenario.dwells);
    for k in 0..scenario.dwells {
        let t = (k + 1) as f64 * model.dt;
        let truth = noise.truth[k];
        let sinr_db = scenario.sinr.sinr_db(t);
        let sinr_est_db = sinr_db + noise.sinr_noise[k];
        let sinr_est = db_to_linear(sinr_est_db);

        let sel = match mode {
            TrackMode::Cognitive => {
                select_params(&belief, model, &scenario.goals, &scenario.grids, cfg, sinr_est)?
            }
            TrackMode::Fixed => {
                let f = forecast(&belief, model, scenario.baseline, cfg, sinr_est)?;
                Selection {
                    feasible: is_feasible(&f, &scenario.goals),
                    forecast: f,
                }
            }
        };
        let params = sel.params();

        let sinr = db_to_linear(sinr_db);
        let r_true = cfg.covariance(&params, sinr)?;
        let detected = noise.detect_uniform[k] < cfg.detection_probability(&params, sinr);
        let mut next = belief.predict(model);
        if detected {
            let l = r_true
                .cholesky()
                .ok_or_else(|| Error::numerical("dwell covariance not positive definite"))?
                .l();
            let z = sensor.measure(&truth)? + l * noise.meas_normals[k];
            next.update(&sensor, &cfg.covariance(&params, sinr_est)?, &z)?;
        }
        if !next.is_spd() {
            return Err(Error::numerical(format!("track covariance lost definiteness at dwell {k}")));
        }
        belief = next;

        let z_true = sensor.measure(&truth)?;
        let z_est = sensor.measure(&belief.state())?;
        log.push(DwellLog {
            time_s: t,
            prf_hz: params.prf,
            n_pulses: params.n_pulses,
            pred_rmse_r: sel.forecast.rmse_range,
            act_err_r: (z_est[0] - z_true[0]).abs(),
            pred_rmse_v: sel.forecast.rmse_velocity,
            act_err_v: (z_est[1] - z_true[1]).abs(),
            norm_doppler_mean: sel.forecast.mean_doppler,
            norm_doppler_max: sel.forecast.max_doppler,
            sinr_db,
            sinr_est_db,
            target_doppler: cfg.normalized_doppler(z_true[1].abs(), params.prf),
            feasible: sel.feasible,
            detected,
            in_dip: scenario.sinr.in_dip(t),
        });
    }
    Ok(log)
}
