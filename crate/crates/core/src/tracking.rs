//! Target kinematics, bistatic measurement model, SNR/detection model and
//! the extended Kalman filter.
//!
//! State ordering is `[x, vx, y, vy]` throughout. Bistatic range is the sum
//! of the transmitter-target and target-receiver distances; bistatic velocity
//! is its time derivative (positive when the bistatic range grows).

use nalgebra::{Matrix2, Matrix2x4, Matrix4, Matrix4x2, Vector2, Vector4};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Distances below this are treated as coincident geometry.
pub const MIN_RANGE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TargetState {
    pub x: f64,
    pub vx: f64,
    pub y: f64,
    pub vy: f64,
}

impl TargetState {
    pub fn new(x: f64, vx: f64, y: f64, vy: f64) -> Self {
        Self { x, vx, y, vy }
    }

    pub fn to_vector(&self) -> Vector4<f64> {
        Vector4::new(self.x, self.vx, self.y, self.vy)
    }

    pub fn from_vector(v: &Vector4<f64>) -> Self {
        Self::new(v[0], v[1], v[2], v[3])
    }

    pub fn position(&self) -> Vector2<f64> {
        Vector2::new(self.x, self.y)
    }

    pub fn velocity(&self) -> Vector2<f64> {
        Vector2::new(self.vx, self.vy)
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.vx.is_finite() && self.y.is_finite() && self.vy.is_finite()
    }
}

/// Constant-velocity motion `x_{k+1} = F x_k + w_k`, `w_k ~ N(0, Q)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MotionModel {
    pub dt: f64,
    pub f: Matrix4<f64>,
    pub q: Matrix4<f64>,
}

impl MotionModel {
    /// Deterministic constant-velocity model (`Q = 0`).
    pub fn constant_velocity(dt: f64) -> Result<Self> {
        Self::with_acceleration_noise(dt, 0.0)
    }

    /// Constant velocity driven by white acceleration noise of spectral
    /// density `accel_psd` (m²/s³) on each axis.
    pub fn with_acceleration_noise(dt: f64, accel_psd: f64) -> Result<Self> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::invalid("dt must be positive"));
        }
        if accel_psd < 0.0 {
            return Err(Error::invalid("acceleration noise must be non-negative"));
        }
        let mut f = Matrix4::identity();
        f[(0, 1)] = dt;
        f[(2, 3)] = dt;
        let (q11, q12, q22) = (dt * dt * dt / 3.0, dt * dt / 2.0, dt);
        let mut q = Matrix4::zeros();
        for off in [0, 2] {
            q[(off, off)] = q11 * accel_psd;
            q[(off, off + 1)] = q12 * accel_psd;
            q[(off + 1, off)] = q12 * accel_psd;
            q[(off + 1, off + 1)] = q22 * accel_psd;
        }
        Ok(Self { dt, f, q })
    }

    pub fn propagate(&self, s: &TargetState) -> TargetState {
        TargetState::from_vector(&(self.f * s.to_vector()))
    }

    /// `F⁻¹` in closed form (shift by `-dt`).
    pub fn f_inverse(&self) -> Matrix4<f64> {
        let mut fi = Matrix4::identity();
        fi[(0, 1)] = -self.dt;
        fi[(2, 3)] = -self.dt;
        fi
    }

    pub fn is_deterministic(&self) -> bool {
        self.q.iter().all(|&v| v == 0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Waveform {
    #[serde(rename = "UMTS")]
    Umts,
    #[serde(rename = "FM")]
    Fm,
    #[serde(rename = "DVB-T")]
    DvbT,
    #[serde(rename = "CPE-802.22")]
    Cpe80222,
    #[serde(rename = "pulse-doppler")]
    PulseDoppler,
}

impl Waveform {
    pub fn label(&self) -> &'static str {
        match self {
            Waveform::Umts => "UMTS",
            Waveform::Fm => "FM",
            Waveform::DvbT => "DVB-T",
            Waveform::Cpe80222 => "CPE-802.22",
            Waveform::PulseDoppler => "pulse-doppler",
        }
    }
}

/// One transmitter-receiver pair of a passive network.
#[derive(Debug, Clone, PartialEq)]
pub struct BistaticChannel {
    pub waveform: Waveform,
    pub tx: Vector2<f64>,
    pub rx: Vector2<f64>,
    pub wavelength: f64,
    /// Measurement covariance of `(range, velocity)` at `reference_snr`.
    pub r0: Matrix2<f64>,
    pub reference_snr: f64,
    /// Transmitter-target and target-receiver distances at which
    /// `reference_snr` holds.
    pub reference_ranges: (f64, f64),
    pub pfa: f64,
}

impl BistaticChannel {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        waveform: Waveform,
        tx: Vector2<f64>,
        rx: Vector2<f64>,
        wavelength: f64,
        r0: Matrix2<f64>,
        reference_snr: f64,
        reference_ranges: (f64, f64),
        pfa: f64,
    ) -> Result<Self> {
        if (tx - rx).norm() < MIN_RANGE {
            return Err(Error::invalid("transmitter and receiver coincide"));
        }
        if !is_spd2(&r0) {
            return Err(Error::invalid("R0 must be symmetric positive definite"));
        }
        if !(reference_snr > 0.0) || !(reference_ranges.0 > 0.0) || !(reference_ranges.1 > 0.0) {
            return Err(Error::invalid("reference snr and ranges must be positive"));
        }
        if !(pfa > 0.0 && pfa < 1.0) {
            return Err(Error::invalid("pfa must lie in (0, 1)"));
        }
        if !(wavelength > 0.0) {
            return Err(Error::invalid("wavelength must be positive"));
        }
        Ok(Self {
            waveform,
            tx,
            rx,
            wavelength,
            r0,
            reference_snr,
            reference_ranges,
            pfa,
        })
    }

    /// Distances (transmitter-target, target-receiver).
    pub fn ranges(&self, state: &TargetState) -> Result<(f64, f64)> {
        let p = state.position();
        let rt = (p - self.tx).norm();
        let rr = (p - self.rx).norm();
        if rt < MIN_RANGE || rr < MIN_RANGE {
            return Err(Error::SingularGeometry(format!(
                "target at ({:.3}, {:.3}) coincides with a {} antenna",
                state.x,
                state.y,
                self.waveform.label()
            )));
        }
        Ok((rt, rr))
    }
}

fn is_spd2(m: &Matrix2<f64>) -> bool {
    (m[(0, 1)] - m[(1, 0)]).abs() <= 1e-12 * m.abs().max() && m.cholesky().is_some()
}

/// A sensor producing `(range, range-rate)` pairs.
pub trait MeasurementModel {
    fn measure(&self, state: &TargetState) -> Result<Vector2<f64>>;
    fn jacobian(&self, state: &TargetState) -> Result<Matrix2x4<f64>>;
}

/// Range and range-rate contribution of one antenna at `site`.
fn leg(p: &Vector2<f64>, vel: &Vector2<f64>, site: &Vector2<f64>) -> (f64, f64, Vector2<f64>, Vector2<f64>) {
    let d = p - site;
    let n = d.norm();
    let u = d / n;
    let rate = u.dot(vel);
    // d(rate)/d(position) = (vel − u (u·vel)) / n
    let drate = (vel - u * rate) / n;
    (n, rate, u, drate)
}

impl MeasurementModel for BistaticChannel {
    fn measure(&self, state: &TargetState) -> Result<Vector2<f64>> {
        self.ranges(state)?;
        let (p, v) = (state.position(), state.velocity());
        let (rt, vt, _, _) = leg(&p, &v, &self.tx);
        let (rr, vr, _, _) = leg(&p, &v, &self.rx);
        Ok(Vector2::new(rt + rr, vt + vr))
    }

    fn jacobian(&self, state: &TargetState) -> Result<Matrix2x4<f64>> {
        self.ranges(state)?;
        let (p, v) = (state.position(), state.velocity());
        let (_, _, ut, dt) = leg(&p, &v, &self.tx);
        let (_, _, ur, dr) = leg(&p, &v, &self.rx);
        let u = ut + ur;
        let dv = dt + dr;
        Ok(Matrix2x4::new(
            u[0], 0.0, u[1], 0.0, //
            dv[0], u[0], dv[1], u[1],
        ))
    }
}

/// A co-located transmitter/receiver measuring range and radial velocity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonostaticRadar {
    pub position: Vector2<f64>,
}

impl MeasurementModel for MonostaticRadar {
    fn measure(&self, state: &TargetState) -> Result<Vector2<f64>> {
        let (p, v) = (state.position(), state.velocity());
        if (p - self.position).norm() < MIN_RANGE {
            return Err(Error::SingularGeometry("target at radar position".into()));
        }
        let (r, rate, _, _) = leg(&p, &v, &self.position);
        Ok(Vector2::new(r, rate))
    }

    fn jacobian(&self, state: &TargetState) -> Result<Matrix2x4<f64>> {
        let (p, v) = (state.position(), state.velocity());
        if (p - self.position).norm() < MIN_RANGE {
            return Err(Error::SingularGeometry("target at radar position".into()));
        }
        let (_, _, u, d) = leg(&p, &v, &self.position);
        Ok(Matrix2x4::new(
            u[0], 0.0, u[1], 0.0, //
            d[0], u[0], d[1], u[1],
        ))
    }
}

/// Noiseless bistatic `(r, v)`.
pub fn bistatic_measure(state: &TargetState, channel: &BistaticChannel) -> Result<(f64, f64)> {
    let z = channel.measure(state)?;
    Ok((z[0], z[1]))
}

pub fn measurement_jacobian(state: &TargetState, channel: &BistaticChannel) -> Result<Matrix2x4<f64>> {
    channel.jacobian(state)
}

/// Bistatic radar-equation SNR scaling `∝ 1/(R_tx² R_rx²)` from the
/// channel's reference point.
pub fn snr_at(state: &TargetState, channel: &BistaticChannel) -> Result<f64> {
    let (rt, rr) = channel.ranges(state)?;
    let (rt0, rr0) = channel.reference_ranges;
    let ratio = (rt0 * rr0) / (rt * rr);
    Ok(channel.reference_snr * ratio * ratio)
}

/// Swerling-1 square-law detection probability `pfa^(1/(1+snr))`.
pub fn detection_probability(snr: f64, pfa: f64) -> f64 {
    if snr.is_infinite() {
        return 1.0;
    }
    pfa.powf(1.0 / (1.0 + snr.max(0.0)))
}

/// `R = R0 · reference_snr / snr`.
pub fn measurement_covariance(channel: &BistaticChannel, snr: f64) -> Result<Matrix2<f64>> {
    if !(snr > 0.0) || !snr.is_finite() {
        return Err(Error::invalid(format!("snr must be positive and finite, got {snr}")));
    }
    Ok(channel.r0 * (channel.reference_snr / snr))
}

/// Receive antenna modelled as a boolean beam gate around its steering
/// direction; inside the beam the gain multiplies the SNR.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Antenna {
    pub gain_db: f64,
    pub hpbw_deg: f64,
}

impl Antenna {
    pub fn gain_linear(&self) -> f64 {
        10f64.powf(self.gain_db / 10.0)
    }

    pub fn in_beam(&self, site: &Vector2<f64>, steer_at: &Vector2<f64>, target: &Vector2<f64>) -> bool {
        let a = steer_at - site;
        let b = target - site;
        let (na, nb) = (a.norm(), b.norm());
        if na < MIN_RANGE || nb < MIN_RANGE {
            return true;
        }
        let cos = (a.dot(&b) / (na * nb)).clamp(-1.0, 1.0);
        cos.acos().to_degrees() <= 0.5 * self.hpbw_deg
    }

    /// SNR seen through the antenna with the beam steered at `steer_at`.
    pub fn gated_snr(&self, state: &TargetState, channel: &BistaticChannel, steer_at: &Vector2<f64>) -> Result<f64> {
        let snr = snr_at(state, channel)?;
        Ok(if self.in_beam(&channel.rx, steer_at, &state.position()) {
            snr * self.gain_linear()
        } else {
            0.0
        })
    }
}

// ---------------------------------------------------------------------------
// Measurements and the EKF
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Measurement {
    Detected { r: f64, v: f64 },
    Missed,
}

impl Measurement {
    pub fn is_valid(&self) -> bool {
        matches!(self, Measurement::Detected { .. })
    }

    pub fn as_vector(&self) -> Option<Vector2<f64>> {
        match *self {
            Measurement::Detected { r, v } => Some(Vector2::new(r, v)),
            Measurement::Missed => None,
        }
    }
}

/// Draws a noisy measurement. Always consumes one uniform and two normals so
/// that runs sharing a stream stay aligned whether or not the target is
/// detected.
pub fn draw_measurement<R: Rng>(
    truth: &TargetState,
    sensor: &impl MeasurementModel,
    r: &Matrix2<f64>,
    pd: f64,
    rng: &mut R,
) -> Result<Measurement> {
    let u: f64 = rng.random();
    let n0: f64 = StandardNormal.sample(rng);
    let n1: f64 = StandardNormal.sample(rng);
    if u >= pd {
        return Ok(Measurement::Missed);
    }
    let l = r
        .cholesky()
        .ok_or_else(|| Error::numerical("measurement covariance not positive definite"))?
        .l();
    let z = sensor.measure(truth)? + l * Vector2::new(n0, n1);
    Ok(Measurement::Detected { r: z[0], v: z[1] })
}

/// Gaussian track belief: filtered moments and the last one-step prediction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackBelief {
    pub mean: Vector4<f64>,
    pub cov: Matrix4<f64>,
    pub pred_mean: Vector4<f64>,
    pub pred_cov: Matrix4<f64>,
}

fn symmetrize(m: &Matrix4<f64>) -> Matrix4<f64> {
    (m + m.transpose()) * 0.5
}

impl TrackBelief {
    pub fn new(mean: Vector4<f64>, cov: Matrix4<f64>) -> Result<Self> {
        if cov.cholesky().is_none() || (cov - cov.transpose()).abs().max() > 1e-10 * cov.abs().max().max(1.0) {
            return Err(Error::invalid("belief covariance must be symmetric positive definite"));
        }
        Ok(Self {
            mean,
            cov,
            pred_mean: mean,
            pred_cov: cov,
        })
    }

    pub fn state(&self) -> TargetState {
        TargetState::from_vector(&self.mean)
    }

    /// Covariance of the next-step prediction without changing `self`.
    pub fn predicted_covariance(&self, model: &MotionModel) -> Matrix4<f64> {
        symmetrize(&(model.f * self.cov * model.f.transpose() + model.q))
    }

    /// Time update; the returned belief's filtered moments equal the prediction.
    pub fn predict(&self, model: &MotionModel) -> Self {
        let pred_mean = model.f * self.mean;
        let pred_cov = self.predicted_covariance(model);
        Self {
            mean: pred_mean,
            cov: pred_cov,
            pred_mean,
            pred_cov,
        }
    }

    /// Measurement update with the Jacobian at the current mean and a
    /// Joseph-form covariance.
    pub fn update(&mut self, sensor: &impl MeasurementModel, r: &Matrix2<f64>, z: &Vector2<f64>) -> Result<()> {
        let s_now = TargetState::from_vector(&self.mean);
        let h = sensor.jacobian(&s_now)?;
        let innov = z - sensor.measure(&s_now)?;
        self.apply_linear(&h, r, &innov)
    }

    /// Linear update `x += K·innov` for the given `H` and `R`.
    pub fn apply_linear(&mut self, h: &Matrix2x4<f64>, r: &Matrix2<f64>, innov: &Vector2<f64>) -> Result<()> {
        let p = self.cov;
        let s = h * p * h.transpose() + r;
        let s_inv = s
            .try_inverse()
            .ok_or_else(|| Error::numerical("innovation covariance not invertible"))?;
        let k: Matrix4x2<f64> = p * h.transpose() * s_inv;
        let ikh = Matrix4::identity() - k * h;
        self.mean += k * innov;
        self.cov = symmetrize(&(ikh * p * ikh.transpose() + k * r * k.transpose()));
        Ok(())
    }

    pub fn is_spd(&self) -> bool {
        self.cov.cholesky().is_some()
    }
}

/// One EKF cycle for any sensor: predict with `(F, Q)` then, if detected,
/// update with the given `R`.
pub fn ekf_step_with(
    belief: &TrackBelief,
    model: &MotionModel,
    sensor: &impl MeasurementModel,
    r: &Matrix2<f64>,
    measurement: &Measurement,
) -> Result<TrackBelief> {
    let mut next = belief.predict(model);
    if let Some(z) = measurement.as_vector() {
        next.update(sensor, r, &z)?;
    }
    Ok(next)
}

/// EKF cycle with `R` taken from the channel's SNR at the predicted mean.
pub fn ekf_step(
    belief: &TrackBelief,
    model: &MotionModel,
    channel: &BistaticChannel,
    measurement: &Measurement,
) -> Result<TrackBelief> {
    let mut next = belief.predict(model);
    if let Some(z) = measurement.as_vector() {
        let snr = snr_at(&TargetState::from_vector(&next.mean), channel)?;
        let r = measurement_covariance(channel, snr)?;
        next.update(channel, &r, &z)?;
    }
    Ok(next)
}
