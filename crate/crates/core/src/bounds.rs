//! Recursive Fisher information, posterior CRLB and the information-metric
//! channel selector for passive tracking.
//!
//! The recursion assumes deterministic target motion (`Q = 0`), so the
//! prior term is `F⁻ᵀ J F⁻¹`. H, R and P_D are evaluated on the true
//! trajectory.

use nalgebra::{Matrix2, Matrix2x4, Matrix4, Vector2};

use crate::error::{Error, Result};
use crate::tracking::{
    detection_probability, measurement_covariance, measurement_jacobian, snr_at, Antenna, BistaticChannel,
    MotionModel, TargetState,
};

const SYM_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FisherInfo {
    pub j: Matrix4<f64>,
}

fn symmetrize(m: &Matrix4<f64>) -> Matrix4<f64> {
    (m + m.transpose()) * 0.5
}

/// `J₀ = C⁻¹` for a symmetric positive definite prior covariance.
pub fn fim_init(prior_cov: &Matrix4<f64>) -> Result<FisherInfo> {
    if (prior_cov - prior_cov.transpose()).abs().max() > SYM_TOL * prior_cov.abs().max().max(1.0) {
        return Err(Error::invalid("prior covariance is not symmetric"));
    }
    let chol = prior_cov
        .cholesky()
        .ok_or_else(|| Error::invalid("prior covariance is not positive definite"))?;
    Ok(FisherInfo {
        j: symmetrize(&chol.inverse()),
    })
}

/// `R⁻¹` and `det(R⁻¹)` through a Cholesky factor of `R`.
pub fn inverse_and_det(r: &Matrix2<f64>) -> Result<(Matrix2<f64>, f64)> {
    let chol = r
        .cholesky()
        .ok_or_else(|| Error::invalid("measurement covariance is not positive definite"))?;
    let l = chol.l();
    let det_r = (l[(0, 0)] * l[(1, 1)]).powi(2);
    Ok((chol.inverse(), 1.0 / det_r))
}

impl FisherInfo {
    /// One step of the information recursion
    /// `J' = F⁻ᵀ J F⁻¹ + P_D Hᵀ R⁻¹ H`.
    pub fn step(&self, model: &MotionModel, h: &Matrix2x4<f64>, r: &Matrix2<f64>, pd: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&pd) {
            return Err(Error::invalid(format!("detection probability {pd} outside [0, 1]")));
        }
        let (r_inv, _) = inverse_and_det(r)?;
        Ok(self.add_information(model, &(h.transpose() * r_inv * h * pd)))
    }

    /// Prior propagation followed by addition of an information term.
    pub fn add_information(&self, model: &MotionModel, term: &Matrix4<f64>) -> Self {
        let fi = model.f_inverse();
        FisherInfo {
            j: symmetrize(&(fi.transpose() * self.j * fi + term)),
        }
    }

    /// Prior propagation without a measurement term.
    pub fn propagate(&self, model: &MotionModel) -> Self {
        self.add_information(model, &Matrix4::zeros())
    }

    /// `J⁻¹`, the PCRLB on the state-estimate MSE.
    pub fn pcrlb(&self) -> Result<Matrix4<f64>> {
        let chol = self
            .j
            .cholesky()
            .ok_or_else(|| Error::numerical("Fisher information is singular"))?;
        Ok(symmetrize(&chol.inverse()))
    }

    /// Square roots of the x and y position bounds.
    pub fn sqrt_pcrlb_position(&self) -> Result<(f64, f64)> {
        let p = self.pcrlb()?;
        Ok((p[(0, 0)].sqrt(), p[(2, 2)].sqrt()))
    }
}

/// Free-function form of [`FisherInfo::step`].
pub fn fim_step(
    j: &FisherInfo,
    model: &MotionModel,
    h: &Matrix2x4<f64>,
    r: &Matrix2<f64>,
    pd: f64,
) -> Result<FisherInfo> {
    j.step(model, h, r, pd)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelInfoMetric {
    pub channel_id: usize,
    pub pd: f64,
    pub det_r_inv: f64,
    pub score: f64,
}

/// Per-channel measurement model at one state: the metric plus the terms
/// entering the information recursion. `h`/`r` are `None` when no target
/// return is available (out of beam).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelTerms {
    pub metric: ChannelInfoMetric,
    pub h: Matrix2x4<f64>,
    pub r: Option<Matrix2<f64>>,
}

impl ChannelTerms {
    /// `P_D Hᵀ R⁻¹ H`, zero without a target return.
    pub fn information(&self) -> Result<Matrix4<f64>> {
        match self.r {
            Some(r) => {
                let (r_inv, _) = inverse_and_det(&r)?;
                Ok(self.h.transpose() * r_inv * self.h * self.metric.pd)
            }
            None => Ok(Matrix4::zeros()),
        }
    }
}

/// Terms for a channel seeing the target with linear SNR `snr`. A zero SNR
/// means no return, so `P_D = 0` and the score vanishes.
pub fn channel_terms_at_snr(
    channel_id: usize,
    channel: &BistaticChannel,
    state: &TargetState,
    snr: f64,
) -> Result<ChannelTerms> {
    channel_terms_split(channel_id, channel, state, snr, snr)
}

/// Detection from `detect_snr`, covariance from `cov_snr`.
fn channel_terms_split(
    channel_id: usize,
    channel: &BistaticChannel,
    state: &TargetState,
    detect_snr: f64,
    cov_snr: f64,
) -> Result<ChannelTerms> {
    let h = measurement_jacobian(state, channel)?;
    if detect_snr <= 0.0 || cov_snr <= 0.0 {
        return Ok(ChannelTerms {
            metric: ChannelInfoMetric {
                channel_id,
                pd: 0.0,
                det_r_inv: 0.0,
                score: 0.0,
            },
            h,
            r: None,
        });
    }
    let pd = detection_probability(detect_snr, channel.pfa);
    let r = measurement_covariance(channel, cov_snr)?;
    let (_, det_r_inv) = inverse_and_det(&r)?;
    Ok(ChannelTerms {
        metric: ChannelInfoMetric {
            channel_id,
            pd,
            det_r_inv,
            score: pd * det_r_inv,
        },
        h,
        r: Some(r),
    })
}

/// Terms with an optional receive antenna steered at `steer_at`.
///
/// `reference_snr` is the isotropic figure and `R0` is the covariance of the
/// steered beam at the reference geometry, so in beam the gain raises the
/// detection SNR while `R` follows the range dependence alone. Out of beam
/// there is no return.
pub fn channel_terms(
    channel_id: usize,
    channel: &BistaticChannel,
    state: &TargetState,
    antenna: Option<&Antenna>,
    steer_at: &Vector2<f64>,
) -> Result<ChannelTerms> {
    let snr = snr_at(state, channel)?;
    match antenna {
        None => channel_terms_split(channel_id, channel, state, snr, snr),
        Some(a) if a.in_beam(&channel.rx, steer_at, &state.position()) => {
            channel_terms_split(channel_id, channel, state, snr * a.gain_linear(), snr)
        }
        Some(_) => channel_terms_split(channel_id, channel, state, 0.0, 0.0),
    }
}

/// `P_D · det(R⁻¹)` for an isotropic receiver.
pub fn channel_metric(channel_id: usize, channel: &BistaticChannel, state: &TargetState) -> Result<ChannelInfoMetric> {
    Ok(channel_terms(channel_id, channel, state, None, &state.position())?.metric)
}

/// Highest score wins; ties go to the lowest channel id.
pub fn select_channel(metrics: &[ChannelInfoMetric]) -> Result<usize> {
    let mut best: Option<&ChannelInfoMetric> = None;
    for m in metrics {
        best = match best {
            None => Some(m),
            Some(b) if m.score > b.score || (m.score == b.score && m.channel_id < b.channel_id) => Some(m),
            keep => keep,
        };
    }
    best.map(|m| m.channel_id)
        .ok_or_else(|| Error::invalid("no channels to select from"))
}

/// Deterministic passive-tracking scenario for the bound recursions.
#[derive(Debug, Clone, PartialEq)]
pub struct PassiveScenario {
    pub channels: Vec<BistaticChannel>,
    pub antenna: Option<Antenna>,
    pub model: MotionModel,
    pub initial: TargetState,
    pub steps: usize,
    pub prior_cov: Matrix4<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundStep {
    pub step: usize,
    pub state: TargetState,
    pub selected: usize,
    pub fisher: FisherInfo,
    pub sqrt_pcrlb_x: f64,
    pub sqrt_pcrlb_y: f64,
    pub scores: Vec<f64>,
}

/// Dynamic-selection series together with every fixed-channel series,
/// all on the same trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct PassiveRun {
    pub dynamic: Vec<BoundStep>,
    pub fixed: Vec<Vec<BoundStep>>,
}

impl PassiveRun {
    /// Number of steps at which the selected channel changes.
    pub fn crossovers(&self) -> usize {
        self.dynamic.windows(2).filter(|w| w[0].selected != w[1].selected).count()
    }
}

impl PassiveScenario {
    pub fn validate(&self) -> Result<()> {
        if self.channels.is_empty() {
            return Err(Error::invalid("scenario needs at least one channel"));
        }
        if !self.model.is_deterministic() {
            return Err(Error::invalid("the information recursion assumes Q = 0"));
        }
        fim_init(&self.prior_cov)?;
        Ok(())
    }

    /// True states `x_1 .. x_steps`.
    pub fn trajectory(&self) -> Vec<TargetState> {
        let mut s = self.initial;
        (0..self.steps)
            .map(|_| {
                s = self.model.propagate(&s);
                s
            })
            .collect()
    }

    /// Runs the dynamic selector and every single-channel baseline.
    pub fn run(&self) -> Result<PassiveRun> {
        self.validate()?;
        let j0 = fim_init(&self.prior_cov)?;
        let n = self.channels.len();
        let mut j_dyn = j0;
        let mut j_fixed = vec![j0; n];
        let mut dynamic = Vec::with_capacity(self.steps);
        let mut fixed: Vec<Vec<BoundStep>> = vec![Vec::with_capacity(self.steps); n];
        for (k, state) in self.trajectory().into_iter().enumerate() {
            let steer = state.position();
            let terms = self
                .channels
                .iter()
                .enumerate()
                .map(|(i, ch)| channel_terms(i, ch, &state, self.antenna.as_ref(), &steer))
                .collect::<Result<Vec<_>>>()?;
            let metrics: Vec<_> = terms.iter().map(|t| t.metric).collect();
            let scores: Vec<f64> = metrics.iter().map(|m| m.score).collect();
            let sel = select_channel(&metrics)?;
            let infos = terms.iter().map(|t| t.information()).collect::<Result<Vec<_>>>()?;

            j_dyn = j_dyn.add_information(&self.model, &infos[sel]);
            dynamic.push(bound_step(k + 1, state, sel, j_dyn, scores.clone())?);
            for i in 0..n {
                j_fixed[i] = j_fixed[i].add_information(&self.model, &infos[i]);
                fixed[i].push(bound_step(k + 1, state, i, j_fixed[i], scores.clone())?);
            }
        }
        Ok(PassiveRun { dynamic, fixed })
    }
}

fn bound_step(step: usize, state: TargetState, selected: usize, fisher: FisherInfo, scores: Vec<f64>) -> Result<BoundStep> {
    let (sx, sy) = fisher.sqrt_pcrlb_position()?;
    Ok(BoundStep {
        step,
        state,
        selected,
        fisher,
        sqrt_pcrlb_x: sx,
        sqrt_pcrlb_y: sy,
        scores,
    })
}

/// Dynamic channel selection over the scenario trajectory.
pub fn fim_track_with_selection(scenario: &PassiveScenario) -> Result<Vec<BoundStep>> {
    Ok(scenario.run()?.dynamic)
}
