//! Symbiotic scheduling of CPE transmitters of opportunity.
//!
//! A passive receiver tracks a target using whichever CPEs happen to be
//! transmitting. Each frame the scheduler may ask a few silent CPEs to
//! transmit, choosing the smallest number `n ≤ n_max` such that
//! `λ · trace(P(S_n)) ≤ trace(P(S_ideal))`, where `S_ideal` is the best
//! size-`M` subset of the whole network.

use nalgebra::{Matrix2, Matrix4, Vector2};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::tracking::{
    detection_probability, measurement_covariance, measurement_jacobian, snr_at, BistaticChannel, MeasurementModel,
    MotionModel, TargetState, TrackBelief,
};

/// Largest network for which the ideal subset is found exhaustively.
pub const EXHAUSTIVE_LIMIT: usize = 20;

#[derive(Debug, Clone, PartialEq)]
pub struct CpeNetwork {
    pub cpes: Vec<BistaticChannel>,
    /// Sorted ids of CPEs transmitting on their own this frame.
    pub active: Vec<usize>,
    pub m: usize,
    pub n_max: usize,
    /// Restrict activation to members of `S_ideal`.
    pub ideal_only: bool,
}

impl CpeNetwork {
    pub fn new(cpes: Vec<BistaticChannel>, m: usize, n_max: usize) -> Result<Self> {
        let net = Self {
            cpes,
            active: Vec::new(),
            m,
            n_max,
            ideal_only: false,
        };
        net.validate()?;
        Ok(net)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.cpes.len();
        if !(self.n_max <= self.m && self.m <= n) {
            return Err(Error::invalid(format!(
                "need 0 <= n_max <= M <= N, got n_max={}, M={}, N={n}",
                self.n_max, self.m
            )));
        }
        if self.active.windows(2).any(|w| w[0] >= w[1]) || self.active.iter().any(|&i| i >= n) {
            return Err(Error::invalid("active set must be sorted, unique and in range"));
        }
        Ok(())
    }

    pub fn set_active(&mut self, mut active: Vec<usize>) -> Result<()> {
        active.sort_unstable();
        active.dedup();
        self.active = active;
        self.validate()
    }

    pub fn len(&self) -> usize {
        self.cpes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cpes.is_empty()
    }
}

/// Predicted information `(F P Fᵀ + Q)⁻¹` and every CPE's
/// `P_D Hᵀ R⁻¹ H`, all at the predicted mean.
#[derive(Debug, Clone, PartialEq)]
pub struct InformationTerms {
    pub prior: Matrix4<f64>,
    pub terms: Vec<Matrix4<f64>>,
}

impl InformationTerms {
    pub fn compute(belief: &TrackBelief, model: &MotionModel, cpes: &[BistaticChannel]) -> Result<Self> {
        let p_pred = belief.predicted_covariance(model);
        let prior = p_pred
            .cholesky()
            .ok_or_else(|| Error::numerical("predicted covariance is singular"))?
            .inverse();
        let at = TargetState::from_vector(&(model.f * belief.mean));
        let terms = cpes.iter().map(|c| cpe_information(c, &at)).collect::<Result<Vec<_>>>()?;
        Ok(Self { prior, terms })
    }

    pub fn information(&self, subset: &[usize]) -> Matrix4<f64> {
        subset.iter().fold(self.prior, |j, &i| j + self.terms[i])
    }

    /// `trace(J(S)⁻¹)`.
    pub fn trace(&self, subset: &[usize]) -> Result<f64> {
        trace_of_inverse(&self.information(subset))
    }
}

fn trace_of_inverse(j: &Matrix4<f64>) -> Result<f64> {
    Ok(j.cholesky()
        .ok_or_else(|| Error::numerical("fused information is singular"))?
        .inverse()
        .trace())
}

/// `P_D Hᵀ R⁻¹ H` for one CPE at `state`.
pub fn cpe_information(channel: &BistaticChannel, state: &TargetState) -> Result<Matrix4<f64>> {
    let snr = snr_at(state, channel)?;
    let pd = detection_probability(snr, channel.pfa);
    let r = measurement_covariance(channel, snr)?;
    let h = measurement_jacobian(state, channel)?;
    let r_inv = r
        .cholesky()
        .ok_or_else(|| Error::numerical("CPE covariance not positive definite"))?
        .inverse();
    Ok(h.transpose() * r_inv * h * pd)
}

/// Trace of the fused predicted covariance for an explicit subset.
pub fn predicted_trace(
    belief: &TrackBelief,
    model: &MotionModel,
    network: &CpeNetwork,
    subset: &[usize],
) -> Result<f64> {
    if subset.iter().any(|&i| i >= network.len()) {
        return Err(Error::invalid("subset refers to an unknown CPE"));
    }
    InformationTerms::compute(belief, model, &network.cpes)?.trace(subset)
}

/// Adds the candidate with the smallest resulting trace to `base`; ties go
/// to the lowest id. Returns the chosen id and the new trace.
fn best_addition(terms: &InformationTerms, base: &[usize], candidates: &[usize]) -> Result<Option<(usize, f64)>> {
    let j_base = terms.information(base);
    let mut best: Option<(usize, f64)> = None;
    for &c in candidates {
        let t = trace_of_inverse(&(j_base + terms.terms[c]))?;
        if best.is_none_or(|(_, bt)| t < bt) {
            best = Some((c, t));
        }
    }
    Ok(best)
}

/// Greedy forward selection of `m` CPEs from `pool` starting from `start`.
pub fn greedy_subset(terms: &InformationTerms, start: &[usize], pool: &[usize], m: usize) -> Result<(Vec<usize>, f64)> {
    let mut chosen = start.to_vec();
    let mut remaining: Vec<usize> = pool.iter().copied().filter(|i| !start.contains(i)).collect();
    let mut trace = terms.trace(&chosen)?;
    for _ in 0..m {
        match best_addition(terms, &chosen, &remaining)? {
            Some((c, t)) => {
                chosen.push(c);
                remaining.retain(|&i| i != c);
                trace = t;
            }
            None => break,
        }
    }
    Ok((chosen, trace))
}

/// Visits every size-`k` subset of `0..n` in lexicographic order.
pub fn for_each_combination(n: usize, k: usize, mut f: impl FnMut(&[usize]) -> Result<()>) -> Result<()> {
    if k > n {
        return Ok(());
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        f(&idx)?;
        let mut i = k;
        while i > 0 && idx[i - 1] == i - 1 + n - k {
            i -= 1;
        }
        if i == 0 {
            return Ok(());
        }
        idx[i - 1] += 1;
        for j in i..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// Best size-`M` subset: exhaustive for small networks, greedy otherwise.
/// Returned ids are sorted.
pub fn ideal_subset_from_terms(terms: &InformationTerms, n: usize, m: usize) -> Result<(Vec<usize>, f64)> {
    if m > n {
        return Err(Error::invalid("M exceeds network size"));
    }
    let (mut set, trace) = if n <= EXHAUSTIVE_LIMIT {
        let mut best: Option<(Vec<usize>, f64)> = None;
        for_each_combination(n, m, |s| {
            let t = terms.trace(s)?;
            if best.as_ref().is_none_or(|(_, bt)| t < *bt) {
                best = Some((s.to_vec(), t));
            }
            Ok(())
        })?;
        best.expect("at least the empty combination exists")
    } else {
        let pool: Vec<usize> = (0..n).collect();
        greedy_subset(terms, &[], &pool, m)?
    };
    set.sort_unstable();
    Ok((set, trace))
}

pub fn ideal_subset(network: &CpeNetwork, belief: &TrackBelief, model: &MotionModel) -> Result<(Vec<usize>, f64)> {
    network.validate()?;
    let terms = InformationTerms::compute(belief, model, &network.cpes)?;
    ideal_subset_from_terms(&terms, network.len(), network.m)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScheduleDecision {
    /// CPEs asked to transmit, in selection order.
    pub activated: Vec<usize>,
    pub achieved_trace: f64,
    pub ideal_trace: f64,
    pub lambda_sym: f64,
}

impl ScheduleDecision {
    pub fn n(&self) -> usize {
        self.activated.len()
    }

    pub fn criterion_met(&self) -> bool {
        self.lambda_sym * self.achieved_trace <= self.ideal_trace
    }
}

/// Greedy augmentation of the active set given a precomputed ideal.
pub fn schedule_with_terms(
    terms: &InformationTerms,
    network: &CpeNetwork,
    ideal: &[usize],
    ideal_trace: f64,
    lambda_sym: f64,
) -> Result<ScheduleDecision> {
    if !(0.0..1.0).contains(&lambda_sym) {
        return Err(Error::invalid("lambda_sym must lie in [0, 1)"));
    }
    let mut current = network.active.clone();
    let mut achieved = terms.trace(&current)?;
    let mut candidates: Vec<usize> = (0..network.len())
        .filter(|i| !network.active.contains(i))
        .filter(|i| !network.ideal_only || ideal.contains(i))
        .collect();
    let mut activated = Vec::new();
    while lambda_sym * achieved > ideal_trace && activated.len() < network.n_max {
        match best_addition(terms, &current, &candidates)? {
            Some((c, t)) => {
                current.push(c);
                activated.push(c);
                candidates.retain(|&i| i != c);
                achieved = t;
            }
            None => break,
        }
    }
    Ok(ScheduleDecision {
        activated,
        achieved_trace: achieved,
        ideal_trace,
        lambda_sym,
    })
}

pub fn schedule_frame(
    network: &CpeNetwork,
    belief: &TrackBelief,
    model: &MotionModel,
    lambda_sym: f64,
) -> Result<ScheduleDecision> {
    network.validate()?;
    let terms = InformationTerms::compute(belief, model, &network.cpes)?;
    let (ideal, ideal_trace) = ideal_subset_from_terms(&terms, network.len(), network.m)?;
    schedule_with_terms(&terms, network, &ideal, ideal_trace, lambda_sym)
}

// ---------------------------------------------------------------------------
// Scenario
// ---------------------------------------------------------------------------

/// Uniform positions in a disc of `radius` around `centre`.
pub fn place_in_disc<R: Rng>(n: usize, centre: Vector2<f64>, radius: f64, rng: &mut R) -> Vec<Vector2<f64>> {
    (0..n)
        .map(|_| {
            let r = radius * rng.random::<f64>().sqrt();
            let a = std::f64::consts::TAU * rng.random::<f64>();
            centre + Vector2::new(r * a.cos(), r * a.sin())
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SymbioticScenario {
    pub network: CpeNetwork,
    pub model: MotionModel,
    pub initial: TargetState,
    pub prior_cov: Matrix4<f64>,
    pub steps: usize,
    pub p_active: f64,
    pub lambda_sym: f64,
}

impl SymbioticScenario {
    pub fn validate(&self) -> Result<()> {
        self.network.validate()?;
        if !(0.0..=1.0).contains(&self.p_active) {
            return Err(Error::invalid("p_active must lie in [0, 1]"));
        }
        if !(0.0..1.0).contains(&self.lambda_sym) {
            return Err(Error::invalid("lambda_sym must lie in [0, 1)"));
        }
        if self.steps == 0 {
            return Err(Error::invalid("scenario needs at least one step"));
        }
        TrackBelief::new(self.initial.to_vector(), self.prior_cov)?;
        Ok(())
    }
}

/// Tracker variants run side by side on common random numbers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Policy {
    /// Only spontaneously active CPEs.
    Passive,
    /// Active CPEs plus scheduled activations.
    Symbiotic,
    /// The ideal size-M subset every frame.
    Ideal,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymbioticStep {
    pub pos_err_sq: f64,
    pub n: usize,
    pub trace_achieved: f64,
    pub trace_ideal: f64,
}

/// Per-step records of one Monte Carlo trial for each policy.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbioticTrial {
    pub passive: Vec<SymbioticStep>,
    pub symbiotic: Vec<SymbioticStep>,
    pub ideal: Vec<SymbioticStep>,
}

impl SymbioticTrial {
    pub fn series(&self, policy: Policy) -> &[SymbioticStep] {
        match policy {
            Policy::Passive => &self.passive,
            Policy::Symbiotic => &self.symbiotic,
            Policy::Ideal => &self.ideal,
        }
    }
}

struct FrameNoise {
    active: Vec<usize>,
    uniform: Vec<f64>,
    normals: Vec<Vector2<f64>>,
}

struct Tracker {
    belief: TrackBelief,
    log: Vec<SymbioticStep>,
}

impl Tracker {
    fn step(
        &mut self,
        scenario: &SymbioticScenario,
        truth: &TargetState,
        noise: &FrameNoise,
        policy: Policy,
    ) -> Result<()> {
        let net = &scenario.network;
        let terms = InformationTerms::compute(&self.belief, &scenario.model, &net.cpes)?;
        let (ideal, ideal_trace) = ideal_subset_from_terms(&terms, net.len(), net.m)?;
        let (used, n, achieved) = match policy {
            Policy::Passive => (noise.active.clone(), 0, terms.trace(&noise.active)?),
            Policy::Ideal => (ideal.clone(), 0, ideal_trace),
            Policy::Symbiotic => {
                let mut frame = net.clone();
                frame.active = noise.active.clone();
                let d = schedule_with_terms(&terms, &frame, &ideal, ideal_trace, scenario.lambda_sym)?;
                let mut used = noise.active.clone();
                used.extend_from_slice(&d.activated);
                used.sort_unstable();
                (used, d.n(), d.achieved_trace)
            }
        };

        let mut next = self.belief.predict(&scenario.model);
        for &i in &used {
            let ch = &net.cpes[i];
            let snr_true = snr_at(truth, ch)?;
            if noise.uniform[i] >= detection_probability(snr_true, ch.pfa) {
                continue;
            }
            let z = draw_with(truth, ch, &measurement_covariance(ch, snr_true)?, &noise.normals[i])?;
            let snr_pred = snr_at(&next.state(), ch)?;
            next.update(ch, &measurement_covariance(ch, snr_pred)?, &z)?;
        }
        if !next.is_spd() {
            return Err(Error::numerical("track covariance lost definiteness"));
        }
        self.belief = next;
        let err = self.belief.state().position() - truth.position();
        self.log.push(SymbioticStep {
            pos_err_sq: err.norm_squared(),
            n,
            trace_achieved: achieved,
            trace_ideal: ideal_trace,
        });
        Ok(())
    }
}

fn draw_with(
    truth: &TargetState,
    ch: &BistaticChannel,
    r: &Matrix2<f64>,
    normals: &Vector2<f64>,
) -> Result<Vector2<f64>> {
    let l = r
        .cholesky()
        .ok_or_else(|| Error::numerical("measurement covariance not positive definite"))?
        .l();
    Ok(ch.measure(truth)? + l * normals)
}

/// One Monte Carlo trial of all three policies on shared randomness.
pub fn run_symbiotic_trial<R: Rng>(scenario: &SymbioticScenario, rng: &mut R) -> Result<SymbioticTrial> {
    scenario.validate()?;
    let n = scenario.network.len();
    let l0 = scenario
        .prior_cov
        .cholesky()
        .ok_or_else(|| Error::invalid("prior covariance not positive definite"))?
        .l();
    let e0 = l0 * nalgebra::Vector4::from_fn(|_, _| StandardNormal.sample(rng));
    let start = TrackBelief::new(scenario.initial.to_vector() + e0, scenario.prior_cov)?;
    let mut trackers: Vec<Tracker> = (0..3)
        .map(|_| Tracker {
            belief: start,
            log: Vec::with_capacity(scenario.steps),
        })
        .collect();
    let mut truth = scenario.initial;
    for _ in 0..scenario.steps {
        truth = scenario.model.propagate(&truth);
        let mut noise = FrameNoise {
            active: Vec::new(),
            uniform: Vec::with_capacity(n),
            normals: Vec::with_capacity(n),
        };
        for i in 0..n {
            if rng.random::<f64>() < scenario.p_active {
                noise.active.push(i);
            }
            noise.uniform.push(rng.random());
            noise.normals.push(Vector2::new(StandardNormal.sample(rng), StandardNormal.sample(rng)));
        }
        for (tracker, policy) in trackers.iter_mut().zip([Policy::Passive, Policy::Symbiotic, Policy::Ideal]) {
            tracker.step(scenario, &truth, &noise, policy)?;
        }
    }
    let mut logs = trackers.into_iter().map(|t| t.log);
    Ok(SymbioticTrial {
        passive: logs.next().unwrap(),
        symbiotic: logs.next().unwrap(),
        ideal: logs.next().unwrap(),
    })
}
