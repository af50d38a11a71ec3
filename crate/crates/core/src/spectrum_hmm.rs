//! Two-state hidden Markov model of primary-user channel occupancy.
//!
//! Matrix convention (column-stochastic, read carefully before touching the
//! indexing):
//!
//! * `A[(h, k)] = Pr[S_t = h | S_{t-1} = k]`, so every **column** of `A` sums to 1.
//! * `B[(o, k)] = Pr[O_t = o | S_t = k]`, so every **column** of `B` sums to 1.
//!   `B[(1, 0)]` is the detector false-alarm probability and `B[(0, 1)]` the
//!   missed-detection probability.
//!
//! State and observation index 0 means "free", index 1 means "busy".
//!
//! The filtered belief `gamma` is `Pr[S_t | O_1..O_t]` for the most recent slot.
//! The spectrum-opportunity probability for the next slot is
//! `gamma(0)·a00 + gamma(1)·a01`.

use std::collections::VecDeque;

use nalgebra::Matrix2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Column-sum tolerance used when validating probability matrices.
pub const STOCHASTIC_TOL: f64 = 1e-9;

/// Bounds applied to transition estimates before they are used for decisions.
pub const TRANSITION_CLAMP: f64 = 1e-6;

/// Occupancy of a channel slot, or a detector's declaration about it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Occupancy {
    Free,
    Busy,
}

impl Occupancy {
    #[inline]
    pub fn index(self) -> usize {
        match self {
            Occupancy::Free => 0,
            Occupancy::Busy => 1,
        }
    }

    #[inline]
    pub fn from_index(i: usize) -> Self {
        if i == 0 {
            Occupancy::Free
        } else {
            Occupancy::Busy
        }
    }

    #[inline]
    pub fn is_busy(self) -> bool {
        self == Occupancy::Busy
    }
}

// ---------------------------------------------------------------------------
// Model
// ---------------------------------------------------------------------------

/// Primary-user dynamics `(A, B, pi)` plus the filtered occupancy belief.
#[derive(Debug, Clone, PartialEq)]
pub struct HmmModel {
    a: Matrix2<f64>,
    b: Matrix2<f64>,
    pi: [f64; 2],
    gamma: [f64; 2],
    /// Number of observations folded into `gamma`. While zero, the next
    /// filter step uses `pi` as its prior instead of `A·gamma`.
    filtered: u64,
}

fn check_column_stochastic(m: &Matrix2<f64>, name: &str) -> Result<()> {
    for k in 0..2 {
        let col = m.column(k);
        if col.iter().any(|&p| !(0.0..=1.0).contains(&p) || !p.is_finite()) {
            return Err(Error::invalid(format!("{name} has an entry outside [0, 1]")));
        }
        let s = col.sum();
        if (s - 1.0).abs() > STOCHASTIC_TOL {
            return Err(Error::invalid(format!(
                "column {k} of {name} sums to {s}, expected 1"
            )));
        }
    }
    Ok(())
}

fn check_distribution(p: &[f64; 2], name: &str) -> Result<()> {
    if p.iter().any(|&x| !(0.0..=1.0).contains(&x) || !x.is_finite()) {
        return Err(Error::invalid(format!("{name} has an entry outside [0, 1]")));
    }
    if (p[0] + p[1] - 1.0).abs() > STOCHASTIC_TOL {
        return Err(Error::invalid(format!("{name} does not sum to 1")));
    }
    Ok(())
}

impl HmmModel {
    /// Builds a model with no filtering history; `gamma` starts at `pi`.
    pub fn new(a: Matrix2<f64>, b: Matrix2<f64>, pi: [f64; 2]) -> Result<Self> {
        check_column_stochastic(&a, "A")?;
        check_column_stochastic(&b, "B")?;
        check_distribution(&pi, "pi")?;
        Ok(Self {
            a,
            b,
            pi,
            gamma: pi,
            filtered: 0,
        })
    }

    /// Maximum-entropy starting point: uniform `A` and `pi`.
    pub fn uninformed(b: Matrix2<f64>) -> Result<Self> {
        Self::new(Matrix2::repeat(0.5), b, [0.5, 0.5])
    }

    /// Replaces the belief, marking it as a posterior for the latest slot.
    pub fn with_gamma(mut self, gamma: [f64; 2]) -> Result<Self> {
        check_distribution(&gamma, "gamma")?;
        self.gamma = gamma;
        self.filtered = self.filtered.max(1);
        Ok(self)
    }

    pub fn a(&self) -> &Matrix2<f64> {
        &self.a
    }

    pub fn b(&self) -> &Matrix2<f64> {
        &self.b
    }

    pub fn pi(&self) -> [f64; 2] {
        self.pi
    }

    pub fn gamma(&self) -> [f64; 2] {
        self.gamma
    }

    pub fn slots_filtered(&self) -> u64 {
        self.filtered
    }

    /// Installs new transition and initial-state estimates, keeping the belief.
    pub fn set_dynamics(&mut self, a: Matrix2<f64>, pi: [f64; 2]) -> Result<()> {
        check_column_stochastic(&a, "A")?;
        check_distribution(&pi, "pi")?;
        self.a = a;
        self.pi = pi;
        Ok(())
    }

    /// Forward-filter step: `gamma'(h) ∝ b_O(h) · Σ_k a_hk · gamma(k)`.
    pub fn filter_update(&mut self, observation: Occupancy) -> Result<[f64; 2]> {
        let prior = if self.filtered == 0 {
            self.pi
        } else {
            let g = self.gamma;
            [
                self.a[(0, 0)] * g[0] + self.a[(0, 1)] * g[1],
                self.a[(1, 0)] * g[0] + self.a[(1, 1)] * g[1],
            ]
        };
        let o = observation.index();
        let u0 = self.b[(o, 0)] * prior[0];
        let u1 = self.b[(o, 1)] * prior[1];
        let total = u0 + u1;
        if !(total > 0.0) {
            return Err(Error::DegenerateModel(format!(
                "observation {observation:?} has zero likelihood under the model"
            )));
        }
        self.gamma = [u0 / total, u1 / total];
        self.filtered += 1;
        Ok(self.gamma)
    }

    /// Probability that the next slot is free.
    pub fn spectrum_opportunity(&self) -> f64 {
        let p = self.gamma[0] * self.a[(0, 0)] + self.gamma[1] * self.a[(0, 1)];
        p.clamp(0.0, 1.0)
    }
}

/// Stationary distribution of a column-stochastic 2×2 transition matrix.
pub fn stationary_distribution(a: &Matrix2<f64>) -> [f64; 2] {
    let to_busy = a[(1, 0)];
    let to_free = a[(0, 1)];
    let s = to_busy + to_free;
    if s == 0.0 {
        return [0.5, 0.5];
    }
    [to_free / s, to_busy / s]
}

/// Clamps each column's entries into `[TRANSITION_CLAMP, 1 − TRANSITION_CLAMP]`
/// while keeping the column stochastic.
pub fn clamp_transitions(a: &Matrix2<f64>) -> Matrix2<f64> {
    let mut out = *a;
    for k in 0..2 {
        let stay_free = a[(0, k)].clamp(TRANSITION_CLAMP, 1.0 - TRANSITION_CLAMP);
        out[(0, k)] = stay_free;
        out[(1, k)] = 1.0 - stay_free;
    }
    out
}

// ---------------------------------------------------------------------------
// Simulation
// ---------------------------------------------------------------------------

#[inline]
fn draw(rng: &mut impl Rng, p_busy: f64) -> Occupancy {
    if rng.random::<f64>() < p_busy {
        Occupancy::Busy
    } else {
        Occupancy::Free
    }
}

/// Draws a true-state sequence from `(pi, A)` and detector outputs from `B`.
pub fn simulate_channel(
    model: &HmmModel,
    slots: usize,
    seed: u64,
) -> Result<(Vec<Occupancy>, Vec<Occupancy>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    simulate_channel_with(model, slots, &mut rng)
}

pub fn simulate_channel_with<R: Rng>(
    model: &HmmModel,
    slots: usize,
    rng: &mut R,
) -> Result<(Vec<Occupancy>, Vec<Occupancy>)> {
    if slots == 0 {
        return Err(Error::invalid("slots must be at least 1"));
    }
    check_column_stochastic(&model.a, "A")?;
    check_column_stochastic(&model.b, "B")?;
    let mut states = Vec::with_capacity(slots);
    let mut obs = Vec::with_capacity(slots);
    let mut s = draw(rng, model.pi[1]);
    for t in 0..slots {
        if t > 0 {
            s = draw(rng, model.a[(1, s.index())]);
        }
        states.push(s);
        obs.push(draw(rng, model.b[(1, s.index())]));
    }
    Ok((states, obs))
}

// ---------------------------------------------------------------------------
// Decisions
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Decision {
    Transmit,
    Hold,
}

/// Transmit only when `p_so` is strictly greater than `lambda`.
#[inline]
pub fn transmit_decision(p_so: f64, lambda: f64) -> Decision {
    if p_so > lambda {
        Decision::Transmit
    } else {
        Decision::Hold
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ErrorEvent {
    None,
    /// Held while the channel was free (lost opportunity, e0).
    LostOpportunity,
    /// Transmitted while the channel was busy (collision, e1).
    Collision,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DecisionRecord {
    pub slot: u64,
    pub decision: Decision,
    pub truth: Occupancy,
    pub event: ErrorEvent,
}

impl DecisionRecord {
    pub fn new(slot: u64, decision: Decision, truth: Occupancy) -> Self {
        let event = match (decision, truth) {
            (Decision::Hold, Occupancy::Free) => ErrorEvent::LostOpportunity,
            (Decision::Transmit, Occupancy::Busy) => ErrorEvent::Collision,
            _ => ErrorEvent::None,
        };
        Self {
            slot,
            decision,
            truth,
            event,
        }
    }
}

// ---------------------------------------------------------------------------
// Observation window
// ---------------------------------------------------------------------------

/// The most recent `capacity` detector outputs, oldest first.
#[derive(Debug, Clone)]
pub struct ObservationWindow {
    buf: VecDeque<Occupancy>,
    capacity: usize,
}

impl ObservationWindow {
    pub fn new(capacity: usize) -> Result<Self> {
        if capacity == 0 {
            return Err(Error::invalid("window capacity must be positive"));
        }
        Ok(Self {
            buf: VecDeque::with_capacity(capacity),
            capacity,
        })
    }

    pub fn from_observations(capacity: usize, obs: &[Occupancy]) -> Result<Self> {
        let mut w = Self::new(capacity)?;
        for &o in obs {
            w.push(o);
        }
        Ok(w)
    }

    pub fn push(&mut self, o: Occupancy) {
        if self.buf.len() == self.capacity {
            self.buf.pop_front();
        }
        self.buf.push_back(o);
    }

    pub fn len(&self) -> usize {
        self.buf.len()
    }

    pub fn is_empty(&self) -> bool {
        self.buf.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn iter(&self) -> impl Iterator<Item = Occupancy> + '_ {
        self.buf.iter().copied()
    }
}

// ---------------------------------------------------------------------------
// Baum-Welch
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
pub struct BaumWelchFit {
    pub a: Matrix2<f64>,
    pub pi: [f64; 2],
    /// Log-likelihood evaluated at the start of each iteration.
    pub log_likelihoods: Vec<f64>,
    pub iterations: usize,
}

/// Scaled forward-backward re-estimation of `A` and `pi` with `B` held fixed.
///
/// Holds scratch buffers so the per-slot refit in the spectrum loop does not
/// allocate.
#[derive(Debug, Default, Clone)]
pub struct BaumWelch {
    obs: Vec<u8>,
    alpha: Vec<[f64; 2]>,
    scale: Vec<f64>,
}

struct Expectations {
    log_likelihood: f64,
    /// `xi[h][k] = Σ_t Pr[S_t = k, S_{t+1} = h | O]`.
    xi: [[f64; 2]; 2],
    first: [f64; 2],
}

impl BaumWelch {
    pub fn new() -> Self {
        Self::default()
    }

    fn expectations(&mut self, a: &Matrix2<f64>, b: &Matrix2<f64>, pi: [f64; 2]) -> Result<Expectations> {
        // Lazy scaling: alpha is renormalized only when its mass nears
        // underflow. Every xi term then carries the same constant factor, so
        // the re-estimates are unchanged, and no divide sits on the
        // per-observation dependency chain.
        const RESCALE_BELOW: f64 = 1e-150;
        let t_len = self.obs.len();
        self.alpha.clear();
        self.scale.clear();
        let emit = [[b[(0, 0)], b[(0, 1)]], [b[(1, 0)], b[(1, 1)]]];
        // m[o] = diag(b_o) A, one step of the forward recursion for symbol o.
        let m = emit.map(|e| [[e[0] * a[(0, 0)], e[0] * a[(0, 1)]], [e[1] * a[(1, 0)], e[1] * a[(1, 1)]]]);

        let mut log_likelihood = 0.0;
        for t in 0..t_len {
            let o = self.obs[t] as usize;
            let mut u = if t == 0 {
                [emit[o][0] * pi[0], emit[o][1] * pi[1]]
            } else {
                let p = self.alpha[t - 1];
                let mo = &m[o];
                [mo[0][0] * p[0] + mo[0][1] * p[1], mo[1][0] * p[0] + mo[1][1] * p[1]]
            };
            let mass = u[0] + u[1];
            if !(mass > 0.0) {
                return Err(Error::DegenerateModel(format!(
                    "observation at position {t} has zero likelihood"
                )));
            }
            let inv = if mass < RESCALE_BELOW {
                log_likelihood += mass.ln();
                let inv = 1.0 / mass;
                u = [u[0] * inv, u[1] * inv];
                inv
            } else {
                1.0
            };
            self.alpha.push(u);
            self.scale.push(inv);
        }
        let last = self.alpha[t_len - 1];
        log_likelihood += (last[0] + last[1]).ln();

        // xi[h][k] accumulates alpha_t(k) m[o_{t+1}][h][k] beta_{t+1}(h).
        let mut xi = [[0.0; 2]; 2];
        let mut beta = [1.0, 1.0];
        for t in (0..t_len - 1).rev() {
            let mo = &m[self.obs[t + 1] as usize];
            let inv = self.scale[t + 1];
            if inv != 1.0 {
                beta = [beta[0] * inv, beta[1] * inv];
            }
            let al = self.alpha[t];
            xi[0][0] += al[0] * mo[0][0] * beta[0];
            xi[0][1] += al[1] * mo[0][1] * beta[0];
            xi[1][0] += al[0] * mo[1][0] * beta[1];
            xi[1][1] += al[1] * mo[1][1] * beta[1];
            beta = [
                mo[0][0] * beta[0] + mo[1][0] * beta[1],
                mo[0][1] * beta[0] + mo[1][1] * beta[1],
            ];
        }
        let g1 = [self.alpha[0][0] * beta[0], self.alpha[0][1] * beta[1]];
        let s = g1[0] + g1[1];
        Ok(Expectations {
            log_likelihood,
            xi,
            first: [g1[0] / s, g1[1] / s],
        })
    }

    /// Runs EM until the log-likelihood improves by less than `tol` or
    /// `max_iters` E-steps have been taken.
    pub fn fit<I>(
        &mut self,
        observations: I,
        b: &Matrix2<f64>,
        init_a: &Matrix2<f64>,
        init_pi: [f64; 2],
        max_iters: usize,
        tol: f64,
    ) -> Result<BaumWelchFit>
    where
        I: IntoIterator<Item = Occupancy>,
    {
        self.obs.clear();
        self.obs
            .extend(observations.into_iter().map(|o| o.index() as u8));
        if self.obs.len() < 2 {
            return Err(Error::InsufficientData(format!(
                "Baum-Welch needs at least 2 observations, got {}",
                self.obs.len()
            )));
        }
        if max_iters == 0 {
            return Err(Error::invalid("max_iters must be at least 1"));
        }
        check_column_stochastic(b, "B")?;
        check_column_stochastic(init_a, "A")?;
        check_distribution(&init_pi, "pi")?;

        let mut a = *init_a;
        let mut pi = init_pi;
        let mut history = Vec::with_capacity(max_iters);
        for _ in 0..max_iters {
            let e = self.expectations(&a, b, pi)?;
            let converged = history
                .last()
                .is_some_and(|&prev: &f64| e.log_likelihood - prev < tol);
            history.push(e.log_likelihood);
            if converged {
                break;
            }
            for k in 0..2 {
                let from_k = e.xi[0][k] + e.xi[1][k];
                if from_k > 0.0 {
                    a[(0, k)] = e.xi[0][k] / from_k;
                    a[(1, k)] = 1.0 - a[(0, k)];
                }
            }
            pi = e.first;
        }
        let iterations = history.len();
        Ok(BaumWelchFit {
            a,
            pi,
            log_likelihoods: history,
            iterations,
        })
    }
}

/// Convenience wrapper over [`BaumWelch::fit`] for a window and an initial model.
pub fn baum_welch_update(
    window: &ObservationWindow,
    b: &Matrix2<f64>,
    init: &HmmModel,
    max_iters: usize,
    tol: f64,
) -> Result<BaumWelchFit> {
    BaumWelch::new().fit(window.iter(), b, &init.a, init.pi, max_iters, tol)
}
