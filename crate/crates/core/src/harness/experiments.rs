use rand::Rng;
use rayon::prelude::*;
use serde_json::json;

use super::config::{PassiveConfig, SpectrumConfig, SymbioticConfig, TrackingConfig};
use super::table::{Cell, Table};
use super::{trial_rng, Stat, SHARED_STREAM};
use crate::bounds::PassiveRun;
use crate::controller::{run_cognitive_track, DwellLog, PerformanceGoals, ScenarioNoise, TrackMode};
use crate::error::Result;
use crate::spectrum_hmm::{clamp_transitions, transmit_decision, BaumWelch, Decision, HmmModel, ObservationWindow, Occupancy};
use crate::symbiotic::{run_symbiotic_trial, Policy, SymbioticStep};

/// Running sums in insertion order.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Accum {
    n: usize,
    sum: f64,
    sum_sq: f64,
}

impl Accum {
    pub fn add(&mut self, v: f64) {
        self.n += 1;
        self.sum += v;
        self.sum_sq += v * v;
    }

    pub fn stat(&self) -> Stat {
        if self.n == 0 {
            return Stat { mean: f64::NAN, se: f64::NAN };
        }
        let n = self.n as f64;
        let mean = self.sum / n;
        let se = if self.n > 1 {
            (((self.sum_sq - n * mean * mean) / (n - 1.0)).max(0.0) / n).sqrt()
        } else {
            0.0
        };
        Stat { mean, se }
    }

    /// Square root of the mean, with a delta-method standard error.
    pub fn rms(&self) -> Stat {
        let ms = self.stat();
        let rms = ms.mean.max(0.0).sqrt();
        Stat {
            mean: rms,
            se: if rms > 0.0 { ms.se / (2.0 * rms) } else { 0.0 },
        }
    }
}

// ---------------------------------------------------------------------------
// Spectrum
// ---------------------------------------------------------------------------

/// Error counts of one trial. Decisions never feed back into the channel or
/// the detector, so one pass serves every threshold on common random numbers.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumTrial {
    pub pris: usize,
    pub busy: u64,
    pub e0: Vec<u64>,
    pub e1: Vec<u64>,
    /// Counts at the time-series threshold, one entry per block.
    pub block_e0: Vec<u64>,
    pub block_e1: Vec<u64>,
    pub block_len: Vec<u64>,
    /// Most negative iteration-to-iteration log-likelihood change seen in
    /// any Baum-Welch fit (0 when every fit was monotone).
    pub worst_ll_step: f64,
}

pub fn spectrum_trial<R: Rng>(cfg: &SpectrumConfig, rng: &mut R) -> Result<SpectrumTrial> {
    let truth = cfg.true_model()?;
    let b = *truth.b();
    let detector = match cfg.emission {
        Some(_) => None,
        None => Some(cfg.detector.build()?),
    };
    let busy_power = cfg.detector.busy_power();
    let a = *truth.a();
    let blocks = cfg.pris.div_ceil(cfg.block);

    let mut est = HmmModel::uninformed(b)?;
    let mut window = ObservationWindow::new(cfg.window)?;
    let mut bw = BaumWelch::new();
    let mut out = SpectrumTrial {
        pris: cfg.pris,
        busy: 0,
        e0: vec![0; cfg.lambdas.len()],
        e1: vec![0; cfg.lambdas.len()],
        block_e0: vec![0; blocks],
        block_e1: vec![0; blocks],
        block_len: vec![0; blocks],
        worst_ll_step: 0.0,
    };

    let mut state = Occupancy::Free;
    for t in 0..cfg.pris {
        let p_busy = if t == 0 { truth.pi()[1] } else { a[(1, state.index())] };
        state = if rng.random::<f64>() < p_busy { Occupancy::Busy } else { Occupancy::Free };

        let p_so = est.spectrum_opportunity();
        let busy = state.is_busy();
        out.busy += busy as u64;
        for (i, &lambda) in cfg.lambdas.iter().enumerate() {
            match (transmit_decision(p_so, lambda), busy) {
                (Decision::Hold, false) => out.e0[i] += 1,
                (Decision::Transmit, true) => out.e1[i] += 1,
                _ => {}
            }
        }
        let blk = t / cfg.block;
        out.block_len[blk] += 1;
        match (transmit_decision(p_so, cfg.timeseries_lambda), busy) {
            (Decision::Hold, false) => out.block_e0[blk] += 1,
            (Decision::Transmit, true) => out.block_e1[blk] += 1,
            _ => {}
        }

        let obs = match &detector {
            Some(d) => d.detect_with(if busy { busy_power } else { 0.0 }, rng),
            None => {
                if rng.random::<f64>() < b[(1, state.index())] {
                    Occupancy::Busy
                } else {
                    Occupancy::Free
                }
            }
        };
        est.filter_update(obs)?;
        window.push(obs);
        if window.len() >= 2 {
            let fit = bw.fit(window.iter(), &b, est.a(), est.pi(), cfg.max_iters, cfg.tol)?;
            for w in fit.log_likelihoods.windows(2) {
                out.worst_ll_step = out.worst_ll_step.min(w[1] - w[0]);
            }
            est.set_dynamics(clamp_transitions(&fit.a), fit.pi)?;
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumResult {
    pub lambdas: Vec<f64>,
    pub pr_e0: Vec<Stat>,
    pub pr_e1: Vec<Stat>,
    pub pr_busy: Stat,
    pub timeseries_lambda: f64,
    /// `(first PRI of block, Pr[e0], Pr[e1])` at the time-series threshold.
    pub blocks: Vec<(usize, Stat, Stat)>,
    pub worst_ll_step: f64,
    pub trials: usize,
}

impl SpectrumResult {
    fn lambda_index(&self, lambda: f64) -> Option<usize> {
        self.lambdas.iter().position(|&l| (l - lambda).abs() < 1e-12)
    }

    pub fn at(&self, lambda: f64) -> Option<(Stat, Stat)> {
        self.lambda_index(lambda).map(|i| (self.pr_e0[i], self.pr_e1[i]))
    }

    /// Largest deviation of any post-warm-up block from the post-warm-up
    /// mean, for `(e0, e1)`.
    pub fn timeseries_spread(&self, warmup_pris: usize) -> (f64, f64) {
        let post: Vec<_> = self.blocks.iter().filter(|(s, _, _)| *s >= warmup_pris).collect();
        let spread = |sel: fn(&(usize, Stat, Stat)) -> f64| {
            let mean = post.iter().map(|b| sel(b)).sum::<f64>() / post.len() as f64;
            post.iter().map(|b| (sel(b) - mean).abs()).fold(0.0, f64::max)
        };
        (spread(|b| b.1.mean), spread(|b| b.2.mean))
    }

    pub fn summary(&self, cfg: &SpectrumConfig) -> serde_json::Value {
        let pick = |l: f64| self.at(l).map(|(e0, e1)| json!({"pr_e0": e0, "pr_e1": e1}));
        let (s0, s1) = self.timeseries_spread(cfg.warmup_pris);
        json!({
            "pr_busy": self.pr_busy,
            "lambda_0": pick(0.0),
            "lambda_1": pick(1.0),
            "timeseries_lambda": self.timeseries_lambda,
            "timeseries_point": pick(self.timeseries_lambda),
            "timeseries_spread_e0": s0,
            "timeseries_spread_e1": s1,
            "worst_log_likelihood_step": self.worst_ll_step,
        })
    }

    pub fn tables(&self, seed: u64) -> Vec<(String, Table)> {
        let mut sweep = Table::new(["lambda", "pr_e0", "pr_e0_se", "pr_e1", "pr_e1_se"]);
        for (i, &l) in self.lambdas.iter().enumerate() {
            sweep.push(vec![
                l.into(),
                self.pr_e0[i].mean.into(),
                self.pr_e0[i].se.into(),
                self.pr_e1[i].mean.into(),
                self.pr_e1[i].se.into(),
            ]);
        }
        let mut ts = Table::new(["pri_start", "lambda", "pr_e0", "pr_e0_se", "pr_e1", "pr_e1_se"]);
        for (start, e0, e1) in &self.blocks {
            ts.push(vec![
                (*start).into(),
                self.timeseries_lambda.into(),
                e0.mean.into(),
                e0.se.into(),
                e1.mean.into(),
                e1.se.into(),
            ]);
        }
        vec![
            (format!("spectrum_{seed}"), sweep),
            (format!("spectrum_timeseries_{seed}"), ts),
        ]
    }
}

pub fn run_spectrum_experiment(cfg: &SpectrumConfig, seed: u64, trials: usize) -> Result<SpectrumResult> {
    cfg.validate()?;
    let runs = (0..trials)
        .into_par_iter()
        .map(|i| spectrum_trial(cfg, &mut trial_rng(seed, i as u64)))
        .collect::<Result<Vec<_>>>()?;
    let rate = |c: u64, n: u64| c as f64 / n as f64;
    let pris = cfg.pris as u64;
    let pr_e0 = (0..cfg.lambdas.len())
        .map(|i| Stat::of(runs.iter().map(|r| rate(r.e0[i], pris))))
        .collect();
    let pr_e1 = (0..cfg.lambdas.len())
        .map(|i| Stat::of(runs.iter().map(|r| rate(r.e1[i], pris))))
        .collect();
    let n_blocks = runs[0].block_len.len();
    let blocks = (0..n_blocks)
        .map(|k| {
            (
                k * cfg.block,
                Stat::of(runs.iter().map(|r| rate(r.block_e0[k], r.block_len[k]))),
                Stat::of(runs.iter().map(|r| rate(r.block_e1[k], r.block_len[k]))),
            )
        })
        .collect();
    Ok(SpectrumResult {
        lambdas: cfg.lambdas.clone(),
        pr_e0,
        pr_e1,
        pr_busy: Stat::of(runs.iter().map(|r| rate(r.busy, pris))),
        timeseries_lambda: cfg.timeseries_lambda,
        blocks,
        worst_ll_step: runs.iter().map(|r| r.worst_ll_step).fold(0.0, f64::min),
        trials,
    })
}

// ---------------------------------------------------------------------------
// Cognitive tracking
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
pub struct TrackingRun {
    pub fixed: Vec<DwellLog>,
    pub cognitive: Vec<DwellLog>,
}

impl TrackingRun {
    pub fn log(&self, mode: TrackMode) -> &[DwellLog] {
        match mode {
            TrackMode::Fixed => &self.fixed,
            TrackMode::Cognitive => &self.cognitive,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrackingResult {
    pub runs: Vec<TrackingRun>,
    pub goals: PerformanceGoals,
}

impl TrackingResult {
    fn dwells(&self, mode: TrackMode) -> impl Iterator<Item = &DwellLog> {
        self.runs.iter().flat_map(move |r| r.log(mode).iter())
    }

    fn fraction(&self, mode: TrackMode, filter: impl Fn(&DwellLog) -> bool, ok: impl Fn(&DwellLog) -> bool) -> f64 {
        let (mut n, mut hit) = (0usize, 0usize);
        for d in self.dwells(mode).filter(|d| filter(d)) {
            n += 1;
            hit += ok(d) as usize;
        }
        if n == 0 {
            f64::NAN
        } else {
            hit as f64 / n as f64
        }
    }

    /// Fraction of dwells meeting both Doppler bounds.
    pub fn doppler_ok_fraction(&self, mode: TrackMode) -> f64 {
        let g = self.goals;
        self.fraction(
            mode,
            |_| true,
            |d| d.norm_doppler_max <= g.doppler_upper && d.norm_doppler_mean >= g.clutter_lower,
        )
    }

    /// Fraction of dwells (inside or outside dips) whose predicted velocity
    /// RMSE meets the goal.
    pub fn velocity_ok_fraction(&self, mode: TrackMode, in_dip: bool) -> f64 {
        let g = self.goals.velocity_rmse;
        self.fraction(mode, |d| d.in_dip == in_dip, |d| d.pred_rmse_v <= g)
    }

    pub fn mean_pulses(&self, mode: TrackMode, in_dip: bool) -> f64 {
        let mut a = Accum::default();
        for d in self.dwells(mode).filter(|d| d.in_dip == in_dip) {
            a.add(d.n_pulses as f64);
        }
        a.stat().mean
    }

    pub fn summary(&self) -> serde_json::Value {
        let mode = |m: TrackMode| {
            json!({
                "doppler_ok_fraction": self.doppler_ok_fraction(m),
                "velocity_ok_fraction_dip": self.velocity_ok_fraction(m, true),
                "velocity_ok_fraction_nominal": self.velocity_ok_fraction(m, false),
                "mean_pulses_dip": self.mean_pulses(m, true),
                "mean_pulses_nominal": self.mean_pulses(m, false),
                "mean_dwell_time_s": self.dwells(m).map(|d| d.n_pulses as f64 / d.prf_hz).sum::<f64>()
                    / self.dwells(m).count() as f64,
            })
        };
        json!({
            "runs": self.runs.len(),
            "fixed": mode(TrackMode::Fixed),
            "cognitive": mode(TrackMode::Cognitive),
        })
    }

    pub fn tables(&self, seed: u64) -> Vec<(String, Table)> {
        type Field = (&'static str, fn(&DwellLog) -> f64, bool);
        let fields: [Field; 8] = [
            ("prf_hz", |d| d.prf_hz, false),
            ("n_pulses", |d| d.n_pulses as f64, false),
            ("pred_rmse_r", |d| d.pred_rmse_r, false),
            ("act_err_r", |d| d.act_err_r, true),
            ("pred_rmse_v", |d| d.pred_rmse_v, false),
            ("act_err_v", |d| d.act_err_v, true),
            ("norm_doppler_mean", |d| d.norm_doppler_mean, false),
            ("norm_doppler_max", |d| d.norm_doppler_max, false),
        ];
        let mut headers = vec!["mode".to_string(), "time_s".to_string()];
        for (name, _, _) in &fields {
            headers.push(name.to_string());
            headers.push(format!("{name}_se"));
        }
        headers.extend(["sinr_db".to_string(), "in_dip".to_string()]);
        let mut t = Table::new(headers);
        for mode in [TrackMode::Fixed, TrackMode::Cognitive] {
            let dwells = self.runs[0].log(mode).len();
            for k in 0..dwells {
                let first = &self.runs[0].log(mode)[k];
                let mut row: Vec<Cell> = vec![mode.label().into(), first.time_s.into()];
                for (_, get, rms) in &fields {
                    let mut acc = Accum::default();
                    for r in &self.runs {
                        let v = get(&r.log(mode)[k]);
                        acc.add(if *rms { v * v } else { v });
                    }
                    let s = if *rms { acc.rms() } else { acc.stat() };
                    row.push(s.mean.into());
                    row.push(s.se.into());
                }
                row.push(first.sinr_db.into());
                row.push((first.in_dip as usize).into());
                t.push(row);
            }
        }
        vec![(format!("tracking_{seed}"), t)]
    }
}

pub fn run_tracking_experiment(cfg: &TrackingConfig, seed: u64, trials: usize) -> Result<TrackingResult> {
    cfg.validate()?;
    let scenario = cfg.scenario()?;
    let runs = (0..trials)
        .into_par_iter()
        .map(|i| {
            let noise = ScenarioNoise::draw(&scenario, &mut trial_rng(seed, i as u64))?;
            Ok(TrackingRun {
                fixed: run_cognitive_track(&scenario, TrackMode::Fixed, &noise)?,
                cognitive: run_cognitive_track(&scenario, TrackMode::Cognitive, &noise)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(TrackingResult {
        runs,
        goals: scenario.goals,
    })
}

// ---------------------------------------------------------------------------
// Passive channel selection
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
pub struct PassiveResult {
    pub run: PassiveRun,
    pub labels: Vec<String>,
}

impl PassiveResult {
    /// Largest amount by which the dynamic series exceeds the pointwise
    /// minimum of the fixed-channel series, over both axes.
    pub fn dominance_excess(&self) -> f64 {
        let mut worst = f64::NEG_INFINITY;
        for (k, d) in self.run.dynamic.iter().enumerate() {
            let min_x = self.run.fixed.iter().map(|f| f[k].sqrt_pcrlb_x).fold(f64::INFINITY, f64::min);
            let min_y = self.run.fixed.iter().map(|f| f[k].sqrt_pcrlb_y).fold(f64::INFINITY, f64::min);
            worst = worst.max(d.sqrt_pcrlb_x - min_x).max(d.sqrt_pcrlb_y - min_y);
        }
        worst
    }

    pub fn crossover_steps(&self) -> Vec<usize> {
        self.run
            .dynamic
            .windows(2)
            .filter(|w| w[0].selected != w[1].selected)
            .map(|w| w[1].step)
            .collect()
    }

    pub fn summary(&self) -> serde_json::Value {
        let d = &self.run.dynamic;
        json!({
            "steps": d.len(),
            "first_selected": d.first().map(|s| self.labels[s.selected].clone()),
            "last_selected": d.last().map(|s| self.labels[s.selected].clone()),
            "crossovers": self.run.crossovers(),
            "crossover_steps": self.crossover_steps(),
            "dominance_excess_m": self.dominance_excess(),
        })
    }

    pub fn tables(&self, seed: u64) -> Vec<(String, Table)> {
        let lower: Vec<String> = self
            .labels
            .iter()
            .map(|l| l.to_lowercase().replace(['-', '.'], "_"))
            .collect();
        let mut headers: Vec<String> = ["step", "selected_channel", "sqrt_pcrlb_x", "sqrt_pcrlb_y"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        headers.extend(lower.iter().map(|l| format!("score_{l}")));
        for l in &lower {
            headers.push(format!("{l}_sqrt_pcrlb_x"));
            headers.push(format!("{l}_sqrt_pcrlb_y"));
        }
        let mut t = Table::new(headers);
        for (k, d) in self.run.dynamic.iter().enumerate() {
            let mut row: Vec<Cell> = vec![
                d.step.into(),
                self.labels[d.selected].clone().into(),
                d.sqrt_pcrlb_x.into(),
                d.sqrt_pcrlb_y.into(),
            ];
            row.extend(d.scores.iter().map(|&s| Cell::from(s)));
            for f in &self.run.fixed {
                row.push(f[k].sqrt_pcrlb_x.into());
                row.push(f[k].sqrt_pcrlb_y.into());
            }
            t.push(row);
        }
        vec![(format!("passive_selection_{seed}"), t)]
    }
}

pub fn run_passive_selection_experiment(cfg: &PassiveConfig) -> Result<PassiveResult> {
    let scenario = cfg.scenario()?;
    let run = scenario.run()?;
    Ok(PassiveResult {
        run,
        labels: scenario.channels.iter().map(|c| c.waveform.label().to_string()).collect(),
    })
}

// ---------------------------------------------------------------------------
// Symbiotic scheduling
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymbioticRow {
    pub rmse_pos: Stat,
    pub mean_n: Stat,
    pub trace_achieved: Stat,
    pub trace_ideal: Stat,
}

#[derive(Debug, Clone, Copy, Default)]
struct StepAccum {
    err_sq: Accum,
    n: Accum,
    achieved: Accum,
    ideal: Accum,
}

impl StepAccum {
    fn add(&mut self, s: &SymbioticStep) {
        self.err_sq.add(s.pos_err_sq);
        self.n.add(s.n as f64);
        self.achieved.add(s.trace_achieved);
        self.ideal.add(s.trace_ideal);
    }

    fn row(&self) -> SymbioticRow {
        SymbioticRow {
            rmse_pos: self.err_sq.rms(),
            mean_n: self.n.stat(),
            trace_achieved: self.achieved.stat(),
            trace_ideal: self.ideal.stat(),
        }
    }
}

pub const POLICIES: [Policy; 3] = [Policy::Passive, Policy::Symbiotic, Policy::Ideal];

pub fn policy_label(p: Policy) -> &'static str {
    match p {
        Policy::Passive => "passive",
        Policy::Symbiotic => "symbiotic",
        Policy::Ideal => "ideal",
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SymbioticResult {
    pub lambda_sym: f64,
    pub trials: usize,
    /// Per policy (in [`POLICIES`] order), per step.
    pub rows: Vec<Vec<SymbioticRow>>,
    /// Per step, paired difference of squared position error
    /// (symbiotic − passive).
    pub paired_vs_passive: Vec<Stat>,
}

impl SymbioticResult {
    pub fn series(&self, p: Policy) -> &[SymbioticRow] {
        &self.rows[POLICIES.iter().position(|&q| q == p).unwrap()]
    }

    /// Run-averaged RMSE over steps.
    pub fn mean_rmse(&self, p: Policy) -> f64 {
        let s = self.series(p);
        s.iter().map(|r| r.rmse_pos.mean).sum::<f64>() / s.len() as f64
    }

    pub fn fraction_steps_mean_n_at_most(&self, n: f64) -> f64 {
        let s = self.series(Policy::Symbiotic);
        s.iter().filter(|r| r.mean_n.mean <= n).count() as f64 / s.len() as f64
    }

    pub fn summary(&self) -> serde_json::Value {
        json!({
            "lambda_sym": self.lambda_sym,
            "mean_rmse_passive": self.mean_rmse(Policy::Passive),
            "mean_rmse_symbiotic": self.mean_rmse(Policy::Symbiotic),
            "mean_rmse_ideal": self.mean_rmse(Policy::Ideal),
            "fraction_steps_mean_n_le_2": self.fraction_steps_mean_n_at_most(2.0),
            "mean_n": self.series(Policy::Symbiotic).iter().map(|r| r.mean_n.mean).sum::<f64>()
                / self.series(Policy::Symbiotic).len() as f64,
        })
    }

    pub fn tables(&self, seed: u64) -> Vec<(String, Table)> {
        let mut t = Table::new([
            "policy",
            "lambda_sym",
            "step",
            "rmse_pos_m",
            "rmse_pos_m_se",
            "mean_n",
            "mean_n_se",
            "trace_achieved",
            "trace_achieved_se",
            "trace_ideal",
            "trace_ideal_se",
        ]);
        for (p, rows) in POLICIES.iter().zip(&self.rows) {
            let lambda = if *p == Policy::Symbiotic { self.lambda_sym } else { 0.0 };
            for (k, r) in rows.iter().enumerate() {
                t.push(vec![
                    policy_label(*p).into(),
                    lambda.into(),
                    (k + 1).into(),
                    r.rmse_pos.mean.into(),
                    r.rmse_pos.se.into(),
                    r.mean_n.mean.into(),
                    r.mean_n.se.into(),
                    r.trace_achieved.mean.into(),
                    r.trace_achieved.se.into(),
                    r.trace_ideal.mean.into(),
                    r.trace_ideal.se.into(),
                ]);
            }
        }
        vec![(format!("symbiotic_{seed}"), t)]
    }
}

/// Trials processed per parallel batch; bounds memory for large trial counts.
const SYMBIOTIC_BATCH: usize = 512;

pub fn run_symbiotic_experiment(cfg: &SymbioticConfig, seed: u64, trials: usize) -> Result<SymbioticResult> {
    cfg.validate()?;
    let scenario = cfg.scenario(&mut trial_rng(seed, SHARED_STREAM))?;
    let steps = scenario.steps;
    let mut acc = vec![vec![StepAccum::default(); steps]; POLICIES.len()];
    let mut paired = vec![Accum::default(); steps];
    let mut start = 0;
    while start < trials {
        let end = (start + SYMBIOTIC_BATCH).min(trials);
        let batch = (start..end)
            .into_par_iter()
            .map(|i| run_symbiotic_trial(&scenario, &mut trial_rng(seed, i as u64)))
            .collect::<Result<Vec<_>>>()?;
        for trial in &batch {
            for (pi, p) in POLICIES.iter().enumerate() {
                for (k, s) in trial.series(*p).iter().enumerate() {
                    acc[pi][k].add(s);
                }
            }
            for (acc_k, (sym, pas)) in paired.iter_mut().zip(trial.symbiotic.iter().zip(&trial.passive)) {
                acc_k.add(sym.pos_err_sq - pas.pos_err_sq);
            }
        }
        start = end;
    }
    Ok(SymbioticResult {
        lambda_sym: cfg.lambda_sym,
        trials,
        rows: acc.iter().map(|v| v.iter().map(StepAccum::row).collect()).collect(),
        paired_vs_passive: paired.iter().map(Accum::stat).collect(),
    })
}
