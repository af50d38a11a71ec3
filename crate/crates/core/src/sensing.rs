//! Energy detector feeding the occupancy HMM, and emission-mask compliance.
//!
//! The detector integrates `N_s` complex baseband samples per slot,
//! `T = Σ |x_n|²`. Noise is circular complex Gaussian with power `σ²` per
//! sample, so under "free" `T/σ²` is Gamma(`N_s`, 1) (equivalently `2T/σ²` is
//! chi-square with `2·N_s` degrees of freedom). A busy slot adds a
//! constant-envelope signal of power `S` with a random phase, which makes
//! `2T/σ²` noncentral chi-square with noncentrality `2·N_s·S/σ²`.

use std::f64::consts::PI;
use std::io::Read;
use std::path::Path;

use nalgebra::Matrix2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::{gamma_ur, ln_gamma};

use crate::error::{Error, Result};
use crate::spectrum_hmm::Occupancy;

/// Relative tolerance of the threshold bisection.
const THRESHOLD_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyDetector {
    samples_per_slot: usize,
    noise_power: f64,
    threshold: f64,
    pfa: f64,
}

/// `Pr[Gamma(shape, 1) > x]`.
fn gamma_tail(shape: f64, x: f64) -> f64 {
    if x <= 0.0 {
        1.0
    } else {
        gamma_ur(shape, x)
    }
}

impl EnergyDetector {
    /// Sets the threshold so the free-channel exceedance rate equals `pfa`.
    pub fn from_pfa(samples_per_slot: usize, noise_power: f64, pfa: f64) -> Result<Self> {
        if samples_per_slot == 0 {
            return Err(Error::invalid("samples per slot must be at least 1"));
        }
        if !(noise_power > 0.0) {
            return Err(Error::invalid("noise power must be positive"));
        }
        if !(pfa > 0.0 && pfa < 1.0) {
            return Err(Error::invalid(format!("pfa {pfa} outside (0, 1)")));
        }
        let n = samples_per_slot as f64;
        // Normalized threshold x = η/σ² solves gamma_tail(n, x) = pfa.
        let mut lo = 0.0;
        let mut hi = n.max(1.0);
        while gamma_tail(n, hi) > pfa {
            lo = hi;
            hi *= 2.0;
        }
        while hi - lo > THRESHOLD_TOL * hi.max(1.0) {
            let mid = 0.5 * (lo + hi);
            if gamma_tail(n, mid) > pfa {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(Self {
            samples_per_slot,
            noise_power,
            threshold: 0.5 * (lo + hi) * noise_power,
            pfa,
        })
    }

    /// Uses an explicit threshold; `pfa` is derived from it.
    pub fn with_threshold(samples_per_slot: usize, noise_power: f64, threshold: f64) -> Result<Self> {
        if samples_per_slot == 0 {
            return Err(Error::invalid("samples per slot must be at least 1"));
        }
        if !(noise_power > 0.0) || threshold < 0.0 || !threshold.is_finite() {
            return Err(Error::invalid("noise power must be positive and threshold non-negative"));
        }
        let pfa = gamma_tail(samples_per_slot as f64, threshold / noise_power);
        Ok(Self {
            samples_per_slot,
            noise_power,
            threshold,
            pfa,
        })
    }

    pub fn samples_per_slot(&self) -> usize {
        self.samples_per_slot
    }

    pub fn noise_power(&self) -> f64 {
        self.noise_power
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn pfa(&self) -> f64 {
        self.pfa
    }

    /// Draws the integrated energy of one slot.
    pub fn statistic<R: Rng>(&self, signal_power: f64, rng: &mut R) -> f64 {
        let sd = (self.noise_power / 2.0).sqrt();
        let normal = Normal::new(0.0, sd).expect("finite noise power");
        let (si, sq) = if signal_power > 0.0 {
            let phase = rng.random::<f64>() * 2.0 * PI;
            let amp = signal_power.sqrt();
            (amp * phase.cos(), amp * phase.sin())
        } else {
            (0.0, 0.0)
        };
        (0..self.samples_per_slot)
            .map(|_| {
                let i = si + normal.sample(rng);
                let q = sq + normal.sample(rng);
                i * i + q * q
            })
            .sum()
    }

    pub fn detect_with<R: Rng>(&self, signal_power: f64, rng: &mut R) -> Occupancy {
        if self.statistic(signal_power, rng) > self.threshold {
            Occupancy::Busy
        } else {
            Occupancy::Free
        }
    }

    /// Probability that a busy slot with per-sample SNR `snr` exceeds the threshold.
    pub fn detection_probability(&self, snr: f64) -> f64 {
        let n = self.samples_per_slot as f64;
        let x = self.threshold / self.noise_power;
        if snr <= 0.0 {
            return gamma_tail(n, x);
        }
        if !snr.is_finite() {
            return 1.0;
        }
        // Poisson mixture of central tails, summed over the bulk of the weights.
        let mu = n * snr;
        let spread = 12.0 * mu.sqrt() + 30.0;
        let j_lo = (mu - spread).max(0.0).floor() as u64;
        let j_hi = (mu + spread).ceil() as u64;
        // Dividing by the summed weights cancels the rounding of ln Γ at large j.
        let (mut pd, mut mass) = (0.0, 0.0);
        for j in j_lo..=j_hi {
            let jf = j as f64;
            let w = (-mu + jf * mu.ln() - ln_gamma(jf + 1.0)).exp();
            pd += w * gamma_tail(n + jf, x);
            mass += w;
        }
        (pd / mass).min(1.0)
    }

    /// Emission matrix induced by the detector's ROC at the given busy SNR.
    pub fn roc_to_emission(&self, busy_snr: f64) -> Result<Matrix2<f64>> {
        if busy_snr < 0.0 || busy_snr.is_nan() {
            return Err(Error::invalid("snr must be non-negative"));
        }
        let pfa = self.pfa;
        let pd = self.detection_probability(busy_snr);
        Ok(Matrix2::new(1.0 - pfa, 1.0 - pd, pfa, pd))
    }
}

/// Single detector decision for a slot, seeded.
pub fn detect(detector: &EnergyDetector, signal_power: f64, seed: u64) -> Occupancy {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    detector.detect_with(signal_power, &mut rng)
}

// ---------------------------------------------------------------------------
// Emission mask
// ---------------------------------------------------------------------------

/// Envelope of allowed emission relative to the in-band peak.
///
/// Inside the open fundamental band any level up to 0 dB is allowed. From the
/// band edge outward the limit is `edge_level_db + rolloff_db_per_decade · d`
/// where `d = log10(|f − f_c| / (B/2))` counts decades of offset from the band
/// centre in units of the half bandwidth, so `d = 0` at either edge.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmissionMask {
    pub f_lo: f64,
    pub f_hi: f64,
    #[serde(default = "default_edge_level")]
    pub edge_level_db: f64,
    #[serde(default = "default_rolloff")]
    pub rolloff_db_per_decade: f64,
}

fn default_edge_level() -> f64 {
    -40.0
}

fn default_rolloff() -> f64 {
    -20.0
}

impl EmissionMask {
    pub fn new(f_lo: f64, f_hi: f64) -> Result<Self> {
        Self::with_rolloff(f_lo, f_hi, default_edge_level(), default_rolloff())
    }

    pub fn with_rolloff(f_lo: f64, f_hi: f64, edge_level_db: f64, rolloff_db_per_decade: f64) -> Result<Self> {
        let m = Self {
            f_lo,
            f_hi,
            edge_level_db,
            rolloff_db_per_decade,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.f_lo < self.f_hi) {
            return Err(Error::invalid("mask band needs f_lo < f_hi"));
        }
        if self.rolloff_db_per_decade > 0.0 {
            return Err(Error::invalid("mask rolloff must be <= 0 dB/decade"));
        }
        Ok(())
    }

    /// Allowed level in dB relative to peak at frequency `f`.
    pub fn envelope_db(&self, f: f64) -> f64 {
        if f > self.f_lo && f < self.f_hi {
            return 0.0;
        }
        let centre = 0.5 * (self.f_lo + self.f_hi);
        let half = 0.5 * (self.f_hi - self.f_lo);
        let decades = ((f - centre).abs() / half).log10().max(0.0);
        self.edge_level_db + self.rolloff_db_per_decade * decades
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectrumSample {
    pub frequency_hz: f64,
    pub power_db_rel_peak: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum MaskCheck {
    Pass,
    /// Frequencies of every sample above the envelope, in input order.
    Violations(Vec<f64>),
}

impl MaskCheck {
    pub fn passed(&self) -> bool {
        matches!(self, MaskCheck::Pass)
    }
}

pub fn check_emission_mask(spectrum: &[SpectrumSample], mask: &EmissionMask) -> Result<MaskCheck> {
    if spectrum.is_empty() {
        return Err(Error::invalid("spectrum is empty"));
    }
    mask.validate()?;
    if spectrum
        .windows(2)
        .any(|w| w[1].frequency_hz < w[0].frequency_hz)
    {
        return Err(Error::invalid("spectrum samples must be sorted by frequency"));
    }
    let bad: Vec<f64> = spectrum
        .iter()
        .filter(|s| s.power_db_rel_peak > mask.envelope_db(s.frequency_hz))
        .map(|s| s.frequency_hz)
        .collect();
    Ok(if bad.is_empty() {
        MaskCheck::Pass
    } else {
        MaskCheck::Violations(bad)
    })
}

/// Parses `frequency_hz,power_db_rel_peak` rows. A non-numeric first row is
/// treated as a header.
pub fn read_spectrum_csv<R: Read>(reader: R) -> Result<Vec<SpectrumSample>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(reader);
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Error::invalid(format!("spectrum csv: {e}")))?;
        if rec.len() != 2 {
            return Err(Error::invalid(format!(
                "spectrum csv row {}: expected 2 columns, got {}",
                i + 1,
                rec.len()
            )));
        }
        let f = rec[0].parse::<f64>();
        let p = rec[1].parse::<f64>();
        match (f, p) {
            (Ok(frequency_hz), Ok(power_db_rel_peak)) => out.push(SpectrumSample {
                frequency_hz,
                power_db_rel_peak,
            }),
            _ if i == 0 => continue,
            _ => {
                return Err(Error::invalid(format!(
                    "spectrum csv row {}: non-numeric value",
                    i + 1
                )))
            }
        }
    }
    Ok(out)
}

pub fn read_spectrum_file(path: impl AsRef<Path>) -> Result<Vec<SpectrumSample>> {
    let f = std::fs::File::open(path.as_ref())?;
    read_spectrum_csv(f)
}
