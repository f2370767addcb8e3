//! Transformed up-down staircase driven by simulated observers.
//!
//! A track starts at 65 dB, moves down after two consecutive correct
//! responses and up after every incorrect one. The step shrinks from 5 to 2
//! dB at the first reversal and to 1 dB at the fourth; the track stops after
//! 12 reversals at the final step and the threshold is the mean of the last
//! 10 reversal levels.

use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `down` consecutive correct responses lower the level, `up` incorrect
/// responses raise it.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rule {
    pub down: u32,
    pub up: u32,
}

impl Rule {
    pub const TWO_DOWN_ONE_UP: Rule = Rule { down: 2, up: 1 };

    fn check(self) -> Result<()> {
        if self.down == 0 || self.up != 1 {
            return Err(Error::UnsupportedRule {
                down: self.down,
                up: self.up,
            });
        }
        Ok(())
    }
}

/// Proportion correct a `down`-down/1-up track converges on.
pub fn levitt_target(rule: Rule) -> Result<f64> {
    rule.check()?;
    Ok(0.5f64.powf(1.0 / rule.down as f64))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StaircaseConfig {
    /// Intervals per trial; chance is one over this.
    pub alternatives: u32,
    pub rule: Rule,
    pub start_level: f64,
    /// Step sizes (dB), strictly decreasing.
    pub steps: Vec<f64>,
    /// Reversal counts at which the next step size takes over.
    pub step_change_at: Vec<u32>,
    /// Reversals at the final step size that end the track.
    pub final_reversals: u32,
    /// Trailing reversals averaged into the threshold.
    pub threshold_reversals: u32,
    /// Optional safety cap; hitting it marks the track as not converged.
    pub max_trials: Option<usize>,
}

impl Default for StaircaseConfig {
    fn default() -> Self {
        StaircaseConfig {
            alternatives: 3,
            rule: Rule::TWO_DOWN_ONE_UP,
            start_level: 65.0,
            steps: vec![5.0, 2.0, 1.0],
            step_change_at: vec![1, 4],
            final_reversals: 12,
            threshold_reversals: 10,
            max_trials: None,
        }
    }
}

impl StaircaseConfig {
    pub const SAFETY_CAP: usize = 400;

    pub fn with_cap(mut self, trials: usize) -> Self {
        self.max_trials = Some(trials);
        self
    }

    pub fn chance(&self) -> f64 {
        1.0 / self.alternatives as f64
    }

    pub fn validate(&self) -> Result<()> {
        self.rule.check()?;
        if self.alternatives < 2 {
            return Err(Error::invalid("alternatives", self.alternatives as f64));
        }
        if !self.start_level.is_finite() {
            return Err(Error::invalid("start level (dB)", self.start_level));
        }
        if self.steps.is_empty() || self.steps.iter().any(|&s| !(s > 0.0 && s.is_finite())) {
            return Err(Error::Invalid("step sizes must be positive".into()));
        }
        if self.steps.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::Invalid("step sizes must decrease strictly".into()));
        }
        if self.step_change_at.len() + 1 != self.steps.len() {
            return Err(Error::Invalid("need one step change per step after the first".into()));
        }
        if self.step_change_at.first() == Some(&0) || self.step_change_at.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Invalid("step changes must be at increasing positive reversal counts".into()));
        }
        if self.threshold_reversals == 0 || self.final_reversals < self.threshold_reversals {
            return Err(Error::Invalid(
                "threshold reversals must be positive and at most the final reversals".into(),
            ));
        }
        if self.max_trials == Some(0) {
            return Err(Error::invalid("max trials", 0.0));
        }
        Ok(())
    }

    /// Step size in effect after `reversals` reversals.
    pub fn step_after(&self, reversals: u32) -> f64 {
        self.steps[self.step_change_at.iter().filter(|&&r| r <= reversals).count()]
    }

    /// Reversal count from which reversals happen at the final step.
    fn first_final_reversal(&self) -> u32 {
        self.step_change_at.last().copied().unwrap_or(1)
    }
}

pub trait Observer {
    /// Probability of a correct response at `level` dB.
    fn p_correct(&self, level: f64) -> f64;
}

/// Logistic psychometric function rising from the chance floor to 1.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogisticObserver {
    pub midpoint: f64,
    /// dB per logistic unit.
    pub slope: f64,
    pub chance: f64,
}

impl LogisticObserver {
    /// Observer whose proportion correct at `level` equals `p`.
    pub fn through(level: f64, p: f64, slope: f64, chance: f64) -> Result<Self> {
        if !(chance > 0.0 && chance < 1.0) {
            return Err(Error::invalid("chance rate", chance));
        }
        if !(p > chance && p < 1.0) {
            return Err(Error::invalid("anchor proportion correct", p));
        }
        if !(slope > 0.0 && slope.is_finite()) {
            return Err(Error::invalid("slope (dB)", slope));
        }
        let q = (p - chance) / (1.0 - chance);
        Ok(LogisticObserver {
            midpoint: level - slope * (q / (1.0 - q)).ln(),
            slope,
            chance,
        })
    }
}

impl Observer for LogisticObserver {
    fn p_correct(&self, level: f64) -> f64 {
        self.chance + (1.0 - self.chance) / (1.0 + (-(level - self.midpoint) / self.slope).exp())
    }
}

/// Level-independent observer.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstantObserver(pub f64);

impl Observer for ConstantObserver {
    fn p_correct(&self, _level: f64) -> f64 {
        self.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trial {
    pub trial: usize,
    pub level: f64,
    /// Interval holding the target (0-based).
    pub interval: u32,
    /// Interval the observer picked.
    pub response: u32,
    pub correct: bool,
    pub reversal: bool,
    /// Step applied after this trial; zero when the level stays.
    pub step: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Track {
    pub trials: Vec<Trial>,
    pub reversal_levels: Vec<f64>,
    /// Mean of the last reversals; `None` if the track did not converge.
    pub threshold: Option<f64>,
    pub converged: bool,
}

/// Runs one track with the observer's responses drawn from `seed`.
pub fn run_track<O: Observer + ?Sized>(observer: &O, cfg: &StaircaseConfig, seed: u64) -> Result<Track> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let chance = cfg.chance();
    let first_final = cfg.first_final_reversal();
    let mut level = cfg.start_level;
    let mut run = 0u32;
    let mut direction = 0i8;
    let mut trials = Vec::new();
    let mut reversal_levels = Vec::new();
    let mut final_count = 0u32;
    loop {
        if cfg.max_trials.is_some_and(|cap| trials.len() >= cap) {
            return Ok(Track {
                trials,
                reversal_levels,
                threshold: None,
                converged: false,
            });
        }
        let p = observer.p_correct(level);
        if !(p >= chance - 1e-12 && p <= 1.0) {
            return Err(Error::ObserverContract(p));
        }
        let interval = rng.random_range(0..cfg.alternatives);
        let correct = rng.random::<f64>() < p;
        let response = if correct {
            interval
        } else {
            let other = rng.random_range(0..cfg.alternatives - 1);
            if other >= interval {
                other + 1
            } else {
                other
            }
        };
        let mv: i8 = if correct {
            run += 1;
            if run == cfg.rule.down {
                run = 0;
                -1
            } else {
                0
            }
        } else {
            run = 0;
            1
        };
        let reversal = mv != 0 && direction != 0 && mv != direction;
        if reversal {
            reversal_levels.push(level);
            if reversal_levels.len() as u32 >= first_final {
                final_count += 1;
            }
        }
        if mv != 0 {
            direction = mv;
        }
        let step = if mv == 0 {
            0.0
        } else {
            cfg.step_after(reversal_levels.len() as u32)
        };
        trials.push(Trial {
            trial: trials.len() + 1,
            level,
            interval,
            response,
            correct,
            reversal,
            step,
        });
        if final_count >= cfg.final_reversals {
            let last = &reversal_levels[reversal_levels.len() - cfg.threshold_reversals as usize..];
            let threshold = last.iter().sum::<f64>() / last.len() as f64;
            return Ok(Track {
                trials,
                reversal_levels,
                threshold: Some(threshold),
                converged: true,
            });
        }
        level += mv as f64 * step;
    }
}
