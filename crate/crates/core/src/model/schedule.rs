use serde::{Deserialize, Serialize};

use super::Mode;
use crate::error::{Error, Result};

/// A piecewise-constant switching signal `σ = (q, τ)` on `[t0, tf]`.
///
/// Mode `q[i]` is active on the half-open interval `[τ_{i−1}, τ_i)`, with
/// `τ_{−1} = t0` and the last interval closed at `tf`. Switch times are
/// strictly increasing, lie strictly inside the horizon, and consecutive
/// modes differ.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    t0: f64,
    tf: f64,
    modes: Vec<Mode>,
    switch_times: Vec<f64>,
}

/// A gap between consecutive switches shorter than the dwell time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DwellViolation {
    /// The violation is between switches `index` and `index + 1`.
    pub index: usize,
    pub gap: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub start: f64,
    pub end: f64,
    pub mode: Mode,
}

impl Schedule {
    /// Builds a schedule that must already be in normalized form.
    pub fn new(t0: f64, tf: f64, modes: Vec<Mode>, switch_times: Vec<f64>) -> Result<Self> {
        check_horizon(t0, tf)?;
        if modes.len() != switch_times.len() + 1 {
            return Err(Error::Structure(format!(
                "{} modes for {} switch times",
                modes.len(),
                switch_times.len()
            )));
        }
        for (i, &t) in switch_times.iter().enumerate() {
            if !(t > t0 && t < tf) {
                return Err(Error::Structure(format!(
                    "switch time {t} is not inside ({t0}, {tf})"
                )));
            }
            if i > 0 && !(t > switch_times[i - 1]) {
                return Err(Error::Structure("switch times must increase strictly".into()));
            }
        }
        if modes.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Structure("consecutive modes must differ".into()));
        }
        Ok(Self {
            t0,
            tf,
            modes,
            switch_times,
        })
    }

    pub fn constant(t0: f64, tf: f64, mode: Mode) -> Self {
        Self {
            t0,
            tf,
            modes: vec![mode],
            switch_times: Vec::new(),
        }
    }

    /// Brings an arbitrary mode/time sequence into normalized form.
    ///
    /// Times are clamped to the horizon, zero-length segments are dropped,
    /// equal neighbours are merged and the survivors renumbered.
    pub fn normalize(t0: f64, tf: f64, modes: &[Mode], switch_times: &[f64]) -> Result<Self> {
        check_horizon(t0, tf)?;
        if modes.len() != switch_times.len() + 1 {
            return Err(Error::Structure(format!(
                "{} modes for {} switch times",
                modes.len(),
                switch_times.len()
            )));
        }
        if switch_times.iter().any(|t| !t.is_finite()) {
            return Err(Error::Structure("switch times must be finite".into()));
        }
        if switch_times.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::Structure("switch times must be non-decreasing".into()));
        }

        let mut out_modes: Vec<Mode> = Vec::with_capacity(modes.len());
        let mut out_times: Vec<f64> = Vec::with_capacity(switch_times.len());
        for (i, &mode) in modes.iter().enumerate() {
            let start = if i == 0 { t0 } else { switch_times[i - 1].clamp(t0, tf) };
            let end = if i == switch_times.len() {
                tf
            } else {
                switch_times[i].clamp(t0, tf)
            };
            if end <= start {
                continue;
            }
            match out_modes.last() {
                None => out_modes.push(mode),
                Some(&prev) if prev == mode => {}
                Some(_) => {
                    out_modes.push(mode);
                    out_times.push(start);
                }
            }
        }
        Ok(Self {
            t0,
            tf,
            modes: out_modes,
            switch_times: out_times,
        })
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn tf(&self) -> f64 {
        self.tf
    }

    pub fn modes(&self) -> &[Mode] {
        &self.modes
    }

    pub fn switch_times(&self) -> &[f64] {
        &self.switch_times
    }

    pub fn switch_count(&self) -> usize {
        self.switch_times.len()
    }

    pub fn initial_mode(&self) -> Mode {
        self.modes[0]
    }

    pub fn final_mode(&self) -> Mode {
        *self.modes.last().expect("schedule has at least one mode")
    }

    /// Active mode at `t`; intervals are closed on the left.
    pub fn mode_at(&self, t: f64) -> Result<Mode> {
        if !(t >= self.t0 && t <= self.tf) {
            return Err(Error::Domain {
                what: "t",
                value: t,
                lo: self.t0,
                hi: self.tf,
            });
        }
        Ok(self.mode_at_unchecked(t))
    }

    pub(crate) fn mode_at_unchecked(&self, t: f64) -> Mode {
        let i = self.switch_times.partition_point(|&s| s <= t);
        self.modes[i]
    }

    /// Index of the first switch at or after `t`.
    pub fn first_switch_at_or_after(&self, t: f64) -> usize {
        self.switch_times.partition_point(|&s| s < t)
    }

    /// Smallest distance between consecutive switches; `+∞` with fewer
    /// than two switches.
    pub fn min_gap(&self) -> f64 {
        self.switch_times
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(f64::INFINITY, f64::min)
    }

    /// First `j >= from` (0-based) with `τ_{j+1} − τ_j < dwell`.
    pub fn first_violation(&self, dwell: f64, from: usize) -> Option<DwellViolation> {
        self.switch_times
            .windows(2)
            .enumerate()
            .skip(from)
            .find(|(_, w)| w[1] - w[0] < dwell)
            .map(|(index, w)| DwellViolation {
                index,
                gap: w[1] - w[0],
            })
    }

    pub fn satisfies_dwell(&self, dwell: f64) -> bool {
        self.first_violation(dwell, 0).is_none()
    }

    pub fn segments(&self) -> impl Iterator<Item = Segment> + '_ {
        self.modes.iter().enumerate().map(move |(i, &mode)| Segment {
            start: if i == 0 { self.t0 } else { self.switch_times[i - 1] },
            end: if i == self.switch_times.len() {
                self.tf
            } else {
                self.switch_times[i]
            },
            mode,
        })
    }

    /// Keeps this schedule on `[t0, at)` and follows `tail` on `[at, tf]`.
    pub fn splice(&self, at: f64, tail: &Schedule) -> Result<Schedule> {
        if tail.tf != self.tf || !(tail.t0 <= at && at >= self.t0 && at <= self.tf) {
            return Err(Error::Structure("tail does not fit the splice point".into()));
        }
        let mut modes = Vec::new();
        let mut times = Vec::new();
        for seg in self.segments().filter(|s| s.start < at) {
            if !modes.is_empty() {
                times.push(seg.start);
            }
            modes.push(seg.mode);
        }
        for seg in tail.segments().filter(|s| s.end > at) {
            if !modes.is_empty() {
                times.push(seg.start.max(at));
            }
            modes.push(seg.mode);
        }
        Schedule::normalize(self.t0, self.tf, &modes, &times)
    }

    /// Same signal with `mode` forced on `[start, end)`; switches strictly
    /// inside the window disappear and `end` is clamped to `tf`.
    pub fn overwrite(&self, start: f64, end: f64, mode: Mode) -> Result<Schedule> {
        if !(start >= self.t0 && start < self.tf && end > start) {
            return Err(Error::Domain {
                what: "window start",
                value: start,
                lo: self.t0,
                hi: self.tf,
            });
        }
        let end = end.min(self.tf);
        let before = self.switch_times.partition_point(|&s| s < start);
        let mut modes = self.modes[..=before].to_vec();
        let mut times = self.switch_times[..before].to_vec();
        times.push(start);
        modes.push(mode);
        if end < self.tf {
            times.push(end);
            modes.push(self.mode_at_unchecked(end));
            let after = self.switch_times.partition_point(|&s| s <= end);
            for i in after..self.switch_times.len() {
                times.push(self.switch_times[i]);
                modes.push(self.modes[i + 1]);
            }
        }
        Schedule::normalize(self.t0, self.tf, &modes, &times)
    }

    /// Sample of the binary signal `v̄(t)` on `times`.
    pub fn sample(&self, times: &[f64]) -> Vec<f64> {
        times
            .iter()
            .map(|&t| self.mode_at_unchecked(t.clamp(self.t0, self.tf)).as_embedded())
            .collect()
    }
}

fn check_horizon(t0: f64, tf: f64) -> Result<()> {
    if t0.is_finite() && tf.is_finite() && t0 < tf {
        Ok(())
    } else {
        Err(Error::Structure(format!("invalid horizon [{t0}, {tf}]")))
    }
}
