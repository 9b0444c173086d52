use std::collections::VecDeque;

use super::FatigueConfig;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct Entry {
    ts: i64,
    eye_closed: bool,
}

/// Output of one [`FatigueState::update`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FatigueReading {
    pub perclos_pct: f64,
    pub drowsy: bool,
    pub yawns: u64,
}

/// Sliding-window eye-closure estimator with a yawn counter.
///
/// Each interval between consecutive frames counts as closed time when the
/// earlier frame had closed eyes. Durations are summed in integer
/// milliseconds, so the running total never drifts from a recomputation.
#[derive(Clone, Debug, Default)]
pub struct FatigueState {
    window: VecDeque<Entry>,
    closed_ms: i64,
    open_run: usize,
    yawns: u64,
    perclos_pct: f64,
    drowsy: bool,
}

/// `100·closed/span`, or 0 for an empty span.
fn perclos(closed_ms: i64, span_ms: i64) -> f64 {
    if span_ms == 0 {
        0.0
    } else {
        100.0 * closed_ms as f64 / span_ms as f64
    }
}

impl FatigueState {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn perclos_pct(&self) -> f64 {
        self.perclos_pct
    }

    pub fn drowsy(&self) -> bool {
        self.drowsy
    }

    pub fn yawns(&self) -> u64 {
        self.yawns
    }

    /// Time between the oldest and newest frame in the window.
    pub fn span_ms(&self) -> i64 {
        match (self.window.front(), self.window.back()) {
            (Some(a), Some(b)) => b.ts - a.ts,
            _ => 0,
        }
    }

    pub fn len(&self) -> usize {
        self.window.len()
    }

    pub fn is_empty(&self) -> bool {
        self.window.is_empty()
    }

    pub fn update(&mut self, timestamp_ms: i64, eye_closed: bool, mouth_open: bool, config: &FatigueConfig) -> Result<FatigueReading> {
        if let Some(last) = self.window.back() {
            if timestamp_ms < last.ts {
                return Err(Error::InputOrder(format!("timestamp {timestamp_ms} ms precedes {} ms", last.ts)));
            }
            if last.eye_closed {
                self.closed_ms += timestamp_ms - last.ts;
            }
        }
        self.window.push_back(Entry { ts: timestamp_ms, eye_closed });
        while let Some(front) = self.window.front().copied() {
            if timestamp_ms - front.ts <= config.window_ms {
                break;
            }
            self.window.pop_front();
            if front.eye_closed {
                let next = self.window.front().expect("newest entry is never evicted");
                self.closed_ms -= next.ts - front.ts;
            }
        }

        if mouth_open {
            self.open_run += 1;
            if self.open_run == config.yawn_min_frames {
                self.yawns += 1;
            }
        } else {
            self.open_run = 0;
        }

        let span = self.span_ms();
        self.perclos_pct = perclos(self.closed_ms, span);
        self.drowsy = self.perclos_pct >= config.perclos_threshold_pct && 2 * span >= config.window_ms;
        Ok(FatigueReading {
            perclos_pct: self.perclos_pct,
            drowsy: self.drowsy,
            yawns: self.yawns,
        })
    }
}

/// Consuming form of [`FatigueState::update`].
pub fn update_fatigue(mut state: FatigueState, timestamp_ms: i64, eye_closed: bool, mouth_open: bool, config: &FatigueConfig) -> Result<FatigueState> {
    state.update(timestamp_ms, eye_closed, mouth_open, config)?;
    Ok(state)
}

/// Reference PERCLOS trace: for every frame, rescans the trailing window from
/// scratch and sums its closed intervals.
pub fn perclos_oracle(samples: &[(i64, bool)], window_ms: i64) -> Result<Vec<f64>> {
    if let Some(i) = samples.windows(2).position(|w| w[1].0 < w[0].0) {
        return Err(Error::InputOrder(format!("sample {} at {} ms precedes {} ms", i + 1, samples[i + 1].0, samples[i].0)));
    }
    let mut trace = Vec::with_capacity(samples.len());
    for (i, &(now, _)) in samples.iter().enumerate() {
        let mut start = i;
        while start > 0 && now - samples[start - 1].0 <= window_ms {
            start -= 1;
        }
        let window = &samples[start..=i];
        let closed: i64 = window.windows(2).filter(|w| w[0].1).map(|w| w[1].0 - w[0].0).sum();
        trace.push(perclos(closed, now - window[0].0));
    }
    Ok(trace)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(samples: &[(i64, bool)], config: &FatigueConfig) -> Vec<FatigueReading> {
        let mut state = FatigueState::new();
        samples.iter().map(|&(t, c)| state.update(t, c, false, config).unwrap()).collect()
    }

    #[test]
    fn twelve_of_sixty_seconds() {
        let cfg = FatigueConfig::default();
        let samples: Vec<(i64, bool)> = (0..=60).map(|s| (s * 1000, s < 12)).collect();
        let last = *run(&samples, &cfg).last().unwrap();
        assert_eq!(last.perclos_pct, 20.0);
        assert!(last.drowsy);
    }

    #[test]
    fn all_open_and_all_closed() {
        let cfg = FatigueConfig::default();
        let open: Vec<(i64, bool)> = (0..100).map(|i| (i * 700, false)).collect();
        assert!(run(&open, &cfg).iter().all(|r| r.perclos_pct == 0.0 && !r.drowsy));
        let closed: Vec<(i64, bool)> = (0..100).map(|i| (i * 700, true)).collect();
        let readings = run(&closed, &cfg);
        assert_eq!(readings[0].perclos_pct, 0.0);
        assert!(readings[1..].iter().all(|r| r.perclos_pct == 100.0));
        // warm-up: drowsy only once the window is at least half covered
        for (r, &(t, _)) in readings.iter().zip(&closed) {
            assert_eq!(r.drowsy, 2 * t >= cfg.window_ms);
        }
    }

    #[test]
    fn eviction_uses_strict_age() {
        let cfg = FatigueConfig { window_ms: 1000, ..Default::default() };
        let mut s = FatigueState::new();
        s.update(0, true, false, &cfg).unwrap();
        s.update(1000, false, false, &cfg).unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!(s.perclos_pct(), 100.0);
        s.update(1001, false, false, &cfg).unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!(s.perclos_pct(), 0.0);
    }

    #[test]
    fn yawn_counts_rising_edge_once() {
        let cfg = FatigueConfig { yawn_min_frames: 3, ..Default::default() };
        let mut s = FatigueState::new();
        let mouth = [true, true, false, true, true, true, true, true, false, true, true, true];
        let counts: Vec<u64> = mouth.iter().enumerate().map(|(i, &m)| s.update(i as i64 * 33, false, m, &cfg).unwrap().yawns).collect();
        assert_eq!(counts, [0, 0, 0, 0, 0, 1, 1, 1, 1, 1, 1, 2]);
    }

    #[test]
    fn decreasing_timestamp_is_rejected() {
        let cfg = FatigueConfig::default();
        let mut s = FatigueState::new();
        s.update(10, false, false, &cfg).unwrap();
        s.update(10, true, false, &cfg).unwrap();
        assert!(matches!(s.update(9, false, false, &cfg), Err(Error::InputOrder(_))));
        assert!(matches!(perclos_oracle(&[(5, true), (4, true)], 100), Err(Error::InputOrder(_))));
    }

    #[test]
    fn oracle_trivial_cases() {
        assert!(perclos_oracle(&[], 1000).unwrap().is_empty());
        assert_eq!(perclos_oracle(&[(7, true)], 1000).unwrap(), [0.0]);
    }
}
