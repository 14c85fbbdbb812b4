//! Script-driven counter emulation.
//!
//! A [`SyntheticScript`] describes node power as a piecewise-constant
//! function of time plus a list of startup events. The emulated counter
//! reports the integral of that power, quantized to the last update tick,
//! and restarts (with an incremented token) at each startup event. This
//! gives tests an analytically known ground truth for the whole
//! read/delta/measure stack.

use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::{CounterError, CounterSample, EnergyBackend};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerSegment {
    pub duration_s: f64,
    pub power_w: f64,
}

/// Piecewise-constant power profile with startup events.
///
/// Past the last segment the power is zero, so scripts may be shorter than
/// the run they back without corrupting the tail of a measurement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticScript {
    pub segments: Vec<PowerSegment>,
    /// Virtual times at which the counter restarts and the token increments.
    #[serde(default)]
    pub startup_events: Vec<f64>,
    #[serde(default = "default_update_hz")]
    pub update_hz: f64,
}

fn default_update_hz() -> f64 {
    10.0
}

impl SyntheticScript {
    /// Single constant-power segment.
    pub fn constant(power_w: f64, duration_s: f64, update_hz: f64) -> Self {
        SyntheticScript {
            segments: vec![PowerSegment {
                duration_s,
                power_w,
            }],
            startup_events: Vec::new(),
            update_hz,
        }
    }

    pub fn from_json_str(json: &str) -> Result<Self, CounterError> {
        let script: SyntheticScript =
            serde_json::from_str(json).map_err(|e| CounterError::InvalidScript {
                reason: e.to_string(),
            })?;
        script.validate()?;
        Ok(script)
    }

    pub fn from_json_file(path: impl AsRef<Path>) -> Result<Self, CounterError> {
        let path = path.as_ref();
        let raw = std::fs::read_to_string(path).map_err(|source| CounterError::IoUnreadable {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_json_str(&raw)
    }

    pub fn validate(&self) -> Result<(), CounterError> {
        let invalid = |reason: &str| CounterError::InvalidScript {
            reason: reason.to_string(),
        };
        if !(self.update_hz > 0.0) {
            return Err(invalid("update_hz must be > 0"));
        }
        for seg in &self.segments {
            if !(seg.duration_s > 0.0) {
                return Err(invalid("segment duration_s must be > 0"));
            }
            if !(seg.power_w >= 0.0) {
                return Err(invalid("segment power_w must be >= 0"));
            }
        }
        if self.startup_events.iter().any(|e| !(*e >= 0.0)) {
            return Err(invalid("startup events must be at non-negative times"));
        }
        Ok(())
    }

    /// Largest segment power; bounds the quantization error to
    /// `peak_power_w() / update_hz` joules.
    pub fn peak_power_w(&self) -> f64 {
        self.segments.iter().map(|s| s.power_w).fold(0.0, f64::max)
    }

    /// Exact integral of the power profile over `[from, to]` virtual seconds,
    /// ignoring quantization and startup events.
    pub fn integral_joules(&self, from: f64, to: f64) -> f64 {
        let mut start = 0.0;
        let mut energy = 0.0;
        for seg in &self.segments {
            let end = start + seg.duration_s;
            let lo = from.max(start);
            let hi = to.min(end);
            if hi > lo {
                energy += seg.power_w * (hi - lo);
            }
            start = end;
        }
        energy
    }

    /// Counter state at virtual time `t`: quantized accumulated energy since
    /// the current epoch, and the token counting crossed startup events.
    fn counter_state(&self, t: f64) -> (f64, u64) {
        let mut token = 0u64;
        let mut epoch_start = 0.0f64;
        for &event in &self.startup_events {
            if event <= t {
                token += 1;
                epoch_start = epoch_start.max(event);
            }
        }
        let tick = (t * self.update_hz).floor() / self.update_hz;
        let energy = self.integral_joules(epoch_start, tick.max(epoch_start));
        (energy, token)
    }
}

enum Clock {
    Manual,
    RealTime(Instant),
}

/// Counter handle driven by a [`SyntheticScript`].
///
/// The virtual clock either advances only through [`advance`](Self::advance)
/// (deterministic tests) or tracks the wall clock from handle creation
/// (wrapping real commands).
pub struct SyntheticBackend {
    script: SyntheticScript,
    clock: Clock,
    offset_s: f64,
    last_read_at: f64,
    id: String,
}

impl SyntheticBackend {
    pub fn manual(script: SyntheticScript) -> Self {
        Self::with_id(script, Clock::Manual, "synthetic")
    }

    pub fn realtime(script: SyntheticScript) -> Self {
        Self::with_id(script, Clock::RealTime(Instant::now()), "synthetic")
    }

    pub fn manual_with_id(script: SyntheticScript, id: impl Into<String>) -> Self {
        Self::with_id(script, Clock::Manual, id)
    }

    fn with_id(script: SyntheticScript, clock: Clock, id: impl Into<String>) -> Self {
        SyntheticBackend {
            script,
            clock,
            offset_s: 0.0,
            last_read_at: -1.0,
            id: id.into(),
        }
    }

    /// Advance the virtual clock by `dt_s` seconds. Negative values are
    /// treated as zero; the clock never moves backwards.
    pub fn advance(&mut self, dt_s: f64) {
        if dt_s > 0.0 {
            self.offset_s += dt_s;
        }
    }

    pub fn script(&self) -> &SyntheticScript {
        &self.script
    }

    fn now(&self) -> f64 {
        match &self.clock {
            Clock::Manual => self.offset_s,
            Clock::RealTime(epoch) => self.offset_s + epoch.elapsed().as_secs_f64(),
        }
    }
}

impl EnergyBackend for SyntheticBackend {
    fn read_sample(&mut self) -> Result<CounterSample, CounterError> {
        let t = self.now();
        let (energy_joules, startup_token) = self.script.counter_state(t);
        // Nudge read_at so repeated reads at one virtual instant still order.
        let read_at = if t > self.last_read_at {
            t
        } else {
            self.last_read_at + 1e-9
        };
        self.last_read_at = read_at;
        Ok(CounterSample {
            energy_joules,
            startup_token,
            read_at,
        })
    }

    fn id(&self) -> &str {
        &self.id
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::counters::energy_delta;
    use proptest::prelude::*;

    fn two_step_script() -> SyntheticScript {
        SyntheticScript {
            segments: vec![
                PowerSegment {
                    duration_s: 1.0,
                    power_w: 100.0,
                },
                PowerSegment {
                    duration_s: 1.0,
                    power_w: 200.0,
                },
            ],
            startup_events: Vec::new(),
            update_hz: 10.0,
        }
    }

    #[test]
    fn constant_power_read_at_two_seconds() {
        let mut backend = SyntheticBackend::manual(SyntheticScript::constant(300.0, 10.0, 10.0));
        backend.advance(2.0);
        let s = backend.read_sample().unwrap();
        assert_eq!(s.energy_joules, 600.0);
        assert_eq!(s.startup_token, 0);
    }

    #[test]
    fn two_segments_integrate() {
        let mut backend = SyntheticBackend::manual(two_step_script());
        backend.advance(2.0);
        assert_eq!(backend.read_sample().unwrap().energy_joules, 300.0);
    }

    #[test]
    fn startup_event_resets_energy_and_bumps_token() {
        let mut script = two_step_script();
        script.startup_events = vec![1.5];
        let mut backend = SyntheticBackend::manual(script);
        backend.advance(2.0);
        let s = backend.read_sample().unwrap();
        assert_eq!(s.startup_token, 1);
        // Restarted at 1.5 s: half a second inside the 200 W segment.
        assert_eq!(s.energy_joules, 100.0);
    }

    #[test]
    fn advance_zero_leaves_counter_unchanged() {
        let mut backend = SyntheticBackend::manual(two_step_script());
        backend.advance(0.7);
        let a = backend.read_sample().unwrap();
        backend.advance(0.0);
        let b = backend.read_sample().unwrap();
        assert_eq!(a.energy_joules, b.energy_joules);
        assert_eq!(a.startup_token, b.startup_token);
        assert!(b.read_at > a.read_at);
    }

    #[test]
    fn power_is_zero_past_script_end() {
        let mut backend = SyntheticBackend::manual(SyntheticScript::constant(100.0, 1.0, 10.0));
        backend.advance(5.0);
        assert_eq!(backend.read_sample().unwrap().energy_joules, 100.0);
    }

    #[test]
    fn script_json_round_trip() {
        let json = r#"{"segments":[{"duration_s":10.0,"power_w":300.0}],"startup_events":[1.5],"update_hz":10}"#;
        let script = SyntheticScript::from_json_str(json).unwrap();
        assert_eq!(script.segments.len(), 1);
        assert_eq!(script.startup_events, vec![1.5]);
        assert_eq!(script.update_hz, 10.0);
    }

    #[test]
    fn script_rejects_bad_values() {
        assert!(SyntheticScript::from_json_str(
            r#"{"segments":[{"duration_s":0.0,"power_w":1.0}],"update_hz":10}"#
        )
        .is_err());
        assert!(SyntheticScript::from_json_str(
            r#"{"segments":[{"duration_s":1.0,"power_w":-2.0}],"update_hz":10}"#
        )
        .is_err());
        assert!(SyntheticScript::from_json_str(
            r#"{"segments":[{"duration_s":1.0,"power_w":2.0}],"update_hz":0}"#
        )
        .is_err());
    }

    /// Independent piecewise integral used as the test oracle; deliberately
    /// a different formulation than `SyntheticScript::integral_joules`.
    fn oracle_integral(segments: &[(f64, f64)], upto: f64) -> f64 {
        let mut t = 0.0;
        let mut e = 0.0;
        for &(dur, pow) in segments {
            if upto <= t {
                break;
            }
            e += pow * (upto.min(t + dur) - t).max(0.0);
            t += dur;
        }
        e
    }

    proptest! {
        #[test]
        fn same_token_energy_is_monotone(
            durs in proptest::collection::vec(0.05f64..3.0, 1..5),
            pows in proptest::collection::vec(0.0f64..500.0, 5),
            steps in proptest::collection::vec(0.0f64..1.0, 1..8),
        ) {
            let segments = durs
                .iter()
                .zip(&pows)
                .map(|(&duration_s, &power_w)| PowerSegment { duration_s, power_w })
                .collect();
            let script = SyntheticScript { segments, startup_events: vec![], update_hz: 10.0 };
            let mut backend = SyntheticBackend::manual(script);
            let mut last = backend.read_sample().unwrap();
            for dt in steps {
                backend.advance(dt);
                let next = backend.read_sample().unwrap();
                prop_assert!(next.energy_joules >= last.energy_joules);
                prop_assert!(next.read_at > last.read_at);
                prop_assert_eq!(next.startup_token, last.startup_token);
                last = next;
            }
        }

        #[test]
        fn quantization_stays_within_one_tick(
            power in 0.0f64..1000.0,
            t in 0.0f64..20.0,
            hz in 1.0f64..100.0,
        ) {
            let mut backend =
                SyntheticBackend::manual(SyntheticScript::constant(power, 30.0, hz));
            backend.advance(t);
            let reported = backend.read_sample().unwrap().energy_joules;
            let truth = power * t;
            prop_assert!((reported - truth).abs() <= power / hz + 1e-9);
        }

        #[test]
        fn delta_matches_analytic_integral(
            durs in proptest::collection::vec(0.05f64..2.0, 1..5),
            pows in proptest::collection::vec(0.0f64..500.0, 5),
            t1 in 0.0f64..3.0,
            dt in 0.0f64..5.0,
            hz in 5.0f64..50.0,
        ) {
            let raw: Vec<(f64, f64)> =
                durs.iter().zip(&pows).map(|(&d, &p)| (d, p)).collect();
            let segments = raw
                .iter()
                .map(|&(duration_s, power_w)| PowerSegment { duration_s, power_w })
                .collect();
            let script = SyntheticScript { segments, startup_events: vec![], update_hz: hz };
            let peak = script.peak_power_w();
            let mut backend = SyntheticBackend::manual(script);
            backend.advance(t1);
            let before = backend.read_sample().unwrap();
            backend.advance(dt);
            let after = backend.read_sample().unwrap();
            let measured = energy_delta(&before, &after, None).unwrap();
            let truth = oracle_integral(&raw, t1 + dt) - oracle_integral(&raw, t1);
            // One quantization step of slack per endpoint.
            prop_assert!((measured - truth).abs() <= 2.0 * peak / hz + 1e-9);
        }

        #[test]
        fn startup_between_samples_always_invalidates(
            t1 in 0.1f64..5.0,
            gap in 0.05f64..5.0,
            frac in 0.001f64..0.999,
        ) {
            let event = t1 + gap * frac;
            let script = SyntheticScript {
                segments: vec![PowerSegment { duration_s: 20.0, power_w: 100.0 }],
                startup_events: vec![event],
                update_hz: 10.0,
            };
            let mut backend = SyntheticBackend::manual(script);
            backend.advance(t1);
            let before = backend.read_sample().unwrap();
            backend.advance(gap);
            let after = backend.read_sample().unwrap();
            let invalidated = matches!(
                energy_delta(&before, &after, None),
                Err(CounterError::StartupChanged { .. })
            );
            prop_assert!(invalidated);
        }
    }
}
