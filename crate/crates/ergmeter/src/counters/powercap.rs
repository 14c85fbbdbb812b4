//! Powercap-style microjoule counter directory.

use std::path::{Path, PathBuf};
use std::time::Instant;

use super::{read_integer_file, CounterError, CounterSample, EnergyBackend};

/// Counter backed by a directory holding `energy_uj` and, optionally,
/// `max_energy_range_uj` (the counter modulus in microjoules).
///
/// Powercap counters have no startup epoch; the token is a constant 0 and
/// wraparound is handled through the modulus instead.
pub struct PowercapBackend {
    energy_path: PathBuf,
    wrap_range_uj: Option<u64>,
    id: String,
    epoch: Instant,
}

impl PowercapBackend {
    /// Open a counter directory. An explicit `wrap_range_uj` overrides the
    /// value read from `max_energy_range_uj`; without either, the counter is
    /// treated as non-wrapping.
    pub fn open(dir: impl AsRef<Path>, wrap_range_uj: Option<u64>) -> Result<Self, CounterError> {
        let dir = dir.as_ref();
        let energy_path = dir.join("energy_uj");
        read_integer_file(&energy_path)?;
        let range_path = dir.join("max_energy_range_uj");
        let wrap_range_uj = match wrap_range_uj {
            Some(r) => Some(r),
            None if range_path.is_file() => Some(read_integer_file(&range_path)?),
            None => None,
        };
        Ok(PowercapBackend {
            energy_path,
            wrap_range_uj,
            id: dir.display().to_string(),
            epoch: Instant::now(),
        })
    }
}

impl EnergyBackend for PowercapBackend {
    fn read_sample(&mut self) -> Result<CounterSample, CounterError> {
        let uj = read_integer_file(&self.energy_path)?;
        Ok(CounterSample {
            energy_joules: uj as f64 * 1e-6,
            startup_token: 0,
            read_at: self.epoch.elapsed().as_secs_f64(),
        })
    }

    fn id(&self) -> &str {
        &self.id
    }

    fn wrap_range_uj(&self) -> Option<u64> {
        self.wrap_range_uj
    }
}
