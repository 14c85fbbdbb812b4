//! Node-level counter directory with `energy` and `startup` files.

use std::path::{Path, PathBuf};
use std::time::Instant;

use super::{read_integer_file, CounterError, CounterSample, EnergyBackend};

const PAIRED_READ_RETRIES: u32 = 3;

/// Counter backed by a directory holding `energy` (accumulated joules,
/// ASCII integer) and `startup` (epoch token, ASCII integer).
#[derive(Debug)]
pub struct PmDirBackend {
    energy_path: PathBuf,
    startup_path: PathBuf,
    id: String,
    epoch: Instant,
}

impl PmDirBackend {
    /// Open a counter directory, verifying both files are readable.
    pub fn open(dir: impl AsRef<Path>) -> Result<Self, CounterError> {
        let dir = dir.as_ref();
        let backend = PmDirBackend {
            energy_path: dir.join("energy"),
            startup_path: dir.join("startup"),
            id: dir.display().to_string(),
            epoch: Instant::now(),
        };
        read_integer_file(&backend.energy_path)?;
        read_integer_file(&backend.startup_path)?;
        Ok(backend)
    }
}

impl EnergyBackend for PmDirBackend {
    /// The two files cannot be read atomically, so the startup token is read
    /// on both sides of the energy read; if the bracketing reads disagree the
    /// pair is torn and retried.
    fn read_sample(&mut self) -> Result<CounterSample, CounterError> {
        for _ in 0..=PAIRED_READ_RETRIES {
            let token_before = read_integer_file(&self.startup_path)?;
            let energy = read_integer_file(&self.energy_path)?;
            let token_after = read_integer_file(&self.startup_path)?;
            if token_before == token_after {
                return Ok(CounterSample {
                    energy_joules: energy as f64,
                    startup_token: token_before,
                    read_at: self.epoch.elapsed().as_secs_f64(),
                });
            }
        }
        Err(CounterError::TornRead {
            retries: PAIRED_READ_RETRIES,
        })
    }

    fn id(&self) -> &str {
        &self.id
    }
}
