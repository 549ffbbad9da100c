//! Twisted-pair channel: insertion loss, direct-path gain and power-sum FEXT.
//!
//! Attenuation follows a two-coefficient law, `k1·√f + k2·f` dB per km with
//! `f` in MHz. FEXT coupling scales with `(n/49)^0.6`, `(f/f0)²` and the
//! coupling length `d/d0`, and is referred to the victim's received signal
//! through the direct-path gain.
//!
//! Every evaluation above `f_valid_max` is rejected; the model is never
//! extrapolated.

use std::path::Path;

use crate::error::{Result, SimError};
use crate::ini::Document;

const MHZ: f64 = 1.0e6;
/// Disturber count at which the FEXT constant `kx_db` is specified.
pub const FEXT_REFERENCE_DISTURBERS: f64 = 49.0;
const FEXT_DISTURBER_EXPONENT: f64 = 0.6;

/// Parametric cable model.
///
/// The defaults are a surrogate, tuned so the bundled cluster presets give
/// plausible coverage; see the README. Load measured
/// coefficients with [`CableModelParams::load`] for real studies.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CableModelParams {
    /// dB per km per √MHz.
    pub k1: f64,
    /// dB per km per MHz.
    pub k2: f64,
    /// FEXT coupling at `f0`, `d0` and 49 disturbers, dB (negative).
    pub kx_db: f64,
    /// FEXT reference frequency, Hz.
    pub f0: f64,
    /// FEXT reference coupling length, m.
    pub d0: f64,
    /// Upper model validity frequency, Hz.
    pub f_valid_max: f64,
}

impl Default for CableModelParams {
    fn default() -> Self {
        CableModelParams {
            k1: 10.5,
            k2: 0.1,
            kx_db: -22.0,
            f0: 1.0e6,
            d0: 1000.0,
            f_valid_max: 200.0e6,
        }
    }
}

impl CableModelParams {
    pub fn new(k1: f64, k2: f64, kx_db: f64, f0: f64, d0: f64, f_valid_max: f64) -> Result<Self> {
        let params = CableModelParams {
            k1,
            k2,
            kx_db,
            f0,
            d0,
            f_valid_max,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        let check = |ok: bool, key: &str, msg: &str| {
            if ok {
                Ok(())
            } else {
                Err(SimError::validation(key, msg))
            }
        };
        check(self.k1.is_finite() && self.k1 >= 0.0, "k1", "must be finite and >= 0")?;
        check(self.k2.is_finite() && self.k2 >= 0.0, "k2", "must be finite and >= 0")?;
        check(self.kx_db.is_finite() && self.kx_db < 0.0, "kx_db", "must be finite and < 0")?;
        check(self.f0.is_finite() && self.f0 > 0.0, "f0_hz", "must be finite and > 0")?;
        check(self.d0.is_finite() && self.d0 > 0.0, "d0_m", "must be finite and > 0")?;
        check(
            self.f_valid_max.is_finite() && self.f_valid_max > 0.0,
            "f_valid_max_hz",
            "must be finite and > 0",
        )
    }

    fn check_args(&self, f: f64, d: f64) -> Result<()> {
        if !(f > 0.0 && f <= self.f_valid_max) {
            return Err(SimError::ModelValidity {
                f_hz: f,
                f_valid_max_hz: self.f_valid_max,
            });
        }
        if !(d >= 0.0) || !d.is_finite() {
            return Err(SimError::domain(format!("loop length must be >= 0 m, got {d}")));
        }
        Ok(())
    }

    /// Loss per metre at `f`, dB. Callers must have range-checked `f`.
    pub(crate) fn loss_db_per_m(&self, f: f64) -> f64 {
        let mhz = f / MHZ;
        (self.k1 * mhz.sqrt() + self.k2 * mhz) / 1000.0
    }

    /// Length-independent part of the FEXT gain, per metre of coupling.
    pub(crate) fn fext_coupling_per_m(&self, f: f64, n_disturbers: u32) -> f64 {
        if n_disturbers == 0 {
            return 0.0;
        }
        let ratio = f / self.f0;
        10f64.powf(self.kx_db / 10.0)
            * (f64::from(n_disturbers) / FEXT_REFERENCE_DISTURBERS).powf(FEXT_DISTURBER_EXPONENT)
            * ratio
            * ratio
            / self.d0
    }

    pub(crate) fn check_frequency(&self, f: f64) -> Result<()> {
        self.check_args(f, 0.0)
    }

    /// Insertion loss in dB of a loop of length `d` metres at frequency `f` Hz.
    pub fn insertion_loss_db(&self, f: f64, d: f64) -> Result<f64> {
        self.check_args(f, d)?;
        Ok(self.loss_db_per_m(f) * d)
    }

    /// Linear power gain of the direct path, in (0, 1].
    pub fn direct_gain(&self, f: f64, d: f64) -> Result<f64> {
        Ok(10f64.powf(-self.insertion_loss_db(f, d)? / 10.0))
    }

    /// Linear power gain of the aggregate FEXT from `n_disturbers` pairs,
    /// as seen at the victim receiver.
    pub fn fext_gain(&self, f: f64, d: f64, n_disturbers: u32) -> Result<f64> {
        let direct = self.direct_gain(f, d)?;
        Ok(direct * self.fext_coupling_per_m(f, n_disturbers) * d)
    }

    /// Parses a cable parameter file (`[cable]` section, all six keys).
    pub fn from_ini_str(source_name: &str, text: &str) -> Result<Self> {
        const KEYS: [&str; 6] = ["k1", "k2", "kx_db", "f0_hz", "d0_m", "f_valid_max_hz"];
        let doc = Document::parse(source_name, text, None)?;
        doc.check_sections(&["cable"])?;
        doc.check_keys("cable", &KEYS)?;
        let require = |key: &str| -> Result<f64> {
            doc.parse_value::<f64>("cable", key)?
                .ok_or_else(|| SimError::validation(key, "missing from [cable]"))
        };
        Self::new(
            require("k1")?,
            require("k2")?,
            require("kx_db")?,
            require("f0_hz")?,
            require("d0_m")?,
            require("f_valid_max_hz")?,
        )
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| SimError::io(path, e))?;
        Self::from_ini_str(&path.display().to_string(), &text)
    }

    /// Renders the parameters in the cable file format.
    pub fn to_ini_string(&self) -> String {
        format!(
            "[cable]\nk1 = {}\nk2 = {}\nkx_db = {}\nf0_hz = {}\nd0_m = {}\nf_valid_max_hz = {}\n",
            self.k1, self.k2, self.kx_db, self.f0, self.d0, self.f_valid_max
        )
    }
}
