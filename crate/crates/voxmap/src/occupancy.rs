//! Log-odds occupancy arithmetic.
//!
//! Cells store occupancy belief as log-odds `l = ln(p / (1 - p))`, so a
//! Bayesian update per observation is a single addition. Values are
//! clamped to a configurable band, which bounds how much evidence a
//! cell can accumulate and lets later contradicting observations remap
//! it quickly.

use thiserror::Error;

#[derive(Debug, Error)]
#[error("probability {0} outside the open interval (0, 1)")]
pub struct ProbabilityError(pub f64);

#[derive(Debug, Error)]
#[error("invalid occupancy params: {0}")]
pub struct ParamError(String);

/// Log-odds of a probability in the open interval (0, 1).
pub fn logodds(p: f64) -> Result<f64, ProbabilityError> {
    if !(p > 0.0 && p < 1.0) {
        return Err(ProbabilityError(p));
    }
    Ok((p / (1.0 - p)).ln())
}

/// Inverse of [`logodds`].
#[inline]
pub fn prob(l: f64) -> f64 {
    1.0 / (1.0 + (-l).exp())
}

/// Update increments, clamp bounds and classification thresholds.
///
/// Thresholds are expressed and compared in probability space; the
/// increments are log-odds. Defaults: `p_hit = 0.7`, `p_miss = 0.4`,
/// clamps `[-2, 3.5]`, thresholds a hair above and below 0.5.
#[derive(Clone, Copy, PartialEq, Debug)]
pub struct OccupancyParams {
    /// Log-odds added per endpoint observation; positive.
    pub l_hit: f64,
    /// Log-odds added per traversal observation; negative.
    pub l_miss: f64,
    pub l_min: f64,
    pub l_max: f64,
    /// Cells with `prob > phi_occ` classify as occupied.
    pub phi_occ: f64,
    /// Cells with `prob < phi_free` classify as free.
    pub phi_free: f64,
}

impl Default for OccupancyParams {
    fn default() -> Self {
        Self {
            l_hit: logodds(0.7).unwrap(),
            l_miss: logodds(0.4).unwrap(),
            l_min: -2.0,
            l_max: 3.5,
            phi_occ: 0.5 + 1e-6,
            phi_free: 0.5 - 1e-6,
        }
    }
}

impl OccupancyParams {
    /// Builds params from hit/miss probabilities.
    pub fn from_probabilities(
        p_hit: f64,
        p_miss: f64,
        l_min: f64,
        l_max: f64,
        phi_occ: f64,
        phi_free: f64,
    ) -> Result<Self, ParamError> {
        let l_hit =
            logodds(p_hit).map_err(|_| ParamError(format!("p_hit {p_hit} outside (0, 1)")))?;
        let l_miss =
            logodds(p_miss).map_err(|_| ParamError(format!("p_miss {p_miss} outside (0, 1)")))?;
        let params = Self {
            l_hit,
            l_miss,
            l_min,
            l_max,
            phi_occ,
            phi_free,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<(), ParamError> {
        if !(self.l_hit > 0.0) {
            return Err(ParamError(format!(
                "l_hit must be positive, got {}",
                self.l_hit
            )));
        }
        if !(self.l_miss < 0.0) {
            return Err(ParamError(format!(
                "l_miss must be negative, got {}",
                self.l_miss
            )));
        }
        if !(self.l_min < 0.0 && self.l_max > 0.0) {
            return Err(ParamError(format!(
                "clamp band must straddle zero, got [{}, {}]",
                self.l_min, self.l_max
            )));
        }
        if !(0.0 < self.phi_free && self.phi_free < self.phi_occ && self.phi_occ < 1.0) {
            return Err(ParamError(format!(
                "need 0 < phi_free < phi_occ < 1, got {} / {}",
                self.phi_free, self.phi_occ
            )));
        }
        Ok(())
    }
}

/// Log-odds occupancy belief of one cell.
#[derive(Clone, Copy, PartialEq, PartialOrd, Debug, Default)]
pub struct OccValue(f64);

impl OccValue {
    /// Belief of a never-observed cell: p = 0.5.
    pub const UNKNOWN: OccValue = OccValue(0.0);

    pub const fn new(log_odds: f64) -> Self {
        Self(log_odds)
    }

    #[inline]
    pub fn log_odds(self) -> f64 {
        self.0
    }

    #[inline]
    pub fn prob(self) -> f64 {
        prob(self.0)
    }
}

/// Endpoint observation: add `l_hit`, clamped from above.
#[inline]
pub fn update_hit(v: OccValue, params: &OccupancyParams) -> OccValue {
    OccValue((v.0 + params.l_hit).min(params.l_max))
}

/// Traversal observation: add `l_miss`, clamped from below.
#[inline]
pub fn update_miss(v: OccValue, params: &OccupancyParams) -> OccValue {
    OccValue((v.0 + params.l_miss).max(params.l_min))
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum CellClass {
    Occupied,
    Free,
    Unknown,
}

/// Classifies a cell. Never-observed cells are unknown regardless of
/// their stored value; observed cells between the thresholds stay
/// unknown as well.
#[inline]
pub fn classify(v: OccValue, observed: bool, params: &OccupancyParams) -> CellClass {
    if !observed {
        return CellClass::Unknown;
    }
    let p = v.prob();
    if p > params.phi_occ {
        CellClass::Occupied
    } else if p < params.phi_free {
        CellClass::Free
    } else {
        CellClass::Unknown
    }
}
