//! Closed-form calculators for brute-force, denial-of-service and
//! reconnaissance threat models.

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive};

use crate::error::{Error, Result};

fn invalid(name: &'static str, reason: &'static str) -> Error {
    Error::InvalidParameter { name, reason }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BruteForceParams {
    pub alphabet_size: u64,
    pub password_length: u32,
    /// Seconds per guess.
    pub guess_time: f64,
    pub processors: u64,
    /// Seconds since the attack started.
    pub elapsed: f64,
}

impl BruteForceParams {
    pub fn validate(&self) -> Result<()> {
        if self.alphabet_size < 2 {
            return Err(invalid("alphabet_size", "must be at least 2"));
        }
        if self.password_length < 1 {
            return Err(invalid("password_length", "must be at least 1"));
        }
        if !(self.guess_time > 0.0 && self.guess_time.is_finite()) {
            return Err(invalid("guess_time", "must be positive and finite"));
        }
        if self.processors < 1 {
            return Err(invalid("processors", "must be at least 1"));
        }
        if !(self.elapsed >= 0.0) {
            return Err(invalid("elapsed", "must be non-negative"));
        }
        Ok(())
    }

    /// `A^k`, exact.
    pub fn search_space(&self) -> BigUint {
        num_traits::pow(BigUint::from(self.alphabet_size), self.password_length as usize)
    }

    /// Guesses per second, `1 / T`.
    pub fn guess_rate(&self) -> f64 {
        1.0 / self.guess_time
    }
}

fn to_f64(n: &BigUint) -> f64 {
    n.to_f64().unwrap_or(f64::INFINITY)
}

/// Expected time to success, `A^k / (2p) · T` seconds.
pub fn brute_force_expected_time(p: &BruteForceParams) -> Result<f64> {
    p.validate()?;
    Ok(to_f64(&p.search_space()) / (2.0 * p.processors as f64) * p.guess_time)
}

/// `min(r·t / A^k, 1)`.
pub fn brute_force_success_prob(p: &BruteForceParams) -> Result<f64> {
    p.validate()?;
    Ok((p.guess_rate() * p.elapsed / to_f64(&p.search_space())).min(1.0))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DosParams {
    /// Requests per second the system can absorb.
    pub capacity: f64,
    pub legit_rate: f64,
    pub attack_rate: f64,
    pub legit_arrival: f64,
    pub attack_arrival: f64,
    pub service_rate: f64,
}

impl DosParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.capacity > 0.0 && self.capacity.is_finite()) {
            return Err(invalid("capacity", "must be positive and finite"));
        }
        if !(self.service_rate > 0.0 && self.service_rate.is_finite()) {
            return Err(invalid("service_rate", "must be positive and finite"));
        }
        for (name, v) in [
            ("legit_rate", self.legit_rate),
            ("attack_rate", self.attack_rate),
            ("legit_arrival", self.legit_arrival),
            ("attack_arrival", self.attack_arrival),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(invalid(name, "must be non-negative and finite"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DosOutcome {
    /// `R_legit + R_attack > C`.
    pub overloaded: bool,
    /// `(λ_legit + λ_attack) / μ`, unbounded.
    pub utilization: f64,
    /// `utilization` clamped to [0, 1].
    pub overload_probability: f64,
}

pub fn dos_overload(p: &DosParams) -> Result<DosOutcome> {
    p.validate()?;
    let utilization = (p.legit_arrival + p.attack_arrival) / p.service_rate;
    Ok(DosOutcome {
        overloaded: p.legit_rate + p.attack_rate > p.capacity,
        utilization,
        overload_probability: utilization.clamp(0.0, 1.0),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReconParams {
    pub ip_count: u64,
    pub port_count: u64,
    pub service_count: u64,
    pub scan_rate: f64,
    pub detection_scale: f64,
    pub time: f64,
    pub vulnerabilities: u64,
    pub exploitable: u64,
    /// Carried for completeness; no calculator uses it.
    pub detection_threshold: Option<f64>,
}

impl ReconParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("ip_count", self.ip_count),
            ("port_count", self.port_count),
            ("service_count", self.service_count),
            ("vulnerabilities", self.vulnerabilities),
        ] {
            if v < 1 {
                return Err(invalid(name, "must be at least 1"));
            }
        }
        if self.exploitable > self.vulnerabilities {
            return Err(invalid("exploitable", "cannot exceed vulnerabilities"));
        }
        for (name, v) in [("scan_rate", self.scan_rate), ("detection_scale", self.detection_scale), ("time", self.time)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(invalid(name, "must be non-negative and finite"));
            }
        }
        Ok(())
    }
}

/// `N × P × S`, exact.
pub fn recon_search_space(p: &ReconParams) -> Result<BigUint> {
    p.validate()?;
    Ok(BigUint::one() * p.ip_count * p.port_count * p.service_count)
}

/// `1 − exp(−β · r_scan · T)`.
pub fn recon_detect_prob(p: &ReconParams) -> Result<f64> {
    p.validate()?;
    Ok(-libm::expm1(-p.detection_scale * p.scan_rate * p.time))
}

/// `1 − ((V − v) / V)^(r_scan · T)`.
pub fn recon_success_prob(p: &ReconParams) -> Result<f64> {
    p.validate()?;
    let miss = (p.vulnerabilities - p.exploitable) as f64 / p.vulnerabilities as f64;
    Ok((1.0 - libm::pow(miss, p.scan_rate * p.time)).clamp(0.0, 1.0))
}
