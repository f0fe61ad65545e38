use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Working precision for all Λ-arithmetic: coefficients in Z/p^M, series
/// truncated at T^D, levels up to N_max (so ω_{N_max} must fit below T^D).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrecisionProfile {
    pub p: u64,
    /// p-adic precision exponent M.
    pub m: u32,
    /// T-adic truncation degree D.
    pub d: usize,
    /// Deepest tower level supported.
    pub n_max: u32,
}

fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut k = 2u64;
    while k * k <= n {
        if n % k == 0 {
            return false;
        }
        k += 1;
    }
    true
}

impl PrecisionProfile {
    pub fn new(p: u64, m: u32, d: usize, n_max: u32) -> Result<Self> {
        if p < 3 || p % 2 == 0 || !is_prime(p) {
            return Err(Error::InvalidProfile(format!("p = {p} must be an odd prime")));
        }
        if m == 0 {
            return Err(Error::InvalidProfile("M must be at least 1".into()));
        }
        if d < 2 {
            return Err(Error::InvalidProfile("D must be at least 2".into()));
        }
        if n_max == 0 {
            return Err(Error::InvalidProfile("N_max must be at least 1".into()));
        }
        // p^M must fit in u64 (and p^{2M} in u128) so modular kernels stay exact.
        let mut modulus: u64 = 1;
        for _ in 0..m {
            modulus = modulus
                .checked_mul(p)
                .filter(|v| *v < (1u64 << 62))
                .ok_or_else(|| Error::InvalidProfile(format!("p^{m} too large for exact kernels")))?;
        }
        let mut deg: usize = 1;
        for _ in 1..n_max {
            deg = deg
                .checked_mul(p as usize)
                .ok_or_else(|| Error::InvalidProfile("p^{N_max-1} overflows".into()))?;
        }
        if deg >= d {
            return Err(Error::InvalidProfile(format!(
                "profile needs p^(N_max-1) = {deg} < D = {d}"
            )));
        }
        Ok(PrecisionProfile { p, m, d, n_max })
    }

    /// Defaults from the artifact conventions: M=16, D=128, N_max=4, p=5.
    pub fn default_p(p: u64) -> Result<Self> {
        Self::new(p, 16, 128, 4)
    }

    /// p^M as u64.
    pub fn modulus(&self) -> u64 {
        let mut out = 1u64;
        for _ in 0..self.m {
            out *= self.p;
        }
        out
    }

    /// p^{2M} as u128, used for doubled-precision freeness certification.
    pub fn modulus_doubled(&self) -> u128 {
        let mut out = 1u128;
        for _ in 0..2 * self.m {
            out *= self.p as u128;
        }
        out
    }

    /// deg ω_n = p^{n-1}.
    pub fn omega_degree(&self, n: u32) -> Result<usize> {
        if n == 0 {
            return Err(Error::InvalidModule("levels are 1-based".into()));
        }
        let mut deg = 1usize;
        for _ in 1..n {
            deg = deg
                .checked_mul(self.p as usize)
                .ok_or(Error::LevelTooDeep {
                    level: n,
                    needed: usize::MAX,
                    available: self.d,
                })?;
        }
        Ok(deg)
    }

    /// Checks a requested level against the profile, returning deg ω_n.
    pub fn require_level(&self, n: u32) -> Result<usize> {
        let deg = self.omega_degree(n)?;
        if n > self.n_max || deg >= self.d {
            return Err(Error::LevelTooDeep {
                level: n,
                needed: deg + 1,
                available: self.d,
            });
        }
        Ok(deg)
    }
}
