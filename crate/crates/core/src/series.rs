use crate::error::{Error, Result};
use crate::poly::DistPoly;
use crate::profile::PrecisionProfile;
use num_bigint::BigInt;
use num_traits::{Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

/// Extended-gcd inverse modulo a (possibly non-prime) power p^M. The input
/// must be a unit, i.e. coprime to p.
pub fn inv_mod(a: u64, modulus: u64) -> u64 {
    let (mut r0, mut r1) = (modulus as i128, (a % modulus) as i128);
    let (mut s0, mut s1) = (0i128, 1i128);
    while r1 != 0 {
        let q = r0 / r1;
        (r0, r1) = (r1, r0 - q * r1);
        (s0, s1) = (s1, s0 - q * s1);
    }
    assert_eq!(r0, 1, "inv_mod of a non-unit");
    s0.rem_euclid(modulus as i128) as u64
}

/// p-adic valuation of a canonical representative; `m` is returned for 0,
/// i.e. "at least M at this precision".
pub fn vp(x: u64, p: u64, m: u32) -> u32 {
    if x == 0 {
        return m;
    }
    let mut v = 0;
    let mut x = x;
    while x % p == 0 {
        x /= p;
        v += 1;
    }
    v
}

/// Full (untruncated) product of coefficient vectors modulo `modulus`.
pub fn poly_mul_mod(a: &[u64], b: &[u64], modulus: u64) -> Vec<u64> {
    if a.is_empty() || b.is_empty() {
        return vec![];
    }
    let mut out = vec![0u64; a.len() + b.len() - 1];
    for (i, &ai) in a.iter().enumerate() {
        if ai == 0 {
            continue;
        }
        for (j, &bj) in b.iter().enumerate() {
            if bj == 0 {
                continue;
            }
            let t = (ai as u128 * bj as u128 + out[i + j] as u128) % modulus as u128;
            out[i + j] = t as u64;
        }
    }
    out
}

fn reduce_bigint(x: &BigInt, modulus: u64) -> u64 {
    let m = BigInt::from(modulus);
    let r = ((x % &m) + &m) % &m;
    r.to_u64().unwrap()
}

/// An element of Λ at working precision: coefficients in Z/p^M (canonical
/// representatives in [0, p^M)), truncated at T^D.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RingElem {
    prof: PrecisionProfile,
    coeffs: Vec<u64>,
}

/// Result of Weierstrass preparation: input ≡ p^mu · unit · dist.
#[derive(Debug, Clone)]
pub struct PrepResult {
    pub mu: u32,
    pub unit: RingElem,
    pub dist: DistPoly,
}

impl RingElem {
    pub fn zero(prof: PrecisionProfile) -> Self {
        RingElem {
            prof,
            coeffs: vec![0; prof.d],
        }
    }

    pub fn one(prof: PrecisionProfile) -> Self {
        Self::constant(prof, 1)
    }

    pub fn constant(prof: PrecisionProfile, c: i64) -> Self {
        let mut out = Self::zero(prof);
        out.coeffs[0] = (c as i128).rem_euclid(prof.modulus() as i128) as u64;
        out
    }

    pub fn monomial(prof: PrecisionProfile, deg: usize, c: i64) -> Self {
        assert!(deg < prof.d, "monomial degree beyond truncation");
        let mut out = Self::zero(prof);
        out.coeffs[deg] = (c as i128).rem_euclid(prof.modulus() as i128) as u64;
        out
    }

    pub fn from_int_coeffs(prof: PrecisionProfile, coeffs: &[i64]) -> Result<Self> {
        if coeffs.len() > prof.d {
            return Err(Error::InsufficientTPrecision { d: prof.d });
        }
        let mut out = Self::zero(prof);
        let md = prof.modulus() as i128;
        for (i, &c) in coeffs.iter().enumerate() {
            out.coeffs[i] = (c as i128).rem_euclid(md) as u64;
        }
        Ok(out)
    }

    /// Reduces an exact distinguished polynomial into the working ring.
    pub fn from_dist(prof: PrecisionProfile, p: &DistPoly) -> Result<Self> {
        if p.degree() >= prof.d {
            return Err(Error::InsufficientTPrecision { d: prof.d });
        }
        let mut out = Self::zero(prof);
        for (i, c) in p.coeffs().iter().enumerate() {
            out.coeffs[i] = reduce_bigint(c, prof.modulus());
        }
        Ok(out)
    }

    pub fn profile(&self) -> PrecisionProfile {
        self.prof
    }

    pub fn coeffs(&self) -> &[u64] {
        &self.coeffs
    }

    pub fn coeff(&self, i: usize) -> u64 {
        self.coeffs.get(i).copied().unwrap_or(0)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|&c| c == 0)
    }

    fn assert_compat(&self, other: &Self) {
        assert_eq!(self.prof, other.prof, "mixed precision profiles");
    }

    pub fn add(&self, other: &Self) -> Self {
        self.assert_compat(other);
        let md = self.prof.modulus();
        let coeffs = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(&a, &b)| {
                let s = a as u128 + b as u128;
                (s % md as u128) as u64
            })
            .collect();
        RingElem {
            prof: self.prof,
            coeffs,
        }
    }

    pub fn neg(&self) -> Self {
        let md = self.prof.modulus();
        let coeffs = self
            .coeffs
            .iter()
            .map(|&a| if a == 0 { 0 } else { md - a })
            .collect();
        RingElem {
            prof: self.prof,
            coeffs,
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &Self) -> Self {
        self.assert_compat(other);
        let md = self.prof.modulus() as u128;
        let d = self.prof.d;
        let mut coeffs = vec![0u64; d];
        for k in 0..d {
            // Accumulate raw u128; D · (p^M)^2 stays well below 2^128 for all
            // profiles accepted by PrecisionProfile::new.
            let mut acc: u128 = 0;
            let lo = 0.max(k as isize - (d as isize - 1)) as usize;
            for i in lo..=k {
                let a = self.coeffs[i];
                if a == 0 {
                    continue;
                }
                let b = other.coeffs[k - i];
                if b != 0 {
                    acc += a as u128 * b as u128;
                    if acc >= 1 << 120 {
                        acc %= md;
                    }
                }
            }
            coeffs[k] = (acc % md) as u64;
        }
        RingElem {
            prof: self.prof,
            coeffs,
        }
    }

    pub fn scalar_mul(&self, c: u64) -> Self {
        let md = self.prof.modulus() as u128;
        let coeffs = self
            .coeffs
            .iter()
            .map(|&a| ((a as u128 * c as u128) % md) as u64)
            .collect();
        RingElem {
            prof: self.prof,
            coeffs,
        }
    }

    /// Minimum p-adic valuation over all coefficients (M if zero).
    pub fn min_valuation(&self) -> u32 {
        self.coeffs
            .iter()
            .map(|&c| vp(c, self.prof.p, self.prof.m))
            .min()
            .unwrap()
    }

    /// Series inverse; the constant term must be a unit.
    pub fn invert(&self) -> Result<Self> {
        let md = self.prof.modulus();
        if self.coeffs[0] % self.prof.p == 0 {
            return Err(Error::InvalidModule("inverse of a non-unit series".into()));
        }
        let inv0 = inv_mod(self.coeffs[0], md);
        let d = self.prof.d;
        let mut out = vec![0u64; d];
        out[0] = inv0;
        for k in 1..d {
            let mut acc: u128 = 0;
            for i in 1..=k {
                let a = self.coeffs[i];
                if a == 0 {
                    continue;
                }
                acc += a as u128 * out[k - i] as u128;
                if acc >= 1 << 120 {
                    acc %= md as u128;
                }
            }
            let s = (acc % md as u128) as u64;
            // out[k] = -inv0 * s
            let t = (inv0 as u128 * s as u128) % md as u128;
            out[k] = if t == 0 { 0 } else { md - t as u64 };
        }
        Ok(RingElem {
            prof: self.prof,
            coeffs: out,
        })
    }

    /// Division with remainder by a distinguished polynomial: self = q·P + r
    /// with deg r < deg P, exact at precision (p^M, T^D).
    pub fn weierstrass_divide(&self, pol: &DistPoly) -> Result<(Self, Self)> {
        let d = pol.degree();
        if d >= self.prof.d {
            return Err(Error::InsufficientTPrecision { d: self.prof.d });
        }
        if d == 0 {
            // P = 1
            return Ok((self.clone(), Self::zero(self.prof)));
        }
        let md = self.prof.modulus();
        let pm: Vec<u64> = pol
            .coeffs()
            .iter()
            .map(|c| reduce_bigint(c, md))
            .collect();
        let mut work = self.coeffs.clone();
        let mut q = vec![0u64; self.prof.d];
        // Synthetic division from the top; P is monic so this is exact.
        for k in (d..self.prof.d).rev() {
            let c = work[k];
            if c == 0 {
                continue;
            }
            q[k - d] = c;
            work[k] = 0;
            for (j, &pj) in pm.iter().enumerate().take(d) {
                if pj == 0 {
                    continue;
                }
                let t = (c as u128 * pj as u128) % md as u128;
                let cur = work[k - d + j];
                work[k - d + j] = if cur as u128 >= t {
                    cur - t as u64
                } else {
                    (cur as u128 + md as u128 - t) as u64
                };
            }
        }
        let mut r = Self::zero(self.prof);
        r.coeffs[..d].copy_from_slice(&work[..d]);
        Ok((
            RingElem {
                prof: self.prof,
                coeffs: q,
            },
            r,
        ))
    }

    /// Weierstrass preparation: self = p^mu · unit · dist with dist
    /// distinguished. Errors if the element vanishes mod p^M or no unit
    /// coefficient appears below T^D.
    pub fn weierstrass_prepare(&self) -> Result<PrepResult> {
        let prof = self.prof;
        let p = prof.p;
        let md = prof.modulus();
        let mu = self.min_valuation();
        if mu >= prof.m {
            return Err(Error::InsufficientPPrecision { m: prof.m });
        }
        let mut pmu = 1u64;
        for _ in 0..mu {
            pmu *= p;
        }
        // f' = self / p^mu, canonical representatives mod p^{M-mu}.
        let m_eff = prof.m - mu;
        let mut md_eff = 1u64;
        for _ in 0..m_eff {
            md_eff *= p;
        }
        let fprime = RingElem {
            prof,
            coeffs: self.coeffs.iter().map(|&c| (c / pmu) % md_eff).collect(),
        };
        // Weierstrass degree: first coefficient that is a unit.
        let k = match fprime.coeffs.iter().position(|&c| c % p != 0) {
            Some(k) => k,
            None => return Err(Error::InsufficientTPrecision { d: prof.d }),
        };
        if k == 0 {
            // Pure unit: dist = 1.
            let dist = DistPoly::constant_one(p);
            return Ok(PrepResult {
                mu,
                unit: fprime,
                dist,
            });
        }
        // Newton refinement: start at T^k; each division step gains at least
        // one power of p in the remainder.
        let mut dist_coeffs: Vec<u64> = vec![0; k + 1];
        dist_coeffs[k] = 1;
        let mut iter = 0;
        loop {
            let dist_big: Vec<BigInt> = dist_coeffs.iter().map(|&c| BigInt::from(c)).collect();
            let dp = DistPoly::from_parts(p, dist_big)?;
            let (q, r) = fprime.weierstrass_divide(&dp)?;
            if r.coeffs.iter().all(|&c| c % md_eff == 0) {
                // Exact at effective precision; the unit is q.
                let unit = RingElem {
                    prof,
                    coeffs: q.coeffs.iter().map(|&c| c % md_eff).collect(),
                };
                let dist = DistPoly::from_parts(
                    p,
                    dist_coeffs.iter().map(|&c| BigInt::from(c % md_eff)).collect(),
                )?;
                return Ok(PrepResult { mu, unit, dist });
            }
            // dist += trunc_{<k}(q^{-1} r)
            let corr = q.invert()?.mul(&r);
            for i in 0..k {
                let s = (dist_coeffs[i] as u128 + corr.coeffs[i] as u128) % md as u128;
                dist_coeffs[i] = s as u64;
            }
            iter += 1;
            if iter > prof.m + 2 {
                return Err(Error::InsufficientPPrecision { m: prof.m });
            }
        }
    }

    /// The involution ι: T ↦ 1/(1+T) − 1 = −T/(1+T), exact at precision.
    pub fn iota(&self) -> Self {
        let prof = self.prof;
        let md = prof.modulus() as u128;
        let d = prof.d;
        let mut out = vec![0u64; d];
        out[0] = self.coeffs[0];
        // coeff_n(ι f) = (−1)^n Σ_{i≥1} a_i C(n−1, i−1); maintain the Pascal
        // row C(n−1, ·) as n advances.
        let mut row: Vec<u64> = Vec::with_capacity(d);
        row.push(1);
        for n in 1..d {
            let mut acc: u128 = 0;
            for i in 1..=n {
                let a = self.coeffs[i];
                if a == 0 {
                    continue;
                }
                acc += a as u128 * row[i - 1] as u128;
                if acc >= 1 << 120 {
                    acc %= md;
                }
            }
            let s = (acc % md) as u64;
            out[n] = if n % 2 == 0 {
                s
            } else if s == 0 {
                0
            } else {
                md as u64 - s
            };
            // Advance row from C(n−1,·) to C(n,·).
            row.push(0);
            for j in (1..row.len()).rev() {
                let t = (row[j] as u128 + row[j - 1] as u128) % md;
                row[j] = t as u64;
            }
        }
        RingElem { prof, coeffs: out }
    }

    /// Lift of coefficients as exact BigInts (canonical representatives).
    pub fn lift_coeffs(&self) -> Vec<BigInt> {
        self.coeffs.iter().map(|&c| BigInt::from(c)).collect()
    }
}

/// Reduce an exact integer into [0, modulus).
pub fn reduce_int(x: &BigInt, modulus: u64) -> u64 {
    let m = BigInt::from(modulus);
    let mut r = x % &m;
    if r.is_negative() {
        r += &m;
    }
    r.to_u64().unwrap()
}

/// Valuation of an exact integer (None for 0).
pub fn vp_bigint(x: &BigInt, p: u64) -> Option<u64> {
    if x.is_zero() {
        return None;
    }
    let p = BigInt::from(p);
    let mut x = x.clone();
    let mut v = 0;
    while (&x % &p).is_zero() {
        x /= &p;
        v += 1;
    }
    Some(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::DistPoly;

    fn prof() -> PrecisionProfile {
        PrecisionProfile::default_p(5).unwrap()
    }

    #[test]
    fn mul_and_inverse() {
        let prof = prof();
        let a = RingElem::from_int_coeffs(prof, &[1, 3, 0, 2]).unwrap();
        let inv = a.invert().unwrap();
        assert_eq!(a.mul(&inv), RingElem::one(prof));
    }

    #[test]
    fn divide_identity() {
        let prof = prof();
        let f = RingElem::from_int_coeffs(prof, &[7, 1, 4, 0, 9, 2]).unwrap();
        let pol = DistPoly::from_int_coeffs(5, &[5, 10, 1]).unwrap(); // T^2+10T+5
        let (q, r) = f.weierstrass_divide(&pol).unwrap();
        let pe = RingElem::from_dist(prof, &pol).unwrap();
        assert_eq!(q.mul(&pe).add(&r), f);
        assert!(r.coeffs()[2..].iter().all(|&c| c == 0));
    }

    #[test]
    fn prepare_examples() {
        let prof = prof();
        // f = T + T^2: unit 1+T, dist T, mu 0.
        let f = RingElem::from_int_coeffs(prof, &[0, 1, 1]).unwrap();
        let prep = f.weierstrass_prepare().unwrap();
        assert_eq!(prep.mu, 0);
        assert_eq!(prep.dist.degree(), 1);
        assert_eq!(prep.dist.coeffs()[0], BigInt::from(0));
        // f = p·T: mu 1, unit 1, dist T.
        let f = RingElem::from_int_coeffs(prof, &[0, 5]).unwrap();
        let prep = f.weierstrass_prepare().unwrap();
        assert_eq!(prep.mu, 1);
        assert_eq!(prep.dist.degree(), 1);
        // f = T + p: dist T+p, unit 1.
        let f = RingElem::from_int_coeffs(prof, &[5, 1]).unwrap();
        let prep = f.weierstrass_prepare().unwrap();
        assert_eq!(prep.mu, 0);
        assert_eq!(prep.dist.coeffs()[0], BigInt::from(5));
        // Reconstruction check.
        let d = RingElem::from_dist(prof, &prep.dist).unwrap();
        assert_eq!(prep.unit.mul(&d), f);
    }

    #[test]
    fn prepare_rejects_zero_mod_pm() {
        let prof = PrecisionProfile::new(5, 2, 16, 2).unwrap();
        let f = RingElem::from_int_coeffs(prof, &[25, 50]).unwrap();
        assert!(matches!(
            f.weierstrass_prepare(),
            Err(Error::InsufficientPPrecision { .. })
        ));
    }

    #[test]
    fn iota_iota_is_identity() {
        let prof = prof();
        let f = RingElem::from_int_coeffs(prof, &[3, 1, 4, 1, 5, 9, 2, 6]).unwrap();
        assert_eq!(f.iota().iota(), f);
        // ι(T) = −T + T² − T³ + ...
        let t = RingElem::monomial(prof, 1, 1);
        let it = t.iota();
        let md = prof.modulus();
        assert_eq!(it.coeff(0), 0);
        assert_eq!(it.coeff(1), md - 1);
        assert_eq!(it.coeff(2), 1);
        assert_eq!(it.coeff(3), md - 1);
    }

    #[test]
    fn iota_is_ring_hom() {
        let prof = prof();
        let a = RingElem::from_int_coeffs(prof, &[2, 0, 3, 1]).unwrap();
        let b = RingElem::from_int_coeffs(prof, &[1, 7, 0, 0, 4]).unwrap();
        assert_eq!(a.mul(&b).iota(), a.iota().mul(&b.iota()));
        assert_eq!(a.add(&b).iota(), a.iota().add(&b.iota()));
    }
}
