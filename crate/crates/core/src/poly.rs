use crate::error::{Error, Result};
use crate::profile::PrecisionProfile;
use crate::series::{reduce_int, RingElem};
use num_bigint::{BigInt, BigUint};
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

/// A distinguished polynomial with exact integer coefficients: monic, all
/// non-leading coefficients divisible by p. Degree 0 is permitted only for
/// the constant 1 (the unit case of Weierstrass preparation).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DistPoly {
    p: u64,
    /// Coefficients low-to-high; last entry is 1.
    coeffs: Vec<BigInt>,
}

/// Valuation of a resultant: a finite exponent, or infinite when the
/// arguments share a factor.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ResVal {
    Finite(u64),
    Infinite,
}

impl DistPoly {
    pub fn from_parts(p: u64, coeffs: Vec<BigInt>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::InvalidModule("empty polynomial".into()));
        }
        if !coeffs.last().unwrap().is_one() {
            return Err(Error::InvalidModule("distinguished polynomial must be monic".into()));
        }
        let pb = BigInt::from(p);
        for c in &coeffs[..coeffs.len() - 1] {
            if !(c % &pb).is_zero() {
                return Err(Error::InvalidModule(
                    "non-leading coefficient not divisible by p".into(),
                ));
            }
        }
        Ok(DistPoly { p, coeffs })
    }

    pub fn from_int_coeffs(p: u64, coeffs: &[i64]) -> Result<Self> {
        Self::from_parts(p, coeffs.iter().map(|&c| BigInt::from(c)).collect())
    }

    pub fn constant_one(p: u64) -> Self {
        DistPoly {
            p,
            coeffs: vec![BigInt::one()],
        }
    }

    /// ν_0 = T by the artifact convention.
    pub fn t(p: u64) -> Self {
        DistPoly {
            p,
            coeffs: vec![BigInt::zero(), BigInt::one()],
        }
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[BigInt] {
        &self.coeffs
    }

    pub fn eval(&self, x: &BigInt) -> BigInt {
        let mut acc = BigInt::zero();
        for c in self.coeffs.iter().rev() {
            acc = acc * x + c;
        }
        acc
    }

    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.p, other.p);
        let mut out = vec![BigInt::zero(); self.degree() + other.degree() + 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in other.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        DistPoly {
            p: self.p,
            coeffs: out,
        }
    }

    pub fn pow(&self, e: u32) -> Self {
        assert!(e >= 1);
        let mut out = self.clone();
        for _ in 1..e {
            out = out.mul(self);
        }
        out
    }

    /// Exact division; errors unless the remainder is identically zero.
    pub fn exact_div(&self, divisor: &Self) -> Result<Self> {
        let (q, r) = poly_div_rem_monic(&self.coeffs, &divisor.coeffs);
        if r.iter().any(|c| !c.is_zero()) {
            return Err(Error::InvalidModule("exact division has remainder".into()));
        }
        DistPoly::from_parts(self.p, q)
    }

    /// True when `self` divides the polynomial with the given exact
    /// coefficients (remainder identically zero over Z).
    pub fn divides(&self, target: &[BigInt]) -> bool {
        if target.len() < self.coeffs.len() {
            return target.iter().all(|c| c.is_zero());
        }
        let (_, r) = poly_div_rem_monic(target, &self.coeffs);
        r.iter().all(|c| c.is_zero())
    }

    /// Canonical reduction of coefficients into [0, p^M).
    pub fn reduced_coeffs(&self, prof: PrecisionProfile) -> Vec<u64> {
        let md = prof.modulus();
        self.coeffs.iter().map(|c| reduce_int(c, md)).collect()
    }

    /// Equality at working precision (coefficients compared mod p^M).
    pub fn eq_mod(&self, other: &Self, prof: PrecisionProfile) -> bool {
        self.degree() == other.degree() && self.reduced_coeffs(prof) == other.reduced_coeffs(prof)
    }
}

/// Division with remainder by a monic polynomial, exact over Z.
pub fn poly_div_rem_monic(num: &[BigInt], den: &[BigInt]) -> (Vec<BigInt>, Vec<BigInt>) {
    let d = den.len() - 1;
    assert!(den[d].is_one(), "divisor must be monic");
    if num.len() <= d {
        return (vec![BigInt::zero()], num.to_vec());
    }
    let mut work = num.to_vec();
    let mut q = vec![BigInt::zero(); num.len() - d];
    for k in (d..work.len()).rev() {
        if work[k].is_zero() {
            continue;
        }
        let c = std::mem::replace(&mut work[k], BigInt::zero());
        for (j, dj) in den.iter().enumerate().take(d) {
            if !dj.is_zero() {
                let t = &c * dj;
                work[k - d + j] -= t;
            }
        }
        q[k - d] = c;
    }
    work.truncate(d.max(1));
    (q, work)
}

/// ω_n = (1+T)^{p^{n-1}} − 1 with exact binomial coefficients.
pub fn make_omega(n: u32, prof: PrecisionProfile) -> Result<DistPoly> {
    let deg = prof.require_level(n)?;
    let mut coeffs = Vec::with_capacity(deg + 1);
    // C(deg, k) for k = 1..=deg.
    let mut c = BigUint::one();
    coeffs.push(BigInt::zero());
    for k in 1..=deg {
        c = c * BigUint::from(deg - k + 1) / BigUint::from(k);
        coeffs.push(BigInt::from(c.clone()));
    }
    DistPoly::from_parts(prof.p, coeffs)
}

/// ν_a = ω_{a+1}/ω_a for a ≥ 1; ν_0 := T by convention.
pub fn cyclo_nu(a: u32, prof: PrecisionProfile) -> Result<DistPoly> {
    if a == 0 {
        return Ok(DistPoly::t(prof.p));
    }
    let top = make_omega(a + 1, prof)?;
    let bot = make_omega(a, prof)?;
    top.exact_div(&bot)
}

/// Returns Some(a) when the input equals ν_a. Exact inputs are compared
/// exactly; inputs already reduced to canonical representatives (all
/// coefficients below p^M) are also accepted when they match ν_a mod p^M.
pub fn classify_cyclo(pol: &DistPoly, prof: PrecisionProfile) -> Result<Option<u32>> {
    let md = BigInt::from(prof.modulus());
    let reduced_input = pol
        .coeffs()
        .iter()
        .all(|c| !c.is_negative() && c < &md);
    for a in 0..=prof.n_max {
        if prof.omega_degree(a + 1).map(|d| d >= prof.d).unwrap_or(true) {
            break;
        }
        let nu = cyclo_nu(a, prof)?;
        if nu.degree() != pol.degree() {
            continue;
        }
        if nu == *pol || (reduced_input && nu.eq_mod(pol, prof)) {
            return Ok(Some(a));
        }
    }
    Ok(None)
}

/// True when `pol` divides ν_a (exact division over Z).
pub fn divides_nu(pol: &DistPoly, a: u32, prof: PrecisionProfile) -> Result<bool> {
    let nu = cyclo_nu(a, prof)?;
    Ok(pol.divides(nu.coeffs()))
}

/// True when ν_a divides `pol` — the complementary certificate used to
/// guarantee coprimality of a generic factor to the whole ω-tower.
pub fn nu_divides(pol: &DistPoly, a: u32, prof: PrecisionProfile) -> Result<bool> {
    let nu = cyclo_nu(a, prof)?;
    Ok(nu.divides(pol.coeffs()))
}

/// ι applied to a distinguished polynomial: (1+T)^{deg P}·P(ι(T)) prepared
/// back into distinguished form; coefficients reported mod p^M.
pub fn iota_dist(pol: &DistPoly, prof: PrecisionProfile) -> Result<DistPoly> {
    let d = pol.degree();
    if d == 0 {
        return Ok(pol.clone());
    }
    if d >= prof.d {
        return Err(Error::InsufficientTPrecision { d: prof.d });
    }
    // Q(T) = Σ_i p_i (−T)^i (1+T)^{d−i}, exact over Z.
    let mut q = vec![BigInt::zero(); d + 1];
    for (i, pi) in pol.coeffs().iter().enumerate() {
        if pi.is_zero() {
            continue;
        }
        // (−1)^i p_i · T^i · (1+T)^{d−i}
        let sign = if i % 2 == 0 { pi.clone() } else { -pi.clone() };
        let mut binom = BigInt::one();
        for j in 0..=(d - i) {
            if j > 0 {
                binom = binom * BigInt::from(d - i - j + 1) / BigInt::from(j);
            }
            q[i + j] += &sign * &binom;
        }
    }
    // Reduce mod p^M and prepare; the Weierstrass degree must come out as d.
    let md = prof.modulus();
    let coeffs_i64: Vec<i64> = q.iter().map(|c| reduce_int(c, md) as i64).collect();
    let elem = RingElem::from_int_coeffs(prof, &coeffs_i64)?;
    let prep = elem.weierstrass_prepare()?;
    if prep.mu != 0 || prep.dist.degree() != d {
        return Err(Error::InsufficientPPrecision { m: prof.m });
    }
    Ok(prep.dist)
}

// ---------------------------------------------------------------------------
// Resultants
// ---------------------------------------------------------------------------

/// Exact Sylvester matrix of two polynomials (rows: shifts of g then h).
pub fn sylvester_matrix(g: &[BigInt], h: &[BigInt]) -> (usize, Vec<BigInt>) {
    let dg = g.len() - 1;
    let dh = h.len() - 1;
    let n = dg + dh;
    let mut m = vec![BigInt::zero(); n * n];
    for row in 0..dh {
        for (k, c) in g.iter().enumerate() {
            m[row * n + row + (dg - k)] = c.clone();
        }
    }
    for row in 0..dg {
        for (k, c) in h.iter().enumerate() {
            m[(dh + row) * n + row + (dh - k)] = c.clone();
        }
    }
    (n, m)
}

/// Bareiss fraction-free determinant, exact over Z. Suitable for small
/// matrices only.
pub fn bareiss_det(n: usize, mut m: Vec<BigInt>) -> BigInt {
    if n == 0 {
        return BigInt::one();
    }
    let mut sign = 1i32;
    let mut prev = BigInt::one();
    for k in 0..n - 1 {
        if m[k * n + k].is_zero() {
            // Pivot search below.
            let swap = (k + 1..n).find(|&i| !m[i * n + k].is_zero());
            match swap {
                Some(i) => {
                    for j in 0..n {
                        m.swap(k * n + j, i * n + j);
                    }
                    sign = -sign;
                }
                None => return BigInt::zero(),
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let t = &m[i * n + j] * &m[k * n + k] - &m[i * n + k] * &m[k * n + j];
                m[i * n + j] = &t / &prev;
            }
            m[i * n + k] = BigInt::zero();
        }
        prev = m[k * n + k].clone();
    }
    let det = m[(n - 1) * n + (n - 1)].clone();
    if sign < 0 {
        -det
    } else {
        det
    }
}

fn vp_biguint(x: &BigUint, p: u64) -> u64 {
    let p = BigUint::from(p);
    let mut v = 0;
    let mut x = x.clone();
    while !x.is_zero() && (&x % &p).is_zero() {
        x /= &p;
        v += 1;
    }
    v
}

fn inv_unit_mod(x: &BigUint, p: u64, modulus: &BigUint) -> BigUint {
    // Extended gcd over BigInt.
    let m = BigInt::from(modulus.clone());
    let a = BigInt::from(x.clone());
    let (mut r0, mut r1) = (m.clone(), a);
    let (mut s0, mut s1) = (BigInt::zero(), BigInt::one());
    while !r1.is_zero() {
        let q = &r0 / &r1;
        let r = &r0 - &q * &r1;
        r0 = std::mem::replace(&mut r1, r);
        let s = &s0 - &q * &s1;
        s0 = std::mem::replace(&mut s1, s);
    }
    assert!(r0.is_one(), "inverse of non-unit mod p^K (p = {p})");
    let res = ((s0 % &m) + &m) % &m;
    res.to_biguint().unwrap()
}

/// Determinant valuation of a square matrix over Z/p^K by valuation-pivot
/// elimination. Returns None when the determinant is indistinguishable from
/// zero at this precision or the accumulated pivot valuation eats more than
/// half the modulus.
fn det_valuation_mod(n: usize, mut m: Vec<BigUint>, p: u64, k: u64) -> Option<u64> {
    let modulus = BigUint::from(p).pow(k as u32);
    let mut vsum: u64 = 0;
    for step in 0..n {
        // Global minimum-valuation pivot in the remaining submatrix.
        let mut best: Option<(usize, usize, u64)> = None;
        for i in step..n {
            for j in step..n {
                let e = &m[i * n + j];
                if e.is_zero() {
                    continue;
                }
                let v = vp_biguint(e, p);
                if best.map(|(_, _, bv)| v < bv).unwrap_or(true) {
                    best = Some((i, j, v));
                }
            }
        }
        let (pi, pj, v) = best?;
        vsum += v;
        if 2 * vsum >= k {
            return None;
        }
        if pi != step {
            for j in 0..n {
                m.swap(step * n + j, pi * n + j);
            }
        }
        if pj != step {
            for i in 0..n {
                m.swap(i * n + step, i * n + pj);
            }
        }
        let pivot = m[step * n + step].clone();
        let punit = &pivot / BigUint::from(p).pow(v as u32);
        let pinv = inv_unit_mod(&punit, p, &modulus);
        let pv = BigUint::from(p).pow(v as u32);
        for i in step + 1..n {
            let e = m[i * n + step].clone();
            if e.is_zero() {
                continue;
            }
            // factor = (e / p^v) · punit^{-1}; exact since v is minimal.
            let factor = (&e / &pv) * &pinv % &modulus;
            for j in step..n {
                let sub = &factor * &m[step * n + j] % &modulus;
                let cur = &m[i * n + j];
                m[i * n + j] = if cur >= &sub {
                    cur - sub
                } else {
                    cur + &modulus - sub
                };
            }
        }
    }
    Some(vsum)
}

fn poly_rem_mod(num: &[BigUint], den: &[BigUint], modulus: &BigUint) -> Vec<BigUint> {
    // den monic.
    let d = den.len() - 1;
    let mut work = num.to_vec();
    if work.len() <= d {
        work.resize(d.max(1), BigUint::zero());
        return work;
    }
    for kk in (d..work.len()).rev() {
        if work[kk].is_zero() {
            continue;
        }
        let c = std::mem::replace(&mut work[kk], BigUint::zero());
        for j in 0..d {
            if den[j].is_zero() {
                continue;
            }
            let sub = &c * &den[j] % modulus;
            let cur = &work[kk - d + j];
            work[kk - d + j] = if cur >= &sub {
                cur - sub
            } else {
                cur + modulus - sub
            };
        }
    }
    work.truncate(d.max(1));
    work
}

/// v_p(Res(g, h)) for distinguished polynomials. Small instances run through
/// the exact Sylvester determinant; larger ones use the equal multiplication
/// matrix det(mult-by-h on Z[T]/g) at an adaptively chosen p-adic precision
/// (both routes agree; see unit tests). INFINITE is certified by exact
/// divisibility, which covers all shared-factor cases arising for
/// distinguished arguments built from the ω-tower.
pub fn resultant_valuation(g: &DistPoly, h: &DistPoly) -> Result<ResVal> {
    assert_eq!(g.p(), h.p());
    let p = g.p();
    if g.degree() == 0 || h.degree() == 0 {
        return Ok(ResVal::Finite(0));
    }
    // Shared-factor certificates.
    if g.divides(h.coeffs()) || h.divides(g.coeffs()) {
        return Ok(ResVal::Infinite);
    }
    if g.degree() + h.degree() <= 24 {
        let (n, m) = sylvester_matrix(g.coeffs(), h.coeffs());
        let det = bareiss_det(n, m);
        return match crate::series::vp_bigint(&det, p) {
            None => Ok(ResVal::Infinite),
            Some(v) => Ok(ResVal::Finite(v)),
        };
    }
    // Reduce the larger modulo the smaller; Res valuation is symmetric.
    let (small, large) = if g.degree() <= h.degree() { (g, h) } else { (h, g) };
    let d = small.degree();
    let mut k: u64 = 64;
    loop {
        let modulus = BigUint::from(p).pow(k as u32);
        let to_mod = |c: &BigInt| -> BigUint {
            let m = BigInt::from(modulus.clone());
            (((c % &m) + &m) % &m).to_biguint().unwrap()
        };
        let den: Vec<BigUint> = small.coeffs().iter().map(&to_mod).collect();
        let num: Vec<BigUint> = large.coeffs().iter().map(&to_mod).collect();
        let hred = poly_rem_mod(&num, &den, &modulus);
        // Multiplication-by-hred matrix on Z[T]/small, column j = T^j·hred.
        let mut mat = vec![BigUint::zero(); d * d];
        let mut cur = hred;
        cur.resize(d, BigUint::zero());
        for j in 0..d {
            for i in 0..d {
                mat[i * d + j] = cur[i].clone();
            }
            if j + 1 < d {
                // cur = T·cur mod small
                let top = cur.pop().unwrap();
                cur.insert(0, BigUint::zero());
                if !top.is_zero() {
                    for i in 0..d {
                        if den[i].is_zero() {
                            continue;
                        }
                        let sub = &top * &den[i] % &modulus;
                        cur[i] = if cur[i] >= sub {
                            &cur[i] - sub
                        } else {
                            &cur[i] + &modulus - sub
                        };
                    }
                }
            }
        }
        if let Some(v) = det_valuation_mod(d, mat, p, k) {
            return Ok(ResVal::Finite(v));
        }
        k *= 2;
        if k > 16384 {
            return Err(Error::InsufficientPPrecision { m: k as u32 });
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn prof() -> PrecisionProfile {
        PrecisionProfile::default_p(5).unwrap()
    }

    #[test]
    fn omega_examples() {
        let prof = prof();
        let w1 = make_omega(1, prof).unwrap();
        assert_eq!(w1, DistPoly::t(5));
        let w2 = make_omega(2, prof).unwrap();
        // (1+T)^5 - 1 = T^5 + 5T^4 + 10T^3 + 10T^2 + 5T
        assert_eq!(
            w2.coeffs()
                .iter()
                .map(|c| c.to_string())
                .collect::<Vec<_>>(),
            vec!["0", "5", "10", "10", "5", "1"]
        );
        assert!(matches!(
            make_omega(5, prof),
            Err(Error::LevelTooDeep { .. })
        ));
    }

    #[test]
    fn nu_examples() {
        let prof = prof();
        assert_eq!(cyclo_nu(0, prof).unwrap(), DistPoly::t(5));
        let nu1 = cyclo_nu(1, prof).unwrap();
        // ω_2/ω_1 = T^4 + 5T^3 + 10T^2 + 10T + 5
        assert_eq!(
            nu1.coeffs()
                .iter()
                .map(|c| c.to_string())
                .collect::<Vec<_>>(),
            vec!["5", "10", "10", "5", "1"]
        );
        // Divisibility tower: ω_n = T·ν_1···ν_{n-1}
        let w3 = make_omega(3, prof).unwrap();
        let nu2 = cyclo_nu(2, prof).unwrap();
        let prod = DistPoly::t(5).mul(&nu1).mul(&nu2);
        assert_eq!(prod, w3);
    }

    #[test]
    fn classify_and_divides() {
        let prof = prof();
        let nu1 = cyclo_nu(1, prof).unwrap();
        assert_eq!(classify_cyclo(&nu1, prof).unwrap(), Some(1));
        let tmp = DistPoly::from_int_coeffs(5, &[-5, 1]).unwrap(); // T - 5
        assert_eq!(classify_cyclo(&tmp, prof).unwrap(), None);
        for a in 0..=3 {
            assert!(!divides_nu(&tmp, a, prof).unwrap(), "ν_{a}(p) ≠ 0");
        }
        assert!(divides_nu(&DistPoly::t(5), 0, prof).unwrap());
    }

    #[test]
    fn iota_dist_examples() {
        let prof = prof();
        // ι fixes T up to sign-normalization: iota_dist(T) = T.
        let t = DistPoly::t(5);
        assert_eq!(iota_dist(&t, prof).unwrap(), t);
        // ι fixes each ν_a (as ideals, hence as distinguished generators).
        for a in 1..=2 {
            let nu = cyclo_nu(a, prof).unwrap();
            let img = iota_dist(&nu, prof).unwrap();
            assert!(img.eq_mod(&nu, prof), "ι must fix ν_{a}");
        }
        // ι(T−p) generates (T + p(1+p)^{-1}).
        let tp = DistPoly::from_int_coeffs(5, &[-5, 1]).unwrap();
        let img = iota_dist(&tp, prof).unwrap();
        let md = prof.modulus();
        let expect = (5u128 * crate::series::inv_mod(6, md) as u128 % md as u128) as u64;
        assert_eq!(img.coeffs()[0], BigInt::from(expect));
        // Involution at precision.
        let back = iota_dist(&img, prof).unwrap();
        assert!(back.eq_mod(&tp, prof));
    }

    #[test]
    fn resultant_examples() {
        let prof = prof();
        let t = DistPoly::t(5);
        let tp = DistPoly::from_int_coeffs(5, &[-5, 1]).unwrap();
        // Res(T, T−p) = ±p.
        assert_eq!(resultant_valuation(&t, &tp).unwrap(), ResVal::Finite(1));
        // Res(T−p, ω_n) has valuation n.
        for n in 1..=4 {
            let w = make_omega(n, prof).unwrap();
            assert_eq!(
                resultant_valuation(&tp, &w).unwrap(),
                ResVal::Finite(n as u64),
                "level {n}"
            );
        }
        // Shared factor → INFINITE.
        let w2 = make_omega(2, prof).unwrap();
        assert_eq!(resultant_valuation(&t, &w2).unwrap(), ResVal::Infinite);
    }

    #[test]
    fn resultant_routes_agree() {
        let prof = PrecisionProfile::new(5, 16, 640, 5).unwrap();
        // Pick pairs small enough for Sylvester/Bareiss but exercised through
        // the modular multiplication-matrix route too.
        let tp = DistPoly::from_int_coeffs(5, &[-5, 1]).unwrap();
        let w3 = make_omega(3, prof).unwrap();
        let (n, m) = sylvester_matrix(tp.coeffs(), w3.coeffs());
        let exact = bareiss_det(n, m);
        let v_exact = crate::series::vp_bigint(&exact, 5).unwrap();
        // Combined degree 26 sends resultant_valuation down the modular
        // multiplication-matrix route; the exact Sylvester determinant above
        // is the independent check.
        let v_mod = match resultant_valuation(&tp, &w3).unwrap() {
            ResVal::Finite(v) => v,
            _ => panic!(),
        };
        assert_eq!(v_exact, v_mod);
        assert_eq!(v_exact, 3);
    }
}
