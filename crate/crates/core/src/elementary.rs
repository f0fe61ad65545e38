//! Closed-form calculus on elementary Λ-modules: direct sums of Λ, Λ/p^f,
//! Λ/g^e (g coprime to the whole ω-tower) and Λ/ν_a^e.

use crate::error::{Error, Result};
use crate::poly::{
    cyclo_nu, divides_nu, iota_dist, make_omega, nu_divides, resultant_valuation, DistPoly, ResVal,
};
use crate::profile::PrecisionProfile;
use num_traits::Zero;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Factor {
    /// Λ/p^f
    PPower { f: u32 },
    /// Λ/g^e with g certified coprime to every ν_a, a ≤ N_max.
    Generic { g: DistPoly, e: u32 },
    /// Λ/ν_a^e; a = 0 means ν_0 = T by convention.
    Cyclo { a: u32, e: u32 },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ElementaryModule {
    prof: PrecisionProfile,
    free_rank: u32,
    factors: Vec<Factor>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InvariantReport {
    pub rank: u32,
    pub mu: u64,
    pub lambda: u64,
    /// Rendered characteristic-ideal factors, canonically sorted.
    pub char_factors: Vec<String>,
}

fn render_poly(g: &DistPoly, prof: PrecisionProfile) -> String {
    let md = prof.modulus();
    let cs = g.reduced_coeffs(prof);
    let mut out = String::new();
    for (i, &c) in cs.iter().enumerate().rev() {
        if c == 0 {
            continue;
        }
        // Balanced representative: residues near p^M print as small negatives.
        let (sign, c) = if c > md / 2 { ("-", md - c) } else { ("+", c) };
        if out.is_empty() {
            if sign == "-" {
                out.push('-');
            }
        } else {
            out.push_str(&format!(" {sign} "));
        }
        out.push_str(&match (i, c) {
            (0, c) => format!("{c}"),
            (1, 1) => "T".into(),
            (1, c) => format!("{c}*T"),
            (i, 1) => format!("T^{i}"),
            (i, c) => format!("{c}*T^{i}"),
        });
    }
    if out.is_empty() {
        "0".into()
    } else {
        out
    }
}

impl Factor {
    fn sort_key(&self, prof: PrecisionProfile) -> (u8, u64, Vec<u64>, u32) {
        match self {
            Factor::PPower { f } => (0, 0, vec![], *f),
            Factor::Generic { g, e } => {
                (1, g.degree() as u64, g.reduced_coeffs(prof), *e)
            }
            Factor::Cyclo { a, e } => (2, *a as u64, vec![], *e),
        }
    }

    pub fn render(&self, prof: PrecisionProfile) -> String {
        match self {
            Factor::PPower { f } => format!("p^{f}"),
            Factor::Generic { g, e } => format!("({})^{e}", render_poly(g, prof)),
            Factor::Cyclo { a, e } => format!("nu_{a}^{e}"),
        }
    }
}

impl ElementaryModule {
    pub fn new(prof: PrecisionProfile, free_rank: u32, factors: Vec<Factor>) -> Result<Self> {
        for f in &factors {
            match f {
                Factor::PPower { f } => {
                    if *f == 0 {
                        return Err(Error::InvalidModule("p-power exponent must be ≥ 1".into()));
                    }
                }
                Factor::Generic { g, e } => {
                    if *e == 0 || g.degree() == 0 {
                        return Err(Error::InvalidModule(
                            "generic factor needs degree ≥ 1 and e ≥ 1".into(),
                        ));
                    }
                    if g.p() != prof.p {
                        return Err(Error::InvalidModule("factor prime mismatch".into()));
                    }
                    certify_generic(g, prof)?;
                }
                Factor::Cyclo { a, e } => {
                    if *e == 0 {
                        return Err(Error::InvalidModule("cyclo exponent must be ≥ 1".into()));
                    }
                    // ν_a must exist at this profile (its construction needs
                    // level a+1), except ν_0 = T which always does.
                    if *a > 0 {
                        cyclo_nu(*a, prof)?;
                    }
                }
            }
        }
        let mut m = ElementaryModule {
            prof,
            free_rank,
            factors,
        };
        m.canonicalize();
        Ok(m)
    }

    pub fn lambda_free(prof: PrecisionProfile, rank: u32) -> Self {
        ElementaryModule {
            prof,
            free_rank: rank,
            factors: vec![],
        }
    }

    fn canonicalize(&mut self) {
        let prof = self.prof;
        self.factors.sort_by_key(|f| f.sort_key(prof));
    }

    pub fn profile(&self) -> PrecisionProfile {
        self.prof
    }

    pub fn free_rank(&self) -> u32 {
        self.free_rank
    }

    pub fn factors(&self) -> &[Factor] {
        &self.factors
    }

    /// Canonical-form equality; Generic coefficients compared at working
    /// precision.
    pub fn same_class(&self, other: &Self) -> bool {
        self.free_rank == other.free_rank
            && self.factors.len() == other.factors.len()
            && self
                .factors
                .iter()
                .zip(&other.factors)
                .all(|(a, b)| a.sort_key(self.prof) == b.sort_key(other.prof))
    }

    pub fn direct_sum(&self, other: &Self) -> Self {
        let mut factors = self.factors.clone();
        factors.extend(other.factors.iter().cloned());
        let mut m = ElementaryModule {
            prof: self.prof,
            free_rank: self.free_rank + other.free_rank,
            factors,
        };
        m.canonicalize();
        m
    }

    pub fn invariants(&self) -> InvariantReport {
        let mut mu = 0u64;
        let mut lambda = 0u64;
        let mut char_factors = Vec::new();
        for f in &self.factors {
            match f {
                Factor::PPower { f } => mu += *f as u64,
                Factor::Generic { g, e } => lambda += *e as u64 * g.degree() as u64,
                Factor::Cyclo { a, e } => {
                    let deg = if *a == 0 {
                        1
                    } else {
                        self.prof.omega_degree(*a + 1).unwrap() - self.prof.omega_degree(*a).unwrap()
                    };
                    lambda += *e as u64 * deg as u64;
                }
            }
            char_factors.push(f.render(self.prof));
        }
        char_factors.sort();
        InvariantReport {
            rank: self.free_rank,
            mu,
            lambda,
            char_factors,
        }
    }

    /// 𝔊: drop the free part; cyclo exponents decrease by one.
    pub fn functor_g(&self) -> Self {
        let factors = self
            .factors
            .iter()
            .filter_map(|f| match f {
                Factor::Cyclo { e: 1, .. } => None,
                Factor::Cyclo { a, e } => Some(Factor::Cyclo { a: *a, e: e - 1 }),
                other => Some(other.clone()),
            })
            .collect();
        let mut m = ElementaryModule {
            prof: self.prof,
            free_rank: 0,
            factors,
        };
        m.canonicalize();
        m
    }

    /// 𝔉: like 𝔊 but generic factors pick up the involution.
    pub fn functor_f(&self) -> Result<Self> {
        let mut factors = Vec::new();
        for f in &self.factors {
            match f {
                Factor::Cyclo { e: 1, .. } => {}
                Factor::Cyclo { a, e } => factors.push(Factor::Cyclo { a: *a, e: e - 1 }),
                Factor::PPower { f } => factors.push(Factor::PPower { f: *f }),
                Factor::Generic { g, e } => factors.push(Factor::Generic {
                    g: iota_dist(g, self.prof)?,
                    e: *e,
                }),
            }
        }
        let mut m = ElementaryModule {
            prof: self.prof,
            free_rank: 0,
            factors,
        };
        m.canonicalize();
        Ok(m)
    }

    /// The ι-twist E^ι: only generic factors move (ι fixes p and each ν_a
    /// up to units).
    pub fn twist(&self) -> Result<Self> {
        let mut factors = Vec::new();
        for f in &self.factors {
            match f {
                Factor::Generic { g, e } => factors.push(Factor::Generic {
                    g: iota_dist(g, self.prof)?,
                    e: *e,
                }),
                other => factors.push(other.clone()),
            }
        }
        let mut m = ElementaryModule {
            prof: self.prof,
            free_rank: self.free_rank,
            factors,
        };
        m.canonicalize();
        Ok(m)
    }

    /// Algebraic functional equation shape: E1 ≅ E2^ι as elementary classes.
    pub fn check_funceq(&self, other: &Self) -> Result<bool> {
        Ok(self.same_class(&other.twist()?))
    }

    /// Closed-form (corank, torsion exponent) of E/ω_n E.
    pub fn quotient_profile(&self, n: u32) -> Result<(u64, u64)> {
        let deg_wn = self.prof.require_level(n)? as u64;
        let omega = make_omega(n, self.prof)?;
        let mut corank = self.free_rank as u64 * deg_wn;
        let mut torsion = 0u64;
        for f in &self.factors {
            match f {
                Factor::PPower { f } => torsion += *f as u64 * deg_wn,
                Factor::Generic { g, e } => {
                    let v = match resultant_valuation(g, &omega)? {
                        ResVal::Finite(v) => v,
                        ResVal::Infinite => {
                            return Err(Error::InvalidModule(
                                "generic factor shares a divisor with ω_n".into(),
                            ))
                        }
                    };
                    torsion += *e as u64 * v;
                }
                Factor::Cyclo { a, e } => {
                    let nu = cyclo_nu(*a, self.prof)?;
                    if n >= *a + 1 {
                        // ω_n = ν_a·h: one W-free copy of Λ/ν_a plus a finite
                        // piece Λ/(ν_a^{e−1}, h).
                        corank += nu.degree() as u64;
                        if *e > 1 {
                            let h = omega.exact_div(&nu)?;
                            match resultant_valuation(&nu, &h)? {
                                ResVal::Finite(v) => torsion += (*e as u64 - 1) * v,
                                ResVal::Infinite => {
                                    return Err(Error::InvalidModule(
                                        "ω_n/ν_a unexpectedly shares a factor with ν_a".into(),
                                    ))
                                }
                            }
                        }
                    } else {
                        // ν_a coprime to ω_n: finite quotient.
                        match resultant_valuation(&nu, &omega)? {
                            ResVal::Finite(v) => torsion += *e as u64 * v,
                            ResVal::Infinite => {
                                return Err(Error::InvalidModule(
                                    "ν_a unexpectedly shares a factor with ω_n".into(),
                                ))
                            }
                        }
                    }
                }
            }
        }
        Ok((corank, torsion))
    }

    /// (μ, λ) of the ω-coprime torsion part; the flag marks the regime where
    /// e_n = μ·deg(ω_n) + λ·n + ν holds exactly for large n.
    pub fn growth_law(&self) -> (u64, u64, bool) {
        let mut mu = 0u64;
        let mut lambda = 0u64;
        let mut clean = self.free_rank == 0;
        for f in &self.factors {
            match f {
                Factor::PPower { f } => mu += *f as u64,
                Factor::Generic { g, e } => lambda += *e as u64 * g.degree() as u64,
                Factor::Cyclo { .. } => clean = false,
            }
        }
        (mu, lambda, clean)
    }
}

/// A generic factor must be coprime to T and to every ν_a representable at
/// this profile. Because each ν_a is irreducible, checking divisibility in
/// both directions is a complete certificate at this finite level.
fn certify_generic(g: &DistPoly, prof: PrecisionProfile) -> Result<()> {
    if g.coeffs()[0].is_zero() {
        return Err(Error::InvalidModule(
            "generic factor divisible by T = ν_0".into(),
        ));
    }
    for a in 0..=prof.n_max {
        if prof.omega_degree(a + 1).map(|d| d >= prof.d).unwrap_or(true) {
            break;
        }
        if divides_nu(g, a, prof)? || nu_divides(g, a, prof)? {
            return Err(Error::InvalidModule(format!(
                "generic factor not coprime to nu_{a}"
            )));
        }
    }
    Ok(())
}
