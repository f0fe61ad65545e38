//! Synthetic control-theorem towers. Level data is generated from a chosen
//! Λ-adic limit with bounded seeded defects, then the Λ-invariants are
//! recovered from sizes alone.

use crate::elementary::{ElementaryModule, Factor};
use crate::error::{Error, Result};
use crate::finite::FiniteWTModule;
use crate::poly::DistPoly;
use crate::presented::GrowthFit;
use crate::profile::PrecisionProfile;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TowerLevel {
    pub level: u32,
    pub divisible_corank: u64,
    pub finite_part: FiniteWTModule,
    pub defect_in: u32,
    pub defect_out: u32,
}

#[derive(Debug, Clone)]
pub struct TowerReport {
    pub fit: GrowthFit,
    /// None when the divisible corank never stabilizes (positive free rank).
    pub corank_stable_from: Option<u32>,
    pub limit_g_class: ElementaryModule,
    pub ratio_bound_witness: Option<u64>,
}

/// Pack a log-size into a descending orders vector with entries ≤ m. The
/// finite parts carry no transition data, so only the group size is
/// structural; the T-action is recorded as zero.
fn packed_module(p: u64, log: u64, m: u32) -> FiniteWTModule {
    if log == 0 {
        return FiniteWTModule::zero(p);
    }
    let mut orders = Vec::new();
    let mut left = log;
    while left > 0 {
        let c = left.min(m as u64) as u32;
        orders.push(c);
        left -= c as u64;
    }
    let d = orders.len();
    FiniteWTModule::new(p, orders, vec![0u128; d * d]).expect("zero action is always valid")
}

/// Generate a depth-N tower from `limit`. Finite parts are the closed-form
/// torsion of limit/ωₙ perturbed by seeded kernel/cokernel defects of order
/// ≤ p^B; kernels and cokernels are bounded, so the draws freeze from level
/// 3 on. Deterministic per (inputs, seed).
pub fn simulate(limit: &ElementaryModule, b: u32, n: u32, seed: u64) -> Result<Vec<TowerLevel>> {
    if limit
        .factors()
        .iter()
        .any(|f| matches!(f, Factor::Cyclo { .. }))
    {
        return Err(Error::InvalidLimit(
            "cyclotomic torsion factor makes the simulated finite parts infinite".into(),
        ));
    }
    let prof = limit.profile();
    limit.profile().require_level(n)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut levels = Vec::with_capacity(n as usize);
    let mut frozen: Option<(u32, u32)> = None;
    for lv in 1..=n {
        let (corank, tors) = limit.quotient_profile(lv)?;
        let (d_in, d_out) = if lv >= 3 {
            *frozen.get_or_insert_with(|| (rng.gen_range(0..=b), rng.gen_range(0..=b)))
        } else {
            (rng.gen_range(0..=b), rng.gen_range(0..=b))
        };
        let log = (tors + d_out as u64).saturating_sub(d_in as u64);
        levels.push(TowerLevel {
            level: lv,
            divisible_corank: corank,
            finite_part: packed_module(prof.p, log, prof.m),
            defect_in: d_in,
            defect_out: d_out,
        });
    }
    Ok(levels)
}

fn sizes(tower: &[TowerLevel]) -> Vec<u64> {
    tower.iter().map(|l| l.finite_part.log_size()).collect()
}

/// Recover (μ, λ, ν) from the finite-part sizes. The tail (last three
/// levels) is fitted exactly; earlier levels may deviate by at most 2B,
/// the worst-case size contribution of the defects.
pub fn analyze(tower: &[TowerLevel]) -> Result<TowerReport> {
    if tower.len() < 4 {
        return Err(Error::InvalidLimit("tower depth must be at least 4".into()));
    }
    let p = tower[0].finite_part.p();
    let e = sizes(tower);
    let nn = e.len();
    let slack = 2 * tower
        .iter()
        .map(|l| l.defect_in.max(l.defect_out))
        .max()
        .unwrap() as i128;
    let ei = |k: usize| e[k - 1] as i128; // e_1..e_nn
    let pw = |k: u32| (p as i128).pow(k);
    let d1 = ei(nn - 1) - ei(nn - 2);
    let d2 = ei(nn) - ei(nn - 1);
    let step = pw(nn as u32 - 3) * (p as i128 - 1) * (p as i128 - 1);
    if (d2 - d1) % step != 0 || d2 < d1 {
        return Err(Error::NoConsistentFit(format!(
            "tail second difference {} is not a multiple of {step}",
            d2 - d1
        )));
    }
    let mu = (d2 - d1) / step;
    let lambda = d2 - mu * pw(nn as u32 - 2) * (p as i128 - 1);
    if lambda < 0 {
        return Err(Error::NoConsistentFit("negative λ from tail fit".into()));
    }
    let nu = ei(nn) - mu * pw(nn as u32 - 1) - lambda * nn as i128;
    let model = |k: usize| mu * pw(k as u32 - 1) + lambda * k as i128 + nu;
    let mut stable_from = 1u32;
    for k in 1..=nn {
        let resid = ei(k) - model(k);
        let ok = resid.abs() <= slack || (e[k - 1] == 0 && model(k) <= slack);
        if !ok {
            return Err(Error::NoConsistentFit(format!(
                "level {k} deviates by {resid}, beyond the defect slack {slack}"
            )));
        }
        if resid != 0 {
            stable_from = k as u32 + 1;
        }
    }
    let fit = GrowthFit {
        mu: mu as u64,
        lambda: lambda as u64,
        nu: nu as i64,
        stable_from,
    };
    // Corank stabilization: constant tail, if any.
    let coranks: Vec<u64> = tower.iter().map(|l| l.divisible_corank).collect();
    let last = *coranks.last().unwrap();
    let corank_stable_from = if coranks[nn - 2] != last {
        None
    } else {
        let mut from = nn as u32;
        for k in (1..=nn).rev() {
            if coranks[k - 1] != last {
                break;
            }
            from = k as u32;
        }
        Some(from)
    };
    // A representative of the recovered elementary class: sizes determine
    // only (μ, λ), so pick the canonical witness μ·[Λ/p^μ] ⊕ λ·[Λ/(T−p)].
    let prof = PrecisionProfile::default_p(p)?;
    let mut factors = Vec::new();
    if fit.mu > 0 {
        factors.push(Factor::PPower { f: fit.mu as u32 });
    }
    if fit.lambda > 0 {
        let tp = DistPoly::from_int_coeffs(p, &[-(p as i64), 1])?;
        for _ in 0..fit.lambda {
            factors.push(Factor::Generic { g: tp.clone(), e: 1 });
        }
    }
    let limit_g_class = ElementaryModule::new(prof, 0, factors)?;
    Ok(TowerReport {
        fit,
        corank_stable_from,
        limit_g_class,
        ratio_bound_witness: None,
    })
}

/// Bounded iff the two towers share (μ, λ); witness is the largest
/// log-size gap over the common levels.
pub fn compare_towers(t1: &[TowerLevel], t2: &[TowerLevel]) -> Result<(bool, u64)> {
    if t1.len() != t2.len() {
        return Err(Error::InvalidLimit("towers have different depths".into()));
    }
    let r1 = analyze(t1)?;
    let r2 = analyze(t2)?;
    let witness = sizes(t1)
        .iter()
        .zip(sizes(t2))
        .map(|(&a, b)| a.abs_diff(b))
        .max()
        .unwrap_or(0);
    let bounded = r1.fit.mu == r2.fit.mu && r1.fit.lambda == r2.fit.lambda;
    Ok((bounded, witness))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn prof() -> PrecisionProfile {
        PrecisionProfile::default_p(5).unwrap()
    }

    fn t_minus_p() -> DistPoly {
        DistPoly::from_int_coeffs(5, &[-5, 1]).unwrap()
    }

    #[test]
    fn simulate_examples() {
        let e = ElementaryModule::new(prof(), 0, vec![Factor::PPower { f: 1 }]).unwrap();
        let t = simulate(&e, 0, 4, 11).unwrap();
        assert_eq!(sizes(&t), vec![1, 5, 25, 125]);

        let e = ElementaryModule::new(
            prof(),
            0,
            vec![Factor::Generic { g: t_minus_p(), e: 1 }],
        )
        .unwrap();
        let t = simulate(&e, 0, 4, 11).unwrap();
        assert_eq!(sizes(&t), vec![1, 2, 3, 4]);
        assert!(t.iter().all(|l| l.divisible_corank == 0));

        let e = ElementaryModule::new(
            prof(),
            1,
            vec![Factor::Generic { g: t_minus_p(), e: 1 }],
        )
        .unwrap();
        let t = simulate(&e, 0, 4, 11).unwrap();
        assert_eq!(sizes(&t), vec![1, 2, 3, 4]);
        let coranks: Vec<u64> = t.iter().map(|l| l.divisible_corank).collect();
        assert_eq!(coranks, vec![1, 5, 25, 125]);

        let e = ElementaryModule::new(prof(), 0, vec![Factor::Cyclo { a: 1, e: 1 }]).unwrap();
        assert!(matches!(simulate(&e, 0, 4, 1), Err(Error::InvalidLimit(_))));
    }

    #[test]
    fn analyze_examples() {
        let e = ElementaryModule::new(prof(), 0, vec![Factor::PPower { f: 1 }]).unwrap();
        let r = analyze(&simulate(&e, 0, 4, 3).unwrap()).unwrap();
        assert_eq!((r.fit.mu, r.fit.lambda, r.fit.nu), (1, 0, 0));
        assert_eq!(r.corank_stable_from, Some(1));
        assert_eq!(r.limit_g_class.growth_law(), (1, 0, true));

        let deep = PrecisionProfile::new(5, 16, 640, 5).unwrap();
        let e = ElementaryModule::new(
            deep,
            0,
            vec![Factor::Generic { g: t_minus_p(), e: 1 }],
        )
        .unwrap();
        for seed in 0..8 {
            let r = analyze(&simulate(&e, 1, 5, seed).unwrap()).unwrap();
            assert_eq!((r.fit.mu, r.fit.lambda), (0, 1));
            assert!(r.fit.nu.abs() <= 2);
        }

        // Hand-built all-zero tower.
        let t: Vec<TowerLevel> = (1..=4)
            .map(|lv| TowerLevel {
                level: lv,
                divisible_corank: 0,
                finite_part: FiniteWTModule::zero(5),
                defect_in: 0,
                defect_out: 0,
            })
            .collect();
        let r = analyze(&t).unwrap();
        assert_eq!((r.fit.mu, r.fit.lambda, r.fit.nu), (0, 0, 0));
    }

    #[test]
    fn compare_examples() {
        let e1 = ElementaryModule::new(
            prof(),
            0,
            vec![Factor::Generic { g: t_minus_p(), e: 1 }],
        )
        .unwrap();
        let t1 = simulate(&e1, 0, 4, 5).unwrap();
        assert_eq!(compare_towers(&t1, &t1).unwrap(), (true, 0));

        // ι-twist: same invariants, bounded comparison.
        let e2 = e1.twist().unwrap();
        let t2 = simulate(&e2, 0, 4, 9).unwrap();
        let (bounded, w) = compare_towers(&t1, &t2).unwrap();
        assert!(bounded);
        assert_eq!(w, 0);

        // μ mismatch diverges.
        let e3 = ElementaryModule::new(prof(), 0, vec![Factor::PPower { f: 1 }]).unwrap();
        let t3 = simulate(&e3, 0, 4, 5).unwrap();
        let (bounded, w) = compare_towers(&t1, &t3).unwrap();
        assert!(!bounded);
        assert_eq!(w, 121);
    }
}
