//! Seeded corpus of elementary modules used by the acceptance suite and the
//! property tests. Deterministic per (p, count, seed).

use crate::elementary::{ElementaryModule, Factor};
use crate::error::Result;
use crate::poly::DistPoly;
use crate::profile::PrecisionProfile;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Profile wide enough for depth-5 towers at the given p.
pub fn wide_profile(p: u64) -> Result<PrecisionProfile> {
    let d = match p {
        5 => 640,
        7 => 2500,
        _ => return PrecisionProfile::new(p, 16, 128, 4),
    };
    PrecisionProfile::new(p, 16, d, 5)
}

fn random_distinguished(rng: &mut ChaCha8Rng, p: u64, max_deg: u32) -> DistPoly {
    let deg = rng.gen_range(1..=max_deg) as usize;
    let mut coeffs = vec![0i64; deg + 1];
    coeffs[deg] = 1;
    for c in coeffs.iter_mut().take(deg) {
        *c = p as i64 * rng.gen_range(0..p as i64);
    }
    if coeffs[0] == 0 {
        coeffs[0] = p as i64 * rng.gen_range(1..p as i64);
    }
    DistPoly::from_int_coeffs(p, &coeffs).expect("monic with p-divisible tail")
}

fn random_factor(rng: &mut ChaCha8Rng, p: u64) -> Factor {
    match rng.gen_range(0..3u32) {
        0 => Factor::PPower {
            f: rng.gen_range(1..=3),
        },
        1 => Factor::Generic {
            g: random_distinguished(rng, p, 3),
            e: rng.gen_range(1..=2),
        },
        _ => Factor::Cyclo {
            a: rng.gen_range(0..=2),
            e: rng.gen_range(1..=3),
        },
    }
}

/// `count` seeded elementary modules over Λ at prime p: ≤ 3 factors each,
/// free rank ≤ 1, factor shapes bounded as in the test contracts.
pub fn corpus(p: u64, count: usize, seed: u64) -> Result<Vec<ElementaryModule>> {
    let prof = wide_profile(p)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ p);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let free_rank = if rng.gen_range(0..4u32) == 0 { 1 } else { 0 };
        let nf = rng.gen_range(1..=3usize);
        let factors: Vec<Factor> = (0..nf).map(|_| random_factor(&mut rng, p)).collect();
        // Constructor certification can reject a degenerate draw; redraw.
        if let Ok(e) = ElementaryModule::new(prof, free_rank, factors) {
            out.push(e);
        }
    }
    Ok(out)
}

/// The standard 200-module corpus: 100 each at p = 5 and p = 7.
pub fn standard_corpus() -> Result<Vec<ElementaryModule>> {
    let mut out = corpus(5, 100, 0x1a5a)?;
    out.extend(corpus(7, 100, 0x1a5a)?);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn corpus_is_deterministic_and_bounded() {
        let a = corpus(5, 20, 7).unwrap();
        let b = corpus(5, 20, 7).unwrap();
        assert_eq!(a.len(), 20);
        for (x, y) in a.iter().zip(&b) {
            assert!(x.same_class(y));
            assert!(x.free_rank() <= 1);
            assert!(x.factors().len() <= 3);
        }
        let c = corpus(5, 5, 8).unwrap();
        assert!(!a[0].same_class(&c[0]) || !a[1].same_class(&c[1]) || !a[2].same_class(&c[2]));
    }
}
