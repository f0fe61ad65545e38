//! ι-twisted Pontryagin duality on finite W[T]-modules and the perfect
//! pairing checks. Values in Q_p/Z_p are exact rationals a/p^k; no floats.

use crate::elementary::{ElementaryModule, Factor};
use crate::error::{Error, Result};
use crate::finite::FiniteWTModule;
use crate::linalg::{addmod, mulmod, subgroup_size};
use crate::poly::{cyclo_nu, iota_dist, make_omega};
use crate::presented::present_elementary;
use num_bigint::BigInt;
use serde::{Deserialize, Serialize};

/// An element of Q_p/Z_p: num / p^{den_exp} with num reduced mod p^{den_exp}.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct QpFrac {
    pub num: u128,
    pub den_exp: u32,
}

impl QpFrac {
    pub fn new(p: u64, num: u128, den_exp: u32) -> Self {
        let mut num = num % (p as u128).pow(den_exp.max(1));
        let mut den_exp = den_exp;
        while den_exp > 0 && num % (p as u128) == 0 && num != 0 {
            num /= p as u128;
            den_exp -= 1;
        }
        if num == 0 {
            den_exp = 0;
        }
        QpFrac { num, den_exp }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairingTable {
    pub p: u64,
    pub dim: usize,
    /// values[i][j] = ⟨e_i, φ_j⟩, row-major.
    pub values: Vec<QpFrac>,
}

#[derive(Debug, Clone)]
pub struct PairingReport {
    pub perfect: bool,
    pub equivariant: bool,
    pub witness: Option<(usize, usize)>,
    pub table: PairingTable,
}

/// The ι-twisted dual: same orders; T acts through (f·φ)(m) = φ(ι(f)·m).
/// With the canonical pairing ⟨e_i, φ_j⟩ = δ_ij/p^{c_j}, the matrix works
/// out to D[j][k] = ι(T)[k][j] · p^{c_k − c_j} (exact because the ι(T)
/// matrix satisfies the same divisibility its source action does).
pub fn dual(m: &FiniteWTModule) -> Result<FiniteWTModule> {
    let d = m.dim();
    let p = m.p();
    let it = m.iota_t_matrix()?;
    let orders = m.orders().to_vec();
    let mut t = vec![0u128; d * d];
    for j in 0..d {
        for k in 0..d {
            let e = it[k * d + j];
            let val = if orders[k] >= orders[j] {
                let shift = (p as u128).pow(orders[k] - orders[j]);
                mulmod(
                    e % (p as u128).pow(orders[j]),
                    shift % (p as u128).pow(orders[k]),
                    (p as u128).pow(orders[k]),
                )
            } else {
                let shift = (p as u128).pow(orders[j] - orders[k]);
                if e % shift != 0 {
                    return Err(Error::InvalidModule(
                        "ι(T) violates order divisibility".into(),
                    ));
                }
                (e / shift) % (p as u128).pow(orders[k])
            };
            t[j * d + k] = val;
        }
    }
    FiniteWTModule::new(p, orders, t)
}

/// Canonical evaluation table ⟨e_i, φ_j⟩ = δ_ij / p^{c_i}.
pub fn canonical_table(m: &FiniteWTModule) -> PairingTable {
    let d = m.dim();
    let mut values = Vec::with_capacity(d * d);
    for i in 0..d {
        for j in 0..d {
            if i == j {
                values.push(QpFrac::new(m.p(), 1, m.orders()[i]));
            } else {
                values.push(QpFrac::new(m.p(), 0, 0));
            }
        }
    }
    PairingTable {
        p: m.p(),
        dim: d,
        values,
    }
}

fn frac_add(p: u64, a: QpFrac, b: QpFrac) -> QpFrac {
    let k = a.den_exp.max(b.den_exp);
    if k == 0 {
        return QpFrac { num: 0, den_exp: 0 };
    }
    let m = (p as u128).pow(k);
    let av = a.num * (p as u128).pow(k - a.den_exp) % m;
    let bv = b.num * (p as u128).pow(k - b.den_exp) % m;
    QpFrac::new(p, addmod(av, bv, m), k)
}

fn frac_scale(p: u64, c: u128, a: QpFrac) -> QpFrac {
    if a.den_exp == 0 {
        return a;
    }
    let m = (p as u128).pow(a.den_exp);
    QpFrac::new(p, mulmod(c % m, a.num, m), a.den_exp)
}

/// Verify perfectness and ι-equivariance of a pairing table between M and
/// dual(M). Works for any table, so mutated tables are detected.
pub fn pairing_check_table(m: &FiniteWTModule, table: &PairingTable) -> Result<PairingReport> {
    let d = m.dim();
    let p = m.p();
    let dm = dual(m)?;
    let mut perfect = true;
    // Induced map M → dual(M)^∨ ≅ ⊕ Z/p^{c_j}: e_i ↦ (value·p^{c_j}).
    // Perfect iff it is injective, i.e. the image has full size.
    let mut gens = Vec::with_capacity(d);
    for i in 0..d {
        let mut v = Vec::with_capacity(d);
        for j in 0..d {
            let f = table.values[i * d + j];
            let cj = dm.orders()[j];
            if f.den_exp > cj {
                perfect = false;
            }
            let lift = f.num * (p as u128).pow(cj.saturating_sub(f.den_exp));
            v.push(lift % (p as u128).pow(cj));
        }
        gens.push(v);
    }
    if perfect {
        let size = subgroup_size(&gens, dm.orders(), p);
        perfect = size == m.size();
    }
    // ⟨T·e_i, φ_j⟩ = ⟨e_i, ι(T)·φ_j⟩, with the right side computed through
    // the dual module's own action (an independent route).
    let it_dual = dm.iota_t_matrix()?;
    let mut witness = None;
    'outer: for i in 0..d {
        for j in 0..d {
            // LHS: Σ_k t[i][k]·⟨e_k, φ_j⟩.
            let mut lhs = QpFrac { num: 0, den_exp: 0 };
            for k in 0..d {
                lhs = frac_add(
                    p,
                    lhs,
                    frac_scale(p, m.t_action()[i * d + k], table.values[k * d + j]),
                );
            }
            // RHS: ι(T)·φ_j = Σ_k it_dual[j][k] φ_k.
            let mut rhs = QpFrac { num: 0, den_exp: 0 };
            for k in 0..d {
                rhs = frac_add(
                    p,
                    rhs,
                    frac_scale(p, it_dual[j * d + k], table.values[i * d + k]),
                );
            }
            if lhs != rhs {
                witness = Some((i, j));
                break 'outer;
            }
        }
    }
    Ok(PairingReport {
        perfect,
        equivariant: witness.is_none(),
        witness,
        table: table.clone(),
    })
}

pub fn pairing_check(m: &FiniteWTModule) -> Result<PairingReport> {
    let table = canonical_table(m);
    pairing_check_table(m, &table)
}

/// f(T)·x inside a finite module, with exact integer coefficients.
fn poly_apply(m: &FiniteWTModule, coeffs: &[BigInt], x: &[u128]) -> Vec<u128> {
    let p = m.p();
    let d = m.dim();
    let mut acc = vec![0u128; d];
    let mut cur = x.to_vec();
    for (k, c) in coeffs.iter().enumerate() {
        let cr: Vec<u128> = (0..d)
            .map(|i| {
                let mi = (p as u128).pow(m.orders()[i]);
                let red = {
                    let mb = BigInt::from(p).pow(m.orders()[i]);
                    let r = ((c % &mb) + &mb) % &mb;
                    let (_, digits) = r.to_u64_digits();
                    digits.iter().rev().fold(0u128, |a, &dg| (a << 64) | dg as u128)
                };
                mulmod(red % mi, cur[i] % mi, mi)
            })
            .collect();
        for i in 0..d {
            let mi = (p as u128).pow(m.orders()[i]);
            acc[i] = addmod(acc[i], cr[i], mi);
        }
        if k + 1 < coeffs.len() {
            cur = m.t_apply(&cur);
        }
    }
    acc
}

/// Λ-span of x: the subgroup generated by x, Tx, T²x, …
fn cyclic_span_size(m: &FiniteWTModule, x: &[u128]) -> num_bigint::BigUint {
    let d = m.dim();
    let mut gens = Vec::with_capacity(d);
    let mut cur = x.to_vec();
    for _ in 0..d.max(1) {
        gens.push(cur.clone());
        cur = m.t_apply(&cur);
    }
    subgroup_size(&gens, m.orders(), m.p())
}

/// Try to exhibit a Λ-generator of a finite module known to be cyclic.
fn find_generator(m: &FiniteWTModule) -> Option<Vec<u128>> {
    let d = m.dim();
    if d == 0 {
        return Some(vec![]);
    }
    let target = m.size();
    // Basis vectors, then prefix sums — enough for modules arising here.
    for i in 0..d {
        let mut x = vec![0u128; d];
        x[i] = 1;
        if cyclic_span_size(m, &x) == target {
            return Some(x);
        }
    }
    let mut x = vec![0u128; d];
    for i in 0..d {
        x[i] = 1;
        if cyclic_span_size(m, &x) == target {
            return Some(x);
        }
    }
    None
}

/// Annihilator generators (exact coefficients) of the canonical cyclic
/// generator of the torsion slice of a single elementary factor at level n.
fn slice_annihilator(f: &Factor, n: u32, prof: crate::profile::PrecisionProfile) -> Result<Vec<Vec<BigInt>>> {
    let omega = make_omega(n, prof)?;
    Ok(match f {
        Factor::PPower { f } => vec![
            vec![BigInt::from(prof.p).pow(*f)],
            omega.coeffs().to_vec(),
        ],
        Factor::Generic { g, e } => vec![g.pow(*e).coeffs().to_vec(), omega.coeffs().to_vec()],
        Factor::Cyclo { a, e } => {
            let nu = cyclo_nu(*a, prof)?;
            if n >= *a + 1 {
                // Torsion generator is ν_a·1; its annihilator is
                // (ν_a^{e−1}, ω_n/ν_a).
                let h = omega.exact_div(&nu)?;
                if *e == 1 {
                    vec![vec![BigInt::from(1)]] // trivial torsion
                } else {
                    vec![nu.pow(*e - 1).coeffs().to_vec(), h.coeffs().to_vec()]
                }
            } else {
                vec![nu.pow(*e).coeffs().to_vec(), omega.coeffs().to_vec()]
            }
        }
    })
}

/// ι-twist of a factor (the ideal-level twist used on the dual side).
fn twist_factor(f: &Factor, prof: crate::profile::PrecisionProfile) -> Result<Factor> {
    Ok(match f {
        Factor::Generic { g, e } => Factor::Generic {
            g: iota_dist(g, prof)?,
            e: *e,
        },
        other => other.clone(),
    })
}

/// Duality shadow at level n: the ι-twisted dual of the torsion slice of E
/// agrees with the torsion slice of twist(E). Certified factor by factor:
/// slices of single factors are cyclic, so a generator y of the dual with
/// the twisted annihilator killing it plus a full Λ-span gives a surjection
/// Λ/I' ↠ dual slice; equal sizes upgrade it to an isomorphism.
pub fn dual_elementary_shadow(e: &ElementaryModule, n: u32) -> Result<bool> {
    let prof = e.profile();
    for f in e.factors() {
        let single = ElementaryModule::new(prof, 0, vec![f.clone()])?;
        let x = present_elementary(&single)?;
        let (_, slice) = x.quotient_module(n)?;

        let tf = twist_factor(f, prof)?;
        let tsingle = ElementaryModule::new(prof, 0, vec![tf.clone()])?;
        let tx = present_elementary(&tsingle)?;
        let (_, tslice) = tx.quotient_module(n)?;

        let d = dual(&slice)?;
        if d.orders() != tslice.orders() {
            return Ok(false);
        }
        if d.dim() == 0 {
            continue; // trivial slice: vacuously dual
        }
        let y = match find_generator(&d) {
            Some(y) => y,
            None => return Ok(false),
        };
        // The twisted annihilator must kill y.
        for ann in slice_annihilator(&tf, n, prof)? {
            let img = poly_apply(&d, &ann, &y);
            if img.iter().any(|&v| v != 0) {
                return Ok(false);
            }
        }
        if cyclic_span_size(&d, &y) != d.size() {
            return Ok(false);
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::DistPoly;
    use crate::profile::PrecisionProfile;

    fn prof() -> PrecisionProfile {
        PrecisionProfile::default_p(5).unwrap()
    }

    #[test]
    fn dual_examples() {
        // Z/p, T = 0.
        let m = FiniteWTModule::new(5, vec![1], vec![0]).unwrap();
        let d = dual(&m).unwrap();
        assert_eq!(d.orders(), &[1]);
        assert_eq!(d.t_action(), &[0]);
        // Z/p², T = p → dual has T ≡ −p.
        let m = FiniteWTModule::new(5, vec![2], vec![5]).unwrap();
        let d = dual(&m).unwrap();
        assert_eq!(d.t_action(), &[20]);
        // Double dual is the literal identity.
        let dd = dual(&d).unwrap();
        assert_eq!(dd.t_action(), m.t_action());
        assert_eq!(d.size(), m.size());
    }

    #[test]
    fn dual_mixed_orders() {
        let m = FiniteWTModule::new(5, vec![2, 1], vec![0, 0, 5, 0]).unwrap();
        let d = dual(&m).unwrap();
        assert_eq!(d.orders(), &[2, 1]);
        assert_eq!(d.size(), m.size());
        let dd = dual(&d).unwrap();
        assert_eq!(dd.t_action(), m.t_action());
    }

    #[test]
    fn pairing_examples() {
        let m = FiniteWTModule::new(5, vec![1], vec![0]).unwrap();
        let r = pairing_check(&m).unwrap();
        assert!(r.perfect && r.equivariant);

        // Nilpotent Jordan block on (Z/5)².
        let m = FiniteWTModule::new(5, vec![1, 1], vec![0, 1, 0, 0]).unwrap();
        let r = pairing_check(&m).unwrap();
        assert!(r.perfect && r.equivariant);

        // Negative control: perturb one diagonal entry.
        let mut bad = canonical_table(&m);
        bad.values[0] = QpFrac::new(5, 2, 1); // ⟨e_1, φ_1⟩ = 2/5
        let r = pairing_check_table(&m, &bad).unwrap();
        assert!(!r.equivariant || !r.perfect);
        // ⟨e_2, φ_1⟩ = 1/5 breaks ι-equivariance at (1, 1) and is caught.
        let mut bad = canonical_table(&m);
        bad.values[2] = QpFrac::new(5, 1, 1);
        let r = pairing_check_table(&m, &bad).unwrap();
        assert!(!r.equivariant);
        assert!(r.witness.is_some());
    }

    #[test]
    fn shadow_examples() {
        use crate::elementary::{ElementaryModule, Factor};
        let prof = prof();
        let e = ElementaryModule::new(prof, 0, vec![Factor::PPower { f: 1 }]).unwrap();
        for n in 1..=3 {
            assert!(dual_elementary_shadow(&e, n).unwrap(), "Λ/p level {n}");
        }
        let tp = DistPoly::from_int_coeffs(5, &[-5, 1]).unwrap();
        let e = ElementaryModule::new(prof, 0, vec![Factor::Generic { g: tp, e: 1 }]).unwrap();
        assert!(dual_elementary_shadow(&e, 2).unwrap());
        // Λ: no torsion slice — vacuous.
        let e = ElementaryModule::lambda_free(prof, 1);
        assert!(dual_elementary_shadow(&e, 2).unwrap());
    }
}
