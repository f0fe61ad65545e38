//! Finite W[T]-modules: ⊕ W/p^{c_i} together with the matrix of the
//! T-action. The module is where every finite-level slice of a Λ-module
//! lands, and the object the twisted duality acts on.

use crate::error::{Error, Result};
use crate::linalg::{addmod, mat_inv_mod, mulmod};
use num_bigint::BigUint;
use serde::{Deserialize, Serialize};

/// Row convention: row i of `t_action` lists the coordinates of T·e_i, so
/// entry (i, j) is taken mod p^{c_j} and must be divisible by
/// p^{max(0, c_j − c_i)} for the action to be well defined.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FiniteWTModule {
    p: u64,
    /// Descending exponent list [c_1 ≥ c_2 ≥ …], each ≥ 1.
    orders: Vec<u32>,
    t_action: Vec<u128>,
}

impl FiniteWTModule {
    pub fn new(p: u64, orders: Vec<u32>, mut t_action: Vec<u128>) -> Result<Self> {
        let d = orders.len();
        if t_action.len() != d * d {
            return Err(Error::InvalidModule("t_action shape mismatch".into()));
        }
        if orders.windows(2).any(|w| w[0] < w[1]) || orders.iter().any(|&c| c == 0) {
            return Err(Error::InvalidModule(
                "orders must be descending and positive".into(),
            ));
        }
        for i in 0..d {
            for j in 0..d {
                let mj = (p as u128).pow(orders[j]);
                t_action[i * d + j] %= mj;
                let need = orders[j].saturating_sub(orders[i]);
                if t_action[i * d + j] % (p as u128).pow(need) != 0 {
                    return Err(Error::InvalidModule(format!(
                        "t_action({i},{j}) not divisible by p^{need}"
                    )));
                }
            }
        }
        Ok(FiniteWTModule {
            p,
            orders,
            t_action,
        })
    }

    pub fn zero(p: u64) -> Self {
        FiniteWTModule {
            p,
            orders: vec![],
            t_action: vec![],
        }
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn dim(&self) -> usize {
        self.orders.len()
    }

    pub fn orders(&self) -> &[u32] {
        &self.orders
    }

    pub fn t_action(&self) -> &[u128] {
        &self.t_action
    }

    pub fn max_order(&self) -> u32 {
        self.orders.first().copied().unwrap_or(0)
    }

    pub fn size(&self) -> BigUint {
        BigUint::from(self.p).pow(self.log_size() as u32)
    }

    pub fn log_size(&self) -> u64 {
        self.orders.iter().map(|&c| c as u64).sum()
    }

    /// T·m for m given in coordinates (entry i mod p^{c_i}).
    pub fn t_apply(&self, m: &[u128]) -> Vec<u128> {
        self.op_apply(&self.t_action, m)
    }

    /// Apply an operator in the row convention: (Φm)_j = Σ_i m_i Φ(i,j).
    pub fn op_apply(&self, op: &[u128], m: &[u128]) -> Vec<u128> {
        let d = self.dim();
        let big = (self.p as u128).pow(self.max_order());
        let mut out = vec![0u128; d];
        for j in 0..d {
            let mut acc = 0u128;
            for i in 0..d {
                acc = addmod(acc, mulmod(m[i] % big, op[i * d + j] % big, big), big);
            }
            out[j] = acc % (self.p as u128).pow(self.orders[j]);
        }
        out
    }

    /// Matrix of ι(T) = (1 + T)^{-1} − 1 in the same row convention.
    pub fn iota_t_matrix(&self) -> Result<Vec<u128>> {
        let d = self.dim();
        if d == 0 {
            return Ok(vec![]);
        }
        let c1 = self.max_order();
        let m = (self.p as u128).pow(c1);
        let mut one_plus = self.t_action.clone();
        for i in 0..d {
            one_plus[i * d + i] = addmod(one_plus[i * d + i], 1, m);
        }
        let mut inv = mat_inv_mod(d, &one_plus, self.p, c1).ok_or(Error::NonInvertibleAction)?;
        for i in 0..d {
            inv[i * d + i] = if inv[i * d + i] == 0 {
                m - 1
            } else {
                inv[i * d + i] - 1
            };
        }
        // Canonical reduction per column.
        for i in 0..d {
            for j in 0..d {
                inv[i * d + j] %= (self.p as u128).pow(self.orders[j]);
            }
        }
        Ok(inv)
    }

    /// Entrywise equality after canonical reduction (the constructor already
    /// reduces, so derived PartialEq would do; this spells the intent out).
    pub fn same_presentation(&self, other: &Self) -> bool {
        self == other
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn construction_and_size() {
        // Z/p with T = 0.
        let m = FiniteWTModule::new(5, vec![1], vec![0]).unwrap();
        assert_eq!(m.log_size(), 1);
        assert_eq!(m.size(), BigUint::from(5u32));
        // Z/25 ⊕ Z/5: entry (2→1 direction) needs divisibility.
        assert!(FiniteWTModule::new(5, vec![2, 1], vec![0, 0, 1, 0]).is_err());
        let ok = FiniteWTModule::new(5, vec![2, 1], vec![0, 0, 5, 0]).unwrap();
        assert_eq!(ok.log_size(), 3);
        // Ascending orders rejected.
        assert!(FiniteWTModule::new(5, vec![1, 2], vec![0, 0, 0, 0]).is_err());
    }

    #[test]
    fn iota_t_scalar_example() {
        // Z/p² with T = p: ι(T) = (1+p)^{-1} − 1 ≡ −p mod p² (since
        // (1+p)(1−p) = 1−p² ≡ 1).
        let m = FiniteWTModule::new(5, vec![2], vec![5]).unwrap();
        let it = m.iota_t_matrix().unwrap();
        assert_eq!(it, vec![25 - 5]);
        // And on Z/p with T=0: ι(T) = 0.
        let z = FiniteWTModule::new(5, vec![1], vec![0]).unwrap();
        assert_eq!(z.iota_t_matrix().unwrap(), vec![0]);
    }

    #[test]
    fn t_apply_row_convention() {
        // (Z/5)², T·e_1 = e_2, T·e_2 = 0 (nilpotent Jordan block).
        let m = FiniteWTModule::new(5, vec![1, 1], vec![0, 1, 0, 0]).unwrap();
        assert_eq!(m.t_apply(&[1, 0]), vec![0, 1]);
        assert_eq!(m.t_apply(&[0, 1]), vec![0, 0]);
        // T² = 0.
        let it = m.iota_t_matrix().unwrap();
        // ι(T) = −T + T² − … = −T here.
        assert_eq!(it, vec![0, 4, 0, 0]);
    }
}
