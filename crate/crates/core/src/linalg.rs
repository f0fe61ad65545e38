//! Linear algebra over Z/p^k with k large enough that every computed
//! valuation is certain (callers pick k, typically M or 2M).
//!
//! Matrices are dense row-major `Vec<u128>`. Moduli up to ~2^90 are
//! supported; multiplication chunks operands so intermediates stay in u128.

use crate::error::{Error, Result};
use num_bigint::BigUint;
use num_traits::One;

pub fn mulmod(a: u128, b: u128, m: u128) -> u128 {
    debug_assert!(a < m && b < m);
    if m <= 1 << 63 {
        return a * b % m;
    }
    // Process b high-to-low in 32-bit chunks; r < m < 2^91 keeps r<<32 and
    // a*chunk below 2^124.
    let (lo, hi) = (b as u64, (b >> 64) as u64);
    let chunks = [
        (hi >> 32) as u128,
        (hi & 0xffff_ffff) as u128,
        (lo >> 32) as u128,
        (lo & 0xffff_ffff) as u128,
    ];
    let mut r: u128 = 0;
    for &c in &chunks {
        r = (r << 32) % m;
        r = (r + a * c % m) % m;
    }
    r
}

pub fn addmod(a: u128, b: u128, m: u128) -> u128 {
    let s = a + b;
    if s >= m {
        s - m
    } else {
        s
    }
}

pub fn submod(a: u128, b: u128, m: u128) -> u128 {
    if a >= b {
        a - b
    } else {
        a + m - b
    }
}

/// p-adic valuation of x, capped at `cap` (the working exponent); 0 maps to
/// cap.
pub fn vp_u128(x: u128, p: u64, cap: u32) -> u32 {
    if x == 0 {
        return cap;
    }
    let p = p as u128;
    let mut v = 0;
    let mut x = x;
    while x % p == 0 {
        x /= p;
        v += 1;
        if v >= cap {
            break;
        }
    }
    v
}

/// Inverse of a unit mod m (extended Euclid over i128 is unusable at 2^90,
/// so run Euclid on u128 with signed bookkeeping via BigInt-free trick:
/// track coefficients mod m).
pub fn inv_mod_u128(a: u128, m: u128) -> u128 {
    // Coefficients kept as residues mod m; subtraction wraps correctly.
    let (mut r0, mut r1) = (m, a % m);
    let (mut s0, mut s1): (u128, u128) = (0, 1);
    while r1 != 0 {
        let q = r0 / r1;
        let r = r0 - q * r1;
        r0 = std::mem::replace(&mut r1, r);
        let qs = mulmod(q % m, s1, m);
        let s = submod(s0, qs, m);
        s0 = std::mem::replace(&mut s1, s);
    }
    assert_eq!(r0, 1, "inverse of non-unit");
    s0
}

/// An elementary operation, recorded as performed. As a row op it acts on
/// the left; as a column op on the right.
#[derive(Debug, Clone, Copy)]
pub enum ElemOp {
    Swap(usize, usize),
    /// dst += f · src (row version); col_dst += f · col_src (column version).
    AddMul { src: usize, dst: usize, f: u128 },
    /// idx *= u, with u a unit.
    Scale { idx: usize, u: u128 },
}

#[derive(Debug, Clone)]
pub struct Snf {
    pub rows: usize,
    pub cols: usize,
    /// Valuations of the diagonal entries, length min(rows, cols), in the
    /// order produced (ascending). An entry equal to the working exponent k
    /// means the pivot was zero mod p^k.
    pub diag: Vec<u32>,
    pub row_ops: Vec<ElemOp>,
    pub col_ops: Vec<ElemOp>,
}

impl Snf {
    pub fn rank_at(&self, k: u32) -> usize {
        self.diag.iter().filter(|&&v| v < k).count()
    }
}

/// Smith normal form over Z/p^k by global minimum-valuation pivoting with a
/// Markowitz fill-in tie-break. Returns op logs such that applying row_ops
/// then col_ops (in order) to the input yields diag(p^{diag[i]}·unit).
pub fn snf(rows: usize, cols: usize, data: &[u128], p: u64, k: u32) -> Snf {
    assert_eq!(data.len(), rows * cols);
    let m = (p as u128).pow(k);
    let mut a = data.to_vec();
    let mut row_nnz = vec![0usize; rows];
    let mut col_nnz = vec![0usize; cols];
    for i in 0..rows {
        for j in 0..cols {
            if a[i * cols + j] != 0 {
                row_nnz[i] += 1;
                col_nnz[j] += 1;
            }
        }
    }
    let steps = rows.min(cols);
    let mut diag = Vec::with_capacity(steps);
    let mut row_ops = Vec::new();
    let mut col_ops = Vec::new();

    for step in 0..steps {
        // Pivot: min valuation, ties by (row_nnz-1)(col_nnz-1).
        let mut best: Option<(usize, usize, u32, usize)> = None;
        'scan: for i in step..rows {
            if row_nnz[i] == 0 {
                continue;
            }
            for j in step..cols {
                let e = a[i * cols + j];
                if e == 0 {
                    continue;
                }
                let v = vp_u128(e, p, k);
                let cost = (row_nnz[i] - 1) * (col_nnz[j] - 1);
                let better = match best {
                    None => true,
                    Some((_, _, bv, bc)) => v < bv || (v == bv && cost < bc),
                };
                if better {
                    best = Some((i, j, v, cost));
                    if v == 0 && cost == 0 {
                        break 'scan;
                    }
                }
            }
        }
        let (pi, pj, v, _) = match best {
            Some(b) => b,
            None => {
                // Remaining block is zero.
                for _ in step..steps {
                    diag.push(k);
                }
                break;
            }
        };
        if pi != step {
            for j in 0..cols {
                a.swap(step * cols + j, pi * cols + j);
            }
            row_nnz.swap(step, pi);
            row_ops.push(ElemOp::Swap(step, pi));
        }
        if pj != step {
            for i in 0..rows {
                a.swap(i * cols + step, i * cols + pj);
            }
            col_nnz.swap(step, pj);
            col_ops.push(ElemOp::Swap(step, pj));
        }
        let pivot = a[step * cols + step];
        let pv = (p as u128).pow(v);
        let punit_inv = inv_mod_u128(pivot / pv, m);
        // Normalize the pivot to exactly p^v.
        if pivot != pv {
            for j in step..cols {
                let e = a[step * cols + j];
                if e != 0 {
                    let ne = mulmod(e, punit_inv, m);
                    if ne == 0 {
                        row_nnz[step] -= 1;
                        col_nnz[j] -= 1;
                    }
                    a[step * cols + j] = ne;
                }
            }
            row_ops.push(ElemOp::Scale {
                idx: step,
                u: punit_inv,
            });
        }
        // Clear the column below, then the row to the right. Minimality of v
        // makes every quotient exact.
        for i in step + 1..rows {
            let e = a[i * cols + step];
            if e == 0 {
                continue;
            }
            let f = submod(0, e / pv, m); // -(e / p^v); pivot is p^v
            for j in step..cols {
                let s = a[step * cols + j];
                if s == 0 {
                    continue;
                }
                let old = a[i * cols + j];
                let new = addmod(old, mulmod(f, s, m), m);
                if old == 0 && new != 0 {
                    row_nnz[i] += 1;
                    col_nnz[j] += 1;
                } else if old != 0 && new == 0 {
                    row_nnz[i] -= 1;
                    col_nnz[j] -= 1;
                }
                a[i * cols + j] = new;
            }
            row_ops.push(ElemOp::AddMul {
                src: step,
                dst: i,
                f,
            });
        }
        for j in step + 1..cols {
            let e = a[step * cols + j];
            if e == 0 {
                continue;
            }
            let f = submod(0, e / pv, m);
            // Column step is now (0,...,p^v,0,...): only the pivot row moves.
            let old = a[step * cols + j];
            a[step * cols + j] = 0;
            debug_assert_eq!(addmod(old, mulmod(f, pv, m), m), 0);
            row_nnz[step] -= 1;
            col_nnz[j] -= 1;
            col_ops.push(ElemOp::AddMul {
                src: step,
                dst: j,
                f,
            });
        }
        row_nnz[step] -= 1;
        col_nnz[step] -= 1;
        diag.push(v);
    }
    Snf {
        rows,
        cols,
        diag,
        row_ops,
        col_ops,
    }
}

/// x ← U·x where U is the product of the logged row ops.
pub fn apply_row_ops(ops: &[ElemOp], x: &mut [u128], m: u128) {
    for op in ops {
        match *op {
            ElemOp::Swap(i, j) => x.swap(i, j),
            ElemOp::AddMul { src, dst, f } => {
                x[dst] = addmod(x[dst], mulmod(f, x[src], m), m);
            }
            ElemOp::Scale { idx, u } => x[idx] = mulmod(x[idx], u, m),
        }
    }
}

/// x ← U^{-1}·x: inverted ops applied in reverse order.
pub fn apply_row_ops_inv(ops: &[ElemOp], x: &mut [u128], m: u128) {
    for op in ops.iter().rev() {
        match *op {
            ElemOp::Swap(i, j) => x.swap(i, j),
            ElemOp::AddMul { src, dst, f } => {
                let nf = submod(0, f, m);
                x[dst] = addmod(x[dst], mulmod(nf, x[src], m), m);
            }
            ElemOp::Scale { idx, u } => x[idx] = mulmod(x[idx], inv_mod_u128(u, m), m),
        }
    }
}

/// w ← V·w where V is the product of the logged column ops. A column op
/// A·F acts on coordinate vectors through F, so AddMul moves dst into src.
pub fn apply_col_ops_vec(ops: &[ElemOp], w: &mut [u128], m: u128) {
    for op in ops.iter().rev() {
        match *op {
            ElemOp::Swap(i, j) => w.swap(i, j),
            ElemOp::AddMul { src, dst, f } => {
                w[src] = addmod(w[src], mulmod(f, w[dst], m), m);
            }
            ElemOp::Scale { idx, u } => w[idx] = mulmod(w[idx], u, m),
        }
    }
}

/// Size of the subgroup of ⊕_i Z/p^{c_i} generated by the given vectors
/// (each of length c.len(), entry i taken mod p^{c_i}).
pub fn subgroup_size(gens: &[Vec<u128>], orders: &[u32], p: u64) -> BigUint {
    let d = orders.len();
    if d == 0 {
        return BigUint::one();
    }
    let cmax = *orders.iter().max().unwrap();
    let k = cmax + 1;
    let cols = gens.len() + d;
    let mut data = vec![0u128; d * cols];
    let m = (p as u128).pow(k);
    for (j, g) in gens.iter().enumerate() {
        assert_eq!(g.len(), d);
        for i in 0..d {
            data[i * cols + j] = g[i] % m;
        }
    }
    for i in 0..d {
        data[i * cols + gens.len() + i] = (p as u128).pow(orders[i]);
    }
    let s = snf(d, cols, &data, p, k);
    // |H| = p^{Σ c_i} / p^{Σ diag}; every diagonal valuation is ≤ c_max < k.
    let total: u64 = orders.iter().map(|&c| c as u64).sum();
    let quot: u64 = s.diag.iter().map(|&v| v as u64).sum();
    assert!(
        s.diag.iter().all(|&v| v < k),
        "combined lattice must have full rank"
    );
    assert!(quot <= total);
    BigUint::from(p).pow((total - quot) as u32)
}

/// Basis of the kernel of A mod p^k: vectors x with A·x ≡ 0. Returned
/// vectors are V·(p^{k−d_i} e_i) for each diagonal valuation d_i > 0, plus
/// V·e_i for zero columns beyond the diagonal.
pub fn kernel_mod(rows: usize, cols: usize, data: &[u128], p: u64, k: u32) -> Vec<Vec<u128>> {
    let s = snf(rows, cols, data, p, k);
    let m = (p as u128).pow(k);
    let mut out = Vec::new();
    for (i, &v) in s.diag.iter().enumerate() {
        if v == 0 {
            continue;
        }
        let mut w = vec![0u128; cols];
        w[i] = (p as u128).pow(k - v);
        apply_col_ops_vec(&s.col_ops, &mut w, m);
        out.push(w);
    }
    for i in s.diag.len()..cols {
        let mut w = vec![0u128; cols];
        w[i] = 1;
        apply_col_ops_vec(&s.col_ops, &mut w, m);
        out.push(w);
    }
    out
}

/// Inverse of a square matrix mod p^k; None when the determinant is not a
/// unit. Gauss–Jordan with unit pivots.
pub fn mat_inv_mod(n: usize, data: &[u128], p: u64, k: u32) -> Option<Vec<u128>> {
    let m = (p as u128).pow(k);
    let mut a = data.to_vec();
    let mut inv = vec![0u128; n * n];
    for i in 0..n {
        inv[i * n + i] = 1;
    }
    for col in 0..n {
        let pivot_row = (col..n).find(|&i| a[i * n + col] % (p as u128) != 0)?;
        if pivot_row != col {
            for j in 0..n {
                a.swap(col * n + j, pivot_row * n + j);
                inv.swap(col * n + j, pivot_row * n + j);
            }
        }
        let pinv = inv_mod_u128(a[col * n + col], m);
        for j in 0..n {
            a[col * n + j] = mulmod(a[col * n + j], pinv, m);
            inv[col * n + j] = mulmod(inv[col * n + j], pinv, m);
        }
        for i in 0..n {
            if i == col {
                continue;
            }
            let f = a[i * n + col];
            if f == 0 {
                continue;
            }
            let nf = submod(0, f, m);
            for j in 0..n {
                a[i * n + j] = addmod(a[i * n + j], mulmod(nf, a[col * n + j], m), m);
                inv[i * n + j] = addmod(inv[i * n + j], mulmod(nf, inv[col * n + j], m), m);
            }
        }
    }
    Some(inv)
}

/// Matrix product mod m (row-major; a is ra×ca, b is ca×cb).
pub fn mat_mul_mod(
    ra: usize,
    ca: usize,
    cb: usize,
    a: &[u128],
    b: &[u128],
    m: u128,
) -> Vec<u128> {
    let mut out = vec![0u128; ra * cb];
    for i in 0..ra {
        for l in 0..ca {
            let al = a[i * ca + l];
            if al == 0 {
                continue;
            }
            for j in 0..cb {
                let bl = b[l * cb + j];
                if bl == 0 {
                    continue;
                }
                out[i * cb + j] = addmod(out[i * cb + j], mulmod(al, bl, m), m);
            }
        }
    }
    out
}

/// Diagonal valuations of the cokernel of A as a map into (Z/p^k)^rows,
/// padded with k for missing pivots (free directions in the target).
pub fn cokernel_vals(rows: usize, cols: usize, data: &[u128], p: u64, k: u32) -> Vec<u32> {
    let s = snf(rows, cols, data, p, k);
    let mut vals = s.diag.clone();
    vals.resize(rows, k);
    vals
}

pub fn certify_vals(vals: &[u32], m: u32, k: u32) -> Result<()> {
    // With k ≥ 2m, valuations below m are exact and k means genuinely
    // "zero at doubled precision"; the band in between is ambiguous.
    for &v in vals {
        if v >= m && v < k {
            return Err(Error::PrecisionExhausted { cap: m });
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const P: u64 = 5;

    fn dense_apply(s: &Snf, rows: usize, cols: usize, data: &[u128], m: u128) -> Vec<u128> {
        // Apply row ops to whole matrix, then col ops.
        let mut a = data.to_vec();
        for op in &s.row_ops {
            match *op {
                ElemOp::Swap(i, j) => {
                    for c in 0..cols {
                        a.swap(i * cols + c, j * cols + c);
                    }
                }
                ElemOp::AddMul { src, dst, f } => {
                    for c in 0..cols {
                        let t = mulmod(f, a[src * cols + c], m);
                        a[dst * cols + c] = addmod(a[dst * cols + c], t, m);
                    }
                }
                ElemOp::Scale { idx, u } => {
                    for c in 0..cols {
                        a[idx * cols + c] = mulmod(a[idx * cols + c], u, m);
                    }
                }
            }
        }
        for op in &s.col_ops {
            match *op {
                ElemOp::Swap(i, j) => {
                    for r in 0..rows {
                        a.swap(r * cols + i, r * cols + j);
                    }
                }
                ElemOp::AddMul { src, dst, f } => {
                    for r in 0..rows {
                        let t = mulmod(f, a[r * cols + src], m);
                        a[r * cols + dst] = addmod(a[r * cols + dst], t, m);
                    }
                }
                ElemOp::Scale { idx, u } => {
                    for r in 0..rows {
                        a[r * cols + idx] = mulmod(a[r * cols + idx], u, m);
                    }
                }
            }
        }
        a
    }

    #[test]
    fn snf_diagonalizes_and_oplogs_reconstruct() {
        let k = 8;
        let m = (P as u128).pow(k);
        let data: Vec<u128> = vec![
            10, 25, 5, //
            15, 7, 125, //
            0, 50, 625,
        ];
        let s = snf(3, 3, &data, P, k);
        let d = dense_apply(&s, 3, 3, &data, m);
        for i in 0..3 {
            for j in 0..3 {
                if i == j {
                    assert_eq!(d[i * 3 + j], (P as u128).pow(s.diag[i]));
                } else {
                    assert_eq!(d[i * 3 + j], 0, "off-diagonal at ({i},{j})");
                }
            }
        }
        // One unit pivot (the 7), everything else divisible by 5.
        assert_eq!(s.diag[0], 0);
        // Row-op logs invert correctly.
        let mut x = vec![3u128, 141, 59];
        let orig = x.clone();
        apply_row_ops(&s.row_ops, &mut x, m);
        apply_row_ops_inv(&s.row_ops, &mut x, m);
        assert_eq!(x, orig);
    }

    #[test]
    fn kernel_vectors_annihilate() {
        let k = 6;
        let m = (P as u128).pow(k);
        let data: Vec<u128> = vec![
            5, 0, 10, //
            0, 25, 0,
        ];
        let ker = kernel_mod(2, 3, &data, P, k);
        assert!(!ker.is_empty());
        for w in &ker {
            for i in 0..2 {
                let mut acc = 0u128;
                for j in 0..3 {
                    acc = addmod(acc, mulmod(data[i * 3 + j] % m, w[j] % m, m), m);
                }
                assert_eq!(acc, 0);
            }
        }
    }

    #[test]
    fn subgroup_sizes() {
        // Z/25 ⊕ Z/5, subgroup generated by (5,0): order 5.
        assert_eq!(
            subgroup_size(&[vec![5, 0]], &[2, 1], P),
            BigUint::from(5u32)
        );
        // (1,0) and (0,1) generate everything: 125.
        assert_eq!(
            subgroup_size(&[vec![1, 0], vec![0, 1]], &[2, 1], P),
            BigUint::from(125u32)
        );
        // Empty generating set.
        assert_eq!(subgroup_size(&[], &[3, 1], P), BigUint::one());
        // Diagonal embedding of Z/5 in Z/5 ⊕ Z/5.
        assert_eq!(
            subgroup_size(&[vec![1, 1]], &[1, 1], P),
            BigUint::from(5u32)
        );
    }

    #[test]
    fn inverse_roundtrip() {
        let k = 10;
        let m = (P as u128).pow(k);
        let a: Vec<u128> = vec![1, 5, 0, 3, 1, 10, 5, 0, 2];
        let inv = mat_inv_mod(3, &a, P, k).unwrap();
        let prod = mat_mul_mod(3, 3, 3, &a, &inv, m);
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(prod[i * 3 + j], u128::from(i == j));
            }
        }
        // Non-invertible: zero determinant mod 5.
        let b: Vec<u128> = vec![5, 0, 0, 0, 1, 0, 0, 0, 1];
        assert!(mat_inv_mod(3, &b, P, k).is_none());
    }

    #[test]
    fn mulmod_large_modulus() {
        // Modulus above 2^63 exercises the chunked path.
        let m = (7u128).pow(32);
        let a = m - 12345;
        let b = m - 98765;
        // (m-x)(m-y) ≡ xy mod m.
        assert_eq!(mulmod(a, b, m), 12345u128 * 98765 % m);
        assert_eq!(mulmod(inv_mod_u128(a, m), a, m), 1);
    }
}
