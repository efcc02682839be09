//! Small dense matrices over a coefficient ring.

use crate::error::{Error, Result};
use crate::series::{Coeff, Ring, EXACT};

pub type Matrix<E> = Vec<Vec<E>>;

pub fn zero<E: Coeff>(p: u64, ring: Ring, r: usize) -> Matrix<E> {
    vec![vec![E::zero_in(p, ring); r]; r]
}

pub fn identity<E: Coeff>(p: u64, ring: Ring, r: usize) -> Matrix<E> {
    let mut m = zero::<E>(p, ring, r);
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = row[i].one_like();
    }
    m
}

pub fn diagonal<E: Coeff>(p: u64, ring: Ring, d: &[E]) -> Matrix<E> {
    let mut m = zero::<E>(p, ring, d.len());
    for (i, x) in d.iter().enumerate() {
        m[i][i] = x.clone();
    }
    m
}

/// Zero with no precision loss; products with it can be skipped.
fn exact_zero<E: Coeff>(x: &E) -> bool {
    x.is_zero() && x.precision() >= EXACT
}

pub fn mul<E: Coeff>(a: &Matrix<E>, b: &Matrix<E>) -> Matrix<E> {
    let r = a.len();
    let c = b.first().map_or(0, |row| row.len());
    let mut out = Vec::with_capacity(r);
    for row in a {
        let mut out_row = Vec::with_capacity(c);
        for j in 0..c {
            let mut acc = b[0][j].zero_like();
            for (k, x) in row.iter().enumerate() {
                if !exact_zero(x) && !exact_zero(&b[k][j]) {
                    acc = acc.add(&x.mul(&b[k][j]));
                }
            }
            out_row.push(acc);
        }
        out.push(out_row);
    }
    out
}

pub fn add<E: Coeff>(a: &Matrix<E>, b: &Matrix<E>) -> Matrix<E> {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.iter().zip(y).map(|(u, v)| u.add(v)).collect())
        .collect()
}

pub fn sub<E: Coeff>(a: &Matrix<E>, b: &Matrix<E>) -> Matrix<E> {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.iter().zip(y).map(|(u, v)| u.sub(v)).collect())
        .collect()
}

pub fn map<E: Coeff, F: Fn(&E) -> Result<E>>(a: &Matrix<E>, f: F) -> Result<Matrix<E>> {
    a.iter().map(|row| row.iter().map(&f).collect()).collect()
}

pub fn transpose<E: Coeff>(a: &Matrix<E>) -> Matrix<E> {
    let r = a.len();
    (0..r).map(|i| (0..r).map(|j| a[j][i].clone()).collect()).collect()
}

pub fn scale_exponents<E: Coeff>(a: &Matrix<E>, q: i64) -> Result<Matrix<E>> {
    map(a, |x| x.scale_exponents(q))
}

pub fn is_upper<E: Coeff>(a: &Matrix<E>) -> bool {
    a.iter()
        .enumerate()
        .all(|(i, row)| row.iter().take(i).all(|x| x.is_zero()))
}

pub fn is_diagonal<E: Coeff>(a: &Matrix<E>) -> bool {
    a.iter()
        .enumerate()
        .all(|(i, row)| row.iter().enumerate().all(|(j, x)| i == j || x.is_zero()))
}

pub fn is_identity<E: Coeff>(a: &Matrix<E>) -> bool {
    is_diagonal(a) && a.iter().enumerate().all(|(i, row)| row[i] == row[i].one_like())
}

pub fn agrees<E: Coeff>(a: &Matrix<E>, b: &Matrix<E>) -> bool {
    a.len() == b.len()
        && a.iter().zip(b).all(|(x, y)| {
            x.len() == y.len() && x.iter().zip(y).all(|(u, v)| u.agrees(v))
        })
}

/// Kronecker product.
pub fn kronecker<E: Coeff>(a: &Matrix<E>, b: &Matrix<E>) -> Matrix<E> {
    let (ra, rb) = (a.len(), b.len());
    let mut out = Vec::with_capacity(ra * rb);
    for i in 0..ra {
        for k in 0..rb {
            let mut row = Vec::with_capacity(ra * rb);
            for j in 0..ra {
                for l in 0..rb {
                    row.push(a[i][j].mul(&b[k][l]));
                }
            }
            out.push(row);
        }
    }
    out
}

/// Block-diagonal sum.
pub fn block_sum<E: Coeff>(p: u64, ring: Ring, a: &Matrix<E>, b: &Matrix<E>) -> Matrix<E> {
    let (ra, rb) = (a.len(), b.len());
    let mut out = zero::<E>(p, ring, ra + rb);
    for i in 0..ra {
        for j in 0..ra {
            out[i][j] = a[i][j].clone();
        }
    }
    for i in 0..rb {
        for j in 0..rb {
            out[ra + i][ra + j] = b[i][j].clone();
        }
    }
    out
}

/// Conjugation by the order-reversing permutation.
pub fn reverse<E: Coeff>(a: &Matrix<E>) -> Matrix<E> {
    let r = a.len();
    (0..r)
        .map(|i| (0..r).map(|j| a[r - 1 - i][r - 1 - j].clone()).collect())
        .collect()
}

fn minor<E: Coeff>(a: &Matrix<E>, skip_row: usize, skip_col: usize) -> Matrix<E> {
    a.iter()
        .enumerate()
        .filter(|(i, _)| *i != skip_row)
        .map(|(_, row)| {
            row.iter()
                .enumerate()
                .filter(|(j, _)| *j != skip_col)
                .map(|(_, x)| x.clone())
                .collect()
        })
        .collect()
}

pub fn det<E: Coeff>(a: &Matrix<E>) -> E {
    let r = a.len();
    if r == 1 {
        return a[0][0].clone();
    }
    if is_upper(a) {
        let mut d = a[0][0].one_like();
        for (i, row) in a.iter().enumerate() {
            d = d.mul(&row[i]);
        }
        return d;
    }
    let mut acc = a[0][0].zero_like();
    for j in 0..r {
        if exact_zero(&a[0][j]) {
            continue;
        }
        let term = a[0][j].mul(&det(&minor(a, 0, j)));
        acc = if j % 2 == 0 { acc.add(&term) } else { acc.sub(&term) };
    }
    acc
}

pub(crate) fn unit_inverse<E: Coeff>(x: &E, work: i64) -> Result<E> {
    match x.inverse() {
        Err(Error::PrecisionInsufficient(_)) if x.precision() > work => {
            x.truncated(work).inverse()
        }
        other => other,
    }
}

/// Inverse; exact non-monomial units of a local ring are first truncated to
/// the working precision `work`.
pub fn inverse<E: Coeff>(a: &Matrix<E>, work: i64) -> Result<Matrix<E>> {
    let r = a.len();
    if is_upper(a) {
        let mut d_inv = Vec::with_capacity(r);
        for (i, row) in a.iter().enumerate() {
            d_inv.push(unit_inverse(&row[i], work)?);
        }
        let mut out: Matrix<E> = (0..r)
            .map(|_| (0..r).map(|_| a[0][0].zero_like()).collect())
            .collect();
        for j in 0..r {
            out[j][j] = d_inv[j].clone();
            for i in (0..j).rev() {
                let mut acc = a[0][0].zero_like();
                for k in i + 1..=j {
                    if !exact_zero(&a[i][k]) && !exact_zero(&out[k][j]) {
                        acc = acc.add(&a[i][k].mul(&out[k][j]));
                    }
                }
                out[i][j] = d_inv[i].mul(&acc).neg();
            }
        }
        return Ok(out);
    }
    let d_inv = unit_inverse(&det(a), work)?;
    let mut out = Vec::with_capacity(r);
    for i in 0..r {
        let mut row = Vec::with_capacity(r);
        for j in 0..r {
            let c = det(&minor(a, j, i)).mul(&d_inv);
            row.push(if (i + j) % 2 == 0 { c } else { c.neg() });
        }
        out.push(row);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::LaurentPoly;

    fn m(p: u64, rows: &[&[(i64, i64)]], r: usize) -> Matrix<LaurentPoly> {
        let mut out = zero(p, Ring::Gm, r);
        for (k, t) in rows.iter().enumerate() {
            out[k / r][k % r] = LaurentPoly::from_terms(p, t.iter().copied());
        }
        out
    }

    #[test]
    fn inverse_round_trip() {
        let a = m(3, &[&[(1, 1)], &[(0, 1), (2, 1)], &[], &[(-3, 2)]], 2);
        let inv = inverse(&a, 0).unwrap();
        assert!(is_identity(&mul(&a, &inv)));
        let g = m(5, &[&[(0, 1)], &[(1, 1)], &[(-1, 1)], &[(0, 2)]], 2);
        let inv = inverse(&g, 0).unwrap();
        assert!(is_identity(&mul(&inv, &g)));
    }

    #[test]
    fn kronecker_of_identities() {
        let a: Matrix<LaurentPoly> = identity(3, Ring::Gm, 2);
        let b: Matrix<LaurentPoly> = identity(3, Ring::Gm, 3);
        assert!(is_identity(&kronecker(&a, &b)));
    }
}
