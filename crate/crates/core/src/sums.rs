//! Harmonic sums and harmonic polylogarithms: index notations, the
//! quasi-shuffle and shuffle products, and exact numeric evaluation.
//!
//! Sums use the integer notation (nonzero indices, weight = sum of absolute
//! values) or the 0/±1 notation; polylogarithms always use 0/±1.

use std::collections::BTreeMap;

use num::{One, Zero};

use crate::term::{rat, Rat};

/// A linear combination of index vectors with integer coefficients.
pub type Combination = BTreeMap<Vec<i64>, i64>;

fn add_to(acc: &mut Combination, key: Vec<i64>, c: i64) {
    let e = acc.entry(key.clone()).or_insert(0);
    *e += c;
    if *e == 0 {
        acc.remove(&key);
    }
}

pub fn weight(v: &[i64]) -> i64 {
    v.iter().map(|m| m.abs()).sum()
}

/// 0/±1 notation to integer notation: each 0 raises the absolute value of
/// the first nonzero index to its right.
pub fn to_integer_notation(v: &[i64]) -> Result<Vec<i64>, String> {
    let mut out = Vec::new();
    let mut zeros = 0;
    for &m in v {
        match m {
            0 => zeros += 1,
            1 | -1 => {
                out.push(m * (zeros + 1));
                zeros = 0;
            }
            _ => return Err(format!("Index {m} is not in 0/1/-1 notation")),
        }
    }
    if zeros > 0 {
        return Err("Trailing zero index cannot be absorbed".to_string());
    }
    Ok(out)
}

pub fn to_binary_notation(v: &[i64]) -> Result<Vec<i64>, String> {
    let mut out = Vec::new();
    for &m in v {
        if m == 0 {
            return Err("Index 0 is not allowed in integer notation".to_string());
        }
        out.extend(std::iter::repeat_n(0, (m.abs() - 1) as usize));
        out.push(m.signum());
    }
    Ok(out)
}

fn wedge(a: i64, b: i64) -> i64 {
    a.signum() * b.signum() * (a.abs() + b.abs())
}

/// Quasi-shuffle product of two sums in integer notation.
pub fn stuffle(a: &[i64], b: &[i64]) -> Result<Combination, String> {
    if a.contains(&0) || b.contains(&0) {
        return Err("Index 0 is not allowed in integer notation".to_string());
    }
    fn rec(a: &[i64], b: &[i64], prefix: &mut Vec<i64>, c: i64, acc: &mut Combination) {
        let (Some((&a1, ra)), Some((&b1, rb))) = (a.split_first(), b.split_first()) else {
            let mut key = prefix.clone();
            key.extend_from_slice(a);
            key.extend_from_slice(b);
            add_to(acc, key, c);
            return;
        };
        for (head, x, y, sign) in [(a1, ra, b, 1), (b1, a, rb, 1), (wedge(a1, b1), ra, rb, -1)] {
            prefix.push(head);
            rec(x, y, prefix, c * sign, acc);
            prefix.pop();
        }
    }
    let mut acc = Combination::new();
    rec(a, b, &mut Vec::new(), 1, &mut acc);
    Ok(acc)
}

/// Shuffle product: all order-preserving interleavings, with multiplicity.
pub fn shuffle(a: &[i64], b: &[i64]) -> Combination {
    fn rec(a: &[i64], b: &[i64], prefix: &mut Vec<i64>, acc: &mut Combination) {
        if a.is_empty() || b.is_empty() {
            let mut key = prefix.clone();
            key.extend_from_slice(a);
            key.extend_from_slice(b);
            add_to(acc, key, 1);
            return;
        }
        prefix.push(a[0]);
        rec(&a[1..], b, prefix, acc);
        prefix.pop();
        prefix.push(b[0]);
        rec(a, &b[1..], prefix, acc);
        prefix.pop();
    }
    let mut acc = Combination::new();
    rec(a, b, &mut Vec::new(), &mut acc);
    acc
}

/// Exact value of the nested sum `S_v(n)`, with `(-1)^i` for negative indices.
pub fn eval_sum(v: &[i64], n: i64) -> Result<Rat, String> {
    if n <= 0 {
        return Err(format!("Harmonic sum argument must be positive, not {n}"));
    }
    if v.contains(&0) {
        return Err("Index 0 is not allowed in integer notation".to_string());
    }
    let n = n as usize;
    // inner[i] = S_{tail}(i)
    let mut inner: Vec<Rat> = vec![Rat::one(); n + 1];
    for &m in v.iter().rev() {
        let mut next = vec![Rat::zero(); n + 1];
        let mut acc = Rat::zero();
        for i in 1..=n {
            let mut term = inner[i].clone() / rat(i as i64).pow(m.abs() as i32);
            if m < 0 && i % 2 == 1 {
                term = -term;
            }
            acc += term;
            next[i] = acc.clone();
        }
        inner = next;
    }
    Ok(inner[n].clone())
}

fn series_mul(a: &[Rat], b: &[Rat], order: usize) -> Vec<Rat> {
    let mut out = vec![Rat::zero(); order + 1];
    for (i, x) in a.iter().enumerate().filter(|(_, x)| !x.is_zero()) {
        for (j, y) in b.iter().enumerate().take(order + 1 - i) {
            out[i + j] += x * y;
        }
    }
    out
}

/// Taylor coefficients of `H(v;x)` up to `x^order`, by iterated integration
/// from the rightmost index outwards.
pub fn hpl_series(v: &[i64], order: usize) -> Result<Vec<Rat>, String> {
    if v.last() == Some(&0) {
        return Err("Trailing zero index makes the series logarithmic".to_string());
    }
    let mut s = vec![Rat::zero(); order + 1];
    s[0] = Rat::one();
    for &m in v.iter().rev() {
        let integrand = match m {
            0 => {
                if !s[0].is_zero() {
                    return Err("Logarithmic integrand".to_string());
                }
                let mut d: Vec<Rat> = s[1..].to_vec();
                d.push(Rat::zero());
                d
            }
            1 | -1 => {
                let kernel: Vec<Rat> = (0..=order).map(|j| if m < 0 && j % 2 == 1 { -Rat::one() } else { Rat::one() }).collect();
                series_mul(&kernel, &s, order)
            }
            _ => return Err(format!("Index {m} is not in 0/1/-1 notation")),
        };
        let mut next = vec![Rat::zero(); order + 1];
        for k in 0..order {
            next[k + 1] = integrand[k].clone() / rat(k as i64 + 1);
        }
        s = next;
    }
    Ok(s)
}

/// Coefficient-wise product of two truncated series.
pub fn series_product(a: &[Rat], b: &[Rat]) -> Vec<Rat> {
    series_mul(a, b, a.len().min(b.len()).saturating_sub(1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::term::rat_frac;

    #[test]
    fn notation_conversion() {
        assert_eq!(to_integer_notation(&[0, 1, 0, 0, -1, 1]).unwrap(), vec![2, -3, 1]);
        assert_eq!(to_binary_notation(&[2, -3, 1]).unwrap(), vec![0, 1, 0, 0, -1, 1]);
        assert_eq!(to_integer_notation(&[1]).unwrap(), vec![1]);
        assert!(to_integer_notation(&[1, 0]).is_err());
    }

    #[test]
    fn paper_basis_product() {
        let got = stuffle(&[2, 3], &[-1, 2]).unwrap();
        let expect: Combination = [
            (vec![-3, 2, 3], -1),
            (vec![-3, 3, 2], -1),
            (vec![-3, 5], 1),
            (vec![-1, 2, 2, 3], 2),
            (vec![-1, 2, 3, 2], 1),
            (vec![-1, 2, 5], -1),
            (vec![-1, 4, 3], -1),
            (vec![2, -4, 2], -1),
            (vec![2, -1, 2, 3], 1),
            (vec![2, -1, 3, 2], 1),
            (vec![2, -1, 5], -1),
            (vec![2, 3, -1, 2], 1),
        ]
        .into_iter()
        .collect();
        assert_eq!(got, expect);
    }

    #[test]
    fn small_products() {
        let s11 = stuffle(&[1], &[1]).unwrap();
        assert_eq!(s11, [(vec![1, 1], 2), (vec![2], -1)].into_iter().collect());
        assert_eq!(stuffle(&[2, 3], &[]).unwrap(), [(vec![2, 3], 1)].into_iter().collect());
        assert_eq!(shuffle(&[0], &[0]), [(vec![0, 0], 2)].into_iter().collect());
        assert_eq!(shuffle(&[1], &[-1]), [(vec![1, -1], 1), (vec![-1, 1], 1)].into_iter().collect());
        let hb = shuffle(&[1, 0, 1], &[-1, 1, -1]);
        assert_eq!(hb.len(), 14);
        assert_eq!(hb.values().sum::<i64>(), 20);
    }

    #[test]
    fn sum_values() {
        assert_eq!(eval_sum(&[1], 3).unwrap(), rat_frac(11, 6));
        assert_eq!(eval_sum(&[-1], 2).unwrap(), rat_frac(-1, 2));
        assert!(eval_sum(&[1], 0).is_err());
    }

    #[test]
    fn log_series() {
        let h1 = hpl_series(&[1], 4).unwrap();
        assert_eq!(h1, vec![rat(0), rat(1), rat_frac(1, 2), rat_frac(1, 3), rat_frac(1, 4)]);
        let hm1 = hpl_series(&[-1], 3).unwrap();
        assert_eq!(hm1, vec![rat(0), rat(1), rat_frac(-1, 2), rat_frac(1, 3)]);
        let h01 = hpl_series(&[0, 1], 3).unwrap();
        assert_eq!(h01, vec![rat(0), rat(1), rat_frac(1, 4), rat_frac(1, 9)]);
    }
}
