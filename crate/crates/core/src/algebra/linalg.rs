use super::{AlgebraError, Ring};

fn check_square<T>(m: &[Vec<T>]) -> usize {
    let n = m.len();
    assert!(m.iter().all(|r| r.len() == n), "matrix must be square");
    n
}

/// Determinant by fraction-free (Bareiss) elimination.
///
/// Pivots must be regular elements; when a column offers none (possible over
/// jets whose value part is singular) the division-free algorithm is used.
pub fn det<T: Ring>(m: &[Vec<T>]) -> T {
    let n = check_square(m);
    if n == 0 {
        return T::one();
    }
    let mut a: Vec<Vec<T>> = m.to_vec();
    let mut negative = false;
    let mut prev = T::one();
    for k in 0..n - 1 {
        let Some(p) = (k..n).find(|&i| a[i][k].is_regular()) else {
            if (k..n).all(|i| a[i][k].is_zero()) {
                return T::zero();
            }
            return det_division_free(m);
        };
        if p != k {
            a.swap(p, k);
            negative = !negative;
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let t = a[i][j].times(&a[k][k]).minus(&a[i][k].times(&a[k][j]));
                match t.exact_div(&prev) {
                    Some(q) => a[i][j] = q,
                    None => return det_division_free(m),
                }
            }
        }
        prev = a[k][k].clone();
    }
    let d = a[n - 1][n - 1].clone();
    if negative {
        d.negate()
    } else {
        d
    }
}

/// Division-free determinant (Samuelson–Berkowitz), valid over any
/// commutative ring.
pub fn det_division_free<T: Ring>(m: &[Vec<T>]) -> T {
    let n = check_square(m);
    if n == 0 {
        return T::one();
    }
    // char poly coefficients of the leading r×r block, highest degree first
    let mut c: Vec<T> = vec![T::one()];
    for r in 0..n {
        // Toeplitz column [1, -a, -R S, -R M S, ...] for the (r+1)×(r+1) block
        let mut t = vec![T::one(), m[r][r].negate()];
        let mut v: Vec<T> = (0..r).map(|i| m[i][r].clone()).collect();
        for _ in 0..r {
            let rs = (0..r).fold(T::zero(), |acc, j| acc.plus(&m[r][j].times(&v[j])));
            t.push(rs.negate());
            v = (0..r)
                .map(|i| (0..r).fold(T::zero(), |acc, j| acc.plus(&m[i][j].times(&v[j]))))
                .collect();
        }
        let mut next = Vec::with_capacity(r + 2);
        for i in 0..r + 2 {
            let mut acc = T::zero();
            for (j, cj) in c.iter().enumerate() {
                if i >= j && i - j < t.len() {
                    acc = acc.plus(&t[i - j].times(cj));
                }
            }
            next.push(acc);
        }
        c = next;
    }
    let d = c[n].clone();
    if n % 2 == 1 {
        d.negate()
    } else {
        d
    }
}

fn minor<T: Clone>(m: &[Vec<T>], row: usize, col: usize) -> Vec<Vec<T>> {
    m.iter()
        .enumerate()
        .filter(|(i, _)| *i != row)
        .map(|(_, r)| {
            r.iter()
                .enumerate()
                .filter(|(j, _)| *j != col)
                .map(|(_, x)| x.clone())
                .collect()
        })
        .collect()
}

/// Cofactors of the first column: `b_i = (-1)^i det(minor(i, 0))`.
///
/// `b` is orthogonal to every column but the first, and `b·col_0 = det`.
pub fn cofactor_column<T: Ring>(m: &[Vec<T>]) -> Vec<T> {
    let n = check_square(m);
    if n == 1 {
        return vec![T::one()];
    }
    (0..n)
        .map(|i| {
            let d = det(&minor(m, i, 0));
            if i % 2 == 1 {
                d.negate()
            } else {
                d
            }
        })
        .collect()
}

/// Determinant together with the first-column cofactor vector.
pub fn det_adjugate<T: Ring>(m: &[Vec<T>]) -> (T, Vec<T>) {
    let b = cofactor_column(m);
    let d = m
        .iter()
        .zip(&b)
        .fold(T::zero(), |acc, (row, bi)| acc.plus(&row[0].times(bi)));
    (d, b)
}

/// Solve `m·x = rhs` exactly. Elimination is fraction free; the final back
/// substitution divides by the pivots, so `T` should be a field.
pub fn ffge_solve<T: Ring>(m: &[Vec<T>], rhs: &[T]) -> Result<Vec<T>, AlgebraError> {
    let n = check_square(m);
    if rhs.len() != n {
        return Err(AlgebraError::Dimension(format!("{} rows but {} right-hand sides", n, rhs.len())));
    }
    let mut a: Vec<Vec<T>> = m
        .iter()
        .zip(rhs)
        .map(|(r, b)| {
            let mut r = r.clone();
            r.push(b.clone());
            r
        })
        .collect();
    let mut prev = T::one();
    for k in 0..n {
        let p = (k..n).find(|&i| a[i][k].is_regular()).ok_or(AlgebraError::Singular)?;
        a.swap(p, k);
        for i in k + 1..n {
            for j in k + 1..=n {
                let t = a[i][j].times(&a[k][k]).minus(&a[i][k].times(&a[k][j]));
                a[i][j] = t.exact_div(&prev).ok_or(AlgebraError::Inexact)?;
            }
            a[i][k] = T::zero();
        }
        prev = a[k][k].clone();
    }
    let mut x = vec![T::zero(); n];
    for i in (0..n).rev() {
        let mut s = a[i][n].clone();
        for j in i + 1..n {
            s = s.minus(&a[i][j].times(&x[j]));
        }
        x[i] = s.exact_div(&a[i][i]).ok_or(AlgebraError::Inexact)?;
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{rat, Jet, LaurentE, Rat, RatFuncE};

    fn r(p: i64) -> Rat {
        rat(p, 1)
    }

    #[test]
    fn two_by_two() {
        let m = vec![vec![r(1), r(2)], vec![r(3), r(4)]];
        assert_eq!(det(&m), r(-2));
        assert_eq!(det_division_free(&m), r(-2));
        let (d, b) = det_adjugate(&m);
        assert_eq!(d, r(-2));
        assert_eq!(b, vec![r(4), r(-2)]);
    }

    #[test]
    fn singular_has_adjugate() {
        let m = vec![vec![r(1), r(2)], vec![r(2), r(4)]];
        let (d, b) = det_adjugate(&m);
        assert_eq!(d, r(0));
        assert_eq!(b, vec![r(4), r(-2)]);
    }

    #[test]
    fn solve_with_e() {
        let m = vec![vec![RatFuncE::from(LaurentE::e())]];
        let two_e_minus_one = LaurentE::from_terms([(1, r(2)), (0, r(-1))]);
        let x = ffge_solve(&m, &[RatFuncE::from(two_e_minus_one)]).unwrap();
        let want = LaurentE::from_terms([(0, r(2)), (-1, r(-1))]);
        assert_eq!(x[0].laurent_normalize().unwrap(), want);
    }

    #[test]
    fn jet_det_falls_back_when_value_singular() {
        // value part rank one: [[1,1],[1,1]] + ε [[0,0],[0,1]]
        let j = |v: i64, d: i64| Jet::new(r(v), r(d));
        let m = vec![vec![j(1, 0), j(1, 0)], vec![j(1, 0), j(1, 1)]];
        assert_eq!(det(&m), j(0, 1));
        let m2 = vec![vec![j(0, 1), j(1, 0)], vec![j(1, 0), j(0, 0)]];
        assert_eq!(det(&m2), j(-1, 0));
    }
}
