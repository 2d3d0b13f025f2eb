//! Best uniform polynomial approximation on a finite point set.
//!
//! Remez single-point exchange: each step solves the levelled-error system on
//! a reference of `degree + 2` points and swaps in the point of largest error
//! while keeping sign alternation. On a finite set this terminates at the
//! discrete minimax solution.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

const MAX_EXCHANGES: usize = 500;

/// Minimax polynomial of bounded degree on a sorted point set.
#[derive(Clone, Debug, PartialEq)]
pub struct DiscreteMinimax {
    pub degree: usize,
    pub points: Vec<f64>,
    /// Polynomial values at `points`.
    pub values: Vec<f64>,
    /// `max_i |values[i] - target[i]|`.
    pub error: f64,
    /// Chebyshev coefficients on the interval spanned by `points`.
    cheb: Vec<f64>,
    lo: f64,
    hi: f64,
}

impl DiscreteMinimax {
    /// Evaluates the polynomial anywhere.
    pub fn eval(&self, x: f64) -> f64 {
        let t = to_unit(x, self.lo, self.hi);
        chebyshev_row(t, self.cheb.len()).iter().zip(&self.cheb).map(|(a, b)| a * b).sum()
    }
}

fn to_unit(x: f64, lo: f64, hi: f64) -> f64 {
    if hi > lo {
        2.0 * (x - lo) / (hi - lo) - 1.0
    } else {
        0.0
    }
}

fn chebyshev_row(t: f64, len: usize) -> Vec<f64> {
    let mut row = Vec::with_capacity(len);
    for j in 0..len {
        row.push(match j {
            0 => 1.0,
            1 => t,
            _ => 2.0 * t * row[j - 1] - row[j - 2],
        });
    }
    row
}

/// Degree-`degree` polynomial minimizing `max_i |p(points[i]) - target[i]|`.
///
/// Points must be strictly increasing. When `degree + 1 >= points.len()` the
/// polynomial interpolates exactly.
pub fn discrete_minimax(points: &[f64], target: &[f64], degree: usize) -> Result<DiscreteMinimax> {
    let n = points.len();
    if n == 0 || target.len() != n {
        return Err(Error::arg("points and targets must be non-empty and of equal length"));
    }
    if points.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::arg("points must be strictly increasing"));
    }
    let (lo, hi) = (points[0], points[n - 1]);
    let t: Vec<f64> = points.iter().map(|&x| to_unit(x, lo, hi)).collect();

    if degree + 1 >= n {
        // Interpolate with the lowest sufficient degree.
        let basis = DMatrix::from_fn(n, n, |i, j| chebyshev_row(t[i], n)[j]);
        let rhs = DVector::from_column_slice(target);
        let c = basis
            .lu()
            .solve(&rhs)
            .ok_or_else(|| Error::arg("interpolation system is singular"))?;
        return Ok(finish(degree, points, target, c.iter().copied().collect(), lo, hi));
    }

    let k = degree + 2;
    let mut reference: Vec<usize> = (0..k).map(|i| (i * (n - 1) + (k - 1) / 2) / (k - 1)).collect();
    reference.dedup();
    debug_assert_eq!(reference.len(), k);

    let mut best: Option<(Vec<f64>, f64)> = None;
    for _ in 0..MAX_EXCHANGES {
        let (coef, h) = solve_reference(&t, target, &reference, degree)?;
        let err: Vec<f64> = (0..n)
            .map(|i| target[i] - dot(&chebyshev_row(t[i], degree + 1), &coef))
            .collect();
        let (imax, emax) = err
            .iter()
            .enumerate()
            .map(|(i, e)| (i, e.abs()))
            .fold((0, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        if best.as_ref().is_none_or(|(_, e)| emax < *e) {
            best = Some((coef.clone(), emax));
        }
        if emax <= h.abs() * (1.0 + 1e-12) + 1e-14 || reference.contains(&imax) {
            break;
        }
        exchange(&mut reference, &err, imax);
    }
    let (coef, _) = best.expect("at least one iteration");
    Ok(finish(degree, points, target, coef, lo, hi))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Solves `sum_j c_j T_j(t_r) + (-1)^r h = f_r` on the reference.
fn solve_reference(t: &[f64], f: &[f64], reference: &[usize], degree: usize) -> Result<(Vec<f64>, f64)> {
    let k = reference.len();
    let a = DMatrix::from_fn(k, k, |r, j| {
        if j <= degree {
            chebyshev_row(t[reference[r]], degree + 1)[j]
        } else if r % 2 == 0 {
            1.0
        } else {
            -1.0
        }
    });
    let rhs = DVector::from_iterator(k, reference.iter().map(|&i| f[i]));
    let sol = a
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::arg("reference system is singular"))?;
    Ok((sol.iter().take(degree + 1).copied().collect(), sol[degree + 1]))
}

/// Inserts `imax` into the reference keeping alternation of error signs.
fn exchange(reference: &mut Vec<usize>, err: &[f64], imax: usize) {
    let s = err[imax].signum();
    let same = |i: usize| err[i].signum() == s;
    let last = reference.len() - 1;
    if imax < reference[0] {
        if same(reference[0]) {
            reference[0] = imax;
        } else {
            reference.pop();
            reference.insert(0, imax);
        }
    } else if imax > reference[last] {
        if same(reference[last]) {
            reference[last] = imax;
        } else {
            reference.remove(0);
            reference.push(imax);
        }
    } else {
        let j = reference.iter().position(|&r| r > imax).expect("inside the reference") - 1;
        if same(reference[j]) {
            reference[j] = imax;
        } else {
            reference[j + 1] = imax;
        }
    }
}

fn finish(degree: usize, points: &[f64], target: &[f64], cheb: Vec<f64>, lo: f64, hi: f64) -> DiscreteMinimax {
    let mut p = DiscreteMinimax {
        degree,
        points: points.to_vec(),
        values: Vec::new(),
        error: 0.0,
        cheb,
        lo,
        hi,
    };
    p.values = points.iter().map(|&x| p.eval(x)).collect();
    p.error = p
        .values
        .iter()
        .zip(target)
        .map(|(v, f)| (v - f).abs())
        .fold(0.0, f64::max);
    p
}
