//! Compressed-sparse-row matrices and a Jacobi-preconditioned BiCGSTAB
//! solver for the Newton linear systems. The matrices here are small
//! (one row per interior grid node) and very sparse (<= 3^m entries/row).

use crate::exec::{self, ExecMode};

#[derive(Clone, Debug)]
pub struct Csr {
    pub nrows: usize,
    pub ncols: usize,
    pub row_ptr: Vec<usize>,
    pub col_idx: Vec<usize>,
    pub values: Vec<f64>,
}

impl Csr {
    /// Build from per-row (column, value) lists; duplicate columns summed.
    pub fn from_rows(ncols: usize, rows: Vec<Vec<(usize, f64)>>) -> Csr {
        let nrows = rows.len();
        let mut row_ptr = Vec::with_capacity(nrows + 1);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        row_ptr.push(0);
        for mut row in rows {
            row.sort_by_key(|&(c, _)| c);
            let mut merged: Vec<(usize, f64)> = Vec::with_capacity(row.len());
            for (c, v) in row {
                match merged.last_mut() {
                    Some((lc, lv)) if *lc == c => *lv += v,
                    _ => merged.push((c, v)),
                }
            }
            for (c, v) in merged {
                col_idx.push(c);
                values.push(v);
            }
            row_ptr.push(col_idx.len());
        }
        Csr {
            nrows,
            ncols,
            row_ptr,
            col_idx,
            values,
        }
    }

    pub fn matvec(&self, x: &[f64], out: &mut [f64], mode: ExecMode) {
        debug_assert_eq!(x.len(), self.ncols);
        debug_assert_eq!(out.len(), self.nrows);
        exec::fill_indexed(mode, out, |i| {
            let mut s = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                s += self.values[k] * x[self.col_idx[k]];
            }
            s
        });
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.nrows)
            .map(|i| {
                (self.row_ptr[i]..self.row_ptr[i + 1])
                    .find(|&k| self.col_idx[k] == i)
                    .map(|k| self.values[k])
                    .unwrap_or(0.0)
            })
            .collect()
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub struct LinearSolve {
    pub x: Vec<f64>,
    pub iterations: usize,
    pub residual: f64,
    pub converged: bool,
}

/// BiCGSTAB with Jacobi (diagonal) preconditioning. Stops when the
/// preconditioned residual 2-norm drops below `rtol * ||b||` or after
/// `max_iter` iterations.
pub fn bicgstab(a: &Csr, b: &[f64], x0: &[f64], rtol: f64, max_iter: usize, mode: ExecMode) -> LinearSolve {
    let n = b.len();
    let diag = a.diagonal();
    let inv_diag: Vec<f64> = diag
        .iter()
        .map(|&d| if d.abs() > f64::MIN_POSITIVE { 1.0 / d } else { 1.0 })
        .collect();
    let precond = |v: &[f64]| -> Vec<f64> {
        v.iter().zip(&inv_diag).map(|(x, d)| x * d).collect()
    };

    let mut x = x0.to_vec();
    let mut ax = vec![0.0; n];
    a.matvec(&x, &mut ax, mode);
    let mut r: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
    let bnorm = norm2(b).max(f64::MIN_POSITIVE);
    let r0 = r.clone();
    let mut rho = 1.0;
    let mut alpha = 1.0;
    let mut omega = 1.0;
    let mut v = vec![0.0; n];
    let mut p = vec![0.0; n];
    let mut resid = norm2(&r);
    let mut iterations = 0;

    for it in 0..max_iter {
        if resid / bnorm < rtol {
            break;
        }
        iterations = it + 1;
        let rho_new = dot(&r0, &r);
        if rho_new.abs() < 1e-300 {
            break;
        }
        let beta = (rho_new / rho) * (alpha / omega);
        rho = rho_new;
        for i in 0..n {
            p[i] = r[i] + beta * (p[i] - omega * v[i]);
        }
        let ph = precond(&p);
        a.matvec(&ph, &mut v, mode);
        let denom = dot(&r0, &v);
        if denom.abs() < 1e-300 {
            break;
        }
        alpha = rho / denom;
        let s: Vec<f64> = r.iter().zip(&v).map(|(ri, vi)| ri - alpha * vi).collect();
        if norm2(&s) / bnorm < rtol {
            for i in 0..n {
                x[i] += alpha * ph[i];
            }
            break;
        }
        let sh = precond(&s);
        let mut t = vec![0.0; n];
        a.matvec(&sh, &mut t, mode);
        let tt = dot(&t, &t);
        omega = if tt > 0.0 { dot(&t, &s) / tt } else { 0.0 };
        for i in 0..n {
            x[i] += alpha * ph[i] + omega * sh[i];
        }
        r = s.iter().zip(&t).map(|(si, ti)| si - omega * ti).collect();
        resid = norm2(&r);
        if omega.abs() < 1e-300 {
            break;
        }
    }
    // True (unpreconditioned) residual for reporting.
    a.matvec(&x, &mut ax, mode);
    let rtrue: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
    let residual = norm2(&rtrue);
    LinearSolve {
        x,
        iterations,
        residual,
        converged: residual / bnorm < rtol * 10.0,
    }
}

/// Dense solve for tiny systems (least-squares style pseudo-use is avoided;
/// callers only pass square nonsingular systems).
pub fn solve_dense(a: &mut [Vec<f64>], b: &mut [f64]) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| {
            a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap()
        })?;
        if a[pivot][col].abs() < 1e-14 {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        let p = a[col][col];
        for r in 0..n {
            if r != col && a[r][col] != 0.0 {
                let f = a[r][col] / p;
                for c in col..n {
                    a[r][c] -= f * a[col][c];
                }
                b[r] -= f * b[col];
            }
        }
    }
    Some((0..n).map(|i| b[i] / a[i][i]).collect())
}
