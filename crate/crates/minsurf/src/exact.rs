//! Exact rational linear algebra underpinning the polytope and isometry layers.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

pub type Rat = BigRational;
/// A point of R^n with exact rational coordinates.
pub type ExactPoint = Vec<Rat>;

pub fn rat(n: i64) -> Rat {
    Rat::from_integer(BigInt::from(n))
}

pub fn ratio(num: i64, den: i64) -> Rat {
    Rat::new(BigInt::from(num), BigInt::from(den))
}

pub fn zeros(n: usize) -> ExactPoint {
    vec![Rat::zero(); n]
}

pub fn unit(n: usize, i: usize) -> ExactPoint {
    let mut v = zeros(n);
    v[i] = Rat::one();
    v
}

pub fn dot(a: &[Rat], b: &[Rat]) -> Rat {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn add(a: &[Rat], b: &[Rat]) -> ExactPoint {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

pub fn sub(a: &[Rat], b: &[Rat]) -> ExactPoint {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn scale(a: &[Rat], s: &Rat) -> ExactPoint {
    a.iter().map(|x| x * s).collect()
}

pub fn neg(a: &[Rat]) -> ExactPoint {
    a.iter().map(|x| -x).collect()
}

pub fn to_f64_vec(a: &[Rat]) -> Vec<f64> {
    a.iter().map(|x| x.to_f64().unwrap()).collect()
}

/// Solve A x = b by fraction-exact Gaussian elimination.
/// Returns `None` when the system is singular.
pub fn solve_linear(a: &[Vec<Rat>], b: &[Rat]) -> Option<ExactPoint> {
    let n = a.len();
    debug_assert!(a.iter().all(|row| row.len() == n));
    let mut m: Vec<Vec<Rat>> = a
        .iter()
        .zip(b)
        .map(|(row, rhs)| {
            let mut r = row.clone();
            r.push(rhs.clone());
            r
        })
        .collect();
    for col in 0..n {
        let pivot = (col..n).find(|&r| !m[r][col].is_zero())?;
        m.swap(col, pivot);
        let p = m[col][col].clone();
        for entry in m[col].iter_mut() {
            *entry = &*entry / &p;
        }
        for r in 0..n {
            if r != col && !m[r][col].is_zero() {
                let f = m[r][col].clone();
                for c in col..=n {
                    let delta = &f * &m[col][c];
                    m[r][c] = &m[r][c] - delta;
                }
            }
        }
    }
    Some(m.into_iter().map(|row| row[n].clone()).collect())
}

/// Row rank of a rational matrix.
pub fn rank(rows: &[Vec<Rat>]) -> usize {
    if rows.is_empty() {
        return 0;
    }
    let ncols = rows[0].len();
    let mut m: Vec<Vec<Rat>> = rows.to_vec();
    let mut rank = 0;
    for col in 0..ncols {
        let Some(pivot) = (rank..m.len()).find(|&r| !m[r][col].is_zero()) else {
            continue;
        };
        m.swap(rank, pivot);
        let p = m[rank][col].clone();
        for entry in m[rank].iter_mut() {
            *entry = &*entry / &p;
        }
        for r in 0..m.len() {
            if r != rank && !m[r][col].is_zero() {
                let f = m[r][col].clone();
                for c in col..ncols {
                    let delta = &f * &m[rank][c];
                    m[r][c] = &m[r][c] - delta;
                }
            }
        }
        rank += 1;
        if rank == m.len() {
            break;
        }
    }
    rank
}

/// Dimension of the affine hull of a point set (-1 for the empty set).
pub fn affine_rank(points: &[ExactPoint]) -> isize {
    match points.split_first() {
        None => -1,
        Some((p0, rest)) => {
            let diffs: Vec<Vec<Rat>> = rest.iter().map(|p| sub(p, p0)).collect();
            rank(&diffs) as isize
        }
    }
}

/// Basis of the null space of the matrix (rows are linear functionals).
pub fn null_space(rows: &[Vec<Rat>], ncols: usize) -> Vec<Vec<Rat>> {
    let mut m: Vec<Vec<Rat>> = rows.to_vec();
    let mut pivots: Vec<usize> = Vec::new();
    let mut rank = 0;
    for col in 0..ncols {
        let Some(pivot) = (rank..m.len()).find(|&r| !m[r][col].is_zero()) else {
            continue;
        };
        m.swap(rank, pivot);
        let p = m[rank][col].clone();
        for entry in m[rank].iter_mut() {
            *entry = &*entry / &p;
        }
        for r in 0..m.len() {
            if r != rank && !m[r][col].is_zero() {
                let f = m[r][col].clone();
                for c in 0..ncols {
                    let delta = &f * &m[rank][c];
                    m[r][c] = &m[r][c] - delta;
                }
            }
        }
        pivots.push(col);
        rank += 1;
        if rank == m.len() {
            break;
        }
    }
    let free: Vec<usize> = (0..ncols).filter(|c| !pivots.contains(c)).collect();
    free.iter()
        .map(|&fc| {
            let mut v = zeros(ncols);
            v[fc] = Rat::one();
            for (r, &pc) in pivots.iter().enumerate() {
                v[pc] = -m[r][fc].clone();
            }
            v
        })
        .collect()
}

/// Scale a rational vector to a primitive integer vector (canonical direction).
pub fn primitive(v: &[Rat]) -> Vec<Rat> {
    use num_integer::Integer;
    let mut lcm = BigInt::one();
    for x in v {
        lcm = lcm.lcm(x.denom());
    }
    let ints: Vec<BigInt> = v.iter().map(|x| x.numer() * &lcm / x.denom()).collect();
    let mut gcd = BigInt::zero();
    for x in &ints {
        gcd = gcd.gcd(x);
    }
    if gcd.is_zero() {
        return v.to_vec();
    }
    // Fix the sign: first nonzero entry positive.
    let sign = ints
        .iter()
        .find(|x| !x.is_zero())
        .map(|x| if x.is_negative() { -1 } else { 1 })
        .unwrap_or(1);
    ints.iter()
        .map(|x| Rat::from_integer(x / &gcd * sign))
        .collect()
}

pub fn lex_cmp(a: &[Rat], b: &[Rat]) -> std::cmp::Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.cmp(y) {
            std::cmp::Ordering::Equal => continue,
            ord => return ord,
        }
    }
    a.len().cmp(&b.len())
}

/// Gram-Schmidt without normalization: the output vectors are pairwise
/// orthogonal and rational; callers divide by the float norm when lifting
/// to an orthonormal frame.
pub fn gram_schmidt(vectors: &[Vec<Rat>]) -> Vec<Vec<Rat>> {
    let mut basis: Vec<Vec<Rat>> = Vec::new();
    for v in vectors {
        let mut w = v.clone();
        for b in &basis {
            let coef = dot(&w, b) / dot(b, b);
            let proj = scale(b, &coef);
            w = sub(&w, &proj);
        }
        if w.iter().any(|x| !x.is_zero()) {
            basis.push(w);
        }
    }
    basis
}
