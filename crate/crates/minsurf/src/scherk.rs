//! Scherk-type pieces: closed-form oracles for the classical surfaces, the
//! V-data slope c_k, and the exhaustion solve for the periodic tower graph
//! over growing slabs Q_b.

use std::f64::consts::PI;

use num_rational::BigRational;

use crate::catenoid::{half_catenoid_g, integrate_profile, normalize_to_unit_slab, waist_condition, Profile};
use crate::error::{Error, Result};
use crate::exact::Rat;
use crate::grid::{discretize_in_frame, Frame, Grid};
use crate::mse::{solve_mse, BoundaryData, GridFunction, SolveOptions};
use crate::polytope::{Halfspace, Polytope};

/// Height of Scherk's first (doubly periodic) surface: z = log cos x - log cos y.
pub fn scherk1_exact(x: f64, y: f64) -> Result<f64> {
    if x.abs() >= PI / 2.0 || y.abs() >= PI / 2.0 {
        return Err(Error::BadDomain);
    }
    Ok(x.cos().ln() - y.cos().ln())
}

/// Implicit function of Scherk's second surface (the saddle tower):
/// sin z - sinh x · sinh y, zero exactly on the surface.
pub fn scherk2_implicit(x: f64, y: f64, z: f64) -> f64 {
    z.sin() - x.sinh() * y.sinh()
}

/// Slope c_k of the V-shaped data h_k = c_k |x_1| whose two sheets open at
/// angle π/k: from cos θ = (c²-1)/(c²+1) with θ = π/k, c_k = cot(π/(2k)).
pub fn scherk_slope(k: usize) -> Result<f64> {
    if k < 2 {
        return Err(Error::BadSheetCount(k));
    }
    Ok(1.0 / (PI / (2.0 * k as f64)).tan())
}

/// Angle between the direction vectors (1, c) and (-1, c) of the two V
/// sheets; oracle for `scherk_slope`.
pub fn sheet_angle(c: f64) -> f64 {
    let dot = c * c - 1.0;
    let norm = 1.0 + c * c;
    (dot / norm).acos()
}

fn rat_from_f64(x: f64) -> Rat {
    BigRational::from_float(x).expect("finite float")
}

/// Truncated slab Q_b in R^(n-1): |x_1| <= b, 0 <= x_i <= a_i for i >= 2.
pub fn slab_domain(b: f64, sides: &[f64]) -> Result<Polytope> {
    let m = sides.len() + 1;
    let mut hs = Vec::new();
    let mut axis = |d: usize, lo: f64, hi: f64| {
        let mut n = crate::exact::zeros(m);
        n[d] = crate::exact::rat(1);
        hs.push(Halfspace::new(n.clone(), rat_from_f64(hi)));
        let neg = crate::exact::neg(&n);
        hs.push(Halfspace::new(neg, rat_from_f64(-lo)));
    };
    axis(0, -b, b);
    for (i, &a) in sides.iter().enumerate() {
        axis(i + 1, 0.0, a);
    }
    Polytope::from_hrep(m, &[], &hs)
}

/// Result of the exhaustion solve for the tower graph h̃_k.
pub struct Exhaustion {
    pub n: usize,
    pub k: usize,
    pub c_k: f64,
    pub sides: Vec<f64>,
    /// Catenoid waist used for the barrier.
    pub waist: f64,
    pub profile: Profile,
    /// Solution on Q_1 (the first stage).
    pub first: GridFunction,
    /// Solution on the final Q_b.
    pub last: GridFunction,
    pub final_b: f64,
    /// Sup-change on the Q_1 window per doubling.
    pub sup_changes: Vec<f64>,
    /// Minimum of (new - old) over common nodes across all doublings
    /// (monotone exhaustion makes this nonnegative up to solver noise).
    pub min_increment: f64,
    /// Minimum of (g + c_k - h̃) over Q_1 nodes across all stages.
    pub barrier_margin: f64,
}

/// Solve the tower Dirichlet problems on Q_b for b = 1, 2, 4, ... with data
/// h_k = c_k |x_1| until the solution stabilizes on Q_1, enforcing the
/// monotone-exhaustion and catenoid-barrier properties along the way.
pub fn exhaust_limit(k: usize, sides: &[f64], h: f64, tol: f64) -> Result<Exhaustion> {
    let n = sides.len() + 2; // ambient dimension of the surface
    crate::polytope::check_dim(n)?;
    let c_k = scherk_slope(k)?;

    // Catenoid barrier: unit waist for n = 3 (infinite slab), otherwise the
    // profile normalized to the unit slab.
    let profile = integrate_profile(n, 1.0, 1e-3)?;
    let profile = if n == 3 {
        profile
    } else {
        normalize_to_unit_slab(&profile)?
    };
    let a = profile.waist;
    let (ok, bound) = waist_condition(a, sides, n);
    if !ok {
        let side = sides.iter().cloned().fold(0.0f64, f64::max);
        return Err(Error::WaistCondition { side, bound });
    }

    let data = BoundaryData::from_fn(move |w: &[f64]| c_k * w[0].abs());
    let m = n - 1;
    let frame = Frame::standard(m);
    let opts = SolveOptions::default();

    let solve_b = |b: f64| -> Result<GridFunction> {
        let domain = slab_domain(b, sides)?;
        let grid: Grid = discretize_in_frame(&domain, frame.clone(), h)?;
        solve_mse(&grid, &data, &opts)
    };

    let mut b = 1.0f64;
    let first = solve_b(b)?;
    let window_nodes: Vec<(Vec<i64>, Vec<f64>)> = first
        .grid
        .node_of_unknown
        .iter()
        .map(|&node| (first.grid.node_coords(node), first.grid.world[node].clone()))
        .collect();

    let mut prev = first.clone();
    let mut sup_changes = Vec::new();
    let mut min_increment = f64::INFINITY;
    let mut barrier_margin = f64::INFINITY;

    let check_barrier = |gf: &GridFunction| -> Result<f64> {
        let mut margin = f64::INFINITY;
        for (coords, world) in &window_nodes {
            if let Some(v) = gf.lattice_value(coords) {
                let g = half_catenoid_g(&profile, world)?;
                margin = margin.min(g + c_k - v);
            }
        }
        Ok(margin)
    };
    barrier_margin = barrier_margin.min(check_barrier(&first)?);

    let max_b = 64.0;
    loop {
        let next_b = 2.0 * b;
        let next = solve_b(next_b)?;
        // Monotone increase on every node of the previous (smaller) grid.
        let mut increment = f64::INFINITY;
        for &node in prev.grid.node_of_unknown.iter() {
            let coords = prev.grid.node_coords(node);
            let old = prev.node_value(node).unwrap();
            if let Some(new) = next.lattice_value(&coords) {
                increment = increment.min(new - old);
            }
        }
        min_increment = min_increment.min(increment);
        if increment < -1e-7 {
            return Err(Error::MonotonicityViolation {
                b: next_b,
                drop: -increment,
            });
        }
        barrier_margin = barrier_margin.min(check_barrier(&next)?);
        if barrier_margin <= 0.0 {
            return Err(Error::BarrierViolation {
                b: next_b,
                excess: -barrier_margin,
            });
        }
        // Sup-change on the Q_1 window.
        let mut change = 0.0f64;
        for (coords, _) in &window_nodes {
            if let (Some(old), Some(new)) =
                (prev.lattice_value(coords), next.lattice_value(coords))
            {
                change = change.max((new - old).abs());
            }
        }
        sup_changes.push(change);
        b = next_b;
        prev = next;
        if change < tol {
            break;
        }
        if b >= max_b {
            return Err(Error::NonConvergence {
                iters: sup_changes.len(),
                history: sup_changes,
            });
        }
    }

    Ok(Exhaustion {
        n,
        k,
        c_k,
        sides: sides.to_vec(),
        waist: a,
        profile,
        first,
        last: prev,
        final_b: b,
        sup_changes,
        min_increment,
        barrier_margin,
    })
}

/// Unsigned distance proxy from a point to the scaled classical saddle
/// tower matching the k = 2, n = 3 construction with strip width `a2`:
/// |G| / |∇G| for G = sin(π x_2/a2) - sinh(π X/a2) sinh(π Y/a2),
/// X = (z - x_1)/√2, Y = (z + x_1)/√2.
pub fn tower_oracle_distance(x1: f64, x2: f64, z: f64, a2: f64) -> f64 {
    let s = a2 / PI;
    let xx = (z - x1) / (2f64.sqrt() * s);
    let yy = (z + x1) / (2f64.sqrt() * s);
    let zz = x2 / s;
    let g = zz.sin() - xx.sinh() * yy.sinh();
    // Gradient w.r.t. (x1, x2, z).
    let dg_dxx = -xx.cosh() * yy.sinh();
    let dg_dyy = -xx.sinh() * yy.cosh();
    let dx1 = (-dg_dxx + dg_dyy) / (2f64.sqrt() * s);
    let dz = (dg_dxx + dg_dyy) / (2f64.sqrt() * s);
    let dx2 = zz.cos() / s;
    let grad = (dx1 * dx1 + dx2 * dx2 + dz * dz).sqrt();
    g.abs() / grad.max(1e-30)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scherk1_values() {
        assert_eq!(scherk1_exact(0.0, 0.0).unwrap(), 0.0);
        assert!(scherk1_exact(0.7, 0.7).unwrap().abs() < 1e-15);
        let v = scherk1_exact(0.5, 0.0).unwrap();
        assert!((v - 0.5f64.cos().ln()).abs() < 1e-15);
        // Series cross-check: ln cos x = -x²/2 - x⁴/12 - x⁶/45 - ...
        let series = -(0.125
            + 0.0625 / 12.0
            + 0.015625 / 45.0
            + 0.5f64.powi(8) * 17.0 / 2520.0
            + 0.5f64.powi(10) * 31.0 / 14175.0);
        assert!((v - series).abs() < 1e-6, "got {v}, series {series}");
        assert!(scherk1_exact(1.6, 0.0).is_err());
    }

    #[test]
    fn scherk2_values() {
        assert_eq!(scherk2_implicit(0.0, 3.0, 0.0), 0.0);
        assert!(scherk2_implicit(2.0, 0.0, PI).abs() < 1e-15);
        // sinh(1)^2 > 1: no z solves the equation at (1,1).
        let m = (0..1000)
            .map(|i| scherk2_implicit(1.0, 1.0, i as f64 * 0.01).abs())
            .fold(f64::INFINITY, f64::min);
        assert!(m > 0.3, "min {m}");
    }

    #[test]
    fn slope_oracle() {
        assert!((scherk_slope(2).unwrap() - 1.0).abs() < 1e-15);
        assert!(scherk_slope(1).is_err());
        for k in 2..=8 {
            let c = scherk_slope(k).unwrap();
            assert!((sheet_angle(c) - PI / k as f64).abs() < 1e-12, "k={k}");
        }
        assert!(scherk_slope(64).unwrap() > scherk_slope(8).unwrap());
    }

    #[test]
    fn exhaustion_tower_n3_k2() {
        let ex = exhaust_limit(2, &[0.5], 1.0 / 16.0, 1e-5).unwrap();
        assert!(ex.min_increment >= -1e-8, "increment {}", ex.min_increment);
        assert!(ex.barrier_margin > 0.0);
        // Sup-changes decrease along the exhaustion.
        for w in ex.sup_changes.windows(2) {
            assert!(w[1] <= w[0] * 1.5, "{:?}", ex.sup_changes);
        }
        // h̃_{k,1} <= c_k on Q_1.
        let c_k = ex.c_k;
        for &v in &ex.first.values {
            assert!(v <= c_k + 1e-9);
        }
        // Final graph stays close to the classical saddle tower.
        let mut dists: Vec<f64> = Vec::new();
        for (unk, &node) in ex.last.grid.node_of_unknown.iter().enumerate() {
            let w = &ex.last.grid.world[node];
            if w[0].abs() <= 1.0 {
                dists.push(tower_oracle_distance(w[0], w[1], ex.last.values[unk], 0.5));
            }
        }
        dists.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let median = dists[dists.len() / 2];
        assert!(median <= 5.0 / 16.0, "median {median}");
    }

    #[test]
    fn waist_condition_rejected() {
        // a_2 = 1.2 > waist 1 for n = 3.
        assert!(matches!(
            exhaust_limit(2, &[1.2], 1.0 / 8.0, 1e-4),
            Err(Error::WaistCondition { .. })
        ));
    }
}
