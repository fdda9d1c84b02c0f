//! The rotationally symmetric minimal profile in dimension n: the
//! generating curve x_n = f(x_1) solves f f'' = (n-2)(1 + f'^2), has first
//! integral f^(n-2)/sqrt(1+f'^2) = a^(n-2), and for n >= 4 blows up at a
//! finite slab half-width w. The upper half of the rotated hypersurface is
//! the graph g = sqrt(f(x_1)^2 - r^2), the barrier of the Scherk
//! construction.

use crate::error::{Error, Result};

/// Integrated profile of the generating curve, stored for x_1 >= 0 (the
/// curve is even).
#[derive(Clone, Debug)]
pub struct Profile {
    pub n: usize,
    /// Waist radius a = f(0).
    pub waist: f64,
    /// Slab half-width; `None` for the catenary (n = 3).
    pub slab_half_width: Option<f64>,
    /// Samples (x_1, f, f').
    pub samples: Vec<(f64, f64, f64)>,
    /// Integration step actually used after refinement.
    pub step: f64,
}

fn m_of(n: usize) -> f64 {
    (n - 2) as f64
}

/// Adaptive Simpson quadrature.
fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    fn simp<F: Fn(f64) -> f64>(_f: &F, a: f64, fa: f64, b: f64, fb: f64, fm: f64) -> f64 {
        (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    }
    fn rec<F: Fn(f64) -> f64>(
        f: &F,
        a: f64,
        fa: f64,
        b: f64,
        fb: f64,
        fm: f64,
        whole: f64,
        tol: f64,
        depth: usize,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = f(lm);
        let frm = f(rm);
        let left = simp(f, a, fa, m, fm, flm);
        let right = simp(f, m, fm, b, fb, frm);
        if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
            left + right + (left + right - whole) / 15.0
        } else {
            rec(f, a, fa, m, fm, flm, left, tol / 2.0, depth - 1)
                + rec(f, m, fm, b, fb, frm, right, tol / 2.0, depth - 1)
        }
    }
    let fa = f(a);
    let fb = f(b);
    let fm = f(0.5 * (a + b));
    let whole = simp(f, a, fa, b, fb, fm);
    rec(f, a, fa, b, fb, fm, whole, tol, 40)
}

/// x_1 as a function of the profile radius F >= a, from the first integral:
/// x_1(F) = integral over f in [a, F] of df / sqrt((f/a)^(2m) - 1).
/// Substituting f = a(1+u^2) removes the square-root singularity at the
/// waist.
fn x1_of_f(n: usize, a: f64, big_f: f64) -> f64 {
    let m = m_of(n);
    if big_f <= a {
        return 0.0;
    }
    let integrand = |u: f64| {
        let s = 1.0 + u * u;
        let denom = (s.powf(2.0 * m) - 1.0).sqrt();
        if denom == 0.0 {
            // u -> 0 limit: 2au / sqrt(2m u^2) = a sqrt(2/m).
            a * (2.0 / m).sqrt()
        } else {
            2.0 * a * u / denom
        }
    };
    let upper = (big_f / a - 1.0).sqrt();
    simpson(&integrand, 0.0, upper, 1e-13)
}

/// Finite slab half-width for n >= 4: the limit of x1_of_f as F grows.
/// The tail integral in v = 1/u is smooth near v = 0.
fn slab_half_width(n: usize, a: f64) -> f64 {
    let m = m_of(n);
    let head = x1_of_f(n, a, a * 2.0); // up to u = 1
    let tail = |v: f64| {
        if v <= 0.0 {
            return 0.0;
        }
        let u = 1.0 / v;
        let s = 1.0 + u * u;
        2.0 * a * u / (s.powf(2.0 * m) - 1.0).sqrt() / (v * v)
    };
    head + simpson(&tail, 0.0, 1.0, 1e-13)
}

fn rk4_step(m: f64, f: f64, fp: f64, h: f64) -> (f64, f64) {
    let acc = |f: f64, fp: f64| m * (1.0 + fp * fp) / f;
    let (k1f, k1p) = (fp, acc(f, fp));
    let (k2f, k2p) = (fp + 0.5 * h * k1p, acc(f + 0.5 * h * k1f, fp + 0.5 * h * k1p));
    let (k3f, k3p) = (fp + 0.5 * h * k2p, acc(f + 0.5 * h * k2f, fp + 0.5 * h * k2p));
    let (k4f, k4p) = (fp + h * k3p, acc(f + h * k3f, fp + h * k3p));
    (
        f + h / 6.0 * (k1f + 2.0 * k2f + 2.0 * k3f + k4f),
        fp + h / 6.0 * (k1p + 2.0 * k2p + 2.0 * k3p + k4p),
    )
}

/// March the ODE from the waist with fixed step; stop at the x_1 cap
/// (n = 3) or when f' exceeds the blow-up threshold (n >= 4).
fn march(n: usize, a0: f64, step: f64) -> Vec<(f64, f64, f64)> {
    let m = m_of(n);
    let cap = 2.5 * a0.max(1.0);
    let mut t = 0.0;
    let mut f = a0;
    let mut fp = 0.0;
    let mut samples = vec![(t, f, fp)];
    while (n == 3 && t < cap) || (n >= 4 && fp < 1e3) {
        let (nf, nfp) = rk4_step(m, f, fp, step);
        t += step;
        f = nf;
        fp = nfp;
        samples.push((t, f, fp));
        if !f.is_finite() || !fp.is_finite() || samples.len() > 4_000_000 {
            break;
        }
    }
    samples
}

/// Maximum drift of the first integral f^m / sqrt(1+f'^2) from a^m.
pub fn first_integral_drift(p: &Profile) -> f64 {
    let m = m_of(p.n);
    let c0 = p.waist.powf(m);
    p.samples
        .iter()
        .map(|&(_, f, fp)| (f.powf(m) / (1.0 + fp * fp).sqrt() - c0).abs())
        .fold(0.0, f64::max)
}

pub fn integrate_profile(n: usize, a0: f64, step: f64) -> Result<Profile> {
    crate::polytope::check_dim(n)?;
    if a0 <= 0.0 || step <= 0.0 {
        return Err(Error::BadDomain);
    }
    // Step refinement: start no coarser than 1e-3 (relative to the waist
    // scale), then halve until the waist region stabilizes to 1e-10.
    let waist_t = a0.min(1.0);
    let mut h = step.min(1e-3 * a0.min(1.0));
    let mut samples = march(n, a0, h);
    for _ in 0..14 {
        let finer = march(n, a0, h / 2.0);
        let coarse_at = |t: f64, s: &[(f64, f64, f64)], hh: f64| {
            let i = ((t / hh).round() as usize).min(s.len() - 1);
            s[i].1
        };
        let t_probe = waist_t.min(samples.last().unwrap().0);
        let diff = (coarse_at(t_probe, &samples, h) - coarse_at(t_probe, &finer, h / 2.0)).abs();
        samples = finer;
        h /= 2.0;
        if diff < 1e-10 {
            break;
        }
    }
    if samples.iter().any(|s| !s.1.is_finite() || !s.2.is_finite()) {
        return Err(Error::Diverged);
    }
    let profile = Profile {
        n,
        waist: a0,
        slab_half_width: (n >= 4).then(|| slab_half_width(n, a0)),
        samples,
        step: h,
    };
    let drift = first_integral_drift(&profile);
    if drift > 1e-6 {
        return Err(Error::StepTooLarge { drift });
    }
    Ok(profile)
}

impl Profile {
    /// f(|x_1|) by cubic Hermite interpolation of the samples, falling back
    /// to first-integral bisection beyond the sampled range.
    pub fn f_at(&self, x1: f64) -> Result<f64> {
        let t = x1.abs();
        if let Some(w) = self.slab_half_width {
            if t >= w {
                return Err(Error::OutsideCatenoid);
            }
        }
        let last = self.samples.last().unwrap();
        if t <= last.0 {
            let i = ((t / self.step).floor() as usize).min(self.samples.len() - 2);
            let (t0, f0, d0) = self.samples[i];
            let (_, f1, d1) = self.samples[i + 1];
            let s = (t - t0) / self.step;
            let h00 = (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s);
            let h10 = s * (1.0 - s) * (1.0 - s);
            let h01 = s * s * (3.0 - 2.0 * s);
            let h11 = s * s * (s - 1.0);
            return Ok(h00 * f0 + h10 * self.step * d0 + h01 * f1 + h11 * self.step * d1);
        }
        // Invert x_1(F) by bisection (monotone).
        let mut lo = last.1;
        let mut hi = lo * 2.0;
        while x1_of_f(self.n, self.waist, hi) < t {
            hi *= 2.0;
            if hi > 1e12 {
                return Err(Error::OutsideCatenoid);
            }
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if x1_of_f(self.n, self.waist, mid) < t {
                lo = mid;
            } else {
                hi = mid;
            }
            if (hi - lo) <= 1e-13 * hi {
                break;
            }
        }
        Ok(0.5 * (lo + hi))
    }

    /// Residual of the ODE f f'' - (n-2)(1+f'^2) at sample midpoints, with
    /// f'' from central differences of the stored slopes, normalized by the
    /// growing factor 1+f'^2 so the steep tail does not dominate.
    pub fn ode_residual_sup(&self) -> f64 {
        let m = m_of(self.n);
        let mut sup = 0.0f64;
        for win in self.samples.windows(2) {
            let (_, f0, d0) = win[0];
            let (_, f1, d1) = win[1];
            let f = 0.5 * (f0 + f1);
            let fp = 0.5 * (d0 + d1);
            let fpp = (d1 - d0) / self.step;
            sup = sup.max((f * fpp - m * (1.0 + fp * fp)).abs() / (1.0 + fp * fp));
        }
        sup
    }
}

/// Homothety scaling the profile so the slab half-width becomes 1
/// (minimality is scale-invariant).
pub fn normalize_to_unit_slab(p: &Profile) -> Result<Profile> {
    let w = p.slab_half_width.ok_or(Error::InfiniteSlab)?;
    let s = 1.0 / w;
    Ok(Profile {
        n: p.n,
        waist: p.waist * s,
        slab_half_width: Some(1.0),
        samples: p
            .samples
            .iter()
            .map(|&(t, f, fp)| (t * s, f * s, fp))
            .collect(),
        step: p.step * s,
    })
}

/// Height of the upper half catenoid over q = (x_1, ..., x_{n-1}):
/// g = sqrt(f(x_1)^2 - r^2) with r the distance to the rotation axis.
pub fn half_catenoid_g(p: &Profile, q: &[f64]) -> Result<f64> {
    if q.len() != p.n - 1 {
        return Err(Error::DimensionMismatch {
            expected: p.n - 1,
            got: q.len(),
        });
    }
    let f = p.f_at(q[0])?;
    let r2: f64 = q[1..].iter().map(|x| x * x).sum();
    if r2 > f * f * (1.0 + 1e-12) {
        return Err(Error::OutsideCatenoid);
    }
    Ok((f * f - r2).max(0.0).sqrt())
}

/// The side condition a_i < a / sqrt(n-2) guaranteeing the truncated slab
/// domain sits inside the catenoid's shadow. Returns (holds, bound).
pub fn waist_condition(a: f64, sides: &[f64], n: usize) -> (bool, f64) {
    let bound = a / m_of(n).sqrt();
    (sides.iter().all(|&ai| ai < bound), bound)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn catenary_oracle() {
        for a in [0.5f64, 1.0, 2.0] {
            let p = integrate_profile(3, a, 1e-2).unwrap();
            assert!(p.slab_half_width.is_none());
            let mut sup = 0.0f64;
            for &(t, f, _) in &p.samples {
                if t <= 2.0 {
                    sup = sup.max((f - a * (t / a).cosh()).abs());
                }
            }
            assert!(sup <= 1e-8, "a={a} sup={sup}");
            assert!(first_integral_drift(&p) <= 1e-8);
            assert!(p.ode_residual_sup() <= 1e-6);
        }
    }

    #[test]
    fn finite_slab_for_higher_n() {
        let mut widths = Vec::new();
        for n in [4usize, 5, 6] {
            let p = integrate_profile(n, 1.0, 1e-2).unwrap();
            let w = p.slab_half_width.unwrap();
            assert!(w.is_finite() && w > 0.0);
            widths.push(w);
            // The marched samples approach the slab edge from below.
            assert!(p.samples.last().unwrap().0 < w);
        }
        // Half-width shrinks as the dimension grows.
        assert!(widths[0] > widths[1] && widths[1] > widths[2], "{widths:?}");
    }

    #[test]
    fn quadrature_matches_catenary_inverse() {
        // n = 3: x1(F) = a acosh(F/a) in closed form.
        for a in [0.5f64, 1.0] {
            for big_f in [a * 1.01, a * 2.0, a * 5.0] {
                let got = x1_of_f(3, a, big_f);
                let expect = a * (big_f / a).acosh();
                assert!((got - expect).abs() < 1e-10, "{got} vs {expect}");
            }
        }
    }

    #[test]
    fn normalization_is_a_homothety() {
        let p = integrate_profile(4, 1.0, 1e-2).unwrap();
        let q = normalize_to_unit_slab(&p).unwrap();
        assert!((q.slab_half_width.unwrap() - 1.0).abs() < 1e-15);
        let w = p.slab_half_width.unwrap();
        assert!((q.waist - p.waist / w).abs() < 1e-12);
        // Scaling twice is idempotent.
        let q2 = normalize_to_unit_slab(&q).unwrap();
        assert!((q2.waist - q.waist).abs() < 1e-12);
        // n = 3 has no slab to normalize.
        let cat = integrate_profile(3, 1.0, 1e-2).unwrap();
        assert!(matches!(
            normalize_to_unit_slab(&cat),
            Err(Error::InfiniteSlab)
        ));
    }

    #[test]
    fn half_catenoid_graph() {
        let p = integrate_profile(3, 1.0, 1e-2).unwrap();
        // On the axis over the waist: g = f(0) = a.
        let g0 = half_catenoid_g(&p, &[0.0, 0.0]).unwrap();
        assert!((g0 - 1.0).abs() < 1e-10);
        // On the equator r = f(|x1|): g = 0.
        let f1 = p.f_at(1.0).unwrap();
        assert!((f1 - 1.0f64.cosh()).abs() < 1e-8);
        let geq = half_catenoid_g(&p, &[1.0, f1]).unwrap();
        assert!(geq.abs() < 1e-6);
        // Oracle: g = sqrt(a^2 cosh^2(x1/a) - r^2).
        for &(x1, r) in &[(0.3, 0.2), (0.9, 0.8), (1.7, 1.0)] {
            let g = half_catenoid_g(&p, &[x1, r]).unwrap();
            let oracle = (x1.cosh().powi(2) - r * r).sqrt();
            assert!((g - oracle).abs() < 1e-8, "{g} vs {oracle}");
        }
        assert!(half_catenoid_g(&p, &[0.0, 2.0]).is_err());
    }

    #[test]
    fn waist_condition_examples() {
        let (ok, bound) = waist_condition(1.0, &[0.5, 0.5], 4);
        assert!(ok && (bound - 1.0 / 2f64.sqrt()).abs() < 1e-15);
        let (ok, _) = waist_condition(1.0, &[0.8], 4);
        assert!(!ok);
    }
}
