//! Exact construction and queries for the cube, its diagonal slice, the
//! truncated-simplex faces, spines, and projection domains.
//!
//! All polytopes are carried in both halfspace and vertex representation,
//! kept mutually consistent by brute-force vertex enumeration over the
//! halfspace system. Everything is rational; equality of polytopes is
//! decided on lexicographically sorted vertex lists.

use std::fmt;

use itertools::Itertools;
use num_traits::Zero;

use crate::error::{Error, Result};
use crate::exact::{
    self, affine_rank, dot, lex_cmp, null_space, primitive, rat, sub, ExactPoint, Rat,
};

pub const MAX_DIM: usize = 8;

pub fn check_dim(n: usize) -> Result<()> {
    if (3..=MAX_DIM).contains(&n) {
        Ok(())
    } else {
        Err(Error::DimensionOutOfRange(n))
    }
}

/// `normal . x <= offset`, or `normal . x = offset` when used as an equality.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Halfspace {
    pub normal: ExactPoint,
    pub offset: Rat,
}

impl Halfspace {
    pub fn new(normal: ExactPoint, offset: Rat) -> Self {
        Halfspace { normal, offset }
    }

    pub fn satisfied(&self, p: &[Rat]) -> bool {
        dot(&self.normal, p) <= self.offset
    }

    pub fn tight(&self, p: &[Rat]) -> bool {
        dot(&self.normal, p) == self.offset
    }

    /// Scale by a positive factor so the normal is a primitive integer
    /// vector (up to overall sign); the inequality is unchanged.
    pub fn canonical(&self) -> Halfspace {
        let mut prim = primitive(&self.normal);
        // primitive() sign-normalizes; undo a flip so the scale factor stays
        // positive and the inequality keeps its direction.
        let mut k = self
            .normal
            .iter()
            .zip(&prim)
            .find(|(orig, _)| !orig.is_zero())
            .map(|(orig, p)| p / orig)
            .unwrap_or_else(|| rat(1));
        if k < rat(0) {
            prim = exact::neg(&prim);
            k = -k;
        }
        Halfspace {
            normal: prim,
            offset: &self.offset * &k,
        }
    }

    pub fn flipped(&self) -> Halfspace {
        Halfspace {
            normal: exact::neg(&self.normal),
            offset: -self.offset.clone(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn rat(self) -> Rat {
        match self {
            Sign::Plus => rat(1),
            Sign::Minus => rat(-1),
        }
    }
}

impl fmt::Display for Sign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sign::Plus => write!(f, "+"),
            Sign::Minus => write!(f, "-"),
        }
    }
}

/// Convex polytope in H- and V-representation simultaneously.
#[derive(Clone, Debug)]
pub struct Polytope {
    pub dim_ambient: usize,
    /// Affine hull equations (`normal . x = offset`).
    pub equalities: Vec<Halfspace>,
    /// Facet-supporting inequalities within the affine hull.
    pub halfspaces: Vec<Halfspace>,
    /// Lexicographically sorted exact vertex list.
    pub vertices: Vec<ExactPoint>,
    pub affine_hull_dim: usize,
}

impl PartialEq for Polytope {
    fn eq(&self, other: &Self) -> bool {
        self.dim_ambient == other.dim_ambient && self.vertices == other.vertices
    }
}

impl Eq for Polytope {}

impl Polytope {
    /// Enumerate vertices of `{equalities hold} ∩ {halfspaces hold}` and
    /// canonicalize. Brute force over halfspace subsets; the polytopes in
    /// this crate are tiny (n <= 8), so correctness wins over speed.
    pub fn from_hrep(
        dim: usize,
        equalities: &[Halfspace],
        halfspaces: &[Halfspace],
    ) -> Result<Polytope> {
        let eq_rows: Vec<Vec<Rat>> = equalities.iter().map(|h| h.normal.clone()).collect();
        let eq_rank = exact::rank(&eq_rows);
        // Independent subset of the equalities.
        let mut eq_basis: Vec<&Halfspace> = Vec::new();
        let mut rows: Vec<Vec<Rat>> = Vec::new();
        for h in equalities {
            rows.push(h.normal.clone());
            if exact::rank(&rows) > eq_basis.len() {
                eq_basis.push(h);
            } else {
                rows.pop();
            }
        }
        debug_assert_eq!(eq_basis.len(), eq_rank);
        let free = dim - eq_rank;
        let mut vertices: Vec<ExactPoint> = Vec::new();
        for combo in (0..halfspaces.len()).combinations(free) {
            let mut a: Vec<Vec<Rat>> = eq_basis.iter().map(|h| h.normal.clone()).collect();
            let mut b: Vec<Rat> = eq_basis.iter().map(|h| h.offset.clone()).collect();
            for &i in &combo {
                a.push(halfspaces[i].normal.clone());
                b.push(halfspaces[i].offset.clone());
            }
            let Some(x) = exact::solve_linear(&a, &b) else {
                continue;
            };
            if equalities.iter().all(|h| h.tight(&x))
                && halfspaces.iter().all(|h| h.satisfied(&x))
            {
                vertices.push(x);
            }
        }
        vertices.sort_by(|a, b| lex_cmp(a, b));
        vertices.dedup();
        if vertices.is_empty() {
            return Err(Error::DegeneratePolytope);
        }
        Ok(Self::canonicalize(dim, vertices, halfspaces))
    }

    /// Rebuild the canonical representation from a vertex list plus a pool of
    /// candidate supporting halfspaces (facet detection by tight-set rank).
    fn canonicalize(dim: usize, vertices: Vec<ExactPoint>, pool: &[Halfspace]) -> Polytope {
        let affine_hull_dim = affine_rank(&vertices).max(0) as usize;
        let equalities = affine_hull_equations(&vertices, dim);
        let mut facets: Vec<Halfspace> = Vec::new();
        let mut tight_sets: Vec<Vec<usize>> = Vec::new();
        for h in pool {
            if vertices.iter().all(|v| h.satisfied(v)) {
                let tight: Vec<usize> = (0..vertices.len())
                    .filter(|&i| h.tight(&vertices[i]))
                    .collect();
                if tight.is_empty() {
                    continue;
                }
                let tight_pts: Vec<ExactPoint> =
                    tight.iter().map(|&i| vertices[i].clone()).collect();
                if affine_rank(&tight_pts) == affine_hull_dim as isize - 1
                    && !tight_sets.contains(&tight)
                {
                    tight_sets.push(tight);
                    facets.push(h.canonical());
                }
            }
        }
        Polytope {
            dim_ambient: dim,
            equalities,
            halfspaces: facets,
            vertices,
            affine_hull_dim,
        }
    }

    /// Exact convex hull of a small vertex set: candidate facet hyperplanes
    /// are spanned by vertex subsets. Only intended for the handful of tiny
    /// projection domains in this crate.
    pub fn from_vertices(dim: usize, mut vertices: Vec<ExactPoint>) -> Result<Polytope> {
        vertices.sort_by(|a, b| lex_cmp(a, b));
        vertices.dedup();
        if vertices.is_empty() {
            return Err(Error::DegeneratePolytope);
        }
        let adim = affine_rank(&vertices).max(0) as usize;
        let mut pool: Vec<Halfspace> = Vec::new();
        for combo in (0..vertices.len()).combinations(adim) {
            let pts: Vec<ExactPoint> = combo.iter().map(|&i| vertices[i].clone()).collect();
            if affine_rank(&pts) != adim as isize - 1 {
                continue;
            }
            for h in hyperplanes_through(&pts, &vertices, dim) {
                let side_le = vertices.iter().all(|v| h.satisfied(v));
                let side_ge = vertices.iter().all(|v| dot(&h.normal, v) >= h.offset);
                if side_le {
                    pool.push(h.canonical());
                } else if side_ge {
                    pool.push(h.flipped().canonical());
                }
            }
        }
        pool.sort_by(|a, b| {
            lex_cmp(&a.normal, &b.normal).then_with(|| a.offset.cmp(&b.offset))
        });
        pool.dedup();
        let hull = Self::canonicalize(dim, vertices.clone(), &pool);
        // Consistency: the detected facets must cut out exactly the input hull.
        let recon = Self::from_hrep(dim, &hull.equalities, &hull.halfspaces)?;
        if recon.vertices != hull.vertices {
            return Err(Error::DegeneratePolytope);
        }
        Ok(hull)
    }

    pub fn contains(&self, p: &[Rat]) -> bool {
        self.equalities.iter().all(|h| h.tight(p))
            && self.halfspaces.iter().all(|h| h.satisfied(p))
    }

    pub fn facet_count(&self) -> usize {
        self.halfspaces.len()
    }

    /// Codimension-1 faces (within the affine hull) as polytopes.
    pub fn faces_codim1(&self) -> Vec<Polytope> {
        self.halfspaces
            .iter()
            .map(|h| {
                let verts: Vec<ExactPoint> = self
                    .vertices
                    .iter()
                    .filter(|v| h.tight(v))
                    .cloned()
                    .collect();
                let mut eqs = self.equalities.clone();
                eqs.push(h.clone());
                let mut face = Self::canonicalize(self.dim_ambient, verts, &self.halfspaces);
                face.equalities = affine_hull_equations(&face.vertices, self.dim_ambient);
                face
            })
            .collect()
    }

    /// Codimension-2 faces, each tight at a pair of facets.
    pub fn faces_codim2(&self) -> Vec<Polytope> {
        let mut faces: Vec<Polytope> = Vec::new();
        for pair in self.halfspaces.iter().combinations(2) {
            let verts: Vec<ExactPoint> = self
                .vertices
                .iter()
                .filter(|v| pair[0].tight(v) && pair[1].tight(v))
                .cloned()
                .collect();
            if verts.is_empty() {
                continue;
            }
            if affine_rank(&verts) != self.affine_hull_dim as isize - 2 {
                continue;
            }
            let face = Self::canonicalize(self.dim_ambient, verts, &self.halfspaces);
            if !faces.contains(&face) {
                faces.push(face);
            }
        }
        faces.sort_by(|a, b| lex_cmp(&a.vertices[0], &b.vertices[0]));
        faces
    }

    /// Vertex barycenter (exact).
    pub fn centroid(&self) -> ExactPoint {
        let n = rat(self.vertices.len() as i64);
        let mut c = exact::zeros(self.dim_ambient);
        for v in &self.vertices {
            c = exact::add(&c, v);
        }
        exact::scale(&c, &(rat(1) / n))
    }
}

/// All hyperplane functionals vanishing on `pts` relative to the hull of
/// `all` (usually exactly one once the affine hull is full-dimensional).
fn hyperplanes_through(pts: &[ExactPoint], all: &[ExactPoint], dim: usize) -> Vec<Halfspace> {
    // Functional (a, c) with a.x = c on every p in pts, modulo the affine
    // hull equations of the full set: solve for the null space of the
    // homogeneous system [p | -1].
    let rows: Vec<Vec<Rat>> = pts
        .iter()
        .map(|p| {
            let mut r = p.clone();
            r.push(rat(-1));
            r
        })
        .collect();
    let hull_eqs = affine_hull_equations(all, dim);
    let hull_rows: Vec<Vec<Rat>> = hull_eqs
        .iter()
        .map(|h| {
            let mut r = h.normal.clone();
            r.push(h.offset.clone());
            r
        })
        .collect();
    null_space(&rows, dim + 1)
        .into_iter()
        .filter(|v| v[..dim].iter().any(|x| !x.is_zero()))
        .filter(|v| {
            // Skip functionals that are combinations of the hull equations
            // (they do not separate anything inside the hull).
            let mut test = hull_rows.clone();
            test.push(v.clone());
            exact::rank(&test) > hull_rows.len()
        })
        .map(|v| Halfspace::new(v[..dim].to_vec(), v[dim].clone()))
        .collect()
}

/// Equations cutting out the affine hull of a point set.
pub fn affine_hull_equations(vertices: &[ExactPoint], dim: usize) -> Vec<Halfspace> {
    let Some(v0) = vertices.first() else {
        return Vec::new();
    };
    let diffs: Vec<Vec<Rat>> = vertices[1..].iter().map(|v| sub(v, v0)).collect();
    null_space(&diffs, dim)
        .into_iter()
        .map(|n| {
            let off = dot(&n, v0);
            Halfspace::new(n, off).canonical()
        })
        .collect()
}

/// `Q^n`-style cube `[lo, hi]^n`.
pub fn make_cube(n: usize, lo: &Rat, hi: &Rat) -> Result<Polytope> {
    check_dim(n)?;
    if lo >= hi {
        return Err(Error::DegeneratePolytope);
    }
    let mut hs = Vec::with_capacity(2 * n);
    for i in 0..n {
        hs.push(Halfspace::new(exact::unit(n, i), hi.clone()));
        hs.push(Halfspace::new(exact::neg(&exact::unit(n, i)), -lo.clone()));
    }
    // Vertices of a box are immediate; skip the combinatorial enumeration.
    let mut vertices: Vec<ExactPoint> = vec![vec![]];
    for _ in 0..n {
        vertices = vertices
            .into_iter()
            .flat_map(|v| {
                let mut a = v.clone();
                a.push(lo.clone());
                let mut b = v;
                b.push(hi.clone());
                [a, b]
            })
            .collect();
    }
    vertices.sort_by(|a, b| lex_cmp(a, b));
    Ok(Polytope::canonicalize(n, vertices, &hs))
}

/// The diagonal slice `P_n = Q^n ∩ {x_1 + ... + x_n = 0}`.
pub fn slice_polytope(n: usize) -> Result<Polytope> {
    check_dim(n)?;
    let cube = make_cube(n, &rat(-1), &rat(1))?;
    let sum_zero = Halfspace::new(vec![rat(1); n], rat(0));
    Polytope::from_hrep(n, &[sum_zero], &cube.halfspaces)
}

/// Facet `B_i^±` of `P_n` on `{x_i = ±1}`: a regular (n-2)-simplex for
/// n = 3, 4 and a truncated one for n >= 5.
pub fn face_b(n: usize, i: usize, sign: Sign) -> Result<Polytope> {
    check_dim(n)?;
    if i == 0 || i > n {
        return Err(Error::IndexOutOfRange { index: i, max: n });
    }
    let cube = make_cube(n, &rat(-1), &rat(1))?;
    let sum_zero = Halfspace::new(vec![rat(1); n], rat(0));
    let face_eq = Halfspace::new(exact::unit(n, i - 1), sign.rat());
    Polytope::from_hrep(n, &[sum_zero, face_eq], &cube.halfspaces)
}

/// Orthogonal projection of `p` onto the hyperplane through the origin with
/// the given normal.
pub fn project_to_hyperplane(p: &[Rat], normal: &[Rat]) -> Result<ExactPoint> {
    if normal.iter().all(|x| x.is_zero()) {
        return Err(Error::ZeroNormal);
    }
    if p.len() != normal.len() {
        return Err(Error::DimensionMismatch {
            expected: normal.len(),
            got: p.len(),
        });
    }
    let t = dot(normal, p) / dot(normal, normal);
    Ok(sub(p, &exact::scale(normal, &t)))
}

/// Finite union of cones `apex ⨯ F` over polytope faces, all lying in one
/// ambient hyperplane (the affine span of apex and bases).
#[derive(Clone, Debug)]
pub struct ConeComplex {
    pub apex: ExactPoint,
    pub base_faces: Vec<Polytope>,
    /// Equation of the hyperplane containing the whole complex.
    pub hyperplane: Halfspace,
}

impl ConeComplex {
    pub fn new(apex: ExactPoint, mut base_faces: Vec<Polytope>) -> Result<ConeComplex> {
        let dim = apex.len();
        let mut pts: Vec<ExactPoint> = vec![apex.clone()];
        for f in &base_faces {
            pts.extend(f.vertices.iter().cloned());
        }
        let eqs = affine_hull_equations(&pts, dim);
        if eqs.len() != 1 {
            return Err(Error::DegeneratePolytope);
        }
        base_faces.sort_by(|a, b| lex_cmp(&a.vertices[0], &b.vertices[0]));
        Ok(ConeComplex {
            apex,
            base_faces,
            hyperplane: eqs.into_iter().next().unwrap(),
        })
    }

    /// Canonical equality: same apex and same set of base faces. Cones over
    /// equal bases with equal apexes are equal as point sets.
    pub fn canonical_eq(&self, other: &ConeComplex) -> bool {
        if self.apex != other.apex || self.base_faces.len() != other.base_faces.len() {
            return false;
        }
        self.base_faces
            .iter()
            .all(|f| other.base_faces.contains(f))
    }

    /// All vertices of the complex (apex plus base-face vertices), sorted.
    pub fn vertex_set(&self) -> Vec<ExactPoint> {
        let mut vs = vec![self.apex.clone()];
        for f in &self.base_faces {
            vs.extend(f.vertices.iter().cloned());
        }
        vs.sort_by(|a, b| lex_cmp(a, b));
        vs.dedup();
        vs
    }

    /// Exact membership: `p` lies on some segment from the apex to a base
    /// face.
    pub fn contains(&self, p: &[Rat]) -> bool {
        if p == &self.apex[..] {
            return true;
        }
        for f in &self.base_faces {
            // An equation of f's affine hull that the apex does not satisfy
            // pins down the cone parameter t.
            let Some(eq) = f
                .equalities
                .iter()
                .find(|h| !h.tight(&self.apex))
            else {
                continue;
            };
            let num = dot(&eq.normal, p) - dot(&eq.normal, &self.apex);
            let den = &eq.offset - dot(&eq.normal, &self.apex);
            if den.is_zero() {
                continue;
            }
            let t = num / den;
            if t <= rat(0) || t > rat(1) {
                continue;
            }
            // p = apex + t (q - apex)  =>  q = apex + (p - apex)/t
            let q: ExactPoint = self
                .apex
                .iter()
                .zip(p)
                .map(|(a, x)| a + (x - a) / &t)
                .collect();
            if f.contains(&q) {
                return true;
            }
        }
        false
    }
}

/// Spine `L_n`: the cone from the origin over the part of `∂P_n` lying in
/// the (n-2)-skeleton of `Q^n`.
pub fn spine(n: usize) -> Result<ConeComplex> {
    check_dim(n)?;
    let p_n = slice_polytope(n)?;
    ConeComplex::new(exact::zeros(n), p_n.faces_codim2())
}

/// `Γ_1 = (O ⨯ ∂B_1^+) ∪ (Ô ⨯ ∂B_1^+)` as a pair of cone complexes.
pub fn gamma1(n: usize) -> Result<(ConeComplex, ConeComplex)> {
    check_dim(n)?;
    let b1 = face_b(n, 1, Sign::Plus)?;
    let boundary = b1.faces_codim1();
    let mut o_hat = exact::zeros(n);
    o_hat[0] = rat(2);
    Ok((
        ConeComplex::new(exact::zeros(n), boundary.clone())?,
        ConeComplex::new(o_hat, boundary)?,
    ))
}

/// One (n-2)-cube of the cube complex of `Q̃^n = [0,1]^n`, with coordinates
/// `fixed` pinned to the given 0/1 values.
fn skeleton_cube(n: usize, fixed: &[(usize, Rat)]) -> Result<Polytope> {
    let eqs: Vec<Halfspace> = fixed
        .iter()
        .map(|(i, v)| Halfspace::new(exact::unit(n, *i), v.clone()))
        .collect();
    let unit_cube = make_cube(n, &rat(0), &rat(1))?;
    Polytope::from_hrep(n, &eqs, &unit_cube.halfspaces)
}

/// Classification of the 2n(n-1) (n-2)-cubes of `Q̃^n` relative to the poles.
pub struct SkeletonCensus {
    pub gamma2: Vec<Polytope>,
    pub touching_p0: Vec<Polytope>,
    pub touching_p1: Vec<Polytope>,
}

pub fn skeleton_census(n: usize) -> Result<SkeletonCensus> {
    check_dim(n)?;
    let mut census = SkeletonCensus {
        gamma2: Vec::new(),
        touching_p0: Vec::new(),
        touching_p1: Vec::new(),
    };
    for pair in (0..n).combinations(2) {
        for (vi, vj) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
            let cube = skeleton_cube(n, &[(pair[0], rat(vi)), (pair[1], rat(vj))])?;
            match (vi, vj) {
                (0, 0) => census.touching_p0.push(cube),
                (1, 1) => census.touching_p1.push(cube),
                _ => census.gamma2.push(cube),
            }
        }
    }
    Ok(census)
}

/// `Γ_2 = ∂F^0 = ∂F^1`: the (n-2)-cubes of `Q̃^n` touching neither pole.
pub fn gamma2(n: usize) -> Result<Vec<Polytope>> {
    Ok(skeleton_census(n)?.gamma2)
}

/// Projection domain `U = Π_2(Q̃^n) ⊂ {x_1 + ... + x_n = 0}`, cut out by
/// `y_i - y_j <= 1` for all i ≠ j.
pub fn projection_domain_u(n: usize) -> Result<Polytope> {
    check_dim(n)?;
    let sum_zero = Halfspace::new(vec![rat(1); n], rat(0));
    let mut hs = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if i != j {
                let mut normal = exact::zeros(n);
                normal[i] = rat(1);
                normal[j] = rat(-1);
                hs.push(Halfspace::new(normal, rat(1)));
            }
        }
    }
    Polytope::from_hrep(n, &[sum_zero], &hs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::ratio;

    #[test]
    fn cube_census() {
        let q3 = make_cube(3, &rat(-1), &rat(1)).unwrap();
        assert_eq!(q3.vertices.len(), 8);
        assert_eq!(q3.facet_count(), 6);
        assert_eq!(q3.affine_hull_dim, 3);
        let q4 = make_cube(4, &rat(-1), &rat(1)).unwrap();
        assert_eq!(q4.vertices.len(), 16);
        assert_eq!(q4.facet_count(), 8);
        let q4_unit = make_cube(4, &rat(0), &rat(1)).unwrap();
        assert!(q4_unit
            .vertices
            .iter()
            .all(|v| v.iter().all(|x| *x == rat(0) || *x == rat(1))));
        assert!(make_cube(2, &rat(0), &rat(1)).is_err());
    }

    #[test]
    fn slice_is_hexagon_octahedron() {
        let p3 = slice_polytope(3).unwrap();
        assert_eq!(p3.vertices.len(), 6);
        assert_eq!(p3.facet_count(), 6);
        assert_eq!(p3.affine_hull_dim, 2);
        // Vertices are the permutations of (1, -1, 0).
        assert!(p3.vertices.contains(&vec![rat(1), rat(-1), rat(0)]));
        let p4 = slice_polytope(4).unwrap();
        assert_eq!(p4.vertices.len(), 6);
        assert_eq!(p4.facet_count(), 8);
        let p5 = slice_polytope(5).unwrap();
        assert_eq!(p5.facet_count(), 10);
    }

    #[test]
    fn face_b_examples() {
        // (4, 4, +): regular triangle with the paper's listed vertices.
        let b = face_b(4, 4, Sign::Plus).unwrap();
        assert_eq!(b.vertices.len(), 3);
        assert!(b.vertices.contains(&vec![rat(1), rat(-1), rat(-1), rat(1)]));
        assert!(b.vertices.contains(&vec![rat(-1), rat(1), rat(-1), rat(1)]));
        assert!(b.vertices.contains(&vec![rat(-1), rat(-1), rat(1), rat(1)]));
        // (3, 3, +): segment; endpoints computed by the enumeration oracle.
        let b = face_b(3, 3, Sign::Plus).unwrap();
        assert_eq!(
            b.vertices,
            vec![
                vec![rat(-1), rat(0), rat(1)],
                vec![rat(0), rat(-1), rat(1)]
            ]
        );
        // (5, 5, +): truncation kicks in, more vertices than a simplex has.
        let b = face_b(5, 5, Sign::Plus).unwrap();
        assert!(b.vertices.len() > 4, "got {}", b.vertices.len());
        assert!(face_b(4, 5, Sign::Plus).is_err());
    }

    #[test]
    fn slice_facets_are_faces_b() {
        for n in 3..=6 {
            let p = slice_polytope(n).unwrap();
            assert_eq!(p.facet_count(), 2 * n);
            let facets = p.faces_codim1();
            let mut matched = 0;
            for i in 1..=n {
                for sign in [Sign::Plus, Sign::Minus] {
                    let b = face_b(n, i, sign).unwrap();
                    assert_eq!(facets.iter().filter(|f| **f == b).count(), 1);
                    matched += 1;
                }
            }
            assert_eq!(matched, 2 * n);
        }
    }

    #[test]
    fn spine_small_dimensions() {
        // L_3: cones over the 6 hexagon vertices, i.e. 6 segments through O.
        let l3 = spine(3).unwrap();
        assert_eq!(l3.base_faces.len(), 6);
        assert!(l3
            .base_faces
            .iter()
            .all(|f| f.vertices.len() == 1));
        // Midpoint of a segment lies on the spine; a generic point does not.
        assert!(l3.contains(&vec![ratio(1, 2), ratio(-1, 2), rat(0)]));
        assert!(!l3.contains(&vec![ratio(1, 2), ratio(1, 4), ratio(-3, 4)]));
    }

    #[test]
    fn spine_in_rotation_planes_dichotomy() {
        // n = 3, 4: every base face lies in some {x_i + x_j = 0}.
        for n in [3usize, 4] {
            let l = spine(n).unwrap();
            for f in &l.base_faces {
                let ok = (0..n).tuple_combinations().any(|(i, j)| {
                    f.vertices
                        .iter()
                        .all(|v| (&v[i] + &v[j]).is_zero())
                });
                assert!(ok, "n={n} face {:?}", f.vertices);
            }
        }
        // n = 5, 6: some base face lies in no single plane {x_i + x_j = 0}.
        for n in [5usize, 6] {
            let l = spine(n).unwrap();
            let witness = l.base_faces.iter().find(|f| {
                (0..n).tuple_combinations().all(|(i, j)| {
                    f.vertices
                        .iter()
                        .any(|v| !(&v[i] + &v[j]).is_zero())
                })
            });
            assert!(witness.is_some(), "n={n}: no truncation face found");
        }
    }

    #[test]
    fn gamma1_counts() {
        let (g_o, g_ohat) = gamma1(4).unwrap();
        assert_eq!(g_o.base_faces.len(), 3);
        assert_eq!(g_ohat.base_faces.len(), 3);
        assert_eq!(g_ohat.apex, vec![rat(2), rat(0), rat(0), rat(0)]);
        let (g_o, _) = gamma1(3).unwrap();
        // ∂B_1^+ for n = 3 is two points; Γ_1 is a quadrilateral.
        assert_eq!(g_o.base_faces.len(), 2);
    }

    #[test]
    fn gamma2_counts_and_partition() {
        for n in 3..=6 {
            let census = skeleton_census(n).unwrap();
            assert_eq!(census.gamma2.len(), n * (n - 1));
            assert_eq!(
                census.touching_p0.len() + census.touching_p1.len(),
                n * (n - 1)
            );
            let mut verts: Vec<ExactPoint> = census
                .gamma2
                .iter()
                .flat_map(|c| c.vertices.iter().cloned())
                .collect();
            verts.sort_by(|a, b| lex_cmp(a, b));
            verts.dedup();
            assert_eq!(verts.len(), (1usize << n) - 2);
        }
    }

    #[test]
    fn projection_examples() {
        let p = vec![rat(1); 4];
        let normal = vec![rat(1); 4];
        assert_eq!(
            project_to_hyperplane(&p, &normal).unwrap(),
            exact::zeros(4)
        );
        let q = vec![rat(1), rat(-1), rat(0), rat(0)];
        assert_eq!(project_to_hyperplane(&q, &normal).unwrap(), q);
        assert!(project_to_hyperplane(&p, &exact::zeros(4)).is_err());
    }

    #[test]
    fn projection_domain_vertices_match_projected_cube_vertices() {
        for n in [3usize, 4] {
            let u = projection_domain_u(n).unwrap();
            let cube = make_cube(n, &rat(0), &rat(1)).unwrap();
            let normal = vec![rat(1); n];
            let mut projected: Vec<ExactPoint> = cube
                .vertices
                .iter()
                .filter(|v| {
                    let s: Rat = v.iter().sum();
                    !s.is_zero() && s != rat(n as i64)
                })
                .map(|v| project_to_hyperplane(v, &normal).unwrap())
                .collect();
            projected.sort_by(|a, b| lex_cmp(a, b));
            projected.dedup();
            assert_eq!(u.vertices, projected);
        }
    }
}
