//! Simplicial patch meshes lifted from solved grid functions, periodic
//! assemblies of congruent copies, mesh file formats (OFF/OBJ for 3D, a
//! plain-text ND-OFF for higher dimensions), hyperplane slicing, and the
//! geometric predicates used by the verification battery.

use std::collections::HashMap;
use std::io::{BufRead, Write};


use crate::error::{Error, Result};
use crate::exact::{self, ExactPoint, Rat};
use crate::exec::{self, ExecMode};
use crate::grid::NodeKind;
use crate::isometry::Isometry;
use crate::linalg::solve_dense;
use crate::mse::GridFunction;

/// Simplicial mesh of an (n-1)-dimensional patch in R^n. Cells are
/// (n-1)-simplices given as n vertex indices.
#[derive(Clone, Debug)]
pub struct PatchMesh {
    pub dim: usize,
    pub vertices: Vec<Vec<f64>>,
    pub cells: Vec<Vec<usize>>,
    /// Tagged boundary facets: ((n-2)-simplex vertex indices, tag).
    pub boundary_marks: Vec<(Vec<usize>, String)>,
}

/// m-dimensional volume of a simplex with m+1 vertices in R^n (Gram
/// determinant).
pub fn simplex_volume(verts: &[&[f64]]) -> f64 {
    let m = verts.len() - 1;
    if m == 0 {
        return 1.0;
    }
    let edges: Vec<Vec<f64>> = verts[1..]
        .iter()
        .map(|v| v.iter().zip(verts[0]).map(|(a, b)| a - b).collect())
        .collect();
    let mut gram: Vec<Vec<f64>> = (0..m)
        .map(|i| {
            (0..m)
                .map(|j| edges[i].iter().zip(&edges[j]).map(|(a, b)| a * b).sum())
                .collect()
        })
        .collect();
    // Determinant by elimination.
    let mut det = 1.0f64;
    for col in 0..m {
        let pivot = (col..m)
            .max_by(|&a, &b| gram[a][col].abs().partial_cmp(&gram[b][col].abs()).unwrap())
            .unwrap();
        if gram[pivot][col].abs() < 1e-300 {
            return 0.0;
        }
        if pivot != col {
            gram.swap(col, pivot);
            det = -det;
        }
        det *= gram[col][col];
        for r in col + 1..m {
            let f = gram[r][col] / gram[col][col];
            for c in col..m {
                gram[r][c] -= f * gram[col][c];
            }
        }
    }
    let fact: f64 = (1..=m).map(|i| i as f64).product();
    det.max(0.0).sqrt() / fact
}

/// Lift a solved grid function to a simplicial mesh: grid cells whose
/// corners all carry values are triangulated by the Kuhn rule (path
/// simplices over coordinate permutations, deterministic), and each corner
/// is mapped by `lift(world_point, value)`. Boundary nodes sit exactly on
/// the domain boundary (their world position is the snapped foot).
pub fn lift_graph<F>(gf: &GridFunction, lift: F) -> PatchMesh
where
    F: Fn(&[f64], f64) -> Vec<f64>,
{
    let grid = &gf.grid;
    let m = grid.frame.dim();
    let mut vertex_of_node: HashMap<usize, usize> = HashMap::new();
    let mut vertices: Vec<Vec<f64>> = Vec::new();
    let mut cells: Vec<Vec<usize>> = Vec::new();

    // Corner offsets of one lattice cell.
    let mut corners: Vec<Vec<i64>> = vec![vec![]];
    for _ in 0..m {
        corners = corners
            .into_iter()
            .flat_map(|c| {
                let mut a = c.clone();
                a.push(0);
                let mut b = c;
                b.push(1);
                [a, b]
            })
            .collect();
    }
    // Permutations of 0..m for the Kuhn simplices.
    let perms = permutations(m);

    let dim = lift(&grid.world[grid.node_of_unknown.first().copied().unwrap_or(0)], 0.0).len();

    for idx in 0..grid.node_count() {
        if grid.kind[idx] == NodeKind::Outside {
            continue;
        }
        let base = grid.node_coords(idx);
        // The cell with lower corner `base` is used when every corner is a
        // non-outside node and at least one is interior.
        let mut node_ids = Vec::with_capacity(corners.len());
        let mut any_interior = false;
        let mut ok = true;
        for c in &corners {
            let coords: Vec<i64> = base.iter().zip(c).map(|(b, o)| b + o).collect();
            match grid.node_index(&coords) {
                Some(j) if grid.kind[j] != NodeKind::Outside => {
                    any_interior |= grid.kind[j] == NodeKind::Interior;
                    node_ids.push(j);
                }
                _ => {
                    ok = false;
                    break;
                }
            }
        }
        if !ok || !any_interior {
            continue;
        }
        // Ensure vertices exist.
        for &j in &node_ids {
            vertex_of_node.entry(j).or_insert_with(|| {
                let v = lift(&grid.world[j], gf.node_value(j).unwrap());
                vertices.push(v);
                vertices.len() - 1
            });
        }
        // Kuhn simplices: walk from corner 0 adding one axis at a time.
        for perm in &perms {
            let mut cell = Vec::with_capacity(m + 1);
            let mut corner_bits = vec![0u8; m];
            cell.push(vertex_of_node[&node_ids[bits_to_index(&corner_bits)]]);
            for &axis in perm {
                corner_bits[axis] = 1;
                cell.push(vertex_of_node[&node_ids[bits_to_index(&corner_bits)]]);
            }
            let vs: Vec<&[f64]> = cell.iter().map(|&i| vertices[i].as_slice()).collect();
            if simplex_volume(&vs) > 1e-14 {
                cells.push(cell);
            }
        }
    }
    let mut mesh = PatchMesh {
        dim,
        vertices,
        cells,
        boundary_marks: Vec::new(),
    };
    mesh.compute_boundary();
    mesh
}

fn bits_to_index(bits: &[u8]) -> usize {
    // Corner offsets were generated most-significant-axis-first.
    bits.iter().fold(0usize, |acc, &b| acc * 2 + b as usize)
}

pub(crate) fn permutations(m: usize) -> Vec<Vec<usize>> {
    if m == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(m - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, m - 1);
            out.push(q);
        }
    }
    out.sort();
    out
}

impl PatchMesh {
    /// Recompute untagged boundary facets ((n-2)-faces on exactly one cell).
    pub fn compute_boundary(&mut self) {
        let mut count: HashMap<Vec<usize>, usize> = HashMap::new();
        for cell in &self.cells {
            for drop in 0..cell.len() {
                let mut face: Vec<usize> = cell
                    .iter()
                    .enumerate()
                    .filter(|&(i, _)| i != drop)
                    .map(|(_, &v)| v)
                    .collect();
                face.sort_unstable();
                *count.entry(face).or_insert(0) += 1;
            }
        }
        self.boundary_marks = count
            .into_iter()
            .filter(|(_, c)| *c == 1)
            .map(|(f, _)| (f, String::from("free")))
            .collect();
        self.boundary_marks.sort();
    }

    /// Keep only the cells satisfying `pred`, drop now-unreferenced
    /// vertices, and recompute the boundary (all marks reset to "free").
    pub fn retain_cells<F: Fn(&[usize], &[Vec<f64>]) -> bool>(&mut self, pred: F) {
        let verts = std::mem::take(&mut self.vertices);
        self.cells.retain(|c| pred(c, &verts));
        let mut remap = vec![usize::MAX; verts.len()];
        let mut kept: Vec<Vec<f64>> = Vec::new();
        for cell in &mut self.cells {
            for v in cell.iter_mut() {
                if remap[*v] == usize::MAX {
                    remap[*v] = kept.len();
                    kept.push(verts[*v].clone());
                }
                *v = remap[*v];
            }
        }
        self.vertices = kept;
        self.compute_boundary();
    }

    /// Tag every boundary facet whose vertices all satisfy `pred`.
    pub fn mark_boundary<P>(&mut self, tag: &str, pred: P)
    where
        P: Fn(&[f64]) -> bool,
    {
        for (face, t) in &mut self.boundary_marks {
            if t == "free" && face.iter().all(|&v| pred(&self.vertices[v])) {
                *t = tag.to_string();
            }
        }
    }

    pub fn boundary_facets_tagged(&self, tag: &str) -> Vec<&Vec<usize>> {
        self.boundary_marks
            .iter()
            .filter(|(_, t)| t == tag)
            .map(|(f, _)| f)
            .collect()
    }

    /// Apply a float-converted isometry to all vertices.
    pub fn transformed(&self, iso: &Isometry) -> PatchMesh {
        let mat: Vec<Vec<f64>> = iso.matrix.iter().map(|r| exact::to_f64_vec(r)).collect();
        let tr = exact::to_f64_vec(&iso.translation);
        let vertices = self
            .vertices
            .iter()
            .map(|v| {
                mat.iter()
                    .zip(&tr)
                    .map(|(row, t)| row.iter().zip(v).map(|(a, b)| a * b).sum::<f64>() + t)
                    .collect()
            })
            .collect();
        PatchMesh {
            dim: self.dim,
            vertices,
            cells: self.cells.clone(),
            boundary_marks: self.boundary_marks.clone(),
        }
    }

    pub fn bounding_box(&self) -> (Vec<f64>, Vec<f64>) {
        let d = self.dim;
        let mut lo = vec![f64::INFINITY; d];
        let mut hi = vec![f64::NEG_INFINITY; d];
        for v in &self.vertices {
            for i in 0..d {
                lo[i] = lo[i].min(v[i]);
                hi[i] = hi[i].max(v[i]);
            }
        }
        (lo, hi)
    }

    /// Merge several meshes into one (no vertex welding).
    pub fn merged(meshes: &[PatchMesh]) -> PatchMesh {
        let dim = meshes.first().map(|m| m.dim).unwrap_or(0);
        let mut vertices = Vec::new();
        let mut cells = Vec::new();
        let mut marks = Vec::new();
        for m in meshes {
            let off = vertices.len();
            vertices.extend(m.vertices.iter().cloned());
            cells.extend(
                m.cells
                    .iter()
                    .map(|c| c.iter().map(|&v| v + off).collect::<Vec<_>>()),
            );
            marks.extend(m.boundary_marks.iter().map(|(f, t)| {
                (
                    f.iter().map(|&v| v + off).collect::<Vec<_>>(),
                    t.clone(),
                )
            }));
        }
        PatchMesh {
            dim,
            vertices,
            cells,
            boundary_marks: marks,
        }
    }

    // ---- file formats ----

    pub fn write_off<W: Write>(&self, w: &mut W) -> Result<()> {
        if self.dim != 3 {
            return Err(Error::BadMeshFile("OFF output requires dimension 3".into()));
        }
        writeln!(w, "OFF")?;
        writeln!(w, "{} {} 0", self.vertices.len(), self.cells.len())?;
        for v in &self.vertices {
            writeln!(w, "{} {} {}", v[0], v[1], v[2])?;
        }
        for c in &self.cells {
            write!(w, "{}", c.len())?;
            for &i in c {
                write!(w, " {i}")?;
            }
            writeln!(w)?;
        }
        Ok(())
    }

    pub fn write_obj<W: Write>(&self, w: &mut W) -> Result<()> {
        if self.dim != 3 {
            return Err(Error::BadMeshFile("OBJ output requires dimension 3".into()));
        }
        for v in &self.vertices {
            writeln!(w, "v {} {} {}", v[0], v[1], v[2])?;
        }
        for c in &self.cells {
            write!(w, "f")?;
            for &i in c {
                write!(w, " {}", i + 1)?;
            }
            writeln!(w)?;
        }
        Ok(())
    }

    /// Plain-text format for any dimension:
    /// line 1 "NDOFF", line 2 the dimension, line 3 "#vertices #cells",
    /// then vertex lines and cell lines ("k i_1 ... i_k").
    pub fn write_ndoff<W: Write>(&self, w: &mut W) -> Result<()> {
        writeln!(w, "NDOFF")?;
        writeln!(w, "{}", self.dim)?;
        writeln!(w, "{} {}", self.vertices.len(), self.cells.len())?;
        for v in &self.vertices {
            let line: Vec<String> = v.iter().map(|x| x.to_string()).collect();
            writeln!(w, "{}", line.join(" "))?;
        }
        for c in &self.cells {
            write!(w, "{}", c.len())?;
            for &i in c {
                write!(w, " {i}")?;
            }
            writeln!(w)?;
        }
        Ok(())
    }

    pub fn read_ndoff<R: BufRead>(r: &mut R) -> Result<PatchMesh> {
        let mut lines = r.lines();
        let mut next = || -> Result<String> {
            lines
                .next()
                .ok_or_else(|| Error::BadMeshFile("unexpected end of file".into()))?
                .map_err(Error::from)
        };
        if next()?.trim() != "NDOFF" {
            return Err(Error::BadMeshFile("missing NDOFF header".into()));
        }
        let dim: usize = next()?
            .trim()
            .parse()
            .map_err(|_| Error::BadMeshFile("bad dimension line".into()))?;
        let counts = next()?;
        let mut it = counts.split_whitespace();
        let nv: usize = it
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::BadMeshFile("bad count line".into()))?;
        let nc: usize = it
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::BadMeshFile("bad count line".into()))?;
        let mut vertices = Vec::with_capacity(nv);
        for _ in 0..nv {
            let line = next()?;
            let v: Vec<f64> = line
                .split_whitespace()
                .map(|s| s.parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| Error::BadMeshFile("bad vertex line".into()))?;
            if v.len() != dim {
                return Err(Error::BadMeshFile("vertex arity mismatch".into()));
            }
            vertices.push(v);
        }
        let mut cells = Vec::with_capacity(nc);
        for _ in 0..nc {
            let line = next()?;
            let nums: Vec<usize> = line
                .split_whitespace()
                .map(|s| s.parse::<usize>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| Error::BadMeshFile("bad cell line".into()))?;
            let (&k, rest) = nums
                .split_first()
                .ok_or_else(|| Error::BadMeshFile("empty cell line".into()))?;
            if rest.len() != k || rest.iter().any(|&i| i >= nv) {
                return Err(Error::BadMeshFile("cell index out of range".into()));
            }
            cells.push(rest.to_vec());
        }
        let mut mesh = PatchMesh {
            dim,
            vertices,
            cells,
            boundary_marks: Vec::new(),
        };
        mesh.compute_boundary();
        Ok(mesh)
    }
}

/// Periodic hypersurface: a fundamental mesh placed by exact isometries,
/// with a rational period lattice.
#[derive(Clone)]
pub struct PeriodicSurface {
    pub dim: usize,
    pub patches: Vec<(PatchMesh, Isometry)>,
    pub lattice: Vec<ExactPoint>,
    pub construction: String,
}

impl PeriodicSurface {
    /// Reduce an isometry's translation modulo the period lattice
    /// (exact; lattice vectors are orthogonal coordinate multiples here).
    pub fn canonical_isometry(&self, iso: &Isometry) -> Isometry {
        let mut t = iso.translation.clone();
        for l in &self.lattice {
            let ll = exact::dot(l, l);
            let coef = exact::dot(&t, l) / &ll;
            // Round to the nearest integer, exactly.
            let rounded = Rat::from_integer(coef.round().to_integer());
            t = exact::sub(&t, &exact::scale(l, &rounded));
        }
        Isometry {
            dim: iso.dim,
            matrix: iso.matrix.clone(),
            translation: t,
        }
    }

    /// Spec invariant: every lattice translation permutes the patch
    /// descriptors (exact on the isometry part, modulo the lattice).
    pub fn lattice_permutes_patches(&self) -> bool {
        let canon: Vec<Isometry> = self
            .patches
            .iter()
            .map(|(_, iso)| self.canonical_isometry(iso))
            .collect();
        for l in &self.lattice {
            let tau = crate::isometry::translate(l.clone());
            for (_, iso) in &self.patches {
                let moved = self.canonical_isometry(&tau.compose(iso));
                if !canon.contains(&moved) {
                    return false;
                }
            }
        }
        true
    }

    pub fn placed_patches(&self) -> Vec<PatchMesh> {
        self.patches
            .iter()
            .map(|(m, iso)| m.transformed(iso))
            .collect()
    }
}

// ---- geometric predicates ----

/// Closest point on a simplex (given as vertex list) to `p`, by recursive
/// projection onto affine hulls and faces.
pub fn closest_point_on_simplex(simplex: &[Vec<f64>], p: &[f64]) -> Vec<f64> {
    let k = simplex.len();
    if k == 1 {
        return simplex[0].clone();
    }
    // Solve least squares for barycentric coordinates on the affine hull.
    let edges: Vec<Vec<f64>> = simplex[1..]
        .iter()
        .map(|v| v.iter().zip(&simplex[0]).map(|(a, b)| a - b).collect())
        .collect();
    let m = edges.len();
    let mut gram: Vec<Vec<f64>> = (0..m)
        .map(|i| {
            (0..m)
                .map(|j| edges[i].iter().zip(&edges[j]).map(|(a, b)| a * b).sum())
                .collect()
        })
        .collect();
    let dp: Vec<f64> = p.iter().zip(&simplex[0]).map(|(a, b)| a - b).collect();
    let mut rhs: Vec<f64> = edges
        .iter()
        .map(|e| e.iter().zip(&dp).map(|(a, b)| a * b).sum())
        .collect();
    if let Some(coef) = solve_dense(&mut gram, &mut rhs) {
        let lambda0 = 1.0 - coef.iter().sum::<f64>();
        if lambda0 >= -1e-12 && coef.iter().all(|&c| c >= -1e-12) {
            let mut q = simplex[0].clone();
            for (c, e) in coef.iter().zip(&edges) {
                for (qi, ei) in q.iter_mut().zip(e) {
                    *qi += c * ei;
                }
            }
            return q;
        }
    }
    // Recurse on the facets.
    let mut best: Option<(f64, Vec<f64>)> = None;
    for drop in 0..k {
        let face: Vec<Vec<f64>> = simplex
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != drop)
            .map(|(_, v)| v.clone())
            .collect();
        let q = closest_point_on_simplex(&face, p);
        let d: f64 = q.iter().zip(p).map(|(a, b)| (a - b) * (a - b)).sum();
        if best.as_ref().map(|(bd, _)| d < *bd).unwrap_or(true) {
            best = Some((d, q));
        }
    }
    best.unwrap().1
}

/// Distance between two simplices by alternating closest-point projection
/// (convex, so the alternation converges to the global minimum).
pub fn simplex_distance(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    let mut p: Vec<f64> = {
        let k = a.len() as f64;
        let d = a[0].len();
        (0..d).map(|i| a.iter().map(|v| v[i]).sum::<f64>() / k).collect()
    };
    let mut dist = f64::INFINITY;
    for _ in 0..200 {
        let q = closest_point_on_simplex(b, &p);
        let p2 = closest_point_on_simplex(a, &q);
        let d: f64 = p2.iter().zip(&q).map(|(x, y)| (x - y) * (x - y)).sum::<f64>();
        let d = d.sqrt();
        if (dist - d).abs() < 1e-14 {
            return d;
        }
        dist = d;
        p = p2;
    }
    dist
}

/// Distance from each vertex to the patch boundary, measured along mesh
/// edges and capped at `limit` (Dijkstra from all boundary vertices).
pub fn boundary_distance(patch: &PatchMesh, limit: f64) -> Vec<f64> {
    use std::cmp::Reverse;
    use std::collections::BinaryHeap;
    let nv = patch.vertices.len();
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); nv];
    for cell in &patch.cells {
        for (a, &i) in cell.iter().enumerate() {
            for &j in &cell[a + 1..] {
                adj[i].push(j);
                adj[j].push(i);
            }
        }
    }
    let mut dist = vec![f64::INFINITY; nv];
    // f64 keys encoded as ordered integers (distances are nonnegative).
    let mut heap: BinaryHeap<Reverse<(u64, usize)>> = BinaryHeap::new();
    for (face, _) in &patch.boundary_marks {
        for &v in face {
            if dist[v] > 0.0 {
                dist[v] = 0.0;
                heap.push(Reverse((0u64, v)));
            }
        }
    }
    while let Some(Reverse((dbits, v))) = heap.pop() {
        let d = f64::from_bits(dbits);
        if d > dist[v] || d >= limit {
            continue;
        }
        for &w in &adj[v] {
            let e: f64 = patch.vertices[v]
                .iter()
                .zip(&patch.vertices[w])
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            let nd = d + e;
            if nd < dist[w] {
                dist[w] = nd;
                heap.push(Reverse((nd.to_bits(), w)));
            }
        }
    }
    dist
}

/// Pairs of intersecting cells between distinct placed patches, via a
/// spatial hash over cell bounding boxes. Cells closer than `margin` to
/// their own patch boundary are skipped (tangent seams are legitimate
/// contact). Returns offending (patch_i, cell_i, patch_j, cell_j).
pub fn intersecting_pairs(
    patches: &[PatchMesh],
    margin: f64,
    contact_tol: f64,
    mode: ExecMode,
) -> Vec<(usize, usize, usize, usize)> {
    #[derive(Clone)]
    struct CellRef {
        patch: usize,
        cell: usize,
        verts: Vec<Vec<f64>>,
        lo: Vec<f64>,
        hi: Vec<f64>,
    }
    let mut cells: Vec<CellRef> = Vec::new();
    for (pi, patch) in patches.iter().enumerate() {
        // Geodesic distance (along mesh edges) from the patch boundary;
        // cells with a vertex closer than `margin` are excluded as
        // legitimate seam contact.
        let bdist = boundary_distance(patch, margin);
        for (ci, cell) in patch.cells.iter().enumerate() {
            if cell.iter().any(|&v| bdist[v] < margin) {
                continue;
            }
            let verts: Vec<Vec<f64>> = cell.iter().map(|&v| patch.vertices[v].clone()).collect();
            let d = patch.dim;
            let mut lo = vec![f64::INFINITY; d];
            let mut hi = vec![f64::NEG_INFINITY; d];
            for v in &verts {
                for i in 0..d {
                    lo[i] = lo[i].min(v[i]);
                    hi[i] = hi[i].max(v[i]);
                }
            }
            cells.push(CellRef {
                patch: pi,
                cell: ci,
                verts,
                lo,
                hi,
            });
        }
    }
    if cells.is_empty() {
        return Vec::new();
    }
    // Bucket size from the largest cell extent.
    let dim = patches[0].dim;
    let bucket = cells
        .iter()
        .flat_map(|c| (0..dim).map(|i| c.hi[i] - c.lo[i]).collect::<Vec<_>>())
        .fold(0.0f64, f64::max)
        .max(1e-9)
        * 1.5;
    let key_of = |x: f64| (x / bucket).floor() as i64;
    let mut hash: HashMap<Vec<i64>, Vec<usize>> = HashMap::new();
    for (i, c) in cells.iter().enumerate() {
        let lo_k: Vec<i64> = c.lo.iter().map(|&x| key_of(x)).collect();
        let hi_k: Vec<i64> = c.hi.iter().map(|&x| key_of(x)).collect();
        let mut keys = vec![vec![]];
        for d in 0..dim {
            keys = keys
                .into_iter()
                .flat_map(|k| {
                    (lo_k[d]..=hi_k[d]).map(move |v| {
                        let mut kk = k.clone();
                        kk.push(v);
                        kk
                    })
                })
                .collect();
        }
        for k in keys {
            hash.entry(k).or_default().push(i);
        }
    }
    let mut candidates: Vec<(usize, usize)> = hash
        .values()
        .flat_map(|ids| {
            let mut pairs = Vec::new();
            for (a, &i) in ids.iter().enumerate() {
                for &j in &ids[a + 1..] {
                    if cells[i].patch != cells[j].patch {
                        pairs.push((i.min(j), i.max(j)));
                    }
                }
            }
            pairs
        })
        .collect();
    candidates.sort_unstable();
    candidates.dedup();

    let hits: Vec<Option<(usize, usize, usize, usize)>> =
        exec::map_indexed(mode, candidates.len(), |k| {
            let (i, j) = candidates[k];
            let (a, b) = (&cells[i], &cells[j]);
            // Box overlap pre-test.
            for d in 0..dim {
                if a.hi[d] < b.lo[d] - contact_tol || b.hi[d] < a.lo[d] - contact_tol {
                    return None;
                }
            }
            let dist = simplex_distance(&a.verts, &b.verts);
            (dist < contact_tol).then_some((a.patch, a.cell, b.patch, b.cell))
        });
    hits.into_iter().flatten().collect()
}

/// Clip a mesh of tetrahedral cells in R^4 by the hyperplane n.x = c and
/// return the cross-section as a triangle mesh in hyperplane coordinates.
pub fn slice_mesh_4d(mesh: &PatchMesh, normal: &[f64], offset: f64) -> Result<PatchMesh> {
    if mesh.dim != 4 {
        return Err(Error::DimensionMismatch {
            expected: 4,
            got: mesh.dim,
        });
    }
    // Orthonormal basis of the hyperplane.
    let mut basis: Vec<Vec<f64>> = Vec::new();
    for seed in 0..4 {
        let mut v = vec![0.0; 4];
        v[seed] = 1.0;
        // Remove the normal component and previous basis components.
        let nn: f64 = normal.iter().map(|x| x * x).sum();
        let t: f64 = normal.iter().zip(&v).map(|(a, b)| a * b).sum::<f64>() / nn;
        for i in 0..4 {
            v[i] -= t * normal[i];
        }
        for b in &basis {
            let t: f64 = b.iter().zip(&v).map(|(a, b)| a * b).sum();
            for i in 0..4 {
                v[i] -= t * b[i];
            }
        }
        let norm: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-9 {
            basis.push(v.into_iter().map(|x| x / norm).collect());
        }
        if basis.len() == 3 {
            break;
        }
    }
    let origin: Vec<f64> = {
        let nn: f64 = normal.iter().map(|x| x * x).sum();
        normal.iter().map(|&x| x * offset / nn).collect()
    };
    let project = |p: &[f64]| -> Vec<f64> {
        basis
            .iter()
            .map(|b| b.iter().zip(p.iter().zip(&origin)).map(|(bi, (pi, oi))| bi * (pi - oi)).sum())
            .collect()
    };

    let side: Vec<f64> = mesh
        .vertices
        .iter()
        .map(|v| normal.iter().zip(v).map(|(a, b)| a * b).sum::<f64>() - offset)
        .collect();
    let mut vertices: Vec<Vec<f64>> = Vec::new();
    let mut cells: Vec<Vec<usize>> = Vec::new();
    let mut edge_points: HashMap<(usize, usize), usize> = HashMap::new();
    for cell in &mesh.cells {
        let mut pts: Vec<usize> = Vec::new();
        for a in 0..cell.len() {
            for b in a + 1..cell.len() {
                let (i, j) = (cell[a], cell[b]);
                let (si, sj) = (side[i], side[j]);
                if (si < 0.0) != (sj < 0.0) {
                    let key = (i.min(j), i.max(j));
                    let id = *edge_points.entry(key).or_insert_with(|| {
                        let t = si / (si - sj);
                        let p: Vec<f64> = mesh.vertices[i]
                            .iter()
                            .zip(&mesh.vertices[j])
                            .map(|(x, y)| x + t * (y - x))
                            .collect();
                        vertices.push(project(&p));
                        vertices.len() - 1
                    });
                    if !pts.contains(&id) {
                        pts.push(id);
                    }
                }
            }
        }
        match pts.len() {
            3 => cells.push(pts),
            4 => {
                // Order the quad by angle around its centroid, then fan.
                let c: Vec<f64> = (0..3)
                    .map(|d| pts.iter().map(|&p| vertices[p][d]).sum::<f64>() / 4.0)
                    .collect();
                // Use the first edge as the angular reference in the quad's
                // own plane.
                let e0: Vec<f64> = (0..3).map(|d| vertices[pts[0]][d] - c[d]).collect();
                let e1: Vec<f64> = (0..3).map(|d| vertices[pts[1]][d] - c[d]).collect();
                let cross = [
                    e0[1] * e1[2] - e0[2] * e1[1],
                    e0[2] * e1[0] - e0[0] * e1[2],
                    e0[0] * e1[1] - e0[1] * e1[0],
                ];
                let mut angles: Vec<(f64, usize)> = pts
                    .iter()
                    .map(|&p| {
                        let d: Vec<f64> = (0..3).map(|k| vertices[p][k] - c[k]).collect();
                        let x: f64 = d.iter().zip(&e0).map(|(a, b)| a * b).sum();
                        let cy = [
                            e0[1] * d[2] - e0[2] * d[1],
                            e0[2] * d[0] - e0[0] * d[2],
                            e0[0] * d[1] - e0[1] * d[0],
                        ];
                        let y: f64 = cy.iter().zip(&cross).map(|(a, b)| a * b).sum::<f64>()
                            / cross.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-30);
                        (y.atan2(x), p)
                    })
                    .collect();
                angles.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
                let ordered: Vec<usize> = angles.into_iter().map(|(_, p)| p).collect();
                cells.push(vec![ordered[0], ordered[1], ordered[2]]);
                cells.push(vec![ordered[0], ordered[2], ordered[3]]);
            }
            _ => {}
        }
    }
    if cells.is_empty() {
        return Err(Error::EmptyIntersection);
    }
    let mut out = PatchMesh {
        dim: 3,
        vertices,
        cells,
        boundary_marks: Vec::new(),
    };
    out.compute_boundary();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::rat;
    use crate::grid::discretize;
    use crate::mse::{solve_mse, BoundaryData, SolveOptions};
    use crate::polytope::Polytope;

    fn square() -> Polytope {
        Polytope::from_vertices(
            2,
            vec![
                vec![rat(-1), rat(-1)],
                vec![rat(-1), rat(1)],
                vec![rat(1), rat(-1)],
                vec![rat(1), rat(1)],
            ],
        )
        .unwrap()
    }

    fn solved_patch() -> PatchMesh {
        let data = BoundaryData::from_fn(|w: &[f64]| 0.2 * w[0] + 0.1 * w[1]);
        let g = discretize(&square(), 0.25).unwrap();
        let gf = solve_mse(&g, &data, &SolveOptions::default()).unwrap();
        lift_graph(&gf, |w, v| vec![w[0], w[1], v])
    }

    #[test]
    fn lifted_mesh_structure() {
        let mesh = solved_patch();
        assert_eq!(mesh.dim, 3);
        assert!(!mesh.cells.is_empty());
        assert!(mesh.cells.iter().all(|c| c.len() == 3));
        // Boundary facets form a closed loop on the square's boundary.
        assert!(!mesh.boundary_marks.is_empty());
        for (face, _) in &mesh.boundary_marks {
            for &v in face {
                let p = &mesh.vertices[v];
                let on = (p[0].abs() - 1.0).abs() < 1e-9 || (p[1].abs() - 1.0).abs() < 1e-9;
                assert!(on, "boundary vertex off the square edge: {p:?}");
            }
        }
        // The plane is reproduced: all vertices satisfy z = .2x + .1y.
        for v in &mesh.vertices {
            assert!((v[2] - 0.2 * v[0] - 0.1 * v[1]).abs() < 1e-7);
        }
    }

    #[test]
    fn ndoff_roundtrip_and_errors() {
        let mesh = solved_patch();
        let mut buf = Vec::new();
        mesh.write_ndoff(&mut buf).unwrap();
        let back = PatchMesh::read_ndoff(&mut std::io::BufReader::new(&buf[..])).unwrap();
        assert_eq!(back.dim, mesh.dim);
        assert_eq!(back.vertices.len(), mesh.vertices.len());
        assert_eq!(back.cells, mesh.cells);
        let bad = b"NDOFF\n3\n1 1\n0 0 0\n3 0 0 5\n";
        assert!(PatchMesh::read_ndoff(&mut std::io::BufReader::new(&bad[..])).is_err());
        let mut off = Vec::new();
        mesh.write_off(&mut off).unwrap();
        assert!(String::from_utf8(off).unwrap().starts_with("OFF\n"));
        let mut obj = Vec::new();
        mesh.write_obj(&mut obj).unwrap();
        assert!(String::from_utf8(obj).unwrap().contains("\nf "));
    }

    #[test]
    fn simplex_predicates() {
        let tri_a = vec![vec![0.0, 0.0, 0.0], vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0]];
        let p = vec![0.25, 0.25, 1.0];
        let q = closest_point_on_simplex(&tri_a, &p);
        assert!((q[0] - 0.25).abs() < 1e-10 && (q[2]).abs() < 1e-10);
        let tri_b = vec![vec![0.0, 0.0, 0.5], vec![1.0, 0.0, 0.5], vec![0.0, 1.0, 0.5]];
        let d = simplex_distance(&tri_a, &tri_b);
        assert!((d - 0.5).abs() < 1e-10, "d {d}");
        // Crossing triangles have distance 0.
        let tri_c = vec![
            vec![0.2, 0.2, -0.5],
            vec![0.2, 0.2, 0.5],
            vec![0.9, 0.9, 0.0],
        ];
        assert!(simplex_distance(&tri_a, &tri_c) < 1e-12);
    }

    #[test]
    fn intersection_scan_flags_overlap() {
        let mesh = solved_patch();
        // A far translate does not intersect.
        let shift = crate::isometry::translate(vec![rat(10), rat(0), rat(0)]);
        let far = mesh.transformed(&shift);
        let hits = intersecting_pairs(
            &[mesh.clone(), far],
            0.3,
            1e-9,
            ExecMode::default(),
        );
        assert!(hits.is_empty());
        // A slightly lifted copy crosses the original (the plane is tilted),
        // and the scan reports it.
        let mut crossed = mesh.clone();
        for v in &mut crossed.vertices {
            v[2] = -v[2];
        }
        let hits = intersecting_pairs(
            &[mesh, crossed],
            0.3,
            1e-9,
            ExecMode::default(),
        );
        assert!(!hits.is_empty());
    }

    #[test]
    fn slice_tetrahedron() {
        // One tetrahedron in R^4 sliced by x_4 = offset.
        let mesh = PatchMesh {
            dim: 4,
            vertices: vec![
                vec![0.0, 0.0, 0.0, 0.0],
                vec![1.0, 0.0, 0.0, 0.0],
                vec![0.0, 1.0, 0.0, 0.0],
                vec![0.0, 0.0, 0.0, 1.0],
            ],
            cells: vec![vec![0, 1, 2, 3]],
            boundary_marks: Vec::new(),
        };
        let cut = slice_mesh_4d(&mesh, &[0.0, 0.0, 0.0, 1.0], 0.5).unwrap();
        assert_eq!(cut.dim, 3);
        assert_eq!(cut.cells.len(), 1);
        assert_eq!(cut.vertices.len(), 3);
        assert!(matches!(
            slice_mesh_4d(&mesh, &[0.0, 0.0, 0.0, 1.0], 2.0),
            Err(Error::EmptyIntersection)
        ));
    }
}
