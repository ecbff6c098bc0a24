//! Triangulated compact oriented surfaces with boundary.
//!
//! A [`TriangulatedSurface`] is an indexed triangle list with a derived edge
//! table. Construction validates manifoldness, makes the orientation globally
//! consistent, extracts the boundary loops and rejects degenerate triangles.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Relative area threshold below which a triangle counts as degenerate.
const DEGENERATE_REL_AREA: f64 = 1e-14;

#[derive(Debug, Error)]
pub enum MeshError {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("non-manifold edge ({0}, {1}) shared by more than two triangles")]
    NonManifold(usize, usize),
    #[error("surface is closed (no boundary edges)")]
    ClosedSurface,
    #[error("triangle orientations cannot be made globally consistent")]
    Orientation,
    #[error("degenerate triangle {0} (area below threshold)")]
    DegenerateTriangle(usize),
    #[error("inconsistent topology: chi={chi}, boundary loops={loops}")]
    Topology { chi: i64, loops: usize },
    #[error("resolution must be at least 1")]
    Resolution,
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

/// Supported ASCII mesh file formats.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MeshFormat {
    Off,
    Obj,
}

/// Built-in analytic test surfaces.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum BuiltinSurface {
    /// Unit equatorial disk `{z = 0, x^2 + y^2 <= 1}` in the unit ball.
    FlatDisk,
    /// The rotationally symmetric minimal annulus meeting the unit sphere
    /// orthogonally. `neck` is the scale factor c, `sigma` the half-range of
    /// the profile parameter, with `sigma * tanh(sigma) = 1`.
    CriticalCatenoid { neck: f64, sigma: f64 },
    /// Planar annulus with the given inner radius; a parameter surface only.
    FlatAnnulus { inner: f64 },
}

impl fmt::Display for BuiltinSurface {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BuiltinSurface::FlatDisk => write!(f, "flat_disk"),
            BuiltinSurface::CriticalCatenoid { .. } => write!(f, "critical_catenoid"),
            BuiltinSurface::FlatAnnulus { .. } => write!(f, "flat_annulus"),
        }
    }
}

/// Genus, boundary count and Euler characteristic of a surface.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TopologyInvariants {
    pub genus: u32,
    pub boundary_count: u32,
    pub euler_char: i64,
}

/// An oriented triangle mesh with marked boundary loops.
///
/// Immutable after construction; all validation happens in [`Self::new`].
#[derive(Debug, Clone)]
pub struct TriangulatedSurface {
    vertices: Vec<Vector3<f64>>,
    triangles: Vec<[usize; 3]>,
    boundary_loops: Vec<Vec<usize>>,
    edge_count: usize,
    builtin: Option<BuiltinSurface>,
}

impl TriangulatedSurface {
    /// Validates and orients a raw triangle soup.
    pub fn new(
        vertices: Vec<Vector3<f64>>,
        triangles: Vec<[usize; 3]>,
    ) -> Result<Self, MeshError> {
        Self::build(vertices, triangles, None)
    }

    fn build(
        vertices: Vec<Vector3<f64>>,
        mut triangles: Vec<[usize; 3]>,
        builtin: Option<BuiltinSurface>,
    ) -> Result<Self, MeshError> {
        for (t, tri) in triangles.iter().enumerate() {
            for &v in tri {
                if v >= vertices.len() {
                    return Err(MeshError::Parse(format!(
                        "triangle {t} references vertex {v} out of range"
                    )));
                }
            }
            if tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2] {
                return Err(MeshError::DegenerateTriangle(t));
            }
        }
        check_degenerate(&vertices, &triangles)?;

        // Undirected edge table with incidence counts; manifoldness must be
        // established before orientation makes sense.
        let mut edge_use: BTreeMap<(usize, usize), u8> = BTreeMap::new();
        for tri in &triangles {
            for e in tri_edges(tri) {
                let key = undirected(e);
                let c = edge_use.entry(key).or_insert(0);
                *c += 1;
                if *c > 2 {
                    return Err(MeshError::NonManifold(key.0, key.1));
                }
            }
        }
        orient_consistently(&mut triangles)?;
        let edge_count = edge_use.len();
        if edge_use.values().all(|&c| c == 2) {
            return Err(MeshError::ClosedSurface);
        }

        let boundary_loops = extract_boundary_loops(&triangles, &edge_use)?;

        let surface = Self {
            vertices,
            triangles,
            boundary_loops,
            edge_count,
            builtin,
        };
        // Genus must come out a nonnegative integer.
        surface.topology()?;
        Ok(surface)
    }

    pub fn vertices(&self) -> &[Vector3<f64>] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    /// Ordered cycles of boundary vertex ids, one per boundary component.
    pub fn boundary_loops(&self) -> &[Vec<usize>] {
        &self.boundary_loops
    }

    pub fn builtin(&self) -> Option<BuiltinSurface> {
        self.builtin
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    pub fn face_count(&self) -> usize {
        self.triangles.len()
    }

    /// True if vertex `v` lies on the boundary.
    pub fn is_boundary_vertex(&self, v: usize) -> bool {
        self.boundary_vertex_set().contains(&v)
    }

    pub fn boundary_vertex_set(&self) -> BTreeSet<usize> {
        self.boundary_loops.iter().flatten().copied().collect()
    }

    /// Directed boundary edges in loop order.
    pub fn boundary_edges(&self) -> Vec<(usize, usize)> {
        let mut edges = Vec::new();
        for bl in &self.boundary_loops {
            for i in 0..bl.len() {
                edges.push((bl[i], bl[(i + 1) % bl.len()]));
            }
        }
        edges
    }

    /// Computes (g, m, chi) from the counts, checking `chi = 2 - 2g - m`.
    pub fn topology(&self) -> Result<TopologyInvariants, MeshError> {
        let v = self.vertices.len() as i64;
        let e = self.edge_count as i64;
        let f = self.triangles.len() as i64;
        let chi = v - e + f;
        let m = self.boundary_loops.len();
        let two_g = 2 - chi - m as i64;
        if two_g < 0 || two_g % 2 != 0 {
            return Err(MeshError::Topology { chi, loops: m });
        }
        Ok(TopologyInvariants {
            genus: (two_g / 2) as u32,
            boundary_count: m as u32,
            euler_char: chi,
        })
    }

    pub fn triangle_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangles[t];
        let ab = self.vertices[b] - self.vertices[a];
        let ac = self.vertices[c] - self.vertices[a];
        0.5 * ab.cross(&ac).norm()
    }

    pub fn total_area(&self) -> f64 {
        (0..self.triangles.len()).map(|t| self.triangle_area(t)).sum()
    }

    pub fn boundary_length(&self) -> f64 {
        self.boundary_edges()
            .iter()
            .map(|&(a, b)| (self.vertices[b] - self.vertices[a]).norm())
            .sum()
    }

    /// Mean edge length, used as the mesh scale h.
    pub fn mean_edge_length(&self) -> f64 {
        let mut seen = BTreeSet::new();
        let mut total = 0.0;
        for tri in &self.triangles {
            for e in tri_edges(tri) {
                let key = undirected(e);
                if seen.insert(key) {
                    total += (self.vertices[key.1] - self.vertices[key.0]).norm();
                }
            }
        }
        total / seen.len() as f64
    }

    /// Uniform 4-split refinement. Boundary (and for built-ins, interior)
    /// vertices are reprojected onto the analytic surface; user meshes are
    /// refined affinely. Topology invariants are unchanged.
    pub fn refine(&self, levels: u32) -> Self {
        let mut current = self.clone();
        for _ in 0..levels {
            current = current.refine_once();
        }
        current
    }

    fn refine_once(&self) -> Self {
        let mut vertices = self.vertices.clone();
        let mut midpoint: BTreeMap<(usize, usize), usize> = BTreeMap::new();
        let boundary: BTreeSet<(usize, usize)> = self
            .boundary_edges()
            .iter()
            .map(|&e| undirected(e))
            .collect();
        let mut triangles = Vec::with_capacity(4 * self.triangles.len());

        for tri in &self.triangles {
            let mut mids = [0usize; 3];
            for (k, e) in tri_edges(tri).into_iter().enumerate() {
                let key = undirected(e);
                mids[k] = *midpoint.entry(key).or_insert_with(|| {
                    let mut p = 0.5 * (vertices[key.0] + vertices[key.1]);
                    if let Some(b) = self.builtin {
                        p = reproject(b, p, boundary.contains(&key));
                    }
                    vertices.push(p);
                    vertices.len() - 1
                });
            }
            let [a, b, c] = *tri;
            let [mab, mbc, mca] = mids;
            triangles.push([a, mab, mca]);
            triangles.push([mab, b, mbc]);
            triangles.push([mca, mbc, c]);
            triangles.push([mab, mbc, mca]);
        }

        Self::build(vertices, triangles, self.builtin)
            .expect("refinement preserves validity")
    }
}

fn tri_edges(tri: &[usize; 3]) -> [(usize, usize); 3] {
    [(tri[0], tri[1]), (tri[1], tri[2]), (tri[2], tri[0])]
}

fn undirected(e: (usize, usize)) -> (usize, usize) {
    if e.0 < e.1 {
        e
    } else {
        (e.1, e.0)
    }
}

fn check_degenerate(
    vertices: &[Vector3<f64>],
    triangles: &[[usize; 3]],
) -> Result<(), MeshError> {
    let mut lo = Vector3::repeat(f64::INFINITY);
    let mut hi = Vector3::repeat(f64::NEG_INFINITY);
    for p in vertices {
        lo = lo.inf(p);
        hi = hi.sup(p);
    }
    let ext = hi - lo;
    let mut sides = [ext.x.abs(), ext.y.abs(), ext.z.abs()];
    sides.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let bbox_area = (sides[1] * sides[2]).max(f64::MIN_POSITIVE);
    for (t, tri) in triangles.iter().enumerate() {
        let ab = vertices[tri[1]] - vertices[tri[0]];
        let ac = vertices[tri[2]] - vertices[tri[0]];
        if 0.5 * ab.cross(&ac).norm() < DEGENERATE_REL_AREA * bbox_area {
            return Err(MeshError::DegenerateTriangle(t));
        }
    }
    Ok(())
}

/// Flips triangles via breadth-first traversal so that every interior edge is
/// traversed oppositely by its two triangles. Fails on an orientation conflict
/// (e.g. a Moebius configuration).
fn orient_consistently(triangles: &mut [[usize; 3]]) -> Result<(), MeshError> {
    let mut by_edge: BTreeMap<(usize, usize), Vec<usize>> = BTreeMap::new();
    for (t, tri) in triangles.iter().enumerate() {
        for e in tri_edges(tri) {
            by_edge.entry(undirected(e)).or_default().push(t);
        }
    }
    let n = triangles.len();
    let mut state = vec![0u8; n]; // 0 unvisited, 1 keep, 2 flipped
    for start in 0..n {
        if state[start] != 0 {
            continue;
        }
        state[start] = 1;
        let mut queue = std::collections::VecDeque::from([start]);
        while let Some(t) = queue.pop_front() {
            let edges_t = directed_edges(triangles[t], state[t] == 2);
            for e in edges_t {
                for &s in &by_edge[&undirected(e)] {
                    if s == t {
                        continue;
                    }
                    // `s` must traverse this edge in the opposite direction.
                    let wants_flip = directed_edges(triangles[s], false).contains(&e);
                    let needed = if wants_flip { 2 } else { 1 };
                    if state[s] == 0 {
                        state[s] = needed;
                        queue.push_back(s);
                    } else if state[s] != needed {
                        return Err(MeshError::Orientation);
                    }
                }
            }
        }
    }
    for (t, tri) in triangles.iter_mut().enumerate() {
        if state[t] == 2 {
            tri.swap(1, 2);
        }
    }
    // Re-verify: every shared edge must now be traversed oppositely.
    let mut directed: BTreeSet<(usize, usize)> = BTreeSet::new();
    for tri in triangles.iter() {
        for e in tri_edges(tri) {
            if !directed.insert(e) {
                return Err(MeshError::Orientation);
            }
        }
    }
    Ok(())
}

fn directed_edges(tri: [usize; 3], flipped: bool) -> [(usize, usize); 3] {
    let t = if flipped { [tri[0], tri[2], tri[1]] } else { tri };
    tri_edges(&t)
}

/// Chains the once-used edges into closed loops following the triangle
/// orientation. Loops are normalized to start at their smallest vertex and
/// sorted, so the result does not depend on triangle order.
fn extract_boundary_loops(
    triangles: &[[usize; 3]],
    edge_use: &BTreeMap<(usize, usize), u8>,
) -> Result<Vec<Vec<usize>>, MeshError> {
    let mut next: BTreeMap<usize, usize> = BTreeMap::new();
    for tri in triangles {
        for (u, v) in tri_edges(tri) {
            if edge_use[&undirected((u, v))] == 1 && next.insert(u, v).is_some() {
                // Two boundary edges leaving one vertex: pinch point.
                return Err(MeshError::NonManifold(u, v));
            }
        }
    }
    let mut remaining: BTreeSet<usize> = next.keys().copied().collect();
    let mut loops = Vec::new();
    while let Some(&start) = remaining.iter().next() {
        let mut cycle = vec![start];
        remaining.remove(&start);
        let mut cur = next[&start];
        while cur != start {
            if !remaining.remove(&cur) {
                return Err(MeshError::Orientation);
            }
            cycle.push(cur);
            cur = next[&cur];
        }
        let min_pos = cycle
            .iter()
            .enumerate()
            .min_by_key(|&(_, &v)| v)
            .map(|(i, _)| i)
            .unwrap();
        cycle.rotate_left(min_pos);
        loops.push(cycle);
    }
    loops.sort_by_key(|l| l[0]);
    Ok(loops)
}

// ---------------------------------------------------------------------------
// File formats
// ---------------------------------------------------------------------------

/// Loads an ASCII OFF or OBJ mesh. Only triangular faces are accepted; OBJ
/// normals and texture coordinates are ignored.
pub fn load_mesh(path: &Path, format: MeshFormat) -> Result<TriangulatedSurface, MeshError> {
    let text = std::fs::read_to_string(path)?;
    let (vertices, triangles) = match format {
        MeshFormat::Off => parse_off(&text)?,
        MeshFormat::Obj => parse_obj(&text)?,
    };
    TriangulatedSurface::new(vertices, triangles)
}

fn parse_off(text: &str) -> Result<(Vec<Vector3<f64>>, Vec<[usize; 3]>), MeshError> {
    let mut tokens = text
        .lines()
        .map(|l| l.split('#').next().unwrap_or(""))
        .flat_map(|l| l.split_whitespace())
        .peekable();
    if tokens.peek() == Some(&"OFF") {
        tokens.next();
    }
    let mut take = |what: &str| -> Result<f64, MeshError> {
        tokens
            .next()
            .ok_or_else(|| MeshError::Parse(format!("unexpected end of file reading {what}")))?
            .parse::<f64>()
            .map_err(|e| MeshError::Parse(format!("bad {what}: {e}")))
    };
    let nv = take("vertex count")? as usize;
    let nf = take("face count")? as usize;
    let _ne = take("edge count")?;
    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        vertices.push(Vector3::new(take("x")?, take("y")?, take("z")?));
    }
    let mut triangles = Vec::with_capacity(nf);
    for _ in 0..nf {
        let k = take("face valence")? as usize;
        if k != 3 {
            return Err(MeshError::Parse(format!("non-triangular face (valence {k})")));
        }
        let a = take("index")? as usize;
        let b = take("index")? as usize;
        let c = take("index")? as usize;
        triangles.push([a, b, c]);
    }
    Ok((vertices, triangles))
}

fn parse_obj(text: &str) -> Result<(Vec<Vector3<f64>>, Vec<[usize; 3]>), MeshError> {
    let mut vertices = Vec::new();
    let mut triangles = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        let mut parts = line.split_whitespace();
        match parts.next() {
            Some("v") => {
                let mut coord = |what: &str| -> Result<f64, MeshError> {
                    parts
                        .next()
                        .ok_or_else(|| {
                            MeshError::Parse(format!("line {}: missing {what}", ln + 1))
                        })?
                        .parse()
                        .map_err(|e| MeshError::Parse(format!("line {}: {e}", ln + 1)))
                };
                vertices.push(Vector3::new(coord("x")?, coord("y")?, coord("z")?));
            }
            Some("f") => {
                let idx: Vec<usize> = parts
                    .map(|p| {
                        let first = p.split('/').next().unwrap_or(p);
                        first.parse::<i64>().map_err(|e| {
                            MeshError::Parse(format!("line {}: {e}", ln + 1))
                        })
                    })
                    .collect::<Result<Vec<i64>, _>>()?
                    .into_iter()
                    .map(|i| (i - 1) as usize)
                    .collect();
                if idx.len() != 3 {
                    return Err(MeshError::Parse(format!(
                        "line {}: non-triangular face (valence {})",
                        ln + 1,
                        idx.len()
                    )));
                }
                triangles.push([idx[0], idx[1], idx[2]]);
            }
            _ => {}
        }
    }
    Ok((vertices, triangles))
}

// ---------------------------------------------------------------------------
// Built-in surfaces
// ---------------------------------------------------------------------------

/// Solves `sigma * tanh(sigma) = 1` by bisection; the profile half-range of
/// the critical catenoid.
pub fn catenoid_sigma() -> f64 {
    bisect(|s| s * s.tanh() - 1.0, 0.5, 2.0, 1e-14)
}

/// Returns (neck scale c, sigma) with the boundary circle on the unit sphere.
pub fn catenoid_parameters() -> (f64, f64) {
    let sigma = catenoid_sigma();
    let c = 1.0 / (sigma.cosh().powi(2) + sigma * sigma).sqrt();
    (c, sigma)
}

fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let flo = f(lo);
    assert!(flo * f(hi) <= 0.0, "bisection bracket must straddle the root");
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if f(mid) * flo <= 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Generates one of the built-in analytic surfaces at the given resolution.
pub fn builtin_surface(
    name: BuiltinSurface,
    resolution: u32,
) -> Result<TriangulatedSurface, MeshError> {
    if resolution == 0 {
        return Err(MeshError::Resolution);
    }
    match name {
        BuiltinSurface::FlatDisk => flat_disk(resolution),
        BuiltinSurface::CriticalCatenoid { .. } => critical_catenoid(resolution),
        BuiltinSurface::FlatAnnulus { .. } => flat_annulus(resolution, 0.5),
    }
}

/// Convenience constructor taking the builtin by name.
pub fn builtin_by_name(name: &str, resolution: u32) -> Result<TriangulatedSurface, MeshError> {
    let kind = match name {
        "flat_disk" => BuiltinSurface::FlatDisk,
        "critical_catenoid" => {
            let (neck, sigma) = catenoid_parameters();
            BuiltinSurface::CriticalCatenoid { neck, sigma }
        }
        "flat_annulus" => BuiltinSurface::FlatAnnulus { inner: 0.5 },
        other => return Err(MeshError::Parse(format!("unknown builtin '{other}'"))),
    };
    builtin_surface(kind, resolution)
}

/// Unit disk meshed with `resolution` concentric rings of a hexagonal fan.
fn flat_disk(resolution: u32) -> Result<TriangulatedSurface, MeshError> {
    let r = resolution as usize;
    let mut vertices = vec![Vector3::zeros()];
    let mut ring_start = vec![0usize; r + 1];
    for i in 1..=r {
        ring_start[i] = vertices.len();
        let n = 6 * i;
        let radius = i as f64 / r as f64;
        for j in 0..n {
            let theta = 2.0 * std::f64::consts::PI * j as f64 / n as f64;
            vertices.push(Vector3::new(radius * theta.cos(), radius * theta.sin(), 0.0));
        }
    }
    let mut triangles = Vec::new();
    // Innermost ring: fan around the center.
    for j in 0..6 {
        triangles.push([0, 1 + j, 1 + (j + 1) % 6]);
    }
    // Between ring i and ring i+1: each of the 6 sectors spans i inner and
    // i+1 outer edges, giving 2i+1 corner-aligned triangles per sector.
    for i in 1..r {
        let inner = ring_start[i];
        let outer = ring_start[i + 1];
        let ni = 6 * i;
        let no = 6 * (i + 1);
        for s in 0..6 {
            for k in 0..i {
                let a = inner + (s * i + k) % ni;
                let b = outer + (s * (i + 1) + k) % no;
                let c = outer + (s * (i + 1) + k + 1) % no;
                let d = inner + (s * i + k + 1) % ni;
                triangles.push([a, b, c]);
                triangles.push([a, c, d]);
            }
            // Closing triangle at the sector corner.
            let a = inner + ((s + 1) * i) % ni;
            let b = outer + (s * (i + 1) + i) % no;
            let c = outer + ((s + 1) * (i + 1)) % no;
            triangles.push([a, b, c]);
        }
    }
    TriangulatedSurface::build(vertices, triangles, Some(BuiltinSurface::FlatDisk))
}

/// Catenoid `(c cosh(s) cos t, c cosh(s) sin t, c s)` for `s` in
/// `[-sigma, sigma]`, scaled so the boundary circles lie on the unit sphere.
fn critical_catenoid(resolution: u32) -> Result<TriangulatedSurface, MeshError> {
    let (c, sigma) = catenoid_parameters();
    let n_s = resolution as usize;
    let n_t = 4 * resolution as usize;
    let mut vertices = Vec::with_capacity((n_s + 1) * n_t);
    for i in 0..=n_s {
        let s = -sigma + 2.0 * sigma * i as f64 / n_s as f64;
        let radius = c * s.cosh();
        for j in 0..n_t {
            let theta = 2.0 * std::f64::consts::PI * j as f64 / n_t as f64;
            vertices.push(Vector3::new(radius * theta.cos(), radius * theta.sin(), c * s));
        }
    }
    let mut triangles = Vec::new();
    for i in 0..n_s {
        for j in 0..n_t {
            let a = i * n_t + j;
            let b = i * n_t + (j + 1) % n_t;
            let c0 = (i + 1) * n_t + j;
            let d = (i + 1) * n_t + (j + 1) % n_t;
            triangles.push([a, b, d]);
            triangles.push([a, d, c0]);
        }
    }
    TriangulatedSurface::build(
        vertices,
        triangles,
        Some(BuiltinSurface::CriticalCatenoid { neck: c, sigma }),
    )
}

/// Planar annulus between `inner` and 1 in the z = 0 plane.
fn flat_annulus(resolution: u32, inner: f64) -> Result<TriangulatedSurface, MeshError> {
    let n_r = resolution as usize;
    let n_t = 6 * resolution as usize;
    let mut vertices = Vec::new();
    for i in 0..=n_r {
        let radius = inner + (1.0 - inner) * i as f64 / n_r as f64;
        for j in 0..n_t {
            let theta = 2.0 * std::f64::consts::PI * j as f64 / n_t as f64;
            vertices.push(Vector3::new(radius * theta.cos(), radius * theta.sin(), 0.0));
        }
    }
    let mut triangles = Vec::new();
    for i in 0..n_r {
        for j in 0..n_t {
            let a = i * n_t + j;
            let b = i * n_t + (j + 1) % n_t;
            let c = (i + 1) * n_t + j;
            let d = (i + 1) * n_t + (j + 1) % n_t;
            triangles.push([a, b, d]);
            triangles.push([a, d, c]);
        }
    }
    TriangulatedSurface::build(
        vertices,
        triangles,
        Some(BuiltinSurface::FlatAnnulus { inner }),
    )
}

/// Projects a refined vertex back onto the analytic surface.
fn reproject(builtin: BuiltinSurface, p: Vector3<f64>, on_boundary: bool) -> Vector3<f64> {
    match builtin {
        BuiltinSurface::FlatDisk => {
            let q = Vector3::new(p.x, p.y, 0.0);
            if on_boundary {
                let r = q.norm();
                if r > 0.0 {
                    return q / r;
                }
            }
            q
        }
        BuiltinSurface::CriticalCatenoid { neck, sigma } => {
            let r_target = if on_boundary {
                // Boundary circles sit at s = +/- sigma on the unit sphere.
                neck * sigma.cosh()
            } else {
                neck * (p.z / neck).cosh()
            };
            let z = if on_boundary { neck * sigma * p.z.signum() } else { p.z };
            let r = (p.x * p.x + p.y * p.y).sqrt();
            if r > 0.0 {
                Vector3::new(p.x * r_target / r, p.y * r_target / r, z)
            } else {
                p
            }
        }
        BuiltinSurface::FlatAnnulus { inner } => {
            let q = Vector3::new(p.x, p.y, 0.0);
            if on_boundary {
                let r = q.norm();
                if r > 0.0 {
                    // Snap to whichever boundary circle is closer.
                    let target = if (r - inner).abs() < (r - 1.0).abs() { inner } else { 1.0 };
                    return q * target / r;
                }
            }
            q
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single_triangle() -> TriangulatedSurface {
        TriangulatedSurface::new(
            vec![
                Vector3::new(0.0, 0.0, 0.0),
                Vector3::new(1.0, 0.0, 0.0),
                Vector3::new(0.0, 1.0, 0.0),
            ],
            vec![[0, 1, 2]],
        )
        .unwrap()
    }

    #[test]
    fn single_triangle_counts() {
        let s = single_triangle();
        assert_eq!((s.vertex_count(), s.edge_count(), s.face_count()), (3, 3, 1));
        let t = s.topology().unwrap();
        assert_eq!((t.genus, t.boundary_count, t.euler_char), (0, 1, 1));
    }

    #[test]
    fn square_two_triangles_is_disk() {
        let s = TriangulatedSurface::new(
            vec![
                Vector3::new(0.0, 0.0, 0.0),
                Vector3::new(1.0, 0.0, 0.0),
                Vector3::new(1.0, 1.0, 0.0),
                Vector3::new(0.0, 1.0, 0.0),
            ],
            vec![[0, 1, 2], [0, 2, 3]],
        )
        .unwrap();
        let t = s.topology().unwrap();
        assert_eq!((t.genus, t.boundary_count, t.euler_char), (0, 1, 1));
    }

    #[test]
    fn inconsistent_winding_is_fixed() {
        let s = TriangulatedSurface::new(
            vec![
                Vector3::new(0.0, 0.0, 0.0),
                Vector3::new(1.0, 0.0, 0.0),
                Vector3::new(1.0, 1.0, 0.0),
                Vector3::new(0.0, 1.0, 0.0),
            ],
            vec![[0, 1, 2], [0, 3, 2]], // second triangle wound the wrong way
        )
        .unwrap();
        assert_eq!(s.topology().unwrap().boundary_count, 1);
    }

    #[test]
    fn annulus_topology() {
        let s = builtin_by_name("flat_annulus", 2).unwrap();
        let t = s.topology().unwrap();
        assert_eq!((t.genus, t.boundary_count, t.euler_char), (0, 2, 0));
    }

    #[test]
    fn flat_disk_boundary_on_unit_circle() {
        let s = builtin_by_name("flat_disk", 4).unwrap();
        for &v in &s.boundary_vertex_set() {
            assert!((s.vertices()[v].norm() - 1.0).abs() < 1e-12);
            assert_eq!(s.vertices()[v].z, 0.0);
        }
        let t = s.topology().unwrap();
        assert_eq!((t.genus, t.boundary_count), (0, 1));
    }

    #[test]
    fn catenoid_boundary_on_unit_sphere() {
        let s = builtin_by_name("critical_catenoid", 8).unwrap();
        for &v in &s.boundary_vertex_set() {
            assert!((s.vertices()[v].norm() - 1.0).abs() < 1e-10);
        }
        let t = s.topology().unwrap();
        assert_eq!((t.genus, t.boundary_count, t.euler_char), (0, 2, 0));
    }

    #[test]
    fn catenoid_neck_condition_residual() {
        let sigma = catenoid_sigma();
        assert!((sigma * sigma.tanh() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn refinement_preserves_topology_and_reprojects() {
        for name in ["flat_disk", "critical_catenoid", "flat_annulus"] {
            let s = builtin_by_name(name, 2).unwrap();
            let before = s.topology().unwrap();
            let r = s.refine(3);
            assert_eq!(r.topology().unwrap(), before);
            assert_eq!(r.face_count(), s.face_count() * 64);
        }
        let cat = builtin_by_name("critical_catenoid", 4).unwrap().refine(2);
        for &v in &cat.boundary_vertex_set() {
            assert!((cat.vertices()[v].norm() - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn zero_levels_is_identity() {
        let s = builtin_by_name("flat_disk", 3).unwrap();
        let r = s.refine(0);
        assert_eq!(r.vertex_count(), s.vertex_count());
        assert_eq!(r.triangles(), s.triangles());
    }

    #[test]
    fn torus_minus_fan_has_genus_one() {
        // 6x6 torus grid, then delete the triangle fan around vertex 0.
        let n = 6;
        let mut vertices = Vec::new();
        for i in 0..n {
            for j in 0..n {
                let (u, v) = (
                    2.0 * std::f64::consts::PI * i as f64 / n as f64,
                    2.0 * std::f64::consts::PI * j as f64 / n as f64,
                );
                let r = 2.0 + v.cos();
                vertices.push(Vector3::new(r * u.cos(), r * u.sin(), v.sin()));
            }
        }
        let mut triangles = Vec::new();
        for i in 0..n {
            for j in 0..n {
                let a = i * n + j;
                let b = i * n + (j + 1) % n;
                let c = ((i + 1) % n) * n + j;
                let d = ((i + 1) % n) * n + (j + 1) % n;
                triangles.push([a, b, d]);
                triangles.push([a, d, c]);
            }
        }
        triangles.retain(|t| !t.contains(&0));
        // Vertex 0 is now isolated; keep it out of the vertex list.
        let mut remap = BTreeMap::new();
        let mut vs = Vec::new();
        for t in &mut triangles {
            for v in t.iter_mut() {
                let id = *remap.entry(*v).or_insert_with(|| {
                    vs.push(vertices[*v]);
                    vs.len() - 1
                });
                *v = id;
            }
        }
        let s = TriangulatedSurface::new(vs, triangles).unwrap();
        let t = s.topology().unwrap();
        assert_eq!((t.genus, t.boundary_count, t.euler_char), (1, 1, -1));
    }

    #[test]
    fn closed_surface_rejected() {
        // Tetrahedron.
        let err = TriangulatedSurface::new(
            vec![
                Vector3::new(0.0, 0.0, 0.0),
                Vector3::new(1.0, 0.0, 0.0),
                Vector3::new(0.0, 1.0, 0.0),
                Vector3::new(0.0, 0.0, 1.0),
            ],
            vec![[0, 2, 1], [0, 1, 3], [1, 2, 3], [0, 3, 2]],
        )
        .unwrap_err();
        assert!(matches!(err, MeshError::ClosedSurface));
    }

    #[test]
    fn non_manifold_edge_rejected() {
        let err = TriangulatedSurface::new(
            vec![
                Vector3::new(0.0, 0.0, 0.0),
                Vector3::new(1.0, 0.0, 0.0),
                Vector3::new(0.0, 1.0, 0.0),
                Vector3::new(0.0, 0.0, 1.0),
                Vector3::new(0.0, -1.0, 0.0),
            ],
            vec![[0, 1, 2], [0, 1, 3], [0, 1, 4]],
        )
        .unwrap_err();
        assert!(matches!(err, MeshError::NonManifold(0, 1)));
    }

    #[test]
    fn triangle_shuffle_keeps_topology() {
        let s = builtin_by_name("flat_disk", 3).unwrap();
        let mut tris = s.triangles().to_vec();
        tris.reverse();
        tris.rotate_left(7);
        let t = TriangulatedSurface::new(s.vertices().to_vec(), tris)
            .unwrap()
            .topology()
            .unwrap();
        assert_eq!(t, s.topology().unwrap());
    }

    #[test]
    fn off_and_obj_roundtrip() {
        let dir = std::env::temp_dir();
        let off_path = dir.join("fbms_test_tri.off");
        std::fs::write(&off_path, "OFF\n3 1 0\n0 0 0\n1 0 0\n0 1 0\n3 0 1 2\n").unwrap();
        let s = load_mesh(&off_path, MeshFormat::Off).unwrap();
        assert_eq!(s.face_count(), 1);

        let obj_path = dir.join("fbms_test_tri.obj");
        std::fs::write(&obj_path, "v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 3\n").unwrap();
        let s = load_mesh(&obj_path, MeshFormat::Obj).unwrap();
        assert_eq!(s.face_count(), 1);
    }
}
