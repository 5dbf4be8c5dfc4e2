//! Convex hulls of point sets in ℝⁿ (2 ≤ n ≤ 6) and exact queries on them.
//!
//! Construction is incremental quickhull with outside sets: each facet keeps
//! the points strictly above it, the furthest one is inserted next, and the
//! visible region is replaced by a cone over its horizon. Points within
//! `1e-12·scale` of a facet hyperplane count as non-extreme, so every
//! facet is a simplex.

use std::collections::HashMap;
use std::sync::OnceLock;

use rand::Rng;
use serde::Serialize;
use smallvec::SmallVec;

use crate::error::{Error, Result};
use crate::linalg::{det_in_place, dot, hyperplane_normal, normalize};

pub const MAX_HULL_DIMENSION: usize = 6;
const PLANE_EPS: f64 = 1e-12;

type Idx = SmallVec<[usize; 8]>;

/// A facet half-space {x : ⟨normal, x⟩ ≤ offset} with its n vertex indices.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Facet {
    pub normal: Vec<f64>,
    pub offset: f64,
    pub vertices: Vec<usize>,
}

/// A full-dimensional simplicial polytope.
#[derive(Debug)]
pub struct Polytope {
    dim: usize,
    vertices: Vec<Vec<f64>>,
    facets: Vec<Facet>,
    /// `neighbors[f][k]` shares every vertex of facet `f` except its k-th.
    neighbors: Vec<Idx>,
    interior_point: Vec<f64>,
    locator: OnceLock<Locator>,
    origin_locator: OnceLock<Option<Locator>>,
    simplex_volumes: OnceLock<Vec<f64>>,
}

#[derive(Serialize)]
struct HullDump<'a> {
    dimension: usize,
    vertices: &'a [Vec<f64>],
    facets: &'a [Facet],
}

struct WorkFacet {
    verts: Idx,
    normal: SmallVec<[f64; 8]>,
    offset: f64,
    neighbors: Idx,
    outside: Vec<usize>,
    furthest: (usize, f64),
    alive: bool,
}

struct Builder<'a> {
    n: usize,
    points: &'a [Vec<f64>],
    eps: f64,
    center: Vec<f64>,
    facets: Vec<WorkFacet>,
    visible_mark: Vec<u32>,
    hidden_mark: Vec<u32>,
    stamp: u32,
}

impl<'a> Builder<'a> {
    fn distance(&self, f: usize, p: usize) -> f64 {
        let facet = &self.facets[f];
        dot(&facet.normal, &self.points[p]) - facet.offset
    }

    fn make_facet(&self, verts: Idx, neighbors: Idx) -> WorkFacet {
        let pts: SmallVec<[&[f64]; 8]> = verts.iter().map(|&v| self.points[v].as_slice()).collect();
        let mut normal: SmallVec<[f64; 8]> = hyperplane_normal(&pts).into_iter().collect();
        normalize(&mut normal);
        let mut offset = dot(&normal, pts[0]);
        if dot(&normal, &self.center) > offset {
            normal.iter_mut().for_each(|x| *x = -*x);
            offset = -offset;
        }
        WorkFacet {
            verts,
            normal,
            offset,
            neighbors,
            outside: Vec::new(),
            furthest: (usize::MAX, f64::NEG_INFINITY),
            alive: true,
        }
    }

    fn push_facet(&mut self, facet: WorkFacet) -> usize {
        self.facets.push(facet);
        self.visible_mark.push(0);
        self.hidden_mark.push(0);
        self.facets.len() - 1
    }

    /// Assigns `p` to the first of `candidates` it lies strictly above.
    fn assign(&mut self, p: usize, candidates: &[usize]) {
        for &f in candidates {
            let d = self.distance(f, p);
            if d > self.eps {
                let facet = &mut self.facets[f];
                facet.outside.push(p);
                if d > facet.furthest.1 {
                    facet.furthest = (p, d);
                }
                return;
            }
        }
    }

    fn insert(&mut self, start: usize) {
        let p = self.facets[start].furthest.0;
        self.stamp += 1;
        let stamp = self.stamp;

        let mut visible = vec![start];
        self.visible_mark[start] = stamp;
        let mut horizon: Vec<(usize, usize, usize)> = Vec::new();
        let mut i = 0;
        while i < visible.len() {
            let f = visible[i];
            i += 1;
            for slot in 0..self.n {
                let nb = self.facets[f].neighbors[slot];
                if self.visible_mark[nb] == stamp {
                    continue;
                }
                if self.hidden_mark[nb] != stamp {
                    if self.distance(nb, p) > self.eps {
                        self.visible_mark[nb] = stamp;
                        visible.push(nb);
                        continue;
                    }
                    self.hidden_mark[nb] = stamp;
                }
                horizon.push((f, slot, nb));
            }
        }

        let mut created = Vec::with_capacity(horizon.len());
        let mut ridges: HashMap<Idx, (usize, usize)> = HashMap::with_capacity(horizon.len() * self.n);
        for &(f, slot, nb) in &horizon {
            let mut verts = self.facets[f].verts.clone();
            verts[slot] = p;
            let mut neighbors: Idx = SmallVec::from_elem(usize::MAX, self.n);
            neighbors[slot] = nb;
            let facet = self.make_facet(verts, neighbors);
            let g = self.push_facet(facet);
            let back = self.facets[nb]
                .neighbors
                .iter()
                .position(|&x| x == f)
                .expect("horizon neighbor must point back");
            self.facets[nb].neighbors[back] = g;
            for k in 0..self.n {
                if k == slot {
                    continue;
                }
                let mut key: Idx = self.facets[g]
                    .verts
                    .iter()
                    .enumerate()
                    .filter(|&(j, &v)| j != k && v != p)
                    .map(|(_, &v)| v)
                    .collect();
                key.sort_unstable();
                match ridges.remove(&key) {
                    Some((other, other_slot)) => {
                        self.facets[g].neighbors[k] = other;
                        self.facets[other].neighbors[other_slot] = g;
                    }
                    None => {
                        ridges.insert(key, (g, k));
                    }
                }
            }
            created.push(g);
        }
        debug_assert!(ridges.is_empty(), "unmatched ridges in horizon cone");

        let mut orphans = Vec::new();
        for &f in &visible {
            let facet = &mut self.facets[f];
            facet.alive = false;
            orphans.append(&mut facet.outside);
        }
        for q in orphans {
            if q != p {
                self.assign(q, &created);
            }
        }
    }
}

fn degenerate(msg: &str) -> Error {
    Error::DegenerateInput(msg.to_string())
}

/// Indices of n+1 input points spanning a simplex of maximal-ish volume.
fn initial_simplex(points: &[Vec<f64>], n: usize, eps: f64) -> Result<Vec<usize>> {
    let first = (0..points.len())
        .min_by(|&a, &b| points[a][0].total_cmp(&points[b][0]))
        .unwrap();
    let mut chosen = vec![first];
    let mut basis: Vec<Vec<f64>> = Vec::new();
    for _ in 0..n {
        let origin = &points[first];
        let mut best = (usize::MAX, -1.0, Vec::new());
        for (i, p) in points.iter().enumerate() {
            let mut r: Vec<f64> = p.iter().zip(origin).map(|(a, b)| a - b).collect();
            for b in &basis {
                let proj = dot(&r, b);
                r.iter_mut().zip(b).for_each(|(x, y)| *x -= proj * y);
            }
            let d = dot(&r, &r).sqrt();
            if d > best.1 {
                best = (i, d, r);
            }
        }
        let (idx, d, mut r) = best;
        if d <= eps {
            return Err(degenerate("all points lie within 1e-12 of a hyperplane"));
        }
        normalize(&mut r);
        basis.push(r);
        chosen.push(idx);
    }
    Ok(chosen)
}

/// Convex hull of `points` in ℝⁿ.
pub fn build_hull(points: &[Vec<f64>], n: usize) -> Result<Polytope> {
    if !(2..=MAX_HULL_DIMENSION).contains(&n) {
        return Err(degenerate(&format!("hull dimension {n} unsupported")));
    }
    if points.len() < n + 1 {
        return Err(degenerate(&format!(
            "{} points cannot span a {n}-dimensional polytope",
            points.len()
        )));
    }
    if points.iter().any(|p| p.len() != n || p.iter().any(|x| !x.is_finite())) {
        return Err(degenerate("points must be finite and of the hull dimension"));
    }
    let scale = points
        .iter()
        .flat_map(|p| p.iter())
        .fold(0.0f64, |m, x| m.max(x.abs()))
        .max(f64::MIN_POSITIVE);
    let eps = PLANE_EPS * scale;
    let simplex = initial_simplex(points, n, eps)?;
    let center: Vec<f64> = (0..n)
        .map(|k| simplex.iter().map(|&i| points[i][k]).sum::<f64>() / (n + 1) as f64)
        .collect();

    let mut b = Builder {
        n,
        points,
        eps,
        center,
        facets: Vec::new(),
        visible_mark: Vec::new(),
        hidden_mark: Vec::new(),
        stamp: 0,
    };
    for omit in 0..=n {
        let verts: Idx = (0..=n).filter(|&k| k != omit).map(|k| simplex[k]).collect();
        let neighbors: Idx = (0..=n).filter(|&k| k != omit).collect();
        let facet = b.make_facet(verts, neighbors);
        b.push_facet(facet);
    }
    let initial: Vec<usize> = (0..=n).collect();
    let mut in_simplex = vec![false; points.len()];
    simplex.iter().for_each(|&i| in_simplex[i] = true);
    for p in 0..points.len() {
        if !in_simplex[p] {
            b.assign(p, &initial);
        }
    }

    let mut pending: Vec<usize> = initial;
    while let Some(f) = pending.pop() {
        if !b.facets[f].alive || b.facets[f].outside.is_empty() {
            continue;
        }
        let before = b.facets.len();
        b.insert(f);
        pending.extend(before..b.facets.len());
    }

    finish(b)
}

fn finish(b: Builder<'_>) -> Result<Polytope> {
    let n = b.n;
    let mut facet_map = vec![usize::MAX; b.facets.len()];
    let mut vertex_map = vec![usize::MAX; b.points.len()];
    let mut vertices = Vec::new();
    let mut alive = Vec::new();
    for (i, f) in b.facets.iter().enumerate() {
        if f.alive {
            facet_map[i] = alive.len();
            alive.push(i);
            for &v in &f.verts {
                if vertex_map[v] == usize::MAX {
                    vertex_map[v] = vertices.len();
                    vertices.push(b.points[v].clone());
                }
            }
        }
    }
    let facets: Vec<Facet> = alive
        .iter()
        .map(|&i| {
            let f = &b.facets[i];
            Facet {
                normal: f.normal.to_vec(),
                offset: f.offset,
                vertices: f.verts.iter().map(|&v| vertex_map[v]).collect(),
            }
        })
        .collect();
    let neighbors: Vec<Idx> = alive
        .iter()
        .map(|&i| b.facets[i].neighbors.iter().map(|&g| facet_map[g]).collect())
        .collect();
    if neighbors.iter().flatten().any(|&g| g == usize::MAX) {
        return Err(degenerate("facet adjacency is inconsistent"));
    }
    let interior_point: Vec<f64> = (0..n)
        .map(|k| vertices.iter().map(|v| v[k]).sum::<f64>() / vertices.len() as f64)
        .collect();
    Ok(Polytope {
        dim: n,
        vertices,
        facets,
        neighbors,
        interior_point,
        locator: OnceLock::new(),
        origin_locator: OnceLock::new(),
        simplex_volumes: OnceLock::new(),
    })
}

impl Polytope {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn vertices(&self) -> &[Vec<f64>] {
        &self.vertices
    }

    pub fn facets(&self) -> &[Facet] {
        &self.facets
    }

    /// The vertex centroid.
    pub fn interior_point(&self) -> &[f64] {
        &self.interior_point
    }

    /// Number of edges, counted from facet incidences.
    pub fn edge_count(&self) -> usize {
        let mut edges = std::collections::HashSet::new();
        for f in &self.facets {
            for (i, &a) in f.vertices.iter().enumerate() {
                for &b in &f.vertices[i + 1..] {
                    edges.insert((a.min(b), a.max(b)));
                }
            }
        }
        edges.len()
    }

    fn simplex_volumes(&self) -> &[f64] {
        self.simplex_volumes.get_or_init(|| {
            let n = self.dim;
            let factorial: f64 = (1..=n).map(|k| k as f64).product();
            let mut m = vec![0.0; n * n];
            self.facets
                .iter()
                .map(|f| {
                    for (r, &v) in f.vertices.iter().enumerate() {
                        for k in 0..n {
                            m[r * n + k] = self.vertices[v][k] - self.interior_point[k];
                        }
                    }
                    det_in_place(&mut m, n).abs() / factorial
                })
                .collect()
        })
    }

    /// Volume as a fan of simplices from the interior point over the facets.
    pub fn volume(&self) -> f64 {
        self.simplex_volumes().iter().sum()
    }

    /// True iff ⟨normal_j, x⟩ ≤ offset_j + tol for every facet j.
    ///
    /// Answers via the facet hit by the ray from the interior point through
    /// `x`, found by bucketed lookup and an improving walk over facet
    /// adjacency.
    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        let loc = self
            .locator
            .get_or_init(|| Locator::build(self, &self.interior_point));
        let d: SmallVec<[f64; 8]> = x
            .iter()
            .zip(&self.interior_point)
            .map(|(a, b)| a - b)
            .collect();
        if d.iter().all(|&v| v == 0.0) {
            return true;
        }
        let f = loc.locate(self, &d);
        let facet = &self.facets[f];
        dot(&facet.normal, x) <= facet.offset + tol
    }

    /// The facet-by-facet definition of `contains`.
    pub fn contains_exhaustive(&self, x: &[f64], tol: f64) -> bool {
        self.facets
            .iter()
            .all(|f| dot(&f.normal, x) <= f.offset + tol)
    }

    pub fn contains_origin(&self) -> bool {
        self.facets.iter().all(|f| f.offset >= 0.0)
    }

    /// Radial function ρ_P(u) about the origin, or `None` unless the origin
    /// is interior.
    pub fn radial(&self, u: &[f64]) -> Option<f64> {
        let loc = self
            .origin_locator
            .get_or_init(|| {
                let origin = vec![0.0; self.dim];
                self.facets
                    .iter()
                    .all(|f| f.offset > 0.0)
                    .then(|| Locator::build(self, &origin))
            })
            .as_ref()?;
        let f = loc.locate(self, u);
        Some(loc.shifted[f] / dot(&self.facets[f].normal, u))
    }

    /// A point drawn uniformly from the polytope.
    pub fn sample_uniform<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        let vols = self.simplex_volumes();
        let total: f64 = vols.iter().sum();
        let mut target = rng.random::<f64>() * total;
        let mut pick = vols.len() - 1;
        for (i, v) in vols.iter().enumerate() {
            if target < *v {
                pick = i;
                break;
            }
            target -= v;
        }
        // barycentric weights ~ Dirichlet(1, …, 1) over the n+1 corners
        let n = self.dim;
        let mut w: SmallVec<[f64; 8]> = (0..=n).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect();
        let s: f64 = w.iter().sum();
        w.iter_mut().for_each(|x| *x /= s);
        let facet = &self.facets[pick];
        for k in 0..n {
            let mut acc = w[n] * self.interior_point[k];
            for (j, &v) in facet.vertices.iter().enumerate() {
                acc += w[j] * self.vertices[v][k];
            }
            out[k] = acc;
        }
    }

    /// JSON document {dimension, vertices, facets}.
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&HullDump {
            dimension: self.dim,
            vertices: &self.vertices,
            facets: &self.facets,
        })?)
    }
}

/// Direction buckets over the faces of the cube [-1, 1]ⁿ, each remembering
/// the facet hit by the ray through its center.
#[derive(Debug)]
struct Locator {
    bins: usize,
    table: Vec<u32>,
    /// offset_j − ⟨normal_j, center⟩ > 0
    shifted: Vec<f64>,
}

impl Locator {
    fn build(p: &Polytope, center: &[f64]) -> Self {
        let n = p.dim;
        let shifted: Vec<f64> = p
            .facets
            .iter()
            .map(|f| f.offset - dot(&f.normal, center))
            .collect();
        let per_face = (p.facets.len() as f64 / n as f64).max(1.0);
        let bins = (per_face.powf(1.0 / (n as f64 - 1.0)).round() as usize).clamp(1, 4096);
        let per_face_buckets = bins.pow(n as u32 - 1);
        let mut loc = Locator {
            bins,
            table: vec![0; 2 * n * per_face_buckets],
            shifted,
        };
        let mut current = 0;
        let mut center = vec![0.0; n];
        for id in 0..loc.table.len() {
            loc.bucket_center(n, id, &mut center);
            current = loc.walk(p, current, &center);
            loc.table[id] = current as u32;
        }
        loc
    }

    fn bucket_center(&self, n: usize, id: usize, out: &mut [f64]) {
        let per_face = self.bins.pow(n as u32 - 1);
        let face = id / per_face;
        let mut rest = id % per_face;
        let axis = face / 2;
        out[axis] = if face % 2 == 0 { 1.0 } else { -1.0 };
        for (k, o) in out.iter_mut().enumerate() {
            if k == axis {
                continue;
            }
            let bin = rest % self.bins;
            rest /= self.bins;
            *o = -1.0 + (2.0 * bin as f64 + 1.0) / self.bins as f64;
        }
    }

    fn bucket_of(&self, d: &[f64]) -> usize {
        let n = d.len();
        let mut axis = 0;
        for k in 1..n {
            if d[k].abs() > d[axis].abs() {
                axis = k;
            }
        }
        let face = 2 * axis + usize::from(d[axis] < 0.0);
        let inv = d[axis].abs().recip();
        let mut id = 0;
        let mut stride = 1;
        for (k, &v) in d.iter().enumerate() {
            if k == axis {
                continue;
            }
            let t = (v * inv + 1.0) * 0.5 * self.bins as f64;
            let bin = (t as usize).min(self.bins - 1);
            id += bin * stride;
            stride *= self.bins;
        }
        face * self.bins.pow(n as u32 - 1) + id
    }

    /// Walks to the facet maximizing ⟨normal_j, d⟩ / shifted_j, the facet
    /// through which the ray from the center leaves the polytope.
    /// Local maxima over the adjacency graph are global (the scores are a
    /// linear functional on the vertices of the polar polytope).
    fn walk(&self, p: &Polytope, start: usize, d: &[f64]) -> usize {
        let score = |f: usize| dot(&p.facets[f].normal, d) / self.shifted[f];
        let mut current = start;
        let mut best = score(current);
        loop {
            let mut next = current;
            for &nb in &p.neighbors[current] {
                let s = score(nb);
                if s > best {
                    best = s;
                    next = nb;
                }
            }
            if next == current {
                return current;
            }
            current = next;
        }
    }

    fn locate(&self, p: &Polytope, d: &[f64]) -> usize {
        let start = self.table[self.bucket_of(d)] as usize;
        self.walk(p, start, d)
    }
}
