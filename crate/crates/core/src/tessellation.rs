//! Numerical tessellations `Tes_q(S̄_p)` for `p ∈ {1, 2}`.
//!
//! Edges are traced parameter rays in the chart coordinate `t`. All planar
//! geometry is done in the chart `w = 1/(t - β)`, with `β` a point far from
//! the edges, so that the ideal point `t = ∞` becomes `w = 0`.

use num_complex::Complex64 as C64;
use serde::Serialize;

use crate::angle::{coperiodic_angles, Angle};
use crate::combinatorics::parabolic_vertex_count;
use crate::dynamics::CubicMap;
use crate::error::{Error, NumericError};
use crate::numeric::cluster;
use crate::parameter::{chart_coordinate, trace_parameter_ray, trace_parameter_samples, EscapeRegion, Landing, ParamRayOptions};
use crate::portrait::{classify_edge, EdgeKind, OrbitPortrait, PortraitJson};
use crate::rays::{orbit_portrait_numeric, winding_number};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BuildOptions {
    /// Clustering radius for parabolic landing maps in the `t`-plane.
    pub cluster_radius: f64,
    /// Landing-point tolerance for numerical orbit portraits.
    pub portrait_tol: f64,
    /// Range of potentials searched for face samples on mid-angle
    /// parameter rays.
    pub sample_potentials: [f64; 2],
    pub g_min: f64,
}

impl Default for BuildOptions {
    fn default() -> Self {
        Self { cluster_radius: 1e-3, portrait_tol: 1e-4, sample_potentials: [1.0, 0.01], g_min: 1e-5 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum VertexKind {
    Ideal { region: usize },
    Parabolic { t: C64, map: CubicMap },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Vertex {
    pub kind: VertexKind,
    /// Outgoing darts in counterclockwise order (in the `w` chart).
    pub rotation: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Edge {
    pub region: usize,
    pub angle: Angle,
    pub ideal: usize,
    pub parabolic: usize,
    /// Points of the traced ray in the `t`-plane, from high to low potential.
    #[serde(skip)]
    pub polyline: Vec<C64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FaceSample {
    pub region: usize,
    pub angle: Angle,
    #[serde(rename = "G")]
    pub g: f64,
    pub map: CubicMap,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Face {
    /// Boundary walks, each a cyclic list of darts with the face on the left.
    pub walks: Vec<Vec<usize>>,
    pub samples: Vec<FaceSample>,
    #[serde(skip)]
    pub portrait: Option<OrbitPortrait>,
}

impl Face {
    /// Rank of `H_1` of the face, which is planar.
    pub fn h1_rank(&self) -> usize {
        self.walks.len() - 1
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Wake {
    pub region: usize,
    pub vertex: usize,
    pub edges: [usize; 2],
    /// Angles bounding the wake, counterclockwise on the circle of angles:
    /// the wake meets the region in the rays of angle in `(from, to)`.
    pub from: Angle,
    pub to: Angle,
    pub faces: Vec<usize>,
    /// Indices of the wakes directly containing this one.
    pub parent: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Tessellation {
    pub q: u32,
    pub p: u32,
    pub regions: Vec<EscapeRegion>,
    pub vertices: Vec<Vertex>,
    pub edges: Vec<Edge>,
    pub faces: Vec<Face>,
    /// Face on the left of each dart; dart `2e` runs from the ideal vertex of
    /// edge `e` to its parabolic vertex and `2e + 1` back.
    pub dart_face: Vec<usize>,
    pub components: usize,
    /// Number of parabolic vertices predicted by the vertex-count formula.
    pub expected_parabolic: usize,
    /// Clustering radius actually used, after any bisection.
    pub cluster_radius: f64,
    #[serde(skip)]
    beta: C64,
}

fn ideal_point(p: u32, region: usize) -> Option<C64> {
    // S_1: t = ∞; S_2: the outer region sits at t = ∞ and the inner at t = 0.
    match (p, region) {
        (2, 0) => Some(C64::new(0.0, 0.0)),
        _ => None,
    }
}

impl Tessellation {
    pub fn ideal_count(&self) -> usize {
        self.vertices.iter().filter(|v| matches!(v.kind, VertexKind::Ideal { .. })).count()
    }

    pub fn parabolic_count(&self) -> usize {
        self.vertices.len() - self.ideal_count()
    }

    pub fn h1_rank(&self) -> usize {
        self.faces.iter().map(Face::h1_rank).sum()
    }

    pub fn euler_characteristic(&self) -> i64 {
        self.vertices.len() as i64 - self.edges.len() as i64 + self.faces.len() as i64
    }

    fn dart_ends(&self, d: usize) -> (usize, usize) {
        let e = &self.edges[d / 2];
        if d % 2 == 0 {
            (e.ideal, e.parabolic)
        } else {
            (e.parabolic, e.ideal)
        }
    }

    fn vertex_w(&self, v: usize) -> C64 {
        match &self.vertices[v].kind {
            VertexKind::Ideal { region } => match ideal_point(self.p, *region) {
                Some(t) => to_w(t, self.beta),
                None => C64::new(0.0, 0.0),
            },
            VertexKind::Parabolic { t, .. } => to_w(*t, self.beta),
        }
    }

    /// Points of a dart in the `w` chart, including both end vertices.
    fn dart_points(&self, d: usize) -> Vec<C64> {
        let e = &self.edges[d / 2];
        let mut pts = vec![self.vertex_w(e.ideal)];
        pts.extend(e.polyline.iter().map(|&t| to_w(t, self.beta)));
        pts.push(self.vertex_w(e.parabolic));
        if d % 2 == 1 {
            pts.reverse();
        }
        pts
    }

    fn walk_polygon(&self, walk: &[usize]) -> Vec<C64> {
        walk.iter().flat_map(|&d| self.dart_points(d)).collect()
    }

    /// Whether `t` lies in the region to the left of a boundary walk.
    fn left_of_walk(&self, walk: &[usize], w: C64) -> bool {
        let poly = self.walk_polygon(walk);
        let Some(&d) = walk.iter().find(|&&d| !walk.contains(&(d ^ 1))) else {
            return true;
        };
        let pts = self.dart_points(d);
        let i = pts.len() / 2;
        let (a, b) = (pts[i - 1], pts[i]);
        let probe = (a + b) / 2.0 + (b - a) * C64::new(0.0, 1e-3);
        winding_number(&poly, w) == winding_number(&poly, probe)
    }

    /// Face containing the point `t` of the parameter plane.
    pub fn locate(&self, t: C64) -> Option<usize> {
        let w = to_w(t, self.beta);
        self.faces.iter().position(|f| f.walks.iter().all(|walk| self.left_of_walk(walk, w)))
    }

    pub fn edge_kinds(&self) -> Vec<EdgeKind> {
        classify_edges(self)
    }
}

fn polyline_distance(poly: &[C64], z: C64) -> f64 {
    poly.windows(2)
        .map(|w| {
            let d = w[1] - w[0];
            let u = if d.norm_sqr() == 0.0 { 0.0 } else { ((z - w[0]) * d.conj()).re / d.norm_sqr() };
            (w[0] + d * u.clamp(0.0, 1.0) - z).norm()
        })
        .fold(f64::INFINITY, f64::min)
}

fn to_w(t: C64, beta: C64) -> C64 {
    (t - beta).inv()
}

/// Point of the square `[-3, 3]²` farthest from every traced point.
fn far_point(points: &[C64]) -> C64 {
    let mut best = (C64::new(0.0, 0.0), -1.0);
    for i in 0..=60 {
        for j in 0..=60 {
            let c = C64::new(-3.0 + 0.1 * i as f64 + 0.013, -3.0 + 0.1 * j as f64 + 0.007);
            let d = points.iter().map(|p| (p - c).norm()).fold(f64::INFINITY, f64::min);
            if d > best.1 {
                best = (c, d);
            }
        }
    }
    best.0
}

fn regions_for(p: u32) -> Result<Vec<EscapeRegion>, NumericError> {
    match p {
        1 => Ok(vec![EscapeRegion::s1()]),
        2 => Ok(vec![EscapeRegion::s2_inner(), EscapeRegion::s2_outer()]),
        _ => Err(NumericError::ChartUnavailable(p)),
    }
}

/// Builds `Tes_q(S̄_p)` with face portraits attached.
pub fn build(q: u32, p: u32, opts: &BuildOptions) -> Result<Tessellation, Error> {
    let mut t = build_graph(q, p, opts)?;
    face_portraits(&mut t, opts)?;
    Ok(t)
}

/// Traces the edges, clusters the vertices and computes the faces.
pub fn build_graph(q: u32, p: u32, opts: &BuildOptions) -> Result<Tessellation, Error> {
    let regions = regions_for(p)?;
    let angles = coperiodic_angles(q)?;
    let jobs: Vec<(usize, Angle)> =
        (0..regions.len()).flat_map(|r| angles.iter().map(move |a| (r, a.clone()))).collect();
    let ray_opts = ParamRayOptions { g_min: opts.g_min, ..ParamRayOptions::default() };
    let rays = crate::exec::map_collect(&jobs, |(r, a)| trace_parameter_ray(&regions[*r], a, &ray_opts));

    let mut vertices: Vec<Vertex> =
        (0..regions.len()).map(|r| Vertex { kind: VertexKind::Ideal { region: r }, rotation: Vec::new() }).collect();
    let mut landings = Vec::with_capacity(jobs.len());
    let mut polylines = Vec::with_capacity(jobs.len());
    for ((r, a), ray) in jobs.iter().zip(rays) {
        let ray = ray.map_err(|e| NumericError::TraceFailure(format!("{} ray {a}: {e}", regions[*r].label())))?;
        let Landing::Parabolic { map, ray_period, .. } = ray.landing else {
            return Err(NumericError::TraceFailure(format!("ray {a} did not land at a parabolic map")).into());
        };
        if ray_period != q {
            return Err(NumericError::TraceFailure(format!("ray {a} has ray period {ray_period}")).into());
        }
        landings.push((chart_coordinate(p, &map)?, map));
        polylines.push(
            ray.samples.iter().map(|s| chart_coordinate(p, &s.map)).collect::<Result<Vec<_>, _>>()?,
        );
    }

    let expected = parabolic_vertex_count(q, p)?.value.try_into().unwrap_or(usize::MAX);
    let ts: Vec<C64> = landings.iter().map(|l| l.0).collect();
    let mut radius = opts.cluster_radius;
    let mut clusters = cluster(&ts, radius);
    while clusters.len() < expected && radius > opts.cluster_radius * 1e-6 {
        radius /= 2.0;
        clusters = cluster(&ts, radius);
    }
    if clusters.len() < expected {
        return Err(NumericError::ClusterAmbiguous(radius, opts.cluster_radius).into());
    }
    let first = vertices.len();
    for (c, _) in &clusters {
        let (_, map) = landings
            .iter()
            .min_by(|x, y| (x.0 - c).norm().total_cmp(&(y.0 - c).norm()))
            .copied()
            .expect("nonempty cluster");
        vertices.push(Vertex { kind: VertexKind::Parabolic { t: *c, map }, rotation: Vec::new() });
    }
    let mut edges = Vec::with_capacity(jobs.len());
    for (((r, a), (t, _)), poly) in jobs.into_iter().zip(&landings).zip(polylines) {
        let k = (0..clusters.len())
            .min_by(|&i, &j| (clusters[i].0 - t).norm().total_cmp(&(clusters[j].0 - t).norm()))
            .expect("at least one cluster");
        edges.push(Edge { region: r, angle: a, ideal: r, parabolic: first + k, polyline: poly });
    }

    let mut all_points: Vec<C64> = edges.iter().flat_map(|e| e.polyline.iter().copied()).collect();
    all_points.extend(clusters.iter().map(|c| c.0));
    if p == 2 {
        all_points.push(C64::new(0.0, 0.0));
    }
    let beta = far_point(&all_points);

    let mut t = Tessellation {
        q,
        p,
        regions,
        vertices,
        edges,
        faces: Vec::new(),
        dart_face: Vec::new(),
        components: 0,
        expected_parabolic: expected,
        cluster_radius: radius,
        beta,
    };
    compute_rotations(&mut t);
    compute_faces(&mut t)?;
    Ok(t)
}

fn compute_rotations(t: &mut Tessellation) {
    let nv = t.vertices.len();
    let pos: Vec<C64> = (0..nv).map(|v| t.vertex_w(v)).collect();
    for v in 0..nv {
        let r = (0..nv)
            .filter(|&u| u != v)
            .map(|u| (pos[u] - pos[v]).norm())
            .fold(f64::INFINITY, f64::min)
            * 0.25;
        let mut darts: Vec<(f64, usize)> = Vec::new();
        for d in 0..2 * t.edges.len() {
            if t.dart_ends(d).0 != v {
                continue;
            }
            let pts = t.dart_points(d);
            let exit = pts.iter().find(|&&z| (z - pos[v]).norm() >= r).copied().unwrap_or(pts[pts.len() - 1]);
            darts.push(((exit - pos[v]).arg(), d));
        }
        darts.sort_by(|a, b| a.0.total_cmp(&b.0));
        t.vertices[v].rotation = darts.into_iter().map(|x| x.1).collect();
    }
}

fn compute_faces(t: &mut Tessellation) -> Result<(), NumericError> {
    let nd = 2 * t.edges.len();
    // The face to the left of u→v continues along the first dart clockwise
    // from v→u around v.
    let mut next = vec![0usize; nd];
    for d in 0..nd {
        let (_, v) = t.dart_ends(d);
        let rot = &t.vertices[v].rotation;
        let i = rot.iter().position(|&x| x == d ^ 1).expect("reverse dart in rotation");
        next[d] = rot[(i + rot.len() - 1) % rot.len()];
    }
    let mut walk_of = vec![usize::MAX; nd];
    let mut walks: Vec<Vec<usize>> = Vec::new();
    for d in 0..nd {
        if walk_of[d] != usize::MAX {
            continue;
        }
        let mut walk = Vec::new();
        let mut x = d;
        while walk_of[x] == usize::MAX {
            walk_of[x] = walks.len();
            walk.push(x);
            x = next[x];
        }
        walks.push(walk);
    }

    // Connected components of the graph.
    let nv = t.vertices.len();
    let mut comp: Vec<usize> = (0..nv).collect();
    fn find(c: &mut [usize], mut i: usize) -> usize {
        while c[i] != i {
            c[i] = c[c[i]];
            i = c[i];
        }
        i
    }
    for e in &t.edges {
        let (a, b) = (find(&mut comp, e.ideal), find(&mut comp, e.parabolic));
        comp[a] = b;
    }
    let mut roots: Vec<usize> = (0..nv).map(|v| find(&mut comp, v)).collect();
    let mut ids: Vec<usize> = roots.clone();
    ids.sort_unstable();
    ids.dedup();
    for r in roots.iter_mut() {
        *r = ids.binary_search(r).expect("root listed");
    }
    let ncomp = ids.len();
    let walk_comp: Vec<usize> = walks.iter().map(|w| roots[t.dart_ends(w[0]).0]).collect();
    let comp_vertex: Vec<usize> = (0..ncomp).map(|c| roots.iter().position(|&r| r == c).expect("vertex")).collect();

    // inside[w][c]: component c lies to the left of walk w.
    let inside: Vec<Vec<bool>> = walks
        .iter()
        .enumerate()
        .map(|(i, w)| {
            (0..ncomp)
                .map(|c| c == walk_comp[i] || t.left_of_walk(w, t.vertex_w(comp_vertex[c])))
                .collect()
        })
        .collect();
    // The walk of component c whose region contains component k.
    let facing = |c: usize, k: usize| -> Option<usize> {
        (0..walks.len()).find(|&w| walk_comp[w] == c && inside[w][k])
    };

    let mut parent: Vec<usize> = (0..walks.len()).collect();
    for w1 in 0..walks.len() {
        for w2 in w1 + 1..walks.len() {
            let (c1, c2) = (walk_comp[w1], walk_comp[w2]);
            if c1 == c2 || !inside[w1][c2] || !inside[w2][c1] {
                continue;
            }
            let separated = (0..ncomp).filter(|&k| k != c1 && k != c2 && inside[w1][k] && inside[w2][k]).any(|k| {
                facing(k, c1) != facing(k, c2)
            });
            if !separated {
                let (a, b) = (find(&mut parent, w1), find(&mut parent, w2));
                parent[a] = b;
            }
        }
    }
    let mut face_ids: Vec<usize> = (0..walks.len()).map(|w| find(&mut parent, w)).collect();
    let mut uniq = face_ids.clone();
    uniq.sort_unstable();
    uniq.dedup();
    for f in face_ids.iter_mut() {
        *f = uniq.binary_search(f).expect("face listed");
    }
    let mut faces: Vec<Face> = (0..uniq.len()).map(|_| Face { walks: Vec::new(), samples: Vec::new(), portrait: None }).collect();
    for (w, walk) in walks.into_iter().enumerate() {
        faces[face_ids[w]].walks.push(walk);
    }
    t.dart_face = walk_of.iter().map(|&w| face_ids[w]).collect();
    t.faces = faces;
    t.components = ncomp;
    let euler = t.euler_characteristic();
    if euler != 2 + t.h1_rank() as i64 {
        return Err(NumericError::TraceFailure(format!(
            "face structure inconsistent: v - e + f = {euler}, rank H1 = {}",
            t.h1_rank()
        )));
    }
    Ok(())
}

/// The two angles of consecutive darts around an ideal vertex, ordered so
/// that the sector between the darts is the counterclockwise arc of angles
/// between them.
fn sector_arc(t: &Tessellation, v: usize, i: usize) -> (Angle, Angle) {
    let rot = &t.vertices[v].rotation;
    let d0 = rot[i];
    let d1 = rot[(i + 1) % rot.len()];
    // Increasing angle runs clockwise around every ideal vertex of the
    // charts used here.
    (t.edges[d1 / 2].angle.clone(), t.edges[d0 / 2].angle.clone())
}

/// Traces one mid-angle parameter ray per sector at every ideal vertex and
/// attaches the numerical orbit portraits, which must agree within a face.
pub fn face_portraits(t: &mut Tessellation, opts: &BuildOptions) -> Result<(), Error> {
    let mut jobs: Vec<(usize, usize, Angle)> = Vec::new();
    for v in 0..t.vertices.len() {
        let VertexKind::Ideal { region } = t.vertices[v].kind else { continue };
        let rot = t.vertices[v].rotation.clone();
        for i in 0..rot.len() {
            let (from, to) = sector_arc(t, v, i);
            let mid = if rot.len() == 1 { from.add(&Angle::frac(1, 2)) } else { from.ccw_midpoint(&to) };
            jobs.push((t.dart_face[rot[i]], region, mid));
        }
    }
    let [g_hi, g_lo] = opts.sample_potentials;
    let ray_opts = ParamRayOptions { g_min: g_lo, ..ParamRayOptions::default() };
    let regions = t.regions.clone();
    let traced = crate::exec::map_collect(&jobs, |(_, r, a)| trace_parameter_samples(&regions[*r], a, &ray_opts, None));
    let edge_lines: Vec<Vec<C64>> = t.polylines().into_iter().map(|x| x.1).collect();
    let clearance_of = |x: C64| edge_lines.iter().map(|l| polyline_distance(l, x)).fold(f64::INFINITY, f64::min);
    let needed = 10.0 * t.cluster_radius;
    let mut samples: Vec<(usize, FaceSample)> = Vec::new();
    for ((face, r, a), s) in jobs.iter().zip(traced) {
        let s = s?;
        let scored: Vec<(f64, f64, CubicMap)> = s
            .iter()
            .filter(|x| x.g <= g_hi)
            .filter_map(|x| chart_coordinate(t.p, &x.map).ok().map(|tp| (clearance_of(tp), x.g, x.map)))
            .collect();
        // Highest potential first: deep samples crowd the landing points.
        let first = scored.iter().find(|c| c.0 >= 2.0 * needed).copied().ok_or(NumericError::SampleOnEdge)?;
        let second =
            scored.iter().find(|c| c.1 <= first.1 / 3.0 && c.0 >= needed).copied().ok_or(NumericError::SampleOnEdge)?;
        for (clear, g, map) in [first, second] {
            let tpt = chart_coordinate(t.p, &map)?;
            if clear < needed || t.locate(tpt) != Some(*face) {
                return Err(NumericError::SampleOnEdge.into());
            }
            samples.push((*face, FaceSample { region: *r, angle: a.clone(), g, map }));
        }
    }
    let q = t.q;
    let tol = opts.portrait_tol;
    let portraits = crate::exec::map_collect(&samples, |(_, s)| orbit_portrait_numeric(&s.map, q, tol));
    for ((face, s), portrait) in samples.into_iter().zip(portraits) {
        let portrait = portrait?;
        let f = &mut t.faces[face];
        match &f.portrait {
            Some(existing) if *existing != portrait => {
                return Err(NumericError::PortraitMismatch(format!(
                    "face {face}: {existing} versus {portrait} at angle {} G={:.3}",
                    s.angle, s.g
                ))
                .into());
            }
            Some(_) => {}
            None => f.portrait = Some(portrait),
        }
        f.samples.push(s);
    }
    Ok(())
}

/// Edge kinds from the portraits of the faces on either side.
pub fn classify_edges(t: &Tessellation) -> Vec<EdgeKind> {
    (0..t.edges.len())
        .map(|e| {
            let (a, b) = (t.dart_face[2 * e], t.dart_face[2 * e + 1]);
            match (&t.faces[a].portrait, &t.faces[b].portrait) {
                (Some(x), Some(y)) => classify_edge(x, y),
                _ => EdgeKind::Inactive,
            }
        })
        .collect()
}

/// Faces around a parabolic vertex in counterclockwise order, each with the
/// dart leaving the vertex that bounds it on the right.
pub fn faces_around(t: &Tessellation, v: usize) -> Vec<(usize, usize)> {
    t.vertices[v].rotation.iter().map(|&d| (d, t.dart_face[d])).collect()
}

fn arc_contains(from: &Angle, to: &Angle, x: &Angle) -> bool {
    let w = to.sub(from);
    let y = x.sub(from);
    y < w && y != Angle::zero()
}

fn arc_len(from: &Angle, to: &Angle) -> f64 {
    let w = to.sub(from).to_f64();
    if w == 0.0 {
        1.0
    } else {
        w
    }
}

/// Pairs of same-region edges with a common parabolic vertex, each with the
/// side that meets no other escape region, and their nesting.
pub fn wake_detect(t: &Tessellation) -> Vec<Wake> {
    let mut wakes: Vec<Wake> = Vec::new();
    for i in 0..t.edges.len() {
        for j in i + 1..t.edges.len() {
            let (ei, ej) = (&t.edges[i], &t.edges[j]);
            if ei.region != ej.region || ei.parabolic != ej.parabolic {
                continue;
            }
            // The closed curve: out along i, back along j.
            let walk = [2 * i, 2 * j + 1];
            let other_ideal: Vec<usize> = (0..t.regions.len()).filter(|&r| r != ei.region).collect();
            let left_clear = other_ideal.iter().all(|&r| !t.left_of_walk(&walk, t.vertex_w(r)));
            let right_clear = other_ideal.iter().all(|&r| t.left_of_walk(&walk, t.vertex_w(r)));
            // The sector at the ideal vertex to the left of i→j is the
            // clockwise turn from i to j, i.e. the arc of increasing angle.
            let (left_arc, right_arc) = ((ej.angle.clone(), ei.angle.clone()), (ei.angle.clone(), ej.angle.clone()));
            let take_left = match (left_clear, right_clear) {
                (true, false) => true,
                (false, true) => false,
                _ => arc_len(&left_arc.0, &left_arc.1) <= arc_len(&right_arc.0, &right_arc.1),
            };
            let ((from, to), on_left) = if take_left { (left_arc, true) } else { (right_arc, false) };
            let faces = (0..t.faces.len())
                .filter(|&f| {
                    let probe = face_probe(t, f);
                    probe.is_some_and(|w| t.left_of_walk(&walk, w) == on_left)
                })
                .collect();
            wakes.push(Wake { region: ei.region, vertex: ei.parabolic, edges: [i, j], from, to, faces, parent: None });
        }
    }
    let snapshot = wakes.clone();
    for (k, w) in wakes.iter_mut().enumerate() {
        w.parent = snapshot
            .iter()
            .enumerate()
            .filter(|(m, o)| *m != k && wake_nested_in(w, o))
            .min_by(|a, b| arc_len(&a.1.from, &a.1.to).total_cmp(&arc_len(&b.1.from, &b.1.to)))
            .map(|(m, _)| m);
    }
    debug_assert!(wakes_consistent(&wakes));
    wakes
}

/// Whether the wakes of each region are pairwise disjoint or nested, as
/// arcs of angles.
pub fn wakes_consistent(wakes: &[Wake]) -> bool {
    wakes.iter().enumerate().all(|(i, w)| {
        wakes[i + 1..].iter().all(|o| {
            if w.region != o.region || wake_nested_in(w, o) || wake_nested_in(o, w) {
                return true;
            }
            let touches = |x: &Wake, y: &Angle| arc_contains(&x.from, &x.to, y);
            !touches(o, &w.from) && !touches(o, &w.to) && !touches(w, &o.from) && !touches(w, &o.to)
        })
    })
}

/// Whether `inner` lies in `outer`: same region and nested angle arcs.
pub fn wake_nested_in(inner: &Wake, outer: &Wake) -> bool {
    if inner.region != outer.region || (inner.from == outer.from && inner.to == outer.to) {
        return false;
    }
    let inside = |x: &Angle| x == &outer.from || x == &outer.to || arc_contains(&outer.from, &outer.to, x);
    inside(&inner.from) && inside(&inner.to) && arc_len(&inner.from, &inner.to) < arc_len(&outer.from, &outer.to)
}

/// A point strictly inside face `f`, from its samples.
fn face_probe(t: &Tessellation, f: usize) -> Option<C64> {
    let s = t.faces[f].samples.first()?;
    chart_coordinate(t.p, &s.map).ok().map(|x| to_w(x, t.beta))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TessellationJson {
    pub q: u32,
    pub p: u32,
    pub ideal_vertices: usize,
    pub parabolic_vertices: usize,
    pub expected_parabolic_vertices: usize,
    pub edges: usize,
    pub faces: usize,
    pub components: usize,
    pub h1_rank: usize,
    pub vertex_list: Vec<VertexJson>,
    pub edge_list: Vec<EdgeJson>,
    pub face_list: Vec<FaceJson>,
    pub wakes: Vec<WakeJson>,
    pub max_edges_per_vertex: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VertexJson {
    pub kind: String,
    pub t: Option<[f64; 2]>,
    pub edges: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EdgeJson {
    pub region: String,
    pub angle: String,
    pub parabolic: usize,
    pub kind: EdgeKind,
    pub faces: [usize; 2],
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FaceJson {
    pub h1_rank: usize,
    pub portrait: Option<PortraitJson>,
    pub samples: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WakeJson {
    pub region: String,
    pub angles: [String; 2],
    pub vertex: usize,
    pub kind: EdgeKind,
    pub parent: Option<usize>,
}

impl Tessellation {
    pub fn to_json(&self) -> TessellationJson {
        let kinds = self.edge_kinds();
        let wakes = wake_detect(self);
        TessellationJson {
            q: self.q,
            p: self.p,
            ideal_vertices: self.ideal_count(),
            parabolic_vertices: self.parabolic_count(),
            expected_parabolic_vertices: self.expected_parabolic,
            edges: self.edges.len(),
            faces: self.faces.len(),
            components: self.components,
            h1_rank: self.h1_rank(),
            vertex_list: self
                .vertices
                .iter()
                .map(|v| match &v.kind {
                    VertexKind::Ideal { region } => VertexJson {
                        kind: format!("ideal:{}", self.regions[*region].label()),
                        t: None,
                        edges: v.rotation.iter().map(|d| d / 2).collect(),
                    },
                    VertexKind::Parabolic { t, .. } => VertexJson {
                        kind: "parabolic".into(),
                        t: Some([t.re, t.im]),
                        edges: v.rotation.iter().map(|d| d / 2).collect(),
                    },
                })
                .collect(),
            edge_list: self
                .edges
                .iter()
                .enumerate()
                .map(|(i, e)| EdgeJson {
                    region: self.regions[e.region].label(),
                    angle: e.angle.to_string(),
                    parabolic: e.parabolic,
                    kind: kinds[i],
                    faces: [self.dart_face[2 * i], self.dart_face[2 * i + 1]],
                })
                .collect(),
            face_list: self
                .faces
                .iter()
                .map(|f| FaceJson {
                    h1_rank: f.h1_rank(),
                    portrait: f.portrait.as_ref().map(OrbitPortrait::to_json),
                    samples: f.samples.len(),
                })
                .collect(),
            wakes: wakes
                .iter()
                .map(|w| WakeJson {
                    region: self.regions[w.region].label(),
                    angles: [w.from.to_string(), w.to.to_string()],
                    vertex: w.vertex,
                    kind: kinds[w.edges[0]],
                    parent: w.parent,
                })
                .collect(),
            max_edges_per_vertex: self
                .vertices
                .iter()
                .filter(|v| matches!(v.kind, VertexKind::Parabolic { .. }))
                .map(|v| v.rotation.len())
                .max()
                .unwrap_or(0),
        }
    }

    /// Edge polylines in the `t`-plane, for plotting.
    pub fn polylines(&self) -> Vec<(usize, Vec<C64>)> {
        self.edges
            .iter()
            .enumerate()
            .map(|(i, e)| {
                let mut pts = e.polyline.clone();
                if let VertexKind::Parabolic { t, .. } = self.vertices[e.parabolic].kind {
                    pts.push(t);
                }
                (i, pts)
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::portrait::four_ray_faces;

    fn a(n: u64, d: u64) -> Angle {
        Angle::frac(n, d)
    }

    fn portrait(q: u32, classes: &[&[u64]]) -> OrbitPortrait {
        OrbitPortrait::from_numerators(q, classes).unwrap()
    }

    fn wake_with(t: &Tessellation, wakes: &[Wake], region: usize, x: Angle, y: Angle) -> Wake {
        wakes
            .iter()
            .find(|w| w.region == region && w.from == x && w.to == y)
            .unwrap_or_else(|| panic!("no wake ({x}, {y}) in {}", t.regions[region].label()))
            .clone()
    }

    fn rotation_ascends(t: &Tessellation, v: usize) -> bool {
        let angles: Vec<Angle> = t.vertices[v].rotation.iter().map(|d| t.edges[d / 2].angle.clone()).collect();
        let descents = (0..angles.len()).filter(|&i| angles[i] > angles[(i + 1) % angles.len()]).count();
        descents <= 1
    }

    #[test]
    fn s1_period_one() {
        let t = build(1, 1, &BuildOptions::default()).unwrap();
        assert_eq!((t.ideal_count(), t.parabolic_count(), t.edges.len(), t.faces.len()), (1, 2, 4, 3));
        let kinds = t.edge_kinds();
        let wakes = wake_detect(&t);
        assert_eq!(wakes.len(), 2);
        assert!(wakes.iter().all(|w| kinds[w.edges[0]] == EdgeKind::Primary));
        assert!(wakes.iter().all(|w| w.faces.len() == 1));
    }

    #[test]
    fn s1_period_two_central_face_is_trivial() {
        let t = build(2, 1, &BuildOptions::default()).unwrap();
        assert_eq!((t.parabolic_count(), t.edges.len(), t.faces.len()), (6, 12, 7));
        let center = t.locate(C64::new(0.0, 0.0)).unwrap();
        assert!(t.faces[center].portrait.as_ref().unwrap().is_trivial());
        assert!(t.faces.iter().all(|f| f.samples.len() >= 2));
    }

    #[test]
    fn s2_period_one() {
        let t = build(1, 2, &BuildOptions::default()).unwrap();
        assert_eq!((t.ideal_count(), t.parabolic_count(), t.edges.len(), t.faces.len()), (2, 6, 8, 3));
        assert_eq!(t.components, 2);
        let ranks: Vec<usize> = t.faces.iter().map(Face::h1_rank).collect();
        assert_eq!(ranks.iter().sum::<usize>(), 1);
        let kinds = t.edge_kinds();
        for (e, k) in t.edges.iter().zip(&kinds) {
            let want = if e.region == 1 { EdgeKind::Primary } else { EdgeKind::Inactive };
            assert_eq!(*k, want, "edge {}", e.angle);
        }
        let middle = t.faces.iter().position(|f| f.h1_rank() == 1).unwrap();
        assert!(t.faces[middle].portrait.as_ref().unwrap().is_trivial());
        for (i, f) in t.faces.iter().enumerate() {
            if i != middle {
                assert_eq!(f.portrait.as_ref().unwrap(), &portrait(1, &[&[0, 1]]));
            }
        }
    }

    #[test]
    fn s2_period_two() {
        let t = build(2, 2, &BuildOptions::default()).unwrap();
        assert_eq!((t.parabolic_count(), t.edges.len(), t.faces.len()), (8, 24, 16));
        assert_eq!(t.parabolic_count(), t.expected_parabolic);
        let kinds = t.edge_kinds();
        let primary = kinds.iter().filter(|&&k| k == EdgeKind::Primary).count();
        let secondary = kinds.iter().filter(|&&k| k == EdgeKind::Secondary).count();
        assert_eq!((primary, secondary), (16, 8));

        let wakes = wake_detect(&t);
        assert!(wakes_consistent(&wakes));
        let in_region = |r: usize, k: EdgeKind| wakes.iter().filter(|w| w.region == r && kinds[w.edges[0]] == k).count();
        assert_eq!((in_region(1, EdgeKind::Primary), in_region(1, EdgeKind::Secondary)), (6, 0));
        assert_eq!((in_region(0, EdgeKind::Primary), in_region(0, EdgeKind::Secondary)), (2, 4));

        for v in 0..t.vertices.len() {
            if let VertexKind::Parabolic { .. } = t.vertices[v].kind {
                assert!(t.vertices[v].rotation.len() <= 4);
                assert!(rotation_ascends(&t, v), "vertex {v}");
            }
        }

        let angles = [a(10, 24), a(11, 24), a(14, 24), a(17, 24)];
        let model = four_ray_faces(&angles[0], &angles[1], &angles[2], &angles[3], 2, None).unwrap().model;
        let v = t
            .vertices
            .iter()
            .position(|v| {
                let mut here: Vec<Angle> = v.rotation.iter().map(|d| t.edges[d / 2].angle.clone()).collect();
                here.sort();
                here == angles
            })
            .unwrap();
        let around: Vec<OrbitPortrait> =
            faces_around(&t, v).iter().map(|(_, f)| t.faces[*f].portrait.clone().unwrap()).collect();
        let start = around.iter().position(|p| *p == model.faces[0]).unwrap();
        let rotated: Vec<OrbitPortrait> = (0..4).map(|i| around[(start + i) % 4].clone()).collect();
        assert_eq!(rotated, model.faces);
        let central = &model.faces[0];
        assert_eq!(central, &portrait(2, &[&[1, 2, 3, 6]]));
    }

    #[test]
    fn nested_wakes_across_periods() {
        let t1 = build(1, 2, &BuildOptions::default()).unwrap();
        let t2 = build_graph(2, 2, &BuildOptions::default()).unwrap();
        let big = wake_with(&t1, &wake_detect(&t1), 1, a(2, 3), a(5, 6));
        let small = wake_with(&t2, &wake_detect(&t2), 1, a(17, 24), a(19, 24));
        assert!(wake_nested_in(&small, &big));
        assert!(!wake_nested_in(&big, &small));
    }

    #[test]
    fn ideal_vertices_turn_clockwise_with_angle() {
        let t = build_graph(2, 2, &BuildOptions::default()).unwrap();
        for r in 0..2 {
            let rot = &t.vertices[r].rotation;
            let angles: Vec<&Angle> = rot.iter().map(|d| &t.edges[d / 2].angle).collect();
            let ascents = (0..angles.len()).filter(|&i| angles[i] < angles[(i + 1) % angles.len()]).count();
            assert_eq!(ascents, 1);
        }
    }

    #[test]
    fn larger_periods_and_curves_are_rejected() {
        assert!(matches!(
            build_graph(1, 3, &BuildOptions::default()),
            Err(Error::Numeric(NumericError::ChartUnavailable(3)))
        ));
    }
}
