//! Pictures of Julia sets and of the curves `S_1`, `S_2`, with polyline
//! overlays. Rasters are written as PNG or PPM; overlays can also be
//! exported as SVG in plane coordinates.

use std::io::Write;
use std::path::Path;

use num_complex::Complex64 as C64;
use serde::Serialize;

use crate::angle::Angle;
use crate::dynamics::{free_orbit_limit, green, orbit_limit_of, CubicMap, FreeOrbit};
use crate::error::NumericError;
use crate::parameter::{chart_coordinate, chart_map, misiurewicz_coordinate, trace_parameter_samples, EscapeRegion, ParamRayOptions};
use crate::rays::{trace_dynamic_ray, RayOptions};

pub type Rgb = [u8; 3];

pub const MAX_RESOLUTION: usize = 8192;
const BUDGET: usize = 600;

/// Rectangle in the plane: `span` is the complex vector across the full
/// width, so a non-real span rotates the picture.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Window {
    pub center: C64,
    pub span: C64,
}

impl Window {
    pub fn new(center: C64, width: f64) -> Self {
        Self { center, span: C64::new(width, 0.0) }
    }

    /// Plane point at fractional pixel position `(x, y)`.
    pub fn point(&self, x: f64, y: f64, w: usize, h: usize) -> C64 {
        let u = x / w as f64 - 0.5;
        let v = (0.5 - y / h as f64) * h as f64 / w as f64;
        self.center + self.span * C64::new(u, v)
    }

    /// Fractional pixel position of a plane point.
    pub fn pixel(&self, z: C64, w: usize, h: usize) -> (f64, f64) {
        let uv = (z - self.center) / self.span;
        ((uv.re + 0.5) * w as f64, (0.5 - uv.im * w as f64 / h as f64) * h as f64)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Target {
    Julia(CubicMap),
    Parameter(u32),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Shading {
    /// Bands of `log_3 G` only.
    #[default]
    Potential,
    /// Also modulate by the angular variable `log_3 G mod 1` checkerboarded
    /// with the external angle.
    Angular,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Polyline {
    pub points: Vec<C64>,
    pub color: Rgb,
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct Overlays {
    pub polylines: Vec<Polyline>,
    pub points: Vec<(C64, Rgb)>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ImageJob {
    pub target: Target,
    pub window: Window,
    pub width: usize,
    pub height: usize,
    pub overlays: Overlays,
    pub shading: Shading,
}

impl ImageJob {
    pub fn new(target: Target, window: Window, width: usize, height: usize) -> Self {
        Self { target, window, width, height, overlays: Overlays::default(), shading: Shading::default() }
    }

    fn validate(&self) {
        assert!(self.window.span.norm() > 0.0, "window width must be positive");
        assert!(self.width <= MAX_RESOLUTION && self.height <= MAX_RESOLUTION, "resolution too large");
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Raster {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<Rgb>,
}

impl Raster {
    pub fn get(&self, x: usize, y: usize) -> Rgb {
        self.pixels[y * self.width + x]
    }

    fn blend(&mut self, x: i64, y: i64, c: Rgb, alpha: f64) {
        if x < 0 || y < 0 || x >= self.width as i64 || y >= self.height as i64 || alpha <= 0.0 {
            return;
        }
        let px = &mut self.pixels[y as usize * self.width + x as usize];
        for k in 0..3 {
            px[k] = (px[k] as f64 * (1.0 - alpha) + c[k] as f64 * alpha).round() as u8;
        }
    }

    /// Anti-aliased line by bilinear splatting at half-pixel spacing.
    fn line(&mut self, p0: (f64, f64), p1: (f64, f64), c: Rgb) {
        let len = ((p1.0 - p0.0).powi(2) + (p1.1 - p0.1).powi(2)).sqrt();
        if !len.is_finite() || len > 1e5 {
            return;
        }
        let n = (2.0 * len).ceil().max(1.0) as usize;
        for i in 0..=n {
            let s = i as f64 / n as f64;
            let x = p0.0 + (p1.0 - p0.0) * s - 0.5;
            let y = p0.1 + (p1.1 - p0.1) * s - 0.5;
            let (fx, fy) = (x.floor(), y.floor());
            let (dx, dy) = (x - fx, y - fy);
            let (ix, iy) = (fx as i64, fy as i64);
            self.blend(ix, iy, c, (1.0 - dx) * (1.0 - dy));
            self.blend(ix + 1, iy, c, dx * (1.0 - dy));
            self.blend(ix, iy + 1, c, (1.0 - dx) * dy);
            self.blend(ix + 1, iy + 1, c, dx * dy);
        }
    }

    fn dot(&mut self, p: (f64, f64), c: Rgb) {
        for dy in -2..=2i64 {
            for dx in -2..=2i64 {
                let r = ((dx * dx + dy * dy) as f64).sqrt();
                self.blend(p.0.floor() as i64 + dx, p.1.floor() as i64 + dy, c, (2.5 - r).clamp(0.0, 1.0));
            }
        }
    }

    pub fn save_png(&self, path: &Path) -> std::io::Result<()> {
        let buf: Vec<u8> = self.pixels.iter().flatten().copied().collect();
        image::save_buffer(path, &buf, self.width as u32, self.height as u32, image::ColorType::Rgb8)
            .map_err(std::io::Error::other)
    }

    pub fn write_ppm<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        write!(out, "P6\n{} {}\n255\n", self.width, self.height)?;
        let buf: Vec<u8> = self.pixels.iter().flatten().copied().collect();
        out.write_all(&buf)
    }

    /// Writes PNG, or binary PPM when the extension is `.ppm`.
    pub fn save(&self, path: &Path) -> std::io::Result<()> {
        match path.extension().and_then(|e| e.to_str()) {
            Some("ppm") => self.write_ppm(std::io::BufWriter::new(std::fs::File::create(path)?)),
            _ => self.save_png(path),
        }
    }
}

pub const BLUE: Rgb = [70, 110, 200];
pub const BROWN: Rgb = [150, 95, 50];
pub const NEUTRAL: Rgb = [128, 128, 128];
pub const BLACK: Rgb = [0, 0, 0];
pub const RED: Rgb = [220, 30, 30];
pub const GREEN: Rgb = [20, 160, 60];

/// Pixel class of a point, before coloring.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PixelClass {
    Escape { g: f64, angle: Option<f64> },
    /// Bounded, attracted to a cycle that meets the marked cycle.
    Marked,
    /// Bounded, attracted to a cycle disjoint from the marked cycle.
    Free,
    Undecided,
}

fn escape_color(g: f64, angle: Option<f64>, shading: Shading) -> Rgb {
    let l = g.max(1e-300).log(3.0);
    let band = l.rem_euclid(1.0);
    let mut shade = 0.55 + 0.4 * band;
    if shading == Shading::Angular {
        if let Some(t) = angle {
            if ((t * 16.0).floor() as i64 + l.floor() as i64) % 2 == 0 {
                shade *= 0.8;
            }
        }
    }
    let v = (255.0 * shade.clamp(0.0, 1.0)) as u8;
    [v, v, v]
}

fn class_color(c: PixelClass, shading: Shading) -> Rgb {
    match c {
        PixelClass::Escape { g, angle } => escape_color(g, angle, shading),
        PixelClass::Marked => BROWN,
        PixelClass::Free => BLUE,
        PixelClass::Undecided => NEUTRAL,
    }
}

/// Attracting cycle of `a` (empty if the marked orbit is not attracted).
fn marked_cycle(map: &CubicMap) -> Vec<C64> {
    match orbit_limit_of(map, map.a, BUDGET) {
        FreeOrbit::Cycle(c) => c.into_iter().map(|p| p.z).collect(),
        _ => Vec::new(),
    }
}

fn meets(cycle: &[C64], marked: &[C64]) -> bool {
    cycle.iter().any(|z| marked.iter().any(|m| (z - m).norm() < 1e-5 * m.norm().max(1.0)))
}

/// Class of the free critical orbit of a parameter.
pub fn classify_parameter(map: &CubicMap) -> PixelClass {
    match free_orbit_limit(map, BUDGET) {
        FreeOrbit::Escape(g) => PixelClass::Escape { g, angle: None },
        FreeOrbit::Cycle(c) => {
            let cycle: Vec<C64> = c.iter().map(|p| p.z).collect();
            if meets(&cycle, &marked_cycle(map)) {
                PixelClass::Marked
            } else {
                PixelClass::Free
            }
        }
        FreeOrbit::Undecided => PixelClass::Undecided,
    }
}

/// Bounded points of a Julia set are colored by the attracting cycle their
/// orbit approaches.
struct JuliaClassifier {
    map: CubicMap,
    marked: Vec<C64>,
    free: Vec<C64>,
}

impl JuliaClassifier {
    fn new(map: &CubicMap) -> Self {
        let marked = marked_cycle(map);
        let free = match free_orbit_limit(map, BUDGET) {
            FreeOrbit::Cycle(c) => c.into_iter().map(|p| p.z).collect(),
            _ => Vec::new(),
        };
        Self { map: *map, marked, free }
    }

    fn classify(&self, z: C64, shading: Shading) -> PixelClass {
        let r = self.map.escape_radius();
        let mut w = z;
        for _ in 0..BUDGET {
            if w.norm() > r {
                let g = green(&self.map, z).unwrap_or(0.0);
                let angle = match shading {
                    Shading::Angular => crate::dynamics::log_bottcher(&self.map, z).ok().map(|b| b.im / std::f64::consts::TAU),
                    Shading::Potential => None,
                };
                return PixelClass::Escape { g, angle };
            }
            w = self.map.eval(w);
        }
        let near = |cycle: &[C64]| cycle.iter().map(|c| (w - c).norm()).fold(f64::INFINITY, f64::min);
        let (dm, df) = (near(&self.marked), near(&self.free));
        if dm.min(df) > 1e-2 {
            PixelClass::Undecided
        } else if dm <= df && !self.marked.is_empty() {
            PixelClass::Marked
        } else {
            PixelClass::Free
        }
    }
}

fn render<F>(job: &ImageJob, classify: F) -> Raster
where
    F: Fn(C64) -> PixelClass + Sync + Send,
{
    job.validate();
    let (w, h) = (job.width, job.height);
    let pixels = crate::exec::map_range(w * h, |i| {
        let z = job.window.point((i % w) as f64 + 0.5, (i / w) as f64 + 0.5, w, h);
        class_color(classify(z), job.shading)
    });
    let mut raster = Raster { width: w, height: h, pixels };
    draw_overlays(&mut raster, job);
    raster
}

fn draw_overlays(raster: &mut Raster, job: &ImageJob) {
    let (w, h) = (job.width, job.height);
    for line in &job.overlays.polylines {
        for seg in line.points.windows(2) {
            raster.line(job.window.pixel(seg[0], w, h), job.window.pixel(seg[1], w, h), line.color);
        }
    }
    for (z, c) in &job.overlays.points {
        raster.dot(job.window.pixel(*z, w, h), *c);
    }
}

pub fn julia_image(job: &ImageJob) -> Raster {
    let Target::Julia(map) = &job.target else { panic!("julia_image needs a Julia target") };
    let c = JuliaClassifier::new(map);
    render(job, |z| c.classify(z, job.shading))
}

pub fn parameter_image(job: &ImageJob) -> Raster {
    let Target::Parameter(p) = job.target else { panic!("parameter_image needs a parameter target") };
    render(job, |t| match chart_map(p, t) {
        Ok(map) => classify_parameter(&map),
        Err(_) => PixelClass::Undecided,
    })
}

/// Per-pixel class, as used for coloring, at the center of pixel `(x, y)`.
pub fn pixel_class(job: &ImageJob, x: usize, y: usize) -> PixelClass {
    let z = job.window.point(x as f64 + 0.5, y as f64 + 0.5, job.width, job.height);
    match &job.target {
        Target::Julia(map) => JuliaClassifier::new(map).classify(z, job.shading),
        Target::Parameter(p) => chart_map(*p, z).map(|m| classify_parameter(&m)).unwrap_or(PixelClass::Undecided),
    }
}

/// Dynamic rays of the given angles, traced down to `g_min`.
pub fn dynamic_ray_overlay(map: &CubicMap, angles: &[Angle], color: Rgb) -> Vec<Polyline> {
    let opts = RayOptions::default();
    crate::exec::map_collect(angles, |a| trace_dynamic_ray(map, a, &opts).ok())
        .into_iter()
        .flatten()
        .map(|ray| Polyline { points: ray.samples.iter().map(|s| s.z).collect(), color })
        .collect()
}

/// The marked critical point `a`, the free one `-a` and the co-critical
/// points `±2a`.
pub fn marked_points(map: &CubicMap) -> Vec<(C64, Rgb)> {
    vec![(map.a, RED), (-map.a, GREEN), (2.0 * map.a, [200, 120, 0]), (-2.0 * map.a, [0, 150, 150])]
}

/// Forward orbit of `z`, as an overlay of dots.
pub fn orbit_overlay(map: &CubicMap, z: C64, n: usize, color: Rgb) -> Vec<(C64, Rgb)> {
    map.orbit(z, n).into_iter().map(|w| (w, color)).collect()
}

/// Parameter rays in the chart coordinate of `S_p`.
pub fn parameter_ray_overlay(p: u32, region: &EscapeRegion, angles: &[Angle], color: Rgb) -> Vec<Polyline> {
    let opts = ParamRayOptions::default();
    crate::exec::map_collect(angles, |a| trace_parameter_samples(region, a, &opts, None).ok())
        .into_iter()
        .flatten()
        .map(|s| Polyline { points: s.iter().filter_map(|x| chart_coordinate(p, &x.map).ok()).collect(), color })
        .collect()
}

/// Overlays as an SVG document in plane coordinates of `window`.
pub fn svg_overlay(job: &ImageJob) -> String {
    let (w, h) = (job.width, job.height);
    let mut s = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">\n"
    );
    let hex = |c: Rgb| format!("#{:02x}{:02x}{:02x}", c[0], c[1], c[2]);
    for line in &job.overlays.polylines {
        let pts: Vec<String> = line
            .points
            .iter()
            .map(|&z| job.window.pixel(z, w, h))
            .filter(|p| p.0.is_finite() && p.1.is_finite())
            .map(|(x, y)| format!("{x:.2},{y:.2}"))
            .collect();
        s += &format!(
            "  <polyline fill=\"none\" stroke=\"{}\" stroke-width=\"1\" points=\"{}\"/>\n",
            hex(line.color),
            pts.join(" ")
        );
    }
    for (z, c) in &job.overlays.points {
        let (x, y) = job.window.pixel(*z, w, h);
        s += &format!("  <circle cx=\"{x:.2}\" cy=\"{y:.2}\" r=\"2.5\" fill=\"{}\"/>\n", hex(*c));
    }
    s + "</svg>\n"
}

/// Side-by-side windows for comparing the dynamic plane near `2a` with the
/// parameter plane near a Misiurewicz map.
#[derive(Clone, Debug, PartialEq)]
pub struct SimilarityPair {
    pub dynamic: ImageJob,
    pub parameter: ImageJob,
    /// Finite-difference estimate of `ds/dt` at the base map.
    pub derivative: C64,
}

/// The dynamic window is centered at `2a` with width `width / zoom`; the
/// parameter window is centered at the base map and magnified by `ds/dt`.
pub fn similarity_pair(f0: &CubicMap, p: u32, width: f64, zoom: f64, res: usize) -> Result<SimilarityPair, NumericError> {
    let t0 = chart_coordinate(p, f0)?;
    let h = 1e-6 * t0.norm().max(1.0);
    let s = |dt: C64| -> Result<C64, NumericError> { misiurewicz_coordinate(f0, &chart_map(p, t0 + dt)?) };
    let ds = (s(C64::new(h, 0.0))? - s(C64::new(-h, 0.0))?) / (2.0 * h);
    if !(ds.norm() > 0.0) {
        return Err(NumericError::ContinuationLost);
    }
    let span = C64::new(width / zoom, 0.0);
    let dynamic = ImageJob::new(Target::Julia(*f0), Window { center: 2.0 * f0.a, span }, res, res);
    let parameter = ImageJob::new(Target::Parameter(p), Window { center: t0, span: span / ds }, res, res);
    Ok(SimilarityPair { dynamic, parameter, derivative: ds })
}

/// Renders a similarity pair into one raster, dynamic plane on the left.
pub fn similarity_image(pair: &SimilarityPair) -> Raster {
    let (a, b) = (julia_image(&pair.dynamic), parameter_image(&pair.parameter));
    let (w, h) = (a.width + b.width, a.height.max(b.height));
    let mut pixels = vec![[255, 255, 255]; w * h];
    for y in 0..h {
        for x in 0..a.width.min(w) {
            if y < a.height {
                pixels[y * w + x] = a.get(x, y);
            }
        }
        for x in 0..b.width {
            if y < b.height {
                pixels[y * w + a.width + x] = b.get(x, y);
            }
        }
    }
    Raster { width: w, height: h, pixels }
}
