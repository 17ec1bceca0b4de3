//! `cubicsp`: command-line front end. JSON goes to stdout, diagnostics to
//! stderr. Exit status 0 on success, 2 on domain errors (including usage
//! errors), 3 on numeric failures.

mod config;
mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use cubicsp::angle::{self, Angle};
use cubicsp::combinatorics;
use cubicsp::dynamics::CubicMap;
use cubicsp::error::{AngleError, CountError, NumericError, PortraitError};
use cubicsp::parameter::{self, CenterKind, EscapeRegion, ParamRayOptions};
use cubicsp::portrait::{self, OrbitPortrait};
use cubicsp::rays::{self, RayOptions};
use cubicsp::render::{self, ImageJob, Polyline, Shading, Target, Window};
use cubicsp::tessellation::{self, BuildOptions};
use num_complex::Complex64 as C64;
use serde_json::{json, Value};

use config::Config;

#[derive(Parser, Debug)]
#[command(name = "cubicsp", version, about = "Cubic polynomials with a periodic critical point: angles, portraits, rays, tessellations and pictures")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    global: Global,
}

#[derive(Args, Debug, Clone)]
struct Global {
    /// key = value file with defaults for gmin, gmax, tol, res, threads, step, cluster, flood_res, width, zoom.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads (default: logical cores; 1 runs sequentially).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Write the result (image, SVG or JSON) to this file.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Exact angle arithmetic under tripling.
    Angle {
        #[arg(value_enum)]
        op: AngleOp,
        /// Angle as num/den.
        angle: String,
        #[arg(long)]
        q: Option<u32>,
    },
    /// Orbit portraits. Portraits are written as classes joined by `~`,
    /// separated by `;`, e.g. `1/8~3/8;2/8~6/8`; `trivial` needs --q.
    Portrait {
        #[arg(value_enum)]
        op: PortraitOp,
        args: Vec<String>,
        #[arg(long)]
        q: Option<u32>,
        #[command(flatten)]
        map: MapArgs,
        /// Clustering tolerance for numerical portraits [default: 1e-4].
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Counting formulas: a tessellation row for --q and --p, curve data for
    /// --p alone, angle counts for --q alone.
    Count {
        #[arg(long)]
        q: Option<u32>,
        #[arg(long)]
        p: Option<u32>,
        /// H1 ranks `kernel,image` for rows outside the known table.
        #[arg(long)]
        h1: Option<String>,
    },
    /// Centers of hyperbolic components: kind A, B:m,n or D:q.
    Centers {
        #[arg(long)]
        p: u32,
        #[arg(long, default_value = "A")]
        kind: String,
    },
    /// Render the filled Julia set of F(z) = z³ - 3a²z + 2a³ + v.
    Julia {
        #[command(flatten)]
        map: MapArgs,
        #[command(flatten)]
        image: ImageArgs,
        /// Dynamic rays to overlay, comma separated.
        #[arg(long, value_delimiter = ',')]
        theta: Vec<String>,
    },
    /// Render the curve S_p (p = 1, 2) in its chart coordinate.
    Param {
        #[arg(long)]
        p: u32,
        #[command(flatten)]
        image: ImageArgs,
        /// Escape region for --phi rays (s1, inner, outer).
        #[arg(long)]
        region: Option<String>,
        /// Parameter rays to overlay, comma separated.
        #[arg(long, value_delimiter = ',')]
        phi: Vec<String>,
    },
    /// Trace a dynamic ray.
    Ray {
        #[command(flatten)]
        map: MapArgs,
        #[arg(long)]
        theta: String,
        #[command(flatten)]
        trace: TraceArgs,
    },
    /// Trace a parameter ray and classify its landing map.
    Pray {
        #[arg(long)]
        p: u32,
        #[arg(long)]
        region: String,
        #[arg(long)]
        phi: String,
        #[command(flatten)]
        trace: TraceArgs,
        /// Omit the ray samples from the output.
        #[arg(long)]
        landing_only: bool,
    },
    /// Build the tessellation Tes_q(S̄_p) (p = 1, 2).
    Tess {
        #[arg(long)]
        q: u32,
        #[arg(long)]
        p: u32,
        /// Clustering radius for parabolic vertices [default: 1e-3].
        #[arg(long)]
        tol: Option<f64>,
        /// Side of the picture written with --out (.svg, .png or .ppm).
        #[arg(long)]
        res: Option<usize>,
        /// Picture window `cx,cy,width`.
        #[arg(long, allow_hyphen_values = true)]
        window: Option<String>,
    },
    /// Kneading invariant of an escaping map.
    Knead {
        #[command(flatten)]
        map: MapArgs,
        #[arg(long)]
        p: u32,
        /// Exact co-critical angle for the wall, if known.
        #[arg(long)]
        theta: Option<String>,
        #[arg(long, value_enum, default_value_t = KneadMethod::Wall)]
        method: KneadMethod,
        /// Grid side for the flood-fill method [default: 512].
        #[arg(long)]
        res: Option<usize>,
    },
    /// Landing-point stability of a dynamic ray across a one-parameter family.
    /// Without --phi the family is z³ + z² + (1+s)z + s; with --region and
    /// --phi it is the line through the landing map of that parameter ray in
    /// direction `--dir` (turns, relative to the ray).
    Probe {
        #[arg(long)]
        theta: String,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        s: Vec<f64>,
        #[arg(long)]
        p: Option<u32>,
        #[arg(long)]
        region: Option<String>,
        #[arg(long)]
        phi: Option<String>,
        #[arg(long, default_value_t = 0.25, allow_hyphen_values = true)]
        dir: f64,
    },
    /// Side-by-side dynamic and parameter pictures at the Misiurewicz landing
    /// map of a parameter ray.
    Similar {
        #[arg(long)]
        p: u32,
        #[arg(long)]
        region: String,
        #[arg(long)]
        phi: String,
        /// Dynamic-plane width before zooming [default: 4].
        #[arg(long)]
        width: Option<f64>,
        /// Magnification [default: 1].
        #[arg(long)]
        zoom: Option<f64>,
        #[arg(long)]
        res: Option<usize>,
    },
}

#[derive(Args, Debug, Clone)]
struct MapArgs {
    /// Marked critical point, `re,im` or `re`.
    #[arg(long, allow_hyphen_values = true)]
    a: Option<String>,
    /// Critical value F(a), `re,im` or `re`.
    #[arg(long, allow_hyphen_values = true)]
    v: Option<String>,
}

#[derive(Args, Debug, Clone)]
struct ImageArgs {
    /// Window `cx,cy,width` [default: 0,0,4].
    #[arg(long, allow_hyphen_values = true)]
    window: Option<String>,
    /// Image width and height in pixels [default: 512].
    #[arg(long)]
    res: Option<usize>,
    #[arg(long, value_enum, default_value_t = ShadingArg::Potential)]
    shading: ShadingArg,
}

#[derive(Args, Debug, Clone)]
struct TraceArgs {
    /// Smallest potential traced.
    #[arg(long)]
    gmin: Option<f64>,
    /// Potential of the first sample.
    #[arg(long)]
    gmax: Option<f64>,
    /// Ratio between consecutive potentials.
    #[arg(long)]
    step: Option<f64>,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum AngleOp {
    Period,
    Coperiod,
    Preperiod,
    Triple,
    Triad,
    Twin,
    Cycle,
    GrandOrbit,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum PortraitOp {
    Formal,
    Amalgamate,
    Classify,
    TwoRay,
    ThreeRay,
    FourRay,
    Numeric,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum KneadMethod {
    Wall,
    Flood,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum ShadingArg {
    Potential,
    Angular,
}

enum Failure {
    Domain(String),
    Numeric(String),
    Io(String),
}

impl From<AngleError> for Failure {
    fn from(e: AngleError) -> Self {
        Failure::Domain(e.to_string())
    }
}

impl From<PortraitError> for Failure {
    fn from(e: PortraitError) -> Self {
        Failure::Domain(e.to_string())
    }
}

impl From<CountError> for Failure {
    fn from(e: CountError) -> Self {
        Failure::Domain(e.to_string())
    }
}

impl From<NumericError> for Failure {
    fn from(e: NumericError) -> Self {
        match e {
            NumericError::ChartUnavailable(_) | NumericError::ZeroParameter | NumericError::Multiplicity(_) => {
                Failure::Domain(e.to_string())
            }
            _ => Failure::Numeric(e.to_string()),
        }
    }
}

impl From<cubicsp::Error> for Failure {
    fn from(e: cubicsp::Error) -> Self {
        match e {
            cubicsp::Error::Numeric(n) => n.into(),
            other => Failure::Domain(other.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Io(e.to_string())
    }
}

type Res<T> = Result<T, Failure>;

fn domain<T>(msg: impl Into<String>) -> Res<T> {
    Err(Failure::Domain(msg.into()))
}

struct Ctx {
    config: Config,
    out: Option<PathBuf>,
}

impl Ctx {
    /// Flag value, else config value, else default.
    fn pick<T: std::str::FromStr + Copy>(&self, flag: Option<T>, key: &str, default: T) -> Res<T> {
        match flag {
            Some(x) => Ok(x),
            None => Ok(self.config.get(key).map_err(Failure::Domain)?.unwrap_or(default)),
        }
    }

    fn require_out(&self) -> Res<&Path> {
        match &self.out {
            Some(p) => Ok(p),
            None => domain("this command writes a file; pass --out FILE"),
        }
    }
}

fn parse_angle(s: &str) -> Res<Angle> {
    if !s.contains('/') {
        return domain(format!("angle {s:?} must be written as num/den"));
    }
    Ok(s.parse::<Angle>()?)
}

fn parse_complex(s: &str) -> Res<C64> {
    let bad = || Failure::Domain(format!("cannot parse complex number {s:?}; expected re,im"));
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let num = |x: &str| x.parse::<f64>().map_err(|_| bad());
    match parts[..] {
        [re] => Ok(C64::new(num(re)?, 0.0)),
        [re, im] => Ok(C64::new(num(re)?, num(im)?)),
        _ => Err(bad()),
    }
}

fn parse_map(m: &MapArgs) -> Res<CubicMap> {
    match (&m.a, &m.v) {
        (Some(a), Some(v)) => Ok(CubicMap::new(parse_complex(a)?, parse_complex(v)?)),
        _ => domain("both --a and --v are required"),
    }
}

fn parse_window(s: Option<&str>, default: Window) -> Res<Window> {
    let Some(s) = s else { return Ok(default) };
    let xs: Vec<f64> = s
        .split(',')
        .map(|x| x.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| Failure::Domain(format!("bad window {s:?}; expected cx,cy,width")))?;
    match xs[..] {
        [cx, cy, w] if w > 0.0 && w.is_finite() => Ok(Window::new(C64::new(cx, cy), w)),
        _ => domain(format!("bad window {s:?}; expected cx,cy,width with width > 0")),
    }
}

fn parse_region(p: u32, name: &str) -> Res<EscapeRegion> {
    EscapeRegion::named(p, name).map_or_else(
        || domain(format!("unknown region {name:?} for p = {p}; use s1 for p = 1, inner or outer for p = 2")),
        Ok,
    )
}

fn parse_portrait(s: &str, q: Option<u32>) -> Res<OrbitPortrait> {
    if s.trim() == "trivial" {
        return match q {
            Some(q) => Ok(OrbitPortrait::trivial(q)),
            None => domain("the trivial portrait needs --q"),
        };
    }
    let classes: Vec<Vec<Angle>> = s
        .split(';')
        .map(|c| c.split(['~', '≃']).map(parse_angle).collect::<Res<Vec<_>>>())
        .collect::<Res<_>>()?;
    let q = match q {
        Some(q) => q,
        None => match classes.first().and_then(|c| c.first()).map(|a| a.period()) {
            Some(Ok(Some(q))) => q,
            _ => return domain(format!("cannot infer the period of {s:?}; pass --q")),
        },
    };
    Ok(OrbitPortrait::new(q, classes)?)
}

fn portrait_json(p: &OrbitPortrait) -> Value {
    json!({ "text": p.to_string(), "portrait": output::to_value(&p.to_json()) })
}

fn check_res(res: usize) -> Res<usize> {
    if res == 0 || res > render::MAX_RESOLUTION {
        return domain(format!("resolution must be in 1..={}", render::MAX_RESOLUTION));
    }
    Ok(res)
}

fn trace_opts(ctx: &Ctx, t: &TraceArgs, base: RayOptions) -> Res<RayOptions> {
    let opts = RayOptions {
        g_min: ctx.pick(t.gmin, "gmin", base.g_min)?,
        g_max: ctx.pick(t.gmax, "gmax", base.g_max)?,
        step_factor: ctx.pick(t.step, "step", base.step_factor)?,
        ..base
    };
    if !(opts.g_min > 0.0 && opts.g_min < opts.g_max && opts.step_factor > 0.0 && opts.step_factor < 1.0) {
        return domain("need 0 < gmin < gmax and 0 < step < 1");
    }
    Ok(opts)
}

fn write_raster(raster: &render::Raster, path: &Path) -> Res<()> {
    raster.save(path)?;
    Ok(())
}

fn image_summary(path: &Path, job: &ImageJob) -> Value {
    json!({
        "out": path.display().to_string(),
        "width": job.width,
        "height": job.height,
        "window": output::to_value(&job.window),
        "overlays": job.overlays.polylines.len(),
    })
}

fn save_job(job: &ImageJob, path: &Path, draw: impl Fn(&ImageJob) -> render::Raster) -> Res<Value> {
    if path.extension().is_some_and(|e| e == "svg") {
        std::fs::write(path, render::svg_overlay(job))?;
    } else {
        write_raster(&draw(job), path)?;
    }
    Ok(image_summary(path, job))
}

fn shading(s: ShadingArg) -> Shading {
    match s {
        ShadingArg::Potential => Shading::Potential,
        ShadingArg::Angular => Shading::Angular,
    }
}

fn cmd_angle(op: AngleOp, raw: &str, q: Option<u32>) -> Res<Value> {
    let theta = parse_angle(raw)?;
    let need_q = |theta: &Angle| -> Res<u32> {
        match q {
            Some(q) => Ok(q),
            None => match (theta.period()?, theta.co_period()?) {
                (Some(q), _) | (None, Some(q)) => Ok(q),
                _ => domain(format!("{theta} is neither periodic nor co-periodic")),
            },
        }
    };
    Ok(match op {
        AngleOp::Period => json!(theta.period()?),
        AngleOp::Coperiod => json!(theta.co_period()?),
        AngleOp::Preperiod => {
            let (l, n) = theta.preperiod_and_period()?;
            json!({ "preperiod": l, "period": n })
        }
        AngleOp::Triple => json!(theta.triple()),
        AngleOp::Triad => output::to_value(&angle::triad_of(&theta)?),
        AngleOp::Twin => json!(angle::twin(&theta)?),
        AngleOp::Cycle => json!(angle::cycle_of(&theta, need_q(&theta)?)?),
        AngleOp::GrandOrbit => output::to_value(&angle::grand_orbit_id(&theta, need_q(&theta)?)?),
    })
}

fn cmd_portrait(ctx: &Ctx, op: PortraitOp, args: &[String], q: Option<u32>, map: &MapArgs, tol: Option<f64>) -> Res<Value> {
    let arity = |n: usize| -> Res<()> {
        if args.len() != n {
            return domain(format!("expected {n} arguments, got {}", args.len()));
        }
        Ok(())
    };
    let angles = || args.iter().map(|s| parse_angle(s)).collect::<Res<Vec<_>>>();
    let model_q = |xs: &[Angle]| -> Res<u32> {
        match q {
            Some(q) => Ok(q),
            None => xs[0].co_period()?.map_or_else(|| domain(format!("{} is not co-periodic", xs[0])), Ok),
        }
    };
    let model_json = |m: &portrait::LocalModel| {
        json!({ "angles": m.angles, "faces": m.faces.iter().map(portrait_json).collect::<Vec<_>>() })
    };
    Ok(match op {
        PortraitOp::Formal => {
            arity(1)?;
            let p = parse_portrait(&args[0], q)?;
            json!({ "portrait": portrait_json(&p), "formal": portrait::is_formal(&p), "unlinked": portrait::is_unlinked(&p), "size": portrait::size(&p) })
        }
        PortraitOp::Amalgamate => {
            arity(2)?;
            let (p1, p2) = (parse_portrait(&args[0], q)?, parse_portrait(&args[1], q)?);
            let m = portrait::amalgamate(&p1, &p2)?;
            json!({ "result": portrait_json(&m), "formal": portrait::is_formal(&m) })
        }
        PortraitOp::Classify => {
            arity(2)?;
            let (p1, p2) = (parse_portrait(&args[0], q)?, parse_portrait(&args[1], q)?);
            json!(portrait::classify_edge(&p1, &p2))
        }
        PortraitOp::TwoRay => {
            arity(2)?;
            let xs = angles()?;
            model_json(&portrait::two_ray_faces(&xs[0], &xs[1], model_q(&xs)?, None)?)
        }
        PortraitOp::ThreeRay => {
            arity(3)?;
            let xs = angles()?;
            model_json(&portrait::three_ray_faces(&xs[0], &xs[1], &xs[2], model_q(&xs)?, None)?)
        }
        PortraitOp::FourRay => {
            arity(4)?;
            let xs = angles()?;
            let f = portrait::four_ray_faces(&xs[0], &xs[1], &xs[2], &xs[3], model_q(&xs)?, None)?;
            let faces = &f.model.faces;
            let kinds: Vec<_> = (0..faces.len()).map(|i| portrait::classify_edge(&faces[i], &faces[(i + 1) % faces.len()])).collect();
            let mut v = model_json(&f.model);
            v["shifts"] = json!(f.shifts);
            v["edge_kinds"] = json!(kinds);
            v
        }
        PortraitOp::Numeric => {
            arity(0)?;
            let Some(q) = q else { return domain("numeric portraits need --q") };
            let f = parse_map(map)?;
            let tol = ctx.pick(tol, "tol", 1e-4)?;
            portrait_json(&rays::orbit_portrait_numeric(&f, q, tol)?)
        }
    })
}

/// Exact integer as a JSON number when it fits in 64 bits, else a string.
fn big(x: &impl std::fmt::Display) -> Value {
    let s = x.to_string();
    s.parse::<i64>().map_or_else(|_| json!(s), |n| json!(n))
}

fn cmd_count(q: Option<u32>, p: Option<u32>, h1: Option<&str>) -> Res<Value> {
    let positive = |x: u32| if x == 0 { domain("--q and --p must be positive") } else { Ok(x) };
    Ok(match (q.map(positive).transpose()?, p.map(positive).transpose()?) {
        (Some(q), Some(p)) => {
            let ranks = match h1 {
                Some(s) => {
                    let xs: Vec<u64> = s
                        .split(',')
                        .map(|x| x.trim().parse())
                        .collect::<Result<_, _>>()
                        .map_err(|_| Failure::Domain(format!("bad --h1 {s:?}; expected kernel,image")))?;
                    match xs[..] {
                        [k, i] => (k, i),
                        _ => return domain("--h1 takes two ranks"),
                    }
                }
                None => match combinatorics::known_h1_ranks(q, p) {
                    Some(r) => r,
                    None => return domain(format!("H1 ranks for (q, p) = ({q}, {p}) are unknown; pass --h1 kernel,image")),
                },
            };
            let row = combinatorics::tess_stats(q, p, ranks)?;
            json!({
                "q": q,
                "p": p,
                "ideal_vertices": big(&row.v_ideal),
                "parabolic_vertices": big(&row.v_par),
                "edges": big(&row.e),
                "faces": big(&row.f),
                "chi": big(&row.chi),
                "h1_kernel_rank": row.h1_kernel_rank,
                "h1_image_rank": row.h1_image_rank,
                "conjectural": row.conjectural,
                "euler_holds": row.euler_holds(),
            })
        }
        (None, Some(p)) => {
            let stats = combinatorics::curve_stats(p)?;
            json!({
                "p": p,
                "degree": big(&combinatorics::degree(p)?),
                "escape_regions": big(&stats.n_p),
                "chi": big(&stats.chi),
                "genus": big(&stats.genus),
            })
        }
        (Some(q), None) => {
            let (periodic, coperiodic) = combinatorics::angle_counts(q)?;
            json!({ "q": q, "periodic": big(&periodic), "coperiodic": big(&coperiodic) })
        }
        (None, None) => return domain("count needs --q, --p or both"),
    })
}

fn cmd_centers(p: u32, kind: &str) -> Res<Value> {
    let kind: CenterKind = kind.parse().map_err(Failure::Domain)?;
    if p == 0 {
        return domain("--p must be positive");
    }
    let maps = parameter::find_centers(p, kind)?;
    Ok(json!({ "p": p, "kind": output::to_value(&kind), "count": maps.len(), "centers": output::to_value(&maps) }))
}

fn cmd_julia(ctx: &Ctx, map: &MapArgs, image: &ImageArgs, thetas: &[String]) -> Res<Value> {
    let f = parse_map(map)?;
    let res = check_res(ctx.pick(image.res, "res", 512)?)?;
    let window = parse_window(image.window.as_deref(), Window::new(C64::new(0.0, 0.0), 4.0))?;
    let angles = thetas.iter().map(|s| parse_angle(s)).collect::<Res<Vec<_>>>()?;
    let path = ctx.require_out()?;
    let mut job = ImageJob::new(Target::Julia(f), window, res, res);
    job.shading = shading(image.shading);
    job.overlays.polylines = render::dynamic_ray_overlay(&f, &angles, render::BLACK);
    job.overlays.points = render::marked_points(&f);
    save_job(&job, path, render::julia_image)
}

fn cmd_param(ctx: &Ctx, p: u32, image: &ImageArgs, region: Option<&str>, phis: &[String]) -> Res<Value> {
    if !(1..=2).contains(&p) {
        return Err(NumericError::ChartUnavailable(p).into());
    }
    let res = check_res(ctx.pick(image.res, "res", 512)?)?;
    let window = parse_window(image.window.as_deref(), Window::new(C64::new(0.0, 0.0), 4.0))?;
    let angles = phis.iter().map(|s| parse_angle(s)).collect::<Res<Vec<_>>>()?;
    let path = ctx.require_out()?;
    let mut job = ImageJob::new(Target::Parameter(p), window, res, res);
    job.shading = shading(image.shading);
    if !angles.is_empty() {
        let regions = match region {
            Some(r) => vec![parse_region(p, r)?],
            None if p == 1 => vec![EscapeRegion::s1()],
            None => vec![EscapeRegion::s2_inner(), EscapeRegion::s2_outer()],
        };
        for r in &regions {
            job.overlays.polylines.extend(render::parameter_ray_overlay(p, r, &angles, render::BLACK));
        }
    }
    save_job(&job, path, render::parameter_image)
}

fn cmd_ray(ctx: &Ctx, map: &MapArgs, theta: &str, t: &TraceArgs) -> Res<Value> {
    let f = parse_map(map)?;
    let theta = parse_angle(theta)?;
    let opts = trace_opts(ctx, t, RayOptions::default())?;
    let ray = rays::trace_dynamic_ray(&f, &theta, &opts)?;
    Ok(output::to_value(&ray))
}

fn cmd_pray(ctx: &Ctx, p: u32, region: &str, phi: &str, t: &TraceArgs, landing_only: bool) -> Res<Value> {
    let region = parse_region(p, region)?;
    let phi = parse_angle(phi)?;
    let base = ParamRayOptions::default();
    let opts = ParamRayOptions {
        g_start: ctx.pick(t.gmax, "gmax", base.g_start)?,
        g_min: ctx.pick(t.gmin, "gmin", base.g_min)?,
        step_factor: ctx.pick(t.step, "step", base.step_factor)?,
    };
    if !(opts.g_min > 0.0 && opts.g_min < opts.g_start && opts.step_factor > 0.0 && opts.step_factor < 1.0) {
        return domain("need 0 < gmin < gmax and 0 < step < 1");
    }
    let mut ray = parameter::trace_parameter_ray(&region, &phi, &opts)?;
    if landing_only {
        ray.samples.clear();
    }
    let mut v = output::to_value(&ray);
    v["chart_landing"] = match ray.landing.map() {
        Some(m) => output::to_value(&parameter::chart_coordinate(p, &m).ok()),
        None => Value::Null,
    };
    Ok(v)
}

fn cmd_tess(ctx: &Ctx, q: u32, p: u32, tol: Option<f64>, res: Option<usize>, window: Option<&str>) -> Res<Value> {
    if q == 0 || p == 0 {
        return domain("--q and --p must be positive");
    }
    let base = BuildOptions::default();
    let opts = BuildOptions { cluster_radius: ctx.pick(tol, "cluster", base.cluster_radius)?, ..base };
    let t = tessellation::build(q, p, &opts)?;
    let mut v = output::to_value(&t.to_json());
    if let Some(path) = &ctx.out {
        let res = check_res(ctx.pick(res, "res", 768)?)?;
        let window = parse_window(window, Window::new(C64::new(0.0, 0.0), 4.0))?;
        let mut job = ImageJob::new(Target::Parameter(p), window, res, res);
        let colors = [render::BLACK, render::RED];
        job.overlays.polylines = t
            .polylines()
            .into_iter()
            .map(|(e, points)| Polyline { points, color: colors[t.edges[e].region % 2] })
            .collect();
        v["image"] = save_job(&job, path, render::parameter_image)?;
    }
    Ok(v)
}

fn cmd_knead(ctx: &Ctx, map: &MapArgs, p: u32, theta: Option<&str>, method: KneadMethod, res: Option<usize>) -> Res<Value> {
    let f = parse_map(map)?;
    if p == 0 {
        return domain("--p must be positive");
    }
    let k = match method {
        KneadMethod::Wall => {
            let theta = theta.map(parse_angle).transpose()?;
            rays::kneading_invariant(&f, theta.as_ref(), p)?
        }
        KneadMethod::Flood => rays::kneading_flood_fill(&f, p, check_res(ctx.pick(res, "flood_res", 512)?)?)?,
    };
    Ok(json!({ "kneading": k.to_string(), "bits": k.0 }))
}

fn cmd_probe(theta: &str, s: &[f64], p: Option<u32>, region: Option<&str>, phi: Option<&str>, dir: f64) -> Res<Value> {
    let theta = parse_angle(theta)?;
    let opts = RayOptions::default();
    let report = match phi {
        None => {
            let s: Vec<f64> = if s.is_empty() { vec![0.0, 0.05, 0.1, 0.2] } else { s.to_vec() };
            rays::parabolic_stability_probe(rays::counterexample_family, &theta, &s, &opts)?
        }
        Some(phi) => {
            let p = p.unwrap_or(2);
            let region = parse_region(p, region.unwrap_or("inner"))?;
            let ray = parameter::trace_parameter_ray(&region, &parse_angle(phi)?, &ParamRayOptions::default())?;
            let Some(f0) = ray.landing.map() else {
                return Err(Failure::Numeric("parameter ray landing was not identified".into()));
            };
            let t0 = parameter::chart_coordinate(p, &f0)?;
            let last = parameter::chart_coordinate(p, &ray.endpoint())?;
            let along = (last - t0) / (last - t0).norm();
            let d = along * C64::from_polar(1.0, 2.0 * std::f64::consts::PI * dir);
            let s: Vec<f64> = if s.is_empty() { (0..=10).map(|i| 0.005 * i as f64).collect() } else { s.to_vec() };
            let family = |x: f64| parameter::chart_map(p, t0 + d * x).unwrap_or(f0);
            rays::parabolic_stability_probe(family, &theta, &s, &opts)?
        }
    };
    Ok(output::to_value(&report))
}

fn cmd_similar(ctx: &Ctx, p: u32, region: &str, phi: &str, width: Option<f64>, zoom: Option<f64>, res: Option<usize>) -> Res<Value> {
    let region = parse_region(p, region)?;
    let ray = parameter::trace_parameter_ray(&region, &parse_angle(phi)?, &ParamRayOptions::default())?;
    let parameter::Landing::Misiurewicz { map: f0, preperiod, period, .. } = ray.landing else {
        return domain(format!("the {phi} ray does not land at a Misiurewicz map"));
    };
    let width = ctx.pick(width, "width", 4.0)?;
    let zoom = ctx.pick(zoom, "zoom", 1.0)?;
    if !(width > 0.0 && zoom > 0.0) {
        return domain("--width and --zoom must be positive");
    }
    let res = check_res(ctx.pick(res, "res", 384)?)?;
    let pair = render::similarity_pair(&f0, p, width, zoom, res)?;
    let mut v = json!({
        "map": output::to_value(&f0),
        "preperiod": preperiod,
        "period": period,
        "derivative": output::to_value(&pair.derivative),
        "dynamic_window": output::to_value(&pair.dynamic.window),
        "parameter_window": output::to_value(&pair.parameter.window),
    });
    if let Some(path) = &ctx.out {
        write_raster(&render::similarity_image(&pair), path)?;
        v["out"] = json!(path.display().to_string());
    }
    Ok(v)
}

fn configure_threads(n: Option<usize>) -> Res<()> {
    let Some(n) = n else { return Ok(()) };
    if n == 0 {
        return domain("--threads must be positive");
    }
    if n == 1 {
        cubicsp::exec::set_mode(cubicsp::exec::ExecMode::Sequential);
    }
    #[cfg(feature = "parallel")]
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Failure::Domain(e.to_string()))?;
    Ok(())
}

fn run(cli: Cli) -> Res<Value> {
    let config = match &cli.global.config {
        Some(path) => Config::load(path).map_err(Failure::Domain)?,
        None => Config::default(),
    };
    let ctx = Ctx { config, out: cli.global.out.clone() };
    let threads = match cli.global.threads {
        Some(n) => Some(n),
        None => ctx.config.get("threads").map_err(Failure::Domain)?,
    };
    configure_threads(threads)?;
    let value = match &cli.command {
        Command::Angle { op, angle, q } => cmd_angle(*op, angle, *q)?,
        Command::Portrait { op, args, q, map, tol } => cmd_portrait(&ctx, *op, args, *q, map, *tol)?,
        Command::Count { q, p, h1 } => cmd_count(*q, *p, h1.as_deref())?,
        Command::Centers { p, kind } => cmd_centers(*p, kind)?,
        Command::Julia { map, image, theta } => return cmd_julia(&ctx, map, image, theta),
        Command::Param { p, image, region, phi } => return cmd_param(&ctx, *p, image, region.as_deref(), phi),
        Command::Ray { map, theta, trace } => cmd_ray(&ctx, map, theta, trace)?,
        Command::Pray { p, region, phi, trace, landing_only } => cmd_pray(&ctx, *p, region, phi, trace, *landing_only)?,
        Command::Tess { q, p, tol, res, window } => return cmd_tess(&ctx, *q, *p, *tol, *res, window.as_deref()),
        Command::Knead { map, p, theta, method, res } => cmd_knead(&ctx, map, *p, theta.as_deref(), *method, *res)?,
        Command::Probe { theta, s, p, region, phi, dir } => cmd_probe(theta, s, *p, region.as_deref(), phi.as_deref(), *dir)?,
        Command::Similar { p, region, phi, width, zoom, res } => {
            return cmd_similar(&ctx, *p, region, phi, *width, *zoom, *res)
        }
    };
    if let Some(path) = &ctx.out {
        std::fs::write(path, output::render(&value) + "\n")?;
    }
    Ok(value)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(v) => {
            use std::io::Write;
            let _ = writeln!(std::io::stdout(), "{}", output::render(&v));
            ExitCode::SUCCESS
        }
        Err(Failure::Domain(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Numeric(msg)) => {
            eprintln!("numeric failure: {msg}");
            ExitCode::from(3)
        }
        Err(Failure::Io(msg)) => {
            eprintln!("i/o error: {msg}");
            ExitCode::from(1)
        }
    }
}
