//! One function per subcommand.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use fsg_core::appearance::{build_from_inputs, AppearanceMap, ViewInput};
use fsg_core::curation::{curate as run_curation, FrameRecord};
use fsg_core::masks::{coverage_ratio, Rect};
use fsg_core::metrics::{
    aggregate, landmark_error, pose_error, ssim, LandmarkReduction, SwapEval, TABLE_HEADER,
};
use fsg_core::pipeline::{
    densify as run_densify, open_endpoint, swap_sequence, GeneratorHandle, Generators, SourceFace,
    TargetFrame,
};
use fsg_core::poisson::{blend as run_blend, BlendProblem, Method, SolverOptions};
use fsg_core::pose::{pose_to_plane, EulerPose};
use fsg_core::{io, Label, LandmarkSet};
use serde_json::json;

use crate::config::RunConfig;
use crate::imageio::{load_image, load_mask, save_image, save_mask};
use crate::manifest::{read_landmarks, Manifest};
use crate::Invalid;

/// Opens an endpoint; a bare `mock:noise` takes the run seed.
pub fn open_generator(spec: &str, cfg: &RunConfig) -> Result<GeneratorHandle> {
    let spec = if spec == "mock:noise" {
        format!("mock:noise:{}", cfg.seed)
    } else {
        spec.to_string()
    };
    open_endpoint(&spec, cfg.timeout).with_context(|| format!("opening generator {spec}"))
}

fn write_json(path: &Path, value: &serde_json::Value) -> Result<()> {
    let text = serde_json::to_string_pretty(value).expect("json value");
    fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))
}

fn sidecar(path: &Path) -> PathBuf {
    let mut p = path.as_os_str().to_owned();
    p.push(".json");
    PathBuf::from(p)
}

pub fn parse_pose(s: &str) -> Result<EulerPose> {
    let v: Vec<f64> = s
        .split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| Invalid(format!("pose {s:?} is not yaw,pitch,roll")))
        })
        .collect::<std::result::Result<_, _>>()?;
    match v[..] {
        [y, p, r] => Ok(EulerPose::new(y, p, r)?),
        [y, p] => Ok(EulerPose::new(y, p, 0.0)?),
        _ => bail!(Invalid(format!("pose {s:?} is not yaw,pitch,roll"))),
    }
}

fn load_views(m: &Manifest) -> Result<Vec<ViewInput>> {
    let mut views = Vec::new();
    for row in m.of_kind("view") {
        let id: u32 = row
            .req("id")?
            .parse()
            .map_err(|_| Invalid(format!("manifest line {}: view id must be a u32", row.line)))?;
        views.push(ViewInput {
            id,
            pose: row.pose("pose", m)?,
            image: load_image(&m.path(row.req("image")?))?,
            landmarks: row.landmarks("landmarks", m)?,
            flipped: false,
        });
    }
    if views.is_empty() {
        bail!(Invalid("manifest has no view rows".into()));
    }
    Ok(views)
}

pub fn build_map(m: &Manifest, cfg: &RunConfig, out: &Path) -> Result<()> {
    let views = load_views(m)?;
    let n = views.len();
    let (map, kept) = build_from_inputs(
        views,
        cfg.swap.symmetry.as_deref(),
        cfg.swap.prune_radius,
        cfg.swap.blur_threshold,
    )?;
    let f = fs::File::create(out).with_context(|| format!("creating {}", out.display()))?;
    map.write_binary(std::io::BufWriter::new(f))?;
    log::info!(
        "map: {n} inputs, {} views, {} triangles",
        kept.len(),
        map.triangles().len()
    );
    let report: serde_json::Value = serde_json::from_str(&map.to_json()).expect("map json");
    write_json(&sidecar(out), &json!({ "inputs": n, "map": report }))
}

pub fn load_map(path: &Path) -> Result<AppearanceMap> {
    let bytes = fs::read(path).with_context(|| format!("reading map {}", path.display()))?;
    Ok(AppearanceMap::read_binary(&bytes[..])?)
}

/// Weights sorted by decreasing weight (ties by vertex index); boundary
/// corners report a null view id.
pub fn query(map: &AppearanceMap, pose: &EulerPose) -> Result<serde_json::Value> {
    let q = map.query(pose)?;
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| {
        q.weights[b]
            .total_cmp(&q.weights[a])
            .then(q.triangle[a].cmp(&q.triangle[b]))
    });
    let id = |v: usize| {
        if map.is_boundary(v) {
            None
        } else {
            Some(map.views()[v].id)
        }
    };
    Ok(json!({
        "pose": [pose.yaw, pose.pitch, pose.roll],
        "vertices": order.map(|k| q.triangle[k]),
        "views": order.map(|k| id(q.triangle[k])),
        "flipped": order.map(|k| if map.is_boundary(q.triangle[k]) { None } else { Some(map.views()[q.triangle[k]].flipped) }),
        "raw": order.map(|k| q.raw[k]),
        "weights": order.map(|k| q.weights[k]),
    }))
}

pub fn swap(m: &Manifest, cfg: &RunConfig, out: &Path, ext: &str) -> Result<()> {
    let source = SourceFace::build(load_views(m)?, &cfg.swap)?;
    let mut ids = Vec::new();
    let mut frames = Vec::new();
    for row in m.of_kind("target") {
        ids.push(row.req("id")?.to_string());
        frames.push(TargetFrame {
            image: load_image(&m.path(row.req("image")?))?,
            landmarks: row.landmarks("landmarks", m)?,
            pose: row.pose("pose", m)?,
        });
    }
    if frames.is_empty() {
        bail!(Invalid("manifest has no target rows".into()));
    }
    let gens = Generators {
        reenact: open_generator(&cfg.gen_r, cfg)?,
        segment: open_generator(&cfg.gen_s, cfg)?,
        inpaint: open_generator(&cfg.gen_c, cfg)?,
        blend: cfg
            .gen_b
            .as_deref()
            .map(|s| open_generator(s, cfg))
            .transpose()?,
    };
    // generators may be stateful (seeded noise), so frames run in order
    let outputs = swap_sequence(&source, &frames, &cfg.swap, &gens, None)?;
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let mut report = Vec::new();
    for (id, o) in ids.iter().zip(&outputs) {
        let path = out.join(format!("{id}.{ext}"));
        save_image(&o.image, &path)?;
        save_mask(&o.target_mask, &out.join(format!("{id}_mask.png")))?;
        report.push(json!({ "id": id, "image": path.file_name().map(|f| f.to_string_lossy()), "solver": o.report }));
    }
    write_json(
        &out.join("report.json"),
        &json!({ "frames": report, "views": source.map.views().len() }),
    )
}

pub fn blend(
    target: &Path,
    source: &Path,
    mask: &Path,
    cfg: &RunConfig,
    method: Method,
    out: &Path,
) -> Result<()> {
    let t = load_image(target)?;
    let s = load_image(source)?;
    let mask = load_mask(mask)?;
    let problem = BlendProblem::from_segmask(t, s, &mask, cfg.swap.hair_free)?;
    let (img, report) = run_blend(
        &problem,
        &SolverOptions {
            tol: cfg.swap.tol,
            max_iter: None,
            method,
        },
    )?;
    save_image(&img, out)?;
    write_json(
        &sidecar(out),
        &serde_json::to_value(&report).expect("report"),
    )
}

struct EvalRow {
    video: String,
    result: PathBuf,
    reference: PathBuf,
    pose: EulerPose,
    result_pose: EulerPose,
    landmarks: LandmarkSet,
    result_landmarks: LandmarkSet,
    verification: Option<f64>,
}

fn evaluate_row(r: &EvalRow, reduction: LandmarkReduction) -> Result<SwapEval> {
    let x = load_image(&r.result)?;
    let y = load_image(&r.reference)?;
    Ok(SwapEval {
        verification: r.verification,
        ssim: ssim(&x, &y).with_context(|| format!("SSIM of {}", r.result.display()))?,
        euler_err: pose_error(&r.pose, &r.result_pose),
        landmark_err: landmark_error(&r.landmarks, &r.result_landmarks, reduction)?,
    })
}

/// Evaluates every row on a bounded pool of threads; results keep input order.
pub fn eval(
    m: &Manifest,
    reduction: LandmarkReduction,
    method_name: &str,
    out: &Path,
) -> Result<String> {
    let mut rows = Vec::new();
    for row in m.of_kind("eval") {
        rows.push(EvalRow {
            video: row.req("video")?.to_string(),
            result: m.path(row.req("result")?),
            reference: m.path(row.req("reference")?),
            pose: row.pose("pose", m)?,
            result_pose: row.pose("result_pose", m)?,
            landmarks: row.landmarks("landmarks", m)?,
            result_landmarks: row.landmarks("result_landmarks", m)?,
            verification: row.num("verification")?,
        });
    }
    if rows.is_empty() {
        bail!(Invalid("manifest has no eval rows".into()));
    }
    let workers = std::thread::available_parallelism()
        .map_or(1, |n| n.get())
        .min(8);
    let chunk = rows.len().div_ceil(workers);
    let evals: Vec<SwapEval> = std::thread::scope(|s| {
        let handles: Vec<_> = rows
            .chunks(chunk)
            .map(|c| {
                s.spawn(move || {
                    c.iter()
                        .map(|r| evaluate_row(r, reduction))
                        .collect::<Result<Vec<_>>>()
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("eval worker panicked"))
            .collect::<Result<Vec<_>>>()
    })?
    .into_iter()
    .flatten()
    .collect();

    let mut order: Vec<String> = Vec::new();
    let mut groups: HashMap<String, Vec<SwapEval>> = HashMap::new();
    for (r, e) in rows.iter().zip(&evals) {
        if !groups.contains_key(&r.video) {
            order.push(r.video.clone());
        }
        groups.entry(r.video.clone()).or_default().push(*e);
    }
    let grouped: Vec<Vec<SwapEval>> = order
        .iter()
        .map(|v| groups.remove(v).expect("grouped"))
        .collect();
    let summary = aggregate(&grouped)?;
    let mut csv = String::new();
    writeln!(csv, "{TABLE_HEADER}").unwrap();
    writeln!(csv, "{}", summary.csv_row(method_name)).unwrap();
    fs::write(out, &csv).with_context(|| format!("writing {}", out.display()))?;
    let frames: Vec<_> = rows
        .iter()
        .zip(&evals)
        .map(|(r, e)| json!({ "video": r.video, "result": r.result, "eval": e }))
        .collect();
    write_json(
        &sidecar(out),
        &json!({ "method": method_name, "summary": summary, "videos": order, "frames": frames }),
    )?;
    Ok(csv)
}

/// Bounding box of the landmarks, clipped to the frame.
fn landmark_box(l: &LandmarkSet, h: usize, w: usize) -> Rect {
    let (mut x0, mut y0, mut x1, mut y1) = (
        f64::INFINITY,
        f64::INFINITY,
        f64::NEG_INFINITY,
        f64::NEG_INFINITY,
    );
    for p in l.points() {
        x0 = x0.min(p[0]);
        x1 = x1.max(p[0]);
        y0 = y0.min(p[1]);
        y1 = y1.max(p[1]);
    }
    let clip = |v: f64, hi: usize| (v.max(0.0) as usize).min(hi);
    Rect {
        row0: clip(y0.floor(), h),
        col0: clip(x0.floor(), w),
        row1: clip(y1.floor() + 1.0, h),
        col1: clip(x1.floor() + 1.0, w),
    }
}

pub fn curate(m: &Manifest, cfg: &RunConfig, out: &Path) -> Result<Vec<String>> {
    let mut frames = Vec::new();
    for row in m.of_kind("view") {
        let pose = row.pose("pose", m)?;
        let landmarks = row.landmarks("landmarks", m)?;
        let blur = match (row.num("blur")?, row.get("image"), cfg.swap.blur_threshold) {
            (Some(b), _, _) => Some(b),
            (None, Some(img), Some(_)) => {
                Some(fsg_core::appearance::blur_score(&load_image(&m.path(img))?))
            }
            _ => None,
        };
        let coverage = match (row.num("coverage")?, row.get("mask")) {
            (Some(c), _) => c,
            (None, Some(mask)) => {
                let mask = load_mask(&m.path(mask))?;
                coverage_ratio(
                    &mask,
                    landmark_box(&landmarks, mask.height(), mask.width()),
                    Label::Face,
                )?
            }
            (None, None) => bail!(Invalid(format!(
                "manifest line {}: view needs coverage= or mask=",
                row.line
            ))),
        };
        frames.push(FrameRecord {
            id: row.req("id")?.to_string(),
            point: pose_to_plane(&pose),
            roll: pose.roll,
            blur,
            coverage,
            landmarks,
        });
    }
    let kept = run_curation(
        &frames,
        cfg.coverage_min,
        cfg.swap.prune_radius,
        cfg.swap.blur_threshold,
        cfg.frame_cap,
    )?;
    let ids: Vec<String> = kept.into_iter().map(|f| f.id).collect();
    let text: String = ids.iter().map(|i| format!("{i}\n")).collect();
    fs::write(out, text).with_context(|| format!("writing {}", out.display()))?;
    Ok(ids)
}

/// Writes the synthesized view and returns a manifest row describing it.
pub fn densify(
    m: &Manifest,
    cfg: &RunConfig,
    pose: &EulerPose,
    landmarks: &Path,
    id: Option<u32>,
    out: &Path,
) -> Result<String> {
    let views = load_views(m)?;
    let id = id.unwrap_or_else(|| views.iter().map(|v| v.id).max().map_or(0, |x| x + 1));
    let source = SourceFace::build(views, &cfg.swap)?;
    let target = read_landmarks(landmarks)?;
    let gen = open_generator(&cfg.gen_r, cfg)?;
    let view = run_densify(&source, id, pose, &target, &gen, &cfg.swap, None)?;
    save_image(&view.image, out)?;
    let lms = out.with_extension("lms");
    fs::write(
        &lms,
        io::format_landmarks(std::slice::from_ref(&view.landmarks)),
    )
    .with_context(|| format!("writing {}", lms.display()))?;
    Ok(format!(
        "view id={id} image={} landmarks={} pose={},{},{}",
        out.display(),
        lms.display(),
        pose.yaw,
        pose.pitch,
        pose.roll
    ))
}
