//! Line-based manifest.
//!
//! The first non-comment line is `fsg-manifest 1`. Every further line is a
//! row kind followed by `key=value` fields; relative paths resolve against
//! the manifest's directory.
//!
//! ```text
//! fsg-manifest 1
//! # source face views (build-map, swap, densify) or frames (curate)
//! view id=0 image=v0.png landmarks=v0.lms pose=-20,5,0 [mask=v0_mask.png] [blur=0.01] [coverage=0.8]
//! # target frames (swap)
//! target id=f000 image=t0.png landmarks=t0.lms pose=3,1,0
//! # evaluation rows (eval)
//! eval video=v1 result=r0.png reference=t0.png pose=t0.pose result_pose=2,1,0 landmarks=t0.lms result_landmarks=r0.lms [verification=0.4]
//! ```
//!
//! `pose` fields take `yaw,pitch,roll` inline or the path of a pose file
//! (first line used). Landmark files hold one face per line:
//! `N x1 y1 ... xN yN`.

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use fsg_core::io::{parse_landmarks, parse_poses};
use fsg_core::{EulerPose, LandmarkSet};

use crate::Invalid;

pub const HEADER: &str = "fsg-manifest 1";

#[derive(Clone, Debug, PartialEq)]
pub struct Row {
    pub kind: String,
    pub line: usize,
    fields: HashMap<String, String>,
}

#[derive(Clone, Debug)]
pub struct Manifest {
    pub dir: PathBuf,
    pub rows: Vec<Row>,
}

impl Manifest {
    pub fn parse(text: &str, dir: &Path) -> Result<Self> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| {
            let t = l.trim();
            !t.is_empty() && !t.starts_with('#')
        });
        match lines.next() {
            Some((_, l)) if l.trim() == HEADER => {}
            Some((n, l)) => bail!(Invalid(format!(
                "manifest line {}: expected {HEADER:?}, found {:?}",
                n + 1,
                l.trim()
            ))),
            None => bail!(Invalid("empty manifest".into())),
        }
        let mut rows = Vec::new();
        for (n, l) in lines {
            let mut tokens = l.split_whitespace();
            let kind = tokens.next().expect("non-empty line").to_string();
            let mut fields = HashMap::new();
            for t in tokens {
                let (k, v) = t.split_once('=').ok_or_else(|| {
                    Invalid(format!(
                        "manifest line {}: field {t:?} is not key=value",
                        n + 1
                    ))
                })?;
                if fields.insert(k.to_string(), v.to_string()).is_some() {
                    bail!(Invalid(format!(
                        "manifest line {}: duplicate field {k}",
                        n + 1
                    )));
                }
            }
            rows.push(Row {
                kind,
                line: n + 1,
                fields,
            });
        }
        Ok(Self {
            dir: dir.to_path_buf(),
            rows,
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading manifest {}", path.display()))?;
        Self::parse(&text, path.parent().unwrap_or(Path::new(".")))
    }

    pub fn of_kind<'a>(&'a self, kind: &'a str) -> impl Iterator<Item = &'a Row> + 'a {
        self.rows.iter().filter(move |r| r.kind == kind)
    }

    pub fn path(&self, p: &str) -> PathBuf {
        self.dir.join(p)
    }
}

impl Row {
    pub fn get(&self, key: &str) -> Option<&str> {
        self.fields.get(key).map(String::as_str)
    }

    pub fn req(&self, key: &str) -> Result<&str> {
        self.get(key).ok_or_else(|| {
            Invalid(format!(
                "manifest line {}: {} row lacks {key}=",
                self.line, self.kind
            ))
            .into()
        })
    }

    pub fn num(&self, key: &str) -> Result<Option<f64>> {
        self.get(key)
            .map(|v| {
                v.parse::<f64>().map_err(|_| {
                    Invalid(format!(
                        "manifest line {}: {key}={v} is not a number",
                        self.line
                    ))
                    .into()
                })
            })
            .transpose()
    }

    pub fn pose(&self, key: &str, m: &Manifest) -> Result<EulerPose> {
        let v = self.req(key)?;
        let inline: Vec<Option<f64>> = v.split(',').map(|t| t.parse().ok()).collect();
        if let [Some(y), Some(p), Some(r)] = inline[..] {
            return Ok(EulerPose::new(y, p, r)?);
        }
        let path = m.path(v);
        let text = std::fs::read_to_string(&path)
            .with_context(|| format!("reading pose file {}", path.display()))?;
        let poses =
            parse_poses(&text).with_context(|| format!("in pose file {}", path.display()))?;
        poses
            .into_iter()
            .next()
            .ok_or_else(|| Invalid(format!("pose file {} is empty", path.display())).into())
    }

    pub fn landmarks(&self, key: &str, m: &Manifest) -> Result<LandmarkSet> {
        read_landmarks(&m.path(self.req(key)?))
    }
}

/// First face of a landmark file.
pub fn read_landmarks(path: &Path) -> Result<LandmarkSet> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading landmarks {}", path.display()))?;
    let sets =
        parse_landmarks(&text).with_context(|| format!("in landmark file {}", path.display()))?;
    sets.into_iter()
        .next()
        .ok_or_else(|| Invalid(format!("landmark file {} is empty", path.display())).into())
}
