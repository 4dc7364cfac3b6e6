//! Paired clear/adverse segmentation corpora.
//!
//! # Manifest format
//!
//! UTF-8 text, one item per line, fields separated by a single TAB. Lines
//! starting with `#` and blank lines are skipped. Directives start with `@`:
//!
//! ```text
//! @classes        <class-definition file>      (required, once)
//! @ignore_index   <0-255>                      (optional, default 255)
//! ```
//!
//! Every other line is a record with exactly seven fields, in this order:
//!
//! ```text
//! scene_id  frame_id  clear_path  adverse_path  label_path  split  weather_tags
//! ```
//!
//! `split` is `train`, `val` or `test`. `weather_tags` is a comma-separated
//! list, written `-` when empty. Relative paths resolve against the
//! directory holding the manifest.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::fs;
use std::path::{Component, Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;

use crate::augment::{self, AugSpec, Photometric, SamplePair};
use crate::label::{ClassSet, DEFAULT_IGNORE_INDEX};
use crate::rng::derive_stream;
use crate::{io, Error, Result};

pub const MANIFEST_FILE: &str = "manifest.tsv";
pub const ONLINE_MANIFEST_FILE: &str = "online.tsv";

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Split {
    Train,
    Val,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Val, Split::Test];

    pub fn as_str(&self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Split {
    type Err = ();

    fn from_str(s: &str) -> std::result::Result<Self, ()> {
        match s {
            "train" => Ok(Split::Train),
            "val" => Ok(Split::Val),
            "test" => Ok(Split::Test),
            _ => Err(()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SceneRecord {
    pub scene_id: String,
    pub frame_id: String,
    pub clear_path: PathBuf,
    pub adverse_path: PathBuf,
    pub label_path: PathBuf,
    pub split: Split,
    pub weather_tags: Vec<String>,
}

impl SceneRecord {
    /// Key used to derive this record's random stream.
    pub fn key(&self) -> String {
        format!("{}/{}", self.scene_id, self.frame_id)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DatasetManifest {
    pub records: Vec<SceneRecord>,
    pub class_set_path: PathBuf,
    pub ignore_index: u8,
    /// Directory relative paths are resolved against.
    pub base_dir: PathBuf,
}

impl DatasetManifest {
    pub fn resolve(&self, path: &Path) -> PathBuf {
        if path.is_absolute() {
            path.to_path_buf()
        } else {
            self.base_dir.join(path)
        }
    }

    pub fn load_class_set(&self) -> Result<ClassSet> {
        let cs = io::read_class_set(&self.resolve(&self.class_set_path))?;
        cs.check_ignore(self.ignore_index)?;
        Ok(cs)
    }

    pub fn count(&self, split: Split) -> usize {
        self.records.iter().filter(|r| r.split == split).count()
    }

    /// Parses manifest text; `origin` is only used in error messages.
    pub fn parse(text: &str, origin: &Path, base_dir: &Path) -> Result<Self> {
        let parse_err = |line: usize, reason: String| Error::Parse {
            path: origin.to_path_buf(),
            line,
            reason,
        };
        let mut records = Vec::new();
        let mut class_set_path = None;
        let mut ignore_index = None;
        let mut seen: HashMap<(String, String), usize> = HashMap::new();

        for (lineno, raw) in text.lines().enumerate() {
            let lineno = lineno + 1;
            let line = raw.strip_suffix('\r').unwrap_or(raw);
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            if let Some(directive) = fields[0].strip_prefix('@') {
                if fields.len() != 2 || fields[1].is_empty() {
                    return Err(parse_err(lineno, format!("directive @{directive} takes one value")));
                }
                match directive {
                    "classes" if class_set_path.is_none() => class_set_path = Some(PathBuf::from(fields[1])),
                    "ignore_index" if ignore_index.is_none() => {
                        ignore_index = Some(fields[1].parse::<u8>().map_err(|_| {
                            parse_err(lineno, format!("bad ignore index `{}`", fields[1]))
                        })?)
                    }
                    "classes" | "ignore_index" => {
                        return Err(parse_err(lineno, format!("@{directive} given twice")))
                    }
                    _ => return Err(parse_err(lineno, format!("unknown directive @{directive}"))),
                }
                continue;
            }
            if fields.len() != 7 {
                return Err(parse_err(
                    lineno,
                    format!("expected 7 tab-separated fields, found {}", fields.len()),
                ));
            }
            for (name, value) in ["scene_id", "frame_id", "clear_path", "adverse_path", "label_path"]
                .iter()
                .zip(&fields)
            {
                if value.is_empty() {
                    return Err(parse_err(lineno, format!("empty {name}")));
                }
            }
            let split = fields[5].parse::<Split>().map_err(|_| Error::UnknownSplit {
                path: origin.to_path_buf(),
                line: lineno,
                value: fields[5].to_string(),
            })?;
            let key = (fields[0].to_string(), fields[1].to_string());
            if seen.insert(key.clone(), lineno).is_some() {
                return Err(Error::DuplicateRecord {
                    path: origin.to_path_buf(),
                    line: lineno,
                    scene_id: key.0,
                    frame_id: key.1,
                });
            }
            let weather_tags = match fields[6] {
                "" | "-" => Vec::new(),
                tags => tags.split(',').map(str::to_string).collect(),
            };
            records.push(SceneRecord {
                scene_id: key.0,
                frame_id: key.1,
                clear_path: fields[2].into(),
                adverse_path: fields[3].into(),
                label_path: fields[4].into(),
                split,
                weather_tags,
            });
        }

        let class_set_path =
            class_set_path.ok_or_else(|| parse_err(0, "missing @classes directive".into()))?;
        if records.is_empty() {
            return Err(parse_err(0, "manifest has no records".into()));
        }
        Ok(Self {
            records,
            class_set_path,
            ignore_index: ignore_index.unwrap_or(DEFAULT_IGNORE_INDEX),
            base_dir: base_dir.to_path_buf(),
        })
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str("# scene_id\tframe_id\tclear_path\tadverse_path\tlabel_path\tsplit\tweather_tags\n");
        out.push_str(&format!("@classes\t{}\n", self.class_set_path.display()));
        if self.ignore_index != DEFAULT_IGNORE_INDEX {
            out.push_str(&format!("@ignore_index\t{}\n", self.ignore_index));
        }
        for r in &self.records {
            let tags = if r.weather_tags.is_empty() {
                "-".to_string()
            } else {
                r.weather_tags.join(",")
            };
            out.push_str(&format!(
                "{}\t{}\t{}\t{}\t{}\t{}\t{}\n",
                r.scene_id,
                r.frame_id,
                r.clear_path.display(),
                r.adverse_path.display(),
                r.label_path.display(),
                r.split,
                tags
            ));
        }
        out
    }
}

pub fn load_manifest(path: &Path) -> Result<DatasetManifest> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let base = path.parent().unwrap_or(Path::new("."));
    DatasetManifest::parse(&text, path, base)
}

pub fn write_manifest(path: &Path, m: &DatasetManifest) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    fs::write(path, m.to_text()).map_err(|e| Error::io(path, e))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum FailureKind {
    Missing,
    Decode(String),
    DimensionMismatch { expected: (u32, u32), found: (u32, u32) },
    ClassOutOfRange { value: u8, x: u32, y: u32 },
    ClassSet(String),
}

impl fmt::Display for FailureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FailureKind::Missing => f.write_str("missing"),
            FailureKind::Decode(reason) => write!(f, "decode failed: {reason}"),
            FailureKind::DimensionMismatch { expected, found } => write!(
                f,
                "dimension mismatch: label is {}x{}, image is {}x{}",
                expected.0, expected.1, found.0, found.1
            ),
            FailureKind::ClassOutOfRange { value, x, y } => {
                write!(f, "class out of range: value {value} at ({x}, {y})")
            }
            FailureKind::ClassSet(reason) => write!(f, "class set: {reason}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Failure {
    /// `scene_id/frame_id`, or empty for manifest-level failures.
    pub record: String,
    pub path: PathBuf,
    pub kind: FailureKind,
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.record.is_empty() {
            write!(f, "{}: {}", self.path.display(), self.kind)
        } else {
            write!(f, "[{}] {}: {}", self.record, self.path.display(), self.kind)
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct VerifyReport {
    pub records_checked: usize,
    pub failures: Vec<Failure>,
}

impl VerifyReport {
    pub fn is_ok(&self) -> bool {
        self.failures.is_empty()
    }
}

fn failure_kind(err: &Error) -> FailureKind {
    match err.root() {
        Error::Io { source, .. } if source.kind() == std::io::ErrorKind::NotFound => FailureKind::Missing,
        Error::Decode { reason, .. } => FailureKind::Decode(reason.clone()),
        Error::ClassOutOfRange { value, x, y, .. } => FailureKind::ClassOutOfRange {
            value: *value,
            x: *x,
            y: *y,
        },
        other => FailureKind::Decode(other.to_string()),
    }
}

fn failure_from(record: &str, path: &Path, err: Error) -> Failure {
    Failure {
        record: record.to_string(),
        path: path.to_path_buf(),
        kind: failure_kind(&err),
    }
}

/// Checks every record and collects all failures; never stops early.
pub fn verify_files(m: &DatasetManifest) -> VerifyReport {
    let class_path = m.resolve(&m.class_set_path);
    let classes = m.load_class_set();
    let mut failures = Vec::new();
    let num_classes = match &classes {
        Ok(cs) => Some(cs.len()),
        Err(e) => {
            failures.push(Failure {
                record: String::new(),
                path: class_path,
                kind: FailureKind::ClassSet(e.to_string()),
            });
            None
        }
    };

    let per_record: Vec<Vec<Failure>> = m
        .records
        .par_iter()
        .map(|r| verify_record(m, r, num_classes))
        .collect();
    failures.extend(per_record.into_iter().flatten());
    VerifyReport {
        records_checked: m.records.len(),
        failures,
    }
}

fn verify_record(m: &DatasetManifest, r: &SceneRecord, num_classes: Option<usize>) -> Vec<Failure> {
    let key = r.key();
    let mut out = Vec::new();
    let label_path = m.resolve(&r.label_path);
    let label = match io::read_label_map(&label_path, m.ignore_index) {
        Ok(l) => {
            if let Some(n) = num_classes {
                if let Err(e) = l.validate(n) {
                    out.push(failure_from(&key, &label_path, e));
                }
            }
            Some(l)
        }
        Err(e) => {
            out.push(failure_from(&key, &label_path, e));
            None
        }
    };
    for image_path in [&r.clear_path, &r.adverse_path] {
        let path = m.resolve(image_path);
        match io::read_image(&path) {
            Ok(img) => {
                if let Some(l) = &label {
                    let (expected, found) = ((l.width(), l.height()), (img.width(), img.height()));
                    if expected != found {
                        out.push(Failure {
                            record: key.clone(),
                            path,
                            kind: FailureKind::DimensionMismatch { expected, found },
                        });
                    }
                }
            }
            Err(e) => out.push(failure_from(&key, &path, e)),
        }
    }
    out
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct CorpusStats {
    pub split_counts: BTreeMap<Split, usize>,
    pub class_names: Vec<String>,
    /// Labelled pixels per class.
    pub class_histogram: Vec<u64>,
    pub scene_frames: BTreeMap<String, usize>,
    pub total_pixels: u64,
    pub ignored_pixels: u64,
    pub failures: Vec<Failure>,
}

impl CorpusStats {
    pub fn num_scenes(&self) -> usize {
        self.scene_frames.len()
    }

    pub fn num_frames(&self) -> usize {
        self.scene_frames.values().sum()
    }

    pub fn ignored_fraction(&self) -> f64 {
        if self.total_pixels == 0 {
            0.0
        } else {
            self.ignored_pixels as f64 / self.total_pixels as f64
        }
    }
}

struct LabelTally {
    histogram: Vec<u64>,
    total: u64,
    ignored: u64,
}

/// Record counts, scene sizes, and a class histogram over every label map.
///
/// Each distinct label file is decoded once even if several records share
/// it; its counts are added once per referencing record.
pub fn corpus_stats(m: &DatasetManifest) -> CorpusStats {
    let mut stats = CorpusStats::default();
    for split in Split::ALL {
        stats.split_counts.insert(split, m.count(split));
    }
    for r in &m.records {
        *stats.scene_frames.entry(r.scene_id.clone()).or_default() += 1;
    }
    let classes = match m.load_class_set() {
        Ok(cs) => cs,
        Err(e) => {
            stats.failures.push(Failure {
                record: String::new(),
                path: m.resolve(&m.class_set_path),
                kind: FailureKind::ClassSet(e.to_string()),
            });
            return stats;
        }
    };
    let n = classes.len();
    stats.class_names = classes.classes().iter().map(|c| c.name.clone()).collect();
    stats.class_histogram = vec![0; n];

    let unique: BTreeSet<PathBuf> = m.records.iter().map(|r| m.resolve(&r.label_path)).collect();
    let tallies: HashMap<PathBuf, std::result::Result<LabelTally, FailureKind>> = unique
        .into_par_iter()
        .map(|path| {
            let tally = io::read_label_map(&path, m.ignore_index)
                .and_then(|l| {
                    l.validate(n)?;
                    let mut histogram = vec![0u64; n];
                    let mut ignored = 0;
                    for &v in l.data() {
                        if v == m.ignore_index {
                            ignored += 1;
                        } else {
                            histogram[v as usize] += 1;
                        }
                    }
                    Ok(LabelTally {
                        histogram,
                        total: l.len() as u64,
                        ignored,
                    })
                })
                .map_err(|e| failure_kind(&e));
            (path, tally)
        })
        .collect();

    for r in &m.records {
        let path = m.resolve(&r.label_path);
        match &tallies[&path] {
            Ok(t) => {
                for (acc, v) in stats.class_histogram.iter_mut().zip(&t.histogram) {
                    *acc += v;
                }
                stats.total_pixels += t.total;
                stats.ignored_pixels += t.ignored;
            }
            Err(kind) => stats.failures.push(Failure {
                record: r.key(),
                path,
                kind: kind.clone(),
            }),
        }
    }
    stats
}

fn sanitize(component: &str) -> String {
    component
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || "._-+".contains(c) { c } else { '_' })
        .collect()
}

fn escapes(path: &Path) -> bool {
    path.components().any(|c| matches!(c, Component::ParentDir))
}

/// Rewrites `path` (as written in `m`) for a manifest living in `out_dir`.
/// Plain relative paths are kept and the file is mirrored into `out_dir`;
/// absolute paths are kept as-is; relative paths that climb out of the
/// manifest directory become absolute.
fn carry_path(m: &DatasetManifest, path: &Path, copies: &mut BTreeMap<PathBuf, PathBuf>, out_dir: &Path) -> PathBuf {
    if path.is_absolute() {
        path.to_path_buf()
    } else if escapes(path) {
        let resolved = m.resolve(path);
        fs::canonicalize(&resolved).unwrap_or(resolved)
    } else {
        copies.insert(out_dir.join(path), m.resolve(path));
        path.to_path_buf()
    }
}

fn copy_all(copies: &BTreeMap<PathBuf, PathBuf>) -> Result<()> {
    copies.par_iter().try_for_each(|(dst, src)| {
        if let Some(parent) = dst.parent() {
            fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
        fs::copy(src, dst).map_err(|e| Error::io(src, e))?;
        Ok(())
    })
}

/// Photometric expansion of the train split.
///
/// Writes a self-contained tree under `out_dir`: every file referenced with
/// a plain relative path is copied to the same relative location, each
/// train record's adverse image gets one variant per contrast factor and
/// brightness delta under `augmented/`, and `manifest.tsv` lists the
/// original records with their variants right after them. Variant frame ids
/// are `<frame_id>+<tag>` (for example `0007+c0.8`, `0007+b-30`). Input files
/// are only read.
pub fn expand_offline(m: &DatasetManifest, spec: &AugSpec, out_dir: &Path) -> Result<DatasetManifest> {
    spec.validate()?;
    let ops: Vec<Photometric> = Photometric::grid(spec).into_iter().skip(1).collect();
    let mut tags = BTreeSet::new();
    if let Some(dup) = ops.iter().map(Photometric::tag).find(|t| !tags.insert(t.clone())) {
        return Err(Error::InvalidSpec(format!("augmentation `{dup}` listed twice")));
    }
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;

    let mut copies = BTreeMap::new();
    let class_set_path = carry_path(m, &m.class_set_path, &mut copies, out_dir);
    let carried: Vec<SceneRecord> = m
        .records
        .iter()
        .map(|r| SceneRecord {
            clear_path: carry_path(m, &r.clear_path, &mut copies, out_dir),
            adverse_path: carry_path(m, &r.adverse_path, &mut copies, out_dir),
            label_path: carry_path(m, &r.label_path, &mut copies, out_dir),
            ..r.clone()
        })
        .collect();
    copy_all(&copies)?;

    let variants: Vec<Vec<SceneRecord>> = m
        .records
        .par_iter()
        .zip(&carried)
        .map(|(r, out_record)| {
            if r.split != Split::Train || ops.is_empty() {
                return Ok(Vec::new());
            }
            let src = m.resolve(&r.adverse_path);
            let image = io::read_image(&src)?;
            ops.iter()
                .map(|op| {
                    let tag = op.tag();
                    let rel = PathBuf::from("augmented")
                        .join(sanitize(&r.scene_id))
                        .join(format!("{}+{}.png", sanitize(&r.frame_id), tag));
                    io::write_image(&out_dir.join(&rel), &op.apply(&image)?)?;
                    Ok(SceneRecord {
                        frame_id: format!("{}+{}", r.frame_id, tag),
                        adverse_path: rel,
                        ..out_record.clone()
                    })
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;

    let mut records = Vec::with_capacity(m.records.len() * (1 + ops.len()));
    for (record, extra) in carried.into_iter().zip(variants) {
        records.push(record);
        records.extend(extra);
    }
    let out = DatasetManifest {
        records,
        class_set_path,
        ignore_index: m.ignore_index,
        base_dir: out_dir.to_path_buf(),
    };
    write_manifest(&out_dir.join(MANIFEST_FILE), &out)?;
    Ok(out)
}

/// Online (crop + flip) samples for every train record.
///
/// Record `r` draws from `derive_stream(spec.master_seed, "scene_id/frame_id")`;
/// sample `k` continues the same stream. The clear image, adverse image and
/// label share each sample's window and flip. Samples land under `online/`
/// and are listed in `online.tsv` with frame ids `<frame_id>+s<k>`.
pub fn expand_online(
    m: &DatasetManifest,
    spec: &AugSpec,
    samples_per_record: usize,
    out_dir: &Path,
) -> Result<DatasetManifest> {
    spec.validate()?;
    let class_set_path = if m.class_set_path.is_absolute() || escapes(&m.class_set_path) {
        let resolved = m.resolve(&m.class_set_path);
        fs::canonicalize(&resolved).unwrap_or(resolved)
    } else {
        let dst = out_dir.join(&m.class_set_path);
        if let Some(parent) = dst.parent() {
            fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
        fs::copy(m.resolve(&m.class_set_path), &dst).map_err(|e| Error::io(&dst, e))?;
        m.class_set_path.clone()
    };
    let per_record: Vec<Vec<SceneRecord>> = m
        .records
        .par_iter()
        .filter(|r| r.split == Split::Train)
        .map(|r| {
            let label_path = m.resolve(&r.label_path);
            let label = io::read_label_map(&label_path, m.ignore_index)?;
            let clear = SamplePair::new(io::read_image(&m.resolve(&r.clear_path))?, label.clone())
                .map_err(|e| e.in_file(m.resolve(&r.clear_path)))?;
            let adverse = SamplePair::new(io::read_image(&m.resolve(&r.adverse_path))?, label)
                .map_err(|e| e.in_file(m.resolve(&r.adverse_path)))?;
            let dir = PathBuf::from("online").join(sanitize(&r.scene_id));
            let stem = sanitize(&r.frame_id);
            let mut stream = derive_stream(spec.master_seed, &r.key());
            (0..samples_per_record)
                .map(|k| {
                    let mut replay = stream.clone();
                    let a = augment::online_augment(&adverse, spec, &mut stream);
                    let c = augment::online_augment(&clear, spec, &mut replay);
                    let rel = |what: &str| dir.join(format!("{stem}+s{k}_{what}.png"));
                    let (clear_rel, adverse_rel, label_rel) = (rel("clear"), rel("adverse"), rel("label"));
                    io::write_image(&out_dir.join(&clear_rel), c.image())?;
                    io::write_image(&out_dir.join(&adverse_rel), a.image())?;
                    io::write_label_map(&out_dir.join(&label_rel), a.label())?;
                    Ok(SceneRecord {
                        scene_id: r.scene_id.clone(),
                        frame_id: format!("{}+s{k}", r.frame_id),
                        clear_path: clear_rel,
                        adverse_path: adverse_rel,
                        label_path: label_rel,
                        split: Split::Train,
                        weather_tags: r.weather_tags.clone(),
                    })
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    let records: Vec<SceneRecord> = per_record.into_iter().flatten().collect();
    if records.is_empty() {
        return Err(Error::InvalidArgument("no train records to sample".into()));
    }
    let out = DatasetManifest {
        records,
        class_set_path,
        ignore_index: m.ignore_index,
        base_dir: out_dir.to_path_buf(),
    };
    write_manifest(&out_dir.join(ONLINE_MANIFEST_FILE), &out)?;
    Ok(out)
}
