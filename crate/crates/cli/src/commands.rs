use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use segfuse_core::dataset::{self, Split};
use segfuse_core::report::{self, ReportRow};
use segfuse_core::{io, pipeline, AugSpec, BaselinePredictor, ClassSet};

use crate::{AugmentArgs, ColorizeArgs, EvaluateArgs, FuseArgs, ManifestArgs, PredictArgs, ReportArgs};

/// Data failed a check; maps to exit code 3.
#[derive(Debug)]
struct ValidationFailed(String);

impl std::fmt::Display for ValidationFailed {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ValidationFailed {}

pub fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<segfuse_core::Error>() {
            return if e.is_io() { 4 } else { 3 };
        }
        if cause.downcast_ref::<std::io::Error>().is_some() {
            return 4;
        }
    }
    3
}

fn load_classes(path: &Path, ignore_index: u8) -> Result<ClassSet> {
    let classes = io::read_class_set(path)?;
    classes.check_ignore(ignore_index)?;
    Ok(classes)
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
    }
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn dir_name(path: &Path) -> String {
    path.file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

pub fn evaluate(a: &EvaluateArgs) -> Result<()> {
    let classes = load_classes(&a.classes, a.ignore_index)?;
    let cm = pipeline::evaluate_dirs(&a.gt, &a.pred, &classes, a.ignore_index)?;
    let id = a.id.clone().unwrap_or_else(|| dir_name(&a.pred));
    let row = ReportRow::from_matrix(&id, &cm)?;

    let name_w = classes.classes().iter().map(|c| c.name.len()).max().unwrap_or(4).max(4);
    let mut out = String::new();
    writeln!(out, "model: {id}")?;
    writeln!(out, "pixels: {}", row.pixel_count)?;
    writeln!(out, "{:>5}  {:<name_w$}  {:>6}", "class", "name", "IoU")?;
    for (c, iou) in row.per_class_iou.iter().enumerate() {
        let value = iou.map(|v| format!("{v:.4}")).unwrap_or_else(|| "-".into());
        writeln!(out, "{c:>5}  {:<name_w$}  {value:>6}", classes.classes()[c].name)?;
    }
    writeln!(out, "pixel accuracy: {:.4}", cm.pixel_accuracy()?)?;
    writeln!(out, "mIoU: {:.4}", row.miou)?;
    print!("{out}");

    if let Some(path) = &a.csv {
        write_text(path, &report::render_csv(std::slice::from_ref(&row), None)?)?;
    }
    Ok(())
}

pub fn fuse(a: &FuseArgs) -> Result<()> {
    let summary = pipeline::fuse_dirs(&a.members, &a.out, a.ignore_index)?;
    println!(
        "fused {} file(s) from {} member(s); mean agreement {:.4}",
        summary.files,
        a.members.len(),
        summary.mean_agreement
    );
    Ok(())
}

fn read_spec(path: &Path) -> Result<AugSpec> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    AugSpec::parse(&text).map_err(|(line, reason)| {
        anyhow!(ValidationFailed(format!("{}:{line}: {reason}", path.display())))
    })
}

pub fn augment(a: &AugmentArgs) -> Result<()> {
    let spec = read_spec(&a.spec)?;
    let manifest = dataset::load_manifest(&a.manifest)?;
    let out = dataset::expand_offline(&manifest, &spec, &a.out)?;
    println!(
        "wrote {} record(s) ({} train) to {}",
        out.records.len(),
        out.count(Split::Train),
        a.out.join(dataset::MANIFEST_FILE).display()
    );
    if a.online_samples > 0 {
        let online = dataset::expand_online(&manifest, &spec, a.online_samples, &a.out)?;
        println!(
            "wrote {} online sample(s) to {}",
            online.records.len(),
            a.out.join(dataset::ONLINE_MANIFEST_FILE).display()
        );
    }
    Ok(())
}

pub fn stats(a: &ManifestArgs) -> Result<()> {
    let manifest = dataset::load_manifest(&a.manifest)?;
    let stats = dataset::corpus_stats(&manifest);
    let mut out = String::new();
    writeln!(out, "records: {}", manifest.records.len())?;
    for (split, n) in &stats.split_counts {
        writeln!(out, "  {split}: {n}")?;
    }
    writeln!(out, "scenes: {}", stats.num_scenes())?;
    writeln!(out, "frames: {}", stats.num_frames())?;
    writeln!(out, "pixels: {}", stats.total_pixels)?;
    writeln!(out, "ignored: {} ({:.4})", stats.ignored_pixels, stats.ignored_fraction())?;
    let labelled: u64 = stats.class_histogram.iter().sum();
    for (c, (name, count)) in stats.class_names.iter().zip(&stats.class_histogram).enumerate() {
        let frac = if labelled == 0 { 0.0 } else { *count as f64 / labelled as f64 };
        writeln!(out, "  class {c} {name}: {count} ({frac:.4})")?;
    }
    print!("{out}");
    report_failures(&stats.failures)
}

fn report_failures(failures: &[dataset::Failure]) -> Result<()> {
    for f in failures {
        eprintln!("{f}");
    }
    if failures.is_empty() {
        Ok(())
    } else {
        Err(anyhow!(ValidationFailed(format!("{} failure(s)", failures.len()))))
    }
}

pub fn verify(a: &ManifestArgs) -> Result<()> {
    let manifest = dataset::load_manifest(&a.manifest)?;
    let report = dataset::verify_files(&manifest);
    println!(
        "checked {} record(s): {} failure(s)",
        report.records_checked,
        report.failures.len()
    );
    report_failures(&report.failures)
}

pub fn predict(a: &PredictArgs) -> Result<()> {
    let classes = load_classes(&a.classes, a.ignore_index)?;
    let n = if let Some(rate) = a.perturb {
        pipeline::perturb_dir(&a.input, &a.out, rate, classes.len(), a.ignore_index, a.seed)?
    } else {
        let predictor = match a.constant {
            Some(c) => BaselinePredictor::constant(c, &classes)?,
            None => BaselinePredictor::nearest_color(classes),
        };
        pipeline::predict_dir(&a.input, &a.out, &predictor)?
    };
    println!("wrote {n} label map(s) to {}", a.out.display());
    Ok(())
}

pub fn colorize(a: &ColorizeArgs) -> Result<()> {
    let classes = load_classes(&a.classes, a.ignore_index)?;
    let n = pipeline::colorize_dir(&a.input, &a.out, &classes, a.ignore_index)?;
    println!("wrote {n} image(s) to {}", a.out.display());
    Ok(())
}

fn read_report_csv(path: &Path) -> Result<Vec<ReportRow>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    report::parse_csv(&text)
        .map_err(|(line, reason)| anyhow!(ValidationFailed(format!("{}:{line}: {reason}", path.display()))))
}

fn single_row(path: &Path) -> Result<ReportRow> {
    let mut rows = read_report_csv(path)?;
    if rows.len() != 1 {
        bail!(ValidationFailed(format!("{}: expected one row, found {}", path.display(), rows.len())));
    }
    Ok(rows.remove(0))
}

pub fn report(a: &ReportArgs) -> Result<()> {
    let mut rows = Vec::new();
    for path in &a.members {
        rows.push(single_row(path)?);
    }
    for spec in &a.rows {
        let (id, value) = spec
            .rsplit_once('=')
            .ok_or_else(|| anyhow!(ValidationFailed(format!("--row `{spec}` is not ID=MIOU"))))?;
        let miou: f64 = value
            .parse()
            .map_err(|_| anyhow!(ValidationFailed(format!("--row `{spec}`: bad mIoU"))))?;
        rows.push(ReportRow::new(id, miou)?);
    }
    if rows.is_empty() {
        bail!(ValidationFailed("report needs at least one --member or --row".into()));
    }
    let fused = match (&a.fused, a.fused_miou) {
        (Some(path), _) => single_row(path)?,
        (None, Some(miou)) => ReportRow::new(report::FUSED_LABEL, miou)?,
        (None, None) => unreachable!("clap requires one fused source"),
    };
    print!("{}", report::render_table(&rows, &fused));
    if let Some(path) = &a.csv {
        write_text(path, &report::render_csv(&rows, Some(&fused))?)?;
    }
    Ok(())
}
