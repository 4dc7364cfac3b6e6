//! Directory-level drivers.
//!
//! Files are paired by name, never by listing order. Work is spread over
//! files with rayon; callers control the worker count by running these
//! inside a thread pool. Outputs never depend on the worker count.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::baseline::{self, BaselinePredictor};
use crate::confusion::ConfusionMatrix;
use crate::fusion::{self, VoteStack};
use crate::label::{self, ClassSet};
use crate::rng::derive_stream;
use crate::{io, Error, Result};

/// Sorted file names shared by `dirs`; any name missing from one directory
/// is an error.
pub fn matched_names(dirs: &[&Path]) -> Result<Vec<String>> {
    let listings: Vec<Vec<String>> = dirs.iter().map(|d| io::list_pngs(d)).collect::<Result<_>>()?;
    let all: BTreeSet<&String> = listings.iter().flatten().collect();
    for (dir, names) in dirs.iter().zip(&listings) {
        let have: BTreeSet<&String> = names.iter().collect();
        if let Some(name) = all.difference(&have).next() {
            return Err(Error::MissingCounterpart {
                name: (*name).clone(),
                missing_in: dir.to_path_buf(),
            });
        }
    }
    if all.is_empty() {
        let shown: Vec<String> = dirs.iter().map(|d| d.display().to_string()).collect();
        return Err(Error::InvalidArgument(format!("no label maps in {}", shown.join(", "))));
    }
    Ok(listings.into_iter().next().unwrap_or_default())
}

/// One confusion matrix over every (gt, pred) pair.
pub fn evaluate_dirs(gt_dir: &Path, pred_dir: &Path, classes: &ClassSet, ignore_index: u8) -> Result<ConfusionMatrix> {
    classes.check_ignore(ignore_index)?;
    let names = matched_names(&[gt_dir, pred_dir])?;
    let n = classes.len();
    names
        .par_iter()
        .map(|name| {
            let gt = io::read_label_map(&gt_dir.join(name), ignore_index)?;
            let pred_path = pred_dir.join(name);
            let pred = io::read_label_map(&pred_path, ignore_index)?;
            ConfusionMatrix::from_pair(n, &gt, &pred).map_err(|e| e.in_file(&pred_path))
        })
        .try_reduce(|| ConfusionMatrix::new(n), |a, b| a.merge(&b))
}

#[derive(Clone, Debug, PartialEq)]
pub struct FuseSummary {
    pub files: usize,
    pub pixels: u64,
    /// Pixel-weighted mean of the winning vote fraction.
    pub mean_agreement: f64,
}

/// Hard-votes every file name present in all member directories into `out_dir`.
pub fn fuse_dirs(member_dirs: &[PathBuf], out_dir: &Path, ignore_index: u8) -> Result<FuseSummary> {
    if member_dirs.is_empty() {
        return Err(Error::EmptyStack);
    }
    let dirs: Vec<&Path> = member_dirs.iter().map(PathBuf::as_path).collect();
    let names = matched_names(&dirs)?;
    let ids: Vec<String> = member_dirs.iter().map(|d| d.display().to_string()).collect();
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let per_file: Vec<(u64, f64)> = names
        .par_iter()
        .map(|name| {
            let members = dirs
                .iter()
                .map(|d| io::read_label_map(&d.join(name), ignore_index))
                .collect::<Result<Vec<_>>>()?;
            let stack = VoteStack::new(members, ids.clone()).map_err(|e| e.in_file(name))?;
            io::write_label_map(&out_dir.join(name), &fusion::hard_vote(&stack))?;
            let agreement = fusion::agreement_map(&stack);
            Ok((agreement.data.len() as u64, agreement.data.iter().sum::<f64>()))
        })
        .collect::<Result<_>>()?;
    let pixels: u64 = per_file.iter().map(|p| p.0).sum();
    let total: f64 = per_file.iter().map(|p| p.1).sum();
    Ok(FuseSummary {
        files: names.len(),
        pixels,
        mean_agreement: if pixels == 0 { 1.0 } else { total / pixels as f64 },
    })
}

/// Runs `predictor` over every image in `input_dir`.
pub fn predict_dir(input_dir: &Path, out_dir: &Path, predictor: &BaselinePredictor) -> Result<usize> {
    let names = io::list_pngs(input_dir)?;
    names.par_iter().try_for_each(|name| {
        let path = input_dir.join(name);
        let img = io::read_image(&path)?;
        let map = predictor.predict(&img).map_err(|e| e.in_file(&path))?;
        io::write_label_map(&out_dir.join(name), &map)
    })?;
    Ok(names.len())
}

/// Writes a noisy copy of every label map in `gt_dir`; each file draws from
/// `derive_stream(seed, file_name)`.
pub fn perturb_dir(
    gt_dir: &Path,
    out_dir: &Path,
    error_rate: f64,
    num_classes: usize,
    ignore_index: u8,
    seed: u64,
) -> Result<usize> {
    let names = io::list_pngs(gt_dir)?;
    names.par_iter().try_for_each(|name| {
        let path = gt_dir.join(name);
        let gt = io::read_label_map(&path, ignore_index)?;
        let noisy = baseline::perturb_labels(&gt, error_rate, num_classes, &mut derive_stream(seed, name))
            .map_err(|e| e.in_file(&path))?;
        io::write_label_map(&out_dir.join(name), &noisy)
    })?;
    Ok(names.len())
}

pub fn colorize_dir(input_dir: &Path, out_dir: &Path, classes: &ClassSet, ignore_index: u8) -> Result<usize> {
    let names = io::list_pngs(input_dir)?;
    names.par_iter().try_for_each(|name| {
        let path = input_dir.join(name);
        let map = io::read_label_map(&path, ignore_index)?;
        let img = label::colorize(&map, classes).map_err(|e| e.in_file(&path))?;
        io::write_image(&out_dir.join(name), &img)
    })?;
    Ok(names.len())
}
