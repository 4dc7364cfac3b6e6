//! Confusion-matrix accumulation and the IoU family of metrics.
//!
//! `counts[g][p]` holds the number of pixels with ground truth `g` that were
//! predicted as `p`. Pixels whose ground truth equals the map's ignore index
//! are skipped entirely; a prediction of the ignore index at a labelled pixel
//! is an error, not a miss.
//!
//! Counts are `u64` so a whole corpus can be folded into one matrix. The
//! accumulator is mergeable: give each worker its own matrix and [`merge`]
//! them at the end.
//!
//! [`merge`]: ConfusionMatrix::merge

use crate::label::LabelMap;
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConfusionMatrix {
    num_classes: usize,
    counts: Vec<u64>,
}

impl ConfusionMatrix {
    pub fn new(num_classes: usize) -> Self {
        Self {
            num_classes,
            counts: vec![0; num_classes * num_classes],
        }
    }

    /// Builds a matrix from explicit rows (ground truth major).
    pub fn from_rows(rows: &[Vec<u64>]) -> Result<Self> {
        let n = rows.len();
        if let Some(bad) = rows.iter().find(|r| r.len() != n) {
            return Err(Error::ClassCountMismatch(n, bad.len()));
        }
        Ok(Self {
            num_classes: n,
            counts: rows.concat(),
        })
    }

    /// Tally of a single (gt, pred) pair.
    pub fn from_pair(num_classes: usize, gt: &LabelMap, pred: &LabelMap) -> Result<Self> {
        let mut cm = Self::new(num_classes);
        cm.accumulate(gt, pred)?;
        Ok(cm)
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn get(&self, gt: usize, pred: usize) -> u64 {
        self.counts[gt * self.num_classes + pred]
    }

    pub fn row(&self, gt: usize) -> &[u64] {
        &self.counts[gt * self.num_classes..(gt + 1) * self.num_classes]
    }

    pub fn rows(&self) -> Vec<Vec<u64>> {
        self.counts
            .chunks(self.num_classes.max(1))
            .map(<[u64]>::to_vec)
            .collect()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.num_classes).map(|c| self.get(c, c)).sum()
    }

    /// Adds one (gt, pred) pair. On error the matrix is left unchanged.
    pub fn accumulate(&mut self, gt: &LabelMap, pred: &LabelMap) -> Result<()> {
        gt.same_shape(pred)?;
        let n = self.num_classes;
        let ignore = gt.ignore_index();
        let mut local = vec![0u64; self.counts.len()];
        for (i, (&g, &p)) in gt.data().iter().zip(pred.data()).enumerate() {
            if g == ignore {
                continue;
            }
            if g as usize >= n {
                return Err(gt.out_of_range(i, n));
            }
            if p as usize >= n {
                return Err(pred.out_of_range(i, n));
            }
            local[g as usize * n + p as usize] += 1;
        }
        for (c, l) in self.counts.iter_mut().zip(local) {
            *c += l;
        }
        Ok(())
    }

    pub fn merge(&self, other: &ConfusionMatrix) -> Result<ConfusionMatrix> {
        let mut out = self.clone();
        out.merge_from(other)?;
        Ok(out)
    }

    pub fn merge_from(&mut self, other: &ConfusionMatrix) -> Result<()> {
        if self.num_classes != other.num_classes {
            return Err(Error::ClassCountMismatch(
                self.num_classes,
                other.num_classes,
            ));
        }
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        Ok(())
    }

    /// Per-class IoU = TP / (TP + FP + FN); `None` when the union is empty.
    pub fn iou_per_class(&self) -> Vec<(usize, Option<f64>)> {
        let n = self.num_classes;
        let mut col_sums = vec![0u64; n];
        for g in 0..n {
            for (p, v) in self.row(g).iter().enumerate() {
                col_sums[p] += v;
            }
        }
        (0..n)
            .map(|c| {
                let tp = self.get(c, c);
                let row_sum: u64 = self.row(c).iter().sum();
                let union = row_sum + col_sums[c] - tp;
                let iou = (union > 0).then(|| tp as f64 / union as f64);
                (c, iou)
            })
            .collect()
    }

    /// Mean IoU over classes with a nonempty union.
    pub fn miou(&self) -> Result<f64> {
        let present: Vec<f64> = self
            .iou_per_class()
            .into_iter()
            .filter_map(|(_, iou)| iou)
            .collect();
        if present.is_empty() {
            return Err(Error::EmptyMatrix);
        }
        Ok(present.iter().sum::<f64>() / present.len() as f64)
    }

    pub fn pixel_accuracy(&self) -> Result<f64> {
        let total = self.total();
        if total == 0 {
            return Err(Error::EmptyMatrix);
        }
        Ok(self.trace() as f64 / total as f64)
    }
}
