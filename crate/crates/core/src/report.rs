//! Model comparison table.
//!
//! Member rows come first, then the fused row labelled `Voting results`.
//! All ratios are printed with four decimals.
//!
//! Text layout:
//!
//! ```text
//! =========================
//! models          test mIoU
//! -------------------------
//! iter3000           0.4040
//! Voting results     0.4371
//! =========================
//! ```
//!
//! CSV layout: `model,miou,pixels,iou_0,...,iou_{C-1}`, one row per model;
//! an absent class IoU is an empty field.

use crate::confusion::ConfusionMatrix;
use crate::{Error, Result};

pub const FUSED_LABEL: &str = "Voting results";

#[derive(Clone, Debug, PartialEq)]
pub struct ReportRow {
    pub model_id: String,
    pub miou: f64,
    pub per_class_iou: Vec<Option<f64>>,
    pub pixel_count: u64,
}

impl ReportRow {
    pub fn new(model_id: impl Into<String>, miou: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&miou) {
            return Err(Error::InvalidArgument(format!("mIoU {miou} outside [0, 1]")));
        }
        Ok(Self {
            model_id: model_id.into(),
            miou,
            per_class_iou: Vec::new(),
            pixel_count: 0,
        })
    }

    pub fn from_matrix(model_id: impl Into<String>, cm: &ConfusionMatrix) -> Result<Self> {
        Ok(Self {
            model_id: model_id.into(),
            miou: cm.miou()?,
            per_class_iou: cm.iou_per_class().into_iter().map(|(_, iou)| iou).collect(),
            pixel_count: cm.total(),
        })
    }
}

fn fixed4(v: f64) -> String {
    format!("{v:.4}")
}

pub fn render_table(rows: &[ReportRow], fused: &ReportRow) -> String {
    const HEAD: (&str, &str) = ("models", "test mIoU");
    let name_w = rows
        .iter()
        .map(|r| r.model_id.chars().count())
        .chain([HEAD.0.len(), FUSED_LABEL.len()])
        .max()
        .unwrap_or(0);
    let value_w = HEAD.1.len();
    let total = name_w + 2 + value_w;

    let line = |name: &str, value: &str| format!("{name:<name_w$}  {value:>value_w$}\n");
    let top = format!("{}\n", "=".repeat(total));

    let mut out = top.clone();
    out.push_str(&line(HEAD.0, HEAD.1));
    out.push_str(&"-".repeat(total));
    out.push('\n');
    for r in rows {
        out.push_str(&line(&r.model_id, &fixed4(r.miou)));
    }
    out.push_str(&line(FUSED_LABEL, &fixed4(fused.miou)));
    out.push_str(&top);
    out
}

pub fn render_csv(rows: &[ReportRow], fused: Option<&ReportRow>) -> Result<String> {
    let classes = rows
        .iter()
        .chain(fused)
        .map(|r| r.per_class_iou.len())
        .max()
        .unwrap_or(0);
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["model".to_string(), "miou".into(), "pixels".into()];
    header.extend((0..classes).map(|c| format!("iou_{c}")));
    w.write_record(&header).map_err(csv_err)?;
    let fused_row = fused.map(|f| ReportRow {
        model_id: FUSED_LABEL.to_string(),
        ..f.clone()
    });
    for r in rows.iter().chain(fused_row.as_ref()) {
        let mut rec = vec![r.model_id.clone(), fixed4(r.miou), r.pixel_count.to_string()];
        rec.extend((0..classes).map(|c| {
            r.per_class_iou
                .get(c)
                .copied()
                .flatten()
                .map(fixed4)
                .unwrap_or_default()
        }));
        w.write_record(&rec).map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::InvalidArgument(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv of utf-8 fields"))
}

fn csv_err(e: csv::Error) -> Error {
    Error::InvalidArgument(format!("csv: {e}"))
}

/// Reads rows written by [`render_csv`]. Every row gets one IoU entry per
/// `iou_*` column.
pub fn parse_csv(text: &str) -> std::result::Result<Vec<ReportRow>, (usize, String)> {
    let mut reader = csv::ReaderBuilder::new().from_reader(text.as_bytes());
    let header = reader.headers().map_err(|e| (1, e.to_string()))?.clone();
    if header.len() < 3 || &header[0] != "model" || &header[1] != "miou" || &header[2] != "pixels" {
        return Err((1, "expected header `model,miou,pixels,...`".into()));
    }
    let mut rows = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| (line, e.to_string()))?;
        let num = |field: &str| field.parse::<f64>().map_err(|_| (line, format!("bad number `{field}`")));
        let miou = num(&rec[1])?;
        let pixel_count = rec[2].parse().map_err(|_| (line, format!("bad pixel count `{}`", &rec[2])))?;
        let per_class_iou = rec
            .iter()
            .skip(3)
            .map(|f| if f.is_empty() { Ok(None) } else { num(f).map(Some) })
            .collect::<std::result::Result<Vec<_>, _>>()?;
        let mut row = ReportRow::new(&rec[0], miou).map_err(|e| (line, e.to_string()))?;
        row.per_class_iou = per_class_iou;
        row.pixel_count = pixel_count;
        rows.push(row);
    }
    Ok(rows)
}
