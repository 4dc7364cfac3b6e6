//! Photometric and geometric augmentation with synchronized labels.
//!
//! Photometric transforms (brightness, contrast) only ever touch the image.
//! Geometric transforms (flip, pad, crop) apply the same index mapping to the
//! image and the label map; labels are never interpolated.
//!
//! Randomized transforms take a [`RandomStream`] and consume a fixed number
//! of draws: `random_crop` draws the x offset then the y offset,
//! `random_flip` draws one uniform ratio.

use std::fmt::Write as _;

use crate::label::{check_dims, ImageBuffer, LabelMap, DEFAULT_IGNORE_INDEX};
use crate::rng::RandomStream;
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct AugSpec {
    pub crop_size: u32,
    pub flip_probability: f64,
    pub pad_image_fill: u8,
    pub pad_label_fill: u8,
    pub contrast_factors: Vec<f64>,
    pub brightness_deltas: Vec<i32>,
    pub master_seed: u64,
}

impl Default for AugSpec {
    fn default() -> Self {
        Self {
            crop_size: 960,
            flip_probability: 0.5,
            pad_image_fill: 0,
            pad_label_fill: DEFAULT_IGNORE_INDEX,
            contrast_factors: vec![0.8, 1.2],
            brightness_deltas: vec![-30, 30],
            master_seed: 0,
        }
    }
}

const SPEC_KEYS: [&str; 7] = [
    "crop_size",
    "flip_probability",
    "pad_image_fill",
    "pad_label_fill",
    "contrast_factors",
    "brightness_deltas",
    "master_seed",
];

impl AugSpec {
    pub fn validate(&self) -> Result<()> {
        if self.crop_size == 0 {
            return Err(Error::InvalidSpec("crop_size must be >= 1".into()));
        }
        if !(0.0..=1.0).contains(&self.flip_probability) {
            return Err(Error::InvalidSpec(format!(
                "flip_probability {} outside [0, 1]",
                self.flip_probability
            )));
        }
        if let Some(f) = self
            .contrast_factors
            .iter()
            .find(|f| !(f.is_finite() && **f > 0.0))
        {
            return Err(Error::InvalidSpec(format!("contrast factor {f} must be > 0")));
        }
        Ok(())
    }

    /// Parses the `key = value` config format. Lists are comma separated and
    /// may be empty; `#` starts a comment line. Unset keys keep their
    /// defaults.
    pub fn parse(text: &str) -> std::result::Result<Self, (usize, String)> {
        let mut spec = AugSpec::default();
        let mut seen: Vec<&str> = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let lineno = lineno + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| (lineno, format!("expected key = value, got `{line}`")))?;
            let (key, value) = (key.trim(), value.trim());
            let key = SPEC_KEYS
                .iter()
                .copied()
                .find(|k| *k == key)
                .ok_or_else(|| (lineno, format!("unknown key `{key}`")))?;
            if seen.contains(&key) {
                return Err((lineno, format!("key `{key}` set twice")));
            }
            seen.push(key);
            let bad = |what: &str| (lineno, format!("bad {what} `{value}`"));
            match key {
                "crop_size" => spec.crop_size = value.parse().map_err(|_| bad(key))?,
                "flip_probability" => spec.flip_probability = value.parse().map_err(|_| bad(key))?,
                "pad_image_fill" => spec.pad_image_fill = value.parse().map_err(|_| bad(key))?,
                "pad_label_fill" => spec.pad_label_fill = value.parse().map_err(|_| bad(key))?,
                "contrast_factors" => spec.contrast_factors = parse_list(value).map_err(|_| bad(key))?,
                "brightness_deltas" => spec.brightness_deltas = parse_list(value).map_err(|_| bad(key))?,
                "master_seed" => spec.master_seed = value.parse().map_err(|_| bad(key))?,
                _ => unreachable!(),
            }
        }
        spec.validate().map_err(|e| (0, e.to_string()))?;
        Ok(spec)
    }

    pub fn to_text(&self) -> String {
        let join = |items: Vec<String>| items.join(", ");
        let mut out = String::new();
        let _ = writeln!(out, "crop_size = {}", self.crop_size);
        let _ = writeln!(out, "flip_probability = {}", self.flip_probability);
        let _ = writeln!(out, "pad_image_fill = {}", self.pad_image_fill);
        let _ = writeln!(out, "pad_label_fill = {}", self.pad_label_fill);
        let _ = writeln!(
            out,
            "contrast_factors = {}",
            join(self.contrast_factors.iter().map(f64::to_string).collect())
        );
        let _ = writeln!(
            out,
            "brightness_deltas = {}",
            join(self.brightness_deltas.iter().map(i32::to_string).collect())
        );
        let _ = writeln!(out, "master_seed = {}", self.master_seed);
        out
    }
}

fn parse_list<T: std::str::FromStr>(value: &str) -> std::result::Result<Vec<T>, ()> {
    if value.is_empty() {
        return Ok(Vec::new());
    }
    value
        .split(',')
        .map(|item| item.trim().parse().map_err(|_| ()))
        .collect()
}

/// Image with its aligned label map.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SamplePair {
    image: ImageBuffer,
    label: LabelMap,
}

impl SamplePair {
    pub fn new(image: ImageBuffer, label: LabelMap) -> Result<Self> {
        check_dims(
            (image.width(), image.height()),
            (label.width(), label.height()),
        )?;
        Ok(Self { image, label })
    }

    pub fn image(&self) -> &ImageBuffer {
        &self.image
    }

    pub fn label(&self) -> &LabelMap {
        &self.label
    }

    pub fn into_parts(self) -> (ImageBuffer, LabelMap) {
        (self.image, self.label)
    }

    pub fn width(&self) -> u32 {
        self.label.width()
    }

    pub fn height(&self) -> u32 {
        self.label.height()
    }
}

pub fn adjust_brightness(img: &ImageBuffer, delta: i32) -> ImageBuffer {
    img.map_values(|v| (v as i32).saturating_add(delta).clamp(0, 255) as u8)
}

/// `v -> clamp(round(128 + factor * (v - 128)))`, rounding half away from zero.
pub fn adjust_contrast(img: &ImageBuffer, factor: f64) -> Result<ImageBuffer> {
    if !(factor.is_finite() && factor > 0.0) {
        return Err(Error::InvalidFactor(factor));
    }
    Ok(img.map_values(|v| {
        (128.0 + factor * (v as f64 - 128.0)).round().clamp(0.0, 255.0) as u8
    }))
}

/// Mirrors image and label about the vertical axis.
pub fn flip_horizontal(pair: &SamplePair) -> SamplePair {
    let w = pair.width() as usize;
    let c = pair.image.channels() as usize;
    let mut image = pair.image.clone();
    let mut label = pair.label.clone();
    if w > 0 {
        for row in image.data_mut().chunks_exact_mut(w * c) {
            for x in 0..w / 2 {
                let (l, r) = (x * c, (w - 1 - x) * c);
                for k in 0..c {
                    row.swap(l + k, r + k);
                }
            }
        }
        for row in label.data_mut().chunks_exact_mut(w) {
            row.reverse();
        }
    }
    SamplePair { image, label }
}

/// Pads on the bottom and right up to `min_w` x `min_h`.
pub fn pad_to_min(pair: &SamplePair, min_w: u32, min_h: u32, spec: &AugSpec) -> SamplePair {
    let (w, h) = (pair.width(), pair.height());
    let (nw, nh) = (w.max(min_w), h.max(min_h));
    if (nw, nh) == (w, h) {
        return pair.clone();
    }
    let c = pair.image.channels();
    let cu = c as usize;
    let mut img = vec![spec.pad_image_fill; nw as usize * nh as usize * cu];
    let mut lbl = vec![spec.pad_label_fill; nw as usize * nh as usize];
    for y in 0..h as usize {
        let src = y * w as usize;
        let dst = y * nw as usize;
        lbl[dst..dst + w as usize].copy_from_slice(&pair.label.data()[src..src + w as usize]);
        img[dst * cu..(dst + w as usize) * cu]
            .copy_from_slice(&pair.image.data()[src * cu..(src + w as usize) * cu]);
    }
    SamplePair {
        image: ImageBuffer::new(nw, nh, c, img).expect("sized above"),
        label: LabelMap::with_ignore(nw, nh, lbl, pair.label.ignore_index()).expect("sized above"),
    }
}

/// Extracts the `width` x `height` window at `(x0, y0)` from both halves.
pub fn crop(pair: &SamplePair, x0: u32, y0: u32, width: u32, height: u32) -> Result<SamplePair> {
    if x0 as u64 + width as u64 > pair.width() as u64 || y0 as u64 + height as u64 > pair.height() as u64 {
        return Err(Error::InvalidArgument(format!(
            "window {width}x{height}+{x0}+{y0} exceeds {}x{}",
            pair.width(),
            pair.height()
        )));
    }
    let c = pair.image.channels() as usize;
    let (sw, w) = (pair.width() as usize, width as usize);
    let mut img = Vec::with_capacity(w * height as usize * c);
    let mut lbl = Vec::with_capacity(w * height as usize);
    for y in y0 as usize..(y0 + height) as usize {
        let start = y * sw + x0 as usize;
        lbl.extend_from_slice(&pair.label.data()[start..start + w]);
        img.extend_from_slice(&pair.image.data()[start * c..(start + w) * c]);
    }
    Ok(SamplePair {
        image: ImageBuffer::new(width, height, c as u8, img)?,
        label: LabelMap::with_ignore(width, height, lbl, pair.label.ignore_index())?,
    })
}

/// Pads to `crop_size` if needed, then crops a `crop_size` square at an
/// offset drawn uniformly (x first, then y).
pub fn random_crop(pair: &SamplePair, spec: &AugSpec, stream: &mut RandomStream) -> SamplePair {
    let s = spec.crop_size;
    let padded = pad_to_min(pair, s, s, spec);
    let x0 = stream.below((padded.width() - s) as u64 + 1) as u32;
    let y0 = stream.below((padded.height() - s) as u64 + 1) as u32;
    crop(&padded, x0, y0, s, s).expect("offsets drawn inside the padded frame")
}

pub fn random_flip(pair: &SamplePair, spec: &AugSpec, stream: &mut RandomStream) -> SamplePair {
    if stream.next_f64() < spec.flip_probability {
        flip_horizontal(pair)
    } else {
        pair.clone()
    }
}

/// Online pipeline for one sample: crop, then flip.
pub fn online_augment(pair: &SamplePair, spec: &AugSpec, stream: &mut RandomStream) -> SamplePair {
    let cropped = random_crop(pair, spec, stream);
    random_flip(&cropped, spec, stream)
}

/// One member of the offline expansion grid.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Photometric {
    Original,
    Contrast(f64),
    Brightness(i32),
}

impl Photometric {
    /// The original followed by every contrast factor then every brightness
    /// delta, in spec order.
    pub fn grid(spec: &AugSpec) -> Vec<Photometric> {
        std::iter::once(Photometric::Original)
            .chain(spec.contrast_factors.iter().map(|&f| Photometric::Contrast(f)))
            .chain(spec.brightness_deltas.iter().map(|&d| Photometric::Brightness(d)))
            .collect()
    }

    pub fn apply(&self, img: &ImageBuffer) -> Result<ImageBuffer> {
        match *self {
            Photometric::Original => Ok(img.clone()),
            Photometric::Contrast(f) => adjust_contrast(img, f),
            Photometric::Brightness(d) => Ok(adjust_brightness(img, d)),
        }
    }

    /// Short tag used in file names and frame ids, e.g. `c0.8` or `b-30`.
    pub fn tag(&self) -> String {
        match self {
            Photometric::Original => "orig".into(),
            Photometric::Contrast(f) => format!("c{f}"),
            Photometric::Brightness(d) => format!("b{d}"),
        }
    }
}

pub fn offline_expand(pair: &SamplePair, spec: &AugSpec) -> Result<Vec<SamplePair>> {
    Photometric::grid(spec)
        .iter()
        .map(|op| {
            Ok(SamplePair {
                image: op.apply(&pair.image)?,
                label: pair.label.clone(),
            })
        })
        .collect()
}
