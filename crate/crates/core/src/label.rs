//! Pixel grids and class metadata.

use std::fmt;
use std::str::FromStr;

use crate::{Error, Result};

/// Class value excluded from every metric unless configured otherwise.
pub const DEFAULT_IGNORE_INDEX: u8 = 255;

/// Row-major grid of class indices.
///
/// Pixels equal to `ignore_index` carry no ground truth. Whether the other
/// values are in range depends on the governing [`ClassSet`], so that check
/// happens at the point of use (see [`LabelMap::validate`]).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LabelMap {
    width: u32,
    height: u32,
    data: Vec<u8>,
    ignore_index: u8,
}

impl LabelMap {
    pub fn new(width: u32, height: u32, data: Vec<u8>) -> Result<Self> {
        Self::with_ignore(width, height, data, DEFAULT_IGNORE_INDEX)
    }

    pub fn with_ignore(width: u32, height: u32, data: Vec<u8>, ignore_index: u8) -> Result<Self> {
        let expected = width as usize * height as usize;
        if data.len() != expected {
            return Err(Error::BufferLength {
                expected,
                actual: data.len(),
            });
        }
        Ok(Self {
            width,
            height,
            data,
            ignore_index,
        })
    }

    pub fn filled(width: u32, height: u32, value: u8) -> Self {
        Self {
            width,
            height,
            data: vec![value; width as usize * height as usize],
            ignore_index: DEFAULT_IGNORE_INDEX,
        }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn ignore_index(&self) -> u8 {
        self.ignore_index
    }

    pub fn set_ignore_index(&mut self, ignore_index: u8) {
        self.ignore_index = ignore_index;
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [u8] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<u8> {
        self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn get(&self, x: u32, y: u32) -> u8 {
        self.data[y as usize * self.width as usize + x as usize]
    }

    pub fn rows(&self) -> std::slice::ChunksExact<'_, u8> {
        self.data.chunks_exact(self.width.max(1) as usize)
    }

    pub fn same_shape(&self, other: &LabelMap) -> Result<()> {
        check_dims((self.width, self.height), (other.width, other.height))
    }

    /// Checks that every value is a class index below `num_classes` or the
    /// ignore index.
    pub fn validate(&self, num_classes: usize) -> Result<()> {
        match self.first_invalid(num_classes) {
            None => Ok(()),
            Some(i) => Err(self.out_of_range(i, num_classes)),
        }
    }

    pub(crate) fn first_invalid(&self, num_classes: usize) -> Option<usize> {
        let ignore = self.ignore_index;
        self.data
            .iter()
            .position(|&v| v != ignore && v as usize >= num_classes)
    }

    pub(crate) fn out_of_range(&self, index: usize, num_classes: usize) -> Error {
        let w = self.width.max(1) as usize;
        Error::ClassOutOfRange {
            value: self.data[index],
            x: (index % w) as u32,
            y: (index / w) as u32,
            num_classes,
        }
    }
}

pub(crate) fn check_dims(left: (u32, u32), right: (u32, u32)) -> Result<()> {
    if left == right {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            left_width: left.0,
            left_height: left.1,
            right_width: right.0,
            right_height: right.1,
        })
    }
}

/// Row-major interleaved 8-bit image with one (gray) or three (RGB) channels.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ImageBuffer {
    width: u32,
    height: u32,
    channels: u8,
    data: Vec<u8>,
}

impl ImageBuffer {
    pub fn new(width: u32, height: u32, channels: u8, data: Vec<u8>) -> Result<Self> {
        if channels != 1 && channels != 3 {
            return Err(Error::InvalidArgument(format!(
                "images have 1 or 3 channels, got {channels}"
            )));
        }
        let expected = width as usize * height as usize * channels as usize;
        if data.len() != expected {
            return Err(Error::BufferLength {
                expected,
                actual: data.len(),
            });
        }
        Ok(Self {
            width,
            height,
            channels,
            data,
        })
    }

    pub fn filled(width: u32, height: u32, channels: u8, value: u8) -> Result<Self> {
        let n = width as usize * height as usize * channels as usize;
        Self::new(width, height, channels, vec![value; n])
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn channels(&self) -> u8 {
        self.channels
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [u8] {
        &mut self.data
    }

    pub fn pixel(&self, x: u32, y: u32) -> &[u8] {
        let c = self.channels as usize;
        let start = (y as usize * self.width as usize + x as usize) * c;
        &self.data[start..start + c]
    }

    /// Applies `f` to every channel value.
    pub fn map_values(&self, f: impl Fn(u8) -> u8) -> ImageBuffer {
        let mut lut = [0u8; 256];
        for (v, slot) in lut.iter_mut().enumerate() {
            *slot = f(v as u8);
        }
        ImageBuffer {
            width: self.width,
            height: self.height,
            channels: self.channels,
            data: self.data.iter().map(|&v| lut[v as usize]).collect(),
        }
    }
}

/// 8-bit RGB triple, written `#RRGGBB` in class files.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Rgb(pub [u8; 3]);

impl fmt::Display for Rgb {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let [r, g, b] = self.0;
        write!(f, "#{r:02X}{g:02X}{b:02X}")
    }
}

impl FromStr for Rgb {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let hex = s
            .strip_prefix('#')
            .ok_or_else(|| format!("color `{s}` must start with '#'"))?;
        if hex.len() != 6 || !hex.bytes().all(|b| b.is_ascii_hexdigit()) {
            return Err(format!("color `{s}` is not #RRGGBB"));
        }
        let channel = |i: usize| u8::from_str_radix(&hex[i..i + 2], 16).unwrap();
        Ok(Rgb([channel(0), channel(2), channel(4)]))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClassInfo {
    pub index: u8,
    pub name: String,
    pub color: Rgb,
}

/// Ordered classes `0..C`.
///
/// At most 255 classes, so the default ignore index can never name a class.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClassSet {
    classes: Vec<ClassInfo>,
}

impl ClassSet {
    pub fn new(classes: Vec<ClassInfo>) -> Result<Self> {
        if classes.is_empty() {
            return Err(Error::InvalidClassSet("no classes".into()));
        }
        if classes.len() > 255 {
            return Err(Error::InvalidClassSet(format!(
                "{} classes; at most 255 fit in an 8-bit label map",
                classes.len()
            )));
        }
        for (i, class) in classes.iter().enumerate() {
            if class.index as usize != i {
                return Err(Error::InvalidClassSet(format!(
                    "class `{}` has index {}, expected {i}",
                    class.name, class.index
                )));
            }
            if class.name.is_empty() || class.name.contains(['\t', '\n']) {
                return Err(Error::InvalidClassSet(format!(
                    "class {i} has an invalid name"
                )));
            }
            if classes[..i].iter().any(|c| c.name == class.name) {
                return Err(Error::InvalidClassSet(format!(
                    "duplicate class name `{}`",
                    class.name
                )));
            }
        }
        Ok(Self { classes })
    }

    /// Builds `num_classes` classes named `class{i}` with a fixed palette.
    pub fn synthetic(num_classes: usize) -> Result<Self> {
        let classes = (0..num_classes)
            .map(|i| ClassInfo {
                index: i as u8,
                name: format!("class{i}"),
                color: default_color(i),
            })
            .collect();
        Self::new(classes)
    }

    pub fn len(&self) -> usize {
        self.classes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }

    pub fn classes(&self) -> &[ClassInfo] {
        &self.classes
    }

    pub fn get(&self, index: u8) -> Option<&ClassInfo> {
        self.classes.get(index as usize)
    }

    /// Rejects ignore indices that collide with a class.
    pub fn check_ignore(&self, ignore_index: u8) -> Result<()> {
        if (ignore_index as usize) < self.len() {
            return Err(Error::InvalidClassSet(format!(
                "ignore index {ignore_index} names class `{}`",
                self.classes[ignore_index as usize].name
            )));
        }
        Ok(())
    }

    /// Parses the class-definition format: one `index<TAB>name<TAB>#RRGGBB`
    /// line per class, `#` comments and blank lines skipped.
    pub fn parse(text: &str) -> std::result::Result<Self, (usize, String)> {
        let mut classes = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let lineno = lineno + 1;
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != 3 {
                return Err((
                    lineno,
                    format!("expected 3 tab-separated fields, found {}", fields.len()),
                ));
            }
            let index: u8 = fields[0]
                .parse()
                .map_err(|_| (lineno, format!("bad class index `{}`", fields[0])))?;
            let color: Rgb = fields[2].parse().map_err(|e| (lineno, e))?;
            classes.push(ClassInfo {
                index,
                name: fields[1].to_string(),
                color,
            });
        }
        ClassSet::new(classes).map_err(|e| (0, e.to_string()))
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for c in &self.classes {
            out.push_str(&format!("{}\t{}\t{}\n", c.index, c.name, c.color));
        }
        out
    }
}

fn default_color(i: usize) -> Rgb {
    const PALETTE: [[u8; 3]; 8] = [
        [128, 64, 128],
        [244, 35, 232],
        [70, 70, 70],
        [102, 102, 156],
        [190, 153, 153],
        [153, 153, 153],
        [250, 170, 30],
        [220, 220, 0],
    ];
    if i < PALETTE.len() {
        Rgb(PALETTE[i])
    } else {
        // golden-ratio walk over hue-ish space; only needs to be stable
        let h = (i as u32).wrapping_mul(0x9E37_79B9);
        Rgb([(h >> 24) as u8, (h >> 16) as u8, (h >> 8) as u8])
    }
}

/// Paints every pixel with its class color; ignored pixels render black.
pub fn colorize(map: &LabelMap, classes: &ClassSet) -> Result<ImageBuffer> {
    map.validate(classes.len())?;
    let ignore = map.ignore_index();
    let mut data = Vec::with_capacity(map.len() * 3);
    for &v in map.data() {
        if v == ignore {
            data.extend_from_slice(&[0, 0, 0]);
        } else {
            data.extend_from_slice(&classes.classes[v as usize].color.0);
        }
    }
    ImageBuffer::new(map.width(), map.height(), 3, data)
}
