//! PNG and text-file I/O.
//!
//! Label maps are 8-bit single-channel PNGs whose pixel values are class
//! indices. Images are 8-bit gray or RGB PNGs.

use std::fs;
use std::path::{Path, PathBuf};

use image::{ColorType, DynamicImage, GrayImage, RgbImage};

use crate::label::{ClassSet, ImageBuffer, LabelMap};
use crate::{Error, Result};

fn decode(path: &Path) -> Result<DynamicImage> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    image::load_from_memory_with_format(&bytes, image::ImageFormat::Png).map_err(|e| Error::Decode {
        path: path.to_path_buf(),
        reason: e.to_string(),
    })
}

pub fn read_label_map(path: &Path, ignore_index: u8) -> Result<LabelMap> {
    let img = decode(path)?;
    if img.color() != ColorType::L8 {
        return Err(Error::Decode {
            path: path.to_path_buf(),
            reason: format!("label maps must be 8-bit grayscale, found {:?}", img.color()),
        });
    }
    let gray = img.into_luma8();
    let (w, h) = gray.dimensions();
    LabelMap::with_ignore(w, h, gray.into_raw(), ignore_index)
}

pub fn write_label_map(path: &Path, map: &LabelMap) -> Result<()> {
    let gray = GrayImage::from_raw(map.width(), map.height(), map.data().to_vec())
        .expect("label map length matches its shape");
    save(path, DynamicImage::ImageLuma8(gray))
}

pub fn read_image(path: &Path) -> Result<ImageBuffer> {
    let img = decode(path)?;
    let (w, h) = (img.width(), img.height());
    match img.color() {
        ColorType::L8 => ImageBuffer::new(w, h, 1, img.into_luma8().into_raw()),
        ColorType::Rgb8 => ImageBuffer::new(w, h, 3, img.into_rgb8().into_raw()),
        other => Err(Error::Decode {
            path: path.to_path_buf(),
            reason: format!("images must be 8-bit gray or RGB, found {other:?}"),
        }),
    }
}

pub fn write_image(path: &Path, img: &ImageBuffer) -> Result<()> {
    let (w, h) = (img.width(), img.height());
    let dynamic = if img.channels() == 1 {
        DynamicImage::ImageLuma8(GrayImage::from_raw(w, h, img.data().to_vec()).expect("shape checked"))
    } else {
        DynamicImage::ImageRgb8(RgbImage::from_raw(w, h, img.data().to_vec()).expect("shape checked"))
    };
    save(path, dynamic)
}

fn save(path: &Path, img: DynamicImage) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    let mut bytes = Vec::new();
    img.write_to(&mut std::io::Cursor::new(&mut bytes), image::ImageFormat::Png)
        .map_err(|e| Error::io(path, std::io::Error::other(e)))?;
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn read_class_set(path: &Path) -> Result<ClassSet> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    ClassSet::parse(&text).map_err(|(line, reason)| Error::Parse {
        path: path.to_path_buf(),
        line,
        reason,
    })
}

/// `*.png` file names directly inside `dir`, sorted.
pub fn list_pngs(dir: &Path) -> Result<Vec<String>> {
    let entries = fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut names = Vec::new();
    for entry in entries {
        let entry = entry.map_err(|e| Error::io(dir, e))?;
        let path = entry.path();
        if !path.is_file() {
            continue;
        }
        let is_png = path
            .extension()
            .and_then(|e| e.to_str())
            .is_some_and(|e| e.eq_ignore_ascii_case("png"));
        if let (true, Some(name)) = (is_png, path.file_name().and_then(|n| n.to_str())) {
            names.push(name.to_string());
        }
    }
    names.sort();
    Ok(names)
}

/// Every file under `root` (relative path, contents), sorted by path.
pub fn read_tree(root: &Path) -> Result<Vec<(PathBuf, Vec<u8>)>> {
    fn walk(root: &Path, dir: &Path, out: &mut Vec<(PathBuf, Vec<u8>)>) -> Result<()> {
        for entry in fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
            let path = entry.map_err(|e| Error::io(dir, e))?.path();
            if path.is_dir() {
                walk(root, &path, out)?;
            } else {
                let bytes = fs::read(&path).map_err(|e| Error::io(&path, e))?;
                out.push((path.strip_prefix(root).unwrap().to_path_buf(), bytes));
            }
        }
        Ok(())
    }
    let mut out = Vec::new();
    walk(root, root, &mut out)?;
    out.sort_by(|a, b| a.0.cmp(&b.0));
    Ok(out)
}
