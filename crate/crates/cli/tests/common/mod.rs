#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use segfuse_core::{io, ImageBuffer, LabelMap};
use sha2::{Digest, Sha256};

pub fn segfuse(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_segfuse"))
        .args(args)
        .env_remove("SEGFUSE_THREADS")
        .output()
        .expect("run segfuse")
}

pub fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

pub fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

/// SHA-256 over sorted (relative path, contents) of every file under `root`.
pub fn hash_tree(root: &Path) -> String {
    let mut h = Sha256::new();
    for (rel, bytes) in io::read_tree(root).unwrap() {
        h.update(rel.to_string_lossy().as_bytes());
        h.update([0]);
        h.update((bytes.len() as u64).to_le_bytes());
        h.update(&bytes);
    }
    format!("{:x}", h.finalize())
}

pub fn write_labels(dir: &Path, name: &str, width: u32, data: &[u8]) {
    let height = data.len() as u32 / width;
    io::write_label_map(&dir.join(name), &LabelMap::new(width, height, data.to_vec()).unwrap()).unwrap();
}

pub fn write_classes(path: &Path, n: usize) {
    let mut text = String::new();
    for i in 0..n {
        text.push_str(&format!("{i}\tclass{i}\t#{:02X}{:02X}{:02X}\n", i * 40 % 256, 255 - i * 13, i * 90 % 256));
    }
    std::fs::create_dir_all(path.parent().unwrap()).unwrap();
    std::fs::write(path, text).unwrap();
}

/// Small paired corpus: `frames` frames over two scenes, last one in val.
pub fn write_corpus(root: &Path, frames: usize, size: (u32, u32)) -> PathBuf {
    write_classes(&root.join("classes.tsv"), 3);
    let (w, h) = size;
    let mut manifest = String::from("# fixture\n@classes\tclasses.tsv\n");
    for i in 0..frames {
        let scene = if i % 2 == 0 { "s0" } else { "s1" };
        let split = if i + 1 == frames { "val" } else { "train" };
        let n = (w * h) as usize;
        let img: Vec<u8> = (0..n * 3).map(|k| ((k * 31 + i * 17) % 256) as u8).collect();
        let lbl: Vec<u8> = (0..n).map(|k| if k % 11 == 0 { 255 } else { ((k / 3 + i) % 3) as u8 }).collect();
        let img = ImageBuffer::new(w, h, 3, img).unwrap();
        io::write_image(&root.join(format!("clear/{i:03}.png")), &img).unwrap();
        io::write_image(&root.join(format!("adverse/{i:03}.png")), &img).unwrap();
        io::write_label_map(&root.join(format!("labels/{i:03}.png")), &LabelMap::new(w, h, lbl).unwrap()).unwrap();
        manifest.push_str(&format!(
            "{scene}\t{i:03}\tclear/{i:03}.png\tadverse/{i:03}.png\tlabels/{i:03}.png\t{split}\train\n"
        ));
    }
    let path = root.join("manifest.tsv");
    std::fs::write(&path, manifest).unwrap();
    path
}
