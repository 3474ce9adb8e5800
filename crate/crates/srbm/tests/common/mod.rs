#![allow(dead_code)]

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

pub fn write_images(path: &Path, images: &[Vec<u8>]) {
    let mut v = Vec::new();
    for x in [0x0803u32, images.len() as u32, 28, 28] {
        v.extend_from_slice(&x.to_be_bytes());
    }
    for img in images {
        v.extend_from_slice(img);
    }
    fs::write(path, v).unwrap();
}

pub fn write_labels(path: &Path, labels: &[u8]) {
    let mut v = Vec::new();
    for x in [0x0801u32, labels.len() as u32] {
        v.extend_from_slice(&x.to_be_bytes());
    }
    v.extend_from_slice(labels);
    fs::write(path, v).unwrap();
}

/// Digit-dependent stripes with hashed noise.
fn image(n: usize, label: u8) -> Vec<u8> {
    (0..784)
        .map(|i| {
            let h = (n as u64 * 784 + i as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15) >> 59;
            let on = (i / 28 + usize::from(label) * 3) % 10 < 3;
            if on ^ (h == 0) {
                200
            } else {
                20
            }
        })
        .collect()
}

/// A small MNIST-shaped corpus: 300 training images (30 per digit) and 60
/// test images.
pub fn synthetic_mnist(dir: &Path) {
    fs::create_dir_all(dir).unwrap();
    for (prefix, count) in [("train", 300), ("t10k", 60)] {
        let labels: Vec<u8> = (0..count).map(|n| (n % 10) as u8).collect();
        let images: Vec<Vec<u8>> = labels.iter().enumerate().map(|(n, &l)| image(n, l)).collect();
        write_images(&dir.join(format!("{prefix}-images-idx3-ubyte")), &images);
        write_labels(&dir.join(format!("{prefix}-labels-idx1-ubyte")), &labels);
    }
}

/// A config for the synthetic corpus with tiny split sizes.
pub fn small_config(dir: &Path, data: &Path, extra: &str) -> PathBuf {
    let path = dir.join("run.cfg");
    let text = format!(
        "data_dir = {}\nper_digit = 10\nvalidation_size = 100\ntest_size = 60\nM = 4\nK = 2\nmax_epochs = 2\n{extra}",
        data.display()
    );
    fs::write(&path, text).unwrap();
    path
}

pub fn srbm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_srbm")).args(args).output().unwrap()
}

pub fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

pub fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}
