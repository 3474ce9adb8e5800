//! Locating and loading the MNIST corpora.

use std::path::{Path, PathBuf};

use srbm_core::data::{binarize, make_splits, Dataset, Split, SplitSpec, Splits};

use crate::error::{Error, Result};
use crate::idx::{load_idx_images, load_idx_labels};

/// Pixels above this fraction of full intensity become 1.
pub const BINARIZE_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Corpus {
    Train,
    Test,
}

impl Corpus {
    fn prefix(self) -> &'static str {
        match self {
            Corpus::Train => "train",
            Corpus::Test => "t10k",
        }
    }
}

fn find(dir: &Path, stems: &[String]) -> Result<PathBuf> {
    for stem in stems {
        for name in [stem.clone(), format!("{stem}.gz")] {
            let path = dir.join(name);
            if path.is_file() {
                return Ok(path);
            }
        }
    }
    Err(Error::format(dir, format!("no file named {} (optionally .gz)", stems.join(" or "))))
}

/// Image and label file paths for a corpus. Both the `-idx3-ubyte` and the
/// `.idx3-ubyte` spellings are accepted, raw or gzipped.
pub fn corpus_paths(dir: &Path, corpus: Corpus) -> Result<(PathBuf, PathBuf)> {
    let p = corpus.prefix();
    let images = find(dir, &[format!("{p}-images-idx3-ubyte"), format!("{p}-images.idx3-ubyte")])?;
    let labels = find(dir, &[format!("{p}-labels-idx1-ubyte"), format!("{p}-labels.idx1-ubyte")])?;
    Ok((images, labels))
}

/// Loads and binarizes one corpus.
pub fn load_corpus(dir: &Path, corpus: Corpus) -> Result<Dataset> {
    let (image_path, label_path) = corpus_paths(dir, corpus)?;
    let images = load_idx_images(&image_path)?;
    let labels = load_idx_labels(&label_path)?;
    if images.count != labels.len() {
        return Err(Error::format(
            &label_path,
            format!("{} labels for {} images in {}", labels.len(), images.count, image_path.display()),
        ));
    }
    let split = match corpus {
        Corpus::Train => Split::Train,
        Corpus::Test => Split::Test,
    };
    let binary = binarize(&images.pixels, BINARIZE_THRESHOLD);
    Ok(Dataset::new(images.rows * images.cols, binary, labels, split)?)
}

pub fn load_splits(dir: &Path, spec: &SplitSpec) -> Result<Splits> {
    let train = load_corpus(dir, Corpus::Train)?;
    let test = load_corpus(dir, Corpus::Test)?;
    Ok(make_splits(&train, &test, spec)?)
}
