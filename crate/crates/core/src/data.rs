//! Binary image datasets and the train/validation/test split protocol.

use alloc::format;
use alloc::vec::Vec;

use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::sampler::{chain_rng, SPLIT_STREAM};

pub const MNIST_SIDE: usize = 28;
pub const MNIST_PIXELS: usize = MNIST_SIDE * MNIST_SIDE;
pub const NUM_CLASSES: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Split {
    Train,
    Validation,
    Test,
}

impl Split {
    pub fn as_str(&self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Validation => "validation",
            Split::Test => "test",
        }
    }
}

/// Binary examples of a fixed dimension with integer class labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    dim: usize,
    images: Vec<u8>,
    labels: Vec<u8>,
    split: Split,
}

impl Dataset {
    /// `images` holds `labels.len()` rows of `dim` entries, each 0 or 1.
    pub fn new(dim: usize, images: Vec<u8>, labels: Vec<u8>, split: Split) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidData("example dimension must be positive".into()));
        }
        if images.len() != dim * labels.len() {
            return Err(Error::InvalidData(format!(
                "{} image bytes do not form {} rows of {}",
                images.len(),
                labels.len(),
                dim
            )));
        }
        if let Some(pos) = images.iter().position(|&v| v > 1) {
            return Err(Error::InvalidData(format!("non-binary pixel {} at offset {}", images[pos], pos)));
        }
        if let Some(pos) = labels.iter().position(|&l| usize::from(l) >= NUM_CLASSES) {
            return Err(Error::InvalidData(format!("label {} at index {} is not a digit", labels[pos], pos)));
        }
        Ok(Self {
            dim,
            images,
            labels,
            split,
        })
    }

    /// Unlabelled binary vectors (labels set to 0), e.g. samples drawn from a model.
    pub fn unlabelled(dim: usize, rows: &[Vec<u8>], split: Split) -> Result<Self> {
        let mut images = Vec::with_capacity(dim * rows.len());
        for r in rows {
            if r.len() != dim {
                return Err(Error::Dimension {
                    what: "example",
                    expected: dim,
                    actual: r.len(),
                });
            }
            images.extend_from_slice(r);
        }
        Self::new(dim, images, alloc::vec![0; rows.len()], split)
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    #[inline]
    pub fn split(&self) -> Split {
        self.split
    }

    #[inline]
    pub fn example(&self, n: usize) -> &[u8] {
        &self.images[n * self.dim..(n + 1) * self.dim]
    }

    pub fn examples(&self) -> core::slice::ChunksExact<'_, u8> {
        self.images.chunks_exact(self.dim)
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn images(&self) -> &[u8] {
        &self.images
    }

    /// New dataset made of the given rows, in the given order.
    pub fn select(&self, indices: &[usize], split: Split) -> Self {
        let mut images = Vec::with_capacity(indices.len() * self.dim);
        let mut labels = Vec::with_capacity(indices.len());
        for &n in indices {
            images.extend_from_slice(self.example(n));
            labels.push(self.labels[n]);
        }
        Self {
            dim: self.dim,
            images,
            labels,
            split,
        }
    }

    pub fn label_histogram(&self) -> [usize; NUM_CLASSES] {
        let mut hist = [0; NUM_CLASSES];
        for &l in &self.labels {
            hist[usize::from(l)] += 1;
        }
        hist
    }
}

/// Thresholds grayscale bytes: `pixel / 255 > threshold` becomes 1.
pub fn binarize(raw: &[u8], threshold: f64) -> Vec<u8> {
    raw.iter().map(|&v| u8::from(f64::from(v) / 255.0 > threshold)).collect()
}

/// How the training corpus is cut into the training and validation sets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SplitSpec {
    pub per_digit_train: usize,
    pub validation_size: usize,
    pub test_size: usize,
    pub seed: u64,
}

impl SplitSpec {
    /// Training sizes used in the reported experiments.
    pub const PER_DIGIT_CHOICES: [usize; 3] = [10, 100, 1000];

    pub fn new(per_digit_train: usize, seed: u64) -> Self {
        Self {
            per_digit_train,
            validation_size: 10_000,
            test_size: 10_000,
            seed,
        }
    }

    pub fn train_size(&self) -> usize {
        self.per_digit_train * NUM_CLASSES
    }
}

#[derive(Debug, Clone)]
pub struct Splits {
    pub train: Dataset,
    pub validation: Dataset,
    pub test: Dataset,
    /// Rows of the training corpus used for `train`, in training order.
    pub train_indices: Vec<usize>,
    /// Rows of the training corpus used for `validation`.
    pub validation_indices: Vec<usize>,
}

/// Splits the corpora.
///
/// The training corpus is shuffled with `spec.seed`; the training set takes
/// the first `per_digit_train` examples of every digit in shuffled order and
/// the validation set the next `validation_size` of what remains. The test set
/// is the first `test_size` rows of the separate test corpus.
pub fn make_splits(corpus: &Dataset, test_corpus: &Dataset, spec: &SplitSpec) -> Result<Splits> {
    if spec.per_digit_train == 0 {
        return Err(Error::InvalidConfig("per-digit training size must be positive".into()));
    }
    if corpus.dim() != test_corpus.dim() {
        return Err(Error::Dimension {
            what: "test corpus rows",
            expected: corpus.dim(),
            actual: test_corpus.dim(),
        });
    }
    let hist = corpus.label_histogram();
    for (digit, &count) in hist.iter().enumerate() {
        if count < spec.per_digit_train {
            return Err(Error::InsufficientExamples {
                digit: digit as u8,
                needed: spec.per_digit_train,
                available: count,
            });
        }
    }
    let remaining = corpus.len() - spec.train_size();
    if remaining < spec.validation_size {
        return Err(Error::InvalidData(format!(
            "validation set needs {} examples, only {} left after the training set",
            spec.validation_size, remaining
        )));
    }
    if test_corpus.len() < spec.test_size {
        return Err(Error::InvalidData(format!(
            "test set needs {} examples, test corpus has {}",
            spec.test_size,
            test_corpus.len()
        )));
    }

    let mut order: Vec<usize> = (0..corpus.len()).collect();
    order.shuffle(&mut chain_rng(spec.seed, SPLIT_STREAM));

    let mut taken = [0usize; NUM_CLASSES];
    let mut train_indices = Vec::with_capacity(spec.train_size());
    let mut rest = Vec::with_capacity(remaining);
    for &n in &order {
        let digit = usize::from(corpus.labels()[n]);
        if taken[digit] < spec.per_digit_train {
            taken[digit] += 1;
            train_indices.push(n);
        } else {
            rest.push(n);
        }
    }
    rest.truncate(spec.validation_size);
    let validation_indices = rest;
    let test_indices: Vec<usize> = (0..spec.test_size).collect();

    Ok(Splits {
        train: corpus.select(&train_indices, Split::Train),
        validation: corpus.select(&validation_indices, Split::Validation),
        test: test_corpus.select(&test_indices, Split::Test),
        train_indices,
        validation_indices,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn corpus(n_per_digit: usize, dim: usize) -> Dataset {
        let mut images = Vec::new();
        let mut labels = Vec::new();
        for n in 0..n_per_digit * NUM_CLASSES {
            labels.push((n % NUM_CLASSES) as u8);
            images.extend((0..dim).map(|i| ((n + i) % 2) as u8));
        }
        Dataset::new(dim, images, labels, Split::Train).unwrap()
    }

    #[test]
    fn binarize_threshold() {
        assert_eq!(binarize(&[0, 0, 0], 0.5), vec![0, 0, 0]);
        assert_eq!(binarize(&[128, 127, 255, 1], 0.5), vec![1, 0, 1, 0]);
        let once = binarize(&[3, 200, 90], 0.5);
        assert_eq!(binarize(&once, 0.0), once);
    }

    #[test]
    fn dataset_validation() {
        assert!(Dataset::new(2, vec![0, 1, 1], vec![0], Split::Train).is_err());
        assert!(Dataset::new(2, vec![0, 2], vec![0], Split::Train).is_err());
        assert!(Dataset::new(2, vec![0, 1], vec![10], Split::Train).is_err());
        assert!(Dataset::new(0, vec![], vec![], Split::Train).is_err());
        let d = Dataset::new(2, vec![0, 1, 1, 1], vec![3, 4], Split::Test).unwrap();
        assert_eq!(d.example(1), &[1, 1]);
        assert_eq!(d.len(), 2);
    }

    #[test]
    fn splits_have_requested_sizes() {
        let c = corpus(30, 4);
        let t = corpus(5, 4);
        let spec = SplitSpec {
            per_digit_train: 10,
            validation_size: 50,
            test_size: 40,
            seed: 3,
        };
        let s = make_splits(&c, &t, &spec).unwrap();
        assert_eq!(s.train.len(), 100);
        assert_eq!(s.train.label_histogram(), [10; 10]);
        assert_eq!(s.validation.len(), 50);
        assert_eq!(s.test.len(), 40);
        assert!(s.train_indices.iter().all(|i| !s.validation_indices.contains(i)));

        let again = make_splits(&c, &t, &spec).unwrap();
        assert_eq!(again.train_indices, s.train_indices);
        assert_eq!(again.validation_indices, s.validation_indices);

        let other = make_splits(&c, &t, &SplitSpec { seed: 4, ..spec }).unwrap();
        assert_ne!(other.train_indices, s.train_indices);
    }

    #[test]
    fn splits_report_shortages() {
        let c = corpus(5, 2);
        let t = corpus(1, 2);
        let spec = SplitSpec {
            per_digit_train: 6,
            validation_size: 1,
            test_size: 1,
            seed: 0,
        };
        assert!(matches!(
            make_splits(&c, &t, &spec),
            Err(Error::InsufficientExamples {
                needed: 6,
                available: 5,
                ..
            })
        ));
        let spec = SplitSpec {
            per_digit_train: 4,
            validation_size: 20,
            test_size: 1,
            seed: 0,
        };
        assert!(make_splits(&c, &t, &spec).is_err());
    }
}
