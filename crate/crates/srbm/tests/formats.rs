mod common;

use std::fs;
use std::path::Path;

use proptest::prelude::*;
use srbm::mnist::{load_corpus, Corpus};
use srbm::model_file::{decode, encode_rbm, encode_subspace, SavedModel};
use srbm_core::{ModelParams, RbmParams, Shape};

proptest! {
    #[test]
    fn subspace_round_trip(d in 1usize..6, m in 1usize..4, k in 1usize..4, values in prop::collection::vec(-1e6f64..1e6, 120)) {
        let shape = Shape::new(d, m, k).unwrap();
        let mut p = ModelParams::zeros(shape);
        for (slot, v) in p.iter_mut().zip(values.iter().cycle()) {
            *slot = *v;
        }
        let bytes = encode_subspace(&p);
        prop_assert_eq!(bytes.len(), 17 + 8 * shape.parameter_count());
        prop_assert_eq!(decode(&bytes, Path::new("m")).unwrap(), SavedModel::Subspace(p));
    }

    #[test]
    fn rbm_round_trip(d in 1usize..6, m in 1usize..6, values in prop::collection::vec(-1e6f64..1e6, 50)) {
        let mut p = RbmParams::zeros(d, m).unwrap();
        for (slot, v) in p.iter_mut().zip(values.iter().cycle()) {
            *slot = *v;
        }
        let bytes = encode_rbm(&p);
        prop_assert_eq!(decode(&bytes, Path::new("m")).unwrap(), SavedModel::Rbm(p));
    }

    #[test]
    fn truncation_is_always_an_error(cut in 0usize..57) {
        let p = ModelParams::zeros(Shape::new(2, 1, 2).unwrap());
        let bytes = encode_subspace(&p);
        prop_assert!(cut < bytes.len());
        prop_assert!(decode(&bytes[..cut], Path::new("m")).is_err());
    }
}

#[test]
fn corpus_loading_binarizes_and_checks_counts() {
    let tmp = tempfile::tempdir().unwrap();
    common::synthetic_mnist(tmp.path());
    let train = load_corpus(tmp.path(), Corpus::Train).unwrap();
    assert_eq!((train.len(), train.dim()), (300, 784));
    assert!(train.images().iter().all(|&v| v <= 1));
    assert_eq!(train.label_histogram(), [30; 10]);

    common::write_labels(&tmp.path().join("t10k-labels-idx1-ubyte"), &[1, 2, 3]);
    let err = load_corpus(tmp.path(), Corpus::Test).unwrap_err().to_string();
    assert!(err.contains("3 labels for 60 images"), "{err}");
}

#[test]
fn gzip_and_dotted_names_are_found() {
    use flate2::write::GzEncoder;
    use std::io::Write;
    let tmp = tempfile::tempdir().unwrap();
    common::synthetic_mnist(tmp.path());
    for (from, to) in [
        ("t10k-images-idx3-ubyte", "t10k-images.idx3-ubyte.gz"),
        ("t10k-labels-idx1-ubyte", "t10k-labels.idx1-ubyte"),
    ] {
        let bytes = fs::read(tmp.path().join(from)).unwrap();
        fs::remove_file(tmp.path().join(from)).unwrap();
        let out = if to.ends_with(".gz") {
            let mut enc = GzEncoder::new(Vec::new(), flate2::Compression::fast());
            enc.write_all(&bytes).unwrap();
            enc.finish().unwrap()
        } else {
            bytes
        };
        fs::write(tmp.path().join(to), out).unwrap();
    }
    assert_eq!(load_corpus(tmp.path(), Corpus::Test).unwrap().len(), 60);
}
