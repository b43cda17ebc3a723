mod common;

use hdltex::container::{decode_model, encode_model, load_model, save_model, ContainerError, MAGIC};
use hdltex::Error;
use hdltex_core::hierarchy::{evaluate_hierarchy, Pipeline, train_hierarchy, HierarchicalModel, ModelKind};
use hdltex_core::nn::NoClock;

use common::{small_corpus, tiny_config};

fn trained(parent: ModelKind, child: ModelKind) -> HierarchicalModel {
    train_hierarchy(&tiny_config(parent, child), &small_corpus(1), None, &mut |_, _| {}, &NoClock).unwrap()
}

fn param_bits(m: &HierarchicalModel) -> Vec<u64> {
    use hdltex_core::hierarchy::Classifier;
    std::iter::once(&m.parent)
        .chain(&m.children)
        .flat_map(|l| match &l.classifier {
            Classifier::Neural(n) => n.params().into_iter().flat_map(|t| t.data().to_vec()).collect::<Vec<_>>(),
            Classifier::NaiveBayes(nb) => nb
                .class_log_prior
                .iter()
                .chain(nb.word_log_likelihood.data())
                .copied()
                .collect(),
        })
        .map(f64::to_bits)
        .collect()
}

#[test]
fn every_family_round_trips_bit_exactly() {
    for kind in ModelKind::ALL {
        let model = trained(kind, kind);
        let bytes = encode_model(&model);
        let back = decode_model(&bytes).unwrap();
        assert_eq!(back, model, "{}", kind.name());
        assert_eq!(param_bits(&back), param_bits(&model));
        assert_eq!(encode_model(&back), bytes, "{} re-encodes differently", kind.name());
    }
}

#[test]
fn mixed_levels_share_one_embedding_table() {
    let model = trained(ModelKind::RnnGru, ModelKind::Cnn);
    let back = decode_model(&encode_model(&model)).unwrap();
    assert_eq!(back, model);
    let table = |l: &hdltex_core::hierarchy::LevelModel| match &l.pipeline {
        Pipeline::Embedded { table, .. } => std::sync::Arc::clone(table),
        _ => panic!("sequence model without embeddings"),
    };
    let first = table(&back.parent);
    assert!(back.children.iter().all(|c| std::sync::Arc::ptr_eq(&table(c), &first)));
}

#[test]
fn saved_model_evaluates_identically() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.hdl");
    let model = trained(ModelKind::Dnn, ModelKind::Nbc);
    save_model(&model, &path).unwrap();
    let loaded = load_model(&path).unwrap();
    let test = small_corpus(2);
    assert_eq!(evaluate_hierarchy(&loaded, &test).unwrap(), evaluate_hierarchy(&model, &test).unwrap());
}

#[test]
fn truncation_is_reported() {
    let bytes = encode_model(&trained(ModelKind::Nbc, ModelKind::Nbc));
    for cut in [0, 3, 8, 11, 15, 40, bytes.len() / 2, bytes.len() - 33, bytes.len() - 1] {
        let err = decode_model(&bytes[..cut]).unwrap_err();
        assert_eq!(err, ContainerError::UnexpectedEnd, "cut at {cut}");
        assert_eq!(err.to_string(), "unexpected end of container");
    }
}

#[test]
fn future_version_is_rejected() {
    let mut bytes = encode_model(&trained(ModelKind::Nbc, ModelKind::Nbc));
    bytes[8..12].copy_from_slice(&2u32.to_le_bytes());
    let err = decode_model(&bytes).unwrap_err();
    assert_eq!(err, ContainerError::UnsupportedVersion(2));
    assert!(err.to_string().contains("unsupported version"));
}

#[test]
fn bad_magic_is_rejected() {
    let mut bytes = encode_model(&trained(ModelKind::Nbc, ModelKind::Nbc));
    bytes[0] = b'X';
    assert_eq!(decode_model(&bytes).unwrap_err(), ContainerError::BadMagic);
    assert_eq!(decode_model(b"PK\x03\x04").unwrap_err(), ContainerError::BadMagic);
    assert_eq!(&encode_model(&trained(ModelKind::Nbc, ModelKind::Nbc))[..8], MAGIC);
}

#[test]
fn flipped_bits_fail_the_checksum() {
    let bytes = encode_model(&trained(ModelKind::Dnn, ModelKind::Dnn));
    for pos in [30, bytes.len() / 3, bytes.len() - 40, bytes.len() - 1] {
        let mut bad = bytes.clone();
        bad[pos] ^= 0x10;
        assert_eq!(decode_model(&bad).unwrap_err(), ContainerError::ChecksumMismatch, "byte {pos}");
    }
}

#[test]
fn trailing_bytes_are_rejected() {
    let mut bytes = encode_model(&trained(ModelKind::Nbc, ModelKind::Nbc));
    bytes.push(0);
    assert!(matches!(decode_model(&bytes), Err(ContainerError::Malformed(_))));
}

#[test]
fn unwritable_path_leaves_nothing_behind() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("missing").join("m.hdl");
    let err = save_model(&trained(ModelKind::Nbc, ModelKind::Nbc), &path).unwrap_err();
    assert!(matches!(err, Error::Io { .. }));
    assert!(err.to_string().contains("m.hdl"), "{err}");
    assert!(!path.exists());
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 0);
}

#[test]
fn overwrite_replaces_whole_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.hdl");
    std::fs::write(&path, vec![0xAB; 1 << 20]).unwrap();
    let model = trained(ModelKind::Nbc, ModelKind::Nbc);
    save_model(&model, &path).unwrap();
    assert_eq!(load_model(&path).unwrap(), model);
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
}
