use std::fs;
use std::path::Path;

use proptest::prelude::*;
use simpinn::datagen::{
    load_checkpoint, load_checkpoint_for, load_dataset, make_labeled, make_observed,
    save_checkpoint, save_dataset, Dataset, DATASET_HEADER_LEN,
};
use simpinn::mlp::{init, predict, MlpArchitecture, MlpParams};
use simpinn::orbit::{PhysicsConstants, SensorImage};
use simpinn::trainer::{AdamConfig, AdamState};
use simpinn::Error;

fn physics() -> PhysicsConstants {
    PhysicsConstants {
        width: 12,
        height: 8,
        n_samples: 32,
        ..PhysicsConstants::default()
    }
}

fn dataset(seed: u64, n_l: usize, n_o: usize) -> Dataset {
    let p = physics();
    Dataset {
        width: p.width,
        height: p.height,
        labeled: make_labeled(seed, n_l, &p).unwrap(),
        observed: make_observed(seed, n_o, &p, 1e-3).unwrap(),
    }
}

fn bits(p: &MlpParams) -> Vec<u64> {
    p.tensors().concat().iter().map(|v| v.to_bits()).collect()
}

fn rewrite(path: &Path, f: impl FnOnce(&mut Vec<u8>)) {
    let mut bytes = fs::read(path).unwrap();
    f(&mut bytes);
    fs::write(path, bytes).unwrap();
}

#[test]
fn dataset_round_trip_is_bitwise() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("d.spnd");
    let d = dataset(3, 5, 4);
    save_dataset(&path, &d).unwrap();
    let back = load_dataset(&path).unwrap();
    assert_eq!(back, d.quantized());
    // a second cycle reproduces the same bytes
    let again = dir.path().join("e.spnd");
    save_dataset(&again, &back).unwrap();
    assert_eq!(fs::read(&path).unwrap(), fs::read(&again).unwrap());
}

#[test]
fn corrupted_datasets_fail_with_distinct_errors() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("d.spnd");
    let d = dataset(1, 2, 2);
    save_dataset(&path, &d).unwrap();
    let good = fs::read(&path).unwrap();

    rewrite(&path, |b| b[DATASET_HEADER_LEN + 3] ^= 0x01);
    assert!(matches!(load_dataset(&path), Err(Error::Crc { .. })));

    fs::write(&path, &good).unwrap();
    rewrite(&path, |b| b[0] = b'X');
    assert!(matches!(load_dataset(&path), Err(Error::BadMagic { .. })));

    fs::write(&path, &good).unwrap();
    rewrite(&path, |b| b[4] = 99);
    assert!(matches!(load_dataset(&path), Err(Error::Version { .. })));

    fs::write(&path, &good).unwrap();
    rewrite(&path, |b| b.truncate(b.len() - 9));
    assert!(matches!(load_dataset(&path), Err(Error::Truncated { .. })));

    fs::write(&path, &good).unwrap();
    rewrite(&path, |b| b.push(0));
    assert!(matches!(load_dataset(&path), Err(Error::Malformed { .. })));

    let missing = dir.path().join("absent.spnd");
    assert!(matches!(load_dataset(&missing), Err(Error::Io { .. })));
}

#[test]
fn checkpoint_round_trip_preserves_predictions() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.spnc");
    let arch = MlpArchitecture::new(96, vec![16, 8]);
    let params = init(&arch, 7, 0.95).unwrap();
    let mut adam = AdamState::new(&params);
    let mut stepped = params.clone();
    let grads: Vec<Vec<f64>> = params
        .tensors()
        .iter()
        .map(|t| t.iter().map(|v| v.sin()).collect())
        .collect();
    adam.update(&mut stepped, &grads, &AdamConfig::default()).unwrap();

    save_checkpoint(&path, &stepped, Some(&adam)).unwrap();
    let back = load_checkpoint(&path).unwrap();
    assert_eq!(bits(&back.params), bits(&stepped));
    assert_eq!(back.params.head_ranges, stepped.head_ranges);
    assert_eq!(back.adam.as_ref(), Some(&adam));

    let images: Vec<SensorImage> = dataset(2, 3, 0).labeled.into_iter().map(|s| s.y).collect();
    let refs: Vec<&SensorImage> = images.iter().collect();
    let a = predict(&stepped, &refs).unwrap();
    let b = predict(&back.params, &refs).unwrap();
    let to_bits = |v: Vec<[f64; 3]>| -> Vec<u64> { v.concat().iter().map(|x| x.to_bits()).collect() };
    assert_eq!(to_bits(a), to_bits(b));
}

#[test]
fn checkpoint_without_optimizer_state() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.spnc");
    let params = init(&MlpArchitecture::new(10, vec![4]), 1, 0.9).unwrap();
    save_checkpoint(&path, &params, None).unwrap();
    let back = load_checkpoint(&path).unwrap();
    assert!(back.adam.is_none());
    assert_eq!(bits(&back.params), bits(&params));
}

#[test]
fn checkpoint_architecture_is_checked() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.spnc");
    let arch = MlpArchitecture::new(10, vec![4]);
    save_checkpoint(&path, &init(&arch, 1, 0.9).unwrap(), None).unwrap();
    assert!(load_checkpoint_for(&path, &arch).is_ok());
    let other = MlpArchitecture::new(10, vec![5]);
    assert!(matches!(
        load_checkpoint_for(&path, &other),
        Err(Error::Architecture(_))
    ));
}

#[test]
fn corrupted_checkpoint_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.spnc");
    save_checkpoint(&path, &init(&MlpArchitecture::new(10, vec![4]), 1, 0.9).unwrap(), None).unwrap();
    let len = fs::read(&path).unwrap().len();
    rewrite(&path, |b| b[len / 2] ^= 0x40);
    assert!(matches!(load_checkpoint(&path), Err(Error::Crc { .. })));
    // a dataset is not a checkpoint
    let d = dir.path().join("d.spnd");
    save_dataset(&d, &Dataset::empty(2, 2)).unwrap();
    assert!(matches!(load_checkpoint(&d), Err(Error::BadMagic { .. })));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn any_dataset_round_trips(seed in 0u64..10_000, n_l in 0usize..4, n_o in 0usize..4) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.spnd");
        let d = dataset(seed, n_l, n_o);
        save_dataset(&path, &d).unwrap();
        prop_assert_eq!(load_dataset(&path).unwrap(), d.quantized());
    }

    #[test]
    fn any_single_byte_flip_is_detected(seed in 0u64..100, pos_frac in 0.0f64..1.0, mask in 1u8..=255) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.spnd");
        save_dataset(&path, &dataset(seed, 1, 1)).unwrap();
        let len = fs::read(&path).unwrap().len();
        let pos = ((len as f64 * pos_frac) as usize).min(len - 1);
        rewrite(&path, |b| b[pos] ^= mask);
        prop_assert!(load_dataset(&path).is_err());
    }
}
