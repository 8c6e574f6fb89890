//! Write a dataset and a checkpoint, read them back and confirm the round
//! trip is exact.
//!
//!     cargo run --release --example persistence

use simpinn::datagen::{
    load_checkpoint_for, load_dataset, make_labeled, make_observed, save_checkpoint, save_dataset, Dataset,
};
use simpinn::mlp::{init, predict, MlpArchitecture};
use simpinn::orbit::PhysicsConstants;

fn main() -> simpinn::Result<()> {
    let dir = std::env::temp_dir().join(format!("simpinn-example-{}", std::process::id()));
    std::fs::create_dir_all(&dir).map_err(|e| simpinn::Error::Config(e.to_string()))?;
    let physics = PhysicsConstants { width: 16, height: 16, n_samples: 32, ..PhysicsConstants::default() };

    let d = Dataset {
        width: physics.width,
        height: physics.height,
        labeled: make_labeled(7, 20, &physics)?,
        observed: make_observed(7, 10, &physics, 1e-4)?,
    };
    let path = dir.join("pools.spnd");
    save_dataset(&path, &d)?;
    let back = load_dataset(&path)?;
    println!(
        "dataset: {} labeled + {} observed, {} bytes, identical after f32 rounding: {}",
        back.labeled.len(),
        back.observed.len(),
        std::fs::metadata(&path).map(|m| m.len()).unwrap_or(0),
        back == d.quantized()
    );

    let arch = MlpArchitecture::new(physics.pixel_count(), vec![32, 16]);
    let params = init(&arch, 3, physics.e_max)?;
    let ck = dir.join("net.spnc");
    save_checkpoint(&ck, &params, None)?;
    let loaded = load_checkpoint_for(&ck, &arch)?;
    let images: Vec<_> = back.labeled.iter().map(|s| &s.y).collect();
    let same = predict(&params, &images)? == predict(&loaded.params, &images)?;
    println!("checkpoint: {} parameters, identical predictions: {same}", arch.param_count());
    let _ = std::fs::remove_dir_all(&dir);
    Ok(())
}
