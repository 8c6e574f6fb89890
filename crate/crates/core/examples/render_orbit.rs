//! Render the ground-track image of a Molniya-like orbit and save it as PGM.
//!
//!     cargo run --release --example render_orbit -- orbit.pgm

use simpinn::datagen::write_pgm;
use simpinn::orbit::{render, IntensityLaw, OrbitalElements, PhysicsConstants};

fn main() -> simpinn::Result<()> {
    let path = std::env::args().nth(1).unwrap_or_else(|| "orbit.pgm".into());
    let x = OrbitalElements::new(0.4, 45f64.to_radians(), 0.0)?;
    let physics = PhysicsConstants::default();
    let image = render(&x, &physics)?;
    println!(
        "{}x{} image from {} samples: total mass {:.4}, peak {:.4e}",
        image.width(),
        image.height(),
        physics.n_samples,
        image.total(),
        image.max()
    );

    let bright = PhysicsConstants { intensity_law: IntensityLaw::InverseSquare, ..physics.clone() };
    let weighted = render(&x, &bright)?;
    println!("inverse-square weighting: total mass {:.4}", weighted.total());

    write_pgm(&image, &path)?;
    println!("wrote {path}");
    Ok(())
}
