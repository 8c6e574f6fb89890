//! Compare the analytic Jacobian of the forward operator with central
//! differences of the rendered image.
//!
//!     cargo run --release --example jacobian_check

use simpinn::orbit::{render, render_jacobian, OrbitalElements, PhysicsConstants};

fn main() -> simpinn::Result<()> {
    let physics = PhysicsConstants { width: 32, height: 32, n_samples: 128, ..PhysicsConstants::default() };
    let x = OrbitalElements::new(0.3, 1.0, 2.0)?;
    let jac = render_jacobian(&x, &physics)?;
    let h = 1e-6;
    for (k, name) in ["e", "i", "omega"].iter().enumerate() {
        let mut up = x.as_array();
        let mut down = x.as_array();
        up[k] += h;
        down[k] -= h;
        let a = render(&OrbitalElements::from_array(up)?, &physics)?;
        let b = render(&OrbitalElements::from_array(down)?, &physics)?;
        let analytic = jac.column(k);
        let (mut num, mut den) = (0.0, 0.0);
        for ((pa, pb), g) in a.pixels().iter().zip(b.pixels()).zip(&analytic) {
            let fd = (pa - pb) / (2.0 * h);
            num += (g - fd) * (g - fd);
            den += fd * fd;
        }
        println!("d image / d {name:<5}: relative L2 error {:.2e}", (num / den).sqrt());
    }
    Ok(())
}
