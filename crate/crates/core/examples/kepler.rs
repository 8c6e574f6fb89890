//! Solve Kepler's equation and compare the implicit partials with finite
//! differences.
//!
//!     cargo run --release --example kepler

use simpinn::orbit::solve_kepler;

fn main() -> simpinn::Result<()> {
    let h = 1e-6;
    println!("{:>6} {:>5} {:>12} {:>12} {:>12} {:>12}", "M", "e", "E", "residual", "dE/dM", "dE/de");
    for &(m, e) in &[(0.5, 0.1), (1.3, 0.4), (3.0, 0.7), (5.5, 0.95)] {
        let s = solve_kepler(m, e)?;
        let big_e = s.eccentric_anomaly;
        let residual = big_e - e * big_e.sin() - m;
        let fd_m = (solve_kepler(m + h, e)?.eccentric_anomaly - solve_kepler(m - h, e)?.eccentric_anomaly) / (2.0 * h);
        println!(
            "{m:>6.2} {e:>5.2} {big_e:>12.9} {residual:>12.1e} {:>12.6} {:>12.6}   (finite difference dE/dM {fd_m:.6})",
            s.de_dm, s.de_de
        );
    }
    Ok(())
}
