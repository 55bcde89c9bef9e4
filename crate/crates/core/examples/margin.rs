use tubex_core::energy::gagliardo_energy;
use tubex_core::fixtures;

fn main() {
    let m = fixtures::unit_circle();
    let closed = 8.0 * std::f64::consts::PI.powi(2) * 2f64.ln();
    for n in [512usize, 1024, 2048] {
        let e = gagliardo_energy(&fixtures::identity_circle_map(n), Some(&m)).unwrap();
        println!("n = {n}: value = {:.6}, closed = {:.6}, rel = {:.2e}, err_est = {:.2e}", e.value, closed, (e.value - closed).abs() / closed, e.error_estimate);
    }
}
