use steklov_patterns::assembly::assemble;
use steklov_patterns::certificate::recipe_bound_mode;
use steklov_patterns::meshing::mesh_domain;
use steklov_patterns::steklov::steklov_spectrum;
use steklov_patterns::DomainSpecF32;

#[test]
fn disk_spectrum_in_f32() {
    let (_, mesh) = mesh_domain(&DomainSpecF32::disk(1.0), 0.15).unwrap();
    let ops = assemble(&mesh).unwrap();
    let spec = steklov_spectrum(&ops, 4).unwrap();
    assert!(spec.eigenvalues[0].abs() < 1e-3);
    assert!((spec.mu1() - 1.0).abs() < 0.03, "{}", spec.mu1());
}

#[test]
fn recipe_in_f32() {
    let cert = recipe_bound_mode(1.0f32, 300.0, 1.0).unwrap();
    assert!((cert.discriminant - 14404.0).abs() < 1e-2);
    let (lo, hi) = cert.window.unwrap();
    assert!((lo - 22.748).abs() < 1e-3 && (hi - 52.752).abs() < 1e-3);
}
