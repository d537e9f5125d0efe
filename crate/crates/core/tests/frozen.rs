//! Reference values pinned from verified runs.

use bogolib::bogoliubov::ground_state_energy;
use bogolib::ed::{compare_at, SweepConfig};
use bogolib::potential::PotentialSpec;
use bogolib::scattering::{continuum_scattering_length, solve_scattering_equation};
use bogolib::MomentumLattice;

fn close(x: f64, y: f64, rel: f64) -> bool {
    (x - y).abs() <= rel * y.abs()
}

#[test]
fn box_scattering_length_step() {
    let spec = PotentialSpec::step(50.0, 0.2, 20).unwrap();
    let sol = solve_scattering_equation(&MomentumLattice::new(4), &spec, 1e-13).unwrap();
    assert!(close(sol.a_n, 6.269_062_062_534_547e-2, 1e-11), "{}", sol.a_n);
}

#[test]
fn continuum_scattering_length_step() {
    let spec = PotentialSpec::step(50.0, 0.2, 20).unwrap();
    let a = continuum_scattering_length(&spec, 1e-13).unwrap();
    assert!(close(a, 4.768_116_880_884_699e-2, 1e-11), "{a}");
}

#[test]
fn ground_state_energy_k8() {
    let g = ground_state_energy::<f64>(0.02, 100, &MomentumLattice::new(8));
    assert!(close(g.value, 2.488_172_293_454_167e1, 1e-13), "{}", g.value);
    assert!(close(g.tail, 3.2e-5, 1e-13), "{}", g.tail);
}

#[test]
fn desk_preset_at_six_particles() {
    let r = compare_at(&SweepConfig::desk(), 6).unwrap();
    assert!(close(r.ground.ed_energy, 4.104_566_292_987_522, 1e-9), "{}", r.ground.ed_energy);
    let (gap, eps, _) = r.e1_gap.unwrap();
    assert!(close(gap, 40.877_545_464_021_22, 1e-9), "{gap}");
    assert!(close(eps, 41.086_657_412_960_88, 1e-12), "{eps}");
    assert!(close(r.depletion.n_plus, 2.038_317_855_778_952e-3, 1e-7), "{}", r.depletion.n_plus);
}
