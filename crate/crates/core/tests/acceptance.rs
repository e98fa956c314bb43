//! Acceptance suite: every release-gate criterion runs at its stated
//! tolerance and prints one pass/fail line. Run with
//! `cargo test -p fractube --test acceptance -- --nocapture` to see the
//! lines as they execute.

use std::time::Instant;

use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use fractube::fixtures::{example1_system, unit_square_profile};
use fractube::geometry::{
    hexagram_builtin, hexagram_lambda, inner_tube_volume_raster, steiner_coefficients,
};
use fractube::oracle::{direct_tile_sum, direct_tile_sum_with_cutoff, sweep_compare};
use fractube::spectrum::ScalingZeta;
use fractube::system::SelfSimilarSystem;
use fractube::tube::{tube_formula_sweep, GeometricZeta, QuadratureSpec};

const SQRT3: f64 = 1.732_050_807_568_877_2;

fn report(id: u32, name: &str, pass: bool, detail: &str) {
    println!(
        "acceptance {id} ({name}): {} [{detail}]",
        if pass { "pass" } else { "FAIL" }
    );
    assert!(pass, "criterion {id} ({name}) failed: {detail}");
}

fn example_zeta() -> ScalingZeta {
    ScalingZeta::new(vec![1.0 / 6.0; 24]).unwrap()
}

#[test]
fn criterion_1_moran_dimension_and_period() {
    let start = Instant::now();
    let zeta = example_zeta();
    let d = zeta.similarity_dimension();
    let lattice = zeta.lattice_detect(1e-9).expect("lattice system");
    let elapsed = start.elapsed();

    let d_expect = 1.0 + 4f64.ln() / 6f64.ln();
    let p_expect = 2.0 * std::f64::consts::PI / 6f64.ln();
    let d_err = (d - d_expect).abs();
    let p_err = (lattice.period - p_expect).abs();
    let pass = d_err <= 1e-12 && p_err <= 1e-12 && elapsed.as_secs_f64() < 0.1;
    report(
        1,
        "moran dimension and period",
        pass,
        &format!(
            "|D-err| = {d_err:.2e}, |p-err| = {p_err:.2e}, {:.1} ms",
            elapsed.as_secs_f64() * 1e3
        ),
    );
}

#[test]
fn criterion_2_integer_residues() {
    let (_, profile) = hexagram_builtin();
    let gz = GeometricZeta::new(example_zeta(), profile, QuadratureSpec::default()).unwrap();
    let mut worst: f64 = 0.0;
    for &eps in &[0.1, 0.3, 0.5] {
        let r1 = gz.residue_integer(1, eps).unwrap();
        let expect1 = -4.0 * eps;
        worst = worst.max((r1 - expect1).abs() / expect1.abs());
        let r0 = gz.residue_integer(0, eps).unwrap();
        let expect0 = (6.0 * SQRT3 - std::f64::consts::PI) / 23.0 * eps * eps;
        worst = worst.max((r0 - expect0).abs() / expect0.abs());
    }
    report(
        2,
        "integer residues",
        worst <= 1e-12,
        &format!("max rel err {worst:.2e}"),
    );
}

#[test]
fn criterion_3_polygon_coefficients_and_raster() {
    let start = Instant::now();
    let (polygon, _) = hexagram_builtin();
    let (k1, k0) = steiner_coefficients(&polygon).unwrap();
    let k1_err = (k1 - 12.0).abs();
    let k0_err = (k0 - (std::f64::consts::PI - 6.0 * SQRT3)).abs();

    let eps = 0.1;
    let est = inner_tube_volume_raster(&polygon, eps, 1024).unwrap();
    let quadratic = k1 * eps + k0 * eps * eps;
    let raster_rel = (est.volume - quadratic).abs() / quadratic;
    let elapsed = start.elapsed();

    let pass =
        k1_err <= 1e-12 && k0_err <= 1e-12 && raster_rel <= 0.01 && elapsed.as_secs_f64() < 10.0;
    report(
        3,
        "hexagram coefficients vs raster",
        pass,
        &format!(
            "|k1-12| = {k1_err:.2e}, |k0-(pi-6sqrt3)| = {k0_err:.2e}, raster rel {raster_rel:.2e}, {:.2} s",
            elapsed.as_secs_f64()
        ),
    );
}

#[test]
fn criterion_4_lambda_continuity_and_saturation() {
    let (polygon, profile) = hexagram_builtin();
    let h = SQRT3.recip();
    let junction = 2.0 * SQRT3 + std::f64::consts::PI / 3.0;
    let poly_err = (profile.polynomial_volume(h) - junction).abs();
    let lam_err = (hexagram_lambda(h) - junction).abs();
    let sat_err = (hexagram_lambda(1.0) - 3.0 * SQRT3).abs();

    let mut raster_rel: f64 = 0.0;
    for &eps in &[0.7, 0.9] {
        let est = inner_tube_volume_raster(&polygon, eps, 512).unwrap();
        let expect = hexagram_lambda(eps);
        raster_rel = raster_rel.max((est.volume - expect).abs() / expect);
    }
    let pass = poly_err <= 1e-12 && lam_err <= 1e-12 && sat_err <= 1e-12 && raster_rel <= 0.01;
    report(
        4,
        "lambda continuity and saturation",
        pass,
        &format!(
            "junction errs {poly_err:.2e}/{lam_err:.2e}, saturation err {sat_err:.2e}, raster rel {raster_rel:.2e}"
        ),
    );
}

#[test]
fn criterion_5_residue_series_vs_direct_sum() {
    let start = Instant::now();
    let system = example1_system();
    let (_, profile) = hexagram_builtin();
    let zeta = example_zeta();
    let period = 2.0 * std::f64::consts::PI / 6f64.ln();
    let window = 1000.5 * period;
    let gz = GeometricZeta::for_window(zeta.clone(), profile, window).unwrap();
    let dims = zeta.complex_dimensions(window, (-4.0, 2.0)).unwrap();

    let grid: Vec<f64> = (0..9).map(|k| 0.1 + 0.4 * k as f64 / 8.0).collect();
    let mut errs = Vec::new();
    for &n in &[10u64, 100, 1000] {
        let report = sweep_compare(&system, &gz, &dims, &grid, n).unwrap();
        errs.push(report.max_rel_err().unwrap());
    }
    let elapsed = start.elapsed();
    let non_increasing = errs[0] >= errs[1] && errs[1] >= errs[2];
    let pass = errs[2] <= 0.01 && non_increasing && elapsed.as_secs_f64() < 60.0;
    report(
        5,
        "residue series matches direct sum",
        pass,
        &format!(
            "max rel err N=10: {:.3e}, N=100: {:.3e}, N=1000: {:.3e}, {:.1} s",
            errs[0],
            errs[1],
            errs[2],
            elapsed.as_secs_f64()
        ),
    );
}

#[test]
fn criterion_6_mellin_identity() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(20240817);
    let square = GeometricZeta::new(
        ScalingZeta::new(vec![0.5; 3]).unwrap(),
        unit_square_profile(),
        QuadratureSpec::default(),
    )
    .unwrap();
    let (_, hexagram_profile) = hexagram_builtin();
    let hexagram = GeometricZeta::new(
        example_zeta(),
        hexagram_profile,
        QuadratureSpec::default(),
    )
    .unwrap();

    let mut worst: f64 = 0.0;
    for gz in [&square, &hexagram] {
        let d = gz.profile().dimension() as f64;
        let g = gz.profile().inradius();
        for _ in 0..100 {
            let s = Complex64::new(
                rng.gen_range((-d + 1e-3)..(1.0 - d - 1e-3)),
                rng.gen_range(-6.0..6.0),
            );
            let eps = rng.gen_range(0.05..0.95) * g;
            let closed = gz.mellin_closed(s, eps).unwrap();
            let quad = gz.mellin_quadrature(s, eps).unwrap();
            worst = worst.max((closed - quad).norm() / closed.norm().max(1e-300));
        }
    }
    let elapsed = start.elapsed();
    let pass = worst <= 1e-6 && elapsed.as_secs_f64() < 5.0;
    report(
        6,
        "mellin closed form vs quadrature",
        pass,
        &format!("max rel err {worst:.2e}, {:.2} s", elapsed.as_secs_f64()),
    );
}

#[test]
fn criterion_7_residue_oracle_equivalence() {
    let (_, profile) = hexagram_builtin();
    let zeta = example_zeta();
    let gz = GeometricZeta::new(zeta.clone(), profile, QuadratureSpec::default()).unwrap();
    let dims = zeta.complex_dimensions(20.0, (-4.0, 2.0)).unwrap();
    let eps = 0.3;
    let mut worst: f64 = 0.0;
    // All ladder poles with |n| <= 5.
    for pole in dims.poles() {
        let closed = gz.residue_complex(pole, eps).unwrap();
        let contour = gz.residue_contour(pole.omega, eps, 0.1, 128).unwrap();
        worst = worst.max((closed - contour).norm());
    }
    // Integer points.
    for i in 0..2u32 {
        let closed = gz.residue_integer(i, eps).unwrap();
        let contour = gz
            .residue_contour(Complex64::new(i as f64, 0.0), eps, 0.3, 128)
            .unwrap();
        worst = worst.max((contour - Complex64::new(closed, 0.0)).norm());
    }
    report(
        7,
        "closed-form vs contour residues",
        worst <= 1e-8,
        &format!("max abs err {worst:.2e} over {} poles", dims.poles().len() + 2),
    );
}

#[test]
fn criterion_8_direct_sum_hand_check() {
    let system = SelfSimilarSystem::uniform(2, 3, 0.5).unwrap();
    let v = direct_tile_sum(&system, &unit_square_profile(), 0.25).unwrap();
    let err = (v - 3.75).abs();
    report(
        8,
        "toy system hand enumeration",
        err <= 1e-12,
        &format!("|V - 3.75| = {err:.2e}"),
    );
}

#[test]
fn criterion_9_property_suites() {
    let mut rng = ChaCha8Rng::seed_from_u64(42);

    // Conservation of the d-th moment under enumeration.
    let mut conservation_worst: f64 = 0.0;
    for _ in 0..20 {
        let j = rng.gen_range(2..=5);
        let ratios: Vec<f64> = (0..j).map(|_| rng.gen_range(0.15..0.5)).collect();
        let sys = SelfSimilarSystem::new(
            2,
            ratios
                .iter()
                .map(|&r| fractube::system::Similitude::new(r))
                .collect(),
        )
        .unwrap();
        let cutoff = rng.gen_range(0.01..0.5);
        let agg = sys.enumerate_ratios(cutoff).unwrap();
        conservation_worst = conservation_worst.max(agg.conservation_residual());
    }

    // Conjugate symmetry of the geometric zeta and imaginary leakage of
    // symmetric truncations.
    let (_, profile) = hexagram_builtin();
    let zeta = example_zeta();
    let gz = GeometricZeta::new(zeta.clone(), profile, QuadratureSpec::default()).unwrap();
    let dims = zeta.complex_dimensions(40.0, (-4.0, 2.0)).unwrap();
    let mut conj_worst: f64 = 0.0;
    for _ in 0..25 {
        let s = Complex64::new(rng.gen_range(2.1..4.0), rng.gen_range(0.1..8.0));
        let eps = rng.gen_range(0.05..0.5);
        let a = gz.eval(s, eps).unwrap();
        let b = gz.eval(s.conj(), eps).unwrap();
        conj_worst = conj_worst.max((a.conj() - b).norm() / a.norm().max(1e-300));
    }
    let mut leak_worst: f64 = 0.0;
    for result in tube_formula_sweep(&gz, &dims, &[0.1, 0.25, 0.4, 0.55], 10) {
        let ev = result.unwrap();
        leak_worst = leak_worst.max(ev.imag_leak / ev.total.abs().max(1.0));
    }

    // Scaling identity holds bit for bit.
    let mut scaling_exact = true;
    let (_, hex_profile) = hexagram_builtin();
    let square_profile = unit_square_profile();
    for _ in 0..200 {
        let x = rng.gen_range(0.01..20.0);
        let eps = rng.gen_range(0.001..3.0);
        for prof in [&hex_profile, &square_profile] {
            let lhs = prof.scaled_volume(x, eps);
            let rhs = x * x * prof.volume(eps / x);
            scaling_exact &= lhs == rhs;
        }
    }

    // Cutoff independence of the direct sum.
    let system = example1_system();
    let mut cutoff_worst: f64 = 0.0;
    for _ in 0..10 {
        let eps = rng.gen_range(0.05..0.9);
        let base = direct_tile_sum(&system, &hex_profile, eps).unwrap();
        let tighter = rng.gen_range(0.2..0.9) * eps / hex_profile.inradius();
        let v = direct_tile_sum_with_cutoff(&system, &hex_profile, eps, tighter).unwrap();
        cutoff_worst = cutoff_worst.max((v - base).abs() / base.abs());
    }

    let pass = conservation_worst <= 1e-10
        && conj_worst <= 1e-9
        && leak_worst <= 1e-9
        && scaling_exact
        && cutoff_worst <= 1e-10;
    report(
        9,
        "randomized property suites",
        pass,
        &format!(
            "conservation {conservation_worst:.2e}, conjugation {conj_worst:.2e}, imag leak {leak_worst:.2e}, scaling exact {scaling_exact}, cutoff independence {cutoff_worst:.2e}"
        ),
    );
}
