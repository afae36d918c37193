use fracheat_core::linalg::smallest_eigenvalue;
use fracheat_core::operator::{exterior_tails, interior_probes, lattice_calibration};
use fracheat_core::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn params() -> FractionalParams {
    FractionalParams::new(1, 0.5).unwrap()
}

fn interval(n: usize) -> Grid {
    build_grid(Domain::interval(-1.0, 1.0), 2.0 / n as f64).unwrap()
}

fn c_star() -> f64 {
    hardy_constant(params()).unwrap()
}

#[test]
fn grid_examples() {
    let g = build_grid(Domain::interval(-1.0, 1.0), 0.5).unwrap();
    assert_eq!(g.xs(), vec![-0.75, -0.25, 0.25, 0.75]);
    assert!(build_grid(Domain::interval(-1.0, 1.0), 2.0 / 3.0).is_err());
    assert_eq!(build_grid(Domain::square(1.0), 0.5).unwrap().len(), 16);
    let g = interval(200);
    let rmin = g.radii().into_iter().fold(f64::INFINITY, f64::min);
    assert!((rmin - g.h / 2.0).abs() < 1e-15);
}

#[test]
fn killing_symmetry_and_boundary_growth() {
    let d = Domain::interval(-1.0, 1.0);
    for x in [0.1, 0.4, 0.9] {
        let a = killing_term(&[x, 0.0], &d, params()).unwrap();
        let b = killing_term(&[-x, 0.0], &d, params()).unwrap();
        assert!((a - b).abs() < 1e-14 * a);
    }
    let near = killing_term(&[1.0 - 1e-8, 0.0], &d, params()).unwrap();
    assert!(near > 1e3);
}

#[test]
fn unperturbed_operator_is_positive_definite() {
    let op = assemble_operator(&interval(200), params(), 0.0, f64::INFINITY).unwrap();
    assert!(smallest_eigenvalue(&op.l0) > 0.9);
    for i in 0..op.len() {
        for j in 0..op.len() {
            assert_eq!(op.l0[(i, j)], op.l0[(j, i)]);
            if i != j {
                assert!(op.l0[(i, j)] <= 0.0);
            }
        }
    }
}

#[test]
fn smallest_eigenvalue_decreases_in_c() {
    let g = interval(200);
    let cs = c_star();
    let mut last = f64::INFINITY;
    for f in [0.0, 0.25, 0.5, 0.9, 1.0, 1.2] {
        let op = assemble_operator(&g, params(), f * cs, f64::INFINITY).unwrap();
        let l = smallest_eigenvalue(&op.hamiltonian());
        assert!(l < last, "c = {f}c*: {l} !< {last}");
        last = l;
    }
}

#[test]
fn subcritical_hardy_gap() {
    let cs = c_star();
    for n in [100, 200, 400] {
        let op = assemble_operator(&interval(n), params(), 0.9 * cs, f64::INFINITY).unwrap();
        assert!(smallest_eigenvalue(&op.hamiltonian()) > 0.0);
    }
}

#[test]
fn hardy_form_dominates_scaled_plain_form() {
    let cs = c_star();
    let c = 0.5 * cs;
    let op = assemble_operator(&interval(200), params(), c, f64::INFINITY).unwrap();
    let ev = FormEvaluator::plain(&op);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..10 {
        let f: Vec<f64> = (0..op.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let plain = ev.value(&f, FormVariant::Plain).unwrap();
        let hardy = ev.value(&f, FormVariant::Hardy).unwrap();
        assert!(hardy >= (1.0 - c / cs) * plain - 1e-3 * plain);
    }
}

#[test]
fn constant_vector_plain_form_is_killing_mass() {
    let op = assemble_operator(&interval(100), params(), 0.0, f64::INFINITY).unwrap();
    let ones = vec![1.0; op.len()];
    let v = FormEvaluator::plain(&op)
        .value(&ones, FormVariant::Plain)
        .unwrap();
    let k: f64 = op.killing.iter().sum::<f64>() * op.grid.h;
    assert!((v - k).abs() < 1e-9 * k);
}

#[test]
fn harmonicity_defect_shrinks() {
    let map = ExponentMap::new(params()).unwrap();
    let beta = map.beta_of_c(0.5 * map.c_star()).unwrap();
    let d: Vec<f64> = [100, 200, 400]
        .iter()
        .map(|&n| {
            let op = assemble_operator(&interval(n), params(), 0.0, f64::INFINITY).unwrap();
            let probes = interior_probes(&op.grid, 0.25, 0.25);
            harmonicity_defect(&op, beta, &probes).unwrap().max_abs
        })
        .collect();
    assert!(d[0] / d[1] >= 1.5 && d[1] / d[2] >= 1.5, "{d:?}");
}

#[test]
fn harmonic_consistent_potential_tends_to_point_samples() {
    let g = interval(400);
    let cs = c_star();
    let a = assemble_operator_with(
        &g,
        params(),
        0.5 * cs,
        f64::INFINITY,
        PotentialSampling::HarmonicConsistent,
    )
    .unwrap();
    let b = assemble_operator_with(
        &g,
        params(),
        0.5 * cs,
        f64::INFINITY,
        PotentialSampling::Point,
    )
    .unwrap();
    for i in 0..g.len() {
        if g.radius(i) > 0.5 {
            assert!((a.potential[i] / b.potential[i] - 1.0).abs() < 5e-3);
        }
    }
}

#[test]
fn calibrated_potential_makes_weight_discretely_harmonic_on_the_lattice() {
    // On the whole lattice the calibrated potential satisfies L w = V w exactly,
    // so rho only depends on the cell index, not on h.
    let map = ExponentMap::new(params()).unwrap();
    let c = 0.5 * map.c_star();
    let beta = map.beta_of_c(c).unwrap();
    let r1 = lattice_calibration(0.5, map.intensity(), c, beta, 10).unwrap();
    let r2 = lattice_calibration(0.5, map.intensity(), c, beta, 40).unwrap();
    for q in 0..=10 {
        assert!((r1[q] - r2[q]).abs() < 1e-9);
    }
}

#[test]
fn ground_state_identity_defect_shrinks() {
    let map = ExponentMap::new(params()).unwrap();
    let c = 0.5 * map.c_star();
    let beta = map.beta_of_c(c).unwrap();
    let profile = |x: f64| {
        let q = ((x - 0.1) / 0.5).powi(2);
        if q < 1.0 {
            (1.0 - 1.0 / (1.0 - q)).exp()
        } else {
            0.0
        }
    };
    let defects: Vec<f64> = [100, 200, 400]
        .iter()
        .map(|&n| {
            let op = assemble_operator(&interval(n), params(), c, f64::INFINITY).unwrap();
            let ev = FormEvaluator::weighted(&op, beta).unwrap();
            let w = ev.weight.clone().unwrap();
            let f: Vec<f64> = op.grid.xs().iter().map(|x| profile(*x)).collect();
            let wf: Vec<f64> = f.iter().zip(&w).map(|(a, b)| a * b).collect();
            let q = ev.value(&f, FormVariant::Weighted).unwrap();
            (ev.value(&wf, FormVariant::Hardy).unwrap() - q).abs() / q.max(1.0)
        })
        .collect();
    assert!(
        defects[1] <= 0.7 * defects[0] && defects[2] <= 0.7 * defects[1],
        "{defects:?}"
    );
}

#[test]
fn weighted_form_requires_weight() {
    let op = assemble_operator(&interval(20), params(), 0.0, f64::INFINITY).unwrap();
    let f = vec![1.0; op.len()];
    assert!(matches!(
        FormEvaluator::plain(&op).value(&f, FormVariant::Weighted),
        Err(Error::Contract(_))
    ));
    assert!(matches!(
        FormEvaluator::plain(&op).value(&f[1..], FormVariant::Plain),
        Err(Error::Contract(_))
    ));
}

#[test]
fn square_operator_is_symmetric_with_killing_row_sums() {
    let p = FractionalParams::new(2, 1.0).unwrap();
    let g = build_grid(Domain::square(1.0), 0.25).unwrap();
    let op = assemble_operator(&g, p, 0.1, f64::INFINITY).unwrap();
    assert_eq!(op.sampling, PotentialSampling::Point);
    assert_eq!((&op.l0 - op.l0.transpose()).amax(), 0.0);
    for (s, k) in op.row_sums().iter().zip(&op.killing) {
        assert!((s - k).abs() < 1e-10 * k);
    }
    assert!(smallest_eigenvalue(&op.l0) > 0.0);
    let tails = exterior_tails(&op, 0.2).unwrap();
    assert!(tails.iter().all(|t| *t > 0.0));
}

#[test]
fn square_harmonicity_defect_shrinks() {
    let p = FractionalParams::new(2, 1.0).unwrap();
    let beta = 0.3;
    let d: Vec<f64> = [0.125, 0.0625]
        .iter()
        .map(|&h| {
            let g = build_grid(Domain::square(1.0), h).unwrap();
            let op = assemble_operator(&g, p, 0.0, f64::INFINITY).unwrap();
            let probes = interior_probes(&g, 0.4, 0.4);
            harmonicity_defect(&op, beta, &probes).unwrap().max_abs
        })
        .collect();
    assert!(d[1] < d[0], "{d:?}");
}

#[test]
fn harmonic_sampling_rejected_in_two_dimensions() {
    let p = FractionalParams::new(2, 1.0).unwrap();
    let g = build_grid(Domain::square(1.0), 0.5).unwrap();
    assert!(matches!(
        assemble_operator_with(
            &g,
            p,
            0.1,
            f64::INFINITY,
            PotentialSampling::HarmonicConsistent
        ),
        Err(Error::Config(_))
    ));
}

#[test]
fn assembly_is_bit_reproducible() {
    let g = interval(300);
    let a = assemble_operator(&g, params(), 0.05, 10.0).unwrap();
    let b = assemble_operator(&g, params(), 0.05, 10.0).unwrap();
    assert_eq!(a.l0, b.l0);
    assert_eq!(a.potential, b.potential);
}
