use fracheat_core::estimators::{bump, weak_form_residual, TimeProfile};
use fracheat_core::evolution::*;
use fracheat_core::linalg::Spectral;
use fracheat_core::*;

fn params() -> FractionalParams {
    FractionalParams::new(1, 0.5).unwrap()
}

fn op(n: usize, frac: f64) -> DiscreteOperator {
    let g = build_grid(Domain::interval(-1.0, 1.0), 2.0 / n as f64).unwrap();
    let cs = hardy_constant(params()).unwrap();
    assemble_operator(&g, params(), frac * cs, f64::INFINITY).unwrap()
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .fold(0.0, |m, (x, y)| f64::max(m, (x - y).abs()))
}

fn max_abs(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, x| f64::max(m, x.abs()))
}

#[test]
fn time_zero_returns_initial_state() {
    let o = op(40, 0.5);
    let u0: Vec<f64> = (0..o.len()).map(|i| 1.0 + i as f64 / 10.0).collect();
    let tr = evolve(&o.hamiltonian(), &u0, &[0.0, 0.1], EvolveOptions::default()).unwrap();
    assert_eq!(tr.state_at(0.0).unwrap(), u0.as_slice());
}

#[test]
fn semigroup_property() {
    let o = op(60, 0.5);
    let u0 = vec![1.0; o.len()];
    let h = o.hamiltonian();
    let direct = evolve(&h, &u0, &[0.7], EvolveOptions::default()).unwrap();
    let half = evolve(&h, &u0, &[0.3], EvolveOptions::default()).unwrap();
    let rest = evolve(&h, &half.states[0], &[0.4], EvolveOptions::default()).unwrap();
    assert!(max_diff(&direct.states[0], &rest.states[0]) <= 1e-12 * max_abs(&direct.states[0]));
}

#[test]
fn eigenvector_decays_exponentially() {
    let o = op(50, 0.3);
    let spec = Spectral::new(&o.hamiltonian());
    let v: Vec<f64> = spec.vectors.column(0).iter().map(|x| x.abs()).collect();
    let t = 0.8;
    let tr = evolve(&o.hamiltonian(), &v, &[t], EvolveOptions::default()).unwrap();
    let expected: Vec<f64> = v.iter().map(|x| x * (-spec.values[0] * t).exp()).collect();
    assert!(max_diff(&tr.states[0], &expected) <= 1e-10);
}

#[test]
fn chapman_kolmogorov() {
    let o = op(40, 0.8);
    let ks = heat_kernels(&o, &[0.2, 0.3, 0.5]).unwrap();
    let composed = &ks[0].entries * &ks[1].entries * ks[0].cell_volume;
    let err = (&composed - &ks[2].entries).amax() / ks[2].entries.amax();
    assert!(err <= 1e-10, "{err}");
}

#[test]
fn unperturbed_kernel_is_sub_markov() {
    let o = op(80, 0.0);
    for t in [0.01, 0.1, 1.0] {
        let k = heat_kernel(&o, t).unwrap();
        assert!(k.row_mass().iter().all(|m| *m <= 1.0 + 1e-10 && *m > 0.0));
    }
}

#[test]
fn schemes_agree_with_exponential() {
    let o = op(80, 0.5);
    let u0 = vec![1.0; o.len()];
    let times = [0.0, 0.1, 0.25, 0.5];
    let h = o.hamiltonian();
    let exact = evolve(&h, &u0, &times, EvolveOptions::default()).unwrap();
    let cn = evolve(
        &h,
        &u0,
        &times,
        EvolveOptions {
            scheme: Scheme::CrankNicolson,
            min_steps: 400,
            richardson: true,
        },
    )
    .unwrap();
    let ie = evolve(
        &h,
        &u0,
        &times,
        EvolveOptions::with_scheme(Scheme::ImplicitEuler),
    )
    .unwrap();
    for j in 1..times.len() {
        let s = max_abs(&exact.states[j]);
        assert!(max_diff(&exact.states[j], &cn.states[j]) <= 1e-5 * s);
        assert!(max_diff(&exact.states[j], &ie.states[j]) <= 2e-2 * s);
    }
}

#[test]
fn positive_data_stay_positive() {
    let o = op(80, 1.0);
    let u0 = vec![1.0; o.len()];
    let tr = evolve(
        &o.hamiltonian(),
        &u0,
        &[0.05, 0.5, 1.0],
        EvolveOptions::default(),
    )
    .unwrap();
    assert!(tr.states.iter().flatten().all(|v| *v > 0.0));
}

#[test]
fn larger_domain_dominates() {
    let cs = hardy_constant(params()).unwrap();
    let small = build_grid(Domain::interval(-0.5, 0.5), 0.025).unwrap();
    let large = build_grid(Domain::interval(-1.0, 1.0), 0.025).unwrap();
    let ks = heat_kernel(
        &assemble_operator(&small, params(), 0.5 * cs, f64::INFINITY).unwrap(),
        0.2,
    )
    .unwrap();
    let kl = heat_kernel(
        &assemble_operator(&large, params(), 0.5 * cs, f64::INFINITY).unwrap(),
        0.2,
    )
    .unwrap();
    let offset = 20;
    for i in 0..small.len() {
        for j in 0..small.len() {
            assert!(kl.entries[(i + offset, j + offset)] >= ks.entries[(i, j)] * (1.0 - 1e-10));
        }
    }
}

#[test]
fn duhamel_residual_vanishes_without_potential() {
    let o = op(60, 0.0);
    let u0 = vec![1.0; o.len()];
    let tr = evolve(&o.hamiltonian(), &u0, &[0.3], EvolveOptions::default()).unwrap();
    let r = duhamel_residual(&o, f64::INFINITY, &u0, 0.3, &tr.states[0], 9).unwrap();
    assert!(r <= 1e-12, "{r}");
}

#[test]
fn duhamel_residual_has_simpson_order() {
    let o = op(80, 0.5);
    let k = 50.0;
    let u0 = vec![1.0; o.len()];
    let tr = evolve(&o.hamiltonian_at(k), &u0, &[0.4], EvolveOptions::default()).unwrap();
    let r1 = duhamel_residual(&o, k, &u0, 0.4, &tr.states[0], 9).unwrap();
    let r2 = duhamel_residual(&o, k, &u0, 0.4, &tr.states[0], 17).unwrap();
    assert!(r1 / r2 > 10.0, "{r1} {r2}");
    assert!(duhamel_residual(&o, k, &u0, 0.4, &tr.states[0], 8).is_err());
}

#[test]
fn kernel_ladder_matches_direct_kernels() {
    let o = op(40, 0.5);
    let ladder = kernel_ladder(&o, 0.05, 4).unwrap();
    let direct = heat_kernel(&o, 0.4).unwrap();
    assert!((&ladder[3].entries - &direct.entries).amax() <= 1e-10 * direct.entries.amax());
    assert!(heat_kernel(&o, 0.0).is_err());
    assert!(heat_kernels(&o, &[0.1, -1.0]).is_err());
}

#[test]
fn truncated_solutions_increase_with_k() {
    let o = op(80, 0.5);
    let cs = hardy_constant(params()).unwrap();
    let u0 = vec![1.0; o.len()];
    let ks = k_schedule(&o.potential, None, 4.0).unwrap();
    let sol = minimal_solution(&o, &u0, &[0.1, 0.5], &ks, cs, EvolveOptions::default()).unwrap();
    assert!(sol.certificate.holds && sol.converged && !sol.supercritical);
    assert!(minimal_solution(&o, &u0, &[0.1], &[2.0, 1.0], cs, EvolveOptions::default()).is_err());
}

#[test]
fn schedule_shape() {
    let ks = k_schedule(&[1.0, 2.0, 50.0], None, 4.0).unwrap();
    assert_eq!(ks, vec![1.0, 4.0, 16.0, 50.0, 200.0]);
    assert!(k_schedule(&[0.0], None, 4.0).is_err());
    assert!(k_schedule(&[1.0], None, 1.0).is_err());
}

#[test]
fn unknown_scheme_is_config_error() {
    assert!(matches!("rk4".parse::<Scheme>(), Err(Error::Config(_))));
    assert_eq!("cn".parse::<Scheme>().unwrap(), Scheme::CrankNicolson);
}

fn stationary_setup(steps: usize) -> f64 {
    let o = op(80, 0.5);
    let k = f64::INFINITY;
    let times: Vec<f64> = (0..=steps).map(|j| 0.5 * j as f64 / steps as f64).collect();
    let u0 = vec![1.0; o.len()];
    let tr = evolve(&o.hamiltonian(), &u0, &times, EvolveOptions::default()).unwrap();
    let psi = bump(&o.grid, [0.4, 0.0], 0.3);
    weak_form_residual(&o, k, &times, &tr.states, &psi, TimeProfile::SineSquared)
        .unwrap()
        .relative
}

#[test]
fn weak_residual_small_and_converging() {
    let r1 = stationary_setup(40);
    let r2 = stationary_setup(80);
    assert!(r1 <= 1e-3, "{r1}");
    assert!(r2 <= 0.5 * r1, "{r1} {r2}");
}

#[test]
fn weak_residual_of_zero_test_function() {
    let o = op(40, 0.5);
    let times = [0.0, 0.1, 0.2];
    let states = vec![vec![1.0; o.len()]; 3];
    let r = weak_form_residual(
        &o,
        10.0,
        &times,
        &states,
        &vec![0.0; o.len()],
        TimeProfile::Constant,
    )
    .unwrap();
    assert_eq!(r.residual, 0.0);
    let psi = bump(&o.grid, [0.9, 0.0], 0.2);
    assert!(matches!(
        weak_form_residual(&o, 10.0, &times, &states, &psi, TimeProfile::Constant),
        Err(Error::Config(_))
    ));
}

#[test]
fn weak_residual_detects_wrong_dynamics() {
    // a stationary vector is not a solution of the heat equation
    let o = op(80, 0.5);
    let times: Vec<f64> = (0..=40).map(|j| 0.5 * j as f64 / 40.0).collect();
    let states = vec![vec![1.0; o.len()]; times.len()];
    let psi = bump(&o.grid, [0.4, 0.0], 0.3);
    let r = weak_form_residual(
        &o,
        f64::INFINITY,
        &times,
        &states,
        &psi,
        TimeProfile::SineSquared,
    )
    .unwrap();
    assert!(r.relative > 0.1);
}
