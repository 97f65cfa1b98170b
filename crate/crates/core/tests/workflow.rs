//! End-to-end use of the public API: simulate, store, reload, fit, filter.

use fgarch::basis::{make_basis, project, project_kernel, BasisKind, FpcaDecomposition};
use fgarch::estimation::{fit, objective, project_sample, volatility_filter, FitOptions, SandwichForm, Theta};
use fgarch::function_space::{l2_norm, Grid};
use fgarch::ingest::{read_curves, write_curves};
use fgarch::model::{simulate, FGarchSpec, InnovationGen};
use nalgebra::{DMatrix, DVector};

#[test]
fn simulate_store_fit_filter() {
    let grid = Grid::new(60).unwrap();
    let spec = FGarchSpec::paper_preset(grid);
    let sim = simulate(&spec, &InnovationGen::ou_bridge(200.0, 17), 600, 500).unwrap();

    let mut buf = Vec::new();
    write_curves(&sim.y, &mut buf).unwrap();
    let (days, reloaded) = read_curves(buf.as_slice()).unwrap();
    assert_eq!(days.len(), 600);
    assert_eq!(reloaded, sim.y, "curves survive a CSV round trip bit for bit");

    let basis = make_basis(BasisKind::Bridge, 1, grid).unwrap();
    let series = project_sample(&reloaded, &basis).unwrap();
    let truth = Theta::new(
        DVector::from_vec(project(spec.delta(), &basis).unwrap()),
        project_kernel(spec.alpha(), &basis).unwrap(),
        project_kernel(spec.beta(), &basis).unwrap(),
    )
    .unwrap();

    let opts = FitOptions { seed: 5, covariance: Some(SandwichForm::Robust), ..FitOptions::default() };
    let res = fit(&series, &opts).unwrap();
    assert!(res.converged);
    assert!(res.objective_value <= objective(&truth, &series).unwrap() + 1e-12);
    // loose bands: the sampling sd of a, b at n = 600 is about 0.05
    assert!((res.theta_hat.d[0] - truth.d[0]).abs() < 0.01, "{:?}", res.theta_hat);
    assert!((res.theta_hat.a[(0, 0)] - truth.a[(0, 0)]).abs() < 0.2);
    assert!((res.theta_hat.b[(0, 0)] - truth.b[(0, 0)]).abs() < 0.3);

    let se = res.std_errors().unwrap();
    assert!(se.iter().all(|s| s.is_finite() && *s > 0.0));

    let filt = volatility_filter(&res.theta_hat, &series, &basis).unwrap();
    assert_eq!(filt.curves.len(), 600);
    // after the zero start the filtered volatility tracks the simulated one
    let rel: f64 = filt.curves[50..]
        .iter()
        .zip(&sim.sigma2[50..])
        .map(|(f, s)| l2_norm(&f.sub(s).unwrap()) / l2_norm(s))
        .sum::<f64>()
        / 550.0;
    assert!(rel < 0.5, "mean relative error {rel}");
}

#[test]
fn fpca_fit_with_two_components() {
    let grid = Grid::new(40).unwrap();
    let spec = FGarchSpec::paper_preset(grid);
    let sim = simulate(&spec, &InnovationGen::ou_bridge(200.0, 3), 400, 300).unwrap();
    let squares: Vec<_> = sim.y.iter().map(|c| c.squared()).collect();
    let dec = FpcaDecomposition::new(&squares).unwrap();
    let basis = dec.basis(2).unwrap();
    let series = project_sample(&sim.y, &basis).unwrap();
    let res = fit(&series, &FitOptions { seed: 1, ..FitOptions::default() }).unwrap();
    assert!(res.converged);
    assert_eq!(res.theta_hat.dim(), 2);
    assert!(opts_bounds_hold(&res.theta_hat));
    let f = res.functions.as_ref().unwrap();
    assert_eq!(f.alpha_hat.grid().len(), 40);
}

fn opts_bounds_hold(theta: &Theta) -> bool {
    let bounds = FitOptions::default().bounds;
    let b: &DMatrix<f64> = &theta.b;
    bounds.contains(theta) && b.norm() <= bounds.c2 + 1e-12
}
