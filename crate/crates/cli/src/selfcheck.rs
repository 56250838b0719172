//! Quick run of the oracle comparisons, for checking a build on a new machine.

use fmlp_core::fmodel::{equivalence_weights, param_count_for};
use fmlp_core::oracle::{cox_de_boor, dense_forward, fd_gradient, quadrature_integral};
use fmlp_core::train::{empirical_error, gradient};
use fmlp_core::{
    BSplineBasis, FunctionalMlp, Interval, LabeledDataset, Measure, Model, Perceptron, ProjectionMlp, SampledFunction,
    Variant,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    /// Worst observed deviation and its threshold.
    pub detail: String,
}

fn check(name: &'static str, worst: f64, limit: f64) -> Check {
    Check {
        name,
        passed: worst < limit,
        detail: format!("worst {worst:.3e} (limit {limit:.0e})"),
    }
}

fn random_net(inputs: usize, hidden: usize, outputs: usize, rng: &mut ChaCha8Rng) -> Perceptron<f64> {
    let n = param_count_for(inputs, hidden, outputs).expect("positive sizes");
    let params = (0..n).map(|_| rng.random_range(-1.5..1.5)).collect();
    Perceptron::from_params(inputs, hidden, outputs, params).expect("matching length")
}

fn smooth(x: f64) -> f64 {
    (0.4 * x).sin() + 0.02 * x * x - 0.5
}

fn basis_values(rng: &mut ChaCha8Rng) -> f64 {
    let mut worst: f64 = 0.0;
    for (size, order) in [(5, 4), (12, 4), (7, 2), (9, 6)] {
        let b = BSplineBasis::new(size, order, Interval::new(1.0, 21.0).unwrap()).unwrap();
        for _ in 0..200 {
            let x = rng.random_range(1.0..=21.0);
            let vals = b.eval(x).unwrap();
            worst = worst.max((vals.iter().sum::<f64>() - 1.0).abs());
            for (i, v) in vals.iter().enumerate() {
                worst = worst.max((v - cox_de_boor(b.knots(), i, order, x)).abs());
            }
        }
    }
    worst
}

fn gram_rows() -> f64 {
    let mut worst: f64 = 0.0;
    for size in [5, 10, 20] {
        let b = BSplineBasis::cubic(size, Interval::new(1.0, 21.0).unwrap()).unwrap();
        let mu = Measure::uniform(b.domain());
        let g = b.gram_matrix(&mu).unwrap();
        for i in 0..size {
            let row: f64 = (0..size).map(|j| g[(i, j)]).sum();
            let q = quadrature_integral(|x| cox_de_boor(b.knots(), i, 4, x), &mu, 20_001).unwrap();
            worst = worst.max((row - q).abs());
        }
    }
    worst
}

fn gradients(rng: &mut ChaCha8Rng) -> f64 {
    let domain = Interval::new(0.0, 4.0).unwrap();
    let grid = domain.uniform_grid(20);
    let mut worst: f64 = 0.0;
    for variant in [Variant::Naive, Variant::Functional, Variant::Projection] {
        for _ in 0..5 {
            let fs = (0..8)
                .map(|_| {
                    let (a, b): (f64, f64) = (rng.random_range(-2.0..2.0), rng.random_range(0.5..3.0));
                    SampledFunction::from_fn(domain, grid.clone(), |x| a * (b * x).sin()).unwrap()
                })
                .collect();
            let labels = (0..8).map(|_| rng.random_range(0..3)).collect();
            let ds = LabeledDataset::classification(domain, fs, labels, 3).unwrap();
            let basis = variant.uses_basis().then(|| BSplineBasis::cubic(6, domain).unwrap());
            let inputs = basis.as_ref().map_or(20, BSplineBasis::size);
            let model = Model::assemble(variant, basis, random_net(inputs, 3, 3, rng)).unwrap();
            let lambda = 0.01;
            let analytic = gradient(&model, &ds, lambda).unwrap();
            let numeric = fd_gradient(
                |p| {
                    let mut m = model.clone();
                    m.net_mut().params_mut().copy_from_slice(p);
                    empirical_error(&m, &ds, lambda).unwrap().total
                },
                model.net().params(),
                1e-5,
            )
            .unwrap();
            for (a, f) in analytic.iter().zip(&numeric) {
                worst = worst.max((a - f).abs() / a.abs().max(f.abs()).max(1e-6));
            }
        }
    }
    worst
}

fn dense_forward_agreement(rng: &mut ChaCha8Rng) -> f64 {
    let domain = Interval::new(1.0, 21.0).unwrap();
    let basis = BSplineBasis::cubic(7, domain).unwrap();
    let model = FunctionalMlp::new(basis, random_net(7, 3, 3, rng)).unwrap();
    let f = SampledFunction::from_fn(domain, domain.uniform_grid(10_000), smooth).unwrap();
    let fast = model.forward(&f).unwrap();
    let slow = dense_forward(&model, smooth, 4001).unwrap();
    fast.iter()
        .zip(&slow)
        .map(|(a, b)| (a - b).abs() / b.abs().max(1.0))
        .fold(0.0, f64::max)
}

fn equivalence(rng: &mut ChaCha8Rng) -> f64 {
    let domain = Interval::new(1.0, 21.0).unwrap();
    let basis = BSplineBasis::cubic(10, domain).unwrap();
    let proj = ProjectionMlp::new(basis.clone(), random_net(10, 3, 3, rng)).unwrap();
    let mut net = proj.net().clone();
    for unit in 0..3 {
        let d = equivalence_weights(&basis, proj.net().hidden_weights(unit), &Measure::uniform(domain)).unwrap();
        net.hidden_weights_mut(unit).copy_from_slice(&d);
    }
    let func = FunctionalMlp::new(basis, net).unwrap();
    let f = SampledFunction::from_fn(domain, domain.uniform_grid(1001), smooth).unwrap();
    let a = proj.forward(&f).unwrap();
    let b = func.forward(&f).unwrap();
    a.iter()
        .zip(&b)
        .map(|(u, v)| (u - v).abs() / u.abs().max(1.0))
        .fold(0.0, f64::max)
}

pub fn run_selfcheck() -> Vec<Check> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5e1f);
    vec![
        check("basis values vs Cox-de Boor recursion", basis_values(&mut rng), 1e-12),
        check("Gram row sums vs Simpson", gram_rows(), 1e-10),
        check("analytic gradient vs central differences", gradients(&mut rng), 1e-4),
        check(
            "functional forward vs quadrature forward",
            dense_forward_agreement(&mut rng),
            1e-3,
        ),
        check("projection / functional equivalence", equivalence(&mut rng), 1e-2),
    ]
}
