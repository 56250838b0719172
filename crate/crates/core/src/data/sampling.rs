use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Uniform};

use super::LabeledDataset;
use crate::bspline::Measure;
use crate::error::{Error, Result};
use crate::sample::SampledFunction;
use crate::scalar::Real;

/// Observe `g` at `m` i.i.d. points drawn from the uniform measure `mu`, with
/// additive Gaussian noise of standard deviation `noise_sd`.
pub fn sample_under_he<T: Real>(
    g: impl Fn(T) -> T,
    m: usize,
    noise_sd: f64,
    seed: u64,
    mu: &Measure<T>,
) -> Result<SampledFunction<T>> {
    if m == 0 {
        return Err(Error::Config("need at least one observation".into()));
    }
    let support = mu.support();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let unif =
        Uniform::new_inclusive(support.lo.as_f64(), support.hi.as_f64()).map_err(|e| Error::Config(e.to_string()))?;
    let noise = Normal::new(0.0, noise_sd).map_err(|e| Error::Config(e.to_string()))?;
    let mut points = Vec::with_capacity(m);
    let mut values = Vec::with_capacity(m);
    for _ in 0..m {
        let x = T::lit(unif.sample(&mut rng)).max(support.lo).min(support.hi);
        points.push(x);
        values.push(g(x) + T::lit(noise.sample(&mut rng)));
    }
    SampledFunction::new(support, points, values)
}

/// Seeded random partition into `n_train` training and `n - n_train` test
/// examples. With `stratified`, each class is split in proportion.
pub fn split_train_test<T: Real>(
    ds: &LabeledDataset<T>,
    n_train: usize,
    seed: u64,
    stratified: bool,
) -> Result<(LabeledDataset<T>, LabeledDataset<T>)> {
    let (train, test) = split_indices(ds, n_train, seed, stratified)?;
    Ok((ds.subset(&train), ds.subset(&test)))
}

/// Index form of [`split_train_test`].
pub fn stratified_split<T: Real>(
    ds: &LabeledDataset<T>,
    n_train: usize,
    seed: u64,
) -> Result<(Vec<usize>, Vec<usize>)> {
    split_indices(ds, n_train, seed, true)
}

fn split_indices<T: Real>(
    ds: &LabeledDataset<T>,
    n_train: usize,
    seed: u64,
    stratified: bool,
) -> Result<(Vec<usize>, Vec<usize>)> {
    let n = ds.len();
    if n_train >= n {
        return Err(Error::Config(format!(
            "training size {n_train} must be below the dataset size {n}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let labels = match (stratified, ds.labels()) {
        (true, Some(l)) => l,
        _ => {
            let mut idx: Vec<usize> = (0..n).collect();
            idx.shuffle(&mut rng);
            let test = idx.split_off(n_train);
            return Ok((idx, test));
        }
    };

    // Largest-remainder allocation of the training quota across classes.
    let classes = ds.outputs();
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); classes];
    for (i, &l) in labels.iter().enumerate() {
        by_class[l].push(i);
    }
    let exact: Vec<f64> = by_class
        .iter()
        .map(|c| c.len() as f64 * n_train as f64 / n as f64)
        .collect();
    let mut quota: Vec<usize> = exact.iter().map(|q| q.floor() as usize).collect();
    let mut order: Vec<usize> = (0..classes).collect();
    order.sort_by(|&a, &b| {
        let ra = exact[a] - exact[a].floor();
        let rb = exact[b] - exact[b].floor();
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    let mut missing = n_train - quota.iter().sum::<usize>();
    for &c in order.iter().cycle() {
        if missing == 0 {
            break;
        }
        if quota[c] < by_class[c].len() {
            quota[c] += 1;
            missing -= 1;
        }
    }

    let mut train = Vec::with_capacity(n_train);
    let mut test = Vec::with_capacity(n - n_train);
    for (members, q) in by_class.iter_mut().zip(quota) {
        members.shuffle(&mut rng);
        train.extend_from_slice(&members[..q]);
        test.extend_from_slice(&members[q..]);
    }
    train.shuffle(&mut rng);
    test.shuffle(&mut rng);
    Ok((train, test))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sample::Interval;

    fn labeled(n: usize, classes: usize) -> LabeledDataset<f64> {
        let d = Interval::new(0.0, 1.0).unwrap();
        let fs = (0..n)
            .map(|i| SampledFunction::on_uniform_grid(d, vec![i as f64; 2]).unwrap())
            .collect();
        let labels = (0..n).map(|i| (i * 7 + i / 3) % classes).collect();
        LabeledDataset::classification(d, fs, labels, classes).unwrap()
    }

    #[test]
    fn tecator_sized_split() {
        let ds = labeled(215, 2);
        let (train, test) = split_train_test(&ds, 160, 3, false).unwrap();
        assert_eq!((train.len(), test.len()), (160, 55));
        let (a, b) = split_indices(&ds, 160, 3, true).unwrap();
        let mut all: Vec<usize> = a.iter().chain(&b).copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..215).collect::<Vec<_>>());
    }

    #[test]
    fn stratified_split_keeps_ratios() {
        let ds = labeled(215, 2);
        let (train, _) = split_train_test(&ds, 160, 9, true).unwrap();
        let full = ds.class_counts();
        let got = train.class_counts();
        for (c, &k) in got.iter().enumerate() {
            let want = full[c] as f64 * 160.0 / 215.0;
            assert!((k as f64 - want).abs() <= 1.0);
        }
    }

    #[test]
    fn split_is_seed_deterministic() {
        let ds = labeled(50, 3);
        assert_eq!(
            split_indices(&ds, 30, 1, true).unwrap(),
            split_indices(&ds, 30, 1, true).unwrap()
        );
        assert!(split_train_test(&ds, 50, 1, true).is_err());
    }

    #[test]
    fn noiseless_constant_observations() {
        let mu = Measure::uniform(Interval::new(2.0, 5.0).unwrap());
        let f = sample_under_he(|_| 3.5, 200, 0.0, 4, &mu).unwrap();
        assert!(f.values().iter().all(|&v| v == 3.5));
        assert!(f.points().iter().all(|&x| (2.0..=5.0).contains(&x)));
    }
}
