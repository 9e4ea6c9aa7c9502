#![allow(dead_code)]

use slda_core::numerics::{Matrix, RngStream};
use slda_core::{Dataset, Distribution, PopulationSpec};

/// `B Bᵀ / p + ridge·I` with standard normal `B`.
pub fn random_spd(p: usize, ridge: f64, s: &mut RngStream) -> Matrix<f64> {
    let b: Vec<f64> = (0..p * p).map(|_| s.standard_normal()).collect();
    let mut a = Matrix::zeros(p, p);
    for i in 0..p {
        for j in 0..=i {
            let v: f64 = (0..p).map(|k| b[i * p + k] * b[j * p + k]).sum::<f64>() / p as f64;
            let v = if i == j { v + ridge } else { v };
            a.row_mut(i)[j] = v;
            a.row_mut(j)[i] = v;
        }
    }
    a
}

pub fn random_vec(p: usize, scale: f64, s: &mut RngStream) -> Vec<f64> {
    (0..p).map(|_| scale * s.standard_normal()).collect()
}

pub fn random_population(p: usize, s: &mut RngStream) -> PopulationSpec<f64> {
    let sigma = random_spd(p, 0.5, s);
    let mu1 = random_vec(p, 0.5, s);
    let mu2 = random_vec(p, 0.5, s);
    PopulationSpec::from_dense(vec![mu1, mu2], &sigma, Distribution::Normal).unwrap()
}

/// Independent standard normal features, class 1 shifted by `shift` in every coordinate.
pub fn gaussian_dataset(n1: usize, n2: usize, p: usize, shift: f64, s: &mut RngStream) -> Dataset<f64> {
    let mut data = Vec::with_capacity((n1 + n2) * p);
    let mut labels = Vec::new();
    for (k, nk) in [(1usize, n1), (2, n2)] {
        for _ in 0..nk {
            for _ in 0..p {
                let z = s.standard_normal();
                data.push(if k == 1 { z + shift } else { z });
            }
            labels.push(k);
        }
    }
    Dataset::new(Matrix::from_vec(n1 + n2, p, data).unwrap(), labels).unwrap()
}

pub fn probes(count: usize, p: usize, scale: f64, s: &mut RngStream) -> Vec<Vec<f64>> {
    (0..count).map(|_| random_vec(p, scale, s)).collect()
}
