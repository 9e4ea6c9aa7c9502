use crate::error::{Error, Result};
use crate::numerics::cholesky::SpdFactor;
use crate::numerics::rng::RngStream;
use crate::scalar::Real;

fn standard_normals<T: Real>(p: usize, stream: &mut RngStream) -> Vec<T> {
    (0..p).map(|_| T::of(stream.standard_normal())).collect()
}

fn check_dims<T: Real>(mean: &[T], factor: &SpdFactor<T>) -> Result<()> {
    if mean.len() != factor.dim() {
        return Err(Error::Shape {
            expected: factor.dim(),
            got: mean.len(),
        });
    }
    Ok(())
}

/// One draw from `N(mean, L Lᵀ)`: `mean + L z`.
pub fn sample_mvn<T: Real>(mean: &[T], factor: &SpdFactor<T>, stream: &mut RngStream) -> Result<Vec<T>> {
    check_dims(mean, factor)?;
    let z = standard_normals(mean.len(), stream);
    let lz = factor.mul_lower(&z)?;
    Ok(mean.iter().zip(lz).map(|(&m, x)| m + x).collect())
}

/// One draw from the multivariate t with scale `L Lᵀ` and `df` degrees of
/// freedom: `mean + L z · sqrt(df / w)`, `w ~ χ²(df)` drawn after `z`.
pub fn sample_mvt<T: Real>(
    mean: &[T],
    factor: &SpdFactor<T>,
    df: u32,
    stream: &mut RngStream,
) -> Result<Vec<T>> {
    if df == 0 {
        return Err(Error::domain("t degrees of freedom must be positive"));
    }
    check_dims(mean, factor)?;
    let z = standard_normals(mean.len(), stream);
    let w = stream.chi_square(df as f64);
    let s = T::of((df as f64 / w).sqrt());
    let lz = factor.mul_lower(&z)?;
    Ok(mean.iter().zip(lz).map(|(&m, x)| m + x * s).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::cholesky::cholesky_spd;
    use crate::numerics::matrix::Matrix;

    fn moments(draws: &[Vec<f64>], j: usize) -> (f64, f64) {
        let n = draws.len() as f64;
        let mean = draws.iter().map(|d| d[j]).sum::<f64>() / n;
        let var = draws.iter().map(|d| (d[j] - mean).powi(2)).sum::<f64>() / (n - 1.0);
        (mean, var)
    }

    #[test]
    fn deterministic_given_stream_state() {
        let f = cholesky_spd(&Matrix::<f64>::identity(2)).unwrap();
        let s = RngStream::new(7);
        let a = sample_mvn(&[5.0, 5.0], &f, &mut s.clone()).unwrap();
        let b = sample_mvn(&[5.0, 5.0], &f, &mut s.clone()).unwrap();
        assert_eq!(a, b);
        let a = sample_mvt(&[5.0, 5.0], &f, 3, &mut s.clone()).unwrap();
        let b = sample_mvt(&[5.0, 5.0], &f, 3, &mut s.clone()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn normal_moments() {
        let f = cholesky_spd(&Matrix::<f64>::identity(2)).unwrap();
        let mut s = RngStream::new(1);
        let draws: Vec<_> = (0..100_000).map(|_| sample_mvn(&[1.0, 2.0], &f, &mut s).unwrap()).collect();
        assert!((moments(&draws, 0).0 - 1.0).abs() < 0.02);
        assert!((moments(&draws, 1).0 - 2.0).abs() < 0.02);

        let f = cholesky_spd(&Matrix::from_diagonal(&[4.0, 1.0])).unwrap();
        let draws: Vec<_> = (0..100_000).map(|_| sample_mvn(&[0.0, 0.0], &f, &mut s).unwrap()).collect();
        assert!((moments(&draws, 0).1 / 4.0 - 1.0).abs() < 0.05);
    }

    #[test]
    fn t_moments() {
        let f = cholesky_spd(&Matrix::<f64>::identity(2)).unwrap();
        let mut s = RngStream::new(2);
        let big: Vec<_> = (0..100_000).map(|_| sample_mvt(&[0.0, 0.0], &f, 1_000_000, &mut s).unwrap()).collect();
        let nrm: Vec<_> = (0..100_000).map(|_| sample_mvn(&[0.0, 0.0], &f, &mut s).unwrap()).collect();
        assert!((moments(&big, 0).1 / moments(&nrm, 0).1 - 1.0).abs() < 0.02);

        // var of t(3) is df/(df-2) = 3; the fourth moment is infinite, so the
        // sample variance converges slowly: allow a wide band.
        let t3: Vec<_> = (0..100_000).map(|_| sample_mvt(&[0.0, 0.0], &f, 3, &mut s).unwrap()).collect();
        let v = moments(&t3, 0).1;
        assert!((v - 3.0).abs() < 0.6, "t(3) variance {v}");
    }

    #[test]
    fn errors() {
        let f = cholesky_spd(&Matrix::<f64>::identity(2)).unwrap();
        let mut s = RngStream::new(0);
        assert!(matches!(sample_mvn(&[0.0], &f, &mut s), Err(Error::Shape { .. })));
        assert!(matches!(sample_mvt(&[0.0, 0.0], &f, 0, &mut s), Err(Error::Domain(_))));
    }
}
