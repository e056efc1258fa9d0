use super::{check_rows, EmbedError, EmbedMethod, EmbeddingLayout, SourceSpace};
use crate::rng::SplitMix64;
use crate::Scalar;

pub const PCA_MAX_ITERATIONS: usize = 1000;
pub const PCA_TOLERANCE: f64 = 1e-10;

/// Projects mean-centred rows onto the two leading covariance eigenvectors,
/// found by power iteration with deflation. Each eigenvector is signed so its
/// largest-magnitude component is positive.
pub fn pca2<T: Scalar, R: AsRef<[T]>>(
    x: &[R],
    space: SourceSpace,
) -> Result<EmbeddingLayout<T>, EmbedError> {
    let d = check_rows(x, 2)?;
    if d < 2 {
        return Err(EmbedError::DimTooSmall(d));
    }
    let n = T::of(x.len() as f64);
    let mut mean = vec![T::zero(); d];
    for r in x {
        for (m, &v) in mean.iter_mut().zip(r.as_ref()) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n);
    let centred: Vec<Vec<T>> = x
        .iter()
        .map(|r| r.as_ref().iter().zip(&mean).map(|(&v, &m)| v - m).collect())
        .collect();

    let mut rng = SplitMix64::new(0x9ca2);
    let mut found: Vec<(T, Vec<T>)> = Vec::with_capacity(2);
    for _ in 0..2 {
        let mut v: Vec<T> = (0..d).map(|_| T::of(rng.gaussian())).collect();
        orthogonalize(&mut v, &found);
        normalize(&mut v);
        for _ in 0..PCA_MAX_ITERATIONS {
            let mut w = deflated_product(&centred, &found, &v);
            orthogonalize(&mut w, &found);
            if norm(&w) == T::zero() {
                break;
            }
            normalize(&mut w);
            let delta = w
                .iter()
                .zip(&v)
                .map(|(&a, &b)| (a - b) * (a - b))
                .sum::<T>()
                .sqrt();
            v = w;
            if delta.as_f64() < PCA_TOLERANCE {
                break;
            }
        }
        let cv = deflated_product(&centred, &[], &v);
        let lambda = dot(&cv, &v);
        found.push((lambda, v));
    }
    for (_, v) in &mut found {
        let lead = v.iter().enumerate().fold(
            0,
            |best, (i, c)| if c.abs() > v[best].abs() { i } else { best },
        );
        if v[lead] < T::zero() {
            v.iter_mut().for_each(|c| *c = -*c);
        }
    }
    let coords = centred
        .iter()
        .map(|r| [dot(r, &found[0].1), dot(r, &found[1].1)])
        .collect();
    Ok(EmbeddingLayout::new(coords, EmbedMethod::Pca, None, space))
}

/// (C − Σ λ v vᵀ) v with C = XᵀX / N, without forming C.
fn deflated_product<T: Scalar>(centred: &[Vec<T>], found: &[(T, Vec<T>)], v: &[T]) -> Vec<T> {
    let mut out = vec![T::zero(); v.len()];
    for r in centred {
        let s = dot(r, v);
        for (o, &c) in out.iter_mut().zip(r) {
            *o += s * c;
        }
    }
    let n = T::of(centred.len() as f64);
    out.iter_mut().for_each(|o| *o /= n);
    for (lambda, e) in found {
        let s = *lambda * dot(e, v);
        for (o, &c) in out.iter_mut().zip(e) {
            *o -= s * c;
        }
    }
    out
}

fn orthogonalize<T: Scalar>(v: &mut [T], found: &[(T, Vec<T>)]) {
    for (_, e) in found {
        let s = dot(v, e);
        for (a, &b) in v.iter_mut().zip(e) {
            *a -= s * b;
        }
    }
}

fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

fn norm<T: Scalar>(v: &[T]) -> T {
    dot(v, v).sqrt()
}

fn normalize<T: Scalar>(v: &mut [T]) {
    let n = norm(v);
    if n > T::zero() {
        v.iter_mut().for_each(|c| *c /= n);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_points_project_to_origin() {
        let x = vec![vec![0.3, 0.7, 0.1]; 5];
        let l = pca2(&x, SourceSpace::Genotype).unwrap();
        assert!(l.coords.iter().all(|c| c[0] == 0.0 && c[1] == 0.0));
    }

    #[test]
    fn plane_in_twelve_dims_is_recovered() {
        let mut rng = SplitMix64::new(8);
        let a: Vec<f64> = (0..12).map(|_| rng.gaussian()).collect();
        let b: Vec<f64> = (0..12).map(|_| rng.gaussian()).collect();
        let x: Vec<Vec<f64>> = (0..40)
            .map(|_| {
                let (s, t) = (rng.uniform(-3.0, 3.0), rng.uniform(-1.0, 1.0));
                (0..12).map(|k| 0.5 + s * a[k] + t * b[k]).collect()
            })
            .collect();
        let l = pca2(&x, SourceSpace::Genotype).unwrap();
        let mean: Vec<f64> = (0..12)
            .map(|k| x.iter().map(|r| r[k]).sum::<f64>() / 40.0)
            .collect();
        let total: f64 = x
            .iter()
            .map(|r| {
                r.iter()
                    .zip(&mean)
                    .map(|(v, m)| (v - m).powi(2))
                    .sum::<f64>()
            })
            .sum();
        let kept: f64 = l.coords.iter().map(|c| c[0] * c[0] + c[1] * c[1]).sum();
        assert!(kept / total >= 0.9999, "{}", kept / total);
    }

    #[test]
    fn errors() {
        assert!(matches!(
            pca2(&[vec![1.0], vec![2.0]], SourceSpace::Feature),
            Err(EmbedError::DimTooSmall(1))
        ));
        assert!(matches!(
            pca2(&[vec![1.0, 2.0]], SourceSpace::Feature),
            Err(EmbedError::TooFewPoints { .. })
        ));
    }
}
