use formscape_core::embed::*;
use formscape_core::rng::SplitMix64;
use formscape_core::synthetic::gaussian_clusters;
use nalgebra::{DMatrix, SymmetricEigen};

/// Projection onto the top two eigenvectors of a dense eigendecomposition,
/// with the same sign convention as `pca2`.
fn dense_pca(x: &[Vec<f64>]) -> Vec<[f64; 2]> {
    let (n, d) = (x.len(), x[0].len());
    let mean: Vec<f64> = (0..d)
        .map(|k| x.iter().map(|r| r[k]).sum::<f64>() / n as f64)
        .collect();
    let c = DMatrix::from_fn(n, d, |i, k| x[i][k] - mean[k]);
    let eig = SymmetricEigen::new(c.transpose() * &c / n as f64);
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].partial_cmp(&eig.eigenvalues[a]).unwrap());
    let axes: Vec<Vec<f64>> = order[..2]
        .iter()
        .map(|&k| {
            let v: Vec<f64> = eig.eigenvectors.column(k).iter().copied().collect();
            let lead = (0..d).fold(0, |b, i| if v[i].abs() > v[b].abs() { i } else { b });
            let s = v[lead].signum();
            v.iter().map(|c| c * s).collect()
        })
        .collect();
    (0..n)
        .map(|i| std::array::from_fn(|a| (0..d).map(|k| c[(i, k)] * axes[a][k]).sum()))
        .collect()
}

fn anisotropic(n: usize, scales: &[f64], seed: u64) -> Vec<Vec<f64>> {
    let mut rng = SplitMix64::new(seed);
    (0..n)
        .map(|_| scales.iter().map(|s| s * rng.gaussian() + 1.0).collect())
        .collect()
}

#[test]
fn pca_matches_dense_eigensolver() {
    for seed in 0..5 {
        let x = anisotropic(50, &[5.0, 3.0, 2.0, 1.0, 0.5], seed);
        let got = pca2(&x, SourceSpace::Feature).unwrap();
        let want = dense_pca(&x);
        for (g, w) in got.coords.iter().zip(&want) {
            assert!(
                (g[0] - w[0]).abs() < 1e-6 && (g[1] - w[1]).abs() < 1e-6,
                "seed {seed}: {g:?} vs {w:?}"
            );
        }
    }
}

#[test]
fn pca_in_single_precision() {
    let x: Vec<Vec<f32>> = anisotropic(30, &[4.0, 1.0, 0.2], 9)
        .into_iter()
        .map(|r| r.into_iter().map(|v| v as f32).collect())
        .collect();
    let l = pca2(&x, SourceSpace::Genotype).unwrap();
    assert!(l.coords.iter().flatten().all(|v| v.is_finite()));
}

fn random_fixture(seed: u64, n: usize, d: usize) -> Vec<Vec<f64>> {
    let mut rng = SplitMix64::new(seed);
    (0..n)
        .map(|_| (0..d).map(|_| rng.gaussian()).collect())
        .collect()
}

#[test]
fn affinities_are_calibrated_and_symmetric() {
    for seed in 0..5 {
        let x = random_fixture(seed, 80, 6);
        for perplexity in [5.0, 20.0] {
            let cond: Vec<Vec<f64>> = calibrate_affinities(&x, perplexity).unwrap();
            for p in conditional_perplexities(&cond) {
                assert!((p - perplexity).abs() < 1e-3, "{p} vs {perplexity}");
            }
            let joint = joint_affinities(&cond);
            let total: f64 = joint.iter().flatten().sum();
            assert!((total - 1.0).abs() < 1e-9);
            for (i, row) in joint.iter().enumerate() {
                for (j, &p) in row.iter().enumerate() {
                    assert!(p >= 0.0);
                    assert_eq!(p, joint[j][i]);
                }
            }
        }
    }
}

#[test]
fn tsne_is_deterministic() {
    let x = random_fixture(3, 40, 5);
    let a = tsne(&x, 5.0, 300, 11, SourceSpace::Genotype).unwrap();
    let b = tsne(&x, 5.0, 300, 11, SourceSpace::Genotype).unwrap();
    assert_eq!(a, b);
    assert_ne!(a, tsne(&x, 5.0, 300, 12, SourceSpace::Genotype).unwrap());
}

#[test]
fn kl_settles_in_the_final_iterations() {
    let settled = (0..20u64)
        .filter(|&seed| {
            let x = random_fixture(100 + seed, 60, 8);
            let run = tsne_with(
                &x,
                &TsneParams::new(10.0, 1000, seed),
                SourceSpace::Genotype,
            )
            .unwrap();
            run.kl[run.kl.len() - 100..]
                .windows(2)
                .all(|w| w[1] <= w[0])
        })
        .count();
    assert!(settled >= 19, "{settled}/20");
}

/// Share of points whose nearest layout centroid is their own cluster's.
fn centroid_agreement(coords: &[[f64; 2]], labels: &[usize], k: usize) -> f64 {
    let mut centroids = vec![[0.0; 2]; k];
    let mut counts = vec![0.0; k];
    for (c, &l) in coords.iter().zip(labels) {
        centroids[l][0] += c[0];
        centroids[l][1] += c[1];
        counts[l] += 1.0;
    }
    for (c, n) in centroids.iter_mut().zip(&counts) {
        c[0] /= n;
        c[1] /= n;
    }
    let hits = coords
        .iter()
        .zip(labels)
        .filter(|(c, &l)| {
            let d = |m: &[f64; 2]| (c[0] - m[0]).powi(2) + (c[1] - m[1]).powi(2);
            (0..k).all(|o| d(&centroids[l]) <= d(&centroids[o]))
        })
        .count();
    hits as f64 / coords.len() as f64
}

#[test]
fn separated_clusters_stay_separated() {
    let (x, labels) = gaussian_clusters(3, 100, 12, 10.0, 5);
    let l = tsne(&x, 30.0, 1000, 1, SourceSpace::Feature).unwrap();
    assert!(centroid_agreement(&l.coords, &labels, 3) >= 0.95);
    let p = pca2(&x, SourceSpace::Feature).unwrap();
    assert!(centroid_agreement(&p.coords, &labels, 3) >= 0.95);
}
