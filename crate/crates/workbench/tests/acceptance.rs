//! One PASS/FAIL line per acceptance criterion. Exits nonzero if any fail.

mod common;

use std::time::{Duration, Instant};

use axum::body::Body;
use axum::http::{header, Request};
use formscape_core::embed::{calibrate_affinities, pca2, tsne, SourceSpace};
use formscape_core::explore::{
    boundary_descent, cross_section, find_transitions, sweep_grid, CrossSection,
};
use formscape_core::featurize::STD_FLOOR;
use formscape_core::morphogen::{
    classify_empty, phenotype, Genotype, DEFAULT_BUDGET, DEFAULT_RESOLUTION,
};
use formscape_core::predict::{
    confusion_matrix, evaluate, knn_fit, load_checkpoint, mlp_train, quartile_report,
    save_checkpoint, CategoryDistribution, Dense, HeadKind, LabeledDataset, Metrics, MlpModel,
    Objective, Prediction, QuartileRow, Row, TrainConfig,
};
use formscape_core::rng::SplitMix64;
use formscape_core::synthetic::{
    boundary_noise_dataset, fifth_split, gaussian_clusters, linear_logit_mlp,
    planted_category_dataset, planted_rank_dataset,
};
use formscape_core::Mlp;
use formscape_workbench::generate::{GenerateRequest, Sampler};
use formscape_workbench::server::{router, AppState};
use formscape_workbench::taxonomy::EMPTY_CATEGORY;
use formscape_workbench::{Provenance, Store};
use http_body_util::BodyExt;
use nalgebra::{DMatrix, SymmetricEigen};
use serde_json::json;
use tower::ServiceExt;

type Outcome = Result<String, String>;

type Scalar<'a> = Box<dyn Fn(&[f64]) -> f64 + 'a>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

fn random_genotype(rng: &mut SplitMix64) -> Genotype {
    Genotype::from_unit(std::array::from_fn(|_| rng.next_f64())).expect("unit box")
}

fn determinism() -> Outcome {
    let mut rng = SplitMix64::new(2024);
    let mut identical = 0;
    let mut slowest = Duration::ZERO;
    for _ in 0..100 {
        let g = random_genotype(&mut rng);
        let seed = rng.next_u64();
        let mut hashes = [0u64; 2];
        for h in &mut hashes {
            let start = Instant::now();
            let (_, img) = phenotype(&g, seed, DEFAULT_BUDGET, DEFAULT_RESOLUTION).map_err(err)?;
            slowest = slowest.max(start.elapsed());
            *h = img.content_hash();
        }
        identical += usize::from(hashes[0] == hashes[1]);
    }
    check(
        identical == 100 && slowest < Duration::from_secs(1),
        format!(
            "{identical}/100 identical hashes, slowest form {:.3} s",
            slowest.as_secs_f64()
        ),
    )
}

/// Hidden pre-activations and the unclamped rank, recomputed from the raw
/// weights.
fn forward(m: &MlpModel<f64>, x: &[f64]) -> (Vec<f64>, f64) {
    let dense = |l: &Dense<f64>, v: &[f64]| -> Vec<f64> {
        l.weights
            .chunks_exact(l.inputs)
            .zip(&l.bias)
            .map(|(row, b)| b + row.iter().zip(v).map(|(w, a)| w * a).sum::<f64>())
            .collect()
    };
    let relu = |z: &[f64]| -> Vec<f64> { z.iter().map(|v| v.max(0.0)).collect() };
    let n = m.normalizer().normalize(x).expect("dimension");
    let z1 = dense(&m.layers()[0], &n);
    let z2 = dense(&m.layers()[1], &relu(&z1));
    let rank = 10.0 * dense(m.regressor().expect("rank head"), &relu(&z2))[0];
    (z1.into_iter().chain(z2).collect(), rank)
}

fn central_difference(x: &[f64], f: impl Fn(&[f64]) -> f64) -> Vec<f64> {
    let h = 1e-5;
    (0..x.len())
        .map(|i| {
            let (mut a, mut b) = (x.to_vec(), x.to_vec());
            a[i] += h;
            b[i] -= h;
            (f(&a) - f(&b)) / (2.0 * h)
        })
        .collect()
}

fn gradients() -> Outcome {
    let mut rng = SplitMix64::new(77);
    let mut worst: f64 = 0.0;
    let mut resampled = 0;
    for net in 0..50u64 {
        let m = MlpModel::<f64>::init(12, [8, 6], HeadKind::Both(4), 1000 + net).map_err(err)?;
        // central differences are meaningless within reach of a ReLU kink or
        // a swap of the top two classes
        let x = loop {
            let x: Vec<f64> = (0..12).map(|_| rng.uniform(-1.0, 1.0)).collect();
            let p = m.mlp_predict(&x).map_err(err)?;
            let mut probs = p.distribution.expect("class head").probs().to_vec();
            probs.sort_by(|a, b| b.partial_cmp(a).unwrap());
            let smooth =
                forward(&m, &x).0.iter().all(|z| z.abs() > 1e-3) && probs[1] - probs[2] > 1e-6;
            if smooth {
                break x;
            }
            resampled += 1;
        };
        let mut objectives: Vec<(Objective, Scalar<'_>)> = vec![
            (Objective::Rank, Box::new(|x| forward(&m, x).1)),
            (Objective::Margin, Box::new(|x| m.margin(x).unwrap())),
        ];
        let m = &m;
        for c in 0..4 {
            objectives.push((
                Objective::ClassProbability(c),
                Box::new(move |x| m.mlp_predict(x).unwrap().distribution.unwrap().probs()[c]),
            ));
        }
        for (objective, f) in &objectives {
            let analytic = m.input_gradient(&x, *objective).map_err(err)?;
            let numeric = central_difference(&x, f);
            for (a, n) in analytic.iter().zip(&numeric) {
                worst = worst.max((a - n).abs() / a.abs().max(n.abs()).max(1e-7));
            }
        }
    }
    check(
        worst < 1e-4,
        format!("max relative error {worst:.2e} over 50 nets ({resampled} points resampled)"),
    )
}

fn planted_category() -> Outcome {
    let start = Instant::now();
    let ds = planted_category_dataset(600, 1);
    let model = Mlp::init(12, [200, 100], HeadKind::Classifier(3), 1).map_err(err)?;
    let (model, history) = mlp_train(model, &ds, &TrainConfig::default()).map_err(err)?;
    let mlp = evaluate(&model, &ds).map_err(err)?.accuracy.unwrap_or(0.0);
    let knn = evaluate(&knn_fit(&ds, 5).map_err(err)?, &ds)
        .map_err(err)?
        .accuracy
        .unwrap_or(0.0);
    let elapsed = start.elapsed();
    check(
        mlp >= 0.90 && elapsed < Duration::from_secs(120),
        format!(
            "MLP accuracy {mlp:.3}, k-NN (k=5) accuracy {knn:.3}, {} epochs, {:.1} s",
            history.train_loss.len(),
            elapsed.as_secs_f64()
        ),
    )
}

fn planted_rank() -> Outcome {
    let ds = planted_rank_dataset(625, 0.3, 1);
    let rows = ds.train().count();
    let config = TrainConfig {
        batch_size: 8,
        learning_rate: 3e-3,
        epochs: 400,
        patience: 100,
        ..Default::default()
    };
    let model = Mlp::init(12, [200, 100], HeadKind::Regressor, 1).map_err(err)?;
    let (model, _) = mlp_train(model, &ds, &config).map_err(err)?;
    let rmse = evaluate(&model, &ds)
        .map_err(err)?
        .rank_rmse
        .unwrap_or(f64::INFINITY);
    check(
        rows == 500 && rmse <= 0.5,
        format!("validation RMSE {rmse:.3} from {rows} training rows"),
    )
}

fn calibration() -> Outcome {
    let ds = boundary_noise_dataset(2000, 0.1, 1);
    let model = Mlp::init(12, [200, 100], HeadKind::Classifier(3), 1).map_err(err)?;
    let (model, _) = mlp_train(model, &ds, &TrainConfig::default()).map_err(err)?;
    let quartiles = evaluate(&model, &ds)
        .map_err(err)?
        .quartiles
        .ok_or("no quartiles")?;
    let acc: Vec<f64> = quartiles.iter().map(|q| q.accuracy).collect();
    let monotone = acc.windows(2).all(|w| w[1] >= w[0] - 0.02);
    let spread = acc[3] >= acc[0] + 0.10;
    let shown: Vec<String> = acc.iter().map(|a| format!("{:.1}%", 100.0 * a)).collect();
    check(
        monotone && spread,
        format!("quartile accuracies {}", shown.join(" / ")),
    )
}

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

fn embedding() -> Outcome {
    let (x, labels) = gaussian_clusters(3, 100, 12, 10.0, 1);
    let layout = tsne(&x, 30.0, 1000, 1, SourceSpace::Feature).map_err(err)?;
    let agreement = centroid_agreement(&layout.coords, &labels, 3);

    let conditional: Vec<Vec<f64>> = calibrate_affinities(&x, 30.0).map_err(err)?;
    let perplexity_error = conditional
        .iter()
        .map(|row| {
            let h: f64 = row
                .iter()
                .filter(|&&p| p > 0.0)
                .map(|&p| -p * p.log2())
                .sum();
            (h.exp2() - 30.0).abs()
        })
        .fold(0.0, f64::max);

    let pca = pca2(&x, SourceSpace::Feature).map_err(err)?;
    let pca_error = pca
        .coords
        .iter()
        .zip(dense_pca(&x))
        .flat_map(|(a, b)| [(a[0] - b[0]).abs(), (a[1] - b[1]).abs()])
        .fold(0.0, f64::max);
    check(
        agreement >= 0.95 && perplexity_error < 1e-3 && pca_error < 1e-6,
        format!(
            "t-SNE centroid agreement {:.1}%, max perplexity error {perplexity_error:.1e}, pca2 max deviation {pca_error:.1e}",
            100.0 * agreement
        ),
    )
}

fn transitions() -> Outcome {
    let mut w = vec![0.0; 12];
    w[3] = 0.6;
    w[8] = -0.8;
    let b = 0.6 * 0.55 - 0.8 * 0.4;
    let side = |u: &[f64]| w.iter().zip(u).map(|(a, v)| a * v).sum::<f64>() - b;
    let norm = (w[3] * w[3] + w[8] * w[8]).sqrt();

    let classifier = linear_logit_mlp(&w, b, 8.0);
    let base = Genotype::from_unit([0.5; 12]).map_err(err)?;
    let grid = sweep_grid(&base, 3, 8, (0.0, 1.0), (0.0, 1.0), 32).map_err(err)?;
    let (si, sj) = grid.steps();
    let set = find_transitions(&cross_section(&classifier, &grid).map_err(err)?);
    let near = set
        .transitions
        .iter()
        .filter(|t| side(t.midpoint.u()).abs() / norm <= si.max(sj))
        .count();
    let total = set.transitions.len();

    let fixture = linear_logit_mlp(&w, b, 4.0);
    let mut rng = SplitMix64::new(21);
    let mut reached = 0;
    for _ in 0..100 {
        let start = random_genotype(&mut rng);
        let d = boundary_descent(&fixture, &start, 500, 0.01).map_err(err)?;
        reached += usize::from(d.margin < 0.02);
    }
    check(
        total > 0 && near * 10 >= total * 9 && reached >= 90,
        format!("{near}/{total} midpoints within one grid step, descent reached the boundary from {reached}/100 starts"),
    )
}

fn brute_margin(p: &[f64]) -> f64 {
    let mut s = p.to_vec();
    s.sort_by(|a, b| b.partial_cmp(a).unwrap());
    s[0] - s[1]
}

fn brute_argmax(p: &[f64]) -> usize {
    (1..p.len()).fold(0, |best, c| if p[c] > p[best] { c } else { best })
}

fn brute_quartiles(preds: &[(Vec<f64>, usize)]) -> Vec<QuartileRow> {
    let mut scored: Vec<(f64, bool)> = preds
        .iter()
        .map(|(p, t)| (brute_margin(p), brute_argmax(p) == *t))
        .collect();
    scored.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let n = scored.len();
    (0..4)
        .map(|q| {
            let lo = (0..q)
                .map(|i| n / 4 + usize::from(i < n % 4))
                .sum::<usize>();
            let group = &scored[lo..lo + n / 4 + usize::from(q < n % 4)];
            let correct = group.iter().filter(|g| g.1).count();
            QuartileRow {
                lower_pct: 25 * q as u8,
                upper_pct: 25 * (q as u8 + 1),
                margin_min: group[0].0,
                margin_max: group[group.len() - 1].0,
                count: group.len(),
                correct,
                accuracy: correct as f64 / group.len() as f64,
            }
        })
        .collect()
}

fn brute_confusion(predicted: &[usize], truths: &[usize], k: usize) -> Vec<Vec<usize>> {
    (0..k)
        .map(|t| {
            (0..k)
                .map(|p| {
                    predicted
                        .iter()
                        .zip(truths)
                        .filter(|&(&a, &b)| a == p && b == t)
                        .count()
                })
                .collect()
        })
        .collect()
}

fn fixture_rows(seed: u64) -> LabeledDataset<f64> {
    let mut rng = SplitMix64::new(seed);
    let rows = (0..20)
        .map(|i| Row {
            input: (0..12).map(|_| rng.uniform(-1.0, 1.0)).collect(),
            category: Some(rng.below(3)),
            rank: Some((rng.uniform(0.0, 10.0) * 4.0).round() / 4.0),
            split: fifth_split(i),
        })
        .collect();
    LabeledDataset::new(rows, vec!["a".into(), "b".into(), "c".into()]).expect("valid fixture")
}

fn brute_knn(ds: &LabeledDataset<f64>, k: usize, x: &[f64]) -> Prediction<f64> {
    let train: Vec<&Row<f64>> = ds.train().collect();
    let n = train.len() as f64;
    let d = x.len();
    let mut mean = vec![0.0; d];
    for r in &train {
        for (m, v) in mean.iter_mut().zip(&r.input) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n);
    let mut var = vec![0.0; d];
    for r in &train {
        for j in 0..d {
            var[j] += (r.input[j] - mean[j]) * (r.input[j] - mean[j]);
        }
    }
    let std: Vec<f64> = var.iter().map(|v| (v / n).sqrt().max(STD_FLOOR)).collect();
    let z = |v: &[f64]| -> Vec<f64> { (0..d).map(|j| (v[j] - mean[j]) / std[j]).collect() };
    let q = z(x);
    let mut dist: Vec<(f64, usize)> = train
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let zi = z(&r.input);
            ((0..d).map(|j| (zi[j] - q[j]) * (zi[j] - q[j])).sum(), i)
        })
        .collect();
    dist.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
    let nearest: Vec<usize> = dist[..k].iter().map(|p| p.1).collect();
    let mut votes = [0usize; 3];
    for &i in &nearest {
        votes[train[i].category.unwrap()] += 1;
    }
    let probs = votes.iter().map(|&v| v as f64 / k as f64).collect();
    let rank = nearest.iter().map(|&i| train[i].rank.unwrap()).sum::<f64>() / k as f64;
    Prediction {
        distribution: Some(CategoryDistribution::new(probs).unwrap()),
        rank: Some(rank),
    }
}

fn brute_evaluate(model: &MlpModel<f64>, ds: &LabeledDataset<f64>) -> Metrics {
    let mut preds = Vec::new();
    let mut sq = 0.0;
    for r in ds.validation() {
        let p = model.mlp_predict(&r.input).unwrap();
        preds.push((
            p.distribution.unwrap().probs().to_vec(),
            r.category.unwrap(),
        ));
        sq += (p.rank.unwrap() - r.rank.unwrap()).powi(2);
    }
    let n = preds.len();
    let predicted: Vec<usize> = preds.iter().map(|(p, _)| brute_argmax(p)).collect();
    let truths: Vec<usize> = preds.iter().map(|(_, t)| *t).collect();
    let correct = predicted
        .iter()
        .zip(&truths)
        .filter(|(a, b)| a == b)
        .count();
    Metrics {
        classified: n,
        ranked: n,
        accuracy: Some(correct as f64 / n as f64),
        rank_rmse: Some((sq / n as f64).sqrt()),
        confusion: Some(brute_confusion(&predicted, &truths, 3)),
        quartiles: Some(brute_quartiles(&preds)),
    }
}

fn oracles() -> Outcome {
    let mut failures = Vec::new();
    for seed in 0..10u64 {
        let mut rng = SplitMix64::new(500 + seed);
        let preds: Vec<(Vec<f64>, usize)> = (0..20)
            .map(|_| {
                let logits: Vec<f64> = (0..3).map(|_| rng.uniform(-2.0, 2.0)).collect();
                (
                    CategoryDistribution::softmax(&logits).probs().to_vec(),
                    rng.below(3),
                )
            })
            .collect();
        let dists: Vec<(CategoryDistribution<f64>, usize)> = preds
            .iter()
            .map(|(p, t)| (CategoryDistribution::new(p.clone()).unwrap(), *t))
            .collect();
        if quartile_report(&dists).map_err(err)? != brute_quartiles(&preds) {
            failures.push(format!("quartile_report seed {seed}"));
        }

        let predicted: Vec<usize> = (0..20).map(|_| rng.below(3)).collect();
        let truths: Vec<usize> = (0..20).map(|_| rng.below(3)).collect();
        if confusion_matrix(&predicted, &truths, 3).map_err(err)?
            != brute_confusion(&predicted, &truths, 3)
        {
            failures.push(format!("confusion_matrix seed {seed}"));
        }

        let ds = fixture_rows(600 + seed);
        let knn = knn_fit(&ds, 5).map_err(err)?;
        for r in ds.rows() {
            if knn.knn_predict(&r.input).map_err(err)? != brute_knn(&ds, 5, &r.input) {
                failures.push(format!("knn_predict seed {seed}"));
                break;
            }
        }

        let model = MlpModel::<f64>::init(12, [8, 6], HeadKind::Both(3), seed).map_err(err)?;
        if evaluate(&model, &ds).map_err(err)? != brute_evaluate(&model, &ds) {
            failures.push(format!("evaluate seed {seed}"));
        }
    }
    check(
        failures.is_empty(),
        if failures.is_empty() {
            "quartile_report, confusion_matrix, knn_predict and evaluate match brute force on 10 fixtures each".into()
        } else {
            format!("mismatches: {}", failures.join(", "))
        },
    )
}

fn round_trips() -> Outcome {
    let dir = tempfile::tempdir().map_err(err)?;

    let mut store = Store::open(dir.path().join("a")).map_err(err)?;
    store
        .batch_generate(&GenerateRequest {
            n: 6,
            sampler: Sampler::Uniform,
            seed: 9,
        })
        .map_err(err)?;
    store
        .submit_judgement(2, Some(7), Some("coral, branching"))
        .map_err(err)?;
    store
        .submit_judgement(3, Some(0), Some("blob"))
        .map_err(err)?;
    let first = dir.path().join("first.csv");
    store.export_dataset(&first).map_err(err)?;
    let mut copy = Store::open(dir.path().join("b")).map_err(err)?;
    copy.import_dataset(&first).map_err(err)?;
    let second = dir.path().join("second.csv");
    copy.export_dataset(&second).map_err(err)?;
    let same_records = copy.records().eq(store.records());
    let same_bytes = std::fs::read(&first).map_err(err)? == std::fs::read(&second).map_err(err)?;

    let ds = planted_category_dataset(100, 3);
    let model = Mlp::init(12, [16, 8], HeadKind::Classifier(3), 3).map_err(err)?;
    let config = TrainConfig {
        epochs: 5,
        ..Default::default()
    };
    let (model, _) = mlp_train(model, &ds, &config).map_err(err)?;
    let ckpt = dir.path().join("ckpt");
    save_checkpoint(&model, None, &ckpt).map_err(err)?;
    let (loaded, _) = load_checkpoint::<f64>(&ckpt).map_err(err)?;
    let bits = |m: &Mlp| -> Vec<u64> {
        m.params()
            .iter()
            .flat_map(|p| p.iter().map(|v| v.to_bits()))
            .collect()
    };
    let checkpoint_exact = bits(&model) == bits(&loaded) && loaded == model;

    let mut w = vec![0.0; 12];
    w[3] = 0.6;
    w[8] = -0.8;
    let plane = linear_logit_mlp(&w, 0.6 * 0.55 - 0.8 * 0.4, 8.0);
    let info = store
        .add_model(plane.clone(), SourceSpace::Genotype)
        .map_err(err)?;
    let base = store.record(2).map_err(err)?.genotype.clone();
    let app = router(AppState::new(store));
    let body = json!({
        "model_id": info.id,
        "base_record_id": 2,
        "dim_i": 3,
        "dim_j": 8,
        "ranges": [[0.1, 0.9], [0.0, 1.0]],
        "resolution": 24,
    });
    let runtime = tokio::runtime::Runtime::new().map_err(err)?;
    let served: CrossSection = runtime.block_on(async {
        let req = Request::post("/api/cross-section")
            .header(header::CONTENT_TYPE, "application/json")
            .body(Body::from(body.to_string()))
            .map_err(err)?;
        let response = app.oneshot(req).await.map_err(err)?;
        let bytes = response
            .into_body()
            .collect()
            .await
            .map_err(err)?
            .to_bytes();
        let value: serde_json::Value = serde_json::from_slice(&bytes).map_err(err)?;
        serde_json::from_value(value["cross_section"].clone()).map_err(err)
    })?;
    let grid = sweep_grid(&base, 3, 8, (0.1, 0.9), (0.0, 1.0), 24).map_err(err)?;
    let http_equal = served == cross_section(&plane, &grid).map_err(err)?;

    check(
        same_records && same_bytes && checkpoint_exact && http_equal,
        format!(
            "export/import lossless: {}, checkpoint bit-exact: {checkpoint_exact}, HTTP cross-section equals library: {http_equal}",
            same_records && same_bytes
        ),
    )
}

fn failure_handling() -> Outcome {
    let dir = tempfile::tempdir().map_err(err)?;
    let mut store = Store::open(dir.path()).map_err(err)?;
    let r = store
        .add_record(&common::starving_genotype(), 0)
        .map_err(err)?;
    let empty = classify_empty(&store.image(r.id).map_err(err)?);
    check(
        empty
            && r.rank == Some(0)
            && r.category.as_deref() == Some(EMPTY_CATEGORY)
            && r.provenance == Provenance::Predicted,
        format!(
            "classify_empty {empty}, rank {:?}, category {:?}",
            r.rank, r.category
        ),
    )
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 10] = [
        ("determinism", determinism),
        ("gradient correctness", gradients),
        ("planted-category recovery", planted_category),
        ("planted-rank regression", planted_rank),
        ("confidence calibration", calibration),
        ("embedding cluster preservation", embedding),
        ("transition detection", transitions),
        ("oracle equivalence", oracles),
        ("round trips", round_trips),
        ("failure handling", failure_handling),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let (status, detail) = match run() {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        println!("{status} {:>2} {name}: {detail}", i + 1);
    }
    if failed > 0 {
        println!("{failed} of {} criteria failed", criteria.len());
        std::process::exit(1);
    }
}
