mod common;

use std::path::Path;

use clap::Parser;
use common::*;
use formscape_workbench::cli::{run, Cli};
use tempfile::tempdir;

fn formscape(store: &Path, args: &[&str]) -> anyhow::Result<Vec<csv::StringRecord>> {
    let mut argv = vec!["formscape", "--store", store.to_str().unwrap()];
    argv.extend_from_slice(args);
    let mut out = Vec::new();
    run(Cli::try_parse_from(argv)?, &mut out)?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .from_reader(out.as_slice());
    Ok(reader.records().map(|r| r.unwrap()).collect())
}

#[test]
fn generate_judge_export_and_verify() {
    let dir = tempdir().unwrap();
    let store = dir.path().join("store");
    let rows = formscape(&store, &["--seed", "4", "generate", "-n", "3"]).unwrap();
    assert_eq!(&rows[0][0], "id");
    assert_eq!(rows.len(), 4);

    let starving = "0.5,0.5,0.5,0.5,0.5,0.5,0,0.5,0.5,0.5,0.5,0.5";
    let rows = formscape(&store, &["generate", "--genotype", starving]).unwrap();
    assert_eq!(
        (&rows[1][2], &rows[1][3], &rows[1][4]),
        ("empty", "0", "false")
    );

    let rows = formscape(
        &store,
        &["judge", "2", "--rank", "8", "--category", "coral"],
    )
    .unwrap();
    let header = &rows[0];
    let col = |name: &str| header.iter().position(|h| h == name).unwrap();
    assert_eq!(&rows[1][col("rank")], "8");
    assert_eq!(&rows[1][col("provenance")], "human");
    assert!(formscape(&store, &["judge", "2", "--rank", "11"]).is_err());

    let csv = dir.path().join("all.csv");
    formscape(&store, &["export", csv.to_str().unwrap()]).unwrap();
    let copy = dir.path().join("copy");
    formscape(&copy, &["import", csv.to_str().unwrap()]).unwrap();
    let again = dir.path().join("again.csv");
    formscape(&copy, &["export", again.to_str().unwrap()]).unwrap();
    assert_eq!(std::fs::read(&csv).unwrap(), std::fs::read(&again).unwrap());

    assert_eq!(formscape(&store, &["verify"]).unwrap().len(), 1);
    std::fs::remove_file(store.join("images/00000001.pgm")).unwrap();
    assert!(formscape(&store, &["verify"]).is_err());
}

#[test]
fn train_then_query_the_model() {
    let dir = tempdir().unwrap();
    let store = dir.path();
    store_with(store, &planted_records(150, 3));
    let store = store.join("store");
    let rows = formscape(
        &store,
        &["--seed", "1", "train", "--epochs", "20", "--hidden", "16,8"],
    )
    .unwrap();
    assert_eq!(&rows[1][0], "1");
    assert_eq!(
        rows[1][1].parse::<usize>().unwrap() + rows[1][2].parse::<usize>().unwrap(),
        150
    );

    let rows = formscape(&store, &["predict", "--model", "1", "--record", "5"]).unwrap();
    assert_eq!(rows[0].len(), 4 + LABELS.len());
    assert!(LABELS.contains(&&rows[1][1]));
    assert!(formscape(&store, &["predict", "--model", "1"]).is_err());

    let base = [
        "--genotype",
        "0.5,0.5,0.5,0.5,0.5,0.5,0.5,0.5,0.5,0.5,0.5,0.5",
        "--dim-i",
        "0",
        "--dim-j",
        "1",
    ];
    let mut args = vec!["cross-section", "--model", "1", "--resolution", "4"];
    args.extend_from_slice(&base);
    assert_eq!(formscape(&store, &args).unwrap().len(), 17);
    let mut args = vec!["transitions", "--model", "1", "--resolution", "8"];
    args.extend_from_slice(&base);
    assert!(!formscape(&store, &args).unwrap().is_empty());

    let rows = formscape(
        &store,
        &["sample", "--model", "1", "-n", "5", "--min-rank", "1"],
    )
    .unwrap();
    assert_eq!(rows.len(), 6);
    let rows = formscape(
        &store,
        &[
            "climb",
            "--model",
            "1",
            "--record",
            "3",
            "--iterations",
            "20",
        ],
    )
    .unwrap();
    let ranks: Vec<f64> = rows[1..].iter().map(|r| r[13].parse().unwrap()).collect();
    assert!(ranks.windows(2).all(|w| w[1] >= w[0]));

    let rows = formscape(&store, &["embed", "--method", "pca"]).unwrap();
    assert_eq!(rows.len(), 151);
}

#[test]
fn sweep_writes_a_contact_sheet() {
    let dir = tempdir().unwrap();
    let store = dir.path().join("store");
    formscape(&store, &["generate"]).unwrap();
    let sheet = dir.path().join("sheet.pgm");
    let args = [
        "sweep",
        "--record",
        "1",
        "--dim-i",
        "2",
        "--dim-j",
        "5",
        "--resolution",
        "2",
        "--tile",
        "128",
    ];
    let mut args = args.to_vec();
    args.extend_from_slice(&["--out", sheet.to_str().unwrap()]);
    formscape(&store, &args).unwrap();
    let img = formscape_core::morphogen::Image::read_pgm(std::io::BufReader::new(
        std::fs::File::open(&sheet).unwrap(),
    ))
    .unwrap();
    assert!(img.width() >= 256);
}

#[test]
fn bad_arguments_are_rejected() {
    let dir = tempdir().unwrap();
    let store = dir.path().join("store");
    assert!(formscape(&store, &["generate", "--genotype", "0.5,0.5"]).is_err());
    assert!(formscape(&store, &["generate", "--sampler", "around"]).is_err());
    assert!(formscape(&store, &["split"]).is_err());
    assert!(formscape(&store, &["nonsense"]).is_err());
}
