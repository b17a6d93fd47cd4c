use std::collections::HashSet;
use std::hash::{DefaultHasher, Hash, Hasher};

use spike_harness::emit::{from_json_str, to_json_string, write_csv, CSV_HEADER};
use spike_harness::model::{null_model, single_spike_model, table_1_1_model};
use spike_harness::runner::aggregate;
use spike_harness::{
    run, run_with_workers, CellConfig, ExperimentConfig, ExperimentResult, FactorDesign, HarnessError, Noise, Scenario,
};
use spike_spectra::stats::{mean, variance};
use spike_spectra::{derive_seed, draw_data, EntryDistribution, EntryLaw, Matrix64};

fn small_table() -> ExperimentConfig {
    ExperimentConfig {
        reps: 40,
        master_seed: 3,
        dist: EntryDistribution::UniformSym,
        retain_raw: true,
        ..ExperimentConfig::new(
            Scenario::Table11,
            vec![
                CellConfig::model_cell(60, table_1_1_model(60, false, 1)).with_label("plain"),
                CellConfig::model_cell(60, table_1_1_model(60, true, 1)).with_label("rotated"),
            ],
        )
    }
}

fn without_runtime(mut r: ExperimentResult) -> ExperimentResult {
    r.runtime_secs = 0.0;
    r
}

#[test]
fn identical_config_gives_identical_result() {
    let config = small_table();
    let a = without_runtime(run(&config).unwrap());
    let b = without_runtime(run_with_workers(&config, Some(1)).unwrap());
    let c = without_runtime(run_with_workers(&config, Some(3)).unwrap());
    assert_eq!(a, b);
    assert_eq!(a, c);
    let other = without_runtime(
        run(&ExperimentConfig {
            master_seed: 4,
            ..config
        })
        .unwrap(),
    );
    assert_ne!(a.cells[0].raw, other.cells[0].raw);
}

#[test]
fn replication_seeds_give_distinct_data() {
    let config = small_table();
    let result = run(&config).unwrap();
    let law = EntryLaw::homogeneous(EntryDistribution::UniformSym);
    let mut hashes = HashSet::new();
    for cell in &result.cells {
        for rep in 0..config.reps as u64 {
            let x: Matrix64 = draw_data(60, 60, &law, derive_seed(cell.seed, rep));
            let mut h = DefaultHasher::new();
            for v in x.as_slice() {
                v.to_bits().hash(&mut h);
            }
            assert!(hashes.insert(h.finish()), "duplicate data matrix");
        }
    }
    assert_eq!(hashes.len(), 2 * config.reps);
}

#[test]
fn aggregates_match_raw_values() {
    let result = run(&small_table()).unwrap();
    for cell in &result.cells {
        let raw = cell.raw.as_ref().unwrap();
        assert_eq!(raw.len(), cell.reps - cell.failures);
        assert!((cell.mean.unwrap() - mean(raw)).abs() <= 1e-12);
        assert!((cell.variance.unwrap() - variance(raw)).abs() <= 1e-12);
    }
    // √n λ_1 / μ_1 is near √n (1 + small) for a strong spike.
    let plain = &result.cells[0];
    assert!((plain.mean.unwrap() / 60f64.sqrt() - 1.0).abs() < 0.1);
    assert_eq!(plain.analytic, Some(0.8));
    assert!((result.cells[1].analytic.unwrap() - 1.4).abs() < 1e-12);

    let factor = ExperimentConfig {
        reps: 30,
        retain_raw: true,
        ..ExperimentConfig::new(
            Scenario::FactorTables,
            vec![CellConfig::factor_cell(
                100,
                FactorDesign {
                    p: 100,
                    r: 1.0,
                    noise: Noise::T2,
                    k: None,
                },
            )],
        )
    };
    let result = run(&factor).unwrap();
    let cell = &result.cells[0];
    assert_eq!(cell.k, 11);
    let raw = cell.raw.as_ref().unwrap();
    let ratio = raw.iter().filter(|&&k| k == 11.0).count() as f64 / raw.len() as f64;
    assert!((cell.ratio.unwrap() - ratio).abs() <= 1e-12);
    assert!(ratio >= 0.9);
    let recomputed = aggregate(Scenario::FactorTables, raw, 11);
    assert_eq!(recomputed.ratio, cell.ratio);
}

#[test]
fn json_round_trip_is_lossless() {
    let result = run(&small_table()).unwrap();
    let text = to_json_string(&result).unwrap();
    assert_eq!(from_json_str(&text).unwrap(), result);
}

#[test]
fn csv_has_one_row_per_cell() {
    let result = run(&small_table()).unwrap();
    let mut buf = Vec::new();
    write_csv(&result, &mut buf).unwrap();
    let mut reader = csv::Reader::from_reader(buf.as_slice());
    assert_eq!(reader.headers().unwrap().len(), CSV_HEADER.len());
    let rows: Vec<csv::StringRecord> = reader.records().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), 2);
    assert_eq!(&rows[0][0], "table_1_1");
    assert_eq!(&rows[0][1], "plain");
    assert_eq!(&rows[0][3], "60");
    assert_eq!(&rows[0][9], "40");
    let var: f64 = rows[0][12].parse().unwrap();
    assert_eq!(var, result.cells[0].variance.unwrap());
}

#[test]
fn distributional_scenarios_report_ks() {
    let tw = ExperimentConfig {
        reps: 30,
        ..ExperimentConfig::new(Scenario::TwEdge, vec![CellConfig::model_cell(80, null_model(80))])
    };
    let cell = &run(&tw).unwrap().cells[0];
    assert!(cell.ks.unwrap() < 0.5 && cell.q99.is_some());

    let quad = ExperimentConfig {
        reps: 30,
        ..ExperimentConfig::new(
            Scenario::CltQuadform,
            vec![CellConfig::model_cell(60, single_spike_model(60, 200.0))],
        )
    };
    let cell = &run(&quad).unwrap().cells[0];
    assert!(cell.mean.unwrap().abs() < 1.0);
    assert_eq!(cell.analytic, Some(1.0));

    let spike = ExperimentConfig {
        reps: 30,
        ..ExperimentConfig::new(
            Scenario::CltSpike,
            vec![CellConfig::model_cell(60, table_1_1_model(60, false, 2))],
        )
    };
    let cell = &run(&spike).unwrap().cells[0];
    assert!(cell.coverage.unwrap() > 0.7);
}

#[test]
fn planning_and_replication_errors_are_classified() {
    let config = ExperimentConfig {
        reps: 5,
        ..ExperimentConfig::new(Scenario::CltSpike, vec![CellConfig::model_cell(40, null_model(40))])
    };
    let err = run(&config).unwrap_err();
    assert!(matches!(err, HarnessError::Config(_)), "{err}");
    assert_eq!(err.exit_code(), 2);

    // p = 6 is below the estimator's minimum, so every replication fails.
    let config = ExperimentConfig {
        reps: 5,
        ..ExperimentConfig::new(Scenario::FactorTables, vec![CellConfig::model_cell(20, null_model(6))])
    };
    let err = run(&config).unwrap_err();
    assert!(matches!(err, HarnessError::Run(_)), "{err}");
    assert_eq!(err.exit_code(), 3);
}
