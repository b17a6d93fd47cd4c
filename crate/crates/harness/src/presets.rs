//! Canned experiments. Desk-scale variants run in minutes on one core; the
//! full variants cover every published cell at 500 replications.

use spike_spectra::EntryDistribution;

use crate::config::{CellConfig, ExperimentConfig, FactorDesign, Noise, Scenario};
use crate::model::{null_model, single_spike_model, table_1_1_model};

pub const PRESET_NAMES: [&str; 6] = [
    "table_1_1",
    "factor_tables",
    "factor_null",
    "clt_spike",
    "clt_quadform",
    "tw_edge",
];

const R_GRID: [f64; 8] = [0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0];

const TABLE_1_1_P: [usize; 5] = [200, 400, 600, 800, 1000];
const TABLE_1_1_PLAIN: [f64; 5] = [0.8111, 0.7965, 0.8287, 0.7574, 0.7874];
const TABLE_1_1_ROTATED: [f64; 5] = [1.2507, 1.4051, 1.2800, 1.5012, 1.3911];

/// Published identification ratios, indexed by r in `R_GRID`.
struct FactorTable {
    n: usize,
    noise: Noise,
    columns: [(usize, [f64; 8]); 3],
}

const FACTOR_TABLES: [FactorTable; 3] = [
    FactorTable {
        n: 50,
        noise: Noise::T1,
        columns: [
            (50, [0.608, 0.816, 0.904, 0.892, 0.906, 0.914, 0.908, 0.914]),
            (100, [0.192, 0.442, 0.676, 0.832, 0.880, 0.918, 0.948, 0.946]),
            (150, [0.068, 0.184, 0.450, 0.638, 0.756, 0.868, 0.916, 0.912]),
        ],
    },
    FactorTable {
        n: 100,
        noise: Noise::T1,
        columns: [
            (100, [0.954, 0.980, 0.956, 0.972, 0.970, 0.954, 0.954, 0.950]),
            (200, [0.772, 0.942, 0.964, 0.980, 0.978, 0.972, 0.970, 0.958]),
            (300, [0.392, 0.782, 0.938, 0.966, 0.972, 0.984, 0.980, 0.982]),
        ],
    },
    FactorTable {
        n: 100,
        noise: Noise::T2,
        columns: [
            (100, [0.946, 0.928, 0.944, 0.926, 0.926, 0.918, 0.928, 0.930]),
            (200, [0.938, 0.974, 0.968, 0.966, 0.970, 0.978, 0.978, 0.980]),
            (300, [0.792, 0.968, 0.986, 0.978, 0.972, 0.986, 0.980, 0.976]),
        ],
    },
];

fn noise_name(noise: Noise) -> &'static str {
    match noise {
        Noise::T1 => "T1",
        Noise::T2 => "T2",
    }
}

fn factor_cell(n: usize, p: usize, r: f64, noise: Noise, reference: Option<f64>) -> CellConfig {
    let mut cell = CellConfig::factor_cell(n, FactorDesign { p, r, noise, k: None })
        .with_label(format!("{}_n{n}_p{p}_r{r}", noise_name(noise)));
    cell.reference = reference;
    cell
}

pub fn table_1_1(full: bool) -> ExperimentConfig {
    let mut cells = Vec::new();
    for (i, &p) in TABLE_1_1_P.iter().enumerate() {
        if !full && p != 400 {
            continue;
        }
        let bulk_seed = p as u64;
        cells.push(
            CellConfig::model_cell(p, table_1_1_model(p, false, bulk_seed))
                .with_label(format!("sigma2_p{p}"))
                .with_reference(TABLE_1_1_PLAIN[i]),
        );
        cells.push(
            CellConfig::model_cell(p, table_1_1_model(p, true, bulk_seed))
                .with_label(format!("sigma3_p{p}"))
                .with_reference(TABLE_1_1_ROTATED[i]),
        );
    }
    ExperimentConfig {
        dist: EntryDistribution::UniformSym,
        master_seed: 11,
        ..ExperimentConfig::new(Scenario::Table11, cells)
    }
}

/// Desk scale: (100, 100) under T1 and (100, 200) under T2, r ≥ 0.5, 200
/// replications. Full: every published cell, 500 replications.
pub fn factor_tables(full: bool) -> ExperimentConfig {
    let mut cells = Vec::new();
    for table in &FACTOR_TABLES {
        for &(p, refs) in &table.columns {
            let desk =
                table.n == 100 && ((table.noise == Noise::T1 && p == 100) || (table.noise == Noise::T2 && p == 200));
            if !full && !desk {
                continue;
            }
            for (j, &r) in R_GRID.iter().enumerate() {
                if !full && r < 0.5 {
                    continue;
                }
                cells.push(factor_cell(table.n, p, r, table.noise, Some(refs[j])));
            }
        }
    }
    ExperimentConfig {
        reps: if full { 500 } else { 200 },
        master_seed: 23,
        ..ExperimentConfig::new(Scenario::FactorTables, cells)
    }
}

/// K = 0: identity covariance at n = p = 200.
pub fn factor_null(_full: bool) -> ExperimentConfig {
    let cells = vec![CellConfig::model_cell(200, null_model(200)).with_label("null_n200_p200")];
    ExperimentConfig {
        reps: 200,
        master_seed: 31,
        ..ExperimentConfig::new(Scenario::FactorTables, cells)
    }
}

pub fn clt_spike(_full: bool) -> ExperimentConfig {
    let cells = vec![CellConfig::model_cell(400, table_1_1_model(400, false, 400)).with_label("sigma2_p400")];
    ExperimentConfig {
        dist: EntryDistribution::UniformSym,
        master_seed: 41,
        ..ExperimentConfig::new(Scenario::CltSpike, cells)
    }
}

pub fn clt_quadform(_full: bool) -> ExperimentConfig {
    let cells = vec![
        CellConfig::model_cell(500, single_spike_model(500, 800.0))
            .with_label("gaussian_p500")
            .with_dist(EntryDistribution::StandardNormal),
        CellConfig::model_cell(500, single_spike_model(500, 800.0))
            .with_label("uniform_p500")
            .with_dist(EntryDistribution::UniformSym),
    ];
    ExperimentConfig {
        reps: 1000,
        master_seed: 53,
        ..ExperimentConfig::new(Scenario::CltQuadform, cells)
    }
}

pub fn tw_edge(full: bool) -> ExperimentConfig {
    let cells = vec![CellConfig::model_cell(500, null_model(500)).with_label("null_p500")];
    ExperimentConfig {
        reps: if full { 1000 } else { 200 },
        master_seed: 61,
        ..ExperimentConfig::new(Scenario::TwEdge, cells)
    }
}

pub fn preset(name: &str, full: bool) -> Option<ExperimentConfig> {
    Some(match name {
        "table_1_1" => table_1_1(full),
        "factor_tables" => factor_tables(full),
        "factor_null" => factor_null(full),
        "clt_spike" => clt_spike(full),
        "clt_quadform" => clt_quadform(full),
        "tw_edge" => tw_edge(full),
        _ => return None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_validate() {
        for name in PRESET_NAMES {
            for full in [false, true] {
                preset(name, full).unwrap().validate().unwrap();
            }
        }
        assert!(preset("nope", false).is_none());
    }

    #[test]
    fn desk_factor_grid() {
        let desk = factor_tables(false);
        assert_eq!(desk.cells.len(), 12);
        assert_eq!(desk.reps, 200);
        let full = factor_tables(true);
        assert_eq!(full.cells.len(), 72);
        let cell = &desk.cells[0];
        assert_eq!(cell.reference, Some(0.956));
    }
}
