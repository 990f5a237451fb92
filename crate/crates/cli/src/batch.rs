//! Shape × disturbance × controller × seed sweeps and the normalized score
//! table.

use std::collections::BTreeMap;
use std::io::Write;

use l1ds_core::disturbance::{Channel, DisturbanceSpec, Signal};
use l1ds_core::harness::{ControllerStack, RunResult};
use rayon::prelude::*;

use crate::config::{BatchRow, ControllerKind, DemoSource, ExperimentConfig, RegimeKind};
use crate::error::CliError;
use crate::experiment::{disturbances, prepare, run_stack, variant_stack};

/// Amplitude of the perfect-regime task step.
pub const STEP_AMPLITUDE: [f64; 2] = [1.5, -1.0];
pub const STEP_START: f64 = 0.3;
/// Per-axis scale of the matched (acceleration) multi-sine.
pub const MATCHED_SINE_SCALE: f64 = 40.0;
/// Constant unmatched (position-rate) offset.
pub const UNMATCHED_CONSTANT: [f64; 2] = [0.8, -0.6];
/// Per-axis scale of the unmatched multi-sine.
pub const UNMATCHED_SINE_SCALE: f64 = 1.0;
/// Unmatched pulses layered on the matched multi-sine.
pub const UNMATCHED_PULSE: [f64; 2] = [1.5, 1.0];
pub const PULSE_WINDOWS: [[f64; 2]; 2] = [[0.2, 0.3], [0.6, 0.7]];

/// The built-in five-row disturbance suite for planar shapes: a task-level
/// step in the perfect regime, then matched multi-sine, unmatched constant,
/// unmatched multi-sine, and matched multi-sine with unmatched pulses in the
/// imperfect regime.
pub fn standard_rows() -> Vec<BatchRow> {
    let spec = |channel, signal| DisturbanceSpec::new(channel, signal);
    let row = |name: &str, regime, disturbances| BatchRow {
        name: name.into(),
        regime,
        disturbances,
        hold: None,
    };
    vec![
        row(
            "step",
            RegimeKind::Perfect,
            vec![spec(
                Channel::Task,
                Signal::Step {
                    amplitude: STEP_AMPLITUDE.to_vec(),
                    start: STEP_START,
                },
            )],
        ),
        row(
            "m_multi_sine",
            RegimeKind::Imperfect,
            vec![spec(
                Channel::Matched,
                Signal::default_multi_sine(&[MATCHED_SINE_SCALE; 2]),
            )],
        ),
        row(
            "u_constant",
            RegimeKind::Imperfect,
            vec![spec(
                Channel::Unmatched,
                Signal::Constant {
                    amplitude: UNMATCHED_CONSTANT.to_vec(),
                },
            )],
        ),
        row(
            "u_multi_sine",
            RegimeKind::Imperfect,
            vec![spec(
                Channel::Unmatched,
                Signal::default_multi_sine(&[UNMATCHED_SINE_SCALE; 2]),
            )],
        ),
        row(
            "m_multi_sine_u_pulses",
            RegimeKind::Imperfect,
            vec![
                spec(
                    Channel::Matched,
                    Signal::default_multi_sine(&[MATCHED_SINE_SCALE; 2]),
                ),
                spec(
                    Channel::Unmatched,
                    Signal::PulseTrain {
                        amplitude: UNMATCHED_PULSE.to_vec(),
                        windows: PULSE_WINDOWS.to_vec(),
                    },
                ),
            ],
        ),
    ]
}

/// One simulated run of a sweep.
#[derive(Clone, Debug, PartialEq)]
pub struct RunRecord {
    pub shape: String,
    pub regime: RegimeKind,
    pub disturbance: String,
    pub controller: ControllerKind,
    pub seed: u64,
    pub dtw_raw: f64,
    pub dtw_normalized: f64,
    pub truncated: bool,
    /// Failure message when the cell could not be simulated.
    pub error: Option<String>,
}

impl RunRecord {
    fn key(&self) -> (String, RegimeKind, String, ControllerKind, u64) {
        (
            self.shape.clone(),
            self.regime,
            self.disturbance.clone(),
            self.controller,
            self.seed,
        )
    }
}

/// Mean and sample standard deviation of the normalized score of one
/// (shape, regime, disturbance, controller) cell.
#[derive(Clone, Debug, PartialEq)]
pub struct ScoreRow {
    pub shape: String,
    pub regime: RegimeKind,
    pub disturbance: String,
    pub controller: ControllerKind,
    pub mean: f64,
    pub std: f64,
    pub count: usize,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ScoreTable {
    pub rows: Vec<ScoreRow>,
}

/// Shape label used for rows pooled over every shape.
pub const POOLED: &str = "all";

impl ScoreTable {
    /// Per-shape rows plus rows pooled over shapes, sorted by key. Failed
    /// runs are excluded.
    pub fn from_records(records: &[RunRecord]) -> Self {
        type Key = (String, RegimeKind, String, ControllerKind);
        let mut groups: BTreeMap<Key, Vec<f64>> = BTreeMap::new();
        for r in records.iter().filter(|r| r.error.is_none()) {
            for shape in [r.shape.as_str(), POOLED] {
                groups
                    .entry((shape.to_string(), r.regime, r.disturbance.clone(), r.controller))
                    .or_default()
                    .push(r.dtw_normalized);
            }
        }
        let rows = groups
            .into_iter()
            .map(|((shape, regime, disturbance, controller), v)| {
                let (mean, std) = mean_std(&v);
                ScoreRow {
                    shape,
                    regime,
                    disturbance,
                    controller,
                    mean,
                    std,
                    count: v.len(),
                }
            })
            .collect();
        Self { rows }
    }

    pub fn get(&self, shape: &str, disturbance: &str, controller: ControllerKind) -> Option<&ScoreRow> {
        self.rows
            .iter()
            .find(|r| r.shape == shape && r.disturbance == disturbance && r.controller == controller)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), CliError> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["shape", "regime", "disturbance", "controller", "mean", "std", "count"])
            .map_err(csv_err)?;
        for r in &self.rows {
            w.write_record([
                r.shape.clone(),
                r.regime.name().to_string(),
                r.disturbance.clone(),
                r.controller.name().to_string(),
                r.mean.to_string(),
                r.std.to_string(),
                r.count.to_string(),
            ])
            .map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn mean_std(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (mean, 0.0);
    }
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

fn csv_err(e: csv::Error) -> CliError {
    CliError::Io(e.to_string())
}

/// Writes one row per run:
/// `shape, regime, disturbance, controller, seed, dtw_raw, dtw_normalized, truncated, error`.
pub fn write_summary_csv<W: Write>(records: &[RunRecord], out: W) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "shape",
        "regime",
        "disturbance",
        "controller",
        "seed",
        "dtw_raw",
        "dtw_normalized",
        "truncated",
        "error",
    ])
    .map_err(csv_err)?;
    for r in records {
        w.write_record([
            r.shape.clone(),
            r.regime.name().to_string(),
            r.disturbance.clone(),
            r.controller.name().to_string(),
            r.seed.to_string(),
            r.dtw_raw.to_string(),
            r.dtw_normalized.to_string(),
            r.truncated.to_string(),
            r.error.clone().unwrap_or_default(),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Clone, Debug)]
pub struct BatchOutput {
    pub records: Vec<RunRecord>,
    pub table: ScoreTable,
}

impl BatchOutput {
    pub fn failures(&self) -> usize {
        self.records.iter().filter(|r| r.error.is_some()).count()
    }
}

fn shape_label(cfg: &ExperimentConfig) -> String {
    match cfg.demos.source {
        DemoSource::Synthetic => cfg.demos.shape.kind.name().to_string(),
        DemoSource::Directory => cfg
            .demos
            .path
            .as_ref()
            .and_then(|p| p.file_name())
            .map_or_else(|| "demos".to_string(), |n| n.to_string_lossy().into_owned()),
    }
}

/// Runs every cell of the sweep in parallel. Cell failures are recorded in
/// the returned records rather than aborting the batch.
pub fn run_batch(cfg: &ExperimentConfig) -> Result<BatchOutput, CliError> {
    if cfg.seeds.is_empty() {
        return Err(CliError::Config("seeds must not be empty".into()));
    }
    let rows = if cfg.batch.rows.is_empty() {
        standard_rows()
    } else {
        cfg.batch.rows.clone()
    };
    let mut controllers = cfg.batch.controllers.clone();
    controllers.sort();
    controllers.dedup();
    if !controllers.contains(&ControllerKind::Nominal) {
        // normalization needs the baseline
        controllers.insert(0, ControllerKind::Nominal);
    }
    let shape_cfgs: Vec<ExperimentConfig> = match cfg.demos.source {
        DemoSource::Synthetic => cfg
            .batch
            .shapes
            .iter()
            .map(|&kind| {
                let mut c = cfg.clone();
                c.demos.shape.kind = kind;
                c
            })
            .collect(),
        DemoSource::Directory => vec![cfg.clone()],
    };

    let fits: Vec<(usize, u64)> = (0..shape_cfgs.len())
        .flat_map(|s| cfg.seeds.iter().map(move |&seed| (s, seed)))
        .collect();
    let cells: Vec<Vec<RunRecord>> = fits
        .par_iter()
        .flat_map_iter(|&(s, seed)| {
            let scfg = &shape_cfgs[s];
            let label = shape_label(scfg);
            let prepared = prepare(scfg, seed);
            rows.iter()
                .map(|row| match &prepared {
                    Ok((_, sc)) => run_cell(scfg, sc, row, &controllers, &label, seed),
                    Err(e) => failed_cell(row, &controllers, &label, seed, e.to_string()),
                })
                .collect::<Vec<_>>()
        })
        .collect();
    let mut records: Vec<RunRecord> = cells.into_iter().flatten().collect();
    records.sort_by_key(RunRecord::key);
    let table = ScoreTable::from_records(&records);
    Ok(BatchOutput { records, table })
}

fn failed_cell(
    row: &BatchRow,
    controllers: &[ControllerKind],
    shape: &str,
    seed: u64,
    msg: String,
) -> Vec<RunRecord> {
    controllers
        .iter()
        .map(|&controller| RunRecord {
            shape: shape.to_string(),
            regime: row.regime,
            disturbance: row.name.clone(),
            controller,
            seed,
            dtw_raw: f64::NAN,
            dtw_normalized: f64::NAN,
            truncated: false,
            error: Some(msg.clone()),
        })
        .collect()
}

fn run_cell(
    cfg: &ExperimentConfig,
    sc: &l1ds_core::harness::Scenario<f64>,
    row: &BatchRow,
    controllers: &[ControllerKind],
    shape: &str,
    seed: u64,
) -> Vec<RunRecord> {
    let result = (|| -> Result<Vec<RunRecord>, CliError> {
        let dist = disturbances(&row.disturbances, None, row.hold)?;
        let run = |stack: &ControllerStack<f64>| -> Result<RunResult<f64>, CliError> {
            run_stack(sc, stack, row.regime, &dist, cfg.regime.pid, cfg.regime.windup_scale)
        };
        let mut runs = Vec::with_capacity(controllers.len());
        for &kind in controllers {
            runs.push((kind, run(&variant_stack(cfg, kind, sc.dim(), sc.dt)?)?));
        }
        let base = runs
            .iter()
            .find(|(k, _)| *k == ControllerKind::Nominal)
            .map(|(_, r)| r.dtw_raw)
            .expect("nominal baseline is always run");
        if base == 0.0 {
            return Err(l1ds_core::Error::DegenerateBaseline.into());
        }
        Ok(runs
            .into_iter()
            .map(|(controller, r)| RunRecord {
                shape: shape.to_string(),
                regime: row.regime,
                disturbance: row.name.clone(),
                controller,
                seed,
                dtw_raw: r.dtw_raw,
                dtw_normalized: r.dtw_raw / base,
                truncated: r.truncated,
                error: None,
            })
            .collect())
    })();
    result.unwrap_or_else(|e| failed_cell(row, controllers, shape, seed, e.to_string()))
}
