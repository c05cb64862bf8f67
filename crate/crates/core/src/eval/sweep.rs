use std::io::Write;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::column::{synthesize_all, LocalizedClm, SynthesisOptions};
use crate::json::fmt_f64;
use crate::netmodel::{
    adjacency_from_plant, chain_benchmark, d_hop_pattern, ChainParams, CostWeights, Pattern, PatternRole, Plant,
};

use super::{fir_cost, fir_synthesize, h2_cost_lyapunov, EvalError, FirClm, FirOptions};

/// FIR horizon sweep on one chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HorizonSweep {
    pub chain: ChainParams,
    pub d: usize,
    pub horizons: Vec<usize>,
}

/// Chain-length sweep at a fixed FIR horizon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SizeSweep {
    pub chain: ChainParams,
    pub d: usize,
    pub sizes: Vec<usize>,
    pub fir_horizon: usize,
    /// Timed repetitions per point; per-column times are medians over them.
    /// With more than one repetition an untimed warm-up run comes first.
    pub repeats: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SweepConfig {
    Horizon(HorizonSweep),
    Size(SizeSweep),
}

/// Deterministic part of one sweep point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    /// `"T"` or `"N"`.
    pub parameter: &'static str,
    pub value: usize,
    pub n: usize,
    pub horizon: usize,
    pub ih_cost: Option<f64>,
    pub fir_cost: Option<f64>,
    pub fir_feasible: bool,
    pub fir_infeasible_columns: usize,
    pub ih_restricted_columns: usize,
    pub median_fir_variables: usize,
    pub max_fir_variables: usize,
    pub note: String,
}

/// Wall-clock measurements of one sweep point, in seconds.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TimingRow {
    pub parameter: &'static str,
    pub value: usize,
    pub ih_median_column: f64,
    pub ih_max_column: f64,
    pub ih_serial_total: f64,
    pub fir_median_column: Option<f64>,
    pub fir_max_column: Option<f64>,
    pub fir_serial_total: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct SweepTable {
    pub rows: Vec<SweepRow>,
    pub timings: Vec<TimingRow>,
}

/// `(loc, comm)` as the `d`- and `(d+1)`-hop patterns of the plant adjacency.
pub fn chain_patterns(plant: &Plant, d: usize) -> (Pattern, Pattern) {
    let adj = adjacency_from_plant(plant);
    (
        d_hop_pattern(&adj, d).with_role(PatternRole::Localization),
        d_hop_pattern(&adj, d + 1).with_role(PatternRole::Communication),
    )
}

pub fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn secs(d: &[Duration]) -> Vec<f64> {
    d.iter().map(Duration::as_secs_f64).collect()
}

/// Per-column median over repetitions, then `(median, max, serial total)`
/// across columns.
fn summarize(runs: &[Vec<Duration>], totals: &[Duration]) -> (f64, f64, f64) {
    let ncols = runs[0].len();
    let per_column: Vec<f64> = (0..ncols)
        .map(|c| median(&runs.iter().map(|r| r[c].as_secs_f64()).collect::<Vec<_>>()))
        .collect();
    (
        median(&per_column),
        per_column.iter().copied().fold(0.0, f64::max),
        median(&secs(totals)),
    )
}

/// Last result, per-run column times and per-run totals.
type Timed<T> = (T, Vec<Vec<Duration>>, Vec<Duration>);

struct PointResult {
    row: SweepRow,
    timing: TimingRow,
}

fn serial() -> SynthesisOptions {
    SynthesisOptions {
        parallel: false,
        ..Default::default()
    }
}

fn timed_ih(
    plant: &Plant,
    loc: &Pattern,
    comm: &Pattern,
    w: &CostWeights,
    repeats: usize,
) -> Result<Timed<LocalizedClm>, EvalError> {
    let mut runs = Vec::new();
    let mut totals = Vec::new();
    let mut last = None;
    if repeats > 1 {
        synthesize_all(plant, loc, comm, w, &serial())?;
    }
    for _ in 0..repeats.max(1) {
        let start = Instant::now();
        let clm = synthesize_all(plant, loc, comm, w, &serial())?;
        totals.push(start.elapsed());
        runs.push(clm.column_times());
        last = Some(clm);
    }
    Ok((last.expect("at least one run"), runs, totals))
}

fn timed_fir(
    plant: &Plant,
    loc: &Pattern,
    comm: &Pattern,
    w: &CostWeights,
    horizon: usize,
    repeats: usize,
) -> Result<Timed<FirClm>, EvalError> {
    let opts = FirOptions::default();
    let mut runs = Vec::new();
    let mut totals = Vec::new();
    let mut last = None;
    if repeats > 1 {
        fir_synthesize(plant, loc, comm, w, horizon, &opts)?;
    }
    for _ in 0..repeats.max(1) {
        let start = Instant::now();
        let fir = fir_synthesize(plant, loc, comm, w, horizon, &opts)?;
        totals.push(start.elapsed());
        runs.push(fir.column_times());
        last = Some(fir);
    }
    Ok((last.expect("at least one run"), runs, totals))
}

fn run_point(
    parameter: &'static str,
    value: usize,
    chain: &ChainParams,
    d: usize,
    horizon: usize,
    repeats: usize,
    ih_cache: Option<&(f64, usize, TimingRow)>,
) -> Result<PointResult, EvalError> {
    let (plant, w) = chain_benchmark(chain)?;
    let (loc, comm) = chain_patterns(&plant, d);
    let mut note = Vec::new();

    let (ih_cost, restricted, ih_timing) = match ih_cache {
        Some((c, r, t)) => (Some(*c), *r, t.clone()),
        None => match timed_ih(&plant, &loc, &comm, &w, repeats) {
            Ok((clm, runs, totals)) => {
                let (med, max, total) = summarize(&runs, &totals);
                let cost = h2_cost_lyapunov(&clm, &w)?.total;
                let t = TimingRow {
                    parameter,
                    value,
                    ih_median_column: med,
                    ih_max_column: max,
                    ih_serial_total: total,
                    fir_median_column: None,
                    fir_max_column: None,
                    fir_serial_total: None,
                };
                (Some(cost), clm.restricted_columns().len(), t)
            }
            Err(e) => {
                note.push(format!("ih:{}", e.code()));
                let t = TimingRow {
                    parameter,
                    value,
                    ih_median_column: f64::NAN,
                    ih_max_column: f64::NAN,
                    ih_serial_total: f64::NAN,
                    fir_median_column: None,
                    fir_max_column: None,
                    fir_serial_total: None,
                };
                (None, 0, t)
            }
        },
    };

    let mut row = SweepRow {
        parameter,
        value,
        n: chain.n,
        horizon,
        ih_cost,
        fir_cost: None,
        fir_feasible: false,
        fir_infeasible_columns: 0,
        ih_restricted_columns: restricted,
        median_fir_variables: 0,
        max_fir_variables: 0,
        note: String::new(),
    };
    let mut timing = TimingRow {
        parameter,
        value,
        ..ih_timing
    };
    match timed_fir(&plant, &loc, &comm, &w, horizon, repeats) {
        Ok((fir, runs, totals)) => {
            let (med, max, total) = summarize(&runs, &totals);
            let mut vars: Vec<usize> = fir.columns.iter().map(|c| c.variables).collect();
            vars.sort_unstable();
            row.fir_feasible = true;
            row.fir_cost = Some(fir_cost(&fir, &w));
            row.median_fir_variables = vars[vars.len() / 2];
            row.max_fir_variables = *vars.last().unwrap_or(&0);
            timing.fir_median_column = Some(med);
            timing.fir_max_column = Some(max);
            timing.fir_serial_total = Some(total);
        }
        Err(EvalError::FirInfeasible { columns, .. }) => {
            row.fir_infeasible_columns = columns.len();
            note.push("fir:infeasible".into());
        }
        Err(e) => note.push(format!("fir:{}", e.code())),
    }
    row.note = note.join(";");
    Ok(PointResult { row, timing })
}

/// Runs a horizon or size sweep.
pub fn benchmark_sweep(config: &SweepConfig) -> Result<SweepTable, EvalError> {
    let mut table = SweepTable::default();
    match config {
        SweepConfig::Horizon(h) => {
            if h.horizons.is_empty() {
                return Ok(table);
            }
            // The infinite-horizon point does not depend on T.
            let first = run_point("T", h.horizons[0], &h.chain, h.d, h.horizons[0], 1, None)?;
            let cache = (
                first.row.ih_cost.unwrap_or(f64::NAN),
                first.row.ih_restricted_columns,
                first.timing.clone(),
            );
            let cache_ok = first.row.ih_cost.is_some();
            table.rows.push(first.row);
            table.timings.push(first.timing);
            for &t in &h.horizons[1..] {
                let p = run_point("T", t, &h.chain, h.d, t, 1, cache_ok.then_some(&cache))?;
                table.rows.push(p.row);
                table.timings.push(p.timing);
            }
        }
        SweepConfig::Size(s) => {
            for &n in &s.sizes {
                let chain = ChainParams { n, ..s.chain };
                let p = run_point("N", n, &chain, s.d, s.fir_horizon, s.repeats, None)?;
                table.rows.push(p.row);
                table.timings.push(p.timing);
            }
        }
    }
    Ok(table)
}

fn opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], out: W) -> Result<(), EvalError> {
    let mut wtr = csv::Writer::from_writer(out);
    wtr.write_record([
        "parameter",
        "value",
        "n",
        "horizon",
        "ih_cost",
        "fir_cost",
        "fir_feasible",
        "fir_infeasible_columns",
        "ih_restricted_columns",
        "median_fir_variables",
        "max_fir_variables",
        "note",
    ])
    .map_err(EvalError::io)?;
    for r in rows {
        wtr.write_record([
            r.parameter.to_string(),
            r.value.to_string(),
            r.n.to_string(),
            r.horizon.to_string(),
            opt(r.ih_cost),
            opt(r.fir_cost),
            r.fir_feasible.to_string(),
            r.fir_infeasible_columns.to_string(),
            r.ih_restricted_columns.to_string(),
            r.median_fir_variables.to_string(),
            r.max_fir_variables.to_string(),
            r.note.clone(),
        ])
        .map_err(EvalError::io)?;
    }
    wtr.flush().map_err(EvalError::io)
}

pub fn write_timing_csv<W: Write>(rows: &[TimingRow], out: W) -> Result<(), EvalError> {
    let mut wtr = csv::Writer::from_writer(out);
    wtr.write_record([
        "parameter",
        "value",
        "ih_median_column_s",
        "ih_max_column_s",
        "ih_serial_total_s",
        "fir_median_column_s",
        "fir_max_column_s",
        "fir_serial_total_s",
    ])
    .map_err(EvalError::io)?;
    for r in rows {
        wtr.write_record([
            r.parameter.to_string(),
            r.value.to_string(),
            fmt_f64(r.ih_median_column),
            fmt_f64(r.ih_max_column),
            fmt_f64(r.ih_serial_total),
            opt(r.fir_median_column),
            opt(r.fir_max_column),
            opt(r.fir_serial_total),
        ])
        .map_err(EvalError::io)?;
    }
    wtr.flush().map_err(EvalError::io)
}
