//! Capacity and reference-performance-test (RPT) ingestion.
//!
//! Both formats are plain CSV with a fixed header:
//!
//! * capacity logs: `cycle,capacity_ah`
//! * RPT curves: `voltage_v,capacity_ah`
//!
//! Decimal point is `.`, no thousands separators, LF or CRLF line endings.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spline::NaturalCubicSpline;

/// Shortest series the pipeline accepts (smoothing and segmentation windows
/// cannot be formed below this).
pub const MIN_SERIES_LEN: usize = 8;

/// Shortest RPT curve accepted after duplicate merging.
pub const MIN_RPT_LEN: usize = 16;

/// Largest voltage step against the sweep direction tolerated in an RPT curve.
pub const RPT_MONOTONE_TOLERANCE_V: f64 = 5e-3;

const UNIFORM_REL_TOL: f64 = 1e-9;

/// Per-cycle capacity measurements of one cell.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CapacitySeries {
    cell_id: String,
    cycle: Vec<f64>,
    capacity_ah: Vec<f64>,
    nominal_capacity_ah: f64,
    is_uniform: bool,
}

impl CapacitySeries {
    pub fn new(
        cell_id: impl Into<String>,
        cycle: Vec<f64>,
        capacity_ah: Vec<f64>,
        nominal_capacity_ah: f64,
    ) -> Result<Self> {
        if cycle.len() != capacity_ah.len() {
            return Err(Error::Contract(format!(
                "{} cycles but {} capacities",
                cycle.len(),
                capacity_ah.len()
            )));
        }
        if cycle.len() < MIN_SERIES_LEN {
            return Err(Error::InsufficientData {
                found: cycle.len(),
                required: MIN_SERIES_LEN,
            });
        }
        if !(nominal_capacity_ah.is_finite() && nominal_capacity_ah > 0.0) {
            return Err(Error::Domain(format!(
                "nominal capacity must be positive, got {nominal_capacity_ah}"
            )));
        }
        if let Some(c) = cycle.iter().find(|c| !(c.is_finite() && **c >= 0.0)) {
            return Err(Error::Domain(format!("cycle numbers must be non-negative, got {c}")));
        }
        if cycle.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Domain("cycle numbers must be strictly increasing".into()));
        }
        if let Some(q) = capacity_ah.iter().find(|q| !(q.is_finite() && **q > 0.0)) {
            return Err(Error::Domain(format!("capacity must be positive, got {q}")));
        }
        let is_uniform = gaps_uniform(&cycle);
        Ok(Self {
            cell_id: cell_id.into(),
            cycle,
            capacity_ah,
            nominal_capacity_ah,
            is_uniform,
        })
    }

    pub fn cell_id(&self) -> &str {
        &self.cell_id
    }

    pub fn cycle(&self) -> &[f64] {
        &self.cycle
    }

    pub fn capacity_ah(&self) -> &[f64] {
        &self.capacity_ah
    }

    pub fn nominal_capacity_ah(&self) -> f64 {
        self.nominal_capacity_ah
    }

    pub fn is_uniform(&self) -> bool {
        self.is_uniform
    }

    pub fn len(&self) -> usize {
        self.cycle.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cycle.is_empty()
    }

    /// Grid step of a uniform series, `None` otherwise.
    pub fn step(&self) -> Option<f64> {
        self.is_uniform
            .then(|| (self.cycle[self.cycle.len() - 1] - self.cycle[0]) / (self.cycle.len() - 1) as f64)
    }
}

fn gaps_uniform(cycle: &[f64]) -> bool {
    let (mut lo, mut hi, mut sum) = (f64::INFINITY, f64::NEG_INFINITY, 0.0);
    for w in cycle.windows(2) {
        let g = w[1] - w[0];
        lo = lo.min(g);
        hi = hi.max(g);
        sum += g;
    }
    let mean = sum / (cycle.len() - 1) as f64;
    hi - lo < UNIFORM_REL_TOL * mean
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Charge,
    Discharge,
}

/// One reference-performance-test voltage/capacity curve.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RptRecord {
    pub rpt_index: u32,
    pub cycle_at_rpt: f64,
    pub voltage_v: Vec<f64>,
    pub capacity_ah: Vec<f64>,
    pub direction: Direction,
}

impl RptRecord {
    /// Builds a record in sweep order. Consecutive equal voltages are merged
    /// (capacity averaged); samples stepping back against the sweep direction
    /// by no more than [`RPT_MONOTONE_TOLERANCE_V`] are dropped; larger
    /// excursions are rejected.
    pub fn new(
        rpt_index: u32,
        cycle_at_rpt: f64,
        voltage_v: Vec<f64>,
        capacity_ah: Vec<f64>,
        direction: Direction,
    ) -> Result<Self> {
        if voltage_v.len() != capacity_ah.len() {
            return Err(Error::Contract(format!(
                "{} voltages but {} capacities",
                voltage_v.len(),
                capacity_ah.len()
            )));
        }
        if !(cycle_at_rpt.is_finite() && cycle_at_rpt >= 0.0) {
            return Err(Error::Domain(format!(
                "cycle_at_rpt must be non-negative, got {cycle_at_rpt}"
            )));
        }
        if voltage_v.iter().chain(&capacity_ah).any(|v| !v.is_finite()) {
            return Err(Error::Domain("RPT curve contains non-finite values".into()));
        }

        // Sign so that the sweep direction is ascending.
        let sign = match direction {
            Direction::Charge => 1.0,
            Direction::Discharge => -1.0,
        };

        let mut v_out: Vec<f64> = Vec::with_capacity(voltage_v.len());
        let mut q_out: Vec<f64> = Vec::with_capacity(voltage_v.len());
        let mut i = 0;
        while i < voltage_v.len() {
            let v = voltage_v[i];
            let mut j = i + 1;
            let mut q_sum = capacity_ah[i];
            while j < voltage_v.len() && voltage_v[j] == v {
                q_sum += capacity_ah[j];
                j += 1;
            }
            let q = q_sum / (j - i) as f64;
            i = j;

            match v_out.last() {
                Some(&last) if sign * (v - last) <= 0.0 => {
                    let back = sign * (last - v);
                    if back > RPT_MONOTONE_TOLERANCE_V {
                        return Err(Error::Domain(format!(
                            "voltage moves {:.1} mV against the {} direction at {v} V",
                            back * 1e3,
                            match direction {
                                Direction::Charge => "charge",
                                Direction::Discharge => "discharge",
                            }
                        )));
                    }
                }
                _ => {
                    v_out.push(v);
                    q_out.push(q);
                }
            }
        }

        if v_out.len() < MIN_RPT_LEN {
            return Err(Error::InsufficientData {
                found: v_out.len(),
                required: MIN_RPT_LEN,
            });
        }
        Ok(Self {
            rpt_index,
            cycle_at_rpt,
            voltage_v: v_out,
            capacity_ah: q_out,
            direction,
        })
    }

    pub fn len(&self) -> usize {
        self.voltage_v.len()
    }

    pub fn is_empty(&self) -> bool {
        self.voltage_v.is_empty()
    }
}

/// Reads two numeric columns under an exact header.
fn read_two_columns<R: Read>(source: R, header: [&str; 2]) -> Result<Vec<(u64, f64, f64)>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(source);

    let found = reader.headers().map_err(|e| csv_error(e, 1))?.clone();
    let names: Vec<&str> = found.iter().collect();
    if names != header {
        return Err(Error::Parse {
            line: 1,
            message: format!("expected header `{}`, found `{}`", header.join(","), names.join(",")),
        });
    }

    let mut rows = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| csv_error(e, 0))?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() != 2 {
            return Err(Error::Parse {
                line,
                message: format!("expected 2 columns, found {}", rec.len()),
            });
        }
        let field = |k: usize| -> Result<f64> {
            let raw = &rec[k];
            raw.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::Parse {
                    line,
                    message: format!("column `{}`: `{raw}` is not a finite number", header[k]),
                })
        };
        rows.push((line, field(0)?, field(1)?));
    }
    Ok(rows)
}

fn csv_error(e: csv::Error, fallback_line: u64) -> Error {
    let line = e.position().map_or(fallback_line, |p| p.line());
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Parse {
            line,
            message: format!("{other:?}"),
        },
    }
}

/// Parses a `cycle,capacity_ah` CSV. Rows are sorted by cycle; when a cycle
/// number repeats, the row appearing last in the file wins.
pub fn parse_capacity_csv<R: Read>(
    source: R,
    cell_id: &str,
    nominal_capacity_ah: f64,
) -> Result<CapacitySeries> {
    let rows = read_two_columns(source, ["cycle", "capacity_ah"])?;
    for &(line, cycle, q) in &rows {
        if cycle < 0.0 {
            return Err(Error::Domain(format!("line {line}: negative cycle number {cycle}")));
        }
        if q <= 0.0 {
            return Err(Error::Domain(format!("line {line}: capacity must be positive, got {q}")));
        }
    }

    // Stable sort keeps file order among equal cycles, so the last one is the latest.
    let mut rows = rows;
    rows.sort_by(|a, b| a.1.total_cmp(&b.1));
    let mut cycle: Vec<f64> = Vec::with_capacity(rows.len());
    let mut capacity: Vec<f64> = Vec::with_capacity(rows.len());
    for (_, c, q) in rows {
        if cycle.last() == Some(&c) {
            *capacity.last_mut().unwrap() = q;
        } else {
            cycle.push(c);
            capacity.push(q);
        }
    }
    CapacitySeries::new(cell_id, cycle, capacity, nominal_capacity_ah)
}

/// Writes a series in the capacity CSV format. Values use the shortest
/// representation that parses back to the same `f64`.
pub fn write_capacity_csv<W: Write>(series: &CapacitySeries, mut sink: W) -> Result<()> {
    writeln!(sink, "cycle,capacity_ah")?;
    for (c, q) in series.cycle.iter().zip(&series.capacity_ah) {
        writeln!(sink, "{c},{q}")?;
    }
    Ok(())
}

/// Parses a `voltage_v,capacity_ah` CSV given in sweep order.
pub fn parse_rpt_csv<R: Read>(
    source: R,
    rpt_index: u32,
    cycle_at_rpt: f64,
    direction: Direction,
) -> Result<RptRecord> {
    let rows = read_two_columns(source, ["voltage_v", "capacity_ah"])?;
    let (voltage, capacity) = rows.into_iter().map(|(_, v, q)| (v, q)).unzip();
    RptRecord::new(rpt_index, cycle_at_rpt, voltage, capacity, direction)
}

/// Re-samples a series onto `cycle[0], cycle[0] + step, ...` (not beyond the
/// last cycle) through a natural cubic spline.
pub fn resample_uniform(series: &CapacitySeries, grid_step: f64) -> Result<CapacitySeries> {
    if !(grid_step.is_finite() && grid_step > 0.0) {
        return Err(Error::Domain(format!("grid step must be positive, got {grid_step}")));
    }
    let first = series.cycle[0];
    let span = series.cycle[series.len() - 1] - first;
    if grid_step > span {
        return Err(Error::Domain(format!(
            "grid step {grid_step} exceeds the series span {span}"
        )));
    }

    let spline = NaturalCubicSpline::fit(&series.cycle, &series.capacity_ah)?;
    let n = (span / grid_step * (1.0 + 1e-12)).floor() as usize + 1;
    let cycle: Vec<f64> = (0..n).map(|k| first + k as f64 * grid_step).collect();
    let capacity: Vec<f64> = cycle.iter().map(|&c| spline.eval(c)).collect();
    let mut out = CapacitySeries::new(
        series.cell_id.clone(),
        cycle,
        capacity,
        series.nominal_capacity_ah,
    )?;
    // Grid points are k·step offsets by construction; floating-point rounding in
    // large cycle numbers must not flip the flag.
    out.is_uniform = true;
    Ok(out)
}
