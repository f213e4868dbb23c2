//! CSV artifact writers and the matching readers. One dialect everywhere:
//! comma separator, '.' decimal point, a header row, LF line endings, floats
//! in shortest round-trip decimal form. Every file written here can be read
//! back by the reader next to it.

use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use crate::dynamics::{MonitorRecord, Snapshot, Trajectory};
use crate::error::{Error, Result};
use crate::functionals::{FunctionalReport, LedgerRow, Weight};
use crate::inequality_lab::{LocalExpansionRow, PhiBoundsReport, PoincareSearchResult};
use crate::limits::{SweepMember, SweepReport};
use crate::profiles::ShockProfile;
use crate::shift::ShiftTrace;

fn make_writer(path: &Path) -> Result<csv::Writer<BufWriter<File>>> {
    let file = File::create(path)?;
    Ok(csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(BufWriter::new(file)))
}

fn fmt(x: f64) -> String {
    format!("{x}")
}

fn parse_f64(path: &Path, record: usize, field: &str, raw: &str) -> Result<f64> {
    raw.trim().parse::<f64>().map_err(|_| {
        Error::Domain(format!(
            "{}: record {record}: field {field} = {raw:?} is not a number",
            path.display()
        ))
    })
}

/// Reads a CSV whose header must equal `expected`, returning one f64 column
/// per header entry.
fn read_f64_columns(path: &Path, expected: &[&str]) -> Result<Vec<Vec<f64>>> {
    let mut reader = csv::Reader::from_path(path)?;
    let headers = reader.headers()?.clone();
    if headers.len() != expected.len() || headers.iter().zip(expected).any(|(h, e)| h != *e) {
        return Err(Error::Domain(format!(
            "{}: header {:?} does not match expected {:?}",
            path.display(),
            headers.iter().collect::<Vec<_>>(),
            expected
        )));
    }
    let mut columns = vec![Vec::new(); expected.len()];
    for (row, record) in reader.records().enumerate() {
        let record = record?;
        if record.len() != expected.len() {
            return Err(Error::Domain(format!(
                "{}: record {row} has {} fields, expected {}",
                path.display(),
                record.len(),
                expected.len()
            )));
        }
        for (k, raw) in record.iter().enumerate() {
            columns[k].push(parse_f64(path, row, expected[k], raw)?);
        }
    }
    Ok(columns)
}

// ---------------------------------------------------------------------------
// Profile
// ---------------------------------------------------------------------------

const PROFILE_HEADER: [&str; 6] = ["xi", "v", "u", "h", "dv", "a"];

/// Columns of a stored profile file.
#[derive(Debug, Clone)]
pub struct ProfileTable {
    pub xi: Vec<f64>,
    pub v: Vec<f64>,
    pub u: Vec<f64>,
    pub h: Vec<f64>,
    pub dv: Vec<f64>,
    pub a: Vec<f64>,
}

pub fn write_profile_csv(path: &Path, profile: &ShockProfile, weight: &Weight) -> Result<()> {
    let n = profile.grid.n;
    if weight.a.len() != n {
        return Err(Error::GridMismatch(format!(
            "weight has {} nodes, profile has {n}",
            weight.a.len()
        )));
    }
    let mut writer = make_writer(path)?;
    writer.write_record(PROFILE_HEADER)?;
    for i in 0..n {
        writer.write_record([
            fmt(profile.grid.xi[i]),
            fmt(profile.v[i]),
            fmt(profile.u[i]),
            fmt(profile.h[i]),
            fmt(profile.dv[i]),
            fmt(weight.a[i]),
        ])?;
    }
    writer.flush().map_err(Error::Io)?;
    Ok(())
}

pub fn read_profile_csv(path: &Path) -> Result<ProfileTable> {
    let mut cols = read_f64_columns(path, &PROFILE_HEADER)?;
    let a = cols.pop().unwrap();
    let dv = cols.pop().unwrap();
    let h = cols.pop().unwrap();
    let u = cols.pop().unwrap();
    let v = cols.pop().unwrap();
    let xi = cols.pop().unwrap();
    Ok(ProfileTable { xi, v, u, h, dv, a })
}

// ---------------------------------------------------------------------------
// Shift trace
// ---------------------------------------------------------------------------

const TRACE_HEADER: [&str; 12] = [
    "t",
    "X",
    "Xdot",
    "wre",
    "Gv_accum",
    "D_accum",
    "identity_residual",
    "f_bound",
    "Y",
    "Jbad",
    "Jpara",
    "Jgood",
];

pub fn write_trace_csv(path: &Path, trace: &ShiftTrace) -> Result<()> {
    let mut writer = make_writer(path)?;
    writer.write_record(TRACE_HEADER)?;
    for k in 0..trace.len() {
        writer.write_record([
            fmt(trace.times[k]),
            fmt(trace.x[k]),
            fmt(trace.x_dot[k]),
            fmt(trace.wre[k]),
            fmt(trace.gv_accum[k]),
            fmt(trace.d_accum[k]),
            fmt(trace.identity_residual[k]),
            fmt(trace.f_bound[k]),
            fmt(trace.y[k]),
            fmt(trace.j_bad[k]),
            fmt(trace.j_para[k]),
            fmt(trace.j_good[k]),
        ])?;
    }
    writer.flush().map_err(Error::Io)?;
    Ok(())
}

/// Reads a stored shift trace. The in-memory-only accumulators used by the
/// viscosity sweep are not part of the file format and come back empty.
pub fn read_trace_csv(path: &Path) -> Result<ShiftTrace> {
    let mut cols = read_f64_columns(path, &TRACE_HEADER)?;
    let mut take = || cols.remove(0);
    Ok(ShiftTrace {
        times: take(),
        x: take(),
        x_dot: take(),
        wre: take(),
        gv_accum: take(),
        d_accum: take(),
        identity_residual: take(),
        f_bound: take(),
        y: take(),
        j_bad: take(),
        j_para: take(),
        j_good: take(),
        eta_plain: Vec::new(),
        layer_phi_accum: Vec::new(),
        diss_plain_accum: Vec::new(),
    })
}

// ---------------------------------------------------------------------------
// Snapshots and monitors
// ---------------------------------------------------------------------------

const SNAPSHOT_HEADER: [&str; 5] = ["t", "xi", "v", "h", "u"];

/// Flat table of snapshot rows (one row per time-node pair).
#[derive(Debug, Clone)]
pub struct SnapshotTable {
    pub t: Vec<f64>,
    pub xi: Vec<f64>,
    pub v: Vec<f64>,
    pub h: Vec<f64>,
    pub u: Vec<f64>,
}

pub fn write_snapshots_csv(path: &Path, trajectory: &Trajectory, xi: &[f64]) -> Result<()> {
    let mut writer = make_writer(path)?;
    writer.write_record(SNAPSHOT_HEADER)?;
    for snapshot in &trajectory.snapshots {
        if snapshot.v.len() != xi.len() {
            return Err(Error::GridMismatch(format!(
                "snapshot at t = {} has {} nodes, grid has {}",
                snapshot.t,
                snapshot.v.len(),
                xi.len()
            )));
        }
        for (i, &x) in xi.iter().enumerate() {
            writer.write_record([
                fmt(snapshot.t),
                fmt(x),
                fmt(snapshot.v[i]),
                fmt(snapshot.h[i]),
                fmt(snapshot.u[i]),
            ])?;
        }
    }
    writer.flush().map_err(Error::Io)?;
    Ok(())
}

pub fn read_snapshots_csv(path: &Path) -> Result<SnapshotTable> {
    let mut cols = read_f64_columns(path, &SNAPSHOT_HEADER)?;
    let u = cols.pop().unwrap();
    let h = cols.pop().unwrap();
    let v = cols.pop().unwrap();
    let xi = cols.pop().unwrap();
    let t = cols.pop().unwrap();
    Ok(SnapshotTable { t, xi, v, h, u })
}

/// Regroups a flat snapshot table into per-time snapshots (rows are grouped
/// by consecutive equal t).
pub fn snapshots_from_table(table: &SnapshotTable) -> Vec<Snapshot> {
    let mut out: Vec<Snapshot> = Vec::new();
    for k in 0..table.t.len() {
        let start_new = out.last().map(|s| s.t != table.t[k]).unwrap_or(true);
        if start_new {
            out.push(Snapshot {
                t: table.t[k],
                v: Vec::new(),
                h: Vec::new(),
                u: Vec::new(),
            });
        }
        let snap = out.last_mut().unwrap();
        snap.v.push(table.v[k]);
        snap.h.push(table.h[k]);
        snap.u.push(table.u[k]);
    }
    out
}

const MONITOR_HEADER: [&str; 6] =
    ["t", "min_v", "max_v", "mass_defect", "entropy_residual", "boundary_leak"];

pub fn write_monitor_csv(path: &Path, records: &[MonitorRecord]) -> Result<()> {
    let mut writer = make_writer(path)?;
    writer.write_record(MONITOR_HEADER)?;
    for r in records {
        writer.write_record([
            fmt(r.t),
            fmt(r.min_v),
            fmt(r.max_v),
            fmt(r.mass_defect),
            fmt(r.entropy_residual),
            fmt(r.boundary_leak),
        ])?;
    }
    writer.flush().map_err(Error::Io)?;
    Ok(())
}

pub fn read_monitor_csv(path: &Path) -> Result<Vec<MonitorRecord>> {
    let cols = read_f64_columns(path, &MONITOR_HEADER)?;
    Ok((0..cols[0].len())
        .map(|k| MonitorRecord {
            t: cols[0][k],
            min_v: cols[1][k],
            max_v: cols[2][k],
            mass_defect: cols[3][k],
            entropy_residual: cols[4][k],
            boundary_leak: cols[5][k],
        })
        .collect())
}

// ---------------------------------------------------------------------------
// Functional reports and the inequality ledger
// ---------------------------------------------------------------------------

pub fn write_reports_csv(path: &Path, reports: &[FunctionalReport]) -> Result<()> {
    let mut writer = make_writer(path)?;
    for report in reports {
        writer.serialize(report)?;
    }
    writer.flush().map_err(Error::Io)?;
    Ok(())
}

pub fn read_reports_csv(path: &Path) -> Result<Vec<FunctionalReport>> {
    let mut reader = csv::Reader::from_path(path)?;
    let mut out = Vec::new();
    for record in reader.deserialize() {
        out.push(record?);
    }
    Ok(out)
}

const LEDGER_HEADER: [&str; 3] = ["inequality-id", "empirical-ratio", "n-samples"];

pub fn write_ledger_csv(path: &Path, rows: &[LedgerRow]) -> Result<()> {
    let mut writer = make_writer(path)?;
    writer.write_record(LEDGER_HEADER)?;
    for row in rows {
        writer.write_record([
            row.id.clone(),
            row.ratio.map(fmt).unwrap_or_default(),
            format!("{}", row.n_samples),
        ])?;
    }
    writer.flush().map_err(Error::Io)?;
    Ok(())
}

pub fn read_ledger_csv(path: &Path) -> Result<Vec<LedgerRow>> {
    let mut reader = csv::Reader::from_path(path)?;
    let headers = reader.headers()?.clone();
    if headers.iter().ne(LEDGER_HEADER) {
        return Err(Error::Domain(format!(
            "{}: header {:?} does not match expected {:?}",
            path.display(),
            headers.iter().collect::<Vec<_>>(),
            LEDGER_HEADER
        )));
    }
    let mut out = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record = record?;
        let ratio = match record.get(1).unwrap_or("").trim() {
            "" => None,
            raw => Some(parse_f64(path, row, "empirical-ratio", raw)?),
        };
        let n_samples = record
            .get(2)
            .unwrap_or("")
            .trim()
            .parse::<usize>()
            .map_err(|_| {
                Error::Domain(format!(
                    "{}: record {row}: field n-samples is not an integer",
                    path.display()
                ))
            })?;
        out.push(LedgerRow {
            id: record.get(0).unwrap_or("").to_string(),
            ratio,
            n_samples,
        });
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Viscosity sweep summary
// ---------------------------------------------------------------------------

const SWEEP_HEADER: [&str; 8] = [
    "nu",
    "E0",
    "drift_ratio",
    "sup_eta",
    "layer_entropy",
    "dissipation",
    "l1_gap_prev",
    "status",
];

/// One row of the sweep summary: member viscosity, initial energy, shift
/// drift ratio, the three uniform-estimate bounds, the L1 gap to the previous
/// successful member (absent for the first), and the member status.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSummaryRow {
    pub nu: f64,
    pub e0: f64,
    pub drift_ratio: f64,
    pub sup_eta: f64,
    pub layer_entropy: f64,
    pub dissipation: f64,
    pub l1_gap_prev: Option<f64>,
    pub status: String,
}

/// Flattens a sweep report into summary rows. Failed members carry NaN
/// statistics and the error text in the status column.
pub fn sweep_summary_rows(report: &SweepReport) -> Vec<SweepSummaryRow> {
    let mut rows = Vec::with_capacity(report.members.len());
    let mut successful = 0usize;
    for member in &report.members {
        match &member.outcome {
            Ok(data) => {
                let l1_gap_prev = if successful > 0 {
                    report.l1_gaps.get(successful - 1).copied()
                } else {
                    None
                };
                successful += 1;
                rows.push(SweepSummaryRow {
                    nu: member.nu,
                    e0: data.e0,
                    drift_ratio: data.drift_ratio,
                    sup_eta: data.triple[0],
                    layer_entropy: data.triple[1],
                    dissipation: data.triple[2],
                    l1_gap_prev,
                    status: if data.verdict_pass { "ok".to_string() } else { "verdict-fail".to_string() },
                });
            }
            Err(message) => rows.push(SweepSummaryRow {
                nu: member.nu,
                e0: f64::NAN,
                drift_ratio: f64::NAN,
                sup_eta: f64::NAN,
                layer_entropy: f64::NAN,
                dissipation: f64::NAN,
                l1_gap_prev: None,
                status: format!("error: {message}"),
            }),
        }
    }
    rows
}

pub fn write_sweep_csv(path: &Path, rows: &[SweepSummaryRow]) -> Result<()> {
    let mut writer = make_writer(path)?;
    writer.write_record(SWEEP_HEADER)?;
    for row in rows {
        writer.write_record([
            fmt(row.nu),
            fmt(row.e0),
            fmt(row.drift_ratio),
            fmt(row.sup_eta),
            fmt(row.layer_entropy),
            fmt(row.dissipation),
            row.l1_gap_prev.map(fmt).unwrap_or_default(),
            row.status.clone(),
        ])?;
    }
    writer.flush().map_err(Error::Io)?;
    Ok(())
}

pub fn read_sweep_csv(path: &Path) -> Result<Vec<SweepSummaryRow>> {
    let mut reader = csv::Reader::from_path(path)?;
    let headers = reader.headers()?.clone();
    if headers.iter().ne(SWEEP_HEADER) {
        return Err(Error::Domain(format!(
            "{}: header {:?} does not match expected {:?}",
            path.display(),
            headers.iter().collect::<Vec<_>>(),
            SWEEP_HEADER
        )));
    }
    let mut out = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record = record?;
        let get = |k: usize| record.get(k).unwrap_or("");
        let l1_gap_prev = match get(6).trim() {
            "" => None,
            raw => Some(parse_f64(path, row, "l1_gap_prev", raw)?),
        };
        out.push(SweepSummaryRow {
            nu: parse_f64(path, row, "nu", get(0))?,
            e0: parse_f64(path, row, "E0", get(1))?,
            drift_ratio: parse_f64(path, row, "drift_ratio", get(2))?,
            sup_eta: parse_f64(path, row, "sup_eta", get(3))?,
            layer_entropy: parse_f64(path, row, "layer_entropy", get(4))?,
            dissipation: parse_f64(path, row, "dissipation", get(5))?,
            l1_gap_prev,
            status: get(7).to_string(),
        });
    }
    Ok(out)
}

/// File name of the per-member shift trace inside a sweep output directory.
pub fn member_trace_name(member: &SweepMember) -> String {
    format!("trace_nu_{}.csv", fmt(member.nu).replace('.', "p"))
}

const SENSITIVITY_HEADER: [&str; 4] =
    ["delta3", "inequality-id", "empirical-ratio", "n-samples"];

/// Writes ledger rows recomputed at several truncation thresholds.
pub fn write_ledger_sensitivity_csv(
    path: &Path,
    blocks: &[(f64, Vec<LedgerRow>)],
) -> Result<()> {
    let mut writer = make_writer(path)?;
    writer.write_record(SENSITIVITY_HEADER)?;
    for (delta3, rows) in blocks {
        for row in rows {
            writer.write_record([
                fmt(*delta3),
                row.id.clone(),
                row.ratio.map(fmt).unwrap_or_default(),
                format!("{}", row.n_samples),
            ])?;
        }
    }
    writer.flush().map_err(Error::Io)?;
    Ok(())
}

pub fn read_ledger_sensitivity_csv(path: &Path) -> Result<Vec<(f64, LedgerRow)>> {
    let mut reader = csv::Reader::from_path(path)?;
    let headers = reader.headers()?.clone();
    if headers.iter().ne(SENSITIVITY_HEADER) {
        return Err(Error::Domain(format!(
            "{}: header {:?} does not match expected {:?}",
            path.display(),
            headers.iter().collect::<Vec<_>>(),
            SENSITIVITY_HEADER
        )));
    }
    let mut out = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record = record?;
        let get = |k: usize| record.get(k).unwrap_or("");
        let ratio = match get(2).trim() {
            "" => None,
            raw => Some(parse_f64(path, row, "empirical-ratio", raw)?),
        };
        let n_samples = get(3).trim().parse::<usize>().map_err(|_| {
            Error::Domain(format!(
                "{}: record {row}: field n-samples is not an integer",
                path.display()
            ))
        })?;
        out.push((
            parse_f64(path, row, "delta3", get(0))?,
            LedgerRow { id: get(1).to_string(), ratio, n_samples },
        ));
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Functional inequality search output
// ---------------------------------------------------------------------------

const POINCARE_HEADER: [&str; 2] = ["y", "W"];

/// Writes the maximizing test function of the inequality search as (y, W).
pub fn write_poincare_csv(path: &Path, result: &PoincareSearchResult) -> Result<()> {
    let mut writer = make_writer(path)?;
    writer.write_record(POINCARE_HEADER)?;
    for (y, w) in result.y.iter().zip(&result.argmax_w) {
        writer.write_record([fmt(*y), fmt(*w)])?;
    }
    writer.flush().map_err(Error::Io)?;
    Ok(())
}

pub fn read_poincare_csv(path: &Path) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut cols = read_f64_columns(path, &POINCARE_HEADER)?;
    let w = cols.pop().unwrap();
    let y = cols.pop().unwrap();
    Ok((y, w))
}

const POINCARE_SUMMARY_HEADER: [&str; 5] = ["delta", "c1", "n_samples", "seed", "max_r"];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoincareSummary {
    pub delta: f64,
    pub c1: f64,
    pub n_samples: usize,
    pub seed: u64,
    pub max_r: f64,
}

pub fn write_poincare_summary_csv(path: &Path, summary: &PoincareSummary) -> Result<()> {
    let mut writer = make_writer(path)?;
    writer.write_record(POINCARE_SUMMARY_HEADER)?;
    writer.write_record([
        fmt(summary.delta),
        fmt(summary.c1),
        format!("{}", summary.n_samples),
        format!("{}", summary.seed),
        fmt(summary.max_r),
    ])?;
    writer.flush().map_err(Error::Io)?;
    Ok(())
}

pub fn read_poincare_summary_csv(path: &Path) -> Result<PoincareSummary> {
    let cols = read_f64_columns(path, &POINCARE_SUMMARY_HEADER)?;
    if cols[0].is_empty() {
        return Err(Error::Domain(format!("{}: empty summary", path.display())));
    }
    Ok(PoincareSummary {
        delta: cols[0][0],
        c1: cols[1][0],
        n_samples: cols[2][0] as usize,
        seed: cols[3][0] as u64,
        max_r: cols[4][0],
    })
}

const PHI_BOUNDS_HEADER: [&str; 6] =
    ["c1_low", "c1_high", "c2", "c3", "ordering_violations", "n_samples"];

pub fn write_phi_bounds_csv(path: &Path, report: &PhiBoundsReport) -> Result<()> {
    let mut writer = make_writer(path)?;
    writer.write_record(PHI_BOUNDS_HEADER)?;
    writer.write_record([
        fmt(report.c1_low),
        fmt(report.c1_high),
        fmt(report.c2),
        fmt(report.c3),
        format!("{}", report.ordering_violations),
        format!("{}", report.n_samples),
    ])?;
    writer.flush().map_err(Error::Io)?;
    Ok(())
}

pub fn read_phi_bounds_csv(path: &Path) -> Result<PhiBoundsReport> {
    let cols = read_f64_columns(path, &PHI_BOUNDS_HEADER)?;
    if cols[0].is_empty() {
        return Err(Error::Domain(format!("{}: empty report", path.display())));
    }
    Ok(PhiBoundsReport {
        c1_low: cols[0][0],
        c1_high: cols[1][0],
        c2: cols[2][0],
        c3: cols[3][0],
        ordering_violations: cols[4][0] as usize,
        n_samples: cols[5][0] as usize,
    })
}

const LOCAL_EXPANSIONS_HEADER: [&str; 6] = [
    "delta",
    "phi_upper_violations",
    "phi_cubic_violations",
    "c_p_est",
    "c_v_quad",
    "c_p_quad",
];

pub fn write_local_expansions_csv(path: &Path, rows: &[LocalExpansionRow]) -> Result<()> {
    let mut writer = make_writer(path)?;
    writer.write_record(LOCAL_EXPANSIONS_HEADER)?;
    for row in rows {
        writer.write_record([
            fmt(row.delta),
            format!("{}", row.phi_upper_violations),
            format!("{}", row.phi_cubic_violations),
            fmt(row.c_p_est),
            fmt(row.c_v_quad),
            fmt(row.c_p_quad),
        ])?;
    }
    writer.flush().map_err(Error::Io)?;
    Ok(())
}

pub fn read_local_expansions_csv(path: &Path) -> Result<Vec<LocalExpansionRow>> {
    let cols = read_f64_columns(path, &LOCAL_EXPANSIONS_HEADER)?;
    Ok((0..cols[0].len())
        .map(|k| LocalExpansionRow {
            delta: cols[0][k],
            phi_upper_violations: cols[1][k] as usize,
            phi_cubic_violations: cols[2][k] as usize,
            c_p_est: cols[3][k],
            c_v_quad: cols[4][k],
            c_p_quad: cols[5][k],
        })
        .collect())
}

const SHIFT_PLOT_HEADER: [&str; 3] = ["t", "X", "sigma_t"];

/// Plot-ready shift curve: time, shift, and the reference line sigma * t.
pub fn write_shift_plot_csv(path: &Path, trace: &ShiftTrace, sigma: f64) -> Result<()> {
    let mut writer = make_writer(path)?;
    writer.write_record(SHIFT_PLOT_HEADER)?;
    for k in 0..trace.len() {
        writer.write_record([
            fmt(trace.times[k]),
            fmt(trace.x[k]),
            fmt(sigma * trace.times[k]),
        ])?;
    }
    writer.flush().map_err(Error::Io)?;
    Ok(())
}

pub fn read_shift_plot_csv(path: &Path) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>)> {
    let mut cols = read_f64_columns(path, &SHIFT_PLOT_HEADER)?;
    let st = cols.pop().unwrap();
    let x = cols.pop().unwrap();
    let t = cols.pop().unwrap();
    Ok((t, x, st))
}

// ---------------------------------------------------------------------------
// Failure records
// ---------------------------------------------------------------------------

const ERROR_HEADER: [&str; 3] = ["exit_code", "kind", "message"];

/// Short machine-stable tag for an error variant.
pub fn error_kind(error: &Error) -> &'static str {
    match error {
        Error::Domain(_) => "domain",
        Error::AmplitudeTooLarge { .. } => "amplitude-too-large",
        Error::DegenerateShock => "degenerate-shock",
        Error::DomainTooShort { .. } => "domain-too-short",
        Error::ProfileConstruction(_) => "profile-construction",
        Error::InvalidProfile(_) => "invalid-profile",
        Error::GridMismatch(_) => "grid-mismatch",
        Error::VacuumProximity { .. } => "vacuum-proximity",
        Error::NumericalBlowup { .. } => "numerical-blowup",
        Error::ShiftWindow { .. } => "shift-window",
        Error::Config { .. } => "config",
        Error::Io(_) => "io",
        Error::Csv(_) => "csv",
    }
}

/// Writes a one-row machine-readable failure record.
pub fn write_error_record(path: &Path, exit_code: i32, error: &Error) -> Result<()> {
    let mut writer = make_writer(path)?;
    writer.write_record(ERROR_HEADER)?;
    writer.write_record([
        format!("{exit_code}"),
        error_kind(error).to_string(),
        error.to_string(),
    ])?;
    writer.flush().map_err(Error::Io)?;
    Ok(())
}

/// Reads a failure record back as (exit_code, kind, message).
pub fn read_error_record(path: &Path) -> Result<(i32, String, String)> {
    let mut reader = csv::Reader::from_path(path)?;
    let headers = reader.headers()?.clone();
    if headers.iter().ne(ERROR_HEADER) {
        return Err(Error::Domain(format!(
            "{}: header {:?} does not match expected {:?}",
            path.display(),
            headers.iter().collect::<Vec<_>>(),
            ERROR_HEADER
        )));
    }
    let record = reader
        .records()
        .next()
        .ok_or_else(|| Error::Domain(format!("{}: empty failure record", path.display())))??;
    let exit_code = record
        .get(0)
        .unwrap_or("")
        .trim()
        .parse::<i32>()
        .map_err(|_| Error::Domain(format!("{}: exit_code is not an integer", path.display())))?;
    Ok((
        exit_code,
        record.get(1).unwrap_or("").to_string(),
        record.get(2).unwrap_or("").to_string(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::Trajectory;
    use crate::functionals::build_weight;
    use crate::limits::SweepMemberData;
    use crate::model::{solve_rankine_hugoniot, GasModel, ShockFamily};
    use crate::profiles::build_profile;

    fn small_profile() -> ShockProfile {
        let es = solve_rankine_hugoniot(1.0, 0.0, 0.1, ShockFamily::Two).unwrap();
        let model = GasModel::new(0.0).unwrap();
        build_profile(&es, &model, 400.0, 257, 1e-10).unwrap()
    }

    fn synthetic_trace() -> ShiftTrace {
        ShiftTrace {
            times: vec![0.0, 0.125, 0.25],
            x: vec![0.0, -1.5e-7, 3.0e-7],
            x_dot: vec![0.1, -0.25, f64::INFINITY],
            wre: vec![1.0, 0.5, 0.25],
            gv_accum: vec![0.0, 1e-17, 2e-17],
            d_accum: vec![0.0, 0.1, 0.2],
            identity_residual: vec![0.0, -3.2e-16, 1.1e-15],
            f_bound: vec![0.0, 2.0, 4.0],
            y: vec![0.0, 1e-5, -1e-5],
            j_bad: vec![0.0, 0.25, 0.5],
            j_para: vec![0.0, -0.125, 0.0625],
            j_good: vec![0.0, 0.75, 1.5],
            eta_plain: Vec::new(),
            layer_phi_accum: Vec::new(),
            diss_plain_accum: Vec::new(),
        }
    }

    #[test]
    fn profile_csv_round_trips_bitwise() {
        let profile = small_profile();
        let weight = build_weight(&profile, 0.1).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("profile.csv");
        write_profile_csv(&path, &profile, &weight).unwrap();
        let table = read_profile_csv(&path).unwrap();
        assert_eq!(table.xi, profile.grid.xi);
        assert_eq!(table.v, profile.v);
        assert_eq!(table.u, profile.u);
        assert_eq!(table.h, profile.h);
        assert_eq!(table.dv, profile.dv);
        assert_eq!(table.a, weight.a);
    }

    #[test]
    fn trace_csv_round_trips_and_uses_lf_only() {
        let trace = synthetic_trace();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("trace.csv");
        write_trace_csv(&path, &trace).unwrap();

        let bytes = std::fs::read(&path).unwrap();
        assert!(!bytes.contains(&b'\r'), "CRLF leaked into the trace file");
        let text = String::from_utf8(bytes).unwrap();
        assert!(text.starts_with("t,X,Xdot,wre,Gv_accum,D_accum,identity_residual,f_bound,Y,Jbad,Jpara,Jgood\n"));

        let back = read_trace_csv(&path).unwrap();
        assert_eq!(back.times, trace.times);
        assert_eq!(back.x, trace.x);
        assert_eq!(back.x_dot, trace.x_dot);
        assert_eq!(back.wre, trace.wre);
        assert_eq!(back.gv_accum, trace.gv_accum);
        assert_eq!(back.d_accum, trace.d_accum);
        assert_eq!(back.identity_residual, trace.identity_residual);
        assert_eq!(back.f_bound, trace.f_bound);
        assert_eq!(back.y, trace.y);
        assert_eq!(back.j_bad, trace.j_bad);
        assert_eq!(back.j_para, trace.j_para);
        assert_eq!(back.j_good, trace.j_good);
        assert!(back.eta_plain.is_empty());
    }

    #[test]
    fn writes_are_byte_identical_between_calls() {
        let trace = synthetic_trace();
        let dir = tempfile::tempdir().unwrap();
        let a = dir.path().join("a.csv");
        let b = dir.path().join("b.csv");
        write_trace_csv(&a, &trace).unwrap();
        write_trace_csv(&b, &trace).unwrap();
        assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    }

    #[test]
    fn snapshots_and_monitors_round_trip() {
        let xi = vec![-1.0, 0.0, 1.0];
        let trajectory = Trajectory {
            snapshots: vec![
                Snapshot { t: 0.0, v: vec![1.0, 2.0, 3.0], h: vec![0.1, 0.2, 0.3], u: vec![0.0; 3] },
                Snapshot { t: 0.5, v: vec![1.5, 2.5, 3.5], h: vec![0.4, 0.5, 0.6], u: vec![1.0; 3] },
            ],
            monitors: vec![MonitorRecord {
                t: 0.5,
                min_v: 1.5,
                max_v: 3.5,
                mass_defect: -2.5e-16,
                entropy_residual: 1e-9,
                boundary_leak: 0.0,
            }],
        };
        let dir = tempfile::tempdir().unwrap();
        let snap_path = dir.path().join("snapshots.csv");
        write_snapshots_csv(&snap_path, &trajectory, &xi).unwrap();
        let table = read_snapshots_csv(&snap_path).unwrap();
        assert_eq!(table.t, vec![0.0, 0.0, 0.0, 0.5, 0.5, 0.5]);
        assert_eq!(table.xi, vec![-1.0, 0.0, 1.0, -1.0, 0.0, 1.0]);
        let grouped = snapshots_from_table(&table);
        assert_eq!(grouped.len(), 2);
        assert_eq!(grouped[0].v, trajectory.snapshots[0].v);
        assert_eq!(grouped[1].h, trajectory.snapshots[1].h);
        assert_eq!(grouped[1].u, trajectory.snapshots[1].u);

        let mon_path = dir.path().join("monitor.csv");
        write_monitor_csv(&mon_path, &trajectory.monitors).unwrap();
        let monitors = read_monitor_csv(&mon_path).unwrap();
        assert_eq!(monitors.len(), 1);
        assert_eq!(monitors[0].mass_defect, -2.5e-16);
        assert_eq!(monitors[0].entropy_residual, 1e-9);
    }

    #[test]
    fn reports_csv_round_trips_all_fields() {
        let a = FunctionalReport {
            wre: 0.125,
            y: -3.5e-9,
            b1_minus: 1e-300,
            dy_dx: 42.0,
            delta3: 0.1,
            ..Default::default()
        };
        let b = FunctionalReport { gv: 7.0, i_gy: -0.25, ..Default::default() };
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("reports.csv");
        write_reports_csv(&path, &[a, b]).unwrap();
        let back = read_reports_csv(&path).unwrap();
        assert_eq!(back.len(), 2);
        assert_eq!(back[0], a);
        assert_eq!(back[1], b);
    }

    #[test]
    fn ledger_csv_round_trips_missing_ratios() {
        let rows = vec![
            LedgerRow { id: "bo1p".to_string(), ratio: Some(0.03125), n_samples: 17 },
            LedgerRow { id: "bo2".to_string(), ratio: None, n_samples: 0 },
        ];
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ledger.csv");
        write_ledger_csv(&path, &rows).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("inequality-id,empirical-ratio,n-samples\n"));
        let back = read_ledger_csv(&path).unwrap();
        assert_eq!(back.len(), 2);
        assert_eq!(back[0].id, "bo1p");
        assert_eq!(back[0].ratio, Some(0.03125));
        assert_eq!(back[0].n_samples, 17);
        assert_eq!(back[1].ratio, None);
        assert_eq!(back[1].n_samples, 0);
    }

    #[test]
    fn sweep_summary_round_trips_inf_and_errors() {
        let ok_member = SweepMember {
            nu: 1.0,
            outcome: Ok(SweepMemberData {
                e0: 0.5,
                bd: 0.25,
                bd_gap: 0.25,
                max_abs_x: 2.0,
                drift_ratio: f64::INFINITY,
                triple: [1.0, 2.0, 3.0],
                times: vec![0.0],
                x: vec![0.0],
                trace: synthetic_trace(),
                verdict_pass: true,
            }),
        };
        let bad_member = SweepMember {
            nu: 0.5,
            outcome: Err("blowup, dt collapsed".to_string()),
        };
        let report = SweepReport {
            members: vec![ok_member, bad_member],
            l1_gaps: vec![],
            c_drift: f64::INFINITY,
        };
        let rows = sweep_summary_rows(&report);
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0].status, "ok");
        assert!(rows[1].status.contains("blowup"));

        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("sweep.csv");
        write_sweep_csv(&path, &rows).unwrap();
        let back = read_sweep_csv(&path).unwrap();
        assert_eq!(back[0].drift_ratio, f64::INFINITY);
        assert_eq!(back[0].l1_gap_prev, None);
        assert!(back[1].e0.is_nan());
        assert_eq!(back[1].status, rows[1].status);
    }

    #[test]
    fn auxiliary_artifacts_round_trip() {
        use crate::inequality_lab::{LocalExpansionRow, PhiBoundsReport};
        let dir = tempfile::tempdir().unwrap();

        let blocks = vec![
            (0.05, vec![LedgerRow { id: "bo".to_string(), ratio: Some(0.5), n_samples: 3 }]),
            (0.2, vec![LedgerRow { id: "bo".to_string(), ratio: None, n_samples: 0 }]),
        ];
        let path = dir.path().join("sensitivity.csv");
        write_ledger_sensitivity_csv(&path, &blocks).unwrap();
        let back = read_ledger_sensitivity_csv(&path).unwrap();
        assert_eq!(back.len(), 2);
        assert_eq!(back[0].0, 0.05);
        assert_eq!(back[0].1.ratio, Some(0.5));
        assert_eq!(back[1].1.ratio, None);

        let summary = PoincareSummary {
            delta: 0.01,
            c1: 4.0,
            n_samples: 10_000,
            seed: 1,
            max_r: -3.25e-4,
        };
        let path = dir.path().join("poincare_summary.csv");
        write_poincare_summary_csv(&path, &summary).unwrap();
        assert_eq!(read_poincare_summary_csv(&path).unwrap(), summary);

        let bounds = PhiBoundsReport {
            c1_low: 0.25,
            c1_high: 0.75,
            c2: 0.4,
            c3: 0.41,
            ordering_violations: 0,
            n_samples: 1000,
        };
        let path = dir.path().join("phi_bounds.csv");
        write_phi_bounds_csv(&path, &bounds).unwrap();
        let back = read_phi_bounds_csv(&path).unwrap();
        assert_eq!(back.c1_low, bounds.c1_low);
        assert_eq!(back.c3, bounds.c3);
        assert_eq!(back.ordering_violations, 0);
        assert_eq!(back.n_samples, 1000);

        let rows = vec![LocalExpansionRow {
            delta: 0.1,
            phi_upper_violations: 0,
            phi_cubic_violations: 0,
            c_p_est: 2.5,
            c_v_quad: 1.25,
            c_p_quad: 0.5,
        }];
        let path = dir.path().join("local.csv");
        write_local_expansions_csv(&path, &rows).unwrap();
        let back = read_local_expansions_csv(&path).unwrap();
        assert_eq!(back.len(), 1);
        assert_eq!(back[0].c_p_est, 2.5);
        assert_eq!(back[0].phi_upper_violations, 0);

        let trace = synthetic_trace();
        let path = dir.path().join("shift_plot.csv");
        write_shift_plot_csv(&path, &trace, -1.0542).unwrap();
        let (t, x, st) = read_shift_plot_csv(&path).unwrap();
        assert_eq!(t, trace.times);
        assert_eq!(x, trace.x);
        assert_eq!(st[1], -1.0542 * 0.125);
    }

    #[test]
    fn error_record_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("error.csv");
        let error = Error::VacuumProximity { t: 1.5, min_v: 1e-7, floor: 1e-6 };
        write_error_record(&path, 2, &error).unwrap();
        let (code, kind, message) = read_error_record(&path).unwrap();
        assert_eq!(code, 2);
        assert_eq!(kind, "vacuum-proximity");
        assert!(message.contains("vacuum proximity"));
    }

    #[test]
    fn header_mismatch_is_reported_with_path() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        std::fs::write(&path, "a,b\n1,2\n").unwrap();
        let err = read_trace_csv(&path).unwrap_err();
        let text = err.to_string();
        assert!(text.contains("bad.csv"), "{text}");
        assert!(text.contains("does not match expected"), "{text}");
    }
}
