use std::collections::BTreeMap;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use thiserror::Error;

use super::{Concurrency, EvalError, EvaluationRequest, Evaluator};
use crate::curves::{RdeCurve, RdePoint};
use crate::stats::{ci_check, CiOutcome, CiParams};

pub const MEASUREMENT_HEADER: [&str; 8] = [
    "ctp_id",
    "sequence",
    "qp",
    "bitrate_kbps",
    "psnr_db",
    "vmaf",
    "energy_j",
    "energy_samples",
];

/// Relative tolerance between `energy_j` and the mean of `energy_samples`.
const SAMPLE_MEAN_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("{path}: {msg}")]
    Io { path: String, msg: String },
    #[error("line {line}: {msg}")]
    Schema { line: u64, msg: String },
    #[error("line {line}: duplicate key (ctp_id={}, sequence={}, qp={})", key.ctp_id, key.sequence, key.qp)]
    DuplicateKey { line: u64, key: MeasurementKey },
    #[error("line {line}: {field} must be > 0, got {value}")]
    NonPositive { line: u64, field: &'static str, value: f64 },
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MeasurementKey {
    pub ctp_id: String,
    pub sequence: String,
    pub qp: i32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementRow {
    pub key: MeasurementKey,
    pub bitrate: f64,
    pub psnr: f64,
    pub vmaf: f64,
    pub energy: f64,
    pub energy_samples: Option<Vec<f64>>,
}

impl MeasurementRow {
    pub fn point(&self) -> RdePoint {
        RdePoint::new(self.key.qp, self.bitrate, self.psnr, self.vmaf, self.energy)
    }
}

/// Confidence-interval verdict recorded for a row that carried raw samples.
#[derive(Debug, Clone, PartialEq)]
pub struct IngestDiagnostic {
    pub line: u64,
    pub key: MeasurementKey,
    pub outcome: CiOutcome,
}

/// Measurements keyed by `(ctp_id, sequence, qp)`.
#[derive(Debug, Clone, Default)]
pub struct MeasurementTable {
    rows: BTreeMap<MeasurementKey, MeasurementRow>,
    diagnostics: Vec<IngestDiagnostic>,
}

pub fn ingest_measurements(path: &Path) -> Result<MeasurementTable, IngestError> {
    ingest_measurements_with(path, CiParams::default())
}

pub fn ingest_measurements_with(path: &Path, ci: CiParams) -> Result<MeasurementTable, IngestError> {
    let file = File::open(path).map_err(|e| IngestError::Io {
        path: path.display().to_string(),
        msg: e.to_string(),
    })?;
    MeasurementTable::from_reader(file, ci)
}

impl MeasurementTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_reader<R: Read>(reader: R, ci: CiParams) -> Result<Self, IngestError> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .flexible(false)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let headers = rdr.headers().map_err(|e| csv_error(e, 1))?.clone();
        if headers.iter().ne(MEASUREMENT_HEADER.iter().copied()) {
            return Err(IngestError::Schema {
                line: 1,
                msg: format!(
                    "header must be `{}`, found `{}`",
                    MEASUREMENT_HEADER.join(","),
                    headers.iter().collect::<Vec<_>>().join(",")
                ),
            });
        }
        let mut table = Self::new();
        for record in rdr.records() {
            let record = record.map_err(|e| csv_error(e, 0))?;
            let line = record.position().map_or(0, |p| p.line());
            let row = parse_row(&record, line)?;
            if let Some(samples) = &row.energy_samples {
                let outcome = ci_check(samples, ci.confidence, ci.rel_half_width).map_err(|e| IngestError::Schema {
                    line,
                    msg: e.to_string(),
                })?;
                table.diagnostics.push(IngestDiagnostic {
                    line,
                    key: row.key.clone(),
                    outcome,
                });
            }
            table.insert_at(row, line)?;
        }
        Ok(table)
    }

    pub fn insert(&mut self, row: MeasurementRow) -> Result<(), IngestError> {
        self.insert_at(row, 0)
    }

    fn insert_at(&mut self, row: MeasurementRow, line: u64) -> Result<(), IngestError> {
        if self.rows.contains_key(&row.key) {
            return Err(IngestError::DuplicateKey { line, key: row.key });
        }
        self.rows.insert(row.key.clone(), row);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn rows(&self) -> impl Iterator<Item = &MeasurementRow> {
        self.rows.values()
    }

    pub fn get(&self, ctp_id: &str, sequence: &str, qp: i32) -> Option<&MeasurementRow> {
        self.rows.get(&MeasurementKey {
            ctp_id: ctp_id.to_ascii_uppercase(),
            sequence: sequence.to_string(),
            qp,
        })
    }

    pub fn diagnostics(&self) -> &[IngestDiagnostic] {
        &self.diagnostics
    }

    pub fn ctp_ids(&self) -> Vec<String> {
        let mut ids: Vec<String> = self.rows.keys().map(|k| k.ctp_id.clone()).collect();
        ids.dedup();
        ids
    }

    pub fn sequences_for(&self, ctp_id: &str) -> Vec<String> {
        let id = ctp_id.to_ascii_uppercase();
        let mut seqs: Vec<String> = self
            .rows
            .keys()
            .filter(|k| k.ctp_id == id)
            .map(|k| k.sequence.clone())
            .collect();
        seqs.dedup();
        seqs
    }

    pub fn qps_for(&self, ctp_id: &str, sequence: &str) -> Vec<i32> {
        let id = ctp_id.to_ascii_uppercase();
        self.rows
            .keys()
            .filter(|k| k.ctp_id == id && k.sequence == sequence)
            .map(|k| k.qp)
            .collect()
    }

    /// Curve over every stored QP of `(ctp_id, sequence)`.
    pub fn curve(&self, ctp_id: &str, sequence: &str) -> Result<RdeCurve, EvalError> {
        let qps = self.qps_for(ctp_id, sequence);
        self.curve_at(ctp_id, sequence, &qps)
    }

    pub fn curve_at(&self, ctp_id: &str, sequence: &str, qps: &[i32]) -> Result<RdeCurve, EvalError> {
        let mut points = Vec::with_capacity(qps.len());
        for &qp in qps {
            let row = self
                .get(ctp_id, sequence, qp)
                .ok_or_else(|| EvalError::MeasurementMiss {
                    ctp_id: ctp_id.to_ascii_uppercase(),
                    sequence: sequence.to_string(),
                    qp,
                })?;
            points.push(row.point());
        }
        Ok(RdeCurve::new(sequence, ctp_id.to_ascii_uppercase(), points)?)
    }

    /// Writes the table in the ingest format, rows in key order.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "{}", MEASUREMENT_HEADER.join(","))?;
        for r in self.rows.values() {
            let samples = r
                .energy_samples
                .as_ref()
                .map(|s| s.iter().map(f64::to_string).collect::<Vec<_>>().join(";"))
                .unwrap_or_default();
            writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                r.key.ctp_id, r.key.sequence, r.key.qp, r.bitrate, r.psnr, r.vmaf, r.energy, samples
            )?;
        }
        Ok(())
    }
}

fn csv_error(e: csv::Error, fallback_line: u64) -> IngestError {
    let line = e.position().map_or(fallback_line, |p| p.line());
    IngestError::Schema {
        line,
        msg: e.to_string(),
    }
}

fn parse_row(record: &csv::StringRecord, line: u64) -> Result<MeasurementRow, IngestError> {
    let schema = |msg: String| IngestError::Schema { line, msg };
    let ctp_id = record[0].to_ascii_uppercase();
    if ctp_id.is_empty() || !ctp_id.chars().all(|c| c.is_ascii_hexdigit()) {
        return Err(schema(format!("ctp_id `{}` is not a hex mask", &record[0])));
    }
    let sequence = record[1].to_string();
    if sequence.is_empty() {
        return Err(schema("empty sequence".into()));
    }
    let qp: i32 = record[2]
        .parse()
        .map_err(|_| schema(format!("qp `{}` is not an integer", &record[2])))?;
    let num = |idx: usize, field: &str| -> Result<f64, IngestError> {
        let v: f64 = record[idx]
            .parse()
            .map_err(|_| schema(format!("{field} `{}` is not a number", &record[idx])))?;
        if !v.is_finite() {
            return Err(schema(format!("{field} is not finite")));
        }
        Ok(v)
    };
    let bitrate = num(3, "bitrate_kbps")?;
    let psnr = num(4, "psnr_db")?;
    let vmaf = num(5, "vmaf")?;
    let energy = num(6, "energy_j")?;
    for (field, value) in [("bitrate_kbps", bitrate), ("energy_j", energy)] {
        if value <= 0.0 {
            return Err(IngestError::NonPositive { line, field, value });
        }
    }
    if !(0.0..=100.0).contains(&vmaf) {
        return Err(schema(format!("vmaf {vmaf} outside [0, 100]")));
    }
    let energy_samples = parse_samples(&record[7]).map_err(schema)?;
    if let Some(samples) = &energy_samples {
        let mean = samples.iter().sum::<f64>() / samples.len() as f64;
        if ((energy - mean) / mean).abs() > SAMPLE_MEAN_TOLERANCE {
            return Err(schema(format!("energy_j {energy} differs from the sample mean {mean}")));
        }
    }
    Ok(MeasurementRow {
        key: MeasurementKey { ctp_id, sequence, qp },
        bitrate,
        psnr,
        vmaf,
        energy,
        energy_samples,
    })
}

/// `;`-separated joule readings; an empty field means no samples.
pub(crate) fn parse_samples(field: &str) -> Result<Option<Vec<f64>>, String> {
    let field = field.trim();
    if field.is_empty() {
        return Ok(None);
    }
    let mut out = Vec::new();
    for s in field.split(';') {
        let v: f64 = s
            .trim()
            .parse()
            .map_err(|_| format!("energy sample `{s}` is not a number"))?;
        if v <= 0.0 || !v.is_finite() {
            return Err(format!("energy sample {v} must be > 0"));
        }
        out.push(v);
    }
    Ok(Some(out))
}

/// Serves curves from a [`MeasurementTable`]; never fabricates points.
#[derive(Debug, Clone)]
pub struct CachedEvaluator {
    table: MeasurementTable,
}

impl CachedEvaluator {
    pub fn new(table: MeasurementTable) -> Self {
        Self { table }
    }

    pub fn table(&self) -> &MeasurementTable {
        &self.table
    }
}

impl Evaluator for CachedEvaluator {
    fn evaluate(&self, request: &EvaluationRequest) -> Result<Vec<RdeCurve>, EvalError> {
        let id = request.ctp.to_hex();
        request
            .sequences
            .iter()
            .map(|seq| self.table.curve_at(&id, seq, &request.qps))
            .collect()
    }

    fn concurrency(&self) -> Concurrency {
        Concurrency::Unbounded
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ctp::ToolRegistry;

    const HEADER: &str = "ctp_id,sequence,qp,bitrate_kbps,psnr_db,vmaf,energy_j,energy_samples\n";

    fn four_rows() -> String {
        let mut s = HEADER.to_string();
        s += "3FFFFFFF,BQTerrace,22,8000,40.1,95,20,\n";
        s += "3FFFFFFF,BQTerrace,27,4000,38.6,90,15,\n";
        s += "3FFFFFFF,BQTerrace,32,2000,36.5,82,11,\n";
        s += "3FFFFFFF,BQTerrace,37,1000,34.0,70,8,\n";
        s
    }

    fn load(text: &str) -> Result<MeasurementTable, IngestError> {
        MeasurementTable::from_reader(text.as_bytes(), CiParams::default())
    }

    #[test]
    fn header_only_is_empty() {
        let t = load(HEADER).unwrap();
        assert!(t.is_empty());
        assert!(t.ctp_ids().is_empty());
    }

    #[test]
    fn four_rows_make_one_curve() {
        let t = load(&four_rows()).unwrap();
        assert_eq!(t.len(), 4);
        let c = t.curve("3fffffff", "BQTerrace").unwrap();
        assert_eq!(c.points().len(), 4);
        assert_eq!(c.points()[1], RdePoint::new(27, 4000.0, 38.6, 90.0, 15.0));
    }

    #[test]
    fn zero_bitrate_rejected_at_line() {
        let text = four_rows().replace("27,4000,", "27,0,");
        match load(&text).unwrap_err() {
            IngestError::NonPositive { line, field, .. } => {
                assert_eq!(line, 3);
                assert_eq!(field, "bitrate_kbps");
            }
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn duplicate_key_rejected() {
        let text = four_rows() + "3FFFFFFF,BQTerrace,32,2100,36.5,82,11,\n";
        assert!(matches!(
            load(&text).unwrap_err(),
            IngestError::DuplicateKey { line: 6, .. }
        ));
    }

    #[test]
    fn bad_header_and_schema() {
        assert!(matches!(
            load("ctp,sequence\n").unwrap_err(),
            IngestError::Schema { line: 1, .. }
        ));
        let text = four_rows().replace("27,4000,38.6", "27,4000,abc");
        assert!(matches!(load(&text).unwrap_err(), IngestError::Schema { line: 3, .. }));
        let text = HEADER.to_string() + "3FFFFFFF,a,22,1,2\n";
        assert!(matches!(load(&text).unwrap_err(), IngestError::Schema { line: 2, .. }));
    }

    #[test]
    fn samples_checked_against_mean() {
        let ok = HEADER.to_string() + "3FFFFFFF,a,22,100,40,90,10,10;10;10;10;10\n";
        let t = load(&ok).unwrap();
        assert_eq!(t.diagnostics().len(), 1);
        assert_eq!(t.diagnostics()[0].outcome.verdict, crate::stats::Verdict::Pass);
        let bad = HEADER.to_string() + "3FFFFFFF,a,22,100,40,90,10.5,10;10;10\n";
        assert!(matches!(load(&bad).unwrap_err(), IngestError::Schema { line: 2, .. }));
    }

    #[test]
    fn cached_backend_reports_missing_key() {
        let t = load(&four_rows()).unwrap();
        let reg = ToolRegistry::vvc_default();
        let ev = CachedEvaluator::new(t);
        let req = EvaluationRequest::new(reg.default_ctp(), vec!["BQTerrace".into()], vec![22, 27, 32, 37]).unwrap();
        let curves = ev.evaluate(&req).unwrap();
        assert_eq!(curves[0].points()[0], RdePoint::new(22, 8000.0, 40.1, 95.0, 20.0));

        let req =
            EvaluationRequest::new(reg.default_ctp(), vec!["BQTerrace".into()], vec![22, 27, 32, 37, 42]).unwrap();
        let err = ev.evaluate(&req).unwrap_err();
        assert!(err.is_measurement_miss());
        assert!(err.to_string().contains("ctp_id=3FFFFFFF, sequence=BQTerrace, qp=42"));
    }

    #[test]
    fn write_then_read_is_identical() {
        let t = load(&four_rows()).unwrap();
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        let back = load(std::str::from_utf8(&buf).unwrap()).unwrap();
        assert_eq!(back.rows().collect::<Vec<_>>(), t.rows().collect::<Vec<_>>());
    }
}
