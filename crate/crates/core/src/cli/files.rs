//! Delimited-text inputs and outputs.
//!
//! Evidence files carry a header `sample_id,label,n,c0,...,c{K-1}` for
//! argmax counts or `sample_id,label,n,s0,...,s{K-1}` for summed softmax
//! scores. An empty `label` field means the sample is unlabelled.

use std::fs;
use std::path::{Path, PathBuf};

use crate::analysis::{
    Boundary, DatasetSummary, Evidence, FieldSummary, Lattice, RadiusField, RegionMap, SampleRecord, SweepGrid,
};
use crate::confidence::{RawCounts, SoftmaxSums};
use crate::domain::{CertificationOutcome, ExpectationBounds, ExpectationMode};
use crate::error::{Error, Result};
use crate::mechanisms::MechanismId;

/// Significant digits used for every radius written to disk.
pub const RADIUS_DIGITS: usize = 9;

/// `x` rounded to `digits` significant digits, in plain decimal notation
/// when the exponent is moderate and in scientific notation otherwise.
pub fn fmt_sig(x: f64, digits: usize) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let digits = digits.max(1);
    let sci = format!("{:.*e}", digits - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-6..15).contains(&exp) {
        return sci;
    }
    let negative = mantissa.starts_with('-');
    let significand: String = mantissa.chars().filter(|c| c.is_ascii_digit()).collect();
    let body = if exp >= 0 {
        let int_len = exp as usize + 1;
        if significand.len() <= int_len {
            format!("{significand:0<int_len$}")
        } else {
            format!("{}.{}", &significand[..int_len], &significand[int_len..])
        }
    } else {
        format!("0.{}{}", "0".repeat((-exp - 1) as usize), significand)
    };
    if negative {
        format!("-{body}")
    } else {
        body
    }
}

/// A radius as written to output files.
pub fn fmt_radius(x: f64) -> String {
    fmt_sig(x, RADIUS_DIGITS)
}

/// A proportion as written to summary files.
pub fn fmt_proportion(x: f64) -> String {
    format!("{x:.4}")
}

pub(crate) fn write_file(path: &Path, content: &str) -> Result<()> {
    fs::write(path, content).map_err(|e| Error::io(path, e))
}

fn csv_text(rows: Vec<Vec<String>>) -> String {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    for row in rows {
        w.write_record(&row).expect("writing to memory");
    }
    String::from_utf8(w.into_inner().expect("flushing memory")).expect("utf-8 fields")
}

fn parse_error(path: &Path, line: u64, detail: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        detail: detail.into(),
    }
}

fn reader(path: &Path) -> Result<csv::Reader<fs::File>> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(file))
}

fn row_line(row: &csv::StringRecord) -> u64 {
    row.position().map(|p| p.line()).unwrap_or(0)
}

fn parse_label(raw: &str, path: &Path, line: u64) -> Result<Option<usize>> {
    if raw.is_empty() {
        return Ok(None);
    }
    raw.parse()
        .map(Some)
        .map_err(|_| parse_error(path, line, format!("label {raw:?} is not a class index")))
}

fn parse_field<T: std::str::FromStr>(raw: &str, what: &str, path: &Path, line: u64) -> Result<T> {
    raw.parse()
        .map_err(|_| parse_error(path, line, format!("{what} {raw:?} is not a valid number")))
}

/// Detect the evidence kind from the header and return it with the class
/// count.
fn evidence_columns(header: &csv::StringRecord, path: &Path) -> Result<(ExpectationMode, usize)> {
    let cols: Vec<&str> = header.iter().collect();
    if cols.len() < 5 || cols[..3] != ["sample_id", "label", "n"] {
        return Err(parse_error(
            path,
            1,
            "header must be sample_id,label,n followed by at least two class columns",
        ));
    }
    let (prefix, mode) = match cols[3].chars().next() {
        Some('c') => ("c", ExpectationMode::Multinomial),
        Some('s') => ("s", ExpectationMode::Softmax),
        _ => return Err(parse_error(path, 1, format!("unknown class column {:?}", cols[3]))),
    };
    for (k, name) in cols[3..].iter().enumerate() {
        if *name != format!("{prefix}{k}") {
            return Err(parse_error(path, 1, format!("expected column {prefix}{k}, found {name:?}")));
        }
    }
    Ok((mode, cols.len() - 3))
}

/// Read an evidence file. The kind (counts or softmax sums) is taken from
/// the header. An empty file yields no records and a warning.
pub fn ingest_counts(path: &Path) -> Result<Vec<SampleRecord>> {
    let mut rdr = reader(path)?;
    let header = rdr
        .headers()
        .map_err(|e| parse_error(path, 1, e.to_string()))?
        .clone();
    if header.is_empty() {
        log::warn!("{}: empty file, no samples read", path.display());
        return Ok(Vec::new());
    }
    let (mode, classes) = evidence_columns(&header, path)?;
    let mut out = Vec::new();
    for row in rdr.records() {
        let row = row.map_err(|e| {
            let line = e.position().map(|p| p.line()).unwrap_or(0);
            parse_error(path, line, e.to_string())
        })?;
        let line = row_line(&row);
        let label = parse_label(&row[1], path, line)?;
        let n: u64 = parse_field(&row[2], "n", path, line)?;
        let evidence = match mode {
            ExpectationMode::Multinomial => {
                let counts = (0..classes)
                    .map(|k| parse_field(&row[3 + k], "count", path, line))
                    .collect::<Result<Vec<u64>>>()?;
                Evidence::Counts(RawCounts::with_total(counts, n).map_err(|e| parse_error(path, line, e.to_string()))?)
            }
            ExpectationMode::Softmax => {
                let sums = (0..classes)
                    .map(|k| parse_field(&row[3 + k], "score sum", path, line))
                    .collect::<Result<Vec<f64>>>()?;
                Evidence::Softmax(SoftmaxSums::new(sums, n).map_err(|e| parse_error(path, line, e.to_string()))?)
            }
        };
        let record = SampleRecord::new(&row[0], label, evidence).map_err(|e| parse_error(path, line, e.to_string()))?;
        out.push(record);
    }
    if out.is_empty() {
        log::warn!("{}: header only, no samples read", path.display());
    }
    Ok(out)
}

fn evidence_header(mode: ExpectationMode, classes: usize) -> Vec<String> {
    let prefix = match mode {
        ExpectationMode::Multinomial => "c",
        ExpectationMode::Softmax => "s",
    };
    let mut h = vec!["sample_id".to_string(), "label".to_string(), "n".to_string()];
    h.extend((0..classes).map(|k| format!("{prefix}{k}")));
    h
}

fn evidence_values(e: &Evidence) -> Vec<String> {
    match e {
        Evidence::Counts(c) => c.counts().iter().map(u64::to_string).collect(),
        Evidence::Softmax(s) => s.sums().iter().map(f64::to_string).collect(),
    }
}

fn label_text(label: Option<usize>) -> String {
    label.map(|l| l.to_string()).unwrap_or_default()
}

/// Write records' evidence in the input format read by [`ingest_counts`].
pub fn evidence_csv(records: &[SampleRecord]) -> Result<String> {
    let Some(first) = records.first() else {
        return Ok(String::new());
    };
    let mode = first.evidence().mode();
    let classes = first.evidence().classes();
    let mut rows = vec![evidence_header(mode, classes)];
    for r in records {
        if r.evidence().mode() != mode || r.evidence().classes() != classes {
            return Err(Error::invalid("records", "mixed evidence kinds or class counts"));
        }
        let mut row = vec![r.sample_id().to_string(), label_text(r.label()), r.evidence().n().to_string()];
        row.extend(evidence_values(r.evidence()));
        rows.push(row);
    }
    Ok(csv_text(rows))
}

const SAMPLE_HEADER: [&str; 15] = [
    "sample_id",
    "label",
    "predicted",
    "mode",
    "n",
    "alpha",
    "e0",
    "e1",
    "cohen",
    "li",
    "lecuyer",
    "improved_dp",
    "ensemble",
    "winner",
    "evidence",
];

/// Per-sample results. Bounds and `alpha` are written at full precision,
/// radii at [`RADIUS_DIGITS`] significant digits; disabled mechanisms are
/// left blank.
pub fn samples_csv(records: &[SampleRecord]) -> Result<String> {
    let mut rows = vec![SAMPLE_HEADER.iter().map(|s| s.to_string()).collect::<Vec<_>>()];
    for r in records {
        let (Some(b), Some(o)) = (r.bounds(), r.outcome()) else {
            return Err(Error::invalid("records", format!("sample {} has not been certified", r.sample_id())));
        };
        let mut row = vec![
            r.sample_id().to_string(),
            label_text(r.label()),
            o.predicted_class().to_string(),
            b.mode().to_string(),
            b.n().to_string(),
            b.alpha().to_string(),
            b.e0().to_string(),
            b.e1().to_string(),
        ];
        row.extend(MechanismId::ALL.iter().map(|&id| o.radius_opt(id).map(fmt_radius).unwrap_or_default()));
        row.push(fmt_radius(o.radius_ensemble()));
        row.push(o.winner().map(|w| w.to_string()).unwrap_or_else(|| "none".to_string()));
        row.push(evidence_values(r.evidence()).join(";"));
        rows.push(row);
    }
    Ok(csv_text(rows))
}

/// Read back a file written by [`samples_csv`].
pub fn ingest_samples(path: &Path) -> Result<Vec<SampleRecord>> {
    let mut rdr = reader(path)?;
    let header = rdr.headers().map_err(|e| parse_error(path, 1, e.to_string()))?.clone();
    if header.is_empty() {
        log::warn!("{}: empty file, no samples read", path.display());
        return Ok(Vec::new());
    }
    if header.iter().collect::<Vec<_>>() != SAMPLE_HEADER {
        return Err(parse_error(path, 1, "not a per-sample results file"));
    }
    let mut out = Vec::new();
    for row in rdr.records() {
        let row = row.map_err(|e| parse_error(path, e.position().map(|p| p.line()).unwrap_or(0), e.to_string()))?;
        let line = row_line(&row);
        let wrap = |e: Error| parse_error(path, line, e.to_string());
        let label = parse_label(&row[1], path, line)?;
        let predicted: usize = parse_field(&row[2], "predicted class", path, line)?;
        let mode: ExpectationMode = row[3].parse().map_err(wrap)?;
        let n: u64 = parse_field(&row[4], "n", path, line)?;
        let alpha: f64 = parse_field(&row[5], "alpha", path, line)?;
        let e0: f64 = parse_field(&row[6], "e0", path, line)?;
        let e1: f64 = parse_field(&row[7], "e1", path, line)?;
        let mut radii = [None; 4];
        for (k, slot) in radii.iter_mut().enumerate() {
            let raw = &row[8 + k];
            if !raw.is_empty() {
                *slot = Some(parse_field::<f64>(raw, "radius", path, line)?);
            }
        }
        let parts: Vec<&str> = row[14].split(';').collect();
        let evidence = match mode {
            ExpectationMode::Multinomial => {
                let counts = parts
                    .iter()
                    .map(|p| parse_field(p, "count", path, line))
                    .collect::<Result<Vec<u64>>>()?;
                Evidence::Counts(RawCounts::with_total(counts, n).map_err(wrap)?)
            }
            ExpectationMode::Softmax => {
                let sums = parts
                    .iter()
                    .map(|p| parse_field(p, "score sum", path, line))
                    .collect::<Result<Vec<f64>>>()?;
                Evidence::Softmax(SoftmaxSums::new(sums, n).map_err(wrap)?)
            }
        };
        let bounds = ExpectationBounds::estimated(e0, e1, mode, n, alpha, predicted).map_err(wrap)?;
        let outcome = CertificationOutcome::new(predicted, radii).map_err(wrap)?;
        let record = SampleRecord::new(&row[0], label, evidence)
            .and_then(|r| r.with_certification(bounds, outcome))
            .map_err(wrap)?;
        out.push(record);
    }
    Ok(out)
}

fn field_rows(rows: &mut Vec<Vec<String>>, f: &FieldSummary, with_largest: bool) {
    let name = f.field.to_string();
    rows.push(vec![format!("median_radius.{name}"), fmt_radius(f.median_radius)]);
    rows.push(vec![format!("mean_radius.{name}"), fmt_radius(f.mean_radius)]);
    if with_largest {
        rows.push(vec![format!("proportion_largest.{name}"), fmt_proportion(f.proportion_largest)]);
    }
    rows.push(vec![
        format!("proportion_above_threshold.{name}"),
        fmt_proportion(f.proportion_above_threshold),
    ]);
}

/// Summary metrics as `metric,value` rows.
pub fn summary_csv(s: &DatasetSummary) -> String {
    let mut rows = vec![vec!["metric".to_string(), "value".to_string()]];
    rows.push(vec!["samples".into(), s.samples.to_string()]);
    rows.push(vec![
        "top1_accuracy".into(),
        s.top1_accuracy.map(fmt_proportion).unwrap_or_default(),
    ]);
    rows.push(vec!["threshold".into(), fmt_radius(s.threshold)]);
    for m in &s.mechanisms {
        field_rows(&mut rows, m, true);
    }
    field_rows(&mut rows, &s.ensemble, false);
    let imp = &s.improvement;
    let opt = |v: Option<f64>| v.map(fmt_radius).unwrap_or_default();
    rows.extend([
        vec!["baseline".into(), imp.baseline.to_string()],
        vec!["wilcoxon.statistic".into(), fmt_radius(imp.wilcoxon.statistic())],
        vec!["wilcoxon.w_minus".into(), fmt_radius(imp.wilcoxon.w_minus)],
        vec!["wilcoxon.p_value".into(), fmt_sig(imp.wilcoxon.p_value, RADIUS_DIGITS)],
        vec!["wilcoxon.nonzero_pairs".into(), imp.wilcoxon.nonzero.to_string()],
        vec!["wilcoxon.zero_pairs".into(), imp.wilcoxon.zeros.to_string()],
        vec!["proportion_improved".into(), fmt_proportion(imp.proportion_improved)],
        vec!["improvement.median_absolute".into(), fmt_radius(imp.median_absolute)],
        vec!["improvement.mean_absolute".into(), fmt_radius(imp.mean_absolute)],
        vec!["improvement.median_percent".into(), opt(imp.median_percent)],
        vec!["improvement.mean_percent".into(), opt(imp.mean_percent)],
        vec!["improvement.infinite".into(), imp.infinite_improvements.to_string()],
    ]);
    csv_text(rows)
}

/// Certified-accuracy curves, one column per field.
pub fn curve_csv(fields: &[RadiusField], curves: &[Vec<(f64, f64)>]) -> String {
    let mut header = vec!["radius".to_string()];
    header.extend(fields.iter().map(|f| f.to_string()));
    let mut rows = vec![header];
    if let Some(first) = curves.first() {
        for (k, &(r, _)) in first.iter().enumerate() {
            let mut row = vec![fmt_radius(r)];
            row.extend(curves.iter().map(|c| fmt_proportion(c[k].1)));
            rows.push(row);
        }
    }
    csv_text(rows)
}

/// A lattice as a matrix: rows are `e0`, columns are `e1`, masked cells
/// are blank.
pub fn lattice_csv<T>(lattice: &Lattice<T>, cell: impl Fn(&T) -> String) -> String {
    let res = lattice.resolution();
    let mut header = vec!["e0\\e1".to_string()];
    header.extend((0..res).map(|j| fmt_sig(lattice.coord(j), 6)));
    let mut rows = vec![header];
    for i in 0..res {
        let mut row = vec![fmt_sig(lattice.coord(i), 6)];
        row.extend((0..res).map(|j| lattice.get(i, j).map(&cell).unwrap_or_default()));
        rows.push(row);
    }
    csv_text(rows)
}

/// Region labels; feasible cells with no certificate read `none`.
pub fn regions_csv(grid: &SweepGrid, regions: &RegionMap) -> String {
    let res = regions.labels.resolution();
    let mut header = vec!["e0\\e1".to_string()];
    header.extend((0..res).map(|j| fmt_sig(grid.coord(j), 6)));
    let mut rows = vec![header];
    for i in 0..res {
        let mut row = vec![fmt_sig(grid.coord(i), 6)];
        row.extend((0..res).map(|j| match regions.labels.get(i, j) {
            Some(id) => id.to_string(),
            None if grid.is_feasible(i, j) => "none".to_string(),
            None => String::new(),
        }));
        rows.push(row);
    }
    csv_text(rows)
}

/// Boundary polylines in long form.
pub fn boundaries_csv(boundaries: &[Boundary]) -> String {
    let mut rows = vec![vec![
        "first".to_string(),
        "second".to_string(),
        "polyline".to_string(),
        "e0".to_string(),
        "e1".to_string(),
    ]];
    for (k, b) in boundaries.iter().enumerate() {
        for &(e0, e1) in &b.points {
            rows.push(vec![
                b.between.0.to_string(),
                b.between.1.to_string(),
                k.to_string(),
                fmt_sig(e0, 9),
                fmt_sig(e1, 9),
            ]);
        }
    }
    csv_text(rows)
}

/// Writes a set of named text files into one directory.
pub struct OutputDir {
    root: PathBuf,
    written: Vec<PathBuf>,
}

impl OutputDir {
    pub fn create(root: &Path) -> Result<Self> {
        fs::create_dir_all(root).map_err(|e| Error::io(root, e))?;
        Ok(OutputDir {
            root: root.to_path_buf(),
            written: Vec::new(),
        })
    }

    pub fn write(&mut self, name: &str, content: &str) -> Result<()> {
        let path = self.root.join(name);
        write_file(&path, content)?;
        log::info!("wrote {}", path.display());
        self.written.push(path);
        Ok(())
    }

    pub fn written(&self) -> &[PathBuf] {
        &self.written
    }
}
