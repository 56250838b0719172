//! CSV ingestion and export.
//!
//! Tecator spectra: a header row, then one row per meat sample with 100
//! absorbance columns (`abs_850`, `abs_852`, ..., `abs_1048`) followed by the
//! fat percentage. Samples with fat strictly below 20% are class 0, all
//! others class 1.
//!
//! Exported datasets: one column per observation point named `t_<point>`,
//! then a `label` column.

use std::fs::File;
use std::path::Path;

use super::LabeledDataset;
use crate::error::{Error, Result};
use crate::sample::{Interval, SampledFunction};

pub const TECATOR_CHANNELS: usize = 100;
const FAT_THRESHOLD: f64 = 20.0;

fn open(path: &Path) -> Result<csv::Reader<File>> {
    let file = File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(file))
}

fn parse_err(path: &Path, row: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        row,
        message: message.into(),
    }
}

fn parse_field(path: &Path, row: usize, field: &str) -> Result<f64> {
    let v: f64 = field
        .parse()
        .map_err(|_| parse_err(path, row, format!("`{field}` is not a number")))?;
    if !v.is_finite() {
        return Err(parse_err(path, row, format!("non-finite value `{field}`")));
    }
    Ok(v)
}

/// Load Tecator spectra as two-class curves on `[850, 1050]`. Row numbers in
/// errors count data rows from 1.
pub fn load_tecator(path: impl AsRef<Path>) -> Result<LabeledDataset<f64>> {
    let path = path.as_ref();
    let mut reader = open(path)?;
    let width = TECATOR_CHANNELS + 1;
    let header = reader.headers().map_err(|e| parse_err(path, 0, e.to_string()))?.len();
    if header != width {
        return Err(parse_err(
            path,
            0,
            format!("header has {header} columns, expected {width} (100 absorbances + fat)"),
        ));
    }

    let domain = Interval::new(850.0, 1050.0)?;
    let grid: Vec<f64> = (0..TECATOR_CHANNELS).map(|j| 850.0 + 2.0 * j as f64).collect();
    let mut functions = Vec::new();
    let mut labels = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let row = i + 1;
        let record = record.map_err(|e| parse_err(path, row, e.to_string()))?;
        if record.len() != width {
            return Err(parse_err(
                path,
                row,
                format!("{} columns, expected {width}", record.len()),
            ));
        }
        let values = record
            .iter()
            .map(|f| parse_field(path, row, f))
            .collect::<Result<Vec<f64>>>()?;
        let fat = values[TECATOR_CHANNELS];
        labels.push(usize::from(fat >= FAT_THRESHOLD));
        functions.push(SampledFunction::new(
            domain,
            grid.clone(),
            values[..TECATOR_CHANNELS].to_vec(),
        )?);
    }
    if functions.is_empty() {
        return Err(parse_err(path, 1, "no data rows"));
    }
    LabeledDataset::classification(domain, functions, labels, 2)
}

/// Write a classification dataset on a shared grid.
pub fn write_labeled_csv(ds: &LabeledDataset<f64>, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let labels = ds
        .labels()
        .ok_or_else(|| Error::Config("only classification datasets can be exported".into()))?;
    let first = ds.functions().first().ok_or(Error::EmptyDataset)?;
    if ds.functions().iter().any(|f| f.points() != first.points()) {
        return Err(Error::Dimension("export needs a shared observation grid".into()));
    }
    let file = File::create(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut w = csv::Writer::from_writer(file);
    let io = |e: csv::Error| Error::Io {
        path: path.to_path_buf(),
        source: std::io::Error::other(e),
    };
    let mut header: Vec<String> = first.points().iter().map(|x| format!("t_{x}")).collect();
    header.push("label".into());
    w.write_record(&header).map_err(io)?;
    for (f, l) in ds.functions().iter().zip(labels) {
        let mut row: Vec<String> = f.values().iter().map(|v| v.to_string()).collect();
        row.push(l.to_string());
        w.write_record(&row).map_err(io)?;
    }
    w.flush().map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Read a dataset written by [`write_labeled_csv`]. The domain spans the
/// first to the last grid point.
pub fn load_labeled_csv(path: impl AsRef<Path>) -> Result<LabeledDataset<f64>> {
    let path = path.as_ref();
    let mut reader = open(path)?;
    let header = reader.headers().map_err(|e| parse_err(path, 0, e.to_string()))?.clone();
    if header.len() < 3 || &header[header.len() - 1] != "label" {
        return Err(parse_err(path, 0, "expected t_<point> columns followed by `label`"));
    }
    let grid = header
        .iter()
        .take(header.len() - 1)
        .map(|h| {
            h.strip_prefix("t_")
                .and_then(|s| s.parse::<f64>().ok())
                .ok_or_else(|| parse_err(path, 0, format!("bad column name `{h}`")))
        })
        .collect::<Result<Vec<f64>>>()?;
    let domain = Interval::new(grid[0], grid[grid.len() - 1])?;
    let mut functions = Vec::new();
    let mut labels = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let row = i + 1;
        let record = record.map_err(|e| parse_err(path, row, e.to_string()))?;
        if record.len() != header.len() {
            return Err(parse_err(
                path,
                row,
                format!("{} columns, expected {}", record.len(), header.len()),
            ));
        }
        let values = record
            .iter()
            .take(grid.len())
            .map(|f| parse_field(path, row, f))
            .collect::<Result<Vec<f64>>>()?;
        let label: usize = record[grid.len()]
            .parse()
            .map_err(|_| parse_err(path, row, "label is not a class index"))?;
        functions.push(SampledFunction::new(domain, grid.clone(), values)?);
        labels.push(label);
    }
    let classes = labels.iter().max().map_or(0, |m| m + 1);
    if functions.is_empty() {
        return Err(parse_err(path, 1, "no data rows"));
    }
    LabeledDataset::classification(domain, functions, labels, classes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn header() -> String {
        let mut cols: Vec<String> = (0..TECATOR_CHANNELS).map(|j| format!("abs_{}", 850 + 2 * j)).collect();
        cols.push("fat".into());
        cols.join(",")
    }

    fn row(fat: f64, channels: usize) -> String {
        let mut cols: Vec<String> = (0..channels).map(|j| format!("{:.4}", 2.5 + 0.01 * j as f64)).collect();
        cols.push(fat.to_string());
        cols.join(",")
    }

    fn write(lines: &[String]) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        for l in lines {
            writeln!(f, "{l}").unwrap();
        }
        f
    }

    #[test]
    fn threshold_is_strict() {
        let f = write(&[header(), row(19.99, 100), row(20.0, 100), row(35.0, 100)]);
        let ds = load_tecator(f.path()).unwrap();
        assert_eq!(ds.labels().unwrap(), &[0, 1, 1]);
        let curve = &ds.functions()[0];
        assert_eq!(curve.len(), 100);
        assert_eq!(curve.points()[99], 1048.0);
        assert_eq!(ds.domain(), Interval::new(850.0, 1050.0).unwrap());
    }

    #[test]
    fn loads_all_rows() {
        let mut lines = vec![header()];
        lines.extend((0..215).map(|i| row(i as f64 / 5.0, 100)));
        let ds = load_tecator(write(&lines).path()).unwrap();
        assert_eq!(ds.len(), 215);
    }

    #[test]
    fn short_row_names_its_number() {
        let f = write(&[header(), row(10.0, 100), row(10.0, 99)]);
        match load_tecator(f.path()) {
            Err(Error::Parse { row, .. }) => assert_eq!(row, 2),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn non_finite_value_is_rejected() {
        let mut bad = row(10.0, 100);
        bad = bad.replacen("2.5000", "NaN", 1);
        let f = write(&[header(), bad]);
        assert!(matches!(load_tecator(f.path()), Err(Error::Parse { row: 1, .. })));
    }

    #[test]
    fn missing_file_names_path() {
        let err = load_tecator("/nonexistent/tecator.csv").unwrap_err();
        assert!(err.to_string().contains("/nonexistent/tecator.csv"));
    }

    #[test]
    fn export_round_trip() {
        let spec = super::super::WaveSpec {
            n_per_class: 4,
            seed: 2,
            ..Default::default()
        };
        let ds = super::super::gen_waveform(&spec).unwrap();
        let out = tempfile::NamedTempFile::new().unwrap();
        write_labeled_csv(&ds, out.path()).unwrap();
        let back = load_labeled_csv(out.path()).unwrap();
        assert_eq!(back, ds);
    }
}
