//! CSV point tables and the fixed-precision float formatting used by every
//! written artifact.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use ndarray::Array2;
use serde::Serializer;
use serde_json::value::RawValue;

use crate::data::{Dataset, Labeling};
use crate::error::{Error, Result};

/// Points parsed from CSV, with the optional one-based `label` column split off.
#[derive(Debug, Clone, PartialEq)]
pub struct PointTable {
    pub header: Option<Vec<String>>,
    pub rows: Vec<Vec<f64>>,
    pub labels: Option<Vec<usize>>,
}

impl PointTable {
    pub fn dim(&self) -> usize {
        self.rows.first().map_or(0, Vec::len)
    }

    /// Dataset in the bounding box of the points.
    pub fn dataset(&self) -> Result<Dataset> {
        let n = self.rows.len();
        let flat: Vec<f64> = self.rows.iter().flatten().copied().collect();
        let points = Array2::from_shape_vec((n, self.dim()), flat).map_err(|e| Error::Csv(e.to_string()))?;
        Dataset::from_points(points)
    }

    pub fn labeling(&self) -> Result<Option<Labeling>> {
        self.labels
            .as_deref()
            .map(|l| Labeling::from_one_based(l, None))
            .transpose()
    }
}

fn parse_label(field: &str, row: usize) -> Result<usize> {
    field
        .parse::<usize>()
        .ok()
        .filter(|&y| y >= 1)
        .ok_or_else(|| Error::Csv(format!("row {row}: label {field:?} is not a positive integer")))
}

/// Reads one point per record. A first record that is not entirely numeric is
/// taken as a header; a header whose last name is `label` marks a trailing
/// one-based label column.
pub fn read_points_csv<R: Read>(reader: R) -> Result<PointTable> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(reader);

    let mut header = None;
    let mut has_label = false;
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    let mut width = None;
    for (i, record) in rdr.records().enumerate() {
        let record = record?;
        if record.iter().all(str::is_empty) {
            continue;
        }
        if i == 0 && record.iter().any(|f| f.parse::<f64>().is_err()) {
            let names: Vec<String> = record.iter().map(str::to_owned).collect();
            has_label = names.last().is_some_and(|s| s.eq_ignore_ascii_case("label"));
            width = Some(names.len());
            header = Some(names);
            continue;
        }
        let expected = *width.get_or_insert(record.len());
        if record.len() != expected {
            return Err(Error::Csv(format!(
                "row {}: expected {expected} fields, found {}",
                i + 1,
                record.len()
            )));
        }
        let ncoords = if has_label { expected - 1 } else { expected };
        if ncoords == 0 {
            return Err(Error::Csv("no coordinate columns".into()));
        }
        let mut row = Vec::with_capacity(ncoords);
        for field in record.iter().take(ncoords) {
            let v: f64 = field
                .parse()
                .map_err(|_| Error::Csv(format!("row {}: {field:?} is not a number", i + 1)))?;
            if !v.is_finite() {
                return Err(Error::Csv(format!("row {}: non-finite coordinate", i + 1)));
            }
            row.push(v);
        }
        if has_label {
            labels.push(parse_label(&record[ncoords], i + 1)?);
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::Csv("no data rows".into()));
    }
    Ok(PointTable {
        header,
        rows,
        labels: has_label.then_some(labels),
    })
}

pub fn read_points_path(path: &Path) -> Result<PointTable> {
    read_points_csv(File::open(path)?)
}

/// One one-based label per line, no header; `#` starts a comment line.
pub fn read_labels_csv<R: Read>(reader: R) -> Result<Vec<usize>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut out = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let record = record?;
        if record.len() != 1 {
            return Err(Error::Csv(format!("row {}: expected a single label", i + 1)));
        }
        out.push(parse_label(&record[0], i + 1)?);
    }
    Ok(out)
}

pub fn write_labels_csv<W: Write>(mut w: W, labeling: &Labeling) -> Result<()> {
    for y in labeling.one_based() {
        writeln!(w, "{y}")?;
    }
    Ok(())
}

/// Writes points (and labels, if given) with an `x1,..,xd[,label]` header.
pub fn write_points_csv<W: Write>(mut w: W, data: &Dataset, labeling: Option<&Labeling>) -> Result<()> {
    let mut names: Vec<String> = (1..=data.dim()).map(|k| format!("x{k}")).collect();
    if labeling.is_some() {
        names.push("label".into());
    }
    writeln!(w, "{}", names.join(","))?;
    for l in 0..data.len() {
        let mut fields: Vec<String> = data.point(l).iter().map(|&v| format_f64(v)).collect();
        if let Some(lab) = labeling {
            fields.push((lab.label(l) + 1).to_string());
        }
        writeln!(w, "{}", fields.join(","))?;
    }
    Ok(())
}

pub fn write_matrix_csv<W: Write>(mut w: W, m: &Array2<f64>) -> Result<()> {
    for row in m.rows() {
        let fields: Vec<String> = row.iter().map(|&v| format_f64(v)).collect();
        writeln!(w, "{}", fields.join(","))?;
    }
    Ok(())
}

/// 17 significant digits in scientific notation; enough to round-trip.
pub fn format_f64(v: f64) -> String {
    if v == 0.0 {
        // keeps -0.0 and 0.0 textually identical
        return "0.0000000000000000e0".into();
    }
    format!("{v:.16e}")
}

/// `serialize_with` helper: finite floats at 17 significant digits, others as null.
pub fn ser_f64<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if v.is_finite() {
        let raw = RawValue::from_string(format_f64(*v)).map_err(serde::ser::Error::custom)?;
        s.serialize_some(&raw)
    } else {
        s.serialize_none()
    }
}

pub fn ser_opt_f64<S: Serializer>(v: &Option<f64>, s: S) -> std::result::Result<S::Ok, S::Error> {
    match v {
        Some(x) => ser_f64(x, s),
        None => s.serialize_none(),
    }
}

pub fn ser_vec_f64<S: Serializer>(v: &[f64], s: S) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(v.len()))?;
    for x in v {
        seq.serialize_element(&Sig17(*x))?;
    }
    seq.end()
}

/// Newtype carrying [`ser_f64`] formatting.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sig17(pub f64);

impl serde::Serialize for Sig17 {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        ser_f64(&self.0, s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_with_label_column() {
        let t = read_points_csv("x,y,label\n0.5,1,2\n-1,2e-3,1\n".as_bytes()).unwrap();
        assert_eq!(t.rows, vec![vec![0.5, 1.0], vec![-1.0, 0.002]]);
        assert_eq!(t.labels, Some(vec![2, 1]));
        assert_eq!(t.labeling().unwrap().unwrap().as_slice(), &[1, 0]);
    }

    #[test]
    fn headerless_rows_are_all_coordinates() {
        let t = read_points_csv("1,2\n3,4\n".as_bytes()).unwrap();
        assert!(t.header.is_none() && t.labels.is_none());
        assert_eq!(t.dim(), 2);
    }

    #[test]
    fn malformed_input_is_rejected() {
        assert!(read_points_csv("1,2\n3\n".as_bytes()).is_err());
        assert!(read_points_csv("x\n1\nfoo\n".as_bytes()).is_err());
        assert!(read_points_csv("x,label\n1,0\n".as_bytes()).is_err());
        assert!(read_points_csv("".as_bytes()).is_err());
        assert!(read_points_csv("x\n".as_bytes()).is_err());
        assert!(read_points_csv("1,inf\n".as_bytes()).is_err());
    }

    #[test]
    fn points_round_trip() {
        let data = Dataset::from_values_1d(&[0.1, -2.0 / 3.0, 1e-300]).unwrap();
        let lab = Labeling::new(vec![0, 1, 1], 2).unwrap();
        let mut buf = Vec::new();
        write_points_csv(&mut buf, &data, Some(&lab)).unwrap();
        let t = read_points_csv(buf.as_slice()).unwrap();
        assert_eq!(t.dataset().unwrap().points(), data.points());
        assert_eq!(t.labels, Some(vec![1, 2, 2]));
    }

    #[test]
    fn float_format_has_17_digits() {
        assert_eq!(format_f64(0.1), "1.0000000000000001e-1");
        assert_eq!(format_f64(-0.0), format_f64(0.0));
        let s = serde_json::to_string(&[Sig17(2.5), Sig17(f64::NAN)]).unwrap();
        assert_eq!(s, "[2.5000000000000000e0,null]");
    }

    #[test]
    fn labels_file_round_trip() {
        let lab = Labeling::new(vec![2, 0, 1], 3).unwrap();
        let mut buf = Vec::new();
        write_labels_csv(&mut buf, &lab).unwrap();
        assert_eq!(read_labels_csv(buf.as_slice()).unwrap(), vec![3, 1, 2]);
    }
}
