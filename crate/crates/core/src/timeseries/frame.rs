use std::io::{Read, Write};

use crate::error::{Error, Result};

/// Name of the time column in CSV files.
pub const TIME_COLUMN: &str = "time";

/// A time-indexed table of real-valued columns sharing one unit-step tick index.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    start: i64,
    names: Vec<String>,
    columns: Vec<Vec<f64>>,
}

impl Frame {
    /// Builds a frame whose first row is tick `start`.
    pub fn new(start: i64, columns: Vec<(String, Vec<f64>)>) -> Result<Self> {
        let Some(expected) = columns.first().map(|(_, v)| v.len()) else {
            return Err(Error::InvalidParameter("frame needs at least one column".into()));
        };
        if expected == 0 {
            return Err(Error::InsufficientData {
                required: 1,
                available: 0,
            });
        }
        let mut names = Vec::with_capacity(columns.len());
        let mut data = Vec::with_capacity(columns.len());
        for (name, values) in columns {
            if name == TIME_COLUMN || names.contains(&name) {
                return Err(Error::DuplicateColumn(name));
            }
            if values.len() != expected {
                return Err(Error::ColumnLength {
                    name,
                    len: values.len(),
                    expected,
                });
            }
            names.push(name);
            data.push(values);
        }
        Ok(Self {
            start,
            names,
            columns: data,
        })
    }

    /// Zero-row frame to be grown with [`Frame::push_row`]. Every other
    /// constructor requires at least one row.
    pub fn empty(start: i64, names: &[&str]) -> Self {
        assert!(!names.is_empty(), "frame needs at least one column");
        Self {
            start,
            names: names.iter().map(|n| n.to_string()).collect(),
            columns: vec![Vec::new(); names.len()],
        }
    }

    /// Convenience constructor from borrowed names, starting at tick 1.
    pub fn from_columns<S: AsRef<str>>(columns: &[(S, Vec<f64>)]) -> Result<Self> {
        Self::new(
            1,
            columns
                .iter()
                .map(|(n, v)| (n.as_ref().to_owned(), v.clone()))
                .collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.columns[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn start(&self) -> i64 {
        self.start
    }

    /// Tick of row `i`.
    pub fn time_at(&self, i: usize) -> i64 {
        self.start + i as i64
    }

    pub fn times(&self) -> impl Iterator<Item = i64> + '_ {
        (0..self.len()).map(|i| self.time_at(i))
    }

    /// Row of tick `t`, if inside the frame.
    pub fn row_of(&self, t: i64) -> Option<usize> {
        let i = t.checked_sub(self.start)?;
        (i >= 0 && (i as usize) < self.len()).then_some(i as usize)
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn column(&self, name: &str) -> Result<&[f64]> {
        self.index_of(name)
            .map(|i| self.columns[i].as_slice())
            .ok_or_else(|| Error::UnknownColumn(name.to_owned()))
    }

    fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    /// Appends one row; `values` follow column order.
    pub fn push_row(&mut self, values: &[f64]) -> Result<()> {
        if values.len() != self.columns.len() {
            return Err(Error::DimensionMismatch {
                expected: self.columns.len(),
                got: values.len(),
            });
        }
        for (col, &v) in self.columns.iter_mut().zip(values) {
            col.push(v);
        }
        Ok(())
    }

    /// Adds or replaces a column.
    pub fn set_column(&mut self, name: &str, values: Vec<f64>) -> Result<()> {
        if values.len() != self.len() {
            return Err(Error::ColumnLength {
                name: name.to_owned(),
                len: values.len(),
                expected: self.len(),
            });
        }
        match self.index_of(name) {
            Some(i) => self.columns[i] = values,
            None => {
                self.names.push(name.to_owned());
                self.columns.push(values);
            }
        }
        Ok(())
    }

    /// Rows `[from, to)` as a new frame.
    pub fn slice(&self, from: usize, to: usize) -> Result<Self> {
        if from >= to || to > self.len() {
            return Err(Error::InvalidParameter(format!(
                "bad row range {from}..{to} for frame of {} rows",
                self.len()
            )));
        }
        Ok(Self {
            start: self.time_at(from),
            names: self.names.clone(),
            columns: self.columns.iter().map(|c| c[from..to].to_vec()).collect(),
        })
    }

    /// Reads CSV with a header row whose first column is `time`.
    /// `nan` and empty fields become NaN.
    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let headers = rdr.headers()?.clone();
        if headers.get(0) != Some(TIME_COLUMN) {
            return Err(Error::InvalidParameter(format!(
                "first CSV column must be '{TIME_COLUMN}'"
            )));
        }
        let names: Vec<String> = headers.iter().skip(1).map(str::to_owned).collect();
        let mut columns = vec![Vec::new(); names.len()];
        let mut start = None;
        for (row, record) in rdr.records().enumerate() {
            let record = record?;
            let t: i64 = record[0]
                .parse()
                .map_err(|_| Error::InvalidParameter(format!("bad time '{}' at row {row}", &record[0])))?;
            match start {
                None => start = Some(t),
                Some(s) if t != s + row as i64 => return Err(Error::IrregularTime(row)),
                _ => {}
            }
            for (col, field) in columns.iter_mut().zip(record.iter().skip(1)) {
                col.push(parse_value(field).ok_or_else(|| {
                    Error::InvalidParameter(format!("bad number '{field}' at row {row}"))
                })?);
            }
        }
        let start = start.ok_or(Error::InsufficientData {
            required: 1,
            available: 0,
        })?;
        Self::new(start, names.into_iter().zip(columns).collect())
    }

    /// Writes CSV with a leading `time` column. Values use the shortest
    /// decimal form that round-trips.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(std::iter::once(TIME_COLUMN).chain(self.names.iter().map(String::as_str)))?;
        let mut record = Vec::with_capacity(self.names.len() + 1);
        for i in 0..self.len() {
            record.clear();
            record.push(self.time_at(i).to_string());
            record.extend(self.columns.iter().map(|c| format_value(c[i])));
            w.write_record(&record)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn parse_value(field: &str) -> Option<f64> {
    if field.is_empty() || field.eq_ignore_ascii_case("nan") {
        return Some(f64::NAN);
    }
    field.parse().ok()
}

/// Shortest round-trip decimal; non-finite values are written as `nan`.
pub fn format_value(v: f64) -> String {
    if !v.is_finite() {
        "nan".to_owned()
    } else if v == v.trunc() && v.abs() < 1e15 {
        format!("{v}")
    } else {
        // Debug switches to exponent form for tiny and huge magnitudes
        format!("{v:?}")
    }
}
