use std::fmt;

use super::frame::Frame;
use crate::error::{Error, Result};

/// One state-space coordinate: a column read `lag` ticks before the origin.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Coordinate {
    pub column: String,
    pub lag: usize,
}

impl Coordinate {
    pub fn new(column: impl Into<String>, lag: usize) -> Self {
        Self {
            column: column.into(),
            lag,
        }
    }
}

impl fmt::Display for Coordinate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.lag == 0 {
            write!(f, "{}(t)", self.column)
        } else {
            write!(f, "{}(t-{})", self.column, self.lag)
        }
    }
}

/// Which columns and lags form the state space, what to predict and how far ahead.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingSpec {
    coordinates: Vec<Coordinate>,
    target: String,
    tp: usize,
}

impl EmbeddingSpec {
    pub fn new(coordinates: Vec<Coordinate>, target: impl Into<String>, tp: usize) -> Result<Self> {
        if coordinates.is_empty() {
            return Err(Error::InvalidParameter("embedding needs at least one coordinate".into()));
        }
        for (i, c) in coordinates.iter().enumerate() {
            if coordinates[..i].contains(c) {
                return Err(Error::DuplicateCoordinate(c.column.clone(), c.lag));
            }
        }
        Ok(Self {
            coordinates,
            target: target.into(),
            tp,
        })
    }

    /// Jailed and Quiet counts at lags 0, 2 and 4 predicting Active `tp` ticks ahead.
    pub fn jailed_quiet(tp: usize) -> Self {
        let coordinates = ["jailed", "quiet"]
            .into_iter()
            .flat_map(|c| [0, 2, 4].map(|lag| Coordinate::new(c, lag)))
            .collect();
        Self::new(coordinates, "active", tp).expect("static spec is valid")
    }

    /// Same spec with one more coordinate appended.
    pub fn with_coordinate(mut self, coordinate: Coordinate) -> Result<Self> {
        if self.coordinates.contains(&coordinate) {
            return Err(Error::DuplicateCoordinate(coordinate.column, coordinate.lag));
        }
        self.coordinates.push(coordinate);
        Ok(self)
    }

    pub fn with_tp(mut self, tp: usize) -> Self {
        self.tp = tp;
        self
    }

    pub fn coordinates(&self) -> &[Coordinate] {
        &self.coordinates
    }

    pub fn target(&self) -> &str {
        &self.target
    }

    pub fn tp(&self) -> usize {
        self.tp
    }

    /// Embedding dimension E.
    pub fn dim(&self) -> usize {
        self.coordinates.len()
    }

    pub fn max_lag(&self) -> usize {
        self.coordinates.iter().map(|c| c.lag).max().unwrap_or(0)
    }

    pub fn labels(&self) -> Vec<String> {
        self.coordinates.iter().map(ToString::to_string).collect()
    }

    /// State vector with origin at frame row `row`, or `None` when a lag
    /// reaches before the record or a value is not finite.
    pub fn state_at(&self, frame: &Frame, row: usize) -> Result<Option<Vec<f64>>> {
        let cols = self.resolve(frame)?;
        Ok(state_from(&cols, &self.coordinates, row))
    }

    fn resolve<'f>(&self, frame: &'f Frame) -> Result<Vec<&'f [f64]>> {
        self.coordinates
            .iter()
            .map(|c| frame.column(&c.column))
            .collect()
    }
}

fn state_from(cols: &[&[f64]], coords: &[Coordinate], row: usize) -> Option<Vec<f64>> {
    coords
        .iter()
        .zip(cols)
        .map(|(c, col)| {
            let v = *col.get(row.checked_sub(c.lag)?)?;
            v.is_finite().then_some(v)
        })
        .collect()
}

/// Materialized state-space points aligned with their targets.
///
/// Points are stored row-major; row `i` has origin time `times[i]` and
/// target `targets[i]`, the target variable `Tp` ticks after the origin.
#[derive(Debug, Clone, PartialEq)]
pub struct Embedding {
    dim: usize,
    points: Vec<f64>,
    targets: Vec<f64>,
    times: Vec<i64>,
    labels: Vec<String>,
    dropped: usize,
}

impl Embedding {
    pub fn empty(dim: usize, labels: Vec<String>) -> Self {
        assert_eq!(labels.len(), dim);
        Self {
            dim,
            points: Vec::new(),
            targets: Vec::new(),
            times: Vec::new(),
            labels,
            dropped: 0,
        }
    }

    /// Builds an embedding from explicit rows; origin times default to row positions.
    pub fn from_rows(rows: &[Vec<f64>], targets: &[f64], times: Option<&[i64]>) -> Result<Self> {
        let dim = rows.first().map(Vec::len).ok_or(Error::EmptyLibrary)?;
        if targets.len() != rows.len() {
            return Err(Error::DimensionMismatch {
                expected: rows.len(),
                got: targets.len(),
            });
        }
        let mut e = Self::empty(dim, (0..dim).map(|i| format!("x{}", i + 1)).collect());
        for (i, (row, &t)) in rows.iter().zip(targets).enumerate() {
            let time = times.map_or(i as i64, |ts| ts[i]);
            e.push(row, t, time)?;
        }
        Ok(e)
    }

    pub fn push(&mut self, point: &[f64], target: f64, time: i64) -> Result<()> {
        if point.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: point.len(),
            });
        }
        self.points.extend_from_slice(point);
        self.targets.push(target);
        self.times.push(time);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.points[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.points.chunks_exact(self.dim)
    }

    pub fn targets(&self) -> &[f64] {
        &self.targets
    }

    pub fn times(&self) -> &[i64] {
        &self.times
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// Rows dropped during construction because they held non-finite values.
    pub fn dropped(&self) -> usize {
        self.dropped
    }

    /// Rows whose origin time satisfies `keep`, in original order.
    pub fn filter_times(&self, mut keep: impl FnMut(i64) -> bool) -> Self {
        let mut out = Self::empty(self.dim, self.labels.clone());
        for i in 0..self.len() {
            if keep(self.times[i]) {
                out.points.extend_from_slice(self.row(i));
                out.targets.push(self.targets[i]);
                out.times.push(self.times[i]);
            }
        }
        out
    }

    /// Same rows with targets replaced.
    pub fn with_targets(&self, targets: Vec<f64>) -> Result<Self> {
        if targets.len() != self.len() {
            return Err(Error::DimensionMismatch {
                expected: self.len(),
                got: targets.len(),
            });
        }
        Ok(Self {
            targets,
            ..self.clone()
        })
    }
}

/// Univariate delay embedding: row for origin `t` is
/// `(x[t], x[t-tau], ..., x[t-(E-1)tau])` with target `x[t+Tp]`.
/// Origin times are series positions (0-based).
pub fn build_delay_embedding(series: &[f64], e: usize, tau: usize, tp: usize) -> Result<Embedding> {
    if e == 0 || tau == 0 {
        return Err(Error::InvalidParameter("E and tau must be >= 1".into()));
    }
    let span = (e - 1) * tau;
    let required = span + tp + 1;
    if series.len() < required {
        return Err(Error::InsufficientData {
            required,
            available: series.len(),
        });
    }
    let labels = (0..e)
        .map(|i| if i == 0 { "x(t)".to_owned() } else { format!("x(t-{})", i * tau) })
        .collect();
    let mut out = Embedding::empty(e, labels);
    let mut point = vec![0.0; e];
    for origin in span..series.len() - tp {
        for (j, p) in point.iter_mut().enumerate() {
            *p = series[origin - j * tau];
        }
        let target = series[origin + tp];
        if point.iter().all(|v| v.is_finite()) && target.is_finite() {
            out.push(&point, target, origin as i64)?;
        } else {
            out.dropped += 1;
        }
    }
    Ok(out)
}

/// Multivariate embedding of `frame` per `spec`. Origin times are frame ticks.
pub fn build_generalized_embedding(frame: &Frame, spec: &EmbeddingSpec) -> Result<Embedding> {
    let cols = spec.resolve(frame)?;
    let target = frame.column(spec.target())?;
    let (lag, tp) = (spec.max_lag(), spec.tp());
    let required = lag + tp + 1;
    if frame.len() < required {
        return Err(Error::InsufficientData {
            required,
            available: frame.len(),
        });
    }
    let mut out = Embedding::empty(spec.dim(), spec.labels());
    for origin in lag..frame.len() - tp {
        let y = target[origin + tp];
        match state_from(&cols, spec.coordinates(), origin) {
            Some(point) if y.is_finite() => out.push(&point, y, frame.time_at(origin))?,
            _ => out.dropped += 1,
        }
    }
    Ok(out)
}

/// Inclusive range of origin ticks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TimeRange {
    pub first: i64,
    pub last: i64,
}

impl TimeRange {
    pub fn new(first: i64, last: i64) -> Self {
        Self { first, last }
    }

    pub fn contains(&self, t: i64) -> bool {
        (self.first..=self.last).contains(&t)
    }

    pub fn overlaps(&self, other: &TimeRange) -> bool {
        self.first <= other.last && other.first <= self.last
    }
}

impl std::str::FromStr for TimeRange {
    type Err = Error;

    /// Parses `a:b`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidParameter(format!("bad range '{s}', expected first:last"));
        let (a, b) = s.split_once(':').ok_or_else(bad)?;
        let first = a.trim().parse().map_err(|_| bad())?;
        let last = b.trim().parse().map_err(|_| bad())?;
        if first > last {
            return Err(bad());
        }
        Ok(Self { first, last })
    }
}

/// Splits rows by origin time into library and prediction sets.
pub fn split_library_prediction(
    embedding: &Embedding,
    lib: TimeRange,
    pred: TimeRange,
    allow_overlap: bool,
) -> Result<(Embedding, Embedding)> {
    if !allow_overlap && lib.overlaps(&pred) {
        return Err(Error::OverlappingRanges {
            lib: (lib.first, lib.last),
            pred: (pred.first, pred.last),
        });
    }
    let library = embedding.filter_times(|t| lib.contains(t));
    let prediction = embedding.filter_times(|t| pred.contains(t));
    if library.is_empty() {
        return Err(Error::EmptyPartition("library"));
    }
    if prediction.is_empty() {
        return Err(Error::EmptyPartition("prediction"));
    }
    Ok((library, prediction))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rows(e: &Embedding) -> Vec<Vec<f64>> {
        e.rows().map(<[f64]>::to_vec).collect()
    }

    #[test]
    fn delay_identity_case() {
        let e = build_delay_embedding(&[1., 2., 3., 4., 5.], 1, 1, 1).unwrap();
        assert_eq!(rows(&e), vec![vec![1.], vec![2.], vec![3.], vec![4.]]);
        assert_eq!(e.targets(), &[2., 3., 4., 5.]);
    }

    #[test]
    fn delay_most_recent_first() {
        let e = build_delay_embedding(&[1., 2., 3., 4., 5.], 2, 1, 1).unwrap();
        assert_eq!(rows(&e), vec![vec![2., 1.], vec![3., 2.], vec![4., 3.]]);
        assert_eq!(e.targets(), &[3., 4., 5.]);
    }

    #[test]
    fn delay_with_spacing_and_horizon() {
        // origins t = 2, 3, 4 (0-based): (x[t], x[t-2]) -> x[t+2]
        let e = build_delay_embedding(&[1., 2., 3., 4., 5., 6., 7.], 2, 2, 2).unwrap();
        assert_eq!(rows(&e), vec![vec![3., 1.], vec![4., 2.], vec![5., 3.]]);
        assert_eq!(e.targets(), &[5., 6., 7.]);
        assert_eq!(e.times(), &[2, 3, 4]);
    }

    #[test]
    fn delay_too_short_names_minimum() {
        let err = build_delay_embedding(&[1., 2., 3.], 3, 1, 1).unwrap_err();
        match err {
            Error::InsufficientData { required, available } => {
                assert_eq!((required, available), (4, 3));
            }
            e => panic!("{e}"),
        }
        assert!(err_text(build_delay_embedding(&[1.], 1, 1, 1)).contains("insufficient data"));
    }

    fn err_text<T: std::fmt::Debug>(r: Result<T>) -> String {
        r.unwrap_err().to_string()
    }

    #[test]
    fn generalized_zero_lag() {
        let f = Frame::from_columns(&[("A", vec![1., 2., 3.]), ("B", vec![10., 20., 30.])]).unwrap();
        let spec = EmbeddingSpec::new(vec![Coordinate::new("A", 0), Coordinate::new("B", 0)], "A", 1).unwrap();
        let e = build_generalized_embedding(&f, &spec).unwrap();
        assert_eq!(rows(&e), vec![vec![1., 10.], vec![2., 20.]]);
        assert_eq!(e.targets(), &[2., 3.]);
        assert_eq!(e.times(), &[1, 2]);
    }

    #[test]
    fn jailed_quiet_spec_is_six_dimensional() {
        let spec = EmbeddingSpec::jailed_quiet(5);
        assert_eq!(spec.dim(), 6);
        assert_eq!(spec.max_lag(), 4);
        assert_eq!(spec.labels()[1], "jailed(t-2)");
    }

    #[test]
    fn length_ten_frame_gives_one_row() {
        let x: Vec<f64> = (0..10).map(f64::from).collect();
        let f = Frame::from_columns(&[("jailed", x.clone()), ("quiet", x.clone()), ("active", x)]).unwrap();
        let e = build_generalized_embedding(&f, &EmbeddingSpec::jailed_quiet(5)).unwrap();
        assert_eq!(e.len(), 1);
        // origin row 4 (tick 5), target at row 9
        assert_eq!(e.row(0), &[4., 2., 0., 4., 2., 0.]);
        assert_eq!(e.targets(), &[9.]);
    }

    #[test]
    fn unknown_column_and_duplicates() {
        let f = Frame::from_columns(&[("A", vec![1., 2., 3.])]).unwrap();
        let spec = EmbeddingSpec::new(vec![Coordinate::new("Z", 0)], "A", 1).unwrap();
        assert!(matches!(build_generalized_embedding(&f, &spec), Err(Error::UnknownColumn(_))));
        assert!(EmbeddingSpec::new(vec![Coordinate::new("A", 1), Coordinate::new("A", 1)], "A", 1).is_err());
    }

    #[test]
    fn non_finite_rows_dropped_and_counted() {
        let f = Frame::from_columns(&[("A", vec![1., f64::NAN, 3., 4., 5.])]).unwrap();
        let spec = EmbeddingSpec::new(vec![Coordinate::new("A", 0)], "A", 1).unwrap();
        let e = build_generalized_embedding(&f, &spec).unwrap();
        // origins 0..4: row 0 has NaN target, row 1 NaN coordinate
        assert_eq!(e.len(), 2);
        assert_eq!(e.dropped(), 2);
    }

    #[test]
    fn split_partitions() {
        let x: Vec<f64> = (1..=100).map(f64::from).collect();
        let rows: Vec<Vec<f64>> = x.iter().map(|&v| vec![v]).collect();
        let times: Vec<i64> = (1..=100).collect();
        let e = Embedding::from_rows(&rows, &x, Some(&times)).unwrap();
        let (l, p) = split_library_prediction(&e, TimeRange::new(1, 50), TimeRange::new(51, 100), false).unwrap();
        assert_eq!((l.len(), p.len()), (50, 50));
        let err = split_library_prediction(&e, TimeRange::new(1, 50), TimeRange::new(40, 60), false).unwrap_err();
        assert!(err.to_string().contains("overlapping ranges"));
        assert!(split_library_prediction(&e, TimeRange::new(1, 50), TimeRange::new(40, 60), true).is_ok());
        assert!(matches!(
            split_library_prediction(&e, TimeRange::new(1, 50), TimeRange::new(200, 300), false),
            Err(Error::EmptyPartition("prediction"))
        ));
    }

    #[test]
    fn range_parsing() {
        assert_eq!("1:1500".parse::<TimeRange>().unwrap(), TimeRange::new(1, 1500));
        assert!("5:1".parse::<TimeRange>().is_err());
        assert!("x".parse::<TimeRange>().is_err());
    }
}
