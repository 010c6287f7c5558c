use crate::error::{Error, Result};
use crate::timeseries::Embedding;

/// Library rows ordered by Euclidean distance to a query.
#[derive(Debug, Clone, PartialEq)]
pub struct NeighborSet {
    pub indices: Vec<usize>,
    pub distances: Vec<f64>,
    /// Fewer rows than requested were available.
    pub truncated: bool,
}

impl NeighborSet {
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }
}

/// Temporal exclusion around a query: library rows whose origin time lies
/// within `radius` ticks of `query_time` (inclusive) are skipped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Exclusion {
    pub query_time: i64,
    pub radius: usize,
}

impl Exclusion {
    fn excludes(&self, t: i64) -> bool {
        t.abs_diff(self.query_time) <= self.radius as u64
    }
}

#[inline]
pub(crate) fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

pub(crate) fn check_query(library: &Embedding, query: &[f64]) -> Result<()> {
    if library.is_empty() {
        return Err(Error::EmptyLibrary);
    }
    if query.len() != library.dim() {
        return Err(Error::DimensionMismatch {
            expected: library.dim(),
            got: query.len(),
        });
    }
    Ok(())
}

/// Exact `k` nearest library rows to `query`, ties broken by ascending row
/// index. Requests beyond the library size return every eligible row and
/// set `truncated`.
pub fn knn(
    library: &Embedding,
    query: &[f64],
    k: usize,
    exclusion: Option<Exclusion>,
) -> Result<NeighborSet> {
    check_query(library, query)?;
    if k == 0 {
        return Err(Error::InvalidParameter("k must be >= 1".into()));
    }
    let times = library.times();
    let mut cand: Vec<(f64, usize)> = library
        .rows()
        .enumerate()
        .filter(|(i, _)| !exclusion.is_some_and(|e| e.excludes(times[*i])))
        .map(|(i, row)| (squared_distance(row, query), i))
        .collect();
    if cand.is_empty() {
        return Err(Error::EmptyLibrary);
    }
    let order = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
    let truncated = k > cand.len();
    if k < cand.len() {
        cand.select_nth_unstable_by(k - 1, order);
        cand.truncate(k);
    }
    cand.sort_unstable_by(order);
    Ok(NeighborSet {
        indices: cand.iter().map(|c| c.1).collect(),
        distances: cand.iter().map(|c| c.0.sqrt()).collect(),
        truncated,
    })
}
