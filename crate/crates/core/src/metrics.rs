//! Behavioral similarity between sessions and between groups.
//!
//! Each length-`Δ` window of a session is read as a two-point distribution
//! over {correct, incorrect}. Two sessions are compared by the mean distance
//! between their aligned window distributions, truncated to the shorter
//! session. Groups are compared the same way on member-averaged windows.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Outcome, Session};
use crate::scalar::Scalar;

/// Window length used when none is given.
pub const DEFAULT_WINDOW: usize = 20;

/// Fraction of correct outcomes in each length-`window` sliding window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowedSeries<T> {
    pub values: Vec<T>,
    pub window: usize,
    pub source_len: usize,
}

/// Member-averaged windowed series for a group of sessions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupSeries<T> {
    pub values: Vec<T>,
    pub window: usize,
    pub group_size: usize,
}

/// Correct-count of every window, computed with a running sum.
fn window_counts(outcomes: impl ExactSizeIterator<Item = Outcome>, delta: usize) -> Vec<usize> {
    let m = outcomes.len();
    if m < delta {
        return Vec::new();
    }
    let ind: Vec<usize> = outcomes.map(|o| o.is_correct() as usize).collect();
    let mut counts = Vec::with_capacity(m - delta + 1);
    let mut sum: usize = ind[..delta].iter().sum();
    counts.push(sum);
    for t in 1..=m - delta {
        sum = sum + ind[t + delta - 1] - ind[t - 1];
        counts.push(sum);
    }
    counts
}

fn check_window(delta: usize) -> Result<()> {
    if delta == 0 {
        Err(Error::Domain("window length must be >= 1".into()))
    } else {
        Ok(())
    }
}

/// Windowed correct-fractions of a raw outcome sequence.
pub fn windowed_outcomes<T: Scalar>(outcomes: &[Outcome], delta: usize) -> Result<WindowedSeries<T>> {
    check_window(delta)?;
    let d = T::from_count(delta);
    Ok(WindowedSeries {
        values: window_counts(outcomes.iter().copied(), delta)
            .into_iter()
            .map(|c| T::from_count(c) / d)
            .collect(),
        window: delta,
        source_len: outcomes.len(),
    })
}

/// Windowed correct-fractions of `session`; empty when the session is shorter
/// than the window.
pub fn windowed_series<T: Scalar>(session: &Session, delta: usize) -> Result<WindowedSeries<T>> {
    check_window(delta)?;
    let d = T::from_count(delta);
    Ok(WindowedSeries {
        values: window_counts(session.outcomes(), delta)
            .into_iter()
            .map(|c| T::from_count(c) / d)
            .collect(),
        window: delta,
        source_len: session.len(),
    })
}

/// Sliding-window accuracy curve of a session, for plotting.
pub fn accuracy_curve<T: Scalar>(session: &Session, delta: usize) -> Result<WindowedSeries<T>> {
    windowed_series(session, delta)
}

/// A distance between two discrete distributions on the same domain.
pub trait DistributionDistance<T: Scalar>: Sync {
    fn name(&self) -> &'static str;

    /// Distance between two pmfs given as aligned probability slices.
    fn pmf_distance(&self, p: &[T], q: &[T]) -> T;

    /// Distance between the two-point distributions (correct, incorrect) with
    /// correct-probabilities `p` and `q`.
    fn distance(&self, p: T, q: T) -> Result<T> {
        for x in [p, q] {
            if !(x >= T::zero() && x <= T::one()) {
                return Err(Error::Domain(format!("probability {x} outside [0, 1]")));
            }
        }
        Ok(self.pmf_distance(&[p, T::one() - p], &[q, T::one() - q]))
    }
}

/// L1 distance between pmfs.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct MatchDistance;

impl<T: Scalar> DistributionDistance<T> for MatchDistance {
    fn name(&self) -> &'static str {
        "match"
    }

    fn pmf_distance(&self, p: &[T], q: &[T]) -> T {
        p.iter()
            .zip(q)
            .fold(T::zero(), |acc, (a, b)| acc + (*a - *b).abs())
    }
}

/// Match Distance between two-point distributions; `2|p - q|`.
pub fn match_distance<T: Scalar>(p: T, q: T) -> Result<T> {
    MatchDistance.distance(p, q)
}

/// Looks up a distance by name.
pub fn distance_by_name(name: &str) -> Result<MatchDistance> {
    match name {
        "match" => Ok(MatchDistance),
        other => Err(Error::Domain(format!("unknown distance {other:?}"))),
    }
}

fn mean_aligned<T: Scalar, D: DistributionDistance<T> + ?Sized>(a: &[T], b: &[T], dist: &D) -> Result<T> {
    let n = a.len().min(b.len());
    let mut total = T::zero();
    for (x, y) in a[..n].iter().zip(&b[..n]) {
        total = total + dist.distance(*x, *y)?;
    }
    Ok(total / T::from_count(n))
}

/// Mean distance between the aligned windows of `a` and `b`, both truncated
/// to the shorter session.
pub fn individual_distance<T: Scalar, D: DistributionDistance<T> + ?Sized>(
    a: &Session,
    b: &Session,
    delta: usize,
    dist: &D,
) -> Result<T> {
    check_window(delta)?;
    let l = a.len().min(b.len());
    if l < delta {
        return Err(Error::InsufficientData(format!(
            "sessions of length {} and {} are shorter than window {delta}",
            a.len(),
            b.len()
        )));
    }
    let d = T::from_count(delta);
    let wa = window_counts(a.outcomes().take(l), delta);
    let wb = window_counts(b.outcomes().take(l), delta);
    let mut total = T::zero();
    for (ca, cb) in wa.iter().zip(&wb) {
        total = total + dist.distance(T::from_count(*ca) / d, T::from_count(*cb) / d)?;
    }
    Ok(total / T::from_count(wa.len()))
}

/// Window-wise mean over the members' correct-fractions, truncated to the
/// shortest member.
pub fn group_series<T: Scalar>(sessions: &[&Session], delta: usize) -> Result<GroupSeries<T>> {
    check_window(delta)?;
    if sessions.is_empty() {
        return Err(Error::Domain("group_series of an empty group".into()));
    }
    let l = sessions.iter().map(|s| s.len()).min().unwrap();
    if l < delta {
        return Err(Error::InsufficientData(format!(
            "shortest group member has {l} trials, window is {delta}"
        )));
    }
    let mut sums = vec![0usize; l - delta + 1];
    for s in sessions {
        for (acc, c) in sums.iter_mut().zip(window_counts(s.outcomes().take(l), delta)) {
            *acc += c;
        }
    }
    let norm = T::from_count(sessions.len() * delta);
    Ok(GroupSeries {
        values: sums.into_iter().map(|c| T::from_count(c) / norm).collect(),
        window: delta,
        group_size: sessions.len(),
    })
}

/// Mean distance between aligned positions of two group series.
pub fn group_distance<T: Scalar, D: DistributionDistance<T> + ?Sized>(
    gi: &GroupSeries<T>,
    gj: &GroupSeries<T>,
    dist: &D,
) -> Result<T> {
    if gi.values.is_empty() || gj.values.is_empty() {
        return Err(Error::InsufficientData("empty group series".into()));
    }
    if gi.window != gj.window {
        return Err(Error::Domain(format!(
            "group series windows differ: {} vs {}",
            gi.window, gj.window
        )));
    }
    mean_aligned(&gi.values, &gj.values, dist)
}

/// Row/column label of a distance matrix.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Label {
    pub individual_id: String,
    pub session_index: u32,
    pub execution_index: u32,
}

impl Label {
    pub fn new(individual_id: impl Into<String>, session_index: u32, execution_index: u32) -> Self {
        Label {
            individual_id: individual_id.into(),
            session_index,
            execution_index,
        }
    }
}

/// Rendered as `id|session|execution`.
impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}|{}|{}", self.individual_id, self.session_index, self.execution_index)
    }
}

impl FromStr for Label {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut parts = s.rsplitn(3, '|');
        let (Some(exec), Some(session), Some(id)) = (parts.next(), parts.next(), parts.next()) else {
            return Err(Error::Domain(format!("malformed label {s:?}")));
        };
        let bad = |_| Error::Domain(format!("malformed label {s:?}"));
        Ok(Label {
            individual_id: id.to_string(),
            session_index: session.parse().map_err(bad)?,
            execution_index: exec.parse().map_err(bad)?,
        })
    }
}

/// Symmetric matrix of pairwise distances with a zero diagonal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceMatrix<T> {
    pub labels: Vec<Label>,
    pub entries: Vec<Vec<T>>,
}

impl<T: Scalar> DistanceMatrix<T> {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        self.entries[i][j]
    }

    /// Checks shape, symmetry within `tol`, zero diagonal and entries in `[0, upper]`.
    pub fn validate(&self, tol: T, upper: T) -> Result<()> {
        let n = self.labels.len();
        if self.entries.len() != n || self.entries.iter().any(|r| r.len() != n) {
            return Err(Error::Integrity(format!("matrix is not {n}x{n}")));
        }
        for i in 0..n {
            if self.entries[i][i] != T::zero() {
                return Err(Error::Integrity(format!("non-zero diagonal at {i}")));
            }
            for j in 0..n {
                let v = self.entries[i][j];
                if !(v >= T::zero() && v <= upper) {
                    return Err(Error::Integrity(format!("entry ({i},{j}) = {v} out of range")));
                }
                if (v - self.entries[j][i]).abs() > tol {
                    return Err(Error::Integrity(format!("asymmetric at ({i},{j})")));
                }
            }
        }
        Ok(())
    }
}

/// Fills a symmetric matrix from a pair function evaluated on the upper
/// triangle in parallel.
pub fn distance_matrix<T, I, F>(labels: Vec<Label>, items: &[I], pair: F) -> Result<DistanceMatrix<T>>
where
    T: Scalar,
    I: Sync,
    F: Fn(&I, &I) -> Result<T> + Sync,
{
    let n = items.len();
    if n < 2 {
        return Err(Error::InsufficientData(format!("distance matrix needs >= 2 items, got {n}")));
    }
    if labels.len() != n {
        return Err(Error::Domain(format!("{} labels for {n} items", labels.len())));
    }
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
    let values = pairs
        .par_iter()
        .map(|&(i, j)| {
            pair(&items[i], &items[j]).map_err(|e| match e {
                Error::InsufficientData(msg) => Error::InsufficientData(format!(
                    "pair ({}, {}): {msg}",
                    labels[i], labels[j]
                )),
                other => other,
            })
        })
        .collect::<Result<Vec<T>>>()?;
    let mut entries = vec![vec![T::zero(); n]; n];
    for (&(i, j), v) in pairs.iter().zip(values) {
        entries[i][j] = v;
        entries[j][i] = v;
    }
    Ok(DistanceMatrix { labels, entries })
}

/// Pairwise individual distances between labeled sessions.
pub fn session_distance_matrix<T: Scalar, D: DistributionDistance<T> + ?Sized>(
    items: &[(Label, &Session)],
    delta: usize,
    dist: &D,
) -> Result<DistanceMatrix<T>> {
    let labels = items.iter().map(|(l, _)| l.clone()).collect();
    let sessions: Vec<&Session> = items.iter().map(|(_, s)| *s).collect();
    distance_matrix(labels, &sessions, |a, b| individual_distance(a, b, delta, dist))
}

/// Pairwise group distances between labeled group series.
pub fn group_distance_matrix<T: Scalar, D: DistributionDistance<T> + ?Sized>(
    items: &[(Label, GroupSeries<T>)],
    dist: &D,
) -> Result<DistanceMatrix<T>> {
    let labels = items.iter().map(|(l, _)| l.clone()).collect();
    let series: Vec<&GroupSeries<T>> = items.iter().map(|(_, g)| g).collect();
    distance_matrix(labels, &series, |a, b| group_distance(a, b, dist))
}
