//! Dominance and Pareto-front filtering.
//!
//! Comparisons are exact: two equal values are a tie, never an improvement.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::interest::{InterestVector, MeasureFlags};
use crate::patterns::Pattern;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ParetoError {
    #[error("expected {expected} dimensions, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Max,
    Min,
}

impl Direction {
    /// Maps a value so that larger is always better.
    fn orient(self, v: f64) -> f64 {
        match self {
            Direction::Max => v,
            Direction::Min => -v,
        }
    }
}

fn check_dims(v: &[f64], dirs: &[Direction]) -> Result<(), ParetoError> {
    if v.len() != dirs.len() {
        return Err(ParetoError::DimensionMismatch {
            expected: dirs.len(),
            got: v.len(),
        });
    }
    Ok(())
}

/// True iff `a` is no worse than `b` everywhere and strictly better somewhere.
pub fn dominates(a: &[f64], b: &[f64], dirs: &[Direction]) -> Result<bool, ParetoError> {
    check_dims(a, dirs)?;
    check_dims(b, dirs)?;
    Ok(dominates_unchecked(a, b, dirs))
}

fn dominates_unchecked(a: &[f64], b: &[f64], dirs: &[Direction]) -> bool {
    let mut strict = false;
    for ((&x, &y), &d) in a.iter().zip(b).zip(dirs) {
        let (x, y) = (d.orient(x), d.orient(y));
        if x < y {
            return false;
        }
        if x > y {
            strict = true;
        }
    }
    strict
}

/// Indices of non-dominated points, ascending.
///
/// Points are visited best-first in lexicographic order of their oriented
/// values; any dominator of a point precedes it, so each point only needs
/// checking against the front built so far.
pub fn front_indices<V: AsRef<[f64]>>(
    points: &[V],
    dirs: &[Direction],
) -> Result<Vec<usize>, ParetoError> {
    for p in points {
        check_dims(p.as_ref(), dirs)?;
    }
    let oriented: Vec<Vec<f64>> = points
        .iter()
        // + 0.0 folds -0.0 into 0.0 so total_cmp agrees with `==`
        .map(|p| {
            p.as_ref()
                .iter()
                .zip(dirs)
                .map(|(&v, &d)| d.orient(v) + 0.0)
                .collect()
        })
        .collect();
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&i, &j| {
        oriented[j]
            .iter()
            .zip(&oriented[i])
            .map(|(a, b)| a.total_cmp(b))
            .find(|o| *o != Ordering::Equal)
            .unwrap_or(Ordering::Equal)
            .then(i.cmp(&j))
    });
    let ones = vec![Direction::Max; dirs.len()];
    let mut front: Vec<usize> = Vec::new();
    for i in order {
        if !front
            .iter()
            .any(|&f| dominates_unchecked(&oriented[f], &oriented[i], &ones))
        {
            front.push(i);
        }
    }
    front.sort_unstable();
    Ok(front)
}

/// A pattern with its interest values and front membership.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasuredPattern {
    pub pattern: Pattern,
    pub interest: InterestVector,
    pub case_count: usize,
    #[serde(default)]
    pub flags: MeasureFlags,
    #[serde(default)]
    pub front: bool,
    /// Set when measurement failed; such patterns never enter a front.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Marks front members of `items` and returns them ordered by descending
/// first dimension, ties broken by pattern id.
pub fn pareto_front(
    items: &mut [MeasuredPattern],
    dirs: &[Direction],
) -> Result<Vec<MeasuredPattern>, ParetoError> {
    let eligible: Vec<usize> = (0..items.len())
        .filter(|&i| items[i].error.is_none())
        .collect();
    let points: Vec<Vec<f64>> = eligible
        .iter()
        .map(|&i| items[i].interest.values().to_vec())
        .collect();
    for item in items.iter_mut() {
        item.front = false;
    }
    for k in front_indices(&points, dirs)? {
        items[eligible[k]].front = true;
    }
    let mut front: Vec<MeasuredPattern> = items.iter().filter(|m| m.front).cloned().collect();
    sort_for_display(&mut front);
    Ok(front)
}

pub fn sort_for_display(items: &mut [MeasuredPattern]) {
    items.sort_by(|a, b| {
        b.interest.values()[0]
            .total_cmp(&a.interest.values()[0])
            .then_with(|| a.pattern.id().cmp(b.pattern.id()))
    });
}

#[cfg(test)]
mod tests {
    use super::*;
    use Direction::*;

    #[test]
    fn dominance_examples() {
        assert!(dominates(&[0.5, 0.5, 0.2], &[0.4, 0.5, 0.3], &[Max, Max, Min]).unwrap());
        assert!(!dominates(&[0.5, 0.5, 0.2], &[0.5, 0.5, 0.2], &[Max, Max, Min]).unwrap());
        assert!(!dominates(&[1.0, 0.0], &[0.0, 1.0], &[Max, Max]).unwrap());
        assert!(!dominates(&[0.0, 1.0], &[1.0, 0.0], &[Max, Max]).unwrap());
        assert_eq!(
            dominates(&[1.0], &[1.0, 2.0], &[Max, Max]).unwrap_err(),
            ParetoError::DimensionMismatch {
                expected: 2,
                got: 1
            }
        );
    }

    #[test]
    fn small_front() {
        let pts = [[1.0, 1.0], [2.0, 2.0], [0.0, 3.0]];
        assert_eq!(front_indices(&pts, &[Max, Max]).unwrap(), vec![1, 2]);
    }

    #[test]
    fn duplicates_retained() {
        let pts = [[1.0, 1.0]; 4];
        assert_eq!(front_indices(&pts, &[Max, Min]).unwrap(), vec![0, 1, 2, 3]);
    }

    #[test]
    fn signed_zero_ties() {
        let pts = [[0.0, 3.0], [-0.0, 5.0]];
        assert_eq!(front_indices(&pts, &[Max, Max]).unwrap(), vec![1]);
        assert_eq!(front_indices(&pts, &[Min, Max]).unwrap(), vec![1]);
    }

    #[test]
    fn minimisation() {
        let pts = [[1.0, 5.0], [1.0, 4.0], [2.0, 6.0]];
        assert_eq!(front_indices(&pts, &[Min, Min]).unwrap(), vec![1]);
    }
}
