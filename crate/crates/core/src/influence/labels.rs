// SPDX-License-Identifier: MIT OR Apache-2.0

//! Per-index segment numbers in original coordinates, and the expected
//! segmentations under deletion and contamination.

use serde::{Deserialize, Serialize};

use crate::detect::Segmentation;
use crate::error::{Error, Result};

use super::Method;

/// Segment number (from 1) of every original index, with at most one `None`
/// slot marking a deleted observation.
///
/// Labels are always renumbered so that neighbouring segments differ by one.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LabeledSeries {
    labels: Vec<Option<u32>>,
}

impl LabeledSeries {
    /// Renumbers arbitrary raw labels: each change between consecutive
    /// non-NA values opens the next segment number.
    pub fn renumbered(raw: &[Option<u32>]) -> Self {
        let mut labels = Vec::with_capacity(raw.len());
        let mut prev: Option<u32> = None;
        let mut current = 0u32;
        for &r in raw {
            match r {
                None => labels.push(None),
                Some(v) => {
                    if prev != Some(v) {
                        current += 1;
                        prev = Some(v);
                    }
                    labels.push(Some(current));
                }
            }
        }
        Self { labels }
    }

    pub fn from_segmentation(seg: &Segmentation) -> Self {
        Self {
            labels: seg.labels().into_iter().map(Some).collect(),
        }
    }

    pub fn from_changepoints(changepoints: &[usize], n: usize) -> Self {
        let mut labels = Vec::with_capacity(n);
        let mut label = 1u32;
        let mut next = changepoints.iter().peekable();
        for i in 1..=n {
            labels.push(Some(label));
            if next.peek() == Some(&&i) {
                next.next();
                label += 1;
            }
        }
        Self { labels }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[Option<u32>] {
        &self.labels
    }

    /// Label at 1-based index `i`.
    pub fn label(&self, i: usize) -> Option<u32> {
        self.labels[i - 1]
    }

    /// 1-based position of the NA slot, if any.
    pub fn na_slot(&self) -> Option<usize> {
        self.labels.iter().position(Option::is_none).map(|p| p + 1)
    }

    /// Last indices of every segment but the final one.
    ///
    /// An NA slot is attributed to the segment on its left (to the right
    /// when it is the first index), so a segment boundary that straddles a
    /// deleted point is located at the deleted slot.
    pub fn changepoints(&self) -> Vec<usize> {
        let mut filled = Vec::with_capacity(self.labels.len());
        let mut last = self.labels.iter().flatten().next().copied();
        for l in &self.labels {
            if l.is_some() {
                last = *l;
            }
            filled.push(last);
        }
        filled
            .windows(2)
            .enumerate()
            .filter(|(_, w)| w[0] != w[1])
            .map(|(j, _)| j + 1)
            .collect()
    }

    /// Checks the renumbering law and the single-NA rule.
    pub fn is_well_formed(&self) -> bool {
        if self.labels.iter().filter(|l| l.is_none()).count() > 1 {
            return false;
        }
        let mut prev = 0u32;
        for &l in self.labels.iter().flatten() {
            if l != prev && l != prev + 1 || l == 0 {
                return false;
            }
            prev = l;
        }
        true
    }
}

fn check_index(t: usize, n: usize) -> Result<()> {
    if t == 0 || t > n {
        return Err(Error::IndexOutOfRange { index: t, n });
    }
    Ok(())
}

/// Original labels with slot `t` removed. Only a single-observation segment
/// changes the numbering: it disappears and its neighbours close up.
pub fn expected_deletion(original: &Segmentation, t: usize) -> Result<LabeledSeries> {
    check_index(t, original.n)?;
    let mut raw: Vec<Option<u32>> = original.labels().into_iter().map(Some).collect();
    raw[t - 1] = None;
    Ok(LabeledSeries::renumbered(&raw))
}

/// Original changepoints plus `t − 1` and `t`, so the contaminated point
/// sits in a segment of its own.
pub fn expected_contamination(original: &Segmentation, t: usize) -> Result<LabeledSeries> {
    let n = original.n;
    check_index(t, n)?;
    let mut cps = original.changepoints.clone();
    if t > 1 {
        cps.push(t - 1);
    }
    if t < n {
        cps.push(t);
    }
    cps.sort_unstable();
    cps.dedup();
    Ok(LabeledSeries::from_changepoints(&cps, n))
}

/// Expected segmentation for either alteration.
pub fn expected_for(method: Method, original: &Segmentation, t: usize) -> Result<LabeledSeries> {
    match method {
        Method::Delete => expected_deletion(original, t),
        Method::Contaminate => expected_contamination(original, t),
    }
}

/// Maps a segmentation of altered data back onto the `n` original indices.
pub fn align_observed(
    seg: &Segmentation,
    method: Method,
    t: usize,
    n: usize,
) -> Result<LabeledSeries> {
    check_index(t, n)?;
    let labels = seg.labels();
    match method {
        Method::Delete => {
            if seg.n + 1 != n {
                return Err(Error::LengthMismatch {
                    expected: n - 1,
                    actual: seg.n,
                });
            }
            let mut raw: Vec<Option<u32>> = Vec::with_capacity(n);
            raw.extend(labels[..t - 1].iter().copied().map(Some));
            raw.push(None);
            raw.extend(labels[t - 1..].iter().copied().map(Some));
            Ok(LabeledSeries::renumbered(&raw))
        }
        Method::Contaminate => {
            if seg.n != n {
                return Err(Error::LengthMismatch {
                    expected: n,
                    actual: seg.n,
                });
            }
            let raw: Vec<Option<u32>> = labels.into_iter().map(Some).collect();
            Ok(LabeledSeries::renumbered(&raw))
        }
    }
}
