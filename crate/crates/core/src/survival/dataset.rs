use serde::{Deserialize, Serialize};

use crate::error::{Result, SurvError};

/// One observation: covariates, event indicator and time to event/censoring.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurvivalRecord {
    pub features: Vec<f64>,
    /// `true` if the event was observed, `false` for a censored record.
    pub event: bool,
    pub time: f64,
}

impl SurvivalRecord {
    pub fn new(features: Vec<f64>, event: bool, time: f64) -> Self {
        Self {
            features,
            event,
            time,
        }
    }
}

/// A censored survival dataset with a fixed feature dimension.
///
/// Records keep their insertion order; `sorted_index` orders them by
/// ascending time with events preceding censored records at tied times,
/// which is the order the product-limit estimators walk.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SurvivalDataset {
    records: Vec<SurvivalRecord>,
    d: usize,
    sorted_index: Vec<usize>,
}

impl SurvivalDataset {
    pub fn new(records: Vec<SurvivalRecord>) -> Result<Self> {
        if records.is_empty() {
            return Err(SurvError::EmptyDataset);
        }
        let d = records[0].features.len();
        let mut any_event = false;
        for (i, r) in records.iter().enumerate() {
            if r.features.len() != d {
                return Err(SurvError::DimensionMismatch {
                    index: i,
                    got: r.features.len(),
                    expected: d,
                });
            }
            if r.time < 0.0 {
                return Err(SurvError::NegativeTime {
                    index: i,
                    time: r.time,
                });
            }
            if !r.time.is_finite() || r.features.iter().any(|v| !v.is_finite()) {
                return Err(SurvError::NonFinite { index: i });
            }
            any_event |= r.event;
        }
        if !any_event {
            return Err(SurvError::NoEvents);
        }
        let mut sorted_index: Vec<usize> = (0..records.len()).collect();
        // Stable sort: ascending time, events before censored ties.
        sorted_index.sort_by(|&a, &b| {
            records[a]
                .time
                .partial_cmp(&records[b].time)
                .unwrap()
                .then(records[b].event.cmp(&records[a].event))
        });
        Ok(Self {
            records,
            d,
            sorted_index,
        })
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn records(&self) -> &[SurvivalRecord] {
        &self.records
    }

    pub fn record(&self, i: usize) -> &SurvivalRecord {
        &self.records[i]
    }

    /// Permutation ordering records by ascending time (events first on ties).
    pub fn sorted_index(&self) -> &[usize] {
        &self.sorted_index
    }

    /// Records in time order.
    pub fn sorted_records(&self) -> impl Iterator<Item = &SurvivalRecord> {
        self.sorted_index.iter().map(|&i| &self.records[i])
    }

    /// Strictly increasing distinct times over all records.
    pub fn distinct_times(&self) -> Vec<f64> {
        let mut times = Vec::with_capacity(self.records.len());
        for r in self.sorted_records() {
            if times.last() != Some(&r.time) {
                times.push(r.time);
            }
        }
        times
    }

    /// Subset by record indices, keeping the given order.
    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        Self::new(indices.iter().map(|&i| self.records[i].clone()).collect())
    }

    /// Per-feature (min, max) over all records.
    pub fn feature_ranges(&self) -> Vec<(f64, f64)> {
        let mut ranges = vec![(f64::INFINITY, f64::NEG_INFINITY); self.d];
        for r in &self.records {
            for (k, &v) in r.features.iter().enumerate() {
                ranges[k].0 = ranges[k].0.min(v);
                ranges[k].1 = ranges[k].1.max(v);
            }
        }
        ranges
    }
}
