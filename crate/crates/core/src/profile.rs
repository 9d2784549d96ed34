//! The bounded profile of past deliveries and its update rule.
//!
//! Below capacity a new record is appended. At capacity it overwrites, in
//! place, the nearest record of the opposite response class: a negative
//! record displaces the nearest positive one and vice versa. When the
//! opposite class is empty the globally nearest record is replaced instead
//! and the step is reported as a fallback.

use std::fmt::Write as _;

use crate::allocation::BandwidthAllocation;
use crate::error::{QosError, Result};
use crate::grnn::dist2;
use crate::scalar::Scalar;
use crate::Level;

#[derive(Clone, Debug, PartialEq)]
pub struct ProfileRecord<T> {
    pub allocation: BandwidthAllocation<T>,
    pub response: Level,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ResponseClass {
    Negative,
    Positive,
}

/// Positive iff `response >= a_q`.
pub fn classify(response: Level, a_q: Level, levels: Level) -> Result<ResponseClass> {
    check_level(response, levels)?;
    check_level(a_q, levels)?;
    Ok(class_of(response, a_q))
}

#[inline]
pub(crate) fn class_of(response: Level, a_q: Level) -> ResponseClass {
    if response >= a_q {
        ResponseClass::Positive
    } else {
        ResponseClass::Negative
    }
}

fn check_level(level: Level, levels: Level) -> Result<()> {
    if level < 1 || level > levels {
        return Err(QosError::invalid(format!("level {level} outside 1..={levels}")));
    }
    Ok(())
}

/// What [`Profile::update`] did.
#[derive(Clone, Debug, PartialEq)]
pub enum UpdateOutcome<T> {
    Appended,
    Replaced {
        index: usize,
        evicted: ProfileRecord<T>,
        /// The opposite class was empty; the globally nearest record went.
        fallback: bool,
    },
}

impl<T> UpdateOutcome<T> {
    pub fn is_fallback(&self) -> bool {
        matches!(self, UpdateOutcome::Replaced { fallback: true, .. })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Profile<T> {
    links: usize,
    levels: Level,
    /// `None` for an unbounded profile.
    capacity: Option<usize>,
    records: Vec<ProfileRecord<T>>,
}

impl<T: Scalar> Profile<T> {
    pub fn new(links: usize, levels: Level, capacity: usize) -> Result<Self> {
        if capacity == 0 {
            return Err(QosError::invalid("profile capacity must be positive"));
        }
        Self::build(links, levels, Some(capacity))
    }

    pub fn unbounded(links: usize, levels: Level) -> Result<Self> {
        Self::build(links, levels, None)
    }

    fn build(links: usize, levels: Level, capacity: Option<usize>) -> Result<Self> {
        if links == 0 {
            return Err(QosError::invalid("profile needs at least one link"));
        }
        if levels < 1 {
            return Err(QosError::invalid("profile needs at least one response level"));
        }
        Ok(Profile {
            links,
            levels,
            capacity,
            records: Vec::new(),
        })
    }

    pub fn links(&self) -> usize {
        self.links
    }

    pub fn levels(&self) -> Level {
        self.levels
    }

    pub fn capacity(&self) -> Option<usize> {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.capacity.is_some_and(|s| self.records.len() >= s)
    }

    pub fn records(&self) -> &[ProfileRecord<T>] {
        &self.records
    }

    fn check_record(&self, allocation: &BandwidthAllocation<T>, response: Level) -> Result<()> {
        allocation.check_links(self.links)?;
        check_level(response, self.levels)?;
        if allocation.as_slice().iter().any(|v| !v.is_finite()) {
            return Err(QosError::invalid("allocation contains a non-finite bandwidth"));
        }
        Ok(())
    }

    /// Appends without eviction. Fails when the profile is full.
    pub fn push(&mut self, allocation: BandwidthAllocation<T>, response: Level) -> Result<()> {
        self.check_record(&allocation, response)?;
        if self.is_full() {
            return Err(QosError::invalid("profile is at capacity"));
        }
        self.records.push(ProfileRecord { allocation, response });
        Ok(())
    }

    /// Same records under a different capacity.
    pub fn with_capacity(mut self, capacity: Option<usize>) -> Result<Self> {
        match capacity {
            Some(0) => return Err(QosError::invalid("profile capacity must be positive")),
            Some(s) if s < self.records.len() => {
                return Err(QosError::invalid(format!(
                    "{} records do not fit capacity {s}",
                    self.records.len()
                )))
            }
            _ => {}
        }
        self.capacity = capacity;
        Ok(self)
    }

    /// Removes and returns the record at `index`, shifting later records down.
    pub fn remove(&mut self, index: usize) -> Result<ProfileRecord<T>> {
        if index >= self.records.len() {
            return Err(QosError::invalid(format!("record index {index} out of range")));
        }
        Ok(self.records.remove(index))
    }

    pub(crate) fn append_unchecked_capacity(&mut self, allocation: BandwidthAllocation<T>, response: Level) -> Result<()> {
        self.check_record(&allocation, response)?;
        self.records.push(ProfileRecord { allocation, response });
        Ok(())
    }

    /// Records one delivery with target `a_q`.
    pub fn update(&mut self, allocation: BandwidthAllocation<T>, response: Level, a_q: Level) -> Result<UpdateOutcome<T>> {
        self.check_record(&allocation, response)?;
        check_level(a_q, self.levels)?;
        if !self.is_full() {
            self.records.push(ProfileRecord { allocation, response });
            return Ok(UpdateOutcome::Appended);
        }
        let evict_from = match class_of(response, a_q) {
            ResponseClass::Negative => ResponseClass::Positive,
            ResponseClass::Positive => ResponseClass::Negative,
        };
        let (index, fallback) = match self.nearest(&allocation, |r| class_of(r.response, a_q) == evict_from) {
            Some(i) => (i, false),
            None => (self.nearest(&allocation, |_| true).expect("full profile is non-empty"), true),
        };
        let evicted = std::mem::replace(&mut self.records[index], ProfileRecord { allocation, response });
        Ok(UpdateOutcome::Replaced { index, evicted, fallback })
    }

    /// Lowest-index argmin of squared distance among records passing `keep`.
    fn nearest(&self, x: &BandwidthAllocation<T>, keep: impl Fn(&ProfileRecord<T>) -> bool) -> Option<usize> {
        let mut best: Option<(usize, T)> = None;
        for (i, rec) in self.records.iter().enumerate() {
            if !keep(rec) {
                continue;
            }
            let d = dist2(x.as_slice(), rec.allocation.as_slice());
            if best.is_none_or(|(_, bd)| d < bd) {
                best = Some((i, d));
            }
        }
        best.map(|(i, _)| i)
    }

    /// Text form: a header line `links=<n>,levels=<L>,capacity=<S|unbounded>`,
    /// a column line `x1,...,xn,response`, then one record per line.
    pub fn save(&self) -> String {
        let mut out = String::new();
        let cap = self.capacity.map_or_else(|| "unbounded".to_string(), |s| s.to_string());
        let _ = writeln!(out, "links={},levels={},capacity={}", self.links, self.levels, cap);
        for j in 1..=self.links {
            let _ = write!(out, "x{j},");
        }
        out.push_str("response\n");
        for rec in &self.records {
            for v in rec.allocation.as_slice() {
                let _ = write!(out, "{v},");
            }
            let _ = writeln!(out, "{}", rec.response);
        }
        out
    }

    pub fn load(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (hline, header) = lines.next().ok_or_else(|| parse_err(1, None, "missing header"))?;
        let (mut links, mut levels, mut capacity) = (None, None, None);
        for field in header.split(',') {
            let (key, value) = field
                .split_once('=')
                .ok_or_else(|| parse_err(hline + 1, None, format!("malformed header field `{field}`")))?;
            let value = value.trim();
            let bad = |what: &str| parse_err(hline + 1, None, format!("bad {what} `{value}`"));
            match key.trim() {
                "links" => links = Some(value.parse::<usize>().map_err(|_| bad("link count"))?),
                "levels" => levels = Some(value.parse::<Level>().map_err(|_| bad("level count"))?),
                "capacity" => {
                    capacity = Some(if value == "unbounded" {
                        None
                    } else {
                        Some(value.parse::<usize>().map_err(|_| bad("capacity"))?)
                    })
                }
                other => return Err(parse_err(hline + 1, None, format!("unknown header key `{other}`"))),
            }
        }
        let (links, levels, capacity) = match (links, levels, capacity) {
            (Some(n), Some(l), Some(s)) => (n, l, s),
            _ => return Err(parse_err(hline + 1, None, "header must set links, levels and capacity")),
        };
        let mut profile = Self::build(links, levels, capacity).map_err(|e| parse_err(hline + 1, None, e.to_string()))?;
        if capacity == Some(0) {
            return Err(parse_err(hline + 1, None, "capacity must be positive"));
        }

        let (cline, columns) = lines.next().ok_or_else(|| parse_err(hline + 2, None, "missing column line"))?;
        if columns.split(',').count() != links + 1 {
            return Err(parse_err(cline + 1, None, format!("expected {} columns", links + 1)));
        }

        for (record, (lineno, line)) in lines.enumerate() {
            let err = |msg: String| parse_err(lineno + 1, Some(record), msg);
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields.len() != links + 1 {
                return Err(err(format!("expected {} fields, found {}", links + 1, fields.len())));
            }
            let mut xs = Vec::with_capacity(links);
            for f in &fields[..links] {
                xs.push(f.parse::<T>().map_err(|_| err(format!("bad bandwidth `{f}`")))?);
            }
            let response = fields[links]
                .parse::<Level>()
                .map_err(|_| err(format!("bad response `{}`", fields[links])))?;
            profile.push(BandwidthAllocation::new(xs), response).map_err(|e| err(e.to_string()))?;
        }
        Ok(profile)
    }
}

fn parse_err(line: usize, record: Option<usize>, message: impl Into<String>) -> QosError {
    QosError::Parse {
        line,
        record,
        message: message.into(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn a(v: &[f64]) -> BandwidthAllocation<f64> {
        BandwidthAllocation::new(v.to_vec())
    }

    fn filled(cap: usize, recs: &[(&[f64], Level)]) -> Profile<f64> {
        let mut p = Profile::new(recs[0].0.len(), 3, cap).unwrap();
        for (x, y) in recs {
            p.push(a(x), *y).unwrap();
        }
        p
    }

    #[test]
    fn classify_boundaries() {
        assert_eq!(classify(7, 7, 12).unwrap(), ResponseClass::Positive);
        assert_eq!(classify(6, 7, 12).unwrap(), ResponseClass::Negative);
        assert_eq!(classify(12, 11, 12).unwrap(), ResponseClass::Positive);
        assert!(classify(13, 7, 12).is_err());
        assert!(classify(0, 7, 12).is_err());
        assert!(classify(5, 13, 12).is_err());
    }

    #[test]
    fn appends_below_capacity() {
        let mut p = Profile::new(2, 12, 4).unwrap();
        p.push(a(&[10.0, 10.0]), 4).unwrap();
        p.push(a(&[30.0, 30.0]), 8).unwrap();
        let out = p.update(a(&[20.0, 20.0]), 9, 7).unwrap();
        assert_eq!(out, UpdateOutcome::Appended);
        assert_eq!(p.len(), 3);
        assert_eq!(p.records()[2].allocation, a(&[20.0, 20.0]));
    }

    #[test]
    fn positive_record_evicts_nearest_negative() {
        let mut p = filled(2, &[(&[10.0, 0.0], 1), (&[30.0, 0.0], 3)]);
        let out = p.update(a(&[25.0, 0.0]), 3, 2).unwrap();
        assert!(matches!(out, UpdateOutcome::Replaced { index: 0, fallback: false, .. }));
        // The replacement takes the evicted slot.
        assert_eq!(p.records()[0], ProfileRecord { allocation: a(&[25.0, 0.0]), response: 3 });
        assert_eq!(p.records()[1], ProfileRecord { allocation: a(&[30.0, 0.0]), response: 3 });
    }

    #[test]
    fn missing_opposite_class_falls_back_to_nearest() {
        let mut p = filled(2, &[(&[10.0, 0.0], 1), (&[12.0, 0.0], 1)]);
        let out = p.update(a(&[20.0, 0.0]), 1, 2).unwrap();
        match out {
            UpdateOutcome::Replaced { index, evicted, fallback } => {
                assert_eq!(index, 1);
                assert!(fallback);
                assert_eq!(evicted.allocation, a(&[12.0, 0.0]));
            }
            other => panic!("unexpected {other:?}"),
        }
        assert_eq!(p.len(), 2);
    }

    #[test]
    fn eviction_ties_take_lowest_index() {
        let mut p = filled(3, &[(&[0.0], 3), (&[20.0], 3), (&[10.0], 1)]);
        let out = p.update(a(&[10.0]), 1, 2).unwrap();
        assert!(matches!(out, UpdateOutcome::Replaced { index: 0, fallback: false, .. }));
    }

    #[test]
    fn push_rejects_bad_records() {
        let mut p = Profile::new(2, 12, 1).unwrap();
        assert!(p.push(a(&[1.0]), 3).is_err());
        assert!(p.push(a(&[1.0, 1.0]), 13).is_err());
        p.push(a(&[1.0, 1.0]), 3).unwrap();
        assert!(p.push(a(&[1.0, 1.0]), 3).is_err());
    }

    #[test]
    fn save_format_and_round_trip() {
        let p = filled(4, &[(&[10.0, 0.5], 1), (&[30.0, 0.1], 3)]);
        let text = p.save();
        assert_eq!(text, "links=2,levels=3,capacity=4\nx1,x2,response\n10,0.5,1\n30,0.1,3\n");
        assert_eq!(Profile::<f64>::load(&text).unwrap(), p);

        let empty = Profile::<f64>::unbounded(3, 12).unwrap();
        assert_eq!(Profile::<f64>::load(&empty.save()).unwrap(), empty);
    }

    #[test]
    fn load_reports_bad_record_index() {
        let text = "links=2,levels=12,capacity=31\nx1,x2,response\n10,10,5\n20,20,13\n";
        match Profile::<f64>::load(text) {
            Err(QosError::Parse { line, record, .. }) => {
                assert_eq!(line, 4);
                assert_eq!(record, Some(1));
            }
            other => panic!("expected parse error, got {other:?}"),
        }
        assert!(Profile::<f64>::load("links=2,levels=12\n").is_err());
        assert!(Profile::<f64>::load("links=2,levels=12,capacity=1\nx1,x2,response\n1,1,1\n2,2,2\n").is_err());
        assert!(Profile::<f64>::load("links=2,levels=12,capacity=3,colour=red\n").is_err());
    }
}
