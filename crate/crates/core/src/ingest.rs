//! Hourly load ingestion: delimited-text parsing, cleaning, and monthly aggregation.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use chrono::{DateTime, Datelike, Duration, NaiveDateTime, Timelike};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::{AggregationMode, MonthlySeries, YearMonth};

/// Gaps longer than this many missing hours are treated as a lost month.
pub const LONG_GAP_HOURS: i64 = 31 * 24;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HourlyRecord {
    pub timestamp: NaiveDateTime,
    /// Megawatts; finite and strictly positive.
    pub load: f64,
}

impl HourlyRecord {
    pub fn new(timestamp: NaiveDateTime, load: f64) -> Result<Self> {
        if timestamp.minute() != 0 || timestamp.second() != 0 || timestamp.nanosecond() != 0 {
            return Err(Error::data(format!("timestamp {timestamp} is not on the hour")));
        }
        if !load.is_finite() || load <= 0.0 {
            return Err(Error::data(format!(
                "load at {timestamp} must be finite and > 0, got {load}"
            )));
        }
        Ok(Self { timestamp, load })
    }
}

/// A run of missing hours between two present records.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Gap {
    pub after: NaiveDateTime,
    pub before: NaiveDateTime,
    pub missing_hours: i64,
}

/// Hourly observations in ascending time order.
///
/// Timestamps are wall-clock values; `timezone` only labels them. A freshly
/// parsed series may still hold duplicated hours (e.g. the repeated autumn
/// DST hour) until [`clean_series`] resolves them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HourlySeries {
    records: Vec<HourlyRecord>,
    timezone: String,
    /// Gaps that cleaning deliberately left open.
    #[serde(default)]
    flagged_gaps: Vec<Gap>,
}

impl HourlySeries {
    pub fn new(records: Vec<HourlyRecord>, timezone: impl Into<String>) -> Result<Self> {
        if records.is_empty() {
            return Err(Error::EmptyInput("hourly series has no records".into()));
        }
        if let Some(w) = records.windows(2).find(|w| w[1].timestamp < w[0].timestamp) {
            return Err(Error::data(format!(
                "timestamps out of order: {} follows {}",
                w[1].timestamp, w[0].timestamp
            )));
        }
        Ok(Self {
            records,
            timezone: timezone.into(),
            flagged_gaps: Vec::new(),
        })
    }

    pub fn records(&self) -> &[HourlyRecord] {
        &self.records
    }

    pub fn timezone(&self) -> &str {
        &self.timezone
    }

    pub fn flagged_gaps(&self) -> &[Gap] {
        &self.flagged_gaps
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn has_duplicates(&self) -> bool {
        self.records.windows(2).any(|w| w[0].timestamp == w[1].timestamp)
    }
}

/// Column mapping for [`parse_hourly_csv`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CsvSchema {
    pub timestamp_column: String,
    pub load_column: String,
    pub delimiter: u8,
    pub timezone: String,
}

impl Default for CsvSchema {
    fn default() -> Self {
        Self {
            timestamp_column: "timestamp".into(),
            load_column: "load_mw".into(),
            delimiter: b',',
            timezone: "UTC".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RowError {
    /// 1-based line number in the source, header included.
    pub line: u64,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParseReport {
    pub rows_read: usize,
    pub rows_rejected: Vec<RowError>,
}

const NAIVE_FORMATS: &[&str] = &[
    "%Y-%m-%dT%H:%M:%S",
    "%Y-%m-%d %H:%M:%S",
    "%Y-%m-%dT%H:%M",
    "%Y-%m-%d %H:%M",
    "%m/%d/%Y %H:%M:%S",
    "%m/%d/%Y %H:%M",
    "%m/%d/%Y %I:%M:%S %p",
];

/// Parse an hourly timestamp. Offsets, when present, are dropped and the
/// wall-clock time kept.
pub fn parse_timestamp(raw: &str) -> Result<NaiveDateTime> {
    let s = raw.trim();
    let ts = NAIVE_FORMATS
        .iter()
        .find_map(|f| NaiveDateTime::parse_from_str(s, f).ok())
        .or_else(|| DateTime::parse_from_rfc3339(s).ok().map(|d| d.naive_local()))
        .ok_or_else(|| Error::data(format!("unrecognised timestamp {s:?}")))?;
    if ts.minute() != 0 || ts.second() != 0 || ts.nanosecond() != 0 {
        return Err(Error::data(format!("timestamp {s:?} is not on the hour")));
    }
    Ok(ts)
}

/// Read hourly records from header-bearing delimited text.
///
/// Malformed rows are skipped and listed in the report; an input without
/// any usable row is fatal.
pub fn parse_hourly_csv<R: Read>(source: R, schema: &CsvSchema) -> Result<(HourlySeries, ParseReport)> {
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(schema.delimiter)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(source);
    let headers = reader.headers()?.clone();
    if headers.is_empty() || headers.iter().all(str::is_empty) {
        return Err(Error::EmptyInput("hourly file has no header row".into()));
    }
    let column = |name: &str| {
        headers.iter().position(|h| h == name).ok_or_else(|| {
            Error::invalid(format!(
                "column {name:?} not found in header [{}]",
                headers.iter().collect::<Vec<_>>().join(", ")
            ))
        })
    };
    let ts_idx = column(&schema.timestamp_column)?;
    let load_idx = column(&schema.load_column)?;

    let mut report = ParseReport::default();
    let mut records = Vec::new();
    for row in reader.records() {
        report.rows_read += 1;
        let row = match row {
            Ok(r) => r,
            Err(e) => {
                let line = e.position().map_or(0, |p| p.line());
                report.rows_rejected.push(RowError {
                    line,
                    message: e.to_string(),
                });
                continue;
            }
        };
        let line = row.position().map_or(0, |p| p.line());
        let parsed = (|| {
            let ts = row.get(ts_idx).ok_or_else(|| Error::data("missing timestamp field"))?;
            let load = row.get(load_idx).ok_or_else(|| Error::data("missing load field"))?;
            let ts = parse_timestamp(ts)?;
            let load: f64 = load
                .parse()
                .map_err(|_| Error::data(format!("bad load value {load:?}")))?;
            HourlyRecord::new(ts, load)
        })();
        match parsed {
            Ok(r) => records.push(r),
            Err(e) => report.rows_rejected.push(RowError {
                line,
                message: match e {
                    Error::Data(m) => m,
                    other => other.to_string(),
                },
            }),
        }
    }
    if report.rows_read == 0 {
        return Err(Error::EmptyInput("hourly file has no data rows".into()));
    }
    if records.is_empty() {
        return Err(Error::data(format!(
            "all {} data rows were rejected (first: line {}: {})",
            report.rows_read, report.rows_rejected[0].line, report.rows_rejected[0].message
        )));
    }
    // Stable, so duplicated hours keep their file order for keep-first.
    records.sort_by_key(|r| r.timestamp);
    Ok((HourlySeries::new(records, schema.timezone.clone())?, report))
}

/// Write records in the layout [`parse_hourly_csv`] reads with `schema`.
/// Loads use the shortest representation that round-trips exactly.
pub fn write_hourly_csv<W: Write>(series: &HourlySeries, sink: W, schema: &CsvSchema) -> Result<()> {
    let mut w = csv::WriterBuilder::new().delimiter(schema.delimiter).from_writer(sink);
    w.write_record([schema.timestamp_column.as_str(), schema.load_column.as_str()])?;
    for r in &series.records {
        w.write_record([r.timestamp.format("%Y-%m-%d %H:%M").to_string(), r.load.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DuplicatePolicy {
    #[default]
    KeepFirst,
    Average,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CleaningPolicy {
    pub duplicates: DuplicatePolicy,
    /// Longest run of missing hours filled by linear interpolation.
    pub max_gap_hours: i64,
    /// Accept gaps longer than a month instead of failing.
    pub allow_long_gaps: bool,
}

impl Default for CleaningPolicy {
    fn default() -> Self {
        Self {
            duplicates: DuplicatePolicy::KeepFirst,
            max_gap_hours: 6,
            allow_long_gaps: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "action", rename_all = "snake_case")]
pub enum CleaningAction {
    DuplicateResolved {
        timestamp: NaiveDateTime,
        occurrences: usize,
        load: f64,
    },
    Interpolated {
        timestamp: NaiveDateTime,
        load: f64,
    },
    GapLeftOpen {
        after: NaiveDateTime,
        before: NaiveDateTime,
        missing_hours: i64,
    },
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CleaningReport {
    pub actions: Vec<CleaningAction>,
}

impl CleaningReport {
    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    pub fn duplicates_resolved(&self) -> usize {
        self.count(|a| matches!(a, CleaningAction::DuplicateResolved { .. }))
    }

    pub fn interpolated(&self) -> usize {
        self.count(|a| matches!(a, CleaningAction::Interpolated { .. }))
    }

    pub fn open_gaps(&self) -> usize {
        self.count(|a| matches!(a, CleaningAction::GapLeftOpen { .. }))
    }

    fn count(&self, f: impl Fn(&CleaningAction) -> bool) -> usize {
        self.actions.iter().filter(|a| f(a)).count()
    }
}

/// Resolve duplicated hours and fill short gaps.
///
/// Gaps longer than `policy.max_gap_hours` stay open and are flagged on the
/// returned series, so cleaning the result again reports nothing.
pub fn clean_series(series: &HourlySeries, policy: &CleaningPolicy) -> Result<(HourlySeries, CleaningReport)> {
    if policy.max_gap_hours < 0 {
        return Err(Error::invalid("max_gap_hours must be >= 0"));
    }
    let mut report = CleaningReport::default();

    let mut deduped: Vec<HourlyRecord> = Vec::with_capacity(series.records.len());
    let mut i = 0;
    let recs = &series.records;
    while i < recs.len() {
        let mut j = i + 1;
        while j < recs.len() && recs[j].timestamp == recs[i].timestamp {
            j += 1;
        }
        let group = &recs[i..j];
        if group.len() == 1 {
            deduped.push(group[0]);
        } else {
            let load = match policy.duplicates {
                DuplicatePolicy::KeepFirst => group[0].load,
                DuplicatePolicy::Average => group.iter().map(|r| r.load).sum::<f64>() / group.len() as f64,
            };
            report.actions.push(CleaningAction::DuplicateResolved {
                timestamp: group[0].timestamp,
                occurrences: group.len(),
                load,
            });
            deduped.push(HourlyRecord {
                timestamp: group[0].timestamp,
                load,
            });
        }
        i = j;
    }

    let mut out: Vec<HourlyRecord> = Vec::with_capacity(deduped.len());
    let mut flagged = series.flagged_gaps.clone();
    for rec in deduped {
        if let Some(prev) = out.last().copied() {
            let missing = (rec.timestamp - prev.timestamp).num_hours() - 1;
            if missing > 0 {
                let already = flagged
                    .iter()
                    .any(|g| g.after == prev.timestamp && g.before == rec.timestamp);
                if missing <= policy.max_gap_hours {
                    let steps = (missing + 1) as f64;
                    for k in 1..=missing {
                        let load = prev.load + (rec.load - prev.load) * (k as f64 / steps);
                        let timestamp = prev.timestamp + Duration::hours(k);
                        report.actions.push(CleaningAction::Interpolated { timestamp, load });
                        out.push(HourlyRecord { timestamp, load });
                    }
                } else if !already {
                    if missing > LONG_GAP_HOURS && !policy.allow_long_gaps {
                        return Err(Error::data(format!(
                            "gap of {missing} missing hours between {} and {} exceeds one month",
                            prev.timestamp, rec.timestamp
                        )));
                    }
                    report.actions.push(CleaningAction::GapLeftOpen {
                        after: prev.timestamp,
                        before: rec.timestamp,
                        missing_hours: missing,
                    });
                    flagged.push(Gap {
                        after: prev.timestamp,
                        before: rec.timestamp,
                        missing_hours: missing,
                    });
                }
            }
        }
        out.push(rec);
    }

    Ok((
        HourlySeries {
            records: out,
            timezone: series.timezone.clone(),
            flagged_gaps: flagged,
        },
        report,
    ))
}

/// Collapse a cleaned hourly series into one value per calendar month.
pub fn aggregate_monthly(series: &HourlySeries, mode: AggregationMode) -> Result<MonthlySeries> {
    if series.has_duplicates() {
        return Err(Error::data("series has duplicated hours; clean it before aggregating"));
    }
    let mut months: BTreeMap<YearMonth, (f64, f64, f64, usize)> = BTreeMap::new();
    for r in &series.records {
        let key = YearMonth {
            year: r.timestamp.year(),
            month: r.timestamp.month(),
        };
        let e = months.entry(key).or_insert((f64::NEG_INFINITY, f64::INFINITY, 0.0, 0));
        e.0 = e.0.max(r.load);
        e.1 = e.1.min(r.load);
        e.2 += r.load;
        e.3 += 1;
    }
    let first = *months.keys().next().expect("series is non-empty");
    let last = *months.keys().next_back().expect("series is non-empty");
    let span = first.months_until(last) as usize + 1;
    let mut values = Vec::with_capacity(span);
    for k in 0..span {
        let month = first.offset(k as i64);
        let Some(&(max, min, sum, count)) = months.get(&month) else {
            return Err(Error::data(format!("month {month} has no hourly records")));
        };
        values.push(match mode {
            AggregationMode::Peak => max,
            AggregationMode::Minimum => min,
            AggregationMode::Sum => sum,
            AggregationMode::Mean => sum / count as f64,
        });
    }
    Ok(MonthlySeries::new(first, values)?.with_aggregation(mode))
}

/// Write `year,month,value` rows.
pub fn write_monthly_csv<W: Write>(series: &MonthlySeries, sink: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(["year", "month", "value"])?;
    for (m, v) in series.iter() {
        w.write_record([m.year.to_string(), m.month.to_string(), v.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Read `year,month,value` rows; months must be consecutive.
pub fn read_monthly_csv<R: Read>(source: R) -> Result<MonthlySeries> {
    #[derive(Deserialize)]
    struct Row {
        year: i32,
        month: u32,
        value: f64,
    }
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(source);
    let mut start = None;
    let mut values = Vec::new();
    for (i, row) in reader.deserialize::<Row>().enumerate() {
        let row = row?;
        let month = YearMonth::new(row.year, row.month)?;
        let first = *start.get_or_insert(month);
        let expected = first.offset(i as i64);
        if month != expected {
            return Err(Error::data(format!("expected month {expected}, found {month}")));
        }
        values.push(row.value);
    }
    let start = start.ok_or_else(|| Error::EmptyInput("monthly file has no rows".into()))?;
    MonthlySeries::new(start, values)
}

/// JSON sidecar written next to a monthly series file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IngestSidecar {
    pub aggregation_mode: AggregationMode,
    pub timezone: String,
    pub months: usize,
    pub start: YearMonth,
    pub end: YearMonth,
    pub parse: ParseReport,
    pub cleaning_policy: CleaningPolicy,
    pub cleaning: CleaningReport,
}
