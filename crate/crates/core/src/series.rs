//! Monthly series, their transforms, descriptive statistics and correlograms.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A calendar month.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct YearMonth {
    pub year: i32,
    pub month: u32,
}

impl YearMonth {
    pub fn new(year: i32, month: u32) -> Result<Self> {
        if !(1..=12).contains(&month) {
            return Err(Error::invalid(format!("month must be 1..=12, got {month}")));
        }
        Ok(Self { year, month })
    }

    /// Months since year 0, January.
    pub fn ordinal(self) -> i64 {
        i64::from(self.year) * 12 + i64::from(self.month) - 1
    }

    pub fn from_ordinal(ordinal: i64) -> Self {
        let year = ordinal.div_euclid(12);
        let month = ordinal.rem_euclid(12) + 1;
        Self {
            year: year as i32,
            month: month as u32,
        }
    }

    pub fn offset(self, months: i64) -> Self {
        Self::from_ordinal(self.ordinal() + months)
    }

    pub fn succ(self) -> Self {
        self.offset(1)
    }

    /// Signed number of months from `self` to `other`.
    pub fn months_until(self, other: YearMonth) -> i64 {
        other.ordinal() - self.ordinal()
    }
}

impl fmt::Display for YearMonth {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:04}-{:02}", self.year, self.month)
    }
}

impl FromStr for YearMonth {
    type Err = Error;

    /// Accepts `YYYY-MM` (also `YYYY/MM`).
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (y, m) = s
            .split_once(['-', '/'])
            .ok_or_else(|| Error::invalid(format!("expected YYYY-MM, got {s:?}")))?;
        let year = y.parse().map_err(|_| Error::invalid(format!("bad year in {s:?}")))?;
        let month = m.parse().map_err(|_| Error::invalid(format!("bad month in {s:?}")))?;
        YearMonth::new(year, month)
    }
}

/// Statistic used to collapse one month of hourly loads into a single value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AggregationMode {
    #[default]
    Peak,
    Minimum,
    Sum,
    Mean,
}

impl FromStr for AggregationMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "peak" | "max" => Ok(Self::Peak),
            "minimum" | "min" => Ok(Self::Minimum),
            "sum" => Ok(Self::Sum),
            "mean" | "average" => Ok(Self::Mean),
            other => Err(Error::invalid(format!("unknown aggregation mode {other:?}"))),
        }
    }
}

impl fmt::Display for AggregationMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Peak => "peak",
            Self::Minimum => "minimum",
            Self::Sum => "sum",
            Self::Mean => "mean",
        })
    }
}

/// One step of transform lineage, applied in order to the raw aggregates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum TransformStep {
    Log,
    /// `order`-fold differencing; `initial_values` are the first `order`
    /// values of the series before differencing.
    Diff {
        order: usize,
        initial_values: Vec<f64>,
    },
}

/// Equally spaced monthly values with their transform lineage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonthlySeries {
    start: YearMonth,
    values: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    aggregation: Option<AggregationMode>,
    #[serde(default)]
    transform: Vec<TransformStep>,
}

impl MonthlySeries {
    /// Untransformed series starting at `start`. Values must be finite and non-empty.
    pub fn new(start: YearMonth, values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptyInput("monthly series has no values".into()));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::data(format!(
                "monthly value at index {i} ({}) is not finite",
                start.offset(i as i64)
            )));
        }
        Ok(Self {
            start,
            values,
            aggregation: None,
            transform: Vec::new(),
        })
    }

    pub fn with_aggregation(mut self, mode: AggregationMode) -> Self {
        self.aggregation = Some(mode);
        self
    }

    pub fn start(&self) -> YearMonth {
        self.start
    }

    pub fn end(&self) -> YearMonth {
        self.start.offset(self.values.len() as i64 - 1)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn aggregation(&self) -> Option<AggregationMode> {
        self.aggregation
    }

    pub fn transform(&self) -> &[TransformStep] {
        &self.transform
    }

    pub fn is_raw(&self) -> bool {
        self.transform.is_empty()
    }

    pub fn month_at(&self, index: usize) -> YearMonth {
        self.start.offset(index as i64)
    }

    /// Index of `month`, if it lies inside the series.
    pub fn index_of(&self, month: YearMonth) -> Option<usize> {
        let k = self.start.months_until(month);
        (k >= 0 && (k as usize) < self.values.len()).then_some(k as usize)
    }

    pub fn iter(&self) -> impl Iterator<Item = (YearMonth, f64)> + '_ {
        self.values
            .iter()
            .enumerate()
            .map(move |(i, &v)| (self.start.offset(i as i64), v))
    }

    /// Same metadata, new values starting at `start`.
    fn derive(&self, start: YearMonth, values: Vec<f64>, transform: Vec<TransformStep>) -> Self {
        Self {
            start,
            values,
            aggregation: self.aggregation,
            transform,
        }
    }

    /// Contiguous sub-range `[from, to)` by index, keeping metadata.
    pub fn slice(&self, from: usize, to: usize) -> Result<Self> {
        if from >= to || to > self.values.len() {
            return Err(Error::invalid(format!(
                "slice {from}..{to} out of range for length {}",
                self.values.len()
            )));
        }
        Ok(self.derive(
            self.start.offset(from as i64),
            self.values[from..to].to_vec(),
            self.transform.clone(),
        ))
    }

    /// Append values of a series that starts the month after `self` ends.
    pub fn extended(&self, next: &MonthlySeries) -> Result<Self> {
        if next.start != self.end().succ() {
            return Err(Error::data(format!(
                "cannot extend series ending {} with one starting {}",
                self.end(),
                next.start
            )));
        }
        if next.transform != self.transform {
            return Err(Error::data("cannot extend series with a different transform"));
        }
        let mut values = self.values.clone();
        values.extend_from_slice(&next.values);
        Ok(self.derive(self.start, values, self.transform.clone()))
    }
}

/// `d`-fold differences of a plain slice.
pub fn difference_values(values: &[f64], d: usize) -> Vec<f64> {
    let mut out = values.to_vec();
    for _ in 0..d {
        out = out.windows(2).map(|w| w[1] - w[0]).collect();
    }
    out
}

/// Inverse of [`difference_values`]: `initial` holds the first `d` values of
/// the undifferenced series.
pub fn integrate_values(diffed: &[f64], initial: &[f64]) -> Vec<f64> {
    let d = initial.len();
    // Starting value of every intermediate difference level k < d,
    // i.e. the k-th difference evaluated at index k.
    let anchors: Vec<f64> = (0..d).map(|k| difference_values(&initial[..=k], k)[0]).collect();
    let mut level = diffed.to_vec();
    for k in (0..d).rev() {
        let mut next = Vec::with_capacity(level.len() + 1);
        let mut acc = anchors[k];
        next.push(acc);
        for v in &level {
            acc += v;
            next.push(acc);
        }
        level = next;
    }
    level
}

pub fn difference(series: &MonthlySeries, d: usize) -> Result<MonthlySeries> {
    if d == 0 {
        return Err(Error::invalid("differencing order must be at least 1"));
    }
    if d >= series.len() {
        return Err(Error::invalid(format!(
            "cannot difference {} values {d} times",
            series.len()
        )));
    }
    let mut transform = series.transform.clone();
    transform.push(TransformStep::Diff {
        order: d,
        initial_values: series.values[..d].to_vec(),
    });
    Ok(series.derive(
        series.start.offset(d as i64),
        difference_values(&series.values, d),
        transform,
    ))
}

/// Undo the most recent differencing step using `initial_values`.
pub fn integrate(diffed: &MonthlySeries, initial_values: &[f64]) -> Result<MonthlySeries> {
    let Some(TransformStep::Diff { order, .. }) = diffed.transform.last() else {
        return Err(Error::invalid("series was not produced by differencing"));
    };
    if initial_values.len() != *order {
        return Err(Error::invalid(format!(
            "differencing order {order} needs {order} initial values, got {}",
            initial_values.len()
        )));
    }
    let mut transform = diffed.transform.clone();
    transform.pop();
    Ok(diffed.derive(
        diffed.start.offset(-(*order as i64)),
        integrate_values(&diffed.values, initial_values),
        transform,
    ))
}

pub fn log_transform(series: &MonthlySeries) -> Result<MonthlySeries> {
    if let Some(i) = series.values.iter().position(|&v| v <= 0.0) {
        return Err(Error::data(format!(
            "log transform needs positive values; index {i} ({}) is {}",
            series.month_at(i),
            series.values[i]
        )));
    }
    let mut transform = series.transform.clone();
    transform.push(TransformStep::Log);
    Ok(series.derive(series.start, series.values.iter().map(|v| v.ln()).collect(), transform))
}

pub fn exp_transform(series: &MonthlySeries) -> Result<MonthlySeries> {
    if series.transform.last() != Some(&TransformStep::Log) {
        return Err(Error::invalid("series was not produced by a log transform"));
    }
    let mut transform = series.transform.clone();
    transform.pop();
    Ok(series.derive(series.start, series.values.iter().map(|v| v.exp()).collect(), transform))
}

/// Moments and order statistics of a series.
///
/// `std_dev` uses the `n − 1` denominator; skewness and kurtosis use
/// population (`n`) central moments. Kurtosis is raw, so a normal sample
/// sits near 3.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SummaryStats {
    pub n: usize,
    pub mean: f64,
    pub max: f64,
    pub min: f64,
    pub median: f64,
    pub std_dev: f64,
    pub skewness: f64,
    #[serde(rename = "kurtosis_raw")]
    pub kurtosis: f64,
}

pub fn describe(values: &[f64]) -> Result<SummaryStats> {
    let n = values.len();
    if n < 2 {
        return Err(Error::invalid(format!("describe needs at least 2 values, got {n}")));
    }
    let nf = n as f64;
    let mean = values.iter().sum::<f64>() / nf;
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for v in values {
        let d = v - mean;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    let ss = m2;
    m2 /= nf;
    m3 /= nf;
    m4 /= nf;
    let (skewness, kurtosis) = if m2 > 0.0 {
        (m3 / m2.powf(1.5), m4 / (m2 * m2))
    } else {
        (f64::NAN, f64::NAN)
    };

    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let median = if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    };

    Ok(SummaryStats {
        n,
        mean,
        max: sorted[n - 1],
        min: sorted[0],
        median,
        std_dev: (ss / (nf - 1.0)).sqrt(),
        skewness,
        kurtosis,
    })
}

/// One lag of an ACF or PACF, with its ±1.96/√n white-noise band.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrelogramPoint {
    pub lag: usize,
    pub value: f64,
    pub confidence_bound: f64,
}

fn check_correlogram_args(values: &[f64], max_lag: usize) -> Result<()> {
    if values.len() < 2 {
        return Err(Error::invalid("correlogram needs at least 2 values"));
    }
    if max_lag >= values.len() {
        return Err(Error::invalid(format!(
            "max lag {max_lag} must be below the series length {}",
            values.len()
        )));
    }
    Ok(())
}

/// Sample autocorrelations `r_0..=r_max_lag` (lag-0 sum of squares as denominator).
pub fn autocorrelations(values: &[f64], max_lag: usize) -> Result<Vec<f64>> {
    check_correlogram_args(values, max_lag)?;
    let n = values.len();
    let mean = values.iter().sum::<f64>() / n as f64;
    let dev: Vec<f64> = values.iter().map(|v| v - mean).collect();
    let c0: f64 = dev.iter().map(|d| d * d).sum();
    if c0 <= 0.0 || !c0.is_finite() {
        return Err(Error::data("autocorrelation undefined for a constant series"));
    }
    Ok((0..=max_lag)
        .map(|k| {
            if k == 0 {
                1.0
            } else {
                let ck: f64 = dev[..n - k].iter().zip(&dev[k..]).map(|(a, b)| a * b).sum();
                (ck / c0).clamp(-1.0, 1.0)
            }
        })
        .collect())
}

fn band(n: usize) -> f64 {
    1.96 / (n as f64).sqrt()
}

pub fn acf(values: &[f64], max_lag: usize) -> Result<Vec<CorrelogramPoint>> {
    let r = autocorrelations(values, max_lag)?;
    let bound = band(values.len());
    Ok(r.into_iter()
        .enumerate()
        .map(|(lag, value)| CorrelogramPoint {
            lag,
            value,
            confidence_bound: bound,
        })
        .collect())
}

/// Durbin-Levinson recursion on autocorrelations `r_0..=r_K`.
///
/// Returns the partial autocorrelations for lags `1..=K` and the AR
/// coefficients of the order-`K` Yule-Walker fit.
pub fn durbin_levinson(r: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let max_lag = r.len().saturating_sub(1);
    let mut partial = Vec::with_capacity(max_lag);
    let mut phi: Vec<f64> = Vec::with_capacity(max_lag);
    let mut err = r.first().copied().unwrap_or(1.0);
    for k in 1..=max_lag {
        let acc: f64 = phi.iter().enumerate().map(|(j, p)| p * r[k - 1 - j]).sum();
        let kappa = if err.abs() > 0.0 { (r[k] - acc) / err } else { 0.0 };
        let prev = phi.clone();
        for j in 0..phi.len() {
            phi[j] = prev[j] - kappa * prev[prev.len() - 1 - j];
        }
        phi.push(kappa);
        err *= 1.0 - kappa * kappa;
        partial.push(kappa);
    }
    (partial, phi)
}

/// Partial autocorrelations; lag 0 is reported as 1 and lag 1 equals the ACF at lag 1.
pub fn pacf(values: &[f64], max_lag: usize) -> Result<Vec<CorrelogramPoint>> {
    let r = autocorrelations(values, max_lag)?;
    let (partial, _) = durbin_levinson(&r);
    let bound = band(values.len());
    Ok(std::iter::once(1.0)
        .chain(partial)
        .enumerate()
        .map(|(lag, value)| CorrelogramPoint {
            lag,
            value: value.clamp(-1.0, 1.0),
            confidence_bound: bound,
        })
        .collect())
}

/// A contiguous fit/test partition of one series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train_end: YearMonth,
    pub train: MonthlySeries,
    pub test: MonthlySeries,
}

/// Split so that `train` ends at `train_end` and `test` holds every later month.
pub fn split_train_test(series: &MonthlySeries, train_end: YearMonth) -> Result<SplitSpec> {
    let Some(idx) = series.index_of(train_end) else {
        return Err(Error::invalid(format!(
            "train end {train_end} outside series range {}..{}",
            series.start(),
            series.end()
        )));
    };
    if idx + 1 == series.len() {
        return Err(Error::invalid(format!(
            "train end {train_end} is the last month; the test period would be empty"
        )));
    }
    Ok(SplitSpec {
        train_end,
        train: series.slice(0, idx + 1)?,
        test: series.slice(idx + 1, series.len())?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ym(y: i32, m: u32) -> YearMonth {
        YearMonth::new(y, m).unwrap()
    }

    fn series(values: &[f64]) -> MonthlySeries {
        MonthlySeries::new(ym(2000, 1), values.to_vec()).unwrap()
    }

    #[test]
    fn year_month_arithmetic() {
        assert_eq!(ym(1993, 12).succ(), ym(1994, 1));
        assert_eq!(ym(1993, 1).offset(287), ym(2016, 12));
        assert_eq!(ym(2016, 12).months_until(ym(1993, 1)), -287);
        assert_eq!("2015-12".parse::<YearMonth>().unwrap(), ym(2015, 12));
        assert!("2015-13".parse::<YearMonth>().is_err());
        assert_eq!(ym(2008, 3).to_string(), "2008-03");
    }

    #[test]
    fn difference_examples() {
        let d1 = difference(&series(&[1.0, 2.0, 3.0, 4.0]), 1).unwrap();
        assert_eq!(d1.values(), &[1.0, 1.0, 1.0]);
        assert_eq!(d1.start(), ym(2000, 2));
        let d2 = difference(&series(&[1.0, 4.0, 9.0, 16.0]), 2).unwrap();
        assert_eq!(d2.values(), &[2.0, 2.0]);
        assert!(difference(&series(&[1.0, 2.0]), 2).is_err());
        assert!(difference(&series(&[1.0, 2.0]), 0).is_err());
    }

    #[test]
    fn integrate_examples() {
        assert_eq!(integrate_values(&[1.0, 1.0, 1.0], &[1.0]), vec![1.0, 2.0, 3.0, 4.0]);
        assert_eq!(integrate_values(&[], &[5.0]), vec![5.0]);
        let s = series(&[1.0, 4.0, 9.0, 16.0, 25.0]);
        let d = difference(&s, 2).unwrap();
        let back = integrate(&d, &[1.0, 4.0]).unwrap();
        assert_eq!(back, s);
        assert!(integrate(&d, &[1.0]).is_err());
        assert!(integrate(&s, &[1.0]).is_err());
    }

    #[test]
    fn log_examples() {
        let e = std::f64::consts::E;
        let l = log_transform(&series(&[1.0, e, e * e])).unwrap();
        assert_eq!(l.values()[0], 0.0);
        assert!((l.values()[1] - 1.0).abs() < 1e-15);
        assert!((l.values()[2] - 2.0).abs() < 1e-15);
        assert_eq!(l.transform(), &[TransformStep::Log]);
        let err = log_transform(&series(&[3.0, 0.0, 1.0])).unwrap_err();
        assert!(err.to_string().contains("index 1"), "{err}");
        assert!(exp_transform(&series(&[1.0])).is_err());
    }

    #[test]
    fn describe_symmetric_and_errors() {
        let s = describe(&[-1.0, 0.0, 1.0]).unwrap();
        assert_eq!(s.skewness, 0.0);
        assert_eq!(s.median, 0.0);
        assert_eq!(s.std_dev, 1.0);
        assert!(describe(&[1.0]).is_err());
        let even = describe(&[4.0, 1.0, 3.0, 2.0]).unwrap();
        assert_eq!(even.median, 2.5);
    }

    #[test]
    fn acf_lag_zero_and_constant_error() {
        let v = [3.0, 1.0, 4.0, 1.0, 5.0, 9.0, 2.0, 6.0];
        let a = acf(&v, 3).unwrap();
        assert_eq!(a.len(), 4);
        assert_eq!(a[0].value, 1.0);
        assert!((a[0].confidence_bound - 1.96 / 8f64.sqrt()).abs() < 1e-15);
        assert!(acf(&[2.0; 10], 3).is_err());
        assert!(acf(&v, 8).is_err());
    }

    #[test]
    fn pacf_lag_one_matches_acf() {
        let v = [3.0, 1.0, 4.0, 1.0, 5.0, 9.0, 2.0, 6.0, 5.0, 3.0, 5.0];
        let a = acf(&v, 4).unwrap();
        let p = pacf(&v, 4).unwrap();
        assert_eq!(p.len(), 5);
        assert_eq!(p[0].value, 1.0);
        assert_eq!(p[1].value, a[1].value);
    }

    #[test]
    fn durbin_levinson_ar1_autocorrelations() {
        // exact AR(1) autocorrelations give a single nonzero partial
        let r: Vec<f64> = (0..6).map(|k| 0.6f64.powi(k)).collect();
        let (partial, phi) = durbin_levinson(&r);
        assert!((partial[0] - 0.6).abs() < 1e-15);
        for p in &partial[1..] {
            assert!(p.abs() < 1e-14);
        }
        assert!((phi[0] - 0.6).abs() < 1e-14);
    }

    #[test]
    fn split_examples() {
        let s = MonthlySeries::new(ym(1993, 1), vec![1.0; 288]).unwrap();
        let sp = split_train_test(&s, ym(2015, 12)).unwrap();
        assert_eq!(sp.train.len(), 276);
        assert_eq!(sp.test.len(), 12);
        assert_eq!(sp.test.start(), ym(2016, 1));
        assert!(split_train_test(&s, ym(2016, 12)).is_err());
        assert!(split_train_test(&s, ym(1992, 12)).is_err());

        let rec = MonthlySeries::new(ym(1993, 1), vec![1.0; 17 * 12]).unwrap();
        let sp = split_train_test(&rec, ym(2008, 12)).unwrap();
        assert_eq!(sp.train.len(), 192);
    }
}
