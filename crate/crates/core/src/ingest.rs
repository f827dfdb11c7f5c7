//! Hourly meteorological records: CSV parsing, validation, gap filling and
//! descriptive statistics.
//!
//! Missing cells (empty or `NA`) are held as `NaN` inside a frame until
//! [`impute_gaps`] fills them; every other operation downstream requires a
//! complete frame.

use std::fmt::Write as _;
use std::path::Path;

use chrono::{Duration, NaiveDateTime, Timelike};

use crate::error::{Error, Result};
use crate::matrix::Matrix;

pub const TIMESTAMP_COLUMN: &str = "timestamp";
pub const TIMESTAMP_FORMAT: &str = "%Y-%m-%dT%H:%M";
pub const NUM_CHANNELS: usize = 8;

/// The eight observed variables, in canonical column order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Channel {
    /// Station pressure, hPa.
    Prs,
    /// Air temperature, °C.
    Tem,
    /// Relative humidity, %.
    Rhu,
    /// Hourly precipitation, mm.
    Pre1h,
    /// 2-minute mean wind direction, degrees.
    Wd2mi,
    /// 2-minute mean wind speed, m/s.
    Ws2mi,
    /// 10-minute mean wind direction, degrees.
    Wd10mi,
    /// 10-minute mean wind speed, m/s. The forecast target.
    Ws10mi,
}

impl Channel {
    pub const ALL: [Channel; NUM_CHANNELS] = [
        Channel::Prs,
        Channel::Tem,
        Channel::Rhu,
        Channel::Pre1h,
        Channel::Wd2mi,
        Channel::Ws2mi,
        Channel::Wd10mi,
        Channel::Ws10mi,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Channel::Prs => "PRS",
            Channel::Tem => "TEM",
            Channel::Rhu => "RHU",
            Channel::Pre1h => "PRE1h",
            Channel::Wd2mi => "WD2mi",
            Channel::Ws2mi => "WS2mi",
            Channel::Wd10mi => "WD10mi",
            Channel::Ws10mi => "WS10mi",
        }
    }

    pub fn unit(self) -> &'static str {
        match self {
            Channel::Prs => "hPa",
            Channel::Tem => "degC",
            Channel::Rhu => "%",
            Channel::Pre1h => "mm",
            Channel::Wd2mi | Channel::Wd10mi => "deg",
            Channel::Ws2mi | Channel::Ws10mi => "m/s",
        }
    }

    /// Case-insensitive lookup by column name.
    pub fn from_name(name: &str) -> Option<Channel> {
        Channel::ALL
            .into_iter()
            .find(|c| c.name().eq_ignore_ascii_case(name))
    }

    /// Inclusive physical bounds; `None` means unbounded on that side.
    pub fn bounds(self) -> (Option<f64>, Option<f64>) {
        match self {
            Channel::Prs => (Some(850.0), Some(1100.0)),
            Channel::Tem => (None, None),
            Channel::Rhu => (Some(0.0), Some(100.0)),
            Channel::Pre1h | Channel::Ws2mi | Channel::Ws10mi => (Some(0.0), None),
            Channel::Wd2mi | Channel::Wd10mi => (Some(0.0), Some(360.0)),
        }
    }

    pub fn in_bounds(self, v: f64) -> bool {
        let (lo, hi) = self.bounds();
        lo.is_none_or(|lo| v >= lo) && hi.is_none_or(|hi| v <= hi)
    }

    fn bounds_label(self) -> String {
        match self.bounds() {
            (Some(lo), Some(hi)) => format!("[{lo}, {hi}]"),
            (Some(lo), None) => format!(">= {lo}"),
            (None, Some(hi)) => format!("<= {hi}"),
            (None, None) => "finite values".to_string(),
        }
    }
}

/// Hourly 8-channel series. Columns follow [`Channel::ALL`] order.
#[derive(Clone, Debug, PartialEq)]
pub struct TimeSeriesFrame {
    timestamps: Vec<NaiveDateTime>,
    columns: [Vec<f64>; NUM_CHANNELS],
}

impl TimeSeriesFrame {
    /// Builds a frame, checking column lengths and physical bounds.
    /// `NaN` marks a missing value and is exempt from the bounds check.
    pub fn new(timestamps: Vec<NaiveDateTime>, columns: [Vec<f64>; NUM_CHANNELS]) -> Result<Self> {
        for (ch, col) in Channel::ALL.iter().zip(&columns) {
            if col.len() != timestamps.len() {
                return Err(Error::Shape(format!(
                    "column {} has {} values but there are {} timestamps",
                    ch.name(),
                    col.len(),
                    timestamps.len()
                )));
            }
            for (i, &v) in col.iter().enumerate() {
                if !v.is_nan() && !(v.is_finite() && ch.in_bounds(v)) {
                    return Err(Error::Validation {
                        row: i + 1,
                        column: ch.name().to_string(),
                        value: v,
                        bounds: ch.bounds_label(),
                    });
                }
            }
        }
        Ok(Self {
            timestamps,
            columns,
        })
    }

    pub fn len(&self) -> usize {
        self.timestamps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.timestamps.is_empty()
    }

    pub fn timestamps(&self) -> &[NaiveDateTime] {
        &self.timestamps
    }

    pub fn column(&self, ch: Channel) -> &[f64] {
        &self.columns[ch.index()]
    }

    pub fn row(&self, i: usize) -> [f64; NUM_CHANNELS] {
        std::array::from_fn(|c| self.columns[c][i])
    }

    pub fn missing_cells(&self) -> usize {
        self.columns
            .iter()
            .map(|c| c.iter().filter(|v| v.is_nan()).count())
            .sum()
    }

    /// True when timestamps advance by exactly one hour and no cell is missing.
    pub fn is_regular(&self) -> bool {
        self.timestamps
            .windows(2)
            .all(|w| w[1] - w[0] == Duration::hours(1))
            && self.missing_cells() == 0
    }

    /// Rows `start..end` as an `(end - start) x 8` matrix.
    pub fn rows_matrix(&self, start: usize, end: usize) -> Matrix {
        let mut m = Matrix::zeros(end - start, NUM_CHANNELS);
        for (r, i) in (start..end).enumerate() {
            for c in 0..NUM_CHANNELS {
                m.set(r, c, self.columns[c][i]);
            }
        }
        m
    }

    pub fn to_matrix(&self) -> Matrix {
        self.rows_matrix(0, self.len())
    }

    /// Serializes to the CSV interchange format. Values use the shortest
    /// representation that parses back to the same `f64`; missing cells are empty.
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(self.len() * 64);
        out.push_str(TIMESTAMP_COLUMN);
        for ch in Channel::ALL {
            out.push(',');
            out.push_str(ch.name());
        }
        out.push('\n');
        for i in 0..self.len() {
            let _ = write!(out, "{}", self.timestamps[i].format(TIMESTAMP_FORMAT));
            for col in &self.columns {
                out.push(',');
                if !col[i].is_nan() {
                    let _ = write!(out, "{}", col[i]);
                }
            }
            out.push('\n');
        }
        out
    }
}

pub fn parse_timestamp(s: &str) -> std::result::Result<NaiveDateTime, String> {
    let t = NaiveDateTime::parse_from_str(s, TIMESTAMP_FORMAT)
        .map_err(|e| format!("`{s}` is not a YYYY-MM-DDTHH:00 timestamp ({e})"))?;
    if t.minute() != 0 {
        return Err(format!("`{s}` is not on the hour"));
    }
    Ok(t)
}

/// Parses CSV text with a header naming `timestamp` and the eight channels in
/// any order. Unknown extra columns are ignored.
pub fn parse_records(csv_text: &str) -> Result<TimeSeriesFrame> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(csv_text.as_bytes());

    let headers = reader.headers()?.clone();
    let mut ts_idx = None;
    let mut ch_idx: [Option<usize>; NUM_CHANNELS] = [None; NUM_CHANNELS];
    for (i, name) in headers.iter().enumerate() {
        let slot = if name.eq_ignore_ascii_case(TIMESTAMP_COLUMN) {
            &mut ts_idx
        } else if let Some(ch) = Channel::from_name(name) {
            &mut ch_idx[ch.index()]
        } else {
            log::debug!("ignoring unknown column `{name}`");
            continue;
        };
        if slot.replace(i).is_some() {
            return Err(Error::Schema(format!("duplicate column `{name}`")));
        }
    }
    let ts_idx =
        ts_idx.ok_or_else(|| Error::Schema(format!("missing column `{TIMESTAMP_COLUMN}`")))?;
    let mut missing = Vec::new();
    for ch in Channel::ALL {
        if ch_idx[ch.index()].is_none() {
            missing.push(ch.name());
        }
    }
    if !missing.is_empty() {
        return Err(Error::Schema(format!(
            "missing column(s) {}",
            missing.join(", ")
        )));
    }
    let ch_idx = ch_idx.map(|i| i.unwrap());

    let mut timestamps = Vec::new();
    let mut columns: [Vec<f64>; NUM_CHANNELS] = Default::default();
    for (r, record) in reader.records().enumerate() {
        let row = r + 1;
        let record = record?;
        let ts = record.get(ts_idx).unwrap_or("");
        timestamps.push(parse_timestamp(ts).map_err(|message| Error::Parse {
            row,
            column: TIMESTAMP_COLUMN.to_string(),
            message,
        })?);
        for ch in Channel::ALL {
            let cell = record.get(ch_idx[ch.index()]).unwrap_or("");
            let v = parse_cell(cell).map_err(|message| Error::Parse {
                row,
                column: ch.name().to_string(),
                message,
            })?;
            if !v.is_nan() && !ch.in_bounds(v) {
                return Err(Error::Validation {
                    row,
                    column: ch.name().to_string(),
                    value: v,
                    bounds: ch.bounds_label(),
                });
            }
            columns[ch.index()].push(v);
        }
    }
    if timestamps.is_empty() {
        return Err(Error::EmptyFrame);
    }
    TimeSeriesFrame::new(timestamps, columns)
}

fn parse_cell(cell: &str) -> std::result::Result<f64, String> {
    if cell.is_empty() || cell.eq_ignore_ascii_case("NA") {
        return Ok(f64::NAN);
    }
    match cell.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        Ok(_) => Err(format!("`{cell}` is not finite")),
        Err(_) => Err(format!("`{cell}` is not a number")),
    }
}

pub fn read_csv(path: impl AsRef<Path>) -> Result<TimeSeriesFrame> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_records(&text)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum GapPolicy {
    #[default]
    ForwardFill,
    Reject,
}

impl std::str::FromStr for GapPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "forward-fill" | "ffill" => Ok(GapPolicy::ForwardFill),
            "reject" => Ok(GapPolicy::Reject),
            _ => Err(Error::Parameter(format!("unknown gap policy `{s}`"))),
        }
    }
}

impl std::fmt::Display for GapPolicy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            GapPolicy::ForwardFill => "forward-fill",
            GapPolicy::Reject => "reject",
        })
    }
}

/// What [`impute_gaps`] had to fill.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct GapReport {
    /// Hours absent from the input, in order.
    pub inserted_hours: Vec<NaiveDateTime>,
    /// Missing cells in rows that were present.
    pub filled_cells: usize,
}

impl GapReport {
    pub fn gap_count(&self) -> usize {
        self.inserted_hours.len() + self.filled_cells
    }
}

/// Makes a frame hourly-regular.
///
/// Forward-fill copies the previous (already filled) row into each missing hour
/// and fills missing cells from the row above. Rows that were present keep
/// their observed values.
pub fn impute_gaps(
    frame: &TimeSeriesFrame,
    policy: GapPolicy,
) -> Result<(TimeSeriesFrame, GapReport)> {
    if frame.is_empty() {
        return Err(Error::EmptyFrame);
    }
    let ts = frame.timestamps();
    for (i, w) in ts.windows(2).enumerate() {
        if w[1] <= w[0] {
            return Err(Error::Gap(format!(
                "timestamps not strictly increasing at row {} ({} after {})",
                i + 2,
                w[1].format(TIMESTAMP_FORMAT),
                w[0].format(TIMESTAMP_FORMAT)
            )));
        }
    }
    if let Some(ch) = Channel::ALL
        .into_iter()
        .find(|ch| frame.column(*ch)[0].is_nan())
    {
        return Err(Error::Gap(format!(
            "{} is missing in the first row; nothing to fill from",
            ch.name()
        )));
    }

    let mut report = GapReport::default();
    for w in ts.windows(2) {
        let mut t = w[0] + Duration::hours(1);
        while t < w[1] {
            report.inserted_hours.push(t);
            t += Duration::hours(1);
        }
    }
    report.filled_cells = frame.missing_cells();

    if policy == GapPolicy::Reject && report.gap_count() > 0 {
        let mut msg = String::new();
        if !report.inserted_hours.is_empty() {
            let hours: Vec<String> = report
                .inserted_hours
                .iter()
                .map(|t| t.format(TIMESTAMP_FORMAT).to_string())
                .collect();
            let _ = write!(msg, "missing hour(s) {}", hours.join(", "));
        }
        if report.filled_cells > 0 {
            if !msg.is_empty() {
                msg.push_str("; ");
            }
            let _ = write!(msg, "{} missing cell(s)", report.filled_cells);
        }
        return Err(Error::Gap(msg));
    }

    let span = (*ts.last().unwrap() - ts[0]).num_hours() as usize + 1;
    let mut timestamps = Vec::with_capacity(span);
    let mut columns: [Vec<f64>; NUM_CHANNELS] = std::array::from_fn(|_| Vec::with_capacity(span));
    for i in 0..frame.len() {
        if i > 0 {
            let mut t = ts[i - 1] + Duration::hours(1);
            while t < ts[i] {
                timestamps.push(t);
                for col in columns.iter_mut() {
                    let prev = *col.last().unwrap();
                    col.push(prev);
                }
                t += Duration::hours(1);
            }
        }
        timestamps.push(ts[i]);
        for (c, col) in columns.iter_mut().enumerate() {
            let v = frame.columns[c][i];
            col.push(if v.is_nan() { *col.last().unwrap() } else { v });
        }
    }
    if report.gap_count() > 0 {
        log::info!(
            "forward-filled {} missing hour(s) and {} missing cell(s)",
            report.inserted_hours.len(),
            report.filled_cells
        );
    }
    Ok((TimeSeriesFrame::new(timestamps, columns)?, report))
}

/// Per-column descriptive statistics.
#[derive(Clone, Debug, PartialEq)]
pub struct ColumnStats {
    pub channel: Channel,
    pub count: usize,
    pub mean: f64,
    /// Population standard deviation (divides by N).
    pub std: f64,
    pub min: f64,
    pub q25: f64,
    pub q50: f64,
    pub q75: f64,
    pub max: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StatsTable {
    pub columns: Vec<ColumnStats>,
}

impl StatsTable {
    pub fn get(&self, ch: Channel) -> &ColumnStats {
        &self.columns[ch.index()]
    }

    /// Rows are statistics, columns are channels.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("stat");
        for c in &self.columns {
            out.push(',');
            out.push_str(c.channel.name());
        }
        out.push('\n');
        let rows: [(&str, fn(&ColumnStats) -> f64); 8] = [
            ("count", |c| c.count as f64),
            ("mean", |c| c.mean),
            ("std", |c| c.std),
            ("min", |c| c.min),
            ("25%", |c| c.q25),
            ("50%", |c| c.q50),
            ("75%", |c| c.q75),
            ("max", |c| c.max),
        ];
        for (name, f) in rows {
            out.push_str(name);
            for c in &self.columns {
                let _ = write!(out, ",{}", f(c));
            }
            out.push('\n');
        }
        out
    }
}

/// Quantile by linear interpolation between order statistics, position `q * (n - 1)`.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

pub fn summarize(frame: &TimeSeriesFrame) -> Result<StatsTable> {
    if frame.is_empty() {
        return Err(Error::EmptyFrame);
    }
    if frame.missing_cells() > 0 {
        return Err(Error::Gap(format!(
            "{} missing cell(s); impute before summarizing",
            frame.missing_cells()
        )));
    }
    let columns = Channel::ALL
        .into_iter()
        .map(|ch| {
            let col = frame.column(ch);
            let n = col.len() as f64;
            let mean = col.iter().sum::<f64>() / n;
            let var = col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
            let mut sorted = col.to_vec();
            sorted.sort_by(f64::total_cmp);
            ColumnStats {
                channel: ch,
                count: col.len(),
                mean,
                std: var.sqrt(),
                min: sorted[0],
                q25: quantile_sorted(&sorted, 0.25),
                q50: quantile_sorted(&sorted, 0.5),
                q75: quantile_sorted(&sorted, 0.75),
                max: *sorted.last().unwrap(),
            }
        })
        .collect();
    Ok(StatsTable { columns })
}
