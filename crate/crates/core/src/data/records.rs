//! The 19-column hourly CSV.
//!
//! `date` (`YYYY-MM-DD`) and `time` (`HH:MM`, `HH:MM:SS` or a bare hour)
//! together give the row's hour. Demand and peak are in kW, temperatures in
//! degrees Celsius, humidity in percent, wind in km/h, visibility in km and
//! precipitation in mm. `day_type` and `state_holiday` may be numeric or
//! text; text levels are mapped to numbers (see [`RawRecord`]).

use std::collections::HashMap;
use std::fs::File;
use std::io;
use std::path::Path;

use chrono::{NaiveDate, NaiveDateTime, NaiveTime, Timelike};

use super::DataError;

pub const CSV_COLUMNS: [&str; 19] = [
    "date",
    "time",
    "ontario_demand",
    "daily_peak",
    "year",
    "quarter",
    "month",
    "week_of_year",
    "day_of_year",
    "state_holiday",
    "hour_of_day",
    "day_of_week",
    "day_type",
    "temperature",
    "dew_point",
    "relative_humidity",
    "wind_speed",
    "visibility",
    "precipitation",
];

/// Longest run of missing weather hours that is filled by interpolation.
const MAX_INTERPOLATED_GAP: usize = 3;

/// One parsed hour.
///
/// `day_type` levels: `weekday` = 0, `weekend` = 1, `holiday` = 2, other
/// text levels numbered from 3 in order of first appearance.
/// `state_holiday`: `yes`/`true` = 1, `no`/`false`/`none`/empty = 0, any
/// other text (a holiday name) = 1.
#[derive(Debug, Clone, PartialEq)]
pub struct RawRecord {
    pub timestamp: NaiveDateTime,
    pub ontario_demand: f64,
    pub daily_peak: f64,
    pub year: i32,
    pub quarter: u32,
    pub month: u32,
    pub week_of_year: u32,
    pub day_of_year: u32,
    pub state_holiday: f64,
    pub hour_of_day: u32,
    pub day_of_week: u32,
    pub day_type: f64,
    pub temperature: f64,
    pub dew_point: f64,
    pub relative_humidity: f64,
    pub wind_speed: f64,
    pub visibility: f64,
    pub precipitation: f64,
}

/// A data row dropped during loading.
#[derive(Debug, Clone, PartialEq)]
pub struct Rejection {
    /// 1-based line in the file (the header is line 1).
    pub line: u64,
    pub reason: String,
}

#[derive(Debug, Clone)]
pub struct LoadedCsv {
    pub records: Vec<RawRecord>,
    pub rejected: Vec<Rejection>,
}

pub fn load_csv(path: impl AsRef<Path>) -> Result<LoadedCsv, DataError> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| DataError::Io {
        path: path.display().to_string(),
        source,
    })?;
    read_csv(io::BufReader::new(file))
}

/// Weather readings before gap filling.
type WeatherRow = [Option<f64>; 6];

struct Partial {
    line: u64,
    record: RawRecord,
    weather: WeatherRow,
}

pub fn read_csv<R: io::Read>(reader: R) -> Result<LoadedCsv, DataError> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    let index: HashMap<&str, usize> = headers.iter().enumerate().map(|(i, h)| (h, i)).collect();
    let mut col = [0usize; 19];
    for (slot, name) in col.iter_mut().zip(CSV_COLUMNS) {
        *slot = *index
            .get(name)
            .ok_or_else(|| DataError::MissingColumn(name.to_string()))?;
    }

    let mut levels = Levels::default();
    let mut rows: Vec<Partial> = Vec::new();
    let mut rejected = Vec::new();
    for result in rdr.records() {
        let rec = result?;
        let line = rec.position().map_or(0, |p| p.line());
        let field = |i: usize| rec.get(col[i]).unwrap_or("");
        match parse_row(&field, &mut levels) {
            Ok((record, weather)) => rows.push(Partial {
                line,
                record,
                weather,
            }),
            Err(reason) => rejected.push(Rejection { line, reason }),
        }
    }

    let bad: Vec<u64> = rows
        .windows(2)
        .filter(|w| w[1].record.timestamp <= w[0].record.timestamp)
        .map(|w| w[1].line)
        .collect();
    if !bad.is_empty() {
        return Err(DataError::NonMonotonic { lines: bad });
    }

    let keep = fill_weather_gaps(&mut rows, &mut rejected);
    let records: Vec<RawRecord> = rows
        .into_iter()
        .zip(keep)
        .filter(|(_, k)| *k)
        .map(|(p, _)| p.record)
        .collect();
    rejected.sort_by_key(|r| r.line);
    if records.is_empty() {
        return Err(DataError::Empty {
            rejected: rejected.len(),
        });
    }
    Ok(LoadedCsv { records, rejected })
}

#[derive(Default)]
struct Levels {
    day_types: Vec<String>,
}

impl Levels {
    fn day_type(&mut self, raw: &str) -> f64 {
        if let Ok(v) = raw.parse::<f64>() {
            return v;
        }
        let key = raw.to_ascii_lowercase();
        match key.as_str() {
            "weekday" => 0.0,
            "weekend" => 1.0,
            "holiday" => 2.0,
            _ => {
                let pos = match self.day_types.iter().position(|k| *k == key) {
                    Some(p) => p,
                    None => {
                        self.day_types.push(key);
                        self.day_types.len() - 1
                    }
                };
                3.0 + pos as f64
            }
        }
    }
}

fn holiday_flag(raw: &str) -> f64 {
    if let Ok(v) = raw.parse::<f64>() {
        return v;
    }
    match raw.to_ascii_lowercase().as_str() {
        "" | "no" | "false" | "none" => 0.0,
        _ => 1.0,
    }
}

fn parse_time(raw: &str) -> Option<NaiveTime> {
    NaiveTime::parse_from_str(raw, "%H:%M:%S")
        .or_else(|_| NaiveTime::parse_from_str(raw, "%H:%M"))
        .ok()
        .or_else(|| {
            raw.parse::<u32>()
                .ok()
                .and_then(|h| NaiveTime::from_hms_opt(h, 0, 0))
        })
}

fn parse_row<'a>(
    field: &impl Fn(usize) -> &'a str,
    levels: &mut Levels,
) -> Result<(RawRecord, WeatherRow), String> {
    let date = NaiveDate::parse_from_str(field(0), "%Y-%m-%d")
        .map_err(|_| format!("bad date `{}`", field(0)))?;
    let time = parse_time(field(1)).ok_or_else(|| format!("bad time `{}`", field(1)))?;
    let num = |i: usize| -> Result<f64, String> {
        field(i)
            .parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| format!("bad {} `{}`", CSV_COLUMNS[i], field(i)))
    };
    let int = |i: usize| -> Result<u32, String> {
        let v = num(i)?;
        if v < 0.0 || v.fract() != 0.0 {
            return Err(format!("bad {} `{}`", CSV_COLUMNS[i], field(i)));
        }
        Ok(v as u32)
    };
    let weather = |i: usize| -> Result<Option<f64>, String> {
        if field(i).is_empty() || field(i).eq_ignore_ascii_case("nan") {
            Ok(None)
        } else {
            num(i).map(Some)
        }
    };

    let demand = num(2)?;
    if demand <= 0.0 {
        return Err(format!("non-positive ontario_demand `{}`", field(2)));
    }
    let w = [
        weather(13)?,
        weather(14)?,
        weather(15)?,
        weather(16)?,
        weather(17)?,
        weather(18)?,
    ];
    if let Some(rh) = w[2] {
        if !(0.0..=100.0).contains(&rh) {
            return Err(format!("relative_humidity {rh} outside [0, 100]"));
        }
    }
    for (k, name) in [(3, "wind_speed"), (4, "visibility"), (5, "precipitation")] {
        if w[k].is_some_and(|v| v < 0.0) {
            return Err(format!("negative {name}"));
        }
    }
    let record = RawRecord {
        timestamp: date
            .and_time(time)
            .with_minute(0)
            .and_then(|t| t.with_second(0))
            .expect("valid"),
        ontario_demand: demand,
        daily_peak: num(3)?,
        year: num(4)? as i32,
        quarter: int(5)?,
        month: int(6)?,
        week_of_year: int(7)?,
        day_of_year: int(8)?,
        state_holiday: holiday_flag(field(9)),
        hour_of_day: int(10)?,
        day_of_week: int(11)?,
        day_type: levels.day_type(field(12)),
        temperature: 0.0,
        dew_point: 0.0,
        relative_humidity: 0.0,
        wind_speed: 0.0,
        visibility: 0.0,
        precipitation: 0.0,
    };
    Ok((record, w))
}

/// Linearly interpolates weather gaps of at most [`MAX_INTERPOLATED_GAP`]
/// consecutive hours between two observed hours; rows in longer or
/// unbounded gaps are rejected. Returns a keep-mask over `rows`.
fn fill_weather_gaps(rows: &mut [Partial], rejected: &mut Vec<Rejection>) -> Vec<bool> {
    let mut keep = vec![true; rows.len()];
    for k in 0..6 {
        let mut i = 0;
        while i < rows.len() {
            if rows[i].weather[k].is_some() {
                i += 1;
                continue;
            }
            let start = i;
            while i < rows.len() && rows[i].weather[k].is_none() {
                i += 1;
            }
            let end = i; // exclusive
            let hours_between = |a: usize, b: usize| {
                (rows[b].record.timestamp - rows[a].record.timestamp).num_hours()
            };
            let bounded = start > 0 && end < rows.len();
            let fillable = bounded
                && end - start <= MAX_INTERPOLATED_GAP
                && hours_between(start - 1, end) as usize == end - start + 1;
            if fillable {
                let lo = rows[start - 1].weather[k].expect("observed");
                let hi = rows[end].weather[k].expect("observed");
                let span = (end - start + 1) as f64;
                for (step, j) in (start..end).enumerate() {
                    let frac = (step + 1) as f64 / span;
                    rows[j].weather[k] = Some(lo + (hi - lo) * frac);
                }
            } else {
                for j in start..end {
                    if keep[j] {
                        keep[j] = false;
                        rejected.push(Rejection {
                            line: rows[j].line,
                            reason: format!(
                                "missing {} in a gap of {} hours",
                                CSV_COLUMNS[13 + k],
                                end - start
                            ),
                        });
                    }
                }
            }
        }
    }
    for (row, _) in rows.iter_mut().zip(&keep).filter(|(_, k)| **k) {
        let w = row.weather.map(|v| v.unwrap_or(f64::NAN));
        let r = &mut row.record;
        r.temperature = w[0];
        r.dew_point = w[1];
        r.relative_humidity = w[2];
        r.wind_speed = w[3];
        r.visibility = w[4];
        r.precipitation = w[5];
    }
    keep
}

/// Writes records with the [`CSV_COLUMNS`] header.
pub fn write_csv<W: io::Write>(records: &[RawRecord], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_COLUMNS)?;
    for r in records {
        w.write_record([
            r.timestamp.format("%Y-%m-%d").to_string(),
            r.timestamp.format("%H:%M").to_string(),
            r.ontario_demand.to_string(),
            r.daily_peak.to_string(),
            r.year.to_string(),
            r.quarter.to_string(),
            r.month.to_string(),
            r.week_of_year.to_string(),
            r.day_of_year.to_string(),
            r.state_holiday.to_string(),
            r.hour_of_day.to_string(),
            r.day_of_week.to_string(),
            r.day_type.to_string(),
            r.temperature.to_string(),
            r.dew_point.to_string(),
            r.relative_humidity.to_string(),
            r.wind_speed.to_string(),
            r.visibility.to_string(),
            r.precipitation.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
