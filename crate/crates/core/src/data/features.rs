use std::fmt;
use std::str::FromStr;

use chrono::NaiveDateTime;
use ndarray::Array2;

use super::{DataError, RawRecord};

/// Inputs per timestep expected by the forecaster.
pub const FEATURE_COUNT: usize = 8;

/// A numeric column of [`RawRecord`] usable as a model input.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Column {
    OntarioDemand,
    DailyPeak,
    Year,
    Quarter,
    Month,
    WeekOfYear,
    DayOfYear,
    StateHoliday,
    HourOfDay,
    DayOfWeek,
    DayType,
    Temperature,
    DewPoint,
    RelativeHumidity,
    WindSpeed,
    Visibility,
    Precipitation,
}

impl Column {
    pub const ALL: [Column; 17] = [
        Self::OntarioDemand,
        Self::DailyPeak,
        Self::Year,
        Self::Quarter,
        Self::Month,
        Self::WeekOfYear,
        Self::DayOfYear,
        Self::StateHoliday,
        Self::HourOfDay,
        Self::DayOfWeek,
        Self::DayType,
        Self::Temperature,
        Self::DewPoint,
        Self::RelativeHumidity,
        Self::WindSpeed,
        Self::Visibility,
        Self::Precipitation,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::OntarioDemand => "ontario_demand",
            Self::DailyPeak => "daily_peak",
            Self::Year => "year",
            Self::Quarter => "quarter",
            Self::Month => "month",
            Self::WeekOfYear => "week_of_year",
            Self::DayOfYear => "day_of_year",
            Self::StateHoliday => "state_holiday",
            Self::HourOfDay => "hour_of_day",
            Self::DayOfWeek => "day_of_week",
            Self::DayType => "day_type",
            Self::Temperature => "temperature",
            Self::DewPoint => "dew_point",
            Self::RelativeHumidity => "relative_humidity",
            Self::WindSpeed => "wind_speed",
            Self::Visibility => "visibility",
            Self::Precipitation => "precipitation",
        }
    }

    pub fn value(self, r: &RawRecord) -> f64 {
        match self {
            Self::OntarioDemand => r.ontario_demand,
            Self::DailyPeak => r.daily_peak,
            Self::Year => r.year as f64,
            Self::Quarter => r.quarter as f64,
            Self::Month => r.month as f64,
            Self::WeekOfYear => r.week_of_year as f64,
            Self::DayOfYear => r.day_of_year as f64,
            Self::StateHoliday => r.state_holiday,
            Self::HourOfDay => r.hour_of_day as f64,
            Self::DayOfWeek => r.day_of_week as f64,
            Self::DayType => r.day_type,
            Self::Temperature => r.temperature,
            Self::DewPoint => r.dew_point,
            Self::RelativeHumidity => r.relative_humidity,
            Self::WindSpeed => r.wind_speed,
            Self::Visibility => r.visibility,
            Self::Precipitation => r.precipitation,
        }
    }
}

impl fmt::Display for Column {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Column {
    type Err = DataError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|c| c.name() == s.trim())
            .ok_or_else(|| DataError::UnknownColumn(s.trim().to_string()))
    }
}

/// Exactly [`FEATURE_COUNT`] distinct columns, one of which is demand.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeatureSet(Vec<Column>);

impl Default for FeatureSet {
    /// Demand, four weather readings and three calendar fields.
    fn default() -> Self {
        Self(vec![
            Column::OntarioDemand,
            Column::Temperature,
            Column::DewPoint,
            Column::RelativeHumidity,
            Column::WindSpeed,
            Column::HourOfDay,
            Column::DayOfWeek,
            Column::StateHoliday,
        ])
    }
}

impl FeatureSet {
    pub fn new(columns: Vec<Column>) -> Result<Self, DataError> {
        if columns.len() != FEATURE_COUNT {
            return Err(DataError::Config(format!(
                "exactly {FEATURE_COUNT} features are required, got {}",
                columns.len()
            )));
        }
        if !columns.contains(&Column::OntarioDemand) {
            return Err(DataError::Config(
                "ontario_demand must be one of the features".into(),
            ));
        }
        for (i, c) in columns.iter().enumerate() {
            if columns[..i].contains(c) {
                return Err(DataError::Config(format!("feature `{c}` listed twice")));
            }
        }
        Ok(Self(columns))
    }

    pub fn parse<S: AsRef<str>>(names: &[S]) -> Result<Self, DataError> {
        Self::new(
            names
                .iter()
                .map(|n| n.as_ref().parse())
                .collect::<Result<_, _>>()?,
        )
    }

    pub fn columns(&self) -> &[Column] {
        &self.0
    }

    pub fn demand_index(&self) -> usize {
        self.0
            .iter()
            .position(|c| *c == Column::OntarioDemand)
            .expect("validated")
    }
}

/// Selected features as a `[T, 8]` matrix alongside the raw demand series.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub timestamps: Vec<NaiveDateTime>,
    pub features: Array2<f64>,
    pub demand: Vec<f64>,
    /// Column of `features` holding demand.
    pub demand_feature: usize,
}

impl Series {
    pub fn len(&self) -> usize {
        self.timestamps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.timestamps.is_empty()
    }
}

pub fn select_features(records: &[RawRecord], set: &FeatureSet) -> Series {
    let cols = set.columns();
    Series {
        timestamps: records.iter().map(|r| r.timestamp).collect(),
        features: Array2::from_shape_fn((records.len(), cols.len()), |(i, j)| {
            cols[j].value(&records[i])
        }),
        demand: records.iter().map(|r| r.ontario_demand).collect(),
        demand_feature: set.demand_index(),
    }
}
