//! Domain types shared by every pipeline stage.
//!
//! Constructors enforce the invariants; deserialization goes through the same
//! constructors so a value that exists is a valid value.

use std::fmt;

use chrono::{DateTime, NaiveDate, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Default minimum separation between the two captures of a pair.
pub const MIN_GAP_DAYS: i64 = 365;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TypeError {
    #[error("latitude {0} outside [-90, 90]")]
    Latitude(f64),
    #[error("longitude {0} outside [-180, 180]")]
    Longitude(f64),
    #[error("empty {0}")]
    Empty(&'static str),
    #[error("invalid timestamp {0:?}: {1}")]
    Timestamp(String, String),
    #[error("pair mixes locations {0:?} and {1:?}")]
    LocationMismatch(String, String),
    #[error("earlier capture {0} is not before later capture {1}")]
    NotOrdered(DateTime<Utc>, DateTime<Utc>),
    #[error("gap of {gap} days is below the minimum of {min}")]
    GapTooShort { gap: i64, min: i64 },
    #[error("stored {0} does not match the records")]
    Inconsistent(&'static str),
    #[error("{field} = {value} is out of range")]
    OutOfRange { field: &'static str, value: f64 },
}

/// One imagery capture.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawImageRecord")]
pub struct ImageRecord {
    pub id: String,
    pub location_key: String,
    pub latitude: f64,
    pub longitude: f64,
    pub country_code: String,
    pub category: String,
    #[serde(with = "utc_seconds")]
    pub timestamp: DateTime<Utc>,
    pub image_ref: String,
}

#[derive(Deserialize)]
struct RawImageRecord {
    id: String,
    location_key: String,
    latitude: f64,
    longitude: f64,
    country_code: String,
    category: String,
    timestamp: String,
    image_ref: String,
}

impl TryFrom<RawImageRecord> for ImageRecord {
    type Error = TypeError;

    fn try_from(raw: RawImageRecord) -> Result<Self, Self::Error> {
        let timestamp = parse_utc(&raw.timestamp)?;
        ImageRecord::new(
            raw.id,
            raw.location_key,
            raw.latitude,
            raw.longitude,
            raw.country_code,
            raw.category,
            timestamp,
            raw.image_ref,
        )
    }
}

impl ImageRecord {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        id: impl Into<String>,
        location_key: impl Into<String>,
        latitude: f64,
        longitude: f64,
        country_code: impl Into<String>,
        category: impl Into<String>,
        timestamp: DateTime<Utc>,
        image_ref: impl Into<String>,
    ) -> Result<Self, TypeError> {
        let id = id.into();
        let location_key = location_key.into();
        if id.is_empty() {
            return Err(TypeError::Empty("id"));
        }
        if location_key.is_empty() {
            return Err(TypeError::Empty("location_key"));
        }
        if !(-90.0..=90.0).contains(&latitude) {
            return Err(TypeError::Latitude(latitude));
        }
        if !(-180.0..=180.0).contains(&longitude) {
            return Err(TypeError::Longitude(longitude));
        }
        Ok(Self {
            id,
            location_key,
            latitude,
            longitude,
            country_code: country_code.into(),
            category: category.into(),
            timestamp,
            image_ref: image_ref.into(),
        })
    }

    pub fn date(&self) -> NaiveDate {
        self.timestamp.date_naive()
    }
}

/// Accepts RFC 3339 with any offset (normalized to UTC) or a bare
/// `YYYY-MM-DDTHH:MM:SS[.fff]` read as UTC.
pub fn parse_utc(s: &str) -> Result<DateTime<Utc>, TypeError> {
    let s = s.trim();
    if let Ok(t) = DateTime::parse_from_rfc3339(s) {
        return Ok(t.with_timezone(&Utc));
    }
    chrono::NaiveDateTime::parse_from_str(s, "%Y-%m-%dT%H:%M:%S%.f")
        .map(|n| n.and_utc())
        .map_err(|e| TypeError::Timestamp(s.to_string(), e.to_string()))
}

pub(crate) mod utc_seconds {
    use chrono::{DateTime, SecondsFormat, Utc};
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(t: &DateTime<Utc>, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&t.to_rfc3339_opts(SecondsFormat::AutoSi, true))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<DateTime<Utc>, D::Error> {
        let s = String::deserialize(d)?;
        super::parse_utc(&s).map_err(serde::de::Error::custom)
    }
}

/// Which of the two annotation backends owns a pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Annotator {
    A,
    B,
}

impl fmt::Display for Annotator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Annotator::A => "A",
            Annotator::B => "B",
        })
    }
}

/// Two captures of one site, at least the minimum gap apart.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawPair")]
pub struct TemporalPair {
    pub pair_id: String,
    pub earlier: ImageRecord,
    pub later: ImageRecord,
    pub gap_days: i64,
}

#[derive(Deserialize)]
struct RawPair {
    pair_id: String,
    earlier: ImageRecord,
    later: ImageRecord,
    gap_days: i64,
}

impl TryFrom<RawPair> for TemporalPair {
    type Error = TypeError;

    fn try_from(raw: RawPair) -> Result<Self, Self::Error> {
        let min = raw.gap_days.min(MIN_GAP_DAYS);
        let pair = TemporalPair::with_min_gap(raw.earlier, raw.later, min)?;
        if pair.pair_id != raw.pair_id {
            return Err(TypeError::Inconsistent("pair_id"));
        }
        if pair.gap_days != raw.gap_days {
            return Err(TypeError::Inconsistent("gap_days"));
        }
        Ok(pair)
    }
}

impl TemporalPair {
    pub fn new(earlier: ImageRecord, later: ImageRecord) -> Result<Self, TypeError> {
        Self::with_min_gap(earlier, later, MIN_GAP_DAYS)
    }

    /// Like [`TemporalPair::new`] with a configurable minimum gap.
    pub fn with_min_gap(
        earlier: ImageRecord,
        later: ImageRecord,
        min_gap_days: i64,
    ) -> Result<Self, TypeError> {
        if earlier.location_key != later.location_key {
            return Err(TypeError::LocationMismatch(
                earlier.location_key,
                later.location_key,
            ));
        }
        if earlier.timestamp >= later.timestamp {
            return Err(TypeError::NotOrdered(earlier.timestamp, later.timestamp));
        }
        let gap_days = gap_days(&earlier.timestamp, &later.timestamp);
        if gap_days < min_gap_days {
            return Err(TypeError::GapTooShort {
                gap: gap_days,
                min: min_gap_days,
            });
        }
        Ok(Self {
            pair_id: pair_id(&earlier.id, &later.id),
            earlier,
            later,
            gap_days,
        })
    }

    pub fn location_key(&self) -> &str {
        &self.earlier.location_key
    }
}

/// Whole days between two instants, truncated.
pub fn gap_days(earlier: &DateTime<Utc>, later: &DateTime<Utc>) -> i64 {
    (*later - *earlier).num_days()
}

pub fn pair_id(earlier_id: &str, later_id: &str) -> String {
    format!("{earlier_id}~{later_id}")
}

/// Daily weather aggregate for one capture. `None` marks a missing value.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct WeatherReading {
    /// °C
    pub temperature: Option<f64>,
    /// °C
    pub dew_point: Option<f64>,
    /// percent
    pub humidity: Option<f64>,
    /// km/h
    pub wind_speed: Option<f64>,
    pub uv_index: Option<f64>,
}

/// Air-quality daily aggregate, all values in µg/m³.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EmissionReading {
    pub pm10: Option<f64>,
    pub pm2_5: Option<f64>,
    pub co: Option<f64>,
    pub no2: Option<f64>,
    pub o3: Option<f64>,
}

impl WeatherReading {
    /// Blanks every out-of-range or non-finite value and returns the names of
    /// the blanked fields.
    pub fn sanitize(&mut self) -> Vec<&'static str> {
        let mut dropped = Vec::new();
        for field in SensorField::WEATHER {
            if let Some(v) = field.weather(self) {
                if !field.accepts(v) {
                    field.set_weather(self, None);
                    dropped.push(field.name());
                }
            }
        }
        dropped
    }

    pub fn is_empty(&self) -> bool {
        SensorField::WEATHER.iter().all(|f| f.weather(self).is_none())
    }
}

impl EmissionReading {
    pub fn sanitize(&mut self) -> Vec<&'static str> {
        let mut dropped = Vec::new();
        for field in SensorField::EMISSIONS {
            if let Some(v) = field.emission(self) {
                if !field.accepts(v) {
                    field.set_emission(self, None);
                    dropped.push(field.name());
                }
            }
        }
        dropped
    }

    pub fn is_empty(&self) -> bool {
        SensorField::EMISSIONS.iter().all(|f| f.emission(self).is_none())
    }
}

/// Every sensor field, in canonical rendering order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SensorField {
    Temperature,
    DewPoint,
    Humidity,
    WindSpeed,
    UvIndex,
    Pm10,
    Pm2_5,
    Co,
    No2,
    O3,
}

impl SensorField {
    pub const WEATHER: [SensorField; 5] = [
        SensorField::Temperature,
        SensorField::DewPoint,
        SensorField::Humidity,
        SensorField::WindSpeed,
        SensorField::UvIndex,
    ];
    pub const EMISSIONS: [SensorField; 5] = [
        SensorField::Pm10,
        SensorField::Pm2_5,
        SensorField::Co,
        SensorField::No2,
        SensorField::O3,
    ];
    pub const ALL: [SensorField; 10] = [
        SensorField::Temperature,
        SensorField::DewPoint,
        SensorField::Humidity,
        SensorField::WindSpeed,
        SensorField::UvIndex,
        SensorField::Pm10,
        SensorField::Pm2_5,
        SensorField::Co,
        SensorField::No2,
        SensorField::O3,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SensorField::Temperature => "temperature",
            SensorField::DewPoint => "dew_point",
            SensorField::Humidity => "humidity",
            SensorField::WindSpeed => "wind_speed",
            SensorField::UvIndex => "uv_index",
            SensorField::Pm10 => "pm10",
            SensorField::Pm2_5 => "pm2_5",
            SensorField::Co => "co",
            SensorField::No2 => "no2",
            SensorField::O3 => "o3",
        }
    }

    /// Unit suffix used when rendering; empty for the unitless UV index.
    pub fn unit(self) -> &'static str {
        match self {
            SensorField::Temperature | SensorField::DewPoint => "°C",
            SensorField::Humidity => "%",
            SensorField::WindSpeed => "km/h",
            SensorField::UvIndex => "",
            _ => "µg/m³",
        }
    }

    pub fn is_weather(self) -> bool {
        (self as usize) < 5
    }

    pub fn accepts(self, v: f64) -> bool {
        if !v.is_finite() {
            return false;
        }
        match self {
            SensorField::Temperature | SensorField::DewPoint => true,
            SensorField::Humidity => (0.0..=100.0).contains(&v),
            _ => v >= 0.0,
        }
    }

    pub fn weather(self, w: &WeatherReading) -> Option<f64> {
        match self {
            SensorField::Temperature => w.temperature,
            SensorField::DewPoint => w.dew_point,
            SensorField::Humidity => w.humidity,
            SensorField::WindSpeed => w.wind_speed,
            SensorField::UvIndex => w.uv_index,
            _ => None,
        }
    }

    pub fn set_weather(self, w: &mut WeatherReading, v: Option<f64>) {
        match self {
            SensorField::Temperature => w.temperature = v,
            SensorField::DewPoint => w.dew_point = v,
            SensorField::Humidity => w.humidity = v,
            SensorField::WindSpeed => w.wind_speed = v,
            SensorField::UvIndex => w.uv_index = v,
            _ => {}
        }
    }

    pub fn emission(self, e: &EmissionReading) -> Option<f64> {
        match self {
            SensorField::Pm10 => e.pm10,
            SensorField::Pm2_5 => e.pm2_5,
            SensorField::Co => e.co,
            SensorField::No2 => e.no2,
            SensorField::O3 => e.o3,
            _ => None,
        }
    }

    pub fn set_emission(self, e: &mut EmissionReading, v: Option<f64>) {
        match self {
            SensorField::Pm10 => e.pm10 = v,
            SensorField::Pm2_5 => e.pm2_5 = v,
            SensorField::Co => e.co = v,
            SensorField::No2 => e.no2 = v,
            SensorField::O3 => e.o3 = v,
            _ => {}
        }
    }

    /// Value of this field for one capture, whichever reading holds it.
    pub fn read(self, w: &WeatherReading, e: Option<&EmissionReading>) -> Option<f64> {
        if self.is_weather() {
            self.weather(w)
        } else {
            e.and_then(|e| self.emission(e))
        }
    }
}

impl fmt::Display for SensorField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::TimeZone;

    fn rec(id: &str, loc: &str, y: i32, m: u32, d: u32) -> ImageRecord {
        ImageRecord::new(
            id,
            loc,
            10.0,
            20.0,
            "FRA",
            "airport",
            Utc.with_ymd_and_hms(y, m, d, 0, 0, 0).unwrap(),
            format!("img/{id}.jpg"),
        )
        .unwrap()
    }

    #[test]
    fn coordinates_are_range_checked() {
        let t = Utc.with_ymd_and_hms(2010, 1, 1, 0, 0, 0).unwrap();
        assert_eq!(
            ImageRecord::new("a", "l", 91.0, 0.0, "FRA", "c", t, "x").unwrap_err(),
            TypeError::Latitude(91.0)
        );
        assert_eq!(
            ImageRecord::new("a", "l", 0.0, -180.5, "FRA", "c", t, "x").unwrap_err(),
            TypeError::Longitude(-180.5)
        );
        assert!(ImageRecord::new("a", "", 0.0, 0.0, "FRA", "c", t, "x").is_err());
        assert!(ImageRecord::new("a", "l", -90.0, 180.0, "FRA", "c", t, "x").is_ok());
    }

    #[test]
    fn record_json_rejects_bad_timestamp() {
        let line = r#"{"id":"a","location_key":"l","latitude":1,"longitude":2,"country_code":"FRA","category":"airport","timestamp":"2015-13-01T00:00:00Z","image_ref":"x"}"#;
        assert!(serde_json::from_str::<ImageRecord>(line).is_err());
        let ok = line.replace("2015-13-01", "2015-12-01");
        let r: ImageRecord = serde_json::from_str(&ok).unwrap();
        assert_eq!(r.timestamp, Utc.with_ymd_and_hms(2015, 12, 1, 0, 0, 0).unwrap());
    }

    #[test]
    fn offsets_normalize_to_utc() {
        let t = parse_utc("2015-07-01T02:00:00+03:00").unwrap();
        assert_eq!(t, Utc.with_ymd_and_hms(2015, 6, 30, 23, 0, 0).unwrap());
        assert!(parse_utc("2015-07-01T02:00:00").is_ok());
    }

    #[test]
    fn pair_needs_full_year() {
        let a = rec("a", "l", 2010, 1, 1);
        let short = rec("b", "l", 2010, 12, 31);
        let year = rec("c", "l", 2011, 1, 1);
        assert_eq!(
            TemporalPair::new(a.clone(), short).unwrap_err(),
            TypeError::GapTooShort { gap: 364, min: 365 }
        );
        let p = TemporalPair::new(a.clone(), year.clone()).unwrap();
        assert_eq!(p.gap_days, 365);
        assert_eq!(p.pair_id, "a~c");
        assert!(matches!(
            TemporalPair::new(year, a),
            Err(TypeError::NotOrdered(..))
        ));
    }

    #[test]
    fn pair_rejects_mixed_locations() {
        let a = rec("a", "l1", 2010, 1, 1);
        let b = rec("b", "l2", 2012, 1, 1);
        assert!(matches!(
            TemporalPair::new(a, b),
            Err(TypeError::LocationMismatch(..))
        ));
    }

    #[test]
    fn pair_json_roundtrip_revalidates() {
        let p = TemporalPair::new(rec("a", "l", 2010, 1, 1), rec("b", "l", 2012, 1, 1)).unwrap();
        let s = serde_json::to_string(&p).unwrap();
        let back: TemporalPair = serde_json::from_str(&s).unwrap();
        assert_eq!(back, p);
        let forged = s.replace("\"gap_days\":730", "\"gap_days\":10").replace("2012-01-01", "2010-01-05");
        assert!(serde_json::from_str::<TemporalPair>(&forged).is_err());
    }

    #[test]
    fn sanitize_blanks_out_of_range() {
        let mut w = WeatherReading {
            temperature: Some(-12.0),
            humidity: Some(150.0),
            wind_speed: Some(-1.0),
            ..Default::default()
        };
        assert_eq!(w.sanitize(), vec!["humidity", "wind_speed"]);
        assert_eq!(w.temperature, Some(-12.0));
        assert_eq!(w.humidity, None);

        let mut e = EmissionReading {
            pm10: Some(f64::NAN),
            co: Some(0.0),
            ..Default::default()
        };
        assert_eq!(e.sanitize(), vec!["pm10"]);
        assert_eq!(e.co, Some(0.0));
    }
}
