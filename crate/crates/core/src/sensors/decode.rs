//! Provider response decoding and unit normalization.
//!
//! | provider      | JSON path                 | field        | native unit handling            |
//! |---------------|---------------------------|--------------|---------------------------------|
//! | weather       | `days[0].temp`            | temperature  | °F → °C when `units` is `us`    |
//! | weather       | `days[0].dew`             | dew_point    | °F → °C when `units` is `us`    |
//! | weather       | `days[0].humidity`        | humidity     | percent                         |
//! | weather       | `days[0].windspeed`       | wind_speed   | mph → km/h when `units` is `us` or `uk` |
//! | weather       | `days[0].uvindex`         | uv_index     | unitless                        |
//! | weather       | `resolvedAddress`         | country name | last comma-separated segment    |
//! | emissions EU  | `hourly.<param>[]`        | daily mean of non-null hours, `hourly_units` honoured |
//! | emissions ROW | `results[].parameter/value/unit` | mean per parameter     |
//!
//! EU parameter names: `pm10`, `pm2_5`, `carbon_monoxide`, `nitrogen_dioxide`,
//! `ozone`. ROW names: `pm10`, `pm25`/`pm2.5`/`pm2_5`, `co`, `no2`, `o3`.
//! Gas concentrations in ppm or ppb are converted to µg/m³ at 25 °C, 1 atm.

use std::collections::BTreeMap;

use serde_json::Value;
use thiserror::Error;

use crate::types::{EmissionReading, SensorField, WeatherReading};

#[derive(Debug, Clone, Error, PartialEq)]
#[error("malformed {provider} response: {reason}")]
pub struct DecodeError {
    pub provider: &'static str,
    pub reason: String,
}

fn err(provider: &'static str, reason: impl Into<String>) -> DecodeError {
    DecodeError {
        provider,
        reason: reason.into(),
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct DecodedWeather {
    pub reading: WeatherReading,
    pub country_name: Option<String>,
    /// Fields blanked for being out of range.
    pub rejected: Vec<&'static str>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct DecodedEmissions {
    /// `None` when the provider has no data for this place and day.
    pub reading: Option<EmissionReading>,
    pub rejected: Vec<&'static str>,
}

fn f_to_c(f: f64) -> f64 {
    (f - 32.0) * 5.0 / 9.0
}

fn mph_to_kmh(v: f64) -> f64 {
    v * 1.609_344
}

pub fn decode_weather(body: &str) -> Result<DecodedWeather, DecodeError> {
    const P: &str = "weather";
    let v: Value = serde_json::from_str(body).map_err(|e| err(P, e.to_string()))?;
    let obj = v.as_object().ok_or_else(|| err(P, "body is not an object"))?;
    let units = obj.get("units").and_then(Value::as_str).unwrap_or("metric");
    let (imperial_temp, imperial_wind) = match units {
        "metric" | "base" => (false, false),
        "us" => (true, true),
        "uk" => (false, true),
        other => return Err(err(P, format!("unknown units {other:?}"))),
    };

    let day = match obj.get("days") {
        None | Some(Value::Null) => None,
        Some(Value::Array(days)) => days.first(),
        Some(_) => return Err(err(P, "days is not an array")),
    };
    let num = |name: &str| -> Result<Option<f64>, DecodeError> {
        match day.and_then(|d| d.get(name)) {
            None | Some(Value::Null) => Ok(None),
            Some(x) => x
                .as_f64()
                .map(Some)
                .ok_or_else(|| err(P, format!("{name} is not a number"))),
        }
    };

    let mut reading = WeatherReading {
        temperature: num("temp")?.map(|t| if imperial_temp { f_to_c(t) } else { t }),
        dew_point: num("dew")?.map(|t| if imperial_temp { f_to_c(t) } else { t }),
        humidity: num("humidity")?,
        wind_speed: num("windspeed")?.map(|w| if imperial_wind { mph_to_kmh(w) } else { w }),
        uv_index: num("uvindex")?,
    };
    let rejected = reading.sanitize();

    let country_name = obj
        .get("resolvedAddress")
        .and_then(Value::as_str)
        .and_then(|a| a.rsplit(',').next())
        .map(|s| s.trim().to_string())
        .filter(|s| !s.is_empty());

    Ok(DecodedWeather {
        reading,
        country_name,
        rejected,
    })
}

fn molecular_weight(field: SensorField) -> Option<f64> {
    match field {
        SensorField::Co => Some(28.01),
        SensorField::No2 => Some(46.0055),
        SensorField::O3 => Some(47.997),
        _ => None,
    }
}

/// Converts a concentration to µg/m³. `None` for unknown or inapplicable units.
pub fn to_ugm3(field: SensorField, value: f64, unit: &str) -> Option<f64> {
    const MOLAR_VOLUME: f64 = 24.45;
    let unit = unit.trim().to_lowercase();
    match unit.as_str() {
        "µg/m³" | "μg/m³" | "ug/m3" | "µg/m3" | "μg/m3" | "ug/m³" => Some(value),
        "mg/m³" | "mg/m3" => Some(value * 1000.0),
        "ppm" => molecular_weight(field).map(|mw| value * 1000.0 * mw / MOLAR_VOLUME),
        "ppb" => molecular_weight(field).map(|mw| value * mw / MOLAR_VOLUME),
        _ => None,
    }
}

fn mean(values: &[f64]) -> Option<f64> {
    (!values.is_empty()).then(|| values.iter().sum::<f64>() / values.len() as f64)
}

fn finish(mut reading: EmissionReading) -> DecodedEmissions {
    let rejected = reading.sanitize();
    DecodedEmissions {
        reading: (!reading.is_empty()).then_some(reading),
        rejected,
    }
}

pub fn decode_emissions_eu(body: &str) -> Result<DecodedEmissions, DecodeError> {
    const P: &str = "emissions_eu";
    const PARAMS: [(&str, SensorField); 5] = [
        ("pm10", SensorField::Pm10),
        ("pm2_5", SensorField::Pm2_5),
        ("carbon_monoxide", SensorField::Co),
        ("nitrogen_dioxide", SensorField::No2),
        ("ozone", SensorField::O3),
    ];
    let v: Value = serde_json::from_str(body).map_err(|e| err(P, e.to_string()))?;
    let obj = v.as_object().ok_or_else(|| err(P, "body is not an object"))?;
    let hourly = match obj.get("hourly") {
        None | Some(Value::Null) => return Ok(DecodedEmissions::default()),
        Some(Value::Object(h)) => h,
        Some(_) => return Err(err(P, "hourly is not an object")),
    };
    let units = obj.get("hourly_units").and_then(Value::as_object);

    let mut reading = EmissionReading::default();
    let mut rejected = Vec::new();
    for (name, field) in PARAMS {
        let Some(series) = hourly.get(name) else { continue };
        let series = series
            .as_array()
            .ok_or_else(|| err(P, format!("{name} is not an array")))?;
        let mut values = Vec::with_capacity(series.len());
        for x in series {
            match x {
                Value::Null => {}
                _ => values.push(x.as_f64().ok_or_else(|| err(P, format!("{name} has a non-number")))?),
            }
        }
        let unit = units
            .and_then(|u| u.get(name))
            .and_then(Value::as_str)
            .unwrap_or("μg/m³");
        match mean(&values).map(|m| to_ugm3(field, m, unit)) {
            Some(Some(v)) => field.set_emission(&mut reading, Some(v)),
            Some(None) => rejected.push(field.name()),
            None => {}
        }
    }
    let mut out = finish(reading);
    rejected.append(&mut out.rejected);
    out.rejected = rejected;
    Ok(out)
}

pub fn decode_emissions_row(body: &str) -> Result<DecodedEmissions, DecodeError> {
    const P: &str = "emissions_row";
    let v: Value = serde_json::from_str(body).map_err(|e| err(P, e.to_string()))?;
    let obj = v.as_object().ok_or_else(|| err(P, "body is not an object"))?;
    let results = match obj.get("results") {
        None | Some(Value::Null) => return Ok(DecodedEmissions::default()),
        Some(Value::Array(r)) => r,
        Some(_) => return Err(err(P, "results is not an array")),
    };

    let mut values: BTreeMap<SensorField, Vec<f64>> = BTreeMap::new();
    let mut rejected = Vec::new();
    for item in results {
        let param = item
            .get("parameter")
            .and_then(Value::as_str)
            .ok_or_else(|| err(P, "result without parameter"))?;
        let field = match param.to_lowercase().as_str() {
            "pm10" => SensorField::Pm10,
            "pm25" | "pm2.5" | "pm2_5" => SensorField::Pm2_5,
            "co" => SensorField::Co,
            "no2" => SensorField::No2,
            "o3" => SensorField::O3,
            _ => continue,
        };
        let value = match item.get("value") {
            None | Some(Value::Null) => continue,
            Some(x) => x.as_f64().ok_or_else(|| err(P, format!("{param} value is not a number")))?,
        };
        let unit = item.get("unit").and_then(Value::as_str).unwrap_or("µg/m³");
        // Sentinel negatives are rejected here, before unit scaling hides them.
        if value < 0.0 || !value.is_finite() {
            rejected.push(field.name());
            continue;
        }
        match to_ugm3(field, value, unit) {
            Some(v) => values.entry(field).or_default().push(v),
            None => rejected.push(field.name()),
        }
    }

    let mut reading = EmissionReading::default();
    for (field, vs) in &values {
        field.set_emission(&mut reading, mean(vs));
    }
    let mut out = finish(reading);
    rejected.append(&mut out.rejected);
    rejected.sort_unstable();
    rejected.dedup();
    out.rejected = rejected;
    Ok(out)
}
