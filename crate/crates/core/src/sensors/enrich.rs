use std::collections::{BTreeMap, HashMap};

use futures::stream::{self, StreamExt};
use serde::{Deserialize, Serialize};

use super::client::{EmissionsFetch, FetchError, ProvenanceEntry, SensorClient, WeatherFetch};
use super::countries::validate_country;
use crate::season::{season_of, Season};
use crate::types::{EmissionReading, ImageRecord, SensorField, TemporalPair, TypeError, WeatherReading};

/// A pair with per-capture sensor readings and seasons.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawEnriched")]
pub struct EnrichedSample {
    pub pair: TemporalPair,
    pub weather_earlier: WeatherReading,
    pub weather_later: WeatherReading,
    pub emissions_earlier: Option<EmissionReading>,
    pub emissions_later: Option<EmissionReading>,
    pub season_earlier: Season,
    pub season_later: Season,
    pub provenance: Vec<ProvenanceEntry>,
    /// Reasons this sample needs a human look, e.g. a country mismatch.
    #[serde(default)]
    pub review_flags: Vec<String>,
}

#[derive(Deserialize)]
struct RawEnriched {
    pair: TemporalPair,
    weather_earlier: WeatherReading,
    weather_later: WeatherReading,
    emissions_earlier: Option<EmissionReading>,
    emissions_later: Option<EmissionReading>,
    season_earlier: Season,
    season_later: Season,
    provenance: Vec<ProvenanceEntry>,
    #[serde(default)]
    review_flags: Vec<String>,
}

impl TryFrom<RawEnriched> for EnrichedSample {
    type Error = TypeError;

    fn try_from(raw: RawEnriched) -> Result<Self, Self::Error> {
        let s = EnrichedSample::new(
            raw.pair,
            raw.weather_earlier,
            raw.weather_later,
            raw.emissions_earlier,
            raw.emissions_later,
        );
        if s.season_earlier != raw.season_earlier || s.season_later != raw.season_later {
            return Err(TypeError::Inconsistent("season"));
        }
        Ok(Self {
            provenance: raw.provenance,
            review_flags: raw.review_flags,
            ..s
        })
    }
}

impl EnrichedSample {
    /// Seasons are derived from the captures, never supplied.
    pub fn new(
        pair: TemporalPair,
        weather_earlier: WeatherReading,
        weather_later: WeatherReading,
        emissions_earlier: Option<EmissionReading>,
        emissions_later: Option<EmissionReading>,
    ) -> Self {
        let season_earlier = season_of(&pair.earlier.timestamp, pair.earlier.latitude);
        let season_later = season_of(&pair.later.timestamp, pair.later.latitude);
        Self {
            pair,
            weather_earlier,
            weather_later,
            emissions_earlier,
            emissions_later,
            season_earlier,
            season_later,
            provenance: Vec::new(),
            review_flags: Vec::new(),
        }
    }

    /// Readings of capture 0 (earlier) or 1 (later).
    pub fn readings(&self, which: usize) -> (&WeatherReading, Option<&EmissionReading>) {
        if which == 0 {
            (&self.weather_earlier, self.emissions_earlier.as_ref())
        } else {
            (&self.weather_later, self.emissions_later.as_ref())
        }
    }
}

#[derive(Debug)]
struct ImageSensors {
    weather: WeatherFetch,
    emissions: EmissionsFetch,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnrichFailure {
    pub image_id: String,
    pub pair_ids: Vec<String>,
    pub error: String,
}

#[derive(Debug)]
pub struct EnrichOutcome {
    /// In input order, minus pairs whose readings could not be fetched.
    pub samples: Vec<EnrichedSample>,
    pub failures: Vec<EnrichFailure>,
}

async fn fetch_image(client: &SensorClient, record: &ImageRecord) -> Result<ImageSensors, FetchError> {
    let weather = client.fetch_weather(record).await?;
    let emissions = client.fetch_emissions(record).await?;
    Ok(ImageSensors { weather, emissions })
}

/// Fetches readings for every distinct capture (bounded by the client's
/// concurrency) and fuses them onto the pairs.
pub async fn enrich_pairs(client: &SensorClient, pairs: &[TemporalPair]) -> EnrichOutcome {
    let mut images: BTreeMap<&str, &ImageRecord> = BTreeMap::new();
    let mut owners: HashMap<&str, Vec<String>> = HashMap::new();
    for p in pairs {
        for r in [&p.earlier, &p.later] {
            images.entry(&r.id).or_insert(r);
            owners.entry(&r.id).or_default().push(p.pair_id.clone());
        }
    }

    let concurrency = client.config().concurrency.max(1);
    let fetched: HashMap<&str, Result<ImageSensors, FetchError>> = stream::iter(images.into_values())
        .map(|r| async move { (r.id.as_str(), fetch_image(client, r).await) })
        .buffer_unordered(concurrency)
        .collect()
        .await;

    let mut failures: Vec<EnrichFailure> = fetched
        .iter()
        .filter_map(|(id, res)| {
            res.as_ref().err().map(|e| EnrichFailure {
                image_id: id.to_string(),
                pair_ids: owners[id].clone(),
                error: e.to_string(),
            })
        })
        .collect();
    failures.sort_by(|a, b| a.image_id.cmp(&b.image_id));

    let samples = pairs
        .iter()
        .filter_map(|p| {
            let e = fetched.get(p.earlier.id.as_str())?.as_ref().ok()?;
            let l = fetched.get(p.later.id.as_str())?.as_ref().ok()?;
            Some(fuse(p, e, l))
        })
        .collect();
    EnrichOutcome { samples, failures }
}

fn fuse(pair: &TemporalPair, earlier: &ImageSensors, later: &ImageSensors) -> EnrichedSample {
    let mut s = EnrichedSample::new(
        pair.clone(),
        earlier.weather.reading.clone(),
        later.weather.reading.clone(),
        earlier.emissions.reading.clone(),
        later.emissions.reading.clone(),
    );
    for (record, sensors) in [(&pair.earlier, earlier), (&pair.later, later)] {
        s.provenance.push(sensors.weather.provenance.clone());
        s.provenance.push(sensors.emissions.provenance.clone());
        if let Some(name) = &sensors.weather.country_name {
            if !validate_country(&record.country_code, name) {
                s.review_flags.push(format!(
                    "country_mismatch:{}:{}!={}",
                    record.id, record.country_code, name
                ));
            }
        }
    }
    s
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PruneReport {
    pub sample_count: usize,
    /// Missing fraction per field over all captures (two per sample).
    pub missing_fraction: BTreeMap<SensorField, f64>,
    pub pruned: Vec<SensorField>,
}

/// Blanks, in every sample, each field missing in more than
/// `max_missing_fraction` of captures. A capture without emissions counts as
/// missing every emissions field. Samples are never removed.
pub fn drop_sparse_features(
    mut samples: Vec<EnrichedSample>,
    max_missing_fraction: f64,
) -> (Vec<EnrichedSample>, PruneReport) {
    let slots = samples.len() * 2;
    let mut report = PruneReport {
        sample_count: samples.len(),
        ..Default::default()
    };
    if slots == 0 {
        return (samples, report);
    }
    for field in SensorField::ALL {
        let missing = samples
            .iter()
            .flat_map(|s| [s.readings(0), s.readings(1)])
            .filter(|(w, e)| field.read(w, *e).is_none())
            .count();
        let frac = missing as f64 / slots as f64;
        report.missing_fraction.insert(field, frac);
        if frac > max_missing_fraction {
            report.pruned.push(field);
        }
    }
    for s in &mut samples {
        for field in &report.pruned {
            if field.is_weather() {
                field.set_weather(&mut s.weather_earlier, None);
                field.set_weather(&mut s.weather_later, None);
            } else {
                for e in [&mut s.emissions_earlier, &mut s.emissions_later] {
                    if let Some(r) = e.as_mut() {
                        field.set_emission(r, None);
                    }
                }
            }
        }
        for e in [&mut s.emissions_earlier, &mut s.emissions_later] {
            if e.as_ref().is_some_and(EmissionReading::is_empty) {
                *e = None;
            }
        }
    }
    (samples, report)
}
