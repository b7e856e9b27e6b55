//! Conversation samples for the three task kinds, and train/test export.
//!
//! * describe: one user turn with the first image shown, one assistant turn.
//! * whatif: the describe exchange, then the annotated what-if question
//!   without any new image. The second capture is never shown.
//! * difference: image 1, then image 2, then a question about the change.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::annotation::AnnotationRecord;
use crate::chat::{ChatMessage, Role};
use crate::sensors::EnrichedSample;
use crate::types::{Annotator, EmissionReading, SensorField, WeatherReading};

pub const UNAVAILABLE: &str = "sensors: unavailable";

/// One line per present reading in canonical field order, one decimal place.
pub fn render_sensor_block(weather: &WeatherReading, emissions: Option<&EmissionReading>) -> String {
    let lines: Vec<String> = SensorField::ALL
        .iter()
        .filter_map(|f| f.read(weather, emissions).map(|v| (f, v)))
        .map(|(f, v)| {
            let mut value = format!("{v:.1}");
            if value == "-0.0" {
                value = "0.0".into();
            }
            match f.unit() {
                "" => format!("{}: {value}", f.name()),
                unit => format!("{}: {value} {unit}", f.name()),
            }
        })
        .collect();
    if lines.is_empty() {
        UNAVAILABLE.to_string()
    } else {
        lines.join("\n")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    Describe,
    Whatif,
    Difference,
}

impl Task {
    pub const ALL: [Task; 3] = [Task::Describe, Task::Whatif, Task::Difference];

    pub fn name(self) -> &'static str {
        match self {
            Task::Describe => "describe",
            Task::Whatif => "whatif",
            Task::Difference => "difference",
        }
    }

    /// Index of the assistant turn that carries the scored answer.
    pub fn scored_turn(self) -> usize {
        match self {
            Task::Describe => 0,
            Task::Whatif => 1,
            Task::Difference => 2,
        }
    }

    pub fn user_turns(self) -> usize {
        self.scored_turn() + 1
    }
}

impl std::fmt::Display for Task {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Task {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Task::ALL
            .into_iter()
            .find(|t| t.name() == s)
            .ok_or_else(|| format!("unknown task {s:?}"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleMeta {
    pub annotator: Annotator,
    pub country_code: String,
    pub category: String,
    #[serde(default)]
    pub seed_index: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConversationSample {
    pub id: String,
    pub task: Task,
    pub pair_id: String,
    pub images: Vec<String>,
    pub messages: Vec<ChatMessage>,
    pub meta: SampleMeta,
}

impl ConversationSample {
    pub fn assistant_turns(&self) -> impl Iterator<Item = &ChatMessage> {
        self.messages.iter().filter(|m| m.role == Role::Assistant)
    }

    /// The answer an evaluation compares against.
    pub fn scored_text(&self) -> Option<&str> {
        self.assistant_turns()
            .nth(self.task.scored_turn())
            .map(|m| m.content.as_str())
    }
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
#[error("sample {id}: {reason}")]
pub struct StructureError {
    pub id: String,
    pub reason: String,
}

/// Checks turn order, roles and where images appear for the sample's task.
pub fn check_structure(s: &ConversationSample) -> Result<(), StructureError> {
    let fail = |reason: String| {
        Err(StructureError {
            id: s.id.clone(),
            reason,
        })
    };
    let turns = s.task.user_turns();
    if s.messages.len() != turns * 2 {
        return fail(format!("expected {} messages, found {}", turns * 2, s.messages.len()));
    }
    let expected_images = match s.task {
        Task::Describe | Task::Whatif => 1,
        Task::Difference => 2,
    };
    if s.images.len() != expected_images {
        return fail(format!("expected {expected_images} images, found {}", s.images.len()));
    }
    let mut shown = Vec::new();
    for (i, m) in s.messages.iter().enumerate() {
        let want = if i % 2 == 0 { Role::User } else { Role::Assistant };
        if m.role != want {
            return fail(format!("message {i} has role {}, expected {}", m.role.as_str(), want.as_str()));
        }
        if m.role == Role::Assistant && !m.images().is_empty() {
            return fail(format!("assistant message {i} carries images"));
        }
        let user_idx = i / 2;
        let may_show = m.role == Role::User && user_idx < expected_images;
        match (may_show, m.images().len()) {
            (true, 1) => shown.extend_from_slice(m.images()),
            (false, 0) => {}
            (_, n) => return fail(format!("message {i} carries {n} images")),
        }
    }
    if shown != s.images {
        return fail("images list differs from the images shown in messages".into());
    }
    Ok(())
}

/// True when a what-if sample mentions the second capture: its image ref,
/// or its sensor block when that differs from the first capture's.
pub fn whatif_leaks(s: &ConversationSample, second_image: &str, second_block: Option<&str>, first_block: Option<&str>) -> bool {
    if s.task != Task::Whatif {
        return false;
    }
    let text = serde_json::to_string(s).unwrap_or_default();
    if text.contains(second_image) {
        return true;
    }
    match second_block {
        Some(b) if Some(b) != first_block && b != UNAVAILABLE => s.messages.iter().any(|m| m.content.contains(b)),
        _ => false,
    }
}

/// Counter-based uniform draw of a task. Returns the task and the counter at
/// which it was accepted.
pub fn draw_task(mix_seed: u64, pair_id: &str) -> (Task, u64) {
    // largest multiple of 3 representable in u64 arithmetic
    let limit = u64::MAX - (u64::MAX % 3);
    let mut counter = 0u64;
    loop {
        let mut h = Sha256::new();
        h.update(mix_seed.to_le_bytes());
        h.update(counter.to_le_bytes());
        h.update(pair_id.as_bytes());
        let digest = h.finalize();
        let mut word = [0u8; 8];
        word.copy_from_slice(&digest[..8]);
        let x = u64::from_le_bytes(word);
        if x < limit {
            return (Task::ALL[(x % 3) as usize], counter);
        }
        counter += 1;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DescribeImage {
    #[default]
    Earlier,
    Later,
}

#[derive(Debug, Clone, Default)]
pub struct BuildOptions {
    pub describe_image: DescribeImage,
    /// When set, only pairs in this set are emitted.
    pub retained: Option<BTreeSet<String>>,
}

#[derive(Debug, Clone, Default)]
pub struct BuildOutput {
    /// Sorted by id.
    pub samples: Vec<ConversationSample>,
    pub skipped: Vec<(String, String)>,
}

pub const DESCRIBE_PROMPT: &str = "Describe this satellite image in detail.";
pub const SECOND_IMAGE_PROMPT: &str = "Here is a later image of the same site. Describe it in detail.";
pub const DIFFERENCE_PROMPT: &str = "What changed between the first and the second image?";

/// Text of a user turn that introduces an image: the prompt, then the season
/// and sensor block when known.
pub fn image_turn_text(prompt: &str, season: Option<&str>, block: Option<&str>) -> String {
    let mut out = prompt.to_string();
    if let Some(season) = season {
        out.push_str("\nSeason: ");
        out.push_str(season);
    }
    if let Some(block) = block {
        out.push_str("\nSensor readings:\n");
        out.push_str(block);
    }
    out
}

fn image_turn(prompt: &str, season: &str, block: &str, image: &str) -> ChatMessage {
    ChatMessage::user_with_images(image_turn_text(prompt, Some(season), Some(block)), vec![image.to_string()])
}

fn conversation(task: Task, a: &AnnotationRecord, e: &EnrichedSample, describe: DescribeImage) -> (Vec<String>, Vec<ChatMessage>) {
    let pair = &e.pair;
    let block = |i| {
        let (w, em) = e.readings(i);
        render_sensor_block(w, em)
    };
    let first = image_turn(DESCRIBE_PROMPT, e.season_earlier.name(), &block(0), &pair.earlier.image_ref);
    match task {
        Task::Describe => match describe {
            DescribeImage::Earlier => (
                vec![pair.earlier.image_ref.clone()],
                vec![first, ChatMessage::assistant(&a.description_1)],
            ),
            DescribeImage::Later => (
                vec![pair.later.image_ref.clone()],
                vec![
                    image_turn(DESCRIBE_PROMPT, e.season_later.name(), &block(1), &pair.later.image_ref),
                    ChatMessage::assistant(&a.description_2),
                ],
            ),
        },
        Task::Whatif => (
            vec![pair.earlier.image_ref.clone()],
            vec![
                first,
                ChatMessage::assistant(&a.description_1),
                ChatMessage::user(&a.whatif_question),
                ChatMessage::assistant(&a.whatif_answer),
            ],
        ),
        Task::Difference => (
            vec![pair.earlier.image_ref.clone(), pair.later.image_ref.clone()],
            vec![
                first,
                ChatMessage::assistant(&a.description_1),
                image_turn(SECOND_IMAGE_PROMPT, e.season_later.name(), &block(1), &pair.later.image_ref),
                ChatMessage::assistant(&a.description_2),
                ChatMessage::user(DIFFERENCE_PROMPT),
                ChatMessage::assistant(&a.difference_text),
            ],
        ),
    }
}

/// One sample per usable annotation. Annotations that are not ok, not
/// retained, or lack enriched data are skipped with a reason.
pub fn build_conversations(
    annotations: &[AnnotationRecord],
    enriched: &HashMap<String, EnrichedSample>,
    mix_seed: u64,
    opts: &BuildOptions,
) -> BuildOutput {
    let mut out = BuildOutput::default();
    for a in annotations {
        if !a.is_ok() {
            out.skipped.push((a.pair_id.clone(), format!("annotation status {:?}", a.status)));
            continue;
        }
        if opts.retained.as_ref().is_some_and(|r| !r.contains(&a.pair_id)) {
            out.skipped.push((a.pair_id.clone(), "not retained by curation".into()));
            continue;
        }
        let Some(e) = enriched.get(&a.pair_id) else {
            tracing::warn!(pair_id = %a.pair_id, "no enriched data; sample skipped");
            out.skipped.push((a.pair_id.clone(), "no enriched data".into()));
            continue;
        };
        let (task, seed_index) = draw_task(mix_seed, &a.pair_id);
        let (images, messages) = conversation(task, a, e, opts.describe_image);
        out.samples.push(ConversationSample {
            id: format!("{}#{}", a.pair_id, task),
            task,
            pair_id: a.pair_id.clone(),
            images,
            messages,
            meta: SampleMeta {
                annotator: a.annotator,
                country_code: e.pair.earlier.country_code.clone(),
                category: e.pair.earlier.category.clone(),
                seed_index,
            },
        });
    }
    out.samples.sort_by(|x, y| x.id.cmp(&y.id));
    out.skipped.sort();
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Test,
}

#[derive(Debug, Error)]
pub enum SplitError {
    #[error("pair {0} appears more than once in the split manifest")]
    Duplicate(String),
    #[error("pairs missing from the split manifest: {}", .0.join(", "))]
    Missing(Vec<String>),
    #[error("split manifest: {0}")]
    Csv(#[from] csv::Error),
    #[error("writing split files: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Deserialize)]
struct ManifestRow {
    pair_id: String,
    split: Split,
}

/// Reads a `pair_id,split` CSV.
pub fn read_manifest(reader: impl Read) -> Result<BTreeMap<String, Split>, SplitError> {
    let mut map = BTreeMap::new();
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    for row in rdr.deserialize::<ManifestRow>() {
        let row = row?;
        if map.insert(row.pair_id.clone(), row.split).is_some() {
            return Err(SplitError::Duplicate(row.pair_id));
        }
    }
    Ok(map)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct SplitCounts {
    pub train: usize,
    pub test: usize,
}

/// Writes `train.jsonl` and `test.jsonl` under `dir`, in id order.
pub fn split_export(
    samples: &[ConversationSample],
    manifest: &BTreeMap<String, Split>,
    dir: &Path,
) -> Result<SplitCounts, SplitError> {
    let missing: BTreeSet<String> = samples
        .iter()
        .filter(|s| !manifest.contains_key(&s.pair_id))
        .map(|s| s.pair_id.clone())
        .collect();
    if !missing.is_empty() {
        return Err(SplitError::Missing(missing.into_iter().collect()));
    }
    let mut sorted: Vec<&ConversationSample> = samples.iter().collect();
    sorted.sort_by(|a, b| a.id.cmp(&b.id));
    let (train, test): (Vec<_>, Vec<_>) = sorted
        .into_iter()
        .partition(|s| manifest[&s.pair_id] == Split::Train);
    std::fs::create_dir_all(dir)?;
    crate::jsonl::write(&dir.join("train.jsonl"), &train)?;
    crate::jsonl::write(&dir.join("test.jsonl"), &test)?;
    Ok(SplitCounts {
        train: train.len(),
        test: test.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::annotation::Sections;
    use crate::types::{ImageRecord, TemporalPair};
    use chrono::{TimeZone, Utc};

    #[test]
    fn block_rounding_and_order() {
        let w = WeatherReading {
            temperature: Some(31.25),
            ..Default::default()
        };
        assert_eq!(render_sensor_block(&w, None), "temperature: 31.2 °C");
        let w = WeatherReading {
            humidity: Some(40.0),
            uv_index: Some(-0.04),
            ..Default::default()
        };
        let e = EmissionReading {
            pm10: Some(12.0),
            ..Default::default()
        };
        assert_eq!(
            render_sensor_block(&w, Some(&e)),
            "humidity: 40.0 %\nuv_index: 0.0\npm10: 12.0 µg/m³"
        );
        assert_eq!(render_sensor_block(&WeatherReading::default(), None), UNAVAILABLE);
        assert_eq!(
            render_sensor_block(&WeatherReading::default(), Some(&EmissionReading::default())),
            UNAVAILABLE
        );
    }

    pub(crate) fn fixture(n: usize) -> (AnnotationRecord, EnrichedSample) {
        let mk = |id: String, y| {
            ImageRecord::new(
                id.clone(),
                format!("loc{n}"),
                48.0,
                2.0,
                "FRA",
                "stadium",
                Utc.with_ymd_and_hms(y, 4, 1, 0, 0, 0).unwrap(),
                format!("img/{id}.jpg"),
            )
            .unwrap()
        };
        let pair = TemporalPair::new(mk(format!("e{n}"), 2015), mk(format!("l{n}"), 2017)).unwrap();
        let w1 = WeatherReading {
            temperature: Some(11.0),
            ..Default::default()
        };
        let w2 = WeatherReading {
            temperature: Some(14.0),
            ..Default::default()
        };
        let enriched = EnrichedSample::new(pair.clone(), w1, w2, None, None);
        let sections = Sections {
            description_1: format!("first {n}"),
            description_2: format!("second {n}"),
            difference_text: format!("diff {n}"),
            whatif_question: "What if the stadium closed?".into(),
            whatif_answer: format!("answer {n}"),
        };
        let ann = AnnotationRecord::ok(&pair.pair_id, Annotator::A, sections, String::new(), 1);
        (ann, enriched)
    }

    fn build(n: usize, seed: u64) -> BuildOutput {
        let (anns, idx): (Vec<_>, HashMap<_, _>) = (0..n)
            .map(fixture)
            .map(|(a, e)| (a.clone(), (a.pair_id.clone(), e)))
            .unzip();
        build_conversations(&anns, &idx, seed, &BuildOptions::default())
    }

    #[test]
    fn every_sample_is_well_formed() {
        let out = build(60, 3);
        assert_eq!(out.samples.len(), 60);
        for s in &out.samples {
            check_structure(s).unwrap();
            let n: usize = s.pair_id[1..s.pair_id.find('~').unwrap()].parse().unwrap();
            let second = format!("img/l{n}.jpg");
            assert!(!whatif_leaks(s, &second, Some("temperature: 14.0 °C"), Some("temperature: 11.0 °C")));
            match s.task {
                Task::Describe => assert_eq!(s.scored_text(), Some(format!("first {n}").as_str())),
                Task::Whatif => {
                    assert_eq!(s.messages[2].content, "What if the stadium closed?");
                    assert_eq!(s.scored_text(), Some(format!("answer {n}").as_str()));
                }
                Task::Difference => {
                    assert!(s.messages[2].content.contains("temperature: 14.0 °C"));
                    assert_eq!(s.scored_text(), Some(format!("diff {n}").as_str()));
                }
            }
        }
        let kinds: BTreeSet<Task> = out.samples.iter().map(|s| s.task).collect();
        assert_eq!(kinds.len(), 3);
    }

    #[test]
    fn describe_can_use_later_image() {
        let (a, e) = fixture(0);
        let idx = HashMap::from([(a.pair_id.clone(), e)]);
        let seed = (0..).find(|&s| draw_task(s, &a.pair_id).0 == Task::Describe).unwrap();
        let opts = BuildOptions {
            describe_image: DescribeImage::Later,
            ..Default::default()
        };
        let out = build_conversations(&[a], &idx, seed, &opts);
        assert_eq!(out.samples[0].images, vec!["img/l0.jpg"]);
        assert_eq!(out.samples[0].scored_text(), Some("second 0"));
        check_structure(&out.samples[0]).unwrap();
    }

    #[test]
    fn skips_carry_reasons() {
        let (a, _) = fixture(0);
        let mut bad = fixture(1).0;
        bad.status = crate::annotation::Status::ParseFailed;
        let out = build_conversations(&[a, bad], &HashMap::new(), 1, &BuildOptions::default());
        assert!(out.samples.is_empty());
        assert_eq!(out.skipped.len(), 2);
        assert!(out.skipped.iter().any(|(_, r)| r == "no enriched data"));
    }

    #[test]
    fn structure_checker_catches_leaks() {
        let out = build(30, 5);
        let mut s = out.samples.iter().find(|s| s.task == Task::Whatif).unwrap().clone();
        s.messages[2].images = Some(vec!["img/l0.jpg".into()]);
        assert!(check_structure(&s).is_err());
        assert!(whatif_leaks(&s, "img/l0.jpg", None, None));
    }

    #[test]
    fn draw_is_stable_per_pair() {
        assert_eq!(draw_task(7, "x~y"), draw_task(7, "x~y"));
        let spread: BTreeSet<Task> = (0..50).map(|s| draw_task(s, "x~y").0).collect();
        assert_eq!(spread.len(), 3);
    }

    #[test]
    fn manifest_validation() {
        let m = read_manifest("pair_id,split\na,train\nb,test\n".as_bytes()).unwrap();
        assert_eq!(m["b"], Split::Test);
        match read_manifest("pair_id,split\na,train\na,test\n".as_bytes()) {
            Err(SplitError::Duplicate(id)) => assert_eq!(id, "a"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn split_counts() {
        let out = build(10, 1);
        let dir = tempfile::tempdir().unwrap();
        let manifest: BTreeMap<String, Split> = out
            .samples
            .iter()
            .enumerate()
            .map(|(i, s)| (s.pair_id.clone(), if i < 7 { Split::Train } else { Split::Test }))
            .collect();
        let c = split_export(&out.samples, &manifest, dir.path()).unwrap();
        assert_eq!(c, SplitCounts { train: 7, test: 3 });
        let lines = |f: &str| std::fs::read_to_string(dir.path().join(f)).unwrap().lines().count();
        assert_eq!((lines("train.jsonl"), lines("test.jsonl")), (7, 3));

        let all_train: BTreeMap<_, _> = manifest.keys().map(|k| (k.clone(), Split::Train)).collect();
        let c = split_export(&out.samples, &all_train, dir.path()).unwrap();
        assert_eq!(c.test, 0);
        assert_eq!(std::fs::read_to_string(dir.path().join("test.jsonl")).unwrap(), "");

        let mut partial = manifest.clone();
        let gone = out.samples[4].pair_id.clone();
        partial.remove(&gone);
        match split_export(&out.samples, &partial, dir.path()) {
            Err(SplitError::Missing(ids)) => assert_eq!(ids, vec![gone]),
            other => panic!("{other:?}"),
        }
    }
}
