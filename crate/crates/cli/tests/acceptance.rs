//! Acceptance checks. Each criterion prints one `PASS [name] ...` or
//! `FAIL [name] ...` line; the process exits non-zero if any line is a FAIL.
//! Runs without the libtest harness so the lines always reach stdout.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::path::Path;
use std::process::{Command, Output};
use std::sync::Arc;
use std::time::Instant;

use chrono::{DateTime, Duration, TimeZone, Utc};
use envpair_core::adapter::{adapter_forward, adapter_merge, AdapterConfig, Matrix};
use envpair_core::annotation::{AnnotationRecord, RecordStore, Sections};
use envpair_core::metrics::rouge::rouge_l_tokens;
use envpair_core::metrics::{kce, tokenize, KeywordLexicon};
use envpair_core::pairing::{build_pairs, dedup};
use envpair_core::sensors::{
    enrich_pairs, route_emissions_provider, EmissionsRoute, EnrichedSample, FileCache, ProviderConfig,
    RecordingTransport, RetryPolicy, Secret, SensorClient,
};
use envpair_core::taskgen::{build_conversations, check_structure, render_sensor_block, whatif_leaks, BuildOptions, Task};
use envpair_core::types::EmissionReading;
use envpair_core::{Annotator, ImageRecord, TemporalPair, WeatherReading};
use envpair_session::{PairCatalog, Service, ServiceConfig, SessionStore};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use serde_json::{json, Value};

const BIN: &str = env!("CARGO_BIN_EXE_envpair");

// pinned tolerances
const CURATION_MAX_SECONDS: f64 = 1.0;
const MIX_TOLERANCE: f64 = 0.02;
const ADAPTER_REL_TOL: f64 = 1e-9;
const ROUGE_ABS_TOL: f64 = 0.0;
const KCE_ABS_TOL: f64 = 0.0;

type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn envpair(args: &[&str]) -> Output {
    Command::new(BIN).args(args).env_remove("ENVPAIR_TEST_WEATHER_KEY").output().unwrap()
}

fn summary(out: &Output) -> Result<Value, String> {
    let stdout = String::from_utf8_lossy(&out.stdout);
    if !out.status.success() {
        return Err(format!("exit {:?}: {}", out.status.code(), String::from_utf8_lossy(&out.stderr)));
    }
    serde_json::from_str(stdout.lines().last().unwrap_or("")).map_err(|e| e.to_string())
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

// ---------------------------------------------------------------- curation

const HISTOGRAM: [(u32, usize); 13] = [
    (3, 86),
    (4, 166),
    (5, 245),
    (6, 290),
    (7, 224),
    (8, 227),
    (9, 655),
    (10, 1004),
    (11, 1327),
    (12, 1659),
    (13, 1991),
    (14, 1825),
    (15, 1562),
];

fn curation() -> Check {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("scores.csv");
    let mut text = String::from("sample_id,annotator_id,q1,q2,q3\n");
    let combos: Vec<[u32; 3]> = (1..=5)
        .flat_map(|a| (1..=5).flat_map(move |b| (1..=5).map(move |c| [a, b, c])))
        .collect();
    for (total, count) in HISTOGRAM {
        let fits: Vec<_> = combos.iter().filter(|q| q.iter().sum::<u32>() == total).collect();
        for i in 0..count {
            let q = fits[i % fits.len()];
            text.push_str(&format!("t{total:02}-{i:05},rater{},{},{},{}\n", i % 3, q[0], q[1], q[2]));
        }
    }
    std::fs::write(&csv, text).unwrap();
    let started = Instant::now();
    let out = envpair(&["curate", "--scores", s(&csv), "--out", s(dir.path()), "--log-level", "warn"]);
    let secs = started.elapsed().as_secs_f64();
    let v = summary(&out)?;
    let got = (v["retained"].as_u64(), v["discarded"].as_u64(), v["total"].as_u64());
    ensure(got == (Some(10023), Some(1238), Some(11261)), || format!("retained/discarded/total {got:?}"))?;
    for (t, n) in HISTOGRAM {
        ensure(v["histogram"][t.to_string()].as_u64() == Some(n as u64), || format!("bucket {t}"))?;
    }
    ensure(secs < CURATION_MAX_SECONDS, || format!("took {secs:.3}s"))?;
    Ok(format!("retained 10023 discarded 1238 total 11261 in {secs:.3}s (limit {CURATION_MAX_SECONDS}s)"))
}

// ---------------------------------------------------------------- pairing

fn record(id: String, loc: &str, ts: DateTime<Utc>) -> ImageRecord {
    ImageRecord::new(id.clone(), loc, 10.0, 20.0, "KEN", "farm", ts, format!("{id}.jpg")).unwrap()
}

fn pairing() -> Check {
    let mut rng = StdRng::seed_from_u64(2002);
    let lo = Utc.with_ymd_and_hms(2002, 1, 1, 0, 0, 0).unwrap().timestamp();
    let hi = Utc.with_ymd_and_hms(2017, 12, 31, 23, 59, 59).unwrap().timestamp();
    let mut records = Vec::new();
    for l in 0..1000 {
        let loc = format!("loc{l:04}");
        for i in 0..rng.gen_range(1..=6) {
            records.push(record(format!("{loc}-{i}"), &loc, Utc.timestamp_opt(rng.gen_range(lo..=hi), 0).unwrap()));
        }
    }
    let t0 = Utc.with_ymd_and_hms(2010, 3, 1, 12, 0, 0).unwrap();
    for days in [364, 365, 366] {
        let loc = format!("edge{days}");
        records.push(record(format!("{loc}-a"), &loc, t0));
        records.push(record(format!("{loc}-b"), &loc, t0 + Duration::days(days)));
    }

    let mut seen = HashSet::new();
    let kept: Vec<&ImageRecord> = records
        .iter()
        .filter(|r| seen.insert((r.location_key.clone(), r.timestamp.date_naive())))
        .collect();
    let mut oracle = BTreeSet::new();
    for a in &kept {
        for b in &kept {
            if a.location_key == b.location_key && a.timestamp < b.timestamp {
                let days = (b.timestamp.timestamp() - a.timestamp.timestamp()).div_euclid(86_400);
                if days >= 365 {
                    oracle.insert((a.id.clone(), b.id.clone(), days));
                }
            }
        }
    }

    let pairs = build_pairs(&dedup(&records), 365);
    let got: BTreeSet<_> = pairs.iter().map(|p| (p.earlier.id.clone(), p.later.id.clone(), p.gap_days)).collect();
    ensure(got.len() == pairs.len(), || "duplicate pairs".into())?;
    ensure(got == oracle, || format!("{} pairs vs oracle {}", got.len(), oracle.len()))?;
    let ids: HashSet<_> = pairs.iter().map(|p| p.pair_id.as_str()).collect();
    ensure(
        !ids.contains("edge364-a~edge364-b") && ids.contains("edge365-a~edge365-b") && ids.contains("edge366-a~edge366-b"),
        || "364/365/366 boundary".into(),
    )?;
    Ok(format!("{} pairs over 1000 sites match enumeration; 364 excluded, 365 and 366 kept", pairs.len()))
}

// ---------------------------------------------------------------- rouge

fn lcs_table(a: &[u8], b: &[u8]) -> usize {
    let mut t = vec![vec![0usize; b.len() + 1]; a.len() + 1];
    for i in (0..a.len()).rev() {
        for j in (0..b.len()).rev() {
            t[i][j] = if a[i] == b[j] { 1 + t[i + 1][j + 1] } else { t[i + 1][j].max(t[i][j + 1]) };
        }
    }
    t[0][0]
}

fn oracle_f1(a: &[u8], b: &[u8]) -> f64 {
    match (a.len(), b.len()) {
        (0, 0) => 1.0,
        (0, _) | (_, 0) => 0.0,
        (x, y) => 2.0 * lcs_table(a, b) as f64 / (x + y) as f64,
    }
}

fn words(xs: &[u8]) -> Vec<String> {
    xs.iter().map(|&x| ((b'a' + x) as char).to_string()).collect()
}

fn rouge() -> Check {
    let mut by_len: Vec<Vec<Vec<u8>>> = vec![vec![vec![]]];
    for n in 1..=10 {
        let next = by_len[n - 1]
            .iter()
            .flat_map(|l| (0..3u8).map(move |c| l.iter().copied().chain([c]).collect::<Vec<u8>>()))
            .collect();
        by_len.push(next);
    }
    let mut checked = 0usize;
    for la in 0..=10 {
        for lb in 0..=10 - la {
            for a in &by_len[la] {
                let wa = words(a);
                for b in &by_len[lb] {
                    let got = rouge_l_tokens(&wa, &words(b)).f1;
                    ensure((got - oracle_f1(a, b)).abs() <= ROUGE_ABS_TOL, || format!("{a:?} vs {b:?}: {got}"))?;
                    checked += 1;
                }
            }
        }
    }
    let mut rng = StdRng::seed_from_u64(1234);
    for _ in 0..1000 {
        let alphabet = rng.gen_range(2..=8u8);
        let la = rng.gen_range(0..=50);
        let lb = rng.gen_range(0..=50);
        let a: Vec<u8> = (0..la).map(|_| rng.gen_range(0..alphabet)).collect();
        let b: Vec<u8> = (0..lb).map(|_| rng.gen_range(0..alphabet)).collect();
        let got = envpair_core::metrics::rouge_l(&words(&a).join(" "), &words(&b).join(" ")).f1;
        ensure((got - oracle_f1(&a, &b)).abs() <= ROUGE_ABS_TOL, || format!("random {a:?} vs {b:?}"))?;
    }
    Ok(format!("{checked} exhaustive pairs (len sum <= 10, 3 symbols) and 1000 random lists <= 50, tol {ROUGE_ABS_TOL}"))
}

// ---------------------------------------------------------------- kce

fn kce_check() -> Check {
    let lex = KeywordLexicon::default();
    let present = |text: &str| -> BTreeSet<String> {
        let toks = tokenize(text);
        let mut out = BTreeSet::new();
        for (name, variants) in &lex.clusters {
            if variants.iter().any(|v| toks.iter().any(|t| t == v)) {
                out.insert(name.clone());
            }
        }
        out
    };
    let brute = |r: &str, h: &str| -> (f64, f64, f64) {
        let (r, h) = (present(r), present(h));
        if r.is_empty() && h.is_empty() {
            return (1.0, 1.0, 1.0);
        }
        if r.is_empty() || h.is_empty() {
            return (0.0, 0.0, 0.0);
        }
        let both = r.intersection(&h).count() as f64;
        (both / h.len() as f64, both / r.len() as f64, 2.0 * both / (h.len() + r.len()) as f64)
    };
    let mut vocab: Vec<String> = lex.clusters.values().flatten().cloned().collect();
    vocab.extend(["the", "field", "road", "pm10", "near", "river"].iter().map(|s| s.to_string()));
    let mut rng = StdRng::seed_from_u64(77);
    let sentence = |rng: &mut StdRng| -> String {
        (0..rng.gen_range(0..=15))
            .map(|_| {
                let w = &vocab[rng.gen_range(0..vocab.len())];
                if rng.gen_bool(0.2) { w.to_uppercase() } else { w.clone() }
            })
            .collect::<Vec<_>>()
            .join(" ")
    };
    for _ in 0..1000 {
        let r = sentence(&mut rng);
        let h = sentence(&mut rng);
        let got = kce(&r, &h, &lex);
        let want = brute(&r, &h);
        let close = (got.precision - want.0).abs() <= KCE_ABS_TOL
            && (got.recall - want.1).abs() <= KCE_ABS_TOL
            && (got.f1 - want.2).abs() <= KCE_ABS_TOL;
        ensure(close, || format!("{r:?} / {h:?}: {got:?} vs {want:?}"))?;
    }
    let worked = kce("temperatures increased and pm10 decreased", "temperature rose", &lex).f1;
    ensure((worked - 2.0 / 3.0).abs() <= KCE_ABS_TOL, || format!("worked example f1 {worked}"))?;
    Ok(format!("1000 sentence pairs match a cluster scan; worked example f1 = {worked:.6}, tol {KCE_ABS_TOL}"))
}

// ---------------------------------------------------------------- adapter

fn random(rng: &mut StdRng, rows: usize, cols: usize) -> Vec<Vec<f64>> {
    (0..rows).map(|_| (0..cols).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect()
}

fn rel_close(a: &[f64], b: &[f64]) -> bool {
    let scale = b.iter().map(|v| v.abs()).fold(1.0, f64::max);
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= ADAPTER_REL_TOL * scale)
}

fn adapter() -> Check {
    let mut rng = StdRng::seed_from_u64(16);
    let mut tried = 0;
    while tried < 100 {
        let (d, k) = (rng.gen_range(1..=16), rng.gen_range(1..=16));
        let r = [1, 2, 4][rng.gen_range(0..3)];
        if r > d.min(k) {
            continue;
        }
        tried += 1;
        let alpha = rng.gen_range(0.5..32.0);
        let (w0, a, b) = (random(&mut rng, d, k), random(&mut rng, r, k), random(&mut rng, d, r));
        // oracle: W0 + (alpha / r) B A by triple loop
        let mut oracle = w0.clone();
        for i in 0..d {
            for j in 0..k {
                let ba: f64 = (0..r).map(|m| b[i][m] * a[m][j]).sum();
                oracle[i][j] += alpha / r as f64 * ba;
            }
        }
        let cfg = AdapterConfig::new(
            Matrix::from_rows(&w0).unwrap(),
            Matrix::from_rows(&a).unwrap(),
            Matrix::from_rows(&b).unwrap(),
            alpha,
        )
        .map_err(|e| e.to_string())?;
        let merged = adapter_merge(&cfg).map_err(|e| e.to_string())?;
        let x: Vec<f64> = (0..k).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let fwd = adapter_forward(&cfg, &x).map_err(|e| e.to_string())?;
        let want: Vec<f64> = oracle.iter().map(|row| row.iter().zip(&x).map(|(w, v)| w * v).sum()).collect();
        ensure((0..d).all(|i| rel_close(merged.row(i), &oracle[i])), || format!("merge {d}x{k} r{r}"))?;
        ensure(rel_close(&fwd, &want) && rel_close(&fwd, &merged.apply(&x).unwrap()), || format!("forward {d}x{k} r{r}"))?;
    }

    let w0 = random(&mut rng, 6, 5);
    let base = Matrix::from_rows(&w0).unwrap();
    let zero = AdapterConfig::new(base.clone(), Matrix::from_rows(&random(&mut rng, 2, 5)).unwrap(), Matrix::zeros(6, 2), 8.0)
        .map_err(|e| e.to_string())?;
    let x: Vec<f64> = (0..5).map(|_| rng.gen_range(-1.0..1.0)).collect();
    ensure(adapter_forward(&zero, &x).unwrap() == base.apply(&x).unwrap(), || "B=0 forward not exact".into())?;
    ensure(adapter_merge(&zero).unwrap() == base, || "B=0 merge not exact".into())?;

    let m = |v: f64| Matrix::from_rows(&[vec![v]]).unwrap();
    let scalar = AdapterConfig::new(m(2.0), m(3.0), m(4.0), 2.0).map_err(|e| e.to_string())?;
    let y = adapter_forward(&scalar, &[1.0]).unwrap();
    ensure(y == vec![26.0], || format!("scalar case gave {y:?}"))?;
    Ok(format!("100 random configs within rel {ADAPTER_REL_TOL}; B=0 exact; scalar case 26"))
}

// ---------------------------------------------------------------- build

fn sample(i: usize) -> (AnnotationRecord, EnrichedSample) {
    let site = format!("site{i:05}");
    let mk = |tag: &str, y: i32, m: u32| {
        let id = format!("{site}-{tag}");
        let ts = Utc.with_ymd_and_hms(y, m, 2, 0, 0, 0).unwrap();
        ImageRecord::new(id.clone(), site.as_str(), -12.5 + (i % 50) as f64, 30.0, "TZA", "crop_field", ts, format!("s3://b/{id}.png"))
            .unwrap()
    };
    let pair = TemporalPair::new(mk("early", 2009, 1 + (i % 12) as u32), mk("late", 2012, 6)).unwrap();
    let w = |t: f64| WeatherReading { temperature: Some(t), humidity: Some(50.0), ..Default::default() };
    let e2 = EmissionReading { pm2_5: Some(7.25 + i as f64), ..Default::default() };
    let enriched = EnrichedSample::new(pair.clone(), w(20.0 + (i % 7) as f64), w(30.0 + (i % 7) as f64), None, Some(e2));
    let sections = Sections {
        description_1: format!("Fields at {site} in early growth."),
        description_2: format!("Fields at {site} fully harvested."),
        difference_text: "Cultivated area increased.".into(),
        whatif_question: "What if irrigation stopped?".into(),
        whatif_answer: "Yields would drop.".into(),
    };
    let who = if i % 2 == 0 { Annotator::A } else { Annotator::B };
    (AnnotationRecord::ok(&pair.pair_id, who, sections, String::new(), 1), enriched)
}

fn build_binary() -> Check {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let store = RecordStore::open(d.join("store")).unwrap();
    let mut enriched = Vec::new();
    for i in 0..200 {
        let (a, e) = sample(i);
        store.put(&a).unwrap();
        enriched.push(e);
    }
    let enriched_path = d.join("enriched.jsonl");
    envpair_core::jsonl::write(&enriched_path, &enriched).unwrap();
    let run = |out: &str| {
        summary(&envpair(&[
            "build",
            "--annotations",
            s(store.dir()),
            "--enriched",
            s(&enriched_path),
            "--seed",
            "17",
            "--out",
            s(&d.join(out)),
            "--log-level",
            "warn",
        ]))
    };
    let (a, b) = (run("one")?, run("two")?);
    ensure(a["samples"] == 200, || format!("samples {}", a["samples"]))?;
    ensure(a["sha256"] == b["sha256"] && a["sha256"].is_string(), || format!("{} vs {}", a["sha256"], b["sha256"]))?;
    let bytes = |o: &str| std::fs::read(d.join(o).join("conversations.jsonl")).unwrap();
    ensure(bytes("one") == bytes("two"), || "conversation bytes differ".into())?;
    Ok(format!("two `build --seed 17` runs share sha256 {}", a["sha256"].as_str().unwrap_or("")))
}

fn build_mix() -> Check {
    let n = 30_000;
    let (anns, index): (Vec<_>, HashMap<_, _>) = (0..n)
        .map(sample)
        .map(|(a, e)| (a, (e.pair.pair_id.clone(), e)))
        .unzip();
    let out = build_conversations(&anns, &index, 42, &BuildOptions::default());
    ensure(out.samples.len() == n, || format!("{} samples", out.samples.len()))?;
    let mut counts: BTreeMap<Task, usize> = BTreeMap::new();
    let mut leaks = 0;
    for sm in &out.samples {
        *counts.entry(sm.task).or_default() += 1;
        check_structure(sm).map_err(|e| format!("{}: {e:?}", sm.id))?;
        if sm.task == Task::Whatif {
            let e = &index[&sm.pair_id];
            let (w1, e1) = e.readings(0);
            let (w2, e2) = e.readings(1);
            let (b1, b2) = (render_sensor_block(w1, e1), render_sensor_block(w2, e2));
            if whatif_leaks(sm, &e.pair.later.image_ref, Some(&b2), Some(&b1)) {
                leaks += 1;
            }
        }
    }
    let fracs: Vec<String> = Task::ALL
        .iter()
        .map(|t| format!("{}={:.4}", t.name(), counts.get(t).copied().unwrap_or(0) as f64 / n as f64))
        .collect();
    for t in Task::ALL {
        let f = counts.get(&t).copied().unwrap_or(0) as f64 / n as f64;
        ensure((f - 1.0 / 3.0).abs() <= MIX_TOLERANCE, || format!("{} fraction {f}", t.name()))?;
    }
    ensure(leaks == 0, || format!("{leaks} whatif samples leak the later image"))?;
    Ok(format!("30000 samples {} within +/-{MIX_TOLERANCE}; 0 whatif leaks", fracs.join(" ")))
}

// ---------------------------------------------------------------- session

async fn session_protocol() -> Check {
    let anns_and_samples: Vec<_> = (0..3).map(sample).collect();
    let samples: Vec<EnrichedSample> = anns_and_samples.iter().map(|(_, e)| e.clone()).collect();
    let anns = anns_and_samples.into_iter().map(|(a, _)| a).collect();
    let svc = Arc::new(Service::new(SessionStore::in_memory(), PairCatalog::new(samples.clone(), anns), ServiceConfig::default()));
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let base = format!("http://{}", listener.local_addr().unwrap());
    tokio::spawn(envpair_session::serve(listener, svc.clone()));
    let http = reqwest::Client::new();
    let post = |path: String, body: Value| {
        let http = http.clone();
        async move {
            let r = http.post(path).json(&body).send().await.map_err(|e| e.to_string())?;
            let status = r.status().as_u16();
            let v: Value = r.json().await.map_err(|e| e.to_string())?;
            if status >= 300 {
                return Err(format!("HTTP {status}: {v}"));
            }
            Ok::<Value, String>(v)
        }
    };

    let e = &samples[0];
    let pair_id = &e.pair.pair_id;
    let mut turns = Vec::new();
    for (task, n) in [("describe", 1), ("whatif", 2), ("difference", 3)] {
        let before = svc.stub().request_count();
        let created = post(format!("{base}/sessions"), json!({"task": task, "pair_id": pair_id})).await?;
        let id = created["session_id"].as_str().ok_or("no session id")?;
        let t = post(format!("{base}/sessions/{id}/script"), json!({})).await?;
        let got = t["messages"].as_array().map(|m| m.iter().filter(|m| m["role"] == "assistant").count());
        ensure(got == Some(n), || format!("{task}: {got:?} assistant turns"))?;
        turns.push(format!("{task}={n}"));

        let traffic = svc.stub().requests()[before..].join("\n");
        let b1 = render_sensor_block(&e.weather_earlier, e.emissions_earlier.as_ref());
        let b2 = render_sensor_block(&e.weather_later, e.emissions_later.as_ref());
        ensure(traffic.contains(&serde_json::to_string(&b1).unwrap().trim_matches('"').to_string()), || {
            format!("{task}: earlier readings not verbatim")
        })?;
        if task == "whatif" {
            ensure(!traffic.contains(&e.pair.later.image_ref), || "whatif traffic carries the later image".into())?;
            ensure(!traffic.contains(&serde_json::to_string(&b2).unwrap().trim_matches('"').to_string()), || {
                "whatif traffic carries the later readings".into()
            })?;
        }
    }
    Ok(format!("stub scripts give {}; whatif traffic has no later image; readings verbatim", turns.join(" ")))
}

// ---------------------------------------------------------------- sensors

async fn sensor_ingest() -> Check {
    const WEATHER: &str = "http://weather.test/day";
    const EU: &str = "http://eu.test/air";
    const ROW: &str = "http://row.test/latest";
    ensure(route_emissions_provider("FRA") == EmissionsRoute::Eu, || "FRA not routed to EU".into())?;
    ensure(route_emissions_provider("USA") == EmissionsRoute::Row, || "USA not routed to ROW".into())?;
    let cfg = ProviderConfig {
        weather_endpoint: WEATHER.into(),
        emissions_endpoint_eu: EU.into(),
        emissions_endpoint_row: ROW.into(),
        weather_key: Secret::new("wk"),
        rate_limit: 1000.0,
        retry: RetryPolicy { max_attempts: 2, backoff_base_ms: 1, jitter: false },
        ..Default::default()
    };
    let img = |id: &str, site: &str, lat: f64, lon: f64, cc: &str, y: i32, m: u32, d: u32| {
        let ts = Utc.with_ymd_and_hms(y, m, d, 10, 30, 0).unwrap();
        ImageRecord::new(id, site, lat, lon, cc, "park", ts, format!("{id}.jpg")).unwrap()
    };
    let pairs = vec![
        TemporalPair::new(
            img("p1", "paris", 48.8566, 2.3522, "FRA", 2014, 6, 15),
            img("p2", "paris", 48.8566, 2.3522, "FRA", 2016, 6, 20),
        )
        .unwrap(),
        TemporalPair::new(
            img("n1", "nyc", 40.7128, -74.006, "USA", 2014, 6, 15),
            img("n2", "nyc", 40.7128, -74.006, "USA", 2016, 6, 20),
        )
        .unwrap(),
    ];
    let fixtures = Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures/sensors");
    let transport = Arc::new(RecordingTransport::new());
    transport.load_fixture_dir(&fixtures).map_err(|e| e.to_string())?;
    let cache = tempfile::tempdir().unwrap();
    let cold = SensorClient::new(cfg.clone(), transport.clone(), FileCache::new(cache.path()));
    let out = enrich_pairs(&cold, &pairs).await;
    ensure(out.failures.is_empty() && out.samples.len() == 2, || format!("failures {:?}", out.failures))?;
    ensure(transport.requests_to(EU).len() == 2 && transport.requests_to(ROW).len() == 2, || "routing counts".into())?;
    let nyc = &out.samples[1];
    ensure(nyc.emissions_earlier.is_none() && nyc.emissions_later.is_none(), || "expected absent emissions".into())?;

    let empty = Arc::new(RecordingTransport::new());
    let warm = SensorClient::new(cfg, empty.clone(), FileCache::new(cache.path()));
    let again = enrich_pairs(&warm, &pairs).await;
    ensure(again.samples.len() == 2, || "warm run lost samples".into())?;
    ensure(empty.request_count() == 0 && warm.network_calls() == 0, || format!("warm run made {} calls", empty.request_count()))?;
    Ok(format!(
        "FRA to EU, USA to ROW; warm cache: 0 calls, {} hits; sample without emissions retained",
        warm.cache_hits()
    ))
}

// ---------------------------------------------------------------- runner

fn main() {
    let rt = tokio::runtime::Builder::new_multi_thread().enable_all().build().unwrap();
    let failed = rt.block_on(acceptance());
    if !failed.is_empty() {
        eprintln!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}

async fn acceptance() -> Vec<&'static str> {
    let mut results: Vec<(&str, Check)> = vec![
        ("curation-table", tokio::task::spawn_blocking(curation).await.unwrap()),
        ("pairing-oracle", pairing()),
        ("rouge-l-oracle", rouge()),
        ("kce-oracle", kce_check()),
        ("adapter-identities", adapter()),
        ("build-deterministic", tokio::task::spawn_blocking(build_binary).await.unwrap()),
        ("build-mix-and-leaks", build_mix()),
        ("session-protocol", session_protocol().await),
        ("sensor-ingest", sensor_ingest().await),
    ];
    results.sort_by_key(|(name, _)| *name);
    let mut failed = Vec::new();
    for (name, r) in &results {
        match r {
            Ok(detail) => println!("PASS [{name}] {detail}"),
            Err(why) => {
                println!("FAIL [{name}] {why}");
                failed.push(*name);
            }
        }
    }
    println!(
        "SKIP [model-quality] fine-tuned 7B vision-language model scores (BERT-F1 0.902, COMET 0.763 and the \
         model comparisons) need GPU training and are not reproducible here"
    );
    failed
}
