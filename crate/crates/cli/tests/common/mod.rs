#![allow(dead_code)]

use std::collections::BTreeSet;
use std::io::{BufRead, BufReader, Read, Write};
use std::net::{TcpListener, TcpStream};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::time::Duration;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

pub fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

pub fn golden(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name)
}

pub fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_letz-forge")
}

/// Runs the binary, returning (exit code, stdout, stderr).
pub fn forge(args: &[&str]) -> (i32, String, String) {
    let out = std::process::Command::new(bin())
        .args(args)
        .arg("--log-level")
        .arg("warn")
        .output()
        .expect("binary runs");
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

pub type AnswerFn = Arc<dyn Fn(&str, &[String]) -> Vec<f64> + Send + Sync>;

/// How the stub entailment server answers.
#[derive(Clone)]
pub enum StubMode {
    /// Probabilities computed from (premise, hypotheses).
    Answer(AnswerFn),
    /// Raw body with status 200.
    Raw(String),
    /// Sleep before answering with one probability per hypothesis.
    Slow(Duration),
    Status(u16),
}

pub struct StubServer {
    pub url: String,
    pub requests: Arc<AtomicUsize>,
}

impl StubServer {
    pub fn start(mode: StubMode) -> Self {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let url = format!("http://{}/score", listener.local_addr().unwrap());
        let requests = Arc::new(AtomicUsize::new(0));
        let counter = requests.clone();
        std::thread::spawn(move || {
            for stream in listener.incoming() {
                let Ok(stream) = stream else { continue };
                let mode = mode.clone();
                let counter = counter.clone();
                std::thread::spawn(move || handle(stream, &mode, &counter));
            }
        });
        Self { url, requests }
    }

    pub fn count(&self) -> usize {
        self.requests.load(Ordering::SeqCst)
    }
}

fn handle(stream: TcpStream, mode: &StubMode, counter: &AtomicUsize) {
    let mut reader = BufReader::new(stream.try_clone().unwrap());
    let mut len = 0usize;
    loop {
        let mut line = String::new();
        if reader.read_line(&mut line).unwrap_or(0) == 0 {
            return;
        }
        let line = line.trim_end();
        if line.is_empty() {
            break;
        }
        if let Some((k, v)) = line.split_once(':') {
            if k.eq_ignore_ascii_case("content-length") {
                len = v.trim().parse().unwrap_or(0);
            }
        }
    }
    let mut body = vec![0u8; len];
    if reader.read_exact(&mut body).is_err() {
        return;
    }
    counter.fetch_add(1, Ordering::SeqCst);
    let req: Value = serde_json::from_slice(&body).unwrap_or(Value::Null);
    let premise = req["premise"].as_str().unwrap_or_default().to_owned();
    let hyps: Vec<String> = req["hypotheses"]
        .as_array()
        .map(|a| a.iter().filter_map(|h| h.as_str().map(String::from)).collect())
        .unwrap_or_default();

    let (status, payload) = match mode {
        StubMode::Answer(f) => (
            200,
            serde_json::json!({ "probabilities": f(&premise, &hyps) }).to_string(),
        ),
        StubMode::Raw(s) => (200, s.clone()),
        StubMode::Slow(d) => {
            std::thread::sleep(*d);
            (
                200,
                serde_json::json!({ "probabilities": vec![0.5; hyps.len()] }).to_string(),
            )
        }
        StubMode::Status(code) => (*code, "{}".to_owned()),
    };
    let mut stream = stream;
    let _ = write!(
        stream,
        "HTTP/1.1 {status} X\r\ncontent-type: application/json\r\ncontent-length: {}\r\nconnection: close\r\n\r\n{payload}",
        payload.len()
    );
    let _ = stream.flush();
}

const SYLLABLES: [&str; 24] = [
    "ba", "bé", "dë", "fi", "ga", "hu", "ka", "lë", "mo", "na", "pé", "ri", "sa", "schu", "ta", "wë", "zi", "ch", "ou",
    "ei", "äi", "ll", "ng", "rt",
];
const FILLERS: [&str; 12] = [
    "de", "an", "mat", "engem", "ass", "eng", "vun", "fir", "op", "sinn", "och", "dat",
];

fn pseudo_word(rng: &mut ChaCha8Rng) -> String {
    let n = rng.gen_range(2..=4);
    let mut w: String = (0..n).map(|_| *SYLLABLES.choose(rng).unwrap()).collect();
    let first = w.remove(0).to_uppercase().collect::<String>();
    w.insert_str(0, &first);
    w
}

/// A deterministic noun-heavy lexicon in the canonical JSON-lines format.
/// Sentences contain their headword and sometimes another headword so that
/// negative sampling has to reject draws.
pub fn synthetic_lexicon(entries: usize, seed: u64) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut used = BTreeSet::new();
    let mut headwords = Vec::with_capacity(entries);
    while headwords.len() < entries {
        let w = pseudo_word(&mut rng);
        if used.insert(w.clone()) {
            headwords.push(w);
        }
    }
    let mut out = String::new();
    for (i, hw) in headwords.iter().enumerate() {
        let pos = if i % 10 == 9 { "VERB" } else { "NOUN" };
        let senses: Vec<Value> = (0..rng.gen_range(1..=2))
            .map(|_| {
                let mut synonyms: Vec<String> = (0..rng.gen_range(1..=3)).map(|_| pseudo_word(&mut rng)).collect();
                if rng.gen_bool(0.2) {
                    // near-copy of the headword, should be filtered
                    synonyms.push(format!("{hw}e"));
                }
                let examples: Vec<String> = (0..rng.gen_range(1..=2))
                    .map(|_| {
                        let mut words: Vec<String> = (0..rng.gen_range(3..9))
                            .map(|_| FILLERS.choose(&mut rng).unwrap().to_string())
                            .collect();
                        words.push(hw.clone());
                        if rng.gen_bool(0.5) {
                            words.push(headwords.choose(&mut rng).unwrap().clone());
                        }
                        words.shuffle(&mut rng);
                        let mut s = words.join(" ");
                        s.push('.');
                        let mut c = s.chars();
                        let first = c.next().unwrap().to_uppercase().collect::<String>();
                        first + c.as_str()
                    })
                    .collect();
                serde_json::json!({
                    "synonyms": synonyms,
                    "translations": {"de": [pseudo_word(&mut rng)], "fr": [pseudo_word(&mut rng).to_lowercase()]},
                    "examples": examples,
                })
            })
            .collect();
        out.push_str(&serde_json::json!({"headword": hw, "pos": pos, "senses": senses}).to_string());
        out.push('\n');
    }
    out
}

/// Removes the `generated_at` line from a sidecar so two runs can be compared.
pub fn strip_timestamp(sidecar: &str) -> String {
    sidecar
        .lines()
        .filter(|l| !l.trim_start().starts_with("\"generated_at\""))
        .collect::<Vec<_>>()
        .join("\n")
}
