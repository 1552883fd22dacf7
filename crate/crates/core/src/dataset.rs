//! Train/dev/test splitting, line-delimited serialization and descriptive
//! statistics for labeled samples.

use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::generate::{LabeledSample, Relevance};
use crate::similarity::tokenize;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("split ratios must be positive and sum to 1, got {0:?}")]
    BadRatios([f64; 3]),
    #[error("cannot split {samples} samples into {splits} splits")]
    TooFewSamples { samples: usize, splits: usize },
    #[error("{path}:{line}: {message}")]
    Schema { path: String, line: usize, message: String },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> DatasetError + '_ {
    move |source| DatasetError::Io {
        path: path.display().to_string(),
        source,
    }
}

pub const SPLIT_NAMES: [&str; 3] = ["train", "dev", "test"];

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetSplits {
    pub train: Vec<LabeledSample>,
    pub dev: Vec<LabeledSample>,
    pub test: Vec<LabeledSample>,
    pub ratios: [f64; 3],
    pub seed: u64,
    pub group_by_headword: bool,
    /// Serialized split configuration, copied into every sidecar.
    pub config_snapshot: String,
}

impl DatasetSplits {
    pub fn parts(&self) -> [(&'static str, &[LabeledSample]); 3] {
        [("train", &self.train), ("dev", &self.dev), ("test", &self.test)]
    }

    pub fn sizes(&self) -> [usize; 3] {
        [self.train.len(), self.dev.len(), self.test.len()]
    }
}

/// Hamilton (largest-remainder) apportionment of `n` items over `ratios`.
/// `bias[i]` breaks ties between equal remainders: lower bias wins, then
/// lower index.
fn largest_remainder(n: usize, ratios: &[f64; 3], bias: &[f64; 3]) -> [usize; 3] {
    let quotas: Vec<f64> = ratios.iter().map(|r| r * n as f64).collect();
    let mut sizes = [0usize; 3];
    for (s, q) in sizes.iter_mut().zip(&quotas) {
        *s = q.floor() as usize;
    }
    let assigned: usize = sizes.iter().sum();
    let mut order: Vec<usize> = (0..3).collect();
    order.sort_by(|&a, &b| {
        let ra = quotas[a] - quotas[a].floor();
        let rb = quotas[b] - quotas[b].floor();
        if (ra - rb).abs() > 1e-9 {
            rb.partial_cmp(&ra).unwrap()
        } else {
            bias[a].partial_cmp(&bias[b]).unwrap().then(a.cmp(&b))
        }
    });
    for &i in order.iter().take(n.saturating_sub(assigned)) {
        sizes[i] += 1;
    }
    sizes
}

/// Per-class target sizes. Each class is apportioned on its own; ties in the
/// remainders go to the split that is currently furthest below its overall
/// quota, which keeps small splits from all landing in the same slot.
fn stratified_targets(class_sizes: &[usize], ratios: &[f64; 3]) -> Vec<[usize; 3]> {
    let mut totals = [0usize; 3];
    let mut seen = 0usize;
    let mut out = Vec::with_capacity(class_sizes.len());
    for &n in class_sizes {
        let bias: [f64; 3] = std::array::from_fn(|i| totals[i] as f64 - ratios[i] * seen as f64);
        let sizes = largest_remainder(n, ratios, &bias);
        for i in 0..3 {
            totals[i] += sizes[i];
        }
        seen += n;
        out.push(sizes);
    }
    out
}

fn check_ratios(ratios: &[f64; 3]) -> Result<(), DatasetError> {
    let sum: f64 = ratios.iter().sum();
    if ratios.iter().any(|r| !(r.is_finite() && *r > 0.0)) || (sum - 1.0).abs() > 1e-9 {
        return Err(DatasetError::BadRatios(*ratios));
    }
    Ok(())
}

#[derive(Serialize)]
struct SplitSnapshot<'a> {
    ratios: &'a [f64; 3],
    seed: u64,
    group_by_headword: bool,
    stratify_by: &'static str,
}

/// Class-stratified split. With `group_by_headword`, whole headword groups
/// are assigned to one split each, so sizes follow the ratios only
/// approximately.
pub fn split_dataset(
    samples: &[LabeledSample],
    ratios: [f64; 3],
    seed: u64,
    group_by_headword: bool,
) -> Result<DatasetSplits, DatasetError> {
    check_ratios(&ratios)?;
    if samples.len() < 3 {
        return Err(DatasetError::TooFewSamples {
            samples: samples.len(),
            splits: 3,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut assignment = vec![0usize; samples.len()];

    if group_by_headword {
        assign_groups(samples, &ratios, &mut rng, &mut assignment);
    } else {
        let classes = [Relevance::Irrelevant, Relevance::Relevant];
        let members: Vec<Vec<usize>> = classes
            .iter()
            .map(|c| (0..samples.len()).filter(|&i| samples[i].class == *c).collect())
            .collect();
        let sizes: Vec<usize> = members.iter().map(Vec::len).collect();
        let targets = stratified_targets(&sizes, &ratios);
        for (mut idx, target) in members.into_iter().zip(targets) {
            idx.shuffle(&mut rng);
            let mut it = idx.into_iter();
            for (split, &count) in target.iter().enumerate() {
                for i in it.by_ref().take(count) {
                    assignment[i] = split;
                }
            }
        }
    }

    let mut parts: [Vec<LabeledSample>; 3] = Default::default();
    for (sample, &split) in samples.iter().zip(&assignment) {
        parts[split].push(sample.clone());
    }
    let snapshot = serde_json::to_string(&SplitSnapshot {
        ratios: &ratios,
        seed,
        group_by_headword,
        stratify_by: "class",
    })
    .expect("snapshot serializes");
    let [train, dev, test] = parts;
    Ok(DatasetSplits {
        train,
        dev,
        test,
        ratios,
        seed,
        group_by_headword,
        config_snapshot: snapshot,
    })
}

fn assign_groups(samples: &[LabeledSample], ratios: &[f64; 3], rng: &mut ChaCha8Rng, assignment: &mut [usize]) {
    let mut groups: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, s) in samples.iter().enumerate() {
        groups.entry(s.provenance.headword.as_str()).or_default().push(i);
    }
    let mut groups: Vec<Vec<usize>> = groups.into_values().collect();
    groups.shuffle(rng);
    // largest groups first so the greedy fill stays close to the targets
    groups.sort_by_key(|g| std::cmp::Reverse(g.len()));
    let targets = largest_remainder(samples.len(), ratios, &[0.0; 3]);
    let mut filled = [0usize; 3];
    for group in groups {
        let split = (0..3)
            .max_by(|&a, &b| {
                let da = targets[a] as f64 - filled[a] as f64;
                let db = targets[b] as f64 - filled[b] as f64;
                da.partial_cmp(&db).unwrap().then(b.cmp(&a))
            })
            .unwrap();
        filled[split] += group.len();
        for i in group {
            assignment[i] = split;
        }
    }
}

/// Sidecar written next to every dataset file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct DatasetMetadata {
    pub samples: usize,
    pub class_counts: BTreeMap<String, usize>,
    pub seed: Option<u64>,
    pub config_hash: Option<String>,
    pub config_snapshot: Option<String>,
    pub duplicates_removed: Option<usize>,
    pub group_by_headword: Option<bool>,
    pub notes: Vec<String>,
    /// Unix seconds; the only field allowed to differ between identical runs.
    pub generated_at: u64,
}

impl DatasetMetadata {
    pub fn for_samples(samples: &[LabeledSample]) -> Self {
        let stats = dataset_stats(samples);
        Self {
            samples: samples.len(),
            class_counts: stats
                .per_class_counts
                .iter()
                .map(|(k, v)| (k.to_string(), *v))
                .collect(),
            generated_at: std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
            ..Self::default()
        }
    }
}

/// `data/train.jsonl` -> `data/train.meta.json`
pub fn sidecar_path(path: &Path) -> PathBuf {
    path.with_extension("meta.json")
}

pub fn write_samples<W: Write>(mut out: W, samples: &[LabeledSample]) -> std::io::Result<()> {
    for s in samples {
        serde_json::to_writer(&mut out, s)?;
        out.write_all(b"\n")?;
    }
    out.flush()
}

/// Writes the samples as JSON lines plus a metadata sidecar.
pub fn write_dataset(path: &Path, samples: &[LabeledSample], meta: &DatasetMetadata) -> Result<(), DatasetError> {
    let file = File::create(path).map_err(io_err(path))?;
    write_samples(BufWriter::new(file), samples).map_err(io_err(path))?;
    let side = sidecar_path(path);
    let text = serde_json::to_string_pretty(meta).expect("metadata serializes");
    std::fs::write(&side, text + "\n").map_err(io_err(&side))?;
    Ok(())
}

/// Writes `train.jsonl`, `dev.jsonl`, `test.jsonl` (and sidecars) into `dir`.
pub fn write_splits(dir: &Path, splits: &DatasetSplits, base: &DatasetMetadata) -> Result<(), DatasetError> {
    std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    for (name, part) in splits.parts() {
        let mut meta = DatasetMetadata::for_samples(part);
        meta.seed = Some(splits.seed);
        meta.config_hash = base.config_hash.clone();
        meta.config_snapshot = Some(splits.config_snapshot.clone());
        meta.group_by_headword = Some(splits.group_by_headword);
        meta.notes = base.notes.clone();
        write_dataset(&dir.join(format!("{name}.jsonl")), part, &meta)?;
    }
    Ok(())
}

pub fn read_samples<R: BufRead>(input: R, origin: &str) -> Result<Vec<LabeledSample>, DatasetError> {
    let mut out = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line.map_err(|source| DatasetError::Io {
            path: origin.to_owned(),
            source,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let schema = |message: String| DatasetError::Schema {
            path: origin.to_owned(),
            line: i + 1,
            message,
        };
        let sample: LabeledSample = serde_json::from_str(&line).map_err(|e| schema(e.to_string()))?;
        sample.check().map_err(schema)?;
        out.push(sample);
    }
    Ok(out)
}

pub fn read_dataset(path: &Path) -> Result<Vec<LabeledSample>, DatasetError> {
    let file = File::open(path).map_err(io_err(path))?;
    read_samples(BufReader::new(file), &path.display().to_string())
}

/// Reads the sidecar for `path`, if there is one.
pub fn read_metadata(path: &Path) -> Option<DatasetMetadata> {
    let text = std::fs::read_to_string(sidecar_path(path)).ok()?;
    serde_json::from_str(&text).ok()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DatasetStats {
    pub total: usize,
    pub per_class_counts: BTreeMap<u8, usize>,
    pub word_count_histogram: BTreeMap<usize, usize>,
    pub mean_word_count: f64,
    pub median_word_count: f64,
}

pub fn dataset_stats(samples: &[LabeledSample]) -> DatasetStats {
    let mut per_class_counts = BTreeMap::new();
    let mut histogram = BTreeMap::new();
    let mut lengths = Vec::with_capacity(samples.len());
    for s in samples {
        *per_class_counts.entry(u8::from(s.class)).or_insert(0) += 1;
        let n = tokenize(&s.text).len();
        *histogram.entry(n).or_insert(0) += 1;
        lengths.push(n);
    }
    lengths.sort_unstable();
    let (mean, median) = if lengths.is_empty() {
        (0.0, 0.0)
    } else {
        let mean = lengths.iter().sum::<usize>() as f64 / lengths.len() as f64;
        let mid = lengths.len() / 2;
        let median = if lengths.len() % 2 == 0 {
            (lengths[mid - 1] + lengths[mid]) as f64 / 2.0
        } else {
            lengths[mid] as f64
        };
        (mean, median)
    };
    DatasetStats {
        total: samples.len(),
        per_class_counts,
        word_count_histogram: histogram,
        mean_word_count: mean,
        median_word_count: median,
    }
}

pub fn write_histogram_csv<W: Write>(mut out: W, stats: &DatasetStats) -> std::io::Result<()> {
    writeln!(out, "word_count,samples")?;
    for (len, count) in &stats.word_count_histogram {
        writeln!(out, "{len},{count}")?;
    }
    out.flush()
}

/// Count of samples per class within each split, for balance checks.
pub fn class_balance(samples: &[LabeledSample]) -> (usize, usize) {
    let mut counts: HashMap<Relevance, usize> = HashMap::new();
    for s in samples {
        *counts.entry(s.class).or_default() += 1;
    }
    (
        counts.get(&Relevance::Relevant).copied().unwrap_or(0),
        counts.get(&Relevance::Irrelevant).copied().unwrap_or(0),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generate::{Provenance, SampleSource};

    pub(crate) fn sample(text: &str, label: &str, class: Relevance, headword: &str) -> LabeledSample {
        LabeledSample {
            text: text.into(),
            label: label.into(),
            class,
            provenance: Provenance {
                headword: headword.into(),
                sense_id: format!("{headword}#1"),
                source: match class {
                    Relevance::Relevant => SampleSource::Synonym,
                    Relevance::Irrelevant => SampleSource::Negative,
                },
            },
        }
    }

    fn balanced(n_per_class: usize) -> Vec<LabeledSample> {
        (0..n_per_class)
            .flat_map(|i| {
                let hw = format!("w{i}");
                [
                    sample(&format!("sentence {i}"), "Moment", Relevance::Relevant, &hw),
                    sample(&format!("sentence {i}"), "Libell", Relevance::Irrelevant, &hw),
                ]
            })
            .collect()
    }

    #[test]
    fn apportionment_arithmetic() {
        let r = [0.8, 0.1, 0.1];
        // quotas 11822.4 / 1477.8 / 1477.8
        assert_eq!(largest_remainder(14_778, &r, &[0.0; 3]), [11_822, 1_478, 1_478]);
        assert_eq!(largest_remainder(10, &r, &[0.0; 3]), [8, 1, 1]);
        assert_eq!(largest_remainder(5, &r, &[0.0; 3]), [4, 1, 0]);
        assert_eq!(largest_remainder(5, &r, &[1.0, 1.0, 0.0]), [4, 0, 1]);
    }

    #[test]
    fn table_sizes() {
        let r = [0.8, 0.1, 0.1];
        let sum = |t: Vec<[usize; 3]>| -> [usize; 3] {
            t.iter()
                .fold([0; 3], |acc, s| [acc[0] + s[0], acc[1] + s[1], acc[2] + s[2]])
        };
        assert_eq!(sum(stratified_targets(&[7_389, 7_389], &r)), [11_822, 1_478, 1_478]);
        assert_eq!(sum(stratified_targets(&[24_458, 24_458], &r)), [39_132, 4_892, 4_892]);
        assert_eq!(sum(stratified_targets(&[5, 5], &r)), [8, 1, 1]);
    }

    #[test]
    fn small_split() {
        let data = balanced(5);
        let s = split_dataset(&data, [0.8, 0.1, 0.1], 3, false).unwrap();
        assert_eq!(s.sizes(), [8, 1, 1]);
        let (p, n) = class_balance(&s.train);
        assert_eq!((p, n), (4, 4));
        let again = split_dataset(&data, [0.8, 0.1, 0.1], 3, false).unwrap();
        assert_eq!(s, again);
    }

    #[test]
    fn split_errors() {
        let data = balanced(5);
        assert!(matches!(
            split_dataset(&data, [0.5, 0.2, 0.2], 0, false),
            Err(DatasetError::BadRatios(_))
        ));
        assert!(matches!(
            split_dataset(&data, [1.0, 0.0, 0.0], 0, false),
            Err(DatasetError::BadRatios(_))
        ));
        assert!(matches!(
            split_dataset(&data[..2], [0.8, 0.1, 0.1], 0, false),
            Err(DatasetError::TooFewSamples { samples: 2, splits: 3 })
        ));
    }

    #[test]
    fn grouped_split_keeps_headwords_together() {
        let data = balanced(40);
        let s = split_dataset(&data, [0.8, 0.1, 0.1], 11, true).unwrap();
        let mut home: HashMap<&str, usize> = HashMap::new();
        for (i, (_, part)) in s.parts().iter().enumerate() {
            for x in part.iter() {
                let prev = home.insert(x.provenance.headword.as_str(), i);
                assert!(prev.is_none() || prev == Some(i));
            }
            let (p, n) = class_balance(part);
            assert_eq!(p, n);
        }
        assert_eq!(s.sizes(), [64, 8, 8]);
        assert!(s.config_snapshot.contains("\"group_by_headword\":true"));
    }

    #[test]
    fn stats() {
        let st = dataset_stats(&[sample("a b c", "l", Relevance::Relevant, "h")]);
        assert_eq!(st.word_count_histogram, BTreeMap::from([(3, 1)]));
        assert_eq!(st.mean_word_count, 3.0);
        assert_eq!(st.median_word_count, 3.0);

        let empty = dataset_stats(&[]);
        assert_eq!(empty.total, 0);
        assert!(empty.word_count_histogram.is_empty());

        let st = dataset_stats(&balanced(3));
        assert_eq!(st.per_class_counts, BTreeMap::from([(0, 3), (1, 3)]));
        assert_eq!(st.word_count_histogram.values().sum::<usize>(), st.total);

        let st = dataset_stats(&[
            sample("a", "l", Relevance::Relevant, "h"),
            sample("a b c d", "l", Relevance::Relevant, "h"),
        ]);
        assert_eq!(st.median_word_count, 2.5);
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("all.jsonl");
        let data = balanced(3);
        write_dataset(&path, &data, &DatasetMetadata::for_samples(&data)).unwrap();
        assert_eq!(read_dataset(&path).unwrap(), data);
        let meta = read_metadata(&path).unwrap();
        assert_eq!(meta.samples, 6);
        assert_eq!(meta.class_counts["1"], 3);
    }

    #[test]
    fn empty_split_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("dev.jsonl");
        write_dataset(&path, &[], &DatasetMetadata::for_samples(&[])).unwrap();
        assert_eq!(std::fs::read(&path).unwrap(), b"");
        assert!(sidecar_path(&path).exists());
        assert!(read_dataset(&path).unwrap().is_empty());
    }

    #[test]
    fn schema_violations() {
        let bad_class =
            r#"{"text":"t","label":"l","class":2,"provenance":{"headword":"h","sense_id":"h#1","source":"synonym"}}"#;
        match read_samples(bad_class.as_bytes(), "mem") {
            Err(DatasetError::Schema { line, .. }) => assert_eq!(line, 1),
            other => panic!("{other:?}"),
        }
        let inconsistent =
            r#"{"text":"t","label":"l","class":0,"provenance":{"headword":"h","sense_id":"h#1","source":"synonym"}}"#;
        let input = format!("\n{inconsistent}");
        match read_samples(input.as_bytes(), "mem") {
            Err(DatasetError::Schema { line, message, .. }) => {
                assert_eq!(line, 2);
                assert!(message.contains("inconsistent"));
            }
            other => panic!("{other:?}"),
        }
        let empty_label =
            r#"{"text":"t","label":" ","class":1,"provenance":{"headword":"h","sense_id":"h#1","source":"synonym"}}"#;
        assert!(read_samples(empty_label.as_bytes(), "mem").is_err());
    }

    #[test]
    fn serialized_field_order_is_stable() {
        let mut buf = Vec::new();
        write_samples(&mut buf, &[sample("t", "l", Relevance::Relevant, "h")]).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "{\"text\":\"t\",\"label\":\"l\",\"class\":1,\"provenance\":{\"headword\":\"h\",\"sense_id\":\"h#1\",\"source\":\"synonym\"}}\n"
        );
    }
}
