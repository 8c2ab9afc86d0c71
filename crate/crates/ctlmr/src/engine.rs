//! Embedded map/shuffle/reduce engine.
//!
//! A job reads role-tagged sets of record files, runs the map function over
//! every line in parallel, partitions the emitted key-value pairs by
//! `hash(key) mod num_reducers`, groups values by key, and runs the reduce
//! function once per key. Reducers start only after every mapper has
//! finished (barrier semantics), and values for a key are presented in a
//! fixed order — all `⊥` markers first, then payloads in byte order — so a
//! job's output is byte-identical no matter how many workers run it.
//!
//! Lines are treated as opaque payloads except for the leading
//! tab-terminated decimal key. The empty marker is spilled as `<id>\tBOT`.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use crate::kripke::{partition_file_name, StateId};
use crate::{Error, Result};

/// Partitioner: assigns a key to a reducer, `hash(key) mod num_reducers`.
/// Identical to the store's partition function, so job outputs line up
/// with store files whenever the reducer count matches.
pub use crate::hash::partition_for;

/// Value side of a key-value pair: a record payload or the empty marker.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Value {
    /// The distinguished empty marker, spilled as `BOT`.
    Bot,
    /// A full record line (starts with the record's own id).
    Line(String),
}

impl Value {
    pub fn is_bot(&self) -> bool {
        matches!(self, Value::Bot)
    }

    pub fn as_line(&self) -> Option<&str> {
        match self {
            Value::Bot => None,
            Value::Line(l) => Some(l),
        }
    }
}

/// The engine's unit of dataflow.
pub type KeyValue = (StateId, Value);

/// Collects the pairs emitted by one map or reduce invocation.
#[derive(Debug, Default)]
pub struct Emitter {
    pairs: Vec<KeyValue>,
}

impl Emitter {
    pub fn emit_bot(&mut self, key: StateId) {
        self.pairs.push((key, Value::Bot));
    }

    pub fn emit_line(&mut self, key: StateId, line: String) {
        self.pairs.push((key, Value::Line(line)));
    }
}

/// One role-tagged group of input files. The map function receives the tag
/// with every line, so set membership ("did this record come from ⟦φ⟧?")
/// is a property of the file set a record arrived from, never a lookup.
#[derive(Debug, Clone)]
pub struct InputSet<T> {
    pub tag: T,
    pub files: Vec<PathBuf>,
}

pub struct JobSpec<'a, T, M, R> {
    pub name: &'a str,
    pub inputs: Vec<InputSet<T>>,
    pub map: M,
    pub reduce: R,
    pub num_reducers: usize,
    pub workers: usize,
    /// Holds per-mapper spill files for the duration of the job.
    pub scratch_dir: &'a Path,
    /// Receives the `part-%05d` output files.
    pub output_dir: &'a Path,
}

#[derive(Debug)]
pub struct JobOutput {
    pub files: Vec<PathBuf>,
    /// Records emitted by all reducers; drives fixed-point termination.
    pub emitted_pairs: u64,
}

/// Runs a job to completion. The map and reduce functions must be pure:
/// they are invoked from worker threads in unspecified order.
pub fn run_job<T, M, R>(spec: JobSpec<'_, T, M, R>) -> Result<JobOutput>
where
    T: Copy + Send + Sync,
    M: Fn(T, StateId, &str, &mut Emitter) -> Result<()> + Sync,
    R: Fn(StateId, &[Value], &mut Emitter) -> Result<()> + Sync,
{
    assert!(spec.num_reducers >= 1, "need at least one reducer");
    let workers = spec.workers.max(1);
    fs::create_dir_all(spec.scratch_dir).map_err(Error::io_at(spec.scratch_dir))?;
    fs::create_dir_all(spec.output_dir).map_err(Error::io_at(spec.output_dir))?;

    // Map phase: one task per input file; each task spills one file per
    // reducer partition.
    let tasks: Vec<(T, &PathBuf)> = spec
        .inputs
        .iter()
        .flat_map(|set| set.files.iter().map(|f| (set.tag, f)))
        .collect();
    let job = spec.name;
    let map = &spec.map;
    let num_reducers = spec.num_reducers;
    let scratch = spec.scratch_dir;
    let spills: Vec<Vec<PathBuf>> = parallel_map(workers, &tasks, |task_index, (tag, path)| {
        run_map_task(job, map, *tag, path, task_index, num_reducers, scratch)
    })?;

    // Shuffle + reduce phase: one task per partition.
    let partitions: Vec<usize> = (0..num_reducers).collect();
    let reduce = &spec.reduce;
    let output_dir = spec.output_dir;
    let outputs: Vec<(PathBuf, u64)> = parallel_map(workers, &partitions, |_, &p| {
        let inputs: Vec<&PathBuf> = spills.iter().map(|files| &files[p]).collect();
        run_reduce_task(job, reduce, p, num_reducers, &inputs, output_dir)
    })?;

    for files in &spills {
        for file in files {
            let _ = fs::remove_file(file);
        }
    }

    let emitted_pairs = outputs.iter().map(|(_, count)| count).sum();
    let files = outputs.into_iter().map(|(path, _)| path).collect();
    Ok(JobOutput {
        files,
        emitted_pairs,
    })
}

fn run_map_task<T, M>(
    job: &str,
    map: &M,
    tag: T,
    path: &Path,
    task_index: usize,
    num_reducers: usize,
    scratch_dir: &Path,
) -> Result<Vec<PathBuf>>
where
    T: Copy,
    M: Fn(T, StateId, &str, &mut Emitter) -> Result<()>,
{
    let text = fs::read_to_string(path).map_err(Error::io_at(path))?;
    let mut emitter = Emitter::default();
    for (lineno, line) in text.lines().enumerate() {
        if line.is_empty() {
            continue;
        }
        let key = parse_key(line).ok_or_else(|| Error::Job {
            job: job.to_string(),
            key: None,
            msg: format!("{}:{}: malformed record line", path.display(), lineno + 1),
        })?;
        map(tag, key, line, &mut emitter).map_err(|e| Error::Job {
            job: job.to_string(),
            key: Some(key),
            msg: e.to_string(),
        })?;
    }

    let mut buckets: Vec<String> = vec![String::new(); num_reducers];
    for (key, value) in emitter.pairs {
        let bucket = &mut buckets[partition_for(key, num_reducers)];
        match value {
            Value::Bot => {
                bucket.push_str(&key.to_string());
                bucket.push_str("\tBOT\n");
            }
            Value::Line(line) => {
                bucket.push_str(&line);
                bucket.push('\n');
            }
        }
    }
    let mut files = Vec::with_capacity(num_reducers);
    for (p, bucket) in buckets.into_iter().enumerate() {
        let path = scratch_dir.join(format!("map-{task_index:04}-{p:04}"));
        fs::write(&path, bucket).map_err(Error::io_at(&path))?;
        files.push(path);
    }
    Ok(files)
}

fn run_reduce_task<R>(
    job: &str,
    reduce: &R,
    partition: usize,
    num_reducers: usize,
    spill_files: &[&PathBuf],
    output_dir: &Path,
) -> Result<(PathBuf, u64)>
where
    R: Fn(StateId, &[Value], &mut Emitter) -> Result<()>,
{
    let mut pairs: Vec<(StateId, Value)> = Vec::new();
    for path in spill_files {
        let text = fs::read_to_string(path).map_err(Error::io_at(path.as_path()))?;
        for line in text.lines() {
            if line.is_empty() {
                continue;
            }
            let key = parse_key(line).ok_or_else(|| Error::Job {
                job: job.to_string(),
                key: None,
                msg: format!("{}: malformed spill line", path.display()),
            })?;
            let value = match line.split_once('\t') {
                Some((_, "BOT")) => Value::Bot,
                _ => Value::Line(line.to_string()),
            };
            pairs.push((key, value));
        }
    }

    // Canonical order: key, then ⊥ before payloads, then payload bytes.
    pairs.sort_by(|(ka, va), (kb, vb)| {
        ka.cmp(kb)
            .then_with(|| va.is_bot().cmp(&vb.is_bot()).reverse())
            .then_with(|| va.as_line().cmp(&vb.as_line()))
    });

    let mut out = String::new();
    let mut emitted = 0u64;
    let mut emitter = Emitter::default();
    let mut start = 0;
    while start < pairs.len() {
        let key = pairs[start].0;
        let mut end = start;
        while end < pairs.len() && pairs[end].0 == key {
            end += 1;
        }
        let values: Vec<Value> = pairs[start..end].iter().map(|(_, v)| v.clone()).collect();
        reduce(key, &values, &mut emitter).map_err(|e| match e {
            err @ Error::Integrity(_) => err,
            other => Error::Job {
                job: job.to_string(),
                key: Some(key),
                msg: other.to_string(),
            },
        })?;
        for (out_key, value) in emitter.pairs.drain(..) {
            debug_assert_eq!(
                partition_for(out_key, num_reducers),
                partition,
                "reduce emitted a key outside its partition"
            );
            match value {
                Value::Bot => {
                    out.push_str(&out_key.to_string());
                    out.push_str("\tBOT\n");
                }
                Value::Line(line) => {
                    out.push_str(&line);
                    out.push('\n');
                }
            }
            emitted += 1;
        }
        start = end;
    }

    let path = output_dir.join(partition_file_name(partition));
    fs::write(&path, out).map_err(Error::io_at(&path))?;
    Ok((path, emitted))
}

fn parse_key(line: &str) -> Option<StateId> {
    let field = line.split('\t').next()?;
    field.parse().ok()
}

/// Maps `f` over `items` with up to `workers` threads, preserving item
/// order in the results. The index of each item is passed through so tasks
/// can derive stable file names.
pub fn parallel_map<T, U, F>(workers: usize, items: &[T], f: F) -> Result<Vec<U>>
where
    T: Sync,
    U: Send,
    F: Fn(usize, &T) -> Result<U> + Sync,
{
    let workers = workers.max(1).min(items.len().max(1));
    if workers <= 1 {
        return items
            .iter()
            .enumerate()
            .map(|(i, item)| f(i, item))
            .collect();
    }

    let next = AtomicUsize::new(0);
    let results: Mutex<Vec<(usize, Result<U>)>> = Mutex::new(Vec::with_capacity(items.len()));
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= items.len() {
                    break;
                }
                let out = f(i, &items[i]);
                results.lock().unwrap().push((i, out));
            });
        }
    });

    let mut collected = results.into_inner().unwrap();
    collected.sort_by_key(|(i, _)| *i);
    // Report the first failure in item order, independent of scheduling.
    let mut out = Vec::with_capacity(collected.len());
    for (_, result) in collected {
        out.push(result?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use tempfile::TempDir;

    fn write_input(dir: &Path, name: &str, lines: &[&str]) -> PathBuf {
        let path = dir.join(name);
        fs::write(&path, lines.join("\n") + "\n").unwrap();
        path
    }

    #[allow(clippy::type_complexity)]
    fn identity_spec<'a>(
        name: &'a str,
        inputs: Vec<InputSet<u8>>,
        scratch: &'a Path,
        out: &'a Path,
        workers: usize,
        reducers: usize,
    ) -> JobSpec<
        'a,
        u8,
        impl Fn(u8, StateId, &str, &mut Emitter) -> Result<()>,
        impl Fn(StateId, &[Value], &mut Emitter) -> Result<()>,
    > {
        JobSpec {
            name,
            inputs,
            map: |_tag, key, line: &str, em: &mut Emitter| {
                em.emit_line(key, line.to_string());
                Ok(())
            },
            reduce: |key, values: &[Value], em: &mut Emitter| {
                for v in values {
                    if let Some(line) = v.as_line() {
                        em.emit_line(key, line.to_string());
                    }
                }
                Ok(())
            },
            num_reducers: reducers,
            workers,
            scratch_dir: scratch,
            output_dir: out,
        }
    }

    #[test]
    fn identity_job_forwards_all_records() {
        let dir = TempDir::new().unwrap();
        let input = write_input(
            dir.path(),
            "in",
            &["1\ta\t-\t-", "2\tb\t-\t-", "3\tc\t-\t-"],
        );
        let scratch = dir.path().join("scratch");
        let out = dir.path().join("out");
        let spec = identity_spec(
            "identity",
            vec![InputSet {
                tag: 0u8,
                files: vec![input],
            }],
            &scratch,
            &out,
            1,
            2,
        );
        let result = run_job(spec).unwrap();
        assert_eq!(result.emitted_pairs, 3);
        let mut lines: Vec<String> = Vec::new();
        for file in &result.files {
            lines.extend(fs::read_to_string(file).unwrap().lines().map(String::from));
        }
        lines.sort();
        assert_eq!(lines, vec!["1\ta\t-\t-", "2\tb\t-\t-", "3\tc\t-\t-"]);
    }

    #[test]
    fn bot_and_payload_group_under_one_key() {
        let dir = TempDir::new().unwrap();
        let marks = write_input(dir.path(), "marks", &["7\tx\t-\t-"]);
        let payloads = write_input(dir.path(), "payloads", &["7\tpayload\t-\t-"]);
        let scratch = dir.path().join("scratch");
        let out = dir.path().join("out");
        let spec = JobSpec {
            name: "join",
            inputs: vec![
                InputSet {
                    tag: 'm',
                    files: vec![marks],
                },
                InputSet {
                    tag: 'p',
                    files: vec![payloads],
                },
            ],
            map: |tag, key, line: &str, em: &mut Emitter| {
                match tag {
                    'm' => em.emit_bot(key),
                    _ => em.emit_line(key, line.to_string()),
                }
                Ok(())
            },
            reduce: |key, values: &[Value], em: &mut Emitter| {
                // The marker must sort first and share the group with the payload.
                assert!(values[0].is_bot());
                assert_eq!(values.len(), 2);
                em.emit_line(key, values[1].as_line().unwrap().to_string());
                Ok(())
            },
            num_reducers: 3,
            workers: 2,
            scratch_dir: &scratch,
            output_dir: &out,
        };
        let result = run_job(spec).unwrap();
        assert_eq!(result.emitted_pairs, 1);
    }

    #[test]
    fn counting_reduce_aggregates_tokens() {
        // Token stream {a, a, b} keyed by token id: counts {a: 2, b: 1}.
        let dir = TempDir::new().unwrap();
        let input = write_input(dir.path(), "in", &["1\ta", "1\ta", "2\tb"]);
        let scratch = dir.path().join("scratch");
        let out = dir.path().join("out");
        let spec = JobSpec {
            name: "count",
            inputs: vec![InputSet {
                tag: (),
                files: vec![input],
            }],
            map: |_tag, key, line: &str, em: &mut Emitter| {
                em.emit_line(key, line.to_string());
                Ok(())
            },
            reduce: |key, values: &[Value], em: &mut Emitter| {
                em.emit_line(key, format!("{key}\t{}", values.len()));
                Ok(())
            },
            num_reducers: 1,
            workers: 1,
            scratch_dir: &scratch,
            output_dir: &out,
        };
        let result = run_job(spec).unwrap();
        assert_eq!(result.emitted_pairs, 2);
        let text = fs::read_to_string(&result.files[0]).unwrap();
        assert_eq!(text, "1\t2\n2\t1\n");
    }

    #[test]
    fn output_is_identical_across_worker_counts() {
        let dir = TempDir::new().unwrap();
        let mut lines_a = Vec::new();
        let mut lines_b = Vec::new();
        for i in 0..200u64 {
            let line = format!("{i}\tv{}\t-\t-", i % 13);
            if i % 2 == 0 {
                lines_a.push(line);
            } else {
                lines_b.push(line);
            }
        }
        let refs_a: Vec<&str> = lines_a.iter().map(String::as_str).collect();
        let refs_b: Vec<&str> = lines_b.iter().map(String::as_str).collect();
        let in_a = write_input(dir.path(), "a", &refs_a);
        let in_b = write_input(dir.path(), "b", &refs_b);

        let mut snapshots: Vec<Vec<String>> = Vec::new();
        for workers in [1usize, 4] {
            let scratch = dir.path().join(format!("scratch-{workers}"));
            let out = dir.path().join(format!("out-{workers}"));
            let spec = identity_spec(
                "invariance",
                vec![InputSet {
                    tag: 0u8,
                    files: vec![in_a.clone(), in_b.clone()],
                }],
                &scratch,
                &out,
                workers,
                4,
            );
            let result = run_job(spec).unwrap();
            assert_eq!(result.emitted_pairs, 200);
            let contents: Vec<String> = result
                .files
                .iter()
                .map(|f| fs::read_to_string(f).unwrap())
                .collect();
            snapshots.push(contents);
        }
        assert_eq!(
            snapshots[0], snapshots[1],
            "outputs differ across worker counts"
        );
    }

    #[test]
    fn keys_are_never_split_across_reducers() {
        let dir = TempDir::new().unwrap();
        let lines: Vec<String> = (0..100u64)
            .map(|i| format!("{}\tv\t-\t-", i % 10))
            .collect();
        let refs: Vec<&str> = lines.iter().map(String::as_str).collect();
        let input = write_input(dir.path(), "in", &refs);
        let scratch = dir.path().join("scratch");
        let out = dir.path().join("out");
        let spec = JobSpec {
            name: "split-check",
            inputs: vec![InputSet {
                tag: (),
                files: vec![input],
            }],
            map: |_t, key, line: &str, em: &mut Emitter| {
                em.emit_line(key, line.to_string());
                Ok(())
            },
            // Reduce sees the complete multiset for its key: 10 copies each.
            reduce: |key, values: &[Value], em: &mut Emitter| {
                assert_eq!(values.len(), 10, "key {key} was split");
                em.emit_line(key, format!("{key}\tok"));
                Ok(())
            },
            num_reducers: 4,
            workers: 2,
            scratch_dir: &scratch,
            output_dir: &out,
        };
        let result = run_job(spec).unwrap();
        assert_eq!(result.emitted_pairs, 10);
        // Each emitted key sits in the file its hash selects.
        for (p, file) in result.files.iter().enumerate() {
            for line in fs::read_to_string(file).unwrap().lines() {
                let key: StateId = line.split('\t').next().unwrap().parse().unwrap();
                assert_eq!(partition_for(key, 4), p);
            }
        }
    }

    #[test]
    fn values_arrive_bots_first_then_payloads_in_byte_order() {
        let dir = TempDir::new().unwrap();
        let input = write_input(
            dir.path(),
            "in",
            &["9	zebra	-	-", "9	alpha	-	-", "9	mid	-	-"],
        );
        let marks = write_input(dir.path(), "marks", &["9	x	-	-"]);
        let scratch = dir.path().join("scratch");
        let out = dir.path().join("out");
        let spec = JobSpec {
            name: "ordering",
            inputs: vec![
                InputSet {
                    tag: 'p',
                    files: vec![input],
                },
                InputSet {
                    tag: 'm',
                    files: vec![marks],
                },
            ],
            map: |tag, key, line: &str, em: &mut Emitter| {
                match tag {
                    'm' => em.emit_bot(key),
                    _ => em.emit_line(key, line.to_string()),
                }
                Ok(())
            },
            reduce: |key, values: &[Value], em: &mut Emitter| {
                let rendered: Vec<&str> = values
                    .iter()
                    .map(|v| v.as_line().unwrap_or("BOT"))
                    .collect();
                assert_eq!(
                    rendered,
                    vec!["BOT", "9\talpha\t-\t-", "9\tmid\t-\t-", "9\tzebra\t-\t-"]
                );
                em.emit_line(key, format!("{key}\tok"));
                Ok(())
            },
            num_reducers: 2,
            workers: 2,
            scratch_dir: &scratch,
            output_dir: &out,
        };
        assert_eq!(run_job(spec).unwrap().emitted_pairs, 1);
    }

    #[test]
    fn emitted_count_matches_output_lines() {
        let dir = TempDir::new().unwrap();
        let lines: Vec<String> = (0..57u64).map(|i| format!("{i}\tv\t-\t-")).collect();
        let refs: Vec<&str> = lines.iter().map(String::as_str).collect();
        let input = write_input(dir.path(), "in", &refs);
        let scratch = dir.path().join("scratch");
        let out = dir.path().join("out");
        let spec = identity_spec(
            "count-match",
            vec![InputSet {
                tag: 0u8,
                files: vec![input],
            }],
            &scratch,
            &out,
            3,
            5,
        );
        let result = run_job(spec).unwrap();
        let total: usize = result
            .files
            .iter()
            .map(|f| fs::read_to_string(f).unwrap().lines().count())
            .sum();
        assert_eq!(result.emitted_pairs as usize, total);
    }

    #[test]
    fn map_failure_carries_job_and_key() {
        let dir = TempDir::new().unwrap();
        let input = write_input(dir.path(), "in", &["5\tboom\t-\t-"]);
        let scratch = dir.path().join("scratch");
        let out = dir.path().join("out");
        let spec = JobSpec {
            name: "failing",
            inputs: vec![InputSet {
                tag: (),
                files: vec![input],
            }],
            map: |_t, _key, _line: &str, _em: &mut Emitter| {
                Err(Error::Internal("map exploded".into()))
            },
            reduce: |_key, _values: &[Value], _em: &mut Emitter| Ok(()),
            num_reducers: 1,
            workers: 1,
            scratch_dir: &scratch,
            output_dir: &out,
        };
        match run_job(spec) {
            Err(Error::Job { job, key, .. }) => {
                assert_eq!(job, "failing");
                assert_eq!(key, Some(StateId(5)));
            }
            other => panic!("expected job error, got {other:?}"),
        }
    }

    #[test]
    fn malformed_input_line_is_a_job_error() {
        let dir = TempDir::new().unwrap();
        let input = write_input(dir.path(), "in", &["not-a-key\tv"]);
        let scratch = dir.path().join("scratch");
        let out = dir.path().join("out");
        let spec = identity_spec(
            "malformed",
            vec![InputSet {
                tag: 0u8,
                files: vec![input],
            }],
            &scratch,
            &out,
            1,
            1,
        );
        assert!(matches!(run_job(spec), Err(Error::Job { .. })));
    }
}
