//! Partitioned Kripke structure with predecessor-list edges.
//!
//! A store is a set of `part-%05d` text files plus a `manifest.json`
//! sidecar. Each record line is
//!
//! ```text
//! <id>\t<m1,m2,...,mk>\t<p1,p2,...,pj>\t<flags>
//! ```
//!
//! where the third column is the sorted list of predecessor identifiers
//! (`-` when empty) and `flags` is `-` for ordinary states or `E` for the
//! error state that absorbs deadlocks. A state with identifier `k` lives in
//! file `hash(k) mod n` (see [`crate::hash::partition_for`]).

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::hash::{error_state_id, partition_for};
use crate::{Error, Result};

pub const MANIFEST_NAME: &str = "manifest.json";
pub const STORE_FORMAT: &str = "ctlmr-store-v1";

/// Unique 64-bit state identifier, stable across runs for the same model.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, Default,
)]
#[serde(transparent)]
pub struct StateId(pub u64);

impl fmt::Display for StateId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

impl std::str::FromStr for StateId {
    type Err = std::num::ParseIntError;
    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        s.parse::<u64>().map(StateId)
    }
}

/// One reachable state: its marking and the identifiers of all states that
/// can reach it in one step.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StateRecord {
    pub id: StateId,
    pub marking: Vec<u32>,
    /// Sorted, duplicate-free.
    pub predecessors: Vec<StateId>,
    pub is_error: bool,
}

impl StateRecord {
    pub fn new(id: StateId, marking: Vec<u32>, mut predecessors: Vec<StateId>) -> Self {
        predecessors.sort_unstable();
        predecessors.dedup();
        StateRecord {
            id,
            marking,
            predecessors,
            is_error: false,
        }
    }

    /// Parses one record line. The error carries no file context; callers
    /// attach file and line number.
    pub fn parse(line: &str) -> std::result::Result<StateRecord, String> {
        let mut cols = line.split('\t');
        let id: StateId = cols
            .next()
            .filter(|c| !c.is_empty())
            .ok_or("missing id column")?
            .parse()
            .map_err(|e| format!("bad id: {e}"))?;
        let marking_col = cols.next().ok_or("missing marking column")?;
        if marking_col.is_empty() {
            return Err("empty marking".into());
        }
        let mut marking = Vec::new();
        for tok in marking_col.split(',') {
            let count: u32 = tok
                .parse()
                .map_err(|e| format!("bad token count `{tok}`: {e}"))?;
            marking.push(count);
        }
        let preds_col = cols.next().ok_or("missing predecessor column")?;
        let mut predecessors = Vec::new();
        if preds_col != "-" {
            for tok in preds_col.split(',') {
                let id: StateId = tok
                    .parse()
                    .map_err(|e| format!("bad predecessor id `{tok}`: {e}"))?;
                predecessors.push(id);
            }
        }
        predecessors.sort_unstable();
        predecessors.dedup();
        let flags = cols.next().ok_or("missing flags column")?;
        let is_error = match flags {
            "-" => false,
            "E" => true,
            other => return Err(format!("bad flags `{other}`")),
        };
        if cols.next().is_some() {
            return Err("trailing columns".into());
        }
        Ok(StateRecord {
            id,
            marking,
            predecessors,
            is_error,
        })
    }

    pub fn to_line(&self) -> String {
        let marking = crate::hash::marking_key(&self.marking);
        let preds = if self.predecessors.is_empty() {
            "-".to_string()
        } else {
            self.predecessors
                .iter()
                .map(|p| p.0.to_string())
                .collect::<Vec<_>>()
                .join(",")
        };
        let flags = if self.is_error { "E" } else { "-" };
        format!("{}\t{}\t{}\t{}", self.id, marking, preds, flags)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub format: String,
    pub num_partitions: usize,
    pub place_names: Vec<String>,
    pub initial_states: Vec<StateId>,
}

/// Findings reported by [`KripkeStore::validate`]. An empty list means every
/// store invariant holds.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Diagnostic {
    DanglingPredecessor {
        missing: StateId,
        referenced_by: StateId,
    },
    DuplicateId(StateId),
    MisPartitioned {
        id: StateId,
        file_index: usize,
        expected_index: usize,
    },
    /// State has no successor, so the relation is not total.
    NonSerial(StateId),
    InitialMissing(StateId),
    MarkingArity {
        id: StateId,
        expected: usize,
        found: usize,
    },
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Diagnostic::DanglingPredecessor {
                missing,
                referenced_by,
            } => {
                write!(f, "dangling id {missing} (referenced by {referenced_by})")
            }
            Diagnostic::DuplicateId(id) => write!(f, "duplicate id {id}"),
            Diagnostic::MisPartitioned {
                id,
                file_index,
                expected_index,
            } => write!(
                f,
                "id {id} stored in partition {file_index}, expected {expected_index}"
            ),
            Diagnostic::NonSerial(id) => write!(f, "state {id} has no successor"),
            Diagnostic::InitialMissing(id) => write!(f, "initial state {id} not in store"),
            Diagnostic::MarkingArity {
                id,
                expected,
                found,
            } => {
                write!(
                    f,
                    "state {id} has marking of length {found}, expected {expected}"
                )
            }
        }
    }
}

/// In-memory view of a partitioned store. Immutable once constructed; the
/// only mutating operation is [`ensure_seriality`](Self::ensure_seriality),
/// which consumes the store and rewrites the affected partition file.
#[derive(Debug, Clone)]
pub struct KripkeStore {
    partition_paths: Vec<PathBuf>,
    records: BTreeMap<StateId, StateRecord>,
    /// Ids as they appear per partition file, in file order.
    per_file_ids: Vec<Vec<StateId>>,
    initial_states: BTreeSet<StateId>,
    place_names: Vec<String>,
}

impl KripkeStore {
    /// Loads a store from explicit partition files. Referential integrity
    /// across partitions is *not* checked here; that is `validate`'s job.
    pub fn load(
        paths: &[PathBuf],
        initial: &BTreeSet<StateId>,
        place_names: Vec<String>,
    ) -> Result<KripkeStore> {
        if paths.is_empty() {
            return Err(Error::Contract(
                "store needs at least one partition file".into(),
            ));
        }
        if initial.is_empty() {
            return Err(Error::Contract(
                "initial state set must be non-empty".into(),
            ));
        }
        let mut records = BTreeMap::new();
        let mut per_file_ids = Vec::with_capacity(paths.len());
        for path in paths {
            let text = fs::read_to_string(path).map_err(Error::io_at(path))?;
            let mut ids = Vec::new();
            for (lineno, line) in text.lines().enumerate() {
                if line.is_empty() {
                    continue;
                }
                let record = StateRecord::parse(line).map_err(|msg| Error::StoreParse {
                    file: path.clone(),
                    line: lineno + 1,
                    msg,
                })?;
                if !place_names.is_empty() && record.marking.len() != place_names.len() {
                    return Err(Error::StoreParse {
                        file: path.clone(),
                        line: lineno + 1,
                        msg: format!(
                            "marking has {} entries, expected {}",
                            record.marking.len(),
                            place_names.len()
                        ),
                    });
                }
                ids.push(record.id);
                if records.insert(record.id, record).is_some() {
                    return Err(Error::DuplicateId {
                        id: ids[ids.len() - 1],
                    });
                }
            }
            per_file_ids.push(ids);
        }
        for id in initial {
            if !records.contains_key(id) {
                return Err(Error::Integrity(format!("initial state {id} not in store")));
            }
        }
        Ok(KripkeStore {
            partition_paths: paths.to_vec(),
            records,
            per_file_ids,
            initial_states: initial.clone(),
            place_names,
        })
    }

    /// Opens a store directory written by [`write`](Self::write): reads the
    /// manifest and all `part-%05d` files.
    pub fn open(dir: &Path) -> Result<KripkeStore> {
        let manifest_path = dir.join(MANIFEST_NAME);
        let text = fs::read_to_string(&manifest_path).map_err(Error::io_at(&manifest_path))?;
        let manifest: Manifest = serde_json::from_str(&text)
            .map_err(|e| Error::Integrity(format!("{}: {e}", manifest_path.display())))?;
        if manifest.format != STORE_FORMAT {
            return Err(Error::Integrity(format!(
                "unsupported store format `{}`",
                manifest.format
            )));
        }
        let paths: Vec<PathBuf> = (0..manifest.num_partitions)
            .map(|i| dir.join(partition_file_name(i)))
            .collect();
        let initial: BTreeSet<StateId> = manifest.initial_states.iter().copied().collect();
        KripkeStore::load(&paths, &initial, manifest.place_names)
    }

    /// Writes records out as a fresh store directory and returns the loaded view.
    pub fn write(
        dir: &Path,
        num_partitions: usize,
        records: Vec<StateRecord>,
        place_names: Vec<String>,
        initial: &BTreeSet<StateId>,
    ) -> Result<KripkeStore> {
        if num_partitions == 0 {
            return Err(Error::Contract("partition count must be at least 1".into()));
        }
        fs::create_dir_all(dir).map_err(Error::io_at(dir))?;
        let mut buckets: Vec<Vec<&StateRecord>> = vec![Vec::new(); num_partitions];
        let mut sorted: Vec<&StateRecord> = records.iter().collect();
        sorted.sort_by_key(|r| r.id);
        for record in sorted {
            buckets[partition_for(record.id, num_partitions)].push(record);
        }
        for (i, bucket) in buckets.iter().enumerate() {
            let path = dir.join(partition_file_name(i));
            let mut out = String::new();
            for record in bucket {
                out.push_str(&record.to_line());
                out.push('\n');
            }
            fs::write(&path, out).map_err(Error::io_at(&path))?;
        }
        let manifest = Manifest {
            format: STORE_FORMAT.into(),
            num_partitions,
            place_names: place_names.clone(),
            initial_states: initial.iter().copied().collect(),
        };
        let manifest_path = dir.join(MANIFEST_NAME);
        let mut f = fs::File::create(&manifest_path).map_err(Error::io_at(&manifest_path))?;
        serde_json::to_writer_pretty(&mut f, &manifest)
            .map_err(|e| Error::Integrity(format!("manifest write: {e}")))?;
        f.write_all(b"\n").map_err(Error::io_at(&manifest_path))?;
        let paths: Vec<PathBuf> = (0..num_partitions)
            .map(|i| dir.join(partition_file_name(i)))
            .collect();
        KripkeStore::load(&paths, initial, place_names)
    }

    pub fn num_partitions(&self) -> usize {
        self.partition_paths.len()
    }

    pub fn partition_files(&self) -> &[PathBuf] {
        &self.partition_paths
    }

    pub fn state_count(&self) -> usize {
        self.records.len()
    }

    pub fn place_names(&self) -> &[String] {
        &self.place_names
    }

    pub fn initial_states(&self) -> &BTreeSet<StateId> {
        &self.initial_states
    }

    pub fn record(&self, id: StateId) -> Option<&StateRecord> {
        self.records.get(&id)
    }

    pub fn records(&self) -> impl Iterator<Item = &StateRecord> {
        self.records.values()
    }

    pub fn contains(&self, id: StateId) -> bool {
        self.records.contains_key(&id)
    }

    /// Counterimage `R⁻(W)`: all states with at least one successor in `W`,
    /// computed as the union of the predecessor lists of `W`'s members.
    /// Only the oracle and tests call this; the distributed path never
    /// materializes it globally.
    pub fn predecessors(&self, w: &BTreeSet<StateId>) -> Result<BTreeSet<StateId>> {
        let mut out = BTreeSet::new();
        for id in w {
            let record = self
                .records
                .get(id)
                .ok_or_else(|| Error::Integrity(format!("unknown state id {id}")))?;
            out.extend(record.predecessors.iter().copied());
        }
        Ok(out)
    }

    /// Ids of states with no successor (states that appear in no
    /// predecessor list).
    pub fn deadlock_states(&self) -> Vec<StateId> {
        let mut has_successor: BTreeSet<StateId> = BTreeSet::new();
        for record in self.records.values() {
            has_successor.extend(record.predecessors.iter().copied());
        }
        self.records
            .keys()
            .filter(|id| !has_successor.contains(id))
            .copied()
            .collect()
    }

    /// Makes the transition relation total: if any deadlock states exist, a
    /// single self-looping error state is added whose predecessor list is
    /// itself plus all deadlocks, and the affected partition file is
    /// rewritten. Stores without deadlocks are returned unchanged.
    pub fn ensure_seriality(mut self) -> Result<KripkeStore> {
        let deadlocks = self.deadlock_states();
        if deadlocks.is_empty() {
            return Ok(self);
        }
        let existing_error = self.records.values().find(|r| r.is_error).map(|r| r.id);
        let error_id = match existing_error {
            Some(id) => {
                let record = self.records.get_mut(&id).expect("error record present");
                record.predecessors.extend(deadlocks.iter().copied());
                record.predecessors.sort_unstable();
                record.predecessors.dedup();
                id
            }
            None => {
                let marking = vec![0; self.place_names.len().max(1)];
                let id = error_state_id(&marking);
                if self.records.contains_key(&id) {
                    return Err(Error::IdCollision { id });
                }
                let mut predecessors = deadlocks.clone();
                predecessors.push(id);
                let mut record = StateRecord::new(id, marking, predecessors);
                record.is_error = true;
                self.records.insert(id, record);
                let partition = partition_for(id, self.num_partitions());
                self.per_file_ids[partition].push(id);
                id
            }
        };
        let partition = self
            .per_file_ids
            .iter()
            .position(|ids| ids.contains(&error_id))
            .expect("error state assigned to a partition");
        self.rewrite_partition(partition)?;
        Ok(self)
    }

    fn rewrite_partition(&mut self, partition: usize) -> Result<()> {
        self.per_file_ids[partition].sort_unstable();
        let path = &self.partition_paths[partition];
        let mut out = String::new();
        for id in &self.per_file_ids[partition] {
            out.push_str(&self.records[id].to_line());
            out.push('\n');
        }
        fs::write(path, out).map_err(Error::io_at(path))
    }

    /// Checks every store invariant and reports findings; an empty vector
    /// means the store is well-formed, correctly partitioned, and total.
    pub fn validate(&self) -> Vec<Diagnostic> {
        let n = self.num_partitions();
        let mut findings = Vec::new();
        let mut seen: BTreeSet<StateId> = BTreeSet::new();
        for (file_index, ids) in self.per_file_ids.iter().enumerate() {
            for &id in ids {
                if !seen.insert(id) {
                    findings.push(Diagnostic::DuplicateId(id));
                }
                let expected_index = partition_for(id, n);
                if expected_index != file_index {
                    findings.push(Diagnostic::MisPartitioned {
                        id,
                        file_index,
                        expected_index,
                    });
                }
            }
        }
        let arity = self.place_names.len();
        let mut has_successor: BTreeSet<StateId> = BTreeSet::new();
        for record in self.records.values() {
            if arity > 0 && record.marking.len() != arity {
                findings.push(Diagnostic::MarkingArity {
                    id: record.id,
                    expected: arity,
                    found: record.marking.len(),
                });
            }
            for &pred in &record.predecessors {
                has_successor.insert(pred);
                if !self.records.contains_key(&pred) {
                    findings.push(Diagnostic::DanglingPredecessor {
                        missing: pred,
                        referenced_by: record.id,
                    });
                }
            }
        }
        for &id in self.records.keys() {
            if !has_successor.contains(&id) {
                findings.push(Diagnostic::NonSerial(id));
            }
        }
        for &id in &self.initial_states {
            if !self.records.contains_key(&id) {
                findings.push(Diagnostic::InitialMissing(id));
            }
        }
        findings
    }
}

pub fn partition_file_name(index: usize) -> String {
    format!("part-{index:05}")
}

#[cfg(test)]
mod tests {
    use super::*;
    use tempfile::TempDir;

    /// The three-state demo structure s0 → s1 → s2 → s2 encoded as
    /// predecessor lists, with literal ids 0, 1, 2 in one partition.
    pub(crate) fn demo_store(dir: &Path) -> KripkeStore {
        let records = vec![
            StateRecord::new(StateId(0), vec![1, 0, 0], vec![]),
            StateRecord::new(StateId(1), vec![0, 1, 0], vec![StateId(0)]),
            StateRecord::new(StateId(2), vec![0, 0, 1], vec![StateId(1), StateId(2)]),
        ];
        let initial: BTreeSet<StateId> = [StateId(0)].into_iter().collect();
        KripkeStore::write(
            dir,
            1,
            records,
            vec!["a".into(), "b".into(), "c".into()],
            &initial,
        )
        .unwrap()
    }

    fn ids(set: &BTreeSet<StateId>) -> Vec<u64> {
        set.iter().map(|s| s.0).collect()
    }

    #[test]
    fn record_line_round_trip() {
        let mut r = StateRecord::new(
            StateId(7),
            vec![0, 3, 1],
            vec![StateId(9), StateId(2), StateId(9)],
        );
        assert_eq!(r.predecessors, vec![StateId(2), StateId(9)]);
        assert_eq!(r.to_line(), "7\t0,3,1\t2,9\t-");
        assert_eq!(StateRecord::parse(&r.to_line()).unwrap(), r);
        r.is_error = true;
        assert_eq!(StateRecord::parse(&r.to_line()).unwrap(), r);
        let empty = StateRecord::new(StateId(1), vec![1], vec![]);
        assert_eq!(empty.to_line(), "1\t1\t-\t-");
        assert_eq!(StateRecord::parse(&empty.to_line()).unwrap(), empty);
    }

    #[test]
    fn parse_rejects_malformed_lines() {
        assert!(StateRecord::parse("x\t1\t-\t-").is_err());
        assert!(StateRecord::parse("1\t\t-\t-").is_err());
        assert!(
            StateRecord::parse("1\t1,-2\t-\t-").is_err(),
            "negative token count"
        );
        assert!(StateRecord::parse("1\t1\t-\tQ").is_err());
        assert!(StateRecord::parse("1\t1\t-").is_err());
        assert!(StateRecord::parse("1\t1\t-\t-\tmore").is_err());
    }

    #[test]
    fn load_minimal_store() {
        let dir = TempDir::new().unwrap();
        let path = dir.path().join("part-00000");
        fs::write(&path, "0\t1,0\t-\t-\n1\t0,1\t0\t-\n2\t2,0\t1,2\t-\n").unwrap();
        let initial = [StateId(0)].into_iter().collect();
        let store = KripkeStore::load(&[path], &initial, vec!["a".into(), "b".into()]).unwrap();
        assert_eq!(store.state_count(), 3);
    }

    #[test]
    fn load_reports_file_and_line_on_parse_error() {
        let dir = TempDir::new().unwrap();
        let path = dir.path().join("part-00000");
        fs::write(&path, "0\t1\t-\t-\n1\t-3\t-\t-\n").unwrap();
        let initial = [StateId(0)].into_iter().collect();
        let err = KripkeStore::load(&[path], &initial, vec!["a".into()]).unwrap_err();
        match err {
            Error::StoreParse { line, .. } => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other}"),
        }
    }

    #[test]
    fn load_rejects_duplicate_ids_across_files() {
        let dir = TempDir::new().unwrap();
        let a = dir.path().join("part-00000");
        let b = dir.path().join("part-00001");
        fs::write(&a, "5\t1\t5\t-\n").unwrap();
        fs::write(&b, "5\t1\t5\t-\n").unwrap();
        let initial = [StateId(5)].into_iter().collect();
        let err = KripkeStore::load(&[a, b], &initial, vec!["a".into()]).unwrap_err();
        assert!(matches!(err, Error::DuplicateId { id: StateId(5) }));
    }

    #[test]
    fn demo_store_predecessors() {
        let dir = TempDir::new().unwrap();
        let store = demo_store(dir.path());
        let w: BTreeSet<StateId> = [StateId(2)].into_iter().collect();
        assert_eq!(ids(&store.predecessors(&w).unwrap()), vec![1, 2]);
        assert!(store.predecessors(&BTreeSet::new()).unwrap().is_empty());
        let all: BTreeSet<StateId> = [StateId(0), StateId(1), StateId(2)].into_iter().collect();
        assert_eq!(ids(&store.predecessors(&all).unwrap()), vec![0, 1, 2]);
    }

    #[test]
    fn predecessors_rejects_unknown_ids() {
        let dir = TempDir::new().unwrap();
        let store = demo_store(dir.path());
        let w: BTreeSet<StateId> = [StateId(99)].into_iter().collect();
        assert!(matches!(store.predecessors(&w), Err(Error::Integrity(_))));
    }

    #[test]
    fn seriality_noop_without_deadlocks() {
        let dir = TempDir::new().unwrap();
        let store = demo_store(dir.path());
        let before = store.state_count();
        let store = store.ensure_seriality().unwrap();
        assert_eq!(store.state_count(), before);
        assert!(store.validate().is_empty());
    }

    #[test]
    fn seriality_absorbs_deadlocks_into_error_state() {
        let dir = TempDir::new().unwrap();
        // 0 → 3 and 0 → 5; 3 and 5 deadlock.
        let records = vec![
            StateRecord::new(StateId(0), vec![1], vec![StateId(0)]),
            StateRecord::new(StateId(3), vec![2], vec![StateId(0)]),
            StateRecord::new(StateId(5), vec![3], vec![StateId(0)]),
        ];
        let initial = [StateId(0)].into_iter().collect();
        let store = KripkeStore::write(dir.path(), 2, records, vec!["a".into()], &initial).unwrap();
        assert_eq!(store.deadlock_states(), vec![StateId(3), StateId(5)]);
        let store = store.ensure_seriality().unwrap();
        assert_eq!(store.state_count(), 4);
        let error = store.records().find(|r| r.is_error).expect("error state");
        let mut expected = vec![StateId(3), StateId(5), error.id];
        expected.sort_unstable();
        assert_eq!(error.predecessors, expected);
        assert!(store.validate().is_empty());
        // The fixup must be visible to a fresh reader of the same files.
        let reopened = KripkeStore::open(dir.path()).unwrap();
        assert_eq!(reopened.state_count(), 4);
        assert!(reopened.validate().is_empty());
    }

    #[test]
    fn seriality_single_deadlock() {
        let dir = TempDir::new().unwrap();
        let records = vec![
            StateRecord::new(StateId(0), vec![1], vec![StateId(0)]),
            StateRecord::new(StateId(3), vec![2], vec![StateId(0)]),
        ];
        let initial = [StateId(0)].into_iter().collect();
        let store = KripkeStore::write(dir.path(), 1, records, vec!["a".into()], &initial).unwrap();
        let store = store.ensure_seriality().unwrap();
        let error = store.records().find(|r| r.is_error).unwrap();
        let mut expected = vec![StateId(3), error.id];
        expected.sort_unstable();
        assert_eq!(error.predecessors, expected);
    }

    #[test]
    fn validate_reports_dangling_predecessor() {
        let dir = TempDir::new().unwrap();
        let path = dir.path().join("part-00000");
        fs::write(&path, "0\t1\t0,99\t-\n").unwrap();
        let initial = [StateId(0)].into_iter().collect();
        let store = KripkeStore::load(&[path], &initial, vec!["a".into()]).unwrap();
        let findings = store.validate();
        assert!(findings.contains(&Diagnostic::DanglingPredecessor {
            missing: StateId(99),
            referenced_by: StateId(0),
        }));
    }

    #[test]
    fn validate_reports_mispartitioned_record() {
        let dir = TempDir::new().unwrap();
        let store = demo_store(dir.path());
        drop(store);
        // Rebuild by hand with two partitions, putting every record in
        // file 0 regardless of its hash.
        let sub = dir.path().join("bad");
        fs::create_dir(&sub).unwrap();
        let a = sub.join("part-00000");
        let b = sub.join("part-00001");
        fs::write(&a, "0\t1,0,0\t-\t-\n1\t0,1,0\t0\t-\n2\t0,0,1\t1,2\t-\n").unwrap();
        fs::write(&b, "").unwrap();
        let initial = [StateId(0)].into_iter().collect();
        let store =
            KripkeStore::load(&[a, b], &initial, vec!["a".into(), "b".into(), "c".into()]).unwrap();
        let findings = store.validate();
        assert!(
            findings
                .iter()
                .any(|d| matches!(d, Diagnostic::MisPartitioned { .. })),
            "expected a mis-partition finding, got {findings:?}"
        );
    }

    #[test]
    fn validate_reports_non_serial_states() {
        let dir = TempDir::new().unwrap();
        let records = vec![
            StateRecord::new(StateId(0), vec![1], vec![StateId(0)]),
            StateRecord::new(StateId(3), vec![2], vec![StateId(0)]),
        ];
        let initial = [StateId(0)].into_iter().collect();
        let store = KripkeStore::write(dir.path(), 1, records, vec!["a".into()], &initial).unwrap();
        assert!(store
            .validate()
            .contains(&Diagnostic::NonSerial(StateId(3))));
    }

    #[test]
    fn totality_after_seriality_fixup() {
        let dir = TempDir::new().unwrap();
        let records = vec![
            StateRecord::new(StateId(0), vec![1], vec![]),
            StateRecord::new(StateId(1), vec![2], vec![StateId(0)]),
            StateRecord::new(StateId(2), vec![3], vec![StateId(0)]),
        ];
        let initial = [StateId(0)].into_iter().collect();
        let store = KripkeStore::write(dir.path(), 4, records, vec!["a".into()], &initial).unwrap();
        let store = store.ensure_seriality().unwrap();
        // Every state must now appear in someone's predecessor list.
        for record in store.records() {
            let found = store
                .records()
                .any(|other| other.predecessors.contains(&record.id));
            assert!(found, "state {} still has no successor", record.id);
        }
    }

    #[test]
    fn partition_transparency_of_predecessors() {
        // The same records split over 1 and 4 files yield the same R⁻.
        let records = vec![
            StateRecord::new(StateId(10), vec![1], vec![StateId(30)]),
            StateRecord::new(StateId(20), vec![2], vec![StateId(10), StateId(20)]),
            StateRecord::new(StateId(30), vec![3], vec![StateId(20)]),
        ];
        let initial: BTreeSet<StateId> = [StateId(10)].into_iter().collect();
        let d1 = TempDir::new().unwrap();
        let d4 = TempDir::new().unwrap();
        let s1 =
            KripkeStore::write(d1.path(), 1, records.clone(), vec!["a".into()], &initial).unwrap();
        let s4 = KripkeStore::write(d4.path(), 4, records, vec!["a".into()], &initial).unwrap();
        for w_bits in 0u8..8 {
            let mut w = BTreeSet::new();
            for (bit, id) in [(1, StateId(10)), (2, StateId(20)), (4, StateId(30))] {
                if w_bits & bit != 0 {
                    w.insert(id);
                }
            }
            assert_eq!(s1.predecessors(&w).unwrap(), s4.predecessors(&w).unwrap());
        }
    }
}
