//! Distributed evaluation of normalized CTL formulas.
//!
//! Every operator is one or more engine jobs over partitioned record files:
//!
//! * atomic predicates: one filtering job over the store;
//! * `¬` and `∨`: one join/dedup job each;
//! * `EX φ`: one job — `⟦φ⟧` records emit a `⊥` marker to each of their
//!   predecessors, the store forwards every record, and the reducer keeps
//!   the records that got a marker;
//! * `EG φ`: iterated jobs computing `X ← ⟦φ⟧ ∩ R⁻(X)` downward from
//!   `X = ⟦φ⟧`;
//! * `E[φ U ψ]`: iterated jobs computing `X ← ⟦ψ⟧ ∪ (⟦φ⟧ ∩ R⁻(X))` upward
//!   from `X = ⟦ψ⟧`, optionally emitting markers only for the frontier
//!   `Xᵢ \ Xᵢ₋₁` (each record carries the iteration at which it entered,
//!   appended to its flags column as `@i` while the loop runs).
//!
//! Iterations stop when two consecutive jobs emit the same number of
//! records or the output becomes empty; the descending (EG) and ascending
//! (EU) chain shapes are asserted per iteration, which is what makes the
//! count-based test sound. Results are cached per distinct subformula.

use std::collections::{BTreeSet, HashMap};
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;

use crate::ctl::{AtomicPredicate, NormalFormula, ResolvedPredicate};
use crate::engine::{run_job, Emitter, InputSet, JobSpec, Value};
use crate::hash::partition_for;
use crate::kripke::{partition_file_name, KripkeStore, StateId, StateRecord};
use crate::{Error, Result};

/// A partitioned set of state records satisfying some subformula.
#[derive(Debug, Clone)]
pub struct ResultSet {
    files: Vec<PathBuf>,
    pub cardinality: u64,
}

impl ResultSet {
    pub fn files(&self) -> &[PathBuf] {
        &self.files
    }

    /// All ids in the set, sorted.
    pub fn ids(&self) -> Result<Vec<StateId>> {
        let mut out = Vec::with_capacity(self.cardinality as usize);
        for file in &self.files {
            let text = fs::read_to_string(file).map_err(Error::io_at(file))?;
            for line in text.lines() {
                if line.is_empty() {
                    continue;
                }
                let id = line
                    .split('\t')
                    .next()
                    .and_then(|f| f.parse().ok())
                    .ok_or_else(|| Error::Integrity(format!("malformed result line `{line}`")))?;
                out.push(id);
            }
        }
        out.sort_unstable();
        Ok(out)
    }

    pub fn id_set(&self) -> Result<BTreeSet<StateId>> {
        Ok(self.ids()?.into_iter().collect())
    }
}

/// Writes the records named by `ids` as a fresh result set under `dir`,
/// partitioned like the store. Mostly useful for seeding evaluations in
/// tests and tools.
pub fn materialize(store: &KripkeStore, ids: &BTreeSet<StateId>, dir: &Path) -> Result<ResultSet> {
    fs::create_dir_all(dir).map_err(Error::io_at(dir))?;
    let n = store.num_partitions();
    let mut buckets: Vec<String> = vec![String::new(); n];
    for id in ids {
        let record = store
            .record(*id)
            .ok_or_else(|| Error::Integrity(format!("unknown state id {id}")))?;
        let bucket = &mut buckets[partition_for(*id, n)];
        bucket.push_str(&record.to_line());
        bucket.push('\n');
    }
    let mut files = Vec::with_capacity(n);
    for (i, bucket) in buckets.into_iter().enumerate() {
        let path = dir.join(partition_file_name(i));
        fs::write(&path, bucket).map_err(Error::io_at(&path))?;
        files.push(path);
    }
    Ok(ResultSet {
        files,
        cardinality: ids.len() as u64,
    })
}

#[derive(Debug, Clone, Copy)]
pub struct EvalOptions {
    pub workers: usize,
    /// Emit predecessor markers only for the frontier during EU iterations.
    pub optimized_eu: bool,
}

impl Default for EvalOptions {
    fn default() -> Self {
        EvalOptions {
            workers: 1,
            optimized_eu: true,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct JobStat {
    pub label: String,
    pub seconds: f64,
    pub emitted: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct OperatorStat {
    pub operator: String,
    /// Jobs run for this operator (1 for EX/¬/∨/atomic).
    pub iterations: u64,
    /// Cardinality of each iterate, starting with X₀.
    pub chain: Vec<u64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckReport {
    /// Normalized formula text.
    pub formula: String,
    pub cardinality: u64,
    pub holds_in_initial: bool,
    pub workers: usize,
    pub optimized_eu: bool,
    /// Wall time of the whole evaluation, job submission to last reducer.
    pub wall_seconds: f64,
    pub operators: Vec<OperatorStat>,
    pub jobs: Vec<JobStat>,
}

/// Input roles: which file set a record arrived from is the only membership
/// information the map functions ever get.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Role {
    /// The whole store.
    Store,
    /// Current fixed-point iterate.
    X,
    Phi,
    Psi,
    /// Complement marker set for ¬.
    Mark,
}

/// Evaluates normalized formulas over one store. Holds the scratch
/// directory for the whole run; intermediate iterates are deleted as they
/// are superseded, result sets live until the evaluator is dropped.
pub struct Evaluator<'s> {
    store: &'s KripkeStore,
    opts: EvalOptions,
    run_dir: PathBuf,
    _owned_dir: Option<tempfile::TempDir>,
    job_seq: u64,
    jobs: Vec<JobStat>,
    operators: Vec<OperatorStat>,
    cache: HashMap<String, ResultSet>,
    empty_set: Option<ResultSet>,
}

impl<'s> Evaluator<'s> {
    pub fn new(store: &'s KripkeStore, run_dir: PathBuf, opts: EvalOptions) -> Evaluator<'s> {
        Evaluator {
            store,
            opts,
            run_dir,
            _owned_dir: None,
            job_seq: 0,
            jobs: Vec::new(),
            operators: Vec::new(),
            cache: HashMap::new(),
            empty_set: None,
        }
    }

    /// Like [`new`](Self::new) but with a self-managed scratch directory
    /// under `CTLMR_SPILL_DIR` (or the system temp dir).
    pub fn with_temp_dir(store: &'s KripkeStore, opts: EvalOptions) -> Result<Evaluator<'s>> {
        let parent = std::env::var_os("CTLMR_SPILL_DIR")
            .map(PathBuf::from)
            .unwrap_or_else(std::env::temp_dir);
        fs::create_dir_all(&parent).map_err(Error::io_at(&parent))?;
        let dir = tempfile::Builder::new()
            .prefix("ctlmr-run-")
            .tempdir_in(&parent)?;
        let mut evaluator = Evaluator::new(store, dir.path().to_path_buf(), opts);
        evaluator._owned_dir = Some(dir);
        Ok(evaluator)
    }

    /// Evaluates `f` bottom-up and reports cardinalities, per-operator
    /// iteration chains, and per-job wall times.
    pub fn check(&mut self, f: &NormalFormula) -> Result<(ResultSet, CheckReport)> {
        let started = Instant::now();
        let result = self.eval(f)?;
        let wall_seconds = started.elapsed().as_secs_f64();
        let ids = result.ids()?;
        let holds_in_initial = self
            .store
            .initial_states()
            .iter()
            .all(|id| ids.binary_search(id).is_ok());
        let report = CheckReport {
            formula: f.to_string(),
            cardinality: result.cardinality,
            holds_in_initial,
            workers: self.opts.workers.max(1),
            optimized_eu: self.opts.optimized_eu,
            wall_seconds,
            operators: self.operators.clone(),
            jobs: self.jobs.clone(),
        };
        Ok((result, report))
    }

    /// Evaluates one normalized formula, caching per distinct subformula.
    pub fn eval(&mut self, f: &NormalFormula) -> Result<ResultSet> {
        let key = f.to_string();
        if let Some(hit) = self.cache.get(&key) {
            return Ok(hit.clone());
        }
        let result = match f {
            NormalFormula::Atomic(p) => self.eval_atomic_set(p)?,
            NormalFormula::Not(x) => {
                let inner = self.eval(x)?;
                self.eval_not(&inner)?
            }
            NormalFormula::Or(a, b) => {
                let left = self.eval(a)?;
                let right = self.eval(b)?;
                self.eval_or(&left, &right)?
            }
            NormalFormula::EX(x) => {
                let phi = self.eval(x)?;
                self.eval_ex(&phi)?
            }
            NormalFormula::EG(x) => {
                let phi = self.eval(x)?;
                self.eval_eg(&phi)?
            }
            NormalFormula::EU(a, b) => {
                let phi = self.eval(a)?;
                let psi = self.eval(b)?;
                self.eval_eu(&phi, &psi)?
            }
        };
        self.cache.insert(key, result.clone());
        Ok(result)
    }

    /// `⟦true⟧`: the store's own files.
    pub fn whole_store(&self) -> ResultSet {
        ResultSet {
            files: self.store.partition_files().to_vec(),
            cardinality: self.store.state_count() as u64,
        }
    }

    /// `⟦false⟧`: one empty file per partition.
    pub fn empty_set(&mut self) -> Result<ResultSet> {
        if let Some(set) = &self.empty_set {
            return Ok(set.clone());
        }
        let dir = self.run_dir.join("empty");
        let set = materialize(self.store, &BTreeSet::new(), &dir)?;
        self.empty_set = Some(set.clone());
        Ok(set)
    }

    pub fn job_stats(&self) -> &[JobStat] {
        &self.jobs
    }

    pub fn operator_stats(&self) -> &[OperatorStat] {
        &self.operators
    }

    fn next_job_dir(&mut self, label: &str) -> (String, PathBuf) {
        let name = format!("{:05}-{label}", self.job_seq);
        self.job_seq += 1;
        (name.clone(), self.run_dir.join(name))
    }

    fn run<M, R>(
        &mut self,
        label: &str,
        inputs: Vec<InputSet<Role>>,
        map: M,
        reduce: R,
    ) -> Result<ResultSet>
    where
        M: Fn(Role, StateId, &str, &mut Emitter) -> Result<()> + Sync,
        R: Fn(StateId, &[Value], &mut Emitter) -> Result<()> + Sync,
    {
        let (name, dir) = self.next_job_dir(label);
        let scratch = dir.join("tmp");
        let out = dir.join("out");
        let started = Instant::now();
        let output = run_job(JobSpec {
            name: &name,
            inputs,
            map,
            reduce,
            num_reducers: self.store.num_partitions(),
            workers: self.opts.workers.max(1),
            scratch_dir: &scratch,
            output_dir: &out,
        })?;
        self.jobs.push(JobStat {
            label: name,
            seconds: started.elapsed().as_secs_f64(),
            emitted: output.emitted_pairs,
        });
        Ok(ResultSet {
            files: output.files,
            cardinality: output.emitted_pairs,
        })
    }

    /// States whose record satisfies `p`: a single filtering job.
    pub fn eval_atomic_set(&mut self, p: &AtomicPredicate) -> Result<ResultSet> {
        let resolved: ResolvedPredicate = p.resolve(self.store.place_names())?;
        let result = self.run(
            "atomic",
            vec![InputSet {
                tag: Role::Store,
                files: self.store.partition_files().to_vec(),
            }],
            move |_role, key, line, em| {
                let record = parse_record(line)?;
                if resolved.eval(&record) {
                    em.emit_line(key, line.to_string());
                }
                Ok(())
            },
            |key, values, em| {
                if let Some(line) = first_line(values) {
                    em.emit_line(key, line.to_string());
                }
                Ok(())
            },
        )?;
        self.operators.push(OperatorStat {
            operator: "atomic".into(),
            iterations: 1,
            chain: vec![result.cardinality],
        });
        Ok(result)
    }

    /// `R⁻(⟦φ⟧)` in one job: φ-records mark their predecessors with ⊥, the
    /// store forwards every record, the reducer keeps marked records.
    pub fn eval_ex(&mut self, phi: &ResultSet) -> Result<ResultSet> {
        let result = self.run(
            "ex",
            vec![
                InputSet {
                    tag: Role::Store,
                    files: self.store.partition_files().to_vec(),
                },
                InputSet {
                    tag: Role::Phi,
                    files: phi.files.to_vec(),
                },
            ],
            |role, key, line, em| {
                match role {
                    Role::Phi => {
                        let record = parse_record(line)?;
                        for pred in &record.predecessors {
                            em.emit_bot(*pred);
                        }
                    }
                    _ => em.emit_line(key, line.to_string()),
                }
                Ok(())
            },
            |key, values, em| {
                if values.first().is_some_and(Value::is_bot) {
                    match first_line(values) {
                        Some(line) => em.emit_line(key, line.to_string()),
                        None => {
                            return Err(Error::Integrity(format!(
                                "predecessor id {key} references no stored state"
                            )))
                        }
                    }
                }
                Ok(())
            },
        )?;
        self.operators.push(OperatorStat {
            operator: "EX".into(),
            iterations: 1,
            chain: vec![result.cardinality],
        });
        Ok(result)
    }

    /// Greatest fixed point of `X ↦ ⟦φ⟧ ∩ R⁻(X)`, iterated from `X = ⟦φ⟧`.
    pub fn eval_eg(&mut self, phi: &ResultSet) -> Result<ResultSet> {
        let mut chain = vec![phi.cardinality];
        if phi.cardinality == 0 {
            let result = self.empty_set()?;
            self.operators.push(OperatorStat {
                operator: "EG".into(),
                iterations: 0,
                chain,
            });
            return Ok(result);
        }
        let mut current = phi.clone();
        let mut current_ids = current.ids()?;
        // Directory of `current` when the loop itself produced it; inputs
        // handed in by the caller (possibly cached) are never reaped.
        let mut current_owned: Option<PathBuf> = None;
        let limit = self.store.state_count() as u64;
        let mut iterations = 0u64;
        let result = loop {
            if iterations > limit {
                return Err(Error::Internal(format!(
                    "EG failed to converge within {limit} iterations"
                )));
            }
            iterations += 1;
            let next = self.run(
                "eg",
                vec![
                    InputSet {
                        tag: Role::X,
                        files: current.files.to_vec(),
                    },
                    InputSet {
                        tag: Role::Phi,
                        files: phi.files.to_vec(),
                    },
                ],
                |role, key, line, em| {
                    match role {
                        Role::X => {
                            let record = parse_record(line)?;
                            for pred in &record.predecessors {
                                em.emit_bot(*pred);
                            }
                        }
                        _ => em.emit_line(key, line.to_string()),
                    }
                    Ok(())
                },
                |key, values, em| {
                    if values.first().is_some_and(Value::is_bot) {
                        if let Some(line) = first_line(values) {
                            em.emit_line(key, line.to_string());
                        }
                    }
                    Ok(())
                },
            )?;
            chain.push(next.cardinality);
            let next_ids = next.ids()?;
            if !is_subset(&next_ids, &current_ids) {
                return Err(Error::Internal(
                    "EG iterate is not a subset of its predecessor".into(),
                ));
            }
            let done = next.cardinality == current.cardinality || next.cardinality == 0;
            if let Some(dir) = current_owned.take() {
                let _ = fs::remove_dir_all(dir);
            }
            current_owned = job_dir_of(&next, &self.run_dir);
            current = next;
            current_ids = next_ids;
            if done {
                break current;
            }
        };
        self.operators.push(OperatorStat {
            operator: "EG".into(),
            iterations,
            chain,
        });
        Ok(result)
    }

    /// Least fixed point of `X ↦ ⟦ψ⟧ ∪ (⟦φ⟧ ∩ R⁻(X))`, iterated from
    /// `X = ⟦ψ⟧`. The optimized variant produces byte-identical output.
    pub fn eval_eu(&mut self, phi: &ResultSet, psi: &ResultSet) -> Result<ResultSet> {
        if psi.cardinality == 0 {
            let result = self.empty_set()?;
            self.operators.push(OperatorStat {
                operator: "EU".into(),
                iterations: 0,
                chain: vec![0],
            });
            return Ok(result);
        }
        if self.opts.optimized_eu {
            self.eval_eu_frontier(phi, psi)
        } else {
            self.eval_eu_full(phi, psi)
        }
    }

    fn eval_eu_full(&mut self, phi: &ResultSet, psi: &ResultSet) -> Result<ResultSet> {
        let mut chain = vec![psi.cardinality];
        let mut current = psi.clone();
        let mut current_ids = current.ids()?;
        let mut current_owned: Option<PathBuf> = None;
        let limit = self.store.state_count() as u64;
        let mut iterations = 0u64;
        let result = loop {
            if iterations > limit {
                return Err(Error::Internal(format!(
                    "EU failed to converge within {limit} iterations"
                )));
            }
            iterations += 1;
            let next = self.run(
                "eu",
                vec![
                    InputSet {
                        tag: Role::X,
                        files: current.files.to_vec(),
                    },
                    InputSet {
                        tag: Role::Phi,
                        files: phi.files.to_vec(),
                    },
                    InputSet {
                        tag: Role::Psi,
                        files: psi.files.to_vec(),
                    },
                ],
                |role, key, line, em| {
                    match role {
                        Role::X => {
                            let record = parse_record(line)?;
                            for pred in &record.predecessors {
                                em.emit_bot(*pred);
                            }
                        }
                        Role::Psi => {
                            // ψ-states re-enter X unconditionally: the
                            // self-marker makes the reduce guard uniform.
                            em.emit_bot(key);
                            em.emit_line(key, line.to_string());
                        }
                        _ => em.emit_line(key, line.to_string()),
                    }
                    Ok(())
                },
                |key, values, em| {
                    if values.first().is_some_and(Value::is_bot) {
                        if let Some(line) = first_line(values) {
                            em.emit_line(key, line.to_string());
                        }
                    }
                    Ok(())
                },
            )?;
            chain.push(next.cardinality);
            let next_ids = next.ids()?;
            if !is_subset(&current_ids, &next_ids) {
                return Err(Error::Internal(
                    "EU iterate does not contain its predecessor".into(),
                ));
            }
            let done = next.cardinality == current.cardinality;
            if let Some(dir) = current_owned.take() {
                let _ = fs::remove_dir_all(dir);
            }
            current_owned = job_dir_of(&next, &self.run_dir);
            current = next;
            current_ids = next_ids;
            if done {
                break current;
            }
        };
        self.operators.push(OperatorStat {
            operator: "EU".into(),
            iterations,
            chain,
        });
        Ok(result)
    }

    /// Frontier variant: only records that entered X in the previous
    /// iteration emit predecessor markers; every X record is carried
    /// forward with the iteration stamp it first entered at.
    fn eval_eu_frontier(&mut self, phi: &ResultSet, psi: &ResultSet) -> Result<ResultSet> {
        let mut chain = vec![psi.cardinality];
        let (mut current, stamp_dir) = self.stamp_set(psi, 0)?;
        let mut current_ids = current.ids()?;
        let mut current_owned: Option<PathBuf> = Some(stamp_dir);
        let limit = self.store.state_count() as u64;
        let mut iterations = 0u64;
        let stamped = loop {
            if iterations > limit {
                return Err(Error::Internal(format!(
                    "EU failed to converge within {limit} iterations"
                )));
            }
            let frontier = iterations;
            iterations += 1;
            let entering = iterations;
            let next = self.run(
                "eu-frontier",
                vec![
                    InputSet {
                        tag: Role::X,
                        files: current.files.to_vec(),
                    },
                    InputSet {
                        tag: Role::Phi,
                        files: phi.files.to_vec(),
                    },
                ],
                move |role, key, line, em| {
                    match role {
                        Role::X => {
                            let (base, stamp) = split_stamp(line);
                            if stamp == Some(frontier) {
                                let record = parse_record(base)?;
                                for pred in &record.predecessors {
                                    em.emit_bot(*pred);
                                }
                            }
                            em.emit_line(key, line.to_string());
                        }
                        _ => em.emit_line(key, line.to_string()),
                    }
                    Ok(())
                },
                move |key, values, em| {
                    let carried = values
                        .iter()
                        .filter_map(Value::as_line)
                        .find(|line| split_stamp(line).1.is_some());
                    if let Some(line) = carried {
                        em.emit_line(key, line.to_string());
                    } else if values.first().is_some_and(Value::is_bot) {
                        if let Some(line) = first_line(values) {
                            em.emit_line(key, format!("{line}@{entering}"));
                        }
                    }
                    Ok(())
                },
            )?;
            chain.push(next.cardinality);
            let next_ids = next.ids()?;
            if !is_subset(&current_ids, &next_ids) {
                return Err(Error::Internal(
                    "EU iterate does not contain its predecessor".into(),
                ));
            }
            let done = next.cardinality == current.cardinality;
            if let Some(dir) = current_owned.take() {
                let _ = fs::remove_dir_all(dir);
            }
            current_owned = job_dir_of(&next, &self.run_dir);
            current = next;
            current_ids = next_ids;
            if done {
                break current;
            }
        };
        let result = self.strip_stamps(&stamped)?;
        if let Some(dir) = current_owned.take() {
            let _ = fs::remove_dir_all(dir);
        }
        self.operators.push(OperatorStat {
            operator: "EU".into(),
            iterations,
            chain,
        });
        Ok(result)
    }

    /// Complement: keep store records that received no marker from `x`.
    pub fn eval_not(&mut self, x: &ResultSet) -> Result<ResultSet> {
        let result = self.run(
            "not",
            vec![
                InputSet {
                    tag: Role::Store,
                    files: self.store.partition_files().to_vec(),
                },
                InputSet {
                    tag: Role::Mark,
                    files: x.files.to_vec(),
                },
            ],
            |role, key, line, em| {
                match role {
                    Role::Mark => em.emit_bot(key),
                    _ => em.emit_line(key, line.to_string()),
                }
                Ok(())
            },
            |key, values, em| {
                if !values.first().is_some_and(Value::is_bot) {
                    if let Some(line) = first_line(values) {
                        em.emit_line(key, line.to_string());
                    }
                }
                Ok(())
            },
        )?;
        self.operators.push(OperatorStat {
            operator: "not".into(),
            iterations: 1,
            chain: vec![result.cardinality],
        });
        Ok(result)
    }

    /// Union: forward both sets, deduplicate by key.
    pub fn eval_or(&mut self, x: &ResultSet, y: &ResultSet) -> Result<ResultSet> {
        let result = self.run(
            "or",
            vec![
                InputSet {
                    tag: Role::Phi,
                    files: x.files.to_vec(),
                },
                InputSet {
                    tag: Role::Psi,
                    files: y.files.to_vec(),
                },
            ],
            |_role, key, line, em| {
                em.emit_line(key, line.to_string());
                Ok(())
            },
            |key, values, em| {
                if let Some(line) = first_line(values) {
                    em.emit_line(key, line.to_string());
                }
                Ok(())
            },
        )?;
        self.operators.push(OperatorStat {
            operator: "or".into(),
            iterations: 1,
            chain: vec![result.cardinality],
        });
        Ok(result)
    }

    /// Copies `set` with `@stamp` appended to every record's flags column.
    fn stamp_set(&mut self, set: &ResultSet, stamp: u64) -> Result<(ResultSet, PathBuf)> {
        let (_, dir) = self.next_job_dir("eu-x0");
        fs::create_dir_all(&dir).map_err(Error::io_at(&dir))?;
        let mut files = Vec::with_capacity(set.files.len());
        for (i, file) in set.files.iter().enumerate() {
            let text = fs::read_to_string(file).map_err(Error::io_at(file))?;
            let mut out = String::with_capacity(text.len());
            for line in text.lines() {
                if line.is_empty() {
                    continue;
                }
                out.push_str(line);
                out.push('@');
                out.push_str(&stamp.to_string());
                out.push('\n');
            }
            let path = dir.join(partition_file_name(i));
            fs::write(&path, out).map_err(Error::io_at(&path))?;
            files.push(path);
        }
        Ok((
            ResultSet {
                files,
                cardinality: set.cardinality,
            },
            dir,
        ))
    }

    /// Drops the `@stamp` suffixes, yielding canonical result files.
    fn strip_stamps(&mut self, set: &ResultSet) -> Result<ResultSet> {
        let (_, dir) = self.next_job_dir("eu-result");
        fs::create_dir_all(&dir).map_err(Error::io_at(&dir))?;
        let mut files = Vec::with_capacity(set.files.len());
        for (i, file) in set.files.iter().enumerate() {
            let text = fs::read_to_string(file).map_err(Error::io_at(file))?;
            let mut out = String::with_capacity(text.len());
            for line in text.lines() {
                if line.is_empty() {
                    continue;
                }
                out.push_str(split_stamp(line).0);
                out.push('\n');
            }
            let path = dir.join(partition_file_name(i));
            fs::write(&path, out).map_err(Error::io_at(&path))?;
            files.push(path);
        }
        Ok(ResultSet {
            files,
            cardinality: set.cardinality,
        })
    }
}

fn parse_record(line: &str) -> Result<StateRecord> {
    StateRecord::parse(line).map_err(Error::Integrity)
}

fn first_line(values: &[Value]) -> Option<&str> {
    values.iter().find_map(Value::as_line)
}

/// Splits a trailing `@iteration` stamp off a record line, if present.
/// Plain record lines never contain `@`.
fn split_stamp(line: &str) -> (&str, Option<u64>) {
    if let Some((base, stamp)) = line.rsplit_once('@') {
        if let Ok(value) = stamp.parse::<u64>() {
            return (base, Some(value));
        }
    }
    (line, None)
}

/// `sub ⊆ sup` for sorted id slices.
fn is_subset(sub: &[StateId], sup: &[StateId]) -> bool {
    let mut it = sup.iter();
    'outer: for x in sub {
        for y in it.by_ref() {
            match y.cmp(x) {
                std::cmp::Ordering::Less => continue,
                std::cmp::Ordering::Equal => continue 'outer,
                std::cmp::Ordering::Greater => return false,
            }
        }
        return false;
    }
    true
}

/// The job directory a result set lives in, if it is one of ours (used to
/// reap superseded fixed-point iterates; store-backed sets return None).
fn job_dir_of(set: &ResultSet, run_dir: &Path) -> Option<PathBuf> {
    let first = set.files.first()?;
    let dir = first.parent()?;
    if dir.starts_with(run_dir) {
        // files live in <run>/<job>/out; remove the whole job directory.
        let job = dir.parent()?;
        if job.starts_with(run_dir) && job != run_dir {
            return Some(job.to_path_buf());
        }
    }
    None
}
