//! Place/transition Petri nets and reachability-graph construction.
//!
//! `build` explores all markings reachable from the initial marking by a
//! breadth-first frontier search, records for every fired edge `s → s'` the
//! identifier of `s` in the predecessor list of `s'`, absorbs deadlock
//! states into a self-looping error state, and writes the result as a
//! partitioned store.
//!
//! Net description format (line oriented, `#` starts a comment):
//!
//! ```text
//! places: a, b, c
//! initial: a=1
//! transition t1: pre a=1; post b=1
//! ```
//!
//! Places missing from `initial` or from a `pre`/`post` list default to 0.

use std::collections::{BTreeSet, HashMap, VecDeque};
use std::path::Path;

use crate::hash::marking_state_id;
use crate::kripke::{KripkeStore, StateId, StateRecord};
use crate::{Error, Result};

/// Token counts per place, indexed like `PetriNet::places`.
pub type Marking = Vec<u32>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Transition {
    pub name: String,
    pub pre: Vec<u32>,
    pub post: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PetriNet {
    pub places: Vec<String>,
    pub transitions: Vec<Transition>,
    pub initial_marking: Marking,
}

impl PetriNet {
    /// Structural validation: vector arities and at least one transition.
    pub fn validate(&self) -> Result<()> {
        let n = self.places.len();
        if n == 0 {
            return Err(Error::Contract("net has no places".into()));
        }
        if self.transitions.is_empty() {
            return Err(Error::Contract("net has no transitions".into()));
        }
        if self.initial_marking.len() != n {
            return Err(Error::Contract(format!(
                "initial marking has {} entries, expected {n}",
                self.initial_marking.len()
            )));
        }
        for t in &self.transitions {
            if t.pre.len() != n || t.post.len() != n {
                return Err(Error::Contract(format!(
                    "transition `{}` has pre/post arity {}/{}, expected {n}",
                    t.name,
                    t.pre.len(),
                    t.post.len()
                )));
            }
        }
        Ok(())
    }

    /// Renders the net in the text format accepted by [`parse_net`].
    pub fn to_text(&self) -> String {
        fn sparse(places: &[String], v: &[u32]) -> String {
            let parts: Vec<String> = places
                .iter()
                .zip(v)
                .filter(|(_, &c)| c > 0)
                .map(|(p, c)| format!("{p}={c}"))
                .collect();
            parts.join(", ")
        }
        let mut out = String::new();
        out.push_str(&format!("places: {}\n", self.places.join(", ")));
        out.push_str(&format!(
            "initial: {}\n",
            sparse(&self.places, &self.initial_marking)
        ));
        for t in &self.transitions {
            out.push_str(&format!(
                "transition {}: pre {}; post {}\n",
                t.name,
                sparse(&self.places, &t.pre),
                sparse(&self.places, &t.post)
            ));
        }
        out
    }
}

/// Indices of the transitions enabled at `m` (componentwise `m >= pre`).
pub fn enabled(net: &PetriNet, m: &Marking) -> Vec<usize> {
    net.transitions
        .iter()
        .enumerate()
        .filter(|(_, t)| t.pre.iter().zip(m).all(|(&need, &have)| have >= need))
        .map(|(i, _)| i)
        .collect()
}

/// Fires transition `t` at `m`: the result is `m - pre(t) + post(t)`.
pub fn fire(net: &PetriNet, m: &Marking, t: usize) -> Result<Marking> {
    let transition = net
        .transitions
        .get(t)
        .ok_or_else(|| Error::Contract(format!("no transition with index {t}")))?;
    let mut out = Vec::with_capacity(m.len());
    for ((&have, &need), &add) in m.iter().zip(&transition.pre).zip(&transition.post) {
        if have < need {
            return Err(Error::Contract(format!(
                "transition `{}` is not enabled",
                transition.name
            )));
        }
        let count = (have - need).checked_add(add).ok_or_else(|| {
            Error::Contract(format!("token count overflow firing `{}`", transition.name))
        })?;
        out.push(count);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy)]
pub struct BuildOptions {
    pub num_partitions: usize,
    /// Abort once more than this many states have been discovered.
    pub bound: Option<usize>,
    /// Refuse to build instead of absorbing deadlocks into an error state.
    pub fail_on_deadlock: bool,
}

impl Default for BuildOptions {
    fn default() -> Self {
        BuildOptions {
            num_partitions: 4,
            bound: None,
            fail_on_deadlock: false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct BuildStats {
    pub states: usize,
    /// Distinct edges of the reachability graph (parallel transitions between
    /// the same pair of markings count once).
    pub edges: usize,
    pub deadlocks: Vec<StateId>,
    pub error_state: Option<StateId>,
}

/// Explores the reachability graph of `net` and writes it to `out_dir` as a
/// partitioned store with predecessor-list edges. State identifiers are
/// hashes of the canonical marking encoding; a hash collision aborts the
/// build.
pub fn build(
    net: &PetriNet,
    out_dir: &Path,
    opts: &BuildOptions,
) -> Result<(KripkeStore, BuildStats)> {
    net.validate()?;
    if opts.num_partitions == 0 {
        return Err(Error::Contract("partition count must be at least 1".into()));
    }

    // Sparse pre/post views speed up the hot loop on nets with many places.
    type SparseVec = Vec<(usize, u32)>;
    let sparse: Vec<(SparseVec, SparseVec)> = net
        .transitions
        .iter()
        .map(|t| {
            let pre = t
                .pre
                .iter()
                .enumerate()
                .filter(|(_, &c)| c > 0)
                .map(|(i, &c)| (i, c))
                .collect();
            let post = t
                .post
                .iter()
                .enumerate()
                .filter(|(_, &c)| c > 0)
                .map(|(i, &c)| (i, c))
                .collect();
            (pre, post)
        })
        .collect();

    let initial_id = marking_state_id(&net.initial_marking);
    let mut markings: HashMap<StateId, Marking> = HashMap::new();
    let mut preds: HashMap<StateId, Vec<StateId>> = HashMap::new();
    let mut deadlocks: Vec<StateId> = Vec::new();
    let mut queue: VecDeque<StateId> = VecDeque::new();

    markings.insert(initial_id, net.initial_marking.clone());
    queue.push_back(initial_id);

    while let Some(id) = queue.pop_front() {
        let marking = markings[&id].clone();
        let mut any_enabled = false;
        for (pre, post) in &sparse {
            if pre.iter().any(|&(i, need)| marking[i] < need) {
                continue;
            }
            any_enabled = true;
            let mut next = marking.clone();
            for &(i, need) in pre {
                next[i] -= need;
            }
            for &(i, add) in post {
                next[i] = next[i].checked_add(add).ok_or_else(|| {
                    Error::Contract("token count overflow during exploration".into())
                })?;
            }
            let next_id = marking_state_id(&next);
            match markings.get(&next_id) {
                Some(existing) => {
                    if *existing != next {
                        return Err(Error::IdCollision { id: next_id });
                    }
                }
                None => {
                    if let Some(bound) = opts.bound {
                        if markings.len() >= bound {
                            return Err(Error::BoundExceeded {
                                bound,
                                found: markings.len(),
                            });
                        }
                    }
                    markings.insert(next_id, next);
                    queue.push_back(next_id);
                }
            }
            preds.entry(next_id).or_default().push(id);
        }
        if !any_enabled {
            deadlocks.push(id);
        }
    }

    if opts.fail_on_deadlock && !deadlocks.is_empty() {
        return Err(Error::Contract(format!(
            "net deadlocks in {} state(s); rerun without --fail-on-deadlock to absorb them",
            deadlocks.len()
        )));
    }

    deadlocks.sort_unstable();
    let mut records: Vec<StateRecord> = Vec::with_capacity(markings.len() + 1);
    let mut edges = 0usize;
    for (id, marking) in &markings {
        let mut record =
            StateRecord::new(*id, marking.clone(), preds.remove(id).unwrap_or_default());
        record.predecessors.sort_unstable();
        record.predecessors.dedup();
        edges += record.predecessors.len();
        records.push(record);
    }

    let error_state = if deadlocks.is_empty() {
        None
    } else {
        let marking = vec![0; net.places.len()];
        let error_id = crate::hash::error_state_id(&marking);
        if markings.contains_key(&error_id) {
            return Err(Error::IdCollision { id: error_id });
        }
        let mut pred_list = deadlocks.clone();
        pred_list.push(error_id);
        let mut record = StateRecord::new(error_id, marking, pred_list);
        record.is_error = true;
        edges += deadlocks.len() + 1;
        records.push(record);
        Some(error_id)
    };

    let initial: BTreeSet<StateId> = [initial_id].into_iter().collect();
    let store = KripkeStore::write(
        out_dir,
        opts.num_partitions,
        records,
        net.places.clone(),
        &initial,
    )?;
    let stats = BuildStats {
        states: store.state_count(),
        edges,
        deadlocks,
        error_state,
    };
    Ok((store, stats))
}

/// Parses the net description format.
pub fn parse_net(text: &str) -> Result<PetriNet> {
    let mut places: Option<Vec<String>> = None;
    let mut initial: Option<Vec<u32>> = None;
    let mut transitions: Vec<Transition> = Vec::new();

    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let err = |msg: String| Error::NetParse {
            line: lineno + 1,
            msg,
        };
        if let Some(rest) = line.strip_prefix("places:") {
            let names: Vec<String> = rest
                .split(',')
                .map(|s| s.trim().to_string())
                .filter(|s| !s.is_empty())
                .collect();
            if names.is_empty() {
                return Err(err("empty place list".into()));
            }
            let mut seen = BTreeSet::new();
            for name in &names {
                if !seen.insert(name.clone()) {
                    return Err(err(format!("duplicate place `{name}`")));
                }
            }
            places = Some(names);
        } else if let Some(rest) = line.strip_prefix("initial:") {
            let places = places
                .as_ref()
                .ok_or_else(|| err("`initial:` before `places:`".into()))?;
            initial = Some(parse_assignments(rest, places, lineno + 1)?);
        } else if let Some(rest) = line.strip_prefix("transition") {
            let places = places
                .as_ref()
                .ok_or_else(|| err("`transition` before `places:`".into()))?;
            let (name, body) = rest
                .split_once(':')
                .ok_or_else(|| err("expected `transition NAME: pre ...; post ...`".into()))?;
            let name = name.trim();
            if name.is_empty() {
                return Err(err("transition needs a name".into()));
            }
            let mut pre = vec![0; places.len()];
            let mut post = vec![0; places.len()];
            for part in body.split(';') {
                let part = part.trim();
                if part.is_empty() {
                    continue;
                }
                if let Some(rest) = part.strip_prefix("pre") {
                    pre = parse_assignments(rest, places, lineno + 1)?;
                } else if let Some(rest) = part.strip_prefix("post") {
                    post = parse_assignments(rest, places, lineno + 1)?;
                } else {
                    return Err(err(format!(
                        "expected `pre ...` or `post ...`, found `{part}`"
                    )));
                }
            }
            transitions.push(Transition {
                name: name.to_string(),
                pre,
                post,
            });
        } else {
            return Err(err(format!("unrecognized line `{line}`")));
        }
    }

    let places = places.ok_or(Error::NetParse {
        line: 0,
        msg: "missing `places:` line".into(),
    })?;
    let initial = initial.unwrap_or_else(|| vec![0; places.len()]);
    let net = PetriNet {
        places,
        transitions,
        initial_marking: initial,
    };
    net.validate()?;
    Ok(net)
}

fn parse_assignments(text: &str, places: &[String], line: usize) -> Result<Vec<u32>> {
    let mut out = vec![0u32; places.len()];
    let err = |msg: String| Error::NetParse { line, msg };
    for part in text.split(',') {
        let part = part.trim();
        if part.is_empty() {
            continue;
        }
        let (name, count) = part
            .split_once('=')
            .ok_or_else(|| err(format!("expected `place=count`, found `{part}`")))?;
        let name = name.trim();
        let index = places
            .iter()
            .position(|p| p == name)
            .ok_or_else(|| err(format!("unknown place `{name}`")))?;
        let count: u32 = count
            .trim()
            .parse()
            .map_err(|e| err(format!("bad count for `{name}`: {e}")))?;
        out[index] = count;
    }
    Ok(out)
}
