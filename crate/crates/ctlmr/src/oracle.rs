//! Independent sequential ground truth.
//!
//! `oracle_check` evaluates the full eight-operator surface syntax directly
//! on an in-memory structure by fixed-point iteration over successor lists:
//! the existential operators from their `EX`-based transformers, the
//! universal ones from `AX`-based transformers, with no normalization step
//! and no code shared with the distributed evaluator. Agreement between the
//! two paths is therefore evidence, not tautology.
//!
//! The module also hosts the seeded random structure and formula
//! generators used for differential testing.

use std::collections::{BTreeSet, HashMap};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};

use crate::ctl::{AtomicPredicate, Cmp, Formula, ResolvedPredicate, Term};
use crate::hash::marking_state_id;
use crate::kripke::{KripkeStore, StateId, StateRecord};
use crate::{Error, Result};

/// Largest store the oracle will ingest. Beyond this, dense in-memory
/// evaluation stops being the cheap reference point it is meant to be.
pub const MAX_ORACLE_STATES: usize = 200_000;

/// Explicit in-memory Kripke structure with mutually consistent successor
/// and predecessor lists.
#[derive(Debug, Clone)]
pub struct DenseKripke {
    pub place_names: Vec<String>,
    ids: Vec<StateId>,
    succ: Vec<Vec<u32>>,
    pred: Vec<Vec<u32>>,
    markings: Vec<Vec<u32>>,
    error_flags: Vec<bool>,
    initial: Vec<u32>,
}

impl DenseKripke {
    pub fn state_count(&self) -> usize {
        self.ids.len()
    }

    pub fn ids(&self) -> &[StateId] {
        &self.ids
    }

    pub fn initial_ids(&self) -> BTreeSet<StateId> {
        self.initial.iter().map(|&i| self.ids[i as usize]).collect()
    }

    /// Merges a partitioned store into dense form. Size-guarded.
    pub fn from_store(store: &KripkeStore) -> Result<DenseKripke> {
        if store.state_count() > MAX_ORACLE_STATES {
            return Err(Error::Contract(format!(
                "store has {} states; the oracle is limited to {MAX_ORACLE_STATES}",
                store.state_count()
            )));
        }
        let ids: Vec<StateId> = store.records().map(|r| r.id).collect();
        let index: HashMap<StateId, usize> =
            ids.iter().enumerate().map(|(i, &id)| (id, i)).collect();
        let n = ids.len();
        let mut succ: Vec<Vec<u32>> = vec![Vec::new(); n];
        let mut pred: Vec<Vec<u32>> = vec![Vec::new(); n];
        let mut markings = Vec::with_capacity(n);
        let mut error_flags = Vec::with_capacity(n);
        for (i, record) in store.records().enumerate() {
            markings.push(record.marking.clone());
            error_flags.push(record.is_error);
            for p in &record.predecessors {
                let j = *index.get(p).ok_or_else(|| {
                    Error::Integrity(format!("dangling predecessor {p} of {}", record.id))
                })?;
                pred[i].push(j as u32);
                succ[j].push(i as u32);
            }
        }
        for list in succ.iter_mut().chain(pred.iter_mut()) {
            list.sort_unstable();
            list.dedup();
        }
        let initial = store
            .initial_states()
            .iter()
            .map(|id| {
                index
                    .get(id)
                    .map(|&i| i as u32)
                    .ok_or_else(|| Error::Integrity(format!("initial state {id} not in store")))
            })
            .collect::<Result<Vec<u32>>>()?;
        Ok(DenseKripke {
            place_names: store.place_names().to_vec(),
            ids,
            succ,
            pred,
            markings,
            error_flags,
            initial,
        })
    }

    /// Writes the structure out as a partitioned store (used to feed random
    /// structures to the distributed path).
    pub fn write_store(&self, dir: &std::path::Path, num_partitions: usize) -> Result<KripkeStore> {
        let records: Vec<StateRecord> = (0..self.state_count())
            .map(|i| {
                let preds = self.pred[i].iter().map(|&j| self.ids[j as usize]).collect();
                let mut r = StateRecord::new(self.ids[i], self.markings[i].clone(), preds);
                r.is_error = self.error_flags[i];
                r
            })
            .collect();
        let initial = self.initial_ids();
        KripkeStore::write(
            dir,
            num_partitions,
            records,
            self.place_names.clone(),
            &initial,
        )
    }

    fn record_view(&self, i: usize) -> StateRecord {
        StateRecord {
            id: self.ids[i],
            marking: self.markings[i].clone(),
            predecessors: Vec::new(),
            is_error: self.error_flags[i],
        }
    }

    fn assert_serial(&self) -> Result<()> {
        for (i, succ) in self.succ.iter().enumerate() {
            if succ.is_empty() {
                return Err(Error::Contract(format!(
                    "structure is not serial: state {} has no successor",
                    self.ids[i]
                )));
            }
        }
        Ok(())
    }
}

/// All states satisfying `f`, by direct recursive evaluation.
pub fn oracle_check(k: &DenseKripke, f: &Formula) -> Result<BTreeSet<StateId>> {
    k.assert_serial()?;
    let sat = eval(k, f)?;
    Ok(sat
        .iter()
        .enumerate()
        .filter(|(_, &b)| b)
        .map(|(i, _)| k.ids[i])
        .collect())
}

fn eval(k: &DenseKripke, f: &Formula) -> Result<Vec<bool>> {
    let n = k.state_count();
    Ok(match f {
        Formula::Atomic(p) => {
            let resolved: ResolvedPredicate = p.resolve(&k.place_names)?;
            (0..n).map(|i| resolved.eval(&k.record_view(i))).collect()
        }
        Formula::Not(x) => {
            let mut v = eval(k, x)?;
            v.iter_mut().for_each(|b| *b = !*b);
            v
        }
        Formula::And(a, b) => zip_with(eval(k, a)?, eval(k, b)?, |x, y| x && y),
        Formula::Or(a, b) => zip_with(eval(k, a)?, eval(k, b)?, |x, y| x || y),
        Formula::EX(x) => ex(k, &eval(k, x)?),
        Formula::AX(x) => ax(k, &eval(k, x)?),
        Formula::EF(x) => {
            // μX. φ ∨ EX X, from ∅.
            let phi = eval(k, x)?;
            lfp(k, |current| {
                let step = ex(k, current);
                zip_with(phi.clone(), step, |a, b| a || b)
            })
        }
        Formula::AF(x) => {
            let phi = eval(k, x)?;
            lfp(k, |current| {
                let step = ax(k, current);
                zip_with(phi.clone(), step, |a, b| a || b)
            })
        }
        Formula::EG(x) => {
            // νX. φ ∧ EX X, from S.
            let phi = eval(k, x)?;
            gfp(k, |current| {
                let step = ex(k, current);
                zip_with(phi.clone(), step, |a, b| a && b)
            })
        }
        Formula::AG(x) => {
            let phi = eval(k, x)?;
            gfp(k, |current| {
                let step = ax(k, current);
                zip_with(phi.clone(), step, |a, b| a && b)
            })
        }
        Formula::EU(a, b) => {
            // μX. ψ ∨ (φ ∧ EX X), from ∅.
            let phi = eval(k, a)?;
            let psi = eval(k, b)?;
            lfp(k, |current| {
                let step = ex(k, current);
                (0..n).map(|i| psi[i] || (phi[i] && step[i])).collect()
            })
        }
        Formula::AU(a, b) => {
            let phi = eval(k, a)?;
            let psi = eval(k, b)?;
            lfp(k, |current| {
                let step = ax(k, current);
                (0..n).map(|i| psi[i] || (phi[i] && step[i])).collect()
            })
        }
    })
}

fn zip_with(a: Vec<bool>, b: Vec<bool>, f: impl Fn(bool, bool) -> bool) -> Vec<bool> {
    a.into_iter().zip(b).map(|(x, y)| f(x, y)).collect()
}

fn ex(k: &DenseKripke, x: &[bool]) -> Vec<bool> {
    k.succ
        .iter()
        .map(|succ| succ.iter().any(|&t| x[t as usize]))
        .collect()
}

fn ax(k: &DenseKripke, x: &[bool]) -> Vec<bool> {
    k.succ
        .iter()
        .map(|succ| succ.iter().all(|&t| x[t as usize]))
        .collect()
}

/// Least fixed point from ∅; panics if it fails to settle within |S|+1
/// steps, which a monotonic transformer cannot do.
fn lfp(k: &DenseKripke, tau: impl Fn(&[bool]) -> Vec<bool>) -> Vec<bool> {
    let mut current = vec![false; k.state_count()];
    for _ in 0..=k.state_count() {
        let next = tau(&current);
        if next == current {
            return current;
        }
        current = next;
    }
    panic!("least fixed point did not converge within |S| iterations");
}

/// Greatest fixed point from S.
fn gfp(k: &DenseKripke, tau: impl Fn(&[bool]) -> Vec<bool>) -> Vec<bool> {
    let mut current = vec![true; k.state_count()];
    for _ in 0..=k.state_count() {
        let next = tau(&current);
        if next == current {
            return current;
        }
        current = next;
    }
    panic!("greatest fixed point did not converge within |S| iterations");
}

/// Place vocabulary of generated structures: `ix` holds the state index
/// (making every marking unique), `a`, `b`, `c` hold small random counts.
pub const RANDOM_PLACES: [&str; 4] = ["ix", "a", "b", "c"];
const RANDOM_TOKEN_RANGE: u32 = 4;

/// Seeded random serial structure with roughly `avg_degree` successors per
/// state. Successor-less states get a self-loop.
pub fn random_kripke(n: usize, avg_degree: f64, seed: u64) -> DenseKripke {
    assert!(n >= 1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let p = (avg_degree / n as f64).clamp(0.0, 1.0);
    let binomial = Binomial::new(n as u64, p).expect("valid probability");

    let mut succ: Vec<Vec<u32>> = vec![Vec::new(); n];
    let mut pred: Vec<Vec<u32>> = vec![Vec::new(); n];
    let mut all: Vec<u32> = (0..n as u32).collect();
    for (i, out) in succ.iter_mut().enumerate() {
        let degree = binomial.sample(&mut rng) as usize;
        let (chosen, _) = all.partial_shuffle(&mut rng, degree);
        out.extend_from_slice(chosen);
        if out.is_empty() {
            out.push(i as u32);
        }
        out.sort_unstable();
        out.dedup();
    }
    for (i, out) in succ.iter().enumerate() {
        for &t in out {
            pred[t as usize].push(i as u32);
        }
    }
    for list in pred.iter_mut() {
        list.sort_unstable();
        list.dedup();
    }

    let mut markings = Vec::with_capacity(n);
    for i in 0..n {
        let marking = vec![
            i as u32,
            rng.gen_range(0..=RANDOM_TOKEN_RANGE),
            rng.gen_range(0..=RANDOM_TOKEN_RANGE),
            rng.gen_range(0..=RANDOM_TOKEN_RANGE),
        ];
        markings.push(marking);
    }
    let ids: Vec<StateId> = markings.iter().map(|m| marking_state_id(m)).collect();
    DenseKripke {
        place_names: RANDOM_PLACES.iter().map(|s| s.to_string()).collect(),
        ids,
        succ,
        pred,
        markings,
        error_flags: vec![false; n],
        initial: vec![0],
    }
}

/// Seeded random formula over the full surface syntax, drawn uniformly over
/// the eight temporal operators, the boolean connectives, and atomic picks
/// from a pool of `num_predicates` comparisons (plus the two constants).
pub fn random_formula(depth: usize, num_predicates: usize, seed: u64) -> Formula {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pool: Vec<AtomicPredicate> = vec![AtomicPredicate::True, AtomicPredicate::False];
    for _ in 0..num_predicates.max(1) {
        pool.push(random_comparison(&mut rng));
    }
    gen_formula(&mut rng, &pool, depth)
}

fn random_comparison(rng: &mut ChaCha8Rng) -> AtomicPredicate {
    let place = RANDOM_PLACES[rng.gen_range(0..RANDOM_PLACES.len())];
    let lhs = Term::Place(place.to_string());
    let rhs = if rng.gen_bool(0.5) {
        Term::Const(i64::from(rng.gen_range(0..=RANDOM_TOKEN_RANGE)))
    } else {
        Term::Place(RANDOM_PLACES[rng.gen_range(0..RANDOM_PLACES.len())].to_string())
    };
    let op = match rng.gen_range(0..6) {
        0 => Cmp::Eq,
        1 => Cmp::Ne,
        2 => Cmp::Lt,
        3 => Cmp::Le,
        4 => Cmp::Gt,
        _ => Cmp::Ge,
    };
    AtomicPredicate::Cmp(lhs, op, rhs)
}

fn gen_formula(rng: &mut ChaCha8Rng, pool: &[AtomicPredicate], depth: usize) -> Formula {
    if depth == 0 {
        return Formula::Atomic(pool[rng.gen_range(0..pool.len())].clone());
    }
    let sub = |rng: &mut ChaCha8Rng| Box::new(gen_formula(rng, pool, depth - 1));
    match rng.gen_range(0..12) {
        0 => Formula::Atomic(pool[rng.gen_range(0..pool.len())].clone()),
        1 => Formula::Not(sub(rng)),
        2 => Formula::And(sub(rng), sub(rng)),
        3 => Formula::Or(sub(rng), sub(rng)),
        4 => Formula::AX(sub(rng)),
        5 => Formula::EX(sub(rng)),
        6 => Formula::AF(sub(rng)),
        7 => Formula::EF(sub(rng)),
        8 => Formula::AG(sub(rng)),
        9 => Formula::EG(sub(rng)),
        10 => Formula::AU(sub(rng), sub(rng)),
        _ => Formula::EU(sub(rng), sub(rng)),
    }
}
