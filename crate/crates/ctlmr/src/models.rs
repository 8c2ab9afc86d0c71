//! Bundled parameterized benchmark nets.
//!
//! Three families shaped like classic concurrency benchmarks, each with a
//! tunable state-space size, plus three tiny fixed nets used in examples
//! and tests. Aggregate counter places (capitalized names such as `Queue`
//! or `client_waiting`) track totals across processes so that properties
//! can compare whole-system quantities with `m(...)` terms.

use crate::statespace::{PetriNet, Transition};
use crate::{Error, Result};

/// `P` processors compete for a single shared bus to access a memory.
/// Each processor cycles idle → queued → active → idle; the bus token
/// admits at most one active processor. Strongly connected, no deadlocks;
/// `2^(P-1) * (P + 2)` reachable states.
///
/// Aggregate places: `Queue` (queued processors), `Active` (0 or 1),
/// `Bus` and `Memory` (1 when free).
pub fn shared_memory(processors: usize) -> Result<PetriNet> {
    if processors == 0 {
        return Err(Error::Contract(
            "shared_memory needs at least 1 processor".into(),
        ));
    }
    let p = processors;
    let mut places: Vec<String> = Vec::new();
    for i in 1..=p {
        places.push(format!("idle_{i}"));
        places.push(format!("queued_{i}"));
        places.push(format!("active_{i}"));
    }
    places.extend([
        "Bus".into(),
        "Memory".into(),
        "Queue".into(),
        "Active".into(),
    ]);
    let index = |name: &str| places.iter().position(|x| x == name).unwrap();

    let mut net = PetriNet {
        places: places.clone(),
        transitions: Vec::new(),
        initial_marking: vec![0; places.len()],
    };
    for i in 1..=p {
        net.initial_marking[index(&format!("idle_{i}"))] = 1;
    }
    net.initial_marking[index("Bus")] = 1;
    net.initial_marking[index("Memory")] = 1;

    let n = places.len();
    for i in 1..=p {
        let mut pre = vec![0; n];
        let mut post = vec![0; n];
        pre[index(&format!("idle_{i}"))] = 1;
        post[index(&format!("queued_{i}"))] = 1;
        post[index("Queue")] = 1;
        net.transitions.push(Transition {
            name: format!("request_{i}"),
            pre,
            post,
        });

        let mut pre = vec![0; n];
        let mut post = vec![0; n];
        pre[index(&format!("queued_{i}"))] = 1;
        pre[index("Queue")] = 1;
        pre[index("Bus")] = 1;
        pre[index("Memory")] = 1;
        post[index(&format!("active_{i}"))] = 1;
        post[index("Active")] = 1;
        net.transitions.push(Transition {
            name: format!("acquire_{i}"),
            pre,
            post,
        });

        let mut pre = vec![0; n];
        let mut post = vec![0; n];
        pre[index(&format!("active_{i}"))] = 1;
        pre[index("Active")] = 1;
        post[index(&format!("idle_{i}"))] = 1;
        post[index("Bus")] = 1;
        post[index("Memory")] = 1;
        net.transitions.push(Transition {
            name: format!("release_{i}"),
            pre,
            post,
        });
    }
    Ok(net)
}

/// `N` processes guard a critical section with raise-flag/check-others
/// flags and no tie-breaking, so all processes raising their flags at once
/// deadlocks (every run with `N >= 2` reaches it). Per process `i`:
/// `idle_i`, `wait_i`, `crit_i`, plus `flag_i` and its complement
/// `nflag_i`; entering requires every other flag to be down.
pub fn mutex(processes: usize) -> Result<PetriNet> {
    if processes == 0 {
        return Err(Error::Contract("mutex needs at least 1 process".into()));
    }
    let np = processes;
    let mut places: Vec<String> = Vec::new();
    for i in 1..=np {
        places.push(format!("idle_{i}"));
        places.push(format!("wait_{i}"));
        places.push(format!("crit_{i}"));
        places.push(format!("flag_{i}"));
        places.push(format!("nflag_{i}"));
    }
    let index = |name: &str| places.iter().position(|x| x == name).unwrap();

    let n = places.len();
    let mut net = PetriNet {
        places: places.clone(),
        transitions: Vec::new(),
        initial_marking: vec![0; n],
    };
    for i in 1..=np {
        net.initial_marking[index(&format!("idle_{i}"))] = 1;
        net.initial_marking[index(&format!("nflag_{i}"))] = 1;
    }

    for i in 1..=np {
        let mut pre = vec![0; n];
        let mut post = vec![0; n];
        pre[index(&format!("idle_{i}"))] = 1;
        pre[index(&format!("nflag_{i}"))] = 1;
        post[index(&format!("wait_{i}"))] = 1;
        post[index(&format!("flag_{i}"))] = 1;
        net.transitions.push(Transition {
            name: format!("raise_{i}"),
            pre,
            post,
        });

        // Read arcs on the other processes' nflag places.
        let mut pre = vec![0; n];
        let mut post = vec![0; n];
        pre[index(&format!("wait_{i}"))] = 1;
        post[index(&format!("crit_{i}"))] = 1;
        for j in 1..=np {
            if j != i {
                pre[index(&format!("nflag_{j}"))] = 1;
                post[index(&format!("nflag_{j}"))] = 1;
            }
        }
        net.transitions.push(Transition {
            name: format!("enter_{i}"),
            pre,
            post,
        });

        let mut pre = vec![0; n];
        let mut post = vec![0; n];
        pre[index(&format!("crit_{i}"))] = 1;
        pre[index(&format!("flag_{i}"))] = 1;
        post[index(&format!("idle_{i}"))] = 1;
        post[index(&format!("nflag_{i}"))] = 1;
        net.transitions.push(Transition {
            name: format!("exit_{i}"),
            pre,
            post,
        });
    }
    Ok(net)
}

/// `C` clients send requests through a shared queue to `S` servers; a
/// notified client and its server return to idle together. Live (no
/// deadlocks). Aggregate places `client_idle`, `client_waiting`,
/// `client_request`, `server_idle`, `server_busy`, `server_done` track the
/// totals the properties compare.
pub fn load_balancer(clients: usize, servers: usize) -> Result<PetriNet> {
    if clients == 0 || servers == 0 {
        return Err(Error::Contract(
            "load_balancer needs at least 1 client and 1 server".into(),
        ));
    }
    let mut places: Vec<String> = Vec::new();
    for i in 1..=clients {
        places.push(format!("cidle_{i}"));
        places.push(format!("cwait_{i}"));
    }
    for j in 1..=servers {
        places.push(format!("sidle_{j}"));
        places.push(format!("sbusy_{j}"));
        places.push(format!("sdone_{j}"));
    }
    places.extend([
        "client_idle".into(),
        "client_waiting".into(),
        "client_request".into(),
        "server_idle".into(),
        "server_busy".into(),
        "server_done".into(),
    ]);
    let index = |name: &str| places.iter().position(|x| x == name).unwrap();

    let n = places.len();
    let mut net = PetriNet {
        places: places.clone(),
        transitions: Vec::new(),
        initial_marking: vec![0; n],
    };
    for i in 1..=clients {
        net.initial_marking[index(&format!("cidle_{i}"))] = 1;
    }
    for j in 1..=servers {
        net.initial_marking[index(&format!("sidle_{j}"))] = 1;
    }
    net.initial_marking[index("client_idle")] = clients as u32;
    net.initial_marking[index("server_idle")] = servers as u32;

    for i in 1..=clients {
        let mut pre = vec![0; n];
        let mut post = vec![0; n];
        pre[index(&format!("cidle_{i}"))] = 1;
        pre[index("client_idle")] = 1;
        post[index(&format!("cwait_{i}"))] = 1;
        post[index("client_waiting")] = 1;
        post[index("client_request")] = 1;
        net.transitions.push(Transition {
            name: format!("send_{i}"),
            pre,
            post,
        });
    }
    for j in 1..=servers {
        let mut pre = vec![0; n];
        let mut post = vec![0; n];
        pre[index("client_request")] = 1;
        pre[index(&format!("sidle_{j}"))] = 1;
        pre[index("server_idle")] = 1;
        post[index(&format!("sbusy_{j}"))] = 1;
        post[index("server_busy")] = 1;
        net.transitions.push(Transition {
            name: format!("route_{j}"),
            pre,
            post,
        });

        let mut pre = vec![0; n];
        let mut post = vec![0; n];
        pre[index(&format!("sbusy_{j}"))] = 1;
        pre[index("server_busy")] = 1;
        post[index(&format!("sdone_{j}"))] = 1;
        post[index("server_done")] = 1;
        net.transitions.push(Transition {
            name: format!("serve_{j}"),
            pre,
            post,
        });

        for i in 1..=clients {
            let mut pre = vec![0; n];
            let mut post = vec![0; n];
            pre[index(&format!("sdone_{j}"))] = 1;
            pre[index("server_done")] = 1;
            pre[index(&format!("cwait_{i}"))] = 1;
            pre[index("client_waiting")] = 1;
            post[index(&format!("sidle_{j}"))] = 1;
            post[index("server_idle")] = 1;
            post[index(&format!("cidle_{i}"))] = 1;
            post[index("client_idle")] = 1;
            net.transitions.push(Transition {
                name: format!("notify_{j}_{i}"),
                pre,
                post,
            });
        }
    }
    Ok(net)
}

/// One place, one self-loop transition: the smallest serial system.
pub fn self_loop() -> PetriNet {
    PetriNet {
        places: vec!["p".into()],
        transitions: vec![Transition {
            name: "step".into(),
            pre: vec![1],
            post: vec![1],
        }],
        initial_marking: vec![1],
    }
}

/// Three-state chain with a terminal self-loop: a → b → c → c.
pub fn chain() -> PetriNet {
    PetriNet {
        places: vec!["a".into(), "b".into(), "c".into()],
        transitions: vec![
            Transition {
                name: "t_ab".into(),
                pre: vec![1, 0, 0],
                post: vec![0, 1, 0],
            },
            Transition {
                name: "t_bc".into(),
                pre: vec![0, 1, 0],
                post: vec![0, 0, 1],
            },
            Transition {
                name: "t_cc".into(),
                pre: vec![0, 0, 1],
                post: vec![0, 0, 1],
            },
        ],
        initial_marking: vec![1, 0, 0],
    }
}

/// One token moved a → b with no way back: the second state deadlocks, so
/// building adds the error state.
pub fn handoff() -> PetriNet {
    PetriNet {
        places: vec!["a".into(), "b".into()],
        transitions: vec![Transition {
            name: "move".into(),
            pre: vec![1, 0],
            post: vec![0, 1],
        }],
        initial_marking: vec![1, 0],
    }
}

pub const BUNDLED: &[&str] = &[
    "self_loop",
    "chain",
    "handoff",
    "shared_memory(P)",
    "mutex(N)",
    "load_balancer(C,S)",
];

/// Resolves a bundled-net spec such as `shared_memory(3)` or `chain`.
/// Returns `None` when the text does not name a bundled net at all.
pub fn resolve(spec: &str) -> Option<Result<PetriNet>> {
    let spec = spec.trim();
    match spec {
        "self_loop" => return Some(Ok(self_loop())),
        "chain" => return Some(Ok(chain())),
        "handoff" => return Some(Ok(handoff())),
        _ => {}
    }
    let (name, rest) = spec.split_once('(')?;
    let args_text = rest.strip_suffix(')')?;
    let mut args = Vec::new();
    for part in args_text.split(',') {
        match part.trim().parse::<usize>() {
            Ok(v) => args.push(v),
            Err(e) => {
                return Some(Err(Error::Contract(format!(
                    "bad argument `{}` in `{spec}`: {e}",
                    part.trim()
                ))))
            }
        }
    }
    let expect = |n: usize| -> Result<()> {
        if args.len() == n {
            Ok(())
        } else {
            Err(Error::Contract(format!(
                "`{name}` takes {n} argument(s), got {}",
                args.len()
            )))
        }
    };
    Some(match name.trim() {
        "shared_memory" => expect(1).and_then(|()| shared_memory(args[0])),
        "mutex" => expect(1).and_then(|()| mutex(args[0])),
        "load_balancer" => expect(2).and_then(|()| load_balancer(args[0], args[1])),
        _ => return None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::statespace::{build, BuildOptions};
    use tempfile::TempDir;

    #[test]
    fn shared_memory_counts_match_closed_form() {
        for p in 1..=5 {
            let net = shared_memory(p).unwrap();
            net.validate().unwrap();
            let dir = TempDir::new().unwrap();
            let (store, stats) = build(&net, dir.path(), &BuildOptions::default()).unwrap();
            let expected = (1usize << (p - 1)) * (p + 2);
            assert_eq!(stats.states, expected, "P={p}");
            assert!(stats.deadlocks.is_empty(), "P={p}");
            assert!(store.validate().is_empty());
        }
    }

    #[test]
    fn mutex_deadlocks_and_gets_an_error_state() {
        for n in 2..=4 {
            let net = mutex(n).unwrap();
            let dir = TempDir::new().unwrap();
            let (store, stats) = build(&net, dir.path(), &BuildOptions::default()).unwrap();
            // All-flags-raised is the unique deadlock.
            assert_eq!(stats.deadlocks.len(), 1, "N={n}");
            let expected = (1usize << (n - 1)) * (n + 2) + 1;
            assert_eq!(stats.states, expected, "N={n}");
            assert!(store.validate().is_empty());
        }
    }

    #[test]
    fn load_balancer_is_live() {
        let net = load_balancer(3, 2).unwrap();
        let dir = TempDir::new().unwrap();
        let (store, stats) = build(&net, dir.path(), &BuildOptions::default()).unwrap();
        assert!(stats.deadlocks.is_empty());
        assert_eq!(stats.states, 52);
        assert!(store.validate().is_empty());
    }

    #[test]
    fn bundled_nets_validate_across_partition_counts() {
        for spec in [
            "self_loop",
            "chain",
            "handoff",
            "shared_memory(3)",
            "mutex(3)",
            "load_balancer(2,2)",
        ] {
            let net = resolve(spec).unwrap().unwrap();
            let mut reference: Option<Vec<crate::kripke::StateId>> = None;
            for partitions in [1usize, 2, 4, 8] {
                let dir = TempDir::new().unwrap();
                let opts = BuildOptions {
                    num_partitions: partitions,
                    ..BuildOptions::default()
                };
                let (store, _) = build(&net, dir.path(), &opts).unwrap();
                assert!(
                    store.validate().is_empty(),
                    "{spec} fails validation at partitions={partitions}"
                );
                let ids: Vec<crate::kripke::StateId> = store.records().map(|r| r.id).collect();
                match &reference {
                    None => reference = Some(ids),
                    Some(expected) => assert_eq!(expected, &ids, "{spec} partitions={partitions}"),
                }
            }
        }
    }

    #[test]
    fn shared_memory_documented_shape() {
        // 3 places per processor plus the four shared/aggregate places,
        // and request/acquire/release per processor.
        let net = shared_memory(2).unwrap();
        assert_eq!(net.places.len(), 10);
        assert_eq!(net.transitions.len(), 6);
    }

    #[test]
    fn resolve_specs() {
        assert!(resolve("chain").unwrap().is_ok());
        assert!(resolve("shared_memory(3)").unwrap().is_ok());
        assert!(resolve("load_balancer(2,1)").unwrap().is_ok());
        assert!(resolve("mutex(x)").unwrap().is_err());
        assert!(resolve("mutex(1,2)").unwrap().is_err());
        assert!(resolve("unknown_net(1)").is_none());
        assert!(resolve("not a net").is_none());
    }
}
