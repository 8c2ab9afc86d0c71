//! Stable hashing for state identifiers and partition assignment.
//!
//! Both functions are part of the on-disk format and must never change:
//! identifiers have to be reproducible across runs and across
//! implementations, and every consumer of a partitioned store must agree on
//! which file holds which state. The hash is plain FNV-1a over explicit byte
//! strings (see `docs/FORMATS.md` for the exact encodings).

use crate::kripke::StateId;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h = FNV_OFFSET;
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(FNV_PRIME);
    }
    h
}

/// Canonical text encoding of a marking: decimal token counts joined by `,`.
pub fn marking_key(marking: &[u32]) -> String {
    let mut s = String::with_capacity(marking.len() * 2);
    for (i, m) in marking.iter().enumerate() {
        if i > 0 {
            s.push(',');
        }
        s.push_str(&m.to_string());
    }
    s
}

/// Identifier of an ordinary state: FNV-1a of the canonical marking encoding.
pub fn marking_state_id(marking: &[u32]) -> StateId {
    StateId(fnv1a64(marking_key(marking).as_bytes()))
}

/// Identifier of the error state: same encoding prefixed with `E:` so it can
/// never collide with the encoding of a reachable marking.
pub fn error_state_id(marking: &[u32]) -> StateId {
    let key = format!("E:{}", marking_key(marking));
    StateId(fnv1a64(key.as_bytes()))
}

/// Partition assignment: FNV-1a of the identifier's little-endian bytes,
/// modulo the partition count. Used both for store files and for routing
/// intermediate key-value pairs to reducers.
pub fn partition_for(id: StateId, num_partitions: usize) -> usize {
    assert!(num_partitions >= 1, "partition count must be positive");
    (fnv1a64(&id.0.to_le_bytes()) % num_partitions as u64) as usize
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fnv_reference_vectors() {
        // Published FNV-1a 64-bit test vectors.
        assert_eq!(fnv1a64(b""), 0xcbf2_9ce4_8422_2325);
        assert_eq!(fnv1a64(b"a"), 0xaf63_dc4c_8601_ec8c);
        assert_eq!(fnv1a64(b"foobar"), 0x85944171f73967e8);
    }

    #[test]
    fn marking_ids_are_stable_and_distinct_from_error_ids() {
        let m = vec![1, 0, 2];
        assert_eq!(marking_state_id(&m), marking_state_id(&[1, 0, 2]));
        assert_ne!(marking_state_id(&m), error_state_id(&m));
        assert_eq!(marking_key(&m), "1,0,2");
    }

    #[test]
    fn partition_mod_one_is_zero() {
        for id in [0u64, 1, 42, u64::MAX] {
            assert_eq!(partition_for(StateId(id), 1), 0);
        }
    }

    #[test]
    fn partition_is_deterministic_and_in_range() {
        for id in 0..1000u64 {
            let p = partition_for(StateId(id), 7);
            assert!(p < 7);
            assert_eq!(p, partition_for(StateId(id), 7));
        }
    }

    #[test]
    fn partition_spreads_random_keys() {
        // Loose uniformity check over pseudo-random keys.
        let mut counts = [0usize; 8];
        let mut x = 0x9e3779b97f4a7c15u64;
        for _ in 0..8000 {
            x = x
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            counts[partition_for(StateId(x), 8)] += 1;
        }
        for &c in &counts {
            assert!((700..1300).contains(&c), "skewed bucket: {counts:?}");
        }
    }
}
