//! Randomized ledgers and independent hash oracles.

use std::collections::BTreeMap;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};
use shardvalue::ledger::{Canonical, Ledger, LedgerEntry, LedgerFingerprint, Verdict, VerifyOptions, VALUE_METRIC};

use super::rng;

pub fn h(parts: &[&[u8]]) -> [u8; 32] {
    let mut d = Sha256::new();
    for p in parts {
        d.update(p);
    }
    d.finalize().into()
}

/// Level-by-level Merkle root; an odd level repeats its last node.
pub fn oracle_root(ids: &[String]) -> [u8; 32] {
    let mut level: Vec<[u8; 32]> = ids.iter().map(|s| h(&[s.as_bytes()])).collect();
    while level.len() > 1 {
        if level.len() % 2 == 1 {
            level.push(*level.last().unwrap());
        }
        level = level.chunks(2).map(|p| h(&[&p[0], &p[1]])).collect();
    }
    level[0]
}

pub fn random_id(r: &mut ChaCha8Rng) -> String {
    let n = r.random_range(1..12);
    (0..n).map(|_| char::from(b'a' + r.random_range(0..26u8))).collect()
}

pub fn random_entry(r: &mut ChaCha8Rng, step: u64, ids: &[String]) -> LedgerEntry {
    let batch = (0..r.random_range(0..5)).map(|_| ids[r.random_range(0..ids.len())].clone()).collect();
    let mut metrics = BTreeMap::new();
    for k in ["loss", "task_utility", VALUE_METRIC] {
        metrics.insert(k.to_string(), r.random_range(-1.0..1.0));
    }
    let mut commitment = [0u8; 32];
    r.fill(&mut commitment);
    LedgerEntry {
        step,
        batch_doc_ids: batch,
        metrics,
        param_commitment: commitment,
    }
}

pub struct Fixture {
    pub ids: Vec<String>,
    pub entries: Vec<LedgerEntry>,
    pub fingerprint: LedgerFingerprint,
    pub claimed: f64,
}

pub fn fixture(seed: u64, n_entries: usize) -> Fixture {
    let mut r = rng(seed);
    let ids: Vec<String> = (0..r.random_range(3..20)).map(|_| random_id(&mut r)).collect();
    let mut c0 = [0u8; 32];
    r.fill(&mut c0);
    let mut ledger = Ledger::new();
    ledger.initialize(&ids, c0).unwrap();
    let mut step = 0;
    for _ in 0..n_entries {
        step += r.random_range(1..4);
        ledger.append(random_entry(&mut r, step, &ids)).unwrap();
    }
    let entries = ledger.entries().to_vec();
    let value = |e: &LedgerEntry| {
        Canonical::Float(e.metrics[VALUE_METRIC]).to_string().unwrap().parse::<f64>().unwrap()
    };
    let claimed = value(entries.last().unwrap()) - value(&entries[0]);
    Fixture {
        fingerprint: ledger.fingerprint().unwrap(),
        ids,
        entries,
        claimed,
    }
}

pub fn verify(f: &Fixture, fp: &LedgerFingerprint, ids: &[String], entries: &[LedgerEntry]) -> Verdict {
    shardvalue::ledger::verify_ledger(
        fp,
        ids,
        entries,
        VerifyOptions {
            claimed_improvement: Some(f.claimed),
            ..Default::default()
        },
    )
}

/// Applies every single-field mutation to a random ledger and returns the
/// number tried together with the mutations that were still accepted.
pub fn mutation_sweep(seed: u64, n_entries: usize) -> (usize, Vec<String>) {
    let f = fixture(seed, n_entries);
    let mut r = rng(20);
    let mut tried = 0;
    let mut accepted = Vec::new();
    let mut check = |entries: &[LedgerEntry], fp: &LedgerFingerprint, ids: &[String], what: &str| {
        tried += 1;
        if verify(&f, fp, ids, entries).is_accept() {
            accepted.push(what.to_string());
        }
    };
    for i in 0..f.entries.len() {
        let mut m = f.entries.clone();
        m[i].step += 1;
        if i + 1 < m.len() && m[i].step == m[i + 1].step {
            m[i].step -= 2;
        }
        check(&m, &f.fingerprint, &f.ids, &format!("step {i}"));

        let mut m = f.entries.clone();
        m[i].batch_doc_ids.push(random_id(&mut r));
        check(&m, &f.fingerprint, &f.ids, &format!("batch {i}"));

        for key in m[i].metrics.keys().cloned().collect::<Vec<_>>() {
            let mut m = f.entries.clone();
            *m[i].metrics.get_mut(&key).unwrap() += 1e-7;
            check(&m, &f.fingerprint, &f.ids, &format!("metric {key} {i}"));
        }
        let mut m = f.entries.clone();
        m[i].metrics.insert("extra".into(), 0.0);
        check(&m, &f.fingerprint, &f.ids, &format!("extra metric {i}"));

        for byte in [0, 31] {
            let mut m = f.entries.clone();
            m[i].param_commitment[byte] ^= 1;
            check(&m, &f.fingerprint, &f.ids, &format!("commitment {i}"));
        }
    }
    // structural edits
    let mut m = f.entries.clone();
    m.remove(10);
    check(&m, &f.fingerprint, &f.ids, "removed entry");
    let mut m = f.entries.clone();
    m.swap(3, 4);
    check(&m, &f.fingerprint, &f.ids, "swapped entries");
    let mut m = f.entries.clone();
    m.push(m.last().unwrap().clone());
    check(&m, &f.fingerprint, &f.ids, "duplicated entry");
    check(&f.entries[..n_entries - 1], &f.fingerprint, &f.ids, "truncated");
    // dataset
    for i in 0..f.ids.len() {
        let mut ids = f.ids.clone();
        ids[i].push('x');
        check(&f.entries, &f.fingerprint, &ids, "doc id");
    }
    let mut ids = f.ids.clone();
    ids.swap(0, 1);
    check(&f.entries, &f.fingerprint, &ids, "doc order");
    check(&f.entries, &f.fingerprint, &f.ids[1..], "dropped doc id");
    // fingerprint
    for field in 0..5 {
        let mut fp = f.fingerprint;
        match field {
            0 => fp.dataset_root[0] ^= 1,
            1 => fp.c0[0] ^= 1,
            2 => fp.c_t[0] ^= 1,
            3 => fp.entry_count += 1,
            _ => fp.chain_tail[0] ^= 1,
        }
        check(&f.entries, &fp, &f.ids, &format!("fingerprint field {field}"));
    }
    (tried, accepted)
}
