use std::ffi::{CStr, CString};
use std::path::Path;
use std::process::Command;
use std::ptr;

use shardvalue::harness::synthetic::generate_synthetic;
use shardvalue::ledger::{merkle_root, write_doc_ids, write_entries};
use shardvalue::proxy::{LabelPolicy, ProxyConfig, ProxyProblem};
use shardvalue::ledger::{record_training, RecorderConfig};
use shardvalue_ffi::*;

fn cstr(s: &str) -> CString {
    CString::new(s).unwrap()
}

fn path_c(p: &Path) -> CString {
    cstr(p.to_str().unwrap())
}

fn last_error() -> String {
    let p = sv_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn version_is_crate_version() {
    let v = unsafe { CStr::from_ptr(sv_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn null_arguments_are_reported() {
    let mut out: *mut SvCorpus = ptr::null_mut();
    let s = unsafe { sv_corpus_load(ptr::null(), &mut out) };
    assert_eq!(s, SvStatus::NullPointer);
    assert!(last_error().contains("path"));
    assert!(out.is_null());

    let s = unsafe { sv_valuation_get(ptr::null(), 0, ptr::null_mut()) };
    assert_eq!(s, SvStatus::NullPointer);
}

#[test]
fn missing_file_is_io_error() {
    let mut out: *mut SvCorpus = ptr::null_mut();
    let p = cstr("/nonexistent/corpus.jsonl");
    let s = unsafe { sv_corpus_load(p.as_ptr(), &mut out) };
    assert_eq!(s, SvStatus::Io);
    assert!(!last_error().is_empty());
}

#[test]
fn malformed_jsonl_is_malformed() {
    let mut out: *mut SvCorpus = ptr::null_mut();
    let text = cstr("{\"id\": 1}\n");
    let s = unsafe { sv_corpus_from_jsonl(text.as_ptr(), &mut out) };
    assert_eq!(s, SvStatus::Malformed);
    assert!(last_error().contains("line 1"));
}

#[test]
fn success_clears_last_error() {
    let mut out: *mut SvCorpus = ptr::null_mut();
    unsafe { sv_corpus_load(ptr::null(), &mut out) };
    assert!(!sv_last_error().is_null());
    let mut docs = 0usize;
    let text = cstr(&generate_synthetic(0).to_jsonl_string().unwrap());
    assert_eq!(unsafe { sv_corpus_from_jsonl(text.as_ptr(), &mut out) }, SvStatus::Ok);
    assert!(sv_last_error().is_null());
    assert_eq!(unsafe { sv_corpus_counts(out, &mut docs, ptr::null_mut()) }, SvStatus::Ok);
    assert_eq!(docs, generate_synthetic(0).documents().len());
    unsafe { sv_corpus_free(out) };
}

#[test]
fn valuation_matches_library() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.jsonl");
    let corpus = generate_synthetic(3);
    corpus.save(&path).unwrap();

    let mut c: *mut SvCorpus = ptr::null_mut();
    let p = path_c(&path);
    assert_eq!(unsafe { sv_corpus_load(p.as_ptr(), &mut c) }, SvStatus::Ok);

    let mut v: *mut SvValuation = ptr::null_mut();
    assert_eq!(unsafe { sv_valuation_run(c, ptr::null(), 16, 7, &mut v) }, SvStatus::Ok);

    let mut config = shardvalue::valuation::ValuationConfig::new(LabelPolicy::Stored);
    config.shapley_permutations = 16;
    config.shapley_seed = 7;
    let expected = shardvalue::valuation::run_valuation(&corpus, &config).unwrap();

    let mut n = 0usize;
    assert_eq!(unsafe { sv_valuation_source_count(v, &mut n) }, SvStatus::Ok);
    assert_eq!(n, expected.sources.len());
    for i in 0..n {
        let name = unsafe { CStr::from_ptr(sv_valuation_source_name(v, i)) };
        assert_eq!(name.to_str().unwrap(), expected.sources[i]);
        let mut s = SvSourceScores::default();
        assert_eq!(unsafe { sv_valuation_get(v, i, &mut s) }, SvStatus::Ok);
        assert_eq!(s.doc_count as usize, expected.doc_counts[i]);
        assert_eq!(s.token_count, expected.token_counts[i]);
        assert_eq!(s.dqs_mean, expected.dqs_mean[i]);
        assert_eq!(s.proxy_gain, expected.proxy_gain[i]);
        assert_eq!(s.influence, expected.influence[i]);
        assert_eq!(s.shapley, expected.shapley.phi[i]);
    }

    let mut s = SvSourceScores::default();
    assert_eq!(unsafe { sv_valuation_get(v, n, &mut s) }, SvStatus::OutOfRange);
    assert!(unsafe { sv_valuation_source_name(v, n) }.is_null());

    let mut json: *mut std::ffi::c_char = ptr::null_mut();
    assert_eq!(unsafe { sv_valuation_to_json(v, &mut json) }, SvStatus::Ok);
    let parsed: serde_json::Value =
        serde_json::from_str(unsafe { CStr::from_ptr(json) }.to_str().unwrap()).unwrap();
    assert_eq!(parsed["sources"].as_array().unwrap().len(), n);
    unsafe {
        sv_string_free(json);
        sv_valuation_free(v);
        sv_corpus_free(c);
    }
}

#[test]
fn unknown_target_domain_fails() {
    let text = cstr(&generate_synthetic(0).to_jsonl_string().unwrap());
    let mut c: *mut SvCorpus = ptr::null_mut();
    assert_eq!(unsafe { sv_corpus_from_jsonl(text.as_ptr(), &mut c) }, SvStatus::Ok);
    let mut v: *mut SvValuation = ptr::null_mut();
    let domain = cstr("no_such_domain");
    let s = unsafe { sv_valuation_run(c, domain.as_ptr(), 4, 0, &mut v) };
    assert_ne!(s, SvStatus::Ok);
    assert!(v.is_null());
    unsafe { sv_corpus_free(c) };
}

#[test]
fn merkle_root_matches_library() {
    let mut out = [0u8; 32];
    assert_eq!(unsafe { sv_merkle_root(ptr::null(), 0, out.as_mut_ptr()) }, SvStatus::InvalidInput);
    assert!(last_error().contains("empty"));
    for n in [1usize, 2, 3, 7, 8, 9] {
        let ids: Vec<String> = (0..n).map(|i| format!("doc-{i}")).collect();
        let owned: Vec<CString> = ids.iter().map(|s| cstr(s)).collect();
        let ptrs: Vec<*const std::ffi::c_char> = owned.iter().map(|c| c.as_ptr()).collect();
        let mut out = [0u8; 32];
        assert_eq!(unsafe { sv_merkle_root(ptrs.as_ptr(), n, out.as_mut_ptr()) }, SvStatus::Ok);
        assert_eq!(out, merkle_root(&ids).unwrap(), "n = {n}");
    }
}

#[test]
fn ledger_verification_through_files() {
    let corpus = generate_synthetic(1);
    let mut proxy = ProxyConfig::default();
    proxy.train.epochs = 20;
    let problem = ProxyProblem::new(&corpus, &LabelPolicy::Stored, proxy).unwrap();
    let run = record_training(&problem, &problem.all_sources(), RecorderConfig { cadence: 5 }, None).unwrap();

    let dir = tempfile::tempdir().unwrap();
    let fp = dir.path().join("fingerprint.json");
    let ledger = dir.path().join("ledger.jsonl");
    let ids = dir.path().join("doc_ids.txt");
    let opening = dir.path().join("opening.json");
    run.fingerprint.save(&fp).unwrap();
    write_entries(&ledger, run.ledger.entries()).unwrap();
    write_doc_ids(&ids, &run.doc_ids).unwrap();
    run.opening.save(&opening).unwrap();

    let (fp_c, ledger_c, ids_c, opening_c) = (path_c(&fp), path_c(&ledger), path_c(&ids), path_c(&opening));
    let mut verdict = SvVerdict::RejectMalformed;
    let claimed = run.claimed_improvement;
    let s = unsafe {
        sv_ledger_verify_files(fp_c.as_ptr(), ledger_c.as_ptr(), ids_c.as_ptr(), &claimed, opening_c.as_ptr(), &mut verdict)
    };
    assert_eq!(s, SvStatus::Ok);
    assert_eq!(verdict, SvVerdict::Accept);
    assert!(sv_last_error().is_null());

    let wrong = claimed + 1.0;
    let s = unsafe {
        sv_ledger_verify_files(fp_c.as_ptr(), ledger_c.as_ptr(), ids_c.as_ptr(), &wrong, ptr::null(), &mut verdict)
    };
    assert_eq!(s, SvStatus::Ok);
    assert_eq!(verdict, SvVerdict::RejectMetrics);
    assert!(last_error().starts_with("metrics"));

    let mut tampered = run.doc_ids.clone();
    tampered.pop();
    write_doc_ids(&ids, &tampered).unwrap();
    let s = unsafe {
        sv_ledger_verify_files(fp_c.as_ptr(), ledger_c.as_ptr(), ids_c.as_ptr(), ptr::null(), ptr::null(), &mut verdict)
    };
    assert_eq!(s, SvStatus::Ok);
    assert_eq!(verdict, SvVerdict::RejectData);

    std::fs::write(&ledger, "not json\n").unwrap();
    write_doc_ids(&ids, &run.doc_ids).unwrap();
    let s = unsafe {
        sv_ledger_verify_files(fp_c.as_ptr(), ledger_c.as_ptr(), ids_c.as_ptr(), ptr::null(), ptr::null(), &mut verdict)
    };
    assert_eq!(s, SvStatus::Ok);
    assert_eq!(verdict, SvVerdict::RejectMalformed);
}

#[test]
fn header_declares_every_export() {
    let header = std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("include/shardvalue.h")).unwrap();
    let src = std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("src/lib.rs")).unwrap();
    let exports: Vec<&str> = src
        .lines()
        .filter_map(|l| l.split("extern \"C\" fn ").nth(1))
        .map(|rest| rest.split('(').next().unwrap())
        .collect();
    assert!(exports.len() >= 12);
    for name in exports {
        assert!(name.starts_with("sv_"), "{name}");
        assert!(header.contains(&format!("{name}(")), "{name} missing from header");
    }
}

#[test]
fn header_compiles_as_c() {
    let header = Path::new(env!("CARGO_MANIFEST_DIR")).join("include/shardvalue.h");
    let Ok(status) = Command::new("cc")
        .args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only", "-x", "c"])
        .arg(&header)
        .status()
    else {
        eprintln!("no C compiler available; skipping");
        return;
    };
    assert!(status.success());
}

#[test]
fn c_program_links_against_staticlib() {
    let manifest = Path::new(env!("CARGO_MANIFEST_DIR"));
    let exe = std::env::current_exe().unwrap();
    let lib = exe.parent().and_then(Path::parent).unwrap().join("libshardvalue_ffi.a");
    if !lib.exists() || Command::new("cc").arg("--version").output().is_err() {
        eprintln!("staticlib or C compiler unavailable; skipping");
        return;
    }
    let dir = tempfile::tempdir().unwrap();
    let bin = dir.path().join("smoke");
    let status = Command::new("cc")
        .args(["-std=c99", "-Wall", "-Werror", "-I"])
        .arg(manifest.join("include"))
        .arg(manifest.join("tests/c/smoke.c"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&bin)
        .status()
        .unwrap();
    assert!(status.success());

    let corpus = generate_synthetic(0);
    let path = dir.path().join("c.jsonl");
    corpus.save(&path).unwrap();
    let out = Command::new(&bin).arg(&path).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), corpus.sources().len() + 1);
    for (line, src) in lines.iter().zip(corpus.sources()) {
        assert!(line.starts_with(&format!("{src} ")), "{line}");
    }
    assert_eq!(*lines.last().unwrap(), hex::encode(merkle_root(&["a", "b", "c"]).unwrap()));
}
