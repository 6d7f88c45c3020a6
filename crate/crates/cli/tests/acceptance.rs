//! Acceptance suite. Runs every criterion and prints one PASS/FAIL line
//! each; exits non-zero if any fails.

use std::collections::HashMap;
use std::io::{BufRead, BufReader};
use std::panic::{self, AssertUnwindSafe};
use std::path::Path;
use std::process::{Command, Stdio};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use chrono::{DateTime, TimeZone, Utc};
use ott_core::bench::{self, BenchConfig, BenchOp};
use ott_core::crypto::{keypair_from_seed, Digest, Seed};
use ott_core::index::{derive_index_material, Did};
use ott_core::ledger::{
    HttpLedger, LatencyProfile, Ledger, LedgerError, LedgerRecord, MemoryLedger,
};
use ott_core::message::{
    decode_message, encode_create, encode_revoke, tag1, tag2, validate_create, MessageError,
    MAX_DATA_LEN,
};
use ott_core::method::{
    self, parse_document, serialize_document, AuthKey, DidDocument, DidKeyRing, ResolutionResult,
    ResolutionStatus, DEFAULT_KEY_TYPE,
};
use ott_core::provider::{
    status, CreateSource, DidFunction, OttProvider, Registry, RegistryError, OP_DID,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

const OTT: &str = env!("CARGO_BIN_EXE_ott");

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {{
        let ok: bool = $cond;
        if !ok {
            return Err(format!($($fmt)+));
        }
    }};
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("golden index vector", golden_index_vector),
        ("wire-format conformance", wire_format_conformance),
        ("lifecycle end-to-end over HTTP", lifecycle_over_http),
        ("adversarial suite", adversarial_suite),
        ("mutation robustness", mutation_robustness),
        ("structural timing relation", structural_timing),
        ("CDF output validity", cdf_output_validity),
        ("provider passthrough", provider_passthrough),
        ("gateway crash consistency", crash_consistency),
        ("ledger implementation equivalence", ledger_equivalence),
    ];
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = panic::catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into());
            Err(format!("panicked: {msg}"))
        });
        let took = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS [{:>2}] {name}: {detail} ({took:.2} s)", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL [{:>2}] {name}: {why} ({took:.2} s)", i + 1);
            }
        }
    }
    println!(
        "acceptance: {}/{} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn auth_for(seed: u8) -> AuthKey {
    AuthKey::ed25519(keypair_from_seed(&Seed::new([seed; 32])).public())
}

fn fixed_time() -> DateTime<Utc> {
    Utc.with_ymd_and_hms(2024, 1, 1, 0, 0, 0).unwrap()
}

fn golden() -> Value {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures/golden.json");
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn golden_index_vector() -> Outcome {
    let start = Instant::now();
    let fixture = &golden()["material_zero_ones"];
    let m = derive_index_material(Seed::new([0x00; 32]), Seed::new([0xff; 32]));
    let got = [
        ("pk1", hex::encode(m.revocation_key().public())),
        ("pk2", hex::encode(m.creation_key().public())),
        ("anchor", m.anchor().to_hex()),
        ("index", m.index().to_hex()),
    ];
    for (field, value) in &got {
        ensure!(
            fixture[field] == value.as_str(),
            "{field}: got {value}, oracle {}",
            fixture[field]
        );
    }
    let took = start.elapsed();
    ensure!(took < Duration::from_secs(1), "took {took:?}");
    Ok(format!(
        "index {} matches oracle bit-exactly",
        &got[3].1[..16]
    ))
}

fn wire_format_conformance() -> Outcome {
    let m = derive_index_material(Seed::new([1; 32]), Seed::new([2; 32]));
    let create = encode_create(&[b'x'; 100], &m).map_err(|e| e.to_string())?;
    ensure!(create.len() == 294, "create is {} bytes", create.len());
    ensure!(
        create[..32] == tag1()[..] && create[32..64] == tag2()[..],
        "tags"
    );
    ensure!(create[64..66] == 100u16.to_be_bytes(), "length field");
    let revoke = encode_revoke(&m);
    ensure!(revoke.len() == 163, "revoke is {} bytes", revoke.len());
    ensure!(
        encode_create(&vec![b'x'; MAX_DATA_LEN], &m).is_ok(),
        "31600 rejected"
    );
    ensure!(
        matches!(
            encode_create(&vec![b'x'; MAX_DATA_LEN + 1], &m),
            Err(MessageError::DataTooLarge(31601))
        ),
        "31601 accepted"
    );
    Ok("create(100)=294 B, revoke=163 B, 31600 accepted, 31601 rejected".into())
}

fn lifecycle_over_http() -> Outcome {
    let start = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let gw = ott_gateway::serve(ott_gateway::GatewayConfig::new("127.0.0.1:0", dir.path()))
        .map_err(|e| e.to_string())?;
    let ledger = HttpLedger::connect(&gw.url());
    let auth = auth_for(0x42);
    let step = |s: &'static str| move |e: method::MethodError| format!("{s}: {e}");

    let first = method::create(&auth, &ledger).map_err(step("create"))?;
    let res = method::resolve(first.did(), &ledger).map_err(|e| e.to_string())?;
    ensure!(
        res.status == ResolutionStatus::Valid,
        "after create: {:?}",
        res.status
    );
    let doc = res.document.clone().ok_or("no document")?;
    ensure!(doc.id == first.did().uri(), "document id {}", doc.id);
    ensure!(
        doc.auth_key().map_err(|e| e.to_string())? == auth,
        "auth key did not round-trip"
    );
    ensure!(
        parse_document(&serialize_document(&doc)).ok() == Some(doc),
        "document round trip"
    );

    let second = method::update(&first, &auth, &ledger).map_err(step("update"))?;
    let old = method::resolve(first.did(), &ledger).map_err(|e| e.to_string())?;
    let new = method::resolve(second.did(), &ledger).map_err(|e| e.to_string())?;
    ensure!(
        old.status == ResolutionStatus::Revoked,
        "old after update: {:?}",
        old.status
    );
    ensure!(
        new.status == ResolutionStatus::Valid,
        "new after update: {:?}",
        new.status
    );

    method::revoke(&second, &ledger).map_err(step("revoke"))?;
    let end = method::resolve(second.did(), &ledger).map_err(|e| e.to_string())?;
    ensure!(
        end.status == ResolutionStatus::Revoked,
        "after revoke: {:?}",
        end.status
    );
    ensure!(
        end.to_json() == serde_json::json!({"status": "Revoked", "document": {}}),
        "revoked output {}",
        end.to_json()
    );
    gw.shutdown().map_err(|e| e.to_string())?;
    let took = start.elapsed();
    ensure!(took < Duration::from_secs(5), "took {took:?}");
    Ok(format!(
        "create/resolve/update/revoke against a fresh gateway in {:.0} ms",
        took.as_secs_f64() * 1e3
    ))
}

fn adversarial_suite() -> Outcome {
    let mut r = rng(0xad5e);
    let auth = auth_for(7);
    let (mut false_valid, mut false_revoked, mut missed) = (0, 0, 0);
    let mut attacks = 0;
    for scenario in 0..200 {
        let ledger = MemoryLedger::new();
        let owner_seeds: ([u8; 32], [u8; 32]) = (r.random(), r.random());
        let owner = derive_index_material(Seed::new(owner_seeds.0), Seed::new(owner_seeds.1));
        let did = owner.did();
        let index = *owner.index();
        let attacker = derive_index_material(Seed::new(r.random()), Seed::new(r.random()));
        let mut keyring: Option<DidKeyRing> = None;
        let mut honest_create: Option<Vec<u8>> = None;
        let mut revoked = false;

        for _ in 0..r.random_range(3..12) {
            let attach = |payload: &[u8]| ledger.attach(&index, payload).map(|_| ());
            match r.random_range(0..8) {
                0 if keyring.is_none() => {
                    let ring = method::create_with(
                        Seed::new(owner_seeds.0),
                        Seed::new(owner_seeds.1),
                        fixed_time(),
                        &auth,
                        &ledger,
                    )
                    .unwrap();
                    honest_create = ledger
                        .fetch_by_index(&index)
                        .unwrap()
                        .into_iter()
                        .rev()
                        .find(|rec| {
                            decode_message(&rec.payload).is_ok_and(|m| validate_create(&m, &index))
                        })
                        .map(|rec| rec.payload);
                    keyring = Some(ring);
                }
                1 if keyring.is_some() && !revoked && r.random_bool(0.4) => {
                    method::revoke(keyring.as_ref().unwrap(), &ledger).unwrap();
                    revoked = true;
                }
                2 => {
                    let len = r.random_range(1..400);
                    let garbage: Vec<u8> = (0..len).map(|_| r.random()).collect();
                    attach(&garbage).unwrap();
                }
                3 => {
                    // tag-correct framing with a random body
                    let mut fake = [tag1().as_slice(), tag2().as_slice()].concat();
                    let body_len = if r.random_bool(0.5) {
                        131
                    } else {
                        r.random_range(0..400)
                    };
                    fake.extend((0..body_len).map(|_| r.random::<u8>()));
                    attach(&fake).unwrap();
                }
                4 => {
                    // the attacker's own valid create, replayed at the victim's index
                    let doc = DidDocument::new(&attacker.did(), fixed_time(), &auth_for(9));
                    attach(&encode_create(&serialize_document(&doc), &attacker).unwrap()).unwrap();
                }
                5 => {
                    // a document naming the victim, signed with attacker keys
                    let doc = DidDocument::new(&did, fixed_time(), &auth_for(9));
                    attach(&encode_create(&serialize_document(&doc), &attacker).unwrap()).unwrap();
                }
                6 => attach(&encode_revoke(&attacker)).unwrap(),
                7 => {
                    if let Some(payload) = &honest_create {
                        // replay of the owner's create, or a forged revoke one bit off
                        if r.random_bool(0.5) {
                            attach(payload).unwrap();
                        } else {
                            let mut forged = encode_revoke(&owner);
                            let bit = r.random_range(0..forged.len() * 8);
                            forged[bit / 8] ^= 1 << (bit % 8);
                            attach(&forged).unwrap();
                        }
                    } else {
                        continue;
                    }
                }
                _ => continue,
            }
            attacks += 1;
        }

        let res = method::resolve(&did, &ledger).unwrap();
        let created = keyring.is_some();
        match res.status {
            ResolutionStatus::Valid => {
                let doc = res.document.as_ref().unwrap();
                if !created
                    || revoked
                    || doc.id != did.uri()
                    || doc.auth_key().ok() != Some(auth.clone())
                {
                    false_valid += 1;
                }
            }
            ResolutionStatus::Revoked if !(created && revoked) => false_revoked += 1,
            ResolutionStatus::Revoked => {}
            ResolutionStatus::NotFound | ResolutionStatus::Invalid if created => missed += 1,
            _ => {}
        }
        if false_valid + false_revoked + missed > 0 {
            return Err(format!(
                "scenario {scenario}: {false_valid} false Valid, {false_revoked} false Revoked, {missed} missed"
            ));
        }
    }
    Ok(format!(
        "200 scenarios, {attacks} interleaved operations, 0 false Valid, 0 false Revoked"
    ))
}

fn mutation_robustness() -> Outcome {
    let ledger = MemoryLedger::new();
    let ring = method::create_with(
        Seed::new([3; 32]),
        Seed::new([4; 32]),
        fixed_time(),
        &auth_for(5),
        &ledger,
    )
    .map_err(|e| e.to_string())?;
    let index = *ring.did().index();
    let payload = ledger.fetch_by_index(&index).unwrap().remove(0).payload;
    ensure!(
        decode_message(&payload).is_ok_and(|m| validate_create(&m, &index)),
        "unmutated create rejected"
    );
    let bits = payload.len() * 8;
    ensure!(bits >= 512, "message too short to sample 512 bits");
    let mut accepted = Vec::new();
    for bit in 0..bits {
        let mut mutated = payload.clone();
        mutated[bit / 8] ^= 1 << (bit % 8);
        if decode_message(&mutated).is_ok_and(|m| validate_create(&m, &index)) {
            accepted.push(bit);
        }
    }
    ensure!(
        accepted.is_empty(),
        "{} flips accepted, first at bit {}",
        accepted.len(),
        accepted[0]
    );
    Ok(format!(
        "all {bits} single-bit flips of a {}-byte create rejected",
        payload.len()
    ))
}

fn structural_timing() -> Outcome {
    let profile: LatencyProfile = "attach=fixed:10,fetch=fixed:0.5".parse().unwrap();
    let mean = |op| -> Result<f64, String> {
        let mut cfg = BenchConfig::new(op, 100, profile);
        cfg.seed = Some(1);
        Ok(bench::run(&cfg).map_err(|e| e.to_string())?.mean_ms())
    };
    let (create, revoke, update, resolve) = (
        mean(BenchOp::Create)?,
        mean(BenchOp::Revoke)?,
        mean(BenchOp::Update)?,
        mean(BenchOp::Resolve)?,
    );
    let sum = create + revoke;
    let rel = (update - sum).abs() / sum;
    ensure!(
        rel <= 0.10,
        "update {update:.3} ms vs create+revoke {sum:.3} ms ({:.1}%)",
        rel * 100.0
    );
    ensure!(
        resolve * 10.0 <= create,
        "resolve {resolve:.3} ms vs create {create:.3} ms"
    );
    Ok(format!(
        "update {update:.2} ms vs create+revoke {sum:.2} ms ({:.1}% apart); create/resolve = {:.0}x",
        rel * 100.0,
        create / resolve
    ))
}

fn read_csv(path: &Path, header: &str) -> Result<Vec<(String, String)>, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let mut lines = text.lines();
    ensure!(lines.next() == Some(header), "{} header", path.display());
    Ok(lines
        .map(|l| {
            let (a, b) = l.split_once(',').unwrap();
            (a.to_owned(), b.to_owned())
        })
        .collect())
}

fn cdf_output_validity() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    for op in BenchOp::ALL {
        let out = dir.path().join(format!("{op}.csv"));
        let run = Command::new(OTT)
            .args(["--output", "json", "bench", "--op", op.name(), "--n", "120"])
            .args(["--latency", "lognormal:-1:0.8", "--seed", "11", "--out"])
            .arg(&out)
            .output()
            .unwrap();
        ensure!(
            run.status.success(),
            "bench {op} failed: {}",
            String::from_utf8_lossy(&run.stderr)
        );
        let summary: Value = serde_json::from_slice(&run.stdout).map_err(|e| e.to_string())?;

        let mut runs: Vec<f64> = read_csv(&out, "run_index,duration_ms")?
            .iter()
            .map(|(_, d)| d.parse().unwrap())
            .collect();
        ensure!(runs.len() == 120, "{op}: {} runs", runs.len());
        runs.sort_by(f64::total_cmp);
        let k = (0.95 * runs.len() as f64).ceil() as usize;
        let p95 = runs[k - 1];
        ensure!(
            summary["p95Ms"].as_f64() == Some(p95),
            "{op}: reported p95 {} vs order statistic {p95}",
            summary["p95Ms"]
        );

        let cdf: Vec<(f64, f64)> = read_csv(&out.with_extension("csv.cdf.csv"), "t_ms,F")?
            .iter()
            .map(|(t, f)| (t.parse().unwrap(), f.parse().unwrap()))
            .collect();
        ensure!(
            cdf.first().is_some_and(|p| p.1 > 0.0),
            "{op}: first F not positive"
        );
        ensure!(
            cdf.windows(2).all(|w| w[0].0 < w[1].0 && w[0].1 <= w[1].1),
            "{op}: CDF not monotone"
        );
        ensure!(
            cdf.last().map(|p| p.1) == Some(1.0),
            "{op}: CDF does not end at 1"
        );
    }
    Ok("4 ops x 120 runs: CDFs monotone, end at F=1, p95 equals x_(ceil(0.95n)) exactly".into())
}

struct ScriptedSource(Mutex<ChaCha8Rng>);

impl CreateSource for ScriptedSource {
    fn seeds(&self) -> (Seed, Seed) {
        let mut r = self.0.lock().unwrap();
        (Seed::new(r.random()), Seed::new(r.random()))
    }

    fn timestamp(&self) -> DateTime<Utc> {
        fixed_time()
    }
}

fn same_result(code: i32, doc: &[u8], direct: &ResolutionResult) -> bool {
    match direct.status {
        ResolutionStatus::Valid => {
            code == status::OK && parse_document(doc).ok().as_ref() == direct.document.as_ref()
        }
        ResolutionStatus::Revoked => code == status::REVOKED && doc == b"{}",
        ResolutionStatus::NotFound => code == status::NOT_FOUND,
        ResolutionStatus::Invalid => code == status::INVALID,
    }
}

fn strip_time(records: Vec<LedgerRecord>) -> Vec<(Digest, Digest, Vec<u8>, u64)> {
    records
        .into_iter()
        .map(|r| (r.message_id, r.index, r.payload, r.sequence))
        .collect()
}

fn provider_passthrough() -> Outcome {
    ensure!(OP_DID == 24, "OP_DID = {OP_DID}");
    let ids: Vec<i32> = DidFunction::ALL.iter().map(|f| f.id()).collect();
    ensure!(ids == [1, 2, 3, 4], "function ids {ids:?}");

    let provider_ledger = Arc::new(MemoryLedger::new());
    let direct_ledger = MemoryLedger::new();
    let provider = OttProvider::with_source(
        provider_ledger.clone(),
        Box::new(ScriptedSource(Mutex::new(rng(50)))),
    );
    let registry = Registry::new();
    provider.register(&registry).map_err(|e| e.to_string())?;
    ensure!(
        matches!(
            registry.fetch("NOPE"),
            Err(RegistryError::MethodNotFound(_))
        ),
        "unregistered method fetched"
    );
    let table = registry.fetch("OTT").map_err(|e| e.to_string())?;

    let mut direct_seeds = rng(50);
    let mut script = rng(51);
    let mut dids: Vec<String> = Vec::new();
    let mut rings: HashMap<String, DidKeyRing> = HashMap::new();
    let mut compared = 0;

    for step in 0..50 {
        let op = if dids.is_empty() {
            0
        } else {
            script.random_range(0..4)
        };
        let key = keypair_from_seed(&Seed::new(script.random()));
        let key: [u8; 32] = *key.public();
        match op {
            0 => {
                let handle = table
                    .create(&key, DEFAULT_KEY_TYPE)
                    .map_err(|c| format!("create: {c}"))?;
                let (s1, s2) = (
                    Seed::new(direct_seeds.random()),
                    Seed::new(direct_seeds.random()),
                );
                let ring = method::create_with(
                    s1,
                    s2,
                    fixed_time(),
                    &AuthKey::ed25519(&key),
                    &direct_ledger,
                )
                .map_err(|e| e.to_string())?;
                ensure!(
                    handle.uri() == ring.did().uri(),
                    "step {step}: create DIDs differ"
                );
                dids.push(handle.uri().to_owned());
                rings.insert(handle.uri().to_owned(), ring);
            }
            1 => {
                let old = dids[script.random_range(0..dids.len())].clone();
                let mut index = old.clone();
                let code = table.update(&mut index, &key, DEFAULT_KEY_TYPE);
                let (s1, s2) = (
                    Seed::new(direct_seeds.random()),
                    Seed::new(direct_seeds.random()),
                );
                let new = method::update_with(
                    &rings[&old],
                    s1,
                    s2,
                    fixed_time(),
                    &AuthKey::ed25519(&key),
                    &direct_ledger,
                )
                .map_err(|e| e.to_string())?;
                ensure!(
                    code == status::OK && index == new.did().uri(),
                    "step {step}: update differs"
                );
                dids.push(index.clone());
                rings.insert(index, new);
            }
            2 => {
                let target = &dids[script.random_range(0..dids.len())];
                let code = table.revoke(target);
                method::revoke(&rings[target], &direct_ledger).map_err(|e| e.to_string())?;
                ensure!(code == status::OK, "step {step}: revoke code {code}");
            }
            _ => {
                let unknown = Did::from_index(Digest::new(script.random())).uri();
                let mut doc = Vec::new();
                let code = table.resolve(&unknown, &mut doc);
                ensure!(
                    code == status::NOT_FOUND,
                    "step {step}: unknown DID gave {code}"
                );
            }
        }
        for did in &dids {
            let mut doc = Vec::new();
            let code = table.resolve(did, &mut doc);
            let direct = method::resolve(&did.parse().unwrap(), &direct_ledger)
                .map_err(|e| e.to_string())?;
            ensure!(
                same_result(code, &doc, &direct),
                "step {step}: {did} gave {code} vs {:?}",
                direct.status
            );
            compared += 1;
        }
    }
    ensure!(
        strip_time(provider_ledger.records()) == strip_time(direct_ledger.records()),
        "ledger contents differ"
    );
    Ok(format!(
        "50 steps, {} DIDs, {compared} resolutions identical; MethodNotFound; OP_DID=24, ids 1-4",
        dids.len()
    ))
}

struct NodeProcess {
    child: std::process::Child,
    url: String,
}

fn spawn_node(store: &Path) -> Result<NodeProcess, String> {
    let mut child = Command::new(OTT)
        .args([
            "--output",
            "json",
            "node",
            "--listen",
            "127.0.0.1:0",
            "--store",
        ])
        .arg(store)
        .stdout(Stdio::piped())
        .stderr(Stdio::null())
        .spawn()
        .map_err(|e| e.to_string())?;
    let mut line = String::new();
    BufReader::new(child.stdout.take().unwrap())
        .read_line(&mut line)
        .map_err(|e| e.to_string())?;
    let v: Value = serde_json::from_str(&line).map_err(|e| format!("node said `{line}`: {e}"))?;
    Ok(NodeProcess {
        child,
        url: v["listening"].as_str().ok_or("no address")?.to_owned(),
    })
}

fn crash_consistency() -> Outcome {
    const WRITERS: u8 = 3;
    let dir = tempfile::tempdir().unwrap();
    let store = dir.path().join("store");
    let mut r = rng(9);
    // per-index acknowledged ids in ack order; each index has one writer
    let acked: Arc<Mutex<HashMap<u8, Vec<Digest>>>> = Arc::default();
    let mut total_acked = 0;

    for cycle in 0..=20 {
        let mut node = spawn_node(&store)?;
        let ledger = HttpLedger::connect(&node.url);
        let mut seqs = Vec::new();
        for (writer, ids) in acked.lock().unwrap().iter() {
            let records = ledger
                .fetch_by_index(&Digest::new([*writer; 32]))
                .map_err(|e| format!("cycle {cycle}: {e}"))?;
            ensure!(
                records.windows(2).all(|w| w[0].sequence < w[1].sequence),
                "cycle {cycle}: order"
            );
            let stored: Vec<Digest> = records.iter().map(|r| r.message_id).collect();
            // acked ids appear in ack order; unacked in-flight writes may be interleaved
            let mut pos = stored.iter();
            for id in ids {
                ensure!(
                    pos.any(|s| s == id),
                    "cycle {cycle}: acknowledged {id} lost"
                );
            }
            seqs.extend(records.iter().map(|r| r.sequence));
        }
        seqs.sort_unstable();
        ensure!(
            seqs == (0..seqs.len() as u64).collect::<Vec<_>>(),
            "cycle {cycle}: sequence gap"
        );
        if cycle == 20 {
            let _ = node.child.kill();
            let _ = node.child.wait();
            break;
        }

        let stop = Arc::new(AtomicBool::new(false));
        let writers: Vec<_> = (0..WRITERS)
            .map(|w| {
                let (url, stop, acked) = (node.url.clone(), stop.clone(), acked.clone());
                let mut wr = rng(cycle * 100 + u64::from(w));
                std::thread::spawn(move || {
                    let ledger = HttpLedger::connect(&url);
                    let index = Digest::new([w; 32]);
                    while !stop.load(Ordering::Relaxed) {
                        let len = wr.random_range(1..2048);
                        let payload: Vec<u8> = (0..len).map(|_| wr.random()).collect();
                        match ledger.attach(&index, &payload) {
                            Ok(id) => acked.lock().unwrap().entry(w).or_default().push(id),
                            Err(LedgerError::Unavailable(_)) => break,
                            Err(e) => panic!("attach: {e}"),
                        }
                    }
                })
            })
            .collect();
        std::thread::sleep(Duration::from_millis(r.random_range(20..120)));
        node.child.kill().map_err(|e| e.to_string())?;
        node.child.wait().map_err(|e| e.to_string())?;
        stop.store(true, Ordering::Relaxed);
        for w in writers {
            w.join().map_err(|_| "writer panicked")?;
        }
        total_acked = acked.lock().unwrap().values().map(Vec::len).sum();
    }
    ensure!(total_acked > 0, "nothing was acknowledged");
    Ok(format!(
        "20 SIGKILL/restart cycles, {total_acked} acknowledged records all recovered in order"
    ))
}

fn ledger_equivalence() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let gw = ott_gateway::serve(ott_gateway::GatewayConfig::new("127.0.0.1:0", dir.path()))
        .map_err(|e| e.to_string())?;
    let http = HttpLedger::connect(&gw.url());
    let memory = MemoryLedger::new();
    let mut r = rng(10);
    let pool: Vec<Digest> = (0..6).map(|_| Digest::new(r.random())).collect();
    let (mut attaches, mut fetches, mut rejects) = (0, 0, 0);

    for op in 0..200 {
        let index = pool[r.random_range(0..pool.len())];
        if r.random_bool(0.6) {
            let len = match r.random_range(0..20) {
                0 => 0,
                1 => 32768,
                2 => 32769,
                _ => r.random_range(1..300),
            };
            let payload: Vec<u8> = (0..len).map(|_| r.random()).collect();
            let (a, b) = (
                memory.attach(&index, &payload),
                http.attach(&index, &payload),
            );
            match (&a, &b) {
                (Ok(x), Ok(y)) => ensure!(x == y, "op {op}: ids {x} vs {y}"),
                (Err(x), Err(y)) => {
                    ensure!(
                        std::mem::discriminant(x) == std::mem::discriminant(y),
                        "op {op}: {x} vs {y}"
                    );
                    rejects += 1;
                }
                _ => return Err(format!("op {op}: {a:?} vs {b:?}")),
            }
            attaches += 1;
        } else {
            let a = strip_time(memory.fetch_by_index(&index).unwrap());
            let b = strip_time(http.fetch_by_index(&index).map_err(|e| e.to_string())?);
            ensure!(a == b, "op {op}: fetch results differ");
            fetches += 1;
        }
    }
    for index in &pool {
        ensure!(
            strip_time(memory.fetch_by_index(index).unwrap())
                == strip_time(http.fetch_by_index(index).map_err(|e| e.to_string())?),
            "final fetch differs"
        );
    }
    Ok(format!(
        "200 ops ({attaches} attaches, {rejects} rejected, {fetches} fetches) identical"
    ))
}
