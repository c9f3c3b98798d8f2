use agritrace::contracts::Operation;
use agritrace::crypto::hash;
use agritrace::ledger::{encode_chain, verify_chain_bytes, GasSchedule, StorageMode};
use agritrace::scenario::{fixture_chain, olive_oil_flow};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::world::{exec, values};
use crate::{Outcome, SEED};

const PAYLOADS: [u64; 5] = [160, 200, 256, 512, 1024];
const MAX_RATIO: f64 = 0.25;
const HISTORY_BLOCKS: usize = 20;
const FLIPS: usize = 200;

pub fn gas_ratio() -> Outcome {
    let s = GasSchedule::default();
    let mut ratios = Vec::new();
    for n in PAYLOADS {
        let log = s.estimate(StorageMode::Log, n);
        let persistent = s.estimate(StorageMode::Persistent, n);
        // integer form of log / persistent <= 1/4
        ensure!(log * 4 <= persistent, "{n} bytes: log {log} vs persistent {persistent}");
        let r = log as f64 / persistent as f64;
        ensure!(r <= MAX_RATIO, "{n} bytes: ratio {r}");
        ratios.push(format!("{n}:{r:.3}"));
    }
    // 21000 base + 200 * 16 calldata, then 7 slots or one log with one topic
    let by_hand_persistent = 21_000 + 200 * 16 + 7 * 20_000;
    let by_hand_log = 21_000 + 200 * 16 + 375 + 375 + 200 * 8;
    ensure!(by_hand_persistent == 164_200 && by_hand_log == 26_550, "hand arithmetic");
    let (p, l) = (s.estimate(StorageMode::Persistent, 200), s.estimate(StorageMode::Log, 200));
    ensure!(p == by_hand_persistent, "200 bytes persistent: {p}");
    ensure!(l == by_hand_log, "200 bytes log: {l}");
    Ok(format!("200 B: {l} vs {p}; ratios {}", ratios.join(" ")))
}

/// Byte ranges of each length-prefixed record.
fn record_spans(bytes: &[u8]) -> Vec<(usize, usize)> {
    let mut spans = Vec::new();
    let mut at = 0;
    while at < bytes.len() {
        let len = u32::from_be_bytes(bytes[at..at + 4].try_into().unwrap()) as usize;
        spans.push((at, at + 4 + len));
        at += 4 + len;
    }
    spans
}

pub fn integrity() -> Outcome {
    let (mut chain, people) = fixture_chain();
    let flow = olive_oil_flow(&mut chain, &people).map_err(|e| e.to_string())?;
    let mut step = |actor: &str, op: Operation| {
        exec(&mut chain, &people, actor, op).map_err(|e| e.to_string())?;
        chain.seal_block();
        Ok::<_, String>(())
    };
    let record = |entity, event: &str, pairs: &[(&str, &str)]| Operation::RecordEvent {
        entity,
        event_kind_id: event.into(),
        values: values(pairs),
    };
    let [og1, og2] = flow.groves;
    step("farmer", record(og1, "pruning", &[("notes", "winter pruning")]))?;
    step("agronomist", record(og1, "treatment", &[("product", "copper"), ("dose", "2.5")]))?;
    step("sensor", record(og2, "soil_reading", &[("moisture_permille", "231")]))?;
    step("farmer", record(og2, "pruning", &[("notes", "")]))?;
    let report = format!("https://lab.example/r/1\x1F{}", hash(b"report").to_hex());
    step("lab", record(flow.oils[1], "analysis", &[("acidity", "0.31"), ("report", &report)]))?;
    step(
        "retailer",
        record(flow.bottles, "sale", &[("price_eur", "12.9"), ("store", "Cagliari"), ("shelf_photo", "https://x.example/p")]),
    )?;
    step(
        "bottler",
        Operation::Notarize {
            entity: flow.bottles,
            digest: hash(b"label artwork"),
            locator: "ipfs:label".into(),
            metadata: vec![],
        },
    )?;
    step("certifier", Operation::Asseverate { entity: flow.oils[1], record: 1 })?;
    ensure!(chain.blocks().len() == HISTORY_BLOCKS, "history has {} blocks", chain.blocks().len());

    let bytes = encode_chain(chain.blocks());
    let clean = verify_chain_bytes(&bytes);
    ensure!(clean.is_ok(), "clean chain fails: {:?}", clean.failure);
    let spans = record_spans(&bytes);
    ensure!(spans.len() == HISTORY_BLOCKS, "{} records", spans.len());

    let mut rng = ChaCha8Rng::seed_from_u64(SEED ^ 4);
    let mut worst = 0;
    for _ in 0..FLIPS {
        let pos = rng.gen_range(0..bytes.len());
        let mut bad = bytes.clone();
        bad[pos] ^= rng.gen_range(1..=255u8);
        let block = spans.iter().position(|&(a, b)| (a..b).contains(&pos)).unwrap() as u64;
        let Some(f) = verify_chain_bytes(&bad).failure else {
            return Err(format!("flip at byte {pos} (block {block}) not detected"));
        };
        ensure!(f.block <= block, "flip in block {block} reported at block {}: {f}", f.block);
        worst = worst.max(block - f.block);
    }
    Ok(format!("{FLIPS} flips over {} bytes all caught; max lead {worst} blocks", bytes.len()))
}
