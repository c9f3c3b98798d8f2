use std::collections::BTreeMap;
use std::path::PathBuf;

use agritrace::config::fixtures::olive_oil;
use agritrace::config::{EventClass, ParamSpec};
use agritrace::contracts::{ContractError, Operation};
use agritrace::generator::{generate_contract_ir, generate_form_schemas, render_contracts, RenderTarget};
use agritrace::ledger::LedgerError;
use agritrace::params::ParamType;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::world::{output, world};
use crate::{Outcome, SEED};

const VALUE_SETS: usize = 1000;

fn generated_files() -> Vec<(String, String)> {
    let config = olive_oil();
    let ir = generate_contract_ir(&config);
    let mut out = vec![("ir.json".to_string(), ir.to_json())];
    for target in [RenderTarget::Solidity, RenderTarget::Markdown] {
        out.extend(render_contracts(&ir, target).into_iter().map(|f| (f.path, f.contents)));
    }
    for s in generate_form_schemas(&config) {
        out.push((format!("forms/{}.json", s.event_kind_id), s.to_json()));
    }
    out
}

pub fn determinism() -> Outcome {
    let first = generated_files();
    ensure!(first == generated_files(), "two runs differ");
    let config = olive_oil();
    let ir = generate_contract_ir(&config);
    for e in config.event_kinds.keys() {
        let n = ir.log_events.iter().filter(|l| &l.event_kind_id == e).count();
        ensure!(n == 1, "{n} log events for `{e}`");
    }
    let schemas = generate_form_schemas(&config);
    ensure!(schemas.len() == config.event_kinds.len(), "{} schemas", schemas.len());
    for (s, e) in schemas.iter().zip(config.event_kinds.keys()) {
        ensure!(&s.event_kind_id == e, "schema order: {} vs {e}", s.event_kind_id);
    }
    let golden = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden");
    for (name, text) in &first {
        let on_disk = std::fs::read_to_string(golden.join(name)).map_err(|e| format!("{name}: {e}"))?;
        ensure!(&on_disk == text, "{name} differs from its golden snapshot");
    }
    Ok(format!(
        "{} files stable and matching snapshots; {} log events, {} schemas",
        first.len(),
        ir.log_events.len(),
        schemas.len()
    ))
}

const HEX: &str = "0123456789abcdef";

fn hex(rng: &mut ChaCha8Rng, n: usize) -> String {
    (0..n).map(|_| HEX.as_bytes()[rng.gen_range(0..16)] as char).collect()
}

/// A value the parameter should accept.
fn valid(rng: &mut ChaCha8Rng, spec: &ParamSpec) -> String {
    match spec.param_type {
        ParamType::Int => {
            let v: i64 = rng.gen_range(-1_000_000..1_000_000);
            if v >= 0 && rng.gen_bool(0.2) {
                format!("+{v}")
            } else {
                v.to_string()
            }
        }
        ParamType::Float => match rng.gen_range(0..3) {
            0 => format!("{:.3}", rng.gen_range(-100.0..100.0)),
            1 => format!("{}e{}", rng.gen_range(1..99), rng.gen_range(-5..5)),
            _ => rng.gen_range(0..1000).to_string(),
        },
        ParamType::String => ["Bosana", "lot A-12", "", "tab\there"][rng.gen_range(0..4)].to_string(),
        ParamType::Text => ["line one\nline two", "", "plain", "\r\n"][rng.gen_range(0..4)].to_string(),
        ParamType::Enum => spec.enum_options.choose(rng).unwrap().clone(),
        ParamType::Link => format!("https://docs.example/{}", rng.gen_range(0..1000)),
        ParamType::Hashlink => format!("ipfs://{}\x1F{}", hex(rng, 8), hex(rng, 64)),
        ParamType::Upload | ParamType::Hashupload => hex(rng, 64),
    }
}

/// Values chosen to sit on either side of some type's rules.
const EDGE_VALUES: &[&str] = &[
    "", " ", "0", "-0", "+0", "007", " 1", "1 ", "+", "-", "1_000", "0x1f", "١٢",
    "9223372036854775807", "9223372036854775808", "-9223372036854775808", "-9223372036854775809",
    "1.", ".5", ".", "+.5", "1.e3", ".e3", "1e", "1E+5", "1e-400", "1e400", "inf", "-inf", "NaN",
    "infinity", "1,5", "1.5.1", "e5",
    "a\nb", "a\rb", "tab\there", "é",
    "cold_extraction", "Cold_extraction", "traditional_press ", "cold_extraction|traditional_press",
    "https://x", "https:", ":x", "1http://x", "h+t.p-s:x", "mailto:a@b", "urn:isbn:1", "http://a b",
    "http://a\u{85}", "http://a\u{a0}", "http://a\u{7f}", "http://a\u{2028}",
    "https://x\x1F0000000000000000000000000000000000000000000000000000000000000000",
    "https://x\x1F000000000000000000000000000000000000000000000000000000000000000",
    "https://x\x1FAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAA",
    "https:\x1F0000000000000000000000000000000000000000000000000000000000000000",
    "0000000000000000000000000000000000000000000000000000000000000000",
    "000000000000000000000000000000000000000000000000000000000000000",
    "00000000000000000000000000000000000000000000000000000000000000000",
    "ABCDEF0000000000000000000000000000000000000000000000000000000000",
    "g000000000000000000000000000000000000000000000000000000000000000",
];

pub fn schema_agreement() -> Outcome {
    let w = world();
    let config = olive_oil();
    let schemas = generate_form_schemas(&config);
    let mut rng = ChaCha8Rng::seed_from_u64(SEED ^ 9);
    let mut summary = Vec::new();
    for schema in &schemas {
        let e = &config.event_kinds[&schema.event_kind_id];
        let kind = &e.applicable_kind_ids[0];
        let actor = e
            .authorized_actor_ids
            .iter()
            .find(|a| config.kinds[kind].authorized_actor_ids.contains(a))
            .ok_or_else(|| format!("no actor may record `{}`", e.id))?;
        let target = w.entity_of(kind);
        let mut chain = w.chain.clone();
        let mut accepted = 0;
        for case in 0..VALUE_SETS {
            let mut vals: BTreeMap<String, String> = e
                .param_specs
                .iter()
                .map(|p| {
                    let v = if rng.gen_bool(0.5) {
                        valid(&mut rng, p)
                    } else {
                        EDGE_VALUES.choose(&mut rng).unwrap().to_string()
                    };
                    (p.name.clone(), v)
                })
                .collect();
            if !vals.is_empty() && rng.gen_bool(0.05) {
                let k = vals.keys().next().unwrap().clone();
                vals.remove(&k);
            }
            if rng.gen_bool(0.05) {
                vals.insert("unexpected".into(), "1".into());
            }
            let form_ok = schema.validate(&vals).is_ok();
            let op = match e.event_class {
                EventClass::D => Operation::RecordEvent { entity: target, event_kind_id: e.id.clone(), values: vals.clone() },
                EventClass::T => Operation::Transform {
                    inputs: vec![target],
                    event_kind_id: e.id.clone(),
                    outputs: vec![output(&e.generated_kind_ids[0], 1)],
                    values: vals.clone(),
                },
            };
            let engine_ok = match chain.execute(w.people.key(actor), op) {
                Ok(_) => true,
                Err(LedgerError::Rejected(ContractError::Param(_))) => false,
                Err(other) => return Err(format!("{} case {case}: {other}", e.id)),
            };
            ensure!(form_ok == engine_ok, "{} case {case}: form {form_ok}, engine {engine_ok} for {vals:?}", e.id);
            if engine_ok {
                accepted += 1;
                chain = w.chain.clone();
            }
        }
        summary.push(format!("{}:{accepted}", e.id));
    }
    Ok(format!("{VALUE_SETS} sets x {} kinds, accepted {}", schemas.len(), summary.join(" ")))
}
