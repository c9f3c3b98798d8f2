use std::collections::{BTreeMap, BTreeSet};

use agritrace::config::fixtures::{olive_oil, OLIVE_OIL_FILES};
use agritrace::config::{EventClass, KindClass, Role, SupplyChainConfig};
use agritrace::contracts::{producer_address, ContractError, Operation, OutputSpec};
use agritrace::crypto::{hash, Address, KeyPair, Signer};
use agritrace::ledger::{Chain, LedgerError};
use agritrace::provenance::{trace_back, trace_forward};
use agritrace::scenario::{fixture_chain, olive_oil_flow, Participants};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::world::{bottling_op, exec, grove_op, harvest_op, milling_op, output, world};
use crate::{Outcome, SEED};

type MakeOp = Box<dyn Fn(Vec<OutputSpec>) -> Operation>;

const SEQUENCES: usize = 1000;
const MAX_SEQUENCE: usize = 50;
const YIELD_CASES: usize = 500;

/// Splits `total` into `parts` positive pieces (fewer if total is small).
fn partition(rng: &mut ChaCha8Rng, total: u64, parts: usize) -> Vec<u64> {
    let parts = (parts as u64).clamp(1, total.max(1));
    let mut cuts: BTreeSet<u64> = BTreeSet::new();
    while (cuts.len() as u64) < parts - 1 {
        cuts.insert(rng.gen_range(1..total));
    }
    let mut out = Vec::new();
    let mut prev = 0;
    for c in cuts.into_iter().chain([total]) {
        out.push(c - prev);
        prev = c;
    }
    out
}

/// Sometimes breaks a partition so it no longer sums, or adds a zero part.
fn perturb(rng: &mut ChaCha8Rng, mut q: Vec<u64>) -> Vec<u64> {
    match rng.gen_range(0..10) {
        0 => q[0] += 1,
        1 if q[0] > 1 => q[0] -= 1,
        2 => q.push(0),
        _ => {}
    }
    q
}

fn actor_for(rng: &mut ChaCha8Rng, config: &SupplyChainConfig, preferred: &[String]) -> String {
    if rng.gen_bool(0.85) && !preferred.is_empty() {
        preferred.choose(rng).unwrap().clone()
    } else {
        config.actors.keys().cloned().collect::<Vec<_>>().choose(rng).unwrap().clone()
    }
}

pub fn conservation() -> Outcome {
    let config = olive_oil();
    let products: Vec<String> = config
        .kinds
        .values()
        .filter(|k| k.kind_class == KindClass::P)
        .map(|k| k.id.clone())
        .collect();
    let (mut base, people) = fixture_chain();
    let mut groves = Vec::new();
    for size in [12_000, 7_500] {
        let op = grove_op(&base, size);
        groves.push(exec(&mut base, &people, "farmer", op).map_err(|e| e.to_string())?.created[0]);
    }
    base.seal_block();

    let mut rng = ChaCha8Rng::seed_from_u64(SEED ^ 2);
    let (mut steps, mut accepted) = (0usize, 0usize);
    for seq in 0..SEQUENCES {
        let mut chain = base.clone();
        let mut model: BTreeMap<&str, u64> = products.iter().map(|k| (k.as_str(), 0)).collect();
        let mut lots: Vec<Address> = Vec::new();
        for step in 0..rng.gen_range(1..=MAX_SEQUENCE) {
            let state = chain.pending_state();
            let kind_of = |a: &Address| state.entity(a).unwrap().kind_id.clone();
            let quantity = |a: &Address| state.entity(a).unwrap().quantity;
            let choice = if lots.is_empty() { 0 } else { rng.gen_range(0..10) };
            // supply deltas the op should cause if accepted
            let mut delta: Vec<(String, i128)> = Vec::new();
            let (actor, op) = match choice {
                0..=2 => {
                    let mut inputs = groves.clone();
                    inputs.shuffle(&mut rng);
                    inputs.truncate(rng.gen_range(1..=2));
                    let q = rng.gen_range(1..=30_000);
                    delta.push(("olives".into(), q as i128));
                    let actor = actor_for(&mut rng, &config, &["farmer".to_string()]);
                    (actor, harvest_op(inputs, vec![output("olives", q)]))
                }
                3 => {
                    let input = *lots.choose(&mut rng).unwrap();
                    let q_in = quantity(&input);
                    let (oil, pomace) = (rng.gen_range(0..=q_in / 5 + 2), rng.gen_range(0..=q_in / 10 + 1));
                    delta.push((kind_of(&input), -(q_in as i128)));
                    delta.push(("olive_oil".into(), oil as i128));
                    delta.push(("pomace".into(), pomace as i128));
                    let actor = actor_for(&mut rng, &config, &["miller".to_string()]);
                    (actor, milling_op(vec![input], vec![output("olive_oil", oil), output("pomace", pomace)]))
                }
                4..=6 => {
                    let product = *lots.choose(&mut rng).unwrap();
                    let kind = config.kind(&kind_of(&product)).unwrap();
                    let n = rng.gen_range(1..=4);
                    let parts = partition(&mut rng, quantity(&product), n);
                    let actor = actor_for(&mut rng, &config, &kind.authorized_actor_ids);
                    (actor, Operation::Split { product, quantities: perturb(&mut rng, parts) })
                }
                _ => {
                    let n = rng.gen_range(1..=3);
                    let mut products: Vec<Address> = lots.choose_multiple(&mut rng, n).copied().collect();
                    if rng.gen_bool(0.05) {
                        products.push(products[0]);
                    }
                    let kind = config.kind(&kind_of(&products[0])).unwrap();
                    let total: u64 = products.iter().map(quantity).sum();
                    let n = rng.gen_range(1..=3);
                    let parts = partition(&mut rng, total, n);
                    let actor = actor_for(&mut rng, &config, &kind.authorized_actor_ids);
                    (actor, Operation::Merge { products, quantities: perturb(&mut rng, parts) })
                }
            };
            let lot_change = matches!(op, Operation::Split { .. } | Operation::Merge { .. });
            let sums_match = match &op {
                Operation::Split { product, quantities } => {
                    quantities.iter().sum::<u64>() == quantity(product) && !quantities.contains(&0)
                }
                Operation::Merge { products, quantities } => {
                    quantities.iter().sum::<u64>() == products.iter().map(quantity).sum::<u64>()
                        && !quantities.contains(&0)
                }
                _ => true,
            };
            steps += 1;
            match exec(&mut chain, &people, &actor, op) {
                Ok(out) => {
                    accepted += 1;
                    ensure!(sums_match, "sequence {seq} step {step}: lot change with wrong parts accepted");
                    if !lot_change {
                        for (k, d) in delta {
                            let m = model.get_mut(k.as_str()).unwrap();
                            *m = u64::try_from(*m as i128 + d).map_err(|_| format!("negative model supply of {k}"))?;
                        }
                    }
                    lots.extend(out.created);
                }
                Err(LedgerError::Rejected(_)) => {}
                Err(e) => return Err(format!("sequence {seq} step {step}: {e}")),
            }
            let state = chain.pending_state();
            for (k, expected) in &model {
                let supply = state.tokens.supply(k);
                let live = state.live_quantity(k);
                ensure!(
                    supply == *expected && live == *expected,
                    "sequence {seq} step {step}: {k} supply {supply}, live {live}, expected {expected}"
                );
            }
            lots.retain(|a| chain.pending_state().entity(a).unwrap().is_active());
        }
    }
    Ok(format!("{SEQUENCES} sequences, {steps} steps, {accepted} accepted"))
}

/// Configured yield ratios read straight from the descriptor text, as
/// (numerator, denominator) of the decimal literal.
fn raw_yields() -> BTreeMap<String, (u128, u128)> {
    let text = OLIVE_OIL_FILES.iter().find(|(n, _)| *n == "event_kinds.json").unwrap().1;
    let doc: serde_json::Value = serde_json::from_str(text).unwrap();
    let mut out = BTreeMap::new();
    for e in doc["items"].as_array().unwrap() {
        let literal = e["max_yield"].as_str().unwrap_or("1");
        let (int, frac) = literal.split_once('.').unwrap_or((literal, ""));
        let num: u128 = format!("{int}{frac}").parse().unwrap();
        out.insert(e["id"].as_str().unwrap().to_string(), (num, 10u128.pow(frac.len() as u32)));
    }
    out
}

fn within_yield(out: u64, input: u64, (n, d): (u128, u128)) -> bool {
    out as u128 * d <= input as u128 * n
}

/// Output total near the bound `input * n / d`, occasionally anywhere.
fn near_bound(rng: &mut ChaCha8Rng, input: u64, (n, d): (u128, u128)) -> u64 {
    let bound = (input as u128 * n / d) as i128;
    let q = if rng.gen_bool(0.8) {
        bound + rng.gen_range(-3..=3)
    } else {
        rng.gen_range(1..=bound * 2 + 2)
    };
    q.max(1) as u64
}

pub fn yield_bound() -> Outcome {
    let yields = raw_yields();
    let (mut base, people) = fixture_chain();
    base.seal_block();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED ^ 3);
    let (mut accepted, mut rejected) = (0, 0);
    for case in 0..YIELD_CASES {
        let mut chain = base.clone();
        let c = &mut chain;
        let p = &people;
        let fail = |e: LedgerError| format!("case {case}: setup: {e}");
        let mut groves = Vec::new();
        for _ in 0..rng.gen_range(1..=2) {
            let op = grove_op(c, rng.gen_range(10..=20_000));
            groves.push(exec(c, p, "farmer", op).map_err(fail)?.created[0]);
        }
        let grove_total: u64 = groves.iter().map(|g| c.pending_state().entity(g).unwrap().quantity).sum();
        let event = ["harvest", "milling", "bottling"][rng.gen_range(0..3)];
        let (input, actor, kind, make): (u64, &str, &str, MakeOp) = match event {
            "harvest" => {
                let g = groves.clone();
                (grove_total, "farmer", "olives", Box::new(move |o| harvest_op(g.clone(), o)))
            }
            _ => {
                let olives_q = rng.gen_range(10..=grove_total * 2).max(10);
                let olives = exec(c, p, "farmer", harvest_op(groves.clone(), vec![output("olives", olives_q)]))
                    .map_err(fail)?
                    .created[0];
                if event == "milling" {
                    (olives_q, "miller", "olive_oil", Box::new(move |o| milling_op(vec![olives], o)))
                } else {
                    let oil_q = olives_q / 5;
                    let oil = exec(c, p, "miller", milling_op(vec![olives], vec![output("olive_oil", oil_q)]))
                        .map_err(fail)?
                        .created[0];
                    let request = exec(
                        c,
                        p,
                        "bottler",
                        Operation::RequestUnlock { event_kind_id: "bottling".into(), target: oil },
                    )
                    .map_err(fail)?
                    .unlock_request
                    .unwrap();
                    for a in ["lab", "certifier"] {
                        exec(c, p, a, Operation::ApproveUnlock { request }).map_err(fail)?;
                    }
                    (oil_q, "bottler", "bottled_oil", Box::new(move |o| bottling_op(oil, o)))
                }
            }
        };
        let ratio = yields[event];
        let total = near_bound(&mut rng, input, ratio);
        let n = rng.gen_range(1..=2);
        let outputs: Vec<_> = partition(&mut rng, total, n)
            .into_iter()
            .map(|q| output(kind, q))
            .collect();
        let expected = within_yield(total, input, ratio);
        let got = match exec(c, p, actor, make(outputs)) {
            Ok(_) => true,
            Err(LedgerError::Rejected(ContractError::YieldExceeded { .. })) => false,
            Err(e) => return Err(format!("case {case} ({event}): unexpected {e}")),
        };
        ensure!(got == expected, "case {case} ({event}): {total} out of {input}, engine {got}, oracle {expected}");
        if got {
            accepted += 1
        } else {
            rejected += 1
        }
    }
    ensure!(accepted > 50 && rejected > 50, "unbalanced cases: {accepted}/{rejected}");
    Ok(format!("{YIELD_CASES} cases, {accepted} accepted, {rejected} rejected"))
}

/// Who may perform an operation, computed from the descriptors alone.
struct Table<'a>(&'a SupplyChainConfig);

impl Table<'_> {
    fn all(&self) -> BTreeSet<String> {
        self.0.actors.keys().cloned().collect()
    }

    fn with_role(&self, pred: impl Fn(Role) -> bool) -> BTreeSet<String> {
        self.0.actors.values().filter(|a| pred(a.role)).map(|a| a.id.clone()).collect()
    }

    fn kind(&self, id: &str) -> BTreeSet<String> {
        self.0.kinds[id].authorized_actor_ids.iter().cloned().collect()
    }

    fn event(&self, id: &str) -> BTreeSet<String> {
        self.0.event_kinds[id].authorized_actor_ids.iter().cloned().collect()
    }

    fn both(a: BTreeSet<String>, b: BTreeSet<String>) -> BTreeSet<String> {
        a.intersection(&b).cloned().collect()
    }
}

/// Valid value for every parameter of `event`.
fn sample_values(config: &SupplyChainConfig, event: &str) -> BTreeMap<String, String> {
    use agritrace::params::ParamType as T;
    let digest = hash(b"doc").to_hex();
    config.event_kinds[event]
        .param_specs
        .iter()
        .map(|p| {
            let v = match p.param_type {
                T::Int => "3".to_string(),
                T::Float => "1.25".to_string(),
                T::String | T::Text => "note".to_string(),
                T::Enum => p.enum_options[0].clone(),
                T::Link => "https://example.org/doc".to_string(),
                T::Hashlink => format!("https://example.org/doc\x1F{digest}"),
                T::Upload | T::Hashupload => digest.clone(),
            };
            (p.name.clone(), v)
        })
        .collect()
}

pub fn authorization() -> Outcome {
    let w = world();
    let config = w.chain.state().config.clone();
    let t = Table(&config);
    let mut cases: Vec<(String, Operation, BTreeSet<String>)> = Vec::new();

    cases.push((
        "register_address".into(),
        Operation::RegisterAddress {
            address: KeyPair::from_seed("newcomer").address(),
            actor_id: "retailer".into(),
            roles: BTreeSet::new(),
            enabled: true,
        },
        t.with_role(|r| r == Role::Administrator),
    ));
    for company in config.companies.values() {
        for k in &company.resource_ids {
            if config.kinds[k].kind_class != KindClass::R {
                continue;
            }
            cases.push((
                format!("create_resource {k} @ {}", company.name),
                Operation::CreateResource {
                    producer: producer_address(w.chain.chain_id(), &company.name),
                    kind_id: k.clone(),
                    description: String::new(),
                    size: 10,
                    unit: String::new(),
                },
                Table::both(t.kind(k), company.authorized_actor_ids.iter().cloned().collect()),
            ));
        }
    }
    for e in config.event_kinds.values() {
        let vals = sample_values(&config, &e.id);
        match e.event_class {
            EventClass::D => {
                for k in &e.applicable_kind_ids {
                    cases.push((
                        format!("record_event {} on {k}", e.id),
                        Operation::RecordEvent { entity: w.entity_of(k), event_kind_id: e.id.clone(), values: vals.clone() },
                        Table::both(t.event(&e.id), t.kind(k)),
                    ));
                }
            }
            EventClass::T => {
                let k = &e.applicable_kind_ids[0];
                let input = w.entity_of(k);
                let outputs = vec![output(&e.generated_kind_ids[0], 1)];
                cases.push((
                    format!("transform {} on {k}", e.id),
                    Operation::Transform { inputs: vec![input], event_kind_id: e.id.clone(), outputs, values: vals },
                    Table::both(t.event(&e.id), t.kind(k)),
                ));
            }
        }
        if !e.required_unlock_actor_ids.is_empty() {
            cases.push((
                format!("request_unlock {}", e.id),
                Operation::RequestUnlock { event_kind_id: e.id.clone(), target: w.entity_of(&e.applicable_kind_ids[0]) },
                t.event(&e.id),
            ));
            cases.push((
                format!("approve_unlock {}", e.id),
                Operation::ApproveUnlock { request: w.pending },
                e.required_unlock_actor_ids.iter().cloned().collect(),
            ));
        }
    }
    for k in config.kinds.values() {
        let entity = w.entity_of(&k.id);
        cases.push((
            format!("notarize {}", k.id),
            Operation::Notarize { entity, digest: hash(b"certificate"), locator: "urn:doc:1".into(), metadata: vec![] },
            t.kind(&k.id),
        ));
        if k.kind_class == KindClass::P {
            let [a, b] = w.lots[&k.id];
            let qa = w.chain.state().entity(&a).unwrap().quantity;
            let qb = w.chain.state().entity(&b).unwrap().quantity;
            cases.push((
                format!("split {}", k.id),
                Operation::Split { product: a, quantities: vec![1, qa - 1] },
                t.kind(&k.id),
            ));
            cases.push((
                format!("merge {}", k.id),
                Operation::Merge { products: vec![a, b], quantities: vec![qa + qb] },
                t.kind(&k.id),
            ));
        }
    }
    cases.push((
        "asseverate".into(),
        Operation::Asseverate { entity: w.lot("olive_oil"), record: 0 },
        t.with_role(|r| matches!(r, Role::CertificationAuthority | Role::Professional | Role::AnalysisLab)),
    ));
    cases.push((
        "pay".into(),
        Operation::Pay { recipient: KeyPair::from_seed("payee").address(), amount: 5 },
        t.all(),
    ));

    let mut allowed_count = 0;
    for (label, op, allowed) in &cases {
        for actor in config.actors.keys() {
            let mut chain: Chain = w.chain.clone();
            let got = match exec(&mut chain, &w.people, actor, op.clone()) {
                Ok(_) => true,
                Err(LedgerError::Rejected(e)) if e.is_authorization() => false,
                Err(e) => return Err(format!("{label} by {actor}: not an authorization outcome: {e}")),
            };
            let want = allowed.contains(actor);
            ensure!(got == want, "{label} by {actor}: engine {got}, table {want}");
            allowed_count += want as usize;
        }
    }
    let ops: BTreeSet<&str> = cases.iter().map(|(_, op, _)| op.name()).collect();
    ensure!(ops.len() == 11, "only {} operation types covered", ops.len());
    Ok(format!(
        "{} actors x {} operations, {allowed_count} allowed",
        config.actors.len(),
        cases.len()
    ))
}

pub fn end_to_end() -> Outcome {
    let (mut chain, people): (Chain, Participants) = fixture_chain();
    let flow = olive_oil_flow(&mut chain, &people).map_err(|e| e.to_string())?;
    let [og1, og2] = flow.groves;
    let tree = trace_back(&chain, flow.bottles, None).map_err(|e| e.to_string())?;
    let leaves = tree.leaves();
    ensure!(leaves == BTreeSet::from([og1, og2]), "leaves {leaves:?}");
    let olives = tree.find(&flow.olives).ok_or("olives not on the path")?;
    let harvests = olives.events.iter().filter(|e| e.event_kind == "harvest").count();
    ensure!(harvests == 1, "harvest listed {harvests} times at the olives node");
    let mut elsewhere = 0;
    tree.walk(&mut |n| {
        if n.address != flow.olives {
            elsewhere += n.events.iter().filter(|e| e.event_kind == "harvest").count();
        }
    });
    ensure!(elsewhere == 0, "harvest also listed on {elsewhere} other nodes");
    ensure!(olives.quantity == 5200, "olives quantity {}", olives.quantity);
    let lot_sizes: Vec<u64> = flow.lots.iter().map(|l| chain.state().entity(l).unwrap().quantity).collect();
    ensure!(lot_sizes == [3000, 2200], "lots {lot_sizes:?}");
    let forward = trace_forward(&chain, og1).map_err(|e| e.to_string())?;
    ensure!(forward.iter().any(|d| d.address == flow.bottles), "bottle not downstream of OG1");
    Ok(format!("leaves {{OG1, OG2}}, {} descendants of OG1", forward.len()))
}
