//! Deterministic olive-oil chain used by tests, the acceptance suite and the
//! CLI's demo command. Every actor gets a key derived from `olive-<actor id>`.

use std::collections::{BTreeMap, BTreeSet};

use crate::config::{fixtures, SupplyChainConfig};
use crate::contracts::{producer_address, Operation, OutputSpec};
use crate::crypto::{hash, Address, KeyPair, Signer};
use crate::ledger::{Chain, GasSchedule, Genesis, LedgerError, TimeSource};

pub const CHAIN_ID: &str = "olive-demo";
pub const GENESIS_TIME: u64 = 1_700_000_000;

/// One key per configured actor.
#[derive(Debug, Clone)]
pub struct Participants {
    keys: BTreeMap<String, KeyPair>,
}

impl Participants {
    pub fn for_config(config: &SupplyChainConfig) -> Participants {
        let keys = config
            .actors
            .keys()
            .map(|id| (id.clone(), KeyPair::from_seed(&format!("olive-{id}"))))
            .collect();
        Participants { keys }
    }

    pub fn key(&self, actor_id: &str) -> &KeyPair {
        self.keys
            .get(actor_id)
            .unwrap_or_else(|| panic!("no key for actor `{actor_id}`"))
    }

    pub fn address(&self, actor_id: &str) -> Address {
        self.key(actor_id).address()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &KeyPair)> {
        self.keys.iter().map(|(k, v)| (k.as_str(), v))
    }
}

/// Genesis for `config` with `admin` as owner and 1000 currency units per
/// participant.
pub fn genesis_for(config: SupplyChainConfig, people: &Participants, admin: &str) -> Genesis {
    Genesis {
        chain_id: CHAIN_ID.to_string(),
        owner: people.address(admin),
        owner_actor_id: admin.to_string(),
        allocations: people.iter().map(|(_, k)| (k.address(), 1000)).collect(),
        gas_schedule: GasSchedule::default(),
        timestamp: GENESIS_TIME,
        config,
    }
}

/// Fixture chain with every actor registered in block 1.
pub fn fixture_chain() -> (Chain, Participants) {
    let config = fixtures::olive_oil();
    let people = Participants::for_config(&config);
    let genesis = genesis_for(config, &people, "admin");
    let mut chain = Chain::genesis(genesis, TimeSource::Logical).expect("fixture genesis");
    register_all(&mut chain, &people).expect("fixture registration");
    chain.seal_block();
    (chain, people)
}

pub fn register_all(chain: &mut Chain, people: &Participants) -> Result<(), LedgerError> {
    let owner = chain.state().owner;
    let admin = people
        .iter()
        .find(|(_, k)| k.address() == owner)
        .map(|(_, k)| k.clone())
        .expect("owner among participants");
    for (id, key) in people.iter() {
        if key.address() == owner {
            continue;
        }
        chain.execute(
            &admin,
            Operation::RegisterAddress {
                address: key.address(),
                actor_id: id.to_string(),
                roles: BTreeSet::new(),
                enabled: true,
            },
        )?;
    }
    Ok(())
}

/// Addresses produced by [`olive_oil_flow`].
#[derive(Debug, Clone)]
pub struct OliveOilFlow {
    pub groves: [Address; 2],
    pub olives: Address,
    pub lots: [Address; 2],
    pub oils: [Address; 2],
    pub bottles: Address,
    pub unlock_request: u64,
}

fn values(pairs: &[(&str, &str)]) -> BTreeMap<String, String> {
    pairs
        .iter()
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect()
}

fn out(kind_id: &str, quantity: u64) -> OutputSpec {
    OutputSpec {
        kind_id: kind_id.to_string(),
        quantity,
        unit: String::new(),
    }
}

/// Two groves harvested into one olive lot, split into two lots, each
/// milled, the first oil bottled after lab and certifier approval. Seals one
/// block per step.
pub fn olive_oil_flow(chain: &mut Chain, people: &Participants) -> Result<OliveOilFlow, LedgerError> {
    let farm = producer_address(chain.chain_id(), "Oliveto Su Campu");
    let step = |chain: &mut Chain, actor: &str, op: Operation| {
        let r = chain.execute(people.key(actor), op)?;
        chain.seal_block();
        Ok::<_, LedgerError>(r.outcome)
    };
    let grove = |chain: &mut Chain, name: &str| {
        step(
            chain,
            "farmer",
            Operation::CreateResource {
                producer: farm,
                kind_id: "olive_grove".into(),
                description: name.into(),
                size: 12_000,
                unit: String::new(),
            },
        )
        .map(|o| o.created[0])
    };
    let og1 = grove(chain, "Olive grove 1")?;
    let og2 = grove(chain, "Olive grove 2")?;

    let photo = hash(b"harvest photo").to_hex();
    let olives = step(
        chain,
        "farmer",
        Operation::Transform {
            inputs: vec![og1, og2],
            event_kind_id: "harvest".into(),
            outputs: vec![out("olives", 5200)],
            values: values(&[("kg", "5200"), ("variety", "Bosana"), ("photo", &photo)]),
        },
    )?
    .created[0];

    let lots = step(
        chain,
        "miller",
        Operation::Split {
            product: olives,
            quantities: vec![3000, 2200],
        },
    )?
    .created;

    let mut oils = Vec::new();
    for (lot, qty) in lots.iter().zip([3000u64, 2200]) {
        let created = step(
            chain,
            "miller",
            Operation::Transform {
                inputs: vec![*lot],
                event_kind_id: "milling".into(),
                outputs: vec![out("olive_oil", qty / 5 - 100), out("pomace", 100)],
                values: values(&[("temperature_c", "26.5"), ("method", "cold_extraction")]),
            },
        )?
        .created;
        oils.push(created[0]);
    }

    let request = step(
        chain,
        "bottler",
        Operation::RequestUnlock {
            event_kind_id: "bottling".into(),
            target: oils[0],
        },
    )?
    .unlock_request
    .expect("unlock id");
    for approver in ["lab", "certifier"] {
        step(chain, approver, Operation::ApproveUnlock { request })?;
    }
    let bottles = step(
        chain,
        "bottler",
        Operation::Transform {
            inputs: vec![oils[0]],
            event_kind_id: "bottling".into(),
            outputs: vec![out("bottled_oil", 500)],
            values: values(&[("bottles", "1000"), ("bottle_ml", "500"), ("lot_code", "SM-2024-01")]),
        },
    )?
    .created[0];

    Ok(OliveOilFlow {
        groves: [og1, og2],
        olives,
        lots: [lots[0], lots[1]],
        oils: [oils[0], oils[1]],
        bottles,
        unlock_request: request,
    })
}
