//! Fixture chains shared by several criteria.

use std::collections::BTreeMap;

use agritrace::contracts::{producer_address, Operation, Outcome, OutputSpec};
use agritrace::crypto::{hash, Address};
use agritrace::ledger::{Chain, LedgerError};
use agritrace::scenario::{fixture_chain, olive_oil_flow, Participants};

pub const FARM: &str = "Oliveto Su Campu";
pub const MILL: &str = "Frantoio Sa Mola";

pub fn exec(chain: &mut Chain, people: &Participants, actor: &str, op: Operation) -> Result<Outcome, LedgerError> {
    chain.execute(people.key(actor), op).map(|r| r.outcome)
}

pub fn values(pairs: &[(&str, &str)]) -> BTreeMap<String, String> {
    pairs.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect()
}

pub fn output(kind_id: &str, quantity: u64) -> OutputSpec {
    OutputSpec {
        kind_id: kind_id.to_string(),
        quantity,
        unit: String::new(),
    }
}

pub fn grove_op(chain: &Chain, size: u64) -> Operation {
    Operation::CreateResource {
        producer: producer_address(chain.chain_id(), FARM),
        kind_id: "olive_grove".into(),
        description: "grove".into(),
        size,
        unit: String::new(),
    }
}

pub fn harvest_op(groves: Vec<Address>, outputs: Vec<OutputSpec>) -> Operation {
    let photo = hash(b"harvest photo").to_hex();
    Operation::Transform {
        inputs: groves,
        event_kind_id: "harvest".into(),
        outputs,
        values: values(&[("kg", "1"), ("variety", "Bosana"), ("photo", &photo)]),
    }
}

pub fn milling_op(lots: Vec<Address>, outputs: Vec<OutputSpec>) -> Operation {
    Operation::Transform {
        inputs: lots,
        event_kind_id: "milling".into(),
        outputs,
        values: values(&[("temperature_c", "24"), ("method", "traditional_press")]),
    }
}

pub fn bottling_op(oil: Address, outputs: Vec<OutputSpec>) -> Operation {
    Operation::Transform {
        inputs: vec![oil],
        event_kind_id: "bottling".into(),
        outputs,
        values: values(&[("bottles", "2"), ("bottle_ml", "750"), ("lot_code", "L1")]),
    }
}

/// Reference flow plus two active lots of every product kind, a mill, an
/// unlocked bottling request on the first oil lot and a second pending one,
/// all sealed.
#[derive(Clone)]
pub struct World {
    pub chain: Chain,
    pub people: Participants,
    pub grove: Address,
    pub mill: Address,
    /// Two active lots per product kind id.
    pub lots: BTreeMap<String, [Address; 2]>,
    pub pending: u64,
}

impl World {
    pub fn lot(&self, kind_id: &str) -> Address {
        self.lots[kind_id][0]
    }

    /// First active entity of `kind_id`.
    pub fn entity_of(&self, kind_id: &str) -> Address {
        if kind_id == "olive_grove" {
            self.grove
        } else if kind_id == "olive_mill" {
            self.mill
        } else {
            self.lot(kind_id)
        }
    }
}

pub fn world() -> World {
    let (mut chain, people) = fixture_chain();
    let flow = olive_oil_flow(&mut chain, &people).expect("reference flow");
    let c = &mut chain;
    let p = &people;
    let split = |c: &mut Chain, actor: &str, product: Address, q: [u64; 2]| {
        let created = exec(c, p, actor, Operation::Split { product, quantities: q.to_vec() })
            .expect("split")
            .created;
        [created[0], created[1]]
    };
    let mill = exec(
        c,
        p,
        "miller",
        Operation::CreateResource {
            producer: producer_address(c.chain_id(), MILL),
            kind_id: "olive_mill".into(),
            description: "press line".into(),
            size: 1,
            unit: String::new(),
        },
    )
    .expect("mill")
    .created[0];
    let fresh = exec(c, p, "farmer", harvest_op(vec![flow.groves[0]], vec![output("olives", 1000)]))
        .expect("harvest")
        .created[0];
    let olives = split(c, "farmer", fresh, [500, 500]);
    let oil_q = c.pending_state().entity(&flow.oils[1]).unwrap().quantity;
    let oils = split(c, "miller", flow.oils[1], [oil_q / 2, oil_q - oil_q / 2]);
    let bottles = split(c, "bottler", flow.bottles, [250, 250]);
    let pomace: Vec<Address> = c
        .pending_state()
        .entities
        .values()
        .filter(|e| e.kind_id == "pomace" && e.is_active())
        .map(|e| e.address)
        .collect();
    let request = |c: &mut Chain| {
        exec(
            c,
            p,
            "bottler",
            Operation::RequestUnlock {
                event_kind_id: "bottling".into(),
                target: oils[0],
            },
        )
        .expect("unlock request")
        .unlock_request
        .unwrap()
    };
    let unlocked = request(c);
    for approver in ["lab", "certifier"] {
        exec(c, p, approver, Operation::ApproveUnlock { request: unlocked }).expect("approval");
    }
    let pending = request(c);
    chain.seal_block();

    let lots = BTreeMap::from([
        ("olives".to_string(), olives),
        ("olive_oil".to_string(), oils),
        ("pomace".to_string(), [pomace[0], pomace[1]]),
        ("bottled_oil".to_string(), bottles),
    ]);
    World {
        grove: flow.groves[0],
        chain,
        people,
        mill,
        lots,
        pending,
    }
}
