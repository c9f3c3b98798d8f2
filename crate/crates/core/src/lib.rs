//! Configuration-driven traceability engine for agri-food supply chains.
//!
//! A supply chain is described by five JSON descriptor files (actors,
//! companies, kinds, event kinds, activities). [`config`] validates them into
//! a [`config::SupplyChainConfig`], which parameterises everything else:
//!
//! - [`ledger`]: a single-sealer, hash-chained ledger with gas metering and
//!   an append-only chain file.
//! - [`contracts`]: the state machines executed by ledger transactions:
//!   address catalog, producers, resources and product lots, events,
//!   split/merge, notarization, asseveration, unlock requests, tokens.
//! - [`params`]: the byte encoding of event parameters kept in the log.
//! - [`docstore`]: a local content-addressed object store.
//! - [`provenance`]: origin trees, forward navigation, QR payloads.
//! - [`generator`]: contract IR, rendered contract sources and form schemas.
//! - [`scenario`]: a deterministic olive-oil chain for demos and tests.
//!
//! ```
//! use agritrace::provenance::trace_back;
//! use agritrace::scenario::{fixture_chain, olive_oil_flow};
//!
//! let (mut chain, people) = fixture_chain();
//! let flow = olive_oil_flow(&mut chain, &people).unwrap();
//! let tree = trace_back(&chain, flow.bottles, None).unwrap();
//! assert_eq!(tree.leaves().len(), 2);
//! ```

pub mod config;
pub mod contracts;
pub mod crypto;
pub mod docstore;
pub mod generator;
pub mod ledger;
pub mod params;
pub mod provenance;
pub mod scenario;
