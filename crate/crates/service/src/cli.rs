//! The `trace` command.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use agritrace::config::{validate_config, DescriptorSet, Role, SupplyChainConfig};
use agritrace::contracts::{producer_address, Operation, OutputSpec};
use agritrace::crypto::{Address, Hash, KeyPair};
use agritrace::generator::{generate_contract_ir, generate_form_schemas, render_contracts, RenderTarget};
use agritrace::ledger::{read_chain_file, verify_chain_bytes, GasSchedule, StorageMode};
use agritrace::provenance::{render_trace, trace_back, trace_forward, QrPayload};
use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use crate::api::{self, AppState};
use crate::keystore::{KeyFile, KDF_ITERATIONS};
use crate::node::{self, execute_and_seal, persist, Home, InitOptions};

#[derive(Debug, Parser)]
#[command(name = "trace", version, about = "Configuration-driven agri-food traceability node")]
pub struct Cli {
    /// Node directory holding the chain file, documents and keys.
    #[arg(long, global = true, env = "TRACE_HOME", default_value = ".trace")]
    pub home: PathBuf,
    /// Print machine-readable JSON.
    #[arg(long, global = true)]
    pub json: bool,
    /// Keystore passphrase.
    #[arg(long, global = true, env = "TRACE_PASSPHRASE", hide_env_values = true)]
    pub passphrase: Option<String>,
    /// Actor id whose key signs write commands.
    #[arg(long = "as", global = true, env = "TRACE_ACTOR", value_name = "ACTOR")]
    pub actor: Option<String>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Descriptor files.
    #[command(subcommand)]
    Config(ConfigCmd),
    #[command(subcommand)]
    Chain(ChainCmd),
    /// Encrypted operator keys.
    #[command(subcommand)]
    Key(KeyCmd),
    /// Address catalog.
    #[command(subcommand)]
    Actor(ActorCmd),
    #[command(subcommand)]
    Resource(ResourceCmd),
    #[command(subcommand)]
    Event(EventCmd),
    #[command(subcommand)]
    Product(ProductCmd),
    /// Unlock requests for gated transformations.
    #[command(subcommand)]
    Unlock(UnlockCmd),
    #[command(subcommand)]
    Token(TokenCmd),
    /// Content-addressed document store.
    #[command(subcommand)]
    Doc(DocCmd),
    /// Provenance queries.
    #[command(subcommand)]
    Trace(TraceCmd),
    /// Contract and form artifacts from a configuration.
    #[command(subcommand)]
    Generate(GenerateCmd),
    /// Run the HTTP API.
    Serve(ServeArgs),
}

#[derive(Debug, Subcommand)]
pub enum ConfigCmd {
    /// Validate a descriptor directory.
    Validate { dir: PathBuf },
}

#[derive(Debug, Subcommand)]
pub enum ChainCmd {
    /// Create genesis from a configuration and a key for every actor.
    Init(InitArgs),
    /// Replay and check the chain file.
    Verify,
    /// Estimate the gas of storing a payload.
    Gas {
        #[arg(long)]
        payload: u64,
        #[arg(long, default_value = "log")]
        mode: StorageMode,
        /// Gas schedule JSON; the built-in defaults otherwise.
        #[arg(long)]
        schedule: Option<PathBuf>,
    },
    Info,
}

#[derive(Debug, Args)]
pub struct InitArgs {
    pub config_dir: PathBuf,
    #[arg(long, default_value = "admin")]
    pub admin: String,
    #[arg(long, default_value = "agritrace")]
    pub chain_id: String,
    /// Currency allocated to each actor at genesis.
    #[arg(long, default_value_t = 1000)]
    pub fund: u64,
    /// Derive keys from `olive-<actor id>` (reproducible, not secret).
    #[arg(long)]
    pub seeded: bool,
    /// Leave actors unregistered.
    #[arg(long)]
    pub no_register: bool,
    /// Also record the olive-oil reference flow. Implies --seeded.
    #[arg(long)]
    pub demo: bool,
    #[arg(long)]
    pub gas_schedule: Option<PathBuf>,
    #[arg(long, default_value_t = KDF_ITERATIONS, hide = true)]
    pub kdf_iterations: u32,
}

#[derive(Debug, Subcommand)]
pub enum KeyCmd {
    List,
    /// Create a key for an actor id. Register it with `actor register`.
    Generate {
        actor_id: String,
        #[arg(long, default_value_t = KDF_ITERATIONS, hide = true)]
        kdf_iterations: u32,
    },
}

#[derive(Debug, Subcommand)]
pub enum ActorCmd {
    /// Catalog an address (owner only).
    Register {
        address: Address,
        actor_id: String,
        #[arg(long = "role")]
        roles: Vec<String>,
        #[arg(long)]
        disabled: bool,
    },
    List,
}

#[derive(Debug, Subcommand)]
pub enum ResourceCmd {
    Create {
        #[arg(long)]
        company: String,
        #[arg(long)]
        kind: String,
        #[arg(long)]
        size: u64,
        #[arg(long, default_value = "")]
        unit: String,
        #[arg(long, default_value = "")]
        description: String,
    },
}

#[derive(Debug, Subcommand)]
pub enum EventCmd {
    /// Record a documentation event.
    Record {
        entity: Address,
        event_kind: String,
        /// Parameter value, repeatable.
        #[arg(short = 'p', long = "param", value_name = "NAME=VALUE", value_parser = parse_kv)]
        params: Vec<(String, String)>,
    },
    /// Certify record `record` of `entity`.
    Asseverate { entity: Address, record: u32 },
}

#[derive(Debug, Subcommand)]
pub enum ProductCmd {
    Split {
        product: Address,
        #[arg(required = true, num_args = 2..)]
        quantities: Vec<u64>,
    },
    Merge {
        #[arg(required = true, num_args = 2..)]
        products: Vec<Address>,
        /// Output lot quantities, comma separated.
        #[arg(short, long, required = true, value_delimiter = ',')]
        quantities: Vec<u64>,
    },
    Transform {
        #[arg(required = true)]
        inputs: Vec<Address>,
        #[arg(long)]
        event: String,
        /// `KIND:QUANTITY[:UNIT]`, repeatable.
        #[arg(short, long = "output", required = true, value_parser = parse_output)]
        outputs: Vec<OutputSpec>,
        #[arg(short = 'p', long = "param", value_name = "NAME=VALUE", value_parser = parse_kv)]
        params: Vec<(String, String)>,
    },
}

#[derive(Debug, Subcommand)]
pub enum UnlockCmd {
    Request { event_kind: String, target: Address },
    Approve { id: u64 },
    List,
}

#[derive(Debug, Subcommand)]
pub enum TokenCmd {
    Balances {
        #[arg(long)]
        holder: Option<Address>,
    },
    Pay { recipient: Address, amount: u64 },
}

#[derive(Debug, Subcommand)]
pub enum DocCmd {
    Put {
        file: PathBuf,
        #[arg(long)]
        media_type: Option<String>,
    },
    Get {
        id: Hash,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Store a file and anchor its digest on an entity.
    Notarize {
        entity: Address,
        file: PathBuf,
        #[arg(long)]
        locator: Option<String>,
        #[arg(long)]
        media_type: Option<String>,
    },
}

#[derive(Debug, Subcommand)]
pub enum TraceCmd {
    /// Origin tree.
    Back {
        address: Address,
        #[arg(long)]
        depth: Option<usize>,
    },
    /// Everything derived from an entity.
    Forward { address: Address },
    /// QR payload for a product.
    Qr { address: Address },
    /// Entities, optionally of one kind.
    List {
        #[arg(long)]
        kind: Option<String>,
    },
}

#[derive(Debug, Subcommand)]
pub enum GenerateCmd {
    Contracts {
        config_dir: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        /// `solidity`, `markdown` or `all`.
        #[arg(long, default_value = "all")]
        target: String,
    },
    Forms {
        config_dir: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
    },
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long, env = "TRACE_LISTEN", default_value = "127.0.0.1:8080")]
    pub listen: String,
    /// Directory of the web UI bundle.
    #[arg(long, env = "TRACE_STATIC_DIR")]
    pub static_dir: Option<PathBuf>,
    /// Initialise the home from this configuration when it has no chain.
    #[arg(long, env = "TRACE_CONFIG")]
    pub config: Option<PathBuf>,
}

fn parse_kv(s: &str) -> Result<(String, String), String> {
    s.split_once('=')
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .ok_or_else(|| format!("expected NAME=VALUE, got `{s}`"))
}

fn parse_output(s: &str) -> Result<OutputSpec, String> {
    let mut parts = s.splitn(3, ':');
    let kind_id = parts.next().unwrap_or_default().to_string();
    let quantity = parts
        .next()
        .ok_or_else(|| format!("expected KIND:QUANTITY[:UNIT], got `{s}`"))?
        .parse()
        .map_err(|e| format!("quantity in `{s}`: {e}"))?;
    let unit = parts.next().unwrap_or_default().to_string();
    Ok(OutputSpec { kind_id, quantity, unit })
}

/// What a command prints, and whether it counts as success.
pub struct Report {
    pub json: Value,
    pub text: String,
    pub ok: bool,
}

impl Report {
    fn new(json: Value, text: impl Into<String>) -> Report {
        Report {
            json,
            text: text.into(),
            ok: true,
        }
    }

    fn failed(mut self) -> Report {
        self.ok = false;
        self
    }
}

pub fn main() -> ExitCode {
    let cli = Cli::parse();
    let default = if matches!(cli.command, Command::Serve(_)) { "info" } else { "warn" };
    tracing_subscriber::fmt()
        .with_writer(std::io::stderr)
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| default.into()),
        )
        .init();
    let json = cli.json;
    match run(cli) {
        Ok(r) => {
            let mut text = if json {
                serde_json::to_string_pretty(&r.json).expect("json")
            } else {
                r.text
            };
            if !text.is_empty() && !text.ends_with('\n') {
                text.push('\n');
            }
            // a closed pipe (`| head`) is not an error
            let _ = std::io::stdout().lock().write_all(text.as_bytes());
            if r.ok {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

struct Ctx {
    home: Home,
    passphrase: Option<String>,
    actor: Option<String>,
}

impl Ctx {
    fn passphrase(&self) -> anyhow::Result<&str> {
        self.passphrase
            .as_deref()
            .ok_or_else(|| anyhow!("a passphrase is needed: pass --passphrase or set TRACE_PASSPHRASE"))
    }

    fn signer(&self) -> anyhow::Result<KeyPair> {
        let actor = self
            .actor
            .as_deref()
            .ok_or_else(|| anyhow!("say who signs: pass --as <actor id> or set TRACE_ACTOR"))?;
        let keys = self.home.keys()?;
        let file = keys.for_actor(actor)?;
        Ok(keys.unlock(&file, self.passphrase()?)?)
    }

    /// Signs, executes and seals `op`, then appends the block.
    fn submit(&self, op: Operation) -> anyhow::Result<Report> {
        let mut chain = self.home.load_chain()?;
        let key = self.signer()?;
        let name = op.name();
        let (receipt, block) = execute_and_seal(&mut chain, &key, op)?;
        persist(&self.home, &block)?;
        let mut text = format!(
            "{name} sealed in block {} (tx {}, gas {})\n",
            receipt.height, receipt.tx, receipt.gas_used
        );
        for a in &receipt.created {
            text.push_str(&format!("created {a}\n"));
        }
        if let Some(id) = receipt.unlock_request {
            text.push_str(&format!("unlock request {id}\n"));
        }
        Ok(Report::new(json!(receipt), text))
    }
}

pub fn run(cli: Cli) -> anyhow::Result<Report> {
    let ctx = Ctx {
        home: Home::new(cli.home),
        passphrase: cli.passphrase,
        actor: cli.actor,
    };
    match cli.command {
        Command::Config(ConfigCmd::Validate { dir }) => config_validate(&dir),
        Command::Chain(c) => chain(&ctx, c),
        Command::Key(c) => key(&ctx, c),
        Command::Actor(c) => actor(&ctx, c),
        Command::Resource(ResourceCmd::Create {
            company,
            kind,
            size,
            unit,
            description,
        }) => {
            let chain_id = ctx.home.load_chain()?.chain_id().to_string();
            ctx.submit(Operation::CreateResource {
                producer: producer_address(&chain_id, &company),
                kind_id: kind,
                description,
                size,
                unit,
            })
        }
        Command::Event(EventCmd::Record {
            entity,
            event_kind,
            params,
        }) => ctx.submit(Operation::RecordEvent {
            entity,
            event_kind_id: event_kind,
            values: params.into_iter().collect(),
        }),
        Command::Event(EventCmd::Asseverate { entity, record }) => {
            ctx.submit(Operation::Asseverate { entity, record })
        }
        Command::Product(c) => ctx.submit(match c {
            ProductCmd::Split { product, quantities } => Operation::Split { product, quantities },
            ProductCmd::Merge { products, quantities } => Operation::Merge { products, quantities },
            ProductCmd::Transform {
                inputs,
                event,
                outputs,
                params,
            } => Operation::Transform {
                inputs,
                event_kind_id: event,
                outputs,
                values: params.into_iter().collect(),
            },
        }),
        Command::Unlock(UnlockCmd::Request { event_kind, target }) => ctx.submit(Operation::RequestUnlock {
            event_kind_id: event_kind,
            target,
        }),
        Command::Unlock(UnlockCmd::Approve { id }) => ctx.submit(Operation::ApproveUnlock { request: id }),
        Command::Unlock(UnlockCmd::List) => {
            let chain = ctx.home.load_chain()?;
            let list: Vec<_> = chain.state().unlocks.values().cloned().collect();
            let text: String = list
                .iter()
                .map(|u| {
                    format!(
                        "{} {} on {} {:?} approvals {}/{}\n",
                        u.id,
                        u.event_kind_id,
                        u.target,
                        u.status,
                        u.approvals.len(),
                        u.required.len()
                    )
                })
                .collect();
            Ok(Report::new(json!(list), text))
        }
        Command::Token(TokenCmd::Pay { recipient, amount }) => ctx.submit(Operation::Pay { recipient, amount }),
        Command::Token(TokenCmd::Balances { holder }) => balances(&ctx, holder),
        Command::Doc(c) => doc(&ctx, c),
        Command::Trace(c) => trace(&ctx, c, cli.json),
        Command::Generate(c) => generate(c),
        Command::Serve(args) => serve(&ctx, args),
    }
}

fn config_validate(dir: &Path) -> anyhow::Result<Report> {
    let set = DescriptorSet::load_dir(dir)?;
    match validate_config(&set) {
        Ok(c) => {
            let counts = json!({
                "actors": c.actors.len(),
                "companies": c.companies.len(),
                "kinds": c.kinds.len(),
                "event_kinds": c.event_kinds.len(),
                "activities": c.activities.len(),
            });
            let text = format!(
                "valid: {} actors, {} companies, {} kinds, {} event kinds, {} activities",
                c.actors.len(),
                c.companies.len(),
                c.kinds.len(),
                c.event_kinds.len(),
                c.activities.len()
            );
            Ok(Report::new(json!({ "valid": true, "version": c.version, "counts": counts }), text))
        }
        Err(violations) => {
            let text: String = violations.iter().map(|v| format!("{v}\n")).collect();
            let json = json!({ "valid": false, "violations": violations });
            Ok(Report::new(json, text).failed())
        }
    }
}

fn load_config(dir: &Path) -> anyhow::Result<SupplyChainConfig> {
    SupplyChainConfig::load_dir(dir).with_context(|| format!("configuration in {}", dir.display()))
}

fn chain(ctx: &Ctx, cmd: ChainCmd) -> anyhow::Result<Report> {
    match cmd {
        ChainCmd::Init(a) => {
            let config = load_config(&a.config_dir)?;
            let gas_schedule = match &a.gas_schedule {
                Some(p) => GasSchedule::load(p)?,
                None => GasSchedule::default(),
            };
            let opts = InitOptions {
                chain_id: a.chain_id,
                admin: a.admin,
                fund: a.fund,
                seeded: a.seeded,
                register: !a.no_register,
                demo: a.demo,
                gas_schedule,
                passphrase: ctx.passphrase()?.to_string(),
                kdf_iterations: a.kdf_iterations,
            };
            let report = node::init(&ctx.home, config, &opts)?;
            let mut text = format!(
                "chain `{}` initialised at height {} (head {})\n",
                report.chain_id, report.height, report.head
            );
            text.push_str(&key_table(&report.keys));
            Ok(Report::new(json!(report), text))
        }
        ChainCmd::Verify => {
            let path = ctx.home.chain_path();
            let bytes = read_chain_file(&path).with_context(|| path.display().to_string())?;
            let report = verify_chain_bytes(&bytes);
            let json = json!({ "blocks_verified": report.blocks_verified, "failure": report.failure });
            match &report.failure {
                None => Ok(Report::new(json, format!("ok: {} blocks verified", report.blocks_verified))),
                Some(f) => Ok(Report::new(
                    json,
                    format!("invalid: {f} ({} blocks verified before it)", report.blocks_verified),
                )
                .failed()),
            }
        }
        ChainCmd::Gas {
            payload,
            mode,
            schedule,
        } => {
            let s = match schedule {
                Some(p) => GasSchedule::load(&p)?,
                None => GasSchedule::default(),
            };
            let gas = s.estimate(mode, payload);
            Ok(Report::new(
                json!({ "mode": mode.to_string(), "payload": payload, "gas": gas }),
                gas.to_string(),
            ))
        }
        ChainCmd::Info => {
            let chain = ctx.home.load_chain()?;
            let head = chain.head();
            let txs: usize = chain.blocks().iter().map(|b| b.transactions.len()).sum();
            let state = chain.state();
            let json = json!({
                "chain_id": chain.chain_id(),
                "height": head.height,
                "head": head.hash,
                "state_root": head.state_root,
                "transactions": txs,
                "entities": state.entities.len(),
                "actors": state.catalog.len(),
            });
            let text = format!(
                "chain {}\nheight {}\nhead {}\ntransactions {}\nentities {}\ncatalogued addresses {}\n",
                chain.chain_id(),
                head.height,
                head.hash,
                txs,
                state.entities.len(),
                state.catalog.len()
            );
            Ok(Report::new(json, text))
        }
    }
}

fn key_table(keys: &[KeyFile]) -> String {
    keys.iter().map(|k| format!("{:<16} {}\n", k.actor_id, k.address)).collect()
}

fn key(ctx: &Ctx, cmd: KeyCmd) -> anyhow::Result<Report> {
    let keys = ctx.home.keys()?;
    match cmd {
        KeyCmd::List => {
            let list = keys.list()?;
            let json: Vec<Value> = list
                .iter()
                .map(|k| json!({ "actor_id": k.actor_id, "address": k.address }))
                .collect();
            Ok(Report::new(json!(json), key_table(&list)))
        }
        KeyCmd::Generate {
            actor_id,
            kdf_iterations,
        } => {
            let mut secret = [0u8; 32];
            rand::RngCore::fill_bytes(&mut rand::thread_rng(), &mut secret);
            let key = KeyPair::from_secret_bytes(&secret)?;
            let file = keys.save_with(&actor_id, &key, ctx.passphrase()?, kdf_iterations)?;
            Ok(Report::new(
                json!({ "actor_id": file.actor_id, "address": file.address }),
                format!("{}\n", file.address),
            ))
        }
    }
}

fn actor(ctx: &Ctx, cmd: ActorCmd) -> anyhow::Result<Report> {
    match cmd {
        ActorCmd::Register {
            address,
            actor_id,
            roles,
            disabled,
        } => {
            let roles = roles
                .iter()
                .map(|r| serde_json::from_value::<Role>(json!(r)).map_err(|_| anyhow!("unknown role `{r}`")))
                .collect::<anyhow::Result<BTreeSet<Role>>>()?;
            ctx.submit(Operation::RegisterAddress {
                address,
                actor_id,
                roles,
                enabled: !disabled,
            })
        }
        ActorCmd::List => {
            let chain = ctx.home.load_chain()?;
            let catalog = &chain.state().catalog;
            let json: Vec<Value> = catalog
                .iter()
                .map(|(a, e)| json!({ "address": a, "actor_id": e.actor_id, "roles": e.roles, "enabled": e.enabled }))
                .collect();
            let text: String = catalog
                .iter()
                .map(|(a, e)| {
                    let flag = if e.enabled { "" } else { " (disabled)" };
                    format!("{:<16} {a}{flag}\n", e.actor_id)
                })
                .collect();
            Ok(Report::new(json!(json), text))
        }
    }
}

fn balances(ctx: &Ctx, holder: Option<Address>) -> anyhow::Result<Report> {
    let chain = ctx.home.load_chain()?;
    let state = chain.state();
    let wanted = |a: &Address| holder.is_none_or(|h| h == *a);
    let mut tokens: BTreeMap<Address, BTreeMap<&str, u64>> = BTreeMap::new();
    for (kind, h, amount) in state.tokens.iter() {
        if wanted(h) {
            tokens.entry(*h).or_default().insert(kind, amount);
        }
    }
    let currency: BTreeMap<&Address, u64> = state.balances.iter().filter(|(a, _)| wanted(a)).map(|(a, b)| (a, *b)).collect();
    let mut text = String::new();
    for (a, b) in &currency {
        let who = state.catalog_entry(a).map(|e| e.actor_id.as_str()).unwrap_or("-");
        text.push_str(&format!("{a} {who:<16} currency {b}\n"));
    }
    for (h, kinds) in &tokens {
        for (kind, amount) in kinds {
            text.push_str(&format!("{h} {kind:<16} {amount}\n"));
        }
    }
    Ok(Report::new(json!({ "currency": currency, "tokens": tokens }), text))
}

fn doc(ctx: &Ctx, cmd: DocCmd) -> anyhow::Result<Report> {
    let docs = ctx.home.docs()?;
    match cmd {
        DocCmd::Put { file, media_type } => {
            let bytes = std::fs::read(&file).with_context(|| file.display().to_string())?;
            let stored = docs.put_with(&bytes, media_type.as_deref())?;
            Ok(Report::new(json!(stored), format!("{}\n", stored.content_id)))
        }
        DocCmd::Get { id, output } => {
            let bytes = docs.get(&id)?;
            std::fs::write(&output, &bytes).with_context(|| output.display().to_string())?;
            Ok(Report::new(
                json!({ "content_id": id, "size": bytes.len(), "output": output }),
                format!("{} bytes written to {}\n", bytes.len(), output.display()),
            ))
        }
        DocCmd::Notarize {
            entity,
            file,
            locator,
            media_type,
        } => {
            let bytes = std::fs::read(&file).with_context(|| file.display().to_string())?;
            let stored = docs.put_with(&bytes, media_type.as_deref())?;
            let mut r = ctx.submit(Operation::Notarize {
                entity,
                digest: stored.content_id,
                locator: locator.unwrap_or_else(|| stored.content_id.to_hex()),
                metadata: Vec::new(),
            })?;
            r.json["document"] = json!(stored);
            r.text = format!("document {}\n{}", stored.content_id, r.text);
            Ok(r)
        }
    }
}

fn trace(ctx: &Ctx, cmd: TraceCmd, json_out: bool) -> anyhow::Result<Report> {
    let chain = ctx.home.load_chain()?;
    match cmd {
        TraceCmd::Back { address, depth } => {
            let tree = trace_back(&chain, address, depth)?;
            let text = render_trace(&tree, if json_out { "json" } else { "text" })?;
            Ok(Report::new(json!(tree), text))
        }
        TraceCmd::Forward { address } => {
            let list = trace_forward(&chain, address)?;
            let text: String = list
                .iter()
                .map(|d| format!("{}{} {}\n", "  ".repeat(d.depth - 1), d.kind_id, d.address))
                .collect();
            Ok(Report::new(json!(list), text))
        }
        TraceCmd::Qr { address } => {
            if chain.state().entity(&address).is_none() {
                bail!("unknown entity {address}");
            }
            let payload = QrPayload {
                chain_id: chain.chain_id().to_string(),
                address,
            }
            .to_string();
            Ok(Report::new(json!({ "payload": payload }), format!("{payload}\n")))
        }
        TraceCmd::List { kind } => {
            let list: Vec<_> = chain
                .state()
                .entities
                .values()
                .filter(|e| kind.as_deref().is_none_or(|k| k == e.kind_id))
                .collect();
            let json: Vec<Value> = list
                .iter()
                .map(|e| json!({ "address": e.address, "kind_id": e.kind_id, "quantity": e.quantity, "active": e.is_active() }))
                .collect();
            let text: String = list
                .iter()
                .map(|e| {
                    let flag = if e.is_active() { "" } else { " (invalidated)" };
                    format!("{} {:<14} {} {}{flag}\n", e.address, e.kind_id, e.quantity, e.unit)
                })
                .collect();
            Ok(Report::new(json!(json), text))
        }
    }
}

fn write_files(out: &Path, files: &[(String, String)]) -> anyhow::Result<Vec<String>> {
    for (name, contents) in files {
        let path = out.join(name);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)?;
        }
        std::fs::write(&path, contents).with_context(|| path.display().to_string())?;
    }
    Ok(files.iter().map(|(n, _)| n.clone()).collect())
}

fn generate(cmd: GenerateCmd) -> anyhow::Result<Report> {
    let (out, files) = match cmd {
        GenerateCmd::Contracts {
            config_dir,
            output,
            target,
        } => {
            let config = load_config(&config_dir)?;
            let targets = match target.as_str() {
                "all" => vec![RenderTarget::Solidity, RenderTarget::Markdown],
                t => vec![t.parse::<RenderTarget>()?],
            };
            let ir = generate_contract_ir(&config);
            let mut files = vec![("ir.json".to_string(), ir.to_json())];
            for t in targets {
                files.extend(render_contracts(&ir, t).into_iter().map(|f| (f.path, f.contents)));
            }
            (output, files)
        }
        GenerateCmd::Forms { config_dir, output } => {
            let config = load_config(&config_dir)?;
            let files = generate_form_schemas(&config)
                .into_iter()
                .map(|s| (format!("{}.json", s.event_kind_id), s.to_json()))
                .collect();
            (output, files)
        }
    };
    let written = write_files(&out, &files)?;
    let text: String = written.iter().map(|n| format!("{}\n", out.join(n).display())).collect();
    Ok(Report::new(json!({ "output": out, "files": written }), text))
}

fn serve(ctx: &Ctx, args: ServeArgs) -> anyhow::Result<Report> {
    if !ctx.home.chain_path().exists() {
        let Some(dir) = &args.config else {
            bail!(
                "no chain at {}; run `trace chain init` or pass --config",
                ctx.home.chain_path().display()
            );
        };
        let opts = InitOptions {
            chain_id: "agritrace".into(),
            admin: "admin".into(),
            fund: 1000,
            seeded: false,
            register: true,
            demo: false,
            gas_schedule: GasSchedule::default(),
            passphrase: ctx.passphrase()?.to_string(),
            kdf_iterations: KDF_ITERATIONS,
        };
        let report = node::init(&ctx.home, load_config(dir)?, &opts)?;
        tracing::info!(chain_id = %report.chain_id, keys = report.keys.len(), "initialised a fresh chain");
    }
    let state = Arc::new(AppState::open(ctx.home.clone())?);
    let runtime = tokio::runtime::Builder::new_multi_thread().enable_all().build()?;
    runtime.block_on(api::serve(state.clone(), &args.listen, args.static_dir))?;
    Ok(Report::new(json!({ "height": state.height() }), format!("stopped at height {}\n", state.height())))
}
