use std::collections::{BTreeMap, BTreeSet};

use crate::config::{EventKindDef, KindClass, KindDef, Role};
use crate::crypto::{hash, Address};
use crate::ledger::{GasMeter, LogEntry};
use crate::params::{canonical_value, encode_parameters, ParamError, ParamTriple};

use super::*;

/// Per-transaction execution environment handed to the contracts.
#[derive(Debug)]
pub struct ExecContext {
    pub sender: Address,
    pub tx: TxRef,
    /// Log entries already in the block being built.
    pub log_offset: u32,
    pub meter: GasMeter,
    pub logs: Vec<LogEntry>,
}

impl ExecContext {
    fn emit(&mut self, contract: Address, topic: &str, payload: Vec<u8>) -> LogRef {
        self.meter.log(1, payload.len());
        let index = self.log_offset + self.logs.len() as u32;
        self.logs.push(LogEntry {
            contract,
            topic: topic.to_string(),
            payload,
        });
        LogRef {
            height: self.tx.height,
            index,
        }
    }

    fn record(&self, body: RecordBody, log: LogRef) -> EventRecord {
        EventRecord {
            body,
            registrant: self.sender,
            tx: self.tx,
            log,
            asseverations: Vec::new(),
        }
    }
}

fn stored_len<T: serde::Serialize>(v: &T) -> usize {
    serde_json::to_vec(v).map(|b| b.len()).unwrap_or(0)
}

fn listed(list: &[String], id: &str) -> bool {
    list.iter().any(|x| x == id)
}

/// Checks submitted values against the event kind's parameter specs and
/// returns canonical triples in declaration order.
pub fn bind_values(
    event: &EventKindDef,
    values: &BTreeMap<String, String>,
) -> Result<Vec<ParamTriple>, ParamError> {
    if let Some(extra) = values.keys().find(|k| event.param(k).is_none()) {
        return Err(ParamError::UnknownName(extra.clone()));
    }
    event
        .param_specs
        .iter()
        .map(|spec| {
            let raw = values
                .get(&spec.name)
                .ok_or_else(|| ParamError::Missing(spec.name.clone()))?;
            let value = canonical_value(spec.param_type, &spec.enum_options, raw).ok_or_else(
                || ParamError::InvalidValue {
                    name: spec.name.clone(),
                    param_type: spec.param_type,
                    value: raw.clone(),
                },
            )?;
            Ok(ParamTriple::new(spec.name.clone(), spec.param_type, value))
        })
        .collect()
}

fn sum(quantities: impl IntoIterator<Item = u64>) -> Result<u64, ContractError> {
    quantities
        .into_iter()
        .try_fold(0u64, |acc, q| acc.checked_add(q))
        .ok_or(ContractError::Overflow)
}

fn resolve_unit(kind: &KindDef, unit: &str) -> Result<String, ContractError> {
    match (&kind.default_unit, unit) {
        (Some(d), "") => Ok(d.clone()),
        (Some(d), u) if d != u => Err(ContractError::UnitMismatch(u.to_string(), d.clone())),
        (None, "") => Err(ContractError::Malformed(format!(
            "kind `{}` has no default unit; one must be given",
            kind.id
        ))),
        (_, u) => Ok(u.to_string()),
    }
}

impl ContractState {
    /// Executes one operation. On error the caller discards this state, so
    /// partial mutation is never observable.
    pub fn apply(&mut self, ctx: &mut ExecContext, op: &Operation) -> Result<Outcome, ContractError> {
        let created = |v: Vec<Address>| Outcome {
            created: v,
            unlock_request: None,
        };
        Ok(match op {
            Operation::RegisterAddress {
                address,
                actor_id,
                roles,
                enabled,
            } => {
                self.register_address(ctx, *address, actor_id, roles, *enabled)?;
                Outcome::default()
            }
            Operation::CreateResource {
                producer,
                kind_id,
                description,
                size,
                unit,
            } => created(vec![self.create_resource(ctx, *producer, kind_id, description, *size, unit)?]),
            Operation::RecordEvent {
                entity,
                event_kind_id,
                values,
            } => {
                self.record_event(ctx, *entity, event_kind_id, values)?;
                Outcome::default()
            }
            Operation::Transform {
                inputs,
                event_kind_id,
                outputs,
                values,
            } => created(self.transform(ctx, inputs, event_kind_id, outputs, values)?),
            Operation::Split {
                product,
                quantities,
            } => created(self.split(ctx, *product, quantities)?),
            Operation::Merge {
                products,
                quantities,
            } => created(self.merge(ctx, products, quantities)?),
            Operation::Notarize {
                entity,
                digest,
                locator,
                metadata,
            } => {
                self.notarize(ctx, *entity, *digest, locator, metadata)?;
                Outcome::default()
            }
            Operation::Asseverate { entity, record } => {
                self.asseverate(ctx, *entity, *record)?;
                Outcome::default()
            }
            Operation::RequestUnlock {
                event_kind_id,
                target,
            } => Outcome {
                created: Vec::new(),
                unlock_request: Some(self.request_unlock(ctx, event_kind_id, *target)?),
            },
            Operation::ApproveUnlock { request } => {
                self.approve_unlock(ctx, *request)?;
                Outcome::default()
            }
            Operation::Pay { recipient, amount } => {
                self.pay(ctx, *recipient, *amount)?;
                Outcome::default()
            }
        })
    }

    /// The sender's enabled catalog entry.
    fn caller(&self, sender: &Address) -> Result<CatalogEntry, ContractError> {
        match self.catalog.get(sender) {
            Some(e) if e.enabled => Ok(e.clone()),
            Some(_) => Err(ContractError::Unauthorized(format!("{sender} is disabled"))),
            None => Err(ContractError::Unauthorized(format!("{sender} is not registered"))),
        }
    }

    fn kind_def(&self, id: &str) -> Result<KindDef, ContractError> {
        self.config
            .kind(id)
            .cloned()
            .ok_or_else(|| ContractError::UnknownKind(id.to_string()))
    }

    fn event_def(&self, id: &str) -> Result<EventKindDef, ContractError> {
        self.config
            .event_kind(id)
            .cloned()
            .ok_or_else(|| ContractError::UnknownEventKind(id.to_string()))
    }

    fn active_entity(&self, address: &Address) -> Result<&Entity, ContractError> {
        let e = self
            .entities
            .get(address)
            .ok_or(ContractError::UnknownEntity(*address))?;
        if !e.is_active() {
            return Err(ContractError::Invalidated(*address));
        }
        Ok(e)
    }

    fn require_kind_actor(&self, kind_id: &str, actor: &str) -> Result<(), ContractError> {
        let kind = self.kind_def(kind_id)?;
        if !listed(&kind.authorized_actor_ids, actor) {
            return Err(ContractError::Unauthorized(format!(
                "actor `{actor}` is not authorized for kind `{kind_id}`"
            )));
        }
        Ok(())
    }

    fn require_event_actor(&self, event: &EventKindDef, actor: &str) -> Result<(), ContractError> {
        if !listed(&event.authorized_actor_ids, actor) {
            return Err(ContractError::Unauthorized(format!(
                "actor `{actor}` is not authorized for event kind `{}`",
                event.id
            )));
        }
        Ok(())
    }

    fn insert_entity(&mut self, ctx: &mut ExecContext, entity: Entity) {
        ctx.meter.store_new(stored_len(&entity));
        ctx.meter.store_update(1);
        if let Some(p) = self.producers.get_mut(&entity.producer) {
            p.owned.insert(entity.address);
        }
        self.entities.insert(entity.address, entity);
    }

    fn attach(&mut self, ctx: &mut ExecContext, entity: Address, record: EventRecord) {
        ctx.meter.store_new(stored_len(&record));
        self.entities
            .get_mut(&entity)
            .expect("attach to existing entity")
            .events
            .push(record);
    }

    /// Producer contract for new outputs of `kind_id`: the first company that
    /// manages the kind and authorizes the actor, else `fallback`.
    fn output_producer(&self, kind_id: &str, actor: &str, fallback: Address) -> Address {
        self.config
            .companies
            .values()
            .find(|c| listed(&c.resource_ids, kind_id) && listed(&c.authorized_actor_ids, actor))
            .and_then(|c| self.producer_by_company(&c.name))
            .map_or(fallback, |p| p.address)
    }

    fn register_address(
        &mut self,
        ctx: &mut ExecContext,
        address: Address,
        actor_id: &str,
        roles: &BTreeSet<Role>,
        enabled: bool,
    ) -> Result<(), ContractError> {
        if ctx.sender != self.owner {
            return Err(ContractError::Unauthorized(
                "only the catalog owner registers addresses".into(),
            ));
        }
        let actor = self
            .config
            .actor(actor_id)
            .ok_or_else(|| ContractError::UnknownActor(actor_id.to_string()))?;
        if address == self.owner {
            return Err(ContractError::Malformed("the owner entry is fixed".into()));
        }
        let roles = if roles.is_empty() {
            BTreeSet::from([actor.role])
        } else {
            roles.clone()
        };
        let entry = CatalogEntry {
            actor_id: actor_id.to_string(),
            roles,
            enabled,
        };
        if self.catalog.contains_key(&address) {
            ctx.meter.store_update(1);
        } else {
            ctx.meter.store_new(stored_len(&entry));
        }
        self.catalog.insert(address, entry);
        Ok(())
    }

    pub(crate) fn create_resource(
        &mut self,
        ctx: &mut ExecContext,
        producer: Address,
        kind_id: &str,
        description: &str,
        size: u64,
        unit: &str,
    ) -> Result<Address, ContractError> {
        let caller = self.caller(&ctx.sender)?;
        let kind = self.kind_def(kind_id)?;
        if kind.kind_class != KindClass::R {
            return Err(ContractError::ClassMismatch(format!(
                "`{kind_id}` is a product kind, not a resource kind"
            )));
        }
        let company_name = self
            .producers
            .get(&producer)
            .ok_or(ContractError::UnknownProducer(producer))?
            .company_name
            .clone();
        let company = self.config.company(&company_name).expect("producer per company");
        if !listed(&company.resource_ids, kind_id) {
            return Err(ContractError::NotManaged {
                company: company_name,
                kind: kind_id.to_string(),
            });
        }
        self.require_kind_actor(kind_id, &caller.actor_id)?;
        if !listed(&company.authorized_actor_ids, &caller.actor_id) {
            return Err(ContractError::Unauthorized(format!(
                "actor `{}` is not authorized for company `{company_name}`",
                caller.actor_id
            )));
        }
        let unit = resolve_unit(&kind, unit)?;
        let address = entity_address(&ctx.tx.tx, 0);
        self.insert_entity(
            ctx,
            Entity {
                address,
                kind_id: kind_id.to_string(),
                class: KindClass::R,
                producer,
                holder: ctx.sender,
                origins: Vec::new(),
                produced: Vec::new(),
                quantity: size,
                unit,
                description: (!description.is_empty()).then(|| description.to_string()),
                status: EntityStatus::Active,
                created: ctx.tx,
                events: Vec::new(),
            },
        );
        Ok(address)
    }

    fn record_event(
        &mut self,
        ctx: &mut ExecContext,
        entity: Address,
        event_kind_id: &str,
        values: &BTreeMap<String, String>,
    ) -> Result<(), ContractError> {
        let caller = self.caller(&ctx.sender)?;
        let event = self.event_def(event_kind_id)?;
        if event.event_class != crate::config::EventClass::D {
            return Err(ContractError::ClassMismatch(format!(
                "`{event_kind_id}` is a transformation event"
            )));
        }
        let kind_id = self.active_entity(&entity)?.kind_id.clone();
        if !listed(&event.applicable_kind_ids, &kind_id) {
            return Err(ContractError::NotApplicable {
                event_kind: event_kind_id.to_string(),
                kind: kind_id,
            });
        }
        self.require_event_actor(&event, &caller.actor_id)?;
        self.require_kind_actor(&kind_id, &caller.actor_id)?;
        let payload = encode_parameters(&bind_values(&event, values)?)?;
        let log = ctx.emit(entity, event_kind_id, payload);
        let record = ctx.record(
            RecordBody::Documentation {
                event_kind_id: event_kind_id.to_string(),
            },
            log,
        );
        self.attach(ctx, entity, record);
        Ok(())
    }

    #[allow(clippy::too_many_arguments)]
    fn new_product(
        &self,
        ctx: &ExecContext,
        index: u32,
        kind_id: &str,
        producer: Address,
        origins: Vec<Address>,
        quantity: u64,
        unit: String,
    ) -> Entity {
        Entity {
            address: entity_address(&ctx.tx.tx, index),
            kind_id: kind_id.to_string(),
            class: KindClass::P,
            producer,
            holder: ctx.sender,
            origins,
            produced: Vec::new(),
            quantity,
            unit,
            description: None,
            status: EntityStatus::Active,
            created: ctx.tx,
            events: Vec::new(),
        }
    }

    /// Invalidates products (resources stay active), links outputs into
    /// `produced`, burns input tokens and mints output tokens to the caller.
    fn consume_and_create(
        &mut self,
        ctx: &mut ExecContext,
        inputs: &[Address],
        outputs: Vec<Entity>,
        body: RecordBody,
        topic: &str,
        payload: Vec<u8>,
    ) -> Vec<Address> {
        let out_addrs: Vec<Address> = outputs.iter().map(|e| e.address).collect();
        for a in inputs {
            let e = self.entities.get_mut(a).expect("validated input");
            e.produced.extend(out_addrs.iter().copied());
            ctx.meter.store_update(out_addrs.len() as u64);
            if e.class == KindClass::P {
                e.status = EntityStatus::Invalidated;
                ctx.meter.store_update(1);
                let (kind, holder, q) = (e.kind_id.clone(), e.holder, e.quantity);
                self.tokens.burn(&kind, holder, q);
            }
        }
        for o in outputs {
            self.tokens.mint(&o.kind_id, o.holder, o.quantity);
            self.insert_entity(ctx, o);
        }
        let log = ctx.emit(out_addrs[0], topic, payload);
        for a in &out_addrs {
            let record = ctx.record(body.clone(), log);
            self.attach(ctx, *a, record);
        }
        out_addrs
    }

    fn distinct_inputs(inputs: &[Address]) -> Result<(), ContractError> {
        if inputs.is_empty() {
            return Err(ContractError::Malformed("no inputs".into()));
        }
        if inputs.iter().collect::<BTreeSet<_>>().len() != inputs.len() {
            return Err(ContractError::Malformed("duplicate input".into()));
        }
        Ok(())
    }

    pub(crate) fn transform(
        &mut self,
        ctx: &mut ExecContext,
        inputs: &[Address],
        event_kind_id: &str,
        outputs: &[OutputSpec],
        values: &BTreeMap<String, String>,
    ) -> Result<Vec<Address>, ContractError> {
        let caller = self.caller(&ctx.sender)?;
        let event = self.event_def(event_kind_id)?;
        if event.event_class != crate::config::EventClass::T {
            return Err(ContractError::ClassMismatch(format!(
                "`{event_kind_id}` is a documentation event"
            )));
        }
        Self::distinct_inputs(inputs)?;
        if outputs.is_empty() {
            return Err(ContractError::Malformed("no outputs".into()));
        }
        let mut in_kinds = Vec::new();
        let mut in_total = Vec::new();
        for a in inputs {
            let e = self.active_entity(a)?;
            if !listed(&event.applicable_kind_ids, &e.kind_id) {
                return Err(ContractError::NotApplicable {
                    event_kind: event_kind_id.to_string(),
                    kind: e.kind_id.clone(),
                });
            }
            in_kinds.push(e.kind_id.clone());
            in_total.push(e.quantity);
        }
        let mut units = Vec::new();
        for o in outputs {
            if !listed(&event.generated_kind_ids, &o.kind_id) {
                return Err(ContractError::NotGenerated {
                    event_kind: event_kind_id.to_string(),
                    kind: o.kind_id.clone(),
                });
            }
            units.push(resolve_unit(&self.kind_def(&o.kind_id)?, &o.unit)?);
        }
        self.require_event_actor(&event, &caller.actor_id)?;
        for k in &in_kinds {
            self.require_kind_actor(k, &caller.actor_id)?;
        }
        let input = sum(in_total)?;
        let output = sum(outputs.iter().map(|o| o.quantity))?;
        let ratio = event.effective_max_yield();
        if !ratio.allows(output, input) {
            return Err(ContractError::YieldExceeded {
                output,
                input,
                ratio: ratio.to_string(),
            });
        }
        let unlock = if event.requires_unlock() {
            let found = self.unlocks.values().find(|u| {
                u.event_kind_id == event.id
                    && u.status == UnlockStatus::Unlocked
                    && inputs.contains(&u.target)
            });
            Some(found.map(|u| u.id).ok_or_else(|| ContractError::Locked {
                event_kind: event.id.clone(),
                target: inputs[0],
            })?)
        } else {
            None
        };
        let payload = encode_parameters(&bind_values(&event, values)?)?;

        let fallback = self.entities[&inputs[0]].producer;
        let products: Vec<Entity> = outputs
            .iter()
            .zip(units)
            .enumerate()
            .map(|(i, (o, unit))| {
                let producer = self.output_producer(&o.kind_id, &caller.actor_id, fallback);
                self.new_product(ctx, i as u32, &o.kind_id, producer, inputs.to_vec(), o.quantity, unit)
            })
            .collect();
        if let Some(id) = unlock {
            self.unlocks.get_mut(&id).expect("found above").status = UnlockStatus::Consumed;
            ctx.meter.store_update(1);
        }
        let body = RecordBody::Transformation {
            event_kind_id: event.id.clone(),
            inputs: inputs.to_vec(),
            outputs: products.iter().map(|p| p.address).collect(),
        };
        Ok(self.consume_and_create(ctx, inputs, products, body, event_kind_id, payload))
    }

    fn check_parts(quantities: &[u64], expected: u64) -> Result<(), ContractError> {
        if quantities.is_empty() {
            return Err(ContractError::Malformed("no output quantities".into()));
        }
        if quantities.contains(&0) {
            return Err(ContractError::ZeroPart);
        }
        let actual = sum(quantities.iter().copied())?;
        if actual != expected {
            return Err(ContractError::SumMismatch { expected, actual });
        }
        Ok(())
    }

    fn product_for_lot_change(&self, address: &Address, actor: &str) -> Result<Entity, ContractError> {
        let e = self.active_entity(address)?.clone();
        if e.class != KindClass::P {
            return Err(ContractError::ClassMismatch(format!(
                "{address} is a productive resource"
            )));
        }
        self.require_kind_actor(&e.kind_id, actor)?;
        Ok(e)
    }

    pub(crate) fn split(
        &mut self,
        ctx: &mut ExecContext,
        product: Address,
        quantities: &[u64],
    ) -> Result<Vec<Address>, ContractError> {
        let caller = self.caller(&ctx.sender)?;
        let parent = self.product_for_lot_change(&product, &caller.actor_id)?;
        Self::check_parts(quantities, parent.quantity)?;
        let children: Vec<Entity> = quantities
            .iter()
            .enumerate()
            .map(|(i, q)| {
                self.new_product(
                    ctx,
                    i as u32,
                    &parent.kind_id,
                    parent.producer,
                    vec![product],
                    *q,
                    parent.unit.clone(),
                )
            })
            .collect();
        let body = RecordBody::Split {
            parent: product,
            children: children.iter().map(|c| c.address).collect(),
        };
        Ok(self.consume_and_create(ctx, &[product], children, body, "split", Vec::new()))
    }

    pub(crate) fn merge(
        &mut self,
        ctx: &mut ExecContext,
        products: &[Address],
        quantities: &[u64],
    ) -> Result<Vec<Address>, ContractError> {
        let caller = self.caller(&ctx.sender)?;
        Self::distinct_inputs(products)?;
        let mut lots = Vec::new();
        for p in products {
            lots.push(self.product_for_lot_change(p, &caller.actor_id)?);
        }
        let first = lots[0].clone();
        for l in &lots[1..] {
            if l.kind_id != first.kind_id {
                return Err(ContractError::KindMismatch(first.kind_id, l.kind_id.clone()));
            }
            if l.unit != first.unit {
                return Err(ContractError::UnitMismatch(first.unit, l.unit.clone()));
            }
        }
        Self::check_parts(quantities, sum(lots.iter().map(|l| l.quantity))?)?;
        let outputs: Vec<Entity> = quantities
            .iter()
            .enumerate()
            .map(|(i, q)| {
                self.new_product(
                    ctx,
                    i as u32,
                    &first.kind_id,
                    first.producer,
                    products.to_vec(),
                    *q,
                    first.unit.clone(),
                )
            })
            .collect();
        let body = RecordBody::Merge {
            inputs: products.to_vec(),
            outputs: outputs.iter().map(|c| c.address).collect(),
        };
        Ok(self.consume_and_create(ctx, products, outputs, body, "merge", Vec::new()))
    }

    fn notarize(
        &mut self,
        ctx: &mut ExecContext,
        entity: Address,
        digest: crate::crypto::Hash,
        locator: &str,
        metadata: &[ParamTriple],
    ) -> Result<(), ContractError> {
        let caller = self.caller(&ctx.sender)?;
        let kind_id = self.active_entity(&entity)?.kind_id.clone();
        self.require_kind_actor(&kind_id, &caller.actor_id)?;
        if digest == hash(b"") {
            return Err(ContractError::EmptyDocument);
        }
        if locator.is_empty() {
            return Err(ContractError::Malformed("empty locator".into()));
        }
        let payload = encode_parameters(metadata)?;
        let log = ctx.emit(entity, "notarization", payload);
        let record = ctx.record(
            RecordBody::Notarization(NotarizationRecord {
                digest,
                locator: locator.to_string(),
            }),
            log,
        );
        self.attach(ctx, entity, record);
        Ok(())
    }

    fn asseverate(
        &mut self,
        ctx: &mut ExecContext,
        entity: Address,
        record: u32,
    ) -> Result<(), ContractError> {
        let caller = self.caller(&ctx.sender)?;
        if !caller.roles.iter().any(|r| r.can_certify()) {
            return Err(ContractError::RoleMissing(format!(
                "actor `{}` holds no certifying role",
                caller.actor_id
            )));
        }
        self.active_entity(&entity)?;
        let tx = ctx.tx;
        let target = self
            .entities
            .get_mut(&entity)
            .and_then(|e| e.events.get_mut(record as usize))
            .ok_or(ContractError::UnknownRecord {
                entity,
                index: record,
            })?;
        let a = Asseveration {
            certifier: ctx.sender,
            tx,
        };
        ctx.meter.store_new(stored_len(&a));
        target.asseverations.push(a);
        Ok(())
    }

    pub(crate) fn request_unlock(
        &mut self,
        ctx: &mut ExecContext,
        event_kind_id: &str,
        target: Address,
    ) -> Result<u64, ContractError> {
        let caller = self.caller(&ctx.sender)?;
        let event = self.event_def(event_kind_id)?;
        if !event.requires_unlock() {
            return Err(ContractError::Malformed(format!(
                "event kind `{event_kind_id}` needs no unlocking"
            )));
        }
        let kind_id = self.active_entity(&target)?.kind_id.clone();
        if !listed(&event.applicable_kind_ids, &kind_id) {
            return Err(ContractError::NotApplicable {
                event_kind: event_kind_id.to_string(),
                kind: kind_id,
            });
        }
        self.require_event_actor(&event, &caller.actor_id)?;
        let id = self.unlocks.keys().next_back().map_or(1, |k| k + 1);
        let request = UnlockRequest {
            id,
            event_kind_id: event_kind_id.to_string(),
            target,
            requested_by: ctx.sender,
            required: event.required_unlock_actor_ids.iter().cloned().collect(),
            approvals: BTreeMap::new(),
            status: UnlockStatus::Pending,
        };
        ctx.meter.store_new(stored_len(&request));
        self.unlocks.insert(id, request);
        Ok(id)
    }

    fn approve_unlock(&mut self, ctx: &mut ExecContext, id: u64) -> Result<(), ContractError> {
        let caller = self.caller(&ctx.sender)?;
        let request = self
            .unlocks
            .get_mut(&id)
            .ok_or(ContractError::UnknownUnlock(id))?;
        if request.status != UnlockStatus::Pending {
            return Err(ContractError::UnlockNotPending(id));
        }
        if !request.required.contains(&caller.actor_id) {
            return Err(ContractError::NotRequiredApprover(id));
        }
        request.approvals.insert(caller.actor_id, ctx.sender);
        if request.required.iter().all(|r| request.approvals.contains_key(r)) {
            request.status = UnlockStatus::Unlocked;
        }
        ctx.meter.store_update(1);
        Ok(())
    }

    fn pay(&mut self, ctx: &mut ExecContext, recipient: Address, amount: u64) -> Result<(), ContractError> {
        self.caller(&ctx.sender)?;
        if amount == 0 {
            return Err(ContractError::ZeroAmount);
        }
        let balance = self.balance(&ctx.sender);
        if balance < amount {
            return Err(ContractError::InsufficientFunds { balance, amount });
        }
        self.balances.insert(ctx.sender, balance - amount);
        let credited = self
            .balance(&recipient)
            .checked_add(amount)
            .ok_or(ContractError::Overflow)?;
        self.balances.insert(recipient, credited);
        ctx.meter.store_update(2);
        Ok(())
    }
}
