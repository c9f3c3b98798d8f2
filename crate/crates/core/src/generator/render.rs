use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RenderTarget {
    /// Ethereum-style contract source, one `.sol` file per contract.
    Solidity,
    /// A single markdown data dictionary.
    Markdown,
}

impl FromStr for RenderTarget {
    type Err = GeneratorError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "solidity" | "sol" => Ok(RenderTarget::Solidity),
            "markdown" | "md" => Ok(RenderTarget::Markdown),
            other => Err(GeneratorError::UnknownTarget(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceFile {
    pub path: String,
    pub contents: String,
}

pub fn render_contracts(ir: &ContractIR, target: RenderTarget) -> Vec<SourceFile> {
    match target {
        RenderTarget::Solidity => ir
            .contracts
            .iter()
            .map(|c| SourceFile {
                path: format!("{}.sol", c.name),
                contents: solidity_contract(ir, c),
            })
            .collect(),
        RenderTarget::Markdown => vec![SourceFile {
            path: "contracts.md".into(),
            contents: markdown(ir),
        }],
    }
}

fn sol_type(t: SemType) -> &'static str {
    match t {
        SemType::Address => "address",
        SemType::AddressList => "address[]",
        SemType::AddressSet => "mapping(address => bool)",
        SemType::Uint => "uint256",
        SemType::UintList => "uint256[]",
        SemType::Text => "string",
        SemType::Bytes => "bytes",
        SemType::Digest => "bytes32",
        SemType::Bool => "bool",
        SemType::Status => "Status",
        SemType::EventClass => "EventClass",
        SemType::EventRecords => "AgriEvent[]",
        SemType::Asseverations => "Asseveration[]",
    }
}

fn arg_type(t: SemType) -> String {
    let base = sol_type(t);
    match t {
        SemType::AddressList | SemType::UintList | SemType::Text | SemType::Bytes => {
            format!("{base} calldata")
        }
        _ => base.to_string(),
    }
}

fn ret_type(t: SemType) -> String {
    let base = sol_type(t);
    match t {
        SemType::AddressList | SemType::UintList | SemType::Text | SemType::Bytes => {
            format!("{base} memory")
        }
        _ => base.to_string(),
    }
}

fn solidity_contract(ir: &ContractIR, c: &ContractDef) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "// SPDX-License-Identifier: UNLICENSED");
    let _ = writeln!(s, "// Generated from config version {}. Do not edit.", ir.config_version);
    let _ = writeln!(s, "pragma solidity ^0.8.20;\n");
    if let Some(base) = &c.base {
        let _ = writeln!(s, "import \"./{base}.sol\";\n");
    }
    let header = match (&c.base, c.is_abstract) {
        (Some(b), _) => format!("contract {} is {b}", c.name),
        (None, true) => format!("abstract contract {}", c.name),
        (None, false) => format!("contract {}", c.name),
    };
    let _ = writeln!(s, "{header} {{");

    if c.name == ABSTRACT_RESOURCE {
        abstract_resource_preamble(&mut s, ir);
    }
    for k in &c.kinds {
        let unit = k.default_unit.as_deref().unwrap_or("-");
        let _ = writeln!(
            s,
            "    // kind {} ({}), unit {unit}, actors: {}",
            k.kind_id,
            k.name,
            k.authorized_actor_ids.join(", ")
        );
    }
    for co in &c.companies {
        let _ = writeln!(
            s,
            "    // company {}: kinds {}; actors {}",
            co.name,
            co.resource_ids.join(", "),
            co.authorized_actor_ids.join(", ")
        );
    }
    if !c.kinds.is_empty() || !c.companies.is_empty() {
        s.push('\n');
    }
    for f in &c.fields {
        let vis = if f.ty == SemType::AddressSet { "internal" } else { "public" };
        let im = if f.immutable { " immutable" } else { "" };
        // only value types can be immutable in Solidity
        let im = if matches!(f.ty, SemType::Address | SemType::Uint | SemType::Digest) { im } else { "" };
        let _ = writeln!(s, "    {} {vis}{im} {};", sol_type(f.ty), f.name);
    }
    if !c.fields.is_empty() {
        s.push('\n');
    }
    for m in &c.methods {
        method_sig(&mut s, m);
    }
    s.push_str("}\n");
    s
}

fn abstract_resource_preamble(s: &mut String, ir: &ContractIR) {
    let _ = writeln!(s, "    enum Status {{ Active, Invalidated }}");
    let _ = writeln!(s, "    enum EventClass {{ D, T }}\n");
    let _ = writeln!(s, "    struct Asseveration {{ address certifier; bytes32 txHash; }}\n");
    for r in &ir.records {
        let _ = writeln!(s, "    struct {} {{", r.name);
        for f in &r.fields {
            let _ = writeln!(s, "        {} {};", sol_type(f.ty), f.name);
        }
        let _ = writeln!(s, "    }}\n");
    }
    let _ = writeln!(s, "    // Event payloads are emitted to the log; storage keeps only the AgriEvent reference.");
    for e in &ir.log_events {
        let params: Vec<String> = e
            .params
            .iter()
            .map(|p| format!("{}:{}", p.name, p.param_type.tag()))
            .collect();
        let _ = writeln!(
            s,
            "    /// {} [{:?}] on {}; actors {}; parameters ({})",
            e.event_kind_id,
            e.event_class,
            e.applicable_kind_ids.join(", "),
            e.authorized_actor_ids.join(", "),
            params.join(", ")
        );
        if let Some(y) = &e.max_yield {
            let _ = writeln!(s, "    /// generates {}, max yield {y}", e.generated_kind_ids.join(", "));
        }
        if !e.required_unlock_actor_ids.is_empty() {
            let _ = writeln!(s, "    /// unlocked by {}", e.required_unlock_actor_ids.join(", "));
        }
        let _ = writeln!(s, "    event {}(address indexed entity, address indexed registrant, bytes parameters);", e.name);
    }
    for name in [SPLIT_EVENT, MERGE_EVENT] {
        let _ = writeln!(s, "    event {name}(address[] inputs, address[] outputs);");
    }
    let _ = writeln!(s, "    event {NOTARIZATION_EVENT}(address indexed entity, bytes32 digest, string locator, bytes metadata);");
    let _ = writeln!(s, "    event {ASSEVERATION_EVENT}(address indexed entity, uint256 record, address certifier);\n");

    let _ = writeln!(s, "    function _emitEvent(bytes32 kind, bytes calldata parameters) internal {{");
    for (i, e) in ir.log_events.iter().enumerate() {
        let kw = if i == 0 { "if" } else { "} else if" };
        let _ = writeln!(s, "        {kw} (kind == keccak256(\"{}\")) {{", e.event_kind_id);
        let _ = writeln!(s, "            emit {}(address(this), msg.sender, parameters);", e.name);
    }
    if ir.log_events.is_empty() {
        let _ = writeln!(s, "        revert(\"unknown event kind\");");
    } else {
        let _ = writeln!(s, "        }} else {{\n            revert(\"unknown event kind\");\n        }}");
    }
    let _ = writeln!(s, "    }}\n");
}

fn method_sig(s: &mut String, m: &Method) {
    let _ = writeln!(
        s,
        "    /// @custom:auth {} [{}]",
        serde_json::to_value(m.auth.rule).expect("rule serializes").as_str().unwrap_or(""),
        m.auth.actor_ids.join(", ")
    );
    if m.factory {
        let _ = writeln!(s, "    /// @custom:factory creates instances at runtime");
    }
    let args: Vec<String> = m
        .params
        .iter()
        .map(|p| format!("{} {}", arg_type(p.ty), p.name))
        .collect();
    let ret = m
        .returns
        .map(|r| format!(" returns ({})", ret_type(r)))
        .unwrap_or_default();
    let _ = writeln!(s, "    function {}({}) external{ret} {{", m.name, args.join(", "));
    for e in &m.emits {
        if e.starts_with('<') {
            let _ = writeln!(s, "        _emitEvent(keccak256(bytes(eventKindId)), parameters);");
        } else {
            let _ = writeln!(s, "        // emits {e}");
        }
    }
    let _ = writeln!(s, "        revert(\"generated stub\");");
    let _ = writeln!(s, "    }}\n");
}

fn markdown(ir: &ContractIR) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# Contract data dictionary\n");
    let _ = writeln!(s, "Config version {}.\n", ir.config_version);
    for c in &ir.contracts {
        let base = c.base.as_deref().map(|b| format!(" (extends {b})")).unwrap_or_default();
        let abs = if c.is_abstract { " (abstract)" } else { "" };
        let _ = writeln!(s, "## {}{base}{abs}\n", c.name);
        if !c.fields.is_empty() {
            let _ = writeln!(s, "| field | type | mutable |\n|---|---|---|");
            for f in &c.fields {
                let _ = writeln!(s, "| {} | {} | {} |", f.name, sol_type(f.ty), if f.immutable { "no" } else { "yes" });
            }
            s.push('\n');
        }
        if !c.methods.is_empty() {
            let _ = writeln!(s, "| method | authorization | actors |\n|---|---|---|");
            for m in &c.methods {
                let rule = serde_json::to_value(m.auth.rule).expect("rule serializes");
                let _ = writeln!(s, "| {} | {} | {} |", m.name, rule.as_str().unwrap_or(""), m.auth.actor_ids.join(", "));
            }
            s.push('\n');
        }
        if !c.kinds.is_empty() {
            let _ = writeln!(s, "| kind | name | unit | actors |\n|---|---|---|---|");
            for k in &c.kinds {
                let _ = writeln!(
                    s,
                    "| {} | {} | {} | {} |",
                    k.kind_id,
                    k.name,
                    k.default_unit.as_deref().unwrap_or(""),
                    k.authorized_actor_ids.join(", ")
                );
            }
            s.push('\n');
        }
        if !c.companies.is_empty() {
            let _ = writeln!(s, "| company | kinds | actors |\n|---|---|---|");
            for co in &c.companies {
                let _ = writeln!(s, "| {} | {} | {} |", co.name, co.resource_ids.join(", "), co.authorized_actor_ids.join(", "));
            }
            s.push('\n');
        }
    }
    for r in &ir.records {
        let _ = writeln!(s, "## {} (record)\n", r.name);
        let _ = writeln!(s, "| field | type |\n|---|---|");
        for f in &r.fields {
            let _ = writeln!(s, "| {} | {} |", f.name, sol_type(f.ty));
        }
        s.push('\n');
    }
    let _ = writeln!(s, "## Log events\n");
    let _ = writeln!(s, "Parameters travel in the event log as one encoded byte string.\n");
    for e in &ir.log_events {
        let _ = writeln!(s, "### {} (`{}`, class {:?})\n", e.name, e.event_kind_id, e.event_class);
        let _ = writeln!(s, "- applies to: {}", e.applicable_kind_ids.join(", "));
        let _ = writeln!(s, "- actors: {}", e.authorized_actor_ids.join(", "));
        if !e.generated_kind_ids.is_empty() {
            let _ = writeln!(s, "- generates: {}", e.generated_kind_ids.join(", "));
        }
        if let Some(y) = &e.max_yield {
            let _ = writeln!(s, "- max yield: {y}");
        }
        if !e.required_unlock_actor_ids.is_empty() {
            let _ = writeln!(s, "- unlocked by: {}", e.required_unlock_actor_ids.join(", "));
        }
        for p in &e.params {
            let opts = if p.enum_options.is_empty() {
                String::new()
            } else {
                format!(" ({})", p.enum_options.join(" | "))
            };
            let _ = writeln!(s, "- `{}`: {}{opts}", p.name, p.param_type.tag());
        }
        s.push('\n');
    }
    s
}
