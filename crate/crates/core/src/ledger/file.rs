//! Append-only chain file: a sequence of block records, each a 4-byte
//! big-endian length followed by the block's canonical JSON.

use std::fs::OpenOptions;
use std::io::Write;
use std::path::Path;

use super::chain::{fail, verify_chain, FailureKind, VerificationReport};
use super::{Block, VerificationFailure};

pub fn encode_block(block: &Block) -> Vec<u8> {
    let body = serde_json::to_vec(block).expect("block serializes");
    let mut out = Vec::with_capacity(body.len() + 4);
    out.extend_from_slice(&(body.len() as u32).to_be_bytes());
    out.extend_from_slice(&body);
    out
}

pub fn encode_chain(blocks: &[Block]) -> Vec<u8> {
    blocks.iter().flat_map(encode_block).collect()
}

/// Decodes records until the first bad one. A record decodes only if its
/// body is exactly the canonical encoding of the block it describes.
pub fn decode_chain(bytes: &[u8]) -> (Vec<Block>, Option<VerificationFailure>) {
    let mut blocks = Vec::new();
    let mut rest = bytes;
    while !rest.is_empty() {
        let index = blocks.len() as u64;
        let Some((len, tail)) = rest.split_first_chunk::<4>() else {
            return (blocks, Some(fail(index, None, FailureKind::Decode, "truncated length prefix")));
        };
        let len = u32::from_be_bytes(*len) as usize;
        if tail.len() < len {
            return (blocks, Some(fail(index, None, FailureKind::Decode, "truncated record")));
        }
        let (body, tail) = tail.split_at(len);
        let block: Block = match serde_json::from_slice(body) {
            Ok(b) => b,
            Err(e) => return (blocks, Some(fail(index, None, FailureKind::Decode, e.to_string()))),
        };
        if serde_json::to_vec(&block).expect("block serializes") != body {
            return (
                blocks,
                Some(fail(index, None, FailureKind::NonCanonical, "record is not canonical")),
            );
        }
        blocks.push(block);
        rest = tail;
    }
    (blocks, None)
}

/// Verifies a serialized chain. The reported failure is the earliest one:
/// a replay failure in the decodable prefix, else the decode failure.
pub fn verify_chain_bytes(bytes: &[u8]) -> VerificationReport {
    let (blocks, decode_failure) = decode_chain(bytes);
    let report = verify_chain(&blocks);
    if report.failure.is_some() || decode_failure.is_none() {
        return report;
    }
    VerificationReport {
        blocks_verified: blocks.len() as u64,
        failure: decode_failure,
    }
}

pub fn write_chain_file(path: &Path, blocks: &[Block]) -> std::io::Result<()> {
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, encode_chain(blocks))?;
    std::fs::rename(tmp, path)
}

pub fn append_block(path: &Path, block: &Block) -> std::io::Result<()> {
    let mut f = OpenOptions::new().create(true).append(true).open(path)?;
    f.write_all(&encode_block(block))?;
    f.sync_data()
}

pub fn read_chain_file(path: &Path) -> std::io::Result<Vec<u8>> {
    std::fs::read(path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::{fixture_chain, olive_oil_flow};

    fn sample() -> Vec<Block> {
        let (mut chain, people) = fixture_chain();
        olive_oil_flow(&mut chain, &people).unwrap();
        chain.blocks().to_vec()
    }

    #[test]
    fn round_trip() {
        let blocks = sample();
        let bytes = encode_chain(&blocks);
        let (decoded, failure) = decode_chain(&bytes);
        assert!(failure.is_none());
        assert_eq!(decoded, blocks);
        assert!(verify_chain_bytes(&bytes).is_ok());
    }

    #[test]
    fn truncation_is_reported_at_the_cut_record() {
        let blocks = sample();
        let bytes = encode_chain(&blocks);
        let cut = encode_chain(&blocks[..3]).len() + 10;
        let report = verify_chain_bytes(&bytes[..cut]);
        let f = report.failure.unwrap();
        assert_eq!((f.block, f.kind), (3, FailureKind::Decode));
    }

    #[test]
    fn reformatted_json_is_not_canonical() {
        let blocks = sample();
        let body = serde_json::to_vec_pretty(&blocks[0]).unwrap();
        let mut bytes = (body.len() as u32).to_be_bytes().to_vec();
        bytes.extend_from_slice(&body);
        let (_, f) = decode_chain(&bytes);
        assert_eq!(f.unwrap().kind, FailureKind::NonCanonical);
    }

    #[test]
    fn every_flip_in_a_small_block_is_caught() {
        let blocks = sample();
        let bytes = encode_chain(&blocks);
        let start = encode_chain(&blocks[..5]).len();
        let end = start + encode_block(&blocks[5]).len();
        for pos in start..end {
            let mut m = bytes.clone();
            m[pos] ^= 0x01;
            let f = verify_chain_bytes(&m).failure.unwrap_or_else(|| panic!("flip at {pos} undetected"));
            assert!(f.block <= 5, "flip at {pos} reported at block {}", f.block);
        }
    }

    #[test]
    fn file_append_and_read() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("chain.bin");
        let blocks = sample();
        write_chain_file(&path, &blocks[..2]).unwrap();
        for b in &blocks[2..] {
            append_block(&path, b).unwrap();
        }
        let bytes = read_chain_file(&path).unwrap();
        assert_eq!(decode_chain(&bytes).0, blocks);
    }
}
