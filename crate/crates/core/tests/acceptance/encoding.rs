use std::collections::BTreeSet;

use agritrace::crypto::Hash;
use agritrace::docstore::{DocStore, DocStoreError};
use agritrace::params::{decode_parameters, encode_parameters, ParamTriple, ParamType};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::{Outcome, SEED};

const PARAM_LISTS: usize = 10_000;
const DOCS: usize = 64;

const ALPHABET: [&str; 12] = ["\x1E", "\x1F", "\\", "a", "Z", "0", " ", "\n", "é", "漢", "\\\x1E", ":"];

fn random_field(rng: &mut ChaCha8Rng) -> String {
    (0..rng.gen_range(0..8))
        .map(|_| ALPHABET[rng.gen_range(0..ALPHABET.len())])
        .collect()
}

pub fn params_fuzz() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED ^ 7);
    let (mut separators, mut empties) = (0, 0);
    for case in 0..PARAM_LISTS {
        let mut names = BTreeSet::new();
        let mut list = Vec::new();
        for _ in 0..rng.gen_range(0..7) {
            let name = random_field(&mut rng);
            if !names.insert(name.clone()) {
                continue;
            }
            let value = random_field(&mut rng);
            separators += value.contains(['\x1E', '\x1F']) as usize;
            empties += value.is_empty() as usize;
            let t = ParamType::ALL[rng.gen_range(0..ParamType::ALL.len())];
            list.push(ParamTriple::new(name, t, value));
        }
        let bytes = encode_parameters(&list).map_err(|e| format!("case {case}: {e}"))?;
        let back = decode_parameters(&bytes).map_err(|e| format!("case {case}: {e}"))?;
        ensure!(back == list, "case {case}: decode(encode(x)) != x for {list:?}");
        let again = encode_parameters(&back).map_err(|e| e.to_string())?;
        ensure!(again == bytes, "case {case}: re-encoding changed the bytes");
    }
    ensure!(separators > 1000 && empties > 1000, "weak coverage: {separators} / {empties}");
    Ok(format!("{PARAM_LISTS} lists; {separators} values with separators, {empties} empty"))
}

pub fn docstore() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let store = DocStore::open(dir.path()).map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(SEED ^ 10);
    let mut stored: Vec<(Hash, Vec<u8>)> = Vec::new();
    for _ in 0..DOCS {
        let len = rng.gen_range(1..=200_000);
        let bytes: Vec<u8> = (0..len).map(|_| rng.gen()).collect();
        let id = store.put(&bytes).map_err(|e| e.to_string())?;
        ensure!(store.put(&bytes).map_err(|e| e.to_string())? == id, "second put changed the id");
        stored.push((id, bytes));
    }
    for (id, bytes) in &stored {
        ensure!(&store.get(id).map_err(|e| e.to_string())? == bytes, "round trip of {id}");
    }
    let mut corrupted = 0;
    for (id, bytes) in stored.iter().take(16) {
        let path = store.object_path(id);
        let mut on_disk = bytes.clone();
        let at = rng.gen_range(0..on_disk.len());
        on_disk[at] ^= 1 << rng.gen_range(0..8);
        std::fs::write(&path, &on_disk).map_err(|e| e.to_string())?;
        match store.get(id) {
            Err(DocStoreError::Integrity { expected, .. }) if expected == *id => corrupted += 1,
            other => return Err(format!("flip at {at} of {id}: {other:?}")),
        }
    }
    Ok(format!("{DOCS} objects round-tripped, {corrupted} single-bit corruptions detected"))
}
