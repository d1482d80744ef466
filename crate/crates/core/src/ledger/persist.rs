// SPDX-License-Identifier: Apache-2.0

//! JSON-lines persistence: one block per line, in chain order.
//!
//! Loading is strict. A line must parse and must re-serialize to exactly the
//! same bytes, so any textual edit to a dump is reported against the block
//! on that line even when it would parse to the same value.

use std::io::{self, BufRead, Write};

use thiserror::Error;

use super::{Block, Chain};

#[derive(Debug, Error)]
pub enum LoadError {
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

impl LoadError {
    /// Zero-based block position of the bad record, when there is one.
    pub fn block_index(&self) -> Option<usize> {
        match self {
            LoadError::Malformed { line, .. } => Some(*line),
            LoadError::Io(_) => None,
        }
    }
}

pub fn to_jsonl_string(chain: &Chain) -> String {
    let mut out = String::new();
    for block in chain.blocks() {
        out.push_str(&serde_json::to_string(block).expect("blocks always serialize"));
        out.push('\n');
    }
    out
}

pub fn dump_jsonl<W: Write>(chain: &Chain, mut writer: W) -> io::Result<()> {
    writer.write_all(to_jsonl_string(chain).as_bytes())?;
    writer.flush()
}

/// Reads a dump back. Does not validate hashes; call `validate_chain`.
pub fn load_jsonl<R: BufRead>(reader: R) -> Result<Chain, LoadError> {
    let mut blocks = Vec::new();
    for (line, bytes) in reader.split(b'\n').enumerate() {
        let bytes = bytes?;
        let malformed = |message: String| LoadError::Malformed { line, message };
        let text = std::str::from_utf8(&bytes).map_err(|e| malformed(e.to_string()))?;
        let block: Block = serde_json::from_str(text).map_err(|e| malformed(e.to_string()))?;
        let canonical = serde_json::to_string(&block).expect("blocks always serialize");
        if canonical != text {
            return Err(malformed("record is not in canonical form".into()));
        }
        blocks.push(block);
    }
    if blocks.is_empty() {
        return Err(LoadError::Malformed {
            line: 0,
            message: "no blocks".into(),
        });
    }
    Ok(Chain::from_blocks(blocks))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ledger::{validate_chain, Transaction};
    use crate::panorama::tests::view;

    fn sample() -> Chain {
        let mut chain = Chain::new(["R1", "R2"], 0);
        let t = |r: &str, ts: u64, ids: &[&str]| Transaction::new(ts, view(r, ids)).unwrap();
        chain
            .commit(vec![t("R1", 0, &["a"]), t("R2", 0, &["a", "b"])], 0)
            .unwrap();
        chain.commit(vec![t("R2", 100, &["c"])], 100).unwrap();
        chain
    }

    #[test]
    fn dump_reload_validates() {
        let chain = sample();
        let text = to_jsonl_string(&chain);
        assert_eq!(text.lines().count(), 3);
        let back = load_jsonl(text.as_bytes()).unwrap();
        assert_eq!(back, chain);
        assert!(validate_chain(&back).is_ok());
        assert_eq!(to_jsonl_string(&back), text);
    }

    #[test]
    fn field_names_and_order() {
        let text = to_jsonl_string(&sample());
        let second = text.lines().nth(1).unwrap();
        let v: serde_json::Value = serde_json::from_str(second).unwrap();
        let keys: Vec<&String> = v.as_object().unwrap().keys().collect();
        assert_eq!(
            keys,
            [
                "block_hash",
                "index",
                "prev_hash",
                "timestamp",
                "transactions"
            ]
        );
        assert!(second.starts_with("{\"index\":1,\"timestamp\":0,\"prev_hash\":\""));
        let tx = &v["transactions"][0];
        for k in ["tx_id", "robot_id", "timestamp", "panorama"] {
            assert!(tx.get(k).is_some(), "{k}");
        }
        let obs = &tx["panorama"]["observations"][0];
        for k in ["landmark_id", "bearing", "apparent_size", "descriptor"] {
            assert!(obs.get(k).is_some(), "{k}");
        }
    }

    #[test]
    fn non_canonical_text_is_rejected() {
        let text = to_jsonl_string(&sample());
        let spaced = text.replacen("{\"index\":1,", "{\"index\": 1,", 1);
        let err = load_jsonl(spaced.as_bytes()).unwrap_err();
        assert_eq!(err.block_index(), Some(1));

        let upper = text.replacen("\"prev_hash\":\"0", "\"prev_hash\":\"X", 1);
        assert_eq!(
            load_jsonl(upper.as_bytes()).unwrap_err().block_index(),
            Some(0)
        );

        assert!(load_jsonl(&b""[..]).is_err());
    }
}
