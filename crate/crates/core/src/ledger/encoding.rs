// SPDX-License-Identifier: Apache-2.0

//! Canonical byte layout hashed into transaction and block ids.
//!
//! - strings: u32 big-endian byte length, then UTF-8 bytes
//! - integers: u64 big-endian
//! - reals: IEEE-754 binary64, big-endian
//! - lists: u32 big-endian element count, then elements
//! - digests: the raw 32 bytes
//!
//! Fields are written in declaration order. Changing any of this changes
//! every hash in every existing ledger.

use crate::panorama::{LandmarkObservation, PanoramicView};

use super::hash::Hash;
use super::Transaction;

#[derive(Debug, Default)]
pub(crate) struct Encoder {
    buf: Vec<u8>,
}

impl Encoder {
    pub(crate) fn new() -> Self {
        Self::default()
    }

    pub(crate) fn finish(self) -> Vec<u8> {
        self.buf
    }

    fn count(&mut self, n: usize) {
        let n = u32::try_from(n).expect("list longer than u32::MAX");
        self.buf.extend_from_slice(&n.to_be_bytes());
    }

    pub(crate) fn str(&mut self, s: &str) {
        self.count(s.len());
        self.buf.extend_from_slice(s.as_bytes());
    }

    pub(crate) fn u64(&mut self, v: u64) {
        self.buf.extend_from_slice(&v.to_be_bytes());
    }

    pub(crate) fn f64(&mut self, v: f64) {
        self.buf.extend_from_slice(&v.to_be_bytes());
    }

    pub(crate) fn hash(&mut self, h: &Hash) {
        self.buf.extend_from_slice(h.as_bytes());
    }

    fn observation(&mut self, o: &LandmarkObservation) {
        self.str(&o.landmark_id);
        self.f64(o.bearing);
        self.f64(o.apparent_size);
        self.count(o.descriptor.len());
        for &d in &o.descriptor {
            self.f64(d);
        }
    }

    pub(crate) fn panorama(&mut self, p: &PanoramicView) {
        self.str(&p.robot_id);
        self.u64(p.captured_at);
        self.count(p.observations.len());
        for o in &p.observations {
            self.observation(o);
        }
    }

    pub(crate) fn transaction_body(
        &mut self,
        robot_id: &str,
        timestamp: u64,
        panorama: &PanoramicView,
    ) {
        self.str(robot_id);
        self.u64(timestamp);
        self.panorama(panorama);
    }
}

/// Bytes whose digest is the transaction id.
pub fn canonical_encode_transaction(
    robot_id: &str,
    timestamp: u64,
    panorama: &PanoramicView,
) -> Vec<u8> {
    let mut enc = Encoder::new();
    enc.transaction_body(robot_id, timestamp, panorama);
    enc.finish()
}

/// Bytes whose digest is the block hash: header fields, then every
/// transaction as its id followed by its canonical body.
pub fn canonical_encode_block(
    index: u64,
    timestamp: u64,
    prev_hash: &Hash,
    transactions: &[Transaction],
) -> Vec<u8> {
    let mut enc = Encoder::new();
    enc.u64(index);
    enc.u64(timestamp);
    enc.hash(prev_hash);
    enc.count(transactions.len());
    for tx in transactions {
        enc.hash(&tx.tx_id);
        enc.transaction_body(&tx.robot_id, tx.timestamp, &tx.panorama);
    }
    enc.finish()
}
