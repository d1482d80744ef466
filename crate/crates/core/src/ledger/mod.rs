// SPDX-License-Identifier: Apache-2.0

//! Append-only, hash-linked ledger of team panorama snapshots.
//!
//! Every non-genesis block carries exactly one transaction per registered
//! robot: the robot's new transaction if it published in that round,
//! otherwise its previous transaction copied verbatim. The tip block alone
//! therefore holds the whole team's latest state.

mod encoding;
mod hash;
mod persist;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::{Arc, RwLock};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::panorama::PanoramicView;

pub use encoding::{canonical_encode_block, canonical_encode_transaction};
pub use hash::{compute_hash, Hash};
pub use persist::{dump_jsonl, load_jsonl, to_jsonl_string, LoadError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Transaction {
    pub tx_id: Hash,
    pub robot_id: String,
    /// Simulated milliseconds since scenario start.
    pub timestamp: u64,
    pub panorama: PanoramicView,
}

impl Transaction {
    /// Creates a transaction for the robot that captured `panorama`.
    pub fn new(timestamp: u64, panorama: PanoramicView) -> Result<Self, LedgerError> {
        if panorama.robot_id.is_empty() {
            return Err(LedgerError::EmptyRobotId);
        }
        let robot_id = panorama.robot_id.clone();
        let tx_id = compute_hash(&canonical_encode_transaction(
            &robot_id, timestamp, &panorama,
        ));
        Ok(Transaction {
            tx_id,
            robot_id,
            timestamp,
            panorama,
        })
    }

    pub fn recompute_id(&self) -> Hash {
        compute_hash(&canonical_encode_transaction(
            &self.robot_id,
            self.timestamp,
            &self.panorama,
        ))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Block {
    pub index: u64,
    pub timestamp: u64,
    pub prev_hash: Hash,
    pub block_hash: Hash,
    pub transactions: Vec<Transaction>,
}

impl Block {
    fn sealed(
        index: u64,
        timestamp: u64,
        prev_hash: Hash,
        transactions: Vec<Transaction>,
    ) -> Block {
        let block_hash = compute_hash(&canonical_encode_block(
            index,
            timestamp,
            &prev_hash,
            &transactions,
        ));
        Block {
            index,
            timestamp,
            prev_hash,
            block_hash,
            transactions,
        }
    }

    pub fn recompute_hash(&self) -> Hash {
        compute_hash(&canonical_encode_block(
            self.index,
            self.timestamp,
            &self.prev_hash,
            &self.transactions,
        ))
    }

    pub fn transaction(&self, robot_id: &str) -> Option<&Transaction> {
        self.transactions
            .binary_search_by(|tx| tx.robot_id.as_str().cmp(robot_id))
            .ok()
            .map(|i| &self.transactions[i])
    }
}

pub fn create_genesis(timestamp: u64) -> Block {
    Block::sealed(0, timestamp, Hash::ZERO, Vec::new())
}

/// The invariant a block failed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChainFault {
    IndexMismatch,
    HashMismatch,
    LinkMismatch,
    TxIdMismatch,
    /// Transactions out of robot-id order or repeated.
    Unsorted,
    /// Robot set differs from the registered team.
    TeamMismatch,
    /// The persisted record could not be read back.
    Malformed,
}

impl fmt::Display for ChainFault {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("block {index}: {fault}")]
pub struct ChainViolation {
    pub index: usize,
    pub fault: ChainFault,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LedgerError {
    #[error("robot id must not be empty")]
    EmptyRobotId,
    #[error("robot {0} is not registered with this ledger")]
    UnknownRobot(String),
    #[error("more than one new transaction for robot {0}")]
    DuplicateRobot(String),
    #[error("robot {0} has neither a new nor a previous transaction")]
    MissingRobot(String),
    #[error("block rejected: {0}")]
    Rejected(#[from] ChainFault),
}

impl std::error::Error for ChainFault {}

/// The ledger: genesis block, successors, and the team whose states every
/// non-genesis block must cover.
#[derive(Debug, Clone, PartialEq)]
pub struct Chain {
    blocks: Vec<Block>,
    team: BTreeSet<String>,
}

impl Chain {
    pub fn new<I, S>(team: I, genesis_timestamp: u64) -> Chain
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Chain {
            blocks: vec![create_genesis(genesis_timestamp)],
            team: team.into_iter().map(Into::into).collect(),
        }
    }

    /// Wraps stored blocks without checking them; the team is taken from
    /// block 1 (empty for a genesis-only chain). Run [`validate_chain`]
    /// before trusting the result.
    pub fn from_blocks(blocks: Vec<Block>) -> Chain {
        let team = blocks
            .get(1)
            .map(|b| {
                b.transactions
                    .iter()
                    .map(|tx| tx.robot_id.clone())
                    .collect()
            })
            .unwrap_or_default();
        Chain { blocks, team }
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn into_blocks(self) -> Vec<Block> {
        self.blocks
    }

    pub fn team(&self) -> &BTreeSet<String> {
        &self.team
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn tip(&self) -> &Block {
        self.blocks.last().expect("chain always holds genesis")
    }

    /// Builds the successor of the tip: new transactions replace their
    /// robot's entry, every other robot's transaction is carried forward.
    pub fn assemble_block(
        &self,
        new_transactions: Vec<Transaction>,
        timestamp: u64,
    ) -> Result<Block, LedgerError> {
        let tip = self.tip();
        let mut next: BTreeMap<String, Transaction> = BTreeMap::new();
        for tx in new_transactions {
            if !self.team.contains(&tx.robot_id) {
                return Err(LedgerError::UnknownRobot(tx.robot_id));
            }
            if next.contains_key(&tx.robot_id) {
                return Err(LedgerError::DuplicateRobot(tx.robot_id));
            }
            next.insert(tx.robot_id.clone(), tx);
        }
        for carried in &tip.transactions {
            next.entry(carried.robot_id.clone())
                .or_insert_with(|| carried.clone());
        }
        if let Some(missing) = self.team.iter().find(|r| !next.contains_key(*r)) {
            return Err(LedgerError::MissingRobot(missing.clone()));
        }
        Ok(Block::sealed(
            tip.index + 1,
            timestamp,
            tip.block_hash,
            next.into_values().collect(),
        ))
    }

    /// Appends `block` if it extends the tip. Checks index, then the stored
    /// hash, then the link to the tip.
    pub fn append_block(&mut self, block: Block) -> Result<(), ChainFault> {
        let tip = self.tip();
        check_successor(tip, &block, &self.team)?;
        self.blocks.push(block);
        Ok(())
    }

    /// `assemble_block` followed by `append_block`.
    pub fn commit(
        &mut self,
        new_transactions: Vec<Transaction>,
        timestamp: u64,
    ) -> Result<&Block, LedgerError> {
        let block = self.assemble_block(new_transactions, timestamp)?;
        self.append_block(block)?;
        Ok(self.tip())
    }

    pub fn validate(&self) -> Result<(), ChainViolation> {
        validate_chain(self)
    }

    pub fn latest_states(&self) -> BTreeMap<&str, &Transaction> {
        latest_states(self)
    }
}

fn check_block_body(block: &Block, team: &BTreeSet<String>) -> Result<(), ChainFault> {
    if block
        .transactions
        .iter()
        .any(|tx| tx.recompute_id() != tx.tx_id)
    {
        return Err(ChainFault::TxIdMismatch);
    }
    if block
        .transactions
        .windows(2)
        .any(|w| w[0].robot_id >= w[1].robot_id)
    {
        return Err(ChainFault::Unsorted);
    }
    if block
        .transactions
        .iter()
        .any(|tx| tx.robot_id != tx.panorama.robot_id)
    {
        return Err(ChainFault::TxIdMismatch);
    }
    let robots = block.transactions.iter().map(|tx| &tx.robot_id);
    if block.transactions.len() != team.len() || !robots.zip(team).all(|(a, b)| a == b) {
        return Err(ChainFault::TeamMismatch);
    }
    Ok(())
}

fn check_successor(prev: &Block, block: &Block, team: &BTreeSet<String>) -> Result<(), ChainFault> {
    if block.index != prev.index + 1 {
        return Err(ChainFault::IndexMismatch);
    }
    if block.recompute_hash() != block.block_hash {
        return Err(ChainFault::HashMismatch);
    }
    if block.prev_hash != prev.block_hash {
        return Err(ChainFault::LinkMismatch);
    }
    check_block_body(block, team)
}

fn check_genesis(block: &Block) -> Result<(), ChainFault> {
    if block.index != 0 {
        return Err(ChainFault::IndexMismatch);
    }
    if block.recompute_hash() != block.block_hash {
        return Err(ChainFault::HashMismatch);
    }
    if block.prev_hash != Hash::ZERO {
        return Err(ChainFault::LinkMismatch);
    }
    if !block.transactions.is_empty() {
        return Err(ChainFault::TeamMismatch);
    }
    Ok(())
}

/// Re-derives every hash and link. Reports the lowest offending position.
pub fn validate_chain(chain: &Chain) -> Result<(), ChainViolation> {
    let Some(genesis) = chain.blocks.first() else {
        return Err(ChainViolation {
            index: 0,
            fault: ChainFault::Malformed,
        });
    };
    check_genesis(genesis).map_err(|fault| ChainViolation { index: 0, fault })?;
    for (i, pair) in chain.blocks.windows(2).enumerate() {
        let index = i + 1;
        // index field must equal position, independent of the predecessor's stored index
        if pair[1].index != index as u64 {
            return Err(ChainViolation {
                index,
                fault: ChainFault::IndexMismatch,
            });
        }
        check_successor(&pair[0], &pair[1], &chain.team)
            .map_err(|fault| ChainViolation { index, fault })?;
    }
    Ok(())
}

/// The tip block's transactions keyed by robot. Reads nothing but the tip.
pub fn latest_states(chain: &Chain) -> BTreeMap<&str, &Transaction> {
    chain
        .tip()
        .transactions
        .iter()
        .map(|tx| (tx.robot_id.as_str(), tx))
        .collect()
}

/// A chain shared between threads: one writer at a time, readers see only
/// whole blocks.
#[derive(Debug, Clone)]
pub struct SharedChain {
    inner: Arc<RwLock<Chain>>,
}

impl SharedChain {
    pub fn new(chain: Chain) -> Self {
        SharedChain {
            inner: Arc::new(RwLock::new(chain)),
        }
    }

    pub fn commit(
        &self,
        new_transactions: Vec<Transaction>,
        timestamp: u64,
    ) -> Result<Hash, LedgerError> {
        let mut chain = self.inner.write().expect("ledger lock poisoned");
        chain
            .commit(new_transactions, timestamp)
            .map(|b| b.block_hash)
    }

    /// Runs `f` against a consistent view of the chain.
    pub fn read<R>(&self, f: impl FnOnce(&Chain) -> R) -> R {
        let chain = self.inner.read().expect("ledger lock poisoned");
        f(&chain)
    }

    pub fn snapshot(&self) -> Chain {
        self.read(Chain::clone)
    }
}
