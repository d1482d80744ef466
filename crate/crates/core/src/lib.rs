// SPDX-License-Identifier: Apache-2.0

//! Shared-ledger coordination for teams of visual-homing robots.
//!
//! Robots publish their panoramic views as transactions to a SHA-256
//! hash-linked ledger whose every block is a full snapshot of the team. A
//! robot that cannot see its goal reads the ledger tip, finds a chain of
//! teammates linked by commonly visible landmarks, and homes from landmark
//! to landmark until the goal comes into view.
//!
//! - [`ledger`]: transactions, blocks, chain validation, JSON-lines dumps
//! - [`panorama`]: views, view difference, publish triggers
//! - [`planner`]: robot–landmark graph and shortest landmark chain
//! - [`world`], [`sim`], [`scenario`]: 2D world, simulation driver, scenario files
//! - [`bench`]: latency measurements and CSV output
//! - [`cli`]: command-line front end

pub mod bench;
pub mod cli;
pub mod geometry;
pub mod ledger;
pub mod panorama;
pub mod planner;
pub mod scenario;
pub mod sim;
pub mod world;
