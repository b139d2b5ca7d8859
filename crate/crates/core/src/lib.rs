//! Modeling toolkit for two cooperative cognitive-relaying MAC protocols.
//!
//! A primary transmitter/receiver pair shares a slotted channel with a
//! full-duplex secondary pair. When cooperation is beneficial, the primary
//! user releases part of its slot duration and bandwidth to the secondary
//! user, which in return relays undelivered primary packets
//! (decode-and-forward). Two protocol variants are modeled: `P1`, where the
//! secondary blindly forwards every packet it decodes, and `P2`, where it
//! forwards only when the overheard primary feedback looks like a NACK.
//!
//! The crate provides:
//!
//! * closed-form link, sensing, queueing and per-protocol performance
//!   expressions ([`channel`], [`sensing`], [`queueing`], [`protocols`]),
//! * a constrained 2D grid-search optimizer over the time/bandwidth split
//!   with the primary energy-savings metric ([`optimizer`]),
//! * an independent slot-level Monte Carlo simulator used to cross-validate
//!   every analytical quantity ([`simulator`]),
//! * the scalar special functions and adaptive quadrature the formulas rely
//!   on ([`numerics`]).

pub mod channel;
pub mod numerics;
pub mod optimizer;
pub mod params;
pub mod protocols;
pub mod queueing;
pub mod sensing;
pub mod simulator;

pub use params::{Allocation, ParamError, Protocol, SystemParams};
pub use protocols::{LinkStats, ProtocolMetrics, Violation};
pub use optimizer::{GridSpec, OptResult, SweepRow};
pub use simulator::{Estimate, SimConfig, SimReport};
