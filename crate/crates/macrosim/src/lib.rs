//! Agent-based macroeconomic simulator with stock-flow consistent accounting.
//!
//! The model is a closed monetary economy of households, consumption-good
//! firms, capital-good firms, banks, and a central bank, evolving in
//! discrete steps (a configurable fraction of a year). Each step runs a
//! fixed sequence of decentralized markets: labour, consumption goods,
//! capital goods, and bank credit, followed by accounting, firm and bank
//! exit, and one-to-one entry. Firm investment is financed by amortized
//! bank loans, so the credit network, leverage, and default cascades
//! emerge endogenously; a per-step audit asserts that every monetary flow
//! has an equal and opposite counterparty entry (stock-flow consistency).
//!
//! Crate layout:
//! - [`config`]: parameters, scenarios, and the keyed random-number policy
//!   that makes every run bit-reproducible and comparable across scenarios.
//! - [`agents`]: per-agent state and behavioural rules (pricing, wages,
//!   production plans, investment, credit demand, bank risk scoring).
//! - [`markets`]: the four search-and-matching market sessions.
//! - [`engine`]: initialization, the per-step schedule, entry/exit,
//!   the stock-flow audit, and trace recording.
//! - [`analytics`]: growth rates, trend/cycle decomposition, correlation,
//!   heavy-tail and exponential-power fitting, inequality and
//!   concentration indices, and scenario summary tables.
//! - [`debtrank`]: systemic-risk scoring of the bank-firm credit network.
//! - [`cli`]: the `run`, `batch`, `analyze`, and `debtrank` subcommands.

pub mod agents;
pub mod analytics;
pub mod cli;
pub mod config;
pub mod debtrank;
pub mod engine;
pub mod markets;
pub mod plot;
