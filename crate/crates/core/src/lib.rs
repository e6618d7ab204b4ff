//! Natural-language-to-controller workbench for tabletop pick-and-place tasks.
//!
//! An instruction is parsed ([`grammar`]), grounded against a simulated scene
//! ([`grounding`], [`world`]) into a GR(1) specification ([`ltl`]), and
//! synthesized ([`game`]). Unrealizable specifications are repaired by mining
//! environment assumptions from the counterstrategy ([`miner`]) and asking the
//! user about them ([`prompter`]); [`session`] drives the loop and
//! [`interface`] exposes it over the CLI and a line protocol.

pub mod game;
pub mod grammar;
pub mod grounding;
pub mod interface;
pub mod ltl;
pub mod miner;
pub mod prompter;
pub mod session;
pub mod world;
