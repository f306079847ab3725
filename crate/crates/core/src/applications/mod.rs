//! The two concrete games: electric-vehicle charging and road route choice.

pub mod ev;
pub mod traffic;
