//! Client-side tools for the quiz hub: the teacher CLI and the floor
//! simulator, plus the small WebSocket client they share.

pub mod client;
pub mod floor;
pub mod teacher;
