//! Robust strategy synthesis for Markov decision processes with set-valued
//! transitions against LTL objectives given as limit-deterministic Büchi
//! (or deterministic Rabin) automata.

pub mod automata;
pub mod ltl;
pub mod model;
pub mod io;
pub mod product;
pub mod winning_region;
pub mod synthesis;
pub mod oracle;
pub mod hexworld;
pub mod montecarlo;
