pub mod ast;
pub mod config;
pub mod bibliography;
pub mod diagnostic;
pub mod emit;
pub mod filter;
pub mod html;
pub mod markdown;
pub mod parser;
pub mod pipeline;
pub mod xref;
