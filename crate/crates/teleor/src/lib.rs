pub mod agent;
pub mod ast;
pub mod lexer;
pub mod parser;
pub mod pedro;
pub mod sim;
pub mod store;
pub mod engine;
pub mod term;
pub mod types;
