//! The `.osys` system-description language.

pub mod ast;
pub mod lexer;
mod parser;
mod printer;

pub use parser::{parse, parse_expression};
pub use printer::print;
pub mod model;
