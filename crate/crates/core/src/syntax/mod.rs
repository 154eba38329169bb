//! FSol syntax: AST, lexer, parser, canonical printer and hierarchy
//! resolution.

pub mod ast;
pub mod hierarchy;
pub mod lexer;
pub mod parser;
pub mod printer;

pub use ast::*;
pub use hierarchy::{resolve_hierarchy, subtype, ContractInfo, ContractTable, FieldInfo, MethodInfo};
pub use parser::{parse, parse_file};
pub use printer::{expr_to_string, pretty_print};
