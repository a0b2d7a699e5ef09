pub mod symtab;
pub mod minic;
pub mod codegen;
pub mod link;
pub mod comm;
pub mod vm;
pub mod nub;
pub mod driver;
pub mod debugger;
