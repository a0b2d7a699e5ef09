//! MiniC: a C subset with no preprocessor, ILP32 layout and signed plain
//! `char`.

pub mod ast;
pub mod check;
pub mod lexer;
pub mod parser;
pub mod stops;
pub mod types;

use std::fmt;

pub use check::{typecheck, TypedUnit};
pub use parser::parse;
pub use stops::{plan_stopping_points, StopKind, StopPlan, StopPoint};

/// Line `y` and byte column `x`, both 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Pos {
    pub y: u32,
    pub x: u32,
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}", self.y, self.x)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub pos: Pos,
    pub message: String,
}

impl Diagnostic {
    pub fn new(pos: Pos, message: impl Into<String>) -> Self {
        Diagnostic { pos, message: message.into() }
    }

    /// `file:y.x: message`
    pub fn render(&self, file: &str) -> String {
        format!("{file}:{}: {}", self.pos, self.message)
    }
}

/// Parse, check and plan a unit in one step.
pub fn frontend(src: &str, file: &str) -> Result<(TypedUnit, StopPlan), Vec<Diagnostic>> {
    let ast = parse(src, file)?;
    let unit = typecheck(&ast)?;
    let plan = plan_stopping_points(&unit);
    Ok((unit, plan))
}
