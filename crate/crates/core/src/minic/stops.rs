//! Stopping points: the places where a breakpoint can be planted.
//!
//! A unit's points are numbered densely in source pre-order. There is one at
//! each function body's opening brace, and one before each expression
//! statement, condition, `for` clause, `return` expression, empty statement,
//! local initializer, and right operand of `&&` or `||`.

use super::check::{Callee, SymId, TExpr, TExprKind, TStmt, TStmtKind, TypedUnit, Uplink};
use super::Pos;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopKind {
    Expr,
    CompoundEntry,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StopPoint {
    pub index: u32,
    pub src: Pos,
    pub kind: StopKind,
    /// Last symbol visible at the point.
    pub tail: Uplink,
    /// Function containing the point.
    pub func: SymId,
}

pub type StopPlan = Vec<StopPoint>;

pub fn plan_stopping_points(unit: &TypedUnit) -> StopPlan {
    let mut p = Planner { plan: Vec::new(), func: SymId(0) };
    for f in &unit.funcs {
        p.func = f.sym;
        p.push(f.lbrace, StopKind::CompoundEntry, f.entry_tail);
        for s in &f.body {
            p.stmt(s);
        }
    }
    p.plan
}

struct Planner {
    plan: StopPlan,
    func: SymId,
}

impl Planner {
    fn push(&mut self, src: Pos, kind: StopKind, tail: Uplink) {
        let index = self.plan.len() as u32;
        self.plan.push(StopPoint { index, src, kind, tail, func: self.func });
    }

    fn point(&mut self, e: &TExpr, tail: Uplink) {
        self.push(e.pos, StopKind::Expr, tail);
        self.expr(e, tail);
    }

    fn stmt(&mut self, s: &TStmt) {
        let tail = s.tail;
        match &s.kind {
            TStmtKind::Expr(e) => self.point(e, tail),
            TStmtKind::Empty => self.push(s.pos, StopKind::Expr, tail),
            TStmtKind::Block(items) => items.iter().for_each(|s| self.stmt(s)),
            TStmtKind::If(c, t, e) => {
                self.point(c, tail);
                self.stmt(t);
                if let Some(e) = e {
                    self.stmt(e);
                }
            }
            TStmtKind::While(c, body) => {
                self.point(c, tail);
                self.stmt(body);
            }
            TStmtKind::For(init, c, step, body) => {
                for e in [init, c, step].into_iter().flatten() {
                    self.point(e, tail);
                }
                self.stmt(body);
            }
            TStmtKind::Return(Some(e)) => self.point(e, tail),
            TStmtKind::Return(None) | TStmtKind::Break | TStmtKind::Continue => {}
            TStmtKind::LocalInit { assigns, .. } => {
                self.push(s.pos, StopKind::Expr, tail);
                for a in assigns {
                    self.expr(a, tail);
                }
            }
        }
    }

    /// Points nested inside an expression: right operands of `&&` and `||`.
    fn expr(&mut self, e: &TExpr, tail: Uplink) {
        match &e.kind {
            TExprKind::LogAnd(a, b) | TExprKind::LogOr(a, b) => {
                self.expr(a, tail);
                self.point(b, tail);
            }
            TExprKind::Int(_) | TExprKind::Float(_) | TExprKind::Str(_) | TExprKind::Var(_) => {}
            TExprKind::Deref(x)
            | TExprKind::AddrOf(x)
            | TExprKind::Convert(x)
            | TExprKind::Neg(x)
            | TExprKind::BitNot(x)
            | TExprKind::LNot(x)
            | TExprKind::Member { base: x, .. }
            | TExprKind::IncDec { lhs: x, .. } => self.expr(x, tail),
            TExprKind::Arith(_, a, b)
            | TExprKind::Compare(_, a, b)
            | TExprKind::PtrAdd { ptr: a, idx: b, .. }
            | TExprKind::PtrDiff { a, b, .. }
            | TExprKind::Assign(a, b)
            | TExprKind::CompoundAssign { lhs: a, rhs: b, .. } => {
                self.expr(a, tail);
                self.expr(b, tail);
            }
            TExprKind::Call { callee, args } => {
                if let Callee::Indirect(f) = callee {
                    self.expr(f, tail);
                }
                args.iter().for_each(|a| self.expr(a, tail));
            }
        }
    }
}
