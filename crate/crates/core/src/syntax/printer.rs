use std::fmt::Write;

use super::ast::*;

const INDENT: &str = "    ";
const UNARY_PREC: u8 = 7;
const POSTFIX_PREC: u8 = 8;

/// Canonical source form. Members are emitted in the order state vars,
/// constructor, functions, fallback; contracts are separated by a blank
/// line.
pub fn pretty_print(p: &Program) -> String {
    let mut out = String::new();
    for (i, c) in p.contracts.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        print_contract(&mut out, c);
    }
    out
}

fn print_contract(out: &mut String, c: &ContractDecl) {
    write!(out, "contract {}", c.name).unwrap();
    if let Some(parent) = &c.parent {
        write!(out, " is {parent}").unwrap();
    }
    out.push_str(" {\n");
    for v in &c.state_vars {
        writeln!(out, "{INDENT}{} {};", v.ty, v.name).unwrap();
    }
    if let Some(ctor) = &c.ctor {
        write!(out, "{INDENT}constructor({})", params(&ctor.params)).unwrap();
        if ctor.payable {
            out.push_str(" payable");
        }
        print_block(out, &ctor.body, 1);
        out.push('\n');
    }
    for f in &c.functions {
        write!(out, "{INDENT}function {}({})", f.name, params(&f.params)).unwrap();
        match &f.caller {
            CallerAnnotation::Default => {}
            CallerAnnotation::Payback => out.push_str(" payback"),
            CallerAnnotation::Named(n) => write!(out, " <{n}>").unwrap(),
        }
        write!(out, " {}", f.visibility).unwrap();
        if f.payable {
            out.push_str(" payable");
        }
        if let Some(ret) = &f.returns {
            write!(out, " returns ({ret})").unwrap();
        }
        print_block(out, &f.body, 1);
        out.push('\n');
    }
    if let Some(fb) = &c.fallback {
        write!(out, "{INDENT}function() external payable").unwrap();
        print_block(out, &fb.body, 1);
        out.push('\n');
    }
    out.push_str("}\n");
}

fn params(ps: &[Param]) -> String {
    ps.iter().map(|p| format!("{} {}", p.ty, p.name)).collect::<Vec<_>>().join(", ")
}

/// Prints ` {`, the statements, and the closing brace at `depth`, without a
/// trailing newline.
fn print_block(out: &mut String, block: &Block, depth: usize) {
    out.push_str(" {\n");
    for s in block {
        print_stmt(out, s, depth + 1);
    }
    out.push_str(&INDENT.repeat(depth));
    out.push('}');
}

fn print_stmt(out: &mut String, s: &Stmt, depth: usize) {
    out.push_str(&INDENT.repeat(depth));
    match &s.kind {
        StmtKind::Local { ty, name, init } => writeln!(out, "{ty} {name} = {};", expr_to_string(init)).unwrap(),
        StmtKind::Assign { name, value } => writeln!(out, "{name} = {};", expr_to_string(value)).unwrap(),
        StmtKind::Expr(e) => writeln!(out, "{};", expr_to_string(e)).unwrap(),
        StmtKind::Return(None) => out.push_str("return;\n"),
        StmtKind::Return(Some(e)) => writeln!(out, "return {};", expr_to_string(e)).unwrap(),
        StmtKind::Require(e) => writeln!(out, "require({});", expr_to_string(e)).unwrap(),
        StmtKind::If { cond, then_block, else_block } => {
            write!(out, "if ({})", expr_to_string(cond)).unwrap();
            print_block(out, then_block, depth);
            if let Some(b) = else_block {
                out.push_str(" else");
                print_block(out, b, depth);
            }
            out.push('\n');
        }
    }
}

pub fn expr_to_string(e: &Expr) -> String {
    let mut out = String::new();
    print_expr(&mut out, e, 0);
    out
}

fn print_expr(out: &mut String, e: &Expr, ctx: u8) {
    match &e.kind {
        ExprKind::IntLit(v) => write!(out, "{v}").unwrap(),
        ExprKind::BoolLit(b) => write!(out, "{b}").unwrap(),
        ExprKind::AddrLit(a) => write!(out, "{a}").unwrap(),
        ExprKind::Var(n) => out.push_str(n),
        ExprKind::This => out.push_str("this"),
        ExprKind::MsgSender => out.push_str("msg.sender"),
        ExprKind::MsgValue => out.push_str("msg.value"),
        ExprKind::Call { receiver, function, args } => {
            print_expr(out, receiver, POSTFIX_PREC);
            write!(out, ".{function}(").unwrap();
            for (i, a) in args.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                print_expr(out, a, 0);
            }
            out.push(')');
        }
        ExprKind::Transfer { receiver, amount } => {
            print_expr(out, receiver, POSTFIX_PREC);
            out.push_str(".transfer(");
            print_expr(out, amount, 0);
            out.push(')');
        }
        ExprKind::Balance(inner) => {
            print_expr(out, inner, POSTFIX_PREC);
            out.push_str(".balance");
        }
        ExprKind::Cast { target, operand } => {
            write!(out, "{target}(").unwrap();
            print_expr(out, operand, 0);
            out.push(')');
        }
        ExprKind::Binary { op, lhs, rhs } => {
            let prec = op.precedence();
            let parens = prec < ctx;
            if parens {
                out.push('(');
            }
            print_expr(out, lhs, prec);
            write!(out, " {} ", op.symbol()).unwrap();
            print_expr(out, rhs, prec + 1);
            if parens {
                out.push(')');
            }
        }
        ExprKind::Not(inner) => {
            let parens = UNARY_PREC < ctx;
            if parens {
                out.push('(');
            }
            out.push('!');
            print_expr(out, inner, UNARY_PREC);
            if parens {
                out.push(')');
            }
        }
    }
}
