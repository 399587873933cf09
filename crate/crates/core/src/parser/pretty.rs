use std::fmt::Write;

use crate::ast::{
    Action, ArithTerm, Atom, Contract, ContractAdvertisement, DepositRef, GuardedContract,
    Precondition, Predicate, Program, StaticExpr,
};

const ATOMIC: u8 = 3;

fn pad(out: &mut String, ind: usize) {
    for _ in 0..ind {
        out.push_str("  ");
    }
}

fn static_prec(e: &StaticExpr) -> u8 {
    match e {
        StaticExpr::Bin(op, _, _) => op.precedence(),
        _ => ATOMIC,
    }
}

fn write_static(out: &mut String, e: &StaticExpr, min: u8) {
    let prec = static_prec(e);
    if prec < min {
        out.push('(');
    }
    match e {
        StaticExpr::Const(k) => write!(out, "{k}").unwrap(),
        StaticExpr::Var(v) => out.push_str(v),
        StaticExpr::Bin(op, l, r) => {
            write_static(out, l, prec);
            write!(out, " {} ", op.symbol()).unwrap();
            write_static(out, r, prec + 1);
        }
    }
    if prec < min {
        out.push(')');
    }
}

pub fn pretty_static(e: &StaticExpr) -> String {
    let mut s = String::new();
    write_static(&mut s, e, 0);
    s
}

fn arith_prec(t: &ArithTerm) -> u8 {
    match t {
        ArithTerm::Static(e) => static_prec(e),
        ArithTerm::Secret(_) => ATOMIC,
        ArithTerm::Add(..) | ArithTerm::Sub(..) => 1,
    }
}

fn write_arith(out: &mut String, t: &ArithTerm, min: u8) {
    match t {
        ArithTerm::Static(e) => write_static(out, e, min),
        ArithTerm::Secret(s) => out.push_str(s.as_str()),
        ArithTerm::Add(l, r) | ArithTerm::Sub(l, r) => {
            let prec = arith_prec(t);
            if prec < min {
                out.push('(');
            }
            write_arith(out, l, prec);
            out.push_str(if matches!(t, ArithTerm::Add(..)) { " + " } else { " - " });
            write_arith(out, r, prec + 1);
            if prec < min {
                out.push(')');
            }
        }
    }
}

fn write_pred(out: &mut String, p: &Predicate, min: u8) {
    match p {
        Predicate::True => out.push_str("true"),
        Predicate::And(l, r) => {
            if min > 1 {
                out.push('(');
            }
            write_pred(out, l, 1);
            out.push_str(" && ");
            write_pred(out, r, 2);
            if min > 1 {
                out.push(')');
            }
        }
        Predicate::Not(q) => match q.as_ref() {
            Predicate::Eq(l, r) => compare(out, l, "!=", r),
            Predicate::Lt(l, r) => compare(out, r, "<=", l),
            other => {
                out.push('!');
                write_pred(out, other, ATOMIC);
            }
        },
        Predicate::Eq(l, r) => compare(out, l, "=", r),
        Predicate::Lt(l, r) => compare(out, l, "<", r),
    }
}

fn compare(out: &mut String, l: &ArithTerm, op: &str, r: &ArithTerm) {
    write_arith(out, l, 0);
    write!(out, " {op} ").unwrap();
    write_arith(out, r, 0);
}

pub fn pretty_predicate(p: &Predicate) -> String {
    let mut s = String::new();
    write_pred(&mut s, p, 0);
    s
}

fn write_contract(out: &mut String, c: &Contract, ind: usize) {
    match c.0.as_slice() {
        [] => out.push('0'),
        [g] => write_guarded(out, g, ind),
        [first, rest @ ..] => {
            write_guarded(out, first, ind);
            for g in rest {
                out.push('\n');
                pad(out, ind);
                out.push_str("+ ");
                write_guarded(out, g, ind + 1);
            }
        }
    }
}

fn write_guarded(out: &mut String, g: &GuardedContract, ind: usize) {
    for a in &g.auths {
        write!(out, "{a} : ").unwrap();
    }
    for t in &g.afters {
        out.push_str("after ");
        write_static(out, t, 0);
        out.push_str(" : ");
    }
    match &g.action {
        Action::Withdraw(p) => write!(out, "withdraw {p}").unwrap(),
        Action::Split(bs) => {
            out.push_str("split(");
            for (j, b) in bs.iter().enumerate() {
                out.push('\n');
                pad(out, ind + 1);
                out.push_str(if j == 0 { "  " } else { "| " });
                write!(out, "{} -> ", b.value).unwrap();
                write_contract(out, &b.contract, ind + 3);
            }
            out.push('\n');
            pad(out, ind);
            out.push(')');
        }
        Action::Put { secrets, predicate, continuation } => {
            out.push_str("reveal");
            for s in secrets {
                write!(out, " {s}").unwrap();
            }
            if *predicate != Predicate::True {
                out.push_str(" if ");
                write_pred(out, predicate, 0);
            }
            out.push_str(" . ");
            match continuation.0.len() {
                0 | 1 => write_contract(out, continuation, ind),
                _ => {
                    out.push_str("(\n");
                    pad(out, ind + 1);
                    write_contract(out, continuation, ind + 1);
                    out.push('\n');
                    pad(out, ind);
                    out.push(')');
                }
            }
        }
        Action::Renegotiate { var, args } => {
            write!(out, "*{var}(").unwrap();
            for (i, a) in args.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                write_static(out, a, 0);
            }
            out.push(')');
        }
    }
}

pub fn pretty_contract(c: &Contract) -> String {
    let mut s = String::new();
    write_contract(&mut s, c, 0);
    s
}

fn write_precondition(out: &mut String, g: &Precondition) {
    out.push_str("pre");
    for (i, a) in g.atoms.iter().enumerate() {
        out.push_str(if i == 0 { " " } else { " | " });
        match a {
            Atom::Deposit { owner, value, dep, .. } => {
                write!(out, "{owner}!{value}@").unwrap();
                match dep {
                    DepositRef::Name(n) => write!(out, "{n}").unwrap(),
                    DepositRef::Var(v) => write!(out, "${v}").unwrap(),
                }
            }
            Atom::Secret { owner, name, .. } => write!(out, "{owner}#{name}").unwrap(),
        }
    }
    out.push(';');
}

fn write_body(out: &mut String, adv: &ContractAdvertisement) {
    out.push_str("{\n  ");
    write_precondition(out, &adv.precondition);
    out.push_str("\n  ");
    write_contract(out, &adv.contract, 1);
    out.push_str("\n}");
}

pub fn pretty_advertisement(adv: &ContractAdvertisement) -> String {
    let mut s = String::new();
    write_body(&mut s, adv);
    s
}

pub fn pretty(p: &Program) -> String {
    let mut out = String::new();
    for d in &p.participants {
        write!(out, "participant {}{};\n", d.name, if d.honest { "" } else { " dishonest" }).unwrap();
    }
    for d in &p.deposits {
        write!(out, "deposit {} {} @ {};\n", d.owner, d.value, d.name).unwrap();
    }
    if !p.participants.is_empty() || !p.deposits.is_empty() {
        out.push('\n');
    }
    for eq in &p.equations {
        write!(out, "let {}({})", eq.var, eq.params.join(", ")).unwrap();
        if let Some(g) = &eq.guard {
            out.push_str(" if ");
            write_pred(&mut out, g, 0);
        }
        out.push_str(" = ");
        write_body(&mut out, &eq.body);
        out.push_str("\n\n");
    }
    write!(out, "contract {} ", p.name).unwrap();
    write_body(&mut out, &p.main);
    out.push('\n');
    out
}
