//! Evaluation of static expressions and predicates.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::ast::{ArithTerm, BinOp, Predicate, StaticExpr};
use crate::names::SecretName;

pub type Env = BTreeMap<String, i32>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("unbound variable `{0}`")]
    UnboundVariable(String),
    #[error("arithmetic overflow outside the 32-bit signed range")]
    Overflow,
    #[error("secret `{0}` has not been revealed")]
    UnrevealedSecret(SecretName),
}

fn apply(op: BinOp, l: i32, r: i32) -> Result<i32, EvalError> {
    match op {
        BinOp::Add => l.checked_add(r),
        BinOp::Sub => l.checked_sub(r),
        BinOp::Mul => l.checked_mul(r),
    }
    .ok_or(EvalError::Overflow)
}

pub fn eval_static(e: &StaticExpr, env: &Env) -> Result<i32, EvalError> {
    match e {
        StaticExpr::Const(k) => Ok(*k),
        StaticExpr::Var(v) => env.get(v).copied().ok_or_else(|| EvalError::UnboundVariable(v.clone())),
        StaticExpr::Bin(op, l, r) => apply(*op, eval_static(l, env)?, eval_static(r, env)?),
    }
}

/// Evaluates an arithmetic term; secrets are looked up through `secret`.
pub fn eval_arith(
    t: &ArithTerm,
    env: &Env,
    secret: &dyn Fn(&SecretName) -> Option<i64>,
) -> Result<i32, EvalError> {
    match t {
        ArithTerm::Static(e) => eval_static(e, env),
        ArithTerm::Secret(s) => {
            let v = secret(s).ok_or_else(|| EvalError::UnrevealedSecret(s.clone()))?;
            i32::try_from(v).map_err(|_| EvalError::Overflow)
        }
        ArithTerm::Add(l, r) => apply(BinOp::Add, eval_arith(l, env, secret)?, eval_arith(r, env, secret)?),
        ArithTerm::Sub(l, r) => apply(BinOp::Sub, eval_arith(l, env, secret)?, eval_arith(r, env, secret)?),
    }
}

pub fn eval_predicate(
    p: &Predicate,
    env: &Env,
    secret: &dyn Fn(&SecretName) -> Option<i64>,
) -> Result<bool, EvalError> {
    Ok(match p {
        Predicate::True => true,
        Predicate::And(l, r) => eval_predicate(l, env, secret)? && eval_predicate(r, env, secret)?,
        Predicate::Not(q) => !eval_predicate(q, env, secret)?,
        Predicate::Eq(l, r) => eval_arith(l, env, secret)? == eval_arith(r, env, secret)?,
        Predicate::Lt(l, r) => eval_arith(l, env, secret)? < eval_arith(r, env, secret)?,
    })
}

/// Replaces every static subexpression by its value.
pub fn close_static(e: &StaticExpr, env: &Env) -> Result<StaticExpr, EvalError> {
    eval_static(e, env).map(StaticExpr::Const)
}

pub fn close_arith(t: &ArithTerm, env: &Env) -> Result<ArithTerm, EvalError> {
    Ok(match t {
        ArithTerm::Static(e) => ArithTerm::Static(close_static(e, env)?),
        ArithTerm::Secret(s) => ArithTerm::Secret(s.clone()),
        ArithTerm::Add(l, r) => ArithTerm::add(close_arith(l, env)?, close_arith(r, env)?),
        ArithTerm::Sub(l, r) => ArithTerm::sub(close_arith(l, env)?, close_arith(r, env)?),
    })
}

pub fn close_predicate(p: &Predicate, env: &Env) -> Result<Predicate, EvalError> {
    Ok(match p {
        Predicate::True => Predicate::True,
        Predicate::And(l, r) => Predicate::and(close_predicate(l, env)?, close_predicate(r, env)?),
        Predicate::Not(q) => Predicate::not(close_predicate(q, env)?),
        Predicate::Eq(l, r) => Predicate::Eq(close_arith(l, env)?, close_arith(r, env)?),
        Predicate::Lt(l, r) => Predicate::Lt(close_arith(l, env)?, close_arith(r, env)?),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(k: i32) -> StaticExpr {
        StaticExpr::Const(k)
    }

    #[test]
    fn examples() {
        let n = StaticExpr::var("n");
        let e = StaticExpr::bin(BinOp::Add, StaticExpr::bin(BinOp::Mul, c(3), n.clone()), c(2));
        let env: Env = [("n".to_owned(), 1)].into();
        assert_eq!(eval_static(&e, &env), Ok(5));
        let e = StaticExpr::bin(BinOp::Add, c(2021), n);
        let env: Env = [("n".to_owned(), 3)].into();
        assert_eq!(eval_static(&e, &env), Ok(2024));
    }

    #[test]
    fn repeated_addition_overflows() {
        let step = c(1 << 24);
        let mut e = c(0);
        for _ in 0..127 {
            e = StaticExpr::bin(BinOp::Add, e, step.clone());
        }
        assert_eq!(eval_static(&e, &Env::new()), Ok(127 << 24));
        e = StaticExpr::bin(BinOp::Add, e, step);
        assert_eq!(eval_static(&e, &Env::new()), Err(EvalError::Overflow));
    }

    #[test]
    fn unbound_variable() {
        assert_eq!(
            eval_static(&StaticExpr::var("m"), &Env::new()),
            Err(EvalError::UnboundVariable("m".into()))
        );
    }

    #[test]
    fn predicates_over_secrets() {
        let p = Predicate::Eq(ArithTerm::secret("a"), ArithTerm::secret("b"));
        let same = |_: &SecretName| Some(1);
        assert_eq!(eval_predicate(&p, &Env::new(), &same), Ok(true));
        let differ = |s: &SecretName| Some(if s.as_str() == "a" { 1 } else { 0 });
        assert_eq!(eval_predicate(&p, &Env::new(), &differ), Ok(false));
        let missing = |_: &SecretName| None;
        assert!(eval_predicate(&p, &Env::new(), &missing).is_err());
    }

    // Oracle: evaluation in i128 with an explicit range check at every node.
    fn oracle(e: &StaticExpr) -> Option<i128> {
        match e {
            StaticExpr::Const(k) => Some(i128::from(*k)),
            StaticExpr::Var(_) => None,
            StaticExpr::Bin(op, l, r) => {
                let (l, r) = (oracle(l)?, oracle(r)?);
                let v = match op {
                    BinOp::Add => l + r,
                    BinOp::Sub => l - r,
                    BinOp::Mul => l * r,
                };
                (i128::from(i32::MIN)..=i128::from(i32::MAX)).contains(&v).then_some(v)
            }
        }
    }

    fn arb_expr() -> impl Strategy<Value = StaticExpr> {
        let leaf = prop_oneof![
            (-100i32..100).prop_map(StaticExpr::Const),
            any::<i32>().prop_map(StaticExpr::Const),
        ];
        leaf.prop_recursive(6, 40, 2, |inner| {
            (prop_oneof![Just(BinOp::Add), Just(BinOp::Sub), Just(BinOp::Mul)], inner.clone(), inner)
                .prop_map(|(op, l, r)| StaticExpr::bin(op, l, r))
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]
        #[test]
        fn agrees_with_wide_oracle(e in arb_expr()) {
            match (eval_static(&e, &Env::new()), oracle(&e)) {
                (Ok(v), Some(w)) => prop_assert_eq!(i128::from(v), w),
                (Err(EvalError::Overflow), None) => {}
                (got, want) => prop_assert!(false, "got {:?}, oracle {:?}", got, want),
            }
        }
    }
}
