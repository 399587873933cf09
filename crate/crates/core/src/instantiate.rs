//! Instantiation of defining equations and the call-matching relation.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::ast::{
    Action, Atom, Contract, ContractAdvertisement, DefiningEquation, DepositRef, GuardedContract,
    Precondition, Predicate, Program, SplitBranch, StaticExpr,
};
use crate::expr::{close_predicate, close_static, eval_predicate, EvalError, Env};
use crate::names::{Name, NameSupply, RecVar, SecretName};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum InstantiateError {
    #[error("`{var}` expects {expected} argument(s), got {got}")]
    ArityMismatch { var: RecVar, expected: usize, got: usize },
    #[error("no defining equation of `{var}` matches arguments {args:?}")]
    NoMatchingEquation { var: RecVar, args: Vec<i32> },
    #[error("`{0}` has no defining equation")]
    UndefinedVariable(RecVar),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

fn bind(eq: &DefiningEquation, args: &[i32]) -> Result<Env, InstantiateError> {
    if eq.params.len() != args.len() {
        return Err(InstantiateError::ArityMismatch {
            var: eq.var.clone(),
            expected: eq.params.len(),
            got: args.len(),
        });
    }
    Ok(eq.params.iter().cloned().zip(args.iter().copied()).collect())
}

/// Whether the guard of `eq` (if any) holds for `args`.
pub fn guard_holds(eq: &DefiningEquation, args: &[i32]) -> Result<bool, InstantiateError> {
    let env = bind(eq, args)?;
    match &eq.guard {
        None => Ok(true),
        Some(g) => Ok(eval_predicate(g, &env, &|_| None)?),
    }
}

/// The first clause of `var` whose guard accepts `args`.
pub fn select_equation<'a>(
    program: &'a Program,
    var: &RecVar,
    args: &[i32],
) -> Result<&'a DefiningEquation, InstantiateError> {
    let mut any = false;
    for eq in program.equations_for(var) {
        any = true;
        if guard_holds(eq, args)? {
            return Ok(eq);
        }
    }
    if any {
        Err(InstantiateError::NoMatchingEquation { var: var.clone(), args: args.to_vec() })
    } else {
        Err(InstantiateError::UndefinedVariable(var.clone()))
    }
}

#[derive(Default)]
struct Renaming {
    secrets: BTreeMap<SecretName, SecretName>,
    deposits: BTreeMap<Name, Name>,
}

impl Renaming {
    fn secret(&self, s: &SecretName) -> SecretName {
        self.secrets.get(s).cloned().unwrap_or_else(|| s.clone())
    }
}

fn rename_predicate(p: &Predicate, r: &Renaming) -> Predicate {
    use crate::ast::ArithTerm;
    fn arith(t: &ArithTerm, r: &Renaming) -> ArithTerm {
        match t {
            ArithTerm::Static(e) => ArithTerm::Static(e.clone()),
            ArithTerm::Secret(s) => ArithTerm::Secret(r.secret(s)),
            ArithTerm::Add(a, b) => ArithTerm::Add(Box::new(arith(a, r)), Box::new(arith(b, r))),
            ArithTerm::Sub(a, b) => ArithTerm::Sub(Box::new(arith(a, r)), Box::new(arith(b, r))),
        }
    }
    match p {
        Predicate::True => Predicate::True,
        Predicate::And(a, b) => Predicate::and(rename_predicate(a, r), rename_predicate(b, r)),
        Predicate::Not(a) => Predicate::not(rename_predicate(a, r)),
        Predicate::Eq(a, b) => Predicate::Eq(arith(a, r), arith(b, r)),
        Predicate::Lt(a, b) => Predicate::Lt(arith(a, r), arith(b, r)),
    }
}

/// Substitutes, evaluates and renames secrets throughout a contract.
fn transform(c: &Contract, env: &Env, r: &Renaming) -> Result<Contract, EvalError> {
    c.0.iter()
        .map(|g| {
            let action = match &g.action {
                Action::Put { secrets, predicate, continuation } => Action::Put {
                    secrets: secrets.iter().map(|s| r.secret(s)).collect(),
                    predicate: rename_predicate(&close_predicate(predicate, env)?, r),
                    continuation: transform(continuation, env, r)?,
                },
                Action::Withdraw(p) => Action::Withdraw(p.clone()),
                Action::Split(bs) => Action::Split(
                    bs.iter()
                        .map(|b| Ok(SplitBranch { value: b.value, contract: transform(&b.contract, env, r)? }))
                        .collect::<Result<_, EvalError>>()?,
                ),
                Action::Renegotiate { var, args } => Action::Renegotiate {
                    var: var.clone(),
                    args: args.iter().map(|a| close_static(a, env)).collect::<Result<_, _>>()?,
                },
            };
            let mut out = GuardedContract {
                auths: g.auths.clone(),
                afters: g.afters.iter().map(|a| close_static(a, env)).collect::<Result<_, _>>()?,
                action,
            };
            out.normalize_afters();
            Ok(out)
        })
        .collect::<Result<_, _>>()
        .map(Contract)
}

fn rename_precondition(g: &Precondition, r: &Renaming) -> Precondition {
    Precondition::new(
        g.atoms
            .iter()
            .map(|a| match a {
                Atom::Deposit { owner, value, dep, span } => Atom::Deposit {
                    owner: owner.clone(),
                    value: *value,
                    dep: match dep {
                        DepositRef::Var(v) => {
                            DepositRef::Var(r.deposits.get(v).cloned().unwrap_or_else(|| v.clone()))
                        }
                        DepositRef::Name(n) => DepositRef::Name(n.clone()),
                    },
                    span: *span,
                },
                Atom::Secret { owner, name, span } => {
                    Atom::Secret { owner: owner.clone(), name: r.secret(name), span: *span }
                }
            })
            .collect(),
    )
}

/// Instantiates `eq` at `args`: parameters are substituted, static
/// expressions evaluated, and secrets and deposit variables renamed to
/// fresh names from `fresh`.
pub fn instantiate(
    eq: &DefiningEquation,
    args: &[i32],
    fresh: &mut NameSupply,
) -> Result<ContractAdvertisement, InstantiateError> {
    let env = bind(eq, args)?;
    if !guard_holds(eq, args)? {
        return Err(InstantiateError::NoMatchingEquation { var: eq.var.clone(), args: args.to_vec() });
    }
    let mut r = Renaming::default();
    for atom in &eq.body.precondition.atoms {
        match atom {
            Atom::Secret { name, .. } => {
                let f = fresh.fresh_secret(name);
                r.secrets.insert(name.clone(), f);
            }
            Atom::Deposit { dep: DepositRef::Var(v), .. } => {
                let f = fresh.fresh_name(v.as_str());
                r.deposits.insert(v.clone(), f);
            }
            Atom::Deposit { .. } => {}
        }
    }
    Ok(ContractAdvertisement {
        precondition: rename_precondition(&eq.body.precondition, &r),
        contract: transform(&eq.body.contract, &env, &r)?,
        origin: None,
    })
}

/// Renames bound secret names and deposit variables positionally, so that
/// two advertisements are α-equivalent iff their canonical forms are equal.
pub fn canonical_form(adv: &ContractAdvertisement) -> ContractAdvertisement {
    let mut r = Renaming::default();
    for atom in &adv.precondition.atoms {
        match atom {
            Atom::Secret { name, .. } => {
                let k = r.secrets.len();
                r.secrets.entry(name.clone()).or_insert_with(|| SecretName::new(format!("#s{k}")));
            }
            Atom::Deposit { dep: DepositRef::Var(v), .. } => {
                let k = r.deposits.len();
                r.deposits.entry(v.clone()).or_insert_with(|| Name::new(format!("#d{k}")));
            }
            Atom::Deposit { .. } => {}
        }
    }
    let contract = transform(&adv.contract, &Env::new(), &r).unwrap_or_else(|_| {
        // Open contracts cannot be closed under an empty environment; rename
        // secrets only.
        rename_open(&adv.contract, &r)
    });
    ContractAdvertisement {
        precondition: rename_precondition(&adv.precondition, &r),
        contract,
        origin: None,
    }
}

fn rename_open(c: &Contract, r: &Renaming) -> Contract {
    Contract(
        c.0.iter()
            .map(|g| GuardedContract {
                auths: g.auths.clone(),
                afters: g.afters.clone(),
                action: match &g.action {
                    Action::Put { secrets, predicate, continuation } => Action::Put {
                        secrets: secrets.iter().map(|s| r.secret(s)).collect(),
                        predicate: rename_predicate(predicate, r),
                        continuation: rename_open(continuation, r),
                    },
                    Action::Split(bs) => Action::Split(
                        bs.iter()
                            .map(|b| SplitBranch { value: b.value, contract: rename_open(&b.contract, r) })
                            .collect(),
                    ),
                    other => other.clone(),
                },
            })
            .collect(),
    )
}

/// α-equivalence up to renaming of secrets and deposit variables.
pub fn alpha_equivalent(a: &ContractAdvertisement, b: &ContractAdvertisement) -> bool {
    canonical_form(a) == canonical_form(b)
}

/// Whether `adv` is, up to α-conversion, the instantiation of `var` at `args`.
pub fn matches_call(program: &Program, adv: &ContractAdvertisement, var: &RecVar, args: &[i32]) -> bool {
    let Ok(eq) = select_equation(program, var, args) else {
        return false;
    };
    let mut scratch = NameSupply::new();
    match instantiate(eq, args, &mut scratch) {
        Ok(inst) => alpha_equivalent(adv, &inst),
        Err(_) => false,
    }
}

/// Evaluates renegotiation arguments; they must already be closed.
pub fn closed_args(args: &[StaticExpr]) -> Result<Vec<i32>, EvalError> {
    args.iter().map(|a| crate::expr::eval_static(a, &Env::new())).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ast::{ArithTerm, BinOp};
    use crate::money::Money;

    fn btc(k: u64) -> Money {
        Money::from_btc(k).unwrap()
    }

    /// `X(n) = {A#a | B!1@$x} after 3*n+1 : reveal a if a = n . withdraw A`
    fn sample_eq() -> DefiningEquation {
        let n = StaticExpr::var("n");
        let deadline = StaticExpr::bin(BinOp::Add, StaticExpr::bin(BinOp::Mul, StaticExpr::Const(3), n.clone()), StaticExpr::Const(1));
        let body = Contract::single(
            GuardedContract::put(
                &["a"],
                Predicate::Eq(ArithTerm::secret("a"), ArithTerm::Static(n)),
                Contract::single(GuardedContract::withdraw("A")),
            )
            .with_after(deadline),
        );
        DefiningEquation {
            var: "X".into(),
            params: vec!["n".into()],
            guard: None,
            body: ContractAdvertisement::new(
                Precondition::new(vec![
                    Atom::secret("A", "a"),
                    Atom::deposit("B", btc(1), DepositRef::Var("x".into())),
                ]),
                body,
            ),
            span: Default::default(),
        }
    }

    fn program(eq: DefiningEquation) -> Program {
        let mut p = Program::new(
            "P",
            ContractAdvertisement::new(Precondition::default(), Contract::default()),
        );
        p.equations.push(eq);
        p
    }

    #[test]
    fn substitutes_evaluates_and_renames() {
        let mut s = NameSupply::new();
        let adv = instantiate(&sample_eq(), &[2], &mut s).unwrap();
        let g = &adv.contract.0[0];
        assert_eq!(g.afters, vec![StaticExpr::Const(7)]);
        let secrets: Vec<_> = adv.precondition.secrets().map(|(_, n)| n.as_str().to_owned()).collect();
        assert_eq!(secrets, vec!["a#0"]);
        let deps: Vec<_> = adv.precondition.deposits().map(|(_, _, d)| d.clone()).collect();
        assert_eq!(deps, vec![DepositRef::Var("x#1".into())]);
        match &g.action {
            Action::Put { secrets, predicate, .. } => {
                assert_eq!(secrets, &vec![SecretName::from("a#0")]);
                assert_eq!(
                    predicate,
                    &Predicate::Eq(ArithTerm::secret("a#0"), ArithTerm::konst(2))
                );
            }
            _ => panic!("expected put"),
        }
    }

    #[test]
    fn two_instantiations_are_alpha_equivalent() {
        let mut s = NameSupply::new();
        let a = instantiate(&sample_eq(), &[1], &mut s).unwrap();
        let b = instantiate(&sample_eq(), &[1], &mut s).unwrap();
        assert_ne!(a, b);
        assert!(alpha_equivalent(&a, &b));
    }

    #[test]
    fn matches_call_examples() {
        let p = program(sample_eq());
        let mut s = NameSupply::starting_at(40);
        let a = instantiate(&p.equations[0], &[1], &mut s).unwrap();
        assert!(matches_call(&p, &a, &"X".into(), &[1]));
        assert!(!matches_call(&p, &a, &"X".into(), &[2]));
        assert!(!matches_call(&p, &a, &"Y".into(), &[1]));
    }

    #[test]
    fn arity_and_guard_errors() {
        let mut eq = sample_eq();
        let mut s = NameSupply::new();
        assert!(matches!(
            instantiate(&eq, &[], &mut s),
            Err(InstantiateError::ArityMismatch { expected: 1, got: 0, .. })
        ));
        eq.guard = Some(Predicate::Lt(ArithTerm::Static(StaticExpr::var("n")), ArithTerm::konst(5)));
        assert!(instantiate(&eq, &[4], &mut s).is_ok());
        assert!(matches!(
            instantiate(&eq, &[5], &mut s),
            Err(InstantiateError::NoMatchingEquation { .. })
        ));
    }

    #[test]
    fn first_matching_clause_wins() {
        let mut low = sample_eq();
        low.guard = Some(Predicate::Lt(ArithTerm::Static(StaticExpr::var("n")), ArithTerm::konst(10)));
        let mut high = sample_eq();
        high.body.contract = Contract::single(GuardedContract::withdraw("B"));
        let mut p = program(low);
        p.equations.push(high);
        assert!(select_equation(&p, &"X".into(), &[3]).unwrap().guard.is_some());
        assert!(select_equation(&p, &"X".into(), &[10]).unwrap().guard.is_none());
    }
}
