//! Well-formedness checks on programs.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use crate::ast::{
    Action, Contract, ContractAdvertisement, DepositRef, Precondition, Program, Span,
};
use crate::instantiate::{closed_args, instantiate, select_equation, InstantiateError};
use crate::names::{NameSupply, Participant, RecVar};

/// How many calls are unfolded when checking participant sets across
/// recursive renegotiations.
pub const EXPLORATION_LIMIT: usize = 32;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Clause {
    DistinctDeposits,
    DistinctSecrets,
    SecretNotInPrecondition,
    PutSecrets,
    UndefinedRecursionVariable,
    RenegotiationArity,
    NoMatchingEquation,
    ParticipantMismatch,
    NoHonestParticipant,
    DuplicateParticipant,
    DuplicateInitialDeposit,
    InitialDepositMismatch,
    FreeVariable,
    DepositNameInEquation,
    DepositVariableInMain,
    StaticEvaluation,
}

impl Clause {
    pub fn code(self) -> &'static str {
        match self {
            Clause::DistinctDeposits => "distinct-deposits",
            Clause::DistinctSecrets => "distinct-secrets",
            Clause::SecretNotInPrecondition => "secret-in-precondition",
            Clause::PutSecrets => "put-secrets",
            Clause::UndefinedRecursionVariable => "defined-recursion-variable",
            Clause::RenegotiationArity => "renegotiation-arity",
            Clause::NoMatchingEquation => "matching-equation",
            Clause::ParticipantMismatch => "same-participants",
            Clause::NoHonestParticipant => "honest-participant",
            Clause::DuplicateParticipant => "unique-participants",
            Clause::DuplicateInitialDeposit => "unique-initial-deposits",
            Clause::InitialDepositMismatch => "initial-deposit-consistent",
            Clause::FreeVariable => "closed-expressions",
            Clause::DepositNameInEquation => "equation-deposit-variables",
            Clause::DepositVariableInMain => "main-deposit-names",
            Clause::StaticEvaluation => "static-evaluation",
        }
    }
}

impl fmt::Display for Clause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Diagnostic {
    pub span: Span,
    pub clause: Clause,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: [{}] {}", self.span, self.clause, self.message)
    }
}

struct Checker<'a> {
    program: &'a Program,
    out: Vec<Diagnostic>,
}

impl Checker<'_> {
    fn emit(&mut self, span: Span, clause: Clause, message: impl Into<String>) {
        self.out.push(Diagnostic { span, clause, message: message.into() });
    }

    fn precondition(&mut self, g: &Precondition, span: Span) {
        let mut deps = BTreeSet::new();
        let mut secrets = BTreeSet::new();
        for atom in &g.atoms {
            match atom {
                crate::ast::Atom::Deposit { dep, span: s, .. } => {
                    if !deps.insert(dep.clone()) {
                        self.emit(pick(*s, span), Clause::DistinctDeposits, format!("deposit `{}` occurs twice", dep.name()));
                    }
                }
                crate::ast::Atom::Secret { name, span: s, .. } => {
                    if !secrets.insert(name.clone()) {
                        self.emit(pick(*s, span), Clause::DistinctSecrets, format!("secret `{name}` occurs twice"));
                    }
                }
            }
        }
    }

    fn contract(&mut self, c: &Contract, adv: &ContractAdvertisement, params: Option<&[String]>, span: Span) {
        let declared: BTreeSet<_> = adv.precondition.secrets().map(|(_, n)| n.clone()).collect();
        for g in &c.0 {
            let mut vars = BTreeSet::new();
            for a in &g.afters {
                a.free_vars(&mut vars);
            }
            match &g.action {
                Action::Put { secrets, predicate, continuation } => {
                    let listed: BTreeSet<_> = secrets.iter().cloned().collect();
                    if listed.len() != secrets.len() {
                        self.emit(span, Clause::PutSecrets, "a reveal lists the same secret twice");
                    }
                    let mut used = BTreeSet::new();
                    predicate.secrets(&mut used);
                    for s in used.difference(&listed) {
                        self.emit(span, Clause::PutSecrets, format!("predicate mentions `{s}`, which the reveal does not list"));
                    }
                    for s in listed.difference(&declared) {
                        self.emit(span, Clause::SecretNotInPrecondition, format!("secret `{s}` is not committed in the precondition"));
                    }
                    predicate.free_vars(&mut vars);
                    self.contract(continuation, adv, params, span);
                }
                Action::Withdraw(_) => {}
                Action::Split(bs) => {
                    for b in bs {
                        self.contract(&b.contract, adv, params, span);
                    }
                }
                Action::Renegotiate { var, args } => {
                    for a in args {
                        a.free_vars(&mut vars);
                    }
                    let mut clauses = self.program.equations_for(var).peekable();
                    if clauses.peek().is_none() {
                        self.emit(span, Clause::UndefinedRecursionVariable, format!("`{var}` has no defining equation"));
                    }
                    for eq in clauses {
                        if eq.params.len() != args.len() {
                            self.emit(
                                span,
                                Clause::RenegotiationArity,
                                format!("`{var}` takes {} argument(s), called with {}", eq.params.len(), args.len()),
                            );
                            break;
                        }
                    }
                }
            }
            let bound: BTreeSet<String> = params.unwrap_or(&[]).iter().cloned().collect();
            for v in vars.difference(&bound) {
                self.emit(span, Clause::FreeVariable, format!("variable `{v}` is not bound"));
            }
        }
    }

    fn advertisement(&mut self, adv: &ContractAdvertisement, params: Option<&[String]>, span: Span) {
        self.precondition(&adv.precondition, span);
        self.contract(&adv.contract, adv, params, span);
        for (_, _, dep) in adv.precondition.deposits() {
            match (dep, params.is_some()) {
                (DepositRef::Name(n), true) => self.emit(
                    span,
                    Clause::DepositNameInEquation,
                    format!("equation bodies must use deposit variables, found `{n}`"),
                ),
                (DepositRef::Var(v), false) => self.emit(
                    span,
                    Clause::DepositVariableInMain,
                    format!("deposit variable `${v}` cannot be bound in the main contract"),
                ),
                _ => {}
            }
        }
    }

    fn declarations(&mut self) {
        let mut seen = BTreeSet::new();
        for d in &self.program.participants {
            if !seen.insert(d.name.clone()) {
                self.emit(d.span, Clause::DuplicateParticipant, format!("participant `{}` declared twice", d.name));
            }
        }
        let mut deps: BTreeMap<_, &crate::ast::DepositDecl> = BTreeMap::new();
        for d in &self.program.deposits {
            if deps.insert(d.name.clone(), d).is_some() {
                self.emit(d.span, Clause::DuplicateInitialDeposit, format!("deposit `{}` declared twice", d.name));
            }
        }
        for (owner, value, dep) in self.program.main.precondition.deposits() {
            if let Some(d) = deps.get(dep.name()) {
                if &d.owner != owner || d.value != value {
                    self.emit(
                        d.span,
                        Clause::InitialDepositMismatch,
                        format!("deposit `{}` is declared as {}!{} but required as {}!{}", d.name, d.owner, d.value, owner, value),
                    );
                }
            }
        }
        let honest = self.program.honest();
        let involved = self.program.main.participants();
        if honest.is_empty() || (!involved.is_empty() && involved.is_disjoint(&honest)) {
            self.emit(self.program.main_span, Clause::NoHonestParticipant, "no honest participant is involved");
        }
    }

    /// Unfolds renegotiation calls reachable from main and checks that each
    /// callee has the caller's participants.
    fn explore(&mut self) {
        let span = self.program.main_span;
        let mut queue: VecDeque<(BTreeSet<Participant>, RecVar, Vec<i32>)> = VecDeque::new();
        let mut seen = BTreeSet::new();
        let main_parts = self.program.main.participants();
        for (var, args) in self.program.main.contract.calls() {
            if let Ok(args) = closed_args(args) {
                queue.push_back((main_parts.clone(), var.clone(), args));
            }
        }
        let mut supply = NameSupply::new();
        let mut unfolded = 0;
        while let Some((caller, var, args)) = queue.pop_front() {
            if unfolded >= EXPLORATION_LIMIT || !seen.insert((var.clone(), args.clone())) {
                continue;
            }
            unfolded += 1;
            let eq = match select_equation(self.program, &var, &args) {
                Ok(eq) => eq,
                Err(InstantiateError::NoMatchingEquation { .. }) => {
                    self.emit(span, Clause::NoMatchingEquation, format!("no equation of `{var}` accepts {args:?}"));
                    continue;
                }
                Err(InstantiateError::Eval(e)) => {
                    self.emit(span, Clause::StaticEvaluation, format!("guard of `{var}`: {e}"));
                    continue;
                }
                // Undefined variables and arity errors are reported statically.
                Err(_) => continue,
            };
            let adv = match instantiate(eq, &args, &mut supply) {
                Ok(adv) => adv,
                Err(e) => {
                    self.emit(eq.span, Clause::StaticEvaluation, format!("`{var}{args:?}`: {e}"));
                    continue;
                }
            };
            let parts = adv.participants();
            if parts != caller {
                self.emit(
                    eq.span,
                    Clause::ParticipantMismatch,
                    format!("`{var}{args:?}` involves {}, its caller involves {}", show(&parts), show(&caller)),
                );
            }
            for (v, a) in adv.contract.calls() {
                if let Ok(a) = closed_args(a) {
                    queue.push_back((parts.clone(), v.clone(), a));
                }
            }
        }
    }
}

fn pick(inner: Span, outer: Span) -> Span {
    if inner.line == 0 {
        outer
    } else {
        inner
    }
}

fn show(ps: &BTreeSet<Participant>) -> String {
    let names: Vec<_> = ps.iter().map(|p| p.as_str()).collect();
    format!("{{{}}}", names.join(", "))
}

/// Returns every violated well-formedness clause; empty means well formed.
pub fn check_wellformed(program: &Program) -> Vec<Diagnostic> {
    let mut c = Checker { program, out: Vec::new() };
    c.declarations();
    c.advertisement(&program.main, None, program.main_span);
    for eq in &program.equations {
        c.advertisement(&eq.body, Some(&eq.params), eq.span);
        if let Some(g) = &eq.guard {
            let mut vars = BTreeSet::new();
            g.free_vars(&mut vars);
            let mut secrets = BTreeSet::new();
            g.secrets(&mut secrets);
            for v in vars.iter().filter(|v| !eq.params.contains(v)) {
                c.emit(eq.span, Clause::FreeVariable, format!("guard variable `{v}` is not a parameter"));
            }
            if !secrets.is_empty() {
                c.emit(eq.span, Clause::FreeVariable, "guards cannot mention secrets");
            }
        }
    }
    c.explore();
    c.out
}

/// Owners of the atoms of a precondition.
pub fn participants_of_precondition(g: &Precondition) -> BTreeSet<Participant> {
    g.participants()
}

/// Owners of the precondition atoms together with participants named in the
/// contract.
pub fn participants_of(adv: &ContractAdvertisement) -> BTreeSet<Participant> {
    adv.participants()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ast::{Atom, GuardedContract, StaticExpr};
    use crate::money::Money;

    fn btc(k: u64) -> Money {
        Money::from_btc(k).unwrap()
    }

    fn zcb() -> Program {
        Program::new(
            "ZCB",
            ContractAdvertisement::new(
                Precondition::new(vec![
                    Atom::deposit("A", btc(1), DepositRef::Name("x1".into())),
                    Atom::deposit("B", btc(2), DepositRef::Name("x2".into())),
                ]),
                Contract::single(GuardedContract::split(vec![
                    (btc(1), Contract::single(GuardedContract::withdraw("B"))),
                    (
                        btc(2),
                        Contract::single(GuardedContract::withdraw("A").with_after(StaticExpr::Const(2030))),
                    ),
                ])),
            ),
        )
    }

    #[test]
    fn zcb_is_wellformed() {
        assert_eq!(check_wellformed(&zcb()), vec![]);
    }

    #[test]
    fn duplicate_deposit_is_reported_once() {
        let mut p = zcb();
        p.main.precondition.atoms.push(Atom::deposit("A", btc(1), DepositRef::Name("x1".into())));
        let d = check_wellformed(&p);
        assert_eq!(d.len(), 1, "{d:?}");
        assert_eq!(d[0].clause, Clause::DistinctDeposits);
    }

    #[test]
    fn participants_examples() {
        let p = zcb();
        let want: BTreeSet<Participant> = ["A".into(), "B".into()].into();
        assert_eq!(participants_of_precondition(&p.main.precondition), want);
        assert!(participants_of_precondition(&Precondition::default()).is_empty());
    }

    #[test]
    fn undefined_call_is_reported() {
        let mut p = zcb();
        p.main.contract.0.push(GuardedContract::renegotiate("Y", vec![]));
        let d = check_wellformed(&p);
        assert!(d.iter().any(|d| d.clause == Clause::UndefinedRecursionVariable), "{d:?}");
    }
}
