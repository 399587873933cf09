//! Abstract syntax of contracts, preconditions and programs.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::money::Money;
use crate::names::{Name, Participant, RecVar, SecretName};

/// Source position. Two spans always compare equal so that structural
/// equality of syntax trees ignores where they came from.
#[derive(Clone, Copy, Debug, Default, Serialize, Deserialize)]
pub struct Span {
    pub line: u32,
    pub col: u32,
}

impl Span {
    pub fn new(line: u32, col: u32) -> Self {
        Self { line, col }
    }
}

impl PartialEq for Span {
    fn eq(&self, _: &Self) -> bool {
        true
    }
}

impl Eq for Span {}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
        }
    }

    pub fn precedence(self) -> u8 {
        match self {
            BinOp::Add | BinOp::Sub => 1,
            BinOp::Mul => 2,
        }
    }
}

/// Integer arithmetic over constants and equation parameters.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum StaticExpr {
    Const(i32),
    Var(String),
    Bin(BinOp, Box<StaticExpr>, Box<StaticExpr>),
}

impl StaticExpr {
    pub fn bin(op: BinOp, l: StaticExpr, r: StaticExpr) -> Self {
        StaticExpr::Bin(op, Box::new(l), Box::new(r))
    }

    pub fn var(name: &str) -> Self {
        StaticExpr::Var(name.to_owned())
    }

    pub fn as_const(&self) -> Option<i32> {
        match self {
            StaticExpr::Const(k) => Some(*k),
            _ => None,
        }
    }

    pub fn free_vars(&self, out: &mut BTreeSet<String>) {
        match self {
            StaticExpr::Const(_) => {}
            StaticExpr::Var(v) => {
                out.insert(v.clone());
            }
            StaticExpr::Bin(_, l, r) => {
                l.free_vars(out);
                r.free_vars(out);
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum DepositRef {
    /// A deposit name, fixed at stipulation time.
    Name(Name),
    /// A deposit variable, bound when a renegotiation is committed.
    Var(Name),
}

impl DepositRef {
    pub fn name(&self) -> &Name {
        match self {
            DepositRef::Name(n) | DepositRef::Var(n) => n,
        }
    }

    pub fn is_var(&self) -> bool {
        matches!(self, DepositRef::Var(_))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Atom {
    Deposit {
        owner: Participant,
        value: Money,
        dep: DepositRef,
        #[serde(skip)]
        span: Span,
    },
    Secret {
        owner: Participant,
        name: SecretName,
        #[serde(skip)]
        span: Span,
    },
}

impl Atom {
    pub fn deposit(owner: &str, value: Money, dep: DepositRef) -> Self {
        Atom::Deposit { owner: owner.into(), value, dep, span: Span::default() }
    }

    pub fn secret(owner: &str, name: &str) -> Self {
        Atom::Secret { owner: owner.into(), name: name.into(), span: Span::default() }
    }

    pub fn owner(&self) -> &Participant {
        match self {
            Atom::Deposit { owner, .. } | Atom::Secret { owner, .. } => owner,
        }
    }

    pub fn span(&self) -> Span {
        match self {
            Atom::Deposit { span, .. } | Atom::Secret { span, .. } => *span,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Precondition {
    pub atoms: Vec<Atom>,
}

impl Precondition {
    pub fn new(atoms: Vec<Atom>) -> Self {
        Self { atoms }
    }

    pub fn deposits(&self) -> impl Iterator<Item = (&Participant, Money, &DepositRef)> {
        self.atoms.iter().filter_map(|a| match a {
            Atom::Deposit { owner, value, dep, .. } => Some((owner, *value, dep)),
            Atom::Secret { .. } => None,
        })
    }

    pub fn secrets(&self) -> impl Iterator<Item = (&Participant, &SecretName)> {
        self.atoms.iter().filter_map(|a| match a {
            Atom::Secret { owner, name, .. } => Some((owner, name)),
            Atom::Deposit { .. } => None,
        })
    }

    /// Owners of deposit and secret atoms.
    pub fn participants(&self) -> BTreeSet<Participant> {
        self.atoms.iter().map(|a| a.owner().clone()).collect()
    }
}

/// Arithmetic inside predicates: static expressions extended with secrets.
///
/// Kept canonical by [`ArithTerm::add`]/[`ArithTerm::sub`]: a subtree free of
/// secrets is always a single `Static` node.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ArithTerm {
    Static(StaticExpr),
    Secret(SecretName),
    Add(Box<ArithTerm>, Box<ArithTerm>),
    Sub(Box<ArithTerm>, Box<ArithTerm>),
}

impl ArithTerm {
    pub fn konst(k: i32) -> Self {
        ArithTerm::Static(StaticExpr::Const(k))
    }

    pub fn secret(name: &str) -> Self {
        ArithTerm::Secret(name.into())
    }

    pub fn add(l: ArithTerm, r: ArithTerm) -> Self {
        match (l, r) {
            (ArithTerm::Static(a), ArithTerm::Static(b)) => {
                ArithTerm::Static(StaticExpr::bin(BinOp::Add, a, b))
            }
            (l, r) => ArithTerm::Add(Box::new(l), Box::new(r)),
        }
    }

    pub fn sub(l: ArithTerm, r: ArithTerm) -> Self {
        match (l, r) {
            (ArithTerm::Static(a), ArithTerm::Static(b)) => {
                ArithTerm::Static(StaticExpr::bin(BinOp::Sub, a, b))
            }
            (l, r) => ArithTerm::Sub(Box::new(l), Box::new(r)),
        }
    }

    pub fn secrets(&self, out: &mut BTreeSet<SecretName>) {
        match self {
            ArithTerm::Static(_) => {}
            ArithTerm::Secret(s) => {
                out.insert(s.clone());
            }
            ArithTerm::Add(l, r) | ArithTerm::Sub(l, r) => {
                l.secrets(out);
                r.secrets(out);
            }
        }
    }

    pub fn free_vars(&self, out: &mut BTreeSet<String>) {
        match self {
            ArithTerm::Static(e) => e.free_vars(out),
            ArithTerm::Secret(_) => {}
            ArithTerm::Add(l, r) | ArithTerm::Sub(l, r) => {
                l.free_vars(out);
                r.free_vars(out);
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Predicate {
    True,
    And(Box<Predicate>, Box<Predicate>),
    Not(Box<Predicate>),
    Eq(ArithTerm, ArithTerm),
    Lt(ArithTerm, ArithTerm),
}

impl Predicate {
    pub fn and(l: Predicate, r: Predicate) -> Self {
        Predicate::And(Box::new(l), Box::new(r))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(p: Predicate) -> Self {
        Predicate::Not(Box::new(p))
    }

    /// `l <= r`, encoded as `not(r < l)`.
    pub fn le(l: ArithTerm, r: ArithTerm) -> Self {
        Predicate::not(Predicate::Lt(r, l))
    }

    pub fn ne(l: ArithTerm, r: ArithTerm) -> Self {
        Predicate::not(Predicate::Eq(l, r))
    }

    pub fn secrets(&self, out: &mut BTreeSet<SecretName>) {
        match self {
            Predicate::True => {}
            Predicate::And(l, r) => {
                l.secrets(out);
                r.secrets(out);
            }
            Predicate::Not(p) => p.secrets(out),
            Predicate::Eq(l, r) | Predicate::Lt(l, r) => {
                l.secrets(out);
                r.secrets(out);
            }
        }
    }

    pub fn free_vars(&self, out: &mut BTreeSet<String>) {
        match self {
            Predicate::True => {}
            Predicate::And(l, r) => {
                l.free_vars(out);
                r.free_vars(out);
            }
            Predicate::Not(p) => p.free_vars(out),
            Predicate::Eq(l, r) | Predicate::Lt(l, r) => {
                l.free_vars(out);
                r.free_vars(out);
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitBranch {
    pub value: Money,
    pub contract: Contract,
}

/// The undecorated part of a guarded contract.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Action {
    /// Reveal the listed secrets, check the predicate, continue.
    Put { secrets: Vec<SecretName>, predicate: Predicate, continuation: Contract },
    Withdraw(Participant),
    Split(Vec<SplitBranch>),
    Renegotiate { var: RecVar, args: Vec<StaticExpr> },
}

/// A branch of a contract sum together with its decorations.
///
/// Decorations are kept in normal form: authorizers as a sorted set, and
/// deadlines sorted with all constant deadlines merged into their maximum.
/// Hence two branches that differ only in the order of their decorations
/// are structurally equal.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GuardedContract {
    pub auths: BTreeSet<Participant>,
    pub afters: Vec<StaticExpr>,
    pub action: Action,
}

impl GuardedContract {
    pub fn new(action: Action) -> Self {
        Self { auths: BTreeSet::new(), afters: Vec::new(), action }
    }

    pub fn withdraw(p: &str) -> Self {
        Self::new(Action::Withdraw(p.into()))
    }

    pub fn split(branches: Vec<(Money, Contract)>) -> Self {
        Self::new(Action::Split(
            branches.into_iter().map(|(value, contract)| SplitBranch { value, contract }).collect(),
        ))
    }

    pub fn put(secrets: &[&str], predicate: Predicate, continuation: Contract) -> Self {
        Self::new(Action::Put {
            secrets: secrets.iter().map(|s| SecretName::from(*s)).collect(),
            predicate,
            continuation,
        })
    }

    pub fn renegotiate(var: &str, args: Vec<StaticExpr>) -> Self {
        Self::new(Action::Renegotiate { var: var.into(), args })
    }

    pub fn with_auth(mut self, p: impl Into<Participant>) -> Self {
        self.auths.insert(p.into());
        self
    }

    pub fn with_after(mut self, deadline: StaticExpr) -> Self {
        self.afters.push(deadline);
        self.normalize_afters();
        self
    }

    pub fn normalize_afters(&mut self) {
        let mut max_const: Option<i32> = None;
        let mut symbolic = Vec::new();
        for e in self.afters.drain(..) {
            match e {
                StaticExpr::Const(k) => max_const = Some(max_const.map_or(k, |m| m.max(k))),
                other => symbolic.push(other),
            }
        }
        symbolic.sort();
        symbolic.dedup();
        self.afters = max_const.map(StaticExpr::Const).into_iter().chain(symbolic).collect();
    }

    /// The deadline when every `after` decoration is constant.
    pub fn deadline(&self) -> Option<i64> {
        self.afters.iter().map(|e| e.as_const().map(i64::from)).try_fold(None, |acc: Option<i64>, d| {
            d.map(|d| Some(acc.map_or(d, |a| a.max(d))))
        })?
    }
}

/// A sum of guarded contracts; the empty sum is the stuck contract `0`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Contract(pub Vec<GuardedContract>);

impl Contract {
    pub fn new(branches: Vec<GuardedContract>) -> Self {
        Contract(branches)
    }

    pub fn single(g: GuardedContract) -> Self {
        Contract(vec![g])
    }

    pub fn branches(&self) -> &[GuardedContract] {
        &self.0
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Participants named by withdraw actions and authorization decorations.
    pub fn participants(&self, out: &mut BTreeSet<Participant>) {
        for g in &self.0 {
            out.extend(g.auths.iter().cloned());
            match &g.action {
                Action::Put { continuation, .. } => continuation.participants(out),
                Action::Withdraw(p) => {
                    out.insert(p.clone());
                }
                Action::Split(bs) => bs.iter().for_each(|b| b.contract.participants(out)),
                Action::Renegotiate { .. } => {}
            }
        }
    }

    /// Secret names listed by `put` actions or mentioned in their predicates.
    pub fn secrets(&self, out: &mut BTreeSet<SecretName>) {
        for g in &self.0 {
            match &g.action {
                Action::Put { secrets, predicate, continuation } => {
                    out.extend(secrets.iter().cloned());
                    predicate.secrets(out);
                    continuation.secrets(out);
                }
                Action::Split(bs) => bs.iter().for_each(|b| b.contract.secrets(out)),
                Action::Withdraw(_) | Action::Renegotiate { .. } => {}
            }
        }
    }

    /// Every renegotiation call in the contract, depth first.
    pub fn calls(&self) -> Vec<(&RecVar, &[StaticExpr])> {
        let mut out = Vec::new();
        self.collect_calls(&mut out);
        out
    }

    fn collect_calls<'a>(&'a self, out: &mut Vec<(&'a RecVar, &'a [StaticExpr])>) {
        for g in &self.0 {
            match &g.action {
                Action::Put { continuation, .. } => continuation.collect_calls(out),
                Action::Split(bs) => bs.iter().for_each(|b| b.contract.collect_calls(out)),
                Action::Renegotiate { var, args } => out.push((var, args)),
                Action::Withdraw(_) => {}
            }
        }
    }

    /// Largest constant deadline in any branch, at any depth.
    pub fn deadlines(&self, out: &mut BTreeSet<i64>) {
        for g in &self.0 {
            if let Some(d) = g.deadline() {
                out.insert(d);
            }
            match &g.action {
                Action::Put { continuation, .. } => continuation.deadlines(out),
                Action::Split(bs) => bs.iter().for_each(|b| b.contract.deadlines(out)),
                _ => {}
            }
        }
    }
}

/// `{G}C`, optionally tagged with the active contract it renegotiates.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContractAdvertisement {
    pub precondition: Precondition,
    pub contract: Contract,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub origin: Option<Name>,
}

impl ContractAdvertisement {
    pub fn new(precondition: Precondition, contract: Contract) -> Self {
        Self { precondition, contract, origin: None }
    }

    /// Owners in the precondition together with participants named in the
    /// contract.
    pub fn participants(&self) -> BTreeSet<Participant> {
        let mut out = self.precondition.participants();
        self.contract.participants(&mut out);
        out
    }
}

/// `X(params) [if guard] = {G}C`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DefiningEquation {
    pub var: RecVar,
    pub params: Vec<String>,
    pub guard: Option<Predicate>,
    pub body: ContractAdvertisement,
    #[serde(skip)]
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParticipantDecl {
    pub name: Participant,
    pub honest: bool,
    #[serde(skip)]
    pub span: Span,
}

/// A deposit present in the initial configuration.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DepositDecl {
    pub owner: Participant,
    pub value: Money,
    pub name: Name,
    #[serde(skip)]
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Program {
    pub name: String,
    pub participants: Vec<ParticipantDecl>,
    pub deposits: Vec<DepositDecl>,
    pub equations: Vec<DefiningEquation>,
    pub main: ContractAdvertisement,
    #[serde(skip)]
    pub main_span: Span,
}

impl Program {
    pub fn new(name: &str, main: ContractAdvertisement) -> Self {
        Self {
            name: name.to_owned(),
            participants: Vec::new(),
            deposits: Vec::new(),
            equations: Vec::new(),
            main,
            main_span: Span::default(),
        }
    }

    /// Every participant mentioned anywhere in the program.
    pub fn all_participants(&self) -> BTreeSet<Participant> {
        let mut out: BTreeSet<Participant> =
            self.participants.iter().map(|d| d.name.clone()).collect();
        out.extend(self.deposits.iter().map(|d| d.owner.clone()));
        out.extend(self.main.participants());
        for eq in &self.equations {
            out.extend(eq.body.participants());
        }
        out
    }

    /// Participants not declared `dishonest`.
    pub fn honest(&self) -> BTreeSet<Participant> {
        let dishonest: BTreeSet<&Participant> =
            self.participants.iter().filter(|d| !d.honest).map(|d| &d.name).collect();
        self.all_participants().into_iter().filter(|p| !dishonest.contains(p)).collect()
    }

    pub fn equations_for(&self, var: &RecVar) -> impl Iterator<Item = &DefiningEquation> {
        let var = var.clone();
        self.equations.iter().filter(move |e| e.var == var)
    }

    /// Initial deposits: those declared explicitly plus every named deposit
    /// of the main precondition that is not declared.
    pub fn initial_deposits(&self) -> Vec<DepositDecl> {
        let mut out = self.deposits.clone();
        for (owner, value, dep) in self.main.precondition.deposits() {
            if let DepositRef::Name(n) = dep {
                if !out.iter().any(|d| &d.name == n) {
                    out.push(DepositDecl {
                        owner: owner.clone(),
                        value,
                        name: n.clone(),
                        span: Span::default(),
                    });
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decoration_order_is_immaterial() {
        let base = GuardedContract::withdraw("B");
        let a = base
            .clone()
            .with_after(StaticExpr::Const(5))
            .with_auth("A")
            .with_auth("B");
        let b = base.with_auth("B").with_after(StaticExpr::Const(3)).with_auth("A").with_after(StaticExpr::Const(5));
        assert_eq!(a, b);
        assert_eq!(a.deadline(), Some(5));
    }

    #[test]
    fn symbolic_deadlines_are_sorted_and_deduplicated() {
        let n = StaticExpr::var("n");
        let g1 = GuardedContract::withdraw("A").with_after(n.clone()).with_after(StaticExpr::Const(1));
        let g2 = GuardedContract::withdraw("A").with_after(StaticExpr::Const(1)).with_after(n.clone()).with_after(n);
        assert_eq!(g1, g2);
        assert_eq!(g1.deadline(), None);
    }

    #[test]
    fn arith_terms_stay_canonical() {
        let t = ArithTerm::add(ArithTerm::konst(1), ArithTerm::konst(2));
        assert!(matches!(t, ArithTerm::Static(_)));
        let u = ArithTerm::add(ArithTerm::secret("a"), ArithTerm::konst(2));
        assert!(matches!(u, ArithTerm::Add(_, _)));
    }

    #[test]
    fn spans_do_not_affect_equality() {
        let a = Atom::Secret { owner: "A".into(), name: "a".into(), span: Span::new(1, 1) };
        let b = Atom::Secret { owner: "A".into(), name: "a".into(), span: Span::new(9, 4) };
        assert_eq!(a, b);
    }
}
