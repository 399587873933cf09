//! Premises and effects of every move. `effect` only reads the
//! configuration; `apply` removes the consumed terms and adds the produced
//! ones, so every rule leaves the rest of the configuration untouched.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::config::{AuthAction, Call, Configuration, Term};
use super::{Move, Semantics, SemanticsError};
use crate::ast::{Action, ContractAdvertisement, DepositRef, GuardedContract};
use crate::expr::{eval_predicate, Env};
use crate::instantiate::{closed_args, instantiate, matches_call, select_equation};
use crate::money::Money;
use crate::names::{Name, NameSupply, Participant, SecretName};

/// What a move does to a configuration.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transition {
    pub consumed: Vec<Term>,
    pub produced: Vec<Term>,
    /// Names drawn from the supply, in order.
    pub fresh: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
    #[serde(default, skip_serializing_if = "is_zero")]
    pub delay: u64,
}

fn is_zero(d: &u64) -> bool {
    *d == 0
}

macro_rules! ensure {
    ($cond:expr, $rule:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(SemanticsError::NotEnabled { rule: $rule, reason: format!($($fmt)+) });
        }
    };
}

struct Fresh<'a> {
    supply: &'a mut NameSupply,
    drawn: Vec<String>,
}

impl Fresh<'_> {
    fn name(&mut self, base: &str) -> Name {
        let n = self.supply.fresh_name(base);
        self.drawn.push(n.as_str().to_owned());
        n
    }
}

fn auth(by: &Participant, action: AuthAction) -> Term {
    Term::Authorization { by: by.clone(), action }
}

fn all_committed(c: &Configuration, adv_id: &Name, adv: &ContractAdvertisement) -> bool {
    adv.participants()
        .iter()
        .all(|p| c.has_auth(p, &AuthAction::CommitDone { adv: adv_id.clone() }))
}

/// Whether the decorations of branch `b` of contract `x` are satisfied.
fn decorations_hold(c: &Configuration, x: &Name, b: usize, g: &GuardedContract) -> Result<(), String> {
    for t in &g.afters {
        match t.as_const() {
            Some(k) if k < 0 || (k as u64) <= c.now => {}
            Some(k) => return Err(format!("deadline {k} not reached at time {}", c.now)),
            None => return Err("deadline is not closed".into()),
        }
    }
    for p in &g.auths {
        if !c.has_auth(p, &AuthAction::TakeBranch { contract: x.clone(), branch: b }) {
            return Err(format!("missing authorization of {p}"));
        }
    }
    Ok(())
}

fn branch_auths(c: &Configuration, x: &Name) -> Vec<Term> {
    c.authorizations
        .iter()
        .filter(|a| matches!(&a.action, AuthAction::TakeBranch { contract, .. } if contract == x))
        .map(Term::auth)
        .collect()
}

impl Semantics {
    /// Checks the premises of `mv` in `c` and computes its effect. Fresh
    /// names are drawn from `supply`.
    pub fn effect(&self, c: &Configuration, mv: &Move, supply: &mut NameSupply) -> Result<Transition, SemanticsError> {
        let mut fresh = Fresh { supply, drawn: Vec::new() };
        let mut t = Transition::default();
        match mv {
            Move::Advertise { adv } => self.advertise(c, adv, &mut fresh, &mut t)?,
            Move::Renegotiate { contract, branch } => self.renegotiate(c, contract, *branch, &mut fresh, &mut t)?,
            Move::AuthCommit { by, adv, secrets, assignments } => {
                self.auth_commit(c, by, adv, secrets, assignments, &mut t)?
            }
            Move::AuthInitDeposit { by, adv, deposit } => {
                const R: &str = "auth-init-deposit";
                let a = c.advertisements.get(adv);
                ensure!(a.is_some(), R, "no advertisement `{adv}`");
                let a = a.unwrap();
                ensure!(all_committed(c, adv, &a.adv), R, "not every participant has committed");
                let mut found = false;
                for (owner, value, d) in a.adv.precondition.deposits() {
                    if owner == by && c.resolve_deposit_ref(owner, d).as_ref() == Ok(deposit) {
                        let dt = c.deposits.get(deposit);
                        ensure!(dt.is_some(), R, "deposit `{deposit}` does not exist");
                        let dt = dt.unwrap();
                        ensure!(&dt.owner == by && dt.value == value, R, "deposit `{deposit}` does not match");
                        found = true;
                    }
                }
                ensure!(found, R, "`{deposit}` is not a deposit of {by} in `{adv}`");
                let action = AuthAction::SpendDepositForInit { x: deposit.clone(), adv: adv.clone() };
                ensure!(!c.has_auth(by, &action), R, "already authorized");
                t.produced.push(auth(by, action));
            }
            Move::AuthInitContract { by, adv } => {
                const R: &str = "auth-init-contract";
                let a = c.advertisements.get(adv);
                ensure!(a.is_some(), R, "no advertisement `{adv}`");
                let a = a.unwrap();
                let origin = a.origin();
                ensure!(origin.is_some(), R, "`{adv}` is not a renegotiation");
                let x = origin.unwrap();
                ensure!(c.contracts.contains_key(x), R, "origin `{x}` is gone");
                ensure!(a.adv.participants().contains(by), R, "{by} does not take part");
                ensure!(all_committed(c, adv, &a.adv), R, "not every participant has committed");
                let action = AuthAction::SpendContractForRenegotiation { x: x.clone(), adv: adv.clone() };
                ensure!(!c.has_auth(by, &action), R, "already authorized");
                t.produced.push(auth(by, action));
            }
            Move::Init { adv } => self.init(c, adv, &mut fresh, &mut t)?,
            Move::AuthBranch { by, contract, branch } => {
                const R: &str = "auth-branch";
                let ct = c.contracts.get(contract);
                ensure!(ct.is_some(), R, "no contract `{contract}`");
                let g = ct.unwrap().contract.0.get(*branch);
                ensure!(g.is_some(), R, "no branch {branch}");
                ensure!(g.unwrap().auths.contains(by), R, "branch does not need {by}");
                let action = AuthAction::TakeBranch { contract: contract.clone(), branch: *branch };
                ensure!(!c.has_auth(by, &action), R, "already authorized");
                t.produced.push(auth(by, action));
            }
            Move::Fire { contract, branch } => self.fire(c, contract, *branch, &mut fresh, &mut t)?,
            Move::Reveal { by, secret } => {
                const R: &str = "reveal";
                let s = c.committed.get(secret);
                ensure!(s.is_some(), R, "`{secret}` is not committed");
                let s = s.unwrap();
                ensure!(&s.owner == by, R, "`{secret}` belongs to {}", s.owner);
                ensure!(s.payload.is_some(), R, "`{secret}` cannot be opened");
                t.consumed.push(Term::Committed { secret: secret.clone(), owner: by.clone(), payload: s.payload });
                t.produced.push(Term::Revealed { secret: secret.clone(), owner: by.clone(), payload: s.payload.unwrap() });
            }
            Move::Delay { delta } => {
                ensure!(*delta > 0, "delay", "delay must be positive");
                ensure!(c.now.checked_add(*delta).is_some(), "delay", "time overflows");
                t.delay = *delta;
            }
            _ => self.deposit_op(c, mv, &mut fresh, &mut t)?,
        }
        t.fresh = fresh.drawn;
        Ok(t)
    }

    /// Applies `mv`, returning the successor configuration.
    pub fn apply(
        &self,
        c: &Configuration,
        mv: &Move,
        supply: &mut NameSupply,
    ) -> Result<(Configuration, Transition), SemanticsError> {
        let t = self.effect(c, mv, supply)?;
        let mut next = c.clone();
        for term in &t.consumed {
            next.remove(term).map_err(SemanticsError::Term)?;
        }
        for term in &t.produced {
            next.insert(term.clone()).map_err(SemanticsError::Term)?;
        }
        next.now += t.delay;
        Ok((next, t))
    }

    pub fn is_enabled(&self, c: &Configuration, mv: &Move, supply: &NameSupply) -> bool {
        self.effect(c, mv, &mut supply.clone()).is_ok()
    }

    fn advertise(
        &self,
        c: &Configuration,
        adv: &ContractAdvertisement,
        fresh: &mut Fresh,
        t: &mut Transition,
    ) -> Result<(), SemanticsError> {
        const R: &str = "advertise";
        ensure!(adv.origin.is_none(), R, "advertisements cannot name an origin");
        for (owner, value, d) in adv.precondition.deposits() {
            let DepositRef::Name(n) = d else {
                return Err(SemanticsError::NotEnabled { rule: R, reason: format!("`${d:?}` is a variable") });
            };
            let dt = c.deposits.get(n);
            ensure!(
                dt.is_some_and(|dt| &dt.owner == owner && dt.value == value),
                R,
                "deposit `{n}` of {owner} with {value} is not available"
            );
        }
        for (_, s) in adv.precondition.secrets() {
            ensure!(!c.is_secret_name_used(s), R, "secret `{s}` is not fresh");
        }
        ensure!(adv.participants().iter().any(|p| self.is_honest(p)), R, "no honest participant");
        let id = fresh.name("adv");
        t.produced.push(Term::Advertisement { name: id, adv: adv.clone(), call: None });
        Ok(())
    }

    fn renegotiate(
        &self,
        c: &Configuration,
        x: &Name,
        b: usize,
        fresh: &mut Fresh,
        t: &mut Transition,
    ) -> Result<(), SemanticsError> {
        const R: &str = "renegotiate";
        let ct = c.contracts.get(x);
        ensure!(ct.is_some(), R, "no contract `{x}`");
        let g = ct.unwrap().contract.0.get(b);
        ensure!(g.is_some(), R, "no branch {b}");
        let Action::Renegotiate { var, args } = &g.unwrap().action else {
            return Err(SemanticsError::NotEnabled { rule: R, reason: "branch is not a renegotiation".into() });
        };
        let args = closed_args(args).map_err(|e| SemanticsError::Instantiate(e.into()))?;
        for (_, other) in c.advertisements.iter().filter(|(_, a)| a.origin() == Some(x)) {
            ensure!(
                !matches_call(&self.program, &other.adv, var, &args),
                R,
                "an equivalent advertisement already exists"
            );
        }
        let eq = select_equation(&self.program, var, &args)?;
        let mut adv = instantiate(eq, &args, fresh.supply)?;
        for (_, s) in adv.precondition.secrets() {
            fresh.drawn.push(s.as_str().to_owned());
        }
        for (_, _, d) in adv.precondition.deposits() {
            if d.is_var() {
                fresh.drawn.push(d.name().as_str().to_owned());
            }
        }
        for (_, s) in adv.precondition.secrets() {
            ensure!(!c.is_secret_name_used(s), R, "secret `{s}` is not fresh");
        }
        adv.origin = Some(x.clone());
        let id = fresh.name("adv");
        t.produced.push(Term::Advertisement {
            name: id,
            adv,
            call: Some(Call { var: var.clone(), args, branch: b }),
        });
        Ok(())
    }

    fn auth_commit(
        &self,
        c: &Configuration,
        by: &Participant,
        adv_id: &Name,
        secrets: &[(SecretName, Option<u32>)],
        assignments: &[(Name, Name)],
        t: &mut Transition,
    ) -> Result<(), SemanticsError> {
        const R: &str = "auth-commit";
        let a = c.advertisements.get(adv_id);
        ensure!(a.is_some(), R, "no advertisement `{adv_id}`");
        let adv = &a.unwrap().adv;
        ensure!(adv.participants().contains(by), R, "{by} does not take part in `{adv_id}`");
        let done = AuthAction::CommitDone { adv: adv_id.clone() };
        ensure!(!c.has_auth(by, &done), R, "{by} has already committed");
        let honest = self.is_honest(by);

        let mine: Vec<&SecretName> = adv.precondition.secrets().filter(|(o, _)| *o == by).map(|(_, s)| s).collect();
        ensure!(
            mine.len() == secrets.len() && mine.iter().zip(secrets).all(|(s, (n, _))| *s == n),
            R,
            "commitments must cover exactly the secrets of {by}"
        );
        for (s, payload) in secrets {
            ensure!(!c.committed.contains_key(s) && !c.revealed.contains_key(s), R, "`{s}` already committed");
            match payload {
                Some(n) => ensure!(i32::try_from(*n).is_ok(), R, "payload of `{s}` out of range"),
                None => ensure!(!honest, R, "honest participants commit to a payload"),
            }
            t.produced.push(Term::Committed { secret: s.clone(), owner: by.clone(), payload: *payload });
        }

        let vars: Vec<(Money, &Name)> = adv
            .precondition
            .deposits()
            .filter(|(o, _, d)| *o == by && d.is_var())
            .map(|(_, v, d)| (v, d.name()))
            .collect();
        ensure!(
            vars.len() == assignments.len() && vars.iter().zip(assignments).all(|((_, v), (w, _))| *v == w),
            R,
            "assignments must cover exactly the deposit variables of {by}"
        );
        let persistent: BTreeSet<&Name> = adv
            .precondition
            .deposits()
            .filter(|(o, _, d)| *o == by && !d.is_var())
            .map(|(_, _, d)| d.name())
            .collect();
        let mut used = BTreeSet::new();
        for ((value, var), (_, dep)) in vars.iter().zip(assignments) {
            ensure!(!c.assignments.contains_key(*var), R, "`${var}` already assigned");
            if honest {
                let dt = c.deposits.get(dep);
                ensure!(
                    dt.is_some_and(|d| &d.owner == by && d.value == *value),
                    R,
                    "`{dep}` is not a deposit of {by} with {value}"
                );
                ensure!(used.insert(dep.clone()), R, "`{dep}` assigned twice");
                ensure!(!persistent.contains(dep), R, "`{dep}` is already a persistent deposit");
            }
            if c.assignments.values().any(|a| &a.deposit == dep) {
                t.warnings.push(format!("deposit `{dep}` is also promised to another advertisement"));
            }
            t.produced.push(Term::Assignment { var: (*var).clone(), owner: by.clone(), deposit: dep.clone() });
        }
        if secrets.iter().any(|(_, p)| p.is_none()) {
            t.warnings.push(format!("{by} committed to a secret that cannot be opened"));
        }
        t.produced.push(auth(by, done));
        Ok(())
    }

    fn init(&self, c: &Configuration, adv_id: &Name, fresh: &mut Fresh, t: &mut Transition) -> Result<(), SemanticsError> {
        const R: &str = "init";
        let a = c.advertisements.get(adv_id);
        ensure!(a.is_some(), R, "no advertisement `{adv_id}`");
        let a = a.unwrap();
        let adv = &a.adv;
        ensure!(all_committed(c, adv_id, adv), R, "not every participant has committed");
        let mut balance = Money::ZERO;
        let mut seen = BTreeSet::new();
        for (owner, value, d) in adv.precondition.deposits() {
            let name = c.resolve_deposit_ref(owner, d)?;
            let dt = c.deposits.get(&name);
            ensure!(
                dt.is_some_and(|dt| &dt.owner == owner && dt.value == value),
                R,
                "deposit `{name}` of {owner} with {value} is not available"
            );
            ensure!(seen.insert(name.clone()), R, "deposit `{name}` used twice");
            let spend = AuthAction::SpendDepositForInit { x: name.clone(), adv: adv_id.clone() };
            ensure!(c.has_auth(owner, &spend), R, "{owner} has not authorized spending `{name}`");
            t.consumed.push(Term::deposit(&name, &c.deposits[&name]));
            balance = balance.checked_add(value).expect("balance overflows");
            if let DepositRef::Var(v) = d {
                t.consumed.push(Term::Assignment { var: v.clone(), owner: owner.clone(), deposit: name.clone() });
            }
        }
        if let Some(x) = a.origin() {
            let ct = c.contracts.get(x);
            ensure!(ct.is_some(), R, "origin `{x}` is gone");
            let ct = ct.unwrap();
            let call = a.call.as_ref();
            ensure!(call.is_some(), R, "renegotiation without a call");
            let call = call.unwrap();
            let g = ct.contract.0.get(call.branch);
            ensure!(g.is_some(), R, "origin has no branch {}", call.branch);
            let g = g.unwrap();
            let Action::Renegotiate { var, args } = &g.action else {
                return Err(SemanticsError::NotEnabled { rule: R, reason: "origin branch is not a call".into() });
            };
            ensure!(
                var == &call.var && closed_args(args).ok().as_deref() == Some(&call.args[..]),
                R,
                "origin branch does not make this call"
            );
            ensure!(matches_call(&self.program, adv, var, &call.args), R, "advertisement does not match {var}");
            decorations_hold(c, x, call.branch, g).map_err(|reason| SemanticsError::NotEnabled { rule: R, reason })?;
            for p in adv.participants() {
                let spend = AuthAction::SpendContractForRenegotiation { x: x.clone(), adv: adv_id.clone() };
                ensure!(c.has_auth(&p, &spend), R, "{p} has not authorized spending `{x}`");
            }
            balance = balance.checked_add(ct.balance).expect("balance overflows");
            t.consumed.push(Term::contract(x, ct));
            t.consumed.extend(branch_auths(c, x));
        }
        t.consumed.push(Term::Advertisement { name: adv_id.clone(), adv: adv.clone(), call: a.call.clone() });
        t.consumed.extend(
            c.authorizations
                .iter()
                .filter(|au| au.action.advertisement() == Some(adv_id))
                .map(Term::auth),
        );
        let name = fresh.name("c");
        t.produced.push(Term::Contract { name, contract: adv.contract.clone(), balance });
        Ok(())
    }

    fn fire(&self, c: &Configuration, x: &Name, b: usize, fresh: &mut Fresh, t: &mut Transition) -> Result<(), SemanticsError> {
        const R: &str = "fire";
        let ct = c.contracts.get(x);
        ensure!(ct.is_some(), R, "no contract `{x}`");
        let ct = ct.unwrap();
        let g = ct.contract.0.get(b);
        ensure!(g.is_some(), R, "no branch {b}");
        let g = g.unwrap();
        decorations_hold(c, x, b, g).map_err(|reason| SemanticsError::NotEnabled { rule: R, reason })?;
        match &g.action {
            Action::Withdraw(p) => {
                let name = fresh.name("d");
                t.produced.push(Term::Deposit { name, owner: p.clone(), value: ct.balance });
            }
            Action::Split(bs) => {
                let total = Money::checked_sum(bs.iter().map(|s| s.value));
                ensure!(total == Some(ct.balance), R, "split does not preserve the balance {}", ct.balance);
                for s in bs {
                    let name = fresh.name("c");
                    t.produced.push(Term::Contract { name, contract: s.contract.clone(), balance: s.value });
                }
            }
            Action::Put { secrets, predicate, continuation } => {
                for s in secrets {
                    ensure!(c.revealed.contains_key(s), R, "`{s}` is not revealed");
                }
                let lookup = |s: &SecretName| c.revealed.get(s).map(|r| i64::from(r.payload));
                let holds = eval_predicate(predicate, &Env::new(), &lookup)
                    .map_err(|e| SemanticsError::NotEnabled { rule: R, reason: e.to_string() })?;
                ensure!(holds, R, "predicate is false");
                let name = fresh.name("c");
                t.produced.push(Term::Contract { name, contract: continuation.clone(), balance: ct.balance });
            }
            Action::Renegotiate { .. } => {
                return Err(SemanticsError::NotEnabled { rule: R, reason: "renegotiation branches start with an advertisement".into() })
            }
        }
        t.consumed.push(Term::contract(x, ct));
        t.consumed.extend(branch_auths(c, x));
        Ok(())
    }

    fn deposit_op(&self, c: &Configuration, mv: &Move, fresh: &mut Fresh, t: &mut Transition) -> Result<(), SemanticsError> {
        let owned = |rule: &'static str, x: &Name, by: Option<&Participant>| -> Result<Term, SemanticsError> {
            let d = c.deposits.get(x);
            ensure!(d.is_some(), rule, "no deposit `{x}`");
            let d = d.unwrap();
            if let Some(by) = by {
                ensure!(&d.owner == by, rule, "`{x}` belongs to {}", d.owner);
            }
            Ok(Term::deposit(x, d))
        };
        let join_action = |x: &Name, y: &Name| -> Option<(Participant, AuthAction)> {
            let (dx, dy) = (c.deposits.get(x)?, c.deposits.get(y)?);
            let owner = if x < y { dx.owner.clone() } else { dy.owner.clone() };
            let total = dx.value.checked_add(dy.value)?;
            Some((dx.owner.clone(), AuthAction::JoinDeposit { x: x.clone(), y: y.clone(), owner, total }))
        };
        match mv {
            Move::AuthJoin { by, x, y } => {
                const R: &str = "auth-join";
                ensure!(x != y, R, "cannot join `{x}` with itself");
                owned(R, x, Some(by))?;
                owned(R, y, None)?;
                let (_, action) = join_action(x, y).unwrap();
                ensure!(!c.has_auth(by, &action), R, "already authorized");
                t.produced.push(auth(by, action));
            }
            Move::Join { x, y } => {
                const R: &str = "join";
                ensure!(x < y, R, "join names its deposits in order");
                let tx = owned(R, x, None)?;
                let ty = owned(R, y, None)?;
                let (ox, ax) = join_action(x, y).unwrap();
                let (oy, ay) = join_action(y, x).unwrap();
                ensure!(c.has_auth(&ox, &ax), R, "{ox} has not authorized the join");
                ensure!(c.has_auth(&oy, &ay), R, "{oy} has not authorized the join");
                let AuthAction::JoinDeposit { owner, total, .. } = &ax else { unreachable!() };
                t.consumed.extend([tx, ty, auth(&ox, ax.clone()), auth(&oy, ay.clone())]);
                let name = fresh.name("d");
                t.produced.push(Term::Deposit { name, owner: owner.clone(), value: *total });
            }
            Move::AuthDivide { by, x, v1, v2 } => {
                const R: &str = "auth-divide";
                owned(R, x, Some(by))?;
                ensure!(v1.0 > 0 && v2.0 > 0, R, "both parts must be positive");
                ensure!(v1.checked_add(*v2) == Some(c.deposits[x].value), R, "parts do not add up");
                let action = AuthAction::DivideDeposit { x: x.clone(), owner: by.clone(), v1: *v1, v2: *v2 };
                ensure!(!c.has_auth(by, &action), R, "already authorized");
                t.produced.push(auth(by, action));
            }
            Move::Divide { x, v1, v2 } => {
                const R: &str = "divide";
                let tx = owned(R, x, None)?;
                let owner = c.deposits[x].owner.clone();
                let action = AuthAction::DivideDeposit { x: x.clone(), owner: owner.clone(), v1: *v1, v2: *v2 };
                ensure!(c.has_auth(&owner, &action), R, "{owner} has not authorized the division");
                t.consumed.extend([tx, auth(&owner, action)]);
                for v in [v1, v2] {
                    let name = fresh.name("d");
                    t.produced.push(Term::Deposit { name, owner: owner.clone(), value: *v });
                }
            }
            Move::AuthDonate { by, x, to } => {
                const R: &str = "auth-donate";
                owned(R, x, Some(by))?;
                ensure!(to != by, R, "cannot donate to oneself");
                let action = AuthAction::DonateDeposit { x: x.clone(), from: by.clone(), to: to.clone() };
                ensure!(!c.has_auth(by, &action), R, "already authorized");
                t.produced.push(auth(by, action));
            }
            Move::Donate { x, to } => {
                const R: &str = "donate";
                let tx = owned(R, x, None)?;
                let d = &c.deposits[x];
                let action = AuthAction::DonateDeposit { x: x.clone(), from: d.owner.clone(), to: to.clone() };
                ensure!(c.has_auth(&d.owner, &action), R, "{} has not authorized the donation", d.owner);
                t.consumed.extend([tx, auth(&d.owner, action)]);
                let name = fresh.name("d");
                t.produced.push(Term::Deposit { name, owner: to.clone(), value: d.value });
            }
            Move::AuthDestroy { by, x } => {
                const R: &str = "auth-destroy";
                owned(R, x, Some(by))?;
                let action = AuthAction::DestroyDeposit { x: x.clone(), owner: by.clone() };
                ensure!(!c.has_auth(by, &action), R, "already authorized");
                t.produced.push(auth(by, action));
            }
            Move::Destroy { x } => {
                const R: &str = "destroy";
                let tx = owned(R, x, None)?;
                let owner = c.deposits[x].owner.clone();
                let action = AuthAction::DestroyDeposit { x: x.clone(), owner: owner.clone() };
                ensure!(c.has_auth(&owner, &action), R, "{owner} has not authorized the destruction");
                t.consumed.extend([tx, auth(&owner, action)]);
            }
            _ => unreachable!("not a deposit operation"),
        }
        Ok(())
    }

    /// Candidate moves drawn from the enumeration menus; not all of them are
    /// enabled.
    pub fn candidate_moves(&self, c: &Configuration) -> Vec<Move> {
        let mut out = Vec::new();
        if !c.advertisements.values().any(|a| a.origin().is_none()) {
            out.push(Move::Advertise { adv: self.program.main.clone() });
        }
        for (x, ct) in &c.contracts {
            for (b, g) in ct.contract.0.iter().enumerate() {
                if matches!(g.action, Action::Renegotiate { .. }) {
                    out.push(Move::Renegotiate { contract: x.clone(), branch: b });
                } else {
                    out.push(Move::Fire { contract: x.clone(), branch: b });
                }
                for p in &g.auths {
                    out.push(Move::AuthBranch { by: p.clone(), contract: x.clone(), branch: b });
                }
            }
        }
        for (id, a) in &c.advertisements {
            for p in a.adv.participants() {
                self.commit_candidates(c, id, &a.adv, &p, &mut out);
                if a.origin().is_some() {
                    out.push(Move::AuthInitContract { by: p.clone(), adv: id.clone() });
                }
            }
            for (owner, _, d) in a.adv.precondition.deposits() {
                if let Ok(deposit) = c.resolve_deposit_ref(owner, d) {
                    out.push(Move::AuthInitDeposit { by: owner.clone(), adv: id.clone(), deposit });
                }
            }
            out.push(Move::Init { adv: id.clone() });
        }
        for (s, cs) in &c.committed {
            out.push(Move::Reveal { by: cs.owner.clone(), secret: s.clone() });
        }
        for delta in self.delay_menu(c) {
            out.push(Move::Delay { delta });
        }
        if self.deposit_ops {
            self.deposit_op_candidates(c, &mut out);
        }
        out
    }

    pub fn enabled_moves(&self, c: &Configuration, supply: &NameSupply) -> Vec<Move> {
        self.candidate_moves(c).into_iter().filter(|m| self.is_enabled(c, m, supply)).collect()
    }

    /// Delays up to the next pending deadline, and the unit delay.
    pub fn delay_menu(&self, c: &Configuration) -> Vec<u64> {
        let mut out = vec![1];
        if let Some(d) = self.next_deadline(c) {
            if d - c.now > 1 {
                out.push(d - c.now);
            }
        }
        out
    }

    /// The earliest deadline of a live contract branch that lies in the future.
    pub fn next_deadline(&self, c: &Configuration) -> Option<u64> {
        c.contracts
            .values()
            .flat_map(|ct| ct.contract.0.iter())
            .filter_map(GuardedContract::deadline)
            .filter_map(|d| u64::try_from(d).ok())
            .filter(|d| *d > c.now)
            .min()
    }

    fn commit_candidates(
        &self,
        c: &Configuration,
        id: &Name,
        adv: &ContractAdvertisement,
        p: &Participant,
        out: &mut Vec<Move>,
    ) {
        const CAP: usize = 256;
        if c.has_auth(p, &AuthAction::CommitDone { adv: id.clone() }) {
            return;
        }
        let mut payloads: Vec<Option<u32>> = self.payload_menu.iter().copied().map(Some).collect();
        if !self.is_honest(p) {
            payloads.push(None);
        }
        let secrets: Vec<&SecretName> = adv.precondition.secrets().filter(|(o, _)| *o == p).map(|(_, s)| s).collect();
        let vars: Vec<(Money, &Name)> = adv
            .precondition
            .deposits()
            .filter(|(o, _, d)| *o == p && d.is_var())
            .map(|(_, v, d)| (v, d.name()))
            .collect();
        let mut secret_choices: Vec<Vec<(SecretName, Option<u32>)>> = vec![Vec::new()];
        for s in &secrets {
            secret_choices = secret_choices
                .into_iter()
                .flat_map(|prefix| {
                    payloads.iter().map(move |pl| {
                        let mut v = prefix.clone();
                        v.push(((*s).clone(), *pl));
                        v
                    })
                })
                .take(CAP)
                .collect();
        }
        let mut assign_choices: Vec<Vec<(Name, Name)>> = vec![Vec::new()];
        for (value, var) in &vars {
            let deposits: Vec<&Name> =
                c.deposits.iter().filter(|(_, d)| &d.owner == p && d.value == *value).map(|(n, _)| n).collect();
            assign_choices = assign_choices
                .into_iter()
                .flat_map(|prefix| {
                    deposits
                        .iter()
                        .filter(|d| !prefix.iter().any(|(_, e)| e == **d))
                        .map(|d| {
                            let mut v = prefix.clone();
                            v.push(((*var).clone(), (*d).clone()));
                            v
                        })
                        .collect::<Vec<_>>()
                })
                .take(CAP)
                .collect();
        }
        for s in &secret_choices {
            for a in &assign_choices {
                if out.len() > 64 * CAP {
                    return;
                }
                out.push(Move::AuthCommit { by: p.clone(), adv: id.clone(), secrets: s.clone(), assignments: a.clone() });
            }
        }
    }

    fn deposit_op_candidates(&self, c: &Configuration, out: &mut Vec<Move>) {
        let participants = self.participants();
        for (x, d) in &c.deposits {
            for y in c.deposits.keys().filter(|y| *y != x) {
                out.push(Move::AuthJoin { by: d.owner.clone(), x: x.clone(), y: y.clone() });
                if x < y {
                    out.push(Move::Join { x: x.clone(), y: y.clone() });
                }
            }
            if d.value.0 >= 2 {
                let v1 = Money(d.value.0 / 2);
                let v2 = Money(d.value.0 - v1.0);
                out.push(Move::AuthDivide { by: d.owner.clone(), x: x.clone(), v1, v2 });
                out.push(Move::Divide { x: x.clone(), v1, v2 });
            }
            for to in participants.iter().filter(|p| **p != d.owner) {
                out.push(Move::AuthDonate { by: d.owner.clone(), x: x.clone(), to: to.clone() });
                out.push(Move::Donate { x: x.clone(), to: to.clone() });
            }
            out.push(Move::AuthDestroy { by: d.owner.clone(), x: x.clone() });
            out.push(Move::Destroy { x: x.clone() });
        }
    }

    /// An advertisement is live while everything it would consume exists.
    pub fn is_live(&self, c: &Configuration, id: &Name) -> bool {
        let Some(a) = c.advertisements.get(id) else { return false };
        let origin_ok = a.origin().is_none_or(|x| c.contracts.contains_key(x));
        origin_ok
            && a.adv.precondition.deposits().all(|(o, _, d)| match c.resolve_deposit_ref(o, d) {
                Ok(n) => c.deposits.contains_key(&n),
                Err(_) => true,
            })
    }

    /// No contracts, no live advertisements and nothing left to advertise.
    pub fn is_terminal(&self, c: &Configuration, supply: &NameSupply) -> bool {
        c.contracts.is_empty()
            && !c.advertisements.keys().any(|id| self.is_live(c, id))
            && !self.is_enabled(c, &Move::Advertise { adv: self.program.main.clone() }, supply)
    }

    /// Value each participant can claim from deposits, keyed by participant.
    pub fn deposit_totals(&self, c: &Configuration) -> BTreeMap<Participant, Money> {
        let mut out: BTreeMap<Participant, Money> = self.participants().into_iter().map(|p| (p, Money::ZERO)).collect();
        for d in c.deposits.values() {
            let e = out.entry(d.owner.clone()).or_insert(Money::ZERO);
            *e = e.checked_add(d.value).expect("holdings overflow");
        }
        out
    }
}
