//! Helpers shared by the integration tests.
#![allow(dead_code)]

use bitml_core::ast::{Action, DepositDecl, ParticipantDecl, SplitBranch};
use bitml_core::{
    ArithTerm, Atom, BinOp, Contract, ContractAdvertisement, DefiningEquation, DepositRef, GuardedContract,
    Money, Move, Precondition, Predicate, Program, Run, Semantics, StaticExpr,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// A run of at most `len` moves, each picked uniformly among the enabled ones.
pub fn random_run(sem: &Semantics, seed: u64, len: usize) -> Run {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut run = Run::from_program(sem);
    for _ in 0..len {
        let enabled = run.enabled_moves(sem);
        if enabled.is_empty() {
            break;
        }
        let mv: Move = enabled[rng.random_range(0..enabled.len())].clone();
        run.push(sem, mv).expect("enabled moves apply");
    }
    run
}

/// Random syntax trees in the normal form the parser produces. They need
/// not be well formed; they only have to print and parse back.
pub struct ProgramGen {
    rng: ChaCha8Rng,
    participants: Vec<String>,
    params: Vec<String>,
    vars: Vec<String>,
}

impl ProgramGen {
    pub fn new(seed: u64) -> Self {
        Self { rng: ChaCha8Rng::seed_from_u64(seed), participants: Vec::new(), params: Vec::new(), vars: Vec::new() }
    }

    fn pick<'a>(&mut self, xs: &'a [String]) -> &'a str {
        &xs[self.rng.random_range(0..xs.len())]
    }

    fn participant(&mut self) -> String {
        let ps = self.participants.clone();
        self.pick(&ps).to_owned()
    }

    fn money(&mut self) -> Money {
        match self.rng.random_range(0..4) {
            0 => Money(0),
            1 => Money(self.rng.random_range(1..10) * 100_000_000),
            2 => Money(self.rng.random_range(1..100) * 1_000_000),
            _ => Money(self.rng.random_range(1..100_000_000_000)),
        }
    }

    fn constant(&mut self) -> i32 {
        match self.rng.random_range(0..5) {
            0 => self.rng.random_range(-5..0),
            1 => self.rng.random(),
            2 => [i32::MIN, i32::MAX][self.rng.random_range(0..2)],
            _ => self.rng.random_range(0..3000),
        }
    }

    fn static_expr(&mut self, depth: u32) -> StaticExpr {
        let leaf = depth == 0 || self.rng.random_bool(0.4);
        if leaf {
            if !self.params.is_empty() && self.rng.random_bool(0.4) {
                let ps = self.params.clone();
                return StaticExpr::var(self.pick(&ps));
            }
            return StaticExpr::Const(self.constant());
        }
        let op = [BinOp::Add, BinOp::Sub, BinOp::Mul][self.rng.random_range(0..3)];
        StaticExpr::bin(op, self.static_expr(depth - 1), self.static_expr(depth - 1))
    }

    fn arith(&mut self, secrets: &[String], depth: u32) -> ArithTerm {
        let leaf = depth == 0 || self.rng.random_bool(0.4);
        if leaf {
            if !secrets.is_empty() && self.rng.random_bool(0.5) {
                return ArithTerm::secret(self.pick(secrets));
            }
            return ArithTerm::Static(self.static_expr(1));
        }
        let (l, r) = (self.arith(secrets, depth - 1), self.arith(secrets, depth - 1));
        if self.rng.random_bool(0.5) {
            ArithTerm::add(l, r)
        } else {
            ArithTerm::sub(l, r)
        }
    }

    fn predicate(&mut self, secrets: &[String], depth: u32) -> Predicate {
        let k = if depth == 0 { self.rng.random_range(0..3) } else { self.rng.random_range(0..5) };
        match k {
            0 => Predicate::True,
            1 => Predicate::Eq(self.arith(secrets, 2), self.arith(secrets, 2)),
            2 => Predicate::Lt(self.arith(secrets, 2), self.arith(secrets, 2)),
            3 => Predicate::and(self.predicate(secrets, depth - 1), self.predicate(secrets, depth - 1)),
            _ => Predicate::not(self.predicate(secrets, depth - 1)),
        }
    }

    fn contract(&mut self, secrets: &[String], depth: u32) -> Contract {
        let n = if depth == 0 { 1 } else { self.rng.random_range(0..4) };
        Contract((0..n).map(|_| self.guarded(secrets, depth)).collect())
    }

    fn guarded(&mut self, secrets: &[String], depth: u32) -> GuardedContract {
        let k = if depth == 0 { 0 } else { self.rng.random_range(0..4) };
        let mut g = match k {
            0 => GuardedContract::withdraw(&self.participant()),
            1 => GuardedContract::new(Action::Split(
                (0..self.rng.random_range(1..4))
                    .map(|_| SplitBranch { value: self.money(), contract: self.contract(secrets, depth - 1) })
                    .collect(),
            )),
            2 => {
                let listed: Vec<String> = secrets.iter().filter(|_| self.rng.random_bool(0.5)).cloned().collect();
                let predicate =
                    if self.rng.random_bool(0.3) { Predicate::True } else { self.predicate(&listed, 2) };
                GuardedContract::new(Action::Put {
                    secrets: listed.iter().map(|s| s.as_str().into()).collect(),
                    predicate,
                    continuation: self.contract(secrets, depth - 1),
                })
            }
            _ => {
                let vars = self.vars.clone();
                let var = self.pick(&vars).into();
                let args = (0..self.rng.random_range(0..3)).map(|_| self.static_expr(2)).collect();
                GuardedContract::new(Action::Renegotiate { var, args })
            }
        };
        for _ in 0..self.rng.random_range(0..3) {
            if self.rng.random_bool(0.5) {
                g = g.with_auth(self.participant().as_str());
            } else {
                g = g.with_after(self.static_expr(2));
            }
        }
        g
    }

    fn advertisement(&mut self, allow_vars: bool) -> (ContractAdvertisement, Vec<String>) {
        let mut atoms = Vec::new();
        let mut secrets = Vec::new();
        for i in 0..self.rng.random_range(0..5) {
            let owner = self.participant();
            if self.rng.random_bool(0.5) {
                let dep = if allow_vars && self.rng.random_bool(0.5) {
                    DepositRef::Var(format!("v{i}").as_str().into())
                } else {
                    DepositRef::Name(format!("x{i}").as_str().into())
                };
                atoms.push(Atom::deposit(&owner, self.money(), dep));
            } else {
                let s = format!("s{i}");
                atoms.push(Atom::secret(&owner, &s));
                secrets.push(s);
            }
        }
        let contract = self.contract(&secrets, 3);
        (ContractAdvertisement { precondition: Precondition::new(atoms), contract, origin: None }, secrets)
    }

    pub fn program(&mut self) -> Program {
        let n = self.rng.random_range(1..4);
        self.participants = ["A", "B", "C", "Dave"][..n].iter().map(|s| s.to_string()).collect();
        self.vars = (0..self.rng.random_range(1..3)).map(|i| format!("X{i}")).collect();
        let mut p = Program::new("Gen", ContractAdvertisement::new(Precondition::default(), Contract::default()));
        for name in self.participants.clone() {
            let honest = self.rng.random_bool(0.8);
            p.participants.push(ParticipantDecl { name: name.as_str().into(), honest, span: Default::default() });
        }
        for i in 0..self.rng.random_range(0..3) {
            p.deposits.push(DepositDecl {
                owner: self.participant().as_str().into(),
                value: self.money(),
                name: format!("d{i}").as_str().into(),
                span: Default::default(),
            });
        }
        for var in self.vars.clone() {
            self.params = (0..self.rng.random_range(0..3)).map(|i| ["n", "m", "k"][i].to_owned()).collect();
            let guard = self.rng.random_bool(0.5).then(|| self.predicate(&[], 2));
            let (body, _) = self.advertisement(true);
            p.equations.push(DefiningEquation {
                var: var.as_str().into(),
                params: self.params.clone(),
                guard,
                body,
                span: Default::default(),
            });
        }
        self.params.clear();
        p.main = self.advertisement(false).0;
        p
    }
}
