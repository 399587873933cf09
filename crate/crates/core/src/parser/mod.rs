//! Concrete syntax: a recursive-descent parser and its pretty-printer.
//!
//! The grammar is documented in `docs/grammar.md`.

mod lexer;
mod pretty;

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

use crate::ast::{
    Action, ArithTerm, Atom, BinOp, Contract, ContractAdvertisement, DefiningEquation, DepositDecl,
    DepositRef, GuardedContract, ParticipantDecl, Precondition, Predicate, Program, Span, SplitBranch,
    StaticExpr,
};
use crate::money::Money;
use crate::names::{Name, Participant, RecVar, SecretName};
use lexer::{lex, Tok, Token};

pub use pretty::{pretty, pretty_advertisement, pretty_contract, pretty_predicate, pretty_static};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub struct SyntaxError {
    pub line: u32,
    pub col: u32,
    pub expected: Vec<String>,
    pub found: String,
}

impl fmt::Display for SyntaxError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: expected ", self.line, self.col)?;
        match self.expected.as_slice() {
            [] => f.write_str("nothing")?,
            [one] => f.write_str(one)?,
            many => write!(f, "one of {}", many.join(", "))?,
        }
        write!(f, ", found {}", self.found)
    }
}

/// A source text with an optional path, used only for messages.
#[derive(Clone, Debug)]
pub struct SourceFile<'a> {
    pub text: &'a str,
    pub path: Option<&'a str>,
}

impl<'a> SourceFile<'a> {
    pub fn new(text: &'a str) -> Self {
        Self { text, path: None }
    }
}

const KEYWORDS: &[&str] = &[
    "participant", "dishonest", "deposit", "let", "if", "contract", "pre", "withdraw", "split",
    "reveal", "put", "after", "true",
];

pub fn parse(src: &str) -> Result<Program, SyntaxError> {
    let tokens = lex(src)?;
    Parser { toks: tokens, pos: 0, secrets: BTreeSet::new() }.program()
}

pub fn parse_file(src: &SourceFile<'_>) -> Result<Program, SyntaxError> {
    parse(src.text)
}

/// Parses a lone contract (a sum of guarded contracts).
pub fn parse_contract(src: &str) -> Result<Contract, SyntaxError> {
    let mut p = Parser { toks: lex(src)?, pos: 0, secrets: BTreeSet::new() };
    let c = p.contract()?;
    p.expect(Tok::Eof, "end of input")?;
    Ok(c)
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
    /// Secrets in scope while parsing the predicate of a reveal.
    secrets: BTreeSet<SecretName>,
}

type PResult<T> = Result<T, SyntaxError>;

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_at(&self, k: usize) -> &Tok {
        &self.toks[(self.pos + k).min(self.toks.len() - 1)].tok
    }

    fn span(&self) -> Span {
        let t = &self.toks[self.pos];
        Span::new(t.line, t.col)
    }

    fn advance(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error<T>(&self, expected: &[&str]) -> PResult<T> {
        let t = &self.toks[self.pos];
        Err(SyntaxError {
            line: t.line,
            col: t.col,
            expected: expected.iter().map(|s| s.to_string()).collect(),
            found: t.tok.to_string(),
        })
    }

    fn eat(&mut self, tok: &Tok) -> bool {
        if self.peek() == tok {
            self.advance();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, tok: Tok, what: &str) -> PResult<()> {
        if self.eat(&tok) {
            Ok(())
        } else {
            self.error(&[what])
        }
    }

    fn is_kw(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    fn eat_kw(&mut self, kw: &str) -> bool {
        if self.is_kw(kw) {
            self.advance();
            true
        } else {
            false
        }
    }

    fn expect_kw(&mut self, kw: &str) -> PResult<()> {
        if self.eat_kw(kw) {
            Ok(())
        } else {
            self.error(&[&format!("`{kw}`")])
        }
    }

    fn ident(&mut self, what: &str) -> PResult<String> {
        match self.peek() {
            Tok::Ident(s) if !KEYWORDS.contains(&s.as_str()) => {
                let s = s.clone();
                self.advance();
                Ok(s)
            }
            _ => self.error(&[what]),
        }
    }

    fn money(&mut self) -> PResult<Money> {
        match self.peek().clone() {
            Tok::Number(s) => {
                let span = self.span();
                let m = Money::parse_btc(&s).map_err(|e| SyntaxError {
                    line: span.line,
                    col: span.col,
                    expected: vec!["a BTC amount with at most 8 decimals".into()],
                    found: e.to_string(),
                })?;
                self.advance();
                Ok(m)
            }
            _ => self.error(&["an amount"]),
        }
    }

    fn program(&mut self) -> PResult<Program> {
        let mut participants = Vec::new();
        let mut deposits = Vec::new();
        let mut equations = Vec::new();
        let mut main: Option<(String, ContractAdvertisement, Span)> = None;
        loop {
            let span = self.span();
            if self.eat_kw("participant") {
                let name = Participant::new(self.ident("a participant name")?);
                let honest = !self.eat_kw("dishonest");
                self.expect(Tok::Semi, "`;`")?;
                participants.push(ParticipantDecl { name, honest, span });
            } else if self.eat_kw("deposit") {
                let owner = Participant::new(self.ident("a participant name")?);
                let value = self.money()?;
                self.expect(Tok::At, "`@`")?;
                let name = Name::new(self.ident("a deposit name")?);
                self.expect(Tok::Semi, "`;`")?;
                deposits.push(DepositDecl { owner, value, name, span });
            } else if self.eat_kw("let") {
                equations.push(self.equation(span)?);
            } else if self.is_kw("contract") {
                if main.is_some() {
                    return self.error(&["a single `contract` declaration"]);
                }
                self.advance();
                let name = self.ident("a contract name")?;
                let adv = self.braced_advertisement()?;
                main = Some((name, adv, span));
            } else if *self.peek() == Tok::Eof {
                break;
            } else {
                return self.error(&["`participant`", "`deposit`", "`let`", "`contract`"]);
            }
        }
        let Some((name, main, main_span)) = main else {
            return self.error(&["a `contract` declaration"]);
        };
        Ok(Program { name, participants, deposits, equations, main, main_span })
    }

    fn equation(&mut self, span: Span) -> PResult<DefiningEquation> {
        let var = RecVar::new(self.ident("a recursion variable")?);
        self.expect(Tok::LParen, "`(`")?;
        let mut params = Vec::new();
        if *self.peek() != Tok::RParen {
            loop {
                params.push(self.ident("a parameter name")?);
                if !self.eat(&Tok::Comma) {
                    break;
                }
            }
        }
        self.expect(Tok::RParen, "`)`")?;
        let guard = if self.eat_kw("if") { Some(self.predicate()?) } else { None };
        self.expect(Tok::Eq, "`=`")?;
        let body = self.braced_advertisement()?;
        self.eat(&Tok::Semi);
        Ok(DefiningEquation { var, params, guard, body, span })
    }

    fn braced_advertisement(&mut self) -> PResult<ContractAdvertisement> {
        self.expect(Tok::LBrace, "`{`")?;
        self.expect_kw("pre")?;
        let precondition = self.precondition()?;
        self.expect(Tok::Semi, "`;`")?;
        let contract = self.contract()?;
        self.expect(Tok::RBrace, "`}`")?;
        Ok(ContractAdvertisement { precondition, contract, origin: None })
    }

    fn precondition(&mut self) -> PResult<Precondition> {
        let mut atoms = Vec::new();
        if *self.peek() == Tok::Semi {
            return Ok(Precondition::new(atoms));
        }
        loop {
            let span = self.span();
            let owner = Participant::new(self.ident("a participant name")?);
            if self.eat(&Tok::Bang) {
                let value = self.money()?;
                self.expect(Tok::At, "`@`")?;
                let dep = if self.eat(&Tok::Dollar) {
                    DepositRef::Var(Name::new(self.ident("a deposit variable")?))
                } else {
                    DepositRef::Name(Name::new(self.ident("a deposit name")?))
                };
                atoms.push(Atom::Deposit { owner, value, dep, span });
            } else if self.eat(&Tok::Hash) {
                let name = SecretName::new(self.ident("a secret name")?);
                atoms.push(Atom::Secret { owner, name, span });
            } else {
                return self.error(&["`!`", "`#`"]);
            }
            if !self.eat(&Tok::Bar) {
                break;
            }
        }
        Ok(Precondition::new(atoms))
    }

    fn contract(&mut self) -> PResult<Contract> {
        if matches!(self.peek(), Tok::Number(n) if n == "0") {
            self.advance();
            return Ok(Contract::default());
        }
        let mut branches = vec![self.guarded()?];
        while self.eat(&Tok::Plus) {
            branches.push(self.guarded()?);
        }
        Ok(Contract(branches))
    }

    /// Continuation of a reveal: a single guarded contract, a parenthesized
    /// sum, or `0`.
    fn continuation(&mut self) -> PResult<Contract> {
        if matches!(self.peek(), Tok::Number(n) if n == "0") {
            self.advance();
            return Ok(Contract::default());
        }
        if self.eat(&Tok::LParen) {
            let c = self.contract()?;
            self.expect(Tok::RParen, "`)`")?;
            return Ok(c);
        }
        Ok(Contract::single(self.guarded()?))
    }

    fn guarded(&mut self) -> PResult<GuardedContract> {
        if self.eat_kw("withdraw") {
            let p = self.ident("a participant name")?;
            return Ok(GuardedContract::withdraw(&p));
        }
        if self.eat_kw("split") {
            self.expect(Tok::LParen, "`(`")?;
            let mut branches = Vec::new();
            loop {
                let value = self.money()?;
                self.expect(Tok::Arrow, "`->`")?;
                let contract = self.contract()?;
                branches.push(SplitBranch { value, contract });
                if !self.eat(&Tok::Bar) {
                    break;
                }
            }
            self.expect(Tok::RParen, "`)`")?;
            return Ok(GuardedContract::new(Action::Split(branches)));
        }
        if self.is_kw("reveal") || self.is_kw("put") {
            self.advance();
            let mut secrets = Vec::new();
            while let Tok::Ident(s) = self.peek() {
                if KEYWORDS.contains(&s.as_str()) {
                    break;
                }
                secrets.push(SecretName::new(s.clone()));
                self.advance();
            }
            let predicate = if self.eat_kw("if") {
                let saved = std::mem::replace(&mut self.secrets, secrets.iter().cloned().collect());
                let p = self.predicate();
                self.secrets = saved;
                p?
            } else {
                Predicate::True
            };
            self.expect(Tok::Dot, "`.`")?;
            let continuation = self.continuation()?;
            return Ok(GuardedContract::new(Action::Put { secrets, predicate, continuation }));
        }
        if self.eat_kw("after") {
            let t = self.static_expr()?;
            self.expect(Tok::Colon, "`:`")?;
            return Ok(self.guarded()?.with_after(t));
        }
        if self.eat(&Tok::Star) {
            let var = RecVar::new(self.ident("a recursion variable")?);
            self.expect(Tok::LParen, "`(`")?;
            let mut args = Vec::new();
            if *self.peek() != Tok::RParen {
                loop {
                    args.push(self.static_expr()?);
                    if !self.eat(&Tok::Comma) {
                        break;
                    }
                }
            }
            self.expect(Tok::RParen, "`)`")?;
            return Ok(GuardedContract::new(Action::Renegotiate { var, args }));
        }
        if matches!(self.peek(), Tok::Ident(s) if !KEYWORDS.contains(&s.as_str()))
            && *self.peek_at(1) == Tok::Colon
        {
            let p = self.ident("a participant name")?;
            self.advance();
            return Ok(self.guarded()?.with_auth(Participant::new(p)));
        }
        self.error(&["`withdraw`", "`split`", "`reveal`", "`after`", "`*`", "an authorization `A :`"])
    }

    fn static_expr(&mut self) -> PResult<StaticExpr> {
        let span = self.span();
        match self.arith()? {
            ArithTerm::Static(e) => Ok(e),
            _ => Err(SyntaxError {
                line: span.line,
                col: span.col,
                expected: vec!["a static expression".into()],
                found: "a secret".into(),
            }),
        }
    }

    fn arith(&mut self) -> PResult<ArithTerm> {
        let mut l = self.term()?;
        loop {
            if self.eat(&Tok::Plus) {
                l = ArithTerm::add(l, self.term()?);
            } else if self.eat(&Tok::Minus) {
                l = ArithTerm::sub(l, self.term()?);
            } else {
                return Ok(l);
            }
        }
    }

    fn term(&mut self) -> PResult<ArithTerm> {
        let mut l = self.factor()?;
        while *self.peek() == Tok::Star {
            let span = self.span();
            self.advance();
            let r = self.factor()?;
            match (l, r) {
                (ArithTerm::Static(a), ArithTerm::Static(b)) => {
                    l = ArithTerm::Static(StaticExpr::bin(BinOp::Mul, a, b));
                }
                _ => {
                    return Err(SyntaxError {
                        line: span.line,
                        col: span.col,
                        expected: vec!["static operands of `*`".into()],
                        found: "a secret".into(),
                    })
                }
            }
        }
        Ok(l)
    }

    fn factor(&mut self) -> PResult<ArithTerm> {
        let span = self.span();
        match self.peek().clone() {
            Tok::Number(s) => {
                self.advance();
                int_literal(&s, false, span).map(ArithTerm::konst)
            }
            Tok::Minus => {
                self.advance();
                match self.peek().clone() {
                    Tok::Number(s) => {
                        self.advance();
                        int_literal(&s, true, span).map(ArithTerm::konst)
                    }
                    _ => self.error(&["an integer literal"]),
                }
            }
            Tok::Ident(s) if !KEYWORDS.contains(&s.as_str()) => {
                self.advance();
                let secret = SecretName::new(s.clone());
                if self.secrets.contains(&secret) {
                    Ok(ArithTerm::Secret(secret))
                } else {
                    Ok(ArithTerm::Static(StaticExpr::Var(s)))
                }
            }
            Tok::LParen => {
                self.advance();
                let t = self.arith()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(t)
            }
            _ => self.error(&["an integer", "a variable", "`(`"]),
        }
    }

    fn predicate(&mut self) -> PResult<Predicate> {
        let mut l = self.unary()?;
        while self.eat(&Tok::AndAnd) {
            l = Predicate::and(l, self.unary()?);
        }
        Ok(l)
    }

    fn unary(&mut self) -> PResult<Predicate> {
        if self.eat(&Tok::Bang) {
            return Ok(Predicate::not(self.unary()?));
        }
        if self.eat_kw("true") {
            return Ok(Predicate::True);
        }
        if *self.peek() == Tok::LParen {
            let saved = self.pos;
            self.advance();
            if let Ok(p) = self.predicate() {
                let closes = self.eat(&Tok::RParen);
                let relop = is_relop(self.peek()) && *self.peek_at(1) != Tok::LBrace;
                if closes && !relop && !is_arith_op(self.peek()) {
                    return Ok(p);
                }
            }
            self.pos = saved;
        }
        self.comparison()
    }

    /// `E op E (op E)*`; chains desugar to conjunctions.
    fn comparison(&mut self) -> PResult<Predicate> {
        let mut left = self.arith()?;
        let mut result: Option<Predicate> = None;
        while is_relop(self.peek()) && *self.peek_at(1) != Tok::LBrace {
            let op = self.advance();
            let right = self.arith()?;
            let p = match op {
                Tok::Eq => Predicate::Eq(left.clone(), right.clone()),
                Tok::Ne => Predicate::ne(left.clone(), right.clone()),
                Tok::Lt => Predicate::Lt(left.clone(), right.clone()),
                Tok::Le => Predicate::le(left.clone(), right.clone()),
                Tok::Gt => Predicate::Lt(right.clone(), left.clone()),
                Tok::Ge => Predicate::le(right.clone(), left.clone()),
                _ => unreachable!(),
            };
            result = Some(match result {
                None => p,
                Some(acc) => Predicate::and(acc, p),
            });
            left = right;
        }
        match result {
            Some(p) => Ok(p),
            None => self.error(&["a comparison operator"]),
        }
    }
}

fn is_relop(t: &Tok) -> bool {
    matches!(t, Tok::Eq | Tok::Ne | Tok::Lt | Tok::Le | Tok::Gt | Tok::Ge)
}

fn is_arith_op(t: &Tok) -> bool {
    matches!(t, Tok::Plus | Tok::Minus | Tok::Star)
}

fn int_literal(s: &str, negative: bool, span: Span) -> PResult<i32> {
    let err = |found: String| SyntaxError {
        line: span.line,
        col: span.col,
        expected: vec!["a 32-bit integer".into()],
        found,
    };
    if s.contains('.') {
        return Err(err(format!("`{s}`")));
    }
    let v: i64 = s.parse().map_err(|_| err(format!("`{s}`")))?;
    let v = if negative { -v } else { v };
    i32::try_from(v).map_err(|_| err(format!("`{v}`")))
}
