//! Players for the recursive coin flipping game, and its adversaries.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::engine::{patience, Context, Strategy};
use crate::ast::{Action, GuardedContract};
use crate::names::{Name, Participant};
use crate::semantics::{Configuration, Move};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Payload {
    /// Uniform in {0, 1}.
    Uniform,
    Fixed(u32),
}

/// A coin flipping player. The rational player is `CfgPlayer::rational()`;
/// the other constructors switch off one piece of its behaviour.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CfgPlayer {
    pub label: &'static str,
    pub payload: Payload,
    pub reveals: bool,
    pub renegotiates: bool,
    /// Fires branches and waits for deadlines; a staller only stipulates.
    pub active: bool,
}

impl CfgPlayer {
    pub fn rational() -> Self {
        Self { label: "rational", payload: Payload::Uniform, reveals: true, renegotiates: true, active: true }
    }

    pub fn staller() -> Self {
        Self { label: "staller", reveals: false, renegotiates: false, active: false, ..Self::rational() }
    }

    pub fn non_revealer() -> Self {
        Self { label: "non-revealer", reveals: false, ..Self::rational() }
    }

    pub fn renegotiation_refuser() -> Self {
        Self { label: "renegotiation-refuser", renegotiates: false, ..Self::rational() }
    }

    pub fn always_zero() -> Self {
        Self { label: "always-0", payload: Payload::Fixed(0), ..Self::rational() }
    }

    pub fn out_of_range() -> Self {
        Self { label: "out-of-range", payload: Payload::Fixed(7), ..Self::rational() }
    }

    /// Commits 0 every round: wins every flip against `always_zero`.
    pub fn matcher() -> Self {
        Self { label: "matcher", payload: Payload::Fixed(0), ..Self::rational() }
    }

    /// The five adversaries of the fairness battery.
    pub fn adversaries() -> Vec<CfgPlayer> {
        vec![
            Self::staller(),
            Self::non_revealer(),
            Self::renegotiation_refuser(),
            Self::always_zero(),
            Self::out_of_range(),
        ]
    }

    pub fn by_name(name: &str) -> Option<Self> {
        [Self::rational(), Self::matcher()].into_iter().chain(Self::adversaries()).find(|p| p.label == name)
    }

    fn commit(&self, mv: &Move, rng: &mut ChaCha8Rng) -> Move {
        let Move::AuthCommit { by, adv, secrets, assignments } = mv else { unreachable!() };
        let secrets = secrets
            .iter()
            .map(|(s, _)| {
                let v = match self.payload {
                    Payload::Uniform => rng.random_range(0..2u32),
                    Payload::Fixed(k) => k,
                };
                (s.clone(), Some(v))
            })
            .collect();
        Move::AuthCommit { by: by.clone(), adv: adv.clone(), secrets, assignments: assignments.clone() }
    }
}

/// Earliest deadline among the branches of `contract` other than `branch`:
/// the time by which renegotiating through `branch` must be complete.
pub fn renegotiation_deadline(c: &Configuration, contract: &Name, branch: usize) -> Option<u64> {
    let ct = c.contracts.get(contract)?;
    ct.contract
        .0
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != branch)
        .filter_map(|(_, g)| g.deadline())
        .filter_map(|d| u64::try_from(d).ok())
        .min()
}

fn in_time(c: &Configuration, contract: &Name, branch: usize) -> bool {
    renegotiation_deadline(c, contract, branch).is_none_or(|t| c.now < t)
}

/// Whether a renegotiation advertisement may still be completed in time.
fn advertisement_in_time(c: &Configuration, adv: &Name) -> bool {
    match c.advertisements.get(adv) {
        Some(a) => match (a.origin(), &a.call) {
            (Some(x), Some(call)) => in_time(c, x, call.branch),
            _ => true,
        },
        None => false,
    }
}

fn is_renegotiation(c: &Configuration, adv: &Name) -> bool {
    c.advertisements.get(adv).is_some_and(|a| a.origin().is_some())
}

fn branch<'a>(c: &'a Configuration, contract: &Name, i: usize) -> Option<&'a GuardedContract> {
    c.contracts.get(contract)?.contract.0.get(i)
}

/// `me` should reveal `secret` now: a top-level put lists it and every
/// other secret of that put is already revealed.
fn reveal_due(c: &Configuration, me: &Participant, secret: &crate::names::SecretName) -> bool {
    c.contracts.values().flat_map(|ct| ct.contract.0.iter()).any(|g| match &g.action {
        Action::Put { secrets, .. } => {
            secrets.contains(secret)
                && secrets.iter().filter(|s| *s != secret).all(|s| c.revealed.contains_key(s))
        }
        _ => false,
    }) && c.committed.get(secret).is_some_and(|s| &s.owner == me)
}

impl Strategy for CfgPlayer {
    fn name(&self) -> String {
        self.label.to_owned()
    }

    fn consent(&self, cx: &Context, me: &Participant, rng: &mut ChaCha8Rng) -> Vec<Move> {
        let c = cx.config();
        let mut claims = Vec::new();
        let mut reveals = Vec::new();
        let mut fires = Vec::new();
        let mut stipulation = Vec::new();
        let mut committed_to = Vec::new();
        for mv in cx.enabled {
            match mv {
                Move::Fire { contract, branch: b } if self.active => {
                    let Some(g) = branch(c, contract, *b) else { continue };
                    match &g.action {
                        Action::Withdraw(p) if p == me => claims.push(mv.clone()),
                        Action::Withdraw(_) => {
                            if c.contracts[contract].contract.0.len() == 1 {
                                fires.push(mv.clone());
                            }
                        }
                        _ => fires.push(mv.clone()),
                    }
                }
                Move::Reveal { by, secret } if by == me && self.reveals => {
                    if reveal_due(c, me, secret) {
                        reveals.push(mv.clone());
                    }
                }
                Move::Advertise { .. } => stipulation.push(mv.clone()),
                Move::Renegotiate { contract, branch } => {
                    if self.renegotiates && in_time(c, contract, *branch) {
                        stipulation.push(mv.clone());
                    }
                }
                Move::AuthCommit { by, adv, .. } if by == me => {
                    if committed_to.contains(adv) {
                        continue;
                    }
                    if !is_renegotiation(c, adv) || (self.renegotiates && advertisement_in_time(c, adv)) {
                        committed_to.push(adv.clone());
                        stipulation.push(self.commit(mv, rng));
                    }
                }
                Move::AuthInitDeposit { by, adv, .. } | Move::AuthInitContract { by, adv } if by == me => {
                    if !is_renegotiation(c, adv) || (self.renegotiates && advertisement_in_time(c, adv)) {
                        stipulation.push(mv.clone());
                    }
                }
                Move::Init { adv } => {
                    if !is_renegotiation(c, adv) || (self.renegotiates && advertisement_in_time(c, adv)) {
                        stipulation.push(mv.clone());
                    }
                }
                _ => {}
            }
        }
        let mut out: Vec<Move> = claims.into_iter().chain(reveals).chain(fires).chain(stipulation).collect();
        let delay = if self.active { patience(cx, !out.is_empty()) } else { Some(Move::Delay { delta: u64::MAX / 4 }) };
        out.extend(delay);
        out
    }
}
