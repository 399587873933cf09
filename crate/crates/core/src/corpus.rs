//! The bundled example programs.

use crate::ast::Program;
use crate::parser::parse;

pub const ZCB: &str = include_str!("../corpus/zcb.bitml");
pub const ZCB2: &str = include_str!("../corpus/zcb2.bitml");
pub const ZCB3: &str = include_str!("../corpus/zcb3.bitml");
pub const CFG: &str = include_str!("../corpus/cfg.bitml");
pub const INSTALLMENT: &str = include_str!("../corpus/installment.bitml");

/// `(file stem, source)` for every bundled program.
pub const ALL: &[(&str, &str)] = &[
    ("zcb", ZCB),
    ("zcb2", ZCB2),
    ("zcb3", ZCB3),
    ("cfg", CFG),
    ("installment", INSTALLMENT),
];

/// Parses a bundled program; panics if the bundled source is broken.
pub fn load(source: &str) -> Program {
    parse(source).unwrap_or_else(|e| panic!("bundled program does not parse: {e}"))
}

pub fn zcb() -> Program {
    load(ZCB)
}

pub fn zcb2() -> Program {
    load(ZCB2)
}

pub fn zcb3() -> Program {
    load(ZCB3)
}

pub fn cfg() -> Program {
    load(CFG)
}

pub fn installment() -> Program {
    load(INSTALLMENT)
}

pub fn by_name(name: &str) -> Option<Program> {
    ALL.iter().find(|(n, _)| n.eq_ignore_ascii_case(name)).map(|(_, s)| load(s))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::pretty;
    use crate::wellformed::check_wellformed;

    #[test]
    fn bundled_programs_are_wellformed_and_round_trip() {
        for (name, src) in ALL {
            let p = load(src);
            assert_eq!(check_wellformed(&p), vec![], "{name}");
            let printed = pretty(&p);
            let q = parse(&printed).unwrap_or_else(|e| panic!("{name}: {e}\n{printed}"));
            assert_eq!(p, q, "{name}");
        }
    }

    #[test]
    fn cfg_has_two_equations() {
        assert_eq!(cfg().equations.len(), 2);
    }
}
