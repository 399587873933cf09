mod common;

use bitml_core::{corpus, parse, pretty};
use common::ProgramGen;
use proptest::prelude::*;

#[test]
fn corpus_round_trips() {
    for (name, src) in corpus::ALL {
        let p = parse(src).unwrap();
        let text = pretty(&p);
        assert_eq!(parse(&text).unwrap_or_else(|e| panic!("{name}: {e}\n{text}")), p, "{name}");
        assert_eq!(pretty(&parse(&text).unwrap()), text, "{name}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]
    #[test]
    fn generated_programs_round_trip(seed in any::<u64>()) {
        let p = ProgramGen::new(seed).program();
        let text = pretty(&p);
        let back = parse(&text).map_err(|e| TestCaseError::fail(format!("{e}\n{text}")))?;
        prop_assert_eq!(back, p, "{}", text);
    }
}
