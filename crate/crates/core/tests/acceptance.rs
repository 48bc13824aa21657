//! One line per acceptance criterion. Exits nonzero when a criterion fails
//! without a documented known deviation.

use std::io::Write;

use odetype::acceptance::{CriterionOutcome, Suite};

fn main() {
    let mut suite = Suite::default();
    let criteria: [fn(&mut Suite) -> CriterionOutcome; 9] = [
        Suite::criterion_1,
        Suite::criterion_2,
        Suite::criterion_3,
        Suite::criterion_4,
        Suite::criterion_5,
        Suite::criterion_6,
        Suite::criterion_7,
        Suite::criterion_8,
        Suite::criterion_9,
    ];
    let mut unexpected = 0;
    for criterion in criteria {
        let outcome = criterion(&mut suite);
        println!("{}", outcome.line_timed());
        let _ = std::io::stdout().flush();
        if outcome.unexpected_failure() {
            unexpected += 1;
        }
    }
    if unexpected > 0 {
        println!("{unexpected} criteria failed");
        std::process::exit(1);
    }
}
