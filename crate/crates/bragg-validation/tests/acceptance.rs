use std::process::ExitCode;

use bragg_validation::criteria;

fn main() -> ExitCode {
    let mut failed = 0;
    for c in criteria() {
        let r = c.run();
        if !r.pass {
            failed += 1;
        }
        println!(
            "[{}] {}. {}: {} ({:.1} s, budget {} s)",
            if r.pass { "PASS" } else { "FAIL" },
            c.id,
            c.name,
            r.detail,
            r.elapsed.as_secs_f64(),
            c.budget.as_secs()
        );
    }
    println!("acceptance: {} of 9 criteria failed", failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
