use chords::harness::{run_verification_suite, Level};

#[test]
fn fast_suite_passes_and_is_seed_stable() {
    let a = run_verification_suite(Level::Fast, 1);
    for c in &a.checks {
        println!("{:<30} {} {:>7.2}s  {}", c.name, if c.passed { "ok  " } else { "FAIL" }, c.seconds, c.detail);
    }
    assert!(a.all_passed);
    let b = run_verification_suite(Level::Fast, 2);
    let pattern = |r: &chords::harness::VerificationReport| r.checks.iter().map(|c| c.passed).collect::<Vec<_>>();
    assert_eq!(pattern(&a), pattern(&b));
}
