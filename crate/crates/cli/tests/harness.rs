use calabi_cli::verify::{verify_suite, Level};
use calabi_core::Conventions;

#[test]
fn flipped_hamiltonian_sign_fails_at_least_three_checks() {
    let tampered = Conventions {
        hamiltonian_sign: -1.0,
        ..Conventions::validated()
    };
    let report = verify_suite(Level::Quick, &tampered);
    println!("{}", report.render());
    let ids: Vec<u32> = report.rows.iter().map(|r| r.id).collect();
    assert_eq!(ids, (1..=12).collect::<Vec<_>>(), "one row per criterion");
    let failed: Vec<u32> = report.rows.iter().filter(|r| !r.pass).map(|r| r.id).collect();
    assert!(failed.len() >= 3, "only {failed:?} failed");
    assert_eq!(report.exit_code(), 1);
}
