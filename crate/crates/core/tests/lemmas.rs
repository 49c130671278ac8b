use gsee_lab::lemmas::*;

#[test]
fn suite_has_no_violations() {
    let r = lemma_suite().unwrap();
    assert!(r.gaussian_tuples >= 200);
    let bad: Vec<_> = r.violations().collect();
    assert!(bad.is_empty(), "{bad:#?}");
    assert!(r.into_result().is_ok());
}
