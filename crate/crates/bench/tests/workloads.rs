use miniform::RunOptions;
use miniform_bench::{bracket_lookups, determinant, expansion, run, stuffle};

#[test]
fn workloads_run_cleanly() {
    let opts = RunOptions::default();
    assert_eq!(run(&expansion(3, 4), &opts).session.expression("F").unwrap().len(), 15);
    let det = run(&determinant(3), &opts);
    // entries (i + 2j) mod 7: rows [3,5,0], [4,6,1], [5,0,2]
    assert_eq!(det.session.expression("F").unwrap().as_i64(), Some(21));
    assert_eq!(run(&stuffle(&[1], &[1]), &opts).session.expression("F").unwrap().len(), 2);
    let r = run(&bracket_lookups(3, true), &opts);
    assert_eq!(r.session.expression("F3").unwrap().as_i64(), Some(1));
}
