use std::path::Path;

use proptest::prelude::*;
use snap_bench::harness::{BenchReport, Cell};
use snap_bench::io::{numeric_csv, parse_table};
use snap_bench::report::{parse_report_csv, report_csv};

fn cells() -> impl Strategy<Value = Vec<Cell>> {
    prop::collection::vec(
        (
            "[a-z=0-9]{1,8}",
            "[a-z0-9/-]{1,16}",
            -1e6..1e6f64,
            0.0..1e3f64,
            0.0..10.0f64,
        )
            .prop_map(|(group, method, param, mean_error, wall_seconds)| Cell {
                group,
                method,
                param,
                mean_error,
                wall_seconds,
            }),
        0..20,
    )
}

proptest! {
    #[test]
    fn report_csv_round_trips(cells in cells(), seed in any::<u64>()) {
        let report = BenchReport { experiment: "vector-avg".into(), seed, trials: 1, cells };
        let back = parse_report_csv(&report_csv(&report, true)).unwrap();
        prop_assert_eq!(back, report.cells);
    }

    #[test]
    fn numeric_csv_round_trips(rows in prop::collection::vec(prop::collection::vec(-1e300..1e300f64, 3), 1..20)) {
        let text = numeric_csv(&["a", "b", "c"], &rows);
        let table = parse_table(&text, Path::new("-")).unwrap();
        prop_assert_eq!(table.rows, rows);
    }
}
