use hdltex_core::hierarchy::combined_accuracy;

struct Row {
    name: String,
    parent: f64,
    child: f64,
    overall: f64,
}

fn rows() -> Vec<Row> {
    include_str!("fixtures/table3.tsv")
        .lines()
        .filter(|l| !l.starts_with('#') && !l.is_empty())
        .map(|l| {
            let f: Vec<&str> = l.split('\t').collect();
            Row {
                name: format!("{} {}/{}", f[0], f[1], f[2]),
                parent: f[3].parse().unwrap(),
                child: f[4].parse().unwrap(),
                overall: f[5].parse().unwrap(),
            }
        })
        .collect()
}

fn product(r: &Row) -> f64 {
    100.0 * combined_accuracy(r.parent / 100.0, &[(r.child / 100.0, 1)]).unwrap()
}

// Worst-case gap between the exact product and a printed overall when all
// three figures are rounded to two decimals.
fn rounding_bound(r: &Row) -> f64 {
    let h = 0.005;
    ((r.parent + h) * (r.child + h) / 100.0 - product(r)).max(product(r) - (r.parent - h) * (r.child - h) / 100.0) + h
}

#[test]
fn fixture_has_all_rows() {
    assert_eq!(rows().len(), 27);
}

#[test]
fn rows_within_two_decimal_tolerance() {
    let within = rows().iter().filter(|r| (product(r) - r.overall).abs() <= 0.005).count();
    assert_eq!(within, 19);
}

#[test]
fn rows_outside_rounding_interval() {
    let outside: Vec<String> = rows()
        .into_iter()
        .filter(|r| (product(r) - r.overall).abs() > rounding_bound(r))
        .map(|r| r.name)
        .collect();
    assert_eq!(outside, ["WOS-11967 cnn/cnn", "WOS-46985 rnn/cnn"]);
}
