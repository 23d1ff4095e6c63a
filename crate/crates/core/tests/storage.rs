use minihive::dfs::Dfs;
use minihive::hql::CompareOp;
use minihive::metastore::{ColumnDef, PartitionKey, StorageFormat, TableDef, TableSpec, DEFAULT_WAREHOUSE_ROOT};
use minihive::storage::*;
use minihive::{DataType, Datum, Row};
use proptest::prelude::*;

fn salaries() -> TableDef {
    let cols = [
        ("id", DataType::Int),
        ("rank", DataType::String),
        ("discipline", DataType::String),
        ("yrspnd", DataType::Int),
        ("yrsservice", DataType::Int),
        ("sex", DataType::String),
        ("salary", DataType::Double),
    ]
    .iter()
    .map(|(n, t)| ColumnDef::new(n, *t))
    .collect();
    let spec = TableSpec::new("default", "salaries", cols)
        .delimiter(',')
        .property("skip.header.line.count", "1");
    TableDef::from_spec(spec, DEFAULT_WAREHOUSE_ROOT).unwrap()
}

fn mixed(format: StorageFormat) -> TableDef {
    let cols = vec![
        ColumnDef::new("k", DataType::Int),
        ColumnDef::new("v", DataType::Double),
        ColumnDef::new("s", DataType::String),
    ];
    TableDef::from_spec(TableSpec::new("default", "m", cols).delimiter('|').format(format), DEFAULT_WAREHOUSE_ROOT)
        .unwrap()
}

fn datum(dtype: DataType) -> BoxedStrategy<Datum> {
    let v = match dtype {
        DataType::Int => (-50i64..50).prop_map(Datum::Int).boxed(),
        DataType::Double => (-1e6f64..1e6).prop_map(Datum::Double).boxed(),
        DataType::String => "[a-e]{1,4}".prop_map(Datum::Str).boxed(),
    };
    prop_oneof![1 => Just(Datum::Null), 6 => v].boxed()
}

fn rows(max: usize) -> impl Strategy<Value = Vec<Row>> {
    proptest::collection::vec(
        (datum(DataType::Int), datum(DataType::Double), datum(DataType::String)).prop_map(|(a, b, c)| vec![a, b, c]),
        0..max,
    )
}

fn sorted(mut rows: Vec<Row>) -> Vec<Row> {
    rows.sort();
    rows
}

#[test]
fn salaries_head_reads_with_null_ids() {
    let dfs = Dfs::in_memory();
    let t = salaries();
    let csv = include_bytes!("data/salaries.csv");
    dfs.write_file(&format!("{}/Salaries.csv", t.location), csv).unwrap();
    let out = scan_table(&dfs, &t, None, &ScanOptions::all_columns(&t)).unwrap();
    assert_eq!(out.rows.len(), 6);
    let s = |v: &str| Datum::Str(v.to_string());
    assert_eq!(
        out.rows[0],
        vec![Datum::Null, s(" \"Prof\""), s(" \"B\""), Datum::Int(19), Datum::Int(18), s(" \"Male\""), Datum::Double(139750.0)]
    );
    assert_eq!(out.rows[3][6], Datum::Double(129000.0));
    assert_eq!(out.bytes_read, csv.len() as u64);
}

#[test]
fn header_only_file_yields_nothing() {
    let dfs = Dfs::in_memory();
    let t = salaries();
    dfs.write_file(&format!("{}/h.csv", t.location), b"a,b,c\n").unwrap();
    assert!(scan_table(&dfs, &t, None, &ScanOptions::all_columns(&t)).unwrap().rows.is_empty());
}

#[test]
fn short_rows_are_padded_with_nulls() {
    let dfs = Dfs::in_memory();
    let t = salaries();
    dfs.write_file(&format!("{}/f", t.location), b"hdr\n1,a,b,2,3\n").unwrap();
    let out = scan_table(&dfs, &t, None, &ScanOptions::all_columns(&t)).unwrap();
    assert_eq!(out.rows[0][3], Datum::Int(2));
    assert_eq!(out.rows[0][5], Datum::Null);
    assert_eq!(out.rows[0][6], Datum::Null);
}

#[test]
fn zero_rows_write_an_empty_text_file() {
    let dfs = Dfs::in_memory();
    let t = mixed(StorageFormat::Textfile);
    assert_eq!(write_rows(&dfs, "/x/f", &t, &[], DEFAULT_STRIPE_ROWS).unwrap(), 0);
}

#[test]
fn partition_values_come_from_the_directory() {
    let dfs = Dfs::in_memory();
    let cols = vec![ColumnDef::new("id", DataType::Int)];
    let t = TableDef::from_spec(
        TableSpec::new("default", "c", cols)
            .delimiter(',')
            .partitioned_by(vec![ColumnDef::new("city", DataType::String)]),
        DEFAULT_WAREHOUSE_ROOT,
    )
    .unwrap();
    let key = PartitionKey::single("city", "Baku");
    dfs.write_file(&format!("{}/f", t.partition_dir(&key)), b"1\n2\n").unwrap();
    let out = scan_table(&dfs, &t, None, &ScanOptions::all_columns(&t)).unwrap();
    assert_eq!(out.rows, vec![vec![Datum::Int(1), Datum::from("Baku")], vec![Datum::Int(2), Datum::from("Baku")]]);
}

#[test]
fn clustered_columnar_data_skips_stripes() {
    let dfs = Dfs::in_memory();
    let t = mixed(StorageFormat::Orclike);
    let data: Vec<Row> = (0..10_000).map(|i| vec![Datum::Int(i / 100), Datum::Double(i as f64), Datum::from("x")]).collect();
    let size = write_rows(&dfs, "/o/f", &t, &data, 1000).unwrap();
    let split = FileSplit::whole("/o/f", size);
    let pred = vec![ColumnPredicate { column: 0, op: CompareOp::Eq, value: Datum::Int(42) }];
    let mut opts = ScanOptions { projection: vec![0, 1], predicates: pred, stripe_skipping: true };
    let skipped = scan_split(&dfs, &t, None, &split, &opts).unwrap();
    opts.stripe_skipping = false;
    let full = scan_split(&dfs, &t, None, &split, &opts).unwrap();
    assert_eq!(skipped.rows, full.rows);
    assert_eq!(skipped.rows.len(), 100);
    assert_eq!(skipped.stripes_total, 10);
    assert_eq!(skipped.stripes_skipped, 9);
    assert!(skipped.bytes_read < full.bytes_read);
    assert!(full.bytes_read < size, "projection must not read the unused column");

    let before = dfs.ledger().snapshot();
    let none = scan_split(
        &dfs,
        &t,
        None,
        &split,
        &ScanOptions {
            projection: vec![0],
            predicates: vec![ColumnPredicate { column: 0, op: CompareOp::Gt, value: Datum::Int(1000) }],
            stripe_skipping: true,
        },
    )
    .unwrap();
    assert!(none.rows.is_empty());
    assert_eq!(none.stripes_skipped, 10);
    assert_eq!((dfs.ledger().snapshot() - before).bytes_read, none.bytes_read);
    let (meta, meta_bytes) = read_columnar_meta(&dfs, "/o/f").unwrap();
    assert_eq!(none.bytes_read, meta_bytes);
    assert_eq!(meta_bytes, 8 + meta.header_len + 12);
}

#[test]
fn fingerprint_mismatch_is_a_format_error() {
    let dfs = Dfs::in_memory();
    let t = mixed(StorageFormat::Orclike);
    let size = write_rows(&dfs, "/o/f", &t, &[vec![Datum::Int(1), Datum::Null, Datum::Null]], 10).unwrap();
    let mut other = t.clone();
    other.columns[0].name = "q".into();
    let err = scan_split(&dfs, &other, None, &FileSplit::whole("/o/f", size), &ScanOptions::all_columns(&other));
    assert!(matches!(err, Err(minihive::Error::Format(_))));
}

#[test]
fn low_cardinality_columnar_is_at_most_half_of_text() {
    let mut text_t = mixed(StorageFormat::Textfile);
    text_t.field_delimiter = ',';
    let orc_t = mixed(StorageFormat::Orclike);
    let data: Vec<Row> = (0..20_000)
        .map(|i| vec![Datum::Int(i % 7), Datum::Double((i % 13) as f64 * 1000.0), Datum::from(["Baku", "Sheki"][i as usize % 2])])
        .collect();
    let text = encode_rows(&text_t, &data, DEFAULT_STRIPE_ROWS).unwrap();
    let orc = encode_rows(&orc_t, &data, DEFAULT_STRIPE_ROWS).unwrap();
    assert!(orc.len() * 2 <= text.len(), "{} vs {}", orc.len(), text.len());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn text_roundtrip_and_any_split_cover(data in rows(200), cuts in proptest::collection::vec(0u64..4000, 0..6)) {
        let dfs = Dfs::in_memory();
        let t = mixed(StorageFormat::Textfile);
        let size = write_rows(&dfs, "/t/f", &t, &data, DEFAULT_STRIPE_ROWS).unwrap();
        let opts = ScanOptions::all_columns(&t);
        let whole = scan_split(&dfs, &t, None, &FileSplit::whole("/t/f", size), &opts).unwrap();
        // NULL and "" share the empty token in text.
        let expect: Vec<Row> = data.iter().map(|r| {
            let mut r = r.clone();
            if r[2].is_null() { r[2] = Datum::from(""); }
            r
        }).collect();
        prop_assert_eq!(&whole.rows, &expect);

        let mut bounds: Vec<u64> = cuts.into_iter().filter(|c| *c < size).collect();
        bounds.push(0);
        bounds.push(size);
        bounds.sort();
        bounds.dedup();
        let mut pieces = Vec::new();
        for w in bounds.windows(2) {
            let split = FileSplit { path: "/t/f".into(), offset: w[0], length: w[1] - w[0], file_size: size };
            pieces.extend(scan_split(&dfs, &t, None, &split, &opts).unwrap().rows);
        }
        prop_assert_eq!(pieces, expect);
    }

    #[test]
    fn columnar_matches_text_and_skipping_is_sound(
        data in rows(300),
        stripe in 1usize..64,
        col in 0usize..3,
        op in prop_oneof![Just(CompareOp::Eq), Just(CompareOp::NotEq), Just(CompareOp::Lt), Just(CompareOp::LtEq), Just(CompareOp::Gt), Just(CompareOp::GtEq)],
        pivot in datum(DataType::Int),
    ) {
        let dfs = Dfs::in_memory();
        let t = mixed(StorageFormat::Textfile);
        let o = mixed(StorageFormat::Orclike);
        let data: Vec<Row> = data.into_iter().map(|mut r| { if r[2].is_null() { r[2] = Datum::from(""); } r }).collect();
        let ts = write_rows(&dfs, "/t/f", &t, &data, stripe).unwrap();
        let os = write_rows(&dfs, "/o/f", &o, &data, stripe).unwrap();
        let value = match (col, pivot) {
            (_, Datum::Null) => Datum::Int(0),
            (2, Datum::Int(v)) => Datum::Str(["a", "c", "e"][v.rem_euclid(3) as usize].into()),
            (_, v) => v,
        };
        let mut opts = ScanOptions {
            projection: vec![2, 0],
            predicates: vec![ColumnPredicate { column: col, op, value }],
            stripe_skipping: true,
        };
        let text = scan_split(&dfs, &t, None, &FileSplit::whole("/t/f", ts), &opts).unwrap();
        let orc = scan_split(&dfs, &o, None, &FileSplit::whole("/o/f", os), &opts).unwrap();
        opts.stripe_skipping = false;
        let orc_full = scan_split(&dfs, &o, None, &FileSplit::whole("/o/f", os), &opts).unwrap();
        prop_assert_eq!(&orc.rows, &orc_full.rows);
        prop_assert_eq!(sorted(text.rows), sorted(orc.rows));
        prop_assert_eq!(orc.stripes_total, data.len().div_ceil(stripe) as u64);
    }

    #[test]
    fn stats_bound_every_value(data in rows(200), stripe in 1usize..50) {
        let dfs = Dfs::in_memory();
        let o = mixed(StorageFormat::Orclike);
        write_rows(&dfs, "/o/f", &o, &data, stripe).unwrap();
        let (meta, _) = read_columnar_meta(&dfs, "/o/f").unwrap();
        let mut start = 0usize;
        for s in &meta.stripes {
            let chunk = &data[start..start + s.row_count as usize];
            for (c, stats) in s.columns.iter().enumerate() {
                let nulls = chunk.iter().filter(|r| r[c].is_null()).count() as u64;
                prop_assert_eq!(stats.null_count, nulls);
                for r in chunk.iter().filter(|r| !r[c].is_null()) {
                    let (lo, hi) = stats.min_max.as_ref().unwrap();
                    prop_assert!(lo <= &r[c] && &r[c] <= hi);
                }
            }
            start += s.row_count as usize;
        }
    }
}
