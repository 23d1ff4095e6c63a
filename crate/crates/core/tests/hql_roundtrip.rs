use std::collections::BTreeMap;

use minihive::hql::*;
use minihive::metastore::StorageFormat;
use minihive::DataType;
use proptest::prelude::*;

fn ident() -> impl Strategy<Value = String> {
    prop_oneof![
        "[a-z_][a-z0-9_]{0,8}",
        Just("select".to_string()),
        Just("count".to_string()),
        Just("avg".to_string()),
        Just("from".to_string()),
        "[a-z][a-z ]{0,5}[a-z`]",
    ]
}

fn dtype() -> impl Strategy<Value = DataType> {
    prop_oneof![Just(DataType::Int), Just(DataType::Double), Just(DataType::String)]
}

fn literal() -> impl Strategy<Value = Literal> {
    prop_oneof![
        any::<i64>().prop_map(Literal::Int),
        any::<f64>()
            .prop_filter("finite", |v| v.is_finite())
            .prop_map(Literal::Double),
        "[ -~]{0,10}".prop_map(Literal::Str),
    ]
}

fn qualified() -> impl Strategy<Value = QualifiedName> {
    (proptest::option::of(ident()), ident()).prop_map(|(database, name)| QualifiedName { database, name })
}

fn column_ref() -> impl Strategy<Value = ColumnRef> {
    (proptest::option::of(ident()), ident()).prop_map(|(qualifier, name)| ColumnRef { qualifier, name })
}

fn op() -> impl Strategy<Value = CompareOp> {
    prop_oneof![
        Just(CompareOp::Eq),
        Just(CompareOp::NotEq),
        Just(CompareOp::Lt),
        Just(CompareOp::LtEq),
        Just(CompareOp::Gt),
        Just(CompareOp::GtEq),
    ]
}

fn table_ref() -> impl Strategy<Value = TableRef> {
    (qualified(), proptest::option::of(ident())).prop_map(|(name, alias)| TableRef { name, alias })
}

fn aggregate() -> impl Strategy<Value = Expr> {
    prop_oneof![
        Just(Expr::Aggregate { func: AggregateFunc::CountStar, arg: None }),
        (
            prop_oneof![Just(AggregateFunc::Count), Just(AggregateFunc::Sum), Just(AggregateFunc::Avg)],
            column_ref()
        )
            .prop_map(|(func, c)| Expr::Aggregate { func, arg: Some(c) }),
    ]
}

fn select() -> impl Strategy<Value = Select> {
    let joins = proptest::collection::vec(
        (
            table_ref(),
            proptest::collection::vec((column_ref(), column_ref()), 1..3),
        )
            .prop_map(|(table, on)| Join { table, on })
            .prop_filter("distinct qualifiers", |j| {
                j.on.iter().all(|(l, r)| l.qualifier.is_none() || l.qualifier != r.qualifier)
            }),
        0..3,
    );
    let selection = proptest::collection::vec(
        (column_ref(), op(), literal()).prop_map(|(column, op, value)| Comparison { column, op, value }),
        0..3,
    );
    let plain = (
        proptest::collection::vec(
            prop_oneof![
                Just(SelectItem::Wildcard),
                (column_ref(), proptest::option::of(ident()))
                    .prop_map(|(c, alias)| SelectItem::Expr { expr: Expr::Column(c), alias }),
            ],
            1..4,
        ),
        proptest::collection::vec(
            (column_ref(), any::<bool>()).prop_map(|(c, descending)| OrderItem {
                expr: Expr::Column(c),
                descending,
            }),
            0..3,
        ),
    )
        .prop_map(|(projections, order_by)| (projections, Vec::new(), order_by));
    let grouped = (
        proptest::collection::vec(column_ref(), 1..3),
        proptest::collection::vec((aggregate(), proptest::option::of(ident())), 1..3),
        any::<bool>(),
    )
        .prop_map(|(group_by, aggs, order_first)| {
            let mut projections: Vec<SelectItem> = group_by
                .iter()
                .map(|c| SelectItem::Expr { expr: Expr::Column(c.clone()), alias: None })
                .collect();
            let mut order_by = Vec::new();
            for (expr, alias) in aggs {
                order_by.push(OrderItem { expr: expr.clone(), descending: order_first });
                projections.push(SelectItem::Expr { expr, alias });
            }
            (projections, group_by, order_by)
        });
    (
        table_ref(),
        joins,
        selection,
        prop_oneof![plain, grouped],
        proptest::option::of(0u64..1000),
    )
        .prop_map(|(from, joins, selection, (projections, group_by, order_by), limit)| Select {
            projections,
            from,
            joins,
            selection,
            group_by,
            order_by,
            limit,
        })
}

fn partition_specs() -> impl Strategy<Value = Vec<PartitionSpec>> {
    proptest::collection::vec(
        prop_oneof![
            (ident(), literal()).prop_map(|(column, value)| PartitionSpec::Static { column, value }),
            ident().prop_map(|column| PartitionSpec::Dynamic { column }),
            (ident(), dtype()).prop_map(|(column, dtype)| PartitionSpec::Typed { column, dtype }),
        ],
        0..3,
    )
}

fn statement() -> impl Strategy<Value = Statement> {
    let columns = || {
        proptest::collection::vec((ident(), dtype()).prop_map(|(name, dtype)| ColumnSpec { name, dtype }), 1..4)
    };
    prop_oneof![
        (
            qualified(),
            columns(),
            proptest::option::of(columns()),
            proptest::option::of(prop_oneof![Just('\t'), Just(','), Just('\''), Just('|'), Just('\u{1}')]),
            prop_oneof![Just(StorageFormat::Textfile), Just(StorageFormat::Orclike)],
            proptest::collection::btree_map("[a-z.]{1,8}", "[ -~]{0,6}", 0..3),
        )
            .prop_map(|(name, columns, parts, field_delimiter, format, properties)| {
                Statement::CreateTable(CreateTable {
                    name,
                    columns,
                    partition_columns: parts.unwrap_or_default(),
                    field_delimiter,
                    format,
                    properties: properties.into_iter().collect::<BTreeMap<_, _>>(),
                })
            }),
        (any::<bool>(), "[ -~]{0,12}", any::<bool>(), qualified(), partition_specs()).prop_map(
            |(local, source, overwrite, table, partition)| Statement::LoadData(LoadData {
                local,
                source,
                overwrite,
                table,
                partition
            })
        ),
        (any::<bool>(), qualified(), partition_specs(), select()).prop_map(|(overwrite, table, partition, select)| {
            Statement::InsertSelect(InsertSelect { overwrite, table, partition, select })
        }),
        select().prop_map(Statement::Select),
        qualified().prop_map(Statement::Describe),
        qualified().prop_map(Statement::ShowPartitions),
        ("[a-z][a-z.]{0,12}", "[a-zA-Z0-9.]{0,12}")
            .prop_map(|(key, value)| Statement::SetOption { key, value }),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn parse_inverts_render(stmt in statement()) {
        let text = render(&stmt);
        let parsed = parse_statement(&text);
        prop_assert!(parsed.is_ok(), "{text}: {parsed:?}");
        prop_assert_eq!(parsed.unwrap(), stmt, "{}", text);
    }

    #[test]
    fn parser_never_panics(text in "[ -~\n]{0,80}") {
        let _ = parse(&text);
    }

    #[test]
    fn keyword_soup_never_panics(words in proptest::collection::vec(
        prop_oneof![
            Just("select"), Just("from"), Just("t"), Just("a"), Just("("), Just(")"), Just(","),
            Just("join"), Just("on"), Just("="), Just("where"), Just("group"), Just("by"),
            Just("count"), Just("*"), Just("'x'"), Just("1"), Just("-"), Just("order"), Just(";"),
            Just("partition"), Just("insert"), Just("into"), Just("table"), Just("create"),
        ],
        0..20,
    )) {
        let _ = parse(&words.join(" "));
    }
}
