//! The HiveQL subset: lexer, parser and canonical renderer.

pub mod ast;
mod lexer;
mod parser;
mod render;

pub use ast::*;
pub use parser::{parse, parse_statement};
pub use render::{expr as render_expr, render, select as render_select};

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;
    use crate::metastore::StorageFormat;
    use crate::types::DataType;

    const SALARIES: &str = r#"create table salaries (id INT,
rank STRING,
discipline STRING,
yrspnd INT,
yrsservice INT,
sex STRING,
salary DOUBLE) row format delimited fields terminated by ',' stored as textfile
tblproperties("skip.header.line.count"="1");"#;

    const CUSTOMER: &str = "CREATE TABLE customer (id INT, name STRING, surname STRING) PARTITIONED BY
(city STRING);

LOAD DATA LOCAL INPATH '/data/customer.txt' INTO TABLE customer PARTITION
(city STRING);";

    const OCCUPATIONS: &str = "SELECT a.occ_code, c.occ_name, COUNT(*) AS cnt, AVG(b.value) AS avg
FROM occup a
JOIN occupdata b ON (a.sid = b.sid)
JOIN jobs c ON (a.occ_code = c.occ_code)
GROUP BY a.occ_code, c.occ_name
ORDER BY avg DESC";

    const HOUSES_PART: &str = r#"CREATE TABLE houses_part (
id STRING, price STRING, dateoftransfer STRING, oldNew STRING, duration
STRING, city STRING, district STRING, county STRING, ppd STRING, status
STRING)
PARTITIONED BY (propertytype STRING)
ROW FORMAT DELIMITED FIELDS TERMINATED BY ',' STORED AS TEXTFILE
TBLPROPERTIES ("skip.header.line.count"="1");

INSERT INTO TABLE houses_part
PARTITION (propertytype)
SELECT id, price, dateoftransfer, oldNew, duration, city, district, county,
ppd, status, propertytype
FROM houses;"#;

    const ENGINE_QUERIES: &str = "select propertytype, count(*) from houses group by propertytype;
select PropertyType, sum(price) as sumprice, count(*) from houses group by PropertyType;
set hive.input.format=org.apache.hadoop.hive.ql.io.HiveInputFormat; set hive.merge.mapfiles=false; select PropertyType, sum(price) as sumprice, count(*) from houses group by PropertyType;
set hive.input.format=org.apache.hadoop.hive.ql.io.CombineHiveInputFormat;
set hive.merge.mapfiles=true;
select PropertyType, count(*) as count from houses_part group by PropertyType;
select PropertyType, count(*) as count from houses_part_orc group by PropertyType;
select * from salaries limit 4;
describe salaries;
SHOW PARTITIONS houses_part;";

    fn roundtrip(stmt: &Statement) {
        let text = render(stmt);
        let again = parse_statement(&text).unwrap_or_else(|e| panic!("{text}: {e}"));
        assert_eq!(&again, stmt, "{text}");
    }

    #[test]
    fn salaries_create_table() {
        let stmts = parse(SALARIES).unwrap();
        let Statement::CreateTable(c) = &stmts[0] else { panic!() };
        assert_eq!(c.columns.len(), 7);
        assert_eq!(c.columns[0].name, "id");
        assert_eq!(c.columns[6].dtype, DataType::Double);
        assert_eq!(c.field_delimiter, Some(','));
        assert_eq!(c.format, StorageFormat::Textfile);
        assert_eq!(c.properties["skip.header.line.count"], "1");
        roundtrip(&stmts[0]);
    }

    #[test]
    fn customer_script_parses_with_typed_partition() {
        let stmts = parse(CUSTOMER).unwrap();
        assert_eq!(stmts.len(), 2);
        let Statement::LoadData(l) = &stmts[1] else { panic!() };
        assert!(l.local);
        assert_eq!(
            l.partition,
            vec![PartitionSpec::Typed { column: "city".into(), dtype: DataType::String }]
        );
        stmts.iter().for_each(roundtrip);
    }

    #[test]
    fn three_table_join_query() {
        let Statement::Select(s) = parse_statement(OCCUPATIONS).unwrap() else { panic!() };
        assert_eq!(s.joins.len(), 2);
        assert_eq!(s.group_by.len(), 2);
        assert_eq!(s.order_by.len(), 1);
        assert!(s.order_by[0].descending);
        assert_eq!(s.order_by[0].expr, Expr::Column(ColumnRef::new(None, "avg")));
        roundtrip(&Statement::Select(s));
    }

    #[test]
    fn dynamic_partition_insert_is_a_fixed_point() {
        let stmts = parse(HOUSES_PART).unwrap();
        let Statement::InsertSelect(i) = &stmts[1] else { panic!() };
        assert_eq!(i.partition, vec![PartitionSpec::Dynamic { column: "propertytype".into() }]);
        assert_eq!(i.select.projections.len(), 11);
        let once = render(&stmts[1]);
        let twice = render(&parse_statement(&once).unwrap());
        assert_eq!(once, twice);
    }

    #[test]
    fn engine_queries_and_settings_parse() {
        let stmts = parse(ENGINE_QUERIES).unwrap();
        assert_eq!(stmts.len(), 12);
        assert_eq!(
            stmts[2],
            Statement::SetOption {
                key: "hive.input.format".into(),
                value: "org.apache.hadoop.hive.ql.io.HiveInputFormat".into()
            }
        );
        stmts.iter().for_each(roundtrip);
    }

    #[test]
    fn set_renders_directly() {
        let s = Statement::SetOption { key: "hive.execution.engine".into(), value: "tez".into() };
        assert_eq!(render(&s), "SET hive.execution.engine=tez;");
    }

    #[test]
    fn limit_renders() {
        let s = parse_statement("select * from salaries limit 4").unwrap();
        assert!(render(&s).contains("LIMIT 4"));
    }

    #[test]
    fn misspelled_keyword_is_a_syntax_error_at_that_token() {
        match parse("SELEC * FROM t;") {
            Err(Error::Syntax { token, position, .. }) => {
                assert_eq!(token, "SELEC");
                assert_eq!((position.line, position.column), (1, 1));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unsupported_constructs_are_rejected() {
        for (sql, kw) in [
            ("DROP TABLE t", "DROP"),
            ("select distinct a from t", "DISTINCT"),
            ("select a, count(*) from t group by a having count(*) > 1", "HAVING"),
            ("select a from t left join u on (t.a = u.a)", "LEFT JOIN"),
            ("select a from t join u on (t.a < u.a)", "non-equi join"),
            ("select a from (select a from t) x", "subquery"),
            ("select a from t where a = 1 or a = 2", "OR"),
            ("create view v", "CREATE VIEW"),
            ("show tables", "SHOW TABLES"),
        ] {
            match parse(sql) {
                Err(Error::UnsupportedStatement { keyword, .. }) => assert_eq!(keyword, kw, "{sql}"),
                other => panic!("{sql}: {other:?}"),
            }
        }
    }

    #[test]
    fn aggregate_placement_is_validated() {
        assert!(parse("select a, count(*) from t").is_err());
        assert!(parse("select * from t group by a").is_err());
        assert!(parse("select a, b from t group by a").is_err());
        assert!(parse("select count(*), sum(x) from t").is_ok());
        assert!(parse("select a, count(*) as n from t group by a order by n desc").is_ok());
        assert!(parse("select a from t order by b").is_ok());
    }

    #[test]
    fn literal_first_comparisons_are_flipped() {
        let Statement::Select(s) = parse_statement("select a from t where 5 < a").unwrap() else { panic!() };
        assert_eq!(s.selection[0].op, CompareOp::Gt);
        assert_eq!(s.selection[0].value, Literal::Int(5));
    }

    #[test]
    fn errors_carry_positions() {
        match parse("select a\nfrom t where") {
            Err(Error::Syntax { position, .. }) => assert_eq!(position.line, 2),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn tab_delimiter_escape_roundtrips() {
        let s = parse_statement("create table t (a int) row format delimited fields terminated by '\\t'").unwrap();
        let Statement::CreateTable(c) = &s else { panic!() };
        assert_eq!(c.field_delimiter, Some('\t'));
        roundtrip(&s);
    }
}
