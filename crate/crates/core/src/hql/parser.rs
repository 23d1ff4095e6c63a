use std::collections::BTreeMap;

use super::ast::*;
use super::lexer::{tokenize, Token, TokenKind};
use crate::error::{Error, Position, Result};
use crate::metastore::StorageFormat;
use crate::types::DataType;

/// Words that end an expression or table reference, so they can never be a
/// bare alias.
pub(crate) const RESERVED: &[&str] = &[
    "select", "from", "where", "group", "order", "limit", "join", "inner", "left", "right",
    "full", "cross", "on", "and", "or", "not", "as", "having", "union", "sort", "cluster",
    "distribute", "partitioned", "row", "stored", "tblproperties", "partition", "by", "asc",
    "desc", "into", "overwrite", "table", "inpath",
];

/// Leading keywords of HiveQL statements outside the supported subset.
const UNSUPPORTED_LEADING: &[&str] = &[
    "drop", "alter", "update", "delete", "truncate", "use", "merge", "grant", "revoke",
    "analyze", "explain", "with", "msck", "export", "import", "from", "values", "show",
];

pub struct Parser<'a> {
    src: &'a str,
    tokens: Vec<Token>,
    pos: usize,
}

/// Parses a script into statements. Statements are separated by `;`.
pub fn parse(text: &str) -> Result<Vec<Statement>> {
    let mut p = Parser::new(text)?;
    let mut out = Vec::new();
    loop {
        while p.eat(&TokenKind::Semicolon) {}
        if p.at_eof() {
            break;
        }
        out.push(p.statement()?);
        if !p.at_eof() {
            p.expect(&TokenKind::Semicolon, "';' after statement")?;
        }
    }
    Ok(out)
}

/// Parses exactly one statement (a trailing `;` is optional).
pub fn parse_statement(text: &str) -> Result<Statement> {
    let mut stmts = parse(text)?;
    match stmts.len() {
        1 => Ok(stmts.pop().unwrap()),
        0 => Err(Error::Syntax {
            position: Position { line: 1, column: 1 },
            token: "<end of input>".into(),
            message: "expected a statement".into(),
        }),
        _ => Err(Error::Syntax {
            position: Position { line: 1, column: 1 },
            token: text.chars().take(20).collect(),
            message: "expected a single statement".into(),
        }),
    }
}

impl<'a> Parser<'a> {
    pub fn new(src: &'a str) -> Result<Self> {
        Ok(Self {
            src,
            tokens: tokenize(src)?,
            pos: 0,
        })
    }

    fn peek(&self) -> &Token {
        &self.tokens[self.pos]
    }

    fn peek_at(&self, n: usize) -> &Token {
        let i = (self.pos + n).min(self.tokens.len() - 1);
        &self.tokens[i]
    }

    fn at_eof(&self) -> bool {
        matches!(self.peek().kind, TokenKind::Eof)
    }

    fn advance(&mut self) -> Token {
        let t = self.tokens[self.pos].clone();
        if !matches!(t.kind, TokenKind::Eof) {
            self.pos += 1;
        }
        t
    }

    fn eat(&mut self, kind: &TokenKind) -> bool {
        if &self.peek().kind == kind {
            self.advance();
            true
        } else {
            false
        }
    }

    fn peek_word(&self, kw: &str) -> bool {
        self.peek().is_word(kw)
    }

    fn eat_word(&mut self, kw: &str) -> bool {
        if self.peek_word(kw) {
            self.advance();
            true
        } else {
            false
        }
    }

    fn error_at(&self, tok: &Token, message: impl Into<String>) -> Error {
        Error::Syntax {
            position: tok.position,
            token: tok.text(self.src).to_string(),
            message: message.into(),
        }
    }

    fn error(&self, message: impl Into<String>) -> Error {
        self.error_at(self.peek(), message)
    }

    fn unsupported_at(&self, tok: &Token, what: impl Into<String>) -> Error {
        Error::UnsupportedStatement {
            position: tok.position,
            keyword: what.into(),
        }
    }

    fn expect(&mut self, kind: &TokenKind, what: &str) -> Result<Token> {
        if &self.peek().kind == kind {
            Ok(self.advance())
        } else {
            Err(self.error(format!("expected {what}")))
        }
    }

    fn expect_word(&mut self, kw: &str) -> Result<()> {
        if self.eat_word(kw) {
            Ok(())
        } else {
            Err(self.error(format!("expected {}", kw.to_ascii_uppercase())))
        }
    }

    fn identifier(&mut self, what: &str) -> Result<String> {
        match &self.peek().kind {
            TokenKind::Word(w) => {
                let w = w.to_ascii_lowercase();
                self.advance();
                Ok(w)
            }
            TokenKind::QuotedIdent(w) => {
                let w = w.to_ascii_lowercase();
                self.advance();
                Ok(w)
            }
            _ => Err(self.error(format!("expected {what}"))),
        }
    }

    fn is_identifier_start(&self) -> bool {
        matches!(self.peek().kind, TokenKind::Word(_) | TokenKind::QuotedIdent(_))
    }

    fn statement(&mut self) -> Result<Statement> {
        let tok = self.peek().clone();
        let word = match &tok.kind {
            TokenKind::Word(w) => w.to_ascii_lowercase(),
            _ => return Err(self.error_at(&tok, "expected a statement")),
        };
        match word.as_str() {
            "create" => self.create_table().map(Statement::CreateTable),
            "load" => self.load_data().map(Statement::LoadData),
            "insert" => self.insert().map(Statement::InsertSelect),
            "select" => self.select().map(Statement::Select),
            "describe" | "desc" => {
                self.advance();
                if self.peek_word("extended") || self.peek_word("formatted") {
                    let t = self.peek().clone();
                    return Err(self.unsupported_at(&t, format!("DESCRIBE {}", t.text(self.src).to_ascii_uppercase())));
                }
                Ok(Statement::Describe(self.qualified_name()?))
            }
            "show" if self.peek_at(1).is_word("partitions") => {
                self.advance();
                self.advance();
                Ok(Statement::ShowPartitions(self.qualified_name()?))
            }
            "set" => self.set_option(),
            w if UNSUPPORTED_LEADING.contains(&w) => {
                let mut keyword = w.to_ascii_uppercase();
                if w == "show" {
                    if let TokenKind::Word(next) = &self.peek_at(1).kind {
                        keyword = format!("SHOW {}", next.to_ascii_uppercase());
                    }
                }
                Err(self.unsupported_at(&tok, keyword))
            }
            _ => Err(self.error_at(&tok, "unknown statement")),
        }
    }

    fn qualified_name(&mut self) -> Result<QualifiedName> {
        let first = self.identifier("a table name")?;
        if self.eat(&TokenKind::Dot) {
            let second = self.identifier("a table name")?;
            Ok(QualifiedName {
                database: Some(first),
                name: second,
            })
        } else {
            Ok(QualifiedName {
                database: None,
                name: first,
            })
        }
    }

    fn data_type(&mut self) -> Result<DataType> {
        let tok = self.peek().clone();
        match &tok.kind {
            TokenKind::Word(w) => match DataType::from_keyword(w) {
                Some(t) => {
                    self.advance();
                    Ok(t)
                }
                None => Err(self.unsupported_at(&tok, format!("column type {}", w.to_ascii_uppercase()))),
            },
            _ => Err(self.error_at(&tok, "expected a column type")),
        }
    }

    fn column_list(&mut self) -> Result<Vec<ColumnSpec>> {
        self.expect(&TokenKind::LParen, "'('")?;
        let mut cols = Vec::new();
        loop {
            let name = self.identifier("a column name")?;
            let dtype = self.data_type()?;
            cols.push(ColumnSpec { name, dtype });
            if !self.eat(&TokenKind::Comma) {
                break;
            }
        }
        self.expect(&TokenKind::RParen, "')'")?;
        Ok(cols)
    }

    fn string_literal(&mut self, what: &str) -> Result<String> {
        match &self.peek().kind {
            TokenKind::Str(s) => {
                let s = s.clone();
                self.advance();
                Ok(s)
            }
            _ => Err(self.error(format!("expected {what}"))),
        }
    }

    fn create_table(&mut self) -> Result<CreateTable> {
        self.expect_word("create")?;
        if !self.peek_word("table") {
            let t = self.peek().clone();
            return Err(self.unsupported_at(&t, format!("CREATE {}", t.text(self.src).to_ascii_uppercase())));
        }
        self.advance();
        let name = self.qualified_name()?;
        let columns = self.column_list()?;
        let mut partition_columns = None;
        let mut field_delimiter = None;
        let mut format = None;
        let mut properties = None;
        loop {
            let tok = self.peek().clone();
            if self.eat_word("partitioned") {
                self.expect_word("by")?;
                if partition_columns.is_some() {
                    return Err(self.error_at(&tok, "duplicate PARTITIONED BY clause"));
                }
                partition_columns = Some(self.column_list()?);
            } else if self.eat_word("row") {
                self.expect_word("format")?;
                self.expect_word("delimited")?;
                if field_delimiter.is_some() {
                    return Err(self.error_at(&tok, "duplicate ROW FORMAT clause"));
                }
                let mut delim = '\u{1}';
                if self.eat_word("fields") {
                    self.expect_word("terminated")?;
                    self.expect_word("by")?;
                    let lit_tok = self.peek().clone();
                    let raw = self.string_literal("a delimiter string")?;
                    delim = match raw.as_str() {
                        "\\t" => '\t',
                        _ => {
                            let mut chars = raw.chars();
                            match (chars.next(), chars.next()) {
                                (Some(c), None) if c != '\n' && c != '\r' => c,
                                _ => {
                                    return Err(self.error_at(&lit_tok, "delimiter must be a single character"))
                                }
                            }
                        }
                    };
                }
                field_delimiter = Some(delim);
            } else if self.eat_word("stored") {
                self.expect_word("as")?;
                if format.is_some() {
                    return Err(self.error_at(&tok, "duplicate STORED AS clause"));
                }
                let ftok = self.peek().clone();
                let f = self.identifier("a storage format")?;
                format = Some(match f.as_str() {
                    "textfile" => StorageFormat::Textfile,
                    "orc" | "orclike" => StorageFormat::Orclike,
                    other => {
                        return Err(self.unsupported_at(&ftok, format!("STORED AS {}", other.to_ascii_uppercase())))
                    }
                });
            } else if self.eat_word("tblproperties") {
                if properties.is_some() {
                    return Err(self.error_at(&tok, "duplicate TBLPROPERTIES clause"));
                }
                self.expect(&TokenKind::LParen, "'('")?;
                let mut props = BTreeMap::new();
                loop {
                    let key = self.string_literal("a property name")?;
                    self.expect(&TokenKind::Eq, "'='")?;
                    let value = self.string_literal("a property value")?;
                    props.insert(key, value);
                    if !self.eat(&TokenKind::Comma) {
                        break;
                    }
                }
                self.expect(&TokenKind::RParen, "')'")?;
                properties = Some(props);
            } else if self.peek_word("clustered") || self.peek_word("location") || self.peek_word("comment") {
                return Err(self.unsupported_at(&tok, tok.text(self.src).to_ascii_uppercase()));
            } else {
                break;
            }
        }
        Ok(CreateTable {
            name,
            columns,
            partition_columns: partition_columns.unwrap_or_default(),
            field_delimiter,
            format: format.unwrap_or(StorageFormat::Textfile),
            properties: properties.unwrap_or_default(),
        })
    }

    fn partition_clause(&mut self) -> Result<Vec<PartitionSpec>> {
        if !self.eat_word("partition") {
            return Ok(Vec::new());
        }
        self.expect(&TokenKind::LParen, "'('")?;
        let mut specs = Vec::new();
        loop {
            let column = self.identifier("a partition column")?;
            if self.eat(&TokenKind::Eq) {
                let value = self.literal()?;
                specs.push(PartitionSpec::Static { column, value });
            } else if matches!(self.peek().kind, TokenKind::Word(_)) && !self.peek_word("and") {
                let dtype = self.data_type()?;
                specs.push(PartitionSpec::Typed { column, dtype });
            } else {
                specs.push(PartitionSpec::Dynamic { column });
            }
            if !self.eat(&TokenKind::Comma) {
                break;
            }
        }
        self.expect(&TokenKind::RParen, "')'")?;
        Ok(specs)
    }

    fn load_data(&mut self) -> Result<LoadData> {
        self.expect_word("load")?;
        self.expect_word("data")?;
        let local = self.eat_word("local");
        self.expect_word("inpath")?;
        let source = self.string_literal("a quoted source path")?;
        let overwrite = self.eat_word("overwrite");
        self.expect_word("into")?;
        self.expect_word("table")?;
        let table = self.qualified_name()?;
        let partition = self.partition_clause()?;
        Ok(LoadData {
            local,
            source,
            overwrite,
            table,
            partition,
        })
    }

    fn insert(&mut self) -> Result<InsertSelect> {
        self.expect_word("insert")?;
        let overwrite = if self.eat_word("overwrite") {
            self.expect_word("table")?;
            true
        } else {
            self.expect_word("into")?;
            self.eat_word("table");
            false
        };
        let table = self.qualified_name()?;
        let partition = self.partition_clause()?;
        if !self.peek_word("select") {
            return Err(self.error("expected SELECT"));
        }
        let select = self.select()?;
        Ok(InsertSelect {
            overwrite,
            table,
            partition,
            select,
        })
    }

    fn set_option(&mut self) -> Result<Statement> {
        let set_tok = self.advance();
        let key_start = self.peek().start;
        let mut key_end = key_start;
        while !matches!(self.peek().kind, TokenKind::Eq | TokenKind::Semicolon | TokenKind::Eof) {
            key_end = self.advance().end;
        }
        let key = self.src[key_start..key_end].trim().to_string();
        if key.is_empty() {
            return Err(self.error_at(&set_tok, "expected an option name after SET"));
        }
        self.expect(&TokenKind::Eq, "'=' in SET")?;
        let value_start = self.peek().start;
        let mut value_end = value_start;
        while !matches!(self.peek().kind, TokenKind::Semicolon | TokenKind::Eof) {
            value_end = self.advance().end;
        }
        let value = self.src[value_start..value_end].trim().to_string();
        Ok(Statement::SetOption { key, value })
    }

    fn literal(&mut self) -> Result<Literal> {
        let tok = self.peek().clone();
        let negative = matches!(tok.kind, TokenKind::Minus);
        if negative {
            self.advance();
        }
        let num_tok = self.peek().clone();
        match &num_tok.kind {
            TokenKind::Integer(text) => {
                self.advance();
                let full = if negative { format!("-{text}") } else { text.clone() };
                full.parse::<i64>()
                    .map(Literal::Int)
                    .map_err(|_| self.error_at(&num_tok, "integer literal out of range"))
            }
            TokenKind::Decimal(text) => {
                self.advance();
                let v: f64 = text
                    .parse()
                    .map_err(|_| self.error_at(&num_tok, "malformed number"))?;
                if !v.is_finite() {
                    return Err(self.error_at(&num_tok, "number out of range"));
                }
                Ok(Literal::Double(if negative { -v } else { v }))
            }
            TokenKind::Str(s) if !negative => {
                let s = s.clone();
                self.advance();
                Ok(Literal::Str(s))
            }
            _ => Err(self.error_at(&num_tok, "expected a literal")),
        }
    }

    fn is_literal_start(&self) -> bool {
        match self.peek().kind {
            TokenKind::Integer(_) | TokenKind::Decimal(_) | TokenKind::Str(_) => true,
            TokenKind::Minus => matches!(
                self.peek_at(1).kind,
                TokenKind::Integer(_) | TokenKind::Decimal(_)
            ),
            _ => false,
        }
    }

    fn column_ref(&mut self) -> Result<ColumnRef> {
        let first = self.identifier("a column name")?;
        if self.peek().kind == TokenKind::Dot {
            if self.peek_at(1).kind == TokenKind::Star {
                let t = self.peek_at(1).clone();
                return Err(self.unsupported_at(&t, format!("{first}.* projection")));
            }
            self.advance();
            let second = self.identifier("a column name")?;
            Ok(ColumnRef {
                qualifier: Some(first),
                name: second,
            })
        } else {
            Ok(ColumnRef {
                qualifier: None,
                name: first,
            })
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let tok = self.peek().clone();
        if self.is_identifier_start() && self.peek_at(1).kind == TokenKind::LParen {
            let TokenKind::Word(name) = &tok.kind else {
                return Err(self.error_at(&tok, "expected an expression"));
            };
            let func = match name.to_ascii_lowercase().as_str() {
                "count" => AggregateFunc::Count,
                "sum" => AggregateFunc::Sum,
                "avg" => AggregateFunc::Avg,
                other => return Err(self.unsupported_at(&tok, format!("function {}", other.to_ascii_uppercase()))),
            };
            self.advance();
            self.advance();
            if self.peek_word("distinct") {
                let t = self.peek().clone();
                return Err(self.unsupported_at(&t, "DISTINCT aggregate"));
            }
            let expr = if self.eat(&TokenKind::Star) {
                if func != AggregateFunc::Count {
                    return Err(self.error_at(&tok, "only COUNT accepts '*'"));
                }
                Expr::Aggregate {
                    func: AggregateFunc::CountStar,
                    arg: None,
                }
            } else {
                let arg = self.column_ref()?;
                Expr::Aggregate { func, arg: Some(arg) }
            };
            self.expect(&TokenKind::RParen, "')'")?;
            return Ok(expr);
        }
        if self.is_identifier_start() {
            return Ok(Expr::Column(self.column_ref()?));
        }
        if self.is_literal_start() {
            return Err(self.unsupported_at(&tok, "literal in projection"));
        }
        Err(self.error_at(&tok, "expected an expression"))
    }

    fn optional_alias(&mut self, allow_bare: bool) -> Result<Option<String>> {
        if self.eat_word("as") {
            return self.identifier("an alias").map(Some);
        }
        if !allow_bare {
            return Ok(None);
        }
        match &self.peek().kind {
            TokenKind::Word(w) if !RESERVED.contains(&w.to_ascii_lowercase().as_str()) => {
                self.identifier("an alias").map(Some)
            }
            TokenKind::QuotedIdent(_) => self.identifier("an alias").map(Some),
            _ => Ok(None),
        }
    }

    fn table_ref(&mut self) -> Result<TableRef> {
        if self.peek().kind == TokenKind::LParen {
            let t = self.peek().clone();
            return Err(self.unsupported_at(&t, "subquery"));
        }
        let name = self.qualified_name()?;
        let alias = self.optional_alias(true)?;
        Ok(TableRef { name, alias })
    }

    fn join_condition(&mut self) -> Result<Vec<(ColumnRef, ColumnRef)>> {
        let parens = self.eat(&TokenKind::LParen);
        let mut terms = Vec::new();
        loop {
            let left = self.column_ref()?;
            let op_tok = self.peek().clone();
            match op_tok.kind {
                TokenKind::Eq => {
                    self.advance();
                }
                TokenKind::NotEq | TokenKind::Lt | TokenKind::LtEq | TokenKind::Gt | TokenKind::GtEq => {
                    return Err(self.unsupported_at(&op_tok, "non-equi join"))
                }
                _ => return Err(self.error_at(&op_tok, "expected '=' in join condition")),
            }
            if !self.is_identifier_start() {
                let t = self.peek().clone();
                return Err(self.unsupported_at(&t, "join condition against a literal"));
            }
            let right = self.column_ref()?;
            if left.qualifier.is_some() && left.qualifier == right.qualifier {
                return Err(self.error_at(&op_tok, "join condition must relate two different tables"));
            }
            terms.push((left, right));
            if self.peek_word("or") {
                let t = self.peek().clone();
                return Err(self.unsupported_at(&t, "OR"));
            }
            if !self.eat_word("and") {
                break;
            }
        }
        if parens {
            self.expect(&TokenKind::RParen, "')'")?;
        }
        Ok(terms)
    }

    fn comparison(&mut self) -> Result<Comparison> {
        if self.eat(&TokenKind::LParen) {
            let c = self.comparison()?;
            self.expect(&TokenKind::RParen, "')'")?;
            return Ok(c);
        }
        let tok = self.peek().clone();
        if self.peek_word("not") {
            return Err(self.unsupported_at(&tok, "NOT"));
        }
        let (column, literal_first, value) = if self.is_literal_start() {
            let value = self.literal()?;
            (None, true, Some(value))
        } else if self.is_identifier_start() {
            (Some(self.column_ref()?), false, None)
        } else {
            return Err(self.error_at(&tok, "expected a comparison"));
        };
        let op_tok = self.peek().clone();
        let op = match op_tok.kind {
            TokenKind::Eq => CompareOp::Eq,
            TokenKind::NotEq => CompareOp::NotEq,
            TokenKind::Lt => CompareOp::Lt,
            TokenKind::LtEq => CompareOp::LtEq,
            TokenKind::Gt => CompareOp::Gt,
            TokenKind::GtEq => CompareOp::GtEq,
            TokenKind::Word(ref w)
                if ["is", "in", "like", "between", "rlike", "not"].contains(&w.to_ascii_lowercase().as_str()) =>
            {
                return Err(self.unsupported_at(&op_tok, w.to_ascii_uppercase()))
            }
            _ => return Err(self.error_at(&op_tok, "expected a comparison operator")),
        };
        self.advance();
        if literal_first {
            if !self.is_identifier_start() {
                let t = self.peek().clone();
                return Err(self.error_at(&t, "expected a column"));
            }
            let column = self.column_ref()?;
            Ok(Comparison {
                column,
                op: op.flipped(),
                value: value.unwrap(),
            })
        } else {
            if self.is_identifier_start() {
                let t = self.peek().clone();
                return Err(self.unsupported_at(&t, "column-to-column comparison in WHERE"));
            }
            let value = self.literal()?;
            Ok(Comparison {
                column: column.unwrap(),
                op,
                value,
            })
        }
    }

    fn select(&mut self) -> Result<Select> {
        let select_tok = self.peek().clone();
        self.expect_word("select")?;
        if self.peek_word("distinct") {
            let t = self.peek().clone();
            return Err(self.unsupported_at(&t, "DISTINCT"));
        }
        self.eat_word("all");
        let mut projections = Vec::new();
        loop {
            if self.eat(&TokenKind::Star) {
                projections.push(SelectItem::Wildcard);
            } else {
                let expr = self.expr()?;
                let alias = self.optional_alias(true)?;
                projections.push(SelectItem::Expr { expr, alias });
            }
            if !self.eat(&TokenKind::Comma) {
                break;
            }
        }
        self.expect_word("from")?;
        let from = self.table_ref()?;
        let mut joins = Vec::new();
        loop {
            let tok = self.peek().clone();
            if self.peek_word("left") || self.peek_word("right") || self.peek_word("full") || self.peek_word("cross")
            {
                return Err(self.unsupported_at(&tok, format!("{} JOIN", tok.text(self.src).to_ascii_uppercase())));
            }
            if tok.kind == TokenKind::Comma {
                return Err(self.unsupported_at(&tok, "comma join"));
            }
            let inner = self.eat_word("inner");
            if !self.eat_word("join") {
                if inner {
                    return Err(self.error("expected JOIN"));
                }
                break;
            }
            let table = self.table_ref()?;
            self.expect_word("on")?;
            let on = self.join_condition()?;
            joins.push(Join { table, on });
        }
        let mut selection = Vec::new();
        if self.eat_word("where") {
            loop {
                selection.push(self.comparison()?);
                if self.peek_word("or") {
                    let t = self.peek().clone();
                    return Err(self.unsupported_at(&t, "OR"));
                }
                if !self.eat_word("and") {
                    break;
                }
            }
        }
        let mut group_by = Vec::new();
        if self.eat_word("group") {
            self.expect_word("by")?;
            loop {
                if matches!(self.peek().kind, TokenKind::Integer(_)) {
                    let t = self.peek().clone();
                    return Err(self.unsupported_at(&t, "GROUP BY position"));
                }
                group_by.push(self.column_ref()?);
                if !self.eat(&TokenKind::Comma) {
                    break;
                }
            }
        }
        for kw in ["having", "union", "sort", "cluster", "distribute", "window", "lateral"] {
            if self.peek_word(kw) {
                let t = self.peek().clone();
                return Err(self.unsupported_at(&t, kw.to_ascii_uppercase()));
            }
        }
        let mut order_by = Vec::new();
        if self.eat_word("order") {
            self.expect_word("by")?;
            loop {
                let expr = self.expr()?;
                let descending = if self.eat_word("desc") {
                    true
                } else {
                    self.eat_word("asc");
                    false
                };
                order_by.push(OrderItem { expr, descending });
                if !self.eat(&TokenKind::Comma) {
                    break;
                }
            }
        }
        let mut limit = None;
        if self.eat_word("limit") {
            let tok = self.peek().clone();
            match &tok.kind {
                TokenKind::Integer(text) => {
                    let n = text
                        .parse::<u64>()
                        .map_err(|_| self.error_at(&tok, "LIMIT out of range"))?;
                    self.advance();
                    limit = Some(n);
                }
                _ => return Err(self.error_at(&tok, "expected a non-negative integer after LIMIT")),
            }
        }
        if self.peek_word("union") {
            let t = self.peek().clone();
            return Err(self.unsupported_at(&t, "UNION"));
        }
        let select = Select {
            projections,
            from,
            joins,
            selection,
            group_by,
            order_by,
            limit,
        };
        validate_select(&select).map_err(|m| self.error_at(&select_tok, m))?;
        Ok(select)
    }
}

fn same_column(a: &ColumnRef, b: &ColumnRef) -> bool {
    a.name == b.name && (a.qualifier == b.qualifier || a.qualifier.is_none() || b.qualifier.is_none())
}

/// Aggregate placement rules: aggregates only in grouped or global-aggregate
/// queries, and every plain projection of such a query must be grouped.
pub(crate) fn validate_select(select: &Select) -> std::result::Result<(), String> {
    let aggregating = select.has_aggregates() || !select.group_by.is_empty();
    if !aggregating {
        for item in &select.order_by {
            if item.expr.is_aggregate() {
                return Err("aggregate in ORDER BY of a non-aggregating query".into());
            }
        }
        return Ok(());
    }
    let mut aliases = Vec::new();
    for p in &select.projections {
        match p {
            SelectItem::Wildcard => return Err("'*' cannot be combined with GROUP BY or aggregates".into()),
            SelectItem::Expr { expr: Expr::Column(c), alias } => {
                if !select.group_by.iter().any(|g| same_column(g, c)) {
                    return Err(format!("column {} must appear in GROUP BY", c.name));
                }
                if let Some(a) = alias {
                    aliases.push(a.clone());
                }
            }
            SelectItem::Expr { alias, .. } => {
                if let Some(a) = alias {
                    aliases.push(a.clone());
                }
            }
        }
    }
    for item in &select.order_by {
        if let Expr::Column(c) = &item.expr {
            let grouped = select.group_by.iter().any(|g| same_column(g, c));
            let aliased = c.qualifier.is_none() && aliases.contains(&c.name);
            if !grouped && !aliased {
                return Err(format!("ORDER BY column {} is neither grouped nor an output alias", c.name));
            }
        }
    }
    Ok(())
}
