use std::fmt::Write as _;
use std::io::{self, BufRead};
use std::ops::RangeInclusive;

use serde::{Deserialize, Serialize};

use super::WikiError;

/// The MediaWiki tables the category tree needs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SqlTable {
    CategoryLinks,
    Page,
    Category,
}

impl SqlTable {
    pub fn name(self) -> &'static str {
        match self {
            SqlTable::CategoryLinks => "categorylinks",
            SqlTable::Page => "page",
            SqlTable::Category => "category",
        }
    }

    /// Accepted column counts. `page` varies across MediaWiki versions.
    pub fn columns(self) -> RangeInclusive<usize> {
        match self {
            SqlTable::CategoryLinks => 7..=7,
            SqlTable::Page => 11..=14,
            SqlTable::Category => 5..=5,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SqlValue {
    Null,
    Int(i64),
    Float(f64),
    Str(String),
}

impl SqlValue {
    pub fn as_int(&self) -> Option<i64> {
        match self {
            SqlValue::Int(v) => Some(*v),
            _ => None,
        }
    }

    pub fn as_str(&self) -> Option<&str> {
        match self {
            SqlValue::Str(s) => Some(s),
            _ => None,
        }
    }
}

/// Rows of one table from a `mysqldump`-style file, one `Vec` per tuple.
///
/// Statements other than `INSERT INTO` the chosen table are skipped.
pub struct SqlRows<R: BufRead> {
    src: R,
    offset: u64,
    table: SqlTable,
    in_values: bool,
    failed: bool,
}

pub fn parse_sql_dump<R: BufRead>(input: R, table: SqlTable) -> SqlRows<R> {
    SqlRows { src: input, offset: 0, table, in_values: false, failed: false }
}

const MAX_STATEMENT_HEAD: usize = 1 << 16;

impl<R: BufRead> SqlRows<R> {
    fn peek(&mut self) -> io::Result<Option<u8>> {
        Ok(self.src.fill_buf()?.first().copied())
    }

    fn bump(&mut self) {
        self.src.consume(1);
        self.offset += 1;
    }

    fn next_byte(&mut self) -> io::Result<Option<u8>> {
        let b = self.peek()?;
        if b.is_some() {
            self.bump();
        }
        Ok(b)
    }

    fn syntax(&self) -> WikiError {
        WikiError::SqlSyntax(self.offset)
    }

    fn skip_ws(&mut self) -> io::Result<()> {
        while self.peek()?.is_some_and(|b| b.is_ascii_whitespace()) {
            self.bump();
        }
        Ok(())
    }

    fn expect(&mut self, want: u8) -> Result<(), WikiError> {
        self.skip_ws()?;
        match self.next_byte()? {
            Some(b) if b == want => Ok(()),
            _ => Err(self.syntax()),
        }
    }

    /// Skips a quoted run whose opening quote is already consumed.
    fn skip_quoted(&mut self, quote: u8) -> Result<(), WikiError> {
        loop {
            match self.next_byte()? {
                None => return Err(self.syntax()),
                Some(b'\\') if quote != b'`' => {
                    self.next_byte()?;
                }
                Some(b) if b == quote => return Ok(()),
                Some(_) => {}
            }
        }
    }

    fn skip_comment_line(&mut self) -> io::Result<()> {
        while let Some(b) = self.next_byte()? {
            if b == b'\n' {
                break;
            }
        }
        Ok(())
    }

    /// Advances to the next `VALUES` list of the chosen table, or returns false at end of input.
    fn seek_values(&mut self) -> Result<bool, WikiError> {
        loop {
            self.skip_ws()?;
            let Some(first) = self.peek()? else { return Ok(false) };
            if first == b'-' || first == b'#' {
                self.skip_comment_line()?;
                continue;
            }
            let mut head = String::new();
            let mut prev = 0u8;
            loop {
                let Some(b) = self.next_byte()? else {
                    return Ok(false);
                };
                match b {
                    b';' => break,
                    b'\'' | b'"' => self.skip_quoted(b)?,
                    b'*' if prev == b'/' => {
                        // Block comment, including `/*!40101 ... */;` hints.
                        let mut last = 0u8;
                        loop {
                            match self.next_byte()? {
                                None => return Ok(false),
                                Some(b'/') if last == b'*' => break,
                                Some(c) => last = c,
                            }
                        }
                        head.pop();
                    }
                    _ => {
                        if head.len() < MAX_STATEMENT_HEAD {
                            head.push(b as char);
                        }
                        if head.len() >= 6
                            && head[head.len() - 6..].eq_ignore_ascii_case("values")
                            && self.is_insert_into(&head[..head.len() - 6])
                        {
                            return Ok(true);
                        }
                    }
                }
                prev = b;
            }
        }
    }

    fn is_insert_into(&self, head: &str) -> bool {
        let mut words = head.split_whitespace();
        if !words.next().is_some_and(|w| w.eq_ignore_ascii_case("insert")) {
            return false;
        }
        let mut word = words.next();
        if word.is_some_and(|w| w.eq_ignore_ascii_case("ignore")) {
            word = words.next();
        }
        if !word.is_some_and(|w| w.eq_ignore_ascii_case("into")) {
            return false;
        }
        let Some(name) = words.next() else { return false };
        let name = name.split('(').next().unwrap_or_default().trim_matches('`');
        name == self.table.name()
    }

    fn string(&mut self, quote: u8) -> Result<String, WikiError> {
        let mut bytes = Vec::new();
        loop {
            match self.next_byte()? {
                None => return Err(self.syntax()),
                Some(b'\\') => {
                    let escaped = self.next_byte()?.ok_or_else(|| self.syntax())?;
                    bytes.push(match escaped {
                        b'0' => 0,
                        b'n' => b'\n',
                        b'r' => b'\r',
                        b't' => b'\t',
                        b'b' => 8,
                        b'Z' => 0x1a,
                        other => other,
                    });
                }
                Some(b) if b == quote => {
                    if self.peek()? == Some(quote) {
                        self.bump();
                        bytes.push(quote);
                    } else {
                        break;
                    }
                }
                Some(b) => bytes.push(b),
            }
        }
        Ok(String::from_utf8(bytes).unwrap_or_else(|e| String::from_utf8_lossy(e.as_bytes()).into_owned()))
    }

    fn word(&mut self) -> io::Result<String> {
        let mut w = String::new();
        while let Some(b) = self.peek()? {
            if b.is_ascii_alphanumeric() || matches!(b, b'_' | b'.' | b'-' | b'+') {
                w.push(b as char);
                self.bump();
            } else {
                break;
            }
        }
        Ok(w)
    }

    fn value(&mut self) -> Result<SqlValue, WikiError> {
        self.skip_ws()?;
        let start = self.offset;
        match self.peek()? {
            Some(q @ (b'\'' | b'"')) => {
                self.bump();
                Ok(SqlValue::Str(self.string(q)?))
            }
            Some(b'_') => {
                // Charset introducer such as `_binary 'abc'`.
                self.word()?;
                self.skip_ws()?;
                match self.next_byte()? {
                    Some(q @ (b'\'' | b'"')) => Ok(SqlValue::Str(self.string(q)?)),
                    _ => Err(WikiError::SqlSyntax(start)),
                }
            }
            Some(_) => {
                let w = self.word()?;
                if w.eq_ignore_ascii_case("null") {
                    Ok(SqlValue::Null)
                } else if let Ok(v) = w.parse::<i64>() {
                    Ok(SqlValue::Int(v))
                } else if let Ok(v) = w.parse::<f64>() {
                    Ok(SqlValue::Float(v))
                } else {
                    Err(WikiError::SqlSyntax(start))
                }
            }
            None => Err(WikiError::SqlSyntax(start)),
        }
    }

    fn tuple(&mut self) -> Result<Vec<SqlValue>, WikiError> {
        self.expect(b'(')?;
        let mut row = Vec::new();
        loop {
            row.push(self.value()?);
            self.skip_ws()?;
            match self.next_byte()? {
                Some(b',') => {}
                Some(b')') => return Ok(row),
                _ => return Err(self.syntax()),
            }
        }
    }

    fn next_row(&mut self) -> Result<Option<Vec<SqlValue>>, WikiError> {
        if !self.in_values {
            if !self.seek_values()? {
                return Ok(None);
            }
            self.in_values = true;
        }
        self.skip_ws()?;
        let start = self.offset;
        let row = self.tuple()?;
        self.skip_ws()?;
        match self.next_byte()? {
            Some(b',') => {}
            Some(b';') | None => self.in_values = false,
            _ => return Err(self.syntax()),
        }
        let expected = self.table.columns();
        if !expected.contains(&row.len()) {
            let expected = if expected.start() == expected.end() {
                expected.start().to_string()
            } else {
                format!("{}..={}", expected.start(), expected.end())
            };
            return Err(WikiError::ColumnCount {
                table: self.table.name().to_owned(),
                expected,
                found: row.len(),
                offset: start,
            });
        }
        Ok(Some(row))
    }
}

impl<R: BufRead> Iterator for SqlRows<R> {
    type Item = Result<Vec<SqlValue>, WikiError>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.failed {
            return None;
        }
        let item = self.next_row().transpose();
        if matches!(item, Some(Err(_))) {
            self.failed = true;
        }
        item
    }
}

fn escape_into(out: &mut String, s: &str) {
    out.push('\'');
    for c in s.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '\'' => out.push_str("\\'"),
            '"' => out.push_str("\\\""),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\0' => out.push_str("\\0"),
            '\u{1a}' => out.push_str("\\Z"),
            c => out.push(c),
        }
    }
    out.push('\'');
}

/// Serializes rows as one multi-row `INSERT` statement readable by [`parse_sql_dump`].
pub fn write_insert(table: SqlTable, rows: &[Vec<SqlValue>]) -> String {
    let mut out = format!("INSERT INTO `{}` VALUES ", table.name());
    for (i, row) in rows.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        out.push('(');
        for (j, v) in row.iter().enumerate() {
            if j > 0 {
                out.push(',');
            }
            match v {
                SqlValue::Null => out.push_str("NULL"),
                SqlValue::Int(n) => write!(out, "{n}").expect("string write"),
                SqlValue::Float(f) => write!(out, "{f:?}").expect("string write"),
                SqlValue::Str(s) => escape_into(&mut out, s),
            }
        }
        out.push(')');
    }
    out.push_str(";\n");
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LinkType {
    Page,
    Subcat,
    File,
}

/// `categorylinks` row: page `from` is a member of category `to`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CategoryLink {
    pub from: u64,
    pub to: String,
    pub link_type: LinkType,
}

fn column_type(table: SqlTable, column: usize) -> WikiError {
    WikiError::ColumnType { table: table.name().to_owned(), column }
}

fn int_at(row: &[SqlValue], table: SqlTable, column: usize) -> Result<i64, WikiError> {
    row.get(column).and_then(SqlValue::as_int).ok_or_else(|| column_type(table, column))
}

fn str_at(row: &[SqlValue], table: SqlTable, column: usize) -> Result<String, WikiError> {
    row.get(column).and_then(SqlValue::as_str).map(str::to_owned).ok_or_else(|| column_type(table, column))
}

impl CategoryLink {
    pub fn from_row(row: &[SqlValue]) -> Result<CategoryLink, WikiError> {
        let t = SqlTable::CategoryLinks;
        let from = int_at(row, t, 0)?;
        let to = str_at(row, t, 1)?;
        let link_type = match str_at(row, t, 6)?.as_str() {
            "page" => LinkType::Page,
            "subcat" => LinkType::Subcat,
            "file" => LinkType::File,
            _ => return Err(column_type(t, 6)),
        };
        Ok(CategoryLink { from: u64::try_from(from).map_err(|_| column_type(t, 0))?, to, link_type })
    }
}

/// Leading columns of a `page` row.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PageRow {
    pub page_id: u64,
    pub namespace: i64,
    pub title: String,
}

impl PageRow {
    pub fn from_row(row: &[SqlValue]) -> Result<PageRow, WikiError> {
        let t = SqlTable::Page;
        Ok(PageRow {
            page_id: u64::try_from(int_at(row, t, 0)?).map_err(|_| column_type(t, 0))?,
            namespace: int_at(row, t, 1)?,
            title: str_at(row, t, 2)?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CategoryRow {
    pub id: i64,
    pub title: String,
    pub pages: i64,
    pub subcats: i64,
    pub files: i64,
}

impl CategoryRow {
    pub fn from_row(row: &[SqlValue]) -> Result<CategoryRow, WikiError> {
        let t = SqlTable::Category;
        Ok(CategoryRow {
            id: int_at(row, t, 0)?,
            title: str_at(row, t, 1)?,
            pages: int_at(row, t, 2)?,
            subcats: int_at(row, t, 3)?,
            files: int_at(row, t, 4)?,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rows(sql: &str, table: SqlTable) -> Vec<Vec<SqlValue>> {
        parse_sql_dump(sql.as_bytes(), table).collect::<Result<_, _>>().unwrap()
    }

    #[test]
    fn single_categorylink() {
        let sql = "INSERT INTO `categorylinks` VALUES (12,'Physics','','2020-01-01','','','subcat');";
        let r = rows(sql, SqlTable::CategoryLinks);
        assert_eq!(r.len(), 1);
        assert_eq!(
            CategoryLink::from_row(&r[0]).unwrap(),
            CategoryLink { from: 12, to: "Physics".into(), link_type: LinkType::Subcat }
        );
    }

    #[test]
    fn escapes_and_nulls() {
        let sql = r#"INSERT INTO `category` VALUES (1,'O\'Brien',3,NULL,-2),(2,'a\\b\n''c',0,0,0);"#;
        let r = rows(sql, SqlTable::Category);
        assert_eq!(r[0][1], SqlValue::Str("O'Brien".into()));
        assert_eq!(r[0][3], SqlValue::Null);
        assert_eq!(r[0][4], SqlValue::Int(-2));
        assert_eq!(r[1][1], SqlValue::Str("a\\b\n'c".into()));
    }

    #[test]
    fn other_statements_and_tables_are_skipped() {
        let sql = "-- MySQL dump\n/*!40101 SET NAMES utf8mb4 */;\nDROP TABLE IF EXISTS `category`;\n\
                   CREATE TABLE `category` (\n  `cat_title` varbinary(255) NOT NULL DEFAULT '',\n  PRIMARY KEY (`cat_id`)\n);\n\
                   INSERT INTO `page` VALUES (1,0,'X',0,0,0.5,'',NULL,1,1,NULL,NULL);\n\
                   INSERT INTO `category` VALUES (5,'Physics;(x)',1,2,0);\nUNLOCK TABLES;\n";
        let r = rows(sql, SqlTable::Category);
        assert_eq!(r.len(), 1);
        assert_eq!(CategoryRow::from_row(&r[0]).unwrap().title, "Physics;(x)");
        let p = rows(sql, SqlTable::Page);
        assert_eq!(
            PageRow::from_row(&p[0]).unwrap(),
            PageRow { page_id: 1, namespace: 0, title: "X".into() }
        );
        assert_eq!(p[0][5], SqlValue::Float(0.5));
    }

    #[test]
    fn column_count_mismatch() {
        let sql = "INSERT INTO `category` VALUES (1,'a',1,1);";
        let err = parse_sql_dump(sql.as_bytes(), SqlTable::Category).next().unwrap().unwrap_err();
        assert!(matches!(err, WikiError::ColumnCount { found: 4, .. }), "{err}");
    }

    #[test]
    fn syntax_error_offset() {
        let sql = "INSERT INTO `category` VALUES (1,'a',1,1,?);";
        let err = parse_sql_dump(sql.as_bytes(), SqlTable::Category).next().unwrap().unwrap_err();
        assert!(matches!(err, WikiError::SqlSyntax(41)), "{err}");
    }

    #[test]
    fn write_then_read() {
        let original = vec![
            vec![
                SqlValue::Int(1),
                SqlValue::Str("it's \\ \"q\"\n\r\0\u{1a}\tπ".into()),
                SqlValue::Int(-4),
                SqlValue::Null,
                SqlValue::Float(1e300),
            ],
            vec![
                SqlValue::Int(2),
                SqlValue::Str(String::new()),
                SqlValue::Float(3.0),
                SqlValue::Int(0),
                SqlValue::Int(0),
            ],
        ];
        let text = write_insert(SqlTable::Category, &original);
        assert_eq!(rows(&text, SqlTable::Category), original);
    }
}
