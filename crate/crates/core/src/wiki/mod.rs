//! MediaWiki dump ingestion: streaming page reader, `<math>` extraction, SQL
//! table reader and the depth-bounded category tree.

mod category;
mod math;
mod sql;
mod xml;

pub use category::{build_category_tree, filter_pages_by_category, CategoryNode, CategoryTree};
pub use math::{decode_entities, extract_math, Diagnostics};
pub use sql::{
    parse_sql_dump, write_insert, CategoryLink, CategoryRow, LinkType, PageRow, SqlRows, SqlTable, SqlValue,
};
pub use xml::{stream_pages, PageStream};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum WikiError {
    #[error("malformed XML at byte {0}")]
    MalformedXml(u64),
    #[error("input ends inside an open element")]
    Truncated,
    #[error("SQL syntax error at byte {0}")]
    SqlSyntax(u64),
    #[error("table `{table}` expects {expected} columns, row at byte {offset} has {found}")]
    ColumnCount { table: String, expected: String, found: usize, offset: u64 },
    #[error("column {column} of `{table}` has the wrong type")]
    ColumnType { table: String, column: usize },
    #[error("root category {0:?} not found")]
    RootNotFound(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// One `<page>` of a pages-articles dump.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct PageRecord {
    pub page_id: u64,
    pub title: String,
    pub namespace: i64,
    pub text: String,
}

/// LaTeX source of one `<math>` element, with its page provenance.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RawExpression {
    pub page_id: u64,
    pub page_title: String,
    /// Byte offset of the opening tag within the page text.
    pub offset: usize,
    pub latex: String,
}
