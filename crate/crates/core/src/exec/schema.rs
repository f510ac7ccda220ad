use std::collections::HashSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::value::{parse_date, ColumnType, Value};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnDef {
    pub name: String,
    #[serde(rename = "type")]
    pub ty: ColumnType,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawTable", into = "RawTable")]
pub struct Table {
    pub name: String,
    pub columns: Vec<ColumnDef>,
    pub rows: Vec<Vec<Value>>,
}

/// Exercise database: a set of tables with their rows.
///
/// JSON form:
/// `{"name": "company", "tables": [{"name": "employee",
///   "columns": [{"name": "emp_id", "type": "int"}], "rows": [[1]]}]}`.
/// Column types are `int`, `float`, `text` and `date` (`"YYYY-MM-DD"`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSchema")]
pub struct Schema {
    pub name: String,
    pub tables: Vec<Table>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SchemaError {
    #[error("table {table}: duplicate column {column}")]
    DuplicateColumn { table: String, column: String },
    #[error("duplicate table {0}")]
    DuplicateTable(String),
    #[error("table {table} row {row}: expected {expected} values, found {found}")]
    Arity {
        table: String,
        row: usize,
        expected: usize,
        found: usize,
    },
    #[error("table {table} row {row} column {column}: value does not fit type {ty:?}")]
    BadValue {
        table: String,
        row: usize,
        column: String,
        ty: ColumnType,
    },
    #[error("invalid schema JSON: {0}")]
    Json(String),
}

impl Schema {
    pub fn from_json(text: &str) -> Result<Schema, SchemaError> {
        let raw: RawSchema = serde_json::from_str(text).map_err(|e| SchemaError::Json(e.to_string()))?;
        Schema::try_from(raw)
    }

    /// Case-insensitive lookup.
    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.name.eq_ignore_ascii_case(name))
    }
}

#[derive(Serialize, Deserialize)]
struct RawSchema {
    name: String,
    tables: Vec<RawTable>,
}

#[derive(Serialize, Deserialize)]
struct RawTable {
    name: String,
    columns: Vec<ColumnDef>,
    #[serde(default)]
    rows: Vec<Vec<serde_json::Value>>,
}

impl TryFrom<RawSchema> for Schema {
    type Error = SchemaError;

    fn try_from(raw: RawSchema) -> Result<Self, SchemaError> {
        let mut seen = HashSet::new();
        let mut tables = Vec::with_capacity(raw.tables.len());
        for t in raw.tables {
            if !seen.insert(t.name.to_lowercase()) {
                return Err(SchemaError::DuplicateTable(t.name));
            }
            tables.push(Table::try_from(t)?);
        }
        Ok(Schema { name: raw.name, tables })
    }
}

impl TryFrom<RawTable> for Table {
    type Error = SchemaError;

    fn try_from(raw: RawTable) -> Result<Self, SchemaError> {
        let mut names = HashSet::new();
        let columns: Vec<ColumnDef> = raw
            .columns
            .into_iter()
            .map(|c| ColumnDef {
                name: c.name.to_lowercase(),
                ty: c.ty,
            })
            .collect();
        for c in &columns {
            if !names.insert(c.name.clone()) {
                return Err(SchemaError::DuplicateColumn {
                    table: raw.name.clone(),
                    column: c.name.clone(),
                });
            }
        }
        let mut rows = Vec::with_capacity(raw.rows.len());
        for (r, row) in raw.rows.into_iter().enumerate() {
            if row.len() != columns.len() {
                return Err(SchemaError::Arity {
                    table: raw.name.clone(),
                    row: r,
                    expected: columns.len(),
                    found: row.len(),
                });
            }
            let typed = row
                .into_iter()
                .zip(&columns)
                .map(|(v, c)| {
                    convert(v, c.ty).ok_or_else(|| SchemaError::BadValue {
                        table: raw.name.clone(),
                        row: r,
                        column: c.name.clone(),
                        ty: c.ty,
                    })
                })
                .collect::<Result<Vec<_>, _>>()?;
            rows.push(typed);
        }
        Ok(Table {
            name: raw.name.to_lowercase(),
            columns,
            rows,
        })
    }
}

impl From<Table> for RawTable {
    fn from(t: Table) -> Self {
        let rows = t
            .rows
            .into_iter()
            .map(|row| row.into_iter().map(|v| serde_json::to_value(v).unwrap_or_default()).collect())
            .collect();
        RawTable {
            name: t.name,
            columns: t.columns,
            rows,
        }
    }
}

fn convert(v: serde_json::Value, ty: ColumnType) -> Option<Value> {
    use serde_json::Value as J;
    Some(match (v, ty) {
        (J::Null, _) => Value::Null,
        (J::Number(n), ColumnType::Int) => Value::Int(n.as_i64()?),
        (J::Number(n), ColumnType::Float) => Value::Float(n.as_f64()?),
        (J::String(s), ColumnType::Text) => Value::Text(s),
        (J::String(s), ColumnType::Date) => Value::Date(parse_date(&s)?),
        _ => return None,
    })
}
