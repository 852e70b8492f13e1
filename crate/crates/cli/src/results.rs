use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use qsim_core::des::TraceEntry;
use qsim_core::fock::WignerGrid;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Cell {
    Int(i64),
    Num(f64),
    Text(String),
    Null,
}

impl Cell {
    pub fn as_f64(&self) -> Option<f64> {
        match *self {
            Self::Int(i) => Some(i as f64),
            Self::Num(x) => Some(x),
            _ => None,
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Self::Num(x)
    }
}

impl From<usize> for Cell {
    fn from(i: usize) -> Self {
        Self::Int(i as i64)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Self::Text(s.into())
    }
}

impl From<String> for Cell {
    fn from(s: String) -> Self {
        Self::Text(s)
    }
}

impl<T: Into<Cell>> From<Option<T>> for Cell {
    fn from(v: Option<T>) -> Self {
        v.map_or(Self::Null, Into::into)
    }
}

/// Row-oriented table; every row has one cell per column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Self { columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "row width must match the header");
        self.rows.push(row);
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    /// Numeric values of one column; `None` if it is missing or holds text.
    pub fn numbers(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.column_index(name)?;
        self.rows.iter().map(|r| r[i].as_f64()).collect()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ResultSet {
    pub run_id: Option<String>,
    pub traces: Vec<TraceEntry>,
    pub warnings: Vec<String>,
    pub tables: BTreeMap<String, Table>,
    pub grids: BTreeMap<String, WignerGrid>,
    pub metadata: Map<String, Value>,
}

impl ResultSet {
    pub fn is_consistent(&self) -> bool {
        let tables = self.tables.values().all(|t| t.rows.iter().all(|r| r.len() == t.columns.len()));
        let grids = self.grids.values().all(|g| g.values.len() == g.x_axis.len() * g.p_axis.len());
        tables && grids
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cells_round_trip_through_json() {
        let row: Vec<Cell> = vec![3usize.into(), 0.25.into(), "011".into(), Option::<f64>::None.into()];
        let text = serde_json::to_string(&row).unwrap();
        assert_eq!(text, r#"[3,0.25,"011",null]"#);
        assert_eq!(serde_json::from_str::<Vec<Cell>>(&text).unwrap(), row);
    }

    #[test]
    #[should_panic]
    fn ragged_rows_are_rejected() {
        Table::new(&["a", "b"]).push(vec![1usize.into()]);
    }

    #[test]
    fn numeric_column() {
        let mut t = Table::new(&["x", "label"]);
        t.push(vec![1usize.into(), "a".into()]);
        t.push(vec![0.5.into(), "b".into()]);
        assert_eq!(t.numbers("x"), Some(vec![1.0, 0.5]));
        assert_eq!(t.numbers("label"), None);
    }
}
