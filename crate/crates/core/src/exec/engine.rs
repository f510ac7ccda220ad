use std::cmp::Ordering;
use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::schema::Schema;
use super::value::{ColumnType, Value, ValueKey};
use crate::ast::{render_node, Node, NodeKind, QueryTree};

/// Rows and columns returned by a query.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultMatrix {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Value>>,
}

impl ResultMatrix {
    /// Type of each column, taken from its first non-NULL value.
    pub fn column_types(&self) -> Vec<Option<ColumnType>> {
        (0..self.columns.len())
            .map(|c| self.rows.iter().find_map(|r| r[c].column_type()))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize, Deserialize)]
#[serde(tag = "kind", content = "detail")]
pub enum ExecError {
    #[error("query is incomplete")]
    PartialQuery,
    #[error("unknown table {0}")]
    UnknownTable(String),
    #[error("unknown column {0}")]
    UnknownColumn(String),
    #[error("ambiguous column {0}")]
    AmbiguousColumn(String),
    #[error("{0} must appear in GROUP BY or inside an aggregate")]
    Ungrouped(String),
    #[error("aggregate not allowed here: {0}")]
    MisplacedAggregate(String),
    #[error("subquery must return exactly one column")]
    SubqueryColumns,
    #[error("scalar subquery returned more than one row")]
    ScalarSubqueryRows,
    #[error("ORDER BY position {0} is out of range")]
    OrderPosition(usize),
    #[error("type error: {0}")]
    Type(String),
    #[error("unsupported construct: {0}")]
    Unsupported(String),
}

type Row = Vec<Value>;
type Truth = Option<bool>;

/// Runs a complete query against the schema's tables.
pub fn execute(q: &QueryTree, schema: &Schema) -> Result<ResultMatrix, ExecError> {
    if !q.is_complete() {
        return Err(ExecError::PartialQuery);
    }
    Executor { schema }.query(&q.root, None)
}

struct Binding {
    qualifier: String,
    columns: Vec<String>,
    offset: usize,
}

#[derive(Default)]
struct Layout {
    bindings: Vec<Binding>,
    width: usize,
}

impl Layout {
    fn concat(mut self, other: Layout) -> Layout {
        for mut b in other.bindings {
            b.offset += self.width;
            self.bindings.push(b);
        }
        self.width += other.width;
        self
    }

    /// Slot of a column label in this layout, if any binding provides it.
    fn resolve(&self, label: &str) -> Result<Option<usize>, ExecError> {
        let (qualifier, name) = match label.split_once('.') {
            Some((q, n)) => (Some(q), n),
            None => (None, label),
        };
        let mut found = None;
        for b in &self.bindings {
            if qualifier.is_some_and(|q| q != b.qualifier) {
                continue;
            }
            if let Some(i) = b.columns.iter().position(|c| c == name) {
                if found.is_some() {
                    return Err(ExecError::AmbiguousColumn(label.to_string()));
                }
                found = Some(b.offset + i);
            }
        }
        Ok(found)
    }
}

struct Env<'a> {
    layout: &'a Layout,
    row: &'a [Value],
    group: Option<&'a [Row]>,
    outer: Option<&'a Env<'a>>,
}

impl Env<'_> {
    fn lookup(&self, label: &str) -> Result<Value, ExecError> {
        let mut env = Some(self);
        while let Some(e) = env {
            if let Some(slot) = e.layout.resolve(label)? {
                return Ok(e.row[slot].clone());
            }
            env = e.outer;
        }
        Err(ExecError::UnknownColumn(label.to_string()))
    }
}

struct Executor<'s> {
    schema: &'s Schema,
}

struct Unit {
    row: Row,
    group: Option<Vec<Row>>,
}

impl Executor<'_> {
    fn query(&self, q: &Node, outer: Option<&Env>) -> Result<ResultMatrix, ExecError> {
        let (layout, mut rows) = match q.child(NodeKind::FromList) {
            Some(from) => self.from_list(from, outer)?,
            None => (Layout::default(), vec![Vec::new()]),
        };
        if let Some(w) = q.child(NodeKind::Where) {
            let cond = &w.children[0];
            let mut kept = Vec::with_capacity(rows.len());
            for row in rows {
                let env = Env {
                    layout: &layout,
                    row: &row,
                    group: None,
                    outer,
                };
                if self.cond(cond, &env)? == Some(true) {
                    kept.push(row);
                }
            }
            rows = kept;
        }

        let select = q.child(NodeKind::SelectList).expect("query without select list");
        let group_by = q.child(NodeKind::GroupBy);
        let having = q.child(NodeKind::Having);
        let order_by = q.child(NodeKind::OrderBy);
        let aliases: Vec<&str> = select
            .children
            .iter()
            .filter(|i| i.kind == NodeKind::SelectItem)
            .map(|i| i.label.as_str())
            .collect();
        let order_exprs: Vec<&Node> = order_by
            .map(|o| o.children.iter().map(|i| &i.children[0]).collect())
            .unwrap_or_default();

        let grouped = group_by.is_some()
            || having.is_some()
            || select.children.iter().any(contains_aggregate)
            || order_exprs.iter().any(|e| contains_aggregate(e));

        let units: Vec<Unit> = if grouped {
            let keys: &[Node] = group_by.map_or(&[], |g| &g.children);
            let mut checks: Vec<&Node> = select.children.iter().collect();
            checks.extend(having.map(|h| &h.children[0]));
            checks.extend(order_exprs.iter().filter(|e| !is_output_ref(e, &aliases)).copied());
            for node in checks {
                check_grouped(node, keys, &layout)?;
            }
            let mut groups = self.group(&layout, rows, keys, outer)?;
            if let Some(h) = having {
                let mut kept = Vec::new();
                for u in groups {
                    let env = Env {
                        layout: &layout,
                        row: &u.row,
                        group: u.group.as_deref(),
                        outer,
                    };
                    if self.cond(&h.children[0], &env)? == Some(true) {
                        kept.push(u);
                    }
                }
                groups = kept;
            }
            groups
        } else {
            rows.into_iter().map(|row| Unit { row, group: None }).collect()
        };

        let columns = output_columns(select, &layout);
        let mut out: Vec<(Row, Vec<Value>)> = Vec::with_capacity(units.len());
        for u in &units {
            let env = Env {
                layout: &layout,
                row: &u.row,
                group: u.group.as_deref(),
                outer,
            };
            let values = self.project(select, &env)?;
            let mut sort_key = Vec::with_capacity(order_exprs.len());
            for e in &order_exprs {
                sort_key.push(self.order_value(e, &aliases, &columns, &values, &env)?);
            }
            out.push((values, sort_key));
        }

        if q.label.ends_with("DISTINCT") {
            let mut seen = std::collections::HashSet::new();
            out.retain(|(values, _)| seen.insert(values.iter().map(Value::key).collect::<Vec<ValueKey>>()));
        }
        if let Some(o) = order_by {
            let desc: Vec<bool> = o.children.iter().map(|i| i.label == "DESC").collect();
            out.sort_by(|(_, a), (_, b)| {
                for (k, d) in desc.iter().enumerate() {
                    let ord = a[k].sort_cmp(&b[k]);
                    let ord = if *d { ord.reverse() } else { ord };
                    if ord != Ordering::Equal {
                        return ord;
                    }
                }
                Ordering::Equal
            });
        }
        Ok(ResultMatrix {
            columns,
            rows: out.into_iter().map(|(v, _)| v).collect(),
        })
    }

    fn from_list(&self, from: &Node, outer: Option<&Env>) -> Result<(Layout, Vec<Row>), ExecError> {
        let mut layout = Layout::default();
        let mut rows: Vec<Row> = vec![Vec::new()];
        for item in &from.children {
            let (l, r) = self.from_item(item, outer)?;
            rows = cross(&rows, &r);
            layout = layout.concat(l);
        }
        Ok((layout, rows))
    }

    fn from_item(&self, item: &Node, outer: Option<&Env>) -> Result<(Layout, Vec<Row>), ExecError> {
        match item.kind {
            NodeKind::TableRef => {
                let table = self
                    .schema
                    .table(&item.label)
                    .ok_or_else(|| ExecError::UnknownTable(item.label.clone()))?;
                let qualifier = item
                    .child(NodeKind::Identifier)
                    .map_or_else(|| table.name.clone(), |a| a.label.clone());
                let columns: Vec<String> = table.columns.iter().map(|c| c.name.clone()).collect();
                let layout = Layout {
                    width: columns.len(),
                    bindings: vec![Binding {
                        qualifier,
                        columns,
                        offset: 0,
                    }],
                };
                Ok((layout, table.rows.clone()))
            }
            NodeKind::Join => {
                let (ll, lr) = self.from_item(&item.children[0], outer)?;
                let (rl, rr) = self.from_item(&item.children[1], outer)?;
                let layout = ll.concat(rl);
                let mut rows = cross(&lr, &rr);
                if let Some(on) = item.child(NodeKind::JoinCondition) {
                    let mut kept = Vec::with_capacity(rows.len());
                    for row in rows {
                        let env = Env {
                            layout: &layout,
                            row: &row,
                            group: None,
                            outer,
                        };
                        if self.cond(&on.children[0], &env)? == Some(true) {
                            kept.push(row);
                        }
                    }
                    rows = kept;
                }
                Ok((layout, rows))
            }
            _ => Err(ExecError::Unsupported(render_node(item))),
        }
    }

    fn group(&self, layout: &Layout, rows: Vec<Row>, keys: &[Node], outer: Option<&Env>) -> Result<Vec<Unit>, ExecError> {
        if keys.is_empty() {
            let row = rows.first().cloned().unwrap_or_else(|| vec![Value::Null; layout.width]);
            return Ok(vec![Unit { row, group: Some(rows) }]);
        }
        let mut index: HashMap<Vec<ValueKey>, usize> = HashMap::new();
        let mut units: Vec<Unit> = Vec::new();
        for row in rows {
            let env = Env {
                layout,
                row: &row,
                group: None,
                outer,
            };
            let key = keys
                .iter()
                .map(|k| self.expr(k, &env).map(|v| v.key()))
                .collect::<Result<Vec<_>, _>>()?;
            match index.get(&key) {
                Some(&i) => units[i].group.as_mut().unwrap().push(row),
                None => {
                    index.insert(key, units.len());
                    units.push(Unit {
                        row: row.clone(),
                        group: Some(vec![row]),
                    });
                }
            }
        }
        Ok(units)
    }

    fn project(&self, select: &Node, env: &Env) -> Result<Row, ExecError> {
        let mut values = Vec::new();
        for item in &select.children {
            match item.kind {
                NodeKind::Star => {
                    if env.group.is_some() {
                        return Err(ExecError::Ungrouped("*".into()));
                    }
                    values.extend(env.row.iter().cloned());
                }
                NodeKind::SelectItem => values.push(self.expr(&item.children[0], env)?),
                _ => values.push(self.expr(item, env)?),
            }
        }
        Ok(values)
    }

    fn order_value(&self, e: &Node, aliases: &[&str], columns: &[String], values: &[Value], env: &Env) -> Result<Value, ExecError> {
        if e.kind == NodeKind::Literal {
            if let Ok(pos) = e.label.parse::<usize>() {
                return values
                    .get(pos.wrapping_sub(1))
                    .cloned()
                    .ok_or(ExecError::OrderPosition(pos));
            }
        }
        if e.kind == NodeKind::Column && aliases.contains(&e.label.as_str()) {
            if let Some(i) = columns.iter().position(|c| *c == e.label) {
                return Ok(values[i].clone());
            }
        }
        self.expr(e, env)
    }

    fn expr(&self, e: &Node, env: &Env) -> Result<Value, ExecError> {
        match e.kind {
            NodeKind::Column => env.lookup(&e.label),
            NodeKind::Literal => Ok(literal(&e.label)),
            NodeKind::Aggregate => self.aggregate(e, env),
            NodeKind::Subquery => {
                let m = self.query(&e.children[0], Some(env))?;
                if m.columns.len() != 1 {
                    return Err(ExecError::SubqueryColumns);
                }
                match m.rows.len() {
                    0 => Ok(Value::Null),
                    1 => Ok(m.rows[0][0].clone()),
                    _ => Err(ExecError::ScalarSubqueryRows),
                }
            }
            NodeKind::PartialPredicate => Err(ExecError::PartialQuery),
            _ => Err(ExecError::Unsupported(render_node(e))),
        }
    }

    fn aggregate(&self, e: &Node, env: &Env) -> Result<Value, ExecError> {
        let group = env.group.ok_or_else(|| ExecError::MisplacedAggregate(render_node(e)))?;
        let (func, distinct) = match e.label.split_once(' ') {
            Some((f, _)) => (f, true),
            None => (e.label.as_str(), false),
        };
        let arg = &e.children[0];
        if arg.kind == NodeKind::Star {
            return Ok(Value::Int(group.len() as i64));
        }
        let mut vals = Vec::with_capacity(group.len());
        for row in group {
            let inner = Env {
                layout: env.layout,
                row,
                group: None,
                outer: env.outer,
            };
            let v = self.expr(arg, &inner)?;
            if !v.is_null() {
                vals.push(v);
            }
        }
        if distinct {
            let mut seen = std::collections::HashSet::new();
            vals.retain(|v| seen.insert(v.key()));
        }
        let numeric = || -> Result<Vec<f64>, ExecError> {
            vals.iter()
                .map(|v| v.as_f64().ok_or_else(|| ExecError::Type(format!("{func} over non-numeric value {v}"))))
                .collect()
        };
        Ok(match func {
            "COUNT" => Value::Int(vals.len() as i64),
            _ if vals.is_empty() => Value::Null,
            "SUM" => {
                let ints: Option<i64> = vals.iter().try_fold(0i64, |acc, v| match v {
                    Value::Int(i) => acc.checked_add(*i),
                    _ => None,
                });
                match ints {
                    Some(s) => Value::Int(s),
                    None => Value::Float(numeric()?.iter().sum()),
                }
            }
            "AVG" => {
                let xs = numeric()?;
                Value::Float(xs.iter().sum::<f64>() / xs.len() as f64)
            }
            "MIN" => vals.into_iter().min_by(Value::sort_cmp).unwrap(),
            "MAX" => vals.into_iter().max_by(Value::sort_cmp).unwrap(),
            other => return Err(ExecError::Unsupported(other.to_string())),
        })
    }

    fn cond(&self, c: &Node, env: &Env) -> Result<Truth, ExecError> {
        match c.kind {
            NodeKind::LogicalAnd => {
                let mut acc = Some(true);
                for child in &c.children {
                    match self.cond(child, env)? {
                        Some(false) => return Ok(Some(false)),
                        None => acc = None,
                        Some(true) => {}
                    }
                }
                Ok(acc)
            }
            NodeKind::LogicalOr => {
                let mut acc = Some(false);
                for child in &c.children {
                    match self.cond(child, env)? {
                        Some(true) => return Ok(Some(true)),
                        None => acc = None,
                        Some(false) => {}
                    }
                }
                Ok(acc)
            }
            NodeKind::Not => Ok(self.cond(&c.children[0], env)?.map(|b| !b)),
            NodeKind::Comparison => {
                let l = self.expr(&c.children[0], env)?;
                let r = self.expr(&c.children[1], env)?;
                Ok(l.sql_cmp(&r).map(|o| match c.label.as_str() {
                    "=" => o == Ordering::Equal,
                    "<>" => o != Ordering::Equal,
                    "<" => o == Ordering::Less,
                    "<=" => o != Ordering::Greater,
                    ">" => o == Ordering::Greater,
                    _ => o != Ordering::Less,
                }))
            }
            NodeKind::InExpr => {
                let negated = c.label.starts_with("NOT");
                let lhs = self.expr(&c.children[0], env)?;
                let items: Vec<Value> = match &c.children[1..] {
                    [sub] if sub.kind == NodeKind::Subquery => {
                        let m = self.query(&sub.children[0], Some(env))?;
                        if m.columns.len() != 1 {
                            return Err(ExecError::SubqueryColumns);
                        }
                        m.rows.into_iter().map(|mut r| r.remove(0)).collect()
                    }
                    list => list.iter().map(|i| self.expr(i, env)).collect::<Result<_, _>>()?,
                };
                let t = if lhs.is_null() {
                    None
                } else if items.iter().any(|v| lhs.sql_cmp(v) == Some(Ordering::Equal)) {
                    Some(true)
                } else if items.iter().any(Value::is_null) {
                    None
                } else {
                    Some(false)
                };
                Ok(if negated { t.map(|b| !b) } else { t })
            }
            NodeKind::LikeExpr => {
                let v = self.expr(&c.children[0], env)?;
                let p = self.expr(&c.children[1], env)?;
                if v.is_null() || p.is_null() {
                    return Ok(None);
                }
                let m = like(&v.to_string(), &p.to_string());
                Ok(Some(if c.label.starts_with("NOT") { !m } else { m }))
            }
            NodeKind::BetweenExpr => {
                let x = self.expr(&c.children[0], env)?;
                let lo = self.expr(&c.children[1], env)?;
                let hi = self.expr(&c.children[2], env)?;
                let t = match (x.sql_cmp(&lo), x.sql_cmp(&hi)) {
                    (Some(a), Some(b)) => Some(a != Ordering::Less && b != Ordering::Greater),
                    _ => None,
                };
                Ok(if c.label.starts_with("NOT") { t.map(|b| !b) } else { t })
            }
            NodeKind::PartialPredicate => Err(ExecError::PartialQuery),
            _ => Err(ExecError::Unsupported(render_node(c))),
        }
    }
}

fn cross(a: &[Row], b: &[Row]) -> Vec<Row> {
    let mut out = Vec::with_capacity(a.len() * b.len());
    for x in a {
        for y in b {
            let mut r = x.clone();
            r.extend(y.iter().cloned());
            out.push(r);
        }
    }
    out
}

fn literal(label: &str) -> Value {
    if let Some(inner) = label.strip_prefix('\'').and_then(|s| s.strip_suffix('\'')) {
        return Value::Text(inner.replace("''", "'"));
    }
    if label == "NULL" {
        return Value::Null;
    }
    if !label.contains('.') {
        if let Ok(i) = label.parse() {
            return Value::Int(i);
        }
    }
    label.parse().map(Value::Float).unwrap_or(Value::Null)
}

/// SQL LIKE with `%` and `_`.
fn like(s: &str, p: &str) -> bool {
    let s: Vec<char> = s.chars().collect();
    let p: Vec<char> = p.chars().collect();
    // ok[j] = pattern prefix of length j matches the text prefix so far
    let mut ok = vec![false; p.len() + 1];
    ok[0] = true;
    for j in 1..=p.len() {
        ok[j] = ok[j - 1] && p[j - 1] == '%';
    }
    for &ch in &s {
        let mut next = vec![false; p.len() + 1];
        for j in 1..=p.len() {
            next[j] = match p[j - 1] {
                '%' => next[j - 1] || ok[j],
                '_' => ok[j - 1],
                pc => ok[j - 1] && pc == ch,
            };
        }
        ok = next;
    }
    ok[p.len()]
}

fn contains_aggregate(n: &Node) -> bool {
    match n.kind {
        NodeKind::Aggregate => true,
        NodeKind::Subquery => false,
        _ => n.children.iter().any(contains_aggregate),
    }
}

fn is_output_ref(e: &Node, aliases: &[&str]) -> bool {
    (e.kind == NodeKind::Literal && e.label.parse::<usize>().is_ok())
        || (e.kind == NodeKind::Column && aliases.contains(&e.label.as_str()))
}

fn check_grouped(n: &Node, keys: &[Node], layout: &Layout) -> Result<(), ExecError> {
    if keys.contains(n) {
        return Ok(());
    }
    match n.kind {
        NodeKind::Aggregate | NodeKind::Subquery => Ok(()),
        NodeKind::Star => Err(ExecError::Ungrouped("*".into())),
        NodeKind::Column => match layout.resolve(&n.label)? {
            Some(slot) => {
                let grouped = keys
                    .iter()
                    .any(|k| k.kind == NodeKind::Column && layout.resolve(&k.label).ok().flatten() == Some(slot));
                if grouped {
                    Ok(())
                } else {
                    Err(ExecError::Ungrouped(n.label.clone()))
                }
            }
            None => Ok(()),
        },
        _ => n.children.iter().try_for_each(|c| check_grouped(c, keys, layout)),
    }
}

fn output_columns(select: &Node, layout: &Layout) -> Vec<String> {
    let mut cols = Vec::new();
    for item in &select.children {
        match item.kind {
            NodeKind::Star => {
                for b in &layout.bindings {
                    cols.extend(b.columns.iter().cloned());
                }
            }
            NodeKind::SelectItem => cols.push(item.label.clone()),
            NodeKind::Column => cols.push(item.label.rsplit('.').next().unwrap_or(&item.label).to_string()),
            _ => cols.push(render_node(item)),
        }
    }
    cols
}
