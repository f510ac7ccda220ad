//! Recursive-descent parser for the supported `SELECT` subset.
//!
//! Running out of input in the middle of a construct is not an error: the
//! unfinished piece is dropped, or kept as a [`NodeKind::PartialPredicate`]
//! when a predicate has its left operand but nothing after it. Only input
//! that has no prefix reading in the grammar is rejected.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::lexer::{tokenize, Keyword, Tok, Token};
use super::{Node, NodeKind, QueryTree};

#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize, Deserialize)]
#[error("parse error at byte {position}: expected {expected}")]
pub struct ParseError {
    pub position: usize,
    pub expected: String,
}

enum Fail {
    /// Input ended inside the construct being parsed.
    Incomplete,
    Syntax(ParseError),
}

type PResult<T> = Result<T, Fail>;

const AGGREGATES: [&str; 5] = ["COUNT", "SUM", "AVG", "MIN", "MAX"];

pub fn parse(sql: &str) -> Result<QueryTree, ParseError> {
    if sql.trim().is_empty() {
        return Err(ParseError {
            position: 0,
            expected: "SELECT".into(),
        });
    }
    let toks = tokenize(sql).map_err(|e| ParseError {
        position: e.pos,
        expected: format!("a valid token, found {:?}", e.found),
    })?;
    let mut p = Parser {
        toks,
        idx: 0,
        end: sql.len(),
    };
    let root = match p.query() {
        Ok(root) => root,
        Err(Fail::Syntax(e)) => return Err(e),
        // `SELECT DISTINCT` with nothing after it
        Err(Fail::Incomplete) => Node::new(NodeKind::Query, "SELECT", vec![select_list(vec![])]),
    };
    p.eat(&Tok::Semicolon);
    if !p.at_eof() {
        return Err(p.expected("end of query"));
    }
    Ok(QueryTree::new(root))
}

fn select_list(items: Vec<Node>) -> Node {
    Node::new(NodeKind::SelectList, "", items)
}

fn partial(lhs: Node) -> Node {
    Node::new(NodeKind::PartialPredicate, "", vec![lhs])
}

/// Canonical single-quoted spelling of a string literal.
pub(crate) fn quote(content: &str) -> String {
    format!("'{}'", content.replace('\'', "''"))
}

struct Parser {
    toks: Vec<Token>,
    idx: usize,
    end: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.idx).map(|t| &t.tok)
    }

    fn peek_at(&self, offset: usize) -> Option<&Tok> {
        self.toks.get(self.idx + offset).map(|t| &t.tok)
    }

    fn at_eof(&self) -> bool {
        self.idx >= self.toks.len()
    }

    fn bump(&mut self) -> Option<Tok> {
        let tok = self.toks.get(self.idx).map(|t| t.tok.clone());
        self.idx += 1;
        tok
    }

    fn eat(&mut self, tok: &Tok) -> bool {
        if self.peek() == Some(tok) {
            self.idx += 1;
            true
        } else {
            false
        }
    }

    fn eat_kw(&mut self, kw: Keyword) -> bool {
        self.eat(&Tok::Keyword(kw))
    }

    fn expected(&self, what: &str) -> ParseError {
        ParseError {
            position: self.toks.get(self.idx).map_or(self.end, |t| t.pos),
            expected: what.into(),
        }
    }

    /// Incomplete at end of input, a syntax error otherwise.
    fn fail(&self, what: &str) -> Fail {
        if self.at_eof() {
            Fail::Incomplete
        } else {
            Fail::Syntax(self.expected(what))
        }
    }

    fn subquery_follows(&self) -> bool {
        self.peek() == Some(&Tok::LParen) && self.peek_at(1) == Some(&Tok::Keyword(Keyword::Select))
    }

    fn query(&mut self) -> PResult<Node> {
        if !self.eat_kw(Keyword::Select) {
            return Err(Fail::Syntax(self.expected("SELECT")));
        }
        let label = if self.eat_kw(Keyword::Distinct) {
            "SELECT DISTINCT"
        } else {
            "SELECT"
        };
        let items = self.list(Self::select_item)?;
        let mut clauses = vec![select_list(items)];

        if self.eat_kw(Keyword::From) {
            let tables = self.list(Self::from_item)?;
            if !tables.is_empty() {
                clauses.push(Node::new(NodeKind::FromList, "FROM", tables));
            }
        }
        if self.eat_kw(Keyword::Where) {
            if let Some(cond) = self.tolerant(Self::or_expr)? {
                clauses.push(Node::new(NodeKind::Where, "WHERE", vec![cond]));
            }
        }
        if self.eat_kw(Keyword::Group) {
            if self.eat_kw(Keyword::By) {
                let cols = self.list(Self::operand)?;
                if !cols.is_empty() {
                    clauses.push(Node::new(NodeKind::GroupBy, "GROUP BY", cols));
                }
            } else if !self.at_eof() {
                return Err(Fail::Syntax(self.expected("BY")));
            }
        }
        if self.eat_kw(Keyword::Having) {
            if let Some(cond) = self.tolerant(Self::or_expr)? {
                clauses.push(Node::new(NodeKind::Having, "HAVING", vec![cond]));
            }
        }
        if self.eat_kw(Keyword::Order) {
            if self.eat_kw(Keyword::By) {
                let items = self.list(Self::order_item)?;
                if !items.is_empty() {
                    clauses.push(Node::new(NodeKind::OrderBy, "ORDER BY", items));
                }
            } else if !self.at_eof() {
                return Err(Fail::Syntax(self.expected("BY")));
            }
        }
        Ok(Node::new(NodeKind::Query, label, clauses))
    }

    /// Runs `item`, mapping an unfinished construct to `None`.
    fn tolerant(&mut self, item: fn(&mut Self) -> PResult<Node>) -> PResult<Option<Node>> {
        match item(self) {
            Ok(node) => Ok(Some(node)),
            Err(Fail::Incomplete) => Ok(None),
            Err(e) => Err(e),
        }
    }

    /// Comma-separated list; an unfinished trailing element is dropped.
    fn list(&mut self, item: fn(&mut Self) -> PResult<Node>) -> PResult<Vec<Node>> {
        let mut out = Vec::new();
        while !self.at_eof() {
            match self.tolerant(item)? {
                Some(node) => out.push(node),
                None => break,
            }
            if !self.eat(&Tok::Comma) {
                break;
            }
        }
        Ok(out)
    }

    fn select_item(&mut self) -> PResult<Node> {
        if self.eat(&Tok::Star) {
            return Ok(Node::leaf(NodeKind::Star, "*"));
        }
        let expr = self.operand()?;
        let alias = if self.eat_kw(Keyword::As) {
            match self.peek() {
                Some(Tok::Ident(_)) => self.ident(),
                None => None,
                Some(_) => return Err(Fail::Syntax(self.expected("alias"))),
            }
        } else if matches!(self.peek(), Some(Tok::Ident(_))) {
            self.ident()
        } else {
            None
        };
        Ok(match alias {
            Some(alias) => Node::new(NodeKind::SelectItem, alias, vec![expr]),
            None => expr,
        })
    }

    fn ident(&mut self) -> Option<String> {
        match self.peek() {
            Some(Tok::Ident(name)) => {
                let name = name.clone();
                self.idx += 1;
                Some(name)
            }
            _ => None,
        }
    }

    fn table_ref(&mut self) -> PResult<Node> {
        let name = self.ident().ok_or_else(|| self.fail("table name"))?;
        let alias = if self.eat_kw(Keyword::As) {
            match self.ident() {
                Some(a) => Some(a),
                None if self.at_eof() => None,
                None => return Err(Fail::Syntax(self.expected("alias"))),
            }
        } else {
            self.ident()
        };
        let children = alias
            .map(|a| vec![Node::leaf(NodeKind::Identifier, a)])
            .unwrap_or_default();
        Ok(Node::new(NodeKind::TableRef, name, children))
    }

    fn from_item(&mut self) -> PResult<Node> {
        let mut left = self.table_ref()?;
        loop {
            if self.eat_kw(Keyword::Inner) {
                if !self.eat_kw(Keyword::Join) {
                    if self.at_eof() {
                        break;
                    }
                    return Err(Fail::Syntax(self.expected("JOIN")));
                }
            } else if !self.eat_kw(Keyword::Join) {
                break;
            }
            let Some(right) = self.tolerant(Self::table_ref)? else {
                break;
            };
            let mut children = vec![left, right];
            if self.eat_kw(Keyword::On) {
                if let Some(cond) = self.tolerant(Self::or_expr)? {
                    children.push(Node::new(NodeKind::JoinCondition, "ON", vec![cond]));
                }
            }
            left = Node::new(NodeKind::Join, "JOIN", children);
        }
        Ok(left)
    }

    fn order_item(&mut self) -> PResult<Node> {
        let expr = self.operand()?;
        let dir = if self.eat_kw(Keyword::Desc) {
            "DESC"
        } else {
            self.eat_kw(Keyword::Asc);
            "ASC"
        };
        Ok(Node::new(NodeKind::OrderItem, dir, vec![expr]))
    }

    fn or_expr(&mut self) -> PResult<Node> {
        self.logical(Keyword::Or, NodeKind::LogicalOr, "OR", Self::and_expr)
    }

    fn and_expr(&mut self) -> PResult<Node> {
        self.logical(Keyword::And, NodeKind::LogicalAnd, "AND", Self::not_expr)
    }

    /// n-ary connective; nested connectives of the same kind are flattened.
    fn logical(
        &mut self,
        kw: Keyword,
        kind: NodeKind,
        label: &str,
        operand: fn(&mut Self) -> PResult<Node>,
    ) -> PResult<Node> {
        let mut items = vec![operand(self)?];
        while self.eat_kw(kw) {
            match self.tolerant(operand)? {
                Some(node) => items.push(node),
                None => break,
            }
        }
        if items.len() == 1 {
            return Ok(items.pop().unwrap());
        }
        let mut flat = Vec::with_capacity(items.len());
        for item in items {
            if item.kind == kind {
                flat.extend(item.children);
            } else {
                flat.push(item);
            }
        }
        Ok(Node::new(kind, label, flat))
    }

    fn not_expr(&mut self) -> PResult<Node> {
        if self.eat_kw(Keyword::Not) {
            let inner = self.not_expr()?;
            return Ok(Node::new(NodeKind::Not, "NOT", vec![inner]));
        }
        self.predicate()
    }

    fn predicate(&mut self) -> PResult<Node> {
        if self.peek() == Some(&Tok::LParen) && !self.subquery_follows() {
            self.bump();
            let inner = self.or_expr()?;
            if !self.eat(&Tok::RParen) && !self.at_eof() {
                return Err(Fail::Syntax(self.expected(")")));
            }
            return Ok(inner);
        }
        let lhs = self.operand()?;
        let negated = self.peek() == Some(&Tok::Keyword(Keyword::Not))
            && matches!(
                self.peek_at(1),
                Some(Tok::Keyword(Keyword::In | Keyword::Like | Keyword::Between))
            );
        if negated {
            self.bump();
        } else if self.peek() == Some(&Tok::Keyword(Keyword::Not)) && self.peek_at(1).is_none() {
            self.bump();
            return Ok(partial(lhs));
        }
        let neg = |label: &str| {
            if negated {
                format!("NOT {label}")
            } else {
                label.to_string()
            }
        };
        let node = match self.peek() {
            Some(Tok::Op(op)) => {
                let op = *op;
                self.bump();
                match self.tolerant(Self::operand)? {
                    Some(rhs) => Node::new(NodeKind::Comparison, op, vec![lhs, rhs]),
                    None => partial(lhs),
                }
            }
            Some(Tok::Keyword(Keyword::In)) => {
                self.bump();
                return self.in_rest(lhs, neg("IN"));
            }
            Some(Tok::Keyword(Keyword::Like)) => {
                self.bump();
                match self.tolerant(Self::operand)? {
                    Some(pat) => Node::new(NodeKind::LikeExpr, neg("LIKE"), vec![lhs, pat]),
                    None => partial(lhs),
                }
            }
            Some(Tok::Keyword(Keyword::Between)) => {
                self.bump();
                let Some(lo) = self.tolerant(Self::operand)? else {
                    return Ok(partial(lhs));
                };
                if !self.eat_kw(Keyword::And) {
                    if self.at_eof() {
                        return Ok(partial(lhs));
                    }
                    return Err(Fail::Syntax(self.expected("AND")));
                }
                let Some(hi) = self.tolerant(Self::operand)? else {
                    return Ok(partial(lhs));
                };
                Node::new(NodeKind::BetweenExpr, neg("BETWEEN"), vec![lhs, lo, hi])
            }
            _ => partial(lhs),
        };
        Ok(node)
    }

    fn in_rest(&mut self, lhs: Node, label: String) -> PResult<Node> {
        if !self.eat(&Tok::LParen) {
            if self.at_eof() {
                return Ok(partial(lhs));
            }
            return Err(Fail::Syntax(self.expected("(")));
        }
        let mut children = vec![lhs];
        if self.peek() == Some(&Tok::Keyword(Keyword::Select)) {
            let sub = self.query()?;
            let has_selection = sub
                .child(NodeKind::SelectList)
                .is_some_and(|s| !s.children.is_empty());
            if !has_selection {
                return Ok(partial(children.pop().unwrap()));
            }
            children.push(Node::new(NodeKind::Subquery, "", vec![sub]));
        } else {
            children.extend(self.list(Self::operand)?);
            if children.len() == 1 {
                if self.at_eof() {
                    return Ok(partial(children.pop().unwrap()));
                }
                return Err(Fail::Syntax(self.expected("value list")));
            }
        }
        if !self.eat(&Tok::RParen) && !self.at_eof() {
            return Err(Fail::Syntax(self.expected(")")));
        }
        Ok(Node::new(NodeKind::InExpr, label, children))
    }

    fn operand(&mut self) -> PResult<Node> {
        let Some(tok) = self.peek().cloned() else {
            return Err(Fail::Incomplete);
        };
        match tok {
            Tok::Number(n) => {
                self.bump();
                Ok(Node::leaf(NodeKind::Literal, n))
            }
            Tok::Minus => {
                self.bump();
                match self.bump() {
                    Some(Tok::Number(n)) => Ok(Node::leaf(NodeKind::Literal, format!("-{n}"))),
                    None => Err(Fail::Incomplete),
                    Some(_) => {
                        self.idx -= 1;
                        Err(Fail::Syntax(self.expected("number")))
                    }
                }
            }
            Tok::Str(s) => {
                self.bump();
                Ok(Node::leaf(NodeKind::Literal, quote(&s)))
            }
            Tok::Unterminated => {
                self.bump();
                Err(Fail::Incomplete)
            }
            Tok::Keyword(Keyword::Null) => {
                self.bump();
                Ok(Node::leaf(NodeKind::Literal, "NULL"))
            }
            Tok::Ident(name) => {
                self.bump();
                let upper = name.to_ascii_uppercase();
                if self.peek() == Some(&Tok::LParen) && AGGREGATES.contains(&upper.as_str()) {
                    return self.aggregate(upper);
                }
                if self.eat(&Tok::Dot) {
                    let col = self.ident().ok_or_else(|| self.fail("column name"))?;
                    return Ok(Node::leaf(NodeKind::Column, format!("{name}.{col}")));
                }
                Ok(Node::leaf(NodeKind::Column, name))
            }
            Tok::LParen if self.subquery_follows() => {
                self.bump();
                let sub = self.query()?;
                if !self.eat(&Tok::RParen) && !self.at_eof() {
                    return Err(Fail::Syntax(self.expected(")")));
                }
                if sub.child(NodeKind::SelectList).is_some_and(|s| s.children.is_empty()) {
                    return Err(Fail::Incomplete);
                }
                Ok(Node::new(NodeKind::Subquery, "", vec![sub]))
            }
            _ => Err(Fail::Syntax(self.expected("expression"))),
        }
    }

    fn aggregate(&mut self, func: String) -> PResult<Node> {
        self.bump(); // (
        let label = if self.eat_kw(Keyword::Distinct) {
            format!("{func} DISTINCT")
        } else {
            func.clone()
        };
        let arg = if func == "COUNT" && label == func && self.eat(&Tok::Star) {
            Node::leaf(NodeKind::Star, "*")
        } else {
            self.operand()?
        };
        if !self.eat(&Tok::RParen) {
            return Err(self.fail(")"));
        }
        Ok(Node::new(NodeKind::Aggregate, label, vec![arg]))
    }
}
