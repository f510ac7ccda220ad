use super::{Node, NodeKind, QueryTree};

/// Renders a tree as single-line SQL text.
pub fn render(tree: &QueryTree) -> String {
    let mut out = String::new();
    write_node(&tree.root, &mut out);
    out
}

pub(crate) fn render_node(node: &Node) -> String {
    let mut out = String::new();
    write_node(node, &mut out);
    out
}

fn write_list(nodes: &[Node], sep: &str, out: &mut String) {
    for (i, n) in nodes.iter().enumerate() {
        if i > 0 {
            out.push_str(sep);
        }
        write_node(n, out);
    }
}

fn write_connective(node: &Node, sep: &str, wrap: impl Fn(NodeKind) -> bool, out: &mut String) {
    for (i, c) in node.children.iter().enumerate() {
        if i > 0 {
            out.push_str(sep);
        }
        if wrap(c.kind) {
            out.push('(');
            write_node(c, out);
            out.push(')');
        } else {
            write_node(c, out);
        }
    }
}

fn write_node(node: &Node, out: &mut String) {
    use NodeKind::*;
    match node.kind {
        Query => {
            out.push_str(&node.label);
            for clause in &node.children {
                out.push(' ');
                write_node(clause, out);
            }
            if node.children.first().is_some_and(|c| c.children.is_empty()) {
                // `SELECT` with an empty select list
                while out.ends_with(' ') {
                    out.pop();
                }
            }
        }
        SelectList => write_list(&node.children, ", ", out),
        SelectItem => {
            write_list(&node.children, " ", out);
            out.push_str(" AS ");
            out.push_str(&node.label);
        }
        Aggregate => {
            let (func, distinct) = match node.label.split_once(' ') {
                Some((f, _)) => (f, true),
                None => (node.label.as_str(), false),
            };
            out.push_str(func);
            out.push('(');
            if distinct {
                out.push_str("DISTINCT ");
            }
            write_list(&node.children, ", ", out);
            out.push(')');
        }
        FromList | GroupBy | OrderBy => {
            out.push_str(&node.label);
            out.push(' ');
            write_list(&node.children, ", ", out);
        }
        Where | Having | JoinCondition => {
            out.push_str(&node.label);
            out.push(' ');
            write_list(&node.children, " ", out);
        }
        TableRef => {
            out.push_str(&node.label);
            for alias in &node.children {
                out.push(' ');
                write_node(alias, out);
            }
        }
        Join => {
            let mut kids = node.children.iter();
            if let Some(left) = kids.next() {
                write_node(left, out);
            }
            if let Some(right) = kids.next() {
                out.push_str(" JOIN ");
                write_node(right, out);
            }
            for cond in kids {
                out.push(' ');
                write_node(cond, out);
            }
        }
        Comparison | LikeExpr => {
            if let [lhs, rhs] = node.children.as_slice() {
                write_node(lhs, out);
                out.push(' ');
                out.push_str(&node.label);
                out.push(' ');
                write_node(rhs, out);
            } else {
                write_list(&node.children, " ", out);
            }
        }
        InExpr => {
            let (lhs, rest) = node.children.split_first().expect("IN without operand");
            write_node(lhs, out);
            out.push(' ');
            out.push_str(&node.label);
            out.push(' ');
            if let [sub] = rest {
                if sub.kind == Subquery {
                    write_node(sub, out);
                    return;
                }
            }
            out.push('(');
            write_list(rest, ", ", out);
            out.push(')');
        }
        BetweenExpr => {
            if let [x, lo, hi] = node.children.as_slice() {
                write_node(x, out);
                out.push(' ');
                out.push_str(&node.label);
                out.push(' ');
                write_node(lo, out);
                out.push_str(" AND ");
                write_node(hi, out);
            }
        }
        LogicalAnd => write_connective(node, " AND ", |k| k == LogicalOr, out),
        LogicalOr => write_connective(node, " OR ", |_| false, out),
        Not => {
            out.push_str("NOT ");
            write_connective(node, " ", |k| matches!(k, LogicalAnd | LogicalOr), out);
        }
        Subquery => {
            out.push('(');
            write_list(&node.children, " ", out);
            out.push(')');
        }
        OrderItem => {
            write_list(&node.children, " ", out);
            if node.label == "DESC" {
                out.push_str(" DESC");
            }
        }
        Predicate | PartialPredicate => write_list(&node.children, " ", out),
        Star | Column | Literal | Identifier => out.push_str(&node.label),
    }
}
