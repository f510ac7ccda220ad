#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Keyword {
    Select,
    Distinct,
    From,
    Where,
    And,
    Or,
    Not,
    In,
    Like,
    Between,
    Group,
    By,
    Having,
    Order,
    Asc,
    Desc,
    As,
    Join,
    Inner,
    On,
    Null,
}

impl Keyword {
    fn lookup(word: &str) -> Option<Keyword> {
        let kw = match word.to_ascii_uppercase().as_str() {
            "SELECT" => Keyword::Select,
            "DISTINCT" => Keyword::Distinct,
            "FROM" => Keyword::From,
            "WHERE" => Keyword::Where,
            "AND" => Keyword::And,
            "OR" => Keyword::Or,
            "NOT" => Keyword::Not,
            "IN" => Keyword::In,
            "LIKE" => Keyword::Like,
            "BETWEEN" => Keyword::Between,
            "GROUP" => Keyword::Group,
            "BY" => Keyword::By,
            "HAVING" => Keyword::Having,
            "ORDER" => Keyword::Order,
            "ASC" => Keyword::Asc,
            "DESC" => Keyword::Desc,
            "AS" => Keyword::As,
            "JOIN" => Keyword::Join,
            "INNER" => Keyword::Inner,
            "ON" => Keyword::On,
            "NULL" => Keyword::Null,
            _ => return None,
        };
        Some(kw)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Tok {
    Keyword(Keyword),
    /// Lower-cased identifier.
    Ident(String),
    Number(String),
    /// String literal content, quotes removed.
    Str(String),
    /// A string literal that runs into the end of the input.
    Unterminated,
    Comma,
    Dot,
    Star,
    LParen,
    RParen,
    Minus,
    Semicolon,
    /// Comparison operator in canonical spelling (`!=` becomes `<>`).
    Op(&'static str),
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Token {
    pub tok: Tok,
    pub pos: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct LexError {
    pub pos: usize,
    pub found: char,
}

pub(crate) fn tokenize(input: &str) -> Result<Vec<Token>, LexError> {
    let bytes: Vec<(usize, char)> = input.char_indices().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let (pos, c) = bytes[i];
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        // line comments
        if c == '-' && bytes.get(i + 1).is_some_and(|&(_, n)| n == '-') {
            while i < bytes.len() && bytes[i].1 != '\n' {
                i += 1;
            }
            continue;
        }
        let single = |tok| Some((tok, 1));
        let simple = match c {
            ',' => single(Tok::Comma),
            '.' if !bytes.get(i + 1).is_some_and(|&(_, n)| n.is_ascii_digit()) => single(Tok::Dot),
            '*' => single(Tok::Star),
            '(' => single(Tok::LParen),
            ')' => single(Tok::RParen),
            '-' => single(Tok::Minus),
            ';' => single(Tok::Semicolon),
            '=' => single(Tok::Op("=")),
            '<' => match bytes.get(i + 1).map(|&(_, n)| n) {
                Some('=') => Some((Tok::Op("<="), 2)),
                Some('>') => Some((Tok::Op("<>"), 2)),
                _ => single(Tok::Op("<")),
            },
            '>' => match bytes.get(i + 1).map(|&(_, n)| n) {
                Some('=') => Some((Tok::Op(">="), 2)),
                _ => single(Tok::Op(">")),
            },
            '!' if bytes.get(i + 1).is_some_and(|&(_, n)| n == '=') => Some((Tok::Op("<>"), 2)),
            _ => None,
        };
        if let Some((tok, width)) = simple {
            out.push(Token { tok, pos });
            i += width;
            continue;
        }
        if c == '\'' || c == '"' {
            let quote = c;
            let mut content = String::new();
            let mut j = i + 1;
            let mut closed = false;
            while j < bytes.len() {
                let ch = bytes[j].1;
                if ch == quote {
                    if bytes.get(j + 1).is_some_and(|&(_, n)| n == quote) {
                        content.push(quote);
                        j += 2;
                        continue;
                    }
                    closed = true;
                    j += 1;
                    break;
                }
                content.push(ch);
                j += 1;
            }
            let tok = if closed { Tok::Str(content) } else { Tok::Unterminated };
            out.push(Token { tok, pos });
            i = j;
            continue;
        }
        if c.is_ascii_digit() || c == '.' {
            let mut j = i;
            let mut seen_dot = false;
            while j < bytes.len() {
                let ch = bytes[j].1;
                if ch.is_ascii_digit() {
                    j += 1;
                } else if ch == '.' && !seen_dot {
                    seen_dot = true;
                    j += 1;
                } else {
                    break;
                }
            }
            let text: String = bytes[i..j].iter().map(|&(_, ch)| ch).collect();
            out.push(Token {
                tok: Tok::Number(text),
                pos,
            });
            i = j;
            continue;
        }
        if c.is_alphabetic() || c == '_' {
            let mut j = i;
            while j < bytes.len() && (bytes[j].1.is_alphanumeric() || bytes[j].1 == '_') {
                j += 1;
            }
            let word: String = bytes[i..j].iter().map(|&(_, ch)| ch).collect();
            let tok = match Keyword::lookup(&word) {
                Some(kw) => Tok::Keyword(kw),
                None => Tok::Ident(word.to_lowercase()),
            };
            out.push(Token { tok, pos });
            i = j;
            continue;
        }
        return Err(LexError { pos, found: c });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<Tok> {
        tokenize(s).unwrap().into_iter().map(|t| t.tok).collect()
    }

    #[test]
    fn keywords_and_identifiers_are_case_normalized() {
        assert_eq!(
            toks("select Dept_ID from T"),
            vec![
                Tok::Keyword(Keyword::Select),
                Tok::Ident("dept_id".into()),
                Tok::Keyword(Keyword::From),
                Tok::Ident("t".into()),
            ]
        );
    }

    #[test]
    fn both_quote_styles_yield_strings() {
        assert_eq!(toks("\"SALES\" 'it''s'"), vec![Tok::Str("SALES".into()), Tok::Str("it's".into())]);
        assert_eq!(toks("'open"), vec![Tok::Unterminated]);
    }

    #[test]
    fn operators() {
        assert_eq!(
            toks("<= <> != >= < > ="),
            vec![
                Tok::Op("<="),
                Tok::Op("<>"),
                Tok::Op("<>"),
                Tok::Op(">="),
                Tok::Op("<"),
                Tok::Op(">"),
                Tok::Op("="),
            ]
        );
    }

    #[test]
    fn qualified_names_and_numbers() {
        assert_eq!(
            toks("e.x 3.25 .5"),
            vec![
                Tok::Ident("e".into()),
                Tok::Dot,
                Tok::Ident("x".into()),
                Tok::Number("3.25".into()),
                Tok::Number(".5".into()),
            ]
        );
    }

    #[test]
    fn rejects_unknown_characters() {
        assert_eq!(tokenize("SELECT #").unwrap_err(), LexError { pos: 7, found: '#' });
    }
}
