//! Finite-language regular expressions for EXPRESSION inputs.
//!
//! Supported syntax: literal characters (backslash escapes any character),
//! character classes `[abc]` / `[a-z0-9]`, grouping `( )`, alternation `|`,
//! and bounded repetition `?`, `{m}`, `{m,n}`. Anchors `^`/`$` at the ends are
//! accepted and ignored. Unbounded repetition (`*`, `+`, `{m,}`) and `.` are
//! rejected because the language must be finite to enumerate.

use std::collections::BTreeSet;

use super::DataGenError;

/// Enumeration aborts once an intermediate language exceeds this many strings.
pub const MAX_LANGUAGE: usize = 1 << 20;

#[derive(Debug, Clone, PartialEq)]
enum Node {
    Chars(BTreeSet<char>),
    Concat(Vec<Node>),
    Alt(Vec<Node>),
    Repeat(Box<Node>, usize, usize),
}

struct Parser<'a> {
    src: &'a str,
    chars: Vec<char>,
    pos: usize,
}

fn unsupported(src: &str, why: impl std::fmt::Display) -> DataGenError {
    DataGenError::RegexUnsupported(format!("{src:?}: {why}"))
}

impl Parser<'_> {
    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek();
        self.pos += 1;
        c
    }

    fn err(&self, why: impl std::fmt::Display) -> DataGenError {
        unsupported(self.src, format!("{why} at offset {}", self.pos))
    }

    fn alternation(&mut self) -> Result<Node, DataGenError> {
        let mut branches = vec![self.concat()?];
        while self.peek() == Some('|') {
            self.pos += 1;
            branches.push(self.concat()?);
        }
        Ok(if branches.len() == 1 {
            branches.pop().unwrap()
        } else {
            Node::Alt(branches)
        })
    }

    fn concat(&mut self) -> Result<Node, DataGenError> {
        let mut items = Vec::new();
        while let Some(c) = self.peek() {
            if c == '|' || c == ')' {
                break;
            }
            let atom = self.atom()?;
            items.push(self.quantified(atom)?);
        }
        Ok(Node::Concat(items))
    }

    fn atom(&mut self) -> Result<Node, DataGenError> {
        match self.bump() {
            Some('(') => {
                let inner = self.alternation()?;
                if self.bump() != Some(')') {
                    return Err(self.err("unclosed group"));
                }
                Ok(inner)
            }
            Some('[') => self.class(),
            Some('\\') => match self.bump() {
                Some(c) => Ok(Node::Chars(BTreeSet::from([c]))),
                None => Err(self.err("dangling escape")),
            },
            Some('.') => Err(self.err("'.' matches an unbounded alphabet")),
            Some(c @ ('*' | '+' | '?' | '{' | '}' | ']')) => Err(self.err(format!("unexpected {c:?}"))),
            Some(c) => Ok(Node::Chars(BTreeSet::from([c]))),
            None => Err(self.err("unexpected end")),
        }
    }

    fn class(&mut self) -> Result<Node, DataGenError> {
        let mut set = BTreeSet::new();
        if self.peek() == Some('^') {
            return Err(self.err("negated classes are unbounded"));
        }
        loop {
            let c = match self.bump() {
                Some(']') if !set.is_empty() => return Ok(Node::Chars(set)),
                Some('\\') => self.bump().ok_or_else(|| self.err("dangling escape"))?,
                Some(c) => c,
                None => return Err(self.err("unclosed class")),
            };
            if self.peek() == Some('-') && self.chars.get(self.pos + 1).is_some_and(|&n| n != ']') {
                self.pos += 1;
                let hi = self.bump().unwrap();
                if hi < c {
                    return Err(self.err(format!("reversed range {c}-{hi}")));
                }
                set.extend(c..=hi);
            } else {
                set.insert(c);
            }
        }
    }

    fn number(&mut self) -> Result<usize, DataGenError> {
        let start = self.pos;
        while self.peek().is_some_and(|c| c.is_ascii_digit()) {
            self.pos += 1;
        }
        let digits: String = self.chars[start..self.pos].iter().collect();
        digits.parse().map_err(|_| self.err("expected a repetition count"))
    }

    fn quantified(&mut self, atom: Node) -> Result<Node, DataGenError> {
        match self.peek() {
            Some('*') | Some('+') => Err(self.err("unbounded repetition")),
            Some('?') => {
                self.pos += 1;
                Ok(Node::Repeat(Box::new(atom), 0, 1))
            }
            Some('{') => {
                self.pos += 1;
                let lo = self.number()?;
                let hi = match self.bump() {
                    Some('}') => lo,
                    Some(',') => {
                        if self.peek() == Some('}') {
                            return Err(self.err("unbounded repetition"));
                        }
                        let hi = self.number()?;
                        if self.bump() != Some('}') {
                            return Err(self.err("unclosed repetition"));
                        }
                        hi
                    }
                    _ => return Err(self.err("malformed repetition")),
                };
                if hi < lo {
                    return Err(self.err(format!("repetition {{{lo},{hi}}} is empty")));
                }
                Ok(Node::Repeat(Box::new(atom), lo, hi))
            }
            _ => Ok(atom),
        }
    }
}

fn parse(src: &str) -> Result<Node, DataGenError> {
    let body = src.strip_prefix('^').unwrap_or(src);
    let body = body.strip_suffix('$').unwrap_or(body);
    let mut p = Parser {
        src,
        chars: body.chars().collect(),
        pos: 0,
    };
    let node = p.alternation()?;
    if p.pos != p.chars.len() {
        return Err(p.err("unbalanced ')'"));
    }
    Ok(node)
}

fn alphabet_of(node: &Node, out: &mut BTreeSet<char>) {
    match node {
        Node::Chars(s) => out.extend(s),
        Node::Concat(v) | Node::Alt(v) => v.iter().for_each(|n| alphabet_of(n, out)),
        Node::Repeat(n, _, _) => alphabet_of(n, out),
    }
}

fn check_size(src: &str, n: usize) -> Result<(), DataGenError> {
    if n > MAX_LANGUAGE {
        return Err(DataGenError::RangeTooLarge(format!(
            "language of {src:?} exceeds {MAX_LANGUAGE} strings"
        )));
    }
    Ok(())
}

fn concat_sets(src: &str, a: &BTreeSet<String>, b: &BTreeSet<String>) -> Result<BTreeSet<String>, DataGenError> {
    check_size(src, a.len().saturating_mul(b.len()))?;
    Ok(a.iter()
        .flat_map(|x| b.iter().map(move |y| format!("{x}{y}")))
        .collect())
}

fn language_of(src: &str, node: &Node) -> Result<BTreeSet<String>, DataGenError> {
    match node {
        Node::Chars(s) => Ok(s.iter().map(|c| c.to_string()).collect()),
        Node::Concat(items) => {
            let mut acc = BTreeSet::from([String::new()]);
            for item in items {
                acc = concat_sets(src, &acc, &language_of(src, item)?)?;
            }
            Ok(acc)
        }
        Node::Alt(branches) => {
            let mut acc = BTreeSet::new();
            for b in branches {
                acc.extend(language_of(src, b)?);
                check_size(src, acc.len())?;
            }
            Ok(acc)
        }
        Node::Repeat(inner, lo, hi) => {
            let base = language_of(src, inner)?;
            let mut power = BTreeSet::from([String::new()]);
            let mut acc = BTreeSet::new();
            for k in 0..=*hi {
                if k >= *lo {
                    acc.extend(power.iter().cloned());
                    check_size(src, acc.len())?;
                }
                if k < *hi {
                    power = concat_sets(src, &power, &base)?;
                }
            }
            Ok(acc)
        }
    }
}

/// Number of distinct characters the expression can emit.
pub fn alphabet_size(src: &str) -> Result<usize, DataGenError> {
    let mut set = BTreeSet::new();
    alphabet_of(&parse(src)?, &mut set);
    Ok(set.len())
}

/// Every string matched by the expression, sorted lexicographically.
pub fn language(src: &str) -> Result<Vec<String>, DataGenError> {
    Ok(language_of(src, &parse(src)?)?.into_iter().collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binary_strings() {
        assert_eq!(
            language("[01]{3}").unwrap(),
            ["000", "001", "010", "011", "100", "101", "110", "111"]
        );
        assert_eq!(alphabet_size("[01]{3}").unwrap(), 2);
    }

    #[test]
    fn alternation_and_groups() {
        assert_eq!(language("a(b|cd)?").unwrap(), ["a", "ab", "acd"]);
        assert_eq!(alphabet_size("a(b|cd)?").unwrap(), 4);
        assert_eq!(language("^(x|y){1,2}$").unwrap(), ["x", "xx", "xy", "y", "yx", "yy"]);
    }

    #[test]
    fn ranges_and_escapes() {
        assert_eq!(language("[a-c]\\+").unwrap(), ["a+", "b+", "c+"]);
        // Unique characters: a, b, c, '+'.
        assert_eq!(alphabet_size("[a-c]\\+").unwrap(), 4);
        assert_eq!(alphabet_size("[0-9]{2}[+-][0-9]").unwrap(), 12);
    }

    #[test]
    fn rejects_unbounded() {
        for bad in ["a*", "a+", "a{2,}", ".", "[^a]", "(a", "a)", "[]", "a{3,1}"] {
            assert!(
                matches!(language(bad), Err(DataGenError::RegexUnsupported(_))),
                "{bad} accepted"
            );
        }
    }

    #[test]
    fn huge_language_rejected() {
        assert!(matches!(language("[01]{30}"), Err(DataGenError::RangeTooLarge(_))));
    }
}
