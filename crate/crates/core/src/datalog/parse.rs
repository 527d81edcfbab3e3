//! Rule syntax.
//!
//! ```text
//! % comment
//! reachable(X,Y) :- connected(X,Y).
//! reachable(X,Z) :- reachable(X,Y), connected(Y,Z).
//! connected(l1,l2).
//! ```
//!
//! Identifiers starting with a lowercase letter or digit are constants and
//! predicate names; identifiers starting with an uppercase letter or `_` are
//! variables. `<-` is accepted as a synonym for `:-`. Negation, comparisons,
//! aggregates and function symbols are rejected.

use super::{AtomPattern, DatalogError, GroundFact, Program, Rule, Symbol, Term};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Var(String),
    LParen,
    RParen,
    Comma,
    Dot,
    Implies,
    Other(String),
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    line: usize,
    column: usize,
}

fn tokenize(text: &str) -> Result<Vec<Token>, DatalogError> {
    let mut out = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.split('%').next().unwrap_or("");
        let chars: Vec<char> = line.chars().collect();
        let mut i = 0;
        while i < chars.len() {
            let c = chars[i];
            let column = i + 1;
            let push = |out: &mut Vec<Token>, tok| {
                out.push(Token {
                    tok,
                    line: lineno + 1,
                    column,
                })
            };
            if c.is_whitespace() {
                i += 1;
                continue;
            }
            if c.is_alphanumeric() || c == '_' {
                let start = i;
                while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                let word: String = chars[start..i].iter().collect();
                let tok = if c.is_uppercase() || c == '_' {
                    Tok::Var(word)
                } else {
                    Tok::Ident(word)
                };
                push(&mut out, tok);
                continue;
            }
            let two: String = chars[i..(i + 2).min(chars.len())].iter().collect();
            let (tok, width) = match (c, two.as_str()) {
                (_, ":-") | (_, "<-") => (Tok::Implies, 2),
                (_, "\\+") => (Tok::Other("\\+".into()), 2),
                ('(', _) => (Tok::LParen, 1),
                (')', _) => (Tok::RParen, 1),
                (',', _) => (Tok::Comma, 1),
                ('.', _) => (Tok::Dot, 1),
                _ => (Tok::Other(c.to_string()), 1),
            };
            push(&mut out, tok);
            i += width;
        }
    }
    Ok(out)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    last_line: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn next(&mut self) -> Option<Token> {
        let t = self.tokens.get(self.pos).cloned();
        self.pos += 1;
        t
    }

    fn error_at(&self, token: Option<&Token>, message: impl Into<String>) -> DatalogError {
        let (line, column) = token.map_or((self.last_line, 1), |t| (t.line, t.column));
        DatalogError::Syntax {
            line,
            column,
            message: message.into(),
        }
    }

    fn unsupported(token: &Token, construct: &str) -> DatalogError {
        DatalogError::Unsupported {
            line: token.line,
            column: token.column,
            construct: construct.into(),
        }
    }

    fn atom(&mut self) -> Result<AtomPattern, DatalogError> {
        let token = self.next();
        let name = match &token {
            Some(Token {
                tok: Tok::Ident(name),
                ..
            }) => name.clone(),
            Some(
                t @ Token {
                    tok: Tok::Other(s), ..
                },
            ) if s == "!" || s == "\\+" || s == "~" => {
                return Err(Self::unsupported(t, "negation"))
            }
            Some(
                t @ Token {
                    tok: Tok::Other(_), ..
                },
            ) => return Err(Self::unsupported(t, "comparison or aggregate")),
            Some(
                t @ Token {
                    tok: Tok::Var(_), ..
                },
            ) if matches!(
                self.peek(),
                Some(Token {
                    tok: Tok::Other(_),
                    ..
                })
            ) =>
            {
                return Err(Self::unsupported(t, "comparison"))
            }
            other => return Err(self.error_at(other.as_ref(), "expected a predicate name")),
        };
        let token = token.expect("matched above");
        if name == "not" {
            if let Some(Token {
                tok: Tok::Ident(_), ..
            }) = self.peek()
            {
                return Err(Self::unsupported(&token, "negation"));
            }
        }
        let mut terms = Vec::new();
        if matches!(
            self.peek(),
            Some(Token {
                tok: Tok::LParen,
                ..
            })
        ) {
            self.next();
            loop {
                let t = self.next();
                let term = match &t {
                    Some(Token {
                        tok: Tok::Ident(c), ..
                    }) => Term::Const(Symbol::new(c)),
                    Some(Token {
                        tok: Tok::Var(v), ..
                    }) => Term::Var(Symbol::new(v)),
                    other => {
                        return Err(self.error_at(other.as_ref(), "expected a constant or variable"))
                    }
                };
                if let Some(
                    next @ Token {
                        tok: Tok::LParen, ..
                    },
                ) = self.peek()
                {
                    return Err(Self::unsupported(next, "function symbol"));
                }
                terms.push(term);
                match self.next() {
                    Some(Token {
                        tok: Tok::Comma, ..
                    }) => continue,
                    Some(Token {
                        tok: Tok::RParen, ..
                    }) => break,
                    Some(
                        t @ Token {
                            tok: Tok::Other(_), ..
                        },
                    ) => return Err(Self::unsupported(&t, "comparison or aggregate")),
                    other => return Err(self.error_at(other.as_ref(), "expected `,` or `)`")),
                }
            }
        }
        if let Some(
            t @ Token {
                tok: Tok::Other(_), ..
            },
        ) = self.peek()
        {
            return Err(Self::unsupported(t, "comparison or aggregate"));
        }
        Ok(AtomPattern {
            predicate: Symbol::new(&name),
            terms,
        })
    }
}

enum Statement {
    Rule(Rule),
    Fact(GroundFact),
}

fn ground(atom: AtomPattern) -> Option<GroundFact> {
    let args = atom
        .terms
        .into_iter()
        .map(|t| match t {
            Term::Const(c) => Some(c),
            Term::Var(_) => None,
        })
        .collect::<Option<Vec<_>>>()?;
    Some(GroundFact::from_symbols(atom.predicate, args))
}

fn statement(p: &mut Parser) -> Result<Statement, DatalogError> {
    let head = p.atom()?;
    match p.next() {
        Some(Token { tok: Tok::Dot, .. }) => {
            let text = head.to_string();
            let vars: Vec<String> = head
                .terms
                .iter()
                .filter_map(|t| match t {
                    Term::Var(v) => Some(v.to_string()),
                    Term::Const(_) => None,
                })
                .collect();
            ground(head)
                .map(Statement::Fact)
                .ok_or_else(|| DatalogError::UnsafeRule {
                    rule: format!("{text}."),
                    variable: vars.join(","),
                })
        }
        Some(Token {
            tok: Tok::Implies, ..
        }) => {
            let mut body = vec![p.atom()?];
            loop {
                match p.next() {
                    Some(Token {
                        tok: Tok::Comma, ..
                    }) => body.push(p.atom()?),
                    Some(Token { tok: Tok::Dot, .. }) => break,
                    other => return Err(p.error_at(other.as_ref(), "expected `,` or `.`")),
                }
            }
            Rule::new(head, body).map(Statement::Rule)
        }
        other => Err(p.error_at(other.as_ref(), "expected `:-` or `.`")),
    }
}

/// Parses a program in the rule syntax. Rule order is preserved; ground
/// facts become axioms of the program.
pub fn parse_program(text: &str) -> Result<Program, DatalogError> {
    let tokens = tokenize(text)?;
    let last_line = text.lines().count().max(1);
    let mut p = Parser {
        tokens,
        pos: 0,
        last_line,
    };
    let mut rules = Vec::new();
    let mut axioms = Vec::new();
    while p.peek().is_some() {
        match statement(&mut p)? {
            Statement::Rule(r) => rules.push(r),
            Statement::Fact(f) => axioms.push(f),
        }
    }
    Program::new(rules, axioms)
}

/// Parses a single ground atom such as `connected(l1,l2)`; a trailing `.`
/// is allowed.
pub fn parse_fact(text: &str) -> Result<GroundFact, DatalogError> {
    let tokens = tokenize(text)?;
    let mut p = Parser {
        tokens,
        pos: 0,
        last_line: 1,
    };
    let atom = p.atom()?;
    if matches!(p.peek(), Some(Token { tok: Tok::Dot, .. })) {
        p.next();
    }
    if let Some(t) = p.peek().cloned() {
        return Err(p.error_at(Some(&t), "trailing input after fact"));
    }
    let text = atom.to_string();
    ground(atom).ok_or_else(|| DatalogError::Syntax {
        line: 1,
        column: 1,
        message: format!("`{text}` is not ground"),
    })
}
