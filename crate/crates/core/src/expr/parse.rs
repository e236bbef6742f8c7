//! Recursive-descent parser.
//!
//! ```text
//! expr   := term (('+'|'-') term)*
//! term   := factor (('*'|'/') factor)*
//! factor := ['-'] power
//! power  := atom ['^' factor]
//! atom   := number | ident | ident '(' expr ')' | '(' expr ')'
//! ```

use super::{BinOp, Constant, Expr, Func};
use crate::error::{Error, Result};

pub const MAX_EXPRESSION_BYTES: usize = 64 * 1024;

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    End,
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    line: usize,
    column: usize,
}

fn describe(t: &Tok) -> String {
    match t {
        Tok::Num(v) => format!("number {v}"),
        Tok::Ident(s) => format!("identifier `{s}`"),
        Tok::Plus => "'+'".into(),
        Tok::Minus => "'-'".into(),
        Tok::Star => "'*'".into(),
        Tok::Slash => "'/'".into(),
        Tok::Caret => "'^'".into(),
        Tok::LParen => "'('".into(),
        Tok::RParen => "')'".into(),
        Tok::End => "end of input".into(),
    }
}

fn tokenize(text: &str) -> Result<Vec<Token>> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    while i < chars.len() {
        let c = chars[i];
        let (tl, tc) = (line, col);
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        let simple = match c {
            '+' => Some(Tok::Plus),
            '-' => Some(Tok::Minus),
            '*' => Some(Tok::Star),
            '/' => Some(Tok::Slash),
            '^' => Some(Tok::Caret),
            '(' => Some(Tok::LParen),
            ')' => Some(Tok::RParen),
            _ => None,
        };
        if let Some(tok) = simple {
            out.push(Token {
                tok,
                line: tl,
                column: tc,
            });
            i += 1;
            col += 1;
            continue;
        }
        if c.is_ascii_digit() || c == '.' {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            if i < chars.len() && chars[i] == '.' {
                i += 1;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
            }
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    while j < chars.len() && chars[j].is_ascii_digit() {
                        j += 1;
                    }
                    i = j;
                }
            }
            let s: String = chars[start..i].iter().collect();
            let v: f64 = s.parse().map_err(|_| Error::Syntax {
                line: tl,
                column: tc,
                message: format!("malformed number `{s}`"),
            })?;
            col += i - start;
            out.push(Token {
                tok: Tok::Num(v),
                line: tl,
                column: tc,
            });
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            col += i - start;
            out.push(Token {
                tok: Tok::Ident(chars[start..i].iter().collect()),
                line: tl,
                column: tc,
            });
            continue;
        }
        return Err(Error::Syntax {
            line: tl,
            column: tc,
            message: format!("unexpected character `{c}`"),
        });
    }
    out.push(Token {
        tok: Tok::End,
        line,
        column: col,
    });
    Ok(out)
}

/// Maps an identifier to a coordinate index or constant.
fn resolve_identifier(name: &str) -> Option<Expr> {
    match name {
        "x" | "r" => return Some(Expr::Var(0)),
        "y" | "theta" => return Some(Expr::Var(1)),
        "z" => return Some(Expr::Var(2)),
        "pi" => return Some(Expr::Const(Constant::Pi)),
        "e" => return Some(Expr::Const(Constant::E)),
        _ => {}
    }
    let digits = name.strip_prefix('x')?;
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) || digits.starts_with('0') {
        return None;
    }
    digits.parse::<usize>().ok().map(|k| Expr::Var(k - 1))
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.toks[self.pos]
    }

    fn bump(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error_here(&self, message: String) -> Error {
        let t = self.peek();
        Error::Syntax {
            line: t.line,
            column: t.column,
            message,
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek().tok {
                Tok::Plus => BinOp::Add,
                Tok::Minus => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.term()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.factor()?;
        loop {
            let op = match self.peek().tok {
                Tok::Star => BinOp::Mul,
                Tok::Slash => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.factor()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn factor(&mut self) -> Result<Expr> {
        if self.peek().tok == Tok::Minus {
            self.bump();
            let p = self.power()?;
            return Ok(Expr::Neg(Box::new(p)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.atom()?;
        if self.peek().tok == Tok::Caret {
            self.bump();
            let exponent = self.factor()?;
            return Ok(Expr::Binary(BinOp::Pow, Box::new(base), Box::new(exponent)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr> {
        let t = self.bump();
        match t.tok {
            Tok::Num(v) => Ok(Expr::Num(v)),
            Tok::LParen => {
                let e = self.expr()?;
                self.expect_rparen()?;
                Ok(e)
            }
            Tok::Ident(name) => {
                if self.peek().tok == Tok::LParen {
                    let func = Func::from_name(&name).ok_or(Error::UnknownIdentifier {
                        name: name.clone(),
                        line: t.line,
                        column: t.column,
                    })?;
                    self.bump();
                    let arg = self.expr()?;
                    self.expect_rparen()?;
                    return Ok(Expr::Call(func, Box::new(arg)));
                }
                resolve_identifier(&name).ok_or(Error::UnknownIdentifier {
                    name,
                    line: t.line,
                    column: t.column,
                })
            }
            other => Err(Error::Syntax {
                line: t.line,
                column: t.column,
                message: format!("expected a number, identifier or '(', found {}", describe(&other)),
            }),
        }
    }

    fn expect_rparen(&mut self) -> Result<()> {
        if self.peek().tok == Tok::RParen {
            self.bump();
            Ok(())
        } else {
            Err(self.error_here(format!("expected ')', found {}", describe(&self.peek().tok))))
        }
    }
}

pub fn parse_expression(text: &str) -> Result<Expr> {
    if text.len() > MAX_EXPRESSION_BYTES {
        return Err(Error::ExpressionTooLong {
            limit: MAX_EXPRESSION_BYTES,
        });
    }
    let mut p = Parser {
        toks: tokenize(text)?,
        pos: 0,
    };
    let e = p.expr()?;
    if p.peek().tok != Tok::End {
        return Err(p.error_here(format!("unexpected {}", describe(&p.peek().tok))));
    }
    Ok(e)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn syntax_error_points_at_star() {
        match parse_expression("x +* y") {
            Err(Error::Syntax { line, column, .. }) => assert_eq!((line, column), (1, 4)),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn error_position_tracks_lines() {
        match parse_expression("x +\n  (y * )") {
            Err(Error::Syntax { line, column, .. }) => assert_eq!((line, column), (2, 8)),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unknown_identifier_is_reported() {
        assert!(matches!(
            parse_expression("foo + 1"),
            Err(Error::UnknownIdentifier { column: 1, .. })
        ));
        assert!(matches!(
            parse_expression("erf(x)"),
            Err(Error::UnknownIdentifier { .. })
        ));
        assert!(matches!(parse_expression("x0"), Err(Error::UnknownIdentifier { .. })));
    }

    #[test]
    fn precedence_and_associativity() {
        let v = |s: &str| parse_expression(s).unwrap().value(&[2.0, 3.0]);
        assert_eq!(v("2^3^2"), 512.0);
        assert_eq!(v("-x^2"), -4.0);
        assert_eq!(v("2^-1"), 0.5);
        assert_eq!(v("x - y - 1"), -2.0);
        assert_eq!(v("12 / x / y"), 2.0);
        assert_eq!(v("1 + 2 * 3"), 7.0);
        assert_eq!(v("theta * r"), 6.0);
        assert_eq!(v("1.5e1 + .5"), 15.5);
    }

    #[test]
    fn aliases_map_to_coordinates() {
        assert_eq!(parse_expression("r").unwrap(), Expr::Var(0));
        assert_eq!(parse_expression("theta").unwrap(), Expr::Var(1));
        assert_eq!(parse_expression("z").unwrap(), Expr::Var(2));
        assert_eq!(parse_expression("x7").unwrap(), Expr::Var(6));
    }

    #[test]
    fn rejects_oversized_input() {
        let text = "1+".repeat(MAX_EXPRESSION_BYTES / 2) + "1";
        assert!(matches!(parse_expression(&text), Err(Error::ExpressionTooLong { .. })));
    }

    #[test]
    fn trailing_tokens_are_errors() {
        assert!(parse_expression("x y").is_err());
        assert!(parse_expression("(x").is_err());
        assert!(parse_expression("").is_err());
        assert!(parse_expression("--x").is_err());
    }
}
