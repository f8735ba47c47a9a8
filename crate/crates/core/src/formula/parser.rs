//! Lexer and recursive-descent parser for the formula language.
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := factor (('*' | '/') factor)*
//! factor := number | ident | '(' expr ')' | func '(' expr (',' expr)? ')'
//! func   := sqrt | min | max
//! ident  := ef | ep | nf | np | F | P
//! ```
//!
//! Offsets in errors are 1-based character positions; running off the end
//! of the input reports `len + 1`.

use super::{BinaryOp, Expr, FormulaError, Function, Terminal};

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum TokenKind {
    Number(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    LParen,
    RParen,
    Comma,
    End,
}

impl TokenKind {
    fn describe(&self) -> String {
        match self {
            TokenKind::Number(n) => format!("number {n}"),
            TokenKind::Ident(name) => format!("`{name}`"),
            TokenKind::Plus => "`+`".into(),
            TokenKind::Minus => "`-`".into(),
            TokenKind::Star => "`*`".into(),
            TokenKind::Slash => "`/`".into(),
            TokenKind::LParen => "`(`".into(),
            TokenKind::RParen => "`)`".into(),
            TokenKind::Comma => "`,`".into(),
            TokenKind::End => "end of input".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Token {
    pub kind: TokenKind,
    /// 1-based character offset of the first character
    pub offset: usize,
    /// byte range in the source
    pub span: std::ops::Range<usize>,
}

pub(crate) fn tokenize(text: &str) -> Result<Vec<Token>, FormulaError> {
    let mut tokens = Vec::new();
    let mut chars = text.char_indices().enumerate().peekable();
    let mut char_count = 0;
    while let Some((pos, (start, c))) = chars.next() {
        char_count = pos + 1;
        let offset = pos + 1;
        let single = |kind| Token {
            kind,
            offset,
            span: start..start + c.len_utf8(),
        };
        match c {
            c if c.is_whitespace() => {}
            '+' => tokens.push(single(TokenKind::Plus)),
            '-' => tokens.push(single(TokenKind::Minus)),
            '*' => tokens.push(single(TokenKind::Star)),
            '/' => tokens.push(single(TokenKind::Slash)),
            '(' => tokens.push(single(TokenKind::LParen)),
            ')' => tokens.push(single(TokenKind::RParen)),
            ',' => tokens.push(single(TokenKind::Comma)),
            c if c.is_ascii_digit() || c == '.' => {
                let mut end = start + 1;
                let mut prev = c;
                while let Some(&(_, (i, n))) = chars.peek() {
                    let exponent_sign = (n == '+' || n == '-') && matches!(prev, 'e' | 'E');
                    if n.is_ascii_digit() || n == '.' || n == 'e' || n == 'E' || exponent_sign {
                        end = i + 1;
                        prev = n;
                        char_count += 1;
                        chars.next();
                    } else {
                        break;
                    }
                }
                let literal = &text[start..end];
                let value: f64 = literal.parse().map_err(|_| FormulaError::Parse {
                    offset,
                    expected: "a number".into(),
                    found: format!("`{literal}`"),
                })?;
                tokens.push(Token {
                    kind: TokenKind::Number(value),
                    offset,
                    span: start..end,
                });
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let mut end = start + 1;
                while let Some(&(_, (i, n))) = chars.peek() {
                    if n.is_ascii_alphanumeric() || n == '_' {
                        end = i + 1;
                        char_count += 1;
                        chars.next();
                    } else {
                        break;
                    }
                }
                tokens.push(Token {
                    kind: TokenKind::Ident(text[start..end].to_string()),
                    offset,
                    span: start..end,
                });
            }
            other => {
                return Err(FormulaError::Parse {
                    offset,
                    expected: "an operand or operator".into(),
                    found: format!("`{other}`"),
                })
            }
        }
    }
    tokens.push(Token {
        kind: TokenKind::End,
        offset: char_count + 1,
        span: text.len()..text.len(),
    });
    Ok(tokens)
}

pub(crate) fn parse(text: &str) -> Result<Expr, FormulaError> {
    let tokens = tokenize(text)?;
    let mut parser = Parser { tokens, pos: 0 };
    let expr = parser.expr()?;
    parser.expect(&TokenKind::End, "an operator or end of input")?;
    Ok(expr)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.tokens[self.pos]
    }

    fn bump(&mut self) -> Token {
        let token = self.tokens[self.pos].clone();
        if token.kind != TokenKind::End {
            self.pos += 1;
        }
        token
    }

    fn error(&self, expected: &str) -> FormulaError {
        let token = self.peek();
        FormulaError::Parse {
            offset: token.offset,
            expected: expected.to_string(),
            found: token.kind.describe(),
        }
    }

    fn expect(&mut self, kind: &TokenKind, expected: &str) -> Result<(), FormulaError> {
        if &self.peek().kind == kind {
            self.bump();
            Ok(())
        } else {
            Err(self.error(expected))
        }
    }

    fn expr(&mut self) -> Result<Expr, FormulaError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek().kind {
                TokenKind::Plus => BinaryOp::Add,
                TokenKind::Minus => BinaryOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.term()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn term(&mut self) -> Result<Expr, FormulaError> {
        let mut lhs = self.factor()?;
        loop {
            let op = match self.peek().kind {
                TokenKind::Star => BinaryOp::Mul,
                TokenKind::Slash => BinaryOp::Div,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.factor()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn factor(&mut self) -> Result<Expr, FormulaError> {
        let token = self.peek().clone();
        match token.kind {
            TokenKind::Number(value) => {
                self.bump();
                Ok(Expr::Number(value))
            }
            TokenKind::LParen => {
                self.bump();
                let inner = self.expr()?;
                self.expect(&TokenKind::RParen, "`)`")?;
                Ok(inner)
            }
            TokenKind::Ident(ref name) => {
                self.bump();
                if let Some(terminal) = Terminal::from_name(name) {
                    return Ok(Expr::Terminal(terminal));
                }
                match Function::from_name(name) {
                    Some(func) => self.call(func),
                    None => Err(FormulaError::UnknownIdentifier {
                        name: name.clone(),
                        offset: token.offset,
                    }),
                }
            }
            _ => Err(self.error("a number, identifier or `(`")),
        }
    }

    fn call(&mut self, func: Function) -> Result<Expr, FormulaError> {
        self.expect(&TokenKind::LParen, "`(` after function name")?;
        let first = self.expr()?;
        let expr = match func {
            Function::Sqrt => {
                self.expect(&TokenKind::RParen, "`)` (sqrt takes one argument)")?;
                Expr::Call(func, vec![first])
            }
            Function::Min | Function::Max => {
                self.expect(&TokenKind::Comma, "`,` (min/max take two arguments)")?;
                let second = self.expr()?;
                self.expect(&TokenKind::RParen, "`)`")?;
                Expr::Call(func, vec![first, second])
            }
        };
        Ok(expr)
    }
}
