use super::{BinOp, Expr, ExprKind, Func, Span};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ParseError {
    #[error("syntax error at {span}: {message}")]
    Syntax { span: Span, message: String },
    #[error("unknown function `{name}` at {span}")]
    UnknownFunction { name: String, span: Span },
}

impl ParseError {
    pub fn span(&self) -> Span {
        match self {
            ParseError::Syntax { span, .. } | ParseError::UnknownFunction { span, .. } => *span,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(char),
    LParen,
    RParen,
    End,
}

struct Lexer {
    toks: Vec<(Tok, Span)>,
}

fn lex(text: &str) -> Result<Lexer, ParseError> {
    let chars: Vec<char> = text.chars().collect();
    let mut toks = Vec::new();
    let (mut line, mut col) = (1usize, 1usize);
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let span = Span { line, column: col };
        if c == '\n' {
            line += 1;
            col = 1;
            i += 1;
            continue;
        }
        if c.is_whitespace() {
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
            let s: String = chars[start..i].iter().collect();
            let v = s
                .parse::<f64>()
                .map_err(|_| ParseError::Syntax { span, message: format!("malformed number `{s}`") })?;
            toks.push((Tok::Num(v), span));
            col += i - start;
            continue;
        }
        if c.is_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            toks.push((Tok::Ident(chars[start..i].iter().collect()), span));
            col += i - start;
            continue;
        }
        let tok = match c {
            '+' | '-' | '*' | '/' | '^' => Tok::Op(c),
            '(' => Tok::LParen,
            ')' => Tok::RParen,
            _ => return Err(ParseError::Syntax { span, message: format!("unexpected character `{c}`") }),
        };
        toks.push((tok, span));
        i += 1;
        col += 1;
    }
    toks.push((Tok::End, Span { line, column: col }));
    Ok(Lexer { toks })
}

struct Parser<'a> {
    toks: Vec<(Tok, Span)>,
    pos: usize,
    variable: &'a str,
}

pub(super) fn parse(text: &str, variable: &str) -> Result<Expr, ParseError> {
    let lexer = lex(text)?;
    let mut p = Parser { toks: lexer.toks, pos: 0, variable };
    let e = p.expr()?;
    match p.peek() {
        (Tok::End, _) => Ok(e),
        (t, span) => Err(ParseError::Syntax { span, message: format!("unexpected {}", describe(&t)) }),
    }
}

fn describe(t: &Tok) -> String {
    match t {
        Tok::Num(v) => format!("number {v}"),
        Tok::Ident(s) => format!("identifier `{s}`"),
        Tok::Op(c) => format!("operator `{c}`"),
        Tok::LParen => "`(`".into(),
        Tok::RParen => "`)`".into(),
        Tok::End => "end of input".into(),
    }
}

impl Parser<'_> {
    fn peek(&self) -> (Tok, Span) {
        self.toks[self.pos].clone()
    }

    fn bump(&mut self) -> (Tok, Span) {
        let t = self.toks[self.pos].clone();
        if !matches!(t.0, Tok::End) {
            self.pos += 1;
        }
        t
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            let (tok, span) = self.peek();
            let op = match tok {
                Tok::Op('+') => BinOp::Add,
                Tok::Op('-') => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.term()?;
            lhs = Expr::with_span(ExprKind::Binary(op, Box::new(lhs), Box::new(rhs)), span);
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            let (tok, span) = self.peek();
            let op = match tok {
                Tok::Op('*') => BinOp::Mul,
                Tok::Op('/') => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.unary()?;
            lhs = Expr::with_span(ExprKind::Binary(op, Box::new(lhs), Box::new(rhs)), span);
        }
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if let (Tok::Op('-'), span) = self.peek() {
            self.bump();
            let inner = self.unary()?;
            return Ok(Expr::with_span(ExprKind::Neg(Box::new(inner)), span));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.primary()?;
        if let (Tok::Op('^'), span) = self.peek() {
            self.bump();
            let exponent = self.unary()?;
            return Ok(Expr::with_span(ExprKind::Binary(BinOp::Pow, Box::new(base), Box::new(exponent)), span));
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Expr, ParseError> {
        let (tok, span) = self.bump();
        match tok {
            Tok::Num(v) => Ok(Expr::with_span(ExprKind::Num(v), span)),
            Tok::LParen => {
                let e = self.expr()?;
                self.expect_rparen()?;
                Ok(e)
            }
            Tok::Ident(name) => {
                if let (Tok::LParen, _) = self.peek() {
                    let func = Func::from_name(&name)
                        .ok_or_else(|| ParseError::UnknownFunction { name: name.clone(), span })?;
                    self.bump();
                    let arg = self.expr()?;
                    self.expect_rparen()?;
                    return Ok(Expr::with_span(ExprKind::Call(func, Box::new(arg)), span));
                }
                if Func::from_name(&name).is_some() {
                    return Err(ParseError::Syntax {
                        span,
                        message: format!("function `{name}` needs a parenthesised argument"),
                    });
                }
                if name == self.variable {
                    Ok(Expr::with_span(ExprKind::Var, span))
                } else if name == "x" {
                    Err(ParseError::Syntax { span, message: "`x` is reserved for the variable".into() })
                } else {
                    Ok(Expr::with_span(ExprKind::Param(name), span))
                }
            }
            t => Err(ParseError::Syntax {
                span,
                message: format!("expected a number, identifier or `(`, found {}", describe(&t)),
            }),
        }
    }

    fn expect_rparen(&mut self) -> Result<(), ParseError> {
        match self.bump() {
            (Tok::RParen, _) => Ok(()),
            (t, span) => Err(ParseError::Syntax { span, message: format!("expected `)`, found {}", describe(&t)) }),
        }
    }
}
