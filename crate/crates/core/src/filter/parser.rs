use super::lexer::{tokenize, Token, TokenKind};
use super::{BinaryOp, FilterExpr, Literal, ParseError, UnaryOp};

/// Parses filter source text into an expression tree.
pub fn parse_filter(source: &str) -> Result<FilterExpr, ParseError> {
    let tokens = tokenize(source)?;
    let mut p = Parser { tokens, pos: 0, end: source.chars().count() };
    let expr = p.or()?;
    if let Some(t) = p.peek() {
        return Err(ParseError::new(
            t.position,
            format!("unexpected {:?}", t.text),
            "end of input",
        ));
    }
    Ok(expr)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    end: usize,
}

fn comparison(t: &Token) -> Option<BinaryOp> {
    if t.kind != TokenKind::Operator {
        return None;
    }
    Some(match t.text.as_str() {
        "==" => BinaryOp::Eq,
        "!=" => BinaryOp::Ne,
        "<" => BinaryOp::Lt,
        "<=" => BinaryOp::Le,
        ">" => BinaryOp::Gt,
        ">=" => BinaryOp::Ge,
        _ => return None,
    })
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn is(&self, kind: TokenKind, text: &str) -> bool {
        self.peek().is_some_and(|t| t.kind == kind && t.text == text)
    }

    fn eat(&mut self, kind: TokenKind, text: &str) -> bool {
        if self.is(kind, text) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, kind: TokenKind, text: &str) -> Result<(), ParseError> {
        if self.eat(kind, text) {
            Ok(())
        } else {
            Err(self.unexpected(&format!("'{text}'")))
        }
    }

    fn unexpected(&self, expected: &str) -> ParseError {
        match self.peek() {
            Some(t) => ParseError::new(t.position, format!("unexpected {:?}", t.text), expected),
            None => ParseError::new(self.end, "unexpected end of input", expected),
        }
    }

    fn or(&mut self) -> Result<FilterExpr, ParseError> {
        let mut lhs = self.and()?;
        while self.eat(TokenKind::Keyword, "or") {
            let rhs = self.and()?;
            lhs = FilterExpr::binary(BinaryOp::Or, lhs, rhs);
        }
        Ok(lhs)
    }

    fn and(&mut self) -> Result<FilterExpr, ParseError> {
        let mut lhs = self.not()?;
        while self.eat(TokenKind::Keyword, "and") {
            let rhs = self.not()?;
            lhs = FilterExpr::binary(BinaryOp::And, lhs, rhs);
        }
        Ok(lhs)
    }

    fn not(&mut self) -> Result<FilterExpr, ParseError> {
        if self.eat(TokenKind::Keyword, "not") {
            return Ok(FilterExpr::unary(UnaryOp::Not, self.not()?));
        }
        self.cmp()
    }

    fn cmp(&mut self) -> Result<FilterExpr, ParseError> {
        let lhs = self.add()?;
        let expr = if let Some(op) = self.peek().and_then(comparison) {
            self.pos += 1;
            let rhs = self.add()?;
            FilterExpr::binary(op, lhs, rhs)
        } else if self.eat(TokenKind::Keyword, "in") {
            self.expect(TokenKind::Bracket, "(")?;
            let mut members = vec![self.literal()?];
            while self.eat(TokenKind::Operator, ",") {
                members.push(self.literal()?);
            }
            self.expect(TokenKind::Bracket, ")")?;
            FilterExpr::In { operand: Box::new(lhs), members }
        } else {
            return Ok(lhs);
        };
        if let Some(t) = self.peek() {
            if comparison(t).is_some() || (t.kind == TokenKind::Keyword && t.text == "in") {
                return Err(ParseError::new(
                    t.position,
                    "comparisons cannot be chained",
                    "'and', 'or', ')' or end of input",
                ));
            }
        }
        Ok(expr)
    }

    fn add(&mut self) -> Result<FilterExpr, ParseError> {
        let mut lhs = self.mul()?;
        loop {
            let op = if self.eat(TokenKind::Operator, "+") {
                BinaryOp::Add
            } else if self.eat(TokenKind::Operator, "-") {
                BinaryOp::Sub
            } else {
                return Ok(lhs);
            };
            let rhs = self.mul()?;
            lhs = FilterExpr::binary(op, lhs, rhs);
        }
    }

    fn mul(&mut self) -> Result<FilterExpr, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            let op = if self.eat(TokenKind::Operator, "*") {
                BinaryOp::Mul
            } else if self.eat(TokenKind::Operator, "/") {
                BinaryOp::Div
            } else {
                return Ok(lhs);
            };
            let rhs = self.unary()?;
            lhs = FilterExpr::binary(op, lhs, rhs);
        }
    }

    fn unary(&mut self) -> Result<FilterExpr, ParseError> {
        if self.eat(TokenKind::Operator, "-") {
            return Ok(FilterExpr::unary(UnaryOp::Neg, self.unary()?));
        }
        self.primary()
    }

    /// Members of an `in` list: an optionally negated number, a string, or a
    /// keyword literal.
    fn literal(&mut self) -> Result<Literal, ParseError> {
        const EXPECTED: &str = "literal";
        let negate = self.eat(TokenKind::Operator, "-");
        let tok = self.peek().cloned().ok_or_else(|| self.unexpected(EXPECTED))?;
        let lit = match (tok.kind, tok.text.as_str()) {
            (TokenKind::Number, text) => {
                let v: f64 = text.parse().expect("lexer validated number");
                Literal::Number(if negate { -v } else { v })
            }
            _ if negate => return Err(self.unexpected("number")),
            (TokenKind::String, text) => Literal::Text(text.to_string()),
            (TokenKind::Keyword, "true") => Literal::Bool(true),
            (TokenKind::Keyword, "false") => Literal::Bool(false),
            (TokenKind::Keyword, "null") => Literal::Null,
            _ => return Err(self.unexpected(EXPECTED)),
        };
        self.pos += 1;
        Ok(lit)
    }

    fn primary(&mut self) -> Result<FilterExpr, ParseError> {
        const EXPECTED: &str = "number, string, identifier, props[...] or '('";
        let tok = self.peek().cloned().ok_or_else(|| self.unexpected(EXPECTED))?;
        match tok.kind {
            TokenKind::Number | TokenKind::String => {
                Ok(FilterExpr::Literal(self.literal()?))
            }
            TokenKind::Keyword if matches!(tok.text.as_str(), "true" | "false" | "null") => {
                Ok(FilterExpr::Literal(self.literal()?))
            }
            TokenKind::Identifier => {
                self.pos += 1;
                if tok.text == "props" && self.eat(TokenKind::Bracket, "[") {
                    let key = match self.peek() {
                        Some(t) if t.kind == TokenKind::String => t.text.clone(),
                        _ => return Err(self.unexpected("string key")),
                    };
                    self.pos += 1;
                    self.expect(TokenKind::Bracket, "]")?;
                    return Ok(FilterExpr::Property(key));
                }
                Ok(FilterExpr::Property(tok.text))
            }
            TokenKind::Bracket if tok.text == "(" => {
                self.pos += 1;
                let inner = self.or()?;
                self.expect(TokenKind::Bracket, ")")?;
                Ok(inner)
            }
            _ => Err(self.unexpected(EXPECTED)),
        }
    }
}
