use super::normalize::Normalizer;
use super::LatexError;
use crate::expr::{ExprTree, Head, Library, TokenKind};

/// Parses the infix grammar written by [`ExprTree::render_infix`].
///
/// `^` is right-associative and binds tighter than unary minus; calls are
/// `name(a, b)`. Identifiers are resolved against `lib` only to recognise
/// placeholder tokens; the result is normalized for `lib`.
pub fn parse_plain(input: &str, lib: &Library) -> Result<ExprTree, LatexError> {
    let mut p = Plain { src: input.as_bytes(), pos: 0, lib };
    let tree = p.expr()?;
    p.skip_ws();
    if p.pos != p.src.len() {
        return Err(LatexError::SyntaxError(p.pos));
    }
    Ok(Normalizer::for_library(lib).apply(&tree))
}

struct Plain<'a> {
    src: &'a [u8],
    pos: usize,
    lib: &'a Library,
}

type PResult = Result<ExprTree, LatexError>;

impl Plain<'_> {
    fn skip_ws(&mut self) {
        while self.src.get(self.pos).is_some_and(u8::is_ascii_whitespace) {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: u8) -> Result<(), LatexError> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(LatexError::SyntaxError(self.pos))
        }
    }

    fn expr(&mut self) -> PResult {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Some(b'+') => "add",
                Some(b'-') => "sub",
                _ => return Ok(lhs),
            };
            self.pos += 1;
            lhs = ExprTree::binary(op, lhs, self.term()?);
        }
    }

    fn term(&mut self) -> PResult {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Some(b'*') => "mul",
                Some(b'/') => "div",
                _ => return Ok(lhs),
            };
            self.pos += 1;
            lhs = ExprTree::binary(op, lhs, self.unary()?);
        }
    }

    fn unary(&mut self) -> PResult {
        if self.eat(b'-') {
            return Ok(ExprTree::unary("neg", self.unary()?));
        }
        self.power()
    }

    fn power(&mut self) -> PResult {
        let base = self.atom()?;
        if self.eat(b'^') {
            return Ok(ExprTree::binary("pow", base, self.unary()?));
        }
        Ok(base)
    }

    fn ident(&mut self) -> String {
        let start = self.pos;
        while self.src.get(self.pos).is_some_and(|&c| c.is_ascii_alphanumeric() || c == b'_' || c == b'\'') {
            self.pos += 1;
        }
        String::from_utf8_lossy(&self.src[start..self.pos]).into_owned()
    }

    fn args(&mut self) -> Result<Vec<ExprTree>, LatexError> {
        self.expect(b'(')?;
        let mut args = Vec::new();
        if self.eat(b')') {
            return Ok(args);
        }
        loop {
            args.push(self.expr()?);
            if self.eat(b')') {
                return Ok(args);
            }
            self.expect(b',')?;
        }
    }

    fn atom(&mut self) -> PResult {
        let start = match self.peek() {
            Some(_) => self.pos,
            None => return Err(LatexError::SyntaxError(self.pos)),
        };
        let c = self.src[start];
        if c == b'(' {
            self.pos += 1;
            let inner = self.expr()?;
            self.expect(b')')?;
            return Ok(inner);
        }
        if c.is_ascii_digit() || c == b'.' {
            while self.src.get(self.pos).is_some_and(|&d| d.is_ascii_digit() || d == b'.') {
                self.pos += 1;
            }
            if self.src.get(self.pos).is_some_and(|&d| d == b'e' || d == b'E') {
                let save = self.pos;
                self.pos += 1;
                if self.src.get(self.pos).is_some_and(|&d| d == b'-' || d == b'+') {
                    self.pos += 1;
                }
                if self.src.get(self.pos).is_some_and(u8::is_ascii_digit) {
                    while self.src.get(self.pos).is_some_and(u8::is_ascii_digit) {
                        self.pos += 1;
                    }
                } else {
                    self.pos = save;
                }
            }
            let text = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii");
            let value: f64 = text.parse().map_err(|_| LatexError::SyntaxError(start))?;
            if !value.is_finite() {
                return Err(LatexError::SyntaxError(start));
            }
            return Ok(ExprTree::number(value));
        }
        if c == b'?' {
            self.pos += 1;
            let name = self.ident();
            if name.is_empty() {
                return Err(LatexError::SyntaxError(start));
            }
            let args = self.args()?;
            return Ok(ExprTree::unsupported(name, start, args));
        }
        if c.is_ascii_alphabetic() || c == b'_' {
            let name = self.ident();
            if self.peek() == Some(b'(') {
                let args = self.args()?;
                return Ok(ExprTree::op(name, args));
            }
            let head = match self.lib.get(&name).map(|i| self.lib.token(i).kind) {
                Some(TokenKind::Placeholder) => Head::Placeholder(name),
                _ => Head::Var(name),
            };
            return Ok(ExprTree::leaf(head));
        }
        Err(LatexError::SyntaxError(start))
    }
}
