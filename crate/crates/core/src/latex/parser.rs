use super::lexer::{lex, Lexeme, LexemeKind};
use super::normalize::Normalizer;
use super::LatexError;
use crate::expr::{ExprTree, Head, Library};

/// Result of parsing one LaTeX string.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ParseOutcome {
    /// One tree per parseable relation-free segment, in source order.
    pub trees: Vec<ExprTree>,
    /// Constructs kept as markers, with their byte offsets.
    pub unsupported: Vec<(String, usize)>,
    /// Number of top-level relations (and line breaks) the input was split at.
    pub relation_split_count: usize,
    /// Non-empty segments that failed to parse.
    pub failed_segments: usize,
}

const FUNCTIONS: &[&str] = &[
    "sin", "cos", "tan", "sec", "csc", "cot", "sinh", "cosh", "tanh", "coth", "arcsin", "arccos", "arctan",
    "exp", "log", "ln",
];

const BIG_OPERATORS: &[&str] = &[
    "sum", "prod", "coprod", "lim", "limsup", "liminf", "max", "min", "sup", "inf", "det", "gcd", "arg",
    "deg", "dim", "ker", "Pr", "bigcup", "bigcap",
];

const INTEGRALS: &[&str] = &["int", "iint", "iiint", "oint"];

const GREEK: &[&str] = &[
    "alpha",
    "beta",
    "gamma",
    "delta",
    "epsilon",
    "varepsilon",
    "zeta",
    "eta",
    "theta",
    "vartheta",
    "iota",
    "kappa",
    "lambda",
    "mu",
    "nu",
    "xi",
    "pi",
    "varpi",
    "rho",
    "varrho",
    "sigma",
    "varsigma",
    "tau",
    "upsilon",
    "phi",
    "varphi",
    "chi",
    "psi",
    "omega",
    "Gamma",
    "Delta",
    "Theta",
    "Lambda",
    "Xi",
    "Pi",
    "Sigma",
    "Upsilon",
    "Phi",
    "Psi",
    "Omega",
    "hbar",
    "ell",
];

const FONTS: &[&str] = &[
    "mathrm",
    "mathit",
    "mathbf",
    "mathsf",
    "mathtt",
    "boldsymbol",
    "bm",
    "mathcal",
    "mathbb",
    "mathfrak",
    "operatorname",
];

const ACCENTS: &[&str] = &[
    "vec",
    "hat",
    "bar",
    "tilde",
    "dot",
    "ddot",
    "overline",
    "widehat",
    "widetilde",
    "overrightarrow",
    "check",
    "breve",
];

const TEXT: &[&str] = &["text", "textrm", "textbf", "textit", "mbox"];

/// Sizing and style commands that carry no structure.
const IGNORED: &[&str] = &[
    "left",
    "right",
    "big",
    "Big",
    "bigg",
    "Bigg",
    "bigl",
    "bigr",
    "Bigl",
    "Bigr",
    "biggl",
    "biggr",
    "Biggl",
    "Biggr",
    "displaystyle",
    "textstyle",
    "scriptstyle",
    "limits",
    "nolimits",
    "mathstrut",
    "strut",
    "nonumber",
    "notag",
];

const WRAPPERS: &[&str] = &[
    "equation",
    "equation*",
    "align",
    "align*",
    "aligned",
    "gather",
    "gather*",
    "gathered",
    "split",
    "multline",
    "multline*",
    "eqnarray",
    "eqnarray*",
    "alignat",
    "alignat*",
    "displaymath",
];

const LEAF_MARKERS: &[&str] = &["partial", "nabla", "infty", "emptyset", "cdots", "ldots", "dots"];

#[derive(Debug)]
struct Fail {
    offset: usize,
}

type PResult<T> = Result<T, Fail>;

fn group_text<'s>(src: &'s str, lexeme: &Lexeme) -> &'s str {
    match lexeme.kind {
        LexemeKind::Group(_) => &src[lexeme.offset + 1..lexeme.end() - 1],
        _ => &src[lexeme.offset..lexeme.end()],
    }
}

fn squeeze(text: &str) -> String {
    text.chars().filter(|c| !c.is_whitespace()).collect()
}

/// Drops whitespace and structure-free commands (`\left`, `\displaystyle`, ...).
fn clean(lexemes: &[Lexeme]) -> Vec<Lexeme> {
    let mut out = Vec::with_capacity(lexemes.len());
    let mut iter = lexemes.iter().filter(|l| !l.is_space()).peekable();
    while let Some(l) = iter.next() {
        if let LexemeKind::Command(name) = &l.kind {
            if IGNORED.contains(&name.as_str()) {
                // `\left.` and `\right.` are null delimiters.
                if iter.peek().is_some_and(|n| n.kind == LexemeKind::Punct('.')) {
                    iter.next();
                }
                continue;
            }
            if matches!(name.as_str(), "label" | "tag") {
                if iter.peek().is_some_and(|n| matches!(n.kind, LexemeKind::Group(_))) {
                    iter.next();
                }
                continue;
            }
        }
        out.push(l.clone());
    }
    out
}

/// Removes `\begin{aligned}`-style wrappers and alignment tabs at top level.
fn strip_wrappers(src: &str, lexemes: Vec<Lexeme>) -> Vec<Lexeme> {
    let mut out = Vec::with_capacity(lexemes.len());
    let mut envs = 0usize;
    let mut i = 0;
    while i < lexemes.len() {
        let l = &lexemes[i];
        if let LexemeKind::Command(name) = &l.kind {
            if (name == "begin" || name == "end") && i + 1 < lexemes.len() {
                let env = squeeze(group_text(src, &lexemes[i + 1]));
                if WRAPPERS.contains(&env.as_str()) {
                    i += 2;
                    continue;
                }
                if name == "begin" {
                    envs += 1;
                } else {
                    envs = envs.saturating_sub(1);
                }
            }
        }
        if envs == 0 && l.kind == LexemeKind::Punct('&') {
            i += 1;
            continue;
        }
        out.push(l.clone());
        i += 1;
    }
    out
}

fn depth_delta(kind: &LexemeKind) -> i32 {
    match kind {
        LexemeKind::Punct('(' | '[') => 1,
        LexemeKind::Punct(')' | ']') => -1,
        LexemeKind::Command(c) if c == "{" || c == "begin" => 1,
        LexemeKind::Command(c) if c == "}" || c == "end" => -1,
        _ => 0,
    }
}

/// Parses LaTeX math into one normalized tree per relation-free segment.
pub fn parse_latex(input: &str, lib: &Library) -> Result<ParseOutcome, LatexError> {
    if input.trim().is_empty() {
        return Err(LatexError::EmptyInput);
    }
    let stream = lex(input).map_err(|e| match e {
        LatexError::UnbalancedBraces(offset) => LatexError::TotallyUnparseable(offset),
        other => other,
    })?;
    let mut top = strip_wrappers(input, clean(&stream.lexemes));
    while top.last().is_some_and(|l| matches!(l.kind, LexemeKind::Punct('.' | ',' | ';'))) {
        top.pop();
    }

    let mut segments: Vec<Vec<Lexeme>> = vec![Vec::new()];
    let mut depth = 0i32;
    let mut outcome = ParseOutcome::default();
    for l in top {
        let splits = depth == 0
            && match &l.kind {
                LexemeKind::Relation(_) => true,
                LexemeKind::Command(c) => c == "\\",
                _ => false,
            };
        if splits {
            outcome.relation_split_count += 1;
            segments.push(Vec::new());
            continue;
        }
        depth = (depth + depth_delta(&l.kind)).max(0);
        segments.last_mut().expect("non-empty").push(l);
    }

    let normalizer = Normalizer::for_library(lib);
    let mut first_failure = None;
    for segment in segments.into_iter().filter(|s| !s.is_empty()) {
        let start = segment[0].offset;
        let mut parser = Parser::new(input, segment);
        match parser.parse_all() {
            Ok(tree) => {
                outcome.trees.push(normalizer.apply(&tree));
                outcome.unsupported.append(&mut parser.unsupported);
            }
            Err(fail) => {
                outcome.failed_segments += 1;
                first_failure.get_or_insert(fail.offset.max(start));
            }
        }
    }
    outcome.unsupported.sort_by_key(|(_, offset)| *offset);
    if outcome.trees.is_empty() {
        return Err(LatexError::TotallyUnparseable(first_failure.unwrap_or(0)));
    }
    Ok(outcome)
}

struct Parser<'s> {
    src: &'s str,
    toks: Vec<Lexeme>,
    pos: usize,
    unsupported: Vec<(String, usize)>,
    in_abs: bool,
    in_integrand: bool,
}

impl<'s> Parser<'s> {
    fn new(src: &'s str, toks: Vec<Lexeme>) -> Parser<'s> {
        Parser { src, toks, pos: 0, unsupported: Vec::new(), in_abs: false, in_integrand: false }
    }

    fn peek(&self) -> Option<&LexemeKind> {
        self.toks.get(self.pos).map(|l| &l.kind)
    }

    fn peek_at(&self, k: usize) -> Option<&LexemeKind> {
        self.toks.get(self.pos + k).map(|l| &l.kind)
    }

    fn here(&self) -> usize {
        self.toks.get(self.pos).map_or_else(|| self.toks.last().map_or(0, Lexeme::end), |l| l.offset)
    }

    fn fail<T>(&self) -> PResult<T> {
        Err(Fail { offset: self.here() })
    }

    fn next(&mut self) -> Option<Lexeme> {
        let l = self.toks.get(self.pos).cloned();
        if l.is_some() {
            self.pos += 1;
        }
        l
    }

    fn marker(&mut self, construct: &str, offset: usize, children: Vec<ExprTree>) -> ExprTree {
        self.unsupported.push((construct.to_owned(), offset));
        ExprTree::unsupported(construct, offset, children)
    }

    fn parse_all(&mut self) -> PResult<ExprTree> {
        let tree = self.parse_additive()?;
        if self.pos != self.toks.len() {
            return self.fail();
        }
        Ok(tree)
    }

    /// Parses a brace group's content as a complete expression.
    fn parse_group(&mut self, group: &Lexeme) -> PResult<ExprTree> {
        let LexemeKind::Group(inner) = &group.kind else {
            return Err(Fail { offset: group.offset });
        };
        let inner = clean(inner);
        if inner.is_empty() {
            return Err(Fail { offset: group.offset });
        }
        let mut sub = Parser::new(self.src, inner);
        let tree = sub.parse_all()?;
        self.unsupported.append(&mut sub.unsupported);
        Ok(tree)
    }

    fn parse_additive(&mut self) -> PResult<ExprTree> {
        let mut lhs = self.parse_term()?;
        loop {
            let op = match self.peek() {
                Some(LexemeKind::Punct('+')) => "add",
                Some(LexemeKind::Punct('-')) => "sub",
                Some(LexemeKind::Command(c)) if c == "pm" || c == "mp" => "pm",
                _ => break,
            };
            let offset = self.here();
            self.pos += 1;
            let rhs = self.parse_term()?;
            lhs = if op == "pm" {
                self.marker("pm", offset, vec![lhs, rhs])
            } else {
                ExprTree::binary(op, lhs, rhs)
            };
        }
        Ok(lhs)
    }

    fn parse_term(&mut self) -> PResult<ExprTree> {
        let mut lhs = self.parse_unary()?;
        loop {
            if self.in_integrand && self.at_differential() {
                break;
            }
            match self.peek() {
                Some(LexemeKind::Punct('*')) => {
                    self.pos += 1;
                    lhs = ExprTree::binary("mul", lhs, self.parse_unary()?);
                }
                Some(LexemeKind::Command(c)) if matches!(c.as_str(), "cdot" | "times" | "ast") => {
                    self.pos += 1;
                    lhs = ExprTree::binary("mul", lhs, self.parse_unary()?);
                }
                Some(LexemeKind::Punct('/')) => {
                    self.pos += 1;
                    lhs = ExprTree::binary("div", lhs, self.parse_unary()?);
                }
                Some(LexemeKind::Command(c)) if c == "div" => {
                    self.pos += 1;
                    lhs = ExprTree::binary("div", lhs, self.parse_unary()?);
                }
                Some(k) if self.starts_factor(k) => {
                    lhs = ExprTree::binary("mul", lhs, self.parse_power()?);
                }
                _ => break,
            }
        }
        Ok(lhs)
    }

    fn parse_unary(&mut self) -> PResult<ExprTree> {
        match self.peek() {
            Some(LexemeKind::Punct('-')) => {
                self.pos += 1;
                Ok(ExprTree::unary("neg", self.parse_unary()?))
            }
            Some(LexemeKind::Punct('+')) => {
                self.pos += 1;
                self.parse_unary()
            }
            _ => self.parse_power(),
        }
    }

    fn parse_power(&mut self) -> PResult<ExprTree> {
        let mut base = self.parse_primary()?;
        loop {
            match self.peek() {
                Some(LexemeKind::Superscript) => {
                    self.pos += 1;
                    let exponent = self.parse_script_arg()?;
                    base = if base.head == Head::Var("e".into()) {
                        ExprTree::unary("exp", exponent)
                    } else {
                        ExprTree::binary("pow", base, exponent)
                    };
                }
                Some(LexemeKind::Punct('!')) => {
                    let offset = self.here();
                    self.pos += 1;
                    base = self.marker("factorial", offset, vec![base]);
                }
                _ => break,
            }
        }
        Ok(base)
    }

    /// Whether `kind` can begin an implicitly multiplied factor.
    fn starts_factor(&self, kind: &LexemeKind) -> bool {
        match kind {
            LexemeKind::Number(_) | LexemeKind::Symbol(_) | LexemeKind::Group(_) => true,
            LexemeKind::Punct('(' | '[') => true,
            LexemeKind::Punct('|') => !self.in_abs,
            LexemeKind::Command(c) => !matches!(
                c.as_str(),
                "cdot" | "times" | "ast" | "div" | "pm" | "mp" | "}" | "\\" | "end" | "rvert"
            ),
            _ => false,
        }
    }

    fn is_function_like(kind: &LexemeKind) -> bool {
        match kind {
            LexemeKind::Command(c) => {
                let c = c.as_str();
                FUNCTIONS.contains(&c)
                    || BIG_OPERATORS.contains(&c)
                    || INTEGRALS.contains(&c)
                    || c == "operatorname"
            }
            _ => false,
        }
    }

    /// `d x`, `\mathrm{d} x` and similar differentials.
    fn at_differential(&self) -> bool {
        let is_d = match self.toks.get(self.pos) {
            Some(Lexeme { kind: LexemeKind::Symbol('d'), .. }) => true,
            Some(Lexeme { kind: LexemeKind::Command(c), .. })
                if FONTS.contains(&c.as_str()) || TEXT.contains(&c.as_str()) =>
            {
                self.toks.get(self.pos + 1).is_some_and(|g| squeeze(group_text(self.src, g)) == "d")
            }
            _ => false,
        };
        if !is_d {
            return false;
        }
        let skip = if matches!(self.peek(), Some(LexemeKind::Symbol('d'))) { 1 } else { 2 };
        match self.peek_at(skip) {
            Some(LexemeKind::Symbol(_)) => true,
            Some(LexemeKind::Command(c)) => GREEK.contains(&c.as_str()),
            _ => false,
        }
    }

    fn skip_differentials(&mut self) {
        while self.at_differential() {
            self.pos += if matches!(self.peek(), Some(LexemeKind::Symbol('d'))) { 2 } else { 3 };
        }
    }

    /// Single-token argument of `^`, `_` or `\frac`: a group, one digit, a letter or a command.
    fn parse_script_arg(&mut self) -> PResult<ExprTree> {
        let Some(l) = self.toks.get(self.pos).cloned() else { return self.fail() };
        match &l.kind {
            LexemeKind::Group(_) => {
                self.pos += 1;
                self.parse_group(&l)
            }
            LexemeKind::Number(n) => Ok(ExprTree::number(self.take_digit(n, &l))),
            LexemeKind::Symbol(c) => {
                self.pos += 1;
                Ok(ExprTree::var(c.to_string()))
            }
            LexemeKind::Punct('-') => {
                self.pos += 1;
                Ok(ExprTree::unary("neg", self.parse_script_arg()?))
            }
            LexemeKind::Command(_) => self.parse_primary(),
            _ => self.fail(),
        }
    }

    /// Consumes the first digit of a number lexeme, leaving the rest in place.
    fn take_digit(&mut self, number: &str, l: &Lexeme) -> f64 {
        let first = &number[..1];
        let rest = &number[1..];
        if rest.is_empty() || rest.starts_with('.') && rest.len() == 1 {
            self.pos += 1;
        } else {
            self.toks[self.pos] =
                Lexeme { kind: LexemeKind::Number(rest.to_owned()), offset: l.offset + 1, len: l.len - 1 };
        }
        first.parse().expect("digit")
    }

    /// Raw text of a subscript argument, used to name decorated variables.
    fn script_text(&mut self) -> PResult<String> {
        let Some(l) = self.toks.get(self.pos).cloned() else { return self.fail() };
        match &l.kind {
            LexemeKind::Group(_) => {
                self.pos += 1;
                Ok(squeeze(group_text(self.src, &l)))
            }
            LexemeKind::Number(n) => Ok(format!("{}", self.take_digit(n, &l))),
            LexemeKind::Symbol(c) => {
                self.pos += 1;
                Ok(c.to_string())
            }
            LexemeKind::Command(c) => {
                self.pos += 1;
                Ok(format!("\\{c}"))
            }
            _ => self.fail(),
        }
    }

    /// Applies subscripts and primes to a variable name.
    fn finish_variable(&mut self, mut name: String) -> PResult<ExprTree> {
        loop {
            match self.peek() {
                Some(LexemeKind::Subscript) => {
                    self.pos += 1;
                    let sub = self.script_text()?;
                    name.push('_');
                    name.push_str(&sub);
                }
                Some(LexemeKind::Punct('\'')) => {
                    self.pos += 1;
                    name.push('\'');
                }
                _ => break,
            }
        }
        Ok(ExprTree::var(name))
    }

    fn expect_punct(&mut self, close: char) -> PResult<()> {
        if self.peek() == Some(&LexemeKind::Punct(close)) {
            self.pos += 1;
            Ok(())
        } else {
            self.fail()
        }
    }

    fn parse_delimited(&mut self, close: LexemeKind) -> PResult<ExprTree> {
        let saved = self.in_abs;
        self.in_abs = close == LexemeKind::Punct('|');
        let inner = self.parse_additive();
        self.in_abs = saved;
        let inner = inner?;
        if self.peek() == Some(&close) {
            self.pos += 1;
            Ok(inner)
        } else {
            self.fail()
        }
    }

    fn parse_primary(&mut self) -> PResult<ExprTree> {
        let Some(l) = self.next() else { return self.fail() };
        match &l.kind {
            LexemeKind::Number(n) => {
                let value: f64 = n.parse().map_err(|_| Fail { offset: l.offset })?;
                if !value.is_finite() {
                    return Err(Fail { offset: l.offset });
                }
                Ok(ExprTree::number(value))
            }
            LexemeKind::Symbol(c) => self.finish_variable(c.to_string()),
            LexemeKind::Group(_) => self.parse_group(&l),
            LexemeKind::Punct('(') => self.parse_delimited(LexemeKind::Punct(')')),
            LexemeKind::Punct('[') => self.parse_delimited(LexemeKind::Punct(']')),
            LexemeKind::Punct('|') if !self.in_abs => {
                let inner = self.parse_delimited(LexemeKind::Punct('|'))?;
                Ok(ExprTree::unary("abs", inner))
            }
            LexemeKind::Command(name) => self.parse_command(name, &l),
            _ => Err(Fail { offset: l.offset }),
        }
    }

    fn parse_command(&mut self, name: &str, l: &Lexeme) -> PResult<ExprTree> {
        let offset = l.offset;
        match name {
            "{" => self.parse_delimited(LexemeKind::Command("}".into())),
            "lvert" => {
                let inner = self.parse_delimited(LexemeKind::Command("rvert".into()))?;
                Ok(ExprTree::unary("abs", inner))
            }
            "frac" | "dfrac" | "tfrac" | "cfrac" => {
                let num = self.parse_script_arg()?;
                let den = self.parse_script_arg()?;
                Ok(ExprTree::binary("div", num, den))
            }
            "binom" | "tbinom" | "dbinom" => {
                let n = self.parse_script_arg()?;
                let k = self.parse_script_arg()?;
                Ok(self.marker("binom", offset, vec![n, k]))
            }
            "sqrt" => {
                let index = if self.peek() == Some(&LexemeKind::Punct('[')) {
                    self.pos += 1;
                    Some(self.parse_delimited(LexemeKind::Punct(']'))?)
                } else {
                    None
                };
                let radicand = self.parse_script_arg()?;
                Ok(match index {
                    None => ExprTree::unary("sqrt", radicand),
                    Some(n) => {
                        ExprTree::binary("pow", radicand, ExprTree::binary("div", ExprTree::number(1.0), n))
                    }
                })
            }
            n if FUNCTIONS.contains(&n) => self.parse_function(n, offset),
            n if INTEGRALS.contains(&n) => self.parse_integral(n, offset),
            n if BIG_OPERATORS.contains(&n) => self.parse_big_operator(n, offset),
            n if GREEK.contains(&n) => self.parse_greek(n),
            "operatorname" => {
                let Some(g) = self.next() else { return self.fail() };
                let fname = squeeze(group_text(self.src, &g));
                if FUNCTIONS.contains(&fname.as_str()) {
                    self.parse_function(&fname, offset)
                } else {
                    let arg = self.parse_function_argument()?;
                    Ok(self.marker(&fname, offset, vec![arg]))
                }
            }
            n if FONTS.contains(&n) || ACCENTS.contains(&n) => {
                let Some(g) = self.next() else { return self.fail() };
                let content = squeeze(group_text(self.src, &g));
                let mut chars = content.chars();
                match (chars.next(), chars.next()) {
                    (Some(c), None) if c.is_alphabetic() && FONTS.contains(&n) => {
                        self.finish_variable(c.to_string())
                    }
                    (Some(_), _) => self.finish_variable(format!("{n}{{{content}}}")),
                    (None, _) => Err(Fail { offset }),
                }
            }
            n if TEXT.contains(&n) => {
                self.next();
                Ok(self.marker("text", offset, Vec::new()))
            }
            "begin" => {
                let Some(g) = self.next() else { return self.fail() };
                let env = squeeze(group_text(self.src, &g));
                let mut depth = 1;
                while let Some(t) = self.next() {
                    if let LexemeKind::Command(c) = &t.kind {
                        match c.as_str() {
                            "begin" => depth += 1,
                            "end" => {
                                depth -= 1;
                                if depth == 0 {
                                    self.next();
                                    return Ok(self.marker(&env, offset, Vec::new()));
                                }
                            }
                            _ => {}
                        }
                    }
                }
                Err(Fail { offset })
            }
            n if LEAF_MARKERS.contains(&n) => Ok(self.marker(n, offset, Vec::new())),
            "}" | "\\" | "end" | "rvert" | "cdot" | "times" | "ast" | "div" | "pm" | "mp" => {
                Err(Fail { offset })
            }
            other => Ok(self.marker(other, offset, Vec::new())),
        }
    }

    fn parse_greek(&mut self, name: &str) -> PResult<ExprTree> {
        self.finish_variable(name.to_owned())
    }

    /// Argument of a function command: parenthesized, a group, or a run of
    /// implicitly multiplied factors that stops at the next function.
    fn parse_function_argument(&mut self) -> PResult<ExprTree> {
        match self.peek() {
            Some(LexemeKind::Punct('(')) => {
                self.pos += 1;
                self.parse_delimited(LexemeKind::Punct(')'))
            }
            Some(LexemeKind::Group(_)) => {
                let g = self.next().expect("peeked");
                self.parse_group(&g)
            }
            _ => {
                let mut arg = self.parse_unary()?;
                while let Some(k) = self.peek() {
                    if Self::is_function_like(k)
                        || !self.starts_factor(k)
                        || (self.in_integrand && self.at_differential())
                    {
                        break;
                    }
                    arg = ExprTree::binary("mul", arg, self.parse_power()?);
                }
                Ok(arg)
            }
        }
    }

    fn parse_function(&mut self, name: &str, offset: usize) -> PResult<ExprTree> {
        let mut power = None;
        let mut base = None;
        loop {
            match self.peek() {
                Some(LexemeKind::Superscript) if power.is_none() => {
                    self.pos += 1;
                    power = Some(self.parse_script_arg()?);
                }
                Some(LexemeKind::Subscript) if base.is_none() => {
                    self.pos += 1;
                    base = Some(self.parse_script_arg()?);
                }
                _ => break,
            }
        }
        let arg = self.parse_function_argument()?;
        let op = if name == "ln" { "log" } else { name };
        let minus_one = ExprTree::unary("neg", ExprTree::number(1.0));
        let inverse = match op {
            "sin" => Some("arcsin"),
            "cos" => Some("arccos"),
            "tan" => Some("arctan"),
            _ => None,
        };
        let mut tree = match (&power, inverse) {
            (Some(p), Some(inv)) if *p == minus_one => {
                power = None;
                ExprTree::unary(inv, arg)
            }
            _ => ExprTree::unary(op, arg),
        };
        if let Some(b) = base {
            if op != "log" {
                return Err(Fail { offset });
            }
            tree = ExprTree::binary("div", tree, ExprTree::unary("log", b));
        }
        if let Some(p) = power {
            tree = ExprTree::binary("pow", tree, p);
        }
        Ok(tree)
    }

    fn skip_scripts(&mut self) {
        while matches!(self.peek(), Some(LexemeKind::Superscript | LexemeKind::Subscript)) {
            self.pos += 1;
            match self.toks.get(self.pos).cloned() {
                Some(Lexeme { kind: LexemeKind::Number(n), .. }) => {
                    let l = self.toks[self.pos].clone();
                    self.take_digit(&n, &l);
                }
                Some(_) => self.pos += 1,
                None => {}
            }
        }
    }

    fn parse_integral(&mut self, name: &str, offset: usize) -> PResult<ExprTree> {
        self.skip_scripts();
        if self.at_differential() {
            self.skip_differentials();
            return Ok(self.marker(name, offset, Vec::new()));
        }
        let saved = self.in_integrand;
        self.in_integrand = true;
        let integrand = self.parse_additive();
        self.in_integrand = saved;
        let integrand = integrand?;
        self.skip_differentials();
        Ok(self.marker(name, offset, vec![integrand]))
    }

    fn parse_big_operator(&mut self, name: &str, offset: usize) -> PResult<ExprTree> {
        self.skip_scripts();
        let takes_list = matches!(name, "max" | "min" | "gcd" | "sup" | "inf" | "det" | "arg");
        let children = if takes_list && self.peek() == Some(&LexemeKind::Punct('(')) {
            self.pos += 1;
            let mut items = vec![self.parse_additive()?];
            while self.peek() == Some(&LexemeKind::Punct(',')) {
                self.pos += 1;
                items.push(self.parse_additive()?);
            }
            self.expect_punct(')')?;
            items
        } else {
            vec![self.parse_function_argument()?]
        };
        Ok(self.marker(name, offset, children))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::tree_to_traversal;

    fn lib() -> Library {
        Library::builtin("full").unwrap()
    }

    fn one(input: &str) -> ExprTree {
        let out = parse_latex(input, &lib()).unwrap();
        assert_eq!(out.trees.len(), 1, "{input}: {out:?}");
        out.trees.into_iter().next().unwrap()
    }

    fn x() -> ExprTree {
        ExprTree::var("x")
    }

    fn n(v: f64) -> ExprTree {
        ExprTree::number(v)
    }

    #[test]
    fn power_plus_sine() {
        assert_eq!(
            one("x^2 + \\sin(x)"),
            ExprTree::binary("add", ExprTree::binary("pow", x(), n(2.0)), ExprTree::unary("sin", x()))
        );
    }

    #[test]
    fn relation_split() {
        let out = parse_latex("E = m c^2", &lib()).unwrap();
        assert_eq!(out.relation_split_count, 1);
        assert_eq!(out.trees[0], ExprTree::var("E"));
        assert_eq!(
            out.trees[1],
            ExprTree::binary("mul", ExprTree::var("m"), ExprTree::binary("pow", ExprTree::var("c"), n(2.0)))
        );
    }

    #[test]
    fn single_variable() {
        assert_eq!(one("x"), x());
    }

    #[test]
    fn integral_marker() {
        let out = parse_latex("\\int_0^1 f(x) dx + y", &lib()).unwrap();
        let expected = ExprTree::binary(
            "add",
            ExprTree::unsupported("int", 0, vec![ExprTree::binary("mul", ExprTree::var("f"), x())]),
            ExprTree::var("y"),
        );
        assert_eq!(out.trees, vec![expected]);
        assert_eq!(out.unsupported, vec![("int".to_string(), 0)]);
    }

    #[test]
    fn fractions_and_roots() {
        assert_eq!(one("\\frac{1}{2}"), ExprTree::binary("div", n(1.0), n(2.0)));
        assert_eq!(one("\\frac12"), ExprTree::binary("div", n(1.0), n(2.0)));
        assert_eq!(
            one("\\sqrt[3]{x}"),
            ExprTree::binary("pow", x(), ExprTree::binary("div", n(1.0), n(3.0)))
        );
        assert_eq!(one("\\sqrt x"), ExprTree::unary("sqrt", x()));
    }

    #[test]
    fn exponential_e() {
        assert_eq!(one("e^{-x}"), ExprTree::unary("exp", ExprTree::unary("neg", x())));
        assert_eq!(one("\\mathrm{e}^x"), ExprTree::unary("exp", x()));
    }

    #[test]
    fn subscripted_variables_are_distinct() {
        assert_eq!(one("x_0 + x_{1}"), ExprTree::binary("add", ExprTree::var("x_0"), ExprTree::var("x_1")));
    }

    #[test]
    fn unary_minus_binds_looser_than_power() {
        assert_eq!(one("-x^2"), ExprTree::unary("neg", ExprTree::binary("pow", x(), n(2.0))));
    }

    #[test]
    fn juxtaposition_shares_division_precedence() {
        // a/b c == (a/b) c
        assert_eq!(
            one("a/b c"),
            ExprTree::binary(
                "mul",
                ExprTree::binary("div", ExprTree::var("a"), ExprTree::var("b")),
                ExprTree::var("c")
            )
        );
    }

    #[test]
    fn function_argument_runs() {
        assert_eq!(one("\\sin 2x"), ExprTree::unary("sin", ExprTree::binary("mul", n(2.0), x())));
        assert_eq!(
            one("\\sin x \\cos y"),
            ExprTree::binary("mul", ExprTree::unary("sin", x()), ExprTree::unary("cos", ExprTree::var("y")))
        );
        assert_eq!(one("\\sin^2 x"), ExprTree::binary("pow", ExprTree::unary("sin", x()), n(2.0)));
        assert_eq!(one("\\ln x"), ExprTree::unary("log", x()));
    }

    #[test]
    fn left_right_parens() {
        let t = one("\\left( a + b \\right)^2");
        let lib = Library::from_names("t", &["add", "pow", "a", "b", "2"]).unwrap();
        assert_eq!(tree_to_traversal(&t, &lib).unwrap().display(&lib), "pow add a b 2");
    }

    #[test]
    fn errors() {
        assert_eq!(parse_latex("  ", &lib()), Err(LatexError::EmptyInput));
        assert!(matches!(parse_latex("+", &lib()), Err(LatexError::TotallyUnparseable(_))));
        assert!(matches!(parse_latex("{x", &lib()), Err(LatexError::TotallyUnparseable(0))));
    }

    #[test]
    fn failed_segment_is_counted() {
        let out = parse_latex("x = )", &lib()).unwrap();
        assert_eq!(out.trees, vec![x()]);
        assert_eq!(out.failed_segments, 1);
    }

    #[test]
    fn wrappers_and_trailing_punctuation() {
        let out = parse_latex("\\begin{aligned} a &= b \\\\ &= c \\end{aligned}.", &lib()).unwrap();
        assert_eq!(out.trees.len(), 3);
        assert_eq!(out.relation_split_count, 3);
    }

    #[test]
    fn matrices_are_markers() {
        let out = parse_latex("A = \\begin{pmatrix} 1 & 0 \\\\ 0 & 1 \\end{pmatrix}", &lib()).unwrap();
        assert_eq!(out.trees[1].head.name(), "pmatrix");
        assert!(out.trees[1].head.is_unsupported());
    }
}
