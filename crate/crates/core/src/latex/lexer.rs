use super::LatexError;

#[derive(Debug, Clone, PartialEq)]
pub enum LexemeKind {
    /// `\name` without the backslash; single-character commands such as `\{` keep the character.
    Command(String),
    /// A single letter.
    Symbol(char),
    Number(String),
    /// Punctuation and operators: `+ - * / ( ) [ ] | ! ' , . ; : &` and friends.
    Punct(char),
    Group(Vec<Lexeme>),
    Superscript,
    Subscript,
    Relation(String),
    Space,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Lexeme {
    pub kind: LexemeKind,
    /// Byte offset of the first byte.
    pub offset: usize,
    /// Byte length, including the braces for groups.
    pub len: usize,
}

impl Lexeme {
    pub fn end(&self) -> usize {
        self.offset + self.len
    }

    pub fn is_space(&self) -> bool {
        matches!(self.kind, LexemeKind::Space)
    }
}

/// Lexed LaTeX with brace groups nested.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LatexTokenStream {
    pub lexemes: Vec<Lexeme>,
}

const RELATION_COMMANDS: &[&str] = &[
    "le",
    "leq",
    "ge",
    "geq",
    "leqslant",
    "geqslant",
    "approx",
    "ne",
    "neq",
    "equiv",
    "sim",
    "simeq",
    "propto",
    "cong",
    "ll",
    "gg",
    "lt",
    "gt",
    "to",
    "rightarrow",
    "longrightarrow",
    "mapsto",
    "coloneqq",
    "doteq",
];

const SPACE_COMMANDS: &[&str] = &[",", ";", ":", "!", " ", "quad", "qquad", "enspace", "thinspace"];

fn unicode_relation(c: char) -> bool {
    matches!(c, '≤' | '≥' | '≈' | '≠' | '≡' | '∼' | '≃' | '∝' | '≅' | '≪' | '≫' | '→')
}

/// Splits `input` into lexemes. Every byte belongs to exactly one lexeme.
pub fn lex(input: &str) -> Result<LatexTokenStream, LatexError> {
    let mut stack: Vec<(usize, Vec<Lexeme>)> = Vec::new();
    let mut current: Vec<Lexeme> = Vec::new();
    let bytes = input.as_bytes();
    let mut i = 0;
    while i < input.len() {
        let c = input[i..].chars().next().expect("in bounds");
        let start = i;
        let kind = match c {
            '{' => {
                stack.push((start, std::mem::take(&mut current)));
                i += 1;
                continue;
            }
            '}' => {
                let (open, outer) = stack.pop().ok_or(LatexError::UnbalancedBraces(start))?;
                let inner = std::mem::replace(&mut current, outer);
                current.push(Lexeme { kind: LexemeKind::Group(inner), offset: open, len: start + 1 - open });
                i += 1;
                continue;
            }
            '\\' => {
                let rest = &input[i + 1..];
                let name_len = rest
                    .char_indices()
                    .find(|(_, ch)| !ch.is_ascii_alphabetic())
                    .map_or(rest.len(), |(k, _)| k);
                let name = if name_len > 0 {
                    &rest[..name_len]
                } else {
                    match rest.chars().next() {
                        Some(ch) => &rest[..ch.len_utf8()],
                        None => "",
                    }
                };
                i += 1 + name.len();
                if SPACE_COMMANDS.contains(&name) {
                    LexemeKind::Space
                } else if RELATION_COMMANDS.contains(&name) {
                    LexemeKind::Relation(name.to_owned())
                } else {
                    LexemeKind::Command(name.to_owned())
                }
            }
            '^' => {
                i += 1;
                LexemeKind::Superscript
            }
            '_' => {
                i += 1;
                LexemeKind::Subscript
            }
            '=' | '<' | '>' => {
                i += 1;
                LexemeKind::Relation(c.to_string())
            }
            c if unicode_relation(c) => {
                i += c.len_utf8();
                LexemeKind::Relation(c.to_string())
            }
            c if c.is_whitespace() || c == '~' => {
                while i < input.len() {
                    let ch = input[i..].chars().next().expect("in bounds");
                    if !(ch.is_whitespace() || ch == '~') {
                        break;
                    }
                    i += ch.len_utf8();
                }
                LexemeKind::Space
            }
            c if c.is_ascii_digit() || (c == '.' && bytes.get(i + 1).is_some_and(u8::is_ascii_digit)) => {
                let mut seen_dot = false;
                while i < input.len() {
                    let b = bytes[i];
                    if b.is_ascii_digit() {
                        i += 1;
                    } else if b == b'.' && !seen_dot && bytes.get(i + 1).is_some_and(u8::is_ascii_digit) {
                        seen_dot = true;
                        i += 1;
                    } else {
                        break;
                    }
                }
                LexemeKind::Number(input[start..i].to_owned())
            }
            c if c.is_alphabetic() => {
                i += c.len_utf8();
                LexemeKind::Symbol(c)
            }
            c => {
                i += c.len_utf8();
                LexemeKind::Punct(match c {
                    '−' => '-',
                    '×' | '·' | '⋅' => '*',
                    other => other,
                })
            }
        };
        current.push(Lexeme { kind, offset: start, len: i - start });
    }
    if let Some((open, _)) = stack.pop() {
        return Err(LatexError::UnbalancedBraces(open));
    }
    Ok(LatexTokenStream { lexemes: current })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kinds(input: &str) -> Vec<LexemeKind> {
        lex(input).unwrap().lexemes.into_iter().map(|l| l.kind).collect()
    }

    #[test]
    fn power() {
        assert_eq!(
            kinds("x^2"),
            vec![LexemeKind::Symbol('x'), LexemeKind::Superscript, LexemeKind::Number("2".into())]
        );
    }

    #[test]
    fn frac_groups() {
        let ks = kinds("\\frac{1}{2}");
        assert_eq!(ks[0], LexemeKind::Command("frac".into()));
        let LexemeKind::Group(ref g) = ks[1] else { panic!("group expected") };
        assert_eq!(g[0].kind, LexemeKind::Number("1".into()));
        let LexemeKind::Group(ref g) = ks[2] else { panic!("group expected") };
        assert_eq!(g[0].kind, LexemeKind::Number("2".into()));
        assert_eq!(ks.len(), 3);
    }

    #[test]
    fn open_paren_is_not_a_lex_error() {
        assert_eq!(
            kinds("\\sin(x"),
            vec![LexemeKind::Command("sin".into()), LexemeKind::Punct('('), LexemeKind::Symbol('x')]
        );
    }

    #[test]
    fn unbalanced_braces() {
        assert_eq!(lex("{x"), Err(LatexError::UnbalancedBraces(0)));
        assert_eq!(lex("x}}"), Err(LatexError::UnbalancedBraces(1)));
    }

    #[test]
    fn relations_and_spaces() {
        assert_eq!(
            kinds("a \\le b\\,c"),
            vec![
                LexemeKind::Symbol('a'),
                LexemeKind::Space,
                LexemeKind::Relation("le".into()),
                LexemeKind::Space,
                LexemeKind::Symbol('b'),
                LexemeKind::Space,
                LexemeKind::Symbol('c'),
            ]
        );
    }

    #[test]
    fn decimals() {
        assert_eq!(kinds("3.14"), vec![LexemeKind::Number("3.14".into())]);
        assert_eq!(kinds("2."), vec![LexemeKind::Number("2".into()), LexemeKind::Punct('.')]);
    }

    #[test]
    fn offsets_cover_input() {
        let input = "\\frac{a+b}{c} = x_{0}^2 \\cdot \\alpha";
        let stream = lex(input).unwrap();
        let mut pos = 0;
        for l in &stream.lexemes {
            assert_eq!(l.offset, pos);
            pos = l.end();
        }
        assert_eq!(pos, input.len());
    }
}
