use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;

use super::ast::Loc;
use super::error::{ErrorKind, SourceError};

#[derive(Clone, Debug, PartialEq)]
pub enum Tok {
    Ident(String),
    Number(BigRational),
    Str(String),
    Keyword(Keyword),
    LBracket,
    RBracket,
    LParen,
    RParen,
    Colon,
    Semi,
    Comma,
    DotDot,
    Prime,
    Arrow,
    Plus,
    Minus,
    Star,
    Slash,
    Amp,
    Pipe,
    Bang,
    Eq,
    Neq,
    Lt,
    Le,
    Gt,
    Ge,
    Eof,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Keyword {
    Ctmc,
    Const,
    Param,
    Formula,
    Module,
    EndModule,
    Label,
    Init,
    Bool,
    True,
    False,
    Min,
    Max,
}

impl Keyword {
    fn from_word(w: &str) -> Option<Keyword> {
        Some(match w {
            "ctmc" => Keyword::Ctmc,
            "const" => Keyword::Const,
            "param" => Keyword::Param,
            "formula" => Keyword::Formula,
            "module" => Keyword::Module,
            "endmodule" => Keyword::EndModule,
            "label" => Keyword::Label,
            "init" => Keyword::Init,
            "bool" => Keyword::Bool,
            "true" => Keyword::True,
            "false" => Keyword::False,
            "min" => Keyword::Min,
            "max" => Keyword::Max,
            _ => return None,
        })
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Keyword::Ctmc => "ctmc",
            Keyword::Const => "const",
            Keyword::Param => "param",
            Keyword::Formula => "formula",
            Keyword::Module => "module",
            Keyword::EndModule => "endmodule",
            Keyword::Label => "label",
            Keyword::Init => "init",
            Keyword::Bool => "bool",
            Keyword::True => "true",
            Keyword::False => "false",
            Keyword::Min => "min",
            Keyword::Max => "max",
        }
    }
}

#[derive(Clone, Debug)]
pub struct Token {
    pub tok: Tok,
    pub loc: Loc,
}

pub fn describe(tok: &Tok) -> String {
    match tok {
        Tok::Ident(s) => format!("identifier `{s}`"),
        Tok::Number(n) => format!("number `{n}`"),
        Tok::Str(s) => format!("string \"{s}\""),
        Tok::Keyword(k) => format!("`{}`", k.as_str()),
        Tok::Eof => "end of input".to_string(),
        other => format!("`{}`", symbol(other)),
    }
}

fn symbol(tok: &Tok) -> &'static str {
    match tok {
        Tok::LBracket => "[",
        Tok::RBracket => "]",
        Tok::LParen => "(",
        Tok::RParen => ")",
        Tok::Colon => ":",
        Tok::Semi => ";",
        Tok::Comma => ",",
        Tok::DotDot => "..",
        Tok::Prime => "'",
        Tok::Arrow => "->",
        Tok::Plus => "+",
        Tok::Minus => "-",
        Tok::Star => "*",
        Tok::Slash => "/",
        Tok::Amp => "&",
        Tok::Pipe => "|",
        Tok::Bang => "!",
        Tok::Eq => "=",
        Tok::Neq => "!=",
        Tok::Lt => "<",
        Tok::Le => "<=",
        Tok::Gt => ">",
        Tok::Ge => ">=",
        _ => "?",
    }
}

/// Splits model source into tokens. Numeric literals are exact: `12`, `0.04`,
/// and `2/24` written without spaces is a single rational literal.
pub fn tokenize(src: &str) -> Result<Vec<Token>, SourceError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    let mut line = 1u32;
    let mut col = 1u32;

    macro_rules! bump {
        () => {{
            if chars[i] == '\n' {
                line += 1;
                col = 1;
            } else {
                col += 1;
            }
            i += 1;
        }};
    }

    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            bump!();
            continue;
        }
        if c == '/' && chars.get(i + 1) == Some(&'/') {
            while i < chars.len() && chars[i] != '\n' {
                bump!();
            }
            continue;
        }
        let loc = Loc::new(line, col);
        let next = chars.get(i + 1).copied();
        let two = |a: char, b: char| c == a && next == Some(b);
        let tok = if c.is_ascii_alphabetic() || c == '_' {
            let mut word = String::new();
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                word.push(chars[i]);
                bump!();
            }
            out.push(Token {
                tok: match Keyword::from_word(&word) {
                    Some(k) => Tok::Keyword(k),
                    None => Tok::Ident(word),
                },
                loc,
            });
            continue;
        } else if c.is_ascii_digit() {
            let mut int = String::new();
            while i < chars.len() && chars[i].is_ascii_digit() {
                int.push(chars[i]);
                bump!();
            }
            let mut value = BigRational::from_integer(int.parse::<BigInt>().expect("digits"));
            let digit_at = |k: usize| chars.get(k).is_some_and(|c| c.is_ascii_digit());
            if i < chars.len() && chars[i] == '.' && digit_at(i + 1) {
                bump!();
                let mut frac = String::new();
                while i < chars.len() && chars[i].is_ascii_digit() {
                    frac.push(chars[i]);
                    bump!();
                }
                let scale = num_traits::pow(BigInt::from(10), frac.len());
                value += BigRational::new(frac.parse::<BigInt>().expect("digits"), scale);
            } else if i < chars.len() && chars[i] == '/' && digit_at(i + 1) {
                bump!();
                let mut den = String::new();
                while i < chars.len() && chars[i].is_ascii_digit() {
                    den.push(chars[i]);
                    bump!();
                }
                let den = den.parse::<BigInt>().expect("digits");
                if den.is_zero() {
                    return Err(SourceError::new(
                        ErrorKind::Lex,
                        loc,
                        "rational literal with zero denominator",
                    ));
                }
                value /= BigRational::from_integer(den);
            }
            out.push(Token {
                tok: Tok::Number(value),
                loc,
            });
            continue;
        } else if c == '"' {
            bump!();
            let mut s = String::new();
            loop {
                match chars.get(i) {
                    None | Some('\n') => return Err(SourceError::new(ErrorKind::Lex, loc, "unterminated string")),
                    Some('"') => {
                        bump!();
                        break;
                    }
                    Some(&ch) => {
                        s.push(ch);
                        bump!();
                    }
                }
            }
            out.push(Token { tok: Tok::Str(s), loc });
            continue;
        } else if two('-', '>') {
            bump!();
            Tok::Arrow
        } else if two('.', '.') {
            bump!();
            Tok::DotDot
        } else if two('!', '=') {
            bump!();
            Tok::Neq
        } else if two('<', '=') {
            bump!();
            Tok::Le
        } else if two('>', '=') {
            bump!();
            Tok::Ge
        } else {
            match c {
                '[' => Tok::LBracket,
                ']' => Tok::RBracket,
                '(' => Tok::LParen,
                ')' => Tok::RParen,
                ':' => Tok::Colon,
                ';' => Tok::Semi,
                ',' => Tok::Comma,
                '\'' => Tok::Prime,
                '+' => Tok::Plus,
                '-' => Tok::Minus,
                '*' => Tok::Star,
                '/' => Tok::Slash,
                '&' => Tok::Amp,
                '|' => Tok::Pipe,
                '!' => Tok::Bang,
                '=' => Tok::Eq,
                '<' => Tok::Lt,
                '>' => Tok::Gt,
                other => {
                    return Err(SourceError::new(
                        ErrorKind::Lex,
                        loc,
                        format!("unexpected character `{other}`"),
                    ))
                }
            }
        };
        bump!();
        out.push(Token { tok, loc });
    }
    out.push(Token {
        tok: Tok::Eof,
        loc: Loc::new(line, col),
    });
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kinds(src: &str) -> Vec<Tok> {
        tokenize(src).unwrap().into_iter().map(|t| t.tok).collect()
    }

    #[test]
    fn range_is_not_a_decimal() {
        let toks = kinds("[0..1]");
        assert_eq!(toks[1], Tok::Number(BigRational::from_integer(0.into())));
        assert_eq!(toks[2], Tok::DotDot);
    }

    #[test]
    fn rational_literal_without_spaces() {
        let toks = kinds("2/24 2 / 24");
        assert_eq!(toks[0], Tok::Number(BigRational::new(1.into(), 12.into())));
        assert_eq!(toks[2], Tok::Slash);
    }

    #[test]
    fn arrow_and_comments() {
        let toks = kinds("x->y // trailing\n!=");
        assert_eq!(toks[1], Tok::Arrow);
        assert_eq!(toks[3], Tok::Neq);
    }

    #[test]
    fn locations_track_lines() {
        let toks = tokenize("ctmc\n  module").unwrap();
        assert_eq!((toks[1].loc.line, toks[1].loc.col), (2, 3));
    }

    #[test]
    fn bad_character() {
        let err = tokenize("x # y").unwrap_err();
        assert_eq!(err.kind, ErrorKind::Lex);
        assert_eq!((err.line, err.column), (1, 3));
    }
}
