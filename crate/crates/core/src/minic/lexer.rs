use std::fmt;

use super::{Diagnostic, Pos};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Kw {
    Void,
    Char,
    Short,
    Int,
    Long,
    Signed,
    Unsigned,
    Float,
    Double,
    Struct,
    Union,
    Enum,
    Typedef,
    Static,
    Extern,
    Const,
    Volatile,
    If,
    Else,
    While,
    For,
    Return,
    Break,
    Continue,
    Sizeof,
}

impl Kw {
    fn lookup(s: &str) -> Option<Kw> {
        Some(match s {
            "void" => Kw::Void,
            "char" => Kw::Char,
            "short" => Kw::Short,
            "int" => Kw::Int,
            "long" => Kw::Long,
            "signed" => Kw::Signed,
            "unsigned" => Kw::Unsigned,
            "float" => Kw::Float,
            "double" => Kw::Double,
            "struct" => Kw::Struct,
            "union" => Kw::Union,
            "enum" => Kw::Enum,
            "typedef" => Kw::Typedef,
            "static" => Kw::Static,
            "extern" => Kw::Extern,
            "const" => Kw::Const,
            "volatile" => Kw::Volatile,
            "if" => Kw::If,
            "else" => Kw::Else,
            "while" => Kw::While,
            "for" => Kw::For,
            "return" => Kw::Return,
            "break" => Kw::Break,
            "continue" => Kw::Continue,
            "sizeof" => Kw::Sizeof,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Tok {
    Ident(String),
    Kw(Kw),
    Int { value: u64, unsigned: bool },
    Float { value: f64, single: bool },
    Char(i64),
    Str(Vec<u8>),
    Punct(&'static str),
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "identifier '{s}'"),
            Tok::Kw(k) => write!(f, "'{}'", format!("{k:?}").to_lowercase()),
            Tok::Int { value, .. } => write!(f, "'{value}'"),
            Tok::Float { value, .. } => write!(f, "'{value}'"),
            Tok::Char(_) => write!(f, "character constant"),
            Tok::Str(_) => write!(f, "string literal"),
            Tok::Punct(p) => write!(f, "'{p}'"),
            Tok::Eof => write!(f, "end of file"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub tok: Tok,
    pub pos: Pos,
}

// longest first so that maximal munch works with a linear scan
const PUNCTS: &[&str] = &[
    "<<=", ">>=", "...", "->", "++", "--", "<<", ">>", "<=", ">=", "==", "!=", "&&", "||", "+=",
    "-=", "*=", "/=", "%=", "&=", "|=", "^=", "+", "-", "*", "/", "%", "<", ">", "=", "!", "~",
    "&", "|", "^", "(", ")", "[", "]", "{", "}", ";", ",", ".", ":", "?",
];

/// Split `src` into tokens. Columns count bytes from 1; a tab is one column.
pub fn tokenize(src: &str) -> Result<Vec<Token>, Vec<Diagnostic>> {
    let mut lx = Lexer { src: src.as_bytes(), i: 0, line: 1, col: 1, out: Vec::new(), errs: Vec::new() };
    lx.run();
    if lx.errs.is_empty() {
        Ok(lx.out)
    } else {
        Err(lx.errs)
    }
}

struct Lexer<'a> {
    src: &'a [u8],
    i: usize,
    line: u32,
    col: u32,
    out: Vec<Token>,
    errs: Vec<Diagnostic>,
}

impl Lexer<'_> {
    fn peek(&self, k: usize) -> u8 {
        self.src.get(self.i + k).copied().unwrap_or(0)
    }

    fn bump(&mut self) -> u8 {
        let c = self.src[self.i];
        self.i += 1;
        if c == b'\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        c
    }

    fn pos(&self) -> Pos {
        Pos { y: self.line, x: self.col }
    }

    fn error(&mut self, pos: Pos, msg: impl Into<String>) {
        self.errs.push(Diagnostic { pos, message: msg.into() });
    }

    fn run(&mut self) {
        loop {
            self.skip_space();
            let pos = self.pos();
            if self.i >= self.src.len() {
                self.out.push(Token { tok: Tok::Eof, pos });
                return;
            }
            let c = self.peek(0);
            let tok = if c.is_ascii_alphabetic() || c == b'_' {
                let start = self.i;
                while self.peek(0).is_ascii_alphanumeric() || self.peek(0) == b'_' {
                    self.bump();
                }
                let word = std::str::from_utf8(&self.src[start..self.i]).expect("ascii");
                match Kw::lookup(word) {
                    Some(k) => Tok::Kw(k),
                    None => Tok::Ident(word.to_owned()),
                }
            } else if c.is_ascii_digit() || (c == b'.' && self.peek(1).is_ascii_digit()) {
                match self.number() {
                    Some(t) => t,
                    None => {
                        self.error(pos, "malformed number");
                        continue;
                    }
                }
            } else if c == b'\'' {
                self.bump();
                let v = match self.escaped_char(pos) {
                    Some(v) => v,
                    None => continue,
                };
                if self.peek(0) != b'\'' {
                    self.error(pos, "unterminated character constant");
                    continue;
                }
                self.bump();
                // plain char is signed
                Tok::Char(v as i8 as i64)
            } else if c == b'"' {
                self.bump();
                let mut bytes = Vec::new();
                loop {
                    match self.peek(0) {
                        b'"' => {
                            self.bump();
                            break;
                        }
                        0 | b'\n' => {
                            self.error(pos, "unterminated string literal");
                            break;
                        }
                        _ => match self.escaped_char(pos) {
                            Some(v) => bytes.push(v),
                            None => break,
                        },
                    }
                }
                Tok::Str(bytes)
            } else {
                let rest = &self.src[self.i..];
                match PUNCTS.iter().find(|p| rest.starts_with(p.as_bytes())) {
                    Some(p) => {
                        for _ in 0..p.len() {
                            self.bump();
                        }
                        Tok::Punct(p)
                    }
                    None => {
                        let ch = self.bump();
                        self.error(pos, format!("unexpected character '{}'", ch as char));
                        continue;
                    }
                }
            };
            self.out.push(Token { tok, pos });
        }
    }

    fn skip_space(&mut self) {
        loop {
            match (self.peek(0), self.peek(1)) {
                (b' ' | b'\t' | b'\n' | b'\r' | 0x0c, _) => {
                    self.bump();
                }
                (b'/', b'/') => {
                    while self.i < self.src.len() && self.peek(0) != b'\n' {
                        self.bump();
                    }
                }
                (b'/', b'*') => {
                    let pos = self.pos();
                    self.bump();
                    self.bump();
                    loop {
                        if self.i >= self.src.len() {
                            self.error(pos, "unterminated comment");
                            return;
                        }
                        if self.peek(0) == b'*' && self.peek(1) == b'/' {
                            self.bump();
                            self.bump();
                            break;
                        }
                        self.bump();
                    }
                }
                _ => return,
            }
        }
    }

    fn escaped_char(&mut self, pos: Pos) -> Option<u8> {
        if self.i >= self.src.len() {
            self.error(pos, "unexpected end of file");
            return None;
        }
        let c = self.bump();
        if c != b'\\' {
            return Some(c);
        }
        let e = if self.i < self.src.len() { self.bump() } else { 0 };
        Some(match e {
            b'n' => b'\n',
            b't' => b'\t',
            b'r' => b'\r',
            b'0'..=b'7' => {
                let mut v = u32::from(e - b'0');
                for _ in 0..2 {
                    if (b'0'..=b'7').contains(&self.peek(0)) {
                        v = v * 8 + u32::from(self.bump() - b'0');
                    }
                }
                v as u8
            }
            b'x' => {
                let mut v = 0u32;
                while self.peek(0).is_ascii_hexdigit() {
                    v = v * 16 + (self.bump() as char).to_digit(16).expect("hex");
                }
                v as u8
            }
            b'\\' | b'\'' | b'"' | b'?' => e,
            b'a' => 7,
            b'b' => 8,
            b'f' => 12,
            b'v' => 11,
            _ => {
                self.error(pos, format!("unknown escape sequence '\\{}'", e as char));
                e
            }
        })
    }

    fn number(&mut self) -> Option<Tok> {
        let start = self.i;
        if self.peek(0) == b'0' && matches!(self.peek(1), b'x' | b'X') {
            self.bump();
            self.bump();
            let digits = self.i;
            while self.peek(0).is_ascii_hexdigit() {
                self.bump();
            }
            let text = std::str::from_utf8(&self.src[digits..self.i]).ok()?;
            let value = u64::from_str_radix(text, 16).ok()?;
            return Some(self.int_suffix(value));
        }
        while self.peek(0).is_ascii_digit() {
            self.bump();
        }
        let mut is_float = false;
        if self.peek(0) == b'.' {
            is_float = true;
            self.bump();
            while self.peek(0).is_ascii_digit() {
                self.bump();
            }
        }
        if matches!(self.peek(0), b'e' | b'E') {
            is_float = true;
            self.bump();
            if matches!(self.peek(0), b'+' | b'-') {
                self.bump();
            }
            while self.peek(0).is_ascii_digit() {
                self.bump();
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.i]).ok()?;
        if is_float {
            let value: f64 = text.parse().ok()?;
            let single = matches!(self.peek(0), b'f' | b'F');
            if single {
                self.bump();
            }
            return Some(Tok::Float { value, single });
        }
        let value = if text.len() > 1 && text.starts_with('0') {
            u64::from_str_radix(&text[1..], 8).ok()?
        } else {
            text.parse().ok()?
        };
        Some(self.int_suffix(value))
    }

    fn int_suffix(&mut self, value: u64) -> Tok {
        let mut unsigned = false;
        while matches!(self.peek(0), b'u' | b'U' | b'l' | b'L') {
            if matches!(self.bump(), b'u' | b'U') {
                unsigned = true;
            }
        }
        if self.peek(0).is_ascii_alphanumeric() {
            // e.g. 123abc; let the parser see a bogus identifier
            return Tok::Int { value, unsigned };
        }
        Tok::Int { value, unsigned: unsigned || value > i32::MAX as u64 }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<(Tok, u32, u32)> {
        tokenize(s).unwrap().into_iter().map(|t| (t.tok, t.pos.y, t.pos.x)).collect()
    }

    #[test]
    fn positions_are_one_based_bytes() {
        let t = toks("int x;\n\tif (a>=b)");
        assert_eq!(t[0], (Tok::Kw(Kw::Int), 1, 1));
        assert_eq!(t[1], (Tok::Ident("x".into()), 1, 5));
        assert_eq!(t[3], (Tok::Kw(Kw::If), 2, 2));
        assert_eq!(t[5], (Tok::Ident("a".into()), 2, 6));
        assert_eq!(t[6], (Tok::Punct(">="), 2, 7));
    }

    #[test]
    fn literals() {
        let t = toks(r#"0x1F 017 42u 'a' '\n' "hi\0" 1.5 2.0f -1"#);
        assert_eq!(t[0].0, Tok::Int { value: 31, unsigned: false });
        assert_eq!(t[1].0, Tok::Int { value: 15, unsigned: false });
        assert_eq!(t[2].0, Tok::Int { value: 42, unsigned: true });
        assert_eq!(t[3].0, Tok::Char(97));
        assert_eq!(t[4].0, Tok::Char(10));
        assert_eq!(t[5].0, Tok::Str(vec![b'h', b'i', 0]));
        assert_eq!(t[6].0, Tok::Float { value: 1.5, single: false });
        assert_eq!(t[7].0, Tok::Float { value: 2.0, single: true });
        assert_eq!(t[8].0, Tok::Punct("-"));
    }

    #[test]
    fn comments_are_skipped() {
        let t = toks("a /* x\n y */ b // c\nd");
        let names: Vec<_> = t.iter().map(|(_, y, x)| (*y, *x)).collect();
        assert_eq!(names, [(1, 1), (2, 7), (3, 1), (3, 2)]);
    }

    #[test]
    fn reports_bad_characters() {
        let errs = tokenize("int @;").unwrap_err();
        assert_eq!(errs[0].pos, Pos { y: 1, x: 5 });
    }
}
