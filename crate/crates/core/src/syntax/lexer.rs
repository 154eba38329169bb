use std::sync::Arc;

use ruint::aliases::U256;

use crate::address::Address;
use crate::diagnostic::{Diagnostic, SourceSpan};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Tok {
    Ident(String),
    Int(U256),
    Addr(Address),
    // keywords
    Contract,
    Is,
    Function,
    Constructor,
    Payback,
    External,
    Public,
    Private,
    Payable,
    Returns,
    Require,
    Return,
    If,
    Else,
    This,
    MsgSender,
    MsgValue,
    Transfer,
    Balance,
    True,
    False,
    Address,
    UInt,
    UInt160,
    Bool,
    // punctuation
    LBrace,
    RBrace,
    LParen,
    RParen,
    Semi,
    Comma,
    Dot,
    Assign,
    Plus,
    Minus,
    Star,
    Bang,
    EqEq,
    NotEq,
    Lt,
    Le,
    Gt,
    Ge,
    AndAnd,
    OrOr,
    Eof,
}

impl Tok {
    pub fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("identifier `{s}`"),
            Tok::Int(v) => format!("integer `{v}`"),
            Tok::Addr(a) => format!("address `{a}`"),
            Tok::Eof => "end of input".to_string(),
            other => format!("`{}`", other.text()),
        }
    }

    fn text(&self) -> &'static str {
        match self {
            Tok::Contract => "contract",
            Tok::Is => "is",
            Tok::Function => "function",
            Tok::Constructor => "constructor",
            Tok::Payback => "payback",
            Tok::External => "external",
            Tok::Public => "public",
            Tok::Private => "private",
            Tok::Payable => "payable",
            Tok::Returns => "returns",
            Tok::Require => "require",
            Tok::Return => "return",
            Tok::If => "if",
            Tok::Else => "else",
            Tok::This => "this",
            Tok::MsgSender => "msg.sender",
            Tok::MsgValue => "msg.value",
            Tok::Transfer => "transfer",
            Tok::Balance => "balance",
            Tok::True => "true",
            Tok::False => "false",
            Tok::Address => "address",
            Tok::UInt => "uint",
            Tok::UInt160 => "uint160",
            Tok::Bool => "bool",
            Tok::LBrace => "{",
            Tok::RBrace => "}",
            Tok::LParen => "(",
            Tok::RParen => ")",
            Tok::Semi => ";",
            Tok::Comma => ",",
            Tok::Dot => ".",
            Tok::Assign => "=",
            Tok::Plus => "+",
            Tok::Minus => "-",
            Tok::Star => "*",
            Tok::Bang => "!",
            Tok::EqEq => "==",
            Tok::NotEq => "!=",
            Tok::Lt => "<",
            Tok::Le => "<=",
            Tok::Gt => ">",
            Tok::Ge => ">=",
            Tok::AndAnd => "&&",
            Tok::OrOr => "||",
            Tok::Ident(_) | Tok::Int(_) | Tok::Addr(_) | Tok::Eof => "",
        }
    }
}

fn keyword(word: &str) -> Option<Tok> {
    Some(match word {
        "contract" => Tok::Contract,
        "is" => Tok::Is,
        "function" => Tok::Function,
        "constructor" => Tok::Constructor,
        "payback" => Tok::Payback,
        "external" => Tok::External,
        "public" => Tok::Public,
        "private" => Tok::Private,
        "payable" => Tok::Payable,
        "returns" => Tok::Returns,
        "require" => Tok::Require,
        "return" => Tok::Return,
        "if" => Tok::If,
        "else" => Tok::Else,
        "this" => Tok::This,
        "transfer" => Tok::Transfer,
        "balance" => Tok::Balance,
        "true" => Tok::True,
        "false" => Tok::False,
        "address" => Tok::Address,
        "uint" => Tok::UInt,
        "uint160" => Tok::UInt160,
        "bool" => Tok::Bool,
        _ => return None,
    })
}

#[derive(Clone, Debug)]
pub struct Token {
    pub tok: Tok,
    pub span: SourceSpan,
}

struct Cursor<'s> {
    src: &'s str,
    file: Arc<str>,
    pos: usize,
    line: u32,
    col: u32,
}

impl Cursor<'_> {
    fn peek(&self) -> Option<u8> {
        self.src.as_bytes().get(self.pos).copied()
    }

    fn peek_at(&self, off: usize) -> Option<u8> {
        self.src.as_bytes().get(self.pos + off).copied()
    }

    fn bump(&mut self) {
        if let Some(c) = self.src[self.pos..].chars().next() {
            self.pos += c.len_utf8();
            if c == '\n' {
                self.line += 1;
                self.col = 1;
            } else {
                self.col += 1;
            }
        }
    }

    fn span_from(&self, start: (usize, u32, u32)) -> SourceSpan {
        SourceSpan { file: self.file.clone(), start: start.0, end: self.pos, line: start.1, column: start.2, end_line: self.line, end_column: self.col }
    }
}

/// Splits `src` into tokens. The final token is always [`Tok::Eof`].
pub fn lex(file: &str, src: &str) -> (Vec<Token>, Vec<Diagnostic>) {
    let mut cur = Cursor { src, file: Arc::from(file), pos: 0, line: 1, col: 1 };
    let mut tokens = Vec::new();
    let mut diags = Vec::new();

    loop {
        // whitespace and `//` comments
        loop {
            match cur.peek() {
                Some(c) if c.is_ascii_whitespace() => cur.bump(),
                Some(b'/') if cur.peek_at(1) == Some(b'/') => {
                    while !matches!(cur.peek(), None | Some(b'\n')) {
                        cur.bump();
                    }
                }
                _ => break,
            }
        }
        let start = (cur.pos, cur.line, cur.col);
        let Some(c) = cur.peek() else {
            tokens.push(Token { tok: Tok::Eof, span: cur.span_from(start) });
            break;
        };

        let tok = if c.is_ascii_alphabetic() || c == b'_' {
            while matches!(cur.peek(), Some(c) if c.is_ascii_alphanumeric() || c == b'_') {
                cur.bump();
            }
            let word = &src[start.0..cur.pos];
            if word == "msg" && cur.peek() == Some(b'.') {
                let rest = &src[cur.pos + 1..];
                let member = rest.bytes().take_while(|c| c.is_ascii_alphanumeric() || *c == b'_').count();
                match &rest[..member] {
                    "sender" | "value" => {
                        let is_sender = &rest[..member] == "sender";
                        for _ in 0..=member {
                            cur.bump();
                        }
                        if is_sender {
                            Tok::MsgSender
                        } else {
                            Tok::MsgValue
                        }
                    }
                    _ => Tok::Ident(word.to_string()),
                }
            } else {
                keyword(word).unwrap_or_else(|| Tok::Ident(word.to_string()))
            }
        } else if c.is_ascii_digit() {
            if c == b'0' && matches!(cur.peek_at(1), Some(b'x' | b'X')) {
                cur.bump();
                cur.bump();
                while matches!(cur.peek(), Some(c) if c.is_ascii_alphanumeric()) {
                    cur.bump();
                }
                let text = &src[start.0..cur.pos];
                match text.parse::<Address>() {
                    Ok(a) => Tok::Addr(a),
                    Err(e) => {
                        diags.push(Diagnostic::error("PARSE", format!("bad address literal `{text}`: {e}"), cur.span_from(start)));
                        Tok::Addr(Address::ZERO)
                    }
                }
            } else {
                while matches!(cur.peek(), Some(c) if c.is_ascii_digit()) {
                    cur.bump();
                }
                let text = &src[start.0..cur.pos];
                match U256::from_str_radix(text, 10) {
                    Ok(v) => Tok::Int(v),
                    Err(_) => {
                        diags.push(Diagnostic::error("PARSE", format!("integer literal `{text}` does not fit in 256 bits"), cur.span_from(start)));
                        Tok::Int(U256::ZERO)
                    }
                }
            }
        } else {
            let two = (c, cur.peek_at(1));
            let (tok, len) = match two {
                (b'=', Some(b'=')) => (Some(Tok::EqEq), 2),
                (b'!', Some(b'=')) => (Some(Tok::NotEq), 2),
                (b'<', Some(b'=')) => (Some(Tok::Le), 2),
                (b'>', Some(b'=')) => (Some(Tok::Ge), 2),
                (b'&', Some(b'&')) => (Some(Tok::AndAnd), 2),
                (b'|', Some(b'|')) => (Some(Tok::OrOr), 2),
                (b'{', _) => (Some(Tok::LBrace), 1),
                (b'}', _) => (Some(Tok::RBrace), 1),
                (b'(', _) => (Some(Tok::LParen), 1),
                (b')', _) => (Some(Tok::RParen), 1),
                (b';', _) => (Some(Tok::Semi), 1),
                (b',', _) => (Some(Tok::Comma), 1),
                (b'.', _) => (Some(Tok::Dot), 1),
                (b'=', _) => (Some(Tok::Assign), 1),
                (b'+', _) => (Some(Tok::Plus), 1),
                (b'-', _) => (Some(Tok::Minus), 1),
                (b'*', _) => (Some(Tok::Star), 1),
                (b'!', _) => (Some(Tok::Bang), 1),
                (b'<', _) => (Some(Tok::Lt), 1),
                (b'>', _) => (Some(Tok::Gt), 1),
                _ => (None, 1),
            };
            for _ in 0..len {
                cur.bump();
            }
            match tok {
                Some(t) => t,
                None => {
                    let ch = src[start.0..].chars().next().unwrap_or('?');
                    diags.push(Diagnostic::error("PARSE", format!("unexpected character `{ch}`"), cur.span_from(start)));
                    continue;
                }
            }
        };
        tokens.push(Token { tok, span: cur.span_from(start) });
    }
    (tokens, diags)
}
