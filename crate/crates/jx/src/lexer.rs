use crate::ast::Pos;
use crate::error::ParseError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Tok {
    Ident(String),
    Int(i64),
    Text(String),
    Package,
    Class,
    Interface,
    Extends,
    Implements,
    Static,
    Void,
    IntKw,
    Boolean,
    TextKw,
    True,
    False,
    New,
    This,
    Return,
    If,
    Else,
    While,
    Semi,
    Comma,
    Dot,
    LBrace,
    RBrace,
    LParen,
    RParen,
    Assign,
    EqEq,
    NotEq,
    Lt,
    Gt,
    Plus,
    Minus,
    Star,
    Slash,
    Eof,
}

impl Tok {
    pub fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("identifier `{s}`"),
            Tok::Int(v) => format!("integer `{v}`"),
            Tok::Text(_) => "text literal".to_string(),
            Tok::Eof => "end of input".to_string(),
            other => format!("`{}`", other.spelling()),
        }
    }

    fn spelling(&self) -> &'static str {
        match self {
            Tok::Package => "package",
            Tok::Class => "class",
            Tok::Interface => "interface",
            Tok::Extends => "extends",
            Tok::Implements => "implements",
            Tok::Static => "static",
            Tok::Void => "void",
            Tok::IntKw => "int",
            Tok::Boolean => "boolean",
            Tok::TextKw => "text",
            Tok::True => "true",
            Tok::False => "false",
            Tok::New => "new",
            Tok::This => "this",
            Tok::Return => "return",
            Tok::If => "if",
            Tok::Else => "else",
            Tok::While => "while",
            Tok::Semi => ";",
            Tok::Comma => ",",
            Tok::Dot => ".",
            Tok::LBrace => "{",
            Tok::RBrace => "}",
            Tok::LParen => "(",
            Tok::RParen => ")",
            Tok::Assign => "=",
            Tok::EqEq => "==",
            Tok::NotEq => "!=",
            Tok::Lt => "<",
            Tok::Gt => ">",
            Tok::Plus => "+",
            Tok::Minus => "-",
            Tok::Star => "*",
            Tok::Slash => "/",
            Tok::Ident(_) | Tok::Int(_) | Tok::Text(_) | Tok::Eof => "",
        }
    }
}

fn keyword(word: &str) -> Option<Tok> {
    Some(match word {
        "package" => Tok::Package,
        "class" => Tok::Class,
        "interface" => Tok::Interface,
        "extends" => Tok::Extends,
        "implements" => Tok::Implements,
        "static" => Tok::Static,
        "void" => Tok::Void,
        "int" => Tok::IntKw,
        "boolean" => Tok::Boolean,
        "text" => Tok::TextKw,
        "true" => Tok::True,
        "false" => Tok::False,
        "new" => Tok::New,
        "this" => Tok::This,
        "return" => Tok::Return,
        "if" => Tok::If,
        "else" => Tok::Else,
        "while" => Tok::While,
        _ => return None,
    })
}

pub(crate) fn is_keyword(word: &str) -> bool {
    keyword(word).is_some()
}

pub(crate) struct Lexer<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    line: u32,
    col: u32,
    origin: &'a str,
}

impl<'a> Lexer<'a> {
    pub fn new(source: &'a str, origin: &'a str) -> Self {
        Lexer {
            chars: source.chars().peekable(),
            line: 1,
            col: 1,
            origin,
        }
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.next()?;
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn pos(&self) -> Pos {
        Pos {
            line: self.line,
            col: self.col,
        }
    }

    fn error(&self, pos: Pos, expected: &str, found: String) -> ParseError {
        ParseError {
            origin: self.origin.to_string(),
            pos,
            expected: expected.to_string(),
            found,
        }
    }

    fn skip_trivia(&mut self) -> Result<(), ParseError> {
        loop {
            match self.chars.peek() {
                Some(c) if c.is_whitespace() => {
                    self.bump();
                }
                Some('/') => {
                    let mut ahead = self.chars.clone();
                    ahead.next();
                    match ahead.peek() {
                        Some('/') => {
                            while let Some(c) = self.bump() {
                                if c == '\n' {
                                    break;
                                }
                            }
                        }
                        Some('*') => {
                            let start = self.pos();
                            self.bump();
                            self.bump();
                            let mut prev = '\0';
                            loop {
                                match self.bump() {
                                    Some('/') if prev == '*' => break,
                                    Some(c) => prev = c,
                                    None => {
                                        return Err(self.error(
                                            start,
                                            "end of block comment",
                                            "end of input".into(),
                                        ))
                                    }
                                }
                            }
                        }
                        _ => return Ok(()),
                    }
                }
                _ => return Ok(()),
            }
        }
    }

    pub fn tokenize(mut self) -> Result<Vec<(Tok, Pos)>, ParseError> {
        let mut out = Vec::new();
        loop {
            self.skip_trivia()?;
            let pos = self.pos();
            let Some(&c) = self.chars.peek() else {
                out.push((Tok::Eof, pos));
                return Ok(out);
            };
            let tok = if c.is_ascii_alphabetic() || c == '_' {
                let mut word = String::new();
                while let Some(&c) = self.chars.peek() {
                    if c.is_ascii_alphanumeric() || c == '_' {
                        word.push(c);
                        self.bump();
                    } else {
                        break;
                    }
                }
                keyword(&word).unwrap_or(Tok::Ident(word))
            } else if c.is_ascii_digit() {
                let mut digits = String::new();
                while let Some(&c) = self.chars.peek() {
                    if c.is_ascii_digit() {
                        digits.push(c);
                        self.bump();
                    } else {
                        break;
                    }
                }
                let value = digits
                    .parse::<i64>()
                    .map_err(|_| self.error(pos, "integer literal in range", digits.clone()))?;
                Tok::Int(value)
            } else if c == '"' {
                self.bump();
                let mut text = String::new();
                loop {
                    match self.bump() {
                        Some('"') => break,
                        Some('\\') => match self.bump() {
                            Some('"') => text.push('"'),
                            Some('\\') => text.push('\\'),
                            other => {
                                return Err(self.error(
                                    pos,
                                    "escape `\\\"` or `\\\\`",
                                    format!("{other:?}"),
                                ))
                            }
                        },
                        Some('\n') | None => {
                            return Err(self.error(pos, "closing `\"`", "end of line".into()))
                        }
                        Some(c) => text.push(c),
                    }
                }
                Tok::Text(text)
            } else {
                self.bump();
                match c {
                    ';' => Tok::Semi,
                    ',' => Tok::Comma,
                    '.' => Tok::Dot,
                    '{' => Tok::LBrace,
                    '}' => Tok::RBrace,
                    '(' => Tok::LParen,
                    ')' => Tok::RParen,
                    '+' => Tok::Plus,
                    '-' => Tok::Minus,
                    '*' => Tok::Star,
                    '/' => Tok::Slash,
                    '<' => Tok::Lt,
                    '>' => Tok::Gt,
                    '=' => {
                        if self.chars.peek() == Some(&'=') {
                            self.bump();
                            Tok::EqEq
                        } else {
                            Tok::Assign
                        }
                    }
                    '!' if self.chars.peek() == Some(&'=') => {
                        self.bump();
                        Tok::NotEq
                    }
                    other => return Err(self.error(pos, "token", format!("`{other}`"))),
                }
            };
            out.push((tok, pos));
        }
    }
}
