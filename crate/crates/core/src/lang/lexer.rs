use super::ast::{Loc, Radix};
use super::ParseError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Tok {
    Ident(String),
    Int { value: i64, radix: Radix },
    Struct,
    IntKw,
    Unsigned,
    Char,
    Void,
    If,
    Else,
    While,
    Return,
    Assert,
    LBrace,
    RBrace,
    LParen,
    RParen,
    LBracket,
    RBracket,
    Semi,
    Comma,
    Dot,
    Amp,
    Star,
    Assign,
    EqEq,
    NotEq,
    Lt,
    Le,
    Gt,
    Ge,
    Plus,
    Minus,
    Slash,
    Percent,
    Bang,
    AndAnd,
    OrOr,
    Eof,
}

impl Tok {
    pub fn describe(&self) -> String {
        match self {
            Tok::Ident(name) => format!("identifier `{name}`"),
            Tok::Int { .. } => "integer literal".to_string(),
            Tok::Eof => "end of input".to_string(),
            other => format!("`{}`", other.spelling()),
        }
    }

    pub fn spelling(&self) -> &'static str {
        match self {
            Tok::Ident(_) => "identifier",
            Tok::Int { .. } => "integer",
            Tok::Struct => "struct",
            Tok::IntKw => "int",
            Tok::Unsigned => "unsigned",
            Tok::Char => "char",
            Tok::Void => "void",
            Tok::If => "if",
            Tok::Else => "else",
            Tok::While => "while",
            Tok::Return => "return",
            Tok::Assert => "assert",
            Tok::LBrace => "{",
            Tok::RBrace => "}",
            Tok::LParen => "(",
            Tok::RParen => ")",
            Tok::LBracket => "[",
            Tok::RBracket => "]",
            Tok::Semi => ";",
            Tok::Comma => ",",
            Tok::Dot => ".",
            Tok::Amp => "&",
            Tok::Star => "*",
            Tok::Assign => "=",
            Tok::EqEq => "==",
            Tok::NotEq => "!=",
            Tok::Lt => "<",
            Tok::Le => "<=",
            Tok::Gt => ">",
            Tok::Ge => ">=",
            Tok::Plus => "+",
            Tok::Minus => "-",
            Tok::Slash => "/",
            Tok::Percent => "%",
            Tok::Bang => "!",
            Tok::AndAnd => "&&",
            Tok::OrOr => "||",
            Tok::Eof => "end of input",
        }
    }
}

#[derive(Debug, Clone)]
pub struct Token {
    pub tok: Tok,
    pub loc: Loc,
}

pub fn is_ident_start(c: char) -> bool {
    c.is_ascii_alphabetic() || c == '_'
}

pub fn is_ident_continue(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_'
}

pub fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    chars.next().is_some_and(is_ident_start) && chars.all(is_ident_continue) && keyword(s).is_none()
}

fn keyword(s: &str) -> Option<Tok> {
    Some(match s {
        "struct" => Tok::Struct,
        "int" => Tok::IntKw,
        "unsigned" => Tok::Unsigned,
        "char" => Tok::Char,
        "void" => Tok::Void,
        "if" => Tok::If,
        "else" => Tok::Else,
        "while" => Tok::While,
        "return" => Tok::Return,
        "assert" => Tok::Assert,
        _ => return None,
    })
}

struct Cursor<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    line: u32,
    column: u32,
}

impl Cursor<'_> {
    fn peek(&mut self) -> Option<char> {
        self.chars.peek().copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.next()?;
        if c == '\n' {
            self.line += 1;
            self.column = 1;
        } else {
            self.column += 1;
        }
        Some(c)
    }

    fn loc(&self) -> Loc {
        Loc::new(self.line, self.column)
    }
}

pub fn tokenize(source: &str) -> Result<Vec<Token>, ParseError> {
    let mut cur = Cursor { chars: source.chars().peekable(), line: 1, column: 1 };
    let mut out = Vec::new();
    loop {
        // whitespace and comments
        loop {
            match cur.peek() {
                Some(c) if c.is_whitespace() => {
                    cur.bump();
                }
                Some('/') => {
                    let mut look = cur.chars.clone();
                    look.next();
                    match look.peek() {
                        Some('/') => {
                            while let Some(c) = cur.peek() {
                                if c == '\n' {
                                    break;
                                }
                                cur.bump();
                            }
                        }
                        Some('*') => {
                            let start = cur.loc();
                            cur.bump();
                            cur.bump();
                            let mut closed = false;
                            while let Some(c) = cur.bump() {
                                if c == '*' && cur.peek() == Some('/') {
                                    cur.bump();
                                    closed = true;
                                    break;
                                }
                            }
                            if !closed {
                                return Err(ParseError::new(
                                    start,
                                    vec!["`*/`".into()],
                                    "end of input",
                                    "unterminated block comment",
                                ));
                            }
                        }
                        _ => break,
                    }
                }
                _ => break,
            }
        }
        let loc = cur.loc();
        let Some(c) = cur.bump() else {
            out.push(Token { tok: Tok::Eof, loc });
            return Ok(out);
        };
        let tok = match c {
            c if is_ident_start(c) => {
                let mut s = String::from(c);
                while let Some(n) = cur.peek().filter(|&n| is_ident_continue(n)) {
                    s.push(n);
                    cur.bump();
                }
                keyword(&s).unwrap_or(Tok::Ident(s))
            }
            c if c.is_ascii_digit() => lex_number(c, &mut cur, loc)?,
            '{' => Tok::LBrace,
            '}' => Tok::RBrace,
            '(' => Tok::LParen,
            ')' => Tok::RParen,
            '[' => Tok::LBracket,
            ']' => Tok::RBracket,
            ';' => Tok::Semi,
            ',' => Tok::Comma,
            '.' => Tok::Dot,
            '*' => Tok::Star,
            '+' => Tok::Plus,
            '-' => Tok::Minus,
            '/' => Tok::Slash,
            '%' => Tok::Percent,
            '&' => {
                if cur.peek() == Some('&') {
                    cur.bump();
                    Tok::AndAnd
                } else {
                    Tok::Amp
                }
            }
            '|' => {
                if cur.peek() == Some('|') {
                    cur.bump();
                    Tok::OrOr
                } else {
                    return Err(ParseError::new(loc, vec!["`||`".into()], "`|`", "bitwise or is not supported"));
                }
            }
            '=' => two(&mut cur, '=', Tok::EqEq, Tok::Assign),
            '!' => two(&mut cur, '=', Tok::NotEq, Tok::Bang),
            '<' => two(&mut cur, '=', Tok::Le, Tok::Lt),
            '>' => two(&mut cur, '=', Tok::Ge, Tok::Gt),
            other => {
                return Err(ParseError::new(
                    loc,
                    vec!["token".into()],
                    format!("`{other}`"),
                    format!("unexpected character `{other}`"),
                ))
            }
        };
        out.push(Token { tok, loc });
    }
}

fn two(cur: &mut Cursor<'_>, next: char, yes: Tok, no: Tok) -> Tok {
    if cur.peek() == Some(next) {
        cur.bump();
        yes
    } else {
        no
    }
}

fn lex_number(first: char, cur: &mut Cursor<'_>, loc: Loc) -> Result<Tok, ParseError> {
    let bad = |text: &str| {
        ParseError::new(loc, vec!["integer literal".into()], format!("`{text}`"), "malformed integer literal")
    };
    if first == '0' && matches!(cur.peek(), Some('x') | Some('X')) {
        cur.bump();
        let mut digits = String::new();
        while let Some(d) = cur.peek().filter(|d| d.is_ascii_hexdigit()) {
            digits.push(d);
            cur.bump();
        }
        if digits.is_empty() || cur.peek().is_some_and(is_ident_continue) {
            return Err(bad(&format!("0x{digits}")));
        }
        let value = i64::from_str_radix(&digits, 16).map_err(|_| bad(&format!("0x{digits}")))?;
        return Ok(Tok::Int { value, radix: Radix::Hex });
    }
    let mut digits = String::from(first);
    while let Some(d) = cur.peek().filter(|d| d.is_ascii_digit()) {
        digits.push(d);
        cur.bump();
    }
    if cur.peek().is_some_and(is_ident_continue) {
        return Err(bad(&digits));
    }
    let value = digits.parse::<i64>().map_err(|_| bad(&digits))?;
    Ok(Tok::Int { value, radix: Radix::Decimal })
}
