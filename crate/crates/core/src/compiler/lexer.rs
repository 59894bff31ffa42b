use num::BigInt;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Tok {
    Num(BigInt),
    Name(String),
    /// `[x+1]`-style name.
    BName(String),
    Dollar(String),
    Str(String),
    Op(&'static str),
}

#[derive(Clone, Debug)]
pub struct Token {
    pub tok: Tok,
    pub pos: usize,
}

const OPS: [&str; 25] = [
    "==", "!=", "<=", ">=", "&&", "||", "+", "-", "*", "/", "^", "(", ")", ",", "?", "!", "{", "}", "[", "]", "=",
    "<", ">", ":", ";",
];

fn is_name_start(c: char) -> bool {
    c.is_ascii_alphabetic()
}

fn is_name_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_'
}

/// Splits statement text into tokens. `[` starts a bracketed name only at
/// the start of an operand; after a name or `)` it is an operator.
pub fn tokenize(src: &str) -> Result<Vec<Token>, String> {
    let chars: Vec<(usize, char)> = src.char_indices().collect();
    let mut out: Vec<Token> = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let (pos, c) = chars[i];
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        if c.is_ascii_digit() {
            let start = i;
            while i < chars.len() && chars[i].1.is_ascii_digit() {
                i += 1;
            }
            let text: String = chars[start..i].iter().map(|x| x.1).collect();
            out.push(Token { tok: Tok::Num(text.parse().expect("digits")), pos });
            continue;
        }
        if is_name_start(c) || (c == '$' && i + 1 < chars.len() && is_name_start(chars[i + 1].1)) {
            let start = i;
            i += 1;
            while i < chars.len() && is_name_char(chars[i].1) {
                i += 1;
            }
            let text: String = chars[start..i].iter().map(|x| x.1).collect();
            let tok = if c == '$' { Tok::Dollar(text) } else { Tok::Name(text) };
            out.push(Token { tok, pos });
            continue;
        }
        if c == '"' {
            let start = i + 1;
            i += 1;
            while i < chars.len() && chars[i].1 != '"' {
                i += 1;
            }
            if i >= chars.len() {
                return Err("Unterminated string".into());
            }
            let text: String = chars[start..i].iter().map(|x| x.1).collect();
            i += 1;
            out.push(Token { tok: Tok::Str(text), pos });
            continue;
        }
        if c == '[' {
            let operand_position = !matches!(
                out.last().map(|t| &t.tok),
                Some(Tok::Name(_)) | Some(Tok::BName(_)) | Some(Tok::Op(")")) | Some(Tok::Op("]"))
            );
            if operand_position {
                let mut depth = 0;
                let start = i;
                while i < chars.len() {
                    match chars[i].1 {
                        '[' => depth += 1,
                        ']' => {
                            depth -= 1;
                            if depth == 0 {
                                break;
                            }
                        }
                        _ => {}
                    }
                    i += 1;
                }
                if i >= chars.len() {
                    return Err("Unmatched [".into());
                }
                let text: String = chars[start..=i].iter().map(|x| x.1).collect();
                i += 1;
                out.push(Token { tok: Tok::BName(text), pos });
                continue;
            }
        }
        let rest = &src[pos..];
        match OPS.iter().find(|op| rest.starts_with(**op)) {
            Some(op) => {
                out.push(Token { tok: Tok::Op(op), pos });
                i += op.chars().count();
            }
            None => return Err(format!("Illegal character {c}")),
        }
    }
    Ok(out)
}
