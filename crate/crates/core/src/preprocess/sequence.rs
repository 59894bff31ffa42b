//! Triple-dot abbreviations: `x1,...,x100`, `1*...*10` and running
//! patterns such as `<p1,m4>,...,<p4,m1>`.

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum SequenceError {
    #[error("Items {0} and {1} around ... do not have the same shape")]
    Shape(String, String),
    #[error("Unequal numerical differences between {0} and {1}")]
    UnequalSteps(String, String),
    #[error("Illegal use of ...")]
    Syntax,
}

#[derive(Debug, PartialEq, Eq)]
enum Piece<'a> {
    Text(&'a str),
    Num(i64),
}

fn pieces(s: &str) -> Vec<Piece<'_>> {
    let b = s.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < b.len() {
        let start = i;
        let digit = b[i].is_ascii_digit();
        while i < b.len() && b[i].is_ascii_digit() == digit {
            i += 1;
        }
        let chunk = &s[start..i];
        if digit {
            match chunk.parse() {
                Ok(n) => out.push(Piece::Num(n)),
                Err(_) => out.push(Piece::Text(chunk)),
            }
        } else {
            out.push(Piece::Text(chunk));
        }
    }
    out
}

/// Expands the items between `begin` and `end` (inclusive). Both must
/// agree outside their embedded integers, and every integer that changes
/// must change by the same absolute amount.
pub fn expand_sequence(begin: &str, end: &str) -> Result<Vec<String>, SequenceError> {
    let (a, b) = (pieces(begin), pieces(end));
    let shape_err = || SequenceError::Shape(begin.to_string(), end.to_string());
    if a.len() != b.len() {
        return Err(shape_err());
    }
    let mut steps: Option<i64> = None;
    for (x, y) in a.iter().zip(&b) {
        match (x, y) {
            (Piece::Text(s), Piece::Text(t)) if s == t => {}
            (Piece::Num(m), Piece::Num(n)) => {
                let d = (n - m).abs();
                if d != 0 {
                    match steps {
                        None => steps = Some(d),
                        Some(s) if s == d => {}
                        Some(_) => return Err(SequenceError::UnequalSteps(begin.to_string(), end.to_string())),
                    }
                }
            }
            _ => return Err(shape_err()),
        }
    }
    let count = steps.unwrap_or(0) + 1;
    let mut out = Vec::with_capacity(count as usize);
    for k in 0..count {
        let mut s = String::new();
        for (x, y) in a.iter().zip(&b) {
            match (x, y) {
                (Piece::Text(t), _) => s.push_str(t),
                (Piece::Num(m), Piece::Num(n)) => s.push_str(&(m + k * (n - m).signum()).to_string()),
                _ => unreachable!("shapes checked"),
            }
        }
        out.push(s);
    }
    Ok(out)
}

fn is_item_char(c: u8) -> bool {
    c.is_ascii_alphanumeric() || c == b'_' || c == b'?' || c == b'$'
}

/// Replaces every `...` occurrence in a statement text.
pub fn expand_dots(text: &str) -> Result<String, SequenceError> {
    let mut s = text.to_string();
    let mut from = 0;
    while let Some(rel) = s[from..].find("...") {
        let p = from + rel;
        let b = s.as_bytes();
        if p == 0 || p + 3 >= b.len() {
            return Err(SequenceError::Syntax);
        }
        let sep = b[p - 1];
        if !matches!(sep, b',' | b'*' | b'+') || b[p + 3] != sep || p < 2 {
            return Err(SequenceError::Syntax);
        }
        let begin_end = p - 1;
        let (begin_start, bracketed) = if b[begin_end - 1] == b'>' {
            let open = s[..begin_end].rfind('<').ok_or(SequenceError::Syntax)?;
            (open, true)
        } else {
            let mut i = begin_end;
            while i > 0 && is_item_char(b[i - 1]) {
                i -= 1;
            }
            (i, false)
        };
        let end_start = p + 4;
        let end_stop = if bracketed {
            if b.get(end_start) != Some(&b'<') {
                return Err(SequenceError::Syntax);
            }
            end_start + s[end_start..].find('>').ok_or(SequenceError::Syntax)? + 1
        } else {
            let mut i = end_start;
            while i < b.len() && is_item_char(b[i]) {
                i += 1;
            }
            i
        };
        let (first, last) = if bracketed {
            (&s[begin_start + 1..begin_end - 1], &s[end_start + 1..end_stop - 1])
        } else {
            (&s[begin_start..begin_end], &s[end_start..end_stop])
        };
        if first.is_empty() || last.is_empty() {
            return Err(SequenceError::Syntax);
        }
        let items = expand_sequence(first, last)?;
        let joined = items.join(&(sep as char).to_string());
        s.replace_range(begin_start..end_stop, &joined);
        from = begin_start + joined.len();
    }
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symbol_list() {
        let out = expand_dots("Symbols x1,...,x100;").unwrap();
        let items: Vec<&str> = out.trim_start_matches("Symbols ").trim_end_matches(';').split(',').collect();
        assert_eq!(items.len(), 100);
        assert_eq!(items[0], "x1");
        assert_eq!(items[99], "x100");
    }

    #[test]
    fn product() {
        assert_eq!(expand_dots("Local Fac10 = 1*...*10;").unwrap(), "Local Fac10 = 1*2*3*4*5*6*7*8*9*10;");
    }

    #[test]
    fn running_pattern() {
        assert_eq!(expand_dots("id f(<p1,m4>,...,<p4,m1>) =").unwrap(), "id f(p1,m4,p2,m3,p3,m2,p4,m1) =");
    }

    #[test]
    fn wildcards_and_descending() {
        assert_eq!(expand_dots("e_(i1?,...,i3?)").unwrap(), "e_(i1?,i2?,i3?)");
        assert_eq!(expand_dots("f(x3,...,x1)").unwrap(), "f(x3,x2,x1)");
        assert_eq!(expand_dots("(x1+...+x3)^2").unwrap(), "(x1+x2+x3)^2");
        assert_eq!(expand_dots("e_(1,...,1)").unwrap(), "e_(1)");
    }

    #[test]
    fn errors() {
        assert!(matches!(expand_sequence("x1", "y3"), Err(SequenceError::Shape(..))));
        assert!(matches!(expand_sequence("p1,m1", "p4,m2"), Err(SequenceError::UnequalSteps(..))));
    }

    #[test]
    fn plain_text_untouched() {
        assert_eq!(expand_dots("id x = y+1;").unwrap(), "id x = y+1;");
    }
}
