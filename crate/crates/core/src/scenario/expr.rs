//! Arithmetic on constants: numbers, `pi`, `+ - * / ^`, parentheses and
//! implicit multiplication (`2pi`, `3(1+x)`).

use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq)]
enum Tok {
    Num(f64),
    Pi,
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    Open,
    Close,
}

fn lex(src: &str) -> Result<Vec<Tok>, String> {
    let b = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < b.len() {
        let c = b[i] as char;
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        if c.is_ascii_digit() || c == '.' {
            let start = i;
            while i < b.len() && (b[i].is_ascii_digit() || b[i] == b'.') {
                i += 1;
            }
            // Exponent only when digits follow, so `2e` stays an error and `2pi` lexes.
            if i < b.len() && (b[i] == b'e' || b[i] == b'E') {
                let mut j = i + 1;
                if j < b.len() && (b[j] == b'+' || b[j] == b'-') {
                    j += 1;
                }
                if j < b.len() && b[j].is_ascii_digit() {
                    while j < b.len() && b[j].is_ascii_digit() {
                        j += 1;
                    }
                    i = j;
                }
            }
            let text = &src[start..i];
            let v: f64 = text.parse().map_err(|_| format!("bad number `{text}`"))?;
            out.push(Tok::Num(v));
            continue;
        }
        if c.is_ascii_alphabetic() {
            let start = i;
            while i < b.len() && (b[i].is_ascii_alphanumeric() || b[i] == b'_') {
                i += 1;
            }
            match &src[start..i] {
                "pi" => out.push(Tok::Pi),
                other => return Err(format!("unknown name `{other}`")),
            }
            continue;
        }
        out.push(match c {
            '+' => Tok::Plus,
            '-' => Tok::Minus,
            '*' => Tok::Star,
            '/' => Tok::Slash,
            '^' => Tok::Caret,
            '(' => Tok::Open,
            ')' => Tok::Close,
            _ => return Err(format!("unexpected character `{c}`")),
        });
        i += 1;
    }
    Ok(out)
}

struct Parser {
    toks: Vec<Tok>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<Tok> {
        self.toks.get(self.pos).copied()
    }

    fn next(&mut self) -> Option<Tok> {
        let t = self.peek();
        self.pos += 1;
        t
    }

    fn expr(&mut self) -> Result<f64, String> {
        let mut v = self.term()?;
        loop {
            match self.peek() {
                Some(Tok::Plus) => {
                    self.pos += 1;
                    v += self.term()?;
                }
                Some(Tok::Minus) => {
                    self.pos += 1;
                    v -= self.term()?;
                }
                _ => return Ok(v),
            }
        }
    }

    fn term(&mut self) -> Result<f64, String> {
        let mut v = self.unary()?;
        loop {
            match self.peek() {
                Some(Tok::Star) => {
                    self.pos += 1;
                    v *= self.unary()?;
                }
                Some(Tok::Slash) => {
                    self.pos += 1;
                    v /= self.unary()?;
                }
                Some(Tok::Num(_)) | Some(Tok::Pi) | Some(Tok::Open) => v *= self.power()?,
                _ => return Ok(v),
            }
        }
    }

    fn unary(&mut self) -> Result<f64, String> {
        match self.peek() {
            Some(Tok::Minus) => {
                self.pos += 1;
                Ok(-self.unary()?)
            }
            Some(Tok::Plus) => {
                self.pos += 1;
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<f64, String> {
        let base = self.primary()?;
        if self.peek() == Some(Tok::Caret) {
            self.pos += 1;
            let exp = self.unary()?;
            return Ok(base.powf(exp));
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<f64, String> {
        match self.next() {
            Some(Tok::Num(v)) => Ok(v),
            Some(Tok::Pi) => Ok(PI),
            Some(Tok::Open) => {
                let v = self.expr()?;
                match self.next() {
                    Some(Tok::Close) => Ok(v),
                    _ => Err("missing `)`".into()),
                }
            }
            Some(t) => Err(format!("unexpected {t:?}")),
            None => Err("unexpected end of expression".into()),
        }
    }
}

/// Evaluates `src`; the result must be finite.
pub fn eval(src: &str) -> Result<f64, String> {
    let toks = lex(src)?;
    if toks.is_empty() {
        return Err("empty expression".into());
    }
    let mut p = Parser { toks, pos: 0 };
    let v = p.expr()?;
    if let Some(t) = p.peek() {
        return Err(format!("trailing {t:?}"));
    }
    if !v.is_finite() {
        return Err(format!("`{src}` is not finite"));
    }
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn arithmetic() {
        assert_eq!(eval("1 + 2*3").unwrap(), 7.0);
        assert_eq!(eval("2^3^2").unwrap(), 512.0);
        assert_eq!(eval("-2^2").unwrap(), -4.0);
        assert_eq!(eval("(1+1)/4").unwrap(), 0.5);
        assert_eq!(eval("2pi*11.2e6").unwrap(), 2.0 * PI * 11.2e6);
        assert_eq!(eval("3(2+1)").unwrap(), 9.0);
        assert_eq!(eval("1.5e-3").unwrap(), 1.5e-3);
        assert_eq!(eval("-1.5707963267948966e0").unwrap(), -std::f64::consts::FRAC_PI_2);
    }

    #[test]
    fn canonical_float_round_trips() {
        for v in [7.037_167_544_041_119e7, 0.2, 1e-300, -3.3e-9] {
            assert_eq!(eval(&format!("{v:.16e}")).unwrap(), v);
        }
    }

    #[test]
    fn rejects_garbage() {
        for bad in ["", "1 +", "(2", "2 rad", "1/0", "2e", "x", "1 2 )"] {
            assert!(eval(bad).is_err(), "{bad}");
        }
    }
}
