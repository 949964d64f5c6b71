//! A second, independent reading of the expression grammar that evaluates
//! while it parses, without building a tree.
//!
//! `Ok(Some(v))` is a value, `Ok(None)` a domain error, `Err(())` a syntax error.

type Outcome = Result<Option<f64>, ()>;

pub fn evaluate(src: &str, vars: &[(&str, f64)]) -> Outcome {
    let mut p = Reader { s: src.as_bytes(), at: 0, vars };
    let v = p.sum()?;
    p.skip_space();
    if p.at != p.s.len() {
        return Err(());
    }
    Ok(v)
}

struct Reader<'a> {
    s: &'a [u8],
    at: usize,
    vars: &'a [(&'a str, f64)],
}

fn finite(v: f64) -> Option<f64> {
    v.is_finite().then_some(v)
}

fn lift2(a: Option<f64>, b: Option<f64>, op: impl Fn(f64, f64) -> Option<f64>) -> Option<f64> {
    match (a, b) {
        (Some(x), Some(y)) => op(x, y).and_then(finite),
        _ => None,
    }
}

impl Reader<'_> {
    fn skip_space(&mut self) {
        loop {
            while self.at < self.s.len() && self.s[self.at].is_ascii_whitespace() {
                self.at += 1;
            }
            if self.at < self.s.len() && self.s[self.at] == b'#' {
                while self.at < self.s.len() && self.s[self.at] != b'\n' {
                    self.at += 1;
                }
            } else {
                return;
            }
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_space();
        self.s.get(self.at).copied()
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.at += 1;
            true
        } else {
            false
        }
    }

    fn sum(&mut self) -> Outcome {
        let mut acc = self.product()?;
        loop {
            if self.eat(b'+') {
                let r = self.product()?;
                acc = lift2(acc, r, |x, y| Some(x + y));
            } else if self.eat(b'-') {
                let r = self.product()?;
                acc = lift2(acc, r, |x, y| Some(x - y));
            } else {
                return Ok(acc);
            }
        }
    }

    fn product(&mut self) -> Outcome {
        let mut acc = self.unary()?;
        loop {
            if self.eat(b'*') {
                let r = self.unary()?;
                acc = lift2(acc, r, |x, y| Some(x * y));
            } else if self.eat(b'/') {
                let r = self.unary()?;
                acc = lift2(acc, r, |x, y| (y != 0.0).then(|| x / y));
            } else {
                return Ok(acc);
            }
        }
    }

    fn unary(&mut self) -> Outcome {
        if self.eat(b'-') {
            return Ok(self.unary()?.map(|v| -v));
        }
        let base = self.primary()?;
        if self.eat(b'^') {
            let exp = self.unary()?;
            return Ok(lift2(base, exp, |x, y| Some(x.powf(y))));
        }
        Ok(base)
    }

    fn number(&mut self) -> Outcome {
        let start = self.at;
        let digits = |r: &mut Self| {
            let from = r.at;
            while r.at < r.s.len() && r.s[r.at].is_ascii_digit() {
                r.at += 1;
            }
            r.at - from
        };
        let mut count = digits(self);
        if self.at < self.s.len() && self.s[self.at] == b'.' {
            self.at += 1;
            count += digits(self);
        }
        if count == 0 {
            return Err(());
        }
        if self.at < self.s.len() && matches!(self.s[self.at], b'e' | b'E') {
            let mark = self.at;
            self.at += 1;
            if self.at < self.s.len() && matches!(self.s[self.at], b'+' | b'-') {
                self.at += 1;
            }
            if digits(self) == 0 {
                self.at = mark;
            }
        }
        let text = std::str::from_utf8(&self.s[start..self.at]).map_err(|_| ())?;
        let v: f64 = text.parse().map_err(|_| ())?;
        if v.is_finite() {
            Ok(Some(v))
        } else {
            Err(())
        }
    }

    fn primary(&mut self) -> Outcome {
        match self.peek() {
            Some(b'(') => {
                self.at += 1;
                let v = self.sum()?;
                if !self.eat(b')') {
                    return Err(());
                }
                Ok(v)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => {
                let start = self.at;
                while self.at < self.s.len() && (self.s[self.at].is_ascii_alphanumeric() || self.s[self.at] == b'_') {
                    self.at += 1;
                }
                let name = std::str::from_utf8(&self.s[start..self.at]).unwrap().to_string();
                if self.eat(b'(') {
                    let mut args = vec![self.sum()?];
                    while self.eat(b',') {
                        args.push(self.sum()?);
                    }
                    if !self.eat(b')') {
                        return Err(());
                    }
                    return call(&name, &args);
                }
                if let Some((_, v)) = self.vars.iter().find(|(n, _)| *n == name) {
                    return Ok(Some(*v));
                }
                match name.as_str() {
                    "pi" => Ok(Some(std::f64::consts::PI)),
                    "e" => Ok(Some(std::f64::consts::E)),
                    _ => Err(()),
                }
            }
            _ => Err(()),
        }
    }
}

fn call(name: &str, args: &[Option<f64>]) -> Outcome {
    let unary = |f: fn(f64) -> Option<f64>| -> Outcome {
        if args.len() != 1 {
            return Err(());
        }
        Ok(args[0].and_then(f).and_then(finite))
    };
    match name {
        "sin" => unary(|x| Some(x.sin())),
        "cos" => unary(|x| Some(x.cos())),
        "tan" => unary(|x| Some(x.tan())),
        "exp" => unary(|x| Some(x.exp())),
        "log" => unary(|x| (x > 0.0).then(|| x.ln())),
        "sqrt" => unary(|x| (x >= 0.0).then(|| x.sqrt())),
        "abs" => unary(|x| Some(x.abs())),
        "tanh" => unary(|x| Some(x.tanh())),
        "min" | "max" => {
            if args.len() != 2 {
                return Err(());
            }
            let op = if name == "min" { f64::min } else { f64::max };
            Ok(lift2(args[0], args[1], |x, y| Some(op(x, y))))
        }
        _ => Err(()),
    }
}
