use std::collections::{BTreeSet, HashMap};
use std::fmt;

use thiserror::Error;

use super::{validate, Cond, Expectation, Expected, Expr, Litmus, LockOp, Outcome, Program, Stmt, Thread};
use crate::consistency::ModelId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Pos {
    pub line: usize,
    pub col: usize,
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}, column {}", self.line, self.col)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{}{message}", pos.map(|p| format!("{p}: ")).unwrap_or_default())]
pub struct ParseError {
    pub pos: Option<Pos>,
    pub message: String,
}

fn err<T>(pos: Pos, message: impl Into<String>) -> Result<T, ParseError> {
    Err(ParseError { pos: Some(pos), message: message.into() })
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Int(i64),
    Sym(&'static str),
    /// Newline or `;`.
    End,
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "`{s}`"),
            Tok::Int(i) => write!(f, "`{i}`"),
            Tok::Sym(s) => write!(f, "`{s}`"),
            Tok::End => f.write_str("end of statement"),
            Tok::Eof => f.write_str("end of input"),
        }
    }
}

const SYMBOLS: [&str; 11] = ["==", "!=", "{", "}", "(", ")", "=", "+", "-", ",", ":"];

fn is_ident_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || matches!(c, '_' | '.' | '[' | ']')
}

fn lex(text: &str) -> Result<Vec<(Tok, Pos)>, ParseError> {
    let mut toks = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("");
        let chars: Vec<char> = line.chars().collect();
        let mut i = 0;
        while i < chars.len() {
            let c = chars[i];
            let pos = Pos { line: ln + 1, col: i + 1 };
            if c.is_whitespace() {
                i += 1;
            } else if c == ';' {
                toks.push((Tok::End, pos));
                i += 1;
            } else if c.is_ascii_digit() {
                let start = i;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
                let s: String = chars[start..i].iter().collect();
                let v = s.parse().map_err(|_| ParseError { pos: Some(pos), message: format!("integer `{s}` out of range") })?;
                toks.push((Tok::Int(v), pos));
            } else if c.is_ascii_alphabetic() || c == '_' {
                let start = i;
                while i < chars.len() && is_ident_char(chars[i]) {
                    i += 1;
                }
                toks.push((Tok::Ident(chars[start..i].iter().collect()), pos));
            } else {
                let rest: String = chars[i..chars.len().min(i + 2)].iter().collect();
                match SYMBOLS.iter().find(|s| rest.starts_with(**s)) {
                    Some(s) => {
                        toks.push((Tok::Sym(s), pos));
                        i += s.len();
                    }
                    None => return err(pos, format!("unexpected character `{c}`")),
                }
            }
        }
        toks.push((Tok::End, Pos { line: ln + 1, col: chars.len() + 1 }));
    }
    let end = Pos { line: text.lines().count() + 1, col: 1 };
    toks.push((Tok::Eof, end));
    Ok(toks)
}

const RESERVED: [&str; 17] = [
    "litmus", "locations", "thread", "tx", "expect", "let", "assume", "cas", "faa", "even", "odd", "lock_r", "unlock_r",
    "lock_w", "unlock_w", "promote", "while",
];

struct RawExpect {
    model: ModelId,
    verdict: Expected,
    items: Vec<(Option<String>, String, i64, Pos)>,
}

struct Parser {
    toks: Vec<(Tok, Pos)>,
    i: usize,
    locations: BTreeSet<String>,
    positions: HashMap<(usize, Vec<usize>), Pos>,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.i].0
    }

    fn pos(&self) -> Pos {
        self.toks[self.i].1
    }

    fn next(&mut self) -> (Tok, Pos) {
        let t = self.toks[self.i].clone();
        if self.i + 1 < self.toks.len() {
            self.i += 1;
        }
        t
    }

    fn skip_ends(&mut self) {
        while *self.peek() == Tok::End {
            self.next();
        }
    }

    fn at_sym(&self, s: &str) -> bool {
        matches!(self.peek(), Tok::Sym(x) if *x == s)
    }

    fn at_kw(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(x) if x == kw)
    }

    fn expect_sym(&mut self, s: &str) -> Result<(), ParseError> {
        let (t, p) = self.next();
        match t {
            Tok::Sym(x) if x == s => Ok(()),
            other => err(p, format!("expected `{s}`, found {other}")),
        }
    }

    fn ident(&mut self, what: &str) -> Result<(String, Pos), ParseError> {
        let (t, p) = self.next();
        match t {
            Tok::Ident(s) if RESERVED.contains(&s.as_str()) => err(p, format!("expected {what}, found keyword `{s}`")),
            Tok::Ident(s) => Ok((s, p)),
            other => err(p, format!("expected {what}, found {other}")),
        }
    }

    fn end_of_stmt(&mut self) -> Result<(), ParseError> {
        match self.peek() {
            Tok::End => {
                self.next();
                Ok(())
            }
            Tok::Eof => Ok(()),
            Tok::Sym("}") => Ok(()),
            other => err(self.pos(), format!("expected end of statement, found {other}")),
        }
    }

    fn int(&mut self) -> Result<i64, ParseError> {
        let neg = self.at_sym("-");
        if neg {
            self.next();
        }
        let (t, p) = self.next();
        match t {
            Tok::Int(v) => Ok(if neg { -v } else { v }),
            other => err(p, format!("expected integer, found {other}")),
        }
    }

    fn register(&mut self) -> Result<String, ParseError> {
        let (r, p) = self.ident("register")?;
        if self.locations.contains(&r) {
            return err(p, format!("`{r}` is a location; expressions may only use registers"));
        }
        Ok(r)
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        if self.at_sym("(") {
            self.next();
            let e = self.expr()?;
            self.expect_sym(")")?;
            return Ok(e);
        }
        if matches!(self.peek(), Tok::Int(_)) || self.at_sym("-") {
            return Ok(Expr::Const(self.int()?));
        }
        let r = self.register()?;
        let sign = if self.at_sym("+") {
            1
        } else if self.at_sym("-") {
            -1
        } else {
            return Ok(Expr::Reg(r));
        };
        self.next();
        let (t, p) = self.next();
        match t {
            Tok::Int(c) => Ok(Expr::Add(r, sign * c)),
            other => err(p, format!("expected integer after `+`/`-`, found {other}")),
        }
    }

    fn location(&mut self) -> Result<String, ParseError> {
        let (l, p) = self.ident("location")?;
        if !self.locations.contains(&l) {
            return err(p, format!("`{l}` is not a declared location (add it to a `locations` line)"));
        }
        Ok(l)
    }

    fn update(&mut self, reg: Option<String>) -> Result<Stmt, ParseError> {
        let (kw, _) = self.next();
        let loc = self.location()?;
        if kw == Tok::Ident("cas".into()) {
            let expected = self.expr()?;
            let new = self.expr()?;
            Ok(Stmt::Cas { reg, loc, expected, new })
        } else {
            let delta = self.int()?;
            Ok(Stmt::Faa { reg, loc, delta })
        }
    }

    /// Parses statements until `}` (inside a transaction) or a top-level
    /// keyword.
    fn block(&mut self, thread: usize, prefix: &[usize], in_tx: bool) -> Result<Vec<Stmt>, ParseError> {
        let mut body = Vec::new();
        loop {
            self.skip_ends();
            let pos = self.pos();
            match self.peek().clone() {
                Tok::Sym("}") if in_tx => return Ok(body),
                Tok::Eof if in_tx => return err(pos, "unterminated transaction: missing `}`"),
                Tok::Eof => return Ok(body),
                Tok::Ident(k) if !in_tx && matches!(k.as_str(), "thread" | "expect" | "locations" | "litmus") => return Ok(body),
                _ => {}
            }
            let mut path = prefix.to_vec();
            path.push(body.len());
            self.positions.insert((thread, path.clone()), pos);
            let s = self.stmt(thread, &path)?;
            body.push(s);
            self.end_of_stmt()?;
        }
    }

    fn stmt(&mut self, thread: usize, path: &[usize]) -> Result<Stmt, ParseError> {
        let pos = self.pos();
        let (t, _) = self.next();
        let word = match t {
            Tok::Ident(w) => w,
            other => return err(pos, format!("expected a statement, found {other}")),
        };
        if let Some(op) = LockOp::ALL.into_iter().find(|o| o.keyword() == word) {
            let (lock, _) = self.ident("lock name")?;
            return Ok(Stmt::Lock { op, lock });
        }
        match word.as_str() {
            "tx" => {
                self.expect_sym("{")?;
                let body = self.block(thread, path, true)?;
                self.expect_sym("}")?;
                Ok(Stmt::Tx(body))
            }
            "while" | "for" => err(pos, "loops are not supported; litmus programs must be straight-line"),
            "if" => err(pos, "conditionals are not supported; litmus programs must be straight-line"),
            "abort" => err(pos, "explicit aborts are not supported"),
            "let" => {
                let reg = self.register()?;
                self.expect_sym("=")?;
                Ok(Stmt::Let { reg, expr: self.expr()? })
            }
            "assume" => {
                let c = if self.at_kw("even") || self.at_kw("odd") {
                    let (k, _) = self.next();
                    let e = self.expr()?;
                    if k == Tok::Ident("even".into()) {
                        Cond::Even(e)
                    } else {
                        Cond::Odd(e)
                    }
                } else {
                    let a = self.expr()?;
                    let (op, p) = self.next();
                    let b = self.expr()?;
                    match op {
                        Tok::Sym("==") => Cond::Eq(a, b),
                        Tok::Sym("!=") => Cond::Ne(a, b),
                        other => return err(p, format!("expected `==` or `!=`, found {other}")),
                    }
                };
                Ok(Stmt::Assume(c))
            }
            "cas" | "faa" => {
                self.i -= 1;
                self.update(None)
            }
            _ if RESERVED.contains(&word.as_str()) => err(pos, format!("unexpected keyword `{word}`")),
            lhs => {
                self.expect_sym("=")?;
                if self.locations.contains(lhs) {
                    return Ok(Stmt::Write { loc: lhs.to_string(), expr: self.expr()? });
                }
                if self.at_kw("cas") || self.at_kw("faa") {
                    return self.update(Some(lhs.to_string()));
                }
                let rpos = self.pos();
                match self.peek().clone() {
                    Tok::Ident(r) if self.locations.contains(&r) => {
                        self.next();
                        Ok(Stmt::Read { reg: lhs.to_string(), loc: r })
                    }
                    Tok::Ident(r) => err(
                        rpos,
                        format!("`{r}` is not a declared location; use `let {lhs} = ...` for register assignment or declare `{lhs}` as a location"),
                    ),
                    _ => err(pos, format!("`{lhs}` is not a declared location; use `let {lhs} = ...` for register assignment")),
                }
            }
        }
    }

    fn expectation(&mut self) -> Result<RawExpect, ParseError> {
        self.next();
        let (mut m, mp) = self.ident("model name")?;
        while self.at_sym("-") {
            self.next();
            m.push('-');
            m.push_str(&self.ident("model name")?.0);
        }
        let model: ModelId = m.parse().map_err(|e: String| ParseError { pos: Some(mp), message: e })?;
        let (v, vp) = self.ident("`allowed` or `forbidden`")?;
        let verdict = match v.as_str() {
            "allowed" => Expected::Allowed,
            "forbidden" => Expected::Forbidden,
            _ => return err(vp, format!("expected `allowed` or `forbidden`, found `{v}`")),
        };
        self.expect_sym(":")?;
        let mut items = Vec::new();
        loop {
            let (a, ap) = self.ident("register")?;
            let (thread, reg) = if self.at_sym(":") {
                self.next();
                (Some(a), self.ident("register")?.0)
            } else {
                (None, a)
            };
            self.expect_sym("=")?;
            items.push((thread, reg, self.int()?, ap));
            if !self.at_sym(",") {
                break;
            }
            self.next();
        }
        self.end_of_stmt()?;
        Ok(RawExpect { model, verdict, items })
    }
}

/// Parses a litmus file into a validated program and its expectations.
pub fn parse_litmus(text: &str) -> Result<Litmus, ParseError> {
    let toks = lex(text)?;
    let mut locations = BTreeSet::new();
    for i in 0..toks.len() {
        let at_start = i == 0 || toks[i - 1].0 == Tok::End;
        if at_start && toks[i].0 == Tok::Ident("locations".into()) {
            for (t, _) in &toks[i + 1..] {
                match t {
                    Tok::Ident(l) => locations.insert(l.clone()),
                    _ => break,
                };
            }
        }
    }
    let mut p = Parser { toks, i: 0, locations, positions: HashMap::new() };
    p.skip_ends();
    if !p.at_kw("litmus") {
        let pos = p.pos();
        return err(pos, "expected `litmus <name>` header");
    }
    p.next();
    let (name, _) = p.ident("test name")?;
    p.end_of_stmt()?;
    let mut program = Program::new(name);
    program.locations = p.locations.clone();
    let mut raw = Vec::new();
    loop {
        p.skip_ends();
        let pos = p.pos();
        match p.peek().clone() {
            Tok::Eof => break,
            Tok::Ident(k) if k == "locations" => {
                p.next();
                while let Tok::Ident(_) = p.peek() {
                    let (l, lp) = p.next();
                    if let Tok::Ident(l) = l {
                        if RESERVED.contains(&l.as_str()) {
                            return err(lp, format!("keyword `{l}` cannot be a location"));
                        }
                    }
                }
                p.end_of_stmt()?;
            }
            Tok::Ident(k) if k == "thread" => {
                p.next();
                let (tname, _) = p.ident("thread name")?;
                p.end_of_stmt()?;
                let t = program.threads.len();
                let body = p.block(t, &[], false)?;
                program.threads.push(Thread { name: tname, body });
            }
            Tok::Ident(k) if k == "expect" => raw.push(p.expectation()?),
            Tok::Ident(k) if k == "litmus" => return err(pos, "duplicate `litmus` header"),
            _ => return err(pos, "statement outside of a thread (start one with `thread <name>`)"),
        }
    }
    if let Some(d) = validate(&program).into_iter().next() {
        let pos = p.positions.get(&(d.thread, d.path.clone())).copied();
        return Err(ParseError { pos, message: d.message });
    }
    let mut expectations = Vec::new();
    for r in raw {
        let mut outcome = Outcome::new();
        for (thread, reg, v, ap) in r.items {
            let owners: Vec<usize> = (0..program.threads.len())
                .filter(|&t| thread.as_ref().is_none_or(|n| *n == program.threads[t].name))
                .filter(|&t| program.registers(t).contains(&reg))
                .collect();
            let key = match owners.as_slice() {
                [t] => format!("{}:{}", program.threads[*t].name, reg),
                [] => return err(ap, format!("expectation mentions unknown register `{reg}`")),
                _ => return err(ap, format!("register `{reg}` is ambiguous; qualify it as `thread:{reg}`")),
            };
            if outcome.insert(key, v).is_some() {
                return err(ap, format!("register `{reg}` constrained twice"));
            }
        }
        expectations.push(Expectation { model: r.model, verdict: r.verdict, outcome });
    }
    Ok(Litmus { program, expectations })
}

/// Parses a program, ignoring any expectations.
pub fn parse_program(text: &str) -> Result<Program, ParseError> {
    parse_litmus(text).map(|l| l.program)
}
