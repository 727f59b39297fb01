//! Compact architecture strings such as
//! `{[1,3]}:{-1,1}; {4}:{0}; {[5,14]}:{-3,3}`.
//!
//! Each group lists 1-based layers followed by their context: `{0}` when
//! both sides are empty, otherwise `{-c,d}` with the left offset `c` and the
//! right offset `d`. A run of three or more layers is written `[a,b]`, a
//! pair `a,b`. Two optional suffixes extend the notation: `@n` when the
//! bottleneck differs from the geometry default, and `+skip` for a residual
//! connection.
//!
//! ```text
//! spec   := group (";" group)*
//! group  := "{" item ("," item)* "}" ":" ctx ("@" int)? ("+skip")?
//! item   := int | "[" int "," int "]"
//! ctx    := "{" "0" "}" | "{" ("-")? int "," int "}"
//! ```

use crate::error::{Error, Result};
use crate::tdnnf::{CandidateSpec, Geometry, LayerChoice};

fn format_layers(first: usize, last: usize) -> String {
    match last - first {
        0 => format!("{first}"),
        1 => format!("{first},{last}"),
        _ => format!("[{first},{last}]"),
    }
}

fn format_choice(c: &LayerChoice, g: &Geometry) -> String {
    let mut s = if c.left == 0 && c.right == 0 {
        "{0}".to_string()
    } else if c.left == 0 {
        format!("{{0,{}}}", c.right)
    } else {
        format!("{{-{},{}}}", c.left, c.right)
    };
    if c.dim != g.bottleneck {
        s.push_str(&format!("@{}", c.dim));
    }
    if c.skip {
        s.push_str("+skip");
    }
    s
}

/// Formats `spec`, merging runs of identical consecutive layers.
pub fn format_spec(spec: &CandidateSpec) -> String {
    let mut groups = Vec::new();
    let mut start = 0;
    for l in 1..=spec.layers.len() {
        if l == spec.layers.len() || spec.layers[l] != spec.layers[start] {
            groups.push(format!(
                "{{{}}}:{}",
                format_layers(start + 1, l),
                format_choice(&spec.layers[start], &spec.geometry)
            ));
            start = l;
        }
    }
    groups.join("; ")
}

struct Cursor<'a> {
    s: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn err<T>(&self, msg: impl Into<String>) -> Result<T> {
        Err(Error::Parse {
            pos: self.pos,
            msg: msg.into(),
        })
    }

    fn skip_ws(&mut self) {
        while self.pos < self.s.len() && self.s[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.s.get(self.pos).copied()
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: u8) -> Result<()> {
        if self.eat(c) {
            Ok(())
        } else {
            match self.peek() {
                Some(f) => self.err(format!("expected '{}', found '{}'", c as char, f as char)),
                None => self.err(format!("expected '{}', found end of input", c as char)),
            }
        }
    }

    fn int(&mut self) -> Result<usize> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.s.len() && self.s[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return self.err("expected an integer");
        }
        let text = std::str::from_utf8(&self.s[start..self.pos]).expect("ascii digits");
        text.parse().or_else(|_| {
            self.pos = start;
            self.err("integer out of range")
        })
    }

    fn keyword(&mut self, word: &str) -> bool {
        self.skip_ws();
        if self.s[self.pos..].starts_with(word.as_bytes()) {
            self.pos += word.len();
            true
        } else {
            false
        }
    }
}

/// Parses a string produced by [`format_spec`] (or any string following
/// the same grammar). Every layer from 1 to the largest one mentioned must
/// be given exactly once.
pub fn parse_spec(s: &str, geometry: &Geometry) -> Result<CandidateSpec> {
    let mut cur = Cursor { s: s.as_bytes(), pos: 0 };
    let mut assigned: Vec<Option<LayerChoice>> = Vec::new();
    loop {
        cur.expect(b'{')?;
        let mut layers = Vec::new();
        loop {
            let at = cur.pos;
            let (a, b) = if cur.eat(b'[') {
                let a = cur.int()?;
                cur.expect(b',')?;
                let b = cur.int()?;
                cur.expect(b']')?;
                (a, b)
            } else {
                let a = cur.int()?;
                (a, a)
            };
            if a == 0 || b < a {
                cur.pos = at;
                return cur.err(format!("bad layer range {a}..{b}; layers are numbered from 1"));
            }
            layers.push((at, a, b));
            if !cur.eat(b',') {
                break;
            }
        }
        cur.expect(b'}')?;
        cur.expect(b':')?;
        cur.expect(b'{')?;
        let negative = cur.eat(b'-');
        let first = cur.int()?;
        let (left, right) = if cur.eat(b',') {
            let right = cur.int()?;
            (first, right)
        } else if first == 0 && !negative {
            (0, 0)
        } else {
            return cur.err("a single context value must be 0");
        };
        if !negative && left != 0 {
            return cur.err("left context must be written as a negative offset");
        }
        cur.expect(b'}')?;
        let dim = if cur.eat(b'@') {
            let n = cur.int()?;
            if n == 0 {
                return cur.err("bottleneck must be positive");
            }
            n
        } else {
            geometry.bottleneck
        };
        let skip = cur.keyword("+skip");
        let choice = LayerChoice { left, right, dim, skip };
        for (at, a, b) in layers {
            if assigned.len() < b {
                assigned.resize(b, None);
            }
            for slot in &mut assigned[a - 1..b] {
                if slot.is_some() {
                    cur.pos = at;
                    return cur.err(format!("layer range {a}..{b} overlaps an earlier group"));
                }
                *slot = Some(choice);
            }
        }
        if !cur.eat(b';') {
            break;
        }
    }
    if cur.peek().is_some() {
        return cur.err("unexpected trailing input");
    }
    let layers = assigned
        .into_iter()
        .enumerate()
        .map(|(i, c)| {
            c.ok_or_else(|| Error::Parse {
                pos: s.len(),
                msg: format!("layer {} is not assigned", i + 1),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CandidateSpec {
        geometry: *geometry,
        layers,
    })
}
