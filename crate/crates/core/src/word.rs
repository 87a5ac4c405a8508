//! Normal forms in a free product `Z/n * Z/m` of two finite cyclic groups.
//!
//! An element is a reduced alternating word: consecutive letters come from
//! different factors and no letter is the identity. Multiplication is
//! concatenation followed by free reduction.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Factor {
    H,
    K,
}

impl Factor {
    pub fn other(self) -> Factor {
        match self {
            Factor::H => Factor::K,
            Factor::K => Factor::H,
        }
    }

    fn lower(self) -> char {
        match self {
            Factor::H => 'h',
            Factor::K => 'k',
        }
    }
}

impl fmt::Display for Factor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Factor::H => f.write_str("H"),
            Factor::K => f.write_str("K"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Letter {
    pub factor: Factor,
    pub power: u32,
}

/// A reduced alternating word. Equality of words is equality of elements.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Word(Vec<Letter>);

impl Word {
    pub fn identity() -> Word {
        Word(Vec::new())
    }

    pub fn letters(&self) -> &[Letter] {
        &self.0
    }

    /// Number of syllables.
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_identity(&self) -> bool {
        self.0.is_empty()
    }

    pub fn first_factor(&self) -> Option<Factor> {
        self.0.first().map(|l| l.factor)
    }

    pub fn last_factor(&self) -> Option<Factor> {
        self.0.last().map(|l| l.factor)
    }

    /// Drops a trailing letter from `factor`, giving the canonical coset
    /// representative of `self · factor`.
    pub fn strip_trailing(&self, factor: Factor) -> Word {
        let mut out = self.0.clone();
        if out.last().is_some_and(|l| l.factor == factor) {
            out.pop();
        }
        Word(out)
    }

    pub fn prefix(&self, len: usize) -> Word {
        Word(self.0[..len].to_vec())
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("e");
        }
        for (i, l) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(".")?;
            }
            write!(f, "{}{}", l.factor.lower(), l.power)?;
        }
        Ok(())
    }
}

impl FromStr for Word {
    type Err = Error;

    /// Parses the unreduced form `h1.k2.h1`; reduction happens in
    /// [`FreeProduct::parse`].
    fn from_str(s: &str) -> Result<Word> {
        let s = s.trim();
        if s == "e" || s.is_empty() {
            return Ok(Word::identity());
        }
        let mut letters = Vec::new();
        for part in s.split('.') {
            let mut chars = part.chars();
            let factor = match chars.next() {
                Some('h') | Some('H') => Factor::H,
                Some('k') | Some('K') => Factor::K,
                _ => return Err(Error::Group(format!("bad letter {part:?} in {s:?}"))),
            };
            let rest = chars.as_str();
            let power = if rest.is_empty() {
                1
            } else {
                rest.parse::<u32>()
                    .map_err(|_| Error::Group(format!("bad power in {part:?}")))?
            };
            letters.push(Letter { factor, power });
        }
        Ok(Word(letters))
    }
}

/// The group `Z/h_order * Z/k_order`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FreeProduct {
    pub h_order: u32,
    pub k_order: u32,
}

impl FreeProduct {
    pub fn new(h_order: u32, k_order: u32) -> Result<Self> {
        if h_order < 2 || k_order < 2 {
            return Err(Error::Group(format!(
                "free product factors must be nontrivial, got orders {h_order} and {k_order}"
            )));
        }
        Ok(FreeProduct { h_order, k_order })
    }

    pub fn order(&self, factor: Factor) -> u32 {
        match factor {
            Factor::H => self.h_order,
            Factor::K => self.k_order,
        }
    }

    pub fn letter(&self, factor: Factor, power: u32) -> Word {
        let p = power % self.order(factor);
        if p == 0 {
            Word::identity()
        } else {
            Word(vec![Letter { factor, power: p }])
        }
    }

    /// Every nontrivial element of both factors, `h1..` then `k1..`.
    pub fn factor_letters(&self) -> Vec<Word> {
        let mut out = Vec::new();
        for factor in [Factor::H, Factor::K] {
            for p in 1..self.order(factor) {
                out.push(self.letter(factor, p));
            }
        }
        out
    }

    fn push(&self, out: &mut Vec<Letter>, l: Letter) {
        let order = self.order(l.factor);
        let p = l.power % order;
        if p == 0 {
            return;
        }
        match out.last_mut() {
            Some(top) if top.factor == l.factor => {
                let merged = (top.power + p) % order;
                if merged == 0 {
                    out.pop();
                } else {
                    top.power = merged;
                }
            }
            _ => out.push(Letter { factor: l.factor, power: p }),
        }
    }

    pub fn mul(&self, a: &Word, b: &Word) -> Word {
        let mut out = a.0.clone();
        for &l in &b.0 {
            self.push(&mut out, l);
        }
        Word(out)
    }

    pub fn inverse(&self, a: &Word) -> Word {
        Word(
            a.0.iter()
                .rev()
                .map(|l| Letter {
                    factor: l.factor,
                    power: self.order(l.factor) - l.power,
                })
                .collect(),
        )
    }

    pub fn pow(&self, a: &Word, n: u32) -> Word {
        let mut out = Word::identity();
        for _ in 0..n {
            out = self.mul(&out, a);
        }
        out
    }

    /// Parses and reduces a word, rejecting letters outside the factor orders.
    pub fn parse(&self, s: &str) -> Result<Word> {
        let raw: Word = s.parse()?;
        let mut out = Vec::new();
        for l in raw.0 {
            self.push(&mut out, l);
        }
        Ok(Word(out))
    }

    pub fn is_reduced(&self, w: &Word) -> bool {
        w.0.iter().all(|l| l.power > 0 && l.power < self.order(l.factor))
            && w.0.windows(2).all(|p| p[0].factor != p[1].factor)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g() -> FreeProduct {
        FreeProduct::new(2, 3).unwrap()
    }

    #[test]
    fn reduction_merges_and_cancels() {
        let g = g();
        let w = g.parse("h1.h1.k1.k2.k1").unwrap();
        assert_eq!(w.to_string(), "k1");
        let w = g.parse("h1.k1.k1").unwrap();
        assert_eq!(w.to_string(), "h1.k2");
        assert!(g.is_reduced(&w));
    }

    #[test]
    fn inverse_cancels() {
        let g = g();
        let w = g.parse("h1.k1.h1.k2").unwrap();
        assert!(g.mul(&w, &g.inverse(&w)).is_identity());
        assert!(g.mul(&g.inverse(&w), &w).is_identity());
    }

    #[test]
    fn trivial_factors_rejected() {
        assert!(FreeProduct::new(1, 1).is_err());
        assert!(FreeProduct::new(2, 1).is_err());
    }

    #[test]
    fn strip_trailing_gives_coset_rep() {
        let g = g();
        let w = g.parse("k1.h1").unwrap();
        assert_eq!(w.strip_trailing(Factor::H).to_string(), "k1");
        assert_eq!(w.strip_trailing(Factor::K).to_string(), "k1.h1");
    }
}
