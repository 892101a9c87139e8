use std::fmt;
use std::sync::Arc;

/// Opaque named parameter, bound to a number only at evaluation time.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Symbol(Arc<str>);

impl Symbol {
    pub fn new(name: &str) -> Self {
        Symbol(Arc::from(name))
    }

    pub fn name(&self) -> &str {
        &self.0
    }
}

impl fmt::Debug for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for Symbol {
    fn from(s: &str) -> Self {
        Symbol::new(s)
    }
}

/// Product of symbols with positive integer powers, kept sorted by symbol.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Monomial(Vec<(Symbol, u32)>);

impl Monomial {
    pub fn one() -> Self {
        Monomial(Vec::new())
    }

    pub fn symbol(s: impl Into<Symbol>) -> Self {
        Monomial(vec![(s.into(), 1)])
    }

    pub fn is_one(&self) -> bool {
        self.0.is_empty()
    }

    pub fn powers(&self) -> impl Iterator<Item = (&Symbol, u32)> {
        self.0.iter().map(|(s, p)| (s, *p))
    }

    pub fn degree_in(&self, pred: impl Fn(&Symbol) -> bool) -> u32 {
        self.0.iter().filter(|(s, _)| pred(s)).map(|(_, p)| *p).sum()
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        let mut out: Vec<(Symbol, u32)> = Vec::with_capacity(self.0.len() + other.0.len());
        let (mut i, mut j) = (0, 0);
        while i < self.0.len() && j < other.0.len() {
            match self.0[i].0.cmp(&other.0[j].0) {
                std::cmp::Ordering::Less => {
                    out.push(self.0[i].clone());
                    i += 1;
                }
                std::cmp::Ordering::Greater => {
                    out.push(other.0[j].clone());
                    j += 1;
                }
                std::cmp::Ordering::Equal => {
                    out.push((self.0[i].0.clone(), self.0[i].1 + other.0[j].1));
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&self.0[i..]);
        out.extend_from_slice(&other.0[j..]);
        Monomial(out)
    }
}

impl fmt::Debug for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (n, (s, p)) in self.0.iter().enumerate() {
            if n > 0 {
                f.write_str("*")?;
            }
            if *p == 1 {
                write!(f, "{s}")?;
            } else {
                write!(f, "{s}^{p}")?;
            }
        }
        Ok(())
    }
}

/// Integer linear combination of frequency symbols, e.g. `wc - w31`.
///
/// Used both for oscillating phases `exp(i*w*t)` and for frame shifts.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Frequency(Vec<(Symbol, i64)>);

impl Frequency {
    pub fn zero() -> Self {
        Frequency(Vec::new())
    }

    pub fn of(s: impl Into<Symbol>) -> Self {
        Frequency(vec![(s.into(), 1)])
    }

    pub fn from_terms<I, S>(terms: I) -> Self
    where
        I: IntoIterator<Item = (S, i64)>,
        S: Into<Symbol>,
    {
        let mut acc = Frequency::zero();
        for (s, c) in terms {
            if c != 0 {
                acc = acc.add(&Frequency(vec![(s.into(), c)]));
            }
        }
        acc
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Symbol, i64)> {
        self.0.iter().map(|(s, c)| (s, *c))
    }

    pub fn scale(&self, k: i64) -> Frequency {
        if k == 0 {
            return Frequency::zero();
        }
        Frequency(self.0.iter().map(|(s, c)| (s.clone(), c * k)).collect())
    }

    pub fn neg(&self) -> Frequency {
        self.scale(-1)
    }

    pub fn add(&self, other: &Frequency) -> Frequency {
        let mut out: Vec<(Symbol, i64)> = Vec::with_capacity(self.0.len() + other.0.len());
        let (mut i, mut j) = (0, 0);
        while i < self.0.len() || j < other.0.len() {
            let take_left = j >= other.0.len()
                || (i < self.0.len() && self.0[i].0 < other.0[j].0);
            let take_right =
                i >= self.0.len() || (j < other.0.len() && other.0[j].0 < self.0[i].0);
            if take_left {
                out.push(self.0[i].clone());
                i += 1;
            } else if take_right {
                out.push(other.0[j].clone());
                j += 1;
            } else {
                let c = self.0[i].1 + other.0[j].1;
                if c != 0 {
                    out.push((self.0[i].0.clone(), c));
                }
                i += 1;
                j += 1;
            }
        }
        Frequency(out)
    }

    pub fn sub(&self, other: &Frequency) -> Frequency {
        self.add(&other.neg())
    }

    /// Exact integer division; `None` unless every weight is divisible by `k`.
    pub fn div_exact(&self, k: i64) -> Option<Frequency> {
        if k == 0 {
            return None;
        }
        let mut out = Vec::with_capacity(self.0.len());
        for (s, c) in &self.0 {
            if c % k != 0 {
                return None;
            }
            out.push((s.clone(), c / k));
        }
        Some(Frequency(out))
    }
}

impl fmt::Debug for Frequency {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for Frequency {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("0");
        }
        // Positive terms first, so `wc - w31` reads as written.
        let ordered = self.0.iter().filter(|(_, c)| *c > 0).chain(self.0.iter().filter(|(_, c)| *c < 0));
        for (n, (s, c)) in ordered.enumerate() {
            let sign = if *c < 0 { "-" } else if n > 0 { "+" } else { "" };
            let mag = c.unsigned_abs();
            if mag == 1 {
                write!(f, "{sign}{s}")?;
            } else {
                write!(f, "{sign}{mag}*{s}")?;
            }
        }
        Ok(())
    }
}
