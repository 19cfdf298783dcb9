use std::collections::HashMap;
use std::fmt;

use crate::error::{Error, Result};

/// Index of a symbol within an [`Alphabet`].
pub type Symbol = usize;

/// An ordered symbol set with one designated end-of-sequence symbol.
///
/// Symbols are kept in the order given; the EOS symbol is part of the list
/// (the augmented alphabet), and strings never contain it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Alphabet {
    symbols: Vec<String>,
    eos: Symbol,
    lookup: HashMap<String, Symbol>,
}

impl Alphabet {
    /// Build from the full symbol list (EOS included) and the EOS index.
    pub fn new(symbols: Vec<String>, eos: Symbol) -> Result<Self> {
        if symbols.is_empty() {
            return Err(Error::Input("alphabet is empty".into()));
        }
        if eos >= symbols.len() {
            return Err(Error::Input(format!("eos index {eos} out of range for {} symbols", symbols.len())));
        }
        let mut lookup = HashMap::with_capacity(symbols.len());
        for (i, s) in symbols.iter().enumerate() {
            if s.is_empty() || s.chars().any(char::is_whitespace) {
                return Err(Error::Input(format!("symbol {s:?} is empty or has whitespace")));
            }
            if lookup.insert(s.clone(), i).is_some() {
                return Err(Error::Input(format!("duplicate symbol `{s}`")));
            }
        }
        Ok(Alphabet { symbols, eos, lookup })
    }

    /// Convenience: string symbols followed by an EOS symbol named `eos`.
    pub fn with_eos<S: AsRef<str>>(symbols: &[S], eos: &str) -> Result<Self> {
        let mut all: Vec<String> = symbols.iter().map(|s| s.as_ref().to_string()).collect();
        all.push(eos.to_string());
        let idx = all.len() - 1;
        Alphabet::new(all, idx)
    }

    /// Size of the augmented alphabet (EOS included).
    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn eos(&self) -> Symbol {
        self.eos
    }

    /// Number of non-EOS symbols.
    pub fn string_symbols(&self) -> usize {
        self.symbols.len() - 1
    }

    pub fn name(&self, s: Symbol) -> &str {
        &self.symbols[s]
    }

    pub fn symbols(&self) -> &[String] {
        &self.symbols
    }

    pub fn index(&self, name: &str) -> Result<Symbol> {
        self.lookup.get(name).copied().ok_or_else(|| Error::UnknownSymbol(name.to_string()))
    }

    fn single_char(&self) -> bool {
        self.symbols.iter().enumerate().all(|(i, s)| i == self.eos || s.chars().count() == 1)
    }

    /// Parse a string. With single-character symbols, every character is a
    /// symbol (`"aab"`); otherwise symbols are whitespace separated.
    /// The EOS symbol may not appear.
    pub fn parse(&self, text: &str) -> Result<Vec<Symbol>> {
        let tokens: Vec<String> = if self.single_char() {
            text.chars().filter(|c| !c.is_whitespace()).map(|c| c.to_string()).collect()
        } else {
            text.split_whitespace().map(str::to_string).collect()
        };
        tokens
            .iter()
            .map(|t| {
                let s = self.index(t)?;
                if s == self.eos {
                    Err(Error::Input(format!("EOS symbol `{t}` inside a string")))
                } else {
                    Ok(s)
                }
            })
            .collect()
    }

    /// Inverse of [`Alphabet::parse`].
    pub fn render(&self, string: &[Symbol]) -> String {
        let sep = if self.single_char() { "" } else { " " };
        string.iter().map(|&s| self.symbols[s].as_str()).collect::<Vec<_>>().join(sep)
    }
}

impl fmt::Display for Alphabet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{{}}}", self.symbols.join(", "))
    }
}
