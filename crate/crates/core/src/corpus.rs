//! Built-in symbols used by the acceptance suite and the command line.

use crate::error::{Error, Result};
use crate::matrix::c64;
use crate::symbol::TrigSymbol;

fn c(re: f64) -> c64 {
    c64::new(re, 0.0)
}

#[derive(Clone, Debug)]
pub struct CorpusEntry {
    pub id: &'static str,
    pub symbol: TrigSymbol,
}

pub const BUILTIN_NAMES: [&str; 10] = ["one", "z", "z^-1", "z^2", "z^-2", "2+z", "z^-2(3+z)", "diag(z,3+z)", "2.1+z", "1+z"];

/// Symbol for a built-in name; `1+z` vanishes on the circle and exists to
/// exercise the invertibility check.
pub fn builtin(name: &str) -> Result<TrigSymbol> {
    Ok(match name {
        "one" => TrigSymbol::identity(1),
        "z" => TrigSymbol::monomial(1),
        "z^-1" => TrigSymbol::monomial(-1),
        "z^2" => TrigSymbol::monomial(2),
        "z^-2" => TrigSymbol::monomial(-2),
        "2+z" => TrigSymbol::scalar(&[(0, c(2.0)), (1, c(1.0))])?,
        "2.1+z" => TrigSymbol::scalar(&[(0, c(2.1)), (1, c(1.0))])?,
        "z^-2(3+z)" => TrigSymbol::scalar(&[(-2, c(3.0)), (-1, c(1.0))])?,
        "diag(z,3+z)" => TrigSymbol::block_diag(&[TrigSymbol::monomial(1), TrigSymbol::scalar(&[(0, c(3.0)), (1, c(1.0))])?])?,
        "1+z" => TrigSymbol::scalar(&[(0, c(1.0)), (1, c(1.0))])?,
        other => return Err(Error::InvalidSymbol(format!("unknown built-in symbol {other:?}"))),
    })
}

/// The acceptance corpus, with `2+z` and `2.1+z` forming the homotopy pair.
pub fn corpus() -> Vec<CorpusEntry> {
    BUILTIN_NAMES[..9].iter().map(|&id| CorpusEntry { id, symbol: builtin(id).expect("built-in") }).collect()
}

/// The margin-certified homotopy pair of the corpus.
pub fn homotopy_pair() -> (TrigSymbol, TrigSymbol) {
    (builtin("2+z").expect("built-in"), builtin("2.1+z").expect("built-in"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn corpus_is_invertible_and_pair_is_certified() {
        for e in corpus() {
            e.symbol.ensure_invertible().unwrap();
        }
        assert!(builtin("1+z").unwrap().ensure_invertible().is_err());
        let (a, b) = homotopy_pair();
        for t in [0.0, 0.5, 1.0] {
            TrigSymbol::homotopy_interpolate(&a, &b, t).unwrap();
        }
        assert!(builtin("nope").is_err());
    }
}
