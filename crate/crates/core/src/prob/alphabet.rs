use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A finite symbol set `{0, .., size-1}` with optional display labels.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Alphabet {
    size: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    labels: Option<Vec<String>>,
}

impl Alphabet {
    pub fn new(size: usize) -> Result<Self> {
        if size == 0 {
            return Err(Error::Argument("alphabet size must be at least 1".into()));
        }
        Ok(Self { size, labels: None })
    }

    pub fn with_labels<S: Into<String>>(labels: impl IntoIterator<Item = S>) -> Result<Self> {
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        let mut alphabet = Self::new(labels.len())?;
        alphabet.set_labels(labels)?;
        Ok(alphabet)
    }

    pub fn set_labels(&mut self, labels: Vec<String>) -> Result<()> {
        if labels.len() != self.size {
            return Err(Error::Argument(format!("{} labels for an alphabet of size {}", labels.len(), self.size)));
        }
        let mut sorted: Vec<&String> = labels.iter().collect();
        sorted.sort();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Argument("alphabet labels must be distinct".into()));
        }
        self.labels = Some(labels);
        Ok(())
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    /// Display name of a symbol: its label if present, else its index.
    pub fn label(&self, symbol: usize) -> String {
        match &self.labels {
            Some(l) => l[symbol].clone(),
            None => symbol.to_string(),
        }
    }

    /// Cartesian product of several alphabets, flattened row-major.
    pub fn product(parts: &[Alphabet]) -> Result<Alphabet> {
        let size = parts.iter().map(Alphabet::size).product::<usize>().max(1);
        let mut out = Alphabet::new(size)?;
        if parts.iter().any(|a| a.labels.is_some()) {
            let shape: Vec<usize> = parts.iter().map(Alphabet::size).collect();
            let labels = super::tensor::indices(&shape)
                .map(|idx| idx.iter().zip(parts).map(|(&s, a)| a.label(s)).collect::<Vec<_>>().join(","))
                .collect();
            out.set_labels(labels)?;
        }
        Ok(out)
    }
}
