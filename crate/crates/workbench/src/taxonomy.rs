//! Ordered, user-extensible list of category names.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::record::check_label;

/// Category auto-assigned to forms that failed to grow.
pub const EMPTY_CATEGORY: &str = "empty";

#[derive(Debug, Error, PartialEq)]
pub enum TaxonomyError {
    #[error("{0}")]
    InvalidName(String),
    #[error("category {0:?} already exists")]
    Duplicate(String),
    #[error("unknown category {0:?}")]
    Unknown(String),
    #[error("category {0:?} is still used by {1} records")]
    InUse(String, usize),
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Taxonomy {
    names: Vec<String>,
}

impl Taxonomy {
    pub fn new(names: Vec<String>) -> Result<Self, TaxonomyError> {
        let mut t = Self::default();
        for n in names {
            t.add(&n)?;
        }
        Ok(t)
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.index_of(name).is_some()
    }

    pub fn add(&mut self, name: &str) -> Result<(), TaxonomyError> {
        check_label(name).map_err(TaxonomyError::InvalidName)?;
        if self.contains(name) {
            return Err(TaxonomyError::Duplicate(name.into()));
        }
        self.names.push(name.into());
        Ok(())
    }

    /// Adds `name` unless present; true if it was new.
    pub fn ensure(&mut self, name: &str) -> Result<bool, TaxonomyError> {
        if self.contains(name) {
            return Ok(false);
        }
        self.add(name)?;
        Ok(true)
    }

    /// `uses` is the number of records currently carrying the name.
    pub fn remove(&mut self, name: &str, uses: usize) -> Result<(), TaxonomyError> {
        let i = self
            .index_of(name)
            .ok_or_else(|| TaxonomyError::Unknown(name.into()))?;
        if uses > 0 {
            return Err(TaxonomyError::InUse(name.into(), uses));
        }
        self.names.remove(i);
        Ok(())
    }

    /// One name per line.
    pub fn to_text(&self) -> String {
        self.names.iter().map(|n| format!("{n}\n")).collect()
    }

    pub fn from_text(text: &str) -> Result<Self, TaxonomyError> {
        Self::new(
            text.lines()
                .filter(|l| !l.is_empty())
                .map(String::from)
                .collect(),
        )
    }
}
