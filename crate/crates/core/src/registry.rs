//! Name-keyed registries of interchangeable strategies.
//!
//! Velocity laws, weight schemes, entropies and time steppers are selected
//! at runtime from a short textual spec of the form `name` or `name:args`,
//! e.g. `greenshields`, `power:2`, `uniform:10`, `kruzkov:1.5`, `rk4`.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use crate::error::{FtlError, Result};

type Factory<T> = Arc<dyn Fn(Option<&str>) -> Result<T> + Send + Sync>;

/// Maps strategy names to factories. The optional argument is whatever
/// follows the first `:` in the name.
pub struct Registry<T> {
    kind: &'static str,
    factories: BTreeMap<String, Factory<T>>,
}

impl<T> Registry<T> {
    pub fn new(kind: &'static str) -> Self {
        Self {
            kind,
            factories: BTreeMap::new(),
        }
    }

    /// Register a factory under `name`. A later registration with the same
    /// name replaces the earlier one.
    pub fn register<F>(&mut self, name: &str, factory: F) -> &mut Self
    where
        F: Fn(Option<&str>) -> Result<T> + Send + Sync + 'static,
    {
        self.factories.insert(name.to_string(), Arc::new(factory));
        self
    }

    pub fn contains(&self, name: &str) -> bool {
        self.factories.contains_key(name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.factories.keys().map(String::as_str)
    }

    /// Build the strategy described by `spec`.
    pub fn resolve(&self, spec: &str) -> Result<T> {
        let spec = spec.trim();
        let (name, arg) = match spec.split_once(':') {
            Some((name, arg)) => (name.trim(), Some(arg.trim())),
            None => (spec, None),
        };
        match self.factories.get(name) {
            Some(factory) => factory(arg),
            None => Err(FtlError::UnknownStrategy {
                kind: self.kind,
                name: name.to_string(),
                known: self.names().collect::<Vec<_>>().join(", "),
            }),
        }
    }
}

impl<T> fmt::Debug for Registry<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Registry")
            .field("kind", &self.kind)
            .field("names", &self.factories.keys().collect::<Vec<_>>())
            .finish()
    }
}

/// Parse a required numeric factory argument.
pub(crate) fn required_f64(kind: &str, arg: Option<&str>) -> Result<f64> {
    let arg = arg.ok_or_else(|| FtlError::Config(format!("`{kind}` needs a numeric argument")))?;
    arg.parse::<f64>()
        .map_err(|_| FtlError::Config(format!("`{kind}`: cannot parse `{arg}` as a number")))
}

pub(crate) fn required_usize(kind: &str, arg: Option<&str>) -> Result<usize> {
    let arg = arg.ok_or_else(|| FtlError::Config(format!("`{kind}` needs an integer argument")))?;
    arg.parse::<usize>()
        .map_err(|_| FtlError::Config(format!("`{kind}`: cannot parse `{arg}` as an integer")))
}

pub(crate) fn no_argument(kind: &str, arg: Option<&str>) -> Result<()> {
    match arg {
        None => Ok(()),
        Some(a) => Err(FtlError::Config(format!("`{kind}` takes no argument (got `{a}`)"))),
    }
}
