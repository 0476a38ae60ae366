//! Shipped fundamental equations, optionally overridden by a directory of
//! catalog files named by the `GTD_CATALOG_DIR` environment variable.

use std::path::Path;

use crate::error::{Error, Result};
use crate::expr::{load_system, SystemDefinition};

pub const CATALOG_DIR_ENV: &str = "GTD_CATALOG_DIR";

const BUILTIN: &[(&str, &str)] = &[
    ("ideal_gas", include_str!("../catalog/ideal_gas.toml")),
    ("ideal_gas_energy", include_str!("../catalog/ideal_gas_energy.toml")),
    ("multicomponent_ideal_gas", include_str!("../catalog/multicomponent_ideal_gas.toml")),
    (
        "multicomponent_ideal_gas_energy",
        include_str!("../catalog/multicomponent_ideal_gas_energy.toml"),
    ),
    ("rn_black_hole", include_str!("../catalog/rn_black_hole.toml")),
    ("van_der_waals", include_str!("../catalog/van_der_waals.toml")),
];

#[derive(Debug, Clone)]
pub struct Catalog {
    systems: Vec<SystemDefinition>,
}

impl Catalog {
    pub fn builtin() -> Catalog {
        let systems = BUILTIN
            .iter()
            .map(|(name, text)| {
                load_system(text.as_bytes())
                    .unwrap_or_else(|e| panic!("shipped catalog entry `{name}` is invalid: {e}"))
            })
            .collect();
        Catalog { systems }
    }

    /// Every `*.toml` file in `dir`, sorted by file name.
    pub fn from_dir(dir: &Path) -> Result<Catalog> {
        let entries = std::fs::read_dir(dir)
            .map_err(|e| Error::Catalog(format!("cannot read {}: {e}", dir.display())))?;
        let mut paths: Vec<_> = entries
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|ext| ext == "toml"))
            .collect();
        paths.sort();
        let mut systems: Vec<SystemDefinition> = Vec::with_capacity(paths.len());
        for path in paths {
            let bytes = std::fs::read(&path)
                .map_err(|e| Error::Catalog(format!("cannot read {}: {e}", path.display())))?;
            let system = load_system(&bytes).map_err(|e| match e {
                Error::Catalog(m) => Error::Catalog(format!("{}: {m}", path.display())),
                other => other,
            })?;
            if systems.iter().any(|s| s.name == system.name) {
                return Err(Error::Catalog(format!(
                    "duplicate system name `{}` in {}",
                    system.name,
                    dir.display()
                )));
            }
            systems.push(system);
        }
        Ok(Catalog { systems })
    }

    /// Directory catalog when `GTD_CATALOG_DIR` is set, shipped catalog otherwise.
    pub fn from_env() -> Result<Catalog> {
        match std::env::var_os(CATALOG_DIR_ENV) {
            Some(dir) => Catalog::from_dir(Path::new(&dir)),
            None => Ok(Catalog::builtin()),
        }
    }

    pub fn get(&self, name: &str) -> Result<&SystemDefinition> {
        self.systems
            .iter()
            .find(|s| s.name == name)
            .ok_or_else(|| Error::UnknownSystem(name.to_string()))
    }

    pub fn systems(&self) -> &[SystemDefinition] {
        &self.systems
    }
}
