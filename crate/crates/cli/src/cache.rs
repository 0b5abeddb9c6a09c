//! On-disk ensemble cache keyed by dataset content and generator settings.

use std::fs;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use qonsensus::ensemble::{read_ensemble_csv, write_ensemble_csv};
use qonsensus::{generate_ensemble, Dataset, Ensemble, EnsembleConfig};
use sha2::{Digest, Sha256};

use crate::error::{at, Result, Stage, StageError};

pub const CACHE_DIR_ENV: &str = "QONSENSUS_CACHE_DIR";

/// Hex digest identifying `(dataset features, config)`.
pub fn cache_key(dataset: &Dataset, config: &EnsembleConfig) -> String {
    let mut hasher = Sha256::new();
    hasher.update(b"qonsensus-ensemble-v1");
    hasher.update((dataset.num_points() as u64).to_le_bytes());
    hasher.update((dataset.num_features() as u64).to_le_bytes());
    for x in dataset.features() {
        hasher.update(x.to_bits().to_le_bytes());
    }
    for v in [
        config.m as u64,
        config.k_true as u64,
        config.max_iters as u64,
        config.seed,
    ] {
        hasher.update(v.to_le_bytes());
    }
    hasher
        .finalize()
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

pub fn cache_path(dir: &Path, dataset: &Dataset, config: &EnsembleConfig) -> PathBuf {
    let key = cache_key(dataset, config);
    dir.join(format!("{}-{}.csv", dataset.name(), &key[..16]))
}

/// Loads the cached ensemble when present and consistent, otherwise
/// generates and stores it. Without a cache directory this just generates.
pub fn load_or_generate(
    dataset: &Dataset,
    config: &EnsembleConfig,
    dir: Option<&Path>,
) -> Result<Ensemble> {
    let Some(dir) = dir else {
        return generate_ensemble(dataset, config).map_err(at(Stage::Ensemble));
    };
    let path = cache_path(dir, dataset, config);
    if let Ok(file) = fs::File::open(&path) {
        if let Ok(ens) = read_ensemble_csv(BufReader::new(file)) {
            if ens.num_points() == dataset.num_points()
                && ens.len() == config.m
                && ens.generator_seed() == config.seed
            {
                return Ok(ens);
            }
        }
    }
    let ens = generate_ensemble(dataset, config).map_err(at(Stage::Ensemble))?;
    fs::create_dir_all(dir)
        .map_err(|e| StageError::new(Stage::Ensemble, format!("{}: {e}", dir.display())))?;
    // write-then-rename so concurrent runs never see a partial file
    let tmp = path.with_extension(format!("tmp{}", std::process::id()));
    let mut out = BufWriter::new(fs::File::create(&tmp).map_err(at(Stage::Ensemble))?);
    write_ensemble_csv(&ens, &mut out).map_err(at(Stage::Ensemble))?;
    out.flush().map_err(at(Stage::Ensemble))?;
    drop(out);
    fs::rename(&tmp, &path).map_err(at(Stage::Ensemble))?;
    Ok(ens)
}
