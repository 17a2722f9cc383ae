use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::{ExperimentConfig, ExperimentResult};
use crate::error::Result;

pub const LIBRARY_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Paths written by [`write_experiment`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExperimentFiles {
    pub summary_csv: PathBuf,
    pub sidecar_json: PathBuf,
    /// Present when the result carried a replicate log.
    pub replicates_csv: Option<PathBuf>,
}

/// Writes `bytes` to a temporary file next to `path`, then renames it into
/// place, so readers never observe a partial file.
pub fn write_atomically(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(format!(".tmp{}", std::process::id()));
    let tmp = PathBuf::from(tmp);
    let res = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if res.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    Ok(res?)
}

#[derive(Serialize)]
struct SummaryRow {
    method: &'static str,
    p_true: f64,
    epsilon: f64,
    delta: f64,
    replicates: u64,
    master_seed: u64,
    planned_k: u64,
    failures: u64,
    failure_rate: f64,
    failure_rate_se: f64,
    mean_samples: f64,
    mean_samples_se: f64,
    mean_p_hat: f64,
    mean_p_hat_se: f64,
    mean_k_used: f64,
}

#[derive(Serialize)]
struct Sidecar<'a> {
    library: &'static str,
    version: &'static str,
    config: &'a ExperimentConfig,
}

fn method_name(r: &ExperimentResult) -> &'static str {
    use super::ExperimentMethod::*;
    match r.config.method {
        TwoStage => "two_stage",
        Gbas => "gbas",
        Dklr => "dklr",
        FixedN => "fixed_n",
        Unbiased => "unbiased",
    }
}

fn to_csv<T: Serialize>(rows: impl IntoIterator<Item = T>) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(w.into_inner().map_err(|e| e.into_error())?)
}

/// Writes `<stem>.csv` (one summary row), `<stem>.json` (the config and
/// library version) and, when replicates were kept, `<stem>.replicates.csv`
/// into `dir`. Output contains no timestamps, so reruns are byte-identical.
pub fn write_experiment(result: &ExperimentResult, dir: &Path, stem: &str) -> Result<ExperimentFiles> {
    fs::create_dir_all(dir)?;
    let c = &result.config;
    let row = SummaryRow {
        method: method_name(result),
        p_true: c.p_true,
        epsilon: c.target.epsilon(),
        delta: c.target.delta(),
        replicates: c.replicates,
        master_seed: c.master_seed,
        planned_k: result.planned_k,
        failures: result.failures,
        failure_rate: result.failure_rate.mean,
        failure_rate_se: result.failure_rate.std_error,
        mean_samples: result.mean_samples.mean,
        mean_samples_se: result.mean_samples.std_error,
        mean_p_hat: result.mean_p_hat.mean,
        mean_p_hat_se: result.mean_p_hat.std_error,
        mean_k_used: result.mean_k_used,
    };
    let summary_csv = dir.join(format!("{stem}.csv"));
    write_atomically(&summary_csv, &to_csv([row])?)?;

    let sidecar_json = dir.join(format!("{stem}.json"));
    let sidecar = Sidecar { library: env!("CARGO_PKG_NAME"), version: LIBRARY_VERSION, config: c };
    let mut json = serde_json::to_vec_pretty(&sidecar)?;
    json.push(b'\n');
    write_atomically(&sidecar_json, &json)?;

    let replicates_csv = match &result.replicate_log {
        Some(log) => {
            let path = dir.join(format!("{stem}.replicates.csv"));
            write_atomically(&path, &to_csv(log.iter())?)?;
            Some(path)
        }
        None => None,
    };
    Ok(ExperimentFiles { summary_csv, sidecar_json, replicates_csv })
}
