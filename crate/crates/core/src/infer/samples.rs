use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::diagnostics::{chain_diagnostics, ParamDiagnostics};
use super::prior::PriorSpec;
use super::ChainConfig;
use crate::error::{Result, TppError};
use crate::models::{ModelFamily, ParamSet};
use crate::stats;

/// Kept posterior draws on the parameter scale, `draws[chain][draw][param]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorSamples {
    pub family: ModelFamily,
    pub draws: Vec<Vec<Vec<f64>>>,
    pub diagnostics: Vec<ParamDiagnostics>,
    pub divergences: usize,
}

/// Contents of `config.json` in a posterior archive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArchiveConfig {
    pub family: ModelFamily,
    pub prior: PriorSpec,
    pub chains: ChainConfig,
    /// Always `"shape-rate"`.
    pub gamma_parameterization: String,
    pub divergences: usize,
    pub n_sessions: usize,
}

impl PosteriorSamples {
    pub fn new(family: ModelFamily, draws: Vec<Vec<Vec<f64>>>, divergences: usize) -> Result<Self> {
        let n = draws.first().map(Vec::len).unwrap_or(0);
        if draws.is_empty() || n == 0 || draws.iter().any(|c| c.len() != n) {
            return Err(TppError::invalid("posterior draws must be a nonempty rectangular array"));
        }
        if draws.iter().flatten().any(|d| d.len() != family.dim()) {
            return Err(TppError::invalid(format!("every draw must hold {} values", family.dim())));
        }
        let mut s = PosteriorSamples {
            family,
            draws,
            diagnostics: Vec::new(),
            divergences,
        };
        s.diagnostics = s.compute_diagnostics()?;
        Ok(s)
    }

    fn compute_diagnostics(&self) -> Result<Vec<ParamDiagnostics>> {
        let names = self.family.param_names();
        (0..self.family.dim())
            .map(|i| {
                let col = self.column(i);
                if col.len() >= 2 && col[0].len() >= 4 {
                    chain_diagnostics(names[i], &col)
                } else {
                    let all: Vec<f64> = col.iter().flatten().copied().collect();
                    let s = stats::sorted(&all);
                    Ok(ParamDiagnostics {
                        name: names[i].to_string(),
                        mean: stats::mean(&all),
                        sd: if all.len() > 1 { stats::sd(&all) } else { 0.0 },
                        q5: stats::quantile_sorted(&s, 0.05),
                        median: stats::quantile_sorted(&s, 0.5),
                        q95: stats::quantile_sorted(&s, 0.95),
                        r_hat: None,
                        ess_bulk: None,
                        ess_tail: None,
                        mcse_mean: None,
                        mcse_sd: None,
                    })
                }
            })
            .collect()
    }

    pub fn n_chains(&self) -> usize {
        self.draws.len()
    }

    pub fn n_draws(&self) -> usize {
        self.draws[0].len()
    }

    /// Parameter `i` as `[chain][draw]`.
    pub fn column(&self, i: usize) -> Vec<Vec<f64>> {
        self.draws.iter().map(|c| c.iter().map(|d| d[i]).collect()).collect()
    }

    /// Parameter `i` over all chains, chain-major.
    pub fn flat_column(&self, i: usize) -> Vec<f64> {
        self.draws.iter().flatten().map(|d| d[i]).collect()
    }

    /// All draws as parameter sets, chain-major.
    pub fn param_sets(&self) -> Result<Vec<ParamSet>> {
        self.draws
            .iter()
            .flatten()
            .map(|d| ParamSet::new(self.family, d.clone()))
            .collect()
    }

    pub fn posterior_mean(&self) -> Result<ParamSet> {
        ParamSet::new(self.family, self.diagnostics.iter().map(|d| d.mean).collect())
    }

    pub fn diagnostic(&self, name: &str) -> Option<&ParamDiagnostics> {
        self.diagnostics.iter().find(|d| d.name == name)
    }

    /// Largest R̂ over parameters; undefined entries are skipped.
    pub fn max_r_hat(&self) -> Option<f64> {
        self.diagnostics.iter().filter_map(|d| d.r_hat).reduce(f64::max)
    }

    /// Branching factor at every draw (Hawkes families only).
    pub fn branching_factor_draws(&self) -> Result<Vec<f64>> {
        self.param_sets()?
            .iter()
            .map(|p| p.branching_factor().map(|b| b.value))
            .collect()
    }

    pub fn write_draws_csv(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        write!(w, "chain,draw")?;
        for n in self.family.param_names() {
            write!(w, ",{n}")?;
        }
        writeln!(w)?;
        for (c, chain) in self.draws.iter().enumerate() {
            for (i, d) in chain.iter().enumerate() {
                write!(w, "{c},{i}")?;
                for v in d {
                    write!(w, ",{v}")?;
                }
                writeln!(w)?;
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_diagnostics_csv(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        writeln!(w, "parameter,mcse_mean,mcse_sd,ess_bulk,ess_tail,r_hat,mean,sd,5%,median,95%")?;
        let opt = |v: Option<f64>| v.map(|x| format!("{x:.6}")).unwrap_or_else(|| "NA".into());
        for d in &self.diagnostics {
            writeln!(
                w,
                "{},{},{},{},{},{},{:.6},{:.6},{:.6},{:.6},{:.6}",
                d.name,
                opt(d.mcse_mean),
                opt(d.mcse_sd),
                opt(d.ess_bulk),
                opt(d.ess_tail),
                opt(d.r_hat),
                d.mean,
                d.sd,
                d.q5,
                d.median,
                d.q95
            )?;
        }
        w.flush()?;
        Ok(())
    }

    /// Writes `draws.csv`, `diagnostics.csv` and `config.json` into `dir`.
    pub fn write_archive(&self, dir: &Path, config: &ArchiveConfig) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        self.write_draws_csv(&dir.join("draws.csv"))?;
        self.write_diagnostics_csv(&dir.join("diagnostics.csv"))?;
        let mut f = BufWriter::new(File::create(dir.join("config.json"))?);
        serde_json::to_writer_pretty(&mut f, config)?;
        writeln!(f)?;
        f.flush()?;
        Ok(())
    }

    /// Reads an archive back; diagnostics are recomputed from the draws.
    pub fn read_archive(dir: &Path) -> Result<(Self, ArchiveConfig)> {
        let config: ArchiveConfig = serde_json::from_reader(File::open(dir.join("config.json"))?)?;
        let family = config.family;
        let mut rdr = csv::Reader::from_path(dir.join("draws.csv"))?;
        let headers = rdr.headers()?.clone();
        let expected: Vec<&str> = ["chain", "draw"]
            .into_iter()
            .chain(family.param_names().iter().copied())
            .collect();
        if headers.iter().collect::<Vec<_>>() != expected {
            return Err(TppError::Parse {
                location: "draws.csv header".into(),
                reason: format!("expected columns {}", expected.join(",")),
            });
        }
        let mut draws: Vec<Vec<Vec<f64>>> = Vec::new();
        for (line, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let bad = |reason: String| TppError::Parse {
                location: format!("draws.csv line {}", line + 2),
                reason,
            };
            let chain: usize = rec[0].parse().map_err(|e| bad(format!("chain: {e}")))?;
            let vals: Vec<f64> = rec
                .iter()
                .skip(2)
                .map(|s| s.parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| bad(e.to_string()))?;
            if chain == draws.len() {
                draws.push(Vec::new());
            } else if chain + 1 != draws.len() {
                return Err(bad("chains must appear in order".into()));
            }
            draws[chain].push(vals);
        }
        let s = PosteriorSamples::new(family, draws, config.divergences)?;
        Ok((s, config))
    }
}
