//! Model specifications of the form `name:key=value,key=value`.

use std::collections::BTreeMap;
use std::fs;
use std::path::PathBuf;

use anyhow::{anyhow, bail, Context, Result};
use ppsmc::models::{ExponentialGap, UniformGap, WeibullGap};
use ppsmc::music::{MusicGap, MusicSequenceModel, NGramModel};
use ppsmc::oracle::MarkovGrid;
use ppsmc::{InterArrival, Poisson, SequenceModel, UniformRenewal, WeibullRenewal};
use rand::Rng;

use crate::UsageError;

fn parse_params(spec: &str) -> Result<(String, BTreeMap<String, String>)> {
    let (name, rest) = spec.split_once(':').unwrap_or((spec, ""));
    let mut params = BTreeMap::new();
    for pair in rest.split(',').filter(|p| !p.is_empty()) {
        let (k, v) = pair.split_once('=').ok_or_else(|| {
            UsageError::new(format!("expected key=value in model spec, got `{pair}`"))
        })?;
        params.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok((name.trim().to_lowercase(), params))
}

struct Params {
    name: String,
    map: BTreeMap<String, String>,
}

impl Params {
    fn parse(spec: &str) -> Result<Self> {
        let (name, map) = parse_params(spec)?;
        Ok(Self { name, map })
    }

    fn take(&mut self, key: &str) -> Result<String> {
        self.map
            .remove(key)
            .ok_or_else(|| UsageError::new(format!("model `{}` needs `{key}`", self.name)).into())
    }

    fn num(&mut self, key: &str) -> Result<f64> {
        let v = self.take(key)?;
        v.parse()
            .map_err(|_| UsageError::new(format!("`{key}` must be a number, got `{v}`")).into())
    }

    fn num_or(&mut self, key: &str, default: f64) -> Result<f64> {
        if self.map.contains_key(key) {
            self.num(key)
        } else {
            Ok(default)
        }
    }

    fn finish(self) -> Result<()> {
        if let Some(k) = self.map.keys().next() {
            bail!(UsageError::new(format!(
                "unknown parameter `{k}` for model `{}`",
                self.name
            )));
        }
        Ok(())
    }
}

/// A parsed `--model` argument before it is bound to a time window.
#[derive(Debug, Clone)]
pub enum ModelSource {
    Poisson(Poisson),
    Weibull(WeibullRenewal),
    Uniform(UniformRenewal),
    NGram(NGramModel),
}

impl ModelSource {
    pub fn parse(spec: &str) -> Result<Self> {
        let mut p = Params::parse(spec)?;
        let source = match p.name.as_str() {
            "poisson" => ModelSource::Poisson(Poisson::new(p.num("rate")?)?),
            "weibull" => {
                let shape = p.num("shape")?;
                let scale = p.num_or("scale", 1.0)?;
                ModelSource::Weibull(WeibullRenewal::new(shape, scale)?)
            }
            "uniform" => ModelSource::Uniform(UniformRenewal::new(p.num("lo")?, p.num("hi")?)?),
            "ngram" => {
                let path = PathBuf::from(p.take("path")?);
                let text = fs::read_to_string(&path)
                    .with_context(|| format!("reading model file {}", path.display()))?;
                ModelSource::NGram(NGramModel::from_json(&text)?)
            }
            other => bail!(UsageError::new(format!(
                "unknown model `{other}` (expected poisson, weibull, uniform or ngram)"
            ))),
        };
        p.finish()?;
        Ok(source)
    }

    /// Continuous models as they are; music models need a window first.
    pub fn continuous(&self) -> Option<AnyModel> {
        Some(match self {
            ModelSource::Poisson(m) => AnyModel::Poisson(*m),
            ModelSource::Weibull(m) => AnyModel::Weibull(*m),
            ModelSource::Uniform(m) => AnyModel::Uniform(*m),
            ModelSource::NGram(_) => return None,
        })
    }
}

/// Sampling-ready model of any supported kind.
#[derive(Debug, Clone)]
pub enum AnyModel {
    Poisson(Poisson),
    Weibull(WeibullRenewal),
    Uniform(UniformRenewal),
    Music(MusicSequenceModel<NGramModel>),
}

#[derive(Debug, Clone)]
pub enum AnyGap {
    Exponential(ExponentialGap),
    Weibull(WeibullGap),
    Uniform(UniformGap),
    Music(MusicGap<NGramModel>),
}

macro_rules! each_gap {
    ($self:ident, $g:ident => $e:expr) => {
        match $self {
            AnyGap::Exponential($g) => $e,
            AnyGap::Weibull($g) => $e,
            AnyGap::Uniform($g) => $e,
            AnyGap::Music($g) => $e,
        }
    };
}

impl InterArrival for AnyGap {
    fn pdf(&self, gap: f64) -> f64 {
        each_gap!(self, g => g.pdf(gap))
    }

    fn cdf(&self, gap: f64) -> f64 {
        each_gap!(self, g => g.cdf(gap))
    }

    fn survival(&self, gap: f64) -> f64 {
        each_gap!(self, g => g.survival(gap))
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        each_gap!(self, g => g.sample(rng))
    }
}

impl SequenceModel for AnyModel {
    type Gap = AnyGap;

    fn next_gap(&self, history: &[f64]) -> ppsmc::Result<AnyGap> {
        Ok(match self {
            AnyModel::Poisson(m) => AnyGap::Exponential(m.next_gap(history)?),
            AnyModel::Weibull(m) => AnyGap::Weibull(m.next_gap(history)?),
            AnyModel::Uniform(m) => AnyGap::Uniform(m.next_gap(history)?),
            AnyModel::Music(m) => AnyGap::Music(m.next_gap(history)?),
        })
    }

    fn quantize(&self, t: f64) -> f64 {
        match self {
            AnyModel::Music(m) => m.quantize(t),
            _ => t,
        }
    }
}

/// `markov:order=2,table=0.3/0.6/0.15/0.45` or `constant:p=0.5`.
pub fn parse_grid(spec: &str, cells: usize) -> Result<MarkovGrid> {
    let mut p = Params::parse(spec)?;
    let grid = match p.name.as_str() {
        "constant" => MarkovGrid::constant(cells, p.num("p")?)?,
        "markov" => {
            let order: usize = p
                .take("order")?
                .parse()
                .map_err(|_| UsageError::new("`order` must be a non-negative integer"))?;
            let table = p
                .take("table")?
                .split('/')
                .map(|x| x.trim().parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|_| UsageError::new("`table` must be numbers separated by `/`"))?;
            MarkovGrid::new(cells, order, table)?
        }
        other => bail!(UsageError::new(format!(
            "unknown grid model `{other}` (expected constant or markov)"
        ))),
    };
    p.finish()?;
    Ok(grid)
}

pub fn parse_cells(list: &str) -> Result<Vec<usize>> {
    list.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| {
            s.trim()
                .parse()
                .map_err(|_| anyhow!(UsageError::new(format!("bad cell index `{s}`"))))
        })
        .collect()
}
