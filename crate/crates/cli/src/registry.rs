//! Name → model / divergence lookup for the command line.
//!
//! Models: `simplex:n=<k>`, `normal`, `euclid:n=<k>`, `halfline`, `polar`,
//! `expfam:<family>[:key=value,…]`, `warped:<base>/<fiber>/<warp>`.
//!
//! Divergences: `sq-euclid`, `kl-simplex`, `bregman:<family>[:key=value,…]`,
//! `warped:<base>/<fiber>/<warp>`; `sq-euclid` and `kl-simplex` take their
//! dimension from the points they are applied to.
//!
//! Warps act on the first base coordinate: `constant:<c>`, `linear:<c0>:<c1>`
//! (c0 + c1·b) and `exp:<c0>:<c1>` (c0·exp(c1·b)).

use std::collections::BTreeMap;

use infogeo_core::families::{family_from_params, normal_model, ExponentialFamilySpec};
use infogeo_core::simplex;
use infogeo_core::warped::{self, WarpKind, WarpSpec, WarpWeight};
use infogeo_core::{DivergenceFn, ManifoldModel};

use crate::config::RunConfig;
use crate::CliError;

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

/// Parses `k=v,k=v` into a map.
fn key_values(text: &str) -> Result<BTreeMap<String, String>, CliError> {
    let mut out = BTreeMap::new();
    for part in text.split(',').filter(|s| !s.trim().is_empty()) {
        let (k, v) = part
            .split_once('=')
            .ok_or_else(|| usage(format!("expected key=value, got `{part}`")))?;
        out.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(out)
}

fn dimension(params: &BTreeMap<String, String>, name: &str) -> Result<usize, CliError> {
    let raw = params
        .get("n")
        .ok_or_else(|| usage(format!("model `{name}` needs n=<dimension>")))?;
    match raw.parse::<usize>() {
        Ok(n) if n >= 1 => Ok(n),
        _ => Err(usage(format!(
            "model `{name}`: n must be a positive integer, got `{raw}`"
        ))),
    }
}

fn family(text: &str) -> Result<ExponentialFamilySpec, CliError> {
    let (name, rest) = text.split_once(':').unwrap_or((text, ""));
    let mut params = key_values(rest)?;
    params.insert("family".into(), name.to_string());
    family_from_params(&params).map_err(|e| usage(e.to_string()))
}

pub fn model(name: &str) -> Result<ManifoldModel, CliError> {
    let (head, rest) = name.split_once(':').unwrap_or((name, ""));
    match head {
        "simplex" => Ok(simplex::model(dimension(&key_values(rest)?, name)?)),
        "euclid" => Ok(ManifoldModel::euclidean(dimension(
            &key_values(rest)?,
            name,
        )?)),
        "normal" => Ok(normal_model()),
        "halfline" => Ok(halfline()),
        "polar" => Ok(warped::warped_model(&warped::polar_spec())?),
        "expfam" => Ok(family(rest)?.model()),
        "warped" => Ok(warped::warped_model(&warp_spec(rest)?)?),
        _ => Err(usage(format!("unknown model `{name}`"))),
    }
}

/// (0, ∞) with the Euclidean structure.
pub fn halfline() -> ManifoldModel {
    ManifoldModel::euclidean(1).with_guard(|b| b[0] > 0.0)
}

pub fn warp_kind(text: &str) -> Result<WarpKind, CliError> {
    let parts: Vec<&str> = text.split(':').collect();
    let num = |s: &str| {
        s.trim()
            .parse::<f64>()
            .map_err(|_| usage(format!("warp `{text}`: `{s}` is not a number")))
    };
    match parts.as_slice() {
        ["constant", c] => Ok(WarpKind::Constant(num(c)?)),
        ["linear", c0, c1] => Ok(WarpKind::Linear {
            c0: num(c0)?,
            c1: num(c1)?,
        }),
        ["exp", c0, c1] => Ok(WarpKind::Exp {
            c0: num(c0)?,
            c1: num(c1)?,
        }),
        _ => Err(usage(format!(
            "unknown warp `{text}`; expected constant:<c>, linear:<c0>:<c1> or exp:<c0>:<c1>"
        ))),
    }
}

/// `<base>/<fiber>/<warp>`.
pub fn warp_spec(text: &str) -> Result<WarpSpec, CliError> {
    let parts: Vec<&str> = text.split('/').collect();
    let [base, fiber, warp] = parts.as_slice() else {
        return Err(usage(format!(
            "warped spec `{text}` must be <base>/<fiber>/<warp>"
        )));
    };
    Ok(WarpSpec::from_kind(
        model(base)?,
        model(fiber)?,
        warp_kind(warp)?,
    ))
}

/// Warp spec from `warp.base`, `warp.fiber`, `warp.kind`, `warp.c0`, `warp.c1`
/// config keys, if `warp.base` is present.
pub fn warp_spec_from_config(cfg: &RunConfig) -> Result<Option<WarpSpec>, CliError> {
    let Some(base) = cfg.param("warp.base") else {
        return Ok(None);
    };
    let fiber = cfg
        .param("warp.fiber")
        .ok_or_else(|| usage("warp.fiber is required with warp.base"))?;
    let kind = cfg.param("warp.kind").unwrap_or("constant");
    let c0 = cfg.param("warp.c0").unwrap_or("1");
    let warp = match kind {
        "constant" => format!("constant:{c0}"),
        "linear" | "exp" => format!("{kind}:{c0}:{}", cfg.param("warp.c1").unwrap_or("0")),
        other => return Err(usage(format!("unknown warp.kind `{other}`"))),
    };
    Ok(Some(WarpSpec::from_kind(
        model(base)?,
        model(fiber)?,
        warp_kind(&warp)?,
    )))
}

/// Looks up a divergence; `dim` is the chart dimension of the points it will see.
pub fn divergence(name: &str, dim: usize) -> Result<DivergenceFn, CliError> {
    let (head, rest) = name.split_once(':').unwrap_or((name, ""));
    match head {
        "sq-euclid" => Ok(DivergenceFn::squared_euclidean(dim)),
        "kl-simplex" => Ok(simplex::kl_divergence_fn(dim)),
        "bregman" => Ok(family(rest)?.divergence()),
        "warped" => {
            let spec = warp_spec(rest)?;
            let (db, df) = match (spec.base().divergence(), spec.fiber().divergence()) {
                (Some(db), Some(df)) => (db.clone(), df.clone()),
                _ => return Err(usage(format!("factors of `{name}` carry no divergence"))),
            };
            Ok(warped::warped_divergence(
                &db,
                &df,
                &spec,
                WarpWeight::Symmetric,
            )?)
        }
        _ => Err(usage(format!("unknown divergence `{name}`"))),
    }
}

pub fn is_divergence_name(name: &str) -> bool {
    let head = name.split(':').next().unwrap_or("");
    matches!(head, "sq-euclid" | "kl-simplex" | "bregman" | "warped")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn resolves_models() {
        assert_eq!(model("simplex:n=2").unwrap().dim(), 2);
        assert_eq!(model("euclid:n=3").unwrap().dim(), 3);
        assert_eq!(model("normal").unwrap().dim(), 2);
        assert_eq!(model("polar").unwrap().dim(), 2);
        assert_eq!(model("expfam:quadratic:dim=2").unwrap().dim(), 2);
        assert_eq!(
            model("warped:simplex:n=1/simplex:n=2/linear:1:0.5")
                .unwrap()
                .dim(),
            3
        );
        for bad in [
            "simplex",
            "simplex:n=0",
            "sphere",
            "warped:normal/normal",
            "warped:normal/normal/cubic:1",
        ] {
            assert!(matches!(model(bad), Err(CliError::Usage(_))), "{bad}");
        }
    }

    #[test]
    fn resolves_divergences() {
        let kl = divergence("kl-simplex", 1).unwrap();
        assert!((kl.eval(&[0.5], &[0.25]).unwrap() - 0.143841036225890).abs() < 1e-12);
        assert!(divergence("bregman:bernoulli", 1).is_ok());
        assert!(divergence("warped:simplex:n=1/simplex:n=1/linear:1:0.5", 2).is_ok());
        assert!(divergence("warped:normal/normal/constant:1", 4).is_err());
        assert!(divergence("hellinger", 1).is_err());
    }

    #[test]
    fn warp_from_config() {
        let cfg = RunConfig::parse("warp.base = halfline\nwarp.fiber = euclid:n=1\nwarp.kind = linear\nwarp.c0 = 0\nwarp.c1 = 1").unwrap();
        let spec = warp_spec_from_config(&cfg).unwrap().unwrap();
        assert_eq!(spec.warp(&[2.0]).unwrap(), 2.0);
        assert!(warp_spec_from_config(&RunConfig::default())
            .unwrap()
            .is_none());
    }
}
