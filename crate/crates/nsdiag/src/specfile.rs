//! Declarative `key = value` simulation specs.
//!
//! ```text
//! # Taylor-Green at n = 32
//! kind = taylor_green
//! n = 32
//! L = 6.283185307179586
//! amplitude = 1
//! length_scale = 6.283185307179586
//! seed = 0
//! center = 3.14, 3.14, 3.14
//! nu = 1
//! dt = 1e-3
//! steps = 100
//! save_every = 10
//! dealias = two_thirds
//! ```
//!
//! Blank lines and `#` comments are ignored. Every key is optional; unset
//! keys fall back to command-line flags and then to the defaults of
//! [`SimSettings::into_spec`]. `init = <file.f3b>` names an initial field
//! file instead of a generated kind.

use std::path::PathBuf;
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};
use nsdiag_core::nse::Dealias;
use nsdiag_core::{FieldKind, FieldSpec, Integration, SimSpec};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SimSettings {
    pub kind: Option<FieldKind>,
    pub init: Option<PathBuf>,
    pub n: Option<usize>,
    pub box_length: Option<f64>,
    pub amplitude: Option<f64>,
    pub length_scale: Option<f64>,
    pub seed: Option<u64>,
    pub center: Option<[f64; 3]>,
    pub nu: Option<f64>,
    pub dt: Option<f64>,
    pub steps: Option<usize>,
    pub save_every: Option<usize>,
    pub dealias: Option<Dealias>,
}

pub fn parse_dealias(s: &str) -> Result<Dealias> {
    match s.trim().replace('-', "_").as_str() {
        "two_thirds" | "2/3" => Ok(Dealias::TwoThirds),
        "none" => Ok(Dealias::None),
        other => bail!("unknown dealias rule '{other}' (two_thirds or none)"),
    }
}

pub fn parse_triple(s: &str) -> Result<[f64; 3]> {
    let parts: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|e| anyhow!("'{p}': {e}")))
        .collect::<Result<_>>()?;
    parts
        .try_into()
        .map_err(|p: Vec<f64>| anyhow!("expected three comma-separated numbers, got {}", p.len()))
}

fn num<T: FromStr>(key: &str, value: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    value.parse::<T>().map_err(|e| anyhow!("{key} = '{value}': {e}"))
}

impl SimSettings {
    pub fn parse(text: &str) -> Result<Self> {
        let mut s = SimSettings::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap().trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| anyhow!("line {}: expected 'key = value'", lineno + 1))?;
            let (key, value) = (key.trim(), value.trim());
            let at = || format!("line {}", lineno + 1);
            match key {
                "kind" => s.kind = Some(FieldKind::from_str(value).with_context(at)?),
                "init" => s.init = Some(PathBuf::from(value)),
                "n" => s.n = Some(num(key, value).with_context(at)?),
                "L" | "box_length" => s.box_length = Some(num(key, value).with_context(at)?),
                "amplitude" => s.amplitude = Some(num(key, value).with_context(at)?),
                "length_scale" => s.length_scale = Some(num(key, value).with_context(at)?),
                "seed" => s.seed = Some(num(key, value).with_context(at)?),
                "center" => s.center = Some(parse_triple(value).with_context(at)?),
                "nu" => s.nu = Some(num(key, value).with_context(at)?),
                "dt" => s.dt = Some(num(key, value).with_context(at)?),
                "steps" => s.steps = Some(num(key, value).with_context(at)?),
                "save_every" => s.save_every = Some(num(key, value).with_context(at)?),
                "dealias" => s.dealias = Some(parse_dealias(value).with_context(at)?),
                other => bail!("line {}: unknown key '{other}'", lineno + 1),
            }
        }
        Ok(s)
    }

    /// Values set in `other` win.
    pub fn overridden_by(self, other: &SimSettings) -> Self {
        SimSettings {
            kind: other.kind.or(self.kind),
            init: other.init.clone().or(self.init),
            n: other.n.or(self.n),
            box_length: other.box_length.or(self.box_length),
            amplitude: other.amplitude.or(self.amplitude),
            length_scale: other.length_scale.or(self.length_scale),
            seed: other.seed.or(self.seed),
            center: other.center.or(self.center),
            nu: other.nu.or(self.nu),
            dt: other.dt.or(self.dt),
            steps: other.steps.or(self.steps),
            save_every: other.save_every.or(self.save_every),
            dealias: other.dealias.or(self.dealias),
        }
    }

    /// Defaults: `nu = 1`, `save_every = 1`, two-thirds dealiasing.
    pub fn integration(&self) -> Result<Integration> {
        let dt = self.dt.ok_or_else(|| anyhow!("dt is required"))?;
        let steps = self.steps.ok_or_else(|| anyhow!("steps is required"))?;
        Ok(Integration::new(dt, steps, self.save_every.unwrap_or(1))
            .with_viscosity(self.nu.unwrap_or(1.0))
            .with_dealias(self.dealias.unwrap_or_default()))
    }

    /// Generated initial condition; defaults `n = 64`, `L = 2 pi`.
    pub fn into_spec(&self) -> Result<SimSpec> {
        let kind = self.kind.ok_or_else(|| anyhow!("kind or init is required"))?;
        let mut init = FieldSpec::new(
            kind,
            self.n.unwrap_or(64),
            self.box_length.unwrap_or(std::f64::consts::TAU),
        );
        if let Some(a) = self.amplitude {
            init = init.with_amplitude(a);
        }
        if let Some(l) = self.length_scale {
            init = init.with_length_scale(l);
        }
        if let Some(seed) = self.seed {
            init = init.with_seed(seed);
        }
        if let Some(c) = self.center {
            init = init.with_center(c);
        }
        Ok(SimSpec::new(init, self.integration()?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_documented_schema() {
        let text = "# comment\nkind = taylor-green\nn = 16\nL = 6.0\namplitude = 2 # inline\n\
                    length_scale = 3\nseed = 4\ncenter = 1, 2, 3\nnu = 0.5\ndt = 1e-3\nsteps = 10\n\
                    save_every = 5\ndealias = none\n";
        let s = SimSettings::parse(text).unwrap();
        let spec = s.into_spec().unwrap();
        assert_eq!(spec.init.kind, FieldKind::TaylorGreen);
        assert_eq!((spec.init.n, spec.init.box_length, spec.init.amplitude), (16, 6.0, 2.0));
        assert_eq!(spec.init.length_scale, Some(3.0));
        assert_eq!(spec.init.center, Some([1.0, 2.0, 3.0]));
        assert_eq!(spec.init.seed, 4);
        assert_eq!(spec.integration.viscosity, 0.5);
        assert_eq!((spec.integration.steps, spec.integration.save_every), (10, 5));
        assert_eq!(spec.integration.dealias, Dealias::None);
    }

    #[test]
    fn rejects_unknown_keys_and_bad_values() {
        assert!(SimSettings::parse("colour = red").is_err());
        assert!(SimSettings::parse("n = many").is_err());
        assert!(SimSettings::parse("kind").is_err());
        assert!(SimSettings::parse("center = 1, 2").is_err());
        assert!(SimSettings::parse("kind = vortex_sheet").is_err());
    }

    #[test]
    fn overrides_and_defaults() {
        let file = SimSettings::parse("kind = abc\ndt = 0.1\nsteps = 3").unwrap();
        let flags = SimSettings {
            dt: Some(0.01),
            ..Default::default()
        };
        let spec = file.overridden_by(&flags).into_spec().unwrap();
        assert_eq!(spec.integration.dt, 0.01);
        assert_eq!(spec.integration.save_every, 1);
        assert_eq!(spec.integration.viscosity, 1.0);
        assert_eq!(spec.init.n, 64);
        assert!(SimSettings::default().integration().is_err());
    }
}
