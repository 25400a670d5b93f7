//! On-disk formats: pair files and plane-field files.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use bicontact_core::classifier::Region;
use bicontact_core::invariants::Tolerances;
use bicontact_core::symmetry::PlaneField;
use bicontact_core::{parse_expression, ContactPair, Params};
use serde::{Deserialize, Deserializer, Serialize};

/// A float written either as a JSON number or as a string.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Num(pub f64);

impl<'de> Deserialize<'de> for Num {
    fn deserialize<D: Deserializer<'de>>(de: D) -> Result<Self, D::Error> {
        use serde::de::Error;
        let value = serde_json::Value::deserialize(de)?;
        let parsed = match &value {
            serde_json::Value::Number(n) => n.to_string().parse::<f64>().ok(),
            serde_json::Value::String(s) => s.trim().parse::<f64>().ok(),
            _ => None,
        };
        match parsed {
            Some(v) if v.is_finite() => Ok(Num(v)),
            _ => Err(D::Error::custom(format!("expected a finite number, found {value}"))),
        }
    }
}

impl Serialize for Num {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> Result<S::Ok, S::Error> {
        ser.serialize_f64(self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegionSpec {
    pub x: [Num; 2],
    pub y: [Num; 2],
    pub p: [Num; 2],
    pub counts: [usize; 3],
}

impl RegionSpec {
    pub fn to_region(&self) -> Result<Region> {
        let pair = |v: &[Num; 2]| [v[0].0, v[1].0];
        Ok(Region::new(pair(&self.x), pair(&self.y), pair(&self.p), self.counts)?)
    }

    pub fn from_region(r: &Region) -> Self {
        let pair = |v: [f64; 2]| [Num(v[0]), Num(v[1])];
        Self {
            x: pair(r.x),
            y: pair(r.y),
            p: pair(r.p),
            counts: r.counts,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToleranceSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub zero: Option<Num>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub den: Option<Num>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub unanimity: Option<Num>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairFile {
    pub chart: String,
    pub f: String,
    #[serde(default)]
    pub params: BTreeMap<String, Num>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub region: Option<RegionSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerances: Option<ToleranceSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub order: Option<usize>,
}

pub const CHART: &str = "normalized";

fn params_of(map: &BTreeMap<String, Num>) -> Params {
    map.iter().map(|(k, v)| (k.clone(), v.0)).collect()
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path, what: &str) -> Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {what} {}", path.display()))
}

impl PairFile {
    pub fn load(path: &Path) -> Result<Self> {
        let file: Self = read_json(path, "pair file")?;
        if file.chart != CHART {
            bail!("unsupported chart {:?}; only {CHART:?} is accepted", file.chart);
        }
        Ok(file)
    }

    pub fn pair(&self) -> Result<ContactPair> {
        let f = parse_expression(&self.f).with_context(|| format!("in f = {:?}", self.f))?;
        let params = params_of(&self.params);
        if let Some(name) = f.params().into_iter().find(|n| !params.contains_key(n)) {
            bail!("parameter {name:?} of f has no value in \"params\"");
        }
        Ok(ContactPair::new(f, params))
    }

    pub fn region(&self) -> Result<Region> {
        match &self.region {
            Some(r) => r.to_region().context("in \"region\""),
            None => bail!("pair file has no \"region\""),
        }
    }

    /// File values, then command-line overrides, then defaults.
    pub fn tolerances(&self, overrides: &ToleranceSpec) -> Result<Tolerances> {
        let file = self.tolerances.clone().unwrap_or_default();
        let mut tol = Tolerances::default();
        let pick = |cli: Option<Num>, file: Option<Num>, slot: &mut f64| {
            if let Some(v) = cli.or(file) {
                *slot = v.0;
            }
        };
        pick(overrides.zero, file.zero, &mut tol.zero);
        pick(overrides.den, file.den, &mut tol.den);
        pick(overrides.unanimity, file.unanimity, &mut tol.unanimity);
        tol.validate()?;
        Ok(tol)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldFile {
    pub u: String,
    pub v: String,
    #[serde(default)]
    pub params: BTreeMap<String, Num>,
}

impl FieldFile {
    pub fn load(path: &Path) -> Result<Self> {
        read_json(path, "field file")
    }

    pub fn field(&self) -> Result<PlaneField> {
        Ok(PlaneField::parse(&self.u, &self.v, params_of(&self.params))?)
    }

    pub fn from_field(pf: &PlaneField) -> Self {
        Self {
            u: pf.u.to_string(),
            v: pf.v.to_string(),
            params: pf.params.iter().map(|(k, v)| (k.clone(), Num(*v))).collect(),
        }
    }
}
