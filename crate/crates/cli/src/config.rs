//! Run configuration: TOML flattened to dotted keys (`seed.1.psi`,
//! `alpha.1.2`, ...), so nested tables and quoted dotted keys are
//! interchangeable.

use std::collections::BTreeMap;
use std::path::PathBuf;

use moutard_core::dirac::{Constants, DEFAULT_EPS_REL};
use moutard_core::expr::SeedExpr;
use moutard_core::grid::Domain;
use moutard_core::Complex64;
use thiserror::Error;
use toml::{Table, Value};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("invalid TOML: {0}")]
    Toml(String),

    #[error("missing key `{0}`")]
    Missing(String),

    #[error("unknown key `{0}`")]
    Unknown(String),

    #[error("key `{key}`: {msg}")]
    Invalid { key: String, msg: String },

    #[error("override `{0}` is not of the form KEY=VALUE")]
    Override(String),
}

fn invalid(key: &str, msg: impl Into<String>) -> ConfigError {
    ConfigError::Invalid { key: key.to_string(), msg: msg.into() }
}

/// Dotted-key view of a TOML document.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Flat(BTreeMap<String, Value>);

impl Flat {
    pub fn parse(text: &str) -> Result<Flat, ConfigError> {
        let table: Table = text.parse().map_err(|e: toml::de::Error| ConfigError::Toml(e.to_string()))?;
        let mut out = BTreeMap::new();
        flatten("", table, &mut out);
        Ok(Flat(out))
    }

    /// Apply a `KEY=VALUE` override. VALUE is read as a TOML value and
    /// falls back to a bare string.
    pub fn set(&mut self, assignment: &str) -> Result<(), ConfigError> {
        let (key, raw) = assignment.split_once('=').ok_or_else(|| ConfigError::Override(assignment.into()))?;
        let key = key.trim();
        if key.is_empty() {
            return Err(ConfigError::Override(assignment.into()));
        }
        let raw = raw.trim();
        let value = format!("v = {raw}")
            .parse::<Table>()
            .ok()
            .and_then(|mut t| t.remove("v"))
            .unwrap_or_else(|| Value::String(raw.to_string()));
        // an override replaces the whole subtree under `key`
        let prefix = format!("{key}.");
        self.0.retain(|k, _| !k.starts_with(&prefix));
        match value {
            Value::Table(t) => flatten(key, t, &mut self.0),
            v => {
                self.0.insert(key.to_string(), v);
            }
        }
        Ok(())
    }

    fn take(&mut self, key: &str) -> Option<Value> {
        self.0.remove(key)
    }

    fn keys_with_prefix(&self, prefix: &str) -> Vec<String> {
        self.0.keys().filter(|k| k.starts_with(prefix)).cloned().collect()
    }

    fn finish(self) -> Result<(), ConfigError> {
        match self.0.into_keys().next() {
            Some(k) => Err(ConfigError::Unknown(k)),
            None => Ok(()),
        }
    }
}

fn flatten(prefix: &str, table: Table, out: &mut BTreeMap<String, Value>) {
    for (k, v) in table {
        let key = if prefix.is_empty() { k } else { format!("{prefix}.{k}") };
        match v {
            Value::Table(t) => flatten(&key, t, out),
            v => {
                out.insert(key, v);
            }
        }
    }
}

fn as_f64(key: &str, v: &Value) -> Result<f64, ConfigError> {
    match v {
        Value::Float(x) => Ok(*x),
        Value::Integer(i) => Ok(*i as f64),
        _ => Err(invalid(key, "expected a number")),
    }
}

fn as_usize(key: &str, v: &Value) -> Result<usize, ConfigError> {
    match v {
        Value::Integer(i) if *i >= 0 => Ok(*i as usize),
        _ => Err(invalid(key, "expected a non-negative integer")),
    }
}

fn f64_list(key: &str, v: &Value) -> Result<Vec<f64>, ConfigError> {
    match v {
        Value::Array(items) => items.iter().map(|x| as_f64(key, x)).collect(),
        _ => Err(invalid(key, "expected an array of numbers")),
    }
}

fn fixed_list<const N: usize>(key: &str, v: &Value) -> Result<[f64; N], ConfigError> {
    let xs = f64_list(key, v)?;
    xs.try_into().map_err(|_| invalid(key, format!("expected {N} numbers")))
}

fn expr(key: &str, v: &Value) -> Result<SeedExpr, ConfigError> {
    match v {
        Value::String(s) => SeedExpr::parse(s).map_err(|e| invalid(key, e.to_string())),
        Value::Integer(_) | Value::Float(_) => Ok(SeedExpr::constant(Complex64::new(as_f64(key, v)?, 0.0))),
        _ => Err(invalid(key, "expected an expression string")),
    }
}

/// A number `a` means the constant `i·a`; a string is the constant itself.
fn constant(key: &str, v: &Value) -> Result<Complex64, ConfigError> {
    match v {
        Value::Integer(_) | Value::Float(_) => Ok(Complex64::new(0.0, as_f64(key, v)?)),
        Value::String(_) => {
            let e = expr(key, v)?;
            if !e.is_constant() {
                return Err(invalid(key, "constant must not depend on z"));
            }
            e.eval(Complex64::new(0.0, 0.0)).map_err(|err| invalid(key, err.to_string()))
        }
        _ => Err(invalid(key, "expected a number or a constant expression")),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Level {
    Ga,
    Dirac,
}

impl Level {
    pub fn name(self) -> &'static str {
        match self {
            Level::Ga => "ga",
            Level::Dirac => "dirac",
        }
    }

    fn seed_fields(self) -> &'static [&'static str] {
        match self {
            Level::Ga => &["psi", "psip"],
            Level::Dirac => &["psi1", "psi2", "psip1", "psip2"],
        }
    }

    fn target_fields(self) -> (&'static [&'static str], &'static [&'static str]) {
        match self {
            Level::Ga => (&["psi0"], &["psip0"]),
            Level::Dirac => (&["psi0_1", "psi0_2"], &["psip0_1", "psip0_2"]),
        }
    }
}

/// Parameter ranges of the circle-pole family.
#[derive(Debug, Clone, PartialEq)]
pub struct Sweep {
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    pub c21_sign: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub level: Level,
    pub domain: Domain,
    pub n: usize,
    /// Per seed, the expressions named by [`Level::seed_fields`].
    pub seeds: Vec<Vec<SeedExpr>>,
    pub u: SeedExpr,
    /// Dirac level only; the GA level uses `v = conj(u)`.
    pub v: SeedExpr,
    pub constants: Constants,
    pub basepoint: Option<Complex64>,
    pub eps_sing: f64,
    pub psi0: Option<Vec<SeedExpr>>,
    pub psip0: Option<Vec<SeedExpr>>,
    pub out_dir: PathBuf,
    /// Factor applied to ũ before verification.
    pub corrupt_u: f64,
    pub sweep: Option<Sweep>,
}

impl Config {
    pub fn from_flat(mut flat: Flat) -> Result<Config, ConfigError> {
        let level = match flat.take("level") {
            None => Level::Ga,
            Some(Value::String(s)) if s == "ga" => Level::Ga,
            Some(Value::String(s)) if s == "dirac" => Level::Dirac,
            Some(_) => return Err(invalid("level", "expected \"ga\" or \"dirac\"")),
        };
        let [x0, x1, y0, y1] = fixed_list::<4>("domain", &flat.take("domain").ok_or(ConfigError::Missing("domain".into()))?)?;
        let grid = flat.take("grid").ok_or(ConfigError::Missing("grid".into()))?;
        let [nx, ny] = match &grid {
            Value::Array(items) if items.len() == 2 => [as_usize("grid", &items[0])?, as_usize("grid", &items[1])?],
            _ => return Err(invalid("grid", "expected two integers")),
        };
        let domain = Domain::new(x0, x1, y0, y1, nx, ny).map_err(|e| invalid("domain", e.to_string()))?;

        let sweep = Self::sweep(&mut flat)?;
        let n = match flat.take("N") {
            Some(v) => as_usize("N", &v)?,
            None if sweep.is_some() => 0,
            None => return Err(ConfigError::Missing("N".into())),
        };

        let mut seeds = Vec::with_capacity(n);
        for j in 1..=n {
            let mut fields = Vec::new();
            for f in level.seed_fields() {
                let key = format!("seed.{j}.{f}");
                let v = flat.take(&key).ok_or_else(|| ConfigError::Missing(key.clone()))?;
                fields.push(expr(&key, &v)?);
            }
            seeds.push(fields);
        }
        if let Some(k) = flat.keys_with_prefix("seed.").into_iter().next() {
            return Err(ConfigError::Unknown(k));
        }

        let zero = SeedExpr::constant(Complex64::new(0.0, 0.0));
        let u = flat.take("u").map(|v| expr("u", &v)).transpose()?.unwrap_or_else(|| zero.clone());
        let v = flat.take("v").map(|v| expr("v", &v)).transpose()?;
        if level == Level::Ga && v.is_some() {
            return Err(invalid("v", "not used at level ga, where v = conj(u)"));
        }
        let v = v.unwrap_or(zero);

        let mut constants = Constants::zeros(n);
        for key in flat.keys_with_prefix("alpha.") {
            let idx: Vec<usize> = key["alpha.".len()..].split('.').map(str::parse).collect::<Result<_, _>>().map_err(|_| invalid(&key, "expected alpha.J.K"))?;
            let [j, k] = idx[..] else {
                return Err(invalid(&key, "expected alpha.J.K"));
            };
            if j > n || k > n || (j == 0 && k == 0) {
                return Err(invalid(&key, format!("indices must lie in 0..={n} and not both be 0")));
            }
            let val = flat.take(&key).expect("key listed above");
            constants.set(j, k, constant(&key, &val)?);
        }

        let basepoint = flat.take("basepoint").map(|v| fixed_list::<2>("basepoint", &v)).transpose()?.map(|[x, y]| Complex64::new(x, y));
        let eps_sing = flat.take("eps_sing").map(|v| as_f64("eps_sing", &v)).transpose()?.unwrap_or(DEFAULT_EPS_REL);
        if eps_sing.is_nan() || eps_sing <= 0.0 {
            return Err(invalid("eps_sing", "must be positive"));
        }

        let (psi_fields, psip_fields) = level.target_fields();
        let psi0 = Self::target(&mut flat, psi_fields)?;
        let psip0 = Self::target(&mut flat, psip_fields)?;
        if let Some(k) = flat.keys_with_prefix("target.").into_iter().next() {
            return Err(ConfigError::Unknown(k));
        }

        let out_dir = match flat.take("out_dir") {
            None => PathBuf::from("out"),
            Some(Value::String(s)) => PathBuf::from(s),
            Some(_) => return Err(invalid("out_dir", "expected a path string")),
        };
        let corrupt_u = flat.take("corrupt_u").map(|v| as_f64("corrupt_u", &v)).transpose()?.unwrap_or(1.0);

        flat.finish()?;
        Ok(Config { level, domain, n, seeds, u, v, constants, basepoint, eps_sing, psi0, psip0, out_dir, corrupt_u, sweep })
    }

    fn target(flat: &mut Flat, fields: &[&str]) -> Result<Option<Vec<SeedExpr>>, ConfigError> {
        let keys: Vec<String> = fields.iter().map(|f| format!("target.{f}")).collect();
        let present: Vec<Option<Value>> = keys.iter().map(|k| flat.take(k)).collect();
        if present.iter().all(Option::is_none) {
            return Ok(None);
        }
        keys.iter()
            .zip(present)
            .map(|(k, v)| expr(k, &v.ok_or_else(|| ConfigError::Missing(k.clone()))?))
            .collect::<Result<Vec<_>, _>>()
            .map(Some)
    }

    fn sweep(flat: &mut Flat) -> Result<Option<Sweep>, ConfigError> {
        let alpha = flat.take("sweep.alpha");
        let beta = flat.take("sweep.beta");
        let sign = flat.take("sweep.c21_sign");
        if alpha.is_none() && beta.is_none() && sign.is_none() {
            return Ok(None);
        }
        let beta = f64_list("sweep.beta", &beta.ok_or(ConfigError::Missing("sweep.beta".into()))?)?;
        let alpha = alpha.map(|v| f64_list("sweep.alpha", &v)).transpose()?.unwrap_or_else(|| vec![0.0]);
        let c21_sign = sign.map(|v| as_f64("sweep.c21_sign", &v)).transpose()?.unwrap_or(-1.0);
        if c21_sign != 1.0 && c21_sign != -1.0 {
            return Err(invalid("sweep.c21_sign", "must be 1 or -1"));
        }
        Ok(Some(Sweep { alpha, beta, c21_sign }))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const EX1: &str = r#"
        level = "ga"
        domain = [-1.0, 1.0, -0.4, 1.0]
        grid = [65, 65]
        N = 1
        seed.1.psi = "1"
        seed.1.psip = "1"
        alpha.1.1 = 1.0
        target.psi0 = "1"
        target.psip0 = "1"
        basepoint = [0.0, 0.0]
    "#;

    #[test]
    fn nested_and_dotted_keys_agree() {
        let a = Flat::parse("[seed.1]\npsi = \"z\"\n[alpha]\n\"1.1\" = 2").unwrap();
        let b = Flat::parse("\"seed.1.psi\" = \"z\"\n\"alpha.1.1\" = 2").unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn parses_example_config() {
        let c = Config::from_flat(Flat::parse(EX1).unwrap()).unwrap();
        assert_eq!(c.level, Level::Ga);
        assert_eq!(c.n, 1);
        assert_eq!(c.constants.get(1, 1), Complex64::new(0.0, 1.0));
        assert_eq!(c.basepoint, Some(Complex64::new(0.0, 0.0)));
        assert_eq!(c.domain.nx(), 65);
        assert!(c.psi0.is_some() && c.sweep.is_none());
    }

    #[test]
    fn overrides() {
        let mut f = Flat::parse(EX1).unwrap();
        f.set("grid=[33, 17]").unwrap();
        f.set("seed.1.psi = z^2").unwrap();
        f.set("alpha.1.1 = \"1+2i\"").unwrap();
        let c = Config::from_flat(f).unwrap();
        assert_eq!((c.domain.nx(), c.domain.ny()), (33, 17));
        assert_eq!(c.seeds[0][0].to_string(), "(z)^2");
        assert_eq!(c.constants.get(1, 1), Complex64::new(1.0, 2.0));
        assert!(matches!(Flat::parse(EX1).unwrap().set("nonsense"), Err(ConfigError::Override(_))));
    }

    #[test]
    fn rejects_bad_configs() {
        let with = |extra: &str| Config::from_flat(Flat::parse(&format!("{EX1}\n{extra}")).unwrap());
        assert!(matches!(with("colour = 3"), Err(ConfigError::Unknown(k)) if k == "colour"));
        assert!(matches!(with("seed.2.psi = \"z\""), Err(ConfigError::Unknown(_))));
        assert!(matches!(with("alpha.3.1 = 1"), Err(ConfigError::Invalid { .. })));
        assert!(matches!(with("v = \"z\""), Err(ConfigError::Invalid { key, .. }) if key == "v"));
        assert!(matches!(with("eps_sing = 0"), Err(ConfigError::Invalid { .. })));
        let mut f = Flat::parse(EX1).unwrap();
        f.set("seed.1.psi = \"sin(z)\"").unwrap();
        assert!(matches!(Config::from_flat(f), Err(ConfigError::Invalid { key, .. }) if key == "seed.1.psi"));
        let mut f = Flat::parse(EX1).unwrap();
        f.0.remove("N");
        assert!(matches!(Config::from_flat(f), Err(ConfigError::Missing(k)) if k == "N"));
        assert!(matches!(Flat::parse("grid = ["), Err(ConfigError::Toml(_))));
    }

    #[test]
    fn dirac_level_keys() {
        let text = r#"
            level = "dirac"
            domain = [-1, 1, -1, 1]
            grid = [9, 9]
            N = 1
            u = "1"
            v = "2"
            seed.1.psi1 = "1"
            seed.1.psi2 = "0"
            seed.1.psip1 = "0"
            seed.1.psip2 = "1"
            alpha.1.1 = "1+1i"
            target.psi0_1 = "z"
            target.psi0_2 = "0"
        "#;
        let c = Config::from_flat(Flat::parse(text).unwrap()).unwrap();
        assert_eq!(c.seeds[0].len(), 4);
        assert_eq!(c.psi0.as_ref().unwrap().len(), 2);
        assert!(c.psip0.is_none());
        let half = text.replace("target.psi0_2 = \"0\"", "");
        assert!(matches!(Config::from_flat(Flat::parse(&half).unwrap()), Err(ConfigError::Missing(k)) if k == "target.psi0_2"));
    }

    #[test]
    fn sweep_section() {
        let text = "domain = [-2, 2, -2, 2]\ngrid = [65, 65]\n[sweep]\nbeta = [1, 2, 3]\n";
        let c = Config::from_flat(Flat::parse(text).unwrap()).unwrap();
        assert_eq!(c.sweep.unwrap(), Sweep { alpha: vec![0.0], beta: vec![1.0, 2.0, 3.0], c21_sign: -1.0 });
        let bad = format!("{text}c21_sign = 2\n");
        assert!(Config::from_flat(Flat::parse(&bad).unwrap()).is_err());
    }
}
