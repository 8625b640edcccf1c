//! Built-in example configurations.

use clap::ValueEnum;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Preset {
    /// One constant seed, c₁₁ = i: pole along the line y = −1/2.
    #[value(name = "ex1-line-pole")]
    Ex1LinePole,
    /// Two constant seeds, c₁₂ = −c₂₁ = 2i: pole along the unit circle.
    #[value(name = "ex2-circle-pole")]
    Ex2CirclePole,
}

impl Preset {
    pub fn toml(self) -> &'static str {
        match self {
            Preset::Ex1LinePole => EX1,
            Preset::Ex2CirclePole => EX2,
        }
    }
}

const EX1: &str = r#"
level = "ga"
domain = [-1.0, 1.0, -0.4, 1.0]
grid = [65, 65]
N = 1
basepoint = [0.0, 0.0]
out_dir = "out/ex1-line-pole"

[seed.1]
psi = "1"
psip = "1"

[alpha.1]
1 = 1.0

[target]
psi0 = "1"
psip0 = "1"
"#;

const EX2: &str = r#"
level = "ga"
domain = [-2.0, 2.0, -2.0, 2.0]
grid = [129, 129]
N = 2
basepoint = [0.0, 0.0]
out_dir = "out/ex2-circle-pole"

[seed.1]
psi = "1"
psip = "1"

[seed.2]
psi = "i"
psip = "i"

[alpha.1]
2 = 2.0

[alpha.2]
1 = -2.0

[target]
psi0 = "z"
psip0 = "1"
"#;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{Config, Flat};

    #[test]
    fn presets_parse() {
        for p in Preset::value_variants() {
            let c = Config::from_flat(Flat::parse(p.toml()).unwrap()).unwrap();
            assert!(c.out_dir.ends_with(p.to_possible_value().unwrap().get_name()));
        }
    }
}
