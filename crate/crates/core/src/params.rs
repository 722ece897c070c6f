//! Model constants and the two strategy sets.

use std::fmt;
use std::str::FromStr;

use crate::config::{parse_integer, parse_real, KeyValueConfig};
use crate::error::{Error, Result};

/// Config-file keys for [`GameParams`], in canonical order.
pub const GAME_KEYS: [&str; 11] = [
    "b_u", "b_c", "c", "v", "mu", "eps", "p_T", "p_D", "theta_T", "theta_D", "r",
];

/// User strategies. The declaration order is the column order used in every
/// array and CSV file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum UserStrategy {
    /// Always adopt.
    AllA,
    /// Never adopt.
    AllN,
    /// Adopt first, monitor every round, copy the creator's last move.
    Tft,
    /// Trust-until-abused: TFT until `theta_T` cooperations, then check with
    /// probability `p_T`.
    Tua,
    /// Distrust-the-guilty: TFT until `theta_D` defections, then check with
    /// probability `p_D`.
    Dtg,
}

impl UserStrategy {
    pub const ALL: [UserStrategy; 5] = [
        UserStrategy::AllA,
        UserStrategy::AllN,
        UserStrategy::Tft,
        UserStrategy::Tua,
        UserStrategy::Dtg,
    ];

    /// The strategy set when trust-based strategies are switched off.
    pub const WITHOUT_TRUST: [UserStrategy; 3] =
        [UserStrategy::AllA, UserStrategy::AllN, UserStrategy::Tft];

    pub fn active(trust_enabled: bool) -> &'static [UserStrategy] {
        if trust_enabled {
            &Self::ALL
        } else {
            &Self::WITHOUT_TRUST
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            UserStrategy::AllA => "AllA",
            UserStrategy::AllN => "AllN",
            UserStrategy::Tft => "TFT",
            UserStrategy::Tua => "TUA",
            UserStrategy::Dtg => "DtG",
        }
    }

    /// True for the three strategies that monitor the creator.
    pub fn is_conditional(self) -> bool {
        matches!(self, UserStrategy::Tft | UserStrategy::Tua | UserStrategy::Dtg)
    }
}

impl fmt::Display for UserStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for UserStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        UserStrategy::ALL
            .into_iter()
            .find(|u| u.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidParams(format!("unknown user strategy {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CreatorStrategy {
    /// Safe, compliant development.
    C,
    /// Unsafe, non-compliant development.
    D,
}

impl CreatorStrategy {
    pub const ALL: [CreatorStrategy; 2] = [CreatorStrategy::C, CreatorStrategy::D];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            CreatorStrategy::C => "C",
            CreatorStrategy::D => "D",
        }
    }

    pub fn other(self) -> Self {
        match self {
            CreatorStrategy::C => CreatorStrategy::D,
            CreatorStrategy::D => CreatorStrategy::C,
        }
    }
}

impl fmt::Display for CreatorStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CreatorStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "C" | "c" => Ok(CreatorStrategy::C),
            "D" | "d" => Ok(CreatorStrategy::D),
            _ => Err(Error::InvalidParams(format!("unknown creator strategy {s:?}"))),
        }
    }
}

/// All constants of the repeated user-creator game.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GameParams {
    /// Benefit to a user adopting a safe technology (`b_u`).
    pub user_benefit: f64,
    /// Benefit to a creator whose technology is adopted (`b_c`).
    pub creator_benefit: f64,
    /// Extra cost of safe development (`c`).
    pub safety_cost: f64,
    /// Institutional punishment for unsafe development (`v`).
    pub punishment: f64,
    /// Risk multiplier on user benefit under unsafe AI (`mu`), at most 1.
    pub risk: f64,
    /// Cost per monitoring check (`eps`).
    pub monitoring_cost: f64,
    /// Checking probability of TUA once trusting (`p_T`).
    pub trust_check_prob: f64,
    /// Checking probability of DtG once distrusting (`p_D`).
    pub distrust_check_prob: f64,
    /// Cooperations TUA must observe before trusting (`theta_T`).
    pub trust_threshold: u32,
    /// Defections DtG must observe before distrusting (`theta_D`).
    pub distrust_threshold: u32,
    /// Rounds per repeated game (`r`).
    pub rounds: u32,
}

impl GameParams {
    /// The constants shared by all of the published parameterisations:
    /// `b_u = b_c = 4`, `c = 0.5`, `v = 0.1`, `mu = -0.2`, `r = 10`,
    /// thresholds 3 and checking probabilities 0.25. Monitoring cost is 0.
    pub fn reference() -> Self {
        Self {
            user_benefit: 4.0,
            creator_benefit: 4.0,
            safety_cost: 0.5,
            punishment: 0.1,
            risk: -0.2,
            monitoring_cost: 0.0,
            trust_check_prob: 0.25,
            distrust_check_prob: 0.25,
            trust_threshold: 3,
            distrust_threshold: 3,
            rounds: 10,
        }
    }

    pub fn with_monitoring_cost(mut self, eps: f64) -> Self {
        self.monitoring_cost = eps;
        self
    }

    pub fn with_punishment(mut self, v: f64) -> Self {
        self.punishment = v;
        self
    }

    pub fn with_risk(mut self, mu: f64) -> Self {
        self.risk = mu;
        self
    }

    pub fn with_safety_cost(mut self, c: f64) -> Self {
        self.safety_cost = c;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let reals = [
            ("b_u", self.user_benefit),
            ("b_c", self.creator_benefit),
            ("c", self.safety_cost),
            ("v", self.punishment),
            ("mu", self.risk),
            ("eps", self.monitoring_cost),
            ("p_T", self.trust_check_prob),
            ("p_D", self.distrust_check_prob),
        ];
        if let Some((k, x)) = reals.iter().find(|(_, x)| !x.is_finite()) {
            return Err(Error::InvalidParams(format!("{k} = {x} is not finite")));
        }
        let fail = |msg: String| Err(Error::InvalidParams(msg));
        if self.risk > 1.0 {
            return fail(format!("mu = {} must be at most 1", self.risk));
        }
        for (k, p) in [("p_T", self.trust_check_prob), ("p_D", self.distrust_check_prob)] {
            if !(0.0..=1.0).contains(&p) {
                return fail(format!("{k} = {p} must lie in [0, 1]"));
            }
        }
        for (k, x) in [
            ("eps", self.monitoring_cost),
            ("c", self.safety_cost),
            ("v", self.punishment),
        ] {
            if x < 0.0 {
                return fail(format!("{k} = {x} must be non-negative"));
            }
        }
        if self.rounds < 1 {
            return fail("r must be at least 1".into());
        }
        for (k, t) in [("theta_T", self.trust_threshold), ("theta_D", self.distrust_threshold)] {
            if t > self.rounds {
                return fail(format!("{k} = {t} exceeds r = {}", self.rounds));
            }
        }
        Ok(())
    }

    pub fn r(&self) -> f64 {
        f64::from(self.rounds)
    }

    /// Average per-round monitoring cost of TUA against a cooperator:
    /// `(theta_T eps + (r - theta_T) p_T eps) / r`.
    pub fn trust_monitoring(&self) -> f64 {
        let theta = f64::from(self.trust_threshold);
        let eps = self.monitoring_cost;
        (theta * eps + (self.r() - theta) * self.trust_check_prob * eps) / self.r()
    }

    /// Average per-round monitoring cost of DtG against a defector.
    pub fn distrust_monitoring(&self) -> f64 {
        let theta = f64::from(self.distrust_threshold);
        let eps = self.monitoring_cost;
        (theta * eps + (self.r() - theta) * self.distrust_check_prob * eps) / self.r()
    }

    /// Reads a parameter by its config key.
    pub fn get(&self, key: &str) -> Result<f64> {
        Ok(match key {
            "b_u" => self.user_benefit,
            "b_c" => self.creator_benefit,
            "c" => self.safety_cost,
            "v" => self.punishment,
            "mu" => self.risk,
            "eps" => self.monitoring_cost,
            "p_T" => self.trust_check_prob,
            "p_D" => self.distrust_check_prob,
            "theta_T" => f64::from(self.trust_threshold),
            "theta_D" => f64::from(self.distrust_threshold),
            "r" => self.r(),
            _ => return Err(Error::Config(format!("unknown parameter {key}"))),
        })
    }

    /// Sets a parameter by its config key. Integer-valued keys reject
    /// fractional values. Does not validate the result.
    pub fn set(&mut self, key: &str, value: f64) -> Result<()> {
        let as_int = |x: f64| -> Result<u32> {
            if x.fract() != 0.0 || !(0.0..=f64::from(u32::MAX)).contains(&x) {
                Err(Error::InvalidParams(format!("{key} = {x} must be a non-negative integer")))
            } else {
                Ok(x as u32)
            }
        };
        match key {
            "b_u" => self.user_benefit = value,
            "b_c" => self.creator_benefit = value,
            "c" => self.safety_cost = value,
            "v" => self.punishment = value,
            "mu" => self.risk = value,
            "eps" => self.monitoring_cost = value,
            "p_T" => self.trust_check_prob = value,
            "p_D" => self.distrust_check_prob = value,
            "theta_T" => self.trust_threshold = as_int(value)?,
            "theta_D" => self.distrust_threshold = as_int(value)?,
            "r" => self.rounds = as_int(value)?,
            _ => return Err(Error::Config(format!("unknown parameter {key}"))),
        }
        Ok(())
    }

    /// Builds parameters from a config. Every game key must be present;
    /// other keys are ignored so callers can share one file.
    pub fn from_config(cfg: &KeyValueConfig) -> Result<Self> {
        let real = |k: &str| -> Result<f64> {
            let v = cfg.get(k).ok_or_else(|| Error::Config(format!("missing key {k}")))?;
            parse_real(k, v)
        };
        let int = |k: &str| -> Result<u32> {
            let v = cfg.get(k).ok_or_else(|| Error::Config(format!("missing key {k}")))?;
            let n = parse_integer(k, v)?;
            u32::try_from(n).map_err(|_| Error::Config(format!("{k} = {n} is too large")))
        };
        let params = Self {
            user_benefit: real("b_u")?,
            creator_benefit: real("b_c")?,
            safety_cost: real("c")?,
            punishment: real("v")?,
            risk: real("mu")?,
            monitoring_cost: real("eps")?,
            trust_check_prob: real("p_T")?,
            distrust_check_prob: real("p_D")?,
            trust_threshold: int("theta_T")?,
            distrust_threshold: int("theta_D")?,
            rounds: int("r")?,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn from_config_str(text: &str) -> Result<Self> {
        let cfg = KeyValueConfig::parse(text)?;
        cfg.check_keys(&GAME_KEYS)?;
        Self::from_config(&cfg)
    }

    /// Renders the parameters in config-file form.
    pub fn to_config_string(&self) -> String {
        GAME_KEYS
            .iter()
            .map(|k| format!("{k}={}\n", self.get(k).expect("known key")))
            .collect()
    }
}

impl Default for GameParams {
    fn default() -> Self {
        Self::reference()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_is_valid() {
        GameParams::reference().validate().unwrap();
    }

    #[test]
    fn invariants_are_enforced() {
        let base = GameParams::reference();
        let bad = [
            GameParams { risk: 1.5, ..base },
            GameParams { trust_check_prob: 1.1, ..base },
            GameParams { distrust_check_prob: -0.1, ..base },
            GameParams { monitoring_cost: -1.0, ..base },
            GameParams { safety_cost: -1.0, ..base },
            GameParams { punishment: -1.0, ..base },
            GameParams { rounds: 0, ..base },
            GameParams { trust_threshold: 11, ..base },
            GameParams { distrust_threshold: 11, ..base },
            GameParams { user_benefit: f64::NAN, ..base },
        ];
        for p in bad {
            assert!(matches!(p.validate(), Err(Error::InvalidParams(_))), "{p:?}");
        }
        assert!(GameParams { risk: 1.0, trust_threshold: 10, ..base }.validate().is_ok());
    }

    #[test]
    fn config_round_trip() {
        let p = GameParams::reference().with_monitoring_cost(0.35).with_punishment(1.0);
        let back = GameParams::from_config_str(&p.to_config_string()).unwrap();
        assert_eq!(p, back);
    }

    #[test]
    fn config_rejects_fractional_threshold() {
        let text = GameParams::reference().to_config_string().replace("theta_T=3", "theta_T=3.5");
        assert!(GameParams::from_config_str(&text).is_err());
    }

    #[test]
    fn config_rejects_missing_and_unknown_keys() {
        let text = GameParams::reference().to_config_string();
        let missing: String = text.lines().filter(|l| !l.starts_with("mu=")).map(|l| format!("{l}\n")).collect();
        assert!(GameParams::from_config_str(&missing).is_err());
        assert!(GameParams::from_config_str(&format!("{text}beta=1\n")).is_err());
    }

    #[test]
    fn set_rejects_fractional_integers() {
        let mut p = GameParams::reference();
        assert!(p.set("r", 2.5).is_err());
        p.set("r", 20.0).unwrap();
        assert_eq!(p.rounds, 20);
        assert!(p.set("nope", 1.0).is_err());
    }

    #[test]
    fn strategy_order_is_fixed() {
        let names: Vec<_> = UserStrategy::ALL.iter().map(|u| u.name()).collect();
        assert_eq!(names, ["AllA", "AllN", "TFT", "TUA", "DtG"]);
        for (i, u) in UserStrategy::ALL.iter().enumerate() {
            assert_eq!(u.index(), i);
            assert_eq!(u.name().parse::<UserStrategy>().unwrap(), *u);
        }
        assert_eq!(CreatorStrategy::C.index(), 0);
        assert_eq!(CreatorStrategy::D.index(), 1);
    }
}
