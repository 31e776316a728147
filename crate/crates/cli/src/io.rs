//! JSON input specs.

use num_rational::BigRational;
use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};
use twwc::channel::{additive_to_tensor, AdditiveCoeffs, GaussianCoeffs};
use twwc::regions::fm::parse_rational;
use twwc::regions::{Inequality, Sense};
use twwc::{
    AdditiveChannelSpec, ChannelTensor, CondPmf, CostSpec, GaussianChannelSpec, InputMode, JointInputLaw, JointType,
    LinearSystem, Pmf, RateTuple,
};

use crate::CliError;

/// A number written as a JSON number or as a string such as `"1/3"` or `"0.25"`.
#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
pub enum RawNum {
    Num(serde_json::Number),
    Str(String),
}

impl RawNum {
    fn text(&self) -> String {
        match self {
            RawNum::Num(n) => n.to_string(),
            RawNum::Str(s) => s.clone(),
        }
    }

    pub fn rational(&self) -> Result<BigRational, CliError> {
        Ok(parse_rational(&self.text())?)
    }

    pub fn float(&self) -> Result<f64, CliError> {
        match self {
            RawNum::Num(n) => n.as_f64().ok_or_else(|| CliError::Input(format!("not a finite number: {n}"))),
            RawNum::Str(s) => self
                .rational()?
                .to_f64()
                .ok_or_else(|| CliError::Input(format!("not representable as a double: {s}"))),
        }
    }
}

fn floats(v: &[RawNum]) -> Result<Vec<f64>, CliError> {
    v.iter().map(RawNum::float).collect()
}

fn pmf(v: &[RawNum]) -> Result<Pmf, CliError> {
    Ok(Pmf::new(floats(v)?)?)
}

fn cond(rows: &[Vec<RawNum>]) -> Result<CondPmf, CliError> {
    Ok(CondPmf::new(rows.iter().map(|r| floats(r)).collect::<Result<_, _>>()?)?)
}

#[derive(Clone, Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum ChannelJson {
    Tensor { sizes: [usize; 5], probs: Vec<RawNum> },
    Additive { q: u64, coeffs: AdditiveCoeffs, noise: [Vec<RawNum>; 3] },
    Gaussian { coeffs: GaussianCoeffs, variances: [f64; 3] },
}

pub enum Channel {
    Tensor(ChannelTensor),
    Additive(AdditiveChannelSpec),
    Gaussian(GaussianChannelSpec),
}

impl ChannelJson {
    pub fn build(&self) -> Result<Channel, CliError> {
        Ok(match self {
            ChannelJson::Tensor { sizes, probs } => Channel::Tensor(ChannelTensor::new(*sizes, floats(probs)?)?),
            ChannelJson::Additive { q, coeffs, noise } => {
                let noise = [pmf(&noise[0])?, pmf(&noise[1])?, pmf(&noise[2])?];
                Channel::Additive(AdditiveChannelSpec::new(*q, *coeffs, noise)?)
            }
            ChannelJson::Gaussian { coeffs, variances } => Channel::Gaussian(GaussianChannelSpec::new(*coeffs, *variances)?),
        })
    }
}

impl Channel {
    /// Discrete tensor; additive channels are expanded.
    pub fn tensor(&self) -> Result<ChannelTensor, CliError> {
        match self {
            Channel::Tensor(t) => Ok(t.clone()),
            Channel::Additive(a) => Ok(additive_to_tensor(a)?),
            Channel::Gaussian(_) => Err(CliError::Input("this command needs a discrete channel".into())),
        }
    }
}

/// Either the full pre-processing structure or plain input laws with `V_i = X_i`.
#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
pub enum LawJson {
    Full { p_v1: Vec<RawNum>, x1_given_v1: Vec<Vec<RawNum>>, p_v2: Vec<RawNum>, x2_given_v2: Vec<Vec<RawNum>> },
    Identity { p_x1: Vec<RawNum>, p_x2: Vec<RawNum> },
}

impl LawJson {
    pub fn build(&self) -> Result<JointInputLaw, CliError> {
        Ok(match self {
            LawJson::Full { p_v1, x1_given_v1, p_v2, x2_given_v2 } => {
                JointInputLaw::new(pmf(p_v1)?, cond(x1_given_v1)?, pmf(p_v2)?, cond(x2_given_v2)?)?
            }
            LawJson::Identity { p_x1, p_x2 } => JointInputLaw::identity(pmf(p_x1)?, pmf(p_x2)?),
        })
    }
}

/// Joint types of `(V1, X1)` and `(V2, X2)` as count matrices.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TypesJson {
    pub t1: JointType,
    pub t2: JointType,
}

/// Codebook input mode: `types` selects constant composition, otherwise `law` (default uniform `V_i = X_i`).
pub fn input_mode(law: &Option<LawJson>, types: &Option<TypesJson>, t: &ChannelTensor) -> Result<InputMode, CliError> {
    match (law, types) {
        (Some(_), Some(_)) => Err(CliError::Input("give either \"law\" or \"types\", not both".into())),
        (_, Some(ty)) => Ok(InputMode::ConstantComposition { t1: ty.t1.clone(), t2: ty.t2.clone() }),
        (Some(l), None) => Ok(InputMode::Iid(l.build()?)),
        (None, None) => {
            let s = t.sizes();
            Ok(InputMode::Iid(JointInputLaw::identity(Pmf::uniform(s[0]), Pmf::uniform(s[1]))))
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeSharingJson {
    pub weights: Vec<RawNum>,
    pub budgets: Vec<[f64; 2]>,
    pub total: [f64; 2],
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegionSpec {
    pub channel: ChannelJson,
    pub flavor: Option<String>,
    pub law: Option<LawJson>,
    pub laws: Option<Vec<LawJson>>,
    pub cost: Option<CostSpec>,
    pub grid: Option<usize>,
    pub powers: Option<[f64; 2]>,
    pub budgets: Option<[f64; 2]>,
    pub time_sharing: Option<TimeSharingJson>,
}

impl TimeSharingJson {
    pub fn weights(&self) -> Result<Pmf, CliError> {
        pmf(&self.weights)
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExponentSpec {
    pub channel: ChannelJson,
    pub rates: RateTuple,
    pub n: usize,
    pub law: Option<LawJson>,
    pub types: Option<TypesJson>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateSpec {
    pub channel: ChannelJson,
    pub n: usize,
    #[serde(rename = "M")]
    pub messages: Option<[usize; 2]>,
    #[serde(rename = "L")]
    pub randomization: Option<[usize; 2]>,
    /// Alternative to `M`/`L`: `M_i = ceil(e^{n R_i})`, `L_i = ceil(e^{n r_i})`.
    pub rates: Option<RateTuple>,
    pub law: Option<LawJson>,
    pub types: Option<TypesJson>,
    pub trials: Option<usize>,
    pub leakage: Option<bool>,
}

impl SimulateSpec {
    pub fn counts(&self) -> Result<([usize; 2], [usize; 2]), CliError> {
        let from_rate = |r: f64| -> Result<usize, CliError> {
            let v = (self.n as f64 * r).exp().ceil();
            if !(v.is_finite() && v <= usize::MAX as f64) {
                return Err(CliError::Sizing(format!("e^(n*{r}) codewords is too many")));
            }
            Ok((v as usize).max(1))
        };
        match (&self.rates, self.messages, self.randomization) {
            (Some(r), None, None) => {
                r.validate()?;
                Ok(([from_rate(r.big_r1)?, from_rate(r.big_r2)?], [from_rate(r.r1)?, from_rate(r.r2)?]))
            }
            (None, Some(m), l) => Ok((m, l.unwrap_or([1, 1]))),
            (None, None, _) => Err(CliError::Input("give \"M\" (and optionally \"L\") or \"rates\"".into())),
            (Some(_), _, _) => Err(CliError::Input("give either \"rates\" or \"M\"/\"L\", not both".into())),
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResolvabilitySpec {
    pub channel: ChannelJson,
    pub n: usize,
    #[serde(rename = "L")]
    pub randomization: [usize; 2],
    pub law: Option<LawJson>,
    pub types: Option<TypesJson>,
    /// Sample this many codebooks instead of enumerating the ensemble.
    pub realizations: Option<usize>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GallagerSpec {
    pub channel: ChannelJson,
    pub n: usize,
    #[serde(rename = "N")]
    pub codewords: usize,
    /// User whose codeword is decoded; the other user's receiver does the decoding.
    pub user: Option<usize>,
    pub law: Option<LawJson>,
    pub types: Option<TypesJson>,
    pub realizations: Option<usize>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Arithmetic {
    #[default]
    Rational,
    Float,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InequalityJson {
    pub coeffs: Vec<RawNum>,
    pub sense: String,
    pub rhs: RawNum,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemJson {
    pub variables: Vec<String>,
    pub inequalities: Vec<InequalityJson>,
    #[serde(default)]
    pub eliminate: Vec<String>,
    #[serde(default)]
    pub arithmetic: Arithmetic,
}

impl SystemJson {
    pub fn rational(&self) -> Result<LinearSystem<BigRational>, CliError> {
        let ineqs = self
            .inequalities
            .iter()
            .map(|h| {
                let c = h.coeffs.iter().map(RawNum::rational).collect::<Result<_, _>>()?;
                Ok(Inequality::new(c, Sense::parse(&h.sense)?, h.rhs.rational()?))
            })
            .collect::<Result<_, CliError>>()?;
        Ok(LinearSystem::new(self.variables.clone(), ineqs)?)
    }

    pub fn float(&self) -> Result<LinearSystem<f64>, CliError> {
        let ineqs = self
            .inequalities
            .iter()
            .map(|h| Ok(Inequality::new(floats(&h.coeffs)?, Sense::parse(&h.sense)?, h.rhs.float()?)))
            .collect::<Result<_, CliError>>()?;
        Ok(LinearSystem::new(self.variables.clone(), ineqs)?)
    }
}

pub fn parse_json<T: for<'de> Deserialize<'de>>(text: &str, what: &str) -> Result<T, CliError> {
    serde_json::from_str(text).map_err(|e| CliError::Input(format!("{what}: {e}")))
}
