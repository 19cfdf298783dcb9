use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::numeric::xlnx;

/// Slack used when a cumulative mass is compared against a threshold.
const MASS_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Scaling {
    Identity,
    /// `p^(1/tau)`, renormalized.
    Temperature(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Truncation {
    None,
    TopK(usize),
    Nucleus(f64),
    Eta(f64),
    Typical(f64),
}

/// Which of scaling and truncation sees the raw distribution first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Composition {
    /// Truncate the temperature-scaled, renormalized vector.
    #[default]
    ScaleThenTruncate,
    /// Truncate on the raw vector, then weight survivors by the scaled vector.
    TruncateThenScale,
}

/// A sampling adaptor: scaling rule plus truncation rule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransformFunction {
    pub scaling: Scaling,
    pub truncation: Truncation,
    pub composition: Composition,
}

impl Default for TransformFunction {
    fn default() -> Self {
        Self::ancestral()
    }
}

/// Symbol order by descending probability, ties to the lower index.
fn by_probability(dist: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..dist.len()).collect();
    idx.sort_by(|&a, &b| dist[b].total_cmp(&dist[a]).then(a.cmp(&b)));
    idx
}

fn take_until_mass(order: &[usize], dist: &[f64], pi: f64) -> Vec<bool> {
    let mut keep = vec![false; dist.len()];
    let mut cum = 0.0;
    for &i in order {
        if cum >= pi - MASS_SLACK {
            break;
        }
        keep[i] = true;
        cum += dist[i];
    }
    keep
}

/// Shannon entropy of a next-symbol distribution, nats.
pub fn step_entropy(dist: &[f64]) -> f64 {
    -dist.iter().map(|&p| xlnx(p)).sum::<f64>()
}

/// The threshold of eta truncation: `min(eps, sqrt(eps) exp(-H))`.
pub fn eta_threshold(eps: f64, dist: &[f64]) -> f64 {
    eps.min(eps.sqrt() * (-step_entropy(dist)).exp())
}

impl Truncation {
    /// Membership mask of the truncation set.
    pub fn mask(&self, dist: &[f64]) -> Vec<bool> {
        match *self {
            Truncation::None => vec![true; dist.len()],
            Truncation::TopK(k) => {
                let mut keep = vec![false; dist.len()];
                for &i in by_probability(dist).iter().take(k) {
                    keep[i] = true;
                }
                keep
            }
            Truncation::Nucleus(pi) => take_until_mass(&by_probability(dist), dist, pi),
            Truncation::Eta(eps) => {
                let eta = eta_threshold(eps, dist);
                dist.iter().map(|&p| p > eta).collect()
            }
            Truncation::Typical(pi) => {
                let h = step_entropy(dist);
                let mut idx: Vec<usize> = (0..dist.len()).filter(|&i| dist[i] > 0.0).collect();
                idx.sort_by(|&a, &b| {
                    let da = (h + dist[a].ln()).abs();
                    let db = (h + dist[b].ln()).abs();
                    da.total_cmp(&db).then(a.cmp(&b))
                });
                take_until_mass(&idx, dist, pi)
            }
        }
    }

    /// Indices in the truncation set.
    pub fn set(&self, dist: &[f64]) -> Vec<usize> {
        self.mask(dist).iter().enumerate().filter(|(_, &k)| k).map(|(i, _)| i).collect()
    }

    fn validate(&self) -> Result<()> {
        let ok = match *self {
            Truncation::None => true,
            Truncation::TopK(k) => k >= 1,
            Truncation::Nucleus(pi) | Truncation::Typical(pi) => pi > 0.0 && pi <= 1.0,
            Truncation::Eta(eps) => eps > 0.0 && eps.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Parse(format!("parameter out of range in `{self}`")))
        }
    }
}

impl Scaling {
    /// Scaled and renormalized vector.
    pub fn apply(&self, dist: &[f64]) -> Vec<f64> {
        match *self {
            Scaling::Identity => dist.to_vec(),
            Scaling::Temperature(tau) => {
                // log-space power keeps tiny probabilities from underflowing early
                let logs: Vec<f64> =
                    dist.iter().map(|&p| if p > 0.0 { p.ln() / tau } else { f64::NEG_INFINITY }).collect();
                let max = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let w: Vec<f64> = logs.iter().map(|&l| (l - max).exp()).collect();
                let z: f64 = w.iter().sum();
                w.into_iter().map(|v| v / z).collect()
            }
        }
    }

    pub fn temperature(&self) -> f64 {
        match *self {
            Scaling::Identity => 1.0,
            Scaling::Temperature(t) => t,
        }
    }
}

impl TransformFunction {
    pub fn new(scaling: Scaling, truncation: Truncation) -> Result<Self> {
        if let Scaling::Temperature(t) = scaling {
            if !(t > 0.0 && t.is_finite()) {
                return Err(Error::Parse(format!("temperature {t} must be positive")));
            }
        }
        truncation.validate()?;
        let scaling = match scaling {
            Scaling::Temperature(1.0) => Scaling::Identity,
            s => s,
        };
        Ok(TransformFunction { scaling, truncation, composition: Composition::default() })
    }

    pub fn ancestral() -> Self {
        TransformFunction {
            scaling: Scaling::Identity,
            truncation: Truncation::None,
            composition: Composition::default(),
        }
    }

    pub fn top_k(k: usize) -> Self {
        Self::new(Scaling::Identity, Truncation::TopK(k)).expect("k >= 1")
    }

    pub fn with_temperature(self, tau: f64) -> Result<Self> {
        let mut t = Self::new(Scaling::Temperature(tau), self.truncation)?;
        t.composition = self.composition;
        Ok(t)
    }

    pub fn with_composition(mut self, composition: Composition) -> Self {
        self.composition = composition;
        self
    }

    pub fn temperature(&self) -> f64 {
        self.scaling.temperature()
    }

    /// Whether the transform leaves every distribution unchanged.
    pub fn is_identity(&self) -> bool {
        self.scaling == Scaling::Identity && self.truncation == Truncation::None
    }

    /// Truncation set, computed on the vector the composition order says.
    pub fn truncation_set(&self, dist: &[f64]) -> Vec<usize> {
        match self.composition {
            Composition::ScaleThenTruncate => self.truncation.set(&self.scaling.apply(dist)),
            Composition::TruncateThenScale => self.truncation.set(dist),
        }
    }

    /// Non-negative weights over the augmented alphabet:
    /// `kappa(dist)(y) * [y in C]`.
    pub fn step(&self, dist: &[f64]) -> Result<Vec<f64>> {
        let scaled = self.scaling.apply(dist);
        let mask = match self.composition {
            Composition::ScaleThenTruncate => self.truncation.mask(&scaled),
            Composition::TruncateThenScale => self.truncation.mask(dist),
        };
        let w: Vec<f64> = scaled.iter().zip(&mask).map(|(&p, &k)| if k { p } else { 0.0 }).collect();
        if w.iter().all(|&v| v <= 0.0) {
            return Err(Error::DegenerateAdaptor(format!("`{self}` kept no mass")));
        }
        Ok(w)
    }

    /// Label of the truncation rule alone, used for grouping sweep rows.
    pub fn family(&self) -> String {
        TransformFunction { scaling: Scaling::Identity, ..*self }.to_string()
    }
}

impl fmt::Display for Truncation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Truncation::None => write!(f, "ancestral"),
            Truncation::TopK(k) => write!(f, "topk:k={k}"),
            Truncation::Nucleus(pi) => write!(f, "nucleus:pi={pi}"),
            Truncation::Eta(eps) => write!(f, "eta:eps={eps}"),
            Truncation::Typical(pi) => write!(f, "typical:pi={pi}"),
        }
    }
}

impl fmt::Display for TransformFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.truncation)?;
        let mut sep = if self.truncation == Truncation::None { ':' } else { ',' };
        if let Scaling::Temperature(t) = self.scaling {
            write!(f, "{sep}temp={t}")?;
            sep = ',';
        }
        if self.composition == Composition::TruncateThenScale {
            write!(f, "{sep}order=truncate-first")?;
        }
        Ok(())
    }
}

/// Grammar, case-insensitive:
///
/// ```text
/// spec   := kind [ ":" param ( "," param )* ]
/// kind   := "ancestral" | "topk" | "nucleus" | "eta" | "typical"
/// param  := key "=" value
/// key    := "k" (topk) | "pi" (nucleus, typical) | "eps" (eta)
///         | "temp" (any) | "order" = "scale-first" | "truncate-first"
/// ```
///
/// Ranges: `k >= 1`, `pi` in `(0, 1]`, `eps > 0`, `temp > 0`.
impl FromStr for TransformFunction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        let (kind, rest) = match lower.split_once(':') {
            Some((k, r)) => (k.trim().to_string(), Some(r.to_string())),
            None => (lower.clone(), None),
        };
        let mut k = None;
        let mut pi = None;
        let mut eps = None;
        let mut temp = None;
        let mut composition = Composition::default();
        for param in rest.iter().flat_map(|r| r.split(',')) {
            let param = param.trim();
            if param.is_empty() {
                continue;
            }
            let (key, value) =
                param.split_once('=').ok_or_else(|| Error::Parse(format!("expected key=value, got `{param}`")))?;
            let key = key.trim();
            let value = value.trim();
            let num = || value.parse::<f64>().map_err(|_| Error::Parse(format!("bad number `{value}` for `{key}`")));
            match key {
                "k" => {
                    k = Some(
                        value.parse::<usize>().map_err(|_| Error::Parse(format!("bad integer `{value}` for `k`")))?,
                    )
                }
                "pi" => pi = Some(num()?),
                "eps" => eps = Some(num()?),
                "temp" | "tau" | "t" => temp = Some(num()?),
                "order" => {
                    composition = match value {
                        "scale-first" => Composition::ScaleThenTruncate,
                        "truncate-first" => Composition::TruncateThenScale,
                        _ => return Err(Error::Parse(format!("unknown order `{value}`"))),
                    }
                }
                _ => return Err(Error::Parse(format!("unknown parameter `{key}` in `{s}`"))),
            }
        }
        let missing = |name: &str| Error::Parse(format!("`{kind}` needs `{name}`"));
        let stray = |name: &str, v: bool| {
            if v {
                Err(Error::Parse(format!("`{name}` does not apply to `{kind}`")))
            } else {
                Ok(())
            }
        };
        let truncation = match kind.as_str() {
            "ancestral" | "none" => {
                stray("k", k.is_some())?;
                stray("pi", pi.is_some())?;
                stray("eps", eps.is_some())?;
                Truncation::None
            }
            "topk" | "top-k" | "top_k" => {
                stray("pi", pi.is_some())?;
                stray("eps", eps.is_some())?;
                Truncation::TopK(k.ok_or_else(|| missing("k"))?)
            }
            "nucleus" | "topp" | "top-p" => {
                stray("k", k.is_some())?;
                stray("eps", eps.is_some())?;
                Truncation::Nucleus(pi.ok_or_else(|| missing("pi"))?)
            }
            "eta" => {
                stray("k", k.is_some())?;
                stray("pi", pi.is_some())?;
                Truncation::Eta(eps.ok_or_else(|| missing("eps"))?)
            }
            "typical" => {
                stray("k", k.is_some())?;
                stray("eps", eps.is_some())?;
                Truncation::Typical(pi.ok_or_else(|| missing("pi"))?)
            }
            other => return Err(Error::Parse(format!("unknown adaptor `{other}`"))),
        };
        let scaling = match temp {
            Some(t) => Scaling::Temperature(t),
            None => Scaling::Identity,
        };
        Ok(TransformFunction::new(scaling, truncation)?.with_composition(composition))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const ROW_A: [f64; 4] = [0.4, 0.1, 0.1, 0.4];

    #[test]
    fn top2_on_reversal_row() {
        assert_eq!(TransformFunction::top_k(2).step(&ROW_A).unwrap(), vec![0.4, 0.0, 0.0, 0.4]);
        assert_eq!(Truncation::TopK(1).set(&ROW_A), vec![0]);
    }

    #[test]
    fn identity_transforms() {
        for spec in ["nucleus:pi=1.0", "topk:k=4", "ancestral:temp=1", "ancestral"] {
            let t: TransformFunction = spec.parse().unwrap();
            assert_eq!(t.step(&ROW_A).unwrap(), ROW_A.to_vec(), "{spec}");
        }
    }

    #[test]
    fn nucleus_tie_break() {
        let t: TransformFunction = "nucleus:pi=0.9".parse().unwrap();
        assert_eq!(t.step(&ROW_A).unwrap(), vec![0.4, 0.1, 0.0, 0.4]);
    }

    #[test]
    fn eta_threshold_by_hand() {
        let d = [0.7, 0.3];
        let h = -(0.7f64 * 0.7f64.ln() + 0.3 * 0.3f64.ln());
        let eta = 0.04f64.min(0.2 * (-h).exp());
        assert!((eta_threshold(0.04, &d) - eta).abs() < 1e-15);
        assert_eq!(Truncation::Eta(0.04).set(&d), vec![0, 1]);
        // a large eps cuts the smaller symbol: eta = sqrt(0.5) e^-H ~ 0.38
        assert_eq!(Truncation::Eta(0.5).set(&d), vec![0]);
    }

    #[test]
    fn typical_keeps_closest_to_entropy() {
        let d = [0.5, 0.25, 0.125, 0.125];
        // H = 1.75 bits; -log2 p = 1, 2, 3, 3 so distances 0.75, 0.25, 1.25, 1.25
        let set = Truncation::Typical(0.7).set(&d);
        assert_eq!(set, vec![0, 1]);
        let set = Truncation::Typical(0.8).set(&d);
        assert_eq!(set, vec![0, 1, 2]);
    }

    #[test]
    fn temperature_scales_then_truncates() {
        let t: TransformFunction = "topk:k=2,temp=0.5".parse().unwrap();
        let w = t.step(&[0.5, 0.3, 0.2]).unwrap();
        let z = 0.25 + 0.09 + 0.04;
        assert!((w[0] - 0.25 / z).abs() < 1e-15 && (w[1] - 0.09 / z).abs() < 1e-15 && w[2] == 0.0);
        let both = t.with_composition(Composition::TruncateThenScale);
        assert_eq!(both.truncation_set(&[0.5, 0.3, 0.2]), vec![0, 1]);
    }

    #[test]
    fn grammar() {
        let t: TransformFunction = "TopK:K=30,Temp=1.25".parse().unwrap();
        assert_eq!(t.truncation, Truncation::TopK(30));
        assert_eq!(t.temperature(), 1.25);
        assert_eq!(t.to_string(), "topk:k=30,temp=1.25");
        for s in ["nucleus:pi=0.95", "eta:eps=0.0009", "typical:pi=0.95", "ancestral", "ancestral:temp=1.5"] {
            let t: TransformFunction = s.parse().unwrap();
            assert_eq!(t.to_string(), s);
            assert_eq!(t.to_string().parse::<TransformFunction>().unwrap(), t);
        }
        for bad in
            ["nucleus:pi=1.5", "topk:k=0", "eta:eps=-1", "topk", "beam:k=3", "topk:k=2,pi=0.5", "nucleus:pi=0.9,temp=0"]
        {
            assert!(matches!(bad.parse::<TransformFunction>(), Err(Error::Parse(_))), "{bad}");
        }
        let e = "beam:k=3".parse::<TransformFunction>().unwrap_err().to_string();
        assert!(e.contains("beam"));
    }

    #[test]
    fn degenerate() {
        let t: TransformFunction = "eta:eps=4".parse().unwrap();
        assert!(matches!(t.step(&[0.5, 0.5]), Err(Error::DegenerateAdaptor(_))));
    }
}
