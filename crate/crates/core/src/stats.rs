//! Confidence intervals and verdicts for Monte Carlo checks of one-sided
//! bounds. A sampled bound can be refuted but never proven, so a verdict is
//! `Violation` only when the whole 99% interval sits on the wrong side.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::Result;

/// Two-sided 99% normal quantile.
pub const Z99: f64 = 2.575_829_303_548_900_4;

/// Fewer usable trials than this yields `InsufficientData`.
pub const MIN_TRIALS: u64 = 30;

/// Wilson score interval for `successes / trials` at normal quantile `z`.
pub fn wilson_interval(successes: u64, trials: u64, z: f64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((center - half).max(0.0), (center + half).min(1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanEstimate {
    pub n: u64,
    #[serde(with = "flagged_f64")]
    pub mean: f64,
    #[serde(with = "flagged_f64")]
    pub std_err: f64,
}

impl MeanEstimate {
    pub fn from_samples(samples: &[f64]) -> Self {
        let n = samples.len();
        if n == 0 {
            return MeanEstimate {
                n: 0,
                mean: 0.0,
                std_err: f64::INFINITY,
            };
        }
        let k = n as f64;
        let mean = samples.iter().sum::<f64>() / k;
        let var = if n > 1 {
            samples.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (k - 1.0)
        } else {
            f64::INFINITY
        };
        MeanEstimate {
            n: n as u64,
            mean,
            std_err: (var / k).sqrt(),
        }
    }

    /// Normal-approximation interval `mean +- z * std_err`.
    pub fn interval(&self, z: f64) -> (f64, f64) {
        (self.mean - z * self.std_err, self.mean + z * self.std_err)
    }
}

/// Direction of the bound being checked.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Claim {
    /// The quantity is claimed to be at least the bound.
    AtLeast,
    /// The quantity is claimed to be at most the bound.
    AtMost,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Consistent,
    Violation,
    InsufficientData,
}

/// JSON for floats that may be infinite: finite values stay numbers, others
/// become the strings `"inf"`, `"-inf"` or `"nan"` instead of a silent `null`.
pub mod flagged_f64 {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
        if x.is_finite() {
            s.serialize_f64(*x)
        } else if x.is_nan() {
            s.serialize_str("nan")
        } else if *x > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_str("-inf")
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Raw {
        Num(f64),
        Text(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Raw::deserialize(d)? {
            Raw::Num(x) => Ok(x),
            Raw::Text(t) => match t.as_str() {
                "inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                "nan" => Ok(f64::NAN),
                other => Err(serde::de::Error::custom(format!("not a number: {other}"))),
            },
        }
    }
}

/// Outcome of one lemma check on one layer. Frequency checks fill
/// `successes`; expectation checks leave it empty and report a mean.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LemmaStats {
    pub lemma: String,
    pub layer: Option<usize>,
    pub trials: u64,
    pub successes: Option<u64>,
    #[serde(with = "flagged_f64")]
    pub estimate: f64,
    #[serde(with = "flagged_f64")]
    pub lo99: f64,
    #[serde(with = "flagged_f64")]
    pub hi99: f64,
    #[serde(with = "flagged_f64")]
    pub bound: f64,
    pub claim: Claim,
    pub verdict: Verdict,
}

impl LemmaStats {
    pub fn frequency(
        lemma: &str,
        layer: Option<usize>,
        successes: u64,
        trials: u64,
        bound: f64,
    ) -> Self {
        let (lo99, hi99) = wilson_interval(successes, trials, Z99);
        let estimate = if trials == 0 {
            0.0
        } else {
            successes as f64 / trials as f64
        };
        let mut s = LemmaStats {
            lemma: lemma.to_string(),
            layer,
            trials,
            successes: Some(successes),
            estimate,
            lo99,
            hi99,
            bound,
            claim: Claim::AtLeast,
            verdict: Verdict::InsufficientData,
        };
        s.verdict = s.judge();
        s
    }

    pub fn mean(lemma: &str, layer: Option<usize>, samples: &[f64], bound: f64) -> Self {
        let est = MeanEstimate::from_samples(samples);
        let (lo99, hi99) = est.interval(Z99);
        let mut s = LemmaStats {
            lemma: lemma.to_string(),
            layer,
            trials: est.n,
            successes: None,
            estimate: est.mean,
            lo99,
            hi99,
            bound,
            claim: Claim::AtMost,
            verdict: Verdict::InsufficientData,
        };
        s.verdict = s.judge();
        s
    }

    fn judge(&self) -> Verdict {
        if self.trials < MIN_TRIALS || !self.lo99.is_finite() || !self.hi99.is_finite() {
            return Verdict::InsufficientData;
        }
        let violated = match self.claim {
            Claim::AtLeast => self.hi99 < self.bound,
            Claim::AtMost => self.lo99 > self.bound,
        };
        if violated {
            Verdict::Violation
        } else {
            Verdict::Consistent
        }
    }

    /// The whole interval lies on the claimed side of the bound.
    pub fn confirmed(&self) -> bool {
        self.verdict == Verdict::Consistent
            && match self.claim {
                Claim::AtLeast => self.lo99 >= self.bound,
                Claim::AtMost => self.hi99 <= self.bound,
            }
    }
}

#[derive(Serialize)]
struct ReportRecord<'a> {
    lemma: &'a str,
    layer: Option<usize>,
    trials: u64,
    successes: Option<u64>,
    #[serde(serialize_with = "flagged_f64::serialize")]
    estimate: f64,
    #[serde(serialize_with = "flagged_f64::serialize")]
    lo99: f64,
    #[serde(serialize_with = "flagged_f64::serialize")]
    hi99: f64,
    #[serde(serialize_with = "flagged_f64::serialize")]
    bound: f64,
    verdict: Verdict,
}

/// Lemma report: one JSON object per line.
pub fn write_lemma_report<W: Write>(stats: &[LemmaStats], mut out: W) -> Result<()> {
    for s in stats {
        let rec = ReportRecord {
            lemma: &s.lemma,
            layer: s.layer,
            trials: s.trials,
            successes: s.successes,
            estimate: s.estimate,
            lo99: s.lo99,
            hi99: s.hi99,
            bound: s.bound,
            verdict: s.verdict,
        };
        let line = serde_json::to_string(&rec).expect("report records are always serializable");
        writeln!(out, "{line}")?;
    }
    Ok(())
}
