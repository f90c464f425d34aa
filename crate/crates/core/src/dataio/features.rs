//! Change transforms that turn a daily panel into the modeling dataset.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{DailyPanel, Dataset};
use crate::error::{Error, Result};

/// Name of the lagged-target feature appended when momentum is on.
pub const MOMENTUM_FEATURE: &str = "momentum";

pub const DEFAULT_WINDOW: usize = 22;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Transform {
    /// `ln v_t - ln v_{t-w}`
    Log,
    /// `v_t - v_{t-w}`
    Level,
    /// `ln(1 + v_t) - ln(1 + v_{t-w})`, for non-negative series with zeros.
    ZeroSafeLog,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Feature,
    Target,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct VariableSpec {
    pub transform: Transform,
    pub role: Role,
}

fn default_window() -> usize {
    DEFAULT_WINDOW
}

fn default_momentum() -> bool {
    true
}

/// Per-variable transforms plus the change window.
///
/// On disk this is a flat JSON object: one key per variable plus `window` and `momentum`.
/// Features are ordered by variable name.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransformSpec {
    #[serde(default = "default_window")]
    pub window: usize,
    #[serde(default = "default_momentum")]
    pub momentum: bool,
    #[serde(flatten)]
    pub variables: BTreeMap<String, VariableSpec>,
}

impl TransformSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        let spec: Self = serde_json::from_str(text)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.window == 0 {
            return Err(Error::Config("window must be at least 1".into()));
        }
        let targets = self
            .variables
            .values()
            .filter(|v| v.role == Role::Target)
            .count();
        if targets != 1 {
            return Err(Error::Config(format!(
                "transform spec needs exactly one target variable, found {targets}"
            )));
        }
        if self.momentum && self.variables.contains_key(MOMENTUM_FEATURE) {
            return Err(Error::Config(format!(
                "`{MOMENTUM_FEATURE}` is reserved for the lagged target change"
            )));
        }
        Ok(())
    }

    pub fn target(&self) -> Option<&str> {
        self.variables
            .iter()
            .find(|(_, v)| v.role == Role::Target)
            .map(|(k, _)| k.as_str())
    }

    /// Returns a copy whose target is `target`; the previous target is dropped.
    /// Used to swap between alternative targets that share a spec.
    pub fn with_target(&self, target: &str) -> Result<Self> {
        let mut spec = self.clone();
        let var = spec
            .variables
            .get(target)
            .copied()
            .ok_or_else(|| Error::Config(format!("target `{target}` not in transform spec")))?;
        spec.variables.retain(|_, v| v.role != Role::Target);
        spec.variables.insert(
            target.to_string(),
            VariableSpec {
                transform: var.transform,
                role: Role::Target,
            },
        );
        spec.validate()?;
        Ok(spec)
    }
}

/// Values on the scale whose window difference is the reported change.
fn transformed(panel: &DailyPanel, name: &str, transform: Transform) -> Result<Vec<f64>> {
    let col = panel
        .column(name)
        .ok_or_else(|| Error::Config(format!("variable `{name}` is not in the panel")))?;
    let dates = panel.calendar();
    let check = |ok: fn(f64) -> bool| -> Result<()> {
        match col.iter().position(|&v| !ok(v)) {
            Some(i) => Err(Error::Domain {
                variable: name.to_string(),
                date: dates[i],
                value: col[i],
            }),
            None => Ok(()),
        }
    };
    match transform {
        Transform::Level => Ok(col.to_vec()),
        Transform::Log => {
            check(|v| v > 0.0)?;
            Ok(col.iter().map(|v| v.ln()).collect())
        }
        Transform::ZeroSafeLog => {
            check(|v| v >= 0.0)?;
            Ok(col.iter().map(|v| v.ln_1p()).collect())
        }
    }
}

/// Window changes of every variable, with the lagged target change as `momentum`.
///
/// Row `t` of the result holds `s_t - s_{t-w}` for each transformed series `s`, with
/// offsets counted in panel rows. Leading rows whose lags fall before the panel start
/// are dropped.
pub fn build_features(panel: &DailyPanel, spec: &TransformSpec, target: &str) -> Result<Dataset> {
    spec.validate()?;
    let target_spec = spec
        .variables
        .get(target)
        .ok_or_else(|| Error::Config(format!("target `{target}` not in transform spec")))?;
    let w = spec.window;
    let first = if spec.momentum { 2 * w } else { w };
    let len = panel.len();
    if len <= first {
        return Err(Error::Coverage {
            series: target.to_string(),
            message: format!("panel of {len} rows is too short for a {w}-row window"),
        });
    }

    let features: Vec<(&String, &VariableSpec)> = spec
        .variables
        .iter()
        .filter(|(name, v)| v.role == Role::Feature && name.as_str() != target)
        .collect();
    let mut feature_names: Vec<String> = features.iter().map(|(n, _)| (*n).clone()).collect();
    let mut series = features
        .iter()
        .map(|(n, v)| transformed(panel, n, v.transform))
        .collect::<Result<Vec<_>>>()?;
    let target_series = transformed(panel, target, target_spec.transform)?;
    if spec.momentum {
        feature_names.push(MOMENTUM_FEATURE.to_string());
        // momentum at t is the target change over rows t-2w..t-w
        let lagged: Vec<f64> = (0..len)
            .map(|t| {
                if t >= w {
                    target_series[t - w]
                } else {
                    f64::NAN
                }
            })
            .collect();
        series.push(lagged);
    }

    let n = len - first;
    let d = series.len();
    let mut x = Vec::with_capacity(n * d);
    let mut y = Vec::with_capacity(n);
    for t in first..len {
        for s in &series {
            x.push(s[t] - s[t - w]);
        }
        y.push(target_series[t] - target_series[t - w]);
    }
    Dataset::new(
        panel.calendar()[first..].to_vec(),
        feature_names,
        x,
        y,
        target,
    )
}

/// Trailing 7-day mean of daily counts (shorter at the start), then `ln(1 + ·)`.
///
/// Zero counts map to zero, so the window change stays exactly zero while the
/// series is zero at both ends.
pub fn zero_safe_covid_transform(deaths: &[f64]) -> Result<Vec<f64>> {
    if let Some(i) = deaths.iter().position(|&v| !v.is_finite() || v < 0.0) {
        return Err(Error::DomainAt {
            position: i,
            value: deaths[i],
        });
    }
    const SPAN: usize = 7;
    let mut out = Vec::with_capacity(deaths.len());
    let mut sum = 0.0;
    for t in 0..deaths.len() {
        sum += deaths[t];
        if t >= SPAN {
            sum -= deaths[t - SPAN];
        }
        let count = (t + 1).min(SPAN);
        // recompute when the window is all zeros so drift cannot leave a residue
        let window = &deaths[t + 1 - count..=t];
        let ma = if window.iter().all(|&v| v == 0.0) {
            0.0
        } else {
            sum.max(0.0) / count as f64
        };
        out.push(ma.ln_1p());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::NaiveDate;

    fn panel(cols: &[(&str, Vec<f64>)]) -> DailyPanel {
        let n = cols[0].1.len();
        let d0 = NaiveDate::from_ymd_opt(2010, 1, 4).unwrap();
        DailyPanel::new(
            (0..n).map(|i| d0 + chrono::Days::new(i as u64)).collect(),
            cols.iter()
                .map(|(k, v)| (k.to_string(), v.clone()))
                .collect(),
        )
        .unwrap()
    }

    fn spec(vars: &[(&str, Transform, Role)], momentum: bool) -> TransformSpec {
        TransformSpec {
            window: 22,
            momentum,
            variables: vars
                .iter()
                .map(|(n, t, r)| {
                    (
                        n.to_string(),
                        VariableSpec {
                            transform: *t,
                            role: *r,
                        },
                    )
                })
                .collect(),
        }
    }

    #[test]
    fn log_and_level_changes() {
        let mut price = vec![100.0; 23];
        price[22] = 110.0;
        let mut rate = vec![0.5; 23];
        rate[22] = 0.75;
        let p = panel(&[("brent", price), ("ust2y", rate)]);
        let s = spec(
            &[
                ("brent", Transform::Log, Role::Target),
                ("ust2y", Transform::Level, Role::Feature),
            ],
            false,
        );
        let d = build_features(&p, &s, "brent").unwrap();
        assert_eq!(d.n_rows(), 1);
        assert!((d.y()[0] - 0.09531017980432493).abs() < 1e-15);
        assert!((d.value(0, 0) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn momentum_needs_two_windows() {
        let price: Vec<f64> = (0..45).map(|i| 50.0 + i as f64).collect();
        let p = panel(&[("brent", price.clone())]);
        let d = build_features(
            &p,
            &spec(&[("brent", Transform::Log, Role::Target)], true),
            "brent",
        )
        .unwrap();
        assert_eq!(d.n_rows(), 1);
        assert_eq!(d.feature_names(), [MOMENTUM_FEATURE]);
        let expect = price[22].ln() - price[0].ln();
        assert!((d.value(0, 0) - expect).abs() < 1e-15);
        assert!((d.y()[0] - (price[44].ln() - price[22].ln())).abs() < 1e-15);
    }

    #[test]
    fn constant_panel_gives_zero_dataset() {
        let p = panel(&[
            ("brent", vec![70.0; 80]),
            ("vix", vec![20.0; 80]),
            ("covid", vec![0.0; 80]),
        ]);
        let s = spec(
            &[
                ("brent", Transform::Log, Role::Target),
                ("vix", Transform::Level, Role::Feature),
                ("covid", Transform::ZeroSafeLog, Role::Feature),
            ],
            true,
        );
        let d = build_features(&p, &s, "brent").unwrap();
        assert_eq!(d.n_rows(), 80 - 44);
        assert!(d.x().iter().chain(d.y()).all(|&v| v == 0.0));
    }

    #[test]
    fn changes_depend_only_on_lag_rows() {
        let base: Vec<f64> = (0..90)
            .map(|i| 60.0 + (i as f64 * 0.37).sin() * 5.0)
            .collect();
        let s = spec(
            &[
                ("brent", Transform::Log, Role::Target),
                ("fx", Transform::Log, Role::Feature),
            ],
            true,
        );
        let fx: Vec<f64> = (0..90).map(|i| 100.0 + (i as f64 * 0.11).cos()).collect();
        let d0 = build_features(
            &panel(&[("brent", base.clone()), ("fx", fx.clone())]),
            &s,
            "brent",
        )
        .unwrap();
        let t = 70usize; // panel row
        let row = t - 44;
        for k in 0..90 {
            if [t, t - 22, t - 44].contains(&k) {
                continue;
            }
            let mut b = base.clone();
            let mut f = fx.clone();
            b[k] *= 1.5;
            f[k] *= 0.5;
            let d1 = build_features(&panel(&[("brent", b), ("fx", f)]), &s, "brent").unwrap();
            assert_eq!(d0.row(row), d1.row(row), "perturbing row {k}");
            assert_eq!(d0.y()[row], d1.y()[row]);
        }
    }

    #[test]
    fn nonpositive_log_is_domain_error() {
        let mut price = vec![10.0; 30];
        price[3] = 0.0;
        let p = panel(&[("brent", price)]);
        let err = build_features(
            &p,
            &spec(&[("brent", Transform::Log, Role::Target)], false),
            "brent",
        )
        .unwrap_err();
        match err {
            Error::Domain { variable, date, .. } => {
                assert_eq!(variable, "brent");
                assert_eq!(date, NaiveDate::from_ymd_opt(2010, 1, 7).unwrap());
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn covid_transform_cases() {
        assert!(zero_safe_covid_transform(&[0.0; 30])
            .unwrap()
            .iter()
            .all(|&v| v == 0.0));

        let e1 = std::f64::consts::E - 1.0;
        let w = zero_safe_covid_transform(&[e1; 30]).unwrap();
        assert!(w.iter().all(|&v| (v - 1.0).abs() < 1e-15));

        let mut step = vec![0.0; 40];
        step[15..].iter_mut().for_each(|v| *v = e1);
        let w = zero_safe_covid_transform(&step).unwrap();
        assert!((w[37] - 1.0).abs() < 1e-12);
        assert!((w[15] - (e1 / 7.0).ln_1p()).abs() < 1e-15);
        assert_eq!(w[14], 0.0);

        assert!(zero_safe_covid_transform(&[1.0, -1.0]).is_err());
    }

    #[test]
    fn spec_json_round_trip() {
        let text = r#"{"brent": {"transform": "log", "role": "target"},
                       "ust2y": {"transform": "level", "role": "feature"},
                       "covid": {"transform": "zero_safe_log", "role": "feature"},
                       "window": 22, "momentum": true}"#;
        let s = TransformSpec::from_json(text).unwrap();
        assert_eq!(s.window, 22);
        assert_eq!(s.target(), Some("brent"));
        assert_eq!(s.variables["covid"].transform, Transform::ZeroSafeLog);
        assert!(TransformSpec::from_json(
            r#"{"window": 0, "a": {"transform": "log", "role": "target"}}"#
        )
        .is_err());
        assert!(
            TransformSpec::from_json(r#"{"a": {"transform": "log", "role": "feature"}}"#).is_err()
        );
    }
}
