use serde::{Deserialize, Serialize};

/// The scalar function `h` of a predicate `h(s) > threshold`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PredicateFn {
    /// `h(s) = coeffs · s + offset`.
    Affine { coeffs: Vec<f64>, offset: f64 },
    /// `h(s) = 2 · sign · ‖s[axes] − center‖`.
    ///
    /// The factor 2 cancels the ½ of the predicate robustness so that a ball
    /// of radius `r` with scale `r` has robustness `(r − d) / r`.
    Distance {
        axes: Vec<usize>,
        center: Vec<f64>,
        sign: f64,
    },
    /// `h(s) = 2 · sign · sd(s[axes])`, with `sd` the signed distance to the
    /// box `[min, max]` (negative inside).
    BoxDistance {
        axes: Vec<usize>,
        min: Vec<f64>,
        max: Vec<f64>,
        sign: f64,
    },
}

/// Axis-aligned box or ball over a subset of state axes, used to bias sampling.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegionHint {
    Box {
        axes: Vec<usize>,
        min: Vec<f64>,
        max: Vec<f64>,
    },
    Ball {
        axes: Vec<usize>,
        center: Vec<f64>,
        radius: f64,
    },
}

impl RegionHint {
    pub fn axes(&self) -> &[usize] {
        match self {
            RegionHint::Box { axes, .. } | RegionHint::Ball { axes, .. } => axes,
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        match self {
            RegionHint::Box { axes, min, max } => {
                if axes.is_empty() || axes.len() != min.len() || axes.len() != max.len() {
                    return Err("box hint needs matching axes/min/max lengths".into());
                }
                if min.iter().zip(max).any(|(lo, hi)| !(lo <= hi)) {
                    return Err("box hint has min > max".into());
                }
            }
            RegionHint::Ball {
                axes,
                center,
                radius,
            } => {
                if axes.is_empty() || axes.len() != center.len() {
                    return Err("ball hint needs matching axes/center lengths".into());
                }
                if !(*radius > 0.0) {
                    return Err("ball hint radius must be positive".into());
                }
            }
        }
        Ok(())
    }

    pub fn contains(&self, s: &[f64]) -> bool {
        match self {
            RegionHint::Box { axes, min, max } => axes
                .iter()
                .zip(min.iter().zip(max))
                .all(|(&a, (lo, hi))| s[a] >= *lo && s[a] <= *hi),
            RegionHint::Ball {
                axes,
                center,
                radius,
            } => {
                let d2: f64 = axes
                    .iter()
                    .zip(center)
                    .map(|(&a, c)| (s[a] - c).powi(2))
                    .sum();
                d2 <= radius * radius
            }
        }
    }
}

/// An atomic proposition `h(s) > threshold` with a normalization scale.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Predicate {
    pub id: String,
    pub h: PredicateFn,
    pub threshold: f64,
    /// Robustness is `clamp((h(s) − threshold) / (2 · scale), −1, 1)`.
    pub scale: f64,
    pub region_hint: Option<RegionHint>,
    /// Set when this predicate is the parse-time negation of the declared one.
    #[serde(default)]
    pub negated: bool,
}

impl Predicate {
    pub fn affine(id: impl Into<String>, coeffs: Vec<f64>, offset: f64, threshold: f64) -> Self {
        Predicate {
            id: id.into(),
            h: PredicateFn::Affine { coeffs, offset },
            threshold,
            scale: 1.0,
            region_hint: None,
            negated: false,
        }
    }

    /// Inside (`inside = true`) or outside a ball over `axes`.
    pub fn ball(
        id: impl Into<String>,
        axes: Vec<usize>,
        center: Vec<f64>,
        radius: f64,
        inside: bool,
    ) -> Self {
        let sign = if inside { -1.0 } else { 1.0 };
        Predicate {
            id: id.into(),
            h: PredicateFn::Distance { axes, center, sign },
            threshold: 2.0 * sign * radius,
            scale: 1.0,
            region_hint: None,
            negated: false,
        }
    }

    /// Inside (`inside = true`) or outside an axis-aligned box over `axes`.
    pub fn boxed(
        id: impl Into<String>,
        axes: Vec<usize>,
        min: Vec<f64>,
        max: Vec<f64>,
        inside: bool,
    ) -> Self {
        Predicate {
            id: id.into(),
            h: PredicateFn::BoxDistance {
                axes,
                min,
                max,
                sign: if inside { -1.0 } else { 1.0 },
            },
            threshold: 0.0,
            scale: 1.0,
            region_hint: None,
            negated: false,
        }
    }

    pub fn with_scale(mut self, scale: f64) -> Self {
        self.scale = scale;
        self
    }

    pub fn with_hint(mut self, hint: RegionHint) -> Self {
        self.region_hint = Some(hint);
        self
    }

    pub fn validate(&self) -> Result<(), String> {
        if !(self.scale > 0.0) || !self.scale.is_finite() {
            return Err(format!("predicate `{}`: scale must be positive", self.id));
        }
        if let PredicateFn::Distance { axes, center, .. } = &self.h {
            if axes.is_empty() || axes.len() != center.len() {
                return Err(format!(
                    "predicate `{}`: distance axes/center length mismatch",
                    self.id
                ));
            }
        }
        if let PredicateFn::BoxDistance { axes, min, max, .. } = &self.h {
            if axes.is_empty() || axes.len() != min.len() || axes.len() != max.len() {
                return Err(format!(
                    "predicate `{}`: box axes/min/max length mismatch",
                    self.id
                ));
            }
            if min.iter().zip(max).any(|(lo, hi)| !(lo < hi)) {
                return Err(format!("predicate `{}`: box has min >= max", self.id));
            }
        }
        if let Some(hint) = &self.region_hint {
            hint.validate()
                .map_err(|e| format!("predicate `{}`: {e}", self.id))?;
        }
        Ok(())
    }

    /// Smallest state dimension this predicate can be evaluated on.
    pub fn min_dim(&self) -> usize {
        match &self.h {
            PredicateFn::Affine { coeffs, .. } => coeffs.len(),
            PredicateFn::Distance { axes, .. } | PredicateFn::BoxDistance { axes, .. } => {
                axes.iter().max().map_or(0, |a| a + 1)
            }
        }
    }

    /// Exact dimension required, if the predicate pins one.
    pub fn required_dim(&self) -> Option<usize> {
        match &self.h {
            PredicateFn::Affine { coeffs, .. } => Some(coeffs.len()),
            PredicateFn::Distance { .. } | PredicateFn::BoxDistance { .. } => None,
        }
    }

    pub fn h_value(&self, s: &[f64]) -> f64 {
        match &self.h {
            PredicateFn::Affine { coeffs, offset } => {
                coeffs.iter().zip(s).map(|(c, x)| c * x).sum::<f64>() + offset
            }
            PredicateFn::Distance { axes, center, sign } => {
                let d2: f64 = axes
                    .iter()
                    .zip(center)
                    .map(|(&a, c)| (s[a] - c).powi(2))
                    .sum();
                2.0 * sign * d2.sqrt()
            }
            PredicateFn::BoxDistance {
                axes,
                min,
                max,
                sign,
            } => 2.0 * sign * box_signed_distance(s, axes, min, max).0,
        }
    }

    /// Unclamped normalized value `(h(s) − threshold) / (2γ)`.
    pub fn raw_robustness(&self, s: &[f64]) -> f64 {
        (self.h_value(s) - self.threshold) / (2.0 * self.scale)
    }

    /// Gradient of [`Predicate::raw_robustness`] with respect to the state.
    ///
    /// The clamp is ignored so saturated predicates still provide a direction.
    /// A distance predicate evaluated at its center has zero gradient.
    pub fn gradient(&self, s: &[f64]) -> Vec<f64> {
        let k = 1.0 / (2.0 * self.scale);
        let mut g = vec![0.0; s.len()];
        match &self.h {
            PredicateFn::Affine { coeffs, .. } => {
                for (gi, c) in g.iter_mut().zip(coeffs) {
                    *gi = c * k;
                }
            }
            PredicateFn::Distance { axes, center, sign } => {
                let d: f64 = axes
                    .iter()
                    .zip(center)
                    .map(|(&a, c)| (s[a] - c).powi(2))
                    .sum::<f64>()
                    .sqrt();
                if d > 0.0 {
                    for (&a, c) in axes.iter().zip(center) {
                        g[a] = 2.0 * sign * (s[a] - c) / d * k;
                    }
                }
            }
            PredicateFn::BoxDistance {
                axes,
                min,
                max,
                sign,
            } => {
                let (_, dir) = box_signed_distance(s, axes, min, max);
                for (&a, d) in axes.iter().zip(dir) {
                    g[a] = 2.0 * sign * d * k;
                }
            }
        }
        g
    }

    /// `!p`: flips `(h, threshold)` to `(−h, −threshold)`; the region hint no
    /// longer describes the satisfying set and is dropped.
    pub fn negate(&self) -> Predicate {
        let h = match &self.h {
            PredicateFn::Affine { coeffs, offset } => PredicateFn::Affine {
                coeffs: coeffs.iter().map(|c| -c).collect(),
                offset: -offset,
            },
            PredicateFn::Distance { axes, center, sign } => PredicateFn::Distance {
                axes: axes.clone(),
                center: center.clone(),
                sign: -sign,
            },
            PredicateFn::BoxDistance {
                axes,
                min,
                max,
                sign,
            } => PredicateFn::BoxDistance {
                axes: axes.clone(),
                min: min.clone(),
                max: max.clone(),
                sign: -sign,
            },
        };
        Predicate {
            id: self.id.clone(),
            h,
            threshold: -self.threshold,
            scale: self.scale,
            region_hint: None,
            negated: !self.negated,
        }
    }
}

/// Signed distance from `s[axes]` to the box and its gradient over `axes`.
/// Inside, the gradient is that of the nearest face (first on ties).
fn box_signed_distance(s: &[f64], axes: &[usize], min: &[f64], max: &[f64]) -> (f64, Vec<f64>) {
    // Per axis: distance past the nearer face, positive outside.
    let q: Vec<(f64, f64)> = axes
        .iter()
        .enumerate()
        .map(|(k, &a)| {
            let (lo, hi) = (s[a] - min[k], max[k] - s[a]);
            if lo < hi {
                (-lo, -1.0)
            } else {
                (-hi, 1.0)
            }
        })
        .collect();
    let out: f64 = q
        .iter()
        .map(|(d, _)| d.max(0.0).powi(2))
        .sum::<f64>()
        .sqrt();
    if out > 0.0 {
        let g = q.iter().map(|(d, dir)| d.max(0.0) / out * dir).collect();
        return (out, g);
    }
    let mut best = 0;
    for k in 1..q.len() {
        if q[k].0 > q[best].0 {
            best = k;
        }
    }
    let mut g = vec![0.0; q.len()];
    g[best] = q[best].1;
    (q[best].0, g)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn negation_flips_sign_of_raw_robustness() {
        let p = Predicate::affine("p", vec![1.0, -2.0], 0.5, 0.3).with_scale(0.7);
        let s = [0.4, 1.1];
        assert!((p.raw_robustness(&s) + p.negate().raw_robustness(&s)).abs() < 1e-15);
        let b = Predicate::ball("b", vec![0, 1], vec![1.0, 1.0], 0.5, true);
        assert!((b.raw_robustness(&s) + b.negate().raw_robustness(&s)).abs() < 1e-15);
        assert_eq!(b.negate().negate(), b);
    }

    #[test]
    fn ball_gradient_points_to_center() {
        let b = Predicate::ball("b", vec![0, 1], vec![3.5, 3.5], 1.0, true);
        let g = b.gradient(&[4.5, 3.5]);
        assert!((g[0] + 1.0).abs() < 1e-12 && g[1].abs() < 1e-12);
        assert_eq!(b.gradient(&[3.5, 3.5]), vec![0.0, 0.0]);
    }

    #[test]
    fn box_distance_examples() {
        let b =
            Predicate::boxed("r", vec![0, 1], vec![2.0, 1.0], vec![3.0, 2.0], true).with_scale(0.5);
        assert!((b.raw_robustness(&[2.5, 1.5]) - 1.0).abs() < 1e-12);
        assert!(b.raw_robustness(&[2.0, 1.5]).abs() < 1e-12);
        // Outside a corner: distance √(0.3² + 0.4²) = 0.5.
        assert!((b.raw_robustness(&[3.3, 2.4]) + 1.0).abs() < 1e-12);
        let avoid = b.negate();
        assert!((avoid.raw_robustness(&[3.3, 2.4]) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn box_gradient_matches_finite_differences() {
        let b = Predicate::boxed("r", vec![0, 1], vec![0.5, 1.0], vec![1.5, 2.0], false)
            .with_scale(0.3);
        for s in [[0.2, 0.4], [1.7, 1.4], [0.9, 1.2], [1.1, 2.6]] {
            let g = b.gradient(&s);
            for i in 0..2 {
                let mut sp = s;
                let mut sm = s;
                sp[i] += 1e-6;
                sm[i] -= 1e-6;
                let fd = (b.raw_robustness(&sp) - b.raw_robustness(&sm)) / 2e-6;
                assert!((g[i] - fd).abs() < 1e-5, "{s:?} axis {i}: {} vs {fd}", g[i]);
            }
        }
    }

    #[test]
    fn hint_validation() {
        let bad = RegionHint::Box {
            axes: vec![0],
            min: vec![1.0],
            max: vec![0.0],
        };
        assert!(bad.validate().is_err());
        let ball = RegionHint::Ball {
            axes: vec![0, 1],
            center: vec![0.0, 0.0],
            radius: 0.0,
        };
        assert!(ball.validate().is_err());
    }
}
