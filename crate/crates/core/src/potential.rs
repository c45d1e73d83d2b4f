//! Potentials on `Z^d`, lattice strips and support geometry.
//!
//! A [`Potential`] is a finite table of nonzero values, optionally plus a
//! closed-form [`SupportRule`] that describes an infinite support. Axes are
//! zero-based throughout: the strip `Π_n(α)` is the set of points whose
//! coordinates indexed by `α` all satisfy `|x_j| <= n`.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::sync::Arc;

use serde::de::Error as _;
use serde::ser::SerializeSeq;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::dispersion::QuasiMomentum;
use crate::error::{Error, Result};

/// `|v(x)| <= amplitude · exp(-rate · |x|_∞)` for all `x`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayCertificate {
    pub rate: f64,
    pub amplitude: f64,
}

impl DecayCertificate {
    pub fn bound(&self, x: &[i64]) -> f64 {
        self.amplitude * (-self.rate * max_norm(x) as f64).exp()
    }
}

pub type ValueFn = Arc<dyn Fn(&[i64]) -> f64 + Send + Sync>;

/// Closed-form description of an infinite support.
#[derive(Clone)]
pub enum SupportRule {
    /// `amplitude · exp(-rate · |x_axis|)` on the line through `line_offset`
    /// parallel to `axis`; the `axis` component of `line_offset` is ignored.
    ExpLine {
        axis: usize,
        rate: f64,
        amplitude: f64,
        line_offset: Vec<i64>,
    },
    /// The same value at every lattice point.
    Constant { value: f64 },
    /// An arbitrary evaluation rule with no support description.
    Opaque(ValueFn),
}

impl fmt::Debug for SupportRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SupportRule::ExpLine { axis, rate, amplitude, line_offset } => f
                .debug_struct("ExpLine")
                .field("axis", axis)
                .field("rate", rate)
                .field("amplitude", amplitude)
                .field("line_offset", line_offset)
                .finish(),
            SupportRule::Constant { value } => f.debug_struct("Constant").field("value", value).finish(),
            SupportRule::Opaque(_) => f.write_str("Opaque"),
        }
    }
}

impl PartialEq for SupportRule {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (
                SupportRule::ExpLine { axis: a1, rate: r1, amplitude: c1, line_offset: o1 },
                SupportRule::ExpLine { axis: a2, rate: r2, amplitude: c2, line_offset: o2 },
            ) => a1 == a2 && r1.to_bits() == r2.to_bits() && c1.to_bits() == c2.to_bits() && o1 == o2,
            (SupportRule::Constant { value: a }, SupportRule::Constant { value: b }) => a.to_bits() == b.to_bits(),
            (SupportRule::Opaque(a), SupportRule::Opaque(b)) => Arc::ptr_eq(a, b),
            _ => false,
        }
    }
}

impl SupportRule {
    fn value(&self, x: &[i64]) -> f64 {
        match self {
            SupportRule::ExpLine { axis, rate, amplitude, line_offset } => {
                let on_line = x
                    .iter()
                    .zip(line_offset)
                    .enumerate()
                    .all(|(i, (xi, oi))| i == *axis || xi == oi);
                if on_line {
                    amplitude * (-rate * x[*axis].unsigned_abs() as f64).exp()
                } else {
                    0.0
                }
            }
            SupportRule::Constant { value } => *value,
            SupportRule::Opaque(f) => f(x),
        }
    }

    fn negated(&self) -> Self {
        match self {
            SupportRule::ExpLine { axis, rate, amplitude, line_offset } => SupportRule::ExpLine {
                axis: *axis,
                rate: *rate,
                amplitude: -amplitude,
                line_offset: line_offset.clone(),
            },
            SupportRule::Constant { value } => SupportRule::Constant { value: -value },
            SupportRule::Opaque(f) => {
                let f = f.clone();
                SupportRule::Opaque(Arc::new(move |x: &[i64]| -f(x)))
            }
        }
    }
}

/// Sign pattern of a potential.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sign {
    Zero,
    NonNegative,
    NonPositive,
    Mixed,
    Unknown,
}

/// A real function on `Z^d`.
#[derive(Clone, Debug, PartialEq)]
pub struct Potential {
    dim: usize,
    table: BTreeMap<Vec<i64>, f64>,
    rule: Option<SupportRule>,
    decay: Option<DecayCertificate>,
}

pub(crate) fn max_norm(x: &[i64]) -> u64 {
    x.iter().map(|c| c.unsigned_abs()).max().unwrap_or(0)
}

impl Potential {
    pub fn zero(dim: usize) -> Self {
        Self { dim, table: BTreeMap::new(), rule: None, decay: None }
    }

    /// A finitely supported potential. Zero values are dropped; repeated sites are an error.
    pub fn finite<I>(dim: usize, entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Vec<i64>, f64)>,
    {
        let mut table = BTreeMap::new();
        for (site, value) in entries {
            if site.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: site.len() });
            }
            if !value.is_finite() {
                return Err(Error::InvalidArgument(format!("non-finite potential value at {site:?}")));
            }
            if table.contains_key(&site) {
                return Err(Error::InvalidArgument(format!("repeated site {site:?}")));
            }
            if value != 0.0 {
                table.insert(site, value);
            }
        }
        Ok(Self { dim, table, rule: None, decay: None })
    }

    /// `strength · δ_0`.
    pub fn delta(dim: usize, strength: f64) -> Self {
        Self::finite(dim, [(vec![0; dim], strength)]).expect("single site")
    }

    /// The two-dimensional-and-up line potential `amplitude · e^{-rate |x_axis|}`
    /// on the line `{x : x_i = 0 for i != axis}`.
    pub fn exp_line(dim: usize, axis: usize, rate: f64, amplitude: f64) -> Result<Self> {
        Self::zero(dim).with_rule(SupportRule::ExpLine { axis, rate, amplitude, line_offset: vec![0; dim] })
    }

    pub fn from_fn<F>(dim: usize, f: F) -> Self
    where
        F: Fn(&[i64]) -> f64 + Send + Sync + 'static,
    {
        Self { dim, table: BTreeMap::new(), rule: Some(SupportRule::Opaque(Arc::new(f))), decay: None }
    }

    pub fn with_rule(mut self, rule: SupportRule) -> Result<Self> {
        match &rule {
            SupportRule::ExpLine { axis, rate, amplitude, line_offset } => {
                if *axis >= self.dim || line_offset.len() != self.dim {
                    return Err(Error::InvalidArgument("exp_line axis or offset does not match dimension".into()));
                }
                if !(rate.is_finite() && *rate > 0.0 && amplitude.is_finite()) {
                    return Err(Error::InvalidArgument("exp_line needs rate > 0 and a finite amplitude".into()));
                }
            }
            SupportRule::Constant { value } => {
                if !value.is_finite() {
                    return Err(Error::InvalidArgument("constant potential must be finite".into()));
                }
            }
            SupportRule::Opaque(_) => {}
        }
        self.rule = Some(rule);
        self.validate_decay()?;
        Ok(self)
    }

    /// Attaches a decay certificate; every tabled value must satisfy it.
    pub fn with_decay(mut self, cert: DecayCertificate) -> Result<Self> {
        if !(cert.rate > 0.0 && cert.amplitude > 0.0 && cert.rate.is_finite() && cert.amplitude.is_finite()) {
            return Err(Error::InvalidArgument("decay certificate needs rate > 0 and amplitude > 0".into()));
        }
        self.decay = Some(cert);
        self.validate_decay()?;
        Ok(self)
    }

    fn validate_decay(&self) -> Result<()> {
        let Some(cert) = self.decay else { return Ok(()) };
        for (site, value) in &self.table {
            if value.abs() > cert.bound(site) {
                return Err(Error::InvalidArgument(format!(
                    "value {value} at {site:?} violates the decay certificate"
                )));
            }
        }
        if let Some(SupportRule::ExpLine { rate, amplitude, .. }) = &self.rule {
            if self.table.is_empty() && (amplitude.abs() > cert.amplitude || *rate < cert.rate) {
                return Err(Error::InvalidArgument("exp_line rule exceeds the decay certificate".into()));
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rule(&self) -> Option<&SupportRule> {
        self.rule.as_ref()
    }

    pub fn decay(&self) -> Option<DecayCertificate> {
        self.decay
    }

    /// The tabled (finite) part.
    pub fn table(&self) -> &BTreeMap<Vec<i64>, f64> {
        &self.table
    }

    pub fn is_finite_support(&self) -> bool {
        self.rule.is_none()
    }

    /// The full support when it is finite.
    pub fn finite_entries(&self) -> Option<&BTreeMap<Vec<i64>, f64>> {
        self.is_finite_support().then_some(&self.table)
    }

    pub fn is_zero(&self) -> bool {
        self.table.is_empty()
            && match &self.rule {
                None => true,
                Some(SupportRule::ExpLine { amplitude, .. }) => *amplitude == 0.0,
                Some(SupportRule::Constant { value }) => *value == 0.0,
                Some(SupportRule::Opaque(_)) => false,
            }
    }

    pub fn value(&self, x: &[i64]) -> f64 {
        let tabled = self.table.get(x).copied().unwrap_or(0.0);
        match &self.rule {
            None => tabled,
            Some(rule) => tabled + rule.value(x),
        }
    }

    pub fn negated(&self) -> Self {
        Self {
            dim: self.dim,
            table: self.table.iter().map(|(k, v)| (k.clone(), -v)).collect(),
            rule: self.rule.as_ref().map(SupportRule::negated),
            decay: self.decay,
        }
    }

    pub fn sign(&self) -> Sign {
        let mut pos = self.table.values().any(|v| *v > 0.0);
        let mut neg = self.table.values().any(|v| *v < 0.0);
        match &self.rule {
            None => {}
            Some(SupportRule::ExpLine { amplitude: c, .. }) | Some(SupportRule::Constant { value: c }) => {
                pos |= *c > 0.0;
                neg |= *c < 0.0;
            }
            Some(SupportRule::Opaque(_)) => return Sign::Unknown,
        }
        match (pos, neg) {
            (false, false) => Sign::Zero,
            (true, false) => Sign::NonNegative,
            (false, true) => Sign::NonPositive,
            (true, true) => Sign::Mixed,
        }
    }

    /// Short description used in operator metadata and reports.
    pub fn label(&self) -> String {
        let base = format!("d={} finite({} sites)", self.dim, self.table.len());
        match &self.rule {
            None => base,
            Some(SupportRule::ExpLine { axis, rate, amplitude, .. }) => {
                format!("{base}+exp_line(axis={axis},rate={rate},amplitude={amplitude})")
            }
            Some(SupportRule::Constant { value }) => format!("{base}+constant({value})"),
            Some(SupportRule::Opaque(_)) => format!("{base}+opaque"),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&PotentialFile::try_from(self)?)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: PotentialFile = serde_json::from_str(text)?;
        file.try_into()
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()? + "\n")?;
        Ok(())
    }
}

/// On-disk potential format.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialFile {
    pub dimension: usize,
    #[serde(serialize_with = "ser_entries", deserialize_with = "de_entries")]
    pub entries: Vec<(Vec<i64>, f64)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rule: Option<RuleFile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub decay: Option<DecayCertificate>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum RuleFile {
    ExpLine {
        axis: usize,
        rate: f64,
        amplitude: f64,
        line_offset: Vec<i64>,
    },
    Constant {
        value: f64,
    },
}

fn ser_entries<S: Serializer>(entries: &[(Vec<i64>, f64)], s: S) -> std::result::Result<S::Ok, S::Error> {
    #[derive(Serialize)]
    #[serde(untagged)]
    enum Num {
        I(i64),
        F(f64),
    }
    let mut seq = s.serialize_seq(Some(entries.len()))?;
    for (site, value) in entries {
        let row: Vec<Num> = site.iter().map(|c| Num::I(*c)).chain([Num::F(*value)]).collect();
        seq.serialize_element(&row)?;
    }
    seq.end()
}

fn de_entries<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<(Vec<i64>, f64)>, D::Error> {
    let rows: Vec<Vec<serde_json::Value>> = Vec::deserialize(d)?;
    rows.into_iter()
        .map(|row| {
            let (value, site) = row.split_last().ok_or_else(|| D::Error::custom("empty potential entry"))?;
            let value = value.as_f64().ok_or_else(|| D::Error::custom("entry value must be a number"))?;
            let site = site
                .iter()
                .map(|c| c.as_i64().ok_or_else(|| D::Error::custom("lattice coordinates must be integers")))
                .collect::<std::result::Result<Vec<_>, _>>()?;
            Ok((site, value))
        })
        .collect()
}

impl TryFrom<&Potential> for PotentialFile {
    type Error = Error;

    fn try_from(v: &Potential) -> Result<Self> {
        let rule = match &v.rule {
            None => None,
            Some(SupportRule::ExpLine { axis, rate, amplitude, line_offset }) => Some(RuleFile::ExpLine {
                axis: *axis,
                rate: *rate,
                amplitude: *amplitude,
                line_offset: line_offset.clone(),
            }),
            Some(SupportRule::Constant { value }) => Some(RuleFile::Constant { value: *value }),
            Some(SupportRule::Opaque(_)) => {
                return Err(Error::InvalidArgument("opaque potentials cannot be serialized".into()))
            }
        };
        Ok(Self {
            dimension: v.dim,
            entries: v.table.iter().map(|(k, x)| (k.clone(), *x)).collect(),
            rule,
            decay: v.decay,
        })
    }
}

impl TryFrom<PotentialFile> for Potential {
    type Error = Error;

    fn try_from(file: PotentialFile) -> Result<Self> {
        if file.dimension == 0 {
            return Err(Error::InvalidArgument("potential dimension must be positive".into()));
        }
        let mut v = Potential::finite(file.dimension, file.entries)?;
        if let Some(rule) = file.rule {
            v = v.with_rule(match rule {
                RuleFile::ExpLine { axis, rate, amplitude, line_offset } => {
                    SupportRule::ExpLine { axis, rate, amplitude, line_offset }
                }
                RuleFile::Constant { value } => SupportRule::Constant { value },
            })?;
        }
        if let Some(cert) = file.decay {
            v = v.with_decay(cert)?;
        }
        Ok(v)
    }
}

/// An ordered, nonempty set of axes `α ⊂ {0, …, d-1}`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DirectionSet(Vec<usize>);

impl DirectionSet {
    pub fn new(dim: usize, mut axes: Vec<usize>) -> Result<Self> {
        axes.sort_unstable();
        let before = axes.len();
        axes.dedup();
        if axes.is_empty() || axes.len() != before || axes.iter().any(|a| *a >= dim) {
            return Err(Error::InvalidArgument(format!(
                "direction set must be a nonempty set of distinct axes below {dim}"
            )));
        }
        Ok(Self(axes))
    }

    pub fn axes(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, axis: usize) -> bool {
        self.0.binary_search(&axis).is_ok()
    }

    /// The remaining axes `ᾱ`, in increasing order.
    pub fn complement(&self, dim: usize) -> Vec<usize> {
        (0..dim).filter(|a| !self.contains(*a)).collect()
    }
}

/// The strip `Π_n^{d-l}(α)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StripSpec {
    pub dim: usize,
    pub directions: DirectionSet,
    pub half_width: u64,
}

/// The set `M_l^d(α)` a quasi-momentum belongs to.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct BoundaryClass {
    pub l: usize,
    /// Axes whose component equals `π` (empty for interior points).
    pub axes: Vec<usize>,
}

impl BoundaryClass {
    pub fn directions(&self, dim: usize) -> Option<DirectionSet> {
        DirectionSet::new(dim, self.axes.clone()).ok()
    }
}

pub fn classify_quasimomentum(k: &QuasiMomentum) -> BoundaryClass {
    let axes: Vec<usize> = k
        .components()
        .iter()
        .enumerate()
        .filter(|(_, c)| **c == std::f64::consts::PI)
        .map(|(i, _)| i)
        .collect();
    BoundaryClass { l: axes.len(), axes }
}

pub fn in_strip(x: &[i64], strip: &StripSpec) -> Result<bool> {
    if x.len() != strip.dim {
        return Err(Error::DimensionMismatch { expected: strip.dim, got: x.len() });
    }
    Ok(strip.directions.axes().iter().all(|&j| x[j].unsigned_abs() <= strip.half_width))
}

/// Smallest `n` with `supp v ⊆ Π_n(α)`, or `None` when the support escapes every strip.
pub fn containment_radius(v: &Potential, directions: &DirectionSet) -> Result<Option<u64>> {
    let axes = directions.axes();
    let projected = |x: &[i64]| axes.iter().map(|&j| x[j].unsigned_abs()).max().unwrap_or(0);
    let mut n = v.table.keys().map(|x| projected(x)).max().unwrap_or(0);
    match &v.rule {
        None => {}
        Some(SupportRule::ExpLine { axis, amplitude, line_offset, .. }) => {
            if *amplitude != 0.0 {
                if directions.contains(*axis) {
                    return Ok(None);
                }
                n = n.max(projected(line_offset));
            }
        }
        Some(SupportRule::Constant { value }) => {
            if *value != 0.0 {
                return Ok(None);
            }
        }
        Some(SupportRule::Opaque(_)) => return Err(Error::UndecidableSupport),
    }
    Ok(Some(n))
}

/// Whether `supp v ⊄ Π_n(α)` for every `n`.
pub fn support_escapes_strips(v: &Potential, directions: &DirectionSet) -> Result<bool> {
    Ok(containment_radius(v, directions)?.is_none())
}

/// Sufficient-condition certificate for the decay hypotheses (A) and (B).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HypothesisCertificate {
    pub holds_a: bool,
    pub holds_b: bool,
    pub reason: String,
}

pub fn hypothesis_certificate(v: &Potential) -> HypothesisCertificate {
    let certified = |reason: &str| HypothesisCertificate { holds_a: true, holds_b: true, reason: reason.into() };
    if v.is_finite_support() {
        return certified("finite support");
    }
    if let Some(cert) = v.decay {
        return certified(&format!(
            "exponential decay certificate (rate {}, amplitude {})",
            cert.rate, cert.amplitude
        ));
    }
    match &v.rule {
        Some(SupportRule::ExpLine { .. }) => certified("exponential decay along the supporting line"),
        Some(SupportRule::Constant { value }) if *value == 0.0 => certified("finite support"),
        Some(SupportRule::Constant { .. }) => HypothesisCertificate {
            holds_a: false,
            holds_b: false,
            reason: "nonzero constant does not decay at infinity".into(),
        },
        _ => HypothesisCertificate {
            holds_a: false,
            holds_b: false,
            reason: "no finite support and no decay certificate".into(),
        },
    }
}

/// `v_x̂(ỹ) = v(x)` with `x_α = x̂` and `x_ᾱ = ỹ`, as a potential on `Z^{d-l}`.
pub fn restrict_to_fiber(v: &Potential, directions: &DirectionSet, x_hat: &[i64]) -> Result<Potential> {
    let dim = v.dim;
    let axes = directions.axes();
    if x_hat.len() != axes.len() {
        return Err(Error::DimensionMismatch { expected: axes.len(), got: x_hat.len() });
    }
    if axes.len() > dim {
        return Err(Error::InvalidArgument("direction set larger than dimension".into()));
    }
    let rest = directions.complement(dim);
    let matches = |x: &[i64]| axes.iter().zip(x_hat).all(|(&j, h)| x[j] == *h);
    let project = |x: &[i64]| rest.iter().map(|&j| x[j]).collect::<Vec<_>>();

    let mut table: BTreeMap<Vec<i64>, f64> = v
        .table
        .iter()
        .filter(|(x, _)| matches(x))
        .map(|(x, val)| (project(x), *val))
        .collect();
    let mut rule = None;
    match &v.rule {
        None => {}
        Some(SupportRule::ExpLine { axis, rate, amplitude, line_offset }) => {
            let fixed_ok = axes
                .iter()
                .zip(x_hat)
                .all(|(&j, h)| j == *axis || line_offset[j] == *h);
            if fixed_ok {
                if directions.contains(*axis) {
                    let pos = axes.iter().position(|a| a == axis).expect("axis in α");
                    let val = amplitude * (-rate * x_hat[pos].unsigned_abs() as f64).exp();
                    let site = project(line_offset);
                    *table.entry(site).or_insert(0.0) += val;
                } else {
                    let new_axis = rest.iter().position(|a| a == axis).expect("axis in ᾱ");
                    rule = Some(SupportRule::ExpLine {
                        axis: new_axis,
                        rate: *rate,
                        amplitude: *amplitude,
                        line_offset: project(line_offset),
                    });
                }
            }
        }
        Some(SupportRule::Constant { value }) => {
            if rest.is_empty() {
                *table.entry(Vec::new()).or_insert(0.0) += value;
            } else {
                rule = Some(SupportRule::Constant { value: *value });
            }
        }
        Some(SupportRule::Opaque(f)) => {
            let f = f.clone();
            let axes = axes.to_vec();
            let rest = rest.clone();
            let x_hat = x_hat.to_vec();
            rule = Some(SupportRule::Opaque(Arc::new(move |y: &[i64]| {
                let mut x = vec![0; axes.len() + rest.len()];
                for (j, h) in axes.iter().zip(&x_hat) {
                    x[*j] = *h;
                }
                for (j, c) in rest.iter().zip(y) {
                    x[*j] = *c;
                }
                f(&x)
            })));
        }
    }
    table.retain(|_, val| *val != 0.0);
    Ok(Potential { dim: rest.len(), table, rule, decay: v.decay })
}
