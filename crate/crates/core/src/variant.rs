//! Named model variants: a backbone, the descriptors it sees, and whether two
//! branches are fused by least squares.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::features::FeatureSet;
use crate::nn::ArchSpec;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Backbone {
    Mlp,
    Lstm,
    Mixer,
}

impl Backbone {
    pub const ALL: [Backbone; 3] = [Backbone::Mlp, Backbone::Lstm, Backbone::Mixer];

    pub fn name(self) -> &'static str {
        match self {
            Backbone::Mlp => "MLP",
            Backbone::Lstm => "LSTM",
            Backbone::Mixer => "MIXER",
        }
    }

    pub fn default_arch(self) -> ArchSpec {
        match self {
            Backbone::Mlp => ArchSpec::default_mlp(),
            Backbone::Lstm => ArchSpec::default_lstm(),
            Backbone::Mixer => ArchSpec::default_mixer(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Variant {
    /// One network on the raw window plus the given descriptors.
    Single(Backbone, FeatureSet),
    /// Least-squares fusion of the FFT and RP single-branch forecasts.
    Fused(Backbone),
}

impl Variant {
    pub fn tag(self) -> String {
        match self {
            Variant::Single(b, FeatureSet::Raw) => b.name().to_string(),
            Variant::Single(b, FeatureSet::Fft) => format!("FFT-{}", b.name()),
            Variant::Single(b, FeatureSet::Rp) => format!("RP-{}", b.name()),
            Variant::Single(b, FeatureSet::FftRp) => format!("FFT-RP-{}", b.name()),
            Variant::Fused(b) => format!("LR-FFT-RP-{}", b.name()),
        }
    }

    pub fn backbone(self) -> Backbone {
        match self {
            Variant::Single(b, _) | Variant::Fused(b) => b,
        }
    }

    pub fn is_fused(self) -> bool {
        matches!(self, Variant::Fused(_))
    }

    /// Feature sets of the networks this variant trains, in fusion order.
    pub fn branch_sets(self) -> Vec<FeatureSet> {
        match self {
            Variant::Single(_, f) => vec![f],
            Variant::Fused(_) => vec![FeatureSet::Fft, FeatureSet::Rp],
        }
    }

    /// The single-branch variants whose networks this variant reuses.
    pub fn branches(self) -> Vec<Variant> {
        self.branch_sets()
            .into_iter()
            .map(|f| Variant::Single(self.backbone(), f))
            .collect()
    }

    /// The five variants of one backbone in reporting order.
    pub fn family(b: Backbone) -> [Variant; 5] {
        [
            Variant::Single(b, FeatureSet::Raw),
            Variant::Single(b, FeatureSet::Fft),
            Variant::Single(b, FeatureSet::Rp),
            Variant::Single(b, FeatureSet::FftRp),
            Variant::Fused(b),
        ]
    }

    /// The ten MLP and LSTM variants in results-table row order, interleaving
    /// the two backbones per feature configuration.
    pub fn default_grid() -> Vec<Variant> {
        let mlp = Variant::family(Backbone::Mlp);
        let lstm = Variant::family(Backbone::Lstm);
        mlp.iter().zip(&lstm).flat_map(|(a, b)| [*a, *b]).collect()
    }

    /// Default grid followed by the five Mixer variants.
    pub fn all() -> Vec<Variant> {
        let mut v = Self::default_grid();
        v.extend(Variant::family(Backbone::Mixer));
        v
    }

    /// Position in the reporting order of [`Variant::all`].
    pub fn order(self) -> usize {
        Self::all().iter().position(|v| *v == self).unwrap()
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.tag())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let want = s.trim().to_ascii_uppercase();
        Variant::all()
            .into_iter()
            .find(|v| v.tag() == want)
            .ok_or_else(|| Error::Parameter(format!("unknown variant `{s}`")))
    }
}

/// Parses a comma-separated variant list; `default` and `all` name the
/// built-in sets.
pub fn parse_variants(s: &str) -> Result<Vec<Variant>> {
    match s.trim().to_ascii_lowercase().as_str() {
        "default" => return Ok(Variant::default_grid()),
        "all" => return Ok(Variant::all()),
        _ => {}
    }
    let mut out: Vec<Variant> = Vec::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let v: Variant = part.parse()?;
        if !out.contains(&v) {
            out.push(v);
        }
    }
    if out.is_empty() {
        return Err(Error::Parameter("variant list is empty".into()));
    }
    Ok(out)
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed for one (variant, lookback) cell: FNV-1a over the variant tag mixed
/// with the global seed and lookback. Stable across platforms and releases.
pub fn cell_seed(global: u64, variant: Variant, lookback: usize) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in variant.tag().bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    splitmix64(splitmix64(global ^ h) ^ lookback as u64)
}
