use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::space::ParameterSpace;

use super::hull::{PeelMode, Peeler, PointCloud};
use super::{check_unique_ids, normalize_cases, CaseSpec, DoeError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    Val,
    TestIdRandom,
    TestInterpolation,
    TestOod,
}

impl Split {
    pub const ALL: [Split; 5] = [
        Split::Train,
        Split::Val,
        Split::TestIdRandom,
        Split::TestInterpolation,
        Split::TestOod,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::TestIdRandom => "test_id_random",
            Split::TestInterpolation => "test_interpolation",
            Split::TestOod => "test_ood",
        }
    }
}

impl std::str::FromStr for Split {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Split::ALL
            .into_iter()
            .find(|v| v.as_str() == s)
            .ok_or_else(|| format!("unknown split `{s}`"))
    }
}

impl std::fmt::Display for Split {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitConfig {
    pub n_ood: usize,
    pub n_interp: usize,
    pub n_id_random: usize,
    pub n_val: usize,
    pub seed: u64,
    /// `None` picks exact or approximate peeling by the remaining size.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub peel_mode: Option<PeelMode>,
}

impl SplitConfig {
    pub fn held_out(&self) -> usize {
        self.n_ood + self.n_interp + self.n_id_random + self.n_val
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitCounts {
    pub train: usize,
    pub val: usize,
    pub test_id_random: usize,
    pub test_interpolation: usize,
    pub test_ood: usize,
}

impl SplitCounts {
    pub fn get(&self, s: Split) -> usize {
        match s {
            Split::Train => self.train,
            Split::Val => self.val,
            Split::TestIdRandom => self.test_id_random,
            Split::TestInterpolation => self.test_interpolation,
            Split::TestOod => self.test_ood,
        }
    }

    fn bump(&mut self, s: Split) {
        match s {
            Split::Train => self.train += 1,
            Split::Val => self.val += 1,
            Split::TestIdRandom => self.test_id_random += 1,
            Split::TestInterpolation => self.test_interpolation += 1,
            Split::TestOod => self.test_ood += 1,
        }
    }

    pub fn total(&self) -> usize {
        Split::ALL.iter().map(|&s| self.get(s)).sum()
    }
}

/// Label of every case, keyed by case id.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitAssignment {
    pub labels: BTreeMap<String, Split>,
    /// Hull layers peeled before the interpolation core was reached.
    pub layers_peeled: usize,
}

impl SplitAssignment {
    pub fn counts(&self) -> SplitCounts {
        let mut c = SplitCounts::default();
        for &s in self.labels.values() {
            c.bump(s);
        }
        c
    }

    pub fn ids(&self, split: Split) -> Vec<&str> {
        self.labels
            .iter()
            .filter(|(_, &s)| s == split)
            .map(|(id, _)| id.as_str())
            .collect()
    }

    pub fn manifest(&self, seed: u64, space: Option<ParameterSpace>) -> SplitManifest {
        SplitManifest {
            version: 1,
            seed,
            space,
            counts: self.counts(),
            assignments: self
                .labels
                .iter()
                .map(|(id, &split)| ManifestEntry { id: id.clone(), split })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub id: String,
    pub split: Split,
}

/// On-disk form of a split: assignments sorted by id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitManifest {
    pub version: u32,
    pub seed: u64,
    pub space: Option<ParameterSpace>,
    pub counts: SplitCounts,
    pub assignments: Vec<ManifestEntry>,
}

impl SplitManifest {
    pub fn assignment(&self) -> SplitAssignment {
        SplitAssignment {
            labels: self.assignments.iter().map(|e| (e.id.clone(), e.split)).collect(),
            layers_peeled: 0,
        }
    }
}

/// Partitions `cases` into OOD, interpolation, random-ID, validation and
/// training sets.
///
/// Parameters are min-max normalized over the cases. OOD takes whole hull
/// layers from the outside while they fit and then the farthest points (from
/// the centroid) of the next layer. Peeling continues until at most
/// `n_interp` points remain; those form the interpolation set, topped up with
/// the nearest points of the last peeled layer. Everything else is shuffled
/// with `seed` to draw the random-ID and validation sets; the rest is train.
pub fn peel_split(cases: &[CaseSpec], config: &SplitConfig) -> Result<SplitAssignment, DoeError> {
    let n = cases.len();
    if config.held_out() >= n {
        return Err(DoeError::InsufficientCases {
            needed: config.held_out(),
            available: n,
        });
    }
    check_unique_ids(cases)?;
    let norm = normalize_cases(cases);
    let cloud = PointCloud::from_flat(6, norm.iter().flatten().copied().collect())?;
    let all: Vec<usize> = (0..n).collect();
    let centroid = cloud.centroid(&all);
    let dist2 = |i: usize| -> f64 {
        cloud
            .point(i)
            .iter()
            .zip(&centroid)
            .map(|(a, b)| (a - b) * (a - b))
            .sum()
    };

    let mut label: Vec<Option<Split>> = vec![None; n];
    let mut peeler = Peeler::new(&cloud, config.peel_mode);
    let mut layers_peeled = 0;

    // OOD from the outside in.
    let mut ood = 0;
    let mut last: Vec<usize> = Vec::new();
    while ood < config.n_ood {
        let layer = peeler.next_layer();
        last = layer.clone();
        layers_peeled += 1;
        if ood + layer.len() <= config.n_ood {
            for &i in &layer {
                label[i] = Some(Split::TestOod);
            }
            ood += layer.len();
        } else {
            let mut by_far = layer;
            by_far.sort_by(|&a, &b| dist2(b).total_cmp(&dist2(a)).then(a.cmp(&b)));
            for &i in by_far.iter().take(config.n_ood - ood) {
                label[i] = Some(Split::TestOod);
            }
            ood = config.n_ood;
        }
    }

    // Interpolation core.
    if config.n_interp > 0 {
        while peeler.remaining().len() > config.n_interp {
            last = peeler.next_layer();
            layers_peeled += 1;
        }
        for &i in peeler.remaining() {
            label[i] = Some(Split::TestInterpolation);
        }
        let mut pad: Vec<usize> = last.into_iter().filter(|&i| label[i].is_none()).collect();
        pad.sort_by(|&a, &b| dist2(a).total_cmp(&dist2(b)).then(a.cmp(&b)));
        let missing = config.n_interp - peeler.remaining().len();
        for &i in pad.iter().take(missing) {
            label[i] = Some(Split::TestInterpolation);
        }
    }

    let mut pool: Vec<usize> = (0..n).filter(|&i| label[i].is_none()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    pool.shuffle(&mut rng);
    for (k, &i) in pool.iter().enumerate() {
        label[i] = Some(if k < config.n_id_random {
            Split::TestIdRandom
        } else if k < config.n_id_random + config.n_val {
            Split::Val
        } else {
            Split::Train
        });
    }

    let labels = cases
        .iter()
        .zip(label)
        .map(|(c, l)| (c.id.clone(), l.expect("every case is labelled")))
        .collect();
    let out = SplitAssignment { labels, layers_peeled };
    debug_assert_eq!(out.counts().total(), n);
    Ok(out)
}
