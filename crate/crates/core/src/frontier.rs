//! Pareto fronts: extraction, representative selection, persistence and
//! replication summaries.

use std::collections::HashSet;
use std::io;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::chromosome::Chromosome;
use crate::error::{Error, Result};
use crate::objectives::{cardinality_ratio, sigmoid_map, ObjectiveVector};
use crate::pareto::dominates;

/// One non-dominated solution.
#[derive(Debug, Clone, PartialEq)]
pub struct FrontMember {
    pub chromosome: Chromosome,
    pub objectives: ObjectiveVector,
    /// Balanced accuracy on held-out data, once computed.
    pub uar_test: Option<f64>,
}

impl FrontMember {
    pub fn new(chromosome: Chromosome, objectives: ObjectiveVector) -> Self {
        Self {
            chromosome,
            objectives,
            uar_test: None,
        }
    }

    /// Raw cardinality ratio of the subset.
    pub fn cr(&self) -> f64 {
        cardinality_ratio(&self.chromosome)
    }

    pub fn r1(&self, lambda: f64, gamma: f64) -> f64 {
        distance_to_ideal(self.objectives.uar, sigmoid_map(self.cr(), lambda, gamma))
    }

    pub fn r1hat(&self) -> Option<f64> {
        self.uar_test.map(|u| distance_to_ideal(u, self.cr()))
    }
}

/// `1 - sqrt((1 - uar)^2 + (1 - cr)^2)`.
pub fn distance_to_ideal(uar: f64, cr: f64) -> f64 {
    1.0 - ((1.0 - uar).powi(2) + (1.0 - cr).powi(2)).sqrt()
}

/// Non-dominated solutions of one run, with provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct ParetoFront {
    pub run_id: String,
    pub generation: usize,
    pub n_features: usize,
    pub members: Vec<FrontMember>,
}

impl ParetoFront {
    /// Keeps the distinct non-dominated candidates on the first `n_active`
    /// objectives, ordered by subset size then bitmask.
    pub fn from_candidates(
        run_id: impl Into<String>,
        generation: usize,
        n_features: usize,
        n_active: usize,
        candidates: impl IntoIterator<Item = (Chromosome, ObjectiveVector)>,
    ) -> Self {
        let mut seen = HashSet::new();
        let unique: Vec<(Chromosome, ObjectiveVector)> = candidates
            .into_iter()
            .filter(|(c, _)| seen.insert(c.clone()))
            .collect();
        let points: Vec<Vec<f64>> = unique.iter().map(|(_, o)| o.point(n_active)).collect();
        let members = unique
            .into_iter()
            .enumerate()
            .filter(|(i, _)| !points.iter().any(|p| dominates(p, &points[*i])))
            .map(|(_, (c, o))| FrontMember::new(c, o))
            .collect();
        let mut front = Self {
            run_id: run_id.into(),
            generation,
            n_features,
            members,
        };
        front.sort();
        front
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    fn sort(&mut self) {
        self.members.sort_by(|a, b| {
            a.objectives
                .n_selected
                .cmp(&b.objectives.n_selected)
                .then_with(|| a.chromosome.to_hex().cmp(&b.chromosome.to_hex()))
        });
    }

    fn records(&self) -> Vec<FrontRecord> {
        self.members
            .iter()
            .map(|m| FrontRecord {
                run_id: self.run_id.clone(),
                generation: self.generation,
                n_selected: m.objectives.n_selected,
                uar_validation: m.objectives.uar,
                uar_test: m.uar_test,
                cr: m.cr(),
                cr_lambda: m.objectives.cr_mapped,
                m_dist: m.objectives.m_dist,
                r1hat: m.r1hat(),
                bitmask: m.chromosome.to_hex(),
            })
            .collect()
    }

    fn from_records(records: Vec<FrontRecord>, n_features: usize) -> Result<Self> {
        let (run_id, generation) = records
            .first()
            .map(|r| (r.run_id.clone(), r.generation))
            .unwrap_or_default();
        let members = records
            .into_iter()
            .map(|r| {
                let chromosome = Chromosome::from_hex(&r.bitmask, n_features)?;
                if chromosome.count_ones() != r.n_selected {
                    return Err(Error::FrontFormat(format!(
                        "n_selected {} disagrees with bitmask {}",
                        r.n_selected, r.bitmask
                    )));
                }
                Ok(FrontMember {
                    chromosome,
                    objectives: ObjectiveVector {
                        uar: r.uar_validation,
                        cr_mapped: r.cr_lambda,
                        m_dist: r.m_dist,
                        n_selected: r.n_selected,
                    },
                    uar_test: r.uar_test,
                })
            })
            .collect::<Result<_>>()?;
        Ok(Self {
            run_id,
            generation,
            n_features,
            members,
        })
    }

    /// Writes the CSV form; an empty front yields the header alone.
    pub fn write_csv<W: io::Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(writer);
        let csv_err = |e: csv::Error| Error::FrontFormat(e.to_string());
        w.write_record(FRONT_COLUMNS).map_err(csv_err)?;
        for r in self.records() {
            w.serialize(r).map_err(csv_err)?;
        }
        w.flush().map_err(|e| Error::FrontFormat(e.to_string()))
    }

    pub fn read_csv<R: io::Read>(reader: R, n_features: usize) -> Result<Self> {
        let mut r = csv::Reader::from_reader(reader);
        let headers = r.headers().map_err(|e| Error::FrontFormat(e.to_string()))?;
        if headers.iter().ne(FRONT_COLUMNS) {
            return Err(Error::FrontFormat(format!("unexpected header {headers:?}")));
        }
        let records = r
            .deserialize()
            .collect::<std::result::Result<Vec<FrontRecord>, _>>()
            .map_err(|e| Error::FrontFormat(e.to_string()))?;
        Self::from_records(records, n_features)
    }

    pub fn to_json(&self) -> Result<String> {
        let doc = FrontDocument {
            run_id: self.run_id.clone(),
            generation: self.generation,
            n_features: self.n_features,
            members: self.records(),
        };
        Ok(serde_json::to_string_pretty(&doc)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let doc: FrontDocument = serde_json::from_str(s)?;
        let mut front = Self::from_records(doc.members, doc.n_features)?;
        front.run_id = doc.run_id;
        front.generation = doc.generation;
        Ok(front)
    }

    pub fn export_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = std::fs::File::create(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        self.write_csv(io::BufWriter::new(file))
    }

    pub fn import_csv(path: impl AsRef<Path>, n_features: usize) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::read_csv(io::BufReader::new(file), n_features)
    }
}

/// Column order of the CSV front export.
pub const FRONT_COLUMNS: [&str; 10] = [
    "run_id",
    "generation",
    "n_selected",
    "uar_validation",
    "uar_test",
    "cr",
    "cr_lambda",
    "m_dist",
    "r1hat",
    "bitmask",
];

#[derive(Debug, Clone, Serialize, Deserialize)]
struct FrontRecord {
    run_id: String,
    generation: usize,
    n_selected: usize,
    uar_validation: f64,
    uar_test: Option<f64>,
    cr: f64,
    cr_lambda: f64,
    m_dist: f64,
    r1hat: Option<f64>,
    bitmask: String,
}

#[derive(Serialize, Deserialize)]
struct FrontDocument {
    run_id: String,
    generation: usize,
    n_features: usize,
    members: Vec<FrontRecord>,
}

/// All-time non-dominated set, fed incrementally.
#[derive(Debug, Clone)]
pub struct ParetoArchive {
    n_active: usize,
    members: Vec<(Chromosome, ObjectiveVector, Vec<f64>)>,
    offered: HashSet<Chromosome>,
}

impl ParetoArchive {
    pub fn new(n_active: usize) -> Self {
        Self {
            n_active,
            members: Vec::new(),
            offered: HashSet::new(),
        }
    }

    /// Adds a candidate unless it is already known or dominated, evicting
    /// any members it dominates. Returns whether it was admitted.
    ///
    /// Objective vectors are a function of the chromosome, so a chromosome
    /// offered once need not be reconsidered.
    pub fn insert(&mut self, x: &Chromosome, objectives: ObjectiveVector) -> bool {
        if !self.offered.insert(x.clone()) {
            return false;
        }
        let p = objectives.point(self.n_active);
        if self.members.iter().any(|(_, _, q)| dominates(q, &p)) {
            return false;
        }
        self.members.retain(|(_, _, q)| !dominates(&p, q));
        self.members.push((x.clone(), objectives, p));
        true
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Chromosome, &ObjectiveVector)> {
        self.members.iter().map(|(c, o, _)| (c, o))
    }

    pub fn to_front(&self, run_id: impl Into<String>, generation: usize, n_features: usize) -> ParetoFront {
        ParetoFront::from_candidates(
            run_id,
            generation,
            n_features,
            self.n_active,
            self.members.iter().map(|(c, o, _)| (c.clone(), *o)),
        )
    }
}

/// Index of the best score; ties go to fewer features, then the smaller
/// bitmask, then the earlier member.
fn argmax_by(front: &ParetoFront, scores: &[f64]) -> usize {
    let members = &front.members;
    (0..members.len())
        .min_by(|&a, &b| {
            scores[b]
                .total_cmp(&scores[a])
                .then(members[a].objectives.n_selected.cmp(&members[b].objectives.n_selected))
                .then_with(|| members[a].chromosome.to_hex().cmp(&members[b].chromosome.to_hex()))
                .then(a.cmp(&b))
        })
        .expect("front is not empty")
}

/// Member closest to the ideal in (validation UAR, sigmoid-mapped CR).
pub fn representative_r1(front: &ParetoFront, lambda: f64, gamma: f64) -> Result<(usize, f64)> {
    if front.is_empty() {
        return Err(Error::Empty("representative of an empty front"));
    }
    let scores: Vec<f64> = front.members.iter().map(|m| m.r1(lambda, gamma)).collect();
    let best = argmax_by(front, &scores);
    Ok((best, scores[best]))
}

/// Member closest to the ideal in (test UAR, raw CR). Every member must
/// carry a test UAR.
pub fn representative_r1hat(front: &ParetoFront) -> Result<(usize, f64)> {
    if front.is_empty() {
        return Err(Error::Empty("representative of an empty front"));
    }
    let scores = front
        .members
        .iter()
        .map(|m| {
            m.r1hat()
                .ok_or_else(|| Error::FrontFormat("front member has no test UAR".into()))
        })
        .collect::<Result<Vec<f64>>>()?;
    let best = argmax_by(front, &scores);
    Ok((best, scores[best]))
}

/// Representative of one replication.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub run_id: String,
    pub r1hat: f64,
    pub uar_test: f64,
    pub uar_validation: f64,
    pub n_selected: usize,
    pub bitmask: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicationSummary {
    pub median_r1hat: f64,
    pub std_r1hat: f64,
    pub median_uar: f64,
    pub std_uar: f64,
    pub median_n_selected: f64,
    pub std_n_selected: f64,
    pub runs: Vec<RunSummary>,
}

/// Median; the mean of the two middle values for even counts.
pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

/// Population standard deviation.
pub fn std_dev(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt()
}

/// Picks each run's R̂1 representative and aggregates across runs.
pub fn summarize_replications(fronts: &[ParetoFront]) -> Result<ReplicationSummary> {
    if fronts.is_empty() {
        return Err(Error::Empty("no replications to summarize"));
    }
    let runs = fronts
        .iter()
        .map(|front| {
            let (i, r1hat) = representative_r1hat(front)?;
            let m = &front.members[i];
            Ok(RunSummary {
                run_id: front.run_id.clone(),
                r1hat,
                uar_test: m.uar_test.unwrap_or(f64::NAN),
                uar_validation: m.objectives.uar,
                n_selected: m.objectives.n_selected,
                bitmask: m.chromosome.to_hex(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(summarize_runs(runs))
}

pub fn summarize_runs(runs: Vec<RunSummary>) -> ReplicationSummary {
    let r1: Vec<f64> = runs.iter().map(|r| r.r1hat).collect();
    let uar: Vec<f64> = runs.iter().map(|r| r.uar_test).collect();
    let ns: Vec<f64> = runs.iter().map(|r| r.n_selected as f64).collect();
    ReplicationSummary {
        median_r1hat: median(&r1),
        std_r1hat: std_dev(&r1),
        median_uar: median(&uar),
        std_uar: std_dev(&uar),
        median_n_selected: median(&ns),
        std_n_selected: std_dev(&ns),
        runs,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn member(bits: &str, uar: f64, test: Option<f64>) -> FrontMember {
        let chromosome = Chromosome::from_bit_str(bits).unwrap();
        FrontMember {
            objectives: ObjectiveVector {
                uar,
                cr_mapped: cardinality_ratio(&chromosome),
                m_dist: 0.25,
                n_selected: chromosome.count_ones(),
            },
            chromosome,
            uar_test: test,
        }
    }

    fn front(members: Vec<FrontMember>) -> ParetoFront {
        let n_features = members.first().map_or(0, |m| m.chromosome.len());
        ParetoFront {
            run_id: "r0".into(),
            generation: 7,
            n_features,
            members,
        }
    }

    #[test]
    fn distance_to_ideal_values() {
        assert_eq!(distance_to_ideal(1.0, 1.0), 1.0);
        assert!((distance_to_ideal(0.8, 0.9) - (1.0 - 0.05f64.sqrt())).abs() < 1e-15);
        assert!((distance_to_ideal(0.8, 0.9) - 0.7764).abs() < 1e-4);
        assert_eq!(distance_to_ideal(1.0, 0.0), 0.0);
        let cr: f64 = (7129.0 - 30.0) / 7129.0;
        assert!((cr - 0.99579).abs() < 1e-5);
        assert!((distance_to_ideal(0.91, cr) - 0.9099).abs() < 1e-4);
    }

    #[test]
    fn r1hat_picks_closest_to_ideal() {
        let f = front(vec![
            member("1111", 1.0, Some(1.0)),
            member("1000", 0.7, Some(0.7)),
            member("1100", 0.9, Some(0.9)),
        ]);
        // scores: 0, 1-sqrt(0.09+0.0625)=0.6095, 1-sqrt(0.01+0.25)=0.4901
        let (i, score) = representative_r1hat(&f).unwrap();
        assert_eq!(i, 1);
        assert!((score - (1.0 - 0.1525f64.sqrt())).abs() < 1e-12);
    }

    #[test]
    fn representative_ties_prefer_fewer_features_then_bitmask() {
        let f = front(vec![member("1100", 0.8, Some(0.8)), member("0011", 0.8, Some(0.8))]);
        assert_eq!(representative_r1hat(&f).unwrap().0, 1);
        let f = front(vec![member("1110", 0.8, Some(0.8)), member("0011", 0.8, Some(0.8))]);
        assert_eq!(representative_r1hat(&f).unwrap().0, 1);
        let f = front(vec![member("0100", 0.8, Some(0.8)), member("1000", 0.8, Some(0.8))]);
        assert_eq!(representative_r1hat(&f).unwrap().0, 0);
    }

    #[test]
    fn representative_errors() {
        assert!(representative_r1(&front(vec![]), 0.5, -0.5).is_err());
        assert!(representative_r1hat(&front(vec![member("10", 0.5, None)])).is_err());
        let single = front(vec![member("10", 0.5, Some(0.4))]);
        assert_eq!(representative_r1hat(&single).unwrap().0, 0);
        assert_eq!(representative_r1(&single, 0.5, -0.5).unwrap().0, 0);
    }

    #[test]
    fn r1_perfect_member_wins() {
        // lambda large enough that the sigmoid saturates near 1 at cr = 1
        let mut ideal = member("1000", 1.0, None);
        ideal.chromosome = Chromosome::from_indices(4000, &[0]);
        let mut other = member("1000", 0.9, None);
        other.chromosome = Chromosome::from_indices(4000, &[1, 2]);
        let f = front(vec![other, ideal]);
        assert_eq!(representative_r1(&f, 1.5, -0.5).unwrap().0, 1);
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let f = front(vec![
            member("1010", 0.123456789012345, Some(0.3333333333333333)),
            member("0001", 0.1, None),
            member("0111", 2.0 / 3.0, Some(0.7)),
        ]);
        let mut buf = Vec::new();
        f.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert_eq!(text.lines().count(), 4);
        assert!(text.starts_with(
            "run_id,generation,n_selected,uar_validation,uar_test,cr,cr_lambda,m_dist,r1hat,bitmask\n"
        ));
        assert_eq!(ParetoFront::read_csv(buf.as_slice(), 4).unwrap(), f);
        assert_eq!(ParetoFront::from_json(&f.to_json().unwrap()).unwrap(), f);
    }

    #[test]
    fn empty_front_is_header_only() {
        let mut f = front(vec![]);
        f.n_features = 4;
        let mut buf = Vec::new();
        f.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 1);
    }

    #[test]
    fn import_rejects_inconsistent_rows() {
        let text = "run_id,generation,n_selected,uar_validation,uar_test,cr,cr_lambda,m_dist,r1hat,bitmask\n\
                    r,1,3,0.5,,0.5,0.5,0,,a\n";
        assert!(ParetoFront::read_csv(text.as_bytes(), 4).is_err());
        assert!(ParetoFront::read_csv("a,b\n".as_bytes(), 4).is_err());
    }

    #[test]
    fn from_candidates_filters_and_dedups() {
        let a = member("1000", 0.9, None);
        let b = member("1100", 0.8, None);
        let c = member("0100", 0.95, None);
        let f = ParetoFront::from_candidates(
            "x",
            0,
            4,
            2,
            vec![a.clone(), b, c.clone(), c.clone()]
                .into_iter()
                .map(|m| (m.chromosome, m.objectives)),
        );
        // b is dominated by a; a is dominated by c (same size, better uar)
        assert_eq!(f.members.len(), 1);
        assert_eq!(f.members[0].chromosome, c.chromosome);
    }

    #[test]
    fn archive_evicts_dominated_members() {
        let mut archive = ParetoArchive::new(2);
        let a = member("1100", 0.8, None);
        let b = member("1000", 0.9, None);
        assert!(archive.insert(&a.chromosome, a.objectives));
        assert!(!archive.insert(&a.chromosome, a.objectives));
        assert!(archive.insert(&b.chromosome, b.objectives));
        assert_eq!(archive.len(), 1);
        let worse = member("0110", 0.5, None);
        assert!(!archive.insert(&worse.chromosome, worse.objectives));
    }

    #[test]
    fn medians_and_spread() {
        assert_eq!(median(&[0.5, 0.1, 0.3, 0.2, 0.4]), 0.3);
        assert!((median(&[0.2, 0.4, 0.6, 0.8]) - 0.5).abs() < 1e-15);
        assert_eq!(median(&[0.7]), 0.7);
        assert_eq!(std_dev(&[0.7]), 0.0);
        assert!((std_dev(&[1.0, 3.0]) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn summary_over_runs() {
        let fronts: Vec<ParetoFront> = [0.9, 0.8]
            .iter()
            .map(|&u| front(vec![member("1000", u, Some(u))]))
            .collect();
        let s = summarize_replications(&fronts).unwrap();
        assert_eq!(s.runs.len(), 2);
        assert!((s.median_uar - 0.85).abs() < 1e-12);
        assert_eq!(s.median_n_selected, 1.0);
        assert!(summarize_replications(&[]).is_err());
    }

    proptest! {
        #[test]
        fn representative_is_permutation_invariant_and_nondominated(
            raw in proptest::collection::vec((1u32..255, 0.0f64..1.0), 1..30),
            shift in 0usize..30,
        ) {
            let members: Vec<FrontMember> = raw
                .iter()
                .map(|&(bits, u)| {
                    let c = Chromosome::from_bools(&(0..8).map(|i| bits >> i & 1 == 1).collect::<Vec<_>>());
                    FrontMember { objectives: ObjectiveVector { uar: u, cr_mapped: 0.0, m_dist: 0.0, n_selected: c.count_ones() }, chromosome: c, uar_test: Some(u) }
                })
                .collect();
            let f = front(members.clone());
            let (i, score) = representative_r1hat(&f).unwrap();
            // exhaustive oracle
            let best = f.members.iter().map(|m| m.r1hat().unwrap()).fold(f64::MIN, f64::max);
            prop_assert_eq!(score, best);
            let winner = &f.members[i];
            for m in &f.members {
                prop_assert!(!(m.uar_test.unwrap() > winner.uar_test.unwrap() && m.cr() > winner.cr()));
            }
            let mut rotated = members;
            let k = shift % rotated.len();
            rotated.rotate_left(k);
            let g = front(rotated);
            let (j, _) = representative_r1hat(&g).unwrap();
            prop_assert_eq!(&g.members[j].chromosome, &winner.chromosome);
        }
    }
}
