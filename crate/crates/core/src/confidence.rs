//! Hoeffding confidence bands for finite-shot estimates of bounded
//! observables, combined over many observables with a union bound.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pauli::{OperatorPoly, PauliString, PolyJson};

/// Global failure probability of a family of bands.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Delta(f64);

impl Delta {
    pub fn new(delta: f64) -> Result<Self> {
        if !(delta > 0.0 && delta < 1.0) {
            return Err(Error::Domain(format!("failure probability {delta} not in (0, 1)")));
        }
        Ok(Delta(delta))
    }

    /// From a confidence level `1 − δ`.
    pub fn from_confidence(level: f64) -> Result<Self> {
        Self::new(1.0 - level)
    }

    pub fn get(self) -> f64 {
        self.0
    }

    pub fn confidence(self) -> f64 {
        1.0 - self.0
    }
}

impl TryFrom<f64> for Delta {
    type Error = Error;
    fn try_from(v: f64) -> Result<Self> {
        Delta::new(v)
    }
}

impl From<Delta> for f64 {
    fn from(d: Delta) -> f64 {
        d.0
    }
}

/// Half-width `sqrt(2 ln(2K/δ) / N)` guaranteeing that each of `K` bands
/// fails with probability at most `δ/K`.
pub fn epsilon(shots: u64, k: usize, delta: f64) -> Result<f64> {
    if shots < 1 || k < 1 {
        return Err(Error::Domain(format!("need N ≥ 1 and K ≥ 1, got N={shots}, K={k}")));
    }
    let delta = Delta::new(delta)?.get();
    Ok((2.0 * (2.0 * k as f64 / delta).ln() / shots as f64).sqrt())
}

/// `2 exp(−N ε² / 2)`: probability that an `N`-shot mean of a `[−1, 1]`
/// variable deviates by more than `ε`.
pub fn hoeffding_tail(shots: u64, eps: f64) -> f64 {
    2.0 * (-(shots as f64) * eps * eps / 2.0).exp()
}

/// A finite-shot estimate of an observable with spectrum in `[−1, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct MeasurementRecord {
    pub observable: OperatorPoly,
    pub shots: u64,
    pub mean: f64,
}

impl MeasurementRecord {
    pub fn new(observable: OperatorPoly, shots: u64, mean: f64) -> Result<Self> {
        if shots < 1 {
            return Err(Error::Domain("a record needs at least one shot".into()));
        }
        if !(mean.abs() <= 1.0) {
            return Err(Error::Domain(format!("empirical mean {mean} outside [-1, 1]")));
        }
        if !observable.is_hermitian(1e-12) {
            return Err(Error::NonHermitian("measured observable".into()));
        }
        Ok(MeasurementRecord { observable, shots, mean })
    }

    pub fn for_string(s: PauliString, shots: u64, mean: f64) -> Result<Self> {
        Self::new(OperatorPoly::from_string(s, 1.0.into()), shots, mean)
    }
}

/// Two-sided constraint `lo ≤ ⟨observable⟩ ≤ hi`.
#[derive(Clone, Debug, PartialEq)]
pub struct IntervalConstraint {
    pub observable: OperatorPoly,
    pub center: f64,
    pub half_width: f64,
    pub lo: f64,
    pub hi: f64,
}

impl IntervalConstraint {
    /// Band `center ± half_width` intersected with `[−1, 1]`.
    pub fn new(observable: OperatorPoly, center: f64, half_width: f64) -> Self {
        IntervalConstraint {
            observable,
            center,
            half_width,
            lo: (center - half_width).max(-1.0),
            hi: (center + half_width).min(1.0),
        }
    }

    /// Zero-width band, the infinite-shot limit.
    pub fn exact(observable: OperatorPoly, value: f64) -> Self {
        Self::new(observable, value, 0.0)
    }

    pub fn contains(&self, value: f64) -> bool {
        self.lo <= value && value <= self.hi
    }
}

/// Per-record half-widths for one union-bounded family.
#[derive(Clone, Debug, PartialEq)]
pub struct ConfidencePlan {
    pub delta: f64,
    pub k: usize,
    pub epsilons: Vec<f64>,
}

impl ConfidencePlan {
    pub fn new(records: &[MeasurementRecord], delta: f64) -> Result<Self> {
        if records.is_empty() {
            return Err(Error::Domain("no measurement records".into()));
        }
        let k = records.len();
        let epsilons = records.iter().map(|r| epsilon(r.shots, k, delta)).collect::<Result<Vec<_>>>()?;
        Ok(ConfidencePlan { delta, k, epsilons })
    }
}

/// One band per record; all contain their true values simultaneously with
/// probability at least `1 − δ`.
pub fn build_intervals(records: &[MeasurementRecord], delta: f64) -> Result<Vec<IntervalConstraint>> {
    let plan = ConfidencePlan::new(records, delta)?;
    Ok(records
        .iter()
        .zip(plan.epsilons)
        .map(|(r, eps)| IntervalConstraint::new(r.observable.clone(), r.mean, eps))
        .collect())
}

/// Serialized record. `observable` is a sparse string such as `"X1 Y3"`;
/// a weighted observable goes in `poly` instead.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct RecordRow {
    #[serde(default)]
    pub observable: String,
    pub shots: u64,
    pub mean: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub poly: Option<PolyJson>,
}

/// Record file contents with the system size they refer to.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct RecordFile {
    pub num_qubits: usize,
    pub records: Vec<RecordRow>,
}

impl RecordRow {
    pub fn from_record(r: &MeasurementRecord) -> Self {
        let mut terms = r.observable.terms();
        match (terms.next(), terms.next()) {
            (Some((s, c)), None) if c == 1.0.into() => {
                RecordRow { observable: s.to_string(), shots: r.shots, mean: r.mean, poly: None }
            }
            _ => RecordRow {
                observable: String::new(),
                shots: r.shots,
                mean: r.mean,
                poly: Some(r.observable.to_json()),
            },
        }
    }

    pub fn to_record(&self, n: usize) -> Result<MeasurementRecord> {
        let obs = match &self.poly {
            Some(p) => {
                if p.num_qubits != n {
                    return Err(Error::Shape(format!("record on {} qubits, expected {n}", p.num_qubits)));
                }
                OperatorPoly::from_json(p)?
            }
            None => OperatorPoly::from_string(PauliString::parse_sparse(&self.observable, n)?, 1.0.into()),
        };
        MeasurementRecord::new(obs, self.shots, self.mean)
    }
}

pub fn write_records_json<W: Write>(w: W, n: usize, records: &[MeasurementRecord]) -> Result<()> {
    let file = RecordFile { num_qubits: n, records: records.iter().map(RecordRow::from_record).collect() };
    serde_json::to_writer_pretty(w, &file)?;
    Ok(())
}

pub fn read_records_json<R: Read>(r: R) -> Result<(usize, Vec<MeasurementRecord>)> {
    let file: RecordFile = serde_json::from_reader(r)?;
    let recs = file.records.iter().map(|row| row.to_record(file.num_qubits)).collect::<Result<Vec<_>>>()?;
    Ok((file.num_qubits, recs))
}

#[derive(Serialize, Deserialize)]
struct CsvRow {
    observable: String,
    shots: u64,
    mean: f64,
}

/// CSV with columns `observable,shots,mean`; single strings only.
pub fn write_records_csv<W: Write>(w: W, records: &[MeasurementRecord]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for r in records {
        let row = RecordRow::from_record(r);
        if row.poly.is_some() {
            return Err(Error::Config("weighted observables need the JSON record format".into()));
        }
        out.serialize(CsvRow { observable: row.observable, shots: row.shots, mean: row.mean })?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_records_csv<R: Read>(r: R, n: usize) -> Result<Vec<MeasurementRecord>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(r);
    let mut out = Vec::new();
    for row in rdr.deserialize() {
        let row: CsvRow = row?;
        let s = PauliString::parse_sparse(&row.observable, n)?;
        out.push(MeasurementRecord::for_string(s, row.shots, row.mean)?);
    }
    Ok(out)
}

/// Reads a record file, choosing the format from the extension.
pub fn load_records(path: &Path, n: usize) -> Result<Vec<MeasurementRecord>> {
    let f = std::fs::File::open(path)?;
    match path.extension().and_then(|e| e.to_str()) {
        Some("csv") => read_records_csv(f, n),
        _ => {
            let (m, recs) = read_records_json(f)?;
            if m != n {
                return Err(Error::Shape(format!("records on {m} qubits, expected {n}")));
            }
            Ok(recs)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn z1() -> PauliString {
        PauliString::parse_sparse("Z1", 2).unwrap()
    }

    #[test]
    fn epsilon_reference_value() {
        // 50-digit evaluation of sqrt(2 ln(2000/0.003) / 1000)
        let e = epsilon(1000, 100, 0.003).unwrap();
        assert!((e - 0.149046706483988).abs() < 1e-12);
    }

    #[test]
    fn epsilon_scaling() {
        let e1 = epsilon(1000, 10, 0.01).unwrap();
        let e4 = epsilon(4000, 10, 0.01).unwrap();
        assert!((e4 - e1 / 2.0).abs() < 1e-15);
        assert!(epsilon(1000, 20, 0.01).unwrap() > e1);
    }

    #[test]
    fn epsilon_domain() {
        assert!(epsilon(0, 1, 0.1).is_err());
        assert!(epsilon(1, 0, 0.1).is_err());
        assert!(epsilon(1, 1, 0.0).is_err());
        assert!(epsilon(1, 1, 1.0).is_err());
    }

    #[test]
    fn tail_values() {
        assert!((hoeffding_tail(1, 2.0) - 0.270670566473225).abs() < 1e-14);
        let eps = epsilon(500, 7, 0.05).unwrap();
        assert!((hoeffding_tail(500, eps) - 0.05 / 7.0).abs() < 1e-15);
        assert!(hoeffding_tail(10, 0.3) > hoeffding_tail(11, 0.3));
        assert!(hoeffding_tail(10, 0.3) > hoeffding_tail(10, 0.31));
    }

    #[test]
    fn single_band() {
        let r = MeasurementRecord::for_string(z1(), 10_000, 0.3).unwrap();
        let b = build_intervals(&[r], 0.003).unwrap();
        assert!((b[0].half_width - 0.0360618639864).abs() < 1e-12);
        assert!((b[0].lo - (0.3 - 0.0360618639864)).abs() < 1e-12);
    }

    #[test]
    fn bands_are_clipped() {
        let r = MeasurementRecord::for_string(z1(), 10, 0.95).unwrap();
        let b = build_intervals(&[r], 0.1).unwrap();
        assert_eq!(b[0].hi, 1.0);
        assert!(b[0].lo < 0.95);
    }

    #[test]
    fn equal_shots_share_width() {
        let recs: Vec<_> =
            [0.1, -0.2, 0.5].iter().map(|&m| MeasurementRecord::for_string(z1(), 400, m).unwrap()).collect();
        let b = build_intervals(&recs, 0.05).unwrap();
        assert!(b.iter().all(|x| x.half_width == b[0].half_width));
        assert!(build_intervals(&[], 0.05).is_err());
    }

    #[test]
    fn record_validation() {
        assert!(MeasurementRecord::for_string(z1(), 0, 0.0).is_err());
        assert!(MeasurementRecord::for_string(z1(), 1, 1.5).is_err());
    }

    #[test]
    fn json_and_csv_round_trip() {
        let x = PauliString::parse_sparse("X1 Y2", 2).unwrap();
        let recs = vec![
            MeasurementRecord::for_string(z1(), 100, 0.25).unwrap(),
            MeasurementRecord::for_string(x, 50, -0.5).unwrap(),
        ];
        let mut buf = Vec::new();
        write_records_json(&mut buf, 2, &recs).unwrap();
        let (n, back) = read_records_json(buf.as_slice()).unwrap();
        assert_eq!((n, back.clone()), (2, recs.clone()));
        let mut buf = Vec::new();
        write_records_csv(&mut buf, &recs).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("observable,shots,mean\n"));
        assert_eq!(read_records_csv(buf.as_slice(), 2).unwrap(), recs);
    }

    #[test]
    fn weighted_observable_json() {
        let h = OperatorPoly::from_real_terms(2, [(0.5, z1()), (0.5, PauliString::parse_sparse("X1 X2", 2).unwrap())])
            .unwrap();
        let recs = vec![MeasurementRecord::new(h, 10, 0.1).unwrap()];
        let mut buf = Vec::new();
        write_records_json(&mut buf, 2, &recs).unwrap();
        assert_eq!(read_records_json(buf.as_slice()).unwrap().1, recs);
        assert!(write_records_csv(Vec::new(), &recs).is_err());
    }
}
