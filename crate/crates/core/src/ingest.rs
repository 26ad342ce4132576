//! Trial records, count tables, and nonparametric bootstrap.
//!
//! Trial CSV files carry a header `context_i,context_j,a,b` followed by one
//! integer row per trial, with `i, j ∈ {1, 2}` and `a, b ∈ {-1, 1}`.

use std::io::Read;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::types::{ContextLabel, CyclicSystem, Outcome, PairJoint, CELLS};

pub const CSV_HEADER: [&str; 4] = ["context_i", "context_j", "a", "b"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TrialRecord {
    pub context: ContextLabel,
    pub a: Outcome,
    pub b: Outcome,
}

impl TrialRecord {
    pub fn new(context: ContextLabel, a: Outcome, b: Outcome) -> Self {
        TrialRecord { context, a, b }
    }
}

/// Per-context 2×2 counts in `pp, pm, mp, mm` order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct CountTable {
    counts: [[u64; 4]; 4],
}

impl CountTable {
    pub fn from_counts(counts: [[u64; 4]; 4]) -> Self {
        CountTable { counts }
    }

    pub fn counts(&self, ctx: ContextLabel) -> [u64; 4] {
        self.counts[ctx.index()]
    }

    pub fn total(&self, ctx: ContextLabel) -> u64 {
        self.counts[ctx.index()].iter().sum()
    }

    pub fn totals(&self) -> [u64; 4] {
        ContextLabel::ALL.map(|c| self.total(c))
    }

    pub fn add(&mut self, record: &TrialRecord) {
        let cell = CELLS
            .iter()
            .position(|&(a, b)| a == record.a && b == record.b)
            .expect("every outcome pair has a cell");
        self.counts[record.context.index()][cell] += 1;
    }

    fn check_nonempty(&self) -> Result<()> {
        match ContextLabel::ALL.into_iter().find(|&c| self.total(c) == 0) {
            Some(ctx) => Err(Error::MissingContext(ctx)),
            None => Ok(()),
        }
    }
}

pub fn accumulate<'a, I>(records: I) -> CountTable
where
    I: IntoIterator<Item = &'a TrialRecord>,
{
    let mut table = CountTable::default();
    for r in records {
        table.add(r);
    }
    table
}

/// Empirical frequencies of every context.
pub fn normalize(counts: &CountTable) -> Result<CyclicSystem> {
    counts.check_nonempty()?;
    let joints = ContextLabel::ALL.map(|ctx| {
        let total = counts.total(ctx) as f64;
        let cells = counts.counts(ctx);
        let p = cells.map(|c| c as f64 / total);
        PairJoint::new(ctx, p)
    });
    CyclicSystem::from_joints(joints.into_iter().collect::<Result<Vec<_>>>()?)
}

/// Draws one multinomial count vector per context from the empirical cell
/// frequencies, using a stream derived from `(seed, replicate)`.
pub fn resample_counts(counts: &CountTable, seed: u64, replicate: u64) -> CountTable {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(replicate);
    let mut out = [[0u64; 4]; 4];
    for ctx in ContextLabel::ALL {
        let cells = counts.counts(ctx);
        let total = counts.total(ctx);
        let mut remaining_n = total;
        let mut remaining_mass = total;
        for k in 0..4 {
            if remaining_n == 0 {
                break;
            }
            if k == 3 || cells[k] == remaining_mass {
                out[ctx.index()][k] = remaining_n;
                break;
            }
            let p = cells[k] as f64 / remaining_mass as f64;
            let draw = if cells[k] == 0 {
                0
            } else {
                Binomial::new(remaining_n, p)
                    .expect("probability in [0, 1]")
                    .sample(&mut rng)
            };
            out[ctx.index()][k] = draw;
            remaining_n -= draw;
            remaining_mass -= cells[k];
        }
    }
    CountTable::from_counts(out)
}

/// Independent per-context bootstrap replicates. Replicate `r` depends only
/// on `(seed, r)`, so the result is identical however the work is split.
pub fn bootstrap_resample(
    counts: &CountTable,
    seed: u64,
    replicates: usize,
) -> Result<Vec<CyclicSystem>> {
    if replicates == 0 {
        return Err(Error::InvalidArgument(
            "replicates must be at least 1".into(),
        ));
    }
    counts.check_nonempty()?;
    (0..replicates as u64)
        .into_par_iter()
        .map(|r| normalize(&resample_counts(counts, seed, r)))
        .collect()
}

fn parse_field(line: u64, name: &str, raw: &str) -> Result<i64> {
    raw.trim().parse::<i64>().map_err(|_| Error::Csv {
        line,
        message: format!("field {name}: expected an integer, got {raw:?}"),
    })
}

/// Reads trial rows; any malformed row aborts with its 1-based line number.
pub fn read_trials_csv<R: Read>(reader: R) -> Result<Vec<TrialRecord>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header = rdr.headers().map_err(|e| Error::Csv {
        line: 1,
        message: e.to_string(),
    })?;
    if header.iter().collect::<Vec<_>>() != CSV_HEADER {
        return Err(Error::Csv {
            line: 1,
            message: format!("expected header {:?}", CSV_HEADER.join(",")),
        });
    }
    let mut out = Vec::new();
    for row in rdr.records() {
        let row = row.map_err(|e| Error::Csv {
            line: e.position().map_or(0, |p| p.line()),
            message: e.to_string(),
        })?;
        let line = row.position().map_or(0, |p| p.line());
        if row.len() != 4 {
            return Err(Error::Csv {
                line,
                message: format!("expected 4 fields, got {}", row.len()),
            });
        }
        let v: Vec<i64> = CSV_HEADER
            .iter()
            .zip(row.iter())
            .map(|(name, raw)| parse_field(line, name, raw))
            .collect::<Result<_>>()?;
        let wrap = |e: Error| Error::Csv {
            line,
            message: e.to_string(),
        };
        out.push(TrialRecord {
            context: ContextLabel::new(v[0], v[1]).map_err(wrap)?,
            a: Outcome::try_from(v[2]).map_err(wrap)?,
            b: Outcome::try_from(v[3]).map_err(wrap)?,
        });
    }
    Ok(out)
}

pub fn write_trials_csv<W: std::io::Write>(writer: W, records: &[TrialRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let io = |e: csv::Error| Error::Io(std::io::Error::other(e));
    w.write_record(CSV_HEADER).map_err(io)?;
    for r in records {
        w.write_record([
            r.context.i().to_string(),
            r.context.j().to_string(),
            r.a.value().to_string(),
            r.b.value().to_string(),
        ])
        .map_err(io)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ctx(i: i64, j: i64) -> ContextLabel {
        ContextLabel::new(i, j).unwrap()
    }

    const P: Outcome = Outcome::Plus;
    const M: Outcome = Outcome::Minus;

    #[test]
    fn accumulate_examples() {
        assert_eq!(accumulate(&[]), CountTable::default());

        let recs: Vec<_> = ContextLabel::ALL
            .iter()
            .map(|&c| TrialRecord::new(c, P, P))
            .collect();
        let t = accumulate(&recs);
        for c in ContextLabel::ALL {
            assert_eq!(t.counts(c), [1, 0, 0, 0]);
        }

        let mut recs = Vec::new();
        for &(a, b) in &CELLS {
            recs.extend(std::iter::repeat_n(TrialRecord::new(ctx(1, 1), a, b), 25));
        }
        let t = accumulate(&recs);
        assert_eq!(t.counts(ctx(1, 1)), [25; 4]);
        assert_eq!(t.total(ctx(1, 1)), 100);
    }

    #[test]
    fn normalize_examples() {
        let t = CountTable::from_counts([[25; 4]; 4]);
        assert_eq!(normalize(&t).unwrap(), CyclicSystem::uniform());

        let t = CountTable::from_counts([[50, 0, 0, 50], [25; 4], [25; 4], [25; 4]]);
        let sys = normalize(&t).unwrap();
        assert_eq!(sys.joint(ctx(1, 1)).probs(), [0.5, 0.0, 0.0, 0.5]);

        let t = CountTable::from_counts([[25; 4], [0; 4], [25; 4], [25; 4]]);
        assert!(matches!(normalize(&t), Err(Error::MissingContext(c)) if c == ctx(1, 2)));
    }

    #[test]
    fn degenerate_bootstrap_is_identity() {
        let t = CountTable::from_counts([[0, 0, 7, 0], [3, 0, 0, 0], [0, 5, 0, 0], [0, 0, 0, 9]]);
        let reps = bootstrap_resample(&t, 11, 1).unwrap();
        assert_eq!(reps.len(), 1);
        assert_eq!(reps[0], normalize(&t).unwrap());
    }

    #[test]
    fn bootstrap_is_deterministic() {
        let t =
            CountTable::from_counts([[10, 20, 30, 40], [5, 5, 5, 5], [1, 2, 3, 4], [9, 1, 1, 9]]);
        assert_eq!(
            bootstrap_resample(&t, 42, 2).unwrap(),
            bootstrap_resample(&t, 42, 2).unwrap()
        );
        assert_ne!(
            bootstrap_resample(&t, 42, 2).unwrap(),
            bootstrap_resample(&t, 43, 2).unwrap()
        );
        assert!(bootstrap_resample(&t, 42, 0).is_err());
    }

    #[test]
    fn resample_preserves_totals() {
        let t =
            CountTable::from_counts([[10, 20, 30, 40], [0, 5, 0, 5], [1, 2, 3, 4], [9, 1, 1, 9]]);
        for r in 0..50 {
            let s = resample_counts(&t, 1, r);
            assert_eq!(s.totals(), t.totals());
            // empty cells stay empty
            assert_eq!(s.counts(ctx(1, 2))[0], 0);
            assert_eq!(s.counts(ctx(1, 2))[2], 0);
        }
    }

    #[test]
    fn uniform_bootstrap_concentrates() {
        let t = CountTable::from_counts([[250; 4]; 4]);
        let reps = bootstrap_resample(&t, 2024, 100).unwrap();
        let cells: Vec<f64> = reps
            .iter()
            .flat_map(|s| s.joints().iter().flat_map(|j| j.probs()))
            .collect();
        let close = cells.iter().filter(|&&p| (p - 0.25).abs() <= 0.05).count();
        assert!(close as f64 >= 0.95 * cells.len() as f64);
    }

    #[test]
    fn csv_parsing() {
        let text = "context_i,context_j,a,b\n1,1,1,-1\n2,2,-1,-1\n";
        let recs = read_trials_csv(text.as_bytes()).unwrap();
        assert_eq!(
            recs,
            vec![
                TrialRecord::new(ctx(1, 1), P, M),
                TrialRecord::new(ctx(2, 2), M, M)
            ]
        );

        let err =
            read_trials_csv("context_i,context_j,a,b\n1,1,1,1\n1,3,1,1\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Csv { line: 3, .. }), "{err}");
        let err = read_trials_csv("context_i,context_j,a,b\n1,1,0,1\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Csv { line: 2, .. }));
        let err = read_trials_csv("context_i,context_j,a,b\n1,1,x,1\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Csv { line: 2, .. }));
        let err = read_trials_csv("i,j,a,b\n1,1,1,1\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Csv { line: 1, .. }));
        let err = read_trials_csv("context_i,context_j,a,b\n1,1,1\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Csv { line: 2, .. }));
    }

    #[test]
    fn csv_write_read_roundtrip() {
        let recs = vec![
            TrialRecord::new(ctx(2, 1), P, M),
            TrialRecord::new(ctx(1, 2), M, P),
        ];
        let mut buf = Vec::new();
        write_trials_csv(&mut buf, &recs).unwrap();
        assert_eq!(read_trials_csv(buf.as_slice()).unwrap(), recs);
    }
}
