//! Seeded data generation shaped like the benchmark datasets.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::hql::{PartitionSpec, QualifiedName};
use crate::session::Session;
use crate::types::{DataType, Datum, Row};

/// Partition weights for the houses profile, derived from the byte sizes
/// of the five property-type partitions of the original dataset.
pub const PROPERTY_TYPE_WEIGHTS: [(&str, f64); 5] =
    [("D", 0.2304), ("F", 0.1811), ("O", 0.0045), ("S", 0.2767), ("T", 0.3073)];

#[derive(Debug, Clone, PartialEq)]
pub enum Dist {
    /// Row number: `prefix` plus a zero-padded counter for STRING, the
    /// 1-based row number for INT.
    Serial { prefix: &'static str },
    /// Uniform over `n` values: `prefix{k}` for STRING, `k` for INT.
    Pick { prefix: &'static str, n: usize },
    /// Occupation-style code `NN-NNNN`, uniform over `n` codes, or the
    /// row's own code when `serial`.
    OccCode { n: usize, serial: bool },
    Words(&'static [&'static str]),
    Weighted(Vec<(&'static str, f64)>),
    /// Uniform multiple of `step` in `[lo, hi]`.
    IntRange { lo: i64, hi: i64, step: i64 },
    /// Uniform with two decimal places in `[lo, hi)`.
    Decimal { lo: f64, hi: f64 },
    /// ISO date within `days` days from 2015-01-01.
    Day { days: u32 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ColumnGen {
    pub name: &'static str,
    pub dtype: DataType,
    pub dist: Dist,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenSpec {
    pub seed: u64,
    pub rows: usize,
    pub columns: Vec<ColumnGen>,
    /// Trailing column whose value counts follow the weights exactly
    /// (largest remainder), in shuffled order.
    pub partition: Option<(&'static str, Vec<(&'static str, f64)>)>,
}

impl GenSpec {
    pub fn validate(&self) -> Result<()> {
        if let Some((name, weights)) = &self.partition {
            let total: f64 = weights.iter().map(|w| w.1).sum();
            if (total - 1.0).abs() > 1e-9 || weights.iter().any(|w| w.1 < 0.0) {
                return Err(Error::Schema(format!("weights of {name} must be non-negative and sum to 1")));
            }
        }
        for c in &self.columns {
            if let Dist::Weighted(w) = &c.dist {
                let total: f64 = w.iter().map(|x| x.1).sum();
                if (total - 1.0).abs() > 1e-9 {
                    return Err(Error::Schema(format!("weights of {} must sum to 1", c.name)));
                }
            }
        }
        Ok(())
    }

    /// Column names and types of a generated row.
    pub fn schema(&self) -> Vec<(&'static str, DataType)> {
        let mut s: Vec<_> = self.columns.iter().map(|c| (c.name, c.dtype)).collect();
        if let Some((name, _)) = &self.partition {
            s.push((name, DataType::String));
        }
        s
    }
}

/// Converts days since 1970-01-01 to a civil date.
fn civil(days: i64) -> (i64, u32, u32) {
    let z = days + 719_468;
    let era = z.div_euclid(146_097);
    let doe = z.rem_euclid(146_097);
    let yoe = (doe - doe / 1460 + doe / 36_524 - doe / 146_096) / 365;
    let doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    let mp = (5 * doy + 2) / 153;
    let d = (doy - (153 * mp + 2) / 5 + 1) as u32;
    let m = if mp < 10 { mp + 3 } else { mp - 9 } as u32;
    let y = yoe + era * 400 + i64::from(m <= 2);
    (y, m, d)
}

const DAY_2015_01_01: i64 = 16_436;

pub fn occ_code(k: usize) -> String {
    format!("{:02}-{:04}", 11 + (k % 43) * 2, k)
}

fn text_or_int(dtype: DataType, text: String, int: i64) -> Datum {
    match dtype {
        DataType::Int => Datum::Int(int),
        DataType::Double => Datum::Double(int as f64),
        DataType::String => Datum::Str(text),
    }
}

fn draw(c: &ColumnGen, row: usize, rng: &mut ChaCha8Rng) -> Datum {
    match &c.dist {
        Dist::Serial { prefix } => text_or_int(c.dtype, format!("{prefix}{row:07}"), row as i64 + 1),
        Dist::Pick { prefix, n } => {
            let k = rng.gen_range(0..*n);
            text_or_int(c.dtype, format!("{prefix}{k}"), k as i64)
        }
        Dist::OccCode { n, serial } => {
            let k = if *serial { row } else { rng.gen_range(0..*n) };
            Datum::Str(occ_code(k))
        }
        Dist::Words(pool) => Datum::from(pool[rng.gen_range(0..pool.len())]),
        Dist::Weighted(w) => {
            let x: f64 = rng.gen();
            let mut acc = 0.0;
            let mut pick = w[w.len() - 1].0;
            for (v, p) in w {
                acc += p;
                if x < acc {
                    pick = v;
                    break;
                }
            }
            Datum::from(pick)
        }
        Dist::IntRange { lo, hi, step } => {
            let steps = (hi - lo) / step;
            let v = lo + rng.gen_range(0..=steps) * step;
            text_or_int(c.dtype, v.to_string(), v)
        }
        Dist::Decimal { lo, hi } => {
            let cents = rng.gen_range((lo * 100.0) as i64..(hi * 100.0) as i64);
            Datum::Double(cents as f64 / 100.0)
        }
        Dist::Day { days } => {
            let (y, m, d) = civil(DAY_2015_01_01 + rng.gen_range(0..*days) as i64);
            Datum::Str(format!("{y:04}-{m:02}-{d:02}"))
        }
    }
}

/// Exact per-value counts by largest remainder.
fn allocate(weights: &[(&'static str, f64)], rows: usize) -> Vec<usize> {
    let raw: Vec<f64> = weights.iter().map(|w| w.1 * rows as f64).collect();
    let mut counts: Vec<usize> = raw.iter().map(|r| r.floor() as usize).collect();
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&a, &b| (raw[b] - raw[b].floor()).total_cmp(&(raw[a] - raw[a].floor())).then(a.cmp(&b)));
    let short = rows - counts.iter().sum::<usize>();
    for &i in order.iter().take(short) {
        counts[i] += 1;
    }
    counts
}

pub fn generate_rows(spec: &GenSpec) -> Result<Vec<Row>> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut rows: Vec<Row> = (0..spec.rows)
        .map(|i| spec.columns.iter().map(|c| draw(c, i, &mut rng)).collect())
        .collect();
    if let Some((_, weights)) = &spec.partition {
        let mut labels: Vec<&str> = Vec::with_capacity(spec.rows);
        for (w, n) in weights.iter().zip(allocate(weights, spec.rows)) {
            labels.extend(std::iter::repeat_n(w.0, n));
        }
        labels.shuffle(&mut rng);
        for (row, l) in rows.iter_mut().zip(labels) {
            row.push(Datum::from(l));
        }
    }
    Ok(rows)
}

/// Generates rows and writes them through the INSERT path as `writers`
/// equal writer tasks. For a partitioned target the trailing generated
/// column feeds the dynamic partition column; otherwise it is an ordinary
/// column.
pub fn generate(session: &mut Session, spec: &GenSpec, table: &QualifiedName, writers: usize) -> Result<u64> {
    let def = session.table(table)?.clone();
    let want: Vec<(String, DataType)> = def.full_schema().into_iter().map(|c| (c.name, c.dtype)).collect();
    let have: Vec<(String, DataType)> = spec.schema().into_iter().map(|(n, t)| (n.to_string(), t)).collect();
    if want != have {
        return Err(Error::Schema(format!(
            "generator produces {} but {} has {}",
            describe(&have),
            def.qualified_name(),
            describe(&want)
        )));
    }
    let partition: Vec<PartitionSpec> = def
        .partition_columns
        .iter()
        .map(|c| PartitionSpec::Dynamic { column: c.name.clone() })
        .collect();
    let rows = generate_rows(spec)?;
    let writers = writers.clamp(1, rows.len().max(1));
    let tasks: Vec<usize> = (0..writers).map(|t| rows.len() * (t + 1) / writers - rows.len() * t / writers).collect();
    session.insert_rows_by_task(table, &partition, false, rows, &tasks)
}

fn describe(cols: &[(String, DataType)]) -> String {
    let parts: Vec<String> = cols.iter().map(|(n, t)| format!("{n} {}", t.keyword())).collect();
    format!("({})", parts.join(", "))
}

const CITIES: &[&str] = &[
    "LONDON", "LEEDS", "BRISTOL", "YORK", "BATH", "DERBY", "HULL", "LUTON", "POOLE", "READING", "SLOUGH", "WIGAN",
];
const COUNTIES: &[&str] = &["KENT", "ESSEX", "DEVON", "AVON", "DORSET", "SURREY", "NORFOLK", "CUMBRIA"];

/// Houses: nine data columns plus `propertytype`.
pub fn houses(rows: usize, seed: u64) -> GenSpec {
    use DataType::*;
    let col = |name, dtype, dist| ColumnGen { name, dtype, dist };
    GenSpec {
        seed,
        rows,
        columns: vec![
            col("id", String, Dist::Serial { prefix: "h" }),
            col("price", Int, Dist::IntRange { lo: 50_000, hi: 900_000, step: 2500 }),
            col("dateoftransfer", String, Dist::Day { days: 365 }),
            col("oldnew", String, Dist::Weighted(vec![("N", 0.9), ("Y", 0.1)])),
            col("duration", String, Dist::Weighted(vec![("F", 0.75), ("L", 0.25)])),
            col("city", String, Dist::Words(CITIES)),
            col("district", String, Dist::Pick { prefix: "d", n: 60 }),
            col("county", String, Dist::Words(COUNTIES)),
            col("ppd", String, Dist::Weighted(vec![("A", 0.95), ("B", 0.05)])),
        ],
        partition: Some(("propertytype", PROPERTY_TYPE_WEIGHTS.to_vec())),
    }
}

/// Occupations: 15 columns keyed by `sid`, referencing `jobs` codes.
pub fn occup(rows: usize, jobs: usize, seed: u64) -> GenSpec {
    use DataType::*;
    let col = |name, dtype, dist| ColumnGen { name, dtype, dist };
    GenSpec {
        seed,
        rows,
        columns: vec![
            col("sid", Int, Dist::Serial { prefix: "" }),
            col("occ_code", String, Dist::OccCode { n: jobs, serial: false }),
            col("area", String, Dist::Pick { prefix: "a", n: 400 }),
            col("area_type", Int, Dist::IntRange { lo: 1, hi: 4, step: 1 }),
            col("naics", String, Dist::Pick { prefix: "n", n: 90 }),
            col("i_group", String, Dist::Words(&["cross-industry", "sector", "3-digit", "4-digit"])),
            col("own_code", Int, Dist::IntRange { lo: 1, hi: 5, step: 1 }),
            col("tot_emp", Int, Dist::IntRange { lo: 30, hi: 90_000, step: 10 }),
            col("emp_prse", Double, Dist::Decimal { lo: 0.5, hi: 40.0 }),
            col("h_mean", Double, Dist::Decimal { lo: 9.0, hi: 120.0 }),
            col("a_mean", Int, Dist::IntRange { lo: 18_000, hi: 250_000, step: 10 }),
            col("h_median", Double, Dist::Decimal { lo: 9.0, hi: 110.0 }),
            col("a_median", Int, Dist::IntRange { lo: 18_000, hi: 230_000, step: 10 }),
            col("year", Int, Dist::IntRange { lo: 2012, hi: 2016, step: 1 }),
            col("annual", String, Dist::Weighted(vec![("TRUE", 0.1), ("FALSE", 0.9)])),
        ],
        partition: None,
    }
}

/// Occupation measurements: five columns sharing `sid` one-to-one.
pub fn occupdata(rows: usize, seed: u64) -> GenSpec {
    use DataType::*;
    let col = |name, dtype, dist| ColumnGen { name, dtype, dist };
    GenSpec {
        seed,
        rows,
        columns: vec![
            col("sid", Int, Dist::Serial { prefix: "" }),
            col("series", String, Dist::Pick { prefix: "OEU", n: 500 }),
            col("year", Int, Dist::IntRange { lo: 2012, hi: 2016, step: 1 }),
            col("period", String, Dist::Words(&["A01", "M13"])),
            col("value", Double, Dist::Decimal { lo: 10.0, hi: 150_000.0 }),
        ],
        partition: None,
    }
}

/// Job titles: five columns, one row per occupation code.
pub fn jobs(rows: usize, seed: u64) -> GenSpec {
    use DataType::*;
    let col = |name, dtype, dist| ColumnGen { name, dtype, dist };
    GenSpec {
        seed,
        rows,
        columns: vec![
            col("occ_code", String, Dist::OccCode { n: rows, serial: true }),
            col("occ_name", String, Dist::Serial { prefix: "occupation " }),
            col("occ_group", String, Dist::Words(&["major", "minor", "broad", "detailed"])),
            col("soc_level", Int, Dist::IntRange { lo: 1, hi: 4, step: 1 }),
            col("description", String, Dist::Pick { prefix: "duty ", n: 300 }),
        ],
        partition: None,
    }
}

/// Customers of the denormalization pair.
pub fn customers(rows: usize, seed: u64) -> GenSpec {
    use DataType::*;
    let col = |name, dtype, dist| ColumnGen { name, dtype, dist };
    GenSpec {
        seed,
        rows,
        columns: vec![
            col("id", Int, Dist::Serial { prefix: "" }),
            col("name", String, Dist::Pick { prefix: "name", n: 500 }),
            col("surname", String, Dist::Pick { prefix: "surname", n: 2000 }),
            col("city", String, Dist::Words(CITIES)),
        ],
        partition: None,
    }
}

/// Purchases referencing `customers` ids.
pub fn purchases(rows: usize, customers: usize, seed: u64) -> GenSpec {
    use DataType::*;
    let col = |name, dtype, dist| ColumnGen { name, dtype, dist };
    GenSpec {
        seed,
        rows,
        columns: vec![
            col("fid", Int, Dist::IntRange { lo: 1, hi: customers.max(1) as i64, step: 1 }),
            col("product", String, Dist::Pick { prefix: "product", n: 200 }),
            col("qty", Int, Dist::IntRange { lo: 1, hi: 20, step: 1 }),
            col("pdate", String, Dist::Day { days: 365 }),
        ],
        partition: None,
    }
}

/// Pre-joins purchases with their customers: customer columns, then the
/// purchase columns other than the reference.
pub fn denormalize(customers: &[Row], purchases: &[Row]) -> Vec<Row> {
    let by_id: std::collections::HashMap<&Datum, &Row> = customers.iter().map(|c| (&c[0], c)).collect();
    purchases
        .iter()
        .filter_map(|p| {
            by_id.get(&p[0]).map(|c| {
                let mut row = (*c).clone();
                row.extend(p[1..].iter().cloned());
                row
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn civil_dates() {
        assert_eq!(civil(0), (1970, 1, 1));
        assert_eq!(civil(DAY_2015_01_01), (2015, 1, 1));
        assert_eq!(civil(DAY_2015_01_01 + 58), (2015, 2, 28));
        assert_eq!(civil(DAY_2015_01_01 + 59), (2015, 3, 1));
        assert_eq!(civil(DAY_2015_01_01 + 364), (2015, 12, 31));
    }

    #[test]
    fn exact_allocation() {
        let c = allocate(&PROPERTY_TYPE_WEIGHTS, 100_000);
        assert_eq!(c, vec![23_040, 18_110, 450, 27_670, 30_730]);
        let c = allocate(&PROPERTY_TYPE_WEIGHTS, 7);
        assert_eq!(c.iter().sum::<usize>(), 7);
        assert_eq!(allocate(&PROPERTY_TYPE_WEIGHTS, 0), vec![0; 5]);
    }

    #[test]
    fn same_seed_same_rows() {
        let a = generate_rows(&houses(500, 7)).unwrap();
        assert_eq!(a, generate_rows(&houses(500, 7)).unwrap());
        assert_ne!(a, generate_rows(&houses(500, 8)).unwrap());
        assert_eq!(a[0].len(), 10);
    }

    #[test]
    fn bad_weights_are_rejected() {
        let mut s = houses(10, 1);
        s.partition = Some(("propertytype", vec![("D", 0.5), ("F", 0.4)]));
        assert!(matches!(generate_rows(&s), Err(Error::Schema(_))));
    }
}
