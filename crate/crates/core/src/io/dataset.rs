use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use chrono::{Datelike, Days, NaiveDate};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Athlete, Dataset, Performance};

const DAYS_PER_YEAR: f64 = 365.25;

/// Month and day on which every season starts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct SeasonStart {
    pub month: u32,
    pub day: u32,
}

impl Default for SeasonStart {
    fn default() -> Self {
        Self { month: 1, day: 1 }
    }
}

impl FromStr for SeasonStart {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Config(format!("season start {s:?} is not MM-DD"));
        let (m, d) = s.trim().split_once('-').ok_or_else(bad)?;
        let start = Self {
            month: m.parse().map_err(|_| bad())?,
            day: d.parse().map_err(|_| bad())?,
        };
        // a leap day would not exist in most years
        if (start.month, start.day) == (2, 29) || NaiveDate::from_ymd_opt(2001, start.month, start.day).is_none() {
            return Err(bad());
        }
        Ok(start)
    }
}

impl TryFrom<String> for SeasonStart {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<SeasonStart> for String {
    fn from(s: SeasonStart) -> String {
        s.to_string()
    }
}

impl fmt::Display for SeasonStart {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:02}-{:02}", self.month, self.day)
    }
}

/// Start of the season with label `year`.
pub fn season_start_date(start: SeasonStart, year: i32) -> NaiveDate {
    NaiveDate::from_ymd_opt(year, start.month, start.day).expect("validated season start")
}

/// Season label and days elapsed since its start.
fn season_of(start: SeasonStart, date: NaiveDate) -> (i32, u64) {
    let mut year = date.year();
    if date < season_start_date(start, year) {
        year -= 1;
    }
    let days = (date - season_start_date(start, year)).num_days() as u64;
    (year, days)
}

/// How a confounder column was turned into numbers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "coding", rename_all = "snake_case")]
pub enum ConfounderCoding {
    /// Used as read.
    Numeric,
    /// 1 for `level`, 0 for `other`.
    Indicator { level: String, other: String },
}

/// What loading kept and dropped.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LoadReport {
    pub rows: usize,
    pub athletes: usize,
    pub performances: usize,
    /// Athletes below the minimum performance count, with their counts.
    pub dropped: Vec<(String, usize)>,
    pub confounders: Vec<(String, ConfounderCoding)>,
}

struct Row {
    athlete: String,
    date: NaiveDate,
    value: f64,
    age: f64,
    raw_confounders: Vec<String>,
}

fn parse_date(s: &str, line: u64, column: &str) -> Result<NaiveDate> {
    NaiveDate::parse_from_str(s.trim(), "%Y-%m-%d")
        .map_err(|e| Error::Data(format!("line {line}: {column} {s:?}: {e}")))
}

fn parse_real(s: &str, line: u64, column: &str) -> Result<f64> {
    s.trim()
        .parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| Error::Data(format!("line {line}: {column} {s:?} is not a finite number")))
}

/// Numeric columns are used as is unless they take exactly two values, in
/// which case the larger one is coded 1 (a 25/50 m pool column becomes an
/// indicator of the 50 m pool). Text columns must have exactly two levels.
fn code_column(name: &str, values: &[&str]) -> Result<(ConfounderCoding, Vec<f64>)> {
    let numbers: Option<Vec<f64>> = values.iter().map(|v| v.trim().parse::<f64>().ok()).collect();
    let levels: BTreeSet<&str> = values.iter().map(|v| v.trim()).collect();
    match numbers {
        Some(nums) if levels.len() != 2 => {
            if nums.iter().any(|x| !x.is_finite()) {
                return Err(Error::Data(format!("confounder {name} has non-finite values")));
            }
            Ok((ConfounderCoding::Numeric, nums))
        }
        _ if levels.len() == 2 => {
            let mut lv: Vec<&str> = levels.into_iter().collect();
            if numbers.is_some() {
                lv.sort_by(|a, b| a.parse::<f64>().unwrap().total_cmp(&b.parse::<f64>().unwrap()));
            }
            let (other, level) = (lv[0], lv[1]);
            let coded = values.iter().map(|v| f64::from(u8::from(v.trim() == level))).collect();
            Ok((
                ConfounderCoding::Indicator {
                    level: level.to_string(),
                    other: other.to_string(),
                },
                coded,
            ))
        }
        _ => Err(Error::Data(format!(
            "confounder {name} is text with {} levels; only two-level text columns are supported",
            levels.len()
        ))),
    }
}

/// Read a performance table.
///
/// Required columns are `athlete_id`, `date` (YYYY-MM-DD) and `performance`,
/// plus either `age` (years) or `birth_date`. Each listed confounder must be
/// a column. Seasons start on `season_start` every year; an athlete's first
/// season is the one holding their first performance, and the fraction
/// through a season is days elapsed over 365.25. Athletes with fewer than
/// `min_performances` rows are dropped and listed in the report.
pub fn read_dataset<R: Read>(
    reader: R,
    confounders: &[String],
    season_start: SeasonStart,
    min_performances: usize,
) -> Result<(Dataset, LoadReport)> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let col = |name: &str| headers.iter().position(|h| h == name);
    let need = |name: &str| col(name).ok_or_else(|| Error::Data(format!("missing column {name:?}")));
    let id_col = need("athlete_id")?;
    let date_col = need("date")?;
    let perf_col = need("performance")?;
    let age_col = col("age");
    let birth_col = col("birth_date");
    if age_col.is_none() && birth_col.is_none() {
        return Err(Error::Data("need an age or a birth_date column".into()));
    }
    let conf_cols = confounders.iter().map(|c| need(c)).collect::<Result<Vec<_>>>()?;

    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        let field = |i: usize| rec.get(i).unwrap_or("");
        let date = parse_date(field(date_col), line, "date")?;
        let age = match (age_col, birth_col) {
            (Some(a), _) if !field(a).is_empty() => parse_real(field(a), line, "age")?,
            (_, Some(b)) => {
                let birth = parse_date(field(b), line, "birth_date")?;
                (date - birth).num_days() as f64 / DAYS_PER_YEAR
            }
            _ => return Err(Error::Data(format!("line {line}: no age"))),
        };
        let athlete = field(id_col).to_string();
        if athlete.is_empty() {
            return Err(Error::Data(format!("line {line}: empty athlete_id")));
        }
        rows.push(Row {
            athlete,
            date,
            value: parse_real(field(perf_col), line, "performance")?,
            age,
            raw_confounders: conf_cols.iter().map(|&c| field(c).to_string()).collect(),
        });
    }

    let mut report = LoadReport {
        rows: rows.len(),
        ..Default::default()
    };
    let mut by_athlete: BTreeMap<String, Vec<Row>> = BTreeMap::new();
    let mut order = Vec::new();
    for row in rows {
        if !by_athlete.contains_key(&row.athlete) {
            order.push(row.athlete.clone());
        }
        by_athlete.entry(row.athlete.clone()).or_default().push(row);
    }
    let mut kept: Vec<(String, Vec<Row>)> = Vec::new();
    for id in order {
        let mut r = by_athlete.remove(&id).expect("grouped");
        if r.len() < min_performances {
            report.dropped.push((id, r.len()));
            continue;
        }
        // stable: same-day rows keep file order
        r.sort_by_key(|x| x.date);
        kept.push((id, r));
    }

    let mut coded: Vec<Vec<f64>> = Vec::new();
    for (j, name) in confounders.iter().enumerate() {
        let values: Vec<&str> = kept
            .iter()
            .flat_map(|(_, rows)| rows.iter().map(move |r| r.raw_confounders[j].as_str()))
            .collect();
        let (coding, nums) = code_column(name, &values)?;
        report.confounders.push((name.clone(), coding));
        coded.push(nums);
    }

    let mut athletes = Vec::with_capacity(kept.len());
    let mut k = 0;
    for (id, rows) in kept {
        let (first_year, _) = season_of(season_start, rows[0].date);
        let mut performances = Vec::with_capacity(rows.len());
        for r in &rows {
            let (year, days) = season_of(season_start, r.date);
            let z = (days as f64 / DAYS_PER_YEAR).min(1.0 - f64::EPSILON);
            performances.push(Performance {
                value: r.value,
                age: r.age,
                season: (year - first_year) as usize,
                season_fraction: z,
                confounders: coded.iter().map(|c| c[k]).collect(),
            });
            k += 1;
        }
        let seasons = performances.last().map_or(0, |p| p.season + 1);
        let athlete = Athlete {
            id,
            seasons,
            performances,
        };
        athletes.push(athlete);
    }
    report.athletes = athletes.len();
    report.performances = k;
    let dataset = Dataset::new(athletes, 1.0, confounders.to_vec())?;
    Ok((dataset, report))
}

/// [`read_dataset`] from a file path.
pub fn load_dataset(
    path: &Path,
    confounders: &[String],
    season_start: SeasonStart,
    min_performances: usize,
) -> Result<(Dataset, LoadReport)> {
    let file = std::fs::File::open(path)
        .map_err(|e| Error::Data(format!("cannot open {}: {e}", path.display())))?;
    read_dataset(std::io::BufReader::new(file), confounders, season_start, min_performances)
}

/// Write a dataset in the layout [`read_dataset`] accepts, with every
/// athlete's first season labelled `first_year`. Ages are written
/// explicitly; dates are rounded down to whole days, so re-reading moves
/// season fractions by less than a day.
pub fn write_dataset<W: Write>(
    writer: W,
    dataset: &Dataset,
    season_start: SeasonStart,
    first_year: i32,
) -> Result<()> {
    if dataset.season_length != 1.0 {
        return Err(Error::InvalidArgument("only one-year seasons map to dates".into()));
    }
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["athlete_id".to_string(), "date".into(), "performance".into(), "age".into()];
    header.extend(dataset.confounder_names.iter().cloned());
    w.write_record(&header)?;
    for a in &dataset.athletes {
        for p in &a.performances {
            let start = season_start_date(season_start, first_year + p.season as i32);
            let next = season_start_date(season_start, first_year + p.season as i32 + 1);
            let length = (next - start).num_days() as u64;
            let days = ((p.season_fraction * DAYS_PER_YEAR).floor() as u64).min(length - 1);
            let date = start + Days::new(days);
            let mut rec = vec![
                a.id.clone(),
                date.format("%Y-%m-%d").to_string(),
                format!("{}", p.value),
                format!("{}", p.age),
            ];
            rec.extend(p.confounders.iter().map(|x| format!("{x}")));
            w.write_record(&rec)?;
        }
    }
    w.flush()?;
    Ok(())
}
