use std::io::{Read, Write};
use std::path::Path;

use super::dataset::{VoteDataset, VoteRow};
use crate::error::{Error, Result};

/// Reads `item,truth,v1,...,vn[,adv_mask]` from a file.
pub fn ingest_csv(path: impl AsRef<Path>) -> Result<VoteDataset> {
    read_csv(std::fs::File::open(path)?)
}

fn parse_bit(field: &str, line: u64, what: &str) -> Result<bool> {
    match field {
        "0" => Ok(false),
        "1" => Ok(true),
        other => Err(Error::Parse {
            line,
            msg: format!("{what} must be 0 or 1, got '{other}'"),
        }),
    }
}

pub fn read_csv(reader: impl Read) -> Result<VoteDataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .quoting(false)
        .from_reader(reader);
    let header = rdr
        .headers()
        .map_err(|e| Error::Parse {
            line: 1,
            msg: e.to_string(),
        })?
        .clone();
    let cols: Vec<&str> = header.iter().collect();
    let has_mask = cols.last() == Some(&"adv_mask");
    let n = cols.len().saturating_sub(2 + usize::from(has_mask));
    let expected: Vec<String> = ["item".to_string(), "truth".to_string()]
        .into_iter()
        .chain((1..=n).map(|i| format!("v{i}")))
        .collect();
    if n == 0 || cols[..n + 2] != expected.iter().map(String::as_str).collect::<Vec<_>>()[..] {
        return Err(Error::Schema(format!(
            "header must be item,truth,v1,...,vn[,adv_mask], got {}",
            cols.join(",")
        )));
    }

    let mut rows = Vec::new();
    let mut k_seen: Option<usize> = None;
    for rec in rdr.records() {
        let rec = rec.map_err(|e| Error::Parse {
            line: e.position().map_or(0, |p| p.line()),
            msg: e.to_string(),
        })?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() != cols.len() {
            return Err(Error::Schema(format!(
                "line {line}: expected {} fields, found {}",
                cols.len(),
                rec.len()
            )));
        }
        let truth = u8::from(parse_bit(&rec[1], line, "truth")?);
        let votes: Vec<bool> = (0..n)
            .map(|i| parse_bit(&rec[2 + i], line, "vote"))
            .collect::<Result<_>>()?;
        let mask: Vec<bool> = if has_mask {
            let m = &rec[n + 2];
            if m.len() != n {
                return Err(Error::Schema(format!("line {line}: adv_mask has length {}, expected {n}", m.len())));
            }
            m.chars()
                .map(|c| parse_bit(&c.to_string(), line, "adv_mask bit"))
                .collect::<Result<_>>()?
        } else {
            vec![false; n]
        };
        let k = mask.iter().filter(|&&b| b).count();
        if *k_seen.get_or_insert(k) != k {
            return Err(Error::Schema(format!("line {line}: adversary count differs from earlier rows")));
        }
        let (mut truthful, mut adversarial) = (Vec::new(), Vec::new());
        for (v, adv) in votes.into_iter().zip(mask) {
            if adv {
                adversarial.push(v);
            } else {
                truthful.push(v);
            }
        }
        rows.push(VoteRow {
            item: rec[0].to_string(),
            truth,
            truthful,
            adversarial,
        });
    }
    let k = k_seen.unwrap_or(0);
    VoteDataset::new(n - k, k, rows)
}

/// Writes truthful votes first, then adversarial ones; the mask column is
/// present when the dataset has adversaries.
pub fn write_csv(ds: &VoteDataset, writer: impl Write) -> Result<()> {
    let mut w = csv::WriterBuilder::new().from_writer(writer);
    let n = ds.n();
    let mut header = vec!["item".to_string(), "truth".to_string()];
    header.extend((1..=n).map(|i| format!("v{i}")));
    if ds.k > 0 {
        header.push("adv_mask".into());
    }
    w.write_record(&header).map_err(csv_io)?;
    let mask: String = "0".repeat(ds.truthful) + &"1".repeat(ds.k);
    for r in &ds.rows {
        let mut rec = vec![r.item.clone(), r.truth.to_string()];
        rec.extend(r.truthful.iter().chain(&r.adversarial).map(|&v| u8::from(v).to_string()));
        if ds.k > 0 {
            rec.push(mask.clone());
        }
        w.write_record(&rec).map_err(csv_io)?;
    }
    w.flush()?;
    Ok(())
}

fn csv_io(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Params;
    use crate::simulation::{apply_adversaries, synthesize, Strategy};

    #[test]
    fn single_row() {
        let ds = read_csv("item,truth,v1,v2,v3\na,1,1,0,1\n".as_bytes()).unwrap();
        assert_eq!(ds.rows.len(), 1);
        assert_eq!(ds.truthful, 3);
        assert_eq!(ds.k, 0);
    }

    #[test]
    fn bad_vote_reports_line() {
        match read_csv("item,truth,v1,v2\na,1,1,0\nb,0,2,0\n".as_bytes()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn width_mismatch_is_schema_error() {
        assert!(matches!(
            read_csv("item,truth,v1,v2\na,1,1\n".as_bytes()),
            Err(Error::Schema(_))
        ));
        assert!(matches!(read_csv("id,truth,v1\n".as_bytes()), Err(Error::Schema(_))));
    }

    #[test]
    fn mask_splits_votes() {
        let ds = read_csv("item,truth,v1,v2,v3,adv_mask\na,1,1,0,1,010\n".as_bytes()).unwrap();
        assert_eq!((ds.truthful, ds.k), (2, 1));
        assert_eq!(ds.rows[0].truthful, vec![true, true]);
        assert_eq!(ds.rows[0].adversarial, vec![false]);
    }

    #[test]
    fn round_trip() {
        let p = Params::new(7, 2, 0.5, 0.8, 0.1).unwrap();
        let ds = synthesize(&p, 40, 5).unwrap();
        let ds = apply_adversaries(&ds, &Strategy::Random, 5).unwrap();
        let mut buf = Vec::new();
        write_csv(&ds, &mut buf).unwrap();
        assert_eq!(read_csv(buf.as_slice()).unwrap(), ds);
    }
}
