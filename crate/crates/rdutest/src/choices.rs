//! Choice data files: one CSV row per individual decision.
//!
//! Schema: header `subject_id,menu_id,choice_id`, identifiers in
//! `[A-Za-z0-9_-]+`. Rows aggregate to per-menu counts in catalog menu
//! order; menus that never appear are dropped from the test (with their ids
//! reported) rather than treated as zero-frequency evidence.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::model::{Catalog, MenuBlock, StochasticChoiceData};

/// Data joined against a catalog: per-menu counts for the menus that appear,
/// the catalog index of each retained menu, and the ids of menus without
/// observations.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadedChoices {
    pub data: StochasticChoiceData,
    /// Catalog menu index of each data block, ascending.
    pub menu_indices: Vec<usize>,
    pub dropped_menus: Vec<String>,
}

pub fn load_choices(path: &Path, catalog: &Catalog) -> Result<LoadedChoices> {
    let file = fs::File::open(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(file);

    let headers = reader
        .headers()
        .map_err(|e| Error::invalid(format!("{}: {e}", path.display())))?;
    let expected = ["subject_id", "menu_id", "choice_id"];
    if headers.iter().collect::<Vec<_>>() != expected {
        return Err(Error::invalid(format!(
            "{}: header must be {:?}, got {:?}",
            path.display(),
            expected.join(","),
            headers.iter().collect::<Vec<_>>().join(",")
        )));
    }

    let menu_by_id: HashMap<&str, usize> = catalog
        .menu_ids
        .iter()
        .enumerate()
        .map(|(i, id)| (id.as_str(), i))
        .collect();
    let lottery_by_id: HashMap<&str, usize> = catalog
        .lottery_ids
        .iter()
        .enumerate()
        .map(|(i, id)| (id.as_str(), i))
        .collect();

    let mut counts: Vec<HashMap<usize, u64>> = vec![HashMap::new(); catalog.menus.len()];
    let mut rows = 0u64;
    for record in reader.records() {
        let record = record.map_err(|e| Error::invalid(format!("{}: {e}", path.display())))?;
        let line = record
            .position()
            .map(|p| p.line() as usize)
            .unwrap_or(rows as usize + 2);
        let row_error = |message: String| Error::DataRow {
            path: path.display().to_string(),
            line,
            message,
        };
        if record.len() != 3 {
            return Err(row_error(format!(
                "expected 3 fields, got {}",
                record.len()
            )));
        }
        let subject = &record[0];
        if subject.is_empty() {
            return Err(row_error("empty subject_id".into()));
        }
        let menu_id = &record[1];
        let choice_id = &record[2];
        let &menu = menu_by_id
            .get(menu_id)
            .ok_or_else(|| row_error(format!("unknown menu {menu_id:?}")))?;
        let &choice = lottery_by_id
            .get(choice_id)
            .ok_or_else(|| row_error(format!("unknown lottery {choice_id:?}")))?;
        if !catalog.menus[menu].contains(choice) {
            return Err(row_error(format!(
                "lottery {choice_id:?} is not a member of menu {menu_id:?}"
            )));
        }
        *counts[menu].entry(choice).or_insert(0) += 1;
        rows += 1;
    }
    if rows == 0 {
        return Err(Error::invalid(format!(
            "{}: no choice rows",
            path.display()
        )));
    }

    let mut blocks = Vec::new();
    let mut menu_indices = Vec::new();
    let mut dropped_menus = Vec::new();
    for (j, menu_counts) in counts.into_iter().enumerate() {
        if menu_counts.is_empty() {
            dropped_menus.push(catalog.menu_ids[j].clone());
            continue;
        }
        blocks.push(MenuBlock::new(
            catalog.menus[j].clone(),
            menu_counts.into_iter().collect(),
        )?);
        menu_indices.push(j);
    }
    Ok(LoadedChoices {
        data: StochasticChoiceData::new(blocks)?,
        menu_indices,
        dropped_menus,
    })
}

/// Writes one synthetic subject per observation, menus in block order. The
/// byte output is a pure function of the data, so identical runs produce
/// identical files.
pub fn write_choices(
    path: &Path,
    catalog: &Catalog,
    data: &StochasticChoiceData,
    menu_indices: &[usize],
) -> Result<()> {
    if data.blocks().len() != menu_indices.len() {
        return Err(Error::invalid("one catalog index per data block required"));
    }
    let mut out = String::from("subject_id,menu_id,choice_id\n");
    let mut subject = 0u64;
    for (block, &menu_j) in data.blocks().iter().zip(menu_indices) {
        if &catalog.menus[menu_j] != block.menu() {
            return Err(Error::invalid("data block does not match its catalog menu"));
        }
        for (&choice, &count) in block.counts() {
            for _ in 0..count {
                subject += 1;
                out.push_str(&format!(
                    "s{subject},{},{}\n",
                    catalog.menu_ids[menu_j], catalog.lottery_ids[choice]
                ));
            }
        }
    }
    fs::write(path, out).map_err(|e| Error::io(path.display().to_string(), e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builtin;
    use crate::cone::{estimate_rho, MenuIndex};
    use crate::model::rat;
    use crate::simulate::gp_counterexample;
    use std::io::Write;

    fn write_temp(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f
    }

    #[test]
    fn two_rows_aggregate() {
        let catalog = builtin::tokens();
        let f = write_temp("subject_id,menu_id,choice_id\ns1,l1-o,l1\ns2,l1-o,o\n");
        let loaded = load_choices(f.path(), &catalog).unwrap();
        assert_eq!(loaded.data.blocks().len(), 1);
        assert_eq!(loaded.data.total(), 2);
        let block = &loaded.data.blocks()[0];
        assert_eq!(block.count(0), 1);
        assert_eq!(block.count(5), 1);
        assert_eq!(loaded.dropped_menus.len(), 30);
    }

    #[test]
    fn non_member_choice_names_the_row() {
        let catalog = builtin::tokens();
        let f = write_temp("subject_id,menu_id,choice_id\ns1,l1-o,l1\ns2,l1-o,l2\n");
        let err = load_choices(f.path(), &catalog).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains(":3:"), "{msg}");
        assert!(msg.contains("not a member"), "{msg}");
    }

    #[test]
    fn unknown_ids_and_empty_files_fail() {
        let catalog = builtin::tokens();
        let f = write_temp("subject_id,menu_id,choice_id\ns1,ghost,l1\n");
        assert!(load_choices(f.path(), &catalog).is_err());
        let f = write_temp("subject_id,menu_id,choice_id\ns1,l1-o,ghost\n");
        assert!(load_choices(f.path(), &catalog).is_err());
        let f = write_temp("subject_id,menu_id,choice_id\n");
        assert!(load_choices(f.path(), &catalog).is_err());
        let f = write_temp("wrong,header,here\ns1,l1-o,l1\n");
        assert!(load_choices(f.path(), &catalog).is_err());
    }

    #[test]
    fn round_trip_preserves_frequencies() {
        let (catalog, data) = gp_counterexample(rat(1, 2), 250, Some(0.2), 5).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("gp.csv");
        write_choices(&path, &catalog, &data, &[0, 1, 2]).unwrap();
        let loaded = load_choices(&path, &catalog).unwrap();
        assert_eq!(loaded.data, data);
        assert!(loaded.dropped_menus.is_empty());

        let index = MenuIndex::from_data(&data).unwrap();
        let rho_direct = estimate_rho(&data, &index).unwrap();
        let rho_loaded = estimate_rho(&loaded.data, &index).unwrap();
        assert_eq!(rho_direct, rho_loaded);
    }

    #[test]
    fn written_bytes_are_deterministic() {
        let (catalog, data) = gp_counterexample(rat(2, 5), 40, Some(0.3), 11).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let a = dir.path().join("a.csv");
        let b = dir.path().join("b.csv");
        write_choices(&a, &catalog, &data, &[0, 1, 2]).unwrap();
        write_choices(&b, &catalog, &data, &[0, 1, 2]).unwrap();
        assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    }
}
