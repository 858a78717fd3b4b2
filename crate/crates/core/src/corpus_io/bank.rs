use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::concept_bank::ConceptBank;
use crate::error::{Error, Result};

use super::write_atomic;

const BANK_FORMAT: &str = "concept-bank";
const BANK_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct BankFile {
    format: String,
    version: u32,
    bank: ConceptBank,
}

/// Persists a trained bank as a versioned JSON container. Weights serialize
/// in shortest round-trip form, so load(save(bank)) reproduces every value
/// bit-exactly and preserves concept order.
pub fn save_bank(bank: &ConceptBank, path: &Path) -> Result<()> {
    let file = BankFile {
        format: BANK_FORMAT.to_string(),
        version: BANK_VERSION,
        bank: bank.clone(),
    };
    let mut body = serde_json::to_string_pretty(&file)
        .map_err(|e| Error::Internal(format!("bank serialization failed: {e}")))?;
    body.push('\n');
    write_atomic(path, &body)
}

pub fn load_bank(path: &Path) -> Result<ConceptBank> {
    let body = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let file: BankFile = serde_json::from_str(&body)
        .map_err(|e| Error::InvalidInput(format!("{}: not a bank file: {e}", path.display())))?;
    if file.format != BANK_FORMAT {
        return Err(Error::InvalidInput(format!(
            "{}: unknown format {:?}",
            path.display(),
            file.format
        )));
    }
    if file.version != BANK_VERSION {
        return Err(Error::VersionMismatch {
            what: "bank".into(),
            found: file.version,
            expected: BANK_VERSION,
        });
    }
    Ok(file.bank)
}
