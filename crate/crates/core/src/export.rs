//! JSON output with sorted keys and shortest round-trip floats.

use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};

/// Pretty JSON of `value` with object keys in lexicographic order.
pub fn to_json<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    let v = serde_json::to_value(value).map_err(|e| Error::numeric(format!("serialization failed: {e}")))?;
    let mut s = serde_json::to_string_pretty(&v).map_err(|e| Error::numeric(format!("serialization failed: {e}")))?;
    s.push('\n');
    Ok(s)
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::input(format!("cannot create {}: {e}", dir.display())))?;
    }
    std::fs::write(path, text).map_err(|e| Error::input(format!("cannot write {}: {e}", path.display())))
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    write_text(path, &to_json(value)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashMap;

    #[test]
    fn keys_are_sorted() {
        let m: HashMap<&str, f64> = [("zeta", 0.1), ("alpha", 1.0 / 3.0), ("mid", 2.0)].into_iter().collect();
        let s = to_json(&m).unwrap();
        let (a, z) = (s.find("alpha").unwrap(), s.find("zeta").unwrap());
        assert!(a < s.find("mid").unwrap() && s.find("mid").unwrap() < z);
        assert!(s.contains("0.3333333333333333"));
        let back: HashMap<String, f64> = serde_json::from_str(&s).unwrap();
        assert_eq!(back["alpha"], 1.0 / 3.0);
    }
}
