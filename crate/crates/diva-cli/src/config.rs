//! Optional `key = value` configuration file; explicit flags win.

use std::collections::HashMap;
use std::path::Path;

#[derive(Debug, Default, Clone)]
pub struct FileConfig {
    values: HashMap<String, String>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
        let mut values = HashMap::new();
        for (idx, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(format!(
                    "config line {} is not `key = value`: `{line}`",
                    idx + 1
                ));
            };
            values.insert(key.trim().to_string(), value.trim().to_string());
        }
        Ok(FileConfig { values })
    }

    pub fn get<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>, String> {
        match self.values.get(key) {
            None => Ok(None),
            Some(raw) => raw
                .parse()
                .map(Some)
                .map_err(|_| format!("config key `{key}`: cannot parse `{raw}`")),
        }
    }
}

/// Flag value if given, else config value, else the built-in default.
pub fn pick<T: std::str::FromStr + Clone>(
    flag: &Option<T>,
    cfg: &FileConfig,
    key: &str,
    default: T,
) -> Result<T, String> {
    if let Some(v) = flag {
        return Ok(v.clone());
    }
    Ok(cfg.get::<T>(key)?.unwrap_or(default))
}

/// Comma-separated floats.
pub fn parse_list(raw: &str) -> Result<Vec<f64>, String> {
    raw.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| format!("bad number `{t}` in list `{raw}`"))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_key_value_and_comments() {
        let dir = std::env::temp_dir().join("diva-cfg-test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("run.conf");
        std::fs::write(&path, "sites = 10 # chain length\n# comment\nt = 1.5\n").unwrap();
        let cfg = FileConfig::load(&path).unwrap();
        assert_eq!(cfg.get::<usize>("sites").unwrap(), Some(10));
        assert_eq!(cfg.get::<f64>("t").unwrap(), Some(1.5));
        assert_eq!(cfg.get::<f64>("missing").unwrap(), None);
        // flag wins over file
        assert_eq!(pick(&Some(7usize), &cfg, "sites", 2).unwrap(), 7);
        assert_eq!(pick(&None, &cfg, "sites", 2).unwrap(), 10);
    }
}
