//! Output files: CSV tables, optional gnuplot scripts and the JSON summary.
//! Everything is rendered in memory first and written in one pass, so a
//! failing run leaves nothing behind.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

/// A float with 17 significant digits.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

/// A rendered output file.
#[derive(Clone, Debug)]
pub struct OutputFile {
    pub name: String,
    pub bytes: Vec<u8>,
}

/// CSV table with a fixed header.
pub struct Csv {
    name: String,
    text: String,
}

impl Csv {
    pub fn new(name: &str, header: &[&str]) -> Self {
        Self {
            name: name.to_string(),
            text: header.join(",") + "\n",
        }
    }

    pub fn row(&mut self, fields: &[String]) {
        self.text.push_str(&fields.join(","));
        self.text.push('\n');
    }

    pub fn file(self) -> OutputFile {
        OutputFile {
            name: self.name,
            bytes: self.text.into_bytes(),
        }
    }
}

/// A gnuplot script for one of the CSV tables.
pub fn plot_script(csv_name: &str) -> Option<OutputFile> {
    let stem = csv_name.strip_suffix(".csv")?;
    let body = match stem {
        "entropy" | "entropy_linear" => format!(
            "set xlabel 'n'\nset ylabel 'ln count'\n\
             plot for [e in system(\"tail -n +2 {csv_name} | cut -d, -f1 | sort -u\")] \
             '< grep ^'.e.', {csv_name}' using 2:(log($3)) with linespoints title 'eps '.e\n"
        ),
        "birkhoff" => format!(
            "set xlabel 'start'\nset ylabel 'average'\n\
             plot '{csv_name}' using 1:3 with points title 'average', \
             '' using 1:4 with lines title 'ball measure'\n"
        ),
        "fibers" => format!(
            "set logscale y\nset ylabel 'length'\n\
             plot '{csv_name}' using 0:4 with points title 'fiber length'\n"
        ),
        "defect" => format!(
            "set logscale y\nset ylabel 'defect'\n\
             plot '{csv_name}' using 1:2 with points title 'defect'\n"
        ),
        "exponent" => format!(
            "set ylabel 'exponent'\n\
             plot '{csv_name}' using 1:3 with points title 'exponent', \
             '' using 1:4 with lines title 'lower bound'\n"
        ),
        "mme" => format!(
            "set xlabel 'x1'\nset ylabel 'x2'\n\
             plot '{csv_name}' using 2:3 with dots title 'pulled-back sample'\n"
        ),
        _ => return None,
    };
    let mut text = String::new();
    let _ = write!(
        text,
        "set datafile separator ','\nset key autotitle columnhead\n{body}"
    );
    Some(OutputFile {
        name: format!("{stem}.gp"),
        bytes: text.into_bytes(),
    })
}

/// Writes all files into `dir`, creating it if needed. On any failure the
/// files written so far, and the directory if it was created here, are removed.
pub fn write_all(dir: &Path, files: &[OutputFile]) -> std::io::Result<()> {
    let created = !dir.exists();
    fs::create_dir_all(dir)?;
    let mut written: Vec<PathBuf> = Vec::new();
    for f in files {
        let path = dir.join(&f.name);
        if let Err(e) = fs::write(&path, &f.bytes) {
            for p in &written {
                let _ = fs::remove_file(p);
            }
            let _ = fs::remove_file(&path);
            if created {
                let _ = fs::remove_dir(dir);
            }
            return Err(e);
        }
        written.push(path);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_digits() {
        assert_eq!(num(0.1), "1.0000000000000001e-1");
        assert_eq!(num(3.0), "3.0000000000000000e0");
        let x = 0.013_137_2_f64;
        assert_eq!(num(x).parse::<f64>().unwrap(), x);
    }

    #[test]
    fn csv_layout() {
        let mut c = Csv::new("defect.csv", &["sample_id", "defect"]);
        c.row(&["0".into(), num(0.5)]);
        let f = c.file();
        assert_eq!(
            String::from_utf8(f.bytes).unwrap(),
            "sample_id,defect\n0,5.0000000000000000e-1\n"
        );
        assert!(plot_script("defect.csv").is_some());
        assert!(plot_script("summary.json").is_none());
    }

    #[test]
    fn failed_write_cleans_up() {
        let tmp = tempfile::tempdir().unwrap();
        let dir = tmp.path().join("out");
        let files = vec![
            OutputFile {
                name: "a.csv".into(),
                bytes: b"x\n".to_vec(),
            },
            OutputFile {
                name: "missing/b.csv".into(),
                bytes: b"y\n".to_vec(),
            },
        ];
        assert!(write_all(&dir, &files).is_err());
        assert!(!dir.exists());
    }
}
