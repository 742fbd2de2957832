use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};

/// Fixed 17-significant-digit rendering used in every artifact.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn nums(xs: &[f64]) -> Vec<String> {
    xs.iter().map(|&x| num(x)).collect()
}

/// Space-separated tuple inside a single CSV field.
pub fn tuple(xs: &[f64]) -> String {
    nums(xs).join(" ")
}

pub struct Table {
    path: PathBuf,
    writer: csv::Writer<BufWriter<File>>,
}

impl Table {
    pub fn create<S: AsRef<str>>(dir: &Path, name: &str, header: &[S]) -> Result<Table> {
        let path = dir.join(name);
        let file = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
        let mut writer = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(BufWriter::new(file));
        writer.write_record(header.iter().map(|h| h.as_ref()))?;
        Ok(Table { path, writer })
    }

    pub fn row<S: AsRef<str>>(&mut self, fields: &[S]) -> Result<()> {
        self.writer
            .write_record(fields.iter().map(|f| f.as_ref()))
            .with_context(|| format!("writing {}", self.path.display()))
    }

    pub fn finish(mut self) -> Result<PathBuf> {
        self.writer.flush()?;
        Ok(self.path)
    }
}

pub fn write_text(dir: &Path, name: &str, lines: &[String]) -> Result<PathBuf> {
    let path = dir.join(name);
    let mut f = BufWriter::new(File::create(&path).with_context(|| format!("creating {}", path.display()))?);
    for l in lines {
        writeln!(f, "{l}")?;
    }
    f.flush()?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_keep_seventeen_digits() {
        assert_eq!(num(std::f64::consts::FRAC_PI_2), "1.5707963267948966e0");
        assert_eq!(num(-0.01), "-1.0000000000000000e-2");
        assert_eq!(num(0.1 + 0.2).parse::<f64>().unwrap(), 0.1 + 0.2);
        assert_eq!(tuple(&[1.0, 2.5]), "1.0000000000000000e0 2.5000000000000000e0");
    }
}
