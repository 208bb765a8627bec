use std::fs::File;
use std::io::Write;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

/// Shortest representation that parses back to the same value.
pub fn float(x: f64) -> String {
    format!("{x:?}")
}

/// CSV file preceded by a single `#` timestamp line.
pub struct CsvOut {
    w: csv::Writer<File>,
}

impl CsvOut {
    pub fn create(path: &Path, header: &[&str]) -> anyhow::Result<Self> {
        let mut f = File::create(path)?;
        let secs = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map_or(0, |d| d.as_secs());
        writeln!(
            f,
            "# generated {secs} by phi4 {}",
            env!("CARGO_PKG_VERSION")
        )?;
        let mut w = csv::Writer::from_writer(f);
        w.write_record(header)?;
        Ok(Self { w })
    }

    pub fn row(&mut self, values: &[f64]) -> anyhow::Result<()> {
        self.w.write_record(values.iter().map(|v| float(*v)))?;
        Ok(())
    }

    pub fn record(&mut self, fields: &[String]) -> anyhow::Result<()> {
        self.w.write_record(fields)?;
        Ok(())
    }

    pub fn finish(mut self) -> anyhow::Result<()> {
        self.w.flush()?;
        Ok(())
    }
}
