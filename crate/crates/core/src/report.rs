//! CSV and JSON serialization of run outputs.
//!
//! Floats are written with shortest round-trip formatting in both formats.
//!
//! CSV layouts:
//! - [`CsgReport`]: one header row and one data row, see [`CSG_HEADER`].
//! - [`SweepGrid`]: `m,k,csg,pool_size,wall_ms,status`, one row per cell,
//!   sorted by `(m, k)`; `csg` is empty for error cells.
//! - [`CorrelationReport`]: `scope,dataset,model,csg,mrr,n,pearson_r`, where
//!   `scope` is `point`, `model`, `dataset`, `pooled` or `mean`.

use std::io::Write;

use serde::Serialize;

use crate::error::Result;
use crate::experiment::{CorrelationReport, CsgReport, SweepGrid};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    #[default]
    Json,
}

impl std::str::FromStr for OutputFormat {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            other => Err(format!("unknown format `{other}` (expected csv or json)")),
        }
    }
}

pub const CSG_HEADER: [&str; 22] = [
    "dataset",
    "entities",
    "relations",
    "triples",
    "classes",
    "pool_size",
    "m",
    "k",
    "kc",
    "seed",
    "sampling_seed",
    "embeddings",
    "normalize_embeddings",
    "include_self",
    "symmetrize",
    "min_pairs",
    "max_classes",
    "csg_full",
    "csg_kc",
    "lambda_min",
    "lambda_max",
    "max_imag",
];

pub const SWEEP_HEADER: [&str; 6] = ["m", "k", "csg", "pool_size", "wall_ms", "status"];

pub const CORRELATION_HEADER: [&str; 7] = ["scope", "dataset", "model", "csg", "mrr", "n", "pearson_r"];

/// Anything `emit_report` can write.
pub trait Emit: Serialize {
    fn write_csv<W: Write>(&self, w: &mut csv::Writer<W>) -> Result<()>;
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

impl Emit for CsgReport {
    fn write_csv<W: Write>(&self, w: &mut csv::Writer<W>) -> Result<()> {
        let p = &self.parameters;
        w.write_record(CSG_HEADER)?;
        w.write_record([
            self.dataset.clone(),
            self.stats.entity_count.to_string(),
            self.stats.relation_count.to_string(),
            self.stats.triple_count.to_string(),
            self.classes.to_string(),
            self.pool_size.to_string(),
            p.m.to_string(),
            p.k.to_string(),
            opt(p.k_c),
            p.seed.to_string(),
            p.sampling_seed.to_string(),
            serde_json::to_string(&p.embeddings)?,
            p.normalize_embeddings.to_string(),
            p.include_self.to_string(),
            p.symmetrize.to_string(),
            p.min_pairs.to_string(),
            opt(p.max_classes),
            self.csg_full.to_string(),
            opt(self.csg_at.first().map(|&(_, v)| v)),
            self.lambda_min.to_string(),
            self.lambda_max.to_string(),
            opt(self.max_imag),
        ])?;
        Ok(())
    }
}

impl Emit for SweepGrid {
    fn write_csv<W: Write>(&self, w: &mut csv::Writer<W>) -> Result<()> {
        w.write_record(SWEEP_HEADER)?;
        let mut cells: Vec<_> = self.cells.iter().collect();
        cells.sort_by_key(|c| (c.m, c.k));
        for c in cells {
            w.write_record([
                c.m.to_string(),
                c.k.to_string(),
                opt(c.csg),
                c.pool_size.to_string(),
                c.wall_ms.to_string(),
                c.status.clone(),
            ])?;
        }
        Ok(())
    }
}

impl Emit for CorrelationReport {
    fn write_csv<W: Write>(&self, w: &mut csv::Writer<W>) -> Result<()> {
        w.write_record(CORRELATION_HEADER)?;
        for p in &self.points {
            w.write_record([
                "point",
                &p.dataset,
                &p.model,
                &p.csg.to_string(),
                &p.mrr.to_string(),
                "",
                "",
            ])?;
        }
        for g in &self.per_model {
            w.write_record(["model", "", &g.label, "", "", &g.n.to_string(), &g.r.to_string()])?;
        }
        for g in &self.per_dataset {
            w.write_record(["dataset", &g.label, "", "", "", &g.n.to_string(), &g.r.to_string()])?;
        }
        let n = self.points.len().to_string();
        w.write_record(["pooled", "", "", "", "", &n, &self.pooled_r.to_string()])?;
        let defined = self.per_model.iter().filter(|g| g.r.value().is_some()).count();
        w.write_record(["mean", "", "", "", "", &defined.to_string(), &self.mean_r.to_string()])?;
        Ok(())
    }
}

pub fn emit_report<T: Emit, W: Write>(report: &T, format: OutputFormat, mut sink: W) -> Result<()> {
    match format {
        OutputFormat::Csv => {
            let mut w = csv::Writer::from_writer(&mut sink);
            report.write_csv(&mut w)?;
            w.flush()?;
        }
        OutputFormat::Json => {
            serde_json::to_writer_pretty(&mut sink, report)?;
            sink.write_all(b"\n")?;
        }
    }
    sink.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiment::{RunConfig, SweepCell, EmbeddingSource};
    use crate::kg::DatasetStats;

    fn grid() -> SweepGrid {
        let cell = |m, k, csg: Option<f64>, status: &str| SweepCell {
            m,
            k,
            csg,
            pool_size: 10,
            wall_ms: 1.5,
            status: status.into(),
        };
        SweepGrid {
            dataset: "toy".into(),
            stats: DatasetStats::default(),
            classes: 2,
            m_values: vec![5, 10],
            k_values: vec![1, 20],
            cells: vec![
                cell(10, 1, Some(0.25), "ok"),
                cell(5, 20, None, "k exceeds pool"),
                cell(5, 1, Some(0.5), "ok"),
                cell(10, 20, None, "k exceeds pool"),
            ],
            config: RunConfig::new(vec![], EmbeddingSource::Hash { dim: 4, seed: 1 }),
        }
    }

    #[test]
    fn sweep_csv_shape() {
        let mut out = Vec::new();
        emit_report(&grid(), OutputFormat::Csv, &mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "m,k,csg,pool_size,wall_ms,status");
        assert_eq!(lines.len(), 5);
        assert_eq!(lines[1], "5,1,0.5,10,1.5,ok");
        assert_eq!(lines[2], "5,20,,10,1.5,k exceeds pool");
    }

    #[test]
    fn format_parsing() {
        assert_eq!("csv".parse::<OutputFormat>().unwrap(), OutputFormat::Csv);
        assert!("xml".parse::<OutputFormat>().is_err());
    }
}
