use std::fs::File;
use std::io::{BufReader, Read};
use std::path::Path;

use ggsp_core::{io, Graph, PartialSignal};

use crate::config::CsvSchema;
use crate::error::{ExperimentError, Result};

fn data_err(path: &Path, e: ggsp_core::Error) -> ExperimentError {
    match e {
        ggsp_core::Error::Parse { line, message } => ExperimentError::Parse { line, message },
        ggsp_core::Error::DimensionMismatch { expected, found } => {
            ExperimentError::InconsistentDimensions(format!("expected {expected}, found {found}"))
        }
        ggsp_core::Error::Io(msg) => ExperimentError::io(path, msg),
        other => ExperimentError::Core {
            context: path.display().to_string(),
            source: other,
        },
    }
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path).map(BufReader::new).map_err(|e| ExperimentError::io(path, e))
}

/// Samples from a CSV file. Cells that are absent or empty come back
/// unobserved in the returned [`PartialSignal`]s.
pub fn ingest_csv(path: &Path, schema: CsvSchema) -> Result<Vec<PartialSignal<f64>>> {
    ingest_reader(open(path)?, schema).map_err(|e| match e {
        ExperimentError::Io { message, .. } => ExperimentError::io(path, message),
        other => other,
    })
}

pub fn ingest_reader<R: Read>(r: R, schema: CsvSchema) -> Result<Vec<PartialSignal<f64>>> {
    let label = Path::new("<input>");
    let samples = match schema {
        CsvSchema::Long => io::read_samples(r),
        CsvSchema::Matrix => io::read_samples_wide(r),
    }
    .map_err(|e| data_err(label, e))?;
    if samples.is_empty() {
        return Err(ExperimentError::InconsistentDimensions("no samples".into()));
    }
    Ok(samples)
}

pub fn read_edge_list_file(path: &Path) -> Result<Graph<f64>> {
    io::read_edge_list(open(path)?).map_err(|e| data_err(path, e))
}

pub fn read_coordinates_file(path: &Path) -> Result<Vec<Vec<f64>>> {
    io::read_coordinates(open(path)?).map_err(|e| data_err(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn long_schema() {
        let s = ingest_reader("sample,vertex,coord,value\n0,0,0,1.0\n0,1,0,2.0\n".as_bytes(), CsvSchema::Long).unwrap();
        assert_eq!(s.len(), 1);
        assert_eq!(s[0].values().as_slice(), &[1.0, 2.0]);
        assert!(s[0].is_complete());
    }

    #[test]
    fn omitted_cell_is_missing() {
        let text = "sample,vertex,coord,value\n0,0,0,1\n0,0,1,\n0,1,1,4\n";
        let s = ingest_reader(text.as_bytes(), CsvSchema::Long).unwrap();
        assert!(!s[0].mask().is_observed(0, 1));
        assert!(!s[0].mask().is_observed(1, 0));
        assert!(s[0].mask().is_observed(1, 1));
    }

    #[test]
    fn ragged_and_malformed_input() {
        let ragged = "sample,vertex,coord,value\n0,0,0,1\n0,0,1,2\n1,0,0,3\n";
        assert!(matches!(
            ingest_reader(ragged.as_bytes(), CsvSchema::Long),
            Err(ExperimentError::InconsistentDimensions(_))
        ));
        let ragged_wide = "sample,vertex,c0,c1\n0,0,1,2\n0,1,3\n";
        assert!(matches!(
            ingest_reader(ragged_wide.as_bytes(), CsvSchema::Matrix),
            Err(ExperimentError::InconsistentDimensions(_))
        ));
        let bad = "sample,vertex,coord,value\n0,0,0,1\n0,1,0,abc\n";
        assert!(matches!(
            ingest_reader(bad.as_bytes(), CsvSchema::Long),
            Err(ExperimentError::Parse { line: 3, .. })
        ));
    }

    #[test]
    fn files_on_disk() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("s.csv");
        std::fs::write(&p, "sample,vertex,c0\n0,0,1\n0,1,2\n1,0,3\n1,1,4\n").unwrap();
        let s = ingest_csv(&p, CsvSchema::Matrix).unwrap();
        assert_eq!(s.len(), 2);
        assert!(matches!(
            ingest_csv(&dir.path().join("absent.csv"), CsvSchema::Long),
            Err(ExperimentError::Io { .. })
        ));
        let g = dir.path().join("g.txt");
        std::fs::write(&g, "n=3\n0 1 1.0\n1 2 2.0\n").unwrap();
        assert_eq!(read_edge_list_file(&g).unwrap().edge_count(), 2);
    }
}
