//! CSV tables. Floats use the shortest representation that round-trips.

use std::path::Path;

use thinbeam::truncation::GridFunction;

use crate::LabError;

/// A table with a fixed header.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn push_numbers(&mut self, row: &[f64]) {
        self.push(row.iter().map(|v| v.to_string()).collect());
    }

    pub fn write(&self, path: &Path) -> Result<(), LabError> {
        let io = |e: csv::Error| LabError::Io(format!("{}: {e}", path.display()));
        let mut w = csv::Writer::from_path(path).map_err(io)?;
        w.write_record(&self.header).map_err(io)?;
        for r in &self.rows {
            w.write_record(r).map_err(io)?;
        }
        w.flush().map_err(|e| LabError::Io(format!("{}: {e}", path.display())))
    }
}

/// Key/value report with header `key,value`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct KeyValues {
    pub entries: Vec<(String, String)>,
}

impl KeyValues {
    pub fn add(&mut self, key: &str, value: impl ToString) {
        self.entries.push((key.to_string(), value.to_string()));
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn write(&self, path: &Path) -> Result<(), LabError> {
        let mut t = Table::new(&["key", "value"]);
        for (k, v) in &self.entries {
            t.push(vec![k.clone(), v.clone()]);
        }
        t.write(path)
    }
}

/// Header `nx,ny,dx,dy`, one row with those values, then one row of
/// components per grid value in row-major order.
pub fn write_grid(g: &GridFunction, path: &Path) -> Result<(), LabError> {
    let io = |e: csv::Error| LabError::Io(format!("{}: {e}", path.display()));
    let mut w = csv::WriterBuilder::new().flexible(true).from_path(path).map_err(io)?;
    w.write_record(["nx", "ny", "dx", "dy"]).map_err(io)?;
    w.write_record([g.nx.to_string(), g.ny.to_string(), g.dx.to_string(), g.dy.to_string()])
        .map_err(io)?;
    for node in g.values.chunks(g.components) {
        w.write_record(node.iter().map(|v| v.to_string())).map_err(io)?;
    }
    w.flush().map_err(|e| LabError::Io(format!("{}: {e}", path.display())))
}

pub fn read_grid(path: &Path) -> Result<GridFunction, LabError> {
    let bad = |m: String| LabError::Config(format!("grid file {}: {m}", path.display()));
    let mut r = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_path(path)
        .map_err(|e| bad(e.to_string()))?;
    let header = r.headers().map_err(|e| bad(e.to_string()))?.clone();
    if header.iter().map(str::trim).collect::<Vec<_>>() != ["nx", "ny", "dx", "dy"] {
        return Err(bad("header must be `nx,ny,dx,dy`".into()));
    }
    let mut records = r.records();
    let dims = records
        .next()
        .ok_or_else(|| bad("missing dimension row".into()))?
        .map_err(|e| bad(e.to_string()))?;
    if dims.len() != 4 {
        return Err(bad("dimension row needs four entries".into()));
    }
    let field = |i: usize| dims[i].trim().to_string();
    let nx: usize = field(0).parse().map_err(|_| bad(format!("nx `{}` is not an integer", field(0))))?;
    let ny: usize = field(1).parse().map_err(|_| bad(format!("ny `{}` is not an integer", field(1))))?;
    let dx: f64 = field(2).parse().map_err(|_| bad(format!("dx `{}` is not a number", field(2))))?;
    let dy: f64 = field(3).parse().map_err(|_| bad(format!("dy `{}` is not a number", field(3))))?;
    let mut values = Vec::new();
    let mut components = 0;
    for (k, rec) in records.enumerate() {
        let rec = rec.map_err(|e| bad(e.to_string()))?;
        if k == 0 {
            components = rec.len();
        } else if rec.len() != components {
            return Err(bad(format!("node row {k} has {} entries, expected {components}", rec.len())));
        }
        for v in rec.iter() {
            values.push(v.trim().parse::<f64>().map_err(|_| bad(format!("value `{v}` is not a number")))?);
        }
    }
    GridFunction::new(nx, ny, dx, dy, components.max(1), values).map_err(|e| match e {
        thinbeam::Error::Config(m) => bad(m),
        e => bad(e.to_string()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_round_trips_bitwise() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("g.csv");
        let g = GridFunction::from_fn(5, 3, 0.1, 1.0 / 3.0, 2, |x, y| vec![x.sin() / 3.0, y * 1e-17]).unwrap();
        write_grid(&g, &path).unwrap();
        assert_eq!(read_grid(&path).unwrap(), g);
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("nx,ny,dx,dy\n5,3,0.1,"));
    }

    #[test]
    fn malformed_grid_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("g.csv");
        for text in ["a,b,c,d\n2,2,1,1\n0\n0\n0\n0\n", "nx,ny,dx,dy\n2,2,1,1\n0\n0\n0\n", "nx,ny,dx,dy\n2,2,1,1\n0\n0,1\n0\n0\n"] {
            std::fs::write(&path, text).unwrap();
            assert!(matches!(read_grid(&path), Err(LabError::Config(_))), "{text}");
        }
    }

    #[test]
    fn table_has_header_and_rows() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        let mut t = Table::new(&["h", "r1"]);
        t.push_numbers(&[0.2, 1e-3]);
        t.write(&path).unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap(), "h,r1\n0.2,0.001\n");
    }
}
