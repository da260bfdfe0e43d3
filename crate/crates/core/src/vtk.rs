//! Legacy ASCII VTK unstructured-grid writer.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::Result;
use crate::geom::Point;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VtkCellType {
    Vertex,
    Triangle,
    /// Eight corners in x-fastest order.
    Voxel,
}

impl VtkCellType {
    fn code(self) -> u8 {
        match self {
            VtkCellType::Vertex => 1,
            VtkCellType::Triangle => 5,
            VtkCellType::Voxel => 11,
        }
    }
}

#[derive(Debug, Clone)]
enum Field {
    Scalars(String, Vec<f64>),
    Vectors(String, Vec<[f64; 3]>),
}

/// Collects points, cells and fields, then renders them as one file.
#[derive(Debug, Clone)]
pub struct VtkWriter {
    title: String,
    points: Vec<Point>,
    cells: Vec<(VtkCellType, Vec<usize>)>,
    point_fields: Vec<Field>,
    cell_fields: Vec<Field>,
}

impl VtkWriter {
    pub fn new(title: &str) -> Self {
        VtkWriter {
            title: title.replace('\n', " "),
            points: Vec::new(),
            cells: Vec::new(),
            point_fields: Vec::new(),
            cell_fields: Vec::new(),
        }
    }

    pub fn add_point(&mut self, p: Point) -> usize {
        self.points.push(p);
        self.points.len() - 1
    }

    /// A cell over points added earlier.
    pub fn add_cell_indices(&mut self, kind: VtkCellType, ids: &[usize]) {
        self.cells.push((kind, ids.to_vec()));
    }

    /// A cell with its own copies of `corners`.
    pub fn add_cell(&mut self, kind: VtkCellType, corners: &[Point]) {
        let start = self.points.len();
        self.points.extend_from_slice(corners);
        self.cells.push((kind, (start..self.points.len()).collect()));
    }

    pub fn point_count(&self) -> usize {
        self.points.len()
    }

    pub fn point_scalars(&mut self, name: &str, values: Vec<f64>) {
        assert_eq!(values.len(), self.points.len());
        self.point_fields.push(Field::Scalars(name.into(), values));
    }

    pub fn point_vectors(&mut self, name: &str, values: Vec<[f64; 3]>) {
        assert_eq!(values.len(), self.points.len());
        self.point_fields.push(Field::Vectors(name.into(), values));
    }

    pub fn cell_scalars(&mut self, name: &str, values: Vec<f64>) {
        assert_eq!(values.len(), self.cells.len());
        self.cell_fields.push(Field::Scalars(name.into(), values));
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# vtk DataFile Version 3.0\n{}\nASCII\nDATASET UNSTRUCTURED_GRID", self.title);
        let _ = writeln!(s, "POINTS {} double", self.points.len());
        for p in &self.points {
            let _ = writeln!(s, "{:e} {:e} {:e}", p.x, p.y, p.z);
        }
        let size: usize = self.cells.iter().map(|(_, c)| c.len() + 1).sum();
        let _ = writeln!(s, "CELLS {} {}", self.cells.len(), size);
        for (_, ids) in &self.cells {
            let _ = write!(s, "{}", ids.len());
            for i in ids {
                let _ = write!(s, " {i}");
            }
            s.push('\n');
        }
        let _ = writeln!(s, "CELL_TYPES {}", self.cells.len());
        for (kind, _) in &self.cells {
            let _ = writeln!(s, "{}", kind.code());
        }
        write_fields(&mut s, "CELL_DATA", self.cells.len(), &self.cell_fields);
        write_fields(&mut s, "POINT_DATA", self.points.len(), &self.point_fields);
        s
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.render())?;
        Ok(())
    }
}

fn write_fields(s: &mut String, header: &str, n: usize, fields: &[Field]) {
    if fields.is_empty() {
        return;
    }
    let _ = writeln!(s, "{header} {n}");
    for f in fields {
        match f {
            Field::Scalars(name, v) => {
                let _ = writeln!(s, "SCALARS {name} double 1\nLOOKUP_TABLE default");
                for x in v {
                    let _ = writeln!(s, "{x:e}");
                }
            }
            Field::Vectors(name, v) => {
                let _ = writeln!(s, "VECTORS {name} double");
                for x in v {
                    let _ = writeln!(s, "{:e} {:e} {:e}", x[0], x[1], x[2]);
                }
            }
        }
    }
}
