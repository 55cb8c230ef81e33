//! Geometry directories: `coordinates.dat`, `elements.dat` and
//! `boundary<n>.dat` for `n = 1, 2, …`, comma separated, 1-based indices.

use std::fs;
use std::path::{Path, PathBuf};

use afem_core::mesh::Mesh;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum GeometryError {
    #[error("missing geometry file {0}")]
    MissingFile(PathBuf),
    #[error("reading {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{file}, line {line}: {message}")]
    Parse { file: String, line: usize, message: String },
    #[error("boundary{found}.dat present but boundary{missing}.dat missing")]
    BoundaryGap { missing: usize, found: usize },
    #[error("invalid mesh: {0}")]
    Mesh(#[from] afem_core::Error),
}

struct Bundled {
    name: &'static str,
    coordinates: &'static str,
    elements: &'static str,
    boundaries: &'static [&'static str],
}

const BUNDLED: &[Bundled] = &[
    Bundled {
        name: "unitsquare",
        coordinates: include_str!("../geometries/unitsquare/coordinates.dat"),
        elements: include_str!("../geometries/unitsquare/elements.dat"),
        boundaries: &[include_str!("../geometries/unitsquare/boundary1.dat")],
    },
    Bundled {
        name: "Lshape",
        coordinates: include_str!("../geometries/Lshape/coordinates.dat"),
        elements: include_str!("../geometries/Lshape/elements.dat"),
        boundaries: &[
            include_str!("../geometries/Lshape/boundary1.dat"),
            include_str!("../geometries/Lshape/boundary2.dat"),
        ],
    },
    Bundled {
        name: "crisscross",
        coordinates: include_str!("../geometries/crisscross/coordinates.dat"),
        elements: include_str!("../geometries/crisscross/elements.dat"),
        boundaries: &[
            include_str!("../geometries/crisscross/boundary1.dat"),
            include_str!("../geometries/crisscross/boundary2.dat"),
        ],
    },
];

/// Names of the geometries compiled into the binary.
pub fn bundled_names() -> impl Iterator<Item = &'static str> {
    BUNDLED.iter().map(|b| b.name)
}

/// A bundled geometry by name, if any.
pub fn bundled(name: &str) -> Option<Result<Mesh, GeometryError>> {
    let b = BUNDLED.iter().find(|b| b.name == name)?;
    Some(parse(b.coordinates, b.elements, b.boundaries))
}

/// Bundled geometry or, failing that, a geometry directory.
pub fn load_geometry(name_or_path: &str) -> Result<Mesh, GeometryError> {
    match bundled(name_or_path) {
        Some(mesh) => mesh,
        None => read_dir(name_or_path),
    }
}

pub fn read_dir(dir: impl AsRef<Path>) -> Result<Mesh, GeometryError> {
    let dir = dir.as_ref();
    let coordinates = read_file(&dir.join("coordinates.dat"))?;
    let elements = read_file(&dir.join("elements.dat"))?;

    let mut numbers = Vec::new();
    if let Ok(entries) = fs::read_dir(dir) {
        for entry in entries.flatten() {
            let name = entry.file_name();
            let name = name.to_string_lossy();
            if let Some(n) = name
                .strip_prefix("boundary")
                .and_then(|s| s.strip_suffix(".dat"))
                .and_then(|s| s.parse::<usize>().ok())
            {
                numbers.push(n);
            }
        }
    }
    numbers.sort_unstable();
    for (i, &n) in numbers.iter().enumerate() {
        if n != i + 1 {
            return Err(GeometryError::BoundaryGap { missing: i + 1, found: n });
        }
    }
    let boundaries = numbers
        .iter()
        .map(|n| read_file(&dir.join(format!("boundary{n}.dat"))))
        .collect::<Result<Vec<_>, _>>()?;
    let boundaries: Vec<&str> = boundaries.iter().map(String::as_str).collect();
    parse(&coordinates, &elements, &boundaries)
}

fn read_file(path: &Path) -> Result<String, GeometryError> {
    fs::read_to_string(path).map_err(|source| {
        if source.kind() == std::io::ErrorKind::NotFound {
            GeometryError::MissingFile(path.to_path_buf())
        } else {
            GeometryError::Io {
                path: path.to_path_buf(),
                source,
            }
        }
    })
}

fn rows<const N: usize>(text: &str, file: &str) -> Result<Vec<[f64; N]>, GeometryError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(text.as_bytes());
    let mut out = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let parse_error = |message: String| GeometryError::Parse {
            file: file.to_string(),
            line: i + 1,
            message,
        };
        let record = record.map_err(|e| parse_error(e.to_string()))?;
        if record.iter().all(str::is_empty) {
            continue;
        }
        if record.len() != N {
            return Err(parse_error(format!("expected {N} columns, found {}", record.len())));
        }
        let mut row = [0.0; N];
        for (value, field) in row.iter_mut().zip(record.iter()) {
            *value = field
                .parse()
                .map_err(|_| parse_error(format!("not a number: {field:?}")))?;
        }
        out.push(row);
    }
    Ok(out)
}

fn indices<const N: usize>(text: &str, file: &str) -> Result<Vec<[usize; N]>, GeometryError> {
    rows::<N>(text, file)?
        .into_iter()
        .enumerate()
        .map(|(i, row)| {
            let mut out = [0; N];
            for (o, &x) in out.iter_mut().zip(&row) {
                if x < 1.0 || x.fract() != 0.0 {
                    return Err(GeometryError::Parse {
                        file: file.to_string(),
                        line: i + 1,
                        message: format!("invalid 1-based index {x}"),
                    });
                }
                *o = x as usize - 1;
            }
            Ok(out)
        })
        .collect()
}

/// Builds a mesh from file contents.
pub fn parse(coordinates: &str, elements: &str, boundaries: &[&str]) -> Result<Mesh, GeometryError> {
    let coordinates = rows::<2>(coordinates, "coordinates.dat")?;
    let elements = indices::<3>(elements, "elements.dat")?;
    let boundaries = boundaries
        .iter()
        .enumerate()
        .map(|(n, text)| indices::<2>(text, &format!("boundary{}.dat", n + 1)))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Mesh::from_arrays(coordinates, elements, boundaries)?)
}

/// Writes `mesh` in the directory format; indices round-trip exactly and
/// coordinates use the shortest representation that parses back to the same
/// value.
pub fn write_dir(mesh: &Mesh, dir: impl AsRef<Path>) -> Result<(), GeometryError> {
    let dir = dir.as_ref();
    let io = |path: PathBuf| move |source| GeometryError::Io { path, source };
    fs::create_dir_all(dir).map_err(io(dir.to_path_buf()))?;
    let mut files = vec![
        (
            "coordinates.dat".to_string(),
            mesh.coordinates().iter().map(|x| format!("{},{}\n", x[0], x[1])).collect::<String>(),
        ),
        (
            "elements.dat".to_string(),
            mesh.elements()
                .iter()
                .map(|t| format!("{},{},{}\n", t[0] + 1, t[1] + 1, t[2] + 1))
                .collect(),
        ),
    ];
    for (n, part) in mesh.boundary_edge_lists().iter().enumerate() {
        files.push((
            format!("boundary{}.dat", n + 1),
            part.iter().map(|e| format!("{},{}\n", e[0] + 1, e[1] + 1)).collect(),
        ));
    }
    for (name, content) in files {
        let path = dir.join(name);
        fs::write(&path, content).map_err(io(path.clone()))?;
    }
    Ok(())
}
