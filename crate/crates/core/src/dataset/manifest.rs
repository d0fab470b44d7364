use std::collections::HashSet;
use std::fs;
use std::path::Path;

use super::{rescale_features, DatasetError, FeatureBounds, PairedExample};
use crate::fitness::{FEATURE_COUNT, FEATURE_NAMES};
use crate::generator::Genre;
use crate::image::read_image;

pub const MANIFEST_HEADER: [&str; 11] = [
    "cover_path",
    "genre",
    "danceability",
    "valence",
    "energy",
    "tempo",
    "loudness",
    "speechiness",
    "instrumentalness",
    "liveness",
    "acousticness",
];

/// Reads a manifest CSV. Cover paths are resolved relative to the manifest's
/// directory and box-resized to `image_size`; raw features are rescaled with
/// `bounds`. Errors carry the 1-based data row number.
pub fn load_manifest(
    path: &Path,
    image_size: usize,
    bounds: &FeatureBounds,
) -> Result<Vec<PairedExample>, DatasetError> {
    bounds.validate()?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    let text = fs::read_to_string(path).map_err(|source| DatasetError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = reader.headers()?.clone();
    let column = |name: &str| -> Result<usize, DatasetError> {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| DatasetError::MissingColumn(name.to_string()))
    };
    let cover_col = column("cover_path")?;
    let genre_col = column("genre")?;
    let feature_cols = FEATURE_NAMES
        .iter()
        .map(|n| column(n))
        .collect::<Result<Vec<_>, _>>()?;

    let mut examples = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let row = i + 1;
        let record = record.map_err(|e| DatasetError::Row {
            row,
            message: e.to_string(),
        })?;
        let field = |col: usize| record.get(col).unwrap_or("");
        let genre: Genre =
            field(genre_col)
                .parse()
                .map_err(|e: crate::generator::UnknownGenre| DatasetError::Row {
                    row,
                    message: e.to_string(),
                })?;
        let mut raw = [0.0; FEATURE_COUNT];
        for (k, &col) in feature_cols.iter().enumerate() {
            let value: f64 = field(col).parse().map_err(|_| DatasetError::Row {
                row,
                message: format!(
                    "feature '{}' = '{}' is not a number",
                    FEATURE_NAMES[k],
                    field(col)
                ),
            })?;
            if !value.is_finite() {
                return Err(DatasetError::Row {
                    row,
                    message: format!("feature '{}' is not finite", FEATURE_NAMES[k]),
                });
            }
            raw[k] = value;
        }
        let features = rescale_features(&raw, bounds).map_err(|e| DatasetError::Row {
            row,
            message: e.to_string(),
        })?;
        let cover_path = field(cover_col);
        if cover_path.is_empty() {
            return Err(DatasetError::Row {
                row,
                message: "empty cover_path".into(),
            });
        }
        let image = read_image(&base.join(cover_path)).map_err(|e| DatasetError::Row {
            row,
            message: e.to_string(),
        })?;
        let cover = if image.width() == image_size && image.height() == image_size {
            image.into()
        } else {
            image.box_resize(image_size)
        };
        examples.push(PairedExample {
            cover,
            features,
            genre,
            cover_id: cover_path.to_string(),
        });
    }
    Ok(examples)
}

/// Writes `manifest.csv` plus one PPM per distinct cover under
/// `dir/images/`. Features are written in raw units (inverse of the
/// rescaling applied on load).
pub fn write_manifest(
    dir: &Path,
    examples: &[PairedExample],
    bounds: &FeatureBounds,
) -> Result<std::path::PathBuf, DatasetError> {
    bounds.validate()?;
    let images = dir.join("images");
    fs::create_dir_all(&images).map_err(|source| DatasetError::Io {
        path: images.clone(),
        source,
    })?;
    let path = dir.join("manifest.csv");
    let mut writer = csv::Writer::from_path(&path)?;
    writer.write_record(MANIFEST_HEADER)?;
    let mut written = HashSet::new();
    for ex in examples {
        let file_name = format!("{}.ppm", sanitize(&ex.cover_id));
        if written.insert(file_name.clone()) {
            ex.cover.save(&images.join(&file_name))?;
        }
        let mut record = vec![format!("images/{file_name}"), ex.genre.name().to_string()];
        record.extend(bounds.to_raw(&ex.features).iter().map(|v| v.to_string()));
        writer.write_record(&record)?;
    }
    writer.flush().map_err(|source| DatasetError::Io {
        path: path.clone(),
        source,
    })?;
    Ok(path)
}

fn sanitize(id: &str) -> String {
    let stem = id.strip_prefix("images/").unwrap_or(id);
    let stem = stem.strip_suffix(".ppm").unwrap_or(stem);
    stem.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' || c == '_' {
                c
            } else {
                '_'
            }
        })
        .collect()
}
