//! File formats, configuration loading, and histogram rebinning.
//!
//! All data files are plain text: JSON for configuration, CSV with
//! `#`-prefixed metadata lines for matrices, histograms, and scan
//! tables. Every CSV uses `.` as the decimal separator, `,` as the
//! delimiter, and LF line endings; floats are written with 12 fractional
//! digits of scientific notation so a write–read round trip preserves
//! values to better than one part in 10¹².

use crate::correlate::CountMatrix;
use crate::error::{Error, Result};
use crate::exec::{map_indexed, Exec};
use crate::jointdist::JointMatrix;
use crate::masks::{mask_index, MaskSpec};
use crate::model::{DetectionModel, Domain, OpticalSetup, SourceParams};
use crate::witness::{ScanRow, ScanTable};
use serde::Deserialize;
use std::fmt::Write as _;
use std::path::Path;

/// Exact column header of the fine-histogram range line.
const HISTOGRAM_HEADER: &str = "# xminA,xmaxA,xminB,xmaxB,nbins";

// ---------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    source: SourceSection,
    optics: OpticsSection,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SourceSection {
    pump_wavelength_nm: f64,
    /// Optional; omitted means frequency-degenerate (twice the pump).
    photon_wavelength_nm: Option<f64>,
    crystal_length_mm: f64,
    pump_waist_mm: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct OpticsSection {
    magnification: f64,
    effective_focal_length_mm: f64,
}

/// Load source and optics parameters from a JSON config file.
///
/// Expected shape:
///
/// ```json
/// {
///   "source": {
///     "pump_wavelength_nm": 325.0,
///     "photon_wavelength_nm": 650.0,
///     "crystal_length_mm": 2.0,
///     "pump_waist_mm": 0.464
///   },
///   "optics": { "magnification": 5.0, "effective_focal_length_mm": 333.0 }
/// }
/// ```
///
/// `photon_wavelength_nm` may be omitted (frequency-degenerate default).
/// Unknown keys are rejected so a mislabeled unit (for example a `_um`
/// suffix) fails loudly instead of being ignored.
pub fn read_config(path: &Path) -> Result<(SourceParams, OpticalSetup)> {
    let text = read_to_string(path)?;
    let parsed: ConfigFile = serde_json::from_str(&text).map_err(|e| Error::Parse {
        path: display(path),
        line: e.line(),
        message: e.to_string(),
    })?;
    let source = SourceParams::new(
        parsed.source.pump_wavelength_nm,
        parsed.source.photon_wavelength_nm,
        parsed.source.crystal_length_mm,
        parsed.source.pump_waist_mm,
    )?;
    let optics = OpticalSetup::new(
        parsed.optics.magnification,
        parsed.optics.effective_focal_length_mm,
    )?;
    Ok((source, optics))
}

// ---------------------------------------------------------------------
// Fine histograms
// ---------------------------------------------------------------------

/// A square fine-grid joint histogram over detector coordinates
/// `(xA, xB)`: `n_bins × n_bins` non-negative masses (counts or
/// probability) on uniform bins spanning `[xmin, xmax]` per arm.
#[derive(Debug, Clone, PartialEq)]
pub struct FineHistogram {
    pub xmin_a: f64,
    pub xmax_a: f64,
    pub xmin_b: f64,
    pub xmax_b: f64,
    pub n_bins: usize,
    /// Row-major masses: `masses[i * n_bins + j]` is the bin with arm-A
    /// index `i` and arm-B index `j`.
    pub masses: Vec<f64>,
}

impl FineHistogram {
    pub fn new(
        (xmin_a, xmax_a): (f64, f64),
        (xmin_b, xmax_b): (f64, f64),
        n_bins: usize,
        masses: Vec<f64>,
    ) -> Result<FineHistogram> {
        if n_bins < 2 {
            return Err(Error::Parameter(format!(
                "histogram needs at least 2 bins per axis, got {n_bins}"
            )));
        }
        for (name, lo, hi) in [("A", xmin_a, xmax_a), ("B", xmin_b, xmax_b)] {
            if !(lo.is_finite() && hi.is_finite() && hi > lo) {
                return Err(Error::Parameter(format!(
                    "arm {name} range [{lo}, {hi}] must be finite and increasing"
                )));
            }
        }
        if masses.len() != n_bins * n_bins {
            return Err(Error::Parameter(format!(
                "expected {} masses for {n_bins}² bins, got {}",
                n_bins * n_bins,
                masses.len()
            )));
        }
        if masses.iter().any(|m| !(m.is_finite() && *m >= 0.0)) {
            return Err(Error::Parameter(
                "histogram masses must be finite and non-negative".into(),
            ));
        }
        Ok(FineHistogram {
            xmin_a,
            xmax_a,
            xmin_b,
            xmax_b,
            n_bins,
            masses,
        })
    }

    /// Bin width along arm A.
    pub fn bin_width_a(&self) -> f64 {
        (self.xmax_a - self.xmin_a) / self.n_bins as f64
    }

    /// Bin width along arm B.
    pub fn bin_width_b(&self) -> f64 {
        (self.xmax_b - self.xmin_b) / self.n_bins as f64
    }

    /// Total mass across all bins.
    pub fn total(&self) -> f64 {
        self.masses.iter().sum()
    }
}

/// Tabulate the joint density on a square `n_bins × n_bins` grid over
/// `[lo, hi]` per arm. Each bin mass is the density averaged over a 4×4
/// midpoint subgrid times the bin area, so the tabulation integrates the
/// density rather than point-sampling it.
pub fn tabulate_histogram(
    model: &DetectionModel,
    domain: Domain,
    lo: f64,
    hi: f64,
    n_bins: usize,
) -> Result<FineHistogram> {
    if !(lo.is_finite() && hi.is_finite() && hi > lo) {
        return Err(Error::Parameter(format!(
            "tabulation range [{lo}, {hi}] must be finite and increasing"
        )));
    }
    if n_bins < 2 {
        return Err(Error::Parameter(format!(
            "tabulation needs at least 2 bins per axis, got {n_bins}"
        )));
    }
    let w = (hi - lo) / n_bins as f64;
    const SUB: usize = 4;
    let rows = map_indexed(Exec::Auto, n_bins, |i| {
        let mut row = vec![0.0f64; n_bins];
        for (j, cell) in row.iter_mut().enumerate() {
            let mut acc = 0.0;
            for si in 0..SUB {
                let xa = lo + (i as f64 + (si as f64 + 0.5) / SUB as f64) * w;
                for sj in 0..SUB {
                    let xb = lo + (j as f64 + (sj as f64 + 0.5) / SUB as f64) * w;
                    acc += model.joint_pdf(domain, xa, xb);
                }
            }
            *cell = acc / (SUB * SUB) as f64 * w * w;
        }
        row
    });
    let masses = rows.into_iter().flatten().collect();
    FineHistogram::new((lo, hi), (lo, hi), n_bins, masses)
}

/// Overlap of one fine bin `[lo, lo + width)` with the mask classes,
/// as up to two `(class, fraction)` pieces. The resolution guard caps
/// `width` at a quarter slit, so a bin meets at most one slit edge;
/// mass is treated as uniform within the bin, making the split error
/// second order in the bin width.
fn bin_pieces(spec: &MaskSpec, lo: f64, width: f64) -> [(usize, f64); 2] {
    let s = spec.slit_width();
    // First class edge strictly above `lo` (edges sit at offset + m*s).
    let edge = spec.offset + s * (((lo - spec.offset) / s).floor() + 1.0);
    let hi = lo + width;
    if edge >= hi {
        [(mask_index(spec, lo + 0.5 * width), 1.0), (0, 0.0)]
    } else {
        let f = ((edge - lo) / width).clamp(0.0, 1.0);
        [
            (mask_index(spec, 0.5 * (lo + edge)), f),
            (mask_index(spec, 0.5 * (edge + hi)), 1.0 - f),
        ]
    }
}

/// Coarse-grain a fine histogram into the `d × d` outcome matrix of a
/// periodic mask pair (the same mask geometry on both arms).
///
/// Each fine bin's mass is split across outcome pairs `(k, l)` in
/// proportion to its overlap with the mask classes on each axis, then
/// the matrix is normalized by the total input mass (histograms carry
/// no domain label, so the caller supplies the label for the output).
/// Refuses histograms whose bin width exceeds a quarter slit width on
/// either axis: past that point the uniform-within-bin overlap split
/// degrades and a bin can span more than one slit edge.
pub fn rebin_histogram(
    hist: &FineHistogram,
    spec: &MaskSpec,
    domain: Domain,
) -> Result<JointMatrix> {
    let max_allowed = spec.slit_width() / 4.0;
    for width in [hist.bin_width_a(), hist.bin_width_b()] {
        if width > max_allowed {
            return Err(Error::Resolution {
                bin_width: width,
                max_allowed,
            });
        }
    }
    let total = hist.total();
    if !(total > 0.0) {
        return Err(Error::Parameter(
            "cannot rebin a histogram with zero total mass".into(),
        ));
    }
    let d = spec.d;
    let mut entries = vec![0.0f64; d * d];
    let (wa, wb) = (hist.bin_width_a(), hist.bin_width_b());
    let pieces_a: Vec<_> = (0..hist.n_bins)
        .map(|i| bin_pieces(spec, hist.xmin_a + i as f64 * wa, wa))
        .collect();
    let pieces_b: Vec<_> = (0..hist.n_bins)
        .map(|j| bin_pieces(spec, hist.xmin_b + j as f64 * wb, wb))
        .collect();
    for (i, pa) in pieces_a.iter().enumerate() {
        for (j, pb) in pieces_b.iter().enumerate() {
            let m = hist.masses[i * hist.n_bins + j];
            if m == 0.0 {
                continue;
            }
            for &(k, fa) in pa {
                if fa == 0.0 {
                    continue;
                }
                for &(l, fb) in pb {
                    if fb > 0.0 {
                        entries[k * d + l] += m * fa * fb;
                    }
                }
            }
        }
    }
    for e in &mut entries {
        *e /= total;
    }
    Ok(JointMatrix {
        d,
        domain,
        entries,
        // The mask classes tile the whole axis, so every bin is assigned
        // and the normalized matrix captures all input mass.
        captured_mass: 1.0,
        // No quadrature involved in rebinning.
        quad_tolerance: 0.0,
    })
}

// ---------------------------------------------------------------------
// Text plumbing
// ---------------------------------------------------------------------

fn display(path: &Path) -> String {
    path.display().to_string()
}

fn read_to_string(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Io {
        path: display(path),
        message: e.to_string(),
    })
}

fn write_string(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::Io {
        path: display(path),
        message: e.to_string(),
    })
}

fn parse_error(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: display(path),
        line,
        message: message.into(),
    }
}

fn parse_f64(path: &Path, line: usize, field: &str, token: &str) -> Result<f64> {
    token
        .trim()
        .parse::<f64>()
        .map_err(|_| parse_error(path, line, format!("field {field}: bad float {token:?}")))
}

fn parse_usize(path: &Path, line: usize, field: &str, token: &str) -> Result<usize> {
    token
        .trim()
        .parse::<usize>()
        .map_err(|_| parse_error(path, line, format!("field {field}: bad integer {token:?}")))
}

/// `(line number, key, value)` triplets from `# key,value` lines.
type MetaLines = Vec<(usize, String, String)>;
/// `(line number, raw row)` pairs for the data section.
type DataLines = Vec<(usize, String)>;

/// Split a file into numbered metadata pairs and numbered data lines.
/// Metadata lines look like `# key,value...`; blank lines are skipped.
fn split_lines(text: &str) -> (MetaLines, DataLines) {
    let mut meta = Vec::new();
    let mut data = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim_end();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            let rest = rest.trim_start();
            match rest.split_once(',') {
                Some((key, value)) => {
                    meta.push((line_no, key.trim().to_string(), value.trim().to_string()))
                }
                None => meta.push((line_no, rest.trim().to_string(), String::new())),
            }
        } else {
            data.push((line_no, line.to_string()));
        }
    }
    (meta, data)
}

fn require_meta<'a>(
    path: &Path,
    meta: &'a [(usize, String, String)],
    key: &str,
) -> Result<(usize, &'a str)> {
    meta.iter()
        .find(|(_, k, _)| k == key)
        .map(|(line, _, v)| (*line, v.as_str()))
        .ok_or_else(|| parse_error(path, 0, format!("missing metadata line `# {key},...`")))
}

fn format_float(x: f64) -> String {
    format!("{x:.12e}")
}

fn push_metadata(out: &mut String, extra: &[(&str, &str)]) {
    for (key, value) in extra {
        let _ = writeln!(out, "# {key},{value}");
    }
}

// ---------------------------------------------------------------------
// JointMatrix files
// ---------------------------------------------------------------------

/// Render a joint probability matrix as CSV text: metadata lines for
/// domain, d, quadrature tolerance, and captured mass, optional extra
/// metadata pairs, then d rows of d floats. Readers ignore metadata
/// keys they do not recognize.
pub fn render_joint_matrix(matrix: &JointMatrix, extra: &[(&str, &str)]) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# domain,{}", matrix.domain.label());
    let _ = writeln!(out, "# d,{}", matrix.d);
    let _ = writeln!(out, "# tol,{}", format_float(matrix.quad_tolerance));
    let _ = writeln!(out, "# captured_mass,{}", format_float(matrix.captured_mass));
    push_metadata(&mut out, extra);
    for k in 0..matrix.d {
        let row: Vec<String> = (0..matrix.d)
            .map(|l| format_float(matrix.entry(k, l)))
            .collect();
        let _ = writeln!(out, "{}", row.join(","));
    }
    out
}

/// Write [`render_joint_matrix`] output to a file.
pub fn write_joint_matrix(path: &Path, matrix: &JointMatrix, extra: &[(&str, &str)]) -> Result<()> {
    write_string(path, &render_joint_matrix(matrix, extra))
}

/// Read a joint probability matrix written by [`write_joint_matrix`].
pub fn read_joint_matrix(path: &Path) -> Result<JointMatrix> {
    let text = read_to_string(path)?;
    let (meta, data) = split_lines(&text);
    let (dl, domain) = require_meta(path, &meta, "domain")?;
    let domain = Domain::parse(domain).map_err(|e| parse_error(path, dl, e.to_string()))?;
    let (line, value) = require_meta(path, &meta, "d")?;
    let d = parse_usize(path, line, "d", value)?;
    let (line, value) = require_meta(path, &meta, "tol")?;
    let quad_tolerance = parse_f64(path, line, "tol", value)?;
    let (line, value) = require_meta(path, &meta, "captured_mass")?;
    let captured_mass = parse_f64(path, line, "captured_mass", value)?;
    if data.len() != d {
        return Err(parse_error(
            path,
            data.first().map(|(l, _)| *l).unwrap_or(0),
            format!("expected {d} matrix rows, found {}", data.len()),
        ));
    }
    let mut entries = Vec::with_capacity(d * d);
    for (line, row) in &data {
        let cells: Vec<&str> = row.split(',').collect();
        if cells.len() != d {
            return Err(parse_error(
                path,
                *line,
                format!("expected {d} columns, found {}", cells.len()),
            ));
        }
        for cell in cells {
            entries.push(parse_f64(path, *line, "entry", cell)?);
        }
    }
    Ok(JointMatrix {
        d,
        domain,
        entries,
        captured_mass,
        quad_tolerance,
    })
}

// ---------------------------------------------------------------------
// CountMatrix files
// ---------------------------------------------------------------------

/// Render a coincidence-count matrix as CSV text. `extra` metadata
/// pairs (for example the seed and generator of a simulation) are
/// appended after the required `domain`, `d`, `T_mm`, and `dwell_s`
/// lines; readers ignore keys they do not recognize.
pub fn render_count_matrix(matrix: &CountMatrix, extra: &[(&str, &str)]) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# domain,{}", matrix.domain.label());
    let _ = writeln!(out, "# d,{}", matrix.d);
    let _ = writeln!(out, "# T_mm,{}", format_float(matrix.period_mm));
    let _ = writeln!(out, "# dwell_s,{}", format_float(matrix.dwell_s));
    push_metadata(&mut out, extra);
    for k in 0..matrix.d {
        let row: Vec<String> = (0..matrix.d)
            .map(|l| matrix.entry(k, l).to_string())
            .collect();
        let _ = writeln!(out, "{}", row.join(","));
    }
    out
}

/// Write [`render_count_matrix`] output to a file.
pub fn write_count_matrix(
    path: &Path,
    matrix: &CountMatrix,
    extra: &[(&str, &str)],
) -> Result<()> {
    write_string(path, &render_count_matrix(matrix, extra))
}

/// Read a coincidence-count matrix written by [`write_count_matrix`].
pub fn read_count_matrix(path: &Path) -> Result<CountMatrix> {
    let text = read_to_string(path)?;
    let (meta, data) = split_lines(&text);
    let (dl, domain) = require_meta(path, &meta, "domain")?;
    let domain = Domain::parse(domain).map_err(|e| parse_error(path, dl, e.to_string()))?;
    let (line, value) = require_meta(path, &meta, "d")?;
    let d = parse_usize(path, line, "d", value)?;
    let (line, value) = require_meta(path, &meta, "T_mm")?;
    let period_mm = parse_f64(path, line, "T_mm", value)?;
    let (line, value) = require_meta(path, &meta, "dwell_s")?;
    let dwell_s = parse_f64(path, line, "dwell_s", value)?;
    if data.len() != d {
        return Err(parse_error(
            path,
            data.first().map(|(l, _)| *l).unwrap_or(0),
            format!("expected {d} count rows, found {}", data.len()),
        ));
    }
    let mut counts = Vec::with_capacity(d * d);
    for (line, row) in &data {
        let cells: Vec<&str> = row.split(',').collect();
        if cells.len() != d {
            return Err(parse_error(
                path,
                *line,
                format!("expected {d} columns, found {}", cells.len()),
            ));
        }
        for cell in cells {
            let n = cell.trim().parse::<u64>().map_err(|_| {
                parse_error(path, *line, format!("field count: bad integer {cell:?}"))
            })?;
            counts.push(n);
        }
    }
    let mut matrix = CountMatrix::new(domain, d, period_mm)?;
    matrix.counts = counts;
    matrix.dwell_s = dwell_s;
    Ok(matrix)
}

// ---------------------------------------------------------------------
// FineHistogram files
// ---------------------------------------------------------------------

/// Write a fine histogram: the literal range header, a metadata line
/// holding the range values, then `n_bins` rows of `n_bins` masses.
pub fn write_fine_histogram(path: &Path, hist: &FineHistogram) -> Result<()> {
    let mut out = String::new();
    let _ = writeln!(out, "{HISTOGRAM_HEADER}");
    let _ = writeln!(
        out,
        "# {},{},{},{},{}",
        format_float(hist.xmin_a),
        format_float(hist.xmax_a),
        format_float(hist.xmin_b),
        format_float(hist.xmax_b),
        hist.n_bins
    );
    for i in 0..hist.n_bins {
        let row: Vec<String> = (0..hist.n_bins)
            .map(|j| format_float(hist.masses[i * hist.n_bins + j]))
            .collect();
        let _ = writeln!(out, "{}", row.join(","));
    }
    write_string(path, &out)
}

/// Read a fine histogram written by [`write_fine_histogram`].
pub fn read_fine_histogram(path: &Path) -> Result<FineHistogram> {
    let text = read_to_string(path)?;
    let mut header_seen = false;
    let mut ranges: Option<(usize, Vec<String>)> = None;
    let mut data: Vec<(usize, String)> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim_end();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            if line == HISTOGRAM_HEADER {
                header_seen = true;
            } else if header_seen && ranges.is_none() {
                ranges = Some((
                    line_no,
                    rest.trim().split(',').map(|t| t.trim().to_string()).collect(),
                ));
            }
        } else {
            data.push((line_no, line.to_string()));
        }
    }
    if !header_seen {
        return Err(parse_error(
            path,
            0,
            format!("missing histogram header line {HISTOGRAM_HEADER:?}"),
        ));
    }
    let (range_line, tokens) =
        ranges.ok_or_else(|| parse_error(path, 0, "missing histogram range line"))?;
    if tokens.len() != 5 {
        return Err(parse_error(
            path,
            range_line,
            format!("expected 5 range values, found {}", tokens.len()),
        ));
    }
    let xmin_a = parse_f64(path, range_line, "xminA", &tokens[0])?;
    let xmax_a = parse_f64(path, range_line, "xmaxA", &tokens[1])?;
    let xmin_b = parse_f64(path, range_line, "xminB", &tokens[2])?;
    let xmax_b = parse_f64(path, range_line, "xmaxB", &tokens[3])?;
    let n_bins = parse_usize(path, range_line, "nbins", &tokens[4])?;
    if data.len() != n_bins {
        return Err(parse_error(
            path,
            data.first().map(|(l, _)| *l).unwrap_or(0),
            format!("expected {n_bins} histogram rows, found {}", data.len()),
        ));
    }
    let mut masses = Vec::with_capacity(n_bins * n_bins);
    for (line, row) in &data {
        let cells: Vec<&str> = row.split(',').collect();
        if cells.len() != n_bins {
            return Err(parse_error(
                path,
                *line,
                format!("expected {n_bins} columns, found {}", cells.len()),
            ));
        }
        for cell in cells {
            masses.push(parse_f64(path, *line, "mass", cell)?);
        }
    }
    FineHistogram::new((xmin_a, xmax_a), (xmin_b, xmax_b), n_bins, masses)
}

// ---------------------------------------------------------------------
// ScanTable files
// ---------------------------------------------------------------------

const SCAN_COLUMNS: &str = "d,Tx_mm,Tp_mm,C_xx,C_pp,I_d,Q_d,margin,detected";

/// Render a witness scan as CSV text: optional metadata lines, one
/// column header row, then one row per grid point.
pub fn render_scan_table(table: &ScanTable, extra: &[(&str, &str)]) -> String {
    let mut out = String::new();
    push_metadata(&mut out, extra);
    let _ = writeln!(out, "{SCAN_COLUMNS}");
    for row in &table.rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            row.d,
            format_float(row.tx_mm),
            format_float(row.tp_mm),
            format_float(row.c_xx),
            format_float(row.c_pp),
            format_float(row.i_d),
            format_float(row.q_d),
            format_float(row.margin),
            row.detected
        );
    }
    out
}

/// Write [`render_scan_table`] output to a file.
pub fn write_scan_table(path: &Path, table: &ScanTable, extra: &[(&str, &str)]) -> Result<()> {
    write_string(path, &render_scan_table(table, extra))
}

/// Read a witness scan written by [`write_scan_table`].
pub fn read_scan_table(path: &Path) -> Result<ScanTable> {
    let text = read_to_string(path)?;
    let (_, data) = split_lines(&text);
    let mut rows = Vec::new();
    let mut header_seen = false;
    for (line, row) in &data {
        if !header_seen {
            if row.trim() == SCAN_COLUMNS {
                header_seen = true;
                continue;
            }
            return Err(parse_error(
                path,
                *line,
                format!("expected column header {SCAN_COLUMNS:?}"),
            ));
        }
        let cells: Vec<&str> = row.split(',').collect();
        if cells.len() != 9 {
            return Err(parse_error(
                path,
                *line,
                format!("expected 9 columns, found {}", cells.len()),
            ));
        }
        let detected = match cells[8].trim() {
            "true" => true,
            "false" => false,
            other => {
                return Err(parse_error(
                    path,
                    *line,
                    format!("field detected: expected true/false, got {other:?}"),
                ))
            }
        };
        rows.push(ScanRow {
            d: parse_usize(path, *line, "d", cells[0])?,
            tx_mm: parse_f64(path, *line, "Tx_mm", cells[1])?,
            tp_mm: parse_f64(path, *line, "Tp_mm", cells[2])?,
            c_xx: parse_f64(path, *line, "C_xx", cells[3])?,
            c_pp: parse_f64(path, *line, "C_pp", cells[4])?,
            i_d: parse_f64(path, *line, "I_d", cells[5])?,
            q_d: parse_f64(path, *line, "Q_d", cells[6])?,
            margin: parse_f64(path, *line, "margin", cells[7])?,
            detected,
        });
    }
    if !header_seen {
        return Err(parse_error(path, 0, "missing scan column header"));
    }
    Ok(ScanTable { rows })
}
