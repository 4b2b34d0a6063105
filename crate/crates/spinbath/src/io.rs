//! File formats: observable CSVs, frequency lists, cached bath spectra, gnuplot script.

use std::fs::{self, File};
use std::io::{self, BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use spinbath_core::hilbert::{StateVector, C64};

use crate::config::ConfigError;

pub const CSV_HEADER: &str = "t,S,X,Y,Z";

/// One output time.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Row {
    pub t: f64,
    pub s: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

/// `{:.16e}` keeps 17 significant digits, enough to round-trip every `f64`.
pub fn write_csv(path: &Path, rows: &[Row]) -> io::Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "{CSV_HEADER}")?;
    for r in rows {
        writeln!(w, "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}", r.t, r.s, r.x, r.y, r.z)?;
    }
    w.flush()
}

pub fn read_csv(path: &Path) -> io::Result<Vec<Row>> {
    let text = fs::read_to_string(path)?;
    let bad = |line: usize, what: &str| {
        io::Error::new(io::ErrorKind::InvalidData, format!("{}:{line}: {what}", path.display()))
    };
    let mut lines = text.lines();
    if lines.next() != Some(CSV_HEADER) {
        return Err(bad(1, "header is not `t,S,X,Y,Z`"));
    }
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        let v: Vec<f64> = line
            .split(',')
            .map(str::parse)
            .collect::<Result<_, _>>()
            .map_err(|_| bad(i + 2, "unparsable number"))?;
        if v.len() != 5 {
            return Err(bad(i + 2, "expected 5 columns"));
        }
        rows.push(Row { t: v[0], s: v[1], x: v[2], y: v[3], z: v[4] });
    }
    Ok(rows)
}

/// One frequency per line; blank lines and `#` comments are skipped.
pub fn read_frequency_file(path: &Path) -> Result<Vec<f64>, ConfigError> {
    let file = File::open(path).map_err(|source| ConfigError::Io { path: path.into(), source })?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|source| ConfigError::Io { path: path.into(), source })?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let v = line.parse::<f64>().map_err(|_| ConfigError::Parse {
            path: path.into(),
            line: i + 1,
            reason: format!("`{line}` is not a number"),
        })?;
        out.push(v);
    }
    Ok(out)
}

pub fn write_frequency_file(path: &Path, freqs: &[f64]) -> io::Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for f in freqs {
        writeln!(w, "{f:.16e}")?;
    }
    w.flush()
}

const SPECTRUM_MAGIC: &[u8; 8] = b"SPINBATH";
const SPECTRUM_VERSION: u32 = 1;

/// Bath eigendata for one coupling.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectrumBlock {
    pub lambda: f64,
    pub energies: Vec<f64>,
    pub residuals: Vec<f64>,
    pub eigenvectors: Vec<StateVector>,
}

/// Little-endian layout: magic, version `u32`, `n_s u32`, block count `u32`, then per block
/// `λ f64`, pair count `u32`, dimension `u64`, energies, residuals, and the vectors as
/// interleaved (re, im) pairs.
pub fn write_spectrum(path: &Path, n_s: usize, blocks: &[SpectrumBlock]) -> io::Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(SPECTRUM_MAGIC)?;
    w.write_all(&SPECTRUM_VERSION.to_le_bytes())?;
    w.write_all(&(n_s as u32).to_le_bytes())?;
    w.write_all(&(blocks.len() as u32).to_le_bytes())?;
    for b in blocks {
        let dim = 1u64 << n_s;
        w.write_all(&b.lambda.to_le_bytes())?;
        w.write_all(&(b.energies.len() as u32).to_le_bytes())?;
        w.write_all(&dim.to_le_bytes())?;
        for x in b.energies.iter().chain(&b.residuals) {
            w.write_all(&x.to_le_bytes())?;
        }
        for v in &b.eigenvectors {
            assert_eq!(v.dim() as u64, dim, "spectrum vector has the wrong dimension");
            for a in v.amplitudes() {
                w.write_all(&a.re.to_le_bytes())?;
                w.write_all(&a.im.to_le_bytes())?;
            }
        }
    }
    w.flush()
}

pub fn read_spectrum(path: &Path) -> io::Result<(usize, Vec<SpectrumBlock>)> {
    let mut r = BufReader::new(File::open(path)?);
    let bad = |what: &str| io::Error::new(io::ErrorKind::InvalidData, format!("{}: {what}", path.display()));
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != SPECTRUM_MAGIC {
        return Err(bad("not a spectrum file"));
    }
    if read_u32(&mut r)? != SPECTRUM_VERSION {
        return Err(bad("unsupported version"));
    }
    let n_s = read_u32(&mut r)? as usize;
    let n_blocks = read_u32(&mut r)?;
    let mut blocks = Vec::new();
    for _ in 0..n_blocks {
        let lambda = read_f64(&mut r)?;
        let n = read_u32(&mut r)? as usize;
        let mut dim_bytes = [0u8; 8];
        r.read_exact(&mut dim_bytes)?;
        let dim = u64::from_le_bytes(dim_bytes);
        if n_s >= 32 || dim != 1u64 << n_s {
            return Err(bad("dimension does not match n_s"));
        }
        let energies = (0..n).map(|_| read_f64(&mut r)).collect::<io::Result<Vec<_>>>()?;
        let residuals = (0..n).map(|_| read_f64(&mut r)).collect::<io::Result<Vec<_>>>()?;
        let mut eigenvectors = Vec::with_capacity(n);
        for _ in 0..n {
            let amps = (0..dim)
                .map(|_| Ok(C64::new(read_f64(&mut r)?, read_f64(&mut r)?)))
                .collect::<io::Result<Vec<_>>>()?;
            eigenvectors.push(StateVector::from_amplitudes(amps).map_err(|e| bad(&e.to_string()))?);
        }
        blocks.push(SpectrumBlock { lambda, energies, residuals, eigenvectors });
    }
    let mut rest = [0u8; 1];
    if r.read(&mut rest)? != 0 {
        return Err(bad("trailing bytes"));
    }
    Ok((n_s, blocks))
}

fn read_u32(r: &mut impl Read) -> io::Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_f64(r: &mut impl Read) -> io::Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}

/// Gnuplot script: entropy for every coupling, then X, Y, Z for the weakest and strongest
/// couplings against the isolated spin.
pub fn plot_script(sweep_files: &[(f64, String)], isolated: Option<&str>) -> String {
    let mut s = String::new();
    s.push_str("set datafile separator ','\nset key outside right\nset xlabel 't'\n");
    s.push_str("set terminal pdfcairo size 6in,4in\nset output 'plots.pdf'\n\n");
    s.push_str("set ylabel 'S'\nset yrange [0:0.75]\n");
    s.push_str("plot log(2) with lines dashtype 2 lc rgb 'gray' title 'ln 2'");
    for (lambda, file) in sweep_files {
        s.push_str(&format!(", \\\n     '{file}' every ::1 using 1:2 with lines title 'λ = {lambda}'"));
    }
    s.push_str("\n\nset yrange [-1.05:1.05]\n");
    let mut picked: Vec<&(f64, String)> = Vec::new();
    if let Some(first) = sweep_files.first() {
        picked.push(first);
    }
    if let Some(last) = sweep_files.last() {
        if sweep_files.len() > 1 {
            picked.push(last);
        }
    }
    for (col, name) in [(3, "X"), (4, "Y"), (5, "Z")] {
        s.push_str(&format!("set ylabel '{name}'\nplot "));
        let mut series = Vec::new();
        if let Some(iso) = isolated {
            series.push(format!("'{iso}' every ::1 using 1:{col} with lines lc rgb 'black' title 'isolated'"));
        }
        for (lambda, file) in &picked {
            series.push(format!("'{file}' every ::1 using 1:{col} with lines title 'λ = {lambda}'"));
        }
        s.push_str(&series.join(", \\\n     "));
        s.push_str("\n\n");
    }
    s
}
