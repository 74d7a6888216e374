use super::grid::{FbmPath, UniformGrid};
use crate::error::{Error, Result};
use std::io::{BufRead, Write};

/// Writes `t,coord_0,…` with cumulative path values (zero at the first node),
/// 17 significant digits.
pub fn write_path_csv(path: &FbmPath, out: &mut impl Write) -> std::io::Result<()> {
    let header: Vec<String> = (0..path.d).map(|c| format!("coord_{c}")).collect();
    writeln!(out, "t,{}", header.join(","))?;
    let values: Vec<Vec<f64>> = (0..path.d).map(|c| path.values(c)).collect();
    for i in 0..=path.grid.n {
        write!(out, "{:.16e}", path.grid.time(i))?;
        for v in &values {
            write!(out, ",{:.16e}", v[i])?;
        }
        writeln!(out)?;
    }
    Ok(())
}

/// Reads a path written by [`write_path_csv`]; the nodes must be uniform.
pub fn read_path_csv(input: impl BufRead, hurst: f64) -> Result<FbmPath> {
    let bad = |m: String| Error::Invalid(format!("noise CSV: {m}"));
    let mut lines = input.lines();
    let header = lines.next().ok_or_else(|| bad("empty file".into()))??;
    let cols: Vec<&str> = header.trim().split(',').collect();
    if cols.first() != Some(&"t") || cols.len() < 2 || cols[1..].iter().enumerate().any(|(c, s)| *s != format!("coord_{c}")) {
        return Err(bad(format!("unexpected header '{header}'")));
    }
    let d = cols.len() - 1;
    let mut t = Vec::new();
    let mut vals = vec![Vec::new(); d];
    for (ln, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<f64> = line
            .split(',')
            .map(|s| s.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| bad(format!("line {}: {e}", ln + 2)))?;
        if f.len() != d + 1 {
            return Err(bad(format!("line {}: expected {} fields, got {}", ln + 2, d + 1, f.len())));
        }
        t.push(f[0]);
        for c in 0..d {
            vals[c].push(f[c + 1]);
        }
    }
    if t.len() < 2 {
        return Err(bad("need at least two nodes".into()));
    }
    let n = t.len() - 1;
    let dt = (t[n] - t[0]) / n as f64;
    if t.iter().enumerate().any(|(i, &ti)| (ti - (t[0] + i as f64 * dt)).abs() > 1e-9 * dt.max(1.0)) {
        return Err(bad("nodes are not uniformly spaced".into()));
    }
    let grid = UniformGrid::new(t[0], dt, n)?;
    let inc = vals.iter().map(|v| v.windows(2).map(|w| w[1] - w[0]).collect()).collect();
    FbmPath::new(grid, hurst, inc)
}
