use super::grid::{DriftRecord, KernelParams};
use super::quad::{adaptive, GaussRule};
use crate::error::{Error, Result};

/// A piece of a piecewise-constant function: value `v` on `[a, b)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Block {
    pub a: f64,
    pub b: f64,
    pub v: f64,
}

/// Evaluates `(R_T g)(t) = ∫_{-∞}^0 t^{1/2-H} (T-s)^{H-1/2} / (t+T-s) g(s) ds`
/// for piecewise-constant `g` given as blocks in `(-∞, 0]`.
pub struct ROperator {
    p: f64,
    rule: GaussRule,
}

impl ROperator {
    pub fn new(hurst: f64) -> Self {
        Self { p: hurst - 0.5, rule: GaussRule::new(10) }
    }

    /// `∫_{lo}^{hi} u^p / (t + u) du`, `0 ≤ lo < hi`.
    pub fn cell(&self, lo: f64, hi: f64, t: f64) -> f64 {
        let p = self.p;
        let f = |u: f64| u.powf(p) / (t + u);
        if lo <= 0.0 {
            // v = u^{1+p} removes the branch point at 0
            let e = 1.0 / (1.0 + p);
            let vh = hi.powf(1.0 + p);
            let head = adaptive(0.0, vh, 1e-14, 400, |v| e / (t + v.powf(e))).0;
            return head;
        }
        let mut a = lo;
        let mut s = 0.0;
        while a < hi {
            let b = (2.0 * a).min(hi);
            s += self.rule.integrate(a, b, f);
            a = b;
        }
        s
    }

    pub fn eval(&self, blocks: &[Block], big_t: f64, t: f64) -> f64 {
        let mut s = 0.0;
        for blk in blocks {
            if blk.v == 0.0 {
                continue;
            }
            s += blk.v * self.cell(big_t - blk.b, big_t - blk.a, t);
        }
        if s == 0.0 {
            0.0
        } else {
            t.powf(-self.p) * s
        }
    }

    /// `|(R_T g)(t)| ≤ t^{-1/2-H} ∫ (T-s)^{H-1/2} |g(s)| ds`; the constant of this
    /// power-law envelope.
    pub fn tail_constant(&self, blocks: &[Block], big_t: f64) -> f64 {
        let q = self.p + 1.0;
        blocks
            .iter()
            .map(|b| b.v.abs() * ((big_t - b.a).powf(q) - (big_t - b.b).powf(q)) / q)
            .sum()
    }
}

/// Converts the cells of one coordinate of a record ending at time `end` into
/// blocks in shifted time `s - end`, dropping zero cells.
pub fn blocks_of(rec: &DriftRecord, coord: usize, end: f64) -> Vec<Block> {
    rec.gw[coord]
        .iter()
        .enumerate()
        .filter(|(_, &v)| v != 0.0)
        .map(|(i, &v)| Block { a: rec.grid.time(i) - end, b: rec.grid.time(i + 1) - end, v })
        .collect()
}

/// `R_T g` at the positive times `ts`, per coordinate, for the `g_w` history in
/// `g` (which must end at time 0).
pub fn r_operator(g: &DriftRecord, big_t: f64, ts: &[f64], params: &KernelParams) -> Result<Vec<Vec<f64>>> {
    if (g.grid.t_end()).abs() > 1e-9 * g.grid.dt {
        return Err(Error::Invalid(format!("history must end at 0, ends at {}", g.grid.t_end())));
    }
    if big_t < 0.0 {
        return Err(Error::Invalid("T must be nonnegative".into()));
    }
    if ts.iter().any(|&t| !(t > 0.0)) {
        return Err(Error::Invalid("output times must be positive".into()));
    }
    let op = ROperator::new(params.hurst);
    Ok((0..g.d)
        .map(|c| {
            let blocks = blocks_of(g, c, 0.0);
            ts.iter().map(|&t| op.eval(&blocks, big_t, t)).collect()
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fractional_kernels::UniformGrid;

    #[test]
    fn bump_at_t1_matches_reference() {
        let params = KernelParams::new(0.7, 0.6, 10.0).unwrap();
        let grid = UniformGrid::new(-1.0, 1.0 / 8.0, 8).unwrap();
        let mut g = DriftRecord::zeros(grid, 1, 10.0);
        g.gw[0].iter_mut().for_each(|v| *v = 1.0);
        let v = r_operator(&g, 0.0, &[1.0], &params).unwrap()[0][0];
        let reference = 0.558432136741056809796223864898;
        assert!((v - reference).abs() < 1e-12, "{v}");
    }

    #[test]
    fn zero_history_is_exactly_zero() {
        let params = KernelParams::new(0.7, 0.6, 10.0).unwrap();
        let grid = UniformGrid::new(-2.0, 0.25, 8).unwrap();
        let g = DriftRecord::zeros(grid, 2, 10.0);
        let v = r_operator(&g, 1.0, &[0.5, 3.0], &params).unwrap();
        assert!(v.iter().flatten().all(|&x| x == 0.0));
    }
}
