//! Sparse SDPA (`.dat-s`) export.
//!
//! SDPA form: `min cᵀx  s.t.  Σ_i x_i F_i − F_0 ⪰ 0`. Each Hermitian block
//! becomes its real embedding; the box and the linear rows share one
//! diagonal LP block (an equality becomes two inequalities). The constant
//! objective offset is written as a comment.

use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use super::embed::embed_sparse;
use super::{ConicProblem, LinearRow, PsdBlock};
use crate::error::{Error, Result};
use num_complex::Complex64;

/// `(matrix, block, row, col, value)` with 1-based block, row and column;
/// matrix 0 is `F_0`.
pub type SdpaEntry = (usize, usize, usize, usize, f64);

#[derive(Clone, Debug, PartialEq)]
pub struct SdpaProblem {
    pub num_vars: usize,
    /// Positive sizes are dense blocks, negative sizes diagonal blocks.
    pub block_struct: Vec<i64>,
    pub objective: Vec<f64>,
    pub offset: f64,
    /// Upper-triangle entries sorted by matrix, block, row, column.
    pub entries: Vec<SdpaEntry>,
}

pub fn export_sdpa(p: &ConicProblem) -> Result<SdpaProblem> {
    p.validate()?;
    let mut block_struct = Vec::new();
    let mut entries: Vec<SdpaEntry> = Vec::new();
    for (k, b) in p.blocks.iter().enumerate() {
        let blk = k + 1;
        block_struct.push(2 * b.dim as i64);
        for (r, c, v) in embed_sparse(b.dim, &b.constant) {
            push(&mut entries, 0, blk, r, c, -v);
        }
        for (i, e) in &b.terms {
            for (r, c, v) in embed_sparse(b.dim, e) {
                push(&mut entries, i + 1, blk, r, c, v);
            }
        }
    }
    // LP block: one diagonal slot per one-sided inequality
    let lp_blk = p.blocks.len() + 1;
    let mut slot = 0;
    let mut ineq = |entries: &mut Vec<SdpaEntry>, coeffs: &[(usize, f64)], sign: f64, rhs: f64| {
        push(entries, 0, lp_blk, slot, slot, sign * rhs);
        for &(i, a) in coeffs {
            push(entries, i + 1, lp_blk, slot, slot, sign * a);
        }
        slot += 1;
    };
    for i in 0..p.num_vars {
        if p.lower[i].is_finite() {
            ineq(&mut entries, &[(i, 1.0)], 1.0, p.lower[i]);
        }
        if p.upper[i].is_finite() {
            ineq(&mut entries, &[(i, 1.0)], -1.0, p.upper[i]);
        }
    }
    for r in &p.rows {
        if r.lo.is_finite() {
            ineq(&mut entries, &r.coeffs, 1.0, r.lo);
        }
        if r.hi.is_finite() {
            ineq(&mut entries, &r.coeffs, -1.0, r.hi);
        }
    }
    if slot > 0 {
        block_struct.push(-(slot as i64));
    }
    // merge duplicates, drop zeros, sort
    entries.sort_by(|a, b| (a.0, a.1, a.2, a.3).cmp(&(b.0, b.1, b.2, b.3)));
    let mut merged: Vec<SdpaEntry> = Vec::with_capacity(entries.len());
    for e in entries {
        match merged.last_mut() {
            Some(l) if (l.0, l.1, l.2, l.3) == (e.0, e.1, e.2, e.3) => l.4 += e.4,
            _ => merged.push(e),
        }
    }
    merged.retain(|e| e.4 != 0.0);
    if block_struct.is_empty() {
        return Err(Error::Config("problem has no constraints to export".into()));
    }
    Ok(SdpaProblem {
        num_vars: p.num_vars,
        block_struct,
        objective: p.objective.clone(),
        offset: p.offset,
        entries: merged,
    })
}

/// Stores an entry of a symmetric matrix, upper triangle only, 1-based.
fn push(entries: &mut Vec<SdpaEntry>, mat: usize, blk: usize, r: usize, c: usize, v: f64) {
    if r <= c {
        entries.push((mat, blk, r + 1, c + 1, v));
    }
}

impl SdpaProblem {
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "* sparse SDPA: min c'x s.t. sum_i x_i F_i - F_0 psd");
        let _ = writeln!(s, "* objective offset {:.17e}", self.offset);
        let _ = writeln!(s, "{}", self.num_vars);
        let _ = writeln!(s, "{}", self.block_struct.len());
        let bs: Vec<String> = self.block_struct.iter().map(|b| b.to_string()).collect();
        let _ = writeln!(s, "{}", bs.join(" "));
        let c: Vec<String> = self.objective.iter().map(|v| format!("{v:.17e}")).collect();
        let _ = writeln!(s, "{}", c.join(" "));
        for &(m, b, i, j, v) in &self.entries {
            let _ = writeln!(s, "{m} {b} {i} {j} {v:.17e}");
        }
        s
    }

    /// Reads the sparse format written by [`SdpaProblem::to_text`].
    pub fn parse(text: &str) -> Result<SdpaProblem> {
        let mut offset = 0.0;
        let mut lines = Vec::new();
        for l in text.lines() {
            let t = l.trim();
            if let Some(rest) = t.strip_prefix("* objective offset") {
                offset = rest.trim().parse().map_err(|_| Error::Parse(format!("bad offset line `{t}`")))?;
            } else if !t.is_empty() && !t.starts_with('*') && !t.starts_with('"') {
                lines.push(t);
            }
        }
        let bad = |what: &str| Error::Parse(format!("SDPA: {what}"));
        let nums = |l: &str| -> Result<Vec<f64>> {
            l.split(|c: char| c.is_whitespace() || c == ',' || c == '{' || c == '}' || c == '(' || c == ')')
                .filter(|t| !t.is_empty())
                .map(|t| t.parse::<f64>().map_err(|_| bad(&format!("number `{t}`"))))
                .collect()
        };
        let mut it = lines.into_iter();
        let num_vars =
            *nums(it.next().ok_or_else(|| bad("missing size"))?)?.first().ok_or_else(|| bad("size"))? as usize;
        let nblocks =
            *nums(it.next().ok_or_else(|| bad("missing block count"))?)?.first().ok_or_else(|| bad("blocks"))? as usize;
        let block_struct: Vec<i64> =
            nums(it.next().ok_or_else(|| bad("missing block structure"))?)?.into_iter().map(|v| v as i64).collect();
        if block_struct.len() != nblocks {
            return Err(bad("block structure length"));
        }
        let objective = nums(it.next().ok_or_else(|| bad("missing objective"))?)?;
        if objective.len() != num_vars {
            return Err(bad("objective length"));
        }
        let mut entries = Vec::new();
        for l in it {
            let v = nums(l)?;
            if v.len() != 5 {
                return Err(bad(&format!("entry line `{l}`")));
            }
            entries.push((v[0] as usize, v[1] as usize, v[2] as usize, v[3] as usize, v[4]));
        }
        Ok(SdpaProblem { num_vars, block_struct, objective, offset, entries })
    }

    /// Conic problem over the real blocks, with the diagonal blocks as rows;
    /// single-variable rows become the box.
    pub fn to_conic(&self) -> Result<ConicProblem> {
        let n = self.num_vars;
        let mut blocks: Vec<Option<PsdBlock>> = Vec::new();
        let mut lp_rows: Vec<Vec<LinearRow>> = Vec::new();
        for (k, &b) in self.block_struct.iter().enumerate() {
            if b > 0 {
                blocks.push(Some(PsdBlock {
                    dim: b as usize,
                    label: format!("blk{}", k + 1),
                    constant: vec![],
                    terms: vec![],
                }));
                lp_rows.push(Vec::new());
            } else {
                blocks.push(None);
                lp_rows.push(
                    (0..(-b) as usize)
                        .map(|s| LinearRow {
                            coeffs: vec![],
                            lo: 0.0,
                            hi: f64::INFINITY,
                            label: format!("blk{}[{}]", k + 1, s + 1),
                        })
                        .collect(),
                );
            }
        }
        for &(m, b, i, j, v) in &self.entries {
            if b == 0 || b > blocks.len() || m > n || i == 0 || j == 0 {
                return Err(Error::Parse(format!("SDPA entry ({m}, {b}, {i}, {j}) out of range")));
            }
            let (i, j) = (i - 1, j - 1);
            match &mut blocks[b - 1] {
                Some(blk) => {
                    if i >= blk.dim || j >= blk.dim {
                        return Err(Error::Parse("SDPA entry outside its block".into()));
                    }
                    let mut e = vec![(i, j, Complex64::new(v, 0.0))];
                    if i != j {
                        e.push((j, i, Complex64::new(v, 0.0)));
                    }
                    if m == 0 {
                        blk.constant.extend(e.into_iter().map(|(r, c, x)| (r, c, -x)));
                    } else {
                        match blk.terms.iter_mut().find(|t| t.0 == m - 1) {
                            Some(t) => t.1.extend(e),
                            None => blk.terms.push((m - 1, e)),
                        }
                    }
                }
                None => {
                    let row = lp_rows[b - 1].get_mut(i).ok_or_else(|| Error::Parse("LP slot out of range".into()))?;
                    if i != j {
                        return Err(Error::Parse("off-diagonal entry in a diagonal block".into()));
                    }
                    if m == 0 {
                        row.lo += v;
                    } else {
                        row.coeffs.push((m - 1, v));
                    }
                }
            }
        }
        let mut lower = vec![f64::NEG_INFINITY; n];
        let mut upper = vec![f64::INFINITY; n];
        let mut rows = Vec::new();
        for r in lp_rows.into_iter().flatten() {
            match r.coeffs.as_slice() {
                [] if r.lo <= 0.0 => {}
                &[(i, a)] if a != 0.0 => {
                    if a > 0.0 {
                        lower[i] = lower[i].max(r.lo / a);
                    } else {
                        upper[i] = upper[i].min(r.lo / a);
                    }
                }
                _ => rows.push(r),
            }
        }
        Ok(ConicProblem {
            num_vars: n,
            var_moments: vec![None; n],
            conjugation_odd: Vec::new(),
            objective: self.objective.clone(),
            offset: self.offset,
            lower,
            upper,
            rows,
            blocks: blocks.into_iter().flatten().collect(),
            confidence: 1.0,
            lower_only: false,
        })
    }
}

pub fn write_sdpa(p: &ConicProblem, path: &Path) -> Result<()> {
    let text = export_sdpa(p)?.to_text();
    let mut f = std::fs::File::create(path)?;
    f.write_all(text.as_bytes())?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn box_only() -> ConicProblem {
        ConicProblem {
            num_vars: 1,
            var_moments: vec![None],
            conjugation_odd: Vec::new(),
            objective: vec![1.0],
            offset: 0.0,
            lower: vec![-1.0],
            upper: vec![1.0],
            rows: vec![],
            blocks: vec![],
            confidence: 1.0,
            lower_only: false,
        }
    }

    #[test]
    fn box_is_two_slot_lp_block() {
        let s = export_sdpa(&box_only()).unwrap();
        assert_eq!(s.block_struct, vec![-2]);
        assert_eq!(s.entries, vec![(0, 1, 1, 1, -1.0), (0, 1, 2, 2, -1.0), (1, 1, 1, 1, 1.0), (1, 1, 2, 2, -1.0)]);
    }

    #[test]
    fn text_round_trip() {
        let s = export_sdpa(&box_only()).unwrap();
        assert_eq!(SdpaProblem::parse(&s.to_text()).unwrap(), s);
    }
}
