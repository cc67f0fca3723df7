//! Explicit basis inversion.
//!
//! The basis matrix mixes slack columns (unit vectors) and structural
//! columns. Slack columns are eliminated symbolically so only the square
//! block of structural columns restricted to uncovered rows is inverted
//! densely.

const PIVOT_TOL: f64 = 1e-11;

/// Structural basis positions that turned out to be linearly dependent,
/// together with rows no pivot was found for.
#[derive(Debug, Clone)]
pub(crate) struct Singular {
    pub positions: Vec<usize>,
    pub free_rows: Vec<usize>,
}

/// Writes `B⁻¹` (row-major, `m × m`) into `out`.
///
/// `head[p]` is the variable at basis position `p`; indices `>= n` are the
/// slack of row `head[p] - n` with coefficient `+1`.
pub(crate) fn invert(
    m: usize,
    n: usize,
    cols: &[Vec<(usize, f64)>],
    head: &[usize],
    out: &mut Vec<f64>,
) -> Result<(), Singular> {
    let mut slack_pos_of_row = vec![usize::MAX; m];
    let mut struct_pos = Vec::new();
    for (p, &var) in head.iter().enumerate() {
        if var >= n {
            slack_pos_of_row[var - n] = p;
        } else {
            struct_pos.push(p);
        }
    }
    let uncovered: Vec<usize> = (0..m).filter(|&i| slack_pos_of_row[i] == usize::MAX).collect();
    let t = struct_pos.len();
    debug_assert_eq!(t, uncovered.len());

    let mut local_row = vec![usize::MAX; m];
    for (a, &i) in uncovered.iter().enumerate() {
        local_row[i] = a;
    }

    // T1[a][b] = A[uncovered[a], head[struct_pos[b]]]
    let mut mat = vec![0.0; t * t];
    for (b, &p) in struct_pos.iter().enumerate() {
        for &(i, v) in &cols[head[p]] {
            let a = local_row[i];
            if a != usize::MAX {
                mat[a * t + b] = v;
            }
        }
    }
    let mut inv = vec![0.0; t * t];
    for a in 0..t {
        inv[a * t + a] = 1.0;
    }
    // row_origin[k] = which local row currently sits at slot k
    let mut row_origin: Vec<usize> = (0..t).collect();
    let mut dependent = Vec::new();
    let mut k = 0;
    let mut pivot_slot_of_col = vec![usize::MAX; t];
    for b in 0..t {
        let mut best = k;
        let mut best_val = 0.0;
        for a in k..t {
            let v = mat[a * t + b].abs();
            if v > best_val {
                best_val = v;
                best = a;
            }
        }
        if best_val <= PIVOT_TOL {
            dependent.push(struct_pos[b]);
            continue;
        }
        if best != k {
            for c in 0..t {
                mat.swap(best * t + c, k * t + c);
                inv.swap(best * t + c, k * t + c);
            }
            row_origin.swap(best, k);
        }
        let piv = mat[k * t + b];
        let scale = 1.0 / piv;
        for c in b..t {
            mat[k * t + c] *= scale;
        }
        for c in 0..t {
            inv[k * t + c] *= scale;
        }
        let pivot_mat: Vec<f64> = mat[k * t + b..k * t + t].to_vec();
        let pivot_inv: Vec<(usize, f64)> = (0..t)
            .filter_map(|c| {
                let v = inv[k * t + c];
                (v != 0.0).then_some((c, v))
            })
            .collect();
        for a in 0..t {
            if a == k {
                continue;
            }
            let f = mat[a * t + b];
            if f == 0.0 {
                continue;
            }
            let row = &mut mat[a * t + b..a * t + t];
            for (dst, src) in row.iter_mut().zip(&pivot_mat) {
                *dst -= f * src;
            }
            mat[a * t + b] = 0.0;
            for &(c, v) in &pivot_inv {
                inv[a * t + c] -= f * v;
            }
        }
        pivot_slot_of_col[b] = k;
        k += 1;
    }
    if !dependent.is_empty() {
        let free_rows = row_origin[k..].iter().map(|&a| uncovered[a]).collect();
        return Err(Singular { positions: dependent, free_rows });
    }

    // After elimination, slot pivot_slot_of_col[b] of `inv` holds the row of
    // T1⁻¹ that yields x_T[b].
    out.clear();
    out.resize(m * m, 0.0);
    for (b, &p) in struct_pos.iter().enumerate() {
        let slot = pivot_slot_of_col[b];
        let dst = &mut out[p * m..(p + 1) * m];
        for (a, &i) in uncovered.iter().enumerate() {
            dst[i] = inv[slot * t + a];
        }
    }
    for i in 0..m {
        let p = slack_pos_of_row[i];
        if p != usize::MAX {
            out[p * m + i] = 1.0;
        }
    }
    // slack rows: x_p = y_s − Σ_b A[s, col_b] x_T[b]
    for (b, &pb) in struct_pos.iter().enumerate() {
        let _ = b;
        for &(s, v) in &cols[head[pb]] {
            let p = slack_pos_of_row[s];
            if p == usize::MAX {
                continue;
            }
            for &i in &uncovered {
                let coef = out[pb * m + i];
                if coef != 0.0 {
                    out[p * m + i] -= v * coef;
                }
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dense_basis(m: usize, n: usize, cols: &[Vec<(usize, f64)>], head: &[usize]) -> Vec<f64> {
        let mut b = vec![0.0; m * m];
        for (p, &var) in head.iter().enumerate() {
            if var >= n {
                b[(var - n) * m + p] = 1.0;
            } else {
                for &(i, v) in &cols[var] {
                    b[i * m + p] = v;
                }
            }
        }
        b
    }

    #[test]
    fn inverse_times_basis_is_identity() {
        let m = 4;
        let n = 3;
        let cols = vec![
            vec![(0, 2.0), (1, 1.0), (3, -1.0)],
            vec![(1, 3.0), (2, 1.0)],
            vec![(0, 1.0), (2, -2.0), (3, 4.0)],
        ];
        let head = vec![2, n + 1, 0, 1];
        let mut inv = Vec::new();
        invert(m, n, &cols, &head, &mut inv).unwrap();
        let b = dense_basis(m, n, &cols, &head);
        for i in 0..m {
            for j in 0..m {
                let v: f64 = (0..m).map(|k| inv[i * m + k] * b[k * m + j]).sum();
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((v - want).abs() < 1e-12, "({i},{j}) = {v}");
            }
        }
    }

    #[test]
    fn dependent_columns_reported() {
        let m = 2;
        let n = 2;
        let cols = vec![vec![(0, 1.0), (1, 1.0)], vec![(0, 2.0), (1, 2.0)]];
        let err = invert(m, n, &cols, &[0, 1], &mut Vec::new()).unwrap_err();
        assert_eq!(err.positions, vec![1]);
        assert_eq!(err.free_rows.len(), 1);
    }
}
