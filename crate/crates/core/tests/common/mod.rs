//! Dense linear algebra on `Vec<Vec<f64>>`, kept apart from the kernel so
//! oracle tests do not share code paths with what they check.
#![allow(dead_code)]

/// Gauss-Jordan inverse with partial pivoting, independent of the kernel's
/// Cholesky path.
pub fn gj_inverse(a: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let k = a.len();
    let mut m: Vec<Vec<f64>> = a
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            r.extend((0..k).map(|j| (i == j) as u8 as f64));
            r
        })
        .collect();
    for col in 0..k {
        let piv = (col..k).max_by(|&x, &y| m[x][col].abs().total_cmp(&m[y][col].abs())).unwrap();
        m.swap(col, piv);
        let p = m[col][col];
        for v in m[col].iter_mut() {
            *v /= p;
        }
        for r in 0..k {
            if r != col {
                let f = m[r][col];
                let pivot_row = m[col].clone();
                for (v, pv) in m[r].iter_mut().zip(pivot_row) {
                    *v -= f * pv;
                }
            }
        }
    }
    m.into_iter().map(|r| r[k..].to_vec()).collect()
}

pub fn gram(rows: &[Vec<f64>], w: &[f64]) -> Vec<Vec<f64>> {
    let k = rows[0].len();
    let mut g = vec![vec![0.0; k]; k];
    for (r, wi) in rows.iter().zip(w) {
        for a in 0..k {
            for b in 0..k {
                g[a][b] += wi * r[a] * r[b];
            }
        }
    }
    g
}

pub fn mat_vec(m: &[Vec<f64>], v: &[f64]) -> Vec<f64> {
    m.iter().map(|r| r.iter().zip(v).map(|(a, b)| a * b).sum()).collect()
}

pub fn xty(rows: &[Vec<f64>], y: &[f64], w: &[f64]) -> Vec<f64> {
    let k = rows[0].len();
    let mut out = vec![0.0; k];
    for ((r, yi), wi) in rows.iter().zip(y).zip(w) {
        for a in 0..k {
            out[a] += wi * r[a] * yi;
        }
    }
    out
}
