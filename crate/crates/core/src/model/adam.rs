use super::{EmbeddingState, Matrix};
use crate::error::{Error, Result};

pub const ADAM_BETA1: f64 = 0.9;
pub const ADAM_BETA2: f64 = 0.999;
pub const ADAM_EPSILON: f64 = 1e-8;

/// Gradient rows for a subset of a parameter matrix.
///
/// Rows are created on first access and keep insertion order. Rows that are
/// never touched are absent, and the optimizer leaves them (and their
/// moments) alone.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseRows {
    width: usize,
    slot: Vec<usize>,
    rows: Vec<usize>,
    data: Vec<f64>,
}

impl SparseRows {
    pub fn new(total_rows: usize, width: usize) -> Self {
        Self {
            width,
            slot: vec![usize::MAX; total_rows],
            rows: Vec::new(),
            data: Vec::new(),
        }
    }

    /// Every row of `m` present.
    pub fn dense(m: &Matrix) -> Self {
        let mut s = Self::new(m.rows(), m.cols());
        for i in 0..m.rows() {
            s.row_mut(i).copy_from_slice(m.row(i));
        }
        s
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn total_rows(&self) -> usize {
        self.slot.len()
    }

    pub fn row_mut(&mut self, row: usize) -> &mut [f64] {
        let mut s = self.slot[row];
        if s == usize::MAX {
            s = self.rows.len();
            self.slot[row] = s;
            self.rows.push(row);
            self.data.resize(self.data.len() + self.width, 0.0);
        }
        &mut self.data[s * self.width..(s + 1) * self.width]
    }

    pub fn get(&self, row: usize) -> Option<&[f64]> {
        match self.slot.get(row) {
            Some(&s) if s != usize::MAX => Some(&self.data[s * self.width..(s + 1) * self.width]),
            _ => None,
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, &[f64])> {
        self.rows.iter().copied().zip(self.data.chunks_exact(self.width.max(1)))
    }

    pub fn active_rows(&self) -> &[usize] {
        &self.rows
    }

    pub fn clear(&mut self) {
        for &r in &self.rows {
            self.slot[r] = usize::MAX;
        }
        self.rows.clear();
        self.data.clear();
    }

    pub fn to_dense(&self) -> Matrix {
        let mut m = Matrix::zeros(self.total_rows(), self.width);
        for (r, g) in self.iter() {
            m.row_mut(r).copy_from_slice(g);
        }
        m
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }
}

fn check(grads: &SparseRows, params: &Matrix, what: &str) -> Result<()> {
    if grads.width() != params.cols() || grads.total_rows() != params.rows() {
        return Err(Error::ShapeMismatch(format!(
            "{what} gradient is {}x{}, parameters are {}x{}",
            grads.total_rows(),
            grads.width(),
            params.rows(),
            params.cols()
        )));
    }
    Ok(())
}

/// Applies Adam with the bias corrections folded into the step size and
/// epsilon, which is algebraically the same update.
fn apply_rows(
    params: &mut Matrix,
    moments: &mut (Matrix, Matrix),
    grads: &SparseRows,
    step_size: f64,
    bias1: f64,
    bias2: f64,
) {
    let (first, second) = moments;
    let root2 = bias2.sqrt();
    let step = step_size * root2 / bias1;
    let eps = ADAM_EPSILON * root2;
    for (r, g) in grads.iter() {
        let p = params.row_mut(r);
        let m = first.row_mut(r);
        let v = second.row_mut(r);
        for i in 0..g.len() {
            m[i] = ADAM_BETA1 * m[i] + (1.0 - ADAM_BETA1) * g[i];
            v[i] = ADAM_BETA2 * v[i] + (1.0 - ADAM_BETA2) * g[i] * g[i];
            p[i] -= step * m[i] / (v[i].sqrt() + eps);
        }
    }
}

/// One bias-corrected Adam step with step size `alpha` over the rows present
/// in each gradient. Advances the shared step counter.
pub fn adam_update(
    state: &mut EmbeddingState,
    embedding_grads: &SparseRows,
    center_grads: &SparseRows,
    alpha: f64,
) -> Result<()> {
    check(embedding_grads, &state.embeddings, "embedding")?;
    check(center_grads, &state.centers, "center")?;
    state.step += 1;
    let t = state.step as i32;
    let bias1 = 1.0 - ADAM_BETA1.powi(t);
    let bias2 = 1.0 - ADAM_BETA2.powi(t);
    apply_rows(
        &mut state.embeddings,
        &mut state.embedding_moments,
        embedding_grads,
        alpha,
        bias1,
        bias2,
    );
    apply_rows(
        &mut state.centers,
        &mut state.center_moments,
        center_grads,
        alpha,
        bias1,
        bias2,
    );
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn state(rows: &[Vec<f64>]) -> EmbeddingState {
        let f = Matrix::from_rows(rows).unwrap();
        let mu = Matrix::zeros(1, f.cols());
        EmbeddingState::from_parameters(f, mu).unwrap()
    }

    fn step(s: &mut EmbeddingState, grads: &SparseRows, alpha: f64) -> Result<()> {
        let centers = SparseRows::new(s.cluster_count(), s.dims());
        adam_update(s, grads, &centers, alpha)
    }

    #[test]
    fn zero_gradient_keeps_parameters_and_decays_moments() {
        let mut s = state(&[vec![1.0, -2.0]]);
        let g = SparseRows::dense(&Matrix::from_rows(&[vec![0.5, -0.5]]).unwrap());
        step(&mut s, &g, 0.1).unwrap();
        let before = s.embeddings.clone();
        let m_before = s.embedding_moments.0.row(0).to_vec();
        let zero = SparseRows::dense(&Matrix::zeros(1, 2));
        // first moment decays, but its bias-corrected value still moves the
        // parameter; with fresh moments a zero gradient is a no-op
        let mut fresh = state(&[vec![1.0, -2.0]]);
        let fresh_before = fresh.embeddings.clone();
        step(&mut fresh, &zero, 0.1).unwrap();
        assert_eq!(fresh.embeddings, fresh_before);
        assert_eq!(fresh.step, 1);

        step(&mut s, &zero, 0.1).unwrap();
        let m_after = s.embedding_moments.0.row(0);
        for (a, b) in m_after.iter().zip(&m_before) {
            assert!((a - ADAM_BETA1 * b).abs() < 1e-15);
        }
        assert_ne!(s.embeddings, before);
    }

    #[test]
    fn first_step_is_normalized_gradient() {
        let mut s = state(&[vec![0.0, 0.0, 0.0]]);
        let g = [3.0, -1e-3, 0.0];
        let grads = SparseRows::dense(&Matrix::from_rows(&[g.to_vec()]).unwrap());
        let alpha = 0.01;
        step(&mut s, &grads, alpha).unwrap();
        for (p, gi) in s.embeddings.row(0).iter().zip(g) {
            let expected = -alpha * gi / (gi.abs() + ADAM_EPSILON);
            assert!((p - expected).abs() < 1e-15, "{p} vs {expected}");
        }
    }

    #[test]
    fn constant_gradient_step_tends_to_alpha() {
        let mut s = state(&[vec![0.0, 0.0]]);
        let grads = SparseRows::dense(&Matrix::from_rows(&[vec![0.7, -4.0]]).unwrap());
        let alpha = 1e-3;
        let mut last = s.embeddings.row(0).to_vec();
        for _ in 0..5000 {
            step(&mut s, &grads, alpha).unwrap();
            let now = s.embeddings.row(0).to_vec();
            let step: Vec<f64> = now.iter().zip(&last).map(|(a, b)| a - b).collect();
            last = now;
            if s.step > 4000 {
                assert!((step[0] + alpha).abs() < 1e-9);
                assert!((step[1] - alpha).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn absent_rows_are_untouched() {
        let mut s = state(&[vec![1.0], vec![2.0]]);
        let mut g = SparseRows::new(2, 1);
        g.row_mut(1)[0] = 1.0;
        step(&mut s, &g, 0.5).unwrap();
        assert_eq!(s.embeddings.row(0), &[1.0]);
        assert!(s.embeddings.row(1)[0] < 2.0);
        assert_eq!(s.embedding_moments.0.row(0), &[0.0]);
    }

    #[test]
    fn shape_mismatch_is_rejected() {
        let mut s = state(&[vec![1.0, 2.0]]);
        let wrong = SparseRows::new(1, 3);
        assert!(step(&mut s, &wrong, 0.1).is_err());
        let wrong_rows = SparseRows::new(2, 2);
        assert!(step(&mut s, &wrong_rows, 0.1).is_err());
    }

    #[test]
    fn sparse_rows_clear_and_reuse() {
        let mut g = SparseRows::new(4, 2);
        g.row_mut(3)[1] = 1.0;
        g.row_mut(0)[0] = 2.0;
        g.row_mut(3)[1] += 1.0;
        assert_eq!(g.active_rows(), &[3, 0]);
        assert_eq!(g.get(3), Some(&[0.0, 2.0][..]));
        g.clear();
        assert!(g.get(3).is_none());
        assert!(g.active_rows().is_empty());
    }
}
