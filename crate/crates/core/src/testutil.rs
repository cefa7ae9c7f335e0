use crate::linalg::ImageMatrix;
use crate::synth;

pub fn random_matrix(rows: usize, cols: usize, seed: u64) -> ImageMatrix {
    synth::uniform_matrix(rows, cols, seed)
}

/// Central-difference gradient of `f` at `x`, one entry at a time.
pub fn central_difference(x: &ImageMatrix, h: f64, f: impl Fn(&ImageMatrix) -> f64) -> ImageMatrix {
    let mut grad = ImageMatrix::zeros(x.rows(), x.cols());
    let mut probe = x.clone();
    for i in 0..x.rows() {
        for j in 0..x.cols() {
            let v = x.get(i, j);
            probe.set(i, j, v + h);
            let up = f(&probe);
            probe.set(i, j, v - h);
            let down = f(&probe);
            probe.set(i, j, v);
            grad.set(i, j, (up - down) / (2.0 * h));
        }
    }
    grad
}
