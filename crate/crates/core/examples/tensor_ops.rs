// Unfolding, mode-n products and Tucker reconstruction on small dense
// tensors.
//
// ```text
// cargo run --example tensor_ops
// ```

use cat_core::tensor::{fold, kronecker, matricize, mode_n_matrix_product, mode_n_vector_product, tucker_reconstruct};
use cat_core::{CatError, DenseTensor, Matrix};

pub fn run_example() -> cat_core::Result<()> {
    // X[i, j, k] = 100 i + 10 j + k, shape 2 x 3 x 4
    let mut x = DenseTensor::zeros(vec![2, 3, 4]);
    for i in 0..2 {
        for j in 0..3 {
            for k in 0..4 {
                x.set(&[i, j, k], (100 * i + 10 * j + k) as f64);
            }
        }
    }
    let x1 = matricize(&x, 1)?;
    println!("mode-1 unfolding is {}x{}; first row {:?}", x1.rows(), x1.cols(), x1.row(0));
    assert_eq!(fold(&x1, 1, x.shape())?, x);

    // contracting with a vector drops the mode
    let summed = mode_n_vector_product(&x, &[1.0, 1.0, 1.0, 1.0], 2)?;
    println!("sum over the last mode: shape {:?}, data {:?}", summed.shape(), summed.data());

    // Tucker form: G x_0 A x_1 B x_2 C, unfolded along mode 0, equals
    // A G_(0) (C kron B)^T
    let core = DenseTensor::new(vec![2, 2, 2], (1..=8).map(f64::from).collect())?;
    let a = Matrix::from_rows(&[vec![1.0, 0.5], vec![-1.0, 2.0], vec![0.0, 1.0]])?;
    let b = Matrix::from_rows(&[vec![0.3, -0.2], vec![1.0, 1.0]])?;
    let c = Matrix::from_rows(&[vec![2.0, 0.0], vec![0.5, -1.0], vec![1.0, 1.0], vec![0.0, 3.0]])?;
    let full = tucker_reconstruct(&core, &[a.clone(), b.clone(), c.clone()])?;
    let direct = a.matmul(&matricize(&core, 0)?)?.matmul(&kronecker(&c, &b).transpose())?;
    let unfolded = matricize(&full, 0)?;
    let err = unfolded
        .as_slice()
        .iter()
        .zip(direct.as_slice())
        .map(|(p, q)| (p - q).abs())
        .fold(0.0, f64::max);
    println!("Tucker tensor shape {:?}, unfolding identity error {err:.1e}", full.shape());
    if err > 1e-12 {
        return Err(CatError::OracleFailure(format!("unfolding identity off by {err}")));
    }

    // one mode at a time gives the same tensor
    let stepwise = mode_n_matrix_product(&mode_n_matrix_product(&mode_n_matrix_product(&core, &a, 0)?, &b, 1)?, &c, 2)?;
    assert_eq!(stepwise.shape(), full.shape());
    Ok(())
}

#[allow(dead_code)]
fn main() -> cat_core::Result<()> {
    run_example()
}
